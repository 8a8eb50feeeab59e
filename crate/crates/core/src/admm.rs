//! ADMM driver for `min 1'x  s.t.  Dx - 1 - z = 0`, `z >= 0` integer.
//!
//! Each iteration solves one QUBO for `x`, sets `z` in closed form, takes a
//! multiplier step on `lambda` and adapts the penalty `mu` by residual
//! balancing. The loop always runs the full budget unless early exit is
//! requested.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write;

use crate::qubo::{build_admm_step_qubo, LinearConstraintSystem};
use crate::rng::derive_seed;
use crate::solvers::{solve_from, SolverConfig, SolverKind};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmmConfig {
    pub mu0: f64,
    pub rho: f64,
    /// Number of QUBO solves.
    pub budget: usize,
    /// Weight of the step penalty on negative `z`. The closed-form z-update
    /// never produces negative entries, so it has no effect on the iterates.
    pub gamma: f64,
    pub solver: SolverConfig,
    /// Stop once three consecutive iterates are feasible with equal torch
    /// counts.
    pub early_exit: bool,
    /// Seed local searches with the previous `x`.
    pub warm_start: bool,
}

impl Default for AdmmConfig {
    fn default() -> Self {
        Self {
            mu0: 0.01,
            rho: 1.1,
            budget: 30,
            gamma: 1.0,
            solver: SolverConfig::new(SolverKind::TabuSa, 0),
            early_exit: false,
            warm_start: true,
        }
    }
}

impl AdmmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.mu0 > 0.0 && self.mu0.is_finite()) {
            return Err(Error::InvalidParameter("mu0 must be positive"));
        }
        if !(self.rho >= 1.0 && self.rho.is_finite()) {
            return Err(Error::InvalidParameter("rho must be at least 1"));
        }
        if self.budget == 0 {
            return Err(Error::InvalidParameter("budget must be at least 1"));
        }
        if self.gamma.is_nan() || self.gamma < 0.0 {
            return Err(Error::InvalidParameter("gamma must be non-negative"));
        }
        self.solver.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmmState {
    pub x: Vec<bool>,
    pub z: Vec<i64>,
    pub lambda: Vec<f64>,
    pub mu: f64,
    pub iteration: usize,
}

impl AdmmState {
    pub fn initial(n: usize, mu0: f64) -> Self {
        Self { x: vec![false; n], z: vec![0; n], lambda: vec![0.0; n], mu: mu0, iteration: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    /// 1-based.
    pub iteration: usize,
    pub torches: usize,
    pub violations: usize,
    /// `||Dx - 1 - z||` after the z-update.
    pub primal_residual: f64,
    /// Penalty used for this iteration's x-update.
    pub mu: f64,
    /// Energy of the x-update QUBO at the chosen `x`.
    pub energy: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct IterationTrace {
    records: Vec<IterationRecord>,
}

impl IterationTrace {
    pub const CSV_HEADER: &'static str = "iteration,torches,violations,primal_residual,mu,energy";

    pub fn records(&self) -> &[IterationRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&IterationRecord> {
        self.records.last()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.iteration, r.torches, r.violations, r.primal_residual, r.mu, r.energy
            );
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmmOutcome {
    pub state: AdmmState,
    pub trace: IterationTrace,
    /// Fewest-torch feasible iterate, earliest on ties.
    pub best_feasible: Option<Vec<bool>>,
}

impl AdmmOutcome {
    /// Best feasible iterate if any, else the last one.
    pub fn answer(&self) -> &[bool] {
        self.best_feasible.as_deref().unwrap_or(&self.state.x)
    }
}

fn check(c: &LinearConstraintSystem, len: usize) -> Result<()> {
    if len != c.n() {
        return Err(Error::DimensionMismatch { expected: c.n(), got: len });
    }
    Ok(())
}

fn norm(v: impl Iterator<Item = f64>) -> f64 {
    libm::sqrt(v.map(|a| a * a).sum())
}

/// `c(x, z) = Dx - 1 - z`.
pub fn residual(c: &LinearConstraintSystem, x: &[bool], z: &[i64]) -> Result<Vec<i64>> {
    check(c, x.len())?;
    check(c, z.len())?;
    Ok(c.matrix().mul(x).iter().zip(z).map(|(&dx, &zi)| i64::from(dx) - 1 - zi).collect())
}

/// `z = max(0, Dx - 1)` element-wise.
pub fn update_z(c: &LinearConstraintSystem, x: &[bool]) -> Result<Vec<i64>> {
    check(c, x.len())?;
    Ok(c.matrix().mul(x).iter().map(|&dx| (i64::from(dx) - 1).max(0)).collect())
}

/// `lambda + mu c(x, z)` for the state's current `x` and `z`.
pub fn update_multipliers(state: &AdmmState, c: &LinearConstraintSystem) -> Result<Vec<f64>> {
    check(c, state.lambda.len())?;
    let r = residual(c, &state.x, &state.z)?;
    Ok(state.lambda.iter().zip(&r).map(|(&l, &ri)| l + state.mu * ri as f64).collect())
}

/// Residual balancing: grow `mu` when the primal residual dominates the
/// dual-like one tenfold, shrink it in the opposite case.
pub fn update_mu(mu: f64, rho: f64, primal: f64, dual_like: f64) -> f64 {
    if primal > 10.0 * mu * dual_like {
        rho * mu
    } else if dual_like > 10.0 * mu * primal {
        mu / rho
    } else {
        mu
    }
}

/// `1'x + gamma #{z_i < 0} + lambda'c + (mu/2)||c||^2`.
pub fn augmented_lagrangian(
    c: &LinearConstraintSystem,
    x: &[bool],
    z: &[i64],
    lambda: &[f64],
    mu: f64,
    gamma: f64,
) -> Result<f64> {
    check(c, lambda.len())?;
    let r = residual(c, x, z)?;
    let torches = x.iter().filter(|&&b| b).count() as f64;
    let negative = z.iter().filter(|&&zi| zi < 0).count() as f64;
    let linear: f64 = lambda.iter().zip(&r).map(|(&l, &ri)| l * ri as f64).sum();
    let square: f64 = r.iter().map(|&ri| (ri * ri) as f64).sum();
    Ok(torches + gamma * negative + linear + 0.5 * mu * square)
}

pub fn run_admm(c: &LinearConstraintSystem, cfg: &AdmmConfig) -> Result<AdmmOutcome> {
    cfg.validate()?;
    let n = c.n();
    let d = c.matrix();
    let mut state = AdmmState::initial(n, cfg.mu0);
    let mut trace = IterationTrace::default();
    let mut best_feasible: Option<Vec<bool>> = None;
    let mut stable = 0;
    // The penalty update compares the residual of the iterate entering a
    // step with the change that step made to Dz.
    let mut entering_primal = norm(residual(c, &state.x, &state.z)?.iter().map(|&ri| ri as f64));

    for k in 1..=cfg.budget {
        let q = build_admm_step_qubo(c, &state.z, &state.lambda, state.mu)?;
        let solver = cfg.solver.with_seed(derive_seed(cfg.solver.seed, k as u64));
        let warm = cfg.warm_start.then_some(state.x.as_slice());
        let result = solve_from(&q, &solver, warm)?;

        let previous_torches = state.x.iter().filter(|&&b| b).count();
        state.x = result.x;
        let z_next = update_z(c, &state.x)?;
        let dz: Vec<f64> = state.z.iter().zip(&z_next).map(|(&a, &b)| (a - b) as f64).collect();
        let dual_like = norm(d.mul_f64(&dz).into_iter());
        state.z = z_next;

        let r = residual(c, &state.x, &state.z)?;
        let primal = norm(r.iter().map(|&ri| ri as f64));
        state.lambda = update_multipliers(&state, c)?;
        let mu_used = state.mu;
        state.mu = update_mu(state.mu, cfg.rho, entering_primal, dual_like);
        entering_primal = primal;
        state.iteration = k;

        let torches = state.x.iter().filter(|&&b| b).count();
        let violations = d.violations(&state.x);
        trace.records.push(IterationRecord {
            iteration: k,
            torches,
            violations,
            primal_residual: primal,
            mu: mu_used,
            energy: result.energy,
        });

        if violations == 0 {
            if best_feasible.as_ref().is_none_or(|b| torches < b.iter().filter(|&&v| v).count()) {
                best_feasible = Some(state.x.clone());
            }
            stable = if torches == previous_torches { stable + 1 } else { 1 };
        } else {
            stable = 0;
        }
        if cfg.early_exit && stable >= 3 {
            break;
        }
    }
    Ok(AdmmOutcome { state, trace, best_feasible })
}
