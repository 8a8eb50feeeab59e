//! QUBO minimizers behind one entry point: simulated annealing, tabu search,
//! their best-of-two hybrid, and exhaustive enumeration.
//!
//! All local searches keep per-variable local fields so a flip is scored in
//! O(1) and applied in O(degree). Every returned energy is recomputed from
//! scratch.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::qubo::{energy_unchecked, QuboInstance};
use crate::rng::{derive_seed, seeded};
use crate::{Error, Result, MAX_EXHAUSTIVE_VARS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolverKind {
    SimulatedAnnealing,
    Tabu,
    TabuSa,
    Exhaustive,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaParams {
    pub sweeps: usize,
    pub beta_start: f64,
    pub beta_end: f64,
    pub restarts: usize,
}

impl Default for SaParams {
    fn default() -> Self {
        Self { sweeps: 1000, beta_start: 0.1, beta_end: 10.0, restarts: 10 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TabuParams {
    /// Moves per restart; `None` means `50 n`.
    pub max_iterations: Option<usize>,
    /// `None` means `min(20, n / 4)`, at least 1.
    pub tenure: Option<usize>,
    pub restarts: usize,
}

impl Default for TabuParams {
    fn default() -> Self {
        Self { max_iterations: None, tenure: None, restarts: 4 }
    }
}

impl TabuParams {
    fn iterations_for(&self, n: usize) -> usize {
        self.max_iterations.unwrap_or(50 * n)
    }

    fn tenure_for(&self, n: usize) -> usize {
        self.tenure.unwrap_or((n / 4).min(20)).max(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub kind: SolverKind,
    pub seed: u64,
    pub sa: SaParams,
    pub tabu: TabuParams,
}

impl SolverConfig {
    pub fn new(kind: SolverKind, seed: u64) -> Self {
        Self { kind, seed, sa: SaParams::default(), tabu: TabuParams::default() }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let sa = &self.sa;
        if sa.sweeps == 0 || sa.restarts == 0 {
            return Err(Error::InvalidParameter("annealing needs positive sweeps and restarts"));
        }
        if !(sa.beta_start > 0.0 && sa.beta_start < sa.beta_end && sa.beta_end.is_finite()) {
            return Err(Error::InvalidParameter("annealing needs 0 < beta_start < beta_end"));
        }
        let tabu = &self.tabu;
        if tabu.restarts == 0 || tabu.max_iterations == Some(0) || tabu.tenure == Some(0) {
            return Err(Error::InvalidParameter("tabu needs positive iterations, tenure and restarts"));
        }
        Ok(())
    }

    /// Seeds of the annealing and tabu halves of the hybrid.
    pub fn component_seeds(&self) -> (u64, u64) {
        (derive_seed(self.seed, 1), derive_seed(self.seed, 2))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub x: Vec<bool>,
    pub energy: f64,
    /// Single-flip evaluations performed.
    pub evaluations: u64,
}

pub fn solve(q: &QuboInstance, cfg: &SolverConfig) -> Result<SolveResult> {
    solve_from(q, cfg, None)
}

/// Like [`solve`]; local searches use `initial` as their first start.
pub fn solve_from(q: &QuboInstance, cfg: &SolverConfig, initial: Option<&[bool]>) -> Result<SolveResult> {
    cfg.validate()?;
    if let Some(x) = initial {
        if x.len() != q.n() {
            return Err(Error::DimensionMismatch { expected: q.n(), got: x.len() });
        }
    }
    match cfg.kind {
        SolverKind::SimulatedAnnealing => Ok(anneal(q, &cfg.sa, cfg.seed, initial)),
        SolverKind::Tabu => Ok(tabu_search(q, &cfg.tabu, cfg.seed, initial)),
        SolverKind::TabuSa => hybrid(q, cfg, initial),
        SolverKind::Exhaustive => exhaustive(q),
    }
}

/// Runs annealing and tabu on derived seeds and keeps the lower energy,
/// preferring annealing on ties.
pub fn solve_hybrid(q: &QuboInstance, cfg: &SolverConfig) -> Result<SolveResult> {
    if cfg.kind != SolverKind::TabuSa {
        return Err(Error::InvalidParameter("hybrid solve requires the TabuSa kind"));
    }
    solve_from(q, cfg, None)
}

fn hybrid(q: &QuboInstance, cfg: &SolverConfig, initial: Option<&[bool]>) -> Result<SolveResult> {
    let (sa_seed, tabu_seed) = cfg.component_seeds();
    let run_sa = || anneal(q, &cfg.sa, sa_seed, initial);
    let run_tabu = || tabu_search(q, &cfg.tabu, tabu_seed, initial);

    #[cfg(feature = "std")]
    let (sa, tabu) = std::thread::scope(|s| {
        let handle = s.spawn(run_tabu);
        let sa = run_sa();
        (sa, handle.join().expect("tabu worker panicked"))
    });
    #[cfg(not(feature = "std"))]
    let (sa, tabu) = (run_sa(), run_tabu());

    let evaluations = sa.evaluations + tabu.evaluations;
    let best = if tabu.energy < sa.energy { tabu } else { sa };
    Ok(SolveResult { evaluations, ..best })
}

/// Assignment plus local fields `h_i = sum_j Q_ij x_j` over both triangles.
struct FlipState<'a> {
    diag: &'a [f64],
    adj: &'a [Vec<(usize, f64)>],
    x: Vec<bool>,
    field: Vec<f64>,
    energy: f64,
}

impl<'a> FlipState<'a> {
    fn new(q: &'a QuboInstance, adj: &'a [Vec<(usize, f64)>], x: Vec<bool>) -> Self {
        let mut field = vec![0.0; x.len()];
        for (i, row) in adj.iter().enumerate() {
            field[i] = row.iter().filter(|(j, _)| x[*j]).map(|(_, v)| v).sum();
        }
        let energy = energy_unchecked(q, &x);
        Self { diag: q.diagonal(), adj, x, field, energy }
    }

    #[inline]
    fn delta(&self, i: usize) -> f64 {
        let gain = self.diag[i] + self.field[i];
        if self.x[i] {
            -gain
        } else {
            gain
        }
    }

    #[inline]
    fn flip(&mut self, i: usize) {
        self.energy += self.delta(i);
        self.x[i] = !self.x[i];
        let sign = if self.x[i] { 1.0 } else { -1.0 };
        for &(j, v) in &self.adj[i] {
            self.field[j] += sign * v;
        }
    }
}

fn random_bits(rng: &mut ChaCha8Rng, n: usize) -> Vec<bool> {
    (0..n).map(|_| rng.gen::<bool>()).collect()
}

fn tolerance(q: &QuboInstance) -> f64 {
    1e-9 * (1.0 + q.scale())
}

/// Keeps the lower-energy candidate; the earlier one wins ties.
fn keep_best(best: &mut Option<(Vec<bool>, f64)>, x: &[bool], e: f64, tol: f64) {
    if best.as_ref().is_none_or(|(_, b)| e < b - tol) {
        *best = Some((x.to_vec(), e));
    }
}

fn finish(q: &QuboInstance, best: Option<(Vec<bool>, f64)>, evaluations: u64) -> SolveResult {
    let x = best.map(|(x, _)| x).unwrap_or_default();
    let energy = energy_unchecked(q, &x);
    SolveResult { x, energy, evaluations }
}

/// Metropolis sweeps under a geometric inverse-temperature schedule, each
/// restart finished by a greedy descent to a local minimum.
fn anneal(q: &QuboInstance, p: &SaParams, seed: u64, initial: Option<&[bool]>) -> SolveResult {
    let n = q.n();
    let adj = q.adjacency();
    let tol = tolerance(q);
    let mut rng = seeded(seed);
    let mut best = None;
    let mut evaluations = 0u64;
    let ratio = p.beta_end / p.beta_start;

    for restart in 0..p.restarts {
        let start = match initial {
            Some(x) if restart == 0 => x.to_vec(),
            _ => random_bits(&mut rng, n),
        };
        let mut state = FlipState::new(q, &adj, start);
        let mut run_best = (state.x.clone(), state.energy);
        for sweep in 0..p.sweeps {
            let t = if p.sweeps > 1 { sweep as f64 / (p.sweeps - 1) as f64 } else { 1.0 };
            let beta = p.beta_start * libm::pow(ratio, t);
            for i in 0..n {
                let d = state.delta(i);
                if d <= 0.0 || rng.gen::<f64>() < libm::exp(-beta * d) {
                    state.flip(i);
                }
            }
            evaluations += n as u64;
            if state.energy < run_best.1 - tol {
                run_best = (state.x.clone(), state.energy);
            }
        }
        let mut state = FlipState::new(q, &adj, run_best.0);
        evaluations += descend(&mut state, tol);
        keep_best(&mut best, &state.x, state.energy, tol);
    }
    finish(q, best, evaluations)
}

/// Steepest single-flip descent; lowest index wins ties.
fn descend(state: &mut FlipState<'_>, tol: f64) -> u64 {
    let n = state.x.len();
    let mut evaluations = 0;
    loop {
        let mut pick: Option<(usize, f64)> = None;
        for i in 0..n {
            let d = state.delta(i);
            if d < -tol && pick.is_none_or(|(_, pd)| d < pd) {
                pick = Some((i, d));
            }
        }
        evaluations += n as u64;
        match pick {
            Some((i, _)) => state.flip(i),
            None => return evaluations,
        }
    }
}

/// Steepest-move tabu search with aspiration on a new best.
fn tabu_search(q: &QuboInstance, p: &TabuParams, seed: u64, initial: Option<&[bool]>) -> SolveResult {
    let n = q.n();
    let adj = q.adjacency();
    let tol = tolerance(q);
    let mut rng = seeded(seed);
    let iterations = p.iterations_for(n);
    let tenure = p.tenure_for(n);
    let mut best = None;
    let mut evaluations = 0u64;

    if n == 0 {
        return finish(q, Some((Vec::new(), 0.0)), 0);
    }
    for restart in 0..p.restarts {
        let start = match initial {
            Some(x) if restart == 0 => x.to_vec(),
            _ => random_bits(&mut rng, n),
        };
        let mut state = FlipState::new(q, &adj, start);
        let mut run_best = (state.x.clone(), state.energy);
        let mut tabu_until = vec![0usize; n];
        for iter in 1..=iterations {
            let mut allowed: Option<(usize, f64)> = None;
            let mut fallback: Option<(usize, f64)> = None;
            for (i, &until) in tabu_until.iter().enumerate() {
                let d = state.delta(i);
                let aspirates = state.energy + d < run_best.1 - tol;
                if (until < iter || aspirates) && allowed.is_none_or(|(_, a)| d < a) {
                    allowed = Some((i, d));
                }
                if fallback.is_none_or(|(_, f)| d < f) {
                    fallback = Some((i, d));
                }
            }
            evaluations += n as u64;
            let (i, _) = allowed.or(fallback).expect("n > 0");
            state.flip(i);
            tabu_until[i] = iter + tenure;
            if state.energy < run_best.1 - tol {
                run_best = (state.x.clone(), state.energy);
            }
        }
        keep_best(&mut best, &run_best.0, run_best.1, tol);
    }
    finish(q, best, evaluations)
}

/// Gray-code enumeration of all `2^n` assignments. Among minima within the
/// tie tolerance the lexicographically smallest `x` wins.
fn exhaustive(q: &QuboInstance) -> Result<SolveResult> {
    let n = q.n();
    if n > MAX_EXHAUSTIVE_VARS {
        return Err(Error::Capacity { n, limit: MAX_EXHAUSTIVE_VARS });
    }
    let adj = q.adjacency();
    let tol = tolerance(q);
    let mut state = FlipState::new(q, &adj, vec![false; n]);
    let mut best_x = state.x.clone();
    let mut best_e = 0.0;
    let total = 1u64 << n;
    for g in 1..total {
        state.flip(g.trailing_zeros() as usize);
        if g & 0xFFFF == 0 {
            // Resynchronize to keep incremental drift far below the tolerance.
            state.energy = energy_unchecked(q, &state.x);
        }
        let e = state.energy;
        if e < best_e - tol {
            best_x.copy_from_slice(&state.x);
            best_e = e;
        } else if e <= best_e + tol {
            let exact = energy_unchecked(q, &state.x);
            let incumbent = energy_unchecked(q, &best_x);
            if exact < incumbent || (exact == incumbent && state.x < best_x) {
                best_x.copy_from_slice(&state.x);
                best_e = exact;
            }
        }
    }
    let energy = energy_unchecked(q, &best_x);
    Ok(SolveResult { x: best_x, energy, evaluations: total })
}
