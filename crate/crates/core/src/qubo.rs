//! QUBO instances and the constraint embeddings that produce them.
//!
//! All builders drop additive constants: two assignments compare the same
//! under the QUBO energy as under the function it encodes.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write;

use crate::geometry::{CoverageMatrix, DistanceCache, LightParams};
use crate::heightmap::Heightmap;
use crate::{Error, Result};

/// Upper-triangular QUBO matrix. The diagonal is kept dense, couplings
/// `Q_ij` (`i < j`) sparse per row.
#[derive(Debug, Clone, PartialEq)]
pub struct QuboInstance {
    diag: Vec<f64>,
    upper: Vec<Vec<(usize, f64)>>,
}

impl QuboInstance {
    pub fn zeros(n: usize) -> Self {
        Self { diag: vec![0.0; n], upper: vec![Vec::new(); n] }
    }

    /// Sums duplicate entries; an entry below the diagonal is folded onto
    /// its mirror since `x_i x_j = x_j x_i`.
    pub fn from_entries(n: usize, entries: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        let mut diag = vec![0.0; n];
        let mut rows: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); n];
        for (i, j, v) in entries {
            if i >= n || j >= n {
                return Err(Error::DimensionMismatch { expected: n, got: i.max(j) + 1 });
            }
            if !v.is_finite() {
                return Err(Error::InvalidParameter("QUBO entries must be finite"));
            }
            let (i, j) = if i <= j { (i, j) } else { (j, i) };
            if i == j {
                diag[i] += v;
            } else {
                *rows[i].entry(j).or_insert(0.0) += v;
            }
        }
        let upper = rows
            .into_iter()
            .map(|row| row.into_iter().filter(|&(_, v)| v != 0.0).collect())
            .collect();
        Ok(Self { diag, upper })
    }

    pub fn from_dense(q: &[Vec<f64>]) -> Result<Self> {
        let n = q.len();
        let mut entries = Vec::new();
        for (i, row) in q.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: row.len() });
            }
            for (j, &v) in row.iter().enumerate().skip(i) {
                if v != 0.0 {
                    entries.push((i, j, v));
                }
            }
            if row[..i].iter().any(|&v| v != 0.0) {
                return Err(Error::InvalidParameter("QUBO matrix must be upper triangular"));
            }
        }
        Self::from_entries(n, entries)
    }

    pub fn n(&self) -> usize {
        self.diag.len()
    }

    /// `Q_ij`; zero below the diagonal.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            self.diag[i]
        } else if i < j {
            match self.upper[i].binary_search_by_key(&j, |&(k, _)| k) {
                Ok(p) => self.upper[i][p].1,
                Err(_) => 0.0,
            }
        } else {
            0.0
        }
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diag
    }

    /// Couplings `(j, Q_ij)` with `j > i`, sorted by `j`.
    pub fn couplings(&self, i: usize) -> &[(usize, f64)] {
        &self.upper[i]
    }

    /// Non-zero entries `(i, j, Q_ij)` with `i <= j`, row-major.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n()).flat_map(move |i| {
            let d = (self.diag[i] != 0.0).then_some((i, i, self.diag[i]));
            d.into_iter().chain(self.upper[i].iter().map(move |&(j, v)| (i, j, v)))
        })
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.n();
        let mut q = vec![vec![0.0; n]; n];
        for (i, j, v) in self.entries() {
            q[i][j] = v;
        }
        q
    }

    /// Symmetric adjacency: for every variable, all `(j, Q)` it couples to.
    pub(crate) fn adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.n()];
        for (i, row) in self.upper.iter().enumerate() {
            for &(j, v) in row {
                adj[i].push((j, v));
                adj[j].push((i, v));
            }
        }
        adj
    }

    /// Largest absolute entry, used for tie tolerances.
    pub fn scale(&self) -> f64 {
        self.entries().fold(0.0, |m, (_, _, v)| m.max(v.abs()))
    }

    /// Plain-text export: `n` on the first line, then `i j value` per
    /// non-zero entry with zero-based indices.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{}", self.n());
        for (i, j, v) in self.entries() {
            let _ = writeln!(out, "{i} {j} {v}");
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let bad = |line: usize, token: &str| Error::BadToken { line: line + 1, token: token.into() };
        let (l0, first) = lines.next().ok_or(Error::EmptyInstance)?;
        let n: usize = first.trim().parse().map_err(|_| bad(l0, first))?;
        let mut entries = Vec::new();
        for (ln, line) in lines {
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 3 {
                return Err(Error::RaggedRow { line: ln + 1, expected: 3, found: parts.len() });
            }
            let i = parts[0].parse().map_err(|_| bad(ln, parts[0]))?;
            let j = parts[1].parse().map_err(|_| bad(ln, parts[1]))?;
            let v = parts[2].parse().map_err(|_| bad(ln, parts[2]))?;
            entries.push((i, j, v));
        }
        Self::from_entries(n, entries)
    }
}

/// `f_Q(x) = sum_{i <= j} Q_ij x_i x_j`.
pub fn energy(q: &QuboInstance, x: &[bool]) -> Result<f64> {
    if x.len() != q.n() {
        return Err(Error::DimensionMismatch { expected: q.n(), got: x.len() });
    }
    Ok(energy_unchecked(q, x))
}

pub(crate) fn energy_unchecked(q: &QuboInstance, x: &[bool]) -> f64 {
    let mut e = 0.0;
    for i in 0..q.n() {
        if !x[i] {
            continue;
        }
        e += q.diag[i];
        for &(j, v) in &q.upper[i] {
            if x[j] {
                e += v;
            }
        }
    }
    e
}

/// The covering constraints `Dx >= 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearConstraintSystem {
    d: CoverageMatrix,
}

impl LinearConstraintSystem {
    pub fn new(d: CoverageMatrix) -> Self {
        Self { d }
    }

    pub fn matrix(&self) -> &CoverageMatrix {
        &self.d
    }

    pub fn n(&self) -> usize {
        self.d.n()
    }

    fn check(&self, len: usize) -> Result<()> {
        if len != self.n() {
            return Err(Error::DimensionMismatch { expected: self.n(), got: len });
        }
        Ok(())
    }

    /// Off-diagonal Gram entries `(D^T D)_ij` for `i < j`, by row.
    fn gram_upper(&self) -> Vec<Vec<(usize, u32)>> {
        let n = self.n();
        let mut counts = vec![0u32; n];
        let mut touched = Vec::new();
        (0..n)
            .map(|i| {
                for &r in self.d.row(i) {
                    for &j in self.d.row(r) {
                        if j > i {
                            if counts[j] == 0 {
                                touched.push(j);
                            }
                            counts[j] += 1;
                        }
                    }
                }
                touched.sort_unstable();
                let row = touched.iter().map(|&j| (j, counts[j])).collect();
                for &j in &touched {
                    counts[j] = 0;
                }
                touched.clear();
                row
            })
            .collect()
    }
}

/// QUBO of the ADMM x-update, `1'x + l'(Dx - 1 - z) + (mu/2)||Dx - 1 - z||^2`
/// up to a constant:
///
/// * `Q_ii = 1 + (D'l)_i - mu (D'(1 + z))_i + (mu/2)(D'D)_ii`
/// * `Q_ij = mu (D'D)_ij` for `i < j`
pub fn build_admm_step_qubo(
    c: &LinearConstraintSystem,
    z: &[i64],
    lambda: &[f64],
    mu: f64,
) -> Result<QuboInstance> {
    c.check(z.len())?;
    c.check(lambda.len())?;
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::InvalidParameter("mu must be positive"));
    }
    let d = c.matrix();
    let shifted: Vec<f64> = z.iter().map(|&zi| 1.0 + zi as f64).collect();
    let dt_lambda = d.mul_f64(lambda);
    let dt_shift = d.mul_f64(&shifted);
    let diag = (0..c.n())
        .map(|i| 1.0 + dt_lambda[i] - mu * dt_shift[i] + 0.5 * mu * d.row_sum(i) as f64)
        .collect();
    let upper = c
        .gram_upper()
        .into_iter()
        .map(|row| row.into_iter().map(|(j, g)| (j, mu * g as f64)).collect())
        .collect();
    Ok(QuboInstance { diag, upper })
}

/// Penalty QUBO with binary slack bits encoding the surplus `z = Dx - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SlackQubo {
    pub qubo: QuboInstance,
    /// Number of tile variables; they come first.
    pub n: usize,
    /// Slack bits per row, `ceil(log2(rowsum))`.
    pub widths: Vec<usize>,
    /// Index of each row's first slack bit.
    pub offsets: Vec<usize>,
    /// Constant dropped from the energy, `beta * n`.
    pub offset: f64,
}

impl SlackQubo {
    pub fn dim(&self) -> usize {
        self.qubo.n()
    }

    /// `1'x + beta ||Dx - 1 - Sr||^2` for a full assignment.
    pub fn objective(&self, y: &[bool]) -> Result<f64> {
        Ok(energy(&self.qubo, y)? + self.offset)
    }

    pub fn tile_part<'a>(&self, y: &'a [bool]) -> &'a [bool] {
        &y[..self.n]
    }

    /// Integer value of row `i`'s slack bits.
    pub fn slack_value(&self, y: &[bool], i: usize) -> u64 {
        (0..self.widths[i]).filter(|&b| y[self.offsets[i] + b]).map(|b| 1u64 << b).sum()
    }

    /// Assignment encoding `x` together with its surplus, if representable.
    pub fn encode(&self, x: &[bool], d: &CoverageMatrix) -> Option<Vec<bool>> {
        let mut y = x.to_vec();
        y.resize(self.dim(), false);
        for (i, &cov) in d.mul(x).iter().enumerate() {
            let surplus = u64::from(cov).checked_sub(1)?;
            if surplus >> self.widths[i] != 0 {
                return None;
            }
            for b in 0..self.widths[i] {
                y[self.offsets[i] + b] = surplus >> b & 1 == 1;
            }
        }
        Some(y)
    }
}

fn ceil_log2(v: usize) -> usize {
    if v <= 1 {
        0
    } else {
        (usize::BITS - (v - 1).leading_zeros()) as usize
    }
}

pub fn build_slack_qubo(c: &LinearConstraintSystem, beta: f64) -> Result<SlackQubo> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::InvalidParameter("beta must be positive"));
    }
    let d = c.matrix();
    let n = c.n();
    let widths: Vec<usize> = (0..n).map(|i| ceil_log2(d.row_sum(i))).collect();
    let mut offsets = Vec::with_capacity(n);
    let mut next = n;
    for &w in &widths {
        offsets.push(next);
        next += w;
    }
    let dim = next;

    let mut entries: Vec<(usize, usize, f64)> = (0..n).map(|i| (i, i, 1.0)).collect();
    for i in 0..n {
        // Row residual as a weighted sum of variables: +x_j, -2^b s_ib.
        let mut terms: Vec<(usize, f64)> = d.row(i).iter().map(|&j| (j, 1.0)).collect();
        terms.extend((0..widths[i]).map(|b| (offsets[i] + b, -((1u64 << b) as f64))));
        for (p, &(vp, wp)) in terms.iter().enumerate() {
            // (a - 1)^2 = a^2 - 2a + 1 with y^2 = y on binaries.
            entries.push((vp, vp, beta * (wp * wp - 2.0 * wp)));
            for &(vq, wq) in &terms[p + 1..] {
                entries.push((vp, vq, beta * 2.0 * wp * wq));
            }
        }
    }
    let qubo = QuboInstance::from_entries(dim, entries)?;
    Ok(SlackQubo { qubo, n, widths, offsets, offset: beta * n as f64 })
}

/// Linear constraint `x'u + v <= 0` from the log-sum-exp relaxation of the
/// nearest-torch distance.
#[derive(Debug, Clone, PartialEq)]
pub struct LseConstraint {
    pub u: Vec<f64>,
    pub v: f64,
}

impl LseConstraint {
    pub fn value(&self, x: &[bool]) -> f64 {
        self.u.iter().zip(x).filter(|(_, &b)| b).map(|(u, _)| u).sum::<f64>() + self.v
    }

    pub fn is_satisfied(&self, x: &[bool]) -> bool {
        self.value(x) <= 0.0
    }

    /// Ratio between the largest and smallest non-zero coefficient magnitude.
    pub fn dynamic_range(&self) -> f64 {
        let mags = self.u.iter().chain(core::iter::once(&self.v)).map(|c| c.abs()).filter(|&c| c > 0.0);
        let (lo, hi) = mags.fold((f64::INFINITY, 0.0f64), |(lo, hi), c| (lo.min(c), hi.max(c)));
        if hi == 0.0 {
            1.0
        } else {
            hi / lo
        }
    }
}

/// One log-sum-exp constraint per tile, with offset
/// `P_i = max(min_{j != i} d_ij, l_torch - l_min) + 1`:
///
/// * `u_j = exp(-a P_i) - exp(-a d_ij)`, zero weight for unreachable `j`
/// * `v_i = exp(a (l_min - l_torch)) - n exp(-a P_i)`
pub fn build_lse_constraints(map: &Heightmap, params: LightParams, alpha: f64) -> Result<Vec<LseConstraint>> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidParameter("alpha must be positive"));
    }
    let mut cache = DistanceCache::new(map);
    let n = cache.index().len();
    if n == 1 {
        return Ok(vec![LseConstraint { u: vec![-1.0], v: 1.0 }]);
    }
    let threshold = libm::exp(alpha * (params.l_min as f64 - params.l_torch as f64));
    let constraints = (0..n)
        .map(|i| {
            let field = cache.field(i, u32::MAX);
            let nearest = (0..n).filter(|&j| j != i).filter_map(|j| field.get(j)).min();
            let p = f64::from(nearest.unwrap_or(0).max(params.radius()) + 1);
            let base = libm::exp(-alpha * p);
            let u = (0..n)
                .map(|j| base - field.get(j).map_or(0.0, |d| libm::exp(-alpha * f64::from(d))))
                .collect();
            LseConstraint { u, v: threshold - n as f64 * base }
        })
        .collect();
    Ok(constraints)
}
