//! Set-cover view of torch placement with greedy and exact solvers.

use alloc::vec;
use alloc::vec::Vec;

use crate::geometry::CoverageMatrix;
use crate::{Error, Result, MAX_EXHAUSTIVE_VARS};

/// Universe `0..n` and one subset per candidate torch tile.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SetCoverInstance {
    universe: usize,
    subsets: Vec<Vec<usize>>,
}

impl SetCoverInstance {
    /// Subset `i` must contain `i`; members are sorted and deduplicated.
    pub fn new(universe: usize, mut subsets: Vec<Vec<usize>>) -> Result<Self> {
        if subsets.len() != universe {
            return Err(Error::DimensionMismatch { expected: universe, got: subsets.len() });
        }
        for (i, s) in subsets.iter_mut().enumerate() {
            s.sort_unstable();
            s.dedup();
            if s.last().is_some_and(|&e| e >= universe) {
                return Err(Error::InvalidParameter("subset member outside the universe"));
            }
            if s.binary_search(&i).is_err() {
                return Err(Error::InvalidParameter("subset must cover its own tile"));
            }
        }
        Ok(Self { universe, subsets })
    }

    pub fn universe_size(&self) -> usize {
        self.universe
    }

    pub fn subset(&self, i: usize) -> &[usize] {
        &self.subsets[i]
    }

    pub fn subsets(&self) -> &[Vec<usize>] {
        &self.subsets
    }

    /// Every element lies in some chosen subset.
    pub fn is_cover(&self, chosen: &[usize]) -> bool {
        let mut covered = vec![false; self.universe];
        for &c in chosen {
            for &e in &self.subsets[c] {
                covered[e] = true;
            }
        }
        covered.into_iter().all(|c| c)
    }
}

/// `B_i = {j : D_ij = 1}` over universe `0..n`.
pub fn to_setcover(d: &CoverageMatrix) -> SetCoverInstance {
    SetCoverInstance { universe: d.n(), subsets: (0..d.n()).map(|i| d.row(i).to_vec()).collect() }
}

/// Largest-gain greedy, lowest index on ties. Returns sorted indices.
pub fn greedy_cover(inst: &SetCoverInstance) -> Vec<usize> {
    let mut covered = vec![false; inst.universe];
    let mut remaining = inst.universe;
    let mut chosen = Vec::new();
    while remaining > 0 {
        let mut pick = None;
        let mut pick_gain = 0;
        for (i, s) in inst.subsets.iter().enumerate() {
            let gain = s.iter().filter(|&&e| !covered[e]).count();
            if gain > pick_gain {
                pick = Some(i);
                pick_gain = gain;
            }
        }
        let i = pick.expect("every element lies in its own subset");
        for &e in &inst.subsets[i] {
            if !covered[e] {
                covered[e] = true;
                remaining -= 1;
            }
        }
        chosen.push(i);
    }
    chosen.sort_unstable();
    chosen
}

/// Exact minimum cover by include-first branch and bound over indices in
/// increasing order. Covers are visited in lexicographic order of their
/// sorted index lists and only strictly smaller ones replace the incumbent,
/// so the lexicographically smallest minimum cover is returned.
pub fn exhaustive_min_cover(inst: &SetCoverInstance) -> Result<Vec<usize>> {
    let n = inst.universe;
    if n > MAX_EXHAUSTIVE_VARS {
        return Err(Error::Capacity { n, limit: MAX_EXHAUSTIVE_VARS });
    }
    // Elements sorted into the subsets that cover them; D is symmetric for
    // torch instances but a general instance need not be.
    let mut covering = vec![Vec::new(); n];
    for (i, s) in inst.subsets.iter().enumerate() {
        for &e in s {
            covering[e].push(i);
        }
    }
    let last_cover: Vec<usize> = covering.iter().map(|c| *c.last().expect("self-coverage")).collect();

    let mut search = Search {
        inst,
        last_cover,
        count: vec![0; n],
        uncovered: n,
        chosen: Vec::new(),
        best: None,
        best_size: greedy_cover(inst).len() + 1,
    };
    search.branch(0);
    Ok(search.best.expect("the greedy bound admits a cover"))
}

struct Search<'a> {
    inst: &'a SetCoverInstance,
    /// Highest subset index covering each element.
    last_cover: Vec<usize>,
    count: Vec<u32>,
    uncovered: usize,
    chosen: Vec<usize>,
    best: Option<Vec<usize>>,
    best_size: usize,
}

impl Search<'_> {
    fn lower_bound(&self, next: usize) -> usize {
        if self.uncovered == 0 {
            return 0;
        }
        let widest = self.inst.subsets[next..].iter().map(|s| s.len()).max().unwrap_or(0);
        if widest == 0 {
            usize::MAX
        } else {
            self.uncovered.div_ceil(widest)
        }
    }

    fn take(&mut self, i: usize) {
        for &e in &self.inst.subsets[i] {
            if self.count[e] == 0 {
                self.uncovered -= 1;
            }
            self.count[e] += 1;
        }
        self.chosen.push(i);
    }

    fn undo(&mut self, i: usize) {
        for &e in &self.inst.subsets[i] {
            self.count[e] -= 1;
            if self.count[e] == 0 {
                self.uncovered += 1;
            }
        }
        self.chosen.pop();
    }

    fn branch(&mut self, next: usize) {
        if self.uncovered == 0 {
            if self.chosen.len() < self.best_size {
                self.best_size = self.chosen.len();
                self.best = Some(self.chosen.clone());
            }
            return;
        }
        let n = self.inst.universe;
        if next >= n || self.chosen.len().saturating_add(self.lower_bound(next)) >= self.best_size {
            return;
        }
        // An uncovered element whose last covering subset is behind us is lost.
        if (0..n).any(|e| self.count[e] == 0 && self.last_cover[e] < next) {
            return;
        }
        self.take(next);
        self.branch(next + 1);
        self.undo(next);
        // Skipping `next` is only possible if nothing depends on it alone.
        if (0..n).all(|e| self.count[e] > 0 || self.last_cover[e] > next) {
            self.branch(next + 1);
        }
    }
}
