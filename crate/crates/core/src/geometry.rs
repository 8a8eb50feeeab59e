//! Block-space distances, coverage matrix and light simulation.
//!
//! A floor tile at elevation `z` owns the column of empty blocks `k >= z`;
//! everything below it, and every block of a wall column or outside the
//! grid, is solid. Distances are breadth-first path lengths through
//! face-adjacent empty blocks, measured between the floor-surface blocks
//! `(row, col, z)` of two tiles.

use alloc::collections::{BTreeMap, VecDeque};
use alloc::vec;
use alloc::vec::Vec;

use crate::heightmap::{Heightmap, TileIndex};
use crate::{Error, Result};

const UNSEEN: u32 = u32::MAX;

/// Light emitted by a torch and the minimum level every tile must reach.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LightParams {
    pub l_torch: u32,
    pub l_min: u32,
}

impl Default for LightParams {
    fn default() -> Self {
        Self { l_torch: 14, l_min: 8 }
    }
}

impl LightParams {
    pub fn new(l_torch: u32, l_min: u32) -> Result<Self> {
        if l_min == 0 || l_min > l_torch {
            return Err(Error::InvalidParameter("light levels need 0 < l_min <= l_torch"));
        }
        Ok(Self { l_torch, l_min })
    }

    /// Largest distance at which a torch still lights a tile to `l_min`.
    pub fn radius(&self) -> u32 {
        self.l_torch - self.l_min
    }
}

/// Whether block `(row, col, k)` is empty. Out-of-grid blocks are solid.
pub fn block_empty(map: &Heightmap, row: i64, col: i64, k: i64) -> bool {
    if row < 0 || col < 0 || row as usize >= map.height() || col as usize >= map.width() {
        return false;
    }
    match map.elevation(row as usize, col as usize) {
        Some(z) => k >= z as i64,
        None => false,
    }
}

/// Capped single-source distances to every floor tile.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistanceField {
    source: usize,
    cap: u32,
    dist: Vec<Option<u32>>,
}

impl DistanceField {
    pub fn source(&self) -> usize {
        self.source
    }

    pub fn cap(&self) -> u32 {
        self.cap
    }

    /// `None` when the tile is unreachable within the cap.
    pub fn get(&self, tile: usize) -> Option<u32> {
        self.dist[tile]
    }

    pub fn as_slice(&self) -> &[Option<u32>] {
        &self.dist
    }
}

/// The finite slab of block space that can hold a shortest path.
///
/// Any path rising above the highest floor can be flattened onto that level
/// without getting longer, so one spare layer above it is enough.
struct BlockSpace {
    width: usize,
    height: usize,
    layers: usize,
    floor: Vec<Option<u32>>,
}

impl BlockSpace {
    fn new(map: &Heightmap) -> Self {
        Self {
            width: map.width(),
            height: map.height(),
            layers: map.max_elevation() as usize + 2,
            floor: map.tiles().iter().map(|t| t.elevation()).collect(),
        }
    }

    fn len(&self) -> usize {
        self.width * self.height * self.layers
    }

    fn id(&self, row: usize, col: usize, k: usize) -> usize {
        (k * self.height + row) * self.width + col
    }

    fn is_empty(&self, row: usize, col: usize, k: usize) -> bool {
        matches!(self.floor[row * self.width + col], Some(z) if k >= z as usize)
    }

    fn for_each_empty_neighbor(&self, id: usize, mut f: impl FnMut(usize)) {
        let col = id % self.width;
        let row = (id / self.width) % self.height;
        let k = id / (self.width * self.height);
        if col > 0 && self.is_empty(row, col - 1, k) {
            f(id - 1);
        }
        if col + 1 < self.width && self.is_empty(row, col + 1, k) {
            f(id + 1);
        }
        if row > 0 && self.is_empty(row - 1, col, k) {
            f(id - self.width);
        }
        if row + 1 < self.height && self.is_empty(row + 1, col, k) {
            f(id + self.width);
        }
        let layer = self.width * self.height;
        if k > 0 && self.is_empty(row, col, k - 1) {
            f(id - layer);
        }
        if k + 1 < self.layers && self.is_empty(row, col, k + 1) {
            f(id + layer);
        }
    }

    /// Multi-source BFS that stops expanding past `cap`.
    fn bfs(&self, sources: &[usize], cap: u32, dist: &mut Vec<u32>, queue: &mut VecDeque<usize>) {
        dist.clear();
        dist.resize(self.len(), UNSEEN);
        queue.clear();
        for &s in sources {
            if dist[s] == UNSEEN {
                dist[s] = 0;
                queue.push_back(s);
            }
        }
        while let Some(id) = queue.pop_front() {
            let d = dist[id];
            if d >= cap {
                continue;
            }
            self.for_each_empty_neighbor(id, |nb| {
                if dist[nb] == UNSEEN {
                    dist[nb] = d + 1;
                    queue.push_back(nb);
                }
            });
        }
    }
}

/// Per-map memo of distance fields keyed by `(source, cap)`.
///
/// Owned by one solve; not shared across threads.
pub struct DistanceCache<'a> {
    map: &'a Heightmap,
    index: TileIndex,
    space: BlockSpace,
    surface: Vec<usize>,
    fields: BTreeMap<(usize, u32), DistanceField>,
    scratch: Vec<u32>,
    queue: VecDeque<usize>,
}

impl<'a> DistanceCache<'a> {
    pub fn new(map: &'a Heightmap) -> Self {
        let index = map.tile_index();
        let space = BlockSpace::new(map);
        let surface = index
            .positions()
            .iter()
            .map(|&(r, c)| space.id(r, c, map.elevation(r, c).unwrap_or(0) as usize))
            .collect();
        Self {
            map,
            index,
            space,
            surface,
            fields: BTreeMap::new(),
            scratch: Vec::new(),
            queue: VecDeque::new(),
        }
    }

    pub fn map(&self) -> &Heightmap {
        self.map
    }

    pub fn index(&self) -> &TileIndex {
        &self.index
    }

    pub fn field(&mut self, source: usize, cap: u32) -> &DistanceField {
        if !self.fields.contains_key(&(source, cap)) {
            let field = self.compute(&[source], cap);
            let field = DistanceField { source, ..field };
            self.fields.insert((source, cap), field);
        }
        &self.fields[&(source, cap)]
    }

    /// Distance from the nearest of `sources`, not memoized.
    pub fn nearest(&mut self, sources: &[usize], cap: u32) -> Vec<Option<u32>> {
        self.compute(sources, cap).dist
    }

    fn compute(&mut self, sources: &[usize], cap: u32) -> DistanceField {
        let ids: Vec<usize> = sources.iter().map(|&s| self.surface[s]).collect();
        self.space.bfs(&ids, cap, &mut self.scratch, &mut self.queue);
        let dist = self
            .surface
            .iter()
            .map(|&id| Some(self.scratch[id]).filter(|&d| d != UNSEEN && d <= cap))
            .collect();
        DistanceField { source: sources.first().copied().unwrap_or(0), cap, dist }
    }
}

/// Distances from the floor tile at `(row, col)`; larger than `cap` reports
/// as unreachable.
pub fn distance_field(map: &Heightmap, source: (usize, usize), cap: u32) -> Result<DistanceField> {
    let (row, col) = source;
    if row >= map.height() || col >= map.width() {
        return Err(Error::InvalidParameter("source outside the grid"));
    }
    let mut cache = DistanceCache::new(map);
    let Some(i) = cache.index().index_of(row, col) else {
        return Err(Error::WallSource { row, col });
    };
    Ok(cache.field(i, cap).clone())
}

/// Binary matrix `D` with `D[i][j] = 1` iff tile `j` lies within the torch
/// radius of tile `i`. Stored as sorted row supports.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverageMatrix {
    rows: Vec<Vec<usize>>,
}

impl CoverageMatrix {
    /// Validates symmetry and the unit diagonal.
    pub fn from_rows(mut rows: Vec<Vec<usize>>) -> Result<Self> {
        let n = rows.len();
        for row in rows.iter_mut() {
            row.sort_unstable();
            row.dedup();
            if row.last().is_some_and(|&j| j >= n) {
                return Err(Error::InvalidParameter("coverage entry out of range"));
            }
        }
        let m = Self { rows };
        for i in 0..n {
            if !m.get(i, i) {
                return Err(Error::InvalidParameter("coverage matrix needs a unit diagonal"));
            }
            if m.rows[i].iter().any(|&j| !m.get(j, i)) {
                return Err(Error::InvalidParameter("coverage matrix must be symmetric"));
            }
        }
        Ok(m)
    }

    pub fn from_dense(dense: &[Vec<bool>]) -> Result<Self> {
        let rows = dense
            .iter()
            .map(|r| r.iter().enumerate().filter(|(_, &b)| b).map(|(j, _)| j).collect())
            .collect();
        Self::from_rows(rows)
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, i: usize) -> &[usize] {
        &self.rows[i]
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.rows[i].binary_search(&j).is_ok()
    }

    pub fn row_sum(&self, i: usize) -> usize {
        self.rows[i].len()
    }

    pub fn to_dense(&self) -> Vec<Vec<bool>> {
        (0..self.n()).map(|i| (0..self.n()).map(|j| self.get(i, j)).collect()).collect()
    }

    /// `Dx`. Panics if `x` has the wrong length.
    pub fn mul(&self, x: &[bool]) -> Vec<u32> {
        assert_eq!(x.len(), self.n());
        self.rows.iter().map(|row| row.iter().filter(|&&j| x[j]).count() as u32).collect()
    }

    /// `D^T v`, which equals `D v` since `D` is symmetric.
    pub fn mul_f64(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.n());
        self.rows.iter().map(|row| row.iter().map(|&j| v[j]).sum()).collect()
    }

    /// Number of rows with `(Dx)_i < 1`.
    pub fn violations(&self, x: &[bool]) -> usize {
        self.rows.iter().filter(|row| !row.iter().any(|&j| x[j])).count()
    }

    pub fn is_cover(&self, x: &[bool]) -> bool {
        self.violations(x) == 0
    }
}

pub fn coverage_matrix(map: &Heightmap, params: LightParams) -> CoverageMatrix {
    let mut cache = DistanceCache::new(map);
    coverage_matrix_with(&mut cache, params)
}

pub fn coverage_matrix_with(cache: &mut DistanceCache<'_>, params: LightParams) -> CoverageMatrix {
    let radius = params.radius();
    let n = cache.index().len();
    let rows = (0..n)
        .map(|i| {
            let field = cache.field(i, radius);
            (0..n).filter(|&j| field.get(j).is_some()).collect()
        })
        .collect();
    CoverageMatrix { rows }
}

/// A torch selection with the light it produces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TorchLayout {
    pub selection: Vec<bool>,
    pub light: Vec<u32>,
    pub violations: usize,
}

impl TorchLayout {
    pub fn torch_count(&self) -> usize {
        self.selection.iter().filter(|&&b| b).count()
    }

    pub fn is_feasible(&self) -> bool {
        self.violations == 0
    }
}

/// Simulates the light of the torches in `x` by a multi-source search
/// capped at `l_torch`.
pub fn light_levels(map: &Heightmap, x: &[bool], params: LightParams) -> Result<TorchLayout> {
    let mut cache = DistanceCache::new(map);
    light_levels_with(&mut cache, x, params)
}

pub fn light_levels_with(
    cache: &mut DistanceCache<'_>,
    x: &[bool],
    params: LightParams,
) -> Result<TorchLayout> {
    let n = cache.index().len();
    if x.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: x.len() });
    }
    let torches: Vec<usize> = (0..n).filter(|&i| x[i]).collect();
    let light = if torches.is_empty() {
        vec![0; n]
    } else {
        cache
            .nearest(&torches, params.l_torch)
            .into_iter()
            .map(|d| d.map_or(0, |d| params.l_torch.saturating_sub(d)))
            .collect()
    };
    let violations = light.iter().filter(|&&l| l < params.l_min).count();
    Ok(TorchLayout { selection: x.to_vec(), light, violations })
}
