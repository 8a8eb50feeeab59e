//! Heightmap instances: text format, tile ordering and Perlin generation.
//!
//! The text format is one line per grid row with whitespace-separated
//! tokens. A non-negative integer is a floor elevation, `#` is a wall.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use alloc::collections::BinaryHeap;
use core::cmp::Ordering;
use core::fmt;
use core::str::FromStr;

use rand::seq::SliceRandom;

use crate::rng;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Tile {
    Floor(u32),
    /// Solid column, elevation is infinite.
    Wall,
}

impl Tile {
    pub fn elevation(self) -> Option<u32> {
        match self {
            Tile::Floor(z) => Some(z),
            Tile::Wall => None,
        }
    }

    pub fn is_wall(self) -> bool {
        matches!(self, Tile::Wall)
    }
}

/// Rectangular grid of tiles stored row-major. Always holds at least one
/// floor tile.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Heightmap {
    width: usize,
    height: usize,
    tiles: Vec<Tile>,
}

impl Heightmap {
    pub fn new(width: usize, height: usize, tiles: Vec<Tile>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidDimensions { width, height });
        }
        if tiles.len() != width * height {
            return Err(Error::DimensionMismatch { expected: width * height, got: tiles.len() });
        }
        if tiles.iter().all(|t| t.is_wall()) {
            return Err(Error::EmptyInstance);
        }
        Ok(Self { width, height, tiles })
    }

    /// Builds a map from rows of optional elevations, `None` being a wall.
    pub fn from_rows(rows: &[&[Option<u32>]]) -> Result<Self> {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.len());
        let mut tiles = Vec::with_capacity(width * height);
        for (line, row) in rows.iter().enumerate() {
            if row.len() != width {
                return Err(Error::RaggedRow { line: line + 1, expected: width, found: row.len() });
            }
            tiles.extend(row.iter().map(|z| z.map_or(Tile::Wall, Tile::Floor)));
        }
        Self::new(width, height, tiles)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn tiles(&self) -> &[Tile] {
        &self.tiles
    }

    /// Panics if `(row, col)` is outside the grid.
    pub fn tile(&self, row: usize, col: usize) -> Tile {
        assert!(row < self.height && col < self.width, "({row}, {col}) out of bounds");
        self.tiles[row * self.width + col]
    }

    pub fn elevation(&self, row: usize, col: usize) -> Option<u32> {
        self.tile(row, col).elevation()
    }

    pub fn max_elevation(&self) -> u32 {
        self.tiles.iter().filter_map(|t| t.elevation()).max().unwrap_or(0)
    }

    pub fn wall_count(&self) -> usize {
        self.tiles.iter().filter(|t| t.is_wall()).count()
    }

    pub fn floor_count(&self) -> usize {
        self.tiles.len() - self.wall_count()
    }

    pub fn tile_index(&self) -> TileIndex {
        TileIndex::new(self)
    }
}

impl fmt::Display for Heightmap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (r, row) in self.tiles.chunks(self.width).enumerate() {
            if r > 0 {
                f.write_str("\n")?;
            }
            for (c, tile) in row.iter().enumerate() {
                if c > 0 {
                    f.write_str(" ")?;
                }
                match tile {
                    Tile::Floor(z) => write!(f, "{z}")?,
                    Tile::Wall => f.write_str("#")?,
                }
            }
        }
        Ok(())
    }
}

impl FromStr for Heightmap {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_heightmap(s)
    }
}

/// Parses the whitespace-separated text format. Blank lines are skipped.
pub fn parse_heightmap(text: &str) -> Result<Heightmap> {
    let mut width = None;
    let mut height = 0;
    let mut tiles = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let start = tiles.len();
        for token in line.split_whitespace() {
            let tile = if token == "#" {
                Tile::Wall
            } else {
                token.parse::<u32>().map(Tile::Floor).map_err(|_| Error::BadToken {
                    line: lineno + 1,
                    token: token.to_string(),
                })?
            };
            tiles.push(tile);
        }
        let found = tiles.len() - start;
        if found == 0 {
            continue;
        }
        match width {
            None => width = Some(found),
            Some(expected) if expected != found => {
                return Err(Error::RaggedRow { line: lineno + 1, expected, found });
            }
            Some(_) => {}
        }
        height += 1;
    }
    let width = width.ok_or(Error::EmptyInstance)?;
    Heightmap::new(width, height, tiles)
}

pub fn serialize_heightmap(map: &Heightmap) -> String {
    map.to_string()
}

/// Fixed row-major enumeration of the floor tiles.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TileIndex {
    width: usize,
    order: Vec<(usize, usize)>,
    lookup: Vec<Option<usize>>,
}

impl TileIndex {
    pub fn new(map: &Heightmap) -> Self {
        let mut order = Vec::with_capacity(map.floor_count());
        let mut lookup = Vec::with_capacity(map.tiles.len());
        for (k, tile) in map.tiles.iter().enumerate() {
            if tile.is_wall() {
                lookup.push(None);
            } else {
                lookup.push(Some(order.len()));
                order.push((k / map.width, k % map.width));
            }
        }
        Self { width: map.width, order, lookup }
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn position(&self, i: usize) -> (usize, usize) {
        self.order[i]
    }

    pub fn positions(&self) -> &[(usize, usize)] {
        &self.order
    }

    /// Index of the tile at `(row, col)`, `None` for walls and out-of-grid
    /// positions.
    pub fn index_of(&self, row: usize, col: usize) -> Option<usize> {
        if col >= self.width {
            return None;
        }
        self.lookup.get(row * self.width + col).copied().flatten()
    }
}

pub fn tile_index(map: &Heightmap) -> TileIndex {
    TileIndex::new(map)
}

/// Parameters for [`generate_perlin_map`]-style generation.
#[derive(Debug, Clone, PartialEq)]
pub struct PerlinParams {
    pub width: usize,
    pub height: usize,
    pub seed: u64,
    /// Fraction of tiles kept as floor; the rest (highest noise) are walls.
    pub wall_threshold: f64,
    pub elevation_levels: u32,
    pub octaves: u32,
    /// Lattice spacing of the first octave, in tiles.
    pub cell_size: f64,
    /// Grow the floor as one 4-connected region in noise order instead of
    /// taking the lowest-noise tiles wherever they lie.
    pub connected: bool,
}

impl PerlinParams {
    pub const DEFAULT_WALL_THRESHOLD: f64 = 0.58;
    pub const DEFAULT_CELL_SIZE: f64 = 5.0;

    pub fn new(width: usize, height: usize, seed: u64) -> Self {
        Self {
            width,
            height,
            seed,
            wall_threshold: Self::DEFAULT_WALL_THRESHOLD,
            elevation_levels: 3,
            octaves: 1,
            cell_size: Self::DEFAULT_CELL_SIZE,
            connected: true,
        }
    }

    pub fn generate(&self) -> Result<Heightmap> {
        let (w, h) = (self.width, self.height);
        if w < 2 || h < 2 {
            return Err(Error::InvalidDimensions { width: w, height: h });
        }
        if !(self.wall_threshold > 0.0 && self.wall_threshold <= 1.0) {
            return Err(Error::InvalidParameter("wall threshold must lie in (0, 1]"));
        }
        if self.elevation_levels == 0 {
            return Err(Error::InvalidParameter("elevation levels must be at least 1"));
        }
        if self.octaves == 0 || self.cell_size.is_nan() || self.cell_size <= 0.0 {
            return Err(Error::InvalidParameter("octaves and cell size must be positive"));
        }

        let noise = GradientNoise::new(self.seed);
        let mut values = Vec::with_capacity(w * h);
        for row in 0..h {
            for col in 0..w {
                let mut amplitude = 1.0;
                let mut frequency = 1.0 / self.cell_size;
                let mut v = 0.0;
                for _ in 0..self.octaves {
                    v += amplitude
                        * noise.sample((col as f64 + 0.5) * frequency, (row as f64 + 0.5) * frequency);
                    amplitude *= 0.5;
                    frequency *= 2.0;
                }
                values.push(v);
            }
        }

        let total = w * h;
        let floors = (libm::round(self.wall_threshold * total as f64) as usize).clamp(1, total);
        let mut floor_tiles = if self.connected {
            grow_region(w, &values, floors)
        } else {
            let mut ranked: Vec<usize> = (0..total).collect();
            ranked.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
            ranked.truncate(floors);
            ranked
        };
        floor_tiles.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));

        let lo = values[floor_tiles[0]];
        let hi = values[floor_tiles[floors - 1]];
        let levels = self.elevation_levels;
        let mut tiles = alloc::vec![Tile::Wall; total];
        for &k in &floor_tiles {
            let z = if hi > lo {
                let band = libm::floor((values[k] - lo) / (hi - lo) * levels as f64) as u32;
                band.min(levels - 1)
            } else {
                0
            };
            tiles[k] = Tile::Floor(z);
        }
        Heightmap::new(w, h, tiles)
    }
}

/// Best-first flood from the lowest-noise tile: repeatedly claims the
/// lowest-noise 4-neighbour of the region until `count` tiles are taken.
fn grow_region(width: usize, values: &[f64], count: usize) -> Vec<usize> {
    struct Key(f64, usize);
    impl PartialEq for Key {
        fn eq(&self, o: &Self) -> bool {
            self.cmp(o) == Ordering::Equal
        }
    }
    impl Eq for Key {}
    impl PartialOrd for Key {
        fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
            Some(self.cmp(o))
        }
    }
    impl Ord for Key {
        // Reversed so the max-heap pops the lowest value, then lowest index.
        fn cmp(&self, o: &Self) -> Ordering {
            o.0.total_cmp(&self.0).then(o.1.cmp(&self.1))
        }
    }

    let total = values.len();
    let start = (0..total).min_by(|&a, &b| values[a].total_cmp(&values[b])).expect("non-empty grid");
    let mut queued = alloc::vec![false; total];
    let mut heap = BinaryHeap::new();
    let mut region = Vec::with_capacity(count);
    queued[start] = true;
    heap.push(Key(values[start], start));
    while let Some(Key(_, k)) = heap.pop() {
        region.push(k);
        if region.len() == count {
            break;
        }
        let (r, c) = (k / width, k % width);
        let mut neighbours = [None; 4];
        if c > 0 {
            neighbours[0] = Some(k - 1);
        }
        if c + 1 < width {
            neighbours[1] = Some(k + 1);
        }
        if r > 0 {
            neighbours[2] = Some(k - width);
        }
        if k + width < total {
            neighbours[3] = Some(k + width);
        }
        for nb in neighbours.into_iter().flatten() {
            if !queued[nb] {
                queued[nb] = true;
                heap.push(Key(values[nb], nb));
            }
        }
    }
    region
}

/// Single-octave Perlin map with the default lattice spacing.
pub fn generate_perlin_map(
    width: usize,
    height: usize,
    seed: u64,
    wall_threshold: f64,
    elevation_levels: u32,
) -> Result<Heightmap> {
    PerlinParams { wall_threshold, elevation_levels, ..PerlinParams::new(width, height, seed) }.generate()
}

/// Classic lattice gradient noise with a seeded permutation table.
struct GradientNoise {
    perm: [u8; 512],
}

const GRADIENTS: [(f64, f64); 8] = [
    (1.0, 1.0),
    (-1.0, 1.0),
    (1.0, -1.0),
    (-1.0, -1.0),
    (1.0, 0.0),
    (-1.0, 0.0),
    (0.0, 1.0),
    (0.0, -1.0),
];

impl GradientNoise {
    fn new(seed: u64) -> Self {
        let mut table: Vec<u8> = (0..=255u8).collect();
        table.shuffle(&mut rng::seeded(seed));
        let mut perm = [0u8; 512];
        for (k, slot) in perm.iter_mut().enumerate() {
            *slot = table[k & 255];
        }
        Self { perm }
    }

    fn gradient(&self, ix: i64, iy: i64, dx: f64, dy: f64) -> f64 {
        let hx = (ix & 255) as usize;
        let hy = (iy & 255) as usize;
        let h = self.perm[self.perm[hx] as usize + hy] as usize;
        let (gx, gy) = GRADIENTS[h & 7];
        gx * dx + gy * dy
    }

    fn sample(&self, x: f64, y: f64) -> f64 {
        let x0 = libm::floor(x);
        let y0 = libm::floor(y);
        let (fx, fy) = (x - x0, y - y0);
        let (ix, iy) = (x0 as i64, y0 as i64);
        let n00 = self.gradient(ix, iy, fx, fy);
        let n10 = self.gradient(ix + 1, iy, fx - 1.0, fy);
        let n01 = self.gradient(ix, iy + 1, fx, fy - 1.0);
        let n11 = self.gradient(ix + 1, iy + 1, fx - 1.0, fy - 1.0);
        let (u, v) = (smoothstep(fx), smoothstep(fy));
        let a = n00 + u * (n10 - n00);
        let b = n01 + u * (n11 - n01);
        a + v * (b - a)
    }
}

fn smoothstep(t: f64) -> f64 {
    t * t * (3.0 - 2.0 * t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    #[test]
    fn parses_uniform_floor() {
        let map = parse_heightmap("0 0\n0 0").unwrap();
        assert_eq!((map.width(), map.height()), (2, 2));
        assert!(map.tiles().iter().all(|t| *t == Tile::Floor(0)));
    }

    #[test]
    fn parses_wall_token() {
        let map = parse_heightmap("0 1 #\n0 0 0").unwrap();
        assert_eq!((map.width(), map.height()), (3, 2));
        assert_eq!(map.tile(0, 2), Tile::Wall);
        assert_eq!(map.tile(0, 1), Tile::Floor(1));
        assert_eq!(map.wall_count(), 1);
    }

    #[test]
    fn parse_errors() {
        assert_eq!(
            parse_heightmap("0 0\n0"),
            Err(Error::RaggedRow { line: 2, expected: 2, found: 1 })
        );
        assert!(matches!(parse_heightmap("0 x"), Err(Error::BadToken { line: 1, .. })));
        assert!(matches!(parse_heightmap("0 -1"), Err(Error::BadToken { .. })));
        assert_eq!(parse_heightmap("# #\n# #"), Err(Error::EmptyInstance));
        assert_eq!(parse_heightmap("  \n"), Err(Error::EmptyInstance));
    }

    #[test]
    fn serializes_small_maps() {
        let one = Heightmap::from_rows(&[&[Some(0)]]).unwrap();
        assert_eq!(serialize_heightmap(&one), "0");
        let two = Heightmap::from_rows(&[&[Some(0), None]]).unwrap();
        assert_eq!(serialize_heightmap(&two), "0 #");
    }

    #[test]
    fn tile_index_row_major() {
        let map = parse_heightmap("0 0\n0 0").unwrap();
        let idx = tile_index(&map);
        assert_eq!(idx.positions(), &[(0, 0), (0, 1), (1, 0), (1, 1)]);

        let map = parse_heightmap("0 #\n0 0").unwrap();
        let idx = tile_index(&map);
        assert_eq!(idx.len(), 3);
        assert_eq!(idx.positions(), &[(0, 0), (1, 0), (1, 1)]);
        assert_eq!(idx.index_of(0, 1), None);
        assert_eq!(idx.index_of(0, 2), None);
        assert_eq!(idx.index_of(1, 1), Some(2));
    }

    #[test]
    fn perlin_is_deterministic() {
        let a = generate_perlin_map(20, 15, 7, 0.6, 4).unwrap();
        let b = generate_perlin_map(20, 15, 7, 0.6, 4).unwrap();
        assert_eq!(a, b);
        let c = generate_perlin_map(20, 15, 8, 0.6, 4).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn perlin_threshold_one_has_no_walls() {
        let map = generate_perlin_map(12, 9, 3, 1.0, 3).unwrap();
        assert_eq!(map.wall_count(), 0);
        assert!(map.tiles().iter().all(|t| t.elevation().unwrap() < 3));
    }

    #[test]
    fn perlin_wall_fraction_tracks_threshold() {
        for threshold in [0.4, 0.58, 0.75] {
            for seed in 0..50 {
                let map = generate_perlin_map(20, 15, seed, threshold, 4).unwrap();
                let walls = map.wall_count() as f64 / 300.0;
                assert!((walls - (1.0 - threshold)).abs() <= 0.10, "seed {seed}: {walls}");
            }
        }
    }

    fn is_connected(map: &Heightmap) -> bool {
        let index = map.tile_index();
        let mut seen = vec![false; index.len()];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            let (r, c) = index.position(i);
            for (dr, dc) in [(0i64, 1i64), (0, -1), (1, 0), (-1, 0)] {
                let (nr, nc) = (r as i64 + dr, c as i64 + dc);
                if nr < 0 || nc < 0 {
                    continue;
                }
                if let Some(j) = index.index_of(nr as usize, nc as usize) {
                    if !seen[j] {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    #[test]
    fn perlin_floor_is_one_region_of_exact_size() {
        for seed in 0..20 {
            let map = generate_perlin_map(40, 30, seed, 0.58, 3).unwrap();
            assert_eq!(map.floor_count(), 696);
            assert!(is_connected(&map), "seed {seed}");
        }
    }

    #[test]
    fn perlin_quantile_mode_keeps_lowest_noise() {
        let p = PerlinParams { connected: false, ..PerlinParams::new(20, 15, 4) };
        let a = p.generate().unwrap();
        assert_eq!(a.floor_count(), 174);
        let b = PerlinParams::new(20, 15, 4).generate().unwrap();
        assert_eq!(b.floor_count(), 174);
    }

    #[test]
    fn perlin_uses_every_band_and_octaves() {
        let map = PerlinParams { octaves: 3, elevation_levels: 4, ..PerlinParams::new(30, 20, 11) }
            .generate()
            .unwrap();
        let mut seen = [false; 4];
        for z in map.tiles().iter().filter_map(|t| t.elevation()) {
            seen[z as usize] = true;
        }
        assert!(seen.iter().all(|s| *s));
    }

    #[test]
    fn perlin_rejects_bad_arguments() {
        assert!(matches!(generate_perlin_map(1, 5, 0, 0.5, 2), Err(Error::InvalidDimensions { .. })));
        assert!(generate_perlin_map(5, 5, 0, 0.0, 2).is_err());
        assert!(generate_perlin_map(5, 5, 0, 0.5, 0).is_err());
    }

    fn arb_map() -> impl Strategy<Value = Heightmap> {
        (1usize..9, 1usize..9)
            .prop_flat_map(|(w, h)| {
                proptest::collection::vec(prop_oneof![1 => Just(None), 3 => (0u32..20).prop_map(Some)], w * h)
                    .prop_map(move |cells| (w, h, cells))
            })
            .prop_filter_map("needs a floor tile", |(w, h, cells)| {
                let tiles = cells.into_iter().map(|z| z.map_or(Tile::Wall, Tile::Floor)).collect();
                Heightmap::new(w, h, tiles).ok()
            })
    }

    proptest! {
        #[test]
        fn text_round_trip(map in arb_map()) {
            let text = serialize_heightmap(&map);
            prop_assert_eq!(parse_heightmap(&text).unwrap(), map.clone());
            // Extra spacing is token-equivalent.
            let spaced = text.replace(' ', "   ").replace('\n', " \n\n");
            prop_assert_eq!(parse_heightmap(&spaced).unwrap(), map);
        }

        #[test]
        fn index_is_bijective(map in arb_map()) {
            let idx = tile_index(&map);
            prop_assert_eq!(idx.len(), map.width() * map.height() - map.wall_count());
            for i in 0..idx.len() {
                let (r, c) = idx.position(i);
                prop_assert!(!map.tile(r, c).is_wall());
                prop_assert_eq!(idx.index_of(r, c), Some(i));
            }
        }
    }
}
