#![allow(dead_code)]

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use proptest::prelude::*;
use torchlight_core::{Heightmap, Tile};

/// Maps up to `max_w x max_h` with walls and elevations below `levels`.
pub fn arb_map(max_w: usize, max_h: usize, levels: u32) -> impl Strategy<Value = Heightmap> {
    (1..=max_w, 1..=max_h)
        .prop_flat_map(move |(w, h)| {
            let tile = prop_oneof![1 => Just(Tile::Wall), 3 => (0..levels).prop_map(Tile::Floor)];
            (Just(w), Just(h), proptest::collection::vec(tile, w * h))
        })
        .prop_filter_map("needs a floor tile", |(w, h, tiles)| Heightmap::new(w, h, tiles).ok())
}

/// Maps with at most `max_n` floor tiles.
pub fn arb_small_map(max_n: usize) -> impl Strategy<Value = Heightmap> {
    arb_map(5, 4, 3).prop_filter("too many tiles", move |m| m.floor_count() <= max_n)
}

/// All-pairs tile distances by Dijkstra over an explicit voxel grid with
/// generous headroom. `None` for unreachable pairs.
pub fn oracle_distances(map: &Heightmap) -> Vec<Vec<Option<u32>>> {
    let (w, h) = (map.width() as i64, map.height() as i64);
    let layers = i64::from(map.max_elevation()) + 6;
    let empty = |r: i64, c: i64, k: i64| {
        if r < 0 || c < 0 || r >= h || c >= w || k < 0 || k >= layers {
            return false;
        }
        match map.tile(r as usize, c as usize) {
            Tile::Wall => false,
            Tile::Floor(z) => k >= i64::from(z),
        }
    };
    let id = |r: i64, c: i64, k: i64| ((k * h + r) * w + c) as usize;
    let index = map.tile_index();
    let surface: Vec<(i64, i64, i64)> = index
        .positions()
        .iter()
        .map(|&(r, c)| (r as i64, c as i64, i64::from(map.elevation(r, c).unwrap())))
        .collect();

    surface
        .iter()
        .map(|&(sr, sc, sk)| {
            let mut dist = vec![u32::MAX; (w * h * layers) as usize];
            let mut heap = BinaryHeap::new();
            dist[id(sr, sc, sk)] = 0;
            heap.push(Reverse((0u32, sr, sc, sk)));
            while let Some(Reverse((d, r, c, k))) = heap.pop() {
                if d > dist[id(r, c, k)] {
                    continue;
                }
                for (dr, dc, dk) in [(1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1)] {
                    let (nr, nc, nk) = (r + dr, c + dc, k + dk);
                    if empty(nr, nc, nk) && d + 1 < dist[id(nr, nc, nk)] {
                        dist[id(nr, nc, nk)] = d + 1;
                        heap.push(Reverse((d + 1, nr, nc, nk)));
                    }
                }
            }
            surface
                .iter()
                .map(|&(r, c, k)| Some(dist[id(r, c, k)]).filter(|&d| d != u32::MAX))
                .collect()
        })
        .collect()
}

pub fn ones(x: &[bool]) -> usize {
    x.iter().filter(|&&b| b).count()
}

pub fn bits(n: usize, mask: u64) -> Vec<bool> {
    (0..n).map(|i| mask >> i & 1 == 1).collect()
}
