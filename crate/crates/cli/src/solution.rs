//! Solution JSON and the conversions between torch coordinates and
//! selection vectors.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use torchlight_core::TileIndex;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub map: String,
    /// `[row, col]` of every torch, row-major order.
    pub torches: Vec<[usize; 2]>,
    pub violations: usize,
    pub iterations: usize,
    pub solver: String,
    pub seed: u64,
    #[serde(default)]
    pub torch_count: usize,
    /// Last ADMM iterate when the reported torches are an earlier, feasible one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub last_iterate: Option<Vec<[usize; 2]>>,
}

impl Solution {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
    }
}

pub fn coordinates(index: &TileIndex, x: &[bool]) -> Vec<[usize; 2]> {
    x.iter()
        .enumerate()
        .filter(|(_, &on)| on)
        .map(|(i, _)| {
            let (r, c) = index.position(i);
            [r, c]
        })
        .collect()
}

/// Rejects torches on walls or outside the grid.
pub fn selection(index: &TileIndex, torches: &[[usize; 2]]) -> Result<Vec<bool>> {
    let mut x = vec![false; index.len()];
    for &[r, c] in torches {
        match index.index_of(r, c) {
            Some(i) => x[i] = true,
            None => bail!("torch at ({r}, {c}) is not on a floor tile"),
        }
    }
    Ok(x)
}
