//! Repeated-run statistics: per-iteration means with Student-t 95%
//! confidence half-widths.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};
use torchlight_core::IterationTrace;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    /// `None` with a single run.
    pub half_width: Option<f64>,
}

/// Mean and 95% half-width `t(0.975, k-1) * s / sqrt(k)`.
pub fn estimate(samples: &[f64]) -> Estimate {
    let k = samples.len();
    assert!(k > 0, "estimate needs at least one sample");
    let mean = samples.iter().sum::<f64>() / k as f64;
    if k == 1 {
        return Estimate { mean, half_width: None };
    }
    let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (k - 1) as f64;
    let t = StudentsT::new(0.0, 1.0, (k - 1) as f64).expect("k > 1").inverse_cdf(0.975);
    Estimate { mean, half_width: Some(t * (var / k as f64).sqrt()) }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationStats {
    pub iteration: usize,
    pub torches: Estimate,
    pub violations: Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub seed: u64,
    pub torches: Vec<[usize; 2]>,
    pub violations: usize,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub k: usize,
    pub iterations: Vec<IterationStats>,
    pub runs: Vec<RunSummary>,
}

impl ExperimentReport {
    /// Runs that stopped early keep contributing their last record.
    pub fn new(traces: &[IterationTrace], runs: Vec<RunSummary>) -> Self {
        let longest = traces.iter().map(|t| t.len()).max().unwrap_or(0);
        let iterations = (0..longest)
            .map(|k| {
                let at = |t: &IterationTrace| t.records().get(k).or(t.last()).copied();
                let records: Vec<_> = traces.iter().filter_map(at).collect();
                IterationStats {
                    iteration: k + 1,
                    torches: estimate(&records.iter().map(|r| r.torches as f64).collect::<Vec<_>>()),
                    violations: estimate(&records.iter().map(|r| r.violations as f64).collect::<Vec<_>>()),
                }
            })
            .collect();
        Self { k: runs.len(), iterations, runs }
    }

    pub fn to_csv(&self) -> csv::Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["iteration", "torches_mean", "torches_ci95", "violations_mean", "violations_ci95"])?;
        let fmt = |h: Option<f64>| h.map_or_else(String::new, |h| h.to_string());
        for s in &self.iterations {
            w.write_record([
                s.iteration.to_string(),
                s.torches.mean.to_string(),
                fmt(s.torches.half_width),
                s.violations.mean.to_string(),
                fmt(s.violations.half_width),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| e.into_error())?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}
