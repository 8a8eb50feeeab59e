//! End-to-end acceptance checks. Runs as a plain binary so every criterion
//! prints exactly one PASS/FAIL line, then exits non-zero if any failed.

use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use torchlight_core::{
    build_slack_qubo, coverage_matrix, distance_field, exhaustive_min_cover, greedy_cover, light_levels,
    parse_heightmap, run_admm, solve, to_setcover, AdmmConfig, CoverageMatrix, Heightmap, LightParams,
    LinearConstraintSystem, PerlinParams, QuboInstance, SolverConfig, SolverKind, Tile,
};

/// Every layout produced anywhere in the suite, re-checked by criterion 6.
#[derive(Default)]
struct Emitted {
    layouts: Vec<(Heightmap, Vec<bool>)>,
}

impl Emitted {
    fn push(&mut self, map: &Heightmap, x: &[bool]) {
        self.layouts.push((map.clone(), x.to_vec()));
    }
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn torches(x: &[bool]) -> usize {
    x.iter().filter(|&&b| b).count()
}

fn from_indices(n: usize, idx: &[usize]) -> Vec<bool> {
    let mut x = vec![false; n];
    for &i in idx {
        x[i] = true;
    }
    x
}

/// Random map with walls, 2 or 3 elevation levels and at most `max_n` floor tiles.
fn small_map(rng: &mut ChaCha8Rng, max_n: usize) -> Heightmap {
    loop {
        let (w, h) = (rng.gen_range(3..=5), rng.gen_range(2..=4));
        let levels = rng.gen_range(2..=3);
        let tiles: Vec<Tile> = (0..w * h)
            .map(|_| if rng.gen_bool(0.25) { Tile::Wall } else { Tile::Floor(rng.gen_range(0..levels)) })
            .collect();
        if let Ok(map) = Heightmap::new(w, h, tiles) {
            if map.floor_count() <= max_n {
                return map;
            }
        }
    }
}

fn distance_fixtures() -> Outcome {
    let mut mismatches = Vec::new();
    let mut check = |text: &str, source: (usize, usize), expected: &[((usize, usize), u32)]| {
        let map = parse_heightmap(text).unwrap();
        let field = distance_field(&map, source, u32::MAX).unwrap();
        let index = map.tile_index();
        for &((r, c), want) in expected {
            let got = field.get(index.index_of(r, c).unwrap());
            if got != Some(want) {
                mismatches.push(format!("({r},{c}) want {want} got {got:?}"));
            }
        }
    };
    check(
        "# # 0 #\n0 0 0 0\n# # # 0",
        (1, 0),
        &[((1, 1), 1), ((1, 2), 2), ((0, 2), 3), ((1, 3), 3), ((2, 3), 4)],
    );
    check(
        "0 0 0\n0 0 2\n0 1 0",
        (0, 0),
        &[
            ((0, 1), 1),
            ((0, 2), 2),
            ((1, 0), 1),
            ((1, 1), 2),
            ((2, 0), 2),
            ((2, 1), 4),
            ((1, 2), 5),
            ((2, 2), 6),
        ],
    );
    Outcome { pass: mismatches.is_empty(), detail: format!("{} mismatches {:?}", mismatches.len(), mismatches) }
}

struct SmallRun {
    d: CoverageMatrix,
    minimum: usize,
    greedy: usize,
    admm_x: Vec<bool>,
}

fn oracle_equivalence(emitted: &mut Emitted) -> (Outcome, Vec<SmallRun>) {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut runs = Vec::new();
    let (mut feasible, mut optimal) = (0, 0);
    for seed in 0..50u64 {
        let map = small_map(&mut rng, 14);
        let d = coverage_matrix(&map, LightParams::default());
        let inst = to_setcover(&d);
        let min_cover = exhaustive_min_cover(&inst).unwrap();
        let greedy = greedy_cover(&inst);
        let cfg = AdmmConfig {
            budget: 30,
            mu0: 0.01,
            rho: 1.1,
            solver: SolverConfig::new(SolverKind::Exhaustive, seed),
            ..AdmmConfig::default()
        };
        let out = run_admm(&LinearConstraintSystem::new(d.clone()), &cfg).unwrap();
        let x = out.state.x.clone();
        if d.is_cover(&x) {
            feasible += 1;
            if torches(&x) == min_cover.len() {
                optimal += 1;
            }
        }
        emitted.push(&map, &x);
        emitted.push(&map, &from_indices(d.n(), &min_cover));
        emitted.push(&map, &from_indices(d.n(), &greedy));
        runs.push(SmallRun { d, minimum: min_cover.len(), greedy: greedy.len(), admm_x: x });
    }
    let pass = feasible == 50 && optimal >= 45;
    (Outcome { pass, detail: format!("feasible {feasible}/50, optimal size {optimal}/50 (need 50 and 45)") }, runs)
}

struct Convergence {
    reached: usize,
    runs: usize,
    /// Per-iteration violation counts of every run.
    traces: Vec<Vec<usize>>,
}

fn converge(width: usize, height: usize, budget: usize, emitted: &mut Emitted) -> Convergence {
    let mut traces = Vec::new();
    let mut reached = 0;
    for seed in 0..10u64 {
        let map = PerlinParams::new(width, height, seed).generate().unwrap();
        let d = coverage_matrix(&map, LightParams::default());
        let cfg = AdmmConfig { budget, solver: SolverConfig::new(SolverKind::TabuSa, seed), ..AdmmConfig::default() };
        let out = run_admm(&LinearConstraintSystem::new(d), &cfg).unwrap();
        if out.best_feasible.is_some() {
            reached += 1;
        }
        emitted.push(&map, &out.state.x);
        if let Some(best) = &out.best_feasible {
            emitted.push(&map, best);
        }
        traces.push(out.trace.records().iter().map(|r| r.violations).collect());
    }
    Convergence { reached, runs: 10, traces }
}

fn paper_shaped_convergence(small: &Convergence, large: &Convergence) -> Outcome {
    let pass = small.reached >= 8 && large.reached >= 7;
    Outcome {
        pass,
        detail: format!(
            "20x15 reached 0 violations in {}/{} (need 8), 40x30 in {}/{} (need 7)",
            small.reached, small.runs, large.reached, large.runs
        ),
    }
}

fn monotone_trend(all: &[&Convergence]) -> Outcome {
    let traces: Vec<&Vec<usize>> = all.iter().flat_map(|c| c.traces.iter()).collect();
    let mean_at = |k: usize| traces.iter().map(|t| t[k - 1] as f64).sum::<f64>() / traces.len() as f64;
    let (v2, v10) = (mean_at(2), mean_at(10));
    let unfinished: Vec<usize> = (0..traces.len()).filter(|&i| *traces[i].last().unwrap() != 0).collect();
    let relapsed: Vec<usize> = unfinished.iter().copied().filter(|&i| traces[i].contains(&0)).collect();
    Outcome {
        pass: unfinished.is_empty() && v10 < v2,
        detail: format!(
            "{} of {} traces end with violations {:?} (feasible earlier: {:?}), mean violations iteration 2 {v2:.2} vs iteration 10 {v10:.2}",
            unfinished.len(),
            traces.len(),
            unfinished,
            relapsed
        ),
    }
}

fn slack_equivalence(emitted: &mut Emitted) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut failures = Vec::new();
    for k in 0..20 {
        let map = small_map(&mut rng, 6);
        let d = coverage_matrix(&map, LightParams::default());
        let n = d.n();
        let sq = build_slack_qubo(&LinearConstraintSystem::new(d.clone()), (n + 1) as f64).unwrap();
        let best = solve(&sq.qubo, &SolverConfig::new(SolverKind::Exhaustive, 0)).unwrap();
        let x = sq.tile_part(&best.x).to_vec();
        let minimum = exhaustive_min_cover(&to_setcover(&d)).unwrap().len();
        if !d.is_cover(&x) || torches(&x) != minimum {
            failures.push(k);
        }
        emitted.push(&map, &x);
    }
    Outcome { pass: failures.is_empty(), detail: format!("{}/20 instances agree, failing {:?}", 20 - failures.len(), failures) }
}

fn cross_evaluation(emitted: &Emitted) -> Outcome {
    let mismatches = emitted
        .layouts
        .iter()
        .filter(|(map, x)| {
            let d = coverage_matrix(map, LightParams::default());
            let layout = light_levels(map, x, LightParams::default()).unwrap();
            d.violations(x) != layout.violations
        })
        .count();
    Outcome { pass: mismatches == 0, detail: format!("{mismatches} mismatches over {} layouts", emitted.layouts.len()) }
}

fn random_qubo(n: usize, rng: &mut ChaCha8Rng) -> QuboInstance {
    let mut entries = Vec::new();
    for i in 0..n {
        for j in i..n {
            entries.push((i, j, rng.gen_range(-1.0..1.0)));
        }
    }
    QuboInstance::from_entries(n, entries).unwrap()
}

fn solver_sanity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let qubos: Vec<QuboInstance> = (0..100).map(|_| random_qubo(12, &mut rng)).collect();
    let optima: Vec<f64> =
        qubos.iter().map(|q| solve(q, &SolverConfig::new(SolverKind::Exhaustive, 0)).unwrap().energy).collect();
    let mut hits = Vec::new();
    for kind in [SolverKind::SimulatedAnnealing, SolverKind::Tabu, SolverKind::TabuSa] {
        let count = qubos
            .iter()
            .zip(&optima)
            .enumerate()
            .filter(|(seed, (q, opt))| {
                let e = solve(q, &SolverConfig::new(kind, *seed as u64)).unwrap().energy;
                e <= *opt + 1e-9
            })
            .count();
        hits.push((kind, count));
    }
    let pass = hits.iter().all(|&(_, c)| c >= 95);
    let detail = hits.iter().map(|(k, c)| format!("{k:?} {c}/100")).collect::<Vec<_>>().join(", ");
    Outcome { pass, detail: format!("{detail} (need 95)") }
}

fn baseline_ordering(runs: &[SmallRun]) -> Outcome {
    let mut compared = 0;
    let mut violations = 0;
    for run in runs.iter().filter(|r| r.d.is_cover(&r.admm_x)) {
        compared += 1;
        if run.minimum > torches(&run.admm_x) || run.minimum > run.greedy {
            violations += 1;
        }
    }
    Outcome { pass: violations == 0, detail: format!("{violations} ordering violations over {compared} feasible runs") }
}

fn main() -> ExitCode {
    let mut emitted = Emitted::default();
    let mut results: Vec<(u32, &str, Outcome, f64)> = Vec::new();
    let mut timed = |id, name, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let outcome = f();
        results.push((id, name, outcome, start.elapsed().as_secs_f64()));
    };

    timed(1, "distance fixtures", &mut distance_fixtures);
    let mut small_runs = Vec::new();
    timed(2, "oracle equivalence", &mut || {
        let (o, runs) = oracle_equivalence(&mut emitted);
        small_runs = runs;
        o
    });
    let mut small = None;
    let mut large = None;
    timed(3, "convergence on generated caves", &mut || {
        let s = converge(20, 15, 20, &mut emitted);
        let l = converge(40, 30, 30, &mut emitted);
        let o = paper_shaped_convergence(&s, &l);
        small = Some(s);
        large = Some(l);
        o
    });
    let (small, large) = (small.unwrap(), large.unwrap());
    timed(4, "violation trend", &mut || monotone_trend(&[&small, &large]));
    timed(5, "slack formulation", &mut || slack_equivalence(&mut emitted));
    timed(6, "cross-evaluation", &mut || cross_evaluation(&emitted));
    timed(7, "solver sanity", &mut solver_sanity);
    timed(8, "baseline ordering", &mut || baseline_ordering(&small_runs));

    let mut failed = 0;
    for (id, name, outcome, secs) in &results {
        let verdict = if outcome.pass { "PASS" } else { "FAIL" };
        if !outcome.pass {
            failed += 1;
        }
        println!("criterion {id} {name}: {verdict} ({}; {secs:.1}s)", outcome.detail);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
