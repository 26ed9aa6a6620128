//! End-to-end acceptance checks, one PASS/FAIL line each.
//!
//! Runs without the libtest harness so every line is printed even when all
//! checks pass. Exits non-zero if any check fails.

mod common;

use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_pcg::Pcg64Mcg;

use heatchan::bounds;
use heatchan::channel::{self, ChannelParams, NoiseDistribution};
use heatchan::codec::{self, ErrorEstimate, SchemeOptions, SchemeParams, SlotVariance};
use heatchan::coeffs::{ClassifyPolicy, CoefficientSpec, Verdict};
use heatchan::harness::{self, ConcentrationConfig, ConcentrationReport, ResidualRow};
use heatchan::output::{self, Cell, Format, TableWriter};

struct Outcome {
    pass: bool,
    detail: String,
}

fn report(id: u32, name: &str, elapsed: Duration, o: &Outcome) {
    println!(
        "criterion {id:>2} {:<4} {name} ({:.1} s): {}",
        if o.pass { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        o.detail
    );
}

fn header(pairs: &[(&str, String)]) -> Vec<(String, String)> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

fn write_table(path: &Path, header: &[(String, String)], columns: &[&str], rows: impl IntoIterator<Item = Vec<Cell>>) {
    let file = std::fs::File::create(path).expect("create result file");
    let mut w = TableWriter::new(std::io::BufWriter::new(file), Format::Csv, header, columns).expect("writer");
    for r in rows {
        w.write_row(&r).expect("row");
    }
    w.finish().expect("flush");
}

// ---------------------------------------------------------------- 1

const C1_SEED: u64 = 20_240_601;
const C1_TRIALS: u64 = 100_000;

fn c1_input() -> Vec<f64> {
    (0..64).map(|i| if i % 3 == 1 { -2.0 } else { 2.0 }).collect()
}

fn c1_run(workers: usize) -> Vec<ResidualRow> {
    let spec = CoefficientSpec::geometric(0.5).unwrap();
    let params = ChannelParams::new(1.0, NoiseDistribution::GaussianUnit, 4.0).unwrap();
    harness::residual_profile(&spec, &params, &c1_input(), C1_TRIALS, C1_SEED, workers).unwrap()
}

fn c1_write(rows: &[ResidualRow], path: &Path) {
    let h = header(&[
        ("command", "simulate".into()),
        ("coeffs", "geometric:0.5".into()),
        ("sigma2", "1".into()),
        ("trials", C1_TRIALS.to_string()),
        ("seed", C1_SEED.to_string()),
    ]);
    write_table(path, &h, &output::RESIDUAL_COLUMNS, rows.iter().map(output::residual_cells));
}

fn criterion_1(rows: &[ResidualRow], elapsed: Duration) -> Outcome {
    let spec = CoefficientSpec::geometric(0.5).unwrap();
    let x = c1_input();
    let oracle = common::brute_force_variances(|l| spec.eval(l), 1.0, &x);
    let worst = rows
        .iter()
        .map(|r| (r.emp_var - oracle[r.k - 1]).abs() / oracle[r.k - 1])
        .fold(0.0, f64::max);
    let exact_ok = rows.iter().all(|r| (r.noise_var - oracle[r.k - 1]).abs() <= 1e-12 * oracle[r.k - 1]);
    Outcome {
        pass: worst < 0.03 && exact_ok && elapsed < Duration::from_secs(30),
        detail: format!("max relative variance error {worst:.4} over 64 indices, limit 0.03; runtime limit 30 s"),
    }
}

// ---------------------------------------------------------------- 2

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut rng = Pcg64Mcg::seed_from_u64(2);
    let rho = 0.5;
    let x: Vec<f64> = (0..1000).map(|_| rng.random_range(-3.0..3.0)).collect();
    let fast = channel::geometric_fast_variance(rho, 1.0, &x).unwrap();
    let elapsed = start.elapsed();
    let slow = common::brute_force_variances(|l| rho.powi(l as i32), 1.0, &x);
    let worst = fast.iter().zip(&slow).map(|(a, b)| (a - b).abs() / b).fold(0.0, f64::max);
    Outcome {
        pass: fast.len() == slow.len() && worst < 1e-10 && elapsed < Duration::from_secs(1),
        detail: format!("max relative error {worst:.2e}, limit 1e-10; fast path {:.2} ms", elapsed.as_secs_f64() * 1e3),
    }
}

// ---------------------------------------------------------------- 3

fn criterion_3() -> Outcome {
    let table = [
        (CoefficientSpec::geometric(0.5).unwrap(), Verdict::Bounded),
        (CoefficientSpec::truncated(4, 1.0).unwrap(), Verdict::Unbounded),
        (CoefficientSpec::super_exponential(0.5).unwrap(), Verdict::Unbounded),
        (CoefficientSpec::even_one(), Verdict::Indeterminate),
        (CoefficientSpec::odd_one(), Verdict::Indeterminate),
    ];
    let mut got = Vec::new();
    let mut pass = true;
    for (spec, want) in &table {
        let v = spec.classify(128, &ClassifyPolicy::default()).unwrap().verdict;
        pass &= v == *want;
        got.push(format!("{spec}={v}"));
    }
    Outcome {
        pass,
        detail: got.join(", "),
    }
}

// ---------------------------------------------------------------- 4

fn criterion_4() -> Outcome {
    let mut worst = 0.0f64;
    for p in [1e-2, 1.0, 1e2, 1e6] {
        for l in [1usize, 4, 16] {
            let got = bounds::achievable_rate_pre_limit(p, 1.0, 0.0, l, 0.0, -0.5).unwrap();
            let want = (1.0f64 + p).ln() / (2.0 * l as f64);
            worst = worst.max((got - want).abs());
        }
    }
    Outcome {
        pass: worst <= 1e-12,
        detail: format!("max |difference| {worst:.2e}, limit 1e-12"),
    }
}

// ---------------------------------------------------------------- 5

fn criterion_5() -> Outcome {
    let mut rng = Pcg64Mcg::seed_from_u64(5);
    let mut violations = 0;
    let mut worst_gap = f64::NEG_INFINITY;
    for _ in 0..20 {
        let p = 10f64.powf(rng.random_range(-2.0..6.0));
        let alpha = rng.random_range(0.0..3.0);
        let l = rng.random_range(1..=16usize);
        let s_star = bounds::chernoff_parameter(p, alpha);
        let best = bounds::achievable_rate_pre_limit(p, 1.0, alpha, l, 0.0, s_star).unwrap();
        for _ in 0..50 {
            let s = -(10f64.powf(rng.random_range(-8.0..3.0)));
            let r = bounds::achievable_rate_pre_limit(p, 1.0, alpha, l, 0.0, s).unwrap();
            worst_gap = worst_gap.max(r - best);
            if r > best {
                violations += 1;
            }
        }
    }
    Outcome {
        pass: violations == 0,
        detail: format!("{violations} violations in 1000 comparisons (sigma2 = 1, eps = 0); largest rate(s) - rate(s*) = {worst_gap:.3e}"),
    }
}

// ---------------------------------------------------------------- 6

fn criterion_6() -> Outcome {
    // For geometric coefficients the two sides differ by -ln(1 - rho^L)/2L,
    // which drops below one ulp of the rates once rho^L < 1e-15; the check
    // therefore allows four ulps of the lower bound.
    const ULPS: f64 = 4.0 * f64::EPSILON;
    let mut violations = Vec::new();
    let mut worst = f64::INFINITY;
    for rho in [0.3, 0.5, 0.9] {
        let spec = CoefficientSpec::geometric(rho).unwrap();
        for l in 1..=64 {
            let a = spec.alpha_l(l, 1e-12).unwrap();
            let asym = bounds::asymptotic_rate(a, l);
            let lower = bounds::rho_rate_lower_bound(rho, l).unwrap();
            worst = worst.min(asym - lower);
            if asym < lower - ULPS * lower.abs() {
                violations.push(format!("rho={rho} L={l}: {asym} < {lower}"));
            }
        }
    }
    let gap40 = (bounds::rho_rate_lower_bound(0.5, 40).unwrap() - 0.5 * 2f64.ln()).abs();
    Outcome {
        pass: violations.is_empty() && gap40 < 1e-6,
        detail: format!(
            "{} chain violations over 192 (rho, L) pairs at 4-ulp resolution{}, smallest asymptotic - lower = {worst:.2e}; |bound(0.5, 40) - ln2/2| = {gap40:.2e}, limit 1e-6",
            violations.len(),
            violations.first().map(|v| format!(" (first: {v})")).unwrap_or_default()
        ),
    }
}

// ---------------------------------------------------------------- 7

const C7_SEED: u64 = 7_000_007;
const C7_TRIALS: u64 = 200;
const C7_N: [usize; 3] = [24, 40, 64];

fn c7_run(workers: usize) -> Vec<(usize, u64, ErrorEstimate)> {
    let spec = CoefficientSpec::truncated(4, 1.0).unwrap();
    let params = ChannelParams::from_snr(1.0, NoiseDistribution::GaussianUnit, 100.0).unwrap();
    let options = SchemeOptions {
        workers,
        ..SchemeOptions::default()
    };
    C7_N.iter()
        .map(|&n| {
            let messages = codec::message_count_for_rate(0.25, n).unwrap();
            let scheme = SchemeParams::new(4, messages, n).unwrap();
            let variance = SlotVariance::FullBudget.variance(params.power(), 4);
            let seed = harness::sweep_point_seed(C7_SEED, 100.0, 4, n, messages);
            let est = codec::scheme_error_probability_with(&spec, &params, &scheme, variance, C7_TRIALS, seed, &options)
                .unwrap();
            (n, messages, est)
        })
        .collect()
}

fn c7_write(rows: &[(usize, u64, ErrorEstimate)], path: &Path) {
    let h = header(&[
        ("command", "sweep".into()),
        ("coeffs", "truncated:4:1".into()),
        ("seed", C7_SEED.to_string()),
    ]);
    let ach = bounds::truncated_rate(4, 4, 100.0).unwrap();
    let cells = rows.iter().map(|(n, m, e)| {
        vec![
            "truncated:4:1".into(),
            1.0.into(),
            100.0.into(),
            4usize.into(),
            (*n).into(),
            (*m).into(),
            0.25.into(),
            e.trials.into(),
            e.errors.into(),
            e.probability.into(),
            e.ci_lo.into(),
            e.ci_hi.into(),
            ach.into(),
            harness::sweep_point_seed(C7_SEED, 100.0, 4, *n, *m).into(),
        ]
    });
    write_table(path, &h, &output::SWEEP_COLUMNS, cells);
}

fn criterion_7(rows: &[(usize, u64, ErrorEstimate)], elapsed: Duration) -> Outcome {
    let at40 = &rows[1].2;
    let sizes_ok = rows[1].1 == 22_026;
    let monotone = rows.windows(2).all(|w| w[1].2.probability <= w[0].2.probability || w[1].2.overlaps(&w[0].2));
    let pass = sizes_ok && at40.probability < 0.1 && monotone && elapsed < Duration::from_secs(300);
    let detail = rows
        .iter()
        .map(|(n, m, e)| format!("n={n} |M|={m} err={:.3} [{:.3}, {:.3}]", e.probability, e.ci_lo, e.ci_hi))
        .collect::<Vec<_>>()
        .join("; ");
    Outcome {
        pass,
        detail: format!("{detail}; limit 0.1 at n=40, non-increasing within CI, runtime limit 300 s"),
    }
}

// ---------------------------------------------------------------- 8

const C8_SEED: u64 = 88_888;

fn c8_run(workers: usize) -> ConcentrationReport {
    let cfg = ConcentrationConfig {
        spec: CoefficientSpec::geometric(0.5).unwrap(),
        sigma2: 1.0,
        noise: NoiseDistribution::GaussianUnit,
        power: 10.0,
        period: 2,
        n_grid: vec![1_000, 4_000, 10_000],
        eps: 0.5,
        trials: 500,
        seed: C8_SEED,
        workers,
    };
    harness::norm_concentration(&cfg).unwrap()
}

fn c8_write(rep: &ConcentrationReport, path: &Path) {
    let h = header(&[
        ("command", "lemma2".into()),
        ("coeffs", "geometric:0.5".into()),
        ("seed", C8_SEED.to_string()),
    ]);
    write_table(path, &h, &output::CONCENTRATION_COLUMNS, rep.rows.iter().map(output::concentration_cells));
}

fn criterion_8(rep: &ConcentrationReport) -> Outcome {
    let last = rep.rows.last().unwrap();
    let mean_y_ok = (last.mean_y - 43.0 / 3.0).abs() / (43.0 / 3.0) < 0.05;
    let mean_z_ok = (last.mean_z - 13.0 / 3.0).abs() / (13.0 / 3.0) < 0.05;
    let monotone = rep.rows.windows(2).all(|w| w[1].hit_frac >= w[0].hit_frac);
    let hit_ok = last.hit_frac >= 0.95;
    let hits: Vec<String> = rep.rows.iter().map(|r| format!("{:.3}", r.hit_frac)).collect();
    Outcome {
        pass: mean_y_ok && mean_z_ok && monotone && hit_ok,
        detail: format!(
            "mean_y={:.3} (target 14.333, {}), mean_z={:.3} (target 4.333, {}); hit fractions over n=1e3,4e3,1e4: [{}] ({}), need >= 0.95 at 1e4 ({}); var_y at 1e4 = {:.4}",
            last.mean_y,
            if mean_y_ok { "ok" } else { "off" },
            last.mean_z,
            if mean_z_ok { "ok" } else { "off" },
            hits.join(", "),
            if monotone { "non-decreasing" } else { "not monotone" },
            if hit_ok { "ok" } else { "short" },
            last.var_y,
        ),
    }
}

// ---------------------------------------------------------------- 9

fn criterion_9() -> Outcome {
    let grid: Vec<f64> = (-4..=4).map(|i| i as f64 * 0.25).collect();
    let mut values = Vec::new();
    let mut pass = true;
    let mut parts = Vec::new();
    for delta in [0.5, 0.1, 0.01] {
        let est = bounds::log_inverse_near_zero(NoiseDistribution::GaussianUnit, delta, &grid, 1_000_000, 99).unwrap();
        let oracle = grid.iter().map(|&c| common::log_inverse_gaussian(delta, c)).fold(f64::NEG_INFINITY, f64::max);
        let z = (est.value - oracle).abs() / est.std_error;
        pass &= z <= 3.0;
        parts.push(format!("delta={delta}: {:.5} +- {:.5} vs oracle {oracle:.5} ({z:.2} SE)", est.value, est.std_error));
        values.push(est.value);
    }
    let decreasing = values.windows(2).all(|w| w[1] < w[0]);
    pass &= decreasing && values[2] < 0.05;
    Outcome {
        pass,
        detail: format!("{}; decreasing: {decreasing}; limit 0.05 at delta=0.01", parts.join("; ")),
    }
}

// ---------------------------------------------------------------- 10

fn criterion_10() -> Outcome {
    let specs = [
        CoefficientSpec::geometric(0.5).unwrap(),
        CoefficientSpec::truncated(4, 1.0).unwrap(),
    ];
    let periods: Vec<usize> = (1..=64).collect();
    let rep = harness::dichotomy_demo(&specs, &[1e2, 1e6], &periods, 1.0, SlotVariance::FullBudget).unwrap();
    let geo = rep.summaries[0].ratio;
    let trunc = rep.summaries[1].ratio;
    let odd = CoefficientSpec::odd_one();
    let a2 = odd.alpha_l(2, 1e-12).unwrap();
    let mut worst = 0.0f64;
    for snr in [1e-2, 1.0, 1e2, 1e4, 1e6] {
        let got = bounds::achievable_rate_opt(SlotVariance::FullBudget.variance(snr, 2), 1.0, a2, 2, 0.0)
            .unwrap()
            .pre_limit_rate;
        worst = worst.max((got - 0.25 * (2.0 * snr).ln_1p()).abs());
    }
    Outcome {
        pass: geo < 2.0 && trunc > 2.0 && worst <= 1e-12,
        detail: format!(
            "rate ratio SNR 1e6 / 1e2: geometric:0.5 {geo:.3} (need < 2), truncated:4:1 {trunc:.3} (need > 2); odd-family even-slot max |error| {worst:.2e}, limit 1e-12"
        ),
    }
}

// ---------------------------------------------------------------- 11

fn criterion_11(dir: &Path, baseline: &[(&str, Vec<u8>)]) -> Outcome {
    let mut mismatches = Vec::new();
    let mut runs = 0;
    for (i, &workers) in [1usize, 4, 8].iter().enumerate() {
        let p1 = dir.join(format!("c1_rerun_{i}.csv"));
        c1_write(&c1_run(workers), &p1);
        let p7 = dir.join(format!("c7_rerun_{i}.csv"));
        c7_write(&c7_run(workers), &p7);
        let p8 = dir.join(format!("c8_rerun_{i}.csv"));
        c8_write(&c8_run(workers), &p8);
        for ((name, want), path) in baseline.iter().zip([&p1, &p7, &p8]) {
            runs += 1;
            if std::fs::read(path).unwrap() != *want {
                mismatches.push(format!("{name} at {workers} workers"));
            }
        }
    }
    Outcome {
        pass: mismatches.is_empty(),
        detail: format!(
            "{runs} reruns (criteria 1, 7, 8 at 1, 4, 8 workers) against first-run files; {} differ{}",
            mismatches.len(),
            if mismatches.is_empty() { String::new() } else { format!(": {}", mismatches.join(", ")) }
        ),
    }
}

fn main() -> ExitCode {
    // `cargo test` passes libtest flags; a name filter that does not mention
    // this target skips it, as libtest would.
    let args: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    if !args.is_empty() && !args.iter().any(|a| "acceptance".contains(a.as_str()) || a.contains("criterion")) {
        return ExitCode::SUCCESS;
    }
    let dir = tempfile::tempdir().expect("tempdir");
    let mut results = Vec::new();
    let mut run = |id: u32, name: &str, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let o = f();
        report(id, name, start.elapsed(), &o);
        results.push(o.pass);
    };

    let mut baseline: Vec<(&str, Vec<u8>)> = Vec::new();
    run(1, "channel-law fidelity", &mut || {
        let start = Instant::now();
        let rows = c1_run(1);
        let elapsed = start.elapsed();
        let p = dir.path().join("c1.csv");
        c1_write(&rows, &p);
        baseline.push(("criterion 1", std::fs::read(&p).unwrap()));
        criterion_1(&rows, elapsed)
    });
    run(2, "fast-path equivalence", &mut criterion_2);
    run(3, "classification table", &mut criterion_3);
    run(4, "rate-algebra identity", &mut criterion_4);
    run(5, "Chernoff parameter optimality", &mut criterion_5);
    run(6, "geometric chain", &mut criterion_6);
    run(7, "coding below capacity", &mut || {
        let start = Instant::now();
        let rows = c7_run(1);
        let elapsed = start.elapsed();
        let p = dir.path().join("c7.csv");
        c7_write(&rows, &p);
        baseline.push(("criterion 7", std::fs::read(&p).unwrap()));
        criterion_7(&rows, elapsed)
    });
    run(8, "norm concentration", &mut || {
        let rep = c8_run(1);
        let p = dir.path().join("c8.csv");
        c8_write(&rep, &p);
        baseline.push(("criterion 8", std::fs::read(&p).unwrap()));
        criterion_8(&rep)
    });
    run(9, "log-inverse trend", &mut criterion_9);
    run(10, "bounded/unbounded dichotomy", &mut criterion_10);
    run(11, "determinism", &mut || criterion_11(dir.path(), &baseline));

    let failed = results.iter().filter(|p| !**p).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
