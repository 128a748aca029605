//! Acceptance suite. Runs without the libtest harness so that every
//! criterion prints its verdict, then exits non-zero if any failed.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::sync::Arc;
use std::time::Instant;

use common::*;
use hhtx::arrangements::{count_arrangements, ArrangementSpec};
use hhtx::asymptotic::asymptotic_p_value;
use hhtx::io::{write_line_list, LineList};
use hhtx::likelihood::{mle_null, total_log_lik, Alternative, LogLikelihood};
use hhtx::model::{cpi, local_r, sar, PeriodDistribution, Population, TransmissionParams};
use hhtx::resampling::{check_admissibility, Admissibility};
use hhtx::power::{power_study, PowerCell, PowerMethod, PowerStudy};
use hhtx::simulator::{simulate_epidemic, SimConfig};
use hhtx::streams::stream;
use num_bigint::BigUint;
use rand::Rng;
use rayon::prelude::*;

type Verdict = (bool, String);

fn two_sig(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let scale = 10f64.powi(1 - x.abs().log10().floor() as i32);
    (x * scale).round() / scale
}

fn table1_study(params: TransmissionParams, n_sims: usize, n_perms: usize, seed: u64) -> PowerCell {
    let pop = Arc::new(Population::uniform(100, 5).unwrap());
    let sim = SimConfig::new(30, uniform(1, 3), uniform(3, 5));
    let mut study = PowerStudy::new(pop, sim, vec![params], PowerMethod::Refined);
    study.n_sims = n_sims;
    study.n_perms = n_perms;
    study.seed = seed;
    power_study(&study, |_, _| {}).unwrap().remove(0)
}

fn describe(cell: &PowerCell) -> String {
    format!(
        "power {:.4} (se {:.4}), N_idx {:.2}, N_tot {:.2}, failed {}",
        cell.power, cell.mc_stderr, cell.mean_n_index, cell.mean_n_total, cell.failed_runs
    )
}

fn closed_forms() -> Verdict {
    let start = Instant::now();
    let f = uniform(3, 5);
    let values = [
        ("sar(0.014)", sar(0.014, &f), 0.055),
        ("sar(0.08)", sar(0.08, &f), 0.28),
        ("local_r(0.055, 0.0002, 5, 500)", local_r(0.055, 0.0002, 5.0, 500.0), 0.32),
        ("cpi(0.001, 30)", cpi(0.001, 30), 0.030),
    ];
    let elapsed = start.elapsed().as_secs_f64();
    let ok = values.iter().all(|&(_, v, want)| (two_sig(v) - want).abs() < 1e-12) && elapsed < 1.0;
    let detail = values.iter().map(|(name, v, _)| format!("{name}={v:.5}")).collect::<Vec<_>>().join(", ");
    (ok, format!("{detail}; {elapsed:.3}s"))
}

fn type_one_error() -> Verdict {
    let cell = table1_study(TransmissionParams::null(0.002), 400, 500, 20_002);
    ((0.027..=0.077).contains(&cell.power), format!("{}; band [0.027, 0.077]", describe(&cell)))
}

fn table1_power() -> Verdict {
    let cell = table1_study(TransmissionParams::new(0.002, 0.006, 0.00005).unwrap(), 300, 500, 20_003);
    ((cell.power - 0.79).abs() <= 0.08, format!("{}; target 0.79 +/- 0.08", describe(&cell)))
}

fn small_sample_comparison() -> Verdict {
    let pop = Arc::new(Population::uniform(4, 5).unwrap());
    let sim = SimConfig::new(30, uniform(1, 3), uniform(3, 5));
    let params = TransmissionParams::new(0.01, 0.08, 0.0).unwrap();
    let run = |method| {
        let mut study = PowerStudy::new(pop.clone(), sim.clone(), vec![params], method).two_parameter();
        study.n_sims = 300;
        study.n_perms = 500;
        study.seed = 20_004;
        power_study(&study, |_, _| {}).unwrap().remove(0)
    };
    let refined = run(PowerMethod::Refined);
    let asymptotic = run(PowerMethod::Asymptotic);
    let simple = run(PowerMethod::Simple);
    let ok = (refined.power - 0.85).abs() <= 0.08
        && (asymptotic.power - 0.85).abs() <= 0.08
        && (simple.power - 0.81).abs() <= 0.08
        && refined.power >= simple.power;
    (
        ok,
        format!(
            "refined {:.4}, asymptotic {:.4}, simple {:.4}; targets 0.85/0.85/0.81 +/- 0.08, refined >= simple; \
             N_idx {:.2}, N_tot {:.2}",
            refined.power, asymptotic.power, simple.power, refined.mean_n_index, refined.mean_n_total
        ),
    )
}

fn combinatorics() -> Verdict {
    let start = Instant::now();
    let mut mismatches = 0;
    for m in 0..=5usize {
        for v in 0..=5u64 {
            for n in 0..=(m as u64 * v) {
                if count_arrangements(ArrangementSpec::new(n, m, v)) != BigUint::from(enumerate_compositions(n, m, v).len()) {
                    mismatches += 1;
                }
            }
        }
    }
    let mut rng = stream(20_005, &[]);
    let p_small = uniformity_p_value(3, 3, 2, 100_000, &mut rng);
    let p_large = uniformity_p_value(6, 4, 3, 100_000, &mut rng);
    let elapsed = start.elapsed().as_secs_f64();
    (
        mismatches == 0 && p_small > 0.01 && p_large > 0.01 && elapsed < 60.0,
        format!("{mismatches} count mismatches; GOF p = {p_small:.4} (3,3,2), {p_large:.4} (6,4,3); {elapsed:.2}s"),
    )
}

fn invariance() -> Verdict {
    let mut outcome = table1_outbreak(0.002, 0.0, 0.0, 20_006);
    let mut k = 0;
    while hhtx::resampling::Refiner::new(&outcome.outbreak).spec().is_none() {
        k += 1;
        outcome = table1_outbreak(0.002, 0.0, 0.0, 20_006 + k);
    }
    let deviation = max_null_deviation(&outcome.outbreak, 10_000, 6);
    (deviation < 1e-9, format!("{} cases; max deviation {deviation:.3e} over 10^4 replicates", outcome.n_total))
}

fn likelihood_oracles() -> Verdict {
    let toy = outbreak(
        vec![vec![0, 1], vec![2]],
        vec![Some(2), None, None],
        2,
        4,
        PeriodDistribution::degenerate(1).unwrap(),
        PeriodDistribution::degenerate(1).unwrap(),
    );
    let (b, p1, p2): (f64, f64, f64) = (0.1, 0.3, 0.05);
    let hand = b.ln() + 4.0 * (1.0 - b).ln() + (1.0 - p1).ln() + (1.0 - p2).ln();
    let toy_err = (total_log_lik(&toy, &TransmissionParams::new(b, p1, p2).unwrap()) - hand).abs();

    let fixture = outbreak(
        vec![(0..10).collect()],
        std::iter::once(Some(3)).chain(std::iter::repeat(None).take(9)).collect(),
        5,
        10,
        PeriodDistribution::degenerate(1).unwrap(),
        uniform(3, 5),
    );
    let fit = mle_null(&fixture).unwrap();
    let b_err = (fit.params.b - 1.0 / 47.0).abs();

    let violations = (0..1000u64)
        .into_par_iter()
        .filter(|&k| {
            let mut rng = stream(20_007, &[k]);
            let n_cases = rng.random_range(1..12);
            let cases: Vec<(usize, u32)> =
                (0..n_cases).map(|_| (rng.random_range(0..50), rng.random_range(2..=13))).collect();
            let lrt = LogLikelihood::new(&with_cases(10, 5, &cases, 10, 16)).lrt(Alternative::Full).unwrap();
            !(lrt.null.converged && lrt.full.converged && lrt.lambda >= 0.0)
        })
        .count();
    (
        toy_err < 1e-10 && fit.converged && b_err < 1e-6 && violations == 0,
        format!("toy error {toy_err:.2e}; |b - 1/47| = {b_err:.2e}; {violations}/1000 instances failing"),
    )
}

fn asymptotic_tail() -> Verdict {
    let (at, zero) = (asymptotic_p_value(3.841), asymptotic_p_value(0.0));
    ((at - 0.025).abs() <= 1e-3 && zero == 1.0, format!("p(3.841) = {at:.5}, p(0) = {zero}"))
}

fn simulator_calibration() -> Verdict {
    let pop = Arc::new(Population::uniform(100, 5).unwrap());
    let sim = SimConfig::new(30, uniform(1, 3), uniform(3, 5));
    let params = TransmissionParams::null(0.001);
    let totals: Vec<(f64, bool)> = (0..2000u64)
        .into_par_iter()
        .map(|k| {
            let out = simulate_epidemic(&pop, &sim, &params, &mut stream(20_009, &[k])).unwrap();
            (out.n_total as f64, out.outbreak.max_onset().unwrap_or(0) > 33)
        })
        .collect();
    let n = totals.len() as f64;
    let mean = totals.iter().map(|t| t.0).sum::<f64>() / n;
    let var = totals.iter().map(|t| (t.0 - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let se = (var / n).sqrt();
    let late = totals.iter().filter(|t| t.1).count();
    (
        (mean - 14.8).abs() <= 3.0 * se && late == 0,
        format!("mean {mean:.3} (se {se:.3}), target 14.8; {late} runs with onsets after day 33"),
    )
}

fn determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let outcome = (20_010..)
        .map(|seed| table1_outbreak(0.002, 0.01, 0.00005, seed))
        .find(|o| check_admissibility(&o.outbreak, Alternative::Full) == Admissibility::Both)
        .unwrap();
    let list = LineList::from_outbreak(&outcome.outbreak);
    let input = dir.path().join("outbreak.csv");
    let mut file = std::fs::File::create(&input).unwrap();
    write_line_list(&list, &mut file).unwrap();
    let config = dir.path().join("power.txt");
    std::fs::write(&config, "households = 10\nb = 0.01\np1 = 0, 0.05\np2 = 0\nn_sims = 12\nn_perms = 60\nseed = 10\n")
        .unwrap();
    let input = input.to_str().unwrap();
    let config = config.to_str().unwrap();

    let run = |args: &[&str], workers: &str| {
        let out = Command::new(env!("CARGO_BIN_EXE_hhtx")).args(args).args(["--workers", workers]).output().unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        out.stdout
    };
    let test_args = [
        "test", "--input", input, "--s-days", "30", "--latent", "1:3", "--infectious", "3:5", "--permutations", "300",
        "--seed", "10",
    ];
    let power_args = ["power", "--config", config];
    let mut ok = true;
    for args in [&test_args[..], &power_args[..]] {
        let reference = run(args, "1");
        ok &= ["2", "8"].iter().all(|w| run(args, w) == reference);
    }
    (ok, "`test` and `power` stdout compared across 1, 2 and 8 workers".into())
}

fn main() {
    let criteria: [(&str, fn() -> Verdict); 10] = [
        ("closed-form measures", closed_forms),
        ("type I error, refined test", type_one_error),
        ("power cell, refined test", table1_power),
        ("small-sample comparison", small_sample_comparison),
        ("arrangement counting and sampling", combinatorics),
        ("equivalence-class invariance", invariance),
        ("likelihood and MLE oracles", likelihood_oracles),
        ("asymptotic tail", asymptotic_tail),
        ("simulator calibration", simulator_calibration),
        ("determinism across workers", determinism),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (ok, detail) = match catch_unwind(AssertUnwindSafe(check)) {
            Ok(v) => v,
            Err(e) => {
                let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
                (false, format!("panicked: {}", msg.unwrap_or_default()))
            }
        };
        failures += usize::from(!ok);
        let verdict = if ok { "PASS" } else { "FAIL" };
        println!("criterion {:>2} {verdict}: {name}: {detail} [{:.1}s]", i + 1, start.elapsed().as_secs_f64());
    }
    println!("acceptance: {} passed, {failures} failed", criteria.len() - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
