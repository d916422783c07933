//! Acceptance criteria 1 to 10. Each test prints one PASS/FAIL line.
//!
//! The lines go straight to the process stdout so that they show up even
//! when the harness captures output.

use std::io::Write;
use std::path::Path;
use std::process::Command;
use std::sync::{Mutex, MutexGuard};
use std::time::{Duration, Instant};

use rrt_cut::asymptotics::{alpha_closed, alpha_table, moment_trend};
use rrt_cut::cutter::{averaged_oracle_pmf, Rule};
use rrt_cut::exactdist::pmf;
use rrt_cut::montecarlo::{
    chi_square, convergence_sweep, run_experiment, ExperimentConfig, Sampler, Stat, SweepConfig,
};
use rrt_cut::numeric::Rational;
use rrt_cut::series::{self, DistTables, MSource};
use rrt_cut::splitprob::{table_mass, verify_against_enumeration, JointKind};

fn report(id: &str, title: &str, ok: bool, elapsed: Duration, limit: Option<Duration>, detail: &str) -> bool {
    let in_time = limit.is_none_or(|l| elapsed < l);
    let pass = ok && in_time;
    let budget = match limit {
        Some(l) => format!("{:.1}s of {:.0}s", elapsed.as_secs_f64(), l.as_secs_f64()),
        None => format!("{:.1}s", elapsed.as_secs_f64()),
    };
    let line = format!(
        "{} criterion {id} {title} [{budget}]{}: {detail}\n",
        if pass { "PASS" } else { "FAIL" },
        if ok && !in_time { " over time" } else { "" }
    );
    let mut out = std::io::stdout().lock();
    out.write_all(line.as_bytes()).unwrap();
    out.flush().unwrap();
    pass
}

/// Criteria run one at a time so that each runtime is its own.
static SERIAL: Mutex<()> = Mutex::new(());

fn serial() -> MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

fn mins(m: u64) -> Option<Duration> {
    Some(Duration::from_secs(60 * m))
}

#[test]
fn criterion_01_splitting_probabilities_match_enumeration() {
    let _serial = serial();
    let start = Instant::now();
    let mut cells = 0;
    let mut bad = Vec::new();
    for n in 2..=7 {
        for ell in 1..=n {
            let rep = verify_against_enumeration(n, ell).unwrap();
            cells += rep.checked;
            if !rep.passed() {
                bad.push((n, ell));
            }
        }
    }
    let detail = format!("{cells} cells for n <= 7, mismatches at {bad:?}");
    assert!(report("1", "splitting exactness", bad.is_empty(), start.elapsed(), mins(1), &detail));
}

#[test]
fn criterion_02_joint_tables_sum_to_one() {
    let _serial = serial();
    let start = Instant::now();
    let one = Rational::from_integer(1.into());
    let mut bad = Vec::new();
    let mut tables = 0;
    for kind in [JointKind::R, JointKind::L, JointKind::Y] {
        for n in 2..=40 {
            for ell in 1..=n {
                tables += 1;
                if table_mass(kind, n, ell).unwrap() != one {
                    bad.push((kind, n, ell));
                }
            }
        }
    }
    let detail = format!("{tables} tables, mass != 1 at {bad:?}");
    assert!(report("2", "joint-table normalization", bad.is_empty(), start.elapsed(), mins(1), &detail));
}

#[test]
fn criterion_03_recurrences_match_tree_oracle() {
    let _serial = serial();
    let start = Instant::now();
    let mut bad = Vec::new();
    let mut laws = 0;
    for rule in Rule::ALL {
        for n in 1..=7 {
            for ell in 1..=n {
                laws += 1;
                if pmf::<Rational>(rule, n, ell).unwrap() != averaged_oracle_pmf(rule, n, ell).unwrap() {
                    bad.push((rule, n, ell));
                }
            }
        }
    }
    let detail = format!("{laws} laws for n <= 7, differences at {bad:?}");
    assert!(report("3", "oracle equivalence", bad.is_empty(), start.elapsed(), mins(5), &detail));
}

#[test]
fn criterion_04_closed_form_m_coefficients() {
    let _serial = serial();
    let start = Instant::now();
    let mut bad = Vec::new();
    for ell in 1..=4 {
        let r = series::check_m_coefficients(ell, 15).unwrap();
        if !r.passed() {
            bad.push((ell, r.nonzero_degrees));
        }
    }
    let detail = format!("n <= 15, l <= 4, failures {bad:?}");
    assert!(report("4", "generating-function coefficients", bad.is_empty(), start.elapsed(), mins(1), &detail));
}

#[test]
fn criterion_05_ode_residuals_vanish() {
    let _serial = serial();
    let start = Instant::now();
    let (zm, zn, zg) = (20, 16, 14);
    let tables = DistTables::build(4, Some(zm + 1), Some(zn + 2), Some(zg + 2)).unwrap();
    let mut bad = Vec::new();
    let mut checks = 0;
    for ell in 1..=4 {
        for r in [
            series::check_ode_m_with(ell, zm, MSource::Distribution, Some(&tables)).unwrap(),
            series::check_ode_m_with(ell, zm, MSource::ClosedForm, None).unwrap(),
            series::check_ode_n_with(ell, zn, &tables).unwrap(),
            series::check_ode_g_with(ell, zg, &tables).unwrap(),
        ] {
            checks += 1;
            if !r.passed() {
                bad.push(format!("{} l={} at {:?}", r.check, r.ell, r.nonzero_degrees));
            }
        }
    }
    let detail = format!("{checks} residuals (M to z^20, N to z^16, G to z^14), nonzero: {bad:?}");
    assert!(report("5", "ODE residuals", bad.is_empty(), start.elapsed(), mins(5), &detail));
}

#[test]
fn criterion_06_alpha_recurrence_matches_closed_form() {
    let _serial = serial();
    let start = Instant::now();
    let table = alpha_table(20, 20);
    let mut bad = Vec::new();
    for (ell, row) in table.iter().enumerate().skip(1) {
        for (s, v) in row.iter().enumerate() {
            if *v != alpha_closed(ell, s).unwrap() {
                bad.push((ell, s));
            }
        }
    }
    let detail = format!("l, s <= 20, differences at {bad:?}");
    assert!(report("6", "alpha identity", bad.is_empty(), start.elapsed(), Some(Duration::from_secs(10)), &detail));
}

#[test]
fn criterion_07_beta_limit_trends() {
    let _serial = serial();
    let start = Instant::now();
    let trend = moment_trend(Rule::Last, 2, &[50, 100, 200, 400]).unwrap();
    let a_ok = trend.stable_within(0.25);
    let mut details = vec![format!(
        "(a) fitted C {:?}, spread {:.3} {}",
        trend.fitted_c.iter().map(|c| (c * 1e4).round() / 1e4).collect::<Vec<_>>(),
        trend.spread,
        if a_ok { "ok" } else { "too wide" }
    )];
    let mut b_ok = true;
    for rule in [Rule::Last, Rule::Random] {
        for ell in 1..=3 {
            let mut sc = SweepConfig::new(rule, ell, vec![1_000, 10_000, 100_000], 100_000, 7_000 + ell as u64);
            sc.stats = vec![Stat::Ks];
            let rep = convergence_sweep(&sc).unwrap();
            let ks = &rep.trends[0];
            b_ok &= ks.within_slack;
            details.push(format!(
                "(b) {rule} l={ell} KS {:?}{}",
                ks.values.iter().map(|v| (v * 1e4).round() / 1e4).collect::<Vec<_>>(),
                if ks.strict {
                    ""
                } else if ks.within_slack {
                    " within slack"
                } else {
                    " not decreasing"
                }
            ));
        }
    }
    let detail = details.join("; ");
    assert!(report("7", "beta limit", a_ok && b_ok, start.elapsed(), mins(30), &detail));
}

#[test]
fn criterion_08_stable_limit_cf_trend() {
    let _serial = serial();
    let start = Instant::now();
    let mut ok = true;
    let mut details = Vec::new();
    for ell in 1..=2 {
        let mut sc = SweepConfig::new(Rule::First, ell, vec![10_000, 100_000, 1_000_000], 100_000, 8_000 + ell as u64);
        sc.ts = vec![-1.0, -0.5, 0.5, 1.0];
        let rep = convergence_sweep(&sc).unwrap();
        for t in &rep.trends {
            ok &= t.within_slack;
            details.push(format!(
                "l={ell} {} {:?}{}",
                t.statistic,
                t.values.iter().map(|v| (v * 1e4).round() / 1e4).collect::<Vec<_>>(),
                if t.strict {
                    ""
                } else if t.within_slack {
                    " within slack"
                } else {
                    " not decreasing"
                }
            ));
        }
    }
    let detail = details.join("; ");
    assert!(report("8", "stable limit", ok, start.elapsed(), mins(60), &detail));
}

#[test]
fn criterion_09_simulation_agrees_with_exact_laws() {
    let _serial = serial();
    let start = Instant::now();
    let mut worst = (f64::INFINITY, String::new());
    let mut fails = Vec::new();
    let mut comparisons = 0;
    for rule in Rule::ALL {
        for n in 5..=7 {
            let mut runs: Vec<(usize, Sampler)> = (1..=n).map(|ell| (ell, Sampler::Auto)).collect();
            runs.push((2, Sampler::Direct));
            for (ell, sampler) in runs {
                let exact = pmf::<Rational>(rule, n, ell).unwrap();
                if exact.probs().iter().filter(|p| **p != Rational::from_integer(0.into())).count() < 2 {
                    continue;
                }
                let mut cfg = ExperimentConfig::new(rule, n, ell, 1_000_000, 9_000 + n as u64);
                cfg.sampler = sampler;
                let summary = run_experiment(&cfg).unwrap();
                let test = chi_square(&summary.pmf_counts(), exact.probs()).unwrap();
                comparisons += 1;
                let tag = format!("{rule} n={n} l={ell} {sampler}");
                if test.p_value < worst.0 {
                    worst = (test.p_value, tag.clone());
                }
                if test.p_value < 1e-3 {
                    fails.push(format!("{tag} p={:.2e}", test.p_value));
                }
            }
        }
    }
    let detail =
        format!("{comparisons} non-degenerate laws, smallest p {:.3e} ({}), below 1e-3: {fails:?}", worst.0, worst.1);
    assert!(report("9", "simulation vs exact", fails.is_empty(), start.elapsed(), mins(10), &detail));
}

fn rrt_cut(args: &[&str]) -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_rrt-cut")).args(args).output().unwrap();
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out.stdout
}

fn read(p: &Path) -> Vec<u8> {
    std::fs::read(p).unwrap()
}

#[test]
fn criterion_10_outputs_independent_of_workers() {
    let _serial = serial();
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let mut diffs = Vec::new();
    let mut compared = 0;
    for (rule, n, ell, sampler) in
        [("first", "20000", "2", "auto"), ("last", "5000", "3", "auto"), ("random", "300", "4", "direct")]
    {
        let mut outputs = Vec::new();
        for workers in ["1", "2", "4", "1"] {
            let p = dir.path().join(format!("{rule}-{workers}-{}.csv", outputs.len()));
            rrt_cut(&[
                "simulate",
                "--rule",
                rule,
                "--n",
                n,
                "--ell",
                ell,
                "--reps",
                "3000",
                "--seed",
                "42",
                "--workers",
                workers,
                "--sampler",
                sampler,
                "--out",
                p.to_str().unwrap(),
            ]);
            outputs.push(read(&p));
        }
        compared += outputs.len();
        if outputs.windows(2).any(|w| w[0] != w[1]) {
            diffs.push(format!("simulate {rule}"));
        }
    }
    let mut traces = Vec::new();
    for workers in ["1", "3"] {
        let p = dir.path().join(format!("trace-{workers}.csv"));
        rrt_cut(&[
            "simulate",
            "--rule",
            "random",
            "--n",
            "40",
            "--ell",
            "3",
            "--reps",
            "50",
            "--seed",
            "5",
            "--workers",
            workers,
            "--trace",
            "--out",
            p.to_str().unwrap(),
        ]);
        traces.push((read(&p), read(&dir.path().join(format!("trace-{workers}.csv.trace.jsonl")))));
    }
    compared += traces.len();
    if traces[0] != traces[1] {
        diffs.push("trace".into());
    }
    let mut reports = Vec::new();
    for workers in ["1", "2"] {
        let p = dir.path().join(format!("limit-{workers}.json"));
        rrt_cut(&[
            "limit",
            "--rule",
            "last",
            "--ell",
            "2",
            "--grid",
            "1e2,1e3",
            "--reps",
            "4000",
            "--seed",
            "9",
            "--workers",
            workers,
            "--out",
            p.to_str().unwrap(),
        ]);
        reports.push(read(&p));
    }
    compared += reports.len();
    if reports[0] != reports[1] {
        diffs.push("limit".into());
    }
    let exact: Vec<_> = (0..2).map(|_| rrt_cut(&["exact", "--rule", "random", "--n", "12", "--ell", "3"])).collect();
    let float: Vec<_> = (0..2)
        .map(|_| rrt_cut(&["exact", "--rule", "last", "--n", "30", "--ell", "2", "--backend", "float"]))
        .collect();
    compared += 4;
    if exact[0] != exact[1] || float[0] != float[1] {
        diffs.push("exact".into());
    }
    let detail = format!("{compared} outputs over worker counts 1 to 4, differing: {diffs:?}");
    assert!(report("10", "determinism", diffs.is_empty(), start.elapsed(), None, &detail));
}
