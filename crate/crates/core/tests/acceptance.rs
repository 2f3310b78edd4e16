//! Acceptance suite. Prints one line per criterion and exits non-zero if
//! any pass/fail criterion fails. Criterion 10 is report-only.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use unitary_sinkhorn::census::{census, CensusReport};
use unitary_sinkhorn::circuit::{emit_multiport, CircuitFormat};
use unitary_sinkhorn::random::{random_diagonal, rng_from_seed};
use unitary_sinkhorn::scaler::{sinkhorn_scale_observed, StepKind};
use unitary_sinkhorn::{
    build_dft, circulant_decompose, fourier_decompose, haar_random, is_circulant, line_sums, reconstruct,
    solve_u2_closed_form, verify_counterexample, ComplexMatrix, ScalingOptions,
};

enum Verdict {
    Pass,
    Fail,
    Report,
}

struct Outcome {
    id: &'static str,
    verdict: Verdict,
    summary: String,
    details: Vec<String>,
}

impl Outcome {
    fn check(id: &'static str, pass: bool, summary: String) -> Self {
        Outcome {
            id,
            verdict: if pass { Verdict::Pass } else { Verdict::Fail },
            summary,
            details: Vec::new(),
        }
    }
}

fn haar_seed(n: usize, sample: usize) -> u64 {
    (1000 * n + sample) as u64
}

/// Criteria 1-4 share the same 1100 scalings.
fn scaling_criteria() -> Vec<Outcome> {
    let opts = ScalingOptions::default();
    let mut converged = 0;
    let mut total = 0;
    let mut zero_restart = 0;
    let mut worst_residual = 0.0f64;
    let mut gauge_exact = true;
    let mut worst_col_sum = 0.0f64;
    let mut lemma_checked = 0;
    let mut worst_drop = 0.0f64;
    let mut worst_excess = f64::NEG_INFINITY;
    let mut per_n = Vec::new();
    let mut elapsed = Duration::ZERO;

    for n in 2..=12 {
        let mut zero_n = 0;
        let mut failures_n = 0;
        for s in 0..100 {
            let u = haar_random(n, haar_seed(n, s)).unwrap();
            let mut prev: Option<f64> = None;
            let start = Instant::now();
            let res = sinkhorn_scale_observed(&u, &opts, |ev| {
                // a restart may lower the functional; only the steps themselves must not
                if let (Some(p), true) = (prev, ev.kind != StepKind::Restart) {
                    worst_drop = worst_drop.max(p - ev.functional);
                }
                worst_excess = worst_excess.max(ev.functional - n as f64);
                prev = Some(ev.functional);
            });
            elapsed += start.elapsed();
            total += 1;
            let Ok(res) = res else {
                failures_n += 1;
                continue;
            };
            let within_budget = res.deviation < 1e-10 && res.sweeps_used <= 100_000 * 11 && res.restarts_used <= 10;
            if !within_budget {
                failures_n += 1;
                continue;
            }
            converged += 1;
            if res.restarts_used == 0 {
                zero_restart += 1;
                zero_n += 1;
            }

            worst_residual = worst_residual.max(res.reconstruct().distance(&u));
            gauge_exact &= res.d1.phases()[0] == 0.0 && res.d2.phases()[0] == 0.0;

            let sums = line_sums(&res.a);
            let row_dev = sums.rows.iter().map(|r| (r - 1.0).norm()).fold(0.0, f64::max);
            if row_dev < 1e-10 {
                lemma_checked += 1;
                let col_dev = sums.cols.iter().map(|c| (c - 1.0).norm()).fold(0.0, f64::max);
                worst_col_sum = worst_col_sum.max(col_dev);
            }
        }
        per_n.push(format!("n={n:<2} zero-restart {zero_n:>3}/100  failures {failures_n}"));
    }

    let fraction = zero_restart as f64 / total as f64;
    let mut c1 = Outcome::check(
        "1",
        converged == total && fraction >= 0.99 && elapsed.as_secs_f64() < 120.0,
        format!(
            "scaling of 100 Haar unitaries per n=2..12: {converged}/{total} converged within budget, \
             zero-restart fraction {:.1}% (need >= 99%), {:.1} s",
            100.0 * fraction,
            elapsed.as_secs_f64()
        ),
    );
    c1.details = per_n;
    if fraction < 0.99 {
        c1.details.push(
            "the phase-alignment steps increase Re sum(A) monotonically and can stall at \
             spurious local maxima; those runs need a restart"
                .into(),
        );
    }

    vec![
        c1,
        Outcome::check(
            "2",
            converged > 0 && worst_residual < 1e-11 && gauge_exact,
            format!(
                "reconstruction e^(i phi) D1 A D2: worst residual {worst_residual:.2e} (< 1e-11), \
                 (D1)11 = (D2)11 = 1 exactly: {gauge_exact}"
            ),
        ),
        Outcome::check(
            "3",
            lemma_checked > 0 && worst_col_sum < 1e-9,
            format!(
                "unit row sums imply unit column sums: {lemma_checked} matrices, worst |A^T e - e| {worst_col_sum:.2e} (< 1e-9)"
            ),
        ),
        Outcome::check(
            "4",
            worst_drop <= 1e-13 && worst_excess <= 1e-12,
            format!(
                "functional monotone: largest per-step drop {worst_drop:.2e} (<= 1e-13), \
                 largest excess over n {worst_excess:.2e} (<= 1e-12)"
            ),
        ),
    ]
}

fn count_layers(json: &[u8]) -> (usize, usize) {
    let v: serde_json::Value = serde_json::from_slice(json).unwrap();
    let layers = v["layers"].as_array().unwrap();
    let phases = layers.iter().filter(|l| l["type"] == "phases").count();
    (phases, layers.len() - phases)
}

fn fourier_criterion() -> Outcome {
    let opts = ScalingOptions::default();
    let mut worst = 0.0f64;
    let mut structure_ok = true;
    let mut failures = 0;
    for n in 2..=10 {
        for s in 0..50 {
            let u = haar_random(n, haar_seed(n, 500 + s)).unwrap();
            let Ok(d) = fourier_decompose(&u, &opts) else {
                failures += 1;
                continue;
            };
            worst = worst.max(reconstruct(&d).distance(&u));
            let (phases, blocks) = count_layers(&emit_multiport(&d, CircuitFormat::Json).unwrap());
            structure_ok &= blocks == 2 * (n - 1) && phases == 2 * n - 1 && d.free_parameter_count() == n * n;
            if n == 4 {
                structure_ok &= (phases, blocks) == (7, 6);
            }
        }
    }
    Outcome::check(
        "5",
        failures == 0 && worst < 1e-9 && structure_ok,
        format!(
            "Fourier decomposition of 50 Haar unitaries per n=2..10: worst reconstruction {worst:.2e} (< 1e-9), \
             2(n-1) blocks / 2n-1 phase layers / n^2 parameters: {structure_ok}, failures {failures}"
        ),
    )
}

fn circulant_criterion() -> Outcome {
    let opts = ScalingOptions::default();
    let mut worst = 0.0f64;
    let mut circulant_ok = true;
    let mut failures = 0;
    for n in 2..=10 {
        for s in 0..50 {
            let u = haar_random(n, haar_seed(n, 700 + s)).unwrap();
            let Ok(d) = circulant_decompose(&u, &opts) else {
                failures += 1;
                continue;
            };
            circulant_ok &= is_circulant(&d.c1.materialize(), 1e-10).is_some()
                && is_circulant(&d.c2.materialize(), 1e-10).is_some();
            worst = worst.max(d.reconstruct().distance(&u));
        }
    }
    Outcome::check(
        "6",
        failures == 0 && worst < 1e-9 && circulant_ok,
        format!(
            "circulant decomposition of 50 Haar unitaries per n=2..10: both factors circulant at 1e-10: {circulant_ok}, \
             worst reconstruction {worst:.2e} (< 1e-9), failures {failures}"
        ),
    )
}

fn counterexample_criterion() -> Outcome {
    let mut worst_distance = 0.0f64;
    let mut worst_line_sums = 0.0f64;
    let mut details = Vec::new();
    for k in 0..8 {
        let phi = k as f64 * PI / 4.0;
        let check = verify_counterexample(phi).unwrap();
        worst_distance = worst_distance.max(check.distance);
        worst_line_sums = worst_line_sums.max(check.middle_line_sum_deviation);
        details.push(format!(
            "phi={k}pi/4: readings that hold: {:?}",
            check.satisfied_by(1e-12)
        ));
    }
    let mut o = Outcome::check(
        "7",
        worst_distance < 1e-12 && worst_line_sums < 1e-12,
        format!(
            "F4 family at phi=k pi/4 (consistent reading): worst distance {worst_distance:.2e}, \
             worst middle line-sum deviation {worst_line_sums:.2e} (both < 1e-12)"
        ),
    );
    o.details = details;
    o
}

fn u2_criterion() -> Outcome {
    let opts = ScalingOptions::default();
    let mut good = 0;
    let mut details = Vec::new();
    for s in 0..20u64 {
        let u = haar_random(2, 9000 + s).unwrap();
        assert!(u[(0, 1)].norm() > 1e-6 && u[(0, 0)].norm() > 1e-6);
        let report = census(&u, 200, s, &opts).unwrap();
        let exact = solve_u2_closed_form(&u).unwrap();
        let matched = report
            .representatives
            .iter()
            .all(|r| exact.iter().any(|e| e.a.distance(&r.a) < 1e-8));
        if report.representatives.len() == 2 && matched {
            good += 1;
        } else {
            details.push(format!(
                "seed {s}: {} representatives, all match closed form: {matched}",
                report.representatives.len()
            ));
        }
    }
    let mut o = Outcome::check(
        "8",
        good == 20,
        format!("U(2) census, 200 trials each: {good}/20 unitaries have exactly the 2 closed-form normal forms"),
    );
    o.details = details;
    o
}

fn continuum_criterion() -> Outcome {
    let opts = ScalingOptions::default();
    let f4: CensusReport = census(&build_dft(4).unwrap(), 500, 0, &opts).unwrap();
    let id = census(&ComplexMatrix::identity(4), 500, 0, &opts).unwrap();
    Outcome::check(
        "9",
        f4.continuum_suspected && id.representatives.len() == 1,
        format!(
            "F4 census (500 trials): continuum_suspected={} with {} representatives; identity: {} representative(s)",
            f4.continuum_suspected,
            f4.representatives.len(),
            id.representatives.len()
        ),
    )
}

fn exploratory_counts() -> Outcome {
    let opts = ScalingOptions::default();
    let mut counts = Vec::new();
    let mut reference = None;
    for s in 0..5u64 {
        let u = haar_random(3, 7000 + s).unwrap();
        let report = census(&u, 200, s, &opts).unwrap();
        counts.push(report.representatives.len());
        reference = Some(report.reference);
    }
    let reference = reference.unwrap();
    Outcome {
        id: "10",
        verdict: Verdict::Report,
        summary: format!(
            "normal forms of 5 Haar U(3), 200 trials each: observed {counts:?}; conjectured {}, transversal heuristic 2^(n-1) = {}",
            reference.conjectured.unwrap(),
            reference.transversal_heuristic
        ),
        details: Vec::new(),
    }
}

fn duality_criterion() -> Outcome {
    let mut rng = rng_from_seed(11);
    let mut ok = true;
    let mut worst_circ = 0.0f64;
    let mut worst_back = 0.0f64;
    for n in 2..=16 {
        let f = build_dft(n).unwrap();
        let fh = f.adjoint();
        for _ in 0..50 {
            let d = random_diagonal(n, &mut rng).materialize();
            let m = &(&f * &d) * &fh;
            match is_circulant(&m, 1e-10) {
                Some(c) => worst_circ = worst_circ.max(c.materialize().max_abs_diff(&m)),
                None => ok = false,
            }
            let back = &(&fh * &m) * &f;
            worst_back = worst_back.max(back.max_abs_diff(&d));
        }
    }
    Outcome::check(
        "11",
        ok && worst_back < 1e-10,
        format!(
            "F D F^dagger for 50 random diagonals per n=2..16: circulant at 1e-10: {ok} (worst {worst_circ:.2e}), \
             inverse conjugation returns D within {worst_back:.2e} (< 1e-10)"
        ),
    )
}

fn main() -> ExitCode {
    let start = Instant::now();
    let mut outcomes = scaling_criteria();
    outcomes.push(fourier_criterion());
    outcomes.push(circulant_criterion());
    outcomes.push(counterexample_criterion());
    outcomes.push(u2_criterion());
    outcomes.push(continuum_criterion());
    outcomes.push(exploratory_counts());
    outcomes.push(duality_criterion());

    let mut failed = 0;
    println!();
    for o in &outcomes {
        let tag = match o.verdict {
            Verdict::Pass => "PASS",
            Verdict::Fail => {
                failed += 1;
                "FAIL"
            }
            Verdict::Report => "INFO",
        };
        println!("{tag} [{:>2}] {}", o.id, o.summary);
        for d in &o.details {
            println!("          {d}");
        }
    }
    println!("acceptance: {failed} failed, total {:.1} s", start.elapsed().as_secs_f64());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
