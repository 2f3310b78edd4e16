//! Sampling the set of normal forms of a fixed unitary.
//!
//! Each trial starts the scaler from a random point of the gauge orbit
//! `L₀·U·R₀`, so every trial solves the same problem from a different
//! initial condition. The resulting matrices `A` are clustered by
//! Frobenius distance.

use std::cmp::Ordering;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::matrix::{build_dft, line_sum_deviation, unitarity_defect, ComplexMatrix};
use crate::random::{random_diagonal, rng_for_stream};
use crate::scaler::{sinkhorn_scale, ScalingOptions, ScalingResult, UNITARITY_TOLERANCE};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CensusOptions {
    /// Two normal forms closer than this (Frobenius) are the same cluster.
    pub cluster_threshold: f64,
    /// Minimum chain length before a continuum is suspected.
    pub continuum_min_reps: usize,
    /// Representatives closer than this are linked into a chain.
    pub continuum_link: f64,
    /// A chain must be wider than this to count as a continuum.
    pub continuum_span: f64,
}

impl Default for CensusOptions {
    fn default() -> Self {
        Self {
            cluster_threshold: 1e-6,
            continuum_min_reps: 10,
            continuum_link: 0.1,
            continuum_span: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Representative {
    #[serde(rename = "A")]
    pub a: ComplexMatrix,
    pub hits: usize,
}

/// Reference counts from the literature, reported next to the observation
/// and never asserted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceCounts {
    /// `2^{n−1}`, expected for transversal intersections.
    pub transversal_heuristic: u64,
    /// Conjectured number of normal forms, known for n = 2, 3, 4.
    pub conjectured: Option<u64>,
}

impl ReferenceCounts {
    pub fn for_dimension(n: usize) -> Self {
        Self {
            transversal_heuristic: 1u64.checked_shl((n.max(1) - 1) as u32).unwrap_or(u64::MAX),
            conjectured: match n {
                2 => Some(2),
                3 => Some(6),
                4 => Some(20),
                _ => None,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CensusReport {
    /// SHA-256 over `n` (u64 LE) and the entries' `re, im` (f64 LE), row-major.
    #[serde(rename = "U_fingerprint")]
    pub u_fingerprint: String,
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    pub representatives: Vec<Representative>,
    /// `None` with fewer than two representatives.
    pub min_pairwise_distance: Option<f64>,
    pub continuum_suspected: bool,
    pub failures: usize,
    pub reference: ReferenceCounts,
}

pub fn fingerprint(u: &ComplexMatrix) -> String {
    let mut h = Sha256::new();
    h.update((u.n() as u64).to_le_bytes());
    for z in u.entries() {
        h.update(z.re.to_le_bytes());
        h.update(z.im.to_le_bytes());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Runs one trial: scale `L₀·U·R₀` and express the result relative to `U`.
pub fn census_trial(u: &ComplexMatrix, seed: u64, trial: u64, opts: &ScalingOptions) -> Result<ScalingResult> {
    let mut rng = rng_for_stream(seed, trial);
    let l0 = random_diagonal(u.n(), &mut rng);
    let r0 = random_diagonal(u.n(), &mut rng);
    let start = u.scale_rows(&l0.entries()).scale_cols(&r0.entries());
    let res = sinkhorn_scale(&start, &opts.with_seed(rng.random()))?;
    Ok(ScalingResult::from_diagonals(
        u,
        res.l.compose(&l0),
        r0.compose(&res.r),
        res.sweeps_used,
        res.restarts_used,
    ))
}

pub fn census(u: &ComplexMatrix, trials: usize, seed: u64, opts: &ScalingOptions) -> Result<CensusReport> {
    census_with(u, trials, seed, opts, &CensusOptions::default())
}

pub fn census_with(
    u: &ComplexMatrix,
    trials: usize,
    seed: u64,
    opts: &ScalingOptions,
    copts: &CensusOptions,
) -> Result<CensusReport> {
    if trials == 0 {
        return Err(Error::Usage("census needs at least one trial".into()));
    }
    if copts.cluster_threshold.is_nan() || copts.cluster_threshold <= 0.0 {
        return Err(Error::Usage("cluster_threshold must be positive".into()));
    }
    opts.validate()?;
    let defect = unitarity_defect(u)?;
    if defect >= UNITARITY_TOLERANCE {
        return Err(Error::input(format!(
            "matrix is not unitary (defect {defect:.3e})"
        )));
    }

    // collect keeps trial order, so clustering below is order-independent of scheduling
    let outcomes: Vec<Option<ComplexMatrix>> = (0..trials as u64)
        .into_par_iter()
        .map(|t| census_trial(u, seed, t, opts).ok().map(|r| r.a))
        .collect();

    let failures = outcomes.iter().filter(|o| o.is_none()).count();
    if failures == trials {
        return Err(Error::Census(format!("all {trials} trials failed to converge")));
    }

    let mut reps: Vec<Representative> = Vec::new();
    for a in outcomes.into_iter().flatten() {
        match reps.iter_mut().find(|r| r.a.distance(&a) <= copts.cluster_threshold) {
            Some(r) => r.hits += 1,
            None => reps.push(Representative { a, hits: 1 }),
        }
    }
    reps.sort_by(|x, y| y.hits.cmp(&x.hits).then_with(|| lexicographic(&x.a, &y.a)));

    let distances = pairwise(&reps);
    let min_pairwise_distance = distances
        .iter()
        .enumerate()
        .flat_map(|(i, row)| row[i + 1..].iter().copied())
        .min_by(f64::total_cmp);
    let continuum_suspected = chain_detected(&distances, copts);

    Ok(CensusReport {
        u_fingerprint: fingerprint(u),
        n: u.n(),
        trials,
        seed,
        representatives: reps,
        min_pairwise_distance,
        continuum_suspected,
        failures,
        reference: ReferenceCounts::for_dimension(u.n()),
    })
}

fn lexicographic(a: &ComplexMatrix, b: &ComplexMatrix) -> Ordering {
    a.entries()
        .iter()
        .zip(b.entries())
        .map(|(x, y)| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

fn pairwise(reps: &[Representative]) -> Vec<Vec<f64>> {
    let k = reps.len();
    let mut d = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in i + 1..k {
            let x = reps[i].a.distance(&reps[j].a);
            d[i][j] = x;
            d[j][i] = x;
        }
    }
    d
}

/// A continuum shows up as many representatives joined by short links into
/// one chain that is wide compared with the link length. Isolated normal
/// forms stay in separate components however many trials are run.
fn chain_detected(dist: &[Vec<f64>], copts: &CensusOptions) -> bool {
    let k = dist.len();
    let mut component = vec![usize::MAX; k];
    for start in 0..k {
        if component[start] != usize::MAX {
            continue;
        }
        let mut members = vec![start];
        component[start] = start;
        let mut head = 0;
        while head < members.len() {
            let i = members[head];
            head += 1;
            for j in 0..k {
                if component[j] == usize::MAX && dist[i][j] < copts.continuum_link {
                    component[j] = start;
                    members.push(j);
                }
            }
        }
        if members.len() >= copts.continuum_min_reps {
            let span = members
                .iter()
                .flat_map(|&i| members.iter().map(move |&j| (i, j)))
                .map(|(i, j)| dist[i][j])
                .fold(0.0, f64::max);
            if span > copts.continuum_span {
                return true;
            }
        }
    }
    false
}

/// How the 4×4 identity `F₄ = L·A(φ)·R` is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CounterexampleReading {
    /// Factors exactly as printed: `A₄₃ = e^{iφ}/2`, `L₄₄ = −e^{−iφ}`, `R₄₄ = −ie^{iφ}`.
    AsPrinted,
    /// Only the middle entry fixed: `A₄₃ = e^{−iφ}/2`.
    MiddleConjugated,
    /// `A₄₃ = e^{−iφ}/2`, `L₄₄ = −e^{iφ}`, `R₄₄ = −ie^{−iφ}`.
    Consistent,
}

impl CounterexampleReading {
    pub const ALL: [CounterexampleReading; 3] = [
        CounterexampleReading::AsPrinted,
        CounterexampleReading::MiddleConjugated,
        CounterexampleReading::Consistent,
    ];
}

/// The three factors `(L, A, R)` of the one-parameter family of normal
/// forms of `F₄`.
pub fn counterexample_factors(
    phi: f64,
    reading: CounterexampleReading,
) -> (ComplexMatrix, ComplexMatrix, ComplexMatrix) {
    let e = Complex64::cis(phi);
    let eb = Complex64::cis(-phi);
    let i = Complex64::i();
    let one = Complex64::new(1.0, 0.0);
    let (a43, l44, r44) = match reading {
        CounterexampleReading::AsPrinted => (e, -eb, -i * e),
        CounterexampleReading::MiddleConjugated => (eb, -eb, -i * e),
        CounterexampleReading::Consistent => (eb, -e, -i * eb),
    };
    let l = ComplexMatrix::from_diagonal(&[one, e, one, l44]);
    let r = ComplexMatrix::from_diagonal(&[one, i * eb, one, r44]);
    let a = ComplexMatrix::from_rows(&[
        vec![one, -i * e, one, i * e],
        vec![eb, one, -eb, one],
        vec![one, i * e, one, -i * e],
        vec![-eb, one, a43, one],
    ])
    .expect("finite")
    .scale(Complex64::new(0.5, 0.0));
    (l, a, r)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReadingCheck {
    pub reading: CounterexampleReading,
    /// `‖L·A·R − F₄‖_F`
    pub distance: f64,
    pub middle_line_sum_deviation: f64,
    pub middle_unitarity_defect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleCheck {
    pub phi: f64,
    /// Distance under the consistent reading.
    pub distance: f64,
    /// Line-sum deviation of the middle factor under the consistent reading.
    pub middle_line_sum_deviation: f64,
    /// Every reading, so a reader can see which ones hold.
    pub readings: Vec<ReadingCheck>,
}

impl CounterexampleCheck {
    pub fn satisfied_by(&self, tol: f64) -> Vec<CounterexampleReading> {
        self.readings
            .iter()
            .filter(|r| r.distance < tol && r.middle_line_sum_deviation < tol)
            .map(|r| r.reading)
            .collect()
    }
}

/// Checks the family `F₄ = L(φ)·A(φ)·R(φ)` under every reading of the
/// printed factors.
pub fn verify_counterexample(phi: f64) -> Result<CounterexampleCheck> {
    if !phi.is_finite() {
        return Err(Error::input("phi must be finite"));
    }
    let f4 = build_dft(4)?;
    let readings: Vec<ReadingCheck> = CounterexampleReading::ALL
        .iter()
        .map(|&reading| {
            let (l, a, r) = counterexample_factors(phi, reading);
            let product = &(&l * &a) * &r;
            Ok(ReadingCheck {
                reading,
                distance: product.distance(&f4),
                middle_line_sum_deviation: line_sum_deviation(&a),
                middle_unitarity_defect: unitarity_defect(&a)?,
            })
        })
        .collect::<Result<_>>()?;
    let consistent = readings
        .iter()
        .find(|r| r.reading == CounterexampleReading::Consistent)
        .expect("all readings evaluated");
    Ok(CounterexampleCheck {
        phi,
        distance: consistent.distance,
        middle_line_sum_deviation: consistent.middle_line_sum_deviation,
        readings,
    })
}

/// Representative of the family at `φ`, for comparing against census output.
pub fn counterexample_normal_form(phi: f64) -> ComplexMatrix {
    counterexample_factors(phi, CounterexampleReading::Consistent).1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::haar_random;
    use crate::scaler::{match_diagonal_phases, solve_u2_closed_form};
    use std::f64::consts::PI;

    #[test]
    fn build_dft_matches_printed_f4() {
        let i = Complex64::i();
        let one = Complex64::new(1.0, 0.0);
        let printed = ComplexMatrix::from_rows(&[
            vec![one, one, one, one],
            vec![one, i, -one, -i],
            vec![one, -one, one, -one],
            vec![one, -i, -one, i],
        ])
        .unwrap()
        .scale(Complex64::new(0.5, 0.0));
        assert!(build_dft(4).unwrap().max_abs_diff(&printed) < 1e-15);
    }

    #[test]
    fn counterexample_examples() {
        assert!(verify_counterexample(0.0).unwrap().distance < 1e-12);
        assert!(verify_counterexample(PI / 2.0).unwrap().distance < 1e-12);
        assert!(verify_counterexample(PI / 3.0).unwrap().middle_line_sum_deviation < 1e-12);
    }

    #[test]
    fn printed_reading_only_holds_at_special_points() {
        let at_zero = verify_counterexample(0.0).unwrap();
        assert_eq!(at_zero.satisfied_by(1e-12).len(), 3);
        let generic = verify_counterexample(PI / 3.0).unwrap();
        assert_eq!(generic.satisfied_by(1e-12), vec![CounterexampleReading::Consistent]);
        let printed = &generic.readings[0];
        assert!(printed.distance > 0.1 && printed.middle_line_sum_deviation > 0.1);
        // fixing only the middle entry gives a valid normal form that does not reproduce F₄
        let middle = &generic.readings[1];
        assert!(middle.middle_line_sum_deviation < 1e-12 && middle.distance > 0.1);
    }

    #[test]
    fn fingerprint_is_stable_and_sensitive() {
        let u = haar_random(3, 1).unwrap();
        assert_eq!(fingerprint(&u), fingerprint(&u.clone()));
        assert_ne!(fingerprint(&u), fingerprint(&haar_random(3, 2).unwrap()));
        assert_eq!(fingerprint(&u).len(), 64);
    }

    #[test]
    fn identity_has_one_form() {
        let rep = census(&ComplexMatrix::identity(3), 50, 1, &ScalingOptions::default()).unwrap();
        assert_eq!(rep.representatives.len(), 1);
        assert_eq!(rep.representatives[0].hits, 50);
        assert!(rep.representatives[0].a.max_abs_diff(&ComplexMatrix::identity(3)) < 1e-9);
        assert!(!rep.continuum_suspected);
        assert_eq!(rep.min_pairwise_distance, None);
    }

    #[test]
    fn u2_census_matches_closed_form() {
        let u = haar_random(2, 31).unwrap();
        let rep = census(&u, 200, 4, &ScalingOptions::default()).unwrap();
        assert_eq!(rep.representatives.len(), 2);
        let hits: usize = rep.representatives.iter().map(|r| r.hits).sum();
        assert_eq!(hits + rep.failures, 200);
        let exact = solve_u2_closed_form(&u).unwrap();
        for r in &rep.representatives {
            assert!(exact.iter().any(|e| e.a.distance(&r.a) < 1e-8));
            assert!(match_diagonal_phases(&u, &r.a).is_some());
        }
        assert!(rep.representatives[0].hits >= rep.representatives[1].hits);
    }

    #[test]
    fn prefix_property_and_monotone_coverage() {
        let u = haar_random(3, 8).unwrap();
        let opts = ScalingOptions::default();
        let small = census(&u, 20, 6, &opts).unwrap();
        let large = census(&u, 60, 6, &opts).unwrap();
        assert!(large.representatives.len() >= small.representatives.len());
        for r in &small.representatives {
            assert!(large.representatives.iter().any(|q| q.a.distance(&r.a) <= 1e-6));
        }
        for t in 0..5 {
            let a = census_trial(&u, 6, t, &opts).unwrap();
            let b = census_trial(&u, 6, t, &opts).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn rejects_zero_trials() {
        assert!(matches!(
            census(&ComplexMatrix::identity(2), 0, 0, &ScalingOptions::default()),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn all_failures_is_a_census_error() {
        let opts = ScalingOptions {
            tol: 1e-17,
            max_sweeps: 3,
            max_restarts: 0,
            ..ScalingOptions::default()
        };
        assert!(matches!(
            census(&haar_random(4, 0).unwrap(), 4, 0, &opts),
            Err(Error::Census(_))
        ));
    }

    #[test]
    fn reference_counts() {
        let r = ReferenceCounts::for_dimension(3);
        assert_eq!(r.transversal_heuristic, 4);
        assert_eq!(r.conjectured, Some(6));
        assert_eq!(ReferenceCounts::for_dimension(4).conjectured, Some(20));
        assert_eq!(ReferenceCounts::for_dimension(7).conjectured, None);
    }
}
