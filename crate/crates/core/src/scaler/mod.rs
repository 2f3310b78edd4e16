//! Sinkhorn-type scaling of unitary matrices.
//!
//! Given a unitary `U`, find diagonal unitaries `L`, `R` such that
//! `A = L·U·R` has every row and column sum equal to one. The iteration
//! alternates two phase-alignment steps: multiply each row of `A` by the
//! conjugate phase of its row sum, then do the same for columns. Each step
//! can only increase `f(A) = Re Σ_ij A_ij`, which for unitary `A` satisfies
//! `‖Ae − e‖² = 2(n − f(A))`, so `f = n` exactly at a normal form.
//!
//! `f` has local maxima that are not normal forms. When progress stalls,
//! the accumulated diagonals are perturbed by seeded random phases and the
//! ascent continues (a "restart").

mod closed_form;

use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::diagonal::{wrap_angle, DiagonalUnitary};
use crate::error::{Error, Result};
use crate::matrix::{line_sum_deviation, unitarity_defect, ComplexMatrix};
use crate::random::rng_from_seed;

pub use closed_form::{match_diagonal_phases, solve_u2_closed_form};

/// Line sums with modulus below this are treated as zero and left unaligned.
pub const ZERO_SUM_THRESHOLD: f64 = 1e-14;

/// Inputs must be unitary to this Frobenius defect.
pub const UNITARITY_TOLERANCE: f64 = 1e-10;

/// Sweeps per stagnation window.
pub const STAGNATION_WINDOW: usize = 50;

/// A window stagnates when the deviation shrank by less than this relative amount.
pub const STAGNATION_DEVIATION_RATIO: f64 = 1e-3;

/// Half-width of the first restart perturbation, in radians.
pub const RESTART_PERTURBATION: f64 = std::f64::consts::FRAC_PI_4;

/// Half-width for the `k`-th restart (1-based): doubles from
/// [`RESTART_PERTURBATION`] up to π. A spurious maximum often has a basin
/// wider than π/4, so a fixed width keeps falling back into it.
pub fn restart_magnitude(k: usize) -> f64 {
    let doublings = k.saturating_sub(1).min(2) as i32;
    (RESTART_PERTURBATION * 2f64.powi(doublings)).min(std::f64::consts::PI)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingOptions {
    /// Target for the maximum line-sum deviation from one.
    pub tol: f64,
    /// Sweep budget per attempt; the total budget is `max_sweeps · (max_restarts + 1)`.
    pub max_sweeps: usize,
    pub max_restarts: usize,
    /// Minimum functional gain per stagnation window before a restart is considered.
    pub stagnation_delta: f64,
    /// Seed for restart perturbations.
    pub seed: u64,
}

impl Default for ScalingOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_sweeps: 100_000,
            max_restarts: 10,
            stagnation_delta: 1e-14,
            seed: 0,
        }
    }
}

impl ScalingOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::Usage(format!("tol must be positive, got {}", self.tol)));
        }
        if !(self.stagnation_delta > 0.0 && self.stagnation_delta.is_finite()) {
            return Err(Error::Usage(format!(
                "stagnation_delta must be positive, got {}",
                self.stagnation_delta
            )));
        }
        if self.max_sweeps == 0 {
            return Err(Error::Usage("max_sweeps must be at least 1".into()));
        }
        Ok(())
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn with_tol(self, tol: f64) -> Self {
        Self { tol, ..self }
    }
}

/// One normal form `A = L·U·R`, together with its gauge-fixed inverse
/// `U = e^{iφ}·D1·A·D2` where `(D1)₁₁ = (D2)₁₁ = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingResult {
    pub l: DiagonalUnitary,
    pub r: DiagonalUnitary,
    pub a: ComplexMatrix,
    pub phi: f64,
    pub d1: DiagonalUnitary,
    pub d2: DiagonalUnitary,
    pub sweeps_used: usize,
    pub restarts_used: usize,
    pub deviation: f64,
    pub functional: f64,
}

impl ScalingResult {
    /// Builds `A = L·U·R` from the diagonals and fixes the gauge.
    pub fn from_diagonals(
        u: &ComplexMatrix,
        l: DiagonalUnitary,
        r: DiagonalUnitary,
        sweeps_used: usize,
        restarts_used: usize,
    ) -> Self {
        let a = u.scale_rows(&l.entries()).scale_cols(&r.entries());
        let (phi, d1, d2) = gauge_fix(&l, &r);
        let deviation = line_sum_deviation(&a);
        let functional = total_sum_functional(&a);
        Self {
            l,
            r,
            a,
            phi,
            d1,
            d2,
            sweeps_used,
            restarts_used,
            deviation,
            functional,
        }
    }

    /// `e^{iφ}·D1·A·D2`
    pub fn reconstruct(&self) -> ComplexMatrix {
        self.a
            .scale_rows(&self.d1.entries())
            .scale_cols(&self.d2.entries())
            .scale(Complex64::cis(self.phi))
    }
}

/// `φ = arg((L⁻¹)₁₁·(R⁻¹)₁₁)`, `D1 = L⁻¹/(L⁻¹)₁₁`, `D2 = R⁻¹/(R⁻¹)₁₁`.
fn gauge_fix(l: &DiagonalUnitary, r: &DiagonalUnitary) -> (f64, DiagonalUnitary, DiagonalUnitary) {
    let (l0, r0) = (l.phases()[0], r.phases()[0]);
    let phi = wrap_angle(-(l0 + r0));
    let shift = |d: &DiagonalUnitary, first: f64| {
        DiagonalUnitary::new(d.phases().iter().map(|&t| first - t).collect()).expect("finite")
    };
    (phi, shift(l, l0), shift(r, r0))
}

// Wire form: {"phi", "d1", "d2", "A", "diagnostics"}. L and R are not
// stored; on load they are rebuilt as L⁻¹ = e^{iφ}·D1 and R⁻¹ = D2.
#[derive(Serialize, Deserialize)]
struct ScalingResultDoc {
    phi: f64,
    d1: DiagonalUnitary,
    d2: DiagonalUnitary,
    #[serde(rename = "A")]
    a: ComplexMatrix,
    diagnostics: Diagnostics,
}

#[derive(Serialize, Deserialize)]
struct Diagnostics {
    sweeps: usize,
    restarts: usize,
    deviation: f64,
    #[serde(default)]
    functional: Option<f64>,
}

impl Serialize for ScalingResult {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ScalingResultDoc {
            phi: self.phi,
            d1: self.d1.clone(),
            d2: self.d2.clone(),
            a: self.a.clone(),
            diagnostics: Diagnostics {
                sweeps: self.sweeps_used,
                restarts: self.restarts_used,
                deviation: self.deviation,
                functional: Some(self.functional),
            },
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ScalingResult {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let doc = ScalingResultDoc::deserialize(d)?;
        let n = doc.a.n();
        if doc.d1.len() != n || doc.d2.len() != n {
            return Err(D::Error::custom("d1/d2 length must match A"));
        }
        let l = doc.d1.rotate(doc.phi).inverse();
        let r = doc.d2.inverse();
        Ok(Self {
            l,
            r,
            functional: doc.diagnostics.functional.unwrap_or_else(|| total_sum_functional(&doc.a)),
            a: doc.a,
            phi: doc.phi,
            d1: doc.d1,
            d2: doc.d2,
            sweeps_used: doc.diagnostics.sweeps,
            restarts_used: doc.diagnostics.restarts,
            deviation: doc.diagnostics.deviation,
        })
    }
}

/// Budget exhausted without reaching the tolerance.
#[derive(Debug, Clone)]
pub struct NonConvergence {
    /// Lowest-deviation iterate seen.
    pub best: ScalingResult,
    pub sweeps: usize,
    pub restarts: usize,
    pub tol: f64,
    /// Recursion depth when raised from inside a decomposition.
    pub depth: Option<usize>,
}

impl fmt::Display for NonConvergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "scaling did not converge: best deviation {:.3e} > tol {:.1e} after {} sweeps and {} restarts",
            self.best.deviation, self.tol, self.sweeps, self.restarts
        )?;
        if let Some(d) = self.depth {
            write!(f, " (recursion depth {d})")?;
        }
        Ok(())
    }
}

/// Result of one phase-alignment step.
#[derive(Debug, Clone)]
pub struct PhaseStep {
    pub diagonal: DiagonalUnitary,
    pub matrix: ComplexMatrix,
    /// Lines whose sum was below [`ZERO_SUM_THRESHOLD`] and were left untouched.
    pub degenerate: Vec<usize>,
}

/// Unit factors `conj(s)/|s|` that rotate each sum onto the positive real axis.
fn alignment_factors(sums: &[Complex64]) -> (Vec<Complex64>, Vec<usize>) {
    let mut degenerate = Vec::new();
    let factors = sums
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let m = s.norm();
            if m < ZERO_SUM_THRESHOLD {
                degenerate.push(k);
                Complex64::new(1.0, 0.0)
            } else {
                s.conj() / m
            }
        })
        .collect();
    (factors, degenerate)
}

pub fn row_phase_step(a: &ComplexMatrix) -> PhaseStep {
    let (factors, degenerate) = alignment_factors(&a.row_sums());
    let diagonal = DiagonalUnitary::from_unit_complex(&factors);
    PhaseStep {
        matrix: a.scale_rows(&diagonal.entries()),
        diagonal,
        degenerate,
    }
}

pub fn col_phase_step(a: &ComplexMatrix) -> PhaseStep {
    let (factors, degenerate) = alignment_factors(&a.col_sums());
    let diagonal = DiagonalUnitary::from_unit_complex(&factors);
    PhaseStep {
        matrix: a.scale_cols(&diagonal.entries()),
        diagonal,
        degenerate,
    }
}

/// `Re Σ_ij A_ij`
pub fn total_sum_functional(a: &ComplexMatrix) -> f64 {
    a.entries().iter().map(|z| z.re).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepKind {
    Row,
    Column,
    /// Random perturbation after stagnation; the functional may drop here.
    Restart,
}

/// Emitted after every step of [`sinkhorn_scale_observed`].
#[derive(Debug, Clone, Copy)]
pub struct StepEvent {
    pub sweep: usize,
    pub kind: StepKind,
    /// `Re Σ A_ij` after the step.
    pub functional: f64,
}

pub fn sinkhorn_scale(u: &ComplexMatrix, opts: &ScalingOptions) -> Result<ScalingResult> {
    sinkhorn_scale_observed(u, opts, |_| {})
}

/// [`sinkhorn_scale`] with a callback invoked after every step.
///
/// The iteration works on the diagonals directly: the row sums of
/// `diag(l)·U·diag(r)` are `l ∘ (U r)` and its column sums are `r ∘ (Uᵀ l)`,
/// so `A` is only materialized once at the end.
pub fn sinkhorn_scale_observed(
    u: &ComplexMatrix,
    opts: &ScalingOptions,
    mut observer: impl FnMut(&StepEvent),
) -> Result<ScalingResult> {
    opts.validate()?;
    let defect = unitarity_defect(u)?;
    if defect >= UNITARITY_TOLERANCE {
        return Err(Error::input(format!(
            "matrix is not unitary (defect {defect:.3e})"
        )));
    }

    let n = u.n();
    let one = Complex64::new(1.0, 0.0);
    let mut l = vec![one; n];
    let mut r = vec![one; n];
    let mut rng = rng_from_seed(opts.seed);

    let budget = opts.max_sweeps.saturating_mul(opts.max_restarts + 1);
    let mut sweeps = 0usize;
    let mut restarts = 0usize;
    let mut attempt_sweeps = 0usize;
    let mut window_start = 0usize;
    let mut window_f = f64::NEG_INFINITY;
    let mut window_dev = f64::INFINITY;
    let mut best: Option<(f64, Vec<Complex64>, Vec<Complex64>)> = None;

    // z = Uᵀl for the current l; column sums of A are r ∘ z
    let mut z = u.transpose_matvec(&l);

    loop {
        let y = u.matvec(&r);
        let mut dev = 0.0f64;
        let mut f = 0.0;
        for k in 0..n {
            let row = l[k] * y[k];
            let col = r[k] * z[k];
            f += row.re;
            dev = dev.max((row - 1.0).norm()).max((col - 1.0).norm());
        }
        if best.as_ref().is_none_or(|b| dev < b.0) {
            best = Some((dev, l.clone(), r.clone()));
        }

        if dev <= opts.tol {
            let result = finish(u, &l, &r, sweeps, restarts);
            // the phase round trip can nudge a borderline iterate back over tol
            if result.deviation <= opts.tol {
                return Ok(result);
            }
        }

        if sweeps >= budget {
            return Err(non_convergence(u, best, sweeps, restarts, opts.tol));
        }

        if attempt_sweeps - window_start >= STAGNATION_WINDOW || attempt_sweeps >= opts.max_sweeps {
            let stalled = f - window_f < opts.stagnation_delta
                && dev > (1.0 - STAGNATION_DEVIATION_RATIO) * window_dev;
            if stalled || attempt_sweeps >= opts.max_sweeps {
                if restarts >= opts.max_restarts {
                    return Err(non_convergence(u, best, sweeps, restarts, opts.tol));
                }
                let width = restart_magnitude(restarts + 1);
                for x in l.iter_mut().chain(r.iter_mut()) {
                    let t = rng.random_range(-width..=width);
                    *x *= Complex64::cis(t);
                }
                restarts += 1;
                attempt_sweeps = 0;
                window_start = 0;
                window_f = f64::NEG_INFINITY;
                window_dev = f64::INFINITY;
                z = u.transpose_matvec(&l);
                let f_new = l.iter().zip(&u.matvec(&r)).map(|(a, b)| (a * b).re).sum();
                observer(&StepEvent {
                    sweep: sweeps,
                    kind: StepKind::Restart,
                    functional: f_new,
                });
                continue;
            }
            window_start = attempt_sweeps;
            window_f = f;
            window_dev = dev;
        }

        // row step: row sums l_k·y_k
        let mut f_row = 0.0;
        for k in 0..n {
            let s = l[k] * y[k];
            let m = s.norm();
            if m >= ZERO_SUM_THRESHOLD {
                l[k] *= s.conj() / m;
                let m = l[k].norm();
                l[k] /= m;
            }
            f_row += (l[k] * y[k]).re;
        }
        observer(&StepEvent {
            sweep: sweeps,
            kind: StepKind::Row,
            functional: f_row,
        });

        // column step: column sums r_j·z_j
        z = u.transpose_matvec(&l);
        let mut f_col = 0.0;
        for j in 0..n {
            let s = r[j] * z[j];
            let m = s.norm();
            if m >= ZERO_SUM_THRESHOLD {
                r[j] *= s.conj() / m;
                let m = r[j].norm();
                r[j] /= m;
            }
            f_col += (r[j] * z[j]).re;
        }
        observer(&StepEvent {
            sweep: sweeps,
            kind: StepKind::Column,
            functional: f_col,
        });

        sweeps += 1;
        attempt_sweeps += 1;
    }
}

fn finish(
    u: &ComplexMatrix,
    l: &[Complex64],
    r: &[Complex64],
    sweeps: usize,
    restarts: usize,
) -> ScalingResult {
    ScalingResult::from_diagonals(
        u,
        DiagonalUnitary::from_unit_complex(l),
        DiagonalUnitary::from_unit_complex(r),
        sweeps,
        restarts,
    )
}

fn non_convergence(
    u: &ComplexMatrix,
    best: Option<(f64, Vec<Complex64>, Vec<Complex64>)>,
    sweeps: usize,
    restarts: usize,
    tol: f64,
) -> Error {
    let (_, l, r) = best.expect("at least one iterate is evaluated");
    Error::NonConvergence(Box::new(NonConvergence {
        best: finish(u, &l, &r, sweeps, restarts),
        sweeps,
        restarts,
        tol,
        depth: None,
    }))
}
