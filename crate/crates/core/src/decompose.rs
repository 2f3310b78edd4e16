//! Fourier/phase-layer and circulant decompositions built on the normal form.
//!
//! If `A` has unit line sums then `F†AF = 1 ⊕ Ũ` with `Ũ` unitary, because
//! `F e₀ = e/√n`. Scaling `U = L⁻¹AR⁻¹` and recursing on `Ũ` gives
//!
//! ```text
//! U = e^{iφ} D₁ F_n D₂ (𝟙₁⊕F_{n−1}) ⋯ D_{n−1} (𝟙_{n−2}⊕F₂) D_n
//!            (𝟙_{n−2}⊕F₂†) D̃_{n−1} ⋯ (𝟙₁⊕F_{n−1}†) D̃₂ F_n† D̃₁
//! ```
//!
//! with `2n − 1` phase layers around `2(n − 1)` Fourier blocks.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::circulant::{is_circulant, CirculantMatrix};
use crate::diagonal::{wrap_angle, DiagonalUnitary};
use crate::error::{Error, Result};
use crate::matrix::{build_dft, line_sum_deviation, unitarity_defect, ComplexMatrix};
use crate::random::rng_for_stream;
use crate::scaler::{sinkhorn_scale, ScalingOptions, UNITARITY_TOLERANCE};

use rand::Rng;

/// Required accuracy of the line sums handed to [`extract_core`].
pub const CORE_INPUT_TOLERANCE: f64 = 1e-9;

/// Absolute tolerance when reading circulant factors.
pub const CIRCULANT_TOLERANCE: f64 = 1e-10;

/// Returns `Ũ` where `F†AF = 1 ⊕ Ũ`.
///
/// The first row and column of `F†AF` must equal `e₀` to within ten times
/// the line-sum deviation of `A` (plus a rounding floor of `1e-13·n`).
pub fn extract_core(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = a.n();
    if n < 2 {
        return Err(Error::Dimension("core extraction needs n ≥ 2".into()));
    }
    let dev = line_sum_deviation(a);
    if dev >= CORE_INPUT_TOLERANCE {
        return Err(Error::input(format!(
            "line sums deviate from one by {dev:.3e}"
        )));
    }
    let f = build_dft(n)?;
    let conj = &(&f.adjoint() * a) * &f;
    let mut leak = (conj[(0, 0)] - 1.0).norm();
    for k in 1..n {
        leak = leak.max(conj[(0, k)].norm()).max(conj[(k, 0)].norm());
    }
    let allowed = 10.0 * dev + 1e-13 * n as f64;
    if leak > allowed {
        return Err(Error::Inconsistency(format!(
            "F†AF is not block diagonal: leakage {leak:.3e} exceeds {allowed:.3e}"
        )));
    }
    Ok(conj.lower_right_block(1))
}

/// Interlaced phase layers and Fourier blocks.
///
/// `forward[k]` is `D_{k+1}` and `backward[j]` is `D̃_{n−1−j}`, i.e. both
/// lists are stored in product order, left to right.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierDecomposition {
    pub n: usize,
    pub phi: f64,
    pub forward: Vec<DiagonalUnitary>,
    pub backward: Vec<DiagonalUnitary>,
}

/// One element of the interlaced product.
#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    Phases(DiagonalUnitary),
    /// `𝟙_offset ⊕ F_size` (or its adjoint).
    Fourier { size: usize, adjoint: bool, offset: usize },
}

impl FourierDecomposition {
    /// Layers in product order.
    pub fn layers(&self) -> Vec<Layer> {
        let n = self.n;
        let mut out = Vec::with_capacity(4 * n);
        for (k, d) in self.forward.iter().enumerate() {
            out.push(Layer::Phases(d.clone()));
            if k + 1 < n {
                out.push(Layer::Fourier { size: n - k, adjoint: false, offset: k });
            }
        }
        for (j, d) in self.backward.iter().enumerate() {
            let offset = n - 2 - j;
            out.push(Layer::Fourier { size: n - offset, adjoint: true, offset });
            out.push(Layer::Phases(d.clone()));
        }
        out
    }

    pub fn phase_layer_count(&self) -> usize {
        self.forward.len() + self.backward.len()
    }

    pub fn fourier_block_count(&self) -> usize {
        2 * (self.n - 1)
    }

    /// Phases not pinned to zero by the gauge, plus the global phase.
    ///
    /// `D_k` and `D̃_k` for `k ≤ n−1` have their first `k` entries fixed; the
    /// middle layer `D_n` has its first entry fixed.
    pub fn free_parameter_count(&self) -> usize {
        let n = self.n;
        let sides: usize = (1..n).map(|k| 2 * (n - k)).sum();
        sides + (n - 1) + 1
    }

    /// Checks that every gauge-fixed entry is exactly zero.
    pub fn gauge_is_refined(&self) -> bool {
        let n = self.n;
        let pinned = |d: &DiagonalUnitary, count: usize| d.phases()[..count].iter().all(|&p| p == 0.0);
        let forward_ok = self.forward.iter().enumerate().all(|(i, d)| {
            let k = i + 1;
            if k < n {
                pinned(d, k)
            } else {
                pinned(d, 1.min(n))
            }
        });
        let backward_ok = self
            .backward
            .iter()
            .enumerate()
            .all(|(j, d)| pinned(d, n - 1 - j));
        forward_ok && backward_ok
    }

    /// Structural sanity: counts and layer sizes.
    pub fn validate(&self) -> Result<()> {
        let n = self.n;
        if n == 0 {
            return Err(Error::Format("decomposition dimension must be positive".into()));
        }
        if self.forward.len() != n || self.backward.len() != n - 1 {
            return Err(Error::Format(format!(
                "expected {n} forward and {} backward phase layers, got {} and {}",
                n - 1,
                self.forward.len(),
                self.backward.len()
            )));
        }
        if self.forward.iter().chain(&self.backward).any(|d| d.len() != n) {
            return Err(Error::Format("every phase layer must have n entries".into()));
        }
        if !self.phi.is_finite() {
            return Err(Error::Format("global phase must be finite".into()));
        }
        Ok(())
    }
}

/// Evaluates the interlaced product, including `e^{iφ}`.
pub fn reconstruct(d: &FourierDecomposition) -> ComplexMatrix {
    let n = d.n;
    let mut acc = ComplexMatrix::identity(n);
    for layer in d.layers() {
        match layer {
            Layer::Phases(p) => acc = acc.scale_cols(&p.entries()),
            Layer::Fourier { size, adjoint, offset } => {
                let f = build_dft(size).expect("size ≥ 1");
                let block = if adjoint { f.adjoint() } else { f };
                acc = &acc * &block.embed_lower_right(offset);
            }
        }
    }
    acc.scale(Complex64::cis(d.phi))
}

fn annotate_depth(err: Error, depth: usize) -> Error {
    match err {
        Error::NonConvergence(mut nc) => {
            nc.depth = Some(depth);
            Error::NonConvergence(nc)
        }
        Error::Inconsistency(msg) => Error::Inconsistency(format!("{msg} (recursion depth {depth})")),
        other => other,
    }
}

/// Recursive core extraction followed by the refined gauge.
pub fn fourier_decompose(u: &ComplexMatrix, opts: &ScalingOptions) -> Result<FourierDecomposition> {
    fourier_decompose_traced(u, opts, |_, _| {})
}

/// [`fourier_decompose`] that reports every intermediate core with its depth.
pub fn fourier_decompose_traced(
    u: &ComplexMatrix,
    opts: &ScalingOptions,
    mut on_core: impl FnMut(usize, &ComplexMatrix),
) -> Result<FourierDecomposition> {
    let defect = unitarity_defect(u)?;
    if defect >= UNITARITY_TOLERANCE {
        return Err(Error::input(format!(
            "matrix is not unitary (defect {defect:.3e})"
        )));
    }
    let n = u.n();
    let mut forward = Vec::with_capacity(n);
    let mut backward_rev = Vec::with_capacity(n.saturating_sub(1));
    let mut current = u.clone();
    let mut depth = 0;
    let mut seeds = rng_for_stream(opts.seed, 0);

    while current.n() >= 2 {
        let level_opts = opts.with_seed(seeds.random());
        let res = sinkhorn_scale(&current, &level_opts).map_err(|e| annotate_depth(e, depth))?;
        // current = e^{iφ}·D1·A·D2; the level phase rides on D1's block
        forward.push(res.d1.rotate(res.phi).embed_lower_right(depth));
        backward_rev.push(res.d2.embed_lower_right(depth));
        current = extract_core(&res.a).map_err(|e| annotate_depth(e, depth))?;
        depth += 1;
        on_core(depth, &current);
    }
    let last = current[(0, 0)];
    let middle = DiagonalUnitary::new(vec![last.arg()])?.embed_lower_right(n - 1);
    forward.push(middle);
    backward_rev.reverse();

    let mut d = FourierDecomposition {
        n,
        phi: 0.0,
        forward,
        backward: backward_rev,
    };
    refine_gauge(&mut d);
    Ok(d)
}

/// Moves the phase on mode `k−1` of `D_k` and `D̃_k` (for `k ≤ n−1`) into the
/// middle layer `D_n`.
///
/// A phase applied uniformly to modes `k−1..n` commutes with every block
/// between `D_k` and `D_n`, since those act only on modes `≥ k−1`. For
/// `k = 1` the uniform phase covers every mode and becomes `φ`.
fn refine_gauge(d: &mut FourierDecomposition) {
    let n = d.n;
    let mut tail_shift = vec![0.0; n];
    let mut global = 0.0;
    let mut strip = |layer: &mut DiagonalUnitary, k: usize| {
        let s = layer.phases()[k - 1];
        if s == 0.0 {
            return;
        }
        let mut phases = layer.phases().to_vec();
        for (idx, p) in phases.iter_mut().enumerate().skip(k - 1) {
            *p = if idx == k - 1 { 0.0 } else { *p - s };
        }
        *layer = DiagonalUnitary::new(phases).expect("finite");
        if k == 1 {
            global += s;
        } else {
            tail_shift[k - 1] += s;
        }
    };
    for k in 1..n {
        strip(&mut d.forward[k - 1], k);
        strip(&mut d.backward[n - 1 - k], k);
    }
    // the shift recorded at index m applies to every mode ≥ m
    let mut running = 0.0;
    let mut middle = d.forward[n - 1].phases().to_vec();
    for (m, p) in middle.iter_mut().enumerate() {
        running += tail_shift[m];
        *p += running;
    }
    if n >= 1 {
        global += middle[0];
        let first = middle[0];
        middle.iter_mut().for_each(|p| *p -= first);
        middle[0] = 0.0;
    }
    d.forward[n - 1] = DiagonalUnitary::new(middle).expect("finite");
    d.phi = wrap_angle(d.phi + global);
}

/// `U = C1 · (1 ⊕ core) · C2` with circulant `C1`, `C2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CirculantDecomposition {
    pub c1: CirculantMatrix,
    pub c2: CirculantMatrix,
    pub core: ComplexMatrix,
}

impl CirculantDecomposition {
    pub fn reconstruct(&self) -> ComplexMatrix {
        let middle = self.core.embed_lower_right(1);
        &(&self.c1.materialize() * &middle) * &self.c2.materialize()
    }
}

/// Index reversal `k ↦ −k mod n`; `F·P = P·F = F†`.
fn reverse_indices(a: &ComplexMatrix) -> ComplexMatrix {
    let n = a.n();
    ComplexMatrix::from_fn(n, |i, j| a[((n - i) % n, (n - j) % n)])
}

/// Scales `W = F†UF` to `A = L·W·R`; then
/// `U = (F L⁻¹ F†)·(F A F†)·(F R⁻¹ F†)` and `F A F† = 1 ⊕ Ũ`.
pub fn circulant_decompose(u: &ComplexMatrix, opts: &ScalingOptions) -> Result<CirculantDecomposition> {
    let n = u.n();
    if n < 2 {
        return Err(Error::Dimension("circulant decomposition needs n ≥ 2".into()));
    }
    let defect = unitarity_defect(u)?;
    if defect >= UNITARITY_TOLERANCE {
        return Err(Error::input(format!(
            "matrix is not unitary (defect {defect:.3e})"
        )));
    }
    let f = build_dft(n)?;
    let fh = f.adjoint();
    let w = &(&fh * u) * &f;
    let res = sinkhorn_scale(&w, opts)?;

    // F†(PAP)F = FAF†
    let core = extract_core(&reverse_indices(&res.a))?;

    let read = |d: &DiagonalUnitary, which: &str| {
        let m = &(&f * &d.inverse().materialize()) * &fh;
        is_circulant(&m, CIRCULANT_TOLERANCE).ok_or_else(|| {
            Error::Inconsistency(format!("{which} is not circulant within {CIRCULANT_TOLERANCE:e}"))
        })
    };
    Ok(CirculantDecomposition {
        c1: read(&res.l, "C1")?,
        c2: read(&res.r, "C2")?,
        core,
    })
}
