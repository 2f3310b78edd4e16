//! Seeded randomness.
//!
//! Every random draw in the crate comes from `rand_pcg::Pcg64`
//! (PCG XSL RR 128/64) seeded through `SeedableRng::seed_from_u64`, so
//! results depend only on the seed and are identical across platforms.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use rand_pcg::Pcg64;

use crate::diagonal::DiagonalUnitary;
use crate::error::{Error, Result};
use crate::matrix::ComplexMatrix;

pub type SeededRng = Pcg64;

pub fn rng_from_seed(seed: u64) -> SeededRng {
    Pcg64::seed_from_u64(seed)
}

/// Independent generator for sub-task `stream` of a seeded computation.
pub fn rng_for_stream(seed: u64, stream: u64) -> SeededRng {
    // splitmix64 finalizer over the pair keeps nearby (seed, stream) pairs uncorrelated
    let mut z = seed ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    Pcg64::seed_from_u64(z ^ (z >> 31))
}

/// Uniform phases on `[0, 2π)`.
pub fn random_diagonal<R: Rng>(n: usize, rng: &mut R) -> DiagonalUnitary {
    let phases = (0..n).map(|_| rng.random::<f64>() * TAU).collect();
    DiagonalUnitary::new(phases).expect("finite phases")
}

fn complex_gaussian<R: Rng>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Householder QR of a square matrix. Returns `(Q, diag(R))`.
fn householder_qr(a: &ComplexMatrix) -> (ComplexMatrix, Vec<Complex64>) {
    let n = a.n();
    let mut r = a.clone();
    let mut q = ComplexMatrix::identity(n);
    let mut diag = Vec::with_capacity(n);

    for k in 0..n {
        let norm_x = (k..n).map(|i| r[(i, k)].norm_sqr()).sum::<f64>().sqrt();
        let x0 = r[(k, k)];
        if norm_x == 0.0 {
            diag.push(Complex64::new(0.0, 0.0));
            continue;
        }
        let phase = if x0.norm() > 0.0 { x0 / x0.norm() } else { Complex64::new(1.0, 0.0) };
        let alpha = -phase * norm_x;
        // v = x − αe₁, reflector H = 𝟙 − 2vv†/‖v‖² maps x to αe₁
        let mut v: Vec<Complex64> = (k..n).map(|i| r[(i, k)]).collect();
        v[0] -= alpha;
        let v_norm_sqr: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if v_norm_sqr == 0.0 {
            diag.push(x0);
            continue;
        }
        for j in k..n {
            let dot: Complex64 = v.iter().enumerate().map(|(t, vt)| vt.conj() * r[(k + t, j)]).sum();
            let s = dot * (2.0 / v_norm_sqr);
            for (t, vt) in v.iter().enumerate() {
                r[(k + t, j)] -= vt * s;
            }
        }
        // Q ← Q·H
        for i in 0..n {
            let dot: Complex64 = v.iter().enumerate().map(|(t, vt)| q[(i, k + t)] * vt).sum();
            let s = dot * (2.0 / v_norm_sqr);
            for (t, vt) in v.iter().enumerate() {
                q[(i, k + t)] -= s * vt.conj();
            }
        }
        diag.push(r[(k, k)]);
    }
    (q, diag)
}

/// Haar-distributed unitary: QR of a complex Ginibre matrix with the
/// R-diagonal phases moved into Q so that R has a positive diagonal.
pub fn haar_random(n: usize, seed: u64) -> Result<ComplexMatrix> {
    if n == 0 {
        return Err(Error::Dimension("Haar sample dimension must be positive".into()));
    }
    let mut rng = rng_from_seed(seed);
    Ok(haar_with_rng(n, &mut rng))
}

pub fn haar_with_rng<R: Rng>(n: usize, rng: &mut R) -> ComplexMatrix {
    let z = ComplexMatrix::from_fn(n, |_, _| complex_gaussian(rng));
    let (q, r_diag) = householder_qr(&z);
    let lambda: Vec<Complex64> = r_diag
        .iter()
        .map(|&d| if d.norm() > 0.0 { d / d.norm() } else { Complex64::new(1.0, 0.0) })
        .collect();
    q.scale_cols(&lambda)
}
