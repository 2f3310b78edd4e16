use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::ComplexMatrix;

/// Reduces an angle into `[0, 2π)`.
pub fn wrap_angle(theta: f64) -> f64 {
    let w = theta.rem_euclid(TAU);
    // rem_euclid can round up to exactly 2π for tiny negative inputs
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// `diag(e^{iθ₁}, …, e^{iθₙ})`, stored by its phases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct DiagonalUnitary {
    phases: Vec<f64>,
}

impl DiagonalUnitary {
    pub fn new(phases: Vec<f64>) -> Result<Self> {
        if phases.iter().any(|p| !p.is_finite()) {
            return Err(Error::input("phase must be finite"));
        }
        Ok(Self {
            phases: phases.into_iter().map(wrap_angle).collect(),
        })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            phases: vec![0.0; n],
        }
    }

    /// Takes the argument of each entry; moduli are discarded.
    pub fn from_unit_complex(d: &[Complex64]) -> Self {
        Self {
            phases: d.iter().map(|z| wrap_angle(z.arg())).collect(),
        }
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    /// Diagonal entries `e^{iθ_k}`.
    pub fn entries(&self) -> Vec<Complex64> {
        self.phases.iter().map(|&t| Complex64::cis(t)).collect()
    }

    pub fn materialize(&self) -> ComplexMatrix {
        ComplexMatrix::from_diagonal(&self.entries())
    }

    pub fn inverse(&self) -> Self {
        Self {
            phases: self.phases.iter().map(|&t| wrap_angle(-t)).collect(),
        }
    }

    /// Entrywise product `self · other`.
    pub fn compose(&self, other: &Self) -> Self {
        assert_eq!(self.len(), other.len());
        Self {
            phases: self
                .phases
                .iter()
                .zip(&other.phases)
                .map(|(a, b)| wrap_angle(a + b))
                .collect(),
        }
    }

    /// `𝟙_k ⊕ self`
    pub fn embed_lower_right(&self, k: usize) -> Self {
        let mut phases = vec![0.0; k];
        phases.extend_from_slice(&self.phases);
        Self { phases }
    }

    /// Multiplies every entry by `e^{iθ}`.
    pub fn rotate(&self, theta: f64) -> Self {
        Self {
            phases: self.phases.iter().map(|&t| wrap_angle(t + theta)).collect(),
        }
    }
}

impl TryFrom<Vec<f64>> for DiagonalUnitary {
    type Error = Error;

    fn try_from(phases: Vec<f64>) -> Result<Self> {
        Self::new(phases)
    }
}

impl From<DiagonalUnitary> for Vec<f64> {
    fn from(d: DiagonalUnitary) -> Vec<f64> {
        d.phases
    }
}
