use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::matrix::ComplexMatrix;

/// Matrix constant along wrapped diagonals: entry `(i, j)` is `α_{(i−j) mod n}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CirculantMatrix {
    generator: Vec<Complex64>,
}

impl CirculantMatrix {
    pub fn new(generator: Vec<Complex64>) -> Self {
        assert!(!generator.is_empty(), "circulant generator must be non-empty");
        Self { generator }
    }

    pub fn generator(&self) -> &[Complex64] {
        &self.generator
    }

    pub fn n(&self) -> usize {
        self.generator.len()
    }

    pub fn materialize(&self) -> ComplexMatrix {
        let n = self.n();
        ComplexMatrix::from_fn(n, |i, j| self.generator[(i + n - j) % n])
    }
}

/// Reads the generator off column 0 and accepts it only if every one of the
/// `n²` entries lies within `tol` (absolute) of its wrapped-diagonal value.
pub fn is_circulant(m: &ComplexMatrix, tol: f64) -> Option<CirculantMatrix> {
    let n = m.n();
    let generator: Vec<Complex64> = (0..n).map(|k| m[(k, 0)]).collect();
    for i in 0..n {
        for j in 0..n {
            if (m[(i, j)] - generator[(i + n - j) % n]).norm() > tol {
                return None;
            }
        }
    }
    Some(CirculantMatrix { generator })
}
