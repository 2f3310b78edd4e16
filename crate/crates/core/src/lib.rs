//! Sinkhorn-type normal form of unitary matrices.
//!
//! Every unitary `U` can be written `U = e^{iφ}·D1·A·D2` with `D1`, `D2`
//! diagonal unitaries and `A` a unitary whose row and column sums all equal
//! one. This crate computes that normal form by alternating phase
//! alignment ([`scaler`]), turns it into an interlaced product of phase
//! layers and discrete Fourier transforms or into a circulant factorization
//! ([`decompose`], [`circuit`]), and samples the set of normal forms of a
//! given `U` ([`census`]).
//!
//! ```
//! use unitary_sinkhorn::{haar_random, sinkhorn_scale, ScalingOptions};
//!
//! let u = haar_random(4, 1).unwrap();
//! let res = sinkhorn_scale(&u, &ScalingOptions::default()).unwrap();
//! assert!(res.deviation < 1e-10);
//! assert!(res.reconstruct().distance(&u) < 1e-11);
//! ```

pub mod census;
pub mod circuit;
pub mod circulant;
pub mod decompose;
pub mod diagonal;
pub mod error;
pub mod io;
pub mod matrix;
pub mod random;
pub mod scaler;

pub use census::{census, verify_counterexample, CensusOptions, CensusReport, CounterexampleCheck};
pub use circuit::{emit_multiport, CircuitFormat};
pub use circulant::{is_circulant, CirculantMatrix};
pub use decompose::{
    circulant_decompose, extract_core, fourier_decompose, reconstruct, CirculantDecomposition,
    FourierDecomposition,
};
pub use diagonal::DiagonalUnitary;
pub use error::{Error, Result};
pub use matrix::{build_dft, line_sum_deviation, line_sums, unitarity_defect, ComplexMatrix, LineSums};
pub use random::haar_random;
pub use scaler::{
    col_phase_step, row_phase_step, sinkhorn_scale, solve_u2_closed_form, total_sum_functional,
    ScalingOptions, ScalingResult,
};
