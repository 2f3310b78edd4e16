//! Analytic normal forms in two dimensions.
//!
//! A 2×2 unitary with unit line sums has the form `[[a, 1−a], [1−a, a]]`,
//! and unitarity forces `Re a = |a|²`, i.e. `a = (1 + e^{iθ})/2`. Since the
//! diagonal scalings preserve moduli, `|a| = |cos(θ/2)| = |U₁₁|`, which leaves
//! `θ = ±2·acos|U₁₁|`. The two roots coincide when `U` is diagonal (`θ = 0`)
//! or anti-diagonal (`θ = π`).

use num_complex::Complex64;

use super::{ScalingResult, UNITARITY_TOLERANCE};
use crate::diagonal::DiagonalUnitary;
use crate::error::{Error, Result};
use crate::matrix::{unitarity_defect, ComplexMatrix};

/// Entries with modulus below this are ignored when matching phases.
const MATCH_FLOOR: f64 = 1e-12;

pub fn solve_u2_closed_form(u: &ComplexMatrix) -> Result<Vec<ScalingResult>> {
    if u.n() != 2 {
        return Err(Error::Dimension(format!(
            "closed form needs a 2×2 matrix, got {}×{}",
            u.n(),
            u.n()
        )));
    }
    let defect = unitarity_defect(u)?;
    if defect >= UNITARITY_TOLERANCE {
        return Err(Error::input(format!(
            "matrix is not unitary (defect {defect:.3e})"
        )));
    }

    let modulus = u[(0, 0)].norm().min(1.0);
    let theta = 2.0 * modulus.acos();
    let collapsed = !(MATCH_FLOOR..=1.0 - MATCH_FLOOR).contains(&modulus);
    let thetas: &[f64] = if collapsed { &[theta] } else { &[theta, -theta] };

    thetas
        .iter()
        .map(|&t| {
            let a = (Complex64::new(1.0, 0.0) + Complex64::cis(t)) * 0.5;
            let b = Complex64::new(1.0, 0.0) - a;
            let target = ComplexMatrix::from_rows(&[vec![a, b], vec![b, a]])?;
            let (l, r) = match_diagonal_phases(u, &target).ok_or_else(|| {
                Error::Inconsistency("2×2 normal form does not match the input moduli".into())
            })?;
            Ok(ScalingResult::from_diagonals(u, l, r, 0, 0))
        })
        .collect()
}

/// Finds diagonal unitaries with `L·U·R ≈ A` by matching entry arguments.
///
/// Phases propagate along a maximum-weight spanning tree of the bipartite
/// row/column graph, so each one is read off the largest available entry.
/// Returns `None` when the moduli of `U` and `A` disagree or the residual
/// `‖L·U·R − A‖_F` exceeds `1e-9`.
pub fn match_diagonal_phases(
    u: &ComplexMatrix,
    a: &ComplexMatrix,
) -> Option<(DiagonalUnitary, DiagonalUnitary)> {
    let n = u.n();
    if a.n() != n {
        return None;
    }
    if u
        .entries()
        .iter()
        .zip(a.entries())
        .any(|(x, y)| (x.norm() - y.norm()).abs() > 1e-9)
    {
        return None;
    }

    let one = Complex64::new(1.0, 0.0);
    let mut l: Vec<Option<Complex64>> = vec![None; n];
    let mut r: Vec<Option<Complex64>> = vec![None; n];

    // Prim over rows 0..n and columns n..2n; disconnected parts get a fresh root.
    loop {
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..n {
            for j in 0..n {
                if l[i].is_some() == r[j].is_some() {
                    continue;
                }
                let w = u[(i, j)].norm();
                if w > MATCH_FLOOR && best.is_none_or(|(bw, _, _)| w > bw) {
                    best = Some((w, i, j));
                }
            }
        }
        match best {
            Some((_, i, j)) => {
                let ratio = a[(i, j)] / u[(i, j)];
                match (l[i], r[j]) {
                    (Some(li), None) => r[j] = Some(unit(ratio / li)),
                    (None, Some(rj)) => l[i] = Some(unit(ratio / rj)),
                    _ => unreachable!(),
                }
            }
            None => {
                if let Some(i) = l.iter().position(Option::is_none) {
                    l[i] = Some(one);
                } else if let Some(j) = r.iter().position(Option::is_none) {
                    r[j] = Some(one);
                } else {
                    break;
                }
            }
        }
    }

    let l = DiagonalUnitary::from_unit_complex(&l.into_iter().map(Option::unwrap).collect::<Vec<_>>());
    let r = DiagonalUnitary::from_unit_complex(&r.into_iter().map(Option::unwrap).collect::<Vec<_>>());
    let built = u.scale_rows(&l.entries()).scale_cols(&r.entries());
    (built.distance(a) < 1e-9).then_some((l, r))
}

fn unit(z: Complex64) -> Complex64 {
    z / z.norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{build_dft, line_sum_deviation};
    use crate::random::haar_random;
    use crate::scaler::tests::check_invariants;
    use std::f64::consts::TAU;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn identity_has_single_form() {
        let sols = solve_u2_closed_form(&ComplexMatrix::identity(2)).unwrap();
        assert_eq!(sols.len(), 1);
        assert!(sols[0].a.max_abs_diff(&ComplexMatrix::identity(2)) < 1e-15);
    }

    #[test]
    fn anti_diagonal_has_single_form() {
        let x = ComplexMatrix::from_rows(&[vec![c(0.0, 0.0), c(0.0, 1.0)], vec![c(-1.0, 0.0), c(0.0, 0.0)]]).unwrap();
        let sols = solve_u2_closed_form(&x).unwrap();
        assert_eq!(sols.len(), 1);
        assert!(line_sum_deviation(&sols[0].a) < 1e-15);
    }

    /// Brute force over the torus of right phases `(β, γ)`: a normal form
    /// exists where both rows of `U·diag(e^{iβ}, e^{iγ})` have unit-modulus
    /// sums; the left phases then rotate those sums onto 1.
    fn grid_candidates(u: &ComplexMatrix, steps: usize) -> Vec<Complex64> {
        let mut found: Vec<Complex64> = Vec::new();
        let grid = |k: usize| TAU * k as f64 / steps as f64;
        for ib in 0..steps {
            for ig in 0..steps {
                let r = [Complex64::cis(grid(ib)), Complex64::cis(grid(ig))];
                let row0 = u[(0, 0)] * r[0] + u[(0, 1)] * r[1];
                let row1 = u[(1, 0)] * r[0] + u[(1, 1)] * r[1];
                if (row0.norm() - 1.0).abs() < 0.01 && (row1.norm() - 1.0).abs() < 0.01 {
                    let a00 = row0.conj() / row0.norm() * u[(0, 0)] * r[0];
                    if !found.iter().any(|f| (f - a00).norm() < 0.2) {
                        found.push(a00);
                    }
                }
            }
        }
        found
    }

    #[test]
    fn dft2_has_exactly_the_two_expected_forms() {
        let f2 = build_dft(2).unwrap();
        let sols = solve_u2_closed_form(&f2).unwrap();
        assert_eq!(sols.len(), 2);
        let mut a: Vec<Complex64> = sols.iter().map(|s| s.a[(0, 0)]).collect();
        a.sort_by(|x, y| x.im.total_cmp(&y.im));
        assert!((a[0] - c(0.5, -0.5)).norm() < 1e-14);
        assert!((a[1] - c(0.5, 0.5)).norm() < 1e-14);

        // 10⁴-point grid over (β, γ)
        let brute = grid_candidates(&f2, 100);
        assert_eq!(brute.len(), 2);
        for b in brute {
            assert!(a.iter().any(|x| (x - b).norm() < 0.1));
        }
        for s in &sols {
            check_invariants(&f2, s);
        }
    }

    #[test]
    fn random_u2_has_two_distinct_valid_forms() {
        let u = haar_random(2, 7).unwrap();
        let sols = solve_u2_closed_form(&u).unwrap();
        assert_eq!(sols.len(), 2);
        assert!(sols[0].a.distance(&sols[1].a) > 1e-3);
        for s in &sols {
            check_invariants(&u, s);
            assert!(s.deviation < 1e-14);
        }
    }

    #[test]
    fn exact_row_sums_imply_exact_column_sums() {
        for seed in 0..50 {
            let u = haar_random(2, seed).unwrap();
            for s in solve_u2_closed_form(&u).unwrap() {
                let sums = crate::matrix::line_sums(&s.a);
                for (row, col) in sums.rows.iter().zip(&sums.cols) {
                    assert!((row - 1.0).norm() < 1e-14);
                    assert!((col - 1.0).norm() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn rejects_wrong_dimension() {
        assert!(matches!(
            solve_u2_closed_form(&ComplexMatrix::identity(3)),
            Err(Error::Dimension(_))
        ));
        let bad = ComplexMatrix::identity(2).scale(c(1.5, 0.0));
        assert!(matches!(solve_u2_closed_form(&bad), Err(Error::Input(_))));
    }

    #[test]
    fn phase_matching_recovers_random_diagonals() {
        let u = haar_random(6, 12).unwrap();
        let l = DiagonalUnitary::new(vec![0.1, 0.2, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let r = DiagonalUnitary::new(vec![1.0, 2.0, 0.3, 0.4, 0.5, 0.6]).unwrap();
        let a = u.scale_rows(&l.entries()).scale_cols(&r.entries());
        let (l2, r2) = match_diagonal_phases(&u, &a).unwrap();
        let built = u.scale_rows(&l2.entries()).scale_cols(&r2.entries());
        assert!(built.distance(&a) < 1e-12);
        assert!(match_diagonal_phases(&u, &haar_random(6, 13).unwrap()).is_none());
    }
}
