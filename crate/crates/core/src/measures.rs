//! Logarithmic norms and the dense linear-algebra contracts used by the
//! rest of the crate.
//!
//! The matrix measures are evaluated from their closed forms:
//!
//! | norm | measure |
//! |------|---------|
//! | 1    | `max_j (m_jj + sum_{i != j} |m_ij|)` |
//! | 2    | `lambda_max((M + M^T) / 2)` |
//! | inf  | `max_i (m_ii + sum_{j != i} |m_ij|)` |
//!
//! Unlike norms, measures may be negative, and every measure bounds the
//! spectral abscissa from above.

use nalgebra::linalg::Schur;
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative asymmetry accepted by routines that expect symmetric input.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Largest order handled by the Kronecker-sum Lyapunov solver.
pub const LYAPUNOV_MAX_ORDER: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MeasureKind {
    One,
    Two,
    Infinity,
}

impl MeasureKind {
    pub const ALL: [MeasureKind; 3] = [MeasureKind::One, MeasureKind::Two, MeasureKind::Infinity];
}

pub(crate) fn check_square(m: &DMatrix<f64>, what: &str) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::Input(format!(
            "{what} must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.nrows() == 0 {
        return Err(Error::Input(format!("{what} must have positive order")));
    }
    Ok(m.nrows())
}

pub(crate) fn check_finite(m: &DMatrix<f64>, what: &str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Input(format!("{what} has non-finite entries")))
    }
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// Logarithmic norm `mu_p(M)` for `p` in {1, 2, inf}.
pub fn matrix_measure(m: &DMatrix<f64>, p: MeasureKind) -> Result<f64> {
    let order = check_square(m, "matrix")?;
    check_finite(m, "matrix")?;
    let value = match p {
        MeasureKind::One => (0..order)
            .map(|j| {
                let off: f64 = (0..order).filter(|&i| i != j).map(|i| m[(i, j)].abs()).sum();
                m[(j, j)] + off
            })
            .fold(f64::NEG_INFINITY, f64::max),
        MeasureKind::Infinity => (0..order)
            .map(|i| {
                let off: f64 = (0..order).filter(|&j| j != i).map(|j| m[(i, j)].abs()).sum();
                m[(i, i)] + off
            })
            .fold(f64::NEG_INFINITY, f64::max),
        MeasureKind::Two => {
            let sym = (m + m.transpose()) * 0.5;
            max_symmetric_eigenvalue(sym)
        }
    };
    Ok(value)
}

fn max_symmetric_eigenvalue(sym: DMatrix<f64>) -> f64 {
    sym.symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Largest eigenvalue of a symmetric matrix.
///
/// The input is symmetrized as `(S + S^T) / 2`; asymmetry larger than
/// [`SYMMETRY_TOL`] relative to the largest entry is rejected.
pub fn lambda_max_symmetric(s: &DMatrix<f64>) -> Result<f64> {
    check_square(s, "symmetric matrix")?;
    check_finite(s, "symmetric matrix")?;
    let scale = max_abs(s).max(f64::MIN_POSITIVE);
    let asym = max_abs(&(s - s.transpose()));
    if asym > SYMMETRY_TOL * scale {
        return Err(Error::Input(format!(
            "matrix is not symmetric (relative asymmetry {:.3e})",
            asym / scale
        )));
    }
    Ok(max_symmetric_eigenvalue((s + s.transpose()) * 0.5))
}

/// Smallest eigenvalue of a symmetric matrix (same contract as
/// [`lambda_max_symmetric`]).
pub fn lambda_min_symmetric(s: &DMatrix<f64>) -> Result<f64> {
    Ok(-lambda_max_symmetric(&(-s))?)
}

/// Orders eigenvalues by descending real part, ties by descending imaginary part.
pub fn sort_eigenvalues(values: &mut [Complex64]) {
    values.sort_by(|a, b| {
        b.re.partial_cmp(&a.re)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(b.im.partial_cmp(&a.im).unwrap_or(std::cmp::Ordering::Equal))
    });
}

/// All eigenvalues of `m` via a real Schur reduction, sorted with
/// [`sort_eigenvalues`].
pub fn spectrum(m: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    let order = check_square(m, "matrix")?;
    check_finite(m, "matrix")?;
    let max_iter = 100 * order * order;
    let schur = Schur::try_new(m.clone(), f64::EPSILON, max_iter).ok_or_else(|| {
        Error::Numeric(format!("Schur reduction did not converge in {max_iter} iterations"))
    })?;
    let mut values: Vec<Complex64> = schur.complex_eigenvalues().iter().copied().collect();
    sort_eigenvalues(&mut values);
    Ok(values)
}

/// Spectral abscissa `max Re lambda(M)`.
pub fn spectral_abscissa(m: &DMatrix<f64>) -> Result<f64> {
    Ok(spectrum(m)?.first().map(|l| l.re).unwrap_or(f64::NEG_INFINITY))
}

/// True iff every eigenvalue has real part strictly below `-tol`.
pub fn is_hurwitz(m: &DMatrix<f64>, tol: f64) -> Result<bool> {
    if !(tol >= 0.0) {
        return Err(Error::Input(format!("tolerance must be non-negative, got {tol}")));
    }
    Ok(spectral_abscissa(m)? < -tol)
}

/// Solves `A^T P + P A = -W` for symmetric positive definite `P`.
///
/// Uses the Kronecker-sum form `(I (x) A^T + A^T (x) I) vec(P) = -vec(W)`,
/// limited to order [`LYAPUNOV_MAX_ORDER`]. A non-Hurwitz `A` surfaces as a
/// singular system or an indefinite solution.
pub fn solve_lyapunov(a: &DMatrix<f64>, w: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = check_square(a, "A")?;
    check_finite(a, "A")?;
    check_finite(w, "W")?;
    if w.nrows() != n || w.ncols() != n {
        return Err(Error::Input(format!(
            "W must be {n}x{n}, got {}x{}",
            w.nrows(),
            w.ncols()
        )));
    }
    if n > LYAPUNOV_MAX_ORDER {
        return Err(Error::Input(format!(
            "Lyapunov solver supports order <= {LYAPUNOV_MAX_ORDER}, got {n}"
        )));
    }
    if lambda_min_symmetric(w)? <= 0.0 {
        return Err(Error::Input("W must be symmetric positive definite".into()));
    }

    let at = a.transpose();
    let nn = n * n;
    // Column-major vec: vec(A^T P) = (I (x) A^T) vec(P), vec(P A) = (A^T (x) I) vec(P).
    let mut k = DMatrix::<f64>::zeros(nn, nn);
    for j in 0..n {
        for i in 0..n {
            let row = i + j * n;
            for l in 0..n {
                k[(row, l + j * n)] += at[(i, l)];
                k[(row, i + l * n)] += at[(j, l)];
            }
        }
    }
    let rhs = nalgebra::DVector::from_iterator(nn, w.iter().map(|v| -v));
    let lu = k.lu();
    let scale = max_abs(a).max(f64::MIN_POSITIVE);
    let diag_min = lu
        .u()
        .diagonal()
        .iter()
        .fold(f64::INFINITY, |acc, v| acc.min(v.abs()));
    if diag_min <= 1e-13 * scale {
        return Err(Error::Certificate(
            "Lyapunov system is singular; A is not Hurwitz".into(),
        ));
    }
    let vec_p = lu
        .solve(&rhs)
        .ok_or_else(|| Error::Certificate("Lyapunov system is singular".into()))?;
    let p = DMatrix::from_column_slice(n, n, vec_p.as_slice());
    let p = (&p + p.transpose()) * 0.5;
    if lambda_min_symmetric(&p)? <= 0.0 {
        return Err(Error::Certificate(
            "Lyapunov solution is not positive definite; A is not Hurwitz".into(),
        ));
    }
    Ok(p)
}

/// 2-norm condition number via singular values; infinite when singular.
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    let sv = m.clone().singular_values();
    let max = sv.iter().copied().fold(0.0_f64, f64::max);
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    if min == 0.0 || !min.is_finite() {
        f64::INFINITY
    } else {
        max / min
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    #[test]
    fn measure_examples() {
        let d = DMatrix::from_diagonal(&nalgebra::dvector![-1.0, -3.0]);
        assert_eq!(matrix_measure(&d, MeasureKind::Two).unwrap(), -1.0);
        let skew = dmatrix![0.0, 1.0; -1.0, 0.0];
        assert_eq!(matrix_measure(&skew, MeasureKind::Two).unwrap(), 0.0);
        let m = dmatrix![-2.0, 1.0; 0.0, -3.0];
        assert_eq!(matrix_measure(&m, MeasureKind::One).unwrap(), -2.0);
        assert_eq!(matrix_measure(&m, MeasureKind::Infinity).unwrap(), -1.0);
        let minus_i = -DMatrix::<f64>::identity(3, 3);
        assert_eq!(matrix_measure(&minus_i, MeasureKind::Two).unwrap(), -1.0);
    }

    #[test]
    fn measure_rejects_nan() {
        let m = dmatrix![f64::NAN, 0.0; 0.0, 1.0];
        assert!(matches!(matrix_measure(&m, MeasureKind::One), Err(Error::Input(_))));
    }

    #[test]
    fn lambda_max_examples() {
        let d = DMatrix::from_diagonal(&nalgebra::dvector![2.0, -5.0]);
        assert_eq!(lambda_max_symmetric(&d).unwrap(), 2.0);
        let s = dmatrix![0.0, 1.0; 1.0, 0.0];
        assert!((lambda_max_symmetric(&s).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn lambda_max_rejects_asymmetry() {
        let s = dmatrix![0.0, 1.0; 0.9, 0.0];
        assert!(lambda_max_symmetric(&s).is_err());
        let s = dmatrix![1.0, f64::INFINITY; f64::INFINITY, 0.0];
        assert!(lambda_max_symmetric(&s).is_err());
    }

    #[test]
    fn spectrum_examples() {
        let d = DMatrix::from_diagonal(&nalgebra::dvector![1.0, 2.0, 3.0]);
        let s = spectrum(&d).unwrap();
        let re: Vec<f64> = s.iter().map(|l| l.re).collect();
        assert_eq!(re, vec![3.0, 2.0, 1.0]);

        let rot = dmatrix![0.0, 1.0; -1.0, 0.0];
        let s = spectrum(&rot).unwrap();
        assert!((s[0] - Complex64::new(0.0, 1.0)).norm() < 1e-14);
        assert!((s[1] - Complex64::new(0.0, -1.0)).norm() < 1e-14);
    }

    #[test]
    fn hurwitz_examples() {
        let d = DMatrix::from_diagonal(&nalgebra::dvector![-1.0, -2.0]);
        assert!(is_hurwitz(&d, 0.0).unwrap());
        let rot = dmatrix![0.0, 1.0; -1.0, 0.0];
        assert!(!is_hurwitz(&rot, 0.0).unwrap());
        let near = DMatrix::from_diagonal(&nalgebra::dvector![-1e-9, -2.0]);
        assert!(!is_hurwitz(&near, 1e-8).unwrap());
        assert!(is_hurwitz(&near, 0.0).unwrap());
        assert!(is_hurwitz(&d, -1.0).is_err());
    }

    #[test]
    fn lyapunov_examples() {
        let a = -DMatrix::<f64>::identity(2, 2);
        let w = DMatrix::<f64>::identity(2, 2) * 2.0;
        let p = solve_lyapunov(&a, &w).unwrap();
        assert!((p - DMatrix::<f64>::identity(2, 2)).amax() < 1e-14);

        let a = DMatrix::from_diagonal(&nalgebra::dvector![-1.0, -2.0]);
        let p = solve_lyapunov(&a, &DMatrix::identity(2, 2)).unwrap();
        assert!((p - DMatrix::from_diagonal(&nalgebra::dvector![0.5, 0.25])).amax() < 1e-14);
    }

    #[test]
    fn lyapunov_rejects_unstable() {
        let a = DMatrix::from_diagonal(&nalgebra::dvector![0.1, -2.0]);
        assert!(matches!(
            solve_lyapunov(&a, &DMatrix::identity(2, 2)),
            Err(Error::Certificate(_))
        ));
        // purely imaginary pair: singular Kronecker sum
        let rot = dmatrix![0.0, 1.0; -1.0, 0.0];
        assert!(solve_lyapunov(&rot, &DMatrix::identity(2, 2)).is_err());
    }

    #[test]
    fn condition_number_of_singular_matrix_is_infinite() {
        let m = dmatrix![1.0, 2.0; 2.0, 4.0];
        assert!(condition_number(&m) > 1e15);
        assert!((condition_number(&DMatrix::<f64>::identity(3, 3)) - 1.0).abs() < 1e-14);
    }
}
