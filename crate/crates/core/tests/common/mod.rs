// Independent reference implementations used by the integration tests.
// Nothing here calls into the library's numerics.
#![allow(dead_code)]

use mudae::model::{AffineJacobianModel, Blocks, Feature, LiftedCoord, TwoBusParams};
use mudae::{Complex64, DMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| scale * rng.random_range(-1.0..1.0))
}

/// Random block Jacobian with a well-conditioned `D`.
pub fn random_blocks(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Blocks {
    let mut d = uniform_matrix(rng, m, m, 1.0);
    for i in 0..m {
        // Strict diagonal dominance keeps D invertible and well conditioned.
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        d[(i, i)] = sign * (m as f64 + 1.0 + d[(i, i)].abs());
    }
    Blocks {
        a: uniform_matrix(rng, n, n, 2.0),
        b: uniform_matrix(rng, n, m, 1.0),
        c: uniform_matrix(rng, m, n, 1.0),
        d,
    }
}

/// Random symmetric positive definite matrix with eigenvalues in `[lo, lo + spread]`.
pub fn random_spd(rng: &mut ChaCha8Rng, n: usize, lo: f64, spread: f64) -> DMatrix<f64> {
    let g = uniform_matrix(rng, n, n, 1.0);
    let s = &g * g.transpose();
    let top = jacobi_eigenvalues(&s).into_iter().fold(0.0, f64::max).max(1e-12);
    s * (spread / top) + DMatrix::identity(n, n) * lo
}

/// Affine model `J(z) = J0 + sum_k z_k J_k` with one coordinate per variable.
pub fn random_affine_model(rng: &mut ChaCha8Rng, n: usize, m: usize) -> AffineJacobianModel {
    let dim = n + m;
    let blocks = random_blocks(rng, n, m);
    let j0 = blocks.assemble();
    let terms: Vec<DMatrix<f64>> = (0..dim).map(|_| uniform_matrix(rng, dim, dim, 0.3)).collect();
    let lift = (0..dim).map(|i| LiftedCoord::single(Feature::Base(i))).collect();
    let names = (0..dim).map(|i| format!("x{i}")).collect();
    // Base point at zero so the algebraic block equals D.
    AffineJacobianModel::new(n, m, names, None, vec![0.0; dim], lift, j0, terms, None)
        .expect("random model")
}

/// Cyclic Jacobi eigenvalues of a symmetric matrix.
pub fn jacobi_eigenvalues(s: &DMatrix<f64>) -> Vec<f64> {
    let n = s.nrows();
    let mut a: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| 0.5 * (s[(i, j)] + s[(j, i)])).collect()).collect();
    for _ in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j] * a[i][j]).sum();
        let total: f64 = a.iter().flatten().map(|v| v * v).sum();
        if off <= 1e-30 * total.max(f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q] == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - sn * akq;
                    a[k][q] = sn * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - sn * aqk;
                    a[q][k] = sn * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i][i]).collect()
}

pub fn jacobi_lambda_max(s: &DMatrix<f64>) -> f64 {
    jacobi_eigenvalues(s).into_iter().fold(f64::NEG_INFINITY, f64::max)
}

/// Determinant by Gaussian elimination with partial pivoting.
pub fn complex_det(mut a: Vec<Vec<Complex64>>) -> Complex64 {
    let n = a.len();
    let mut det = Complex64::new(1.0, 0.0);
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].norm().total_cmp(&a[j][col].norm())).unwrap();
        if a[piv][col].norm() == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        if piv != col {
            a.swap(piv, col);
            det = -det;
        }
        det *= a[col][col];
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                let v = a[col][c];
                a[r][c] -= f * v;
            }
        }
    }
    det
}

/// `det(J - lambda E)` with `E = diag(I_n, 0)`.
pub fn pencil_det(j: &DMatrix<f64>, n: usize, lambda: Complex64) -> Complex64 {
    let dim = j.nrows();
    let rows = (0..dim)
        .map(|r| {
            (0..dim)
                .map(|c| {
                    let e = if r == c && r < n { lambda } else { Complex64::new(0.0, 0.0) };
                    Complex64::new(j[(r, c)], 0.0) - e
                })
                .collect()
        })
        .collect();
    complex_det(rows)
}

/// Roots of `det(J - lambda E)`, a polynomial of degree `n` when `D` is
/// invertible: coefficients by interpolation, roots by Durand-Kerner.
pub fn pencil_roots(j: &DMatrix<f64>, n: usize) -> Vec<Complex64> {
    let nodes: Vec<f64> = (0..=n).map(|k| k as f64).collect();
    let vals: Vec<f64> = nodes.iter().map(|&t| pencil_det(j, n, Complex64::new(t, 0.0)).re).collect();
    // Newton divided differences, then expand to monomial coefficients.
    let mut dd = vals.clone();
    for lvl in 1..=n {
        for i in (lvl..=n).rev() {
            dd[i] = (dd[i] - dd[i - 1]) / (nodes[i] - nodes[i - lvl]);
        }
    }
    let mut coeffs = vec![0.0; n + 1];
    for i in (0..=n).rev() {
        let mut next = vec![0.0; n + 1];
        for (p, &c) in coeffs.iter().enumerate().take(n) {
            next[p + 1] += c;
            next[p] -= c * nodes[i];
        }
        next[0] += dd[i];
        coeffs = next;
    }
    let lead = coeffs[n];
    let monic: Vec<f64> = coeffs.iter().map(|c| c / lead).collect();
    let eval = |z: Complex64| monic.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c);
    let mut roots: Vec<Complex64> = (0..n).map(|k| Complex64::new(0.4, 0.9).powu(k as u32)).collect();
    for _ in 0..2000 {
        let mut moved: f64 = 0.0;
        for i in 0..n {
            let mut denom = Complex64::new(1.0, 0.0);
            for k in 0..n {
                if k != i {
                    denom *= roots[i] - roots[k];
                }
            }
            let step = eval(roots[i]) / denom;
            roots[i] -= step;
            moved = moved.max(step.norm());
        }
        if moved < 1e-15 {
            break;
        }
    }
    roots
}

/// Greedy multiset distance between two eigenvalue lists.
pub fn multiset_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let mut used = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    for x in a {
        let (k, d) = b
            .iter()
            .enumerate()
            .filter(|(k, _)| !used[*k])
            .map(|(k, y)| (k, (x - y).norm()))
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .unwrap();
        used[k] = true;
        worst = worst.max(d);
    }
    worst
}

/// Two-bus residuals from phasor arithmetic: generator and infinite-bus
/// currents into the load bus, constant-power load.
pub fn phasor_residuals(p: &TwoBusParams, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let (delta, omega, v) = (x[0], x[1], Complex64::new(x[2], x[3]));
    let j = Complex64::new(0.0, 1.0);
    let emf = Complex64::from_polar(p.e_emf, delta);
    let i_gen = (emf - v) / (j * p.x_dp);
    let i_inf = (Complex64::new(1.0, 0.0) - v) / Complex64::new(p.r_line, p.x_line);
    let pe = (emf * i_gen.conj()).re;
    let mismatch = v * (i_gen + i_inf).conj() - Complex64::new(p.p_load, p.q_load);
    (
        vec![omega, (p.p_m - p.d_damp * omega - pe) / p.m_inertia],
        vec![mismatch.re, mismatch.im],
    )
}

/// Central-difference Jacobian of the stacked residual `(f, g)`.
pub fn fd_jacobian(res: impl Fn(&[f64]) -> (Vec<f64>, Vec<f64>), x: &[f64], h: f64) -> DMatrix<f64> {
    let dim = x.len();
    let mut jac = DMatrix::zeros(dim, dim);
    for c in 0..dim {
        let step = h * x[c].abs().max(1.0);
        let (mut xp, mut xm) = (x.to_vec(), x.to_vec());
        xp[c] += step;
        xm[c] -= step;
        let (fp, gp) = res(&xp);
        let (fm, gm) = res(&xm);
        let up: Vec<f64> = fp.into_iter().chain(gp).collect();
        let dn: Vec<f64> = fm.into_iter().chain(gm).collect();
        for r in 0..dim {
            jac[(r, c)] = (up[r] - dn[r]) / (2.0 * step);
        }
    }
    jac
}

/// Spectral abscissa via the roots of the characteristic polynomial
/// (Faddeev-LeVerrier), adequate for the small orders used in tests.
pub fn char_poly_abscissa(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut coeffs = vec![1.0];
    let mut mk = DMatrix::<f64>::identity(n, n);
    for k in 1..=n {
        let am = m * &mk;
        let ck = -am.trace() / k as f64;
        coeffs.push(ck);
        mk = am + DMatrix::identity(n, n) * ck;
    }
    let eval = |z: Complex64| coeffs.iter().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c);
    let mut roots: Vec<Complex64> = (0..n).map(|k| Complex64::new(0.4, 0.9).powu(k as u32)).collect();
    for _ in 0..4000 {
        let mut moved: f64 = 0.0;
        for i in 0..n {
            let mut denom = Complex64::new(1.0, 0.0);
            for k in 0..n {
                if k != i {
                    denom *= roots[i] - roots[k];
                }
            }
            let step = eval(roots[i]) / denom;
            roots[i] -= step;
            moved = moved.max(step.norm());
        }
        if moved < 1e-14 {
            break;
        }
    }
    roots.iter().map(|r| r.re).fold(f64::NEG_INFINITY, f64::max)
}
