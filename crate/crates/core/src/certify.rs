//! Stability certificates from the generalized unreduced Jacobian.
//!
//! For an auxiliary matrix `Z = [[P, 0], [R, Q]]` with `P` symmetric
//! positive definite, `F = Z^T J` and the point is certified when
//! `zeta = lambda_max(F + F^T) < 0`. With `R = -(P B D^{-1})^T` the
//! leading block of `F + F^T` is `P J_r + J_r^T P`, so by eigenvalue
//! interlacing `mu_2(P J_r) <= mu_2(F)` and a negative `zeta` forces a
//! Hurwitz reduced Jacobian.
//!
//! For a fixed `Z` the map `z -> lambda_max(J(z)^T Z + Z^T J(z))` is convex,
//! so its maximum over a box is attained at a vertex; [`certify_box`]
//! evaluates every vertex of the lifted box.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{lambda_max_symmetric, lambda_min_symmetric, solve_lyapunov, spectral_abscissa};
use crate::model::{AffineJacobianModel, Blocks, BoxSpec, Interval};
use crate::par;

/// Largest number of free lifted coordinates enumerated by [`certify_box`].
pub const MAX_FREE_COORDS: usize = 20;
/// Number of halvings of epsilon tried by [`construct_z_star`] after `eps = 1`.
pub const EPS_HALVINGS: usize = 60;
/// Upper cap on the scale explored by [`grow_box`].
pub const ALPHA_CAP: f64 = 10.0;

/// `Z = [[P, 0], [R, Q]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxiliaryMatrix {
    pub p: DMatrix<f64>,
    pub r: DMatrix<f64>,
    pub q: DMatrix<f64>,
}

impl AuxiliaryMatrix {
    pub fn new(p: DMatrix<f64>, r: DMatrix<f64>, q: DMatrix<f64>) -> Result<Self> {
        let n = p.nrows();
        let m = q.nrows();
        if p.ncols() != n || q.ncols() != m || r.nrows() != m || r.ncols() != n {
            return Err(Error::Input(format!(
                "auxiliary blocks inconsistent: P {}x{}, R {}x{}, Q {}x{}",
                p.nrows(),
                p.ncols(),
                r.nrows(),
                r.ncols(),
                q.nrows(),
                q.ncols()
            )));
        }
        if !(lambda_min_symmetric(&p)? > 0.0) {
            return Err(Error::Input("P must be symmetric positive definite".into()));
        }
        Ok(AuxiliaryMatrix { p, r, q })
    }

    pub fn identity(n: usize, m: usize) -> Self {
        AuxiliaryMatrix {
            p: DMatrix::identity(n, n),
            r: DMatrix::zeros(m, n),
            q: DMatrix::identity(m, m),
        }
    }

    pub fn n(&self) -> usize {
        self.p.nrows()
    }

    pub fn m(&self) -> usize {
        self.q.nrows()
    }

    pub fn assemble(&self) -> DMatrix<f64> {
        let (n, m) = (self.n(), self.m());
        let mut z = DMatrix::zeros(n + m, n + m);
        z.view_mut((0, 0), (n, n)).copy_from(&self.p);
        z.view_mut((n, 0), (m, n)).copy_from(&self.r);
        z.view_mut((n, n), (m, m)).copy_from(&self.q);
        z
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CertMode {
    AtPoint,
    FixedZ,
}

/// Point certificate; certified iff `zeta < 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub aux: Option<AuxiliaryMatrix>,
    /// `lambda_max(F + F^T)`; absent when no `Z` could be built.
    pub zeta: Option<f64>,
    pub point: Vec<f64>,
    pub mode: CertMode,
    pub reason: Option<String>,
}

impl Certificate {
    pub fn is_certified(&self) -> bool {
        self.aux.is_some() && matches!(self.zeta, Some(z) if z < 0.0)
    }
}

/// Box certificate; certified iff `zeta_star < 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct CertifiedBox {
    pub physical: BoxSpec,
    pub lifted: Vec<Interval>,
    pub aux: AuxiliaryMatrix,
    pub zeta_star: f64,
    pub vertex_count: usize,
    pub alpha: Option<f64>,
}

impl CertifiedBox {
    pub fn is_certified(&self) -> bool {
        self.zeta_star < 0.0
    }
}

/// `F = [[P A + R^T C, P B + R^T D], [Q^T C, Q^T D]]`.
pub fn build_generalized_unreduced(blocks: &Blocks, aux: &AuxiliaryMatrix) -> Result<DMatrix<f64>> {
    let (n, m) = (blocks.n(), blocks.m());
    if aux.n() != n || aux.m() != m {
        return Err(Error::Input(format!(
            "auxiliary matrix is ({},{}) but Jacobian blocks are ({n},{m})",
            aux.n(),
            aux.m()
        )));
    }
    let rt = aux.r.transpose();
    let qt = aux.q.transpose();
    let mut f = DMatrix::zeros(n + m, n + m);
    f.view_mut((0, 0), (n, n)).copy_from(&(&aux.p * &blocks.a + &rt * &blocks.c));
    f.view_mut((0, n), (n, m)).copy_from(&(&aux.p * &blocks.b + &rt * &blocks.d));
    f.view_mut((n, 0), (m, n)).copy_from(&(&qt * &blocks.c));
    f.view_mut((n, n), (m, m)).copy_from(&(&qt * &blocks.d));
    Ok(f)
}

/// `F_r = P J_r`.
pub fn build_generalized_reduced(p: &DMatrix<f64>, jr: &DMatrix<f64>) -> DMatrix<f64> {
    p * jr
}

/// `lambda_max(Z^T J + J^T Z)`.
pub fn bmi_value(j: &DMatrix<f64>, aux: &AuxiliaryMatrix) -> Result<f64> {
    let dim = aux.n() + aux.m();
    if j.nrows() != dim || j.ncols() != dim {
        return Err(Error::Input(format!("Jacobian must have order {dim}")));
    }
    let f = aux.assemble().transpose() * j;
    lambda_max_symmetric(&(&f + f.transpose()))
}

/// The `R` that zeroes the off-diagonal block of `F`: `R = -(P B D^{-1})^T`.
pub fn coupling_r(p: &DMatrix<f64>, blocks: &Blocks) -> Result<DMatrix<f64>> {
    if blocks.m() == 0 {
        return Ok(DMatrix::zeros(0, blocks.n()));
    }
    // (P B D^{-1})^T = D^{-T} B^T P
    let rhs = blocks.b.transpose() * p;
    let sol = blocks
        .d
        .transpose()
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Certificate("algebraic block is singular".into()))?;
    Ok(-sol)
}

/// Analytic solution of the LMI set at an equilibrium.
///
/// `P` solves `J_r^T P + P J_r = -I`, `R = -(P B D^{-1})^T` and
/// `Q = -eps D^{-T}`, with `eps` halved from 1 until `zeta < 0`.
pub fn construct_z_star(model: &AffineJacobianModel, z_eq: &[f64]) -> Result<Certificate> {
    let blocks = model.blocks_at(z_eq)?;
    let jr = crate::model::reduced_jacobian(&blocks)?;
    let abscissa = spectral_abscissa(&jr)?;
    if !(abscissa < 0.0) {
        return Err(Error::NotCertifiable { abscissa });
    }
    let n = blocks.n();
    let p = solve_lyapunov(&jr, &DMatrix::identity(n, n)).map_err(|e| match e {
        Error::Certificate(_) => Error::NotCertifiable { abscissa },
        other => other,
    })?;
    let r = coupling_r(&p, &blocks)?;
    let d_inv_t = if blocks.m() == 0 {
        DMatrix::zeros(0, 0)
    } else {
        blocks
            .d
            .transpose()
            .try_inverse()
            .ok_or_else(|| Error::Certificate("algebraic block is singular".into()))?
    };
    let j = blocks.assemble();
    let mut eps = 1.0_f64;
    let mut zeta = f64::INFINITY;
    for _ in 0..=EPS_HALVINGS {
        let aux = AuxiliaryMatrix::new(p.clone(), r.clone(), &d_inv_t * (-eps))?;
        zeta = bmi_value(&j, &aux)?;
        if zeta < 0.0 {
            return Ok(Certificate {
                aux: Some(aux),
                zeta: Some(zeta),
                point: z_eq.to_vec(),
                mode: CertMode::AtPoint,
                reason: None,
            });
        }
        eps *= 0.5;
    }
    Err(Error::SearchExhausted { zeta })
}

/// Point certificate at lifted point `z`, with a fixed `Z` or one built at `z`.
///
/// Construction failures become uncertified results carrying the reason.
pub fn certify_point(
    model: &AffineJacobianModel,
    z: &[f64],
    aux: Option<&AuxiliaryMatrix>,
) -> Result<Certificate> {
    if z.len() != model.lift().len() {
        return Err(Error::Input(format!(
            "lifted vector has length {}, model has {} coordinates",
            z.len(),
            model.lift().len()
        )));
    }
    match aux {
        Some(aux) => {
            let zeta = bmi_value(&model.jacobian_at(z)?, aux)?;
            Ok(Certificate {
                aux: Some(aux.clone()),
                zeta: Some(zeta),
                point: z.to_vec(),
                mode: CertMode::FixedZ,
                reason: (zeta >= 0.0).then(|| "zeta is not negative for the fixed Z".into()),
            })
        }
        None => match construct_z_star(model, z) {
            Ok(cert) => Ok(cert),
            Err(
                e @ (Error::NotCertifiable { .. }
                | Error::SearchExhausted { .. }
                | Error::SingularAlgebraic { .. }
                | Error::Certificate(_)),
            ) => {
                let zeta = match e {
                    Error::SearchExhausted { zeta } => Some(zeta),
                    _ => None,
                };
                Ok(Certificate {
                    aux: None,
                    zeta,
                    point: z.to_vec(),
                    mode: CertMode::AtPoint,
                    reason: Some(e.to_string()),
                })
            }
            Err(e) => Err(e),
        },
    }
}

/// Maximum of `bmi_value` over the vertices of a lifted box.
///
/// Zero-width coordinates are pinned. Vertices are indexed by the binary
/// expansion of their number (bit `i` selects the upper end of the `i`-th
/// free coordinate).
pub fn lifted_box_max(
    model: &AffineJacobianModel,
    lifted: &[Interval],
    aux: &AuxiliaryMatrix,
) -> Result<(f64, usize)> {
    if lifted.len() != model.lift().len() {
        return Err(Error::Input("lifted box has wrong length".into()));
    }
    let free: Vec<usize> = (0..lifted.len()).filter(|&k| !lifted[k].is_degenerate()).collect();
    if free.len() > MAX_FREE_COORDS {
        return Err(Error::VertexBudget { coords: free.len(), max: MAX_FREE_COORDS });
    }
    let count = 1usize << free.len();
    let base: Vec<f64> = lifted.iter().map(|i| i.lo).collect();
    let values = par::map_indexed(count, |v| {
        let mut z = base.clone();
        for (bit, &k) in free.iter().enumerate() {
            if v >> bit & 1 == 1 {
                z[k] = lifted[k].hi;
            }
        }
        model.jacobian_at(&z).and_then(|j| bmi_value(&j, aux))
    });
    let mut max = f64::NEG_INFINITY;
    for v in values {
        max = max.max(v?);
    }
    Ok((max, count))
}

/// Robust certificate for a physical box with fixed `Z`.
pub fn certify_box(
    model: &AffineJacobianModel,
    spec: &BoxSpec,
    aux: &AuxiliaryMatrix,
) -> Result<CertifiedBox> {
    let lifted = model.propagate_box(spec)?;
    let (zeta_star, vertex_count) = lifted_box_max(model, &lifted, aux)?;
    Ok(CertifiedBox {
        physical: spec.clone(),
        lifted,
        aux: aux.clone(),
        zeta_star,
        vertex_count,
        alpha: None,
    })
}

/// Box `center +- alpha * weight * |center|` per variable; absolute
/// half width `alpha * weight` where the center coordinate is zero.
pub fn scaled_box(center: &[f64], weights: &[f64], alpha: f64) -> Result<BoxSpec> {
    if center.len() != weights.len() {
        return Err(Error::Input("weights must have one entry per variable".into()));
    }
    let half: Vec<f64> = center
        .iter()
        .zip(weights)
        .map(|(&c, &w)| {
            let scale = if c == 0.0 { 1.0 } else { c.abs() };
            alpha * w * scale
        })
        .collect();
    BoxSpec::around(center, &half)
}

/// Largest certified scale `alpha` by doubling then bisection.
///
/// The returned `alpha` is certified and `alpha * (1 + tol)` is not (unless
/// the cap [`ALPHA_CAP`] was reached certified).
pub fn grow_box(
    model: &AffineJacobianModel,
    center: &[f64],
    weights: &[f64],
    aux: &AuxiliaryMatrix,
    tol: f64,
) -> Result<(f64, CertifiedBox)> {
    if !(tol > 0.0) {
        return Err(Error::Input(format!("tolerance must be positive, got {tol}")));
    }
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::Input("weights must be finite and non-negative".into()));
    }
    let eval = |alpha: f64| -> Result<CertifiedBox> {
        let mut b = certify_box(model, &scaled_box(center, weights, alpha)?, aux)?;
        b.alpha = Some(alpha);
        Ok(b)
    };
    let at_zero = eval(0.0)?;
    if !at_zero.is_certified() {
        return Err(Error::Certificate(format!(
            "center is not certified (zeta = {:.6e})",
            at_zero.zeta_star
        )));
    }

    // Bracket: lo certified, hi not.
    let (mut lo, mut best) = (0.0, at_zero);
    let mut hi = 1.0;
    loop {
        let b = eval(hi)?;
        if b.is_certified() {
            lo = hi;
            best = b;
            if hi >= ALPHA_CAP {
                return Ok((lo, best));
            }
            hi = (hi * 2.0).min(ALPHA_CAP);
        } else {
            break;
        }
    }
    if lo == 0.0 {
        // shrink until something certifies
        let mut trial = hi * 0.5;
        loop {
            if trial < 1e-12 {
                return Ok((0.0, best));
            }
            let b = eval(trial)?;
            if b.is_certified() {
                lo = trial;
                best = b;
                break;
            }
            hi = trial;
            trial *= 0.5;
        }
    }
    while hi - lo > tol * lo {
        let mid = 0.5 * (lo + hi);
        let b = eval(mid)?;
        if b.is_certified() {
            lo = mid;
            best = b;
        } else {
            hi = mid;
        }
    }
    Ok((lo, best))
}
