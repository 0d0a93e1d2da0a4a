//! Finite spectrum of the pencil `(J, E)`, its left/right eigenvectors and
//! the analytic eigenvalue sensitivity
//!
//! ```text
//! d lambda_i / d z_k = (u_i^T J_k v_i) / (u_i^T E v_i)
//! ```
//!
//! For invertible `D` the finite pencil eigenvalues are the eigenvalues of
//! `J_r = A - B D^{-1} C`. Full-length pencil eigenvectors are lifted from
//! the reduced ones: `v = (v_r; -D^{-1} C v_r)` and `u = (u_r; -D^{-T} B^T u_r)`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::measures::{sort_eigenvalues, spectrum};
use crate::model::{reduced_jacobian, AffineJacobianModel, Blocks};

/// Minimum separation (relative to `max(1, |J_r|)`) between eigenvalues for
/// them to count as simple.
pub const SIMPLE_GAP: f64 = 1e-8;
const INVERSE_ITER_MAX: usize = 50;
const SHIFT_PERTURBATION: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct PencilSpectrum {
    /// Finite eigenvalues, descending real part.
    pub finite: Vec<Complex64>,
    pub infinite_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub lambda: Complex64,
    /// Right eigenvector `v`: `(J - lambda E) v = 0`.
    pub right: DVector<Complex64>,
    /// Left eigenvector `u`: `u^T (J - lambda E) = 0`.
    pub left: DVector<Complex64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensitivityRecord {
    pub eig_index: usize,
    pub coord_index: usize,
    pub value: Complex64,
}

fn to_complex(m: &DMatrix<f64>) -> DMatrix<Complex64> {
    m.map(|v| Complex64::new(v, 0.0))
}

/// Finite eigenvalues of the pencil `(J, E)` computed on the pencil itself.
///
/// Uses the shift-invert map `K = (J - sE)^{-1} E`, whose eigenvalues are
/// `1 / (lambda - s)` for finite `lambda` and zero for the infinite ones.
/// The reduced Jacobian only supplies the shift and the singularity check.
pub fn pencil_finite_spectrum(model: &AffineJacobianModel, z: &[f64]) -> Result<PencilSpectrum> {
    pencil_spectrum_of(&model.blocks_at(z)?)
}

pub fn pencil_spectrum_of(blocks: &Blocks) -> Result<PencilSpectrum> {
    let jr = reduced_jacobian(blocks)?;
    let (n, m) = (blocks.n(), blocks.m());
    let j = blocks.assemble();
    // Any finite eigenvalue has modulus <= ||J_r||_inf, so s is never one of them.
    let s = 1.0 + 1.5 * jr.row_iter().map(|r| r.abs().sum()).fold(0.0, f64::max);
    let mut shifted = j.clone();
    for i in 0..n {
        shifted[(i, i)] -= s;
    }
    let mut e = DMatrix::zeros(n + m, n + m);
    e.view_mut((0, 0), (n, n)).fill_with_identity();
    let k = shifted
        .lu()
        .solve(&e)
        .ok_or_else(|| Error::Numeric("pencil shift is singular".into()))?;
    let mut mu = spectrum(&k)?;
    mu.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
    let floor = 1e-8 / s;
    if mu[..m].iter().any(|v| v.norm() > floor) || mu[m..].iter().any(|v| v.norm() <= floor) {
        return Err(Error::Numeric("pencil has the wrong number of infinite eigenvalues".into()));
    }
    let mut finite: Vec<Complex64> = mu[m..].iter().map(|v| Complex64::new(s, 0.0) + v.inv()).collect();
    sort_eigenvalues(&mut finite);
    Ok(PencilSpectrum { finite, infinite_count: m })
}

/// Eigenvector of `m` for eigenvalue `lambda` by shifted inverse iteration.
fn inverse_iteration(m: &DMatrix<f64>, lambda: Complex64) -> Result<DVector<Complex64>> {
    let n = m.nrows();
    let scale = m.amax().max(1.0);
    let shift = lambda + Complex64::new(SHIFT_PERTURBATION * scale, 0.0);
    let mut shifted = to_complex(m);
    for i in 0..n {
        shifted[(i, i)] -= shift;
    }
    let lu = shifted.lu();
    let mc = to_complex(m);
    let mut v = DVector::from_element(n, Complex64::new(1.0, 0.0));
    for _ in 0..INVERSE_ITER_MAX {
        let next = lu
            .solve(&v)
            .ok_or_else(|| Error::Numeric("inverse iteration hit a singular shift".into()))?;
        let norm = next.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::Numeric("inverse iteration produced a degenerate vector".into()));
        }
        v = next.unscale(norm);
        let residual = (&mc * &v - &v * lambda).norm();
        if residual <= 1e-12 * scale {
            return Ok(v);
        }
    }
    let residual = (&mc * &v - &v * lambda).norm();
    if residual <= 1e-9 * scale {
        Ok(v)
    } else {
        Err(Error::Numeric(format!(
            "inverse iteration stagnated (residual {residual:.3e})"
        )))
    }
}

fn min_gap(values: &[Complex64]) -> f64 {
    let mut gap = f64::INFINITY;
    for i in 0..values.len() {
        for j in i + 1..values.len() {
            gap = gap.min((values[i] - values[j]).norm());
        }
    }
    gap
}

/// Left/right pencil eigenvectors for every finite eigenvalue of a block
/// Jacobian. Requires simple eigenvalues.
pub fn eigen_pairs_of(blocks: &Blocks) -> Result<Vec<EigenPair>> {
    let jr = reduced_jacobian(blocks)?;
    let values = spectrum(&jr)?;
    let gap = min_gap(&values);
    if gap <= SIMPLE_GAP * jr.amax().max(1.0) {
        return Err(Error::Multiplicity { gap });
    }
    let (n, m) = (blocks.n(), blocks.m());
    let d = to_complex(&blocks.d);
    let (d_lu, dt_lu) = (d.clone().lu(), d.transpose().lu());
    let (b, c) = (to_complex(&blocks.b), to_complex(&blocks.c));
    let jrt = jr.transpose();
    values
        .into_iter()
        .map(|lambda| {
            let vr = inverse_iteration(&jr, lambda)?;
            let ur = inverse_iteration(&jrt, lambda)?;
            let mut right = DVector::zeros(n + m);
            let mut left = DVector::zeros(n + m);
            right.rows_mut(0, n).copy_from(&vr);
            left.rows_mut(0, n).copy_from(&ur);
            if m > 0 {
                let tail = d_lu
                    .solve(&(&c * &vr))
                    .ok_or(Error::SingularAlgebraic { cond: f64::INFINITY })?;
                right.rows_mut(n, m).copy_from(&(-tail));
                let tail = dt_lu
                    .solve(&(b.transpose() * &ur))
                    .ok_or(Error::SingularAlgebraic { cond: f64::INFINITY })?;
                left.rows_mut(n, m).copy_from(&(-tail));
            }
            Ok(EigenPair { lambda, right, left })
        })
        .collect()
}

pub fn eigen_pairs(model: &AffineJacobianModel, z: &[f64]) -> Result<Vec<EigenPair>> {
    eigen_pairs_of(&model.blocks_at(z)?)
}

/// `(u^T J_k v) / (u^T E v)` for one eigenpair; `n` is the dynamic block size.
pub fn pair_sensitivity(pair: &EigenPair, jk: &DMatrix<f64>, n: usize) -> Result<Complex64> {
    let denom: Complex64 = (0..n).map(|i| pair.left[i] * pair.right[i]).sum();
    if denom.norm() <= 1e-12 {
        return Err(Error::DegenerateNormalization(denom.norm()));
    }
    let jv = to_complex(jk) * &pair.right;
    let numer: Complex64 = pair.left.iter().zip(jv.iter()).map(|(a, b)| a * b).sum();
    Ok(numer / denom)
}

/// `d lambda_i / d z_k` at lifted point `z`; `i` indexes the sorted finite spectrum.
pub fn eigenvalue_sensitivity(
    model: &AffineJacobianModel,
    z: &[f64],
    i: usize,
    k: usize,
) -> Result<Complex64> {
    if k >= model.terms().len() {
        return Err(Error::Input(format!("coordinate index {k} out of range")));
    }
    let pairs = eigen_pairs(model, z)?;
    let pair = pairs
        .get(i)
        .ok_or_else(|| Error::Input(format!("eigenvalue index {i} out of range")))?;
    pair_sensitivity(pair, &model.terms()[k], model.n())
}

/// All sensitivities at `z`, one record per (eigenvalue, coordinate).
pub fn sensitivity_matrix(model: &AffineJacobianModel, z: &[f64]) -> Result<Vec<SensitivityRecord>> {
    let pairs = eigen_pairs(model, z)?;
    let mut out = Vec::with_capacity(pairs.len() * model.terms().len());
    for (i, pair) in pairs.iter().enumerate() {
        for (k, jk) in model.terms().iter().enumerate() {
            out.push(SensitivityRecord {
                eig_index: i,
                coord_index: k,
                value: pair_sensitivity(pair, jk, model.n())?,
            });
        }
    }
    Ok(out)
}

/// Equally spaced sweep values; a zero-width range yields a single value.
pub fn sweep_values(lo: f64, hi: f64, steps: usize) -> Result<Vec<f64>> {
    if steps == 0 {
        return Err(Error::Input("sweep needs at least one step".into()));
    }
    if !lo.is_finite() || !hi.is_finite() {
        return Err(Error::Input("sweep bounds must be finite".into()));
    }
    if lo == hi || steps == 1 {
        return Ok(vec![lo]);
    }
    let h = (hi - lo) / (steps - 1) as f64;
    Ok((0..steps)
        .map(|s| if s == steps - 1 { hi } else { lo + h * s as f64 })
        .collect())
}

/// Algebraically consistent points along a sweep of one dynamic variable.
/// Each step warm-starts the algebraic Newton solve from the last feasible one.
fn consistent_path(
    model: &AffineJacobianModel,
    var: usize,
    values: &[f64],
) -> Result<Vec<Option<Vec<f64>>>> {
    if var >= model.n() {
        return Err(Error::Input(format!(
            "sweep variable {var} must be a dynamic state (n = {})",
            model.n()
        )));
    }
    if model.residual_spec().is_none() {
        return Err(Error::Unsupported("sweeps require closed-form residuals".into()));
    }
    let base = model.base_point();
    let n = model.n();
    let mut y = base[n..].to_vec();
    let mut out = Vec::with_capacity(values.len());
    for &v in values {
        let mut x = base[..n].to_vec();
        x[var] = v;
        match model.solve_algebraic(&x, &y) {
            Ok(sol) => {
                y = sol.point;
                out.push(Some(x.into_iter().chain(y.iter().copied()).collect()));
            }
            Err(Error::NoConvergence { .. }) => out.push(None),
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// One sweep step of a root locus.
#[derive(Debug, Clone, PartialEq)]
pub struct LocusRow {
    pub value: f64,
    /// Finite eigenvalues in track order; `None` when the step is infeasible.
    pub eigenvalues: Option<Vec<Complex64>>,
    /// Track index (0-based) of the critical mode.
    pub critical_index: Option<usize>,
    /// The set of tracks carrying the maximum real part changed since the
    /// previous feasible step.
    pub crossing: bool,
    /// Greedy pairing assigned some track an eigenvalue that is not its
    /// nearest neighbour.
    pub pairing_anomaly: bool,
}

impl LocusRow {
    pub fn feasible(&self) -> bool {
        self.eigenvalues.is_some()
    }
}

/// Pairs `next` with `tracks` greedily by increasing distance. Returns the
/// reordered eigenvalues and whether any pairing was not nearest-neighbour.
pub fn pair_tracks(tracks: &[Complex64], next: &[Complex64]) -> (Vec<Complex64>, bool) {
    let mut cand: Vec<(f64, usize, usize)> = Vec::with_capacity(tracks.len() * next.len());
    for (t, a) in tracks.iter().enumerate() {
        for (e, b) in next.iter().enumerate() {
            cand.push(((a - b).norm(), t, e));
        }
    }
    cand.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
    let mut assigned: Vec<Option<usize>> = vec![None; tracks.len()];
    let mut used = vec![false; next.len()];
    for (_, t, e) in cand {
        if assigned[t].is_none() && !used[e] {
            assigned[t] = Some(e);
            used[e] = true;
        }
    }
    let mut anomaly = false;
    let out = assigned
        .iter()
        .enumerate()
        .map(|(t, e)| {
            let e = e.expect("equal track and eigenvalue counts");
            let d = (tracks[t] - next[e]).norm();
            if next.iter().any(|b| (tracks[t] - b).norm() < d) {
                anomaly = true;
            }
            next[e]
        })
        .collect();
    (out, anomaly)
}

/// Tracks whose eigenvalue attains the maximum real part.
fn critical_mode(values: &[Complex64]) -> Vec<usize> {
    let max = values.iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max);
    let tol = 1e-9 * max.abs().max(1.0);
    (0..values.len()).filter(|&i| values[i].re >= max - tol).collect()
}

/// Root locus of the finite pencil spectrum as one dynamic variable is swept.
pub fn root_locus_sweep(
    model: &AffineJacobianModel,
    var: usize,
    lo: f64,
    hi: f64,
    steps: usize,
) -> Result<Vec<LocusRow>> {
    let values = sweep_values(lo, hi, steps)?;
    let path = consistent_path(model, var, &values)?;
    let mut rows = Vec::with_capacity(values.len());
    let mut tracks: Option<Vec<Complex64>> = None;
    let mut prev_mode: Option<Vec<usize>> = None;
    for (&value, point) in values.iter().zip(path) {
        let spectrum = point.and_then(|p| {
            let z = model.evaluate_lift(&p);
            pencil_finite_spectrum(model, &z).ok()
        });
        let Some(spec) = spectrum else {
            rows.push(LocusRow {
                value,
                eigenvalues: None,
                critical_index: None,
                crossing: false,
                pairing_anomaly: false,
            });
            continue;
        };
        let (ordered, anomaly) = match &tracks {
            Some(t) => pair_tracks(t, &spec.finite),
            None => (spec.finite.clone(), false),
        };
        let mode = critical_mode(&ordered);
        let crossing = prev_mode.as_ref().is_some_and(|p| *p != mode);
        rows.push(LocusRow {
            value,
            critical_index: mode.first().copied(),
            eigenvalues: Some(ordered.clone()),
            crossing,
            pairing_anomaly: anomaly,
        });
        tracks = Some(ordered);
        prev_mode = Some(mode);
    }
    Ok(rows)
}

/// One sweep step of a sensitivity sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityRow {
    pub value: f64,
    pub tracked: Option<Complex64>,
    /// `(coordinate index, d lambda / d z_k)` for each requested coordinate.
    pub by_coord: Vec<(usize, Complex64)>,
    /// Chain-rule derivative with respect to the swept physical variable.
    pub by_var: Option<Complex64>,
}

/// Sensitivities of one tracked eigenvalue along a sweep.
///
/// `eig_selector` indexes the sorted finite spectrum at the first feasible
/// step; later steps follow the nearest eigenvalue.
pub fn sensitivity_sweep(
    model: &AffineJacobianModel,
    var: usize,
    lo: f64,
    hi: f64,
    steps: usize,
    eig_selector: usize,
    coords: &[usize],
) -> Result<Vec<SensitivityRow>> {
    if let Some(&k) = coords.iter().find(|&&k| k >= model.terms().len()) {
        return Err(Error::Input(format!("coordinate index {k} out of range")));
    }
    if eig_selector >= model.n() {
        return Err(Error::Input(format!("eigenvalue index {eig_selector} out of range")));
    }
    let values = sweep_values(lo, hi, steps)?;
    let path = consistent_path(model, var, &values)?;
    let mut rows = Vec::with_capacity(values.len());
    let mut tracked: Option<Complex64> = None;
    for (&value, point) in values.iter().zip(path) {
        let step = point.and_then(|p| {
            let z = model.evaluate_lift(&p);
            let pairs = eigen_pairs(model, &z).ok()?;
            let idx = match tracked {
                None => eig_selector,
                Some(prev) => (0..pairs.len())
                    .min_by(|&a, &b| {
                        (pairs[a].lambda - prev)
                            .norm()
                            .partial_cmp(&(pairs[b].lambda - prev).norm())
                            .unwrap_or(std::cmp::Ordering::Equal)
                    })
                    .expect("non-empty spectrum"),
            };
            let pair = &pairs[idx];
            let all: Vec<Complex64> = model
                .terms()
                .iter()
                .map(|jk| pair_sensitivity(pair, jk, model.n()))
                .collect::<Result<_>>()
                .ok()?;
            let dz = model.lift_derivative(&p, var);
            let by_var = all.iter().zip(&dz).map(|(s, d)| s * d).sum();
            let by_coord = coords.iter().map(|&k| (k, all[k])).collect();
            Some((pair.lambda, by_coord, by_var))
        });
        match step {
            Some((lambda, by_coord, by_var)) => {
                tracked = Some(lambda);
                rows.push(SensitivityRow { value, tracked: Some(lambda), by_coord, by_var: Some(by_var) });
            }
            None => rows.push(SensitivityRow { value, tracked: None, by_coord: vec![], by_var: None }),
        }
    }
    Ok(rows)
}
