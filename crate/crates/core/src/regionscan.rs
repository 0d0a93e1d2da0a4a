//! Exploration of stability regions: point classification, 2-D grid scans,
//! Monte-Carlo area measures and the area-versus-critical-eigenvalue
//! regression.
//!
//! Samples are drawn from a ChaCha stream keyed by `(seed, sample index)`,
//! so the outcome of every sample is independent of how the work is split
//! across workers.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::certify::{bmi_value, certify_point, construct_z_star, AuxiliaryMatrix};
use crate::error::{Error, Result};
use crate::measures::{condition_number, is_hurwitz, spectral_abscissa};
use crate::model::{block_partition, reduced_jacobian, AffineJacobianModel, BoxSpec, Interval, D_COND_LIMIT};
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    /// Reduced Jacobian is Hurwitz (exact criterion).
    ExactStable,
    /// Sufficient condition holds; implies `ExactStable`.
    BmiCertified,
    /// Sufficient condition fails although the point is stable.
    Uncertified,
    Unstable,
    AlgebraicSingular,
}

impl Classification {
    pub fn is_stable(&self) -> bool {
        matches!(self, Classification::ExactStable | Classification::BmiCertified)
    }

    pub fn label(&self) -> &'static str {
        match self {
            Classification::ExactStable => "exact_stable",
            Classification::BmiCertified => "bmi_certified",
            Classification::Uncertified => "uncertified",
            Classification::Unstable => "unstable",
            Classification::AlgebraicSingular => "algebraic_singular",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScanMode {
    Exact,
    BmiFixedZ(AuxiliaryMatrix),
    BmiAtPoint,
}

impl ScanMode {
    pub fn label(&self) -> &'static str {
        match self {
            ScanMode::Exact => "exact",
            ScanMode::BmiFixedZ(_) => "bmi_fixed_z",
            ScanMode::BmiAtPoint => "bmi_at_point",
        }
    }
}

pub fn classify_point(
    model: &AffineJacobianModel,
    physical: &[f64],
    mode: &ScanMode,
) -> Result<Classification> {
    if physical.len() != model.dim() {
        return Err(Error::Input(format!(
            "point has length {}, expected {}",
            physical.len(),
            model.dim()
        )));
    }
    let z = model.evaluate_lift(physical);
    let j = model.jacobian_at(&z)?;
    let blocks = block_partition(&j, model.n(), model.m());
    if model.m() > 0 && !(condition_number(&blocks.d) < D_COND_LIMIT) {
        return Ok(Classification::AlgebraicSingular);
    }
    let hurwitz = || -> Result<bool> {
        match reduced_jacobian(&blocks) {
            Ok(jr) => is_hurwitz(&jr, 0.0),
            Err(Error::SingularAlgebraic { .. }) => Ok(false),
            Err(e) => Err(e),
        }
    };
    let fallback = |h: bool| if h { Classification::Uncertified } else { Classification::Unstable };
    Ok(match mode {
        ScanMode::Exact => {
            if hurwitz()? {
                Classification::ExactStable
            } else {
                Classification::Unstable
            }
        }
        ScanMode::BmiFixedZ(aux) => {
            if bmi_value(&j, aux)? < 0.0 {
                Classification::BmiCertified
            } else {
                fallback(hurwitz()?)
            }
        }
        ScanMode::BmiAtPoint => {
            if certify_point(model, &z, None)?.is_certified() {
                Classification::BmiCertified
            } else {
                fallback(hurwitz()?)
            }
        }
    })
}

/// Coordinate moved along one scan axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AxisVar {
    Physical(usize),
    /// Magnitude of the rectangular pair `(x, y)`, angle held at the pinned point.
    Magnitude { x: usize, y: usize },
}

impl AxisVar {
    fn touches(&self) -> Vec<usize> {
        match *self {
            AxisVar::Physical(i) => vec![i],
            AxisVar::Magnitude { x, y } => vec![x, y],
        }
    }

    fn apply(&self, point: &mut [f64], value: f64) {
        match *self {
            AxisVar::Physical(i) => point[i] = value,
            AxisVar::Magnitude { x, y } => {
                let angle = point[y].atan2(point[x]);
                point[x] = value * angle.cos();
                point[y] = value * angle.sin();
            }
        }
    }

    pub fn label(&self, names: &[String]) -> String {
        match *self {
            AxisVar::Physical(i) => names[i].clone(),
            AxisVar::Magnitude { x, y } => format!("|{}+j{}|", names[x], names[y]),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanAxis {
    pub var: AxisVar,
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

impl ScanAxis {
    pub fn values(&self) -> Result<Vec<f64>> {
        crate::spectra::sweep_values(self.lo, self.hi, self.steps)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanCell {
    pub a1: f64,
    pub a2: f64,
    pub classes: Vec<Classification>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanGrid {
    pub axis1: ScanAxis,
    pub axis2: ScanAxis,
    /// Values of every variable not moved by the axes.
    pub pinned: Vec<f64>,
    pub modes: Vec<String>,
    /// Row-major: `axis1` outer, `axis2` inner.
    pub cells: Vec<ScanCell>,
}

/// Classifies every cell of a 2-D grid around `pinned` under each mode.
pub fn scan_grid(
    model: &AffineJacobianModel,
    pinned: &[f64],
    axis1: ScanAxis,
    axis2: ScanAxis,
    modes: &[ScanMode],
) -> Result<ScanGrid> {
    if pinned.len() != model.dim() {
        return Err(Error::Input("pinned point has wrong length".into()));
    }
    for v in axis1.var.touches().into_iter().chain(axis2.var.touches()) {
        if v >= model.dim() {
            return Err(Error::Input(format!("axis variable {v} out of range")));
        }
    }
    let t1 = axis1.var.touches();
    if axis2.var.touches().iter().any(|v| t1.contains(v)) {
        return Err(Error::Input("scan axes must move distinct variables".into()));
    }
    let v1 = axis1.values()?;
    let v2 = axis2.values()?;
    let cols = v2.len();
    let cells = par::map_indexed(v1.len() * cols, |idx| {
        let (a1, a2) = (v1[idx / cols], v2[idx % cols]);
        let mut point = pinned.to_vec();
        axis1.var.apply(&mut point, a1);
        axis2.var.apply(&mut point, a2);
        let classes = modes
            .iter()
            .map(|m| classify_point(model, &point, m))
            .collect::<Result<Vec<_>>>()?;
        Ok(ScanCell { a1, a2, classes })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(ScanGrid {
        axis1,
        axis2,
        pinned: pinned.to_vec(),
        modes: modes.iter().map(|m| m.label().to_string()).collect(),
        cells,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AreaEstimate {
    pub stable_count: u64,
    pub total_count: u64,
    pub ratio: f64,
    /// Spectral abscissa of `J_r` at the box center; `None` when `D` is singular there.
    pub sigma_critical: Option<f64>,
    pub seed: u64,
}

/// Deterministic sample `index` of the box for `seed`.
pub fn box_sample(phys: &[Interval], seed: u64, index: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    phys.iter()
        .map(|iv| {
            if iv.is_degenerate() {
                iv.lo
            } else {
                let u: f64 = rng.random();
                iv.lo + (iv.hi - iv.lo) * u
            }
        })
        .collect()
}

fn sigma_at(model: &AffineJacobianModel, physical: &[f64]) -> Result<Option<f64>> {
    match model.reduced_at(&model.evaluate_lift(physical)) {
        Ok(jr) => Ok(Some(spectral_abscissa(&jr)?)),
        Err(Error::SingularAlgebraic { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Area measures for several modes over one shared sample set.
pub fn area_measure_modes(
    model: &AffineJacobianModel,
    spec: &BoxSpec,
    modes: &[ScanMode],
    samples: u64,
    seed: u64,
) -> Result<Vec<AreaEstimate>> {
    if samples == 0 {
        return Err(Error::Input("samples must be at least 1".into()));
    }
    let phys = spec.resolve(model.base_point())?;
    let center: Vec<f64> = phys.iter().map(Interval::mid).collect();
    let sigma_critical = sigma_at(model, &center)?;
    let outcomes = par::map_indexed(samples as usize, |i| {
        let x = box_sample(&phys, seed, i as u64);
        modes
            .iter()
            .map(|m| classify_point(model, &x, m).map(|c| c.is_stable()))
            .collect::<Result<Vec<bool>>>()
    });
    let mut counts = vec![0u64; modes.len()];
    for o in outcomes {
        for (c, stable) in counts.iter_mut().zip(o?) {
            *c += stable as u64;
        }
    }
    Ok(counts
        .into_iter()
        .map(|stable_count| AreaEstimate {
            stable_count,
            total_count: samples,
            ratio: stable_count as f64 / samples as f64,
            sigma_critical,
            seed,
        })
        .collect())
}

/// Fraction of uniform box samples classified stable under `mode`.
pub fn area_measure(
    model: &AffineJacobianModel,
    spec: &BoxSpec,
    mode: &ScanMode,
    samples: u64,
    seed: u64,
) -> Result<AreaEstimate> {
    let mut v = area_measure_modes(model, spec, std::slice::from_ref(mode), samples, seed)?;
    Ok(v.remove(0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_value: f64,
}

/// Ordinary least squares `y = slope * x + intercept` with Pearson `r`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<RegressionFit> {
    if xs.len() != ys.len() {
        return Err(Error::Input("xs and ys differ in length".into()));
    }
    if xs.len() < 2 {
        return Err(Error::Input("regression needs at least two points".into()));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if !(sxx > 0.0) {
        return Err(Error::DegenerateFit);
    }
    let slope = sxy / sxx;
    let r_value = if syy > 0.0 { (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0) } else { 0.0 };
    Ok(RegressionFit { slope, intercept: my - slope * mx, r_value })
}

#[derive(Debug, Clone, PartialEq)]
pub enum CenterOutcome {
    Done { center: Vec<f64>, exact: AreaEstimate, bmi: AreaEstimate },
    Skipped { reason: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AreaExperiment {
    pub centers: Vec<CenterOutcome>,
    /// `None` when the regressor is degenerate.
    pub fit_exact: Option<RegressionFit>,
    pub fit_bmi: Option<RegressionFit>,
}

/// Area measure under the exact and fixed-`Z` criteria for boxes around
/// each center, then the regression of area against `sigma_critical`.
///
/// For models with residuals the algebraic part of each center is re-solved
/// first. `Z` is rebuilt at every center. Both modes share samples.
pub fn area_vs_sigma_experiment(
    model: &AffineJacobianModel,
    centers: &[Vec<f64>],
    half_widths: &[f64],
    samples: u64,
    seed: u64,
) -> Result<AreaExperiment> {
    let n = model.n();
    let mut out = Vec::with_capacity(centers.len());
    for c in centers {
        if c.len() != model.dim() {
            return Err(Error::Input("center has wrong length".into()));
        }
        let center = if model.residual_spec().is_some() {
            match model.solve_algebraic(&c[..n], &c[n..]) {
                Ok(sol) => c[..n].iter().copied().chain(sol.point).collect(),
                Err(e) => {
                    out.push(CenterOutcome::Skipped { reason: e.to_string() });
                    continue;
                }
            }
        } else {
            c.clone()
        };
        let aux = match construct_z_star(model, &model.evaluate_lift(&center)) {
            Ok(cert) => cert.aux.expect("construct_z_star returns a Z"),
            Err(e) => {
                out.push(CenterOutcome::Skipped { reason: e.to_string() });
                continue;
            }
        };
        let spec = BoxSpec::around(&center, half_widths)?;
        let modes = [ScanMode::Exact, ScanMode::BmiFixedZ(aux)];
        let mut est = area_measure_modes(model, &spec, &modes, samples, seed)?;
        let bmi = est.pop().expect("two modes");
        let exact = est.pop().expect("two modes");
        out.push(CenterOutcome::Done { center, exact, bmi });
    }
    let fit = |pick: fn(&CenterOutcome) -> Option<(f64, f64)>| {
        let (xs, ys): (Vec<f64>, Vec<f64>) = out.iter().filter_map(pick).unzip();
        linear_fit(&xs, &ys).ok()
    };
    let fit_exact = fit(|o| match o {
        CenterOutcome::Done { exact, .. } => exact.sigma_critical.map(|s| (s, exact.ratio)),
        _ => None,
    });
    let fit_bmi = fit(|o| match o {
        CenterOutcome::Done { bmi, .. } => bmi.sigma_critical.map(|s| (s, bmi.ratio)),
        _ => None,
    });
    Ok(AreaExperiment { centers: out, fit_exact, fit_bmi })
}

/// Algebraically consistent points along a sweep of dynamic variable `var`
/// (starting at the base point and moving toward `limit`) whose spectral
/// abscissa equals each of `targets`.
///
/// The path is walked in `resolution` steps; each target is located by
/// bisection inside the first step where the abscissa crosses it.
pub fn centers_by_sigma(
    model: &AffineJacobianModel,
    var: usize,
    limit: f64,
    resolution: usize,
    targets: &[f64],
) -> Result<Vec<Vec<f64>>> {
    if var >= model.n() {
        return Err(Error::Input("center path variable must be dynamic".into()));
    }
    let n = model.n();
    let base = model.base_point().to_vec();
    let point_at = |v: f64, y_guess: &[f64]| -> Option<Vec<f64>> {
        let mut x = base[..n].to_vec();
        x[var] = v;
        let sol = model.solve_algebraic(&x, y_guess).ok()?;
        Some(x.into_iter().chain(sol.point).collect())
    };
    let sigma = |p: &[f64]| sigma_at(model, p).ok().flatten();
    let values = crate::spectra::sweep_values(base[var], limit, resolution.max(2))?;
    let mut path: Vec<(f64, Vec<f64>, f64)> = Vec::new();
    let mut y = base[n..].to_vec();
    for v in values {
        let Some(p) = point_at(v, &y) else { break };
        let Some(s) = sigma(&p) else { break };
        y = p[n..].to_vec();
        path.push((v, p, s));
    }
    let mut centers = Vec::with_capacity(targets.len());
    for &t in targets {
        let hit = path.windows(2).find(|w| (w[0].2 - t) * (w[1].2 - t) <= 0.0);
        let Some(w) = hit else {
            return Err(Error::Input(format!("sigma target {t} not reached along the path")));
        };
        let (mut lo, mut hi) = ((w[0].0, w[0].1.clone()), (w[1].0, w[1].1.clone()));
        let below = w[0].2 < t;
        for _ in 0..60 {
            let mid = 0.5 * (lo.0 + hi.0);
            let Some(p) = point_at(mid, &lo.1[n..]) else { break };
            let Some(s) = sigma(&p) else { break };
            if (s < t) == below {
                lo = (mid, p);
            } else {
                hi = (mid, p);
            }
        }
        centers.push(lo.1);
    }
    Ok(centers)
}
