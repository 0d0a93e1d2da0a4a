//! DAE models whose block Jacobian is affine in lifted coordinates.
//!
//! A model carries `J(z) = J0 + sum_k z_k J_k` where every `z_k` is a
//! product of at most two features (a physical variable, or the sine or
//! cosine of an angle). Models built in code may also carry closed-form
//! residuals, which enables equilibrium solving and sweeps; models loaded
//! from Jacobian-only files support the certification routines only.

mod interval;
pub mod twobus;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{check_finite, check_square, condition_number};

pub use interval::{BoxSpec, Interval};
pub use twobus::TwoBusParams;

/// Condition number of `D` above which the algebraic block counts as singular.
pub const D_COND_LIMIT: f64 = 1e8;
pub const NEWTON_TOL: f64 = 1e-10;
pub const NEWTON_MAX_ITER: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "var", rename_all = "lowercase")]
pub enum Feature {
    Base(usize),
    Sin(usize),
    Cos(usize),
}

impl Feature {
    pub fn var(&self) -> usize {
        match *self {
            Feature::Base(i) | Feature::Sin(i) | Feature::Cos(i) => i,
        }
    }

    fn value(&self, x: &[f64]) -> f64 {
        match *self {
            Feature::Base(i) => x[i],
            Feature::Sin(i) => x[i].sin(),
            Feature::Cos(i) => x[i].cos(),
        }
    }

    fn derivative(&self, x: &[f64], wrt: usize) -> f64 {
        if self.var() != wrt {
            return 0.0;
        }
        match *self {
            Feature::Base(_) => 1.0,
            Feature::Sin(i) => x[i].cos(),
            Feature::Cos(i) => -x[i].sin(),
        }
    }

    fn image(&self, boxes: &[Interval]) -> Interval {
        match *self {
            Feature::Base(i) => boxes[i],
            Feature::Sin(i) => boxes[i].sin(),
            Feature::Cos(i) => boxes[i].cos(),
        }
    }

    fn label(&self, names: &[String]) -> String {
        match *self {
            Feature::Base(i) => names[i].clone(),
            Feature::Sin(i) => format!("sin({})", names[i]),
            Feature::Cos(i) => format!("cos({})", names[i]),
        }
    }
}

/// Product of one or two features.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LiftedCoord {
    pub factors: Vec<Feature>,
}

impl LiftedCoord {
    pub fn single(f: Feature) -> Self {
        LiftedCoord { factors: vec![f] }
    }

    pub fn product(a: Feature, b: Feature) -> Self {
        LiftedCoord { factors: vec![a, b] }
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.factors.iter().map(|f| f.value(x)).product()
    }
}

/// Closed-form residuals attached to a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ResidualSpec {
    TwoBus(TwoBusParams),
}

impl ResidualSpec {
    fn evaluate(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        match self {
            ResidualSpec::TwoBus(p) => p.residuals(x),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AffineJacobianModel {
    n: usize,
    m: usize,
    names: Vec<String>,
    units: Option<Vec<String>>,
    base_point: Vec<f64>,
    lift: Vec<LiftedCoord>,
    j0: DMatrix<f64>,
    terms: Vec<DMatrix<f64>>,
    residual_spec: Option<ResidualSpec>,
}

/// Result of a Newton solve.
#[derive(Debug, Clone, PartialEq)]
pub struct NewtonSolution {
    pub point: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

/// The four blocks of `J = [[A, B], [C, D]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Blocks {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub d: DMatrix<f64>,
}

impl Blocks {
    pub fn assemble(&self) -> DMatrix<f64> {
        let n = self.a.nrows();
        let m = self.d.nrows();
        let mut j = DMatrix::zeros(n + m, n + m);
        j.view_mut((0, 0), (n, n)).copy_from(&self.a);
        j.view_mut((0, n), (n, m)).copy_from(&self.b);
        j.view_mut((n, 0), (m, n)).copy_from(&self.c);
        j.view_mut((n, n), (m, m)).copy_from(&self.d);
        j
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn m(&self) -> usize {
        self.d.nrows()
    }
}

impl AffineJacobianModel {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        n: usize,
        m: usize,
        names: Vec<String>,
        units: Option<Vec<String>>,
        base_point: Vec<f64>,
        lift: Vec<LiftedCoord>,
        j0: DMatrix<f64>,
        terms: Vec<DMatrix<f64>>,
        residual_spec: Option<ResidualSpec>,
    ) -> Result<Self> {
        let dim = n + m;
        if n == 0 {
            return Err(Error::Input("model needs at least one dynamic state".into()));
        }
        if names.len() != dim || base_point.len() != dim {
            return Err(Error::Input(format!(
                "names and base_point must have length n+m = {dim}"
            )));
        }
        if let Some(u) = &units {
            if u.len() != dim {
                return Err(Error::Input(format!("units must have length n+m = {dim}")));
            }
        }
        if base_point.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("base_point must be finite".into()));
        }
        if check_square(&j0, "J0")? != dim {
            return Err(Error::Input(format!("J0 must have order {dim}")));
        }
        check_finite(&j0, "J0")?;
        if terms.len() != lift.len() {
            return Err(Error::Input("one matrix per lifted coordinate required".into()));
        }
        for (k, t) in terms.iter().enumerate() {
            if t.nrows() != dim || t.ncols() != dim {
                return Err(Error::Input(format!("J_{k} must have order {dim}")));
            }
            check_finite(t, "J_k")?;
        }
        for (k, coord) in lift.iter().enumerate() {
            if coord.factors.is_empty() || coord.factors.len() > 2 {
                return Err(Error::Input(format!(
                    "lifted coordinate {k} must have 1 or 2 factors"
                )));
            }
            for f in &coord.factors {
                if f.var() >= dim {
                    return Err(Error::Input(format!(
                        "lifted coordinate {k} references variable {} (dimension {dim})",
                        f.var()
                    )));
                }
                if let (Feature::Sin(i) | Feature::Cos(i), Some(u)) = (f, &units) {
                    if u[*i] != "rad" {
                        return Err(Error::Input(format!(
                            "sin/cos applied to non-angle variable {}",
                            names[*i]
                        )));
                    }
                }
            }
            if lift[..k].contains(coord) {
                return Err(Error::Input(format!("lifted coordinate {k} is a duplicate")));
            }
        }
        let model = AffineJacobianModel {
            n,
            m,
            names,
            units,
            base_point,
            lift,
            j0,
            terms,
            residual_spec,
        };
        if m > 0 {
            let cond = model.d_condition(&model.evaluate_lift(&model.base_point));
            if !(cond < D_COND_LIMIT) {
                return Err(Error::SingularAlgebraic { cond });
            }
        }
        Ok(model)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.n + self.m
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn units(&self) -> Option<&[String]> {
        self.units.as_deref()
    }

    pub fn base_point(&self) -> &[f64] {
        &self.base_point
    }

    pub fn lift(&self) -> &[LiftedCoord] {
        &self.lift
    }

    pub fn j0(&self) -> &DMatrix<f64> {
        &self.j0
    }

    pub fn terms(&self) -> &[DMatrix<f64>] {
        &self.terms
    }

    pub fn residual_spec(&self) -> Option<&ResidualSpec> {
        self.residual_spec.as_ref()
    }

    /// Copy of the model with a different base point (validated as in [`Self::new`]).
    pub fn with_base_point(&self, base_point: Vec<f64>) -> Result<Self> {
        AffineJacobianModel::new(
            self.n,
            self.m,
            self.names.clone(),
            self.units.clone(),
            base_point,
            self.lift.clone(),
            self.j0.clone(),
            self.terms.clone(),
            self.residual_spec.clone(),
        )
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.names
            .iter()
            .position(|n| n == name)
            .or_else(|| name.parse::<usize>().ok().filter(|&i| i < self.dim()))
    }

    pub fn coord_name(&self, k: usize) -> String {
        self.lift[k]
            .factors
            .iter()
            .map(|f| f.label(&self.names))
            .collect::<Vec<_>>()
            .join("*")
    }

    /// Descriptor matrix `E`: identity on the dynamic rows, zero on the algebraic ones.
    pub fn descriptor(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim(), self.dim(), |i, j| {
            if i == j && i < self.n {
                1.0
            } else {
                0.0
            }
        })
    }

    /// Lifted coordinates of a physical point, in model order.
    pub fn evaluate_lift(&self, physical: &[f64]) -> Vec<f64> {
        debug_assert_eq!(physical.len(), self.dim());
        self.lift.iter().map(|c| c.value(physical)).collect()
    }

    /// `dz / dx_wrt` at a physical point.
    pub fn lift_derivative(&self, physical: &[f64], wrt: usize) -> Vec<f64> {
        self.lift
            .iter()
            .map(|c| match c.factors.as_slice() {
                [f] => f.derivative(physical, wrt),
                [f, g] => {
                    f.derivative(physical, wrt) * g.value(physical)
                        + f.value(physical) * g.derivative(physical, wrt)
                }
                _ => unreachable!("validated at construction"),
            })
            .collect()
    }

    /// `J0 + sum_k z_k J_k`.
    pub fn jacobian_at(&self, z: &[f64]) -> Result<DMatrix<f64>> {
        if z.len() != self.terms.len() {
            return Err(Error::Input(format!(
                "lifted vector has length {}, model has {} coordinates",
                z.len(),
                self.terms.len()
            )));
        }
        let mut j = self.j0.clone();
        for (zk, jk) in z.iter().zip(&self.terms) {
            if *zk != 0.0 {
                j += jk * *zk;
            }
        }
        Ok(j)
    }

    /// Jacobian at a physical point.
    pub fn jacobian_physical(&self, physical: &[f64]) -> Result<DMatrix<f64>> {
        self.check_physical(physical)?;
        self.jacobian_at(&self.evaluate_lift(physical))
    }

    pub fn blocks_at(&self, z: &[f64]) -> Result<Blocks> {
        Ok(block_partition(&self.jacobian_at(z)?, self.n, self.m))
    }

    /// Condition number of the algebraic block `D` at lifted point `z`.
    pub fn d_condition(&self, z: &[f64]) -> f64 {
        match self.jacobian_at(z) {
            Ok(j) => condition_number(&block_partition(&j, self.n, self.m).d),
            Err(_) => f64::INFINITY,
        }
    }

    /// Reduced Jacobian `J_r(z)`.
    pub fn reduced_at(&self, z: &[f64]) -> Result<DMatrix<f64>> {
        reduced_jacobian(&self.blocks_at(z)?)
    }

    fn check_physical(&self, physical: &[f64]) -> Result<()> {
        if physical.len() != self.dim() {
            return Err(Error::Input(format!(
                "physical point has length {}, expected {}",
                physical.len(),
                self.dim()
            )));
        }
        Ok(())
    }

    /// Closed-form `(f, g)`.
    pub fn residuals(&self, physical: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_physical(physical)?;
        let spec = self.residual_spec.as_ref().ok_or_else(|| {
            Error::Unsupported("model has no closed-form residuals (Jacobian-only file)".into())
        })?;
        Ok(spec.evaluate(physical))
    }

    fn stacked_residual(&self, physical: &[f64]) -> Result<DVector<f64>> {
        let (f, g) = self.residuals(physical)?;
        Ok(DVector::from_iterator(self.dim(), f.into_iter().chain(g)))
    }

    /// Newton iteration on `(f, g) = 0` over all variables.
    pub fn solve_equilibrium(&self, guess: &[f64]) -> Result<NewtonSolution> {
        self.check_physical(guess)?;
        let mut x = guess.to_vec();
        for iteration in 0..=NEWTON_MAX_ITER {
            let r = self.stacked_residual(&x)?;
            let norm = r.amax();
            if norm <= NEWTON_TOL {
                return Ok(NewtonSolution { point: x, iterations: iteration, residual: norm });
            }
            if iteration == NEWTON_MAX_ITER || !norm.is_finite() {
                return Err(Error::NoConvergence { iterations: iteration, residual: norm });
            }
            let j = self.jacobian_physical(&x)?;
            let step = newton_step(j, &r).ok_or(Error::NoConvergence {
                iterations: iteration,
                residual: norm,
            })?;
            for (xi, si) in x.iter_mut().zip(step.iter()) {
                *xi -= si;
            }
        }
        unreachable!()
    }

    /// Newton iteration on `g(x, y) = 0` over `y` with `x` held fixed.
    pub fn solve_algebraic(&self, x_part: &[f64], y_guess: &[f64]) -> Result<NewtonSolution> {
        if x_part.len() != self.n || y_guess.len() != self.m {
            return Err(Error::Input("x_part/y_guess have wrong lengths".into()));
        }
        let mut point: Vec<f64> = x_part.iter().chain(y_guess).copied().collect();
        for iteration in 0..=NEWTON_MAX_ITER {
            let (_, g) = self.residuals(&point)?;
            let r = DVector::from_vec(g);
            let norm = r.amax();
            if norm <= NEWTON_TOL {
                return Ok(NewtonSolution {
                    point: point[self.n..].to_vec(),
                    iterations: iteration,
                    residual: norm,
                });
            }
            if iteration == NEWTON_MAX_ITER || !norm.is_finite() {
                return Err(Error::NoConvergence { iterations: iteration, residual: norm });
            }
            let d = block_partition(&self.jacobian_physical(&point)?, self.n, self.m).d;
            let step = newton_step(d, &r).ok_or(Error::NoConvergence {
                iterations: iteration,
                residual: norm,
            })?;
            for (yi, si) in point[self.n..].iter_mut().zip(step.iter()) {
                *yi -= si;
            }
        }
        unreachable!()
    }

    /// Lifted-coordinate box enclosing the image of a physical box.
    ///
    /// Unlisted physical variables are pinned to the base point.
    pub fn propagate_box(&self, spec: &BoxSpec) -> Result<Vec<Interval>> {
        let phys = spec.resolve(&self.base_point)?;
        Ok(self.propagate_intervals(&phys))
    }

    pub fn propagate_intervals(&self, phys: &[Interval]) -> Vec<Interval> {
        self.lift
            .iter()
            .map(|c| match c.factors.as_slice() {
                [f] => f.image(phys),
                [f, g] => f.image(phys).mul(&g.image(phys)),
                _ => unreachable!("validated at construction"),
            })
            .collect()
    }
}

fn newton_step(j: DMatrix<f64>, r: &DVector<f64>) -> Option<DVector<f64>> {
    if !(condition_number(&j) < 1e14) {
        return None;
    }
    j.lu().solve(r).filter(|s| s.iter().all(|v| v.is_finite()))
}

/// Splits an `(n+m)` square matrix into `A` (n x n), `B` (n x m), `C` (m x n), `D` (m x m).
pub fn block_partition(j: &DMatrix<f64>, n: usize, m: usize) -> Blocks {
    assert_eq!(j.nrows(), n + m, "block_partition: order mismatch");
    Blocks {
        a: j.view((0, 0), (n, n)).into_owned(),
        b: j.view((0, n), (n, m)).into_owned(),
        c: j.view((n, 0), (m, n)).into_owned(),
        d: j.view((n, n), (m, m)).into_owned(),
    }
}

/// `J_r = A - B D^{-1} C`; fails when `D` is singular (condition >= 1e8).
pub fn reduced_jacobian(blocks: &Blocks) -> Result<DMatrix<f64>> {
    if blocks.m() == 0 {
        return Ok(blocks.a.clone());
    }
    let cond = condition_number(&blocks.d);
    if !(cond < D_COND_LIMIT) {
        return Err(Error::SingularAlgebraic { cond });
    }
    let d_inv_c = blocks
        .d
        .clone()
        .lu()
        .solve(&blocks.c)
        .ok_or(Error::SingularAlgebraic { cond })?;
    Ok(&blocks.a - &blocks.b * d_inv_c)
}

/// The built-in two-bus system at its solved equilibrium.
///
/// The equilibrium is found by Newton from `(delta, omega, vx, vy) = (0.3, 0, 1, 0)`.
pub fn build_two_bus(params: TwoBusParams) -> Result<AffineJacobianModel> {
    params.validate()?;
    let guess = vec![0.3, 0.0, 1.0, 0.0];
    let unsolved = two_bus_unsolved(params, guess.clone())?;
    let eq = unsolved.solve_equilibrium(&guess)?;
    unsolved.with_base_point(eq.point)
}

/// Two-bus model with an arbitrary base point (no equilibrium solve).
pub fn two_bus_unsolved(params: TwoBusParams, base_point: Vec<f64>) -> Result<AffineJacobianModel> {
    use twobus::{DELTA, VX, VY};
    params.validate()?;
    let (j0, terms) = params.affine_terms();
    let (s, c) = (Feature::Sin(DELTA), Feature::Cos(DELTA));
    let (vx, vy) = (Feature::Base(VX), Feature::Base(VY));
    let lift = vec![
        LiftedCoord::single(s),
        LiftedCoord::single(c),
        LiftedCoord::single(vx),
        LiftedCoord::single(vy),
        LiftedCoord::product(s, vx),
        LiftedCoord::product(s, vy),
        LiftedCoord::product(c, vx),
        LiftedCoord::product(c, vy),
    ];
    AffineJacobianModel::new(
        2,
        2,
        ["delta", "omega", "vx", "vy"].map(String::from).to_vec(),
        Some(["rad", "pu", "pu", "pu"].map(String::from).to_vec()),
        base_point,
        lift,
        j0,
        terms,
        Some(ResidualSpec::TwoBus(params)),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;
    use std::f64::consts::FRAC_PI_2;

    fn default_model() -> AffineJacobianModel {
        build_two_bus(TwoBusParams::default()).unwrap()
    }

    #[test]
    fn two_bus_shape() {
        let m = default_model();
        assert_eq!((m.n(), m.m(), m.lift().len()), (2, 2, 8));
        assert_eq!(m.coord_name(4), "sin(delta)*vx");
    }

    #[test]
    fn lift_examples() {
        let m = default_model();
        let z = m.evaluate_lift(&[0.0, 0.0, 0.9, 0.1]);
        assert_eq!(z, vec![0.0, 1.0, 0.9, 0.1, 0.0, 0.0, 0.9, 0.1]);
        let z = m.evaluate_lift(&[FRAC_PI_2, 0.0, 0.9, 0.1]);
        assert_eq!((z[0], z[4]), (1.0, 0.9));
        assert!(z[1].abs() < 1e-16 && z[6].abs() < 1e-16);
    }

    #[test]
    fn jacobian_at_zero_is_j0() {
        let m = default_model();
        assert_eq!(m.jacobian_at(&[0.0; 8]).unwrap(), *m.j0());
        assert!(matches!(m.jacobian_at(&[0.0; 3]), Err(Error::Input(_))));
    }

    #[test]
    fn block_partition_identity() {
        let b = block_partition(&DMatrix::identity(4, 4), 2, 2);
        assert_eq!(b.a, DMatrix::identity(2, 2));
        assert_eq!(b.b, DMatrix::zeros(2, 2));
        assert_eq!(b.c, DMatrix::zeros(2, 2));
        assert_eq!(b.d, DMatrix::identity(2, 2));
        let j = DMatrix::from_fn(5, 5, |i, k| (i * 5 + k) as f64);
        assert_eq!(block_partition(&j, 3, 2).assemble(), j);
    }

    #[test]
    fn reduced_examples() {
        let a = dmatrix![1.0, 2.0; 3.0, 4.0];
        let blocks = Blocks {
            a: a.clone(),
            b: DMatrix::zeros(2, 1),
            c: dmatrix![1.0, 1.0],
            d: dmatrix![2.0],
        };
        assert_eq!(reduced_jacobian(&blocks).unwrap(), a);
        let blocks = Blocks {
            a: DMatrix::zeros(2, 2),
            b: DMatrix::identity(2, 2),
            c: DMatrix::identity(2, 2),
            d: -DMatrix::<f64>::identity(2, 2),
        };
        assert_eq!(reduced_jacobian(&blocks).unwrap(), DMatrix::identity(2, 2));
        let singular = Blocks { d: dmatrix![1.0, 1.0; 1.0, 1.0], ..blocks };
        assert!(matches!(reduced_jacobian(&singular), Err(Error::SingularAlgebraic { .. })));
    }

    #[test]
    fn structural_swing_row() {
        let m = default_model();
        let j = m.jacobian_physical(m.base_point()).unwrap();
        assert_eq!(j[(0, 0)], 0.0);
        assert_eq!(j[(0, 1)], 1.0);
    }

    #[test]
    fn equilibrium_is_a_fixed_point() {
        let m = default_model();
        let (f, g) = m.residuals(m.base_point()).unwrap();
        assert!(f.iter().chain(&g).all(|r| r.abs() <= 1e-10));
        assert!(m.base_point()[1].abs() <= 1e-10);
        let again = m.solve_equilibrium(m.base_point()).unwrap();
        assert!(again.iterations <= 1);
    }

    #[test]
    fn damping_term_isolated() {
        let p = TwoBusParams::default();
        let m = default_model();
        let mut x = m.base_point().to_vec();
        x[1] = 0.1;
        let (f, _) = m.residuals(&x).unwrap();
        assert!((f[1] + p.d_damp * 0.1 / p.m_inertia).abs() < 1e-9);
        assert_eq!(f[0], 0.1);
    }

    #[test]
    fn infeasible_mechanical_power() {
        let p = TwoBusParams { p_m: 50.0, ..TwoBusParams::default() };
        assert!(matches!(build_two_bus(p), Err(Error::NoConvergence { .. })));
    }

    #[test]
    fn algebraic_solve_from_equilibrium() {
        let m = default_model();
        let bp = m.base_point();
        let sol = m.solve_algebraic(&bp[..2], &bp[2..]).unwrap();
        assert!(sol.iterations <= 1);
        let sol = m.solve_algebraic(&[bp[0] + 0.05, 0.0], &bp[2..]).unwrap();
        let (_, g) = m.residuals(&[bp[0] + 0.05, 0.0, sol.point[0], sol.point[1]]).unwrap();
        assert!(g.iter().all(|r| r.abs() <= 1e-10));
    }

    #[test]
    fn jacobian_only_models_reject_residual_ops() {
        let m = default_model();
        let bare = AffineJacobianModel::new(
            2,
            2,
            m.names().to_vec(),
            None,
            m.base_point().to_vec(),
            m.lift().to_vec(),
            m.j0().clone(),
            m.terms().to_vec(),
            None,
        )
        .unwrap();
        assert!(matches!(bare.residuals(bare.base_point()), Err(Error::Unsupported(_))));
        assert!(matches!(
            bare.solve_equilibrium(bare.base_point()),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn constructor_validation() {
        let m = default_model();
        let mut dup = m.lift().to_vec();
        dup[1] = dup[0].clone();
        let r = AffineJacobianModel::new(
            2,
            2,
            m.names().to_vec(),
            None,
            m.base_point().to_vec(),
            dup,
            m.j0().clone(),
            m.terms().to_vec(),
            None,
        );
        assert!(r.is_err());
        let mut lift = m.lift().to_vec();
        lift[0] = LiftedCoord::single(Feature::Sin(2));
        let r = AffineJacobianModel::new(
            2,
            2,
            m.names().to_vec(),
            m.units().map(|u| u.to_vec()),
            m.base_point().to_vec(),
            lift,
            m.j0().clone(),
            m.terms().to_vec(),
            None,
        );
        assert!(r.is_err(), "sin of a voltage must be rejected");
    }
}
