//! Classical machine behind a transient reactance at bus 2, tied to an
//! infinite bus (`V1 = 1 /_ 0`) through a line, with a constant-power load
//! at bus 2.
//!
//! Physical variables are `(delta, omega | vx, vy)`: rotor angle in rad,
//! speed deviation in pu, and the rectangular bus-2 voltage in pu. With
//! `s = sin(delta)`, `c = cos(delta)`, `a = c*vx + s*vy`, `d = s*vx - c*vy`
//! the generator electrical power is `Pe = g E^2 - g E a - b E d` where
//! `g + jb = 1 / (j x_dp)`, and the Jacobian is affine in the lifted
//! coordinates `(s, c, vx, vy, s*vx, s*vy, c*vx, c*vy)`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DELTA: usize = 0;
pub const OMEGA: usize = 1;
pub const VX: usize = 2;
pub const VY: usize = 3;

// Lifted coordinate slots.
const S: usize = 0;
const C: usize = 1;
const LVX: usize = 2;
const LVY: usize = 3;
const SVX: usize = 4;
const SVY: usize = 5;
const CVX: usize = 6;
const CVY: usize = 7;

pub const LIFT_COUNT: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TwoBusParams {
    /// Internal EMF magnitude (pu).
    pub e_emf: f64,
    /// Generator transient reactance (pu).
    pub x_dp: f64,
    pub r_line: f64,
    pub x_line: f64,
    pub p_load: f64,
    pub q_load: f64,
    /// Mechanical power (pu).
    pub p_m: f64,
    /// `2H / omega_s`.
    pub m_inertia: f64,
    pub d_damp: f64,
}

impl Default for TwoBusParams {
    fn default() -> Self {
        TwoBusParams {
            e_emf: 1.05,
            x_dp: 0.2,
            r_line: 0.01,
            x_line: 0.1,
            p_load: 0.5,
            q_load: 0.2,
            p_m: 0.6,
            m_inertia: 0.0265,
            // Light damping leaves an oscillatory pair at the base point.
            d_damp: 0.163,
        }
    }
}

impl TwoBusParams {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.e_emf,
            self.x_dp,
            self.r_line,
            self.x_line,
            self.p_load,
            self.q_load,
            self.p_m,
            self.m_inertia,
            self.d_damp,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("two-bus parameters must be finite".into()));
        }
        if self.m_inertia <= 0.0 || self.d_damp <= 0.0 || self.x_dp <= 0.0 {
            return Err(Error::Input(
                "two-bus parameters need m_inertia > 0, d_damp > 0, x_dp > 0".into(),
            ));
        }
        if self.r_line == 0.0 && self.x_line == 0.0 {
            return Err(Error::Input("line impedance must be non-zero".into()));
        }
        Ok(())
    }

    fn gen_admittance(&self) -> Complex64 {
        Complex64::new(0.0, self.x_dp).inv()
    }

    fn line_admittance(&self) -> Complex64 {
        Complex64::new(self.r_line, self.x_line).inv()
    }

    /// `(f, g)` at a physical point `(delta, omega, vx, vy)`.
    pub fn residuals(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let (delta, omega, vx, vy) = (x[DELTA], x[OMEGA], x[VX], x[VY]);
        let Complex64 { re: g, im: b } = self.gen_admittance();
        let Complex64 { re: gl, im: bl } = self.line_admittance();
        let e = self.e_emf;
        let (s, c) = delta.sin_cos();
        let a = c * vx + s * vy;
        let d = s * vx - c * vy;
        let v2 = vx * vx + vy * vy;

        let pe = g * e * e - g * e * a - b * e * d;
        let f = vec![omega, (self.p_m - self.d_damp * omega - pe) / self.m_inertia];

        // S_gen = conj(y) (E a - |V|^2 - j E d), S_line = conj(y_l) (vx - |V|^2 + j vy)
        let (xg, yg) = (e * a - v2, -e * d);
        let (xl, yl) = (vx - v2, vy);
        let p_bal = g * xg + b * yg + gl * xl + bl * yl - self.p_load;
        let q_bal = g * yg - b * xg + gl * yl - bl * xl - self.q_load;
        (f, vec![p_bal, q_bal])
    }

    /// `J0` and the coefficient matrices `J_k`, one per lifted coordinate,
    /// of the residual Jacobian `J(z) = J0 + sum_k z_k J_k`.
    pub fn affine_terms(&self) -> (DMatrix<f64>, Vec<DMatrix<f64>>) {
        let Complex64 { re: g, im: b } = self.gen_admittance();
        let Complex64 { re: gl, im: bl } = self.line_admittance();
        let e = self.e_emf;
        let m = self.m_inertia;
        let (ge, be) = (g * e, b * e);

        let mut j0 = DMatrix::<f64>::zeros(4, 4);
        j0[(0, OMEGA)] = 1.0;
        j0[(1, OMEGA)] = -self.d_damp / m;
        j0[(2, VX)] = gl;
        j0[(2, VY)] = bl;
        j0[(3, VX)] = -bl;
        j0[(3, VY)] = gl;

        let mut terms = vec![DMatrix::<f64>::zeros(4, 4); LIFT_COUNT];
        let mut set = |k: usize, row: usize, col: usize, v: f64| terms[k][(row, col)] = v;

        // swing row: -(dPe/dx) / M
        set(SVX, 1, DELTA, -ge / m);
        set(CVY, 1, DELTA, ge / m);
        set(CVX, 1, DELTA, be / m);
        set(SVY, 1, DELTA, be / m);
        set(S, 1, VX, be / m);
        set(C, 1, VX, ge / m);
        set(S, 1, VY, ge / m);
        set(C, 1, VY, -be / m);

        // active power balance
        set(SVX, 2, DELTA, -ge);
        set(CVY, 2, DELTA, ge);
        set(CVX, 2, DELTA, -be);
        set(SVY, 2, DELTA, -be);
        set(C, 2, VX, ge);
        set(S, 2, VX, -be);
        set(LVX, 2, VX, -2.0 * (g + gl));
        set(S, 2, VY, ge);
        set(C, 2, VY, be);
        set(LVY, 2, VY, -2.0 * (g + gl));

        // reactive power balance
        set(CVX, 3, DELTA, -ge);
        set(SVY, 3, DELTA, -ge);
        set(SVX, 3, DELTA, be);
        set(CVY, 3, DELTA, -be);
        set(S, 3, VX, -ge);
        set(C, 3, VX, -be);
        set(LVX, 3, VX, 2.0 * (b + bl));
        set(C, 3, VY, ge);
        set(S, 3, VY, -be);
        set(LVY, 3, VY, 2.0 * (b + bl));

        (j0, terms)
    }
}
