use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Closed interval `[lo, hi]` with finite endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Input(format!("interval endpoints must be finite: [{lo}, {hi}]")));
        }
        if lo > hi {
            return Err(Error::Input(format!("interval has lo > hi: [{lo}, {hi}]")));
        }
        Ok(Interval { lo, hi })
    }

    pub fn point(v: f64) -> Self {
        Interval { lo: v, hi: v }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn is_degenerate(&self) -> bool {
        self.lo == self.hi
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn mul(&self, other: &Interval) -> Interval {
        let products = [
            self.lo * other.lo,
            self.lo * other.hi,
            self.hi * other.lo,
            self.hi * other.hi,
        ];
        Interval {
            lo: products.iter().copied().fold(f64::INFINITY, f64::min),
            hi: products.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }

    /// Image of `sin` over the interval.
    pub fn sin(&self) -> Interval {
        self.trig(f64::sin, FRAC_PI_2, -FRAC_PI_2)
    }

    /// Image of `cos` over the interval.
    pub fn cos(&self) -> Interval {
        self.trig(f64::cos, 0.0, PI)
    }

    // Endpoint images plus the extrema of every monotone piece the interval
    // crosses; endpoint values are widened by one ulp to absorb libm rounding.
    // A point maps to the point value so zero-width boxes match point checks.
    fn trig(&self, f: fn(f64) -> f64, argmax: f64, argmin: f64) -> Interval {
        if self.width() >= TAU {
            return Interval { lo: -1.0, hi: 1.0 };
        }
        if self.is_degenerate() {
            return Interval::point(f(self.lo));
        }
        let a = f(self.lo);
        let b = f(self.hi);
        let mut lo = next_down(a.min(b));
        let mut hi = next_up(a.max(b));
        if self.hits(argmax) {
            hi = 1.0;
        }
        if self.hits(argmin) {
            lo = -1.0;
        }
        Interval { lo: lo.max(-1.0), hi: hi.min(1.0) }
    }

    fn hits(&self, phase: f64) -> bool {
        let k = ((self.lo - phase) / TAU).ceil();
        phase + k * TAU <= self.hi
    }
}

fn next_up(v: f64) -> f64 {
    if v.is_nan() || v == f64::INFINITY {
        return v;
    }
    if v == 0.0 {
        return f64::from_bits(1);
    }
    let bits = v.to_bits();
    f64::from_bits(if v > 0.0 { bits + 1 } else { bits - 1 })
}

fn next_down(v: f64) -> f64 {
    -next_up(-v)
}

/// Box on physical variables. Variables without an entry are pinned to a
/// reference point supplied when the box is used.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BoxSpec {
    pub boxes: BTreeMap<usize, Interval>,
}

impl BoxSpec {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, var: usize, interval: Interval) -> Self {
        self.boxes.insert(var, interval);
        self
    }

    /// Full list of per-variable intervals, pinning unlisted ones to `reference`.
    pub fn resolve(&self, reference: &[f64]) -> Result<Vec<Interval>> {
        if let Some(&idx) = self.boxes.keys().find(|&&k| k >= reference.len()) {
            return Err(Error::Input(format!(
                "box variable {idx} out of range (dimension {})",
                reference.len()
            )));
        }
        Ok(reference
            .iter()
            .enumerate()
            .map(|(i, &v)| self.boxes.get(&i).copied().unwrap_or(Interval::point(v)))
            .collect())
    }

    /// Centered box `center +- half_widths`, skipping zero half widths.
    pub fn around(center: &[f64], half_widths: &[f64]) -> Result<Self> {
        if center.len() != half_widths.len() {
            return Err(Error::Input("center and half widths differ in length".into()));
        }
        let mut spec = BoxSpec::new();
        for (i, (&c, &h)) in center.iter().zip(half_widths).enumerate() {
            if h < 0.0 || !h.is_finite() {
                return Err(Error::Input(format!("half width for variable {i} must be finite and >= 0")));
            }
            spec.boxes.insert(i, Interval::new(c - h, c + h)?);
        }
        Ok(spec)
    }
}
