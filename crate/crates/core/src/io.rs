//! File formats: model, box and certificate JSON plus the CSV tables
//! emitted by sweeps and scans.
//!
//! All floating-point output uses 17 significant digits (`{:.16e}`), which
//! round-trips every `f64` exactly.

use std::collections::BTreeMap;
use std::io;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::certify::{AuxiliaryMatrix, CertMode, Certificate, CertifiedBox};
use crate::error::{Error, Result};
use crate::model::{AffineJacobianModel, BoxSpec, Interval, LiftedCoord, ResidualSpec, TwoBusParams};
use crate::regionscan::{AreaExperiment, CenterOutcome, RegressionFit, ScanGrid};
use crate::spectra::{LocusRow, PencilSpectrum, SensitivityRow};

/// Decimal form of a float with 17 significant digits; `NaN` for non-finite values.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        "NaN".to_string()
    }
}

/// Pretty JSON formatter that prints every float with 17 significant digits.
struct ExactFloats<'a>(PrettyFormatter<'a>);

impl Formatter for ExactFloats<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(format!("{value:.16e}").as_bytes())
    }
    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Serializes to pretty JSON with exact floats and a trailing newline.
/// Non-finite floats become `null`.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser =
        serde_json::Serializer::with_formatter(&mut buf, ExactFloats(PrettyFormatter::with_indent(b"  ")));
    value
        .serialize(&mut ser)
        .map_err(|e| Error::Parse(format!("serialization failed: {e}")))?;
    let mut s = String::from_utf8(buf).expect("JSON output is UTF-8");
    s.push('\n');
    Ok(s)
}

fn parse<'a, T: Deserialize<'a>>(text: &'a str, what: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse(format!("{what}: {e}")))
}

fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn matrix_from_rows(rows: &[Vec<f64>], nrows: usize, ncols: usize, what: &str) -> Result<DMatrix<f64>> {
    if rows.len() != nrows || rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Parse(format!("{what} must be {nrows}x{ncols}")));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TermFile {
    pub coord: usize,
    pub matrix: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub n: usize,
    pub m: usize,
    pub names: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub units: Option<Vec<String>>,
    pub base_point: Vec<f64>,
    pub lift: Vec<LiftedCoord>,
    #[serde(rename = "J0")]
    pub j0: Vec<Vec<f64>>,
    pub terms: Vec<TermFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<TwoBusParams>,
}

impl ModelFile {
    pub fn from_model(model: &AffineJacobianModel) -> Self {
        ModelFile {
            n: model.n(),
            m: model.m(),
            names: model.names().to_vec(),
            units: model.units().map(|u| u.to_vec()),
            base_point: model.base_point().to_vec(),
            lift: model.lift().to_vec(),
            j0: matrix_rows(model.j0()),
            terms: model
                .terms()
                .iter()
                .enumerate()
                .map(|(coord, m)| TermFile { coord, matrix: matrix_rows(m) })
                .collect(),
            params: model.residual_spec().map(|ResidualSpec::TwoBus(p)| *p),
        }
    }

    /// Builds the model. Coordinates without a `terms` entry get a zero matrix.
    pub fn into_model(self) -> Result<AffineJacobianModel> {
        let dim = self.n + self.m;
        let j0 = matrix_from_rows(&self.j0, dim, dim, "J0")?;
        let mut terms = vec![DMatrix::zeros(dim, dim); self.lift.len()];
        let mut seen = vec![false; self.lift.len()];
        for t in &self.terms {
            if t.coord >= self.lift.len() {
                return Err(Error::Parse(format!("terms: coord {} out of range", t.coord)));
            }
            if std::mem::replace(&mut seen[t.coord], true) {
                return Err(Error::Parse(format!("terms: coord {} listed twice", t.coord)));
            }
            terms[t.coord] = matrix_from_rows(&t.matrix, dim, dim, &format!("terms[{}]", t.coord))?;
        }
        if let Some(p) = &self.params {
            p.validate()?;
        }
        AffineJacobianModel::new(
            self.n,
            self.m,
            self.names,
            self.units,
            self.base_point,
            self.lift,
            j0,
            terms,
            self.params.map(ResidualSpec::TwoBus),
        )
    }
}

pub fn model_to_json(model: &AffineJacobianModel) -> Result<String> {
    to_json_string(&ModelFile::from_model(model))
}

pub fn model_from_json(text: &str) -> Result<AffineJacobianModel> {
    parse::<ModelFile>(text, "model file")?.into_model()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct BoxFile {
    boxes: BTreeMap<String, [f64; 2]>,
}

fn box_map(spec: &BoxSpec) -> BTreeMap<String, [f64; 2]> {
    spec.boxes.iter().map(|(k, v)| (k.to_string(), [v.lo, v.hi])).collect()
}

pub fn box_to_json(spec: &BoxSpec) -> Result<String> {
    to_json_string(&BoxFile { boxes: box_map(spec) })
}

pub fn box_from_json(text: &str) -> Result<BoxSpec> {
    let file: BoxFile = parse(text, "box file")?;
    let mut spec = BoxSpec::new();
    for (k, [lo, hi]) in file.boxes {
        let idx: usize = k
            .parse()
            .map_err(|_| Error::Parse(format!("box file: key {k:?} is not a variable index")))?;
        spec.boxes.insert(idx, Interval::new(lo, hi)?);
    }
    Ok(spec)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertificateFile {
    #[serde(rename = "P")]
    pub p: Vec<Vec<f64>>,
    #[serde(rename = "R")]
    pub r: Vec<Vec<f64>>,
    #[serde(rename = "Q")]
    pub q: Vec<Vec<f64>>,
    pub zeta: Option<f64>,
    pub certified: bool,
    pub mode: String,
    pub point: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zeta_star: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, rename = "box", skip_serializing_if = "Option::is_none")]
    pub box_: Option<BTreeMap<String, [f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lifted_box: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vertex_count: Option<usize>,
    /// Set for box certificates: physical boxes are enclosed by a lifted box,
    /// so certification may be conservative.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conservative: Option<bool>,
}

fn mode_name(mode: CertMode) -> &'static str {
    match mode {
        CertMode::AtPoint => "at_point",
        CertMode::FixedZ => "fixed_z",
    }
}

fn aux_rows(aux: Option<&AuxiliaryMatrix>) -> (Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<Vec<f64>>) {
    match aux {
        Some(a) => (matrix_rows(&a.p), matrix_rows(&a.r), matrix_rows(&a.q)),
        None => (vec![], vec![], vec![]),
    }
}

pub fn certificate_to_json(cert: &Certificate) -> Result<String> {
    let (p, r, q) = aux_rows(cert.aux.as_ref());
    to_json_string(&CertificateFile {
        p,
        r,
        q,
        zeta: cert.zeta,
        certified: cert.is_certified(),
        mode: mode_name(cert.mode).into(),
        point: cert.point.clone(),
        reason: cert.reason.clone(),
        zeta_star: None,
        alpha: None,
        box_: None,
        lifted_box: None,
        vertex_count: None,
        conservative: None,
    })
}

/// Box certificate; `point` holds the lifted box center.
pub fn certified_box_to_json(b: &CertifiedBox) -> Result<String> {
    let (p, r, q) = aux_rows(Some(&b.aux));
    to_json_string(&CertificateFile {
        p,
        r,
        q,
        zeta: Some(b.zeta_star),
        certified: b.is_certified(),
        mode: mode_name(CertMode::FixedZ).into(),
        point: b.lifted.iter().map(Interval::mid).collect(),
        reason: None,
        zeta_star: Some(b.zeta_star),
        alpha: b.alpha,
        box_: Some(box_map(&b.physical)),
        lifted_box: Some(b.lifted.iter().map(|i| [i.lo, i.hi]).collect()),
        vertex_count: Some(b.vertex_count),
        conservative: Some(true),
    })
}

/// Reads `Z` from a certificate file (point or box).
pub fn aux_from_json(text: &str) -> Result<AuxiliaryMatrix> {
    let file: CertificateFile = parse(text, "certificate file")?;
    let n = file.p.len();
    let m = file.q.len();
    if n == 0 {
        return Err(Error::Parse("certificate file has no P matrix".into()));
    }
    AuxiliaryMatrix::new(
        matrix_from_rows(&file.p, n, n, "P")?,
        if m == 0 { DMatrix::zeros(0, n) } else { matrix_from_rows(&file.r, m, n, "R")? },
        matrix_from_rows(&file.q, m, m, "Q")?,
    )
}

/// Box carried by a box certificate file.
pub fn box_from_certificate_json(text: &str) -> Result<BoxSpec> {
    let file: CertificateFile = parse(text, "certificate file")?;
    let boxes = file
        .box_
        .ok_or_else(|| Error::Parse("certificate file has no box".into()))?;
    box_from_json(&serde_json::json!({ "boxes": boxes }).to_string())
}

pub fn eigs_csv(spec: &PencilSpectrum) -> String {
    let mut s = String::from("re,im,infinite_count\n");
    for l in &spec.finite {
        s.push_str(&format!("{},{},{}\n", fmt_f64(l.re), fmt_f64(l.im), spec.infinite_count));
    }
    s
}

pub fn rootlocus_csv(rows: &[LocusRow], n: usize) -> String {
    let mut s = String::from("var");
    for i in 1..=n {
        s.push_str(&format!(",re_{i},im_{i}"));
    }
    s.push_str(",critical_index,crossing_flag,feasible\n");
    for row in rows {
        s.push_str(&fmt_f64(row.value));
        match &row.eigenvalues {
            Some(ev) => {
                for l in ev {
                    s.push_str(&format!(",{},{}", fmt_f64(l.re), fmt_f64(l.im)));
                }
            }
            None => {
                for _ in 0..n {
                    s.push_str(",NaN,NaN");
                }
            }
        }
        s.push_str(&format!(
            ",{},{},{}\n",
            row.critical_index.map_or(0, |i| i + 1),
            row.crossing as u8,
            row.feasible() as u8
        ));
    }
    s
}

/// Long-format sensitivity table; the chain-rule column is labelled `d/d<var>`.
pub fn sensitivity_csv(rows: &[SensitivityRow], model: &AffineJacobianModel, var: usize, coords: &[usize]) -> String {
    let mut s = String::from("var,coord_name,re_dlambda,im_dlambda\n");
    let var_label = format!("d/d{}", model.names()[var]);
    for row in rows {
        let v = fmt_f64(row.value);
        if row.by_var.is_none() {
            for &k in coords {
                s.push_str(&format!("{v},{},NaN,NaN\n", model.coord_name(k)));
            }
            s.push_str(&format!("{v},{var_label},NaN,NaN\n"));
            continue;
        }
        for (k, d) in &row.by_coord {
            s.push_str(&format!("{v},{},{},{}\n", model.coord_name(*k), fmt_f64(d.re), fmt_f64(d.im)));
        }
        let d = row.by_var.expect("checked above");
        s.push_str(&format!("{v},{var_label},{},{}\n", fmt_f64(d.re), fmt_f64(d.im)));
    }
    s
}

pub fn scan_csv(grid: &ScanGrid, model: &AffineJacobianModel) -> String {
    let names = model.names();
    let moved: Vec<usize> = [grid.axis1.var, grid.axis2.var]
        .iter()
        .flat_map(|v| match *v {
            crate::regionscan::AxisVar::Physical(i) => vec![i],
            crate::regionscan::AxisVar::Magnitude { x, y } => vec![x, y],
        })
        .collect();
    let pinned: Vec<String> = (0..names.len())
        .map(|i| {
            if moved.contains(&i) {
                format!("{}=scanned@{}", names[i], fmt_f64(grid.pinned[i]))
            } else {
                format!("{}={}", names[i], fmt_f64(grid.pinned[i]))
            }
        })
        .collect();
    let mut s = format!("# pinned: {}\n", pinned.join(" "));
    s.push_str(&format!(
        "{},{}",
        grid.axis1.var.label(names),
        grid.axis2.var.label(names)
    ));
    for m in &grid.modes {
        s.push_str(&format!(",class_{m}"));
    }
    s.push('\n');
    for cell in &grid.cells {
        s.push_str(&format!("{},{}", fmt_f64(cell.a1), fmt_f64(cell.a2)));
        for c in &cell.classes {
            s.push(',');
            s.push_str(c.label());
        }
        s.push('\n');
    }
    s
}

pub fn area_csv(exp: &AreaExperiment) -> String {
    let mut s = String::from("center_id,sigma_critical,ratio_exact,ratio_bmi\n");
    for (id, c) in exp.centers.iter().enumerate() {
        match c {
            CenterOutcome::Done { exact, bmi, .. } => s.push_str(&format!(
                "{id},{},{},{}\n",
                fmt_f64(exact.sigma_critical.unwrap_or(f64::NAN)),
                fmt_f64(exact.ratio),
                fmt_f64(bmi.ratio)
            )),
            CenterOutcome::Skipped { .. } => s.push_str(&format!("{id},NaN,NaN,NaN\n")),
        }
    }
    s
}

#[derive(Serialize)]
struct FitEntry {
    degenerate: bool,
    #[serde(flatten)]
    fit: Option<RegressionFit>,
}

pub fn fit_json(exp: &AreaExperiment) -> Result<String> {
    let entry = |f: Option<RegressionFit>| FitEntry { degenerate: f.is_none(), fit: f };
    let mut map = BTreeMap::new();
    map.insert("exact", entry(exp.fit_exact));
    map.insert("bmi_fixed_z", entry(exp.fit_bmi));
    to_json_string(&map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_two_bus, TwoBusParams};

    #[test]
    fn floats_use_17_digits() {
        let s = to_json_string(&vec![0.1_f64, -2.5]).unwrap();
        assert!(s.contains("1.0000000000000001e-1"));
        assert!(s.contains("-2.5000000000000000e0"));
        let back: Vec<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, vec![0.1, -2.5]);
    }

    #[test]
    fn model_round_trip() {
        let model = build_two_bus(TwoBusParams::default()).unwrap();
        let text = model_to_json(&model).unwrap();
        let back = model_from_json(&text).unwrap();
        assert_eq!(back, model);
        assert_eq!(model_to_json(&back).unwrap(), text);
    }

    #[test]
    fn malformed_model_reports_position() {
        let err = model_from_json("{\"n\": 2,\n \"m\": }").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 2"), "{msg}");
        let err = model_from_json("{\"n\": 2}").unwrap_err();
        assert!(err.to_string().contains("missing field"));
    }

    #[test]
    fn box_file_round_trip() {
        let spec = BoxSpec::new()
            .with(0, Interval::new(0.1, 0.2).unwrap())
            .with(3, Interval::new(-1.0 / 3.0, 0.0).unwrap());
        let text = box_to_json(&spec).unwrap();
        assert_eq!(box_from_json(&text).unwrap(), spec);
        assert!(box_from_json("{\"boxes\":{\"x\":[0,1]}}").is_err());
        assert!(box_from_json("{\"boxes\":{\"0\":[1,0]}}").is_err());
    }
}
