use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use serde_json::json;

use mudae::certify::{
    certify_box, certify_point, construct_z_star, grow_box, scaled_box, AuxiliaryMatrix,
};
use mudae::io;
use mudae::model::{build_two_bus, AffineJacobianModel, BoxSpec, TwoBusParams};
use mudae::regionscan::{
    area_vs_sigma_experiment, centers_by_sigma, scan_grid, AxisVar, CenterOutcome, Classification, ScanAxis,
    ScanMode,
};
use mudae::spectra::{pencil_finite_spectrum, root_locus_sweep, sensitivity_sweep};

use crate::config::{Config, Run};
use crate::{CertifyCommand, Cli, Command, Status, SweepArgs};

const DEFAULT_OUT: &str = "mudae-out";
const DEFAULT_SWEEP_SPAN: f64 = 2.5;
const DEFAULT_SWEEP_STEPS: usize = 200;
const DEFAULT_GROW_TOL: f64 = 1e-3;
const DEFAULT_SAMPLES: u64 = 100_000;
const DEFAULT_SEED: u64 = 7;
const DEFAULT_HALF_WIDTH: f64 = 0.05;
const DEFAULT_SIGMA_TARGETS: [f64; 6] = [-3.0, -2.5, -2.0, -1.5, -1.0, -0.5];
const CENTER_RESOLUTION: usize = 400;

fn section(cmd: &Command) -> &'static str {
    match cmd {
        Command::Model { .. } => "model",
        Command::Equilibrium { .. } => "equilibrium",
        Command::Eigs { .. } => "eigs",
        Command::Rootlocus(_) => "rootlocus",
        Command::Sensitivity { .. } => "sensitivity",
        Command::Certify { what } => match what {
            CertifyCommand::Point { .. } => "certify_point",
            CertifyCommand::Box { .. } => "certify_box",
            CertifyCommand::Grow { .. } => "certify_grow",
        },
        Command::Scan { .. } => "scan",
        Command::Area { .. } => "area",
    }
}

pub fn run(cli: Cli) -> Result<Status> {
    let (config, config_text) = match &cli.global.config {
        Some(p) => {
            let (c, t) = Config::load(p)?;
            (c, Some(t))
        }
        None => (Config::default(), None),
    };
    let name = section(&cli.command);
    let mut probe = Run::new(config, name, PathBuf::new());
    let out: PathBuf = probe.val("out", cli.global.out.clone(), PathBuf::from(DEFAULT_OUT))?;
    let mut run = Run::new(std::mem::take(&mut probe.config), name, out.clone());
    run.record("out", &out)?;
    if let Some(text) = &config_text {
        run.hash_input("config", text.as_bytes());
    }
    configure_threads(&mut run, cli.global.threads)?;
    let model = load_model(&mut run, &cli)?;

    let status = match cli.command {
        Command::Model { export } => cmd_model(&mut run, &model, export)?,
        Command::Equilibrium { guess } => cmd_equilibrium(&mut run, &model, guess)?,
        Command::Eigs { at, guess } => cmd_eigs(&mut run, &model, at, guess)?,
        Command::Rootlocus(sweep) => cmd_rootlocus(&mut run, &model, sweep)?,
        Command::Sensitivity { sweep, eig, coords } => cmd_sensitivity(&mut run, &model, sweep, eig, coords)?,
        Command::Certify { what } => match what {
            CertifyCommand::Point { at, z_file } => cmd_certify_point(&mut run, &model, at, z_file)?,
            CertifyCommand::Box { box_file, z_file } => cmd_certify_box(&mut run, &model, box_file, z_file)?,
            CertifyCommand::Grow { at, weights, tol, z_file } => {
                cmd_certify_grow(&mut run, &model, at, weights, tol, z_file)?
            }
        },
        Command::Scan { grid, modes, at, z_file } => cmd_scan(&mut run, &model, grid, modes, at, z_file)?,
        Command::Area { samples, seed, centers_file, half_widths, sigma_targets, var, to } => {
            cmd_area(&mut run, &model, samples, seed, centers_file, half_widths, sigma_targets, var, to)?
        }
    };
    run.finish(name)?;
    Ok(status)
}

// flag > MUDAE_THREADS > config > rayon default. Not recorded in the manifest.
fn configure_threads(run: &mut Run, flag: Option<usize>) -> Result<()> {
    let env = match std::env::var("MUDAE_THREADS") {
        Ok(v) if !v.trim().is_empty() => {
            Some(v.trim().parse::<usize>().map_err(|_| anyhow!("MUDAE_THREADS must be a positive integer, got {v:?}"))?)
        }
        _ => None,
    };
    let from_config = match run.config.lookup(run.section, "threads") {
        Some(v) => Some(v.clone().try_into::<usize>().map_err(|e| anyhow!("config key `threads`: {e}"))?),
        None => None,
    };
    let threads = flag.or(env).or(from_config);
    if threads == Some(0) {
        bail!("--threads must be at least 1");
    }
    #[cfg(feature = "parallel")]
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| anyhow!("configuring worker pool: {e}"))?;
    }
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
    Ok(())
}

fn load_model(run: &mut Run, cli: &Cli) -> Result<AffineJacobianModel> {
    if let Some(path) = run.opt::<PathBuf>("file", cli.global.file.clone())? {
        let text = run.read_input("model", &path)?;
        return mudae::io::model_from_json(&text).with_context(|| format!("model file {}", path.display()));
    }
    let builtin = run.val("builtin", cli.global.builtin.clone(), "twobus".to_string())?;
    if builtin != "twobus" {
        bail!("unknown builtin model {builtin:?} (available: twobus)");
    }
    let params: TwoBusParams = match run.config.table("twobus") {
        Some(t) => toml::Value::Table(t.clone())
            .try_into()
            .map_err(|e| anyhow!("config table [twobus]: {e}"))?,
        None => TwoBusParams::default(),
    };
    run.record("twobus", params)?;
    let model = build_two_bus(params).context("building the two-bus model")?;
    run.hash_input("model", io::model_to_json(&model)?.as_bytes());
    Ok(model)
}

fn check_len(what: &str, v: &[f64], len: usize) -> Result<()> {
    if v.len() != len {
        bail!("{what} needs {len} comma-separated values, got {}", v.len());
    }
    Ok(())
}

fn point_or_base(run: &mut Run, key: &str, flag: Option<Vec<f64>>, model: &AffineJacobianModel) -> Result<Vec<f64>> {
    let p = run.val(key, flag, model.base_point().to_vec())?;
    check_len(&format!("--{key}"), &p, model.dim())?;
    Ok(p)
}

fn var_index(model: &AffineJacobianModel, name: &str) -> Result<usize> {
    model
        .var_index(name)
        .ok_or_else(|| anyhow!("unknown variable {name:?} (model variables: {})", model.names().join(", ")))
}

fn load_aux(run: &mut Run, z_file: Option<PathBuf>) -> Result<Option<AuxiliaryMatrix>> {
    match run.opt("z-file", z_file)? {
        Some(path) => {
            let text = run.read_input("z", &path)?;
            Ok(Some(io::aux_from_json(&text).with_context(|| format!("Z file {}", path.display()))?))
        }
        None => Ok(None),
    }
}

fn base_aux(model: &AffineJacobianModel) -> Result<AuxiliaryMatrix> {
    let cert = construct_z_star(model, &model.evaluate_lift(model.base_point()))
        .context("constructing Z* at the base point (pass --z-file to supply one)")?;
    Ok(cert.aux.expect("successful construction carries Z"))
}

fn fmt_complex(l: &mudae::Complex64) -> String {
    format!("{:.6} {} {:.6}i", l.re, if l.im < 0.0 { '-' } else { '+' }, l.im.abs())
}

fn cmd_model(run: &mut Run, model: &AffineJacobianModel, export: Option<PathBuf>) -> Result<Status> {
    let z = model.evaluate_lift(model.base_point());
    let summary = json!({
        "n": model.n(),
        "m": model.m(),
        "names": model.names(),
        "units": model.units(),
        "lifted_coords": (0..model.lift().len()).map(|k| model.coord_name(k)).collect::<Vec<_>>(),
        "base_point": model.base_point(),
        "d_condition": model.d_condition(&z),
        "has_residuals": model.residual_spec().is_some(),
    });
    let text = io::to_json_string(&summary)?;
    print!("{text}");
    run.write_output("model_summary.json", &text)?;
    if let Some(path) = export {
        let json = io::model_to_json(model)?;
        std::fs::write(&path, &json).with_context(|| format!("writing {}", path.display()))?;
        run.record("export", &path)?;
        eprintln!("exported model to {}", path.display());
    }
    Ok(Status::Done)
}

fn solve_equilibrium(run: &mut Run, model: &AffineJacobianModel, guess: Option<Vec<f64>>) -> Result<mudae::model::NewtonSolution> {
    let guess = point_or_base(run, "guess", guess, model)?;
    model
        .solve_equilibrium(&guess)
        .with_context(|| "equilibrium solve failed".to_string())
}

fn cmd_equilibrium(run: &mut Run, model: &AffineJacobianModel, guess: Option<Vec<f64>>) -> Result<Status> {
    let sol = solve_equilibrium(run, model, guess)?;
    let text = io::to_json_string(&json!({
        "names": model.names(),
        "point": sol.point,
        "iterations": sol.iterations,
        "residual": sol.residual,
    }))?;
    run.write_output("equilibrium.json", &text)?;
    for (name, v) in model.names().iter().zip(&sol.point) {
        println!("{name} = {v:.12}");
    }
    println!("converged in {} iterations, residual {:.3e}", sol.iterations, sol.residual);
    Ok(Status::Done)
}

fn cmd_eigs(run: &mut Run, model: &AffineJacobianModel, at: Option<Vec<f64>>, guess: Option<Vec<f64>>) -> Result<Status> {
    let point = match run.opt("at", at)? {
        Some(p) => {
            check_len("--at", &p, model.dim())?;
            p
        }
        None if model.residual_spec().is_some() => solve_equilibrium(run, model, guess)?.point,
        None => model.base_point().to_vec(),
    };
    let spec = pencil_finite_spectrum(model, &model.evaluate_lift(&point))?;
    run.write_output("eigs.csv", &io::eigs_csv(&spec))?;
    for l in &spec.finite {
        println!("{}", fmt_complex(l));
    }
    let top = spec.finite.iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max);
    println!(
        "infinite eigenvalues: {}; spectral abscissa {top:.6}; {}",
        spec.infinite_count,
        if top < 0.0 { "Hurwitz" } else { "not Hurwitz" }
    );
    Ok(Status::Done)
}

struct Sweep {
    var: usize,
    from: f64,
    to: f64,
    steps: usize,
}

fn resolve_sweep(run: &mut Run, model: &AffineJacobianModel, args: SweepArgs) -> Result<Sweep> {
    let name = run.val("var", args.var, model.names()[0].clone())?;
    let var = var_index(model, &name)?;
    let from = run.val("from", args.from, model.base_point()[var])?;
    let to = run.val("to", args.to, from + DEFAULT_SWEEP_SPAN)?;
    let steps = run.val("steps", args.steps, DEFAULT_SWEEP_STEPS)?;
    Ok(Sweep { var, from, to, steps })
}

fn cmd_rootlocus(run: &mut Run, model: &AffineJacobianModel, args: SweepArgs) -> Result<Status> {
    let s = resolve_sweep(run, model, args)?;
    let rows = root_locus_sweep(model, s.var, s.from, s.to, s.steps)?;
    run.write_output("rootlocus.csv", &io::rootlocus_csv(&rows, model.n()))?;
    let feasible = rows.iter().filter(|r| r.feasible()).count();
    println!("{} steps, {feasible} feasible", rows.len());
    for r in rows.iter().filter(|r| r.crossing) {
        println!("critical eigenvalue changes at {} = {:.6}", model.names()[s.var], r.value);
    }
    if rows.iter().any(|r| r.pairing_anomaly) {
        println!("warning: eigenvalue pairing was ambiguous at some steps");
    }
    Ok(Status::Done)
}

fn cmd_sensitivity(
    run: &mut Run,
    model: &AffineJacobianModel,
    args: SweepArgs,
    eig: Option<usize>,
    coords: Option<Vec<usize>>,
) -> Result<Status> {
    let s = resolve_sweep(run, model, args)?;
    let eig = run.val("eig", eig, 0)?;
    let coords = run.val("coords", coords, (0..model.lift().len()).collect())?;
    if let Some(&k) = coords.iter().find(|&&k| k >= model.lift().len()) {
        bail!("lifted coordinate {k} out of range (model has {})", model.lift().len());
    }
    let rows = sensitivity_sweep(model, s.var, s.from, s.to, s.steps, eig, &coords)?;
    run.write_output("sensitivity.csv", &io::sensitivity_csv(&rows, model, s.var, &coords))?;
    let mags: Vec<f64> = rows.iter().filter_map(|r| r.by_var.map(|v| v.norm())).collect();
    let (lo, hi) = mags.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
    println!(
        "{} steps, {} feasible; |d lambda/d {}| ranges over [{lo:.6}, {hi:.6}]",
        rows.len(),
        mags.len(),
        model.names()[s.var]
    );
    Ok(Status::Done)
}

fn cmd_certify_point(run: &mut Run, model: &AffineJacobianModel, at: Option<Vec<f64>>, z_file: Option<PathBuf>) -> Result<Status> {
    let point = point_or_base(run, "at", at, model)?;
    let aux = load_aux(run, z_file)?;
    let cert = certify_point(model, &model.evaluate_lift(&point), aux.as_ref())?;
    run.write_output("certificate.json", &io::certificate_to_json(&cert)?)?;
    match (cert.is_certified(), cert.zeta) {
        (true, Some(z)) => {
            println!("certified: zeta = {z:.6e}");
            Ok(Status::Done)
        }
        (_, zeta) => {
            println!(
                "not certified: {}",
                cert.reason.clone().unwrap_or_else(|| format!("zeta = {:.6e}", zeta.unwrap_or(f64::NAN)))
            );
            Ok(Status::NotCertified)
        }
    }
}

fn cmd_certify_box(run: &mut Run, model: &AffineJacobianModel, box_file: Option<PathBuf>, z_file: Option<PathBuf>) -> Result<Status> {
    let path: PathBuf = run
        .opt("box-file", box_file)?
        .ok_or_else(|| anyhow!("certify box needs --box-file"))?;
    let text = run.read_input("box", &path)?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| anyhow!("box file {}: {e}", path.display()))?;
    let (spec, embedded_aux): (BoxSpec, Option<AuxiliaryMatrix>) = if value.get("boxes").is_some() {
        (io::box_from_json(&text)?, None)
    } else if value.get("box").is_some() {
        (io::box_from_certificate_json(&text)?, Some(io::aux_from_json(&text)?))
    } else {
        bail!("box file {} has neither `boxes` nor `box`", path.display());
    };
    let aux = match load_aux(run, z_file)? {
        Some(a) => a,
        None => match embedded_aux {
            Some(a) => a,
            None => base_aux(model)?,
        },
    };
    let b = certify_box(model, &spec, &aux)?;
    run.write_output("box_certificate.json", &io::certified_box_to_json(&b)?)?;
    println!("zeta* = {:.17e} over {} vertices", b.zeta_star, b.vertex_count);
    if b.is_certified() {
        println!("certified (lifted box encloses the physical box; conservative)");
        Ok(Status::Done)
    } else {
        println!("not certified");
        Ok(Status::NotCertified)
    }
}

fn cmd_certify_grow(
    run: &mut Run,
    model: &AffineJacobianModel,
    at: Option<Vec<f64>>,
    weights: Option<Vec<f64>>,
    tol: Option<f64>,
    z_file: Option<PathBuf>,
) -> Result<Status> {
    let center = point_or_base(run, "at", at, model)?;
    let weights = run.val("weights", weights, vec![1.0; model.dim()])?;
    check_len("--weights", &weights, model.dim())?;
    let tol = run.val("tol", tol, DEFAULT_GROW_TOL)?;
    let aux = match load_aux(run, z_file)? {
        Some(a) => a,
        None => base_aux(model)?,
    };
    let at_center = certify_box(model, &scaled_box(&center, &weights, 0.0)?, &aux)?;
    if !at_center.is_certified() {
        run.write_output("grow.json", &io::certified_box_to_json(&at_center)?)?;
        println!("not certified: the center itself fails (zeta = {:.6e})", at_center.zeta_star);
        return Ok(Status::NotCertified);
    }
    let (alpha, b) = grow_box(model, &center, &weights, &aux, tol)?;
    run.write_output("grow.json", &io::certified_box_to_json(&b)?)?;
    println!("alpha_max = {alpha:.17e}; zeta* = {:.6e}", b.zeta_star);
    for (i, iv) in &b.physical.boxes {
        println!("  {} in [{:.12}, {:.12}]", model.names()[*i], iv.lo, iv.hi);
    }
    Ok(Status::Done)
}

fn parse_axis(model: &AffineJacobianModel, spec: &str) -> Result<ScanAxis> {
    let parts: Vec<&str> = spec.rsplitn(4, ':').collect();
    if parts.len() != 4 {
        bail!("axis {spec:?} must look like NAME:LO:HI:STEPS");
    }
    let (steps, hi, lo, name) = (parts[0], parts[1], parts[2], parts[3]);
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| anyhow!("axis {spec:?}: {s:?} is not a number"));
    let var = if let Some(inner) = name.strip_prefix('|').and_then(|s| s.strip_suffix('|')) {
        let (x, y) = inner
            .split_once("+j")
            .ok_or_else(|| anyhow!("magnitude axis {name:?} must look like |X+jY|"))?;
        AxisVar::Magnitude { x: var_index(model, x)?, y: var_index(model, y)? }
    } else {
        AxisVar::Physical(var_index(model, name)?)
    };
    Ok(ScanAxis {
        var,
        lo: num(lo)?,
        hi: num(hi)?,
        steps: steps.trim().parse().map_err(|_| anyhow!("axis {spec:?}: bad step count {steps:?}"))?,
    })
}

fn default_grid(model: &AffineJacobianModel) -> String {
    if model.names() == ["delta", "omega", "vx", "vy"] {
        "delta:-0.5:2.0:101,|vx+jvy|:0.5:1.5:101".into()
    } else {
        let base = model.base_point();
        let names = model.names();
        let j = if model.dim() > 1 { 1 } else { 0 };
        format!(
            "{}:{}:{}:51,{}:{}:{}:51",
            names[0],
            base[0] - 1.0,
            base[0] + 1.0,
            names[j],
            base[j] - 1.0,
            base[j] + 1.0
        )
    }
}

fn cmd_scan(
    run: &mut Run,
    model: &AffineJacobianModel,
    grid: Option<String>,
    modes: Option<String>,
    at: Option<Vec<f64>>,
    z_file: Option<PathBuf>,
) -> Result<Status> {
    let grid = run.val("grid", grid, default_grid(model))?;
    let axes: Vec<&str> = grid.split(',').collect();
    if axes.len() != 2 {
        bail!("--grid needs exactly two comma-separated axes");
    }
    let (a1, a2) = (parse_axis(model, axes[0])?, parse_axis(model, axes[1])?);
    let pinned = point_or_base(run, "at", at, model)?;
    let modes_text = run.val("modes", modes, "exact,bmi".to_string())?;
    let mut fixed_aux = load_aux(run, z_file)?;
    let mut modes = Vec::new();
    for m in modes_text.split(',').map(str::trim) {
        modes.push(match m {
            "exact" => ScanMode::Exact,
            "bmi" | "bmi_fixed_z" => {
                if fixed_aux.is_none() {
                    fixed_aux = Some(base_aux(model)?);
                }
                ScanMode::BmiFixedZ(fixed_aux.clone().expect("set above"))
            }
            "bmi_at_point" => ScanMode::BmiAtPoint,
            other => bail!("unknown scan mode {other:?} (exact, bmi, bmi_at_point)"),
        });
    }
    let result = scan_grid(model, &pinned, a1, a2, &modes)?;
    run.write_output("scan.csv", &io::scan_csv(&result, model))?;
    let all = [
        Classification::ExactStable,
        Classification::BmiCertified,
        Classification::Uncertified,
        Classification::Unstable,
        Classification::AlgebraicSingular,
    ];
    for (i, m) in result.modes.iter().enumerate() {
        let counts: Vec<String> = all
            .iter()
            .filter_map(|c| {
                let n = result.cells.iter().filter(|cell| cell.classes[i] == *c).count();
                (n > 0).then(|| format!("{} {n}", c.label()))
            })
            .collect();
        println!("{m}: {}", counts.join(", "));
    }
    Ok(Status::Done)
}

#[allow(clippy::too_many_arguments)]
fn cmd_area(
    run: &mut Run,
    model: &AffineJacobianModel,
    samples: Option<u64>,
    seed: Option<u64>,
    centers_file: Option<PathBuf>,
    half_widths: Option<Vec<f64>>,
    sigma_targets: Option<Vec<f64>>,
    var: Option<String>,
    to: Option<f64>,
) -> Result<Status> {
    let samples = run.val("samples", samples, DEFAULT_SAMPLES)?;
    let seed = run.val("seed", seed, DEFAULT_SEED)?;
    let half_widths = run.val("half-widths", half_widths, vec![DEFAULT_HALF_WIDTH; model.dim()])?;
    check_len("--half-widths", &half_widths, model.dim())?;
    let centers: Vec<Vec<f64>> = match run.opt::<PathBuf>("centers-file", centers_file)? {
        Some(path) => {
            #[derive(serde::Deserialize)]
            struct CentersFile {
                centers: Vec<Vec<f64>>,
            }
            let text = run.read_input("centers", &path)?;
            let file: CentersFile =
                serde_json::from_str(&text).map_err(|e| anyhow!("centers file {}: {e}", path.display()))?;
            for c in &file.centers {
                check_len("each center", c, model.dim())?;
            }
            file.centers
        }
        None => {
            let targets = run.val("sigma-targets", sigma_targets, DEFAULT_SIGMA_TARGETS.to_vec())?;
            let name = run.val("var", var, model.names()[0].clone())?;
            let v = var_index(model, &name)?;
            let limit = run.val("to", to, model.base_point()[v] + DEFAULT_SWEEP_SPAN)?;
            centers_by_sigma(model, v, limit, CENTER_RESOLUTION, &targets)?
        }
    };
    let exp = area_vs_sigma_experiment(model, &centers, &half_widths, samples, seed)?;
    run.write_output("area.csv", &io::area_csv(&exp))?;
    run.write_output("fit.json", &io::fit_json(&exp)?)?;
    for (id, c) in exp.centers.iter().enumerate() {
        match c {
            CenterOutcome::Done { exact, bmi, .. } => println!(
                "center {id}: sigma {:.6}, exact ratio {:.4}, bmi ratio {:.4}",
                exact.sigma_critical.unwrap_or(f64::NAN),
                exact.ratio,
                bmi.ratio
            ),
            CenterOutcome::Skipped { reason } => println!("center {id}: skipped ({reason})"),
        }
    }
    for (label, fit) in [("exact", exp.fit_exact), ("bmi", exp.fit_bmi)] {
        match fit {
            Some(f) => println!("{label}: slope {:.6}, intercept {:.6}, r {:.4}", f.slope, f.intercept, f.r_value),
            None => println!("{label}: regression degenerate"),
        }
    }
    Ok(Status::Done)
}
