//! The subcommands. Each one computes everything in memory and returns an
//! [`Outcome`]; nothing touches the disk until the whole run has succeeded.

use std::f64::consts::PI;

use flatchain::chain::{chain_integral, chain_integral_graph, ChainIntegralResult};
use flatchain::forms::{builtin, FormDescriptor, SubgraphForm};
use flatchain::io::{fmt_f64, write_algass_csv, write_convergence_csv, write_path_csv, write_sheet_csv, write_strip_csv, PathSidecar};
use flatchain::oracle::{gradient_exact, lyons_zheng_value, riemann_sum, young_value, RiemannScheme};
use flatchain::paths::{estimate_holder, generate_analytic, generate_bm, generate_fbm, AnalyticCurve, SampledPath};
use flatchain::quad::trapezoid_uniform;
use flatchain::scaling::{scaling_experiment, ScalingOptions};
use flatchain::sheet::{surface_mass, SheetGrid};
use flatchain::spectral::{algass_growth_test, compute_zk, compute_zk_pair, reconstruct, sobolev_estimate, WaveGrid};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Command, Generator, Resolved, SpectralMode};
use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, detail: detail.into() }
    }
}

/// A file to be written as `<stem><suffix>`.
pub struct Artifact {
    pub suffix: String,
    pub bytes: Vec<u8>,
}

pub struct Outcome {
    pub checks: Vec<Check>,
    pub result: Value,
    pub artifacts: Vec<Artifact>,
}

type Run = Result<Outcome, CliError>;

pub fn run(cfg: &Resolved) -> Run {
    match cfg.command {
        Command::GenPath => gen_path(cfg),
        Command::SurfaceMass => surface_mass_run(cfg),
        Command::ChainIntegrate => chain_integrate(cfg),
        Command::OracleCompare => oracle_compare(cfg),
        Command::Spectral => match cfg.spectral_mode.unwrap_or(SpectralMode::Zk) {
            SpectralMode::Zk => spectral_zk(cfg),
            SpectralMode::Reconstruct => spectral_reconstruct(cfg),
            SpectralMode::Sobolev => spectral_sobolev(cfg),
            SpectralMode::Algass => spectral_algass(cfg),
        },
        Command::Scaling => scaling(cfg),
    }
}

fn csv_artifact<F>(suffix: &str, write: F) -> Result<Artifact, CliError>
where
    F: FnOnce(&mut Vec<u8>) -> flatchain::Result<()>,
{
    let mut bytes = Vec::new();
    write(&mut bytes).map_err(|e| CliError::Runtime(e.to_string()))?;
    Ok(Artifact { suffix: suffix.to_owned(), bytes })
}

fn rows_artifact(suffix: &str, header: &[String], rows: &[Vec<String>]) -> Result<Artifact, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Runtime(e.to_string()))?;
    Ok(Artifact { suffix: suffix.to_owned(), bytes })
}

fn strings(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

fn file_tag(name: &str) -> String {
    name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' }).collect()
}

pub fn build_path(cfg: &Resolved, seed: u64) -> Result<SampledPath, CliError> {
    let p = match cfg.generator {
        Generator::Fbm => generate_fbm(cfg.hurst.unwrap_or(0.7), cfg.dim, cfg.steps, cfg.horizon, seed)?,
        Generator::Bm => generate_bm(cfg.dim, cfg.steps, cfg.horizon, seed)?,
        Generator::Circle | Generator::Line | Generator::Constant => {
            let name = match cfg.generator {
                Generator::Circle => "circle",
                Generator::Line => "line",
                _ => "constant",
            };
            generate_analytic(&AnalyticCurve::parse(name, cfg.dim)?, cfg.steps, cfg.horizon)?
        }
        Generator::File => {
            let file = cfg.file.as_ref().expect("validated");
            flatchain::io::load_path(file).map_err(|e| CliError::Usage(format!("{}: {e}", file.display())))?
        }
    };
    Ok(p)
}

fn ensemble(cfg: &Resolved) -> Result<Vec<SampledPath>, CliError> {
    (0..cfg.replicas as u64).into_par_iter().map(|r| build_path(cfg, cfg.base_seed + r)).collect()
}

fn sheet(cfg: &Resolved, path: &SampledPath) -> Result<SheetGrid, CliError> {
    let alpha_min = cfg.alpha_min.unwrap_or(4.0 * path.step());
    Ok(SheetGrid::new(path, cfg.kernel, cfg.extension, cfg.gamma, alpha_min, cfg.ratio)?)
}

fn form(cfg: &Resolved, name: &str) -> Result<FormDescriptor, CliError> {
    let desc = builtin(name, cfg.dim)?;
    if desc.one_form.is_none() {
        return Err(CliError::Usage(format!("{name} is not a 1-form")));
    }
    Ok(desc)
}

fn gen_path(cfg: &Resolved) -> Run {
    let path = build_path(cfg, cfg.seed)?;
    let finite = path.data().iter().all(|v| v.is_finite());
    let holder = estimate_holder(&path, cfg.gamma.min(1.0)).ok();
    let sidecar = PathSidecar::of(&path);
    Ok(Outcome {
        checks: vec![Check::new("samples finite", finite, format!("{} samples", path.data().len()))],
        result: json!({
            "path": sidecar,
            "step": path.step(),
            "start": path.start(),
            "end": path.end(),
            "holder": holder,
        }),
        artifacts: vec![
            csv_artifact("-path.csv", |w| write_path_csv(&path, w))?,
            Artifact { suffix: "-path.json".into(), bytes: serde_json::to_vec_pretty(&sidecar)? },
        ],
    })
}

fn surface_mass_run(cfg: &Resolved) -> Run {
    let path = build_path(cfg, cfg.seed)?;
    let grid = sheet(cfg, &path)?;
    let report = surface_mass(&grid)?;
    let rows: Vec<Vec<String>> = report
        .bands
        .iter()
        .map(|b| vec![fmt_f64(b.alpha_lo), fmt_f64(b.alpha_hi), fmt_f64(b.mass), fmt_f64(b.bound)])
        .collect();
    let ok = report.within_bound(1.1);
    Ok(Outcome {
        checks: vec![Check::new(
            "mass within 1.1x bound",
            ok,
            format!("mass {} against bound {}", report.total, report.bound_prediction),
        )],
        result: serde_json::to_value(&report)?,
        artifacts: vec![
            rows_artifact("-bands.csv", &strings(&["alpha_lo", "alpha_hi", "mass", "bound"]), &rows)?,
            csv_artifact("-sheet.csv", |w| write_sheet_csv(&grid, w))?,
        ],
    })
}

/// Closed-form value this run can be checked against, with its tolerance.
fn reference(cfg: &Resolved, path: &SampledPath, desc: &FormDescriptor) -> Result<Option<(f64, f64, &'static str)>, CliError> {
    if cfg.graph_lift {
        if desc.name == "subgraph" {
            let f = SubgraphForm { space_dim: cfg.dim };
            let drift: Vec<f64> = (0..=path.n_steps()).map(|j| f.antiderivative_dt(path.time(j), path.point(j))).collect();
            let target = f.antiderivative(path.horizon(), path.end())
                - f.antiderivative(0.0, path.start())
                - trapezoid_uniform(&drift, path.step());
            return Ok(Some((target, 0.02 * target.abs(), "subgraph identity")));
        }
        return Ok(None);
    }
    if let Some(pot) = &desc.potential {
        let target = gradient_exact(pot.as_ref(), path)?;
        return Ok(Some((target, 1e-2 * (1.0 + target.abs()), "potential difference")));
    }
    let full_circle = cfg.generator == Generator::Circle && (cfg.horizon - 2.0 * PI).abs() < 1e-12;
    if let (true, Some(v)) = (full_circle, desc.circle_integral) {
        return Ok(Some((v, 1e-3 * v.abs().max(1.0), "Green's theorem")));
    }
    Ok(None)
}

fn chain_integrate(cfg: &Resolved) -> Run {
    let path = build_path(cfg, cfg.seed)?;
    let grid = sheet(cfg, &path)?;
    let mut checks = Vec::new();
    let mut forms = Vec::new();
    let mut artifacts = Vec::new();
    for name in &cfg.forms {
        let desc = form(cfg, name)?;
        let phi = desc.as_one_form()?;
        let r = if cfg.graph_lift { chain_integral_graph(&grid, phi.as_ref())? } else { chain_integral(&grid, phi.as_ref())? };
        checks.push(stokes_check(name, &r));
        let target = reference(cfg, &path, &desc)?;
        if let Some((target, tol, what)) = target {
            let err = (r.extrapolated_value - target).abs();
            checks.push(Check::new(
                format!("{name}: {what}"),
                err <= tol,
                format!("value {} against {target}, error {err:e}, tolerance {tol:e}", r.extrapolated_value),
            ));
        }
        artifacts.push(csv_artifact(&format!("-{}-convergence.csv", file_tag(name)), |w| write_convergence_csv(&r, w))?);
        forms.push(json!({
            "form": name,
            "value": r.extrapolated_value,
            "reference": target.map(|t| t.0),
            "detail": r,
        }));
    }
    Ok(Outcome { checks, result: json!({ "forms": forms }), artifacts })
}

fn stokes_check(name: &str, r: &ChainIntegralResult) -> Check {
    Check::new(
        format!("{name}: Stokes residual"),
        r.stokes_ok(),
        format!("residual {:e}, tolerance {:e}", r.stokes_residual, r.stokes_tolerance),
    )
}

fn oracle_compare(cfg: &Resolved) -> Run {
    let path = build_path(cfg, cfg.seed)?;
    let grid = sheet(cfg, &path)?;
    let mut checks = Vec::new();
    let mut rows = Vec::new();
    let mut forms = Vec::new();
    for name in &cfg.forms {
        let desc = form(cfg, name)?;
        if desc.time_dependent {
            return Err(CliError::Usage(format!("{name} is time dependent; use chain-integrate --graph-lift")));
        }
        let phi = desc.as_one_form()?;
        let [left, right, mid] = [RiemannScheme::Left, RiemannScheme::Right, RiemannScheme::Midpoint]
            .map(|s| riemann_sum(&path, phi.as_ref(), s, 1));
        let (left, right, mid) = (left?, right?, mid?);
        let lz = lyons_zheng_value(&path, phi.as_ref())?;
        let young = if cfg.gamma > 0.5 { young_value(&path, phi.as_ref(), cfg.gamma).ok() } else { None };
        let chain = chain_integral(&grid, phi.as_ref())?;

        let lz_gap = (lz - mid).abs();
        let lz_tol = 1e-12 * mid.abs().max(f64::MIN_POSITIVE);
        checks.push(Check::new(
            format!("{name}: Lyons-Zheng equals midpoint"),
            lz_gap <= lz_tol || lz_gap == 0.0,
            format!("difference {lz_gap:e}"),
        ));
        checks.push(stokes_check(name, &chain));
        let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
        rows.push(vec![
            name.clone(),
            fmt_f64(left),
            fmt_f64(right),
            fmt_f64(mid),
            fmt_f64(lz),
            opt(young.map(|y| y.value)),
            opt(young.map(|y| y.error_estimate)),
            fmt_f64(chain.extrapolated_value),
            fmt_f64(chain.value_at_alpha_min),
        ]);
        forms.push(json!({
            "form": name,
            "left": left,
            "right": right,
            "midpoint": mid,
            "lyons_zheng": lz,
            "young": young,
            "chain": chain.extrapolated_value,
            "chain_extrapolated": chain.extrapolated,
            "chain_at_alpha_min": chain.value_at_alpha_min,
        }));
    }
    let header = strings(&["form", "left", "right", "midpoint", "lyons_zheng", "young", "young_error", "chain", "chain_alpha_min"]);
    Ok(Outcome { checks, result: json!({ "forms": forms }), artifacts: vec![rows_artifact("-oracles.csv", &header, &rows)?] })
}

fn wave_grid(cfg: &Resolved) -> Result<WaveGrid, CliError> {
    Ok(WaveGrid::new(cfg.dim, cfg.cutoff, cfg.resolution)?)
}

fn spectral_zk(cfg: &Resolved) -> Run {
    let path = build_path(cfg, cfg.seed)?;
    let grid = wave_grid(cfg)?;
    let z = compute_zk(&path, &grid, cfg.scheme)?;
    let d = cfg.dim;
    let mut header: Vec<String> = (1..=d).map(|i| format!("k{i}")).collect();
    for c in 1..=d {
        header.push(format!("re{c}"));
        header.push(format!("im{c}"));
    }
    let rows: Vec<Vec<String>> = (0..grid.len())
        .map(|i| {
            let mut row: Vec<String> = grid.node(i).into_iter().map(fmt_f64).collect();
            for v in z.at(i) {
                row.push(fmt_f64(v.re));
                row.push(fmt_f64(v.im));
            }
            row
        })
        .collect();
    let center = z.at(grid.center());
    let increment: Vec<f64> = path.end().iter().zip(path.start()).map(|(a, b)| a - b).collect();
    let err = center.iter().zip(&increment).map(|(c, x)| (c.re - x).abs() + c.im.abs()).fold(0.0, f64::max);
    let scale = 1.0 + increment.iter().map(|x| x.abs()).fold(0.0, f64::max);
    Ok(Outcome {
        checks: vec![Check::new("Z_0 equals the increment", err <= 1e-9 * scale, format!("error {err:e}"))],
        result: json!({
            "nodes": grid.len(),
            "spacing": grid.spacing(),
            "scheme": cfg.scheme,
            "z0": center.iter().map(|c| [c.re, c.im]).collect::<Vec<_>>(),
        }),
        artifacts: vec![rows_artifact("-zk.csv", &header, &rows)?],
    })
}

fn spectral_reconstruct(cfg: &Resolved) -> Run {
    let path = build_path(cfg, cfg.seed)?;
    let grid = wave_grid(cfg)?;
    let (left, _) = compute_zk_pair(&path, &grid)?;
    let mut checks = Vec::new();
    let mut rows = Vec::new();
    let mut forms = Vec::new();
    for name in &cfg.forms {
        let phi = form(cfg, name)?.as_one_form()?;
        let direct = riemann_sum(&path, phi.as_ref(), RiemannScheme::Left, 1)?;
        match reconstruct(phi.as_ref(), &left) {
            Ok(r) => {
                let rel = (r.value - direct).abs() / direct.abs();
                checks.push(Check::new(format!("{name}: matches left sum"), rel <= 0.1, format!("relative error {rel:e}")));
                checks.push(Check::new(
                    format!("{name}: imaginary part small"),
                    r.relative_imag() < 0.01,
                    format!("imaginary share {:e}", r.relative_imag()),
                ));
                rows.push(vec![name.clone(), fmt_f64(r.value), fmt_f64(r.imag), fmt_f64(direct), fmt_f64(rel)]);
                forms.push(json!({ "form": name, "value": r.value, "imag": r.imag, "left_sum": direct, "relative_error": rel }));
            }
            Err(e) => {
                checks.push(Check::new(format!("{name}: reconstruction consistent"), false, e.to_string()));
                forms.push(json!({ "form": name, "error": e.to_string(), "left_sum": direct }));
            }
        }
    }
    let header = strings(&["form", "value", "imag", "left_sum", "relative_error"]);
    Ok(Outcome { checks, result: json!({ "forms": forms }), artifacts: vec![rows_artifact("-reconstruct.csv", &header, &rows)?] })
}

fn spectral_sobolev(cfg: &Resolved) -> Run {
    let paths = ensemble(cfg)?;
    let grid = wave_grid(cfg)?;
    let est = sobolev_estimate(&paths, &grid, cfg.sobolev_s, cfg.scheme)?;
    let rows: Vec<Vec<String>> = est
        .per_replica
        .iter()
        .enumerate()
        .map(|(r, v)| vec![r.to_string(), (cfg.base_seed + r as u64).to_string(), fmt_f64(*v)])
        .collect();
    Ok(Outcome {
        checks: vec![Check::new("estimate finite", est.value.is_finite(), format!("{} ± {}", est.value, est.stderr))],
        result: json!({ "s": est.s, "value": est.value, "stderr": est.stderr, "tail_trend": est.tail_trend }),
        artifacts: vec![rows_artifact("-sobolev.csv", &strings(&["replica", "seed", "value"]), &rows)?],
    })
}

fn spectral_algass(cfg: &Resolved) -> Run {
    let paths = ensemble(cfg)?;
    let grid = wave_grid(cfg)?;
    let report = algass_growth_test(&paths, &grid)?;
    let mut checks = Vec::new();
    // The bounded-moment signature is a statement about Brownian motion.
    if cfg.generator == Generator::Bm && cfg.cutoff >= 8.0 {
        checks.push(Check::new(
            "midpoint slope in [-0.5, 0.5]",
            (-0.5..=0.5).contains(&report.slope),
            format!("slope {}", report.slope),
        ));
        if let (Some(a), Some(b)) = (report.row_at(1.0), report.row_at(8.0)) {
            checks.push(Check::new("gap grows from |k|=1 to |k|=8", b.gap > a.gap, format!("{} vs {}", b.gap, a.gap)));
        }
    }
    Ok(Outcome {
        checks,
        result: json!({ "slope": report.slope, "fit_range": report.fit_range, "replicas": report.replicas }),
        artifacts: vec![csv_artifact("-algass.csv", |w| write_algass_csv(&report, w))?],
    })
}

fn scaling(cfg: &Resolved) -> Run {
    let opts = ScalingOptions {
        replicas: cfg.replicas,
        n_max: cfg.n_max,
        base_seed: cfg.base_seed,
        dim: cfg.dim,
        kernel: cfg.kernel,
        n_steps: cfg.steps,
        horizon: cfg.horizon,
    };
    let report = scaling_experiment(&opts)?;
    let checks = report.checks().into_iter().map(|c| Check::new(c.name, c.passed, c.detail)).collect();
    Ok(Outcome {
        checks,
        result: serde_json::to_value(&report)?,
        artifacts: vec![csv_artifact("-strips.csv", |w| write_strip_csv(&report, w))?],
    })
}
