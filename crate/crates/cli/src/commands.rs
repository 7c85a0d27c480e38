use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{anyhow, Context};
use lpdual::body::{compute_geometry, polar_identity_check, BodyDocument, SupportFunction};
use lpdual::solver::{
    config_fingerprint, linearized_spectrum, perturbed_start, polar_problem_map, residual_norm,
    solve, uniqueness_scan, PerturbationSpec, SolveOutcomeDocument, SolveStatus,
};
use lpdual::sphere_grid::SphericalGrid;
use lpdual::verify::{check_body, run_verification};
use lpdual::Error;
use serde::Serialize;
use serde_json::json;

use crate::config::{CommandName, RunConfig};

pub enum Failure {
    /// Bad usage, configuration or input (exit 2).
    Config(anyhow::Error),
    /// A computation that could not complete (exit 1).
    Run(anyhow::Error),
}

fn classify(e: Error) -> Failure {
    match e {
        Error::InvalidConfig(_)
        | Error::LmaxTooSmall { .. }
        | Error::InvalidBody(_)
        | Error::Json(_)
        | Error::DegreeExceedsGrid { .. } => Failure::Config(e.into()),
        other => Failure::Run(other.into()),
    }
}

pub fn dispatch(config: &RunConfig) -> Result<bool, Failure> {
    match config.command.expect("resolved config has a command") {
        CommandName::Verify => verify(config),
        CommandName::Solve => solve_cmd(config),
        CommandName::Spectrum => spectrum(config),
        CommandName::Scan => scan(config),
        CommandName::Polar => polar(config),
    }
}

fn grid(lmax: usize) -> Result<Arc<SphericalGrid>, Failure> {
    SphericalGrid::new(lmax).map(Arc::new).map_err(classify)
}

/// Reads a body document, or the `final_h` of a solve outcome; any problem
/// with the file is a configuration error naming the path.
fn load_body(path: &Path, grid: Arc<SphericalGrid>) -> Result<SupportFunction, Failure> {
    let wrap =
        |e: anyhow::Error| Failure::Config(e.context(format!("body file {}", path.display())));
    let text = std::fs::read_to_string(path).map_err(|e| wrap(e.into()))?;
    let doc = match BodyDocument::from_json(&text) {
        Ok(doc) => doc,
        Err(e) => match serde_json::from_str::<SolveOutcomeDocument>(&text) {
            Ok(outcome) => outcome.final_h,
            Err(_) => return Err(wrap(e.into())),
        },
    };
    let sf = doc.into_support(grid).map_err(|e| wrap(e.into()))?;
    compute_geometry(&sf).map_err(|e| wrap(e.into()))?;
    Ok(sf)
}

fn single(values: &[f64], name: &str) -> Result<f64, Failure> {
    match values {
        [v] => Ok(*v),
        _ => Err(Failure::Config(anyhow!(
            "{name} needs exactly one value, got {}",
            values.len()
        ))),
    }
}

fn emit(config: &RunConfig, text: &str) -> Result<(), Failure> {
    match &config.out {
        Some(path) => std::fs::write(path, text)
            .with_context(|| format!("cannot write {}", path.display()))
            .map_err(Failure::Run),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| Failure::Run(e.into()))
        }
    }
}

fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String, Failure> {
    serde_json::to_string_pretty(value)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| Failure::Run(e.into()))
}

fn meta_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

/// Writes `<out>.meta.json` next to the output: config echo, hash, lmax,
/// tolerances and a timestamp. Without `--out` nothing is written.
fn write_meta(config: &RunConfig, extra: serde_json::Value) -> Result<(), Failure> {
    let Some(out) = &config.out else {
        return Ok(());
    };
    let generated = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let meta = json!({
        "tool": format!("lpdual {}", env!("CARGO_PKG_VERSION")),
        "config_hash": config_fingerprint(config),
        "lmax": config.lmax,
        "tolerances": {
            "solver_residual": config.solver.tol_residual,
            "solver_sphere": config.solver.tol_sphere,
            "checks": config.verify.tolerances,
        },
        "config": config,
        "generated_unix_time": generated,
        "summary": extra,
    });
    let path = meta_path(out);
    std::fs::write(&path, to_json(&meta)?)
        .with_context(|| format!("cannot write {}", path.display()))
        .map_err(Failure::Run)
}

fn verify(config: &RunConfig) -> Result<bool, Failure> {
    let vc = &config.verify;
    vc.validate().map_err(classify)?;
    let imported = match &config.input {
        Some(path) => Some(load_body(path, grid(vc.lmax)?)?),
        None => None,
    };
    let mut records = run_verification(vc).map_err(classify)?;
    if let Some(sf) = &imported {
        let id = format!("file:{}", config.input.as_ref().unwrap().display());
        records.extend(check_body(&id, sf, 0, true, vc).map_err(classify)?);
    }
    let failed = records.iter().filter(|r| !r.pass).count();
    emit(config, &to_json(&records)?)?;
    write_meta(config, json!({"checks": records.len(), "failed": failed}))?;
    eprintln!("verify: {} checks, {} failed", records.len(), failed);
    Ok(failed == 0)
}

fn solve_cmd(config: &RunConfig) -> Result<bool, Failure> {
    config.solver.validate().map_err(classify)?;
    let p = single(&config.p_values(), "p")?;
    let q = single(&config.q_values(), "q")?;
    let g = grid(config.solver.lmax)?;
    let h0 = match &config.input {
        Some(path) => load_body(path, g)?,
        None => {
            let seed = config.seed_values().first().copied().unwrap_or(0);
            perturbed_start(g, &PerturbationSpec::from_seed(seed)).map_err(classify)?
        }
    };
    let outcome = solve(&h0, p, q, &config.solver).map_err(classify)?;
    emit(config, &to_json(&outcome.to_document(p, q))?)?;
    write_meta(
        config,
        json!({"status": outcome.status, "residual": outcome.residual}),
    )?;
    eprintln!(
        "solve ({p:?}, {q:?}): {} after {} iterations, residual {:?}",
        outcome.status.as_str(),
        outcome.iterations,
        outcome.residual
    );
    Ok(outcome.status.is_converged())
}

fn spectrum(config: &RunConfig) -> Result<bool, Failure> {
    let tol = config.verify.tolerances.spectrum;
    let mut reports = Vec::new();
    for &p in &config.p_values() {
        for &q in &config.q_values() {
            reports.push(linearized_spectrum(p, q, config.spectrum_lmax).map_err(classify)?);
        }
    }
    if reports.is_empty() {
        return Err(Failure::Config(anyhow!("empty (p, q) lattice")));
    }
    let worst = reports.iter().map(|r| r.max_abs_gap).fold(0.0, f64::max);
    emit(config, &to_json(&reports)?)?;
    write_meta(
        config,
        json!({"pairs": reports.len(), "max_abs_gap": worst}),
    )?;
    eprintln!("spectrum: {} pairs, worst gap {worst:?}", reports.len());
    Ok(worst <= tol)
}

fn scan(config: &RunConfig) -> Result<bool, Failure> {
    let (p, q, seeds) = (config.p_values(), config.q_values(), config.seed_values());
    if p.is_empty() || q.is_empty() || seeds.is_empty() {
        return Err(Failure::Config(anyhow!(
            "scan needs non-empty p, q and seed lists"
        )));
    }
    let result = uniqueness_scan(&p, &q, &seeds, &config.solver).map_err(classify)?;
    let in_region: Vec<_> = result.in_region_rows().collect();
    let failed = in_region
        .iter()
        .filter(|r| r.status != Some(SolveStatus::ConvergedSphere))
        .count();
    emit(config, &result.to_csv())?;
    write_meta(
        config,
        json!({
            "scan": result.metadata,
            "cells": result.rows.len(),
            "in_region_cells": in_region.len(),
            "in_region_failures": failed,
            "row_errors": result.rows.iter().filter_map(|r| r.error.as_ref().map(|e| json!({
                "p": r.p, "q": r.q, "seed": r.seed, "error": e
            }))).collect::<Vec<_>>(),
        }),
    )?;
    eprintln!(
        "scan: {} cells, {} in the uniqueness region, {} of those not ConvergedSphere",
        result.rows.len(),
        in_region.len(),
        failed
    );
    Ok(failed == 0)
}

fn polar(config: &RunConfig) -> Result<bool, Failure> {
    let path = config
        .input
        .as_ref()
        .ok_or_else(|| Failure::Config(anyhow!("polar needs --body")))?;
    let sf = load_body(path, grid(config.verify.lmax)?)?;
    let tol = config.verify.tolerances.polar_random;
    let deviation = polar_identity_check(&sf).map_err(classify)?;
    let pq = match (&config.p, &config.q) {
        (Some(_), Some(_)) => Some((
            single(&config.p_values(), "p")?,
            single(&config.q_values(), "q")?,
        )),
        _ => None,
    };
    let (p, q) = pq.unwrap_or((f64::NAN, f64::NAN));
    let mapped = polar_problem_map(&sf, p, q).map_err(classify)?;
    let residual = match pq {
        Some(_) => Some(residual_norm(&mapped.body, mapped.p, mapped.q).map_err(classify)?),
        None => None,
    };
    let doc = json!({
        "p": pq.map(|v| v.0),
        "q": pq.map(|v| v.1),
        "mapped_p": pq.map(|_| mapped.p),
        "mapped_q": pq.map(|_| mapped.q),
        "mapped_residual": residual,
        "polar_identity_deviation": deviation,
        "body": BodyDocument::from_support(&mapped.body),
    });
    emit(config, &to_json(&doc)?)?;
    write_meta(
        config,
        json!({"polar_identity_deviation": deviation, "mapped_residual": residual}),
    )?;
    eprintln!("polar: identity deviation {deviation:?}, mapped residual {residual:?}");
    Ok(deviation <= tol && residual.is_none_or(|r| r <= tol))
}
