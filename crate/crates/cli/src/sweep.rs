//! Cartesian parameter sweeps over config fields.

use std::path::Path;

use rayon::prelude::*;
use serde_json::{json, Value};

use crate::commands;
use crate::config::{set_path, RunConfig, SweepCommand};
use crate::error::CliError;
use crate::output::{metadata, pretty, Artifacts};

/// One point of the product: its axis values and the config they produce.
pub struct Point {
    pub index: usize,
    pub values: Vec<(String, Value)>,
    pub config: RunConfig,
}

/// Expands the axes of `cfg.sweep` into validated configs.
pub fn expand(cfg: &RunConfig) -> Result<(SweepCommand, Vec<Point>), CliError> {
    let sweep = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Config("config: missing `sweep`".into()))?;
    if sweep.axes.values().any(Vec::is_empty) {
        return Err(CliError::Config("sweep: every axis needs at least one value".into()));
    }
    let mut base = cfg.clone();
    base.sweep = None;
    let base = serde_json::to_value(&base)?;
    let mut combos: Vec<Vec<(String, Value)>> = vec![Vec::new()];
    for (path, values) in &sweep.axes {
        combos = combos
            .into_iter()
            .flat_map(|c| {
                values.iter().map(move |v| {
                    let mut c = c.clone();
                    c.push((path.clone(), v.clone()));
                    c
                })
            })
            .collect();
    }
    let points = combos
        .into_iter()
        .enumerate()
        .map(|(index, values)| {
            let mut v = base.clone();
            for (path, value) in &values {
                set_path(&mut v, path, value.clone())?;
            }
            let config: RunConfig = serde_json::from_value(v)
                .map_err(|e| CliError::Config(format!("sweep point {index}: {e}")))?;
            Ok(Point { index, values, config })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok((sweep.command, points))
}

pub fn run_point(command: SweepCommand, cfg: &RunConfig) -> Result<Artifacts, CliError> {
    match command {
        SweepCommand::Torsion => commands::torsion(cfg),
        SweepCommand::Eigs => commands::eigs(cfg),
        SweepCommand::Gamma => commands::gamma(cfg),
        SweepCommand::Optimize => commands::optimize(cfg, cfg.solver.seed),
    }
}

fn label(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Object(o) if o.contains_key("shape") => o["shape"].as_str().unwrap_or("").to_string(),
        other => other.to_string(),
    }
}

/// Runs every point on up to `jobs` threads, writes one directory per
/// point and the aggregate leaderboard. Returns the number of failures.
pub fn run(cfg: &RunConfig, out: &Path, jobs: Option<usize>) -> Result<usize, CliError> {
    let (command, points) = expand(cfg)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        pool = pool.num_threads(j.max(1));
    }
    let pool = pool.build().map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    let results: Vec<Result<Artifacts, CliError>> = pool.install(|| {
        points
            .par_iter()
            .map(|p| {
                log::info!("sweep point {} started", p.index);
                let res = run_point(command, &p.config);
                let res = res.and_then(|a| {
                    a.write(&out.join(format!("point-{:03}", p.index)), command.name(), &p.config)?;
                    Ok(a)
                });
                if let Err(e) = &res {
                    log::warn!("sweep point {} failed: {e}", p.index);
                }
                res
            })
            .collect()
    });

    let axes: Vec<String> = cfg.sweep.as_ref().map(|s| s.axes.keys().cloned().collect()).unwrap_or_default();
    let mut metrics: Vec<String> = Vec::new();
    for a in results.iter().flatten() {
        for (k, _) in &a.summary {
            if !metrics.contains(k) {
                metrics.push(k.clone());
            }
        }
    }
    let mut order: Vec<usize> = (0..points.len()).collect();
    let score = |i: usize| -> f64 {
        results[i]
            .as_ref()
            .ok()
            .and_then(|a| a.summary.iter().find(|(k, _)| k == "score").map(|(_, v)| *v))
            .unwrap_or(f64::INFINITY)
    };
    order.sort_by(|&a, &b| score(a).total_cmp(&score(b)).then(a.cmp(&b)));

    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["rank".to_string(), "point".to_string(), "status".to_string()];
    header.extend(axes.iter().cloned());
    header.extend(metrics.iter().cloned());
    header.push("error".into());
    w.write_record(&header)?;
    let mut entries = Vec::new();
    for (rank, &i) in order.iter().enumerate() {
        let p = &points[i];
        let mut row = vec![(rank + 1).to_string(), format!("point-{:03}", p.index)];
        row.push(if results[i].is_ok() { "ok" } else { "failed" }.to_string());
        row.extend(p.values.iter().map(|(_, v)| label(v)));
        let summary = results[i].as_ref().map(|a| a.summary.clone()).unwrap_or_default();
        for m in &metrics {
            row.push(summary.iter().find(|(k, _)| k == m).map_or(String::new(), |(_, v)| v.to_string()));
        }
        let err = results[i].as_ref().err();
        row.push(err.map_or(String::new(), |e| e.record()));
        w.write_record(&row)?;
        entries.push(json!({
            "point": format!("point-{:03}", p.index),
            "values": p.values.iter().map(|(k, v)| (k.clone(), v.clone())).collect::<serde_json::Map<_, _>>(),
            "summary": summary.into_iter().map(|(k, v)| (k, json!(v))).collect::<serde_json::Map<_, _>>(),
            "error": err.map(|e| json!({ "kind": e.kind(), "code": e.code(), "message": e.message() })),
        }));
    }
    let failures = results.iter().filter(|r| r.is_err()).count();
    std::fs::create_dir_all(out)?;
    std::fs::write(out.join("leaderboard.csv"), w.into_inner().map_err(|e| CliError::Io(e.to_string()))?)?;
    let report = json!({
        "command": "sweep",
        "points": points.len(),
        "failed": failures,
        "leaderboard": entries,
    });
    std::fs::write(out.join("report.json"), pretty(&report)?)?;
    std::fs::write(out.join("config.resolved.json"), pretty(cfg)?)?;
    std::fs::write(out.join("metadata.json"), pretty(&metadata("sweep"))?)?;
    Ok(failures)
}
