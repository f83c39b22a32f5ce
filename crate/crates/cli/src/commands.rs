//! One function per subcommand, each producing the artifacts of a run.

use serde_json::json;
use spectropt::gamma::{gamma_distance, resolvent_distance};
use spectropt::optimize::{
    ball_witness, domain_indicator, isoperimetric_ratio, mass_merit, optimize_lambda1_potential,
    optimize_lambdak_potential, optimize_spectral_torsion, support_radius, torsion_merit, OptReport,
    ProblemKind,
};
use spectropt::spectrum::{eigen_linf_check, eigs_with, resolvent_gap_check, EigsOptions};
use spectropt::torsion::torsion_function;
use spectropt::verify::{registry, CheckReport, Suite, VerifyConfig};
use spectropt::GeneralizedPotential;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::Artifacts;

fn eig_options(cfg: &RunConfig) -> EigsOptions {
    EigsOptions {
        tol: cfg.solver.tol,
        max_iters: cfg.solver.max_iters,
        ..EigsOptions::default()
    }
}

fn grid_json(pot: &GeneralizedPotential) -> serde_json::Value {
    let g = pot.grid();
    json!({ "d": g.dim(), "L": g.half_width(), "n": g.n() })
}

pub fn torsion(cfg: &RunConfig) -> Result<Artifacts, CliError> {
    let pot = cfg.require("potential")?;
    let t = torsion_function(&pot, cfg.solver.tol)?;
    let mut a = Artifacts::new(json!({
        "command": "torsion",
        "potential": cfg.potential.as_ref().map(|s| s.label()),
        "grid": grid_json(&pot),
        "P": t.torsion,
        "E": t.energy,
        "boundary_shell_mass": t.boundary_shell_mass,
        "w_max": t.w.max(),
        "support_radius": support_radius(&t.w, None),
        "w": "w.csv",
    }))?;
    a.summary("score", t.torsion);
    a.summary("P", t.torsion);
    a.field("w", &t.w)?;
    Ok(a)
}

pub fn eigs(cfg: &RunConfig) -> Result<Artifacts, CliError> {
    let pot = cfg.require("potential")?;
    let k = cfg.problem.k;
    let spec = eigs_with(&pot, k, &eig_options(cfg), None)?;
    let t = torsion_function(&pot, cfg.solver.tol)?;
    let d = pot.grid().dim();
    let merit = torsion_merit(spec.lambda(1), t.torsion, d);
    let refs: Vec<String> = (1..=k).map(|j| format!("u{j}.csv")).collect();
    let mut a = Artifacts::new(json!({
        "command": "eigs",
        "potential": cfg.potential.as_ref().map(|s| s.label()),
        "grid": grid_json(&pot),
        "eigenvalues": spec.eigenvalues,
        "residuals": spec.residuals,
        "iterations": spec.iterations,
        "P": t.torsion,
        "merit": merit,
        "linf_bounds": eigen_linf_check(&spec, d),
        "boundary_shell_mass": t.boundary_shell_mass,
        "eigenfunctions": refs,
    }))?;
    a.summary("score", merit);
    a.summary("lambda1", spec.lambda(1));
    a.summary("P", t.torsion);
    let rows: Vec<Vec<String>> = spec
        .eigenvalues
        .iter()
        .zip(&spec.residuals)
        .enumerate()
        .map(|(j, (l, r))| vec![(j + 1).to_string(), l.to_string(), r.to_string()])
        .collect();
    a.table("eigenvalues.csv", &["j", "lambda", "residual"], &rows)?;
    for (j, u) in spec.eigenfunctions.iter().enumerate() {
        a.field(&format!("u{}", j + 1), u)?;
    }
    Ok(a)
}

pub fn gamma(cfg: &RunConfig) -> Result<Artifacts, CliError> {
    let mu = cfg.require("potential")?;
    let nu = cfg.require("other")?;
    if mu.grid() != nu.grid() {
        return Err(CliError::Config("`potential` and `other` live on different grids".into()));
    }
    let tol = cfg.solver.tol;
    let d = gamma_distance(&mu, &nu, tol)?;
    let (pa, pb) = (torsion_function(&mu, tol)?.torsion, torsion_function(&nu, tol)?.torsion);
    let ordered = if mu.is_dominated_by(&nu) {
        Some((&mu, &nu, "potential ≺ other"))
    } else if nu.is_dominated_by(&mu) {
        Some((&nu, &mu, "other ≺ potential"))
    } else {
        None
    };
    let mut pair = serde_json::Value::Null;
    if let Some((lo, hi, order)) = ordered {
        let k = cfg.problem.k.min(hi.dof_count());
        pair = json!({
            "order": order,
            "resolvent_distance": resolvent_distance(lo, hi, 1e-10)?,
            "gap_check": if k > 0 { Some(resolvent_gap_check(lo, hi, k, 1e-10)?) } else { None },
        });
    }
    let mut a = Artifacts::new(json!({
        "command": "gamma",
        "potential": cfg.potential.as_ref().map(|s| s.label()),
        "other": cfg.other.as_ref().map(|s| s.label()),
        "grid": grid_json(&mu),
        "d_gamma": d,
        "P_potential": pa,
        "P_other": pb,
        "ordered_pair": pair,
    }))?;
    a.summary("score", d);
    Ok(a)
}

pub fn optimize(cfg: &RunConfig, seed: u64) -> Result<Artifacts, CliError> {
    let kind = cfg.problem.kind;
    let pc = cfg.problem.penalty(seed);
    pc.validate(kind)?;
    let grid = cfg.grid()?;
    let init = cfg.potential.as_ref().map(|s| cfg.load_source(s)).transpose()?;
    let report: OptReport = match kind {
        ProblemKind::PotentialMass if pc.k == 1 => optimize_lambda1_potential(&pc, init.as_ref(), &grid)?,
        ProblemKind::PotentialMass => optimize_lambdak_potential(&pc, init.as_ref(), &grid)?,
        ProblemKind::SpectralTorsion => optimize_spectral_torsion(&pc, init.as_ref(), &grid)?,
    };
    let pot = &report.final_potential;
    let d = grid.dim();
    let t = torsion_function(pot, 1e-12)?;
    let lambda_k = report.eigenvalues.get(pc.k - 1).copied().unwrap_or(f64::NAN);
    let merit = match kind {
        ProblemKind::PotentialMass => mass_merit(lambda_k, pot.inverse_power_mass(pc.p), pc.p, d),
        ProblemKind::SpectralTorsion => torsion_merit(lambda_k, t.torsion, d),
    };
    let isoperimetric = (d == 2).then(|| isoperimetric_ratio(&t.w));
    let witness = t.w.centroid().and_then(|c| ball_witness(pot, c));
    let mut body = serde_json::to_value(&report)?;
    let obj = body.as_object_mut().expect("report is an object");
    obj.insert("final".into(), json!("final.json"));
    obj.insert("command".into(), json!("optimize"));
    obj.insert("grid".into(), grid_json(pot));
    obj.insert("merit".into(), json!(merit));
    obj.insert("P".into(), json!(t.torsion));
    if kind == ProblemKind::PotentialMass {
        obj.insert("mass".into(), json!(pot.inverse_power_mass(pc.p)));
    }
    obj.insert("boundary_shell_mass".into(), json!(t.boundary_shell_mass));
    obj.insert("isoperimetric_ratio".into(), json!(isoperimetric));
    obj.insert("ball_witness".into(), json!(witness));
    obj.insert("domain_indicator".into(), json!(domain_indicator(pot)));
    obj.insert("audit_passed".into(), json!(report.audit.as_ref().map(|a| a.passed)));
    let mut a = Artifacts::new(body)?;
    a.summary("score", report.objective);
    a.summary("merit", merit);
    a.summary("support_radius", report.support_radius);
    if let Some(iso) = isoperimetric {
        a.summary("isoperimetric_ratio", iso);
    }
    let rows: Vec<Vec<String>> = (0..report.objective_trace.len())
        .map(|i| {
            vec![
                i.to_string(),
                report.objective_trace[i].to_string(),
                report.lambda_trace.get(i).map_or(String::new(), f64::to_string),
                report.mass_or_torsion_trace.get(i).map_or(String::new(), f64::to_string),
            ]
        })
        .collect();
    a.table("trace.csv", &["iteration", "objective", "lambda_k", "mass_or_torsion"], &rows)?;
    a.potential("final", pot)?;
    a.field("torsion", &t.w)?;
    Ok(a)
}

/// Runs the suite; the artifacts hold one JSON file per check.
pub fn verify(cfg: &VerifyConfig) -> Result<(Artifacts, Vec<CheckReport>), CliError> {
    let suite = Suite::new(cfg.clone());
    let reports = suite.run_all()?;
    let summary: Vec<_> = reports
        .iter()
        .map(|r| {
            let about = registry().iter().find(|c| c.name == r.name).map(|c| c.summary);
            json!({ "name": r.name, "summary": about, "tags": r.tags, "passed": r.passed, "report": format!("checks/{}.json", r.name) })
        })
        .collect();
    let failed: Vec<&str> = reports.iter().filter(|r| !r.passed).map(|r| r.name.as_str()).collect();
    let mut a = Artifacts::new(json!({
        "command": "verify",
        "passed": failed.is_empty(),
        "failed": failed,
        "checks": summary,
    }))?;
    for r in &reports {
        a.json(&format!("checks/{}.json", r.name), r)?;
    }
    Ok((a, reports))
}
