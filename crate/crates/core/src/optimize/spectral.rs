//! Minimization of `λ_k(μ) + m P(μ)` over generalized potentials.

use super::{initial_potential, support_radius, OptReport, PenaltyConfig, ProblemKind};
use crate::error::{Error, Result};
use crate::gamma::{subsolution_audit, Functional};
use crate::grid::{GeneralizedPotential, GridSpec, Operator, ScalarField};
use crate::spectrum::{eigen_gradient_with, eigs_op, EigsOptions, Spectrum};
use crate::torsion::torsion_with;

const AUDIT_TOL: f64 = 1e-6;
const ARMIJO: f64 = 1e-4;

struct State {
    pot: GeneralizedPotential,
    spec: Spectrum,
    w: ScalarField,
    torsion: f64,
    objective: f64,
}

fn evaluate(
    pot: GeneralizedPotential,
    cfg: &PenaltyConfig,
    warm: Option<&Spectrum>,
) -> Result<State> {
    let op = Operator::assemble(&pot)?;
    let opts = EigsOptions {
        tol: 1e-10,
        seed: cfg.seed,
        ..EigsOptions::default()
    };
    let nk = (cfg.k + 2).min(op.dof_count());
    if nk < cfg.k {
        return Err(Error::Precondition(format!("fewer than k = {} free nodes", cfg.k)));
    }
    let spec = eigs_op(&op, nk, &opts, warm.map(|s| s.eigenfunctions.as_slice()))?;
    let tr = torsion_with(&op, 1e-12)?;
    Ok(State {
        objective: spec.lambda(cfg.k) + cfg.m * tr.torsion,
        torsion: tr.torsion,
        w: tr.w,
        spec,
        pot,
    })
}

/// `dF/dV = u_k² - (m/2) w²` (cluster mean of `u_j²` at a degenerate `λ_k`).
pub fn spectral_torsion_gradient(spec: &Spectrum, w: &ScalarField, k: usize, m: f64, cluster_tol: f64) -> ScalarField {
    let g = eigen_gradient_with(spec, k, cluster_tol);
    g.zip_with(w, |a, b| a - 0.5 * m * b * b).expect("same grid")
}

/// Projected-gradient KKT residual for `V ≥ 0`, relative to `max u_k²`.
fn kkt(pot: &GeneralizedPotential, g: &ScalarField, scale: f64) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..g.grid().len() {
        if pot.is_masked(i) {
            continue;
        }
        let r = if pot.vfin()[i] > 0.0 { g.get(i).abs() } else { (-g.get(i)).max(0.0) };
        worst = worst.max(r);
    }
    worst / scale
}

/// Minimizes `λ_k(μ) + m P(μ)` by scaled projected gradient descent on
/// `V ≥ 0` with Armijo backtracking. The step direction is
/// `-(V + 1/L²)² dF/dV`; values above the cap become masked.
pub fn optimize_spectral_torsion(
    cfg: &PenaltyConfig,
    init: Option<&GeneralizedPotential>,
    grid: &GridSpec,
) -> Result<OptReport> {
    cfg.validate(ProblemKind::SpectralTorsion)?;
    let (k, m) = (cfg.k, cfg.m);
    let cap = cfg.cap(grid);
    let c = grid.half_width().powi(-2);
    let vol = grid.cell_volume();
    let start = match init {
        Some(pot) => {
            grid.ensure_same(pot.grid())?;
            pot.clone()
        }
        None => initial_potential(grid, cfg.seed, 0.1)?,
    };
    let mut cur = evaluate(start, cfg, None)?;
    let mut objective_trace = vec![cur.objective];
    let mut lambda_trace = vec![cur.spec.lambda(k)];
    let mut torsion_trace = vec![cur.torsion];
    let mut step: Option<f64> = None;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < cfg.max_iters {
        iterations += 1;
        let g = spectral_torsion_gradient(&cur.spec, &cur.w, k, m, cfg.cluster_tol);
        let dir: Vec<f64> = (0..grid.len())
            .map(|i| {
                if cur.pot.is_masked(i) {
                    0.0
                } else {
                    -g.get(i) * (cur.pot.vfin()[i] + c).powi(2)
                }
            })
            .collect();
        let dmax = dir.iter().fold(0.0f64, |a, d| a.max(d.abs()));
        if dmax == 0.0 {
            converged = true;
            break;
        }
        let mut s = step.unwrap_or(0.5 * c / dmax);
        let mut accepted = None;
        for _ in 0..60 {
            let mut vfin = cur.pot.vfin().to_vec();
            let mut omega = vec![true; grid.len()];
            let mut slope = 0.0;
            for i in 0..grid.len() {
                if cur.pot.is_masked(i) {
                    continue;
                }
                let old = vfin[i];
                let new = (old + s * dir[i]).max(0.0);
                if new > cap {
                    omega[i] = false;
                    slope += g.get(i) * (cap - old);
                } else {
                    slope += g.get(i) * (new - old);
                }
                vfin[i] = new;
            }
            let trial = cur.pot.with_vfin(vfin)?.join_mask(&omega)?;
            if trial.dof_count() >= k {
                let next = evaluate(trial, cfg, Some(&cur.spec))?;
                if next.objective <= cur.objective + ARMIJO * slope * vol {
                    accepted = Some(next);
                    break;
                }
            }
            s *= 0.5;
        }
        let Some(next) = accepted else {
            // No descent left at the resolution of the line search.
            converged = true;
            break;
        };
        step = Some(2.0 * s);
        let decrease = cur.objective - next.objective;
        cur = next;
        objective_trace.push(cur.objective);
        lambda_trace.push(cur.spec.lambda(k));
        torsion_trace.push(cur.torsion);
        if decrease < cfg.tol_obj * cur.objective.abs() {
            converged = true;
            break;
        }
    }
    let g = spectral_torsion_gradient(&cur.spec, &cur.w, k, m, cfg.cluster_tol);
    let scale = eigen_gradient_with(&cur.spec, k, cfg.cluster_tol).max();
    let kkt_residual = kkt(&cur.pot, &g, scale);
    let radius = support_radius(&cur.w, None);
    let audit = subsolution_audit(&cur.pot, &Functional::LambdaTorsion { k, m }, AUDIT_TOL)?;
    Ok(OptReport {
        kind: ProblemKind::SpectralTorsion,
        objective: cur.objective,
        eigenvalues: cur.spec.eigenvalues.clone(),
        objective_trace,
        lambda_trace,
        mass_or_torsion_trace: torsion_trace,
        support_radius: radius,
        kkt_residual,
        iterations,
        converged,
        box_limited: radius >= 0.9 * grid.half_width(),
        audit: Some(audit),
        final_potential: cur.pot,
    })
}
