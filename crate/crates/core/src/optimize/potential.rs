//! Optimal potentials under the inverse-power mass constraint.

use serde::{Deserialize, Serialize};

use super::{initial_potential, support_radius, OptReport, PenaltyConfig, ProblemKind, G_FLOOR, U_FLOOR};
use crate::error::{Error, Result};
use crate::gamma::{subsolution_audit, Functional};
use crate::grid::{GeneralizedPotential, GridSpec, Operator, ScalarField};
use crate::spectrum::{cluster_of, eigs_op, EigsOptions, Spectrum};
use crate::torsion::torsion_with;

const AUDIT_TOL: f64 = 1e-6;

fn eig_opts(seed: u64) -> EigsOptions {
    EigsOptions {
        tol: 1e-10,
        seed,
        ..EigsOptions::default()
    }
}

struct Solved {
    pot: GeneralizedPotential,
    spec: Spectrum,
}

fn solve(pot: GeneralizedPotential, k: usize, seed: u64, warm: Option<&Spectrum>) -> Result<Solved> {
    let op = Operator::assemble(&pot)?;
    let spec = eigs_op(&op, k, &eig_opts(seed), warm.map(|s| s.eigenfunctions.as_slice()))?;
    Ok(Solved { pot, spec })
}

/// Masks nodes whose finite value exceeds `cap`.
fn promote(pot: GeneralizedPotential, cap: f64) -> Result<GeneralizedPotential> {
    if pot.vfin().iter().all(|v| *v <= cap) {
        return Ok(pot);
    }
    let omega: Vec<bool> = pot.vfin().iter().map(|v| *v <= cap).collect();
    pot.join_mask(&omega)
}

/// Scales the finite part so that `∫ V^{-p} = 1`.
fn normalize_mass(pot: &GeneralizedPotential, p: f64) -> Result<GeneralizedPotential> {
    let mass = pot.inverse_power_mass(p);
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(Error::Precondition(format!("cannot normalize mass {mass}")));
    }
    let s = mass.powf(1.0 / p);
    pot.with_vfin(pot.vfin().iter().map(|v| v * s).collect())
}

/// The optimal potential for a fixed eigenfunction:
/// `V = (∫|u|^q)^{1/p} |u|^{-2/(1+p)}` with `q = 2p/(p+1)`, masked where
/// `|u| ≤ U_FLOOR ‖u‖_∞`.
fn potential_from_eigenfunction(u: &ScalarField, p: f64) -> Result<GeneralizedPotential> {
    let g = *u.grid();
    let q = 2.0 * p / (p + 1.0);
    let c = u.lp_norm(q).powf(q / p);
    let floor = U_FLOOR * u.linf_norm();
    let mut vfin = vec![0.0; g.len()];
    let mut omega = vec![false; g.len()];
    for (i, x) in u.values().iter().enumerate() {
        let a = x.abs();
        if a > floor {
            vfin[i] = c * a.powf(-2.0 / (1.0 + p));
            omega[i] = true;
        }
    }
    GeneralizedPotential::new(g, vfin, vec![false; g.len()])?.join_mask(&omega)
}

/// Blend `(1-θ) a + θ b` of the finite parts, masked where either is.
fn blend(a: &GeneralizedPotential, b: &GeneralizedPotential, theta: f64) -> Result<GeneralizedPotential> {
    let vfin = a
        .vfin()
        .iter()
        .zip(b.vfin())
        .map(|(x, y)| (1.0 - theta) * x + theta * y)
        .collect();
    let mask = a.mask().iter().zip(b.mask()).map(|(x, y)| *x || *y).collect();
    GeneralizedPotential::new(*a.grid(), vfin, mask)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedPointResidual {
    /// `‖V |u|^{2/(1+p)} - c‖_∞ / ‖V‖_∞` on `{|u| > U_FLOOR ‖u‖_∞}`.
    pub relative_to_potential: f64,
    /// The same maximum divided by `c = (∫|u|^q)^{1/p}`.
    pub relative_to_constant: f64,
}

/// Pointwise residual of the optimality relation between `V` and its first
/// eigenfunction.
pub fn fixed_point_residual(pot: &GeneralizedPotential, u: &ScalarField, p: f64) -> FixedPointResidual {
    let q = 2.0 * p / (p + 1.0);
    let c = u.lp_norm(q).powf(q / p);
    let floor = U_FLOOR * u.linf_norm();
    let mut worst: f64 = 0.0;
    for (i, x) in u.values().iter().enumerate() {
        if x.abs() > floor && !pot.is_masked(i) {
            worst = worst.max((pot.vfin()[i] * x.abs().powf(2.0 / (1.0 + p)) - c).abs());
        }
    }
    let vmax = pot.vfin().iter().fold(0.0f64, |m, v| m.max(*v));
    FixedPointResidual {
        relative_to_potential: worst / vmax,
        relative_to_constant: worst / c,
    }
}

struct Run {
    best: Solved,
    objective_trace: Vec<f64>,
    mass_trace: Vec<f64>,
    iterations: usize,
    converged: bool,
}

/// Alternating minimization from a given potential, normalized to unit mass.
fn alternate(cfg: &PenaltyConfig, start: GeneralizedPotential, iters_left: usize) -> Result<Run> {
    let p = cfg.p;
    let cap = cfg.cap(start.grid());
    let mut cur = solve(normalize_mass(&promote(start, cap)?, p)?, 1, cfg.seed, None)?;
    let mut objective_trace = vec![cur.spec.lambda(1)];
    let mut mass_trace = vec![cur.pot.inverse_power_mass(p)];
    let mut converged = false;
    let mut polishing = false;
    let mut iterations = 0;
    while iterations < iters_left {
        iterations += 1;
        let lambda = cur.spec.lambda(1);
        let u = &cur.spec.eigenfunctions[0];
        let next = if polishing {
            // Undamped steps on a frozen mask: plain alternating minimization.
            let free: Vec<bool> = cur.pot.mask().iter().map(|m| !m).collect();
            let target = normalize_mass(&potential_from_eigenfunction(u, p)?.join_mask(&free)?, p)?;
            solve(target, 1, cfg.seed, Some(&cur.spec))?
        } else {
            let target = normalize_mass(&promote(potential_from_eigenfunction(u, p)?, cap)?, p)?;
            let mixed = normalize_mass(&promote(blend(&cur.pot, &target, cfg.damping)?, cap)?, p)?;
            let next = solve(mixed, 1, cfg.seed, Some(&cur.spec))?;
            if next.spec.lambda(1) > lambda && cfg.damping < 1.0 {
                solve(target, 1, cfg.seed, Some(&cur.spec))?
            } else {
                next
            }
        };
        let new_lambda = next.spec.lambda(1);
        if new_lambda > lambda + cfg.tol_obj * lambda {
            if !polishing {
                polishing = true;
                continue;
            }
            converged = fixed_point_residual(&cur.pot, &cur.spec.eigenfunctions[0], p).relative_to_constant
                < cfg.kkt_tol;
            break;
        }
        objective_trace.push(new_lambda);
        mass_trace.push(next.pot.inverse_power_mass(p));
        cur = next;
        // Once λ_1 has settled, polishing drives the pointwise optimality
        // residual down.
        polishing = polishing || lambda - new_lambda < cfg.tol_obj * lambda;
        if polishing
            && fixed_point_residual(&cur.pot, &cur.spec.eigenfunctions[0], p).relative_to_constant < cfg.kkt_tol
        {
            converged = true;
            break;
        }
    }
    Ok(Run {
        best: cur,
        objective_trace,
        mass_trace,
        iterations,
        converged,
    })
}

/// Lattice shifts by one node along each axis, both directions.
fn half_cell_shifts(d: usize) -> Vec<[isize; 2]> {
    let mut s = vec![[1, 0], [-1, 0]];
    if d == 2 {
        s.extend([[0, 1], [0, -1]]);
    }
    s
}

/// Minimizes `λ_1(V)` subject to `∫ V^{-p} = 1` by alternating between the
/// first eigenfunction and the optimal potential for it.
///
/// After convergence the eigenfunction is averaged with its one-node shifts
/// and the iteration restarted from the potential it induces; a restart is
/// kept only when it lowers `λ_1`. This moves lattice-pinned optima off an
/// edge-centred configuration.
pub fn optimize_lambda1_potential(
    cfg: &PenaltyConfig,
    init: Option<&GeneralizedPotential>,
    grid: &GridSpec,
) -> Result<OptReport> {
    cfg.validate(ProblemKind::PotentialMass)?;
    if cfg.k != 1 {
        return Err(Error::Precondition("the alternating scheme needs k = 1".into()));
    }
    let start = match init {
        Some(pot) => {
            grid.ensure_same(pot.grid())?;
            pot.clone()
        }
        None => initial_potential(grid, cfg.seed, 0.1)?,
    };
    let mut run = alternate(cfg, start, cfg.max_iters)?;
    let mut budget = cfg.max_iters.saturating_sub(run.iterations);
    for _ in 0..3 {
        let u = run.best.spec.eigenfunctions[0].clone();
        let lambda = run.best.spec.lambda(1);
        let mut improved = None;
        for shift in half_cell_shifts(grid.dim()) {
            if budget == 0 {
                break;
            }
            let avg = u.add(&u.shifted(shift))?.scale(0.5);
            let trial = alternate(cfg, potential_from_eigenfunction(&avg, cfg.p)?, budget)?;
            budget = budget.saturating_sub(trial.iterations);
            let best_so_far = improved.as_ref().map_or(lambda, |r: &Run| r.best.spec.lambda(1));
            if trial.best.spec.lambda(1) < best_so_far * (1.0 - 1e-12) {
                improved = Some(trial);
            }
        }
        match improved {
            Some(better) => {
                log::debug!(
                    "recentering lowered λ_1 from {lambda} to {}",
                    better.best.spec.lambda(1)
                );
                let mut trace = run.objective_trace.clone();
                let mut mass = run.mass_trace.clone();
                for (l, mm) in better.objective_trace.iter().zip(&better.mass_trace) {
                    if *l <= *trace.last().expect("nonempty trace") {
                        trace.push(*l);
                        mass.push(*mm);
                    }
                }
                run = Run {
                    objective_trace: trace,
                    mass_trace: mass,
                    iterations: run.iterations + better.iterations,
                    converged: better.converged,
                    best: better.best,
                };
            }
            None => break,
        }
    }
    let Solved { pot, spec } = run.best;
    let u = &spec.eigenfunctions[0];
    let residual = fixed_point_residual(&pot, u, cfg.p);
    let w = torsion_with(&Operator::assemble(&pot)?, 1e-12)?.w;
    let radius = support_radius(&w, None);
    let lambda = spec.lambda(1);
    let mass = pot.inverse_power_mass(cfg.p);
    let m_eff = 2.0 * lambda / ((2.0 * cfg.p + grid.dim() as f64) * mass);
    let audit = subsolution_audit(&pot, &Functional::LambdaMass { k: 1, p: cfg.p, m: m_eff }, AUDIT_TOL)?;
    Ok(OptReport {
        kind: ProblemKind::PotentialMass,
        objective: lambda,
        eigenvalues: spec.eigenvalues.clone(),
        lambda_trace: run.objective_trace.clone(),
        objective_trace: run.objective_trace,
        mass_or_torsion_trace: run.mass_trace,
        support_radius: radius,
        kkt_residual: residual.relative_to_constant,
        iterations: run.iterations,
        converged: run.converged,
        box_limited: radius >= 0.9 * grid.half_width(),
        audit: Some(audit),
        final_potential: pot,
    })
}

/// Stationarity residual `max |g - m p V^{-p-1}| / max g` on unmasked nodes.
fn kkt_residual(pot: &GeneralizedPotential, g: &ScalarField, m: f64, p: f64) -> f64 {
    let gmax = g.max();
    let mut worst: f64 = 0.0;
    for i in 0..g.grid().len() {
        if !pot.is_masked(i) {
            let v = pot.vfin()[i];
            let stat = if v > 0.0 { m * p * v.powf(-p - 1.0) } else { f64::INFINITY };
            worst = worst.max((g.get(i) - stat).abs());
        }
    }
    worst / gmax
}

/// `Σ t_j u_j²` over the cluster of `λ_k`: the cluster mean when `top` is
/// `None`, otherwise weight `top` on the largest member and the rest shared.
fn cluster_gradient(spec: &Spectrum, k: usize, cluster_tol: f64, top: Option<f64>) -> ScalarField {
    let range = cluster_of(spec, k - 1, cluster_tol);
    let c = range.len();
    let last = range.end - 1;
    let grid = *spec.eigenfunctions[0].grid();
    let mut g = vec![0.0; grid.len()];
    for j in range {
        let t = match top {
            Some(w) if c > 1 => if j == last { w } else { (1.0 - w) / (c - 1) as f64 },
            _ => 1.0 / c as f64,
        };
        for (gi, ui) in g.iter_mut().zip(spec.eigenfunctions[j].values()) {
            *gi += t * ui * ui;
        }
    }
    ScalarField::from_values(grid, g).expect("finite eigenfunctions")
}

/// Weight on the top member of a two-element cluster at which the first
/// order changes of both eigenvalues towards the target agree.
fn balanced_weight(cur: &Solved, k: usize, m: f64, p: f64, cluster_tol: f64) -> Result<Option<f64>> {
    let range = cluster_of(&cur.spec, k - 1, cluster_tol);
    if range.len() != 2 {
        return Ok(None);
    }
    let (lo, hi) = (&cur.spec.eigenfunctions[range.start], &cur.spec.eigenfunctions[range.start + 1]);
    let imbalance = |t: f64| -> Result<f64> {
        let target = potential_from_gradient(&cluster_gradient(&cur.spec, k, cluster_tol, Some(t)), m, p)?;
        let mut d = 0.0;
        for i in 0..target.grid().len() {
            if !cur.pot.is_masked(i) && !target.is_masked(i) {
                let dv = target.vfin()[i] - cur.pot.vfin()[i];
                d += (hi.get(i).powi(2) - lo.get(i).powi(2)) * dv;
            }
        }
        Ok(d)
    };
    let (mut a, mut b) = (0.0, 1.0);
    let (fa, fb) = (imbalance(a)?, imbalance(b)?);
    if fa.signum() == fb.signum() {
        return Ok(Some(if fa.abs() < fb.abs() { a } else { b }));
    }
    for _ in 0..50 {
        let c = 0.5 * (a + b);
        if imbalance(c)?.signum() == fa.signum() {
            a = c;
        } else {
            b = c;
        }
    }
    Ok(Some(0.5 * (a + b)))
}

/// Pointwise minimizer of `g V + m V^{-p}`: `V = (m p / g)^{1/(1+p)}`,
/// masked where `g ≤ G_FLOOR`.
fn potential_from_gradient(g: &ScalarField, m: f64, p: f64) -> Result<GeneralizedPotential> {
    let grid = *g.grid();
    let mut vfin = vec![0.0; grid.len()];
    let mut omega = vec![false; grid.len()];
    for (i, gi) in g.values().iter().enumerate() {
        if *gi > G_FLOOR {
            vfin[i] = (m * p / gi).powf(1.0 / (1.0 + p));
            omega[i] = true;
        }
    }
    GeneralizedPotential::new(grid, vfin, vec![false; grid.len()])?.join_mask(&omega)
}

/// Minimizes `λ_k(V) + m ∫ V^{-p}` for `k ≥ 2` by damped fixed-point steps
/// towards the pointwise minimizer, halving the step until the objective
/// does not increase.
pub fn optimize_lambdak_potential(
    cfg: &PenaltyConfig,
    init: Option<&GeneralizedPotential>,
    grid: &GridSpec,
) -> Result<OptReport> {
    cfg.validate(ProblemKind::PotentialMass)?;
    if cfg.k < 2 {
        return Err(Error::Precondition("use the alternating scheme for k = 1".into()));
    }
    let (k, p, m) = (cfg.k, cfg.p, cfg.m);
    let cap = cfg.cap(grid);
    let start = match init {
        Some(pot) => {
            grid.ensure_same(pot.grid())?;
            pot.clone()
        }
        None => initial_potential(grid, cfg.seed, 0.1)?,
    };
    let want = |pot: &GeneralizedPotential| (k + 2).min(pot.dof_count());
    let objective = |s: &Solved| {
        let lk = if s.spec.len() >= k { s.spec.lambda(k) } else { f64::INFINITY };
        lk + m * s.pot.inverse_power_mass(p)
    };
    let start = promote(start, cap)?;
    let n0 = want(&start);
    let mut cur = solve(start, n0, cfg.seed, None)?;
    let mut f = objective(&cur);
    let mut objective_trace = vec![f];
    let mut lambda_trace = vec![cur.spec.lambda(k)];
    let mut mass_trace = vec![cur.pot.inverse_power_mass(p)];
    let mut converged = false;
    let mut iterations = 0;
    let mut kkt = f64::INFINITY;
    while iterations < cfg.max_iters {
        iterations += 1;
        let g = cluster_gradient(&cur.spec, k, cfg.cluster_tol, None);
        kkt = kkt_residual(&cur.pot, &g, m, p);
        if kkt < cfg.kkt_tol {
            converged = true;
            break;
        }
        // At a nearly degenerate λ_k the cluster mean may not descend; the
        // balanced weights move every cluster member at the same rate.
        let mut accepted = None;
        for top in [None, balanced_weight(&cur, k, m, p, cfg.cluster_tol)?] {
            let g = if top.is_none() { g.clone() } else { cluster_gradient(&cur.spec, k, cfg.cluster_tol, top) };
            let target = potential_from_gradient(&g, m, p)?;
            let mut theta = cfg.damping;
            while theta >= 1e-6 {
                let trial = promote(blend(&cur.pot, &target, theta)?, cap)?;
                if trial.dof_count() >= k {
                    let nk = want(&trial);
                    let s = solve(trial, nk, cfg.seed, Some(&cur.spec))?;
                    let ft = objective(&s);
                    if ft <= f {
                        accepted = Some((s, ft));
                        break;
                    }
                }
                theta *= 0.5;
            }
            if accepted.is_some() {
                break;
            }
        }
        let Some((next, fnext)) = accepted else {
            converged = kkt < 1e-4;
            break;
        };
        let decrease = f - fnext;
        cur = next;
        f = fnext;
        objective_trace.push(f);
        lambda_trace.push(cur.spec.lambda(k));
        mass_trace.push(cur.pot.inverse_power_mass(p));
        if decrease < cfg.tol_obj * f {
            let g = cluster_gradient(&cur.spec, k, cfg.cluster_tol, None);
            kkt = kkt_residual(&cur.pot, &g, m, p);
            converged = true;
            break;
        }
    }
    let Solved { pot, spec } = cur;
    let w = torsion_with(&Operator::assemble(&pot)?, 1e-12)?.w;
    let radius = support_radius(&w, None);
    let audit = subsolution_audit(&pot, &Functional::LambdaMass { k, p, m }, AUDIT_TOL)?;
    Ok(OptReport {
        kind: ProblemKind::PotentialMass,
        objective: f,
        eigenvalues: spec.eigenvalues.clone(),
        objective_trace,
        lambda_trace,
        mass_or_torsion_trace: mass_trace,
        support_radius: radius,
        kkt_residual: kkt,
        iterations,
        converged,
        box_limited: radius >= 0.9 * grid.half_width(),
        audit: Some(audit),
        final_potential: pot,
    })
}

