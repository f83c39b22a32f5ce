//! Penalized spectral optimization: `λ_k(V)` under an inverse-power mass
//! constraint and `λ_k(μ) + m P(μ)` over measures, with the rescaling maps
//! between constrained and penalized forms.

mod diagnostics;
mod potential;
mod spectral;

pub use diagnostics::{
    ball_witness, domain_indicator, halfline_mass_profile, isoperimetric_ratio,
    radial_monotonicity_defect, superlevel_geometry, support_radius, vanishing_point,
};
pub use potential::{fixed_point_residual, optimize_lambda1_potential, optimize_lambdak_potential, FixedPointResidual};
pub use spectral::{optimize_spectral_torsion, spectral_torsion_gradient};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gamma::SubsolutionAudit;
use crate::grid::{GeneralizedPotential, GridSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemKind {
    /// `min λ_k(V) + m ∫ V^{-p}` (the constrained form for `k = 1`).
    PotentialMass,
    /// `min λ_k(μ) + m P(μ)`.
    SpectralTorsion,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PenaltyConfig {
    pub k: usize,
    pub p: f64,
    pub m: f64,
    #[serde(default = "defaults::damping")]
    pub damping: f64,
    #[serde(default = "defaults::max_iters")]
    pub max_iters: usize,
    #[serde(default = "defaults::tol_obj")]
    pub tol_obj: f64,
    /// Finite values above this are promoted to the mask; `1e8 / L²` when
    /// absent.
    #[serde(default)]
    pub v_cap: Option<f64>,
    #[serde(default = "defaults::cluster_tol")]
    pub cluster_tol: f64,
    /// Stationarity residual at which the `k ≥ 2` iteration stops.
    #[serde(default = "defaults::kkt_tol")]
    pub kkt_tol: f64,
    #[serde(default)]
    pub seed: u64,
}

mod defaults {
    pub fn damping() -> f64 {
        0.5
    }
    pub fn max_iters() -> usize {
        2000
    }
    pub fn tol_obj() -> f64 {
        1e-12
    }
    pub fn cluster_tol() -> f64 {
        1e-2
    }
    pub fn kkt_tol() -> f64 {
        1e-6
    }
}

pub const U_FLOOR: f64 = 1e-8;
pub const G_FLOOR: f64 = 1e-12;

impl PenaltyConfig {
    pub fn new(k: usize, p: f64, m: f64) -> Self {
        Self {
            k,
            p,
            m,
            damping: defaults::damping(),
            max_iters: defaults::max_iters(),
            tol_obj: defaults::tol_obj(),
            v_cap: None,
            cluster_tol: defaults::cluster_tol(),
            kkt_tol: defaults::kkt_tol(),
            seed: 0,
        }
    }

    pub fn validate(&self, kind: ProblemKind) -> Result<()> {
        let bad = |msg: String| Err(Error::Precondition(msg));
        if self.k == 0 {
            return bad("k must be at least 1".into());
        }
        if !(self.m > 0.0 && self.m.is_finite()) {
            return bad(format!("penalty m = {} must be positive", self.m));
        }
        if kind == ProblemKind::PotentialMass {
            if !(self.p > 0.0 && self.p.is_finite()) {
                return bad(format!("exponent p = {} must be positive", self.p));
            }
            if self.k >= 2 && self.p >= 1.0 {
                return bad(format!("exponent p = {} must lie in (0, 1) when k ≥ 2", self.p));
            }
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return bad(format!("damping {} must lie in (0, 1]", self.damping));
        }
        if self.max_iters == 0 || !(self.tol_obj > 0.0) || !(self.kkt_tol > 0.0) {
            return bad("max_iters, tol_obj and kkt_tol must be positive".into());
        }
        if self.v_cap.is_some_and(|c| !(c > 0.0)) {
            return bad("v_cap must be positive".into());
        }
        if !(self.cluster_tol >= 0.0) {
            return bad("cluster_tol must be nonnegative".into());
        }
        Ok(())
    }

    pub fn cap(&self, grid: &GridSpec) -> f64 {
        self.v_cap.unwrap_or(1e8 / grid.half_width().powi(2))
    }
}

/// Trace and diagnostics of one optimizer run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptReport {
    pub kind: ProblemKind,
    #[serde(rename = "final")]
    pub final_potential: GeneralizedPotential,
    pub objective_trace: Vec<f64>,
    pub lambda_trace: Vec<f64>,
    /// `∫ V^{-p}` or `P` per accepted iterate.
    pub mass_or_torsion_trace: Vec<f64>,
    pub objective: f64,
    pub eigenvalues: Vec<f64>,
    pub support_radius: f64,
    pub kkt_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Set when the support reaches `0.9 L`.
    pub box_limited: bool,
    pub audit: Option<SubsolutionAudit>,
}

impl OptReport {
    pub fn is_monotone(&self, tol: f64) -> bool {
        self.objective_trace
            .windows(2)
            .all(|w| w[1] <= w[0] + tol * w[0].abs().max(1.0))
    }
}

/// `V = (1 + 4|x|²/L²)(1 + a ξ) / L²` with `ξ` uniform in `[-1, 1]`, seeded.
/// The weak confinement keeps the optimizers away from the box walls.
pub fn initial_potential(grid: &GridSpec, seed: u64, amplitude: f64) -> Result<GeneralizedPotential> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let l = grid.half_width();
    let base = l.powi(-2);
    let vfin = (0..grid.len())
        .map(|i| {
            let x = grid.coords(i);
            let r2 = 4.0 * (x[0] * x[0] + x[1] * x[1]) / (l * l);
            base * (1.0 + r2) * (1.0 + amplitude * (2.0 * rng.random::<f64>() - 1.0))
        })
        .collect();
    GeneralizedPotential::new(*grid, vfin, vec![false; grid.len()])
}

/// Stationary point of `t ↦ t^{-2} λ + m t^{2p+d} M`.
pub fn penalty_scale(lambda: f64, mass: f64, m: f64, p: f64, d: usize) -> Result<f64> {
    if !(lambda > 0.0 && mass > 0.0 && mass.is_finite()) {
        return Err(Error::Precondition(format!(
            "rescaling needs λ_k > 0 and 0 < M < ∞ (λ_k = {lambda}, M = {mass})"
        )));
    }
    let e = 2.0 * p + d as f64;
    Ok((2.0 * lambda / (m * e * mass)).powf(1.0 / (e + 2.0)))
}

/// Stationary point of `t ↦ t^{-2} λ + m t^{d+2} P`.
pub fn torsion_penalty_scale(lambda: f64, torsion: f64, m: f64, d: usize) -> Result<f64> {
    if !(lambda > 0.0 && torsion > 0.0) {
        return Err(Error::Precondition(format!(
            "rescaling needs λ_k > 0 and P > 0 (λ_k = {lambda}, P = {torsion})"
        )));
    }
    let d = d as f64;
    Ok((2.0 * lambda / (m * (2.0 + d) * torsion)).powf(1.0 / (d + 4.0)))
}

/// Dilation factor with `∫ V_t^{-p} = target`.
pub fn constraint_scale(mass: f64, target: f64, p: f64, d: usize) -> Result<f64> {
    if !(mass > 0.0 && mass.is_finite() && target > 0.0) {
        return Err(Error::Precondition(format!("cannot rescale mass {mass} to {target}")));
    }
    Ok((target / mass).powf(1.0 / (2.0 * p + d as f64)))
}

/// `λ_k ∫ V^{-p}^{2/(2p+d)}`, invariant under dilation.
pub fn mass_merit(lambda: f64, mass: f64, p: f64, d: usize) -> f64 {
    lambda * mass.powf(2.0 / (2.0 * p + d as f64))
}

/// `λ_k P^{2/(d+2)}`, invariant under dilation.
pub fn torsion_merit(lambda: f64, torsion: f64, d: usize) -> f64 {
    lambda * torsion.powf(2.0 / (d as f64 + 2.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rescaled {
    /// Stationary dilation of the penalized functional.
    pub t_star: f64,
    /// Dilation onto the mass constraint `∫ V^{-p} = target`.
    pub t_constraint: f64,
    /// Integer or reciprocal-integer factor closest to `t_star`.
    pub nearest_nested: f64,
    /// The potential dilated by `t_constraint`.
    pub potential: GeneralizedPotential,
}

/// Both rescalings of a potential: the penalized stationary point for `m`
/// and the dilation that meets the mass constraint.
pub fn rescale_to_constraint(
    pot: &GeneralizedPotential,
    lambda_k: f64,
    cfg: &PenaltyConfig,
    target_mass: f64,
) -> Result<Rescaled> {
    let d = pot.grid().dim();
    let mass = pot.inverse_power_mass(cfg.p);
    let t_star = penalty_scale(lambda_k, mass, cfg.m, cfg.p, d)?;
    let t_constraint = constraint_scale(mass, target_mass, cfg.p, d)?;
    let nearest_nested = if t_star >= 1.0 {
        t_star.round().max(1.0)
    } else {
        1.0 / (1.0 / t_star).round()
    };
    Ok(Rescaled {
        t_star,
        t_constraint,
        nearest_nested,
        potential: pot.dilate(t_constraint)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;

    #[test]
    fn stationary_scale() {
        // 2λ = m (2p + d) M gives t* = 1.
        let (p, d, m, mass) = (0.5, 1, 2.0, 1.5);
        let lambda = 0.5 * m * (2.0 * p + d as f64) * mass;
        assert!((penalty_scale(lambda, mass, m, p, d).unwrap() - 1.0).abs() < 1e-15);
        let t4 = penalty_scale(4.0 * lambda, mass, m, p, d).unwrap();
        assert!((t4 - 4f64.powf(1.0 / (2.0 * p + d as f64 + 2.0))).abs() < 1e-12);
        assert!(penalty_scale(1.0, 0.0, m, p, d).is_err());
    }

    #[test]
    fn stationary_scale_minimizes() {
        let (lambda, mass, m, p, d) = (3.0, 0.7, 1.3, 0.25, 2);
        let f = |t: f64| lambda / (t * t) + m * t.powf(2.0 * p + d as f64) * mass;
        let t_star = penalty_scale(lambda, mass, m, p, d).unwrap();
        let best = (1..4000)
            .map(|i| i as f64 * 1e-3)
            .min_by(|a, b| f(*a).total_cmp(&f(*b)))
            .unwrap();
        assert!((best - t_star).abs() < 2e-3);
        let tt = torsion_penalty_scale(lambda, 0.4, m, d).unwrap();
        let g = |t: f64| lambda / (t * t) + m * t.powf(d as f64 + 2.0) * 0.4;
        assert!(g(tt) <= g(tt * 1.01) && g(tt) <= g(tt * 0.99));
    }

    #[test]
    fn constraint_rescaling_hits_target() {
        let g = build_grid(2, 2.0, 15).unwrap();
        let pot = initial_potential(&g, 3, 0.1).unwrap();
        let cfg = PenaltyConfig::new(1, 0.5, 1.0);
        let r = rescale_to_constraint(&pot, 2.0, &cfg, 1.0).unwrap();
        assert!((r.potential.inverse_power_mass(0.5) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn config_validation() {
        let mut cfg = PenaltyConfig::new(2, 1.5, 1.0);
        assert!(cfg.validate(ProblemKind::PotentialMass).is_err());
        cfg.p = 0.5;
        assert!(cfg.validate(ProblemKind::PotentialMass).is_ok());
        assert!(PenaltyConfig::new(1, 3.0, 1.0).validate(ProblemKind::PotentialMass).is_ok());
        assert!(PenaltyConfig::new(1, 0.5, -1.0).validate(ProblemKind::SpectralTorsion).is_err());
    }
}
