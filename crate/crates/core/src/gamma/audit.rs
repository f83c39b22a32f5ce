//! Numerical subsolution audits: `F(μ) ≤ F(ν)` against a deterministic
//! family of larger measures `ν ≻ μ`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::shapes::ball_nodes;
use crate::grid::{GeneralizedPotential, Operator, ScalarField};
use crate::optimize::support_radius;
use crate::spectrum::{eigs_op, EigsOptions};
use crate::torsion::torsion_with;

/// Shape functionals on generalized potentials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Functional {
    /// `λ_k + m ∫ V^{-p}`.
    LambdaMass { k: usize, p: f64, m: f64 },
    /// `λ_k + m P`.
    LambdaTorsion { k: usize, m: f64 },
    /// `E_f + m P`, with `f ≡ 1` when no source is given.
    EnergyTorsion {
        m: f64,
        #[serde(default)]
        source: Option<ScalarField>,
    },
    /// `E_f + m ∫ V^{-p}`.
    EnergyMass {
        p: f64,
        m: f64,
        #[serde(default)]
        source: Option<ScalarField>,
    },
}

impl Functional {
    /// Builds a functional from its kebab-case name.
    pub fn from_name(name: &str, k: usize, p: f64, m: f64) -> Result<Self> {
        Ok(match name {
            "lambda-mass" => Functional::LambdaMass { k, p, m },
            "lambda-torsion" => Functional::LambdaTorsion { k, m },
            "energy-torsion" => Functional::EnergyTorsion { m, source: None },
            "energy-mass" => Functional::EnergyMass { p, m, source: None },
            other => return Err(Error::UnknownFunctional(other.to_string())),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Functional::LambdaMass { .. } => "lambda-mass",
            Functional::LambdaTorsion { .. } => "lambda-torsion",
            Functional::EnergyTorsion { .. } => "energy-torsion",
            Functional::EnergyMass { .. } => "energy-mass",
        }
    }
}

const EIG_TOL: f64 = 1e-10;
const CG_TOL: f64 = 1e-12;

/// `F(μ)`; a measure that masks every node gives `+∞`.
pub fn evaluate_functional(f: &Functional, pot: &GeneralizedPotential) -> Result<f64> {
    let op = match Operator::assemble(pot) {
        Ok(op) => op,
        Err(Error::EmptyOperator) => return Ok(f64::INFINITY),
        Err(e) => return Err(e),
    };
    let lambda = |k: usize| -> Result<f64> {
        if k > op.dof_count() {
            return Ok(f64::INFINITY);
        }
        let opts = EigsOptions {
            tol: EIG_TOL,
            ..EigsOptions::default()
        };
        Ok(eigs_op(&op, k, &opts, None)?.lambda(k))
    };
    let energy = |source: &Option<ScalarField>| -> Result<f64> {
        let one = ScalarField::constant(*pot.grid(), 1.0);
        let f = source.as_ref().unwrap_or(&one);
        let u = op.solve(f, CG_TOL)?;
        Ok(-0.5 * f.inner(&u)?)
    };
    let torsion = || -> Result<f64> { Ok(torsion_with(&op, CG_TOL)?.torsion) };
    match f {
        Functional::LambdaMass { k, p, m } => Ok(lambda(*k)? + m * pot.inverse_power_mass(*p)),
        Functional::LambdaTorsion { k, m } => Ok(lambda(*k)? + m * torsion()?),
        Functional::EnergyTorsion { m, source } => Ok(energy(source)? + m * torsion()?),
        Functional::EnergyMass { p, m, source } => Ok(energy(source)? + m * pot.inverse_power_mass(*p)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub description: String,
    pub objective: f64,
    /// `F(ν) - F(μ)`.
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsolutionAudit {
    pub functional: String,
    pub base_objective: f64,
    pub trials: Vec<Trial>,
    /// Smallest delta over the trials.
    pub worst_violation: f64,
    pub tol: f64,
    pub passed: bool,
}

/// The perturbation family: ball truncations, half-space cuts and localized
/// increases of `V`, all placed relative to the centroid and support radius
/// of the torsion function.
pub fn audit_family(pot: &GeneralizedPotential) -> Result<Vec<(String, GeneralizedPotential)>> {
    let g = *pot.grid();
    let w = torsion_with(&Operator::assemble(pot)?, CG_TOL)?.w;
    let c = w.centroid().unwrap_or([0.0, 0.0]);
    let r = support_radius(&w, None).max(2.0 * g.h());
    let mut family = Vec::new();
    for f in [0.55, 0.65, 0.75, 0.85, 0.95] {
        let omega = ball_nodes(&g, c, f * r);
        family.push((format!("ball truncation at {f:.2} r"), pot.join_mask(&omega)?));
    }
    let cuts: Vec<(usize, f64)> = if g.dim() == 2 {
        vec![(0, 0.8), (0, -0.8), (1, 0.8), (1, -0.8)]
    } else {
        vec![(0, 0.6), (0, -0.6), (0, 0.8), (0, -0.8)]
    };
    for (axis, s) in cuts {
        let plane = c[axis] + s * r;
        let omega: Vec<bool> = (0..g.len())
            .map(|i| {
                let x = g.coords(i)[axis];
                if s > 0.0 {
                    x <= plane
                } else {
                    x >= plane
                }
            })
            .collect();
        let side = if s > 0.0 { '+' } else { '-' };
        family.push((
            format!("half-space cut x{} {side} {:.1} r", axis + 1, s.abs()),
            pot.join_mask(&omega)?,
        ));
    }
    let sigma = 0.25 * r;
    let amp = 1.0 / (r * r);
    let centers: Vec<[f64; 2]> = if g.dim() == 2 {
        vec![c, [c[0] + 0.5 * r, c[1]], [c[0] - 0.5 * r, c[1]], [c[0], c[1] + 0.5 * r]]
    } else {
        vec![c, [c[0] + 0.25 * r, 0.0], [c[0] + 0.5 * r, 0.0], [c[0] - 0.5 * r, 0.0]]
    };
    for x0 in centers {
        let vfin: Vec<f64> = (0..g.len())
            .map(|i| {
                let x = g.coords(i);
                let d2 = (x[0] - x0[0]).powi(2) + (x[1] - x0[1]).powi(2);
                pot.vfin()[i] + amp * (-d2 / (2.0 * sigma * sigma)).exp()
            })
            .collect();
        family.push((
            format!("bump at ({:.3}, {:.3})", x0[0], x0[1]),
            pot.with_vfin(vfin)?,
        ));
    }
    Ok(family)
}

pub fn subsolution_audit(
    pot: &GeneralizedPotential,
    functional: &Functional,
    tol: f64,
) -> Result<SubsolutionAudit> {
    let base = evaluate_functional(functional, pot)?;
    let mut trials = Vec::new();
    for (description, nu) in audit_family(pot)? {
        let objective = evaluate_functional(functional, &nu)?;
        trials.push(Trial {
            description,
            objective,
            delta: objective - base,
        });
    }
    let worst_violation = trials.iter().map(|t| t.delta).fold(f64::INFINITY, f64::min);
    Ok(SubsolutionAudit {
        functional: functional.name().to_string(),
        base_objective: base,
        trials,
        worst_violation,
        tol,
        passed: worst_violation >= -tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;
    use crate::grid::shapes::Shape;

    #[test]
    fn energy_plus_torsion_vanishes() {
        let g = build_grid(2, 2.0, 31).unwrap();
        let pot = Shape::Disk { radius: 1.0, center: [0.0; 2] }.to_potential(&g).unwrap();
        let f = Functional::from_name("energy-torsion", 1, 0.5, 1.0).unwrap();
        let audit = subsolution_audit(&pot, &f, 1e-6).unwrap();
        assert_eq!(audit.trials.len(), 13);
        assert!(audit.base_objective.abs() < 1e-12);
        assert!(audit.trials.iter().all(|t| t.delta.abs() < 1e-10));
        assert!(audit.passed);
    }

    #[test]
    fn unknown_functional() {
        assert!(matches!(
            Functional::from_name("lambda-volume", 1, 0.5, 1.0),
            Err(Error::UnknownFunctional(_))
        ));
    }
}
