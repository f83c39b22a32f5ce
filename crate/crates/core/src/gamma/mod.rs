//! The γ-distance between measures, truncation and cut estimates, resolvent
//! distances, concentration-compactness classification and subsolution
//! audits.

mod audit;
mod cc;

pub use audit::{audit_family, evaluate_functional, subsolution_audit, Functional, SubsolutionAudit, Trial};
pub use cc::{ball_masses, cc_classify, CCLabel, CCVerdict, CcOptions};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::shapes::ball_nodes;
use crate::grid::{GeneralizedPotential, Operator, ScalarField};
use crate::torsion::torsion_function;

/// `d_γ(μ, ν) = ‖w_μ - w_ν‖_{L¹}`.
pub fn gamma_distance(a: &GeneralizedPotential, b: &GeneralizedPotential, tol: f64) -> Result<f64> {
    a.grid().ensure_same(b.grid())?;
    let wa = torsion_function(a, tol)?.w;
    let wb = torsion_function(b, tol)?.w;
    Ok(l1_distance(&wa, &wb))
}

pub(crate) fn l1_distance(a: &ScalarField, b: &ScalarField) -> f64 {
    a.values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y).abs())
        .sum::<f64>()
        * a.grid().cell_volume()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationCheck {
    pub r1: f64,
    /// `None` stands for the box edge.
    pub r2: Option<f64>,
    /// `d_γ(μ, μ ∨ I_{B_{R1} ∪ B_{R2}^c})`.
    pub lhs: f64,
    /// `∫_{B_{2R2} \ B_{R1/2}} w_μ`.
    pub tail_mass: f64,
    /// `R1^{-2} + R2^{-2}`.
    pub radial_term: f64,
    pub constant: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Masks the annulus `R1 ≤ |x| < R2` (everything beyond `R1` when `r2` is
/// `None`).
pub fn truncate(pot: &GeneralizedPotential, r1: f64, r2: Option<f64>) -> Result<GeneralizedPotential> {
    let g = *pot.grid();
    let inner = ball_nodes(&g, [0.0, 0.0], r1);
    let omega: Vec<bool> = (0..g.len())
        .map(|i| inner[i] || r2.is_some_and(|r| g.radius(i) >= r))
        .collect();
    pot.join_mask(&omega)
}

/// Raw truncation numbers without a constant: `(lhs, tail_mass, radial_term)`.
pub fn truncation_terms(
    pot: &GeneralizedPotential,
    r1: f64,
    r2: Option<f64>,
    tol: f64,
) -> Result<(f64, f64, f64)> {
    let g = *pot.grid();
    let edge = g.half_width() * std::f64::consts::SQRT_2;
    if !(r1 > 0.0 && r2.is_none_or(|r| r > r1 && r < edge)) {
        return Err(Error::Precondition(format!(
            "truncation radii R1 = {r1}, R2 = {r2:?} out of range"
        )));
    }
    let w = torsion_function(pot, tol)?.w;
    let wt = torsion_function(&truncate(pot, r1, r2)?, tol).map(|t| t.w);
    let wt = match wt {
        Ok(w) => w,
        Err(Error::EmptyOperator) => ScalarField::zeros(g),
        Err(e) => return Err(e),
    };
    let lhs = l1_distance(&w, &wt);
    let outer = r2.map_or(f64::INFINITY, |r| 2.0 * r);
    let tail_mass = (0..g.len())
        .filter(|&i| {
            let r = g.radius(i);
            r >= 0.5 * r1 && r < outer
        })
        .map(|i| w.get(i))
        .sum::<f64>()
        * g.cell_volume();
    let radial_term = r1.powi(-2) + r2.map_or(0.0, |r| r.powi(-2));
    Ok((lhs, tail_mass, radial_term))
}

/// Checks `d_γ(μ, μ ∨ I_{B_{R1} ∪ B_{R2}^c}) ≤ ∫_{B_{2R2} \ B_{R1/2}} w_μ +
/// C (R1^{-2} + R2^{-2})` for a given constant `C`.
pub fn truncation_distance_check(
    pot: &GeneralizedPotential,
    r1: f64,
    r2: Option<f64>,
    constant: f64,
    tol: f64,
) -> Result<TruncationCheck> {
    let (lhs, tail_mass, radial_term) = truncation_terms(pot, r1, r2, tol)?;
    let rhs = tail_mass + constant * radial_term;
    Ok(TruncationCheck {
        r1,
        r2,
        lhs,
        tail_mass,
        radial_term,
        constant,
        rhs,
        holds: lhs <= rhs + 1e-10,
    })
}

/// Smallest `C ≥ 0` for which the truncation bound holds on every given
/// `(pot, R1, R2)` instance.
pub fn calibrate_truncation_constant(
    family: &[(GeneralizedPotential, f64, Option<f64>)],
    tol: f64,
) -> Result<f64> {
    let mut c: f64 = 0.0;
    for (pot, r1, r2) in family {
        let (lhs, tail, radial) = truncation_terms(pot, *r1, *r2, tol)?;
        c = c.max((lhs - tail) / radial);
    }
    Ok(c)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalfspaceCheck {
    pub t: f64,
    /// `d_γ(μ, μ ∨ I_H)` with `H = {x_1 < t}`.
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Cut along the hyperplane `{x_1 = t}`: compares `d_γ(μ, μ ∨ I_{x_1 < t})`
/// with `√(8‖w‖_∞) ∫_{x_1 = t} w - ∫_{x_1 > t} (|∇w|² + V w² - 2w)`.
pub fn halfspace_cut_check(pot: &GeneralizedPotential, t: f64, tol: f64) -> Result<HalfspaceCheck> {
    let g = *pot.grid();
    let l = g.half_width();
    if !(t > -l && t < l) {
        return Err(Error::Precondition(format!("hyperplane x_1 = {t} misses the box")));
    }
    let w = torsion_function(pot, tol)?.w;
    let keep: Vec<bool> = (0..g.len()).map(|i| g.coords(i)[0] < t).collect();
    let cut = pot.join_mask(&keep)?;
    let wc = match torsion_function(&cut, tol) {
        Ok(r) => r.w,
        Err(Error::EmptyOperator) => ScalarField::zeros(g),
        Err(e) => return Err(e),
    };
    let lhs = l1_distance(&w, &wc);

    let h = g.h();
    let n = g.n();
    // Linear interpolation of w onto the hyperplane, one sample per row.
    let s = (t + l) / h - 1.0;
    let i0 = s.floor();
    let frac = s - i0;
    let at = |i: isize, j: usize| -> f64 {
        if i < 0 || i >= n as isize {
            0.0
        } else {
            w.get(g.flat_index([i as usize, j]))
        }
    };
    let rows = if g.dim() == 2 { n } else { 1 };
    let trace: f64 = (0..rows)
        .map(|j| (1.0 - frac) * at(i0 as isize, j) + frac * at(i0 as isize + 1, j))
        .sum::<f64>()
        * h.powi(g.dim() as i32 - 1);

    let right: Vec<usize> = (0..g.len()).filter(|&i| g.coords(i)[0] > t).collect();
    let vol = g.cell_volume();
    let mut grad = 0.0;
    for &node in &right {
        let u = w.get(node);
        for nb in g.neighbors(node) {
            // Each edge inside the region is seen twice.
            let weight = if g.coords(nb)[0] > t { 0.5 } else { 0.0 };
            grad += weight * (u - w.get(nb)).powi(2);
        }
        let missing = 2 * g.dim() - g.neighbors(node).count();
        grad += missing as f64 * u * u;
    }
    grad *= vol / (h * h);
    let pot_term: f64 = right.iter().map(|&i| pot.vfin()[i] * w.get(i).powi(2)).sum::<f64>() * vol;
    let mass: f64 = right.iter().map(|&i| w.get(i)).sum::<f64>() * vol;
    let rhs = (8.0 * w.linf_norm()).sqrt() * trace - grad - pot_term + 2.0 * mass;
    Ok(HalfspaceCheck {
        t,
        lhs,
        rhs,
        holds: lhs <= rhs + 1e-10,
    })
}

/// `‖R_μ - R_ν‖` on the discrete L² by power iteration on the positive
/// semidefinite difference, for an ordered pair `μ ≺ ν`.
pub fn resolvent_distance(a: &GeneralizedPotential, b: &GeneralizedPotential, tol: f64) -> Result<f64> {
    if !a.is_dominated_by(b) {
        return Err(Error::Precondition("resolvent distance needs μ ≺ ν".into()));
    }
    let op_a = Operator::assemble(a)?;
    let op_b = match Operator::assemble(b) {
        Ok(op) => Some(op),
        Err(Error::EmptyOperator) => None,
        Err(e) => return Err(e),
    };
    let cg = 1e-12;
    let apply = |x: &ScalarField| -> Result<ScalarField> {
        let ra = op_a.solve(x, cg)?;
        match &op_b {
            Some(op) => ra.sub(&op.solve(x, cg)?),
            None => Ok(ra),
        }
    };
    let mut x = op_a.extend(&vec![1.0; op_a.dof_count()]);
    x = x.scale(1.0 / x.l2_norm());
    let mut estimate = 0.0;
    let max_iters = 2000;
    for _ in 0..max_iters {
        let y = apply(&x)?;
        let norm = y.l2_norm();
        if norm == 0.0 {
            return Ok(0.0);
        }
        let change = (norm - estimate).abs();
        estimate = norm;
        x = y.scale(1.0 / norm);
        if change <= tol * norm {
            return Ok(estimate);
        }
    }
    Err(Error::PowerStagnation {
        iterations: max_iters,
        estimate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;
    use crate::grid::shapes::Shape;

    #[test]
    fn interval_distance() {
        let g = build_grid(1, 2.5, 319).unwrap();
        let one = Shape::Interval { radius: 1.0, center: [0.0; 2] }.to_potential(&g).unwrap();
        let two = Shape::Interval { radius: 2.0, center: [0.0; 2] }.to_potential(&g).unwrap();
        let d = gamma_distance(&one, &two, 1e-12).unwrap();
        assert!((d / (14.0 / 3.0) - 1.0).abs() < 5e-3, "{d}");
        assert_eq!(gamma_distance(&one, &one, 1e-12).unwrap(), 0.0);
    }

    #[test]
    fn truncation_of_contained_support() {
        let g = build_grid(2, 4.0, 63).unwrap();
        let pot = Shape::Disk { radius: 1.0, center: [0.0; 2] }.to_potential(&g).unwrap();
        let c = truncation_distance_check(&pot, 2.5, Some(3.0), 0.0, 1e-12).unwrap();
        assert_eq!(c.lhs, 0.0);
        assert!(c.holds);
    }

    #[test]
    fn empty_cut() {
        let g = build_grid(2, 2.0, 47).unwrap();
        let pot = Shape::Disk { radius: 1.0, center: [0.0; 2] }.to_potential(&g).unwrap();
        let c = halfspace_cut_check(&pot, 1.5, 1e-12).unwrap();
        assert_eq!(c.lhs, 0.0);
        assert!(c.rhs.abs() < 1e-12);
        assert!(halfspace_cut_check(&pot, 2.5, 1e-12).is_err());
    }

    #[test]
    fn resolvent_distance_of_equal_pair() {
        let g = build_grid(1, 1.0, 63).unwrap();
        let pot = GeneralizedPotential::constant(g, 1.0).unwrap();
        assert_eq!(resolvent_distance(&pot, &pot, 1e-6).unwrap(), 0.0);
    }
}
