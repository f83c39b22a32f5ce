//! Torsion functions, source problems, harmonic replacement and decay
//! diagnostics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GeneralizedPotential, Operator, ScalarField};

/// Torsion function `w` of a potential together with `P = ½∫w` and `E = -P`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorsionReport {
    pub w: ScalarField,
    #[serde(rename = "P")]
    pub torsion: f64,
    #[serde(rename = "E")]
    pub energy: f64,
    /// `∫ w` over the outermost 5% shell of the box.
    pub boundary_shell_mass: f64,
}

/// Solves `(-Δ_h + V) w = 1` on the unmasked nodes.
pub fn torsion_function(pot: &GeneralizedPotential, tol: f64) -> Result<TorsionReport> {
    let op = Operator::assemble(pot)?;
    torsion_with(&op, tol)
}

pub(crate) fn torsion_with(op: &Operator, tol: f64) -> Result<TorsionReport> {
    let grid = *op.grid();
    let w = op.solve(&ScalarField::constant(grid, 1.0), tol)?;
    let torsion = 0.5 * w.integrate();
    Ok(TorsionReport {
        boundary_shell_mass: shell_mass(&w),
        torsion,
        energy: -torsion,
        w,
    })
}

fn shell_mass(w: &ScalarField) -> f64 {
    let g = w.grid();
    (0..g.len())
        .filter(|&i| g.in_outer_shell(i))
        .map(|i| w.get(i))
        .sum::<f64>()
        * g.cell_volume()
}

/// `R_μ(f)`: the solution of `(-Δ_h + V) u = f` on the unmasked nodes.
pub fn source_solution(
    pot: &GeneralizedPotential,
    f: &ScalarField,
    tol: f64,
) -> Result<ScalarField> {
    Operator::assemble(pot)?.solve(f, tol)
}

pub use source_solution as resolvent_apply;

/// `E_f(μ) = -½ ∫ f R_μ(f)`.
pub fn dirichlet_energy(pot: &GeneralizedPotential, f: &ScalarField, tol: f64) -> Result<f64> {
    let u = source_solution(pot, f, tol)?;
    Ok(-0.5 * f.inner(&u)?)
}

/// `J_{μ,f}(u) = ½ Q_μ(u) - ∫ f u`.
pub fn energy_functional(
    pot: &GeneralizedPotential,
    u: &ScalarField,
    f: &ScalarField,
) -> Result<f64> {
    Ok(0.5 * pot.quadratic_form(u)? - f.inner(u)?)
}

/// Replaces `u` inside the ball by the `(Δ - μ)`-harmonic function with the
/// same values on the rest of the grid.
///
/// `ball[node]` marks the nodes of `B_R`. Ball nodes masked by `pot` are set
/// to zero.
pub fn harmonic_replace(
    pot: &GeneralizedPotential,
    u: &ScalarField,
    ball: &[bool],
    tol: f64,
) -> Result<ScalarField> {
    pot.grid().ensure_same(u.grid())?;
    let inner = pot.join_mask(ball)?;
    let mut out = u.clone();
    for (node, inside) in ball.iter().enumerate() {
        if *inside {
            out.values_mut()[node] = 0.0;
        }
    }
    let op = match Operator::assemble(&inner) {
        Ok(op) => op,
        Err(Error::EmptyOperator) => return Ok(out),
        Err(e) => return Err(e),
    };
    let rhs = op.boundary_coupling(&out);
    let x = op.solve_dofs(&rhs, tol, None)?;
    for (&node, v) in op.dofs().iter().zip(x) {
        out.values_mut()[node] = v;
    }
    Ok(out)
}

/// `(R, sup_{|x| ≥ R} w)` for each radius, made non-increasing.
pub fn decay_profile(w: &ScalarField, radii: &[f64]) -> Vec<(f64, f64)> {
    let g = w.grid();
    let mut sorted = radii.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted
        .into_iter()
        .map(|r| {
            let sup = (0..g.len())
                .filter(|&i| g.radius(i) >= r)
                .map(|i| w.get(i))
                .fold(0.0, f64::max);
            (r, sup)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelsetEstimate {
    pub exponent: f64,
    /// `(t, ratio)` for every threshold with a nonempty superlevel set.
    pub ratios: Vec<(f64, f64)>,
    /// Largest ratio, the empirical constant.
    pub constant: f64,
}

/// Empirical constant in `‖(u - t)⁺‖_∞ ≤ C ‖f‖_p |{u > t}|^{2/d - 1/p}`
/// over 20 thresholds `t ∈ [0, max u)`.
pub fn levelset_estimate_check(u: &ScalarField, f: &ScalarField, p: f64) -> Result<LevelsetEstimate> {
    u.grid().ensure_same(f.grid())?;
    let d = u.grid().dim() as f64;
    if !(p > d / 2.0) {
        return Err(Error::Precondition(format!("exponent p = {p} must exceed d/2")));
    }
    let exponent = 2.0 / d - if p.is_infinite() { 0.0 } else { 1.0 / p };
    let fnorm = f.lp_norm(p);
    let umax = u.max();
    let mut ratios = Vec::new();
    if umax > 0.0 && fnorm > 0.0 {
        for i in 0..20 {
            let t = umax * i as f64 / 20.0;
            let measure = u.superlevel_measure(t);
            if measure > 0.0 {
                ratios.push((t, (umax - t) / (fnorm * measure.powf(exponent))));
            }
        }
    }
    let constant = ratios.iter().map(|r| r.1).fold(0.0, f64::max);
    Ok(LevelsetEstimate {
        exponent,
        ratios,
        constant,
    })
}

/// `(‖w‖_∞, ‖w‖_1^{2/(d+2)})`.
pub fn linf_torsion_bound_check(w: &ScalarField) -> (f64, f64) {
    let d = w.grid().dim() as f64;
    (w.linf_norm(), w.lp_norm(1.0).powf(2.0 / (d + 2.0)))
}

/// Smallest radius `R` with `R_μ(f) ≤ w_μ` (to `1e-8`) at every node outside
/// `B_R`, or `None` when the comparison fails in the outer shell of the box.
///
/// `f` must not exceed 1 in absolute value outside the ball of half the box
/// width.
pub fn comparison_at_infinity(
    pot: &GeneralizedPotential,
    f: &ScalarField,
    tol: f64,
) -> Result<Option<f64>> {
    let g = *pot.grid();
    let half = 0.5 * g.half_width();
    let tail = (0..g.len())
        .filter(|&i| g.radius(i) >= half)
        .map(|i| f.get(i).abs())
        .fold(0.0, f64::max);
    if tail > 1.0 {
        return Err(Error::Precondition(format!(
            "source does not decay: sup |f| = {tail} outside radius {half}"
        )));
    }
    let op = Operator::assemble(pot)?;
    let u = op.solve(f, tol)?;
    let w = torsion_with(&op, tol)?.w;
    let mut radius: f64 = 0.0;
    for node in 0..g.len() {
        if u.get(node) > w.get(node) + 1e-8 {
            if g.in_outer_shell(node) {
                return Ok(None);
            }
            radius = radius.max(g.radius(node));
        }
    }
    Ok(Some(radius))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;
    use crate::grid::shapes::Shape;

    #[test]
    fn single_node() {
        let g = build_grid(2, 1.0, 5).unwrap();
        let omega: Vec<bool> = (0..g.len()).map(|i| i == 12).collect();
        let v = 3.0;
        let pot = GeneralizedPotential::constant(g, v).unwrap().join_mask(&omega).unwrap();
        let rep = torsion_function(&pot, 1e-12).unwrap();
        let h2 = g.h().powi(2);
        assert!((rep.w.get(12) - h2 / (4.0 + h2 * v)).abs() < 1e-14);
        assert_eq!(rep.energy, -rep.torsion);
    }

    #[test]
    fn source_examples() {
        let g = build_grid(1, 1.0, 255).unwrap();
        let pot = GeneralizedPotential::free(g);
        let k = std::f64::consts::FRAC_PI_2;
        let s = ScalarField::from_fn(g, |[x, _]| (k * (x + 1.0)).sin());
        let u = source_solution(&pot, &s.scale(k * k), 1e-12).unwrap();
        assert!(u.sub(&s).unwrap().linf_norm() < 1e-4);
        assert_eq!(dirichlet_energy(&pot, &ScalarField::zeros(g), 1e-10).unwrap(), 0.0);
        let e1 = dirichlet_energy(&pot, &s, 1e-12).unwrap();
        let e3 = dirichlet_energy(&pot, &s.scale(3.0), 1e-12).unwrap();
        assert!((e3 - 9.0 * e1).abs() < 1e-10 * e1.abs());
    }

    #[test]
    fn harmonic_replacement() {
        let g = build_grid(2, 1.0, 31).unwrap();
        let pot = GeneralizedPotential::free(g);
        let ball = crate::grid::shapes::ball_nodes(&g, [0.0, 0.0], 0.5);
        let c = ScalarField::constant(g, 2.0);
        // Constants are not harmonic up to the box edge, but inside the ball
        // only the surrounding ring matters.
        let hc = harmonic_replace(&pot, &c, &ball, 1e-12).unwrap();
        for (node, inside) in ball.iter().enumerate() {
            if *inside {
                assert!((hc.get(node) - 2.0).abs() < 1e-9);
            }
        }
        // A field harmonic in the ball is reproduced.
        let f = ScalarField::from_fn(g, |[x, y]| if x.hypot(y) > 0.7 { 1.0 } else { 0.0 });
        let u = source_solution(&pot, &f, 1e-13).unwrap();
        let hu = harmonic_replace(&pot, &u, &ball, 1e-13).unwrap();
        assert!(hu.sub(&u).unwrap().linf_norm() < 1e-9 * u.linf_norm());
    }

    #[test]
    fn comparison_examples() {
        let g = build_grid(2, 3.0, 47).unwrap();
        let pot = Shape::Disk { radius: 2.0, center: [0.0; 2] }.to_potential(&g).unwrap();
        assert_eq!(
            comparison_at_infinity(&pot, &ScalarField::constant(g, 1.0), 1e-12).unwrap(),
            Some(0.0)
        );
        let bump = |c: f64| ScalarField::from_fn(g, move |[x, y]| if x.hypot(y) < 0.5 { c } else { 0.0 });
        let r = comparison_at_infinity(&pot, &bump(2.0), 1e-12).unwrap().unwrap();
        assert!(r < 2.0);
        // A taller bump beats the torsion function near the centre only.
        let r = comparison_at_infinity(&pot, &bump(8.0), 1e-12).unwrap().unwrap();
        assert!(r > 0.0 && r < 2.0);
        assert!(comparison_at_infinity(&pot, &ScalarField::constant(g, 2.0), 1e-12).is_err());
    }

    #[test]
    fn decay_profile_of_disk() {
        let g = build_grid(2, 2.0, 63).unwrap();
        let pot = Shape::Disk { radius: 1.0, center: [0.0; 2] }.to_potential(&g).unwrap();
        let w = torsion_function(&pot, 1e-10).unwrap().w;
        let prof = decay_profile(&w, &[1.0, 1.5, 0.0, 0.5]);
        assert!(prof.windows(2).all(|p| p[1].1 <= p[0].1));
        assert_eq!(prof[2].1, 0.0);
        assert_eq!(prof[3].1, 0.0);
    }

    #[test]
    fn levelset_constant_of_zero_field() {
        let g = build_grid(1, 1.0, 15).unwrap();
        let z = ScalarField::zeros(g);
        let est = levelset_estimate_check(&z, &ScalarField::constant(g, 1.0), f64::INFINITY).unwrap();
        assert_eq!(est.constant, 0.0);
        assert!(levelset_estimate_check(&z, &z, 0.4).is_err());
    }
}
