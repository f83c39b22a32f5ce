//! Smallest eigenpairs of `-Δ_h + μ`, eigenvalue scaling, eigenfunction
//! bounds and first-order eigenvalue sensitivities.

mod lobpcg;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GeneralizedPotential, Operator, ScalarField};
use crate::torsion;

pub const DEFAULT_EIG_TOL: f64 = 1e-8;

/// Relative gap under which neighbouring eigenvalues count as one cluster.
pub const CLUSTER_TOL: f64 = 1e-6;

/// `e^{1/(8π)}`, the constant of the sup-norm bound on eigenfunctions.
pub fn linf_constant() -> f64 {
    (1.0 / (8.0 * std::f64::consts::PI)).exp()
}

/// Below this many degrees of freedom the spectrum is computed densely.
const DENSE_LIMIT: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    /// `λ_1 ≤ … ≤ λ_k`.
    pub eigenvalues: Vec<f64>,
    /// L²-orthonormal eigenfunctions, zero on masked nodes.
    pub eigenfunctions: Vec<ScalarField>,
    /// `‖A u_j - λ_j u_j‖_{L²}`.
    pub residuals: Vec<f64>,
    pub iterations: usize,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// `λ_j` with `j` counted from 1.
    pub fn lambda(&self, j: usize) -> f64 {
        self.eigenvalues[j - 1]
    }

    /// Resolvent eigenvalues `Λ_j = 1/λ_j`.
    pub fn resolvent_eigenvalues(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|l| 1.0 / l).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigsOptions {
    /// Residual tolerance relative to `λ_j`.
    pub tol: f64,
    pub max_iters: usize,
    pub seed: u64,
    /// Extra block vectors beyond the requested `k`.
    pub guard: usize,
}

impl Default for EigsOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_EIG_TOL,
            max_iters: 5000,
            seed: 0x5eed,
            guard: 3,
        }
    }
}

/// First `k` eigenpairs of `assemble(pot)`.
pub fn eigs(pot: &GeneralizedPotential, k: usize, tol: f64) -> Result<Spectrum> {
    let opts = EigsOptions {
        tol,
        ..EigsOptions::default()
    };
    eigs_with(pot, k, &opts, None)
}

/// As [`eigs`], optionally warm-started from previously computed
/// eigenfunctions on the same grid.
pub fn eigs_with(
    pot: &GeneralizedPotential,
    k: usize,
    opts: &EigsOptions,
    warm: Option<&[ScalarField]>,
) -> Result<Spectrum> {
    let op = Operator::assemble(pot)?;
    eigs_op(&op, k, opts, warm)
}

/// Dense reference solver for small grids.
pub fn eigs_dense(pot: &GeneralizedPotential, k: usize) -> Result<Spectrum> {
    let op = Operator::assemble(pot)?;
    check_k(&op, k)?;
    Ok(to_spectrum(&op, lobpcg::dense(&op, k)))
}

fn check_k(op: &Operator, k: usize) -> Result<()> {
    if k == 0 || k > op.dof_count() {
        return Err(Error::Precondition(format!(
            "k = {k} must lie in 1..={}",
            op.dof_count()
        )));
    }
    Ok(())
}

pub(crate) fn eigs_op(
    op: &Operator,
    k: usize,
    opts: &EigsOptions,
    warm: Option<&[ScalarField]>,
) -> Result<Spectrum> {
    check_k(op, k)?;
    if !(opts.tol > 0.0) {
        return Err(Error::Precondition(format!("tolerance {} must be positive", opts.tol)));
    }
    let n = op.dof_count();
    if n <= DENSE_LIMIT || n < 4 * (k + opts.guard) {
        return Ok(to_spectrum(op, lobpcg::dense(op, k)));
    }
    let start = warm.map(|fields| {
        let mut m = DMatrix::zeros(n, fields.len());
        for (j, f) in fields.iter().enumerate() {
            m.set_column(j, &nalgebra::DVector::from_vec(op.restrict(f)));
        }
        m
    });
    let params = lobpcg::Params {
        k,
        guard: opts.guard,
        tol: opts.tol,
        max_iters: opts.max_iters,
        seed: opts.seed,
        start: start.as_ref(),
    };
    let sol = lobpcg::solve(op, &params)?;
    log::debug!("eigs: k = {k}, {n} dofs, {} iterations", sol.iterations);
    Ok(to_spectrum(op, sol))
}

fn to_spectrum(op: &Operator, sol: lobpcg::Solution) -> Spectrum {
    let scale = 1.0 / op.grid().cell_volume().sqrt();
    // Rayleigh quotients in edge form are accurate to roundoff in λ itself;
    // Ritz values only to roundoff in ‖A‖.
    let mut pairs: Vec<(f64, ScalarField, f64)> = (0..sol.vectors.ncols())
        .map(|j| {
            let col: Vec<f64> = sol.vectors.column(j).iter().copied().collect();
            let value = op.energy(&col) / col.iter().map(|v| v * v).sum::<f64>();
            let x: Vec<f64> = col.iter().map(|v| v * scale).collect();
            (value, op.extend(&x), sol.residuals[j])
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut spec = Spectrum {
        eigenvalues: Vec::with_capacity(pairs.len()),
        eigenfunctions: Vec::with_capacity(pairs.len()),
        residuals: Vec::with_capacity(pairs.len()),
        iterations: sol.iterations,
    };
    for (value, u, r) in pairs {
        spec.eigenvalues.push(value);
        spec.eigenfunctions.push(u);
        spec.residuals.push(r);
    }
    spec
}

/// `Q_μ(u) / ‖u‖²`.
pub fn rayleigh(pot: &GeneralizedPotential, u: &ScalarField) -> Result<f64> {
    let norm2 = u.l2_norm().powi(2);
    if norm2 == 0.0 {
        return Err(Error::Precondition("Rayleigh quotient of the zero field".into()));
    }
    Ok(pot.quadratic_form(u)? / norm2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinfBound {
    pub j: usize,
    /// `‖u_j‖_∞`.
    pub lhs: f64,
    /// `e^{1/(8π)} λ_j^{d/4}`.
    pub rhs: f64,
}

pub fn eigen_linf_check(spec: &Spectrum, d: usize) -> Vec<LinfBound> {
    let c = linf_constant();
    spec.eigenvalues
        .iter()
        .zip(&spec.eigenfunctions)
        .enumerate()
        .map(|(i, (l, u))| LinfBound {
            j: i + 1,
            lhs: u.linf_norm(),
            rhs: c * l.powf(d as f64 / 4.0),
        })
        .collect()
}

/// `max_j |t² λ_j(V_t) - λ_j(V)| / λ_j(V)` over `j ≤ k`.
pub fn eigen_scaling_check(pot: &GeneralizedPotential, k: usize, t: f64) -> Result<f64> {
    let scaled = pot.rescale(t)?;
    let tol = 1e-10;
    let a = eigs(pot, k, tol)?;
    let b = eigs(&scaled, k, tol)?;
    Ok(a.eigenvalues
        .iter()
        .zip(&b.eigenvalues)
        .map(|(x, y)| (y * t * t - x).abs() / x)
        .fold(0.0, f64::max))
}

/// Indices (0-based) of the eigenvalues clustered with `λ_{j+1}`.
pub fn cluster_of(spec: &Spectrum, j: usize, cluster_tol: f64) -> std::ops::Range<usize> {
    let ev = &spec.eigenvalues;
    let close = |a: usize, b: usize| (ev[a] - ev[b]).abs() <= cluster_tol * ev[b].abs();
    let mut lo = j;
    while lo > 0 && close(lo - 1, lo) {
        lo -= 1;
    }
    let mut hi = j + 1;
    while hi < ev.len() && close(hi, hi - 1) {
        hi += 1;
    }
    lo..hi
}

/// `dλ_j/dV = u_j²`, averaged over the cluster of `λ_j` (`j` from 1).
pub fn eigen_gradient(spec: &Spectrum, j: usize) -> ScalarField {
    eigen_gradient_with(spec, j, CLUSTER_TOL)
}

pub fn eigen_gradient_with(spec: &Spectrum, j: usize, cluster_tol: f64) -> ScalarField {
    let range = cluster_of(spec, j - 1, cluster_tol);
    let count = range.len() as f64;
    let grid = *spec.eigenfunctions[0].grid();
    let mut g = vec![0.0; grid.len()];
    for u in &spec.eigenfunctions[range] {
        for (gi, ui) in g.iter_mut().zip(u.values()) {
            *gi += ui * ui / count;
        }
    }
    ScalarField::from_values(grid, g).expect("finite eigenfunctions")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapCheck {
    /// `Λ_j(μ) - Λ_j(ν)` for `j ≤ k`.
    pub gaps: Vec<f64>,
    pub lhs_max: f64,
    /// `k² e^{1/(4π)} λ_k(μ)^{(d+4)/2} ∫ (R_μ(w_μ) - R_ν(w_μ)) w_μ`.
    pub rhs: f64,
    pub holds: bool,
}

/// Resolvent-eigenvalue gap bound for an ordered pair `μ ≺ ν`.
pub fn resolvent_gap_check(
    pot: &GeneralizedPotential,
    pot_nu: &GeneralizedPotential,
    k: usize,
    tol: f64,
) -> Result<GapCheck> {
    if !pot.is_dominated_by(pot_nu) {
        return Err(Error::Precondition("the pair is not ordered: μ ≺ ν fails".into()));
    }
    let op_mu = Operator::assemble(pot)?;
    let op_nu = Operator::assemble(pot_nu)?;
    let opts = EigsOptions::default();
    let s_mu = eigs_op(&op_mu, k, &opts, None)?;
    let s_nu = eigs_op(&op_nu, k, &opts, None)?;
    let gaps: Vec<f64> = s_mu
        .resolvent_eigenvalues()
        .iter()
        .zip(s_nu.resolvent_eigenvalues())
        .map(|(a, b)| a - b)
        .collect();
    let lhs_max = gaps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let cg = 1e-12;
    let w = torsion::torsion_with(&op_mu, cg)?.w;
    let r_mu = op_mu.solve(&w, cg)?;
    let r_nu = op_nu.solve(&w, cg)?;
    let integral = r_mu.sub(&r_nu)?.inner(&w)?;
    let d = pot.grid().dim() as f64;
    let kf = k as f64;
    let rhs = kf * kf
        * (1.0 / (4.0 * std::f64::consts::PI)).exp()
        * s_mu.lambda(k).powf((d + 4.0) / 2.0)
        * integral;
    Ok(GapCheck {
        holds: lhs_max <= rhs + tol,
        gaps,
        lhs_max,
        rhs,
    })
}

/// Largest node-wise ratio `|u_j| / (e^{1/(8π)} λ_j^{(d+4)/4} w_μ)` over the
/// computed eigenpairs; the weak-maximum domination asserts it is at most 1.
pub fn domination_ratio(spec: &Spectrum, w: &ScalarField) -> Result<f64> {
    let d = w.grid().dim() as f64;
    let c = linf_constant();
    let mut worst: f64 = 0.0;
    for (l, u) in spec.eigenvalues.iter().zip(&spec.eigenfunctions) {
        u.grid().ensure_same(w.grid())?;
        let scale = c * l.powf((d + 4.0) / 4.0);
        for (ui, wi) in u.values().iter().zip(w.values()) {
            if ui.abs() > 0.0 {
                worst = worst.max(if *wi > 0.0 { ui.abs() / (scale * wi) } else { f64::INFINITY });
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;
    use crate::grid::shapes::Shape;
    use std::f64::consts::PI;

    #[test]
    fn interval_oracles() {
        let g = build_grid(1, 1.0, 255).unwrap();
        let s = eigs(&GeneralizedPotential::free(g), 2, 1e-8).unwrap();
        assert!((s.lambda(1) / (PI * PI / 4.0) - 1.0).abs() < 1e-3);
        assert!((s.lambda(2) / (PI * PI) - 1.0).abs() < 1e-3);
    }

    #[test]
    fn iterative_matches_dense() {
        let g = build_grid(2, 1.0, 31).unwrap();
        let pot = GeneralizedPotential::from_fn(g, |[x, y]| 3.0 * (x + 0.2).powi(2) + y.abs()).unwrap();
        let it = eigs(&pot, 5, 1e-10).unwrap();
        let de = eigs_dense(&pot, 5).unwrap();
        for (a, b) in it.eigenvalues.iter().zip(&de.eigenvalues) {
            assert!((a - b).abs() < 1e-8 * b);
        }
        for (i, u) in it.eigenfunctions.iter().enumerate() {
            for (j, v) in it.eigenfunctions.iter().enumerate() {
                let ip = u.inner(v).unwrap();
                assert!((ip - if i == j { 1.0 } else { 0.0 }).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn rayleigh_examples() {
        let g = build_grid(1, 1.0, 127).unwrap();
        let pot = Shape::Oscillator { strength: 4.0 }.to_potential(&g).unwrap();
        let s = eigs(&pot, 2, 1e-10).unwrap();
        let r1 = rayleigh(&pot, &s.eigenfunctions[0]).unwrap();
        assert!((r1 - s.lambda(1)).abs() < 1e-8 * s.lambda(1));
        let sum = s.eigenfunctions[0].add(&s.eigenfunctions[1]).unwrap();
        let r12 = rayleigh(&pot, &sum).unwrap();
        assert!((r12 - 0.5 * (s.lambda(1) + s.lambda(2))).abs() < 1e-8 * s.lambda(2));
        assert!(rayleigh(&pot, &ScalarField::zeros(g)).is_err());
    }

    #[test]
    fn gradient_integrates_to_one() {
        let g = build_grid(2, 1.0, 21).unwrap();
        // The square has a double second eigenvalue.
        let s = eigs(&GeneralizedPotential::free(g), 3, 1e-10).unwrap();
        assert_eq!(cluster_of(&s, 1, CLUSTER_TOL), 1..3);
        for j in 1..=3 {
            assert!((eigen_gradient(&s, j).integrate() - 1.0).abs() < 1e-8);
        }
        let g2 = eigen_gradient(&s, 2);
        let g3 = eigen_gradient(&s, 3);
        assert!(g2.sub(&g3).unwrap().linf_norm() < 1e-12);
    }

    #[test]
    fn gap_check_of_identical_pair() {
        let g = build_grid(1, 1.0, 63).unwrap();
        let pot = GeneralizedPotential::constant(g, 0.5).unwrap();
        let c = resolvent_gap_check(&pot, &pot, 2, 1e-10).unwrap();
        assert!(c.lhs_max.abs() < 1e-10 && c.rhs.abs() < 1e-10 && c.holds);
        let bigger = GeneralizedPotential::constant(g, 1.0).unwrap();
        assert!(resolvent_gap_check(&bigger, &pot, 2, 1e-10).is_err());
    }
}
