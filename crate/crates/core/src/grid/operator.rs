use nalgebra::DMatrix;

use super::{GeneralizedPotential, GridSpec, ScalarField};
use crate::error::{Error, Result};

pub const DEFAULT_CG_TOL: f64 = 1e-10;

const NO_DOF: usize = usize::MAX;

/// `-Δ_h + vfin` restricted to the unmasked nodes of a potential.
///
/// Standard 3-point / 5-point stencil; masked and out-of-box neighbours are
/// eliminated with a zero Dirichlet value. All off-diagonal entries equal
/// `-1/h²`, so only the neighbour structure is stored.
#[derive(Debug, Clone)]
pub struct Operator {
    grid: GridSpec,
    dofs: Vec<usize>,
    node_dof: Vec<usize>,
    diag: Vec<f64>,
    vfin: Vec<f64>,
    nbr_ptr: Vec<usize>,
    nbr: Vec<usize>,
    off: f64,
}

impl Operator {
    pub fn assemble(pot: &GeneralizedPotential) -> Result<Self> {
        let grid = *pot.grid();
        let dofs: Vec<usize> = (0..grid.len()).filter(|&i| !pot.is_masked(i)).collect();
        if dofs.is_empty() {
            return Err(Error::EmptyOperator);
        }
        let mut node_dof = vec![NO_DOF; grid.len()];
        for (k, &node) in dofs.iter().enumerate() {
            node_dof[node] = k;
        }
        let h2 = grid.h().powi(2);
        let centre = 2.0 * grid.dim() as f64 / h2;
        let mut diag = Vec::with_capacity(dofs.len());
        let vfin: Vec<f64> = dofs.iter().map(|&node| pot.vfin()[node]).collect();
        let mut nbr_ptr = Vec::with_capacity(dofs.len() + 1);
        let mut nbr = Vec::with_capacity(dofs.len() * 2 * grid.dim());
        nbr_ptr.push(0);
        for &node in &dofs {
            diag.push(centre + pot.vfin()[node]);
            nbr.extend(grid.neighbors(node).map(|b| node_dof[b]).filter(|&k| k != NO_DOF));
            nbr_ptr.push(nbr.len());
        }
        Ok(Self {
            grid,
            dofs,
            node_dof,
            diag,
            vfin,
            nbr_ptr,
            nbr,
            off: -1.0 / h2,
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn dof_count(&self) -> usize {
        self.dofs.len()
    }

    /// Node index of every degree of freedom.
    pub fn dofs(&self) -> &[usize] {
        &self.dofs
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn dof_of(&self, node: usize) -> Option<usize> {
        let k = self.node_dof[node];
        (k != NO_DOF).then_some(k)
    }

    /// `xᵀ A x` summed edge by edge, free of the cancellation in `A x`.
    pub fn energy(&self, x: &[f64]) -> f64 {
        let full = 2 * self.grid.dim();
        let mut edges = 0.0;
        let mut pot = 0.0;
        for (a, xa) in x.iter().enumerate() {
            let nb = &self.nbr[self.nbr_ptr[a]..self.nbr_ptr[a + 1]];
            edges += (full - nb.len()) as f64 * xa * xa;
            for &b in nb.iter().filter(|&&b| b > a) {
                edges += (xa - x[b]).powi(2);
            }
            pot += self.vfin[a] * xa * xa;
        }
        -self.off * edges + pot
    }

    pub fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.dofs.len());
        for k in 0..self.dofs.len() {
            let mut s = self.diag[k] * x[k];
            for &b in &self.nbr[self.nbr_ptr[k]..self.nbr_ptr[k + 1]] {
                s += self.off * x[b];
            }
            y[k] = s;
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; x.len()];
        self.apply_into(x, &mut y);
        y
    }

    /// Applies the operator to a full-grid field that vanishes off the DOFs.
    pub fn apply_field(&self, u: &ScalarField) -> Result<ScalarField> {
        self.grid.ensure_same(u.grid())?;
        Ok(self.extend(&self.apply(&self.restrict(u))))
    }

    pub fn restrict(&self, u: &ScalarField) -> Vec<f64> {
        self.dofs.iter().map(|&n| u.get(n)).collect()
    }

    /// Embeds a DOF vector into a full field with zeros elsewhere.
    pub fn extend(&self, x: &[f64]) -> ScalarField {
        let mut values = vec![0.0; self.grid.len()];
        for (&node, &v) in self.dofs.iter().zip(x) {
            values[node] = v;
        }
        ScalarField::from_raw(self.grid, values)
    }

    /// Coupling of each DOF to data prescribed on in-box non-DOF neighbours,
    /// `Σ u_b / h²`: the right-hand side contribution of Dirichlet data `u`.
    pub fn boundary_coupling(&self, u: &ScalarField) -> Vec<f64> {
        self.dofs
            .iter()
            .map(|&node| {
                self.grid
                    .neighbors(node)
                    .filter(|&b| self.node_dof[b] == NO_DOF)
                    .map(|b| -self.off * u.get(b))
                    .sum()
            })
            .collect()
    }

    pub fn default_max_iters(&self) -> usize {
        50 * self.grid.len()
    }

    /// Solves `A x = rhs` for the full-grid right-hand side; non-DOF nodes of
    /// the result are zero.
    pub fn solve(&self, rhs: &ScalarField, tol: f64) -> Result<ScalarField> {
        self.grid.ensure_same(rhs.grid())?;
        let b = self.restrict(rhs);
        let x = self.solve_dofs(&b, tol, None)?;
        Ok(self.extend(&x))
    }

    /// Jacobi-preconditioned conjugate gradients with relative residual `tol`.
    pub fn solve_dofs(&self, b: &[f64], tol: f64, x0: Option<&[f64]>) -> Result<Vec<f64>> {
        if !(tol > 0.0) {
            return Err(Error::Precondition(format!("tolerance {tol} must be positive")));
        }
        let n = self.dofs.len();
        let bnorm = norm(b);
        if bnorm == 0.0 {
            return Ok(vec![0.0; n]);
        }
        let mut x = x0.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
        let mut r = self.apply(&x);
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri = bi - *ri;
        }
        let mut z: Vec<f64> = r.iter().zip(&self.diag).map(|(ri, di)| ri / di).collect();
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        let mut ap = vec![0.0; n];
        let max_iters = self.default_max_iters();
        let mut rel = norm(&r) / bnorm;
        for _ in 0..max_iters {
            if rel <= tol {
                return Ok(x);
            }
            self.apply_into(&p, &mut ap);
            let pap = dot(&p, &ap);
            if pap <= 0.0 {
                break;
            }
            let alpha = rz / pap;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            rel = norm(&r) / bnorm;
            for i in 0..n {
                z[i] = r[i] / self.diag[i];
            }
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        if rel <= tol {
            return Ok(x);
        }
        Err(Error::SolverDiverged {
            iterations: max_iters,
            residual: rel,
        })
    }

    /// Dense copy, for cross-checks on small grids.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dofs.len();
        let mut m = DMatrix::zeros(n, n);
        for k in 0..n {
            m[(k, k)] = self.diag[k];
            for &b in &self.nbr[self.nbr_ptr[k]..self.nbr_ptr[k + 1]] {
                m[(k, b)] = self.off;
            }
        }
        m
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;

    #[test]
    fn three_node_interval() {
        let g = build_grid(1, 1.0, 3).unwrap();
        let op = Operator::assemble(&GeneralizedPotential::free(g)).unwrap();
        let a = op.to_dense();
        assert_eq!(a[(0, 0)], 8.0);
        assert_eq!(a[(0, 1)], -4.0);
        assert_eq!(a[(0, 2)], 0.0);
        let eig = a.symmetric_eigen();
        let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        let expect = (2.0 - 2.0 * (std::f64::consts::PI / 4.0).cos()) / 0.25;
        assert!((min - expect).abs() < 1e-12);
        assert!((expect - 2.3431).abs() < 1e-4);
    }

    #[test]
    fn diagonal_shift_moves_every_eigenvalue() {
        let g = build_grid(2, 1.0, 5).unwrap();
        let c = 3.5;
        let a0 = Operator::assemble(&GeneralizedPotential::free(g)).unwrap().to_dense();
        let a1 = Operator::assemble(&GeneralizedPotential::constant(g, c).unwrap())
            .unwrap()
            .to_dense();
        let mut e0: Vec<f64> = a0.symmetric_eigen().eigenvalues.iter().copied().collect();
        let mut e1: Vec<f64> = a1.symmetric_eigen().eigenvalues.iter().copied().collect();
        e0.sort_by(f64::total_cmp);
        e1.sort_by(f64::total_cmp);
        for (x, y) in e0.iter().zip(&e1) {
            assert!((y - x - c).abs() < 1e-10);
        }
    }

    #[test]
    fn isolated_node() {
        let g = build_grid(2, 1.0, 5).unwrap();
        let omega: Vec<bool> = (0..g.len()).map(|i| i == 12).collect();
        let pot = GeneralizedPotential::constant(g, 0.7).unwrap().join_mask(&omega).unwrap();
        let a = Operator::assemble(&pot).unwrap().to_dense();
        assert_eq!(a.nrows(), 1);
        assert!((a[(0, 0)] - (4.0 / g.h().powi(2) + 0.7)).abs() < 1e-12);
        let none = pot.join_mask(&vec![false; g.len()]).unwrap();
        assert!(matches!(Operator::assemble(&none), Err(Error::EmptyOperator)));
    }

    #[test]
    fn cg_solves() {
        let g = build_grid(1, 1.0, 255).unwrap();
        let op = Operator::assemble(&GeneralizedPotential::free(g)).unwrap();
        let zero = op.solve(&ScalarField::zeros(g), 1e-10).unwrap();
        assert_eq!(zero.linf_norm(), 0.0);
        let w = op.solve(&ScalarField::constant(g, 1.0), 1e-12).unwrap();
        let exact = ScalarField::from_fn(g, |[x, _]| 0.5 * (1.0 - x * x));
        // The 3-point stencil is exact on quadratics.
        assert!(w.sub(&exact).unwrap().linf_norm() < 1e-9);

        let c = 1e6;
        let op = Operator::assemble(&GeneralizedPotential::constant(g, c).unwrap()).unwrap();
        let w = op.solve(&ScalarField::constant(g, 1.0), 1e-12).unwrap();
        assert!((w.get(127) * c - 1.0).abs() < 1e-9);
    }

    #[test]
    fn cg_rejects_bad_tolerance() {
        let g = build_grid(1, 1.0, 5).unwrap();
        let op = Operator::assemble(&GeneralizedPotential::free(g)).unwrap();
        assert!(op.solve(&ScalarField::constant(g, 1.0), 0.0).is_err());
    }
}
