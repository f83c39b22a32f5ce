//! Block preconditioned conjugate gradient eigensolver for the smallest
//! eigenpairs of an SPD [`Operator`].
//!
//! Vectors live in the DOF space with the Euclidean inner product. Because the
//! quadrature weight is uniform, an orthonormal basis here is L²-orthonormal
//! after division by `sqrt(h^d)`, and the residual norms coincide.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::Operator;

pub(crate) struct Solution {
    pub vectors: DMatrix<f64>,
    pub residuals: Vec<f64>,
    pub iterations: usize,
}

pub(crate) struct Params<'a> {
    pub k: usize,
    pub guard: usize,
    pub tol: f64,
    pub max_iters: usize,
    pub seed: u64,
    pub start: Option<&'a DMatrix<f64>>,
}

fn apply_block(op: &Operator, x: &DMatrix<f64>) -> DMatrix<f64> {
    let mut y = DMatrix::zeros(x.nrows(), x.ncols());
    for j in 0..x.ncols() {
        op.apply_into(x.column(j).as_slice(), y.column_mut(j).as_mut_slice());
    }
    y
}

/// Removes the components along the orthonormal columns of `basis`, twice.
fn project_out(y: &mut DMatrix<f64>, basis: &DMatrix<f64>) {
    for _ in 0..2 {
        let c = basis.tr_mul(y);
        *y -= basis * c;
    }
}

/// Orthonormalizes the columns of `y` through the eigen-decomposition of its
/// Gram matrix, dropping directions with relative weight below `drop`.
fn svqb(y: &DMatrix<f64>, drop: f64) -> DMatrix<f64> {
    if y.ncols() == 0 {
        return y.clone();
    }
    let g = y.tr_mul(y);
    let scale: Vec<f64> = (0..g.nrows()).map(|i| g[(i, i)].sqrt()).collect();
    let mut gs = g.clone();
    for i in 0..gs.nrows() {
        for j in 0..gs.ncols() {
            let s = scale[i] * scale[j];
            gs[(i, j)] = if s > 0.0 { g[(i, j)] / s } else { 0.0 };
        }
    }
    let eig = SymmetricEigen::new(gs);
    let top = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..eig.eigenvalues.len())
        .filter(|&i| eig.eigenvalues[i] > drop * top.max(1e-300))
        .collect();
    let mut t = DMatrix::zeros(y.ncols(), keep.len());
    for (c, &i) in keep.iter().enumerate() {
        let inv = 1.0 / eig.eigenvalues[i].sqrt();
        for r in 0..y.ncols() {
            if scale[r] > 0.0 {
                t[(r, c)] = eig.eigenvectors[(r, i)] * inv / scale[r];
            }
        }
    }
    y * t
}

fn orthonormalize_against(y: &DMatrix<f64>, basis: &DMatrix<f64>) -> DMatrix<f64> {
    let mut y = y.clone();
    project_out(&mut y, basis);
    let mut q = svqb(&y, 1e-12);
    project_out(&mut q, basis);
    svqb(&q, 1e-8)
}

/// Rayleigh-Ritz on the orthonormal basis `q`: returns ascending Ritz values
/// and the coefficient matrix.
fn rayleigh_ritz(q: &DMatrix<f64>, aq: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let h = q.tr_mul(aq);
    let h = (&h + h.transpose()) * 0.5;
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut c = DMatrix::zeros(q.ncols(), order.len());
    for (col, &i) in order.iter().enumerate() {
        c.set_column(col, &eig.eigenvectors.column(i));
    }
    (values, c)
}

fn hstack(blocks: &[&DMatrix<f64>]) -> DMatrix<f64> {
    let rows = blocks[0].nrows();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut m = DMatrix::zeros(rows, cols);
    let mut at = 0;
    for b in blocks {
        m.columns_mut(at, b.ncols()).copy_from(*b);
        at += b.ncols();
    }
    m
}

fn select_columns(m: &DMatrix<f64>, cols: &[usize]) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(m.nrows(), cols.len());
    for (c, &j) in cols.iter().enumerate() {
        out.set_column(c, &m.column(j));
    }
    out
}

/// Fixes the sign of every column: positive sum, or a positive entry of
/// largest magnitude when the sum is negligible.
pub(crate) fn normalize_signs(v: &mut DMatrix<f64>) {
    for j in 0..v.ncols() {
        let col = v.column(j);
        let sum: f64 = col.iter().sum();
        let l1: f64 = col.iter().map(|x| x.abs()).sum();
        let flip = if sum.abs() > 1e-8 * l1 {
            sum < 0.0
        } else {
            let imax = col.iamax();
            col[imax] < 0.0
        };
        if flip {
            v.column_mut(j).neg_mut();
        }
    }
}

pub(crate) fn dense(op: &Operator, k: usize) -> Solution {
    let a = op.to_dense();
    let n = a.nrows();
    let eig = SymmetricEigen::new(a.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y]));
    let order = &order[..k];
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = select_columns(&eig.eigenvectors, order);
    normalize_signs(&mut vectors);
    let residuals = (0..k)
        .map(|j| {
            let x = vectors.column(j).into_owned();
            (&a * &x - &x * values[j]).norm()
        })
        .collect();
    Solution {
        vectors,
        residuals,
        iterations: 0,
    }
}

pub(crate) fn solve(op: &Operator, p: &Params) -> Result<Solution> {
    let n = op.dof_count();
    let b = (p.k + p.guard).min(n);
    let diag = op.diag();
    let anorm = diag.iter().fold(0.0f64, |m, d| m.max(*d)) * 2.0;
    let floor = 64.0 * f64::EPSILON * anorm;

    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut x0 = DMatrix::from_fn(n, b, |_, _| rng.random::<f64>() - 0.5);
    if let Some(start) = p.start {
        for j in 0..start.ncols().min(b) {
            x0.set_column(j, &start.column(j));
        }
    }
    let x0 = svqb(&x0, 1e-12);
    let x0 = if x0.ncols() < b {
        let mut extra = DMatrix::from_fn(n, b - x0.ncols(), |_, _| rng.random::<f64>() - 0.5);
        project_out(&mut extra, &x0);
        hstack(&[&x0, &svqb(&extra, 1e-12)])
    } else {
        x0
    };
    let ax0 = apply_block(op, &x0);
    let (mut lambda, c) = rayleigh_ritz(&x0, &ax0);
    let mut x = &x0 * &c;
    let mut ax = &ax0 * &c;
    let mut p_dir = DMatrix::<f64>::zeros(n, 0);
    let mut residuals = vec![f64::INFINITY; b];

    for iter in 0..p.max_iters {
        let mut r = ax.clone();
        for j in 0..b {
            let mut col = r.column_mut(j);
            col.axpy(-lambda[j], &x.column(j), 1.0);
            residuals[j] = col.norm();
        }
        let thresh = |j: usize| (p.tol * lambda[j].abs()).max(floor);
        if (0..p.k).all(|j| residuals[j] <= thresh(j)) {
            let mut vectors = x.columns(0, p.k).into_owned();
            normalize_signs(&mut vectors);
            return Ok(Solution {
                vectors,
                residuals: residuals[..p.k].to_vec(),
                iterations: iter,
            });
        }
        let active: Vec<usize> = (0..b).filter(|&j| residuals[j] > thresh(j)).collect();
        let mut w = select_columns(&r, &active);
        for j in 0..w.ncols() {
            for (i, v) in w.column_mut(j).iter_mut().enumerate() {
                *v /= diag[i];
            }
        }
        let rest = if p_dir.ncols() > 0 {
            hstack(&[&w, &p_dir])
        } else {
            w
        };
        let rest = orthonormalize_against(&rest, &x);
        let q = hstack(&[&x, &rest]);
        let aq = hstack(&[&ax, &apply_block(op, &rest)]);
        let (vals, c) = rayleigh_ritz(&q, &aq);
        let cb = c.columns(0, b);
        x = &q * cb;
        ax = apply_block(op, &x);
        lambda = vals[..b].to_vec();
        let c_rest = c.view((b, 0), (rest.ncols(), b));
        let p_all = &rest * c_rest;
        let p_active = select_columns(&p_all, &active);
        p_dir = svqb(&p_active, 1e-12);
        if lambda.iter().any(|l| !l.is_finite()) {
            break;
        }
    }
    Err(Error::EigenDiverged {
        iterations: p.max_iters,
        residuals: residuals[..p.k].to_vec(),
    })
}
