//! Uniform Cartesian grids on the box `[-L, L]^d`, fields and generalized
//! potentials living on them, and the discrete Schrödinger operator.
//!
//! Nodes are the `n^d` interior points `-L + (i + 1) h` with `h = 2L / (n + 1)`;
//! the box boundary carries an implicit homogeneous Dirichlet condition. In two
//! dimensions node `(i, j)` is stored at index `i + n * j`.

mod field;
pub mod io;
mod operator;
mod potential;
pub mod shapes;

pub use field::ScalarField;
pub use operator::{Operator, DEFAULT_CG_TOL};
pub use potential::GeneralizedPotential;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    d: usize,
    #[serde(rename = "L")]
    half_width: f64,
    n: usize,
}

impl GridSpec {
    pub fn new(d: usize, half_width: f64, n: usize) -> Result<Self> {
        if d != 1 && d != 2 {
            return Err(Error::UnsupportedDimension(d));
        }
        if n < 3 {
            return Err(Error::InvalidGrid(format!("n = {n} < 3 interior nodes")));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidGrid(format!("half-width L = {half_width} must be positive")));
        }
        Ok(Self { d, half_width, n })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    /// Interior nodes per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        2.0 * self.half_width / (self.n as f64 + 1.0)
    }

    /// Quadrature weight `h^d` of a single node.
    pub fn cell_volume(&self) -> f64 {
        self.h().powi(self.d as i32)
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Coordinate of interior index `i` along one axis.
    pub fn axis_coord(&self, i: usize) -> f64 {
        -self.half_width + (i as f64 + 1.0) * self.h()
    }

    /// Per-axis indices of a flat node index.
    pub fn multi_index(&self, node: usize) -> [usize; 2] {
        match self.d {
            1 => [node, 0],
            _ => [node % self.n, node / self.n],
        }
    }

    pub fn flat_index(&self, idx: [usize; 2]) -> usize {
        match self.d {
            1 => idx[0],
            _ => idx[0] + self.n * idx[1],
        }
    }

    /// Coordinates of a node; the second entry is zero in one dimension.
    pub fn coords(&self, node: usize) -> [f64; 2] {
        let [i, j] = self.multi_index(node);
        match self.d {
            1 => [self.axis_coord(i), 0.0],
            _ => [self.axis_coord(i), self.axis_coord(j)],
        }
    }

    pub fn radius(&self, node: usize) -> f64 {
        let [x, y] = self.coords(node);
        x.hypot(y)
    }

    /// Neighbours of a node inside the box, at most `2d` of them.
    pub fn neighbors(&self, node: usize) -> impl Iterator<Item = usize> + '_ {
        let [i, j] = self.multi_index(node);
        let n = self.n;
        let d = self.d;
        let candidates: [Option<[usize; 2]>; 4] = [
            (i > 0).then(|| [i - 1, j]),
            (i + 1 < n).then(|| [i + 1, j]),
            (d == 2 && j > 0).then(|| [i, j - 1]),
            (d == 2 && j + 1 < n).then(|| [i, j + 1]),
        ];
        candidates.into_iter().flatten().map(move |ij| self.flat_index(ij))
    }

    /// Forward neighbours: `+x` (and `+y` in 2D), `None` where the edge reaches
    /// the implicit boundary zero.
    pub(crate) fn forward_neighbors(&self, node: usize) -> [Option<usize>; 2] {
        let [i, j] = self.multi_index(node);
        let n = self.n;
        let px = (i + 1 < n).then(|| self.flat_index([i + 1, j]));
        let py = (self.d == 2 && j + 1 < n).then(|| self.flat_index([i, j + 1]));
        [px, py]
    }

    /// True for nodes in the outermost 5% shell of the box.
    pub fn in_outer_shell(&self, node: usize) -> bool {
        let [x, y] = self.coords(node);
        x.abs().max(y.abs()) > 0.95 * self.half_width
    }

    /// Grid dilated by `t` with the same node count, so that node `x` of the
    /// result sits at `t` times node `x` of `self`.
    pub fn dilated(&self, t: f64) -> Result<Self> {
        Self::new(self.d, self.half_width * t, self.n)
    }

    pub(crate) fn ensure_same(&self, other: &GridSpec) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}

pub fn build_grid(d: usize, half_width: f64, n: usize) -> Result<GridSpec> {
    GridSpec::new(d, half_width, n)
}
