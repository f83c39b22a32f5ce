use serde::{Deserialize, Serialize};

use super::GridSpec;
use crate::error::{Error, Result};

/// Real values on the nodes of a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarField {
    grid: GridSpec,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            values: vec![0.0; grid.len()],
            grid,
        }
    }

    pub fn constant(grid: GridSpec, c: f64) -> Self {
        Self {
            values: vec![c; grid.len()],
            grid,
        }
    }

    pub fn from_values(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Precondition(format!("non-finite value at node {bad}")));
        }
        Ok(Self { grid, values })
    }

    /// Samples `f` at every node coordinate (`y = 0` in one dimension).
    pub fn from_fn(grid: GridSpec, f: impl Fn([f64; 2]) -> f64) -> Self {
        let values = (0..grid.len()).map(|node| f(grid.coords(node))).collect();
        Self { grid, values }
    }

    pub(crate) fn from_raw(grid: GridSpec, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, node: usize) -> f64 {
        self.values[node]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_raw(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(Self::from_raw(self.grid, values))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    /// Midpoint quadrature over interior nodes: `h^d Σ u_i`.
    pub fn integrate(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume()
    }

    /// `∫ u v dx` under the same quadrature.
    pub fn inner(&self, other: &Self) -> Result<f64> {
        self.grid.ensure_same(&other.grid)?;
        let s: f64 = self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum();
        Ok(s * self.grid.cell_volume())
    }

    pub fn lp_norm(&self, p: f64) -> f64 {
        if p.is_infinite() {
            return self.linf_norm();
        }
        let s: f64 = self.values.iter().map(|v| v.abs().powf(p)).sum();
        (s * self.grid.cell_volume()).powf(1.0 / p)
    }

    pub fn l2_norm(&self) -> f64 {
        self.lp_norm(2.0)
    }

    pub fn linf_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.values.iter().enumerate() {
            if v > self.values[best] {
                best = i;
            }
        }
        best
    }

    /// `|{u > t}|`, the measure of the strict superlevel set.
    pub fn superlevel_measure(&self, t: f64) -> f64 {
        self.values.iter().filter(|&&v| v > t).count() as f64 * self.grid.cell_volume()
    }

    /// `Σ_edges ((u_a - u_b)/h)^2 h^d` over forward edges; edges leaving the
    /// box reach the implicit zero.
    pub fn gradient_energy(&self) -> f64 {
        let g = &self.grid;
        let mut s = 0.0;
        for node in 0..g.len() {
            let u = self.values[node];
            let [i, j] = g.multi_index(node);
            // The backward edge off the low side of the box.
            if i == 0 {
                s += u * u;
            }
            if g.dim() == 2 && j == 0 {
                s += u * u;
            }
            for nb in &g.forward_neighbors(node)[..g.dim()] {
                let diff = u - nb.map_or(0.0, |b| self.values[b]);
                s += diff * diff;
            }
        }
        let h = g.h();
        s * g.cell_volume() / (h * h)
    }

    /// Translation by a lattice vector; nodes shifted in from outside are zero.
    pub fn shifted(&self, shift: [isize; 2]) -> Self {
        let g = self.grid;
        let n = g.n() as isize;
        let mut out = vec![0.0; g.len()];
        for node in 0..g.len() {
            let [i, j] = g.multi_index(node);
            let (si, sj) = (i as isize + shift[0], j as isize + if g.dim() == 2 { shift[1] } else { 0 });
            if (0..n).contains(&si) && (0..n).contains(&sj) {
                out[g.flat_index([si as usize, sj as usize])] = self.values[node];
            }
        }
        Self::from_raw(g, out)
    }

    /// Centroid of `|u|` as a weight.
    pub fn centroid(&self) -> Option<[f64; 2]> {
        let mut m = 0.0;
        let mut c = [0.0; 2];
        for (node, v) in self.values.iter().enumerate() {
            let w = v.abs();
            let x = self.grid.coords(node);
            m += w;
            c[0] += w * x[0];
            c[1] += w * x[1];
        }
        (m > 0.0).then(|| [c[0] / m, c[1] / m])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;

    fn parabola(n: usize) -> ScalarField {
        ScalarField::from_fn(build_grid(1, 1.0, n).unwrap(), |[x, _]| 0.5 * (1.0 - x * x))
    }

    #[test]
    fn quadrature_examples() {
        let g = build_grid(1, 1.0, 3).unwrap();
        assert_eq!(ScalarField::constant(g, 1.0).integrate(), 1.5);
        assert_eq!(ScalarField::zeros(g).integrate(), 0.0);
        assert!((parabola(255).integrate() - 2.0 / 3.0).abs() < 1e-4);
    }

    #[test]
    fn norms_and_levels() {
        let w = parabola(255);
        let h = w.grid().h();
        assert!((w.superlevel_measure(0.375) - 1.0).abs() <= 2.0 * h);
        assert!((w.linf_norm() - 0.5).abs() < h * h);
        assert_eq!(ScalarField::zeros(*w.grid()).lp_norm(2.0), 0.0);
        let c = ScalarField::constant(*w.grid(), 2.0);
        assert!((c.lp_norm(1.0) - 2.0 * 2.0 * 255.0 / 256.0).abs() < 1e-12);
        assert_eq!(c.lp_norm(f64::INFINITY), 2.0);
    }

    #[test]
    fn rayleigh_of_first_sine() {
        let g = build_grid(1, 1.0, 255).unwrap();
        let u = ScalarField::from_fn(g, |[x, _]| (std::f64::consts::FRAC_PI_2 * (x + 1.0)).sin());
        let q = u.gradient_energy() / u.l2_norm().powi(2);
        let target = std::f64::consts::PI.powi(2) / 4.0;
        assert!((q / target - 1.0).abs() < 0.01);
        assert_eq!(ScalarField::zeros(g).gradient_energy(), 0.0);
    }

    #[test]
    fn gradient_energy_counts_boundary_edges() {
        // A single unit spike has 2d edges of length-one jumps.
        let g = build_grid(2, 1.0, 3).unwrap();
        let mut u = ScalarField::zeros(g);
        u.values_mut()[4] = 1.0;
        let h = g.h();
        assert!((u.gradient_energy() - 4.0 * h * h / (h * h)).abs() < 1e-14);
        let mut corner = ScalarField::zeros(g);
        corner.values_mut()[0] = 1.0;
        assert!((corner.gradient_energy() - 4.0).abs() < 1e-14);
    }

    #[test]
    fn mismatched_grids_do_not_combine() {
        let a = ScalarField::zeros(build_grid(1, 1.0, 5).unwrap());
        let b = ScalarField::zeros(build_grid(1, 2.0, 5).unwrap());
        assert!(matches!(a.add(&b), Err(Error::GridMismatch)));
        assert!(ScalarField::from_values(*a.grid(), vec![f64::NAN; 5]).is_err());
    }
}
