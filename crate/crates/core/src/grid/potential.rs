use serde::{Deserialize, Serialize};

use super::{GridSpec, ScalarField};
use crate::error::{Error, Result};

/// The measure `V dx ∨ I_Ω`: a finite nonnegative part `vfin` and a mask of
/// nodes where the measure is `+∞` (the complement of `Ω`).
///
/// Masked nodes carry no degree of freedom; every admissible field vanishes
/// there. The stored `vfin` of a masked node is kept at zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneralizedPotential {
    grid: GridSpec,
    vfin: Vec<f64>,
    mask: Vec<bool>,
}

impl GeneralizedPotential {
    /// The Dirichlet Laplacian of the whole box.
    pub fn free(grid: GridSpec) -> Self {
        Self {
            vfin: vec![0.0; grid.len()],
            mask: vec![false; grid.len()],
            grid,
        }
    }

    pub fn constant(grid: GridSpec, c: f64) -> Result<Self> {
        Self::new(grid, vec![c; grid.len()], vec![false; grid.len()])
    }

    pub fn new(grid: GridSpec, mut vfin: Vec<f64>, mask: Vec<bool>) -> Result<Self> {
        if vfin.len() != grid.len() || mask.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "potential needs {} values and mask entries",
                grid.len()
            )));
        }
        if let Some(bad) = vfin.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Precondition(format!(
                "vfin must be finite and nonnegative (node {bad} = {})",
                vfin[bad]
            )));
        }
        for (v, &m) in vfin.iter_mut().zip(&mask) {
            if m {
                *v = 0.0;
            }
        }
        Ok(Self { grid, vfin, mask })
    }

    pub fn from_field(vfin: &ScalarField) -> Result<Self> {
        Self::new(*vfin.grid(), vfin.values().to_vec(), vec![false; vfin.grid().len()])
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn([f64; 2]) -> f64) -> Result<Self> {
        let vfin = (0..grid.len()).map(|node| f(grid.coords(node))).collect();
        Self::new(grid, vfin, vec![false; grid.len()])
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn vfin(&self) -> &[f64] {
        &self.vfin
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn is_masked(&self, node: usize) -> bool {
        self.mask[node]
    }

    pub fn dof_count(&self) -> usize {
        self.mask.iter().filter(|m| !**m).count()
    }

    pub fn vfin_field(&self) -> ScalarField {
        ScalarField::from_raw(self.grid, self.vfin.clone())
    }

    /// Returns a copy with `vfin` replaced on unmasked nodes.
    pub fn with_vfin(&self, vfin: Vec<f64>) -> Result<Self> {
        Self::new(self.grid, vfin, self.mask.clone())
    }

    /// `μ ∨ ν`: union of masks, pointwise maximum of finite parts.
    pub fn join(&self, other: &Self) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        let mask: Vec<bool> = self.mask.iter().zip(&other.mask).map(|(a, b)| *a || *b).collect();
        let vfin = self.vfin.iter().zip(&other.vfin).map(|(a, b)| a.max(*b)).collect();
        Self::new(self.grid, vfin, mask)
    }

    /// `μ ∨ I_Ω` where `omega[node]` marks `Ω`; nodes outside `Ω` become masked.
    pub fn join_mask(&self, omega: &[bool]) -> Result<Self> {
        if omega.len() != self.grid.len() {
            return Err(Error::GridMismatch);
        }
        let mask = self.mask.iter().zip(omega).map(|(m, inside)| *m || !*inside).collect();
        Self::new(self.grid, self.vfin.clone(), mask)
    }

    /// `V⁺ ∧ V⁻`: intersection of masks and harmonic sum `1/V = 1/V⁺ + 1/V⁻`
    /// of the finite parts.
    pub fn wedge(&self, other: &Self) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        let mut vfin = Vec::with_capacity(self.grid.len());
        let mut mask = Vec::with_capacity(self.grid.len());
        for node in 0..self.grid.len() {
            let (m1, m2) = (self.mask[node], other.mask[node]);
            let (v1, v2) = (self.vfin[node], other.vfin[node]);
            mask.push(m1 && m2);
            vfin.push(match (m1, m2) {
                (true, true) => 0.0,
                (true, false) => v2,
                (false, true) => v1,
                (false, false) if v1 == 0.0 || v2 == 0.0 => 0.0,
                (false, false) => 1.0 / (1.0 / v1 + 1.0 / v2),
            });
        }
        Self::new(self.grid, vfin, mask)
    }

    /// `V_t(x) = t^{-2} V(x/t)` on the grid dilated by `t`.
    ///
    /// `t` must be an integer or the reciprocal of one so that the node
    /// correspondence `x ↦ x/t` is exact.
    pub fn rescale(&self, t: f64) -> Result<Self> {
        check_scale(t)?;
        self.dilate(t)
    }

    /// `V_t(x) = t^{-2} V(x/t)` for any `t > 0`, realized on the grid with
    /// the same node count and half-width `t L`.
    pub fn dilate(&self, t: f64) -> Result<Self> {
        if !(t.is_finite() && t > 0.0) {
            return Err(Error::NonRepresentableScale(t));
        }
        let grid = self.grid.dilated(t)?;
        let s = t.powi(-2);
        let vfin = self.vfin.iter().map(|v| v * s).collect();
        Self::new(grid, vfin, self.mask.clone())
    }

    /// `μ ≺ ν`: ν has at least the mask and at least the finite part of μ.
    pub fn is_dominated_by(&self, other: &Self) -> bool {
        self.grid == other.grid
            && (0..self.grid.len()).all(|i| {
                other.mask[i] || (!self.mask[i] && self.vfin[i] <= other.vfin[i])
            })
    }

    /// `Σ_j ‖∇u‖² + ∫ vfin u²` for a field that vanishes on masked nodes.
    pub fn quadratic_form(&self, u: &ScalarField) -> Result<f64> {
        self.check_admissible(u)?;
        let pot: f64 = u
            .values()
            .iter()
            .zip(&self.vfin)
            .map(|(x, v)| v * x * x)
            .sum::<f64>()
            * self.grid.cell_volume();
        Ok(u.gradient_energy() + pot)
    }

    /// Errors unless `u` vanishes on every masked node.
    pub fn check_admissible(&self, u: &ScalarField) -> Result<()> {
        self.grid.ensure_same(u.grid())?;
        match u
            .values()
            .iter()
            .zip(&self.mask)
            .position(|(x, m)| *m && *x != 0.0)
        {
            Some(node) => Err(Error::Precondition(format!(
                "field is nonzero on masked node {node}"
            ))),
            None => Ok(()),
        }
    }

    /// Zeroes a field on the masked nodes.
    pub fn project(&self, u: &ScalarField) -> Result<ScalarField> {
        self.grid.ensure_same(u.grid())?;
        let values = u
            .values()
            .iter()
            .zip(&self.mask)
            .map(|(x, m)| if *m { 0.0 } else { *x })
            .collect();
        Ok(ScalarField::from_raw(self.grid, values))
    }

    /// `∫ V^{-p} dx` over the finiteness set; masked nodes contribute nothing
    /// and a zero finite value makes the integral infinite.
    pub fn inverse_power_mass(&self, p: f64) -> f64 {
        let s: f64 = self
            .vfin
            .iter()
            .zip(&self.mask)
            .filter(|(_, m)| !**m)
            .map(|(v, _)| if *v > 0.0 { v.powf(-p) } else { f64::INFINITY })
            .sum();
        s * self.grid.cell_volume()
    }
}

pub(crate) fn check_scale(t: f64) -> Result<()> {
    let ok = |x: f64| x.is_finite() && x >= 1.0 && (x - x.round()).abs() < 1e-12;
    if t > 0.0 && (ok(t) || ok(1.0 / t)) {
        Ok(())
    } else {
        Err(Error::NonRepresentableScale(t))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;

    fn grid() -> GridSpec {
        build_grid(1, 1.0, 7).unwrap()
    }

    #[test]
    fn join_examples() {
        let g = grid();
        let a = GeneralizedPotential::constant(g, 1.0).unwrap();
        let b = GeneralizedPotential::constant(g, 2.0).unwrap();
        assert_eq!(a.join(&a).unwrap(), a);
        assert_eq!(a.join(&b).unwrap().vfin(), &[2.0; 7]);
        let all = a.join_mask(&[false; 7]).unwrap();
        assert_eq!(all.dof_count(), 0);
    }

    #[test]
    fn wedge_examples() {
        let g = grid();
        let two = GeneralizedPotential::constant(g, 2.0).unwrap();
        assert!(two.wedge(&two).unwrap().vfin().iter().all(|&v| v == 1.0));

        let left: Vec<bool> = (0..7).map(|i| i < 3).collect();
        let right: Vec<bool> = (0..7).map(|i| i > 3).collect();
        let a = two.join_mask(&left).unwrap();
        let b = two.join_mask(&right).unwrap();
        let w = a.wedge(&b).unwrap();
        let masked: Vec<usize> = (0..7).filter(|&i| w.is_masked(i)).collect();
        assert_eq!(masked, vec![3]);
        assert_eq!(w.vfin()[0], 2.0);
    }

    #[test]
    fn rescale_examples() {
        let g = build_grid(2, 1.0, 15).unwrap();
        let pot = GeneralizedPotential::from_fn(g, |[x, y]| 1.0 + x * x + y).unwrap();
        let pot = GeneralizedPotential::new(g, pot.vfin().iter().map(|v| v.abs()).collect(), vec![false; g.len()]).unwrap();
        assert_eq!(pot.rescale(1.0).unwrap(), pot);
        let up = pot.rescale(2.0).unwrap();
        let p = 0.5;
        let ratio = up.inverse_power_mass(p) / pot.inverse_power_mass(p);
        assert!((ratio - 2f64.powf(2.0 * p + 2.0)).abs() < 1e-12 * ratio);
        assert_eq!(up.rescale(0.5).unwrap(), pot);
        assert!(matches!(pot.rescale(1.5), Err(Error::NonRepresentableScale(_))));
        assert!(pot.rescale(-2.0).is_err());
    }

    #[test]
    fn quadratic_form_adds_potential_energy() {
        let g = grid();
        let u = ScalarField::from_fn(g, |[x, _]| 1.0 - x * x);
        let c = 3.0;
        let pot = GeneralizedPotential::constant(g, c).unwrap();
        let q = pot.quadratic_form(&u).unwrap();
        assert!((q - (u.gradient_energy() + c * u.l2_norm().powi(2))).abs() < 1e-12);
        let masked = pot.join_mask(&[true, true, true, false, true, true, true]).unwrap();
        assert!(matches!(masked.quadratic_form(&u), Err(Error::Precondition(_))));
        assert_eq!(masked.quadratic_form(&ScalarField::zeros(g)).unwrap(), 0.0);
    }

    #[test]
    fn rejects_negative_values() {
        assert!(GeneralizedPotential::new(grid(), vec![-1.0; 7], vec![false; 7]).is_err());
    }
}
