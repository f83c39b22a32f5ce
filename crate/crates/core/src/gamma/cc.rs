//! Concentration-compactness trichotomy for sequences of nonnegative fields.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::ScalarField;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CCLabel {
    Concentration,
    Vanishing,
    Dichotomy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CCVerdict {
    pub label: CCLabel,
    /// Ball centres of the tail fields (Concentration) or the two centres of
    /// the last field (Dichotomy).
    pub centers: Vec<[f64; 2]>,
    pub split_radius: Option<f64>,
    pub mass_fractions: Option<(f64, f64)>,
    /// Largest fraction of mass in a ball of radius `R`, per field.
    pub max_ball_fraction: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CcOptions {
    pub radius: f64,
    pub eps: f64,
    /// Minimal centre distance for a split, in units of `radius`.
    pub separation: f64,
}

impl CcOptions {
    pub fn new(radius: f64, eps: f64) -> Self {
        Self {
            radius,
            eps,
            separation: 4.0,
        }
    }
}

/// `∫_{B_R(x)} f` for every node `x`.
pub fn ball_masses(f: &ScalarField, radius: f64) -> Vec<f64> {
    let g = f.grid();
    let n = g.n() as isize;
    let reach = (radius / g.h()).floor() as isize;
    let h = g.h();
    let dj = if g.dim() == 2 { reach } else { 0 };
    let mut offsets = Vec::new();
    for a in -reach..=reach {
        for b in -dj..=dj {
            if ((a * a + b * b) as f64).sqrt() * h < radius {
                offsets.push((a, b));
            }
        }
    }
    let vol = g.cell_volume();
    (0..g.len())
        .map(|node| {
            let [i, j] = g.multi_index(node);
            let (i, j) = (i as isize, j as isize);
            offsets
                .iter()
                .filter_map(|&(a, b)| {
                    let (p, q) = (i + a, j + b);
                    let inside = (0..n).contains(&p) && (g.dim() == 1 || (0..n).contains(&q));
                    inside.then(|| f.get(g.flat_index([p as usize, q as usize])))
                })
                .sum::<f64>()
                * vol
        })
        .collect()
}

struct FieldScan {
    fraction: f64,
    center: [f64; 2],
    second: Option<([f64; 2], f64)>,
    annulus: f64,
}

fn scan(f: &ScalarField, opts: &CcOptions) -> Result<FieldScan> {
    let g = f.grid();
    if f.min() < -1e-12 * f.linf_norm() {
        return Err(Error::Precondition("concentration-compactness needs nonnegative fields".into()));
    }
    let total = f.integrate();
    if !(total > 0.0) {
        return Err(Error::Precondition("field with zero mass".into()));
    }
    let r = opts.radius;
    let masses = ball_masses(f, r);
    let best = argmax(&masses, |_| true);
    let c1 = g.coords(best);
    let far = |node: usize| {
        let x = g.coords(node);
        (x[0] - c1[0]).hypot(x[1] - c1[1]) >= opts.separation * r
    };
    let second = (0..g.len()).any(far).then(|| {
        let k = argmax(&masses, far);
        (g.coords(k), masses[k] / total)
    });
    let annulus = (0..g.len())
        .filter(|&node| {
            let x = g.coords(node);
            let d = (x[0] - c1[0]).hypot(x[1] - c1[1]);
            d >= r && d < 3.0 * r
        })
        .map(|node| f.get(node))
        .sum::<f64>()
        * g.cell_volume()
        / total;
    Ok(FieldScan {
        fraction: masses[best] / total,
        center: c1,
        second,
        annulus,
    })
}

fn argmax(values: &[f64], admissible: impl Fn(usize) -> bool) -> usize {
    let mut best = usize::MAX;
    for (i, v) in values.iter().enumerate() {
        if admissible(i) && (best == usize::MAX || *v > values[best]) {
            best = i;
        }
    }
    best
}

/// Classifies the tail (last third) of a sequence as vanishing, concentrating
/// or splitting at scale `R`.
pub fn cc_classify(fields: &[ScalarField], opts: &CcOptions) -> Result<CCVerdict> {
    if fields.len() < 3 {
        return Err(Error::InsufficientSequence(fields.len()));
    }
    if !(opts.radius > 0.0 && opts.eps > 0.0 && opts.eps < 1.0) {
        return Err(Error::Precondition("need R > 0 and eps in (0, 1)".into()));
    }
    let scans = fields.iter().map(|f| scan(f, opts)).collect::<Result<Vec<_>>>()?;
    let tail = &scans[scans.len() - scans.len().div_ceil(3)..];
    let eps = opts.eps;
    let max_ball_fraction = scans.iter().map(|s| s.fraction).collect();
    let split = |s: &FieldScan| {
        s.fraction >= eps
            && s.annulus < eps
            && s.second.is_some_and(|(_, m)| m >= eps)
    };
    let verdict = |label, centers, split_radius, mass_fractions| CCVerdict {
        label,
        centers,
        split_radius,
        mass_fractions,
        max_ball_fraction,
    };
    if tail.iter().all(|s| s.fraction < eps) {
        return Ok(verdict(CCLabel::Vanishing, vec![], None, None));
    }
    let centers = tail.iter().map(|s| s.center).collect();
    if tail.iter().all(|s| s.fraction >= 1.0 - eps) {
        return Ok(verdict(CCLabel::Concentration, centers, None, None));
    }
    if tail.iter().all(split) {
        let last = tail.last().expect("nonempty tail");
        let (c2, m2) = last.second.expect("split has a second centre");
        return Ok(verdict(
            CCLabel::Dichotomy,
            vec![last.center, c2],
            Some(opts.radius),
            Some((last.fraction, m2)),
        ));
    }
    Ok(verdict(CCLabel::Concentration, centers, None, None))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;

    fn bump(g: crate::grid::GridSpec, c: [f64; 2], width: f64) -> ScalarField {
        ScalarField::from_fn(g, |[x, y]| {
            let r = (x - c[0]).hypot(y - c[1]) / width;
            if r < 1.0 {
                (1.0 - r * r).powi(2)
            } else {
                0.0
            }
        })
    }

    #[test]
    fn short_sequences_are_rejected() {
        let g = build_grid(1, 1.0, 15).unwrap();
        let f = bump(g, [0.0; 2], 0.5);
        assert!(matches!(
            cc_classify(&[f.clone(), f], &CcOptions::new(0.5, 0.05)),
            Err(Error::InsufficientSequence(2))
        ));
    }

    #[test]
    fn ball_mass_of_constant() {
        let g = build_grid(1, 1.0, 99).unwrap();
        let m = ball_masses(&ScalarField::constant(g, 1.0), 0.1);
        // Nine nodes fit strictly inside a ball of radius 5h.
        assert!((m[50] - 9.0 * g.h()).abs() < 1e-12);
    }
}
