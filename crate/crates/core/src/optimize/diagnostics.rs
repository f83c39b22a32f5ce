//! Geometric diagnostics of optimizer outputs: support radius, half-space
//! mass profiles, radial monotonicity and isoperimetric ratios.

use crate::grid::{GeneralizedPotential, GridSpec, ScalarField};

/// Smallest `R` with `w ≤ threshold` outside `B_R(centroid of w)`; the
/// threshold defaults to `1e-8 ‖w‖_∞`.
pub fn support_radius(w: &ScalarField, threshold: Option<f64>) -> f64 {
    let Some(c) = w.centroid() else {
        return 0.0;
    };
    let cut = threshold.unwrap_or(1e-8 * w.linf_norm());
    let g = w.grid();
    (0..g.len())
        .filter(|&i| w.get(i) > cut)
        .map(|i| {
            let x = g.coords(i);
            (x[0] - c[0]).hypot(x[1] - c[1])
        })
        .fold(0.0, f64::max)
}

/// `φ(t) = ∫_{x·e > t} w` on 201 equispaced `t` covering the box.
pub fn halfline_mass_profile(w: &ScalarField, direction: [f64; 2]) -> Vec<(f64, f64)> {
    let g = w.grid();
    let norm = direction[0].hypot(direction[1]);
    let e = [direction[0] / norm, direction[1] / norm];
    let reach = g.half_width() * (g.dim() as f64).sqrt() * 1.01;
    let proj: Vec<f64> = (0..g.len())
        .map(|i| {
            let x = g.coords(i);
            x[0] * e[0] + x[1] * e[1]
        })
        .collect();
    (0..=200)
        .map(|s| {
            let t = -reach + 2.0 * reach * s as f64 / 200.0;
            let mass = proj
                .iter()
                .zip(w.values())
                .filter(|(p, _)| **p > t)
                .map(|(_, v)| v)
                .sum::<f64>()
                * g.cell_volume();
            (t, mass)
        })
        .collect()
}

/// First `t` of a profile at which the mass has dropped to `level`.
pub fn vanishing_point(profile: &[(f64, f64)], level: f64) -> Option<f64> {
    profile.iter().find(|(_, m)| *m <= level).map(|(t, _)| *t)
}

/// Largest outward increase of `u` about its maximum node, relative to
/// `max u`: along the line in 1D, after averaging over rings of width `h`
/// in 2D. Zero for a radially non-increasing field.
pub fn radial_monotonicity_defect(u: &ScalarField) -> f64 {
    let g = u.grid();
    let top = u.max();
    if top <= 0.0 {
        return 0.0;
    }
    let c = u.argmax();
    let profiles: Vec<Vec<f64>> = if g.dim() == 1 {
        let v = u.values();
        vec![v[c..].to_vec(), v[..=c].iter().rev().copied().collect()]
    } else {
        let x0 = g.coords(c);
        let h = g.h();
        let bins = (2.0 * g.half_width() * std::f64::consts::SQRT_2 / h) as usize + 2;
        let mut sum = vec![0.0; bins];
        let mut count = vec![0usize; bins];
        for i in 0..g.len() {
            let x = g.coords(i);
            let b = ((x[0] - x0[0]).hypot(x[1] - x0[1]) / h).round() as usize;
            sum[b] += u.get(i);
            count[b] += 1;
        }
        let ring: Vec<f64> = sum
            .iter()
            .zip(&count)
            .filter(|(_, c)| **c > 0)
            .map(|(s, c)| s / *c as f64)
            .collect();
        vec![ring]
    };
    profiles
        .iter()
        .flat_map(|p| p.windows(2).map(|w| (w[1] - w[0]).max(0.0)))
        .fold(0.0, f64::max)
        / top
}

/// `(perimeter, area)` of `{u > level}` by marching squares on the grid
/// padded with the boundary zeros. Two-dimensional grids only.
pub fn superlevel_geometry(u: &ScalarField, level: f64) -> (f64, f64) {
    let g: &GridSpec = u.grid();
    assert_eq!(g.dim(), 2, "superlevel geometry needs a 2D grid");
    let n = g.n() as isize;
    let h = g.h();
    let val = |i: isize, j: isize| -> f64 {
        if i < 0 || j < 0 || i >= n || j >= n {
            0.0
        } else {
            u.get(g.flat_index([i as usize, j as usize]))
        }
    };
    let mut perimeter = 0.0;
    let mut area = 0.0;
    for j in -1..n {
        for i in -1..n {
            // Corners counter-clockwise in cell coordinates.
            let corners = [(0.0, 0.0, val(i, j)), (1.0, 0.0, val(i + 1, j)), (1.0, 1.0, val(i + 1, j + 1)), (0.0, 1.0, val(i, j + 1))];
            let mut poly: Vec<(f64, f64, bool)> = Vec::with_capacity(8);
            for k in 0..4 {
                let (x0, y0, v0) = corners[k];
                let (x1, y1, v1) = corners[(k + 1) % 4];
                if v0 > level {
                    poly.push((x0, y0, false));
                }
                if (v0 > level) != (v1 > level) {
                    let s = (level - v0) / (v1 - v0);
                    poly.push((x0 + s * (x1 - x0), y0 + s * (y1 - y0), true));
                }
            }
            if poly.len() < 3 {
                continue;
            }
            let m = poly.len();
            let mut twice = 0.0;
            for k in 0..m {
                let (xa, ya, ca) = poly[k];
                let (xb, yb, cb) = poly[(k + 1) % m];
                twice += xa * yb - xb * ya;
                if ca && cb {
                    perimeter += (xb - xa).hypot(yb - ya) * h;
                }
            }
            area += 0.5 * twice.abs() * h * h;
        }
    }
    (perimeter, area)
}

/// `perimeter² / (4π area)` of the superlevel set at half the maximum.
pub fn isoperimetric_ratio(u: &ScalarField) -> f64 {
    let (p, a) = superlevel_geometry(u, 0.5 * u.max());
    p * p / (4.0 * std::f64::consts::PI * a)
}

/// Radius of the smallest ball about `center` containing every unmasked
/// node, or `None` when unmasked nodes reach the outer shell of the box.
pub fn ball_witness(pot: &GeneralizedPotential, center: [f64; 2]) -> Option<f64> {
    let g = pot.grid();
    let mut r: f64 = 0.0;
    for i in 0..g.len() {
        if !pot.is_masked(i) {
            if g.in_outer_shell(i) {
                return None;
            }
            let x = g.coords(i);
            r = r.max((x[0] - center[0]).hypot(x[1] - center[1]));
        }
    }
    Some(r)
}

/// Fraction of unmasked nodes whose finite value exceeds ten times the
/// median over unmasked nodes.
pub fn domain_indicator(pot: &GeneralizedPotential) -> f64 {
    let mut v: Vec<f64> = (0..pot.grid().len())
        .filter(|&i| !pot.is_masked(i))
        .map(|i| pot.vfin()[i])
        .collect();
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    let median = v[v.len() / 2];
    v.iter().filter(|x| **x > 10.0 * median).count() as f64 / v.len() as f64
}
