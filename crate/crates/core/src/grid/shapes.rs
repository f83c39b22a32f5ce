//! Built-in domains and potentials.
//!
//! A domain `Ω` is described by a level-set function that is negative inside
//! and approximates the signed distance to `∂Ω`. A node belongs to the
//! discrete domain when the level set is below `-BOUNDARY_INSET · h`: the
//! first masked node then sits on average at the continuous boundary, which
//! removes the first-order staircase bias of the 5-point stencil.

use serde::{Deserialize, Serialize};

use super::{GeneralizedPotential, GridSpec};
use crate::error::{Error, Result};

pub const BOUNDARY_INSET: f64 = 0.3;

/// Indicator of the discrete domain `{φ < -inset·h}`.
pub fn domain_mask(grid: &GridSpec, level_set: impl Fn([f64; 2]) -> f64) -> Vec<bool> {
    let cut = -BOUNDARY_INSET * grid.h();
    (0..grid.len()).map(|node| level_set(grid.coords(node)) < cut).collect()
}

pub fn ball_mask(grid: &GridSpec, center: [f64; 2], radius: f64) -> Vec<bool> {
    domain_mask(grid, |[x, y]| (x - center[0]).hypot(y - center[1]) - radius)
}

/// Plain geometric ball `|x - c| < r`, without boundary inset.
pub fn ball_nodes(grid: &GridSpec, center: [f64; 2], radius: f64) -> Vec<bool> {
    (0..grid.len())
        .map(|node| {
            let [x, y] = grid.coords(node);
            (x - center[0]).hypot(y - center[1]) < radius
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Shape {
    /// Ball of the given radius: an interval in 1D, a disk in 2D.
    Interval {
        radius: f64,
        #[serde(default)]
        center: [f64; 2],
    },
    Disk {
        radius: f64,
        #[serde(default)]
        center: [f64; 2],
    },
    Square {
        half_side: f64,
    },
    Rectangle {
        half_x: f64,
        half_y: f64,
    },
    Ellipse {
        a: f64,
        b: f64,
    },
    Annulus {
        inner: f64,
        outer: f64,
    },
    /// `vfin ≡ value` on the whole box.
    Constant {
        value: f64,
    },
    /// `vfin = strength · |x|²` on the whole box.
    Oscillator {
        #[serde(default = "one")]
        strength: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl Shape {
    pub fn name(&self) -> &'static str {
        match self {
            Shape::Interval { .. } => "interval",
            Shape::Disk { .. } => "disk",
            Shape::Square { .. } => "square",
            Shape::Rectangle { .. } => "rectangle",
            Shape::Ellipse { .. } => "ellipse",
            Shape::Annulus { .. } => "annulus",
            Shape::Constant { .. } => "constant",
            Shape::Oscillator { .. } => "oscillator",
        }
    }

    pub fn to_potential(&self, grid: &GridSpec) -> Result<GeneralizedPotential> {
        let need_2d = |name: &str| {
            if grid.dim() == 2 {
                Ok(())
            } else {
                Err(Error::Precondition(format!("{name} needs a 2D grid")))
            }
        };
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::Precondition(format!("{name} must be positive, got {v}")))
            }
        };
        let free = GeneralizedPotential::free(*grid);
        match *self {
            Shape::Interval { radius, center } | Shape::Disk { radius, center } => {
                positive("radius", radius)?;
                if matches!(self, Shape::Disk { .. }) {
                    need_2d("disk")?;
                }
                free.join_mask(&ball_mask(grid, center, radius))
            }
            Shape::Square { half_side } => {
                positive("half_side", half_side)?;
                need_2d("square")?;
                free.join_mask(&domain_mask(grid, |[x, y]| {
                    (x.abs() - half_side).max(y.abs() - half_side)
                }))
            }
            Shape::Rectangle { half_x, half_y } => {
                positive("half_x", half_x)?;
                positive("half_y", half_y)?;
                need_2d("rectangle")?;
                free.join_mask(&domain_mask(grid, |[x, y]| (x.abs() - half_x).max(y.abs() - half_y)))
            }
            Shape::Ellipse { a, b } => {
                positive("a", a)?;
                positive("b", b)?;
                need_2d("ellipse")?;
                free.join_mask(&domain_mask(grid, |[x, y]| ellipse_level(x, y, a, b)))
            }
            Shape::Annulus { inner, outer } => {
                positive("inner", inner)?;
                if !(outer > inner) {
                    return Err(Error::Precondition("annulus needs outer > inner".into()));
                }
                free.join_mask(&domain_mask(grid, |[x, y]| {
                    let r = x.hypot(y);
                    (r - outer).max(inner - r)
                }))
            }
            Shape::Constant { value } => GeneralizedPotential::constant(*grid, value),
            Shape::Oscillator { strength } => {
                positive("strength", strength)?;
                GeneralizedPotential::from_fn(*grid, |[x, y]| strength * (x * x + y * y))
            }
        }
    }
}

/// First-order signed distance to the ellipse `(x/a)² + (y/b)² = 1`.
fn ellipse_level(x: f64, y: f64, a: f64, b: f64) -> f64 {
    let f = (x / a).powi(2) + (y / b).powi(2) - 1.0;
    let gx = 2.0 * x / (a * a);
    let gy = 2.0 * y / (b * b);
    let g = gx.hypot(gy);
    if g > 1e-12 {
        f / g
    } else {
        -a.min(b)
    }
}
