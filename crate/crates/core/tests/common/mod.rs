//! Strategies shared by the property suites.

#![allow(dead_code)]

use proptest::prelude::*;
use spectropt::{build_grid, GeneralizedPotential, GridSpec, ScalarField};

/// Small 1D and 2D grids, all on the dense eigensolver path.
pub fn small_grid() -> impl Strategy<Value = GridSpec> {
    prop_oneof![
        (3usize..60).prop_map(|n| build_grid(1, 1.0, n).unwrap()),
        (3usize..13).prop_map(|n| build_grid(2, 1.0, n).unwrap()),
    ]
}

/// Random finite part in `[0, 5)` and roughly a fifth of the nodes masked,
/// with at least one free node.
pub fn potential_on(grid: GridSpec) -> impl Strategy<Value = GeneralizedPotential> {
    let len = grid.len();
    (
        prop::collection::vec(0.0..5.0f64, len),
        prop::collection::vec(prop::bool::weighted(0.2), len),
    )
        .prop_filter("at least one free node", |(_, mask)| mask.iter().any(|m| !m))
        .prop_map(move |(v, mask)| GeneralizedPotential::new(grid, v, mask).unwrap())
}

pub fn potential() -> impl Strategy<Value = GeneralizedPotential> {
    small_grid().prop_flat_map(potential_on)
}

pub fn field_on(grid: GridSpec, lo: f64, hi: f64) -> impl Strategy<Value = ScalarField> {
    prop::collection::vec(lo..hi, grid.len()).prop_map(move |v| ScalarField::from_values(grid, v).unwrap())
}

/// A potential with two random fields on its grid.
pub fn potential_with_fields() -> impl Strategy<Value = (GeneralizedPotential, ScalarField, ScalarField)> {
    small_grid().prop_flat_map(|g| (potential_on(g), field_on(g, -1.0, 1.0), field_on(g, -1.0, 1.0)))
}

/// An ordered pair `μ ≺ ν`: `ν` joins `μ` with a second random potential.
pub fn ordered_pair() -> impl Strategy<Value = (GeneralizedPotential, GeneralizedPotential)> {
    small_grid()
        .prop_flat_map(|g| (potential_on(g), potential_on(g)))
        .prop_filter_map("ν keeps a free node", |(a, b)| {
            let nu = a.join(&b).unwrap();
            (nu.dof_count() > 0).then_some((a, nu))
        })
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}
