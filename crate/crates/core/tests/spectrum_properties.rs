//! Eigensolver agreement, orthonormality, monotonicity and the sup-norm
//! bound on eigenfunctions.

mod common;

use approx::assert_relative_eq;
use common::*;
use proptest::prelude::*;
use spectropt::grid::shapes::Shape;
use spectropt::spectrum::{eigen_linf_check, eigs, eigs_dense};
use spectropt::torsion::torsion_function;
use spectropt::{build_grid, GeneralizedPotential, GridSpec};

/// 2D potentials with 200 to about 1000 degrees of freedom.
fn iterative_sized() -> impl Strategy<Value = GeneralizedPotential> {
    (15usize..33)
        .prop_map(|n| build_grid(2, 1.0, n).unwrap())
        .prop_flat_map(|g: GridSpec| {
            let len = g.len();
            (
                Just(g),
                prop::collection::vec(0.0..20.0f64, len),
                prop::collection::vec(prop::bool::weighted(0.05), len),
            )
        })
        .prop_filter_map("enough degrees of freedom", |(g, v, mask)| {
            let pot = GeneralizedPotential::new(g, v, mask).unwrap();
            (pot.dof_count() >= 200).then_some(pot)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn iterative_matches_dense(pot in iterative_sized()) {
        let it = eigs(&pot, 4, 1e-10).unwrap();
        let de = eigs_dense(&pot, 4).unwrap();
        for (a, b) in it.eigenvalues.iter().zip(&de.eigenvalues) {
            prop_assert!(rel(*a, *b) <= 1e-8, "{a} vs {b}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn eigenfunctions_are_orthonormal(pot in potential()) {
        let k = pot.dof_count().min(4);
        let s = eigs(&pot, k, 1e-10).unwrap();
        for i in 0..k {
            for j in 0..k {
                let ip = s.eigenfunctions[i].inner(&s.eigenfunctions[j]).unwrap();
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((ip - want).abs() <= 1e-8, "<u{i}, u{j}> = {ip}");
            }
            for node in 0..pot.grid().len() {
                if pot.is_masked(node) {
                    prop_assert_eq!(s.eigenfunctions[i].get(node), 0.0);
                }
            }
        }
        prop_assert!(s.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn eigenvalues_are_monotone((mu, nu) in ordered_pair()) {
        let k = nu.dof_count().min(3);
        let a = eigs_dense(&mu, k).unwrap();
        let b = eigs_dense(&nu, k).unwrap();
        for (x, y) in a.eigenvalues.iter().zip(&b.eigenvalues) {
            prop_assert!(*x <= y + 1e-8, "{x} > {y}");
        }
    }
}

#[test]
fn constant_family_vanishes() {
    let g = build_grid(2, 1.0, 31).unwrap();
    let mut prev: Option<(f64, f64)> = None;
    for c in [1.0, 10.0, 100.0, 1000.0] {
        let pot = GeneralizedPotential::constant(g, c).unwrap();
        let w = torsion_function(&pot, 1e-12).unwrap().w.linf_norm();
        let l = eigs(&pot, 1, 1e-10).unwrap().lambda(1);
        if let Some((pw, pl)) = prev {
            assert!(w < pw, "‖w‖_∞ {w} did not decrease from {pw}");
            assert!(l > pl, "λ_1 {l} did not increase from {pl}");
        }
        prev = Some((w, l));
    }
}

#[test]
fn sup_norm_ratio_settles_under_refinement() {
    let ratios: Vec<f64> = [31usize, 63, 127]
        .into_iter()
        .map(|n| {
            let g = build_grid(2, 1.25, n).unwrap();
            let pot = Shape::Disk { radius: 1.0, center: [0.0; 2] }.to_potential(&g).unwrap();
            let b = eigen_linf_check(&eigs(&pot, 4, 1e-10).unwrap(), 2);
            b.iter().map(|x| x.lhs / x.rhs).fold(0.0, f64::max)
        })
        .collect();
    assert!(ratios.iter().all(|r| *r <= 1.05), "{ratios:?}");
    let steps: Vec<f64> = ratios.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    assert!(steps[1] < steps[0], "{ratios:?}");
}

#[test]
fn interval_spectrum() {
    let g = build_grid(1, 1.0, 255).unwrap();
    let s = eigs(&GeneralizedPotential::free(g), 4, 1e-10).unwrap();
    let pi2 = std::f64::consts::PI.powi(2);
    for (j, l) in s.eigenvalues.iter().enumerate() {
        let want = pi2 * ((j + 1) as f64).powi(2) / 4.0;
        assert_relative_eq!(*l, want, max_relative = 1e-3);
    }
}
