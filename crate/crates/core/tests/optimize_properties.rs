//! Merit invariance, the splitting identity for separated wells, constraint
//! and penalty consistency, and optimizer trace monotonicity.

mod common;

use common::*;
use proptest::prelude::*;
use spectropt::gamma::audit_family;
use spectropt::grid::shapes::Shape;
use spectropt::optimize::{
    constraint_scale, mass_merit, optimize_lambda1_potential, optimize_lambdak_potential,
    optimize_spectral_torsion, radial_monotonicity_defect, rescale_to_constraint, torsion_merit,
    PenaltyConfig, ProblemKind,
};
use spectropt::spectrum::{eigs, eigs_dense};
use spectropt::torsion::torsion_function;
use spectropt::{build_grid, GeneralizedPotential};

/// Potentials bounded below by `1/2` so that `∫ V^{-p}` stays moderate.
fn positive_potential() -> impl Strategy<Value = GeneralizedPotential> {
    small_grid().prop_flat_map(|g| {
        let len = g.len();
        (
            prop::collection::vec(0.5..5.0f64, len),
            prop::collection::vec(prop::bool::weighted(0.2), len),
        )
            .prop_filter("at least one free node", |(_, m)| m.iter().any(|x| !x))
            .prop_map(move |(v, m)| GeneralizedPotential::new(g, v, m).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn merit_figures_are_scale_invariant(
        pot in positive_potential(),
        p in 0.2..2.0f64,
        t in prop::sample::select(vec![2.0, 3.0, 0.5]),
    ) {
        let d = pot.grid().dim();
        let k = pot.dof_count().min(2);
        let scaled = pot.rescale(t).unwrap();
        let (a, b) = (eigs_dense(&pot, k).unwrap(), eigs_dense(&scaled, k).unwrap());
        let ma = mass_merit(a.lambda(k), pot.inverse_power_mass(p), p, d);
        let mb = mass_merit(b.lambda(k), scaled.inverse_power_mass(p), p, d);
        prop_assert!(rel(ma, mb) <= 1e-8, "{ma} vs {mb}");
        let pa = torsion_function(&pot, 1e-12).unwrap().torsion;
        let pb = torsion_function(&scaled, 1e-12).unwrap().torsion;
        prop_assert!(rel(torsion_merit(a.lambda(k), pa, d), torsion_merit(b.lambda(k), pb, d)) <= 1e-8);
    }

    #[test]
    fn separated_wells_split_the_spectrum(
        r1 in 0.2..0.6f64,
        r2 in 0.2..0.6f64,
        v1 in 0.0..5.0f64,
        v2 in 0.0..5.0f64,
    ) {
        let g = build_grid(1, 6.0, 255).unwrap();
        let well = |r: f64, c: f64, v: f64| {
            let pot = Shape::Interval { radius: r, center: [c, 0.0] }.to_potential(&g).unwrap();
            pot.with_vfin(pot.vfin().iter().map(|x| x + v).collect()).unwrap()
        };
        let (a, b) = (well(r1, -3.0, v1), well(r2, 3.0, v2));
        prop_assert!(6.0 - r1 - r2 >= 4.0 * r1.max(r2));
        let k = 4;
        let merged = eigs(&a.wedge(&b).unwrap(), k, 1e-10).unwrap();
        let mut union = eigs(&a, k, 1e-10).unwrap().eigenvalues;
        union.extend(eigs(&b, k, 1e-10).unwrap().eigenvalues);
        union.sort_by(f64::total_cmp);
        for (x, y) in merged.eigenvalues.iter().zip(&union) {
            prop_assert!(rel(*x, *y) <= 1e-6, "{x} vs {y}");
        }
    }
}

#[test]
fn constrained_optimum_beats_audited_competitors() {
    let g = build_grid(1, 6.0, 255).unwrap();
    let cfg = PenaltyConfig::new(1, 0.5, 1.0);
    let report = optimize_lambda1_potential(&cfg, None, &g).unwrap();
    let opt = &report.final_potential;
    let lambda = eigs(opt, 1, 1e-10).unwrap().lambda(1);
    let r = rescale_to_constraint(opt, lambda, &cfg, 1.0).unwrap();
    assert!((r.potential.inverse_power_mass(cfg.p) - 1.0).abs() <= 1e-8);
    let best = eigs(&r.potential, 1, 1e-10).unwrap().lambda(1);
    for (name, nu) in audit_family(opt).unwrap() {
        let t = constraint_scale(nu.inverse_power_mass(cfg.p), 1.0, cfg.p, 1).unwrap();
        let nu1 = nu.dilate(t).unwrap();
        assert!((nu1.inverse_power_mass(cfg.p) - 1.0).abs() <= 1e-8);
        let l = eigs(&nu1, 1, 1e-10).unwrap().lambda(1);
        assert!(best <= l * (1.0 + 1e-6), "{name}: {best} > {l}");
    }
}

#[test]
fn k_two_needs_small_exponent() {
    let g = build_grid(1, 4.0, 63).unwrap();
    let cfg = PenaltyConfig::new(2, 1.5, 1.0);
    assert!(cfg.validate(ProblemKind::PotentialMass).is_err());
    assert!(optimize_lambdak_potential(&cfg, None, &g).is_err());
    assert!(PenaltyConfig::new(1, 1.5, 1.0).validate(ProblemKind::PotentialMass).is_ok());
    assert!(PenaltyConfig::new(2, 1.5, 1.0).validate(ProblemKind::SpectralTorsion).is_ok());
    assert!(PenaltyConfig::new(2, 0.5, -1.0).validate(ProblemKind::PotentialMass).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn first_eigenvalue_runs_descend(seed in 0u64..1000) {
        let g = build_grid(1, 6.0, 127).unwrap();
        let mut cfg = PenaltyConfig::new(1, 0.5, 1.0);
        cfg.seed = seed;
        let rep = optimize_lambda1_potential(&cfg, None, &g).unwrap();
        prop_assert!(rep.is_monotone(cfg.tol_obj));
        prop_assert!(rep.support_radius < 0.9 * g.half_width());
        prop_assert!(!rep.box_limited);
        let u = &eigs(&rep.final_potential, 1, 1e-10).unwrap().eigenfunctions[0];
        let u = if u.integrate() < 0.0 { u.scale(-1.0) } else { u.clone() };
        prop_assert!(radial_monotonicity_defect(&u) <= 1e-3);
    }

    #[test]
    fn second_eigenvalue_runs_descend(seed in 0u64..1000) {
        let g = build_grid(1, 6.0, 127).unwrap();
        let mut cfg = PenaltyConfig::new(2, 0.5, 1.0);
        cfg.seed = seed;
        let rep = optimize_lambdak_potential(&cfg, None, &g).unwrap();
        prop_assert!(rep.is_monotone(cfg.tol_obj));
        prop_assert!(!rep.box_limited);
    }

    #[test]
    fn spectral_torsion_runs_descend(seed in 0u64..1000) {
        let g = build_grid(2, 3.0, 23).unwrap();
        let mut cfg = PenaltyConfig::new(1, 0.5, 1.0);
        cfg.seed = seed;
        let rep = optimize_spectral_torsion(&cfg, None, &g).unwrap();
        prop_assert!(rep.is_monotone(cfg.tol_obj));
        prop_assert!(!rep.box_limited);
    }
}
