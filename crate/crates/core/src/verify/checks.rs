//! The individual checks of the verification suite.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use super::families::*;
use super::{Check, Recorder, Suite};
use crate::error::Result;
use crate::gamma::{
    calibrate_truncation_constant, cc_classify, gamma_distance, halfspace_cut_check, resolvent_distance,
    truncation_distance_check, CcOptions,
};
use crate::grid::shapes::{ball_nodes, Shape};
use crate::grid::{build_grid, GeneralizedPotential, ScalarField};
use crate::optimize::{
    ball_witness, domain_indicator, fixed_point_residual, halfline_mass_profile, isoperimetric_ratio,
    optimize_lambda1_potential, optimize_lambdak_potential, optimize_spectral_torsion,
    radial_monotonicity_defect, support_radius, vanishing_point, OptReport, PenaltyConfig,
};
use crate::spectrum::{domination_ratio, eigen_scaling_check, eigs, resolvent_gap_check, Spectrum};
use crate::torsion::{linf_torsion_bound_check, torsion_function};

const EIG_TOL: f64 = 1e-10;
const CG_TOL: f64 = 1e-12;

pub(super) static REGISTRY: &[Check] = &[
    Check {
        name: "interval-oracles",
        tags: &["oracles"],
        summary: "eigenvalues and torsion of the interval (-1, 1)",
        run: interval_oracles,
    },
    Check {
        name: "disk-oracles",
        tags: &["oracles"],
        summary: "first eigenvalue and torsion of the unit disk",
        run: disk_oracles,
    },
    Check {
        name: "oscillator-oracle",
        tags: &["oracles"],
        summary: "first four levels of the harmonic oscillator",
        run: oscillator_oracle,
    },
    Check {
        name: "eigen-scaling",
        tags: &["scaling"],
        summary: "λ_k(V_t) t² = λ_k(V) under dilation by t = 2 and 3",
        run: eigen_scaling,
    },
    Check {
        name: "torsion-scaling",
        tags: &["scaling"],
        summary: "P(μ_t) = t^{d+2} P(μ) and w_t(x) = t² w(x/t)",
        run: torsion_scaling,
    },
    Check {
        name: "mass-scaling",
        tags: &["scaling"],
        summary: "∫ V_t^{-p} = t^{2p+d} ∫ V^{-p}",
        run: mass_scaling,
    },
    Check {
        name: "merit-scaling",
        tags: &["scaling"],
        summary: "dilation invariance of λ_k M^{2/(2p+d)} and λ_k P^{2/(d+2)}",
        run: merit_scaling,
    },
    Check {
        name: "eigen-linf",
        tags: &["bounds"],
        summary: "‖u_j‖_∞ ≤ e^{1/(8π)} λ_j^{d/4} and the weak-maximum domination by w",
        run: eigen_linf,
    },
    Check {
        name: "torsion-linf",
        tags: &["bounds"],
        summary: "‖w‖_∞ / ‖w‖_{L¹}^{2/(d+2)} is one constant across dilated disks",
        run: torsion_linf,
    },
    Check {
        name: "resolvent-gap",
        tags: &["inequalities"],
        summary: "resolvent eigenvalue gaps on ten ordered pairs",
        run: resolvent_gap,
    },
    Check {
        name: "halfspace-cut",
        tags: &["inequalities"],
        summary: "γ-distance of twelve hyperplane cuts",
        run: halfspace_cut,
    },
    Check {
        name: "truncation",
        tags: &["inequalities"],
        summary: "annular truncation bound with a constant fitted on disks",
        run: truncation,
    },
    Check {
        name: "resolvent-distance",
        tags: &["inequalities"],
        summary: "‖R_μ - R_ν‖ / d_γ^{1/d} bounded along a ball-truncation family",
        run: resolvent,
    },
    Check {
        name: "cc-classifier",
        tags: &["cc"],
        summary: "trichotomy labels of nine constructed sequences and their translates",
        run: cc,
    },
    Check {
        name: "faber-krahn",
        tags: &["optimizer"],
        summary: "optimal potential for λ_1 with p = 1/2 in one dimension, three seeds",
        run: faber_krahn,
    },
    Check {
        name: "kohler-jobin",
        tags: &["optimizer"],
        summary: "the disk minimizes λ_1 P^{1/2} and the torsion optimizer finds a round set",
        run: kohler_jobin,
    },
    Check {
        name: "subsolution-audits",
        tags: &["optimizer"],
        summary: "every optimizer output beats its perturbation family",
        run: audits,
    },
    Check {
        name: "gradients",
        tags: &["optimizer"],
        summary: "analytic derivatives against central differences on random bumps",
        run: gradients,
    },
    Check {
        name: "dichotomy-spectrum",
        tags: &["dichotomy"],
        summary: "the spectrum of two separated wells is the merged spectrum",
        run: dichotomy_spectrum,
    },
];

impl Suite {
    /// `k = 1, p = 1/2, d = 1` on `L = 6, n = 511`, three consecutive seeds.
    pub fn faber_krahn_runs(&self) -> Result<Vec<OptReport>> {
        Self::cached(&self.k1_runs, || {
            let g = build_grid(1, 6.0, 511)?;
            (0..3)
                .map(|i| {
                    let mut cfg = PenaltyConfig::new(1, 0.5, 1.0);
                    cfg.seed = self.config.seed.wrapping_add(i);
                    optimize_lambda1_potential(&cfg, None, &g)
                })
                .collect()
        })
    }

    /// `k = 2, p = 1/2, m = 1, d = 1` on `L = 6, n = 255`.
    pub fn second_eigenvalue_run(&self) -> Result<OptReport> {
        Self::cached(&self.k2_run, || {
            let mut cfg = PenaltyConfig::new(2, 0.5, 1.0);
            cfg.seed = self.config.seed;
            optimize_lambdak_potential(&cfg, None, &build_grid(1, 6.0, 255)?)
        })
    }

    /// `λ_1 + P`, `d = 2` on `L = 3, n = 47`.
    pub fn spectral_torsion_run(&self) -> Result<OptReport> {
        Self::cached(&self.torsion_run, || {
            let mut cfg = PenaltyConfig::new(1, 0.5, 1.0);
            cfg.seed = self.config.seed;
            optimize_spectral_torsion(&cfg, None, &build_grid(2, 3.0, 47)?)
        })
    }
}

fn add_constant(pot: &GeneralizedPotential, c: f64) -> Result<GeneralizedPotential> {
    pot.with_vfin(pot.vfin().iter().map(|v| v + c).collect())
}

fn add_field(pot: &GeneralizedPotential, f: &ScalarField) -> Result<GeneralizedPotential> {
    pot.with_vfin(pot.vfin().iter().zip(f.values()).map(|(v, b)| v + b).collect())
}

fn interval_oracles(s: &Suite, rec: &mut Recorder) -> Result<()> {
    let o = s.oracles();
    let pot = interval()?;
    let spec = eigs(&pot, 2, EIG_TOL)?;
    rec.close("lambda1", spec.lambda(1), o.interval_lambda1, 1e-3);
    rec.close("lambda2", spec.lambda(2), o.interval_lambda2, 1e-3);
    rec.close("torsion", torsion_function(&pot, CG_TOL)?.torsion, o.interval_torsion, 1e-3);
    Ok(())
}

fn disk_oracles(s: &Suite, rec: &mut Recorder) -> Result<()> {
    let o = s.oracles();
    let g = disk_grid()?;
    let pot = unit_disk(&g)?;
    rec.close("lambda1", eigs(&pot, 1, EIG_TOL)?.lambda(1), o.disk_lambda1, 5e-3);
    let t = torsion_function(&pot, CG_TOL)?;
    rec.close("torsion", t.torsion, o.disk_torsion, 1e-2);
    let centre = g.flat_index([g.n() / 2, g.n() / 2]);
    rec.close("center_torsion", t.w.get(centre), o.disk_center_torsion, 1e-2);
    Ok(())
}

fn oscillator_oracle(s: &Suite, rec: &mut Recorder) -> Result<()> {
    let levels = &s.oracles().oscillator_levels;
    let spec = eigs(&oscillator()?, levels.len(), EIG_TOL)?;
    for (j, want) in levels.iter().enumerate() {
        rec.close(&format!("lambda{}", j + 1), spec.eigenvalues[j], *want, 5e-3);
    }
    Ok(())
}

/// Potentials for the dilation checks.
fn scaling_family() -> Result<Vec<(String, GeneralizedPotential)>> {
    Ok(vec![
        ("interval".into(), GeneralizedPotential::free(build_grid(1, 1.0, 63)?)),
        ("unit disk".into(), unit_disk(&build_grid(2, 1.25, 31)?)?),
        ("random d=1".into(), random_potential(1, 2)?),
        ("random d=1 masked".into(), random_potential(1, 3)?),
        ("random d=2".into(), random_potential(2, 4)?),
        ("random d=2 masked".into(), random_potential(2, 5)?),
    ])
}

fn eigen_scaling(_: &Suite, rec: &mut Recorder) -> Result<()> {
    for (name, pot) in scaling_family()? {
        for t in [2.0, 3.0] {
            let err = eigen_scaling_check(&pot, 3, t)?;
            rec.at_most(&format!("{name}, t = {t}: max relative error"), err, 1e-6);
        }
    }
    Ok(())
}

fn torsion_scaling(_: &Suite, rec: &mut Recorder) -> Result<()> {
    for (name, pot) in scaling_family()? {
        let d = pot.grid().dim() as i32;
        let base = torsion_function(&pot, CG_TOL)?;
        for t in [2.0_f64, 3.0] {
            let scaled = torsion_function(&pot.rescale(t)?, CG_TOL)?;
            let want = t.powi(d + 2) * base.torsion;
            rec.at_most(
                &format!("{name}, t = {t}: torsion relative error"),
                (scaled.torsion - want).abs() / want,
                1e-6,
            );
            // Dilation keeps node indices, so x/t is the same node.
            let nodewise = scaled
                .w
                .values()
                .iter()
                .zip(base.w.values())
                .map(|(a, b)| (a - t * t * b).abs())
                .fold(0.0, f64::max)
                / (t * t * base.w.linf_norm());
            rec.at_most(&format!("{name}, t = {t}: node-wise field error"), nodewise, 1e-6);
        }
    }
    Ok(())
}

fn mass_scaling(_: &Suite, rec: &mut Recorder) -> Result<()> {
    for (name, pot) in scaling_family()?.into_iter().skip(2) {
        let d = pot.grid().dim() as f64;
        for t in [2.0_f64, 3.0] {
            let scaled = pot.rescale(t)?;
            for p in [0.5, 1.0, 2.0] {
                let want = t.powf(2.0 * p + d) * pot.inverse_power_mass(p);
                let got = scaled.inverse_power_mass(p);
                rec.at_most(
                    &format!("{name}, t = {t}, p = {p}: relative error"),
                    (got - want).abs() / want,
                    1e-6,
                );
            }
        }
    }
    Ok(())
}

fn merit_scaling(_: &Suite, rec: &mut Recorder) -> Result<()> {
    use crate::optimize::{mass_merit, torsion_merit};
    let p = 0.5;
    for (name, pot) in scaling_family()?.into_iter().skip(2) {
        let d = pot.grid().dim();
        let scaled = pot.rescale(3.0)?;
        let (l0, l1) = (eigs(&pot, 1, EIG_TOL)?.lambda(1), eigs(&scaled, 1, EIG_TOL)?.lambda(1));
        let (m0, m1) = (
            mass_merit(l0, pot.inverse_power_mass(p), p, d),
            mass_merit(l1, scaled.inverse_power_mass(p), p, d),
        );
        rec.at_most(&format!("{name}: mass merit relative change"), (m1 - m0).abs() / m0, 1e-8);
        let (p0, p1) = (
            torsion_function(&pot, CG_TOL)?.torsion,
            torsion_function(&scaled, CG_TOL)?.torsion,
        );
        let (t0, t1) = (torsion_merit(l0, p0, d), torsion_merit(l1, p1, d));
        rec.at_most(&format!("{name}: torsion merit relative change"), (t1 - t0).abs() / t0, 1e-8);
    }
    Ok(())
}

fn eigen_linf(s: &Suite, rec: &mut Recorder) -> Result<()> {
    let c = s.oracles().linf_constant;
    let mut family = vec![
        ("interval".to_string(), interval()?),
        ("unit disk".to_string(), unit_disk(&disk_grid()?)?),
        ("oscillator".to_string(), oscillator()?),
    ];
    family.extend(random_family(s.config.seed)?);
    let mut worst: f64 = 0.0;
    let mut worst_domination: f64 = 0.0;
    for (name, pot) in &family {
        let d = pot.grid().dim() as f64;
        let spec = eigs(pot, 4, EIG_TOL)?;
        let ratios: Vec<f64> = spec
            .eigenvalues
            .iter()
            .zip(&spec.eigenfunctions)
            .map(|(l, u)| u.linf_norm() / (c * l.powf(d / 4.0)))
            .collect();
        let w = torsion_function(pot, CG_TOL)?.w;
        let dom = domination_ratio(&spec, &w)? * crate::spectrum::linf_constant() / c;
        rec.metric(format!("{name}: sup-norm ratios"), &ratios);
        rec.metric(format!("{name}: domination ratio"), dom);
        for (j, r) in ratios.iter().enumerate() {
            rec.require(*r <= 1.05, format!("{name}: ‖u_{}‖_∞ ratio {r:.4} exceeds 1.05", j + 1));
        }
        rec.require(dom <= 1.05, format!("{name}: domination ratio {dom:.4} exceeds 1.05"));
        worst = ratios.iter().copied().fold(worst, f64::max);
        worst_domination = worst_domination.max(dom);
    }
    rec.metric("worst sup-norm ratio", worst);
    rec.metric("worst domination ratio", worst_domination);
    Ok(())
}

fn torsion_linf(_: &Suite, rec: &mut Recorder) -> Result<()> {
    let mut ratios = Vec::new();
    for r in [0.5, 1.0, 2.0] {
        let g = build_grid(2, 1.25 * r, 63)?;
        let pot = Shape::Disk { radius: r, center: [0.0; 2] }.to_potential(&g)?;
        let (lhs, rhs) = linf_torsion_bound_check(&torsion_function(&pot, CG_TOL)?.w);
        ratios.push(lhs / rhs);
    }
    rec.metric("disk ratios (R = 0.5, 1, 2)", &ratios);
    let spread = ratios.iter().copied().fold(0.0, f64::max) / ratios.iter().copied().fold(f64::INFINITY, f64::min) - 1.0;
    rec.at_most("disk ratio spread", spread, 1e-2);
    let (lhs, rhs) = linf_torsion_bound_check(&torsion_function(&interval()?, CG_TOL)?.w);
    let ratio = lhs / rhs;
    rec.metric("interval ratio", ratio);
    rec.require(ratio.is_finite() && ratio > 0.0, "interval ratio is not finite");
    Ok(())
}

fn resolvent_gap(s: &Suite, rec: &mut Recorder) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(s.config.seed ^ 0x6a);
    let g1 = build_grid(1, 1.0, 127)?;
    let iv = GeneralizedPotential::free(g1);
    let gd = build_grid(2, 1.25, 31)?;
    let disk = unit_disk(&gd)?;
    let osc = Shape::Oscillator { strength: 1.0 }.to_potential(&build_grid(1, 8.0, 255)?)?;
    let mut pairs = vec![
        ("interval ∨ B_0.8".to_string(), iv.clone(), iv.join_mask(&ball_nodes(&g1, [0.0; 2], 0.8))?),
        ("interval + 0.1".to_string(), iv.clone(), add_constant(&iv, 0.1)?),
        ("disk ∨ B_0.7".to_string(), disk.clone(), disk.join_mask(&ball_nodes(&gd, [0.0; 2], 0.7))?),
        ("disk + 1".to_string(), disk.clone(), add_constant(&disk, 1.0)?),
        (
            "oscillator ∨ B_3".to_string(),
            osc.clone(),
            osc.join_mask(&ball_nodes(osc.grid(), [0.0; 2], 3.0))?,
        ),
    ];
    for (i, d) in [1, 2, 1, 2, 2].into_iter().enumerate() {
        let pot = random_potential(d, 100 + i as u64)?;
        let g = *pot.grid();
        let l = g.half_width();
        let c = [l * (rng.random::<f64>() - 0.5), if d == 2 { l * (rng.random::<f64>() - 0.5) } else { 0.0 }];
        let nu = if i % 2 == 0 {
            add_field(&pot, &bump(g, c, 1.0).scale(2.0))?
        } else {
            pot.join_mask(&ball_nodes(&g, c, 0.8 * l))?
        };
        pairs.push((format!("random d={d} #{i}"), pot, nu));
    }
    for (name, mu, nu) in &pairs {
        let chk = resolvent_gap_check(mu, nu, 3, 1e-10)?;
        rec.metric(name.clone(), json!({ "lhs": chk.lhs_max, "rhs": chk.rhs, "gaps": chk.gaps }));
        rec.require(chk.holds, format!("{name}: gap {} exceeds {}", chk.lhs_max, chk.rhs));
    }
    rec.metric("pairs", pairs.len());
    Ok(())
}

fn halfspace_cut(_: &Suite, rec: &mut Recorder) -> Result<()> {
    let disk = unit_disk(&build_grid(2, 1.25, 63)?)?;
    let box1 = GeneralizedPotential::constant(build_grid(2, 4.0, 63)?, 1.0)?;
    let iv = Shape::Interval { radius: 1.0, center: [0.0; 2] }.to_potential(&build_grid(1, 2.0, 255)?)?;
    let mut cuts = Vec::new();
    for t in [0.0, 0.25, 0.5, 0.75] {
        cuts.push(("unit disk", disk.clone(), t));
    }
    for t in [0.0, 1.0, 2.0] {
        cuts.push(("V ≡ 1 box", box1.clone(), t));
    }
    for t in [0.0, 0.5] {
        cuts.push(("interval", iv.clone(), t));
    }
    cuts.push(("random d=2 #10", random_potential(2, 10)?, 0.0));
    cuts.push(("random d=2 #11", random_potential(2, 11)?, 0.5));
    cuts.push(("random d=1 #12", random_potential(1, 12)?, -0.5));
    for (name, pot, t) in &cuts {
        let c = halfspace_cut_check(pot, *t, CG_TOL)?;
        let key = format!("{name}, t = {t}");
        rec.metric(key.clone(), json!({ "lhs": c.lhs, "rhs": c.rhs }));
        rec.require(c.holds, format!("{key}: {} > {}", c.lhs, c.rhs));
    }
    rec.metric("cuts", cuts.len());
    Ok(())
}

fn truncation(_: &Suite, rec: &mut Recorder) -> Result<()> {
    let g = build_grid(2, 8.0, 63)?;
    let edge = g.half_width() * std::f64::consts::SQRT_2;
    let mut calibration = Vec::new();
    for rho in [3.0, 4.0, 5.0] {
        let disk = Shape::Disk { radius: rho, center: [0.0; 2] }.to_potential(&g)?;
        for (r1, r2) in [(1.5, Some(2.5)), (2.0, Some(4.0)), (2.0, None), (3.0, None)] {
            calibration.push((disk.clone(), r1, r2));
        }
    }
    let c = calibrate_truncation_constant(&calibration, CG_TOL)?;
    rec.metric("fitted constant", c);

    let box1 = GeneralizedPotential::constant(g, 1.0)?;
    let mut family: Vec<(String, GeneralizedPotential, f64, Option<f64>)> = Vec::new();
    for r1 in [2.0, 3.0, 4.0] {
        family.push((format!("V ≡ 1, R1 = {r1}, R2 = edge"), box1.clone(), r1, None));
        family.push((format!("V ≡ 1, R1 = {r1}, R2 = {}", 2.0 * r1), box1.clone(), r1, Some(2.0 * r1)));
    }
    let wells = GeneralizedPotential::from_fn(g, |[x, y]| {
        0.2 + 3.0 * (1.0 - (-((x - 2.0).powi(2) + y * y) / 2.0).exp()) * (1.0 - (-((x + 2.0).powi(2) + y * y) / 2.0).exp())
    })?;
    for (r1, r2) in [(1.5, None), (2.5, Some(5.0)), (3.5, None)] {
        family.push((format!("double well, R1 = {r1}, R2 = {r2:?}"), wells.clone(), r1, r2));
    }
    let inner = box1.join_mask(&ball_nodes(&g, [0.0; 2], 1.0))?;
    family.push(("masked outside B_1, R1 = 2".into(), inner, 2.0, None));
    for (name, pot, r1, r2) in &family {
        let chk = truncation_distance_check(pot, *r1, *r2, c, CG_TOL)?;
        rec.metric(name.clone(), json!({ "lhs": chk.lhs, "tail": chk.tail_mass, "rhs": chk.rhs }));
        rec.require(chk.holds, format!("{name}: {} > {}", chk.lhs, chk.rhs));
    }
    let contained = truncation_distance_check(&family.last().expect("family").1, 2.0, None, c, CG_TOL)?;
    rec.at_most("contained support: lhs", contained.lhs, 1e-12);

    let cut: Vec<f64> = [2.0, 3.0, 4.0, 6.0, edge]
        .iter()
        .map(|&r1| Ok(truncation_distance_check(&box1, r1, None, c, CG_TOL)?.lhs))
        .collect::<Result<_>>()?;
    rec.metric("V ≡ 1: lhs for R1 = 2, 3, 4, 6, edge", &cut);
    rec.require(cut.windows(2).all(|w| w[1] < w[0] || w[0] == 0.0), "cut distance is not decreasing in R1");
    rec.at_most("V ≡ 1: lhs at the box edge", cut[cut.len() - 1], 1e-12);
    Ok(())
}

fn resolvent(_: &Suite, rec: &mut Recorder) -> Result<()> {
    let g = build_grid(2, 4.0, 31)?;
    let d = g.dim() as f64;
    let pot = GeneralizedPotential::constant(g, 0.5)?;
    let base = eigs(&pot, 3, EIG_TOL)?;
    let radii = [1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 5.0];
    let mut ratios = Vec::new();
    let mut drift = Vec::new();
    for r in radii {
        let nu = pot.join_mask(&ball_nodes(&g, [0.0; 2], r))?;
        let rd = resolvent_distance(&pot, &nu, 1e-6)?;
        let dg = gamma_distance(&pot, &nu, CG_TOL)?;
        let spec = eigs(&nu, 3, EIG_TOL)?;
        let gap = base
            .resolvent_eigenvalues()
            .iter()
            .zip(spec.resolvent_eigenvalues())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        rec.metric(format!("R = {r}"), json!({ "resolvent_distance": rd, "d_gamma": dg, "eigen_gap": gap }));
        rec.require(rd >= gap - 1e-6, format!("R = {r}: ‖R_μ - R_ν‖ = {rd} below the eigenvalue gap {gap}"));
        ratios.push(rd / dg.powf(1.0 / d));
        drift.push((spec.lambda(1) - base.lambda(1)).abs());
    }
    let fitted = ratios[..radii.len() / 2].iter().copied().fold(0.0, f64::max);
    rec.metric("ratios", &ratios);
    rec.metric("fitted constant", fitted);
    for (r, q) in radii.iter().zip(&ratios) {
        rec.require(*q <= 5.0 * fitted, format!("R = {r}: ratio {q} exceeds five times the fitted {fitted}"));
    }
    rec.metric("|λ_1(ν_R) - λ_1(μ)|", &drift);
    rec.require(
        drift.windows(2).all(|w| w[1] <= w[0] + 1e-8),
        "λ_1 along the truncation family does not approach λ_1(μ) monotonically",
    );
    Ok(())
}

fn cc(_: &Suite, rec: &mut Recorder) -> Result<()> {
    let eps = 0.05;
    let mut correct = 0;
    let seqs = cc_sequences()?;
    for seq in &seqs {
        let opts = CcOptions::new(seq.radius, eps);
        let v = cc_classify(&seq.fields, &opts)?;
        let shifted: Vec<ScalarField> = seq.fields.iter().map(|f| f.shifted(seq.shift)).collect();
        let lost = seq
            .fields
            .iter()
            .zip(&shifted)
            .map(|(a, b)| (a.integrate() - b.integrate()).abs() / a.integrate())
            .fold(0.0, f64::max);
        let vs = cc_classify(&shifted, &opts)?;
        rec.metric(
            seq.name,
            json!({
                "expected": seq.expected,
                "label": v.label,
                "shifted_label": vs.label,
                "max_ball_fraction": v.max_ball_fraction,
                "mass_fractions": v.mass_fractions,
            }),
        );
        rec.require(lost < 1e-12, format!("{}: the shift moved mass out of the box", seq.name));
        rec.require(v.label == seq.expected, format!("{}: labelled {:?}, expected {:?}", seq.name, v.label, seq.expected));
        rec.require(vs.label == v.label, format!("{}: translation changed the label to {:?}", seq.name, vs.label));
        if v.label == seq.expected && vs.label == v.label {
            correct += 1;
        }
    }
    rec.metric("correct", correct);
    rec.metric("sequences", seqs.len());
    Ok(())
}

fn faber_krahn(s: &Suite, rec: &mut Recorder) -> Result<()> {
    let runs = s.faber_krahn_runs()?;
    let lambdas: Vec<f64> = runs.iter().map(|r| r.objective).collect();
    let lo = lambdas.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = lambdas.iter().copied().fold(0.0, f64::max);
    rec.metric("lambda1 per seed", &lambdas);
    rec.at_most("seed spread", (hi - lo) / lo, 1e-4);
    rec.close("fine-grid reference", lambdas[0], s.oracles().faber_krahn_lambda1, 1e-3);
    for (i, r) in runs.iter().enumerate() {
        let pot = &r.final_potential;
        let l = pot.grid().half_width();
        let spec = eigs(pot, 1, EIG_TOL)?;
        let u = &spec.eigenfunctions[0];
        let res = fixed_point_residual(pot, u, 0.5);
        rec.at_most(&format!("seed {i}: residual relative to ‖V‖_∞"), res.relative_to_potential, 1e-6);
        rec.at_most(&format!("seed {i}: residual relative to the constant"), res.relative_to_constant, 1e-6);
        rec.at_most(&format!("seed {i}: |∫ V^(-p) - 1|"), (pot.inverse_power_mass(0.5) - 1.0).abs(), 1e-8);
        rec.at_most(&format!("seed {i}: radial monotonicity defect"), radial_monotonicity_defect(u), 1e-3);
        rec.at_most(&format!("seed {i}: support radius"), r.support_radius, 0.9 * l);
        let w = torsion_function(pot, CG_TOL)?.w;
        for dir in [[1.0, 0.0], [-1.0, 0.0]] {
            let t = vanishing_point(&halfline_mass_profile(&w, dir), 1e-10);
            rec.metric(format!("seed {i}: φ vanishes at t (direction {})", dir[0]), t);
            rec.require(
                t.is_some_and(|t| t < 0.9 * l),
                format!("seed {i}: half-line mass does not vanish inside 0.9 L (direction {})", dir[0]),
            );
        }
        rec.require(r.converged, format!("seed {i}: not converged"));
        rec.require(r.is_monotone(1e-12), format!("seed {i}: objective trace increases"));
        rec.metric(format!("seed {i}: iterations"), r.iterations);
    }
    Ok(())
}

fn kohler_jobin(s: &Suite, rec: &mut Recorder) -> Result<()> {
    let g = disk_grid()?;
    let shapes = [
        Shape::Disk { radius: 1.0, center: [0.0; 2] },
        Shape::Square { half_side: 0.9 },
        Shape::Rectangle { half_x: 1.1, half_y: 0.55 },
        Shape::Ellipse { a: 1.1, b: 1.1 / 1.5 },
    ];
    let mut merits = Vec::new();
    for shape in &shapes {
        let pot = shape.to_potential(&g)?;
        let l = eigs(&pot, 1, EIG_TOL)?.lambda(1);
        let p = torsion_function(&pot, CG_TOL)?.torsion;
        let m = crate::optimize::torsion_merit(l, p, 2);
        rec.metric(format!("{} merit", shape.name()), m);
        merits.push(m);
    }
    rec.require(
        merits[1..].iter().all(|m| *m > merits[0]),
        "the disk does not have the smallest λ_1 P^{1/2}",
    );
    rec.close("disk merit", merits[0], s.oracles().disk_merit, 2e-2);

    let r = s.spectral_torsion_run()?;
    let w = torsion_function(&r.final_potential, CG_TOL)?.w;
    let iso = isoperimetric_ratio(&w);
    rec.at_most("optimizer isoperimetric ratio", iso, 1.05);
    let l = r.final_potential.grid().half_width();
    rec.at_most("optimizer support radius", r.support_radius, 0.9 * l);
    let witness = w.centroid().and_then(|c| ball_witness(&r.final_potential, c));
    rec.metric("ball witness radius", witness);
    rec.require(witness.is_some(), "no ball B_R with I_{B_R} ≺ μ inside the box");
    rec.metric("domain indicator", domain_indicator(&r.final_potential));
    rec.metric("objective", r.objective);
    rec.require(r.converged, "spectral torsion optimizer did not converge");
    Ok(())
}

fn audits(s: &Suite, rec: &mut Recorder) -> Result<()> {
    let mut outputs: Vec<(String, OptReport)> = s
        .faber_krahn_runs()?
        .into_iter()
        .enumerate()
        .map(|(i, r)| (format!("lambda1 potential, seed {i}"), r))
        .collect();
    let k2 = s.second_eigenvalue_run()?;
    rec.at_most("lambda2 potential: KKT residual", k2.kkt_residual, 1e-4);
    rec.at_most("lambda2 potential: support radius", k2.support_radius, 0.9 * k2.final_potential.grid().half_width());
    outputs.push(("lambda2 potential".into(), k2));
    let st = s.spectral_torsion_run()?;
    rec.at_most("spectral torsion: stationarity residual", st.kkt_residual, 1e-3);
    outputs.push(("spectral torsion".into(), st));
    for (name, r) in &outputs {
        match &r.audit {
            Some(a) => {
                rec.metric(
                    format!("{name}: worst violation"),
                    json!({ "worst": a.worst_violation, "trials": a.trials.len(), "tol": a.tol }),
                );
                rec.require(
                    a.passed && a.tol <= 1e-6,
                    format!("{name}: audit violation {} below -{}", a.worst_violation, a.tol),
                );
            }
            None => rec.require(false, format!("{name}: no audit attached")),
        }
    }
    Ok(())
}

/// Central difference of `f` along `φ` against `analytic`.
fn directional(
    pot: &GeneralizedPotential,
    phi: &ScalarField,
    eps: f64,
    f: impl Fn(&GeneralizedPotential) -> Result<f64>,
) -> Result<f64> {
    let plus = add_field(pot, &phi.scale(eps))?;
    let minus = add_field(pot, &phi.scale(-eps))?;
    Ok((f(&plus)? - f(&minus)?) / (2.0 * eps))
}

fn gradients(s: &Suite, rec: &mut Recorder) -> Result<()> {
    let eps = 1e-5;
    let (m, p) = (1.0, 0.5);
    let pot = random_potential(2, 20)?;
    let g = *pot.grid();
    let spec: Spectrum = eigs(&pot, 3, EIG_TOL)?;
    let w = torsion_function(&pot, CG_TOL)?.w;
    rec.metric("eigenvalues", &spec.eigenvalues);
    let u1sq = spec.eigenfunctions[0].map(|x| x * x);
    let u2sq = spec.eigenfunctions[1].map(|x| x * x);
    let torsion_grad = crate::optimize::spectral_torsion_gradient(&spec, &w, 1, m, 1e-6);
    let mass_grad = u2sq.zip_with(&pot.vfin_field(), |a, v| a - m * p * v.powf(-p - 1.0))?;
    let lambda = |k: usize| move |q: &GeneralizedPotential| Ok(eigs(q, k, EIG_TOL)?.lambda(k));
    let mut rng = ChaCha8Rng::seed_from_u64(s.config.seed ^ 0x9d);
    let mut worst: f64 = 0.0;
    for i in 0..5 {
        let c = [3.0 * rng.random::<f64>() - 1.5, 3.0 * rng.random::<f64>() - 1.5];
        let phi = bump(g, c, 0.6 + 0.6 * rng.random::<f64>());
        let cases: [(&str, f64, f64); 3] = [
            ("λ_1", u1sq.inner(&phi)?, directional(&pot, &phi, eps, lambda(1))?),
            (
                "λ_1 + m P",
                torsion_grad.inner(&phi)?,
                directional(&pot, &phi, eps, |q| {
                    Ok(eigs(q, 1, EIG_TOL)?.lambda(1) + m * torsion_function(q, CG_TOL)?.torsion)
                })?,
            ),
            (
                "λ_2 + m ∫V^(-p)",
                mass_grad.inner(&phi)?,
                directional(&pot, &phi, eps, |q| Ok(eigs(q, 2, EIG_TOL)?.lambda(2) + m * q.inverse_power_mass(p)))?,
            ),
        ];
        for (name, analytic, fd) in cases {
            let err = (fd - analytic).abs() / analytic.abs();
            worst = worst.max(err);
            rec.metric(
                format!("direction {i}, {name}"),
                json!({ "analytic": analytic, "finite_difference": fd, "relative_error": err }),
            );
            rec.require(err <= 1e-2, format!("direction {i}, {name}: relative error {err:.3e}"));
        }
    }
    rec.metric("worst relative error", worst);
    Ok(())
}

fn dichotomy_spectrum(_: &Suite, rec: &mut Recorder) -> Result<()> {
    let g2 = build_grid(2, 4.0, 63)?;
    let g1 = build_grid(1, 6.0, 255)?;
    let well = |shape: Shape, grid, v: f64| -> Result<GeneralizedPotential> {
        let pot = shape.to_potential(&grid)?;
        add_constant(&pot, v)
    };
    let pairs = [
        (
            "two disks",
            well(Shape::Disk { radius: 0.6, center: [-2.0, 0.0] }, g2, 1.0)?,
            well(Shape::Disk { radius: 0.45, center: [2.0, 0.5] }, g2, 2.0)?,
        ),
        (
            "two intervals",
            well(Shape::Interval { radius: 0.5, center: [-3.0, 0.0] }, g1, 0.0)?,
            well(Shape::Interval { radius: 0.3, center: [3.0, 0.0] }, g1, 5.0)?,
        ),
    ];
    let k = 6;
    for (name, a, b) in &pairs {
        let (wa, wb) = (torsion_function(a, CG_TOL)?.w, torsion_function(b, CG_TOL)?.w);
        let (ra, rb) = (support_radius(&wa, None), support_radius(&wb, None));
        let (ca, cb) = (wa.centroid().expect("mass"), wb.centroid().expect("mass"));
        let gap = (ca[0] - cb[0]).hypot(ca[1] - cb[1]) - ra - rb;
        rec.metric(format!("{name}: separation / support radius"), gap / ra.max(rb));
        rec.require(gap >= 4.0 * ra.max(rb), format!("{name}: wells closer than four support radii"));
        let merged = eigs(&a.wedge(b)?, k, EIG_TOL)?;
        let mut union: Vec<f64> = eigs(a, k, EIG_TOL)?.eigenvalues;
        union.extend(eigs(b, k, EIG_TOL)?.eigenvalues);
        union.sort_by(f64::total_cmp);
        let err = merged
            .eigenvalues
            .iter()
            .zip(&union)
            .map(|(x, y)| (x - y).abs() / y)
            .fold(0.0, f64::max);
        rec.metric(format!("{name}: merged"), &merged.eigenvalues);
        rec.metric(format!("{name}: union"), &union[..k]);
        rec.at_most(&format!("{name}: max relative error"), err, 1e-6);
    }
    Ok(())
}
