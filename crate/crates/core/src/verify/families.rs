//! Deterministic instance families shared by the verification checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::grid::shapes::{ball_nodes, Shape};
use crate::grid::{build_grid, GeneralizedPotential, GridSpec, ScalarField};

/// A seeded potential: a positive background plus three Gaussian wells or
/// bumps, confined to a random ball for odd seeds. One dimension uses
/// `L = 4, n = 127`; two dimensions use `L = 3, n = 31`.
pub fn random_potential(d: usize, seed: u64) -> Result<GeneralizedPotential> {
    let grid = if d == 1 { build_grid(1, 4.0, 127)? } else { build_grid(2, 3.0, 31)? };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let l = grid.half_width();
    let base = 0.05 + rng.random::<f64>();
    let mut wells = Vec::new();
    for _ in 0..3 {
        let amp = 5.0 * rng.random::<f64>();
        let c = [l * (rng.random::<f64>() - 0.5), if d == 2 { l * (rng.random::<f64>() - 0.5) } else { 0.0 }];
        let s = 0.3 + 0.7 * rng.random::<f64>();
        wells.push((amp, c, s));
    }
    let pot = GeneralizedPotential::from_fn(grid, |[x, y]| {
        base + wells
            .iter()
            .map(|(a, c, s)| a * (-((x - c[0]).powi(2) + (y - c[1]).powi(2)) / (2.0 * s * s)).exp())
            .sum::<f64>()
    })?;
    if seed % 2 == 1 {
        let r = l * (0.5 + 0.5 * rng.random::<f64>());
        pot.join_mask(&ball_nodes(&grid, [0.0, 0.0], r))
    } else {
        Ok(pot)
    }
}

/// Ten seeded potentials, five per dimension.
pub fn random_family(seed: u64) -> Result<Vec<(String, GeneralizedPotential)>> {
    let mut out = Vec::new();
    for d in [1, 2] {
        for s in 0..5 {
            let seed = seed.wrapping_mul(1000).wrapping_add(10 * d as u64 + s);
            out.push((format!("random d={d} seed={seed}"), random_potential(d, seed)?));
        }
    }
    Ok(out)
}

pub fn interval_grid() -> Result<GridSpec> {
    build_grid(1, 1.0, 255)
}

pub fn disk_grid() -> Result<GridSpec> {
    build_grid(2, 1.25, 127)
}

pub fn oscillator_grid() -> Result<GridSpec> {
    build_grid(1, 8.0, 511)
}

/// The unit interval on the whole box `(-1, 1)`.
pub fn interval() -> Result<GeneralizedPotential> {
    Ok(GeneralizedPotential::free(interval_grid()?))
}

pub fn unit_disk(grid: &GridSpec) -> Result<GeneralizedPotential> {
    Shape::Disk { radius: 1.0, center: [0.0; 2] }.to_potential(grid)
}

pub fn oscillator() -> Result<GeneralizedPotential> {
    Shape::Oscillator { strength: 1.0 }.to_potential(&oscillator_grid()?)
}

/// Smooth compactly supported bump `(1 - |x - c|²/r²)²`.
pub fn bump(grid: GridSpec, center: [f64; 2], radius: f64) -> ScalarField {
    ScalarField::from_fn(grid, |[x, y]| {
        let s = ((x - center[0]).powi(2) + (y - center[1]).powi(2)) / (radius * radius);
        if s < 1.0 {
            (1.0 - s).powi(2)
        } else {
            0.0
        }
    })
}

/// A labelled sequence of nonnegative fields for the classifier.
pub struct CcSequence {
    pub name: &'static str,
    pub expected: crate::gamma::CCLabel,
    pub radius: f64,
    pub fields: Vec<ScalarField>,
    /// Lattice shift that keeps every support inside the box.
    pub shift: [isize; 2],
}

/// Three constructed sequences per trichotomy class, six fields each.
pub fn cc_sequences() -> Result<Vec<CcSequence>> {
    use crate::gamma::CCLabel::*;
    let g1 = build_grid(1, 40.0, 799)?;
    let g2 = build_grid(2, 12.0, 95)?;
    let steps = 1..=6;
    let mut out = Vec::new();

    out.push(CcSequence {
        name: "translating bump (2D)",
        expected: Concentration,
        radius: 1.0,
        fields: steps.clone().map(|n| bump(g2, [-5.0 + n as f64, 0.5 * n as f64 - 2.0], 0.8)).collect(),
        shift: [3, -2],
    });
    out.push(CcSequence {
        name: "narrowing bump (1D)",
        expected: Concentration,
        radius: 1.0,
        fields: steps
            .clone()
            .map(|n| bump(g1, [3.0, 0.0], 2.0 / n as f64).scale(n as f64))
            .collect(),
        shift: [10, 0],
    });
    out.push(CcSequence {
        name: "pulsating bump (2D)",
        expected: Concentration,
        radius: 1.0,
        fields: steps
            .clone()
            .map(|n| bump(g2, [1.0, -1.0], 0.5 + 0.1 * (n % 2) as f64).scale(1.0 + n as f64))
            .collect(),
        shift: [-4, 4],
    });

    out.push(CcSequence {
        name: "spreading bump (2D)",
        expected: Vanishing,
        radius: 0.5,
        fields: steps
            .clone()
            .map(|n| {
                let s = 1.6 * n as f64;
                bump(g2, [0.0; 2], s).scale(1.0 / (s * s))
            })
            .collect(),
        shift: [2, 2],
    });
    out.push(CcSequence {
        name: "spreading bump (1D)",
        expected: Vanishing,
        radius: 0.5,
        fields: steps
            .clone()
            .map(|n| {
                let s = (n * n) as f64;
                bump(g1, [0.0; 2], s).scale(1.0 / s)
            })
            .collect(),
        shift: [-5, 0],
    });
    out.push(CcSequence {
        name: "multiplying bumps (1D)",
        expected: Vanishing,
        radius: 0.5,
        fields: steps
            .clone()
            .map(|n| {
                let k = 2 * n * n;
                let mut f = ScalarField::zeros(g1);
                for i in 0..k {
                    let c = -30.0 + 60.0 * (i as f64 + 0.5) / k as f64;
                    f = f.add(&bump(g1, [c, 0.0], 0.4)).expect("same grid");
                }
                f.scale(1.0 / k as f64)
            })
            .collect(),
        shift: [4, 0],
    });

    out.push(CcSequence {
        name: "separating pair (2D)",
        expected: Dichotomy,
        radius: 1.0,
        fields: steps
            .clone()
            .map(|n| {
                let a = 2.0 + n as f64;
                bump(g2, [-0.5 * a, 0.0], 0.8).add(&bump(g2, [0.5 * a, 0.0], 0.8)).expect("same grid")
            })
            .collect(),
        shift: [0, 3],
    });
    out.push(CcSequence {
        name: "separating pair (1D)",
        expected: Dichotomy,
        radius: 1.0,
        fields: steps
            .clone()
            .map(|n| {
                let a = 4.0 * n as f64;
                bump(g1, [-0.5 * a, 0.0], 0.8).add(&bump(g1, [0.5 * a, 0.0], 0.8)).expect("same grid")
            })
            .collect(),
        shift: [-6, 0],
    });
    out.push(CcSequence {
        name: "unequal diagonal pair (2D)",
        expected: Dichotomy,
        radius: 1.0,
        fields: steps
            .map(|n| {
                let a = 0.4 * (2.0 + n as f64);
                bump(g2, [-a, -a], 0.8)
                    .scale(0.4)
                    .add(&bump(g2, [a, a], 0.8))
                    .expect("same grid")
            })
            .collect(),
        shift: [-2, 1],
    });
    Ok(out)
}
