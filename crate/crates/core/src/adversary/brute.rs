//! Exhaustive grid search over small prover unitaries.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};

use super::engine::Engine;
use super::Limits;
use crate::error::{Error, Result};
use crate::linalg::{self, gates, Matrix, C64, ONE};
use crate::protocol::{validate_verifier, VerifierSpec};
use crate::simulate::CoinMode;
use crate::tolerance::Tolerances;
#[allow(unused_imports)]
use num_traits::Float;

#[derive(Debug, Clone)]
pub struct BruteForceConfig {
    /// Angle step of the grid.
    pub resolution: f64,
    pub prover_dims: Vec<usize>,
    /// Refuse grids with more points than this.
    pub max_points: u64,
    pub limits: Limits,
}

impl BruteForceConfig {
    pub fn new(prover_dims: Vec<usize>, resolution: f64) -> Self {
        Self {
            resolution,
            prover_dims,
            max_points: 20_000_000,
            limits: Limits::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BruteForceResult {
    pub value: f64,
    pub points: u64,
}

/// Parameterized family used for one prover turn.
#[derive(Debug, Clone, Copy)]
enum Family {
    /// `Rz(φ) Ry(θ) Rz(λ)` on a lone message qubit.
    Euler,
    /// Reads the message qubit into a rotation of the private qubit, then swaps:
    /// `SWAP · (Ry(a) ⊗ |0⟩⟨0| + Ry(b) ⊗ |1⟩⟨1|)`. On a prover's first turn
    /// `a` is fixed to 0, since `Ry(a)` on the private qubit can be folded into
    /// the optimized shared state.
    Measure { first: bool },
    /// `Ry(a) ⊗ Ry(b)` on two message qubits.
    Product,
}

impl Family {
    fn axes(self, steps: usize, half: usize) -> Vec<usize> {
        match self {
            Family::Euler => vec![half, steps, steps],
            Family::Measure { first: true } => vec![steps],
            Family::Measure { first: false } | Family::Product => vec![steps, steps],
        }
    }

    fn matrix(self, angles: &[f64]) -> Matrix {
        match self {
            Family::Euler => gates::euler(angles[0], angles[1], angles[2]),
            Family::Measure { first } => {
                let (a, b) = if first { (0.0, angles[0]) } else { (angles[0], angles[1]) };
                // Local order: private qubit most significant, then message.
                let mut m = Matrix::zeros(4, 4);
                let (ra, rb) = (gates::ry(a), gates::ry(b));
                for p_out in 0..2 {
                    for p_in in 0..2 {
                        m[(p_out * 2, p_in * 2)] = ra[(p_out, p_in)];
                        m[(p_out * 2 + 1, p_in * 2 + 1)] = rb[(p_out, p_in)];
                    }
                }
                let mut swap = Matrix::zeros(4, 4);
                swap[(0, 0)] = ONE;
                swap[(1, 2)] = ONE;
                swap[(2, 1)] = ONE;
                swap[(3, 3)] = ONE;
                swap * m
            }
            Family::Product => gates::kron(&gates::ry(angles[0]), &gates::ry(angles[1])),
        }
    }
}

/// Best acceptance over a grid of prover unitaries, with the shared state
/// optimized exactly at every grid point. Each point is an actual strategy,
/// so the result never exceeds the optimum at these dimensions.
pub fn brute_force_value(verifier: &VerifierSpec, cfg: &BruteForceConfig) -> Result<BruteForceResult> {
    let violations = validate_verifier(verifier, &Tolerances::default());
    if !violations.is_empty() {
        return Err(crate::error::Error::Invalid(violations));
    }
    if !(cfg.resolution > 0.0 && cfg.resolution <= PI) {
        return Err(Error::Precondition("grid resolution must lie in (0, π]".into()));
    }
    let engine = Engine::new(verifier, &cfg.prover_dims, None, CoinMode::Purify, &cfg.limits.budget())?;
    let steps = (TAU / cfg.resolution).round() as usize;
    let half = (PI / cfg.resolution).round() as usize + 1;

    let mut families = Vec::new();
    for slot in &engine.slots {
        let fam = match (slot.private, slot.message) {
            (0, 1) => Family::Euler,
            (1, 1) => Family::Measure {
                first: slot.turn == 0,
            },
            (0, 2) => Family::Product,
            (p, q) => {
                return Err(Error::Budget(format!(
                    "prover {} turn acts on {} qubits; the grid covers at most 2",
                    slot.prover + 1,
                    p + q
                )))
            }
        };
        families.push(fam);
    }
    let axes: Vec<(usize, usize, f64)> = families
        .iter()
        .enumerate()
        .flat_map(|(s, f)| {
            f.axes(steps, half)
                .into_iter()
                .map(move |n| (s, n, cfg.resolution))
        })
        .collect();
    let mut points: u64 = 1;
    for &(_, n, _) in &axes {
        points = points.saturating_mul(n as u64);
    }
    if points > cfg.max_points {
        return Err(Error::Budget(format!(
            "grid has {points} points, limit {}",
            cfg.max_points
        )));
    }

    let width: usize = cfg.prover_dims.iter().sum();
    let one = [C64::from(1.0)];
    let mut counter = vec![0usize; axes.len()];
    let mut best = f64::NEG_INFINITY;
    let mut us: Vec<Matrix> = families
        .iter()
        .map(|f| f.matrix(&[0.0, 0.0, 0.0][..f.axes(steps, half).len()]))
        .collect();
    let slot_axes: Vec<Vec<usize>> = (0..families.len())
        .map(|s| (0..axes.len()).filter(|&a| axes[a].0 == s).collect())
        .collect();
    loop {
        for (s, f) in families.iter().enumerate() {
            let angles: Vec<f64> = slot_axes[s]
                .iter()
                .map(|&a| counter[a] as f64 * axes[a].2)
                .collect();
            us[s] = f.matrix(&angles);
        }
        let kernels = engine.kernels(&us);
        let a = engine.shared_operator(&kernels, &one, width, &one);
        let value = if a.nrows() == 1 {
            a[(0, 0)].re
        } else {
            linalg::max_eigenpair(&a, 1e-8)?.value
        };
        if value > best {
            best = value;
        }
        // Odometer step.
        let mut k = 0;
        loop {
            if k == counter.len() {
                return Ok(BruteForceResult {
                    value: best.clamp(0.0, 1.0),
                    points,
                });
            }
            counter[k] += 1;
            if counter[k] < axes[k].1 {
                break;
            }
            counter[k] = 0;
            k += 1;
        }
    }
}
