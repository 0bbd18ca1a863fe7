//! Dishonest provers: exact optimal shared states, see-saw search and grid search.

mod brute;
mod engine;

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, Vector, C64};
use crate::protocol::{prover_layout, validate_verifier, Claims, ProtocolInstance, ProverStrategy, VerifierSpec};
use crate::simulate::{run, CoinMode, RunOptions};
use crate::state::StateVector;
use crate::tolerance::Tolerances;

pub use brute::{brute_force_value, BruteForceConfig, BruteForceResult};
use engine::{kron, Budget, Engine};

/// Size limits for the dense optimizers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Limits {
    pub max_qubits: usize,
    pub max_branches: usize,
    pub max_shared_dim: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Self {
            max_qubits: 22,
            max_branches: 1 << 10,
            max_shared_dim: 1 << 10,
        }
    }
}

impl Limits {
    fn budget(&self) -> Budget {
        Budget {
            max_qubits: self.max_qubits,
            max_branches: self.max_branches,
            max_shared_dim: self.max_shared_dim,
        }
    }
}

/// Best shared state for fixed prover circuits.
#[derive(Debug, Clone)]
pub struct SharedOptimum {
    pub value: f64,
    pub state: StateVector,
}

/// Maximizes acceptance over the shared state with the prover circuits fixed:
/// the top eigenpair of the operator `A` on the prover registers with
/// `⟨Φ|A|Φ⟩` equal to the acceptance probability.
pub fn optimal_shared_state(verifier: &VerifierSpec, provers: &[ProverStrategy]) -> Result<SharedOptimum> {
    optimal_shared_state_with(verifier, provers, &Limits::default())
}

pub fn optimal_shared_state_with(
    verifier: &VerifierSpec,
    provers: &[ProverStrategy],
    limits: &Limits,
) -> Result<SharedOptimum> {
    let dims: Vec<usize> = provers.iter().map(|p| p.private_qubits).collect();
    let engine = Engine::new(verifier, &dims, Some(provers), CoinMode::Purify, &limits.budget())?;
    let width = dims.iter().sum();
    let one = [C64::from(1.0)];
    let a = engine.shared_operator(&[], &one, width, &one);
    let pair = linalg::max_eigenpair(&a, 1e-9)?;
    let shared: Vec<C64> = pair.vector.iter().copied().collect();
    let check = engine.value(&[], &shared);
    if (check - pair.value).abs() > 1e-9 {
        return Err(Error::Numerical(format!(
            "eigenvalue {} and re-simulated value {check} disagree",
            pair.value
        )));
    }
    Ok(SharedOptimum {
        value: pair.value.clamp(0.0, 1.0),
        state: StateVector::from_vector(prover_layout(&dims)?, &pair.vector, 1e-9)?,
    })
}

#[derive(Debug, Clone)]
pub struct SeesawConfig {
    pub restarts: usize,
    pub max_sweeps: usize,
    pub convergence_tol: f64,
    /// Private qubits of each dishonest prover.
    pub prover_dims: Vec<usize>,
    pub seed: u64,
    /// Polar updates applied to a unitary each time it is visited.
    pub inner_iterations: usize,
    pub coin_mode: CoinMode,
    /// Restricts the shared state to a product over consecutive groups of
    /// provers with the given sizes.
    pub state_groups: Option<Vec<usize>>,
    pub limits: Limits,
}

impl SeesawConfig {
    pub fn new(prover_dims: Vec<usize>) -> Self {
        Self {
            restarts: 10,
            max_sweeps: 200,
            convergence_tol: 1e-10,
            prover_dims,
            seed: 0,
            inner_iterations: 3,
            coin_mode: CoinMode::Purify,
            state_groups: None,
            limits: Limits::default(),
        }
    }
}

/// Outcome of a see-saw search.
#[derive(Debug, Clone)]
pub struct AdversaryResult {
    pub value: f64,
    pub strategies: Vec<ProverStrategy>,
    pub shared: StateVector,
    /// Value after each sweep of the winning restart.
    pub trace: Vec<f64>,
    pub best_restart: usize,
    pub restart_values: Vec<f64>,
    /// Whether the winning restart stopped on the improvement threshold.
    pub converged: bool,
}

impl AdversaryResult {
    /// The instance formed by the verifier and the strategies found.
    pub fn instance(&self, verifier: &VerifierSpec) -> ProtocolInstance {
        ProtocolInstance {
            verifier: verifier.clone(),
            provers: self.strategies.clone(),
            shared: self.shared.clone(),
            claims: Claims::default(),
        }
    }
}

struct Groups {
    /// (first prover qubit, width) per group, low groups first.
    spans: Vec<(usize, usize)>,
}

impl Groups {
    fn new(dims: &[usize], groups: Option<&[usize]>) -> Result<Groups> {
        let sizes: Vec<usize> = match groups {
            Some(g) => g.to_vec(),
            None => vec![dims.len()],
        };
        if sizes.iter().sum::<usize>() != dims.len() || sizes.contains(&0) {
            return Err(Error::Precondition(format!(
                "state groups {sizes:?} do not partition {} provers",
                dims.len()
            )));
        }
        let mut spans = Vec::new();
        let (mut prover, mut qubit) = (0, 0);
        for s in sizes {
            let width: usize = dims[prover..prover + s].iter().sum();
            spans.push((qubit, width));
            prover += s;
            qubit += width;
        }
        Ok(Groups { spans })
    }

    fn combine(parts: &[Vec<C64>]) -> Vec<C64> {
        parts
            .iter()
            .fold(vec![C64::from(1.0)], |acc, p| kron(&acc, p))
    }
}

/// Alternating maximization over prover unitaries and the shared state.
///
/// Acceptance is quadratic in each unitary `U`; every update maximizes the
/// tangent lower bound `2 Re tr(U† E) − const` at the current point, whose
/// maximizer is the polar factor of `E`. Each update therefore never lowers
/// the value, and a fixed point is a best response.
pub fn seesaw(verifier: &VerifierSpec, cfg: &SeesawConfig) -> Result<AdversaryResult> {
    if cfg.restarts == 0 || cfg.convergence_tol <= 0.0 || cfg.max_sweeps == 0 {
        return Err(Error::Precondition(
            "see-saw needs restarts ≥ 1, max_sweeps ≥ 1 and a positive tolerance".into(),
        ));
    }
    let violations = validate_verifier(verifier, &Tolerances::default());
    if !violations.is_empty() {
        return Err(Error::Invalid(violations));
    }
    let engine = Engine::new(verifier, &cfg.prover_dims, None, cfg.coin_mode, &cfg.limits.budget())?;
    let groups = Groups::new(&cfg.prover_dims, cfg.state_groups.as_deref())?;

    let mut best: Option<(f64, usize, Vec<Matrix>, Vec<C64>, Vec<f64>, bool)> = None;
    let mut restart_values = Vec::with_capacity(cfg.restarts);
    for r in 0..cfg.restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(r as u64);
        let mut us: Vec<Matrix> = engine
            .slots
            .iter()
            .map(|s| linalg::haar_unitary(s.dim(), &mut rng))
            .collect();
        let mut parts: Vec<Vec<C64>> = groups
            .spans
            .iter()
            .map(|&(_, w)| linalg::random_state(1 << w, &mut rng).iter().copied().collect())
            .collect();
        let mut kernels = engine.kernels(&us);
        let mut prev = engine.value(&kernels, &Groups::combine(&parts));
        let mut trace = Vec::new();
        let mut converged = false;
        for _ in 0..cfg.max_sweeps {
            for g in 0..parts.len() {
                let low = Groups::combine(&parts[..g]);
                let high = Groups::combine(&parts[g + 1..]);
                let a = engine.shared_operator(&kernels, &low, groups.spans[g].1, &high);
                let pair = linalg::max_eigenpair(&a, 1e-8)?;
                parts[g] = pair.vector.iter().copied().collect();
            }
            let shared = Groups::combine(&parts);
            for s in 0..engine.slots.len() {
                for _ in 0..cfg.inner_iterations.max(1) {
                    let e = engine.environment(&kernels, &shared, s);
                    us[s] = linalg::polar_unitary(&e);
                    kernels = engine.kernels(&us);
                }
            }
            let v = engine.value(&kernels, &shared);
            trace.push(v);
            if v - prev < cfg.convergence_tol {
                converged = true;
                break;
            }
            prev = v;
        }
        let value = *trace.last().expect("at least one sweep");
        restart_values.push(value);
        if best.as_ref().is_none_or(|b| value > b.0) {
            best = Some((value, r, us, Groups::combine(&parts), trace, converged));
        }
    }
    let (value, best_restart, us, shared, trace, converged) = best.expect("at least one restart");
    let layout = prover_layout(&cfg.prover_dims)?;
    let shared = StateVector::from_vector(layout, &Vector::from_vec(shared), 1e-8)?;
    let result = AdversaryResult {
        value,
        strategies: engine.strategies(verifier, &us),
        shared,
        trace,
        best_restart,
        restart_values,
        converged,
    };
    let opts = RunOptions {
        coin_mode: if verifier.coin_count() <= 10 {
            CoinMode::Enumerate
        } else {
            CoinMode::Purify
        },
        ..RunOptions::default()
    };
    let check = run(&result.instance(verifier), &opts)?.acceptance;
    if (check - value).abs() > 1e-9 {
        return Err(Error::Numerical(format!(
            "see-saw value {value} but re-simulation gives {check}"
        )));
    }
    Ok(result)
}
