//! Protocol-to-protocol compiler passes.
//!
//! Every pass takes an instance (verifier, honest provers, shared state) and
//! returns a new one together with a [`TransformReport`]. The claimed bounds in
//! a report are formulas evaluated on the input's claims; they are never used
//! to decide anything. Honest values are measured by simulation.

mod halve;
mod pipeline;
mod public_coin;
mod repetition;
mod rewind;

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::circuit::{q, Circuit, Gate, QubitRef};
use crate::error::{Error, Result};
use crate::protocol::{message_register, prover_register, validate, Claims, ProtocolInstance, ProverStrategy};
use crate::register::{fresh_name, Layout};
use crate::simulate::{run, CoinMode, RunOptions};
use crate::state::StateVector;
use crate::tolerance::Tolerances;

pub use halve::{halve_turns, parallelize_to_three, three_turn_target};
pub use pipeline::{run_pipeline, ComposedBounds, PipelineOutcome, STAGES};
pub use public_coin::{direct_two_turn, public_coin_shape, public_coin_to_one_round, to_public_coin_3turn, PublicCoinShape};
pub use repetition::{parallel_repetition_fresh_provers, sequential_repetition};
pub use rewind::{lift_to_rewindable, make_perfectly_rewindable, rewind_to_perfect_completeness, RewindPaths};

/// Fixed-dimension audits only find strategies; they cannot certify a bound.
pub const AUDIT_CAVEAT: &str =
    "soundness audits search strategies of fixed dimension and only show that no strategy exceeding the bound was found";

#[derive(Debug, Clone)]
pub struct TransformOptions {
    /// Check value preconditions and the honest value of the output.
    pub verify: bool,
    pub tolerances: Tolerances,
}

impl Default for TransformOptions {
    fn default() -> Self {
        Self {
            verify: true,
            tolerances: Tolerances::default(),
        }
    }
}

impl TransformOptions {
    /// Options that skip every value check, for lifting no-instances.
    pub fn unverified() -> Self {
        Self {
            verify: false,
            ..Self::default()
        }
    }
}

/// Size and honest value of one side of a pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Shape {
    pub provers: usize,
    pub turns: usize,
    pub message_qubits: usize,
    pub verifier_qubits: usize,
    pub total_qubits: usize,
    pub coins: usize,
    pub honest_value: f64,
}

impl Shape {
    fn of(inst: &ProtocolInstance, honest_value: f64) -> Self {
        Self {
            provers: inst.verifier.provers,
            turns: inst.verifier.turns,
            message_qubits: inst.verifier.message_size(),
            verifier_qubits: inst.verifier.verifier_qubits(),
            total_qubits: inst.total_qubits(),
            coins: inst.verifier.coin_count(),
            honest_value,
        }
    }
}

/// A claimed bound: the formula and its value on the input claims.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bound {
    pub formula: String,
    pub value: Option<f64>,
}

impl Bound {
    fn new(formula: &str, value: Option<f64>) -> Self {
        Self {
            formula: formula.to_string(),
            value,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformReport {
    pub pass: String,
    pub input: Shape,
    pub output: Shape,
    pub input_claims: Claims,
    pub completeness: Bound,
    pub soundness: Bound,
    pub registers_added: Vec<String>,
    /// Acceptance split of the rewinding verifier, when applicable.
    pub rewinding: Option<RewindPaths>,
    pub notes: Vec<String>,
}

impl TransformReport {
    /// The output claims implied by the evaluated formulas.
    pub fn claims(&self) -> Claims {
        Claims {
            completeness: self.completeness.value,
            soundness: self.soundness.value,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Transformed {
    pub instance: ProtocolInstance,
    pub report: TransformReport,
}

/// Honest acceptance, with coins purified so long protocols stay a single pass.
pub fn honest_value(inst: &ProtocolInstance, tol: &Tolerances) -> Result<f64> {
    let opts = RunOptions {
        coin_mode: CoinMode::Purify,
        tolerances: tol.clone(),
        ..RunOptions::default()
    };
    Ok(run(inst, &opts)?.acceptance)
}

fn require_valid(inst: &ProtocolInstance, tol: &Tolerances) -> Result<()> {
    let v = validate(inst, tol);
    if v.is_empty() {
        Ok(())
    } else {
        Err(Error::Invalid(v))
    }
}

/// Shared bookkeeping of a pass: measures both sides and assembles the report.
struct Pass {
    name: &'static str,
    input: ProtocolInstance,
    input_value: f64,
    registers_added: Vec<String>,
    notes: Vec<String>,
}

impl Pass {
    fn start(name: &'static str, inst: &ProtocolInstance, opts: &TransformOptions) -> Result<Pass> {
        require_valid(inst, &opts.tolerances)?;
        let input_value = honest_value(inst, &opts.tolerances)?;
        Ok(Pass {
            name,
            input: inst.clone(),
            input_value,
            registers_added: Vec::new(),
            notes: vec![AUDIT_CAVEAT.to_string()],
        })
    }

    /// Claimed completeness, falling back to the measured honest value.
    fn c(&self) -> f64 {
        self.input.claims.completeness.unwrap_or(self.input_value)
    }

    fn s(&self) -> Option<f64> {
        self.input.claims.soundness
    }

    fn note(&mut self, n: impl Into<String>) {
        self.notes.push(n.into());
    }

    fn finish(
        self,
        mut out: ProtocolInstance,
        completeness: Bound,
        soundness: Bound,
        expected: Option<f64>,
        opts: &TransformOptions,
    ) -> Result<Transformed> {
        out.claims = Claims {
            completeness: completeness.value,
            soundness: soundness.value,
        };
        require_valid(&out, &opts.tolerances)?;
        let value = honest_value(&out, &opts.tolerances)?;
        if opts.verify {
            if let Some(e) = expected {
                if (value - e).abs() > 1e-9 {
                    return Err(Error::Numerical(format!(
                        "{}: honest value {value:.12} differs from the expected {e:.12}",
                        self.name
                    )));
                }
            }
        }
        let report = TransformReport {
            pass: self.name.to_string(),
            input: Shape::of(&self.input, self.input_value),
            output: Shape::of(&out, value),
            input_claims: self.input.claims,
            completeness,
            soundness,
            registers_added: self.registers_added,
            rewinding: None,
            notes: self.notes,
        };
        Ok(Transformed { instance: out, report })
    }
}

/// Names already in use by an instance, message and prover names included.
fn taken_names(inst: &ProtocolInstance, extra_provers: usize) -> Vec<String> {
    let k = inst.verifier.provers + extra_provers;
    let mut names: Vec<String> = inst.verifier.registers.iter().map(|r| r.name.clone()).collect();
    for i in 0..k {
        names.push(message_register(i));
        names.push(prover_register(i));
    }
    names
}

fn fresh(taken: &mut Vec<String>, base: &str) -> String {
    let name = fresh_name(taken.iter().map(String::as_str), base);
    taken.push(name.clone());
    name
}

/// Every qubit of the verifier's registers followed by every message qubit.
fn open_qubits(inst: &ProtocolInstance) -> Vec<QubitRef> {
    let v = &inst.verifier;
    let mut out = v.verifier_qubit_refs();
    for i in 0..v.provers {
        out.extend(crate::circuit::qubits_of(&message_register(i), v.message_size()));
    }
    out
}

fn swap_all(a: &[QubitRef], b: &[QubitRef]) -> Circuit {
    a.iter()
        .zip(b)
        .map(|(x, y)| Gate::swap(x.clone(), y.clone()))
        .collect::<Vec<_>>()
        .into()
}

/// Moves a state to `layout` with qubit `j` sent to `map[j]`; the two layouts
/// must have the same total size when nothing is dropped.
fn place(state: &StateVector, layout: Layout, map: &[Option<usize>]) -> Result<StateVector> {
    state.relabel(layout, map, 1e-12)
}

/// Positions of `qubits` in `layout`, for use as relabel targets.
fn positions(layout: &Layout, qubits: impl IntoIterator<Item = QubitRef>) -> Result<Vec<usize>> {
    qubits.into_iter().map(|qb| layout.position(&qb)).collect()
}

fn prover_qubit(i: usize, j: usize) -> QubitRef {
    q(&prover_register(i), j)
}

fn message_qubit(i: usize, j: usize) -> QubitRef {
    q(&message_register(i), j)
}

/// Prepends an idle verifier turn; odd turn counts become even.
pub fn prepend_verifier_turn(inst: &ProtocolInstance) -> Result<ProtocolInstance> {
    if inst.verifier.turns % 2 == 0 {
        return Err(Error::Precondition(
            "a lone verifier turn can only be prepended to an odd number of turns".into(),
        ));
    }
    let mut out = inst.clone();
    out.verifier.turns += 1;
    out.verifier.circuits.insert(0, Circuit::new());
    Ok(out)
}

/// Prepends an idle prover turn; even turn counts become odd.
pub fn prepend_prover_turn(inst: &ProtocolInstance) -> Result<ProtocolInstance> {
    if inst.verifier.turns % 2 == 1 {
        return Err(Error::Precondition(
            "a lone prover turn can only be prepended to an even number of turns".into(),
        ));
    }
    let mut out = inst.clone();
    out.verifier.turns += 1;
    for p in &mut out.provers {
        p.circuits.insert(0, Circuit::new());
    }
    Ok(out)
}

/// Prepends an idle prover turn followed by an idle verifier turn.
pub fn prepend_round(inst: &ProtocolInstance) -> Result<ProtocolInstance> {
    if inst.verifier.turns % 2 == 0 {
        return Err(Error::Precondition(
            "a prover-then-verifier round can only be prepended to an odd number of turns".into(),
        ));
    }
    let mut out = inst.clone();
    out.verifier.turns += 2;
    out.verifier.circuits.insert(0, Circuit::new());
    for p in &mut out.provers {
        p.circuits.insert(0, Circuit::new());
    }
    Ok(out)
}

/// Pads with idle turns until the protocol has exactly `turns` turns.
pub fn pad_turns(inst: &ProtocolInstance, turns: usize) -> Result<ProtocolInstance> {
    let m = inst.verifier.turns;
    if turns < m {
        return Err(Error::Precondition(format!("cannot pad {m} turns down to {turns}")));
    }
    let mut out = inst.clone();
    if (turns - m) % 2 == 1 {
        out = if m % 2 == 0 {
            prepend_prover_turn(&out)?
        } else {
            prepend_verifier_turn(&out)?
        };
    }
    while out.verifier.turns < turns {
        out = if out.verifier.turns % 2 == 1 {
            prepend_round(&out)?
        } else {
            // Two single prepends keep the parity and the alternation.
            prepend_verifier_turn(&prepend_prover_turn(&out)?)?
        };
    }
    Ok(out)
}

/// Grows every message register to `size` qubits.
fn widen_messages(inst: &mut ProtocolInstance, size: usize) {
    for m in &mut inst.verifier.message_qubits {
        *m = size;
    }
}

/// A prover strategy whose turn `t` is `circuits[t]`.
fn strategy(private_qubits: usize, circuits: Vec<Circuit>) -> ProverStrategy {
    ProverStrategy {
        private_qubits,
        circuits,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn padding_preserves_value_and_alternation() {
        let t = Tolerances::default();
        for inst in [fixtures::good(), fixtures::relay_yes(3, 0.7)] {
            let v0 = honest_value(&inst, &t).unwrap();
            for target in [inst.verifier.turns + 1, inst.verifier.turns + 4, 9] {
                let p = pad_turns(&inst, target).unwrap();
                assert_eq!(p.verifier.turns, target);
                require_valid(&p, &t).unwrap();
                assert!((honest_value(&p, &t).unwrap() - v0).abs() < 1e-12);
            }
        }
    }
}
