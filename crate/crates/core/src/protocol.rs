//! The multi-prover protocol model.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::circuit::{Circuit, GateOp, QubitRef};
use crate::register::{Layout, Register};
use crate::state::StateVector;
use crate::tolerance::Tolerances;

/// Name of the message register shared with prover `i` (0-based).
pub fn message_register(i: usize) -> String {
    format!("M{}", i + 1)
}

/// Name of prover `i`'s private register (0-based).
pub fn prover_register(i: usize) -> String {
    format!("P{}", i + 1)
}

/// Who acts at one position of the schedule; the payload indexes the
/// verifier's circuits or the provers' turn circuits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Step {
    Verifier(usize),
    Provers(usize),
}

/// Number of verifier circuits for `m` turns, the final one included.
pub fn verifier_circuit_count(turns: usize) -> usize {
    (turns + 2) / 2
}

/// Number of turns that belong to the provers.
pub fn prover_turn_count(turns: usize) -> usize {
    turns.div_ceil(2)
}

/// The `m` turns followed by the final verifier circuit. The last turn is the
/// provers', so the verifier opens when `m` is even and the provers when it is odd.
pub fn schedule(turns: usize) -> Vec<Step> {
    let (mut v, mut p) = (0, 0);
    let mut out = Vec::with_capacity(turns + 1);
    for t in 1..=turns {
        if (turns - t) % 2 == 0 {
            out.push(Step::Provers(p));
            p += 1;
        } else {
            out.push(Step::Verifier(v));
            v += 1;
        }
    }
    out.push(Step::Verifier(v));
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifierSpec {
    /// Number of provers `k`.
    pub provers: usize,
    /// Number of turns `m`.
    pub turns: usize,
    /// Verifier-private registers.
    pub registers: Vec<Register>,
    /// Size of each message register; all entries must agree.
    pub message_qubits: Vec<usize>,
    /// One circuit per verifier step, the final decision circuit last.
    pub circuits: Vec<Circuit>,
    /// Measured at the end; 1 means accept.
    pub output: QubitRef,
}

impl VerifierSpec {
    pub fn schedule(&self) -> Vec<Step> {
        schedule(self.turns)
    }

    pub fn prover_turns(&self) -> usize {
        prover_turn_count(self.turns)
    }

    /// Common message size (the first entry).
    pub fn message_size(&self) -> usize {
        self.message_qubits.first().copied().unwrap_or(0)
    }

    pub fn verifier_qubits(&self) -> usize {
        self.registers.iter().map(|r| r.qubits).sum()
    }

    /// Verifier registers followed by `M1..Mk`.
    pub fn open_layout(&self) -> crate::error::Result<Layout> {
        let mut regs = self.registers.clone();
        for (i, &n) in self.message_qubits.iter().enumerate() {
            regs.push(Register::new(message_register(i), n));
        }
        Layout::new(regs)
    }

    /// Full layout: verifier, messages, then `P1..Pk` with the given sizes.
    pub fn layout(&self, private: &[usize]) -> crate::error::Result<Layout> {
        self.open_layout()?.concat(&prover_layout(private)?)
    }

    /// Qubits of every verifier-private register.
    pub fn verifier_qubit_refs(&self) -> Vec<QubitRef> {
        self.registers
            .iter()
            .flat_map(|r| crate::circuit::qubits_of(&r.name, r.qubits))
            .collect()
    }

    pub fn coin_count(&self) -> usize {
        self.circuits.iter().map(Circuit::coin_count).sum()
    }

    /// The verifier with every coin replaced by its purification.
    pub fn purified(&self) -> VerifierSpec {
        VerifierSpec {
            circuits: self.circuits.iter().map(Circuit::purify).collect(),
            ..self.clone()
        }
    }
}

/// Layout `P1..Pk`.
pub fn prover_layout(private: &[usize]) -> crate::error::Result<Layout> {
    Layout::new(
        private
            .iter()
            .enumerate()
            .map(|(i, &n)| Register::new(prover_register(i), n))
            .collect(),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProverStrategy {
    pub private_qubits: usize,
    /// One circuit per prover turn on `(P_i, M_i)`.
    pub circuits: Vec<Circuit>,
}

impl ProverStrategy {
    /// The prover that does nothing.
    pub fn idle(private_qubits: usize, turns: usize) -> Self {
        Self {
            private_qubits,
            circuits: alloc::vec![Circuit::new(); turns],
        }
    }
}

/// Completeness and soundness as claimed by the author of an instance.
#[derive(Debug, Clone, Copy, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Claims {
    pub completeness: Option<f64>,
    pub soundness: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolInstance {
    pub verifier: VerifierSpec,
    pub provers: Vec<ProverStrategy>,
    /// State of `P1..Pk` before the first turn.
    pub shared: StateVector,
    pub claims: Claims,
}

impl ProtocolInstance {
    pub fn private_qubits(&self) -> Vec<usize> {
        self.provers.iter().map(|p| p.private_qubits).collect()
    }

    pub fn layout(&self) -> crate::error::Result<Layout> {
        self.verifier.layout(&self.private_qubits())
    }

    pub fn total_qubits(&self) -> usize {
        self.verifier.verifier_qubits()
            + self.verifier.message_qubits.iter().sum::<usize>()
            + self.private_qubits().iter().sum::<usize>()
    }
}

/// A broken invariant; `rule` is a short identifier, `message` is for people.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub rule: &'static str,
    pub message: String,
}

impl Violation {
    fn new(rule: &'static str, message: impl Into<String>) -> Self {
        Self {
            rule,
            message: message.into(),
        }
    }
}

impl core::fmt::Display for Violation {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(&self.message)
    }
}

/// Checks the verifier alone; see [`validate`].
pub fn validate_verifier(v: &VerifierSpec, tol: &Tolerances) -> Vec<Violation> {
    let mut out = Vec::new();
    if v.provers == 0 {
        out.push(Violation::new("prover-count", "at least one prover is required"));
    }
    if v.turns == 0 {
        out.push(Violation::new("turn-count", "at least one turn is required"));
    }
    if v.message_qubits.len() != v.provers {
        out.push(Violation::new(
            "message-count",
            format!(
                "{} message registers declared for {} provers",
                v.message_qubits.len(),
                v.provers
            ),
        ));
    }
    if v.message_qubits.windows(2).any(|w| w[0] != w[1]) {
        out.push(Violation::new("message-size", "unequal message register sizes"));
    }
    if v.message_qubits.contains(&0) {
        out.push(Violation::new("message-size", "message registers must be non-empty"));
    }
    let reserved: BTreeSet<String> = (0..v.provers)
        .flat_map(|i| [message_register(i), prover_register(i)])
        .collect();
    let mut names = BTreeSet::new();
    for r in &v.registers {
        if !names.insert(r.name.clone()) || reserved.contains(&r.name) {
            out.push(Violation::new(
                "register-names",
                format!("register name `{}` is not unique", r.name),
            ));
        }
    }
    let expected = verifier_circuit_count(v.turns);
    if v.circuits.len() != expected {
        out.push(Violation::new(
            "circuit-count",
            format!(
                "{} verifier circuits given, {} turns need {expected}",
                v.circuits.len(),
                v.turns
            ),
        ));
    }
    let verifier_names: BTreeSet<&str> = v.registers.iter().map(|r| r.name.as_str()).collect();
    if !verifier_names.contains(v.output.register.as_str())
        || v
            .registers
            .iter()
            .any(|r| r.name == v.output.register && v.output.index >= r.qubits)
    {
        out.push(Violation::new(
            "output-qubit",
            format!("output qubit {} is not a verifier qubit", v.output),
        ));
    }
    let layout = match v.open_layout() {
        Ok(l) => l,
        Err(e) => {
            out.push(Violation::new("register-names", e.to_string()));
            return out;
        }
    };
    let message_names: BTreeSet<String> = (0..v.provers).map(message_register).collect();
    for (j, c) in v.circuits.iter().enumerate() {
        for (g_idx, g) in c.gates.iter().enumerate() {
            if let Err(e) = g.check(&layout, tol.unitarity) {
                let e = match e {
                    crate::error::Error::NotUnitary { deviation, .. } => format!(
                        "gate {} not unitary (‖U†U−I‖ = {deviation:.3e})",
                        g.name()
                    ),
                    other => other.to_string(),
                };
                out.push(Violation::new(
                    "gate",
                    format!("verifier circuit {} gate {g_idx}: {e}", j + 1),
                ));
            }
            if let GateOp::Coin { broadcast } = &g.op {
                if !verifier_names.contains(g.targets[0].register.as_str()) {
                    out.push(Violation::new(
                        "coin",
                        format!(
                            "verifier circuit {} gate {g_idx}: coin must be recorded in a verifier register",
                            j + 1
                        ),
                    ));
                }
                if broadcast.iter().any(|b| !message_names.contains(&b.register)) {
                    out.push(Violation::new(
                        "coin",
                        format!(
                            "verifier circuit {} gate {g_idx}: coins are broadcast into message registers only",
                            j + 1
                        ),
                    ));
                }
            }
        }
    }
    check_coin_records(v, &mut out);
    out
}

/// Coin records must be untouched before the coin and afterwards used only as
/// controls or by diagonal gates, which makes enumeration and purification agree.
fn check_coin_records(v: &VerifierSpec, out: &mut Vec<Violation>) {
    let flat: Vec<_> = v.circuits.iter().flat_map(|c| c.gates.iter()).collect();
    for (pos, g) in flat.iter().enumerate() {
        if !g.is_coin() {
            continue;
        }
        let rec = &g.targets[0];
        if flat[..pos].iter().any(|h| h.qubits().any(|x| x == rec)) {
            out.push(Violation::new(
                "coin",
                format!("coin record {rec} is used before the coin is flipped"),
            ));
        }
        for h in &flat[pos + 1..] {
            let as_target = h.targets.contains(rec);
            let as_copy = matches!(&h.op, GateOp::Coin { broadcast } if broadcast.contains(rec));
            if as_copy || (as_target && !h.is_diagonal()) {
                out.push(Violation::new(
                    "coin",
                    format!("coin record {rec} is modified after the coin is flipped"),
                ));
                break;
            }
        }
    }
}

/// Every broken invariant of an instance; empty when the instance is well formed.
pub fn validate(inst: &ProtocolInstance, tol: &Tolerances) -> Vec<Violation> {
    let v = &inst.verifier;
    let mut out = validate_verifier(v, tol);
    if inst.provers.len() != v.provers {
        out.push(Violation::new(
            "prover-count",
            format!("{} prover strategies for {} provers", inst.provers.len(), v.provers),
        ));
        return out;
    }
    let layout = match inst.layout() {
        Ok(l) => l,
        Err(e) => {
            out.push(Violation::new("register-names", e.to_string()));
            return out;
        }
    };
    let turns = v.prover_turns();
    for (i, p) in inst.provers.iter().enumerate() {
        let own = [prover_register(i), message_register(i)];
        if p.circuits.len() != turns {
            out.push(Violation::new(
                "prover-turns",
                format!("prover {} has {} circuits for {turns} turns", i + 1, p.circuits.len()),
            ));
        }
        let mut outside = false;
        for (j, c) in p.circuits.iter().enumerate() {
            for (g_idx, g) in c.gates.iter().enumerate() {
                if g.is_coin() {
                    out.push(Violation::new(
                        "prover-coin",
                        format!("prover {} turn {} gate {g_idx}: provers cannot flip coins", i + 1, j + 1),
                    ));
                }
                if g.qubits().any(|x| !own.contains(&x.register)) {
                    outside = true;
                    continue;
                }
                if let Err(e) = g.check(&layout, tol.unitarity) {
                    let e = match e {
                        crate::error::Error::NotUnitary { deviation, .. } => format!(
                            "gate {} not unitary (‖U†U−I‖ = {deviation:.3e})",
                            g.name()
                        ),
                        other => other.to_string(),
                    };
                    out.push(Violation::new(
                        "gate",
                        format!("prover {} turn {} gate {g_idx}: {e}", i + 1, j + 1),
                    ));
                }
            }
        }
        if outside {
            out.push(Violation::new(
                "prover-locality",
                format!("prover {n} acts outside (P_{n}, M_{n})", n = i + 1),
            ));
        }
    }
    match prover_layout(&inst.private_qubits()) {
        Ok(pl) if &pl == inst.shared.layout() => {}
        _ => out.push(Violation::new(
            "shared-state",
            "shared state must live exactly on the prover registers P1..Pk",
        )),
    }
    let n = inst.shared.norm_sq();
    if (n - 1.0).abs() > tol.normalization {
        out.push(Violation::new(
            "shared-state",
            format!("shared state not normalized (‖Φ‖² = {n})"),
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_parity() {
        assert_eq!(
            schedule(2),
            [Step::Verifier(0), Step::Provers(0), Step::Verifier(1)]
        );
        assert_eq!(
            schedule(3),
            [
                Step::Provers(0),
                Step::Verifier(0),
                Step::Provers(1),
                Step::Verifier(1)
            ]
        );
        for m in 1..20 {
            let s = schedule(m);
            assert_eq!(s.len(), m + 1);
            assert!(matches!(s[m - 1], Step::Provers(_)));
            assert!(matches!(s[m], Step::Verifier(_)));
            let v = s.iter().filter(|x| matches!(x, Step::Verifier(_))).count();
            assert_eq!(v, verifier_circuit_count(m));
            assert_eq!(m + 1 - v, prover_turn_count(m));
        }
    }
}
