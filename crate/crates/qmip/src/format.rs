//! JSON protocol and strategy files.
//!
//! Qubits are written `NAME[i]`; a control prefixed with `!` fires on `|0⟩`.
//! Complex numbers are `[re, im]` pairs and gate matrices are row-major, the
//! first target being the most significant bit of the row index. Dense
//! amplitude lists use the little-endian basis order of the prover registers
//! (qubit 0 of `P1` is bit 0); sparse entries spell the basis state as a bit
//! string whose `j`-th character is qubit `j`.

use std::path::Path;

use json_spanned_value::Spanned;
use qmip_core::linalg::{Matrix, C64};
use qmip_core::protocol::{message_register, prover_layout, prover_register, schedule};
use qmip_core::{
    validate, BasisIndex, Circuit, Claims, Control, Gate, GateOp, Layout, ProtocolInstance, ProverStrategy, QubitRef,
    Register, StateVector, Step, Tolerances, VerifierSpec,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const PROTOCOL_VERSION: &str = "qmip-protocol/1";
pub const STRATEGY_VERSION: &str = "qmip-strategy/1";

/// States with at most this many qubits are written as dense amplitude lists.
const DENSE_WRITE_LIMIT: usize = 10;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GateSpec {
    pub gate: String,
    pub targets: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub controls: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<[f64; 2]>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub broadcast: Option<Vec<String>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NamedCircuit<G> {
    pub name: String,
    pub gates: Vec<G>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Owner {
    Verifier,
    Provers,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TurnSpec {
    pub owner: Owner,
    /// Verifier turns name one circuit.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub circuit: Option<String>,
    /// Prover turns name one circuit per prover.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub circuits: Vec<String>,
    /// Coin flips made during a verifier turn.
    #[serde(default)]
    pub coins: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SharedSpec<G> {
    Amplitudes(Vec<[f64; 2]>),
    Sparse(Vec<(String, [f64; 2])>),
    /// Applied to `|0…0⟩` on the prover registers.
    Circuit(Vec<G>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegisterSpec {
    pub name: String,
    pub qubits: usize,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Metadata {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub completeness: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub soundness: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProtocolDoc<C, T, S> {
    version: String,
    provers: usize,
    turns: usize,
    message_qubits: usize,
    registers: Vec<RegisterSpec>,
    output: String,
    private_qubits: Vec<usize>,
    circuits: Vec<C>,
    schedule: Vec<T>,
    #[serde(rename = "final")]
    final_circuit: T,
    shared_state: S,
    #[serde(default)]
    metadata: Metadata,
}

type DocOut = ProtocolDoc<NamedCircuit<GateSpec>, TurnSpec, SharedSpec<GateSpec>>;
type SpannedGate = Spanned<GateSpec>;
type DocIn = ProtocolDoc<Spanned<NamedCircuit<SpannedGate>>, Spanned<TurnSpec>, Spanned<SharedSpec<SpannedGate>>>;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StrategyDoc<C, S> {
    version: String,
    private_qubits: Vec<usize>,
    circuits: Vec<C>,
    /// Per prover, the circuit names of its turns.
    provers: Vec<Vec<String>>,
    shared_state: S,
}

type StrategyOut = StrategyDoc<NamedCircuit<GateSpec>, SharedSpec<GateSpec>>;
type StrategyIn = StrategyDoc<Spanned<NamedCircuit<SpannedGate>>, Spanned<SharedSpec<SpannedGate>>>;

/// Provers and their shared state, detached from a verifier.
#[derive(Debug, Clone)]
pub struct StrategyFile {
    pub provers: Vec<ProverStrategy>,
    pub shared: StateVector,
}

// ---------------------------------------------------------------- writing

fn complex(c: C64) -> [f64; 2] {
    [c.re, c.im]
}

fn qubit_text(q: &QubitRef) -> String {
    q.to_string()
}

fn control_text(c: &Control) -> String {
    if c.value {
        c.qubit.to_string()
    } else {
        format!("!{}", c.qubit)
    }
}

pub fn gate_spec(g: &Gate) -> GateSpec {
    let name = g.name();
    let (targets, controls): (Vec<String>, Vec<String>) = match name {
        "CNOT" | "TOFFOLI" => {
            let mut t: Vec<String> = g.controls.iter().map(|c| qubit_text(&c.qubit)).collect();
            t.extend(g.targets.iter().map(qubit_text));
            (t, Vec::new())
        }
        _ => (
            g.targets.iter().map(qubit_text).collect(),
            g.controls.iter().map(control_text).collect(),
        ),
    };
    let matrix = match &g.op {
        GateOp::Unitary(m) => Some(
            (0..m.nrows())
                .map(|r| (0..m.ncols()).map(|c| complex(m[(r, c)])).collect())
                .collect(),
        ),
        _ => None,
    };
    let broadcast = match &g.op {
        GateOp::Coin { broadcast } => Some(broadcast.iter().map(qubit_text).collect()),
        _ => None,
    };
    GateSpec {
        gate: name.to_string(),
        targets,
        controls,
        matrix,
        broadcast,
    }
}

fn circuit_out(name: String, c: &Circuit) -> NamedCircuit<GateSpec> {
    NamedCircuit {
        name,
        gates: c.gates.iter().map(gate_spec).collect(),
    }
}

fn shared_out(s: &StateVector) -> SharedSpec<GateSpec> {
    let n = s.num_qubits();
    if n <= DENSE_WRITE_LIMIT {
        let v = s.to_vector().expect("small state");
        SharedSpec::Amplitudes(v.iter().copied().map(complex).collect())
    } else {
        SharedSpec::Sparse(
            s.entries()
                .into_iter()
                .map(|(k, a)| {
                    let bits: String = (0..n).map(|j| if k.bit(j) { '1' } else { '0' }).collect();
                    (bits, complex(a))
                })
                .collect(),
        )
    }
}

fn verifier_circuit_name(j: usize) -> String {
    format!("V{}", j + 1)
}

fn prover_circuit_name(i: usize, t: usize) -> String {
    format!("P{}.{}", i + 1, t + 1)
}

fn prover_circuits_out(provers: &[ProverStrategy]) -> (Vec<NamedCircuit<GateSpec>>, Vec<Vec<String>>) {
    let mut circuits = Vec::new();
    let mut names = Vec::new();
    for (i, p) in provers.iter().enumerate() {
        let mut own = Vec::new();
        for (t, c) in p.circuits.iter().enumerate() {
            let name = prover_circuit_name(i, t);
            circuits.push(circuit_out(name.clone(), c));
            own.push(name);
        }
        names.push(own);
    }
    (circuits, names)
}

/// Serializes an instance; circuits are named `V1..` and `P{i}.{turn}`.
pub fn to_json(inst: &ProtocolInstance, name: Option<&str>) -> String {
    let v = &inst.verifier;
    let mut circuits: Vec<NamedCircuit<GateSpec>> = v
        .circuits
        .iter()
        .enumerate()
        .map(|(j, c)| circuit_out(verifier_circuit_name(j), c))
        .collect();
    let (prover_circuits, names) = prover_circuits_out(&inst.provers);
    circuits.extend(prover_circuits);
    let steps = schedule(v.turns);
    let turn = |s: &Step| match *s {
        Step::Verifier(j) => TurnSpec {
            owner: Owner::Verifier,
            circuit: Some(verifier_circuit_name(j)),
            circuits: Vec::new(),
            coins: v.circuits[j].coin_count(),
        },
        Step::Provers(t) => TurnSpec {
            owner: Owner::Provers,
            circuit: None,
            circuits: names.iter().map(|n| n[t].clone()).collect(),
            coins: 0,
        },
    };
    let (last, turns) = steps.split_last().expect("final circuit");
    let doc: DocOut = ProtocolDoc {
        version: PROTOCOL_VERSION.into(),
        provers: v.provers,
        turns: v.turns,
        message_qubits: v.message_size(),
        registers: v
            .registers
            .iter()
            .map(|r| RegisterSpec {
                name: r.name.clone(),
                qubits: r.qubits,
            })
            .collect(),
        output: v.output.to_string(),
        private_qubits: inst.private_qubits(),
        circuits,
        schedule: turns.iter().map(turn).collect(),
        final_circuit: turn(last),
        shared_state: shared_out(&inst.shared),
        metadata: Metadata {
            name: name.map(str::to_string),
            completeness: inst.claims.completeness,
            soundness: inst.claims.soundness,
        },
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("plain data serializes");
    s.push('\n');
    s
}

pub fn strategy_to_json(provers: &[ProverStrategy], shared: &StateVector) -> String {
    let (circuits, names) = prover_circuits_out(provers);
    let doc: StrategyOut = StrategyDoc {
        version: STRATEGY_VERSION.into(),
        private_qubits: provers.iter().map(|p| p.private_qubits).collect(),
        circuits,
        provers: names,
        shared_state: shared_out(shared),
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("plain data serializes");
    s.push('\n');
    s
}

pub fn save(inst: &ProtocolInstance, path: &Path, name: Option<&str>) -> CliResult<()> {
    write_text(path, &to_json(inst, name))
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        }
    }
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

// ---------------------------------------------------------------- reading

/// Source text plus the path used in messages.
struct Source<'a> {
    path: &'a Path,
    text: &'a str,
}

impl Source<'_> {
    fn line(&self, offset: usize) -> usize {
        let end = offset.min(self.text.len());
        self.text.as_bytes()[..end].iter().filter(|&&b| b == b'\n').count() + 1
    }

    fn err(&self, offset: usize, message: impl Into<String>) -> CliError {
        CliError::Schema {
            path: self.path.to_path_buf(),
            line: self.line(offset),
            message: message.into(),
        }
    }

    fn parse<T: serde::de::DeserializeOwned>(&self) -> CliResult<T> {
        json_spanned_value::from_str(self.text).map_err(|e| CliError::Parse {
            path: self.path.to_path_buf(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }
}

fn parse_qubit(text: &str) -> Option<QubitRef> {
    let (name, rest) = text.split_once('[')?;
    let index = rest.strip_suffix(']')?.parse().ok()?;
    (!name.is_empty()).then(|| QubitRef::new(name, index))
}

fn parse_gate(src: &Source, g: &SpannedGate) -> CliResult<Gate> {
    let at = g.start();
    let qubit = |t: &String| parse_qubit(t).ok_or_else(|| src.err(at, format!("malformed qubit `{t}`")));
    let targets: Vec<QubitRef> = g.targets.iter().map(qubit).collect::<CliResult<_>>()?;
    let mut controls = Vec::new();
    for c in &g.controls {
        let (value, text) = match c.strip_prefix('!') {
            Some(rest) => (false, rest.to_string()),
            None => (true, c.clone()),
        };
        controls.push(Control { qubit: qubit(&text)?, value });
    }
    let arity = |n: usize| {
        if targets.len() == n {
            Ok(())
        } else {
            Err(src.err(at, format!("gate {} takes {n} targets, found {}", g.gate, targets.len())))
        }
    };
    let gate = match g.gate.as_str() {
        "H" | "X" | "Y" | "Z" | "S" | "SDG" => {
            arity(1)?;
            let op = match g.gate.as_str() {
                "H" => GateOp::H,
                "X" => GateOp::X,
                "Y" => GateOp::Y,
                "Z" => GateOp::Z,
                "S" => GateOp::S,
                _ => GateOp::Sdg,
            };
            Gate::new(op, targets)
        }
        "SWAP" => {
            arity(2)?;
            Gate::new(GateOp::Swap, targets)
        }
        "CNOT" => {
            arity(2)?;
            Gate::cnot(targets[0].clone(), targets[1].clone())
        }
        "TOFFOLI" => {
            arity(3)?;
            Gate::toffoli(targets[0].clone(), targets[1].clone(), targets[2].clone())
        }
        "CPHASE" => Gate::phase_flip(targets),
        "U" => {
            let rows = g.matrix.as_ref().ok_or_else(|| src.err(at, "gate U needs a matrix"))?;
            let n = rows.len();
            if n != 1 << targets.len() || rows.iter().any(|r| r.len() != n) {
                return Err(src.err(
                    at,
                    format!("gate U on {} qubits needs a {0}x{0} matrix", 1usize << targets.len()),
                ));
            }
            let data: Vec<C64> = rows.iter().flatten().map(|&[re, im]| C64::new(re, im)).collect();
            Gate::unitary(Matrix::from_row_slice(n, n, &data), targets)
        }
        "COIN" => {
            arity(1)?;
            let broadcast = g
                .broadcast
                .iter()
                .flatten()
                .map(qubit)
                .collect::<CliResult<Vec<_>>>()?;
            Gate::coin(targets[0].clone(), broadcast)
        }
        other => return Err(src.err(at, format!("unknown gate `{other}`"))),
    };
    Ok(gate.with_controls(&controls))
}

fn gate_error(e: qmip_core::Error) -> String {
    match e {
        qmip_core::Error::NotUnitary { gate, deviation } => {
            format!("gate {gate} not unitary (‖U†U−I‖ = {deviation:.3e})")
        }
        other => other.to_string(),
    }
}

/// Parses and checks one circuit against the qubits its owner may touch.
fn parse_circuit(
    src: &Source,
    named: &Spanned<NamedCircuit<SpannedGate>>,
    layout: &Layout,
    owner: &str,
    tol: &Tolerances,
) -> CliResult<Circuit> {
    let mut out = Circuit::new();
    for g in &named.gates {
        let gate = parse_gate(src, g)?;
        if let Err(e) = gate.check(layout, tol.unitarity) {
            let msg = match e {
                qmip_core::Error::UnknownRegister(r) => format!("{owner} acts outside its registers (touches `{r}`)"),
                other => gate_error(other),
            };
            return Err(src.err(g.start(), format!("circuit `{}`: {msg}", named.name)));
        }
        out.push(gate);
    }
    Ok(out)
}

fn circuit_table<'a>(
    src: &Source,
    circuits: &'a [Spanned<NamedCircuit<SpannedGate>>],
) -> CliResult<std::collections::BTreeMap<&'a str, &'a Spanned<NamedCircuit<SpannedGate>>>> {
    let mut table = std::collections::BTreeMap::new();
    for c in circuits {
        if table.insert(c.name.as_str(), c).is_some() {
            return Err(src.err(c.start(), format!("circuit name `{}` defined twice", c.name)));
        }
    }
    Ok(table)
}

fn parse_shared(
    src: &Source,
    spec: &Spanned<SharedSpec<SpannedGate>>,
    private: &[usize],
    tol: &Tolerances,
) -> CliResult<StateVector> {
    let layout = prover_layout(private)?;
    let n = layout.num_qubits();
    let at = spec.start();
    let state = match spec.get_ref() {
        SharedSpec::Amplitudes(a) => {
            if a.len() != 1 << n {
                return Err(src.err(at, format!("shared state needs {} amplitudes, found {}", 1usize << n, a.len())));
            }
            StateVector::from_amplitudes(layout, a.iter().map(|&[re, im]| C64::new(re, im)).collect(), tol.normalization)
        }
        SharedSpec::Sparse(entries) => {
            let mut parsed = Vec::with_capacity(entries.len());
            for (bits, [re, im]) in entries {
                if bits.len() != n || bits.chars().any(|c| c != '0' && c != '1') {
                    return Err(src.err(at, format!("basis label `{bits}` is not a {n}-bit string")));
                }
                let mut k = BasisIndex::zero();
                for (j, c) in bits.chars().enumerate() {
                    k.set(j, c == '1');
                }
                parsed.push((k, C64::new(*re, *im)));
            }
            StateVector::from_entries(layout, parsed, tol.normalization)
        }
        SharedSpec::Circuit(gates) => {
            let mut c = Circuit::new();
            for g in gates {
                let gate = parse_gate(src, g)?;
                gate.check(&layout, tol.unitarity)
                    .map_err(|e| src.err(g.start(), format!("shared state circuit: {}", gate_error(e))))?;
                c.push(gate);
            }
            StateVector::zero(layout).and_then(|s| s.apply_circuit(&c))
        }
    };
    state.map_err(|e| match e {
        qmip_core::Error::NotNormalized(x) => src.err(at, format!("shared state not normalized (‖ψ‖² = {x})")),
        other => src.err(at, format!("shared state: {other}")),
    })
}

fn parse_provers(
    src: &Source,
    table: &std::collections::BTreeMap<&str, &Spanned<NamedCircuit<SpannedGate>>>,
    names: &[Vec<(usize, String)>],
    private: &[usize],
    message_qubits: usize,
    tol: &Tolerances,
) -> CliResult<Vec<ProverStrategy>> {
    let mut provers = Vec::new();
    for (i, turns) in names.iter().enumerate() {
        let layout = Layout::new(vec![
            Register::new(prover_register(i), private[i]),
            Register::new(message_register(i), message_qubits),
        ])?;
        let mut circuits = Vec::new();
        for (at, name) in turns {
            let c = table
                .get(name.as_str())
                .ok_or_else(|| src.err(*at, format!("unknown circuit `{name}`")))?;
            circuits.push(parse_circuit(src, c, &layout, &format!("prover {}", i + 1), tol)?);
        }
        provers.push(ProverStrategy {
            private_qubits: private[i],
            circuits,
        });
    }
    Ok(provers)
}

/// Parses a protocol file held in memory; `path` only labels messages.
pub fn parse(text: &str, path: &Path, tol: &Tolerances) -> CliResult<ProtocolInstance> {
    let src = Source { path, text };
    let doc: DocIn = src.parse()?;
    if doc.version != PROTOCOL_VERSION {
        return Err(src.err(0, format!("unsupported version `{}` (expected `{PROTOCOL_VERSION}`)", doc.version)));
    }
    let k = doc.provers;
    if doc.private_qubits.len() != k {
        return Err(src.err(0, format!("{} private register sizes for {k} provers", doc.private_qubits.len())));
    }
    let output = parse_qubit(&doc.output).ok_or_else(|| src.err(0, format!("malformed output qubit `{}`", doc.output)))?;
    let registers: Vec<Register> = doc.registers.iter().map(|r| Register::new(r.name.clone(), r.qubits)).collect();
    let mut open = registers.clone();
    for i in 0..k {
        open.push(Register::new(message_register(i), doc.message_qubits));
    }
    let open = Layout::new(open).map_err(|e| src.err(0, e.to_string()))?;
    let table = circuit_table(&src, &doc.circuits)?;

    let expected = schedule(doc.turns);
    if doc.schedule.len() != doc.turns {
        return Err(src.err(0, format!("{} schedule entries for {} turns", doc.schedule.len(), doc.turns)));
    }
    let mut verifier_circuits = Vec::new();
    let mut prover_names: Vec<Vec<(usize, String)>> = vec![Vec::new(); k];
    let entries = doc.schedule.iter().chain(std::iter::once(&doc.final_circuit));
    for (t, (entry, step)) in entries.zip(&expected).enumerate() {
        let at = entry.start();
        match (*step, entry.owner) {
            (Step::Verifier(_), Owner::Verifier) => {
                let name = entry
                    .circuit
                    .as_ref()
                    .ok_or_else(|| src.err(at, "verifier turn without a circuit"))?;
                let c = table.get(name.as_str()).ok_or_else(|| src.err(at, format!("unknown circuit `{name}`")))?;
                let circuit = parse_circuit(&src, c, &open, "the verifier", tol)?;
                if circuit.coin_count() != entry.coins {
                    return Err(src.err(
                        at,
                        format!("turn declares {} coins but circuit `{name}` flips {}", entry.coins, circuit.coin_count()),
                    ));
                }
                verifier_circuits.push(circuit);
            }
            (Step::Provers(_), Owner::Provers) => {
                if entry.circuits.len() != k {
                    return Err(src.err(at, format!("prover turn names {} circuits for {k} provers", entry.circuits.len())));
                }
                for (i, name) in entry.circuits.iter().enumerate() {
                    prover_names[i].push((at, name.clone()));
                }
            }
            (_, owner) => {
                let want = if owner == Owner::Verifier { "provers" } else { "verifier" };
                let which = if t == doc.turns { "the final circuit".to_string() } else { format!("turn {}", t + 1) };
                return Err(src.err(at, format!("{which} belongs to the {want}")));
            }
        }
    }
    let provers = parse_provers(&src, &table, &prover_names, &doc.private_qubits, doc.message_qubits, tol)?;
    let shared = parse_shared(&src, &doc.shared_state, &doc.private_qubits, tol)?;
    let inst = ProtocolInstance {
        verifier: VerifierSpec {
            provers: k,
            turns: doc.turns,
            registers,
            message_qubits: vec![doc.message_qubits; k],
            circuits: verifier_circuits,
            output,
        },
        provers,
        shared,
        claims: Claims {
            completeness: doc.metadata.completeness,
            soundness: doc.metadata.soundness,
        },
    };
    let violations = validate(&inst, tol);
    if !violations.is_empty() {
        let at = doc.schedule.first().map_or(0, |s| s.start());
        let all: Vec<String> = violations.iter().map(|v| v.message.clone()).collect();
        return Err(src.err(at, all.join("; ")));
    }
    Ok(inst)
}

fn read_text(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

/// Reads and validates a protocol file.
pub fn load(path: &Path, tol: &Tolerances) -> CliResult<ProtocolInstance> {
    parse(&read_text(path)?, path, tol)
}

/// Reads a strategy file written by `audit`.
pub fn load_strategy(path: &Path, message_qubits: usize, tol: &Tolerances) -> CliResult<StrategyFile> {
    let text = read_text(path)?;
    let src = Source { path, text: &text };
    let doc: StrategyIn = src.parse()?;
    if doc.version != STRATEGY_VERSION {
        return Err(src.err(0, format!("unsupported version `{}` (expected `{STRATEGY_VERSION}`)", doc.version)));
    }
    if doc.provers.len() != doc.private_qubits.len() {
        return Err(src.err(0, "one private register size per prover is required"));
    }
    let table = circuit_table(&src, &doc.circuits)?;
    let names: Vec<Vec<(usize, String)>> = doc
        .provers
        .iter()
        .map(|turns| {
            turns
                .iter()
                .map(|n| (table.get(n.as_str()).map_or(0, |c| c.start()), n.clone()))
                .collect()
        })
        .collect();
    let provers = parse_provers(&src, &table, &names, &doc.private_qubits, message_qubits, tol)?;
    let shared = parse_shared(&src, &doc.shared_state, &doc.private_qubits, tol)?;
    Ok(StrategyFile { provers, shared })
}
