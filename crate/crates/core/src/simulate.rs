//! Exact execution of protocol instances.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use crate::circuit::{Circuit, GateOp};
use crate::error::{Error, Result};
use crate::exec::{Kernel, Resolved};
use crate::linalg;
use crate::protocol::{validate, ProtocolInstance, ProverStrategy, Step, VerifierSpec};
use crate::register::Layout;
use crate::state::StateVector;
use crate::tolerance::Tolerances;

/// How verifier coins are executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CoinMode {
    /// Branch over every outcome with weight ½ each.
    #[default]
    Enumerate,
    /// Replace each coin by `H` on its record plus copies into the broadcast qubits.
    Purify,
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub keep_snapshots: bool,
    pub coin_mode: CoinMode,
    /// Largest number of coin branches enumerated.
    pub max_branches: usize,
    pub tolerances: Tolerances,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            keep_snapshots: false,
            coin_mode: CoinMode::Enumerate,
            max_branches: 1 << 12,
            tolerances: Tolerances::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Transcript {
    pub acceptance: f64,
    /// With snapshots requested: the initial state, the state after each turn,
    /// and the state after the final verifier circuit (coins purified).
    pub snapshots: Vec<StateVector>,
    pub branches: usize,
}

#[derive(Debug, Clone)]
pub(crate) enum Op {
    Gate(Resolved),
    Coin { record: usize, broadcast: Vec<usize> },
}

/// An instance compiled against its full layout: one op list per schedule step.
#[derive(Debug, Clone)]
pub struct Program {
    layout: Layout,
    schedule: Vec<Step>,
    steps: Vec<Vec<Op>>,
    output: usize,
}

pub(crate) fn compile_circuit(c: &Circuit, layout: &Layout) -> Result<Vec<Op>> {
    c.gates
        .iter()
        .map(|g| match &g.op {
            GateOp::Coin { broadcast } => Ok(Op::Coin {
                record: layout.position(&g.targets[0])?,
                broadcast: broadcast
                    .iter()
                    .map(|b| layout.position(b))
                    .collect::<Result<_>>()?,
            }),
            _ => Ok(Op::Gate(Resolved::from_gate(g, layout)?)),
        })
        .collect()
}

/// Unitary ops for a coin's purification.
pub(crate) fn purify_coin(record: usize, broadcast: &[usize]) -> Vec<Resolved> {
    let mut out = vec![Resolved::matrix(&linalg::gates::hadamard(), vec![record])];
    for &b in broadcast {
        out.push(Resolved {
            kernel: Kernel::Flip,
            targets: vec![b],
            controls: vec![(record, true)],
        });
    }
    out
}

impl Program {
    pub fn compile(verifier: &VerifierSpec, provers: &[ProverStrategy]) -> Result<Program> {
        let private: Vec<usize> = provers.iter().map(|p| p.private_qubits).collect();
        let layout = verifier.layout(&private)?;
        let schedule = verifier.schedule();
        let mut steps = Vec::with_capacity(schedule.len());
        for step in &schedule {
            let ops = match *step {
                Step::Verifier(j) => compile_circuit(&verifier.circuits[j], &layout)?,
                Step::Provers(j) => {
                    let mut ops = Vec::new();
                    for p in provers {
                        ops.extend(compile_circuit(&p.circuits[j], &layout)?);
                    }
                    ops
                }
            };
            steps.push(ops);
        }
        let output = layout.position(&verifier.output)?;
        Ok(Program {
            layout,
            schedule,
            steps,
            output,
        })
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn schedule(&self) -> &[Step] {
        &self.schedule
    }

    /// Global position of the output qubit.
    pub fn output(&self) -> usize {
        self.output
    }


    /// Applies schedule steps `range` with coins purified.
    pub fn apply_steps(&self, state: &mut StateVector, range: Range<usize>) {
        for ops in &self.steps[range] {
            for op in ops {
                match op {
                    Op::Gate(g) => state.apply_resolved(g),
                    Op::Coin { record, broadcast } => {
                        for g in purify_coin(*record, broadcast) {
                            state.apply_resolved(&g);
                        }
                    }
                }
            }
        }
    }

    /// Undoes schedule steps `range` (coins purified), last step first.
    pub fn unapply_steps(&self, state: &mut StateVector, range: Range<usize>) {
        for ops in self.steps[range].iter().rev() {
            for op in ops.iter().rev() {
                match op {
                    Op::Gate(g) => state.apply_resolved(&g.inverse()),
                    Op::Coin { record, broadcast } => {
                        for g in purify_coin(*record, broadcast).iter().rev() {
                            state.apply_resolved(&g.inverse());
                        }
                    }
                }
            }
        }
    }

    /// Acceptance probability from `start` by branching over coins.
    pub fn accept_enumerated(&self, start: &StateVector, max_branches: usize) -> Result<(f64, usize)> {
        let coins: usize = self
            .steps
            .iter()
            .flatten()
            .filter(|op| matches!(op, Op::Coin { .. }))
            .count();
        if coins >= usize::BITS as usize || (1usize << coins) > max_branches {
            return Err(Error::Budget(alloc::format!(
                "{coins} coin flips exceed the branch budget of {max_branches}"
            )));
        }
        let flat: Vec<&Op> = self.steps.iter().flatten().collect();
        let mut total = 0.0;
        self.branch(&flat, 0, start.clone(), 1.0, &mut total);
        Ok((total, 1 << coins))
    }

    fn branch(&self, ops: &[&Op], from: usize, mut state: StateVector, weight: f64, total: &mut f64) {
        for (pos, op) in ops.iter().enumerate().skip(from) {
            match op {
                Op::Gate(g) => state.apply_resolved(g),
                Op::Coin { record, broadcast } => {
                    let mut flipped = state.clone();
                    flipped.apply_resolved(&Resolved::flip(*record));
                    for &b in broadcast {
                        flipped.apply_resolved(&Resolved::flip(b));
                    }
                    self.branch(ops, pos + 1, state, weight / 2.0, total);
                    self.branch(ops, pos + 1, flipped, weight / 2.0, total);
                    return;
                }
            }
        }
        *total += weight * state.weight(&[(self.output, true)]);
    }

    /// `|0⟩` on verifier and message registers tensored with `shared`.
    pub fn initial_state(&self, verifier: &VerifierSpec, shared: &StateVector) -> Result<StateVector> {
        let open = StateVector::zero(verifier.open_layout()?)?;
        open.tensor(shared)?.with_default_storage()
    }
}

/// Runs an instance; see [`RunOptions`].
pub fn run(inst: &ProtocolInstance, opts: &RunOptions) -> Result<Transcript> {
    let violations = validate(inst, &opts.tolerances);
    if !violations.is_empty() {
        return Err(Error::Invalid(violations));
    }
    let program = Program::compile(&inst.verifier, &inst.provers)?;
    let start = program.initial_state(&inst.verifier, &inst.shared)?;
    let mut snapshots = Vec::new();
    if opts.keep_snapshots {
        let mut s = start.clone();
        snapshots.push(s.clone());
        for t in 0..program.steps.len() {
            program.apply_steps(&mut s, t..t + 1);
            let n = s.norm_sq();
            if (n - 1.0).abs() > 1e-10 {
                return Err(Error::Numerical(alloc::format!(
                    "snapshot {} has norm² {n}",
                    t + 1
                )));
            }
            snapshots.push(s.clone());
        }
    }
    let (acceptance, branches) = match opts.coin_mode {
        CoinMode::Enumerate => program.accept_enumerated(&start, opts.max_branches)?,
        CoinMode::Purify => {
            let mut s = start;
            program.apply_steps(&mut s, 0..program.steps.len());
            (s.weight(&[(program.output, true)]), 1)
        }
    };
    Ok(Transcript {
        acceptance: acceptance.clamp(0.0, 1.0),
        snapshots,
        branches,
    })
}

/// Probability that the verifier accepts.
pub fn acceptance_probability(inst: &ProtocolInstance) -> Result<f64> {
    Ok(run(inst, &RunOptions::default())?.acceptance)
}

/// Global state after `turns` turns (0 is the initial state), coins purified.
pub fn state_after(inst: &ProtocolInstance, turns: usize) -> Result<StateVector> {
    let program = Program::compile(&inst.verifier, &inst.provers)?;
    let mut s = program.initial_state(&inst.verifier, &inst.shared)?;
    program.apply_steps(&mut s, 0..turns.min(program.steps.len()));
    Ok(s)
}
