//! Dense evaluation machinery shared by the optimizers.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::circuit::{qubits_of, Circuit, Gate};
use crate::error::{Error, Result};
use crate::exec::{apply_dense, weight_dense, Resolved};
use crate::linalg::{Matrix, C64, ZERO};
use crate::protocol::{message_register, prover_register, ProverStrategy, Step, VerifierSpec};
use crate::simulate::{compile_circuit, purify_coin, CoinMode, Op};

#[derive(Debug, Clone)]
pub(crate) enum Item {
    Fixed { fwd: Resolved, inv: Resolved },
    Slot(usize),
}

/// One free prover unitary: prover `prover` at its turn `turn`, acting on
/// `targets` (private qubits first, then message qubits).
#[derive(Debug, Clone)]
pub(crate) struct Slot {
    pub prover: usize,
    pub turn: usize,
    pub targets: Vec<usize>,
    pub private: usize,
    pub message: usize,
}

impl Slot {
    pub fn dim(&self) -> usize {
        1 << self.targets.len()
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Engine {
    pub n: usize,
    pub branches: Vec<(f64, Vec<Item>)>,
    pub slots: Vec<Slot>,
    pub output: usize,
    pub prover_offset: usize,
    pub dims: Vec<usize>,
}

pub(crate) struct Budget {
    pub max_qubits: usize,
    pub max_branches: usize,
    pub max_shared_dim: usize,
}

fn fixed(g: Resolved) -> Item {
    let inv = g.inverse();
    Item::Fixed { fwd: g, inv }
}

impl Engine {
    /// With `fixed_provers` the prover circuits are frozen; otherwise every
    /// prover turn becomes a free slot.
    pub fn new(
        verifier: &VerifierSpec,
        dims: &[usize],
        fixed_provers: Option<&[ProverStrategy]>,
        mode: CoinMode,
        budget: &Budget,
    ) -> Result<Engine> {
        if dims.len() != verifier.provers {
            return Err(Error::Precondition(format!(
                "{} prover dimensions given for {} provers",
                dims.len(),
                verifier.provers
            )));
        }
        let layout = verifier.layout(dims)?;
        let n = layout.num_qubits();
        if n > budget.max_qubits {
            return Err(Error::Budget(format!(
                "{n} qubits exceed the dense optimizer limit of {}",
                budget.max_qubits
            )));
        }
        let shared_dim = 1usize << dims.iter().sum::<usize>();
        if shared_dim > budget.max_shared_dim {
            return Err(Error::Budget(format!(
                "shared-state dimension {shared_dim} exceeds {}",
                budget.max_shared_dim
            )));
        }
        let prover_offset = layout.offset(&prover_register(0))?;
        let q = verifier.message_size();

        let mut slots = Vec::new();
        let mut ops: Vec<Option<Op>> = Vec::new();
        let mut slot_marks: Vec<Option<usize>> = Vec::new();
        for step in verifier.schedule() {
            match step {
                Step::Verifier(j) => {
                    for op in compile_circuit(&verifier.circuits[j], &layout)? {
                        ops.push(Some(op));
                        slot_marks.push(None);
                    }
                }
                Step::Provers(j) => {
                    for (i, &p) in dims.iter().enumerate() {
                        if let Some(fp) = fixed_provers {
                            for op in compile_circuit(&fp[i].circuits[j], &layout)? {
                                ops.push(Some(op));
                                slot_marks.push(None);
                            }
                            continue;
                        }
                        let mut targets = Vec::new();
                        for r in qubits_of(&prover_register(i), p)
                            .into_iter()
                            .chain(qubits_of(&message_register(i), q))
                        {
                            targets.push(layout.position(&r)?);
                        }
                        if targets.len() > 10 {
                            return Err(Error::Budget(format!(
                                "prover {} acts on {} qubits; at most 10 are optimized",
                                i + 1,
                                targets.len()
                            )));
                        }
                        slot_marks.push(Some(slots.len()));
                        ops.push(None);
                        slots.push(Slot {
                            prover: i,
                            turn: j,
                            targets,
                            private: p,
                            message: q,
                        });
                    }
                }
            }
        }

        let coins = ops
            .iter()
            .filter(|o| matches!(o, Some(Op::Coin { .. })))
            .count();
        let assignments: Vec<Option<usize>> = match mode {
            CoinMode::Purify => vec![None],
            CoinMode::Enumerate => {
                if coins >= 20 || (1usize << coins) > budget.max_branches {
                    return Err(Error::Budget(format!(
                        "{coins} coin flips exceed the branch budget"
                    )));
                }
                (0..1usize << coins).map(Some).collect()
            }
        };
        let mut branches = Vec::new();
        for a in assignments {
            let mut items = Vec::new();
            let mut c = 0;
            for (op, mark) in ops.iter().zip(&slot_marks) {
                match (op, mark) {
                    (_, Some(s)) => items.push(Item::Slot(*s)),
                    (Some(Op::Gate(g)), None) => items.push(fixed(g.clone())),
                    (Some(Op::Coin { record, broadcast }), None) => {
                        match a {
                            None => {
                                for g in purify_coin(*record, broadcast) {
                                    items.push(fixed(g));
                                }
                            }
                            Some(bits) => {
                                if (bits >> c) & 1 == 1 {
                                    items.push(fixed(Resolved::flip(*record)));
                                    for &b in broadcast {
                                        items.push(fixed(Resolved::flip(b)));
                                    }
                                }
                            }
                        }
                        c += 1;
                    }
                    (None, None) => unreachable!(),
                }
            }
            let w = match a {
                None => 1.0,
                Some(_) => 1.0 / (1u64 << coins) as f64,
            };
            branches.push((w, items));
        }
        Ok(Engine {
            n,
            branches,
            slots,
            output: layout.position(&verifier.output)?,
            prover_offset,
            dims: dims.to_vec(),
        })
    }


    pub fn kernels(&self, us: &[Matrix]) -> Vec<Resolved> {
        self.slots
            .iter()
            .zip(us)
            .map(|(s, u)| Resolved::matrix(u, s.targets.clone()))
            .collect()
    }

    pub fn initial(&self, shared: &[C64]) -> Vec<C64> {
        let mut v = vec![ZERO; 1 << self.n];
        for (x, a) in shared.iter().enumerate() {
            v[x << self.prover_offset] = *a;
        }
        v
    }

    fn run(items: &[Item], kernels: &[Resolved], state: &mut [C64]) {
        for it in items {
            match it {
                Item::Fixed { fwd, .. } => apply_dense(state, fwd),
                Item::Slot(s) => apply_dense(state, &kernels[*s]),
            }
        }
    }

    fn unrun(items: &[Item], inverse_kernels: &[Resolved], state: &mut [C64]) {
        for it in items.iter().rev() {
            match it {
                Item::Fixed { inv, .. } => apply_dense(state, inv),
                Item::Slot(s) => apply_dense(state, &inverse_kernels[*s]),
            }
        }
    }

    fn project(&self, state: &mut [C64]) {
        let bit = 1usize << self.output;
        for (i, a) in state.iter_mut().enumerate() {
            if i & bit == 0 {
                *a = ZERO;
            }
        }
    }

    pub fn value(&self, kernels: &[Resolved], shared: &[C64]) -> f64 {
        let start = self.initial(shared);
        let mut total = 0.0;
        for (w, items) in &self.branches {
            let mut s = start.clone();
            Self::run(items, kernels, &mut s);
            total += w * weight_dense(&s, &[(self.output, true)]);
        }
        total
    }

    /// `A` with `⟨Φ|A|Φ⟩` = acceptance, for states `Φ = low ⊗ |x⟩ ⊗ high`
    /// where `x` ranges over `2^width` basis states.
    pub fn shared_operator(
        &self,
        kernels: &[Resolved],
        low: &[C64],
        width: usize,
        high: &[C64],
    ) -> Matrix {
        let d = 1usize << width;
        let mut finals: Vec<Vec<(f64, Vec<C64>)>> = Vec::with_capacity(d);
        for x in 0..d {
            let mut e = vec![ZERO; d];
            e[x] = C64::from(1.0);
            let shared = kron(&kron(low, &e), high);
            let start = self.initial(&shared);
            let mut per_branch = Vec::with_capacity(self.branches.len());
            for (w, items) in &self.branches {
                let mut s = start.clone();
                Self::run(items, kernels, &mut s);
                self.project(&mut s);
                per_branch.push((*w, s));
            }
            finals.push(per_branch);
        }
        let mut a = Matrix::zeros(d, d);
        for x in 0..d {
            for y in x..d {
                let mut acc = ZERO;
                for b in 0..self.branches.len() {
                    let (w, fx) = &finals[x][b];
                    let fy = &finals[y][b].1;
                    let dot: C64 = fx.iter().zip(fy).map(|(p, q)| p.conj() * q).sum();
                    acc += dot * *w;
                }
                a[(x, y)] = acc;
                a[(y, x)] = acc.conj();
            }
        }
        a
    }

    /// Environment operator of slot `s`: the matrix `E` with
    /// `Re tr(U† E)` the linearization of acceptance at the current unitaries.
    pub fn environment(&self, kernels: &[Resolved], shared: &[C64], s: usize) -> Matrix {
        let slot = &self.slots[s];
        let d = slot.dim();
        let inverse: Vec<Resolved> = kernels.iter().map(Resolved::inverse).collect();
        let start = self.initial(shared);
        let mut e = Matrix::zeros(d, d);
        let offsets: Vec<usize> = (0..d)
            .map(|x| {
                let k = slot.targets.len();
                slot.targets
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| (x >> (k - 1 - j)) & 1 == 1)
                    .fold(0, |m, (_, &t)| m | 1 << t)
            })
            .collect();
        let tmask = offsets[d - 1];
        for (w, items) in &self.branches {
            let Some(pos) = items.iter().position(|it| matches!(it, Item::Slot(x) if *x == s)) else {
                continue;
            };
            let mut a = start.clone();
            Self::run(&items[..pos], kernels, &mut a);
            let mut b = a.clone();
            apply_dense(&mut b, &kernels[s]);
            Self::run(&items[pos + 1..], kernels, &mut b);
            self.project(&mut b);
            Self::unrun(&items[pos + 1..], &inverse, &mut b);
            for base in 0..a.len() {
                if base & tmask != 0 {
                    continue;
                }
                for (x, ox) in offsets.iter().enumerate() {
                    let bx = b[base | ox];
                    if bx == ZERO {
                        continue;
                    }
                    for (y, oy) in offsets.iter().enumerate() {
                        e[(x, y)] += bx * a[base | oy].conj() * *w;
                    }
                }
            }
        }
        e
    }

    /// Prover strategies holding the given slot unitaries.
    pub fn strategies(&self, verifier: &VerifierSpec, us: &[Matrix]) -> Vec<ProverStrategy> {
        let turns = verifier.prover_turns();
        let q = verifier.message_size();
        let mut out: Vec<ProverStrategy> = self
            .dims
            .iter()
            .map(|&p| ProverStrategy::idle(p, turns))
            .collect();
        for (slot, u) in self.slots.iter().zip(us) {
            let i = slot.prover;
            let targets = qubits_of(&prover_register(i), slot.private)
                .into_iter()
                .chain(qubits_of(&message_register(i), q))
                .collect();
            out[i].circuits[slot.turn] = Circuit::from(vec![Gate::unitary(u.clone(), targets)]);
        }
        out
    }
}

/// Tensor product with `low` in the least significant positions.
pub(crate) fn kron(low: &[C64], high: &[C64]) -> Vec<C64> {
    let mut out = Vec::with_capacity(low.len() * high.len());
    for h in high {
        for l in low {
            out.push(l * h);
        }
    }
    out
}
