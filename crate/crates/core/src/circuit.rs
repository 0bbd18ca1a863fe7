//! Gates and circuits over named registers.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, C64, ONE, ZERO};
use crate::register::Layout;

/// One qubit of a named register.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct QubitRef {
    pub register: String,
    pub index: usize,
}

impl QubitRef {
    pub fn new(register: &str, index: usize) -> Self {
        Self {
            register: register.into(),
            index,
        }
    }
}

impl fmt::Display for QubitRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}]", self.register, self.index)
    }
}

/// Shorthand for [`QubitRef::new`].
pub fn q(register: &str, index: usize) -> QubitRef {
    QubitRef::new(register, index)
}

/// Every qubit of a register.
pub fn qubits_of(register: &str, size: usize) -> Vec<QubitRef> {
    (0..size).map(|i| q(register, i)).collect()
}

/// A gate fires only when every control qubit holds its `value`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Control {
    pub qubit: QubitRef,
    pub value: bool,
}

impl Control {
    pub fn on(qubit: QubitRef) -> Self {
        Self { qubit, value: true }
    }

    pub fn off(qubit: QubitRef) -> Self {
        Self {
            qubit,
            value: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GateOp {
    H,
    X,
    Y,
    Z,
    S,
    Sdg,
    Swap,
    /// Multiplies by −1 when every target is 1 (and the controls hold).
    /// With no targets this is a phase flip conditioned on the controls alone.
    PhaseFlip,
    /// Arbitrary unitary; the first target is the most significant local bit.
    Unitary(Matrix),
    /// A fair coin written into the (fresh) target and copied to `broadcast`.
    Coin { broadcast: Vec<QubitRef> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    pub op: GateOp,
    pub targets: Vec<QubitRef>,
    pub controls: Vec<Control>,
}

impl Gate {
    pub fn new(op: GateOp, targets: Vec<QubitRef>) -> Self {
        Self {
            op,
            targets,
            controls: Vec::new(),
        }
    }

    pub fn h(t: QubitRef) -> Self {
        Self::new(GateOp::H, vec![t])
    }
    pub fn x(t: QubitRef) -> Self {
        Self::new(GateOp::X, vec![t])
    }
    pub fn y(t: QubitRef) -> Self {
        Self::new(GateOp::Y, vec![t])
    }
    pub fn z(t: QubitRef) -> Self {
        Self::new(GateOp::Z, vec![t])
    }
    pub fn s(t: QubitRef) -> Self {
        Self::new(GateOp::S, vec![t])
    }
    pub fn sdg(t: QubitRef) -> Self {
        Self::new(GateOp::Sdg, vec![t])
    }
    pub fn swap(a: QubitRef, b: QubitRef) -> Self {
        Self::new(GateOp::Swap, vec![a, b])
    }
    pub fn cnot(c: QubitRef, t: QubitRef) -> Self {
        Self::x(t).controlled_by(c, true)
    }
    pub fn toffoli(c1: QubitRef, c2: QubitRef, t: QubitRef) -> Self {
        Self::x(t).controlled_by(c1, true).controlled_by(c2, true)
    }
    pub fn phase_flip(targets: Vec<QubitRef>) -> Self {
        Self::new(GateOp::PhaseFlip, targets)
    }
    pub fn unitary(matrix: Matrix, targets: Vec<QubitRef>) -> Self {
        Self::new(GateOp::Unitary(matrix), targets)
    }
    pub fn coin(record: QubitRef, broadcast: Vec<QubitRef>) -> Self {
        Self::new(GateOp::Coin { broadcast }, vec![record])
    }

    /// Adds one control. Not meaningful for coins; see [`Circuit::controlled`].
    pub fn controlled_by(mut self, qubit: QubitRef, value: bool) -> Self {
        self.controls.push(Control { qubit, value });
        self
    }

    pub fn with_controls(mut self, controls: &[Control]) -> Self {
        self.controls.extend(controls.iter().cloned());
        self
    }

    pub fn name(&self) -> &'static str {
        match (&self.op, self.controls.len()) {
            (GateOp::X, 1) if self.controls[0].value => "CNOT",
            (GateOp::X, 2) if self.controls.iter().all(|c| c.value) => "TOFFOLI",
            (GateOp::H, _) => "H",
            (GateOp::X, _) => "X",
            (GateOp::Y, _) => "Y",
            (GateOp::Z, _) => "Z",
            (GateOp::S, _) => "S",
            (GateOp::Sdg, _) => "SDG",
            (GateOp::Swap, _) => "SWAP",
            (GateOp::PhaseFlip, _) => "CPHASE",
            (GateOp::Unitary(_), _) => "U",
            (GateOp::Coin { .. }, _) => "COIN",
        }
    }

    pub fn is_coin(&self) -> bool {
        matches!(self.op, GateOp::Coin { .. })
    }

    fn expected_targets(&self) -> Option<usize> {
        match &self.op {
            GateOp::H | GateOp::X | GateOp::Y | GateOp::Z | GateOp::S | GateOp::Sdg => Some(1),
            GateOp::Swap => Some(2),
            GateOp::PhaseFlip => None,
            GateOp::Unitary(m) => Some(m.nrows().trailing_zeros() as usize),
            GateOp::Coin { .. } => Some(1),
        }
    }

    /// Matrix on the targets (controls excluded); `None` for coins.
    pub fn local_matrix(&self) -> Option<Matrix> {
        let i = C64::new(0.0, 1.0);
        let m2 = |a: [C64; 4]| Matrix::from_row_slice(2, 2, &a);
        Some(match &self.op {
            GateOp::H => linalg::gates::hadamard(),
            GateOp::X => m2([ZERO, ONE, ONE, ZERO]),
            GateOp::Y => m2([ZERO, -i, i, ZERO]),
            GateOp::Z => m2([ONE, ZERO, ZERO, -ONE]),
            GateOp::S => m2([ONE, ZERO, ZERO, i]),
            GateOp::Sdg => m2([ONE, ZERO, ZERO, -i]),
            GateOp::Swap => {
                let mut m = Matrix::zeros(4, 4);
                m[(0, 0)] = ONE;
                m[(1, 2)] = ONE;
                m[(2, 1)] = ONE;
                m[(3, 3)] = ONE;
                m
            }
            GateOp::PhaseFlip => {
                let d = 1usize << self.targets.len();
                let mut m = Matrix::identity(d, d);
                m[(d - 1, d - 1)] = -ONE;
                m
            }
            GateOp::Unitary(m) => m.clone(),
            GateOp::Coin { .. } => return None,
        })
    }

    /// True when the gate acts diagonally in the computational basis.
    pub fn is_diagonal(&self) -> bool {
        match &self.op {
            GateOp::Z | GateOp::S | GateOp::Sdg | GateOp::PhaseFlip => true,
            GateOp::Unitary(m) => {
                (0..m.nrows()).all(|r| (0..m.ncols()).all(|c| r == c || m[(r, c)] == ZERO))
            }
            _ => false,
        }
    }

    pub fn dagger(&self) -> Result<Gate> {
        let op = match &self.op {
            GateOp::S => GateOp::Sdg,
            GateOp::Sdg => GateOp::S,
            GateOp::Unitary(m) => GateOp::Unitary(m.adjoint()),
            GateOp::Coin { .. } => return Err(Error::CoinNotInvertible),
            other => other.clone(),
        };
        Ok(Gate {
            op,
            targets: self.targets.clone(),
            controls: self.controls.clone(),
        })
    }

    /// Every qubit the gate mentions: targets, controls, broadcast copies.
    pub fn qubits(&self) -> impl Iterator<Item = &QubitRef> {
        let broadcast: &[QubitRef] = match &self.op {
            GateOp::Coin { broadcast } => broadcast,
            _ => &[],
        };
        self.targets
            .iter()
            .chain(self.controls.iter().map(|c| &c.qubit))
            .chain(broadcast.iter())
    }

    pub fn map_qubits(&self, f: &mut impl FnMut(&QubitRef) -> QubitRef) -> Gate {
        let op = match &self.op {
            GateOp::Coin { broadcast } => GateOp::Coin {
                broadcast: broadcast.iter().map(&mut *f).collect(),
            },
            other => other.clone(),
        };
        Gate {
            op,
            targets: self.targets.iter().map(&mut *f).collect(),
            controls: self
                .controls
                .iter()
                .map(|c| Control {
                    qubit: f(&c.qubit),
                    value: c.value,
                })
                .collect(),
        }
    }

    /// Structural check against a layout: arity, distinct qubits, valid references, unitarity.
    pub fn check(&self, layout: &Layout, unitarity_tol: f64) -> Result<()> {
        if let GateOp::Unitary(m) = &self.op {
            if !m.is_square() || !m.nrows().is_power_of_two() {
                return Err(Error::DimensionMismatch {
                    expected: 1 << self.targets.len(),
                    found: m.nrows(),
                });
            }
            let dev = linalg::unitarity_deviation(m);
            if dev > unitarity_tol {
                return Err(Error::NotUnitary {
                    gate: String::from("U"),
                    deviation: dev,
                });
            }
        }
        if let Some(n) = self.expected_targets() {
            if n != self.targets.len() {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: self.targets.len(),
                });
            }
        }
        if self.is_coin() && !self.controls.is_empty() {
            return Err(Error::CoinNotInvertible);
        }
        let mut seen = BTreeSet::new();
        for qb in self.qubits() {
            layout.position(qb)?;
            if !seen.insert(qb) {
                return Err(Error::DuplicateQubit(alloc::format!("{qb}")));
            }
        }
        Ok(())
    }
}

/// An ordered gate list.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Circuit {
    pub gates: Vec<Gate>,
}

impl From<Vec<Gate>> for Circuit {
    fn from(gates: Vec<Gate>) -> Self {
        Self { gates }
    }
}

impl Circuit {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn push(&mut self, g: Gate) -> &mut Self {
        self.gates.push(g);
        self
    }

    pub fn append(&mut self, other: &Circuit) -> &mut Self {
        self.gates.extend(other.gates.iter().cloned());
        self
    }

    /// `self` then `other`.
    pub fn then(mut self, other: &Circuit) -> Self {
        self.append(other);
        self
    }

    pub fn has_coins(&self) -> bool {
        self.gates.iter().any(Gate::is_coin)
    }

    pub fn coin_count(&self) -> usize {
        self.gates.iter().filter(|g| g.is_coin()).count()
    }

    /// Inverse circuit; fails if a coin is present.
    pub fn dagger(&self) -> Result<Circuit> {
        let gates = self
            .gates
            .iter()
            .rev()
            .map(Gate::dagger)
            .collect::<Result<Vec<_>>>()?;
        Ok(Circuit { gates })
    }

    /// The same circuit with extra controls on every gate; fails if a coin is present.
    pub fn controlled(&self, controls: &[Control]) -> Result<Circuit> {
        if self.has_coins() {
            return Err(Error::CoinNotInvertible);
        }
        Ok(Circuit {
            gates: self
                .gates
                .iter()
                .map(|g| g.clone().with_controls(controls))
                .collect(),
        })
    }

    /// Replaces each coin by its unitary purification: `H` on the record, then
    /// CNOTs from the record into the broadcast qubits.
    pub fn purify(&self) -> Circuit {
        let mut out = Circuit::new();
        for g in &self.gates {
            match &g.op {
                GateOp::Coin { broadcast } => {
                    let rec = g.targets[0].clone();
                    out.push(Gate::h(rec.clone()));
                    for b in broadcast {
                        out.push(Gate::cnot(rec.clone(), b.clone()));
                    }
                }
                _ => {
                    out.push(g.clone());
                }
            }
        }
        out
    }

    pub fn map_qubits(&self, mut f: impl FnMut(&QubitRef) -> QubitRef) -> Circuit {
        Circuit {
            gates: self.gates.iter().map(|g| g.map_qubits(&mut f)).collect(),
        }
    }

    /// Renames registers through `f`, keeping indices.
    pub fn rename_registers(&self, mut f: impl FnMut(&str) -> String) -> Circuit {
        self.map_qubits(|qb| QubitRef {
            register: f(&qb.register),
            index: qb.index,
        })
    }

    /// Names of all registers mentioned.
    pub fn registers(&self) -> BTreeSet<String> {
        self.gates
            .iter()
            .flat_map(|g| g.qubits().map(|qb| qb.register.clone()))
            .collect()
    }
}
