//! State vectors over named registers.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::circuit::{Circuit, Gate};
use crate::error::{Error, Result};
use crate::exec::{self, BasisIndex, Resolved, SparseMap, MAX_QUBITS};
use crate::linalg::{Matrix, Vector, C64, ONE, ZERO};
use crate::projector::ProjectorOp;
use crate::register::Layout;

/// States with at most this many qubits are stored densely by default.
pub const DENSE_QUBIT_LIMIT: usize = 20;

/// Dense storage is never attempted above this many qubits.
pub const DENSE_HARD_LIMIT: usize = 28;

const PRUNE: f64 = 1e-26;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Storage {
    Dense(Vec<C64>),
    Sparse(SparseMap),
}

/// Amplitudes over an ordered register layout.
///
/// Storage is dense for small layouts and a sorted map of non-zero amplitudes
/// above [`DENSE_QUBIT_LIMIT`]; both behave identically.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    layout: Layout,
    storage: Storage,
    normalized: bool,
}

impl StateVector {
    /// `|0…0⟩` on `layout`.
    pub fn zero(layout: Layout) -> Result<Self> {
        Self::basis(layout, BasisIndex::zero())
    }

    pub fn basis(layout: Layout, index: BasisIndex) -> Result<Self> {
        let n = layout.num_qubits();
        check_size(n)?;
        let storage = if n <= DENSE_QUBIT_LIMIT {
            let mut v = vec![ZERO; 1 << n];
            v[index.to_usize().filter(|&i| i < 1 << n).ok_or(Error::DimensionMismatch {
                expected: 1 << n,
                found: usize::MAX,
            })?] = ONE;
            Storage::Dense(v)
        } else {
            let mut m = SparseMap::new();
            m.insert(index, ONE);
            Storage::Sparse(m)
        };
        Ok(Self {
            layout,
            storage,
            normalized: true,
        })
    }

    /// Dense amplitudes; the norm must be 1 within `tol`.
    pub fn from_amplitudes(layout: Layout, amps: Vec<C64>, tol: f64) -> Result<Self> {
        let s = Self::from_amplitudes_unnormalized(layout, amps)?;
        s.require_normalized(tol)
    }

    /// Dense amplitudes with no norm requirement; the result is flagged unnormalized.
    pub fn from_amplitudes_unnormalized(layout: Layout, amps: Vec<C64>) -> Result<Self> {
        let n = layout.num_qubits();
        if n > DENSE_HARD_LIMIT {
            return Err(Error::TooManyQubits {
                qubits: n,
                limit: DENSE_HARD_LIMIT,
            });
        }
        if amps.len() != 1 << n {
            return Err(Error::DimensionMismatch {
                expected: 1 << n,
                found: amps.len(),
            });
        }
        let mut s = Self {
            layout,
            storage: Storage::Dense(amps),
            normalized: false,
        };
        if n > DENSE_QUBIT_LIMIT {
            s = s.into_sparse();
        }
        Ok(s)
    }

    /// Amplitudes given as (basis index, amplitude) pairs; the norm must be 1 within `tol`.
    pub fn from_entries(
        layout: Layout,
        entries: impl IntoIterator<Item = (BasisIndex, C64)>,
        tol: f64,
    ) -> Result<Self> {
        let n = layout.num_qubits();
        check_size(n)?;
        let mut map = SparseMap::new();
        for (k, a) in entries {
            if (n..MAX_QUBITS).any(|q| k.bit(q)) {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: (0..MAX_QUBITS).rev().find(|&q| k.bit(q)).unwrap_or(0) + 1,
                });
            }
            *map.entry(k).or_insert(ZERO) += a;
        }
        let mut s = Self {
            layout,
            storage: Storage::Sparse(map),
            normalized: false,
        };
        if n <= DENSE_QUBIT_LIMIT {
            s = s.into_dense()?;
        }
        s.require_normalized(tol)
    }

    /// From a column vector in the layout's basis order.
    pub fn from_vector(layout: Layout, v: &Vector, tol: f64) -> Result<Self> {
        Self::from_amplitudes(layout, v.iter().copied().collect(), tol)
    }

    fn require_normalized(mut self, tol: f64) -> Result<Self> {
        let n = self.norm_sq();
        if (n - 1.0).abs() > tol {
            return Err(Error::NotNormalized(n));
        }
        self.normalized = true;
        Ok(self)
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn num_qubits(&self) -> usize {
        self.layout.num_qubits()
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.storage, Storage::Sparse(_))
    }

    /// False for states built by projection or linear combination.
    pub fn is_normalized(&self) -> bool {
        self.normalized
    }


    pub fn amplitude(&self, index: BasisIndex) -> C64 {
        match &self.storage {
            Storage::Dense(v) => index
                .to_usize()
                .and_then(|i| v.get(i).copied())
                .unwrap_or(ZERO),
            Storage::Sparse(m) => m.get(&index).copied().unwrap_or(ZERO),
        }
    }

    /// Non-zero amplitudes in increasing basis order.
    pub fn entries(&self) -> Vec<(BasisIndex, C64)> {
        match &self.storage {
            Storage::Dense(v) => v
                .iter()
                .enumerate()
                .filter(|(_, a)| **a != ZERO)
                .map(|(i, a)| (BasisIndex::from_usize(i), *a))
                .collect(),
            Storage::Sparse(m) => m.iter().map(|(k, a)| (*k, *a)).collect(),
        }
    }

    /// Full amplitude vector; fails above [`DENSE_HARD_LIMIT`] qubits.
    pub fn to_vector(&self) -> Result<Vector> {
        let d = self.clone().into_dense()?;
        match d.storage {
            Storage::Dense(v) => Ok(Vector::from_vec(v)),
            Storage::Sparse(_) => unreachable!(),
        }
    }

    pub fn density_matrix(&self) -> Result<Matrix> {
        let v = self.to_vector()?;
        Ok(&v * v.adjoint())
    }

    pub fn into_dense(self) -> Result<Self> {
        let n = self.num_qubits();
        let storage = match self.storage {
            Storage::Dense(v) => Storage::Dense(v),
            Storage::Sparse(m) => {
                if n > DENSE_HARD_LIMIT {
                    return Err(Error::TooManyQubits {
                        qubits: n,
                        limit: DENSE_HARD_LIMIT,
                    });
                }
                let mut v = vec![ZERO; 1 << n];
                for (k, a) in m {
                    v[k.to_usize().expect("index within dense range")] = a;
                }
                Storage::Dense(v)
            }
        };
        Ok(Self {
            layout: self.layout,
            storage,
            normalized: self.normalized,
        })
    }

    pub fn into_sparse(self) -> Self {
        let storage = match self.storage {
            Storage::Dense(v) => Storage::Sparse(
                v.into_iter()
                    .enumerate()
                    .filter(|(_, a)| a.norm_sqr() > PRUNE)
                    .map(|(i, a)| (BasisIndex::from_usize(i), a))
                    .collect(),
            ),
            s => s,
        };
        Self {
            layout: self.layout,
            storage,
            normalized: self.normalized,
        }
    }

    pub fn norm_sq(&self) -> f64 {
        self.weight(&[])
    }

    pub(crate) fn weight(&self, cond: &[(usize, bool)]) -> f64 {
        match &self.storage {
            Storage::Dense(v) => exec::weight_dense(v, cond),
            Storage::Sparse(m) => exec::weight_sparse(m, cond),
        }
    }

    pub(crate) fn apply_resolved(&mut self, g: &Resolved) {
        match &mut self.storage {
            Storage::Dense(v) => exec::apply_dense(v, g),
            Storage::Sparse(m) => exec::apply_sparse(m, g, PRUNE),
        }
    }

    /// `U|ψ⟩` for a single gate; coins act as their purification.
    pub fn apply(&self, gate: &Gate) -> Result<StateVector> {
        let mut out = self.clone();
        out.apply_circuit_in_place(&Circuit::from(vec![gate.clone()]))?;
        Ok(out)
    }

    pub fn apply_circuit(&self, c: &Circuit) -> Result<StateVector> {
        let mut out = self.clone();
        out.apply_circuit_in_place(c)?;
        Ok(out)
    }

    pub fn apply_circuit_in_place(&mut self, c: &Circuit) -> Result<()> {
        let pure = c.purify();
        let resolved = pure
            .gates
            .iter()
            .map(|g| {
                g.check(&self.layout, f64::INFINITY)?;
                Resolved::from_gate(g, &self.layout)
            })
            .collect::<Result<Vec<_>>>()?;
        for g in &resolved {
            self.apply_resolved(g);
        }
        Ok(())
    }

    /// `‖P|ψ⟩‖²`.
    pub fn project_norm_sq(&self, p: &ProjectorOp) -> Result<f64> {
        let (cond, negated) = p.condition(&self.layout)?;
        let w = self.weight(&cond);
        Ok(if negated { self.norm_sq() - w } else { w })
    }

    /// `P|ψ⟩` (unnormalized).
    pub fn project(&self, p: &ProjectorOp) -> Result<StateVector> {
        let (cond, negated) = p.condition(&self.layout)?;
        let keep = |k: &BasisIndex| cond.iter().all(|&(q, v)| k.bit(q) == v) != negated;
        let storage = match &self.storage {
            Storage::Dense(v) => Storage::Dense(
                v.iter()
                    .enumerate()
                    .map(|(i, a)| if keep(&BasisIndex::from_usize(i)) { *a } else { ZERO })
                    .collect(),
            ),
            Storage::Sparse(m) => {
                Storage::Sparse(m.iter().filter(|(k, _)| keep(k)).map(|(k, a)| (*k, *a)).collect())
            }
        };
        Ok(Self {
            layout: self.layout.clone(),
            storage,
            normalized: false,
        })
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        self.same_layout(other)?;
        Ok(match (&self.storage, &other.storage) {
            (Storage::Dense(a), Storage::Dense(b)) => {
                a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
            }
            _ => self
                .entries()
                .into_iter()
                .map(|(k, a)| a.conj() * other.amplitude(k))
                .sum(),
        })
    }

    /// `self + c·other` (flagged unnormalized).
    pub fn add_scaled(&self, c: C64, other: &StateVector) -> Result<StateVector> {
        self.same_layout(other)?;
        let storage = match (&self.storage, &other.storage) {
            (Storage::Dense(a), Storage::Dense(b)) => {
                Storage::Dense(a.iter().zip(b).map(|(x, y)| x + c * y).collect())
            }
            _ => {
                let mut m: SparseMap = self.entries().into_iter().collect();
                for (k, a) in other.entries() {
                    *m.entry(k).or_insert(ZERO) += c * a;
                }
                m.retain(|_, a| a.norm_sqr() > PRUNE);
                Storage::Sparse(m)
            }
        };
        Ok(Self {
            layout: self.layout.clone(),
            storage,
            normalized: false,
        })
    }

    pub fn scale(&self, c: C64) -> StateVector {
        let storage = match &self.storage {
            Storage::Dense(v) => Storage::Dense(v.iter().map(|a| a * c).collect()),
            Storage::Sparse(m) => Storage::Sparse(m.iter().map(|(k, a)| (*k, a * c)).collect()),
        };
        Self {
            layout: self.layout.clone(),
            storage,
            normalized: self.normalized && (c.norm() - 1.0).abs() < 1e-15,
        }
    }

    /// Largest amplitude difference.
    pub fn max_distance(&self, other: &StateVector) -> Result<f64> {
        let diff = self.add_scaled(-ONE, other)?;
        Ok(diff
            .entries()
            .iter()
            .map(|(_, a)| a.norm())
            .fold(0.0, f64::max))
    }

    /// `self ⊗ other`, with `self` in the low positions.
    pub fn tensor(&self, other: &StateVector) -> Result<StateVector> {
        let layout = self.layout.concat(&other.layout)?;
        let shift = self.num_qubits();
        let mut entries = Vec::new();
        for (kb, b) in other.entries() {
            for (ka, a) in self.entries() {
                let mut k = ka;
                for qb in 0..other.num_qubits() {
                    if kb.bit(qb) {
                        k.set(qb + shift, true);
                    }
                }
                entries.push((k, a * b));
            }
        }
        let normalized = self.normalized && other.normalized;
        let n = layout.num_qubits();
        check_size(n)?;
        let mut s = Self {
            layout,
            storage: Storage::Sparse(entries.into_iter().collect()),
            normalized,
        };
        if n <= DENSE_QUBIT_LIMIT {
            s = s.into_dense()?;
        }
        Ok(s)
    }

    /// Moves every qubit `j` to position `map[j]` of `layout`; `None` drops the
    /// qubit, which must be `|0⟩` up to weight `tol`. Unmapped target qubits start at 0.
    pub fn relabel(&self, layout: Layout, map: &[Option<usize>], tol: f64) -> Result<StateVector> {
        if map.len() != self.num_qubits() {
            return Err(Error::DimensionMismatch {
                expected: self.num_qubits(),
                found: map.len(),
            });
        }
        let n = layout.num_qubits();
        check_size(n)?;
        let dropped: Vec<(usize, bool)> = map
            .iter()
            .enumerate()
            .filter(|(_, t)| t.is_none())
            .map(|(j, _)| (j, false))
            .collect();
        let lost = self.norm_sq() - self.weight(&dropped);
        if lost > tol {
            return Err(Error::Numerical(alloc::format!(
                "discarded qubits carry weight {lost:.3e}"
            )));
        }
        let mut out: BTreeMap<BasisIndex, C64> = BTreeMap::new();
        for (k, a) in self.entries() {
            if dropped.iter().any(|&(j, _)| k.bit(j)) {
                continue;
            }
            let mut t = BasisIndex::zero();
            for (j, dest) in map.iter().enumerate() {
                if let Some(d) = dest {
                    if k.bit(j) {
                        t.set(*d, true);
                    }
                }
            }
            *out.entry(t).or_insert(ZERO) += a;
        }
        let mut s = Self {
            layout,
            storage: Storage::Sparse(out),
            normalized: false,
        };
        if n <= DENSE_QUBIT_LIMIT {
            s = s.into_dense()?;
        }
        let norm = s.norm_sq();
        s.normalized = self.normalized && (norm - 1.0).abs() <= tol;
        Ok(s)
    }

    /// Storage form chosen for `qubits` by default.
    pub(crate) fn with_default_storage(self) -> Result<Self> {
        if self.num_qubits() <= DENSE_QUBIT_LIMIT {
            self.into_dense()
        } else {
            Ok(self.into_sparse())
        }
    }

    fn same_layout(&self, other: &StateVector) -> Result<()> {
        if self.layout != other.layout {
            return Err(Error::DimensionMismatch {
                expected: self.num_qubits(),
                found: other.num_qubits(),
            });
        }
        Ok(())
    }
}

fn check_size(n: usize) -> Result<()> {
    if n > MAX_QUBITS {
        return Err(Error::TooManyQubits {
            qubits: n,
            limit: MAX_QUBITS,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use alloc::vec;
    use super::*;
    use crate::circuit::q;
    use crate::register::Register;
    use core::f64::consts::FRAC_1_SQRT_2;

    fn one(name: &str, n: usize) -> Layout {
        Layout::new(vec![Register::new(name, n)]).unwrap()
    }

    #[test]
    fn x_flips_basis_state() {
        let s = StateVector::zero(one("A", 1)).unwrap();
        let t = s.apply(&Gate::x(q("A", 0))).unwrap();
        assert_eq!(t.amplitude(BasisIndex::from_usize(1)), ONE);
    }

    #[test]
    fn hadamard_gives_plus() {
        let s = StateVector::zero(one("A", 1))
            .unwrap()
            .apply(&Gate::h(q("A", 0)))
            .unwrap();
        for i in 0..2 {
            assert!((s.amplitude(BasisIndex::from_usize(i)).re - FRAC_1_SQRT_2).abs() < 1e-15);
        }
        let p = s.project_norm_sq(&ProjectorOp::OutputIsOne(q("A", 0))).unwrap();
        assert!((p - 0.5).abs() < 1e-15);
    }

    #[test]
    fn bell_preparation() {
        let c = Circuit::from(vec![Gate::h(q("A", 0)), Gate::cnot(q("A", 0), q("A", 1))]);
        let s = StateVector::zero(one("A", 2)).unwrap().apply_circuit(&c).unwrap();
        assert!((s.amplitude(BasisIndex::from_usize(0)).re - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((s.amplitude(BasisIndex::from_usize(3)).re - FRAC_1_SQRT_2).abs() < 1e-15);
        let p = s.project_norm_sq(&ProjectorOp::AllZero(vec![q("A", 0)])).unwrap();
        assert!((p - 0.5).abs() < 1e-15);
        let c = s
            .project_norm_sq(&ProjectorOp::AllZero(vec![q("A", 0)]).complement())
            .unwrap();
        assert!((c - 0.5).abs() < 1e-15);
    }

    #[test]
    fn errors_on_bad_targets() {
        let s = StateVector::zero(one("A", 1)).unwrap();
        assert!(matches!(s.apply(&Gate::x(q("B", 0))), Err(Error::UnknownRegister(_))));
        assert!(matches!(
            s.apply(&Gate::x(q("A", 3))),
            Err(Error::QubitOutOfRange { .. })
        ));
    }

    #[test]
    fn first_target_is_most_significant() {
        // U = X ⊗ I on targets [A1, A0] flips A1.
        let x = Gate::x(q("A", 0)).local_matrix().unwrap();
        let u = x.kronecker(&Matrix::identity(2, 2));
        let s = StateVector::zero(one("A", 2))
            .unwrap()
            .apply(&Gate::unitary(u, vec![q("A", 1), q("A", 0)]))
            .unwrap();
        assert_eq!(s.amplitude(BasisIndex::from_usize(2)), ONE);
    }

    #[test]
    fn sparse_layouts_above_limit() {
        let s = StateVector::zero(one("A", 40)).unwrap();
        assert!(s.is_sparse());
        let t = s
            .apply_circuit(&Circuit::from(vec![
                Gate::h(q("A", 39)),
                Gate::cnot(q("A", 39), q("A", 0)),
            ]))
            .unwrap();
        assert_eq!(t.entries().len(), 2);
        assert!((t.norm_sq() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn relabel_moves_and_drops() {
        let l = Layout::new(vec![Register::new("A", 1), Register::new("B", 1)]).unwrap();
        let s = StateVector::zero(l).unwrap().apply(&Gate::x(q("A", 0))).unwrap();
        let target = one("C", 3);
        let r = s.relabel(target, &[Some(2), None], 1e-12).unwrap();
        assert_eq!(r.amplitude(BasisIndex::from_usize(4)), ONE);
        assert!(s.relabel(one("C", 1), &[None, Some(0)], 1e-12).is_err());
    }

    #[test]
    fn tensor_places_left_factor_low() {
        let a = StateVector::zero(one("A", 1)).unwrap().apply(&Gate::x(q("A", 0))).unwrap();
        let b = StateVector::zero(one("B", 1)).unwrap();
        let t = a.tensor(&b).unwrap();
        assert_eq!(t.amplitude(BasisIndex::from_usize(1)), ONE);
    }
}
