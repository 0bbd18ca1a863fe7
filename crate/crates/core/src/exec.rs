//! Low-level kernels on dense and sparse amplitude storage.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::circuit::{Gate, GateOp};
use crate::error::{Error, Result};
use crate::linalg::{Matrix, C64, ZERO};
use crate::register::Layout;

const WORDS: usize = 8;

/// Largest number of qubits any state may have.
pub const MAX_QUBITS: usize = 64 * WORDS;

/// A computational-basis label; bit `j` is the value of qubit `j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct BasisIndex([u64; WORDS]);

impl BasisIndex {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_usize(x: usize) -> Self {
        let mut w = [0; WORDS];
        w[0] = x as u64;
        Self(w)
    }

    /// Low 64 bits as `usize` when nothing higher is set.
    pub fn to_usize(&self) -> Option<usize> {
        if self.0[1..].iter().any(|&w| w != 0) {
            return None;
        }
        usize::try_from(self.0[0]).ok()
    }

    #[inline]
    pub fn bit(&self, q: usize) -> bool {
        (self.0[q / 64] >> (q % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, q: usize, v: bool) {
        let m = 1u64 << (q % 64);
        if v {
            self.0[q / 64] |= m;
        } else {
            self.0[q / 64] &= !m;
        }
    }

    #[inline]
    pub fn flip(&mut self, q: usize) {
        self.0[q / 64] ^= 1u64 << (q % 64);
    }

    pub fn with(mut self, q: usize, v: bool) -> Self {
        self.set(q, v);
        self
    }
}

#[derive(Debug, Clone)]
pub(crate) enum Kernel {
    /// Bit flip on the single target.
    Flip,
    /// Exchange of the two targets.
    Swap,
    /// Phase applied when all targets are 1.
    Phase(C64),
    /// Row-major matrix of size `2^d`.
    Dense(Vec<C64>),
}

/// A gate with register references replaced by global positions.
#[derive(Debug, Clone)]
pub(crate) struct Resolved {
    pub kernel: Kernel,
    pub targets: Vec<usize>,
    pub controls: Vec<(usize, bool)>,
}

fn dense_kernel(m: &Matrix) -> Kernel {
    let d = m.nrows();
    let mut v = Vec::with_capacity(d * d);
    for r in 0..d {
        for c in 0..d {
            v.push(m[(r, c)]);
        }
    }
    Kernel::Dense(v)
}

impl Resolved {
    pub fn from_gate(g: &Gate, layout: &Layout) -> Result<Resolved> {
        let targets = g
            .targets
            .iter()
            .map(|t| layout.position(t))
            .collect::<Result<Vec<_>>>()?;
        let controls = g
            .controls
            .iter()
            .map(|c| Ok((layout.position(&c.qubit)?, c.value)))
            .collect::<Result<Vec<_>>>()?;
        let i = C64::new(0.0, 1.0);
        let kernel = match &g.op {
            GateOp::X => Kernel::Flip,
            GateOp::Swap => Kernel::Swap,
            GateOp::Z | GateOp::PhaseFlip => Kernel::Phase(C64::from(-1.0)),
            GateOp::S => Kernel::Phase(i),
            GateOp::Sdg => Kernel::Phase(-i),
            GateOp::Coin { .. } => {
                return Err(Error::Precondition(
                    "coin flip inside a unitary-only context".into(),
                ))
            }
            _ => dense_kernel(&g.local_matrix().expect("non-coin gate has a matrix")),
        };
        Ok(Resolved {
            kernel,
            targets,
            controls,
        })
    }

    /// A general unitary on `targets` (first target most significant).
    pub fn matrix(m: &Matrix, targets: Vec<usize>) -> Resolved {
        Resolved {
            kernel: dense_kernel(m),
            targets,
            controls: Vec::new(),
        }
    }

    pub fn flip(target: usize) -> Resolved {
        Resolved {
            kernel: Kernel::Flip,
            targets: vec![target],
            controls: Vec::new(),
        }
    }

    pub fn inverse(&self) -> Resolved {
        let kernel = match &self.kernel {
            Kernel::Flip => Kernel::Flip,
            Kernel::Swap => Kernel::Swap,
            Kernel::Phase(p) => Kernel::Phase(p.conj()),
            Kernel::Dense(m) => {
                let d = m.len().isqrt();
                let mut t = vec![ZERO; d * d];
                for r in 0..d {
                    for c in 0..d {
                        t[c * d + r] = m[r * d + c].conj();
                    }
                }
                Kernel::Dense(t)
            }
        };
        Resolved {
            kernel,
            targets: self.targets.clone(),
            controls: self.controls.clone(),
        }
    }

    fn offsets(&self) -> Vec<usize> {
        let d = self.targets.len();
        (0..1usize << d)
            .map(|x| {
                let mut off = 0;
                for (j, &t) in self.targets.iter().enumerate() {
                    if (x >> (d - 1 - j)) & 1 == 1 {
                        off |= 1 << t;
                    }
                }
                off
            })
            .collect()
    }
}

/// Mask/value pair for "all listed qubits take the listed values".
pub(crate) fn dense_condition(cond: &[(usize, bool)]) -> (usize, usize) {
    let mut mask = 0;
    let mut value = 0;
    for &(q, v) in cond {
        mask |= 1 << q;
        if v {
            value |= 1 << q;
        }
    }
    (mask, value)
}

pub(crate) fn apply_dense(amps: &mut [C64], g: &Resolved) {
    let (cmask, cval) = dense_condition(&g.controls);
    match &g.kernel {
        Kernel::Flip => {
            let t = 1usize << g.targets[0];
            for idx in 0..amps.len() {
                if idx & t == 0 && idx & cmask == cval {
                    amps.swap(idx, idx | t);
                }
            }
        }
        Kernel::Swap => {
            let (a, b) = (1usize << g.targets[0], 1usize << g.targets[1]);
            for idx in 0..amps.len() {
                if idx & a != 0 && idx & b == 0 && idx & cmask == cval {
                    amps.swap(idx, idx ^ a ^ b);
                }
            }
        }
        Kernel::Phase(p) => {
            let tmask = g.targets.iter().fold(0usize, |m, &t| m | 1 << t);
            let (mask, want) = (tmask | cmask, tmask | cval);
            for (idx, a) in amps.iter_mut().enumerate() {
                if idx & mask == want {
                    *a *= p;
                }
            }
        }
        Kernel::Dense(m) => {
            let offsets = g.offsets();
            let d = offsets.len();
            let tmask = g.targets.iter().fold(0usize, |m, &t| m | 1 << t);
            let mut buf = vec![ZERO; d];
            for base in 0..amps.len() {
                if base & tmask != 0 || base & cmask != cval {
                    continue;
                }
                for (x, off) in offsets.iter().enumerate() {
                    buf[x] = amps[base | off];
                }
                for (r, off) in offsets.iter().enumerate() {
                    let row = &m[r * d..(r + 1) * d];
                    let mut acc = ZERO;
                    for (c, v) in buf.iter().enumerate() {
                        acc += row[c] * v;
                    }
                    amps[base | off] = acc;
                }
            }
        }
    }
}

pub(crate) fn weight_dense(amps: &[C64], cond: &[(usize, bool)]) -> f64 {
    let (mask, value) = dense_condition(cond);
    amps.iter()
        .enumerate()
        .filter(|(i, _)| i & mask == value)
        .map(|(_, a)| a.norm_sqr())
        .sum()
}

pub(crate) type SparseMap = BTreeMap<BasisIndex, C64>;

#[inline]
fn holds(k: &BasisIndex, cond: &[(usize, bool)]) -> bool {
    cond.iter().all(|&(q, v)| k.bit(q) == v)
}

pub(crate) fn apply_sparse(map: &mut SparseMap, g: &Resolved, prune: f64) {
    match &g.kernel {
        Kernel::Phase(p) => {
            for (k, a) in map.iter_mut() {
                if holds(k, &g.controls) && g.targets.iter().all(|&t| k.bit(t)) {
                    *a *= p;
                }
            }
        }
        Kernel::Flip | Kernel::Swap => {
            let old = core::mem::take(map);
            for (mut k, a) in old {
                if holds(&k, &g.controls) {
                    match g.kernel {
                        Kernel::Flip => k.flip(g.targets[0]),
                        _ => {
                            let (x, y) = (g.targets[0], g.targets[1]);
                            if k.bit(x) != k.bit(y) {
                                k.flip(x);
                                k.flip(y);
                            }
                        }
                    }
                }
                map.insert(k, a);
            }
        }
        Kernel::Dense(m) => {
            let d = 1usize << g.targets.len();
            let mut groups: BTreeMap<BasisIndex, Vec<C64>> = BTreeMap::new();
            let old = core::mem::take(map);
            for (k, a) in old {
                if !holds(&k, &g.controls) {
                    map.insert(k, a);
                    continue;
                }
                let mut base = k;
                let mut x = 0;
                for &t in &g.targets {
                    x = (x << 1) | usize::from(k.bit(t));
                    base.set(t, false);
                }
                groups.entry(base).or_insert_with(|| vec![ZERO; d])[x] = a;
            }
            for (base, v) in groups {
                for r in 0..d {
                    let row = &m[r * d..(r + 1) * d];
                    let mut acc = ZERO;
                    for (c, a) in v.iter().enumerate() {
                        acc += row[c] * a;
                    }
                    if acc.norm_sqr() > prune {
                        let mut k = base;
                        for (j, &t) in g.targets.iter().enumerate() {
                            k.set(t, (r >> (g.targets.len() - 1 - j)) & 1 == 1);
                        }
                        map.insert(k, acc);
                    }
                }
            }
        }
    }
}

pub(crate) fn weight_sparse(map: &SparseMap, cond: &[(usize, bool)]) -> f64 {
    map.iter()
        .filter(|(k, _)| holds(k, cond))
        .map(|(_, a)| a.norm_sqr())
        .sum()
}

#[cfg(test)]
mod tests {
    use alloc::vec;
    use super::*;

    #[test]
    fn basis_index_bits() {
        let mut k = BasisIndex::zero();
        k.set(70, true);
        k.flip(3);
        assert!(k.bit(70) && k.bit(3) && !k.bit(4));
        assert_eq!(k.to_usize(), None);
        assert_eq!(BasisIndex::from_usize(5).to_usize(), Some(5));
    }

    #[test]
    fn dense_and_sparse_kernels_agree() {
        let h = crate::linalg::gates::hadamard();
        let gates = [
            Resolved::matrix(&h, vec![0]),
            Resolved {
                kernel: Kernel::Flip,
                targets: vec![2],
                controls: vec![(0, true)],
            },
            Resolved::matrix(&h.kronecker(&h), vec![2, 1]),
            Resolved {
                kernel: Kernel::Phase(C64::new(0.0, 1.0)),
                targets: vec![1],
                controls: vec![(2, false)],
            },
            Resolved {
                kernel: Kernel::Swap,
                targets: vec![0, 2],
                controls: vec![],
            },
        ];
        let mut dense = vec![ZERO; 8];
        dense[0] = C64::from(1.0);
        let mut sparse = SparseMap::new();
        sparse.insert(BasisIndex::zero(), C64::from(1.0));
        for g in &gates {
            apply_dense(&mut dense, g);
            apply_sparse(&mut sparse, g, 1e-30);
        }
        for (i, a) in dense.iter().enumerate() {
            let b = sparse
                .get(&BasisIndex::from_usize(i))
                .copied()
                .unwrap_or(ZERO);
            assert!((a - b).norm() < 1e-14);
        }
    }
}
