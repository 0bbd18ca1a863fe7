use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::circuit::QubitRef;
use crate::error::{Error, Result};

/// A named block of qubits.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Register {
    pub name: String,
    pub qubits: usize,
}

impl Register {
    pub fn new(name: impl Into<String>, qubits: usize) -> Self {
        Self {
            name: name.into(),
            qubits,
        }
    }
}

/// Ordered registers; qubit `j` of the whole layout is bit `j` of a basis index,
/// so the first register occupies the least significant bits.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Layout {
    registers: Vec<Register>,
}

impl Layout {
    pub fn new(registers: Vec<Register>) -> Result<Self> {
        for (i, r) in registers.iter().enumerate() {
            if registers[..i].iter().any(|o| o.name == r.name) {
                return Err(Error::DuplicateRegister(r.name.clone()));
            }
        }
        Ok(Self { registers })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn registers(&self) -> &[Register] {
        &self.registers
    }

    pub fn num_qubits(&self) -> usize {
        self.registers.iter().map(|r| r.qubits).sum()
    }

    pub fn get(&self, name: &str) -> Option<&Register> {
        self.registers.iter().find(|r| r.name == name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.get(name).is_some()
    }

    /// Position of the first qubit of `name`.
    pub fn offset(&self, name: &str) -> Result<usize> {
        let mut off = 0;
        for r in &self.registers {
            if r.name == name {
                return Ok(off);
            }
            off += r.qubits;
        }
        Err(Error::UnknownRegister(name.to_string()))
    }

    /// Global position of a qubit reference.
    pub fn position(&self, q: &QubitRef) -> Result<usize> {
        let reg = self
            .get(&q.register)
            .ok_or_else(|| Error::UnknownRegister(q.register.clone()))?;
        if q.index >= reg.qubits {
            return Err(Error::QubitOutOfRange {
                register: q.register.clone(),
                index: q.index,
                size: reg.qubits,
            });
        }
        Ok(self.offset(&q.register)? + q.index)
    }

    /// Global positions of every qubit of `name`.
    pub fn positions(&self, name: &str) -> Result<Vec<usize>> {
        let off = self.offset(name)?;
        let n = self.get(name).map_or(0, |r| r.qubits);
        Ok((off..off + n).collect())
    }

    /// Reference for the qubit at global position `pos`.
    pub fn qubit_at(&self, pos: usize) -> Option<QubitRef> {
        let mut off = 0;
        for r in &self.registers {
            if pos < off + r.qubits {
                return Some(QubitRef::new(&r.name, pos - off));
            }
            off += r.qubits;
        }
        None
    }

    /// `self` followed by `other`.
    pub fn concat(&self, other: &Layout) -> Result<Layout> {
        let mut regs = self.registers.clone();
        regs.extend(other.registers.iter().cloned());
        Layout::new(regs)
    }

    pub fn push(&mut self, reg: Register) -> Result<()> {
        if self.contains(&reg.name) {
            return Err(Error::DuplicateRegister(reg.name));
        }
        self.registers.push(reg);
        Ok(())
    }
}

/// A register name based on `base` that does not occur in `taken`.
pub fn fresh_name<'a>(taken: impl IntoIterator<Item = &'a str> + Clone, base: &str) -> String {
    let used = |s: &str| taken.clone().into_iter().any(|t| t == s);
    if !used(base) {
        return base.to_string();
    }
    let mut i = 2;
    loop {
        let candidate = alloc::format!("{base}{i}");
        if !used(&candidate) {
            return candidate;
        }
        i += 1;
    }
}

#[cfg(test)]
mod tests {
    use alloc::vec;
    use super::*;

    #[test]
    fn positions_follow_register_order() {
        let l = Layout::new(vec![Register::new("V", 2), Register::new("M1", 3)]).unwrap();
        assert_eq!(l.num_qubits(), 5);
        assert_eq!(l.position(&QubitRef::new("M1", 1)).unwrap(), 3);
        assert_eq!(l.qubit_at(1), Some(QubitRef::new("V", 1)));
        assert_eq!(l.positions("M1").unwrap(), vec![2, 3, 4]);
    }

    #[test]
    fn bad_references() {
        let l = Layout::new(vec![Register::new("V", 2)]).unwrap();
        assert!(matches!(
            l.position(&QubitRef::new("W", 0)),
            Err(Error::UnknownRegister(_))
        ));
        assert!(matches!(
            l.position(&QubitRef::new("V", 2)),
            Err(Error::QubitOutOfRange { .. })
        ));
        assert!(Layout::new(vec![Register::new("V", 1), Register::new("V", 1)]).is_err());
    }

    #[test]
    fn fresh_names_avoid_collisions() {
        let taken = ["B", "B2"];
        assert_eq!(fresh_name(taken.iter().copied(), "B"), "B3");
        assert_eq!(fresh_name(taken.iter().copied(), "X"), "X");
    }
}
