use alloc::boxed::Box;
use alloc::vec::Vec;

use crate::circuit::{qubits_of, QubitRef};
use crate::error::Result;
use crate::register::Layout;

/// Orthogonal projectors diagonal in the computational basis.
#[derive(Debug, Clone, PartialEq)]
pub enum ProjectorOp {
    /// The listed qubit is 1.
    OutputIsOne(QubitRef),
    /// Every listed qubit is 0.
    AllZero(Vec<QubitRef>),
    /// `I − P`.
    Complement(Box<ProjectorOp>),
}

impl ProjectorOp {
    /// All qubits of the named registers are 0.
    pub fn registers_zero(layout: &Layout, names: &[&str]) -> Result<ProjectorOp> {
        let mut qs = Vec::new();
        for n in names {
            let size = layout
                .get(n)
                .ok_or_else(|| crate::error::Error::UnknownRegister((*n).into()))?
                .qubits;
            qs.extend(qubits_of(n, size));
        }
        Ok(ProjectorOp::AllZero(qs))
    }

    pub fn complement(self) -> ProjectorOp {
        match self {
            ProjectorOp::Complement(inner) => *inner,
            other => ProjectorOp::Complement(Box::new(other)),
        }
    }

    /// Positions and required values of the underlying condition, with a
    /// flag that is true when the projector is the complement of that condition.
    pub(crate) fn condition(&self, layout: &Layout) -> Result<(Vec<(usize, bool)>, bool)> {
        match self {
            ProjectorOp::OutputIsOne(qb) => Ok((alloc::vec![(layout.position(qb)?, true)], false)),
            ProjectorOp::AllZero(qs) => Ok((
                qs.iter()
                    .map(|qb| Ok((layout.position(qb)?, false)))
                    .collect::<Result<Vec<_>>>()?,
                false,
            )),
            ProjectorOp::Complement(inner) => {
                let (c, neg) = inner.condition(layout)?;
                Ok((c, !neg))
            }
        }
    }
}
