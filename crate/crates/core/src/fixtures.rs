//! Small protocols used as reference points.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4, FRAC_PI_8};

#[allow(unused_imports)]
use num_traits::Float;

use crate::circuit::{q, Circuit, Gate};
use crate::exec::BasisIndex;
use crate::linalg::{gates, Matrix, C64};
use crate::protocol::{prover_layout, prover_turn_count, verifier_circuit_count, Claims, ProtocolInstance, ProverStrategy, VerifierSpec};
use crate::register::Register;
use crate::state::StateVector;

/// `Ry` angle whose rotation of `|0⟩` yields `|1⟩` with probability `p`.
pub fn angle_for(p: f64) -> f64 {
    2.0 * p.clamp(0.0, 1.0).sqrt().asin()
}

fn zero_shared(private: &[usize]) -> StateVector {
    StateVector::zero(prover_layout(private).expect("distinct names")).expect("small layout")
}

fn instance(verifier: VerifierSpec, provers: Vec<ProverStrategy>, shared: StateVector, claims: Claims) -> ProtocolInstance {
    ProtocolInstance {
        verifier,
        provers,
        shared,
        claims,
    }
}

fn one_prover_two_turns(circuits: Vec<Circuit>, v_qubits: usize, out: usize) -> VerifierSpec {
    VerifierSpec {
        provers: 1,
        turns: 2,
        registers: vec![Register::new("V", v_qubits)],
        message_qubits: vec![1],
        circuits,
        output: q("V", out),
    }
}

/// Accepts unconditionally.
pub fn always() -> ProtocolInstance {
    let v = one_prover_two_turns(vec![Circuit::new(), Circuit::from(vec![Gate::x(q("V", 0))])], 1, 0);
    instance(
        v,
        vec![ProverStrategy::idle(1, 1)],
        zero_shared(&[1]),
        Claims {
            completeness: Some(1.0),
            soundness: Some(1.0),
        },
    )
}

/// Rejects unconditionally.
pub fn never() -> ProtocolInstance {
    let v = one_prover_two_turns(vec![Circuit::new(), Circuit::new()], 1, 0);
    instance(
        v,
        vec![ProverStrategy::idle(1, 1)],
        zero_shared(&[1]),
        Claims {
            completeness: Some(0.0),
            soundness: Some(0.0),
        },
    )
}

/// The prover must name a private fair coin it never sees.
pub fn guess() -> ProtocolInstance {
    let v = one_prover_two_turns(
        vec![
            Circuit::from(vec![Gate::coin(q("V", 0), vec![])]),
            Circuit::from(vec![
                Gate::cnot(q("M1", 0), q("V", 1)),
                Gate::cnot(q("V", 0), q("V", 1)),
                Gate::x(q("V", 1)),
            ]),
        ],
        2,
        1,
    );
    instance(
        v,
        vec![ProverStrategy::idle(1, 1)],
        zero_shared(&[1]),
        Claims {
            completeness: Some(0.5),
            soundness: Some(0.5),
        },
    )
}

/// CHSH verifier: questions `x, y` are public coins, answers `a, b` come back
/// in the message registers, accept iff `a ⊕ b = x ∧ y`.
pub fn chsh_verifier() -> VerifierSpec {
    VerifierSpec {
        provers: 2,
        turns: 2,
        registers: vec![Register::new("V", 3)],
        message_qubits: vec![1, 1],
        circuits: vec![
            Circuit::from(vec![
                Gate::coin(q("V", 0), vec![q("M1", 0)]),
                Gate::coin(q("V", 1), vec![q("M2", 0)]),
            ]),
            Circuit::from(vec![
                Gate::cnot(q("M1", 0), q("V", 2)),
                Gate::cnot(q("M2", 0), q("V", 2)),
                Gate::toffoli(q("V", 0), q("V", 1), q("V", 2)),
                Gate::x(q("V", 2)),
            ]),
        ],
        output: q("V", 2),
    }
}

/// Rotates the private qubit by `Ry(a)` or `Ry(b)` depending on the question,
/// then swaps it into the message register as the answer.
pub fn measuring_prover(i: usize, a: f64, b: f64) -> ProverStrategy {
    let p = crate::protocol::prover_register(i);
    let m = crate::protocol::message_register(i);
    let (ra, rb) = (gates::ry(a), gates::ry(b));
    let circuit = Circuit::from(vec![
        Gate::unitary(ra, vec![q(&p, 0)]).controlled_by(q(&m, 0), false),
        Gate::unitary(rb, vec![q(&p, 0)]).controlled_by(q(&m, 0), true),
        Gate::swap(q(&p, 0), q(&m, 0)),
    ]);
    ProverStrategy {
        private_qubits: 1,
        circuits: vec![circuit],
    }
}

/// The value of CHSH with entangled provers.
pub fn chsh_value() -> f64 {
    let c = FRAC_PI_8.cos();
    c * c
}

/// CHSH with the optimal entangled strategy on a shared Bell pair.
pub fn chsh() -> ProtocolInstance {
    let h = C64::from(FRAC_1_SQRT_2);
    let bell = StateVector::from_entries(
        prover_layout(&[1, 1]).expect("distinct names"),
        [(BasisIndex::from_usize(0), h), (BasisIndex::from_usize(3), h)],
        1e-12,
    )
    .expect("normalized");
    // Measuring at angle α is Ry(−2α) followed by a basis readout.
    instance(
        chsh_verifier(),
        vec![
            measuring_prover(0, 0.0, -2.0 * FRAC_PI_4),
            measuring_prover(1, -2.0 * FRAC_PI_8, 2.0 * FRAC_PI_8),
        ],
        bell,
        Claims {
            completeness: Some(chsh_value()),
            soundness: Some(chsh_value()),
        },
    )
}

/// CHSH with provers that always answer 0; wins with probability ¾.
pub fn good() -> ProtocolInstance {
    let answer_zero = |i: usize| ProverStrategy {
        private_qubits: 1,
        circuits: vec![Circuit::from(vec![Gate::swap(
            q(&crate::protocol::prover_register(i), 0),
            q(&crate::protocol::message_register(i), 0),
        )])],
    };
    instance(
        chsh_verifier(),
        vec![answer_zero(0), answer_zero(1)],
        zero_shared(&[1, 1]),
        Claims {
            completeness: Some(0.75),
            soundness: Some(chsh_value()),
        },
    )
}

/// Acceptance needs a correct guess of a private coin and an independent
/// private event of probability `2s`, so no strategy exceeds `s`.
pub fn sound(s: f64) -> ProtocolInstance {
    let v = one_prover_two_turns(
        vec![
            Circuit::from(vec![
                Gate::coin(q("V", 0), vec![]),
                Gate::unitary(gates::ry(angle_for(2.0 * s)), vec![q("V", 1)]),
            ]),
            Circuit::from(vec![
                Gate::cnot(q("V", 0), q("M1", 0)),
                Gate::x(q("M1", 0)),
                Gate::toffoli(q("M1", 0), q("V", 1), q("V", 2)),
            ]),
        ],
        3,
        2,
    );
    instance(
        v,
        vec![ProverStrategy::idle(1, 1)],
        zero_shared(&[1]),
        Claims {
            completeness: None,
            soundness: Some(s),
        },
    )
}

/// Multi-turn relay: the verifier scrambles the message with `H` every round and
/// the honest prover unscrambles it. With `checked`, the final circuit folds the
/// returned message into the output, so an honest run accepts with probability
/// `p` (the chance of a private event). Without it the output is that event
/// alone, independent of the provers.
pub fn relay(turns: usize, p: f64, checked: bool) -> ProtocolInstance {
    assert!(turns % 2 == 1, "relay fixtures have an odd number of turns");
    let count = verifier_circuit_count(turns);
    let mut circuits = Vec::with_capacity(count);
    for j in 0..count - 1 {
        let mut c = Circuit::new();
        if j == 0 {
            c.push(Gate::unitary(gates::ry(angle_for(p)), vec![q("V", 0)]));
        }
        c.push(Gate::h(q("M1", 0)));
        circuits.push(c);
    }
    circuits.push(if checked {
        Circuit::from(vec![Gate::cnot(q("M1", 0), q("V", 0))])
    } else {
        Circuit::new()
    });
    let v = VerifierSpec {
        provers: 1,
        turns,
        registers: vec![Register::new("V", 1)],
        message_qubits: vec![1],
        circuits,
        output: q("V", 0),
    };
    let mut prover_circuits = vec![Circuit::new()];
    for _ in 1..prover_turn_count(turns) {
        prover_circuits.push(Circuit::from(vec![Gate::h(q("M1", 0))]));
    }
    instance(
        v,
        vec![ProverStrategy {
            private_qubits: 1,
            circuits: prover_circuits,
        }],
        zero_shared(&[1]),
        if checked {
            Claims {
                completeness: Some(p),
                soundness: None,
            }
        } else {
            Claims {
                completeness: None,
                soundness: Some(p),
            }
        },
    )
}

/// Honest relay instance accepting with probability `c`.
pub fn relay_yes(turns: usize, c: f64) -> ProtocolInstance {
    relay(turns, c, true)
}

/// Relay whose acceptance is a private event of probability `s`.
pub fn relay_no(turns: usize, s: f64) -> ProtocolInstance {
    relay(turns, s, false)
}

/// `Ry(θ)` for a given `|1⟩` probability, as a matrix.
pub fn event_rotation(p: f64) -> Matrix {
    gates::ry(angle_for(p))
}
