//! Perfect rewindability and the rewinding verifier.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::{fresh, message_qubit, open_qubits, prepend_verifier_turn, strategy, taken_names, widen_messages, Bound, Pass, TransformOptions, Transformed};
use crate::adversary::{optimal_shared_state, SharedOptimum};
use crate::circuit::{q, Circuit, Control, Gate};
use crate::error::{Error, Result};
use crate::linalg::{Matrix, C64};
use crate::protocol::{verifier_circuit_count, ProtocolInstance};
use crate::register::Register;
use crate::simulate::Program;

/// How the rewinding verifier's acceptance splits, each conditioned on its
/// value of the test bit: accepting at the first check of the rewinding test,
/// accepting at its final check, and passing the invertibility test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewindPaths {
    pub p1: f64,
    pub p2: f64,
    pub p3: f64,
}

impl RewindPaths {
    /// Probability of passing the rewinding test.
    pub fn rewinding_test(&self) -> f64 {
        self.p1 + self.p2
    }

    pub fn invertibility_test(&self) -> f64 {
        self.p3
    }

    pub fn acceptance(&self) -> f64 {
        (self.p1 + self.p2 + self.p3) / 2.0
    }
}

/// Real rotation sending `|0⟩` to `√(1−w)|0⟩ + √w|1⟩`.
fn weight_rotation(w: f64) -> Matrix {
    let b = w.clamp(0.0, 1.0).sqrt();
    let a = (1.0 - w).clamp(0.0, 1.0).sqrt();
    Matrix::from_row_slice(2, 2, &[C64::from(a), C64::from(-b), C64::from(b), C64::from(a)])
}

/// Makes the honest maximum exactly ½: prover 1 must hand back an extra qubit
/// in state `|1⟩`, and prepares it with weight `1/(2 p_max)`.
///
/// `p_max` is the optimum over shared states of the honest provers; when
/// given it is re-checked against the computed optimum.
pub fn make_perfectly_rewindable(
    inst: &ProtocolInstance,
    p_max: Option<f64>,
    opts: &TransformOptions,
) -> Result<Transformed> {
    let pass = Pass::start("rewindable", inst, opts)?;
    let opt = optimal_shared_state(&inst.verifier, &inst.provers)?;
    if let Some(p) = p_max {
        if (p - opt.value).abs() > 1e-6 {
            return Err(Error::Precondition(format!(
                "supplied maximum {p} disagrees with the computed optimum {}",
                opt.value
            )));
        }
    }
    if opts.verify && opt.value < 0.5 {
        return Err(Error::Precondition(format!(
            "completeness must be at least 1/2; the honest optimum is {:.12}",
            opt.value
        )));
    }
    let weight = 1.0 / (2.0 * opt.value);
    let out = build(pass, opt, weight.min(1.0), opts)?;
    if opts.verify {
        let check = optimal_shared_state(&out.instance.verifier, &out.instance.provers)?;
        if (check.value - 0.5).abs() > 1e-9 {
            return Err(Error::Numerical(format!(
                "rewindable output has optimum {:.12}, not 1/2",
                check.value
            )));
        }
    }
    Ok(out)
}

/// The same construction with the weight capped at 1 and no value checks, so
/// that instances with optimum below ½ (no-instances) can follow yes-instances
/// through a pipeline.
pub fn lift_to_rewindable(inst: &ProtocolInstance, opts: &TransformOptions) -> Result<Transformed> {
    let mut pass = Pass::start("rewindable", inst, opts)?;
    let opt = optimal_shared_state(&inst.verifier, &inst.provers)?;
    let weight = if opt.value > 0.5 { 0.5 / opt.value } else { 1.0 };
    pass.note("lifted: extra-qubit weight capped at 1, no value checks");
    let opts = TransformOptions {
        verify: false,
        ..opts.clone()
    };
    build(pass, opt, weight, &opts)
}

fn build(mut pass: Pass, opt: SharedOptimum, weight: f64, opts: &TransformOptions) -> Result<Transformed> {
    let inst = pass.input.clone();
    let v = &inst.verifier;
    let qm = v.message_size();
    let count = verifier_circuit_count(v.turns);
    let mut taken = taken_names(&inst, 0);
    let slot = message_qubit(0, qm);
    let mut out = inst.clone();
    widen_messages(&mut out, qm + 1);
    let x = fresh(&mut taken, "X");
    if count >= 2 {
        // The extra qubit starts with the verifier and is sent with the last question.
        let b = fresh(&mut taken, "B");
        out.verifier.registers.push(Register::new(b.clone(), 1));
        out.verifier.circuits[count - 2].push(Gate::swap(q(&b, 0), slot.clone()));
        pass.registers_added.push(b);
    }
    out.verifier.registers.push(Register::new(x.clone(), 1));
    out.verifier.circuits[count - 1].push(Gate::toffoli(v.output.clone(), slot.clone(), q(&x, 0)));
    out.verifier.output = q(&x, 0);
    pass.registers_added.push(x);
    let last = out.provers[0].circuits.len() - 1;
    out.provers[0].circuits[last].push(Gate::unitary(weight_rotation(weight), vec![slot]));
    out.shared = opt.state;
    let expected = opt.value * weight;
    let s = pass.s();
    pass.note(format!("honest optimum before the pass: {:.12}", opt.value));
    let completeness = Bound::new("1/2", Some(if opts.verify { 0.5 } else { expected }));
    let soundness = Bound::new("s", s);
    pass.finish(out, completeness, soundness, Some(expected), opts)
}

/// Forward, backward, forward: the verifier either checks acceptance
/// directly, or undoes the protocol, flips the phase of the initial
/// configuration and runs it again, or checks that undoing it restores the
/// initial configuration. A perfectly rewindable input accepts with certainty.
pub fn rewind_to_perfect_completeness(inst: &ProtocolInstance, opts: &TransformOptions) -> Result<Transformed> {
    let mut pass = Pass::start("rewind", inst, opts)?;
    if opts.verify {
        let opt = optimal_shared_state(&inst.verifier, &inst.provers)?;
        if (opt.value - 0.5).abs() > 1e-9 {
            return Err(Error::Precondition(format!(
                "input is not perfectly rewindable: optimum over shared states is {:.12}, not 1/2",
                opt.value
            )));
        }
    }
    let inst = if inst.verifier.turns % 2 == 1 {
        pass.note("odd turn count: an idle verifier turn was prepended");
        prepend_verifier_turn(inst)?
    } else {
        inst.clone()
    };
    let half = inst.verifier.turns / 2;
    let v: Vec<Circuit> = inst.verifier.circuits.iter().map(Circuit::purify).collect();
    let inv: Vec<Circuit> = v.iter().map(Circuit::dagger).collect::<Result<_>>()?;
    let mut taken = taken_names(&inst, 0);
    let (rb, ra, rx) = (fresh(&mut taken, "B"), fresh(&mut taken, "A"), fresh(&mut taken, "X"));
    let (b, a, x) = (q(&rb, 0), q(&ra, 0), q(&rx, 0));
    let zero: Vec<Control> = open_qubits(&inst).into_iter().map(Control::off).collect();
    let out_q = inst.verifier.output.clone();

    let mut w: Vec<Circuit> = v[..half].to_vec();
    // The test bit; the first acceptance check runs only when it is 0.
    let mut c = Circuit::from(vec![Gate::coin(b.clone(), vec![])]);
    c.append(&v[half]);
    c.push(Gate::x(a.clone()).controlled_by(b.clone(), false).controlled_by(out_q.clone(), true));
    c.append(&inv[half]);
    w.push(c);
    for t in 1..half {
        w.push(inv[half - t].clone());
    }
    let mut c = inv[0].clone();
    c.push(Gate::x(a.clone()).controlled_by(b.clone(), true).with_controls(&zero));
    c.push(Gate::phase_flip(vec![]).controlled_by(b.clone(), false).with_controls(&zero));
    c.append(&v[0]);
    w.push(c);
    for t in 1..half {
        w.push(v[t].clone());
    }
    let mut c = v[half].clone();
    c.push(
        Gate::x(x.clone())
            .controlled_by(b.clone(), false)
            .controlled_by(a.clone(), false)
            .controlled_by(out_q, true),
    );
    c.push(Gate::cnot(a.clone(), x.clone()));
    w.push(c);

    let mut out = inst.clone();
    out.verifier.turns = 3 * inst.verifier.turns;
    out.verifier.circuits = w;
    for r in [&rb, &ra, &rx] {
        out.verifier.registers.push(Register::new(r.clone(), 1));
    }
    out.verifier.output = x;
    out.provers = inst
        .provers
        .iter()
        .map(|p| {
            let mut turns = p.circuits.clone();
            for j in 1..=half {
                turns.push(p.circuits[half - j].dagger()?);
            }
            turns.extend(p.circuits.iter().cloned());
            Ok(strategy(p.private_qubits, turns))
        })
        .collect::<Result<_>>()?;
    pass.registers_added.extend([rb.clone(), ra.clone(), rx.clone()]);
    let s = pass.s();
    if let Some(s) = s {
        if s >= 1.0 / 25.0 {
            pass.note("claimed soundness is not below 1/25; the bound formula is outside its hypothesis");
        }
    }
    let completeness = Bound::new("1", Some(1.0));
    let soundness = Bound::new("1/2 + 2*sqrt(s) + 5*s/2", s.map(|s| 0.5 + 2.0 * s.sqrt() + 2.5 * s));
    let mut done = pass.finish(out, completeness, soundness, Some(1.0), opts)?;
    let paths = rewind_paths(&done.instance, &rb, &ra, &rx)?;
    if opts.verify && ((paths.rewinding_test() - 1.0).abs() > 1e-9 || (paths.p3 - 1.0).abs() > 1e-9) {
        return Err(Error::Numerical(format!(
            "honest provers pass the rewinding test with {:.12} and the invertibility test with {:.12}",
            paths.rewinding_test(),
            paths.p3
        )));
    }
    done.report.rewinding = Some(paths);
    Ok(done)
}

/// Splits the acceptance of a rewinding verifier by test bit and flag.
fn rewind_paths(inst: &ProtocolInstance, rb: &str, ra: &str, rx: &str) -> Result<RewindPaths> {
    let program = Program::compile(&inst.verifier, &inst.provers)?;
    let mut s = program.initial_state(&inst.verifier, &inst.shared)?;
    program.apply_steps(&mut s, 0..program.schedule().len());
    let l = program.layout();
    let (b, a, x) = (l.position(&q(rb, 0))?, l.position(&q(ra, 0))?, l.position(&q(rx, 0))?);
    Ok(RewindPaths {
        p1: 2.0 * s.weight(&[(b, false), (a, true)]),
        p2: 2.0 * s.weight(&[(b, false), (a, false), (x, true)]),
        p3: 2.0 * s.weight(&[(b, true), (a, true)]),
    })
}
