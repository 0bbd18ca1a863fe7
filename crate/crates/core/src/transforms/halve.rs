//! Halving the number of turns, and the cascade down to three turns.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use super::{
    fresh, message_qubit, pad_turns, place, positions, prover_qubit, strategy, swap_all, taken_names, Bound, Pass,
    TransformOptions, Transformed,
};
use crate::circuit::{q, Circuit, Control, Gate};
use crate::error::{Error, Result};
use crate::protocol::{message_register, prover_layout, ProtocolInstance};
use crate::register::Register;
use crate::simulate::state_after;

/// Turns `4h+1` into `2h+1`. Prover 1 first hands over the verifier's
/// workspace as it would be in the middle of the original run; a coin then
/// picks between running the second half forward (accept as the original
/// would) and the first half backward (accept iff the workspace returns to 0).
pub fn halve_turns(inst: &ProtocolInstance, opts: &TransformOptions) -> Result<Transformed> {
    let m = inst.verifier.turns;
    if m % 4 != 1 {
        return Err(Error::Precondition(format!(
            "halving needs 4h+1 turns, got {m}"
        )));
    }
    let mut pass = Pass::start("halve", inst, opts)?;
    let h = (m - 1) / 4;
    let v = &inst.verifier;
    let k = v.provers;
    let qm = v.message_size();
    let work = v.verifier_qubit_refs();
    let nv = work.len();
    let new_q = qm + nv + 1;
    let bslot = |i: usize| message_qubit(i, qm + nv);
    let vslot: Vec<_> = (0..nv).map(|j| message_qubit(0, qm + j)).collect();

    let purified: Vec<Circuit> = v.circuits.iter().map(Circuit::purify).collect();
    let mut taken = taken_names(inst, 0);
    let (rb, rx) = (fresh(&mut taken, "B"), fresh(&mut taken, "X"));
    let (b, x) = (q(&rb, 0), q(&rx, 0));
    let fwd = [Control::off(b.clone())];
    let back = [Control::on(b.clone())];

    let mut w = Vec::with_capacity(h + 1);
    let mut c = swap_all(&vslot, &work);
    c.push(Gate::coin(b.clone(), (0..k).map(bslot).collect()));
    c.append(&purified[h].controlled(&fwd)?);
    w.push(c);
    for j in 1..=h {
        let mut c = purified[h + j].controlled(&fwd)?;
        c.append(&purified[h - j].dagger()?.controlled(&back)?);
        w.push(c);
    }
    let zero: Vec<Control> = work.iter().cloned().map(Control::off).collect();
    w[h].push(Gate::x(x.clone()).controlled_by(b.clone(), false).controlled_by(v.output.clone(), true));
    w[h].push(Gate::x(x.clone()).controlled_by(b.clone(), true).with_controls(&zero));

    let mut out = inst.clone();
    out.verifier.turns = 2 * h + 1;
    out.verifier.circuits = w;
    out.verifier.message_qubits = vec![new_q; k];
    out.verifier.registers.push(Register::new(rb.clone(), 1));
    out.verifier.registers.push(Register::new(rx.clone(), 1));
    out.verifier.output = x;

    // Prover i keeps its old private qubits first, then a copy of M_i, then
    // (prover 1 only) the verifier's workspace.
    let private: Vec<usize> = inst
        .provers
        .iter()
        .enumerate()
        .map(|(i, p)| p.private_qubits + qm + if i == 0 { nv } else { 0 })
        .collect();
    out.provers = inst
        .provers
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let base = p.private_qubits;
            let held: Vec<_> = (0..qm).map(|j| prover_qubit(i, base + j)).collect();
            let sent: Vec<_> = (0..qm).map(|j| message_qubit(i, j)).collect();
            let mut first = swap_all(&held, &sent);
            if i == 0 {
                let held: Vec<_> = (0..nv).map(|j| prover_qubit(0, base + qm + j)).collect();
                first.append(&swap_all(&held, &vslot));
            }
            let mut turns = vec![first];
            let fwd = [Control::off(bslot(i))];
            let back = [Control::on(bslot(i))];
            for j in 1..=h {
                let mut c = p.circuits[h + j].controlled(&fwd)?;
                c.append(&p.circuits[h + 1 - j].dagger()?.controlled(&back)?);
                turns.push(c);
            }
            Ok(strategy(private[i], turns))
        })
        .collect::<Result<_>>()?;

    let snapshot = state_after(inst, 2 * h + 1)?;
    let layout = prover_layout(&private)?;
    let mut map = Vec::with_capacity(snapshot.num_qubits());
    map.extend(positions(&layout, (0..nv).map(|j| prover_qubit(0, inst.provers[0].private_qubits + qm + j)))?);
    for (i, p) in inst.provers.iter().enumerate() {
        map.extend(positions(&layout, (0..qm).map(|j| prover_qubit(i, p.private_qubits + j)))?);
    }
    for (i, p) in inst.provers.iter().enumerate() {
        map.extend(positions(&layout, (0..p.private_qubits).map(|j| prover_qubit(i, j)))?);
    }
    let map: Vec<Option<usize>> = map.into_iter().map(Some).collect();
    out.shared = place(&snapshot, layout, &map)?;

    pass.registers_added.extend([rb, rx]);
    pass.note(format!(
        "message registers grow to {new_q} qubits to carry {} and the coin",
        message_register(0)
    ));
    let c = pass.c();
    let s = pass.s();
    if let Some(s) = s {
        if c * c <= s {
            pass.note("c^2 <= s: the claimed bounds do not separate");
        }
    }
    let completeness = Bound::new("(1+c)/2", Some((1.0 + c) / 2.0));
    let soundness = Bound::new("(1+sqrt(s))/2", s.map(|s| (1.0 + s.sqrt()) / 2.0));
    let expected = (1.0 + pass.input_value) / 2.0;
    pass.finish(out, completeness, soundness, Some(expected), opts)
}

/// The smallest `2^(l+1)+1 ≥ m`, with `l ≥ 1`, and the number of halvings `l`.
pub fn three_turn_target(m: usize) -> (usize, usize) {
    let mut l = 1;
    while (1usize << (l + 1)) + 1 < m {
        l += 1;
    }
    ((1 << (l + 1)) + 1, l)
}

/// Pads with idle turns to `2^(l+1)+1` and halves `l` times.
///
/// `epsilon` and `delta` are the completeness and soundness errors used for
/// the claimed bounds; a gap below the lemma's hypothesis only adds a note.
pub fn parallelize_to_three(
    inst: &ProtocolInstance,
    epsilon: f64,
    delta: f64,
    opts: &TransformOptions,
) -> Result<Transformed> {
    let m = inst.verifier.turns;
    if m < 4 {
        return Err(Error::Precondition(format!(
            "parallelizing to three turns needs at least 4 turns, got {m}"
        )));
    }
    let mut pass = Pass::start("three-turn", inst, opts)?;
    if delta <= 2.0 * (m as f64 - 1.0) * epsilon {
        pass.note("gap condition delta > 2(m-1)epsilon fails; bounds are reported but not implied");
    }
    let (target, l) = three_turn_target(m);
    let mut cur = pad_turns(inst, target)?;
    pass.note(format!("padded {m} turns to {target}; {l} halvings"));
    let step_opts = TransformOptions {
        verify: false,
        ..opts.clone()
    };
    for _ in 0..l {
        let next = halve_turns(&cur, &step_opts)?;
        pass.registers_added.extend(next.report.registers_added);
        cur = next.instance;
    }
    let mm = m as f64 - 1.0;
    let completeness = Bound::new("1 - 2*epsilon/(m-1)", Some(1.0 - 2.0 * epsilon / mm));
    let soundness = Bound::new("1 - delta/(m-1)^2", Some(1.0 - delta / (mm * mm)));
    // Each halving maps the honest value c to (1+c)/2.
    let mut expected = pass.input_value;
    for _ in 0..l {
        expected = (1.0 + expected) / 2.0;
    }
    pass.finish(cur, completeness, soundness, Some(expected), opts)
}
