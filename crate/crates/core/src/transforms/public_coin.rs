//! Three-turn public-coin systems and their one-round forms.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::{
    fresh, message_qubit, place, positions, prover_qubit, strategy, swap_all, taken_names, Bound, Pass,
    TransformOptions, Transformed,
};
use crate::circuit::{q, qubits_of, Circuit, Control, Gate, GateOp, QubitRef};
use crate::error::{Error, Result};
use crate::protocol::{message_register, prover_layout, ProtocolInstance, VerifierSpec};
use crate::register::Register;
use crate::simulate::state_after;

#[allow(unused_imports)]
use num_traits::Float;

/// The first circuit of a three-turn public-coin verifier: every message
/// qubit is moved into the verifier's storage, then coins are broadcast.
#[derive(Debug, Clone, PartialEq)]
pub struct PublicCoinShape {
    /// (verifier qubit, message qubit) pairs, one per message qubit.
    pub stores: Vec<(QubitRef, QubitRef)>,
    /// Coin gates in order.
    pub coins: Vec<Gate>,
}

impl PublicCoinShape {
    /// Number of bits broadcast to the provers.
    pub fn broadcast_bits(&self) -> usize {
        self.coins.len()
    }
}

/// Recognizes the public-coin form; the error names what is missing.
pub fn public_coin_shape(v: &VerifierSpec) -> Result<PublicCoinShape> {
    let fail = |why: String| Err(Error::Precondition(format!("input is not a three-turn public-coin system: {why}")));
    if v.turns != 3 {
        return fail(format!("{} turns", v.turns));
    }
    let is_message = |qb: &QubitRef| (0..v.provers).any(|i| qb.register == message_register(i));
    let mut stores = Vec::new();
    let mut coins = Vec::new();
    for (idx, g) in v.circuits[0].gates.iter().enumerate() {
        match &g.op {
            GateOp::Swap if g.controls.is_empty() && coins.is_empty() => {
                let (a, b) = (&g.targets[0], &g.targets[1]);
                match (is_message(a), is_message(b)) {
                    (false, true) => stores.push((a.clone(), b.clone())),
                    (true, false) => stores.push((b.clone(), a.clone())),
                    _ => return fail(format!("gate {idx} is not a swap between storage and a message")),
                }
            }
            GateOp::Coin { broadcast } if broadcast.iter().all(is_message) => coins.push(g.clone()),
            _ => return fail(format!("gate {idx} ({}) is neither a storing swap nor a broadcast coin", g.name())),
        }
    }
    let mut stored: Vec<&QubitRef> = stores.iter().map(|(_, m)| m).collect();
    let mut storage: Vec<&QubitRef> = stores.iter().map(|(s, _)| s).collect();
    stored.sort();
    stored.dedup();
    storage.sort();
    storage.dedup();
    let expected = v.provers * v.message_size();
    if stored.len() != stores.len() || storage.len() != stores.len() || stored.len() != expected {
        return fail(format!(
            "{} of {expected} message qubits are stored exactly once in distinct verifier qubits",
            stored.len().min(storage.len())
        ));
    }
    if v.circuits[1].has_coins() {
        return fail("the decision circuit flips coins".into());
    }
    Ok(PublicCoinShape { stores, coins })
}

/// Prover private layout shared by the constructions that hand the verifier's
/// workspace to prover 1: old private qubits, a copy of `M_i`, then (prover 1
/// only) the workspace. Returns sizes and the relabel map for a full snapshot.
fn snapshot_holders(inst: &ProtocolInstance, workspace_to_first: bool) -> Result<(Vec<usize>, Vec<Option<usize>>)> {
    let v = &inst.verifier;
    let (qm, nv) = (v.message_size(), v.verifier_qubits());
    let private: Vec<usize> = inst
        .provers
        .iter()
        .enumerate()
        .map(|(i, p)| p.private_qubits + qm + if i == 0 && workspace_to_first { nv } else { 0 })
        .collect();
    let layout = prover_layout(&private)?;
    let mut map = Vec::new();
    if workspace_to_first {
        let base = inst.provers[0].private_qubits + qm;
        map.extend(positions(&layout, (0..nv).map(|j| prover_qubit(0, base + j)))?);
    }
    for (i, p) in inst.provers.iter().enumerate() {
        map.extend(positions(&layout, (0..qm).map(|j| prover_qubit(i, p.private_qubits + j)))?);
    }
    for (i, p) in inst.provers.iter().enumerate() {
        map.extend(positions(&layout, (0..p.private_qubits).map(|j| prover_qubit(i, j)))?);
    }
    Ok((private, map.into_iter().map(Some).collect()))
}

fn require_three(inst: &ProtocolInstance) -> Result<()> {
    if inst.verifier.turns != 3 {
        return Err(Error::Precondition(format!(
            "input must have 3 turns, got {}",
            inst.verifier.turns
        )));
    }
    Ok(())
}

/// Three turns with a one-bit public coin: prover 1 sends the verifier's
/// workspace after the original second turn, a coin is broadcast, and the
/// provers send their messages. Coin 0 finishes the original run; coin 1
/// undoes the first verifier circuit and checks the workspace is back to 0.
pub fn to_public_coin_3turn(inst: &ProtocolInstance, opts: &TransformOptions) -> Result<Transformed> {
    require_three(inst)?;
    let mut pass = Pass::start("public-coin", inst, opts)?;
    let v = &inst.verifier;
    let k = v.provers;
    let (qm, nv) = (v.message_size(), v.verifier_qubits());
    let data = qm.max(nv);
    let new_q = data + 1;
    let work = v.verifier_qubit_refs();
    let purified: Vec<Circuit> = v.circuits.iter().map(Circuit::purify).collect();

    let mut taken = taken_names(inst, 0);
    let (rs, rb, rx) = (fresh(&mut taken, "S"), fresh(&mut taken, "B"), fresh(&mut taken, "X"));
    let (b, x) = (q(&rb, 0), q(&rx, 0));
    let storage_size = k * new_q - nv;

    let mut first = Circuit::new();
    let mut spare = qubits_of(&rs, storage_size).into_iter();
    for i in 0..k {
        for j in 0..new_q {
            let dest = if i == 0 && j < nv { work[j].clone() } else { spare.next().expect("sized above") };
            first.push(Gate::swap(dest, message_qubit(i, j)));
        }
    }
    first.push(Gate::coin(b.clone(), (0..k).map(|i| message_qubit(i, data)).collect()));
    let mut last = purified[1].controlled(&[Control::off(b.clone())])?;
    last.append(&purified[0].dagger()?.controlled(&[Control::on(b.clone())])?);
    let zero: Vec<Control> = work.iter().cloned().map(Control::off).collect();
    last.push(Gate::x(x.clone()).controlled_by(b.clone(), false).controlled_by(v.output.clone(), true));
    last.push(Gate::x(x.clone()).controlled_by(b.clone(), true).with_controls(&zero));

    let mut out = inst.clone();
    out.verifier.circuits = vec![first, last];
    out.verifier.message_qubits = vec![new_q; k];
    for (name, size) in [(&rs, storage_size), (&rb, 1), (&rx, 1)] {
        out.verifier.registers.push(Register::new(name.clone(), size));
    }
    out.verifier.output = x;

    let (private, map) = snapshot_holders(inst, true)?;
    out.provers = inst
        .provers
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let base = p.private_qubits;
            let mut opening = Circuit::new();
            if i == 0 {
                let held: Vec<_> = (0..nv).map(|j| prover_qubit(0, base + qm + j)).collect();
                let sent: Vec<_> = (0..nv).map(|j| message_qubit(0, j)).collect();
                opening = swap_all(&held, &sent);
            }
            let held: Vec<_> = (0..qm).map(|j| prover_qubit(i, base + j)).collect();
            let sent: Vec<_> = (0..qm).map(|j| message_qubit(i, j)).collect();
            let mut answer = swap_all(&held, &sent);
            answer.append(&p.circuits[1].controlled(&[Control::off(message_qubit(i, data))])?);
            Ok(strategy(private[i], vec![opening, answer]))
        })
        .collect::<Result<_>>()?;
    out.shared = place(&state_after(inst, 2)?, prover_layout(&private)?, &map)?;

    pass.registers_added.extend([rs, rb, rx]);
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

/// Two turns with one extra prover: the coins go to provers `1..k`, which
/// answer as in the original third turn, while prover `k+1` supplies the
/// original first messages without being asked anything.
pub fn public_coin_to_one_round(inst: &ProtocolInstance, opts: &TransformOptions) -> Result<Transformed> {
    let shape = public_coin_shape(&inst.verifier)?;
    let pass = Pass::start("one-round", inst, opts)?;
    let v = &inst.verifier;
    let k = v.provers;
    let qm = v.message_size();
    let new_q = k * qm;
    let extra = message_register(k);
    let slot_of = |m: &QubitRef| -> usize {
        let i = (0..k).find(|&i| m.register == message_register(i)).expect("checked message qubit");
        i * qm + m.index
    };

    let first: Circuit = shape.coins.clone().into();
    let mut last = Circuit::new();
    for (s, m) in &shape.stores {
        last.push(Gate::swap(s.clone(), q(&extra, slot_of(m))));
    }
    last.append(&v.circuits[1]);

    let mut out = inst.clone();
    out.verifier.provers = k + 1;
    out.verifier.turns = 2;
    out.verifier.circuits = vec![first, last];
    out.verifier.message_qubits = vec![new_q; k + 1];

    let mut provers: Vec<_> = inst
        .provers
        .iter()
        .map(|p| strategy(p.private_qubits, vec![p.circuits[1].clone()]))
        .collect();
    let held = qubits_of(&crate::protocol::prover_register(k), new_q);
    let sent = qubits_of(&extra, new_q);
    provers.push(strategy(new_q, vec![swap_all(&held, &sent)]));
    out.provers = provers;

    let private: Vec<usize> = out.provers.iter().map(|p| p.private_qubits).collect();
    let layout = prover_layout(&private)?;
    let mut map: Vec<Option<usize>> = vec![None; v.verifier_qubits()];
    for i in 0..k {
        map.extend(positions(&layout, (0..qm).map(|j| prover_qubit(k, i * qm + j)))?.into_iter().map(Some));
    }
    for (i, p) in inst.provers.iter().enumerate() {
        map.extend(positions(&layout, (0..p.private_qubits).map(|j| prover_qubit(i, j)))?.into_iter().map(Some));
    }
    out.shared = place(&state_after(inst, 1)?, layout, &map)?;

    let (c, s) = (pass.c(), pass.s());
    let completeness = Bound::new("c", Some(c));
    let soundness = Bound::new("s", s);
    let expected = pass.input_value;
    pass.finish(out, completeness, soundness, Some(expected), opts)
}

/// Two turns with one extra prover directly: a coin goes to provers `1..k`,
/// the extra prover sends the verifier's workspace, and the coin picks
/// between finishing the original run and undoing its first verifier circuit.
pub fn direct_two_turn(inst: &ProtocolInstance, opts: &TransformOptions) -> Result<Transformed> {
    require_three(inst)?;
    let mut pass = Pass::start("direct-one-round", inst, opts)?;
    let v = &inst.verifier;
    let k = v.provers;
    let (qm, nv) = (v.message_size(), v.verifier_qubits());
    let new_q = (qm + 1).max(nv);
    let work = v.verifier_qubit_refs();
    let purified: Vec<Circuit> = v.circuits.iter().map(Circuit::purify).collect();
    let mut taken = taken_names(inst, 1);
    let (rb, rx) = (fresh(&mut taken, "B"), fresh(&mut taken, "X"));
    let (b, x) = (q(&rb, 0), q(&rx, 0));

    let first = Circuit::from(vec![Gate::coin(b.clone(), (0..k).map(|i| message_qubit(i, qm)).collect())]);
    let received: Vec<_> = (0..nv).map(|j| message_qubit(k, j)).collect();
    let mut last = swap_all(&work, &received);
    last.append(&purified[1].controlled(&[Control::off(b.clone())])?);
    last.append(&purified[0].dagger()?.controlled(&[Control::on(b.clone())])?);
    let zero: Vec<Control> = work.iter().cloned().map(Control::off).collect();
    last.push(Gate::x(x.clone()).controlled_by(b.clone(), false).controlled_by(v.output.clone(), true));
    last.push(Gate::x(x.clone()).controlled_by(b.clone(), true).with_controls(&zero));

    let mut out = inst.clone();
    out.verifier.provers = k + 1;
    out.verifier.turns = 2;
    out.verifier.circuits = vec![first, last];
    out.verifier.message_qubits = vec![new_q; k + 1];
    out.verifier.registers.push(Register::new(rb.clone(), 1));
    out.verifier.registers.push(Register::new(rx.clone(), 1));
    out.verifier.output = x;

    let mut provers: Vec<_> = inst
        .provers
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let held: Vec<_> = (0..qm).map(|j| prover_qubit(i, p.private_qubits + j)).collect();
            let sent: Vec<_> = (0..qm).map(|j| message_qubit(i, j)).collect();
            let mut answer = swap_all(&held, &sent);
            answer.append(&p.circuits[1].controlled(&[Control::off(message_qubit(i, qm))])?);
            Ok(strategy(p.private_qubits + qm, vec![answer]))
        })
        .collect::<Result<_>>()?;
    let held: Vec<_> = (0..nv).map(|j| prover_qubit(k, j)).collect();
    provers.push(strategy(nv, vec![swap_all(&held, &received)]));
    out.provers = provers;

    let private: Vec<usize> = out.provers.iter().map(|p| p.private_qubits).collect();
    let layout = prover_layout(&private)?;
    let mut map = positions(&layout, (0..nv).map(|j| prover_qubit(k, j)))?;
    for (i, p) in inst.provers.iter().enumerate() {
        map.extend(positions(&layout, (0..qm).map(|j| prover_qubit(i, p.private_qubits + j)))?);
    }
    for (i, p) in inst.provers.iter().enumerate() {
        map.extend(positions(&layout, (0..p.private_qubits).map(|j| prover_qubit(i, j)))?);
    }
    let map: Vec<Option<usize>> = map.into_iter().map(Some).collect();
    out.shared = place(&state_after(inst, 2)?, layout, &map)?;

    pass.registers_added.extend([rb, rx]);
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
