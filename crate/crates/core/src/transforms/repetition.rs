//! Sequential and parallel repetition.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use super::{fresh, strategy, swap_all, taken_names, Bound, Pass, TransformOptions, Transformed};
use crate::circuit::{q, qubits_of, Circuit, Control, Gate, QubitRef};
use crate::error::{Error, Result};
use crate::exec::BasisIndex;
use crate::linalg::C64;
use crate::protocol::{message_register, prover_layout, prover_register, verifier_circuit_count, ProtocolInstance};
use crate::register::{Layout, Register};
use crate::state::StateVector;

/// The product of `parts`, part `c` placed by `maps[c]` (its qubit `j` goes to
/// global position `maps[c][j]`).
fn product_state(parts: &[&StateVector], maps: &[Vec<usize>], layout: Layout) -> Result<StateVector> {
    let mut acc: Vec<(BasisIndex, C64)> = vec![(BasisIndex::zero(), C64::from(1.0))];
    for (part, map) in parts.iter().zip(maps) {
        let entries = part.entries();
        let mut next = Vec::with_capacity(acc.len() * entries.len());
        for (k, a) in &acc {
            for (kp, b) in &entries {
                let mut idx = *k;
                for (j, &dest) in map.iter().enumerate() {
                    if kp.bit(j) {
                        idx.set(dest, true);
                    }
                }
                next.push((idx, a * b));
            }
        }
        acc = next;
    }
    StateVector::from_entries(layout, acc, 1e-9)
}

/// Verifier register names for copy `c`; copy 0 keeps the original names.
fn copy_names(inst: &ProtocolInstance, copies: usize, taken: &mut Vec<String>) -> Vec<BTreeMap<String, String>> {
    (0..copies)
        .map(|c| {
            inst.verifier
                .registers
                .iter()
                .map(|r| {
                    let name = if c == 0 {
                        r.name.clone()
                    } else {
                        fresh(taken, &format!("{}_{}", r.name, c + 1))
                    };
                    (r.name.clone(), name)
                })
                .collect()
        })
        .collect()
}

fn and_into(outputs: &[QubitRef], target: QubitRef) -> Gate {
    let controls: Vec<Control> = outputs.iter().cloned().map(Control::on).collect();
    Gate::x(target).with_controls(&controls)
}

/// Runs the protocol `n` times in a row with fresh verifier workspace and
/// fresh prover workspace per run, accepting iff every run accepts.
///
/// Between runs the message registers are moved into discard storage. When
/// the turn count is odd the runs cannot share a verifier turn, so each
/// boundary adds one turn: `n·m + n − 1` turns instead of `n·m`.
pub fn sequential_repetition(inst: &ProtocolInstance, n: usize, opts: &TransformOptions) -> Result<Transformed> {
    if n == 0 {
        return Err(Error::Precondition("repetition count must be at least 1".into()));
    }
    let mut pass = Pass::start("seq-rep", inst, opts)?;
    let v = &inst.verifier;
    let (m, k, qm) = (v.turns, v.provers, v.message_size());
    let count = verifier_circuit_count(m);
    let mut taken = taken_names(inst, 0);
    let names = copy_names(inst, n, &mut taken);
    let x = fresh(&mut taken, "X");
    let discard: Vec<String> = (0..n - 1).map(|_| fresh(&mut taken, "D")).collect();
    let messages: Vec<QubitRef> = (0..k).flat_map(|i| qubits_of(&message_register(i), qm)).collect();

    let mut out = inst.clone();
    let mut circuits: Vec<Circuit> = Vec::new();
    let mut outputs = Vec::new();
    for (c, map) in names.iter().enumerate() {
        let rename = |s: &str| map.get(s).cloned().unwrap_or_else(|| s.into());
        let mut copy: Vec<Circuit> = v.circuits.iter().map(|cc| cc.rename_registers(rename)).collect();
        outputs.push(q(&rename(&v.output.register), v.output.index));
        if c + 1 < n {
            copy[count - 1].append(&swap_all(&qubits_of(&discard[c], k * qm), &messages));
        }
        if c > 0 && m % 2 == 0 {
            let head = copy.remove(0);
            circuits.last_mut().expect("previous copy").append(&head);
        }
        circuits.extend(copy);
        if c > 0 {
            for r in &v.registers {
                out.verifier.registers.push(Register::new(rename(&r.name), r.qubits));
            }
        }
    }
    circuits.last_mut().expect("at least one copy").push(and_into(&outputs, q(&x, 0)));
    for d in &discard {
        out.verifier.registers.push(Register::new(d.clone(), k * qm));
    }
    out.verifier.registers.push(Register::new(x.clone(), 1));
    out.verifier.output = q(&x, 0);
    out.verifier.turns = if m % 2 == 0 { n * m } else { n * m + n - 1 };
    out.verifier.circuits = circuits;

    out.provers = inst
        .provers
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let own = prover_register(i);
            let mut turns = Vec::new();
            for c in 0..n {
                let shift = c * p.private_qubits;
                turns.extend(p.circuits.iter().map(|cc| {
                    cc.map_qubits(|qb| {
                        if qb.register == own {
                            q(&own, qb.index + shift)
                        } else {
                            qb.clone()
                        }
                    })
                }));
            }
            strategy(n * p.private_qubits, turns)
        })
        .collect();
    let private: Vec<usize> = out.provers.iter().map(|p| p.private_qubits).collect();
    let layout = prover_layout(&private)?;
    let maps: Vec<Vec<usize>> = (0..n)
        .map(|c| {
            let mut map = Vec::new();
            for (i, p) in inst.provers.iter().enumerate() {
                for j in 0..p.private_qubits {
                    map.push(layout.position(&q(&prover_register(i), c * p.private_qubits + j))?);
                }
            }
            Ok(map)
        })
        .collect::<Result<_>>()?;
    let parts = vec![&inst.shared; n];
    out.shared = product_state(&parts, &maps, layout)?;

    let mut added: Vec<String> = names.iter().skip(1).flat_map(|m| m.values().cloned()).collect();
    added.extend(discard);
    added.push(x);
    pass.registers_added = added;
    if m % 2 == 1 && n > 1 {
        pass.note(format!("odd turn count: {} boundary turns added", n - 1));
    }
    pass.note("no soundness formula is stated for sequential repetition; s^n is reported for comparison only");
    let nn = n as i32;
    let completeness = Bound::new("c^n", Some(pass.c().powi(nn)));
    let soundness = Bound::new("s^n (not implied)", pass.s().map(|s| s.powi(nn)));
    let expected = pass.input_value.powi(nn);
    pass.finish(out, completeness, soundness, Some(expected), opts)
}

/// Runs `n` copies side by side, copy `c` served by provers `c·k+1..c·k+k`,
/// accepting iff every copy accepts.
pub fn parallel_repetition_fresh_provers(
    inst: &ProtocolInstance,
    n: usize,
    opts: &TransformOptions,
) -> Result<Transformed> {
    if n == 0 {
        return Err(Error::Precondition("repetition count must be at least 1".into()));
    }
    let mut pass = Pass::start("par-rep", inst, opts)?;
    let v = &inst.verifier;
    let k = v.provers;
    let mut taken = taken_names(inst, (n - 1) * k);
    let names = copy_names(inst, n, &mut taken);
    let x = fresh(&mut taken, "X");

    let mut out = inst.clone();
    out.verifier.provers = n * k;
    out.verifier.message_qubits = vec![v.message_size(); n * k];
    let mut circuits = vec![Circuit::new(); v.circuits.len()];
    let mut provers = Vec::new();
    let mut outputs = Vec::new();
    for (c, map) in names.iter().enumerate() {
        let mut regs: BTreeMap<String, String> = map.clone();
        for i in 0..k {
            regs.insert(message_register(i), message_register(c * k + i));
            regs.insert(prover_register(i), prover_register(c * k + i));
        }
        let rename = |s: &str| regs.get(s).cloned().unwrap_or_else(|| s.into());
        for (dst, src) in circuits.iter_mut().zip(&v.circuits) {
            dst.append(&src.rename_registers(rename));
        }
        outputs.push(q(&rename(&v.output.register), v.output.index));
        for p in &inst.provers {
            provers.push(strategy(
                p.private_qubits,
                p.circuits.iter().map(|cc| cc.rename_registers(rename)).collect(),
            ));
        }
        if c > 0 {
            for r in &v.registers {
                out.verifier.registers.push(Register::new(rename(&r.name), r.qubits));
            }
        }
    }
    circuits.last_mut().expect("final circuit").push(and_into(&outputs, q(&x, 0)));
    out.verifier.registers.push(Register::new(x.clone(), 1));
    out.verifier.output = q(&x, 0);
    out.verifier.circuits = circuits;
    out.provers = provers;

    let private: Vec<usize> = out.provers.iter().map(|p| p.private_qubits).collect();
    let layout = prover_layout(&private)?;
    let width = inst.shared.num_qubits();
    let maps: Vec<Vec<usize>> = (0..n).map(|c| (c * width..(c + 1) * width).collect()).collect();
    let parts = vec![&inst.shared; n];
    out.shared = product_state(&parts, &maps, layout)?;

    let mut added: Vec<String> = names.iter().skip(1).flat_map(|m| m.values().cloned()).collect();
    added.push(x);
    pass.registers_added = added;
    let nn = n as i32;
    let completeness = Bound::new("c^n", Some(pass.c().powi(nn)));
    let soundness = Bound::new("s^n", pass.s().map(|s| s.powi(nn)));
    let expected = pass.input_value.powi(nn);
    pass.finish(out, completeness, soundness, Some(expected), opts)
}
