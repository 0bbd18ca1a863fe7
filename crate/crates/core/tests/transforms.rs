use qmip_core::adversary::optimal_shared_state;
use qmip_core::fixtures;
use qmip_core::simulate::Program;
use qmip_core::transforms::*;
use qmip_core::linalg::C64;
use qmip_core::{ProjectorOp, ProtocolInstance};

fn opts() -> TransformOptions {
    TransformOptions::default()
}

fn honest(inst: &ProtocolInstance) -> f64 {
    qmip_core::acceptance_probability(inst).unwrap()
}

#[test]
fn rewindable_optimum_is_one_half() {
    for inst in [fixtures::good(), fixtures::always(), fixtures::guess(), fixtures::relay_yes(3, 0.8)] {
        let out = make_perfectly_rewindable(&inst, None, &opts()).unwrap();
        let o = optimal_shared_state(&out.instance.verifier, &out.instance.provers).unwrap();
        assert!((o.value - 0.5).abs() < 1e-9, "{}", o.value);
        assert!((honest(&out.instance) - 0.5).abs() < 1e-9);
        assert_eq!(out.instance.verifier.turns, inst.verifier.turns);
        assert_eq!(out.instance.verifier.provers, inst.verifier.provers);
    }
}

#[test]
fn rewindable_rejects_small_optimum_and_wrong_maximum() {
    let e = make_perfectly_rewindable(&fixtures::sound(0.01), None, &opts()).unwrap_err();
    assert!(matches!(e, qmip_core::Error::Precondition(_)));
    let e = make_perfectly_rewindable(&fixtures::good(), Some(0.7), &opts()).unwrap_err();
    assert!(matches!(e, qmip_core::Error::Precondition(_)));
    assert!(make_perfectly_rewindable(&fixtures::good(), Some(0.75), &opts()).is_ok());
}

#[test]
fn rewinding_gives_perfect_completeness() {
    for inst in [fixtures::good(), fixtures::always(), fixtures::relay_yes(3, 0.8)] {
        let rw = make_perfectly_rewindable(&inst, None, &opts()).unwrap().instance;
        let out = rewind_to_perfect_completeness(&rw, &opts()).unwrap();
        let m = rw.verifier.turns + rw.verifier.turns % 2;
        assert_eq!(out.instance.verifier.turns, 3 * m);
        assert!((honest(&out.instance) - 1.0).abs() < 1e-9);
        let paths = out.report.rewinding.unwrap();
        assert!((paths.rewinding_test() - 1.0).abs() < 1e-9);
        assert!((paths.invertibility_test() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn rewind_refuses_non_rewindable_input() {
    let e = rewind_to_perfect_completeness(&fixtures::good(), &opts()).unwrap_err();
    assert!(matches!(e, qmip_core::Error::Precondition(_)));
}

/// Undoing the protocol on the accepting part and on the rejecting part
/// relate through the initial-configuration projector.
#[test]
fn rewinding_algebra() {
    let rw = make_perfectly_rewindable(&fixtures::good(), None, &opts()).unwrap().instance;
    let program = Program::compile(&rw.verifier, &rw.provers).unwrap();
    let all = 0..program.schedule().len();
    let start = program.initial_state(&rw.verifier, &rw.shared).unwrap();
    let mut fin = start.clone();
    program.apply_steps(&mut fin, all.clone());
    let acc = ProjectorOp::OutputIsOne(rw.verifier.output.clone());
    let phi0 = fin.project(&acc).unwrap();
    let phi1 = fin.project(&acc.clone().complement()).unwrap();
    let mut names: Vec<&str> = rw.verifier.registers.iter().map(|r| r.name.as_str()).collect();
    let msgs: Vec<String> = (0..rw.verifier.provers).map(qmip_core::protocol::message_register).collect();
    names.extend(msgs.iter().map(String::as_str));
    let init = ProjectorOp::registers_zero(program.layout(), &names).unwrap();
    let mut back0 = phi0.clone();
    program.unapply_steps(&mut back0, all.clone());
    let psi0 = back0.project(&init).unwrap();
    let psi1 = back0.project(&init.clone().complement()).unwrap();
    let mut back1 = phi1.clone();
    program.unapply_steps(&mut back1, all.clone());
    let one = C64::new(1.0, 0.0);
    let diff = psi0.add_scaled(-one, &psi1).unwrap();
    assert!(back1.max_distance(&diff).unwrap() < 1e-9);
    // ψ0 is half of the starting state.
    assert!(psi0.max_distance(&start.scale(one * 0.5)).unwrap() < 1e-9);
    // The phase flip on the initial configuration maps ψ0 − ψ1 to −(ψ0 + ψ1).
    let flipped = diff.add_scaled(-2.0 * one, &diff.project(&init).unwrap()).unwrap();
    let target = psi0.add_scaled(one, &psi1).unwrap().scale(-one);
    assert!(flipped.max_distance(&target).unwrap() < 1e-9);
}

#[test]
fn halving_relay_and_padded_chsh() {
    let inst = fixtures::relay_yes(5, 0.8);
    let out = halve_turns(&inst, &opts()).unwrap();
    assert_eq!(out.instance.verifier.turns, 3);
    assert!((honest(&out.instance) - 0.9).abs() < 1e-9);
    let out = halve_turns(&fixtures::relay_yes(9, 0.6), &opts()).unwrap();
    assert_eq!(out.instance.verifier.turns, 5);
    assert!((honest(&out.instance) - 0.8).abs() < 1e-9);
    let chsh5 = pad_turns(&fixtures::chsh(), 5).unwrap();
    let out = halve_turns(&chsh5, &opts()).unwrap();
    let c = fixtures::chsh_value();
    assert!((honest(&out.instance) - (1.0 + c) / 2.0).abs() < 1e-9);
    assert!(halve_turns(&fixtures::relay_yes(7, 0.5), &opts()).is_err());
}

#[test]
fn cascade_to_three_turns() {
    let out = parallelize_to_three(&fixtures::relay_yes(9, 1.0), 0.0, 0.5, &opts()).unwrap();
    assert_eq!(out.instance.verifier.turns, 3);
    assert!((honest(&out.instance) - 1.0).abs() < 1e-9);
    assert_eq!(three_turn_target(9), (9, 2));
    assert_eq!(three_turn_target(5), (5, 1));
    assert_eq!(three_turn_target(18), (33, 4));
    let out = parallelize_to_three(&fixtures::relay_yes(7, 0.8), 0.2, 0.9, &opts()).unwrap();
    assert_eq!(out.instance.verifier.turns, 3);
    assert!((honest(&out.instance) - 0.95).abs() < 1e-9);
}

#[test]
fn public_coin_and_one_round() {
    for inst in [fixtures::relay_yes(3, 0.8), pad_turns(&fixtures::chsh(), 3).unwrap()] {
        let c = honest(&inst);
        let pc = to_public_coin_3turn(&inst, &opts()).unwrap();
        assert_eq!(pc.instance.verifier.coin_count(), 1);
        assert_eq!(public_coin_shape(&pc.instance.verifier).unwrap().broadcast_bits(), 1);
        assert!((honest(&pc.instance) - (1.0 + c) / 2.0).abs() < 1e-9);
        let one = public_coin_to_one_round(&pc.instance, &opts()).unwrap();
        assert_eq!(one.instance.verifier.turns, 2);
        assert_eq!(one.instance.verifier.provers, inst.verifier.provers + 1);
        assert!((honest(&one.instance) - honest(&pc.instance)).abs() < 1e-9);
        let direct = direct_two_turn(&inst, &opts()).unwrap();
        assert_eq!(direct.instance.verifier.turns, 2);
        assert!((honest(&direct.instance) - honest(&one.instance)).abs() < 1e-9);
    }
    assert!(public_coin_to_one_round(&fixtures::relay_yes(3, 0.8), &opts()).is_err());
}

#[test]
fn repetitions() {
    let g = fixtures::guess();
    let s = sequential_repetition(&g, 2, &opts()).unwrap();
    assert_eq!(s.instance.verifier.turns, 4);
    assert!((honest(&s.instance) - 0.25).abs() < 1e-9);
    let r = sequential_repetition(&fixtures::relay_yes(3, 0.8), 2, &opts()).unwrap();
    assert_eq!(r.instance.verifier.turns, 7);
    assert!((honest(&r.instance) - 0.64).abs() < 1e-9);
    let p = parallel_repetition_fresh_provers(&g, 2, &opts()).unwrap();
    assert_eq!(p.instance.verifier.provers, 2);
    assert!((honest(&p.instance) - 0.25).abs() < 1e-9);
    let p = parallel_repetition_fresh_provers(&fixtures::chsh(), 2, &opts()).unwrap();
    assert_eq!(p.instance.verifier.provers, 4);
    let c = fixtures::chsh_value();
    assert!((honest(&p.instance) - c * c).abs() < 1e-9);
    let one = sequential_repetition(&g, 1, &opts()).unwrap();
    assert!((honest(&one.instance) - 0.5).abs() < 1e-12);
}
