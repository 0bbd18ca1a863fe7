//! See-saw audits of transformed no-instances against the claimed bounds.

use qmip_core::adversary::{seesaw, SeesawConfig};
use qmip_core::fixtures;
use qmip_core::transforms::*;
use qmip_core::ProtocolInstance;

fn audit(inst: &ProtocolInstance, dims: Vec<usize>, restarts: usize) -> f64 {
    let mut cfg = SeesawConfig::new(dims);
    cfg.restarts = restarts;
    cfg.convergence_tol = 1e-8;
    cfg.max_sweeps = 100;
    seesaw(&inst.verifier, &cfg).unwrap().value
}

fn lifted() -> TransformOptions {
    TransformOptions::unverified()
}

#[test]
fn halved_no_instance_stays_below_bound() {
    let s = 0.04;
    let out = halve_turns(&fixtures::relay_no(5, s), &lifted()).unwrap();
    let bound = out.report.soundness.value.unwrap();
    assert!((bound - (1.0 + s.sqrt()) / 2.0).abs() < 1e-12);
    let v = audit(&out.instance, vec![1], 10);
    assert!(v <= bound + 0.01, "{v} > {bound}");
    // The forward branch alone reaches (1+s)/2.
    assert!(v >= (1.0 + s) / 2.0 - 1e-6);
}

#[test]
fn public_coin_no_instance_stays_below_bound() {
    let out = to_public_coin_3turn(&fixtures::relay_no(3, 0.04), &lifted()).unwrap();
    let bound = out.report.soundness.value.unwrap();
    let v = audit(&out.instance, vec![1], 10);
    assert!(v <= bound + 0.01, "{v} > {bound}");
}

#[test]
fn one_round_no_instance_matches_public_coin() {
    let pc = to_public_coin_3turn(&fixtures::relay_no(3, 0.04), &lifted()).unwrap();
    let one = public_coin_to_one_round(&pc.instance, &lifted()).unwrap();
    assert_eq!(one.report.soundness.value, pc.report.soundness.value);
    let bound = one.report.soundness.value.unwrap();
    let v = audit(&one.instance, vec![0, 0], 5);
    assert!(v <= bound + 0.01, "{v} > {bound}");
}

#[test]
fn sequential_repetition_multiplies_soundness() {
    let out = sequential_repetition(&fixtures::sound(0.1), 2, &lifted()).unwrap();
    let v = audit(&out.instance, vec![1], 5);
    assert!(v <= 0.1 * 0.1 + 1e-6, "{v}");
}

#[test]
fn parallel_chsh_with_grouped_entanglement() {
    let out = parallel_repetition_fresh_provers(&fixtures::chsh(), 2, &lifted()).unwrap();
    let c = fixtures::chsh_value();
    let mut cfg = SeesawConfig::new(vec![1, 1, 1, 1]);
    cfg.restarts = 10;
    cfg.state_groups = Some(vec![2, 2]);
    let r = seesaw(&out.instance.verifier, &cfg).unwrap();
    assert!(r.value <= c * c + 1e-6, "{}", r.value);
    assert!(r.value >= c * c - 1e-4, "{}", r.value);
}

#[test]
fn pipeline_yes_and_lifted_no() {
    let mut yes = fixtures::relay_yes(5, 0.8);
    yes.claims.soundness = Some(0.01);
    let out = run_pipeline(&yes, false, &TransformOptions::default()).unwrap();
    let last = out.last();
    assert_eq!((last.verifier.provers, last.verifier.turns), (2, 2));
    assert!((qmip_core::acceptance_probability(last).unwrap() - 1.0).abs() < 1e-9);
    let b = out.bounds;
    assert_eq!(b.turns, 18);
    assert!((b.p_prime - 1.0 / (1.0 - b.final_soundness)).abs() < 1e-6);

    let mut no = fixtures::relay_no(5, 0.01);
    no.claims.completeness = Some(0.8);
    let chain = run_pipeline(&no, true, &TransformOptions::default()).unwrap();
    assert_eq!(chain.bounds, b);
    let v = qmip_core::acceptance_probability(chain.last()).unwrap();
    assert!(v <= 1.0 - 1.0 / b.p_prime + 0.01, "{v}");

    let mut flat = fixtures::relay_yes(5, 0.8);
    flat.claims.soundness = Some(0.8);
    let e = run_pipeline(&flat, false, &TransformOptions::default()).unwrap_err();
    assert!(e.to_string().contains("stage `rewindable`"), "{e}");
}
