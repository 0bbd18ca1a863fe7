use qmip_core::fixtures;
use qmip_core::simulate::{run, CoinMode, RunOptions};
use qmip_core::{acceptance_probability, validate, Tolerances};

fn purified(inst: &qmip_core::ProtocolInstance) -> f64 {
    run(
        inst,
        &RunOptions {
            coin_mode: CoinMode::Purify,
            ..RunOptions::default()
        },
    )
    .unwrap()
    .acceptance
}

#[test]
fn reference_values() {
    let cases = [
        ("always", fixtures::always(), 1.0),
        ("never", fixtures::never(), 0.0),
        ("guess", fixtures::guess(), 0.5),
        ("good", fixtures::good(), 0.75),
        ("chsh", fixtures::chsh(), fixtures::chsh_value()),
        ("sound", fixtures::sound(0.01), 0.01),
        ("relay 5", fixtures::relay_yes(5, 0.8), 0.8),
        ("relay 9", fixtures::relay_yes(9, 1.0), 1.0),
        ("relay-no 5", fixtures::relay_no(5, 0.04), 0.04),
    ];
    for (name, inst, expected) in cases {
        assert!(validate(&inst, &Tolerances::default()).is_empty(), "{name}");
        let p = acceptance_probability(&inst).unwrap();
        assert!((p - expected).abs() < 1e-12, "{name}: {p} vs {expected}");
        assert!((purified(&inst) - p).abs() < 1e-10, "{name}: coin modes disagree");
    }
}

#[test]
fn runs_are_bitwise_deterministic() {
    let inst = fixtures::chsh();
    let a = acceptance_probability(&inst).unwrap();
    let b = acceptance_probability(&inst).unwrap();
    assert_eq!(a.to_bits(), b.to_bits());
}

#[test]
fn snapshots_stay_normalized() {
    let inst = fixtures::relay_yes(5, 0.8);
    let t = run(
        &inst,
        &RunOptions {
            keep_snapshots: true,
            ..RunOptions::default()
        },
    )
    .unwrap();
    assert_eq!(t.snapshots.len(), inst.verifier.turns + 2);
    for s in &t.snapshots {
        assert!((s.norm_sq() - 1.0).abs() < 1e-10);
    }
}
