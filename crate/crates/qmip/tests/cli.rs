use std::path::{Path, PathBuf};
use std::process::Command;

use qmip::format;
use qmip_core::{acceptance_probability, fixtures, Tolerances};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn qmip(out: &Path, args: &[&str]) -> (i32, String, String) {
    let o = Command::new(env!("CARGO_BIN_EXE_qmip"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("binary runs");
    (
        o.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&o.stdout).into_owned(),
        String::from_utf8_lossy(&o.stderr).into_owned(),
    )
}

fn records(out: &Path) -> Vec<serde_json::Value> {
    std::fs::read_to_string(out.join("records.jsonl"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn save_then_load_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let tol = Tolerances::default();
    for name in qmip::fixtures::names() {
        let inst = qmip::fixtures::build(name).unwrap();
        let path = dir.path().join(format!("{name}.json"));
        format::save(&inst, &path, Some(name)).unwrap();
        let back = format::load(&path, &tol).unwrap();
        assert_eq!(back.layout().unwrap(), inst.layout().unwrap(), "{name}");
        assert_eq!(back.verifier.schedule(), inst.verifier.schedule(), "{name}");
        let (a, b) = (acceptance_probability(&inst).unwrap(), acceptance_probability(&back).unwrap());
        assert!((a - b).abs() <= 1e-12, "{name}: {a} vs {b}");
    }
}

#[test]
fn chsh_file_has_expected_shape() {
    let inst = format::load(&fixture("chsh.json"), &Tolerances::default()).unwrap();
    assert_eq!(inst.verifier.provers, 2);
    assert_eq!(inst.verifier.turns, 2);
    assert_eq!(inst.verifier.message_size(), 1);
    let v = acceptance_probability(&inst).unwrap();
    assert!((v - fixtures::chsh_value()).abs() <= 1e-12);
}

#[test]
fn non_unitary_gate_is_reported_with_its_line() {
    let text = std::fs::read_to_string(fixture("chsh.json")).unwrap();
    let mut doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    let gates = doc["circuits"].as_array_mut().unwrap().iter_mut().flat_map(|c| c["gates"].as_array_mut().unwrap().iter_mut());
    let u = gates.into_iter().find(|g| g["gate"] == "U").unwrap();
    u["matrix"][0][0] = serde_json::json!([0.9, 0.0]);
    let broken = serde_json::to_string_pretty(&doc).unwrap();
    // The error points at the opening brace of the offending gate.
    let lines: Vec<&str> = broken.lines().collect();
    let u_line = lines.iter().position(|l| l.contains("\"gate\": \"U\"")).unwrap();
    let gate_line = (0..u_line).rev().find(|&i| lines[i].trim() == "{").unwrap() + 1;
    let err = format::parse(&broken, Path::new("broken.json"), &Tolerances::default()).unwrap_err();
    let msg = err.to_string();
    assert_eq!(err.exit_code(), 2);
    assert!(msg.contains("not unitary"), "{msg}");
    assert!(msg.starts_with(&format!("broken.json:{gate_line}:")), "{msg}");
}

#[test]
fn malformed_json_carries_a_position() {
    let err = format::parse("{\n  \"version\": ,\n}", Path::new("x.json"), &Tolerances::default()).unwrap_err();
    assert!(err.to_string().starts_with("x.json:2:"), "{err}");
}

#[test]
fn exit_codes_follow_the_error_class() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    let good = fixture("good.json").display().to_string();
    let (code, stdout, _) = qmip(out, &["simulate", &fixture("always.json").display().to_string()]);
    assert_eq!((code, stdout.trim()), (0, "p_acc = 1.000000000000"));

    let missing = out.join("missing.json").display().to_string();
    assert_eq!(qmip(out, &["simulate", &missing]).0, 2);

    // Rewinding needs a perfectly rewindable input.
    let (code, _, err) = qmip(out, &["transform", &good, "--pass", "rewind"]);
    assert_eq!(code, 3, "{err}");
    assert!(err.contains("not perfectly rewindable"), "{err}");

    let (code, _, err) = qmip(out, &["audit", &good, "--dims", "1"]);
    assert_eq!(code, 2, "{err}");
}

#[test]
fn pipeline_refuses_a_claim_without_gap() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(fixture("good_5turn.json")).unwrap();
    let mut doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    doc["metadata"]["soundness"] = serde_json::json!(0.8);
    let flat = dir.path().join("flat.json");
    std::fs::write(&flat, serde_json::to_string_pretty(&doc).unwrap()).unwrap();
    let (code, _, err) = qmip(dir.path(), &["pipeline", &flat.display().to_string()]);
    assert_eq!(code, 3);
    assert!(err.contains("stage `rewindable`") && err.contains("no gap"), "{err}");
}

#[test]
fn records_are_deterministic_apart_from_timing() {
    let dir = tempfile::tempdir().unwrap();
    let chsh = fixture("chsh.json").display().to_string();
    for _ in 0..2 {
        let (code, _, err) = qmip(dir.path(), &["audit", &chsh, "--restarts", "3", "--seed", "5"]);
        assert_eq!(code, 0, "{err}");
    }
    let mut recs = records(dir.path());
    assert_eq!(recs.len(), 2);
    for r in &mut recs {
        assert!(r["wall_time_ms"].as_f64().unwrap() >= 0.0);
        r["wall_time_ms"] = serde_json::Value::Null;
    }
    assert_eq!(recs[0], recs[1]);
    let digest = qmip::record::digest(&std::fs::read(fixture("chsh.json")).unwrap());
    assert_eq!(recs[0]["digest"].as_str(), Some(digest.as_str()));
}

#[test]
fn audit_strategy_reproduces_its_value() {
    let dir = tempfile::tempdir().unwrap();
    let chsh = fixture("chsh.json").display().to_string();
    let (code, _, _) = qmip(dir.path(), &["audit", &chsh, "--restarts", "5"]);
    assert_eq!(code, 0);
    let value = records(dir.path())[0]["acceptance"].as_f64().unwrap();
    let strat = dir.path().join("chsh_opt.json").display().to_string();
    let (code, stdout, _) = qmip(dir.path(), &["simulate", &chsh, "--strategy", &strat]);
    assert_eq!(code, 0);
    let p: f64 = stdout.trim().trim_start_matches("p_acc = ").parse().unwrap();
    assert!((p - value).abs() <= 1e-9, "{p} vs {value}");
}

#[test]
fn committed_fixtures_verify() {
    let checked = qmip::fixtures::verify(&fixture(""), 1e-9).unwrap();
    assert_eq!(checked.len(), qmip::fixtures::names().len());
}

#[test]
fn generated_fixtures_match_committed_digests() {
    let dir = tempfile::tempdir().unwrap();
    let fresh = qmip::fixtures::generate(dir.path(), 1e-9).unwrap();
    let committed: qmip::fixtures::Manifest =
        serde_json::from_str(&std::fs::read_to_string(fixture("manifest.json")).unwrap()).unwrap();
    assert_eq!(fresh, committed);
}
