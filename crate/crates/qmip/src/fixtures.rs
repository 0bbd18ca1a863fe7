//! The bundled fixture suite: construction, expected values and a manifest.

use std::path::Path;

use qmip_core::adversary::optimal_shared_state;
use qmip_core::fixtures as f;
use qmip_core::transforms::{
    lift_to_rewindable, make_perfectly_rewindable, pad_turns, rewind_to_perfect_completeness, to_public_coin_3turn,
    TransformOptions,
};
use qmip_core::{acceptance_probability, ProtocolInstance, Tolerances};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::format;
use crate::record::digest;

pub const MANIFEST: &str = "manifest.json";
const MANIFEST_VERSION: &str = "qmip-fixtures/1";

/// Where an expected value comes from.
pub mod source {
    /// Closed-form value of the construction.
    pub const ANALYTIC: &str = "analytic";
    /// Forced by the construction (e.g. the output ignores the provers).
    pub const CONSTRUCTION: &str = "construction";
    /// Read off a simulation of the generated file; a regression value.
    pub const SIMULATION: &str = "simulation";
}

/// One manifest entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    pub file: String,
    pub description: String,
    pub provers: usize,
    pub turns: usize,
    pub message_qubits: usize,
    pub honest_value: f64,
    pub honest_source: String,
    /// Best value over shared states with the honest circuits.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimal_shared_value: Option<f64>,
    /// Upper bound on every strategy, for no-instances.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub soundness_bound: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub soundness_source: Option<String>,
    pub digest: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub fixtures: Vec<Entry>,
}

struct Spec {
    name: &'static str,
    description: &'static str,
    build: fn() -> ProtocolInstance,
    honest: Option<f64>,
    honest_source: &'static str,
    optimal_shared: Option<f64>,
    soundness: Option<(f64, &'static str)>,
}

fn unverified() -> TransformOptions {
    TransformOptions::unverified()
}

fn with_claims(mut inst: ProtocolInstance, c: Option<f64>, s: Option<f64>) -> ProtocolInstance {
    inst.claims.completeness = c.or(inst.claims.completeness);
    inst.claims.soundness = s.or(inst.claims.soundness);
    inst
}

const NO_S: f64 = 0.04;
const SOUND_S: f64 = 0.01;

fn rewindable_good() -> ProtocolInstance {
    make_perfectly_rewindable(&f::good(), None, &TransformOptions::default())
        .expect("good is rewindable")
        .instance
}

fn rewound_sound() -> ProtocolInstance {
    let rw = lift_to_rewindable(&f::sound(SOUND_S), &unverified()).expect("lift").instance;
    rewind_to_perfect_completeness(&rw, &unverified()).expect("rewind").instance
}

fn pc3() -> ProtocolInstance {
    to_public_coin_3turn(&f::relay_yes(3, 0.8), &TransformOptions::default())
        .expect("three turns")
        .instance
}

fn pc3_no() -> ProtocolInstance {
    to_public_coin_3turn(&f::relay_no(3, NO_S), &unverified()).expect("three turns").instance
}

fn specs() -> Vec<Spec> {
    let chsh = f::chsh_value();
    vec![
        Spec {
            name: "always",
            description: "accepts unconditionally",
            build: f::always,
            honest: Some(1.0),
            honest_source: source::ANALYTIC,
            optimal_shared: Some(1.0),
            soundness: Some((1.0, source::CONSTRUCTION)),
        },
        Spec {
            name: "never",
            description: "rejects unconditionally",
            build: f::never,
            honest: Some(0.0),
            honest_source: source::ANALYTIC,
            optimal_shared: None,
            soundness: Some((0.0, source::CONSTRUCTION)),
        },
        Spec {
            name: "guess",
            description: "prover guesses a hidden fair coin",
            build: f::guess,
            honest: Some(0.5),
            honest_source: source::ANALYTIC,
            optimal_shared: Some(0.5),
            soundness: Some((0.5, source::ANALYTIC)),
        },
        Spec {
            name: "chsh",
            description: "CHSH game with the optimal entangled strategy",
            build: f::chsh,
            honest: Some(chsh),
            honest_source: source::ANALYTIC,
            optimal_shared: None,
            soundness: Some((chsh, source::ANALYTIC)),
        },
        Spec {
            name: "good",
            description: "CHSH verifier with provers that always answer 0",
            build: f::good,
            honest: Some(0.75),
            honest_source: source::ANALYTIC,
            optimal_shared: Some(0.75),
            soundness: None,
        },
        Spec {
            name: "rewindable_good",
            description: "good made perfectly rewindable",
            build: rewindable_good,
            honest: Some(0.5),
            honest_source: source::ANALYTIC,
            optimal_shared: Some(0.5),
            soundness: None,
        },
        Spec {
            name: "sound",
            description: "no-instance: coin guess and private event, no strategy exceeds 0.01",
            build: || f::sound(SOUND_S),
            honest: Some(SOUND_S),
            honest_source: source::ANALYTIC,
            optimal_shared: None,
            soundness: Some((SOUND_S, source::CONSTRUCTION)),
        },
        Spec {
            name: "rewound_sound",
            description: "sound lifted to a rewindable system and rewound",
            build: rewound_sound,
            honest: None,
            honest_source: source::SIMULATION,
            optimal_shared: None,
            soundness: Some((0.5 + 2.0 * SOUND_S.sqrt() + 2.5 * SOUND_S, source::ANALYTIC)),
        },
        Spec {
            name: "three_turn",
            description: "three-turn relay accepting with probability 0.8",
            build: || f::relay_yes(3, 0.8),
            honest: Some(0.8),
            honest_source: source::ANALYTIC,
            optimal_shared: None,
            soundness: None,
        },
        Spec {
            name: "three_turn_no",
            description: "three-turn relay whose output ignores the prover",
            build: || f::relay_no(3, NO_S),
            honest: Some(NO_S),
            honest_source: source::ANALYTIC,
            optimal_shared: None,
            soundness: Some((NO_S, source::CONSTRUCTION)),
        },
        Spec {
            name: "chsh_3turn",
            description: "CHSH padded to three turns",
            build: || pad_turns(&f::chsh(), 3).expect("padding"),
            honest: Some(chsh),
            honest_source: source::ANALYTIC,
            optimal_shared: None,
            soundness: Some((chsh, source::ANALYTIC)),
        },
        Spec {
            name: "five_turn",
            description: "five-turn relay accepting with probability 0.8",
            build: || f::relay_yes(5, 0.8),
            honest: Some(0.8),
            honest_source: source::ANALYTIC,
            optimal_shared: None,
            soundness: None,
        },
        Spec {
            name: "five_turn_no",
            description: "five-turn relay whose output ignores the prover",
            build: || f::relay_no(5, NO_S),
            honest: Some(NO_S),
            honest_source: source::ANALYTIC,
            optimal_shared: None,
            soundness: Some((NO_S, source::CONSTRUCTION)),
        },
        Spec {
            name: "nine_turn",
            description: "nine-turn relay with perfect completeness",
            build: || f::relay_yes(9, 1.0),
            honest: Some(1.0),
            honest_source: source::ANALYTIC,
            optimal_shared: None,
            soundness: None,
        },
        Spec {
            name: "nine_turn_no",
            description: "nine-turn relay whose output ignores the prover",
            build: || f::relay_no(9, NO_S),
            honest: Some(NO_S),
            honest_source: source::ANALYTIC,
            optimal_shared: None,
            soundness: Some((NO_S, source::CONSTRUCTION)),
        },
        Spec {
            name: "pc3",
            description: "three_turn converted to a public-coin verifier",
            build: pc3,
            honest: Some(0.9),
            honest_source: source::ANALYTIC,
            optimal_shared: None,
            soundness: None,
        },
        Spec {
            name: "pc3_no",
            description: "three_turn_no converted to a public-coin verifier",
            build: pc3_no,
            honest: Some((1.0 + NO_S) / 2.0),
            honest_source: source::ANALYTIC,
            optimal_shared: None,
            soundness: Some(((1.0 + NO_S.sqrt()) / 2.0, source::ANALYTIC)),
        },
        Spec {
            name: "good_5turn",
            description: "five-turn yes-instance claiming completeness 0.8 and soundness 0.01",
            build: || with_claims(f::relay_yes(5, 0.8), None, Some(SOUND_S)),
            honest: Some(0.8),
            honest_source: source::ANALYTIC,
            optimal_shared: None,
            soundness: None,
        },
        Spec {
            name: "good_5turn_no",
            description: "five-turn no-instance paired with good_5turn",
            build: || with_claims(f::relay_no(5, SOUND_S), Some(0.8), None),
            honest: Some(SOUND_S),
            honest_source: source::ANALYTIC,
            optimal_shared: None,
            soundness: Some((SOUND_S, source::CONSTRUCTION)),
        },
    ]
}

/// Names of every bundled fixture.
pub fn names() -> Vec<&'static str> {
    specs().iter().map(|s| s.name).collect()
}

/// Builds a fixture by name.
pub fn build(name: &str) -> Option<ProtocolInstance> {
    specs().into_iter().find(|s| s.name == name).map(|s| (s.build)())
}

fn mismatch(file: &str, what: &str, expected: f64, found: f64) -> CliError {
    CliError::Mismatch(format!("{file}: {what} is {found:.12}, expected {expected:.12}"))
}

fn optimal(inst: &ProtocolInstance) -> CliResult<f64> {
    Ok(optimal_shared_state(&inst.verifier, &inst.provers)?.value)
}

/// Writes every fixture and the manifest into `dir`, checking each value first.
pub fn generate(dir: &Path, tol: f64) -> CliResult<Manifest> {
    let mut entries = Vec::new();
    for spec in specs() {
        let inst = (spec.build)();
        let file = format!("{}.json", spec.name);
        let honest = acceptance_probability(&inst)?;
        if let Some(h) = spec.honest {
            if (h - honest).abs() > tol {
                return Err(mismatch(&file, "honest value", h, honest));
            }
        }
        if let Some(o) = spec.optimal_shared {
            let found = optimal(&inst)?;
            if (o - found).abs() > tol {
                return Err(mismatch(&file, "optimal shared-state value", o, found));
            }
        }
        let text = format::to_json(&inst, Some(spec.name));
        format::write_text(&dir.join(&file), &text)?;
        entries.push(Entry {
            file,
            description: spec.description.into(),
            provers: inst.verifier.provers,
            turns: inst.verifier.turns,
            message_qubits: inst.verifier.message_size(),
            honest_value: spec.honest.unwrap_or(honest),
            honest_source: spec.honest_source.into(),
            optimal_shared_value: spec.optimal_shared,
            soundness_bound: spec.soundness.map(|s| s.0),
            soundness_source: spec.soundness.map(|s| s.1.to_string()),
            digest: digest(text.as_bytes()),
        });
    }
    let manifest = Manifest {
        version: MANIFEST_VERSION.into(),
        fixtures: entries,
    };
    let mut text = serde_json::to_string_pretty(&manifest).expect("plain data serializes");
    text.push('\n');
    format::write_text(&dir.join(MANIFEST), &text)?;
    Ok(manifest)
}

/// Outcome of checking one fixture.
#[derive(Debug, Clone)]
pub struct Checked {
    pub file: String,
    pub honest_value: f64,
}

/// Loads every fixture listed in the manifest and recomputes its values.
pub fn verify(dir: &Path, tol: f64) -> CliResult<Vec<Checked>> {
    let path = dir.join(MANIFEST);
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
    let manifest: Manifest = serde_json::from_str(&text).map_err(|e| CliError::Parse {
        path: path.clone(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    if manifest.version != MANIFEST_VERSION {
        return Err(CliError::Usage(format!("{}: unsupported manifest version", path.display())));
    }
    let mut out = Vec::new();
    for e in &manifest.fixtures {
        let file = dir.join(&e.file);
        let bytes = std::fs::read(&file).map_err(|err| CliError::io(&file, err))?;
        if digest(&bytes) != e.digest {
            return Err(CliError::Mismatch(format!("{}: contents differ from the manifest digest", e.file)));
        }
        let inst = format::load(&file, &Tolerances::default())?;
        let shape = (inst.verifier.provers, inst.verifier.turns, inst.verifier.message_size());
        if shape != (e.provers, e.turns, e.message_qubits) {
            return Err(CliError::Mismatch(format!(
                "{}: (k, m, q_M) = {shape:?}, manifest says ({}, {}, {})",
                e.file, e.provers, e.turns, e.message_qubits
            )));
        }
        let honest = acceptance_probability(&inst)?;
        if (honest - e.honest_value).abs() > tol {
            return Err(mismatch(&e.file, "honest value", e.honest_value, honest));
        }
        if let Some(o) = e.optimal_shared_value {
            let found = optimal(&inst)?;
            if (found - o).abs() > tol {
                return Err(mismatch(&e.file, "optimal shared-state value", o, found));
            }
        }
        out.push(Checked {
            file: e.file.clone(),
            honest_value: honest,
        });
    }
    Ok(out)
}
