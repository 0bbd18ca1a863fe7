//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on failure.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use clap::Parser;
use qmip::commands::{execute, Cli};
use qmip::format;
use qmip::record::RunRecord;
use qmip_core::adversary::{optimal_shared_state, seesaw, SeesawConfig};
use qmip_core::linalg;
use qmip_core::transforms::public_coin_shape;
use qmip_core::{acceptance_probability, fixtures, ProtocolInstance, Tolerances};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const IDENTITY: f64 = 1e-9;
const AUDIT_SLACK: f64 = 0.01;

struct Run {
    out: PathBuf,
}

impl Run {
    fn fixture(name: &str) -> PathBuf {
        Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
    }

    fn cli(&self, args: &[&str]) -> Result<RunRecord, String> {
        let mut argv = vec!["qmip".to_string(), "--out".into(), self.out.display().to_string()];
        argv.extend(args.iter().map(|s| s.to_string()));
        let cli = Cli::try_parse_from(&argv).map_err(|e| e.to_string())?;
        execute(&cli, argv).map(|o| o.record).map_err(|e| e.to_string())
    }

    /// Runs a pass and returns its record and the written instance.
    fn transform(&self, file: &Path, pass: &str, extra: &[&str]) -> Result<(RunRecord, ProtocolInstance), String> {
        let f = file.display().to_string();
        let mut args = vec!["transform", f.as_str(), "--pass", pass];
        args.extend_from_slice(extra);
        let rec = self.cli(&args)?;
        let path = PathBuf::from(rec.outputs.last().ok_or("no output written")?);
        let inst = format::load(&path, &Tolerances::default()).map_err(|e| e.to_string())?;
        Ok((rec, inst))
    }

    fn audit(&self, file: &Path, extra: &[&str]) -> Result<qmip::record::AuditRecord, String> {
        let f = file.display().to_string();
        let mut args = vec!["audit", f.as_str()];
        args.extend_from_slice(extra);
        self.cli(&args)?.adversary.ok_or_else(|| "no audit record".into())
    }
}

fn output(rec: &RunRecord) -> PathBuf {
    PathBuf::from(rec.outputs.last().expect("output"))
}

fn honest(rec: &RunRecord) -> f64 {
    rec.transform.as_ref().expect("transform record").output.honest_value
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= IDENTITY
}

type Check = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn c1(r: &Run) -> Check {
    let mut details = Vec::new();
    for name in ["good.json", "always.json"] {
        let (_, inst) = r.transform(&Run::fixture(name), "rewindable", &[])?;
        let v = optimal_shared_state(&inst.verifier, &inst.provers).map_err(|e| e.to_string())?.value;
        details.push(format!("{name} optimum {v:.12}"));
        if !close(v, 0.5) {
            return Err(details.join(", "));
        }
    }
    Ok(details.join(", "))
}

fn c2(r: &Run) -> Check {
    let mut inputs = vec![Run::fixture("rewindable_good.json")];
    for name in ["good.json", "always.json"] {
        inputs.push(output(&r.transform(&Run::fixture(name), "rewindable", &[])?.0));
    }
    let mut details = Vec::new();
    for file in inputs {
        let (rec, inst) = r.transform(&file, "rewind", &[])?;
        let paths = rec.transform.as_ref().and_then(|t| t.rewinding).ok_or("no rewinding split")?;
        let v = acceptance_probability(&inst).map_err(|e| e.to_string())?;
        let stem = file.file_stem().unwrap().to_string_lossy().into_owned();
        details.push(format!(
            "{stem} value {v:.12} rewinding {:.12} invertibility {:.12}",
            paths.rewinding_test(),
            paths.invertibility_test()
        ));
        if !(close(v, 1.0) && close(honest(&rec), 1.0) && close(paths.rewinding_test(), 1.0) && close(paths.invertibility_test(), 1.0)) {
            return Err(details.join("; "));
        }
    }
    Ok(details.join("; "))
}

fn c3(r: &Run) -> Check {
    let sound = Run::fixture("sound.json");
    let s = r.audit(&sound, &["--restarts", "20"])?.value;
    if s > 0.01 + 1e-9 {
        return Err(format!("no-instance see-saw value {s} exceeds 0.01"));
    }
    let (lifted, _) = r.transform(&sound, "rewindable", &["--lift", "--no-verify"])?;
    let (rewound, _) = r.transform(&output(&lifted), "rewind", &["--no-verify"])?;
    let file = output(&rewound);
    let mut best = f64::MIN;
    for seed in 0..5 {
        let seed = seed.to_string();
        let a = r.audit(&file, &["--restarts", "20", "--seed", &seed, "--convergence", "1e-8", "--max-sweeps", "100"])?;
        best = best.max(a.value);
    }
    let bound = 0.5 + 2.0 * s.sqrt() + 2.5 * s;
    ensure(
        best <= bound + AUDIT_SLACK,
        format!("s = {s:.6}, rewound see-saw {best:.6} (100 restarts over 5 seeds) vs bound {bound:.6} + {AUDIT_SLACK}"),
    )
}

fn c4(r: &Run) -> Check {
    let mut details = Vec::new();
    let mut ok = true;
    for turns in ["five", "nine"] {
        let yes = Run::fixture(&format!("{turns}_turn.json"));
        let (rec, _) = r.transform(&yes, "halve", &[])?;
        let c = rec.transform.as_ref().unwrap().input.honest_value;
        let v = honest(&rec);
        ok &= close(v, (1.0 + c) / 2.0);
        details.push(format!("{turns}-turn honest {v:.12} vs (1+c)/2 = {:.12}", (1.0 + c) / 2.0));

        let no = Run::fixture(&format!("{turns}_turn_no.json"));
        let s = r.audit(&no, &["--restarts", "10"])?.value;
        let (halved, _) = r.transform(&no, "halve", &["--no-verify"])?;
        let a = r.audit(&output(&halved), &["--restarts", "10"])?.value;
        let bound = (1.0 + s.sqrt()) / 2.0;
        ok &= a <= bound + AUDIT_SLACK;
        details.push(format!("no-instance s = {s:.6}, halved see-saw {a:.6} vs {bound:.6}"));
    }
    ensure(ok, details.join("; "))
}

fn c5(r: &Run) -> Check {
    let (rec, inst) = r.transform(&Run::fixture("nine_turn.json"), "three-turn", &[])?;
    let v = honest(&rec);
    let mut ok = inst.verifier.turns == 3 && close(v, 1.0);
    let no = Run::fixture("nine_turn_no.json");
    let claimed = format::load(&no, &Tolerances::default()).map_err(|e| e.to_string())?.claims.soundness.ok_or("no soundness claim")?;
    let delta = 1.0 - claimed;
    let (lifted, _) = r.transform(&no, "three-turn", &["--no-verify"])?;
    let m = lifted.transform.as_ref().unwrap().input.turns;
    // The lifted prover keeps 16 private qubits; search over message actions only.
    let a = r.audit(&output(&lifted), &["--restarts", "10", "--dims", "0"])?.value;
    let bound = 1.0 - delta / ((m - 1) as f64).powi(2);
    ok &= a <= bound + AUDIT_SLACK;
    ensure(
        ok,
        format!("{} turns, honest {v:.12}; no-instance audit {a:.6} vs 1 - delta/(m-1)^2 = {bound:.6} (delta {delta}, m {m})", inst.verifier.turns),
    )
}

fn c6(r: &Run) -> Check {
    let mut details = Vec::new();
    let mut ok = true;
    for name in ["three_turn.json", "chsh_3turn.json"] {
        let (rec, inst) = r.transform(&Run::fixture(name), "public-coin", &[])?;
        let bits = public_coin_shape(&inst.verifier).map_err(|e| e.to_string())?.broadcast_bits();
        let c = rec.transform.as_ref().unwrap().input.honest_value;
        let v = honest(&rec);
        ok &= bits == 1 && close(v, (1.0 + c) / 2.0);
        details.push(format!("{name}: {bits} bit, honest {v:.12} vs {:.12}", (1.0 + c) / 2.0));
    }
    ensure(ok, details.join("; "))
}

fn c7(r: &Run) -> Check {
    let mut details = Vec::new();
    let mut ok = true;
    let pc = output(&r.transform(&Run::fixture("three_turn.json"), "public-coin", &[])?.0);
    for file in [Run::fixture("pc3.json"), pc] {
        let (rec, inst) = r.transform(&file, "one-round", &[])?;
        let t = rec.transform.as_ref().unwrap();
        let shape_ok = inst.verifier.provers == t.input.provers + 1 && inst.verifier.turns == 2;
        ok &= shape_ok && close(t.output.honest_value, t.input.honest_value);
        details.push(format!(
            "({}, {}) -> ({}, {}), {:.12} -> {:.12}",
            t.input.provers, t.input.turns, inst.verifier.provers, inst.verifier.turns, t.input.honest_value, t.output.honest_value
        ));
    }
    ensure(ok, details.join("; "))
}

fn c8(r: &Run) -> Check {
    let yes = Run::fixture("good_5turn.json").display().to_string();
    let no = Run::fixture("good_5turn_no.json").display().to_string();
    let rec = r.cli(&["pipeline", &yes, "--no-instance", &no])?;
    let p = rec.pipeline.ok_or("no pipeline record")?;
    let n = p.no_instance.ok_or("no no-instance audit")?;
    let limit = 1.0 - 1.0 / p.bounds.p_prime;
    let ok = p.final_provers == 2 && p.final_turns == 2 && close(p.final_honest_value, 1.0) && n.audited_value <= limit + AUDIT_SLACK;
    ensure(
        ok,
        format!(
            "final ({}, {}), honest {:.12}; p' = {:.3}, no-instance {:.6} vs 1 - 1/p' = {:.6}",
            p.final_provers, p.final_turns, p.final_honest_value, p.bounds.p_prime, n.audited_value, limit
        ),
    )
}

fn c9(r: &Run) -> Check {
    let mut details = Vec::new();
    let mut ok = true;
    for name in ["three_turn.json", "chsh_3turn.json", "pc3.json"] {
        let file = Run::fixture(name);
        let direct = honest(&r.transform(&file, "direct-one-round", &[])?.0);
        let pc = output(&r.transform(&file, "public-coin", &[])?.0);
        let route = honest(&r.transform(&pc, "one-round", &[])?.0);
        ok &= close(direct, route);
        details.push(format!("{name}: {direct:.12} vs {route:.12}"));
    }
    ensure(ok, details.join("; "))
}

fn c10(r: &Run) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = f64::MIN;
    for _ in 0..1000 {
        let dim = rng.random_range(2..=8);
        let mut d = || {
            let rank = rng.random_range(1..=dim);
            linalg::random_density(dim, rank, &mut rng)
        };
        let (a, b, c) = (d(), d(), d());
        let f = |x, y| linalg::fidelity(x, y, IDENTITY).map_err(|e| e.to_string());
        let (ab, bc, ac) = (f(&a, &b)?, f(&b, &c)?, f(&a, &c)?);
        worst = worst.max(ab * ab + bc * bc - 1.0 - ac);
    }
    let mut ok = worst <= IDENTITY;
    let mut details = vec![format!("fidelity inequality worst excess {worst:.2e}")];

    let mut descents = 0;
    for (inst, dims) in [(fixtures::chsh(), vec![1, 1]), (fixtures::guess(), vec![1]), (fixtures::sound(0.05), vec![1])] {
        for seed in 0..5 {
            let mut cfg = SeesawConfig::new(dims.clone());
            cfg.restarts = 2;
            cfg.seed = seed;
            let res = seesaw(&inst.verifier, &cfg).map_err(|e| e.to_string())?;
            descents += res.trace.windows(2).filter(|w| w[1] < w[0] - IDENTITY).count();
        }
    }
    ok &= descents == 0;
    details.push(format!("{descents} trace descents"));

    let step = (PI / 16.0).to_string();
    for name in ["chsh.json", "guess.json", "sound.json"] {
        let a = r.audit(&Run::fixture(name), &["--restarts", "10", "--grid", &step])?;
        let g = a.grid_value.ok_or("no grid value")?;
        ok &= g <= a.value + 1e-6;
        details.push(format!("{name} grid {g:.6} <= see-saw {:.6}", a.value));
    }

    let chsh = r.audit(&Run::fixture("chsh.json"), &["--restarts", "20"])?;
    let target = (PI / 8.0).cos().powi(2);
    ok &= (chsh.value - target).abs() <= 1e-4;
    details.push(format!("CHSH see-saw {:.9} vs {target:.9}", chsh.value));
    ensure(ok, details.join("; "))
}

fn main() {
    let dir = tempfile::tempdir().expect("temp dir");
    let run = Run { out: dir.path().to_path_buf() };
    let criteria: [(&str, fn(&Run) -> Check); 10] = [
        ("perfect rewindability", c1),
        ("perfect completeness after rewinding", c2),
        ("rewinding soundness", c3),
        ("halving", c4),
        ("three-turn cascade", c5),
        ("public-coin conversion", c6),
        ("one-round preservation", c7),
        ("full pipeline", c8),
        ("direct and public-coin routes agree", c9),
        ("numerics", c10),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = std::time::Instant::now();
        let result = check(&run);
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(d) => println!("criterion {:>2} PASS {name} ({secs:.1}s): {d}", i + 1),
            Err(d) => {
                failed += 1;
                println!("criterion {:>2} FAIL {name} ({secs:.1}s): {d}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
