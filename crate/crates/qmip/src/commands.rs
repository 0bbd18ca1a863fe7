//! Command-line parsing and the subcommands.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qmip_core::adversary::{brute_force_value, optimal_shared_state, seesaw, BruteForceConfig, SeesawConfig};
use qmip_core::simulate::{run, CoinMode, RunOptions};
use qmip_core::transforms::{
    direct_two_turn, halve_turns, lift_to_rewindable, make_perfectly_rewindable, parallel_repetition_fresh_provers,
    parallelize_to_three, public_coin_to_one_round, rewind_to_perfect_completeness, run_pipeline,
    sequential_repetition, to_public_coin_3turn, TransformOptions, Transformed, AUDIT_CAVEAT,
};
use qmip_core::{ProtocolInstance, Tolerances};

use crate::error::{CliError, CliResult};
use crate::format;
use crate::record::{
    digest, AuditRecord, NoInstanceRecord, NoInstanceStage, PipelineRecord, RunRecord, StageRecord,
};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "QMIP_OUT_DIR";

/// Stages of the no-instance chain with at most this many qubits are also
/// searched with the see-saw.
const SEESAW_STAGE_QUBITS: usize = 14;

#[derive(Debug, Parser)]
#[command(name = "qmip", version, about = "Simulate, transform and audit multi-prover quantum interactive proofs")]
pub struct Cli {
    /// Directory for written files and `records.jsonl`.
    #[arg(long, global = true, env = OUT_DIR_ENV, default_value = "out")]
    pub out: PathBuf,
    /// Tolerance for identities checked by the tool (honest values, fixture values).
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub tol: f64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the acceptance probability of a protocol file.
    Simulate(SimulateArgs),
    /// Apply one compiler pass and write the resulting protocol.
    Transform(TransformArgs),
    /// Search for dishonest strategies and compare with the claimed soundness.
    Audit(AuditArgs),
    /// Run the whole chain down to two turns and one extra prover.
    Pipeline(PipelineArgs),
    /// Work with the bundled fixture suite.
    Fixtures {
        #[command(subcommand)]
        action: FixtureAction,
    },
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    pub file: PathBuf,
    /// Replace the shared state with the best one for the file's circuits.
    #[arg(long)]
    pub optimal_shared: bool,
    /// Replace provers and shared state with those of a strategy file.
    #[arg(long)]
    pub strategy: Option<PathBuf>,
    /// Write the state after every turn.
    #[arg(long)]
    pub snapshots: bool,
    /// Simulate coins by purification instead of enumerating outcomes.
    #[arg(long)]
    pub purify: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PassName {
    Rewindable,
    Rewind,
    Halve,
    ThreeTurn,
    PublicCoin,
    OneRound,
    DirectOneRound,
    SeqRep,
    ParRep,
}

impl PassName {
    fn label(self) -> &'static str {
        match self {
            PassName::Rewindable => "rewindable",
            PassName::Rewind => "rewind",
            PassName::Halve => "halve",
            PassName::ThreeTurn => "three-turn",
            PassName::PublicCoin => "public-coin",
            PassName::OneRound => "one-round",
            PassName::DirectOneRound => "direct-one-round",
            PassName::SeqRep => "seq-rep",
            PassName::ParRep => "par-rep",
        }
    }
}

#[derive(Debug, Args)]
pub struct TransformArgs {
    pub file: PathBuf,
    #[arg(long, value_enum)]
    pub pass: PassName,
    /// Skip value preconditions and the honest-value check.
    #[arg(long)]
    pub no_verify: bool,
    /// For `rewindable`: use the capped construction without requiring the
    /// honest optimum to be at least ½ (how no-instances are carried along).
    #[arg(long)]
    pub lift: bool,
    /// For `rewindable`: the maximum acceptance over shared states, if known.
    #[arg(long)]
    pub p_max: Option<f64>,
    /// For `three-turn`: completeness error (default: 1 − claimed completeness).
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// For `three-turn`: soundness error (default: 1 − claimed soundness).
    #[arg(long)]
    pub delta: Option<f64>,
    /// Repetition count for `seq-rep` and `par-rep`.
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    /// Output file (default: `<out>/<stem>.<pass>.json`).
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AuditArgs {
    pub file: PathBuf,
    /// Private qubits per dishonest prover, comma separated (default: as in the file).
    #[arg(long, value_delimiter = ',')]
    pub dims: Option<Vec<usize>>,
    #[arg(long, default_value_t = 20)]
    pub restarts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 200)]
    pub max_sweeps: usize,
    /// Stop a restart when a sweep improves by less than this.
    #[arg(long, default_value_t = 1e-10)]
    pub convergence: f64,
    /// Restrict the shared state to a product over groups of consecutive provers.
    #[arg(long, value_delimiter = ',')]
    pub groups: Option<Vec<usize>>,
    /// Also run the grid search with this angle step (radians).
    #[arg(long)]
    pub grid: Option<f64>,
    /// Allowed excess over the claimed soundness before the verdict is EXCEEDS.
    #[arg(long, default_value_t = 1e-6)]
    pub slack: f64,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    pub file: PathBuf,
    /// Paired no-instance compiled with the same construction and audited.
    #[arg(long)]
    pub no_instance: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    pub restarts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Skip honest-value checks (the yes-instance is then treated like the no-instance).
    #[arg(long)]
    pub no_verify: bool,
}

#[derive(Debug, Subcommand)]
pub enum FixtureAction {
    /// Write every fixture and the manifest.
    Generate {
        #[arg(long, default_value = "fixtures")]
        dir: PathBuf,
    },
    /// Recompute every value in the manifest.
    Verify {
        #[arg(long, default_value = "fixtures")]
        dir: PathBuf,
    },
}

/// Printed lines plus the record of one invocation.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub lines: Vec<String>,
    pub record: RunRecord,
}

impl Outcome {
    fn say(&mut self, line: impl Into<String>) {
        self.lines.push(line.into());
    }
}

struct Input {
    path: PathBuf,
    inst: ProtocolInstance,
    digest: String,
}

fn tolerances(tol: f64) -> Tolerances {
    Tolerances {
        identity: tol,
        ..Tolerances::default()
    }
}

fn read_input(path: &Path, tol: &Tolerances) -> CliResult<Input> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    let text = String::from_utf8(bytes.clone()).map_err(|_| CliError::Schema {
        path: path.into(),
        line: 1,
        message: "file is not UTF-8".into(),
    })?;
    Ok(Input {
        path: path.into(),
        inst: format::parse(&text, path, tol)?,
        digest: digest(&bytes),
    })
}

fn stem(path: &Path) -> String {
    path.file_stem().map_or_else(|| "input".into(), |s| s.to_string_lossy().into_owned())
}

fn shape(inst: &ProtocolInstance) -> String {
    format!(
        "(k, m, q_M) = ({}, {}, {}), {} qubits",
        inst.verifier.provers,
        inst.verifier.turns,
        inst.verifier.message_size(),
        inst.total_qubits()
    )
}

/// Runs a parsed command line; `argv` is stored in the record.
pub fn execute(cli: &Cli, argv: Vec<String>) -> CliResult<Outcome> {
    let start = Instant::now();
    let tol = tolerances(cli.tol);
    let mut out = match &cli.command {
        Command::Simulate(a) => simulate(a, &cli.out, &tol)?,
        Command::Transform(a) => transform(a, &cli.out, &tol)?,
        Command::Audit(a) => audit(a, &cli.out, &tol)?,
        Command::Pipeline(a) => pipeline(a, &cli.out, &tol)?,
        Command::Fixtures { action } => fixtures(action, cli.tol)?,
    };
    out.record.command = argv;
    out.record.wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
    if !matches!(cli.command, Command::Fixtures { .. }) {
        out.record.append_to(&cli.out)?;
    }
    Ok(out)
}

fn base_record(input: &Input) -> RunRecord {
    RunRecord {
        input: Some(input.path.display().to_string()),
        digest: Some(input.digest.clone()),
        ..RunRecord::default()
    }
}

fn simulate(a: &SimulateArgs, out_dir: &Path, tol: &Tolerances) -> CliResult<Outcome> {
    let input = read_input(&a.file, tol)?;
    let mut inst = input.inst.clone();
    let mut out = Outcome {
        record: base_record(&input),
        ..Outcome::default()
    };
    if let Some(path) = &a.strategy {
        let s = format::load_strategy(path, inst.verifier.message_size(), tol)?;
        inst.provers = s.provers;
        inst.shared = s.shared;
        let v = qmip_core::validate(&inst, tol);
        if !v.is_empty() {
            return Err(qmip_core::Error::Invalid(v).into());
        }
    }
    if a.optimal_shared {
        inst.shared = optimal_shared_state(&inst.verifier, &inst.provers)?.state;
    }
    let opts = RunOptions {
        keep_snapshots: a.snapshots,
        coin_mode: if a.purify { CoinMode::Purify } else { CoinMode::Enumerate },
        tolerances: *tol,
        ..RunOptions::default()
    };
    let t = run(&inst, &opts)?;
    out.say(format!("p_acc = {:.12}", t.acceptance));
    if a.snapshots {
        let path = out_dir.join(format!("{}.snapshots.json", stem(&a.file)));
        let snaps: Vec<serde_json::Value> = t
            .snapshots
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let n = s.num_qubits();
                let entries: Vec<(String, [f64; 2])> = s
                    .entries()
                    .into_iter()
                    .filter(|(_, amp)| amp.norm_sqr() > 0.0)
                    .map(|(k, amp)| ((0..n).map(|j| if k.bit(j) { '1' } else { '0' }).collect(), [amp.re, amp.im]))
                    .collect();
                serde_json::json!({ "step": i, "norm_sq": s.norm_sq(), "entries": entries })
            })
            .collect();
        let text = serde_json::to_string_pretty(&snaps).expect("plain data serializes");
        format::write_text(&path, &text)?;
        out.say(format!("wrote {} snapshots to {}", snaps.len(), path.display()));
        out.record.outputs.push(path.display().to_string());
    }
    out.record.acceptance = Some(t.acceptance);
    Ok(out)
}

fn apply_pass(a: &TransformArgs, inst: &ProtocolInstance, opts: &TransformOptions) -> CliResult<Transformed> {
    let claims = inst.claims;
    Ok(match a.pass {
        PassName::Rewindable if a.lift => lift_to_rewindable(inst, opts)?,
        PassName::Rewindable => make_perfectly_rewindable(inst, a.p_max, opts)?,
        PassName::Rewind => rewind_to_perfect_completeness(inst, opts)?,
        PassName::Halve => halve_turns(inst, opts)?,
        PassName::ThreeTurn => {
            let epsilon = a.epsilon.or(claims.completeness.map(|c| 1.0 - c)).unwrap_or(0.0);
            let delta = a.delta.or(claims.soundness.map(|s| 1.0 - s)).unwrap_or(0.0);
            parallelize_to_three(inst, epsilon, delta, opts)?
        }
        PassName::PublicCoin => to_public_coin_3turn(inst, opts)?,
        PassName::OneRound => public_coin_to_one_round(inst, opts)?,
        PassName::DirectOneRound => direct_two_turn(inst, opts)?,
        PassName::SeqRep => sequential_repetition(inst, a.n, opts)?,
        PassName::ParRep => parallel_repetition_fresh_provers(inst, a.n, opts)?,
    })
}

fn transform_options(no_verify: bool, tol: &Tolerances) -> TransformOptions {
    TransformOptions {
        verify: !no_verify,
        tolerances: *tol,
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "none".into(), |v| format!("{v:.12}"))
}

fn transform(a: &TransformArgs, out_dir: &Path, tol: &Tolerances) -> CliResult<Outcome> {
    let input = read_input(&a.file, tol)?;
    let t = apply_pass(a, &input.inst, &transform_options(a.no_verify, tol))?;
    let name = a.pass.label();
    let path = a
        .output
        .clone()
        .unwrap_or_else(|| out_dir.join(format!("{}.{name}.json", stem(&a.file))));
    format::save(&t.instance, &path, Some(&format!("{} after {name}", stem(&a.file))))?;
    let r = &t.report;
    let mut out = Outcome {
        record: base_record(&input),
        ..Outcome::default()
    };
    out.say(format!("pass {name}"));
    out.say(format!("input  {}, honest value {:.12}", shape(&input.inst), r.input.honest_value));
    out.say(format!("output {}, honest value {:.12}", shape(&t.instance), r.output.honest_value));
    out.say(format!("completeness {} = {}", r.completeness.formula, fmt_opt(r.completeness.value)));
    out.say(format!("soundness {} = {}", r.soundness.formula, fmt_opt(r.soundness.value)));
    if let Some(p) = &r.rewinding {
        out.say(format!(
            "rewinding test {:.12}, invertibility test {:.12}",
            p.rewinding_test(),
            p.invertibility_test()
        ));
    }
    if !r.registers_added.is_empty() {
        out.say(format!("registers added: {}", r.registers_added.join(", ")));
    }
    for n in &r.notes {
        out.say(format!("note: {n}"));
    }
    out.say(format!("wrote {}", path.display()));
    out.record.acceptance = Some(r.output.honest_value);
    out.record.transform = Some(t.report);
    out.record.outputs.push(path.display().to_string());
    Ok(out)
}

fn audit(a: &AuditArgs, out_dir: &Path, tol: &Tolerances) -> CliResult<Outcome> {
    let input = read_input(&a.file, tol)?;
    let inst = &input.inst;
    let dims = a.dims.clone().unwrap_or_else(|| inst.private_qubits());
    if dims.len() != inst.verifier.provers {
        return Err(CliError::Usage(format!(
            "--dims lists {} sizes for {} provers",
            dims.len(),
            inst.verifier.provers
        )));
    }
    let mut cfg = SeesawConfig::new(dims.clone());
    cfg.restarts = a.restarts;
    cfg.seed = a.seed;
    cfg.max_sweeps = a.max_sweeps;
    cfg.convergence_tol = a.convergence;
    cfg.state_groups = a.groups.clone();
    let res = seesaw(&inst.verifier, &cfg)?;
    let grid = match a.grid {
        Some(step) => Some(brute_force_value(&inst.verifier, &BruteForceConfig::new(dims.clone(), step))?.value),
        None => None,
    };
    let claimed = inst.claims.soundness;
    let verdict = match claimed {
        Some(s) if res.value <= s + a.slack => "CONSISTENT",
        Some(_) => "EXCEEDS",
        None => "NO CLAIM",
    };
    let path = out_dir.join(format!("{}_opt.json", stem(&a.file)));
    format::write_text(&path, &format::strategy_to_json(&res.strategies, &res.shared))?;

    let mut out = Outcome {
        record: base_record(&input),
        ..Outcome::default()
    };
    out.say(format!("value = {:.12}", res.value));
    out.say(format!(
        "trace: {} sweeps, {:.12} -> {:.12}, {}",
        res.trace.len(),
        res.trace.first().copied().unwrap_or(res.value),
        res.value,
        if res.converged { "converged" } else { "sweep limit reached" }
    ));
    out.say(format!(
        "restarts: {} (best #{}), prover dims {:?}",
        res.restart_values.len(),
        res.best_restart,
        dims
    ));
    if let Some(g) = grid {
        out.say(format!("grid value = {g:.12}"));
    }
    match claimed {
        Some(s) => out.say(format!("claimed soundness {s:.12}: {verdict}")),
        None => out.say("no soundness claimed".to_string()),
    }
    out.say(format!("note: {AUDIT_CAVEAT}"));
    out.say(format!("wrote {}", path.display()));
    out.record.seed = Some(a.seed);
    out.record.acceptance = Some(res.value);
    out.record.outputs.push(path.display().to_string());
    out.record.adversary = Some(AuditRecord {
        prover_dims: dims,
        restarts: a.restarts,
        seed: a.seed,
        value: res.value,
        trace: res.trace,
        restart_values: res.restart_values,
        best_restart: res.best_restart,
        converged: res.converged,
        claimed_soundness: claimed,
        verdict: verdict.into(),
        grid_value: grid,
        caveat: AUDIT_CAVEAT.into(),
    });
    Ok(out)
}

fn pipeline(a: &PipelineArgs, out_dir: &Path, tol: &Tolerances) -> CliResult<Outcome> {
    let input = read_input(&a.file, tol)?;
    let chain = run_pipeline(&input.inst, a.no_verify, &transform_options(a.no_verify, tol))?;
    let mut out = Outcome {
        record: base_record(&input),
        ..Outcome::default()
    };
    let name = stem(&a.file);
    let mut stages = Vec::new();
    out.say(format!("input  {}", shape(&input.inst)));
    for (i, (stage, t)) in chain.stages.iter().enumerate() {
        let path = out_dir.join(format!("{name}.stage{}.{stage}.json", i + 1));
        format::save(&t.instance, &path, Some(&format!("{name} after {stage}")))?;
        out.say(format!(
            "stage {stage}: {}, honest value {:.12}",
            shape(&t.instance),
            t.report.output.honest_value
        ));
        out.record.outputs.push(path.display().to_string());
        stages.push(StageRecord {
            stage: stage.to_string(),
            file: path.display().to_string(),
            report: t.report.clone(),
        });
    }
    let b = chain.bounds;
    out.say(format!(
        "soundness: input {:.6}, rewound {:.6}, three-turn {:.6}, final {:.12}",
        b.input, b.rewound, b.three_turn, b.final_soundness
    ));
    out.say(format!("p' = {:.6}", b.p_prime));
    let last = chain.last();
    let final_value = chain.stages.last().expect("stages").1.report.output.honest_value;
    if !a.no_verify && (final_value - 1.0).abs() > tol.identity {
        return Err(qmip_core::Error::Numerical(format!("final honest value {final_value:.12} is not 1")).into());
    }

    let no_instance = match &a.no_instance {
        Some(path) => {
            let rec = audit_no_instance(path, a, b.final_soundness, tol)?;
            for s in &rec.stages {
                let searched = s.seesaw_value.map_or_else(String::new, |v| format!(", see-saw {v:.12}"));
                out.say(format!(
                    "no-instance stage {}: lifted value {:.12}{searched}",
                    s.stage, s.lifted_value
                ));
            }
            out.say(format!(
                "no-instance audited value {:.12} against 1 - 1/p' = {:.12}: {}",
                rec.audited_value, rec.limit, rec.verdict
            ));
            out.say(format!("note: {AUDIT_CAVEAT}"));
            Some(rec)
        }
        None => None,
    };
    out.record.seed = Some(a.seed);
    out.record.acceptance = Some(final_value);
    out.record.pipeline = Some(PipelineRecord {
        stages,
        bounds: b,
        final_provers: last.verifier.provers,
        final_turns: last.verifier.turns,
        final_honest_value: final_value,
        no_instance,
    });
    Ok(out)
}

/// Compiles the no-instance with the lifted construction and audits every
/// stage: its lifted honest value always, and a see-saw search when small.
fn audit_no_instance(path: &Path, a: &PipelineArgs, limit: f64, tol: &Tolerances) -> CliResult<NoInstanceRecord> {
    let input = read_input(path, tol)?;
    let chain = run_pipeline(&input.inst, true, &TransformOptions::unverified())?;
    let mut stages: Vec<NoInstanceStage> = Vec::new();
    for (stage, t) in &chain.stages {
        let inst = &t.instance;
        let lifted = t.report.output.honest_value;
        let searched = if inst.total_qubits() <= SEESAW_STAGE_QUBITS {
            let mut cfg = SeesawConfig::new(inst.private_qubits());
            cfg.restarts = a.restarts;
            cfg.seed = a.seed;
            Some(seesaw(&inst.verifier, &cfg)?.value)
        } else {
            None
        };
        stages.push(NoInstanceStage {
            stage: stage.to_string(),
            total_qubits: inst.total_qubits(),
            lifted_value: lifted,
            seesaw_value: searched,
        });
    }
    let last = stages.last().expect("stages");
    let worst = last.lifted_value.max(last.seesaw_value.unwrap_or(0.0));
    Ok(NoInstanceRecord {
        input: path.display().to_string(),
        digest: input.digest,
        stages,
        audited_value: worst,
        limit,
        verdict: if worst <= limit { "CONSISTENT" } else { "EXCEEDS" }.into(),
    })
}

fn fixtures(action: &FixtureAction, tol: f64) -> CliResult<Outcome> {
    let mut out = Outcome::default();
    match action {
        FixtureAction::Generate { dir } => {
            let m = crate::fixtures::generate(dir, tol)?;
            for e in &m.fixtures {
                out.say(format!("{}: honest value {:.12}", e.file, e.honest_value));
            }
            out.say(format!("wrote {} fixtures and {}", m.fixtures.len(), crate::fixtures::MANIFEST));
        }
        FixtureAction::Verify { dir } => {
            let checked = crate::fixtures::verify(dir, tol)?;
            for c in &checked {
                out.say(format!("{}: ok ({:.12})", c.file, c.honest_value));
            }
            out.say(format!("{} fixtures verified", checked.len()));
        }
    }
    Ok(out)
}
