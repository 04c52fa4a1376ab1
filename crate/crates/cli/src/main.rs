use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use aka_core::adversary::{
    attack_auts_series, attack_failure_message, attack_suci_replay, infer_sqn, AttackKind, MAX_INFERENCE_BOUND,
};
use aka_core::network::{World, WorldConfig};
use aka_core::protocol::Sqn;
use aka_core::runner::{
    check_matrix, emit_outcome_matrix, matrix_configs, run_matrix, run_scenario, write_transcript, OutcomeRow,
    RunnerError, ScenarioConfig, ScenarioId,
};
use aka_core::transcript::TranscriptEvent;
use aka_core::variants::VariantMode;

const EXIT_CONFIG: u8 = 2;
const EXIT_MISMATCH: u8 = 3;

#[derive(Parser)]
#[command(
    name = "aka",
    version,
    about = "5G AKA privacy lab: scenarios, attacks and the replay-outcome matrix"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and print its transcript.
    Run(RunArgs),
    /// Run the scenario grid for a set of variants.
    Matrix(MatrixArgs),
    /// Run one attack procedure and print the adversary's conclusion.
    Attack(AttackArgs),
}

#[derive(clap::Args)]
struct RunArgs {
    /// TOML file with kebab-case keys; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    variant: Option<VariantMode>,
    #[arg(long)]
    scenario: Option<ScenarioId>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    window: Option<u64>,
    #[arg(long)]
    subscribers: Option<usize>,
    #[arg(long)]
    suci_gap: Option<u64>,
    #[arg(long)]
    auts_gap: Option<u64>,
    /// Directory for transcript.jsonl and outcome.json.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct MatrixArgs {
    #[arg(long, value_delimiter = ',', default_value = "baseline,nonce-in-suci")]
    variants: Vec<VariantMode>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 32)]
    window: u64,
    #[arg(long, default_value_t = 2)]
    subscribers: usize,
    /// Directory for matrix.txt and matrix.csv.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct AttackArgs {
    #[arg(long)]
    kind: AttackKind,
    #[arg(long, default_value = "baseline")]
    variant: VariantMode,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 8)]
    subscribers: usize,
    #[arg(long, default_value_t = 32)]
    window: u64,
    #[arg(long, default_value_t = 0)]
    victim: usize,
    /// Defaults to the victim.
    #[arg(long)]
    probe: Option<usize>,
    /// Cumulative honest-session offsets for auts-differential.
    #[arg(long, value_delimiter = ',', default_value = "1,3")]
    gaps: Vec<u64>,
    /// Provisioned counter for every subscriber.
    #[arg(long, default_value_t = 0)]
    initial_sqn: u64,
    /// Candidate search bound for auts-differential.
    #[arg(long, default_value_t = 1 << 16)]
    bound: u64,
}

fn exit_for(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<RunnerError>() {
        Some(e) if e.is_config() => EXIT_CONFIG,
        _ => 1,
    }
}

fn resolve_run_config(args: &RunArgs) -> Result<ScenarioConfig, RunnerError> {
    let mut cfg = match &args.config {
        Some(path) => ScenarioConfig::load(path)?,
        None => ScenarioConfig::default(),
    };
    if let Some(v) = args.variant {
        cfg.variant = v;
    }
    if let Some(s) = args.scenario {
        cfg.scenario = s;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(w) = args.window {
        cfg.window = w;
    }
    if let Some(n) = args.subscribers {
        cfg.subscribers = n;
    }
    if let Some(g) = args.suci_gap {
        cfg.suci_gap = g;
    }
    if let Some(g) = args.auts_gap {
        cfg.auts_gap = g;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write_outputs(dir: &Path, events: &[TranscriptEvent], row: &OutcomeRow) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    write_transcript(events, &dir.join("transcript.jsonl"))?;
    fs::write(dir.join("outcome.json"), serde_json::to_string_pretty(row)? + "\n")?;
    Ok(())
}

fn cmd_run(args: RunArgs) -> Result<u8> {
    let cfg = resolve_run_config(&args)?;
    let (events, row) = run_scenario(&cfg)?;
    for e in &events {
        let flag = if e.adversarial { " [adversary]" } else { "" };
        println!("{:>3} {:<8} {}{}", e.seq, e.direction.as_str(), e.summary, flag);
    }
    println!("scenario: {}", row.scenario);
    println!("variant:  {}", row.variant);
    println!("outcome:  {}", row.outcome);
    if let Some(v) = row.verdict {
        println!("verdict:  {v}");
    }
    if let Some(d) = &row.detail {
        println!("detail:   {d}");
    }
    if let Some(dir) = &args.out {
        write_outputs(dir, &events, &row)?;
    }
    Ok(0)
}

fn cmd_matrix(args: MatrixArgs) -> Result<u8> {
    if args.window == 0 {
        return Err(RunnerError::Config("window must be at least 1".into()).into());
    }
    let rows = run_matrix(&matrix_configs(
        &args.variants,
        args.seed,
        args.window,
        args.subscribers,
    ))?;
    let report = emit_outcome_matrix(&rows, args.out.as_deref())?;
    print!("{}", report.table);
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    let problems = check_matrix(&rows, &args.variants);
    if problems.is_empty() {
        Ok(0)
    } else {
        for p in &problems {
            eprintln!("mismatch: {p}");
        }
        Ok(EXIT_MISMATCH)
    }
}

fn cmd_attack(args: AttackArgs) -> Result<u8> {
    if args.bound > MAX_INFERENCE_BOUND {
        return Err(RunnerError::Config(format!("bound must be at most {MAX_INFERENCE_BOUND}")).into());
    }
    let probe = args.probe.unwrap_or(args.victim);
    if args.victim.max(probe) >= args.subscribers {
        return Err(RunnerError::Config("victim and probe must be below the subscriber count".into()).into());
    }
    let mut world = World::new(WorldConfig {
        variant: args.variant,
        subscribers: args.subscribers,
        window: args.window,
        seed: args.seed,
        initial_sqn: args.initial_sqn,
        ..WorldConfig::default()
    })
    .map_err(RunnerError::from)?;
    match args.kind {
        AttackKind::FailureMessage | AttackKind::SuciReplay => {
            let report = if args.kind == AttackKind::FailureMessage {
                attack_failure_message(&mut world, args.victim, probe)?
            } else {
                attack_suci_replay(&mut world, args.victim, probe)?
            };
            println!("attack:      {}", args.kind);
            println!("variant:     {}", args.variant);
            println!("victim:      {}", world.ue(args.victim).supi());
            println!("probe:       {}", world.ue(probe).supi());
            println!(
                "observed:    tag=0x{:02x} length={} cause={}",
                report.observation.tag,
                report.observation.length,
                report.observation.cause.map_or("-".to_owned(), |c| c.to_string())
            );
            println!("verdict:     {}", report.verdict);
            println!(
                "ground truth: {}",
                if args.victim == probe {
                    "same-subscriber"
                } else {
                    "different-subscriber"
                }
            );
        }
        AttackKind::AutsDifferential => {
            let base = world.hn_sqn(args.victim).map_err(RunnerError::from)?.next();
            let samples = attack_auts_series(&mut world, args.victim, &args.gaps)?;
            println!("attack:      {}", args.kind);
            println!("variant:     {}", args.variant);
            for s in &samples {
                let truth = Sqn::new(base.value() ^ (base.value() + s.gap)).to_bytes();
                println!(
                    "gap {:>4}:    differential={} counter-xor={}",
                    s.gap,
                    hex::encode(s.differential),
                    hex::encode(truth)
                );
            }
            let candidates = infer_sqn(&samples, args.bound)?;
            println!("candidates:  {} below {}", candidates.len(), args.bound);
            println!("contains true counter {}: {}", base, candidates.contains(&base.value()));
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Matrix(a) => cmd_matrix(a),
        Command::Attack(a) => cmd_attack(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_for(&e))
        }
    }
}
