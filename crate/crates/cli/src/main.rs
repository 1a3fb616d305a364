//! `omniflow` command-line tool.

mod config;
mod error;
mod records;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use omniflow_core::serializer::{self, serialize_with, Role};
use omniflow_core::simulator::{self, to_csv, to_table, ReportRow, Scenario};
use omniflow_core::supervision::{self, TimedTranscript, TranscriptToken};
use omniflow_core::tail::{self, Scheduler, TimedToken};
use omniflow_core::{ablation_grid, length_reward, ChunkOutputs, InputTrace, RewardGroup, Rollout};

use config::{Overrides, RunConfig};
use error::CliError;
use records::{
    GroupRecord, PlanRecord, PlannedToken, RewardRecord, SampleRecord, TokenRecord,
    TranscriptRecord,
};

#[derive(Parser)]
#[command(name = "omniflow", version, about = "Chunked full-duplex streaming engine")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// `key = value` run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Named design point, e.g. `t200-explicit-ls`.
    #[arg(long)]
    preset: Option<String>,
    /// Output file (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Text,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Trace plus per-chunk outputs to the line-per-token sequence format.
    Serialize {
        trace: PathBuf,
        outputs: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Run a scenario and report duplex metrics.
    Simulate {
        scenario: PathBuf,
        #[command(flatten)]
        common: Common,
        /// `tail`, `fixed:A:B` or `textlead:N`.
        #[arg(long)]
        strategy: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        /// Report every comparison strategy instead of one run.
        #[arg(long)]
        compare: bool,
        #[arg(long, value_enum, default_value = "text")]
        format: ReportFormat,
        /// Also write the serialized sequence here.
        #[arg(long)]
        sequence: Option<PathBuf>,
    },
    /// Timestamped transcript to a per-chunk training sample.
    Supervise {
        transcript: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Length rewards for grouped rollouts.
    Reward {
        groups: PathBuf,
        /// Output file (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// The five ablation presets, optionally serialized on a shared fixture.
    Grid {
        trace: Option<PathBuf>,
        outputs: Option<PathBuf>,
        /// Output file (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Plan a token stream chunk by chunk.
    Schedule {
        tokens: PathBuf,
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        strategy: Option<String>,
    },
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn emit(out: Option<&Path>, body: &str) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, body).map_err(|e| CliError::io(path, e)),
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            lock.write_all(body.as_bytes())
                .and_then(|_| lock.flush())
                .map_err(|e| CliError::io(Path::new("<stdout>"), e))
        }
    }
}

fn resolve(common: &Common, strategy: Option<String>, seed: Option<u64>) -> Result<RunConfig, CliError> {
    let text = common.config.as_deref().map(read).transpose()?;
    let flags = Overrides {
        preset: common.preset.clone(),
        strategy,
        seed,
    };
    Ok(RunConfig::resolve(text.as_deref(), &flags)?)
}

fn load_trace(path: &Path) -> Result<InputTrace, CliError> {
    records::read_trace(&read(path)?).map_err(|e| CliError::record_at(path, e))
}

fn load_outputs(path: &Path) -> Result<ChunkOutputs, CliError> {
    records::read_outputs(&read(path)?).map_err(|e| CliError::record_at(path, e))
}

fn cmd_serialize(trace: &Path, outputs: &Path, common: &Common) -> Result<(), CliError> {
    let cfg = resolve(common, None, None)?;
    let trace = load_trace(trace)?;
    let outputs = load_outputs(outputs)?;
    let seq = serialize_with(&trace, &outputs, &cfg.serializer, &cfg.options.profile, None)
        .map_err(CliError::engine)?;
    emit(common.out.as_deref(), &serializer::to_lines(&seq.tokens))
}

fn cmd_simulate(
    path: &Path,
    common: &Common,
    cfg: RunConfig,
    compare: bool,
    format: ReportFormat,
    sequence: Option<&Path>,
) -> Result<(), CliError> {
    let (trace, triggers) =
        records::read_scenario(&read(path)?).map_err(|e| CliError::record_at(path, e))?;
    let sc = Scenario {
        trace,
        triggers,
        seed: cfg.seed,
    };
    let responder = cfg.responder.build();
    let rows = if compare {
        if sequence.is_some() {
            return Err(CliError::Usage(
                "--sequence needs a single strategy; drop --compare".into(),
            ));
        }
        simulator::compare_strategies(&sc, &responder, &cfg.serializer, &cfg.durations, &cfg.options)
            .map_err(CliError::engine)?
    } else {
        let mut r = responder;
        let run = simulator::run(&sc, &mut r, &cfg.serializer, cfg.strategy, cfg.durations, &cfg.options)
            .map_err(CliError::engine)?;
        if let Some(p) = sequence {
            fs::write(p, serializer::to_lines(&run.sequence.tokens)).map_err(|e| CliError::io(p, e))?;
        }
        vec![ReportRow {
            label: cfg.strategy.label(),
            metrics: run.metrics,
        }]
    };
    let report = match format {
        ReportFormat::Text => to_table(&rows),
        ReportFormat::Csv => to_csv(&rows),
    };
    emit(common.out.as_deref(), &report)
}

fn cmd_supervise(path: &Path, common: &Common) -> Result<(), CliError> {
    let cfg = resolve(common, None, None)?;
    let recs: Vec<TranscriptRecord> =
        records::read_jsonl(&read(path)?).map_err(|e| CliError::record_at(path, e))?;
    let tr = TimedTranscript::new(recs.into_iter().map(TranscriptToken::from).collect());
    let sample = supervision::build_sample(&tr, &cfg.serializer.chunk, &cfg.options.profile)
        .map_err(CliError::engine)?;
    let out: Vec<SampleRecord> = sample.chunks.iter().map(SampleRecord::from).collect();
    emit(common.out.as_deref(), &records::write_jsonl(&out))
}

fn cmd_reward(path: &Path, out: Option<&Path>) -> Result<(), CliError> {
    let groups: Vec<GroupRecord> =
        records::read_jsonl(&read(path)?).map_err(|e| CliError::record_at(path, e))?;
    let mut recs = Vec::new();
    for (g, group) in groups.into_iter().enumerate() {
        let rg = RewardGroup {
            responses: group
                .responses
                .iter()
                .map(|r| Rollout {
                    correct: r.correct,
                    len: r.len,
                })
                .collect(),
            tau: group.tau,
        };
        let rewards = length_reward(&rg).map_err(CliError::engine)?;
        recs.extend(rewards.rewards.iter().enumerate().map(|(index, r)| RewardRecord {
            group: g,
            index,
            s: r.s,
            r_len: r.r_len,
        }));
    }
    emit(out, &records::write_jsonl(&recs))
}

fn cmd_grid(trace: Option<&Path>, outputs: Option<&Path>, out: Option<&Path>) -> Result<(), CliError> {
    let fixture = match (trace, outputs) {
        (Some(t), Some(o)) => Some((load_trace(t)?, load_outputs(o)?)),
        (Some(t), None) => Some((load_trace(t)?, ChunkOutputs::new())),
        _ => None,
    };
    let mut body = String::from("preset,chunk_ms,boundary,control,look_ahead");
    if fixture.is_some() {
        body.push_str(",tokens,listen,speak,boundary_tokens");
    }
    body.push('\n');
    for cfg in ablation_grid() {
        body.push_str(&format!(
            "{},{},{},{},{}",
            cfg.preset_name(),
            cfg.chunk.duration_ms(),
            cfg.boundary,
            cfg.control,
            cfg.chunk.look_ahead_tokens()
        ));
        if let Some((trace, outputs)) = &fixture {
            let seq = serializer::serialize(trace, outputs, &cfg).map_err(CliError::engine)?;
            let count = |role: Role| seq.tokens.iter().filter(|t| t.role == role).count();
            body.push_str(&format!(
                ",{},{},{},{}",
                seq.tokens.len(),
                count(Role::Listen),
                count(Role::Speak),
                count(Role::Boundary)
            ));
        }
        body.push('\n');
    }
    emit(out, &body)
}

fn cmd_schedule(path: &Path, common: &Common, strategy: Option<String>) -> Result<(), CliError> {
    let cfg = resolve(common, strategy, None)?;
    let recs: Vec<TokenRecord> =
        records::read_jsonl(&read(path)?).map_err(|e| CliError::record_at(path, e))?;
    let chunk = cfg.serializer.chunk;
    let mut sched = Scheduler::new(chunk, cfg.strategy, cfg.options.profile, cfg.durations)
        .map_err(CliError::engine)?;
    for r in recs {
        match r.duration_ms {
            Some(d) => {
                let tok = TimedToken::new(r.payload, d).map_err(CliError::engine)?;
                sched.push_timed([tok]);
            }
            None => sched.push_text([r.payload]),
        }
    }
    let mut out = Vec::new();
    while !sched.state().is_drained() {
        let plan = sched.plan_next().map_err(CliError::engine)?;
        let state = sched.state();
        out.push(PlanRecord {
            k: plan.k.get(),
            text: plan
                .text_tokens
                .iter()
                .map(|s| PlannedToken {
                    ordinal: s.ordinal,
                    payload: s.token.payload.clone(),
                    duration_ms: s.token.duration_ms,
                    playback_start_ms: s.playback_start_ms,
                })
                .collect(),
            vocalized: plan.vocalized.iter().map(|s| s.ordinal).collect(),
            speech_frames: plan.speech_tokens.len(),
            deferred: plan.newly_deferred.iter().map(|s| s.ordinal).collect(),
            cum_playback_ms: state.cum_playback_ms,
            lag_ms: tail::lag(state, plan.k, &chunk),
        });
    }
    emit(common.out.as_deref(), &records::write_jsonl(&out))
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Serialize {
            trace,
            outputs,
            common,
        } => cmd_serialize(&trace, &outputs, &common),
        Command::Simulate {
            scenario,
            common,
            strategy,
            seed,
            compare,
            format,
            sequence,
        } => {
            let cfg = resolve(&common, strategy, seed)?;
            cmd_simulate(&scenario, &common, cfg, compare, format, sequence.as_deref())
        }
        Command::Supervise { transcript, common } => cmd_supervise(&transcript, &common),
        Command::Reward { groups, out } => cmd_reward(&groups, out.as_deref()),
        Command::Grid {
            trace,
            outputs,
            out,
        } => cmd_grid(trace.as_deref(), outputs.as_deref(), out.as_deref()),
        Command::Schedule {
            tokens,
            common,
            strategy,
        } => cmd_schedule(&tokens, &common, strategy),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.render().to_string();
            let first = msg.lines().next().unwrap_or("").trim_start_matches("error: ");
            let err = CliError::Usage(first.to_string());
            eprintln!("{}", err.record());
            return ExitCode::from(err.exit_code() as u8);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.record());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
