//! The `probkt` command line. Every command prints one JSON record per line
//! on stdout; failures go to stderr and select the exit status.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use probkt_core::matcher::{most_probable_world, CostVariant};
use probkt_core::objective::{evaluate_scene, ObjectiveOptions};
use probkt_core::oracle::WorldEnumeration;
use probkt_core::pipeline::{aggregate, run_fold, FoldReport};
use probkt_core::planner::{self, PlanLimits};
use probkt_core::{
    engine, qlang, Error as CoreError, GradientMethod, LabelVocab, Mode, Query, Scene,
};
use serde_json::{json, Value};

use crate::error::{classify, CliError, ExitStatus};
use crate::{config, records, scenefile};

#[derive(Debug, Parser)]
#[command(
    name = "probkt",
    version,
    about = "Exact query probabilities over per-object class beliefs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse a query and dump its syntax tree.
    Parse(ParseArgs),
    /// Query probability and loss of every scene in a file.
    Eval(EvalArgs),
    /// Gradient of the query probability for one scene.
    Grad(GradArgs),
    /// Run the knowledge-transfer experiment described by a config file.
    Train(TrainArgs),
    /// Compare filtering thresholds and matching against exact evaluation.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct ParseArgs {
    pub query: String,
    /// Comma-separated class names.
    #[arg(long, value_delimiter = ',', conflicts_with = "scenes")]
    pub vocab: Option<Vec<String>>,
    /// Take the vocabulary from this scene file's header.
    #[arg(long)]
    pub scenes: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, Args)]
pub struct LimitArgs {
    /// Largest counter state space a plan may use.
    #[arg(long)]
    pub limit_states: Option<u64>,
    /// Largest number of worlds brute-force enumeration may visit.
    #[arg(long)]
    pub limit_worlds: Option<u64>,
}

impl LimitArgs {
    fn plan_limits(&self) -> PlanLimits {
        let d = PlanLimits::default();
        PlanLimits {
            max_states: self.limit_states.unwrap_or(d.max_states),
            max_worlds: self.limit_worlds.unwrap_or(d.max_worlds),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Open,
    Closed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EvalMethod {
    Exact,
    Hungarian,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub scenes: PathBuf,
    /// Confidence filter threshold in (0.5, 1].
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long, value_enum, default_value = "exact")]
    pub method: EvalMethod,
    /// Override the mode of every count constraint.
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[command(flatten)]
    pub limits: LimitArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GradMethod {
    Clamp,
    Reverse,
    Findiff,
}

#[derive(Debug, Args)]
pub struct GradArgs {
    #[arg(long)]
    pub scenes: PathBuf,
    #[arg(long)]
    pub scene_id: String,
    #[arg(long, value_enum, default_value = "reverse")]
    pub method: GradMethod,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[command(flatten)]
    pub limits: LimitArgs,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Directory for `reports.jsonl` and `heads.json`.
    #[arg(long)]
    pub out: PathBuf,
    /// Override the config's seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub scenes: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "1.0,0.99,0.95")]
    pub deltas: Vec<f64>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[command(flatten)]
    pub limits: LimitArgs,
}

/// Runs a parsed command line, writing records to `out`.
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Parse(a) => cmd_parse(&a, out),
        Command::Eval(a) => cmd_eval(&a, out),
        Command::Grad(a) => cmd_grad(&a, out),
        Command::Train(a) => cmd_train(&a, out),
        Command::Bench(a) => cmd_bench(&a, out),
    }
}

/// Entry point of the binary.
pub fn main() -> std::process::ExitCode {
    let cli = Cli::parse();
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match run(cli, &mut out) {
        Ok(()) => std::process::ExitCode::SUCCESS,
        Err(e) => {
            let _ = out.flush();
            eprintln!("probkt: {e}");
            std::process::ExitCode::from(e.exit_status() as u8)
        }
    }
}

fn emit(out: &mut dyn Write, v: &Value) -> Result<(), CliError> {
    writeln!(out, "{v}").map_err(|source| CliError::Io {
        path: "stdout".into(),
        source,
    })
}

const KEYWORDS: [&str; 8] = [
    "count_objects",
    "range_count_objects",
    "count_in",
    "sum_objects",
    "presence",
    "and",
    "closed",
    "inf",
];

/// Class names for a query given without a vocabulary: every word that is
/// not a keyword, in order of first appearance.
fn implied_vocab(text: &str) -> Result<LabelVocab, CliError> {
    let mut names: Vec<&str> = Vec::new();
    for word in text.split(|c: char| !(c.is_ascii_alphanumeric() || c == '_')) {
        if !word.is_empty() && !KEYWORDS.contains(&word) && !names.contains(&word) {
            names.push(word);
        }
    }
    if names.is_empty() {
        names.push("_");
    }
    LabelVocab::new(&names, &[], None).map_err(|e| CliError::core("vocab", e))
}

fn cmd_parse(a: &ParseArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let vocab = match (&a.vocab, &a.scenes) {
        (Some(names), _) => {
            LabelVocab::new(names, &[], None).map_err(|e| CliError::core("vocab", e))?
        }
        (None, Some(path)) => scenefile::read_path(path)?.vocab,
        (None, None) => implied_vocab(&a.query)?,
    };
    let q = qlang::parse(&a.query, &vocab).map_err(|e| CliError::core("query", e))?;
    emit(
        out,
        &json!({
            "schema_version": records::SCHEMA_VERSION,
            "query": qlang::print(&q, &vocab),
            "ast": records::query_ast(&q, &vocab),
        }),
    )
}

fn scene_query(s: &Scene, mode: Option<ModeArg>) -> Query {
    let q = s.query.clone().unwrap_or(Query::Counts {
        constraints: Vec::new(),
        mode: Mode::Open,
    });
    match mode {
        None => q,
        Some(ModeArg::Open) => q.with_mode(Mode::Open),
        Some(ModeArg::Closed) => q.with_mode(Mode::Closed),
    }
}

/// Maps `f` over `items` on all cores; results keep input order.
fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get());
    if threads <= 1 || items.len() <= 1 {
        return items.iter().map(f).collect();
    }
    let chunk = items.len().div_ceil(threads);
    std::thread::scope(|scope| {
        let handles: Vec<_> = items
            .chunks(chunk)
            .map(|part| {
                let f = &f;
                scope.spawn(move || part.iter().map(f).collect::<Vec<R>>())
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("worker thread panicked"))
            .collect()
    })
}

fn check_delta(delta: Option<f64>) -> Result<(), CliError> {
    match delta {
        Some(d) if !(d > 0.5 && d <= 1.0) => {
            Err(CliError::core("--delta", CoreError::InvalidDelta(d)))
        }
        _ => Ok(()),
    }
}

fn cmd_eval(a: &EvalArgs, out: &mut dyn Write) -> Result<(), CliError> {
    check_delta(a.delta)?;
    let file = scenefile::read_path(&a.scenes)?;
    let vocab = &file.vocab;
    let opts = ObjectiveOptions {
        delta: a.delta,
        limits: a.limits.plan_limits(),
        ..Default::default()
    };
    let results = par_map(&file.scenes, |s| -> Result<Value, CoreError> {
        let q = scene_query(s, a.mode);
        match a.method {
            EvalMethod::Exact => {
                let o = evaluate_scene(s, &q, vocab, &opts, false)?;
                Ok(json!({
                    "id": s.id,
                    "probability": o.probability,
                    "nll": o.nll,
                    "plan_kind": o.plan_kind.as_str(),
                    "state_count": o.state_count,
                    "clamped": o.clamped.len(),
                    "clamp_conflict": o.clamp_conflict,
                }))
            }
            EvalMethod::Hungarian => {
                let m = most_probable_world(&s.beliefs, &q, CostVariant::NegLog)?;
                Ok(json!({
                    "id": s.id,
                    "method": "hungarian",
                    "probability": m.world_probability,
                    "lower_bound": true,
                    "nll": engine::nll(m.world_probability),
                    "assignment": m.assignment.labels.iter().map(|&c| vocab.name(c)).collect::<Vec<_>>(),
                    "total_cost": m.total_cost,
                }))
            }
        }
    });
    for (s, r) in file.scenes.iter().zip(results) {
        let mut v = r.map_err(|e| CliError::core(format!("scene {}", s.id), e))?;
        v["schema_version"] = json!(records::SCHEMA_VERSION);
        emit(out, &v)?;
    }
    Ok(())
}

fn cmd_grad(a: &GradArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let file = scenefile::read_path(&a.scenes)?;
    let vocab = &file.vocab;
    let s = file
        .find(&a.scene_id)
        .ok_or_else(|| CliError::Data(format!("no scene with id `{}`", a.scene_id)))?;
    let ctx = |e| CliError::core(format!("scene {}", s.id), e);
    let q = scene_query(s, a.mode);
    let limits = a.limits.plan_limits();
    let plan = planner::compile_with_limits(&q, vocab, s.len(), limits).map_err(ctx)?;
    let probability = engine::evaluate(&plan, &s.beliefs).map_err(ctx)?.value;
    let clamp = engine::gradient(&plan, &s.beliefs, GradientMethod::Clamp).map_err(ctx)?;
    let reverse = engine::gradient(&plan, &s.beliefs, GradientMethod::Reverse).map_err(ctx)?;
    let g = match a.method {
        GradMethod::Clamp => clamp.clone(),
        GradMethod::Reverse => reverse.clone(),
        GradMethod::Findiff => WorldEnumeration::new(limits.max_worlds)
            .finite_diff_gradient(&s.beliefs, &q, vocab, 1e-6)
            .map_err(ctx)?,
    };
    emit(
        out,
        &json!({
            "schema_version": records::SCHEMA_VERSION,
            "id": s.id,
            "method": format!("{:?}", a.method).to_lowercase(),
            "probability": probability,
            "classes": vocab.classes(),
            "gradient": (0..g.rows()).map(|i| g.row(i).to_vec()).collect::<Vec<_>>(),
            "clamp_vs_reverse_max_abs_diff": clamp.max_abs_diff(&reverse),
        }),
    )
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn cmd_train(a: &TrainArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&a.config).map_err(|source| CliError::Io {
        path: a.config.display().to_string(),
        source,
    })?;
    let mut cfg = config::parse(&text)?;
    if let Some(seed) = a.seed {
        cfg.synth.seed = seed;
    }
    std::fs::create_dir_all(&a.out).map_err(|source| CliError::Io {
        path: a.out.display().to_string(),
        source,
    })?;
    // folds are independent; run them side by side and report in order
    let folds: Vec<usize> = (0..cfg.synth.folds).collect();
    let reports: Vec<FoldReport> = par_map(&folds, |&f| run_fold(&cfg, f))
        .into_iter()
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::core("train", e))?;
    let mut lines = Vec::new();
    for f in &reports {
        lines.extend(f.iterations.iter().map(|r| records::iteration(f.fold, r)));
        lines.push(records::fold(f));
    }
    lines.push(records::aggregate(&aggregate(&reports)));
    let mut text = String::new();
    for v in &lines {
        emit(out, v)?;
        text.push_str(&v.to_string());
        text.push('\n');
    }
    write_file(&a.out.join("reports.jsonl"), &text)?;
    let heads = records::heads(&reports, cfg.synth.num_classes, cfg.synth.feature_dim);
    write_file(&a.out.join("heads.json"), &format!("{heads:#}\n"))
}

fn cmd_bench(a: &BenchArgs, out: &mut dyn Write) -> Result<(), CliError> {
    for &d in &a.deltas {
        check_delta(Some(d))?;
    }
    let file = scenefile::read_path(&a.scenes)?;
    let vocab = &file.vocab;
    let limits = a.limits.plan_limits();
    let queries: Vec<Query> = file.scenes.iter().map(|s| scene_query(s, a.mode)).collect();
    let run = |delta: Option<f64>| -> Result<(Vec<(f64, u64)>, f64), CliError> {
        let opts = ObjectiveOptions {
            delta,
            limits,
            ..Default::default()
        };
        let start = Instant::now();
        let mut rows = Vec::with_capacity(file.scenes.len());
        for (s, q) in file.scenes.iter().zip(&queries) {
            let o = evaluate_scene(s, q, vocab, &opts, false)
                .map_err(|e| CliError::core(format!("scene {}", s.id), e))?;
            rows.push((o.probability, o.state_count));
        }
        Ok((rows, start.elapsed().as_secs_f64() * 1e3))
    };
    let (exact, _) = run(None)?;
    let n = exact.len().max(1) as f64;
    for &d in &a.deltas {
        let (rows, wall_ms) = run(Some(d))?;
        let max_dp = rows
            .iter()
            .zip(&exact)
            .map(|(r, e)| (r.0 - e.0).abs())
            .fold(0.0, f64::max);
        emit(
            out,
            &json!({
                "schema_version": records::SCHEMA_VERSION,
                "method": "exact",
                "delta": d,
                "scenes": rows.len(),
                "mean_state_count": rows.iter().map(|r| r.1 as f64).sum::<f64>() / n,
                "wall_ms": wall_ms,
                "max_abs_dp": max_dp,
            }),
        )?;
    }
    let start = Instant::now();
    let (mut gaps, mut skipped) = (Vec::new(), 0usize);
    for ((s, q), e) in file.scenes.iter().zip(&queries).zip(&exact) {
        match most_probable_world(&s.beliefs, q, CostVariant::NegLog) {
            Ok(m) => gaps.push(e.0 - m.world_probability),
            Err(err) if classify(&err) == ExitStatus::Data => skipped += 1,
            Err(err) => return Err(CliError::core(format!("scene {}", s.id), err)),
        }
    }
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    emit(
        out,
        &json!({
            "schema_version": records::SCHEMA_VERSION,
            "method": "hungarian",
            "delta": null,
            "scenes": gaps.len(),
            "skipped": skipped,
            "wall_ms": wall_ms,
            "max_world_probability_gap": gaps.iter().copied().fold(0.0, f64::max),
            "mean_world_probability_gap": if gaps.is_empty() { 0.0 } else { gaps.iter().sum::<f64>() / gaps.len() as f64 },
        }),
    )
}
