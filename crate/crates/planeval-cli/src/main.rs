//! Command-line front end: score plans, corrupt them, run the planning
//! pipeline, and render corpus reports.

use std::fs;
use std::num::NonZeroUsize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use planeval::agent::backend::{BackendError, EchoBackend, HttpChatBackend, ModelBackend};
use planeval::agent::cassette::{RecordingBackend, ReplayBackend};
use planeval::agent::prompts::PromptSet;
use planeval::agent::{
    run_pipeline, transcript_to_json, AgentError, AgentTranscript, ImagePayload, PipelineMode,
    ResponseParseError, SceneInput,
};
use planeval::annotate::{ensure_concurrent, Annotator};
use planeval::config::{
    load_config, make_annotator, make_sentence_embedder, make_word_embedder, EvalConfig,
};
use planeval::corpus::{
    load_corpus, load_environment_table, render_report, EvaluationRow, ReportFormat, Setup,
    TrialRecord,
};
use planeval::corruption::{corrupt_plan, SubstitutionMap};
use planeval::embedding::{SentenceEmbedder, WordEmbedder};
use planeval::kas::kas_score;
use planeval::pg2s::{pg2s_score, Pg2sConfig};
use planeval::plan::{validate_plan, Plan};

#[derive(Parser)]
#[command(
    name = "planeval",
    version,
    about = "Plan similarity metrics, corpus reports, and a replayable planning pipeline"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score a predicted plan against a ground-truth plan, or a whole corpus.
    Evaluate(EvaluateArgs),
    /// Apply word substitutions to a plan's steps.
    Corrupt(CorruptArgs),
    /// Run the planning pipeline on a scene and emit the resulting plan.
    Plan(PlanArgs),
    /// Render the evaluation table for a corpus.
    Report(ReportArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Metric {
    Pg2s,
    Kas,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Markdown,
}

impl From<Format> for ReportFormat {
    fn from(format: Format) -> ReportFormat {
        match format {
            Format::Csv => ReportFormat::Csv,
            Format::Markdown => ReportFormat::Markdown,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Single,
    Multi,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BackendKind {
    Replay,
    Echo,
    #[value(name = "http_chat", alias = "http-chat")]
    HttpChat,
}

/// Scoring knobs shared by `evaluate` and `report`. Every flag can also be
/// set in the `--config` TOML file; flags win.
#[derive(Args, Default)]
struct ConfigFlags {
    /// TOML config file; command-line flags override its values.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Blend weight in [0, 1] (default 0.5).
    #[arg(long)]
    alpha: Option<f64>,
    /// Which component alpha weights: goal (default) or plan.
    #[arg(long, value_name = "SIDE")]
    alpha_on: Option<String>,
    /// Cosine threshold for sentence matches (default 0.708).
    #[arg(long, value_name = "TAU")]
    sentence_threshold: Option<f64>,
    /// Similarity threshold for word matches (default 0.708).
    #[arg(long, value_name = "TAU")]
    word_threshold: Option<f64>,
    /// Action match rule: both_above_tau (default) or product_above_tau_sq.
    #[arg(long, value_name = "RULE")]
    match_rule: Option<String>,
    /// Keep prepositional objects out of action frames.
    #[arg(long)]
    no_prep_objects: bool,
    /// Split conjoined clauses into separate action frames.
    #[arg(long)]
    split_conjuncts: bool,
    /// Sentence embedder: fixture:<path> or service:<url>.
    #[arg(long, value_name = "SPEC")]
    sentence_embedder: Option<String>,
    /// Word embedder: fixture:<path>, word2vec:<path>, or service:<url>.
    #[arg(long, value_name = "SPEC")]
    word_embedder: Option<String>,
    /// Annotator: rule_based (default), lexicon_dir:<path>, or external:<url>.
    #[arg(long, value_name = "SPEC")]
    annotator: Option<String>,
}

#[derive(Args)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["gt", "corpus"]))]
struct EvaluateArgs {
    /// Ground-truth plan JSON file.
    #[arg(
        long,
        value_name = "PATH",
        requires = "pred",
        conflicts_with = "corpus"
    )]
    gt: Option<PathBuf>,
    /// Predicted plan JSON file.
    #[arg(long, value_name = "PATH", requires = "gt", conflicts_with = "corpus")]
    pred: Option<PathBuf>,
    /// Corpus root: one directory per trial.
    #[arg(long, value_name = "DIR")]
    corpus: Option<PathBuf>,
    /// Metric(s) to compute.
    #[arg(long, value_enum, default_value_t = Metric::Both)]
    metric: Metric,
    /// Report format for corpus evaluation.
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Worker threads for corpus evaluation (default 1).
    #[arg(long, value_name = "N")]
    jobs: Option<NonZeroUsize>,
    #[command(flatten)]
    config: ConfigFlags,
}

#[derive(Args)]
struct CorruptArgs {
    /// Plan JSON file to corrupt.
    #[arg(long, value_name = "PATH")]
    plan: PathBuf,
    /// Substitution as from=to; repeatable.
    #[arg(long, value_name = "FROM=TO")]
    sub: Vec<String>,
    /// Substitution map JSON: {"pairs": [["from", "to"], ...]}.
    #[arg(long, value_name = "PATH")]
    map: Option<PathBuf>,
    /// Write the corrupted plan here instead of stdout.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
#[command(group = clap::ArgGroup::new("scene").required(true).args(["image", "table"]))]
struct PlanArgs {
    /// Task description handed to the planner.
    #[arg(long)]
    task: String,
    /// Scene image (.png, .jpg, or .jpeg).
    #[arg(long, value_name = "PATH")]
    image: Option<PathBuf>,
    /// Scene table CSV.
    #[arg(long, value_name = "PATH")]
    table: Option<PathBuf>,
    /// Pipeline shape: one combined call or staged agents.
    #[arg(long, value_enum, default_value_t = Mode::Multi)]
    mode: Mode,
    /// Model backend.
    #[arg(long, value_enum, default_value_t = BackendKind::Replay)]
    backend: BackendKind,
    /// Cassette JSON: source for --backend replay, destination for --record.
    #[arg(long, value_name = "PATH")]
    cassette: Option<PathBuf>,
    /// Record live exchanges to the --cassette path.
    #[arg(long)]
    record: bool,
    /// Directory of prompt templates overriding the bundled set.
    #[arg(long, value_name = "DIR")]
    prompts: Option<PathBuf>,
    /// Write the plan JSON here instead of stdout.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Write the full exchange transcript JSON here.
    #[arg(long, value_name = "PATH")]
    transcript: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// Corpus root: one directory per trial.
    #[arg(long, value_name = "DIR")]
    corpus: PathBuf,
    /// Report format.
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Worker threads (default 1).
    #[arg(long, value_name = "N")]
    jobs: Option<NonZeroUsize>,
    #[command(flatten)]
    config: ConfigFlags,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Evaluate(args) => run_evaluate(args),
        Command::Corrupt(args) => run_corrupt(args),
        Command::Plan(args) => run_plan(args),
        Command::Report(args) => run_report(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

/// 0 success, 2 input/usage error, 3 backend error, 4 model-response parse
/// error. Usage errors from argument parsing exit 2 via clap itself.
fn exit_code_for(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(agent_err) = cause.downcast_ref::<AgentError>() {
            return match agent_err {
                AgentError::Backend(_) => 3,
                AgentError::Parse(_) | AgentError::Plan(_) => 4,
                AgentError::InvalidInput(_) => 2,
            };
        }
        if cause.downcast_ref::<BackendError>().is_some() {
            return 3;
        }
        if cause.downcast_ref::<ResponseParseError>().is_some() {
            return 4;
        }
    }
    2
}

fn merged_config(flags: &ConfigFlags) -> Result<EvalConfig> {
    let from_flags = EvalConfig {
        alpha: flags.alpha,
        alpha_on: flags.alpha_on.clone(),
        sentence_threshold: flags.sentence_threshold,
        word_threshold: flags.word_threshold,
        action_match_rule: flags.match_rule.clone(),
        include_prep_objects: flags.no_prep_objects.then_some(false),
        split_conjunct_clauses: flags.split_conjuncts.then_some(true),
        sentence_embedder: flags.sentence_embedder.clone(),
        word_embedder: flags.word_embedder.clone(),
        annotator: flags.annotator.clone(),
        jobs: None,
    };
    let base = match &flags.config {
        Some(path) => load_config(path)?,
        None => EvalConfig::default(),
    };
    Ok(base.overlaid(from_flags))
}

/// Everything needed to score one gt/pred pair.
struct Scorers {
    annotator: Box<dyn Annotator>,
    sentence: Option<Box<dyn SentenceEmbedder>>,
    word: Option<Box<dyn WordEmbedder>>,
    pg2s: Pg2sConfig,
}

fn build_scorers(merged: &EvalConfig, need_pg2s: bool) -> Result<Scorers> {
    let pg2s = merged.pg2s_config()?;
    let annotator = make_annotator(merged.annotator.as_deref().unwrap_or("rule_based"))?;
    let (sentence, word) = if need_pg2s {
        let sentence_spec = merged.sentence_embedder.as_deref().ok_or_else(|| {
            anyhow!(
                "pg2s needs a sentence embedder; set sentence_embedder in the config file \
                 or pass --sentence-embedder (fixture:<path> or service:<url>)"
            )
        })?;
        let word_spec = merged.word_embedder.as_deref().ok_or_else(|| {
            anyhow!(
                "pg2s needs a word embedder; set word_embedder in the config file or pass \
                 --word-embedder (fixture:<path>, word2vec:<path>, or service:<url>)"
            )
        })?;
        (
            Some(make_sentence_embedder(sentence_spec)?),
            Some(make_word_embedder(word_spec)?),
        )
    } else {
        (None, None)
    };
    Ok(Scorers {
        annotator: ensure_concurrent(annotator),
        sentence,
        word,
        pg2s,
    })
}

fn read_plan(path: &Path) -> Result<Plan> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading plan file {}", path.display()))?;
    let plan =
        Plan::from_json(&text).with_context(|| format!("parsing plan file {}", path.display()))?;
    Ok(plan)
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn format_kas(score: Option<f64>) -> String {
    match score {
        Some(value) => format!("{value:.2}"),
        None => "None".to_string(),
    }
}

fn run_evaluate(args: EvaluateArgs) -> Result<()> {
    let merged = merged_config(&args.config)?;
    if let Some(corpus) = &args.corpus {
        if args.metric == Metric::Kas {
            bail!("corpus reports always include the pg2s column; use --metric both or pg2s");
        }
        let jobs = args
            .jobs
            .map(NonZeroUsize::get)
            .or(merged.jobs)
            .unwrap_or(1)
            .max(1);
        let scorers = build_scorers(&merged, true)?;
        let rows = corpus_rows(corpus, args.metric, jobs, &scorers)?;
        let report = render_report(&rows, args.format.into());
        return emit(&report, args.out.as_deref());
    }

    let gt = validate_plan(read_plan(
        args.gt.as_deref().expect("required by arg group"),
    )?)?;
    let pred = validate_plan(read_plan(
        args.pred.as_deref().expect("required by arg group"),
    )?)?;
    let scorers = build_scorers(&merged, args.metric != Metric::Kas)?;

    let mut output = String::new();
    if args.metric != Metric::Kas {
        let report = pg2s_score(
            &gt,
            &pred,
            scorers.annotator.as_ref(),
            scorers.sentence.as_deref().expect("built for pg2s"),
            scorers.word.as_deref().expect("built for pg2s"),
            &scorers.pg2s,
        )?;
        output.push_str(&format!(
            "s_plan: {:.2}\ns_goal: {:.2}\nalpha: {:.2}\npg2s: {:.2}\n",
            report.s_plan, report.s_goal, report.alpha, report.pg2s
        ));
    }
    if args.metric != Metric::Pg2s {
        let report = kas_score(&gt, &pred, scorers.annotator.as_ref())?;
        output.push_str(&format!("kas: {}\n", format_kas(report.score)));
    }
    emit(&output, args.out.as_deref())
}

fn corpus_rows(
    root: &Path,
    metric: Metric,
    jobs: usize,
    scorers: &Scorers,
) -> Result<Vec<EvaluationRow>> {
    let records = load_corpus(root)?;
    let pairs: Vec<(&TrialRecord, &Setup, &Plan)> = records
        .iter()
        .flat_map(|record| {
            record
                .predictions
                .iter()
                .map(move |(setup, pred)| (record, setup, pred))
        })
        .collect();

    let jobs = jobs.min(pairs.len().max(1));
    if jobs <= 1 {
        return pairs
            .iter()
            .map(|(record, setup, pred)| evaluate_pair(record, setup, pred, metric, scorers))
            .collect();
    }

    let next = AtomicUsize::new(0);
    let rows = Mutex::new(Vec::with_capacity(pairs.len()));
    let first_err = Mutex::new(None);
    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                if first_err.lock().unwrap().is_some() {
                    return;
                }
                let index = next.fetch_add(1, Ordering::Relaxed);
                if index >= pairs.len() {
                    return;
                }
                let (record, setup, pred) = pairs[index];
                match evaluate_pair(record, setup, pred, metric, scorers) {
                    Ok(row) => rows.lock().unwrap().push(row),
                    Err(err) => {
                        first_err.lock().unwrap().get_or_insert(err);
                        return;
                    }
                }
            });
        }
    });
    if let Some(err) = first_err.into_inner().unwrap() {
        return Err(err);
    }
    Ok(rows.into_inner().unwrap())
}

fn evaluate_pair(
    record: &TrialRecord,
    setup: &Setup,
    pred: &Plan,
    metric: Metric,
    scorers: &Scorers,
) -> Result<EvaluationRow> {
    let context = || format!("trial {} setup {}", record.trial_id, setup);
    let report = pg2s_score(
        &record.gt_plan,
        pred,
        scorers.annotator.as_ref(),
        scorers.sentence.as_deref().expect("built for pg2s"),
        scorers.word.as_deref().expect("built for pg2s"),
        &scorers.pg2s,
    )
    .with_context(context)?;
    let kas = if metric == Metric::Both {
        kas_score(&record.gt_plan, pred, scorers.annotator.as_ref())
            .with_context(context)?
            .score
    } else {
        None
    };
    Ok(EvaluationRow {
        trial_id: record.trial_id.clone(),
        setup: setup.clone(),
        pg2s: report.pg2s,
        kas,
    })
}

fn run_corrupt(args: CorruptArgs) -> Result<()> {
    let plan = read_plan(&args.plan)?;
    let mut pairs: Vec<(String, String)> = Vec::new();
    if let Some(map_path) = &args.map {
        let text = fs::read_to_string(map_path)
            .with_context(|| format!("reading substitution map {}", map_path.display()))?;
        let map = SubstitutionMap::from_json(&text)
            .with_context(|| format!("parsing substitution map {}", map_path.display()))?;
        pairs.extend(map.pairs().iter().cloned());
    }
    for sub in &args.sub {
        let (from, to) = sub
            .split_once('=')
            .ok_or_else(|| anyhow!("--sub takes from=to, got {sub:?}"))?;
        pairs.push((from.to_string(), to.to_string()));
    }
    let map = SubstitutionMap::new(pairs)?;
    let outcome = corrupt_plan(&plan, &map);
    eprintln!("replacements: {}", outcome.replacements);
    let mut text = outcome.plan.to_json();
    text.push('\n');
    emit(&text, args.out.as_deref())
}

fn run_plan(args: PlanArgs) -> Result<()> {
    let scene = match (&args.image, &args.table) {
        (Some(path), None) => SceneInput::Image(ImagePayload::from_path(path)?),
        (None, Some(path)) => SceneInput::Table(load_environment_table(path)?),
        _ => unreachable!("enforced by arg group"),
    };
    let mode = match args.mode {
        Mode::Single => PipelineMode::SingleAgent,
        Mode::Multi => PipelineMode::MultiAgent,
    };
    let prompts = match &args.prompts {
        Some(dir) => PromptSet::from_dir(dir)?,
        None => PromptSet::bundled(),
    };
    if args.record && args.backend == BackendKind::Replay {
        bail!("--record needs a live backend; replay only reads the cassette");
    }
    if args.record && args.cassette.is_none() {
        bail!("--record needs --cassette to say where the recording goes");
    }

    let backend: Box<dyn ModelBackend> = match args.backend {
        BackendKind::Replay => {
            let path = args
                .cassette
                .as_deref()
                .ok_or_else(|| anyhow!("--backend replay needs --cassette"))?;
            if !path.exists() {
                bail!("cassette file not found: {}", path.display());
            }
            Box::new(ReplayBackend::from_path(path)?)
        }
        BackendKind::Echo => Box::new(EchoBackend::new()),
        BackendKind::HttpChat => Box::new(HttpChatBackend::from_env()?),
    };

    let transcript = if args.record {
        let recording = RecordingBackend::new(backend);
        let transcript = run_pipeline(&args.task, &scene, mode, &recording, &prompts)?;
        let cassette_path = args.cassette.as_deref().expect("checked above");
        recording
            .into_cassette()
            .save(cassette_path)
            .with_context(|| format!("writing cassette {}", cassette_path.display()))?;
        transcript
    } else {
        run_pipeline(&args.task, &scene, mode, backend.as_ref(), &prompts)?
    };

    write_transcript_outputs(&transcript, args.out.as_deref(), args.transcript.as_deref())
}

fn write_transcript_outputs(
    transcript: &AgentTranscript,
    out: Option<&Path>,
    transcript_path: Option<&Path>,
) -> Result<()> {
    if let Some(path) = transcript_path {
        let mut text = transcript_to_json(transcript);
        if !text.ends_with('\n') {
            text.push('\n');
        }
        fs::write(path, text).with_context(|| format!("writing transcript {}", path.display()))?;
    }
    let mut text = transcript.final_plan.to_json();
    text.push('\n');
    emit(&text, out)
}

fn run_report(args: ReportArgs) -> Result<()> {
    let merged = merged_config(&args.config)?;
    let jobs = args
        .jobs
        .map(NonZeroUsize::get)
        .or(merged.jobs)
        .unwrap_or(1)
        .max(1);
    let scorers = build_scorers(&merged, true)?;
    let rows = corpus_rows(&args.corpus, Metric::Both, jobs, &scorers)?;
    let report = render_report(&rows, args.format.into());
    emit(&report, args.out.as_deref())
}
