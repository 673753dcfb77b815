//! Command-line front end.
//!
//! Exit codes: 0 success, 1 input, configuration or usage error, 2 failure to
//! write output, 3 failure of a remote model call.

use std::collections::BTreeMap;
use std::fmt;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::conformance::{optimal_alignment, token_replay};
use crate::discovery::{discover_skill_with, DiscoveryOptions};
use crate::evaluation::{
    grid_csv, grid_table, report_table, run_retrieval_experiment, sensitivity_analysis, EvalQuery,
    ExperimentConfig, ExperimentContext, MethodSpec,
};
use crate::gateway::{
    embed, generate_thought, ChatClient, Embedder, FixtureMode, GatewayError, HashEmbedder,
    RemoteChat, RemoteConfig, RemoteEmbedder, ScriptedChat, ToolCatalog, TrigramEmbedder,
};
use crate::ingestion::{
    load_event_logs, load_library, load_reference_dags, save_library, DagFormat, DagLoadOptions,
    IngestError, LoadOptions, LogFormat, LogStats, Summary,
};
use crate::model::{Action, ProcessTree, SkillLibrary, Trace};
use crate::petri::{dag_to_petri, tree_to_petri};
use crate::retrieval::{
    embed_library, is_embedded_with, retrieve_by_conformance, retrieve_by_embedding,
    retrieve_hybrid, EmbeddingSource, RetrievalError, DEFAULT_K_FIRST,
};
use crate::scheduler::{
    critical_path_length, dag_speedup_stats, sequential_length, simulate_parallel_execution,
    speedup,
};
use crate::service::{self, ServiceState};
use crate::synth::{collision_suite, synthetic_suite};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_WRITE: i32 = 2;
pub const EXIT_REMOTE: i32 = 3;

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn input(e: impl fmt::Display) -> Self {
        Self {
            code: EXIT_INPUT,
            message: e.to_string(),
        }
    }

    fn write(e: impl fmt::Display) -> Self {
        Self {
            code: EXIT_WRITE,
            message: e.to_string(),
        }
    }

    fn remote(e: impl fmt::Display) -> Self {
        Self {
            code: EXIT_REMOTE,
            message: e.to_string(),
        }
    }

    fn gateway(e: GatewayError) -> Self {
        if e.is_remote() {
            Self::remote(e)
        } else {
            Self::input(e)
        }
    }

    fn retrieval(e: RetrievalError) -> Self {
        match e {
            RetrievalError::Gateway(g) => Self::gateway(g),
            other => Self::input(other),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

type CliResult<T = ()> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "skillmine",
    version,
    about = "Mine, store and retrieve planner skills"
)]
pub struct Cli {
    /// TOML file with default option values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Log verbosity filter, e.g. `info` or `skillmine=debug`.
    #[arg(long, global = true, default_value = "warn")]
    log_level: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Discover one skill per process from a log file and save the library.
    Discover(DiscoverArgs),
    /// Rank library skills for a query.
    Retrieve(RetrieveArgs),
    /// Run a retrieval experiment over a query set.
    Evaluate(EvaluateArgs),
    /// Convert reference DAGs to workflow nets.
    Convert(ConvertArgs),
    /// Serve the library over HTTP.
    Serve(ServeArgs),
    /// Write a synthetic library and query set.
    Synth(SynthArgs),
    /// Simulate parallel execution of a process tree.
    Schedule(ScheduleArgs),
    /// Parallel speedup statistics of reference DAGs.
    Speedup(SpeedupArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum LogFormatArg {
    Auto,
    Canonical,
    Processtbench,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DagFormatArg {
    Auto,
    Canonical,
    Taskbench,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EmbedderArg {
    None,
    StubHash,
    StubTrigram,
    Remote,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Embed,
    Conform,
    Hybrid,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum OutputFormat {
    Json,
    Text,
    Csv,
}

#[derive(Debug, Args)]
struct DiscoverArgs {
    #[arg(long)]
    log: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "auto")]
    format: LogFormatArg,
    /// Ignore directly-follows edges below this fraction of the strongest edge.
    #[arg(long)]
    freq_threshold: Option<f64>,
    /// Skip malformed records instead of failing.
    #[arg(long)]
    lenient: bool,
    /// Embed the skills before saving.
    #[arg(long, value_enum)]
    embedder: Option<EmbedderArg>,
    #[arg(long)]
    pretty: bool,
}

#[derive(Debug, Args)]
struct RetrieveArgs {
    #[arg(long)]
    library: PathBuf,
    #[arg(long)]
    query: String,
    #[arg(long, value_enum, default_value = "hybrid")]
    mode: ModeArg,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    k_first: Option<usize>,
    /// Use deterministic stub models instead of remote endpoints.
    #[arg(long)]
    stub: bool,
    /// Embedder used with --stub.
    #[arg(long, value_enum)]
    embedder: Option<EmbedderArg>,
    /// Thought to use instead of asking the planner, comma separated.
    #[arg(long, value_delimiter = ',')]
    thought: Option<Vec<String>>,
    /// JSON object mapping queries to planner responses for the stub planner.
    #[arg(long)]
    script: Option<PathBuf>,
    /// JSON tool catalog offered to the planner; defaults to the library's actions.
    #[arg(long)]
    catalog: Option<PathBuf>,
    #[arg(long)]
    pretty: bool,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long)]
    library: PathBuf,
    #[arg(long)]
    queries: PathBuf,
    /// Comma-separated methods: embed, embed:NAME, conform, hybrid@K, hybrid:NAME@K.
    #[arg(long, value_delimiter = ',')]
    modes: Option<Vec<String>>,
    /// Comma-separated thought fitness thresholds.
    #[arg(long, value_delimiter = ',')]
    sensitivity: Option<Vec<f64>>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    stub: bool,
    #[arg(long)]
    script: Option<PathBuf>,
    #[arg(long)]
    catalog: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: OutputFormat,
    #[arg(long)]
    pretty: bool,
}

#[derive(Debug, Args)]
struct ConvertArgs {
    #[arg(long)]
    dag: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "auto")]
    format: DagFormatArg,
    /// Apply transitive reduction before conversion.
    #[arg(long)]
    reduce: bool,
}

#[derive(Debug, Args)]
struct ServeArgs {
    #[arg(long)]
    library: PathBuf,
    #[arg(long)]
    bind: Option<String>,
    #[arg(long)]
    port: Option<u16>,
    #[arg(long)]
    stub: bool,
    #[arg(long, value_enum)]
    embedder: Option<EmbedderArg>,
    #[arg(long)]
    script: Option<PathBuf>,
    #[arg(long)]
    catalog: Option<PathBuf>,
    /// Require this bearer token on every endpoint except /healthz.
    #[arg(long)]
    token: Option<String>,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Write the name-collision suite instead of the random one.
    #[arg(long)]
    collision: bool,
    /// Replace thoughts by noisy ones at these fitness targets, cycled over queries.
    #[arg(long, value_delimiter = ',')]
    noise: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
struct ScheduleArgs {
    /// Process tree in text form.
    #[arg(long)]
    tree: String,
    #[arg(long, default_value_t = 1)]
    duration: u64,
}

#[derive(Debug, Args)]
struct SpeedupArgs {
    #[arg(long)]
    dags: PathBuf,
    #[arg(long, value_enum, default_value = "auto")]
    format: DagFormatArg,
    #[arg(long)]
    reduce: bool,
}

/// Option defaults read from `--config`. Command-line flags take precedence.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    k: Option<usize>,
    k_first: Option<usize>,
    stub: Option<bool>,
    lenient: Option<bool>,
    freq_threshold: Option<f64>,
    bind: Option<String>,
    port: Option<u16>,
    token: Option<String>,
    modes: Option<Vec<String>>,
    sensitivity: Option<Vec<f64>>,
    fixtures: Option<PathBuf>,
    fixture_mode: Option<String>,
}

impl FileConfig {
    fn load(path: Option<&Path>) -> CliResult<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
    }

    fn remote(&self, mut cfg: RemoteConfig) -> CliResult<RemoteConfig> {
        if let Some(dir) = &self.fixtures {
            let mode = match self.fixture_mode.as_deref().unwrap_or("replay") {
                "off" => FixtureMode::Off,
                "record" => FixtureMode::Record,
                "replay" => FixtureMode::Replay,
                other => return Err(CliError::input(format!("unknown fixture_mode '{other}'"))),
            };
            cfg = cfg.with_fixtures(dir, mode);
        }
        Ok(cfg)
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let _ = tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_env_filter(tracing_subscriber::EnvFilter::try_new(&cli.log_level).unwrap_or_default())
        .try_init();
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.code
        }
    }
}

fn execute(cli: Cli) -> CliResult {
    let file = FileConfig::load(cli.config.as_deref())?;
    match cli.command {
        Command::Discover(a) => discover_cmd(a, &file),
        Command::Retrieve(a) => retrieve_cmd(a, &file),
        Command::Evaluate(a) => evaluate_cmd(a, &file),
        Command::Convert(a) => convert_cmd(a),
        Command::Serve(a) => serve_cmd(a, &file),
        Command::Synth(a) => synth_cmd(a),
        Command::Schedule(a) => schedule_cmd(a),
        Command::Speedup(a) => speedup_cmd(a),
    }
}

fn print_json(value: &impl Serialize, pretty: bool) -> CliResult {
    let text = if pretty {
        serde_json::to_string_pretty(value)
    } else {
        serde_json::to_string(value)
    }
    .map_err(CliError::write)?;
    emit(&(text + "\n"))
}

fn emit(text: &str) -> CliResult {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|()| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(CliError::write(e)),
        _ => Ok(()),
    }
}

fn write_json(path: &Path, value: &impl Serialize) -> CliResult {
    let text = serde_json::to_string_pretty(value).map_err(CliError::write)?;
    std::fs::write(path, text + "\n")
        .map_err(|e| CliError::write(format!("{}: {e}", path.display())))
}

fn ingest_error(e: IngestError) -> CliError {
    match e {
        IngestError::Locked(_) => CliError::write(e),
        other => CliError::input(other),
    }
}

fn save(library: &SkillLibrary, dir: &Path) -> CliResult {
    if let Err(e) = std::fs::create_dir_all(dir) {
        return Err(CliError::write(format!("{}: {e}", dir.display())));
    }
    save_library(library, dir).map_err(|e| match e {
        IngestError::Io { .. } | IngestError::Locked(_) => CliError::write(e),
        other => CliError::input(other),
    })
}

fn build_embedder(choice: EmbedderArg, file: &FileConfig) -> CliResult<Option<Box<dyn Embedder>>> {
    Ok(match choice {
        EmbedderArg::None => None,
        EmbedderArg::StubHash => Some(Box::new(HashEmbedder::default())),
        EmbedderArg::StubTrigram => Some(Box::new(TrigramEmbedder::default())),
        EmbedderArg::Remote => {
            let cfg = RemoteConfig::embed_from_env().map_err(CliError::input)?;
            Some(Box::new(RemoteEmbedder::new(file.remote(cfg)?)))
        }
    })
}

fn query_embedder(
    stub: bool,
    choice: Option<EmbedderArg>,
    file: &FileConfig,
) -> CliResult<Box<dyn Embedder>> {
    let default = if stub {
        EmbedderArg::StubHash
    } else {
        EmbedderArg::Remote
    };
    let choice = match choice.unwrap_or(default) {
        EmbedderArg::None => default,
        c => c,
    };
    Ok(build_embedder(choice, file)?.expect("embedder choice is not none"))
}

fn planner(stub: bool, script: Option<&Path>, file: &FileConfig) -> CliResult<Box<dyn ChatClient>> {
    if !stub {
        let cfg = RemoteConfig::chat_from_env().map_err(CliError::input)?;
        return Ok(Box::new(RemoteChat::new(file.remote(cfg)?)));
    }
    let mut chat = ScriptedChat::new();
    if let Some(path) = script {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        let script: BTreeMap<String, ScriptEntry> = serde_json::from_str(&text)
            .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        for (query, entry) in script {
            chat = match entry {
                ScriptEntry::Plan(plan) => chat.with_plan(query, &plan),
                ScriptEntry::Raw(raw) => chat.with_response(query, raw),
            };
        }
    }
    Ok(Box::new(chat))
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum ScriptEntry {
    Plan(Vec<String>),
    Raw(String),
}

fn load_catalog(path: Option<&Path>, library: &SkillLibrary) -> CliResult<ToolCatalog> {
    match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::input(format!("{}: {e}", p.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::input(format!("{}: {e}", p.display())))
        }
        None => Ok(ToolCatalog::from_actions(
            library.iter().flat_map(|s| s.net.alphabet()),
        )),
    }
}

#[derive(Debug, Serialize)]
struct DiscoveredSkill {
    skill_id: String,
    tree: String,
    num_cases: usize,
    num_variants: usize,
    replay_fitness: f64,
    alignment_fitness: f64,
}

fn discover_cmd(a: DiscoverArgs, file: &FileConfig) -> CliResult {
    let opts = LoadOptions {
        format: match a.format {
            LogFormatArg::Auto => LogFormat::Auto,
            LogFormatArg::Canonical => LogFormat::Canonical,
            LogFormatArg::Processtbench => LogFormat::ProcessTBench,
        },
        lenient: a.lenient || file.lenient.unwrap_or(false),
    };
    let report = load_event_logs(&a.log, &opts).map_err(ingest_error)?;
    if report.logs.is_empty() {
        return Err(CliError::input(format!(
            "{}: no usable process records",
            a.log.display()
        )));
    }
    let discovery = DiscoveryOptions {
        edge_frequency_threshold: a.freq_threshold.or(file.freq_threshold).unwrap_or(0.0),
    };
    let mut skills = Vec::with_capacity(report.logs.len());
    let mut summary = Vec::with_capacity(report.logs.len());
    for log in &report.logs {
        let skill = discover_skill_with(log, &discovery)
            .map_err(|e| CliError::input(format!("process '{}': {e}", log.process_id)))?;
        let mut replay = 0.0;
        let mut align = 0.0;
        for t in &log.traces {
            replay += token_replay(t, &skill.net)
                .map_err(CliError::input)?
                .fitness;
            align += optimal_alignment(t, &skill.net)
                .map_err(CliError::input)?
                .fitness;
        }
        let n = log.traces.len().max(1) as f64;
        summary.push(DiscoveredSkill {
            skill_id: skill.skill_id.clone(),
            tree: skill.tree.to_string(),
            num_cases: skill.provenance.num_cases,
            num_variants: skill.provenance.num_variants,
            replay_fitness: replay / n,
            alignment_fitness: align / n,
        });
        skills.push(skill);
    }
    let mut library = SkillLibrary::from_skills(skills).map_err(CliError::input)?;
    if let Some(choice) = a.embedder {
        if let Some(e) = build_embedder(choice, file)? {
            library = embed_library(&library, e.as_ref(), EmbeddingSource::Canonical)
                .map_err(CliError::retrieval)?;
        }
    }
    save(&library, &a.out)?;
    let replay: Vec<f64> = summary.iter().map(|s| s.replay_fitness).collect();
    let align: Vec<f64> = summary.iter().map(|s| s.alignment_fitness).collect();
    print_json(
        &json!({
            "library": a.out,
            "skills": summary,
            "log_stats": LogStats::of(&report.logs),
            "replay_fitness": Summary::of(&replay),
            "alignment_fitness": Summary::of(&align),
            "traces_in": report.traces_in,
            "traces_stored": report.traces_stored,
            "traces_skipped": report.traces_skipped,
            "skipped": report.skipped,
        }),
        a.pretty,
    )
}

fn parse_thought(names: &[String]) -> CliResult<Trace> {
    let actions = names
        .iter()
        .map(|n| Action::new(n.trim()))
        .collect::<Result<Vec<_>, _>>()
        .map_err(CliError::input)?;
    Ok(Trace::new("thought", actions))
}

fn ensure_embedded(library: SkillLibrary, embedder: &dyn Embedder) -> CliResult<SkillLibrary> {
    if is_embedded_with(&library, embedder.model_tag()) {
        Ok(library)
    } else {
        embed_library(&library, embedder, EmbeddingSource::Canonical).map_err(CliError::retrieval)
    }
}

fn retrieve_cmd(a: RetrieveArgs, file: &FileConfig) -> CliResult {
    let stub = a.stub || file.stub.unwrap_or(false);
    let library = load_library(&a.library).map_err(ingest_error)?;
    let k = a.k.or(file.k).unwrap_or(library.len());
    let k_first = a.k_first.or(file.k_first).unwrap_or(DEFAULT_K_FIRST);
    let thought = || -> CliResult<Trace> {
        if let Some(names) = &a.thought {
            return parse_thought(names);
        }
        let chat = planner(stub, a.script.as_deref(), file)?;
        let catalog = load_catalog(a.catalog.as_deref(), &library)?;
        generate_thought(&a.query, &catalog, chat.as_ref())
            .map(|t| t.trace)
            .map_err(CliError::gateway)
    };
    let list = match a.mode {
        ModeArg::Conform => retrieve_by_conformance(&thought()?, &library, k),
        ModeArg::Embed | ModeArg::Hybrid => {
            let embedder = query_embedder(stub, a.embedder, file)?;
            let q = embed(&a.query, embedder.as_ref()).map_err(CliError::gateway)?;
            let library = ensure_embedded(library.clone(), embedder.as_ref())?;
            if matches!(a.mode, ModeArg::Embed) {
                retrieve_by_embedding(&q, &library, k)
            } else {
                retrieve_hybrid(&q, &thought()?, &library, k_first, k.min(k_first))
            }
        }
    }
    .map_err(CliError::retrieval)?;
    print_json(&list, a.pretty)
}

fn evaluate_cmd(a: EvaluateArgs, file: &FileConfig) -> CliResult {
    let stub = a.stub || file.stub.unwrap_or(false);
    let library = load_library(&a.library).map_err(ingest_error)?;
    let text = std::fs::read_to_string(&a.queries)
        .map_err(|e| CliError::input(format!("{}: {e}", a.queries.display())))?;
    let queries: Vec<EvalQuery> = serde_json::from_str(&text)
        .map_err(|e| CliError::input(format!("{}: {e}", a.queries.display())))?;
    if queries.is_empty() {
        return Err(CliError::input(format!(
            "{}: no queries",
            a.queries.display()
        )));
    }

    let modes = a.modes.clone().or_else(|| file.modes.clone());
    let methods: Vec<MethodSpec> = match modes {
        Some(list) => list
            .iter()
            .map(|m| m.trim().parse())
            .collect::<Result<_, _>>()
            .map_err(CliError::input)?,
        None if stub => [
            "embed:stub-hash",
            "embed:stub-trigram",
            "conform",
            "hybrid@3",
        ]
        .iter()
        .map(|m| m.parse().expect("built-in method"))
        .collect(),
        None => ExperimentConfig::default().methods,
    };
    let config = ExperimentConfig {
        methods,
        k: a.k.or(file.k),
        embedding_source: EmbeddingSource::Canonical,
    };

    let hash = HashEmbedder::default();
    let trigram = TrigramEmbedder::default();
    let remote: Option<RemoteEmbedder> = if stub {
        None
    } else {
        let cfg = RemoteConfig::embed_from_env().map_err(CliError::input)?;
        Some(RemoteEmbedder::new(file.remote(cfg)?))
    };
    let mut embedders: Vec<(String, &dyn Embedder)> = Vec::new();
    if let Some(r) = &remote {
        embedders.push(("remote".into(), r));
    }
    embedders.push(("stub-hash".into(), &hash));
    embedders.push(("stub-trigram".into(), &trigram));

    let needs_planner = config.methods.iter().any(|m| m.needs_thought())
        && queries.iter().any(|q| q.thought.is_none());
    let chat = if needs_planner {
        Some(planner(stub, a.script.as_deref(), file)?)
    } else {
        None
    };
    let ctx = ExperimentContext {
        embedders,
        planner: chat.as_deref(),
        catalog: load_catalog(a.catalog.as_deref(), &library)?,
    };
    let report =
        run_retrieval_experiment(&library, &queries, &config, &ctx).map_err(CliError::input)?;
    let thresholds = a.sensitivity.clone().or_else(|| file.sensitivity.clone());
    let grid = thresholds.map(|t| sensitivity_analysis(&report, &t));
    match a.format {
        OutputFormat::Json => {
            print_json(&json!({ "report": report, "sensitivity": grid }), a.pretty)
        }
        OutputFormat::Text => {
            let mut text = report_table(&report);
            if let Some(g) = &grid {
                text.push('\n');
                text.push_str(&grid_table(g));
            }
            emit(&text)
        }
        OutputFormat::Csv => {
            let grid = grid.unwrap_or_else(|| sensitivity_analysis(&report, &[0.0]));
            emit(&grid_csv(&grid))
        }
    }
}

fn dag_options(format: DagFormatArg, reduce: bool) -> DagLoadOptions {
    DagLoadOptions {
        format: match format {
            DagFormatArg::Auto => DagFormat::Auto,
            DagFormatArg::Canonical => DagFormat::Canonical,
            DagFormatArg::Taskbench => DagFormat::TaskBench,
        },
        transitive_reduction: reduce,
    }
}

fn convert_cmd(a: ConvertArgs) -> CliResult {
    let dags =
        load_reference_dags(&a.dag, &dag_options(a.format, a.reduce)).map_err(ingest_error)?;
    let mut nets = BTreeMap::new();
    let (mut places, mut transitions) = (0usize, 0usize);
    for d in &dags {
        let net = dag_to_petri(&d.dag)
            .map_err(|e| CliError::input(format!("dag '{}': {e}", d.process_id)))?;
        places += net.places.len();
        transitions += net.transitions.len();
        nets.insert(d.process_id.clone(), net);
    }
    write_json(&a.out, &nets)?;
    print_json(
        &json!({ "dags": dags.len(), "places": places, "transitions": transitions, "out": a.out }),
        false,
    )
}

fn serve_cmd(a: ServeArgs, file: &FileConfig) -> CliResult {
    let stub = a.stub || file.stub.unwrap_or(false);
    let library = load_library(&a.library).map_err(ingest_error)?;
    let embedder: Arc<dyn Embedder> = query_embedder(stub, a.embedder, file)?.into();
    let chat: Arc<dyn ChatClient> = planner(stub, a.script.as_deref(), file)?.into();
    let catalog = match &a.catalog {
        Some(p) => Some(load_catalog(Some(p), &library)?),
        None => None,
    };
    let state = ServiceState::new(library, &a.library, chat, embedder)
        .map_err(CliError::retrieval)?
        .with_token(a.token.clone().or_else(|| file.token.clone()))
        .with_catalog(catalog);
    let bind = a
        .bind
        .clone()
        .or_else(|| file.bind.clone())
        .unwrap_or_else(|| "127.0.0.1".into());
    let port = a.port.or(file.port).unwrap_or(8080);
    let addr: SocketAddr = format!("{bind}:{port}").parse().map_err(CliError::input)?;
    let rt = tokio::runtime::Runtime::new().map_err(CliError::input)?;
    rt.block_on(service::serve(addr, Arc::new(state)))
        .map_err(CliError::input)
}

fn synth_cmd(a: SynthArgs) -> CliResult {
    let mut suite = if a.collision {
        collision_suite()
    } else {
        synthetic_suite(a.seed)
    };
    if let Some(targets) = &a.noise {
        suite = suite
            .with_noisy_thoughts(targets, a.seed)
            .map_err(CliError::input)?;
    }
    save(&suite.library, &a.out)?;
    write_json(&a.out.join("queries.json"), &suite.queries)?;
    write_json(&a.out.join("logs.json"), &suite.logs)?;
    write_json(&a.out.join("catalog.json"), &suite.catalog)?;
    print_json(
        &json!({ "skills": suite.library.len(), "queries": suite.queries.len(), "out": a.out }),
        false,
    )
}

fn schedule_cmd(a: ScheduleArgs) -> CliResult {
    let tree: ProcessTree = a.tree.parse().map_err(CliError::input)?;
    let net = tree_to_petri(&tree).map_err(CliError::input)?;
    let schedule = simulate_parallel_execution(&net, a.duration).map_err(CliError::input)?;
    print_json(
        &json!({
            "critical_path": critical_path_length(&tree),
            "sequential": sequential_length(&tree),
            "speedup": speedup(&tree).ok(),
            "schedule": schedule,
        }),
        false,
    )
}

fn speedup_cmd(a: SpeedupArgs) -> CliResult {
    let dags =
        load_reference_dags(&a.dags, &dag_options(a.format, a.reduce)).map_err(ingest_error)?;
    let models: Vec<_> = dags.into_iter().map(|d| d.dag).collect();
    let stats = dag_speedup_stats(&models).map_err(CliError::input)?;
    print_json(&stats, false)
}
