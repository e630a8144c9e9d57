//! `fedsel`: ingest corpora, build the directory index, query it, serve it
//! over HTTP, and evaluate selective against exhaustive search.

mod render;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fedsel_core::broker::query_terms;
use fedsel_core::directory::{
    read_log, summarize, ActivityLog, CoriParams, Directory, MissingTermPolicy, UtilityWeights,
};
use fedsel_core::eval::{evaluate, EvalQuery, Expected};
use fedsel_core::{
    sources_path, CollectionId, CollectionSet, CollectionSource, Engine, Error, QueryRequest,
    Session, UtilityConstraints,
};
use fedsel_http::{ApiConfig, AppState};

#[derive(Debug, Parser)]
#[command(
    name = "fedsel",
    version,
    about = "Federated search over topic collections"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate a corpus file and register it as a collection.
    Ingest(IngestArgs),
    /// Build the directory index from every registered collection.
    Configure(ConfigureArgs),
    /// Run one query against an index.
    Query(QueryArgs),
    /// Serve the HTTP API.
    Serve(ServeArgs),
    /// Compare selective routing with exhaustive search.
    Eval(EvalArgs),
    /// Summarize an activity log.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
struct SessionArg {
    /// Manifest of ingested collections.
    #[arg(long, env = "FEDSEL_SESSION", default_value = "fedsel.session")]
    session: PathBuf,
}

#[derive(Debug, Args)]
struct IngestArgs {
    #[arg(long)]
    collection: String,
    #[arg(long)]
    corpus: PathBuf,
    /// Estimated response latency in milliseconds.
    #[arg(long, default_value_t = 0)]
    latency: u64,
    #[arg(long, default_value_t = 0.0)]
    price: f64,
    #[command(flatten)]
    session: SessionArg,
}

#[derive(Debug, Args)]
struct ConfigureArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long = "d-t", default_value_t = 0.4)]
    d_t: f64,
    #[arg(long = "d-b", default_value_t = 0.4)]
    d_b: f64,
    #[arg(long, default_value = "default_belief")]
    missing_term_policy: MissingTermPolicy,
    #[command(flatten)]
    session: SessionArg,
}

#[derive(Debug, Args)]
struct IndexArg {
    #[arg(long, env = "FEDSEL_INDEX")]
    index: PathBuf,
}

#[derive(Debug, Clone, Args)]
struct ConstraintArgs {
    /// Number of collections to search.
    #[arg(long = "k", default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    k: u64,
    /// Maximum merged hits.
    #[arg(long = "n", default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    n: u64,
    /// Latency budget in milliseconds; 0 is unlimited.
    #[arg(long, default_value_t = 0)]
    ttl: u64,
    #[arg(long)]
    max_price: Option<f64>,
    #[arg(long, default_value_t = 0.6)]
    w_rel: f64,
    #[arg(long, default_value_t = 0.2)]
    w_time: f64,
    #[arg(long, default_value_t = 0.2)]
    w_price: f64,
}

impl ConstraintArgs {
    fn constraints(&self) -> UtilityConstraints {
        UtilityConstraints {
            max_results: self.n as usize,
            num_databases: self.k as usize,
            ttl_ms: self.ttl,
            max_price: self.max_price,
            weights: UtilityWeights {
                relevance: self.w_rel,
                time: self.w_time,
                price: self.w_price,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Records,
}

#[derive(Debug, Args)]
struct QueryArgs {
    #[command(flatten)]
    index: IndexArg,
    #[arg(long = "q")]
    q: String,
    #[command(flatten)]
    constraints: ConstraintArgs,
    /// Search only this collection.
    #[arg(long)]
    db: Option<String>,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
    /// Append the query to this activity log.
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ServeArgs {
    #[command(flatten)]
    index: IndexArg,
    #[arg(long, default_value = "127.0.0.1:8080")]
    listen: String,
    #[command(flatten)]
    constraints: ConstraintArgs,
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Baseline {
    Exhaustive,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[command(flatten)]
    index: IndexArg,
    /// One query per line; `#` starts a comment line.
    #[arg(long)]
    queries: PathBuf,
    #[arg(long, value_enum, default_value = "exhaustive")]
    baseline: Baseline,
    #[command(flatten)]
    constraints: ConstraintArgs,
    /// Write the JSON report here.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ReportArgs {
    #[arg(long)]
    log: PathBuf,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Io { .. } | Error::Parse { .. } | Error::InvalidArgument(_) => 2,
            Error::DuplicateDocument { .. } => 3,
            Error::InvalidState(_) => 4,
            Error::CorruptIndex(_) | Error::VersionMismatch { .. } => 5,
            Error::InvalidQuery(_) | Error::NotFound(_) | Error::NoEligibleDatabase => 6,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
        }
    }
}

type CliResult<T = ()> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("fedsel: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Ingest(args) => ingest(args),
        Command::Configure(args) => configure(args),
        Command::Query(args) => query(args),
        Command::Serve(args) => serve(args),
        Command::Eval(args) => eval(args),
        Command::Report(args) => report(args),
    }
}

fn ingest(args: IngestArgs) -> CliResult {
    let id = CollectionId::new(&args.collection)?;
    if !(args.price.is_finite() && args.price >= 0.0) {
        return Err(Failure::new(
            2,
            format!("price {} must be non-negative", args.price),
        ));
    }
    let mut set = CollectionSet::new();
    let count = set.load_corpus(&args.corpus, &id)?;
    let corpus = fs::canonicalize(&args.corpus).map_err(|e| Failure::new(2, e.to_string()))?;

    let mut session = Session::load(&args.session.session)?;
    session.upsert(CollectionSource {
        collection: id,
        corpus,
        est_latency_ms: args.latency,
        price: args.price,
    });
    session.save(&args.session.session)?;
    println!("{count} documents");
    Ok(())
}

fn configure(args: ConfigureArgs) -> CliResult {
    let params = CoriParams::new(args.d_t, args.d_b, args.missing_term_policy)?;
    let session = Session::load(&args.session.session)?;
    if session.is_empty() {
        return Err(Failure::new(
            4,
            format!(
                "no collections ingested in {}",
                args.session.session.display()
            ),
        ));
    }
    let engine = session.build_engine(params)?;
    let directory = engine.directory();
    directory.save(&args.out)?;
    session.save(&sources_path(&args.out))?;
    println!(
        "{} terms, {} collections",
        directory.matrix().term_count(),
        directory.matrix().size()
    );
    Ok(())
}

/// Loads the index and re-ingests the corpora listed beside it. Any problem
/// with the index file itself is reported as an invalid index.
fn open_engine(index: &Path) -> CliResult<(Session, Engine)> {
    let directory = Directory::load(index).map_err(|e| Failure::new(5, e.to_string()))?;
    let session = Session::load(&sources_path(index))?;
    let engine = Engine::from_index(directory, session.ingest()?)?;
    Ok((session, engine))
}

fn attach_log(engine: Engine, log: Option<&Path>) -> CliResult<Engine> {
    Ok(match log {
        Some(path) => engine.with_log(Arc::new(ActivityLog::with_file(path)?)),
        None => engine,
    })
}

fn query(args: QueryArgs) -> CliResult {
    let (_, engine) = open_engine(&args.index.index)?;
    let engine = attach_log(engine, args.log.as_deref())?;
    let mut request = QueryRequest::new(&args.q).with_constraints(args.constraints.constraints());
    if let Some(db) = &args.db {
        request = request.with_target(db.clone());
    }
    let out = match engine.handle_query(&request) {
        Ok(response) => match args.format {
            Format::Table => render::response_table(&response),
            Format::Records => render::response_records(&response),
        },
        Err(Error::NoEligibleDatabase) => {
            let freq = engine.directory().frequency_report(&query_terms(&args.q));
            match args.format {
                Format::Table => render::no_eligible_table(&args.q, &freq),
                Format::Records => render::no_eligible_records(&args.q, &freq),
            }
        }
        Err(e) => return Err(e.into()),
    };
    print!("{out}");
    Ok(())
}

fn serve(args: ServeArgs) -> CliResult {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .init();
    let mut config = ApiConfig::new(&args.listen, &args.index.index);
    config.default_constraints = args.constraints.constraints();
    config.validate()?;
    let log = match &args.log {
        Some(path) => Arc::new(ActivityLog::with_file(path)?),
        None => Arc::new(ActivityLog::new()),
    };

    // Without an index file yet, start unready and wait for a reindex.
    let state = if args.index.index.exists() {
        let (session, engine) = open_engine(&args.index.index)?;
        AppState::with_engine(config, session, engine.with_log(log))
    } else {
        let session = Session::load(&sources_path(&args.index.index))?;
        AppState::new(config, session, CoriParams::default()).with_log(log)
    };

    let runtime = tokio::runtime::Runtime::new().map_err(|e| Failure::new(2, e.to_string()))?;
    runtime
        .block_on(fedsel_http::serve(Arc::new(state)))
        .map_err(|e| Failure::new(2, format!("{}: {e}", args.listen)))
}

fn read_queries(path: &Path) -> CliResult<Vec<String>> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::new(2, format!("{}: {e}", path.display())))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(String::from)
        .collect())
}

fn eval(args: EvalArgs) -> CliResult {
    let queries = read_queries(&args.queries)?;
    if queries.is_empty() {
        return Err(Failure::new(
            6,
            format!("{} contains no queries", args.queries.display()),
        ));
    }
    let (_, engine) = open_engine(&args.index.index)?;
    let expected = match args.baseline {
        Baseline::Exhaustive => Expected::Baseline,
    };
    let queries: Vec<EvalQuery> = queries
        .into_iter()
        .map(|text| EvalQuery {
            text,
            expected: expected.clone(),
        })
        .collect();
    let report = evaluate(&engine, &queries, &args.constraints.constraints())?;
    if let Some(path) = &args.report {
        report.write(path)?;
    }
    print!("{}", report.render_table());
    Ok(())
}

fn report(args: ReportArgs) -> CliResult {
    let records = read_log(&args.log)?;
    let summary = summarize(&records);
    match args.format {
        Format::Table => print!("{}", render::summary_table(&summary)),
        Format::Records => {
            for q in &summary.queries {
                println!("{}", serde_json::to_string(q).expect("record serializes"));
            }
        }
    }
    Ok(())
}
