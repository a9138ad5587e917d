use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::{info, warn};
use serde_json::json;
use vizbench_core::compiler::{
    normalize_sql, parse_workload_jsonl, sql_equivalent, EquivError, Equivalence, GeneratorMode, Provenance,
    QueryBatch, SpecDigest, WorkloadGenerator,
};
use vizbench_core::graph::SpecLog;
use vizbench_core::report::{measurements_to_jsonl, PerformanceReport, DEFAULT_THRESHOLD_MS};
use vizbench_core::simulate::{parse_domains, schedule_offsets, simulate_interactions, SimError, Speed, UserModelConfig};
use vizbench_core::spec::{
    parse_database_spec, parse_interaction_log, parse_interface_spec, DatabaseSpec, InteractionEvent, InterfaceSpec,
    SpecError,
};
use vizbench_core::tableau::{parse_tableau_log, parse_value_map, AdapterConfig};
use vizbench_core::{CompileOptions, InterfaceGraph};
use vizbench_exec::{
    load_dataset, open_driver, run_workload, sample_domains, ConnectionRunner, Driver, DriverConfig, DriverError,
    DriverKind, ExecError, LoadError, RunOptions, DEFAULT_TICK_MS,
};

use crate::{EXIT_EXECUTION, EXIT_USAGE, EXIT_VALIDATION};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad input documents: specs, logs, configs.
    #[error("{0}")]
    Validation(String),
    /// Failures while doing the work: I/O, database, network.
    #[error("{0}")]
    Execution(String),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Execution(_) => EXIT_EXECUTION,
            CliError::Usage(_) => EXIT_USAGE,
        }
    }
}

impl From<SpecError> for CliError {
    fn from(e: SpecError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<DriverError> for CliError {
    fn from(e: DriverError) -> Self {
        CliError::Execution(e.to_string())
    }
}

impl From<LoadError> for CliError {
    fn from(e: LoadError) -> Self {
        match e {
            LoadError::UnknownTable(_) | LoadError::HeaderMismatch { .. } | LoadError::BadNumber { .. } => {
                CliError::Validation(e.to_string())
            }
            LoadError::Csv(_) | LoadError::Driver(_) => CliError::Execution(e.to_string()),
        }
    }
}

impl From<ExecError> for CliError {
    fn from(e: ExecError) -> Self {
        CliError::Execution(e.to_string())
    }
}

type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "vizbench", version, about = "Dashboard query-load benchmark")]
pub struct Cli {
    /// JSON file of flag defaults keyed by long flag name; flags given on the
    /// command line win.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the database spec and, optionally, an interface spec and log.
    Validate(ValidateArgs),
    /// Compile an interaction log into a workload without touching a database.
    Compile(CompileArgs),
    /// Generate a synthetic interaction log from a user model.
    Simulate(SimulateArgs),
    /// Convert a Tableau log into the benchmark's log format.
    ParseTableau(TableauArgs),
    /// Load a CSV file into a database table.
    Load(LoadArgs),
    /// Execute a workload and write measurements and a report.
    Run(RunArgs),
    /// Decide whether two SQL statements are equivalent.
    CheckEquiv(EquivArgs),
    /// Serve the playground endpoints: GET /spec, POST /log, POST /query.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct SpecArgs {
    #[arg(long, value_name = "FILE")]
    pub database: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub interface: PathBuf,
}

#[derive(Debug, Args, Default)]
pub struct DriverArgs {
    /// sqlite, duckdb or postgres.
    #[arg(long, env = "VIZBENCH_DRIVER")]
    pub driver: Option<String>,
    /// File path for sqlite and duckdb; connection string for postgres.
    #[arg(long, env = "VIZBENCH_DB")]
    pub db: Option<String>,
    #[arg(long, env = "VIZBENCH_POOL_SIZE")]
    pub pool_size: Option<usize>,
    /// Per-query timeout.
    #[arg(long, env = "VIZBENCH_TIMEOUT_MS")]
    pub timeout_ms: Option<u64>,
    /// JSON driver config; the flags above override its fields.
    #[arg(long, value_name = "FILE")]
    pub driver_config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long, value_name = "FILE")]
    pub database: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub interface: Option<PathBuf>,
    #[arg(long, value_name = "FILE", requires = "interface")]
    pub log: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompileArgs {
    #[command(flatten)]
    pub specs: SpecArgs,
    #[arg(long, value_name = "FILE")]
    pub log: PathBuf,
    /// Workload JSONL, one batch per line.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub provenance: Option<PathBuf>,
    #[arg(long, default_value_t = CompileOptions::default().detail_levels)]
    pub detail_levels: usize,
    /// Directory receiving one interface spec per structural change.
    #[arg(long, value_name = "DIR")]
    pub spec_log: Option<PathBuf>,
    /// Skip events that fail to compile instead of stopping.
    #[arg(long)]
    pub lenient: bool,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub specs: SpecArgs,
    /// Attribute domains, as written by `load --domains-out`.
    #[arg(long, value_name = "FILE")]
    pub domains: PathBuf,
    /// User model parameters; defaults apply to missing keys.
    #[arg(long, value_name = "FILE")]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of interactions.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TableauArgs {
    #[command(flatten)]
    pub specs: SpecArgs,
    /// Raw Tableau log, one JSON record per line.
    #[arg(long, value_name = "FILE")]
    pub raw: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub adapter: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub value_map: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// JSON list of skipped records and reasons.
    #[arg(long, value_name = "FILE")]
    pub skipped: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LoadArgs {
    #[arg(long, value_name = "FILE")]
    pub database: PathBuf,
    /// Defaults to the only table of the database spec.
    #[arg(long)]
    pub table: Option<String>,
    #[arg(long, value_name = "FILE")]
    pub csv: PathBuf,
    #[command(flatten)]
    pub driver: DriverArgs,
    /// Write the observed attribute domains here.
    #[arg(long, value_name = "FILE")]
    pub domains_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Precompiled workload. Otherwise give --database, --interface and --log.
    #[arg(long, value_name = "FILE", conflicts_with = "log")]
    pub workload: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub database: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub interface: Option<PathBuf>,
    #[arg(long, value_name = "FILE", requires_all = ["database", "interface"])]
    pub log: Option<PathBuf>,
    /// Load TABLE from CSV before running; repeatable.
    #[arg(long = "load", value_name = "TABLE=CSV", requires = "database")]
    pub loads: Vec<String>,
    #[command(flatten)]
    pub driver: DriverArgs,
    /// Replay speed factor, or `inf` to issue every batch at once.
    #[arg(long, default_value = "1")]
    pub speed: String,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD_MS)]
    pub threshold_ms: f64,
    #[arg(long, default_value_t = DEFAULT_TICK_MS)]
    pub tick_ms: u64,
    #[arg(long, default_value_t = CompileOptions::default().detail_levels)]
    pub detail_levels: usize,
    /// Report JSON.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// Raw measurements JSONL; defaults to the report path with
    /// `.measurements.jsonl`.
    #[arg(long, value_name = "FILE")]
    pub measurements: Option<PathBuf>,
    /// Plain-text report.
    #[arg(long, value_name = "FILE")]
    pub report_text: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EquivArgs {
    #[arg(long, value_name = "FILE")]
    pub a: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub b: PathBuf,
    /// Without a driver only the normal-form stage runs.
    #[command(flatten)]
    pub driver: DriverArgs,
    /// Verdict JSON; printed to standard output when absent.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[command(flatten)]
    pub specs: SpecArgs,
    /// Append-only interaction log receiving POST /log events.
    #[arg(long, value_name = "FILE")]
    pub log_file: PathBuf,
    #[command(flatten)]
    pub driver: DriverArgs,
    #[arg(long = "load", value_name = "TABLE=CSV")]
    pub loads: Vec<String>,
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub bind: String,
    #[arg(long, default_value_t = CompileOptions::default().detail_levels)]
    pub detail_levels: usize,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Validate(a) => validate(a),
        Command::Compile(a) => compile(a),
        Command::Simulate(a) => simulate(a),
        Command::ParseTableau(a) => parse_tableau(a),
        Command::Load(a) => load(a),
        Command::Run(a) => run_cmd(a),
        Command::CheckEquiv(a) => check_equiv(a),
        Command::Serve(a) => serve(a),
    }
}

pub(crate) fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::Execution(format!("reading {}: {e}", path.display())))
}

pub(crate) fn write(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::Execution(format!("creating {}: {e}", dir.display())))?;
    }
    fs::write(path, contents).map_err(|e| CliError::Execution(format!("writing {}: {e}", path.display())))?;
    info!("wrote {}", path.display());
    Ok(())
}

fn with_path(path: &Path) -> impl Fn(SpecError) -> CliError + '_ {
    move |e| CliError::Validation(format!("{}: {e}", path.display()))
}

/// Database and interface specs plus digests of their bytes.
pub(crate) struct Specs {
    pub db: DatabaseSpec,
    pub iface: InterfaceSpec,
    pub digests: Vec<SpecDigest>,
}

fn digest(path: &Path, text: &str) -> SpecDigest {
    let name = path.file_name().map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned());
    SpecDigest::of(name, text.as_bytes())
}

pub(crate) fn read_database(path: &Path) -> Result<(DatabaseSpec, String)> {
    let text = read(path)?;
    let db = parse_database_spec(&text).map_err(with_path(path))?;
    Ok((db, text))
}

pub(crate) fn read_specs(database: &Path, interface: &Path) -> Result<Specs> {
    let (db, db_text) = read_database(database)?;
    let iface_text = read(interface)?;
    let iface = parse_interface_spec(&iface_text, &db).map_err(with_path(interface))?;
    Ok(Specs {
        db,
        iface,
        digests: vec![digest(database, &db_text), digest(interface, &iface_text)],
    })
}

fn read_log(path: &Path, iface: &InterfaceSpec) -> Result<(Vec<InteractionEvent>, SpecDigest)> {
    let text = read(path)?;
    let events = parse_interaction_log(&text, iface).map_err(with_path(path))?;
    Ok((events, digest(path, &text)))
}

impl DriverArgs {
    pub(crate) fn is_set(&self) -> bool {
        self.driver.is_some() || self.driver_config.is_some()
    }

    pub(crate) fn resolve(&self) -> Result<DriverConfig> {
        let mut cfg = match &self.driver_config {
            Some(path) => DriverConfig::from_json(&read(path)?)
                .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?,
            None => {
                let kind = self.driver.as_deref().ok_or_else(|| CliError::Usage("--driver is required".into()))?;
                let kind: DriverKind = kind.parse().map_err(|e: vizbench_exec::ConfigError| CliError::Usage(e.to_string()))?;
                let db = self.db.clone().ok_or_else(|| CliError::Usage("--db is required".into()))?;
                DriverConfig::new(kind, db)
            }
        };
        if let Some(d) = &self.driver {
            cfg.driver = d.parse().map_err(|e: vizbench_exec::ConfigError| CliError::Usage(e.to_string()))?;
        }
        if let Some(db) = &self.db {
            cfg.db = db.clone();
        }
        if let Some(p) = self.pool_size {
            cfg.pool_size = p;
        }
        if let Some(t) = self.timeout_ms {
            cfg.timeout_ms = Some(t);
        }
        cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(cfg)
    }

    pub(crate) fn open(&self) -> Result<(DriverConfig, Box<dyn Driver>)> {
        let cfg = self.resolve()?;
        let driver = open_driver(&cfg)?;
        Ok((cfg, driver))
    }
}

/// `TABLE=CSV` pairs loaded through one connection of `driver`.
pub(crate) fn load_pairs(driver: &dyn Driver, db: &DatabaseSpec, pairs: &[String]) -> Result<()> {
    if pairs.is_empty() {
        return Ok(());
    }
    let mut conn = driver.connect()?;
    for pair in pairs {
        let (table, csv) = pair
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--load expects TABLE=CSV, got `{pair}`")))?;
        let file = fs::File::open(csv).map_err(|e| CliError::Execution(format!("opening {csv}: {e}")))?;
        let n = load_dataset(conn.as_mut(), db, table, file)?;
        info!("loaded {n} rows into {table}");
    }
    conn.close()?;
    Ok(())
}

fn validate(a: ValidateArgs) -> Result<()> {
    let (db, _) = read_database(&a.database)?;
    info!("{}: {} table(s)", a.database.display(), db.tables.len());
    let Some(iface_path) = &a.interface else { return Ok(()) };
    let iface = parse_interface_spec(&read(iface_path)?, &db).map_err(with_path(iface_path))?;
    info!(
        "{}: {} visualization(s), {} widget(s), {} relationship(s)",
        iface_path.display(),
        iface.visualizations.len(),
        iface.widgets.len(),
        iface.relationships.len()
    );
    if let Some(log) = &a.log {
        let (events, _) = read_log(log, &iface)?;
        info!("{}: {} event(s)", log.display(), events.len());
    }
    Ok(())
}

fn generator(detail_levels: usize, spec_log: Option<&Path>, lenient: bool, provenance: Provenance) -> Result<WorkloadGenerator> {
    let mut g = WorkloadGenerator::new(CompileOptions { detail_levels });
    g.lenient = lenient;
    g.provenance = provenance;
    if let Some(dir) = spec_log {
        g.spec_log = Some(SpecLog::new(dir).map_err(|e| CliError::Execution(format!("spec log {}: {e}", dir.display())))?);
    }
    Ok(g)
}

fn compile_batches(
    specs: &Specs,
    events: &[InteractionEvent],
    g: &WorkloadGenerator,
) -> Result<vizbench_core::compiler::Workload> {
    let mut graph = InterfaceGraph::build(&specs.iface);
    let outcome = g.run(&mut graph, events).map_err(|e| CliError::Validation(e.to_string()))?;
    for e in &outcome.errors {
        warn!("skipped {e}");
    }
    Ok(outcome.workload)
}

fn compile(a: CompileArgs) -> Result<()> {
    let mut specs = read_specs(&a.specs.database, &a.specs.interface)?;
    let (events, log_digest) = read_log(&a.log, &specs.iface)?;
    specs.digests.push(log_digest);
    let provenance = Provenance {
        specs: specs.digests.clone(),
        mode: GeneratorMode::Replay,
        seed: None,
    };
    let g = generator(a.detail_levels, a.spec_log.as_deref(), a.lenient, provenance)?;
    let w = compile_batches(&specs, &events, &g)?;
    info!("{} event(s) compiled to {} batch(es), {} query(ies)", events.len(), w.batches.len(), w.query_count());
    write(&a.out, &w.to_jsonl())?;
    if let Some(p) = &a.provenance {
        write(p, &w.provenance_json())?;
    }
    Ok(())
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let specs = read_specs(&a.specs.database, &a.specs.interface)?;
    let domains = parse_domains(&read(&a.domains)?)?;
    let mut model = match &a.model {
        Some(p) => UserModelConfig::from_json(&read(p)?)?,
        None => UserModelConfig::default(),
    };
    if let Some(seed) = a.seed {
        model.seed = seed;
    }
    if let Some(n) = a.n {
        model.n_interactions = n;
    }
    let events = simulate_interactions(&specs.iface, &domains, &model)?;
    info!("simulated {} interaction(s) with seed {}", events.len(), model.seed);
    write(&a.out, &vizbench_core::spec::write_interaction_log(&events))
}

fn parse_tableau(a: TableauArgs) -> Result<()> {
    let specs = read_specs(&a.specs.database, &a.specs.interface)?;
    let adapter = match &a.adapter {
        Some(p) => AdapterConfig::from_json(&read(p)?).map_err(with_path(p))?,
        None => AdapterConfig::default(),
    };
    let value_map = match &a.value_map {
        Some(p) => Some(parse_value_map(&read(p)?).map_err(with_path(p))?),
        None => None,
    };
    let conv = parse_tableau_log(&read(&a.raw)?, &specs.iface, &adapter, value_map.as_ref());
    let resolved = conv.resolved().count();
    info!(
        "{} event(s), {} awaiting a value, {} skipped",
        resolved,
        conv.events.len() - resolved,
        conv.skipped.len()
    );
    for s in &conv.skipped {
        warn!("line {}: {}", s.line, s.reason);
    }
    write(&a.out, &conv.to_jsonl())?;
    if let Some(p) = &a.skipped {
        write(p, &conv.skipped_json())?;
    }
    Ok(())
}

fn load(a: LoadArgs) -> Result<()> {
    let (db, _) = read_database(&a.database)?;
    let table = match &a.table {
        Some(t) => t.clone(),
        None if db.tables.len() == 1 => db.tables.keys().next().unwrap().clone(),
        None => return Err(CliError::Usage("--table is required when the database has several tables".into())),
    };
    let (_, driver) = a.driver.open()?;
    let mut conn = driver.connect()?;
    let file = fs::File::open(&a.csv).map_err(|e| CliError::Execution(format!("opening {}: {e}", a.csv.display())))?;
    let n = load_dataset(conn.as_mut(), &db, &table, file)?;
    info!("loaded {n} rows into {table}");
    if let Some(out) = &a.domains_out {
        let domains = sample_domains(conn.as_mut(), &db)?;
        write(out, &vizbench_core::simulate::domains_to_json(&domains))?;
    }
    conn.close()?;
    Ok(())
}

fn measurements_path(report: &Path) -> PathBuf {
    let stem = report.file_stem().map_or_else(|| "report".into(), |s| s.to_string_lossy().into_owned());
    report.with_file_name(format!("{stem}.measurements.jsonl"))
}

fn run_cmd(a: RunArgs) -> Result<()> {
    let speed = Speed::parse(&a.speed).map_err(CliError::Usage)?;
    let batches: Vec<QueryBatch> = match (&a.workload, &a.log) {
        (Some(w), _) => parse_workload_jsonl(&read(w)?).map_err(|e| CliError::Validation(format!("{}: {e}", w.display())))?,
        (None, Some(log)) => {
            let specs = read_specs(a.database.as_ref().unwrap(), a.interface.as_ref().unwrap())?;
            let (events, _) = read_log(log, &specs.iface)?;
            let g = generator(a.detail_levels, None, false, Provenance::default())?;
            compile_batches(&specs, &events, &g)?.batches
        }
        (None, None) => return Err(CliError::Usage("give --workload or --log with --database and --interface".into())),
    };
    let (cfg, driver) = a.driver.open()?;
    if !a.loads.is_empty() {
        let (db, _) = read_database(a.database.as_ref().unwrap())?;
        load_pairs(driver.as_ref(), &db, &a.loads)?;
    }
    let ts: Vec<i64> = batches.iter().map(|b| b.timestamp).collect();
    let offsets = schedule_offsets(&ts, speed);
    let opts = RunOptions {
        pool_size: cfg.pool_size,
        tick_ms: a.tick_ms,
    };
    info!("running {} batch(es) on {} with {} connection(s)", batches.len(), cfg.driver, cfg.pool_size);
    let ms = run_workload(&batches, &offsets, driver.as_ref(), opts)?;
    let report = PerformanceReport::build(cfg.driver.as_str(), &ms, a.threshold_ms);
    info!("{} ok, {} error(s), {} timeout(s)", report.ok, report.errors, report.timeouts);
    write(&a.out, &report.to_json())?;
    write(&a.measurements.clone().unwrap_or_else(|| measurements_path(&a.out)), &measurements_to_jsonl(&ms))?;
    if let Some(p) = &a.report_text {
        write(p, &report.to_text())?;
    }
    Ok(())
}

fn check_equiv(a: EquivArgs) -> Result<()> {
    let (sa, sb) = (read(&a.a)?, read(&a.b)?);
    let dialect = |e: EquivError| match e {
        EquivError::Execution(_) => CliError::Execution(e.to_string()),
        EquivError::Dialect { .. } => CliError::Validation(e.to_string()),
    };
    let na = normalize_sql(&sa).map_err(|e| CliError::Validation(format!("{}: {e}", a.a.display())))?;
    let nb = normalize_sql(&sb).map_err(|e| CliError::Validation(format!("{}: {e}", a.b.display())))?;
    let verdict = if a.driver.is_set() {
        let (_, driver) = a.driver.open()?;
        let mut conn = driver.connect()?;
        let v = sql_equivalent(&sa, &sb, Some(&mut ConnectionRunner(conn.as_mut()))).map_err(dialect)?;
        conn.close()?;
        v
    } else {
        sql_equivalent(&sa, &sb, None).map_err(dialect)?
    };
    let stage = if na == nb || verdict == Equivalence::Unknown { "normal_form" } else { "execution" };
    info!("verdict: {verdict}");
    let out = serde_json::to_string_pretty(&json!({
        "verdict": verdict,
        "decided_by": stage,
        "normalized_a": na,
        "normalized_b": nb,
    }))
    .expect("verdict serializes");
    match &a.out {
        Some(p) => write(p, &out),
        None => {
            println!("{out}");
            Ok(())
        }
    }
}

fn serve(a: ServeArgs) -> Result<()> {
    let specs = read_specs(&a.specs.database, &a.specs.interface)?;
    let driver = if a.driver.is_set() {
        let (_, driver) = a.driver.open()?;
        load_pairs(driver.as_ref(), &specs.db, &a.loads)?;
        Some(driver)
    } else {
        None
    };
    let state = crate::serve::ServerState::new(specs.iface, &a.log_file, driver, CompileOptions { detail_levels: a.detail_levels })
        .map_err(CliError::Execution)?;
    let listener = std::net::TcpListener::bind(&a.bind).map_err(|e| CliError::Execution(format!("binding {}: {e}", a.bind)))?;
    info!("listening on http://{}", listener.local_addr().map_err(|e| CliError::Execution(e.to_string()))?);
    crate::serve::serve_blocking(listener, state).map_err(CliError::Execution)
}
