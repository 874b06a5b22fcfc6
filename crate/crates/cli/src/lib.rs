//! Command-line front end for `fedmpc`: runs federated experiments, evaluates
//! the ideal functionality, and drives the privacy and reduction checkers.
//!
//! Every command reads a [`config::ExperimentConfig`] and writes plain-text
//! artifacts into an output directory. See `docs/formats.md` for the exact
//! byte layout of every file.

pub mod config;
pub mod dataset;
pub mod report;
pub mod transcript;

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use fedmpc::fl::{fl_functionality, select_clients};
use fedmpc::sim::{
    check_private_computation, check_reduction, field_grid, CompositeSimulator, EnumOptions,
    GridPoint, Mode,
};
use fedmpc::{run_fl, ClientDataset, Delivery, Error, MaskSource, Value, Variant};

use config::{ExperimentConfig, GridSource};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

impl CliError {
    pub fn name(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.name(),
            CliError::Io { .. } => "IoError",
        }
    }

    /// One exit code per error kind; 1 is reserved for a failed check.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io { .. } => 3,
            CliError::Core(e) => match e {
                Error::Config(_) | Error::Parse { .. } => 2,
                Error::Budget { .. } => 4,
                Error::InsufficientClients { .. } => 10,
                Error::Domain(_) => 11,
                Error::Arity { .. } => 12,
                Error::Overflow { .. } => 13,
                Error::Threading { .. } => 14,
                Error::Selection(_) => 15,
                Error::IncompleteCall { .. } => 16,
                Error::TapeViolation { .. } => 17,
                Error::IncompleteRound { .. } => 18,
                Error::UnsupportedCorruption(_) => 19,
                Error::Hygiene(_) => 20,
            },
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Exit code of a check that ran to completion but did not pass.
pub const EXIT_FAIL: u8 = 1;

/// Flags shared by every subcommand.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Options {
    pub config: PathBuf,
    pub data: Option<PathBuf>,
    pub out: PathBuf,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub mode: Option<Mode>,
}

impl Options {
    pub fn new(config: impl Into<PathBuf>, out: impl Into<PathBuf>) -> Self {
        Options {
            config: config.into(),
            data: None,
            out: out.into(),
            seed: None,
            workers: None,
            mode: None,
        }
    }
}

/// What a command produced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub passed: bool,
    pub files: Vec<PathBuf>,
    pub summary: String,
}

impl Outcome {
    pub fn exit_code(&self) -> u8 {
        if self.passed {
            0
        } else {
            EXIT_FAIL
        }
    }
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write(dir: &Path, name: &str, contents: &str) -> CliResult<PathBuf> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| CliError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io(dir))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(io(&path))?;
    Ok(path)
}

pub fn load_config(path: &Path) -> CliResult<ExperimentConfig> {
    Ok(ExperimentConfig::parse(&read(path)?)?)
}

struct Loaded {
    config: ExperimentConfig,
    data_path: Option<PathBuf>,
}

fn load(opts: &Options) -> CliResult<Loaded> {
    let mut config = load_config(&opts.config)?;
    if let Some(seed) = opts.seed {
        config.seed = seed;
    }
    if let Some(mode) = opts.mode {
        config.modes = vec![mode];
    }
    // A data path in the config is relative to the config file.
    let data_path = opts.data.clone().or_else(|| {
        config.data.as_ref().map(|p| match opts.config.parent() {
            Some(dir) if p.is_relative() => dir.join(p),
            _ => p.clone(),
        })
    });
    Ok(Loaded { config, data_path })
}

fn load_pool(loaded: &Loaded) -> CliResult<Vec<ClientDataset>> {
    let path = loaded
        .data_path
        .as_ref()
        .ok_or_else(|| Error::Config("no dataset given: pass --data or set `data`".into()))?;
    Ok(dataset::parse_datasets(&read(path)?)?)
}

fn enum_options(config: &ExperimentConfig, opts: &Options) -> EnumOptions {
    let mut e = EnumOptions {
        budget: config.budget,
        ..EnumOptions::default()
    };
    if let Some(w) = opts.workers {
        e.workers = w.max(1);
    }
    e
}

/// Runs the protocol; writes `transcript.txt`, `model.txt` and `run_report.txt`.
pub fn cmd_run(opts: &Options) -> CliResult<Outcome> {
    let loaded = load(opts)?;
    let config = &loaded.config;
    let pool = load_pool(&loaded)?;
    let fl = config.fl_config()?;
    let run = run_fl(
        &fl,
        &pool,
        config.variant,
        config.rounds,
        &MaskSource::Seeded(config.mask_seed),
    )
    .map_err(Error::from)?;
    let digest = config.digest();
    let files = vec![
        write(&opts.out, "transcript.txt", &transcript::write_transcript(&digest, &run.views))?,
        write(&opts.out, "model.txt", &transcript::write_model(&run.final_model))?,
        write(&opts.out, "run_report.txt", &report::run_report(&digest, config.variant, &run))?,
    ];
    Ok(Outcome {
        passed: true,
        files,
        summary: format!("final model {}", transcript::write_model(&run.final_model).trim_end().replace('\n', " ")),
    })
}

/// The selected clients' datasets in party order.
fn selected(config: &ExperimentConfig, pool: &[ClientDataset]) -> CliResult<Vec<ClientDataset>> {
    let mut ids = select_clients(pool, config.clients, config.eligibility_min, config.seed)?;
    ids.sort_unstable();
    Ok(ids
        .iter()
        .map(|id| {
            pool.iter()
                .find(|d| d.owner() == *id)
                .cloned()
                .expect("selected from pool")
        })
        .collect())
}

/// Evaluates the composed functionality; writes `ideal_model.txt` in the
/// model-file format so that it can be diffed against `model.txt`.
pub fn cmd_ideal(opts: &Options) -> CliResult<Outcome> {
    let loaded = load(opts)?;
    let config = &loaded.config;
    let pool = load_pool(&loaded)?;
    let fl = config.fl_config()?;
    let datasets = selected(config, &pool)?;
    let f = fl_functionality(&fl.round_params(), config.rounds as usize, Delivery::Final)?;
    let out = f.evaluate(&fl.ideal_inputs(&datasets), &[])?;
    let model = match out.last() {
        Some(Value::Model(w)) => w.clone(),
        _ => return Err(Error::Domain("server output is not a model".into()).into()),
    };
    let text = transcript::write_model(&model);
    let files = vec![write(&opts.out, "ideal_model.txt", &text)?];
    Ok(Outcome {
        passed: true,
        files,
        summary: format!("ideal model {}", text.trim_end().replace('\n', " ")),
    })
}

fn grid(loaded: &Loaded, e: &EnumOptions) -> CliResult<Vec<GridPoint>> {
    let config = &loaded.config;
    match config.grid {
        GridSource::Field => Ok(field_grid(&config.fl_config()?, e)?),
        GridSource::Data => {
            let pool = load_pool(loaded)?;
            Ok(vec![GridPoint::new("data", selected(config, &pool)?)])
        }
    }
}

/// Privacy check of the configured variant against its shipped simulator;
/// writes `privacy_report.txt` and `privacy_summary.json`.
pub fn cmd_check_privacy(opts: &Options) -> CliResult<Outcome> {
    let loaded = load(opts)?;
    let config = &loaded.config;
    let e = enum_options(config, opts);
    let setup = config.setup()?;
    let grid = grid(&loaded, &e)?;
    let sim = CompositeSimulator::for_variant(config.variant);
    let report = check_private_computation(
        config.variant,
        &sim,
        &setup,
        &grid,
        &config.sets()?,
        &config.modes,
        &e,
    )?;
    let digest = config.digest();
    let files = vec![
        write(&opts.out, "privacy_report.txt", &report::privacy_report(&digest, &report))?,
        write(&opts.out, "privacy_summary.json", &report::privacy_summary(&digest, &report))?,
    ];
    let mut summary = format!(
        "{} {} rows, verdict {}",
        config.variant,
        report.rows.len(),
        if report.passed() { "PASS" } else { "FAIL" }
    );
    if let Some(w) = report.witnesses.first() {
        summary += &format!("; witness {} {} vs {}", w.set, w.first, w.second);
    }
    Ok(Outcome {
        passed: report.passed(),
        files,
        summary,
    })
}

/// Substitutes the configured variant for the aggregation oracle; writes
/// `reduction_report.txt` and `reduction_summary.json`.
pub fn cmd_check_reduction(opts: &Options) -> CliResult<Outcome> {
    let loaded = load(opts)?;
    let config = &loaded.config;
    if config.variant == Variant::OracleAided {
        return Err(Error::Config("check-reduction needs variant plain or masked".into()).into());
    }
    let e = enum_options(config, opts);
    let setup = config.setup()?;
    let grid = grid(&loaded, &e)?;
    let report = check_reduction(&setup, config.variant, &grid, &config.sets()?, &config.modes, &e)?;
    let digest = config.digest();
    let files = vec![
        write(&opts.out, "reduction_report.txt", &report::reduction_report(&digest, &report))?,
        write(&opts.out, "reduction_summary.json", &report::reduction_summary(&digest, &report))?,
    ];
    let summary = format!(
        "{} rounds={} outputs {} verdict {}{}",
        config.variant,
        config.rounds,
        if report.outputs_equal() { "equal" } else { "differ" },
        if report.passed() { "PASS" } else { "FAIL" },
        if report.identity_composition() { " (identity composition)" } else { "" }
    );
    Ok(Outcome {
        passed: report.passed(),
        files,
        summary,
    })
}

/// Re-reads `transcript.txt` from the output directory, checks it against the
/// config digest, and summarizes each party's view.
pub fn cmd_report(opts: &Options) -> CliResult<Outcome> {
    let loaded = load(opts)?;
    let path = opts.out.join("transcript.txt");
    let t = transcript::read_transcript(&read(&path)?)?;
    let digest = loaded.config.digest();
    if t.digest != digest {
        return Err(Error::Config(format!(
            "transcript digest {} does not match config digest {digest}",
            t.digest
        ))
        .into());
    }
    let mut summary = format!("transcript {} parties, config {digest}", t.views.len());
    for v in &t.views {
        let mut kinds: Vec<(&str, usize)> = Vec::new();
        for e in v.entries() {
            match kinds.iter_mut().find(|(k, _)| *k == e.kind.tag()) {
                Some((_, n)) => *n += 1,
                None => kinds.push((e.kind.tag(), 1)),
            }
        }
        let parts: Vec<String> = kinds.iter().map(|(k, n)| format!("{k}={n}")).collect();
        summary += &format!("\nparty {} {}", v.party(), parts.join(" "));
    }
    Ok(Outcome {
        passed: true,
        files: vec![path],
        summary,
    })
}
