//! The `key = value` experiment configuration.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::PathBuf;

use fedmpc::fl::Program;
use fedmpc::rational::{format_rational, is_positive, parse_rational};
use fedmpc::sim::{CorruptionSet, Mode, Setup, DEFAULT_BUDGET};
use fedmpc::{Error, FieldSpec, FlConfig, Modulus, Rational, Result, Variant};
use num::Zero;

/// Which inputs the checkers enumerate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridSource {
    /// Every tuple of `Z_q^d` update vectors.
    Field,
    /// The single input tuple from the dataset file.
    Data,
}

impl GridSource {
    pub fn tag(self) -> &'static str {
        match self {
            GridSource::Field => "field",
            GridSource::Data => "data",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExperimentConfig {
    pub field_modulus: u64,
    pub dimension: usize,
    pub clients: usize,
    pub rounds: u32,
    pub learning_rate: Rational,
    pub scale: u32,
    pub variant: Variant,
    pub program: Program,
    pub seed: u64,
    pub mask_seed: u64,
    pub eligibility_min: usize,
    /// Raw corruption-set specifications, resolved against `clients + 1`.
    pub corruption_sets: Vec<String>,
    pub modes: Vec<Mode>,
    pub budget: u128,
    pub initial_model: Option<Vec<Rational>>,
    pub grid: GridSource,
    pub data: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Defaults for everything except the modulus.
    pub fn with_modulus(field_modulus: u64) -> Self {
        ExperimentConfig {
            field_modulus,
            dimension: 1,
            clients: 2,
            rounds: 1,
            learning_rate: Rational::new(1.into(), 8.into()),
            scale: 1,
            variant: Variant::Masked,
            program: Program::LinearSquaredGradient,
            seed: 0,
            mask_seed: 0,
            eligibility_min: 1,
            corruption_sets: vec!["server".into(), "clients".into()],
            modes: vec![Mode::Deterministic, Mode::General],
            budget: DEFAULT_BUDGET,
            initial_model: None,
            grid: GridSource::Field,
            data: None,
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut modulus = None;
        let mut seen = BTreeSet::new();
        let mut entries = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| Error::Parse {
                line,
                detail: format!("expected `key = value`, found {content:?}"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(Error::Parse {
                    line,
                    detail: format!("duplicate key {key:?}"),
                });
            }
            if key == "field_modulus" {
                modulus = Some(parse_num::<u64>(line, key, value)?);
            } else {
                entries.push((line, key.to_string(), value.to_string()));
            }
        }
        let modulus =
            modulus.ok_or_else(|| Error::Config("missing required key field_modulus".into()))?;
        let mut cfg = ExperimentConfig::with_modulus(modulus);
        for (line, key, value) in entries {
            cfg.set(line, &key, &value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, line: usize, key: &str, value: &str) -> Result<()> {
        let bad = |detail: String| Error::Parse { line, detail };
        match key {
            "dimension" => self.dimension = parse_num(line, key, value)?,
            "clients" => self.clients = parse_num(line, key, value)?,
            "rounds" => self.rounds = parse_num(line, key, value)?,
            "learning_rate" => {
                self.learning_rate =
                    parse_rational(value).map_err(|e| bad(format!("learning_rate: {e}")))?
            }
            "scale" => self.scale = parse_num(line, key, value)?,
            "variant" => {
                self.variant = value.parse().map_err(|e: Error| bad(e.to_string()))?
            }
            "program" => {
                self.program = value.parse().map_err(|e: Error| bad(e.to_string()))?
            }
            "seed" => self.seed = parse_num(line, key, value)?,
            "mask_seed" => self.mask_seed = parse_num(line, key, value)?,
            "eligibility_min" => self.eligibility_min = parse_num(line, key, value)?,
            "corruption_sets" => {
                self.corruption_sets = value
                    .split(';')
                    .map(|s| s.trim().to_string())
                    .filter(|s| !s.is_empty())
                    .collect();
                if self.corruption_sets.is_empty() {
                    return Err(bad("corruption_sets is empty".into()));
                }
            }
            "mode" => {
                self.modes = match value {
                    "det" => vec![Mode::Deterministic],
                    "general" => vec![Mode::General],
                    "both" => vec![Mode::Deterministic, Mode::General],
                    other => return Err(bad(format!("unknown mode {other:?}"))),
                }
            }
            "budget" => self.budget = parse_num(line, key, value)?,
            "initial_model" => {
                self.initial_model = Some(
                    value
                        .split_whitespace()
                        .map(parse_rational)
                        .collect::<Result<_>>()
                        .map_err(|e| bad(format!("initial_model: {e}")))?,
                )
            }
            "grid" => {
                self.grid = match value {
                    "field" => GridSource::Field,
                    "data" => GridSource::Data,
                    other => return Err(bad(format!("unknown grid {other:?}"))),
                }
            }
            "data" => self.data = Some(PathBuf::from(value)),
            other => return Err(bad(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        Modulus::new(self.field_modulus)?;
        if self.dimension == 0 {
            return Err(Error::Config("dimension must be at least 1".into()));
        }
        if self.clients == 0 {
            return Err(Error::Config("need at least one client".into()));
        }
        if self.rounds == 0 {
            return Err(Error::Config("at least one round required".into()));
        }
        if !is_positive(&self.learning_rate) {
            return Err(Error::Config("learning rate must be positive".into()));
        }
        if self.scale == 0 {
            return Err(Error::Config("quantization scale must be at least 1".into()));
        }
        if self.budget == 0 {
            return Err(Error::Config("budget must be at least 1".into()));
        }
        if let Some(w) = &self.initial_model {
            if w.len() != self.dimension {
                return Err(Error::Config(format!(
                    "initial model has dimension {}, expected {}",
                    w.len(),
                    self.dimension
                )));
            }
        }
        self.sets()?;
        Ok(())
    }

    pub fn parties(&self) -> usize {
        self.clients + 1
    }

    pub fn sets(&self) -> Result<Vec<CorruptionSet>> {
        self.corruption_sets
            .iter()
            .map(|s| {
                CorruptionSet::parse(s, self.parties())
                    .map_err(|e| Error::Config(format!("corruption set {s:?}: {e}")))
            })
            .collect()
    }

    pub fn initial_model(&self) -> Vec<Rational> {
        self.initial_model
            .clone()
            .unwrap_or_else(|| vec![Rational::zero(); self.dimension])
    }

    pub fn fl_config(&self) -> Result<FlConfig> {
        let config = FlConfig {
            field: FieldSpec::new(Modulus::new(self.field_modulus)?, self.dimension)?,
            clients: self.clients,
            scale: self.scale,
            learning_rate: self.learning_rate.clone(),
            program: self.program,
            eligibility_min: self.eligibility_min,
            selection_seed: self.seed,
            initial_model: self.initial_model(),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn setup(&self) -> Result<Setup> {
        Setup::new(self.fl_config()?, self.rounds)
    }

    /// Every key in a fixed order with normalized values. The data path is
    /// left out so that a transcript is bound to parameters, not file names.
    pub fn canonical(&self) -> String {
        let mut s = String::new();
        let modes = match self.modes.as_slice() {
            [Mode::Deterministic] => "det",
            [Mode::General] => "general",
            _ => "both",
        };
        let model: Vec<String> = self.initial_model().iter().map(format_rational).collect();
        let _ = writeln!(s, "field_modulus = {}", self.field_modulus);
        let _ = writeln!(s, "dimension = {}", self.dimension);
        let _ = writeln!(s, "clients = {}", self.clients);
        let _ = writeln!(s, "rounds = {}", self.rounds);
        let _ = writeln!(s, "learning_rate = {}", format_rational(&self.learning_rate));
        let _ = writeln!(s, "scale = {}", self.scale);
        let _ = writeln!(s, "variant = {}", self.variant);
        let _ = writeln!(s, "program = {}", self.program);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "mask_seed = {}", self.mask_seed);
        let _ = writeln!(s, "eligibility_min = {}", self.eligibility_min);
        let _ = writeln!(s, "corruption_sets = {}", self.corruption_sets.join("; "));
        let _ = writeln!(s, "mode = {modes}");
        let _ = writeln!(s, "budget = {}", self.budget);
        let _ = writeln!(s, "initial_model = {}", model.join(" "));
        let _ = writeln!(s, "grid = {}", self.grid.tag());
        s
    }

    /// Adler-32 of [`ExperimentConfig::canonical`], as 8 lowercase hex digits.
    pub fn digest(&self) -> String {
        format!("{:08x}", adler2::adler32_slice(self.canonical().as_bytes()))
    }
}

fn parse_num<T: std::str::FromStr>(line: usize, key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| Error::Parse {
        line,
        detail: format!("{key}: {value:?} is not a valid number"),
    })
}
