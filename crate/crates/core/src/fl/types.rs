use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::field::Modulus;
use crate::rational::Rational;

/// Identifier of a client in the candidate pool.
pub type ClientId = u64;

/// The training program shipped with every broadcast.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Program {
    /// One exact gradient of the squared loss of a linear model,
    /// `g = sum_k 2 (w . x_k - y_k) x_k`.
    #[default]
    LinearSquaredGradient,
}

impl Program {
    pub fn tag(self) -> &'static str {
        match self {
            Program::LinearSquaredGradient => "linsq-grad",
        }
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Program {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linsq-grad" => Ok(Program::LinearSquaredGradient),
            other => Err(Error::Config(format!("unknown training program {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Example {
    pub features: Vec<Rational>,
    pub label: Rational,
}

impl Example {
    pub fn new(features: Vec<Rational>, label: Rational) -> Self {
        Example { features, label }
    }
}

/// The private data `D_i` of one client.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ClientDataset {
    owner: ClientId,
    examples: Vec<Example>,
}

impl ClientDataset {
    /// All feature vectors must share one dimension, which must be positive.
    pub fn new(owner: ClientId, examples: Vec<Example>) -> Result<Self> {
        if let Some(first) = examples.first() {
            let d = first.features.len();
            if d == 0 {
                return Err(Error::domain("examples need at least one feature"));
            }
            if examples.iter().any(|e| e.features.len() != d) {
                return Err(Error::domain(format!(
                    "client {owner}: feature vectors of differing dimension"
                )));
            }
        }
        Ok(ClientDataset { owner, examples })
    }

    pub fn owner(&self) -> ClientId {
        self.owner
    }

    pub fn examples(&self) -> &[Example] {
        &self.examples
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    /// Feature dimension; `None` for an empty dataset.
    pub fn dim(&self) -> Option<usize> {
        self.examples.first().map(|e| e.features.len())
    }

    pub fn with_owner(&self, owner: ClientId) -> Self {
        ClientDataset {
            owner,
            examples: self.examples.clone(),
        }
    }
}

/// What every selected client downloads at the start of a round.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SysParam {
    pub model: Vec<Rational>,
    pub program: Program,
    pub round: u32,
    pub modulus: Modulus,
    pub scale: u32,
}

impl SysParam {
    pub fn new(
        model: Vec<Rational>,
        program: Program,
        round: u32,
        modulus: Modulus,
        scale: u32,
    ) -> Result<Self> {
        if model.is_empty() {
            return Err(Error::Config("model dimension must be at least 1".into()));
        }
        if scale == 0 {
            return Err(Error::Config("quantization scale must be at least 1".into()));
        }
        Ok(SysParam {
            model,
            program,
            round,
            modulus,
            scale,
        })
    }

    pub fn dim(&self) -> usize {
        self.model.len()
    }
}
