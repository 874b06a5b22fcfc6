//! Multi-round protocol driver.
//!
//! A single sequential scheduler steps through the phases of each round,
//! touching clients in ascending party order and then the server.

use std::fmt;
use std::str::FromStr;

use super::round::RoundParams;
use super::steps::{
    broadcast_sysparam, client_update, model_update, plain_agg_round, select_clients, Selection,
};
use super::types::{ClientDataset, Program, SysParam};
use crate::error::{Error, Result};
use crate::field::{FieldSpec, FieldVector};
use crate::functionality::{MAryFunctionality, SumRule};
use crate::oracle::{oracle_call, OracleBinding};
use crate::rational::Rational;
use crate::secagg::{secure_agg_round, PairwiseMaskSet};
use crate::value::Value;
use crate::view::{EntryKind, PartyView, ViewDelta};

/// How the aggregation step is realized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Clients send updates in the clear.
    Plain,
    /// Aggregation is an ideal sum-to-server oracle call.
    OracleAided,
    /// Pairwise additive masking.
    Masked,
}

impl Variant {
    pub fn tag(self) -> &'static str {
        match self {
            Variant::Plain => "plain",
            Variant::OracleAided => "oracle",
            Variant::Masked => "masked",
        }
    }

    pub const ALL: [Variant; 3] = [Variant::Plain, Variant::OracleAided, Variant::Masked];
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plain" => Ok(Variant::Plain),
            "oracle" => Ok(Variant::OracleAided),
            "masked" => Ok(Variant::Masked),
            other => Err(Error::Config(format!("unknown protocol variant {other:?}"))),
        }
    }
}

/// Public parameters of a federated run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlConfig {
    pub field: FieldSpec,
    /// `m - 1`.
    pub clients: usize,
    pub scale: u32,
    pub learning_rate: Rational,
    pub program: Program,
    pub eligibility_min: usize,
    pub selection_seed: u64,
    pub initial_model: Vec<Rational>,
}

impl FlConfig {
    pub fn round_params(&self) -> RoundParams {
        RoundParams {
            clients: self.clients,
            field: self.field,
            scale: self.scale,
            learning_rate: self.learning_rate.clone(),
            program: self.program,
        }
    }

    pub fn parties(&self) -> usize {
        self.clients + 1
    }

    pub fn validate(&self) -> Result<()> {
        self.round_params().validate()?;
        if self.initial_model.len() != self.field.dim {
            return Err(Error::Config(format!(
                "initial model has dimension {}, expected {}",
                self.initial_model.len(),
                self.field.dim
            )));
        }
        Ok(())
    }

    /// The ideal-world input vector: client datasets in party order, then the
    /// server's initial model.
    pub fn ideal_inputs(&self, datasets: &[ClientDataset]) -> Vec<Value> {
        datasets
            .iter()
            .cloned()
            .map(Value::Dataset)
            .chain(std::iter::once(Value::Model(self.initial_model.clone())))
            .collect()
    }
}

/// Where pairwise pads come from in the masked variant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MaskSource {
    /// Expanded per round from a seed.
    Seeded(u64),
    /// One explicit mask set per round.
    Explicit(Vec<PairwiseMaskSet>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Select,
    Broadcast,
    Aggregate,
    ModelUpdate,
    Done,
}

/// A failed run with every view as it stood at the failure.
#[derive(Debug, Clone, PartialEq)]
pub struct RunError {
    pub error: Error,
    pub views: Vec<PartyView>,
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.error.fmt(f)
    }
}

impl std::error::Error for RunError {}

impl From<RunError> for Error {
    fn from(e: RunError) -> Self {
        e.error
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlRun {
    pub final_model: Vec<Rational>,
    /// Server model after each round.
    pub round_models: Vec<Vec<Rational>>,
    pub selection: Selection,
    pub views: Vec<PartyView>,
}

impl FlRun {
    /// Each party's outputs across all rounds, as recorded in its view.
    pub fn outputs(&self) -> Vec<Value> {
        self.views
            .iter()
            .map(|v| Value::List(v.of_kind("output").map(|e| e.payload.clone()).collect()))
            .collect()
    }
}

/// Party state machines for one protocol execution.
#[derive(Debug, Clone)]
pub struct FlSession<'a> {
    config: FlConfig,
    variant: Variant,
    rounds: u32,
    masks: MaskSource,
    pool: &'a [ClientDataset],
    phase: Phase,
    round: u32,
    model: Vec<Rational>,
    round_models: Vec<Vec<Rational>>,
    selection: Option<Selection>,
    datasets: Vec<ClientDataset>,
    aggregate: Option<FieldVector>,
    oracle: Option<OracleBinding>,
    views: Vec<PartyView>,
}

impl<'a> FlSession<'a> {
    pub fn new(
        config: FlConfig,
        pool: &'a [ClientDataset],
        variant: Variant,
        rounds: u32,
        masks: MaskSource,
    ) -> Result<Self> {
        config.validate()?;
        if rounds == 0 {
            return Err(Error::Config("at least one round required".into()));
        }
        let oracle = match variant {
            Variant::OracleAided => {
                let rule = SumRule {
                    field: config.field,
                    accumulate: false,
                    padded: false,
                };
                Some(OracleBinding::new(
                    "fl-aggregation",
                    MAryFunctionality::sum_to_server(config.parties(), rule)?,
                ))
            }
            _ => None,
        };
        Ok(FlSession {
            model: config.initial_model.clone(),
            views: (1..=config.parties()).map(PartyView::new).collect(),
            config,
            variant,
            rounds,
            masks,
            pool,
            phase: Phase::Select,
            round: 0,
            round_models: Vec::new(),
            selection: None,
            datasets: Vec::new(),
            aggregate: None,
            oracle,
        })
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn round(&self) -> u32 {
        self.round
    }

    pub fn views(&self) -> &[PartyView] {
        &self.views
    }

    pub fn oracle(&self) -> Option<&OracleBinding> {
        self.oracle.as_ref()
    }

    /// Executes the current phase and moves to the next one.
    pub fn advance(&mut self) -> Result<Phase, RunError> {
        let step = match self.phase {
            Phase::Select => self.select().map(|_| Phase::Broadcast),
            Phase::Broadcast => self.broadcast().map(|_| Phase::Aggregate),
            Phase::Aggregate => self.aggregate().map(|_| Phase::ModelUpdate),
            Phase::ModelUpdate => self.update().map(|_| {
                self.round += 1;
                if self.round == self.rounds {
                    Phase::Done
                } else {
                    Phase::Select
                }
            }),
            Phase::Done => Ok(Phase::Done),
        };
        match step {
            Ok(next) => {
                self.phase = next;
                Ok(next)
            }
            Err(error) => Err(RunError {
                error,
                views: self.views.clone(),
            }),
        }
    }

    /// Runs all remaining phases.
    pub fn finish(mut self) -> Result<FlRun, RunError> {
        while self.phase != Phase::Done {
            self.advance()?;
        }
        Ok(FlRun {
            final_model: self.model,
            round_models: self.round_models,
            selection: self.selection.expect("selection happens in round 0"),
            views: self.views,
        })
    }

    fn server(&self) -> usize {
        self.config.parties()
    }

    fn select(&mut self) -> Result<()> {
        let mut chosen = select_clients(
            self.pool,
            self.config.clients,
            self.config.eligibility_min,
            self.config.selection_seed,
        )?;
        // Party numbers follow client identifiers, so that party inputs are
        // stable whatever order the shuffle produced.
        chosen.sort_unstable();
        let selection = Selection::new(chosen);
        match &self.selection {
            Some(prev) if *prev != selection => {
                return Err(Error::Config("client selection changed between rounds".into()))
            }
            Some(_) => return Ok(()),
            None => {}
        }
        self.datasets = selection
            .clients()
            .iter()
            .map(|id| {
                self.pool
                    .iter()
                    .find(|d| d.owner() == *id)
                    .cloned()
                    .expect("selected from pool")
            })
            .collect();
        for (p, ds) in self.datasets.iter().enumerate() {
            self.views[p].append(self.round, EntryKind::Input, Value::Dataset(ds.clone()));
        }
        let server = self.server();
        self.views[server - 1].append(
            self.round,
            EntryKind::Input,
            Value::Model(self.config.initial_model.clone()),
        );
        self.selection = Some(selection);
        Ok(())
    }

    fn broadcast(&mut self) -> Result<()> {
        let sysparam = SysParam::new(
            self.model.clone(),
            self.config.program,
            self.round,
            self.config.field.modulus,
            self.config.scale,
        )?;
        let selection = self.selection.as_ref().expect("selected");
        broadcast_sysparam(&sysparam, selection, selection.clients(), &mut self.views)
    }

    /// Clients run the training program on the sysparam in their own view.
    fn client_updates(&self) -> Result<Vec<FieldVector>> {
        self.datasets
            .iter()
            .enumerate()
            .map(|(p, ds)| {
                let sysparam = match self.views[p].of_kind("sysparam").last() {
                    Some(e) => match &e.payload {
                        Value::SysParam(sp) => sp,
                        _ => unreachable!("sysparam entries carry sysparams"),
                    },
                    None => return Err(Error::domain("client computed before broadcast")),
                };
                client_update(ds, sysparam)
            })
            .collect()
    }

    fn aggregate(&mut self) -> Result<()> {
        let updates = self.client_updates()?;
        let round = self.round;
        let aggregate = match self.variant {
            Variant::Plain => {
                let (agg, deltas) = plain_agg_round(&updates)?;
                self.apply(deltas);
                agg
            }
            Variant::Masked => {
                let masks = match &self.masks {
                    MaskSource::Seeded(seed) => PairwiseMaskSet::derive(
                        *seed,
                        round,
                        self.config.field,
                        self.config.clients,
                    ),
                    MaskSource::Explicit(sets) => sets
                        .get(round as usize)
                        .cloned()
                        .ok_or_else(|| Error::domain(format!("no mask set for round {round}")))?,
                };
                let (agg, deltas) = secure_agg_round(&updates, &masks)?;
                self.apply(deltas);
                agg
            }
            Variant::OracleAided => {
                let queries = updates
                    .into_iter()
                    .map(|u| Some(Value::Field(u)))
                    .chain(std::iter::once(Some(Value::Bottom)))
                    .collect();
                let binding = self.oracle.as_mut().expect("oracle variant has a binding");
                let answers = oracle_call(binding, queries, &[], round, &mut self.views)?;
                answers
                    .last()
                    .and_then(Value::as_field)
                    .cloned()
                    .ok_or_else(|| Error::domain("oracle gave the server no aggregate"))?
            }
        };
        self.aggregate = Some(aggregate);
        Ok(())
    }

    fn apply(&mut self, deltas: Vec<ViewDelta>) {
        for (view, delta) in self.views.iter_mut().zip(deltas) {
            view.apply(self.round, delta);
        }
    }

    fn update(&mut self) -> Result<()> {
        let aggregate = self.aggregate.take().expect("aggregated");
        self.model = model_update(
            &self.model,
            &aggregate,
            self.config.clients,
            &self.config.learning_rate,
            self.config.scale,
        )?;
        self.round_models.push(self.model.clone());
        let server = self.server();
        for p in 0..server - 1 {
            self.views[p].append(self.round, EntryKind::Output, Value::Ack);
        }
        self.views[server - 1].append(self.round, EntryKind::Output, Value::Model(self.model.clone()));
        Ok(())
    }
}

/// Executes `rounds` rounds of the federated protocol.
pub fn run_fl(
    config: &FlConfig,
    pool: &[ClientDataset],
    variant: Variant,
    rounds: u32,
    masks: &MaskSource,
) -> Result<FlRun, RunError> {
    let session = FlSession::new(config.clone(), pool, variant, rounds, masks.clone()).map_err(
        |error| RunError {
            error,
            views: Vec::new(),
        },
    )?;
    session.finish()
}
