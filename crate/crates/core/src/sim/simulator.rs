//! Simulators for the federated protocol variants.
//!
//! Every variant shares the round skeleton (inputs, sysparam broadcast,
//! outputs) and differs only in how one aggregation call appears to the
//! corrupted parties. [`CompositeSimulator`] rebuilds the skeleton from the
//! model trajectory and delegates each call to a [`CallSimulator`].

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Mutex;

use num::BigInt;

use super::{CorruptionSet, JointView, Mode};
use crate::error::{Error, Result};
use crate::field::FieldVector;
use crate::fl::{client_update, fl_functionality, ClientDataset, SysParam, Variant};
use crate::functionality::{Delivery, RandomnessDomain};
use crate::rational::Rational;
use crate::secagg::{mask_update, PairMask, PairwiseMaskSet};
use crate::value::Value;
use crate::view::{EntryKind, PartyView, ViewDelta};

use super::enumerate::Setup;

/// The ideal world for one input tuple: every party's input and its
/// per-round outputs under the composed functionality.
#[derive(Debug, Clone, PartialEq)]
pub struct IdealWorld {
    pub inputs: Vec<Value>,
    pub outputs: Vec<Value>,
}

impl IdealWorld {
    pub fn evaluate(setup: &Setup, datasets: &[ClientDataset]) -> Result<Self> {
        let inputs = setup.config.ideal_inputs(datasets);
        let f = fl_functionality(
            &setup.config.round_params(),
            setup.rounds as usize,
            Delivery::PerRound,
        )?;
        let outputs = f.evaluate(&inputs, &[])?;
        Ok(IdealWorld { inputs, outputs })
    }
}

/// What a simulator may read, with every read recorded.
///
/// Reading an honest party's input or output fails with a hygiene error, so a
/// simulator that peeks cannot produce a distribution at all.
#[derive(Debug)]
pub struct SimulatorInput<'a> {
    set: &'a CorruptionSet,
    world: &'a IdealWorld,
    mode: Mode,
    accessed: Mutex<BTreeSet<usize>>,
}

impl<'a> SimulatorInput<'a> {
    pub fn new(set: &'a CorruptionSet, world: &'a IdealWorld, mode: Mode) -> Self {
        SimulatorInput {
            set,
            world,
            mode,
            accessed: Mutex::new(BTreeSet::new()),
        }
    }

    pub fn set(&self) -> &CorruptionSet {
        self.set
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    fn touch(&self, party: usize) -> Result<()> {
        self.accessed.lock().expect("audit lock").insert(party);
        if self.set.contains(party) {
            Ok(())
        } else {
            Err(Error::Hygiene(party))
        }
    }

    /// `x_i` for a corrupted `i`.
    pub fn input(&self, party: usize) -> Result<&'a Value> {
        self.touch(party)?;
        Ok(&self.world.inputs[party - 1])
    }

    /// `f_i(x̄)` for a corrupted `i`.
    pub fn output(&self, party: usize) -> Result<&'a Value> {
        self.touch(party)?;
        Ok(&self.world.outputs[party - 1])
    }

    /// `f(x̄)`, available only in the general case.
    pub fn full_output(&self) -> Option<&'a [Value]> {
        match self.mode {
            Mode::General => Some(&self.world.outputs),
            Mode::Deterministic => None,
        }
    }

    /// Every party whose input or output was requested.
    pub fn accessed(&self) -> BTreeSet<usize> {
        self.accessed.lock().expect("audit lock").clone()
    }
}

/// A generation rule from corrupted data plus randomness to a joint view.
pub trait Simulator: Sync {
    fn variant(&self) -> Variant;

    /// Simulator randomness for `set`; fails for unsupported sets.
    fn randomness(&self, setup: &Setup, set: &CorruptionSet, mode: Mode)
        -> Result<RandomnessDomain>;

    fn simulate(&self, setup: &Setup, input: &SimulatorInput<'_>, point: &[u64])
        -> Result<JointView>;
}

/// The corrupted parties' knowledge about one aggregation call.
#[derive(Debug, Clone)]
pub struct CallData {
    /// `x_c` for every corrupted client `c`.
    pub corrupted_updates: BTreeMap<usize, FieldVector>,
    /// The server's aggregate, present iff the server is corrupted.
    pub aggregate: Option<FieldVector>,
}

/// How one aggregation call looks to the corrupted parties.
pub trait CallSimulator: Sync {
    fn variant(&self) -> Variant;

    fn randomness(&self, setup: &Setup, set: &CorruptionSet) -> RandomnessDomain;

    /// View deltas keyed by corrupted party.
    fn simulate_call(
        &self,
        setup: &Setup,
        set: &CorruptionSet,
        call: &CallData,
        point: &[u64],
    ) -> Result<BTreeMap<usize, ViewDelta>>;
}

fn server_delta_in(
    set: &CorruptionSet,
    messages: Vec<FieldVector>,
    out: &mut BTreeMap<usize, ViewDelta>,
) {
    let mut delta = ViewDelta::new();
    for (idx, y) in messages.into_iter().enumerate() {
        delta.push(EntryKind::MessageIn { from: idx + 1 }, Value::Field(y));
    }
    out.insert(set.arity(), delta);
}

fn aggregate_of(call: &CallData) -> Result<&FieldVector> {
    call.aggregate
        .as_ref()
        .ok_or_else(|| Error::domain("server aggregate missing for a corrupted server"))
}

/// Oracle-aided aggregation: each corrupted party sees its own query and the
/// oracle's answer to it.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdealCallSimulator;

impl CallSimulator for IdealCallSimulator {
    fn variant(&self) -> Variant {
        Variant::OracleAided
    }

    fn randomness(&self, _: &Setup, _: &CorruptionSet) -> RandomnessDomain {
        RandomnessDomain::none()
    }

    fn simulate_call(
        &self,
        _: &Setup,
        set: &CorruptionSet,
        call: &CallData,
        _: &[u64],
    ) -> Result<BTreeMap<usize, ViewDelta>> {
        let mut out = BTreeMap::new();
        for (&c, x) in &call.corrupted_updates {
            let mut d = ViewDelta::new();
            d.push(EntryKind::OracleQuery, Value::Field(x.clone()))
                .push(EntryKind::OracleAnswer, Value::Ack);
            out.insert(c, d);
        }
        if set.has_server() {
            let mut d = ViewDelta::new();
            d.push(EntryKind::OracleQuery, Value::Bottom)
                .push(EntryKind::OracleAnswer, Value::Field(aggregate_of(call)?.clone()));
            out.insert(set.arity(), d);
        }
        Ok(out)
    }
}

/// Pairwise-masked aggregation.
///
/// Randomness: `d` digits for every pair that involves a corrupted client,
/// then, when the server is corrupted and `k >= 1` clients are honest,
/// `(k - 1) · d` digits for the first `k - 1` honest masked values. The last
/// honest value is fixed by the aggregate.
#[derive(Debug, Clone, Copy, Default)]
pub struct MaskedCallSimulator;

impl MaskedCallSimulator {
    fn corrupted_pairs(setup: &Setup, set: &CorruptionSet) -> Vec<(usize, usize)> {
        crate::secagg::client_pairs(setup.config.clients)
            .into_iter()
            .filter(|&(i, j)| set.contains(i) || set.contains(j))
            .collect()
    }

    fn free_values(set: &CorruptionSet) -> usize {
        if set.has_server() {
            set.honest_clients().count().saturating_sub(1)
        } else {
            0
        }
    }
}

impl CallSimulator for MaskedCallSimulator {
    fn variant(&self) -> Variant {
        Variant::Masked
    }

    fn randomness(&self, setup: &Setup, set: &CorruptionSet) -> RandomnessDomain {
        let field = setup.config.field;
        let count = Self::corrupted_pairs(setup, set).len() + Self::free_values(set);
        RandomnessDomain::field_digits(field, count)
    }

    fn simulate_call(
        &self,
        setup: &Setup,
        set: &CorruptionSet,
        call: &CallData,
        point: &[u64],
    ) -> Result<BTreeMap<usize, ViewDelta>> {
        let field = setup.config.field;
        let d = field.dim;
        let mut digits = point.chunks(d);
        let mut next = || -> Result<FieldVector> {
            let c = digits
                .next()
                .ok_or_else(|| Error::domain("simulator randomness exhausted"))?;
            FieldVector::new(field.modulus, c.to_vec())
        };
        let masks = Self::corrupted_pairs(setup, set)
            .into_iter()
            .map(|(i, j)| PairMask::new(i, j, next()?))
            .collect::<Result<Vec<_>>>()?;
        let masks = PairwiseMaskSet::new(field, setup.config.clients, masks)?;

        let mut out = BTreeMap::new();
        let server = set.arity();
        let mut corrupted_y = BTreeMap::new();
        for (&c, x) in &call.corrupted_updates {
            let held = masks.restrict(c);
            let y = mask_update(x, &held, c)?;
            let mut delta = ViewDelta::new();
            delta
                .push(EntryKind::Randomness, Value::Masks(held))
                .push(EntryKind::MessageOut { to: Some(server) }, Value::Field(y.clone()));
            out.insert(c, delta);
            corrupted_y.insert(c, y);
        }
        if set.has_server() {
            let honest: Vec<usize> = set.honest_clients().collect();
            let mut remainder = aggregate_of(call)?.clone();
            for y in corrupted_y.values() {
                remainder = remainder.sub(y)?;
            }
            let mut honest_y = BTreeMap::new();
            if let Some((&last, first)) = honest.split_last() {
                for &h in first {
                    let y = next()?;
                    remainder = remainder.sub(&y)?;
                    honest_y.insert(h, y);
                }
                honest_y.insert(last, remainder);
            }
            let messages = (1..server)
                .map(|i| {
                    corrupted_y
                        .get(&i)
                        .or_else(|| honest_y.get(&i))
                        .cloned()
                        .expect("every client is corrupted or honest")
                })
                .collect();
            server_delta_in(set, messages, &mut out);
        }
        Ok(out)
    }
}

/// Plain aggregation simulated from the sum alone.
///
/// With only `σ_H` to go on, the first honest client is credited with the
/// whole honest sum and the others with zero. Any sum-only rule fails on
/// some pair of preimages, which is the point of the negative control.
#[derive(Debug, Clone, Copy, Default)]
pub struct SumOnlyPlainSimulator;

impl CallSimulator for SumOnlyPlainSimulator {
    fn variant(&self) -> Variant {
        Variant::Plain
    }

    fn randomness(&self, _: &Setup, _: &CorruptionSet) -> RandomnessDomain {
        RandomnessDomain::none()
    }

    fn simulate_call(
        &self,
        setup: &Setup,
        set: &CorruptionSet,
        call: &CallData,
        _: &[u64],
    ) -> Result<BTreeMap<usize, ViewDelta>> {
        let server = set.arity();
        let mut out = BTreeMap::new();
        for (&c, x) in &call.corrupted_updates {
            let mut delta = ViewDelta::new();
            delta.push(EntryKind::MessageOut { to: Some(server) }, Value::Field(x.clone()));
            out.insert(c, delta);
        }
        if set.has_server() {
            let mut sigma = aggregate_of(call)?.clone();
            for x in call.corrupted_updates.values() {
                sigma = sigma.sub(x)?;
            }
            let first_honest = set.honest_clients().next();
            let messages = (1..server)
                .map(|i| match call.corrupted_updates.get(&i) {
                    Some(x) => x.clone(),
                    None if Some(i) == first_honest => sigma.clone(),
                    None => setup.config.field.zero(),
                })
                .collect();
            server_delta_in(set, messages, &mut out);
        }
        Ok(out)
    }
}

/// The shared round skeleton around a per-call simulator.
pub struct CompositeSimulator {
    call: Box<dyn CallSimulator>,
}

impl CompositeSimulator {
    pub fn new(call: Box<dyn CallSimulator>) -> Self {
        CompositeSimulator { call }
    }

    /// The shipped simulator for a variant; plain uses the sum-only rule.
    pub fn for_variant(variant: Variant) -> Self {
        match variant {
            Variant::Plain => Self::new(Box::new(SumOnlyPlainSimulator)),
            Variant::OracleAided => Self::new(Box::new(IdealCallSimulator)),
            Variant::Masked => Self::new(Box::new(MaskedCallSimulator)),
        }
    }

    fn check_supported(setup: &Setup, set: &CorruptionSet, mode: Mode) -> Result<()> {
        if set.arity() != setup.config.parties() {
            return Err(Error::domain(format!(
                "corruption set over {} parties, protocol has {}",
                set.arity(),
                setup.config.parties()
            )));
        }
        let partial_clients = !set.has_server() && !set.is_all_clients();
        if partial_clients && setup.rounds > 1 && mode == Mode::Deterministic {
            return Err(Error::UnsupportedCorruption(format!(
                "{set} beyond one round in the deterministic case"
            )));
        }
        Ok(())
    }

    /// Server models `w_0, ..., w_n` as far as the corrupted parties need them.
    fn trajectory(setup: &Setup, input: &SimulatorInput<'_>) -> Result<Vec<Vec<Rational>>> {
        let set = input.set();
        let server = set.arity();
        let w0 = setup.config.initial_model.clone();
        let per_round = if set.has_server() {
            Some(input.output(server)?.clone())
        } else if let Some(all) = input.full_output() {
            Some(all[server - 1].clone())
        } else if set.is_all_clients() {
            let datasets = set
                .corrupted_clients()
                .map(|c| {
                    input
                        .input(c)?
                        .as_dataset()
                        .cloned()
                        .ok_or_else(|| Error::domain("client input must be a dataset"))
                })
                .collect::<Result<Vec<_>>>()?;
            let world = IdealWorld::evaluate(setup, &datasets)?;
            Some(world.outputs[server - 1].clone())
        } else {
            None
        };
        let mut models = vec![w0];
        if let Some(Value::List(outs)) = per_round {
            for v in outs {
                models.push(
                    v.as_model()
                        .map(<[Rational]>::to_vec)
                        .ok_or_else(|| Error::domain("server output must be a model"))?,
                );
            }
        }
        Ok(models)
    }
}

impl Simulator for CompositeSimulator {
    fn variant(&self) -> Variant {
        self.call.variant()
    }

    fn randomness(
        &self,
        setup: &Setup,
        set: &CorruptionSet,
        mode: Mode,
    ) -> Result<RandomnessDomain> {
        Self::check_supported(setup, set, mode)?;
        let per_call = self.call.randomness(setup, set);
        let mut total = RandomnessDomain::none();
        for _ in 0..setup.rounds {
            total = total.product(&per_call);
        }
        Ok(total)
    }

    fn simulate(
        &self,
        setup: &Setup,
        input: &SimulatorInput<'_>,
        point: &[u64],
    ) -> Result<JointView> {
        let set = input.set();
        Self::check_supported(setup, set, input.mode())?;
        let cfg = &setup.config;
        let server = set.arity();
        let models = Self::trajectory(setup, input)?;

        let mut views: BTreeMap<usize, PartyView> =
            set.parties().map(|p| (p, PartyView::new(p))).collect();
        let mut datasets = BTreeMap::new();
        for c in set.corrupted_clients() {
            let x = input.input(c)?;
            let ds = x
                .as_dataset()
                .cloned()
                .ok_or_else(|| Error::domain("client input must be a dataset"))?;
            views.get_mut(&c).expect("corrupted").append(0, EntryKind::Input, x.clone());
            datasets.insert(c, ds);
        }
        if set.has_server() {
            let x = input.input(server)?.clone();
            views.get_mut(&server).expect("corrupted").append(0, EntryKind::Input, x);
        }

        let per_call = self.call.randomness(setup, set).digits();
        let mut chunks = point.chunks(per_call.max(1));
        for r in 0..setup.rounds {
            let model = models
                .get(r as usize)
                .ok_or_else(|| Error::domain(format!("model for round {r} unknown")))?;
            let sysparam = SysParam::new(model.clone(), cfg.program, r, cfg.field.modulus, cfg.scale)?;
            for (&p, view) in views.iter_mut() {
                let kind = if p == server {
                    EntryKind::MessageOut { to: None }
                } else {
                    EntryKind::SysParam
                };
                view.append(r, kind, Value::SysParam(sysparam.clone()));
            }

            let corrupted_updates = datasets
                .iter()
                .map(|(&c, ds)| Ok((c, client_update(ds, &sysparam)?)))
                .collect::<Result<BTreeMap<_, _>>>()?;
            let next = models.get(r as usize + 1);
            let aggregate = if set.has_server() {
                let next = next.ok_or_else(|| Error::domain("server output missing"))?;
                Some(recover_aggregate(setup, model, next)?)
            } else {
                None
            };
            let call = CallData {
                corrupted_updates,
                aggregate,
            };
            let digits = if per_call == 0 {
                &[][..]
            } else {
                chunks
                    .next()
                    .ok_or_else(|| Error::domain("simulator randomness exhausted"))?
            };
            for (p, delta) in self.call.simulate_call(setup, set, &call, digits)? {
                views.get_mut(&p).expect("corrupted").apply(r, delta);
            }

            for (&p, view) in views.iter_mut() {
                if p == server {
                    let next = next.ok_or_else(|| Error::domain("server output missing"))?;
                    view.append(r, EntryKind::Output, Value::Model(next.clone()));
                } else {
                    view.append(r, EntryKind::Output, Value::Ack);
                }
            }
        }
        Ok(JointView {
            set: set.clone(),
            views: views.into_values().collect(),
        })
    }
}

/// Inverts the model update: `c = (w_j − w_{j+1}) · s · clients / η`.
fn recover_aggregate(setup: &Setup, before: &[Rational], after: &[Rational]) -> Result<FieldVector> {
    let cfg = &setup.config;
    let factor = Rational::from_integer(BigInt::from(cfg.scale as u64 * cfg.clients as u64))
        / &cfg.learning_rate;
    let centered = before
        .iter()
        .zip(after)
        .map(|(a, b)| {
            let c = (a - b) * &factor;
            if c.is_integer() {
                Ok(c.to_integer())
            } else {
                Err(Error::domain("model step is not an integer aggregate"))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    FieldVector::encode_centered(cfg.field.modulus, &centered)
}
