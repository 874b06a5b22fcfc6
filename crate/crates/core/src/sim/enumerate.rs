//! Exact enumeration of real and simulated view distributions.

use std::collections::BTreeMap;
use std::num::NonZeroUsize;
use std::thread;

use super::simulator::{IdealWorld, Simulator, SimulatorInput};
use super::{project_views, CorruptionSet, JointView, Mode, Provenance, ViewDistribution};
use crate::codec::Encoder;
use crate::error::{Error, Result};
use crate::fl::{run_fl, ClientDataset, FlConfig, FlRun, MaskSource, Variant};
use crate::functionality::RandomnessDomain;
use crate::secagg::PairwiseMaskSet;
use crate::value::Value;

pub const DEFAULT_BUDGET: u128 = 10_000_000;

/// Public parameters shared by the real protocol and its simulators.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Setup {
    pub config: FlConfig,
    pub rounds: u32,
}

impl Setup {
    pub fn new(config: FlConfig, rounds: u32) -> Result<Self> {
        config.validate()?;
        if rounds == 0 {
            return Err(Error::Config("at least one round required".into()));
        }
        Ok(Setup { config, rounds })
    }

    /// Protocol randomness: one complete mask set per round for the masked
    /// variant, nothing otherwise.
    pub fn protocol_randomness(&self, variant: Variant) -> RandomnessDomain {
        match variant {
            Variant::Masked => {
                let per_round = PairwiseMaskSet::domain(self.config.field, self.config.clients);
                (0..self.rounds).fold(RandomnessDomain::none(), |acc, _| acc.product(&per_round))
            }
            Variant::Plain | Variant::OracleAided => RandomnessDomain::none(),
        }
    }

    /// The mask source for one point of [`Setup::protocol_randomness`].
    pub fn masks_at(&self, variant: Variant, point: &[u64]) -> Result<MaskSource> {
        if variant != Variant::Masked {
            return Ok(MaskSource::Explicit(Vec::new()));
        }
        let field = self.config.field;
        let clients = self.config.clients;
        let per_round = PairwiseMaskSet::domain(field, clients).digits();
        let sets = if per_round == 0 {
            (0..self.rounds)
                .map(|_| PairwiseMaskSet::zero(field, clients))
                .collect()
        } else {
            point
                .chunks(per_round)
                .map(|c| PairwiseMaskSet::from_digits(field, clients, c))
                .collect::<Result<_>>()?
        };
        Ok(MaskSource::Explicit(sets))
    }

    /// Runs the protocol on datasets given in party order.
    pub fn run(&self, variant: Variant, datasets: &[ClientDataset], point: &[u64]) -> Result<FlRun> {
        let pool = party_pool(datasets);
        Ok(run_fl(&self.config, &pool, variant, self.rounds, &self.masks_at(variant, point)?)?)
    }
}

/// Renumbers datasets `1..=k` so that selection keeps them in party order.
pub(crate) fn party_pool(datasets: &[ClientDataset]) -> Vec<ClientDataset> {
    datasets
        .iter()
        .enumerate()
        .map(|(i, d)| d.with_owner(i as u64 + 1))
        .collect()
}

/// Enumeration limits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnumOptions {
    pub budget: u128,
    pub workers: usize,
}

impl Default for EnumOptions {
    fn default() -> Self {
        EnumOptions {
            budget: DEFAULT_BUDGET,
            workers: thread::available_parallelism().map_or(1, NonZeroUsize::get),
        }
    }
}

impl EnumOptions {
    pub fn check(&self, required: u128) -> Result<()> {
        if required > self.budget {
            Err(Error::Budget {
                required,
                budget: self.budget,
            })
        } else {
            Ok(())
        }
    }
}

/// Counts `keys(point)[i]` into the `i`-th map over every point of `domain`,
/// split across workers. Partial counts are merged by addition, so the result
/// does not depend on the split.
pub(crate) fn count_points<F>(
    domain: &RandomnessDomain,
    opts: &EnumOptions,
    width: usize,
    keys: F,
) -> Result<Vec<BTreeMap<String, u64>>>
where
    F: Fn(&[u64]) -> Result<Vec<String>> + Sync,
{
    let size = domain.size();
    opts.check(size)?;
    let workers = (opts.workers.max(1) as u128).min(size).max(1);
    let chunk = size.div_ceil(workers);
    let partials: Vec<Result<Vec<BTreeMap<String, u64>>>> = thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let keys = &keys;
                scope.spawn(move || {
                    let mut counts = vec![BTreeMap::new(); width];
                    let end = ((w + 1) * chunk).min(size);
                    for index in w * chunk..end {
                        for (map, k) in counts.iter_mut().zip(keys(&domain.point(index))?) {
                            *map.entry(k).or_insert(0u64) += 1;
                        }
                    }
                    Ok(counts)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("enumeration worker panicked"))
            .collect()
    });
    let mut total = vec![BTreeMap::new(); width];
    for part in partials {
        for (map, counts) in total.iter_mut().zip(part?) {
            for (k, c) in counts {
                *map.entry(k).or_insert(0) += c;
            }
        }
    }
    Ok(total)
}

fn serialize(joint: &JointView, outputs: Option<&[Value]>) -> String {
    let mut e = Encoder::new();
    joint.encode_into(&mut e);
    if let Some(outputs) = outputs {
        e.token("out").token(&Value::List(outputs.to_vec()).encode());
    }
    e.finish()
}

/// The distribution of `View_I` (paired with every output in the general
/// case) over all protocol randomness.
pub fn enumerate_real_distribution(
    variant: Variant,
    setup: &Setup,
    datasets: &[ClientDataset],
    set: &CorruptionSet,
    mode: Mode,
    opts: &EnumOptions,
) -> Result<ViewDistribution> {
    let mut all = enumerate_real_many(variant, setup, datasets, &[(set.clone(), mode)], opts)?;
    Ok(all.remove(0))
}

/// One enumeration of the protocol, projected onto several `(I, mode)` pairs.
pub(crate) fn enumerate_real_many(
    variant: Variant,
    setup: &Setup,
    datasets: &[ClientDataset],
    targets: &[(CorruptionSet, Mode)],
    opts: &EnumOptions,
) -> Result<Vec<ViewDistribution>> {
    let domain = setup.protocol_randomness(variant);
    let counts = count_points(&domain, opts, targets.len(), |point| {
        let run = setup.run(variant, datasets, point)?;
        let outputs = run.outputs();
        targets
            .iter()
            .map(|(set, mode)| {
                let joint = project_views(&run.views, set)?;
                Ok(serialize(&joint, (*mode == Mode::General).then_some(&outputs[..])))
            })
            .collect()
    })?;
    counts
        .into_iter()
        .map(|c| ViewDistribution::from_counts(c, domain.size(), Provenance::Real))
        .collect()
}

/// The distribution of the simulator's output over its randomness.
///
/// In the general case the ideal outputs `f(x̄)` are appended, mirroring
/// the real side.
pub fn simulate_distribution(
    sim: &dyn Simulator,
    setup: &Setup,
    set: &CorruptionSet,
    world: &IdealWorld,
    mode: Mode,
    opts: &EnumOptions,
) -> Result<ViewDistribution> {
    let domain = sim.randomness(setup, set, mode)?;
    let input = SimulatorInput::new(set, world, mode);
    let mut counts = count_points(&domain, opts, 1, |point| {
        let joint = sim.simulate(setup, &input, point)?;
        let outputs = (mode == Mode::General).then_some(&world.outputs[..]);
        Ok(vec![serialize(&joint, outputs)])
    })?;
    if let Some(p) = input.accessed().into_iter().find(|&p| !set.contains(p)) {
        return Err(Error::Hygiene(p));
    }
    ViewDistribution::from_counts(counts.remove(0), domain.size(), Provenance::Simulated)
}
