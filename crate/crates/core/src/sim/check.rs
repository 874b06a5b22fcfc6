//! Privacy and reduction checks over an input grid.

use std::collections::BTreeMap;

use num::{BigInt, One, Zero};

use super::enumerate::{count_points, EnumOptions, Setup};
use super::simulator::{CompositeSimulator, IdealWorld, Simulator};
use super::{
    project_views, simulate_distribution, tv_distance, CorruptionSet, Mode, Provenance,
    ViewDistribution,
};
use crate::codec::Encoder;
use crate::error::{Error, Result};
use crate::fl::{ClientDataset, Example, FlConfig, Variant};
use crate::rational::Rational;
use crate::value::Value;

/// One input tuple: client datasets in party order plus a printable label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridPoint {
    pub label: String,
    pub datasets: Vec<ClientDataset>,
}

impl GridPoint {
    pub fn new(label: impl Into<String>, datasets: Vec<ClientDataset>) -> Self {
        GridPoint {
            label: label.into(),
            datasets,
        }
    }
}

/// Every tuple `(x_1, ..., x_k)` in `(Z_q^d)^k`, lexicographically.
///
/// Client `i` holds one example per coordinate, `(e_j, −c_j / 2s)` where `c`
/// is the centered form of `x_i`. At the zero model its quantized gradient is
/// exactly `x_i`.
pub fn field_grid(config: &FlConfig, opts: &EnumOptions) -> Result<Vec<GridPoint>> {
    let q = config.field.modulus;
    let d = config.field.dim;
    let digits = config.clients * d;
    let size = (q.get() as u128).checked_pow(digits as u32).unwrap_or(u128::MAX);
    opts.check(size)?;
    let domain = crate::functionality::RandomnessDomain::field_digits(config.field, config.clients);
    domain
        .iter()
        .map(|point| {
            let mut parts = Vec::with_capacity(config.clients);
            let mut datasets = Vec::with_capacity(config.clients);
            for (i, x) in point.chunks(d).enumerate() {
                parts.push(x.iter().map(u64::to_string).collect::<Vec<_>>().join(","));
                let examples = x
                    .iter()
                    .enumerate()
                    .map(|(j, &v)| {
                        let mut features = vec![Rational::zero(); d];
                        features[j] = Rational::one();
                        let label = Rational::new(
                            BigInt::from(-q.centered(v)),
                            BigInt::from(2 * config.scale as u64),
                        );
                        Example::new(features, label)
                    })
                    .collect();
                datasets.push(ClientDataset::new(i as u64 + 1, examples)?);
            }
            Ok(GridPoint::new(format!("x={}", parts.join(";")), datasets))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrivacyRow {
    pub inputs: String,
    pub set: CorruptionSet,
    pub mode: Mode,
    pub distance: Rational,
}

impl PrivacyRow {
    pub fn passes(&self) -> bool {
        self.distance.is_zero()
    }
}

/// Two grid points the simulator cannot tell apart whose real views differ.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub set: CorruptionSet,
    pub mode: Mode,
    pub first: String,
    pub second: String,
    pub distance: Rational,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrivacyReport {
    pub variant: Variant,
    pub rows: Vec<PrivacyRow>,
    pub witnesses: Vec<Witness>,
}

impl PrivacyReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(PrivacyRow::passes)
    }
}

struct GridRun {
    /// Real distributions per target, then the output distribution.
    real: Vec<ViewDistribution>,
    outputs: ViewDistribution,
    world: IdealWorld,
}

fn run_grid_point(
    variant: Variant,
    setup: &Setup,
    point: &GridPoint,
    targets: &[(CorruptionSet, Mode)],
    opts: &EnumOptions,
) -> Result<GridRun> {
    let world = IdealWorld::evaluate(setup, &point.datasets)?;
    let domain = setup.protocol_randomness(variant);
    let mut counts = count_points(&domain, opts, targets.len() + 1, |r| {
        let run = setup.run(variant, &point.datasets, r)?;
        let outputs = run.outputs();
        let mut keys = targets
            .iter()
            .map(|(set, mode)| {
                let joint = project_views(&run.views, set)?;
                let mut e = Encoder::new();
                joint.encode_into(&mut e);
                if *mode == Mode::General {
                    e.token("out").token(&Value::List(outputs.clone()).encode());
                }
                Ok(e.finish())
            })
            .collect::<Result<Vec<_>>>()?;
        keys.push(Value::List(outputs).encode());
        Ok(keys)
    })?;
    let outputs = ViewDistribution::from_counts(
        counts.pop().expect("output counts"),
        domain.size(),
        Provenance::Real,
    )?;
    let real = counts
        .into_iter()
        .map(|c| ViewDistribution::from_counts(c, domain.size(), Provenance::Real))
        .collect::<Result<_>>()?;
    Ok(GridRun {
        real,
        outputs,
        world,
    })
}

fn targets(sets: &[CorruptionSet], modes: &[Mode]) -> Vec<(CorruptionSet, Mode)> {
    modes
        .iter()
        .flat_map(|&mode| sets.iter().map(move |s| (s.clone(), mode)))
        .collect()
}

/// Everything the simulator is handed for `set` on one grid point.
fn simulator_knowledge(world: &IdealWorld, set: &CorruptionSet, mode: Mode) -> String {
    let mut e = Encoder::new();
    for p in set.parties() {
        e.token(&world.inputs[p - 1].encode())
            .token(&world.outputs[p - 1].encode());
    }
    if mode == Mode::General {
        e.token(&Value::List(world.outputs.clone()).encode());
    }
    e.finish()
}

fn privacy_over_runs(
    variant: Variant,
    sim: &dyn Simulator,
    setup: &Setup,
    grid: &[GridPoint],
    runs: &[GridRun],
    targets: &[(CorruptionSet, Mode)],
    opts: &EnumOptions,
) -> Result<PrivacyReport> {
    let mut rows = Vec::new();
    let mut witnesses = Vec::new();
    for (t, (set, mode)) in targets.iter().enumerate() {
        let mut failed = false;
        for (point, run) in grid.iter().zip(runs) {
            let simulated = simulate_distribution(sim, setup, set, &run.world, *mode, opts)?;
            let distance = tv_distance(&run.real[t], &simulated);
            failed |= !distance.is_zero();
            rows.push(PrivacyRow {
                inputs: point.label.clone(),
                set: set.clone(),
                mode: *mode,
                distance,
            });
        }
        if failed {
            witnesses.extend(find_witness(grid, runs, t, set, *mode));
        }
    }
    Ok(PrivacyReport {
        variant,
        rows,
        witnesses,
    })
}

/// The pair with the largest real-view distance among grid points that give
/// the simulator identical arguments; ties go to the earliest pair.
fn find_witness(
    grid: &[GridPoint],
    runs: &[GridRun],
    t: usize,
    set: &CorruptionSet,
    mode: Mode,
) -> Option<Witness> {
    let mut groups: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, run) in runs.iter().enumerate() {
        groups
            .entry(simulator_knowledge(&run.world, set, mode))
            .or_default()
            .push(i);
    }
    let mut best: Option<(Rational, usize, usize)> = None;
    let mut members: Vec<&Vec<usize>> = groups.values().collect();
    members.sort_by_key(|g| g[0]);
    for group in members {
        for (x, &a) in group.iter().enumerate() {
            for &b in &group[x + 1..] {
                let d = tv_distance(&runs[a].real[t], &runs[b].real[t]);
                if !d.is_zero() && best.as_ref().is_none_or(|(bd, _, _)| d > *bd) {
                    best = Some((d, a, b));
                }
            }
        }
    }
    best.map(|(distance, a, b)| Witness {
        set: set.clone(),
        mode,
        first: grid[a].label.clone(),
        second: grid[b].label.clone(),
        distance,
    })
}

fn check_grid_budget(variant: Variant, setup: &Setup, grid: &[GridPoint], opts: &EnumOptions) -> Result<()> {
    let per_point = setup.protocol_randomness(variant).size();
    opts.check(per_point.saturating_mul(grid.len() as u128))
}

/// For every grid point, corruption set and mode: PASS iff the real and
/// simulated distributions coincide exactly.
pub fn check_private_computation(
    variant: Variant,
    sim: &dyn Simulator,
    setup: &Setup,
    grid: &[GridPoint],
    sets: &[CorruptionSet],
    modes: &[Mode],
    opts: &EnumOptions,
) -> Result<PrivacyReport> {
    if sim.variant() != variant {
        return Err(Error::Config(format!(
            "simulator targets {}, protocol is {variant}",
            sim.variant()
        )));
    }
    check_grid_budget(variant, setup, grid, opts)?;
    let targets = targets(sets, modes);
    let runs = grid
        .iter()
        .map(|p| run_grid_point(variant, setup, p, &targets, opts))
        .collect::<Result<Vec<_>>>()?;
    privacy_over_runs(variant, sim, setup, grid, &runs, &targets, opts)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReductionReport {
    pub rounds: u32,
    pub realization: Variant,
    /// Grid labels where some realization run disagreed with the oracle run.
    pub output_mismatches: Vec<String>,
    pub oracle: PrivacyReport,
    pub substituted: PrivacyReport,
}

impl ReductionReport {
    pub fn outputs_equal(&self) -> bool {
        self.output_mismatches.is_empty()
    }

    /// With one round the composition is the identity around a single call.
    pub fn identity_composition(&self) -> bool {
        self.rounds == 1
    }

    pub fn passed(&self) -> bool {
        self.outputs_equal() && self.oracle.passed() && self.substituted.passed()
    }
}

/// Substitutes `realization` for the aggregation oracle and checks that
/// outputs agree on every randomness point and that both the oracle-aided and
/// the substituted protocol privately compute the composed functionality.
pub fn check_reduction(
    setup: &Setup,
    realization: Variant,
    grid: &[GridPoint],
    sets: &[CorruptionSet],
    modes: &[Mode],
    opts: &EnumOptions,
) -> Result<ReductionReport> {
    if realization == Variant::OracleAided {
        return Err(Error::Config("the realization must replace the oracle".into()));
    }
    check_grid_budget(realization, setup, grid, opts)?;
    let targets = targets(sets, modes);
    let oracle_runs = grid
        .iter()
        .map(|p| run_grid_point(Variant::OracleAided, setup, p, &targets, opts))
        .collect::<Result<Vec<_>>>()?;
    let real_runs = grid
        .iter()
        .map(|p| run_grid_point(realization, setup, p, &targets, opts))
        .collect::<Result<Vec<_>>>()?;
    let output_mismatches = grid
        .iter()
        .zip(oracle_runs.iter().zip(&real_runs))
        .filter(|(_, (o, r))| tv_distance(&o.outputs, &r.outputs) != Rational::zero() || r.outputs.support_size() != 1)
        .map(|(p, _)| p.label.clone())
        .collect();
    let oracle_sim = CompositeSimulator::for_variant(Variant::OracleAided);
    let oracle = privacy_over_runs(
        Variant::OracleAided,
        &oracle_sim,
        setup,
        grid,
        &oracle_runs,
        &targets,
        opts,
    )?;
    let sub_sim = CompositeSimulator::for_variant(realization);
    let substituted =
        privacy_over_runs(realization, &sub_sim, setup, grid, &real_runs, &targets, opts)?;
    Ok(ReductionReport {
        rounds: setup.rounds,
        realization,
        output_mismatches,
        oracle,
        substituted,
    })
}
