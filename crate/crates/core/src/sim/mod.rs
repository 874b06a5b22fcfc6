//! Simulation-based privacy checks by exhaustive enumeration.
//!
//! A protocol privately computes a functionality when, for every corruption
//! set `I`, the joint view of the parties in `I` can be produced by a
//! simulator that sees only `I`, the corrupted inputs and the corrupted
//! outputs. Here both the real and the simulated view distributions are
//! enumerated exactly over their finite randomness domains and compared by
//! total-variation distance; a pass requires distance exactly zero.

mod check;
mod enumerate;
mod simulator;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use num::{One, Signed, Zero};

use crate::codec::Encoder;
use crate::error::{Error, Result};
use crate::rational::Rational;
use crate::view::PartyView;

pub use check::{
    check_private_computation, check_reduction, field_grid, GridPoint, PrivacyReport,
    PrivacyRow, ReductionReport, Witness,
};
pub use enumerate::{
    enumerate_real_distribution, simulate_distribution, EnumOptions, Setup, DEFAULT_BUDGET,
};
pub use simulator::{
    CallData, CallSimulator, CompositeSimulator, IdealCallSimulator, IdealWorld,
    MaskedCallSimulator, SimulatorInput, Simulator, SumOnlyPlainSimulator,
};

/// Which form of the privacy definition is checked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Compare the corrupted parties' joint view alone.
    Deterministic,
    /// Compare the joint view paired with every party's output.
    General,
}

impl Mode {
    pub fn tag(self) -> &'static str {
        match self {
            Mode::Deterministic => "det",
            Mode::General => "general",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "det" | "deterministic" => Ok(Mode::Deterministic),
            "general" => Ok(Mode::General),
            other => Err(Error::Config(format!("unknown mode {other:?}"))),
        }
    }
}

/// A static set of semi-honest corrupted parties, `1 <= i <= m`, leaving at
/// least one party honest.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CorruptionSet {
    parties: BTreeSet<usize>,
    m: usize,
}

impl CorruptionSet {
    pub fn new(parties: impl IntoIterator<Item = usize>, m: usize) -> Result<Self> {
        let parties: BTreeSet<usize> = parties.into_iter().collect();
        if parties.is_empty() {
            return Err(Error::domain("corruption set must be non-empty"));
        }
        if let Some(&p) = parties.iter().find(|&&p| p == 0 || p > m) {
            return Err(Error::domain(format!("party {p} outside 1..={m}")));
        }
        if parties.len() >= m {
            return Err(Error::domain("at least one party must stay honest"));
        }
        Ok(CorruptionSet { parties, m })
    }

    pub fn server_only(m: usize) -> Result<Self> {
        Self::new([m], m)
    }

    pub fn all_clients(m: usize) -> Result<Self> {
        Self::new(1..m, m)
    }

    /// Parses `server`, `clients`, or a comma-separated list of party numbers
    /// in which `server` may also appear.
    pub fn parse(text: &str, m: usize) -> Result<Self> {
        let text = text.trim();
        if text == "clients" {
            return Self::all_clients(m);
        }
        let parties = text
            .split(',')
            .map(|t| match t.trim() {
                "server" => Ok(m),
                n => n
                    .parse::<usize>()
                    .map_err(|_| Error::Config(format!("bad party {n:?} in corruption set"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(parties, m)
    }

    pub fn parties(&self) -> impl Iterator<Item = usize> + '_ {
        self.parties.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.parties.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parties.is_empty()
    }

    pub fn arity(&self) -> usize {
        self.m
    }

    pub fn contains(&self, party: usize) -> bool {
        self.parties.contains(&party)
    }

    pub fn has_server(&self) -> bool {
        self.contains(self.m)
    }

    pub fn corrupted_clients(&self) -> impl Iterator<Item = usize> + '_ {
        self.parties.iter().copied().filter(move |&p| p < self.m)
    }

    pub fn honest_clients(&self) -> impl Iterator<Item = usize> + '_ {
        (1..self.m).filter(move |p| !self.parties.contains(p))
    }

    pub fn is_all_clients(&self) -> bool {
        !self.has_server() && self.len() == self.m - 1
    }
}

impl fmt::Display for CorruptionSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.parties.iter().map(|p| p.to_string()).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

/// `(I, View_{i_1}, ..., View_{i_t})` in ascending party order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointView {
    pub set: CorruptionSet,
    pub views: Vec<PartyView>,
}

impl JointView {
    pub fn encode(&self) -> String {
        let mut e = Encoder::new();
        self.encode_into(&mut e);
        e.finish()
    }

    pub(crate) fn encode_into(&self, e: &mut Encoder) {
        e.token("joint").num(self.set.len());
        for p in self.set.parties() {
            e.num(p);
        }
        for v in &self.views {
            e.token(&v.encode());
        }
    }
}

/// Restricts the full view vector to the corrupted parties.
pub fn project_views(all: &[PartyView], set: &CorruptionSet) -> Result<JointView> {
    if all.len() != set.arity() {
        return Err(Error::domain(format!(
            "{} views for a {}-party corruption set",
            all.len(),
            set.arity()
        )));
    }
    let views = set
        .parties()
        .map(|p| {
            all.get(p - 1)
                .cloned()
                .ok_or_else(|| Error::domain(format!("no view for party {p}")))
        })
        .collect::<Result<_>>()?;
    Ok(JointView {
        set: set.clone(),
        views,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Real,
    Simulated,
}

/// Exact distribution over canonically serialized joint views.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewDistribution {
    atoms: BTreeMap<String, Rational>,
    provenance: Provenance,
    domain_size: u128,
}

impl ViewDistribution {
    /// Uniform weight per enumerated point; `counts` must sum to `domain_size`.
    pub fn from_counts(
        counts: BTreeMap<String, u64>,
        domain_size: u128,
        provenance: Provenance,
    ) -> Result<Self> {
        let total: u128 = counts.values().map(|&c| c as u128).sum();
        if total != domain_size || domain_size == 0 {
            return Err(Error::domain(format!(
                "{total} enumerated points for a domain of {domain_size}"
            )));
        }
        let n = Rational::from_integer(domain_size.into());
        let atoms = counts
            .into_iter()
            .map(|(k, c)| (k, Rational::from_integer(c.into()) / &n))
            .collect();
        Ok(ViewDistribution {
            atoms,
            provenance,
            domain_size,
        })
    }

    pub fn point_mass(key: String, provenance: Provenance) -> Self {
        ViewDistribution {
            atoms: BTreeMap::from([(key, Rational::one())]),
            provenance,
            domain_size: 1,
        }
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn domain_size(&self) -> u128 {
        self.domain_size
    }

    pub fn support_size(&self) -> usize {
        self.atoms.len()
    }

    pub fn atoms(&self) -> &BTreeMap<String, Rational> {
        &self.atoms
    }

    pub fn probability(&self, key: &str) -> Rational {
        self.atoms.get(key).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn total_mass(&self) -> Rational {
        self.atoms.values().sum()
    }
}

/// `(1/2) Σ_v |p(v) − q(v)|` over the union of supports.
pub fn tv_distance(p: &ViewDistribution, q: &ViewDistribution) -> Rational {
    let keys: BTreeSet<&String> = p.atoms.keys().chain(q.atoms.keys()).collect();
    let sum: Rational = keys
        .into_iter()
        .map(|k| (p.probability(k) - q.probability(k)).abs())
        .sum();
    sum / Rational::from_integer(2.into())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;
    use crate::value::Value;
    use crate::view::EntryKind;

    fn dist(pairs: &[(&str, u64)]) -> ViewDistribution {
        let total: u64 = pairs.iter().map(|p| p.1).sum();
        ViewDistribution::from_counts(
            pairs.iter().map(|&(k, c)| (k.to_string(), c)).collect(),
            total as u128,
            Provenance::Real,
        )
        .unwrap()
    }

    #[test]
    fn corruption_sets() {
        assert!(CorruptionSet::new([], 3).is_err());
        assert!(CorruptionSet::new([1, 2, 3], 3).is_err());
        assert!(CorruptionSet::new([4], 3).is_err());
        let s = CorruptionSet::parse("server, 2", 3).unwrap();
        assert_eq!(s.parties().collect::<Vec<_>>(), vec![2, 3]);
        assert!(s.has_server());
        assert_eq!(s.honest_clients().collect::<Vec<_>>(), vec![1]);
        let c = CorruptionSet::parse("clients", 3).unwrap();
        assert!(c.is_all_clients());
        assert_eq!(c.to_string(), "{1,2}");
        assert!(CorruptionSet::parse("x", 3).is_err());
    }

    #[test]
    fn projections() {
        let views: Vec<_> = (1..=3)
            .map(|p| {
                let mut v = PartyView::new(p);
                v.append(0, EntryKind::Input, Value::List(vec![Value::Ack; p]));
                v
            })
            .collect();
        let server = project_views(&views, &CorruptionSet::server_only(3).unwrap()).unwrap();
        assert_eq!(server.views, vec![views[2].clone()]);
        let without_one =
            project_views(&views, &CorruptionSet::new([2, 3], 3).unwrap()).unwrap();
        assert_eq!(without_one.views, vec![views[1].clone(), views[2].clone()]);
        assert!(project_views(&views[..2], &CorruptionSet::server_only(3).unwrap()).is_err());
    }

    #[test]
    fn tv_basics() {
        let a = dist(&[("x", 1), ("y", 1)]);
        let b = dist(&[("z", 3)]);
        let c = dist(&[("x", 1), ("z", 3)]);
        assert_eq!(tv_distance(&a, &a), Rational::zero());
        assert_eq!(tv_distance(&a, &b), Rational::one());
        assert_eq!(tv_distance(&a, &c), ratio(3, 4));
        assert_eq!(tv_distance(&a, &c), tv_distance(&c, &a));
        assert!(tv_distance(&a, &b) <= tv_distance(&a, &c) + tv_distance(&c, &b));
    }

    #[test]
    fn counts_must_cover_domain() {
        assert!(ViewDistribution::from_counts(BTreeMap::from([("a".into(), 2)]), 3, Provenance::Real).is_err());
        let d = dist(&[("a", 2), ("b", 1)]);
        assert_eq!(d.total_mass(), Rational::one());
        assert_eq!(d.probability("a"), ratio(2, 3));
        assert_eq!(d.probability("c"), Rational::zero());
    }
}
