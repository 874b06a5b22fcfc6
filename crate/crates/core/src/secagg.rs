//! Aggregation by pairwise additive masking over `Z_q`.
//!
//! Every unordered client pair `{i, j}` with `i < j` shares a pad `p_ij`.
//! Client `i` adds the pads shared with higher-indexed clients and subtracts
//! those shared with lower-indexed ones, so all pads cancel in the sum.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::field::{FieldSpec, FieldVector};
use crate::functionality::RandomnessDomain;
use crate::value::Value;
use crate::view::{EntryKind, ViewDelta};

/// The pad shared by clients `low < high`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PairMask {
    pub low: usize,
    pub high: usize,
    pub pad: FieldVector,
}

impl PairMask {
    pub fn new(low: usize, high: usize, pad: FieldVector) -> Result<Self> {
        if low == 0 || low >= high {
            return Err(Error::domain(format!("invalid mask pair ({low}, {high})")));
        }
        Ok(PairMask { low, high, pad })
    }

    pub fn involves(&self, client: usize) -> bool {
        self.low == client || self.high == client
    }
}

/// Client pairs `(i, j)`, `1 <= i < j <= clients`, in lexicographic order.
pub fn client_pairs(clients: usize) -> Vec<(usize, usize)> {
    (1..=clients)
        .flat_map(|i| (i + 1..=clients).map(move |j| (i, j)))
        .collect()
}

/// One pad for every client pair; pairs involving the server never exist.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairwiseMaskSet {
    field: FieldSpec,
    clients: usize,
    pads: BTreeMap<(usize, usize), FieldVector>,
}

impl PairwiseMaskSet {
    pub fn new(field: FieldSpec, clients: usize, masks: Vec<PairMask>) -> Result<Self> {
        let mut pads = BTreeMap::new();
        for m in masks {
            if m.high > clients {
                return Err(Error::domain(format!(
                    "mask pair ({}, {}) outside {clients} clients",
                    m.low, m.high
                )));
            }
            if m.pad.spec() != field {
                return Err(Error::domain("mask modulus or dimension mismatch"));
            }
            if pads.insert((m.low, m.high), m.pad).is_some() {
                return Err(Error::domain(format!("duplicate mask for ({}, {})", m.low, m.high)));
            }
        }
        Ok(PairwiseMaskSet {
            field,
            clients,
            pads,
        })
    }

    pub fn zero(field: FieldSpec, clients: usize) -> Self {
        let pads = client_pairs(clients)
            .into_iter()
            .map(|p| (p, field.zero()))
            .collect();
        PairwiseMaskSet {
            field,
            clients,
            pads,
        }
    }

    /// Randomness domain of a complete mask set: `d` digits per pair.
    pub fn domain(field: FieldSpec, clients: usize) -> RandomnessDomain {
        RandomnessDomain::field_digits(field, client_pairs(clients).len())
    }

    /// The mask set at an enumerated point of [`PairwiseMaskSet::domain`].
    pub fn from_digits(field: FieldSpec, clients: usize, digits: &[u64]) -> Result<Self> {
        let pairs = client_pairs(clients);
        if digits.len() != pairs.len() * field.dim {
            return Err(Error::domain(format!(
                "{} mask digits for {} pairs of dimension {}",
                digits.len(),
                pairs.len(),
                field.dim
            )));
        }
        let masks = pairs
            .into_iter()
            .zip(digits.chunks(field.dim))
            .map(|((i, j), c)| PairMask::new(i, j, FieldVector::new(field.modulus, c.to_vec())?))
            .collect::<Result<_>>()?;
        Self::new(field, clients, masks)
    }

    /// Pads expanded from a seed: ChaCha8 seeded with `seed`, stream `round`,
    /// pairs in lexicographic order, components uniform in `Z_q`.
    ///
    /// Not covered by the exact-simulation guarantees, which enumerate pads.
    pub fn derive(seed: u64, round: u32, field: FieldSpec, clients: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(round as u64);
        let q = field.modulus.get();
        let pads = client_pairs(clients)
            .into_iter()
            .map(|p| {
                let c = (0..field.dim).map(|_| rng.random_range(0..q)).collect();
                (p, FieldVector::new(field.modulus, c).expect("reduced"))
            })
            .collect();
        PairwiseMaskSet {
            field,
            clients,
            pads,
        }
    }

    pub fn field(&self) -> FieldSpec {
        self.field
    }

    pub fn clients(&self) -> usize {
        self.clients
    }

    pub fn is_complete(&self) -> bool {
        client_pairs(self.clients)
            .iter()
            .all(|p| self.pads.contains_key(p))
    }

    pub fn pad(&self, i: usize, j: usize) -> Option<&FieldVector> {
        self.pads.get(&(i.min(j), i.max(j)))
    }

    /// The pads client `i` holds.
    pub fn restrict(&self, client: usize) -> Vec<PairMask> {
        self.pads
            .iter()
            .filter(|((i, j), _)| *i == client || *j == client)
            .map(|(&(low, high), pad)| PairMask {
                low,
                high,
                pad: pad.clone(),
            })
            .collect()
    }

    /// `Σ_{j>i} p_ij − Σ_{j<i} p_ji` for client `i`.
    pub fn signed_contribution(&self, client: usize) -> FieldVector {
        signed_sum(self.field, client, self.restrict(client).iter()).expect("uniform field")
    }
}

fn signed_sum<'a>(
    field: FieldSpec,
    client: usize,
    masks: impl Iterator<Item = &'a PairMask>,
) -> Result<FieldVector> {
    let mut acc = field.zero();
    for m in masks {
        if m.pad.spec() != field {
            return Err(Error::domain("mask modulus or dimension mismatch"));
        }
        acc = if m.low == client {
            acc.add(&m.pad)?
        } else if m.high == client {
            acc.sub(&m.pad)?
        } else {
            return Err(Error::domain(format!(
                "mask ({}, {}) is not held by client {client}",
                m.low, m.high
            )));
        };
    }
    Ok(acc)
}

/// `y_i = x_i + Σ_{j>i} p_ij − Σ_{j<i} p_ji mod q`.
pub fn mask_update(x: &FieldVector, masks: &[PairMask], client: usize) -> Result<FieldVector> {
    x.add(&signed_sum(x.spec(), client, masks.iter())?)
}

/// Server side: sums a complete set of masked updates.
pub fn unmask_aggregate(masked: &[FieldVector], expected: usize) -> Result<FieldVector> {
    if masked.len() != expected || expected == 0 {
        return Err(Error::IncompleteRound {
            expected,
            received: masked.len(),
        });
    }
    FieldVector::sum(masked)
}

/// One masked aggregation among `inputs.len()` clients and the server.
///
/// Returns the server's aggregate and one view delta per party (clients
/// first, server last). The server's delta holds only masked vectors.
pub fn secure_agg_round(
    inputs: &[FieldVector],
    masks: &PairwiseMaskSet,
) -> Result<(FieldVector, Vec<ViewDelta>)> {
    let clients = inputs.len();
    if masks.clients() != clients || !masks.is_complete() {
        return Err(Error::IncompleteRound {
            expected: client_pairs(clients).len(),
            received: masks.pads.len(),
        });
    }
    let server = clients + 1;
    let mut deltas = vec![ViewDelta::new(); clients + 1];
    let mut masked = Vec::with_capacity(clients);
    for (idx, x) in inputs.iter().enumerate() {
        let i = idx + 1;
        let held = masks.restrict(i);
        let y = mask_update(x, &held, i)?;
        deltas[idx]
            .push(EntryKind::Randomness, Value::Masks(held))
            .push(EntryKind::MessageOut { to: Some(server) }, Value::Field(y.clone()));
        masked.push(y);
    }
    for (idx, y) in masked.iter().enumerate() {
        deltas[clients].push(EntryKind::MessageIn { from: idx + 1 }, Value::Field(y.clone()));
    }
    let aggregate = unmask_aggregate(&masked, clients)?;
    Ok((aggregate, deltas))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Modulus;
    use proptest::prelude::*;

    fn spec(q: u64, d: usize) -> FieldSpec {
        FieldSpec::new(Modulus::new(q).unwrap(), d).unwrap()
    }

    fn fv(q: u64, c: &[u64]) -> FieldVector {
        FieldVector::new(Modulus::new(q).unwrap(), c.to_vec()).unwrap()
    }

    #[test]
    fn single_client_is_unmasked() {
        let masks = PairwiseMaskSet::zero(spec(5, 1), 1);
        assert!(masks.restrict(1).is_empty());
        assert_eq!(mask_update(&fv(5, &[3]), &[], 1).unwrap(), fv(5, &[3]));
    }

    #[test]
    fn two_clients_by_hand() {
        let masks =
            PairwiseMaskSet::new(spec(5, 1), 2, vec![PairMask::new(1, 2, fv(5, &[2])).unwrap()])
                .unwrap();
        let y1 = mask_update(&fv(5, &[3]), &masks.restrict(1), 1).unwrap();
        let y2 = mask_update(&fv(5, &[4]), &masks.restrict(2), 2).unwrap();
        assert_eq!(y1, fv(5, &[0]));
        assert_eq!(y2, fv(5, &[2]));
        assert_eq!(y1.add(&y2).unwrap(), fv(5, &[2]));
    }

    #[test]
    fn three_clients_every_mask_assignment() {
        let field = spec(5, 1);
        let domain = PairwiseMaskSet::domain(field, 3);
        assert_eq!(domain.size(), 125);
        let xs = [fv(5, &[1]), fv(5, &[4]), fv(5, &[2])];
        let expected = fv(5, &[2]);
        for point in domain.iter() {
            let masks = PairwiseMaskSet::from_digits(field, 3, &point).unwrap();
            let ys: Vec<_> = (1..=3)
                .map(|i| mask_update(&xs[i - 1], &masks.restrict(i), i).unwrap())
                .collect();
            assert_eq!(FieldVector::sum(&ys).unwrap(), expected);
        }
    }

    #[test]
    fn unmask_examples() {
        assert_eq!(
            unmask_aggregate(&[fv(5, &[0]), fv(5, &[2])], 2).unwrap(),
            fv(5, &[2])
        );
        let err = unmask_aggregate(&[fv(5, &[0])], 2).unwrap_err();
        assert_eq!(err, Error::IncompleteRound { expected: 2, received: 1 });
    }

    #[test]
    fn zero_inputs_aggregate_to_zero() {
        let field = spec(5, 2);
        for point in PairwiseMaskSet::domain(field, 2).iter() {
            let masks = PairwiseMaskSet::from_digits(field, 2, &point).unwrap();
            let (agg, _) = secure_agg_round(&[field.zero(), field.zero()], &masks).unwrap();
            assert_eq!(agg, field.zero());
        }
    }

    #[test]
    fn wrapped_sum_for_every_pad() {
        // Updates 13 and 9 in Z_17 are the centered -4 and -8; the sum wraps to 5.
        let field = spec(17, 1);
        for point in PairwiseMaskSet::domain(field, 2).iter() {
            let masks = PairwiseMaskSet::from_digits(field, 2, &point).unwrap();
            let (agg, _) = secure_agg_round(&[fv(17, &[13]), fv(17, &[9])], &masks).unwrap();
            assert_eq!(agg, fv(17, &[5]));
            assert_eq!(Modulus::new(17).unwrap().reduce(-12), 5);
        }
    }

    #[test]
    fn server_delta_holds_only_masked_values() {
        let field = spec(5, 1);
        let masks =
            PairwiseMaskSet::new(field, 2, vec![PairMask::new(1, 2, fv(5, &[1])).unwrap()])
                .unwrap();
        let xs = [fv(5, &[3]), fv(5, &[4])];
        let (agg, deltas) = secure_agg_round(&xs, &masks).unwrap();
        assert_eq!(agg, fv(5, &[2]));
        assert_eq!(deltas.len(), 3);
        let server: Vec<_> = deltas[2].entries.iter().map(|(_, v)| v.clone()).collect();
        assert_eq!(server, vec![Value::Field(fv(5, &[4])), Value::Field(fv(5, &[3]))]);
        assert!(matches!(deltas[0].entries[0], (EntryKind::Randomness, Value::Masks(_))));
    }

    #[test]
    fn zero_masks_reveal_inputs() {
        let field = spec(5, 1);
        let xs = [fv(5, &[3]), fv(5, &[4])];
        let (_, deltas) = secure_agg_round(&xs, &PairwiseMaskSet::zero(field, 2)).unwrap();
        let server: Vec<_> = deltas[2].entries.iter().map(|(_, v)| v.clone()).collect();
        assert_eq!(server, vec![Value::Field(xs[0].clone()), Value::Field(xs[1].clone())]);
    }

    #[test]
    fn incomplete_or_mismatched_masks() {
        let field = spec(5, 1);
        let partial = PairwiseMaskSet::new(field, 3, vec![]).unwrap();
        let err = secure_agg_round(&[fv(5, &[1]), fv(5, &[1]), fv(5, &[1])], &partial).unwrap_err();
        assert_eq!(err.name(), "IncompleteRoundError");
        let wrong = [PairMask::new(1, 2, fv(7, &[1])).unwrap()];
        assert_eq!(
            mask_update(&fv(5, &[1]), &wrong, 1).unwrap_err().name(),
            "DomainError"
        );
        let foreign = [PairMask::new(2, 3, fv(5, &[1])).unwrap()];
        assert!(mask_update(&fv(5, &[1]), &foreign, 1).is_err());
    }

    #[test]
    fn derived_masks_are_reproducible() {
        let field = spec(17, 2);
        let a = PairwiseMaskSet::derive(7, 0, field, 3);
        assert_eq!(a, PairwiseMaskSet::derive(7, 0, field, 3));
        assert!(a.is_complete());
        assert_ne!(a, PairwiseMaskSet::derive(7, 1, field, 3));
    }

    proptest! {
        #[test]
        fn masks_are_neutral(clients in 1usize..6, seed in any::<u64>(), round in 0u32..4) {
            let field = spec(13, 2);
            let masks = PairwiseMaskSet::derive(seed, round, field, clients);
            let total = FieldVector::sum(
                (1..=clients).map(|i| masks.signed_contribution(i)).collect::<Vec<_>>().iter()
            ).unwrap();
            prop_assert_eq!(total, field.zero());
        }
    }
}
