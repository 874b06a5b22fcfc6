//! The five steps of one federated round, as pure operations plus the view
//! bookkeeping each one implies.

use num::{BigInt, Signed, Zero};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::types::{ClientDataset, ClientId, Program, SysParam};
use crate::error::{Error, Result};
use crate::field::FieldVector;
use crate::rational::Rational;
use crate::value::Value;
use crate::view::{EntryKind, PartyView, ViewDelta};

/// The clients taking part in a round. Client at position `k` is party `k + 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Selection {
    clients: Vec<ClientId>,
}

impl Selection {
    pub fn new(clients: Vec<ClientId>) -> Self {
        Selection { clients }
    }

    pub fn clients(&self) -> &[ClientId] {
        &self.clients
    }

    pub fn len(&self) -> usize {
        self.clients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clients.is_empty()
    }

    /// 1-based party number of a selected client.
    pub fn party_of(&self, id: ClientId) -> Option<usize> {
        self.clients.iter().position(|&c| c == id).map(|p| p + 1)
    }

    pub fn server(&self) -> usize {
        self.clients.len() + 1
    }
}

/// Picks `count` distinct eligible clients.
///
/// The eligible sublist (non-empty datasets with at least `min_size`
/// examples) is sorted by identifier, shuffled with Fisher–Yates driven by
/// ChaCha8 seeded from `seed`, and the first `count` entries are returned in
/// shuffled order.
pub fn select_clients(
    pool: &[ClientDataset],
    count: usize,
    min_size: usize,
    seed: u64,
) -> Result<Vec<ClientId>> {
    if count == 0 {
        return Err(Error::Config("client count must be at least 1".into()));
    }
    let mut eligible: Vec<ClientId> = pool
        .iter()
        .filter(|d| !d.is_empty() && d.len() >= min_size)
        .map(ClientDataset::owner)
        .collect();
    eligible.sort_unstable();
    if eligible.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::domain("duplicate client identifiers in pool"));
    }
    if eligible.len() < count {
        return Err(Error::InsufficientClients {
            eligible: eligible.len(),
            required: count,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    eligible.shuffle(&mut rng);
    eligible.truncate(count);
    Ok(eligible)
}

/// Server broadcast of the round's system parameter.
///
/// `views` holds all `m` parties, server last. The server's view gains one
/// broadcast message; every recipient gains an identical sysparam entry.
pub fn broadcast_sysparam(
    sysparam: &SysParam,
    selection: &Selection,
    recipients: &[ClientId],
    views: &mut [PartyView],
) -> Result<()> {
    if views.len() != selection.server() {
        return Err(Error::Arity {
            expected: selection.server(),
            actual: views.len(),
        });
    }
    let parties = recipients
        .iter()
        .map(|&id| selection.party_of(id).ok_or(Error::Selection(id)))
        .collect::<Result<Vec<_>>>()?;
    let round = sysparam.round;
    views[selection.server() - 1].append(
        round,
        EntryKind::MessageOut { to: None },
        Value::SysParam(sysparam.clone()),
    );
    for p in parties {
        views[p - 1].append(round, EntryKind::SysParam, Value::SysParam(sysparam.clone()));
    }
    Ok(())
}

impl Program {
    /// Exact gradient of the program's loss on `dataset` at `model`.
    pub fn gradient(self, dataset: &ClientDataset, model: &[Rational]) -> Vec<Rational> {
        match self {
            Program::LinearSquaredGradient => {
                let two = Rational::from_integer(BigInt::from(2));
                let mut g = vec![Rational::zero(); model.len()];
                for ex in dataset.examples() {
                    let pred: Rational = ex
                        .features
                        .iter()
                        .zip(model)
                        .map(|(x, w)| x * w)
                        .sum();
                    let residual = &two * (pred - &ex.label);
                    for (gk, xk) in g.iter_mut().zip(&ex.features) {
                        *gk += &residual * xk;
                    }
                }
                g
            }
        }
    }
}

/// Scales by `s` and rounds half away from zero.
pub fn quantize(gradient: &[Rational], scale: u32) -> Vec<BigInt> {
    let s = Rational::from_integer(BigInt::from(scale));
    gradient.iter().map(|g| (g * &s).round().to_integer()).collect()
}

/// Runs the training program and encodes the quantized update in `Z_q`.
pub fn client_update(dataset: &ClientDataset, sysparam: &SysParam) -> Result<FieldVector> {
    match dataset.dim() {
        None => return Err(Error::domain(format!("client {} has no data", dataset.owner()))),
        Some(d) if d != sysparam.dim() => {
            return Err(Error::domain(format!(
                "client {} data has dimension {d}, model has {}",
                dataset.owner(),
                sysparam.dim()
            )))
        }
        Some(_) => {}
    }
    let g = sysparam.program.gradient(dataset, &sysparam.model);
    FieldVector::encode_centered(sysparam.modulus, &quantize(&g, sysparam.scale))
}

/// Componentwise sum of the clients' updates.
pub fn aggregate_plain(updates: &[FieldVector]) -> Result<FieldVector> {
    FieldVector::sum(updates)
}

/// Plain aggregation with its view bookkeeping: each client sends its update
/// in the clear and the server records every one of them.
pub fn plain_agg_round(updates: &[FieldVector]) -> Result<(FieldVector, Vec<ViewDelta>)> {
    let aggregate = aggregate_plain(updates)?;
    let server = updates.len() + 1;
    let mut deltas = vec![ViewDelta::new(); server];
    for (idx, x) in updates.iter().enumerate() {
        deltas[idx].push(EntryKind::MessageOut { to: Some(server) }, Value::Field(x.clone()));
        deltas[server - 1].push(EntryKind::MessageIn { from: idx + 1 }, Value::Field(x.clone()));
    }
    Ok((aggregate, deltas))
}

/// `w' = w − η · (decode(aggregate) / s) / clients`, exactly.
///
/// Centered decoding always lands in `[-(q-1)/2, (q-1)/2]`; a sum that
/// wrapped around the modulus cannot be detected here.
pub fn model_update(
    model: &[Rational],
    aggregate: &FieldVector,
    clients: usize,
    learning_rate: &Rational,
    scale: u32,
) -> Result<Vec<Rational>> {
    if aggregate.dim() != model.len() {
        return Err(Error::domain(format!(
            "aggregate dimension {} but model dimension {}",
            aggregate.dim(),
            model.len()
        )));
    }
    if clients == 0 || scale == 0 {
        return Err(Error::Config("client count and scale must be positive".into()));
    }
    let denom = Rational::from_integer(BigInt::from(scale as u64 * clients as u64));
    Ok(model
        .iter()
        .zip(aggregate.decode_centered())
        .map(|(w, c)| w - learning_rate * Rational::from_integer(BigInt::from(c)) / &denom)
        .collect())
}

/// Magnitude check used by the ideal evaluator; mirrors `encode_centered`.
pub(crate) fn check_representable(values: &[BigInt], half: u64, modulus: u64) -> Result<()> {
    let bound = BigInt::from(half);
    match values.iter().find(|v| v.abs() > bound) {
        Some(v) => Err(Error::Overflow {
            value: v.to_string(),
            modulus,
        }),
        None => Ok(()),
    }
}
