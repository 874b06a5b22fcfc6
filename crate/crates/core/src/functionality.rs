//! m-ary functionalities: descriptors, evaluation on explicit randomness, and
//! sequential composition of round functionalities.
//!
//! Parties are numbered `1..=m`; parties `1..m` are clients and party `m` is
//! the server.

use crate::error::{Error, Result};
use crate::field::{FieldSpec, FieldVector};
use crate::fl::{self, RoundParams};
use crate::value::Value;

/// The set of values a party may supply or receive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Domain {
    Any,
    Bottom,
    Ack,
    Field(FieldSpec),
    Model { dim: usize },
    Dataset { dim: usize },
    List,
}

impl Domain {
    pub fn contains(&self, v: &Value) -> bool {
        match (self, v) {
            (Domain::Any, _) => true,
            (Domain::Bottom, Value::Bottom) => true,
            (Domain::Ack, Value::Ack) => true,
            (Domain::Field(spec), Value::Field(fv)) => fv.spec() == *spec,
            (Domain::Model { dim }, Value::Model(w)) => w.len() == *dim,
            (Domain::Dataset { dim }, Value::Dataset(ds)) => {
                !ds.is_empty() && ds.dim() == Some(*dim)
            }
            (Domain::List, Value::List(_)) => true,
            _ => false,
        }
    }

    /// Whether values produced in `self` may flow into `target`.
    pub fn feeds(&self, target: &Domain) -> bool {
        self == target || *self == Domain::Any || *target == Domain::Any
    }
}

/// A finite randomness domain: a tuple of digits, digit `k` ranging over
/// `0..radices[k]`. Points are enumerated lexicographically.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RandomnessDomain {
    radices: Vec<u64>,
}

impl RandomnessDomain {
    /// The one-point domain of a deterministic functionality.
    pub fn none() -> Self {
        Self::default()
    }

    pub fn new(radices: Vec<u64>) -> Result<Self> {
        if radices.contains(&0) {
            return Err(Error::Config("randomness digit with empty range".into()));
        }
        Ok(RandomnessDomain { radices })
    }

    /// `count` digits each uniform in `Z_q`.
    pub fn field_digits(spec: FieldSpec, count: usize) -> Self {
        RandomnessDomain {
            radices: vec![spec.modulus.get(); spec.dim * count],
        }
    }

    pub fn radices(&self) -> &[u64] {
        &self.radices
    }

    pub fn digits(&self) -> usize {
        self.radices.len()
    }

    /// Number of points, saturating at `u128::MAX`.
    pub fn size(&self) -> u128 {
        self.radices
            .iter()
            .fold(1u128, |acc, &r| acc.saturating_mul(r as u128))
    }

    pub fn contains(&self, point: &[u64]) -> bool {
        point.len() == self.radices.len() && point.iter().zip(&self.radices).all(|(p, r)| p < r)
    }

    /// Product domain; this domain's digits come first.
    pub fn product(&self, other: &RandomnessDomain) -> RandomnessDomain {
        let mut radices = self.radices.clone();
        radices.extend_from_slice(&other.radices);
        RandomnessDomain { radices }
    }

    /// The point with lexicographic rank `index` (last digit fastest).
    pub fn point(&self, mut index: u128) -> Vec<u64> {
        let mut point = vec![0; self.radices.len()];
        for (slot, &r) in point.iter_mut().zip(&self.radices).rev() {
            *slot = (index % r as u128) as u64;
            index /= r as u128;
        }
        point
    }

    pub fn iter(&self) -> impl Iterator<Item = Vec<u64>> + '_ {
        (0..self.size()).map(move |i| self.point(i))
    }
}

/// Parameters of a sum-to-server round over `Z_q^d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SumRule {
    pub field: FieldSpec,
    /// Server input is a running total that the sum is added to.
    pub accumulate: bool,
    /// Server output is blinded by a uniform pad drawn from the randomness.
    pub padded: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Rule {
    Identity,
    SumToServer(SumRule),
    FlRound(RoundParams),
    Composed(Box<CompositionPlan>),
}

/// Descriptor of a possibly randomized functionality on `m` parties.
#[derive(Debug, Clone, PartialEq)]
pub struct MAryFunctionality {
    arity: usize,
    inputs: Vec<Domain>,
    outputs: Vec<Domain>,
    randomness: RandomnessDomain,
    rule: Rule,
}

impl MAryFunctionality {
    /// Builds a descriptor; the domain lists must have one entry per party.
    pub fn new(
        inputs: Vec<Domain>,
        outputs: Vec<Domain>,
        randomness: RandomnessDomain,
        rule: Rule,
    ) -> Result<Self> {
        let arity = inputs.len();
        if arity < 2 {
            return Err(Error::Config(format!("arity must be at least 2, got {arity}")));
        }
        if outputs.len() != arity {
            return Err(Error::Arity {
                expected: arity,
                actual: outputs.len(),
            });
        }
        Ok(MAryFunctionality {
            arity,
            inputs,
            outputs,
            randomness,
            rule,
        })
    }

    pub fn identity(m: usize) -> Result<Self> {
        Self::new(
            vec![Domain::Any; m],
            vec![Domain::Any; m],
            RandomnessDomain::none(),
            Rule::Identity,
        )
    }

    /// Clients hold vectors in `Z_q^d`; the server learns their sum, clients
    /// an acknowledgment.
    pub fn sum_to_server(m: usize, rule: SumRule) -> Result<Self> {
        let mut inputs = vec![Domain::Field(rule.field); m];
        let mut outputs = vec![Domain::Ack; m];
        if let Some(server) = m.checked_sub(1) {
            if server < inputs.len() {
                inputs[server] = if rule.accumulate {
                    Domain::Field(rule.field)
                } else {
                    Domain::Bottom
                };
                outputs[server] = Domain::Field(rule.field);
            }
        }
        let randomness = if rule.padded {
            RandomnessDomain::field_digits(rule.field, 1)
        } else {
            RandomnessDomain::none()
        };
        Self::new(inputs, outputs, randomness, Rule::SumToServer(rule))
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn input_domains(&self) -> &[Domain] {
        &self.inputs
    }

    pub fn output_domains(&self) -> &[Domain] {
        &self.outputs
    }

    pub fn randomness(&self) -> &RandomnessDomain {
        &self.randomness
    }

    pub fn rule(&self) -> &Rule {
        &self.rule
    }

    pub fn is_deterministic(&self) -> bool {
        self.randomness.size() == 1
    }

    /// Evaluates on explicit inputs and an explicit randomness point.
    pub fn evaluate(&self, inputs: &[Value], randomness: &[u64]) -> Result<Vec<Value>> {
        if inputs.len() != self.arity {
            return Err(Error::Arity {
                expected: self.arity,
                actual: inputs.len(),
            });
        }
        for (i, (domain, v)) in self.inputs.iter().zip(inputs).enumerate() {
            if !domain.contains(v) {
                return Err(Error::domain(format!(
                    "party {} input {} outside {:?}",
                    i + 1,
                    v,
                    domain
                )));
            }
        }
        if !self.randomness.contains(randomness) {
            return Err(Error::domain(format!(
                "randomness {randomness:?} outside domain {:?}",
                self.randomness.radices()
            )));
        }
        match &self.rule {
            Rule::Identity => Ok(inputs.to_vec()),
            Rule::SumToServer(rule) => eval_sum(rule, inputs, randomness),
            Rule::FlRound(params) => fl::evaluate_round(params, inputs),
            Rule::Composed(plan) => plan.evaluate(inputs, randomness),
        }
    }
}

fn eval_sum(rule: &SumRule, inputs: &[Value], randomness: &[u64]) -> Result<Vec<Value>> {
    let m = inputs.len();
    let (clients, server) = inputs.split_at(m - 1);
    let mut total = match (&server[0], rule.accumulate) {
        (Value::Field(acc), true) => acc.clone(),
        _ => rule.field.zero(),
    };
    for x in clients {
        let x = x
            .as_field()
            .ok_or_else(|| Error::domain("client input must be a field vector"))?;
        total = total.add(x)?;
    }
    if rule.padded {
        total = total.add(&FieldVector::new(rule.field.modulus, randomness.to_vec())?)?;
    }
    let mut out = vec![Value::Ack; m - 1];
    out.push(Value::Field(total));
    Ok(out)
}

/// How the outputs of round `j` become the inputs of round `j + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Threading {
    /// The server's output replaces the server's input; client inputs persist.
    #[default]
    ServerCarry,
    /// Every party's output becomes its next input.
    OutputsToInputs,
}

/// What each party receives from the composed functionality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Delivery {
    /// Only the last round's outputs.
    #[default]
    Final,
    /// The list of that party's outputs from every round.
    PerRound,
}

/// `f_n ∘ ... ∘ f_1` with round 1 applied first.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositionPlan {
    pub rounds: Vec<MAryFunctionality>,
    pub threading: Threading,
    pub delivery: Delivery,
}

impl CompositionPlan {
    pub fn new(rounds: Vec<MAryFunctionality>, threading: Threading) -> Self {
        CompositionPlan {
            rounds,
            threading,
            delivery: Delivery::Final,
        }
    }

    pub fn with_delivery(mut self, delivery: Delivery) -> Self {
        self.delivery = delivery;
        self
    }

    fn validate(&self) -> Result<()> {
        let first = self
            .rounds
            .first()
            .ok_or_else(|| Error::Config("composition needs at least one round".into()))?;
        let m = first.arity;
        if let Some(bad) = self.rounds.iter().find(|f| f.arity != m) {
            return Err(Error::Arity {
                expected: m,
                actual: bad.arity,
            });
        }
        for (j, pair) in self.rounds.windows(2).enumerate() {
            let (cur, next) = (&pair[0], &pair[1]);
            let mismatch = |party: usize, from: &Domain, to: &Domain| Error::Threading {
                round: j + 1,
                next: j + 2,
                detail: format!("party {party}: {from:?} cannot feed {to:?}"),
            };
            for p in 0..m {
                let source = match self.threading {
                    Threading::OutputsToInputs => &cur.outputs[p],
                    Threading::ServerCarry if p == m - 1 => &cur.outputs[p],
                    Threading::ServerCarry => &first.inputs[p],
                };
                if !source.feeds(&next.inputs[p]) {
                    return Err(mismatch(p + 1, source, &next.inputs[p]));
                }
            }
        }
        Ok(())
    }

    fn evaluate(&self, inputs: &[Value], randomness: &[u64]) -> Result<Vec<Value>> {
        let m = inputs.len();
        let mut current = inputs.to_vec();
        let mut offset = 0;
        let mut history: Vec<Vec<Value>> = vec![Vec::with_capacity(self.rounds.len()); m];
        let mut last = Vec::new();
        for round in &self.rounds {
            let digits = round.randomness.digits();
            let outputs = round.evaluate(&current, &randomness[offset..offset + digits])?;
            offset += digits;
            for (h, o) in history.iter_mut().zip(&outputs) {
                h.push(o.clone());
            }
            current = match self.threading {
                Threading::OutputsToInputs => outputs.clone(),
                Threading::ServerCarry => {
                    let mut next = inputs[..m - 1].to_vec();
                    next.push(outputs[m - 1].clone());
                    next
                }
            };
            last = outputs;
        }
        Ok(match self.delivery {
            Delivery::Final => last,
            Delivery::PerRound => history.into_iter().map(Value::List).collect(),
        })
    }
}

/// Composes round functionalities into one functionality.
pub fn compose(plan: CompositionPlan) -> Result<MAryFunctionality> {
    plan.validate()?;
    let first = &plan.rounds[0];
    let last = &plan.rounds[plan.rounds.len() - 1];
    let m = first.arity;
    let outputs = match plan.delivery {
        Delivery::PerRound => vec![Domain::List; m],
        Delivery::Final => last.outputs.clone(),
    };
    let randomness = plan
        .rounds
        .iter()
        .fold(RandomnessDomain::none(), |acc, f| acc.product(&f.randomness));
    MAryFunctionality::new(
        first.inputs.clone(),
        outputs,
        randomness,
        Rule::Composed(Box::new(plan)),
    )
}

/// Evaluates a functionality on explicit arguments.
pub fn evaluate_functionality(
    f: &MAryFunctionality,
    inputs: &[Value],
    randomness: &[u64],
) -> Result<Vec<Value>> {
    f.evaluate(inputs, randomness)
}
