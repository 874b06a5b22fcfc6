//! The ideal per-round functionality and its n-round composition.

use num::{BigInt, Integer, Zero};

use super::steps::{check_representable, quantize};
use super::types::Program;
use crate::error::{Error, Result};
use crate::field::FieldSpec;
use crate::functionality::{
    compose, CompositionPlan, Delivery, Domain, MAryFunctionality, RandomnessDomain, Rule,
    Threading,
};
use crate::rational::{is_positive, Rational};
use crate::value::Value;

/// Everything that fixes one round's functionality.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundParams {
    pub clients: usize,
    pub field: FieldSpec,
    pub scale: u32,
    pub learning_rate: Rational,
    pub program: Program,
}

impl RoundParams {
    pub fn validate(&self) -> Result<()> {
        if self.clients == 0 {
            return Err(Error::Config("need at least one client".into()));
        }
        if self.scale == 0 {
            return Err(Error::Config("quantization scale must be at least 1".into()));
        }
        if !is_positive(&self.learning_rate) {
            return Err(Error::Config("learning rate must be positive".into()));
        }
        Ok(())
    }

    pub fn parties(&self) -> usize {
        self.clients + 1
    }
}

/// The round functionality `f_j`: clients input their datasets, the server
/// the current model. Clients receive an acknowledgment; the server receives
/// the model after one aggregated gradient step.
pub fn round_functionality(params: &RoundParams) -> Result<MAryFunctionality> {
    params.validate()?;
    let d = params.field.dim;
    let mut inputs = vec![Domain::Dataset { dim: d }; params.clients];
    inputs.push(Domain::Model { dim: d });
    let mut outputs = vec![Domain::Ack; params.clients];
    outputs.push(Domain::Model { dim: d });
    MAryFunctionality::new(
        inputs,
        outputs,
        RandomnessDomain::none(),
        Rule::FlRound(params.clone()),
    )
}

/// `f_n ∘ ... ∘ f_1` over identical rounds, the server's model threaded
/// from round to round.
pub fn fl_functionality(
    params: &RoundParams,
    rounds: usize,
    delivery: Delivery,
) -> Result<MAryFunctionality> {
    let f = round_functionality(params)?;
    compose(CompositionPlan::new(vec![f; rounds], Threading::ServerCarry).with_delivery(delivery))
}

/// Direct evaluation over the integers: per-client quantized gradients are
/// range-checked, summed in `Z`, reduced to the centered residue mod `q`, and
/// applied to the model.
pub(crate) fn evaluate_round(params: &RoundParams, inputs: &[Value]) -> Result<Vec<Value>> {
    let (clients, server) = inputs.split_at(params.clients);
    let model = server[0]
        .as_model()
        .ok_or_else(|| Error::domain("server input must be a model"))?;
    let q = params.field.modulus;
    let mut total = vec![BigInt::zero(); model.len()];
    for input in clients {
        let ds = input
            .as_dataset()
            .ok_or_else(|| Error::domain("client input must be a dataset"))?;
        let g = quantize(&params.program.gradient(ds, model), params.scale);
        check_representable(&g, q.half(), q.get())?;
        for (t, gk) in total.iter_mut().zip(g) {
            *t += gk;
        }
    }
    let qi = BigInt::from(q.get());
    let half = BigInt::from(q.half());
    let denom = BigInt::from(params.scale as u64 * params.clients as u64);
    let next: Vec<Rational> = model
        .iter()
        .zip(total)
        .map(|(w, t)| {
            let mut centered = t.mod_floor(&qi);
            if centered > half {
                centered -= &qi;
            }
            w - &params.learning_rate * Rational::new(centered, denom.clone())
        })
        .collect();
    let mut out = vec![Value::Ack; params.clients];
    out.push(Value::Model(next));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Modulus;
    use crate::fl::{ClientDataset, Example};
    use crate::rational::{int, ratio};

    fn params(clients: usize, eta: Rational) -> RoundParams {
        RoundParams {
            clients,
            field: FieldSpec::new(Modulus::new(17).unwrap(), 1).unwrap(),
            scale: 1,
            learning_rate: eta,
            program: Program::LinearSquaredGradient,
        }
    }

    fn ds(owner: u64, rows: &[(i64, i64)]) -> Value {
        Value::Dataset(
            ClientDataset::new(
                owner,
                rows.iter()
                    .map(|&(x, y)| Example::new(vec![int(x)], int(y)))
                    .collect(),
            )
            .unwrap(),
        )
    }

    #[test]
    fn one_client_ideal_output() {
        let f = round_functionality(&params(1, ratio(1, 4))).unwrap();
        let out = f.evaluate(&[ds(1, &[(1, 2)]), Value::Model(vec![int(0)])], &[]).unwrap();
        assert_eq!(out, vec![Value::Ack, Value::Model(vec![int(1)])]);
    }

    #[test]
    fn zero_gradient_keeps_model() {
        let f = round_functionality(&params(2, ratio(1, 4))).unwrap();
        let w = Value::Model(vec![ratio(3, 2)]);
        // Both clients fit w = 3/2 exactly.
        let a = Value::Dataset(
            ClientDataset::new(1, vec![Example::new(vec![int(2)], int(3))]).unwrap(),
        );
        let b = Value::Dataset(
            ClientDataset::new(2, vec![Example::new(vec![int(0)], int(0))]).unwrap(),
        );
        let out = f.evaluate(&[a, b, w.clone()], &[]).unwrap();
        assert_eq!(out[2], w);
    }

    #[test]
    fn two_clients_hand_composed() {
        // Gradients -4 and -8 sum to -12, which wraps to 5 in Z_17.
        // w' = 0 - (1/4)(5 / 2) = -5/8.
        let f = round_functionality(&params(2, ratio(1, 4))).unwrap();
        let out = f
            .evaluate(
                &[ds(1, &[(1, 2)]), ds(2, &[(1, 2), (2, 1)]), Value::Model(vec![int(0)])],
                &[],
            )
            .unwrap();
        assert_eq!(out[2], Value::Model(vec![ratio(-5, 8)]));
    }

    #[test]
    fn invalid_configs() {
        assert_eq!(
            round_functionality(&params(1, int(0))).unwrap_err().name(),
            "ConfigError"
        );
        assert_eq!(
            round_functionality(&params(0, int(1))).unwrap_err().name(),
            "ConfigError"
        );
        let mut p = params(1, int(1));
        p.scale = 0;
        assert!(round_functionality(&p).is_err());
    }

    #[test]
    fn client_overflow_surfaces() {
        let f = round_functionality(&params(1, ratio(1, 4))).unwrap();
        let err = f
            .evaluate(&[ds(1, &[(1, 5)]), Value::Model(vec![int(0)])], &[])
            .unwrap_err();
        assert_eq!(err.name(), "OverflowError");
    }
}
