//! Party inputs, outputs and message payloads, with their canonical encoding.

use std::fmt;

use crate::codec::{Decoder, Encoder};
use crate::error::{Error, Result};
use crate::field::{FieldVector, Modulus};
use crate::fl::{ClientDataset, Example, SysParam};
use crate::rational::{format_rational, Rational};
use crate::secagg::PairMask;

/// Anything a party can hold, send, receive or output.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Value {
    /// The empty input `⊥`.
    Bottom,
    /// A bare acknowledgment output.
    Ack,
    Field(FieldVector),
    Model(Vec<Rational>),
    Dataset(ClientDataset),
    SysParam(SysParam),
    /// Pairwise pads held by one client.
    Masks(Vec<PairMask>),
    List(Vec<Value>),
}

impl Value {
    pub fn as_field(&self) -> Option<&FieldVector> {
        match self {
            Value::Field(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_model(&self) -> Option<&[Rational]> {
        match self {
            Value::Model(m) => Some(m),
            _ => None,
        }
    }

    pub fn as_dataset(&self) -> Option<&ClientDataset> {
        match self {
            Value::Dataset(d) => Some(d),
            _ => None,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Value::Bottom => "bottom",
            Value::Ack => "ack",
            Value::Field(_) => "field vector",
            Value::Model(_) => "model",
            Value::Dataset(_) => "dataset",
            Value::SysParam(_) => "sysparam",
            Value::Masks(_) => "masks",
            Value::List(_) => "list",
        }
    }

    /// Canonical, injective text encoding.
    pub fn encode(&self) -> String {
        let mut e = Encoder::new();
        self.encode_into(&mut e);
        e.finish()
    }

    pub(crate) fn encode_into(&self, e: &mut Encoder) {
        match self {
            Value::Bottom => {
                e.token("bot");
            }
            Value::Ack => {
                e.token("ack");
            }
            Value::Field(v) => {
                e.token("fv");
                encode_field(e, v);
            }
            Value::Model(w) => {
                e.token("rat").num(w.len());
                for r in w {
                    e.rational(r);
                }
            }
            Value::Dataset(ds) => {
                e.token("ds")
                    .num(ds.owner())
                    .num(ds.dim().unwrap_or(0))
                    .num(ds.len());
                for ex in ds.examples() {
                    for f in &ex.features {
                        e.rational(f);
                    }
                    e.rational(&ex.label);
                }
            }
            Value::SysParam(sp) => {
                e.token("sp")
                    .token(sp.program.tag())
                    .num(sp.round)
                    .num(sp.modulus)
                    .num(sp.scale)
                    .num(sp.dim());
                for r in &sp.model {
                    e.rational(r);
                }
            }
            Value::Masks(masks) => {
                e.token("mk").num(masks.len());
                for m in masks {
                    e.num(m.low).num(m.high);
                    encode_field(e, &m.pad);
                }
            }
            Value::List(items) => {
                e.token("list").num(items.len());
                for v in items {
                    e.token(&v.encode());
                }
            }
        }
    }

    pub fn decode(text: &str) -> Result<Value> {
        let mut d = Decoder::new(text);
        let v = Value::decode_from(&mut d)?;
        d.finish()?;
        Ok(v)
    }

    pub(crate) fn decode_from(d: &mut Decoder<'_>) -> Result<Value> {
        let tag = d.token()?;
        Ok(match tag {
            "bot" => Value::Bottom,
            "ack" => Value::Ack,
            "fv" => Value::Field(decode_field(d)?),
            "rat" => {
                let n = d.usize()?;
                Value::Model((0..n).map(|_| d.rational()).collect::<Result<_>>()?)
            }
            "ds" => {
                let owner = d.u64()?;
                let dim = d.usize()?;
                let count = d.usize()?;
                let mut examples = Vec::with_capacity(count);
                for _ in 0..count {
                    let features = (0..dim).map(|_| d.rational()).collect::<Result<_>>()?;
                    examples.push(Example::new(features, d.rational()?));
                }
                let ds = ClientDataset::new(owner, examples)?;
                if ds.dim().unwrap_or(0) != dim {
                    return Err(Error::domain("dataset dimension mismatch in encoding"));
                }
                Value::Dataset(ds)
            }
            "sp" => {
                let program = d.token()?.parse()?;
                let round = d.u64()? as u32;
                let modulus = Modulus::new(d.u64()?)?;
                let scale = d.u64()? as u32;
                let dim = d.usize()?;
                let model = (0..dim).map(|_| d.rational()).collect::<Result<_>>()?;
                Value::SysParam(SysParam::new(model, program, round, modulus, scale)?)
            }
            "mk" => {
                let n = d.usize()?;
                let mut masks = Vec::with_capacity(n);
                for _ in 0..n {
                    let low = d.usize()?;
                    let high = d.usize()?;
                    masks.push(PairMask::new(low, high, decode_field(d)?)?);
                }
                Value::Masks(masks)
            }
            "list" => {
                let n = d.usize()?;
                let mut items = Vec::with_capacity(n);
                for _ in 0..n {
                    items.push(Value::decode(d.token()?)?);
                }
                Value::List(items)
            }
            other => return Err(Error::domain(format!("unknown value tag {other:?}"))),
        })
    }
}

fn encode_field(e: &mut Encoder, v: &FieldVector) {
    e.num(v.modulus()).num(v.dim());
    for c in v.components() {
        e.num(c);
    }
}

fn decode_field(d: &mut Decoder<'_>) -> Result<FieldVector> {
    let q = Modulus::new(d.u64()?)?;
    let dim = d.usize()?;
    let comps = (0..dim).map(|_| d.u64()).collect::<Result<_>>()?;
    FieldVector::new(q, comps)
}

impl From<FieldVector> for Value {
    fn from(v: FieldVector) -> Self {
        Value::Field(v)
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bottom => f.write_str("⊥"),
            Value::Ack => f.write_str("ack"),
            Value::Field(v) => write!(f, "{v}"),
            Value::Model(w) => {
                let parts: Vec<_> = w.iter().map(format_rational).collect();
                write!(f, "[{}]", parts.join(", "))
            }
            Value::Dataset(ds) => write!(f, "dataset(client {}, {} examples)", ds.owner(), ds.len()),
            Value::SysParam(sp) => write!(f, "sysparam(round {})", sp.round),
            Value::Masks(m) => write!(f, "masks({})", m.len()),
            Value::List(items) => {
                let parts: Vec<_> = items.iter().map(|v| v.to_string()).collect();
                write!(f, "<{}>", parts.join("; "))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fl::Program;
    use crate::rational::{int, ratio};
    use proptest::prelude::*;

    fn q5() -> Modulus {
        Modulus::new(5).unwrap()
    }

    fn samples() -> Vec<Value> {
        let ds = ClientDataset::new(
            3,
            vec![
                Example::new(vec![int(1), ratio(1, 2)], int(2)),
                Example::new(vec![int(0), int(-1)], ratio(-3, 4)),
            ],
        )
        .unwrap();
        vec![
            Value::Bottom,
            Value::Ack,
            Value::Field(FieldVector::new(q5(), vec![1, 4]).unwrap()),
            Value::Model(vec![ratio(1, 3), int(-2)]),
            Value::Dataset(ds),
            Value::Dataset(ClientDataset::new(9, vec![]).unwrap()),
            Value::SysParam(
                SysParam::new(vec![int(0)], Program::LinearSquaredGradient, 2, q5(), 1).unwrap(),
            ),
            Value::Masks(vec![PairMask::new(
                1,
                2,
                FieldVector::new(q5(), vec![3]).unwrap(),
            )
            .unwrap()]),
            Value::List(vec![Value::Ack, Value::List(vec![]), Value::Bottom]),
        ]
    }

    #[test]
    fn decode_inverts_encode() {
        for v in samples() {
            assert_eq!(Value::decode(&v.encode()).unwrap(), v);
        }
    }

    #[test]
    fn distinct_samples_encode_distinctly() {
        let enc: Vec<_> = samples().iter().map(Value::encode).collect();
        for i in 0..enc.len() {
            for j in i + 1..enc.len() {
                assert_ne!(enc[i], enc[j]);
            }
        }
    }

    fn arb_value() -> impl Strategy<Value = Value> {
        let leaf = prop_oneof![
            Just(Value::Bottom),
            Just(Value::Ack),
            proptest::collection::vec(0u64..5, 1..4)
                .prop_map(|c| Value::Field(FieldVector::new(q5(), c).unwrap())),
            proptest::collection::vec((-20i64..20, 1i64..9), 1..4).prop_map(|rs| {
                Value::Model(rs.into_iter().map(|(n, d)| ratio(n, d)).collect())
            }),
        ];
        leaf.prop_recursive(3, 16, 4, |inner| {
            proptest::collection::vec(inner, 0..4).prop_map(Value::List)
        })
    }

    proptest! {
        #[test]
        fn encoding_is_injective(a in arb_value(), b in arb_value()) {
            prop_assert_eq!(a == b, a.encode() == b.encode());
            prop_assert_eq!(Value::decode(&a.encode()).unwrap(), a);
        }
    }
}
