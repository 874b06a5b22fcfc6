//! Federated learning executed as a composition of m-ary functionalities,
//! with exact, enumeration-based checks of simulation security.
//!
//! Parties are numbered `1..=m`. Parties `1..m` are clients and party `m` is
//! the server. All randomness is an explicit, enumerable argument, and all
//! arithmetic is exact: model weights are rationals and updates live in a
//! prime field `Z_q`.

pub mod codec;
pub mod error;
pub mod field;
pub mod fl;
pub mod functionality;
pub mod oracle;
pub mod rational;
pub mod secagg;
pub mod sim;
pub mod value;
pub mod view;

pub use error::{Error, Result};
pub use field::{FieldSpec, FieldVector, Modulus};
pub use fl::{run_fl, ClientDataset, Example, FlConfig, FlRun, MaskSource, SysParam, Variant};
pub use functionality::{
    compose, evaluate_functionality, CompositionPlan, Delivery, MAryFunctionality,
    RandomnessDomain, Threading,
};
pub use oracle::{oracle_call, OracleBinding};
pub use rational::Rational;
pub use secagg::{secure_agg_round, PairwiseMaskSet};
pub use sim::{
    check_private_computation, check_reduction, enumerate_real_distribution, project_views,
    simulate_distribution, tv_distance, CorruptionSet, JointView, Mode, ViewDistribution,
};
pub use value::Value;
pub use view::{EntryKind, PartyView};
