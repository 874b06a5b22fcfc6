//! The federated learning process: client selection, broadcast, local
//! training, aggregation and model update, plus the ideal round
//! functionality those steps implement.

mod round;
mod session;
mod steps;
mod types;

pub use round::{fl_functionality, round_functionality, RoundParams};
pub(crate) use round::evaluate_round;
pub use session::{run_fl, FlConfig, FlRun, FlSession, MaskSource, Phase, RunError, Variant};
pub use steps::{
    aggregate_plain, broadcast_sysparam, client_update, model_update, plain_agg_round, quantize,
    select_clients, Selection,
};
pub use types::{ClientDataset, ClientId, Example, Program, SysParam};
