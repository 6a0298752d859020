//! Dual Frank-Wolfe training of linear multi-category classifiers under
//! max-hinge, top-k and Usunier-type losses, with a projected subgradient
//! baseline, svmlight data handling and top-k evaluation.

pub mod cli;
pub mod data;
pub mod error;
pub mod loss;
pub mod metrics;
pub mod model;
pub mod oracle;
pub mod pg;
pub mod solver;
pub mod trace;

pub use data::{parse_svmlight, synth_blobs, BlobConfig, Dataset};
pub use error::{Error, Result};
pub use loss::{default_weights, LossFamily, LossSpec};
pub use metrics::topk_error;
pub use model::{Model, SparseVector};
pub use pg::{pg_train, PgConfig, PgOutcome};
pub use solver::{train, DualState, FrankWolfe, Smoothing, SolverConfig, StepRule, TrainOutcome};
pub use trace::TraceRecord;
