//! Subject-level benchmark-audit toolkit.
//!
//! Four probes over flat prediction/annotation files:
//!
//! * leakage-safe leave-one-subject-out evaluation with nested cutoff
//!   selection ([`loso`]),
//! * leaderboard-instability analysis via subject bootstrap ([`rankaudit`]),
//! * zero-shot transfer scoring under a frozen decision rule ([`transfer`]),
//! * paired symptom-density stress testing ([`stress`]).
//!
//! A reference learner stack (pooling, PCA, logistic regression) plus a
//! synthetic-corpus generator ([`reflearn`]) make end-to-end sweeps runnable
//! without access to any controlled dataset. Everything is driven by the
//! `bg` CLI ([`cli`]).

pub mod cli;
pub mod dataio;
pub mod error;
pub mod loso;
pub mod metrics;
pub mod rankaudit;
pub mod reflearn;
pub mod report;
pub mod rng;
pub mod stress;
pub mod transfer;

pub use error::{BgError, Result};
