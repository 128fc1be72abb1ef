//! Schema-agnostic progressive entity resolution.
//!
//! Emits candidate profile comparisons in decreasing estimated matching
//! likelihood so that a pay-as-you-go pipeline can stop at any point and keep
//! the best partial result. Six emission strategies are provided over shared
//! blocking substrates, together with dataset loaders, match functions, a
//! synthetic-data generator, and a benchmark harness that measures recall
//! progressiveness against a known ground truth.
//!
//! The emission strategies fall into three families:
//!
//! - naive: [`emit::naive::SaPsn`] (incremental sliding window over the
//!   Neighbor List) and [`emit::naive::SaPsab`] (suffix forest, leaves first);
//! - similarity-based: [`emit::similarity::LsPsn`] and
//!   [`emit::similarity::GsPsn`], which weight window co-occurrences with the
//!   relative co-occurrence frequency scheme;
//! - equality-based: [`emit::equality::Pbs`] and [`emit::equality::Pps`],
//!   which weight block co-occurrences over redundancy-positive blocks.

pub mod blocking;
pub mod emit;
pub mod evaluation;
pub mod ingest;
pub mod matching;
pub mod model;
pub mod synth;

pub use emit::{build_emitter, EmitError, Method, MethodParams, ProgressiveEmitter};
pub use model::{Comparison, ErMode, GroundTruth, Profile, ProfileCollection, ProfileId};
