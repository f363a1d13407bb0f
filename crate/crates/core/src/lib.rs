//! Information reconciliation for quantum key distribution over the binary
//! symmetric channel: Cascade, one-way LDPC syndrome decoding, density
//! evolution for ensemble design, and finite key-rate bookkeeping.

mod error;

pub mod bits;
pub mod cascade;
pub mod channel;
pub mod degree;
pub mod densevo;
pub mod deopt;
pub mod entropy;
pub mod ldpc;
pub mod metrics;
pub mod transcript;

pub use bits::{hamming_distance, BitString};
pub use cascade::{run_cascade, CascadeConfig};
pub use channel::{flip_noise, transmit_bsc, BscParams, Seed, SimRng};
pub use degree::{CodeRegistry, DegreeDistribution, DegreeShape, RegistryEntry};
pub use densevo::{
    de_iterate, find_threshold, shannon_gap, DensityEvolution, DensityEvolutionConfig,
    ThresholdResult,
};
pub use deopt::{optimize, Candidate, DeConfig};
pub use entropy::{binary_entropy, inverse_binary_entropy};
pub use error::{Error, Result};
pub use ldpc::{bp_decode, reconcile_oneway, reconcile_verified, sample_code, BpConfig, DecodeResult, LdpcCode};
pub use metrics::{key_rate_randomized, key_rate_real, secret_capacity_bb84, KeyRateModel};
pub use transcript::{PassRecord, Transcript};
