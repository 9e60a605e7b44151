//! Coded caching for the cyclic wrap-around multi-access network with
//! private caches.
//!
//! `K` users sit on a ring of `K` access caches. User `u` reads the `L`
//! access caches `u, u+1, ..., u+L-1` (mod `K`) and owns a private cache.
//! This crate builds the uncoded placement, generates the XOR delivery,
//! checks that every user decodes, and evaluates the achievable rate
//! against the cut-set lower bound. Brute-force oracles in [`verify`]
//! cross-check every closed form at desk scale.
//!
//! Rates and bounds are generic over [`Scalar`]; the exact instantiation
//! [`Rational`] is what the CLI and the tests use, with `f64` available for
//! plotting pipelines.

pub mod analysis;
pub mod cli;
pub mod combin;
pub mod delivery;
pub mod error;
pub mod model;
pub mod placement;
pub mod scalar;
pub mod sweep;
pub mod verify;

pub use analysis::{
    achievable_rate, cutset_bound, is_optimal, memory_share, rate_point, table1_counts,
    MemorySharePlan, RatePoint, TransmissionCounts,
};
pub use delivery::{
    classify_union_set, deliver, deliver_with, verify_decodability, Case, DecodabilityReport,
    DeliveryOptions, DeliveryResult, DemandVector, Term, Transmission,
};
pub use error::{Error, Result};
pub use model::{
    cyc_reduce, position_sets, shift_positions, CyclicIndex, IndexSet, IntegralPoint,
    MiniSubfileId, PositionSets, Regime, RingTopology, SubfileIndexSet, SystemParams,
};
pub use placement::{CacheLayout, UserAccess};
pub use scalar::Scalar;

/// Exact rational scalar used for memories, rates and bounds.
pub type Rational = num_rational::BigRational;

/// Rate point evaluated exactly.
pub type ExactRatePoint = RatePoint<Rational>;

/// Rate point evaluated in double precision.
pub type ApproxRatePoint = RatePoint<f64>;

/// Memory-sharing plan evaluated exactly.
pub type ExactSharePlan = MemorySharePlan<Rational>;
