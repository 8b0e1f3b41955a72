//! Computational one-dimensional dynamics.
//!
//! The crate covers piecewise-monotone interval maps and the constructions
//! used to study the sign of their Lyapunov exponents:
//!
//! - [`maps`]: the logistic, sine and tent families, orbits, derivatives and
//!   inverse branches;
//! - [`symbolic`]: itineraries, cylinders, closest precritical points and
//!   cutting times;
//! - [`hofbauer`]: the canonical Markov extension (Hofbauer tower), lifted
//!   orbits and liftability diagnostics;
//! - [`lyapunov`]: finite-time, pointwise and measure exponents, and the scan
//!   for attracting cycles behind negative exponents;
//! - [`conjugacy`]: topological conjugacies between kneading-equivalent maps
//!   and transport of measures;
//! - [`design`]: points with prescribed block itineraries whose lower pointwise
//!   exponent changes sign under conjugacy;
//! - [`induced`]: induced Markov maps over the closest-precritical partition.
//!
//! [`hp`] holds the arbitrary-precision shadowing used wherever orbits come
//! closer to the turning point than an `f64` can resolve.

// `!(a < b)` comparisons deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod conjugacy;
pub mod design;
pub mod error;
pub mod hofbauer;
pub mod hp;
pub mod induced;
pub mod interval;
pub mod lyapunov;
pub mod maps;
pub mod symbolic;

pub use error::{Error, Result};
pub use interval::Interval;
pub use maps::{make_family, Branch, CriticalPoint, FamilyId, IntervalMap, MapSpec, Orientation, UnitPoint};
pub use symbolic::{Itinerary, KneadingData, Symbol};

/// `Λ`-estimates, orbits and fidelity selection shared by several modules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Fidelity {
    /// Plain forward iteration in `f64`.
    #[default]
    Fast,
    /// Backward shadowing of the computed itinerary at high precision.
    High,
}
