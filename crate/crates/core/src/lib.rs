//! Minimum-cost partial matching of planar point sets under translation.
//!
//! Given point sets `A` and `B`, a size `k` and an exponent `p`, find a
//! translation `t` and a `k`-matching between `A + t` and `B` minimizing the
//! normalized `L_p` mean of the matched edge lengths.

pub mod diagram;
pub mod error;
pub mod exec;
pub mod geometry;
pub mod instance;
pub mod io;
pub mod search;
pub mod stationary;

pub use diagram::{DiagramKind, MatchingDiagram};
pub use error::{Error, ParseErrorKind, Result};
pub use geometry::{CostExponent, Point2, TranslationVector};
pub use instance::Instance;
pub use stationary::{MatchResult, Matching, StationarySolver};
