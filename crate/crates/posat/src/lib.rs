//! Traffic equilibria under satisficing route choice.
//!
//! The crate computes perfectly rational user equilibria (Wardrop), system
//! optima, and equilibria under per-class travel-time perception errors on
//! congested networks with polynomial arc costs; verifies satisficing
//! certificates; evaluates the analytical worst-case bounds on the price of
//! satisficing; and searches perception space for worst-case equilibria.

pub mod analysis;
pub mod cost;
pub mod error;
pub mod instance;
pub mod net;
pub mod solver;
pub mod sp;
pub mod tntp;

#[doc(hidden)]
pub mod testsupport;

pub use error::{Error, Result};

// The guide's code blocks run as documentation tests so the book cannot
// drift from the API. One module per chapter keeps failures attributable.
#[cfg(doctest)]
mod guide {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/networks-and-flows.md")]
    mod networks_and_flows {}
    #[doc = include_str!("../../../book/src/travel-times.md")]
    mod travel_times {}
    #[doc = include_str!("../../../book/src/equilibria.md")]
    mod equilibria {}
    #[doc = include_str!("../../../book/src/perception-and-satisficing.md")]
    mod perception_and_satisficing {}
    #[doc = include_str!("../../../book/src/bounds-and-worst-case.md")]
    mod bounds_and_worst_case {}
    #[doc = include_str!("../../../book/src/file-formats.md")]
    mod file_formats {}
}
