//! Satisficing verification, analytical bounds, side conditions, and the
//! worst-case price-of-satisficing search.

mod bounds;
mod conditions;
mod search;
mod verify;

pub use bounds::{deviation_ratio_bound, simple_posat_bound, zeta_bound};
pub use conditions::{
    check_scaling_condition_general, check_scaling_condition_separable, ConditionReport,
};
pub use search::{posat_curve, search_worst_posat, PoSatResult, SearchOptions, StartOutcome};
pub use verify::{
    check_necessary_condition, verify_asatue, verify_msatue, CertificateStatus,
    NecessaryConditionReport, OdVerdict, SatisficingReport,
};
