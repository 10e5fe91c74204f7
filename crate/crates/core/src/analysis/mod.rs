//! Bounds, reward audits, and baselines for exploration runs.

pub mod bounds;
pub mod lawnmower;
pub mod oracle;
pub mod rewards;

pub use bounds::{
    competitive_rhs, floor_log2, lower_bound_grid, m_factor, special_case_bound, upper_bound, BoundError, BoundsReport,
    SpecialCase, SpecialCaseBounds, Variant,
};
pub use lawnmower::lawnmower_lower_bound;
pub use oracle::{brute_force_opt, OracleError};
pub use rewards::{audit_rewards, AuditError, EdgeRecord, RewardAudit, RewardLedger};
