//! Shared numerical thresholds.

/// Positive-definiteness cutoff, relative to the largest eigenvalue magnitude.
pub const TOL_PD: f64 = 1e-12;

/// Feasibility slack for `B0 >= 0`, `B1 >= 0`, `B0 + B1 <= S`.
pub const TOL_FEAS: f64 = 1e-9;

/// PSD slack allowed on recovered multipliers.
pub const TOL_CERT: f64 = 1e-6;

/// Slack-matrix eigenvalues at or below this (times `max(1, lambda_max(S))`)
/// count as tight directions.
pub const ACTIVE_EIG: f64 = 1e-7;

/// An `f0` branch counts as tight when it is within this of the target.
pub const TIGHT_R0: f64 = 1e-6;

/// Allowed shortfall of `f0(B0)` below the common-rate target.
pub const R0_SHORTFALL: f64 = 1e-6;

/// Multiplier recovery fails above this stationarity residual.
pub const RECOVERY_LIMIT: f64 = 1e-3;

/// Pass thresholds used when certifying a candidate optimum.
pub mod cert {
    pub const KKT_STATIONARITY: f64 = 1e-4;
    pub const KKT_SLACKNESS: f64 = 1e-4;
    pub const DOMINANCE_N1: f64 = 1e-8;
    pub const DOMINANCE_N2: f64 = 1e-6;
    pub const DET_IDENTITY: f64 = 1e-6;
    pub const RATIO_IDENTITY: f64 = 1e-6;
    pub const STATIONARITY_ENH: f64 = 1e-4;
    pub const CONVERSE_GAP_LOW: f64 = -1e-6;
    pub const CONVERSE_GAP_HIGH: f64 = 1e-4;
}
