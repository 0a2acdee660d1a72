//! Numerical slack and classifier thresholds shared by the audits and the
//! derivative estimator. Every report records the values it was run with.

use serde::{Deserialize, Serialize};

/// Slack on assertions that only involve exact arithmetic on distances/radii.
pub const EXACT_SLACK: f64 = 1e-12;
/// Slack on assertions that pass through arccos/arccosh or other transcendentals.
pub const TRANSCENDENTAL_SLACK: f64 = 1e-9;
/// Relative slack on unit-norm / hyperboloid point invariants.
pub const POINT_NORM_SLACK: f64 = 1e-12;
/// Tangency slack for tangent vectors.
pub const TANGENT_SLACK: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub exact_slack: f64,
    pub transcendental_slack: f64,
    /// Relative convergence window for ratio ladders.
    pub rel_tol: f64,
    /// Ratios above this value that keep increasing are classified divergent.
    pub divergence_ceiling: f64,
    /// Relative spread of the ladder tail that counts as oscillation.
    pub gap_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            exact_slack: EXACT_SLACK,
            transcendental_slack: TRANSCENDENTAL_SLACK,
            rel_tol: 1e-3,
            divergence_ceiling: 1e9,
            gap_tol: 0.1,
        }
    }
}
