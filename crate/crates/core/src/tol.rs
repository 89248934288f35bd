//! Central tolerance table. Every documented threshold lives here and is
//! scaled uniformly by `Tolerances::scale`, so platform floating-point drift
//! can be absorbed without touching call sites.

/// Relative threshold deciding numerical rank in support/range projections
/// and pseudo-inverses.
pub const RANK_EPS: f64 = 1e-9;

/// Relative threshold for merging nearby eigenvalues into one spectral
/// projection.
pub const GROUP_EPS: f64 = 1e-8;

/// Generic certificate tolerance (residuals of theorem-derived identities).
pub const CERT: f64 = 1e-8;

/// Tight tolerance for exact-by-construction identities (reconstruction,
/// generator guarantees).
pub const STRICT: f64 = 1e-9;

/// Slack allowed on the contraction inequality `|phi(x)| <= |x|`.
pub const CONTRACTION_SLACK: f64 = 1e-10;

/// Tolerance used when checking an inverse map's Jordan properties.
pub const INVERSE_CERT: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Multiplies every documented tolerance.
    pub scale: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { scale: 1.0 }
    }
}

impl Tolerances {
    pub fn new(scale: f64) -> Self {
        assert!(scale > 0.0, "tolerance scale must be positive");
        Tolerances { scale }
    }

    pub fn rank_eps(&self) -> f64 {
        RANK_EPS * self.scale
    }

    pub fn group_eps(&self) -> f64 {
        GROUP_EPS * self.scale
    }

    pub fn cert(&self) -> f64 {
        CERT * self.scale
    }

    pub fn strict(&self) -> f64 {
        STRICT * self.scale
    }

    pub fn contraction_slack(&self) -> f64 {
        CONTRACTION_SLACK * self.scale
    }

    pub fn inverse_cert(&self) -> f64 {
        INVERSE_CERT * self.scale
    }
}
