/// Numerical tolerances used across the library.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Entrywise bound on `U†U − I` for a gate matrix.
    pub unitarity: f64,
    /// Entrywise bound on `H − H†`.
    pub hermiticity: f64,
    /// Bound on `|‖ψ‖² − 1|` for states read from outside.
    pub normalization: f64,
    /// Bound used when checking exact identities (perfect completeness, value ½, ...).
    pub identity: f64,
    /// Allowed gap between a supplied optimum and the recomputed one.
    pub consistency: f64,
    /// Squared amplitudes below this are dropped from sparse states.
    pub prune: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            unitarity: 1e-10,
            hermiticity: 1e-10,
            normalization: 1e-9,
            identity: 1e-9,
            consistency: 1e-6,
            prune: 1e-26,
        }
    }
}
