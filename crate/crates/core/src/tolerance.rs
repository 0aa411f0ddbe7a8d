//! Numeric tolerances shared by every predicate in the crate.

/// One record holding every threshold used to turn an exact relation
/// (`<=`, `=`, positivity) into a numeric check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Smallest eigenvalue accepted as non-negative is `-psd_tol`.
    pub psd_tol: f64,
    /// Frobenius bound on `m - m^dag`.
    pub hermiticity_tol: f64,
    /// Eigenvalues below this are treated as outside the support.
    pub support_cutoff: f64,
    /// Bound for equalities such as trace preservation.
    pub equality_tol: f64,
    /// Relative bound on the second eigenvalue in rank-one tests.
    pub rank_gap: f64,
}

impl Tolerances {
    pub const DEFAULT: Tolerances = Tolerances {
        psd_tol: 1e-9,
        hermiticity_tol: 1e-9,
        support_cutoff: 1e-10,
        equality_tol: 1e-8,
        rank_gap: 1e-7,
    };

    pub fn with_equality_tol(self, equality_tol: f64) -> Self {
        Tolerances {
            equality_tol,
            ..self
        }
    }
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances::DEFAULT
    }
}
