//! Centralized numerical tolerances.
//!
//! Structural tolerances are sized at roughly 100x the double-precision
//! eigensolver error for dimensions up to 512, so they catch real defects
//! without tripping on accumulated roundoff.

/// Hermitian symmetry check: max entrywise |M - M*|.
pub const HERMITIAN_ABS: f64 = 1e-12;

/// Unitarity check: Frobenius norm of M*M - I.
pub const UNITARY_FRO: f64 = 1e-10;

/// Trace symmetry Tr(AB) = Tr(BA) in floating point.
pub const TRACE_SYMMETRY: f64 = 1e-12;

/// Relative slack for the trace inequality checks.
pub const TRACE_INEQ_REL: f64 = 1e-9;

/// Agreement between `unitary_exp_i` and an independent power-series route.
pub const EXP_SERIES_ABS: f64 = 1e-10;

/// Relative tolerance for deterministic oracle-vs-oracle comparisons.
pub const DETERMINISTIC_REL: f64 = 1e-8;

/// Eigenvalue clamp when taking the square root of a nonnegative matrix:
/// eigenvalues in [-CLAMP, 0) are treated as zero, more negative is an error.
pub const PSD_EIGENVALUE_CLAMP: f64 = 1e-12;

/// Default sigma threshold for Monte Carlo pass/fail verdicts.
pub const DEFAULT_SIGMA: f64 = 4.0;

/// Extra relative tolerance for limit-law comparisons at finite n,
/// on top of Monte Carlo standard errors.
pub const LIMIT_LAW_REL: f64 = 0.10;

/// Default inner integration step.
pub const DEFAULT_STEP_CAP: f64 = 0.01;

/// Default replication count for ensembles.
pub const DEFAULT_REPLICATIONS: usize = 10_000;

/// Default batch count for batch-means standard errors.
pub const DEFAULT_BATCHES: usize = 20;

/// p-value threshold for distributional tests.
pub const P_VALUE_THRESHOLD: f64 = 0.01;
