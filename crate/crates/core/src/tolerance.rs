//! Numerical thresholds shared by every module.

/// Relative Lorentz form defect `‖MᵀηM − η‖_F / max(1, ‖M‖_F²)` accepted for a group element.
pub const FORM: f64 = 1e-9;
/// Spectral gap from 1 separating loxodromic from the other classes.
pub const SPEC: f64 = 1e-7;
/// Angular separation of boundary points, and minimum distance of a crossing from a segment end.
pub const SEP: f64 = 1e-8;
/// Relator residual bound for a representation.
pub const HOM: f64 = 1e-8;
/// Commutator bound for centralizer elements.
pub const COMMUTE: f64 = 1e-8;
/// Form defect above which a matrix is re-orthonormalized.
pub const REORTHO: f64 = 1e-12;

/// Flow and commutativity residuals, max over generators.
pub const FLOW: f64 = 1e-8;
/// Basepoint-change conjugacy residual.
pub const BASEPOINT: f64 = 1e-8;
/// Cocycle identity residual.
pub const COCYCLE: f64 = 1e-9;
/// `E(A⁻¹)` against `E(A)⁻¹`.
pub const INVERSE: f64 = 1e-9;
/// Trace change of powers of a twisted curve.
pub const TRACE: f64 = 1e-8;
/// Mismatch counts must stay below one.
pub const MISMATCH: f64 = 1.0;
/// Allowed relative deviation of a first-order halving ratio from 2.
pub const HALVING: f64 = 0.2;
/// Allowed `|log₂(ratio/2)|` for linear scaling under halving (a factor of 2 either way).
pub const LINEAR_SCALING: f64 = 1.0;
/// Best-fit circle deviation of a Fuchsian limit set.
pub const CIRCLE: f64 = 1e-6;
