//! Numerical thresholds shared by the library guards, the verification
//! suites, and the cross-subsystem agreement tests. Keeping them in one
//! place makes every comparison's budget auditable.
//!
//! Unless stated otherwise, moment comparisons are absolute on O(1)-scaled
//! data: differences are divided by max(1, scale of the quantity).

/// Allowed |W − 1| drift of the classical Wronskian before a solve is
/// rejected; RK4 at sane steps stays orders of magnitude below this.
pub const WRONSKIAN_DRIFT: f64 = 1e-8;

/// Step used for central finite differences when checking closed forms
/// against differential equations. Truncation scales as the step squared
/// times the third derivative; cancellation noise stays near
/// eps/step ≈ 4e-12 relative, so this keeps both a few orders below
/// [`CLOSED_FORM_RESIDUAL`] even after ten units of resonant growth.
pub const FD_STEP: f64 = 2.5e-5;

/// Worst allowed relative residual of the closed-form layer solution in the
/// layer equations under central differencing at [`FD_STEP`].
pub const CLOSED_FORM_RESIDUAL: f64 = 1e-6;

/// Agreement between closed-form layers and directly integrated layers.
pub const BASIS_RECONSTRUCTION: f64 = 1e-7;

/// Ceiling on the 1-norm condition number of the closed-form basis matrix
/// at generic times.
pub const BASIS_CONDITION_MAX: f64 = 1e6;

/// Allowed drift of the conserved layer quadratics along an integration.
pub const INVARIANT_DRIFT: f64 = 1e-7;

/// Odd-degree conserved quadratics vanish identically; this bounds them
/// relative to the squared layer scale.
pub const ODD_INVARIANT_ZERO: f64 = 1e-13;

/// The degree-2 conserved quadratic and v₀v₂ − v₁² are the same expression;
/// they must match to rounding.
pub const ERMAKOV_MATCH: f64 = 1e-14;

/// Agreement between the packet-variable form of the degree-2 invariant and
/// the moment form evaluated on packet moments.
pub const GAUSSIAN_ERMAKOV_FORM: f64 = 1e-12;

/// Agreement of the packet center with the classical fundamental-pair
/// combination in a harmonic potential.
pub const GAUSSIAN_CLASSICAL_MEANS: f64 = 1e-8;

/// Allowed wander of the minimum-uncertainty width at its fixed point.
pub const COHERENT_WIDTH_STATIONARY: f64 = 1e-9;

/// Worst pointwise residual of the squared width against the span of the
/// classical pair products.
pub const WIDTH_SPAN_FIT: f64 = 1e-6;

/// Agreement between full-equation moments and hierarchy moments for
/// harmonic evolution (degrees ≤ 4, O(1) scaling).
pub const ORACLE_MOMENT_AGREEMENT: f64 = 1e-5;

/// Slack below ħ²/4 tolerated in the uncertainty product before it counts
/// as a violation.
pub const UNCERTAINTY_FLOOR_SLACK: f64 = 1e-9;

/// Allowed |norm − 1| drift of the grid wavefunction; the split steps are
/// unitary, so only rounding accumulates.
pub const PDE_NORM_DRIFT: f64 = 1e-10;

/// Probability allowed in the outer cells of the periodic box.
pub const BOUNDARY_MASS_MAX: f64 = 1e-10;

/// Spurious imaginary part tolerated in a quadrature moment, relative to
/// max(1, |Re|).
pub const MOMENT_IMAG_MAX: f64 = 1e-9;

/// Quartic runs: packet dynamics must track the full equation this closely
/// at early times (t ≤ 1 for the reference setup)...
pub const ANHARMONIC_EARLY_MATCH: f64 = 1e-3;

/// ...and must have visibly departed from it by t = 5, confirming the
/// comparison has teeth.
pub const ANHARMONIC_LATE_DIVERGENCE: f64 = 1e-2;
