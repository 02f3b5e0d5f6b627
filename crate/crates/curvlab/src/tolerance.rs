//! Tolerances shared across modules. Tests that restate a tolerance import
//! it from here instead of repeating the literal.

/// Margins must exceed this floor for strict membership; boundary
/// operators such as flat models land at exactly zero and must be "out".
pub const EPS_STRICT: f64 = 1e-9;

/// Relative asymmetry above which an input operator matrix is rejected.
pub const SYMMETRY_REJECT: f64 = 1e-8;

/// Orthonormality defect accepted for frames.
pub const FRAME_ORTHO: f64 = 1e-10;

/// Orthogonality defect accepted for group elements.
pub const GROUP_ORTHO: f64 = 1e-10;

/// Bianchi defect below which an operator counts as satisfying the identity.
pub const BIANCHI: f64 = 1e-10;

/// Bracketed root finds stop at this interval width.
pub const ROOT: f64 = 1e-12;

/// Parity conditions at the center of a warping profile.
pub const PROFILE_PARITY: f64 = 1e-6;

/// Class clauses of plane curves (zero curvature segments, vertical runs).
pub const CURVE_CLASS: f64 = 1e-6;

/// Flatness of a profile at a collar point, derivative orders 1..=4.
pub const COLLAR_FLATNESS: f64 = 1e-5;

/// Match between a profile and a scaled torpedo when detecting its radius.
pub const TORPEDO_MATCH: f64 = 1e-8;
