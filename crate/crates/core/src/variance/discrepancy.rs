use super::realspace_periodized;
use crate::error::{Error, Result};
use crate::pointgen::PointSet;
use crate::quad::{integrate, Quadrature};

/// Subinterval budget for the adaptive quadrature.
const MAX_PIECES: usize = 4000;

/// `∫_0^{half_diameter} V(X, R) dR` by adaptive Gauss–Kronrod quadrature.
///
/// The integrand is the exact real-space variance of the periodized count,
/// which equals the spectral sum for every radius in range.
pub fn l2_discrepancy_sq(x: &PointSet, quad_tol: f64) -> Result<Quadrature> {
    if !(quad_tol > 0.0) {
        return Err(Error::InvalidParameter(format!("quad_tol must be > 0, got {quad_tol}")));
    }
    x.lattice().require_normalized()?;
    let hd = x.lattice().half_diameter();
    integrate(|r| realspace_periodized(x, r), 0.0, hd, quad_tol, 0.0, MAX_PIECES)
}

/// L²-discrepancy `(∫_0^{half_diameter} V(X, R) dR)^{1/2}`.
pub fn l2_discrepancy(x: &PointSet, quad_tol: f64) -> Result<f64> {
    Ok(l2_discrepancy_sq(x, quad_tol)?.value.max(0.0).sqrt())
}
