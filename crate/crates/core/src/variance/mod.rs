//! Number variance `V(X_N, R)` of torus point sets, by spectral lattice sums,
//! real-space ball intersections and Monte Carlo counting, plus the expected
//! variance of the projection DPP and of jittered sampling.
//!
//! All methods compute the variance of the periodized count
//! `Σ_j #{λ ∈ Λ : |x_j - c + λ| <= R}` over a uniform center `c`. While
//! `2R < λ₁` this is the number of points within torus distance `R`.

mod discrepancy;
mod dpp;
mod jittered;
mod montecarlo;
mod realspace;
mod regime;
pub(crate) mod spectral;
mod tail;

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{ball_volume, DualVector, Lattice};
use crate::pointgen::PointSet;
use crate::special::{bessel_j_twice, envelope_constant, envelope_sq, BesselOrder};

pub use discrepancy::{l2_discrepancy, l2_discrepancy_sq};
pub use dpp::{expected_variance_dpp, expected_variance_dpp_closed, expected_variance_dpp_with};
pub use jittered::expected_variance_jittered;
pub use montecarlo::variance_montecarlo;
pub use realspace::{lens_volume, variance_realspace};
pub use regime::{fit_regime, DEFAULT_DELTA, fit_regime_with, Regime, RegimeReport, RegimeRow, ThresholdProfile, Verdict};
pub use tail::Truncation;

pub(crate) use realspace::{periodized_self_overlap, realspace_periodized};
pub(crate) use regime::{fit_loglog, verdict as regime_verdict};
pub(crate) use tail::{plan, TailModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarianceMethod {
    Spectral,
    Realspace,
    Montecarlo,
    DppExpected,
    JitteredExpected,
}

impl VarianceMethod {
    pub fn name(self) -> &'static str {
        match self {
            VarianceMethod::Spectral => "spectral",
            VarianceMethod::Realspace => "realspace",
            VarianceMethod::Montecarlo => "montecarlo",
            VarianceMethod::DppExpected => "dpp_expected",
            VarianceMethod::JitteredExpected => "jittered_expected",
        }
    }
}

/// A variance value with its error bound: the certified truncation bound for
/// lattice sums, a standard error for sampling estimates, 0 for exact sums.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceEstimate {
    pub method: VarianceMethod,
    pub value: f64,
    pub error_bound: f64,
    /// Dual truncation radius `W` for lattice sums.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub truncation_radius: Option<f64>,
    /// Sample count for Monte Carlo estimates.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub samples: Option<u64>,
}

impl VarianceEstimate {
    pub(crate) fn exact(method: VarianceMethod, value: f64) -> Self {
        VarianceEstimate {
            method,
            value,
            error_bound: 0.0,
            truncation_radius: None,
            samples: None,
        }
    }
}

/// Checks `0 < R < half_diameter` on a normalized lattice.
pub(crate) fn check_radius(lattice: &Lattice, r: f64) -> Result<()> {
    lattice.require_normalized()?;
    let hd = lattice.half_diameter();
    if !(r > 0.0 && r < hd) {
        return Err(Error::RadiusOutOfRange {
            radius: r,
            half_diameter: hd,
        });
    }
    Ok(())
}

/// Fourier coefficient `a_w(R) = R^{d/2} |w|^{-d/2} J_{d/2}(2π|w|R)` of the
/// ball indicator, for `w ≠ 0` (the `w = 0` coefficient is the ball volume).
pub fn ball_coefficient(lattice: &Lattice, w: &DualVector, r: f64) -> Result<f64> {
    let d = lattice.dim();
    if w.index.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: w.index.len(),
        });
    }
    if w.norm == 0.0 {
        return Err(Error::InvalidParameter(
            "w = 0: the zero coefficient is ball_volume(d, R)".into(),
        ));
    }
    let hd = lattice.half_diameter();
    if !(r > 0.0 && r <= hd) {
        return Err(Error::RadiusOutOfRange {
            radius: r,
            half_diameter: hd,
        });
    }
    let half = d as f64 / 2.0;
    Ok((r / w.norm).powf(half) * bessel_j_twice(d as u32, TAU * w.norm * r))
}

/// `|Σ_j e^{-2πi⟨w, x_j⟩}|²`.
pub fn weyl_sum_sq(x: &PointSet, w: &DualVector) -> Result<f64> {
    let d = x.dim();
    if w.index.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: w.index.len(),
        });
    }
    let (mut re, mut im) = (0.0, 0.0);
    for p in x.points() {
        let phase: f64 = w.index.iter().zip(p).map(|(&m, v)| m as f64 * v).sum();
        let (s, c) = (TAU * phase.fract()).sin_cos();
        re += c;
        im -= s;
    }
    Ok(re * re + im * im)
}

/// Squared coefficient `a_w(R)²` as a function of `ρ = |w| > 0`.
#[inline]
pub(crate) fn coefficient_sq(d: usize, r: f64, rho: f64) -> f64 {
    let j = bessel_j_twice(d as u32, TAU * rho * r);
    (r / rho).powi(d as i32) * j * j
}

/// Pieces of the certified tail of `Σ_{|w|>W} a_w(R)²`: the non-increasing
/// majorant `R^d ρ^{-d} min(1, C_env/(2πρR))` and its power-law constant.
pub(crate) struct CoefficientTail {
    d: usize,
    r: f64,
    c_env: f64,
}

impl CoefficientTail {
    pub(crate) fn new(d: usize, r: f64) -> Result<Self> {
        Ok(CoefficientTail {
            d,
            r,
            c_env: envelope_constant(BesselOrder::half_dim(d)?),
        })
    }

    pub(crate) fn majorant(&self, rho: f64) -> f64 {
        (self.r / rho).powi(self.d as i32) * envelope_sq(self.c_env, TAU * rho * self.r)
    }

    /// `Σ_{|w|>W} a_w(R)² <= bound(W)`.
    pub(crate) fn bound(&self, model: &TailModel, w: f64) -> f64 {
        let c = self.r.powi(self.d as i32 - 1) * self.c_env / (2.0 * PI);
        model.bound(w, |rho| self.majorant(rho), c, self.d as f64 + 1.0)
    }
}

/// Spectral variance `Σ_{w≠0} a_w(R)² |S_w|²`, truncated by a certified tail
/// tolerance.
pub fn variance_spectral(x: &PointSet, r: f64, tol: f64) -> Result<VarianceEstimate> {
    variance_spectral_with(x, r, Truncation::Tolerance(tol))
}

/// Spectral variance with an explicit truncation policy. In tolerance mode an
/// unreachable tolerance yields [`Error::ToleranceUnreachable`] carrying the
/// partial value and bound at the largest radius the cap admits.
pub fn variance_spectral_with(x: &PointSet, r: f64, truncation: Truncation) -> Result<VarianceEstimate> {
    let lattice = x.lattice();
    check_radius(lattice, r)?;
    let d = lattice.dim();
    let n = x.len() as f64;
    let model = TailModel::new(lattice);
    let coeff = CoefficientTail::new(d, r)?;
    let plan = plan(&model, truncation, |w| n * n * coeff.bound(&model, w))?;
    let value = spectral::weighted_weyl_sum(x, plan.radius, |rho| coefficient_sq(d, r, rho))?;
    if let Some(tol) = plan.unmet_tol {
        return Err(Error::ToleranceUnreachable {
            value,
            error_bound: plan.bound,
            radius: plan.radius,
            tol,
        });
    }
    Ok(VarianceEstimate {
        method: VarianceMethod::Spectral,
        value,
        error_bound: plan.bound,
        truncation_radius: Some(plan.radius),
        samples: None,
    })
}

/// `V` for a single point: `Vol + Σ_{λ≠0} lens(|λ|) - Vol²`, which is
/// `p(1-p)` with `p = Vol(B(R))` while `2R < λ₁`.
pub fn single_point_variance(lattice: &Lattice, r: f64) -> Result<f64> {
    check_radius(lattice, r)?;
    let p = ball_volume(lattice.dim(), r);
    Ok(p + periodized_self_overlap(lattice, r) - p * p)
}
