//! Finite-size scaling fits for the three hyperuniformity regimes.

use serde::{Deserialize, Serialize};

use super::{check_radius, VarianceEstimate};
use crate::error::{Error, Result};
use crate::lattice::ball_volume;

/// Minimum coefficient of determination for a definite verdict.
pub const MIN_R_SQUARED: f64 = 0.9;

/// Default slack `δ` on the regime thresholds.
pub const DEFAULT_DELTA: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// Fixed `R`, growing `N`: hyperuniform if `V = o(N)`.
    Large,
    /// Shrinking `R` with `N Vol(B(R)) → ∞`: hyperuniform if `V = o(N Vol)`.
    Small,
    /// `R = t N^{-1/d}` at fixed `N`: hyperuniform if `V = O(t^{d-1})`.
    Threshold,
    /// Worst-case error against `N`: a QMC design decays like `N^{-α/d}`.
    QmcDesign,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Consistent,
    Inconsistent,
    Inconclusive,
}

/// One observation: `N`, the radius `R` (or `t` in the threshold regime) and
/// the variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeRow {
    pub n: usize,
    pub r_or_t: f64,
    pub variance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub regime: Regime,
    pub fitted_exponent: f64,
    pub fitted_constant: f64,
    pub r_squared: f64,
    pub verdict: Verdict,
    /// Slope threshold the verdict compared against.
    pub threshold: f64,
    /// Threshold regime only: exponent of `t` after dividing out `ln t`.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub log_corrected_exponent: Option<f64>,
    pub inputs: Vec<RegimeRow>,
}

/// Ordinary least squares `y = a + b x`; returns `(b, a, r²)`, or `None`
/// when all `x` coincide. Constant `y` is a perfect fit (`r² = 1`).
pub(crate) fn fit_loglog(x: &[f64], y: &[f64]) -> Option<(f64, f64, f64)> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my) * (v - my)).sum();
    if !(sxx > 1e-300) {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    // Rounding noise on constant data must not read as a poor fit.
    let r2 = if syy <= 1e-24 * n * (1.0 + my * my) {
        1.0
    } else {
        (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
    };
    Some((slope, intercept, r2))
}

pub(crate) fn verdict(slope: f64, r2: f64, threshold: f64) -> Verdict {
    if r2 < MIN_R_SQUARED {
        Verdict::Inconclusive
    } else if slope <= threshold {
        Verdict::Consistent
    } else {
        Verdict::Inconsistent
    }
}

/// [`fit_regime_with`] with the default `δ`.
pub fn fit_regime(rows: &[RegimeRow], regime: Regime, dim: usize) -> Result<RegimeReport> {
    fit_regime_with(rows, regime, dim, DEFAULT_DELTA)
}

/// Fits `ln V` against `ln N` (large), `ln(N Vol(B(R)))` (small) or `ln t`
/// (threshold). Verdicts: consistent if the slope is at most `1 - δ` (large,
/// small) or `d - 1 + δ` (threshold) with `r² >= 0.9`; inconsistent if above
/// with `r² >= 0.9`; otherwise inconclusive.
pub fn fit_regime_with(rows: &[RegimeRow], regime: Regime, dim: usize, delta: f64) -> Result<RegimeReport> {
    if rows.len() < 4 {
        return Err(Error::InvalidParameter(format!(
            "need at least 4 rows to fit, got {}",
            rows.len()
        )));
    }
    if regime == Regime::QmcDesign {
        return Err(Error::InvalidParameter("use qmc_design_check for worst-case error fits".into()));
    }
    for (i, r) in rows.iter().enumerate() {
        if !(r.variance > 0.0) || !r.variance.is_finite() {
            return Err(Error::NonPositiveVariance { index: i });
        }
        if r.n == 0 || !(r.r_or_t > 0.0) {
            return Err(Error::InvalidParameter(format!("row {i}: need N >= 1 and R or t > 0")));
        }
    }
    let y: Vec<f64> = rows.iter().map(|r| r.variance.ln()).collect();
    let x: Vec<f64> = rows
        .iter()
        .map(|r| match regime {
            Regime::Large => (r.n as f64).ln(),
            Regime::Small => (r.n as f64 * ball_volume(dim, r.r_or_t)).ln(),
            _ => r.r_or_t.ln(),
        })
        .collect();
    let threshold = match regime {
        Regime::Threshold => dim as f64 - 1.0 + delta,
        _ => 1.0 - delta,
    };
    let log_corrected_exponent = if regime == Regime::Threshold && rows.iter().all(|r| r.r_or_t > 1.0) {
        let yc: Vec<f64> = rows.iter().zip(&y).map(|(r, v)| v - r.r_or_t.ln().ln()).collect();
        fit_loglog(&x, &yc).map(|f| f.0)
    } else {
        None
    };
    let (fitted_exponent, fitted_constant, r_squared, verdict) = match fit_loglog(&x, &y) {
        Some((b, a, r2)) => (b, a.exp(), r2, verdict(b, r2, threshold)),
        None => (0.0, 0.0, 0.0, Verdict::Inconclusive),
    };
    Ok(RegimeReport {
        regime,
        fitted_exponent,
        fitted_constant,
        r_squared,
        verdict,
        threshold,
        log_corrected_exponent,
        inputs: rows.to_vec(),
    })
}

/// Variances at the threshold radii `R = t N^{-1/d}` for one `N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdProfile {
    pub n: usize,
    pub t_values: Vec<f64>,
    pub variance_at_t: Vec<VarianceEstimate>,
}

impl ThresholdProfile {
    /// Evaluates `variance(R)` at every `t`, rejecting radii outside
    /// `(0, half_diameter)`.
    pub fn compute<F>(lattice: &crate::lattice::Lattice, n: usize, t_values: &[f64], mut variance: F) -> Result<Self>
    where
        F: FnMut(f64) -> Result<VarianceEstimate>,
    {
        if n == 0 || t_values.is_empty() {
            return Err(Error::InvalidParameter("threshold profile needs N >= 1 and some t".into()));
        }
        let scale = (n as f64).powf(-1.0 / lattice.dim() as f64);
        let mut out = Vec::with_capacity(t_values.len());
        for &t in t_values {
            let r = t * scale;
            check_radius(lattice, r)?;
            out.push(variance(r)?);
        }
        Ok(ThresholdProfile {
            n,
            t_values: t_values.to_vec(),
            variance_at_t: out,
        })
    }

    pub fn rows(&self) -> Vec<RegimeRow> {
        self.t_values
            .iter()
            .zip(&self.variance_at_t)
            .map(|(&t, v)| RegimeRow {
                n: self.n,
                r_or_t: t,
                variance: v.value,
            })
            .collect()
    }
}
