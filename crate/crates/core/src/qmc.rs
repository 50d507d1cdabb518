//! Reproducing kernel of `W^{α,2}` on the torus, worst-case error of
//! equal-weight cubature, and the variance bound `V ≪ R^{d-1} N² wce²` for
//! `α = (d+1)/2`.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Lattice, TorusPoint};
use crate::pointgen::PointSet;
use crate::variance::spectral::{for_each_half_space, weighted_weyl_sum};
use crate::variance::{
    fit_loglog, plan, variance_spectral_with, Regime, RegimeReport, RegimeRow, TailModel, Truncation, Verdict,
};

/// Default certified tolerance on the kernel and `wce²` tails.
pub const DEFAULT_WCE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct KernelSpec {
    lattice: Lattice,
    alpha: f64,
    truncation: Truncation,
}

impl KernelSpec {
    pub fn new(lattice: &Lattice, alpha: f64, truncation_tol: f64) -> Result<Self> {
        KernelSpec::with_truncation(lattice, alpha, Truncation::Tolerance(truncation_tol))
    }

    pub fn with_truncation(lattice: &Lattice, alpha: f64, truncation: Truncation) -> Result<Self> {
        lattice.require_normalized()?;
        let d = lattice.dim() as f64;
        if !(alpha > d / 2.0) || !alpha.is_finite() {
            return Err(Error::InvalidParameter(format!("alpha must exceed d/2 = {}, got {alpha}", d / 2.0)));
        }
        Ok(KernelSpec {
            lattice: lattice.clone(),
            alpha,
            truncation: truncation.validate()?,
        })
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn truncation(&self) -> Truncation {
        self.truncation
    }

    /// `(1 + 4π²ρ²)^{-α}`.
    #[inline]
    pub fn weight(&self, rho: f64) -> f64 {
        (1.0 + 4.0 * PI * PI * rho * rho).powf(-self.alpha)
    }

    /// Certified bound on `Σ_{|w|>W} (1 + 4π²|w|²)^{-α}`.
    fn tail(&self, model: &TailModel, w: f64) -> f64 {
        let c = TAU.powf(-2.0 * self.alpha);
        model.bound(w, |rho| self.weight(rho), c, 2.0 * self.alpha)
    }

    /// Truncation radius and tail bound; errors if a tolerance is out of reach.
    fn resolve(&self) -> Result<(f64, f64)> {
        let model = TailModel::new(&self.lattice);
        let p = plan(&model, self.truncation, |w| self.tail(&model, w))?;
        Ok((p.radius, p.bound))
    }
}

/// `K(x, y) = Σ_{|w| <= W} (1 + 4π²|w|²)^{-α} cos(2π⟨w, x - y⟩)`.
pub fn kernel_eval(k: &KernelSpec, x: &TorusPoint, y: &TorusPoint) -> Result<f64> {
    k.lattice.check_point(x.frac())?;
    k.lattice.check_point(y.frac())?;
    let (radius, bound) = k.resolve()?;
    if let Truncation::Tolerance(tol) = k.truncation {
        if bound > tol {
            return Err(Error::ToleranceUnreachable {
                value: f64::NAN,
                error_bound: bound,
                radius,
                tol,
            });
        }
    }
    let delta: Vec<f64> = x.frac().iter().zip(y.frac()).map(|(a, b)| a - b).collect();
    let mut half = 0.0;
    for_each_half_space(&k.lattice, radius, |m, rho| {
        let phase: f64 = m.iter().zip(&delta).map(|(&mi, t)| mi as f64 * t).sum();
        // |phase| makes the value bitwise symmetric in (x, y).
        half += k.weight(rho) * (TAU * phase.abs().fract()).cos();
    });
    Ok(1.0 + 2.0 * half)
}

/// Worst-case error with its certified bound on the neglected part of `wce²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WceResult {
    pub wce: f64,
    pub wce_sq: f64,
    pub tail_bound: f64,
    pub truncation_radius: f64,
}

/// `wce(X)² = N^{-2} Σ_{w≠0} (1 + 4π²|w|²)^{-α} |S_w|²`.
pub fn wce(x: &PointSet, k: &KernelSpec) -> Result<f64> {
    Ok(wce_detailed(x, k)?.wce)
}

/// [`wce`] with truncation details. `|S_w|² <= N²`, so the tail of `wce²` is
/// at most the weight tail.
pub fn wce_detailed(x: &PointSet, k: &KernelSpec) -> Result<WceResult> {
    if x.lattice() != &k.lattice {
        return Err(Error::InvalidParameter("point set and kernel use different lattices".into()));
    }
    let (radius, bound) = k.resolve()?;
    let n = x.len() as f64;
    let wce_sq = weighted_weyl_sum(x, radius, |rho| k.weight(rho))? / (n * n);
    if let Truncation::Tolerance(tol) = k.truncation {
        if bound > tol {
            return Err(Error::ToleranceUnreachable {
                value: wce_sq.sqrt(),
                error_bound: bound,
                radius,
                tol,
            });
        }
    }
    Ok(WceResult {
        wce: wce_sq.sqrt(),
        wce_sq,
        tail_bound: bound,
        truncation_radius: radius,
    })
}

/// Fits `ln wce` against `ln N`; consistent with a QMC design if the slope is
/// at most `-α/d + 0.1` with `r² >= 0.9`.
pub fn qmc_design_check(sets: &[PointSet], k: &KernelSpec) -> Result<RegimeReport> {
    if sets.len() < 4 {
        return Err(Error::InvalidParameter(format!("need at least 4 point sets, got {}", sets.len())));
    }
    let mut rows = Vec::with_capacity(sets.len());
    for x in sets {
        let w = wce(x, k)?;
        rows.push(RegimeRow {
            n: x.len(),
            r_or_t: k.alpha,
            variance: w,
        });
    }
    Ok(qmc_design_fit(rows, k.alpha, k.lattice.dim()))
}

/// The fit behind [`qmc_design_check`] for precomputed rows whose `variance`
/// field holds the worst-case error.
pub fn qmc_design_fit(rows: Vec<RegimeRow>, alpha: f64, d: usize) -> RegimeReport {
    let threshold = -alpha / d as f64 + 0.1;
    let fit = if rows.iter().all(|r| r.variance > 0.0) {
        let x: Vec<f64> = rows.iter().map(|r| (r.n as f64).ln()).collect();
        let y: Vec<f64> = rows.iter().map(|r| r.variance.ln()).collect();
        fit_loglog(&x, &y)
    } else {
        None
    };
    let (slope, constant, r2, verdict) = match fit {
        Some((b, a, r2)) => (b, a.exp(), r2, crate::variance::regime_verdict(b, r2, threshold)),
        None => (0.0, 0.0, 0.0, Verdict::Inconclusive),
    };
    RegimeReport {
        regime: Regime::QmcDesign,
        fitted_exponent: slope,
        fitted_constant: constant,
        r_squared: r2,
        verdict,
        threshold,
        log_corrected_exponent: None,
        inputs: rows,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lemma1Check {
    pub lhs: f64,
    pub rhs_without_constant: f64,
    pub ratio: f64,
}

/// Compares `V(X, R)` with `R^{d-1} N² wce(X)²` at `α = (d+1)/2`, both lattice
/// sums truncated by `truncation`.
pub fn lemma1_bound_check(x: &PointSet, r: f64, truncation: Truncation) -> Result<Lemma1Check> {
    let d = x.dim();
    let lhs = variance_spectral_with(x, r, truncation)?.value;
    let k = KernelSpec::with_truncation(x.lattice(), (d as f64 + 1.0) / 2.0, truncation)?;
    let w = wce_detailed(x, &k)?;
    let n = x.len() as f64;
    let rhs = r.powi(d as i32 - 1) * n * n * w.wce_sq;
    Ok(Lemma1Check {
        lhs,
        rhs_without_constant: rhs,
        ratio: lhs / rhs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::enumerate_dual;
    use crate::pointgen::{gen_sublattice, gen_uniform, Provenance};
    use crate::rng::RngSpec;

    fn z2() -> Lattice {
        Lattice::identity(2).unwrap()
    }

    fn tp(v: &[f64]) -> TorusPoint {
        TorusPoint::new(v.to_vec()).unwrap()
    }

    #[test]
    fn alpha_must_exceed_half_dim() {
        assert!(KernelSpec::new(&z2(), 1.0, 1e-6).is_err());
        assert!(KernelSpec::new(&z2(), 1.01, 1e-6).is_ok());
    }

    #[test]
    fn kernel_diagonal_and_symmetry() {
        let k = KernelSpec::with_truncation(&z2(), 2.0, Truncation::Radius(60.0)).unwrap();
        let x = tp(&[0.1, 0.8]);
        let y = tp(&[0.65, 0.3]);
        let kxx = kernel_eval(&k, &x, &x).unwrap();
        let kxy = kernel_eval(&k, &x, &y).unwrap();
        assert_eq!(kxy.to_bits(), kernel_eval(&k, &y, &x).unwrap().to_bits());
        assert!(kxy.abs() <= kxx);
    }

    #[test]
    fn kernel_matches_wide_brute_force() {
        let k = KernelSpec::new(&z2(), 2.0, 4e-9).unwrap();
        let got = kernel_eval(&k, &tp(&[0.5, 0.5]), &tp(&[0.0, 0.0])).unwrap();
        let mut brute = 0.0;
        for w in enumerate_dual(&z2(), 200.0).unwrap() {
            let s = (w.index[0] + w.index[1]) as f64 * 0.5;
            brute += k.weight(w.norm) * (TAU * s).cos();
        }
        assert!((got - brute).abs() < 1e-8);
    }

    #[test]
    fn single_point_wce() {
        let k = KernelSpec::new(&z2(), 2.0, 4e-9).unwrap();
        let x = PointSet::from_rows(z2(), &[vec![0.3, 0.4]], Provenance::default()).unwrap();
        let got = wce_detailed(&x, &k).unwrap();
        let oracle: f64 = enumerate_dual(&z2(), 1000.0).unwrap()[1..].iter().map(|w| k.weight(w.norm)).sum();
        assert!((got.wce_sq - oracle).abs() < 1e-8);
    }

    #[test]
    fn sublattice_aliasing() {
        let k = KernelSpec::with_truncation(&z2(), 2.0, Truncation::Radius(120.0)).unwrap();
        let x = gen_sublattice(&z2(), 4).unwrap();
        let got = wce_detailed(&x, &k).unwrap().wce_sq;
        let alias: f64 = enumerate_dual(&z2(), 120.0).unwrap()[1..]
            .iter()
            .filter(|w| w.index.iter().all(|m| m % 4 == 0))
            .map(|w| k.weight(w.norm))
            .sum();
        assert!((got - alias).abs() <= 1e-12 * alias);
    }

    #[test]
    fn translation_invariance_and_alpha_monotone() {
        let x = gen_uniform(&z2(), 11, RngSpec::new(6, 0)).unwrap();
        let y = x.translated(&[0.31, 0.9]).unwrap();
        let k2 = KernelSpec::with_truncation(&z2(), 2.0, Truncation::Radius(80.0)).unwrap();
        let k3 = KernelSpec::with_truncation(&z2(), 3.0, Truncation::Radius(80.0)).unwrap();
        let a = wce(&x, &k2).unwrap();
        assert!((a - wce(&y, &k2).unwrap()).abs() <= 1e-12 * a);
        assert!(wce(&x, &k3).unwrap() <= a + 1e-12);
    }

    #[test]
    fn kernel_route_matches_weyl_route() {
        let k = KernelSpec::with_truncation(&z2(), 2.0, Truncation::Radius(50.0)).unwrap();
        let x = gen_uniform(&z2(), 9, RngSpec::new(2, 3)).unwrap();
        let pts = x.torus_points();
        let mut s = 0.0;
        for a in &pts {
            for b in &pts {
                s += kernel_eval(&k, a, b).unwrap();
            }
        }
        let via_kernel = s / 81.0 - 1.0;
        assert!((via_kernel - wce_detailed(&x, &k).unwrap().wce_sq).abs() < 1e-8);
    }

    #[test]
    fn lemma1_ratio_positive() {
        let x = gen_uniform(&z2(), 8, RngSpec::new(1, 0)).unwrap();
        let c = lemma1_bound_check(&x, 0.2, Truncation::Radius(100.0)).unwrap();
        assert!(c.ratio > 0.0 && c.ratio.is_finite());
    }

    #[test]
    fn duplicated_sets_do_not_decay() {
        let k = KernelSpec::with_truncation(&z2(), 2.0, Truncation::Radius(40.0)).unwrap();
        let base = gen_uniform(&z2(), 4, RngSpec::new(8, 0)).unwrap();
        let sets: Vec<PointSet> = [1, 2, 4, 8].iter().map(|&t| base.replicated(t).unwrap()).collect();
        let rep = qmc_design_check(&sets, &k).unwrap();
        assert!(rep.fitted_exponent.abs() < 1e-10);
        assert_eq!(rep.verdict, Verdict::Inconsistent);
    }
}
