//! Expected number variance of the projection DPP with support `D_N`:
//! `E V = Σ_{w' ∈ D_N} Σ_{w ∉ D_N} a_{w-w'}(R)²`.
//!
//! Writing the inner sum as all `u ≠ 0` minus the pairs inside `D_N`, the
//! truncated value is `N S_W - P_W` with `S_W = Σ_{0<|u|<=W} a_u²` and
//! `P_W = Σ_{w≠w' ∈ D_N, |w-w'|<=W} a_{w-w'}²`; the neglected part is at most
//! `N Σ_{|u|>W} a_u²`.

use rayon::prelude::*;

use super::spectral::for_each_half_space;
use super::{check_radius, coefficient_sq, plan, CoefficientTail, TailModel, Truncation, VarianceEstimate, VarianceMethod};
use crate::error::{Error, Result};
use crate::lattice::ball_volume;
use crate::pointgen::SpectrumSelection;

pub fn expected_variance_dpp(s: &SpectrumSelection, r: f64, tol: f64) -> Result<VarianceEstimate> {
    expected_variance_dpp_with(s, r, Truncation::Tolerance(tol))
}

pub fn expected_variance_dpp_with(s: &SpectrumSelection, r: f64, truncation: Truncation) -> Result<VarianceEstimate> {
    let lattice = s.lattice();
    check_radius(lattice, r)?;
    let d = lattice.dim();
    let n = s.len() as f64;
    let model = TailModel::new(lattice);
    let coeff = CoefficientTail::new(d, r)?;
    let plan = plan(&model, truncation, |w| n * coeff.bound(&model, w))?;

    let mut rows = Vec::new();
    let mut visited = 0usize;
    let cap = crate::lattice::enumeration_cap();
    // Norms first, then the Bessel work in parallel with an ordered reduction.
    for_each_half_space(lattice, plan.radius, |_, rho| {
        visited += 1;
        rows.push(rho);
    });
    if visited > cap {
        return Err(Error::EnumerationCapExceeded { requested: visited, cap });
    }
    let full: f64 = 2.0
        * rows
            .par_chunks(4096)
            .map(|c| c.iter().map(|&rho| coefficient_sq(d, r, rho)).sum::<f64>())
            .collect::<Vec<f64>>()
            .iter()
            .sum::<f64>();
    let pairs = pair_sum(s, r, Some(plan.radius));
    let value = n * full - pairs;
    if let Some(tol) = plan.unmet_tol {
        return Err(Error::ToleranceUnreachable {
            value,
            error_bound: plan.bound,
            radius: plan.radius,
            tol,
        });
    }
    Ok(VarianceEstimate {
        method: VarianceMethod::DppExpected,
        value,
        error_bound: plan.bound,
        truncation_radius: Some(plan.radius),
        samples: None,
    })
}

/// `Σ_{w≠w' ∈ D_N} a_{w-w'}(R)²`, optionally restricted to `|w-w'| <= W`.
fn pair_sum(s: &SpectrumSelection, r: f64, radius: Option<f64>) -> f64 {
    let d = s.lattice().dim();
    let v = s.vectors();
    let limit = radius.map(|w| w * w).unwrap_or(f64::INFINITY);
    let rows: Vec<f64> = (1..v.len())
        .into_par_iter()
        .map(|k| {
            let mut acc = 0.0;
            for j in 0..k {
                let n2: f64 = v[k]
                    .cartesian
                    .iter()
                    .zip(&v[j].cartesian)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                if n2 <= limit {
                    acc += coefficient_sq(d, r, n2.sqrt());
                }
            }
            acc
        })
        .collect();
    2.0 * rows.iter().sum::<f64>()
}

/// Closed form without truncation: Parseval gives
/// `Σ_{u≠0} a_u² = Vol + Σ_{λ≠0} lens(|λ|) - Vol²`, so
/// `E V = N (Vol + overlap - Vol²) - Σ_{w≠w' ∈ D_N} a_{w-w'}²`, a finite sum.
pub fn expected_variance_dpp_closed(s: &SpectrumSelection, r: f64) -> Result<VarianceEstimate> {
    let lattice = s.lattice();
    check_radius(lattice, r)?;
    let p = ball_volume(lattice.dim(), r);
    let all = p + super::periodized_self_overlap(lattice, r) - p * p;
    let value = s.len() as f64 * all - pair_sum(s, r, None);
    Ok(VarianceEstimate::exact(VarianceMethod::DppExpected, value))
}
