//! Real-space variance `Σ_{k,j} Σ_λ lens(|Δ_kj + λ|) - N² Vol²`.

use std::f64::consts::PI;

use statrs::function::beta::beta_reg;

use super::{check_radius, VarianceEstimate, VarianceMethod};
use crate::error::{Error, Result};
use crate::lattice::enumerate::MAX_DIM;
use crate::lattice::{ball_volume, Lattice};
use crate::pointgen::PointSet;

/// Volume of `B(x, R) ∩ B(y, R)` with `|x - y| = t` in `R^d`.
pub fn lens_volume(d: usize, r: f64, t: f64) -> f64 {
    if t >= 2.0 * r {
        return 0.0;
    }
    if t <= 0.0 {
        return ball_volume(d, r);
    }
    match d {
        1 => 2.0 * r - t,
        2 => 2.0 * r * r * (t / (2.0 * r)).acos() - 0.5 * t * (4.0 * r * r - t * t).sqrt(),
        3 => PI / 12.0 * (4.0 * r + t) * (2.0 * r - t).powi(2),
        _ => lens_volume_beta(d, r, t),
    }
}

/// Two caps of height `R - t/2`: `V_d R^d I_{1-s²}((d+1)/2, 1/2)`, `s = t/2R`,
/// written through the complementary argument for accuracy at small `s`.
pub(crate) fn lens_volume_beta(d: usize, r: f64, t: f64) -> f64 {
    let s = t / (2.0 * r);
    ball_volume(d, r) * (1.0 - beta_reg(0.5, (d as f64 + 1.0) / 2.0, s * s))
}

/// `Σ_{λ≠0} lens(|λ|)`, the overlap of a ball with its own translates.
pub(crate) fn periodized_self_overlap(lattice: &Lattice, r: f64) -> f64 {
    let d = lattice.dim();
    let mut s = 0.0;
    lattice.for_each_translate_within(&[0.0; MAX_DIM][..d], 2.0 * r, |dist| {
        if dist > 0.0 {
            s += lens_volume(d, r, dist);
        }
    });
    s
}

/// Sum of periodized lens volumes `Σ_λ lens(|Δ + λ|)` for one pair.
#[inline]
pub(crate) fn pair_overlap(lattice: &Lattice, d: usize, r: f64, a: &[f64], b: &[f64]) -> f64 {
    let mut delta = [0.0f64; MAX_DIM];
    for i in 0..d {
        let t = a[i] - b[i];
        delta[i] = t - t.round();
    }
    let mut s = 0.0;
    lattice.for_each_translate_within(&delta[..d], 2.0 * r, |dist| s += lens_volume(d, r, dist));
    s
}

/// Variance of the periodized count for any `0 < R < half_diameter`.
pub(crate) fn realspace_periodized(x: &PointSet, r: f64) -> Result<f64> {
    let lattice = x.lattice();
    check_radius(lattice, r)?;
    let d = lattice.dim();
    let n = x.len();
    let p = ball_volume(d, r);
    let mut off = 0.0;
    for k in 1..n {
        let a = x.point(k);
        let mut row = 0.0;
        for j in 0..k {
            row += pair_overlap(lattice, d, r, a, x.point(j));
        }
        off += row;
    }
    let nf = n as f64;
    let diag = nf * (p + periodized_self_overlap(lattice, r));
    Ok(diag + 2.0 * off - nf * nf * p * p)
}

/// Exact real-space variance; requires the embedded-ball regime `2R < λ₁`.
pub fn variance_realspace(x: &PointSet, r: f64) -> Result<VarianceEstimate> {
    let lattice = x.lattice();
    check_radius(lattice, r)?;
    let shortest = lattice.shortest_vector_length();
    if 2.0 * r >= shortest {
        return Err(Error::BallNotEmbedded {
            diameter: 2.0 * r,
            shortest,
        });
    }
    Ok(VarianceEstimate::exact(VarianceMethod::Realspace, realspace_periodized(x, r)?))
}
