//! Certified bounds for radial tails `Σ_{w ∈ Λ*, |w| > W} f(|w|)`.
//!
//! Every dual point `w` owns the translated cell `w + P` of the dual
//! fundamental parallelepiped; these cells are disjoint, have volume
//! `covol(Λ*)` and sit inside `B(|w| + h) \ B(|w| - h)` with `h` the dual half
//! diameter. So the number of dual points with `|w| ∈ [a, b)` is at most
//! `V_d ((b + h)^d - (a - h)_+^d) / covol(Λ*)`. Unit-width shells are bounded
//! one by one up to `K = 4⌊W⌋ + 64`; beyond `K` the decay `f(r) <= C r^{-p}`
//! (`p > d`) gives a closed form.

use crate::error::{Error, Result};
use crate::lattice::{ball_volume, enumeration_cap, Lattice};

#[derive(Debug, Clone, Copy)]
pub(crate) struct TailModel {
    d: usize,
    h: f64,
    lambda1: f64,
    covol_dual: f64,
    unit_ball: f64,
}

impl TailModel {
    pub(crate) fn new(lattice: &Lattice) -> Self {
        TailModel {
            d: lattice.dim(),
            h: lattice.dual_half_diameter(),
            lambda1: lattice.dual_shortest_length(),
            covol_dual: 1.0 / lattice.covolume(),
            unit_ball: ball_volume(lattice.dim(), 1.0),
        }
    }

    fn shell_count(&self, a: f64, b: f64) -> f64 {
        let d = self.d as i32;
        self.unit_ball * ((b + self.h).powi(d) - (a - self.h).max(0.0).powi(d)) / self.covol_dual
    }

    /// Bound on `Σ_{|w| > W} f(|w|)` for `f` non-increasing with
    /// `f(r) <= c r^{-p}`, `p > d`.
    pub(crate) fn bound<F: Fn(f64) -> f64>(&self, radius: f64, f: F, c: f64, p: f64) -> f64 {
        debug_assert!(p > self.d as f64);
        let k0 = radius.max(0.0).floor() as u64;
        let kmax = (4 * k0 + 64).max((4.0 * self.h).ceil() as u64 + 64);
        let mut total = 0.0;
        for k in k0..kmax {
            let inner = if k == k0 { radius.max(0.0) } else { k as f64 };
            let outer = (k + 1) as f64;
            if outer <= self.lambda1 {
                continue;
            }
            let r_lo = inner.max(self.lambda1);
            total += self.shell_count(r_lo, outer) * f(r_lo);
        }
        let kf = kmax as f64;
        let d = self.d as f64;
        let q = p - d + 1.0;
        let shells = d * (1.0 + 2.0 * self.h) * (1.0 + (1.0 + self.h) / kf).powf(d - 1.0);
        let power_sum = kf.powf(-q) + kf.powf(1.0 - q) / (q - 1.0);
        total + self.unit_ball * shells * c * power_sum / self.covol_dual
    }

    /// Largest radius whose half-space enumeration stays within the cap.
    pub(crate) fn radius_at_cap(&self) -> f64 {
        let cap = enumeration_cap() as f64;
        let r = (2.0 * cap * self.covol_dual / self.unit_ball).powf(1.0 / self.d as f64) - self.h;
        r.max(0.0).floor()
    }

    /// Smallest integer radius with `bound_at(W) <= tol`, or the cap radius
    /// with `false` when even that is not enough.
    pub(crate) fn solve<B: Fn(f64) -> f64>(&self, tol: f64, bound_at: B) -> Result<(f64, bool)> {
        if !(tol > 0.0) {
            return Err(Error::InvalidParameter(format!("tolerance must be > 0, got {tol}")));
        }
        let top = self.radius_at_cap();
        if bound_at(top) > tol {
            return Ok((top, false));
        }
        let (mut lo, mut hi) = (0u64, top as u64);
        if bound_at(0.0) <= tol {
            return Ok((0.0, true));
        }
        // Invariant: bound_at(lo) > tol >= bound_at(hi).
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if bound_at(mid as f64) <= tol {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok((hi as f64, true))
    }
}

/// Truncation policy for dual-lattice sums.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Truncation {
    /// Grow the radius until the certified tail bound is below this value.
    Tolerance(f64),
    /// Sum exactly over `0 < |w| <= W` and report the tail bound at `W`.
    Radius(f64),
}

impl Truncation {
    pub(crate) fn validate(self) -> Result<Self> {
        match self {
            Truncation::Tolerance(t) if !(t > 0.0) || !t.is_finite() => Err(Error::InvalidParameter(format!(
                "tolerance must be a positive number, got {t}"
            ))),
            Truncation::Radius(w) if !(w >= 0.0) || !w.is_finite() => Err(Error::InvalidParameter(format!(
                "truncation radius must be >= 0, got {w}"
            ))),
            t => Ok(t),
        }
    }
}

/// Resolved truncation: the radius to sum to, its bound, and whether a
/// requested tolerance was met.
pub(crate) struct Plan {
    pub radius: f64,
    pub bound: f64,
    pub unmet_tol: Option<f64>,
}

pub(crate) fn plan<B: Fn(f64) -> f64>(model: &TailModel, trunc: Truncation, bound_at: B) -> Result<Plan> {
    match trunc.validate()? {
        Truncation::Radius(w) => Ok(Plan {
            radius: w,
            bound: bound_at(w),
            unmet_tol: None,
        }),
        Truncation::Tolerance(tol) => {
            let (w, met) = model.solve(tol, &bound_at)?;
            Ok(Plan {
                radius: w,
                bound: bound_at(w),
                unmet_tol: (!met).then_some(tol),
            })
        }
    }
}
