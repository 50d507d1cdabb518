//! Projection DPP with kernel `K_N(x, y) = Σ_{w ∈ D_N} e^{2πi⟨x−y, w⟩}`.
//!
//! Sequential sampling: with orthonormal `e_1..e_k` spanning the features of
//! the accepted points, the next point has density
//! `(N − Σ |⟨e_i, φ(x)⟩|²) / (N − k)`; proposals are uniform and accepted
//! with probability `residual² / N`, which is at most 1 because `|φ(x)|² = N`.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::Rng;

use super::{PointSet, Provenance, SpectrumSelection};
use crate::error::{Error, Result};
use crate::lattice::TorusPoint;
use crate::rng::RngSpec;

/// Default proposal budget per accepted point is this times `N`.
pub const DEFAULT_ATTEMPTS_PER_POINT: u64 = 1000;

/// Candidates whose residual falls below this fraction of `N` are rejected
/// outright: their features are numerically inside the current span.
const RESIDUAL_FLOOR: f64 = 1e-8;

pub fn dpp_kernel_eval(s: &SpectrumSelection, x: &TorusPoint, y: &TorusPoint) -> Result<Complex64> {
    s.lattice.check_point(x.frac())?;
    s.lattice.check_point(y.frac())?;
    if x.frac() == y.frac() {
        return Ok(Complex64::new(s.len() as f64, 0.0));
    }
    let delta: Vec<f64> = x.frac().iter().zip(y.frac()).map(|(a, b)| a - b).collect();
    let mut acc = Complex64::new(0.0, 0.0);
    for w in s.vectors() {
        let phase: f64 = w.index.iter().zip(&delta).map(|(&m, t)| m as f64 * t).sum();
        let (sn, cs) = (TAU * phase).sin_cos();
        acc += Complex64::new(cs, sn);
    }
    Ok(acc)
}

pub fn gen_dpp(s: &SpectrumSelection, spec: RngSpec) -> Result<PointSet> {
    gen_dpp_with_cap(s, spec, DEFAULT_ATTEMPTS_PER_POINT * s.len() as u64)
}

/// As [`gen_dpp`] with an explicit per-point proposal budget.
pub fn gen_dpp_with_cap(s: &SpectrumSelection, spec: RngSpec, max_attempts: u64) -> Result<PointSet> {
    let n = s.len();
    let d = s.lattice.dim();
    let nf = n as f64;
    let index: Vec<f64> = s
        .vectors()
        .iter()
        .flat_map(|w| w.index.iter().map(|&m| m as f64))
        .collect();
    let mut rng = spec.rng();
    let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(n);
    let mut coords = Vec::with_capacity(n * d);
    let mut x = vec![0.0; d];
    let mut phi = vec![Complex64::new(0.0, 0.0); n];
    let mut coef = vec![Complex64::new(0.0, 0.0); n];

    for step in 0..n {
        let mut attempts = 0u64;
        loop {
            if attempts >= max_attempts {
                return Err(Error::SamplerStalled { step, attempts });
            }
            attempts += 1;
            for v in x.iter_mut() {
                *v = rng.random::<f64>();
            }
            features(&index, d, &x, &mut phi);
            let residual = project_out(&basis, &mut phi, &mut coef);
            let u: f64 = rng.random();
            if residual < RESIDUAL_FLOOR * nf || u * nf >= residual {
                continue;
            }
            // Second Gram–Schmidt pass restores orthogonality lost to cancellation.
            let r2 = project_out(&basis, &mut phi, &mut coef);
            let inv = 1.0 / r2.sqrt();
            basis.push(phi.iter().map(|c| c * inv).collect());
            coords.extend_from_slice(&x);
            break;
        }
    }
    let mut prov = Provenance::new("dpp", Some(spec.seed)).with("N", n).with("stream_id", spec.stream_id);
    prov.params.insert("max_attempts".into(), max_attempts.into());
    PointSet::from_flat(s.lattice.clone(), coords, prov)
}

/// `φ(x)_j = e^{2πi m_j·x}`.
fn features(index: &[f64], d: usize, x: &[f64], out: &mut [Complex64]) {
    for (j, o) in out.iter_mut().enumerate() {
        let m = &index[j * d..(j + 1) * d];
        let phase: f64 = m.iter().zip(x).map(|(a, b)| a * b).sum();
        let (sn, cs) = (TAU * phase.fract()).sin_cos();
        *o = Complex64::new(cs, sn);
    }
}

/// Removes the span of `basis` from `v` in place; returns `|v|²` afterwards.
fn project_out(basis: &[Vec<Complex64>], v: &mut [Complex64], coef: &mut [Complex64]) -> f64 {
    for (e, c) in basis.iter().zip(coef.iter_mut()) {
        *c = e.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum();
    }
    for (e, &c) in basis.iter().zip(coef.iter()) {
        for (vi, ei) in v.iter_mut().zip(e) {
            *vi -= c * ei;
        }
    }
    v.iter().map(|c| c.norm_sqr()).sum()
}
