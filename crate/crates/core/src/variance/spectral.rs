//! Weighted sums of squared Weyl sums over a dual ball, the kernel shared by
//! the spectral variance and the worst-case error.

use std::f64::consts::TAU;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::enumerate::{for_each_dual_row, MAX_DIM};
use crate::lattice::{enumeration_cap, Lattice};
use crate::pointgen::PointSet;

/// Rows handed to one task; the chunking is fixed so the reduction order
/// does not depend on the thread count.
const ROW_CHUNK: usize = 8;

/// Phasors are recomputed from scratch this often along a row.
const REANCHOR: i64 = 32;

#[derive(Clone, Copy)]
pub(crate) struct Row {
    prefix: [i64; MAX_DIM],
    lo: i64,
    hi: i64,
}

/// Half-space rows of the dual ball of radius `radius`, with the number of
/// index vectors they cover.
pub(crate) fn half_space_rows(lattice: &Lattice, radius: f64) -> Result<Vec<Row>> {
    let d = lattice.dim();
    let mut rows = Vec::new();
    let mut visited = 0usize;
    for_each_dual_row(lattice, radius, true, |prefix, lo, hi| {
        let mut p = [0i64; MAX_DIM];
        p[..d - 1].copy_from_slice(prefix);
        rows.push(Row { prefix: p, lo, hi });
        visited += (hi - lo + 1) as usize;
    });
    let cap = enumeration_cap();
    if visited > cap {
        return Err(Error::EnumerationCapExceeded { requested: visited, cap });
    }
    Ok(rows)
}

/// Calls `f(index, norm)` for every `w` with `0 < |w| <= radius` in one half
/// space, in a fixed order.
pub(crate) fn for_each_half_space<F: FnMut(&[i64], f64)>(lattice: &Lattice, radius: f64, mut f: F) {
    let d = lattice.dim();
    let r2 = radius * radius;
    for_each_dual_row(lattice, radius, true, |prefix, lo, hi| {
        let mut m = [0i64; MAX_DIM];
        m[..d - 1].copy_from_slice(prefix);
        for t in lo..=hi {
            m[d - 1] = t;
            let n2 = lattice.dual_norm_sq(&m[..d]);
            if n2 > 0.0 && n2 <= r2 {
                f(&m[..d], n2.sqrt());
            }
        }
    });
}

/// `Σ_{0 < |w| <= radius} weight(|w|) |Σ_j e^{-2πi⟨w, x_j⟩}|²`, summed over
/// a half space and doubled.
pub(crate) fn weighted_weyl_sum<W>(x: &PointSet, radius: f64, weight: W) -> Result<f64>
where
    W: Fn(f64) -> f64 + Sync,
{
    let lattice = x.lattice();
    let rows = half_space_rows(lattice, radius)?;
    let d = lattice.dim();
    let n = x.len();
    // Columns of the point array: coordinate i of every point, contiguous.
    let cols: Vec<Vec<f64>> = (0..d).map(|i| x.points().map(|p| p[i]).collect()).collect();
    let r2 = radius * radius;
    let g = lattice.dual_gram();
    let a = g[(d - 1) * d + (d - 1)];

    let partials: Vec<f64> = rows
        .par_chunks(ROW_CHUNK)
        .map(|chunk| {
            let mut base = vec![0.0f64; n];
            let mut zr = vec![0.0f64; n];
            let mut zi = vec![0.0f64; n];
            let mut sr = vec![0.0f64; n];
            let mut si = vec![0.0f64; n];
            let last = &cols[d - 1];
            for (j, v) in last.iter().enumerate() {
                let (s, c) = (-TAU * v).sin_cos();
                sr[j] = c;
                si[j] = s;
            }
            let mut acc = 0.0;
            for row in chunk {
                let prefix = &row.prefix[..d - 1];
                base.iter_mut().for_each(|b| *b = 0.0);
                for (i, &m) in prefix.iter().enumerate() {
                    if m != 0 {
                        let mf = m as f64;
                        for (b, v) in base.iter_mut().zip(&cols[i]) {
                            *b += mf * v;
                        }
                    }
                }
                // |w|² = a t² + 2 b t + c along the row.
                let mut b = 0.0;
                let mut c = 0.0;
                for i in 0..d - 1 {
                    let pi = prefix[i] as f64;
                    b += g[i * d + d - 1] * pi;
                    for k in 0..d - 1 {
                        c += pi * g[i * d + k] * prefix[k] as f64;
                    }
                }
                let mut t = row.lo;
                while t <= row.hi {
                    let end = (t + REANCHOR - 1).min(row.hi);
                    let tf = t as f64;
                    for j in 0..n {
                        let phase = (base[j] + tf * last[j]).fract();
                        let (s, co) = (-TAU * phase).sin_cos();
                        zr[j] = co;
                        zi[j] = s;
                    }
                    for tt in t..=end {
                        let tf = tt as f64;
                        let n2 = (a * tf + 2.0 * b) * tf + c;
                        let inside = n2 > 0.0 && n2 <= r2;
                        if inside {
                            let (mut re, mut im) = (0.0, 0.0);
                            for j in 0..n {
                                re += zr[j];
                                im += zi[j];
                            }
                            let term = weight(n2.sqrt()) * (re * re + im * im);
                            debug_assert!(term >= 0.0);
                            acc += term;
                        }
                        if tt < end {
                            for j in 0..n {
                                let r = zr[j] * sr[j] - zi[j] * si[j];
                                zi[j] = zr[j] * si[j] + zi[j] * sr[j];
                                zr[j] = r;
                            }
                        }
                    }
                    t = end + 1;
                }
            }
            acc
        })
        .collect();
    Ok(2.0 * partials.iter().sum::<f64>())
}

/// Reference version over the full ball without symmetry or phasor tricks.
#[cfg(test)]
pub(crate) fn weighted_weyl_sum_full<W: Fn(f64) -> f64>(x: &PointSet, radius: f64, weight: W) -> f64 {
    let lattice = x.lattice();
    let all = crate::lattice::enumerate_dual(lattice, radius).unwrap();
    all.iter()
        .skip(1)
        .map(|w| weight(w.norm) * super::weyl_sum_sq(x, w).unwrap())
        .sum()
}
