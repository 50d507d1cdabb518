//! Integer-box and ellipsoid-row walkers shared by every lattice sum.

use super::Lattice;

/// Largest supported dimension; sized so index buffers live on the stack.
pub const MAX_DIM: usize = 16;

/// Visits every integer vector `k` with `lo[i] <= k[i] <= hi[i]` in
/// lexicographic order. With zero-length bounds the closure runs once.
#[inline]
pub(crate) fn for_each_in_box<F: FnMut(&[i64])>(lo: &[i64], hi: &[i64], mut f: F) {
    let d = lo.len();
    debug_assert!(d <= MAX_DIM && hi.len() == d);
    if lo.iter().zip(hi).any(|(l, h)| l > h) {
        return;
    }
    let mut k = [0i64; MAX_DIM];
    k[..d].copy_from_slice(lo);
    loop {
        f(&k[..d]);
        let mut i = d;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if k[i] < hi[i] {
                k[i] += 1;
                break;
            }
            k[i] = lo[i];
        }
    }
}

/// Walks the dual ball `|B m| <= radius` as rows along the last index
/// coordinate: `f(prefix, lo, hi)` covers `m = (prefix, t)` for `t ∈ [lo, hi]`.
///
/// Each row interval solves the quadratic `m^T G m <= radius²` in `t` and is
/// widened slightly, so callers must still filter on the exact norm. The
/// prefix box uses the sufficient half-widths `radius * |col_i(A)|`.
///
/// With `half_space`, only vectors whose first nonzero index coordinate is
/// positive are produced (the origin is excluded); together with their
/// negatives they cover the ball minus the origin exactly once.
pub(crate) fn for_each_dual_row<F: FnMut(&[i64], i64, i64)>(
    lattice: &Lattice,
    radius: f64,
    half_space: bool,
    mut f: F,
) {
    let d = lattice.dim();
    let g = lattice.dual_gram();
    let reach = lattice.dual_reach();
    let r2 = radius * radius;
    let p = d - 1;

    let mut lo = [0i64; MAX_DIM];
    let mut hi = [0i64; MAX_DIM];
    for i in 0..p {
        let m = (reach[i] * radius * (1.0 + 1e-12) + 1e-9).floor() as i64;
        lo[i] = -m;
        hi[i] = m;
    }
    if half_space && p > 0 {
        lo[0] = 0;
    }
    let a = g[p * d + p];

    for_each_in_box(&lo[..p], &hi[..p], |prefix| {
        let sign = prefix.iter().find(|&&v| v != 0).map(|v| v.signum()).unwrap_or(0);
        if half_space && sign < 0 {
            return;
        }
        let mut b = 0.0;
        let mut c = 0.0;
        for i in 0..p {
            let pi = prefix[i] as f64;
            if pi == 0.0 {
                continue;
            }
            b += g[i * d + p] * pi;
            let mut row = 0.0;
            for j in 0..p {
                row += g[i * d + j] * prefix[j] as f64;
            }
            c += pi * row;
        }
        let disc = b * b - a * (c - r2);
        let slack = 1e-9 * (b * b + a * c.abs() + a * r2) + 1e-300;
        if disc < -slack {
            return;
        }
        let sq = disc.max(0.0).sqrt();
        let centre = -b / a;
        let half = sq / a;
        let widen = 1e-9 * (1.0 + centre.abs() + half);
        let mut t_lo = (centre - half - widen).ceil() as i64;
        let t_hi = (centre + half + widen).floor() as i64;
        if half_space && sign == 0 {
            t_lo = t_lo.max(1);
        }
        if t_lo <= t_hi {
            f(prefix, t_lo, t_hi);
        }
    });
}
