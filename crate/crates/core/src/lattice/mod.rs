//! Lattices `Λ = A Z^d`, their duals, and the flat torus `R^d / Λ`.
//!
//! Point coordinates are always fractional: a torus point is `α ∈ [0,1)^d`
//! with Cartesian position `A α`. Dual vectors are indexed by integer
//! vectors `m` with `w = (A^T)^{-1} m`, so `⟨w, A α⟩ = m · α` and Fourier
//! phases never need the Cartesian form.

pub(crate) mod enumerate;

use std::sync::atomic::{AtomicUsize, Ordering};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub(crate) use enumerate::{for_each_dual_row, for_each_in_box, MAX_DIM};

/// Default cap on the number of dual vectors a single enumeration may touch.
pub const DEFAULT_ENUMERATION_CAP: usize = 5_000_000;

/// Environment variable overriding [`DEFAULT_ENUMERATION_CAP`].
pub const CAP_ENV_VAR: &str = "TORUSHU_CAP";

static CAP_OVERRIDE: AtomicUsize = AtomicUsize::new(0);

/// Current enumeration cap: an explicit [`set_enumeration_cap`] wins, then
/// `TORUSHU_CAP`, then the default.
pub fn enumeration_cap() -> usize {
    match CAP_OVERRIDE.load(Ordering::Relaxed) {
        0 => std::env::var(CAP_ENV_VAR)
            .ok()
            .and_then(|s| s.trim().parse::<f64>().ok())
            .filter(|v| *v >= 1.0)
            .map(|v| v as usize)
            .unwrap_or(DEFAULT_ENUMERATION_CAP),
        n => n,
    }
}

/// Sets the process-wide cap. Passing 0 restores the env/default behaviour.
pub fn set_enumeration_cap(cap: usize) {
    CAP_OVERRIDE.store(cap, Ordering::Relaxed);
}

/// Relative tolerance under which two dual norms count as tied.
pub const TIE_RELATIVE: f64 = 1e-9;

/// Covolume tolerance for "normalized".
pub const COVOLUME_TOL: f64 = 1e-12;

/// A full-rank lattice `Λ = A Z^d` with basis vectors as the columns of `A`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "LatticeJson", into = "LatticeJson")]
pub struct Lattice {
    dim: usize,
    /// Row-major `A`.
    basis: Vec<f64>,
    covolume: f64,
    scale: f64,
    /// Row-major `A^{-1}`.
    inverse: Vec<f64>,
    /// Row-major `(A^T)^{-1}`.
    dual: Vec<f64>,
    /// `B^T B` for the dual basis `B`, row-major.
    dual_gram: Vec<f64>,
    /// Row norms of `A^{-1}`: `|k_i| <= primal_reach[i] * |A k|`.
    primal_reach: Vec<f64>,
    /// Column norms of `A`: `|m_i| <= dual_reach[i] * |B m|`.
    dual_reach: Vec<f64>,
}

/// Wire form: `{"dim": d, "basis": [..]}` with `basis` the row-major `A`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LatticeJson {
    pub dim: usize,
    pub basis: Vec<f64>,
}

// Equal bases mean equal lattices; `scale` records construction history only.
impl PartialEq for Lattice {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.basis == other.basis
    }
}

impl TryFrom<LatticeJson> for Lattice {
    type Error = Error;

    fn try_from(j: LatticeJson) -> Result<Self> {
        Lattice::from_row_major(j.dim, &j.basis)
    }
}

impl From<Lattice> for LatticeJson {
    fn from(l: Lattice) -> Self {
        LatticeJson {
            dim: l.dim,
            basis: l.basis,
        }
    }
}

impl Lattice {
    /// Builds a lattice from a row-major `d×d` matrix whose columns are the
    /// basis vectors. No rescaling is applied.
    pub fn from_row_major(dim: usize, basis: &[f64]) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM || basis.len() != dim * dim {
            return Err(Error::DegenerateLattice);
        }
        if basis.iter().any(|v| !v.is_finite()) {
            return Err(Error::DegenerateLattice);
        }
        let a = DMatrix::from_row_slice(dim, dim, basis);
        let det = a.determinant();
        let col_product: f64 = (0..dim).map(|j| a.column(j).norm()).product();
        if !det.is_finite() || det.abs() <= 1e-14 * col_product || col_product == 0.0 {
            return Err(Error::DegenerateLattice);
        }
        let inv = a.clone().try_inverse().ok_or(Error::DegenerateLattice)?;
        let dual = inv.transpose();
        let dual_gram = dual.transpose() * &dual;

        let row_major = |m: &DMatrix<f64>| -> Vec<f64> {
            let mut out = Vec::with_capacity(dim * dim);
            for i in 0..dim {
                for j in 0..dim {
                    out.push(m[(i, j)]);
                }
            }
            out
        };
        Ok(Lattice {
            dim,
            basis: basis.to_vec(),
            covolume: det.abs(),
            scale: 1.0,
            primal_reach: (0..dim).map(|i| inv.row(i).norm()).collect(),
            dual_reach: (0..dim).map(|j| a.column(j).norm()).collect(),
            inverse: row_major(&inv),
            dual: row_major(&dual),
            dual_gram: row_major(&dual_gram),
        })
    }

    /// Builds a lattice from its basis vectors `v_1..v_d`.
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let d = columns.len();
        if columns.iter().any(|c| c.len() != d) {
            return Err(Error::DegenerateLattice);
        }
        let mut rm = vec![0.0; d * d];
        for (j, col) in columns.iter().enumerate() {
            for (i, v) in col.iter().enumerate() {
                rm[i * d + j] = *v;
            }
        }
        Lattice::from_row_major(d, &rm)
    }

    /// `Z^d`.
    pub fn identity(dim: usize) -> Result<Self> {
        let mut rm = vec![0.0; dim * dim];
        for i in 0..dim {
            rm[i * dim + i] = 1.0;
        }
        Lattice::from_row_major(dim, &rm)
    }

    /// The hexagonal lattice spanned by `(1,0)` and `(1/2, √3/2)`, normalized
    /// to covolume 1.
    pub fn hexagonal() -> Self {
        normalize_lattice(2, &[1.0, 0.5, 0.0, 3f64.sqrt() / 2.0])
            .expect("hexagonal basis is regular")
    }

    /// Named presets: `identity2`, `identity3`, `hexagonal`, or `identity<d>`.
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "hexagonal" | "hex" => Ok(Lattice::hexagonal()),
            _ => {
                let d = name
                    .strip_prefix("identity")
                    .and_then(|s| s.parse::<usize>().ok())
                    .ok_or_else(|| Error::InvalidParameter(format!("unknown lattice preset '{name}'")))?;
                Lattice::identity(d)
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Row-major basis matrix `A` (columns are basis vectors).
    pub fn basis(&self) -> &[f64] {
        &self.basis
    }

    pub fn covolume(&self) -> f64 {
        self.covolume
    }

    /// `|det A_original|^{1/d}` for lattices built by [`normalize_lattice`],
    /// 1 otherwise.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn is_normalized(&self) -> bool {
        (self.covolume - 1.0).abs() <= COVOLUME_TOL
    }

    pub(crate) fn require_normalized(&self) -> Result<()> {
        if self.is_normalized() {
            Ok(())
        } else {
            Err(Error::NotNormalized {
                covolume: self.covolume,
            })
        }
    }

    /// Basis vector `v_j` (column `j` of `A`).
    pub fn basis_vector(&self, j: usize) -> Vec<f64> {
        (0..self.dim).map(|i| self.basis[i * self.dim + j]).collect()
    }

    /// Row-major `(A^T)^{-1}`, the dual basis.
    pub fn dual_basis(&self) -> Vec<f64> {
        self.dual.clone()
    }

    pub(crate) fn dual_gram(&self) -> &[f64] {
        &self.dual_gram
    }

    pub(crate) fn dual_reach(&self) -> &[f64] {
        &self.dual_reach
    }

    /// Cartesian image `A x` of a fractional (or any real) coordinate vector.
    pub fn cartesian(&self, frac: &[f64]) -> Vec<f64> {
        let d = self.dim;
        (0..d)
            .map(|i| (0..d).map(|j| self.basis[i * d + j] * frac[j]).sum())
            .collect()
    }

    /// Fractional coordinates `A^{-1} x` of a Cartesian vector, unreduced.
    pub fn fractional(&self, cart: &[f64]) -> Vec<f64> {
        let d = self.dim;
        (0..d)
            .map(|i| (0..d).map(|j| self.inverse[i * d + j] * cart[j]).sum())
            .collect()
    }

    /// `|A x|^2`.
    #[inline]
    pub(crate) fn norm_sq_of(&self, x: &[f64]) -> f64 {
        let d = self.dim;
        let mut s = 0.0;
        for i in 0..d {
            let row = &self.basis[i * d..(i + 1) * d];
            let mut v = 0.0;
            for j in 0..d {
                v += row[j] * x[j];
            }
            s += v * v;
        }
        s
    }

    /// `|(A^T)^{-1} m|^2` for an integer index.
    #[inline]
    pub(crate) fn dual_norm_sq(&self, m: &[i64]) -> f64 {
        let d = self.dim;
        let mut s = 0.0;
        for i in 0..d {
            let mi = m[i] as f64;
            if mi == 0.0 {
                continue;
            }
            let row = &self.dual_gram[i * d..(i + 1) * d];
            let mut v = 0.0;
            for j in 0..d {
                v += row[j] * m[j] as f64;
            }
            s += mi * v;
        }
        s.max(0.0)
    }

    /// Dual vector for an integer index.
    pub fn dual_vector(&self, index: &[i64]) -> DualVector {
        let d = self.dim;
        let cartesian: Vec<f64> = (0..d)
            .map(|i| (0..d).map(|j| self.dual[i * d + j] * index[j] as f64).sum())
            .collect();
        let norm = cartesian.iter().map(|v| v * v).sum::<f64>().sqrt();
        DualVector {
            index: index.to_vec(),
            cartesian,
            norm,
        }
    }

    /// Half the longest diagonal of the fundamental parallelepiped.
    pub fn half_diameter(&self) -> f64 {
        half_longest_diagonal(self.dim, &self.basis)
    }

    /// Half the longest diagonal of the dual fundamental parallelepiped. Every
    /// dual Voronoi-like cell `w + B[-1/2,1/2)^d` sits in a ball of this radius.
    pub(crate) fn dual_half_diameter(&self) -> f64 {
        half_longest_diagonal(self.dim, &self.dual)
    }

    /// Length of the shortest nonzero vector of `Λ`.
    pub fn shortest_vector_length(&self) -> f64 {
        let d = self.dim;
        let radius = (0..d)
            .map(|j| self.basis_vector(j).iter().map(|v| v * v).sum::<f64>().sqrt())
            .fold(f64::INFINITY, f64::min);
        let hi: Vec<i64> = self
            .primal_reach
            .iter()
            .map(|r| (r * radius * (1.0 + 1e-12)).floor() as i64)
            .collect();
        let lo: Vec<i64> = hi.iter().map(|h| -h).collect();
        let mut best = radius * radius;
        let mut buf = [0.0f64; MAX_DIM];
        for_each_in_box(&lo, &hi, |k| {
            if k.iter().all(|&v| v == 0) {
                return;
            }
            for (b, &v) in buf.iter_mut().zip(k) {
                *b = v as f64;
            }
            let n = self.norm_sq_of(&buf[..d]);
            if n < best {
                best = n;
            }
        });
        best.sqrt()
    }

    /// Length of the shortest nonzero dual vector.
    pub(crate) fn dual_shortest_length(&self) -> f64 {
        let d = self.dim;
        let radius = (0..d)
            .map(|j| self.dual_gram[j * d + j].sqrt())
            .fold(f64::INFINITY, f64::min);
        let mut best = radius * radius;
        for_each_dual_row(self, radius, true, |prefix, lo, hi| {
            let mut m = [0i64; MAX_DIM];
            m[..d - 1].copy_from_slice(prefix);
            for t in lo..=hi {
                m[d - 1] = t;
                let n = self.dual_norm_sq(&m[..d]);
                if n > 0.0 && n < best {
                    best = n;
                }
            }
        });
        best.sqrt()
    }

    /// Calls `f(distance)` for every translate `λ ∈ Λ` with
    /// `|A delta + λ| <= radius`. `delta` is a fractional difference.
    #[inline]
    pub(crate) fn for_each_translate_within<F: FnMut(f64)>(&self, delta: &[f64], radius: f64, mut f: F) {
        let d = self.dim;
        let mut lo = [0i64; MAX_DIM];
        let mut hi = [0i64; MAX_DIM];
        for i in 0..d {
            let rho = self.primal_reach[i] * radius * (1.0 + 1e-12) + 1e-15;
            lo[i] = (-delta[i] - rho).ceil() as i64;
            hi[i] = (-delta[i] + rho).floor() as i64;
            if lo[i] > hi[i] {
                return;
            }
        }
        let r2 = radius * radius;
        let mut x = [0.0f64; MAX_DIM];
        for_each_in_box(&lo[..d], &hi[..d], |k| {
            for i in 0..d {
                x[i] = delta[i] + k[i] as f64;
            }
            let n2 = self.norm_sq_of(&x[..d]);
            if n2 <= r2 {
                f(n2.sqrt());
            }
        });
    }

    /// Validates a fractional point for this lattice.
    pub(crate) fn check_point(&self, frac: &[f64]) -> Result<()> {
        if frac.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: frac.len(),
            });
        }
        Ok(())
    }
}

fn half_longest_diagonal(d: usize, rm: &[f64]) -> f64 {
    // Sign vectors with s_0 = +1 cover every diagonal up to orientation.
    let mut best = 0.0f64;
    for mask in 0u32..(1u32 << (d - 1)) {
        let mut n2 = 0.0;
        for i in 0..d {
            let mut v = rm[i * d];
            for j in 1..d {
                let s = if mask >> (j - 1) & 1 == 1 { -1.0 } else { 1.0 };
                v += s * rm[i * d + j];
            }
            n2 += v * v;
        }
        best = best.max(n2);
    }
    best.sqrt() / 2.0
}

/// Rescales `A` (row-major, columns are basis vectors) to covolume 1.
pub fn normalize_lattice(dim: usize, basis: &[f64]) -> Result<Lattice> {
    let raw = Lattice::from_row_major(dim, basis)?;
    let scale = raw.covolume.powf(1.0 / dim as f64);
    let scaled: Vec<f64> = basis.iter().map(|v| v / scale).collect();
    let mut l = Lattice::from_row_major(dim, &scaled)?;
    l.scale = scale;
    Ok(l)
}

/// `(A^T)^{-1}` as a row-major matrix.
pub fn dual_basis(lattice: &Lattice) -> Vec<f64> {
    lattice.dual_basis()
}

/// A dual lattice vector `w = (A^T)^{-1} m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualVector {
    pub index: Vec<i64>,
    pub cartesian: Vec<f64>,
    pub norm: f64,
}

/// All dual vectors with `|w| <= max_norm` (origin included), ordered by norm
/// with equal norms broken lexicographically on the integer index.
///
/// Completeness: `m = A^T w`, so `|m_i| <= |col_i(A)| |w|`; the enumeration box
/// uses exactly these half-widths.
pub fn enumerate_dual(lattice: &Lattice, max_norm: f64) -> Result<Vec<DualVector>> {
    if !(max_norm >= 0.0) || !max_norm.is_finite() {
        return Err(Error::InvalidParameter(format!("max_norm must be >= 0, got {max_norm}")));
    }
    let d = lattice.dim;
    let cap = enumeration_cap();
    let r2 = max_norm * max_norm;
    let mut found: Vec<(f64, Vec<i64>)> = vec![(0.0, vec![0; d])];
    let mut overflow = false;
    for_each_dual_row(lattice, max_norm, false, |prefix, lo, hi| {
        if overflow {
            return;
        }
        let mut m = [0i64; MAX_DIM];
        m[..d - 1].copy_from_slice(prefix);
        for t in lo..=hi {
            m[d - 1] = t;
            if m[..d].iter().all(|&v| v == 0) {
                continue;
            }
            let n2 = lattice.dual_norm_sq(&m[..d]);
            if n2 <= r2 {
                found.push((n2.sqrt(), m[..d].to_vec()));
                if found.len() > cap {
                    overflow = true;
                    return;
                }
            }
        }
    });
    if overflow {
        return Err(Error::EnumerationCapExceeded {
            requested: found.len(),
            cap,
        });
    }
    sort_by_norm_then_index(&mut found);
    Ok(found
        .into_iter()
        .map(|(_, m)| lattice.dual_vector(&m))
        .collect())
}

/// Norm order with ties (within [`TIE_RELATIVE`]) broken lexicographically.
pub(crate) fn sort_by_norm_then_index(items: &mut [(f64, Vec<i64>)]) {
    items.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
    let mut start = 0;
    while start < items.len() {
        let base = items[start].0;
        let tol = (TIE_RELATIVE * base).max(1e-12);
        let mut end = start + 1;
        while end < items.len() && items[end].0 - base <= tol {
            end += 1;
        }
        if end - start > 1 {
            items[start..end].sort_by(|a, b| a.1.cmp(&b.1));
        }
        start = end;
    }
}

/// A point of the torus in fractional coordinates `α ∈ [0,1)^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorusPoint {
    frac: Vec<f64>,
}

impl TorusPoint {
    /// Reduces every coordinate into `[0,1)`.
    pub fn new(frac: Vec<f64>) -> Result<Self> {
        if frac.is_empty() || frac.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("torus point needs finite coordinates".into()));
        }
        Ok(TorusPoint {
            frac: frac.into_iter().map(reduce_unit).collect(),
        })
    }

    pub fn frac(&self) -> &[f64] {
        &self.frac
    }

    pub fn cartesian(&self, lattice: &Lattice) -> Vec<f64> {
        lattice.cartesian(&self.frac)
    }
}

/// `x mod 1` in `[0,1)`, guarding the `1.0` that `x - floor(x)` can round to.
#[inline]
pub fn reduce_unit(x: f64) -> f64 {
    let r = x - x.floor();
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Euclidean distance on the torus between two fractional points.
pub fn torus_distance(lattice: &Lattice, x: &TorusPoint, y: &TorusPoint) -> Result<f64> {
    lattice.check_point(x.frac())?;
    lattice.check_point(y.frac())?;
    Ok(torus_distance_frac(lattice, x.frac(), y.frac()))
}

pub(crate) fn torus_distance_frac(lattice: &Lattice, x: &[f64], y: &[f64]) -> f64 {
    let d = lattice.dim;
    let mut delta = [0.0f64; MAX_DIM];
    for i in 0..d {
        let t = x[i] - y[i];
        delta[i] = t - t.round();
    }
    // The reduced difference gives an upper bound; the true minimum lies in
    // the translate box of that radius.
    let start = lattice.norm_sq_of(&delta[..d]).sqrt();
    let mut best = start;
    lattice.for_each_translate_within(&delta[..d], start, |dist| {
        if dist < best {
            best = dist;
        }
    });
    best
}

/// Half the longest diagonal of the fundamental parallelepiped.
pub fn half_diameter(lattice: &Lattice) -> f64 {
    lattice.half_diameter()
}

/// Shortest nonzero lattice vector length `λ₁`.
pub fn shortest_vector_length(lattice: &Lattice) -> f64 {
    lattice.shortest_vector_length()
}

/// `Γ(d/2 + 1)` by the exact half-integer product.
pub(crate) fn gamma_half_dim_plus_one(d: usize) -> f64 {
    // Γ(1) = 1, Γ(3/2) = √π/2, Γ(x+1) = x Γ(x).
    let (mut g, mut x) = if d % 2 == 0 {
        (1.0, 1.0)
    } else {
        (std::f64::consts::PI.sqrt() / 2.0, 1.5)
    };
    let target = d as f64 / 2.0 + 1.0;
    while x < target - 0.25 {
        g *= x;
        x += 1.0;
    }
    g
}

/// Volume of the Euclidean `d`-ball of radius `r`.
pub fn ball_volume(d: usize, r: f64) -> f64 {
    if r == 0.0 {
        return 0.0;
    }
    std::f64::consts::PI.powf(d as f64 / 2.0) * r.powi(d as i32) / gamma_half_dim_plus_one(d)
}
