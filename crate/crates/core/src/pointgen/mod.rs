//! Point sets and point processes on the torus: i.i.d. uniform, jittered
//! sampling over grid partitions, sublattice grids and the projection DPP.

mod dpp;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{ball_volume, enumerate_dual, enumeration_cap, reduce_unit, DualVector, Lattice, TorusPoint};
use crate::rng::RngSpec;

pub use dpp::{dpp_kernel_eval, gen_dpp, gen_dpp_with_cap, DEFAULT_ATTEMPTS_PER_POINT};

/// Where a point set came from.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Provenance {
    pub generator: String,
    #[serde(default)]
    pub params: serde_json::Map<String, serde_json::Value>,
    pub seed: Option<u64>,
}

impl Provenance {
    pub fn new(generator: &str, seed: Option<u64>) -> Self {
        Provenance {
            generator: generator.to_string(),
            params: Default::default(),
            seed,
        }
    }

    fn with(mut self, key: &str, value: impl Into<serde_json::Value>) -> Self {
        self.params.insert(key.to_string(), value.into());
        self
    }
}

/// `N >= 1` torus points stored as a flat row-major `N×d` array of
/// fractional coordinates in `[0,1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    lattice: Lattice,
    coords: Vec<f64>,
    provenance: Provenance,
}

impl PointSet {
    /// Builds a point set from flat fractional coordinates, reducing mod 1.
    pub fn from_flat(lattice: Lattice, coords: Vec<f64>, provenance: Provenance) -> Result<Self> {
        let d = lattice.dim();
        if coords.is_empty() {
            return Err(Error::InvalidParameter("a point set needs N >= 1".into()));
        }
        if coords.len() % d != 0 {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: coords.len() % d,
            });
        }
        if coords.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite coordinate".into()));
        }
        Ok(PointSet {
            lattice,
            coords: coords.into_iter().map(reduce_unit).collect(),
            provenance,
        })
    }

    pub fn from_rows(lattice: Lattice, rows: &[Vec<f64>], provenance: Provenance) -> Result<Self> {
        let d = lattice.dim();
        if let Some(bad) = rows.iter().find(|r| r.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: bad.len(),
            });
        }
        PointSet::from_flat(lattice, rows.concat(), provenance)
    }

    pub fn from_points(lattice: Lattice, points: &[TorusPoint], provenance: Provenance) -> Result<Self> {
        let rows: Vec<Vec<f64>> = points.iter().map(|p| p.frac().to_vec()).collect();
        PointSet::from_rows(lattice, &rows, provenance)
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn dim(&self) -> usize {
        self.lattice.dim()
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim()
    }

    /// Always false: point sets hold at least one point.
    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn point(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.coords[i * d..(i + 1) * d]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim())
    }

    pub fn torus_points(&self) -> Vec<TorusPoint> {
        self.points()
            .map(|p| TorusPoint::new(p.to_vec()).expect("stored coordinates are finite"))
            .collect()
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// The same points shifted by a fractional vector.
    pub fn translated(&self, shift: &[f64]) -> Result<PointSet> {
        self.lattice.check_point(shift)?;
        let d = self.dim();
        let coords = self
            .coords
            .iter()
            .enumerate()
            .map(|(i, v)| v + shift[i % d])
            .collect();
        PointSet::from_flat(self.lattice.clone(), coords, self.provenance.clone())
    }

    /// Every point repeated `times` times (N → times·N, same positions).
    pub fn replicated(&self, times: usize) -> Result<PointSet> {
        if times == 0 {
            return Err(Error::InvalidParameter("times must be >= 1".into()));
        }
        let coords = self.coords.repeat(times);
        PointSet::from_flat(self.lattice.clone(), coords, self.provenance.clone())
    }
}

fn require_count(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidParameter("N must be >= 1".into()));
    }
    let cap = enumeration_cap();
    if n > cap {
        return Err(Error::EnumerationCapExceeded { requested: n, cap });
    }
    Ok(())
}

/// `N` i.i.d. uniform points.
pub fn gen_uniform(lattice: &Lattice, n: usize, spec: RngSpec) -> Result<PointSet> {
    require_count(n)?;
    let mut rng = spec.rng();
    let coords = (0..n * lattice.dim()).map(|_| rng.random::<f64>()).collect();
    PointSet::from_flat(
        lattice.clone(),
        coords,
        Provenance::new("uniform", Some(spec.seed))
            .with("N", n)
            .with("stream_id", spec.stream_id),
    )
}

/// The image under `A` of the cubic grid of `m^d` boxes `[k/m, (k+1)/m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    lattice: Lattice,
    m: usize,
}

pub fn make_partition(lattice: &Lattice, m: usize) -> Result<Partition> {
    if m == 0 {
        return Err(Error::InvalidParameter("m must be >= 1".into()));
    }
    let n = (m as u128).checked_pow(lattice.dim() as u32).unwrap_or(u128::MAX);
    let cap = enumeration_cap();
    if n > cap as u128 {
        return Err(Error::EnumerationCapExceeded {
            requested: n.min(usize::MAX as u128) as usize,
            cap,
        });
    }
    Ok(Partition {
        lattice: lattice.clone(),
        m,
    })
}

impl Partition {
    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn num_cells(&self) -> usize {
        self.m.pow(self.lattice.dim() as u32)
    }

    /// Grid index of cell `j` (lexicographic, last coordinate fastest).
    pub fn cell_index(&self, j: usize) -> Vec<usize> {
        let d = self.lattice.dim();
        let mut idx = vec![0; d];
        let mut r = j;
        for i in (0..d).rev() {
            idx[i] = r % self.m;
            r /= self.m;
        }
        idx
    }

    /// Fractional box `[lo, hi)` of cell `j`.
    pub fn cell_box(&self, j: usize) -> (Vec<f64>, Vec<f64>) {
        let m = self.m as f64;
        let idx = self.cell_index(j);
        (
            idx.iter().map(|&k| k as f64 / m).collect(),
            idx.iter().map(|&k| (k + 1) as f64 / m).collect(),
        )
    }

    pub fn contains(&self, j: usize, frac: &[f64]) -> bool {
        let (lo, hi) = self.cell_box(j);
        frac.iter().zip(lo.iter().zip(&hi)).all(|(x, (l, h))| x >= l && x < h)
    }

    /// Euclidean diameter of every cell (all cells are congruent).
    pub fn cell_diameter(&self) -> f64 {
        2.0 * self.lattice.half_diameter() / self.m as f64
    }

    /// `C` with `diam <= C N^{-1/d}`: the diameter of `A[0,1]^d`. This is
    /// `√d · max_j |A e_j|` for orthogonal bases and at most `Σ_j |A e_j|`
    /// in general.
    pub fn diameter_constant(&self) -> f64 {
        2.0 * self.lattice.half_diameter()
    }
}

/// Largest float strictly below a positive `x`.
fn below(x: f64) -> f64 {
    f64::from_bits(x.to_bits() - 1)
}

/// One uniform point per cell, cells in lexicographic order.
pub fn gen_jittered(partition: &Partition, spec: RngSpec) -> Result<PointSet> {
    let d = partition.lattice.dim();
    let m = partition.m as f64;
    let n = partition.num_cells();
    let mut rng = spec.rng();
    let mut coords = Vec::with_capacity(n * d);
    for j in 0..n {
        for k in partition.cell_index(j) {
            let u: f64 = rng.random();
            let x = (k as f64 + u) / m;
            coords.push(x.min(below((k + 1) as f64 / m)));
        }
    }
    PointSet::from_flat(
        partition.lattice.clone(),
        coords,
        Provenance::new("jittered", Some(spec.seed))
            .with("m", partition.m)
            .with("stream_id", spec.stream_id),
    )
}

/// The deterministic grid `{k/m : k ∈ {0..m-1}^d}`.
pub fn gen_sublattice(lattice: &Lattice, m: usize) -> Result<PointSet> {
    let p = make_partition(lattice, m)?;
    let n = p.num_cells();
    let mut coords = Vec::with_capacity(n * lattice.dim());
    for j in 0..n {
        coords.extend(p.cell_index(j).into_iter().map(|k| k as f64 / m as f64));
    }
    PointSet::from_flat(lattice.clone(), coords, Provenance::new("sublattice", None).with("m", m))
}

/// The support `D_N` of a projection kernel: the first `N` dual vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumSelection {
    lattice: Lattice,
    vectors: Vec<DualVector>,
}

impl SpectrumSelection {
    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn vectors(&self) -> &[DualVector] {
        &self.vectors
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

/// First `N` dual vectors in (norm, lexicographic index) order.
pub fn choose_spectrum(lattice: &Lattice, n: usize) -> Result<SpectrumSelection> {
    require_count(n)?;
    let d = lattice.dim();
    // A dual ball of radius r + h holds at least Vol(B(r)) / covol(Λ*) points.
    let h = lattice.dual_half_diameter();
    let mut radius = (n as f64 / (ball_volume(d, 1.0) * lattice.covolume())).powf(1.0 / d as f64) + h;
    loop {
        let all = enumerate_dual(lattice, radius)?;
        if all.len() >= n {
            let last = all[n - 1].norm;
            // Every tie of the N-th norm must be inside the enumerated ball.
            if last * (1.0 + 4.0 * crate::lattice::TIE_RELATIVE) + 1e-11 < radius {
                let mut vectors = all;
                vectors.truncate(n);
                return Ok(SpectrumSelection {
                    lattice: lattice.clone(),
                    vectors,
                });
            }
        }
        radius *= 1.5;
    }
}
