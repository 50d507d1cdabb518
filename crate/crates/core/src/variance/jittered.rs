//! Expected variance of jittered sampling,
//! `E V = N Vol - Σ_k ∫∫_{A_k × A_k} L(x - y) dμ_k(x) dμ_k(y)`,
//! with `L` the periodized lens volume and `μ_k` uniform on cell `k`.

use rand::Rng;
use rayon::prelude::*;

use super::realspace::pair_overlap;
use super::{check_radius, VarianceEstimate, VarianceMethod};
use crate::error::{Error, Result};
use crate::lattice::enumerate::MAX_DIM;
use crate::lattice::ball_volume;
use crate::pointgen::Partition;
use crate::rng::RngSpec;

/// Each cell integral is estimated from `S_cells` independent pairs drawn on
/// substream `k`; the error bound is the propagated standard error.
pub fn expected_variance_jittered(
    partition: &Partition,
    r: f64,
    samples_per_cell: usize,
    spec: RngSpec,
) -> Result<VarianceEstimate> {
    let lattice = partition.lattice();
    check_radius(lattice, r)?;
    let shortest = lattice.shortest_vector_length();
    if 2.0 * r >= shortest {
        return Err(Error::BallNotEmbedded {
            diameter: 2.0 * r,
            shortest,
        });
    }
    if samples_per_cell < 100 {
        return Err(Error::InvalidParameter(format!(
            "need S_cells >= 100, got {samples_per_cell}"
        )));
    }
    let d = lattice.dim();
    let m = partition.m() as f64;
    let cells = partition.num_cells();
    let s = samples_per_cell as f64;
    let per_cell: Vec<(f64, f64)> = (0..cells)
        .into_par_iter()
        .map(|k| {
            let mut rng = spec.substream(k as u64).rng();
            let lo: Vec<f64> = partition.cell_index(k).iter().map(|&i| i as f64 / m).collect();
            let mut x = [0.0f64; MAX_DIM];
            let mut y = [0.0f64; MAX_DIM];
            let (mut s1, mut s2) = (0.0, 0.0);
            for _ in 0..samples_per_cell {
                for i in 0..d {
                    x[i] = lo[i] + rng.random::<f64>() / m;
                    y[i] = lo[i] + rng.random::<f64>() / m;
                }
                let v = pair_overlap(lattice, d, r, &x[..d], &y[..d]);
                s1 += v;
                s2 += v * v;
            }
            let mean = s1 / s;
            let var = ((s2 - s * mean * mean) / (s - 1.0)).max(0.0);
            (mean, var / s)
        })
        .collect();
    let (sum_mean, sum_var) = per_cell.iter().fold((0.0, 0.0), |(a, b), &(c, e)| (a + c, b + e));
    let value = cells as f64 * ball_volume(d, r) - sum_mean;
    Ok(VarianceEstimate {
        method: VarianceMethod::JitteredExpected,
        value,
        error_bound: sum_var.sqrt(),
        truncation_radius: None,
        samples: Some((samples_per_cell * cells) as u64),
    })
}
