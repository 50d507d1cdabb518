use rand::Rng;
use rayon::prelude::*;

use super::{check_radius, VarianceEstimate, VarianceMethod};
use crate::error::{Error, Result};
use crate::lattice::enumerate::MAX_DIM;
use crate::lattice::{ball_volume, Lattice};
use crate::pointgen::PointSet;
use crate::rng::RngSpec;

/// Centers per block; block `b` draws from substream `b`.
const BLOCK: usize = 2048;

/// Number of translates `x + λ` within distance `R` of `c`, summed over `x ∈ X`.
pub(crate) fn periodized_count(lattice: &Lattice, x: &PointSet, c: &[f64], r: f64) -> usize {
    let d = lattice.dim();
    let mut delta = [0.0f64; MAX_DIM];
    let mut count = 0;
    for p in x.points() {
        for i in 0..d {
            let t = p[i] - c[i];
            delta[i] = t - t.round();
        }
        lattice.for_each_translate_within(&delta[..d], r, |_| count += 1);
    }
    count
}

/// Mean of `(count - N Vol)²` over `S` uniform centers, with its standard
/// error as the error bound.
pub fn variance_montecarlo(x: &PointSet, r: f64, samples: usize, spec: RngSpec) -> Result<VarianceEstimate> {
    let lattice = x.lattice();
    check_radius(lattice, r)?;
    if samples < 100 {
        return Err(Error::InvalidParameter(format!("need S >= 100 centers, got {samples}")));
    }
    let d = lattice.dim();
    let mean_count = x.len() as f64 * ball_volume(d, r);
    let blocks = samples.div_ceil(BLOCK);
    let sums: Vec<(f64, f64)> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = spec.substream(b as u64).rng();
            let len = BLOCK.min(samples - b * BLOCK);
            let mut c = [0.0f64; MAX_DIM];
            let (mut s1, mut s2) = (0.0, 0.0);
            for _ in 0..len {
                for v in c[..d].iter_mut() {
                    *v = rng.random::<f64>();
                }
                let dev = periodized_count(lattice, x, &c[..d], r) as f64 - mean_count;
                let q = dev * dev;
                s1 += q;
                s2 += q * q;
            }
            (s1, s2)
        })
        .collect();
    let (s1, s2) = sums.iter().fold((0.0, 0.0), |(a, b), &(c, e)| (a + c, b + e));
    let s = samples as f64;
    let mean = s1 / s;
    let var = ((s2 - s * mean * mean) / (s - 1.0)).max(0.0);
    Ok(VarianceEstimate {
        method: VarianceMethod::Montecarlo,
        value: mean,
        error_bound: (var / s).sqrt(),
        truncation_radius: None,
        samples: Some(samples as u64),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pointgen::{gen_uniform, Provenance};
    use crate::variance::variance_realspace;

    #[test]
    fn single_point_near_half_diameter() {
        let l = Lattice::identity(2).unwrap();
        let x = PointSet::from_rows(l.clone(), &[vec![0.1, 0.1]], Provenance::default()).unwrap();
        // Just under λ₁/2 the torus ball is still embedded.
        let r = 0.49;
        let p = ball_volume(2, r);
        let est = variance_montecarlo(&x, r, 50_000, RngSpec::new(3, 0)).unwrap();
        assert!((est.value - p * (1.0 - p)).abs() < 3.0 * est.error_bound);
        let r = 0.7;
        let est = variance_montecarlo(&x, r, 50_000, RngSpec::new(3, 0)).unwrap();
        let exact = crate::variance::single_point_variance(&l, r).unwrap();
        assert!((est.value - exact).abs() < 3.0 * est.error_bound);
    }

    #[test]
    fn deterministic() {
        let l = Lattice::hexagonal();
        let x = gen_uniform(&l, 5, RngSpec::new(1, 0)).unwrap();
        let a = variance_montecarlo(&x, 0.2, 5000, RngSpec::new(9, 1)).unwrap();
        let b = variance_montecarlo(&x, 0.2, 5000, RngSpec::new(9, 1)).unwrap();
        assert_eq!(a, b);
        assert!(variance_montecarlo(&x, 0.2, 99, RngSpec::new(9, 1)).is_err());
    }

    #[test]
    fn agrees_with_realspace() {
        let l = Lattice::identity(2).unwrap();
        let x = gen_uniform(&l, 16, RngSpec::new(21, 0)).unwrap();
        let exact = variance_realspace(&x, 0.15).unwrap().value;
        let est = variance_montecarlo(&x, 0.15, 100_000, RngSpec::new(22, 0)).unwrap();
        assert!((est.value - exact).abs() < 3.0 * est.error_bound);
    }
}
