//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Fixed-point precision of the series oracle, in bits.
const PREC: u32 = 320;

fn to_f64_scaled(v: &BigInt, bits: u32) -> f64 {
    // Keep the top 64 bits, then scale by the remaining power of two.
    let len = v.bits() as i64;
    let drop = (len - 64).max(0);
    let top = (v >> drop as usize).to_f64().unwrap();
    top * 2f64.powi((drop - bits as i64) as i32)
}

/// `Σ_k (-1)^k (z²/4)^k / (k! (ν+1)_k)` in exact-rational-step fixed point.
fn reduced_series(twice_nu: u32, z: f64) -> f64 {
    if z == 0.0 {
        return 1.0;
    }
    // z = mant · 2^exp exactly.
    let bits = z.to_bits();
    let exp_field = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (mant, exp) = if exp_field == 0 {
        (frac, -1074i64)
    } else {
        (frac | (1u64 << 52), exp_field - 1075)
    };
    let mant_sq = BigInt::from(mant) * BigInt::from(mant);
    // z²/4 · 2 = mant² · 2^(2 exp - 1); the extra 2 cancels the half in (ν+1+k-1).
    let shift = 2 * exp - 1;
    let one = BigInt::one() << PREC;
    let mut term = one.clone();
    let mut sum = one;
    let mut k: u64 = 0;
    loop {
        k += 1;
        term *= &mant_sq;
        if shift >= 0 {
            term <<= shift as usize;
        } else {
            term >>= (-shift) as usize;
        }
        term /= BigInt::from(k) * BigInt::from(twice_nu as u64 + 2 * k);
        term = -term;
        if term.is_zero() {
            break;
        }
        sum += &term;
        if k > 40 && term.abs().bits() < 8 {
            break;
        }
    }
    to_f64_scaled(&sum, PREC)
}

/// `Γ(ν + 1)` for `2ν ∈ {1, …, 16}`.
fn gamma_nu_plus_one(twice_nu: u32) -> f64 {
    let mut g = if twice_nu % 2 == 0 { 1.0 } else { PI.sqrt() / 2.0 };
    let mut x = if twice_nu % 2 == 0 { 1.0 } else { 1.5 };
    let target = twice_nu as f64 / 2.0 + 1.0;
    while x < target - 0.25 {
        g *= x;
        x += 1.0;
    }
    g
}

/// `J_ν(z)` from the ascending series with the alternating sum done exactly
/// to 320 bits; only the prefactor `(z/2)^ν / Γ(ν+1)` is rounded.
pub fn bessel_oracle(twice_nu: u32, z: f64) -> f64 {
    let nu = twice_nu as f64 / 2.0;
    let pre = if z == 0.0 { 0.0 } else { (z / 2.0).powf(nu) / gamma_nu_plus_one(twice_nu) };
    pre * reduced_series(twice_nu, z)
}

/// Euclidean lens volume by midpoint rule over the ball of radius `r`
/// (d = 2 and 3 only).
pub fn lens_grid(d: usize, r: f64, t: f64, n: usize) -> f64 {
    let h = 2.0 * r / n as f64;
    let mut count = 0u64;
    let axis = |i: usize| -r + (i as f64 + 0.5) * h;
    match d {
        2 => {
            for i in 0..n {
                for j in 0..n {
                    let (x, y) = (axis(i), axis(j));
                    if x * x + y * y <= r * r && (x - t).powi(2) + y * y <= r * r {
                        count += 1;
                    }
                }
            }
            count as f64 * h * h
        }
        3 => {
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        let (x, y, z) = (axis(i), axis(j), axis(k));
                        let yz = y * y + z * z;
                        if x * x + yz <= r * r && (x - t).powi(2) + yz <= r * r {
                            count += 1;
                        }
                    }
                }
            }
            count as f64 * h * h * h
        }
        _ => panic!("grid oracle supports d = 2, 3"),
    }
}

/// Exact count variance for the cubic lattice by brute force over a fine
/// grid of centers: `mean(count²) - mean(count)²` with periodic distances.
pub fn grid_count_variance(points: &[Vec<f64>], r: f64, n: usize) -> f64 {
    let d = points[0].len();
    let total = n.pow(d as u32);
    let (mut s1, mut s2) = (0.0f64, 0.0f64);
    let mut c = vec![0.0; d];
    for idx in 0..total {
        let mut rem = idx;
        for ci in c.iter_mut() {
            *ci = ((rem % n) as f64 + 0.5) / n as f64;
            rem /= n;
        }
        let mut count = 0.0;
        for p in points {
            let dist2: f64 = p
                .iter()
                .zip(&c)
                .map(|(a, b)| {
                    let t = a - b;
                    let t = t - t.round();
                    t * t
                })
                .sum();
            if dist2 <= r * r {
                count += 1.0;
            }
        }
        s1 += count;
        s2 += count * count;
    }
    let m = s1 / total as f64;
    s2 / total as f64 - m * m
}

pub fn mean_and_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

/// Least-squares slope of `y` on `x`.
pub fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}
