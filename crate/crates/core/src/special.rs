//! Bessel functions `J_ν` for `ν ∈ {1/2, 1, ..., 8}` and an envelope bound on
//! `J_ν²` used to certify lattice-sum truncation.
//!
//! Half-integer orders come from the closed forms of `J_{1/2}` and `J_{3/2}`,
//! carried upward by the three-term recurrence when `z >= ν` and downward
//! (Miller normalization) when `z < ν`. Integer orders use the ascending
//! series in double-double arithmetic up to [`SERIES_SWITCH`], and the
//! Hankel asymptotic expansion beyond.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{Error, Result};

/// Integer orders switch from the power series to the asymptotic expansion here.
pub const SERIES_SWITCH: f64 = 25.0;

/// A supported order `ν = k/2`, `k ∈ 1..=16`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BesselOrder {
    twice: u8,
}

impl BesselOrder {
    pub fn new(nu: f64) -> Result<Self> {
        let twice = 2.0 * nu;
        if twice.fract() != 0.0 || !(1.0..=16.0).contains(&twice) {
            return Err(Error::UnsupportedOrder(nu));
        }
        Ok(BesselOrder { twice: twice as u8 })
    }

    /// `ν = d/2`, the order attached to balls in dimension `d`.
    pub fn half_dim(d: usize) -> Result<Self> {
        BesselOrder::new(d as f64 / 2.0)
    }

    pub fn nu(self) -> f64 {
        self.twice as f64 / 2.0
    }

    pub(crate) fn twice(self) -> u32 {
        self.twice as u32
    }

    pub fn is_integer(self) -> bool {
        self.twice % 2 == 0
    }
}

/// `J_ν(z)` for `z >= 0`.
pub fn bessel_j(order: BesselOrder, z: f64) -> Result<f64> {
    if !(z >= 0.0) || z.is_infinite() {
        return Err(Error::Domain(format!("bessel_j needs finite z >= 0, got {z}")));
    }
    Ok(bessel_j_twice(order.twice(), z))
}

/// Unchecked evaluation for `ν = twice/2`, `twice ∈ 0..=16`, `z >= 0`.
#[inline]
pub(crate) fn bessel_j_twice(twice: u32, z: f64) -> f64 {
    if twice % 2 == 0 {
        bessel_integer(twice / 2, z)
    } else {
        bessel_half_integer(twice / 2, z)
    }
}

/// Safety factors `S` in `C_env = (2/π) S`, indexed by `2ν - 1`. The first six
/// entries are 1.3; higher orders have a larger `sup_z z J_ν(z)²`.
const ENVELOPE_SAFETY: [f64; 16] = [
    1.3, 1.3, 1.3, 1.3, 1.3, 1.3, 1.35, 1.4, 1.45, 1.5, 1.5, 1.55, 1.55, 1.6, 1.6, 1.65,
];

/// `C_env` for an order: `J_ν(z)² <= C_env / z` for all `z > 0`.
pub fn envelope_constant(order: BesselOrder) -> f64 {
    2.0 / PI * ENVELOPE_SAFETY[order.twice as usize - 1]
}

/// Upper bound `min(1, C_env / z)` for `J_ν(z)²`. Non-increasing in `z`.
pub fn bessel_envelope_sq(order: BesselOrder, z: f64) -> Result<f64> {
    if !(z > 0.0) {
        return Err(Error::Domain(format!("bessel_envelope_sq needs z > 0, got {z}")));
    }
    Ok(envelope_sq(envelope_constant(order), z))
}

#[inline]
pub(crate) fn envelope_sq(c_env: f64, z: f64) -> f64 {
    if z <= c_env {
        1.0
    } else {
        c_env / z
    }
}

fn bessel_integer(n: u32, z: f64) -> f64 {
    if z == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    if z <= SERIES_SWITCH {
        series_dd(n, z)
    } else {
        hankel(n as f64, z)
    }
}

fn bessel_half_integer(n: u32, z: f64) -> f64 {
    if z == 0.0 {
        return 0.0;
    }
    let nu = n as f64 + 0.5;
    if n == 0 {
        return (2.0 / (PI * z)).sqrt() * z.sin();
    }
    if z >= nu {
        upward_half_integer(n, z)
    } else if z < 1e-8 {
        // Leading term (z/2)^ν / Γ(ν+1); the next term is O(z²) relative.
        (z / 2.0).powf(nu) / gamma_half_integer_plus_one(n)
    } else {
        miller_half_integer(n, z)
    }
}

/// `Γ(n + 3/2)`.
fn gamma_half_integer_plus_one(n: u32) -> f64 {
    let mut g = PI.sqrt() / 2.0;
    let mut x = 1.5;
    for _ in 0..n {
        g *= x;
        x += 1.0;
    }
    g
}

fn upward_half_integer(n: u32, z: f64) -> f64 {
    let (s, c) = z.sin_cos();
    let pref = (2.0 / (PI * z)).sqrt();
    let mut prev = pref * s;
    let mut cur = pref * (s / z - c);
    for k in 1..n {
        let next = (2 * k + 1) as f64 / z * cur - prev;
        prev = cur;
        cur = next;
    }
    cur
}

fn miller_half_integer(n: u32, z: f64) -> f64 {
    let top = n + 30 + (2.0 * z).ceil() as u32;
    let mut above = 0.0f64;
    let mut cur = 1e-280f64;
    let mut target = 0.0;
    let mut f1 = 0.0;
    let f0;
    // Index k holds order k + 1/2.
    let mut k = top;
    loop {
        if k == n {
            target = cur;
        }
        if k == 1 {
            f1 = cur;
        }
        if k == 0 {
            f0 = cur;
            break;
        }
        let below = (2 * k + 1) as f64 / z * cur - above;
        above = cur;
        cur = below;
        k -= 1;
        if cur.abs() > 1e250 {
            cur *= 1e-250;
            above *= 1e-250;
            target *= 1e-250;
            f1 *= 1e-250;
        }
    }
    let (s, c) = z.sin_cos();
    let pref = (2.0 / (PI * z)).sqrt();
    let j0 = pref * s;
    let j1 = pref * (s / z - c);
    // J_{1/2} and J_{3/2} never vanish together.
    let m = f0.abs().max(f1.abs());
    let (a0, a1) = (f0 / m, f1 / m);
    let scale = (a0 * j0 + a1 * j1) / (a0 * a0 + a1 * a1);
    target / m * scale
}

/// `(cos, sin)` of `(2ν + 1) π / 4`.
fn hankel_phase(twice_nu: i64) -> (f64, f64) {
    const TABLE: [(f64, f64); 8] = [
        (1.0, 0.0),
        (FRAC_1_SQRT_2, FRAC_1_SQRT_2),
        (0.0, 1.0),
        (-FRAC_1_SQRT_2, FRAC_1_SQRT_2),
        (-1.0, 0.0),
        (-FRAC_1_SQRT_2, -FRAC_1_SQRT_2),
        (0.0, -1.0),
        (FRAC_1_SQRT_2, -FRAC_1_SQRT_2),
    ];
    TABLE[((twice_nu + 1).rem_euclid(8)) as usize]
}

/// Hankel's expansion `J = sqrt(2/(πz)) (P cos χ − Q sin χ)`, truncated at
/// the smallest term.
fn hankel(nu: f64, z: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0f64;
    let mut k = 1u32;
    loop {
        let odd = (2 * k - 1) as f64;
        let next = term * (mu - odd * odd) / (k as f64 * 8.0 * z);
        if next == 0.0 || next.abs() >= term.abs() && k > 2 || k > 200 {
            break;
        }
        term = next;
        // a_k / z^k enters Q for odd k, P for even k, with alternating signs.
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 1 {
            q += sign * term;
        } else {
            p += sign * term;
        }
        if term.abs() < 1e-17 * p.abs().max(1e-300) {
            break;
        }
        k += 1;
    }
    let (cos_phi, sin_phi) = hankel_phase((2.0 * nu) as i64);
    let (s, c) = z.sin_cos();
    let cos_chi = c * cos_phi + s * sin_phi;
    let sin_chi = s * cos_phi - c * sin_phi;
    (2.0 / (PI * z)).sqrt() * (p * cos_chi - q * sin_chi)
}

/// Ascending series `Σ (−1)^k (z/2)^{2k+n} / (k! (k+n)!)` in double-double.
fn series_dd(n: u32, z: f64) -> f64 {
    let half = Dd::from(z * 0.5);
    let q = half.mul(half);
    let mut term = Dd::from(1.0);
    for k in 1..=n {
        term = term.mul(half).div_f64(k as f64);
    }
    let mut sum = term;
    let mut k = 1u32;
    loop {
        term = term.mul(q).div_f64(-((k * (k + n)) as f64));
        sum = sum.add(term);
        if (k as f64) > z * 0.5 + 1.0 && term.hi.abs() < 1e-26 {
            break;
        }
        k += 1;
    }
    sum.hi + sum.lo
}

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi)/2`.
#[derive(Debug, Clone, Copy)]
struct Dd {
    hi: f64,
    lo: f64,
}

impl From<f64> for Dd {
    fn from(v: f64) -> Self {
        Dd { hi: v, lo: 0.0 }
    }
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn split(a: f64) -> (f64, f64) {
    const SPLITTER: f64 = 134_217_729.0; // 2^27 + 1
    let t = SPLITTER * a;
    let hi = t - (t - a);
    (hi, a - hi)
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let (ah, al) = split(a);
    let (bh, bl) = split(b);
    (p, ((ah * bh - p) + ah * bl + al * bh) + al * bl)
}

impl Dd {
    fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Dd { hi, lo }
    }

    fn mul(self, o: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, o.hi);
        let (hi, lo) = quick_two_sum(p, e + (self.hi * o.lo + self.lo * o.hi));
        Dd { hi, lo }
    }

    fn div_f64(self, b: f64) -> Dd {
        let q1 = self.hi / b;
        let (p, e) = two_prod(q1, b);
        let (s, f) = two_sum(self.hi, -p);
        let r = (s + (f - e + self.lo)) / b;
        let (hi, lo) = quick_two_sum(q1, r);
        Dd { hi, lo }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn j(nu: f64, z: f64) -> f64 {
        bessel_j(BesselOrder::new(nu).unwrap(), z).unwrap()
    }

    #[test]
    fn order_validation() {
        assert!(BesselOrder::new(0.0).is_err());
        assert!(BesselOrder::new(0.75).is_err());
        assert!(BesselOrder::new(8.5).is_err());
        assert_eq!(BesselOrder::half_dim(3).unwrap().nu(), 1.5);
        assert!(BesselOrder::new(8.0).unwrap().is_integer());
    }

    #[test]
    fn domain_errors() {
        let o = BesselOrder::new(1.0).unwrap();
        assert!(matches!(bessel_j(o, -1.0), Err(Error::Domain(_))));
        assert!(bessel_j(o, f64::NAN).is_err());
        assert!(bessel_envelope_sq(o, 0.0).is_err());
    }

    #[test]
    fn values_at_zero() {
        for k in 1..=16 {
            assert_eq!(j(k as f64 / 2.0, 0.0), 0.0);
        }
    }

    #[test]
    fn half_order_sin_zero() {
        assert_abs_diff_eq!(j(0.5, PI), 0.0, epsilon = 1e-16);
    }

    #[test]
    fn known_values() {
        // Reference values (A&S tables / mpmath).
        assert_abs_diff_eq!(j(1.0, 1.0), 0.440_050_585_744_933_5, epsilon = 1e-15);
        assert_abs_diff_eq!(j(2.0, 10.0), 0.254_630_313_685_120_6, epsilon = 1e-14);
        assert_abs_diff_eq!(j(1.0, 100.0), -0.077_145_352_014_112_16, epsilon = 1e-14);
        assert_abs_diff_eq!(j(1.5, 2.0), 0.491_293_778_687_162_3, epsilon = 1e-15);
        assert_abs_diff_eq!(j(3.0, 30.0), 0.129_211_228_759_725_0, epsilon = 1e-14);
    }

    #[test]
    fn half_integer_closed_form() {
        let mut z = 0.1;
        while z <= 100.0 {
            let exact = (2.0 / (PI * z)).sqrt() * z.sin();
            let got = j(0.5, z);
            assert!((got - exact).abs() <= 1e-12 * exact.abs().max(1e-300) + 1e-300);
            z += 0.37;
        }
    }

    #[test]
    fn small_argument_leading_term() {
        // J_ν(z) ≈ (z/2)^ν / Γ(ν+1) as z → 0.
        let z = 1e-3;
        let nu = 2.5;
        let lead = (z / 2.0f64).powf(nu) / gamma_half_integer_plus_one(2);
        assert!((j(nu, z) / lead - 1.0).abs() < 1e-6);
        let lead1 = z / 2.0;
        assert!((j(1.0, z) / lead1 - 1.0).abs() < 1e-6);
    }

    #[test]
    fn series_and_asymptotic_agree_on_overlap_band() {
        for n in 1..=8u32 {
            let mut z = SERIES_SWITCH - 2.0;
            while z <= SERIES_SWITCH + 2.0 {
                let s = series_dd(n, z);
                let h = hankel(n as f64, z);
                assert!((s - h).abs() <= 1e-11, "n={n} z={z}: {s} vs {h}");
                z += 0.05;
            }
        }
    }

    #[test]
    fn miller_matches_series_below_order() {
        // Half-integer orders below z = ν cross-checked against the
        // double-double series written for general orders.
        for n in 1..8u32 {
            let nu = n as f64 + 0.5;
            let mut z = 0.01;
            while z < nu {
                let m = miller_half_integer(n, z);
                let s = series_general(nu, z);
                assert!((m - s).abs() <= 1e-15 + 1e-13 * s.abs(), "nu={nu} z={z}: {m} vs {s}");
                z += 0.13;
            }
        }
    }

    fn series_general(nu: f64, z: f64) -> f64 {
        let mut term = (z / 2.0).powf(nu) / statrs::function::gamma::gamma(nu + 1.0);
        let mut sum = term;
        for k in 1..80 {
            let k = k as f64;
            term *= -(z * z / 4.0) / (k * (k + nu));
            sum += term;
        }
        sum
    }

    #[test]
    fn recurrence_residual() {
        for twice in 3..=14u32 {
            let nu = twice as f64 / 2.0;
            let mut z = 0.1;
            while z <= 100.0 {
                let lo = bessel_j_twice(twice - 2, z);
                let mid = bessel_j_twice(twice, z);
                let hi = bessel_j_twice(twice + 2, z);
                let res = (lo + hi - 2.0 * nu / z * mid).abs();
                assert!(res <= 1e-9 * (1.0 + mid.abs()), "nu={nu} z={z} res={res}");
                z += 0.1;
            }
        }
    }

    #[test]
    fn envelope_bounds_square_on_grid() {
        for twice in 1..=16u8 {
            let o = BesselOrder { twice };
            let mut z = 1e-3;
            while z < 400.0 {
                let v = j(o.nu(), z);
                let env = bessel_envelope_sq(o, z).unwrap();
                assert!(env <= 1.0);
                assert!(v * v <= env, "nu={} z={z}", o.nu());
                z *= 1.0007;
            }
        }
    }

    #[test]
    fn envelope_examples() {
        let o = BesselOrder::new(1.0).unwrap();
        let env = bessel_envelope_sq(o, 1000.0).unwrap();
        assert!(env <= envelope_constant(o) / 1000.0 + 1e-18);
        assert!(j(1.0, 1000.0).powi(2) <= env);
        let o15 = BesselOrder::new(1.5).unwrap();
        assert_eq!(bessel_envelope_sq(o15, 1e-6).unwrap(), 1.0);
        // First zero of J_1.
        let z0 = 3.831_705_970_207_512;
        assert!(j(1.0, z0).abs() < 1e-14);
        assert!(bessel_envelope_sq(o, z0).unwrap() > 0.0);
    }

    #[test]
    fn large_argument_relative_accuracy() {
        // Against the first two corrections of each asymptotic series, good to
        // O(1/z⁴) relative at these arguments.
        for twice in [2u32, 3, 4, 6] {
            let nu = twice as f64 / 2.0;
            for &z in &[5e4, 7.5e4, 1e5] {
                let v = bessel_j_twice(twice, z);
                let chi = z - nu * PI / 2.0 - PI / 4.0;
                let mu = 4.0 * nu * nu;
                let p = 1.0 - (mu - 1.0) * (mu - 9.0) / (128.0 * z * z);
                let q = (mu - 1.0) / (8.0 * z)
                    - (mu - 1.0) * (mu - 9.0) * (mu - 25.0) / (3072.0 * z * z * z);
                let approx = (2.0 / (PI * z)).sqrt() * (p * chi.cos() - q * chi.sin());
                assert!((v - approx).abs() <= 1e-9 * (2.0 / (PI * z)).sqrt(), "twice={twice} z={z} {v} {approx}");
            }
        }
    }
}
