//! One-dimensional quadrature: globally adaptive Gauss–Kronrod (7/15) plus the
//! variable substitutions used for singular endpoints and power-law tails.

use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

/// Tolerances for adaptive integration: stop when error ≤ max(abs, rel·|I|).
#[derive(Debug, Clone, Copy)]
pub struct Tol {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Default for Tol {
    fn default() -> Self {
        Self { abs: 1e-13, rel: 1e-10, max_intervals: 4000 }
    }
}

impl Tol {
    pub fn rel(rel: f64) -> Self {
        Self { rel, ..Self::default() }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Estimate {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    Estimate { value: kron * h, error: ((kron - gauss) * h).abs() }
}

struct Piece {
    a: f64,
    b: f64,
    est: Estimate,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.est.error == other.est.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.est.error.total_cmp(&other.est.error)
    }
}

/// Adaptive integral of `f` over `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: Tol) -> Result<Estimate> {
    if a == b {
        return Ok(Estimate { value: 0.0, error: 0.0 });
    }
    let first = gk15(&f, a, b);
    let mut total = first;
    let mut heap = BinaryHeap::new();
    heap.push(Piece { a, b, est: first });
    loop {
        if !total.value.is_finite() {
            return Err(Error::Quadrature {
                estimate: total.value,
                error: total.error,
                context: format!("non-finite integrand on [{a}, {b}]"),
            });
        }
        if total.error <= tol.abs.max(tol.rel * total.value.abs()) {
            return Ok(total);
        }
        if heap.len() >= tol.max_intervals {
            return Err(Error::Quadrature {
                estimate: total.value,
                error: total.error,
                context: format!("interval budget exhausted on [{a}, {b}]"),
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            return Err(Error::Quadrature {
                estimate: total.value,
                error: total.error,
                context: format!("subinterval below resolution near {}", worst.a),
            });
        }
        let left = gk15(&f, worst.a, mid);
        let right = gk15(&f, mid, worst.b);
        total.value += left.value + right.value - worst.est.value;
        total.error += left.error + right.error - worst.est.error;
        heap.push(Piece { a: worst.a, b: mid, est: left });
        heap.push(Piece { a: mid, b: worst.b, est: right });
        // Recompute the error sum now and then to avoid drift from cancellation.
        if heap.len() % 64 == 0 {
            total.error = heap.iter().map(|p| p.est.error).sum();
        }
    }
}

/// `∫_0^b f(r) dr` for an integrand behaving like `r^s` (s > −1) at zero.
/// Substitutes `r = b·u^p` with `p = 2/(1+s)` which turns the endpoint
/// behavior into a smooth `u^1`.
pub fn integrate_origin_power<F: Fn(f64) -> f64>(f: F, b: f64, s: f64, tol: Tol) -> Result<Estimate> {
    let p = 2.0 / (1.0 + s);
    integrate(
        |u| {
            if u <= 0.0 {
                return 0.0;
            }
            let r = b * u.powf(p);
            f(r) * b * p * u.powf(p - 1.0)
        },
        0.0,
        1.0,
        tol,
    )
}

/// `∫_a^∞ f(r) dr` (a > 0) for an integrand decaying at least like
/// `r^{-1-q}` (q > 0). Substitutes `r = a·u^{-1/q}` so that the pure power
/// tail maps to a constant on `(0, 1]`.
pub fn integrate_tail<F: Fn(f64) -> f64>(f: F, a: f64, q: f64, tol: Tol) -> Result<Estimate> {
    assert!(a > 0.0 && q > 0.0);
    integrate(
        |u| {
            if u <= 0.0 {
                return 0.0;
            }
            let r = a * u.powf(-1.0 / q);
            let v = f(r) * (a / q) * u.powf(-1.0 / q - 1.0);
            if v.is_finite() {
                v
            } else {
                0.0
            }
        },
        0.0,
        1.0,
        tol,
    )
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j + 1) as f64 * z * p2 - j as f64 * p3) / (j + 1) as f64;
            }
            pp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let dz = p1 / pp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Fixed Gauss–Legendre rule mapped to `[a, b]`.
pub fn fixed_gl<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rule: &(Vec<f64>, Vec<f64>)) -> f64 {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    rule.0.iter().zip(&rule.1).map(|(x, w)| w * f(c + h * x)).sum::<f64>() * h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let e = integrate(|x| x * x * x - 2.0 * x + 1.0, -1.0, 2.0, Tol::default()).unwrap();
        assert!((e.value - (15.0 / 4.0 - 3.0 + 3.0)).abs() < 1e-13);
    }

    #[test]
    fn gaussian_integral() {
        let e = integrate(|x: f64| (-x * x).exp(), -10.0, 10.0, Tol::default()).unwrap();
        assert!((e.value - std::f64::consts::PI.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn origin_singularity() {
        // ∫_0^1 r^{-0.9} dr = 10
        let e = integrate_origin_power(|r: f64| r.powf(-0.9), 1.0, -0.9, Tol::default()).unwrap();
        assert!((e.value - 10.0).abs() < 1e-9, "{}", e.value);
    }

    #[test]
    fn power_tail() {
        // ∫_1^∞ r^{-1.5} dr = 2
        let e = integrate_tail(|r: f64| r.powf(-1.5), 1.0, 0.5, Tol::default()).unwrap();
        assert!((e.value - 2.0).abs() < 1e-10, "{}", e.value);
        // ∫_2^∞ e^{-r} dr = e^{-2}
        let e = integrate_tail(|r: f64| (-r).exp(), 2.0, 1.0, Tol::default()).unwrap();
        assert!((e.value - (-2.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn legendre_rule() {
        let rule = gauss_legendre(12);
        let v = fixed_gl(|x: f64| x.powi(20), 0.0, 1.0, &rule);
        assert!((v - 1.0 / 21.0).abs() < 1e-14);
        assert!((rule.1.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn divergent_integrand_reports() {
        let r = integrate(|x: f64| 1.0 / x, 0.0, 1.0, Tol::default());
        assert!(r.is_err());
    }
}
