//! Dense kernels that must not depend on an eigendecomposition: the matrix
//! exponential (semigroup oracle) and Sylvester inertia by symmetric
//! indefinite LDLᵀ (eigenvalue counting).

use nalgebra::DMatrix;

/// e^{M} by scaling and squaring of a degree-18 Taylor polynomial.
///
/// The scaled matrix has ∞-norm ≤ 1/2, where the truncated tail is below
/// 2^{-19}/19! ≈ 1e-23 relative.
pub fn expm(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let norm = (0..n).map(|i| (0..n).map(|j| m[(i, j)].abs()).sum::<f64>()).fold(0.0, f64::max);
    let s = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let scaled = m / 2f64.powi(s);
    let mut result = DMatrix::identity(n, n);
    let mut term = DMatrix::identity(n, n);
    for k in 1..=18 {
        term = &term * &scaled / k as f64;
        result += &term;
    }
    for _ in 0..s {
        result = &result * &result;
    }
    result
}

/// Number of (negative, zero, positive) eigenvalues of a symmetric matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Inertia {
    pub negative: usize,
    pub zero: usize,
    pub positive: usize,
}

/// Inertia of a symmetric matrix via Bunch–Kaufman diagonal pivoting
/// (1×1 and 2×2 pivots, α = (1+√17)/8). Only the lower triangle is read.
pub fn inertia(a: &DMatrix<f64>) -> Inertia {
    let n = a.nrows();
    // full symmetric working copy, row-major for cache-friendly updates
    let mut w = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            w[i * n + j] = a[(i, j)];
            w[j * n + i] = a[(i, j)];
        }
    }
    let alpha = (1.0 + 17f64.sqrt()) / 8.0;
    let tiny = f64::EPSILON * w.iter().fold(0.0f64, |m, v| m.max(v.abs())) * n as f64;
    let mut res = Inertia { negative: 0, zero: 0, positive: 0 };
    let swap = |w: &mut Vec<f64>, p: usize, q: usize| {
        if p == q {
            return;
        }
        for j in 0..n {
            w.swap(p * n + j, q * n + j);
        }
        for i in 0..n {
            w.swap(i * n + p, i * n + q);
        }
    };
    let mut k = 0;
    while k < n {
        let akk = w[k * n + k].abs();
        let (imax, colmax) =
            ((k + 1)..n).map(|i| (i, w[i * n + k].abs())).fold((k, 0.0), |best, c| if c.1 > best.1 { c } else { best });
        if akk.max(colmax) <= tiny {
            res.zero += 1;
            k += 1;
            continue;
        }
        let two_by_two;
        if akk >= alpha * colmax {
            two_by_two = false;
        } else {
            let rowmax = (k..n).filter(|&j| j != imax).map(|j| w[imax * n + j].abs()).fold(0.0, f64::max);
            if akk * rowmax >= alpha * colmax * colmax {
                two_by_two = false;
            } else if w[imax * n + imax].abs() >= alpha * rowmax {
                swap(&mut w, k, imax);
                two_by_two = false;
            } else {
                swap(&mut w, k + 1, imax);
                two_by_two = true;
            }
        }
        if !two_by_two {
            let d = w[k * n + k];
            if d.abs() <= tiny {
                res.zero += 1;
            } else if d < 0.0 {
                res.negative += 1;
            } else {
                res.positive += 1;
            }
            if d != 0.0 {
                for i in (k + 1)..n {
                    let l = w[i * n + k] / d;
                    if l == 0.0 {
                        continue;
                    }
                    for j in (k + 1)..=i {
                        w[i * n + j] -= l * w[j * n + k];
                    }
                }
                for i in (k + 1)..n {
                    for j in (i + 1)..n {
                        w[i * n + j] = w[j * n + i];
                    }
                }
            }
            k += 1;
        } else {
            let (a11, a21, a22) = (w[k * n + k], w[(k + 1) * n + k], w[(k + 1) * n + k + 1]);
            let det = a11 * a22 - a21 * a21;
            // eigenvalues of the 2×2 pivot
            let tr = a11 + a22;
            if det < 0.0 {
                res.negative += 1;
                res.positive += 1;
            } else if tr < 0.0 {
                res.negative += 2;
            } else {
                res.positive += 2;
            }
            for i in (k + 2)..n {
                let (b1, b2) = (w[i * n + k], w[i * n + k + 1]);
                // [l1 l2] = [b1 b2]·D⁻¹
                let l1 = (b1 * a22 - b2 * a21) / det;
                let l2 = (b2 * a11 - b1 * a21) / det;
                for j in (k + 2)..=i {
                    w[i * n + j] -= l1 * w[j * n + k] + l2 * w[j * n + k + 1];
                }
            }
            for i in (k + 2)..n {
                for j in (i + 1)..n {
                    w[i * n + j] = w[j * n + i];
                }
            }
            k += 2;
        }
    }
    res
}

/// Number of eigenvalues of `a` strictly below `lambda`.
pub fn count_below(a: &DMatrix<f64>, lambda: f64) -> usize {
    let n = a.nrows();
    let shifted = a - DMatrix::identity(n, n) * lambda;
    inertia(&shifted).negative
}
