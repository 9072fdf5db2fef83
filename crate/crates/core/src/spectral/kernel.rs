//! Cell-integrated jump weights on the lattice hℤ^d.
//!
//! w(k) = ν(C_k) where C_k = hk + [−h/2, h/2]^d. Jumps that stay inside the
//! central cell C₀ are replaced by the second-order Taylor term
//! (σ²/2)Δf, σ² = ∫_{C₀} z₁² ν(dz), discretized with the 2d-point Laplacian.

use std::f64::consts::PI;

use crate::error::{usage, Result};
use crate::levy::{big_jump_cutoff_radius, LevyKind, LevyModel};
use crate::quad::{self, Tol};

/// The generator being discretized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Generator {
    /// Pure-jump Lévy generator with Lévy density ν.
    Levy(LevyModel),
    /// a·Δ (ψ(ξ) = a|ξ|²), the α = 2 reference.
    Laplacian { dim: usize, a: f64 },
}

impl Generator {
    pub fn dim(&self) -> usize {
        match self {
            Generator::Levy(m) => m.dim,
            Generator::Laplacian { dim, .. } => *dim,
        }
    }

    /// Scaling index: α for stable laws, 2 for the Laplacian and tempered laws.
    pub fn scaling_index(&self) -> f64 {
        match self {
            Generator::Levy(m) => m.scaling_index(),
            Generator::Laplacian { .. } => 2.0,
        }
    }
}

/// ∫_a^b r^p ρ(r) dr for the radial Lévy density ρ of `model` (b may be ∞).
pub fn radial_moment(model: &LevyModel, p: f64, a: f64, b: f64) -> Result<f64> {
    let d = model.dim as f64;
    if b <= a {
        return Ok(0.0);
    }
    let power = |coef: f64, e: f64, lo: f64, hi: f64| -> f64 {
        if hi <= lo {
            return 0.0;
        }
        let hi_term = if hi.is_infinite() { 0.0 } else { hi.powf(e + 1.0) };
        coef * (hi_term - lo.powf(e + 1.0)) / (e + 1.0)
    };
    match model.kind {
        LevyKind::IsotropicStable { .. } => {
            // ρ(r) = C r^{-d-α}: reuse radial_density at r = 1 for C
            let c = model.radial_density(1.0);
            Ok(power(c, p - d - model.alpha(), a, b))
        }
        LevyKind::Tempered { alpha, theta, c, .. } => {
            let mut acc = power(1.0, p - d - alpha, a, b.min(1.0));
            if theta.is_finite() && b > 1.0 {
                let lo = a.max(1.0);
                let hi = b.min(big_jump_cutoff_radius(theta, c));
                if hi > lo {
                    acc += quad::integrate(|r| r.powf(p) * (-c * r.powf(theta)).exp(), lo, hi, Tol::rel(1e-12))?.value;
                }
            }
            Ok(acc)
        }
    }
}

/// Lattice jump weights for one (generator, h).
#[derive(Debug, Clone)]
pub struct KernelTable {
    pub dim: usize,
    pub h: f64,
    /// Largest |k_i| tabulated.
    pub reach: usize,
    /// Weights indexed by sorted absolute offsets (see [`KernelTable::weight`]).
    weights: Vec<f64>,
    /// Σ_{k≠0} of all weights on the infinite lattice, Taylor term included.
    pub total_rate: f64,
    /// ∫_{C₀} z₁² ν(dz).
    pub sigma2: f64,
}

impl KernelTable {
    pub fn new(generator: &Generator, h: f64, reach: usize) -> Result<Self> {
        let dim = generator.dim();
        if !(1..=2).contains(&dim) {
            return usage(format!("lattice assembly supports d ∈ {{1, 2}}, got {dim}"));
        }
        if !(h > 0.0) {
            return usage("lattice spacing must be positive");
        }
        let side = reach + 1;
        let mut weights = vec![0.0; side.pow(dim as u32)];
        let (sigma2, outside) = match generator {
            Generator::Laplacian { a, .. } => (2.0 * a, 0.0),
            Generator::Levy(model) => {
                if let LevyKind::Tempered { .. } = model.kind {
                    if h > 2.0 {
                        return usage("tempered assembly needs h ≤ 2 (central cell inside the unit ball)");
                    }
                }
                let half = 0.5 * h;
                if dim == 1 {
                    for (k, w) in weights.iter_mut().enumerate().skip(1) {
                        *w = radial_moment(model, 0.0, (k as f64 - 0.5) * h, (k as f64 + 0.5) * h)?;
                    }
                    let sigma2 = 2.0 * radial_moment(model, 2.0, 0.0, half)?;
                    let outside = 2.0 * radial_moment(model, 0.0, half, f64::INFINITY)?;
                    (sigma2, outside)
                } else {
                    for i in 0..side {
                        for j in 0..=i {
                            if i == 0 && j == 0 {
                                continue;
                            }
                            let w = cell_mass_2d(model, h, i, j);
                            weights[i * side + j] = w;
                            weights[j * side + i] = w;
                        }
                    }
                    // C₀ \ B(0, h/2): arc length of radius-r circle inside the square
                    let arc = |r: f64| r * (2.0 * PI - 8.0 * (half / r).min(1.0).acos());
                    let corner = |p: f64| -> Result<f64> {
                        Ok(quad::integrate(
                            |r| arc(r) * r.powf(p) * model.radial_density(r),
                            half,
                            half * 2f64.sqrt(),
                            Tol::rel(1e-12),
                        )?
                        .value)
                    };
                    let sigma2 = 0.5 * (2.0 * PI * radial_moment(model, 3.0, 0.0, half)? + corner(2.0)?);
                    let outside = 2.0 * PI * radial_moment(model, 1.0, half, f64::INFINITY)? - corner(0.0)?;
                    (sigma2, outside)
                }
            }
        };
        // Taylor term (σ²/2)Δ on the 2d nearest neighbors
        let nn = sigma2 / (2.0 * h * h);
        if side > 1 {
            if dim == 1 {
                weights[1] += nn;
            } else {
                weights[side] += nn;
                weights[1] += nn;
            }
        }
        Ok(Self { dim, h, reach, weights, total_rate: outside + 2.0 * dim as f64 * nn, sigma2 })
    }

    /// Weight for lattice offset k (k ≠ 0, |k_i| ≤ reach); symmetric by construction.
    pub fn weight(&self, k: &[i64]) -> f64 {
        let side = self.reach + 1;
        match self.dim {
            1 => self.weights[k[0].unsigned_abs() as usize],
            _ => self.weights[k[0].unsigned_abs() as usize * side + k[1].unsigned_abs() as usize],
        }
    }
}

/// ν(C_k) for k = (i, j) ≥ 0 by tensor Gauss–Legendre, split at the unit circle
/// crossing for tempered densities.
fn cell_mass_2d(model: &LevyModel, h: f64, i: usize, j: usize) -> f64 {
    let (x0, x1) = ((i as f64 - 0.5) * h, (i as f64 + 0.5) * h);
    let (y0, y1) = ((j as f64 - 0.5) * h, (j as f64 + 0.5) * h);
    let near = i.max(j) <= 2;
    let rmin = (x0.max(0.0).powi(2) + y0.max(0.0).powi(2)).sqrt();
    let rmax = (x1 * x1 + y1 * y1).sqrt();
    let crosses_unit = !model.is_stable() && rmin < 1.0 && rmax > 1.0;
    let n = if near || crosses_unit {
        24
    } else if i.max(j) <= 8 {
        10
    } else {
        6
    };
    let rule = quad::gauss_legendre(n);
    let splits = if crosses_unit { 4 } else { 1 };
    let mut acc = 0.0;
    for a in 0..splits {
        for b in 0..splits {
            let (xa, xb) = (x0 + (x1 - x0) * a as f64 / splits as f64, x0 + (x1 - x0) * (a + 1) as f64 / splits as f64);
            let (ya, yb) = (y0 + (y1 - y0) * b as f64 / splits as f64, y0 + (y1 - y0) * (b + 1) as f64 / splits as f64);
            acc += quad::fixed_gl(
                |x| quad::fixed_gl(|y| model.radial_density((x * x + y * y).sqrt()), ya, yb, &rule),
                xa,
                xb,
                &rule,
            );
        }
    }
    acc
}
