//! Symmetric pure-jump Lévy processes: isotropic α-stable and tempered
//! (stable-like small jumps, stretched-exponential big jumps).
//!
//! The stable family is normalized so that ψ(ξ) = c₀|ξ|^α with c₀ = 1 by
//! default. The tempered family has Lévy density
//! `ρ(r) = r^{-d-α}·1{r ≤ 1} + exp(-c r^θ)·1{r > 1}` with no extra constant;
//! `θ = ∞` drops the big jumps entirely (truncated stable).

use std::f64::consts::PI;

use rand::Rng as _;
use rand_distr::{Distribution, Exp1, Gamma, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{usage, Error, Result};
use crate::geometry::{gamma, norm, unit_sphere_area};
use crate::quad::{self, Tol};
use crate::rng::{self, Rng};
use crate::stats::MeanVar;

/// Default small-jump cutoff ε of the tempered sampler.
pub const DEFAULT_SMALL_JUMP_CUTOFF: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LevyKind {
    IsotropicStable {
        alpha: f64,
        #[serde(default = "one")]
        c0: f64,
    },
    Tempered {
        alpha: f64,
        /// Tail exponent; `f64::INFINITY` (serialized as `null`) removes jumps longer than 1.
        #[serde(with = "crate::serde_inf")]
        theta: f64,
        c: f64,
        #[serde(default = "default_cutoff")]
        small_jump_cutoff: f64,
    },
}

fn one() -> f64 {
    1.0
}

fn default_cutoff() -> f64 {
    DEFAULT_SMALL_JUMP_CUTOFF
}

/// Convention for the Gaussian coefficient a of a finite-variance model,
/// `a = κ·∫z₁²ν(dz)` with κ = 1 (`Full`) or κ = 1/2 (`Half`).
///
/// `Half` is the one for which ψ(ξ) = a|ξ|² + o(|ξ|²) near the origin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CovarianceConvention {
    Full,
    #[default]
    Half,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevyModel {
    pub dim: usize,
    #[serde(flatten)]
    pub kind: LevyKind,
}

impl LevyModel {
    pub fn stable(dim: usize, alpha: f64) -> Result<Self> {
        let m = Self { dim, kind: LevyKind::IsotropicStable { alpha, c0: 1.0 } };
        m.validate()?;
        Ok(m)
    }

    pub fn tempered(dim: usize, alpha: f64, theta: f64, c: f64) -> Result<Self> {
        let m = Self { dim, kind: LevyKind::Tempered { alpha, theta, c, small_jump_cutoff: DEFAULT_SMALL_JUMP_CUTOFF } };
        m.validate()?;
        Ok(m)
    }

    pub fn with_cutoff(mut self, eps: f64) -> Self {
        if let LevyKind::Tempered { small_jump_cutoff, .. } = &mut self.kind {
            *small_jump_cutoff = eps;
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.dim) {
            return usage(format!("dimension {} not supported (1..=3)", self.dim));
        }
        let alpha = self.alpha();
        if !(alpha > 0.0 && alpha < 2.0) {
            return usage(format!("alpha = {alpha} outside (0, 2)"));
        }
        match self.kind {
            LevyKind::IsotropicStable { c0, .. } => {
                if !(c0 > 0.0 && c0.is_finite()) {
                    return usage("stable normalization c0 must be positive");
                }
            }
            LevyKind::Tempered { theta, c, small_jump_cutoff, .. } => {
                if !(theta > 0.0) {
                    return usage("tempered theta must be in (0, ∞]");
                }
                if !(c > 0.0 && c.is_finite()) {
                    return usage("tempered c must be positive");
                }
                if !(small_jump_cutoff > 0.0 && small_jump_cutoff < 1.0) {
                    return usage("small-jump cutoff must lie in (0, 1)");
                }
            }
        }
        Ok(())
    }

    /// Small-jump (stable-like) index α.
    pub fn alpha(&self) -> f64 {
        match self.kind {
            LevyKind::IsotropicStable { alpha, .. } | LevyKind::Tempered { alpha, .. } => alpha,
        }
    }

    /// Index of the small-|ξ| behavior ψ(ξ) ≍ |ξ|^index: α for stable laws,
    /// 2 for tempered laws (finite second moment).
    pub fn scaling_index(&self) -> f64 {
        match self.kind {
            LevyKind::IsotropicStable { alpha, .. } => alpha,
            LevyKind::Tempered { .. } => 2.0,
        }
    }

    pub fn is_stable(&self) -> bool {
        matches!(self.kind, LevyKind::IsotropicStable { .. })
    }

    /// Radial Lévy density: ν(dz) = radial_density(|z|) dz.
    pub fn radial_density(&self, r: f64) -> f64 {
        let d = self.dim as f64;
        match self.kind {
            LevyKind::IsotropicStable { alpha, c0 } => c0 * stable_density_constant(self.dim, alpha) * r.powf(-d - alpha),
            LevyKind::Tempered { alpha, theta, c, .. } => {
                if r <= 1.0 {
                    r.powf(-d - alpha)
                } else if theta.is_infinite() {
                    0.0
                } else {
                    (-c * r.powf(theta)).exp()
                }
            }
        }
    }

    /// ∫|z|²ν(dz), finite only for tempered models.
    pub fn second_moment(&self) -> Option<f64> {
        match self.kind {
            LevyKind::IsotropicStable { .. } => None,
            LevyKind::Tempered { alpha, .. } => {
                let d = self.dim as f64;
                let inner = 1.0 / (2.0 - alpha);
                let outer = self.big_jump_radial_moment(d + 1.0);
                Some(unit_sphere_area(self.dim) * (inner + outer))
            }
        }
    }

    /// Gaussian coefficient a of the small-|ξ| expansion (per coordinate).
    pub fn gaussian_coefficient(&self, conv: CovarianceConvention) -> Option<f64> {
        let per_axis = self.second_moment()? / self.dim as f64;
        Some(match conv {
            CovarianceConvention::Full => per_axis,
            CovarianceConvention::Half => 0.5 * per_axis,
        })
    }

    /// ∫_1^∞ r^p e^{-c r^θ} dr = Γ((p+1)/θ, c)·c^{-(p+1)/θ}/θ, by quadrature.
    fn big_jump_radial_moment(&self, p: f64) -> f64 {
        match self.kind {
            LevyKind::Tempered { theta, c, .. } if theta.is_finite() => {
                let upper = big_jump_cutoff_radius(theta, c);
                quad::integrate(|r| r.powf(p) * (-c * r.powf(theta)).exp(), 1.0, upper, Tol::rel(1e-12))
                    .map(|e| e.value)
                    .unwrap_or(f64::NAN)
            }
            _ => 0.0,
        }
    }

    /// Characteristic exponent ψ(ξ).
    pub fn psi(&self, xi: &[f64]) -> Result<f64> {
        self.psi_radial(norm(xi))
    }

    /// ψ as a function of |ξ| (all implemented models are isotropic).
    pub fn psi_radial(&self, k: f64) -> Result<f64> {
        let k = k.abs();
        if k == 0.0 {
            return Ok(0.0);
        }
        match self.kind {
            LevyKind::IsotropicStable { alpha, c0 } => Ok(c0 * k.powf(alpha)),
            LevyKind::Tempered { alpha, theta, c, .. } => tempered_psi(self.dim, alpha, theta, c, k),
        }
    }

    /// Build the increment sampler (precomputes jump rates and mixture weights).
    pub fn sampler(&self) -> Result<IncrementSampler> {
        self.validate()?;
        Ok(match self.kind {
            LevyKind::IsotropicStable { alpha, c0 } => IncrementSampler::Stable { dim: self.dim, alpha, c0 },
            LevyKind::Tempered { alpha, theta, c, small_jump_cutoff: eps } => {
                let area = unit_sphere_area(self.dim);
                let d = self.dim as f64;
                let small_rate = area * (eps.powf(-alpha) - 1.0) / alpha;
                let big_rate = area * self.big_jump_radial_moment(d - 1.0);
                let gauss_var = area * eps.powf(2.0 - alpha) / (d * (2.0 - alpha));
                IncrementSampler::Tempered(TemperedSampler {
                    dim: self.dim,
                    alpha,
                    theta,
                    c,
                    eps,
                    small_rate,
                    big_rate,
                    gauss_sd: gauss_var.sqrt(),
                    gamma_shape: if theta.is_finite() { d / theta } else { 1.0 },
                })
            }
        })
    }
}

/// Constant C with ∫(1−cos⟨ξ,z⟩) C|z|^{-d-α} dz = |ξ|^α.
pub fn stable_density_constant(d: usize, alpha: f64) -> f64 {
    let d = d as f64;
    alpha * 2f64.powf(alpha - 1.0) * gamma((d + alpha) / 2.0) / (PI.powf(d / 2.0) * gamma(1.0 - alpha / 2.0))
}

/// Radius beyond which e^{-c r^θ} is below e^{-45}.
pub(crate) fn big_jump_cutoff_radius(theta: f64, c: f64) -> f64 {
    (45.0 / c).powf(1.0 / theta).max(2.0)
}

/// Spherical average of cos⟨ξ,z⟩ with |ξ||z| = x.
fn spherical_cos_average(d: usize, x: f64) -> f64 {
    match d {
        1 => x.cos(),
        2 => bessel_j0(x),
        _ => {
            if x.abs() < 1e-4 {
                1.0 - x * x / 6.0
            } else {
                x.sin() / x
            }
        }
    }
}

/// J₀ via the periodic trapezoid rule on (1/π)∫_0^π cos(x sin θ) dθ, which
/// converges geometrically once the node count exceeds |x|.
pub fn bessel_j0(x: f64) -> f64 {
    let n = 40 + x.abs().ceil() as usize;
    let h = PI / n as f64;
    (0..n).map(|j| (x * ((j as f64 + 0.5) * h).sin()).cos()).sum::<f64>() / n as f64
}

fn tempered_psi(d: usize, alpha: f64, theta: f64, c: f64, k: f64) -> Result<f64> {
    let area = unit_sphere_area(d);
    let df = d as f64;
    // r^{d-1}·r^{-d-α}·(1 − avg cos) ~ k² r^{1-α}/(2d) near 0
    let small = quad::integrate_origin_power(
        |r| {
            let x = k * r;
            let one_minus = if x < 1e-3 {
                x * x / (2.0 * df) - x.powi(4) / (8.0 * df * (df + 2.0))
            } else {
                1.0 - spherical_cos_average(d, x)
            };
            one_minus * r.powf(-1.0 - alpha)
        },
        1.0,
        1.0 - alpha,
        Tol::rel(1e-11),
    )
    .map_err(|e| diag(e, "tempered psi, small jumps"))?;
    let big = if theta.is_finite() {
        let upper = big_jump_cutoff_radius(theta, c);
        // split so each piece holds a bounded number of oscillations
        let pieces = ((upper - 1.0) * k / (4.0 * PI)).ceil().clamp(1.0, 4096.0) as usize;
        let width = (upper - 1.0) / pieces as f64;
        let mut acc = 0.0;
        for p in 0..pieces {
            let a = 1.0 + p as f64 * width;
            let e = quad::integrate(
                |r| (1.0 - spherical_cos_average(d, k * r)) * r.powf(df - 1.0) * (-c * r.powf(theta)).exp(),
                a,
                a + width,
                Tol { abs: 1e-15, ..Tol::rel(1e-11) },
            )
            .map_err(|e| diag(e, "tempered psi, big jumps"))?;
            acc += e.value;
        }
        acc
    } else {
        0.0
    };
    Ok(area * (small.value + big))
}

fn diag(e: Error, what: &str) -> Error {
    match e {
        Error::Quadrature { estimate, error, context } => {
            Error::Quadrature { estimate, error, context: format!("{what}: {context}") }
        }
        other => other,
    }
}

/// Increment sampler for a fixed model.
#[derive(Debug, Clone)]
pub enum IncrementSampler {
    Stable { dim: usize, alpha: f64, c0: f64 },
    Tempered(TemperedSampler),
}

#[derive(Debug, Clone)]
pub struct TemperedSampler {
    dim: usize,
    alpha: f64,
    theta: f64,
    c: f64,
    eps: f64,
    /// ν({ε < |z| ≤ 1})
    small_rate: f64,
    /// ν({|z| > 1})
    big_rate: f64,
    gauss_sd: f64,
    gamma_shape: f64,
}

impl IncrementSampler {
    pub fn dim(&self) -> usize {
        match self {
            IncrementSampler::Stable { dim, .. } => *dim,
            IncrementSampler::Tempered(t) => t.dim,
        }
    }

    /// Add a draw of Z_dt to `out` (in place, so paths can be accumulated).
    pub fn add_increment(&self, dt: f64, rng: &mut Rng, out: &mut [f64]) {
        match self {
            IncrementSampler::Stable { dim, alpha, c0 } => {
                let scale = (c0 * dt).powf(1.0 / alpha);
                if *dim == 1 {
                    out[0] += scale * symmetric_stable_1d(*alpha, rng);
                } else {
                    let a = positive_stable(alpha / 2.0, rng);
                    let s = scale * (2.0 * a).sqrt();
                    for o in out.iter_mut() {
                        let g: f64 = StandardNormal.sample(rng);
                        *o += s * g;
                    }
                }
            }
            IncrementSampler::Tempered(t) => t.add_increment(dt, rng, out),
        }
    }

    pub fn sample_increment(&self, dt: f64, rng: &mut Rng) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.add_increment(dt, rng, &mut out);
        out
    }
}

/// Chambers–Mallows–Stuck draw with E e^{iξX} = e^{-|ξ|^α}.
fn symmetric_stable_1d(alpha: f64, rng: &mut Rng) -> f64 {
    let u = PI * (rng.random::<f64>() - 0.5);
    if (alpha - 1.0).abs() < 1e-12 {
        return u.tan();
    }
    let w: f64 = Exp1.sample(rng);
    (alpha * u).sin() / u.cos().powf(1.0 / alpha) * ((u * (1.0 - alpha)).cos() / w).powf((1.0 - alpha) / alpha)
}

/// Kanter draw of a positive a-stable variable with E e^{-sA} = e^{-s^a}, a ∈ (0,1).
fn positive_stable(a: f64, rng: &mut Rng) -> f64 {
    let u = PI * rng.random::<f64>();
    let w: f64 = Exp1.sample(rng);
    (a * u).sin() / u.sin().powf(1.0 / a) * (((1.0 - a) * u).sin() / w).powf((1.0 - a) / a)
}

impl TemperedSampler {
    fn add_increment(&self, dt: f64, rng: &mut Rng, out: &mut [f64]) {
        let sd = self.gauss_sd * dt.sqrt();
        for o in out.iter_mut() {
            let g: f64 = StandardNormal.sample(rng);
            *o += sd * g;
        }
        let rate = (self.small_rate + self.big_rate) * dt;
        let count = if rate > 0.0 { Poisson::new(rate).expect("positive rate").sample(rng) as u64 } else { 0 };
        let p_small = self.small_rate / (self.small_rate + self.big_rate);
        for _ in 0..count {
            let r = if rng.random::<f64>() < p_small {
                let lo = self.eps.powf(-self.alpha);
                (lo - rng.random::<f64>() * (lo - 1.0)).powf(-1.0 / self.alpha)
            } else {
                self.big_radius(rng)
            };
            add_uniform_direction(r, rng, out);
        }
    }

    /// Radius with density ∝ r^{d-1} e^{-c r^θ} on (1, ∞): s = c r^θ is a
    /// Gamma(d/θ) variable conditioned on s > c.
    fn big_radius(&self, rng: &mut Rng) -> f64 {
        let k = self.gamma_shape;
        let c = self.c;
        let s = if k <= 1.0 || c > k - 1.0 {
            // exponential proposal on (c, ∞) with rate μ, exact rejection
            let mu = if k <= 1.0 { 1.0 } else { 1.0 - (k - 1.0) / c };
            loop {
                let e: f64 = Exp1.sample(rng);
                let s = c + e / mu;
                let log_acc = (k - 1.0) * (s / c).ln() - (1.0 - mu) * (s - c);
                if rng.random::<f64>().ln() <= log_acc {
                    break s;
                }
            }
        } else {
            let g = Gamma::new(k, 1.0).expect("positive shape");
            loop {
                let s: f64 = g.sample(rng);
                if s > c {
                    break s;
                }
            }
        };
        (s / c).powf(1.0 / self.theta)
    }
}

fn add_uniform_direction(r: f64, rng: &mut Rng, out: &mut [f64]) {
    if out.len() == 1 {
        out[0] += if rng.random::<bool>() { r } else { -r };
        return;
    }
    let mut dir = [0.0f64; 3];
    let d = out.len();
    loop {
        let mut n2 = 0.0;
        for v in dir.iter_mut().take(d) {
            *v = StandardNormal.sample(rng);
            n2 += *v * *v;
        }
        if n2 > 1e-300 {
            let s = r / n2.sqrt();
            for (o, v) in out.iter_mut().zip(&dir) {
                *o += s * v;
            }
            return;
        }
    }
}

/// Positions of a path on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSkeleton {
    pub dim: usize,
    pub times: Vec<f64>,
    /// Row-major `times.len() × dim`.
    pub positions: Vec<f64>,
    pub seed: u64,
}

impl PathSkeleton {
    pub fn position(&self, k: usize) -> &[f64] {
        &self.positions[k * self.dim..(k + 1) * self.dim]
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return usage("empty time grid");
    }
    if grid[0] != 0.0 {
        return usage("time grid must start at 0");
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return usage("time grid must be strictly increasing");
    }
    Ok(())
}

/// Sample a path skeleton on `grid` from its own random stream keyed by `seed`.
pub fn sample_path(model: &LevyModel, start: &[f64], grid: &[f64], seed: u64) -> Result<PathSkeleton> {
    check_grid(grid)?;
    if start.len() != model.dim {
        return usage("start point dimension mismatch");
    }
    let sampler = model.sampler()?;
    let mut rng = rng::stream(seed, 0);
    let mut positions = Vec::with_capacity(grid.len() * model.dim);
    positions.extend_from_slice(start);
    let mut cur = start.to_vec();
    for w in grid.windows(2) {
        sampler.add_increment(w[1] - w[0], &mut rng, &mut cur);
        positions.extend_from_slice(&cur);
    }
    Ok(PathSkeleton { dim: model.dim, times: grid.to_vec(), positions, seed })
}

/// Uniform grid 0, dt, 2dt, …, t (last step shortened if dt does not divide t).
pub fn uniform_grid(t: f64, dt: f64) -> Vec<f64> {
    let n = (t / dt - 1e-9).ceil().max(1.0) as usize;
    let mut g: Vec<f64> = (0..n).map(|k| k as f64 * dt).collect();
    g.push(t);
    g
}

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub value: f64,
    pub stderr: f64,
    pub n: u64,
}

impl From<MeanVar> for McEstimate {
    fn from(mv: MeanVar) -> Self {
        Self { value: mv.mean, stderr: mv.stderr(), n: mv.n }
    }
}

/// ℙ₀(τ_{B(0,R)} ≤ t) from path skeletons: exit is declared at the first grid
/// time with |Z| ≥ R. Excursions between grid times are missed, so the
/// estimate is biased low; the bias vanishes as dt → 0.
pub fn exit_prob(model: &LevyModel, radius: f64, t: f64, n_paths: usize, dt: f64, seed: u64) -> Result<McEstimate> {
    if n_paths == 0 {
        return usage("n_paths must be positive");
    }
    if !(radius > 0.0 && t > 0.0 && dt > 0.0) {
        return usage("radius, t and dt must be positive");
    }
    let sampler = model.sampler()?;
    let grid = uniform_grid(t, dt);
    let hits = rng::par_trials(seed, n_paths, |rng, _| {
        let mut z = vec![0.0; model.dim];
        for w in grid.windows(2) {
            sampler.add_increment(w[1] - w[0], rng, &mut z);
            if norm(&z) >= radius {
                return 1.0;
            }
        }
        0.0
    });
    Ok(MeanVar::from_slice(&hits).into())
}

/// ℙ₀(|Z_s| ≥ r) by exact sampling of Z_s.
pub fn tail_prob(model: &LevyModel, r: f64, s: f64, n: usize, seed: u64) -> Result<McEstimate> {
    if n == 0 {
        return usage("sample count must be positive");
    }
    let sampler = model.sampler()?;
    let hits = rng::par_trials(seed, n, |rng, _| {
        let z = sampler.sample_increment(s, rng);
        if norm(&z) >= r {
            1.0
        } else {
            0.0
        }
    });
    Ok(MeanVar::from_slice(&hits).into())
}

/// Transition density at the origin, p(t,0) = (2π)^{-d}∫e^{-tψ(ξ)}dξ.
/// Closed form for stable laws, Fourier inversion by quadrature otherwise.
pub fn density_at_zero(model: &LevyModel, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return usage("t must be positive");
    }
    match model.kind {
        LevyKind::IsotropicStable { alpha, c0 } => {
            let d = model.dim as f64;
            Ok((2.0 * PI).powf(-d) * unit_sphere_area(model.dim) * gamma(d / alpha) / (alpha * (c0 * t).powf(d / alpha)))
        }
        LevyKind::Tempered { .. } => density_at_zero_by_inversion(model, t),
    }
}

/// Fourier inversion of e^{-tψ} by radial quadrature, for any model.
pub fn density_at_zero_by_inversion(model: &LevyModel, t: f64) -> Result<f64> {
    let d = model.dim as f64;
    // integrate until tψ(k) > 60
    let mut upper = 1.0;
    while t * model.psi_radial(upper)? < 60.0 {
        upper *= 2.0;
        if upper > 1e12 {
            return Err(Error::Quadrature {
                estimate: f64::INFINITY,
                error: f64::INFINITY,
                context: "e^{-tψ} not integrable".into(),
            });
        }
    }
    let psi_err = std::cell::Cell::new(None);
    let f = |k: f64| match model.psi_radial(k) {
        Ok(p) => k.powf(d - 1.0) * (-t * p).exp(),
        Err(e) => {
            psi_err.set(Some(e.to_string()));
            0.0
        }
    };
    let e = quad::integrate_origin_power(f, upper, d - 1.0, Tol::rel(1e-9))?;
    if let Some(msg) = psi_err.take() {
        return Err(Error::Quadrature { estimate: e.value, error: f64::NAN, context: msg });
    }
    Ok((2.0 * PI).powf(-d) * unit_sphere_area(model.dim) * e.value)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cauchy() -> LevyModel {
        LevyModel::stable(1, 1.0).unwrap()
    }

    #[test]
    fn psi_trivial_values() {
        let m = cauchy();
        assert_eq!(m.psi(&[0.0]).unwrap(), 0.0);
        assert_eq!(m.psi(&[2.0]).unwrap(), 2.0);
        assert_eq!(m.psi(&[-2.0]).unwrap(), 2.0);
    }

    #[test]
    fn stable_scaling_exact() {
        let m = LevyModel::stable(2, 1.3).unwrap();
        let xi = [0.7, -0.4];
        let base = m.psi(&xi).unwrap();
        for r in [0.5, 2.0, 10.0] {
            let scaled = m.psi(&[xi[0] * r, xi[1] * r]).unwrap();
            assert!((scaled - r.powf(1.3) * base).abs() <= 1e-14 * scaled);
        }
    }

    #[test]
    fn stable_constant_reproduces_exponent() {
        // ∫(1−cos(ξz))C|z|^{-1-α}dz = |ξ|^α, checked by quadrature for d = 1
        for alpha in [0.5, 1.0, 1.5] {
            let c = stable_density_constant(1, alpha);
            let k: f64 = 1.7;
            let near = quad::integrate_origin_power(
                |r| 2.0 * (0.5 * k * r).sin().powi(2) * r.powf(-1.0 - alpha),
                1.0,
                1.0 - alpha,
                Tol::rel(1e-10),
            )
            .unwrap()
            .value;
            // far part: ∫_1^∞ r^{-1-α} dr − ∫_1^∞ cos(kr) r^{-1-α} dr
            let mut far_cos = 0.0;
            let period = 2.0 * PI / k;
            let mut a = 1.0;
            for _ in 0..20000 {
                far_cos +=
                    quad::integrate(|r| (k * r).cos() * r.powf(-1.0 - alpha), a, a + period, Tol::rel(1e-12)).unwrap().value;
                a += period;
            }
            let far = 1.0 / alpha - far_cos;
            let psi = 2.0 * c * (near + far);
            assert!((psi - k.powf(alpha)).abs() < 2e-4, "alpha={alpha}: {psi}");
        }
    }

    #[test]
    fn cauchy_density_at_zero() {
        let p = density_at_zero(&cauchy(), 1.0).unwrap();
        assert!((p - 1.0 / PI).abs() < 1e-14);
        let q = density_at_zero_by_inversion(&cauchy(), 1.0).unwrap();
        assert!((q - 1.0 / PI).abs() < 1e-9);
    }

    #[test]
    fn stable_density_scaling_and_monotone() {
        let m = LevyModel::stable(2, 1.5).unwrap();
        let p1 = density_at_zero(&m, 1.0).unwrap();
        for t in [0.3, 2.0, 7.0] {
            let pt = density_at_zero(&m, t).unwrap();
            assert!((pt - t.powf(-2.0 / 1.5) * p1).abs() < 1e-12 * pt);
            let q = density_at_zero_by_inversion(&m, t).unwrap();
            assert!((q - pt).abs() < 1e-7 * pt);
        }
        let t = LevyModel::tempered(1, 1.0, 1.0, 1.0).unwrap();
        let mut prev = f64::INFINITY;
        for s in [0.1, 0.2, 0.5, 1.0, 2.0, 4.0] {
            let p = density_at_zero(&t, s).unwrap();
            assert!(p > 0.0 && p < prev);
            prev = p;
        }
    }

    #[test]
    fn bessel_j0_values() {
        assert!((bessel_j0(0.0) - 1.0).abs() < 1e-15);
        assert!((bessel_j0(1.0) - 0.765_197_686_557_966_6).abs() < 1e-14);
        assert!((bessel_j0(10.0) - (-0.245_935_764_451_348_3)).abs() < 1e-13);
    }

    #[test]
    fn tempered_small_xi_is_quadratic() {
        let m = LevyModel::tempered(1, 1.0, 1.0, 1.0).unwrap();
        let a = m.gaussian_coefficient(CovarianceConvention::Half).unwrap();
        let k = 1e-3;
        let p = m.psi_radial(k).unwrap();
        assert!((p / (a * k * k) - 1.0).abs() < 1e-4);
        // θ = ∞ still has finite second moment
        let trunc = LevyModel::tempered(2, 1.2, f64::INFINITY, 1.0).unwrap();
        assert!(trunc.second_moment().unwrap().is_finite());
    }

    #[test]
    fn tempered_second_moment_closed_form() {
        // d = 1, α = 1, θ = 1, c = 1: 2(1/(2−α) + ∫_1^∞ r² e^{-r} dr) = 2(1 + 5/e)
        let m = LevyModel::tempered(1, 1.0, 1.0, 1.0).unwrap();
        let want = 2.0 * (1.0 + 5.0 / std::f64::consts::E);
        assert!((m.second_moment().unwrap() - want).abs() < 1e-10);
    }

    #[test]
    fn validation_rejects_bad_models() {
        assert!(LevyModel::stable(1, 2.0).is_err());
        assert!(LevyModel::stable(0, 1.0).is_err());
        assert!(LevyModel::tempered(1, 1.0, 0.0, 1.0).is_err());
        assert!(LevyModel::tempered(1, 1.0, 1.0, 1.0).unwrap().with_cutoff(2.0).validate().is_err());
    }

    #[test]
    fn single_point_grid() {
        let p = sample_path(&cauchy(), &[0.25], &[0.0], 1).unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(p.position(0), &[0.25]);
        assert!(sample_path(&cauchy(), &[0.0], &[], 1).is_err());
        assert!(sample_path(&cauchy(), &[0.0], &[0.0, 1.0, 1.0], 1).is_err());
    }

    #[test]
    fn path_determinism() {
        let g = uniform_grid(1.0, 0.1);
        let a = sample_path(&cauchy(), &[0.0], &g, 5).unwrap();
        let b = sample_path(&cauchy(), &[0.0], &g, 5).unwrap();
        let c = sample_path(&cauchy(), &[0.0], &g, 6).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.positions, c.positions);
    }

    #[test]
    fn uniform_grid_endpoints() {
        let g = uniform_grid(1.0, 0.3);
        assert_eq!(g.first(), Some(&0.0));
        assert_eq!(g.last(), Some(&1.0));
        assert_eq!(g.len(), 5);
        assert_eq!(uniform_grid(1.0, 0.25).len(), 5);
    }

    #[test]
    fn exit_prob_vanishes_for_huge_radius() {
        let e = exit_prob(&LevyModel::tempered(1, 1.0, 1.0, 1.0).unwrap(), 1e3, 1.0, 2000, 0.05, 3).unwrap();
        assert_eq!(e.value, 0.0);
        assert!(exit_prob(&cauchy(), 1.0, 1.0, 0, 0.1, 1).is_err());
    }
}
