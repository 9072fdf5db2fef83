//! Poissonian environments ω, the potential V^ω(x) = Σ_i φ(x − ω_i), the
//! Laplace functional H(t) and the exponentially tilted field.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng as _;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{usage, Error, Result};
use crate::geometry::{gamma, norm, unit_ball_volume, unit_sphere_area};
use crate::quad::{self, Tol};
use crate::rng;

/// φ(x) = K·(1 ∧ |x|^{-d-β}); β = ∞ gives K·1{|x| ≤ 1}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapeFunction {
    #[serde(rename = "K")]
    pub k: f64,
    #[serde(with = "crate::serde_inf")]
    pub beta: f64,
    pub dim: usize,
}

impl ShapeFunction {
    /// Validates (K, β, d) and the integrability certificate ∫(e^φ − 1) < ∞.
    pub fn new(k: f64, beta: f64, dim: usize) -> Result<Self> {
        let s = Self { k, beta, dim };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.dim) {
            return usage(format!("dimension {} not supported (1..=3)", self.dim));
        }
        if !(self.k > 0.0 && self.k.is_finite()) {
            return usage("shape amplitude K must be positive");
        }
        if !(self.beta > 0.0) {
            return usage("shape exponent beta must lie in (0, ∞]");
        }
        let cert = self.integrability_certificate()?;
        if !cert.is_finite() {
            return usage("shape fails ∫(e^φ − 1)dx < ∞");
        }
        Ok(())
    }

    /// ∫(e^{φ(x)} − 1)dx by radial quadrature.
    pub fn integrability_certificate(&self) -> Result<f64> {
        self.radial_integral(|p| p.exp_m1(), f64::INFINITY)
    }

    /// Radial profile φ₀(r); also the envelope sup_{|x|≥r} φ(x) since the
    /// profile is nonincreasing.
    pub fn profile(&self, r: f64) -> f64 {
        if r <= 1.0 {
            self.k
        } else if self.beta.is_infinite() {
            0.0
        } else {
            self.k * r.powf(-(self.dim as f64) - self.beta)
        }
    }

    pub fn envelope(&self, r: f64) -> f64 {
        self.profile(r)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.profile(norm(x))
    }

    /// ∫φ = K·w_d + K·S_d/β.
    pub fn integral(&self) -> f64 {
        let inner = self.k * unit_ball_volume(self.dim);
        if self.beta.is_infinite() {
            inner
        } else {
            inner + self.k * unit_sphere_area(self.dim) / self.beta
        }
    }

    /// ∫_{|z|>r₀} φ₀(z)dz.
    pub fn tail_mass(&self, r0: f64) -> f64 {
        let area = unit_sphere_area(self.dim);
        let d = self.dim as f64;
        let outer = |r: f64| {
            if self.beta.is_infinite() {
                0.0
            } else {
                self.k * area * r.powf(-self.beta) / self.beta
            }
        };
        if r0 >= 1.0 {
            outer(r0)
        } else {
            self.k * area * (1.0 - r0.max(0.0).powf(d)) / d + outer(1.0)
        }
    }

    /// S_d·∫_0^{r_max} r^{d-1} g(φ₀(r)) dr for g with g(0) = 0 and
    /// g(φ) = O(φ) as φ → 0.
    pub fn radial_integral<G: Fn(f64) -> f64>(&self, g: G, r_max: f64) -> Result<f64> {
        let area = unit_sphere_area(self.dim);
        let d = self.dim as f64;
        let r1 = r_max.min(1.0);
        let mut acc = g(self.k) * r1.powf(d) / d;
        if r_max > 1.0 && self.beta.is_finite() {
            let f = |r: f64| r.powf(d - 1.0) * g(self.profile(r));
            // g(φ₀) saturates until φ₀ ~ 1, then decays like r^{-1-β}
            let knee = self.k.max(1.0).powf(1.0 / (d + self.beta)).max(1.0);
            let tol = Tol::rel(1e-11);
            if r_max <= 4.0 * knee {
                acc += quad::integrate(f, 1.0, r_max, tol)?.value;
            } else {
                let mid = 4.0 * knee;
                acc += quad::integrate(f, 1.0, mid, tol)?.value;
                acc += if r_max.is_infinite() {
                    quad::integrate_tail(f, mid, self.beta, tol)?.value
                } else {
                    // r = mid·u^{-1/β} maps [mid, r_max] onto [(mid/r_max)^β, 1]
                    let q = self.beta;
                    let lo = (mid / r_max).powf(q);
                    quad::integrate(
                        |u| {
                            let r = mid * u.powf(-1.0 / q);
                            f(r) * r / (q * u)
                        },
                        lo,
                        1.0,
                        tol,
                    )?
                    .value
                };
            }
        }
        Ok(area * acc)
    }

    /// ∫_{[-L,L]^d} g(φ(z))dz for d ∈ {1, 2} (exact box geometry).
    pub fn box_integral<G: Fn(f64) -> f64>(&self, g: G, half_width: f64) -> Result<f64> {
        match self.dim {
            1 => self.radial_integral(g, half_width),
            2 => {
                let l = half_width;
                let inner = self.radial_integral(&g, l)?;
                // circle of radius r ∈ (L, L√2) keeps arc length (2π − 8 arccos(L/r))·r in the square
                let corner = quad::integrate(
                    |r| (2.0 * PI - 8.0 * (l / r).min(1.0).acos()) * r * g(self.profile(r)),
                    l,
                    l * 2f64.sqrt(),
                    Tol::rel(1e-11),
                )?;
                Ok(inner + corner.value)
            }
            d => usage(format!("box integral not implemented for d = {d}")),
        }
    }
}

/// A frozen realization of a homogeneous Poisson field in [−L, L]^d.
#[derive(Debug, Clone, PartialEq)]
pub struct PoissonField {
    pub dim: usize,
    pub rho: f64,
    /// L
    pub half_width: f64,
    /// L_obs: potentials are only evaluated in [−L_obs, L_obs]^d
    pub obs_half_width: f64,
    pub seed: u64,
    /// Row-major `len × dim`.
    pub points: Vec<f64>,
}

/// JSON sidecar written next to a field's point CSV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldMeta {
    pub rho: f64,
    #[serde(rename = "L")]
    pub half_width: f64,
    pub seed: u64,
    pub d: usize,
}

/// Sample a rate-ρ Poisson field on [−L, L]^d, observation window half the box.
pub fn sample_field(dim: usize, rho: f64, half_width: f64, seed: u64) -> Result<PoissonField> {
    if !(rho > 0.0 && half_width > 0.0) {
        return usage("rho and L must be positive");
    }
    if !(1..=3).contains(&dim) {
        return usage(format!("dimension {dim} not supported (1..=3)"));
    }
    let mut r = rng::stream(seed, 0);
    let mean = rho * (2.0 * half_width).powi(dim as i32);
    let n = Poisson::new(mean).map_err(|e| Error::Usage(format!("Poisson mean {mean}: {e}")))?.sample(&mut r) as usize;
    let points = (0..n * dim).map(|_| half_width * (2.0 * r.random::<f64>() - 1.0)).collect();
    Ok(PoissonField { dim, rho, half_width, obs_half_width: 0.5 * half_width, seed, points })
}

impl PoissonField {
    pub fn empty(dim: usize, rho: f64, half_width: f64) -> Self {
        Self { dim, rho, half_width, obs_half_width: 0.5 * half_width, seed: 0, points: Vec::new() }
    }

    pub fn from_points(dim: usize, rho: f64, half_width: f64, points: Vec<f64>) -> Result<Self> {
        if !points.len().is_multiple_of(dim) {
            return usage("point buffer length is not a multiple of d");
        }
        Ok(Self { points, ..Self::empty(dim, rho, half_width) })
    }

    pub fn with_observation(mut self, obs_half_width: f64) -> Result<Self> {
        if !(obs_half_width > 0.0 && obs_half_width < self.half_width) {
            return usage("observation window must lie strictly inside the box");
        }
        self.obs_half_width = obs_half_width;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.points.chunks_exact(self.dim)
    }

    pub fn in_window(&self, x: &[f64]) -> bool {
        x.iter().all(|v| v.abs() <= self.obs_half_width)
    }

    /// Expected potential mass from outside the box seen from any point of
    /// the observation window: ρ∫_{|z|>L−L_obs} φ₀(z)dz.
    pub fn tail_bound(&self, shape: &ShapeFunction) -> f64 {
        self.rho * shape.tail_mass(self.half_width - self.obs_half_width)
    }

    /// V^ω(x) = Σ_i φ(x − ω_i); x must lie in the observation window.
    pub fn potential(&self, shape: &ShapeFunction, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return usage("evaluation point dimension mismatch");
        }
        if !self.in_window(x) {
            return usage(format!("x = {x:?} outside the observation window (tail certificate invalid)"));
        }
        Ok(self.potential_unchecked(shape, x))
    }

    /// V^ω(x) without the window check.
    pub fn potential_unchecked(&self, shape: &ShapeFunction, x: &[f64]) -> f64 {
        self.iter()
            .map(|p| {
                let r2: f64 = p.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
                shape.profile(r2.sqrt())
            })
            .sum()
    }

    pub fn meta(&self) -> FieldMeta {
        FieldMeta { rho: self.rho, half_width: self.half_width, seed: self.seed, d: self.dim }
    }

    /// Write `<stem>.csv` (header x1,…,xd) and `<stem>.json` sidecar.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<(PathBuf, PathBuf)> {
        let csv_path = dir.join(format!("{stem}.csv"));
        let json_path = dir.join(format!("{stem}.json"));
        let mut w = csv::Writer::from_path(&csv_path)?;
        w.write_record((1..=self.dim).map(|i| format!("x{i}")))?;
        for p in self.iter() {
            w.write_record(p.iter().map(|v| v.to_string()))?;
        }
        w.flush()?;
        fs::write(&json_path, serde_json::to_string_pretty(&self.meta())? + "\n")?;
        Ok((csv_path, json_path))
    }

    pub fn read(dir: &Path, stem: &str) -> Result<Self> {
        let meta: FieldMeta = serde_json::from_str(&fs::read_to_string(dir.join(format!("{stem}.json")))?)?;
        let mut r = csv::Reader::from_path(dir.join(format!("{stem}.csv")))?;
        let header = r.headers()?.clone();
        if header.len() != meta.d {
            return usage(format!("field CSV has {} columns, sidecar says d = {}", header.len(), meta.d));
        }
        let mut points = Vec::new();
        for rec in r.records() {
            for v in rec?.iter() {
                points.push(v.parse::<f64>().map_err(|e| Error::Usage(format!("bad coordinate {v:?}: {e}")))?);
            }
        }
        let mut f = Self::from_points(meta.d, meta.rho, meta.half_width, points)?;
        f.seed = meta.seed;
        Ok(f)
    }
}

/// Outcome of the sup-potential check sup_{B(0,r)} V ≤ 3d·log r.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupCheck {
    pub holds: bool,
    pub sup: f64,
    pub bound: f64,
    pub grid_points: usize,
}

/// Evaluate V on a grid of spacing `spacing` in B(0,r) plus every field point
/// in B(0,r), and compare the maximum with 3d·log r.
pub fn sup_potential_check(field: &PoissonField, shape: &ShapeFunction, r: f64, spacing: f64) -> Result<SupCheck> {
    if r < 2.0 {
        return usage("sup-potential check needs r ≥ 2");
    }
    if !(spacing > 0.0) {
        return usage("grid spacing must be positive");
    }
    if r > field.obs_half_width {
        return usage("B(0,r) must lie inside the observation window");
    }
    let d = field.dim;
    let m = (r / spacing).floor() as i64;
    let mut sup = 0.0f64;
    let mut count = 0usize;
    let mut idx = vec![-m; d];
    let mut x = vec![0.0; d];
    'grid: loop {
        for (xi, &i) in x.iter_mut().zip(&idx) {
            *xi = i as f64 * spacing;
        }
        if norm(&x) <= r {
            sup = sup.max(field.potential_unchecked(shape, &x));
            count += 1;
        }
        for i in idx.iter_mut() {
            *i += 1;
            if *i <= m {
                continue 'grid;
            }
            *i = -m;
        }
        break;
    }
    for p in field.iter() {
        if norm(p) <= r {
            sup = sup.max(field.potential_unchecked(shape, p));
            count += 1;
        }
    }
    let bound = 3.0 * d as f64 * r.ln();
    Ok(SupCheck { holds: sup <= bound, sup, bound, grid_points: count })
}

/// H(t) = log E_Q[e^{−tV(0)}] = ρ∫(e^{−tφ(z)} − 1)dz.
pub fn campbell_laplace(shape: &ShapeFunction, rho: f64, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return usage("t must be nonnegative");
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    Ok(rho * shape.radial_integral(|p| (-t * p).exp_m1(), f64::INFINITY)?)
}

/// Same functional restricted to the sampling box [−L, L]^d (d ≤ 2): the exact
/// target of a finite-box Monte Carlo estimate.
pub fn campbell_laplace_box(shape: &ShapeFunction, rho: f64, t: f64, half_width: f64) -> Result<f64> {
    Ok(rho * shape.box_integral(|p| (-t * p).exp_m1(), half_width)?)
}

/// Parameters of the exponentially tilted field at time scale t.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TiltParams {
    pub t: f64,
    /// a₁ = ρ·w_d·Γ(β/(d+β))
    pub a1: f64,
    /// λ(t) = q₁(log t)^{−β/d}
    pub lambda: f64,
    /// ρ₀(λ(t)) with ρ₀(s) = ((d+β)s/(d·a₁))^{−(d+β)/β}
    pub rho0: f64,
}

pub fn a1_constant(d: usize, beta: f64, rho: f64) -> f64 {
    let df = d as f64;
    rho * unit_ball_volume(d) * gamma(beta / (df + beta))
}

/// q₁ = (d/(d+β))·(β/(d(d+β)))^{β/d}·[ρw_dΓ(β/(d+β))]^{(d+β)/d}·K.
pub fn q1_constant(d: usize, beta: f64, rho: f64, k: f64) -> f64 {
    let df = d as f64;
    df / (df + beta) * (beta / (df * (df + beta))).powf(beta / df) * a1_constant(d, beta, rho).powf((df + beta) / df) * k
}

/// ρ₀(s): the inverse of s ↦ −H′ under H(t) ≈ −a₁t^{d/(d+β)}.
pub fn rho0_of(d: usize, beta: f64, a1: f64, s: f64) -> f64 {
    let df = d as f64;
    ((df + beta) * s / (df * a1)).powf(-(df + beta) / beta)
}

impl TiltParams {
    pub fn new(shape: &ShapeFunction, rho: f64, t: f64) -> Result<Self> {
        if shape.beta.is_infinite() {
            return usage("tilted measure needs a finite tail exponent beta");
        }
        if !(t > 1.0) {
            return usage("tilt needs t > 1 (λ(t) involves log t)");
        }
        let d = shape.dim;
        let a1 = a1_constant(d, shape.beta, rho);
        let lambda = q1_constant(d, shape.beta, rho, shape.k) * t.ln().powf(-shape.beta / d as f64);
        Ok(Self { t, a1, lambda, rho0: rho0_of(d, shape.beta, a1, lambda) })
    }

    /// No tilt (ρ₀ = 0).
    pub fn identity(t: f64) -> Self {
        Self { t, a1: f64::NAN, lambda: f64::NAN, rho0: 0.0 }
    }
}

/// Thinning of a rate-ρ field: keep ω_i with probability e^{−ρ₀φ₀(ω_i)}.
pub fn sample_tilted_field(
    dim: usize,
    rho: f64,
    tilt: &TiltParams,
    shape: &ShapeFunction,
    half_width: f64,
    seed: u64,
) -> Result<PoissonField> {
    let mut f = sample_field(dim, rho, half_width, seed)?;
    if tilt.rho0 > 0.0 {
        let mut r = rng::stream(seed, 1);
        let kept: Vec<f64> =
            f.iter().filter(|p| r.random::<f64>() < (-tilt.rho0 * shape.envelope(norm(p))).exp()).flatten().copied().collect();
        f.points = kept;
    }
    Ok(f)
}

/// E_{Q̃}[V(0)] = ρ∫φ₀(z)e^{−ρ₀φ₀(z)}dz (= −H′(ρ₀)).
pub fn tilted_mean(shape: &ShapeFunction, rho: f64, rho0: f64) -> Result<f64> {
    Ok(rho * shape.radial_integral(|p| p * (-rho0 * p).exp(), f64::INFINITY)?)
}

pub fn tilted_mean_box(shape: &ShapeFunction, rho: f64, rho0: f64, half_width: f64) -> Result<f64> {
    Ok(rho * shape.box_integral(|p| p * (-rho0 * p).exp(), half_width)?)
}

/// Per-center localization flags.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CenterFlags {
    /// F_r(z): B(z,(1+η)r) holds at least one point.
    pub occupied: bool,
    /// G_r(z): the external mass reaches the threshold; `None` when not
    /// evaluated (only vacant centers need it).
    pub external_excess: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalizationResult {
    pub centers: Vec<Vec<f64>>,
    pub flags: Vec<CenterFlags>,
    /// First center (scan order) where both F_r and G_r fail.
    pub found: Option<usize>,
}

impl LocalizationResult {
    pub fn all_occupied(&self) -> bool {
        self.flags.iter().all(|f| f.occupied)
    }
}

/// Lattice (2(1+η)r)ℤ^d ∩ [−W, W]^d in lexicographic order.
pub fn localization_lattice(d: usize, r: f64, eta: f64, window: f64) -> Vec<Vec<f64>> {
    let step = 2.0 * (1.0 + eta) * r;
    let m = (window / step).floor() as i64;
    let mut out = Vec::new();
    let mut idx = vec![-m; d];
    if m < 0 {
        return out;
    }
    loop {
        out.push(idx.iter().map(|&i| i as f64 * step).collect());
        let mut k = d;
        loop {
            if k == 0 {
                return out;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] <= m {
                break;
            }
            idx[k] = -m;
        }
    }
}

/// Window scale M_{κ,η}(r) = r^{−κ}·exp((w_dρ/d)((1+2η)r)^d).
pub fn localization_window(d: usize, rho: f64, r: f64, eta: f64, kappa: f64) -> f64 {
    let df = d as f64;
    r.powf(-kappa) * (unit_ball_volume(d) * rho / df * ((1.0 + 2.0 * eta) * r).powf(df)).exp()
}

/// Parameters of the localization scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalizationParams {
    pub r: f64,
    pub eta: f64,
    /// G_r threshold ε·r^{−α}
    pub eps: f64,
    pub alpha: f64,
    /// Grid spacing for the sup over y ∈ B(z, r).
    pub spacing: f64,
}

/// Scan lattice centers for a vacant (1+η)r-ball whose external potential
/// stays below ε·r^{−α} on B(z, r).
pub fn localization_search(
    field: &PoissonField,
    shape: &ShapeFunction,
    params: &LocalizationParams,
    centers: Vec<Vec<f64>>,
) -> Result<LocalizationResult> {
    if centers.is_empty() {
        return usage("localization lattice is empty");
    }
    let LocalizationParams { r, eta, eps, alpha, spacing } = *params;
    let outer = (1.0 + eta) * r;
    let threshold = eps * r.powf(-alpha);
    let mut flags: Vec<CenterFlags> = occupancy_flags(field, &centers, outer)
        .into_iter()
        .map(|occupied| CenterFlags { occupied, external_excess: None })
        .collect();
    let mut found = None;
    for (i, z) in centers.iter().enumerate() {
        if flags[i].occupied {
            continue;
        }
        let excess = external_sup(field, shape, z, r, outer, spacing) >= threshold;
        flags[i].external_excess = Some(excess);
        if !excess {
            found = Some(i);
            break;
        }
    }
    Ok(LocalizationResult { centers, flags, found })
}

/// For each center z, whether B(z, radius) holds a field point.
pub fn occupancy_flags(field: &PoissonField, centers: &[Vec<f64>], radius: f64) -> Vec<bool> {
    let index = BucketIndex::new(field, radius);
    centers.iter().map(|z| index.any_within(field, z, radius)).collect()
}

fn external_sup(field: &PoissonField, shape: &ShapeFunction, z: &[f64], r: f64, outer: f64, spacing: f64) -> f64 {
    let d = field.dim;
    let m = (r / spacing).ceil() as i64;
    let h = r / m as f64;
    let mut idx = vec![-m; d];
    let mut y = vec![0.0; d];
    let mut sup = 0.0f64;
    'grid: loop {
        let mut off2 = 0.0;
        for ((yi, &i), zi) in y.iter_mut().zip(&idx).zip(z) {
            let o = i as f64 * h;
            off2 += o * o;
            *yi = zi + o;
        }
        if off2 <= r * r * (1.0 + 1e-12) {
            let v: f64 = field
                .iter()
                .filter(|p| crate::geometry::dist(p, z) >= outer)
                .map(|p| shape.profile(crate::geometry::dist(p, &y)))
                .sum();
            sup = sup.max(v);
        }
        for i in idx.iter_mut() {
            *i += 1;
            if *i <= m {
                continue 'grid;
            }
            *i = -m;
        }
        break;
    }
    sup
}

/// Uniform-grid bucket index over the field's box.
struct BucketIndex {
    cell: f64,
    n: usize,
    half_width: f64,
    buckets: Vec<Vec<u32>>,
}

impl BucketIndex {
    fn new(field: &PoissonField, cell: f64) -> Self {
        let n = ((2.0 * field.half_width / cell).ceil() as usize).clamp(1, 1 << (20 / field.dim));
        let cell = 2.0 * field.half_width / n as f64;
        let mut buckets = vec![Vec::new(); n.pow(field.dim as u32)];
        let mut me = Self { cell, n, half_width: field.half_width, buckets: Vec::new() };
        for (i, p) in field.iter().enumerate() {
            buckets[me.key(p)].push(i as u32);
        }
        me.buckets = buckets;
        me
    }

    fn coord(&self, v: f64) -> usize {
        (((v + self.half_width) / self.cell).floor().max(0.0) as usize).min(self.n - 1)
    }

    fn key(&self, p: &[f64]) -> usize {
        p.iter().fold(0, |k, &v| k * self.n + self.coord(v))
    }

    fn any_within(&self, field: &PoissonField, z: &[f64], radius: f64) -> bool {
        let d = field.dim;
        let lo: Vec<usize> = z.iter().map(|&v| self.coord(v - radius)).collect();
        let hi: Vec<usize> = z.iter().map(|&v| self.coord(v + radius)).collect();
        let mut idx = lo.clone();
        loop {
            let key = idx.iter().fold(0, |k, &i| k * self.n + i);
            if self.buckets[key].iter().any(|&j| crate::geometry::dist(field.point(j as usize), z) < radius) {
                return true;
            }
            let mut k = d;
            loop {
                if k == 0 {
                    return false;
                }
                k -= 1;
                idx[k] += 1;
                if idx[k] <= hi[k] {
                    break;
                }
                idx[k] = lo[k];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shape(beta: f64) -> ShapeFunction {
        ShapeFunction::new(1.0, beta, 1).unwrap()
    }

    #[test]
    fn profile_values() {
        let s = shape(1.0);
        assert_eq!(s.eval(&[0.0]), 1.0);
        assert_eq!(s.eval(&[2.0]), 0.25);
        let hard = shape(f64::INFINITY);
        assert_eq!(hard.eval(&[1.0]), 1.0);
        assert_eq!(hard.eval(&[1.0001]), 0.0);
        assert!(ShapeFunction::new(0.0, 1.0, 1).is_err());
        assert!(ShapeFunction::new(1.0, 0.0, 1).is_err());
    }

    #[test]
    fn integral_matches_quadrature() {
        for (beta, d) in [(1.0, 1), (0.5, 2), (f64::INFINITY, 2), (2.0, 3)] {
            let s = ShapeFunction::new(1.3, beta, d).unwrap();
            let q = s.radial_integral(|p| p, f64::INFINITY).unwrap();
            assert!((q - s.integral()).abs() < 1e-9 * q, "{beta} {d}");
            let tail = s.radial_integral(|p| p, 5.0).unwrap();
            assert!((s.integral() - tail - s.tail_mass(5.0)).abs() < 1e-9 * q);
        }
    }

    #[test]
    fn box_integral_2d_matches_direct() {
        let s = ShapeFunction::new(1.0, 1.0, 2).unwrap();
        let l = 3.0;
        let got = s.box_integral(|p| p, l).unwrap();
        // iterated Gauss–Legendre over the square, split at |x| = 1 rows
        let rule = quad::gauss_legendre(64);
        let mut direct = 0.0;
        let cuts = [-l, -1.0, 0.0, 1.0, l];
        for wx in cuts.windows(2) {
            for wy in cuts.windows(2) {
                direct += quad::fixed_gl(|x| quad::fixed_gl(|y| s.eval(&[x, y]), wy[0], wy[1], &rule), wx[0], wx[1], &rule);
            }
        }
        assert!((got - direct).abs() < 2e-3 * got, "{got} vs {direct}");
    }

    #[test]
    fn campbell_laplace_closed_form_d1_beta1() {
        // H(t) = 2(e^{-t} − 1) − 2√(πt) + 2∫_0^1(1 − e^{-t/x²})dx for d = 1, β = 1
        let s = shape(1.0);
        for t in [0.1, 1.0, 10.0] {
            let inner = quad::integrate(|x: f64| -(-t / (x * x)).exp_m1(), 0.0, 1.0, Tol::rel(1e-12)).unwrap().value;
            let want = 2.0 * (-t).exp_m1() - 2.0 * (PI * t).sqrt() + 2.0 * inner;
            let got = campbell_laplace(&s, 1.0, t).unwrap();
            assert!((got - want).abs() < 1e-9 * want.abs(), "t={t}: {got} vs {want}");
        }
        assert_eq!(campbell_laplace(&s, 1.0, 0.0).unwrap(), 0.0);
        let r = campbell_laplace(&s, 1.0, 1e4).unwrap() / 100.0;
        assert!((r + 2.0 * PI.sqrt()).abs() < 1e-8);
    }

    #[test]
    fn q1_and_a1_oracles() {
        // d = 1, β = 1/2: q₁ = (2/3)(1/3)^{1/2}[2Γ(1/3)]^{3/2}
        let want = 2.0 / 3.0 * (1.0f64 / 3.0).sqrt() * (2.0 * gamma(1.0 / 3.0)).powf(1.5);
        assert!((q1_constant(1, 0.5, 1.0, 1.0) - want).abs() < 1e-12 * want);
        assert!((q1_constant(1, 0.5, 1.0, 1.0) - 4.773_7).abs() < 1e-3);
        assert!((a1_constant(1, 1.0, 1.0) - 2.0 * PI.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn tilt_rho0_matches_closed_form() {
        // ρ₀(λ(t)) = (a₁β/(d(d+β)))^{−(d+β)/d}(log t)^{(d+β)/d} for K = 1
        let s = shape(0.5);
        let t = 1e3;
        let tp = TiltParams::new(&s, 1.0, t).unwrap();
        let want = (tp.a1 * 0.5 / 1.5).powf(-1.5 / 1.0) * t.ln().powf(1.5);
        assert!((tp.rho0 - want).abs() < 1e-10 * want);
        // tilted mean is −H′(ρ₀)
        let h = 1e-4 * tp.rho0;
        let dh = (campbell_laplace(&s, 1.0, tp.rho0 + h).unwrap() - campbell_laplace(&s, 1.0, tp.rho0 - h).unwrap()) / (2.0 * h);
        let m = tilted_mean(&s, 1.0, tp.rho0).unwrap();
        assert!((m + dh).abs() < 1e-6 * m);
    }

    #[test]
    fn potential_basics_and_window() {
        let s = shape(1.0);
        let f = PoissonField::empty(1, 1.0, 10.0);
        assert_eq!(f.potential(&s, &[0.0]).unwrap(), 0.0);
        let f = PoissonField::from_points(1, 1.0, 10.0, vec![0.0]).unwrap();
        assert_eq!(f.potential(&s, &[0.0]).unwrap(), 1.0);
        assert!(f.potential(&s, &[6.0]).is_err());
    }

    #[test]
    fn sup_check_trivial_cases() {
        let s = shape(1.0);
        let f = PoissonField::empty(1, 1.0, 10.0);
        let c = sup_potential_check(&f, &s, 2.0, 0.05).unwrap();
        assert!(c.holds && c.sup == 0.0);
        let f = PoissonField::from_points(1, 1.0, 10.0, vec![0.37]).unwrap();
        let c = sup_potential_check(&f, &s, 2.0, 0.05).unwrap();
        assert_eq!(c.sup, 1.0);
    }

    #[test]
    fn field_determinism_and_count() {
        let a = sample_field(2, 1.0, 5.0, 9).unwrap();
        let b = sample_field(2, 1.0, 5.0, 9).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|p| p.iter().all(|v| v.abs() <= 5.0)));
    }

    #[test]
    fn tilt_identity_keeps_field() {
        let s = shape(1.0);
        let a = sample_field(1, 1.0, 20.0, 4).unwrap();
        let b = sample_tilted_field(1, 1.0, &TiltParams::identity(2.0), &s, 20.0, 4).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn lattice_layout() {
        let l = localization_lattice(2, 1.0, 0.5, 6.5);
        assert_eq!(l.len(), 25);
        assert_eq!(l[0], vec![-6.0, -6.0]);
        assert_eq!(l[1], vec![-6.0, -3.0]);
    }

    #[test]
    fn localization_trivial_cases() {
        let s = shape(1.0);
        let p = LocalizationParams { r: 1.0, eta: 0.5, eps: 0.1, alpha: 1.0, spacing: 0.1 };
        let empty = PoissonField::empty(1, 1.0, 50.0);
        let c = localization_lattice(1, 1.0, 0.5, 20.0);
        let res = localization_search(&empty, &s, &p, c.clone()).unwrap();
        assert_eq!(res.found, Some(0));
        assert!(!res.flags[0].occupied);
        let dense = sample_field(1, 50.0, 50.0, 1).unwrap();
        let res = localization_search(&dense, &s, &p, c).unwrap();
        assert_eq!(res.found, None);
        assert!(res.all_occupied());
        assert!(localization_search(&empty, &s, &p, Vec::new()).is_err());
    }

    #[test]
    fn bucket_index_matches_brute_force() {
        let f = sample_field(2, 0.3, 10.0, 77).unwrap();
        let idx = BucketIndex::new(&f, 1.5);
        for z in localization_lattice(2, 0.7, 0.2, 9.0) {
            let brute = f.iter().any(|p| crate::geometry::dist(p, &z) < 1.5);
            assert_eq!(idx.any_within(&f, &z, 1.5), brute);
        }
    }
}
