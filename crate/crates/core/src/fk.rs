//! Monte Carlo Feynman–Kac functionals u(t,x) = E_x[exp(−∫₀ᵗV(Z_s)ds)],
//! killed variants, annealed averages, and the two-sided bound checks.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{usage, Result};
use crate::field::{sample_field, PoissonField, ShapeFunction};
use crate::geometry::Domain;
use crate::levy::{density_at_zero, exit_prob, IncrementSampler, LevyModel, McEstimate};
use crate::rng::{self, Rng};
use crate::spectral::{self, linalg::expm, Generator};
use crate::stats::MeanVar;

/// The potential seen by the paths.
#[derive(Debug, Clone, Copy)]
pub enum Potential<'a> {
    Zero,
    Constant(f64),
    Field {
        field: &'a PoissonField,
        shape: &'a ShapeFunction,
        /// Add the Campbell mean ρ∫_{outside box}φ(x−y)dy of the unsampled
        /// exterior field (d = 1 only).
        exterior_mean: bool,
    },
}

impl<'a> Potential<'a> {
    pub fn field(field: &'a PoissonField, shape: &'a ShapeFunction) -> Self {
        Potential::Field { field, shape, exterior_mean: false }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match *self {
            Potential::Zero => 0.0,
            Potential::Constant(c) => c,
            Potential::Field { field, shape, exterior_mean } => {
                let mut v = field.potential_unchecked(shape, x);
                if exterior_mean && field.dim == 1 {
                    // ρ∫_{|y|>L}φ(x−y)dy = ρ(∫φ − T(x−L) + T(x+L)), T(u) = ∫_u^∞φ
                    let upper = |u: f64| {
                        let half = 0.5 * shape.tail_mass(u.abs());
                        if u >= 0.0 {
                            half
                        } else {
                            shape.integral() - half
                        }
                    };
                    let l = field.half_width;
                    v += field.rho * (shape.integral() - upper(x[0] - l) + upper(x[0] + l));
                }
                v
            }
        }
    }

    /// Where the potential is trusted; the exterior-mean potential is exact in
    /// mean everywhere.
    pub fn in_window(&self, x: &[f64]) -> bool {
        match self {
            Potential::Field { exterior_mean: true, field, .. } if field.dim == 1 => true,
            Potential::Field { field, .. } => field.in_window(x),
            _ => true,
        }
    }

    fn check_dim(&self, d: usize) -> Result<()> {
        match self {
            Potential::Field { field, .. } if field.dim != d => usage("field and model dimensions differ"),
            Potential::Constant(c) if !(*c >= 0.0) => usage("constant potential must be nonnegative"),
            _ => Ok(()),
        }
    }
}

/// Quadrature of ∫₀ᵗV(Z_s)ds on the path skeleton.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    #[default]
    LeftEndpoint,
    Trapezoid,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FkParams {
    pub t: f64,
    pub n_paths: usize,
    pub dt: f64,
    pub seed: u64,
    pub rule: Rule,
}

impl FkParams {
    pub fn new(t: f64, n_paths: usize, dt: f64, seed: u64) -> Self {
        Self { t, n_paths, dt, seed, rule: Rule::LeftEndpoint }
    }

    fn validate(&self) -> Result<()> {
        if self.n_paths == 0 {
            return usage("n_paths must be positive");
        }
        if !(self.dt > 0.0) {
            return usage("dt must be positive");
        }
        if !(self.t > 0.0) {
            return usage("t must be positive");
        }
        Ok(())
    }

    /// Number of steps and the effective step t/steps (≤ dt).
    fn steps(&self) -> (usize, f64) {
        let n = ((self.t / self.dt) - 1e-9).ceil().max(1.0) as usize;
        (n, self.t / n as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FKEstimate {
    pub t: f64,
    pub x: Vec<f64>,
    pub value: f64,
    pub stderr: f64,
    pub n_paths: u64,
    /// Effective step.
    pub dt: f64,
    pub seed: u64,
    pub mode: String,
    /// Paths that left the observation window and were clamped.
    pub window_exits: u64,
}

impl FKEstimate {
    fn from_weights(p: &FkParams, x: &[f64], step: f64, mode: String, weights: &[(f64, bool)]) -> Self {
        let vals: Vec<f64> = weights.iter().map(|w| w.0).collect();
        let mv = MeanVar::from_slice(&vals);
        FKEstimate {
            t: p.t,
            x: x.to_vec(),
            value: mv.mean,
            stderr: mv.stderr(),
            n_paths: mv.n,
            dt: step,
            seed: p.seed,
            mode,
            window_exits: weights.iter().filter(|w| w.1).count() as u64,
        }
    }
}

fn rule_tag(rule: Rule) -> &'static str {
    match rule {
        Rule::LeftEndpoint => "left",
        Rule::Trapezoid => "trapezoid",
    }
}

struct PathRun<'a> {
    sampler: IncrementSampler,
    pot: &'a Potential<'a>,
    steps: usize,
    step: f64,
    rule: Rule,
    domain: Option<&'a Domain>,
    /// Weight is exp(−coef·∫V).
    coef: f64,
}

impl PathRun<'_> {
    /// (weight, left the observation window)
    fn run(&self, x0: &[f64], rng: &mut Rng) -> (f64, bool) {
        let mut z = x0.to_vec();
        let mut acc = 0.0;
        let mut v_prev = self.pot.eval(&z);
        for _ in 0..self.steps {
            self.sampler.add_increment(self.step, rng, &mut z);
            if let Some(d) = self.domain {
                if !d.contains(&z) {
                    return (0.0, false);
                }
            }
            if !self.pot.in_window(&z) {
                // the rest of the integral is ≥ 0: keep what is certain
                acc += match self.rule {
                    Rule::LeftEndpoint => v_prev * self.step,
                    Rule::Trapezoid => 0.5 * v_prev * self.step,
                };
                return ((-self.coef * acc).exp(), true);
            }
            let v = self.pot.eval(&z);
            acc += match self.rule {
                Rule::LeftEndpoint => v_prev * self.step,
                Rule::Trapezoid => 0.5 * (v_prev + v) * self.step,
            };
            v_prev = v;
        }
        ((-self.coef * acc).exp(), false)
    }
}

fn run_paths(
    model: &LevyModel,
    pot: &Potential,
    x: &[f64],
    domain: Option<&Domain>,
    p: &FkParams,
    coef: f64,
) -> Result<(Vec<(f64, bool)>, f64)> {
    p.validate()?;
    model.validate()?;
    if x.len() != model.dim {
        return usage("starting point dimension mismatch");
    }
    pot.check_dim(model.dim)?;
    if !pot.in_window(x) {
        return usage("starting point outside the observation window");
    }
    let (steps, step) = p.steps();
    let run = PathRun { sampler: model.sampler()?, pot, steps, step, rule: p.rule, domain, coef };
    Ok((rng::par_trials(p.seed, p.n_paths, |rng, _| run.run(x, rng)), step))
}

/// u(t,x) = E_x[exp(−∫₀ᵗV(Z_s)ds)].
pub fn estimate_u(model: &LevyModel, pot: &Potential, x: &[f64], p: &FkParams) -> Result<FKEstimate> {
    let (w, step) = run_paths(model, pot, x, None, p, 1.0)?;
    Ok(FKEstimate::from_weights(p, x, step, rule_tag(p.rule).into(), &w))
}

/// E_x[exp(−∫₀ᵗV(Z_s)ds); τ_D > t], exit monitored on the skeleton.
pub fn estimate_u_killed(model: &LevyModel, pot: &Potential, x: &[f64], domain: &Domain, p: &FkParams) -> Result<FKEstimate> {
    if !domain.contains(x) {
        return usage("starting point outside D");
    }
    if let Potential::Field { field, exterior_mean: false, .. } = pot {
        let c = domain.center();
        let e = domain.half_extent();
        if c.iter().any(|v| v.abs() + e > field.obs_half_width) {
            return usage("D must lie inside the observation window");
        }
    }
    let (w, step) = run_paths(model, pot, x, Some(domain), p, 1.0)?;
    Ok(FKEstimate::from_weights(p, x, step, format!("{}+killed", rule_tag(p.rule)), &w))
}

/// How the environment average is taken in [`annealed_u`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum AnnealedMode {
    /// Outer loop over sampled fields on [−L, L]^d, inner loop over paths.
    TwoLevel {
        n_fields: usize,
        half_width: f64,
        /// Replace the field outside the box by its Campbell mean (d = 1).
        exterior_mean: bool,
    },
    /// Average over ω in closed form per path (d = 1):
    /// E_Q e^{−∫V(Z_s)ds} = exp(ρ∫(e^{−G(y)} − 1)dy), G(y) = ∫₀ᵗφ(Z_s − y)ds.
    Campbell { bin: f64 },
}

/// E_Q[u(t,x)].
pub fn annealed_u(
    model: &LevyModel,
    shape: &ShapeFunction,
    rho: f64,
    x: &[f64],
    p: &FkParams,
    mode: AnnealedMode,
) -> Result<FKEstimate> {
    p.validate()?;
    shape.validate()?;
    if shape.dim != model.dim {
        return usage("shape and model dimensions differ");
    }
    match mode {
        AnnealedMode::TwoLevel { n_fields, half_width, exterior_mean } => {
            if n_fields == 0 {
                return usage("n_fields must be positive");
            }
            let per_field: Vec<FKEstimate> = (0..n_fields)
                .into_par_iter()
                .map(|i| {
                    let field = sample_field(model.dim, rho, half_width, rng::derive_seed(p.seed, 2 * i as u64))?;
                    let pot = Potential::Field { field: &field, shape, exterior_mean };
                    let inner = FkParams { seed: rng::derive_seed(p.seed, 2 * i as u64 + 1), ..*p };
                    estimate_u(model, &pot, x, &inner)
                })
                .collect::<Result<_>>()?;
            // Var of the field means = Var_Q(u) + E_Q[Var_paths]/n_paths
            // (law of total variance), so their spread gives the joint stderr.
            let means: Vec<f64> = per_field.iter().map(|e| e.value).collect();
            let mv = MeanVar::from_slice(&means);
            Ok(FKEstimate {
                t: p.t,
                x: x.to_vec(),
                value: mv.mean,
                stderr: mv.stderr(),
                n_paths: (n_fields * p.n_paths) as u64,
                dt: per_field[0].dt,
                seed: p.seed,
                mode: "two_level".into(),
                window_exits: per_field.iter().map(|e| e.window_exits).sum(),
            })
        }
        AnnealedMode::Campbell { bin } => {
            if model.dim != 1 {
                return usage("the Campbell-collapsed annealed mode is implemented for d = 1");
            }
            if !(bin > 0.0) {
                return usage("bin width must be positive");
            }
            model.validate()?;
            let sampler = model.sampler()?;
            let (steps, step) = p.steps();
            let total_phi = shape.integral();
            let vals = rng::par_trials(p.seed, p.n_paths, |rng, _| {
                let mut z = x[0];
                let mut occ: BTreeMap<i64, f64> = BTreeMap::new();
                let mut out = [0.0];
                for k in 0..=steps {
                    let w = match p.rule {
                        Rule::LeftEndpoint => {
                            if k == steps {
                                0.0
                            } else {
                                step
                            }
                        }
                        Rule::Trapezoid => {
                            if k == 0 || k == steps {
                                0.5 * step
                            } else {
                                step
                            }
                        }
                    };
                    if w > 0.0 {
                        *occ.entry((z / bin).round() as i64).or_insert(0.0) += w;
                    }
                    if k < steps {
                        out[0] = 0.0;
                        sampler.add_increment(step, rng, &mut out);
                        z += out[0];
                    }
                }
                let bins: Vec<(f64, f64)> = occ.into_iter().map(|(j, o)| (j as f64 * bin, o)).collect();
                let c = campbell_correction(&bins, shape, p.t, bin);
                (-rho * (p.t * total_phi - c)).exp()
            });
            let mv = MeanVar::from_slice(&vals);
            Ok(FKEstimate {
                t: p.t,
                x: x.to_vec(),
                value: mv.mean,
                stderr: mv.stderr(),
                n_paths: mv.n,
                dt: step,
                seed: p.seed,
                mode: "campbell".into(),
                window_exits: 0,
            })
        }
    }
}

/// ∫(e^{−G} − 1 + G)dy for G(y) = Σ_j o_j φ(c_j − y) in d = 1, so that
/// ∫(1 − e^{−G}) = t∫φ − this. Bins are grouped into clusters; within W₀ of a
/// cluster the integrand has kinks at c_j ± 1 (lattice points of spacing `bin`)
/// and is integrated by Richardson-extrapolated trapezoids at bin and bin/2;
/// gaps and tails are smooth and use geometric grids. The region farther than
/// W₂ from every bin is dropped; it contributes at most ∫G²/2 ≤ 1e-7.
fn campbell_correction(bins: &[(f64, f64)], shape: &ShapeFunction, t: f64, bin: f64) -> f64 {
    const RATIO: f64 = 1.02;
    const FAR: f64 = 16.0;
    let w0 = (4.0 / bin).ceil() * bin;
    let w2 = if shape.beta.is_infinite() {
        w0
    } else {
        let p = 2.0 * (1.0 + shape.beta) - 1.0;
        (t * t * shape.k * shape.k / (p * 1e-7)).powf(1.0 / p).max(w0)
    };
    // unit-length blocks: exact sums nearby, point masses at their centroid
    // beyond FAR (relative error ≲ 0.2/FAR² of the far contribution)
    let mut blocks: Vec<(f64, f64, f64, f64, usize, usize)> = Vec::new();
    let mut start = 0;
    for i in 1..=bins.len() {
        if i == bins.len() || bins[i].0 - bins[start].0 >= 1.0 {
            let s = &bins[start..i];
            let mass: f64 = s.iter().map(|v| v.1).sum();
            let cen = s.iter().map(|v| v.0 * v.1).sum::<f64>() / mass;
            blocks.push((s[0].0, s[s.len() - 1].0, cen, mass, start, i));
            start = i;
        }
    }
    let f = |y: f64| -> f64 {
        let mut g = 0.0;
        for &(lo, hi, cen, mass, a, b) in &blocks {
            if y < lo - FAR || y > hi + FAR {
                g += mass * shape.profile((y - cen).abs());
            } else {
                g += bins[a..b].iter().map(|&(c, o)| o * shape.profile((c - y).abs())).sum::<f64>();
            }
        }
        (-g).exp_m1() + g
    };
    let trap = |ys: &[f64]| -> f64 {
        let fs: Vec<f64> = ys.iter().map(|&y| f(y)).collect();
        ys.windows(2).zip(fs.windows(2)).map(|(y, v)| 0.5 * (y[1] - y[0]) * (v[0] + v[1])).sum()
    };
    // offsets w0·RATIO^j from an anchor, up to `to` (inclusive)
    let geometric = |anchor: f64, to: f64, sign: f64| -> Vec<f64> {
        let mut out = vec![anchor + sign * w0];
        let mut off = w0 * RATIO;
        while off < to {
            out.push(anchor + sign * off);
            off *= RATIO;
        }
        out.push(anchor + sign * to);
        out
    };
    let mut clusters: Vec<(f64, f64)> = Vec::new();
    for &(c, _) in bins {
        match clusters.last_mut() {
            Some(last) if c - last.1 <= 2.0 * w0 => last.1 = c,
            _ => clusters.push((c, c)),
        }
    }
    let mut total = 0.0;
    for (k, &(lo, hi)) in clusters.iter().enumerate() {
        let (a, b) = (lo - w0, hi + w0);
        let n = ((b - a) / bin).round() as usize;
        let coarse: Vec<f64> = (0..=n).map(|j| a + bin * j as f64).collect();
        let fine: Vec<f64> = (0..=2 * n).map(|j| a + 0.5 * bin * j as f64).collect();
        total += (4.0 * trap(&fine) - trap(&coarse)) / 3.0;
        if let Some(&(next_lo, _)) = clusters.get(k + 1) {
            let half = 0.5 * (next_lo - hi);
            total += trap(&geometric(hi, half, 1.0));
            let mut right = geometric(next_lo, half, -1.0);
            right.reverse();
            total += trap(&right);
        }
    }
    if let (Some(&(first, _)), Some(&(_, last))) = (clusters.first(), clusters.last()) {
        if w2 > w0 {
            total += trap(&geometric(last, w2, 1.0));
            let mut left = geometric(first, w2, -1.0);
            left.reverse();
            total += trap(&left);
        }
    }
    total
}

/// Parameters shared by the bound checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundParams {
    pub delta: f64,
    /// Hölder exponent a > 1 (b = a/(a−1)).
    pub a: f64,
    /// Coarsest lattice spacing of the eigenvalue ladders.
    pub h: f64,
    pub n_paths: usize,
    pub dt: f64,
    pub seed: u64,
}

impl Default for BoundParams {
    fn default() -> Self {
        Self { delta: 0.1, a: 2.0, h: 0.1, n_paths: 4000, dt: 0.01, seed: 0 }
    }
}

fn nodal_potential(pot: &Potential, op: &spectral::DiscreteOperator, scale: f64) -> Vec<f64> {
    (0..op.n()).map(|i| scale * pot.eval(op.node(i))).collect()
}

/// λ₁ of −L + s·V on a ball from an h-ladder: (finest value, extrapolation).
fn ball_lambda(
    model: &LevyModel,
    pot: &Potential,
    center: &[f64],
    radius: f64,
    h: f64,
    s: f64,
) -> Result<(f64, spectral::Extrapolation)> {
    let (res, _) = spectral::eigen_ladder(&Generator::Levy(*model), &Domain::ball(center, radius), h, |x| s * pot.eval(x))?;
    Ok((res.lambda1, res.extrapolated.expect("ladder extrapolates")))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UpperReport {
    pub t: f64,
    pub radius: f64,
    pub delta: f64,
    pub a: f64,
    pub exit_prob: McEstimate,
    pub p_delta: f64,
    pub volume: f64,
    /// Lower estimates (extrapolation minus its error) of λ_{V,D}, λ_{aV,D}.
    pub lambda_v: f64,
    pub lambda_av: f64,
    pub branch1: f64,
    pub branch2: f64,
    pub bound: f64,
    pub u: FKEstimate,
    pub holds: bool,
}

/// u(t,0) ≤ ℙ₀(τ_D ≤ t) + min{p(δ,0)^{1/2}|D|^{1/2}e^{−(t−δ/2)λ_{V,D}},
/// p(δ,0)^{1/a}|D|^{1/a}e^{−(t−δ)λ_{aV,D}/a}} with D = B(0,R).
pub fn upper_decomposition(model: &LevyModel, pot: &Potential, t: f64, radius: f64, bp: &BoundParams) -> Result<UpperReport> {
    let (delta, a) = (bp.delta, bp.a);
    if !(delta > 0.0 && delta < t && a > 1.0) {
        return usage("need 0 < δ < t and a > 1");
    }
    let d = model.dim;
    let origin = vec![0.0; d];
    let exit = exit_prob(model, radius, t, bp.n_paths, bp.dt, rng::derive_seed(bp.seed, 1))?;
    let p_delta = density_at_zero(model, delta)?;
    let volume = Domain::centered_ball(d, radius).volume();
    let cons = |(fine, ex): (f64, spectral::Extrapolation)| fine.min(ex.value - ex.err_est).max(0.0);
    let lambda_v = cons(ball_lambda(model, pot, &origin, radius, bp.h, 1.0)?);
    let lambda_av = cons(ball_lambda(model, pot, &origin, radius, bp.h, a)?);
    let branch1 = (p_delta * volume).sqrt() * (-(t - delta / 2.0) * lambda_v).exp();
    let branch2 = (p_delta * volume).powf(1.0 / a) * (-(t - delta) * lambda_av / a).exp();
    let bound = exit.value + branch1.min(branch2);
    let u = estimate_u(model, pot, &origin, &FkParams::new(t, bp.n_paths, bp.dt, rng::derive_seed(bp.seed, 2)))?;
    let slack = 4.0 * (u.stderr.powi(2) + exit.stderr.powi(2)).sqrt();
    Ok(UpperReport {
        t,
        radius,
        delta,
        a,
        exit_prob: exit,
        p_delta,
        volume,
        lambda_v,
        lambda_av,
        branch1,
        branch2,
        bound,
        holds: u.value <= bound + slack,
        u,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LowerReport {
    pub t: f64,
    pub radius: f64,
    pub inner_radius: f64,
    pub delta: f64,
    pub a: f64,
    /// min over D₁ nodes of the killed kernel p^D(δ,0,·) (V = 0), min over h, h/2.
    pub inf_killed_density: f64,
    pub p_delta: f64,
    pub p_t_minus_delta: f64,
    pub inner_volume: f64,
    /// Upper estimate of λ_{a⁻²V,D₁}.
    pub lambda: f64,
    /// E₀[exp((b/a)∫₀^δV)1_{τ_D>δ}].
    pub small_time: FKEstimate,
    pub log_bound: f64,
    pub bound: f64,
    pub bound_stderr: f64,
    pub u: FKEstimate,
    pub holds: bool,
}

/// Ingredients of the lower bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowerTerms {
    pub t: f64,
    pub a: f64,
    pub p_delta: f64,
    pub p_t_minus_delta: f64,
    pub inner_volume: f64,
    pub small_time: f64,
    pub inf_killed_density: f64,
    pub lambda: f64,
}

/// log of p(δ,0)^{−a}p(t−δ,0)^{−a²/b}|D₁|^{−2a²/b}E^{−a/b}(inf p^D)^a e^{−a²tλ}.
pub fn lower_bound_log(x: &LowerTerms) -> f64 {
    let a = x.a;
    let b = a / (a - 1.0);
    -a * x.p_delta.ln() - a * a / b * x.p_t_minus_delta.ln() - 2.0 * a * a / b * x.inner_volume.ln() - a / b * x.small_time.ln()
        + a * x.inf_killed_density.ln()
        - a * a * x.t * x.lambda
}

/// Killed transition kernel p^D_h(s, x₀, ·)/h^d at the lattice nodes, x₀ the center of D.
pub fn killed_kernel_from_center(
    generator: &Generator,
    domain: &Domain,
    h: f64,
    s: f64,
) -> Result<(spectral::DiscreteOperator, Vec<f64>)> {
    let op = spectral::assemble(generator, domain, h, &[])?;
    let i0 = op.lattice.iter().position(|k| k.iter().all(|v| *v == 0)).expect("lattice contains the center");
    let (a, _) = op.matrix(1.0);
    let p = expm(&(a * -s));
    let hd = op.cell_volume();
    let row = (0..op.n()).map(|j| p[(i0, j)] / hd).collect();
    Ok((op, row))
}

/// Both sides of the lower bound u(t,0) ≥ p(δ,0)^{−a}p(t−δ,0)^{−a²/b}|D₁|^{−2a²/b}
/// E₀[e^{(b/a)∫₀^δV}; τ_D>δ]^{−a/b}(inf_{D₁}p^D(δ,0,·))^a e^{−a²tλ_{a⁻²V,D₁}},
/// with D = B(0,R), D₁ = B(0,R₁).
pub fn lower_bound_check(
    model: &LevyModel,
    pot: &Potential,
    t: f64,
    radius: f64,
    inner_radius: f64,
    bp: &BoundParams,
) -> Result<LowerReport> {
    let (delta, a) = (bp.delta, bp.a);
    if !(delta > 0.0 && delta < t && a > 1.0) {
        return usage("need 0 < δ < t and a > 1");
    }
    if !(inner_radius > 0.0 && inner_radius <= radius) {
        return usage("need 0 < R₁ ≤ R");
    }
    let b = a / (a - 1.0);
    let d = model.dim;
    let origin = vec![0.0; d];
    let g = Generator::Levy(*model);
    let outer = Domain::centered_ball(d, radius);
    let mut inf_killed_density = f64::INFINITY;
    for h in [bp.h, bp.h / 2.0] {
        let (op, row) = killed_kernel_from_center(&g, &outer, h, delta)?;
        for (j, v) in row.iter().enumerate() {
            if crate::geometry::norm(op.node(j)) < inner_radius {
                inf_killed_density = inf_killed_density.min(*v);
            }
        }
    }
    let p_delta = density_at_zero(model, delta)?;
    let p_t_minus_delta = density_at_zero(model, t - delta)?;
    let inner_volume = Domain::centered_ball(d, inner_radius).volume();
    let (fine, ex) = ball_lambda(model, pot, &origin, inner_radius, bp.h, 1.0 / (a * a))?;
    let lambda = fine.max(ex.value + ex.err_est);
    let small_p = FkParams::new(delta, bp.n_paths, bp.dt, rng::derive_seed(bp.seed, 3));
    let (w, step) = run_paths(model, pot, &origin, Some(&outer), &small_p, -b / a)?;
    let small_time = FKEstimate::from_weights(&small_p, &origin, step, "left+killed+positive".into(), &w);
    let log_bound = lower_bound_log(&LowerTerms {
        t,
        a,
        p_delta,
        p_t_minus_delta,
        inner_volume,
        small_time: small_time.value,
        inf_killed_density,
        lambda,
    });
    let bound = log_bound.exp();
    let bound_stderr = a / b * bound * small_time.stderr / small_time.value;
    let u = estimate_u(model, pot, &origin, &FkParams::new(t, bp.n_paths, bp.dt, rng::derive_seed(bp.seed, 4)))?;
    let slack = 4.0 * (u.stderr.powi(2) + bound_stderr.powi(2)).sqrt();
    Ok(LowerReport {
        t,
        radius,
        inner_radius,
        delta,
        a,
        inf_killed_density,
        p_delta,
        p_t_minus_delta,
        inner_volume,
        lambda,
        small_time,
        log_bound,
        bound,
        bound_stderr,
        holds: u.value >= bound - slack,
        u,
    })
}

/// Killed u_D(t, x₀) = (e^{−t(−L+V)}1)(x₀) on the lattice, x₀ the center of D.
pub fn killed_semigroup_oracle(model: &LevyModel, pot: &Potential, domain: &Domain, t: f64, h: f64) -> Result<f64> {
    let op = spectral::assemble(&Generator::Levy(*model), domain, h, &[])?;
    let v = nodal_potential(pot, &op, 1.0);
    let op = op.with_potential(v)?;
    let (a, active) = op.matrix(1.0);
    let p = expm(&(a * -t));
    let i0 = op.lattice.iter().position(|k| k.iter().all(|v| *v == 0)).expect("center node");
    let r = active.iter().position(|&i| i == i0).expect("center node is active");
    Ok(p.row(r).sum())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleComparison {
    pub mc: FKEstimate,
    pub mc_half_dt: FKEstimate,
    pub oracle: f64,
    /// Richardson error estimate of the oracle over h, h/2, h/4.
    pub disc_err: f64,
    /// |MC(dt) − MC(dt/2)|: time-discretization budget.
    pub dt_err: f64,
    pub budget: f64,
    pub agrees: bool,
}

/// Killed MC (at dt and dt/2) against the matrix-exponential oracle at the
/// center of a ball D.
pub fn compare_with_oracle(
    model: &LevyModel,
    pot: &Potential,
    domain: &Domain,
    h: f64,
    p: &FkParams,
) -> Result<OracleComparison> {
    let x0 = domain.center().to_vec();
    let levels: Vec<f64> =
        (0..3).map(|l| killed_semigroup_oracle(model, pot, domain, p.t, h / f64::from(1u32 << l))).collect::<Result<_>>()?;
    let ex = spectral::richardson(levels[0], levels[1], levels[2]);
    let mc = estimate_u_killed(model, pot, &x0, domain, p)?;
    let half = FkParams { dt: p.dt / 2.0, seed: rng::derive_seed(p.seed, 1), ..*p };
    let mc_half_dt = estimate_u_killed(model, pot, &x0, domain, &half)?;
    let dt_err = (mc.value - mc_half_dt.value).abs();
    let budget = 4.0 * mc_half_dt.stderr + ex.err_est + dt_err;
    Ok(OracleComparison {
        agrees: (mc_half_dt.value - ex.value).abs() <= budget,
        oracle: ex.value,
        disc_err: ex.err_est,
        dt_err,
        budget,
        mc,
        mc_half_dt,
    })
}

/// Estimate log, CSV "t,x,value,stderr,n_paths,dt,seed,mode"; x components
/// are joined with ';'.
pub fn write_estimates(path: &Path, rows: &[FKEstimate]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["t", "x", "value", "stderr", "n_paths", "dt", "seed", "mode"])?;
    for r in rows {
        let x = r.x.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(";");
        w.write_record([
            format!("{:?}", r.t),
            x,
            format!("{:?}", r.value),
            format!("{:?}", r.stderr),
            r.n_paths.to_string(),
            format!("{:?}", r.dt),
            r.seed.to_string(),
            r.mode.clone(),
        ])?;
    }
    w.flush()?;
    std::io::stdout().flush().ok();
    Ok(())
}
