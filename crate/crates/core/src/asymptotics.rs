//! Closed-form constants of the annealed/quenched asymptotics, predicted
//! envelopes, optimizing radii, and empirical-series comparison.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{usage, Result};
use crate::geometry::{gamma, unit_ball_volume};
use crate::levy::{LevyKind, LevyModel};

/// Jump process class entering the asymptotics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Process {
    /// Rotationally symmetric α-stable.
    Stable { alpha: f64 },
    /// Small jumps like α-stable, large jumps ~ e^{−c|z|^θ}; behaves like
    /// α = 2 at large scales. θ = ∞ allowed.
    Tempered {
        alpha: f64,
        #[serde(with = "crate::serde_inf")]
        theta: f64,
    },
}

impl Process {
    pub fn from_model(m: &LevyModel) -> Self {
        match m.kind {
            LevyKind::IsotropicStable { alpha, .. } => Process::Stable { alpha },
            LevyKind::Tempered { alpha, theta, .. } => Process::Tempered { alpha, theta },
        }
    }

    /// Large-scale index: α for stable, 2 for tempered.
    pub fn index(&self) -> f64 {
        match *self {
            Process::Stable { alpha } => alpha,
            Process::Tempered { .. } => 2.0,
        }
    }

    /// 1∧θ (exactly 1 for θ = ∞ and for stable processes).
    pub fn theta_factor(&self) -> f64 {
        match *self {
            Process::Stable { .. } => 1.0,
            Process::Tempered { theta, .. } => theta.min(1.0),
        }
    }

    fn validate(&self) -> Result<()> {
        let (alpha, theta) = match *self {
            Process::Stable { alpha } => (alpha, 1.0),
            Process::Tempered { alpha, theta } => (alpha, theta),
        };
        if !(alpha > 0.0 && alpha < 2.0) {
            return usage(format!("α must lie in (0,2), got {alpha}"));
        }
        if !(theta > 0.0) {
            return usage(format!("θ must be positive, got {theta}"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegimeTag {
    #[serde(rename = "L")]
    Light,
    #[serde(rename = "H")]
    Heavy,
    #[serde(rename = "C")]
    Critical,
}

impl fmt::Display for RegimeTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RegimeTag::Light => "L",
            RegimeTag::Heavy => "H",
            RegimeTag::Critical => "C",
        })
    }
}

/// Process + shape φ = K(1∧|x|^{−d−β}) + intensity ρ, with its tail class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Regime {
    pub tag: RegimeTag,
    pub process: Process,
    pub d: usize,
    #[serde(with = "crate::serde_inf")]
    pub beta: f64,
    pub rho: f64,
    pub k: f64,
}

impl Regime {
    /// Light ⇔ β > index (or β = ∞), Heavy ⇔ β < index, Critical ⇔ β = index.
    pub fn classify(process: Process, d: usize, beta: f64, rho: f64, k: f64) -> Result<Self> {
        process.validate()?;
        if d == 0 {
            return usage("dimension must be positive");
        }
        if !(beta > 0.0) || !(rho > 0.0 && rho.is_finite()) || !(k > 0.0 && k.is_finite()) {
            return usage("need β > 0, ρ > 0, K > 0");
        }
        let idx = process.index();
        let tag = if beta > idx {
            RegimeTag::Light
        } else if beta < idx {
            RegimeTag::Heavy
        } else {
            RegimeTag::Critical
        };
        Ok(Self { tag, process, d, beta, rho, k })
    }

    pub fn from_model(m: &LevyModel, beta: f64, rho: f64, k: f64) -> Result<Self> {
        Self::classify(Process::from_model(m), m.dim, beta, rho, k)
    }

    /// Explicit override; must agree with the parameters.
    pub fn with_tag(self, tag: RegimeTag) -> Result<Self> {
        if tag != self.tag {
            return usage(format!(
                "regime {tag} inconsistent with β = {} and index {} (classified {})",
                self.beta,
                self.process.index(),
                self.tag
            ));
        }
        Ok(self)
    }

    fn df(&self) -> f64 {
        self.d as f64
    }

    pub fn params(&self) -> String {
        let (kind, alpha, theta) = match self.process {
            Process::Stable { alpha } => ("stable", alpha, None),
            Process::Tempered { alpha, theta } => ("tempered", alpha, Some(theta)),
        };
        let mut s = format!("process={kind};d={};alpha={alpha}", self.d);
        if let Some(th) = theta {
            s += &format!(";theta={th}");
        }
        s + &format!(";beta={};rho={};K={}", self.beta, self.rho, self.k)
    }

    /// Quenched rate function: t^{d/(d+α)} or t^{d/(d+β)} (stable),
    /// t/(log t)^{2/d} or t/(log t)^{β/d} (tempered).
    pub fn rate(&self, t: f64) -> f64 {
        let d = self.df();
        match (self.process, self.tag) {
            (Process::Stable { alpha }, RegimeTag::Heavy) => t.powf(d / (d + self.beta.min(alpha))),
            (Process::Stable { alpha }, _) => t.powf(d / (d + alpha)),
            (Process::Tempered { .. }, RegimeTag::Heavy) => t / t.ln().powf(self.beta / d),
            (Process::Tempered { .. }, _) => t / t.ln().powf(2.0 / d),
        }
    }

    pub fn rate_label(&self) -> String {
        let d = self.df();
        match (self.process, self.tag) {
            (Process::Stable { .. }, RegimeTag::Heavy) => format!("t^{}", d / (d + self.beta)),
            (Process::Stable { alpha }, _) => format!("t^{}", d / (d + alpha)),
            (Process::Tempered { .. }, RegimeTag::Heavy) => format!("t/(log t)^{}", self.beta / d),
            (Process::Tempered { .. }, _) => format!("t/(log t)^{}", 2.0 / d),
        }
    }

    /// Annealed rate: t^{d/(d+index∧β)}.
    pub fn annealed_rate(&self, t: f64) -> f64 {
        let d = self.df();
        t.powf(d / (d + self.process.index().min(self.beta)))
    }
}

/// Free parameters of the bound machinery (κ, η, ς, a, δ, ε).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundRecord {
    pub kappa: f64,
    pub eta: f64,
    pub varsigma: f64,
    pub a: f64,
    pub delta: f64,
    pub eps: f64,
}

impl Default for BoundRecord {
    fn default() -> Self {
        Self { kappa: 2.0, eta: 0.1, varsigma: 0.1, a: 2.0, delta: 0.1, eps: 0.1 }
    }
}

/// M_{κ,η}(r) = r^{−κ}exp((w_dρ/d)((1+2η)r)^d).
pub fn envelope_scale(d: usize, rho: f64, kappa: f64, eta: f64, r: f64) -> f64 {
    let df = d as f64;
    (-kappa * r.ln() + unit_ball_volume(d) * rho / df * ((1.0 + 2.0 * eta) * r).powi(d as i32)).exp()
}

/// Quenched limit statement: a bracket (stable) or an exact limit (tempered),
/// as constants multiplying the rate. Constants are negative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuenchedPair {
    pub lower: f64,
    pub upper: f64,
}

/// Every explicit constant for a regime; `None` where the regime does not
/// define it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstantSet {
    pub regime: Regime,
    /// λ₁ on B(0,1) of the index-α stable (or Gaussian, tempered) generator.
    pub lambda1: f64,
    /// A₁ = (ρw_d/d)^{α/(d+α)}λ₁^{d/(d+α)}
    pub a1_quenched: Option<f64>,
    /// A₂ = (d/(d+β))^{d/(d+β)}(β/(d(d+β)))^{β/(d+β)}Γ(β/(d+β))ρw_d·K^{d/(d+β)}
    pub a2_quenched: Option<f64>,
    /// q₁ = (d/(d+β))(β/(d(d+β)))^{β/d}[ρw_dΓ(β/(d+β))]^{(d+β)/d}K
    pub q1: Option<f64>,
    /// Lifshitz constant: lim λ^{d/(index∧β)}log N(λ) = −k₀.
    pub k0: Option<f64>,
    /// a₁ = ρw_dΓ(β/(d+β))
    pub a1: Option<f64>,
    /// Light annealed: (ρw_d)^{α/(d+α)}((d+α)/α)(αλ₁/d)^{d/(d+α)}
    pub annealed_light: Option<f64>,
    /// Heavy annealed: ρw_dΓ(β/(d+β))K^{d/(d+β)}
    pub annealed_heavy: Option<f64>,
    pub quenched: Option<QuenchedPair>,
    pub bounds: BoundRecord,
}

/// Evaluate all constants. `lambda1` must come from the spectral module: the
/// principal eigenvalue on B(0,1) of the stable generator (stable process) or
/// of the Gaussian limit generator (tempered process).
pub fn constants(regime: &Regime, lambda1: f64, bounds: BoundRecord) -> Result<ConstantSet> {
    if !(lambda1 > 0.0 && lambda1.is_finite()) {
        return usage("λ₁ must be positive and finite");
    }
    let d = regime.df();
    let beta = regime.beta;
    let idx = regime.process.index();
    let rw = regime.rho * unit_ball_volume(regime.d);
    let finite_beta = beta.is_finite();
    let g = if finite_beta { gamma(beta / (d + beta)) } else { f64::NAN };
    let a1 = finite_beta.then_some(rw * g);
    let q1 =
        finite_beta.then(|| d / (d + beta) * (beta / (d * (d + beta))).powf(beta / d) * (rw * g).powf((d + beta) / d) * regime.k);
    let stable = matches!(regime.process, Process::Stable { .. });
    let a1_quenched =
        (stable && regime.tag != RegimeTag::Heavy).then(|| (rw / d).powf(idx / (d + idx)) * lambda1.powf(d / (d + idx)));
    let a2_quenched = (stable && regime.tag == RegimeTag::Heavy).then(|| {
        (d / (d + beta)).powf(d / (d + beta))
            * (beta / (d * (d + beta))).powf(beta / (d + beta))
            * g
            * rw
            * regime.k.powf(d / (d + beta))
    });
    let k0 = match regime.tag {
        RegimeTag::Light => Some(rw * lambda1.powf(d / idx)),
        RegimeTag::Heavy => {
            Some(beta / (d + beta) * (d / (d + beta)).powf(d / beta) * (g * rw).powf((d + beta) / beta) * regime.k.powf(d / beta))
        }
        RegimeTag::Critical => None,
    };
    let annealed_light = (regime.tag == RegimeTag::Light)
        .then(|| rw.powf(idx / (d + idx)) * ((d + idx) / idx) * (idx * lambda1 / d).powf(d / (d + idx)));
    let annealed_heavy = (regime.tag == RegimeTag::Heavy).then(|| rw * g * regime.k.powf(d / (d + beta)));
    let quenched = match (regime.process, regime.tag) {
        (Process::Stable { alpha }, RegimeTag::Light) => {
            let a1q = a1_quenched.unwrap();
            Some(QuenchedPair {
                lower: -(d + alpha).powf(alpha / (d + alpha))
                    * ((alpha / d).powf(d / (d + alpha)) + (d / alpha).powf(alpha / (d + alpha)))
                    * a1q,
                upper: -alpha * (alpha + d / 2.0).powf(-d / (alpha + d)) * a1q,
            })
        }
        (Process::Stable { alpha }, RegimeTag::Heavy) => {
            let a2 = a2_quenched.unwrap();
            Some(QuenchedPair {
                lower: -(d + alpha).powf(beta / (d + beta))
                    * ((beta / d).powf(d / (d + beta)) + (d / beta).powf(beta / (d + beta)))
                    * a2,
                upper: -alpha.powf(beta / (d + beta)) * a2,
            })
        }
        (Process::Tempered { .. }, RegimeTag::Light) => {
            let c = -(rw * regime.process.theta_factor() / d).powf(2.0 / d) * lambda1;
            Some(QuenchedPair { lower: c, upper: c })
        }
        (Process::Tempered { .. }, RegimeTag::Heavy) => {
            let c = -regime.process.theta_factor().powf(beta / d) * q1.unwrap();
            Some(QuenchedPair { lower: c, upper: c })
        }
        (_, RegimeTag::Critical) => None,
    };
    Ok(ConstantSet {
        regime: *regime,
        lambda1,
        a1_quenched,
        a2_quenched,
        q1,
        k0,
        a1,
        annealed_light,
        annealed_heavy,
        quenched,
        bounds,
    })
}

impl ConstantSet {
    /// The annealed limit constant c > 0 with log E_Q u ~ −c·t^{d/(d+index∧β)}.
    pub fn annealed(&self) -> Option<f64> {
        self.annealed_light.or(self.annealed_heavy)
    }

    /// Rows (name, value, units) of the defined constants.
    pub fn rows(&self) -> Vec<(String, f64, String)> {
        let r = &self.regime;
        let d = r.df();
        let mut out = vec![("lambda1".to_string(), self.lambda1, "energy".to_string())];
        let mut push = |name: &str, v: Option<f64>, units: String| {
            if let Some(v) = v {
                out.push((name.to_string(), v, units));
            }
        };
        push("A1", self.a1_quenched, format!("log u / {}", r.rate_label()));
        push("A2", self.a2_quenched, format!("log u / {}", r.rate_label()));
        push("q1", self.q1, format!("energy * (log t)^{}", r.beta / d));
        push("k0", self.k0, format!("-log N * energy^{}", d / r.process.index().min(r.beta)));
        push("a1", self.a1, format!("-log E_Q e^(-tV(0)) / t^{}", d / (d + r.beta)));
        let ann = format!("-log E_Q u / t^{}", d / (d + r.process.index().min(r.beta)));
        push("annealed_light", self.annealed_light, ann.clone());
        push("annealed_heavy", self.annealed_heavy, ann);
        if let Some(q) = self.quenched {
            push("quenched_lower", Some(q.lower), format!("log u / {}", r.rate_label()));
            push("quenched_upper", Some(q.upper), format!("log u / {}", r.rate_label()));
        }
        let b = self.bounds;
        for (n, v) in
            [("kappa", b.kappa), ("eta", b.eta), ("varsigma", b.varsigma), ("a", b.a), ("delta", b.delta), ("eps", b.eps)]
        {
            push(n, Some(v), "1".into());
        }
        out
    }
}

/// Constants report, CSV "name,value,units,regime,params".
pub fn write_constants(path: &Path, sets: &[ConstantSet]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["name", "value", "units", "regime", "params"])?;
    for s in sets {
        for (name, value, units) in s.rows() {
            w.write_record([name, format!("{value:?}"), units, s.regime.tag.to_string(), s.regime.params()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Predicted log-asymptote at t: lower/upper = constant·rate(t) (NaN in the
/// critical regime, where no constant is known).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Envelope {
    pub t: f64,
    pub rate: f64,
    pub lower_const: f64,
    pub upper_const: f64,
}

impl Envelope {
    pub fn lower(&self) -> f64 {
        self.lower_const * self.rate
    }

    pub fn upper(&self) -> f64 {
        self.upper_const * self.rate
    }
}

pub fn quenched_envelope(constants: &ConstantSet, t: f64) -> Result<Envelope> {
    if !(t > std::f64::consts::E) {
        return usage("envelope needs t > e");
    }
    let q = constants.quenched.unwrap_or(QuenchedPair { lower: f64::NAN, upper: f64::NAN });
    Ok(Envelope { t, rate: constants.regime.rate(t), lower_const: q.lower, upper_const: q.upper })
}

/// Envelope CSV "t,rate,lower,upper".
pub fn write_envelope(path: &Path, rows: &[Envelope]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["t", "rate", "lower", "upper"])?;
    for e in rows {
        w.write_record([e.t, e.rate, e.lower(), e.upper()].map(|v| format!("{v:?}")))?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// Radius used for the upper bound on u.
    Upper,
    /// Radius used for the lower bound on u.
    Lower,
}

/// The proofs' optimizing radius. For the power-law lower branches the
/// exponent A·R^d + B·t·R^{−p} is minimized; its coefficients are returned.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OptimalRadius {
    pub radius: f64,
    /// (A, B, p) of the minimized exponent, lower stable branches only.
    pub exponent: Option<(f64, f64, f64)>,
}

impl OptimalRadius {
    pub fn exponent_at(&self, r: f64, t: f64, d: usize) -> Option<f64> {
        self.exponent.map(|(a, b, p)| a * r.powi(d as i32) + b * t * r.powf(-p))
    }
}

/// `upper_scale` is the constant C of R = C·t^{1/(1∧θ)} (tempered upper branch).
pub fn optimal_radius(constants: &ConstantSet, t: f64, branch: Branch, upper_scale: f64) -> Result<OptimalRadius> {
    let out = raw_radius(constants, t, branch, upper_scale)?;
    if out.radius < 1.0 {
        let threshold = radius_threshold(constants, branch, upper_scale);
        return usage(format!("t = {t} gives R = {} < 1; need t ≥ {threshold}", out.radius));
    }
    Ok(out)
}

fn raw_radius(constants: &ConstantSet, t: f64, branch: Branch, upper_scale: f64) -> Result<OptimalRadius> {
    let r = &constants.regime;
    let b = constants.bounds;
    let d = r.df();
    if !(t > 1.0) {
        return usage("t must exceed 1");
    }
    let need =
        |name: &str, v: Option<f64>| v.ok_or_else(|| crate::error::Error::Usage(format!("{name} undefined in regime {}", r.tag)));
    let rw = r.rho * unit_ball_volume(r.d);
    let out = match (r.process, r.tag, branch) {
        (_, RegimeTag::Critical, _) => return usage("no explicit radius in the critical regime"),
        (Process::Stable { alpha }, RegimeTag::Light, Branch::Upper) => {
            let k0 = need("k0", constants.k0)?;
            let e = (1.0 - 2.0 * b.eps).powf(d / (alpha + d))
                * (alpha + d / 2.0).powf(-d / (alpha + d))
                * (k0 / d).powf(alpha / (d + alpha))
                * t.powf(d / (d + alpha));
            OptimalRadius { radius: e.exp(), exponent: None }
        }
        (Process::Stable { alpha }, RegimeTag::Heavy, Branch::Upper) => {
            let k0 = need("k0", constants.k0)?;
            let beta = r.beta;
            let e = (1.0 - 2.0 * b.eps).powf(d / (beta + d))
                * (alpha + d / b.a).powf(-d / (beta + d))
                * (k0 / d).powf(beta / (d + beta))
                * t.powf(d / (d + beta));
            OptimalRadius { radius: e.exp(), exponent: None }
        }
        (Process::Stable { alpha }, RegimeTag::Light, Branch::Lower) => {
            let big_a = rw / d * (1.0 + 2.0 * b.eta).powf(d) * (b.a * (d + alpha) + 4.0 * b.delta * d);
            let big_b = b.a * b.a * (1.0 + b.varsigma) * constants.lambda1;
            OptimalRadius {
                radius: (alpha * big_b / (d * big_a)).powf(1.0 / (d + alpha)) * t.powf(1.0 / (d + alpha)),
                exponent: Some((big_a, big_b, alpha)),
            }
        }
        (Process::Stable { alpha }, RegimeTag::Heavy, Branch::Lower) => {
            let beta = r.beta;
            let big_a = b.a * (d + alpha) + 4.0 * b.delta * d;
            let big_b = (1.0 + b.varsigma) * need("q1", constants.q1)?;
            OptimalRadius {
                radius: (beta * big_b / (d * big_a)).powf(1.0 / (d + beta)) * t.powf(1.0 / (d + beta)),
                exponent: Some((big_a, big_b, beta)),
            }
        }
        (Process::Tempered { .. }, _, Branch::Upper) => {
            if !(upper_scale > 0.0) {
                return usage("upper_scale must be positive");
            }
            OptimalRadius { radius: upper_scale * t.powf(1.0 / r.process.theta_factor()), exponent: None }
        }
        (Process::Tempered { .. }, _, Branch::Lower) => {
            let c = (d / (b.a * r.process.theta_factor() * rw)).powf(1.0 / d) / (1.0 + 2.0 * b.eta);
            OptimalRadius { radius: c * t.ln().powf(1.0 / d), exponent: None }
        }
    };
    Ok(out)
}

/// Smallest t with R(t) ≥ 1 (bisection on log t).
fn radius_threshold(constants: &ConstantSet, branch: Branch, upper_scale: f64) -> f64 {
    let ok = |lt: f64| {
        let t = lt.exp();
        raw_radius(constants, t, branch, upper_scale).is_ok_and(|r| r.radius >= 1.0)
    };
    let (mut lo, mut hi) = (1e-9f64, 1.0f64);
    while !ok(hi) && hi < 700.0 {
        hi *= 2.0;
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi.exp()
}

/// What an empirical ratio series is compared against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Target {
    Bracket {
        lower: f64,
        upper: f64,
    },
    Limit(f64),
    /// Only the sign is known (critical regime): ratios in (−∞, 0).
    Negative,
}

impl Target {
    pub fn for_quenched(constants: &ConstantSet) -> Self {
        match constants.quenched {
            Some(q) if q.lower == q.upper => Target::Limit(q.lower),
            Some(q) => Target::Bracket { lower: q.lower, upper: q.upper },
            None => Target::Negative,
        }
    }

    fn interval(&self) -> (f64, f64) {
        match *self {
            Target::Bracket { lower, upper } => (lower, upper),
            Target::Limit(c) => (c, c),
            Target::Negative => (f64::NEG_INFINITY, 0.0),
        }
    }

    /// Signed distance: 0 inside, positive outside.
    fn distance(&self, r: f64) -> f64 {
        let (lo, hi) = self.interval();
        if r < lo {
            lo - r
        } else if r > hi {
            r - hi
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    InsideBracket,
    Approaching,
    Inconsistent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesPoint {
    pub t: f64,
    pub ratio: f64,
    pub stderr: f64,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesReport {
    pub target: Target,
    pub points: Vec<SeriesPoint>,
    /// Least-squares slope of the distance against log t.
    pub distance_slope: f64,
    pub final_distance: f64,
    /// 4-stderr half-width at the final point.
    pub final_halfwidth: f64,
    pub verdict: Verdict,
}

/// Compare (t, log u, stderr of log u) against the quenched prediction.
pub fn compare_series(empirical: &[(f64, f64, f64)], constants: &ConstantSet) -> Result<SeriesReport> {
    compare_series_with(empirical, |t| constants.regime.rate(t), Target::for_quenched(constants))
}

/// Ratios log u(t)/rate(t) against a target. Inside: every ratio within its
/// 4-stderr band of the target. Approaching: final point inside or the
/// distance shrinks (negative slope in log t, final < first). Else inconsistent.
pub fn compare_series_with<F: Fn(f64) -> f64>(empirical: &[(f64, f64, f64)], rate: F, target: Target) -> Result<SeriesReport> {
    if empirical.len() < 5 {
        return usage("need at least 5 time points");
    }
    if empirical.iter().any(|p| !(p.0 > 1.0 && p.1.is_finite() && p.2 >= 0.0 && p.2.is_finite())) {
        return usage("series needs t > 1, finite log u and stderr ≥ 0");
    }
    if empirical.windows(2).any(|w| w[1].0 <= w[0].0) {
        return usage("t must be strictly increasing");
    }
    let (t0, t1) = (empirical[0].0, empirical[empirical.len() - 1].0);
    if t1 < 10.0 * t0 {
        return usage("series must span at least a decade in t");
    }
    let points: Vec<SeriesPoint> = empirical
        .iter()
        .map(|&(t, lu, se)| {
            let r = rate(t);
            let ratio = lu / r;
            SeriesPoint { t, ratio, stderr: se / r, distance: target.distance(ratio) }
        })
        .collect();
    let x: Vec<f64> = points.iter().map(|p| p.t.ln()).collect();
    let y: Vec<f64> = points.iter().map(|p| p.distance).collect();
    let (slope, _) = crate::stats::linear_fit(&x, &y);
    let last = points[points.len() - 1];
    let tol = |p: &SeriesPoint| 4.0 * p.stderr + 1e-9 * p.ratio.abs().max(1.0);
    let verdict = if points.iter().all(|p| p.distance <= tol(p)) {
        Verdict::InsideBracket
    } else if last.distance <= tol(&last) || (slope < 0.0 && last.distance < points[0].distance) {
        Verdict::Approaching
    } else {
        Verdict::Inconsistent
    };
    Ok(SeriesReport {
        target,
        final_distance: last.distance,
        final_halfwidth: 4.0 * last.stderr,
        distance_slope: slope,
        points,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stable(alpha: f64, beta: f64) -> Regime {
        Regime::classify(Process::Stable { alpha }, 1, beta, 1.0, 1.0).unwrap()
    }

    #[test]
    fn classification_is_total_and_exclusive() {
        assert_eq!(stable(1.0, 0.5).tag, RegimeTag::Heavy);
        assert_eq!(stable(1.0, 1.5).tag, RegimeTag::Light);
        assert_eq!(stable(1.0, f64::INFINITY).tag, RegimeTag::Light);
        assert_eq!(stable(1.0, 1.0).tag, RegimeTag::Critical);
        let t = Regime::classify(Process::Tempered { alpha: 1.0, theta: 1.0 }, 1, 1.5, 1.0, 1.0).unwrap();
        assert_eq!(t.tag, RegimeTag::Heavy);
        assert!(stable(1.0, 0.5).with_tag(RegimeTag::Light).is_err());
        assert!(stable(1.0, 0.5).with_tag(RegimeTag::Heavy).is_ok());
    }

    #[test]
    fn q1_and_a1_closed_forms() {
        let c = constants(&stable(1.0, 0.5), 1.0, BoundRecord::default()).unwrap();
        let g = gamma(1.0 / 3.0);
        assert!((c.q1.unwrap() - 2.0 / 3.0 * (1.0f64 / 3.0).sqrt() * (2.0 * g).powf(1.5)).abs() < 1e-12);
        assert!((c.a1.unwrap() - 2.0 * g).abs() < 1e-12);
        let c = constants(&stable(1.5, 1.0), 1.0, BoundRecord::default()).unwrap();
        assert!((c.a1.unwrap() - 2.0 * std::f64::consts::PI.sqrt()).abs() < 1e-12);
    }
}
