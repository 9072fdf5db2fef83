//! Verification suite: one deterministic, seeded check per acceptance
//! criterion, each writing its raw numbers to a CSV artifact.
//!
//! The budgets below are desk scale and fixed; only the master seed varies.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::Rng as _;
use serde::Serialize;

use crate::asymptotics::{constants, BoundRecord, Process, Regime};
use crate::error::{usage, Result};
use crate::field::{self, sample_field, sample_tilted_field, ShapeFunction, TiltParams};
use crate::fk::{self, AnnealedMode, BoundParams, FkParams, Potential};
use crate::geometry::Domain;
use crate::levy::{self, LevyModel};
use crate::rng;
use crate::spectral::{self, Generator, IdsSpec};
use crate::stats::MeanVar;

/// λ₁ of the Cauchy process killed outside (−1, 1): Richardson value of the
/// h = 1/128, 1/256, 1/512 ladder.
pub const CAUCHY_INTERVAL_LAMBDA1: f64 = 1.157_758_002_6;

pub const CRITERIA: [&str; 10] = [
    "characteristic_function",
    "campbell_laplace",
    "eigen_references",
    "sandwich",
    "bound_campaign",
    "exit_time",
    "tilted_mean",
    "annealed_trend",
    "lifshitz_trend",
    "determinism",
];

#[derive(Debug, Clone, Serialize)]
pub struct Outcome {
    pub criterion: String,
    pub pass: bool,
    /// Kept out of the summary CSV so reruns compare byte for byte.
    #[serde(skip)]
    pub seconds: f64,
    pub detail: String,
    #[serde(skip)]
    pub artifacts: Vec<PathBuf>,
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} {:<24} {:>8.1}s  {}", if self.pass { "PASS" } else { "FAIL" }, self.criterion, self.seconds, self.detail)
    }
}

struct Check {
    pass: bool,
    detail: String,
    artifacts: Vec<PathBuf>,
}

fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn cauchy() -> LevyModel {
    LevyModel::stable(1, 1.0).expect("valid model")
}

/// The five process models exercised by the process-level checks. Tempered
/// models use a 10⁻² small-jump cutoff.
pub fn models() -> Vec<(&'static str, LevyModel)> {
    vec![
        ("stable_d1_a1", cauchy()),
        ("stable_d1_a0.7", LevyModel::stable(1, 0.7).expect("valid")),
        ("stable_d2_a1.5", LevyModel::stable(2, 1.5).expect("valid")),
        ("tempered_d1_a1_th1", LevyModel::tempered(1, 1.0, 1.0, 1.0).expect("valid").with_cutoff(1e-2)),
        ("tempered_d2_a0.8_thinf", LevyModel::tempered(2, 0.8, f64::INFINITY, 1.0).expect("valid").with_cutoff(1e-2)),
    ]
}

/// Runs one named criterion (other than `determinism`) writing into `out`.
pub fn run_one(name: &str, seed: u64, out: &Path) -> Result<Outcome> {
    std::fs::create_dir_all(out)?;
    let idx = CRITERIA.iter().position(|c| *c == name);
    let Some(idx) = idx else {
        return usage(format!("unknown criterion {name}"));
    };
    let s = rng::derive_seed(seed, idx as u64);
    let start = Instant::now();
    let check = match name {
        "characteristic_function" => characteristic_function(s, out),
        "campbell_laplace" => campbell_laplace(s, out),
        "eigen_references" => eigen_references(out),
        "sandwich" => sandwich(s, out),
        "bound_campaign" => bound_campaign(s, out),
        "exit_time" => exit_time(s, out),
        "tilted_mean" => tilted_mean(s, out),
        "annealed_trend" => annealed_trend(s, out),
        "lifshitz_trend" => lifshitz_trend(s, out),
        _ => return usage("determinism compares two full runs; use run_all"),
    }?;
    Ok(Outcome {
        criterion: name.to_string(),
        pass: check.pass,
        seconds: start.elapsed().as_secs_f64(),
        detail: check.detail,
        artifacts: check.artifacts,
    })
}

/// Every criterion, then a second full run on a different worker count
/// whose CSVs must match the first byte for byte. `report` sees each
/// outcome as soon as it is known.
pub fn run_all(seed: u64, out: &Path, mut report: impl FnMut(&Outcome)) -> Result<Vec<Outcome>> {
    let data = &CRITERIA[..CRITERIA.len() - 1];
    let mut outcomes = Vec::new();
    for name in data {
        let o = run_one(name, seed, out)?;
        report(&o);
        outcomes.push(o);
    }
    let start = Instant::now();
    let rerun_dir = out.join("rerun");
    let workers = if rayon::current_num_threads() == 1 { 2 } else { 1 };
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build().map_err(|e| crate::Error::Usage(e.to_string()))?;
    let rerun: Vec<Outcome> = pool.install(|| data.iter().map(|n| run_one(n, seed, &rerun_dir)).collect::<Result<_>>())?;
    let mut mismatched = Vec::new();
    let mut files = 0;
    for (a, b) in outcomes.iter().zip(&rerun) {
        for (pa, pb) in a.artifacts.iter().zip(&b.artifacts) {
            files += 1;
            if std::fs::read(pa)? != std::fs::read(pb)? {
                mismatched.push(pa.file_name().unwrap_or_default().to_string_lossy().into_owned());
            }
        }
        if a.artifacts.len() != b.artifacts.len() || a.pass != b.pass {
            mismatched.push(a.criterion.clone());
        }
    }
    let o = Outcome {
        criterion: "determinism".into(),
        pass: mismatched.is_empty() && files > 0,
        seconds: start.elapsed().as_secs_f64(),
        detail: format!("{files} CSVs rerun on {workers} worker(s); mismatches: {mismatched:?}"),
        artifacts: Vec::new(),
    };
    report(&o);
    outcomes.push(o);
    write_rows(&out.join("acceptance_summary.csv"), &outcomes)?;
    Ok(outcomes)
}

#[derive(Serialize)]
struct CfRow {
    model: &'static str,
    xi: f64,
    re: f64,
    re_stderr: f64,
    im: f64,
    im_stderr: f64,
    want: f64,
    z_re: f64,
    z_im: f64,
}

fn characteristic_function(seed: u64, out: &Path) -> Result<Check> {
    let (n, dt) = (1_000_000, 0.5);
    let freqs = [0.25, 0.5, 1.0, 2.0, 4.0];
    let mut rows = Vec::new();
    for (i, (name, m)) in models().into_iter().enumerate() {
        let s = m.sampler()?;
        let draws = rng::par_trials(rng::derive_seed(seed, i as u64), n, |r, _| s.sample_increment(dt, r)[0]);
        for k in freqs {
            let mut xi = vec![0.0; m.dim];
            xi[0] = k;
            let re = MeanVar::from_slice(&draws.iter().map(|z| (k * z).cos()).collect::<Vec<_>>());
            let im = MeanVar::from_slice(&draws.iter().map(|z| (k * z).sin()).collect::<Vec<_>>());
            let want = (-dt * m.psi(&xi)?).exp();
            rows.push(CfRow {
                model: name,
                xi: k,
                re: re.mean,
                re_stderr: re.stderr(),
                im: im.mean,
                im_stderr: im.stderr(),
                want,
                z_re: (re.mean - want) / re.stderr(),
                z_im: im.mean / im.stderr(),
            });
        }
    }
    let worst = rows.iter().map(|r| r.z_re.abs().max(r.z_im.abs())).fold(0.0, f64::max);
    let path = out.join("cf.csv");
    write_rows(&path, &rows)?;
    Ok(Check {
        pass: worst < 4.0,
        detail: format!(
            "{} models × {} frequencies, 10⁶ draws; max |z| = {worst:.2} (< 4)",
            rows.len() / freqs.len(),
            freqs.len()
        ),
        artifacts: vec![path],
    })
}

#[derive(Serialize)]
struct CampbellRow {
    t: f64,
    mc: f64,
    stderr: f64,
    /// exp(H(t)) restricted to the sampling box.
    box_value: f64,
    /// exp(ρ∫(e^{−tφ}−1)) over the whole line.
    full_value: f64,
    /// MC·exp(H − H_box): the box estimate with the exterior factor applied.
    mc_full: f64,
    z: f64,
}

fn campbell_laplace(seed: u64, out: &Path) -> Result<Check> {
    let shape = ShapeFunction::new(1.0, 1.0, 1)?;
    let (rho, l, n) = (1.0, 100.0, 100_000);
    let v0 = rng::par_trials(seed, n, |_, i| {
        sample_field(1, rho, l, rng::derive_seed(seed, i as u64)).map(|f| f.potential_unchecked(&shape, &[0.0]))
    })
    .into_iter()
    .collect::<Result<Vec<f64>>>()?;
    let mut rows = Vec::new();
    for t in [0.1, 1.0, 10.0] {
        let mv = MeanVar::from_slice(&v0.iter().map(|v| (-t * v).exp()).collect::<Vec<_>>());
        let h_box = field::campbell_laplace_box(&shape, rho, t, l)?;
        let h = field::campbell_laplace(&shape, rho, t)?;
        let ext = (h - h_box).exp();
        rows.push(CampbellRow {
            t,
            mc: mv.mean,
            stderr: mv.stderr(),
            box_value: h_box.exp(),
            full_value: h.exp(),
            mc_full: mv.mean * ext,
            z: (mv.mean * ext - h.exp()) / (mv.stderr() * ext),
        });
    }
    let worst = rows.iter().map(|r| r.z.abs()).fold(0.0, f64::max);
    let t = 1e4;
    let slope = field::campbell_laplace(&shape, rho, t)? / t.sqrt();
    let want = -2.0 * std::f64::consts::PI.sqrt();
    let rel = (slope - want).abs() / want.abs();
    let path = out.join("campbell_laplace.csv");
    write_rows(&path, &rows)?;
    Ok(Check {
        pass: worst <= 4.0 && rel <= 0.02,
        detail: format!(
            "10⁵ fields, max |z| = {worst:.2} over t ∈ {{0.1, 1, 10}}; H(10⁴)/10² = {slope:.4} vs {want:.4} ({:.2}%)",
            100.0 * rel
        ),
        artifacts: vec![path],
    })
}

#[derive(Serialize)]
struct EigenRow {
    case: String,
    r: f64,
    h: f64,
    value: f64,
    reference: f64,
    rel_err: f64,
}

fn eigen_references(out: &Path) -> Result<Check> {
    let unit = Domain::centered_ball(1, 1.0);
    let mut rows = Vec::new();
    let mut push = |case: &str, r: f64, h: f64, value: f64, reference: f64| {
        rows.push(EigenRow { case: case.into(), r, h, value, reference, rel_err: (value - reference).abs() / reference });
    };
    let lap = Generator::Laplacian { dim: 1, a: 1.0 };
    let (res, _) = spectral::eigen_ladder(&lap, &unit, 0.125, |_| 0.0)?;
    let v = res.extrapolated.map_or(res.lambda1, |e| e.value);
    push("laplacian", 1.0, res.h, v, std::f64::consts::PI.powi(2) / 4.0);
    let (res, _) = spectral::eigen_ladder(&Generator::Levy(cauchy()), &unit, 1.0 / 16.0, |_| 0.0)?;
    let v = res.extrapolated.map_or(res.lambda1, |e| e.value);
    push("cauchy", 1.0, res.h, v, CAUCHY_INTERVAL_LAMBDA1);
    for alpha in [1.0, 1.5] {
        let g = Generator::Levy(LevyModel::stable(1, alpha)?);
        let table = spectral::scaling_check(&g, &[1.0, 2.0, 4.0], 0.125)?;
        let base = table[0].scaled;
        for r in &table {
            push(&format!("scaling_a{alpha}"), r.r, r.h, r.scaled, base);
        }
    }
    let worst = rows.iter().map(|r| r.rel_err).fold(0.0, f64::max);
    let path = out.join("eigen_references.csv");
    write_rows(&path, &rows)?;
    Ok(Check {
        pass: worst <= 0.01,
        detail: format!(
            "λ₁ Laplacian {:.5}, Cauchy {:.5}; scaling α ∈ {{1, 1.5}}, r ∈ {{1, 2, 4}}; max rel err {:.2e} (≤ 1e-2)",
            rows[0].value, rows[1].value, worst
        ),
        artifacts: vec![path],
    })
}

#[derive(Serialize)]
struct SandwichRow {
    instance: usize,
    model: &'static str,
    rho: f64,
    radius: f64,
    t: f64,
    nodes: usize,
    lambda1: f64,
    column_integral: f64,
    upper: f64,
    lower: f64,
    trace: f64,
    sandwich_holds: bool,
    mc: f64,
    mc_stderr: f64,
    mc_half_dt: f64,
    oracle: f64,
    budget: f64,
    agrees: bool,
}

fn bound_models() -> Vec<(&'static str, LevyModel)> {
    vec![
        ("stable_a1", cauchy()),
        ("stable_a1.5", LevyModel::stable(1, 1.5).expect("valid")),
        ("tempered_a0.8", LevyModel::tempered(1, 0.8, 1.0, 1.0).expect("valid").with_cutoff(1e-2)),
    ]
}

fn sandwich(seed: u64, out: &Path) -> Result<Check> {
    let shape = ShapeFunction::new(1.0, 0.5, 1)?;
    let models = bound_models();
    let h = 0.1;
    let mut rng = rng::stream(seed, 0);
    let mut rows = Vec::new();
    for i in 0..10 {
        let (name, m) = models[i % models.len()];
        let rho = rng.random_range(0.1..1.0);
        let radius = [1.5, 2.0][rng.random_range(0..2)];
        let t = rng.random_range(0.5..1.5);
        let field = sample_field(1, rho, 30.0, rng::derive_seed(seed, 100 + i as u64))?;
        let pot = Potential::field(&field, &shape);
        let domain = Domain::centered_ball(1, radius);
        // finest oracle level h/4 carries the node budget
        let op = spectral::assemble(&Generator::Levy(m), &domain, h / 4.0, &[])?;
        if op.n() > 200 {
            return usage(format!("instance {i} has {} nodes", op.n()));
        }
        let v = (0..op.n()).map(|k| pot.eval(op.node(k))).collect();
        let op = op.with_potential(v)?;
        let s = spectral::eigen_sandwich_check(&op, t)?;
        let c = fk::compare_with_oracle(
            &m,
            &pot,
            &domain,
            h,
            &FkParams::new(t, 20_000, 0.01, rng::derive_seed(seed, 200 + i as u64)),
        )?;
        rows.push(SandwichRow {
            instance: i,
            model: name,
            rho,
            radius,
            t,
            nodes: op.n(),
            lambda1: s.lambda1,
            column_integral: s.column_integral,
            upper: s.upper,
            lower: s.lower,
            trace: s.trace,
            sandwich_holds: s.holds(),
            mc: c.mc.value,
            mc_stderr: c.mc.stderr,
            mc_half_dt: c.mc_half_dt.value,
            oracle: c.oracle,
            budget: c.budget,
            agrees: c.agrees,
        });
    }
    let sw = rows.iter().filter(|r| r.sandwich_holds).count();
    let ag = rows.iter().filter(|r| r.agrees).count();
    let path = out.join("sandwich.csv");
    write_rows(&path, &rows)?;
    Ok(Check {
        pass: sw == rows.len() && ag == rows.len(),
        detail: format!("discrete sandwich {sw}/10, MC vs matrix exponential {ag}/10 (≤ 200 nodes)"),
        artifacts: vec![path],
    })
}

#[derive(Serialize)]
struct BoundRow {
    config: usize,
    kind: &'static str,
    model: &'static str,
    rho: f64,
    beta: f64,
    t: f64,
    radius: f64,
    u: f64,
    u_stderr: f64,
    bound: f64,
    holds: bool,
}

fn bound_campaign(seed: u64, out: &Path) -> Result<Check> {
    let models = bound_models();
    let mut rng = rng::stream(seed, 0);
    let mut rows = Vec::new();
    for i in 0..20 {
        let (name, m) = models[rng.random_range(0..models.len())];
        let rho = rng.random_range(0.2..1.0);
        let beta = [0.5, 1.0, 3.0, f64::INFINITY][rng.random_range(0..4)];
        let t = rng.random_range(1.0..3.0);
        let radius = [2.0, 3.0, 4.0][rng.random_range(0..3)];
        let shape = ShapeFunction::new(1.0, beta, 1)?;
        let field = sample_field(1, rho, 40.0, rng::derive_seed(seed, 100 + i as u64))?;
        let pot = Potential::field(&field, &shape);
        let bp = BoundParams { n_paths: 4000, seed: rng::derive_seed(seed, 200 + i as u64), ..Default::default() };
        let up = fk::upper_decomposition(&m, &pot, t, radius, &bp)?;
        let lo = fk::lower_bound_check(&m, &pot, t, radius, 1.0, &bp)?;
        let row = |kind, u: &fk::FKEstimate, bound, holds| BoundRow {
            config: i,
            kind,
            model: name,
            rho,
            beta,
            t,
            radius,
            u: u.value,
            u_stderr: u.stderr,
            bound,
            holds,
        };
        rows.push(row("upper", &up.u, up.bound, up.holds));
        rows.push(row("lower", &lo.u, lo.bound, lo.holds));
    }
    let violations = rows.iter().filter(|r| !r.holds).count();
    let path = out.join("bounds.csv");
    write_rows(&path, &rows)?;
    Ok(Check {
        pass: violations == 0,
        detail: format!("20 random configurations, upper + lower; {violations} violations (4σ slack)"),
        artifacts: vec![path],
    })
}

#[derive(Serialize)]
struct ExitRow {
    model: &'static str,
    t: f64,
    r: f64,
    exit: f64,
    exit_stderr: f64,
    /// max over s ∈ [t, 2t] of ℙ(|Z_s| ≥ R/2).
    tail_sup: f64,
    tail_stderr: f64,
    sup_at: f64,
    z: f64,
}

fn exit_time(seed: u64, out: &Path) -> Result<Check> {
    let n = 10_000;
    let mut rows = Vec::new();
    let mut label = 0u64;
    for (name, m) in models() {
        for t in [0.5, 1.0, 2.0] {
            for r in [1.0, 2.0, 4.0] {
                label += 1;
                let exit = levy::exit_prob(&m, r, t, n, t / 100.0, rng::derive_seed(seed, 2 * label))?;
                let mut best = levy::McEstimate { value: -1.0, stderr: 0.0, n: 0 };
                let mut sup_at = t;
                for (j, s) in [1.0, 1.25, 1.5, 1.75, 2.0].iter().map(|f| f * t).enumerate() {
                    let e =
                        levy::tail_prob(&m, r / 2.0, s, n, rng::derive_seed(rng::derive_seed(seed, 2 * label + 1), j as u64))?;
                    if e.value > best.value {
                        best = e;
                        sup_at = s;
                    }
                }
                let joint = exit.stderr.hypot(2.0 * best.stderr);
                let excess = exit.value - 2.0 * best.value;
                rows.push(ExitRow {
                    model: name,
                    t,
                    r,
                    exit: exit.value,
                    exit_stderr: exit.stderr,
                    tail_sup: best.value,
                    tail_stderr: best.stderr,
                    sup_at,
                    z: if joint > 0.0 {
                        excess / joint
                    } else if excess > 0.0 {
                        f64::INFINITY
                    } else {
                        f64::NEG_INFINITY
                    },
                });
            }
        }
    }
    let worst = rows.iter().map(|r| r.z).fold(f64::NEG_INFINITY, f64::max);
    let path = out.join("exit_time.csv");
    write_rows(&path, &rows)?;
    Ok(Check {
        pass: worst <= 5.0,
        detail: format!("{} (t, R) points over 5 models; max (P(τ≤t) − 2 sup P(|Z_s|≥R/2))/σ = {worst:.2} (≤ 5)", rows.len()),
        artifacts: vec![path],
    })
}

#[derive(Serialize)]
struct TiltRow {
    t: f64,
    half_width: f64,
    n_fields: usize,
    mc: f64,
    stderr: f64,
    quadrature_box: f64,
    quadrature: f64,
    lambda_t: f64,
    rho0: f64,
}

fn tilted_mean(seed: u64, out: &Path) -> Result<Check> {
    let shape = ShapeFunction::new(1.0, 0.5, 1)?;
    let (rho, l, n) = (1.0, 2000.0, 4000);
    let mut rows = Vec::new();
    for t in [1e2, 1e3, 1e4] {
        let tilt = TiltParams::new(&shape, rho, t)?;
        let vals = rng::par_trials(seed, n, |_, i| {
            sample_tilted_field(1, rho, &tilt, &shape, l, rng::derive_seed(seed, i as u64))
                .map(|f| f.potential_unchecked(&shape, &[0.0]))
        })
        .into_iter()
        .collect::<Result<Vec<f64>>>()?;
        let mv = MeanVar::from_slice(&vals);
        rows.push(TiltRow {
            t,
            half_width: l,
            n_fields: n,
            mc: mv.mean,
            stderr: mv.stderr(),
            quadrature_box: field::tilted_mean_box(&shape, rho, tilt.rho0, l)?,
            quadrature: field::tilted_mean(&shape, rho, tilt.rho0)?,
            lambda_t: tilt.lambda,
            rho0: tilt.rho0,
        });
    }
    let worst = rows.iter().map(|r| (r.mc - r.quadrature_box).abs() / r.stderr).fold(0.0, f64::max);
    let last = rows.last().expect("ladder");
    let rel = (last.quadrature - last.lambda_t).abs() / last.lambda_t;
    let path = out.join("tilted_mean.csv");
    write_rows(&path, &rows)?;
    Ok(Check {
        pass: worst <= 4.0 && rel <= 0.1,
        detail: format!(
            "MC vs quadrature max |z| = {worst:.2}; at t = 10⁴ quadrature {:.4} vs λ(t) {:.4} ({:.3}%)",
            last.quadrature,
            last.lambda_t,
            100.0 * rel
        ),
        artifacts: vec![path],
    })
}

#[derive(Serialize)]
struct AnnealedRow {
    t: f64,
    value: f64,
    stderr: f64,
    scaled: f64,
    scaled_stderr: f64,
    constant: f64,
}

/// t-ladder of the annealed trend. Beyond t ≈ 10 the path average is
/// dominated by rare long-localized paths and the estimator's relative error
/// grows past 15%.
pub const ANNEALED_LADDER: [(f64, f64); 3] = [(1.0, 0.01), (3.0, 0.01), (10.0, 0.02)];

fn annealed_trend(seed: u64, out: &Path) -> Result<Check> {
    let (d, beta, rho) = (1, 0.5, 1.0);
    let shape = ShapeFunction::new(1.0, beta, d)?;
    let m = cauchy();
    let regime = Regime::from_model(&m, beta, rho, 1.0)?;
    let c = constants(&regime, 1.0, BoundRecord::default())?.annealed_heavy.expect("heavy regime");
    let mut est = Vec::new();
    let mut rows = Vec::new();
    for (i, &(t, dt)) in ANNEALED_LADDER.iter().enumerate() {
        let p = FkParams::new(t, 2000, dt, rng::derive_seed(seed, i as u64));
        let e = fk::annealed_u(&m, &shape, rho, &[0.0], &p, AnnealedMode::Campbell { bin: 0.05 })?;
        let rate = regime.annealed_rate(t);
        rows.push(AnnealedRow {
            t,
            value: e.value,
            stderr: e.stderr,
            scaled: -e.value.ln() / rate,
            scaled_stderr: e.stderr / e.value / rate,
            constant: c,
        });
        est.push(e);
    }
    let inc = rows.windows(2).all(|w| w[1].scaled > w[0].scaled);
    let dec = rows.windows(2).all(|w| w[1].scaled < w[0].scaled);
    let last = rows.last().expect("ladder").scaled;
    let rel = (last - c).abs() / c;
    let path = out.join("annealed.csv");
    write_rows(&path, &rows)?;
    let est_path = out.join("annealed_estimates.csv");
    fk::write_estimates(&est_path, &est)?;
    let series: Vec<String> = rows.iter().map(|r| format!("{:.3}", r.scaled)).collect();
    Ok(Check {
        pass: (inc || dec) && rel <= 0.35,
        detail: format!(
            "−log E u/t^{{2/3}} at t = 1, 3, 10: [{}] ({}); final {:.1}% from {c:.4}",
            series.join(", "),
            if inc {
                "increasing"
            } else if dec {
                "decreasing"
            } else {
                "not monotone"
            },
            100.0 * rel
        ),
        artifacts: vec![path, est_path],
    })
}

#[derive(Serialize)]
struct LifshitzRow {
    lambda: f64,
    n: f64,
    stderr: f64,
    diagnostic: f64,
    neg_k0: f64,
}

/// λ window of the Lifshitz diagnostic (d = 1, α = 1, β = ½, ρ = K = 1), fixed
/// before looking at the data: the lowest λ with counts in every run up to
/// the mean potential scale.
pub const LIFSHITZ_GRID: [f64; 6] = [2.5, 3.0, 3.5, 4.0, 4.5, 5.0];

fn lifshitz_trend(seed: u64, out: &Path) -> Result<Check> {
    let (beta, rho) = (0.5, 1.0);
    let shape = ShapeFunction::new(1.0, beta, 1)?;
    let m = cauchy();
    let (res, _) = spectral::eigen_ladder(&Generator::Levy(m), &Domain::centered_ball(1, 1.0), 1.0 / 16.0, |_| 0.0)?;
    let lambda1 = res.extrapolated.map_or(res.lambda1, |e| e.value);
    let regime = Regime::classify(Process::Stable { alpha: 1.0 }, 1, beta, rho, 1.0)?;
    let k0 = constants(&regime, lambda1, BoundRecord::default())?.k0.expect("non-critical");
    let spec = IdsSpec {
        generator: Generator::Levy(m),
        shape,
        rho,
        lambda_grid: LIFSHITZ_GRID.to_vec(),
        half_width: 30.0,
        field_margin: 20.0,
        n_fields: 50,
        h: 0.05,
        seed,
    };
    let r = spectral::ids_estimate(&spec)?;
    let rows: Vec<LifshitzRow> = r
        .points
        .iter()
        .map(|p| LifshitzRow { lambda: p.lambda, n: p.n, stderr: p.stderr, diagnostic: p.lifshitz_diag, neg_k0: -k0 })
        .collect();
    let negative = rows.iter().all(|p| p.diagnostic < 0.0);
    // "decreasing as λ decreases": the diagnostic grows with λ
    let trend = rows.windows(2).all(|w| w[1].diagnostic > w[0].diagnostic);
    let path = out.join("ids.csv");
    write_rows(&path, &rows)?;
    let series: Vec<String> = rows.iter().map(|p| format!("{:.1}", p.diagnostic)).collect();
    Ok(Check {
        pass: negative && trend && r.skipped == 0,
        detail: format!(
            "λ^{{d/(α∧β)}} log N(λ) at λ = {LIFSHITZ_GRID:?}: [{}], −k₀ = {:.2}; negative: {negative}, decreasing with λ: {trend}",
            series.join(", "),
            -k0
        ),
        artifacts: vec![path],
    })
}
