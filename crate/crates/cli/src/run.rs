use std::path::{Path, PathBuf};
use std::time::Instant;

use anderson_lab::acceptance;
use anderson_lab::asymptotics::{self, BoundRecord, ConstantSet};
use anderson_lab::field::sample_field;
use anderson_lab::fk::{self, BoundParams, FkParams, Potential};
use anderson_lab::geometry::Domain;
use anderson_lab::levy::{CovarianceConvention, LevyKind};
use anderson_lab::rng;
use anderson_lab::spectral::{self, gaussian_reference, Generator, GridSearchSpec, IdsSpec};
use anderson_lab::Result;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;

#[derive(Debug, Serialize)]
struct ArtifactEntry {
    file: String,
    sha256: String,
    bytes: u64,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    subcommand: &'a str,
    config_hash: &'a str,
    seed: u64,
    partial: bool,
    failures: &'a [String],
    notes: &'a [String],
    artifacts: Vec<ArtifactEntry>,
}

/// One run directory: collects artifacts, failures and notes, and writes the
/// manifest on completion.
pub struct Run {
    pub cfg: ExperimentConfig,
    pub out: PathBuf,
    subcommand: String,
    start: Instant,
    artifacts: Vec<PathBuf>,
    pub failures: Vec<String>,
    pub notes: Vec<String>,
    pub partial: bool,
}

impl Run {
    pub fn new(cfg: ExperimentConfig, out: PathBuf, subcommand: &str) -> Result<Self> {
        std::fs::create_dir_all(&out)?;
        Ok(Self {
            cfg,
            out,
            subcommand: subcommand.into(),
            start: Instant::now(),
            artifacts: Vec::new(),
            failures: Vec::new(),
            notes: Vec::new(),
            partial: false,
        })
    }

    fn path(&mut self, file: &str) -> PathBuf {
        let p = self.out.join(file);
        self.artifacts.push(p.clone());
        p
    }

    fn seed(&self, label: u64) -> u64 {
        rng::derive_seed(self.cfg.seed, label)
    }

    /// Marks the run partial once the wall-clock budget is spent.
    fn over_budget(&mut self) -> bool {
        if let Some(b) = self.cfg.budget_seconds {
            if self.start.elapsed().as_secs_f64() > b {
                if !self.partial {
                    self.notes.push(format!("budget of {b}s exhausted; remaining work skipped"));
                }
                self.partial = true;
            }
        }
        self.partial
    }

    fn write_rows<T: Serialize>(&mut self, file: &str, rows: &[T]) -> Result<()> {
        let p = self.path(file);
        let mut w = csv::Writer::from_path(p)?;
        for r in rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Writes the resolved config and the manifest; returns the exit status.
    pub fn finish(mut self) -> Result<i32> {
        let config = self.path("config.json");
        std::fs::write(&config, serde_json::to_string_pretty(&self.cfg)?)?;
        let mut artifacts = Vec::new();
        for p in &self.artifacts {
            let bytes = std::fs::read(p)?;
            artifacts.push(ArtifactEntry {
                file: p.strip_prefix(&self.out).unwrap_or(p).display().to_string(),
                sha256: hex::encode(Sha256::digest(&bytes)),
                bytes: bytes.len() as u64,
            });
        }
        let hash = self.cfg.hash();
        let manifest = Manifest {
            tool: "anderson-lab",
            version: env!("CARGO_PKG_VERSION"),
            subcommand: &self.subcommand,
            config_hash: &hash,
            seed: self.cfg.seed,
            partial: self.partial,
            failures: &self.failures,
            notes: &self.notes,
            artifacts,
        };
        std::fs::write(self.out.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
        for n in &self.notes {
            eprintln!("note: {n}");
        }
        for f in &self.failures {
            eprintln!("failed: {f}");
        }
        println!("{} artifacts in {} (config {})", self.artifacts.len(), self.out.display(), &hash[..12]);
        Ok(i32::from(self.partial || !self.failures.is_empty()))
    }
}

/// λ₁ entering the constants: the ball eigenvalue of the generator for
/// stable models, of the limiting −aΔ for tempered ones.
fn lambda1(run: &mut Run) -> Result<f64> {
    let m = run.cfg.model()?;
    let d = m.dim;
    match m.kind {
        LevyKind::IsotropicStable { .. } => {
            let (res, rows) =
                spectral::eigen_ladder(&Generator::Levy(m), &Domain::centered_ball(d, 1.0), run.cfg.spectral.h0, |_| 0.0)?;
            run.write_rows("lambda1_ladder.csv", &rows)?;
            Ok(res.extrapolated.map_or(res.lambda1, |e| e.value))
        }
        LevyKind::Tempered { .. } => {
            let a = m.gaussian_coefficient(CovarianceConvention::Half).expect("tempered laws have a second moment");
            Ok(gaussian_reference(d, a))
        }
    }
}

fn constant_set(run: &mut Run) -> Result<ConstantSet> {
    let l1 = lambda1(run)?;
    asymptotics::constants(&run.cfg.regime()?, l1, BoundRecord::default())
}

fn write_envelope(run: &mut Run, c: &ConstantSet) -> Result<()> {
    let rows = run
        .cfg
        .t_ladder
        .iter()
        .filter(|&&t| t > std::f64::consts::E)
        .map(|&t| asymptotics::quenched_envelope(c, t))
        .collect::<Result<Vec<_>>>()?;
    if rows.is_empty() {
        run.notes.push("no ladder time exceeds e; envelope.csv is empty".into());
    }
    let p = run.path("envelope.csv");
    asymptotics::write_envelope(&p, &rows)
}

pub fn constants(run: &mut Run) -> Result<()> {
    let c = constant_set(run)?;
    let p = run.path("constants.csv");
    asymptotics::write_constants(&p, std::slice::from_ref(&c))?;
    write_envelope(run, &c)
}

#[derive(Serialize)]
struct IdsRow {
    lambda: f64,
    #[serde(rename = "N")]
    n: f64,
    stderr: f64,
    lifshitz_diag: f64,
    #[serde(rename = "N_free")]
    n_free: f64,
    neg_k0: f64,
}

#[derive(Serialize)]
struct SearchRow {
    t: f64,
    center: String,
    lambda: f64,
    lambda_t: f64,
    ratio: f64,
    radius: f64,
    spacing: f64,
    window: f64,
    centers_total: usize,
    centers_scanned: usize,
    partial: bool,
}

pub fn eigen(run: &mut Run) -> Result<()> {
    let m = run.cfg.model()?;
    let g = Generator::Levy(m);
    let shape = run.cfg.shape()?;
    let sp = run.cfg.spectral.clone();
    let scaling = spectral::scaling_check(&g, &sp.radii, sp.h0)?;
    run.write_rows("scaling.csv", &scaling)?;
    if run.over_budget() {
        return Ok(());
    }
    let c = constant_set(run)?;
    let spec = IdsSpec {
        generator: g,
        shape,
        rho: run.cfg.rho,
        lambda_grid: sp.lambda_grid.clone(),
        half_width: sp.ids_half_width,
        field_margin: 20.0,
        n_fields: sp.ids_n_fields,
        h: sp.ids_h,
        seed: run.seed(1),
    };
    let ids = spectral::ids_estimate(&spec)?;
    if ids.skipped > 0 {
        run.notes.push(format!("IDS: {} fields skipped", ids.skipped));
    }
    let free = spectral::free_ids(&g, sp.ids_half_width, sp.ids_h, &sp.lambda_grid)?;
    let neg_k0 = c.k0.map_or(f64::NAN, |k| -k);
    let rows: Vec<IdsRow> = ids
        .points
        .iter()
        .zip(&free)
        .map(|(p, &f)| IdsRow { lambda: p.lambda, n: p.n, stderr: p.stderr, lifshitz_diag: p.lifshitz_diag, n_free: f, neg_k0 })
        .collect();
    run.write_rows("ids.csv", &rows)?;
    let mut search = Vec::new();
    for (i, &t) in sp.search_t.iter().enumerate() {
        if run.over_budget() {
            break;
        }
        let r = spectral::grid_search(&GridSearchSpec::new(g, shape, run.cfg.rho, t, run.seed(10 + i as u64)))?;
        if r.partial {
            run.notes.push(format!("grid search at t = {t} scanned {} of {} centers", r.centers_scanned, r.centers_total));
        }
        search.push(SearchRow {
            t,
            center: r.center.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(";"),
            lambda: r.lambda,
            lambda_t: r.lambda_t,
            ratio: r.ratio,
            radius: r.radius,
            spacing: r.spacing,
            window: r.window,
            centers_total: r.centers_total,
            centers_scanned: r.centers_scanned,
            partial: r.partial,
        });
    }
    if !sp.search_t.is_empty() {
        run.write_rows("grid_search.csv", &search)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct CompareRow {
    t: f64,
    ratio: f64,
    stderr: f64,
    distance: f64,
}

pub fn quenched(run: &mut Run) -> Result<()> {
    let m = run.cfg.model()?;
    let shape = run.cfg.shape()?;
    let d = m.dim;
    let field = sample_field(d, run.cfg.rho, run.cfg.mc.field_half_width, run.seed(0))?;
    // in d = 1 the far field is replaced by its mean so paths never leave the window
    let pot = Potential::Field { field: &field, shape: &shape, exterior_mean: d == 1 };
    let origin = vec![0.0; d];
    let mut est = Vec::new();
    for (i, &t) in run.cfg.t_ladder.clone().iter().enumerate() {
        if run.over_budget() {
            break;
        }
        let p = FkParams::new(t, run.cfg.mc.n_paths, run.cfg.mc.dt, run.seed(1 + i as u64));
        let e = fk::estimate_u(&m, &pot, &origin, &p)?;
        if e.window_exits > 0 {
            run.notes.push(format!("t = {t}: {} paths left the field window (clamped)", e.window_exits));
        }
        est.push(e);
    }
    let p = run.path("quenched.csv");
    fk::write_estimates(&p, &est)?;
    let c = constant_set(run)?;
    write_envelope(run, &c)?;
    let series: Vec<(f64, f64, f64)> =
        est.iter().filter(|e| e.value > 0.0 && e.t > 1.0).map(|e| (e.t, e.value.ln(), e.stderr / e.value)).collect();
    match asymptotics::compare_series(&series, &c) {
        Ok(r) => {
            run.notes.push(format!("envelope comparison: {:?}", r.verdict));
            let rows: Vec<CompareRow> =
                r.points.iter().map(|p| CompareRow { t: p.t, ratio: p.ratio, stderr: p.stderr, distance: p.distance }).collect();
            run.write_rows("quenched_compare.csv", &rows)?;
        }
        Err(e) => run.notes.push(format!("envelope comparison skipped: {e}")),
    }
    Ok(())
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

pub fn annealed(run: &mut Run) -> Result<()> {
    let m = run.cfg.model()?;
    let shape = run.cfg.shape()?;
    let regime = run.cfg.regime()?;
    let c = constant_set(run)?;
    let constant = c.annealed().unwrap_or(f64::NAN);
    let origin = vec![0.0; m.dim];
    let mut est = Vec::new();
    let mut rows = Vec::new();
    for (i, &t) in run.cfg.t_ladder.clone().iter().enumerate() {
        if run.over_budget() {
            break;
        }
        let p = FkParams::new(t, run.cfg.mc.n_paths, run.cfg.mc.dt, run.seed(i as u64));
        let e = fk::annealed_u(&m, &shape, run.cfg.rho, &origin, &p, run.cfg.annealed_mode)?;
        let rate = regime.annealed_rate(t);
        rows.push(AnnealedRow {
            t,
            value: e.value,
            stderr: e.stderr,
            scaled: -e.value.ln() / rate,
            scaled_stderr: e.stderr / e.value / rate,
            constant,
        });
        est.push(e);
    }
    run.write_rows("annealed.csv", &rows)?;
    let p = run.path("annealed_estimates.csv");
    fk::write_estimates(&p, &est)
}

#[derive(Serialize)]
struct BoundRow {
    config: usize,
    kind: &'static str,
    t: f64,
    radius: f64,
    u: f64,
    u_stderr: f64,
    bound: f64,
    holds: bool,
}

pub fn bounds(run: &mut Run) -> Result<()> {
    let m = run.cfg.model()?;
    let shape = run.cfg.shape()?;
    let b = run.cfg.bounds.clone();
    let ladder = run.cfg.t_ladder.clone();
    let mut rows = Vec::new();
    for i in 0..b.n_configs {
        if run.over_budget() {
            break;
        }
        let t = ladder[i % ladder.len()];
        let field = sample_field(m.dim, run.cfg.rho, run.cfg.mc.field_half_width, run.seed(2 * i as u64))?;
        let pot = Potential::field(&field, &shape);
        let bp = BoundParams {
            delta: b.delta,
            a: b.a,
            h: run.cfg.spectral.h0,
            n_paths: b.n_paths,
            dt: run.cfg.mc.dt,
            seed: run.seed(2 * i as u64 + 1),
        };
        let up = fk::upper_decomposition(&m, &pot, t, b.radius, &bp)?;
        let lo = fk::lower_bound_check(&m, &pot, t, b.radius, b.inner_radius, &bp)?;
        for (kind, u, bound, holds) in [("upper", &up.u, up.bound, up.holds), ("lower", &lo.u, lo.bound, lo.holds)] {
            if !holds {
                run.failures.push(format!("{kind} bound violated in configuration {i} (t = {t})"));
            }
            rows.push(BoundRow { config: i, kind, t, radius: b.radius, u: u.value, u_stderr: u.stderr, bound, holds });
        }
    }
    run.write_rows("bounds.csv", &rows)
}

pub fn acceptance(run: &mut Run, only: &[String]) -> Result<()> {
    let seed = run.cfg.seed;
    let out = run.out.clone();
    let outcomes = if only.is_empty() {
        acceptance::run_all(seed, &out, |o| println!("{o}"))?
    } else {
        let mut v = Vec::new();
        for name in only {
            let o = acceptance::run_one(name, seed, &out)?;
            println!("{o}");
            v.push(o);
        }
        v
    };
    for o in &outcomes {
        for a in &o.artifacts {
            run.artifacts.push(a.clone());
        }
        if !o.pass {
            run.failures.push(format!("{}: {}", o.criterion, o.detail));
        }
    }
    if only.is_empty() {
        run.artifacts.push(out.join("acceptance_summary.csv"));
        // the rerun copies are compared, not published
        let rerun = out.join("rerun");
        if rerun.is_dir() {
            std::fs::remove_dir_all(rerun)?;
        }
    }
    Ok(())
}

/// Default output directory of a subcommand.
pub fn default_out(subcommand: &str) -> PathBuf {
    Path::new("runs").join(subcommand)
}
