use anderson_lab::field::{sample_field, PoissonField, ShapeFunction};
use anderson_lab::fk::*;
use anderson_lab::geometry::Domain;
use anderson_lab::levy::LevyModel;
use anderson_lab::spectral::{self, Generator};

fn cauchy() -> LevyModel {
    LevyModel::stable(1, 1.0).unwrap()
}

fn heavy() -> ShapeFunction {
    ShapeFunction::new(1.0, 0.5, 1).unwrap()
}

#[test]
fn trivial_potentials_are_exact() {
    let m = LevyModel::stable(2, 1.2).unwrap();
    let x = [0.3, -0.1];
    let e = estimate_u(&m, &Potential::Zero, &x, &FkParams::new(3.0, 500, 0.05, 1)).unwrap();
    assert_eq!((e.value, e.stderr, e.window_exits), (1.0, 0.0, 0));
    let c = estimate_u(&m, &Potential::Constant(0.4), &x, &FkParams::new(3.0, 500, 0.05, 1)).unwrap();
    assert!((c.value - (-1.2f64).exp()).abs() < 1e-12);
}

#[test]
fn matches_matrix_exponential_on_small_instances() {
    let shape = heavy();
    let models = [cauchy(), LevyModel::stable(1, 1.5).unwrap(), LevyModel::tempered(1, 0.8, 1.0, 1.0).unwrap().with_cutoff(1e-2)];
    for (i, m) in models.iter().enumerate() {
        let f = sample_field(1, 0.3, 30.0, 10 + i as u64).unwrap();
        let pot = Potential::field(&f, &shape);
        let c = compare_with_oracle(m, &pot, &Domain::centered_ball(1, 2.0), 0.1, &FkParams::new(1.0, 20000, 0.01, i as u64))
            .unwrap();
        assert!(c.agrees, "model {i}: {c:?}");
        assert!(c.mc.value > 0.0 && c.mc.value <= 1.0);
    }
}

#[test]
fn huge_domain_matches_unkilled() {
    let shape = heavy();
    let f = sample_field(1, 0.5, 40.0, 3).unwrap();
    let pot = Potential::Field { field: &f, shape: &shape, exterior_mean: true };
    let p = FkParams::new(1.0, 20000, 0.02, 5);
    let free = estimate_u(&cauchy(), &pot, &[0.0], &p).unwrap();
    let q = FkParams { seed: 6, ..p };
    let killed = estimate_u_killed(&cauchy(), &pot, &[0.0], &Domain::centered_ball(1, 1e4), &q).unwrap();
    let joint = (free.stderr.powi(2) + killed.stderr.powi(2)).sqrt();
    assert!((free.value - killed.value).abs() <= 4.0 * joint, "{free:?} {killed:?}");
}

#[test]
fn short_times_tend_to_one() {
    let shape = heavy();
    let f = sample_field(1, 1.0, 20.0, 4).unwrap();
    let pot = Potential::field(&f, &shape);
    let mut prev = 0.0;
    for t in [1e-1, 1e-2, 1e-3] {
        let e = estimate_u(&cauchy(), &pot, &[0.0], &FkParams::new(t, 2000, t / 10.0, 1)).unwrap();
        assert!(e.value > prev && e.value <= 1.0);
        prev = e.value;
    }
    assert!(prev > 0.99);
    let a = annealed_u(&cauchy(), &shape, 1.0, &[0.0], &FkParams::new(1e-3, 500, 1e-4, 1), AnnealedMode::Campbell { bin: 0.05 })
        .unwrap();
    assert!(a.value > 0.98);
}

#[test]
fn averaged_killed_solution_below_principal_decay() {
    // (1/|D|)∫_D u_D(t,x)dx ≤ e^{−tλ₁(D)}
    let shape = heavy();
    let m = cauchy();
    let f = sample_field(1, 0.5, 30.0, 8).unwrap();
    let pot = Potential::field(&f, &shape);
    let d = Domain::centered_ball(1, 2.0);
    let t = 1.5;
    let n = 16;
    let mut sum = 0.0;
    let mut var = 0.0;
    for k in 0..n {
        let x = -2.0 + 4.0 * (k as f64 + 0.5) / n as f64;
        let e = estimate_u_killed(&m, &pot, &[x], &d, &FkParams::new(t, 4000, 0.01, k)).unwrap();
        sum += e.value / n as f64;
        var += (e.stderr / n as f64).powi(2);
    }
    let (res, _) = spectral::eigen_ladder(&Generator::Levy(m), &d, 0.1, |x| pot.eval(x)).unwrap();
    let ex = res.extrapolated.unwrap();
    let lambda = ex.value - ex.err_est;
    let rhs = (-t * lambda).exp();
    assert!(sum <= rhs + 4.0 * var.sqrt(), "{sum} vs {rhs}");
    assert!(sum > 0.2 * rhs, "{sum} vs {rhs}");
}

#[test]
fn annealed_modes_agree() {
    let shape = heavy();
    let m = cauchy();
    let campbell =
        annealed_u(&m, &shape, 1.0, &[0.0], &FkParams::new(1.0, 20000, 0.01, 1), AnnealedMode::Campbell { bin: 0.05 }).unwrap();
    let two = annealed_u(
        &m,
        &shape,
        1.0,
        &[0.0],
        &FkParams::new(1.0, 50, 0.01, 2),
        AnnealedMode::TwoLevel { n_fields: 200, half_width: 100.0, exterior_mean: true },
    )
    .unwrap();
    let joint = (campbell.stderr.powi(2) + two.stderr.powi(2)).sqrt();
    assert!((campbell.value - two.value).abs() <= 4.0 * joint, "{campbell:?} {two:?}");
    assert_eq!(two.window_exits, 0);
    assert_eq!(two.n_paths, 200 * 50);
    assert!(campbell.value > 0.0 && campbell.value < 1.0);
}

#[test]
fn annealed_requires_supported_dimension() {
    let shape = ShapeFunction::new(1.0, 0.5, 2).unwrap();
    let m = LevyModel::stable(2, 1.0).unwrap();
    let r = annealed_u(&m, &shape, 1.0, &[0.0, 0.0], &FkParams::new(1.0, 10, 0.1, 1), AnnealedMode::Campbell { bin: 0.05 });
    assert!(r.is_err());
}

#[test]
fn decreasing_in_time() {
    let shape = heavy();
    let f = sample_field(1, 1.0, 40.0, 11).unwrap();
    let pot = Potential::Field { field: &f, shape: &shape, exterior_mean: true };
    let est: Vec<FKEstimate> = [0.5, 1.0, 2.0, 4.0]
        .iter()
        .map(|&t| estimate_u(&cauchy(), &pot, &[0.0], &FkParams::new(t, 3000, 0.01, 9)).unwrap())
        .collect();
    for w in est.windows(2) {
        assert!(w[1].value < w[0].value, "{est:?}");
    }
}

#[test]
fn step_refinement_is_consistent() {
    let shape = heavy();
    let f = sample_field(1, 1.0, 40.0, 12).unwrap();
    let pot = Potential::field(&f, &shape);
    for rule in [Rule::LeftEndpoint, Rule::Trapezoid] {
        let est = |dt: f64, seed: u64| {
            let p = FkParams { rule, ..FkParams::new(1.0, 20000, dt, seed) };
            estimate_u(&cauchy(), &pot, &[0.0], &p).unwrap()
        };
        let (a, b) = (est(0.02, 1), est(0.01, 2));
        let joint = (a.stderr.powi(2) + b.stderr.powi(2)).sqrt();
        // O(dt) budget: dt per unit time in value units
        assert!((a.value - b.value).abs() <= 4.0 * joint + 0.02, "{rule:?}: {a:?} {b:?}");
    }
}

#[test]
fn seeded_runs_are_bit_identical_across_thread_counts() {
    let shape = heavy();
    let f = sample_field(1, 1.0, 40.0, 13).unwrap();
    let pot = Potential::field(&f, &shape);
    let p = FkParams::new(1.0, 1500, 0.01, 77);
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            (
                estimate_u(&cauchy(), &pot, &[0.0], &p).unwrap(),
                annealed_u(&cauchy(), &shape, 1.0, &[0.0], &p, AnnealedMode::Campbell { bin: 0.05 }).unwrap(),
            )
        })
    };
    assert_eq!(run(1), run(3));
}

#[test]
fn window_exits_are_clamped_and_counted() {
    let shape = heavy();
    let f = PoissonField::empty(1, 1.0, 4.0);
    let pot = Potential::field(&f, &shape);
    let e = estimate_u(&cauchy(), &pot, &[0.0], &FkParams::new(5.0, 2000, 0.05, 1)).unwrap();
    assert!(e.window_exits > 100);
    assert_eq!(e.value, 1.0);
}

#[test]
fn estimate_log_layout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("u.csv");
    let m = LevyModel::stable(2, 1.0).unwrap();
    let e = estimate_u(&m, &Potential::Constant(1.0), &[0.5, -1.0], &FkParams::new(1.0, 10, 0.1, 3)).unwrap();
    write_estimates(&path, &[e]).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,x,value,stderr,n_paths,dt,seed,mode"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[1], "0.5;-1.0");
    assert_eq!(row[4], "10");
    assert_eq!(row[7], "left");
}

#[test]
fn upper_bound_with_zero_potential_and_holder_continuity() {
    let m = cauchy();
    let bp = BoundParams { n_paths: 4000, seed: 3, ..Default::default() };
    let r = upper_decomposition(&m, &Potential::Zero, 1.0, 2.0, &bp).unwrap();
    assert!(r.holds, "{r:?}");
    let op = spectral::assemble(&Generator::Levy(m), &Domain::centered_ball(1, 2.0), 0.05, &[]).unwrap();
    let free = spectral::principal_eigenvalue(&op).unwrap();
    assert!(r.lambda_v <= free.lambda1 && r.lambda_v > 0.9 * free.lambda1);
    assert_eq!(r.lambda_v, r.lambda_av);

    let shape = heavy();
    let f = sample_field(1, 0.5, 30.0, 14).unwrap();
    let pot = Potential::field(&f, &shape);
    let t = 2.0;
    let mut branch2 = Vec::new();
    for a in [1.01, 2.0, 10.0] {
        let r = upper_decomposition(&m, &pot, t, 3.0, &BoundParams { a, ..bp }).unwrap();
        assert!(r.holds, "a={a}: {r:?}");
        assert!(r.branch2.is_finite() && r.branch2 > 0.0);
        branch2.push(r);
    }
    // a → 1⁺: branch 2 decays like p(δ)|D|e^{−(t−δ)λ_V}, the branch-1 rate
    let r = &branch2[0];
    let like_branch1 = r.p_delta * r.volume * (-(t - r.delta) * r.lambda_v).exp();
    assert!((r.branch2.ln() - like_branch1.ln()).abs() < 0.05 * (t * r.lambda_v).max(1.0), "{r:?}");
}

#[test]
fn lower_bound_with_zero_potential() {
    let m = cauchy();
    for a in [1.01, 2.0] {
        let bp = BoundParams { a, n_paths: 2000, seed: 5, ..Default::default() };
        let r = lower_bound_check(&m, &Potential::Zero, 1.0, 3.0, 1.0, &bp).unwrap();
        assert!(r.holds && r.bound < 1.0, "{r:?}");
        // the small-time factor is the survival probability up to δ
        assert!(r.small_time.value <= 1.0 && r.small_time.value > 0.9);
        assert!(r.inf_killed_density > 0.0);
    }
}

#[test]
fn lower_bound_prefactor_nonincreasing_in_inner_volume() {
    let base = LowerTerms {
        t: 2.0,
        a: 2.0,
        p_delta: 3.0,
        p_t_minus_delta: 0.2,
        inner_volume: 1.0,
        small_time: 1.1,
        inf_killed_density: 0.05,
        lambda: 1.5,
    };
    let vals: Vec<f64> = [0.5, 1.0, 2.0, 4.0].iter().map(|&v| lower_bound_log(&LowerTerms { inner_volume: v, ..base })).collect();
    assert!(vals.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn bounds_sandwich_a_few_random_configurations() {
    let shape = heavy();
    for seed in 0..3u64 {
        let m = if seed % 2 == 0 { cauchy() } else { LevyModel::stable(1, 1.5).unwrap() };
        let f = sample_field(1, 0.5, 30.0, 100 + seed).unwrap();
        let pot = Potential::field(&f, &shape);
        let bp = BoundParams { n_paths: 2000, seed, ..Default::default() };
        let t = 1.0 + seed as f64;
        let up = upper_decomposition(&m, &pot, t, 3.0, &bp).unwrap();
        let lo = lower_bound_check(&m, &pot, t, 3.0, 1.0, &bp).unwrap();
        assert!(up.holds && lo.holds, "{up:?} {lo:?}");
        assert!(lo.bound <= up.bound);
    }
}

#[test]
fn killed_kernel_is_subprobability() {
    let g = Generator::Levy(cauchy());
    let d = Domain::centered_ball(1, 2.0);
    let (op, row) = killed_kernel_from_center(&g, &d, 0.1, 0.5).unwrap();
    let mass: f64 = row.iter().sum::<f64>() * op.cell_volume();
    assert!(mass > 0.0 && mass < 1.0);
    assert!(row.iter().all(|&v| v > 0.0));
}
