use anderson_lab::field::{
    self, campbell_laplace, campbell_laplace_box, localization_lattice, localization_window, occupancy_flags, sample_field,
    sample_tilted_field, sup_potential_check, PoissonField, ShapeFunction, TiltParams,
};
use anderson_lab::geometry::norm;
use anderson_lab::rng;
use anderson_lab::stats::{self, chi_square_uniform, MeanVar};

#[test]
fn count_is_poisson() {
    // E[count] = ρ(2L)^d = 20 and Var = 20
    let counts: Vec<f64> = (0..4000).map(|s| sample_field(1, 1.0, 10.0, s).unwrap().len() as f64).collect();
    let mv = MeanVar::from_slice(&counts);
    assert!((mv.mean - 20.0).abs() < 4.0 * mv.stderr());
    assert!((mv.variance() / 20.0 - 1.0).abs() < 0.1);
}

#[test]
fn placements_are_uniform() {
    let mut rejections = 0;
    for seed in 0..200u64 {
        let f = sample_field(1, 5.0, 10.0, seed).unwrap();
        let mut counts = [0u64; 20];
        for p in f.iter() {
            counts[(((p[0] + 10.0) / 1.0) as usize).min(19)] += 1;
        }
        if chi_square_uniform(&counts) < 1e-3 {
            rejections += 1;
        }
    }
    // each test rejects w.p. 10⁻³; two or more of 200 is already unlikely
    assert!(rejections <= 1, "{rejections} rejections");
}

#[test]
fn csv_round_trip_is_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    for d in [1, 2] {
        let f = sample_field(d, 0.7, 6.0, 31).unwrap();
        f.write(dir.path(), &format!("field{d}")).unwrap();
        let g = PoissonField::read(dir.path(), &format!("field{d}")).unwrap();
        assert_eq!(g.points, f.points);
        assert_eq!((g.rho, g.half_width, g.seed, g.dim), (f.rho, f.half_width, f.seed, f.dim));
        let header = std::fs::read_to_string(dir.path().join(format!("field{d}.csv"))).unwrap();
        assert!(header.starts_with(if d == 1 { "x1\n" } else { "x1,x2\n" }));
    }
}

#[test]
fn campbell_mean() {
    for (beta, k) in [(1.0, 1.0), (f64::INFINITY, 2.0), (3.0, 0.5)] {
        let shape = ShapeFunction::new(k, beta, 1).unwrap();
        let l = 200.0;
        let want = shape.box_integral(|p| p, l).unwrap();
        let vals: Vec<f64> = rng::par_trials(5, 10_000, |_, i| {
            sample_field(1, 1.0, l, 1000 + i as u64).unwrap().potential(&shape, &[0.0]).unwrap()
        });
        let mv = MeanVar::from_slice(&vals);
        assert!((mv.mean - want).abs() < 4.0 * mv.stderr(), "β={beta}: {} vs {want}", mv.mean);
        // the full-space mean differs only by the certified tail
        assert!((shape.integral() - want - shape.tail_mass(l)).abs() < 1e-9);
    }
}

#[test]
fn campbell_laplace_monte_carlo() {
    let shape = ShapeFunction::new(1.0, 1.0, 2).unwrap();
    let l = 8.0;
    let t = 1.0;
    let vals: Vec<f64> = (0..20_000u64)
        .map(|s| (-t * sample_field(2, 1.0, l, s).unwrap().potential(&shape, &[0.0, 0.0]).unwrap()).exp())
        .collect();
    let mv = MeanVar::from_slice(&vals);
    let want = campbell_laplace_box(&shape, 1.0, t, l).unwrap().exp();
    assert!((mv.mean - want).abs() < 4.0 * mv.stderr(), "{} vs {want}", mv.mean);
}

#[test]
fn laplace_functional_decreasing() {
    let shape = ShapeFunction::new(1.0, 0.5, 1).unwrap();
    let mut prev = 0.0;
    for t in [0.1, 0.5, 1.0, 5.0, 50.0, 1e3] {
        let h = campbell_laplace(&shape, 1.0, t).unwrap();
        assert!(h < prev);
        prev = h;
    }
}

#[test]
fn sup_potential_bound_d1() {
    let shape = ShapeFunction::new(1.0, 1.0, 1).unwrap();
    let mut violations = 0;
    for seed in 0..100u64 {
        let f = sample_field(1, 1.0, 400.0, seed).unwrap();
        let c = sup_potential_check(&f, &shape, 100.0, 0.05).unwrap();
        if !c.holds {
            violations += 1;
        }
    }
    assert_eq!(violations, 0);
}

#[test]
fn potential_monotone_under_removal() {
    let shape = ShapeFunction::new(1.0, 0.5, 2).unwrap();
    let f = sample_field(2, 1.0, 10.0, 3).unwrap();
    let mut g = f.clone();
    g.points.truncate(g.points.len() - 2 * (g.len() / 3));
    for x in [[0.0, 0.0], [1.5, -2.0], [4.9, 4.9]] {
        assert!(g.potential(&shape, &x).unwrap() <= f.potential(&shape, &x).unwrap());
    }
}

#[test]
fn tail_bound_is_sound() {
    // Extending the box from L to L′ adds an independent annulus field whose
    // contribution has mean ≤ tail_bound; Chebyshev at 10 sd allows ≤ 1% excess.
    let shape = ShapeFunction::new(1.0, 1.0, 1).unwrap();
    let (l, l_obs, l_big) = (40.0, 10.0, 400.0);
    let fluct =
        (shape.radial_integral(|p| p * p, f64::INFINITY).unwrap() - shape.radial_integral(|p| p * p, l - l_obs).unwrap()).sqrt();
    let mut excess = 0;
    for seed in 0..500u64 {
        let f = sample_field(1, 1.0, l, seed).unwrap().with_observation(l_obs).unwrap();
        let annulus = sample_field(1, 1.0, l_big, 10_000 + seed).unwrap();
        let mut big = f.clone();
        big.half_width = l_big;
        big.points.extend(annulus.iter().filter(|p| p[0].abs() > l).flatten());
        let x = [l_obs * (2.0 * (seed as f64 / 500.0) - 1.0)];
        let diff = big.potential(&shape, &x).unwrap() - f.potential(&shape, &x).unwrap();
        assert!(diff >= 0.0);
        if diff > f.tail_bound(&shape) + 10.0 * fluct {
            excess += 1;
        }
    }
    assert!(excess <= 5, "{excess}");
}

#[test]
fn tilted_intensity_on_shells() {
    let shape = ShapeFunction::new(1.0, 0.5, 1).unwrap();
    let tilt = TiltParams { rho0: 4.0, ..TiltParams::identity(10.0) };
    let shells = [(0.0, 1.0), (1.0, 2.0), (2.0, 4.0), (4.0, 8.0), (8.0, 30.0)];
    let mut counts = vec![Vec::new(); shells.len()];
    for seed in 0..3000u64 {
        let f = sample_tilted_field(1, 1.0, &tilt, &shape, 30.0, seed).unwrap();
        let mut c = vec![0.0; shells.len()];
        for p in f.iter() {
            let r = norm(p);
            if let Some(k) = shells.iter().position(|&(a, b)| r >= a && r < b) {
                c[k] += 1.0;
            }
        }
        for (acc, v) in counts.iter_mut().zip(c) {
            acc.push(v);
        }
    }
    for (&(a, b), c) in shells.iter().zip(&counts) {
        let mv = MeanVar::from_slice(c);
        let want =
            shape.radial_integral(|p| (-4.0 * p).exp(), b).unwrap() - shape.radial_integral(|p| (-4.0 * p).exp(), a).unwrap();
        assert!((mv.mean - want).abs() < 4.0 * mv.stderr(), "shell [{a},{b}): {} vs {want}", mv.mean);
    }
}

#[test]
fn tilted_mean_monte_carlo() {
    let shape = ShapeFunction::new(1.0, 0.5, 1).unwrap();
    let tilt = TiltParams::new(&shape, 1.0, 1e3).unwrap();
    let l = 400.0;
    let vals: Vec<f64> = (0..4000u64)
        .map(|s| sample_tilted_field(1, 1.0, &tilt, &shape, l, s).unwrap().potential(&shape, &[0.0]).unwrap())
        .collect();
    let mv = MeanVar::from_slice(&vals);
    let want = field::tilted_mean_box(&shape, 1.0, tilt.rho0, l).unwrap();
    assert!((mv.mean - want).abs() < 4.0 * mv.stderr(), "{} vs {want}", mv.mean);
}

#[test]
fn vacancy_frequency_trend() {
    // frequency of "every lattice center is occupied" should fall with r once
    // the window grows like M_{κ,η}(r)
    let (eta, kappa) = (0.95, 1.01);
    let rs = [1.0, 1.5, 2.0];
    let mut log_freq = Vec::new();
    for (j, &r) in rs.iter().enumerate() {
        let w = localization_window(1, 1.0, r, eta, kappa);
        let centers = localization_lattice(1, r, eta, w);
        let n = 2000u64;
        let hits = (0..n)
            .filter(|&s| {
                let f = sample_field(1, 1.0, w + 2.0 * r, rng::derive_seed(s, j as u64)).unwrap();
                occupancy_flags(&f, &centers, (1.0 + eta) * r).iter().all(|&o| o)
            })
            .count();
        log_freq.push(((hits as f64 + 0.5) / n as f64).ln());
    }
    let (slope, _) = stats::linear_fit(&rs, &log_freq);
    assert!(slope < 0.0, "log-frequency slope {slope} ({log_freq:?})");
}
