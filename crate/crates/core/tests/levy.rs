use anderson_lab::levy::{self, density_at_zero, sample_path, uniform_grid, LevyModel};
use anderson_lab::rng;
use anderson_lab::stats::MeanVar;

/// Frozen high-precision values of ∫(1−cos⟨ξ,z⟩)ρ(|z|)dz (independent
/// arbitrary-precision quadrature).
#[test]
fn tempered_psi_matches_frozen_quadrature() {
    let m = LevyModel::tempered(1, 1.0, 1.0, 1.0).unwrap();
    for (k, want) in [
        (0.5, 0.608_576_731_626_669_5),
        (1.0, 1.819_323_400_120_229_4),
        (2.0, 4.653_963_326_120_48),
        (5.0, 14.658_688_309_045_788),
    ] {
        let got = m.psi(&[k]).unwrap();
        assert!((got - want).abs() < 1e-9 * want, "k={k}: {got} vs {want}");
        assert_eq!(got, m.psi(&[-k]).unwrap());
    }
    let m2 = LevyModel::tempered(2, 1.2, 0.7, 2.0).unwrap();
    for (k, want) in [(0.5, 1.021_718_031_402_467_6), (3.0, 16.725_648_818_875_036)] {
        let got = m2.psi(&[k, 0.0]).unwrap();
        assert!((got - want).abs() < 1e-8 * want, "k={k}: {got} vs {want}");
        let rotated = m2.psi(&[k / 2f64.sqrt(), -k / 2f64.sqrt()]).unwrap();
        assert!((rotated - got).abs() < 1e-14 * got);
    }
}

fn models() -> Vec<LevyModel> {
    vec![
        LevyModel::stable(1, 1.0).unwrap(),
        LevyModel::stable(1, 0.7).unwrap(),
        LevyModel::stable(2, 1.5).unwrap(),
        // ε = 10⁻² keeps the jump count per draw small; the Gaussian
        // replacement error ~ ξ⁴ε^{4−α}/36 is far below the MC noise here
        LevyModel::tempered(1, 1.0, 1.0, 1.0).unwrap().with_cutoff(1e-2),
        LevyModel::tempered(2, 0.8, f64::INFINITY, 1.0).unwrap().with_cutoff(1e-2),
    ]
}

/// Empirical characteristic function at a moderate budget; the 10⁶-sample
/// version runs in the acceptance suite.
#[test]
fn characteristic_function_and_symmetry() {
    for (i, m) in models().iter().enumerate() {
        let s = m.sampler().unwrap();
        let dt = 0.5;
        let draws = rng::par_trials(100 + i as u64, 100_000, |r, _| s.sample_increment(dt, r));
        for k in [0.5, 1.0, 2.0] {
            let mut xi = vec![0.0; m.dim];
            xi[0] = k;
            let re: Vec<f64> = draws.iter().map(|z| (k * z[0]).cos()).collect();
            let im: Vec<f64> = draws.iter().map(|z| (k * z[0]).sin()).collect();
            let re = MeanVar::from_slice(&re);
            let im = MeanVar::from_slice(&im);
            let want = (-dt * m.psi(&xi).unwrap()).exp();
            assert!((re.mean - want).abs() < 4.0 * re.stderr(), "model {i} k={k}: {} vs {want}", re.mean);
            assert!(im.mean.abs() < 4.0 * im.stderr(), "model {i} k={k}: odd part {}", im.mean);
        }
        // sign-flip statistic: P(Z₁ > 0) = 1/2
        let pos: Vec<f64> = draws.iter().map(|z| f64::from(u8::from(z[0] > 0.0))).collect();
        let pos = MeanVar::from_slice(&pos);
        assert!((pos.mean - 0.5).abs() < 4.0 * pos.stderr());
    }
}

#[test]
fn tempered_variance_identity() {
    let m = LevyModel::tempered(1, 1.0, 1.0, 1.0).unwrap().with_cutoff(1e-2);
    let var = m.second_moment().unwrap();
    let grid = uniform_grid(1.0, 0.1);
    let s = m.sampler().unwrap();
    let sq: Vec<f64> = rng::par_trials(7, 40_000, |r, _| {
        let mut z = [0.0];
        for w in grid.windows(2) {
            s.add_increment(w[1] - w[0], r, &mut z);
        }
        z[0] * z[0]
    });
    let mv = MeanVar::from_slice(&sq);
    assert!((mv.mean - var).abs() < 4.0 * mv.stderr(), "{} vs {var}", mv.mean);
}

#[test]
fn increments_uncorrelated() {
    let m = LevyModel::tempered(1, 1.5, 1.0, 1.0).unwrap().with_cutoff(1e-2);
    let grid = uniform_grid(2.0, 0.25);
    let prods: Vec<f64> = (0..20_000u64)
        .map(|seed| {
            let p = sample_path(&m, &[0.0], &grid, seed).unwrap();
            let a = p.position(1)[0] - p.position(0)[0];
            let b = p.position(2)[0] - p.position(1)[0];
            a * b
        })
        .collect();
    let mv = MeanVar::from_slice(&prods);
    assert!(mv.mean.abs() < 3.0 * mv.stderr());
}

#[test]
fn stable_exit_self_similarity() {
    // (t, R) ↦ (λt, λ^{1/α}R) leaves ℙ(τ ≤ t) invariant when dt scales too
    let m = LevyModel::stable(1, 1.0).unwrap();
    let a = levy::exit_prob(&m, 1.0, 0.5, 40_000, 0.01, 11).unwrap();
    let b = levy::exit_prob(&m, 4.0, 2.0, 40_000, 0.04, 12).unwrap();
    let joint = (a.stderr.powi(2) + b.stderr.powi(2)).sqrt();
    assert!((a.value - b.value).abs() < 4.0 * joint);
}

#[test]
fn exit_prob_monotone() {
    let m = LevyModel::stable(2, 1.5).unwrap();
    let small = levy::exit_prob(&m, 1.0, 1.0, 20_000, 0.02, 1).unwrap();
    let large = levy::exit_prob(&m, 2.0, 1.0, 20_000, 0.02, 1).unwrap();
    let longer = levy::exit_prob(&m, 1.0, 2.0, 20_000, 0.02, 1).unwrap();
    assert!(large.value <= small.value + 4.0 * small.stderr.hypot(large.stderr));
    assert!(longer.value >= small.value - 4.0 * small.stderr.hypot(longer.stderr));
}

#[test]
fn density_monotone_in_time() {
    for m in models() {
        for t in [0.2, 1.0, 3.0] {
            assert!(density_at_zero(&m, 2.0 * t).unwrap() <= density_at_zero(&m, t).unwrap());
        }
    }
}
