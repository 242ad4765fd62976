use critrange::asymptotics::normalizer_series_quadrature;
use critrange::killed_bm::{survival_probability, transition_density, IntervalSpec};
use critrange::limit_laws::{endpoint_density, min_cdf, sample_limit_summary};
use critrange::mc_engine::{conditional_ecdf, ess, run_ensemble};
use critrange::quad::{integrate, QuadCtl};
use critrange::stats::{equiprobable_edges, ks_distance, tv_binned};
use critrange::{EnsembleConfig, Error, Functional, ModelParams, PathRng, RefinementMode, SeriesCtl};

fn ctl() -> SeriesCtl {
    SeriesCtl::default()
}

fn cfg(t: f64, n: usize, seed: u64) -> EnsembleConfig {
    EnsembleConfig::new(ModelParams::new(1.0, t).unwrap(), n, 0.01, RefinementMode::Bridge, seed)
}

#[test]
fn survival_is_integrated_density() {
    let spec = IntervalSpec::new(1.5).unwrap();
    for t in [0.05, 0.3, 2.0] {
        let q = integrate(
            |y| transition_density(0.4, y, spec, t, ctl()),
            &[0.0, 0.4, 1.5],
            QuadCtl::default(),
        )
        .unwrap();
        let s = survival_probability(0.4, spec, t, ctl()).unwrap();
        assert!((q.value - s).abs() < 1e-9, "t={t}: {} vs {s}", q.value);
    }
}

#[test]
fn mean_weight_matches_quadrature() {
    let t = 5.0;
    let e = run_ensemble(&cfg(t, 40_000, 11)).unwrap();
    let oracle = normalizer_series_quadrature(ModelParams::new(1.0, t).unwrap(), ctl())
        .unwrap()
        .bracket;
    let z = (e.mean_weight() - oracle) / e.standard_error();
    assert!(z.abs() < 4.0, "z = {z}");
}

#[test]
fn ess_follows_second_moment() {
    // E[w^2] / E[w]^2 grows like t/4 for large t.
    let t = 40.0;
    let n = 20_000;
    let e = run_ensemble(&cfg(t, n, 5)).unwrap();
    let target = 4.0 * n as f64 / t;
    let got = ess(&e);
    assert!(got > target / 2.0 && got < target * 2.0, "ess {got} vs {target}");
}

#[test]
fn conditioned_minimum_is_near_exponential() {
    let e = run_ensemble(&cfg(50.0, 40_000, 9)).unwrap();
    let ecdf = conditional_ecdf(&e, Functional::NegMin).unwrap();
    let ks = ks_distance(&ecdf, |x| min_cdf(x, 1.0));
    assert!(ks < 0.06, "{ks}");
}

#[test]
fn too_few_effective_paths_is_reported() {
    let e = run_ensemble(&EnsembleConfig::new(
        ModelParams::new(1.0, 400.0).unwrap(),
        1000,
        0.05,
        RefinementMode::Bridge,
        1,
    ))
    .unwrap();
    assert!(matches!(
        conditional_ecdf(&e, Functional::MaxScaled),
        Err(Error::DegenerateWeights { .. })
    ));
}

#[test]
fn exact_sampler_matches_endpoint_density() {
    for (u, h) in [(1.0, 1.0), (2.0, 0.5)] {
        let density = |x: f64| endpoint_density(x, u, h, ctl());
        let edges = equiprobable_edges(density, -40.0 / h, 10.0 * f64::sqrt(u) + 1.0, 20, 2000).unwrap();
        let draws: Vec<(f64, f64)> = (0..100_000u64)
            .map(|i| {
                let mut rng = PathRng::new(3, i);
                (sample_limit_summary(&mut rng, u, u / 4.0, h).unwrap().endpoint, 1.0)
            })
            .collect();
        let tv = tv_binned(&draws, density, &edges).unwrap();
        assert!(tv < 0.015, "u={u} h={h}: {tv}");
    }
}
