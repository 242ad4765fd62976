//! Importance sampling over driftless Brownian paths.
//!
//! A run at drift `h` and horizon `t` simulates standard Brownian motion on
//! `[0, th^2]` (the unit-drift reduction) and weights each path by
//! `w = exp(X - (M - m)) <= 1`. The mean weight estimates
//! `e^{h^2 t/2} E^h[exp(-h C_t)]`; self-normalized weighted averages estimate
//! expectations under the conditioned law.

use rand_distr::StandardNormal;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::asymptotics::ModelParams;
use crate::error::{domain, Error, Result};
use crate::rng::PathRng;
use crate::stats::{weighted_ecdf, WeightedEcdf};

/// Smallest ensemble accepted by [`run_ensemble`].
pub const MIN_PATHS: usize = 1000;
/// Largest time step accepted, in original time units.
pub const MAX_DT: f64 = 0.05;
/// Conditional estimates need at least this effective sample size.
pub const MIN_ESS: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RefinementMode {
    /// Extremes taken over grid values only.
    Skeleton,
    /// Each step also samples the Brownian bridge maximum and minimum.
    Bridge,
}

impl std::str::FromStr for RefinementMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "skeleton" => Ok(Self::Skeleton),
            "bridge" => Ok(Self::Bridge),
            _ => domain(format!("mode must be skeleton or bridge, got {s:?}")),
        }
    }
}

impl std::fmt::Display for RefinementMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Skeleton => "skeleton",
            Self::Bridge => "bridge",
        })
    }
}

/// A simulated path, summarized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathSample {
    pub t: f64,
    pub dt: f64,
    pub endpoint: f64,
    pub run_min: f64,
    pub run_max: f64,
    /// Grid value at the probe time, if one was requested.
    pub at_probe: Option<f64>,
    pub mode: RefinementMode,
}

impl PathSample {
    pub fn range(&self) -> f64 {
        self.run_max - self.run_min
    }
}

/// Larger exponent means the bridge extreme cannot beat the current record:
/// `exp(-40)` is below the smallest uniform we draw.
const SKIP_EXPONENT: f64 = 40.0;

/// Simulates standard Brownian motion on `[0, t]` with step close to `dt`
/// (`t` is split into `round(t/dt)` equal steps). `probe` asks for the grid
/// value nearest that time.
pub fn sample_path(
    rng: &mut PathRng,
    t: f64,
    dt: f64,
    mode: RefinementMode,
    probe: Option<f64>,
) -> Result<PathSample> {
    if !(t > 0.0) || !(dt > 0.0) || dt > t || !t.is_finite() {
        return domain(format!("need 0 < dt <= t (t={t}, dt={dt})"));
    }
    let n = (t / dt).round().max(1.0) as usize;
    let step = t / n as f64;
    let sd = step.sqrt();
    let probe_at = probe.map(|p| ((p / step).round() as usize).min(n));
    let mut x = 0.0f64;
    let mut hi = 0.0f64;
    let mut lo = 0.0f64;
    let mut at_probe = if probe_at == Some(0) { Some(0.0) } else { None };
    for i in 1..=n {
        let z: f64 = rng.sample(StandardNormal);
        let y = x + sd * z;
        match mode {
            RefinementMode::Skeleton => {
                hi = hi.max(y);
                lo = lo.min(y);
            }
            RefinementMode::Bridge => {
                // Uniforms are drawn only when the bridge extreme can move the
                // record, which keeps the stream layout a function of the path.
                if y >= hi || 2.0 * (hi - x) * (hi - y) / step <= SKIP_EXPONENT {
                    let u = rng.open01();
                    let top = 0.5 * (x + y + ((y - x) * (y - x) - 2.0 * step * u.ln()).sqrt());
                    hi = hi.max(top);
                }
                if y <= lo || 2.0 * (x - lo) * (y - lo) / step <= SKIP_EXPONENT {
                    let u = rng.open01();
                    let bottom = 0.5 * (x + y - ((y - x) * (y - x) - 2.0 * step * u.ln()).sqrt());
                    lo = lo.min(bottom);
                }
            }
        }
        x = y;
        if probe_at == Some(i) {
            at_probe = Some(x);
        }
    }
    Ok(PathSample {
        t,
        dt: step,
        endpoint: x,
        run_min: lo,
        run_max: hi,
        at_probe,
        mode,
    })
}

/// `exp(h (X - M + m))`, in `(0, 1]`.
pub fn girsanov_weight(p: &PathSample, h: f64) -> f64 {
    (h * (p.endpoint - p.run_max + p.run_min)).min(0.0).exp()
}

/// Parameters of an ensemble run. `dt` and `probe_u` are in original time units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnsembleConfig {
    pub params: ModelParams,
    pub n_paths: usize,
    pub dt: f64,
    pub mode: RefinementMode,
    pub seed: u64,
    pub probe_u: f64,
}

impl EnsembleConfig {
    pub fn new(params: ModelParams, n_paths: usize, dt: f64, mode: RefinementMode, seed: u64) -> Self {
        Self {
            params,
            n_paths,
            dt,
            mode,
            seed,
            probe_u: 1.0_f64.min(params.t()),
        }
    }

    pub fn with_probe(mut self, u: f64) -> Self {
        self.probe_u = u;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_paths < MIN_PATHS {
            return domain(format!("need at least {MIN_PATHS} paths, got {}", self.n_paths));
        }
        if !(self.dt > 0.0) || self.dt > MAX_DT {
            return domain(format!("dt must lie in (0, {MAX_DT}], got {}", self.dt));
        }
        if self.dt > self.params.t() {
            return domain(format!("dt {} exceeds the horizon {}", self.dt, self.params.t()));
        }
        if !(self.probe_u >= 0.0) || self.probe_u > self.params.t() {
            return domain(format!("probe time must lie in [0, t], got {}", self.probe_u));
        }
        Ok(())
    }
}

/// One path of an ensemble, in simulation units (unit drift, horizon `th^2`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnsembleEntry {
    pub endpoint: f64,
    pub run_min: f64,
    pub run_max: f64,
    pub at_probe: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnsembleMeta {
    pub seed: u64,
    pub h: f64,
    pub t: f64,
    pub dt: f64,
    pub n_paths: usize,
    pub mode: RefinementMode,
    pub probe_u: f64,
    pub rescaled_time: f64,
    /// Step actually used in simulation units.
    pub sim_dt: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedEnsemble {
    entries: Vec<EnsembleEntry>,
    meta: EnsembleMeta,
}

/// Path functionals, reported in original units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Functional {
    /// `-m_t`
    NegMin,
    /// `M_t / sqrt(t)`
    MaxScaled,
    /// `X_t / sqrt(t)`
    EndpointScaled,
    /// `X_u` at the probe time
    EndpointAtU,
    /// `(M_t - X_t) / sqrt(t)`
    GapScaled,
}

impl Functional {
    pub const ALL: [Functional; 5] = [
        Self::NegMin,
        Self::MaxScaled,
        Self::EndpointScaled,
        Self::EndpointAtU,
        Self::GapScaled,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Self::NegMin => "neg_min",
            Self::MaxScaled => "max_scaled",
            Self::EndpointScaled => "endpoint_scaled",
            Self::EndpointAtU => "endpoint_at_u",
            Self::GapScaled => "gap_scaled",
        }
    }
}

impl std::str::FromStr for Functional {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::Domain(format!("unknown functional {s:?}")))
    }
}

impl WeightedEnsemble {
    pub fn entries(&self) -> &[EnsembleEntry] {
        &self.entries
    }

    pub fn meta(&self) -> &EnsembleMeta {
        &self.meta
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn mean_weight(&self) -> f64 {
        self.entries.iter().map(|e| e.weight).sum::<f64>() / self.len() as f64
    }

    /// Sample standard deviation of the weights.
    pub fn weight_sd(&self) -> f64 {
        let n = self.len() as f64;
        let mean = self.mean_weight();
        let ss: f64 = self.entries.iter().map(|e| (e.weight - mean).powi(2)).sum();
        (ss / (n - 1.0)).sqrt()
    }

    pub fn standard_error(&self) -> f64 {
        self.weight_sd() / (self.len() as f64).sqrt()
    }

    /// Value of `f` for one entry, in original units.
    pub fn value(&self, e: &EnsembleEntry, f: Functional) -> f64 {
        let h = self.meta.h;
        let root = self.meta.rescaled_time.sqrt();
        match f {
            Functional::NegMin => -e.run_min / h,
            Functional::MaxScaled => e.run_max / root,
            Functional::EndpointScaled => e.endpoint / root,
            Functional::EndpointAtU => e.at_probe / h,
            Functional::GapScaled => (e.run_max - e.endpoint) / root,
        }
    }

    /// `(value, weight)` pairs for `f`.
    pub fn points(&self, f: Functional) -> Vec<(f64, f64)> {
        self.entries.iter().map(|e| (self.value(e, f), e.weight)).collect()
    }

    /// Self-normalized estimate of the conditional mean of `f`.
    pub fn weighted_mean(&self, f: Functional) -> Result<f64> {
        self.check_ess()?;
        let (mut num, mut den) = (0.0, 0.0);
        for e in &self.entries {
            num += e.weight * self.value(e, f);
            den += e.weight;
        }
        Ok(num / den)
    }

    fn check_ess(&self) -> Result<()> {
        let ess = ess(self);
        if !(ess >= MIN_ESS) {
            return Err(Error::DegenerateWeights { ess, min: MIN_ESS });
        }
        Ok(())
    }
}

/// Runs `cfg.n_paths` independent paths; path `i` draws from substream `i` of
/// the seed, so the result does not depend on the worker count.
pub fn run_ensemble(cfg: &EnsembleConfig) -> Result<WeightedEnsemble> {
    cfg.validate()?;
    let s = cfg.params.rescaled_time();
    let h2 = cfg.params.h() * cfg.params.h();
    let sim_dt = (cfg.dt * h2).min(s);
    let probe = cfg.probe_u * h2;
    let entries: Vec<EnsembleEntry> = (0..cfg.n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = PathRng::new(cfg.seed, i);
            let p = sample_path(&mut rng, s, sim_dt, cfg.mode, Some(probe))
                .expect("configuration validated above");
            EnsembleEntry {
                endpoint: p.endpoint,
                run_min: p.run_min,
                run_max: p.run_max,
                at_probe: p.at_probe.unwrap_or(f64::NAN),
                weight: girsanov_weight(&p, 1.0),
            }
        })
        .collect();
    let steps = (s / sim_dt).round().max(1.0);
    Ok(WeightedEnsemble {
        entries,
        meta: EnsembleMeta {
            seed: cfg.seed,
            h: cfg.params.h(),
            t: cfg.params.t(),
            dt: cfg.dt,
            n_paths: cfg.n_paths,
            mode: cfg.mode,
            probe_u: cfg.probe_u,
            rescaled_time: s,
            sim_dt: s / steps,
        },
    })
}

/// `(sum w)^2 / sum w^2`.
pub fn ess(e: &WeightedEnsemble) -> f64 {
    let (mut s1, mut s2) = (0.0, 0.0);
    for x in &e.entries {
        s1 += x.weight;
        s2 += x.weight * x.weight;
    }
    if s2 == 0.0 {
        0.0
    } else {
        s1 * s1 / s2
    }
}

/// Weighted empirical CDF of `f` under the conditioned law.
pub fn conditional_ecdf(e: &WeightedEnsemble, f: Functional) -> Result<WeightedEcdf> {
    e.check_ess()?;
    let pts: Vec<(f64, f64)> = e.points(f).into_iter().filter(|p| p.1 > 0.0).collect();
    weighted_ecdf(&pts)
}

#[cfg(test)]
pub(crate) fn ensemble_from_parts(entries: Vec<EnsembleEntry>, meta: EnsembleMeta) -> WeightedEnsemble {
    WeightedEnsemble { entries, meta }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cfg(h: f64, t: f64, n: usize, dt: f64, mode: RefinementMode, seed: u64) -> EnsembleConfig {
        EnsembleConfig::new(ModelParams::new(h, t).unwrap(), n, dt, mode, seed)
    }

    #[test]
    fn weight_examples() {
        let mut p = PathSample {
            t: 1.0,
            dt: 0.01,
            endpoint: 1.0,
            run_min: 0.0,
            run_max: 1.0,
            at_probe: None,
            mode: RefinementMode::Skeleton,
        };
        assert_eq!(girsanov_weight(&p, 1.0), 1.0);
        p.endpoint = 0.5;
        p.run_min = -0.2;
        assert!((girsanov_weight(&p, 1.0) - (-0.7f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn endpoint_is_centred() {
        let n = 100_000;
        let mut s = 0.0;
        for i in 0..n {
            let mut r = PathRng::new(1, i);
            s += sample_path(&mut r, 1.0, 0.05, RefinementMode::Skeleton, None).unwrap().endpoint;
        }
        assert!((s / n as f64).abs() < 4.0 / (n as f64).sqrt());
    }

    #[test]
    fn bridge_maximum_mean() {
        let n = 100_000;
        let mut s = 0.0;
        for i in 0..n {
            let mut r = PathRng::new(2, i);
            s += sample_path(&mut r, 1.0, 0.01, RefinementMode::Bridge, None).unwrap().run_max;
        }
        let want = (2.0 / std::f64::consts::PI).sqrt();
        assert!((s / n as f64 / want - 1.0).abs() < 0.02);
    }

    #[test]
    fn bridge_dominates_skeleton() {
        // Same seed and stream: the Gaussian skeleton is shared only in law, so
        // compare the two distributions on a grid.
        let n = 100_000u64;
        let draw = |mode| -> Vec<f64> {
            let mut v: Vec<f64> = (0..n)
                .map(|i| {
                    let mut r = PathRng::new(3, i);
                    sample_path(&mut r, 1.0, 0.02, mode, None).unwrap().run_max
                })
                .collect();
            v.sort_by(f64::total_cmp);
            v
        };
        let sk = draw(RefinementMode::Skeleton);
        let br = draw(RefinementMode::Bridge);
        for k in 1..20 {
            let x = 0.1 * k as f64;
            let fs = sk.partition_point(|&v| v <= x) as f64 / n as f64;
            let fb = br.partition_point(|&v| v <= x) as f64 / n as f64;
            assert!(fb <= fs + 0.004, "x={x}: {fb} > {fs}");
        }
    }

    #[test]
    fn path_invariants() {
        for i in 0..2000 {
            let mut r = PathRng::new(9, i);
            for mode in [RefinementMode::Skeleton, RefinementMode::Bridge] {
                let p = sample_path(&mut r, 2.0, 0.05, mode, Some(1.0)).unwrap();
                assert!(p.run_min <= 0.0 && p.run_max >= 0.0);
                assert!(p.run_min <= p.endpoint && p.endpoint <= p.run_max);
                assert!(p.range() >= p.endpoint.abs());
                let w = girsanov_weight(&p, 1.0);
                assert!(w > 0.0 && w <= 1.0);
                assert!(p.at_probe.is_some());
            }
        }
    }

    #[test]
    fn config_validation() {
        assert!(run_ensemble(&cfg(1.0, 10.0, 10, 0.01, RefinementMode::Bridge, 1)).is_err());
        assert!(run_ensemble(&cfg(1.0, 10.0, 1000, 0.1, RefinementMode::Bridge, 1)).is_err());
        assert!(run_ensemble(&cfg(1.0, 10.0, 1000, 0.01, RefinementMode::Bridge, 1).with_probe(11.0)).is_err());
        assert!("bridge".parse::<RefinementMode>().is_ok());
        assert!("exact".parse::<RefinementMode>().is_err());
    }

    #[test]
    fn deterministic_across_pools() {
        let c = cfg(1.0, 5.0, 2000, 0.01, RefinementMode::Bridge, 42);
        let a = run_ensemble(&c).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let b = pool.install(|| run_ensemble(&c).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn ess_definition() {
        let meta = EnsembleMeta {
            seed: 0,
            h: 1.0,
            t: 1.0,
            dt: 0.01,
            n_paths: 4,
            mode: RefinementMode::Bridge,
            probe_u: 1.0,
            rescaled_time: 1.0,
            sim_dt: 0.01,
        };
        let entry = |w| EnsembleEntry {
            endpoint: 0.0,
            run_min: 0.0,
            run_max: 0.0,
            at_probe: 0.0,
            weight: w,
        };
        let e = ensemble_from_parts(vec![entry(0.3); 4], meta);
        assert!((ess(&e) - 4.0).abs() < 1e-12);
        let e = ensemble_from_parts(vec![entry(0.0), entry(0.0), entry(0.7), entry(0.0)], meta);
        assert!((ess(&e) - 1.0).abs() < 1e-12);
        assert!(matches!(conditional_ecdf(&e, Functional::NegMin), Err(Error::DegenerateWeights { .. })));
    }

    #[test]
    fn functional_units() {
        let c = cfg(2.0, 4.0, 1000, 0.01, RefinementMode::Bridge, 5).with_probe(0.5);
        let e = run_ensemble(&c).unwrap();
        assert_eq!(e.meta().rescaled_time, 16.0);
        let x = e.entries()[0];
        assert_eq!(e.value(&x, Functional::NegMin), -x.run_min / 2.0);
        assert_eq!(e.value(&x, Functional::MaxScaled), x.run_max / 4.0);
        assert_eq!(e.value(&x, Functional::EndpointAtU), x.at_probe / 2.0);
    }

    #[test]
    fn mean_weight_matches_quadrature_at_short_horizon() {
        use crate::asymptotics::normalizer_series_quadrature;
        let p = ModelParams::new(1.0, 2.0).unwrap();
        let e = run_ensemble(&EnsembleConfig::new(p, 100_000, 0.005, RefinementMode::Bridge, 17)).unwrap();
        let q = normalizer_series_quadrature(p, crate::SeriesCtl::default()).unwrap();
        let z = (e.mean_weight() - q.bracket) / e.standard_error();
        assert!(z.abs() < 4.0, "z = {z}");
    }

    #[test]
    fn ecdf_below_support_is_zero() {
        let e = run_ensemble(&cfg(1.0, 4.0, 2000, 0.01, RefinementMode::Bridge, 8)).unwrap();
        let f = conditional_ecdf(&e, Functional::NegMin).unwrap();
        assert_eq!(f.eval(-1.0), 0.0);
        assert!((f.eval(1e9) - 1.0).abs() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn prop_weights_in_unit_interval(seed in any::<u64>(), idx in any::<u64>(), t in 0.05f64..3.0) {
            let mut r = PathRng::new(seed, idx);
            let p = sample_path(&mut r, t, 0.01f64.min(t), RefinementMode::Bridge, None).unwrap();
            let w = girsanov_weight(&p, 1.0);
            prop_assert!(w > 0.0 && w <= 1.0);
            prop_assert!(p.run_min <= p.endpoint && p.endpoint <= p.run_max);
        }
    }
}
