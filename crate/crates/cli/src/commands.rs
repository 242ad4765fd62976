use std::path::Path;

use critrange::asymptotics::{normalizer_expansion, normalizer_series_quadrature, MAX_ORDER};
use critrange::killed_bm::{survival_probability_summed, transition_density_summed, IntervalSpec};
use critrange::limit_laws::{endpoint_density, level_density, max_cdf, min_cdf};
use critrange::mc_engine::{conditional_ecdf, ess, run_ensemble};
use critrange::series::Summed;
use critrange::special_fn::{eta_summed, f_integrand_summed, g_eval_summed};
use critrange::stats::{bin_masses, equiprobable_edges, tv_from_masses, try_ks_distance, WeightedEcdf};
use critrange::{EnsembleConfig, Functional, GArgs, ModelParams, RefinementMode, SeriesCtl, WeightedEnsemble};
use serde_json::{json, Value};

use crate::args::{Command, CompareArgs, EvalArgs, ExpansionArgs, Format, LimitsArgs, Opts};
use crate::config::ConfigFile;
use crate::output::{emit, emit_table, envelope, json_bytes, Cell, Table};
use crate::CliError;

const DEFAULT_N_PATHS: usize = 100_000;
const DEFAULT_DT: f64 = 0.01;
const DEFAULT_SEED: u64 = 1;
const DEFAULT_ORDER: usize = 3;
/// Points per plotted ECDF-vs-CDF curve.
const CURVE_POINTS: usize = 500;

/// Command-line flags merged with the config file.
pub struct Run {
    opts: Opts,
    file: ConfigFile,
}

fn usage<T>(msg: impl Into<String>) -> Result<T, CliError> {
    Err(CliError::Usage(msg.into()))
}

impl Run {
    pub fn resolve(mut opts: Opts, command: &Command) -> Result<Self, CliError> {
        let file = match &opts.config {
            Some(p) => ConfigFile::load(p)?,
            None => ConfigFile::default(),
        };
        file.fill(&mut opts.t, "t")?;
        file.fill(&mut opts.h, "h")?;
        file.fill(&mut opts.n, "n")?;
        file.fill(&mut opts.n_paths, "n-paths")?;
        file.fill(&mut opts.dt, "dt")?;
        file.fill(&mut opts.seed, "seed")?;
        file.fill(&mut opts.mode, "mode")?;
        file.fill(&mut opts.tol, "tol")?;
        file.fill(&mut opts.threads, "threads")?;
        file.fill(&mut opts.out, "out")?;
        let mut fmt: Option<String> = opts.format.map(|f| format!("{f:?}").to_lowercase());
        file.fill(&mut fmt, "format")?;
        opts.format = match fmt.as_deref() {
            None => None,
            Some("csv") => Some(Format::Csv),
            Some("json") => Some(Format::Json),
            Some(other) => return usage(format!("unknown format {other:?}")),
        };
        let run = Self { opts, file };
        // Fail fast on anything the command will need.
        run.ctl()?;
        match command {
            Command::Expansion(_) | Command::Quadrature => {
                run.params()?;
                run.order()?;
            }
            Command::Simulate | Command::Compare(_) => {
                run.ensemble_config(None)?.validate()?;
            }
            Command::Eval(_) | Command::Limits(_) => {}
        }
        Ok(run)
    }

    pub fn install_pool(&self) -> Result<(), CliError> {
        if let Some(n) = self.opts.threads {
            if n == 0 {
                return usage("--threads must be positive");
            }
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| CliError::Usage(format!("cannot size the worker pool: {e}")))?;
        }
        Ok(())
    }

    fn out(&self) -> Option<&Path> {
        self.opts.out.as_deref()
    }

    fn format(&self) -> Format {
        self.opts.format.unwrap_or(Format::Csv)
    }

    fn t(&self) -> Result<f64, CliError> {
        self.opts.t.map_or_else(|| usage("--t is required"), Ok)
    }

    fn h(&self) -> f64 {
        self.opts.h.unwrap_or(1.0)
    }

    fn ctl(&self) -> Result<SeriesCtl, CliError> {
        let d = SeriesCtl::default();
        Ok(SeriesCtl::new(self.opts.tol.unwrap_or(d.tol), d.max_terms)?)
    }

    fn params(&self) -> Result<ModelParams, CliError> {
        Ok(ModelParams::new(self.h(), self.t()?)?)
    }

    fn order(&self) -> Result<usize, CliError> {
        let n = self.opts.n.unwrap_or(DEFAULT_ORDER);
        if n > MAX_ORDER {
            return usage(format!("--n is capped at {MAX_ORDER}, got {n}"));
        }
        Ok(n)
    }

    fn mode(&self) -> Result<RefinementMode, CliError> {
        match &self.opts.mode {
            None => Ok(RefinementMode::Bridge),
            Some(m) => m.parse().map_err(|_| CliError::Usage(format!("unknown mode {m:?}"))),
        }
    }

    fn ensemble_config(&self, probe: Option<f64>) -> Result<EnsembleConfig, CliError> {
        let cfg = EnsembleConfig::new(
            self.params()?,
            self.opts.n_paths.unwrap_or(DEFAULT_N_PATHS),
            self.opts.dt.unwrap_or(DEFAULT_DT),
            self.mode()?,
            self.opts.seed.unwrap_or(DEFAULT_SEED),
        );
        Ok(match probe {
            Some(u) => cfg.with_probe(u),
            None => cfg,
        })
    }

    /// Resolved model settings. The thread count is left out so that
    /// outputs do not depend on it.
    fn config_json(&self, command: &str, extra: Value) -> Value {
        let mut v = json!({
            "command": command,
            "t": self.opts.t,
            "h": self.h(),
            "tol": self.opts.tol.unwrap_or(SeriesCtl::default().tol),
        });
        if let (Value::Object(m), Value::Object(e)) = (&mut v, extra) {
            m.extend(e);
        }
        v
    }
}

fn summed_row(mut args: Vec<Cell>, s: Summed) -> Vec<Cell> {
    args.push(Cell::Num(s.value));
    args.push(Cell::Num(s.tail_bound));
    args
}

fn need<T: Clone>(xs: &[T], flag: &str, func: &str) -> Result<Vec<T>, CliError> {
    if xs.is_empty() {
        return usage(format!("--fn {func} needs --{flag}"));
    }
    Ok(xs.to_vec())
}

pub fn eval(run: &Run, a: &EvalArgs) -> Result<(), CliError> {
    let ctl = run.ctl()?;
    let f = a.func.as_str();
    let mut table;
    match f {
        "G" => {
            table = Table::new(vec!["v", "x", "l", "value", "err_bound"]);
            let xs = if a.x.is_empty() { vec![0.0] } else { a.x.clone() };
            let ls = if a.l.is_empty() { vec![0] } else { a.l.clone() };
            for v in need(&a.v, "v", f)? {
                for &x in &xs {
                    for &l in &ls {
                        let s = g_eval_summed(GArgs::new(v, x, l), ctl)?;
                        table.push(summed_row(vec![v.into(), x.into(), Cell::Int(l as i64)], s));
                    }
                }
            }
        }
        "eta" => {
            table = Table::new(vec!["k", "v", "value", "err_bound"]);
            let ks = if a.k.is_empty() { vec![0] } else { a.k.clone() };
            for &k in &ks {
                for v in need(&a.v, "v", f)? {
                    table.push(summed_row(vec![Cell::Int(k as i64), v.into()], eta_summed(k, v, ctl)?));
                }
            }
        }
        "F" => {
            table = Table::new(vec!["v", "t", "value", "err_bound"]);
            let t = run.t()?;
            for v in need(&a.v, "v", f)? {
                table.push(summed_row(vec![v.into(), t.into()], f_integrand_summed(v, t, ctl)?));
            }
        }
        "T" => {
            table = Table::new(vec!["x", "value", "err_bound"]);
            for x in need(&a.x, "x", f)? {
                let value = max_cdf(x, ctl)?;
                let bound = if x.is_finite() {
                    g_eval_summed(GArgs::new(1.0 / (x * x), 0.5, 0), ctl)?.tail_bound
                } else {
                    0.0
                };
                table.push(vec![x.into(), value.into(), bound.into()]);
            }
        }
        "p_c" => {
            table = Table::new(vec!["a", "y", "c", "t", "value", "err_bound"]);
            let t = run.t()?;
            let ys = need(&a.y, "y", f)?;
            for c in need(&a.c, "c", f)? {
                let spec = IntervalSpec::new(c)?;
                for &x0 in &need(&a.a, "a", f)? {
                    for &y in &ys {
                        let s = transition_density_summed(x0, y, spec, t, ctl)?;
                        table.push(summed_row(vec![x0.into(), y.into(), c.into(), t.into()], s));
                    }
                }
            }
        }
        "survival" => {
            table = Table::new(vec!["a", "c", "t", "value", "err_bound"]);
            let t = run.t()?;
            for c in need(&a.c, "c", f)? {
                let spec = IntervalSpec::new(c)?;
                for &x0 in &need(&a.a, "a", f)? {
                    let s = survival_probability_summed(x0, spec, t, ctl)?;
                    table.push(summed_row(vec![x0.into(), c.into(), t.into()], s));
                }
            }
        }
        other => return usage(format!("--fn must be one of G, eta, F, T, p_c, survival; got {other:?}")),
    }
    let cfg = run.config_json("eval", json!({ "fn": f }));
    emit_table(run.out(), "eval", run.format(), cfg, &table)
}

pub fn expansion(run: &Run, a: &ExpansionArgs) -> Result<(), CliError> {
    if a.quadrature_only {
        return quadrature(run);
    }
    let p = run.params()?;
    let n = run.order()?;
    let tab = normalizer_expansion(p, n)?;
    let quad = if a.quadrature {
        Some(normalizer_series_quadrature(p, run.ctl()?)?.scaled)
    } else {
        None
    };
    let mut table = Table::new(vec!["l", "term", "partial", "quadrature", "abs_diff"]);
    for (l, (term, partial)) in tab.scaled_terms().into_iter().zip(tab.scaled_partials()).enumerate() {
        let (q, d) = match quad {
            Some(q) => (Cell::Num(q), Cell::Num((q - partial).abs())),
            None => (Cell::Empty, Cell::Empty),
        };
        table.push(vec![Cell::Int(l as i64), term.into(), partial.into(), q, d]);
    }
    let cfg = run.config_json(
        "expansion",
        json!({ "n": n, "quadrature": a.quadrature, "rescaled_time": p.rescaled_time() }),
    );
    emit_table(run.out(), "expansion", run.format(), cfg, &table)
}

pub fn quadrature(run: &Run) -> Result<(), CliError> {
    let p = run.params()?;
    let q = normalizer_series_quadrature(p, run.ctl()?)?;
    let mut table = Table::new(vec!["t", "h", "rescaled_time", "value", "bracket", "scaled", "abs_err"]);
    table.push(vec![
        p.t().into(),
        p.h().into(),
        p.rescaled_time().into(),
        q.value.into(),
        q.bracket.into(),
        q.scaled.into(),
        q.abs_err.into(),
    ]);
    let cfg = run.config_json("quadrature", json!({ "rescaled_time": p.rescaled_time() }));
    emit_table(run.out(), "quadrature", run.format(), cfg, &table)
}

fn ensemble_json(cfg: &EnsembleConfig) -> Value {
    json!({
        "n_paths": cfg.n_paths,
        "dt": cfg.dt,
        "mode": cfg.mode,
        "seed": cfg.seed,
        "probe_u": cfg.probe_u,
    })
}

fn ecdf_table(e: &WeightedEcdf) -> Table {
    let mut t = Table::new(vec!["x", "cdf"]);
    for (x, c) in e.support().iter().zip(e.cumulative()) {
        t.push(vec![Cell::Num(*x), Cell::Num(*c)]);
    }
    t
}

fn ensemble_stats(e: &WeightedEnsemble) -> Value {
    let s = e.meta().rescaled_time;
    json!({
        "meta": e.meta(),
        "mean_weight": e.mean_weight(),
        "weight_sd": e.weight_sd(),
        "standard_error": e.standard_error(),
        "ess": ess(e),
        "scaled_normalizer_estimate": s * e.mean_weight(),
    })
}

pub fn simulate(run: &Run) -> Result<(), CliError> {
    let cfg = run.ensemble_config(None)?;
    let e = run_ensemble(&cfg)?;
    let mut means = serde_json::Map::new();
    let mut ecdfs = Vec::new();
    for f in Functional::ALL {
        means.insert(f.name().to_string(), json!(e.weighted_mean(f)?));
        ecdfs.push((f, conditional_ecdf(&e, f)?));
    }
    let mut results = ensemble_stats(&e);
    results["conditional_means"] = Value::Object(means);
    let doc = envelope(run.config_json("simulate", ensemble_json(&cfg)), results);
    emit(run.out(), "summary.json", &json_bytes(&doc)?)?;
    if run.out().is_some() {
        for (f, ecdf) in &ecdfs {
            emit(run.out(), &format!("ecdf_{}.csv", f.name()), &ecdf_table(ecdf).to_csv()?)?;
        }
    }
    Ok(())
}

/// ECDF and model CDF at evenly spaced empirical quantiles.
fn curve<F>(ecdf: &WeightedEcdf, mut cdf: F) -> Result<Table, CliError>
where
    F: FnMut(f64) -> Result<f64, critrange::Error>,
{
    let mut t = Table::new(vec!["x", "empirical", "model"]);
    let mut last = f64::NEG_INFINITY;
    for i in 0..CURVE_POINTS {
        let x = ecdf.quantile((i as f64 + 0.5) / CURVE_POINTS as f64);
        if x == last {
            continue;
        }
        last = x;
        t.push(vec![x.into(), ecdf.eval(x).into(), cdf(x)?.into()]);
    }
    Ok(t)
}

fn law(name: &str, functional: &str, distance: &str, value: f64, threshold: f64) -> Value {
    json!({
        "law": name,
        "functional": functional,
        "distance": distance,
        "value": value,
        "threshold": threshold,
        "pass": value <= threshold,
    })
}

pub fn compare(run: &Run, a: &CompareArgs) -> Result<(), CliError> {
    let mut a = a.clone();
    run.file.fill(&mut a.u, "u")?;
    run.file.fill(&mut a.bins, "bins")?;
    run.file.fill(&mut a.ks_min, "ks-min")?;
    run.file.fill(&mut a.ks_max, "ks-max")?;
    run.file.fill(&mut a.tv_endpoint, "tv-endpoint")?;
    let (ks_min_thr, ks_max_thr, tv_thr) = (
        a.ks_min.unwrap_or(0.05),
        a.ks_max.unwrap_or(0.05),
        a.tv_endpoint.unwrap_or(0.08),
    );
    let bins = a.bins.unwrap_or(20);
    if bins < 2 {
        return usage("--bins must be at least 2");
    }
    let t = run.t()?;
    let u = a.u.unwrap_or(1.0_f64.min(t));
    let cfg = run.ensemble_config(Some(u))?;
    cfg.validate()?;
    if !(u > 0.0) {
        return usage("--u must be positive");
    }
    let h = run.h();
    let ctl = run.ctl()?;
    let e = run_ensemble(&cfg)?;

    let min_ecdf = conditional_ecdf(&e, Functional::NegMin)?;
    let ks_min = try_ks_distance(&min_ecdf, |x| Ok(min_cdf(x, h)))?;
    let max_model = |x: f64| if x > 0.0 { max_cdf(x, ctl) } else { Ok(0.0) };
    let max_ecdf = conditional_ecdf(&e, Functional::MaxScaled)?;
    let ks_max = try_ks_distance(&max_ecdf, max_model)?;

    let density = |x: f64| endpoint_density(x, u, h, ctl);
    let edges = equiprobable_edges(density, -30.0 / h, 10.0 * u.sqrt() + 1.0, bins, 100 * bins)?;
    let model = bin_masses(density, &edges)?;
    let pts = e.points(Functional::EndpointAtU);
    let tv = tv_from_masses(&pts, &model, &edges)?;
    let (emp, _) = critrange::stats::binned_masses(&pts, &edges)?;

    let laws = vec![
        law("min", Functional::NegMin.name(), "ks", ks_min, ks_min_thr),
        law("max", Functional::MaxScaled.name(), "ks", ks_max, ks_max_thr),
        law("endpoint", Functional::EndpointAtU.name(), "tv", tv, tv_thr),
    ];
    let pass = laws.iter().all(|l| l["pass"] == json!(true));
    let mut results = ensemble_stats(&e);
    results["gap_mean"] = json!(e.weighted_mean(Functional::GapScaled)?);
    results["laws"] = Value::Array(laws);
    results["pass"] = json!(pass);
    let mut extra = ensemble_json(&cfg);
    extra["bins"] = json!(bins);
    extra["thresholds"] = json!({ "ks_min": ks_min_thr, "ks_max": ks_max_thr, "tv_endpoint": tv_thr });
    let doc = envelope(run.config_json("compare", extra), results);
    emit(run.out(), "report.json", &json_bytes(&doc)?)?;

    if run.out().is_some() {
        emit(run.out(), "curve_min.csv", &curve(&min_ecdf, |x| Ok(min_cdf(x, h)))?.to_csv()?)?;
        emit(run.out(), "curve_max.csv", &curve(&max_ecdf, max_model)?.to_csv()?)?;
        let mut bt = Table::new(vec!["bin_lo", "bin_hi", "empirical", "model"]);
        for (i, w) in edges.windows(2).enumerate() {
            bt.push(vec![w[0].into(), w[1].into(), emp[i].into(), model[i].into()]);
        }
        emit(run.out(), "curve_endpoint.csv", &bt.to_csv()?)?;
    }
    if !pass {
        return Err(CliError::Threshold(format!(
            "ks_min {ks_min:.4} (<= {ks_min_thr}), ks_max {ks_max:.4} (<= {ks_max_thr}), tv_endpoint {tv:.4} (<= {tv_thr})"
        )));
    }
    Ok(())
}

pub fn limits(run: &Run, a: &LimitsArgs) -> Result<(), CliError> {
    let mut a = a.clone();
    run.file.fill(&mut a.from, "from")?;
    run.file.fill(&mut a.to, "to")?;
    run.file.fill(&mut a.points, "points")?;
    run.file.fill(&mut a.u, "u")?;
    let (lo, hi, n, u) = (a.from.unwrap_or(-2.0), a.to.unwrap_or(4.0), a.points.unwrap_or(121), a.u.unwrap_or(1.0));
    if !(hi > lo) || n < 2 {
        return usage("need --from < --to and --points >= 2");
    }
    if !(u > 0.0) {
        return usage("--u must be positive");
    }
    let h = run.h();
    if !(h > 0.0) || !h.is_finite() {
        return usage("--h must be positive");
    }
    let ctl = run.ctl()?;
    let mut table = Table::new(vec!["x", "min_cdf", "max_cdf", "level_density", "endpoint_density"]);
    for i in 0..n {
        let x = lo + (hi - lo) * i as f64 / (n - 1) as f64;
        let mx = if x > 0.0 { max_cdf(x, ctl)? } else { 0.0 };
        table.push(vec![
            x.into(),
            min_cdf(x, h).into(),
            mx.into(),
            level_density(x, h).into(),
            endpoint_density(x, u, h, ctl)?.into(),
        ]);
    }
    let cfg = run.config_json("limits", json!({ "from": lo, "to": hi, "points": n, "u": u }));
    emit_table(run.out(), "limits", run.format(), cfg, &table)
}
