//! Brownian motion killed on leaving `(0, c)`, through its sine eigenbasis
//! with eigenvalues `-pi^2 j^2 / (2 c^2)`.

use std::f64::consts::PI;
use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{domain, Result};
use crate::quad::{integrate, QuadCtl, QuadResult};
use crate::series::{gauss_tail, sum_with_tail, SeriesCtl, Summed};

static CLAMPED: AtomicU64 = AtomicU64::new(0);

/// Number of times a truncated density came out slightly negative and was
/// clamped to zero, process-wide.
pub fn clamp_count() -> u64 {
    CLAMPED.load(Ordering::Relaxed)
}

fn clamp_nonneg(x: f64) -> f64 {
    if x < 0.0 {
        CLAMPED.fetch_add(1, Ordering::Relaxed);
        0.0
    } else {
        x
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalSpec {
    c: f64,
}

impl IntervalSpec {
    pub fn new(c: f64) -> Result<Self> {
        if !(c > 0.0) || !c.is_finite() {
            return domain(format!("interval width must be positive and finite, got {c}"));
        }
        Ok(Self { c })
    }

    pub fn width(&self) -> f64 {
        self.c
    }

    pub fn eigenvalue(&self, j: usize) -> f64 {
        let jf = j as f64;
        -PI * PI * jf * jf / (2.0 * self.c * self.c)
    }

    /// Decay rate `r` with `exp(lambda_j t) = exp(-r j^2)`.
    fn rate(&self, t: f64) -> f64 {
        PI * PI * t / (2.0 * self.c * self.c)
    }

    /// Term cap for horizon `t`: raised so the slow small-`t` regime still converges.
    fn ctl_for(&self, t: f64, ctl: SeriesCtl) -> SeriesCtl {
        let need = (10.0 * self.c / t.sqrt()).ceil();
        ctl.with_min_cap(if need.is_finite() { need as usize } else { usize::MAX })
    }

    fn check_inside(&self, name: &str, a: f64) -> Result<()> {
        if !(a > 0.0 && a < self.c) {
            return domain(format!("{name} must lie in (0, {}), got {a}", self.c));
        }
        Ok(())
    }
}

fn check_time(t: f64) -> Result<()> {
    if !(t > 0.0) || !t.is_finite() {
        return domain(format!("t must be positive and finite, got {t}"));
    }
    Ok(())
}

/// Transition density of the killed motion from `a` to `y` over time `t`.
pub fn transition_density(a: f64, y: f64, spec: IntervalSpec, t: f64, ctl: SeriesCtl) -> Result<f64> {
    transition_density_summed(a, y, spec, t, ctl).map(|s| s.value)
}

pub fn transition_density_summed(
    a: f64,
    y: f64,
    spec: IntervalSpec,
    t: f64,
    ctl: SeriesCtl,
) -> Result<Summed> {
    ctl.validate()?;
    spec.check_inside("start a", a)?;
    spec.check_inside("end y", y)?;
    check_time(t)?;
    let c = spec.c;
    let rate = spec.rate(t);
    let ctl = spec.ctl_for(t, ctl);
    let mut s = sum_with_tail("transition density", ctl.tol, ctl.max_terms, 1, |j| {
        let w = PI * j as f64 / c;
        let term = (2.0 / c) * (spec.eigenvalue(j) * t).exp() * (w * a).sin() * (w * y).sin();
        (term, gauss_tail(2.0 / c, 0, rate, j))
    })?;
    s.value = clamp_nonneg(s.value);
    Ok(s)
}

/// Probability that the motion started at `a` has not left `(0, c)` by time `t`.
pub fn survival_probability(a: f64, spec: IntervalSpec, t: f64, ctl: SeriesCtl) -> Result<f64> {
    survival_probability_summed(a, spec, t, ctl).map(|s| s.value)
}

pub fn survival_probability_summed(
    a: f64,
    spec: IntervalSpec,
    t: f64,
    ctl: SeriesCtl,
) -> Result<Summed> {
    ctl.validate()?;
    spec.check_inside("start a", a)?;
    check_time(t)?;
    let c = spec.c;
    let rate = spec.rate(t);
    let ctl = spec.ctl_for(t, ctl);
    // Only odd j survive the y-integration: int_0^c sin(pi j y / c) dy = 2c/(pi j).
    let mut s = sum_with_tail("survival probability", ctl.tol, ctl.max_terms, 1, |j| {
        let term = if j % 2 == 1 {
            4.0 / (PI * j as f64) * (spec.eigenvalue(j) * t).exp() * (PI * j as f64 * a / c).sin()
        } else {
            0.0
        };
        (term, gauss_tail(4.0 / PI, 0, rate, j))
    })?;
    s.value = clamp_nonneg(s.value).min(1.0);
    Ok(s)
}

/// `e^{-c} E_a[e^{X_t}; survived to t, X_t < ycut]`. Pass `f64::INFINITY`
/// (or anything `>= c`) for no cut.
pub fn weighted_exit_functional(
    a: f64,
    spec: IntervalSpec,
    t: f64,
    ycut: f64,
    ctl: SeriesCtl,
) -> Result<f64> {
    ctl.validate()?;
    spec.check_inside("start a", a)?;
    check_time(t)?;
    if !(ycut > 0.0) {
        return domain(format!("ycut must be positive, got {ycut}"));
    }
    let c = spec.c;
    let rate = spec.rate(t);
    let ctl = spec.ctl_for(t, ctl);
    let s = if ycut >= c {
        let back = (-c).exp();
        sum_with_tail("weighted exit functional", ctl.tol, ctl.max_terms, 1, |j| {
            let jf = j as f64;
            let odd = j % 2 == 1;
            let sign = if odd { 1.0 } else { -1.0 };
            let edge = if odd { 1.0 + back } else { 1.0 - back };
            let d = PI * PI * jf * jf + c * c;
            let term = 2.0 * sign * PI * jf / d
                * (spec.eigenvalue(j) * t).exp()
                * (PI * jf * a / c).sin()
                * edge;
            (term, gauss_tail(2.0, 0, rate, j))
        })?
    } else {
        let y = ycut;
        let e_yc = (y - c).exp();
        let e_c = (-c).exp();
        sum_with_tail("weighted exit functional", ctl.tol, ctl.max_terms, 1, |j| {
            let jf = j as f64;
            let w = PI * jf / c;
            let d = PI * PI * jf * jf + c * c;
            let decay = (spec.eigenvalue(j) * t).exp() * (w * a).sin();
            let term = decay
                * (-2.0 * PI * jf / d * (e_yc * (w * y).cos() - e_c) + 2.0 * c / d * e_yc * (w * y).sin());
            (term, gauss_tail(2.0, 0, rate, j))
        })?
    };
    Ok(clamp_nonneg(s.value))
}

/// `int_0^c e^{-a} e^{-c} E_a[e^{X_t}; survived to t] da` in closed series form.
pub fn range_laplace_integrand(spec: IntervalSpec, t: f64, ctl: SeriesCtl) -> Result<f64> {
    ctl.validate()?;
    check_time(t)?;
    let c = spec.c;
    let rate = spec.rate(t);
    let ctl = spec.ctl_for(t, ctl);
    let back = (-c).exp();
    let s = sum_with_tail("range Laplace integrand", ctl.tol, ctl.max_terms, 1, |j| {
        let jf = j as f64;
        let odd = j % 2 == 1;
        let sign = if odd { 1.0 } else { -1.0 };
        let edge = if odd { 1.0 + back } else { 1.0 - back };
        let p2 = PI * PI * jf * jf;
        let d = p2 + c * c;
        let term = 2.0 * c * sign * p2 / (d * d) * (spec.eigenvalue(j) * t).exp() * edge * edge;
        (term, gauss_tail(8.0 * c / (PI * PI), 0, rate, j))
    })?;
    Ok(clamp_nonneg(s.value))
}

/// `t * int_a^inf e^{-c} E_a[e^{X_t}; survived in (0, c) to t] dc`, which
/// tends to `a` as `t` grows (uniformly once `t > 100 a^2`).
///
/// The `c`-integral runs over `[a, a + 40 sqrt(t)]`. Beyond that the
/// integrand is below `e^{-(c-a)/2} + e^{-(c-a)^2/(8t)}`, whose integral is
/// added to the returned error estimate.
pub fn exit_weighted_tail(a: f64, t: f64, ctl: SeriesCtl) -> Result<QuadResult> {
    ctl.validate()?;
    if !(a > 0.0) || !a.is_finite() {
        return domain(format!("a must be positive, got {a}"));
    }
    check_time(t)?;
    let st = t.sqrt();
    let span = 40.0 * st;
    let mut breaks = vec![a];
    for f in [0.05, 0.1, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 40.0] {
        breaks.push(a + f * st);
    }
    let qctl = QuadCtl {
        abs_tol: 1e-300,
        rel_tol: 1e-9,
        max_intervals: 4000,
    };
    let r = integrate(
        |c| {
            let spec = IntervalSpec::new(c)?;
            weighted_exit_functional(a, spec, t, f64::INFINITY, ctl)
        },
        &breaks,
        qctl,
    )?;
    let remainder = 2.0 * (-span / 2.0).exp() + 4.0 * t / span * (-span * span / (8.0 * t)).exp();
    Ok(QuadResult {
        value: t * r.value,
        abs_err: t * (r.abs_err + remainder),
        evals: r.evals,
    })
}

/// `int_0^v sin(pi j x / c) e^{sign x} dx` in closed form; `sign` is `+1` or `-1`.
pub fn primitive_exp_sin(v: f64, c: f64, j: u32, sign: i32) -> f64 {
    let k = PI * j as f64 / c;
    let kv = k * v;
    if sign >= 0 {
        (v.exp() * (kv.sin() - k * kv.cos()) + k) / (1.0 + k * k)
    } else {
        (k - (-v).exp() * (kv.sin() + k * kv.cos())) / (1.0 + k * k)
    }
}
