//! The critical survival normalizer `E^h[exp(-h C_t)]`, computed by
//! quadrature of its spectral form and by its large-time expansion, plus the
//! auxiliary integrals `J1`, `J2` and their series kernel.
//!
//! Everything depends on `(h, t)` only through the rescaled time `th^2`.

use std::f64::consts::PI;

use crate::error::{domain, Result};
use crate::killed_bm::{range_laplace_integrand, IntervalSpec};
use crate::quad::{integrate, QuadCtl, QuadResult};
use crate::series::{gauss_tail, sum_with_tail, SeriesCtl};
use crate::special_fn::{f_integrand, g_eval, GArgs};

/// Drift `h` (equal to the obstacle intensity) and horizon `t`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ModelParams {
    h: f64,
    t: f64,
}

impl ModelParams {
    pub fn new(h: f64, t: f64) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return domain(format!("drift h must be positive and finite, got {h}"));
        }
        if !(t > 0.0) || !t.is_finite() {
            return domain(format!("horizon t must be positive and finite, got {t}"));
        }
        Ok(Self { h, t })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    /// `t h^2`, the horizon after reduction to unit drift.
    pub fn rescaled_time(&self) -> f64 {
        self.t * self.h * self.h
    }
}

/// Largest expansion order accepted by [`normalizer_expansion`].
pub const MAX_ORDER: usize = 8;

/// Terms of `e^{h^2 t/2} E^h[exp(-h C_t)] ~ 1/s + sum_{l>=1} (-1)^l 2^l (l+1)! / s^{l+1}`
/// with `s = t h^2`.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ExpansionTable {
    pub order: usize,
    pub rescaled_time: f64,
    /// `terms[l]` for `l = 0..=order`.
    pub terms: Vec<f64>,
    /// Running sums of `terms`.
    pub partials: Vec<f64>,
    /// `exp(-h^2 t / 2)`, kept apart so the table never underflows.
    pub prefactor: f64,
}

impl ExpansionTable {
    /// `s * partials[l]`, the expansion of `s e^{s/2} E[exp(-C)]`.
    pub fn scaled_partials(&self) -> Vec<f64> {
        self.partials.iter().map(|p| p * self.rescaled_time).collect()
    }

    pub fn scaled_terms(&self) -> Vec<f64> {
        self.terms.iter().map(|p| p * self.rescaled_time).collect()
    }
}

/// Coefficient of `s^{-(l+1)}` in the expansion.
pub fn expansion_coefficient(l: usize) -> f64 {
    let sign = if l.is_multiple_of(2) { 1.0 } else { -1.0 };
    let fact: f64 = (1..=l + 1).map(|k| k as f64).product();
    if l == 0 {
        1.0
    } else {
        sign * 2f64.powi(l as i32) * fact
    }
}

pub fn normalizer_expansion(p: ModelParams, n: usize) -> Result<ExpansionTable> {
    if n > MAX_ORDER {
        return domain(format!("expansion order must be at most {MAX_ORDER}, got {n}"));
    }
    let s = p.rescaled_time();
    let mut terms = Vec::with_capacity(n + 1);
    let mut partials = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    for l in 0..=n {
        let term = expansion_coefficient(l) / s.powi(l as i32 + 1);
        acc += term;
        terms.push(term);
        partials.push(acc);
    }
    Ok(ExpansionTable {
        order: n,
        rescaled_time: s,
        terms,
        partials,
        prefactor: (-s / 2.0).exp(),
    })
}

/// The normalizer obtained by quadrature.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Normalizer {
    /// `E^h[exp(-h C_t)]`; underflows to zero for very large `th^2`.
    pub value: f64,
    /// `e^{th^2/2} E^h[exp(-h C_t)]`, the integral of the range Laplace integrand over `c`.
    pub bracket: f64,
    /// `th^2 e^{th^2/2} E^h[exp(-h C_t)]`, directly comparable to the scaled expansion.
    pub scaled: f64,
    /// Quadrature error estimate on `bracket`.
    pub abs_err: f64,
}

/// `E^h[exp(-h C_t)] = e^{-s/2} int_0^inf L(c, s) dc` with `s = th^2` and
/// `L` the range Laplace integrand. The `c`-range is split at `sqrt(s)` and
/// cut at `12 sqrt(s)`, beyond which the integrand is below `exp(-70)`.
pub fn normalizer_series_quadrature(p: ModelParams, ctl: SeriesCtl) -> Result<Normalizer> {
    ctl.validate()?;
    let s = p.rescaled_time();
    let r = s.sqrt();
    let breaks: Vec<f64> = [0.0, 0.1, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 12.0]
        .iter()
        .map(|f| f * r)
        .collect();
    let q = integrate(
        |c| {
            if c <= 0.0 {
                return Ok(0.0);
            }
            range_laplace_integrand(IntervalSpec::new(c)?, s, ctl)
        },
        &breaks,
        QuadCtl {
            abs_tol: 1e-300,
            rel_tol: 1e-11,
            max_intervals: 4000,
        },
    )?;
    Ok(Normalizer {
        value: (-s / 2.0).exp() * q.value,
        bracket: q.value,
        scaled: s * q.value,
        abs_err: q.abs_err,
    })
}

/// `int_0^inf F(v, t) dv`. The integrand is below `exp(-100)` outside
/// `[min(1e-3, 1e-4 t), 12]` for `t >= 1`.
pub fn f_integral(t: f64, ctl: SeriesCtl) -> Result<QuadResult> {
    ctl.validate()?;
    if !(t >= 1.0) || !t.is_finite() {
        return domain(format!("t must be at least 1, got {t}"));
    }
    let lo = (1e-4 * t).min(1e-3);
    let breaks = [lo, 0.01, 0.03, 0.1, 0.3, 1.0, 3.0, 12.0];
    integrate(
        |v| f_integrand(v, t, ctl),
        &breaks,
        QuadCtl {
            abs_tol: 1e-12,
            rel_tol: 1e-12,
            max_intervals: 2000,
        },
    )
}

/// `H(a,u,rho,gamma,hh,s) = (-1)^s sum_j pi j (pi^2 j^2 u rho + 1)^{-1} exp(-pi^2 j^2 u gamma / 2) sin(pi j s + pi j a hh)`.
#[allow(clippy::too_many_arguments)]
pub fn h_kernel(a: f64, u: f64, rho: f64, gamma: f64, hh: f64, s: u8, ctl: SeriesCtl) -> Result<f64> {
    ctl.validate()?;
    if s > 1 {
        return domain(format!("s must be 0 or 1, got {s}"));
    }
    if !(gamma > 0.0) || !(u > 0.0) || !(rho >= 0.0) {
        return domain("need u > 0, gamma > 0, rho >= 0");
    }
    if ![a, u, rho, gamma, hh].iter().all(|x| x.is_finite()) {
        return domain("kernel parameters must be finite");
    }
    let rate = PI * PI * u * gamma / 2.0;
    let phase = s as f64 + a * hh;
    let sum = sum_with_tail("H kernel", ctl.tol, ctl.max_terms, 1, |j| {
        let jf = j as f64;
        let term = PI * jf / (PI * PI * jf * jf * u * rho + 1.0)
            * (-rate * jf * jf).exp()
            * (PI * jf * phase).sin();
        (term, gauss_tail(PI, 1, rate, j))
    })?;
    Ok(if s == 1 { -sum.value } else { sum.value })
}

/// Below this `u` the `J` integrands are smaller than `exp(-100)` when `t >= 100 a^2`.
const U_FLOOR: f64 = 1e-3;
/// Above this `u` every kernel term carries `exp(-pi^2 u / 2) < exp(-390)`.
const U_CEIL: f64 = 80.0;

fn j_integral<F>(t: f64, a: f64, nu: f64, extra: F, s: u8, ctl: SeriesCtl) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let u_lo = if nu.is_infinite() {
        0.0
    } else {
        t / (a + nu * t.sqrt()).powi(2)
    };
    let u_hi = if a > 0.0 { t / (a * a) } else { f64::INFINITY };
    let lo = u_lo.max(U_FLOOR);
    let hi = u_hi.min(U_CEIL);
    if lo >= hi {
        return Ok(0.0);
    }
    let mut breaks = vec![lo];
    for b in [0.01, 0.03, 0.1, 0.3, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0] {
        if b > lo && b < hi {
            breaks.push(b);
        }
    }
    breaks.push(hi);
    let q = integrate(
        |u| Ok(u.powf(-0.5) * h_kernel(a, u, 1.0 / t, 1.0, (u / t).sqrt(), s, ctl)? * extra(u)),
        &breaks,
        QuadCtl {
            abs_tol: 1e-16,
            rel_tol: 1e-11,
            max_intervals: 2000,
        },
    )?;
    Ok(q.value / t.sqrt())
}

fn check_j(t: f64, nu: f64) -> Result<()> {
    if !(t >= 1.0) || !t.is_finite() {
        return domain(format!("t must be at least 1, got {t}"));
    }
    if !(nu > 0.0) {
        return domain(format!("nu must be positive or infinite, got {nu}"));
    }
    Ok(())
}

/// `J1(t,a,nu) = t^{-1/2} int u^{-1/2} H(a,u,1/t,1,sqrt(u/t),1) du` over
/// `u in (t/(a + nu sqrt t)^2, t/a^2)`. Pass `f64::INFINITY` for `nu = inf`.
pub fn j1(t: f64, a: f64, nu: f64, ctl: SeriesCtl) -> Result<f64> {
    ctl.validate()?;
    check_j(t, nu)?;
    if !(a > 0.0) || !a.is_finite() {
        return domain(format!("a must be positive, got {a}"));
    }
    j_integral(t, a, nu, |_| 1.0, 1, ctl)
}

/// Large-`t` limit of `t * J1(t, a, nu)`: `-a G(1/nu^2, 1/2)`.
pub fn j1_limit(a: f64, nu: f64, ctl: SeriesCtl) -> Result<f64> {
    if nu.is_infinite() {
        return Ok(a);
    }
    Ok(-a * g_eval(GArgs::new(1.0 / (nu * nu), 0.5, 0), ctl)?)
}

/// `(1/a) sum_j pi^2 j^2 exp(-pi^2 j^2 v / 2)` with `v = (a/sqrt(t) + nu)^{-2}`,
/// which dominates `|J1(t, a, nu)|`. Infinite when `nu` is.
pub fn j1_bound(t: f64, a: f64, nu: f64, ctl: SeriesCtl) -> Result<f64> {
    if nu.is_infinite() {
        return Ok(f64::INFINITY);
    }
    let v = (a / t.sqrt() + nu).powi(-2);
    Ok(-g_eval(GArgs::new(v, 0.0, 1), ctl)? / a)
}

/// `J2`: the `J1` integral with the extra factor `exp(-sqrt(t/u))` and no sign flip.
pub fn j2(t: f64, a: f64, nu: f64, ctl: SeriesCtl) -> Result<f64> {
    ctl.validate()?;
    check_j(t, nu)?;
    if !(a >= 0.0) || !a.is_finite() {
        return domain(format!("a must be non-negative, got {a}"));
    }
    if a == 0.0 {
        return Ok(0.0);
    }
    j_integral(t, a, nu, |u| (-(t / u).sqrt()).exp(), 0, ctl)
}
