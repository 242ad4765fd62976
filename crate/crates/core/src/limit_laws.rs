//! Limit laws under the conditioned measure: the exponential minimum, the
//! theta-CDF of the rescaled maximum, and the Bessel-3 mixture together with
//! an exact sampler of it.

use std::f64::consts::PI;

use rand::distributions::Open01;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{domain, Result};
use crate::quad::{integrate, QuadCtl};
use crate::series::SeriesCtl;
use crate::special_fn::{g_eval, GArgs};

/// Limit of `Q_t(-m_t <= A)`: `1 - exp(-h A)`.
pub fn min_cdf(a: f64, h: f64) -> f64 {
    if a <= 0.0 {
        0.0
    } else {
        -(-h * a).exp_m1()
    }
}

/// Limit of `Q_t(M_t / sqrt(t) <= x)`: `T(x) = -G(1/x^2, 1/2)`. It does not
/// depend on the drift.
pub fn max_cdf(x: f64, ctl: SeriesCtl) -> Result<f64> {
    if !(x > 0.0) {
        return domain(format!("x must be positive, got {x}"));
    }
    if x.is_infinite() {
        return Ok(1.0);
    }
    let g = g_eval(GArgs::new(1.0 / (x * x), 0.5, 0), ctl)?;
    Ok((-g).clamp(0.0, 1.0))
}

/// Density `h^2 a exp(-h a)` of the random barrier.
pub fn level_density(a: f64, h: f64) -> f64 {
    if a <= 0.0 {
        0.0
    } else {
        h * h * a * (-h * a).exp()
    }
}

/// The random barrier below which the limiting process never goes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixtureLevel {
    pub a: f64,
    pub h: f64,
}

impl MixtureLevel {
    /// Draws `a` from `level_density(., h)`: a Gamma(2) variable with scale `1/h`.
    pub fn draw<R: Rng + ?Sized>(rng: &mut R, h: f64) -> Self {
        let u1: f64 = rng.sample(Open01);
        let u2: f64 = rng.sample(Open01);
        Self {
            a: -(u1.ln() + u2.ln()) / h,
            h,
        }
    }

    pub fn density(&self) -> f64 {
        level_density(self.a, self.h)
    }
}

fn gauss(x: f64, var: f64) -> f64 {
    (-x * x / (2.0 * var)).exp() / (2.0 * PI * var).sqrt()
}

/// Density at `x` of the limiting process at time `u`:
/// `int_{max(0,-x)}^inf h^2 e^{-ha} (x + a) [phi_u(x) - phi_u(x + 2a)] da`.
///
/// The `a`-integral is cut at `max(0,-x) + 40/h`; the neglected part is below
/// `(|x| + 41/h) h e^{-40} / sqrt(2 pi u)`.
pub fn endpoint_density(x: f64, u: f64, h: f64, _ctl: SeriesCtl) -> Result<f64> {
    if !(u > 0.0) || !(h > 0.0) || !x.is_finite() {
        return domain(format!("need u > 0, h > 0 and finite x (u={u}, h={h}, x={x})"));
    }
    let lo = (-x).max(0.0);
    let hi = lo + 40.0 / h;
    let mut breaks = vec![lo];
    for f in [0.1, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0] {
        breaks.push(lo + f / h);
    }
    for f in [0.25, 0.5, 1.0, 2.0] {
        let b = lo + f * u.sqrt();
        if b < hi {
            breaks.push(b);
        }
    }
    breaks.push(hi);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let px = gauss(x, u);
    let r = integrate(
        |a| Ok(h * h * (-h * a).exp() * (x + a) * (px - gauss(x + 2.0 * a, u))),
        &breaks,
        QuadCtl {
            abs_tol: 1e-15,
            rel_tol: 1e-12,
            max_intervals: 2000,
        },
    )?;
    Ok(r.value.max(0.0))
}

/// One path of the limiting process `Y_s = R_s - a` on a grid, where `R` is
/// a Bessel-3 process started at the random level `a`.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitPath {
    pub level: f64,
    pub step: f64,
    /// `Y` at grid times `0, step, 2 step, ...`; `values[0] = 0`.
    pub values: Vec<f64>,
    /// Smallest grid value.
    pub grid_min: f64,
    /// Exact infimum over the whole time span (grid values refined by the
    /// within-step Bessel-3 bridge minimum).
    pub infimum: f64,
}

/// Endpoint and extremes of a limit path, without the grid values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitSummary {
    pub level: f64,
    pub endpoint: f64,
    pub grid_min: f64,
    pub infimum: f64,
}

fn grid_steps(u: f64, delta: f64) -> Result<usize> {
    if !(u > 0.0) || !(delta > 0.0) || !u.is_finite() {
        return domain(format!("need u > 0 and step > 0 (u={u}, step={delta})"));
    }
    let n = (u / delta).round();
    if n < 1.0 || (n * delta - u).abs() > 1e-9 * u {
        return domain(format!("step {delta} does not divide horizon {u}"));
    }
    Ok(n as usize)
}

/// Runs the radial recursion `R' = |(R + sqrt(d) Z1, sqrt(d) Z2, sqrt(d) Z3)|`,
/// which has the exact Bessel-3 transition law, and tracks the infimum by
/// sampling the Bessel-3 bridge minimum whenever it can matter.
fn walk<R, F>(rng: &mut R, n: usize, delta: f64, h: f64, mut visit: F) -> LimitSummary
where
    R: Rng + ?Sized,
    F: FnMut(f64),
{
    let level = MixtureLevel::draw(rng, h).a;
    let sd = delta.sqrt();
    let mut r = level;
    let mut grid_min = level;
    let mut inf = level;
    visit(0.0);
    for _ in 0..n {
        let z1: f64 = rng.sample(StandardNormal);
        let z2: f64 = rng.sample(StandardNormal);
        let z3: f64 = rng.sample(StandardNormal);
        let u: f64 = rng.sample(Open01);
        let x = r + sd * z1;
        let next = (x * x + delta * (z2 * z2 + z3 * z3)).sqrt();
        // P(bridge min < inf) is about exp(-2 (r - inf)(next - inf) / delta).
        let gap = 2.0 * (r - inf) * (next - inf) / delta;
        if gap <= 40.0 {
            let d = next - r;
            let s = next + r;
            let log_rhs = -d * d / (2.0 * delta) + (u + (1.0 - u) * (-2.0 * r * next / delta).exp()).ln();
            let m = 0.5 * (s - (-2.0 * delta * log_rhs).max(0.0).sqrt());
            inf = inf.min(m.max(0.0));
        }
        r = next;
        grid_min = grid_min.min(r);
        inf = inf.min(r);
        visit(r - level);
    }
    LimitSummary {
        level,
        endpoint: r - level,
        grid_min: grid_min - level,
        infimum: inf - level,
    }
}

/// Samples the limiting process on `[0, u]` with grid step `delta` (which must
/// divide `u`).
pub fn sample_limit_path<R: Rng + ?Sized>(rng: &mut R, u: f64, delta: f64, h: f64) -> Result<LimitPath> {
    if !(h > 0.0) {
        return domain(format!("h must be positive, got {h}"));
    }
    let n = grid_steps(u, delta)?;
    let mut values = Vec::with_capacity(n + 1);
    let s = walk(rng, n, delta, h, |y| values.push(y));
    Ok(LimitPath {
        level: s.level,
        step: delta,
        values,
        grid_min: s.grid_min,
        infimum: s.infimum,
    })
}

/// As [`sample_limit_path`] but keeps only the endpoint and the extremes.
pub fn sample_limit_summary<R: Rng + ?Sized>(rng: &mut R, u: f64, delta: f64, h: f64) -> Result<LimitSummary> {
    if !(h > 0.0) {
        return domain(format!("h must be positive, got {h}"));
    }
    let n = grid_steps(u, delta)?;
    Ok(walk(rng, n, delta, h, |_| {}))
}
