//! The theta-type function `G(v, x)`, its v-derivatives, the alternating
//! `eta` family and the integrand `F(v, t)`.
//!
//! `G` has two representations:
//!
//! * spectral: `G(v,x) = 2 sum_{j>=1} cos(2 pi j x) exp(-pi^2 j^2 v / 2)`,
//!   fast for large `v`;
//! * Gaussian (Poisson-summed): `G(v,x) = sqrt(2/(pi v)) sum_{j in Z} exp(-2 (j-x)^2 / v) - 1`,
//!   fast for small `v`.
//!
//! [`g_eval`] switches between them at `v = 2/pi`. Derivatives in `v` are
//! taken term by term.

use std::f64::consts::PI;

use crate::error::{domain, Result};
use crate::series::{gauss_tail, sum_with_tail, SeriesCtl, Summed};

/// Below this `v` the spectral form is considered unusable even for `l = 0`.
pub const V_MIN: f64 = 1e-12;

/// Switch point between the two representations.
pub const V_SWITCH: f64 = 2.0 / PI;

/// Arguments of `G^{(l)}(v, x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GArgs {
    pub v: f64,
    pub x: f64,
    /// Derivative order in `v`.
    pub l: u32,
}

impl GArgs {
    pub fn new(v: f64, x: f64, l: u32) -> Self {
        Self { v, x, l }
    }

    fn check(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.x) {
            return domain(format!("phase x must lie in [0, 1], got {}", self.x));
        }
        if !(self.v > 0.0) || !self.v.is_finite() {
            return domain(format!("v must be positive and finite, got {}", self.v));
        }
        Ok(())
    }
}

/// Spectral representation. Accurate to `ctl.tol` for `v >= 2/pi`; at small
/// `v` the tail bound is still honored but the term cap may bind.
pub fn g_spectral(args: GArgs, ctl: SeriesCtl) -> Result<f64> {
    g_spectral_summed(args, ctl).map(|s| s.value)
}

pub fn g_spectral_summed(args: GArgs, ctl: SeriesCtl) -> Result<Summed> {
    ctl.validate()?;
    args.check()?;
    if args.l == 0 && args.v <= V_MIN {
        return domain(format!("v must exceed {V_MIN} for l = 0, got {}", args.v));
    }
    let GArgs { v, x, l } = args;
    let rate = PI * PI * v / 2.0;
    let amp = 2.0 * (PI * PI / 2.0).powi(l as i32);
    let sign = if l % 2 == 1 { -1.0 } else { 1.0 };
    sum_with_tail("G spectral", ctl.tol, ctl.max_terms, 1, |j| {
        let jf = j as f64;
        let lam = PI * PI * jf * jf / 2.0;
        let term = sign * 2.0 * (2.0 * PI * jf * x).cos() * lam.powi(l as i32) * (-lam * v).exp();
        (term, gauss_tail(amp, 2 * l as i32, rate, j))
    })
}

/// Coefficients `c_i` with `d^l/dv^l [v^{-1/2} e^{-a/v}] = e^{-a/v} sum_i c_i v^{-1/2-i}`.
/// With `abs` set, the recurrence runs on absolute values, giving a majorant.
fn gauss_deriv_coeffs(a: f64, l: u32, abs: bool) -> Vec<f64> {
    let n = 2 * l as usize + 1;
    let mut c = vec![0.0; n];
    c[0] = 1.0;
    for _ in 0..l {
        let mut next = vec![0.0; n];
        for k in 0..n {
            if c[k] == 0.0 {
                continue;
            }
            let down = -0.5 - k as f64;
            let down = if abs { down.abs() } else { down };
            if k + 1 < n {
                next[k + 1] += down * c[k];
            }
            if k + 2 < n {
                next[k + 2] += a * c[k];
            }
        }
        c = next;
    }
    c
}

fn gauss_term(d: f64, v: f64, l: u32, abs: bool) -> f64 {
    let a = 2.0 * d * d;
    let c = gauss_deriv_coeffs(a, l, abs);
    let mut poly = 0.0;
    for (i, ci) in c.iter().enumerate() {
        if *ci != 0.0 {
            poly += ci * v.powf(-0.5 - i as f64);
        }
    }
    let sum = (2.0 / PI).sqrt() * poly * (-a / v).exp();
    if abs {
        sum.abs()
    } else {
        sum
    }
}

/// Bound on the terms at distances `d + 1, d + 2, ...` from the phase.
fn gauss_side_tail(d: f64, v: f64, l: u32) -> f64 {
    let next = d + 1.0;
    let first = gauss_term(next, v, l, true);
    if first == 0.0 {
        return 0.0;
    }
    let ratio = ((next + 1.0) / next).powi(2 * l as i32) * (-2.0 * (2.0 * next + 1.0) / v).exp();
    if ratio >= 1.0 {
        f64::INFINITY
    } else {
        first / (1.0 - ratio)
    }
}

/// Gaussian (Poisson-summed) representation, summed outward from the integer
/// nearest `x`. Accurate to `ctl.tol` for `v <= 2/pi`.
pub fn g_poisson(args: GArgs, ctl: SeriesCtl) -> Result<f64> {
    g_poisson_summed(args, ctl).map(|s| s.value)
}

pub fn g_poisson_summed(args: GArgs, ctl: SeriesCtl) -> Result<Summed> {
    ctl.validate()?;
    args.check()?;
    let GArgs { v, x, l } = args;
    let n0 = x.round();
    let off = n0 - x;
    let centre = gauss_term(off, v, l, false);
    let half_tol = ctl.tol / 2.0;
    // j = n0 + k has distance k + off, j = n0 - k has distance k - off.
    let up = sum_with_tail("G Poisson", half_tol, ctl.max_terms, 1, |k| {
        let d = k as f64 + off;
        (gauss_term(d, v, l, false), gauss_side_tail(d, v, l))
    })?;
    let down = sum_with_tail("G Poisson", half_tol, ctl.max_terms, 1, |k| {
        let d = k as f64 - off;
        (gauss_term(d, v, l, false), gauss_side_tail(d, v, l))
    })?;
    let shift = if l == 0 { 1.0 } else { 0.0 };
    Ok(Summed {
        value: (centre - shift) + (up.value + down.value),
        tail_bound: up.tail_bound + down.tail_bound,
        terms: 1 + up.terms + down.terms,
    })
}

/// `G^{(l)}(v, x)` using the Gaussian form below `v = 2/pi` and the spectral
/// form at or above it.
pub fn g_eval(args: GArgs, ctl: SeriesCtl) -> Result<f64> {
    g_eval_summed(args, ctl).map(|s| s.value)
}

pub fn g_eval_summed(args: GArgs, ctl: SeriesCtl) -> Result<Summed> {
    if args.v < V_SWITCH {
        g_poisson_summed(args, ctl)
    } else {
        g_spectral_summed(args, ctl)
    }
}

/// `eta(k, v) = sum_{j>=1} (-1)^{j+1} (pi j)^{2-2k} exp(-pi^2 j^2 v / 2)` for
/// `k` in `{0, -1, -2, -3, -4}`.
pub fn eta(k: i32, v: f64, ctl: SeriesCtl) -> Result<f64> {
    eta_summed(k, v, ctl).map(|s| s.value)
}

pub fn eta_summed(k: i32, v: f64, ctl: SeriesCtl) -> Result<Summed> {
    ctl.validate()?;
    if !(-4..=0).contains(&k) {
        return domain(format!("eta is supported for k in {{0, -1, -2, -3, -4}}, got {k}"));
    }
    if !(v > 0.0) || !v.is_finite() {
        return domain(format!("v must be positive and finite, got {v}"));
    }
    let pow = 2 - 2 * k;
    let rate = PI * PI * v / 2.0;
    let amp = PI.powi(pow);
    sum_with_tail("eta", ctl.tol, ctl.max_terms, 1, |j| {
        let jf = j as f64;
        let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
        let term = sign * (PI * jf).powi(pow) * (-rate * jf * jf).exp();
        (term, gauss_tail(amp, pow, rate, j))
    })
}

/// `F(v, t) = sum_{j>=1} (-1)^{j+1} pi^2 j^2 (pi^2 j^2 v / t + 1)^{-2} exp(-pi^2 j^2 v / 2)`.
pub fn f_integrand(v: f64, t: f64, ctl: SeriesCtl) -> Result<f64> {
    f_integrand_summed(v, t, ctl).map(|s| s.value)
}

pub fn f_integrand_summed(v: f64, t: f64, ctl: SeriesCtl) -> Result<Summed> {
    ctl.validate()?;
    if !(v > 0.0) || !v.is_finite() {
        return domain(format!("v must be positive and finite, got {v}"));
    }
    if !(t > 0.0) {
        return domain(format!("t must be positive, got {t}"));
    }
    let rate = PI * PI * v / 2.0;
    sum_with_tail("F", ctl.tol, ctl.max_terms, 1, |j| {
        let jf = j as f64;
        let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
        let p2 = PI * PI * jf * jf;
        let damp = 1.0 / (p2 * v / t + 1.0);
        let term = sign * p2 * damp * damp * (-rate * jf * jf).exp();
        (term, gauss_tail(PI * PI, 2, rate, j))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ctl() -> SeriesCtl {
        SeriesCtl::default()
    }

    // T(1) = 2 sum (-1)^{j+1} exp(-pi^2 j^2 / 2), summed in extended precision offline.
    const T_AT_1: f64 = 0.014383761361076754;

    #[test]
    fn large_v_vanishes() {
        let g = g_spectral(GArgs::new(50.0, 0.5, 0), ctl()).unwrap();
        assert!(g.abs() <= 1e-20);
    }

    #[test]
    fn value_at_one_half() {
        let g = g_spectral(GArgs::new(1.0, 0.5, 0), ctl()).unwrap();
        assert!((g + T_AT_1).abs() < 1e-15, "{g}");
    }

    #[test]
    fn positive_at_zero_phase() {
        assert!(g_spectral(GArgs::new(0.5, 0.0, 0), ctl()).unwrap() > 0.0);
    }

    #[test]
    fn gaussian_form_small_v_limit() {
        let g = g_poisson(GArgs::new(0.01, 0.5, 0), ctl()).unwrap();
        assert!((g + 1.0).abs() < 1e-12);
    }

    #[test]
    fn gaussian_form_against_short_direct_sum() {
        let v: f64 = 0.1;
        let direct: f64 = (-3..=3)
            .map(|j: i32| (-2.0 * (j as f64).powi(2) / v).exp())
            .sum::<f64>()
            * (2.0 / (PI * v)).sqrt()
            - 1.0;
        let g = g_poisson(GArgs::new(v, 0.0, 0), ctl()).unwrap();
        assert!((g - direct).abs() < 1e-14);
        assert!((g - ((2.0 / (0.1 * PI)).sqrt() - 1.0)).abs() < 1e-7);
    }

    #[test]
    fn first_derivative_small_v_at_zero_phase() {
        // d/dv sqrt(2/(pi v)) = -(1/2) sqrt(2/pi) v^{-3/2}
        let v: f64 = 0.05;
        let g = g_poisson(GArgs::new(v, 0.0, 1), ctl()).unwrap();
        let lead = -0.5 * (2.0 / PI).sqrt() * v.powf(-1.5);
        assert!(g < 0.0);
        assert!((g / lead - 1.0).abs() < 1e-6);
    }

    #[test]
    fn switch_point_continuity() {
        for x in [0.0, 0.25, 0.5] {
            for l in 0..3 {
                let a = GArgs::new(V_SWITCH, x, l);
                let s = g_spectral(a, ctl()).unwrap();
                let p = g_poisson(a, ctl()).unwrap();
                assert!((s - p).abs() < 1e-12, "x={x} l={l}: {s} vs {p}");
            }
        }
    }

    #[test]
    fn dispatch_rule() {
        let a = GArgs::new(10.0, 0.25, 0);
        assert_eq!(g_eval(a, ctl()).unwrap(), g_spectral(a, ctl()).unwrap());
        let b = GArgs::new(0.01, 0.5, 0);
        assert_eq!(g_eval(b, ctl()).unwrap(), g_poisson(b, ctl()).unwrap());
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(g_eval(GArgs::new(0.0, 0.5, 0), ctl()).is_err());
        assert!(g_eval(GArgs::new(1.0, 1.5, 0), ctl()).is_err());
        assert!(g_eval(GArgs::new(1.0, -0.1, 1), ctl()).is_err());
        assert!(g_spectral(GArgs::new(1e-13, 0.5, 0), ctl()).is_err());
        assert!(eta(1, 1.0, ctl()).is_err());
        assert!(eta(-5, 1.0, ctl()).is_err());
    }

    #[test]
    fn spectral_form_hits_cap_at_tiny_v() {
        let r = g_spectral(GArgs::new(1e-6, 0.5, 1), ctl());
        assert!(matches!(r, Err(crate::Error::TermCapExceeded { .. })));
    }

    #[test]
    fn representations_agree_on_log_grid() {
        let mut worst: f64 = 0.0;
        for i in 0..41 {
            let v = 0.05 * (400.0f64).powf(i as f64 / 40.0);
            for x in [0.0, 0.25, 0.5] {
                for l in 0..3 {
                    let a = GArgs::new(v, x, l);
                    let d = g_spectral(a, ctl()).unwrap() - g_poisson(a, ctl()).unwrap();
                    worst = worst.max(d.abs());
                }
            }
        }
        assert!(worst <= 1e-10, "{worst}");
    }

    #[test]
    fn eta_matches_derivatives_at_one_half() {
        for l in 1..=3u32 {
            for v in [0.5, 1.0, 2.0] {
                let e = eta(1 - l as i32, v, ctl()).unwrap();
                let sign = if (l - 1) % 2 == 0 { 1.0 } else { -1.0 };
                let g = sign * 2f64.powi(l as i32 - 1) * g_eval(GArgs::new(v, 0.5, l), ctl()).unwrap();
                assert!((e - g).abs() <= 1e-10, "l={l} v={v}: {e} vs {g}");
            }
        }
        let e0 = eta(0, 1.0, ctl()).unwrap();
        let g1 = g_eval(GArgs::new(1.0, 0.5, 1), ctl()).unwrap();
        assert!((e0 - g1).abs() <= 1e-12);
    }

    #[test]
    fn eta_large_v_follows_first_term() {
        for k in [0, -1, -2] {
            let v = 6.0;
            let e = eta(k, v, ctl()).unwrap();
            let first = PI.powi(2 - 2 * k) * (-PI * PI * v / 2.0).exp();
            assert!(e > 0.0);
            assert!((e / first - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn small_v_asymptotics_at_one_half() {
        // Leading form: sqrt(2/pi) * 2 * 2^{-l} * v^{-2l-1/2} * exp(-1/(2v)).
        // The first correction is -l(2l-1) v, so the ratio approaches 1
        // monotonically at rate O(v).
        for l in 1..=3u32 {
            let ratio = |v: f64| {
                let g = g_eval(GArgs::new(v, 0.5, l), ctl()).unwrap();
                let lead = (2.0 / PI).sqrt() * 2.0 * 0.5f64.powi(l as i32)
                    * v.powf(-2.0 * l as f64 - 0.5)
                    * (-0.5 / v).exp();
                g / lead
            };
            let vs = [0.2, 0.1, 0.05, 0.02, 0.01];
            let errs: Vec<f64> = vs.iter().map(|&v| (ratio(v) - 1.0).abs()).collect();
            for w in errs.windows(2) {
                assert!(w[1] < w[0], "l={l}: {errs:?}");
            }
            let c1 = (l * (2 * l - 1)) as f64;
            assert!(errs[4] <= 1.2 * c1 * 0.01, "l={l}: {errs:?}");
        }
    }

    #[test]
    fn theta_cdf_shape() {
        let t = |x: f64| -g_eval(GArgs::new(1.0 / (x * x), 0.5, 0), ctl()).unwrap();
        let mut prev = 0.0;
        for i in 1..=50 {
            let v = t(0.1 * i as f64);
            assert!(v >= prev - 1e-15);
            prev = v;
        }
        assert!(t(0.1) < 1e-20);
        assert!((t(100.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn f_reduces_to_eta_for_huge_t() {
        let f = f_integrand(1.0, 1e12, ctl()).unwrap();
        let e = eta(0, 1.0, ctl()).unwrap();
        assert!((f - e).abs() < 1e-10);
    }

    #[test]
    fn f_triangle_bound() {
        let f = f_integrand(1.0, 10.0, ctl()).unwrap();
        let bound: f64 = (1..50)
            .map(|j| PI * PI * (j * j) as f64 * (-PI * PI * (j * j) as f64 / 2.0).exp())
            .sum();
        assert!(f.abs() <= bound);
    }

    #[test]
    fn f_against_long_direct_sum() {
        let (v, t) = (0.3, 100.0);
        let mut direct = 0.0;
        for j in (1..=10_000).rev() {
            let jf = j as f64;
            let p2 = PI * PI * jf * jf;
            let s = if j % 2 == 1 { 1.0 } else { -1.0 };
            direct += s * p2 / (p2 * v / t + 1.0).powi(2) * (-p2 * v / 2.0).exp();
        }
        let f = f_integrand(v, t, ctl()).unwrap();
        assert!((f - direct).abs() < 1e-12);
    }

    #[test]
    fn derivative_matches_finite_difference() {
        for (v, x) in [(0.3, 0.5), (1.0, 0.25), (0.5, 0.0)] {
            for l in 0..2u32 {
                let h = 1e-5;
                let up = g_eval(GArgs::new(v + h, x, l), ctl()).unwrap();
                let dn = g_eval(GArgs::new(v - h, x, l), ctl()).unwrap();
                let d = g_eval(GArgs::new(v, x, l + 1), ctl()).unwrap();
                let fd = (up - dn) / (2.0 * h);
                assert!((d - fd).abs() < 1e-5 * (1.0 + d.abs()), "v={v} x={x} l={l}");
            }
        }
    }

    proptest! {
        #[test]
        fn prop_representations_agree(v in 0.2f64..3.0, x in 0.0f64..=1.0, l in 0u32..3) {
            let a = GArgs::new(v, x, l);
            let s = g_spectral(a, ctl()).unwrap();
            let p = g_poisson(a, ctl()).unwrap();
            prop_assert!((s - p).abs() <= 1e-10 * (1.0 + s.abs()));
        }

        #[test]
        fn prop_symmetric_in_phase(v in 0.05f64..5.0, x in 0.0f64..=1.0) {
            let a = g_eval(GArgs::new(v, x, 0), ctl()).unwrap();
            let b = g_eval(GArgs::new(v, 1.0 - x, 0), ctl()).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
        }

        #[test]
        fn prop_pure(v in 0.05f64..5.0, x in 0.0f64..=1.0, l in 0u32..3) {
            let a = GArgs::new(v, x, l);
            prop_assert_eq!(g_eval(a, ctl()).unwrap().to_bits(), g_eval(a, ctl()).unwrap().to_bits());
        }
    }
}
