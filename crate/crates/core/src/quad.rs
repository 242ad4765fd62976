//! Globally adaptive 21-point Gauss-Kronrod quadrature.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{domain, Error, Result};

#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadCtl {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadCtl {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-10,
            max_intervals: 2000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub abs_err: f64,
    pub evals: usize,
}

struct Piece {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

fn gk21<F>(f: &mut F, a: f64, b: f64) -> Result<Piece>
where
    F: FnMut(f64) -> Result<f64>,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center)?;
    let mut res_g = 0.0;
    let mut res_k = fc * WGK[10];
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx)?;
        let f2 = f(center + dx)?;
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = res_k * half;
    res_abs *= half.abs();
    res_asc *= half.abs();
    let mut err = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    if !value.is_finite() {
        return Err(Error::QuadratureFailure(format!(
            "non-finite integrand on [{a}, {b}]"
        )));
    }
    Ok(Piece { a, b, value, err })
}

/// Integrates `f` over `[breaks[0], breaks[last]]`, starting from the given
/// subdivision and bisecting the worst interval until the accumulated error
/// estimate meets `max(abs_tol, rel_tol * |I|)`.
pub fn integrate<F>(mut f: F, breaks: &[f64], ctl: QuadCtl) -> Result<QuadResult>
where
    F: FnMut(f64) -> Result<f64>,
{
    if breaks.len() < 2 {
        return domain("quadrature needs at least two break points");
    }
    if breaks.iter().any(|x| !x.is_finite()) || breaks.windows(2).any(|w| w[1] < w[0]) {
        return domain("quadrature break points must be finite and nondecreasing");
    }
    let mut heap = BinaryHeap::new();
    let mut evals = 0;
    for w in breaks.windows(2) {
        if w[1] > w[0] {
            heap.push(gk21(&mut f, w[0], w[1])?);
            evals += 21;
        }
    }
    loop {
        let value: f64 = heap.iter().map(|p| p.value).sum();
        let err: f64 = heap.iter().map(|p| p.err).sum();
        if err <= ctl.abs_tol.max(ctl.rel_tol * value.abs()) {
            return Ok(QuadResult {
                value,
                abs_err: err,
                evals,
            });
        }
        if heap.len() >= ctl.max_intervals {
            return Err(Error::QuadratureFailure(format!(
                "{} intervals used, error estimate {err:e} above target",
                heap.len()
            )));
        }
        let worst = heap.pop().expect("nonempty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            return Err(Error::QuadratureFailure(format!(
                "interval [{}, {}] cannot be bisected further",
                worst.a, worst.b
            )));
        }
        heap.push(gk21(&mut f, worst.a, mid)?);
        heap.push(gk21(&mut f, mid, worst.b)?);
        evals += 42;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let r = integrate(|x| Ok(x.powi(7) - 3.0 * x), &[0.0, 2.0], QuadCtl::default()).unwrap();
        assert!((r.value - (32.0 - 6.0)).abs() < 1e-12);
    }

    #[test]
    fn peaked_integrand() {
        // integral of 1/(1e-4 + x^2) on [-1, 1] = 2 * 100 * atan(100)
        let r = integrate(|x| Ok(1.0 / (1e-4 + x * x)), &[-1.0, 1.0], QuadCtl::default()).unwrap();
        let exact = 200.0 * 100f64.atan();
        assert!((r.value - exact).abs() < 1e-8 * exact);
    }

    #[test]
    fn propagates_integrand_errors() {
        let r = integrate(|_| Err(Error::EmptyInput), &[0.0, 1.0], QuadCtl::default());
        assert_eq!(r, Err(Error::EmptyInput));
    }

    #[test]
    fn reports_failure() {
        let ctl = QuadCtl {
            max_intervals: 4,
            ..QuadCtl::default()
        };
        let r = integrate(|x| Ok(x.abs().sqrt().recip()), &[-1.0, 1.0], ctl);
        assert!(matches!(r, Err(Error::QuadratureFailure(_))));
    }
}
