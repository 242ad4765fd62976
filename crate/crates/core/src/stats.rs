//! Weighted empirical distributions and goodness-of-fit distances.

use crate::error::{domain, Error, Result};
use crate::quad::{integrate, QuadCtl};

/// Right-continuous step function with normalized cumulative weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedEcdf {
    xs: Vec<f64>,
    cum: Vec<f64>,
}

impl WeightedEcdf {
    /// Jump locations, increasing.
    pub fn support(&self) -> &[f64] {
        &self.xs
    }

    /// Cumulative weights at the jumps; the last one is 1.
    pub fn cumulative(&self) -> &[f64] {
        &self.cum
    }

    /// `F(x)`.
    pub fn eval(&self, x: f64) -> f64 {
        let k = self.xs.partition_point(|&v| v <= x);
        if k == 0 {
            0.0
        } else {
            self.cum[k - 1]
        }
    }

    /// `F(x-)`.
    pub fn eval_left(&self, x: f64) -> f64 {
        let k = self.xs.partition_point(|&v| v < x);
        if k == 0 {
            0.0
        } else {
            self.cum[k - 1]
        }
    }

    /// Smallest support point `x` with `F(x) >= p`.
    pub fn quantile(&self, p: f64) -> f64 {
        let k = self.cum.partition_point(|&c| c < p);
        self.xs[k.min(self.xs.len() - 1)]
    }
}

/// Builds the ECDF of `(value, weight)` pairs; tied values are merged.
pub fn weighted_ecdf(points: &[(f64, f64)]) -> Result<WeightedEcdf> {
    if points.is_empty() {
        return Err(Error::EmptyInput);
    }
    if let Some(p) = points.iter().find(|p| !(p.1 > 0.0) || !p.1.is_finite() || !p.0.is_finite()) {
        return domain(format!("points need finite values and positive weights, got {p:?}"));
    }
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = sorted.iter().map(|p| p.1).sum();
    let mut xs = Vec::with_capacity(sorted.len());
    let mut cum = Vec::with_capacity(sorted.len());
    let mut acc = 0.0;
    for (x, w) in sorted {
        acc += w;
        if xs.last() == Some(&x) {
            *cum.last_mut().expect("nonempty") = acc / total;
        } else {
            xs.push(x);
            cum.push(acc / total);
        }
    }
    *cum.last_mut().expect("nonempty") = 1.0;
    Ok(WeightedEcdf { xs, cum })
}

/// `sup_x |F_hat(x) - F(x)|`, attained at a jump from one side or the other.
pub fn ks_distance<F>(ecdf: &WeightedEcdf, mut cdf: F) -> f64
where
    F: FnMut(f64) -> f64,
{
    let mut worst: f64 = 0.0;
    let mut below = 0.0;
    for (x, c) in ecdf.xs.iter().zip(&ecdf.cum) {
        let f = cdf(*x);
        worst = worst.max((c - f).abs()).max((below - f).abs());
        below = *c;
    }
    worst
}

/// As [`ks_distance`] for a fallible CDF evaluator.
pub fn try_ks_distance<F>(ecdf: &WeightedEcdf, mut cdf: F) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut err = None;
    let d = ks_distance(ecdf, |x| match cdf(x) {
        Ok(v) => v,
        Err(e) => {
            err.get_or_insert(e);
            f64::NAN
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(d),
    }
}

/// `sup_x |F(x) - G(x)|` between two step functions.
pub fn ks_two_sample(a: &WeightedEcdf, b: &WeightedEcdf) -> f64 {
    a.xs.iter()
        .chain(&b.xs)
        .map(|&x| (a.eval(x) - b.eval(x)).abs())
        .fold(0.0, f64::max)
}

/// Empirical mass in each bin `[edges[i], edges[i+1])` (the last bin is
/// closed) and the fraction of weight outside all bins.
pub fn binned_masses(points: &[(f64, f64)], edges: &[f64]) -> Result<(Vec<f64>, f64)> {
    if points.is_empty() {
        return Err(Error::EmptyInput);
    }
    if edges.len() < 2 || edges.windows(2).any(|w| !(w[1] > w[0])) {
        return domain("bin edges must be strictly increasing, at least two of them");
    }
    let mut mass = vec![0.0; edges.len() - 1];
    let mut total = 0.0;
    let mut outside = 0.0;
    let last = *edges.last().expect("nonempty");
    for &(x, w) in points {
        total += w;
        if x == last {
            *mass.last_mut().expect("nonempty") += w;
            continue;
        }
        let k = edges.partition_point(|&e| e <= x);
        if k == 0 || k == edges.len() {
            outside += w;
        } else {
            mass[k - 1] += w;
        }
    }
    if !(total > 0.0) {
        return domain("total weight must be positive");
    }
    for m in &mut mass {
        *m /= total;
    }
    Ok((mass, outside / total))
}

/// Largest fraction of weight allowed outside the bins.
pub const MAX_OUTSIDE: f64 = 0.01;

/// `1/2 sum |empirical - model|` over bins, with model masses given.
pub fn tv_from_masses(points: &[(f64, f64)], model: &[f64], edges: &[f64]) -> Result<f64> {
    let (emp, outside) = binned_masses(points, edges)?;
    if model.len() != emp.len() {
        return domain(format!("{} model masses for {} bins", model.len(), emp.len()));
    }
    if outside > MAX_OUTSIDE {
        return Err(Error::Coverage { fraction: outside });
    }
    Ok(0.5 * emp.iter().zip(model).map(|(e, m)| (e - m).abs()).sum::<f64>())
}

/// Model mass of each bin, by quadrature of `density`.
pub fn bin_masses<F>(mut density: F, edges: &[f64]) -> Result<Vec<f64>>
where
    F: FnMut(f64) -> Result<f64>,
{
    let ctl = QuadCtl {
        abs_tol: 1e-13,
        rel_tol: 1e-10,
        max_intervals: 500,
    };
    edges
        .windows(2)
        .map(|w| integrate(&mut density, &[w[0], w[1]], ctl).map(|r| r.value))
        .collect()
}

/// Total variation between the weighted points and `density` over the bins.
pub fn tv_binned<F>(points: &[(f64, f64)], density: F, edges: &[f64]) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let model = bin_masses(density, edges)?;
    tv_from_masses(points, &model, edges)
}

/// Edges of `bins` bins of equal model probability inside `[lo, hi]`, found
/// by integrating `density` on `cells` equal cells and inverting the
/// piecewise-linear CDF.
pub fn equiprobable_edges<F>(mut density: F, lo: f64, hi: f64, bins: usize, cells: usize) -> Result<Vec<f64>>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(hi > lo) || bins < 1 || cells < bins {
        return domain("need lo < hi and cells >= bins >= 1");
    }
    let grid: Vec<f64> = (0..=cells).map(|i| lo + (hi - lo) * i as f64 / cells as f64).collect();
    let masses = bin_masses(&mut density, &grid)?;
    let mut cdf = vec![0.0];
    for m in &masses {
        cdf.push(cdf.last().expect("nonempty") + m.max(0.0));
    }
    let total = *cdf.last().expect("nonempty");
    if !(total > 0.0) {
        return domain("density has no mass on the interval");
    }
    let mut edges = vec![lo];
    for k in 1..bins {
        let target = total * k as f64 / bins as f64;
        let i = cdf.partition_point(|&c| c < target).clamp(1, cells);
        let (c0, c1) = (cdf[i - 1], cdf[i]);
        let frac = if c1 > c0 { (target - c0) / (c1 - c0) } else { 0.5 };
        edges.push(grid[i - 1] + frac * (grid[i] - grid[i - 1]));
    }
    edges.push(hi);
    Ok(edges)
}
