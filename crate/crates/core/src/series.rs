//! Truncated series summation with explicit tail bounds.

use crate::error::{domain, Error, Result};

/// Truncation control shared by every series evaluator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesCtl {
    /// Absolute tolerance on the neglected tail.
    pub tol: f64,
    /// Hard cap on the number of summed terms.
    pub max_terms: usize,
}

impl Default for SeriesCtl {
    fn default() -> Self {
        Self {
            tol: 1e-14,
            max_terms: 512,
        }
    }
}

impl SeriesCtl {
    pub fn new(tol: f64, max_terms: usize) -> Result<Self> {
        let ctl = Self { tol, max_terms };
        ctl.validate()?;
        Ok(ctl)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || !self.tol.is_finite() {
            return domain(format!("series tolerance must be positive, got {}", self.tol));
        }
        if self.max_terms < 8 {
            return domain(format!("max_terms must be at least 8, got {}", self.max_terms));
        }
        Ok(())
    }

    /// Same tolerance, cap raised to at least `cap`.
    pub fn with_min_cap(self, cap: usize) -> Self {
        Self {
            tol: self.tol,
            max_terms: self.max_terms.max(cap),
        }
    }
}

/// A summed series together with the bound on what was left out.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summed {
    pub value: f64,
    pub tail_bound: f64,
    pub terms: usize,
}

/// Neumaier compensated accumulator.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct Accum {
    sum: f64,
    comp: f64,
}

impl Accum {
    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Sums `term(k)` for `k = first, first + 1, ...`.
///
/// `term` returns the k-th value and a rigorous bound on the absolute sum of
/// every later term. Summation stops once that bound drops below `tol`.
pub(crate) fn sum_with_tail<F>(
    what: &'static str,
    tol: f64,
    max_terms: usize,
    first: usize,
    mut term: F,
) -> Result<Summed>
where
    F: FnMut(usize) -> (f64, f64),
{
    let mut acc = Accum::default();
    for n in 0..max_terms {
        let (v, tail) = term(first + n);
        acc.add(v);
        if tail <= tol {
            return Ok(Summed {
                value: acc.value(),
                tail_bound: tail,
                terms: n + 1,
            });
        }
    }
    Err(Error::TermCapExceeded {
        what,
        max_terms,
        tol,
    })
}

/// Bound on `sum_{k > n} amp * k^pow * exp(-rate * k^2)` for `rate > 0`.
///
/// Consecutive ratios of the summand decrease in k, so the tail is dominated
/// by a geometric series started at `k = n + 1`. Returns infinity when that
/// ratio is not yet below one.
pub(crate) fn gauss_tail(amp: f64, pow: i32, rate: f64, n: usize) -> f64 {
    let k = (n + 1) as f64;
    let first = amp * k.powi(pow) * (-rate * k * k).exp();
    if first == 0.0 {
        return 0.0;
    }
    let ratio = ((k + 1.0) / k).powi(pow.max(0)) * (-rate * (2.0 * k + 1.0)).exp();
    if ratio >= 1.0 {
        f64::INFINITY
    } else {
        first / (1.0 - ratio)
    }
}
