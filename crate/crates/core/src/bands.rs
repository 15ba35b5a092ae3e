//! Per-sample uniform confidence bands built from beta quantiles of the
//! order statistics, indexed by the ECDF count rather than by value.

use crate::error::{Error, Result};
use crate::specfun::{beta_quantile, BetaParams};

/// Band envelopes for a sample of size `n` at pointwise level `alpha_tilde`.
///
/// With `k` observations at or below `r`, the band at `r` is
/// `[lower_at_count[k], upper_at_count[k]] = [B^a_{k,n}, B^{1-a}_{k+1,n}]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandSpec {
    n: usize,
    alpha_tilde: f64,
    lower_at_count: Vec<f64>,
    upper_at_count: Vec<f64>,
}

pub fn build_band(n: usize, alpha_tilde: f64) -> Result<BandSpec> {
    if n == 0 {
        return Err(Error::domain("band needs n >= 1"));
    }
    if !(alpha_tilde > 0.0 && alpha_tilde < 0.5) {
        return Err(Error::domain(format!(
            "alpha_tilde must lie in (0, 0.5), got {alpha_tilde}"
        )));
    }
    let n_i = n as i64;
    let quantile = |p: f64, k: usize| beta_quantile(p, BetaParams::new(k as i64, n_i)?);
    let lower_at_count = (0..=n)
        .map(|k| quantile(alpha_tilde, k))
        .collect::<Result<Vec<_>>>()?;
    let upper_at_count = (0..=n)
        .map(|k| quantile(1.0 - alpha_tilde, k + 1))
        .collect::<Result<Vec<_>>>()?;
    Ok(BandSpec {
        n,
        alpha_tilde,
        lower_at_count,
        upper_at_count,
    })
}

impl BandSpec {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn alpha_tilde(&self) -> f64 {
        self.alpha_tilde
    }

    pub fn lower_at_count(&self) -> &[f64] {
        &self.lower_at_count
    }

    pub fn upper_at_count(&self) -> &[f64] {
        &self.upper_at_count
    }

    /// `(lower, upper)` for an ECDF count `k`.
    pub fn band_at(&self, k: usize) -> Result<(f64, f64)> {
        if k > self.n {
            return Err(Error::domain(format!("count {k} exceeds n={}", self.n)));
        }
        Ok((self.lower_at_count[k], self.upper_at_count[k]))
    }

    /// Pointwise interval `[B^a_{k,n}, B^{1-a}_{k,n}]` for the k-th order
    /// statistic, `1 <= k <= n`.
    pub fn order_stat_interval(&self, k: usize) -> Option<(f64, f64)> {
        (1..=self.n)
            .contains(&k)
            .then(|| (self.lower_at_count[k], self.upper_at_count[k - 1]))
    }
}
