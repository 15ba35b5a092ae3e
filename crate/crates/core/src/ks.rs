//! Two-sample Kolmogorov-Smirnov baseline.

use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::calibration::replicate_rng;
use crate::samples::{grid_with_counts, GroupedSamples};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsStatistic {
    /// max |F - G|
    pub d: f64,
    /// max (F - G), large when the first group is smaller
    pub d_plus: f64,
    /// max (G - F)
    pub d_minus: f64,
    /// `d * n_x * n_y`, exact
    pub scaled: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    pub d: f64,
    pub d_plus: f64,
    pub d_minus: f64,
    pub p_asymptotic: f64,
    pub p_permutation: Option<f64>,
}

// Gaps are kept as integers k_x*n_y - k_y*n_x so maxima and comparisons
// between shuffles are exact.
fn scaled_gaps(counts: impl Iterator<Item = (usize, usize)>, n_x: usize, n_y: usize) -> (u64, u64) {
    let (mut plus, mut minus) = (0u64, 0u64);
    for (kx, ky) in counts {
        let a = (kx * n_y) as u64;
        let b = (ky * n_x) as u64;
        plus = plus.max(a.saturating_sub(b));
        minus = minus.max(b.saturating_sub(a));
    }
    (plus, minus)
}

pub fn ks_statistic(g: &GroupedSamples) -> KsStatistic {
    let (n_x, n_y) = (g.n_x(), g.n_y());
    let (plus, minus) = scaled_gaps(
        grid_with_counts(g).into_iter().map(|(_, a, b)| (a, b)),
        n_x,
        n_y,
    );
    let denom = (n_x * n_y) as f64;
    KsStatistic {
        d: plus.max(minus) as f64 / denom,
        d_plus: plus as f64 / denom,
        d_minus: minus as f64 / denom,
        scaled: plus.max(minus),
    }
}

/// Limiting Kolmogorov tail probability at `d * sqrt(n_x n_y / (n_x + n_y))`.
pub fn ks_p_asymptotic(d: f64, n_x: usize, n_y: usize) -> f64 {
    let n_eff = (n_x * n_y) as f64 / (n_x + n_y) as f64;
    let lambda = d * n_eff.sqrt();
    if lambda <= 0.0 {
        return 1.0;
    }
    let p = if lambda < 1.0 {
        // Jacobi theta form of the same distribution; the alternating
        // series converges too slowly down here.
        let c = -std::f64::consts::PI.powi(2) / (8.0 * lambda * lambda);
        let mut cdf = 0.0;
        for j in 1..=100 {
            let odd = (2 * j - 1) as f64;
            let term = (c * odd * odd).exp();
            cdf += term;
            if term < 1e-12 * cdf.max(f64::MIN_POSITIVE) {
                break;
            }
        }
        1.0 - (2.0 * std::f64::consts::PI).sqrt() / lambda * cdf
    } else {
        let mut sum = 0.0;
        for j in 1..=100 {
            let j = j as f64;
            let term = (-2.0 * j * j * lambda * lambda).exp();
            sum += if j as u64 % 2 == 1 { term } else { -term };
            if term < 1e-12 {
                break;
            }
        }
        2.0 * sum
    };
    p.clamp(0.0, 1.0)
}

/// Share of label shuffles whose KS distance is at least the observed one.
/// Replicate `b` uses stream `b` of `seed`.
pub fn ks_p_permutation(g: &GroupedSamples, reps: usize, seed: u64) -> f64 {
    let observed = ks_statistic(g).scaled;
    let (n_x, n_y) = (g.n_x(), g.n_y());

    // pooled values in order; positions where the next value differs end a
    // tie block and are the only places the gap is read
    let mut pooled: Vec<f64> = g.x().iter().chain(g.y()).copied().collect();
    pooled.sort_by(f64::total_cmp);
    let block_end: Vec<bool> = (0..pooled.len())
        .map(|i| i + 1 == pooled.len() || pooled[i + 1] != pooled[i])
        .collect();

    let hits: usize = (0..reps)
        .into_par_iter()
        .map_init(Vec::new, |labels: &mut Vec<bool>, b| {
            labels.clear();
            labels.extend(std::iter::repeat_n(false, n_x));
            labels.extend(std::iter::repeat_n(true, n_y));
            labels.shuffle(&mut replicate_rng(seed, b));
            let (mut kx, mut ky) = (0, 0);
            let counts = labels.iter().zip(&block_end).filter_map(|(&is_y, &end)| {
                if is_y {
                    ky += 1;
                } else {
                    kx += 1;
                }
                end.then_some((kx, ky))
            });
            let (plus, minus) = scaled_gaps(counts, n_x, n_y);
            usize::from(plus.max(minus) >= observed)
        })
        .sum();
    hits as f64 / reps as f64
}

pub fn ks_test(g: &GroupedSamples, permutation: Option<(usize, u64)>) -> KsResult {
    let s = ks_statistic(g);
    KsResult {
        d: s.d,
        d_plus: s.d_plus,
        d_minus: s.d_minus,
        p_asymptotic: ks_p_asymptotic(s.d, g.n_x(), g.n_y()),
        p_permutation: permutation.map(|(reps, seed)| ks_p_permutation(g, reps, seed)),
    }
}
