//! Calibration of the pointwise level under the uniform null.
//!
//! Under `F_X = F_Y` continuous, the group labels of the pooled order
//! statistics form a uniformly random arrangement, and the global statistic
//! depends on nothing else. Replicates are therefore drawn as label
//! shuffles rather than as uniform samples.

mod cache;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{CountPair, CrossingTable, GlobalStat, NO_CROSSING};
use crate::error::{Error, Result};

pub use cache::{cache_lookup_or_build, CalibrationCache, SCHEMA_VERSION};

/// Familywise levels the calibration accepts, largest first.
pub const SUPPORTED_ALPHAS: [f64; 3] = [0.10, 0.05, 0.01];
pub const DEFAULT_REPS: usize = 10_000;
pub const DEFAULT_SEED: u64 = 20_180_907;

/// Maps `alpha` onto the matching supported level.
pub fn supported_alpha(alpha: f64) -> Result<f64> {
    SUPPORTED_ALPHAS
        .iter()
        .copied()
        .find(|a| (a - alpha).abs() < 1e-9)
        .ok_or(Error::UnsupportedAlpha(alpha))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRecord {
    pub n_x: usize,
    pub n_y: usize,
    pub alpha: f64,
    pub reps: usize,
    pub seed: u64,
    pub alpha_tilde: f64,
    /// Share of null replicates rejecting anywhere at `alpha_tilde`.
    pub alpha_sim: f64,
    /// Sorted null statistics, [`NO_CROSSING`] for replicates that never
    /// separate.
    pub null_stats: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PValue {
    pub value: f64,
    /// The simulated proportion was zero and `value` is the `1/B` floor.
    pub is_floor: bool,
}

pub(crate) fn replicate_rng(seed: u64, replicate: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate as u64);
    rng
}

/// Global statistic of one label arrangement (`false` = X, `true` = Y),
/// read in pooled rank order.
pub fn arrangement_statistic(labels: &[bool], table: &CrossingTable) -> f64 {
    let (mut kx, mut ky) = (0, 0);
    table.min_statistic(labels.iter().map(|&is_y| {
        if is_y {
            ky += 1;
        } else {
            kx += 1;
        }
        CountPair::new(kx, ky)
    }))
}

fn canonical_labels(n_x: usize, n_y: usize, buf: &mut Vec<bool>) {
    buf.clear();
    buf.extend(std::iter::repeat_n(false, n_x));
    buf.extend(std::iter::repeat_n(true, n_y));
}

/// Sorted global statistics of `reps` random arrangements.
///
/// Replicate `b` draws from its own ChaCha stream `b` of `seed`, so the
/// output does not depend on how work is split across threads.
pub fn simulate_null_stats(n_x: usize, n_y: usize, reps: usize, seed: u64) -> Vec<f64> {
    let table = CrossingTable::new(n_x, n_y);
    simulate_null_stats_with(&table, reps, seed)
}

pub fn simulate_null_stats_with(table: &CrossingTable, reps: usize, seed: u64) -> Vec<f64> {
    let (n_x, n_y) = (table.n_x(), table.n_y());
    let mut stats: Vec<f64> = (0..reps)
        .into_par_iter()
        .map_init(Vec::new, |buf, b| {
            canonical_labels(n_x, n_y, buf);
            buf.shuffle(&mut replicate_rng(seed, b));
            arrangement_statistic(buf, table)
        })
        .collect();
    stats.sort_by(f64::total_cmp);
    stats
}

/// Picks the pointwise level from sorted null statistics: the largest
/// simulated value `v < 0.5` with `#{T <= v} <= floor(alpha * B)`, or just
/// below the smallest statistic when no such value exists.
pub fn calibrate_from_stats(
    n_x: usize,
    n_y: usize,
    alpha: f64,
    reps_seed: (usize, u64),
    null_stats: Vec<f64>,
) -> Result<CalibrationRecord> {
    let alpha = supported_alpha(alpha)?;
    let b = null_stats.len();
    if b == 0 || (alpha * b as f64) < 1.0 - 1e-9 {
        return Err(Error::domain(format!(
            "need at least {} replicates for alpha={alpha}, got {b}",
            (1.0 / alpha).ceil()
        )));
    }
    debug_assert!(null_stats.windows(2).all(|w| w[0] <= w[1]));
    let m = (alpha * b as f64 + 1e-9).floor() as usize;
    let count_le = |v: f64| null_stats.partition_point(|&t| t <= v);

    let mut chosen = None;
    let mut i = m.min(b) - 1;
    loop {
        let v = null_stats[i];
        if v < NO_CROSSING && count_le(v) <= m {
            chosen = Some(v);
            break;
        }
        // step down to the next smaller distinct value
        match null_stats.partition_point(|&t| t < v) {
            0 => break,
            lb => i = lb - 1,
        }
    }
    let alpha_tilde = chosen.unwrap_or_else(|| {
        let below = null_stats[0].next_down();
        if below > 0.0 {
            below
        } else {
            null_stats[0] * 0.5
        }
    });
    let alpha_sim = count_le(alpha_tilde) as f64 / b as f64;
    Ok(CalibrationRecord {
        n_x,
        n_y,
        alpha,
        reps: reps_seed.0,
        seed: reps_seed.1,
        alpha_tilde,
        alpha_sim,
        null_stats,
    })
}

/// Simulates and calibrates one level.
pub fn calibrate(
    n_x: usize,
    n_y: usize,
    alpha: f64,
    reps: usize,
    seed: u64,
) -> Result<CalibrationRecord> {
    let alpha = supported_alpha(alpha)?;
    let stats = simulate_null_stats(n_x, n_y, reps, seed);
    calibrate_from_stats(n_x, n_y, alpha, (reps, seed), stats)
}

/// Simulates once and calibrates every supported level from the same run.
pub fn calibrate_all(
    table: &CrossingTable,
    reps: usize,
    seed: u64,
) -> Result<Vec<CalibrationRecord>> {
    let stats = simulate_null_stats_with(table, reps, seed);
    SUPPORTED_ALPHAS
        .iter()
        .map(|&a| calibrate_from_stats(table.n_x(), table.n_y(), a, (reps, seed), stats.clone()))
        .collect()
}

/// Share of null statistics at or below the observed one, floored at `1/B`.
pub fn p_value(stat: &GlobalStat, record: &CalibrationRecord) -> Result<PValue> {
    if stat.n_x != record.n_x || stat.n_y != record.n_y {
        return Err(Error::SizeMismatch {
            expected_x: record.n_x,
            expected_y: record.n_y,
            got_x: stat.n_x,
            got_y: stat.n_y,
        });
    }
    let b = record.null_stats.len() as f64;
    let t = stat.value();
    let hits = record.null_stats.partition_point(|&s| s <= t);
    Ok(if hits == 0 {
        PValue {
            value: 1.0 / b,
            is_floor: true,
        }
    } else {
        PValue {
            value: hits as f64 / b,
            is_floor: false,
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record_from(stats: Vec<f64>, alpha: f64) -> CalibrationRecord {
        calibrate_from_stats(3, 3, alpha, (stats.len(), 1), stats).unwrap()
    }

    fn stat(t: Option<f64>) -> GlobalStat {
        GlobalStat {
            t_obs: t,
            argmin_point: None,
            argmin_index: None,
            n_x: 3,
            n_y: 3,
        }
    }

    #[test]
    fn unsupported_alpha_is_rejected() {
        assert!(matches!(
            calibrate(3, 3, 0.03, 100, 1),
            Err(Error::UnsupportedAlpha(_))
        ));
        assert_eq!(supported_alpha(0.1).unwrap(), 0.10);
    }

    #[test]
    fn too_few_reps_is_rejected() {
        assert!(calibrate(3, 3, 0.01, 50, 1).is_err());
        assert!(calibrate(3, 3, 0.01, 100, 1).is_ok());
    }

    #[test]
    fn n1_arrangements_never_cross() {
        let stats = simulate_null_stats(1, 1, 200, 7);
        assert!(stats.iter().all(|&s| s == NO_CROSSING));
        let rec = calibrate_from_stats(1, 1, 0.1, (200, 7), stats).unwrap();
        assert!(rec.alpha_tilde < 0.5 && rec.alpha_tilde > 0.0);
        assert_eq!(rec.alpha_sim, 0.0);
    }

    #[test]
    fn selection_rule_respects_ties() {
        // 10 stats, alpha 0.1 -> m = 1
        let mut s = vec![0.2; 10];
        s[0] = 0.1;
        let r = record_from(s.clone(), 0.1);
        assert_eq!(r.alpha_tilde, 0.1);
        assert_eq!(r.alpha_sim, 0.1);

        // tie at the m-th value pushes the level below it
        s[1] = 0.1;
        let r = record_from(s, 0.1);
        assert!(r.alpha_tilde < 0.1);
        assert_eq!(r.alpha_sim, 0.0);
    }

    #[test]
    fn selection_skips_the_sentinel() {
        let mut s = vec![NO_CROSSING; 10];
        s[0] = 0.3;
        let r = record_from(s, 0.1);
        assert_eq!(r.alpha_tilde, 0.3);
    }

    #[test]
    fn p_value_floor_and_top() {
        let stats: Vec<f64> = (1..=10_000).map(|i| i as f64 * 1e-5).collect();
        let rec = calibrate_from_stats(3, 3, 0.05, (10_000, 1), stats).unwrap();
        let p = p_value(&stat(Some(1e-9)), &rec).unwrap();
        assert_eq!(p.value, 0.0001);
        assert!(p.is_floor);
        let p = p_value(&stat(Some(0.1)), &rec).unwrap();
        assert_eq!(p.value, 1.0);
        assert!(!p.is_floor);
        let p = p_value(&stat(None), &rec).unwrap();
        assert_eq!(p.value, 1.0);
    }

    #[test]
    fn p_value_size_mismatch() {
        let rec = record_from(vec![0.1; 10], 0.1);
        let mut s = stat(Some(0.1));
        s.n_x = 4;
        assert!(matches!(p_value(&s, &rec), Err(Error::SizeMismatch { .. })));
    }

    #[test]
    fn simulation_is_deterministic_and_sorted() {
        let a = simulate_null_stats(7, 5, 500, 42);
        let b = simulate_null_stats(7, 5, 500, 42);
        assert_eq!(a, b);
        assert!(a.windows(2).all(|w| w[0] <= w[1]));
        let c = simulate_null_stats(7, 5, 500, 43);
        assert_ne!(a, c);
    }

    #[test]
    fn deterministic_across_pool_sizes() {
        let one = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let four = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap();
        let a = one.install(|| simulate_null_stats(9, 6, 1000, 5));
        let b = four.install(|| simulate_null_stats(9, 6, 1000, 5));
        assert_eq!(a, b);
    }

    #[test]
    fn alpha_sim_never_exceeds_alpha() {
        for &(nx, ny) in &[(3, 3), (5, 8), (12, 12)] {
            let table = CrossingTable::new(nx, ny);
            for rec in calibrate_all(&table, 2000, 11).unwrap() {
                assert!(
                    rec.alpha_sim <= rec.alpha + 1e-12,
                    "{nx} {ny} {}",
                    rec.alpha
                );
                let count = rec
                    .null_stats
                    .iter()
                    .filter(|&&t| t <= rec.alpha_tilde)
                    .count();
                assert_eq!(rec.alpha_sim, count as f64 / 2000.0);
            }
        }
    }
}
