//! Pointwise testing core.
//!
//! At a value `r` the two bands are compared through the ECDF counts
//! `(k_x, k_y)` only. For every count pair there is a threshold level: the
//! smallest pointwise level at which one band lies strictly above the
//! other. The global statistic is the minimum threshold over the pooled
//! grid, so "some point is rejected at level a" is exactly "statistic <= a".

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use crate::error::{Error, Result};
use crate::samples::{grid_with_counts, GroupedSamples};
use crate::specfun::{ln_beta_pdf, ln_inc_beta_tails};

/// Stand-in statistic for "the bands never separate below 0.5". Every
/// real threshold is strictly smaller.
pub const NO_CROSSING: f64 = 0.5;

const CROSSING_EPS: f64 = 1e-12;

/// Counts of X and Y observations at or below some value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CountPair {
    pub k_x: usize,
    pub k_y: usize,
}

impl CountPair {
    pub fn new(k_x: usize, k_y: usize) -> Self {
        CountPair { k_x, k_y }
    }
}

/// Level `a` at which `B^a_{k_lo, n_lo} = B^{1-a}_{k_up+1, n_up}`, i.e. the
/// lower envelope of the first sample meets the upper envelope of the
/// second; `None` if that happens only at `a >= 0.5`.
///
/// Solved in value space: at the meeting point `x`, `I_x(k_lo, n_lo+1-k_lo)
/// = a` and `1 - I_x(k_up+1, n_up-k_up) = a`, so `x` is the root of the
/// increasing function `ln F_lo(x) - ln S_up(x)`.
fn directional_crossing(k_lo: usize, n_lo: usize, k_up: usize, n_up: usize) -> Option<f64> {
    // a zero lower envelope or a unit upper envelope can never separate
    if k_lo == 0 || k_up >= n_up {
        return None;
    }
    let (a1, b1) = (k_lo as f64, (n_lo + 1 - k_lo) as f64);
    let (a2, b2) = ((k_up + 1) as f64, (n_up - k_up) as f64);

    let eval = |x: f64| {
        let (ln_f1, _) = ln_inc_beta_tails(x, a1, b1);
        let (_, ln_s2) = ln_inc_beta_tails(x, a2, b2);
        (ln_f1, ln_s2)
    };

    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let mut x = 0.5 * (a1 / (a1 + b1) + a2 / (a2 + b2));
    let half = 0.5_f64.ln();
    let mut last = eval(x);
    for _ in 0..400 {
        let (ln_f1, ln_s2) = last;
        // both tails >= 1/2 here means the meeting level is >= 1/2
        if ln_f1 >= half && ln_s2 >= half {
            return None;
        }
        let phi = ln_f1 - ln_s2;
        if phi == 0.0 {
            break;
        }
        if phi < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let slope = (ln_beta_pdf(x, a1, b1) - ln_f1).exp() + (ln_beta_pdf(x, a2, b2) - ln_s2).exp();
        let mut next = x - phi / slope;
        if !(next.is_finite() && next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        let done = (next - x).abs() <= 2.0 * f64::EPSILON * x.max(f64::MIN_POSITIVE)
            || hi - lo <= 2.0 * f64::EPSILON * hi;
        x = next;
        last = eval(x);
        if done {
            break;
        }
    }
    let (ln_f1, ln_s2) = last;
    let level = (0.5 * (ln_f1 + ln_s2)).exp();
    if level >= NO_CROSSING - CROSSING_EPS {
        None
    } else {
        Some(level.max(f64::MIN_POSITIVE))
    }
}

/// Smallest pointwise level at which the bands separate at counts `c`,
/// in either direction. `None` when they overlap for every level below 0.5.
///
/// Exactly symmetric under exchanging the groups and under reflecting the
/// counts to `(n_x - k_x, n_y - k_y)`, so tied thresholds compare equal.
pub fn crossing_alpha(c: CountPair, n_x: usize, n_y: usize) -> Option<f64> {
    debug_assert!(c.k_x <= n_x && c.k_y <= n_y);
    let mirrored = CountPair::new(n_x - c.k_x, n_y - c.k_y);
    let lexi_key = |p: CountPair, nx: usize, ny: usize| {
        // order-free in the groups so that a swap picks the same side
        if nx < ny || (nx == ny && p.k_x <= p.k_y) {
            (p.k_x, p.k_y)
        } else {
            (p.k_y, p.k_x)
        }
    };
    let c = if lexi_key(mirrored, n_x, n_y) < lexi_key(c, n_x, n_y) {
        mirrored
    } else {
        c
    };
    let x_above = directional_crossing(c.k_x, n_x, c.k_y, n_y);
    let y_above = directional_crossing(c.k_y, n_y, c.k_x, n_x);
    match (x_above, y_above) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, b) => a.or(b),
    }
}

const DENSE_LIMIT: usize = 1 << 24;
const UNSET: u64 = u64::MAX;
const SHARDS: usize = 64;

enum Store {
    Dense(Vec<AtomicU64>),
    Sharded(Vec<Mutex<HashMap<CountPair, f64>>>),
}

/// Lazily filled memo of [`crossing_alpha`] for one `(n_x, n_y)`.
///
/// Safe to share between threads: entries are pure functions of their
/// key, so a racing duplicate computation stores the same bits.
pub struct CrossingTable {
    n_x: usize,
    n_y: usize,
    store: Store,
}

impl CrossingTable {
    pub fn new(n_x: usize, n_y: usize) -> Self {
        let cells = (n_x + 1).saturating_mul(n_y + 1);
        let store = if cells <= DENSE_LIMIT {
            Store::Dense((0..cells).map(|_| AtomicU64::new(UNSET)).collect())
        } else {
            Store::Sharded((0..SHARDS).map(|_| Mutex::new(HashMap::new())).collect())
        };
        CrossingTable { n_x, n_y, store }
    }

    pub fn n_x(&self) -> usize {
        self.n_x
    }

    pub fn n_y(&self) -> usize {
        self.n_y
    }

    /// Threshold at `c`, with [`NO_CROSSING`] standing in for `None`.
    pub fn statistic(&self, c: CountPair) -> f64 {
        let compute = || crossing_alpha(c, self.n_x, self.n_y).unwrap_or(NO_CROSSING);
        match &self.store {
            Store::Dense(cells) => {
                let cell = &cells[c.k_x * (self.n_y + 1) + c.k_y];
                let bits = cell.load(Ordering::Relaxed);
                if bits != UNSET {
                    return f64::from_bits(bits);
                }
                let v = compute();
                cell.store(v.to_bits(), Ordering::Relaxed);
                v
            }
            Store::Sharded(shards) => {
                let shard = &shards[(c.k_x.wrapping_mul(31) ^ c.k_y) % SHARDS];
                if let Some(&v) = shard.lock().expect("memo poisoned").get(&c) {
                    return v;
                }
                let v = compute();
                shard.lock().expect("memo poisoned").insert(c, v);
                v
            }
        }
    }

    pub fn threshold(&self, c: CountPair) -> Option<f64> {
        let v = self.statistic(c);
        (v < NO_CROSSING).then_some(v)
    }

    /// Minimum threshold along a sequence of count pairs.
    pub fn min_statistic(&self, pairs: impl IntoIterator<Item = CountPair>) -> f64 {
        pairs
            .into_iter()
            .map(|c| self.statistic(c))
            .fold(NO_CROSSING, f64::min)
    }

    fn check_sizes(&self, g: &GroupedSamples) -> Result<()> {
        if g.n_x() != self.n_x || g.n_y() != self.n_y {
            return Err(Error::SizeMismatch {
                expected_x: self.n_x,
                expected_y: self.n_y,
                got_x: g.n_x(),
                got_y: g.n_y(),
            });
        }
        Ok(())
    }
}

/// The global statistic and where it is attained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlobalStat {
    /// Minimal threshold over the grid; `None` if no point ever separates.
    pub t_obs: Option<f64>,
    pub argmin_point: Option<f64>,
    pub argmin_index: Option<usize>,
    pub n_x: usize,
    pub n_y: usize,
}

impl GlobalStat {
    /// `t_obs` with [`NO_CROSSING`] for `None`, comparable with simulated
    /// null statistics.
    pub fn value(&self) -> f64 {
        self.t_obs.unwrap_or(NO_CROSSING)
    }

    /// Whether the global test rejects at pointwise level `alpha_tilde`.
    pub fn rejects_at(&self, alpha_tilde: f64) -> bool {
        self.t_obs.is_some_and(|t| t <= alpha_tilde)
    }
}

pub fn global_statistic(g: &GroupedSamples) -> GlobalStat {
    let table = CrossingTable::new(g.n_x(), g.n_y());
    global_statistic_with(g, &table).expect("table sized for g")
}

pub fn global_statistic_with(g: &GroupedSamples, table: &CrossingTable) -> Result<GlobalStat> {
    table.check_sizes(g)?;
    let mut best = GlobalStat {
        t_obs: None,
        argmin_point: None,
        argmin_index: None,
        n_x: g.n_x(),
        n_y: g.n_y(),
    };
    for (i, (v, kx, ky)) in grid_with_counts(g).into_iter().enumerate() {
        if let Some(t) = table.threshold(CountPair::new(kx, ky)) {
            if best.t_obs.is_none_or(|b| t < b) {
                best.t_obs = Some(t);
                best.argmin_point = Some(v);
                best.argmin_index = Some(i);
            }
        }
    }
    Ok(best)
}

/// A maximal run of rejected grid points, by value and by grid index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RejectedRange {
    pub from: f64,
    pub to: f64,
    pub from_index: usize,
    pub to_index: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RejectionRanges {
    pub ranges: Vec<RejectedRange>,
}

impl RejectionRanges {
    pub fn is_empty(&self) -> bool {
        self.ranges.is_empty()
    }

    pub fn len(&self) -> usize {
        self.ranges.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = &RejectedRange> {
        self.ranges.iter()
    }

    pub fn index_pairs(&self) -> Vec<(usize, usize)> {
        self.ranges
            .iter()
            .map(|r| (r.from_index, r.to_index))
            .collect()
    }
}

fn check_level(alpha_tilde: f64) -> Result<()> {
    if alpha_tilde > 0.0 && alpha_tilde < 0.5 {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "alpha_tilde must lie in (0, 0.5), got {alpha_tilde}"
        )))
    }
}

/// Ranges of grid values where pointwise equality is rejected at
/// `alpha_tilde`. Endpoints are observed values delimiting each run; the
/// decision also holds between the last rejected point and the next grid
/// value, which is not reported.
pub fn rejected_ranges(g: &GroupedSamples, alpha_tilde: f64) -> Result<RejectionRanges> {
    let table = CrossingTable::new(g.n_x(), g.n_y());
    rejected_ranges_with(g, alpha_tilde, &table)
}

pub fn rejected_ranges_with(
    g: &GroupedSamples,
    alpha_tilde: f64,
    table: &CrossingTable,
) -> Result<RejectionRanges> {
    check_level(alpha_tilde)?;
    table.check_sizes(g)?;
    let mut ranges: Vec<RejectedRange> = Vec::new();
    let mut prev_rejected = false;
    for (i, (v, kx, ky)) in grid_with_counts(g).into_iter().enumerate() {
        let rejected = table.statistic(CountPair::new(kx, ky)) <= alpha_tilde;
        if rejected {
            match ranges.last_mut() {
                Some(last) if prev_rejected => {
                    last.to = v;
                    last.to_index = i;
                }
                _ => ranges.push(RejectedRange {
                    from: v,
                    to: v,
                    from_index: i,
                    to_index: i,
                }),
            }
        }
        prev_rejected = rejected;
    }
    Ok(RejectionRanges { ranges })
}

/// Whether `H_0r` is rejected for some `r` in the closed interval
/// `[lo, hi]` (endpoints may be infinite).
pub fn rejects_on_interval(
    g: &GroupedSamples,
    alpha_tilde: f64,
    table: &CrossingTable,
    lo: f64,
    hi: f64,
) -> Result<bool> {
    check_level(alpha_tilde)?;
    table.check_sizes(g)?;
    let count = |v: &[f64], r: f64| v.partition_point(|&s| s <= r);
    let at_lo = CountPair::new(count(g.x(), lo), count(g.y(), lo));
    if table.statistic(at_lo) <= alpha_tilde {
        return Ok(true);
    }
    Ok(grid_with_counts(g)
        .into_iter()
        .filter(|&(v, _, _)| v >= lo && v <= hi)
        .any(|(_, kx, ky)| table.statistic(CountPair::new(kx, ky)) <= alpha_tilde))
}
