//! End-to-end comparison of two samples and its text, JSON and SVG renderings.

mod format;
mod json;
mod svg;
mod text;

use crate::calibration::{
    p_value, supported_alpha, CalibrationCache, PValue, DEFAULT_REPS, DEFAULT_SEED,
    SUPPORTED_ALPHAS,
};
use crate::engine::{global_statistic_with, rejected_ranges_with, CrossingTable, RejectionRanges};
use crate::error::Result;
use crate::ks::{ks_test, KsResult};
use crate::samples::{detect_ties, GroupedSamples, TieReport};

pub use format::{fmt_sig, fmt_stat};
pub use json::render_json;
pub use svg::render_svg;
pub use text::render_text;

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonOptions {
    pub var_name: String,
    pub by_name: String,
    pub alpha: f64,
    pub want_pvalue: bool,
    /// Also run the KS permutation test with the same `reps` and `seed`.
    pub ks_permutation: bool,
    pub reps: usize,
    pub seed: u64,
}

impl Default for ComparisonOptions {
    fn default() -> Self {
        ComparisonOptions {
            var_name: "value".into(),
            by_name: "group".into(),
            alpha: 0.10,
            want_pvalue: false,
            ks_permutation: false,
            reps: DEFAULT_REPS,
            seed: DEFAULT_SEED,
        }
    }
}

/// Global-test verdict at one familywise level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelVerdict {
    pub alpha: f64,
    pub alpha_tilde: f64,
    pub alpha_sim: f64,
    pub reject: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub var_name: String,
    pub by_name: String,
    pub labels: (String, String),
    /// Total, first group, second group.
    pub n: [usize; 3],
    pub n_dropped: usize,
    pub n_filtered: usize,
    pub ties: TieReport,
    pub t_obs: Option<f64>,
    /// One entry per supported level, 10% first.
    pub levels: Vec<LevelVerdict>,
    pub alpha: f64,
    pub alpha_tilde: f64,
    pub alpha_sim: f64,
    pub p_value: Option<PValue>,
    /// Rejected ranges at `alpha`; empty unless the global test rejects there.
    pub ranges: RejectionRanges,
    pub ks: KsResult,
    pub reps: usize,
    pub seed: u64,
}

impl ComparisonReport {
    pub fn tie_warning(&self) -> bool {
        self.ties.has_cross_ties()
    }

    /// Global verdict at a supported level.
    pub fn rejects_at(&self, alpha: f64) -> Option<bool> {
        self.levels
            .iter()
            .find(|l| (l.alpha - alpha).abs() < 1e-9)
            .map(|l| l.reject)
    }
}

/// Runs the full pipeline on cleaned samples. All levels share one null
/// simulation (or one cache entry) and one crossing table.
pub fn compare(
    g: &GroupedSamples,
    opts: &ComparisonOptions,
    cache: &CalibrationCache,
) -> Result<ComparisonReport> {
    let alpha = supported_alpha(opts.alpha)?;
    let table = CrossingTable::new(g.n_x(), g.n_y());
    let stat = global_statistic_with(g, &table)?;
    let records = cache.levels(&table, opts.reps, opts.seed)?;

    let levels: Vec<LevelVerdict> = records
        .iter()
        .map(|r| LevelVerdict {
            alpha: r.alpha,
            alpha_tilde: r.alpha_tilde,
            alpha_sim: r.alpha_sim,
            reject: stat.rejects_at(r.alpha_tilde),
        })
        .collect();
    let chosen = SUPPORTED_ALPHAS
        .iter()
        .position(|&a| a == alpha)
        .expect("supported alpha");
    let level = levels[chosen];

    let ranges = if level.reject {
        rejected_ranges_with(g, level.alpha_tilde, &table)?
    } else {
        RejectionRanges::default()
    };
    let p = if opts.want_pvalue {
        Some(p_value(&stat, &records[chosen])?)
    } else {
        None
    };
    let ks = ks_test(g, opts.ks_permutation.then_some((opts.reps, opts.seed)));
    let (l1, l2) = g.labels();

    Ok(ComparisonReport {
        var_name: opts.var_name.clone(),
        by_name: opts.by_name.clone(),
        labels: (l1.to_string(), l2.to_string()),
        n: [g.n_x() + g.n_y(), g.n_x(), g.n_y()],
        n_dropped: g.n_dropped(),
        n_filtered: 0,
        ties: detect_ties(g),
        t_obs: stat.t_obs,
        levels,
        alpha,
        alpha_tilde: level.alpha_tilde,
        alpha_sim: level.alpha_sim,
        p_value: p,
        ranges,
        ks,
        reps: opts.reps,
        seed: opts.seed,
    })
}
