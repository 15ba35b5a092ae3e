//! Monte Carlo checks of error control, power, ties and rank invariance.

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::calibration::{replicate_rng, supported_alpha, CalibrationCache, DEFAULT_REPS};
use crate::engine::{global_statistic_with, rejects_on_interval, CrossingTable};
use crate::error::{Error, Result};
use crate::ks::ks_test;
use crate::report::{compare, ComparisonOptions, ComparisonReport};
use crate::samples::GroupedSamples;

// keeps data streams apart from the calibration streams of the same seed
const DATA_STREAM_KEY: u64 = 0xD1B5_4A32_D192_ED03;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Recipe {
    /// Standard uniform.
    Uniform,
    Normal {
        mean: f64,
        sd: f64,
    },
    /// Standard normal with `shift` added to draws above the median.
    ShiftedAboveMedian {
        shift: f64,
    },
    /// Uniform over `1..=points`.
    Lattice {
        points: u32,
    },
    /// Uniform, except the last `outliers` draws are `1e6 + U(0,1)`.
    TailContaminated {
        outliers: usize,
    },
}

impl Recipe {
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        match *self {
            Recipe::Uniform => (0..n).map(|_| rng.random::<f64>()).collect(),
            Recipe::Normal { mean, sd } => {
                let d = Normal::new(mean, sd).expect("finite sd");
                (0..n).map(|_| d.sample(rng)).collect()
            }
            Recipe::ShiftedAboveMedian { shift } => (0..n)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(rng);
                    if z > 0.0 {
                        z + shift
                    } else {
                        z
                    }
                })
                .collect(),
            Recipe::Lattice { points } => (0..n)
                .map(|_| f64::from(rng.random_range(1..=points)))
                .collect(),
            Recipe::TailContaminated { outliers } => (0..n)
                .map(|i| {
                    let u = rng.random::<f64>();
                    if i + outliers >= n {
                        1e6 + u
                    } else {
                        u
                    }
                })
                .collect(),
        }
    }
}

/// Where the two population CDFs coincide, known from the recipes.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EqualitySet {
    Everywhere,
    Nowhere,
    /// Closed intervals; endpoints may be infinite.
    Intervals(Vec<(f64, f64)>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    pub name: String,
    pub x: Recipe,
    pub n_x: usize,
    pub y: Recipe,
    pub n_y: usize,
    pub equality: EqualitySet,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FwerExperiment {
    pub scenario: Scenario,
    pub trials: usize,
    pub alpha: f64,
    pub reps: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentOutcome {
    pub name: String,
    pub trials: usize,
    pub alpha: f64,
    pub alpha_tilde: f64,
    pub alpha_sim: f64,
    /// Share of trials rejecting some `r` where the CDFs are equal.
    pub fwer: f64,
    pub fwer_se: f64,
    /// Share of trials rejecting anywhere.
    pub power: f64,
    pub power_se: f64,
    /// Share of trials where the asymptotic KS test rejects at `alpha`.
    pub ks_rate: f64,
    pub ks_se: f64,
}

fn rate(hits: usize, trials: usize) -> (f64, f64) {
    let p = hits as f64 / trials as f64;
    (p, (p * (1.0 - p) / trials as f64).sqrt())
}

fn draw(s: &Scenario, seed: u64, trial: usize) -> GroupedSamples {
    let mut rng = replicate_rng(seed ^ DATA_STREAM_KEY, trial);
    let x = s.x.sample(s.n_x, &mut rng);
    let y = s.y.sample(s.n_y, &mut rng);
    GroupedSamples::new(x, y).expect("recipes give finite, non-empty samples")
}

/// Simulates `trials` datasets, tests each at the calibrated pointwise
/// level and counts familywise errors against the known equality set.
pub fn run_fwer_experiment(e: &FwerExperiment) -> Result<ExperimentOutcome> {
    run_with_cache(e, &CalibrationCache::in_memory())
}

fn run_with_cache(e: &FwerExperiment, cache: &CalibrationCache) -> Result<ExperimentOutcome> {
    let s = &e.scenario;
    if e.trials < 500 {
        return Err(Error::domain(format!(
            "need at least 500 trials, got {}",
            e.trials
        )));
    }
    if s.n_x == 0 || s.n_y == 0 {
        return Err(Error::domain("scenario needs two non-empty groups"));
    }
    let alpha = supported_alpha(e.alpha)?;
    let table = CrossingTable::new(s.n_x, s.n_y);
    let record = cache.lookup_or_build(&table, alpha, e.reps, e.seed)?;
    let at = record.alpha_tilde;

    let tallies = (0..e.trials)
        .into_par_iter()
        .map(|trial| -> Result<[usize; 3]> {
            let g = draw(s, e.seed, trial);
            let any = global_statistic_with(&g, &table)?.rejects_at(at);
            let error = any
                && match &s.equality {
                    EqualitySet::Everywhere => true,
                    EqualitySet::Nowhere => false,
                    EqualitySet::Intervals(iv) => {
                        let mut hit = false;
                        for &(lo, hi) in iv {
                            if rejects_on_interval(&g, at, &table, lo, hi)? {
                                hit = true;
                                break;
                            }
                        }
                        hit
                    }
                };
            let ks = ks_test(&g, None).p_asymptotic <= alpha;
            Ok([usize::from(error), usize::from(any), usize::from(ks)])
        })
        .try_reduce(
            || [0; 3],
            |a, b| Ok([a[0] + b[0], a[1] + b[1], a[2] + b[2]]),
        )?;

    let (fwer, fwer_se) = rate(tallies[0], e.trials);
    let (power, power_se) = rate(tallies[1], e.trials);
    let (ks_rate, ks_se) = rate(tallies[2], e.trials);
    Ok(ExperimentOutcome {
        name: s.name.clone(),
        trials: e.trials,
        alpha,
        alpha_tilde: at,
        alpha_sim: record.alpha_sim,
        fwer,
        fwer_se,
        power,
        power_se,
        ks_rate,
        ks_se,
    })
}

/// Any-rejection rates of the method and of KS for each scenario, all at
/// level `alpha`. At least one scenario must be a tail alternative.
pub fn run_power_comparison(
    scenarios: &[Scenario],
    trials: usize,
    alpha: f64,
    seed: u64,
) -> Result<Vec<ExperimentOutcome>> {
    if scenarios.len() < 2 {
        return Err(Error::domain(
            "power comparison needs at least two scenarios",
        ));
    }
    let is_tail = |r: &Recipe| matches!(r, Recipe::TailContaminated { .. });
    if !scenarios.iter().any(|s| is_tail(&s.x) || is_tail(&s.y)) {
        return Err(Error::domain(
            "power comparison needs a tail-contamination scenario",
        ));
    }
    let cache = CalibrationCache::in_memory();
    scenarios
        .iter()
        .map(|s| {
            let e = FwerExperiment {
                scenario: s.clone(),
                trials,
                alpha,
                reps: DEFAULT_REPS,
                seed,
            };
            run_with_cache(&e, &cache)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Transform {
    Exp,
    ArctanRescale,
    CubicPlusLinear,
}

impl Transform {
    pub const ALL: [Transform; 3] = [
        Transform::Exp,
        Transform::ArctanRescale,
        Transform::CubicPlusLinear,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Transform::Exp => "exp",
            Transform::ArctanRescale => "arctan-rescale",
            Transform::CubicPlusLinear => "cubic-plus-linear",
        }
    }

    /// The transform after centring at `center` and scaling by `scale`,
    /// so its curvature acts on the bulk of the data.
    fn apply(self, v: f64, center: f64, scale: f64) -> f64 {
        let z = (v - center) / scale;
        match self {
            Transform::Exp => (4.0 * z).exp(),
            Transform::ArctanRescale => (4.0 * z).atan(),
            Transform::CubicPlusLinear => z * z * z + z,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvarianceOutcome {
    pub transform: Transform,
    pub passed: bool,
    pub mismatches: Vec<String>,
}

fn pooled_sorted(g: &GroupedSamples) -> Vec<f64> {
    let mut v: Vec<f64> = g.x().iter().chain(g.y()).copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Runs the full comparison at every level before and after `transform` and
/// reports any difference in statistic, verdicts, p-value or range indices.
pub fn run_invariance_check(
    g: &GroupedSamples,
    transform: Transform,
    seed: u64,
) -> Result<InvarianceOutcome> {
    let pooled = pooled_sorted(g);
    let center = {
        let n = pooled.len();
        if n % 2 == 1 {
            pooled[n / 2]
        } else {
            0.5 * (pooled[n / 2 - 1] + pooled[n / 2])
        }
    };
    let scale = pooled
        .iter()
        .map(|v| (v - center).abs())
        .fold(0.0, f64::max);
    let scale = if scale > 0.0 { scale } else { 1.0 };
    let h = g.map_values(|v| transform.apply(v, center, scale))?;

    let mut mismatches = Vec::new();
    let mapped: Vec<f64> = pooled
        .iter()
        .map(|&v| transform.apply(v, center, scale))
        .collect();
    if pooled
        .windows(2)
        .zip(mapped.windows(2))
        .any(|(a, b)| (a[0] < a[1]) != (b[0] < b[1]))
    {
        mismatches.push("transform does not preserve strict order in floating point".into());
    }

    let cache = CalibrationCache::in_memory();
    let run = |data: &GroupedSamples, alpha: f64| -> Result<ComparisonReport> {
        let opts = ComparisonOptions {
            alpha,
            want_pvalue: true,
            seed,
            ..Default::default()
        };
        compare(data, &opts, &cache)
    };
    for alpha in crate::calibration::SUPPORTED_ALPHAS {
        let (a, b) = (run(g, alpha)?, run(&h, alpha)?);
        if a.t_obs.map(f64::to_bits) != b.t_obs.map(f64::to_bits) {
            mismatches.push(format!("t_obs {:?} vs {:?}", a.t_obs, b.t_obs));
        }
        let va: Vec<bool> = a.levels.iter().map(|l| l.reject).collect();
        let vb: Vec<bool> = b.levels.iter().map(|l| l.reject).collect();
        if va != vb {
            mismatches.push(format!("verdicts {va:?} vs {vb:?}"));
        }
        if a.p_value != b.p_value {
            mismatches.push(format!("p-value {:?} vs {:?}", a.p_value, b.p_value));
        }
        if a.ranges.index_pairs() != b.ranges.index_pairs() {
            mismatches.push(format!(
                "ranges at alpha {alpha}: {:?} vs {:?}",
                a.ranges.index_pairs(),
                b.ranges.index_pairs()
            ));
        }
    }
    mismatches.dedup();
    Ok(InvarianceOutcome {
        transform,
        passed: mismatches.is_empty(),
        mismatches,
    })
}

/// Uniform-like control sample against a sample with six huge values.
pub fn motivating_example() -> GroupedSamples {
    let x: Vec<f64> = (1..=49).map(|j| f64::from(j) / 50.0).collect();
    let y: Vec<f64> = (1..=20)
        .map(|k| {
            if k > 14 {
                1e6 + f64::from(49 + k)
            } else {
                f64::from(k) / 21.0
            }
        })
        .collect();
    GroupedSamples::new(x, y).expect("fixed data")
}

/// Five fixed datasets covering separation, heavy tails, ties and noise.
pub fn invariance_datasets(seed: u64) -> Vec<(String, GroupedSamples)> {
    let mut rng = replicate_rng(seed ^ DATA_STREAM_KEY, usize::MAX);
    let normal = |n, rng: &mut _| Recipe::Normal { mean: 0.0, sd: 1.0 }.sample(n, rng);
    let separated = GroupedSamples::new(
        (1..=15).map(f64::from).collect(),
        (1..=15).map(|i| 100.0 + f64::from(i)).collect(),
    )
    .expect("fixed data");
    let noise = GroupedSamples::new(normal(40, &mut rng), normal(35, &mut rng)).expect("finite");
    let shifted = GroupedSamples::new(
        normal(50, &mut rng),
        Recipe::ShiftedAboveMedian { shift: 1.0 }.sample(50, &mut rng),
    )
    .expect("finite");
    let lattice = Recipe::Lattice { points: 5 };
    let ties = GroupedSamples::new(lattice.sample(30, &mut rng), lattice.sample(30, &mut rng))
        .expect("finite");
    vec![
        ("motivating".into(), motivating_example()),
        ("separated".into(), separated),
        ("normal-noise".into(), noise),
        ("shift-above-median".into(), shifted),
        ("lattice-ties".into(), ties),
    ]
}

pub fn uniform_null(n: usize) -> Scenario {
    Scenario {
        name: format!("uniform null, n={n} each"),
        x: Recipe::Uniform,
        n_x: n,
        y: Recipe::Uniform,
        n_y: n,
        equality: EqualitySet::Everywhere,
    }
}

/// Normal with sd 1 against sd 3: the CDFs meet only at 0.
pub fn scale_alternative(n: usize) -> Scenario {
    Scenario {
        name: format!("sd 1 vs sd 3, n={n} each"),
        x: Recipe::Normal { mean: 0.0, sd: 1.0 },
        n_x: n,
        y: Recipe::Normal { mean: 0.0, sd: 3.0 },
        n_y: n,
        equality: EqualitySet::Intervals(vec![(0.0, 0.0)]),
    }
}

pub fn lattice_null(n: usize) -> Scenario {
    Scenario {
        name: format!("5-point lattice null, n={n} each"),
        x: Recipe::Lattice { points: 5 },
        n_x: n,
        y: Recipe::Lattice { points: 5 },
        n_y: n,
        equality: EqualitySet::Everywhere,
    }
}

/// 49 uniforms against 14 uniforms plus 6 values above one million.
pub fn tail_contamination() -> Scenario {
    Scenario {
        name: "tail contamination, 49 vs 20 (6 outliers)".into(),
        x: Recipe::Uniform,
        n_x: 49,
        y: Recipe::TailContaminated { outliers: 6 },
        n_y: 20,
        equality: EqualitySet::Intervals(vec![
            (f64::NEG_INFINITY, 0.0),
            (1e6 + 1.0, f64::INFINITY),
        ]),
    }
}

pub fn location_shift(n: usize, shift: f64) -> Scenario {
    Scenario {
        name: format!("location shift {shift} sd, n={n} each"),
        x: Recipe::Normal { mean: 0.0, sd: 1.0 },
        n_x: n,
        y: Recipe::Normal {
            mean: shift,
            sd: 1.0,
        },
        n_y: n,
        equality: EqualitySet::Nowhere,
    }
}

pub fn shift_above_median(n: usize) -> Scenario {
    Scenario {
        name: format!("shift above median, n={n} each"),
        x: Recipe::Normal { mean: 0.0, sd: 1.0 },
        n_x: n,
        y: Recipe::ShiftedAboveMedian { shift: 1.0 },
        n_y: n,
        equality: EqualitySet::Intervals(vec![(f64::NEG_INFINITY, 0.0)]),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvarianceRow {
    pub dataset: String,
    pub transform: &'static str,
    pub passed: bool,
    pub mismatches: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub trials: usize,
    pub seed: u64,
    pub experiments: Vec<ExperimentOutcome>,
    pub invariance: Vec<InvarianceRow>,
}

pub const SUITES: [&str; 6] = ["weak", "strong", "ties", "power", "invariance", "all"];

/// Runs a named group of experiments at the 10% level.
pub fn run_suite(name: &str, trials: usize, seed: u64) -> Result<SuiteReport> {
    let one = |s: Scenario| {
        run_fwer_experiment(&FwerExperiment {
            scenario: s,
            trials,
            alpha: 0.10,
            reps: DEFAULT_REPS,
            seed,
        })
    };
    let mut experiments = Vec::new();
    let mut invariance = Vec::new();
    let all = name == "all";
    if !SUITES.contains(&name) {
        return Err(Error::domain(format!(
            "unknown suite {name:?}; choose one of {}",
            SUITES.join(", ")
        )));
    }
    if all || name == "weak" {
        experiments.push(one(uniform_null(25))?);
    }
    if all || name == "strong" {
        experiments.push(one(scale_alternative(50))?);
    }
    if all || name == "ties" {
        experiments.push(one(lattice_null(25))?);
    }
    if all || name == "power" {
        let scenarios = [
            tail_contamination(),
            location_shift(30, 1.5),
            shift_above_median(50),
        ];
        experiments.extend(run_power_comparison(&scenarios, trials, 0.10, seed)?);
    }
    if all || name == "invariance" {
        for (dataset, g) in invariance_datasets(seed) {
            for t in Transform::ALL {
                let o = run_invariance_check(&g, t, seed)?;
                invariance.push(InvarianceRow {
                    dataset: dataset.clone(),
                    transform: t.name(),
                    passed: o.passed,
                    mismatches: o.mismatches,
                });
            }
        }
    }
    Ok(SuiteReport {
        suite: name.to_string(),
        trials,
        seed,
        experiments,
        invariance,
    })
}

pub fn render_suite_text(r: &SuiteReport) -> String {
    use std::fmt::Write;
    let mut s = String::new();
    let _ = writeln!(
        s,
        "simlab suite {} ({} trials, seed {})",
        r.suite, r.trials, r.seed
    );
    if !r.experiments.is_empty() {
        let _ = writeln!(s);
        let _ = writeln!(
            s,
            "{:<44} {:>8} {:>8} {:>8} {:>8} {:>8} {:>8} {:>8}",
            "scenario", "alpha", "a_sim", "FWER", "se", "power", "se", "KS"
        );
        for e in &r.experiments {
            let _ = writeln!(
                s,
                "{:<44} {:>8.3} {:>8.4} {:>8.4} {:>8.4} {:>8.4} {:>8.4} {:>8.4}",
                e.name, e.alpha, e.alpha_sim, e.fwer, e.fwer_se, e.power, e.power_se, e.ks_rate
            );
        }
    }
    if !r.invariance.is_empty() {
        let _ = writeln!(s);
        let _ = writeln!(s, "{:<20} {:<18} result", "dataset", "transform");
        for row in &r.invariance {
            let verdict = if row.passed {
                "pass".to_string()
            } else {
                format!("FAIL: {}", row.mismatches.join("; "))
            };
            let _ = writeln!(s, "{:<20} {:<18} {verdict}", row.dataset, row.transform);
        }
    }
    s
}

pub fn render_suite_json(r: &SuiteReport) -> String {
    let mut s = serde_json::to_string_pretty(r).expect("suite serializes");
    s.push('\n');
    s
}
