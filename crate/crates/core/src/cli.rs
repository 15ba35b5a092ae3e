//! Command-line surface of the `distband` binary.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::calibration::{supported_alpha, CalibrationCache, DEFAULT_REPS, DEFAULT_SEED};
use crate::error::{Error, Result};
use crate::input::{read_csv, RowFilter};
use crate::report::{
    compare, render_json, render_svg, render_text, ComparisonOptions, ComparisonReport,
};
use crate::samples::GroupedSamples;
use crate::simlab::{render_suite_json, render_suite_text, run_suite, SUITES};

#[derive(Debug, Parser)]
#[command(
    name = "distband",
    version,
    about = "Compare two distributions: global test plus the ranges where their CDFs differ",
    args_conflicts_with_subcommands = true,
    subcommand_negates_reqs = true
)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,
    #[command(flatten)]
    compare: CompareArgs,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run Monte Carlo validation experiments.
    Simlab(SimlabArgs),
}

#[derive(Debug, Args)]
struct CompareArgs {
    /// Input CSV with a header row.
    #[arg(long, required = true, value_name = "CSV")]
    data: Option<PathBuf>,
    /// Column holding the outcome values.
    #[arg(long, required = true, value_name = "COL")]
    var: Option<String>,
    /// Column holding the two group labels.
    #[arg(long, required = true, value_name = "COL")]
    by: Option<String>,
    /// Familywise error rate: 0.10, 0.05 or 0.01.
    #[arg(long, default_value = "0.10", value_parser = parse_alpha)]
    alpha: f64,
    /// Also report the simulated p-value of the global test.
    #[arg(long)]
    pvalue: bool,
    /// Skip the SVG figure.
    #[arg(long)]
    no_plot: bool,
    /// Null simulation replications (at least 100).
    #[arg(long, default_value_t = DEFAULT_REPS, value_parser = parse_reps)]
    reps: usize,
    /// Random seed for the simulations.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Draw a fresh seed (reported in the output) instead of --seed.
    #[arg(long, conflicts_with = "seed")]
    random_seed: bool,
    /// Directory for cached calibration results.
    #[arg(long, value_name = "DIR")]
    cache_dir: Option<PathBuf>,
    /// Keep rows where <col><op><value> holds; op is one of == != <= >= < >.
    /// Repeat to combine conditions.
    #[arg(long, value_name = "EXPR", value_parser = parse_filter)]
    filter: Vec<RowFilter>,
    /// Write the JSON report here.
    #[arg(long, value_name = "PATH")]
    json: Option<PathBuf>,
    /// Where to write the SVG figure (default: <var>_cdf.svg).
    #[arg(long, value_name = "PATH")]
    svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimlabArgs {
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(SUITES))]
    suite: String,
    /// Simulated datasets per experiment (at least 500).
    #[arg(long, default_value_t = 2000)]
    trials: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Write the JSON results table here.
    #[arg(long, value_name = "PATH")]
    json: Option<PathBuf>,
}

fn parse_alpha(s: &str) -> std::result::Result<f64, String> {
    let a: f64 = s.parse().map_err(|_| format!("{s:?} is not a number"))?;
    supported_alpha(a).map_err(|e| e.to_string())
}

fn parse_reps(s: &str) -> std::result::Result<usize, String> {
    let r: usize = s.parse().map_err(|_| format!("{s:?} is not a count"))?;
    if r < 100 {
        return Err(format!("need at least 100 replications, got {r}"));
    }
    Ok(r)
}

fn parse_filter(s: &str) -> std::result::Result<RowFilter, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub data: PathBuf,
    pub var: String,
    pub by: String,
    pub alpha: f64,
    pub want_pvalue: bool,
    pub want_plot: bool,
    pub reps: usize,
    pub seed: u64,
    pub cache_dir: Option<PathBuf>,
    pub filters: Vec<RowFilter>,
    pub json_out: Option<PathBuf>,
    pub svg_out: Option<PathBuf>,
}

impl RunConfig {
    /// The SVG destination, or `None` with plotting off.
    pub fn svg_path(&self) -> Option<PathBuf> {
        self.want_plot.then(|| {
            self.svg_out
                .clone()
                .unwrap_or_else(|| PathBuf::from(format!("{}_cdf.svg", self.var)))
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimlabConfig {
    pub suite: String,
    pub trials: usize,
    pub seed: u64,
    pub json_out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Invocation {
    Compare(RunConfig),
    Simlab(SimlabConfig),
}

/// Parses a full argument vector, program name first. Help and version
/// requests come back as `clap` errors, like usage errors.
pub fn parse_args<I, T>(argv: I) -> std::result::Result<Invocation, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv)?;
    Ok(match cli.command {
        Some(Command::Simlab(s)) => Invocation::Simlab(SimlabConfig {
            suite: s.suite,
            trials: s.trials,
            seed: s.seed,
            json_out: s.json,
        }),
        None => {
            let c = cli.compare;
            let seed = if c.random_seed {
                rand::random()
            } else {
                c.seed
            };
            Invocation::Compare(RunConfig {
                data: c.data.expect("required"),
                var: c.var.expect("required"),
                by: c.by.expect("required"),
                alpha: c.alpha,
                want_pvalue: c.pvalue,
                want_plot: !c.no_plot,
                reps: c.reps,
                seed,
                cache_dir: c.cache_dir,
                filters: c.filter,
                json_out: c.json,
                svg_out: c.svg,
            })
        }
    })
}

/// Reads the data and runs the comparison. The KS permutation test is run
/// only when a p-value is requested.
pub fn run_comparison(config: &RunConfig) -> Result<(ComparisonReport, GroupedSamples)> {
    let data = read_csv(&config.data, &config.var, &config.by, &config.filters)?;
    let opts = ComparisonOptions {
        var_name: config.var.clone(),
        by_name: config.by.clone(),
        alpha: config.alpha,
        want_pvalue: config.want_pvalue,
        ks_permutation: config.want_pvalue,
        reps: config.reps,
        seed: config.seed,
    };
    let cache = CalibrationCache::new(config.cache_dir.clone());
    let mut report = compare(&data.samples, &opts, &cache)?;
    report.n_filtered = data.n_filtered;
    Ok((report, data.samples))
}

fn write_file(path: &Path, body: &str) -> Result<()> {
    fs::write(path, body).map_err(|e| Error::io(path, e))
}

/// Runs an invocation, writing reports to stdout and the requested files.
pub fn execute(inv: &Invocation) -> Result<()> {
    match inv {
        Invocation::Compare(config) => {
            let (report, g) = run_comparison(config)?;
            print!("{}", render_text(&report));
            if let Some(path) = &config.json_out {
                write_file(path, &render_json(&report))?;
            }
            if let Some(path) = config.svg_path() {
                write_file(&path, &render_svg(&report, &g))?;
                log::info!("figure written to {}", path.display());
            }
        }
        Invocation::Simlab(s) => {
            let report = run_suite(&s.suite, s.trials, s.seed)?;
            print!("{}", render_suite_text(&report));
            if let Some(path) = &s.json_out {
                write_file(path, &render_suite_json(&report))?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> std::result::Result<Invocation, clap::Error> {
        parse_args(std::iter::once("distband").chain(args.iter().copied()))
    }

    #[test]
    fn defaults() {
        let Invocation::Compare(c) =
            parse(&["--data", "d.csv", "--var", "y", "--by", "grp"]).unwrap()
        else {
            panic!()
        };
        assert_eq!(c.alpha, 0.10);
        assert!(c.want_plot);
        assert!(!c.want_pvalue);
        assert_eq!(c.reps, 10_000);
        assert_eq!(c.seed, DEFAULT_SEED);
        assert_eq!(c.svg_path(), Some(PathBuf::from("y_cdf.svg")));
    }

    #[test]
    fn unsupported_alpha_lists_choices() {
        let err = parse(&[
            "--data", "d.csv", "--var", "y", "--by", "g", "--alpha", "0.03",
        ])
        .unwrap_err();
        let msg = err.to_string();
        assert!(
            msg.contains("0.01") && msg.contains("0.05") && msg.contains("0.10"),
            "{msg}"
        );
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn flags_and_filters() {
        let Invocation::Compare(c) = parse(&[
            "--data",
            "d.csv",
            "--var",
            "y",
            "--by",
            "g",
            "--no-plot",
            "--pvalue",
            "--alpha",
            "0.01",
            "--filter",
            "margin>=-0.5",
            "--filter",
            "margin<=0.5",
        ])
        .unwrap() else {
            panic!()
        };
        assert!(c.want_pvalue && !c.want_plot);
        assert_eq!(c.alpha, 0.01);
        assert_eq!(c.filters.len(), 2);
        assert_eq!(c.svg_path(), None);
    }

    #[test]
    fn usage_errors() {
        for args in [
            vec!["--var", "y", "--by", "g"],
            vec!["--data", "d.csv", "--var", "y", "--by", "g", "--bogus"],
            vec!["--data", "d.csv", "--var", "y", "--by", "g", "--reps", "50"],
            vec![
                "--data", "d.csv", "--var", "y", "--by", "g", "--filter", "oops",
            ],
        ] {
            let err = parse(&args).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{args:?}");
        }
        let help = parse(&["--help"]).unwrap_err();
        assert_eq!(help.exit_code(), 0);
    }

    #[test]
    fn simlab_subcommand() {
        let inv = parse(&[
            "simlab", "--suite", "weak", "--trials", "600", "--seed", "4",
        ])
        .unwrap();
        assert_eq!(
            inv,
            Invocation::Simlab(SimlabConfig {
                suite: "weak".into(),
                trials: 600,
                seed: 4,
                json_out: None
            })
        );
        assert!(parse(&["simlab", "--suite", "nope"]).is_err());
    }
}
