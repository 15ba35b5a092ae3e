use serde::Serialize;

use super::ComparisonReport;

#[derive(Serialize)]
struct KsJson {
    d: f64,
    d_plus: f64,
    d_minus: f64,
    p_asymptotic: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    p_permutation: Option<f64>,
}

#[derive(Serialize)]
struct LevelJson {
    alpha: f64,
    alpha_tilde: f64,
    alpha_sim: f64,
    reject: bool,
}

#[derive(Serialize)]
struct ReportJson<'a> {
    var: &'a str,
    by: &'a str,
    groups: [&'a str; 2],
    n: [usize; 3],
    n_dropped: usize,
    n_filtered: usize,
    rej_gof10: bool,
    rej_gof05: bool,
    rej_gof01: bool,
    p_gof: Option<f64>,
    p_gof_floor: bool,
    t_obs: Option<f64>,
    alpha: f64,
    alpha_sim: f64,
    alpha_tilde: f64,
    rej_ranges: Vec<[f64; 2]>,
    levels: Vec<LevelJson>,
    ks: KsJson,
    tie_warning: bool,
    cross_ties: usize,
    reps: usize,
    seed: u64,
}

/// Machine-readable report. Key order is fixed, so identical reports give
/// identical bytes.
pub fn render_json(r: &ComparisonReport) -> String {
    let verdict = |a: f64| r.rejects_at(a).unwrap_or(false);
    let doc = ReportJson {
        var: &r.var_name,
        by: &r.by_name,
        groups: [&r.labels.0, &r.labels.1],
        n: r.n,
        n_dropped: r.n_dropped,
        n_filtered: r.n_filtered,
        rej_gof10: verdict(0.10),
        rej_gof05: verdict(0.05),
        rej_gof01: verdict(0.01),
        p_gof: r.p_value.map(|p| p.value),
        p_gof_floor: r.p_value.is_some_and(|p| p.is_floor),
        t_obs: r.t_obs,
        alpha: r.alpha,
        alpha_sim: r.alpha_sim,
        alpha_tilde: r.alpha_tilde,
        rej_ranges: r.ranges.iter().map(|x| [x.from, x.to]).collect(),
        levels: r
            .levels
            .iter()
            .map(|l| LevelJson {
                alpha: l.alpha,
                alpha_tilde: l.alpha_tilde,
                alpha_sim: l.alpha_sim,
                reject: l.reject,
            })
            .collect(),
        ks: KsJson {
            d: r.ks.d,
            d_plus: r.ks.d_plus,
            d_minus: r.ks.d_minus,
            p_asymptotic: r.ks.p_asymptotic,
            p_permutation: r.ks.p_permutation,
        },
        tie_warning: r.tie_warning(),
        cross_ties: r.ties.cross_tie_count,
        reps: r.reps,
        seed: r.seed,
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("report serializes");
    s.push('\n');
    s
}
