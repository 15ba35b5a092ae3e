use std::fmt::Write;

use super::format::fmt_stat;
use super::ComparisonReport;

fn pct(alpha: f64) -> u32 {
    (alpha * 100.0).round() as u32
}

/// Plain-text report: header, global test, rejected ranges at the chosen
/// level, the KS baseline and any caveats.
pub fn render_text(r: &ComparisonReport) -> String {
    let mut out = String::new();
    let (l1, l2) = (&r.labels.0, &r.labels.1);
    let by = &r.by_name;
    // writing to a String cannot fail
    let _ = writeln!(
        out,
        "Comparing distribution of {} when {by}={l1} vs. {by}={l2}",
        r.var_name
    );
    let _ = writeln!(
        out,
        "N = {} ({by}={l1}: {}, {by}={l2}: {})",
        r.n[0], r.n[1], r.n[2]
    );
    let _ = writeln!(out);
    let _ = writeln!(out, "Global test of equality of two CDFs:");
    if let Some(p) = r.p_value {
        if p.is_floor {
            let _ = writeln!(out, "    Simulated p-value < {}", fmt_stat(p.value));
        } else {
            let _ = writeln!(out, "    Simulated p-value = {}", fmt_stat(p.value));
        }
    }
    for l in &r.levels {
        let verdict = if l.reject { "reject" } else { "do not reject" };
        let _ = writeln!(out, "    At a {:>2}% level: {verdict}", pct(l.alpha));
    }
    let _ = writeln!(
        out,
        "    Simulated FWER at the {}% level: {} (pointwise level {})",
        pct(r.alpha),
        fmt_stat(r.alpha_sim),
        fmt_stat(r.alpha_tilde)
    );

    if !r.ranges.is_empty() {
        let _ = writeln!(out);
        let _ = writeln!(
            out,
            "With strong control of FWER at a {}% level,",
            pct(r.alpha)
        );
        let _ = writeln!(
            out,
            "CDF equality is rejected at all points in the following"
        );
        let _ = writeln!(out, "ranges of {}:", r.var_name);
        let _ = writeln!(out);
        let _ = writeln!(out, "{:>9}  {:>9} ", "from", "to");
        for range in r.ranges.iter() {
            let _ = writeln!(
                out,
                "{:>9}  {:>9} ",
                fmt_stat(range.from),
                fmt_stat(range.to)
            );
        }
    }

    let _ = writeln!(out);
    let _ = writeln!(out, "Two-sample Kolmogorov-Smirnov test:");
    let _ = writeln!(
        out,
        "    D = {}  ({by}={l1} smaller: {}, {by}={l2} smaller: {})",
        fmt_stat(r.ks.d),
        fmt_stat(r.ks.d_plus),
        fmt_stat(r.ks.d_minus)
    );
    let _ = writeln!(
        out,
        "    Asymptotic p-value = {}",
        fmt_stat(r.ks.p_asymptotic)
    );
    if let Some(p) = r.ks.p_permutation {
        let _ = writeln!(out, "    Permutation p-value = {}", fmt_stat(p));
    }

    if r.n_dropped > 0 || r.n_filtered > 0 {
        let _ = writeln!(out);
        let _ = writeln!(
            out,
            "Note: {} observation(s) dropped for missing values, {} excluded by filter.",
            r.n_dropped, r.n_filtered
        );
    }
    if r.tie_warning() {
        let _ = writeln!(out);
        let _ = writeln!(
            out,
            "Warning: {} value(s) occur in both groups; with ties the test may be conservative.",
            r.ties.cross_tie_count
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::super::tests::fixture_report;
    use super::*;
    use crate::calibration::PValue;

    #[test]
    fn fixture_text_shape() {
        let r = fixture_report();
        let t = render_text(&r);
        assert!(t.starts_with("Comparing distribution of y when grp=0 vs. grp=1\n"));
        assert!(t.contains(
            "    At a 10% level: reject\n    At a  5% level: reject\n    At a  1% level: reject\n"
        ));
        assert!(t.contains("    Simulated p-value = .00"));
        assert!(t.contains("     from         to \n"));
        assert!(t.contains("With strong control of FWER at a 1% level,"));
        assert!(t.contains("    D = .3  (grp=0 smaller: .3, grp=1 smaller: .0377551)"));
        assert!(!t.contains("Warning"));
    }

    #[test]
    fn floored_p_and_no_ranges() {
        let mut r = fixture_report();
        r.p_value = Some(PValue {
            value: 1e-4,
            is_floor: true,
        });
        assert!(render_text(&r).contains("    Simulated p-value < .0001\n"));

        r.ranges.ranges.clear();
        for l in &mut r.levels {
            l.reject = false;
        }
        let t = render_text(&r);
        assert!(!t.contains("from"));
        assert!(t.contains("At a  1% level: do not reject"));
    }
}
