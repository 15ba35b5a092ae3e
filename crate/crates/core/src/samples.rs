//! The two-group data model: cleaning, ordering, empirical CDFs, ties and
//! the pooled evaluation grid.

use std::collections::BTreeSet;

use crate::error::{Error, Result};

/// Cleaned observations split into exactly two groups, each sorted
/// ascending. `x` belongs to `labels.0`, `y` to `labels.1`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupedSamples {
    x: Vec<f64>,
    y: Vec<f64>,
    labels: (String, String),
    n_dropped: usize,
}

impl GroupedSamples {
    /// Builds directly from two samples. Values are sorted; non-finite
    /// values are an error.
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        Self::with_labels(x, y, ("0".into(), "1".into()))
    }

    pub fn with_labels(mut x: Vec<f64>, mut y: Vec<f64>, labels: (String, String)) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::EmptyGroup(labels.0));
        }
        if y.is_empty() {
            return Err(Error::EmptyGroup(labels.1));
        }
        if let Some(v) = x.iter().chain(&y).find(|v| !v.is_finite()) {
            return Err(Error::domain(format!("non-finite observation {v}")));
        }
        x.sort_by(f64::total_cmp);
        y.sort_by(f64::total_cmp);
        Ok(GroupedSamples {
            x,
            y,
            labels,
            n_dropped: 0,
        })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn n_x(&self) -> usize {
        self.x.len()
    }

    pub fn n_y(&self) -> usize {
        self.y.len()
    }

    pub fn labels(&self) -> (&str, &str) {
        (&self.labels.0, &self.labels.1)
    }

    /// Rows removed for missing or non-numeric values.
    pub fn n_dropped(&self) -> usize {
        self.n_dropped
    }

    /// The same data with the groups exchanged.
    pub fn swapped(&self) -> Self {
        GroupedSamples {
            x: self.y.clone(),
            y: self.x.clone(),
            labels: (self.labels.1.clone(), self.labels.0.clone()),
            n_dropped: self.n_dropped,
        }
    }

    /// Applies `f` to every observation. `f` is expected to be strictly
    /// increasing; the result is re-sorted regardless.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        let mut out = Self::with_labels(
            self.x.iter().map(|&v| f(v)).collect(),
            self.y.iter().map(|&v| f(v)).collect(),
            self.labels.clone(),
        )?;
        out.n_dropped = self.n_dropped;
        Ok(out)
    }
}

/// Orders two group labels: numerically when both parse as numbers,
/// otherwise lexicographically.
fn label_order(a: &str, b: &str) -> std::cmp::Ordering {
    match (a.trim().parse::<f64>(), b.trim().parse::<f64>()) {
        (Ok(x), Ok(y)) => x.total_cmp(&y).then_with(|| a.cmp(b)),
        _ => a.cmp(b),
    }
}

/// Splits `(value, group)` rows into two sorted groups. Rows with a
/// missing or non-finite value are dropped and counted.
pub fn load_grouped<I, S>(rows: I) -> Result<GroupedSamples>
where
    I: IntoIterator<Item = (Option<f64>, S)>,
    S: Into<String>,
{
    let mut kept: Vec<(f64, String)> = Vec::new();
    let mut n_dropped = 0;
    for (value, label) in rows {
        match value {
            Some(v) if v.is_finite() => kept.push((v, label.into())),
            _ => n_dropped += 1,
        }
    }

    let mut labels: Vec<String> = kept
        .iter()
        .map(|(_, l)| l.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    labels.sort_by(|a, b| label_order(a, b));
    if labels.len() != 2 {
        return Err(Error::NotBinary(labels));
    }

    let (mut x, mut y) = (Vec::new(), Vec::new());
    for (v, l) in kept {
        if l == labels[0] {
            x.push(v);
        } else {
            y.push(v);
        }
    }
    let second = labels.pop().unwrap_or_default();
    let first = labels.pop().unwrap_or_default();
    let mut g = GroupedSamples::with_labels(x, y, (first, second))?;
    g.n_dropped = n_dropped;
    Ok(g)
}

/// A right-continuous empirical CDF stored as its jumps.
#[derive(Debug, Clone, PartialEq)]
pub struct StepCdf {
    jump_points: Vec<f64>,
    cum_counts: Vec<usize>,
    n: usize,
}

impl StepCdf {
    pub fn jump_points(&self) -> &[f64] {
        &self.jump_points
    }

    pub fn cum_counts(&self) -> &[usize] {
        &self.cum_counts
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of observations `<= r`.
    pub fn count_at(&self, r: f64) -> usize {
        match self.jump_points.partition_point(|&v| v <= r) {
            0 => 0,
            i => self.cum_counts[i - 1],
        }
    }

    pub fn eval(&self, r: f64) -> f64 {
        self.count_at(r) as f64 / self.n as f64
    }
}

/// Builds the ECDF of an ascending, finite, non-empty sample.
pub fn ecdf(sorted_values: &[f64]) -> StepCdf {
    debug_assert!(sorted_values.windows(2).all(|w| w[0] <= w[1]));
    let mut jump_points = Vec::new();
    let mut cum_counts = Vec::new();
    for (i, &v) in sorted_values.iter().enumerate() {
        if jump_points.last() == Some(&v) {
            *cum_counts.last_mut().expect("paired with jump") = i + 1;
        } else {
            jump_points.push(v);
            cum_counts.push(i + 1);
        }
    }
    StepCdf {
        jump_points,
        cum_counts,
        n: sorted_values.len(),
    }
}

/// Sorted distinct values of both groups: the only places where either
/// ECDF, and so any pointwise decision, can change.
pub fn pooled_grid(g: &GroupedSamples) -> Vec<f64> {
    let mut grid = Vec::with_capacity(g.n_x() + g.n_y());
    let (mut i, mut j) = (0, 0);
    while i < g.x.len() || j < g.y.len() {
        let v = match (g.x.get(i), g.y.get(j)) {
            (Some(&a), Some(&b)) if a <= b => a,
            (Some(_), Some(&b)) => b,
            (Some(&a), None) => a,
            (None, Some(&b)) => b,
            (None, None) => unreachable!(),
        };
        while i < g.x.len() && g.x[i] == v {
            i += 1;
        }
        while j < g.y.len() && g.y[j] == v {
            j += 1;
        }
        grid.push(v);
    }
    grid
}

/// Pooled grid together with the counts `(#x <= r, #y <= r)` at each point.
pub fn grid_with_counts(g: &GroupedSamples) -> Vec<(f64, usize, usize)> {
    let mut out = Vec::with_capacity(g.n_x() + g.n_y());
    let (mut i, mut j) = (0, 0);
    for v in pooled_grid(g) {
        while i < g.x.len() && g.x[i] <= v {
            i += 1;
        }
        while j < g.y.len() && g.y[j] <= v {
            j += 1;
        }
        out.push((v, i, j));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TieReport {
    /// Distinct values observed in both groups.
    pub cross_tie_count: usize,
    /// Surplus observations per group (`n - #distinct`).
    pub within_tie_counts: (usize, usize),
}

impl TieReport {
    pub fn has_cross_ties(&self) -> bool {
        self.cross_tie_count > 0
    }
}

pub fn detect_ties(g: &GroupedSamples) -> TieReport {
    let dx = ecdf(&g.x);
    let dy = ecdf(&g.y);
    let (mut i, mut j, mut shared) = (0, 0, 0);
    let (a, b) = (dx.jump_points(), dy.jump_points());
    while i < a.len() && j < b.len() {
        match a[i].total_cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                shared += 1;
                i += 1;
                j += 1;
            }
        }
    }
    TieReport {
        cross_tie_count: shared,
        within_tie_counts: (g.n_x() - a.len(), g.n_y() - b.len()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn load_drops_missing_and_orders_labels() {
        let g = load_grouped(vec![(Some(1.0), "0"), (Some(2.0), "1"), (None, "0")]).unwrap();
        assert_eq!(g.x(), &[1.0]);
        assert_eq!(g.y(), &[2.0]);
        assert_eq!(g.n_dropped(), 1);
        assert_eq!(g.labels(), ("0", "1"));

        let g = load_grouped(vec![(Some(3.0), "b"), (Some(1.0), "a"), (Some(2.0), "a")]).unwrap();
        assert_eq!(g.x(), &[1.0, 2.0]);
        assert_eq!(g.y(), &[3.0]);
        assert_eq!(g.labels(), ("a", "b"));
    }

    #[test]
    fn numeric_labels_sort_numerically() {
        let g = load_grouped(vec![(Some(1.0), "10"), (Some(2.0), "5")]).unwrap();
        assert_eq!(g.labels(), ("5", "10"));
        assert_eq!(g.x(), &[2.0]);
    }

    #[test]
    fn non_binary_groups_fail() {
        let err =
            load_grouped(vec![(Some(1.0), "a"), (Some(2.0), "b"), (Some(3.0), "c")]).unwrap_err();
        assert!(matches!(err, Error::NotBinary(ref l) if l.len() == 3));
        let err = load_grouped(vec![(Some(1.0), "a"), (None, "b")]).unwrap_err();
        assert!(matches!(err, Error::NotBinary(_)));
    }

    #[test]
    fn nan_counts_as_missing() {
        let g = load_grouped(vec![
            (Some(f64::NAN), "a"),
            (Some(1.0), "a"),
            (Some(2.0), "b"),
        ])
        .unwrap();
        assert_eq!(g.n_dropped(), 1);
    }

    #[test]
    fn ecdf_examples() {
        let f = ecdf(&[1.0, 2.0, 2.0, 5.0]);
        assert_eq!(f.eval(2.0), 0.75);
        assert_eq!(f.jump_points(), &[1.0, 2.0, 5.0]);
        assert_eq!(f.cum_counts(), &[1, 3, 4]);

        let f = ecdf(&[7.0]);
        assert_eq!(f.eval(6.9), 0.0);
        assert_eq!(f.eval(7.0), 1.0);
        assert_eq!(f.eval(f64::INFINITY), 1.0);
        assert_eq!(f.eval(f64::NEG_INFINITY), 0.0);
    }

    #[test]
    fn grid_examples() {
        let g = GroupedSamples::new(vec![1.0, 3.0], vec![2.0, 3.0]).unwrap();
        assert_eq!(pooled_grid(&g), vec![1.0, 2.0, 3.0]);
        assert_eq!(
            grid_with_counts(&g),
            vec![(1.0, 1, 0), (2.0, 1, 1), (3.0, 2, 2)]
        );
        let g = GroupedSamples::new(vec![1.0], vec![2.0]).unwrap();
        assert_eq!(pooled_grid(&g), vec![1.0, 2.0]);
    }

    #[test]
    fn tie_examples() {
        let g = GroupedSamples::new(vec![1.0, 2.0], vec![3.0, 4.0]).unwrap();
        assert_eq!(detect_ties(&g).cross_tie_count, 0);
        let g = GroupedSamples::new(vec![1.0, 2.0, 2.0], vec![2.0]).unwrap();
        let t = detect_ties(&g);
        assert_eq!(t.cross_tie_count, 1);
        assert_eq!(t.within_tie_counts, (1, 0));
    }

    #[test]
    fn empty_group_is_an_error() {
        assert!(matches!(
            GroupedSamples::new(vec![], vec![1.0]),
            Err(Error::EmptyGroup(_))
        ));
        assert!(GroupedSamples::new(vec![f64::INFINITY], vec![1.0]).is_err());
    }
}
