//! CSV ingestion with optional row filters.

use std::cmp::Ordering;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::samples::{load_grouped, GroupedSamples};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    Ne,
    Le,
    Ge,
    Lt,
    Gt,
}

impl CmpOp {
    fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
            CmpOp::Le => "<=",
            CmpOp::Ge => ">=",
            CmpOp::Lt => "<",
            CmpOp::Gt => ">",
        }
    }

    fn holds(self, ord: Ordering) -> bool {
        match self {
            CmpOp::Eq => ord == Ordering::Equal,
            CmpOp::Ne => ord != Ordering::Equal,
            CmpOp::Le => ord != Ordering::Greater,
            CmpOp::Ge => ord != Ordering::Less,
            CmpOp::Lt => ord == Ordering::Less,
            CmpOp::Gt => ord == Ordering::Greater,
        }
    }
}

/// `column <op> literal`. Compared numerically when both sides parse as
/// numbers, as text otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct RowFilter {
    pub column: String,
    pub op: CmpOp,
    pub literal: String,
}

impl RowFilter {
    pub fn matches(&self, cell: &str) -> bool {
        let cell = cell.trim();
        let ord = match (cell.parse::<f64>(), self.literal.parse::<f64>()) {
            (Ok(a), Ok(b)) => match a.partial_cmp(&b) {
                Some(o) => o,
                None => return self.op == CmpOp::Ne,
            },
            _ => cell.cmp(self.literal.as_str()),
        };
        self.op.holds(ord)
    }
}

impl FromStr for RowFilter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        const OPS: [(&str, CmpOp); 6] = [
            ("==", CmpOp::Eq),
            ("!=", CmpOp::Ne),
            ("<=", CmpOp::Le),
            (">=", CmpOp::Ge),
            ("<", CmpOp::Lt),
            (">", CmpOp::Gt),
        ];
        // leftmost operator wins; two-character forms are listed first
        let found = OPS
            .iter()
            .filter_map(|&(sym, op)| s.find(sym).map(|i| (i, sym, op)))
            .min_by_key(|&(i, sym, _)| (i, std::cmp::Reverse(sym.len())));
        let (i, sym, op) = found.ok_or_else(|| Error::BadFilter(s.to_string()))?;
        let column = s[..i].trim();
        let literal = s[i + sym.len()..].trim().trim_matches('"');
        if column.is_empty() || literal.is_empty() {
            return Err(Error::BadFilter(s.to_string()));
        }
        Ok(RowFilter {
            column: column.to_string(),
            op,
            literal: literal.to_string(),
        })
    }
}

impl fmt::Display for RowFilter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}{}", self.column, self.op.symbol(), self.literal)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsvData {
    pub samples: GroupedSamples,
    /// Rows excluded by the filters, counted apart from missing values.
    pub n_filtered: usize,
}

fn parse_value(cell: &str) -> Option<f64> {
    match cell.trim() {
        "" | "." => None,
        t => t.parse().ok(),
    }
}

/// Reads `value_col` split by `group_col`. Rows must satisfy every filter.
/// Rows with an empty or unparseable value, or an empty group, are dropped
/// and counted.
pub fn read_csv(
    path: &Path,
    value_col: &str,
    group_col: &str,
    filters: &[RowFilter],
) -> Result<CsvData> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(file);
    let headers = reader.headers()?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let vi = column(value_col)?;
    let gi = column(group_col)?;
    let fi: Vec<usize> = filters
        .iter()
        .map(|f| column(&f.column))
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    let mut n_filtered = 0;
    for record in reader.records() {
        let record = record?;
        let cell = |i: usize| record.get(i).unwrap_or("");
        if !filters.iter().zip(&fi).all(|(f, &i)| f.matches(cell(i))) {
            n_filtered += 1;
            continue;
        }
        let label = cell(gi).trim();
        let value = if label.is_empty() {
            None
        } else {
            parse_value(cell(vi))
        };
        rows.push((value, label.to_string()));
    }
    Ok(CsvData {
        samples: load_grouped(rows)?,
        n_filtered,
    })
}
