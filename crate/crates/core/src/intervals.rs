//! Sparse interval transition rows shared by models and products.

use serde::Serialize;

/// Tolerance for comparisons against row sums. Per-entry bound checks are exact.
pub const SUM_TOLERANCE: f64 = 1e-9;

/// One outgoing transition `from -> to` with probability in `[lower, upper]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntervalEntry {
    pub to: usize,
    pub lower: f64,
    pub upper: f64,
}

impl IntervalEntry {
    /// An edge that an adversary may switch on or off.
    pub fn is_optional(&self) -> bool {
        self.lower == 0.0 && self.upper > 0.0
    }

    pub fn is_forced(&self) -> bool {
        self.lower > 0.0
    }
}

/// Row-major sparse interval matrix. Only entries with a positive upper bound
/// are stored, sorted by destination.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct IntervalMatrix {
    rows: Vec<Vec<IntervalEntry>>,
}

impl IntervalMatrix {
    pub fn from_rows(mut rows: Vec<Vec<IntervalEntry>>) -> Self {
        for row in &mut rows {
            row.retain(|e| e.upper > 0.0);
            row.sort_by_key(|e| e.to);
        }
        IntervalMatrix { rows }
    }

    pub fn from_dense(lower: &[Vec<f64>], upper: &[Vec<f64>]) -> Self {
        let rows = lower
            .iter()
            .zip(upper)
            .map(|(lo, hi)| {
                lo.iter()
                    .zip(hi)
                    .enumerate()
                    .filter(|(_, (_, &u))| u > 0.0)
                    .map(|(to, (&lower, &upper))| IntervalEntry { to, lower, upper })
                    .collect()
            })
            .collect();
        IntervalMatrix { rows }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn row(&self, state: usize) -> &[IntervalEntry] {
        &self.rows[state]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[IntervalEntry]> {
        self.rows.iter().map(Vec::as_slice)
    }

    pub fn entry(&self, from: usize, to: usize) -> Option<&IntervalEntry> {
        let row = &self.rows[from];
        row.binary_search_by_key(&to, |e| e.to).ok().map(|i| &row[i])
    }

    pub fn lower(&self, from: usize, to: usize) -> f64 {
        self.entry(from, to).map_or(0.0, |e| e.lower)
    }

    pub fn upper(&self, from: usize, to: usize) -> f64 {
        self.entry(from, to).map_or(0.0, |e| e.upper)
    }

    /// `true` when the lower bounds of `state` leave mass to distribute, so
    /// that optional edges can carry positive probability.
    pub fn has_slack(&self, state: usize) -> bool {
        self.rows[state].iter().map(|e| e.lower).sum::<f64>() < 1.0 - SUM_TOLERANCE
    }

    /// Entries of `state` that some admissible distribution makes positive:
    /// forced edges, plus optional edges when the row has slack.
    pub fn support(&self, state: usize) -> impl Iterator<Item = &IntervalEntry> {
        let slack = self.has_slack(state);
        self.rows[state].iter().filter(move |e| slack || e.is_forced())
    }

    /// Number of usable optional edges over the rows selected by `within`.
    pub fn optional_edge_count(&self, within: impl Fn(usize) -> bool) -> usize {
        (0..self.rows.len())
            .filter(|&s| within(s))
            .map(|s| self.support(s).filter(|e| e.is_optional()).count())
            .sum()
    }
}

/// `true` when a mass sum reaches 1 up to [`SUM_TOLERANCE`].
pub fn covers_unit_mass(sum: f64) -> bool {
    sum >= 1.0 - SUM_TOLERANCE
}

/// `true` when a mass sum does not exceed 1 up to [`SUM_TOLERANCE`].
pub fn within_unit_mass(sum: f64) -> bool {
    sum <= 1.0 + SUM_TOLERANCE
}
