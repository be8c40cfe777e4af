use serde::{Deserialize, Serialize};

use crate::model::{Minutes, TimeGrid};

/// Inclusive run of market steps `[first, last]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StepSpan {
    pub first: usize,
    pub last: usize,
}

impl StepSpan {
    pub fn single(k: usize) -> Self {
        StepSpan { first: k, last: k }
    }

    pub fn len(&self) -> usize {
        self.last - self.first + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, k: usize) -> bool {
        self.first <= k && k <= self.last
    }

    pub fn overlaps(&self, other: &StepSpan) -> bool {
        self.first <= other.last && other.first <= self.last
    }

    pub fn steps(&self) -> std::ops::RangeInclusive<usize> {
        self.first..=self.last
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IndexKind {
    Up,
    Down,
    Shutdown,
}

impl IndexKind {
    /// Order direction: upward offers are sales.
    pub fn sigma(self) -> i8 {
        match self {
            IndexKind::Up => -1,
            IndexKind::Down | IndexKind::Shutdown => 1,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            IndexKind::Up => "up",
            IndexKind::Down => "dn",
            IndexKind::Shutdown => "sd",
        }
    }
}

/// A contiguous block of market steps on which one logical multi-step order is built.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CombinatorialIndex {
    pub unit_id: String,
    pub t_start: Minutes,
    /// Exclusive end of the block (end of its last step).
    pub t_end: Minutes,
    pub kind: IndexKind,
    pub span: StepSpan,
}

impl CombinatorialIndex {
    pub fn new(unit_id: &str, grid: &TimeGrid, span: StepSpan, kind: IndexKind) -> Self {
        CombinatorialIndex {
            unit_id: unit_id.to_string(),
            t_start: grid.time(span.first as i64),
            t_end: grid.time(span.last as i64 + 1),
            kind,
            span,
        }
    }

    /// Start time of the last step of the block.
    pub fn last_step(&self, grid: &TimeGrid) -> Minutes {
        grid.time(self.span.last as i64)
    }

    pub fn duration(&self) -> Minutes {
        self.t_end - self.t_start
    }
}

/// Every contiguous run of available steps, or only single steps when
/// `combinatorial` is false. Output is ordered by first step, then length.
pub fn enumerate_indexes(mask: &[bool], combinatorial: bool) -> Vec<StepSpan> {
    let mut out = Vec::new();
    for first in 0..mask.len() {
        if !mask[first] {
            continue;
        }
        if !combinatorial {
            out.push(StepSpan::single(first));
            continue;
        }
        let mut last = first;
        while last < mask.len() && mask[last] {
            out.push(StepSpan { first, last });
            last += 1;
        }
    }
    out
}
