//! Lower staircases of (weight, value) samples, kept per logarithmic weight
//! bin.
//!
//! Inside a bin a sample is dropped when another sample has both a weight
//! and a value no larger. Minima of value·weight^k (k ≥ 0) over any union of
//! whole bins, and the record lows in weight order, are unchanged by the
//! pruning.

use std::collections::BTreeMap;

use crate::fourier::DualIndex;

pub const BINS_PER_DECADE: f64 = 64.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub index: DualIndex,
    pub weight: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Default)]
pub struct Envelope {
    bins: BTreeMap<i64, Vec<Sample>>,
    inserted: u64,
}

pub fn bin_of(weight: f64) -> i64 {
    (weight.log10() * BINS_PER_DECADE).floor() as i64
}

/// Lower weight edge of a bin.
pub fn bin_edge(bin: i64) -> f64 {
    10f64.powf(bin as f64 / BINS_PER_DECADE)
}

impl Envelope {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, s: Sample) {
        self.inserted += 1;
        let stair = self.bins.entry(bin_of(s.weight)).or_default();
        // weights strictly increase and values strictly decrease along a stair
        let pos = stair.partition_point(|q| q.weight <= s.weight);
        if pos > 0 {
            let q = &stair[pos - 1];
            if q.value < s.value || (q.value == s.value && (q.weight < s.weight || q.index <= s.index)) {
                return;
            }
        }
        let mut start = pos;
        if pos > 0 && stair[pos - 1].weight == s.weight {
            start -= 1;
        }
        let mut end = pos;
        while end < stair.len() && stair[end].value >= s.value {
            end += 1;
        }
        stair.splice(start..end, std::iter::once(s));
    }

    pub fn merge(mut self, other: Envelope) -> Envelope {
        let inserted = self.inserted + other.inserted;
        for s in other.into_samples() {
            self.insert(s);
        }
        self.inserted = inserted;
        self
    }

    /// Number of samples offered, before pruning.
    pub fn inserted(&self) -> u64 {
        self.inserted
    }

    pub fn len(&self) -> usize {
        self.bins.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    /// Kept samples by increasing weight.
    pub fn samples(&self) -> impl Iterator<Item = &Sample> {
        self.bins.values().flatten()
    }

    pub fn into_samples(self) -> Vec<Sample> {
        self.bins.into_values().flatten().collect()
    }
}

/// Samples whose value is below every value at smaller weight.
pub fn record_lows<'a>(samples: impl IntoIterator<Item = &'a Sample>) -> Vec<&'a Sample> {
    let mut sorted: Vec<&Sample> = samples.into_iter().collect();
    sorted.sort_by(|a, b| a.weight.total_cmp(&b.weight).then_with(|| a.value.total_cmp(&b.value)).then_with(|| a.index.cmp(&b.index)));
    let mut out: Vec<&Sample> = Vec::new();
    for s in sorted {
        if out.last().map_or(true, |r| s.value < r.value) {
            out.push(s);
        }
    }
    out
}

/// Minimum of value·weight^k over samples with lo ≤ weight < hi.
pub fn interval_min(samples: &[&Sample], k: f64, lo: f64, hi: f64) -> Option<(f64, usize)> {
    samples
        .iter()
        .enumerate()
        .filter(|(_, s)| s.weight >= lo && s.weight < hi)
        .map(|(i, s)| (s.value * s.weight.powf(k), i))
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
}

/// Bin edge nearest the geometric midpoint of [lo, hi].
pub fn geometric_split(lo: f64, hi: f64) -> f64 {
    let mid = (lo.log10() + hi.log10()) / 2.0;
    bin_edge((mid * BINS_PER_DECADE).round() as i64)
}
