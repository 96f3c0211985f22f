//! Will matrix: a sparse, time-indexed map from (human, item) pairs to
//! alignment values in [-1, 1], plus the scalar metrics defined over it.
//!
//! Rows are humans, columns are items. Every stored value carries a
//! provenance marker so directly observed votes can be told apart from
//! model-inferred fill-ins.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// Seconds in a Julian year (365.25 days).
pub const SECONDS_PER_YEAR: f64 = 31_557_600.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HumanId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ItemId(pub u32);

impl fmt::Display for HumanId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for ItemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A digital object describing a characteristic of a possible future;
/// one matrix column. Tags are opaque partition labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Item {
    pub id: ItemId,
    pub text: String,
    pub tags: Vec<String>,
}

impl Item {
    pub fn new(id: ItemId, text: impl Into<String>) -> Result<Self> {
        let text = text.into();
        if text.is_empty() {
            return Err(Error::EmptyText);
        }
        Ok(Item {
            id,
            text,
            tags: Vec::new(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Provenance {
    Observed,
    Inferred,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::Observed => write!(f, "observed"),
            Provenance::Inferred => write!(f, "inferred"),
        }
    }
}

/// Human-aggregation strategy ψ. The only built-in is the unweighted
/// arithmetic mean; the identifier exists so alternatives can be added
/// without changing call sites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AggregationStrategy {
    #[default]
    Mean,
}

/// Per-item will aggregated across humans at one time step.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregatedWill {
    pub values: Vec<f64>,
    pub t: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WillEntry {
    pub value: f64,
    pub provenance: Provenance,
}

/// Outputs of the physical-limit estimate for sensing a square Will
/// matrix through individual deliberate actions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensingFeasibility {
    /// Fraction of the matrix sensed over the stated duration, capped at 1.
    pub coverage_fraction: f64,
    /// Years a full sweep of the matrix would take at the same rate.
    pub years_to_full: f64,
    /// The same sweep expressed in human lifetimes.
    pub lifetimes: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct WillMatrix {
    n_humans: usize,
    n_items: usize,
    // time -> (human, item) -> entry; BTreeMaps keep export order stable.
    snapshots: BTreeMap<u64, BTreeMap<(u32, u32), WillEntry>>,
}

fn check_value(what: &'static str, v: f64) -> Result<()> {
    if !(-1.0..=1.0).contains(&v) || v.is_nan() {
        return Err(Error::ValueOutOfRange {
            what,
            value: v,
            lo: -1.0,
            hi: 1.0,
        });
    }
    Ok(())
}

impl WillMatrix {
    pub fn new(n_humans: usize, n_items: usize) -> Self {
        WillMatrix {
            n_humans,
            n_items,
            snapshots: BTreeMap::new(),
        }
    }

    pub fn n_humans(&self) -> usize {
        self.n_humans
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    /// Widens the matrix by one unobserved column and returns its id.
    pub fn add_item(&mut self) -> ItemId {
        let id = ItemId(self.n_items as u32);
        self.n_items += 1;
        id
    }

    pub fn snapshot_times(&self) -> impl Iterator<Item = u64> + '_ {
        self.snapshots.keys().copied()
    }

    pub fn has_snapshot(&self, t: u64) -> bool {
        self.snapshots.contains_key(&t)
    }

    fn check_indices(&self, h: HumanId, j: ItemId) -> Result<()> {
        if h.0 as usize >= self.n_humans {
            return Err(Error::IndexOutOfRange {
                what: "human",
                index: h.0 as usize,
                size: self.n_humans,
            });
        }
        if j.0 as usize >= self.n_items {
            return Err(Error::IndexOutOfRange {
                what: "item",
                index: j.0 as usize,
                size: self.n_items,
            });
        }
        Ok(())
    }

    /// Stores one alignment value. The latest write at a given (t, h, j)
    /// wins.
    pub fn record_entry(
        &mut self,
        t: u64,
        h: HumanId,
        j: ItemId,
        value: f64,
        provenance: Provenance,
    ) -> Result<()> {
        check_value("will value", value)?;
        self.check_indices(h, j)?;
        self.snapshots
            .entry(t)
            .or_default()
            .insert((h.0, j.0), WillEntry { value, provenance });
        Ok(())
    }

    pub fn entry(&self, t: u64, h: HumanId, j: ItemId) -> Option<WillEntry> {
        self.snapshots
            .get(&t)
            .and_then(|s| s.get(&(h.0, j.0)))
            .copied()
    }

    /// Reads a value, treating missing entries as 0 ("no known alignment").
    pub fn value_or_zero(&self, t: u64, h: HumanId, j: ItemId) -> f64 {
        self.entry(t, h, j).map(|e| e.value).unwrap_or(0.0)
    }

    pub fn entries_at(&self, t: u64) -> impl Iterator<Item = (HumanId, ItemId, WillEntry)> + '_ {
        self.snapshots
            .get(&t)
            .into_iter()
            .flat_map(|s| s.iter().map(|(&(h, j), &e)| (HumanId(h), ItemId(j), e)))
    }

    /// ψ(w_t): collapses per-human wills into one value per item.
    pub fn aggregate_humans(&self, t: u64) -> Result<AggregatedWill> {
        self.aggregate_humans_with(t, AggregationStrategy::Mean)
    }

    pub fn aggregate_humans_with(
        &self,
        t: u64,
        strategy: AggregationStrategy,
    ) -> Result<AggregatedWill> {
        let snapshot = self.snapshots.get(&t).ok_or(Error::MissingSnapshot { t })?;
        let AggregationStrategy::Mean = strategy;
        let mut sums = vec![0.0; self.n_items];
        for (&(_, j), e) in snapshot.iter() {
            sums[j as usize] += e.value;
        }
        if self.n_humans > 0 {
            let n = self.n_humans as f64;
            for s in &mut sums {
                *s /= n;
            }
        }
        Ok(AggregatedWill { values: sums, t })
    }

    /// Alignment between one human's will row and a state, given that
    /// state's per-item alignment column: Σ_j w^{ij} m^{jk}.
    ///
    /// Missing entries read as 0, so any time step is accepted.
    pub fn state_alignment(&self, t: u64, h: HumanId, m_column: &[f64]) -> Result<f64> {
        if m_column.len() != self.n_items {
            return Err(Error::LengthMismatch {
                what: "m column",
                got: m_column.len(),
                expected: self.n_items,
            });
        }
        if h.0 as usize >= self.n_humans {
            return Err(Error::IndexOutOfRange {
                what: "human",
                index: h.0 as usize,
                size: self.n_humans,
            });
        }
        let mut total = 0.0;
        if let Some(snapshot) = self.snapshots.get(&t) {
            for (&(hh, j), e) in snapshot.range((h.0, 0)..=(h.0, u32::MAX)) {
                debug_assert_eq!(hh, h.0);
                total += e.value * m_column[j as usize];
            }
        }
        Ok(total)
    }

    /// Average magnitude of the per-step change of the subset's entries
    /// across all consecutive snapshot pairs inside [start, end].
    ///
    /// Consecutive snapshots count as one unit time step regardless of
    /// their nominal spacing; entries missing from a snapshot read as 0.
    pub fn stability(&self, subset: &[(HumanId, ItemId)], start: u64, end: u64) -> Result<f64> {
        let times: Vec<u64> = self
            .snapshots
            .range(start..=end)
            .map(|(&t, _)| t)
            .collect();
        if times.len() < 2 {
            return Err(Error::TooFewSnapshots { start, end });
        }
        for &(h, j) in subset {
            self.check_indices(h, j)?;
        }
        if subset.is_empty() {
            return Ok(0.0);
        }
        let steps = times.len() - 1;
        let mut total = 0.0;
        for pair in times.windows(2) {
            for &(h, j) in subset {
                let prev = self.value_or_zero(pair[0], h, j);
                let next = self.value_or_zero(pair[1], h, j);
                total += (next - prev).abs();
            }
        }
        Ok(total / (subset.len() * steps) as f64)
    }

    /// Product of an item's fractional support (w > 0) within two disjoint
    /// participant segments.
    pub fn group_informed_consensus(
        &self,
        t: u64,
        j: ItemId,
        segment_a: &[HumanId],
        segment_b: &[HumanId],
    ) -> Result<f64> {
        if segment_a.is_empty() {
            return Err(Error::EmptySegment { which: "a" });
        }
        if segment_b.is_empty() {
            return Err(Error::EmptySegment { which: "b" });
        }
        let set_a: BTreeSet<u32> = segment_a.iter().map(|h| h.0).collect();
        if let Some(h) = segment_b.iter().find(|h| set_a.contains(&h.0)) {
            return Err(Error::OverlappingSegments { id: h.0 });
        }
        for &h in segment_a.iter().chain(segment_b) {
            self.check_indices(h, j)?;
        }
        let support = |segment: &[HumanId]| {
            let favorable = segment
                .iter()
                .filter(|&&h| self.value_or_zero(t, h, j) > 0.0)
                .count();
            favorable as f64 / segment.len() as f64
        };
        Ok(support(segment_a) * support(segment_b))
    }
}

/// Physical-limit estimate for sensing a square Will matrix (one unique
/// item per human) through deliberate actions of fixed duration.
pub fn sensing_feasibility(
    population: f64,
    seconds_per_action: f64,
    time_fraction: f64,
    duration_years: f64,
    lifetime_years: f64,
) -> Result<SensingFeasibility> {
    for (what, v) in [
        ("population", population),
        ("seconds_per_action", seconds_per_action),
        ("time_fraction", time_fraction),
        ("duration_years", duration_years),
        ("lifetime_years", lifetime_years),
    ] {
        if v.is_nan() || v <= 0.0 || !v.is_finite() {
            return Err(Error::NonPositive { what, value: v });
        }
    }
    let actions = population * time_fraction * duration_years * SECONDS_PER_YEAR
        / seconds_per_action;
    let cells = population * population;
    let raw_coverage = actions / cells;
    Ok(SensingFeasibility {
        coverage_fraction: raw_coverage.min(1.0),
        years_to_full: duration_years / raw_coverage,
        lifetimes: duration_years / raw_coverage / lifetime_years,
    })
}

/// Formats a value at 9 significant digits, the interchange precision.
pub(crate) fn format_value(v: f64) -> String {
    format!("{v:.8e}")
}

impl WillMatrix {
    /// Writes `t,h,j,value,provenance` records, sorted by (t, h, j).
    pub fn export_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "t,h,j,value,provenance")?;
        for (&t, snapshot) in &self.snapshots {
            for (&(h, j), e) in snapshot {
                writeln!(
                    out,
                    "{t},{h},{j},{},{}",
                    format_value(e.value),
                    e.provenance
                )?;
            }
        }
        Ok(())
    }

    /// Reads the interchange format back. Dimensions are taken from the
    /// largest indices present unless explicit dimensions are given.
    pub fn import_csv<R: BufRead>(reader: R) -> Result<WillMatrix> {
        Self::import_csv_impl(reader, None)
    }

    pub fn import_csv_with_dims<R: BufRead>(
        reader: R,
        n_humans: usize,
        n_items: usize,
    ) -> Result<WillMatrix> {
        Self::import_csv_impl(reader, Some((n_humans, n_items)))
    }

    fn import_csv_impl<R: BufRead>(reader: R, dims: Option<(usize, usize)>) -> Result<WillMatrix> {
        let mut records = Vec::new();
        let mut max_h = 0usize;
        let mut max_j = 0usize;
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            if idx == 0 {
                if line.trim() != "t,h,j,value,provenance" {
                    return Err(Error::Parse {
                        line: lineno,
                        message: format!("expected header 't,h,j,value,provenance', got '{line}'"),
                    });
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 5 {
                return Err(Error::Parse {
                    line: lineno,
                    message: format!("expected 5 fields, got {}", fields.len()),
                });
            }
            let parse_err = |message: String| Error::Parse {
                line: lineno,
                message,
            };
            let t: u64 = fields[0]
                .trim()
                .parse()
                .map_err(|e| parse_err(format!("bad time: {e}")))?;
            let h: u32 = fields[1]
                .trim()
                .parse()
                .map_err(|e| parse_err(format!("bad human id: {e}")))?;
            let j: u32 = fields[2]
                .trim()
                .parse()
                .map_err(|e| parse_err(format!("bad item id: {e}")))?;
            let value: f64 = fields[3]
                .trim()
                .parse()
                .map_err(|e| parse_err(format!("bad value: {e}")))?;
            let provenance = match fields[4].trim() {
                "observed" => Provenance::Observed,
                "inferred" => Provenance::Inferred,
                other => {
                    return Err(parse_err(format!("unknown provenance '{other}'")));
                }
            };
            max_h = max_h.max(h as usize + 1);
            max_j = max_j.max(j as usize + 1);
            records.push((t, h, j, value, provenance));
        }
        let (n_humans, n_items) = dims.unwrap_or((max_h, max_j));
        let mut matrix = WillMatrix::new(n_humans, n_items);
        for (t, h, j, value, provenance) in records {
            matrix.record_entry(t, HumanId(h), ItemId(j), value, provenance)?;
        }
        Ok(matrix)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix_with(entries: &[(u64, u32, u32, f64)]) -> WillMatrix {
        let n_h = entries.iter().map(|e| e.1 + 1).max().unwrap_or(1) as usize;
        let n_j = entries.iter().map(|e| e.2 + 1).max().unwrap_or(1) as usize;
        let mut m = WillMatrix::new(n_h, n_j);
        for &(t, h, j, v) in entries {
            m.record_entry(t, HumanId(h), ItemId(j), v, Provenance::Observed)
                .unwrap();
        }
        m
    }

    #[test]
    fn record_then_read() {
        let m = matrix_with(&[(0, 0, 0, 0.5)]);
        assert_eq!(m.value_or_zero(0, HumanId(0), ItemId(0)), 0.5);
        assert_eq!(
            m.entry(0, HumanId(0), ItemId(0)).unwrap().provenance,
            Provenance::Observed
        );
    }

    #[test]
    fn rejects_out_of_range_value() {
        let mut m = WillMatrix::new(1, 1);
        let err = m
            .record_entry(0, HumanId(0), ItemId(0), 1.5, Provenance::Observed)
            .unwrap_err();
        assert!(matches!(err, Error::ValueOutOfRange { .. }));
        let err = m
            .record_entry(0, HumanId(0), ItemId(0), f64::NAN, Provenance::Observed)
            .unwrap_err();
        assert!(matches!(err, Error::ValueOutOfRange { .. }));
    }

    #[test]
    fn rejects_out_of_range_indices() {
        let mut m = WillMatrix::new(2, 3);
        assert!(m
            .record_entry(0, HumanId(2), ItemId(0), 0.0, Provenance::Observed)
            .is_err());
        assert!(m
            .record_entry(0, HumanId(0), ItemId(3), 0.0, Provenance::Observed)
            .is_err());
    }

    #[test]
    fn last_write_wins() {
        let mut m = WillMatrix::new(1, 1);
        m.record_entry(0, HumanId(0), ItemId(0), 0.3, Provenance::Observed)
            .unwrap();
        m.record_entry(0, HumanId(0), ItemId(0), -0.3, Provenance::Inferred)
            .unwrap();
        let e = m.entry(0, HumanId(0), ItemId(0)).unwrap();
        assert_eq!(e.value, -0.3);
        assert_eq!(e.provenance, Provenance::Inferred);
    }

    #[test]
    fn aggregate_constant_column() {
        let m = matrix_with(&[(0, 0, 0, 0.5), (0, 1, 0, 0.5), (0, 2, 0, 0.5), (0, 3, 0, 0.5)]);
        let agg = m.aggregate_humans(0).unwrap();
        assert!((agg.values[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn aggregate_symmetric_column_cancels() {
        let m = matrix_with(&[(0, 0, 0, 1.0), (0, 1, 0, -1.0)]);
        let agg = m.aggregate_humans(0).unwrap();
        assert_eq!(agg.values[0], 0.0);
    }

    #[test]
    fn aggregate_matches_direct_summation() {
        // 3x2 instance checked against a per-column summation done by hand
        // over the same entries.
        let entries = [
            (0, 0, 0, 0.25),
            (0, 1, 0, -0.5),
            (0, 2, 0, 0.75),
            (0, 0, 1, 1.0),
            (0, 2, 1, -0.25),
        ];
        let m = matrix_with(&entries);
        let agg = m.aggregate_humans(0).unwrap();
        for j in 0..2 {
            let direct: f64 = entries
                .iter()
                .filter(|e| e.2 == j)
                .map(|e| e.3)
                .sum::<f64>()
                / 3.0;
            assert!((agg.values[j as usize] - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn aggregate_missing_snapshot_errors() {
        let m = WillMatrix::new(2, 2);
        assert!(matches!(
            m.aggregate_humans(7),
            Err(Error::MissingSnapshot { t: 7 })
        ));
    }

    #[test]
    fn state_alignment_dot_product() {
        let m = matrix_with(&[(0, 0, 0, 1.0), (0, 0, 1, 0.0)]);
        let v = m.state_alignment(0, HumanId(0), &[0.7, 0.3]).unwrap();
        assert!((v - 0.7).abs() < 1e-12);
    }

    #[test]
    fn state_alignment_zero_row() {
        let m = WillMatrix::new(1, 2);
        assert_eq!(m.state_alignment(0, HumanId(0), &[0.7, 0.3]).unwrap(), 0.0);
    }

    #[test]
    fn state_alignment_cancellation() {
        let m = matrix_with(&[(0, 0, 0, 1.0), (0, 0, 1, -1.0)]);
        let v = m.state_alignment(0, HumanId(0), &[0.5, 0.5]).unwrap();
        assert!(v.abs() < 1e-12);
    }

    #[test]
    fn state_alignment_length_mismatch() {
        let m = WillMatrix::new(1, 2);
        assert!(matches!(
            m.state_alignment(0, HumanId(0), &[0.5]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn stability_constant_is_zero() {
        let m = matrix_with(&[(0, 0, 0, 0.4), (1, 0, 0, 0.4), (2, 0, 0, 0.4)]);
        let s = m.stability(&[(HumanId(0), ItemId(0))], 0, 2).unwrap();
        assert_eq!(s, 0.0);
    }

    #[test]
    fn stability_unit_step() {
        let m = matrix_with(&[(0, 0, 0, 0.0), (1, 0, 0, 1.0)]);
        let s = m.stability(&[(HumanId(0), ItemId(0))], 0, 1).unwrap();
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn stability_two_elements() {
        let m = matrix_with(&[
            (0, 0, 0, 0.0),
            (0, 0, 1, 0.0),
            (1, 0, 0, 0.2),
            (1, 0, 1, -0.4),
        ]);
        let s = m
            .stability(&[(HumanId(0), ItemId(0)), (HumanId(0), ItemId(1))], 0, 1)
            .unwrap();
        assert!((s - 0.3).abs() < 1e-12);
    }

    #[test]
    fn stability_needs_two_snapshots() {
        let m = matrix_with(&[(0, 0, 0, 0.4)]);
        assert!(matches!(
            m.stability(&[(HumanId(0), ItemId(0))], 0, 0),
            Err(Error::TooFewSnapshots { .. })
        ));
    }

    #[test]
    fn consensus_unanimous() {
        let m = matrix_with(&[(0, 0, 0, 0.9), (0, 1, 0, 0.3), (0, 2, 0, 0.8), (0, 3, 0, 0.1)]);
        let c = m
            .group_informed_consensus(
                0,
                ItemId(0),
                &[HumanId(0), HumanId(1)],
                &[HumanId(2), HumanId(3)],
            )
            .unwrap();
        assert!((c - 1.0).abs() < 1e-12);
    }

    #[test]
    fn consensus_fractional_product() {
        // segment a: 4 of 5 support; segment b: 1 of 2 support.
        let mut m = WillMatrix::new(7, 1);
        for (h, v) in [(0, 0.5), (1, 0.5), (2, 0.5), (3, 0.5), (4, -0.5)] {
            m.record_entry(0, HumanId(h), ItemId(0), v, Provenance::Observed)
                .unwrap();
        }
        m.record_entry(0, HumanId(5), ItemId(0), 0.5, Provenance::Observed)
            .unwrap();
        m.record_entry(0, HumanId(6), ItemId(0), -0.5, Provenance::Observed)
            .unwrap();
        let seg_a: Vec<HumanId> = (0..5).map(HumanId).collect();
        let seg_b = vec![HumanId(5), HumanId(6)];
        let c = m
            .group_informed_consensus(0, ItemId(0), &seg_a, &seg_b)
            .unwrap();
        assert!((c - 0.8 * 0.5).abs() < 1e-12);
    }

    #[test]
    fn consensus_absorbing_zero() {
        let m = matrix_with(&[(0, 0, 0, 0.9), (0, 1, 0, -0.9)]);
        let c = m
            .group_informed_consensus(0, ItemId(0), &[HumanId(0)], &[HumanId(1)])
            .unwrap();
        assert_eq!(c, 0.0);
    }

    #[test]
    fn consensus_ties_at_zero_are_non_support() {
        let m = matrix_with(&[(0, 0, 0, 0.0), (0, 1, 0, 0.5)]);
        let c = m
            .group_informed_consensus(0, ItemId(0), &[HumanId(0)], &[HumanId(1)])
            .unwrap();
        assert_eq!(c, 0.0);
    }

    #[test]
    fn consensus_rejects_empty_or_overlapping() {
        let m = matrix_with(&[(0, 0, 0, 0.5), (0, 1, 0, 0.5)]);
        assert!(m
            .group_informed_consensus(0, ItemId(0), &[], &[HumanId(1)])
            .is_err());
        assert!(m
            .group_informed_consensus(0, ItemId(0), &[HumanId(0)], &[HumanId(0)])
            .is_err());
    }

    #[test]
    fn sensing_feasibility_global_scenario() {
        let f = sensing_feasibility(8e9, 10.0, 1.0, 1.0, 80.0).unwrap();
        // 0.04% of the matrix per year; a full sweep takes > 30 lifetimes.
        assert!((f.coverage_fraction * 100.0 - 0.04).abs() < 0.005);
        assert!(f.lifetimes > 30.0);
    }

    #[test]
    fn sensing_feasibility_single_cell_caps_at_one() {
        let f = sensing_feasibility(1.0, 10.0, 1.0, 1.0, 80.0).unwrap();
        assert_eq!(f.coverage_fraction, 1.0);
        assert!(f.years_to_full < 1.0);
    }

    #[test]
    fn sensing_feasibility_million_population() {
        let f = sensing_feasibility(1e6, 10.0, 1.0, 1.0, 80.0).unwrap();
        // raw coverage 3.15576 caps to 1; the sweep rate is what matters.
        assert_eq!(f.coverage_fraction, 1.0);
        assert!((1.0 / f.years_to_full - 3.15576).abs() < 1e-6);
    }

    #[test]
    fn sensing_feasibility_rejects_nonpositive() {
        assert!(sensing_feasibility(0.0, 10.0, 1.0, 1.0, 80.0).is_err());
        assert!(sensing_feasibility(1e6, -1.0, 1.0, 1.0, 80.0).is_err());
    }

    #[test]
    fn sensing_coverage_halves_when_population_doubles() {
        let a = sensing_feasibility(16e9, 10.0, 1.0, 1.0, 80.0).unwrap();
        let b = sensing_feasibility(8e9, 10.0, 1.0, 1.0, 80.0).unwrap();
        assert!((a.coverage_fraction * 2.0 - b.coverage_fraction).abs() < 1e-12);
    }

    #[test]
    fn widen_changes_aggregate_length() {
        let mut m = matrix_with(&[(0, 0, 0, 0.5)]);
        assert_eq!(m.aggregate_humans(0).unwrap().values.len(), 1);
        m.add_item();
        assert_eq!(m.aggregate_humans(0).unwrap().values.len(), 2);
    }

    #[test]
    fn csv_round_trip_is_idempotent() {
        let m = matrix_with(&[
            (0, 0, 0, 0.123456789),
            (0, 1, 1, -1.0),
            (3, 0, 1, 0.25),
        ]);
        let mut first = Vec::new();
        m.export_csv(&mut first).unwrap();
        let imported = WillMatrix::import_csv(first.as_slice()).unwrap();
        let mut second = Vec::new();
        imported.export_csv(&mut second).unwrap();
        assert_eq!(first, second);
        assert_eq!(imported.n_humans(), 2);
        assert_eq!(imported.n_items(), 2);
    }

    #[test]
    fn csv_import_rejects_bad_header_and_fields() {
        let bad_header = "time,h,j,v,p\n0,0,0,0.5,observed\n";
        assert!(WillMatrix::import_csv(bad_header.as_bytes()).is_err());
        let bad_value = "t,h,j,value,provenance\n0,0,0,oops,observed\n";
        assert!(WillMatrix::import_csv(bad_value.as_bytes()).is_err());
        let bad_prov = "t,h,j,value,provenance\n0,0,0,0.5,guessed\n";
        assert!(WillMatrix::import_csv(bad_prov.as_bytes()).is_err());
    }
}
