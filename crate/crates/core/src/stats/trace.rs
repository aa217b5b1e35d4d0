use alloc::vec;
use alloc::vec::Vec;

use crate::stream::PhotonRecord;
use crate::{Error, Result, PS_PER_S};

/// Half-open observation window `[start, end)` in picoseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimeWindow {
    pub start: u64,
    pub end: u64,
}

impl TimeWindow {
    pub fn new(start: u64, end: u64) -> Self {
        Self { start, end: end.max(start) }
    }

    /// From run start up to and including the last record.
    pub fn from_run_start(records: &[PhotonRecord]) -> Self {
        let end = records.iter().map(|r| r.t).max().map_or(0, |t| t.saturating_add(1));
        Self::new(0, end)
    }

    pub fn len(&self) -> u64 {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }
}

/// Photon counts in consecutive equal-width bins.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinnedTrace {
    pub bin_width_ps: u64,
    pub start_ps: u64,
    pub counts: Vec<u64>,
}

impl BinnedTrace {
    pub fn bin_width(&self) -> f64 {
        self.bin_width_ps as f64 / PS_PER_S
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

/// Incremental binning for streams that are never materialized. Records
/// may arrive in any order; those outside the full bins are ignored.
#[derive(Debug, Clone)]
pub struct TraceBuilder {
    bin_width_ps: u64,
    start_ps: u64,
    counts: Vec<u64>,
}

impl TraceBuilder {
    pub fn new(bin_width_ps: u64, window: TimeWindow) -> Result<Self> {
        if bin_width_ps == 0 {
            return Err(Error::domain("bin width must be at least 1 ps", 0.0));
        }
        let bins = window.len() / bin_width_ps;
        let bins = usize::try_from(bins).map_err(|_| Error::domain("too many bins", bins as f64))?;
        Ok(Self { bin_width_ps, start_ps: window.start, counts: vec![0; bins] })
    }

    #[inline]
    pub fn push(&mut self, t: u64) {
        if t < self.start_ps {
            return;
        }
        let idx = (t - self.start_ps) / self.bin_width_ps;
        if let Some(c) = usize::try_from(idx).ok().and_then(|i| self.counts.get_mut(i)) {
            *c += 1;
        }
    }

    pub fn finish(self) -> BinnedTrace {
        BinnedTrace { bin_width_ps: self.bin_width_ps, start_ps: self.start_ps, counts: self.counts }
    }
}

/// Counts records per bin over `window`; a partial trailing bin is dropped.
pub fn bin_trace(records: &[PhotonRecord], bin_width_ps: u64, window: TimeWindow) -> Result<BinnedTrace> {
    let mut builder = TraceBuilder::new(bin_width_ps, window)?;
    for r in records {
        builder.push(r.t);
    }
    Ok(builder.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream::Origin;

    const MS: u64 = 1_000_000_000;

    fn at(ts: &[u64]) -> Vec<PhotonRecord> {
        ts.iter().map(|&t| PhotonRecord::new(t, Origin::Molecule)).collect()
    }

    #[test]
    fn one_photon_per_bin() {
        let recs = at(&(0..10).map(|k| k * MS + MS / 2).collect::<Vec<_>>());
        let trace = bin_trace(&recs, MS, TimeWindow::new(0, 10 * MS)).unwrap();
        assert_eq!(trace.counts, vec![1; 10]);
        assert_eq!(trace.bin_width(), 1e-3);
    }

    #[test]
    fn single_bin_holds_everything() {
        let recs = at(&[0, 5, 17, 99]);
        let trace = bin_trace(&recs, 100, TimeWindow::new(0, 100)).unwrap();
        assert_eq!(trace.counts, vec![4]);
    }

    #[test]
    fn partial_trailing_bin_dropped() {
        let recs = at(&[1, 11, 21, 25]);
        let trace = bin_trace(&recs, 10, TimeWindow::new(0, 25)).unwrap();
        assert_eq!(trace.counts, vec![1, 1]);
        let auto = bin_trace(&recs, 10, TimeWindow::from_run_start(&recs)).unwrap();
        assert_eq!(auto.counts, vec![1, 1]);
    }

    #[test]
    fn empty_stream_is_empty_trace() {
        let trace = bin_trace(&[], 10, TimeWindow::from_run_start(&[])).unwrap();
        assert!(trace.is_empty());
        assert!(bin_trace(&[], 0, TimeWindow::new(0, 10)).is_err());
    }
}
