//! Cross-correlation of two detector arms.
//!
//! Coincidences are counted over all lags `τ = t_B − t_A` in
//! `[−τ_max, τ_max)` with a two-pointer sweep, so the cost is linear in the
//! number of events plus the number of coincidences in the window.

use alloc::vec;
use alloc::vec::Vec;

use crate::stream::PhotonRecord;
use crate::{Error, Result, PS_PER_S};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum G2Mode {
    /// g²(0) is the normalized value of the bin containing τ = 0.
    Continuous,
    /// g²(0) is the zero-delay peak area over the mean side-peak area, each
    /// peak integrated over one repetition period centred on `k·period`.
    Pulsed { period_ps: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct G2Options {
    pub tau_max_ps: u64,
    pub bins: usize,
    pub mode: G2Mode,
    /// Observation time used for normalization; defaults to the span of
    /// both streams.
    pub duration_ps: Option<u64>,
}

/// Integrated coincidences per repetition period, index `k` for the peak
/// at `τ = k·period`, `k ∈ [−K, K]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PeakAreas {
    pub side_peaks: usize,
    pub areas: Vec<u64>,
}

impl PeakAreas {
    pub fn zero_peak(&self) -> u64 {
        self.areas[self.side_peaks]
    }

    pub fn side_mean(&self) -> f64 {
        let side: u64 = self.areas.iter().sum::<u64>() - self.zero_peak();
        side as f64 / (2 * self.side_peaks) as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct G2Histogram {
    pub tau_max_ps: u64,
    pub coincidences: Vec<u64>,
    /// Expected coincidences per bin for uncorrelated streams,
    /// `N_A·N_B·Δτ / T`.
    pub normalization: f64,
    pub g2_zero: f64,
    pub peaks: Option<PeakAreas>,
}

impl G2Histogram {
    pub fn bins(&self) -> usize {
        self.coincidences.len()
    }

    pub fn bin_width_ps(&self) -> f64 {
        2.0 * self.tau_max_ps as f64 / self.coincidences.len() as f64
    }

    /// Lower edge of bin `i` in seconds.
    pub fn bin_start(&self, i: usize) -> f64 {
        (-(self.tau_max_ps as f64) + i as f64 * self.bin_width_ps()) / PS_PER_S
    }

    pub fn bin_center(&self, i: usize) -> f64 {
        self.bin_start(i) + 0.5 * self.bin_width_ps() / PS_PER_S
    }

    pub fn normalized(&self) -> impl Iterator<Item = f64> + '_ {
        self.coincidences.iter().map(move |&c| c as f64 / self.normalization)
    }

    /// Mean normalized value over bins lying entirely at `|τ| ≥ min_abs_tau_ps`.
    pub fn plateau_mean(&self, min_abs_tau_ps: f64) -> Option<f64> {
        let w = self.bin_width_ps();
        let (sum, n) = self
            .normalized()
            .enumerate()
            .filter(|(i, _)| {
                let lo = -(self.tau_max_ps as f64) + *i as f64 * w;
                lo >= min_abs_tau_ps || lo + w <= -min_abs_tau_ps
            })
            .fold((0.0, 0usize), |(s, n), (_, g)| (s + g, n + 1));
        (n > 0).then(|| sum / n as f64)
    }
}

fn span(a: &[PhotonRecord], b: &[PhotonRecord]) -> u64 {
    let first = a[0].t.min(b[0].t);
    let last = a[a.len() - 1].t.max(b[b.len() - 1].t);
    last - first
}

/// Coincidence histogram and g²(0) of two time-sorted arms.
pub fn g2_histogram(a: &[PhotonRecord], b: &[PhotonRecord], opts: &G2Options) -> Result<G2Histogram> {
    if a.len() < 2 {
        return Err(Error::InsufficientEvents(a.len()));
    }
    if b.len() < 2 {
        return Err(Error::InsufficientEvents(b.len()));
    }
    if opts.tau_max_ps == 0 || opts.tau_max_ps > i64::MAX as u64 {
        return Err(Error::domain("tau_max must be positive", opts.tau_max_ps as f64));
    }
    if opts.bins == 0 {
        return Err(Error::domain("histogram needs at least one bin", 0.0));
    }
    let tau_max = opts.tau_max_ps;
    let side_peaks = match opts.mode {
        G2Mode::Continuous => 0,
        G2Mode::Pulsed { period_ps } => {
            if !(period_ps.is_finite() && period_ps > 0.0) {
                return Err(Error::domain("repetition period must be positive", period_ps));
            }
            let k = libm::floor(tau_max as f64 / period_ps - 0.5);
            if k < 1.0 {
                return Err(Error::domain(
                    "tau_max must cover at least one side peak (1.5 periods)",
                    tau_max as f64 / period_ps,
                ));
            }
            k as usize
        }
    };
    let duration = opts.duration_ps.unwrap_or_else(|| span(a, b));
    if duration == 0 {
        return Err(Error::domain("observation time must be positive", 0.0));
    }

    let mut counts = vec![0u64; opts.bins];
    let mut areas = vec![0u64; 2 * side_peaks + 1];
    let full = 2 * tau_max as i128;
    let nbins = opts.bins as i128;
    let mut lo = 0usize;
    for ra in a {
        while lo < b.len() && b[lo].t.saturating_add(tau_max) < ra.t {
            lo += 1;
        }
        for rb in &b[lo..] {
            let tau = rb.t as i128 - ra.t as i128;
            if tau >= tau_max as i128 {
                break;
            }
            let idx = ((tau + tau_max as i128) * nbins / full) as usize;
            counts[idx] += 1;
            if let G2Mode::Pulsed { period_ps } = opts.mode {
                let k = libm::floor(tau as f64 / period_ps + 0.5);
                if libm::fabs(k) <= side_peaks as f64 {
                    areas[(k as i64 + side_peaks as i64) as usize] += 1;
                }
            }
        }
    }

    let bin_width = 2.0 * tau_max as f64 / opts.bins as f64;
    let normalization = a.len() as f64 * b.len() as f64 * bin_width / duration as f64;
    let (g2_zero, peaks) = match opts.mode {
        G2Mode::Continuous => {
            let zero_bin = (tau_max as i128 * nbins / full) as usize;
            (counts[zero_bin] as f64 / normalization, None)
        }
        G2Mode::Pulsed { .. } => {
            let peaks = PeakAreas { side_peaks, areas };
            let side = peaks.side_mean();
            if side == 0.0 {
                return Err(Error::InsufficientEvents(0));
            }
            (peaks.zero_peak() as f64 / side, Some(peaks))
        }
    };
    Ok(G2Histogram { tau_max_ps: tau_max, coincidences: counts, normalization, g2_zero, peaks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream::Origin;

    fn at(ts: &[u64]) -> Vec<PhotonRecord> {
        ts.iter().map(|&t| PhotonRecord::new(t, Origin::Molecule)).collect()
    }

    /// All-pairs reference count.
    fn brute(a: &[PhotonRecord], b: &[PhotonRecord], tau_max: u64, bins: usize) -> Vec<u64> {
        let mut out = vec![0u64; bins];
        for x in a {
            for y in b {
                let tau = y.t as i128 - x.t as i128;
                if tau >= -(tau_max as i128) && tau < tau_max as i128 {
                    let idx = ((tau + tau_max as i128) * bins as i128 / (2 * tau_max as i128)) as usize;
                    out[idx] += 1;
                }
            }
        }
        out
    }

    #[test]
    fn sweep_matches_all_pairs() {
        let a = at(&[3, 10, 11, 40, 41, 42, 90, 200, 201]);
        let b = at(&[0, 9, 12, 12, 39, 45, 88, 150, 199, 260]);
        for (tau_max, bins) in [(10, 4), (25, 7), (50, 10), (1, 1)] {
            let opts = G2Options { tau_max_ps: tau_max, bins, mode: G2Mode::Continuous, duration_ps: None };
            let h = g2_histogram(&a, &b, &opts).unwrap();
            assert_eq!(h.coincidences, brute(&a, &b, tau_max, bins), "tau_max {tau_max}");
        }
    }

    #[test]
    fn pulsed_antibunched_stream_has_zero_peak_empty() {
        let period = 1000u64;
        let a = at(&(0..200).filter(|k| k % 2 == 0).map(|k| k * period + 3).collect::<Vec<_>>());
        let b = at(&(0..200).filter(|k| k % 2 == 1).map(|k| k * period + 5).collect::<Vec<_>>());
        let opts = G2Options {
            tau_max_ps: 10 * period,
            bins: 200,
            mode: G2Mode::Pulsed { period_ps: period as f64 },
            duration_ps: None,
        };
        let h = g2_histogram(&a, &b, &opts).unwrap();
        assert_eq!(h.g2_zero, 0.0);
        assert_eq!(h.peaks.as_ref().unwrap().side_peaks, 9);
    }

    #[test]
    fn errors() {
        let a = at(&[1]);
        let b = at(&[1, 2, 3]);
        let opts = G2Options { tau_max_ps: 10, bins: 4, mode: G2Mode::Continuous, duration_ps: None };
        assert_eq!(g2_histogram(&a, &b, &opts), Err(Error::InsufficientEvents(1)));
        let pulsed = G2Options { mode: G2Mode::Pulsed { period_ps: 10.0 }, ..opts };
        assert!(g2_histogram(&b, &b, &pulsed).is_err());
    }
}
