//! Seeded Monte Carlo generation of photon detection events.
//!
//! Pulses fire at `k/f_rep`. A bright molecule is excited with probability
//! ρ, then either shelves into the triplet or emits one photon after an
//! exponential delay of mean τ_r. Each signal photon survives the whole
//! detection chain with probability ζ. Background is a homogeneous Poisson
//! process at its detected rate. Output is merged in time order.
//!
//! Every random purpose draws from its own ChaCha substream of the root
//! seed, so switching one channel on or off never shifts another's draws.

use alloc::collections::BinaryHeap;
use alloc::vec::Vec;
use core::cmp::Reverse;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use crate::emitter::{triplet_branching, EmitterParams, ExcitationConfig};
use crate::{Error, Result, PS_PER_S};

/// Largest pulse count whose timestamps stay exact in `f64` arithmetic.
pub const MAX_PULSES: u64 = 1 << 53;

const STREAM_EMISSION: u64 = 0;
const STREAM_DETECTION: u64 = 1;
const STREAM_BACKGROUND: u64 = 2;
const STREAM_SPLIT: u64 = 3;
const STREAM_THINNING: u64 = 4;

fn substream(seed: u64, purpose: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(purpose);
    rng
}

/// Where a detected photon came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Origin {
    Molecule = 0,
    Background = 1,
}

impl Origin {
    pub fn from_u8(v: u8) -> Option<Self> {
        match v {
            0 => Some(Origin::Molecule),
            1 => Some(Origin::Background),
            _ => None,
        }
    }
}

/// One detected photon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PhotonRecord {
    /// Picoseconds from run start.
    pub t: u64,
    pub origin: Origin,
    pub channel: u8,
}

impl PhotonRecord {
    pub fn new(t: u64, origin: Origin) -> Self {
        Self { t, origin, channel: 0 }
    }
}

/// Cascaded transmissions between emitter and detector output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionChain {
    pub objective: f64,
    pub optics: f64,
    pub detector: f64,
    pub extra: f64,
}

impl DetectionChain {
    pub fn new(objective: f64, optics: f64, detector: f64, extra: f64) -> Result<Self> {
        let chain = Self { objective, optics, detector, extra };
        chain.validate()?;
        Ok(chain)
    }

    /// Objective 90%, optics 95%, detector 80%.
    pub fn immersion_setup() -> Self {
        Self { objective: 0.90, optics: 0.95, detector: 0.80, extra: 1.0 }
    }

    /// A chain collapsed into one stage of total efficiency `zeta`.
    pub fn single(zeta: f64) -> Result<Self> {
        Self::new(zeta, 1.0, 1.0, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        for (what, v) in [
            ("objective transmission must lie in (0, 1]", self.objective),
            ("optics transmission must lie in (0, 1]", self.optics),
            ("detector efficiency must lie in (0, 1]", self.detector),
            ("extra transmission must lie in (0, 1]", self.extra),
        ] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::domain(what, v));
            }
        }
        Ok(())
    }

    /// Overall detection efficiency ζ.
    pub fn total(&self) -> f64 {
        self.objective * self.optics * self.detector * self.extra
    }
}

/// Detected background rate, either proportional to pulse energy or fixed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BackgroundModel {
    /// counts s⁻¹ pJ⁻¹ at the detector.
    Proportional { slope: f64 },
    /// counts/s at the detector.
    Fixed { rate: f64 },
}

impl BackgroundModel {
    pub const NONE: BackgroundModel = BackgroundModel::Fixed { rate: 0.0 };

    pub fn validate(&self) -> Result<()> {
        let (what, v) = match *self {
            BackgroundModel::Proportional { slope } => ("background slope must be nonnegative", slope),
            BackgroundModel::Fixed { rate } => ("background rate must be nonnegative", rate),
        };
        if !(v.is_finite() && v >= 0.0) {
            return Err(Error::domain(what, v));
        }
        Ok(())
    }

    /// Detected background rate (counts/s) at the given pulse energy.
    pub fn rate(&self, pulse_energy: f64) -> f64 {
        match *self {
            BackgroundModel::Proportional { slope } => slope * pulse_energy,
            BackgroundModel::Fixed { rate } => rate,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub emitter: EmitterParams,
    pub excitation: ExcitationConfig,
    pub chain: DetectionChain,
    pub background: BackgroundModel,
    pub seed: u64,
    /// Replaces the excitation probability computed from the pulse energy.
    pub rho_override: Option<f64>,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        self.excitation.validate()?;
        self.chain.validate()?;
        self.background.validate()?;
        if let Some(rho) = self.rho_override {
            if !(0.0..=1.0).contains(&rho) {
                return Err(Error::domain("rho override must lie in [0, 1]", rho));
            }
        }
        self.pulse_count().map(|_| ())
    }

    /// Excitation probability per pulse.
    pub fn rho(&self) -> Result<f64> {
        match self.rho_override {
            Some(rho) => Ok(rho),
            None => self.excitation.excited_population(self.emitter.lifetime()),
        }
    }

    pub fn background_rate(&self) -> f64 {
        self.background.rate(self.excitation.pulse_energy)
    }

    pub fn pulse_count(&self) -> Result<u64> {
        let pulses = self.excitation.pulses();
        if !(pulses < MAX_PULSES as f64) {
            return Err(Error::PulseCapacity { pulses, capacity: MAX_PULSES });
        }
        crate::seconds_to_ps(self.excitation.duration)?;
        Ok(pulses as u64)
    }

    /// Run length in whole picoseconds.
    pub fn duration_ps(&self) -> Result<u64> {
        crate::seconds_to_ps(self.excitation.duration)
    }
}

/// Bookkeeping for one run. Signal photons satisfy
/// `emitted = detected + lost` exactly.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SimSummary {
    pub pulses: u64,
    pub excitations: u64,
    pub isc_events: u64,
    pub triplet_lost_pulses: u64,
    pub signal_emitted: u64,
    pub signal_detected: u64,
    pub signal_lost: u64,
    pub background_detected: u64,
}

impl SimSummary {
    /// Fraction of pulses that found the molecule in the triplet.
    pub fn triplet_loss_fraction(&self) -> f64 {
        if self.pulses == 0 {
            0.0
        } else {
            self.triplet_lost_pulses as f64 / self.pulses as f64
        }
    }

    pub fn detected(&self) -> u64 {
        self.signal_detected + self.background_detected
    }
}

/// Lazily generated, time-ordered detection stream. Memory stays bounded
/// regardless of run length, so long runs can be binned on the fly.
pub struct PhotonStream {
    emission: ChaCha8Rng,
    detection: ChaCha8Rng,
    background: ChaCha8Rng,
    rho: f64,
    branching: f64,
    qe: f64,
    zeta: f64,
    lifetime_ps: f64,
    dwell_scale_ps: f64,
    period_ps: f64,
    pulses: u64,
    next_pulse: u64,
    dark_until_ps: f64,
    pending: BinaryHeap<Reverse<u64>>,
    background_mean_gap_ps: f64,
    background_clock_ps: f64,
    next_background: Option<u64>,
    duration_ps: u64,
    summary: SimSummary,
}

impl PhotonStream {
    pub fn new(config: &SimConfig) -> Result<Self> {
        config.validate()?;
        let pulses = config.pulse_count()?;
        let duration_ps = config.duration_ps()?;
        let bg_rate = config.background_rate();
        let mut stream = Self {
            emission: substream(config.seed, STREAM_EMISSION),
            detection: substream(config.seed, STREAM_DETECTION),
            background: substream(config.seed, STREAM_BACKGROUND),
            rho: config.rho()?,
            branching: triplet_branching(&config.emitter),
            qe: config.emitter.quantum_efficiency(),
            zeta: config.chain.total(),
            lifetime_ps: config.emitter.lifetime() * PS_PER_S,
            dwell_scale_ps: config.emitter.dark_period() * PS_PER_S,
            period_ps: PS_PER_S / config.excitation.rep_rate,
            pulses,
            next_pulse: 0,
            dark_until_ps: f64::NEG_INFINITY,
            pending: BinaryHeap::new(),
            background_mean_gap_ps: if bg_rate > 0.0 { PS_PER_S / bg_rate } else { f64::INFINITY },
            background_clock_ps: 0.0,
            next_background: None,
            duration_ps,
            summary: SimSummary::default(),
        };
        stream.advance_background();
        Ok(stream)
    }

    pub fn summary(&self) -> &SimSummary {
        &self.summary
    }

    /// Drains the stream, discarding records, and returns the final summary.
    pub fn finish(mut self) -> SimSummary {
        while self.next().is_some() {}
        self.summary
    }

    fn pulse_time(&self, k: u64) -> u64 {
        libm::round(k as f64 * self.period_ps) as u64
    }

    fn advance_background(&mut self) {
        if !self.background_mean_gap_ps.is_finite() {
            self.next_background = None;
            return;
        }
        let gap: f64 = self.background.sample(Exp1);
        self.background_clock_ps += gap * self.background_mean_gap_ps;
        let t = libm::floor(self.background_clock_ps);
        self.next_background = (t < self.duration_ps as f64).then_some(t as u64);
    }

    fn fire_pulse(&mut self) {
        let k = self.next_pulse;
        self.next_pulse += 1;
        self.summary.pulses += 1;
        let t = self.pulse_time(k);
        if (t as f64) < self.dark_until_ps {
            self.summary.triplet_lost_pulses += 1;
            return;
        }
        if !(self.emission.random::<f64>() < self.rho) {
            return;
        }
        self.summary.excitations += 1;
        let shelve = self.emission.random::<f64>() < self.branching;
        let radiative = self.emission.random::<f64>() < self.qe;
        if shelve {
            self.summary.isc_events += 1;
            let dwell: f64 = self.emission.sample(Exp1);
            self.dark_until_ps = t as f64 + dwell * self.dwell_scale_ps;
            return;
        }
        if !radiative {
            return;
        }
        self.summary.signal_emitted += 1;
        let delay: f64 = self.emission.sample(Exp1);
        if self.detection.random::<f64>() < self.zeta {
            self.summary.signal_detected += 1;
            let arrival = t.saturating_add(libm::floor(delay * self.lifetime_ps) as u64);
            self.pending.push(Reverse(arrival));
        } else {
            self.summary.signal_lost += 1;
        }
    }
}

impl Iterator for PhotonStream {
    type Item = PhotonRecord;

    fn next(&mut self) -> Option<PhotonRecord> {
        loop {
            let signal = self.pending.peek().map(|r| r.0);
            let ready = match (signal, self.next_background) {
                (Some(s), Some(b)) if b < s => Some((b, Origin::Background)),
                (Some(s), _) => Some((s, Origin::Molecule)),
                (None, Some(b)) => Some((b, Origin::Background)),
                (None, None) => None,
            };
            let next_pulse_t = (self.next_pulse < self.pulses).then(|| self.pulse_time(self.next_pulse));
            // signal from pulses not yet fired arrives no earlier than their pulse time
            match (ready, next_pulse_t) {
                (Some((t, origin)), p) if !p.is_some_and(|p| t > p) => {
                    match origin {
                        Origin::Molecule => {
                            self.pending.pop();
                        }
                        Origin::Background => {
                            self.summary.background_detected += 1;
                            self.advance_background();
                        }
                    }
                    return Some(PhotonRecord::new(t, origin));
                }
                (_, Some(_)) => self.fire_pulse(),
                (None, None) => return None,
                (Some(_), None) => unreachable!(),
            }
        }
    }
}

/// Records of one run plus its bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    pub records: Vec<PhotonRecord>,
    pub summary: SimSummary,
}

/// Runs the full simulation and collects the time-sorted stream.
/// Deterministic for a fixed configuration including the seed.
pub fn simulate_stream(config: &SimConfig) -> Result<SimOutput> {
    let mut stream = PhotonStream::new(config)?;
    let expected = config.pulse_count()? as f64 * config.chain.total() * stream.rho
        + config.background_rate() * config.excitation.duration;
    let mut records = Vec::with_capacity((expected * 1.01) as usize + 16);
    records.extend(&mut stream);
    Ok(SimOutput { records, summary: stream.summary })
}

/// Independent Bernoulli(`transmission`) retention of each record.
pub fn apply_loss(records: &[PhotonRecord], transmission: f64, seed: u64) -> Result<Vec<PhotonRecord>> {
    if !(0.0..=1.0).contains(&transmission) {
        return Err(Error::domain("transmission must lie in [0, 1]", transmission));
    }
    let mut rng = substream(seed, STREAM_THINNING);
    Ok(records.iter().filter(|_| rng.random::<f64>() < transmission).copied().collect())
}

/// Routes each record to arm A (channel 0) with probability `ratio`, else
/// to arm B (channel 1).
/// Per-record beam-splitter routing for streams that are never collected.
#[derive(Debug, Clone)]
pub struct HbtRouter {
    ratio: f64,
    rng: ChaCha8Rng,
}

impl HbtRouter {
    pub fn new(ratio: f64, seed: u64) -> Result<Self> {
        if !(ratio > 0.0 && ratio <= 1.0) {
            return Err(Error::domain("splitting ratio must lie in (0, 1]", ratio));
        }
        Ok(Self { ratio, rng: substream(seed, STREAM_SPLIT) })
    }

    /// Channel 0 with probability `ratio`, else channel 1.
    #[inline]
    pub fn route(&mut self, rec: PhotonRecord) -> PhotonRecord {
        let channel = if self.rng.random::<f64>() < self.ratio { 0 } else { 1 };
        PhotonRecord { channel, ..rec }
    }
}

pub fn hbt_split(records: &[PhotonRecord], ratio: f64, seed: u64) -> Result<(Vec<PhotonRecord>, Vec<PhotonRecord>)> {
    let mut router = HbtRouter::new(ratio, seed)?;
    let mut a = Vec::with_capacity((records.len() as f64 * ratio) as usize + 1);
    let mut b = Vec::with_capacity((records.len() as f64 * (1.0 - ratio)) as usize + 1);
    for rec in records {
        let routed = router.route(*rec);
        if routed.channel == 0 {
            a.push(routed);
        } else {
            b.push(routed);
        }
    }
    Ok((a, b))
}

/// Merges two time-sorted streams; on equal timestamps `a` comes first.
pub fn merge_sorted(a: &[PhotonRecord], b: &[PhotonRecord]) -> Vec<PhotonRecord> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        if b[j].t < a[i].t {
            out.push(b[j]);
            j += 1;
        } else {
            out.push(a[i]);
            i += 1;
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}
