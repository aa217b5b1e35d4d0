#![allow(dead_code)]

use photongun_core::emitter::{EmitterParams, ExcitationConfig};
use photongun_core::stats::{noise_ratio_measured, NoiseReport, TimeWindow, TraceBuilder};
use photongun_core::stream::{BackgroundModel, DetectionChain, PhotonStream, SimConfig, SimSummary};

pub const MS_PS: u64 = 1_000_000_000;

/// Emitter without intersystem crossing, so per-pulse detections are
/// exactly Bernoulli.
pub fn ideal_emitter() -> EmitterParams {
    EmitterParams::new(1e8, 0.0, 6e3).unwrap()
}

pub fn config(zeta: f64, rho: f64, background_rate: f64, duration: f64, seed: u64) -> SimConfig {
    SimConfig {
        emitter: ideal_emitter(),
        excitation: ExcitationConfig::new(200.0, 0.05, 13e-12, 15e3, duration).unwrap(),
        chain: DetectionChain::single(zeta).unwrap(),
        background: BackgroundModel::Fixed { rate: background_rate },
        seed,
        rho_override: Some(rho),
    }
}

/// Streams a run straight into 1 ms bins.
pub fn binned_noise(cfg: &SimConfig) -> (NoiseReport, SimSummary) {
    let mut stream = PhotonStream::new(cfg).unwrap();
    let window = TimeWindow::new(0, cfg.duration_ps().unwrap());
    let mut trace = TraceBuilder::new(MS_PS, window).unwrap();
    for rec in &mut stream {
        trace.push(rec.t);
    }
    let summary = *stream.summary();
    (noise_ratio_measured(&trace.finish()).unwrap(), summary)
}
