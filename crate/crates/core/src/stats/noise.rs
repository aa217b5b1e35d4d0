use crate::emitter::SaturationParams;
use crate::stats::BinnedTrace;
use crate::{Error, Result};

/// Intensity-noise summary of a binned trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseReport {
    pub bins: usize,
    /// Mean detected rate (counts/s).
    pub mean_rate: f64,
    /// Mean counts per bin.
    pub mean_counts: f64,
    /// Sample standard deviation of the bin counts.
    pub sigma_sps: f64,
    /// Shot-noise level `√(mean counts)`.
    pub sigma_sn: f64,
    pub ratio: f64,
    /// `−10·log₁₀(ratio)`; `None` for super-Poissonian traces.
    pub squeezing_db: Option<f64>,
    /// `variance/mean − 1`.
    pub mandel_q: f64,
    /// Mean detected photons per excitation pulse, once the repetition rate
    /// is known.
    pub photons_per_pulse: Option<f64>,
}

impl NoiseReport {
    pub fn with_rep_rate(mut self, rep_rate: f64, bin_width: f64) -> Self {
        self.photons_per_pulse = Some(self.mean_counts / (rep_rate * bin_width));
        self
    }

    /// Fractional reduction of the noise below shot noise, `1 − ratio`.
    pub fn noise_reduction(&self) -> f64 {
        1.0 - self.ratio
    }

    /// The variance-ratio convention, `−20·log₁₀(ratio)`.
    pub fn squeezing_db_variance(&self) -> Option<f64> {
        squeezing_db_variance(self.ratio).ok()
    }
}

/// Noise statistics of measured bin counts.
pub fn noise_ratio_measured(trace: &BinnedTrace) -> Result<NoiseReport> {
    let n = trace.counts.len();
    if n < 2 {
        return Err(Error::TooFewBins(n));
    }
    // exact integer moments
    let (sum, sum_sq) =
        trace.counts.iter().fold((0u128, 0u128), |(s, q), &c| (s + c as u128, q + (c as u128) * (c as u128)));
    let nn = n as u128;
    if sum == 0 {
        return Err(Error::domain("trace holds no photons", 0.0));
    }
    let mean = sum as f64 / n as f64;
    let variance = (nn * sum_sq - sum * sum) as f64 / (n as f64 * (n - 1) as f64);
    let sigma_sps = libm::sqrt(variance);
    let sigma_sn = libm::sqrt(mean);
    let ratio = sigma_sps / sigma_sn;
    Ok(NoiseReport {
        bins: n,
        mean_rate: mean / trace.bin_width(),
        mean_counts: mean,
        sigma_sps,
        sigma_sn,
        ratio,
        squeezing_db: squeezing_db(ratio).ok(),
        mandel_q: variance / mean - 1.0,
        photons_per_pulse: None,
    })
}

/// Expected noise ratio for a binomially thinned pulse train plus an
/// uncorrelated Poissonian background:
///
/// ```text
/// ratio² = ((1 − ζρ)·N_mol + N_bg) / (N_mol + N_bg)
/// ```
///
/// with `N_mol = ζρ·f_rep·Δt` and `N_bg = rate_bg·Δt` counts per bin.
/// Without background this is `√(1 − ζρ)`.
pub fn noise_ratio_with_background(
    zeta: f64,
    rho: f64,
    rep_rate: f64,
    background_rate: f64,
    bin_width: f64,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&zeta) {
        return Err(Error::domain("detection efficiency must lie in [0, 1]", zeta));
    }
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::domain("excitation probability must lie in [0, 1]", rho));
    }
    if !(rep_rate.is_finite() && rep_rate > 0.0) {
        return Err(Error::domain("repetition rate must be positive", rep_rate));
    }
    if !(background_rate.is_finite() && background_rate >= 0.0) {
        return Err(Error::domain("background rate must be nonnegative", background_rate));
    }
    if !(bin_width.is_finite() && bin_width > 0.0) {
        return Err(Error::domain("bin width must be positive", bin_width));
    }
    let p = zeta * rho;
    let signal = p * rep_rate * bin_width;
    let background = background_rate * bin_width;
    if signal + background == 0.0 {
        return Ok(1.0);
    }
    Ok(libm::sqrt(((1.0 - p) * signal + background) / (signal + background)))
}

/// Noise ratio at pulse energy `e_p` with ρ from the saturation model and a
/// background growing as `α·E_p`. Rises again at high energy once the
/// background dominates.
pub fn noise_ratio_model(e_p: f64, zeta: f64, sat: &SaturationParams, rep_rate: f64, bin_width: f64) -> Result<f64> {
    let rho = sat.excited_population(e_p)?;
    if !(sat.background_slope.is_finite() && sat.background_slope >= 0.0) {
        return Err(Error::domain("background slope must be nonnegative", sat.background_slope));
    }
    noise_ratio_with_background(zeta, rho, rep_rate, sat.background_slope * e_p, bin_width)
}

/// Intensity squeezing in dB, `−10·log₁₀(σ_sps/σ_sn)`.
pub fn squeezing_db(ratio: f64) -> Result<f64> {
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(Error::domain("noise ratio must lie in (0, 1]", ratio));
    }
    Ok(-10.0 * libm::log10(ratio))
}

/// Squeezing of the variance ratio, `−10·log₁₀(ratio²)`.
pub fn squeezing_db_variance(ratio: f64) -> Result<f64> {
    squeezing_db(ratio).map(|db| 2.0 * db)
}

/// `Q = [g²(0) − 1]·M·ζ·ρ`.
pub fn mandel_q_model(g2_zero: f64, photons_per_pulse: f64, zeta: f64, rho: f64) -> Result<f64> {
    if !(g2_zero.is_finite() && g2_zero >= 0.0) {
        return Err(Error::domain("g2(0) must be nonnegative", g2_zero));
    }
    if !(photons_per_pulse.is_finite() && photons_per_pulse > 0.0) {
        return Err(Error::domain("photons per pulse must be positive", photons_per_pulse));
    }
    if !(0.0..=1.0).contains(&zeta) {
        return Err(Error::domain("detection efficiency must lie in [0, 1]", zeta));
    }
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::domain("excitation probability must lie in [0, 1]", rho));
    }
    Ok((g2_zero - 1.0) * photons_per_pulse * zeta * rho)
}

/// Probability of two or more photons from a Poisson source with mean
/// `mean` per pulse: `1 − e^{−μ}(1 + μ)`.
pub fn background_pair_probability(mean: f64) -> Result<f64> {
    if !(mean.is_finite() && mean >= 0.0) {
        return Err(Error::domain("mean photon number must be nonnegative", mean));
    }
    Ok(-libm::expm1(-mean) - mean * libm::exp(-mean))
}
