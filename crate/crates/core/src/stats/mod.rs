//! Photon-counting statistics: binned traces and intensity noise, the
//! closed-form noise and Mandel models, and HBT second-order correlation.

mod correlation;
mod noise;
mod trace;

pub use correlation::{g2_histogram, G2Histogram, G2Mode, G2Options, PeakAreas};
pub use noise::{
    background_pair_probability, mandel_q_model, noise_ratio_measured, noise_ratio_model, noise_ratio_with_background,
    squeezing_db, squeezing_db_variance, NoiseReport,
};
pub use trace::{bin_trace, BinnedTrace, TimeWindow, TraceBuilder};

/// Mean, sample standard deviation and standard error of a set of
/// replicate estimates (for example one value per seed).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Replicates {
    pub n: usize,
    pub mean: f64,
    pub std_dev: f64,
    pub std_error: f64,
}

impl Replicates {
    pub fn from_values(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self { n, mean: f64::NAN, std_dev: f64::NAN, std_error: f64::NAN };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        if n == 1 {
            return Self { n, mean, std_dev: f64::NAN, std_error: f64::NAN };
        }
        let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
        let std_dev = libm::sqrt(ss / (n - 1) as f64);
        Self { n, mean, std_dev, std_error: std_dev / libm::sqrt(n as f64) }
    }

    /// Whether `target` lies within `k` standard errors of the mean.
    pub fn within(&self, target: f64, k: f64) -> bool {
        libm::fabs(self.mean - target) <= k * self.std_error
    }
}

#[cfg(test)]
mod tests {
    use super::Replicates;

    #[test]
    fn replicate_summary() {
        let r = Replicates::from_values(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(r.mean, 2.5);
        assert!((r.std_dev - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!((r.std_error - r.std_dev / 2.0).abs() < 1e-15);
        assert!(r.within(2.6, 1.0));
        assert!(Replicates::from_values(&[1.0]).std_error.is_nan());
    }
}
