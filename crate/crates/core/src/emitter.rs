//! Closed-form single-molecule photophysics.
//!
//! The molecule is a three-level system: ground (1), excited singlet (2) and
//! a long-lived triplet (3). A short pulse promotes 1 → 2 with probability
//! [`excited_population`]; from 2 the molecule either decays radiatively
//! (rate `k21`) or crosses into the triplet (rate `k23`), where it stays dark
//! for an exponential dwell of mean `1/k31`.

use crate::{Error, Result};

/// Level rates and radiative properties of one emitter. Rates in s⁻¹.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmitterParams {
    k21: f64,
    k23: f64,
    k31: f64,
    lifetime: f64,
    quantum_efficiency: f64,
}

impl EmitterParams {
    /// Rates with the lifetime defaulted to `1/k21` and unit quantum
    /// efficiency. `k23` may be zero (no intersystem crossing).
    pub fn new(k21: f64, k23: f64, k31: f64) -> Result<Self> {
        if !(k21.is_finite() && k21 > 0.0) {
            return Err(Error::domain("k21 must be positive", k21));
        }
        if !(k23.is_finite() && k23 >= 0.0) {
            return Err(Error::domain("k23 must be nonnegative", k23));
        }
        if !(k31.is_finite() && k31 > 0.0) {
            return Err(Error::domain("k31 must be positive", k31));
        }
        Ok(Self { k21, k23, k31, lifetime: 1.0 / k21, quantum_efficiency: 1.0 })
    }

    /// Terrylene in p-terphenyl: k21 = 1e8, k23 = 1e4, k31 = 6e3 s⁻¹.
    pub fn terrylene() -> Self {
        Self::new(1e8, 1e4, 6e3).expect("constant rates are valid")
    }

    pub fn with_lifetime(mut self, lifetime: f64) -> Result<Self> {
        if !(lifetime.is_finite() && lifetime > 0.0) {
            return Err(Error::domain("excited-state lifetime must be positive", lifetime));
        }
        self.lifetime = lifetime;
        Ok(self)
    }

    pub fn with_quantum_efficiency(mut self, qe: f64) -> Result<Self> {
        if !(qe > 0.0 && qe <= 1.0) {
            return Err(Error::domain("quantum efficiency must lie in (0, 1]", qe));
        }
        self.quantum_efficiency = qe;
        Ok(self)
    }

    pub fn k21(&self) -> f64 {
        self.k21
    }

    pub fn k23(&self) -> f64 {
        self.k23
    }

    pub fn k31(&self) -> f64 {
        self.k31
    }

    /// Excited-state lifetime in seconds.
    pub fn lifetime(&self) -> f64 {
        self.lifetime
    }

    pub fn quantum_efficiency(&self) -> f64 {
        self.quantum_efficiency
    }

    /// Mean triplet dwell `1/k31` in seconds.
    pub fn dark_period(&self) -> f64 {
        1.0 / self.k31
    }
}

/// Pulse and run settings. Energies in pJ, times in s, rate in Hz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExcitationConfig {
    pub pulse_energy: f64,
    pub saturation_energy: f64,
    pub pulse_width: f64,
    pub rep_rate: f64,
    pub duration: f64,
}

impl ExcitationConfig {
    pub fn new(
        pulse_energy: f64,
        saturation_energy: f64,
        pulse_width: f64,
        rep_rate: f64,
        duration: f64,
    ) -> Result<Self> {
        let cfg = Self { pulse_energy, saturation_energy, pulse_width, rep_rate, duration };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.pulse_energy.is_finite() && self.pulse_energy >= 0.0) {
            return Err(Error::domain("pulse energy must be nonnegative", self.pulse_energy));
        }
        if !(self.saturation_energy.is_finite() && self.saturation_energy > 0.0) {
            return Err(Error::domain("saturation energy must be positive", self.saturation_energy));
        }
        if !(self.pulse_width.is_finite() && self.pulse_width > 0.0) {
            return Err(Error::domain("pulse width must be positive", self.pulse_width));
        }
        if !(self.rep_rate.is_finite() && self.rep_rate > 0.0) {
            return Err(Error::domain("repetition rate must be positive", self.rep_rate));
        }
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return Err(Error::domain("duration must be positive", self.duration));
        }
        if self.pulses() < 1.0 {
            return Err(Error::domain(
                "repetition rate times duration must cover at least one pulse",
                self.rep_rate * self.duration,
            ));
        }
        Ok(())
    }

    /// Number of pulses fired in the run, `floor(f_rep · duration)` with a
    /// small tolerance for products that are integers up to rounding.
    pub fn pulses(&self) -> f64 {
        libm::floor(self.rep_rate * self.duration * (1.0 + 1e-12))
    }

    /// Excitation probability for a molecule with the given lifetime.
    pub fn excited_population(&self, lifetime: f64) -> Result<f64> {
        excited_population(self.pulse_energy, self.saturation_energy, self.pulse_width, lifetime)
    }
}

/// Parameters of the pulsed saturation curve `R(E) = R₀ ρ(E) + α E`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaturationParams {
    /// Saturated molecular count rate R₀ (counts/s).
    pub max_rate: f64,
    /// Saturation energy E_s (pJ).
    pub saturation_energy: f64,
    /// Background slope α (counts s⁻¹ pJ⁻¹).
    pub background_slope: f64,
    /// Pulse width τ_p (s).
    pub pulse_width: f64,
    /// Excited-state lifetime τ_r (s).
    pub lifetime: f64,
}

impl SaturationParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.max_rate.is_finite() && self.max_rate > 0.0) {
            return Err(Error::domain("maximum rate must be positive", self.max_rate));
        }
        if !(self.background_slope.is_finite() && self.background_slope >= 0.0) {
            return Err(Error::domain("background slope must be nonnegative", self.background_slope));
        }
        check_population_args(0.0, self.saturation_energy, self.pulse_width, self.lifetime)
    }

    pub fn excited_population(&self, pulse_energy: f64) -> Result<f64> {
        excited_population(pulse_energy, self.saturation_energy, self.pulse_width, self.lifetime)
    }
}

fn check_population_args(e_p: f64, e_s: f64, tau_p: f64, tau_r: f64) -> Result<()> {
    if !(e_s.is_finite() && e_s > 0.0) {
        return Err(Error::domain("saturation energy must be positive", e_s));
    }
    if !(tau_p.is_finite() && tau_p > 0.0) {
        return Err(Error::domain("pulse width must be positive", tau_p));
    }
    if !(tau_r.is_finite() && tau_r > 0.0) {
        return Err(Error::domain("excited-state lifetime must be positive", tau_r));
    }
    if !(e_p >= 0.0) || e_p.is_nan() {
        return Err(Error::domain("pulse energy must be nonnegative", e_p));
    }
    Ok(())
}

/// Excited-state population right after a rectangular pulse of energy
/// `e_p`:
///
/// ```text
/// ρ = x/(1+x) · (1 − exp(−(τ_p/τ_r)(1+x))),   x = E_p/E_s
/// ```
///
/// This is the exact solution of `dρ/dt = W(1−ρ) − ρ/τ_r` over the pulse
/// with pump rate `W = x/τ_r`.
pub fn excited_population(e_p: f64, e_s: f64, tau_p: f64, tau_r: f64) -> Result<f64> {
    check_population_args(e_p, e_s, tau_p, tau_r)?;
    if e_p == f64::INFINITY {
        return Ok(1.0);
    }
    let x = e_p / e_s;
    let pumped = x / (1.0 + x);
    let growth = -libm::expm1(-(tau_p / tau_r) * (1.0 + x));
    Ok(pumped * growth)
}

/// Detected count rate for pulse energy `e_p`: `R₀ ρ(E_p) + α E_p`.
pub fn detected_rate(e_p: f64, params: &SaturationParams) -> Result<f64> {
    params.validate()?;
    let rho = params.excited_population(e_p)?;
    Ok(params.max_rate * rho + params.background_slope * e_p)
}

/// Probability that an excitation ends in the triplet: `k23/(k21+k23)`.
pub fn triplet_branching(params: &EmitterParams) -> f64 {
    params.k23 / (params.k21 + params.k23)
}

/// Steady-state fraction of pulses that find the molecule dark.
///
/// Sampled at pulse times the molecule is a two-state chain: from the
/// ground state a pulse shelves it with probability `a = ρ·k23/(k21+k23)`;
/// a shelved molecule is still dark at the next pulse with probability
/// `s = exp(−k31/f_rep)`. The dark occupancy at pulse arrival is
/// `a·s / ((1 − s) + a·s)`.
pub fn shelving_occupancy(params: &EmitterParams, rep_rate: f64, rho: f64) -> Result<f64> {
    if !(rep_rate.is_finite() && rep_rate > 0.0) {
        return Err(Error::domain("repetition rate must be positive", rep_rate));
    }
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::domain("excitation probability must lie in [0, 1]", rho));
    }
    let enter = rho * triplet_branching(params);
    let stay = libm::exp(-params.k31 / rep_rate);
    let recover = -libm::expm1(-params.k31 / rep_rate);
    let dark = enter * stay;
    if dark == 0.0 {
        return Ok(0.0);
    }
    Ok(dark / (recover + dark))
}
