//! Nonlinear least-squares recovery of saturation and noise-model
//! parameters.
//!
//! [`fit_saturation`] is a Levenberg–Marquardt loop on
//! `(ln R₀, ln E_s, α)` with a central-difference Jacobian. The log
//! parameterization keeps `R₀` and `E_s` positive; `α` is projected onto
//! `α ≥ 0` so a background-free curve can sit on the boundary.

use alloc::vec::Vec;

use crate::emitter::{excited_population, SaturationParams};
use crate::linalg::{correlation_rcond, invert, solve, Mat, Vector, MAX_DIM};
use crate::{Error, Result};

pub const DEFAULT_MAX_ITERATIONS: usize = 500;
pub const DEFAULT_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaturationPoint {
    /// pJ
    pub pulse_energy: f64,
    /// counts/s
    pub rate: f64,
    pub weight: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SaturationDataset {
    pub points: Vec<SaturationPoint>,
    /// Held fixed during the fit (s).
    pub pulse_width: f64,
    /// Held fixed during the fit (s).
    pub lifetime: f64,
    pub rep_rate: Option<f64>,
    /// Integration time per point (s). When set, unweighted points get the
    /// Poisson weight `t/rate`.
    pub integration_time: Option<f64>,
}

impl SaturationDataset {
    pub fn new(points: Vec<SaturationPoint>, pulse_width: f64, lifetime: f64) -> Self {
        Self { points, pulse_width, lifetime, rep_rate: None, integration_time: None }
    }

    fn validate(&self, free: usize) -> Result<()> {
        let required = free + 1;
        if self.points.len() < required {
            return Err(Error::TooFewPoints { points: self.points.len(), required });
        }
        excited_population(0.0, 1.0, self.pulse_width, self.lifetime)?;
        for p in &self.points {
            if !(p.pulse_energy.is_finite() && p.pulse_energy >= 0.0) {
                return Err(Error::domain("pulse energies must be nonnegative", p.pulse_energy));
            }
            if !p.rate.is_finite() {
                return Err(Error::domain("rates must be finite", p.rate));
            }
            if let Some(w) = p.weight {
                if !(w.is_finite() && w > 0.0) {
                    return Err(Error::domain("weights must be positive", w));
                }
            }
        }
        let mut energies: Vec<f64> = self.points.iter().map(|p| p.pulse_energy).collect();
        energies.sort_by(f64::total_cmp);
        if let Some(w) = energies.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::domain("pulse energies must be distinct", w[0]));
        }
        if let Some(t) = self.integration_time {
            if !(t.is_finite() && t > 0.0) {
                return Err(Error::domain("integration time must be positive", t));
            }
        }
        Ok(())
    }

    fn weights(&self) -> Vec<f64> {
        self.points
            .iter()
            .map(|p| match (p.weight, self.integration_time) {
                (Some(w), _) => w,
                (None, Some(t)) => t / p.rate.max(1.0),
                (None, None) => 1.0,
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub init: Option<SaturationParams>,
    /// Holds the background slope at this value instead of fitting it.
    pub fixed_background_slope: Option<f64>,
    pub max_iterations: usize,
    pub tolerance: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            init: None,
            fixed_background_slope: None,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            tolerance: DEFAULT_TOLERANCE,
        }
    }
}

/// One-sigma parameter uncertainties.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaturationErrors {
    pub max_rate: f64,
    pub saturation_energy: f64,
    pub background_slope: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult {
    pub params: SaturationParams,
    pub std_errors: SaturationErrors,
    /// `√Σ wᵢ rᵢ²`
    pub residual_norm: f64,
    pub converged: bool,
    pub iterations: usize,
    pub initial: SaturationParams,
}

struct Problem<'a> {
    energies: Vec<f64>,
    rates: Vec<f64>,
    sqrt_w: Vec<f64>,
    data: &'a SaturationDataset,
    fixed_slope: Option<f64>,
    slope_scale: f64,
}

impl Problem<'_> {
    fn dim(&self) -> usize {
        if self.fixed_slope.is_some() {
            2
        } else {
            3
        }
    }

    fn unpack(&self, theta: &Vector) -> (f64, f64, f64) {
        let slope = self.fixed_slope.unwrap_or(theta[2]);
        (libm::exp(theta[0]), libm::exp(theta[1]), slope)
    }

    fn params(&self, theta: &Vector) -> SaturationParams {
        let (max_rate, saturation_energy, background_slope) = self.unpack(theta);
        SaturationParams {
            max_rate,
            saturation_energy,
            background_slope,
            pulse_width: self.data.pulse_width,
            lifetime: self.data.lifetime,
        }
    }

    fn residuals(&self, theta: &Vector, out: &mut [f64]) {
        let (r0, es, slope) = self.unpack(theta);
        let (tau_p, tau_r) = (self.data.pulse_width, self.data.lifetime);
        for (i, r) in out.iter_mut().enumerate() {
            let e = self.energies[i];
            let rho = excited_population(e, es, tau_p, tau_r).unwrap_or(f64::NAN);
            *r = self.sqrt_w[i] * (r0 * rho + slope * e - self.rates[i]);
        }
    }

    fn cost(&self, theta: &Vector, buf: &mut [f64]) -> f64 {
        self.residuals(theta, buf);
        let c: f64 = buf.iter().map(|r| r * r).sum();
        if c.is_finite() {
            c
        } else {
            f64::INFINITY
        }
    }

    fn step_size(&self, theta: &Vector, j: usize) -> f64 {
        if j < 2 {
            1e-6 * libm::fabs(theta[j]).max(1.0)
        } else {
            1e-6 * libm::fabs(theta[j]).max(self.slope_scale)
        }
    }

    /// Central-difference Jacobian, row-major `n × dim`.
    fn jacobian(&self, theta: &Vector, jac: &mut [f64], plus: &mut [f64], minus: &mut [f64]) {
        let dim = self.dim();
        for j in 0..dim {
            let h = self.step_size(theta, j);
            let mut tp = *theta;
            let mut tm = *theta;
            tp[j] += h;
            tm[j] -= h;
            self.residuals(&tp, plus);
            self.residuals(&tm, minus);
            for i in 0..plus.len() {
                jac[i * dim + j] = (plus[i] - minus[i]) / (2.0 * h);
            }
        }
    }

    fn project(&self, theta: &mut Vector) {
        if self.fixed_slope.is_none() && theta[2] < 0.0 {
            theta[2] = 0.0;
        }
    }
}

fn normal_equations(jac: &[f64], res: &[f64], dim: usize) -> (Mat, Vector) {
    let mut a = [[0.0; MAX_DIM]; MAX_DIM];
    let mut g = [0.0; MAX_DIM];
    for (row, r) in jac.chunks_exact(dim).zip(res) {
        for p in 0..dim {
            g[p] += row[p] * r;
            for q in 0..dim {
                a[p][q] += row[p] * row[q];
            }
        }
    }
    (a, g)
}

/// Default starting point: `R₀` from the largest rate, `α` from the two
/// highest-energy points, and `E_s` such that ρ = ½ at the energy where the
/// background-corrected rate crosses `R₀/2` (median energy if it never
/// does).
pub fn initial_guess(data: &SaturationDataset, fixed_slope: Option<f64>) -> SaturationParams {
    let mut pts: Vec<(f64, f64)> = data.points.iter().map(|p| (p.pulse_energy, p.rate)).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let max_rate = pts.iter().map(|p| p.1).fold(f64::MIN, f64::max).max(f64::MIN_POSITIVE);
    let n = pts.len();
    let slope = fixed_slope.unwrap_or_else(|| {
        let (e1, r1) = pts[n - 2];
        let (e2, r2) = pts[n - 1];
        (((r2 - max_rate) - (r1 - max_rate)) / (e2 - e1)).max(0.0)
    });
    let half = 0.5 * max_rate;
    let mut e_half = None;
    for w in pts.windows(2) {
        let (ea, ra) = (w[0].0, w[0].1 - slope * w[0].0);
        let (eb, rb) = (w[1].0, w[1].1 - slope * w[1].0);
        if ra < half && rb >= half {
            e_half = Some(ea + (half - ra) * (eb - ea) / (rb - ra));
            break;
        }
    }
    let e_half =
        e_half.filter(|e| *e > 0.0).unwrap_or_else(|| pts[n / 2].0.max(pts[n - 1].0 * 1e-3).max(f64::MIN_POSITIVE));
    let saturation_energy = energy_for_half_population(e_half, data.pulse_width, data.lifetime);
    SaturationParams {
        max_rate,
        saturation_energy,
        background_slope: slope,
        pulse_width: data.pulse_width,
        lifetime: data.lifetime,
    }
}

/// Saturation energy that puts ρ(e_half) at ½, by bisection in log space.
fn energy_for_half_population(e_half: f64, tau_p: f64, tau_r: f64) -> f64 {
    let rho = |ln_es: f64| excited_population(e_half, libm::exp(ln_es), tau_p, tau_r).unwrap_or(0.0);
    let (mut lo, mut hi) = (libm::log(e_half) - 60.0, libm::log(e_half) + 60.0);
    if rho(lo) < 0.5 {
        return e_half;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if rho(mid) >= 0.5 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    libm::exp(0.5 * (lo + hi))
}

/// Weighted least-squares fit of `R(E) = R₀ ρ(E; E_s) + α E`.
///
/// Non-convergence within the iteration budget is reported through
/// [`FitResult::converged`], not as an error. A geometry in which `E_s`
/// cannot be separated from `R₀` and `α` is an error.
pub fn fit_saturation(data: &SaturationDataset, opts: &FitOptions) -> Result<FitResult> {
    if let Some(s) = opts.fixed_background_slope {
        if !(s.is_finite() && s >= 0.0) {
            return Err(Error::domain("fixed background slope must be nonnegative", s));
        }
    }
    let free = if opts.fixed_background_slope.is_some() { 2 } else { 3 };
    data.validate(free)?;
    let weights = data.weights();
    let energies: Vec<f64> = data.points.iter().map(|p| p.pulse_energy).collect();
    let rates: Vec<f64> = data.points.iter().map(|p| p.rate).collect();
    let max_e = energies.iter().cloned().fold(0.0, f64::max);
    if max_e == 0.0 {
        return Err(Error::SingularGeometry("all pulse energies are zero"));
    }
    let max_r = rates.iter().cloned().fold(0.0, |a: f64, b| a.max(libm::fabs(b)));
    let problem = Problem {
        energies,
        rates,
        sqrt_w: weights.iter().map(|w| libm::sqrt(*w)).collect(),
        data,
        fixed_slope: opts.fixed_background_slope,
        slope_scale: (max_r / max_e).max(f64::MIN_POSITIVE),
    };

    let initial = match opts.init {
        Some(init) => {
            init.validate()?;
            SaturationParams { pulse_width: data.pulse_width, lifetime: data.lifetime, ..init }
        }
        None => initial_guess(data, opts.fixed_background_slope),
    };
    let dim = problem.dim();
    let mut theta: Vector = [
        libm::log(initial.max_rate),
        libm::log(initial.saturation_energy),
        opts.fixed_background_slope.unwrap_or(initial.background_slope),
    ];
    let n = data.points.len();
    let mut res = alloc::vec![0.0; n];
    let mut plus = alloc::vec![0.0; n];
    let mut minus = alloc::vec![0.0; n];
    let mut jac = alloc::vec![0.0; n * dim];
    let floor = 1e-28 * problem.rates.iter().zip(&weights).map(|(y, w)| w * y * y).sum::<f64>().max(f64::MIN_POSITIVE);

    let mut cost = problem.cost(&theta, &mut res);
    if !cost.is_finite() {
        return Err(Error::domain("initial parameters give a non-finite residual", cost));
    }
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;
    'outer: while iterations < opts.max_iterations {
        iterations += 1;
        problem.residuals(&theta, &mut res);
        problem.jacobian(&theta, &mut jac, &mut plus, &mut minus);
        let (a, g) = normal_equations(&jac, &res, dim);
        loop {
            let mut damped = a;
            for p in 0..dim {
                damped[p][p] += lambda * a[p][p].max(1e-300);
            }
            let neg_g = [-g[0], -g[1], -g[2]];
            let step = match solve(&damped, &neg_g, dim) {
                Some(s) => s,
                None => {
                    lambda *= 10.0;
                    if lambda > 1e30 {
                        converged = true;
                        break 'outer;
                    }
                    continue;
                }
            };
            let mut trial = theta;
            for p in 0..dim {
                trial[p] += step[p];
            }
            problem.project(&mut trial);
            let trial_cost = problem.cost(&trial, &mut plus);
            if trial_cost <= cost {
                let small_step = (0..dim).all(|p| {
                    let moved = libm::fabs(trial[p] - theta[p]);
                    let scale = if p < 2 { 1.0 } else { libm::fabs(theta[p]).max(problem.slope_scale) };
                    moved <= opts.tolerance * scale
                });
                let small_change = cost - trial_cost <= opts.tolerance * cost || trial_cost <= floor;
                theta = trial;
                cost = trial_cost;
                lambda = (lambda / 3.0).max(1e-15);
                if small_step && small_change {
                    converged = true;
                    break 'outer;
                }
                break;
            }
            lambda *= 4.0;
            if lambda > 1e30 {
                // no representable descent step left
                converged = true;
                break 'outer;
            }
        }
    }

    problem.residuals(&theta, &mut res);
    problem.jacobian(&theta, &mut jac, &mut plus, &mut minus);
    let (a, _) = normal_equations(&jac, &res, dim);
    let params = problem.params(&theta);
    let max_rho = problem.energies.iter().map(|&e| params.excited_population(e).unwrap_or(0.0)).fold(0.0, f64::max);
    if max_rho < 0.05 {
        return Err(Error::SingularGeometry(
            "all pulse energies lie in the linear regime; saturation energy is unidentifiable",
        ));
    }
    if correlation_rcond(&a, dim) < 1e-8 {
        return Err(Error::SingularGeometry("fit parameters are not separately identifiable"));
    }
    let cov = invert(&a, dim).ok_or(Error::SingularGeometry("normal matrix is singular"))?;
    let s2 = cost / (n - dim) as f64;
    let std_errors = SaturationErrors {
        max_rate: params.max_rate * libm::sqrt(s2 * cov[0][0]),
        saturation_energy: params.saturation_energy * libm::sqrt(s2 * cov[1][1]),
        background_slope: if dim == 3 { libm::sqrt(s2 * cov[2][2]) } else { 0.0 },
    };
    Ok(FitResult { params, std_errors, residual_norm: libm::sqrt(cost), converged, iterations, initial })
}

/// ρ(E_p) on `grid` from a converged saturation fit.
pub fn extract_rho_curve(fit: &FitResult, grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    if !fit.converged {
        return Err(Error::NotConverged { iterations: fit.iterations });
    }
    grid.iter().map(|&e| fit.params.excited_population(e).map(|rho| (e, rho))).collect()
}

/// Measured noise ratio at a known excitation probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoisePoint {
    pub rho: f64,
    pub ratio: f64,
}

/// Per-bin scale of the noise model: `N_mol = ζρ·pulses_per_bin`,
/// `N_bg = background_per_bin`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseBackground {
    pub pulses_per_bin: f64,
    pub background_per_bin: f64,
}

impl NoiseBackground {
    pub const NONE: NoiseBackground = NoiseBackground { pulses_per_bin: 1.0, background_per_bin: 0.0 };
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZetaEstimate {
    pub zeta: f64,
    /// `None` for a single point.
    pub std_error: Option<f64>,
    pub residual_norm: f64,
    pub iterations: usize,
}

fn noise_model(zeta: f64, rho: f64, bg: &NoiseBackground) -> (f64, f64) {
    let p = zeta * rho;
    if bg.background_per_bin == 0.0 {
        let m = libm::sqrt((1.0 - p).max(0.0));
        let dm = if m > 0.0 { -rho / (2.0 * m) } else { f64::NEG_INFINITY };
        return (m, dm);
    }
    let big_p = bg.pulses_per_bin;
    let b = bg.background_per_bin;
    let num = (1.0 - p) * p * big_p + b;
    let den = p * big_p + b;
    let m2 = num / den;
    let dm2_dp = (big_p * (1.0 - 2.0 * p) * den - num * big_p) / (den * den);
    let m = libm::sqrt(m2.max(0.0));
    (m, rho * dm2_dp / (2.0 * m))
}

/// Least-squares detection efficiency from `(ρ, ratio)` pairs under the
/// background-corrected binomial noise model.
pub fn fit_noise_curve(points: &[NoisePoint], bg: &NoiseBackground) -> Result<ZetaEstimate> {
    if points.is_empty() {
        return Err(Error::TooFewPoints { points: 0, required: 1 });
    }
    if !(bg.pulses_per_bin.is_finite() && bg.pulses_per_bin > 0.0) {
        return Err(Error::domain("pulses per bin must be positive", bg.pulses_per_bin));
    }
    if !(bg.background_per_bin.is_finite() && bg.background_per_bin >= 0.0) {
        return Err(Error::domain("background per bin must be nonnegative", bg.background_per_bin));
    }
    for p in points {
        if !(p.rho > 0.0 && p.rho <= 1.0) {
            return Err(Error::domain("excitation probability must lie in (0, 1]", p.rho));
        }
        if !(p.ratio.is_finite() && p.ratio >= 0.0) {
            return Err(Error::domain("noise ratio must be nonnegative", p.ratio));
        }
    }
    let max_rho = points.iter().map(|p| p.rho).fold(0.0, f64::max);
    if max_rho < 1e-9 {
        return Err(Error::SingularGeometry("all excitation probabilities are zero"));
    }
    let upper = 1.0 / max_rho;
    let clamp = |z: f64| z.clamp(1e-12, upper);
    let sse = |z: f64| -> f64 {
        points
            .iter()
            .map(|p| {
                let d = noise_model(z, p.rho, bg).0 - p.ratio;
                d * d
            })
            .sum()
    };
    let mut zeta = clamp(points.iter().map(|p| (1.0 - p.ratio * p.ratio) / p.rho).sum::<f64>() / points.len() as f64);
    let mut cost = sse(zeta);
    let mut iterations = 0;
    while iterations < 200 {
        iterations += 1;
        let (mut jtj, mut jtr) = (0.0, 0.0);
        for p in points {
            let (m, dm) = noise_model(zeta, p.rho, bg);
            if !dm.is_finite() {
                continue;
            }
            jtj += dm * dm;
            jtr += dm * (m - p.ratio);
        }
        if jtj == 0.0 {
            break;
        }
        let mut step = -jtr / jtj;
        let mut accepted = false;
        for _ in 0..60 {
            let trial = clamp(zeta + step);
            let c = sse(trial);
            if c <= cost {
                let moved = libm::fabs(trial - zeta);
                zeta = trial;
                cost = c;
                accepted = moved > 1e-15 * zeta.max(1.0);
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    let std_error = (points.len() > 1).then(|| {
        let jtj: f64 =
            points.iter().map(|p| noise_model(zeta, p.rho, bg).1).filter(|d| d.is_finite()).map(|d| d * d).sum();
        libm::sqrt(cost / (points.len() - 1) as f64 / jtj)
    });
    Ok(ZetaEstimate { zeta, std_error, residual_norm: libm::sqrt(cost), iterations })
}
