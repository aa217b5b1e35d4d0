//! Scenario files: a simulation run plus its analysis and sweep settings.
//!
//! Every key carries its unit in the name. A minimal file:
//!
//! ```text
//! scenario.name = strong_drive
//! excitation.pulse_energy_pJ = 200
//! excitation.saturation_energy_pJ = 0.05
//! excitation.pulse_width_s = 13e-12
//! excitation.rep_rate_Hz = 15000
//! excitation.duration_s = 10
//! ```
//!
//! Everything else has a default; [`Scenario::to_text`] writes all keys out
//! so a resolved scenario documents itself.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use photongun_core::emitter::{EmitterParams, ExcitationConfig};
use photongun_core::seconds_to_ps;
use photongun_core::stats::{G2Mode, G2Options};
use photongun_core::stream::{BackgroundModel, DetectionChain, SimConfig};

use crate::kv::{self, Entry};

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioError {
    /// Line of the offending entry; `None` for keys that are missing.
    pub line: Option<usize>,
    pub field: String,
    pub reason: String,
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.line, self.field.is_empty()) {
            (Some(line), false) => write!(f, "line {line}, field {}: {}", self.field, self.reason),
            (Some(line), true) => write!(f, "line {line}: {}", self.reason),
            (None, _) => write!(f, "field {}: {}", self.field, self.reason),
        }
    }
}

impl std::error::Error for ScenarioError {}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmitterSettings {
    pub k21_per_s: f64,
    pub k23_per_s: f64,
    pub k31_per_s: f64,
    /// Defaults to `1/k21`.
    pub lifetime_s: Option<f64>,
    pub quantum_efficiency: f64,
}

impl Default for EmitterSettings {
    fn default() -> Self {
        Self { k21_per_s: 1e8, k23_per_s: 1e4, k31_per_s: 6e3, lifetime_s: None, quantum_efficiency: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum G2Kind {
    Pulsed,
    Continuous,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Analysis {
    pub bin_width_ms: f64,
    pub tau_max_us: f64,
    pub g2_mode: G2Kind,
    pub g2_bins: usize,
    /// Fraction of detections routed to channel 0.
    pub hbt_ratio: f64,
}

impl Default for Analysis {
    fn default() -> Self {
        Self { bin_width_ms: 1.0, tau_max_us: 700.0, g2_mode: G2Kind::Pulsed, g2_bins: 2100, hbt_ratio: 0.5 }
    }
}

impl Analysis {
    pub fn bin_width_ps(&self) -> photongun_core::Result<u64> {
        seconds_to_ps(self.bin_width_ms * 1e-3)
    }

    pub fn g2_options(&self, rep_rate: f64) -> photongun_core::Result<G2Options> {
        let mode = match self.g2_mode {
            G2Kind::Pulsed => G2Mode::Pulsed { period_ps: 1e12 / rep_rate },
            G2Kind::Continuous => G2Mode::Continuous,
        };
        Ok(G2Options {
            tau_max_ps: seconds_to_ps(self.tau_max_us * 1e-6)?,
            bins: self.g2_bins,
            mode,
            duration_ps: None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepAxis {
    /// Pulse energy in pJ; ρ follows from the saturation model.
    PulseEnergy,
    Rho,
    Zeta,
}

impl SweepAxis {
    pub fn key(self) -> &'static str {
        match self {
            SweepAxis::PulseEnergy => "E_p",
            SweepAxis::Rho => "rho",
            SweepAxis::Zeta => "zeta",
        }
    }
}

impl std::str::FromStr for SweepAxis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "E_p" => Ok(SweepAxis::PulseEnergy),
            "rho" => Ok(SweepAxis::Rho),
            "zeta" => Ok(SweepAxis::Zeta),
            other => Err(format!("unknown sweep axis {other:?}; expected E_p, rho or zeta")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub axis: SweepAxis,
    pub grid: Vec<f64>,
    pub seeds: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub emitter: EmitterSettings,
    pub excitation: ExcitationConfig,
    pub chain: DetectionChain,
    pub background: BackgroundModel,
    pub seed: u64,
    pub rho_override: Option<f64>,
    pub analysis: Analysis,
    pub sweep: Option<Sweep>,
    pub output_dir: PathBuf,
    pub write_csv: bool,
}

const KEYS: &[&str] = &[
    "scenario.name",
    "emitter.k21_per_s",
    "emitter.k23_per_s",
    "emitter.k31_per_s",
    "emitter.lifetime_s",
    "emitter.quantum_efficiency",
    "excitation.pulse_energy_pJ",
    "excitation.saturation_energy_pJ",
    "excitation.pulse_width_s",
    "excitation.rep_rate_Hz",
    "excitation.duration_s",
    "chain.objective_T",
    "chain.optics_T",
    "chain.detector_qe",
    "chain.extra_T",
    "background.mode",
    "background.rate_cps",
    "background.alpha_cps_per_pJ",
    "sim.seed",
    "sim.rho_override",
    "analysis.bin_width_ms",
    "analysis.tau_max_us",
    "analysis.g2_mode",
    "analysis.g2_bins",
    "analysis.hbt_ratio",
    "sweep.axis",
    "sweep.grid",
    "sweep.seeds",
    "output.dir",
    "output.csv",
];

struct Fields {
    map: BTreeMap<String, Entry>,
}

type Check = fn(f64) -> bool;

fn positive(v: f64) -> bool {
    v.is_finite() && v > 0.0
}

fn nonnegative(v: f64) -> bool {
    v.is_finite() && v >= 0.0
}

fn transmission(v: f64) -> bool {
    v > 0.0 && v <= 1.0
}

fn probability(v: f64) -> bool {
    (0.0..=1.0).contains(&v)
}

impl Fields {
    fn err(&self, key: &str, reason: impl Into<String>) -> ScenarioError {
        ScenarioError { line: self.map.get(key).map(|e| e.line), field: key.to_string(), reason: reason.into() }
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(|e| e.value.as_str())
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, ScenarioError>
    where
        T::Err: fmt::Display,
    {
        self.raw(key).map(|v| v.parse::<T>().map_err(|e| self.err(key, format!("cannot parse {v:?}: {e}")))).transpose()
    }

    fn number(&self, key: &str, default: Option<f64>, ok: Check, rule: &str) -> Result<f64, ScenarioError> {
        let v = match self.parsed::<f64>(key)? {
            Some(v) => v,
            None => default.ok_or_else(|| self.err(key, "missing required key"))?,
        };
        if !ok(v) {
            return Err(self.err(key, format!("{rule} (got {v})")));
        }
        Ok(v)
    }

    fn optional_number(&self, key: &str, ok: Check, rule: &str) -> Result<Option<f64>, ScenarioError> {
        self.raw(key).map(|_| self.number(key, None, ok, rule)).transpose()
    }
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        let map = kv::parse(text).map_err(|e| ScenarioError {
            line: Some(e.line),
            field: String::new(),
            reason: e.reason,
        })?;
        if let Some((key, entry)) = map.iter().find(|(k, _)| !KEYS.contains(&k.as_str())) {
            return Err(ScenarioError { line: Some(entry.line), field: key.clone(), reason: "unknown key".into() });
        }
        let f = Fields { map };

        let name = f.raw("scenario.name").ok_or_else(|| f.err("scenario.name", "missing required key"))?;
        if name.is_empty() {
            return Err(f.err("scenario.name", "must not be empty"));
        }

        let d = EmitterSettings::default();
        let emitter = EmitterSettings {
            k21_per_s: f.number("emitter.k21_per_s", Some(d.k21_per_s), positive, "must be positive")?,
            k23_per_s: f.number("emitter.k23_per_s", Some(d.k23_per_s), nonnegative, "must be nonnegative")?,
            k31_per_s: f.number("emitter.k31_per_s", Some(d.k31_per_s), positive, "must be positive")?,
            lifetime_s: f.optional_number("emitter.lifetime_s", positive, "must be positive")?,
            quantum_efficiency: f.number(
                "emitter.quantum_efficiency",
                Some(1.0),
                transmission,
                "must lie in (0, 1]",
            )?,
        };

        let excitation = ExcitationConfig {
            pulse_energy: f.number("excitation.pulse_energy_pJ", None, nonnegative, "must be nonnegative")?,
            saturation_energy: f.number("excitation.saturation_energy_pJ", None, positive, "must be positive")?,
            pulse_width: f.number("excitation.pulse_width_s", None, positive, "must be positive")?,
            rep_rate: f.number("excitation.rep_rate_Hz", None, positive, "must be positive")?,
            duration: f.number("excitation.duration_s", None, positive, "must be positive")?,
        };

        let chain = DetectionChain {
            objective: f.number("chain.objective_T", Some(1.0), transmission, "must lie in (0, 1]")?,
            optics: f.number("chain.optics_T", Some(1.0), transmission, "must lie in (0, 1]")?,
            detector: f.number("chain.detector_qe", Some(1.0), transmission, "must lie in (0, 1]")?,
            extra: f.number("chain.extra_T", Some(1.0), transmission, "must lie in (0, 1]")?,
        };

        let background = match f.raw("background.mode").unwrap_or("off") {
            "off" => {
                for key in ["background.rate_cps", "background.alpha_cps_per_pJ"] {
                    if f.raw(key).is_some() {
                        return Err(f.err(key, "background.mode is off"));
                    }
                }
                BackgroundModel::NONE
            }
            "fixed" => {
                if f.raw("background.alpha_cps_per_pJ").is_some() {
                    return Err(f.err("background.alpha_cps_per_pJ", "only used with background.mode = proportional"));
                }
                BackgroundModel::Fixed {
                    rate: f.number("background.rate_cps", None, nonnegative, "must be nonnegative")?,
                }
            }
            "proportional" => {
                if f.raw("background.rate_cps").is_some() {
                    return Err(f.err("background.rate_cps", "only used with background.mode = fixed"));
                }
                BackgroundModel::Proportional {
                    slope: f.number("background.alpha_cps_per_pJ", None, nonnegative, "must be nonnegative")?,
                }
            }
            other => {
                return Err(f.err("background.mode", format!("expected off, fixed or proportional, found {other:?}")))
            }
        };

        let seed = f.parsed::<u64>("sim.seed")?.unwrap_or(0);
        let rho_override = f.optional_number("sim.rho_override", probability, "must lie in [0, 1]")?;

        let da = Analysis::default();
        let g2_mode = match f.raw("analysis.g2_mode").unwrap_or("pulsed") {
            "pulsed" => G2Kind::Pulsed,
            "continuous" => G2Kind::Continuous,
            other => return Err(f.err("analysis.g2_mode", format!("expected pulsed or continuous, found {other:?}"))),
        };
        let g2_bins = f.parsed::<usize>("analysis.g2_bins")?.unwrap_or(da.g2_bins);
        if g2_bins == 0 {
            return Err(f.err("analysis.g2_bins", "must be at least 1"));
        }
        let analysis = Analysis {
            bin_width_ms: f.number("analysis.bin_width_ms", Some(da.bin_width_ms), positive, "must be positive")?,
            tau_max_us: f.number("analysis.tau_max_us", Some(da.tau_max_us), positive, "must be positive")?,
            g2_mode,
            g2_bins,
            hbt_ratio: f.number("analysis.hbt_ratio", Some(da.hbt_ratio), transmission, "must lie in (0, 1]")?,
        };

        let sweep = match f.parsed::<SweepAxis>("sweep.axis")? {
            None => {
                for key in ["sweep.grid", "sweep.seeds"] {
                    if f.raw(key).is_some() {
                        return Err(f.err(key, "set sweep.axis as well"));
                    }
                }
                None
            }
            Some(axis) => {
                let raw = f.raw("sweep.grid").ok_or_else(|| f.err("sweep.grid", "missing required key"))?;
                let grid = parse_grid(raw).map_err(|e| f.err("sweep.grid", e))?;
                let seeds = f.parsed::<usize>("sweep.seeds")?.unwrap_or(1);
                if seeds == 0 {
                    return Err(f.err("sweep.seeds", "must be at least 1"));
                }
                Some(Sweep { axis, grid, seeds })
            }
        };

        let output_dir = PathBuf::from(f.raw("output.dir").unwrap_or("out"));
        let write_csv = f.parsed::<bool>("output.csv")?.unwrap_or(false);

        let scenario = Scenario {
            name: name.to_string(),
            emitter,
            excitation,
            chain,
            background,
            seed,
            rho_override,
            analysis,
            sweep,
            output_dir,
            write_csv,
        };
        scenario.check_resolvable().map_err(|(key, reason)| f.err(key, reason))?;
        Ok(scenario)
    }

    /// Cross-field checks that single values cannot catch.
    fn check_resolvable(&self) -> Result<(), (&'static str, String)> {
        if self.name.contains(['#', '\n', '\r']) {
            return Err(("scenario.name", "must not contain '#' or line breaks".into()));
        }
        self.emitter_params().map_err(|e| ("emitter.k21_per_s", e.to_string()))?;
        self.sim_config().map_err(|e| ("excitation.duration_s", e.to_string()))?;
        self.analysis.bin_width_ps().map_err(|e| ("analysis.bin_width_ms", e.to_string()))?;
        self.analysis.g2_options(self.excitation.rep_rate).map_err(|e| ("analysis.tau_max_us", e.to_string()))?;
        if let Some(sweep) = &self.sweep {
            let bad = |v: &f64| match sweep.axis {
                SweepAxis::PulseEnergy => !nonnegative(*v),
                SweepAxis::Rho => !probability(*v),
                SweepAxis::Zeta => !transmission(*v),
            };
            if let Some(v) = sweep.grid.iter().find(|v| bad(v)) {
                return Err(("sweep.grid", format!("value {v} is outside the domain of axis {}", sweep.axis.key())));
            }
            if sweep.axis == SweepAxis::PulseEnergy && self.rho_override.is_some() {
                return Err(("sweep.axis", "an E_p sweep needs sim.rho_override unset".into()));
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        self.check_resolvable().map_err(|(key, reason)| ScenarioError { line: None, field: key.into(), reason })
    }

    /// Command-line overrides for the sweep block. Any given piece replaces
    /// the file's value; an axis with no grid anywhere is an error.
    pub fn override_sweep(
        &mut self,
        axis: Option<SweepAxis>,
        grid: Option<&str>,
        seeds: Option<usize>,
    ) -> Result<(), ScenarioError> {
        let flag = |field: &str, reason: String| ScenarioError { line: None, field: field.into(), reason };
        if axis.is_none() && grid.is_none() && seeds.is_none() {
            return Ok(());
        }
        let grid = grid.map(parse_grid).transpose().map_err(|e| flag("sweep.grid", e))?;
        if seeds == Some(0) {
            return Err(flag("sweep.seeds", "must be at least 1".into()));
        }
        let current = self.sweep.take();
        let axis = axis
            .or(current.as_ref().map(|s| s.axis))
            .ok_or_else(|| flag("sweep.axis", "no axis in the scenario or on the command line".into()))?;
        let grid = grid
            .or(current.as_ref().map(|s| s.grid.clone()))
            .ok_or_else(|| flag("sweep.grid", "no grid in the scenario or on the command line".into()))?;
        let seeds = seeds.or(current.as_ref().map(|s| s.seeds)).unwrap_or(1);
        self.sweep = Some(Sweep { axis, grid, seeds });
        self.validate()
    }

    pub fn emitter_params(&self) -> photongun_core::Result<EmitterParams> {
        let e = &self.emitter;
        let mut p = EmitterParams::new(e.k21_per_s, e.k23_per_s, e.k31_per_s)?;
        if let Some(lt) = e.lifetime_s {
            p = p.with_lifetime(lt)?;
        }
        p.with_quantum_efficiency(e.quantum_efficiency)
    }

    pub fn sim_config(&self) -> photongun_core::Result<SimConfig> {
        let cfg = SimConfig {
            emitter: self.emitter_params()?,
            excitation: self.excitation,
            chain: self.chain,
            background: self.background,
            seed: self.seed,
            rho_override: self.rho_override,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// The canonical text form, with every key written out.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let e = &self.emitter;
        let x = &self.excitation;
        let c = &self.chain;
        let a = &self.analysis;
        kv::line(&mut s, "scenario.name", &self.name);
        s.push('\n');
        kv::line(&mut s, "emitter.k21_per_s", e.k21_per_s);
        kv::line(&mut s, "emitter.k23_per_s", e.k23_per_s);
        kv::line(&mut s, "emitter.k31_per_s", e.k31_per_s);
        if let Some(lt) = e.lifetime_s {
            kv::line(&mut s, "emitter.lifetime_s", lt);
        }
        kv::line(&mut s, "emitter.quantum_efficiency", e.quantum_efficiency);
        s.push('\n');
        kv::line(&mut s, "excitation.pulse_energy_pJ", x.pulse_energy);
        kv::line(&mut s, "excitation.saturation_energy_pJ", x.saturation_energy);
        kv::line(&mut s, "excitation.pulse_width_s", x.pulse_width);
        kv::line(&mut s, "excitation.rep_rate_Hz", x.rep_rate);
        kv::line(&mut s, "excitation.duration_s", x.duration);
        s.push('\n');
        kv::line(&mut s, "chain.objective_T", c.objective);
        kv::line(&mut s, "chain.optics_T", c.optics);
        kv::line(&mut s, "chain.detector_qe", c.detector);
        kv::line(&mut s, "chain.extra_T", c.extra);
        s.push('\n');
        match self.background {
            BackgroundModel::Fixed { rate: 0.0 } => kv::line(&mut s, "background.mode", "off"),
            BackgroundModel::Fixed { rate } => {
                kv::line(&mut s, "background.mode", "fixed");
                kv::line(&mut s, "background.rate_cps", rate);
            }
            BackgroundModel::Proportional { slope } => {
                kv::line(&mut s, "background.mode", "proportional");
                kv::line(&mut s, "background.alpha_cps_per_pJ", slope);
            }
        }
        s.push('\n');
        kv::line(&mut s, "sim.seed", self.seed);
        if let Some(rho) = self.rho_override {
            kv::line(&mut s, "sim.rho_override", rho);
        }
        s.push('\n');
        kv::line(&mut s, "analysis.bin_width_ms", a.bin_width_ms);
        kv::line(&mut s, "analysis.tau_max_us", a.tau_max_us);
        kv::line(
            &mut s,
            "analysis.g2_mode",
            match a.g2_mode {
                G2Kind::Pulsed => "pulsed",
                G2Kind::Continuous => "continuous",
            },
        );
        kv::line(&mut s, "analysis.g2_bins", a.g2_bins);
        kv::line(&mut s, "analysis.hbt_ratio", a.hbt_ratio);
        if let Some(sweep) = &self.sweep {
            s.push('\n');
            kv::line(&mut s, "sweep.axis", sweep.axis.key());
            kv::line(&mut s, "sweep.grid", format_grid(&sweep.grid));
            kv::line(&mut s, "sweep.seeds", sweep.seeds);
        }
        s.push('\n');
        kv::line(&mut s, "output.dir", self.output_dir.display());
        kv::line(&mut s, "output.csv", self.write_csv);
        s
    }
}

/// Comma-separated values, or `start:stop:count` for an inclusive linear
/// grid.
pub fn parse_grid(raw: &str) -> Result<Vec<f64>, String> {
    let raw = raw.trim();
    if raw.is_empty() {
        return Err("grid is empty".into());
    }
    let grid: Vec<f64> = if let [start, stop, count] = raw.split(':').collect::<Vec<_>>()[..] {
        let start: f64 = start.trim().parse().map_err(|e| format!("grid start {start:?}: {e}"))?;
        let stop: f64 = stop.trim().parse().map_err(|e| format!("grid stop {stop:?}: {e}"))?;
        let count: usize = count.trim().parse().map_err(|e| format!("grid count {count:?}: {e}"))?;
        match count {
            0 => return Err("grid count must be at least 1".into()),
            1 => vec![start],
            n => (0..n).map(|i| start + (stop - start) * i as f64 / (n - 1) as f64).collect(),
        }
    } else {
        raw.split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|e| format!("grid value {v:?}: {e}")))
            .collect::<Result<_, _>>()?
    };
    if let Some(v) = grid.iter().find(|v| !v.is_finite()) {
        return Err(format!("grid value {v} is not finite"));
    }
    Ok(grid)
}

pub fn format_grid(grid: &[f64]) -> String {
    grid.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "\
scenario.name = minimal
excitation.pulse_energy_pJ = 200
excitation.saturation_energy_pJ = 0.05
excitation.pulse_width_s = 13e-12
excitation.rep_rate_Hz = 15000
excitation.duration_s = 10
";

    #[test]
    fn minimal_file_takes_defaults() {
        let s = Scenario::parse(MINIMAL).unwrap();
        assert_eq!(s.name, "minimal");
        assert_eq!(s.chain.total(), 1.0);
        assert_eq!(s.background, BackgroundModel::NONE);
        assert_eq!(s.analysis, Analysis::default());
        assert_eq!(s.sweep, None);
        assert_eq!(s.sim_config().unwrap().pulse_count().unwrap(), 150_000);
    }

    #[test]
    fn canonical_text_round_trips() {
        let text = format!(
            "{MINIMAL}chain.objective_T = 0.9\nbackground.mode = proportional\n\
             background.alpha_cps_per_pJ = 5.5\nsim.seed = 18446744073709551615\nsim.rho_override = 0.31\n\
             emitter.lifetime_s = 3.3e-9\nsweep.axis = zeta\nsweep.grid = 0.1, 0.30000000000000004, 1\n"
        );
        let s = Scenario::parse(&text).unwrap();
        let again = Scenario::parse(&s.to_text()).unwrap();
        assert_eq!(again, s);
        assert_eq!(again.to_text(), s.to_text());
    }

    #[test]
    fn diagnostics_name_line_and_field() {
        let text = MINIMAL.replace("duration_s = 10", "duration_s = 0");
        let err = Scenario::parse(&text).unwrap_err();
        assert_eq!((err.line, err.field.as_str()), (Some(6), "excitation.duration_s"));

        let err = Scenario::parse(&format!("{MINIMAL}chain.optics = 0.9\n")).unwrap_err();
        assert_eq!((err.line, err.reason.as_str()), (Some(7), "unknown key"));

        let err = Scenario::parse(&MINIMAL.replace("excitation.rep_rate_Hz = 15000\n", "")).unwrap_err();
        assert_eq!((err.line, err.field.as_str()), (None, "excitation.rep_rate_Hz"));

        let err = Scenario::parse(&format!("{MINIMAL}background.rate_cps = 5\n")).unwrap_err();
        assert_eq!(err.line, Some(7));

        let err = Scenario::parse(&format!("{MINIMAL}chain.detector_qe = 1.2\n")).unwrap_err();
        assert!(err.to_string().starts_with("line 7, field chain.detector_qe"), "{err}");
    }

    #[test]
    fn run_too_short_for_one_pulse() {
        let text = MINIMAL.replace("duration_s = 10", "duration_s = 1e-5");
        let err = Scenario::parse(&text).unwrap_err();
        assert_eq!(err.field, "excitation.duration_s");
    }

    #[test]
    fn grids() {
        assert_eq!(parse_grid("0.1:0.9:5").unwrap(), vec![0.1, 0.30000000000000004, 0.5, 0.7000000000000001, 0.9]);
        assert_eq!(parse_grid("2").unwrap(), vec![2.0]);
        assert_eq!(parse_grid("1:5:1").unwrap(), vec![1.0]);
        assert!(parse_grid("").is_err());
        assert!(parse_grid("1,,2").is_err());
        assert!(parse_grid("1,inf").is_err());
        let s = format!("{MINIMAL}sweep.axis = rho\nsweep.grid = 0.5,1.5\n");
        assert_eq!(Scenario::parse(&s).unwrap_err().field, "sweep.grid");
    }
}
