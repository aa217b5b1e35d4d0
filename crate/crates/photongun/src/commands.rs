//! The work behind each subcommand. Every function returns a [`CliError`]
//! whose class fixes the process exit code.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{self, BufWriter};
use std::path::{Path, PathBuf};

use photongun_core::emitter::{detected_rate, shelving_occupancy, EmitterParams, SaturationParams};
use photongun_core::fitting::{
    extract_rho_curve, fit_saturation, initial_guess, FitOptions, FitResult, SaturationDataset, SaturationPoint,
};
use photongun_core::stats::{
    background_pair_probability, bin_trace, g2_histogram, mandel_q_model, noise_ratio_measured,
    noise_ratio_with_background, squeezing_db, squeezing_db_variance, BinnedTrace, G2Histogram, G2Mode, G2Options,
    NoiseReport, Replicates, TimeWindow, TraceBuilder,
};
use photongun_core::stream::{hbt_split, DetectionChain, HbtRouter, PhotonRecord, PhotonStream, SimConfig};
use photongun_core::{seconds_to_ps, Error as CoreError};
use rayon::prelude::*;

use crate::format::{self, BinaryWriter, CsvWriter, FormatError, Header};
use crate::report::{self, ManifestEntry, ModelInputs, Provenance, RunReport};
use crate::scenario::{Scenario, SweepAxis};
use crate::svg::{Plot, Series};

pub const SEED_ENV: &str = "PHOTONGUN_SEED";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("I/O error: {0}")]
    Io(String),
    #[error("malformed input: {0}")]
    Malformed(String),
    #[error("fit failed: {0}")]
    Fit(String),
    #[error("{0}")]
    Analysis(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
            CliError::Malformed(_) => 4,
            CliError::Fit(_) => 5,
            CliError::Analysis(_) => 1,
        }
    }

    fn io(path: &Path, e: io::Error) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }
}

impl From<FormatError> for CliError {
    fn from(e: FormatError) -> Self {
        match e {
            FormatError::Io(e) => CliError::Io(e.to_string()),
            other => CliError::Malformed(other.to_string()),
        }
    }
}

fn in_file(path: &Path) -> impl Fn(FormatError) -> CliError + '_ {
    move |e| match e {
        FormatError::Io(e) => CliError::io(path, e),
        other => CliError::Malformed(format!("{}: {other}", path.display())),
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

fn manifest(paths: &[PathBuf]) -> Result<Vec<ManifestEntry>, CliError> {
    paths.iter().map(|p| ManifestEntry::of(p).map_err(|e| CliError::io(p, e))).collect()
}

/// `--seed` beats the environment, which beats the file.
pub fn resolve_seed(flag: Option<u64>, file_seed: u64) -> Result<u64, CliError> {
    if let Some(seed) = flag {
        return Ok(seed);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().map_err(|e| CliError::Config(format!("{SEED_ENV}={v:?} is not a 64-bit seed: {e}"))),
        Err(std::env::VarError::NotPresent) => Ok(file_seed),
        Err(e) => Err(CliError::Config(format!("{SEED_ENV}: {e}"))),
    }
}

pub fn load_scenario(path: &Path, seed_flag: Option<u64>) -> Result<Scenario, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut scenario = Scenario::parse(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    scenario.seed = resolve_seed(seed_flag, scenario.seed)?;
    Ok(scenario)
}

fn sim_config(scenario: &Scenario) -> Result<SimConfig, CliError> {
    scenario.sim_config().map_err(|e| CliError::Config(e.to_string()))
}

fn core_config(e: CoreError) -> CliError {
    CliError::Config(e.to_string())
}

/// Expected ratio and mean rate for a configuration under the binomial
/// pulse-train plus Poisson background model.
pub fn model_for(cfg: &SimConfig, bin_width_s: f64) -> Result<ModelInputs, CliError> {
    let rho = cfg.rho().map_err(core_config)?;
    let zeta = cfg.chain.total() * cfg.emitter.quantum_efficiency();
    let background_rate = cfg.background_rate();
    let rep = cfg.excitation.rep_rate;
    let ratio = noise_ratio_with_background(zeta, rho, rep, background_rate, bin_width_s).map_err(core_config)?;
    Ok(ModelInputs { rho, zeta, background_rate, ratio, mean_rate: zeta * rho * rep + background_rate })
}

fn g2_label(mode: &G2Mode) -> String {
    match mode {
        G2Mode::Continuous => "continuous".into(),
        G2Mode::Pulsed { .. } => "pulsed".into(),
    }
}

pub struct SimulateOutput {
    pub report: RunReport,
    pub dir: PathBuf,
    pub timestamps: PathBuf,
}

pub fn simulate(scenario: &Scenario, out_dir: &Path, csv: bool) -> Result<SimulateOutput, CliError> {
    let cfg = sim_config(scenario)?;
    let bin_width_ps = scenario.analysis.bin_width_ps().map_err(core_config)?;
    let g2_opts = scenario.analysis.g2_options(cfg.excitation.rep_rate).map_err(core_config)?;
    let mut stream = PhotonStream::new(&cfg).map_err(core_config)?;
    let mut router = HbtRouter::new(scenario.analysis.hbt_ratio, cfg.seed).map_err(core_config)?;
    let window = TimeWindow::new(0, cfg.duration_ps().map_err(core_config)?);
    let mut trace = TraceBuilder::new(bin_width_ps, window).map_err(core_config)?;

    fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    let resolved = scenario.to_text();
    let resolved_path = out_dir.join("scenario.resolved");
    write_file(&resolved_path, &resolved)?;

    let bin_path = out_dir.join("photons.pgun");
    let csv_path = out_dir.join("photons.csv");
    let create = |p: &Path| File::create(p).map(BufWriter::new).map_err(|e| CliError::io(p, e));
    let mut writer = BinaryWriter::new(create(&bin_path)?, Header::new(2)).map_err(|e| CliError::io(&bin_path, e))?;
    let mut mirror = if csv { Some(CsvWriter::new(create(&csv_path)?).map_err(in_file(&csv_path))?) } else { None };

    let (mut arm_a, mut arm_b) = (Vec::new(), Vec::new());
    for rec in &mut stream {
        let rec = router.route(rec);
        trace.push(rec.t);
        writer.write(&rec).map_err(|e| CliError::io(&bin_path, e))?;
        if let Some(m) = mirror.as_mut() {
            m.write(&rec).map_err(in_file(&csv_path))?;
        }
        if rec.channel == 0 {
            arm_a.push(rec)
        } else {
            arm_b.push(rec)
        }
    }
    writer.finish().map_err(|e| CliError::io(&bin_path, e))?;
    if let Some(m) = mirror {
        m.finish().map_err(in_file(&csv_path))?;
    }
    let summary = stream.finish();

    let trace = trace.finish();
    let noise = noise_report(&trace, Some(cfg.excitation.rep_rate))?;
    let g2_zero = g2_histogram(&arm_a, &arm_b, &g2_opts).ok().map(|h| h.g2_zero);

    let mut files = vec![bin_path.clone()];
    if csv {
        files.push(csv_path);
    }
    files.push(resolved_path);
    let mut provenance = Provenance::new("simulate", &scenario.name, Some(cfg.seed), &resolved);
    provenance.manifest = manifest(&files)?;
    let report = RunReport {
        provenance,
        summary: Some(summary),
        model: Some(model_for(&cfg, trace.bin_width())?),
        noise,
        g2_mode: Some(g2_label(&g2_opts.mode)),
        g2_zero,
    };
    write_file(&out_dir.join("run_report.kv"), &report.to_kv())?;
    write_file(&out_dir.join("run_report.txt"), &report.to_text())?;
    Ok(SimulateOutput { report, dir: out_dir.to_path_buf(), timestamps: bin_path })
}

fn noise_report(trace: &BinnedTrace, rep_rate: Option<f64>) -> Result<NoiseReport, CliError> {
    let n = noise_ratio_measured(trace).map_err(|e| CliError::Analysis(format!("noise analysis: {e}")))?;
    Ok(match rep_rate {
        Some(f) => n.with_rep_rate(f, trace.bin_width()),
        None => n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum G2Choice {
    Off,
    Continuous,
    Pulsed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyzeOptions {
    pub bin_width_ms: f64,
    /// Observation window `[0, duration)`; defaults to the span up to the
    /// last record.
    pub duration_s: Option<f64>,
    pub rep_rate_hz: Option<f64>,
    pub g2: G2Choice,
    pub tau_max_us: f64,
    pub g2_bins: usize,
    /// Seed for splitting a single-channel file into two arms.
    pub split_seed: u64,
    pub out_dir: PathBuf,
}

impl AnalyzeOptions {
    fn canonical(&self, input: &Path) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "input = {}", input.display());
        let _ = writeln!(s, "bin_width_ms = {}", self.bin_width_ms);
        let _ = writeln!(s, "duration_s = {:?}", self.duration_s);
        let _ = writeln!(s, "rep_rate_Hz = {:?}", self.rep_rate_hz);
        let _ = writeln!(s, "g2 = {:?}", self.g2);
        let _ = writeln!(s, "tau_max_us = {}", self.tau_max_us);
        let _ = writeln!(s, "g2_bins = {}", self.g2_bins);
        let _ = writeln!(s, "split_seed = {}", self.split_seed);
        s
    }
}

pub struct AnalyzeOutput {
    pub report: RunReport,
    pub trace: BinnedTrace,
    pub g2: Option<G2Histogram>,
}

pub fn analyze(input: &Path, opts: &AnalyzeOptions) -> Result<AnalyzeOutput, CliError> {
    let bad = |what: &str, v: f64| CliError::Config(format!("{what} must be positive (got {v})"));
    if !(opts.bin_width_ms.is_finite() && opts.bin_width_ms > 0.0) {
        return Err(bad("--bin-width-ms", opts.bin_width_ms));
    }
    let bin_width_ps = seconds_to_ps(opts.bin_width_ms * 1e-3).map_err(core_config)?;
    let g2_mode = match opts.g2 {
        G2Choice::Off => None,
        G2Choice::Continuous => Some(G2Mode::Continuous),
        G2Choice::Pulsed => {
            let f = opts.rep_rate_hz.ok_or_else(|| CliError::Config("--g2 pulsed needs --rep-rate-hz".into()))?;
            if !(f.is_finite() && f > 0.0) {
                return Err(bad("--rep-rate-hz", f));
            }
            Some(G2Mode::Pulsed { period_ps: 1e12 / f })
        }
    };
    let tau_max_ps = seconds_to_ps(opts.tau_max_us * 1e-6).map_err(core_config)?;
    let window_end = opts.duration_s.map(|d| seconds_to_ps(d).map_err(core_config)).transpose()?;

    let file = format::read_any(input).map_err(in_file(input))?;
    let window = match window_end {
        Some(end) => TimeWindow::new(0, end),
        None => TimeWindow::from_run_start(&file.records),
    };
    let trace = bin_trace(&file.records, bin_width_ps, window).map_err(core_config)?;
    let noise = noise_report(&trace, opts.rep_rate_hz)?;

    let g2 = match g2_mode {
        None => None,
        Some(mode) => {
            let (a, b) = arms(&file, opts.split_seed)?;
            let g2_opts = G2Options { tau_max_ps, bins: opts.g2_bins, mode, duration_ps: window_end };
            Some(g2_histogram(&a, &b, &g2_opts).map_err(|e| CliError::Analysis(format!("g2: {e}")))?)
        }
    };

    let out = &opts.out_dir;
    fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let trace_path = out.join("trace.csv");
    write_trace_csv(&trace_path, &trace)?;
    let mut files = vec![input.to_path_buf(), trace_path];
    if let Some(h) = &g2 {
        let p = out.join("g2.csv");
        write_g2_csv(&p, h)?;
        let svg = out.join("g2.svg");
        write_file(&svg, &g2_plot(h).render())?;
        files.push(p);
        files.push(svg);
    }
    let name = input.file_name().map_or_else(|| input.display().to_string(), |n| n.to_string_lossy().into_owned());
    let mut provenance = Provenance::new("analyze", &name, None, &opts.canonical(input));
    provenance.manifest = manifest(&files)?;
    let report = RunReport {
        provenance,
        summary: None,
        model: None,
        noise,
        g2_mode: g2_mode.as_ref().map(g2_label),
        g2_zero: g2.as_ref().map(|h| h.g2_zero),
    };
    write_file(&out.join("analysis_report.kv"), &report.to_kv())?;
    write_file(&out.join("analysis_report.txt"), &report.to_text())?;
    Ok(AnalyzeOutput { report, trace, g2 })
}

/// Two detector arms: the file's own channels 0 and 1 when both are
/// populated, otherwise a seeded 50:50 split.
fn arms(file: &format::TimestampFile, split_seed: u64) -> Result<(Vec<PhotonRecord>, Vec<PhotonRecord>), CliError> {
    let a = file.channel(0);
    let b = file.channel(1);
    if a.len() >= 2 && b.len() >= 2 {
        return Ok((a, b));
    }
    hbt_split(&file.records, 0.5, split_seed).map_err(core_config)
}

fn table_writer(path: &Path) -> Result<csv::Writer<File>, CliError> {
    csv::Writer::from_path(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> CliError + '_ {
    move |e| CliError::Io(format!("{}: {e}", path.display()))
}

pub fn write_trace_csv(path: &Path, trace: &BinnedTrace) -> Result<(), CliError> {
    let mut w = table_writer(path)?;
    w.write_record(["bin_start_s", "counts"]).map_err(csv_err(path))?;
    let width = trace.bin_width_ps as f64 * 1e-12;
    let start = trace.start_ps as f64 * 1e-12;
    for (i, c) in trace.counts.iter().enumerate() {
        w.write_record([(start + i as f64 * width).to_string(), c.to_string()]).map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn write_g2_csv(path: &Path, h: &G2Histogram) -> Result<(), CliError> {
    let mut w = table_writer(path)?;
    w.write_record(["tau_start_s", "tau_center_s", "coincidences", "g2"]).map_err(csv_err(path))?;
    for (i, (c, g)) in h.coincidences.iter().zip(h.normalized()).enumerate() {
        w.write_record([h.bin_start(i).to_string(), h.bin_center(i).to_string(), c.to_string(), g.to_string()])
            .map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

fn g2_plot(h: &G2Histogram) -> Plot {
    let edges: Vec<f64> = (0..h.bins()).map(|i| h.bin_start(i) * 1e6).collect();
    let title = format!("g2(0) = {:.4}", h.g2_zero);
    Plot::new(&title, "delay (us)", "normalized coincidences").with(Series::steps(
        "g2",
        edges,
        h.normalized().collect(),
        h.bin_width_ps() * 1e-6,
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub rho: f64,
    pub zeta: f64,
    pub ratio: Replicates,
    pub model_ratio: f64,
    pub mean_rate: f64,
}

/// Configuration at one grid point of a sweep.
pub fn sweep_point(base: &SimConfig, axis: SweepAxis, value: f64) -> Result<SimConfig, CliError> {
    let mut cfg = *base;
    match axis {
        SweepAxis::PulseEnergy => cfg.excitation.pulse_energy = value,
        SweepAxis::Rho => cfg.rho_override = Some(value),
        SweepAxis::Zeta => cfg.chain = DetectionChain::single(value).map_err(core_config)?,
    }
    cfg.validate().map_err(core_config)?;
    Ok(cfg)
}

/// Noise ratio and mean rate of one streamed run, never materialized.
pub fn streamed_noise(cfg: &SimConfig, bin_width_ps: u64) -> Result<NoiseReport, CliError> {
    let mut stream = PhotonStream::new(cfg).map_err(core_config)?;
    let window = TimeWindow::new(0, cfg.duration_ps().map_err(core_config)?);
    let mut trace = TraceBuilder::new(bin_width_ps, window).map_err(core_config)?;
    for rec in &mut stream {
        trace.push(rec.t);
    }
    noise_report(&trace.finish(), None)
}

pub fn sweep(scenario: &Scenario, jobs: Option<usize>, out_dir: &Path) -> Result<Vec<SweepRow>, CliError> {
    let sweep =
        scenario.sweep.as_ref().ok_or_else(|| CliError::Config("scenario has no sweep.axis / sweep.grid".into()))?;
    let base = sim_config(scenario)?;
    let bin_width_ps = scenario.analysis.bin_width_ps().map_err(core_config)?;
    let bin_width_s = bin_width_ps as f64 * 1e-12;
    let configs: Vec<SimConfig> =
        sweep.grid.iter().map(|&v| sweep_point(&base, sweep.axis, v)).collect::<Result<_, _>>()?;

    let tasks: Vec<(usize, u64)> =
        (0..configs.len()).flat_map(|i| (0..sweep.seeds as u64).map(move |j| (i, j))).collect();
    let run = || {
        tasks
            .par_iter()
            .map(|&(i, j)| {
                let cfg = SimConfig { seed: base.seed.wrapping_add(j), ..configs[i] };
                streamed_noise(&cfg, bin_width_ps).map(|n| (i, j, n.ratio, n.mean_rate))
            })
            .collect::<Result<Vec<_>, _>>()
    };
    let mut results = match jobs {
        Some(0) => return Err(CliError::Config("--jobs must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Analysis(format!("thread pool: {e}")))?
            .install(run)?,
        None => run()?,
    };
    results.sort_by_key(|&(i, j, ..)| (i, j));

    let mut rows = Vec::with_capacity(configs.len());
    for (i, cfg) in configs.iter().enumerate() {
        let mine: Vec<_> = results.iter().filter(|r| r.0 == i).collect();
        let ratios: Vec<f64> = mine.iter().map(|r| r.2).collect();
        let rate = mine.iter().map(|r| r.3).sum::<f64>() / mine.len() as f64;
        let model = model_for(cfg, bin_width_s)?;
        rows.push(SweepRow {
            value: sweep.grid[i],
            rho: model.rho,
            zeta: model.zeta,
            ratio: Replicates::from_values(&ratios),
            model_ratio: model.ratio,
            mean_rate: rate,
        });
    }

    fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    let table = out_dir.join("sweep.csv");
    let axis_col = match sweep.axis {
        SweepAxis::PulseEnergy => "E_p_pJ",
        SweepAxis::Rho => "rho",
        SweepAxis::Zeta => "zeta",
    };
    let mut w = table_writer(&table)?;
    w.write_record([axis_col, "rho_model", "zeta", "seeds", "ratio_mean", "ratio_se", "ratio_model", "mean_rate_cps"])
        .map_err(csv_err(&table))?;
    for r in &rows {
        w.write_record([
            r.value.to_string(),
            r.rho.to_string(),
            r.zeta.to_string(),
            r.ratio.n.to_string(),
            r.ratio.mean.to_string(),
            r.ratio.std_error.to_string(),
            r.model_ratio.to_string(),
            r.mean_rate.to_string(),
        ])
        .map_err(csv_err(&table))?;
    }
    w.flush().map_err(|e| CliError::io(&table, e))?;

    let plot_path = out_dir.join("sweep.svg");
    write_file(&plot_path, &sweep_plot(scenario, sweep.axis, &rows).render())?;

    let resolved = scenario.to_text();
    let resolved_path = out_dir.join("scenario.resolved");
    write_file(&resolved_path, &resolved)?;
    let mut provenance = Provenance::new("sweep", &scenario.name, Some(base.seed), &resolved);
    provenance.manifest = manifest(&[table, plot_path, resolved_path])?;
    let mut extra = String::new();
    crate::kv::line(&mut extra, "sweep.axis", sweep.axis.key());
    crate::kv::line(&mut extra, "sweep.points", rows.len());
    crate::kv::line(&mut extra, "sweep.seeds", sweep.seeds);
    crate::kv::line(&mut extra, "sweep.seed_rule", "root seed + replica index");
    write_file(&out_dir.join("sweep_report.kv"), &report::provenance_kv(&provenance, &extra))?;
    write_file(&out_dir.join("sweep_report.txt"), &report::provenance_text(&provenance, &sweep_text(&rows)))?;
    Ok(rows)
}

fn sweep_text(rows: &[SweepRow]) -> String {
    let mut s = String::from("    value      rho     zeta   ratio (mean +- SE)    model\n");
    for r in rows {
        let _ = writeln!(
            s,
            "  {:>7.4} {:>8.4} {:>8.4}   {:.4} +- {:.4}    {:.4}",
            r.value, r.rho, r.zeta, r.ratio.mean, r.ratio.std_error, r.model_ratio
        );
    }
    s
}

fn sweep_plot(scenario: &Scenario, axis: SweepAxis, rows: &[SweepRow]) -> Plot {
    let x_label = match axis {
        SweepAxis::PulseEnergy => "pulse energy E_p (pJ)",
        SweepAxis::Rho => "excitation probability rho",
        SweepAxis::Zeta => "detection efficiency zeta",
    };
    let xs: Vec<f64> = rows.iter().map(|r| r.value).collect();
    let err: Vec<f64> = rows.iter().map(|r| r.ratio.std_error).collect();
    let mut plot = Plot::new(&format!("{}: noise ratio", scenario.name), x_label, "sigma_sps / sigma_sn")
        .with(Series::points("simulated", xs.clone(), rows.iter().map(|r| r.ratio.mean).collect(), Some(err)))
        .with(Series::line("model", xs.clone(), rows.iter().map(|r| r.model_ratio).collect()));
    let positive = xs.iter().all(|&x| x > 0.0);
    let (lo, hi) = xs.iter().fold((f64::INFINITY, 0f64), |(l, h), &x| (l.min(x), h.max(x)));
    if axis == SweepAxis::PulseEnergy && positive && hi / lo > 20.0 {
        plot = plot.log_x();
    }
    plot
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitCommand {
    pub pulse_width_s: f64,
    pub lifetime_s: f64,
    pub fixed_alpha: Option<f64>,
    pub integration_time_s: Option<f64>,
    pub out_dir: PathBuf,
}

/// Parses `tau_p=13e-12,tau_r=1e-8[,alpha=0]`.
pub fn parse_fix(spec: &str) -> Result<(f64, f64, Option<f64>), CliError> {
    let (mut tau_p, mut tau_r, mut alpha) = (None, None, None);
    for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) =
            part.split_once('=').ok_or_else(|| CliError::Config(format!("--fix entry {part:?} is not name=value")))?;
        let v: f64 = v.trim().parse().map_err(|e| CliError::Config(format!("--fix {k}: {e}")))?;
        if !(v.is_finite() && v >= 0.0) {
            return Err(CliError::Config(format!("--fix {k} must be finite and nonnegative (got {v})")));
        }
        match k.trim() {
            "tau_p" => tau_p = Some(v),
            "tau_r" => tau_r = Some(v),
            "alpha" => alpha = Some(v),
            other => return Err(CliError::Config(format!("--fix: unknown parameter {other:?} (tau_p, tau_r, alpha)"))),
        }
    }
    match (tau_p, tau_r) {
        (Some(p), Some(r)) if p > 0.0 && r > 0.0 => Ok((p, r, alpha)),
        _ => Err(CliError::Config("--fix needs positive tau_p and tau_r".into())),
    }
}

/// Reads `E_p_pJ,rate_cps[,weight]`.
pub fn read_saturation_csv(path: &Path) -> Result<Vec<SaturationPoint>, CliError> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(e) => CliError::io(path, e),
        other => CliError::Malformed(format!("{}: {other:?}", path.display())),
    })?;
    let malformed = |line: u64, msg: String| CliError::Malformed(format!("{} line {line}: {msg}", path.display()));
    let headers = rdr.headers().map_err(|e| malformed(1, e.to_string()))?.clone();
    let col = |name: &str| headers.iter().position(|h| h.trim() == name);
    let (Some(ie), Some(ir)) = (col("E_p_pJ"), col("rate_cps")) else {
        return Err(malformed(1, "header must contain E_p_pJ and rate_cps".into()));
    };
    let iw = col("weight");
    let mut points = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| malformed(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = row.position().map_or(0, |p| p.line());
        let num = |i: usize, name: &str| -> Result<f64, CliError> {
            let raw = row.get(i).unwrap_or("").trim();
            raw.parse::<f64>().map_err(|e| malformed(line, format!("{name} {raw:?}: {e}")))
        };
        let weight = match iw {
            Some(i) if !row.get(i).unwrap_or("").trim().is_empty() => Some(num(i, "weight")?),
            _ => None,
        };
        points.push(SaturationPoint { pulse_energy: num(ie, "E_p_pJ")?, rate: num(ir, "rate_cps")?, weight });
    }
    Ok(points)
}

pub struct FitOutput {
    pub fit: FitResult,
    pub rho_curve: Vec<(f64, f64)>,
}

fn params_text(p: &SaturationParams) -> String {
    format!(
        "R0 = {:.6e} counts/s, E_s = {:.6e} pJ, alpha = {:.6e} counts/(s pJ)",
        p.max_rate, p.saturation_energy, p.background_slope
    )
}

pub fn fit(data_path: &Path, cmd: &FitCommand) -> Result<FitOutput, CliError> {
    let points = read_saturation_csv(data_path)?;
    let mut data = SaturationDataset::new(points, cmd.pulse_width_s, cmd.lifetime_s);
    data.integration_time = cmd.integration_time_s;
    let opts = FitOptions { fixed_background_slope: cmd.fixed_alpha, ..FitOptions::default() };
    let initial = (data.points.len() >= 2).then(|| initial_guess(&data, cmd.fixed_alpha));
    let fit = fit_saturation(&data, &opts).map_err(|e| {
        let init = initial.map_or_else(|| "none (too few points)".into(), |p| params_text(&p));
        CliError::Fit(format!("{e}\n  initialization: {init}"))
    })?;

    let out = &cmd.out_dir;
    fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let mut kvs = String::new();
    let kvl = |s: &mut String, k: &str, v: f64| crate::kv::line(s, k, v);
    kvl(&mut kvs, "fit.R0_cps", fit.params.max_rate);
    kvl(&mut kvs, "fit.R0_se_cps", fit.std_errors.max_rate);
    kvl(&mut kvs, "fit.E_s_pJ", fit.params.saturation_energy);
    kvl(&mut kvs, "fit.E_s_se_pJ", fit.std_errors.saturation_energy);
    kvl(&mut kvs, "fit.alpha_cps_per_pJ", fit.params.background_slope);
    kvl(&mut kvs, "fit.alpha_se_cps_per_pJ", fit.std_errors.background_slope);
    kvl(&mut kvs, "fit.tau_p_s", fit.params.pulse_width);
    kvl(&mut kvs, "fit.tau_r_s", fit.params.lifetime);
    kvl(&mut kvs, "fit.residual_norm", fit.residual_norm);
    crate::kv::line(&mut kvs, "fit.converged", fit.converged);
    crate::kv::line(&mut kvs, "fit.iterations", fit.iterations);
    kvl(&mut kvs, "init.R0_cps", fit.initial.max_rate);
    kvl(&mut kvs, "init.E_s_pJ", fit.initial.saturation_energy);
    kvl(&mut kvs, "init.alpha_cps_per_pJ", fit.initial.background_slope);

    let mut text = String::new();
    let _ = writeln!(text, "saturation fit of {} points", data.points.len());
    let _ = writeln!(text, "  R0     {:>12.2} +- {:.2} counts/s", fit.params.max_rate, fit.std_errors.max_rate);
    let _ =
        writeln!(text, "  E_s    {:>12.5} +- {:.5} pJ", fit.params.saturation_energy, fit.std_errors.saturation_energy);
    let _ = writeln!(
        text,
        "  alpha  {:>12.4} +- {:.4} counts/(s pJ){}",
        fit.params.background_slope,
        fit.std_errors.background_slope,
        if cmd.fixed_alpha.is_some() { " (fixed)" } else { "" }
    );
    let _ = writeln!(
        text,
        "  residual norm {:.4e}, {} iterations, converged: {}",
        fit.residual_norm, fit.iterations, fit.converged
    );
    let _ = writeln!(text, "  initialization: {}", params_text(&fit.initial));

    let canonical = format!(
        "data = {}\ntau_p_s = {}\ntau_r_s = {}\nalpha = {:?}\nintegration_time_s = {:?}\n",
        data_path.display(),
        cmd.pulse_width_s,
        cmd.lifetime_s,
        cmd.fixed_alpha,
        cmd.integration_time_s
    );
    let name = data_path.file_name().map_or_else(String::new, |n| n.to_string_lossy().into_owned());
    let mut provenance = Provenance::new("fit", &name, None, &canonical);

    if !fit.converged {
        provenance.manifest = manifest(&[data_path.to_path_buf()])?;
        write_file(&out.join("fit_report.kv"), &report::provenance_kv(&provenance, &kvs))?;
        write_file(&out.join("fit_report.txt"), &report::provenance_text(&provenance, &text))?;
        return Err(CliError::Fit(format!("no convergence after {} iterations\n{text}", fit.iterations)));
    }

    let max_e = data.points.iter().map(|p| p.pulse_energy).fold(0.0, f64::max);
    let min_e = data.points.iter().map(|p| p.pulse_energy).filter(|e| *e > 0.0).fold(max_e, f64::min);
    let grid = log_grid(min_e, max_e, 200);
    let rho_curve = extract_rho_curve(&fit, &grid).map_err(|e| CliError::Fit(e.to_string()))?;
    let curve_path = out.join("rho_curve.csv");
    let mut w = table_writer(&curve_path)?;
    w.write_record(["E_p_pJ", "rho", "rate_model_cps"]).map_err(csv_err(&curve_path))?;
    for &(e, rho) in &rho_curve {
        let r = detected_rate(e, &fit.params).map_err(core_config)?;
        w.write_record([e.to_string(), rho.to_string(), r.to_string()]).map_err(csv_err(&curve_path))?;
    }
    w.flush().map_err(|e| CliError::io(&curve_path, e))?;

    let at_max = fit.params.excited_population(max_e).map_err(core_config)?;
    crate::kv::line(&mut kvs, "fit.rho_at_max_E_p", at_max);
    let _ = writeln!(text, "  rho at the highest pulse energy ({max_e} pJ): {at_max:.4}");

    let overlay = out.join("fit_overlay.svg");
    write_file(&overlay, &fit_plot(&data, &fit, &rho_curve).render())?;
    provenance.manifest = manifest(&[data_path.to_path_buf(), curve_path, overlay])?;
    write_file(&out.join("fit_report.kv"), &report::provenance_kv(&provenance, &kvs))?;
    write_file(&out.join("fit_report.txt"), &report::provenance_text(&provenance, &text))?;
    Ok(FitOutput { fit, rho_curve })
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if lo.is_nan() || lo <= 0.0 || hi <= lo {
        return vec![hi];
    }
    (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect()
}

fn fit_plot(data: &SaturationDataset, fit: &FitResult, curve: &[(f64, f64)]) -> Plot {
    let xs: Vec<f64> = curve.iter().map(|c| c.0).collect();
    let p = &fit.params;
    let mut plot = Plot::new("saturation fit", "pulse energy E_p (pJ)", "detected rate (counts/s)")
        .with(Series::points(
            "data",
            data.points.iter().map(|q| q.pulse_energy).collect(),
            data.points.iter().map(|q| q.rate).collect(),
            None,
        ))
        .with(Series::line(
            "fit",
            xs.clone(),
            curve.iter().map(|&(e, rho)| p.max_rate * rho + p.background_slope * e).collect(),
        ))
        .with(Series::line("molecule", xs.clone(), curve.iter().map(|&(_, rho)| p.max_rate * rho).collect()))
        .with(Series::line("background", xs.clone(), xs.iter().map(|e| p.background_slope * e).collect()));
    if xs.len() > 1 && xs[xs.len() - 1] / xs[0] > 20.0 {
        plot = plot.log_x();
    }
    plot
}

/// Published figures next to what the models give for the stated
/// parameters.
pub fn anchors() -> Result<String, CliError> {
    let c = core_config;
    let chain = DetectionChain::immersion_setup();
    let zeta = chain.total();
    let rho = 0.99;
    let rep = 15e3;
    let bg = 1100.0;
    let mut s = String::new();
    let mut row = |what: &str, model: String, reported: &str| {
        let _ = writeln!(s, "  {what:<44} {model:>16}   {reported}");
    };
    row("quantity", "model".into(), "reported");
    row("detection efficiency 0.90 x 0.95 x 0.80", format!("{zeta:.3}"), "0.68 +- 0.03");
    row("mean rate, zeta 0.684, rho 0.99 (counts/s)", format!("{:.0}", zeta * rho * rep + bg), "11400");
    row("mean rate, zeta 0.68 (counts/s)", format!("{:.0}", 0.68 * rho * rep + bg), "11400");
    let r68 = noise_ratio_with_background(0.68, rho, rep, bg, 1e-3).map_err(c)?;
    row("noise ratio, zeta 0.68, 1100 counts/s bg", format!("{r68:.4}"), "0.62 +- 0.03");
    let r684 = noise_ratio_with_background(zeta, rho, rep, bg, 1e-3).map_err(c)?;
    row("noise ratio, zeta 0.684", format!("{r684:.4}"), "0.62 +- 0.03");
    row("noise ratio, no background", format!("{:.4}", (1.0 - 0.68 * rho).sqrt()), "");
    row("squeezing of ratio 0.6 (sigma dB)", format!("{:.2}", squeezing_db(0.6).map_err(c)?), "2.2 dB");
    row("squeezing of ratio 0.6 (variance dB)", format!("{:.2}", squeezing_db_variance(0.6).map_err(c)?), "");
    row("squeezing of ratio 0.24 (sigma dB)", format!("{:.2}", squeezing_db(0.24).map_err(c)?), "6.2 dB");
    row("squeezing of ratio 0.24 (variance dB)", format!("{:.2}", squeezing_db_variance(0.24).map_err(c)?), "");
    // antenna output: drop optics and detector losses, scale background up
    // by the same factors
    let kept = chain.objective;
    let removed = chain.optics * chain.detector;
    let r_ant = noise_ratio_with_background(kept, rho, rep, bg / removed, 1e-3).map_err(c)?;
    row("ratio after antenna, zeta 0.90, bg / 0.76", format!("{r_ant:.4}"), "0.24");
    let r_all = noise_ratio_with_background(1.0, rho, rep, bg / zeta, 1e-3).map_err(c)?;
    row("ratio after antenna, zeta 1, bg / 0.684", format!("{r_all:.4}"), "0.24");
    row("ratio after antenna, zeta 1, no background", format!("{:.4}", (1.0f64 - rho).sqrt()), "0.24");
    for (g2, z, label, reported) in [
        (0.15, 0.68, "Mandel Q, g2 0.15, M 1, zeta 0.68, rho 0.99", "-0.64"),
        (0.0, 0.68, "Mandel Q, g2 0, M 1, zeta 0.68, rho 0.99", "-0.64"),
        (0.15, 0.90, "Mandel Q, g2 0.15, M 1, zeta 0.90, rho 0.99", "-0.93"),
        (0.15, 1.0, "Mandel Q, g2 0.15, M 1, zeta 1, rho 0.99", "-0.93"),
        (0.0, 1.0, "Mandel Q, g2 0, M 1, zeta 1, rho 0.99", "-0.93"),
    ] {
        row(label, format!("{:.4}", mandel_q_model(g2, 1.0, z, rho).map_err(c)?), reported);
    }
    row("Mandel Q, ideal source", format!("{:.4}", mandel_q_model(0.0, 1.0, 1.0, 1.0).map_err(c)?), "-1");
    let pb = 0.075;
    row(
        "background pair probability, mean 0.075",
        format!("{:.4}", background_pair_probability(pb).map_err(c)?),
        "0.3%",
    );
    row(
        "pulsed g2(0), signal + 0.075 background",
        format!("{:.4}", (2.0 * pb + pb * pb) / ((1.0 + pb) * (1.0 + pb))),
        "0.15",
    );
    row("pulsed g2(0), leading order 2 p_b", format!("{:.4}", 2.0 * pb), "0.15");
    let emitter = EmitterParams::terrylene();
    row("mean triplet dwell (us)", format!("{:.0}", emitter.dark_period() * 1e6), "about 170");
    row(
        "pulses lost to the triplet, 15 kHz, rho 0.99",
        format!("{:.2e}", shelving_occupancy(&emitter, rep, rho).map_err(c)?),
        "about 1e-4",
    );
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fix_accepts_optional_alpha() {
        assert_eq!(parse_fix("tau_p=13e-12,tau_r=1e-8").unwrap(), (13e-12, 1e-8, None));
        assert_eq!(parse_fix(" tau_r=1e-8 , tau_p=1e-12, alpha=0 ").unwrap(), (1e-12, 1e-8, Some(0.0)));
    }

    #[test]
    fn fix_rejects_junk() {
        for bad in ["tau_p=1e-12", "tau_p=0,tau_r=1e-8", "tau_p=1e-12,tau_r=x", "tau_p", "beta=1,tau_p=1,tau_r=1"] {
            assert_eq!(parse_fix(bad).unwrap_err().exit_code(), 2, "{bad}");
        }
    }

    #[test]
    fn log_grid_hits_both_ends() {
        let g = log_grid(0.01, 100.0, 5);
        assert_eq!(g.len(), 5);
        assert!((g[0] - 0.01).abs() < 1e-15 && (g[4] - 100.0).abs() < 1e-10);
        assert!((g[2] - 1.0).abs() < 1e-12);
        assert_eq!(log_grid(0.0, 5.0, 10), vec![5.0]);
    }

    #[test]
    fn saturation_csv_reports_bad_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        std::fs::write(&p, "E_p_pJ,rate_cps,weight\n1,100,\n2,oops,1\n").unwrap();
        let err = read_saturation_csv(&p).unwrap_err();
        assert_eq!(err.exit_code(), 4);
        assert!(err.to_string().contains("line 3"), "{err}");
        std::fs::write(&p, "rate_cps,E_p_pJ\n100,1\n").unwrap();
        let pts = read_saturation_csv(&p).unwrap();
        assert_eq!((pts[0].pulse_energy, pts[0].rate, pts[0].weight), (1.0, 100.0, None));
    }

    #[test]
    fn sweep_point_validates() {
        let text = include_str!("../examples/paper_fig3.scenario");
        let base = Scenario::parse(text).unwrap().sim_config().unwrap();
        let cfg = sweep_point(&base, SweepAxis::Rho, 0.5).unwrap();
        assert_eq!(cfg.rho_override, Some(0.5));
        assert_eq!(sweep_point(&base, SweepAxis::Rho, 1.5).unwrap_err().exit_code(), 2);
        assert_eq!(sweep_point(&base, SweepAxis::Zeta, -0.1).unwrap_err().exit_code(), 2);
    }
}
