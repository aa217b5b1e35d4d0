//! Run reports, written both as aligned text and as flat `key = value`.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Read};
use std::path::{Path, PathBuf};

use photongun_core::stats::{squeezing_db_variance, NoiseReport};
use photongun_core::stream::SimSummary;
use sha2::{Digest, Sha256};

use crate::kv;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub bytes: u64,
    pub sha256: String,
}

impl ManifestEntry {
    pub fn of(path: &Path) -> io::Result<Self> {
        let mut file = fs::File::open(path)?;
        let mut hasher = Sha256::new();
        let mut buf = vec![0u8; 1 << 16];
        let mut bytes = 0u64;
        loop {
            let n = file.read(&mut buf)?;
            if n == 0 {
                break;
            }
            hasher.update(&buf[..n]);
            bytes += n as u64;
        }
        let name = path.file_name().map_or_else(|| path.to_path_buf(), PathBuf::from);
        Ok(Self { path: name, bytes, sha256: hex::encode(hasher.finalize()) })
    }
}

/// What a run needs to be repeated: the resolved configuration (by hash),
/// the root seed and the tool version, plus the files it wrote.
#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub command: String,
    pub name: String,
    pub seed: Option<u64>,
    pub config_sha256: String,
    pub version: String,
    pub manifest: Vec<ManifestEntry>,
}

impl Provenance {
    pub fn new(command: &str, name: &str, seed: Option<u64>, config_text: &str) -> Self {
        Self {
            command: command.into(),
            name: name.into(),
            seed,
            config_sha256: sha256_hex(config_text.as_bytes()),
            version: TOOL_VERSION.into(),
            manifest: Vec::new(),
        }
    }

    fn write_kv(&self, s: &mut String) {
        kv::line(s, "run.command", &self.command);
        kv::line(s, "run.name", &self.name);
        if let Some(seed) = self.seed {
            kv::line(s, "run.seed", seed);
        }
        kv::line(s, "run.config_sha256", &self.config_sha256);
        kv::line(s, "run.tool_version", &self.version);
        for (i, m) in self.manifest.iter().enumerate() {
            kv::line(s, &format!("file.{i}.path"), m.path.display());
            kv::line(s, &format!("file.{i}.bytes"), m.bytes);
            kv::line(s, &format!("file.{i}.sha256"), &m.sha256);
        }
    }

    fn write_text(&self, s: &mut String) {
        let _ = writeln!(s, "{} run '{}' (photongun {})", self.command, self.name, self.version);
        if let Some(seed) = self.seed {
            let _ = writeln!(s, "  root seed            {seed}");
        }
        let _ = writeln!(s, "  config sha256        {}", self.config_sha256);
    }

    fn write_manifest_text(&self, s: &mut String) {
        if self.manifest.is_empty() {
            return;
        }
        let _ = writeln!(s, "files");
        for m in &self.manifest {
            let _ = writeln!(s, "  {:<22} {:>12} bytes  sha256 {}", m.path.display(), m.bytes, m.sha256);
        }
    }
}

/// The model prediction for the run, side by side with the measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelInputs {
    pub rho: f64,
    pub zeta: f64,
    pub background_rate: f64,
    pub ratio: f64,
    pub mean_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub provenance: Provenance,
    pub summary: Option<SimSummary>,
    pub model: Option<ModelInputs>,
    pub noise: NoiseReport,
    pub g2_mode: Option<String>,
    pub g2_zero: Option<f64>,
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "none".into(), |v| v.to_string())
}

impl RunReport {
    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        self.provenance.write_kv(&mut s);
        if let Some(m) = &self.summary {
            kv::line(&mut s, "sim.pulses", m.pulses);
            kv::line(&mut s, "sim.excitations", m.excitations);
            kv::line(&mut s, "sim.isc_events", m.isc_events);
            kv::line(&mut s, "sim.triplet_lost_pulses", m.triplet_lost_pulses);
            kv::line(&mut s, "sim.triplet_loss_fraction", m.triplet_loss_fraction());
            kv::line(&mut s, "sim.signal_emitted", m.signal_emitted);
            kv::line(&mut s, "sim.signal_detected", m.signal_detected);
            kv::line(&mut s, "sim.signal_lost", m.signal_lost);
            kv::line(&mut s, "sim.background_detected", m.background_detected);
        }
        if let Some(m) = &self.model {
            kv::line(&mut s, "model.rho", m.rho);
            kv::line(&mut s, "model.zeta", m.zeta);
            kv::line(&mut s, "model.background_cps", m.background_rate);
            kv::line(&mut s, "model.mean_rate_cps", m.mean_rate);
            kv::line(&mut s, "model.ratio", m.ratio);
        }
        let n = &self.noise;
        kv::line(&mut s, "noise.bins", n.bins);
        kv::line(&mut s, "noise.mean_rate_cps", n.mean_rate);
        kv::line(&mut s, "noise.mean_counts_per_bin", n.mean_counts);
        kv::line(&mut s, "noise.sigma_sps", n.sigma_sps);
        kv::line(&mut s, "noise.sigma_sn", n.sigma_sn);
        kv::line(&mut s, "noise.ratio", n.ratio);
        kv::line(&mut s, "noise.reduction", n.noise_reduction());
        kv::line(&mut s, "noise.squeezing_db_sigma", opt(n.squeezing_db));
        kv::line(&mut s, "noise.squeezing_db_variance", opt(squeezing_db_variance(n.ratio).ok()));
        kv::line(&mut s, "noise.mandel_q", n.mandel_q);
        kv::line(&mut s, "noise.photons_per_pulse", opt(n.photons_per_pulse));
        if let Some(mode) = &self.g2_mode {
            kv::line(&mut s, "g2.mode", mode);
        }
        kv::line(&mut s, "g2.zero", opt(self.g2_zero));
        s
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        self.provenance.write_text(&mut s);
        if let Some(m) = &self.summary {
            let _ = writeln!(s, "simulation");
            let _ = writeln!(s, "  pulses               {}", m.pulses);
            let _ = writeln!(s, "  excitations          {}", m.excitations);
            let _ = writeln!(
                s,
                "  triplet-lost pulses  {} ({:.3e} of pulses)",
                m.triplet_lost_pulses,
                m.triplet_loss_fraction()
            );
            let _ = writeln!(s, "  signal emitted       {}", m.signal_emitted);
            let _ = writeln!(s, "  signal detected      {} (lost {})", m.signal_detected, m.signal_lost);
            let _ = writeln!(s, "  background detected  {}", m.background_detected);
        }
        let n = &self.noise;
        let _ = writeln!(s, "intensity noise ({} bins)", n.bins);
        let _ = writeln!(s, "  mean rate            {:.1} counts/s", n.mean_rate);
        let _ = writeln!(s, "  mean per bin         {:.4}", n.mean_counts);
        let _ = writeln!(s, "  sigma_sps / sigma_sn {:.4} / {:.4}", n.sigma_sps, n.sigma_sn);
        let _ =
            writeln!(s, "  ratio                {:.4} (noise reduction {:.1}%)", n.ratio, 100.0 * n.noise_reduction());
        let db = |v: Option<f64>| v.map_or_else(|| "n/a (super-Poissonian)".into(), |v| format!("{v:.2} dB"));
        let _ = writeln!(s, "  squeezing, sigma     {}", db(n.squeezing_db));
        let _ = writeln!(s, "  squeezing, variance  {}", db(squeezing_db_variance(n.ratio).ok()));
        let _ = writeln!(s, "  Mandel Q             {:.4}", n.mandel_q);
        if let Some(m) = n.photons_per_pulse {
            let _ = writeln!(s, "  photons per pulse    {m:.4}");
        }
        if let Some(m) = &self.model {
            let _ = writeln!(s, "model");
            let _ = writeln!(s, "  rho, zeta            {:.4}, {:.4}", m.rho, m.zeta);
            let _ = writeln!(s, "  background           {:.1} counts/s", m.background_rate);
            let _ = writeln!(s, "  mean rate            {:.1} counts/s", m.mean_rate);
            let _ = writeln!(s, "  ratio                {:.4}", m.ratio);
        }
        match (&self.g2_mode, self.g2_zero) {
            (Some(mode), Some(g)) => {
                let _ = writeln!(s, "g2(0) ({mode})          {g:.4}");
            }
            (Some(mode), None) => {
                let _ = writeln!(s, "g2(0) ({mode})          n/a (too few coincidences)");
            }
            _ => {}
        }
        self.provenance.write_manifest_text(&mut s);
        s
    }
}

/// Provenance-only report for commands without a noise measurement.
pub fn provenance_kv(p: &Provenance, extra: &str) -> String {
    let mut s = String::new();
    p.write_kv(&mut s);
    s.push_str(extra);
    s
}

pub fn provenance_text(p: &Provenance, extra: &str) -> String {
    let mut s = String::new();
    p.write_text(&mut s);
    s.push_str(extra);
    p.write_manifest_text(&mut s);
    s
}

/// Renders a `.kv` report back to aligned text, one section per key prefix.
pub fn render_kv(text: &str) -> Result<String, kv::KvError> {
    let map = kv::parse(text)?;
    let mut entries: Vec<_> = map.into_iter().collect();
    entries.sort_by_key(|(_, e)| e.line);
    let width = entries.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    let mut s = String::new();
    let mut section = "";
    for (key, entry) in &entries {
        let head = key.split('.').next().unwrap_or("");
        if head != section {
            if !section.is_empty() {
                s.push('\n');
            }
            section = head;
        }
        let _ = writeln!(s, "{key:<width$}  {}", entry.value);
    }
    Ok(s)
}
