use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use photongun::commands::{self, AnalyzeOptions, CliError, FitCommand, G2Choice};
use photongun::report;
use photongun::scenario::SweepAxis;

/// Monte Carlo pulsed single-molecule photon source with photon-statistics
/// and saturation-fit tooling.
#[derive(Parser, Debug)]
#[command(name = "photongun", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a scenario and write timestamps plus a noise / g2 report.
    Simulate {
        scenario: PathBuf,
        /// Root seed; overrides PHOTONGUN_SEED and sim.seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory; defaults to the scenario's output.dir.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write photons.csv.
        #[arg(long)]
        csv: bool,
    },
    /// Bin a timestamp file (.pgun or .csv) and report noise and g2.
    Analyze {
        file: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        bin_width_ms: f64,
        /// Observation window [0, duration); defaults to the last record.
        #[arg(long)]
        duration_s: Option<f64>,
        /// Repetition rate, needed for pulsed g2 and photons per pulse.
        #[arg(long)]
        rep_rate_hz: Option<f64>,
        #[arg(long, value_enum, default_value_t = G2Arg::None)]
        g2: G2Arg,
        #[arg(long, default_value_t = 700.0)]
        tau_max_us: f64,
        #[arg(long, default_value_t = 2100)]
        g2_bins: usize,
        /// Seed for splitting a single-channel file into two arms.
        #[arg(long, default_value_t = 0)]
        split_seed: u64,
        #[arg(long, default_value = "analysis")]
        out: PathBuf,
    },
    /// Sweep one parameter over a grid with replicate seeds.
    Sweep {
        scenario: PathBuf,
        #[arg(long)]
        axis: Option<SweepAxis>,
        /// Comma list or start:stop:count.
        #[arg(long)]
        grid: Option<String>,
        #[arg(long)]
        seeds: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads; defaults to all cores.
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit the saturation curve to a CSV of E_p_pJ,rate_cps[,weight].
    Fit {
        data: PathBuf,
        /// Known constants: tau_p=<s>,tau_r=<s>[,alpha=<cps/pJ>].
        #[arg(long)]
        fix: String,
        /// Counting time per point, for Poisson weights when no weight column.
        #[arg(long)]
        integration_time_s: Option<f64>,
        #[arg(long, default_value = "fit")]
        out: PathBuf,
    },
    /// Print a .kv report as aligned text, or the reference comparison table.
    Report {
        file: Option<PathBuf>,
        #[arg(long, conflicts_with = "file")]
        anchors: bool,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum G2Arg {
    None,
    Pulsed,
    Continuous,
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate { scenario, seed, out, csv } => {
            let sc = commands::load_scenario(&scenario, seed)?;
            let dir = out.unwrap_or_else(|| sc.output_dir.clone());
            let res = commands::simulate(&sc, &dir, csv || sc.write_csv)?;
            print!("{}", res.report.to_text());
            println!("wrote {}", res.dir.display());
        }
        Command::Analyze { file, bin_width_ms, duration_s, rep_rate_hz, g2, tau_max_us, g2_bins, split_seed, out } => {
            let opts = AnalyzeOptions {
                bin_width_ms,
                duration_s,
                rep_rate_hz,
                g2: match g2 {
                    G2Arg::None => G2Choice::Off,
                    G2Arg::Pulsed => G2Choice::Pulsed,
                    G2Arg::Continuous => G2Choice::Continuous,
                },
                tau_max_us,
                g2_bins,
                split_seed,
                out_dir: out,
            };
            let res = commands::analyze(&file, &opts)?;
            print!("{}", res.report.to_text());
        }
        Command::Sweep { scenario, axis, grid, seeds, seed, jobs, out } => {
            let mut sc = commands::load_scenario(&scenario, seed)?;
            sc.override_sweep(axis, grid.as_deref(), seeds).map_err(|e| CliError::Config(e.to_string()))?;
            let dir = out.unwrap_or_else(|| sc.output_dir.clone());
            let rows = commands::sweep(&sc, jobs, &dir)?;
            println!("{} grid points written to {}", rows.len(), dir.join("sweep.csv").display());
            for r in &rows {
                println!(
                    "  {:>9.4}  ratio {:.4} +- {:.4}  model {:.4}",
                    r.value, r.ratio.mean, r.ratio.std_error, r.model_ratio
                );
            }
        }
        Command::Fit { data, fix, integration_time_s, out } => {
            let (pulse_width_s, lifetime_s, fixed_alpha) = commands::parse_fix(&fix)?;
            let cmd = FitCommand { pulse_width_s, lifetime_s, fixed_alpha, integration_time_s, out_dir: out.clone() };
            commands::fit(&data, &cmd)?;
            let text = std::fs::read_to_string(out.join("fit_report.txt")).map_err(|e| CliError::Io(e.to_string()))?;
            print!("{text}");
        }
        Command::Report { file, anchors } => {
            if anchors {
                print!("{}", commands::anchors()?);
            } else {
                let path = file.ok_or_else(|| CliError::Config("give a .kv report or --anchors".into()))?;
                let text =
                    std::fs::read_to_string(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
                let rendered =
                    report::render_kv(&text).map_err(|e| CliError::Malformed(format!("{}: {e}", path.display())))?;
                print!("{rendered}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("photongun: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
