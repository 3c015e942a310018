use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use fadelink::codec::save_image;
use fadelink::harness::{
    output, run_nmse_table, run_perm_gain, run_selftest, run_snr_sweep, run_transmit, Artifacts,
    ExperimentConfig, ExperimentKind,
};

const EXIT_USAGE: u8 = 1;
const EXIT_RUNTIME: u8 = 2;
const EXIT_SELFTEST: u8 = 3;

#[derive(Parser)]
#[command(
    name = "fadelink",
    version,
    about = "Channel-aging and feature-permutation transport experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mean CSI NMSE of pilot-frozen estimates per velocity
    NmseTable(Common),
    /// Paired PSNR of scored versus identity permutation
    PermGain(Common),
    /// Mean PSNR per SNR for both CSI scenarios
    SnrSweep(Common),
    /// One transmission with a full report and the reconstructed image
    Transmit {
        #[command(flatten)]
        common: Common,
        /// Image to send (PPM, or PNG); defaults to a synthetic scene
        #[arg(long)]
        image: Option<PathBuf>,
    },
    /// Quick invariant checks; exits 3 on failure
    Selftest(Common),
}

#[derive(Args, Default)]
struct Common {
    /// Flat `key = value` config file; flags override it
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    trials: Option<String>,
    /// Comma-separated velocities in m/s
    #[arg(long, allow_hyphen_values = true)]
    velocities: Option<String>,
    /// Comma-separated SNRs in dB; `inf` for noiseless
    #[arg(long, allow_hyphen_values = true)]
    snr: Option<String>,
    /// withcp or aging
    #[arg(long)]
    scenario: Option<String>,
    #[arg(long)]
    pilot_period_ms: Option<String>,
    /// Output directory; without it the main table goes to stdout
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    carrier_hz: Option<String>,
    /// Kept coefficients per tile, across colours (= C)
    #[arg(long)]
    kept_coefficients: Option<String>,
    #[arg(long)]
    block_edge: Option<String>,
    /// Comma-separated image paths
    #[arg(long)]
    images: Option<String>,
    #[arg(long)]
    image_count: Option<String>,
    /// scored or identity
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    trajectory_s: Option<String>,
    /// Also emit an SVG chart
    #[arg(long)]
    svg: bool,
    /// Any other config key, as KEY=VALUE
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

enum Failure {
    Usage(String),
    Runtime(anyhow::Error),
    Selftest,
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

impl Common {
    fn build(&self, kind: ExperimentKind) -> Result<ExperimentConfig, Failure> {
        let mut cfg = ExperimentConfig::for_experiment(kind);
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path)
                .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
            cfg.apply_text(&text)
                .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
            cfg.experiment = kind;
        }
        let flags = [
            ("seed", &self.seed),
            ("trials", &self.trials),
            ("velocities", &self.velocities),
            ("snr", &self.snr),
            ("scenario", &self.scenario),
            ("pilot-period-ms", &self.pilot_period_ms),
            ("carrier-hz", &self.carrier_hz),
            ("kept-coefficients", &self.kept_coefficients),
            ("block-edge", &self.block_edge),
            ("images", &self.images),
            ("image-count", &self.image_count),
            ("mode", &self.mode),
            ("trajectory-s", &self.trajectory_s),
        ];
        let usage = |e: fadelink::Error| Failure::Usage(e.to_string());
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, v).map_err(usage)?;
            }
        }
        for pair in &self.set {
            let (k, v) = pair
                .split_once('=')
                .ok_or_else(|| Failure::Usage(format!("--set expects KEY=VALUE, got '{pair}'")))?;
            cfg.set(k, v).map_err(usage)?;
        }
        if let Some(out) = &self.out {
            cfg.out_dir = Some(out.clone());
        }
        if self.svg {
            cfg.svg = true;
        }
        cfg.validate().map_err(usage)?;
        Ok(cfg)
    }
}

/// Writes artifacts to the output directory, or prints the first one.
fn emit(cfg: &ExperimentConfig, artifacts: &Artifacts) -> anyhow::Result<()> {
    match &cfg.out_dir {
        Some(dir) => {
            for path in artifacts.write_to(dir)? {
                eprintln!("wrote {}", path.display());
            }
        }
        None => {
            if let Some((_, bytes)) = artifacts.files.first() {
                print!("{}", String::from_utf8_lossy(bytes));
            }
        }
    }
    Ok(())
}

fn write_image(dir: &Path, name: &str, img: &fadelink::codec::Image) -> anyhow::Result<()> {
    let path = dir.join(name);
    save_image(img, &path).with_context(|| format!("writing {}", path.display()))?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::NmseTable(c) => {
            let cfg = c.build(ExperimentKind::NmseTable)?;
            let table = run_nmse_table(&cfg).context("nmse-table")?;
            emit(
                &cfg,
                &output::nmse_artifacts(&cfg, &table).context("rendering")?,
            )?;
        }
        Command::PermGain(c) => {
            let cfg = c.build(ExperimentKind::PermGain)?;
            let table = run_perm_gain(&cfg).context("perm-gain")?;
            emit(
                &cfg,
                &output::gain_artifacts(&cfg, &table).context("rendering")?,
            )?;
        }
        Command::SnrSweep(c) => {
            let cfg = c.build(ExperimentKind::SnrSweep)?;
            let table = run_snr_sweep(&cfg).context("snr-sweep")?;
            emit(
                &cfg,
                &output::sweep_artifacts(&cfg, &table).context("rendering")?,
            )?;
        }
        Command::Transmit { common, image } => {
            let cfg = common.build(ExperimentKind::Transmit)?;
            let result = run_transmit(&cfg, image.as_deref()).context("transmit")?;
            let json = output::summary_json(&cfg, &result.report).context("rendering")?;
            match &cfg.out_dir {
                Some(dir) => {
                    let artifacts = Artifacts {
                        files: vec![("transmit.json".into(), json.into_bytes())],
                    };
                    emit(&cfg, &artifacts)?;
                    write_image(dir, "transmit-original.ppm", &result.original)?;
                    write_image(dir, "transmit-reconstructed.ppm", &result.reconstructed)?;
                }
                None => print!("{json}"),
            }
            if !result.report.invariant_violations.is_empty() {
                return Err(Failure::Selftest);
            }
        }
        Command::Selftest(c) => {
            let cfg = c.build(ExperimentKind::Transmit)?;
            let report = run_selftest(cfg.seed);
            let json = serde_json::to_string_pretty(&report).context("rendering")? + "\n";
            for check in &report.checks {
                let status = if check.passed { "PASS" } else { "FAIL" };
                eprintln!("{status} {:<18} {}", check.name, check.detail);
            }
            let artifacts = Artifacts {
                files: vec![("selftest.json".into(), json.into_bytes())],
            };
            emit(&cfg, &artifacts)?;
            if !report.passed() {
                return Err(Failure::Selftest);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_RUNTIME)
        }
        Err(Failure::Selftest) => {
            eprintln!("invariant check failed");
            ExitCode::from(EXIT_SELFTEST)
        }
    }
}
