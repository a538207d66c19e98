use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;

use fdmud::channel::{draw_channel, write_channel_dump, ChannelConfig};
use fdmud::harness::config::{parse_kv, scenario_from_map, scenario_to_kv, ConfigMap, DEFAULT_SEED};
use fdmud::harness::montecarlo::metadata;
use fdmud::harness::verify::{precode_suite, verify_suite, CheckOutcome};
use fdmud::harness::{complexity_sweep, run_monte_carlo};
use fdmud::Error;

#[derive(Debug, Parser)]
#[command(name = "fdmud", version, about = "Frequency-domain multi-user detection for CP single-carrier massive MIMO")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Monte-Carlo SINR sweep; writes CSV to --output or stdout
    Simulate(SimulateArgs),
    /// Complex multiplies per bin for MMSE vs MRC-MMSE
    Complexity(ComplexityArgs),
    /// Run the detector equivalence and identity property suites
    Verify(VerifyArgs),
    /// Run the downlink precoder self-consistency checks
    PrecodeCheck(PrecodeArgs),
}

/// Scenario keys, spelled as in the config file. Each overrides the same
/// key from --config.
#[derive(Debug, Args)]
struct ScenarioFlags {
    /// key = value scenario file
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    m: Option<String>,
    #[arg(long)]
    k: Option<String>,
    #[arg(long)]
    n: Option<String>,
    #[arg(long = "l_h", alias = "l-h")]
    l_h: Option<String>,
    #[arg(long = "l_cp", alias = "l-cp")]
    l_cp: Option<String>,
    #[arg(long = "decay_samples", alias = "decay-samples")]
    decay_samples: Option<String>,
    #[arg(long = "power_low", alias = "power-low")]
    power_low: Option<String>,
    #[arg(long = "power_high", alias = "power-high")]
    power_high: Option<String>,
    /// Master RNG seed (default 1)
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    constellation: Option<String>,
    /// Comma list: mmse, mrc-mmse, tr-mrc, low-snr, high-snr-zf
    #[arg(long)]
    detectors: Option<String>,
    /// start:stop:step or a comma list, in dB
    #[arg(long = "snr_sweep", alias = "snr-sweep", allow_hyphen_values = true)]
    snr_sweep: Option<String>,
    #[arg(long = "frames_per_point", alias = "frames-per-point")]
    frames_per_point: Option<String>,
    #[arg(long)]
    output: Option<String>,
}

impl ScenarioFlags {
    fn merged(&self) -> Result<ConfigMap, Error> {
        let mut map = match &self.config {
            Some(path) => parse_kv(&std::fs::read_to_string(path)?)?,
            None => ConfigMap::new(),
        };
        let flags = [
            ("m", &self.m),
            ("k", &self.k),
            ("n", &self.n),
            ("l_h", &self.l_h),
            ("l_cp", &self.l_cp),
            ("decay_samples", &self.decay_samples),
            ("power_low", &self.power_low),
            ("power_high", &self.power_high),
            ("seed", &self.seed),
            ("constellation", &self.constellation),
            ("detectors", &self.detectors),
            ("snr_sweep", &self.snr_sweep),
            ("frames_per_point", &self.frames_per_point),
            ("output", &self.output),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                map.insert(key.to_string(), v.clone());
            }
        }
        Ok(map)
    }
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    scenario: ScenarioFlags,
    /// Also write the first frame's channel taps here
    #[arg(long)]
    channel_dump: Option<PathBuf>,
    /// Print the resolved scenario and exit
    #[arg(long)]
    dry_run: bool,
}

#[derive(Debug, Args)]
struct ComplexityArgs {
    /// Antenna counts
    #[arg(long, value_delimiter = ',', default_value = "32,64,128")]
    m_list: Vec<u64>,
    #[arg(long, default_value_t = 30)]
    k_max: u64,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Random per-bin instances for the equivalence check
    #[arg(long, default_value_t = 1000)]
    instances: usize,
}

#[derive(Debug, Args)]
struct PrecodeArgs {
    #[command(flatten)]
    scenario: ScenarioFlags,
    /// Noise variance used by the precoder
    #[arg(long, default_value_t = 0.1)]
    sigma_w2: f64,
}

fn output_writer(path: Option<&PathBuf>) -> Result<Box<dyn Write>, Error> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn report(checks: &[CheckOutcome]) -> ExitCode {
    for c in checks {
        println!("{c}");
    }
    if checks.iter().all(|c| c.passed) {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Simulate(args) => {
            let cfg = scenario_from_map(&args.scenario.merged()?)?;
            if args.dry_run {
                print!("{}", scenario_to_kv(&cfg));
                return Ok(ExitCode::SUCCESS);
            }
            if let Some(path) = &args.channel_dump {
                let first = ChannelConfig {
                    seed: fdmud::rng::derive_seed(cfg.channel.seed, &[fdmud::rng::TAG_FRAME, 0]),
                    ..cfg.channel.clone()
                };
                write_channel_dump(&draw_channel(&first)?, BufWriter::new(File::create(path)?))?;
            }
            info!(
                "simulating {} points x {} frames",
                cfg.snr_sweep.len(),
                cfg.frames_per_point
            );
            let rep = run_monte_carlo(&cfg)?;
            if cfg.output.is_none() {
                rep.write_csv(io::stdout().lock())?;
                eprint!("{}", metadata(&cfg, &rep));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Complexity(args) => {
            let rep = complexity_sweep(&args.m_list, args.k_max)?;
            let mut w = output_writer(args.output.as_ref())?;
            rep.write_csv(&mut w)?;
            w.flush()?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify(args) => Ok(report(&verify_suite(args.seed, args.instances)?)),
        Command::PrecodeCheck(args) => {
            let cfg = scenario_from_map(&args.scenario.merged()?)?;
            Ok(report(&precode_suite(&cfg.channel, cfg.frame.l_cp, args.sigma_w2)?))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
