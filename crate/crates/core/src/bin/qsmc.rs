use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use qsmc::sim::{
    compute_metrics, emit_csv, emit_metrics_csv, parse_config, run_scenario, scenario_from_config, verify, ConfigMap,
    Metrics, Scenario, SimError, PRESETS,
};

const EXIT_OTHER: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_DIVERGENCE: u8 = 3;
const EXIT_VERIFY: u8 = 4;

#[derive(Parser)]
#[command(name = "qsmc", version, about = "Quaternion sliding-mode attitude control simulator")]
struct Cli {
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Overrides {
    /// Seed for random disturbances.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Integration step in seconds.
    #[arg(long, global = true)]
    dt: Option<f64>,
    /// Simulated time in seconds.
    #[arg(long, global = true)]
    duration: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its log and metrics CSV.
    Simulate {
        #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
        config: Option<PathBuf>,
        /// Use a built-in scenario instead of a file.
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run several scenarios in parallel; one log each plus a shared metrics CSV.
    Compare {
        #[arg(long, num_args = 1.., required = true)]
        configs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the numerical oracle suite.
    Verify {
        #[arg(long)]
        json: bool,
    },
    /// List built-in scenarios.
    Presets,
}

enum Failure {
    Config(String),
    Divergence(String),
    Other(String),
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Config(_) | SimError::Invalid(_) | SimError::Gains(_) => Failure::Config(e.to_string()),
            SimError::Divergence { .. } | SimError::Dynamics(_) | SimError::Adapt(_) | SimError::Sliding(_) => {
                Failure::Divergence(e.to_string())
            }
            SimError::Io(_) => Failure::Other(e.to_string()),
        }
    }
}

fn load(path: &Path, ov: &Overrides) -> Result<Scenario, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    let mut map = parse_config(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    if map.get("name").is_none() {
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("scenario");
        map.set("name", stem).expect("known key");
    }
    build(map, ov).map_err(|e| match e {
        Failure::Config(m) => Failure::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}

fn build(mut map: ConfigMap, ov: &Overrides) -> Result<Scenario, Failure> {
    let cfg = |e: qsmc::sim::ConfigError| Failure::Config(e.to_string());
    if let Some(seed) = ov.seed {
        map.set("sim.seed", seed.to_string()).map_err(cfg)?;
    }
    if let Some(dt) = ov.dt {
        map.set("sim.dt", dt.to_string()).map_err(cfg)?;
    }
    if let Some(d) = ov.duration {
        map.set("sim.duration", d.to_string()).map_err(cfg)?;
    }
    scenario_from_config(&map).map_err(cfg)
}

fn io(context: &Path) -> impl Fn(std::io::Error) -> Failure + '_ {
    move |e| Failure::Other(format!("{}: {e}", context.display()))
}

fn print_metrics(m: &Metrics) {
    println!(
        "{:<20} settle={:<10.4} peak|M|={:<9.4} unwind={:<7.4} switches={} layer_hit={:.4} exits={}",
        m.name, m.settling_time, m.peak_effort, m.unwinding_ratio, m.manifold_switches, m.layer_hit_time, m.layer_exits
    );
}

fn run_all(scenarios: Vec<Scenario>, out: &Path) -> Result<(), Failure> {
    let mut names: Vec<&str> = scenarios.iter().map(|s| s.name.as_str()).collect();
    names.sort_unstable();
    if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
        return Err(Failure::Config(format!("scenario name '{}' used twice", w[0])));
    }
    fs::create_dir_all(out).map_err(io(out))?;
    let logs: Vec<Result<_, SimError>> = scenarios.par_iter().map(run_scenario).collect();
    let mut metrics = Vec::with_capacity(logs.len());
    for log in logs {
        let log = log?;
        let path = out.join(format!("{}.csv", log.scenario.name));
        emit_csv(&log, &path).map_err(io(&path))?;
        let m = compute_metrics(&log);
        print_metrics(&m);
        metrics.push(m);
    }
    let path = out.join("metrics.csv");
    emit_metrics_csv(&metrics, &path).map_err(io(&path))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate { config, preset, out } => {
            let sc = match (config, preset) {
                (Some(path), _) => load(&path, &cli.overrides),
                (None, Some(name)) => {
                    let mut map = ConfigMap::default();
                    map.set("preset", name).expect("known key");
                    build(map, &cli.overrides)
                }
                (None, None) => unreachable!("clap requires one of them"),
            };
            sc.and_then(|sc| run_all(vec![sc], &out))
        }
        Command::Compare { configs, out } => configs
            .iter()
            .map(|p| load(p, &cli.overrides))
            .collect::<Result<Vec<_>, _>>()
            .and_then(|scs| run_all(scs, &out)),
        Command::Verify { json } => {
            let report = verify();
            if json {
                println!("{}", serde_json::to_string_pretty(&report).expect("serializable"));
            } else {
                for c in &report.checks {
                    let mark = if c.passed { "PASS" } else { "FAIL" };
                    println!("{mark} {:<24} {:<12.3e} {} ({} samples)", c.name, c.value, c.threshold, c.samples);
                }
            }
            if report.passed {
                Ok(())
            } else {
                return ExitCode::from(EXIT_VERIFY);
            }
        }
        Command::Presets => {
            for p in PRESETS {
                println!("{p}");
            }
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (code, msg) = match f {
                Failure::Config(m) => (EXIT_CONFIG, m),
                Failure::Divergence(m) => (EXIT_DIVERGENCE, m),
                Failure::Other(m) => (EXIT_OTHER, m),
            };
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
