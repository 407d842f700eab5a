use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use vessel_cli::commands::{check_text, list_text};
use vessel_cli::{cmd_compare, cmd_run, cmd_sweep, CliError, RawConfig, SweepParam};

#[derive(Parser)]
#[command(
    name = "vessel",
    version,
    about = "1D viscoelastic capillary growth simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and write snapshots.csv and report.txt.
    Run(Source),
    /// Run one simulation per parameter value and write sweep.csv.
    Sweep {
        #[command(flatten)]
        source: Source,
        /// `name=v1,v2,...`; a `{name}` placeholder or a scalar (mu, t_end, n, dt).
        /// Repeated flags are paired element by element.
        #[arg(long = "set", value_name = "NAME=VALUES", required = true)]
        set: Vec<String>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Run two configurations (config paths or catalog names) and compare them.
    Compare {
        first: String,
        second: String,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Print the scenario catalog.
    List,
    /// Report compatibility and existence hypotheses without running.
    Check(Source),
}

#[derive(Args)]
struct Source {
    #[arg(long, value_name = "PATH", conflicts_with = "scenario")]
    config: Option<PathBuf>,
    #[arg(long, value_name = "NAME")]
    scenario: Option<String>,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args)]
struct Overrides {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long = "t-end")]
    t_end: Option<f64>,
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

impl Overrides {
    fn apply(&self, raw: &mut RawConfig) {
        if let Some(n) = self.n {
            raw.numerics.n = Some(n);
        }
        if let Some(dt) = self.dt {
            raw.numerics.dt = Some(dt);
        }
        if let Some(t) = self.t_end {
            raw.scenario.t_end = Some(t);
        }
        if let Some(dir) = &self.out {
            raw.output.dir = Some(dir.clone());
        }
    }
}

impl Source {
    fn load(&self) -> Result<RawConfig, CliError> {
        let mut raw = match (&self.config, &self.scenario) {
            (Some(path), _) => RawConfig::load(path)?,
            (None, Some(name)) => RawConfig::catalog(name),
            (None, None) => {
                return Err(CliError::Usage(
                    "give --config PATH or --scenario NAME".into(),
                ))
            }
        };
        self.overrides.apply(&mut raw);
        Ok(raw)
    }
}

fn load_named(source: &str, overrides: &Overrides) -> Result<RawConfig, CliError> {
    let path = Path::new(source);
    let mut raw = if path.is_file() {
        RawConfig::load(path)?
    } else {
        RawConfig::catalog(source)
    };
    overrides.apply(&mut raw);
    Ok(raw)
}

fn execute(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Run(source) => {
            let config = source.load()?.resolve()?;
            let outcome = cmd_run(&config)?;
            let res = &outcome.result;
            println!("status: {} at t = {:?}", res.status, res.status_time);
            println!("{}", res.status_detail);
            println!("wrote {}", config.out_dir.join("snapshots.csv").display());
            println!("wrote {}", config.out_dir.join("report.txt").display());
            Ok(outcome.exit_code())
        }
        Command::Sweep {
            source,
            set,
            workers,
        } => {
            let raw = source.load()?;
            let params = set
                .iter()
                .map(|s| SweepParam::parse(s))
                .collect::<Result<Vec<_>, _>>()?;
            let workers = workers
                .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
            let out_dir = raw.output.dir.clone().unwrap_or_else(|| PathBuf::from("."));
            let rows = cmd_sweep(&raw, &params, workers, &out_dir)?;
            for r in &rows {
                println!(
                    "{}: {} at t = {:?}",
                    r.values.join(", "),
                    r.status,
                    r.status_time
                );
            }
            println!("wrote {}", out_dir.join("sweep.csv").display());
            Ok(0)
        }
        Command::Compare {
            first,
            second,
            overrides,
        } => {
            let a = load_named(&first, &overrides)?.resolve()?;
            let b = load_named(&second, &overrides)?.resolve()?;
            let cmp = cmd_compare(&a, &b)?;
            println!("{cmp}");
            if let Some(dir) = &overrides.out {
                let path = dir.join("compare.txt");
                std::fs::create_dir_all(dir)
                    .and_then(|_| std::fs::write(&path, format!("{cmp}\n")))
                    .map_err(|source| CliError::Io { path, source })?;
            }
            Ok(0)
        }
        Command::List => {
            print!("{}", list_text());
            Ok(0)
        }
        Command::Check(source) => {
            let config = source.load()?.resolve()?;
            print!("{}", check_text(&config).0);
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(1)
        }
    }
}
