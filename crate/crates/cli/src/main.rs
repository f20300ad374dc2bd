use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use neckpinch::scenario::{self, Scenario, ScenarioKind};
use neckpinch::Error;

#[derive(Parser)]
#[command(name = "neckpinch", version, about = "Ricci flow neckpinch and transport pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its artifacts.
    Run(ScenarioArgs),
    /// Check the initial profile of a scenario without running it.
    Validate(ScenarioArgs),
    /// Run one scenario per value of a key, in parallel.
    Sweep {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Key to vary, e.g. `m` or `l0`.
        #[arg(long)]
        key: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
    },
}

#[derive(Args)]
struct ScenarioArgs {
    /// Flat `key = value` file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// round_sphere, dumbbell, point_pinch, interval_pinch or custom:<profile.tsv>.
    #[arg(long)]
    scenario: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    t_max: Option<f64>,
    /// linear, power:<p> or table:<path>.
    #[arg(long)]
    cost: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Any other config key, as `key=value`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl ScenarioArgs {
    fn scenario(&self) -> Result<Scenario, Error> {
        let mut s = match &self.config {
            Some(path) => Scenario::read(path)?,
            None => Scenario::new(ScenarioKind::Dumbbell),
        };
        if let Some(v) = &self.scenario {
            s.set("scenario", v)?;
        }
        let flags = [
            ("n", self.n.map(|v| v.to_string())),
            ("m", self.m.map(|v| v.to_string())),
            ("dt", self.dt.map(|v| v.to_string())),
            ("t_max", self.t_max.map(|v| v.to_string())),
            ("cost", self.cost.clone()),
            ("out", self.out.as_ref().map(|p| p.display().to_string())),
            ("seed", self.seed.map(|v| v.to_string())),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                s.set(key, &v)?;
            }
        }
        for kv in &self.overrides {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got {kv:?}")))?;
            s.set(k.trim(), v)?;
        }
        Ok(s)
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Parse(_) | Error::InvalidCost(_) | Error::Io(_) | Error::InvalidProfile(_) => 2,
        _ => 3,
    }
}

fn run(s: &Scenario) -> Result<(), Error> {
    let outcome = scenario::run(s)?;
    let summary = outcome.summary().render();
    if let Some(dir) = &s.out {
        outcome.write(dir)?;
        eprintln!("wrote {}", dir.display());
    }
    print!("{summary}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => args.scenario().and_then(|s| run(&s)),
        Command::Validate(args) => match args.scenario() {
            Ok(s) => {
                let v = scenario::validate(&s);
                print!("{}", v.render());
                return if v.ok() { ExitCode::SUCCESS } else { ExitCode::from(1) };
            }
            Err(e) => Err(e),
        },
        Command::Sweep { scenario: args, key, values } => args.scenario().and_then(|s| {
            let mut failed = None;
            for (value, r) in scenario::sweep(&s, key, values)? {
                match r {
                    Ok(doc) => {
                        let verdict = doc.get("pinch_verdict").unwrap_or("?");
                        let t = doc.get("singular_time").unwrap_or("?");
                        println!("{key}={value}\tsingular_time={t}\tverdict={verdict}");
                    }
                    Err(e) => {
                        println!("{key}={value}\terror: {e}");
                        failed.get_or_insert(e);
                    }
                }
            }
            failed.map_or(Ok(()), Err)
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
