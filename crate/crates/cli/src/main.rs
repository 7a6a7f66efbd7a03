use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use tpw_cli::{run, JobConfig, JobError, JobReport, Suite};
use tpw_core::Scalar;

#[derive(Parser)]
#[command(name = "tpw", version, about = "Exact checks for half-derivations and transposed Poisson structures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one job from a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run a bundled suite of jobs.
    Reproduce {
        #[arg(long, value_enum)]
        suite: Suite,
        #[command(flatten)]
        overrides: Overrides,
    },
}

#[derive(Args)]
struct Overrides {
    #[arg(long)]
    radius: Option<u32>,
    #[arg(long)]
    margin: Option<u32>,
    #[arg(long)]
    delta: Option<Scalar>,
    #[arg(long)]
    seed: Option<u64>,
    /// Suppress the text summary on stderr.
    #[arg(long)]
    json_only: bool,
}

impl Overrides {
    fn apply(&self, cfg: &mut JobConfig) -> Result<(), JobError> {
        if let Some(r) = self.radius {
            cfg.window.radius = r;
        }
        if let Some(m) = self.margin {
            cfg.window.inner_margin = m;
        }
        if let Some(d) = &self.delta {
            cfg.delta = d.clone();
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        cfg.validate()
    }
}

fn emit(reports: &[JobReport], single: bool, json_only: bool) -> ExitCode {
    let json = if single {
        serde_json::to_string_pretty(&reports[0])
    } else {
        serde_json::to_string_pretty(reports)
    };
    println!("{}", json.expect("reports serialize"));
    if !json_only {
        for r in reports {
            eprint!("{}", r.summary());
        }
    }
    if reports.iter().all(|r| r.pass) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run { config, overrides } => std::fs::read_to_string(config)
            .map_err(|e| JobError::Config(format!("{}: {e}", config.display())))
            .and_then(|text| JobConfig::from_json(&text))
            .and_then(|mut cfg| {
                overrides.apply(&mut cfg)?;
                run(&cfg)
            })
            .map(|r| emit(&[r], true, overrides.json_only)),
        Command::Reproduce { suite, overrides } => {
            let mut reports = Vec::new();
            let mut res = Ok(());
            for mut cfg in tpw_cli::suite_configs(*suite) {
                if let Err(e) = overrides.apply(&mut cfg).and_then(|_| run(&cfg).map(|r| reports.push(r))) {
                    res = Err(e);
                    break;
                }
            }
            res.map(|_| emit(&reports, false, overrides.json_only))
        }
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("tpw: {e}");
            ExitCode::from(2)
        }
    }
}
