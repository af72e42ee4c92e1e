use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fso_cap::config::default_tolerance;
use fso_cap::output::emit;
use fso_cap::run::build_models;
use fso_cap::{run_scenario, table1_report, CliError, Format, Overrides, Scenario};
use fsocap_core::{McConfig, Method};

#[derive(Parser)]
#[command(name = "fso-cap", version, about = "Ergodic capacity sweeps for MIMO FSO links over gamma-gamma turbulence")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,

    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// csv or json.
    #[arg(long, global = true, default_value = "csv")]
    format: Format,

    /// Absolute error target for quadrature and contour evaluation.
    #[arg(long, global = true)]
    tolerance: Option<f64>,

    /// Monte-Carlo seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Monte-Carlo sample count.
    #[arg(long, global = true)]
    samples: Option<u64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the sweep described by a scenario file.
    Run { config: PathBuf },
    /// Closed form against simulation on the published error-comparison grid.
    Table1,
    /// Print the α-μ fit or mixture weight table of a scenario as JSON.
    Fit {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run only the Monte-Carlo estimator over a scenario's sweep.
    Mc { config: PathBuf },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("fso-cap: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(cli: &Cli) -> Result<i32, CliError> {
    let ov = Overrides {
        tolerance: cli.tolerance,
        seed: cli.seed,
        samples: cli.samples,
    };
    let out = cli.out.as_deref();
    match &cli.cmd {
        Cmd::Run { config } => {
            let sc = Scenario::load(config, &ov)?;
            let report = run_scenario(&sc, "run")?;
            emit(&report.table().render(cli.format), out)?;
            Ok(report.exit_code())
        }
        Cmd::Mc { config } => {
            let mut sc = Scenario::load(config, &ov)?;
            sc.methods = vec![Method::MonteCarlo];
            sc.mc_config().validate()?;
            let report = run_scenario(&sc, "mc")?;
            emit(&report.table().render(cli.format), out)?;
            Ok(report.exit_code())
        }
        Cmd::Table1 => {
            let d = McConfig::default();
            let cfg = McConfig {
                samples: cli.samples.unwrap_or(d.samples),
                seed: cli.seed.unwrap_or(d.seed),
                batch: d.batch,
            };
            let report = table1_report(&cfg, cli.tolerance.unwrap_or_else(default_tolerance))?;
            emit(&report.table().render(cli.format), out)?;
            if report.all_pass() {
                Ok(0)
            } else {
                log::error!("at least one cell is outside the accepted band or does not beat the published prior error");
                Ok(4)
            }
        }
        Cmd::Fit { config } => {
            let sc = Scenario::load(config, &ov)?;
            let (inputs, index, models) = build_models(&sc);
            let values = sc.file.sweep.values();
            let mut described = Vec::new();
            let mut failed = false;
            for (k, m) in models.iter().enumerate() {
                let first = index.iter().position(|&i| i == k).unwrap();
                let value = (models.len() > 1).then_some(values[first]);
                match m {
                    Ok(m) => described.push(serde_json::to_value(m.describe(value, true)).unwrap()),
                    Err(e) => {
                        failed = true;
                        described.push(serde_json::json!({ "sweep_value": value, "error": e }));
                    }
                }
            }
            let doc = serde_json::json!({
                "tool": env!("CARGO_PKG_NAME"),
                "version": env!("CARGO_PKG_VERSION"),
                "config_sha256": sc.digest,
                "mode": sc.file.system.mode,
                "links": inputs[0].omega.len(),
                "models": described,
            });
            let mut text = serde_json::to_string_pretty(&doc).unwrap();
            text.push('\n');
            emit(&text, out)?;
            Ok(if failed { 3 } else { 0 })
        }
    }
}
