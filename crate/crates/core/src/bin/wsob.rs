use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use weighted_sobolev::cli::{self, Overrides, RunConfig, EXIT_INPUT};

#[derive(Parser)]
#[command(
    name = "wsob",
    version,
    about = "Numerical checks for weighted Sobolev inequalities on model manifolds"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Args)]
struct Flags {
    /// Quadrature tolerance
    #[arg(long, global = true)]
    tol_quad: Option<f64>,
    /// ODE tolerance
    #[arg(long, global = true)]
    tol_ode: Option<f64>,
    /// Tolerance applied to verdict slacks
    #[arg(long, global = true)]
    tol_verdict: Option<f64>,
    /// Outer radius for curvature, volume and ODE checks
    #[arg(long, global = true)]
    r_max: Option<f64>,
    /// Write reports and curves here, replacing the config's output paths
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run every check listed in the config
    Run { config: PathBuf },
    /// Run the config once per value of a numeric parameter
    Sweep {
        config: PathBuf,
        /// Dotted path to the parameter, e.g. `alpha` or `domains.0.radius`
        #[arg(long)]
        param: String,
        /// Comma-separated values; may be empty
        #[arg(long, allow_hyphen_values = true)]
        values: String,
    },
    /// Print the automatic decay profile for the config's manifold
    Envelope { config: PathBuf },
}

impl Flags {
    fn overrides(&self) -> Overrides {
        Overrides {
            tol_quad: self.tol_quad,
            tol_ode: self.tol_ode,
            tol_verdict: self.tol_verdict,
            r_max: self.r_max,
            out_dir: self.out_dir.clone(),
        }
    }
}

fn load(path: &Path, o: &Overrides) -> Result<RunConfig> {
    let mut cfg = RunConfig::from_path(path)?;
    cfg.apply(o)?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let args = Cli::parse();
    match dispatch(&args) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_INPUT as u8)
        }
    }
}

fn dispatch(args: &Cli) -> Result<i32> {
    let o = args.flags.overrides();
    match &args.cmd {
        Cmd::Run { config } => {
            let cfg = load(config, &o)?;
            let out = cli::run(&cfg);
            print!("{}", cli::summary(&out));
            for p in cli::write_outputs(&cfg, &out).context("writing outputs")? {
                eprintln!("wrote {}", p.display());
            }
            if let Some(e) = &out.error {
                eprintln!("error: {e}");
            }
            Ok(out.exit_code())
        }
        Cmd::Sweep { config, param, values } => {
            let text = fs::read_to_string(config).with_context(|| format!("reading {}", config.display()))?;
            let base: serde_json::Value = serde_json::from_str(&text).context("parsing config")?;
            let values = parse_values(values)?;
            let points = cli::sweep(&base, param, &values, &o)?;
            let csv = cli::sweep_csv(param, &points);
            match &o.out_dir {
                Some(dir) => {
                    fs::create_dir_all(dir)?;
                    let path = dir.join("sweep.csv");
                    fs::write(&path, csv)?;
                    eprintln!("wrote {}", path.display());
                }
                None => print!("{}", String::from_utf8_lossy(&csv)),
            }
            Ok(cli::sweep_exit_code(&points))
        }
        Cmd::Envelope { config } => {
            let cfg = load(config, &o)?;
            let env = cli::envelope(&cfg)?;
            println!("{}", serde_json::to_string_pretty(&env)?);
            Ok(0)
        }
    }
}

fn parse_values(list: &str) -> Result<Vec<f64>> {
    list.split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(|v| {
            v.parse::<f64>()
                .with_context(|| format!("sweep value `{v}` is not a number"))
        })
        .collect()
}
