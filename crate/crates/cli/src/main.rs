use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use zeno_core::config::{Config, BASE_KEYS};
use zeno_core::lattice::moments;
use zeno_core::projectors::project;
use zeno_core::recipes::{run_recipe, run_sweep, RECIPES};
use zeno_core::runner::{classify_regime, config_timescales, initial_state};
use zeno_core::{invariants, Result, ZenoError};

/// Output directory; defaults to `./zeno-out`.
const OUT_ENV: &str = "ZENO_OUT";

#[derive(Parser)]
#[command(name = "zeno", version, about = "Quantum Zeno effect and its suppression by decoherence")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct ConfigArgs {
    /// Config file with `key = value` lines.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Override a key, e.g. `--set qbm.D=4000`. Repeatable.
    #[arg(long = "set", short = 's', value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl ConfigArgs {
    fn load(&self) -> Result<Config> {
        let base = match &self.config {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| ZenoError::Config(format!("cannot read config file {}: {e}", p.display())))?;
                Config::parse(&text)?
            }
            None => Config::new(),
        };
        base.with_overrides(&self.set)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run a named recipe and write CSVs plus a manifest to $ZENO_OUT/<recipe>.
    Run {
        recipe: String,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Run a recipe once per value of a key, in parallel.
    Sweep {
        recipe: String,
        /// `key=v1,v2,...`
        #[arg(long)]
        param: String,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Run the invariant suite.
    Validate,
    /// Print the timescale ledger of a configuration.
    Timescales {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// List recipes and configuration keys.
    List,
}

fn out_dir() -> PathBuf {
    std::env::var_os(OUT_ENV).map_or_else(|| PathBuf::from("zeno-out"), PathBuf::from)
}

fn print_outputs(dir: &Path, files: &[(&str, &str)]) {
    for (f, digest) in files {
        println!("{}  {}", &digest[..16], dir.join(f).display());
    }
}

fn execute(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run { recipe, cfg } => {
            let dir = out_dir().join(&recipe);
            let m = run_recipe(&recipe, &cfg.load()?, &dir)?;
            print_outputs(&dir, &m.digests());
            println!("manifest {}", dir.join("manifest.json").display());
            println!("wall time {:.2} s", m.wall_time_s);
            Ok(true)
        }
        Command::Sweep { recipe, param, cfg } => {
            let (key, values) = param
                .split_once('=')
                .ok_or_else(|| ZenoError::Config(format!("--param {param:?} is not key=v1,v2,...")))?;
            let values: Vec<String> = values.split(',').map(|v| v.trim().to_string()).filter(|v| !v.is_empty()).collect();
            let dir = out_dir().join(format!("{recipe}-sweep"));
            let runs = run_sweep(&recipe, &cfg.load()?, key.trim(), &values, &dir)?;
            for (v, m) in values.iter().zip(&runs) {
                print_outputs(&dir.join(format!("{}={v}", key.trim())), &m.digests());
            }
            println!("sweep manifest {}", dir.join("sweep.json").display());
            Ok(true)
        }
        Command::Validate => {
            let checks = invariants::invariant_suite()?;
            for c in &checks {
                println!("{c}");
            }
            let failed = checks.iter().filter(|c| !c.passed).count();
            println!("{} checks, {failed} failed", checks.len());
            Ok(failed == 0)
        }
        Command::Timescales { cfg } => {
            let exp = cfg.load()?.experiment()?;
            let rho = project(&initial_state(&exp)?, &exp.proj);
            let p2 = moments(&rho, exp.qbm.hbar)?.p2;
            let ts = config_timescales(&exp, p2);
            println!("<p^2> of the projected initial state  {p2:.6e}");
            println!("energy time hbar m/<p^2>              {:.6e}", ts.t_energy);
            println!("localization time (m hbar/D)^1/2      {:.6e}", ts.t_loc);
            println!("suppression time m hbar/(D eps)       {:.6e}", ts.tau_suppress);
            println!("classical decay time (m^2L^2/D)^1/3   {:.6e}", ts.lambda_inv);
            println!("stationary momentum (m L D)^1/3       {:.6e}", ts.p_stationary);
            println!("final energy time                     {:.6e}", ts.t_energy_final);
            println!("momentum cut-off m L/eps              {:.6e}", ts.p_cutoff);
            println!("regime at eps = {}                   {}", exp.eps, classify_regime(&ts, exp.eps));
            Ok(true)
        }
        Command::List => {
            println!("recipes:");
            for r in RECIPES {
                println!("  {:<22} {}", r.name, r.description);
                for (k, d, doc) in r.params {
                    println!("      {k} = {d}  ({doc})");
                }
                for (k, d) in r.base_defaults {
                    println!("      {k} = {d}  (recipe default)");
                }
            }
            println!("keys:");
            for (k, d, doc) in BASE_KEYS {
                println!("  {k:<16} = {d:<10} {doc}");
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(e) => {
            eprintln!("zeno: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
