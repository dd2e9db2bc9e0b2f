use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use uavmec::agent::{checkpoint, PolicyKind};
use uavmec::harness::{
    self, checkpoint_path, load_config, load_policy, run_eval, run_sweep, train_policy, write_csv, SweepSpec,
    DEFAULT_I_MAX_GRID,
};

#[derive(Parser)]
#[command(name = "uavmec", version, about = "UAV-assisted edge computing simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Key = value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Repeatable key=value override, applied after the file.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Train the DQN and write a checkpoint.
    Train {
        #[command(flatten)]
        common: Common,
    },
    /// Evaluate one policy and print a CSV row.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "dqn")]
        policy: PolicyKind,
        /// Checkpoint for the DQN (default: <out>/dqn_<i_max>_<seed>.ckpt).
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Episodes to average over (default from config).
        #[arg(long)]
        realizations: Option<usize>,
        /// Also dump the first episode's per-interval trajectory here.
        #[arg(long)]
        trajectory: Option<PathBuf>,
    },
    /// Evaluate policies over an arrival-rate grid and seeds.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Comma-separated policies (default: all).
        #[arg(long, value_delimiter = ',')]
        policy: Vec<PolicyKind>,
        /// Comma-separated arrival bounds in bits.
        #[arg(long, value_delimiter = ',')]
        i_max: Vec<f64>,
        /// Number of seeds, starting at --seed.
        #[arg(long, default_value_t = 5)]
        seeds: u64,
        #[arg(long)]
        realizations: Option<usize>,
        /// Train one network and evaluate it at every point.
        #[arg(long)]
        shared_model: bool,
        /// Reuse checkpoints found in the output directory.
        #[arg(long)]
        reuse: bool,
    },
    /// Run the built-in consistency checks.
    Selftest,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Train { common } => {
            let cfg = load_config(common.config.as_deref(), &common.overrides)?;
            let net = train_policy(&cfg, common.seed)?;
            let path = checkpoint_path(&common.out, cfg.i_max, common.seed);
            checkpoint::save(&net, &path)?;
            println!("{}", path.display());
        }
        Command::Eval { common, policy, checkpoint, realizations, trajectory } => {
            let cfg = load_config(common.config.as_deref(), &common.overrides)?;
            let ckpt = checkpoint.unwrap_or_else(|| checkpoint_path(&common.out, cfg.i_max, common.seed));
            let pol = load_policy(policy, &cfg, Some(&ckpt))?;
            let n = realizations.unwrap_or(cfg.eval_realizations);
            let row = run_eval(&pol, &cfg, common.seed, n)?;
            print!("{}", harness::emit_csv(std::slice::from_ref(&row)));
            if let Some(path) = trajectory {
                let records = harness::episode_records(&pol, &cfg, common.seed)?;
                let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
                harness::write_trajectory(&mut BufWriter::new(file), &records)?;
            }
        }
        Command::Sweep { common, policy, i_max, seeds, realizations, shared_model, reuse } => {
            let cfg = load_config(common.config.as_deref(), &common.overrides)?;
            if seeds == 0 {
                bail!("--seeds must be at least 1");
            }
            let mut spec = SweepSpec::new(
                if i_max.is_empty() { DEFAULT_I_MAX_GRID.to_vec() } else { i_max },
                (common.seed..common.seed + seeds).collect(),
                if policy.is_empty() { PolicyKind::ALL.to_vec() } else { policy },
                realizations.unwrap_or(cfg.eval_realizations),
            );
            spec.shared_model = shared_model;
            spec.reuse_checkpoints = reuse;
            spec.verbose = true;
            let rows = run_sweep(&spec, &cfg, Some(&common.out))?;
            let path = common.out.join("sweep.csv");
            write_csv(&rows, &path)?;
            print!("{}", harness::emit_csv(&rows));
            eprintln!("wrote {}", path.display());
        }
        Command::Selftest => {
            let mut failed = 0;
            for c in harness::selftest::run_all() {
                println!("{} {} {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
                failed += usize::from(!c.passed);
            }
            return Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE });
        }
    }
    Ok(ExitCode::SUCCESS)
}
