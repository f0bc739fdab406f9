use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use structacv::commands::{cmd_bench, cmd_cv, cmd_fit, cmd_sweep};
use structacv::config::RunConfig;

#[derive(Parser)]
#[command(version, about = "Approximate cross-validation for HMMs, hidden MRFs and CRFs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit on all data and write parameters and the optimizer trajectory.
    Fit(Args),
    /// Exact, IJ and NS cross-validation with comparison tables.
    Cv(Args),
    /// IJ along the optimizer trajectory against a stored exact report.
    Sweep(Args),
    /// Time each method at several data sizes.
    Bench(Args),
}

#[derive(clap::Args)]
struct Args {
    #[arg(long)]
    config: PathBuf,
    /// Worker threads; defaults to the number of cores.
    #[arg(long)]
    threads: Option<usize>,
    /// Overrides the generator and fold seeds.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (run, args): (fn(&RunConfig, &std::path::Path) -> structacv::Result<String>, Args) = match cli.command {
        Command::Fit(a) => (cmd_fit, a),
        Command::Cv(a) => (cmd_cv, a),
        Command::Sweep(a) => (cmd_sweep, a),
        Command::Bench(a) => (cmd_bench, a),
    };
    if let Some(n) = args.threads {
        if n == 0 || rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err() {
            eprintln!("error: invalid thread count {n}");
            return ExitCode::from(2);
        }
    }
    let result = RunConfig::load(&args.config).and_then(|mut cfg| {
        if let Some(s) = args.seed {
            cfg.override_seed(s);
        }
        let out = args.out.clone().unwrap_or_else(|| cfg.output.dir.clone());
        run(&cfg, &out)
    });
    match result {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 3 } else { 2 })
        }
    }
}
