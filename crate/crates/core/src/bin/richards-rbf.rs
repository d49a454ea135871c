use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use richards_rbf::config::{parse_config, ScenarioConfig};
use richards_rbf::driver::{
    build_nodes, compare_runs, first_system, run_oracle, run_scenario, write_comparison, write_oracle, write_run,
};
use richards_rbf::output::{write_text, PLOT_SCRIPT};
use richards_rbf::timestepper::StepRecord;
use richards_rbf::Error;

/// Meshless Richards-equation infiltration solver.
#[derive(Parser)]
#[command(name = "richards-rbf", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a scenario with the meshless solver.
    Run(Common),
    /// Solve the vertical column with the finite-difference reference.
    Oracle(Common),
    /// Run both solvers and write summary.csv with rmse and rel_l1 per output time.
    Compare(Common),
    /// Write the first collocation system as `row col value` triplets.
    DumpMatrix(Common),
}

#[derive(Args)]
struct Common {
    /// Scenario file (`key = value` lines).
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Suppress per-step progress on stderr.
    #[arg(long)]
    quiet: bool,
    /// Also write plot.py next to the CSV files.
    #[arg(long)]
    plot_script: bool,
}

fn load(path: &Path) -> Result<ScenarioConfig, Error> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text)
}

fn progress(quiet: bool) -> impl FnMut(&StepRecord) {
    move |rec: &StepRecord| {
        if !quiet {
            let mut err = std::io::stderr().lock();
            let _ = writeln!(
                err,
                "step {} t={} picard={} cutbacks={} residual={:.3e}",
                rec.step,
                rec.t_end,
                rec.total_iterations(),
                rec.cutbacks,
                rec.max_residual()
            );
        }
    }
}

fn run_solver(dir: &Path, cfg: &ScenarioConfig, quiet: bool) -> Result<richards_rbf::driver::RunOutput, Error> {
    match run_scenario(cfg, &mut progress(quiet)) {
        Ok(out) => {
            write_run(dir, cfg, &out.nodes, &out.trajectory)?;
            Ok(out)
        }
        Err(aborted) => {
            // keep whatever was computed for inspection
            if let Ok(nodes) = build_nodes(cfg) {
                let _ = write_run(dir, cfg, &nodes, &aborted.partial);
            }
            Err(aborted.source)
        }
    }
}

fn execute(cmd: Command) -> Result<(), Error> {
    let (Command::Run(common) | Command::Oracle(common) | Command::Compare(common) | Command::DumpMatrix(common)) =
        &cmd;
    let cfg = load(&common.config)?;
    let dir = &common.out;
    match cmd {
        Command::Run(_) => {
            run_solver(dir, &cfg, common.quiet)?;
        }
        Command::Oracle(_) => {
            let (nodes, sol) = run_oracle(&cfg)?;
            write_oracle(dir, &cfg, &nodes, &sol)?;
        }
        Command::Compare(_) => {
            let out = run_solver(&dir.join("meshless"), &cfg, common.quiet)?;
            let (nodes, sol) = run_oracle(&cfg)?;
            write_oracle(&dir.join("oracle"), &cfg, &nodes, &sol)?;
            let rows = compare_runs(&out, &sol)?;
            write_comparison(dir, &rows)?;
            if !common.quiet {
                for (t, r) in &rows {
                    eprintln!("t={t} rmse={:.4e} rel_l1={:.4e}", r.rmse, r.rel_l1);
                }
            }
        }
        Command::DumpMatrix(_) => {
            let sys = first_system(&cfg)?;
            let path = dir.join("matrix.coo");
            let mut buf = Vec::new();
            sys.write_coo(&mut buf).map_err(|source| Error::Io {
                path: path.clone(),
                source,
            })?;
            write_text(&path, &String::from_utf8_lossy(&buf))?;
        }
    }
    if common.plot_script {
        write_text(&dir.join("plot.py"), PLOT_SCRIPT)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Ok(n) = std::env::var("RICHARDS_RBF_THREADS") {
        match n.trim().parse::<usize>() {
            Ok(threads) => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
            }
            Err(_) => {
                eprintln!("error: RICHARDS_RBF_THREADS must be a non-negative integer, got `{n}`");
                return ExitCode::from(2);
            }
        }
    }
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
