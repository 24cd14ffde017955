//! `thinwall` — scenario-driven front end for the thin-layer
//! quantization toolkit.
//!
//! Every subcommand takes a scenario (TOML file, a previous run's
//! `manifest.json`, or a built-in preset name `ac1` .. `ac8`), runs one
//! pipeline and writes its artifacts plus a manifest into `--out`.
//!
//! Exit codes: 0 success, 2 configuration or I/O problem, 3 eigensolver
//! did not converge (partial results are still written), 4 numerical
//! failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use thinwall::scenario::{self, RunArtifacts, Scenario};

#[derive(Parser)]
#[command(
    name = "thinwall",
    version,
    about = "Quantum mechanics on thin curved layers: geometry tables, spectra and reduction diagnostics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario TOML, a manifest.json from a previous run, or a preset
    /// name (ac1 .. ac8).
    #[arg(long, value_name = "PATH|NAME")]
    config: String,
    /// Directory for artifacts and the run manifest.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads (0 keeps the library default).
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Override the scenario's solver seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Curvature tables and the geometric potential.
    Geometry(Common),
    /// Assemble and diagonalize the configured operator.
    Spectrum(Common),
    /// Naive vs variational reduction, side by side.
    Compare(Common),
    /// Schmidt spectra of the lowest slab eigenstates.
    Separability(Common),
    /// Surface form of the ambient divergence, at h and h/2.
    GaugeCheck(Common),
    /// Transverse reduction identity defect, at h3 and h3/2.
    XiCheck(Common),
}

fn load(common: &Common) -> thinwall::Result<Scenario> {
    let path = Path::new(&common.config);
    let mut sc = if path.exists() {
        scenario::load_config(path)?
    } else {
        scenario::preset(&common.config)?
    };
    if let Some(seed) = common.seed {
        sc.solver.seed = seed;
    }
    Ok(sc)
}

fn fail(err: &thinwall::Error) -> ExitCode {
    eprintln!("thinwall: {err}");
    ExitCode::from(err.exit_code() as u8)
}

fn run(
    common: &Common,
    pipeline: fn(&Scenario, &Path) -> thinwall::Result<RunArtifacts>,
) -> ExitCode {
    if common.threads > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(common.threads)
            .build_global();
        if let Err(e) = pool {
            eprintln!("thinwall: thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    let sc = match load(common) {
        Ok(sc) => sc,
        Err(e) => return fail(&e),
    };
    match pipeline(&sc, &common.out) {
        Ok(artifacts) => {
            for file in &artifacts.files {
                println!("wrote {}", file.display());
            }
            println!("wrote {}", artifacts.manifest.display());
            if artifacts.all_converged {
                ExitCode::SUCCESS
            } else {
                eprintln!(
                    "thinwall: not every requested eigenpair converged; partial results written"
                );
                ExitCode::from(3)
            }
        }
        Err(e) => fail(&e),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match &cli.command {
        Command::Geometry(c) => run(c, scenario::run_geometry),
        Command::Spectrum(c) => run(c, scenario::run_spectrum),
        Command::Compare(c) => run(c, scenario::run_compare),
        Command::Separability(c) => run(c, scenario::run_separability),
        Command::GaugeCheck(c) => run(c, scenario::run_gauge_check),
        Command::XiCheck(c) => run(c, scenario::run_xi_check),
    }
}
