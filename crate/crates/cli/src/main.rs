use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use solid_lbm::config::{self, Config, PRESETS};
use solid_lbm::oracles::{self, PulseSetup, WaveKind};
use solid_lbm::output::{read_energy_csv, DirectorySink};
use solid_lbm::scenario::{run, with_threads, Simulation};
use solid_lbm::{Error, Result};

#[derive(Parser)]
#[command(name = "solid-lbm", version, about = "Lattice Boltzmann solver for large-deformation solids")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a configuration and write probes, energies, field dumps and a manifest.
    Run {
        config: PathBuf,
        /// Output directory (overrides `run.out_dir`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads for the compute pipeline.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// List the built-in presets.
    Presets,
    /// Parse and validate a configuration, printing it with the preset expanded.
    Validate { config: PathBuf },
    /// Reference computations.
    Oracle {
        #[command(subcommand)]
        oracle: Oracle,
    },
}

#[derive(Subcommand)]
enum Oracle {
    /// Homogeneous plane-strain stretches under uniaxial traction.
    StaticTension {
        #[arg(long = "T", alias = "traction", allow_hyphen_values = true)]
        traction: f64,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long, default_value_t = 1.0)]
        mu: f64,
        /// Side length used to report the edge displacement.
        #[arg(long, default_value_t = 1.0)]
        side: f64,
    },
    /// Times a small pulse on a periodic line against d'Alembert.
    Wave {
        #[arg(long, value_enum)]
        kind: Kind,
        #[arg(long, default_value_t = 200)]
        sites: usize,
    },
    /// Energy balance of a finished run directory.
    Energy {
        #[arg(long)]
        run: PathBuf,
        /// Only audit samples up to this time.
        #[arg(long)]
        until: Option<f64>,
        /// Fail when the relative imbalance exceeds this.
        #[arg(long)]
        tolerance: Option<f64>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    P,
    S,
}

fn load(path: &Path) -> Result<Config> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    config::parse_config(&text).map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

fn cmd_run(path: &Path, out: Option<PathBuf>, threads: Option<usize>) -> Result<()> {
    let cfg = load(path)?;
    let scenario = config::build_scenario::<f64>(&cfg)?;
    let dir = out
        .or_else(|| cfg.run.out_dir.clone().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    let mut sink = DirectorySink::new(&dir, Some(cfg.resolved()))?;
    sink.start(&scenario)?;
    println!(
        "grid {}x{} ({} solid sites), dt = {:.6e}, {} steps",
        scenario.grid.dims()[0],
        scenario.grid.dims()[1],
        scenario.grid.solid_count(),
        scenario.dt(),
        scenario.steps()
    );
    let output = with_threads(threads, || -> Result<_> {
        let mut sim = Simulation::new(scenario)?;
        run(&mut sim, &mut [&mut sink])
    })??;
    println!("wrote {} steps to {}", output.probes.len(), dir.display());
    Ok(())
}

fn cmd_presets() -> Result<()> {
    for name in PRESETS {
        let c = config::preset(name)?;
        let g = c.geometry;
        let hole = g.hole_side.map(|e| format!(", hole {e}")).unwrap_or_default();
        println!(
            "{name:<16} side {}, dx {}{hole}, t_max {}, probes {}",
            g.side_length,
            g.dx,
            c.run.t_max,
            c.probes.keys().cloned().collect::<Vec<_>>().join(" ")
        );
    }
    Ok(())
}

fn oracle(o: Oracle) -> Result<()> {
    match o {
        Oracle::StaticTension {
            traction,
            lambda,
            mu,
            side,
        } => {
            let s = oracles::static_uniaxial(traction, lambda, mu)?;
            println!("lambda1 = {:.12}", s.stretch[0]);
            println!("lambda2 = {:.12}", s.stretch[1]);
            println!("u2(top edge) = {:.12}", s.displacement_at(0.5 * side));
            println!("residual = {:.3e} after {} iterations", s.residual, s.iterations);
        }
        Oracle::Wave { kind, sites } => {
            let kind = match kind {
                Kind::P => WaveKind::P,
                Kind::S => WaveKind::S,
            };
            let setup = PulseSetup::<f64> {
                sites,
                ..PulseSetup::default()
            };
            let w = oracles::wave_cross_validation(kind, &setup)?;
            println!("{}-wave speed {:.6} (expected {:.6})", kind.name(), w.measured_speed, oracles::wave_speed(kind, 1.0, 1.0, 1.0));
            println!(
                "arrival {:.6} vs {:.6}, relative error {:.3e}",
                w.measured_arrival, w.reference_arrival, w.relative_error
            );
        }
        Oracle::Energy { run, until, tolerance } => {
            let history = read_energy_csv(&run.join("energy.csv"))?;
            let a = oracles::energy_audit(&history, until);
            println!("samples {}", a.samples);
            println!("max external work {:.6e}", a.max_external_work);
            println!("max |W_ext - E_kin - E_strain| {:.6e}", a.max_imbalance);
            println!("relative imbalance {:.4}", a.relative_imbalance);
            if let Some(tol) = tolerance {
                if a.relative_imbalance > tol {
                    return Err(Error::Oracle {
                        what: format!("energy imbalance above {tol}"),
                        residual: a.relative_imbalance,
                    });
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Run { config, out, threads } => cmd_run(&config, out, threads),
        Command::Presets => cmd_presets(),
        Command::Validate { config } => load(&config).map(|c| {
            println!("{}", serde_json::to_string_pretty(&c.resolved()).expect("config serialises"));
        }),
        Command::Oracle { oracle: o } => oracle(o),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
