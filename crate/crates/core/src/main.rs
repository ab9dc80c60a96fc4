use clap::{Args, Parser, Subcommand, ValueEnum};
use scalarflat::report::{emit, Command, Format};
use scalarflat::runner::{report_exit_code, run};
use scalarflat::scenario::{Overrides, ScenarioConfig};
use scalarflat::{Error, Result};
use std::path::PathBuf;
use std::process::ExitCode;

/// Wolff potentials, capacity bounds and completeness evidence for
/// conformally flat scalar-flat metrics singular on a compact set.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Dyadic Wolff profiles at every designated sample.
    Wolff(RunArgs),
    /// Capacity upper bound and polarity certificate.
    Capacity(RunArgs),
    /// Divergence probes, ray search and the completeness verdict.
    Probe(RunArgs),
    /// Property suites: sandwich, scaling, covariance, u-estimate, Fubini.
    Verify(RunArgs),
    /// Everything above in one report.
    Report(RunArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Json,
    Csv,
}

#[derive(Args)]
struct RunArgs {
    /// Scenario file (TOML).
    scenario: PathBuf,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    mmax: Option<usize>,
    #[arg(long)]
    rmin: Option<f64>,
    /// Capacity grid step.
    #[arg(long)]
    grid: Option<f64>,
    #[arg(long)]
    nomega: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; JSON goes to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: OutFormat,
}

fn execute(command: Command, args: &RunArgs) -> Result<i32> {
    let mut cfg = ScenarioConfig::load(&args.scenario)?;
    cfg.apply(&Overrides {
        n: args.n,
        m_max: args.mmax,
        r_min: args.rmin,
        grid_h: args.grid,
        n_omega: args.nomega,
        seed: args.seed,
    });
    let format = match args.format {
        OutFormat::Json => Format::Json,
        OutFormat::Csv => Format::Csv,
    };
    if matches!(format, Format::Csv) && args.out.is_none() {
        return Err(Error::ConfigInvalid("--format csv needs --out".into()));
    }
    let scenario = cfg.build()?;
    let report = run(command, &scenario)?;
    match &args.out {
        Some(dir) => {
            for path in emit(&report, format, dir)? {
                eprintln!("wrote {}", path.display());
            }
        }
        None => println!("{}", report.to_json()),
    }
    if let Some(v) = report.verdict {
        eprintln!("verdict: {v:?}");
    }
    if let Some(c) = &report.certificate {
        eprintln!("certificate: {}", if c.granted { "GRANTED" } else { "DENIED" });
    }
    for name in report.failed_properties() {
        eprintln!("property failed: {name}");
    }
    Ok(report_exit_code(&report))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match &cli.command {
        Sub::Wolff(a) => (Command::Wolff, a),
        Sub::Capacity(a) => (Command::Capacity, a),
        Sub::Probe(a) => (Command::Probe, a),
        Sub::Verify(a) => (Command::Verify, a),
        Sub::Report(a) => (Command::Report, a),
    };
    let code = match execute(command, args) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
