use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use szabo_forge::commands::{cmd_check, cmd_extend, cmd_ricci, cmd_verify, cmd_wong, Theorem};
use szabo_forge::report::Report;
use szabo_forge::spec::{DomainOverrides, ManifoldSpec};
use szabo_forge::{Error, Result};

#[derive(Parser)]
#[command(
    name = "szabo-forge",
    version,
    about = "Szabó operators of affine surfaces and their Riemannian extensions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// manifold spec (JSON)
    #[arg(long)]
    spec: PathBuf,
    #[command(flatten)]
    domain: DomainArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(clap::Args)]
struct DomainArgs {
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// base box "lo,hi" applied to every coordinate
    #[arg(long = "box", value_parser = parse_box)]
    base_box: Option<[f64; 2]>,
}

#[derive(clap::Args)]
struct OutputArgs {
    /// machine-readable JSON report
    #[arg(long)]
    json: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// affine Szabó, cyclic-parallel and Ricci-symmetry verdicts
    Check(Common),
    /// Ricci tensor at a point
    Ricci {
        #[command(flatten)]
        common: Common,
        /// "a,b" (comma-separated coordinates)
        #[arg(long, value_parser = parse_point)]
        point: Point,
    },
    /// deformed Riemannian extension suite
    Extend(Common),
    /// one theorem suite
    Verify {
        #[command(flatten)]
        common: Common,
        /// surface-szabo | cyclic-parallel | extension | recurrence
        #[arg(long)]
        theorem: Theorem,
    },
    /// write a spec for the Wong connection of a potential φ(u1, u2)
    Wong {
        phi: String,
        #[command(flatten)]
        domain: DomainArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_floats(s: &str) -> std::result::Result<Vec<f64>, String> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}")))
        .collect()
}

#[derive(Clone, Debug)]
struct Point(Vec<f64>);

fn parse_point(s: &str) -> std::result::Result<Point, String> {
    parse_floats(s).map(Point)
}

fn parse_box(s: &str) -> std::result::Result<[f64; 2], String> {
    match parse_floats(s)?.as_slice() {
        [lo, hi] if lo < hi => Ok([*lo, *hi]),
        _ => Err("expected \"lo,hi\" with lo < hi".into()),
    }
}

impl DomainArgs {
    fn overrides(&self) -> DomainOverrides {
        DomainOverrides {
            base_box: self.base_box,
            samples: self.samples,
            seed: self.seed,
            tol: self.tol,
        }
    }
}

fn emit(text: &str, out: Option<&PathBuf>) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn run_report(
    common: &Common,
    f: impl FnOnce(&ManifoldSpec, &DomainOverrides) -> Result<Report>,
) -> Result<()> {
    let spec = ManifoldSpec::load(&common.spec)?;
    let report = f(&spec, &common.domain.overrides())?;
    let text = if common.output.json {
        report.to_json()
    } else {
        report.to_text()
    };
    emit(&text, common.output.out.as_ref())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Check(c) => run_report(&c, cmd_check),
        Command::Extend(c) => run_report(&c, cmd_extend),
        Command::Ricci { common, point } => run_report(&common, |s, o| cmd_ricci(s, &point.0, o)),
        Command::Verify { common, theorem } => {
            run_report(&common, |s, o| cmd_verify(s, theorem, o))
        }
        Command::Wong { phi, domain, out } => {
            let mut text = cmd_wong(&phi, &domain.overrides())?.to_pretty_json();
            text.push('\n');
            emit(&text, out.as_ref())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(Error::exit_code(&e) as u8)
        }
    }
}
