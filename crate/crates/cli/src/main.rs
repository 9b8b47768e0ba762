use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use qguide::dynamics::OutcomeLabel;
use qguide_cli::commands::{self, AncillaChoice, Grid, Params, SpectrumKind};
use qguide_cli::Table;

/// Feedback-free guidance of two qubits by a photon-subtracted two-mode
/// ancilla. Every subcommand prints a data table.
#[derive(Parser, Debug)]
#[command(name = "qguide", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Eigenvalues of the projected operator or of the one-step state
    Spectrum {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, value_enum, default_value_t = Kind::Operator)]
        kind: Kind,
    },
    /// Post-selected coincidences, steps 1..=n
    #[command(alias = "sweep")]
    Evolve {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, default_value_t = 9)]
        n: usize,
    },
    /// Iterated and closed-form asymptotic state
    FixedPoint {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// A prescribed outcome string: P both click, N neither, A/B only that mode
    Sequence {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        grid: GridArgs,
        /// Outcomes in time order, e.g. PNP
        #[arg(long)]
        sequence: String,
    },
    /// Idealized iteration with the ancilla-projected operator
    Ideal {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, default_value_t = 5)]
        n: usize,
    },
    /// Photon-number distribution of one ancilla mode
    Ancilla {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = AncillaArg::Pss)]
        state: AncillaArg,
    },
}

#[derive(Args, Debug)]
struct Common {
    /// Squeezing parameter
    #[arg(long, default_value_t = 0.3, allow_negative_numbers = true)]
    s: f64,
    /// Detector efficiency
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    eta: f64,
    /// Probability mass allowed beyond the Fock cutoff
    #[arg(long, default_value_t = qguide::DEFAULT_TAIL_TOL, allow_negative_numbers = true)]
    tail_tol: f64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Write here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GridArgs {
    /// Single interaction time
    #[arg(long, conflicts_with = "dtau_range", allow_negative_numbers = true)]
    dtau: Option<f64>,
    /// Evenly spaced interaction times, endpoints included
    #[arg(long, value_name = "MIN:MAX:POINTS", allow_hyphen_values = true)]
    dtau_range: Option<Grid>,
}

impl GridArgs {
    fn resolve(self, default: Grid) -> Grid {
        match (self.dtau, self.dtau_range) {
            (Some(d), _) => Grid::Single(d),
            (None, Some(g)) => g,
            (None, None) => default,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Format {
    Csv,
    Json,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Kind {
    Operator,
    Density,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum AncillaArg {
    Pss,
    Tmsv,
}

const WORKING_POINT: Grid = Grid::Single(4.5);
const FIGURE_RANGE: Grid = Grid::Range {
    min: 0.0,
    max: 7.0,
    points: 701,
};

impl Common {
    fn params(&self) -> Params {
        Params {
            s: self.s,
            eta: self.eta,
            tail_tol: self.tail_tol,
        }
    }
}

fn emit(table: &Table, common: &Common) -> Result<()> {
    let sink: Box<dyn Write> = match &common.out {
        Some(path) => {
            Box::new(File::create(path).with_context(|| format!("creating {}", path.display()))?)
        }
        None => Box::new(io::stdout().lock()),
    };
    let mut w = BufWriter::new(sink);
    match common.format {
        Format::Csv => table.write_csv(&mut w)?,
        Format::Json => w.write_all(table.to_json()?.as_bytes())?,
    }
    w.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

// A closed stdout (`qguide spectrum | head`) is not an error worth reporting.
fn broken_pipe(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        let io = c.downcast_ref::<std::io::Error>().or_else(|| {
            c.downcast_ref::<csv::Error>().and_then(|e| match e.kind() {
                csv::ErrorKind::Io(io) => Some(io),
                _ => None,
            })
        });
        io.is_some_and(|io| io.kind() == std::io::ErrorKind::BrokenPipe)
    })
}

fn run(cli: Cli) -> Result<()> {
    let (table, common) = match cli.command {
        Command::Spectrum { common, grid, kind } => {
            let kind = match kind {
                Kind::Operator => SpectrumKind::Operator,
                Kind::Density => SpectrumKind::Density,
            };
            (
                commands::spectrum(kind, &common.params(), &grid.resolve(FIGURE_RANGE))?,
                common,
            )
        }
        Command::Evolve { common, grid, n } => (
            commands::evolve(&common.params(), &grid.resolve(WORKING_POINT), n)?,
            common,
        ),
        Command::FixedPoint { common, grid } => (
            commands::fixed_point(&common.params(), &grid.resolve(WORKING_POINT))?,
            common,
        ),
        Command::Sequence {
            common,
            grid,
            sequence,
        } => {
            let outcomes = OutcomeLabel::parse_sequence(&sequence)?;
            (
                commands::sequence(&common.params(), &grid.resolve(WORKING_POINT), &outcomes)?,
                common,
            )
        }
        Command::Ideal { common, grid, n } => (
            commands::ideal(&common.params(), &grid.resolve(WORKING_POINT), n)?,
            common,
        ),
        Command::Ancilla { common, state } => {
            let kind = match state {
                AncillaArg::Pss => AncillaChoice::PhotonSubtracted,
                AncillaArg::Tmsv => AncillaChoice::SqueezedVacuum,
            };
            (commands::ancilla(&common.params(), kind)?, common)
        }
    };
    emit(&table, &common)
}
