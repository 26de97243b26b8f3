use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ncx_core::harness::{
    gen_instance, run_experiment, selftest, split_instance, summarize, sweep, write_rows, Format, Instance,
    InstanceSpec, Kind, RowStatus, RunOptions, CSV_COLUMNS,
};
use ncx_core::opfunc::LacunarySet;
use ncx_core::seqnorm::{triple_norm_solve, OpSequence, SolveOptions};
use ncx_core::Error;

const EXIT_HYPOTHESIS: u8 = 2;
const EXIT_USAGE: u8 = 64;

#[derive(Parser)]
#[command(name = "ncx", version, about = "Verify Khintchine and Paley splittings numerically")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate instances of one family, split them and report the measured constants.
    #[command(after_help = csv_help())]
    Verify {
        #[arg(value_parser = parse_kind)]
        kind: Kind,
        #[command(flatten)]
        instance: InstanceArgs,
        /// Number of instances; seeds run from --seed upward.
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "json", value_parser = parse_format)]
        format: Format,
    },
    /// Splitting-norm evaluation.
    Norm {
        #[command(subcommand)]
        action: NormAction,
    },
    /// Write one generated instance as JSON.
    Gen {
        file: PathBuf,
        #[arg(long, value_parser = parse_kind)]
        kind: Kind,
        #[command(flatten)]
        instance: InstanceArgs,
    },
    /// Split an instance file written by `gen` and print the splitting as JSON.
    Split { file: PathBuf },
    /// Run the built-in invariant checks.
    Selftest,
}

#[derive(Subcommand)]
enum NormAction {
    /// Read an operator sequence from JSON and print a split certificate.
    Solve {
        file: PathBuf,
        #[arg(long, default_value_t = 1e-4)]
        tolerance: f64,
        #[arg(long, default_value_t = 20_000)]
        max_iter: usize,
    },
}

#[derive(clap::Args)]
struct InstanceArgs {
    #[arg(long, default_value_t = 2)]
    dim: usize,
    /// Rademacher terms, or the size of a generated K.
    #[arg(long, default_value_t = 3)]
    terms: usize,
    /// Explicit lacunary set, comma separated.
    #[arg(long, value_delimiter = ',')]
    kset: Option<Vec<u64>>,
    /// First element of a generated K.
    #[arg(long, default_value_t = 1)]
    k0: u64,
    #[arg(long, env = "NCX_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    resolution: Option<u32>,
    #[arg(long)]
    gridsize: Option<usize>,
    /// Largest frequency of paley1 instances.
    #[arg(long)]
    spectrum: Option<usize>,
    /// Depth of the negative spectrum of paley2 instances.
    #[arg(long, default_value_t = 4)]
    negative_depth: usize,
}

impl InstanceArgs {
    fn spec(&self, kind: Kind) -> Result<InstanceSpec, Error> {
        let kset = self.kset.clone().map(LacunarySet::new).transpose()?;
        let terms = kset.as_ref().map_or(self.terms, LacunarySet::len);
        let spec = InstanceSpec {
            kset,
            k0: self.k0,
            resolution: self.resolution,
            gridsize: self.gridsize,
            spectrum: self.spectrum,
            negative_depth: self.negative_depth,
            ..InstanceSpec::new(kind, self.dim, terms, self.seed)
        };
        spec.validate()?;
        Ok(spec)
    }
}

fn csv_help() -> String {
    format!("CSV columns, in order:\n  {}", CSV_COLUMNS.join(","))
}

fn parse_kind(s: &str) -> Result<Kind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_format(s: &str) -> Result<Format, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn output(path: Option<&PathBuf>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn exit_for(e: &Error) -> ExitCode {
    match e {
        Error::InvalidSpec(_) => ExitCode::from(EXIT_USAGE),
        e if e.is_hypothesis() => ExitCode::from(EXIT_HYPOTHESIS),
        _ => ExitCode::FAILURE,
    }
}

fn verify(kind: Kind, args: &InstanceArgs, count: usize, out: Option<&PathBuf>, format: Format) -> Result<ExitCode, Error> {
    let specs = sweep(&args.spec(kind)?, count);
    let rows = run_experiment(&specs, &RunOptions::default());
    let mut w = output(out)?;
    write_rows(&rows, format, &mut w)?;
    w.flush()?;
    for s in summarize(&rows) {
        eprintln!(
            "{}: {}/{} rows pass, max construction ratio {:.6}, max solver ratio {:.6}",
            s.kind, s.passed, s.rows, s.max_ratio_construction, s.max_ratio_solver
        );
    }
    for row in rows.iter().filter(|r| !r.passed()) {
        eprintln!("{}: {}", row.id, row.messages.join("; "));
    }
    Ok(if rows.iter().any(|r| r.status == RowStatus::Hypothesis) {
        ExitCode::from(EXIT_HYPOTHESIS)
    } else if rows.iter().all(|r| r.passed()) {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn solve(file: &PathBuf, tolerance: f64, max_iter: usize) -> Result<ExitCode, Error> {
    let c: OpSequence = serde_json::from_reader(io::BufReader::new(File::open(file)?))?;
    let opts = SolveOptions { tolerance, max_iter, ..SolveOptions::default() };
    let cert = triple_norm_solve(&c, &opts)?;
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, &cert)?;
    writeln!(out)?;
    Ok(ExitCode::SUCCESS)
}

fn generate(file: &PathBuf, kind: Kind, args: &InstanceArgs) -> Result<ExitCode, Error> {
    let inst = gen_instance(&args.spec(kind)?)?;
    let mut w = BufWriter::new(File::create(file)?);
    serde_json::to_writer_pretty(&mut w, &inst)?;
    writeln!(w)?;
    w.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn split(file: &PathBuf) -> Result<ExitCode, Error> {
    let inst: Instance = serde_json::from_reader(io::BufReader::new(File::open(file)?))?;
    let s = split_instance(&inst)?;
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, &s)?;
    writeln!(out)?;
    let mut problems = s.violations();
    problems.extend(s.structural_violations());
    for p in &problems {
        eprintln!("{p}");
    }
    Ok(if problems.is_empty() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn run_selftest() -> ExitCode {
    let checks = selftest();
    for c in &checks {
        let mark = if c.passed { "ok  " } else { "FAIL" };
        if c.detail.is_empty() {
            println!("{mark} {}", c.name);
        } else {
            println!("{mark} {} ({})", c.name, c.detail);
        }
    }
    if checks.iter().all(|c| c.passed) {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Command::Verify { kind, instance, count, out, format } => {
            verify(*kind, instance, *count, out.as_ref(), *format)
        }
        Command::Norm { action: NormAction::Solve { file, tolerance, max_iter } } => {
            solve(file, *tolerance, *max_iter)
        }
        Command::Gen { file, kind, instance } => generate(file, *kind, instance),
        Command::Split { file } => split(file),
        Command::Selftest => Ok(run_selftest()),
    };
    result.unwrap_or_else(|e| {
        eprintln!("ncx: {e}");
        exit_for(&e)
    })
}
