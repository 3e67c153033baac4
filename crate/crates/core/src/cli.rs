//! Command-line front end: `analyze`, `compare` and `lattice`.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::chain::{run_chain, ChainOptions, ChainReport, Termination, TruncateMode};
use crate::expr::Rational;
use crate::lattice::{build_schwinger, describe_sites, FieldSet, LatticeSpec, Scheme, SiteForm};
use crate::model::{load_model, save_model, FirstOrderModel};
use crate::oracle::{compare_spans, consistency_algorithm};
use crate::report::{text_report, tree_report_string, Comparison, ReportInput};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_EXHAUSTED: i32 = 2;
pub const EXIT_MAX_LEVEL: i32 = 3;
pub const EXIT_UNEQUAL: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "symchain", version, about = "Symplectic constraint-chain analyzer")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the symplectic chain on a model file.
    Analyze {
        model: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Run the chain and the Dirac-Bergmann algorithm and compare the spans.
    Compare {
        model: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Build a lattice model.
    Lattice {
        builder: Builder,
        #[command(flatten)]
        lattice: LatticeArgs,
        /// Write the model here instead of to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Compare chain and oracle on the built model.
        #[arg(long)]
        analyze: bool,
        #[command(flatten)]
        run: RunArgs,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Builder {
    Schwinger,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Tree,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TruncateArg {
    /// Keep only the first multiplier block.
    #[value(name = "paper")]
    FirstBlock,
    Iterative,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SchemeArg {
    Central,
    Forward,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long, default_value_t = 12, value_parser = clap::value_parser!(u32).range(1..))]
    max_level: u32,
    /// Never consult truncated matrices.
    #[arg(long)]
    no_truncation: bool,
    #[arg(long, value_enum, default_value = "paper")]
    truncate: TruncateArg,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    /// Seed for generic evaluation points.
    #[arg(long, default_value_t = 0x5eed)]
    seed: u64,
}

impl RunArgs {
    fn options(&self) -> ChainOptions {
        ChainOptions {
            max_level: self.max_level as usize,
            allow_truncation: !self.no_truncation,
            truncate: match self.truncate {
                TruncateArg::FirstBlock => TruncateMode::FirstBlock,
                TruncateArg::Iterative => TruncateMode::Iterative,
            },
            seed: self.seed,
        }
    }
}

#[derive(Debug, Args)]
struct LatticeArgs {
    #[arg(long, default_value_t = 3)]
    sites: usize,
    /// Positive rational, e.g. `1` or `1/2`.
    #[arg(long, default_value = "1", value_parser = parse_rational)]
    spacing: Rational,
    #[arg(long, value_enum, default_value = "central")]
    scheme: SchemeArg,
}

fn parse_rational(s: &str) -> Result<Rational, String> {
    s.trim().parse::<Rational>().map_err(|e| format!("`{s}`: {e}"))
}

struct Io<'a> {
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
}

impl Io<'_> {
    fn fail(&mut self, msg: impl std::fmt::Display) -> i32 {
        let _ = writeln!(self.err, "error: {msg}");
        EXIT_INPUT
    }
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let shown = matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            let sink: &mut dyn Write = if shown { out } else { err };
            let _ = write!(sink, "{}", e.render());
            return if shown { EXIT_OK } else { EXIT_INPUT };
        }
    };
    let mut io = Io { out, err };
    match cli.command {
        Command::Analyze { model, run } => match load(&model) {
            Ok(m) => analyze(&m, &run, &mut io),
            Err(e) => io.fail(e),
        },
        Command::Compare { model, run } => match load(&model) {
            Ok(m) => compare(&m, &run, None, &mut io),
            Err(e) => io.fail(e),
        },
        Command::Lattice {
            builder: Builder::Schwinger,
            lattice,
            out: path,
            analyze,
            run,
        } => {
            let scheme = match lattice.scheme {
                SchemeArg::Central => Scheme::Central,
                SchemeArg::Forward => Scheme::Forward,
            };
            let spec = match LatticeSpec::new(lattice.sites, lattice.spacing, scheme) {
                Ok(s) => s,
                Err(e) => return io.fail(e),
            };
            let m = build_schwinger(&spec);
            let text = save_model(&m);
            match &path {
                Some(p) => {
                    if let Err(e) = std::fs::write(p, &text) {
                        return io.fail(format!("{}: {e}", p.display()));
                    }
                }
                None if !analyze => {
                    let _ = io.out.write_all(text.as_bytes());
                }
                None => {}
            }
            if analyze {
                let fs = FieldSet::new(&spec, m.table());
                compare(&m, &run, Some(&fs), &mut io)
            } else {
                EXIT_OK
            }
        }
    }
}

fn load(path: &PathBuf) -> Result<FirstOrderModel, String> {
    load_model(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn emit(io: &mut Io<'_>, format: Format, input: ReportInput<'_>) {
    let text = match format {
        Format::Text => text_report(input),
        Format::Tree => tree_report_string(input),
    };
    let _ = io.out.write_all(text.as_bytes());
}

fn oracle_comparison(m: &FirstOrderModel, r: &ChainReport) -> Result<Comparison, String> {
    let oracle = consistency_algorithm(m).map_err(|e| e.to_string())?;
    let found: Vec<_> = oracle.constraints.iter().map(|c| c.raw.clone()).collect();
    let verdict = compare_spans(m.table(), &r.exprs(), &found).map_err(|e| e.to_string())?;
    Ok(Comparison { oracle, verdict })
}

fn analyze(m: &FirstOrderModel, args: &RunArgs, io: &mut Io<'_>) -> i32 {
    let r = match run_chain(m, &args.options()) {
        Ok(r) => r,
        Err(e) => return io.fail(e),
    };
    // an exhausted chain may hide first-class constraints; cross-check it
    let comparison = match r.termination {
        Termination::Exhausted { .. } => match oracle_comparison(m, &r) {
            Ok(c) => {
                let _ = writeln!(
                    io.err,
                    "warning: chain exhausted; oracle verdict {}",
                    if c.verdict.equal { "equal" } else { "unequal" }
                );
                Some(c)
            }
            Err(e) => {
                let _ = writeln!(io.err, "warning: chain exhausted; oracle unavailable: {e}");
                None
            }
        },
        _ => None,
    };
    emit(
        io,
        args.format,
        ReportInput {
            chain: &r,
            comparison: comparison.as_ref(),
            sites: None,
        },
    );
    match r.termination {
        Termination::Nonsingular { .. } => EXIT_OK,
        Termination::Exhausted { .. } => EXIT_EXHAUSTED,
        Termination::MaxLevelReached { .. } => EXIT_MAX_LEVEL,
    }
}

fn compare(m: &FirstOrderModel, args: &RunArgs, fields: Option<&FieldSet>, io: &mut Io<'_>) -> i32 {
    let r = match run_chain(m, &args.options()) {
        Ok(r) => r,
        Err(e) => return io.fail(e),
    };
    let cmp = match oracle_comparison(m, &r) {
        Ok(c) => c,
        Err(e) => return io.fail(e),
    };
    let sites: Option<Vec<SiteForm>> =
        fields.map(|fs| r.constraints.iter().map(|c| describe_sites(&c.expr, fs)).collect());
    emit(
        io,
        args.format,
        ReportInput {
            chain: &r,
            comparison: Some(&cmp),
            sites: sites.as_deref(),
        },
    );
    if cmp.verdict.equal {
        EXIT_OK
    } else {
        EXIT_UNEQUAL
    }
}
