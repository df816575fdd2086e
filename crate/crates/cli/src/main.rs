use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use sboxlab_core::report::{
    self, checks_on, load_sbox, render_checks_text, render_entry_text, render_spectral_text, spectral_on,
    to_canonical_json, IndependenceEntry, Status,
};
use sboxlab_core::{
    compute_ddt, compute_lat, invert_sbox, run_test, serialize_sbox, BaselineFixture, ByteSubstitution, Error, Format,
    Mode, PairedStreams, SBox, StreamPair, SuiteConfig, SuiteData, TestData, TestKind,
};

/// Validate, invert, apply and measure square S-boxes.
#[derive(Parser)]
#[command(name = "sboxlab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Completeness and non-contradiction of a table.
    Check {
        #[command(flatten)]
        sbox: SboxArg,
        #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
        format: OutputFormat,
    },
    /// Write the inverse table.
    Invert {
        #[command(flatten)]
        sbox: SboxArg,
        /// Destination file; printed to stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Substitute every byte of a file.
    Apply(StreamArgs),
    /// Undo a substitution.
    Unapply(StreamArgs),
    /// Static independence tests.
    Stat(TestArgs),
    /// Dynamic independence tests.
    Dyn(TestArgs),
    /// Differential, linear and avalanche profiles.
    Spectral {
        #[command(flatten)]
        sbox: SboxArg,
        #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
        format: OutputFormat,
        /// Export the difference distribution table as CSV.
        #[arg(long)]
        ddt_csv: Option<PathBuf>,
        /// Export the linear approximation table as CSV.
        #[arg(long)]
        lat_csv: Option<PathBuf>,
    },
    /// Run every check and test and compare with the AES baseline.
    Report(TestArgs),
    /// Regenerate the AES baseline fixture.
    Baseline {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SboxArg {
    /// S-box text file.
    #[arg(long = "sbox")]
    path: PathBuf,
}

#[derive(Args)]
struct StreamArgs {
    #[command(flatten)]
    sbox: SboxArg,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TestArgs {
    #[command(flatten)]
    sbox: SboxArg,
    /// First plaintext stream (empirical mode).
    #[arg(long = "in")]
    input: Option<PathBuf>,
    /// Second plaintext stream (empirical dynamic tests).
    #[arg(long = "in2")]
    input2: Option<PathBuf>,
    /// Substituted first stream; derived from --in when absent. With
    /// `report`, the report is written here instead.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Substituted second stream; derived from --in2 when absent.
    #[arg(long)]
    out2: Option<PathBuf>,
    /// Number of known bits; repeat for several.
    #[arg(long = "r")]
    ranks: Vec<u32>,
    #[arg(long, value_enum, default_value_t = ModeArg::Exhaustive)]
    mode: ModeArg,
    /// Largest tolerated deviation [default: 1e-9 exhaustive, 0.01 empirical].
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, default_value_t = sboxlab_core::independence::DEFAULT_MIN_SUPPORT)]
    min_support: u64,
    #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
    format: OutputFormat,
}

impl TestArgs {
    fn suite_config(&self) -> Result<SuiteConfig, Failure> {
        let mode = match self.mode {
            ModeArg::Exhaustive => Mode::Exhaustive,
            ModeArg::Empirical => Mode::Empirical,
        };
        let mut cfg = SuiteConfig::new(mode);
        if !self.ranks.is_empty() {
            cfg.ranks = self.ranks.clone();
        }
        if let Some(eps) = self.epsilon {
            cfg.epsilon = eps;
        }
        cfg.min_support = self.min_support;
        cfg.test_config(0).validate().map_err(|e| Failure::input(e.to_string()))?;
        Ok(cfg)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Exhaustive,
    Empirical,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Text,
    Json,
}

impl From<OutputFormat> for Format {
    fn from(f: OutputFormat) -> Self {
        match f {
            OutputFormat::Text => Format::Text,
            OutputFormat::Json => Format::Json,
        }
    }
}

/// A message and the exit status it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Failure { code: 2, message: message.into() }
    }
}

impl From<report::LoadError> for Failure {
    fn from(e: report::LoadError) -> Self {
        Failure::input(e.to_string())
    }
}

/// Private-criteria violations are criterion failures; anything else is bad input.
fn operation_failure(context: &str, e: Error) -> Failure {
    let code = match e {
        Error::IncompleteBox | Error::EmptyCell { .. } | Error::DuplicateValue { .. } => 1,
        _ => 2,
    };
    Failure { code, message: format!("{context}: {e}") }
}

fn read_file(path: &Path) -> Result<Vec<u8>, Failure> {
    std::fs::read(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), Failure> {
    std::fs::write(path, contents).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn print(text: &str) -> Result<(), Failure> {
    let mut out = io::stdout().lock();
    out.write_all(text.as_bytes()).and_then(|_| out.flush()).map_err(|e| Failure::input(format!("stdout: {e}")))
}

fn status_code(passed: bool) -> u8 {
    if passed {
        0
    } else {
        1
    }
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Check { sbox, format } => {
            let s = load_sbox(&sbox.path)?;
            let checks = checks_on(&s);
            match format {
                OutputFormat::Text => print(&render_checks_text(&checks))?,
                OutputFormat::Json => print(&to_canonical_json(&checks))?,
            }
            Ok(status_code(checks.passed))
        }
        Command::Invert { sbox, out } => {
            let s = load_sbox(&sbox.path)?;
            let inv = invert_sbox(&s).map_err(|e| operation_failure("invert", e))?;
            let mut text = serialize_sbox(&inv).map_err(|e| operation_failure("invert", e))?;
            text.push('\n');
            match out {
                Some(path) => write_file(&path, text.as_bytes())?,
                None => print(&text)?,
            }
            Ok(0)
        }
        Command::Apply(args) => substitute(&args, false),
        Command::Unapply(args) => substitute(&args, true),
        Command::Stat(args) => independence(&args, &TestKind::STATIC),
        Command::Dyn(args) => independence(&args, &TestKind::DYNAMIC),
        Command::Spectral { sbox, format, ddt_csv, lat_csv } => {
            let s = load_sbox(&sbox.path)?;
            if let Some(path) = ddt_csv {
                let ddt = compute_ddt(&s).map_err(|e| operation_failure("ddt", e))?;
                write_file(&path, ddt.to_csv().as_bytes())?;
            }
            if let Some(path) = lat_csv {
                let lat = compute_lat(&s).map_err(|e| operation_failure("lat", e))?;
                write_file(&path, lat.to_csv().as_bytes())?;
            }
            let sp = spectral_on(&s);
            match format {
                OutputFormat::Text => print(&render_spectral_text(&sp))?,
                OutputFormat::Json => print(&to_canonical_json(&sp))?,
            }
            Ok(if sp.error.is_some() { 2 } else { status_code(sp.passed) })
        }
        Command::Report(args) => {
            let config = args.suite_config()?;
            let data = SuiteData {
                input1: args.input.as_deref().map(read_file).transpose()?,
                input2: args.input2.as_deref().map(read_file).transpose()?,
            };
            let r = report::run_full_suite(&args.sbox.path, &config, &data)?;
            let text = report::emit_report(&r, args.format.into());
            match &args.out {
                Some(path) => write_file(path, text.as_bytes())?,
                None => print(&text)?,
            }
            Ok(r.exit_code() as u8)
        }
        Command::Baseline { out } => {
            let json = BaselineFixture::generate().to_json();
            match out {
                Some(path) => write_file(&path, json.as_bytes())?,
                None => print(&json)?,
            }
            Ok(0)
        }
    }
}

fn substitute(args: &StreamArgs, inverse: bool) -> Result<u8, Failure> {
    let s = load_sbox(&args.sbox.path)?;
    let sub = if inverse { ByteSubstitution::inverse_of(&s) } else { ByteSubstitution::new(&s) };
    let sub = sub.map_err(|e| operation_failure(if inverse { "unapply" } else { "apply" }, e))?;
    let input = File::open(&args.input).map_err(|e| Failure::input(format!("{}: {e}", args.input.display())))?;
    let output = File::create(&args.out).map_err(|e| Failure::input(format!("{}: {e}", args.out.display())))?;
    sub.apply_reader(BufReader::new(input), BufWriter::new(output))
        .map_err(|e| Failure::input(format!("{}: {e}", args.out.display())))?;
    Ok(0)
}

/// Loads the substituted stream from `given`, or derives it from `input`.
fn substituted(s: &SBox, input: &[u8], given: Option<&Path>) -> Result<Vec<u8>, Failure> {
    match given {
        Some(path) => read_file(path),
        None => Ok(ByteSubstitution::new(s).map(|sub| sub.apply(input)).unwrap_or_default()),
    }
}

fn independence(args: &TestArgs, kinds: &[TestKind]) -> Result<u8, Failure> {
    let s = load_sbox(&args.sbox.path)?;
    let config = args.suite_config()?;
    let in1 = args.input.as_deref().map(read_file).transpose()?;
    let in2 = args.input2.as_deref().map(read_file).transpose()?;
    let out1 = in1.as_deref().map(|i| substituted(&s, i, args.out.as_deref())).transpose()?;
    let out2 = in2.as_deref().map(|i| substituted(&s, i, args.out2.as_deref())).transpose()?;

    let mut entries = Vec::new();
    for &r in &config.ranks {
        let cfg = config.test_config(r);
        for &kind in kinds {
            let data = match (kind.is_dynamic(), &in1, &in2, &out1, &out2) {
                (false, Some(i), _, Some(o), _) => {
                    Some(StreamPair::new(i, o).map(TestData::Static).map_err(|e| operation_failure("streams", e))?)
                }
                (true, Some(i1), Some(i2), Some(o1), Some(o2)) => Some(
                    PairedStreams::new(i1, i2, o1, o2)
                        .map(TestData::Dynamic)
                        .map_err(|e| operation_failure("streams", e))?,
                ),
                _ => None,
            };
            let data = if config.mode == Mode::Empirical { data } else { None };
            let outcome = run_test(kind, &s, &cfg, data);
            entries.push(IndependenceEntry::from_outcome(kind, config.mode, r, outcome));
        }
    }

    match args.format {
        OutputFormat::Text => {
            let text: String = entries.iter().map(render_entry_text).collect();
            print(&text)?;
        }
        OutputFormat::Json => {
            let key = if kinds[0].is_dynamic() { "dynamic" } else { "static" };
            let body = serde_json::json!({ "sbox_id": s.digest(), key: entries });
            print(&to_canonical_json(&body))?;
        }
    }
    if entries.iter().any(|e| matches!(e.status, Status::Error | Status::Skipped)) {
        Ok(2)
    } else {
        Ok(status_code(entries.iter().all(|e| e.status == Status::Passed)))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("sboxlab: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
