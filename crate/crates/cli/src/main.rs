use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ou_spectra::model::parse_model_json;
use ou_spectra::reference::TriangularParams;
use ou_spectra::report::{self, BackendChoice, Tolerances};
use ou_spectra::simulate::{stationary_ensemble, SimConfig};
use ou_spectra::spectral::{TOL_EIG, TOL_NILP, TOL_ORTH};
use ou_spectra::{Error, OUModel};

const EXIT_USAGE: u8 = 1;
const EXIT_VALIDATION: u8 = 2;
const EXIT_AMBIGUOUS: u8 = 3;

/// Spectral analysis of Ornstein-Uhlenbeck operators on polynomial spaces.
#[derive(Parser, Debug)]
#[command(name = "ou-spectra", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Stationary covariance, generalized eigenspaces and orthogonality report.
    Analyze(PipelineArgs),
    /// The set of sums of drift eigenvalues up to the degree cap.
    Spectrum {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 4)]
        degree: u32,
        #[arg(long, default_value_t = TOL_EIG)]
        tol_eig: f64,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Gram matrix of all generalized eigenvectors.
    Gram(PipelineArgs),
    /// Coordinate change to Q = I with diagonal stationary covariance.
    Normalize {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Exact-discretization sampling of the stationary law.
    Simulate {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 0.5)]
        step: f64,
        #[arg(long, default_value_t = 10_000)]
        paths: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Steps per path; defaults to the smallest m with |exp(m·step·B)| < 1e-6.
        #[arg(long)]
        burn_in: Option<usize>,
        /// Binary sample file; metadata goes to `<output>.json`.
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Reproduce the closed-form reference examples.
    Example {
        #[command(subcommand)]
        which: Example,
        #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
        format: Format,
    },
}

#[derive(Subcommand, Debug)]
enum Example {
    /// Q = I, B = [[-1, 1], [-1, -1]].
    Rotating {
        /// Largest Hermite degree for the rotation-block check.
        #[arg(long, default_value_t = 8)]
        max_n: u32,
        #[arg(long, default_value_t = 6)]
        degree: u32,
    },
    /// Q = I, B = [[-a+d, 0], [c, -a-d]] with a > d > 0, c != 0.
    Triangular {
        #[arg(long, allow_hyphen_values = true)]
        a: String,
        #[arg(long, allow_hyphen_values = true)]
        d: String,
        #[arg(long, allow_hyphen_values = true)]
        c: String,
    },
}

#[derive(Args, Debug)]
#[group(required = true, multiple = true)]
struct ModelArgs {
    /// JSON model file {"Q": [[..]], "B": [[..]]}.
    #[arg(long, conflicts_with_all = ["q", "b"])]
    model: Option<PathBuf>,
    /// Inline Q as a JSON array of rows.
    #[arg(long = "q", requires = "b")]
    q: Option<String>,
    /// Inline B as a JSON array of rows.
    #[arg(long = "b", requires = "q", allow_hyphen_values = true)]
    b: Option<String>,
}

#[derive(Args, Debug)]
struct PipelineArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 4)]
    degree: u32,
    #[arg(long, default_value_t = TOL_EIG)]
    tol_eig: f64,
    #[arg(long, default_value_t = TOL_ORTH)]
    tol_orth: f64,
    #[arg(long, default_value_t = TOL_NILP)]
    tol_nilp: f64,
    #[arg(long, value_enum, default_value_t = Backend::Auto)]
    backend: Backend,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Backend {
    Auto,
    Exact,
    Float,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Human,
    Csv,
}

enum Failure {
    Usage(String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl ModelArgs {
    fn load(&self) -> Result<OUModel, Failure> {
        let text = match (&self.model, &self.q, &self.b) {
            (Some(path), None, None) => std::fs::read_to_string(path)
                .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?,
            (None, Some(q), Some(b)) => format!("{{\"Q\": {q}, \"B\": {b}}}"),
            _ => return Err(Failure::Usage("give either --model or both --q and --b".into())),
        };
        Ok(parse_model_json(&text)?)
    }
}

impl PipelineArgs {
    fn tolerances(&self) -> Tolerances {
        Tolerances {
            tol_eig: self.tol_eig,
            tol_orth: self.tol_orth,
            tol_nilp: self.tol_nilp,
        }
    }

    fn backend(&self) -> BackendChoice {
        match self.backend {
            Backend::Auto => BackendChoice::Auto,
            Backend::Exact => BackendChoice::Exact,
            Backend::Float => BackendChoice::Float,
        }
    }
}

fn emit<T: serde::Serialize>(report: &T, format: Format) -> Result<String, Failure> {
    let value = serde_json::to_value(report).map_err(|e| Error::Io(e.to_string()))?;
    match format {
        Format::Json => Ok(serde_json::to_string_pretty(&value).map_err(|e| Error::Io(e.to_string()))? + "\n"),
        Format::Human => Ok(report::render_human(&value)),
        Format::Csv => Err(Failure::Usage(
            "csv output is only available for gram and simulate".into(),
        )),
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("OU_SPECTRA_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().map_err(|_| {
        Error::InvalidParams(format!("OU_SPECTRA_THREADS must be a nonnegative integer, got {raw:?}"))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::InvalidParams(format!("thread pool: {e}")))?;
    Ok(())
}

fn run(cli: Cli) -> Result<String, Failure> {
    configure_threads()?;
    match cli.command {
        Command::Analyze(args) => {
            let model = args.model.load()?;
            let r = report::analyze(&model, args.degree, &args.tolerances(), args.backend())?;
            emit(&r, args.format)
        }
        Command::Spectrum {
            model,
            degree,
            tol_eig,
            format,
        } => {
            if !(tol_eig > 0.0 && tol_eig.is_finite()) {
                return Err(Error::InvalidParams(format!("tol-eig must be positive, got {tol_eig}")).into());
            }
            let r = report::spectrum_report(&model.load()?, degree, tol_eig)?;
            emit(&r, format)
        }
        Command::Gram(args) => {
            let model = args.model.load()?;
            let r = report::gram_report(&model, args.degree, &args.tolerances(), args.backend())?;
            match args.format {
                Format::Csv => Ok(r.gram.to_csv()),
                f => emit(&r, f),
            }
        }
        Command::Normalize { model, format } => emit(&report::normalize_report(&model.load()?)?, format),
        Command::Simulate {
            model,
            step,
            paths,
            seed,
            burn_in,
            output,
            format,
        } => {
            let model = model.load()?;
            let config = SimConfig {
                step,
                burn_in,
                paths,
                seed,
            };
            let ensemble = stationary_ensemble(&model, &config)?;
            if let Some(path) = &output {
                ensemble.write_binary(path)?;
            }
            match format {
                Format::Csv => {
                    let mut buf = Vec::new();
                    ensemble.write_csv(&mut buf)?;
                    Ok(String::from_utf8(buf).expect("csv is ascii"))
                }
                f => {
                    let out = output.map(|p| p.display().to_string());
                    emit(&report::simulate_report(&model, &ensemble, out)?, f)
                }
            }
        }
        Command::Example { which, format } => match which {
            Example::Rotating { max_n, degree } => emit(&report::rotating_example_report(max_n, degree)?, format),
            Example::Triangular { a, d, c } => {
                let p = TriangularParams::parse(&a, &d, &c)?;
                emit(&report::triangular_example_report(&p)?, format)
            }
        },
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            if stdout.write_all(out.as_bytes()).is_err() {
                return ExitCode::from(EXIT_VALIDATION);
            }
            ExitCode::SUCCESS
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical_ambiguity() {
                EXIT_AMBIGUOUS
            } else {
                EXIT_VALIDATION
            })
        }
    }
}
