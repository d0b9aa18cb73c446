use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dropqed::cli::{
    bic_report, parse_config, parse_f64_list, parse_usize_list, run, theta_sweep, write_atomic, CliError,
    NoiseConfig, OutputConfig, OutputFormat, RunConfig, RunMethod, Tolerances, EXIT_OK, EXIT_USAGE, EXIT_VALIDATION,
};
use dropqed::drop::Method;

/// Collective decay rates of multidimensional waveguide-QED qubit networks.
#[derive(Parser, Debug)]
#[command(name = "dropqed", version)]
struct Cli {
    /// Run the pipeline described by a JSON configuration file.
    #[arg(long, global = false)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// DRoP spectrum against an equation-of-motion pole route.
    Compare(NetArgs),
    /// DRoP spectrum (Cartesian sums of chain rates).
    Drop(NetArgs),
    /// Poles by smallest-singular-value search seeded from DRoP.
    EomCnm(NetArgs),
    /// Poles by determinant interpolation.
    EomDet(NetArgs),
    /// Rates of a single chain.
    Chain(ChainArgs),
    /// Bound-state null space at Delta = 0, theta = m pi.
    Bic(BicArgs),
    /// DRoP against the eigenvalue route over a list of phases.
    Sweep(SweepArgs),
}

#[derive(Args, Debug)]
struct OutArgs {
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Result file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Scatter plot of the spectra.
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(clap::ValueEnum, Clone, Copy, Debug)]
enum Format {
    Json,
    Csv,
}

#[derive(clap::ValueEnum, Clone, Copy, Debug)]
enum Reference {
    EomEigen,
    EomCnm,
    EomDet,
}

#[derive(Args, Debug)]
struct NetArgs {
    /// Qubits per direction, e.g. 5,3,4.
    #[arg(long)]
    dims: String,
    /// Single-emitter rate per direction, e.g. 1,4,2.
    #[arg(long)]
    gammas: String,
    #[arg(long, allow_hyphen_values = true)]
    theta_over_pi: f64,
    /// Pole route used by `compare`.
    #[arg(long, value_enum, default_value = "eom-eigen")]
    reference: Reference,
    #[arg(long)]
    noise_eps: Option<f64>,
    #[arg(long, default_value_t = 0)]
    noise_seed: u64,
    #[arg(long, default_value_t = 1e-8)]
    match_tol: f64,
    #[arg(long, default_value_t = 1e-8)]
    rank_tol: f64,
    #[arg(long, default_value_t = 1e-10)]
    solver_tol: f64,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args, Debug)]
struct ChainArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, allow_hyphen_values = true)]
    theta_over_pi: f64,
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args, Debug)]
struct BicArgs {
    #[arg(long)]
    dims: String,
    #[arg(long, default_value_t = 1, allow_hyphen_values = true)]
    m: i64,
    #[arg(long, default_value_t = 1e-8)]
    rank_tol: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long)]
    dims: String,
    #[arg(long)]
    gammas: String,
    /// Phases as multiples of pi, e.g. 0.3,0.5,0.65,0.9999.
    #[arg(long, allow_hyphen_values = true)]
    thetas_over_pi: String,
    #[arg(long, default_value_t = 1e-8)]
    match_tol: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn output(o: &OutArgs) -> OutputConfig {
    OutputConfig {
        format: match o.format {
            Format::Json => OutputFormat::Json,
            Format::Csv => OutputFormat::Csv,
        },
        path: o.out.clone(),
        svg_path: o.svg.clone(),
    }
}

fn usage(e: String) -> CliError {
    CliError::Usage(e)
}

fn net_config(method: RunMethod, a: &NetArgs) -> Result<RunConfig, CliError> {
    let cfg = RunConfig {
        dims: parse_usize_list(&a.dims).map_err(usage)?,
        gammas: parse_f64_list(&a.gammas).map_err(usage)?,
        theta_over_pi: a.theta_over_pi,
        method,
        reference: match a.reference {
            Reference::EomEigen => Method::EomEigen,
            Reference::EomCnm => Method::EomCnm,
            Reference::EomDet => Method::EomDet,
        },
        noise: a.noise_eps.map(|epsilon_max| NoiseConfig { epsilon_max, seed: a.noise_seed }),
        tolerances: Tolerances { match_tol: a.match_tol, rank_tol: a.rank_tol, solver_tol: a.solver_tol },
        output: output(&a.out),
    };
    cfg.validate()?;
    Ok(cfg)
}

fn emit_report(doc: serde_json::Value, passed: bool, out: &Option<PathBuf>) -> Result<i32, CliError> {
    let mut text = serde_json::to_string_pretty(&doc).unwrap_or_default();
    text.push('\n');
    match out {
        Some(p) => write_atomic(p, text.as_bytes())?,
        None => print!("{text}"),
    }
    Ok(if passed { EXIT_OK } else { EXIT_VALIDATION })
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("DROPQED_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| usage(format!("DROPQED_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| usage(format!("cannot configure thread pool: {e}")))
}

fn dispatch(cli: Cli) -> Result<i32, CliError> {
    configure_threads()?;
    let cfg = match (cli.config, cli.command) {
        (Some(_), Some(_)) => return Err(usage("--config cannot be combined with a subcommand".into())),
        (None, None) => return Err(usage("expected --config FILE or a subcommand; see --help".into())),
        (Some(path), None) => {
            let text = std::fs::read_to_string(&path)
                .map_err(|e| CliError::Io { path: path.display().to_string(), message: e.to_string() })?;
            parse_config(&text)?
        }
        (None, Some(cmd)) => match cmd {
            Command::Compare(a) => net_config(RunMethod::Compare, &a)?,
            Command::Drop(a) => net_config(RunMethod::Drop, &a)?,
            Command::EomCnm(a) => net_config(RunMethod::EomCnm, &a)?,
            Command::EomDet(a) => net_config(RunMethod::EomDet, &a)?,
            Command::Chain(a) => {
                let cfg = RunConfig {
                    dims: vec![a.n],
                    gammas: vec![a.gamma],
                    theta_over_pi: a.theta_over_pi,
                    method: RunMethod::Chain,
                    reference: Method::EomEigen,
                    noise: None,
                    tolerances: Tolerances::default(),
                    output: output(&a.out),
                };
                cfg.validate()?;
                cfg
            }
            Command::Bic(a) => {
                let dims = parse_usize_list(&a.dims).map_err(usage)?;
                let (doc, ok) = bic_report(&dims, a.m, a.rank_tol)?;
                return emit_report(doc, ok, &a.out);
            }
            Command::Sweep(a) => {
                let dims = parse_usize_list(&a.dims).map_err(usage)?;
                let gammas = parse_f64_list(&a.gammas).map_err(usage)?;
                let thetas = parse_f64_list(&a.thetas_over_pi).map_err(usage)?;
                let (doc, ok) = theta_sweep(&dims, &gammas, &thetas, a.match_tol)?;
                return emit_report(doc, ok, &a.out);
            }
        },
    };
    let outcome = run(&cfg)?;
    if let Some(text) = outcome.stdout {
        print!("{text}");
    }
    Ok(outcome.exit_code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::from(EXIT_OK as u8);
            }
            let msg = e.to_string();
            let first: Vec<&str> = msg.lines().map(str::trim).take_while(|l| !l.is_empty()).collect();
            let text = first.join(" ");
            eprintln!("{}", usage(text.trim_start_matches("error: ").to_string()).to_line());
            return ExitCode::from(EXIT_USAGE as u8);
        }
    };
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("{}", e.to_line());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
