use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand as ClapSubcommand};
use finsler_lab::geometry::Tolerances;
use finsler_lab::report::{run, GridRange, RunConfig, Subcommand};

/// Spherically symmetric Finsler metrics F = u * phi(r, s).
#[derive(Parser)]
#[command(name = "finsler-lab", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(ClapSubcommand)]
enum Command {
    /// Per-point metric, spray, curvature and main scalar values.
    Report(Common),
    /// Run the invariant suite; exits 1 if any check fails.
    Check(Common),
    /// Scalar flag curvature, Riemannian and degeneracy verdicts.
    Classify(Common),
    /// Test whether a given spray (P, Q) is metrizable by phi.
    Metrize(Common),
}

#[derive(Args)]
struct Common {
    /// phi(r, s), e.g. "1 + s" or "sqrt(r^2 - s^2)/r^2".
    #[arg(long, allow_hyphen_values = true)]
    phi: String,
    #[arg(long, allow_hyphen_values = true)]
    p: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    q: Option<String>,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    /// START:STOP:COUNT for r = |x|.
    #[arg(long, default_value = "0.5:1.5:3", allow_hyphen_values = true)]
    r: GridRange,
    /// START:STOP:COUNT for s / r, strictly inside (-1, 1).
    #[arg(
        long = "s-frac",
        default_value = "-0.6:0.6:3",
        allow_hyphen_values = true
    )]
    s_frac: GridRange,
    /// START:STOP:COUNT for u = |y|.
    #[arg(long, default_value = "1:1:1", allow_hyphen_values = true)]
    u: GridRange,
    /// Rotate every point by a random orthogonal matrix drawn from this seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long = "tol-abs", default_value_t = Tolerances::default().abs)]
    tol_abs: f64,
    #[arg(long = "tol-rel", default_value_t = Tolerances::default().rel)]
    tol_rel: f64,
    /// Write the JSON report here ("-" for stdout).
    #[arg(long)]
    json: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let (sub, args) = match cli.command {
        Command::Report(a) => (Subcommand::Report, a),
        Command::Check(a) => (Subcommand::Check, a),
        Command::Classify(a) => (Subcommand::Classify, a),
        Command::Metrize(a) => (Subcommand::Metrize, a),
    };
    let config = RunConfig {
        subcommand: sub,
        phi: args.phi,
        p_expr: args.p,
        q_expr: args.q,
        dim: args.dim,
        r_grid: args.r,
        s_fraction_grid: args.s_frac,
        u_grid: args.u,
        seed: args.seed,
        tol_abs: args.tol_abs,
        tol_rel: args.tol_rel,
    };
    let doc = match run(&config) {
        Ok(d) => d,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let json_to_stdout = args.json.as_deref().is_some_and(|p| p.as_os_str() == "-");
    if json_to_stdout {
        print!("{}", doc.to_json());
    } else {
        print!("{}", doc.render_text());
        if let Some(path) = &args.json {
            if let Err(e) = std::fs::write(path, doc.to_json()) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return ExitCode::from(1);
            }
        }
    }
    ExitCode::from(doc.exit_code() as u8)
}
