use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use dirac_soliton::config::RunConfig;
use dirac_soliton::pipeline;
use dirac_soliton::{Error, ErrorKind};

/// Dirac points, nonlinear Dirac solitons and bifurcating NLS standing waves in
/// 1D periodic media.
#[derive(Parser, Debug)]
#[command(name = "diracsol", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML configuration; defaults are used for missing keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Comma-separated list of delta values, overriding the configuration.
    #[arg(long, global = true, value_delimiter = ',')]
    delta: Option<Vec<f64>>,
    /// Store the artifacts of this run as regression references.
    #[arg(long, global = true)]
    seed_regressions: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Band values over the Brillouin zone.
    Bands,
    /// Dirac point, effective coefficients and gap certification.
    Dirac,
    /// Homoclinic soliton of the effective Dirac system.
    Nld,
    /// Two-scale ansatz, residual scaling and Newton refinement.
    Soliton,
    /// Every step plus all checks and the regression comparison.
    VerifyAll,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>().map(Error::kind) {
        Some(ErrorKind::Validation) => 2,
        _ => 3,
    }
}

fn resolve_config(cli: &Cli) -> anyhow::Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(d) = &cli.delta {
        cfg.deltas = d.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    let cfg = resolve_config(cli)?;
    let out = cli.out.as_path();
    match cli.command {
        Command::Bands => {
            pipeline::cmd_bands(&cfg, out)?;
        }
        Command::Dirac => {
            let (data, _) = pipeline::cmd_dirac(&cfg, out)?;
            let c = data.coefficients;
            println!(
                "mu* = {:.12}  c# = {:.12}  theta# = {:.12}  beta1 = {:.12}  beta2 = {:.12}",
                data.point.mu_star, c.c_sharp, c.theta_sharp, c.beta1, c.beta2
            );
        }
        Command::Nld => {
            let (profile, kernel) = pipeline::cmd_nld(&cfg, out)?;
            println!(
                "decay rate {:.10} (predicted {:.10}), sigma_min restricted {:.3e}, unrestricted {:.3e}",
                profile.diagnostics.decay_rate_fit,
                profile.diagnostics.decay_rate_predicted,
                kernel.sigma_min_restricted,
                kernel.sigma_min_unrestricted
            );
        }
        Command::Soliton => {
            let outcome = pipeline::cmd_soliton(&cfg, out)?;
            for s in &outcome.solitons {
                println!(
                    "delta {}: {} Newton steps, residual {:.3e}, H2 error {:.3e}",
                    s.delta, s.iters, s.final_residual, s.h2_error
                );
            }
        }
        Command::VerifyAll => {
            let summary = pipeline::verify_all(&cfg, out, cli.seed_regressions)
                .with_context(|| format!("verification in {}", out.display()))?;
            for c in &summary.checks {
                println!("{} {} = {:.6e} (threshold {:.3e})", if c.pass { "PASS" } else { "FAIL" }, c.name, c.value, c.threshold);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
