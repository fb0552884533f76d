use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ntk_core::{Activation, Architecture};
use ntk_sweep::{run_sweep, Format, Generator, OutputKind, SweepConfig, SweepError};

/// Infinite-width NNGP/NTK sweeps over (σ_w², σ_b², depth).
#[derive(Debug, Parser)]
#[command(name = "ntk-sweep", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Every output listed in the configuration.
    Sweep(RunArgs),
    /// Phase classification per grid point plus the χ₁ = 1 curve.
    PhaseDiagram(RunArgs),
    /// Condition numbers and spectra along depth.
    Trajectory(RunArgs),
    /// Mean-predictor norms along depth.
    Decay(RunArgs),
    /// Gradient-flow training curves.
    Dynamics(RunArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// JSON configuration; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, default_value = "csv")]
    format: Format,

    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    activation: Option<Activation>,
    #[arg(long)]
    architecture: Option<Architecture>,
    #[arg(long = "sigma_w2_grid", alias = "sigma-w2-grid", value_delimiter = ',')]
    sigma_w2_grid: Option<Vec<f64>>,
    #[arg(long = "sigma_b2_grid", alias = "sigma-b2-grid", value_delimiter = ',')]
    sigma_b2_grid: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    depths: Option<Vec<usize>>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    features: Option<usize>,
    #[arg(long)]
    channels: Option<usize>,
    #[arg(long)]
    spatial: Option<usize>,
    #[arg(long = "filter_halfwidth", alias = "filter-halfwidth")]
    filter_halfwidth: Option<usize>,
    #[arg(long)]
    ridge: Option<f64>,
    #[arg(long)]
    dropout: Option<f64>,
    #[arg(long)]
    generator: Option<Generator>,
    #[arg(long, value_delimiter = ',')]
    outputs: Option<Vec<OutputKind>>,
    #[arg(long = "quadrature_nodes", alias = "quadrature-nodes")]
    quadrature_nodes: Option<usize>,
    #[arg(long = "eta_fraction", alias = "eta-fraction")]
    eta_fraction: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    times: Option<Vec<f64>>,
}

impl RunArgs {
    fn config(&self) -> Result<SweepConfig, SweepError> {
        let mut cfg = match &self.config {
            Some(path) => SweepConfig::load(path)?,
            None => SweepConfig::default(),
        };
        macro_rules! set {
            ($($field:ident),*) => {
                $(if let Some(v) = &self.$field {
                    cfg.$field = v.clone();
                })*
            };
        }
        set!(
            seed, activation, architecture, sigma_w2_grid, sigma_b2_grid, depths, m, n, features,
            channels, spatial, filter_halfwidth, ridge, dropout, generator, outputs, eta_fraction,
            times
        );
        if self.quadrature_nodes.is_some() {
            cfg.quadrature_nodes = self.quadrature_nodes;
        }
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<usize, SweepError> {
    let (args, outputs) = match &cli.command {
        Command::Sweep(a) => (a, None),
        Command::PhaseDiagram(a) => (a, Some(vec![OutputKind::PhaseDiagram])),
        Command::Trajectory(a) => (a, Some(vec![OutputKind::Kappa, OutputKind::Spectrum])),
        Command::Decay(a) => (a, Some(vec![OutputKind::PredictorDecay])),
        Command::Dynamics(a) => (a, Some(vec![OutputKind::DynamicsTrace])),
    };
    let mut cfg = args.config()?;
    if let Some(o) = outputs {
        cfg.outputs = o;
    }
    cfg.validate()?;
    let results = run_sweep(&cfg, args.threads)?;
    std::fs::create_dir_all(&args.out)?;
    std::fs::write(
        args.out.join("config.json"),
        serde_json::to_string_pretty(&cfg)? + "\n",
    )?;
    for table in &results.tables {
        let path = table.write(&args.out, args.format)?;
        println!("{} rows -> {}", table.rows.len(), path.display());
    }
    Ok(results.failures())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // Usage errors count as configuration errors; 2 is reserved
            // for partial failures.
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(0) => ExitCode::SUCCESS,
        Ok(failures) => {
            eprintln!("{failures} rows report errors; see the error column");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("ntk-sweep: {e}");
            ExitCode::from(1)
        }
    }
}
