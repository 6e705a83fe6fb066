mod commands;
mod config;
mod output;
mod svg;

use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "kinlab", version, about = "Spectral kinetic lab: exact solutions, solver runs, collision quadrature and diagnostics")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone, Debug)]
pub struct Common {
    /// Flat key=value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for manifest, results.csv and plot.svg.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Extra KEY=VALUE overrides (repeatable); applied after the config file.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long, global = true)]
    s: Option<f64>,
    #[arg(long, global = true)]
    gamma: Option<f64>,
    /// Spatial mode cutoff K.
    #[arg(long = "k-max", global = true)]
    k_max: Option<i64>,
    /// Velocity box half-width V.
    #[arg(long = "v-max", global = true)]
    v_max: Option<f64>,
    /// Velocity points per axis N_v.
    #[arg(long = "n-v", global = true)]
    n_v: Option<usize>,
    #[arg(long, global = true)]
    dt: Option<f64>,
    #[arg(long = "t-max", global = true)]
    t_max: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Also render plot.svg.
    #[arg(long, global = true)]
    svg: bool,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Exact derivative norms, Gevrey-index fit and radius sweep.
    Kolmogorov(commands::KolmogorovArgs),
    /// Splitting-solver run of the hard-potential Fokker-Planck model.
    Ffp1(commands::Ffp1Args),
    /// Collision invariants, coercivity ratios and trilinear probe.
    CollisionSuite(commands::CollisionArgs),
    /// Fluid-equation residuals on transport trajectories and the K-functional.
    MacroResidual(commands::MacroArgs),
    /// Symbol-inequality scan for the subelliptic multiplier.
    SubellipticScan(commands::ScanArgs),
    /// Exhaustive and randomized inequality checks.
    InequalitySuite(commands::InequalityArgs),
    /// Fit a Gevrey index, radius or scaling slope to columns of a CSV file.
    Fit(commands::FitArgs),
}

impl Cmd {
    fn name(&self) -> &'static str {
        match self {
            Cmd::Kolmogorov(_) => "kolmogorov",
            Cmd::Ffp1(_) => "ffp1",
            Cmd::CollisionSuite(_) => "collision-suite",
            Cmd::MacroResidual(_) => "macro-residual",
            Cmd::SubellipticScan(_) => "subelliptic-scan",
            Cmd::InequalitySuite(_) => "inequality-suite",
            Cmd::Fit(_) => "fit",
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Packet {
    Gaussian,
    Flat,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let run = || -> anyhow::Result<output::RunOutput> {
        let cfg = config::resolve(&cli.common)?;
        let mut out = match &cli.cmd {
            Cmd::Kolmogorov(a) => commands::kolmogorov(&cfg, a)?,
            Cmd::Ffp1(a) => commands::ffp1(&cfg, a, &cli.common.out)?,
            Cmd::CollisionSuite(a) => commands::collision_suite(&cfg, a)?,
            Cmd::MacroResidual(a) => commands::macro_residual(&cfg, a)?,
            Cmd::SubellipticScan(a) => commands::subelliptic_scan(&cfg, a)?,
            Cmd::InequalitySuite(a) => commands::inequality_suite(&cfg, a)?,
            Cmd::Fit(a) => commands::fit(&cfg, a)?,
        };
        let mut head = vec![
            ("command".to_string(), cli.cmd.name().to_string()),
            ("version".to_string(), env!("CARGO_PKG_VERSION").to_string()),
            ("seed".to_string(), cfg.seed.to_string()),
        ];
        head.extend(cfg.params.to_pairs());
        head.append(&mut out.manifest);
        out.manifest = head;
        out.write(&cli.common.out, cli.common.svg)?;
        Ok(out)
    };
    match run() {
        Ok(out) => {
            for (name, ok, detail) in &out.assertions {
                println!("{} {name}: {detail}", if *ok { "PASS" } else { "FAIL" });
            }
            println!("wrote {}", cli.common.out.display());
            if out.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
