use std::fs::File;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use lightspan::harness::{self, ConfigOverrides, ExperimentConfig};
use lightspan::protocols::OwnedRegistry;
use lightspan::spanner::{centralized_spanner_with, NaiveGreedyBase};
use lightspan::verify::{build_report, check_stretch, run_report};
use lightspan::{build_ubg, centralized_euclidean_spanner, generate_uniform_square, PointSet, ProtocolKind};

#[derive(Parser)]
#[command(name = "lightspan", version, about = "Light bounded-degree spanners for unit ball graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep seeds and parameters, writing results.csv and efficiency.csv.
    Run(RunArgs),
    /// Write a seeded uniform point set as id,x,y CSV.
    Generate {
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long, default_value_t = 5.0)]
        side: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build one spanner from a points CSV and print its report as JSON.
    Build {
        #[arg(long)]
        points: PathBuf,
        #[arg(long, value_enum)]
        algo: Algo,
        /// Epsilon for local, congest and centralized; t for euclid and greedy.
        #[arg(long)]
        param: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "spanner")]
        stem: String,
    },
    /// Rebuild a saved instance and print its report as JSON.
    Replay { file: PathBuf },
}

#[derive(clap::Args)]
struct RunArgs {
    /// key=value file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    side: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    #[arg(long, value_delimiter = ',')]
    t: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    eps: Option<Vec<f64>>,
    #[arg(long)]
    protocol: Option<ProtocolKind>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Algo {
    Local,
    Congest,
    Euclid,
    Centralized,
    Greedy,
}

impl Algo {
    fn protocol(self) -> Option<ProtocolKind> {
        match self {
            Algo::Local => Some(ProtocolKind::Local),
            Algo::Congest => Some(ProtocolKind::Congest),
            Algo::Euclid => Some(ProtocolKind::Euclid),
            Algo::Centralized | Algo::Greedy => None,
        }
    }
}

fn run(args: RunArgs) -> Result<()> {
    let base = match &args.config {
        Some(path) => ExperimentConfig::from_file(path).with_context(|| format!("reading {}", path.display()))?,
        None => ExperimentConfig::default(),
    };
    let cfg = base.apply(ConfigOverrides {
        n: args.n,
        side: args.side,
        seeds: args.seeds,
        t_values: args.t,
        eps_values: args.eps,
        protocol: args.protocol,
        out: args.out,
    });
    let out = harness::run_experiment(&cfg)?;
    println!("wrote {} ({} rows)", out.results_path.display(), out.results.len());
    println!("wrote {}", out.efficiency_path.display());
    for row in &out.efficiency {
        println!(
            "{} param={}: efficiency degree {:.3} size {:.3} weight {:.3}",
            row.protocol, row.param, row.efficiency_max_degree, row.efficiency_size, row.efficiency_weight
        );
    }
    Ok(())
}

fn build(points: PathBuf, algo: Algo, param: f64, seed: u64, out: PathBuf, stem: String) -> Result<bool> {
    let ps = PointSet::read_csv(File::open(&points).with_context(|| format!("opening {}", points.display()))?)?;
    let g = build_ubg(&ps, 1.0)?;
    let (spanner, report, written) = match algo.protocol() {
        Some(kind) => {
            let run = harness::run_protocol(&g, kind, param, seed)?;
            let report = run_report(&g, &run)?;
            let written = harness::write_spanner_outputs(&out, &stem, &run.spanner, Some(&run))?;
            (run.spanner, report, written)
        }
        None if matches!(algo, Algo::Centralized) => {
            let (s, registry) = centralized_spanner_with(&g, param, &NaiveGreedyBase)?;
            let owned = OwnedRegistry { owner: 0, eps: param, registry };
            let report = build_report(&g, &s, true, std::slice::from_ref(&owned))?;
            let written = harness::write_spanner_outputs(&out, &stem, &s, None)?;
            (s, report, written)
        }
        None => {
            let s = centralized_euclidean_spanner(&g, param)?;
            let report = build_report(&g, &s, true, &[])?;
            let written = harness::write_spanner_outputs(&out, &stem, &s, None)?;
            (s, report, written)
        }
    };
    for path in written {
        eprintln!("wrote {}", path.display());
    }
    println!("{}", report.to_json()?);
    Ok(check_stretch(&g, &spanner, spanner.stretch_target).pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => run(args).map(|()| true),
        Command::Generate { n, side, seed, out } => generate_uniform_square(n, side, seed)
            .map_err(anyhow::Error::from)
            .and_then(|ps| Ok(harness::write_points(&out, &ps)?))
            .map(|()| true),
        Command::Build { points, algo, param, seed, out, stem } => build(points, algo, param, seed, out, stem),
        Command::Replay { file } => {
            harness::replay(&file).with_context(|| format!("replaying {}", file.display())).and_then(|r| {
                println!("{}", r.report.to_json()?);
                Ok(r.report.max_edge_stretch <= r.spanner.stretch_target + lightspan::verify::STRETCH_TOLERANCE)
            })
        }
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("stretch check failed");
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
