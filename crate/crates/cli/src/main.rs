use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use chartbeam::beamform::SummaryFile;
use chartbeam::chart::ChartMode;
use chartbeam::pipeline::{
    self, compare, split, AccessLog, ChannelReader, ChartConfig, RunConfig, Target, VariantSpec,
};
use chartbeam::scene::{generate_dataset, Dataset};
use chartbeam::{io, Error};
use clap::{Parser, Subcommand};
use log::info;

#[derive(Parser)]
#[command(name = "chartbeam", version, about = "Channel charting and location-based beamforming")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a dataset from the scene section of a config file.
    Generate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Chart the uplink channels of a dataset.
    Chart {
        #[arg(long)]
        dataset: PathBuf,
        /// one_shot or on_the_fly.
        #[arg(long)]
        mode: ChartMode,
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long)]
        k: Option<usize>,
        /// Supplies the split and solver settings.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a beamformer on chart locations or true locations.
    Train {
        #[arg(long, conflicts_with = "locations", required_unless_present = "locations")]
        chart: Option<PathBuf>,
        #[arg(long)]
        locations: bool,
        #[arg(long)]
        dataset: PathBuf,
        /// bs1_ul or bs2_dl.
        #[arg(long)]
        target: Target,
        /// Name used for the exported files.
        #[arg(long, default_value = "custom")]
        name: String,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a trained beamformer on the test users.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a preset variant end to end.
    Run {
        /// V1 … V5.
        #[arg(long)]
        variant: String,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Tabulate the summaries of several report directories.
    Compare {
        #[arg(long, num_args = 1.., required = true)]
        reports: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_config(path: Option<&Path>) -> chartbeam::Result<RunConfig> {
    match path {
        Some(p) => RunConfig::load(p),
        None => Ok(RunConfig::default()),
    }
}

fn execute(command: Command) -> anyhow::Result<()> {
    let log = AccessLog::new();
    match command {
        Command::Generate { config, out } => {
            let config = load_config(config.as_deref())?;
            let ds = generate_dataset(&config.scene)?;
            ds.save(&out)?;
            println!("{} users written to {} ({} redrawn)", ds.num_users(), out.display(), ds.redrawn);
        }
        Command::Chart { dataset, mode, dim, k, config, out } => {
            let config = load_config(config.as_deref())?;
            let ds = Dataset::load(&dataset)?;
            let chart_config = ChartConfig { k: k.unwrap_or(config.chart.k), ..config.chart.clone() };
            let dim = dim.unwrap_or(config.chart.dim);
            let split = split(ds.num_users(), config.split_fraction, config.seeds.split)?;
            let reader = ChannelReader { dataset: &ds, log: &log };
            let users = pipeline::chart_users(mode, ds.num_users(), &split);
            let stored = pipeline::build_chart(&reader, mode, users, dim, &chart_config)?;
            stored.save(&out)?;
            println!(
                "charted {} channels into D = {dim} (σ = {:.4}, {} solver iterations)",
                stored.chart.len(),
                stored.chart.sigma,
                stored.chart.stats.iterations
            );
        }
        Command::Train { chart, locations: _, dataset, target, name, config, out } => {
            let config = load_config(config.as_deref())?;
            let ds = Dataset::load(&dataset)?;
            let reader = ChannelReader { dataset: &ds, log: &log };
            let split = split(ds.num_users(), config.split_fraction, config.seeds.split)?;
            let stored = chart.as_deref().map(|dir| chartbeam::chart::StoredChart::load(dir, &ds)).transpose()?;
            let spec = VariantSpec::custom(
                &name,
                stored.as_ref().map(|s| s.manifest.mode),
                stored.as_ref().map_or(0, |s| s.manifest.dim),
                target,
            )?;
            let chart_dir = chart.map(|p| std::path::absolute(&p).unwrap_or(p));
            let chart_ref = stored.as_ref().zip(chart_dir.as_deref());
            let (_, meta) = pipeline::train_stage(&spec, &config, &reader, chart_ref, &split, &out)?;
            println!("trained {} on {} users (γ = {:.4})", spec.id, meta.train_users, meta.gamma);
        }
        Command::Eval { model, dataset, out } => {
            let ds = Dataset::load(&dataset)?;
            let report = pipeline::eval_saved_model(&model, &ds, &out, &log)?;
            print_summary(&report.variant, &report.summary);
        }
        Command::Run { variant, config, out } => {
            let config = load_config(config.as_deref())?;
            let spec = VariantSpec::preset(&variant, &config)?;
            let report = pipeline::run_variant(&spec, &config, &out, &log)?;
            print_summary(&report.variant, &report.summary);
        }
        Command::Compare { reports, out } => {
            let summaries = reports
                .iter()
                .map(|dir| io::read_json::<SummaryFile>(&dir.join("summary.json")))
                .collect::<chartbeam::Result<Vec<_>>>()?;
            let comparison = compare(&summaries);
            comparison.save(&out)?;
            print!("{}", comparison.table());
        }
    }
    info!("done");
    Ok(())
}

fn print_summary(variant: &str, s: &chartbeam::beamform::Summary) {
    println!(
        "{variant}: {} users, median η {:.4}, mean {:.4}, p10 {:.4}, overhead {}/{}",
        s.count, s.median, s.mean, s.p10, s.overhead.chart_floats_per_user, s.overhead.raw_floats_per_user
    );
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(e) if e.is_config() => 2,
        Some(e) if e.is_numerical() => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match execute(cli.command).context("chartbeam failed") {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
