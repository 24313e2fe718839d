use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use autoforecast::advisor::AdvisorMode;
use autoforecast::pipeline::{self, RunConfig};
use autoforecast::reporter::sig4;
use autoforecast::{synthetic, Error, Result};

#[derive(Parser)]
#[command(name = "autoforecast", version, about = "Automated univariate forecasting with a logged decision trail")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Quality diagnostics, cleaning advice and temporal profile of a series.
    Diagnose(RunArgs),
    /// Full pipeline over every slice and horizon.
    Forecast(RunArgs),
    /// Re-render slice reports from their logs.
    Report {
        /// A slice directory, or a run directory to re-render every slice in it.
        dir: PathBuf,
    },
    /// Print the aggregate tables of a finished run.
    Bench {
        #[arg(default_value = "out")]
        dir: PathBuf,
    },
    /// Write the bundled synthetic dataset.
    Synth {
        #[arg(default_value = "data/synthetic.csv")]
        path: PathBuf,
    },
}

/// Flags override the config file, which overrides the defaults.
#[derive(Args)]
struct RunArgs {
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    column: Option<String>,
    #[arg(long)]
    slices: Option<usize>,
    #[arg(long)]
    input_length: Option<usize>,
    /// Comma-separated, e.g. 96,192.
    #[arg(long, value_delimiter = ',')]
    horizons: Option<Vec<usize>>,
    #[arg(long)]
    seed: Option<u64>,
    /// rules or llm; llm reads its key from the variable named by advisor.api_key_env.
    #[arg(long)]
    advisor: Option<AdvisorMode>,
    /// Worker threads; 0 uses every core, 1 runs sequentially.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn resolve(self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($($f:ident),*) => { $(if let Some(v) = self.$f { cfg.$f = v; })* };
        }
        set!(input, column, slices, input_length, horizons, seed, threads, out);
        if let Some(mode) = self.advisor {
            cfg.advisor.mode = mode;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn diagnose(cfg: &RunConfig) -> Result<()> {
    let series = pipeline::ingest_csv(&cfg.input, &cfg.column)?;
    let out = pipeline::curate(&series, &cfg.advisor)?;
    std::fs::create_dir_all(cfg.out.join("plots"))?;
    for (name, svg) in &out.plots {
        std::fs::write(cfg.out.join("plots").join(format!("{name}.svg")), svg)?;
    }
    let json = serde_json::to_string_pretty(&out)?;
    std::fs::write(cfg.out.join("diagnostics.json"), &json)?;
    println!("{json}");
    Ok(())
}

fn forecast(cfg: &RunConfig) -> Result<()> {
    let summary = pipeline::run_pipeline(cfg)?;
    let failed: Vec<_> = summary.results.iter().filter(|r| r.error.is_some()).collect();
    for r in &failed {
        eprintln!("slice {} (h={}) failed: {}", r.slice, r.horizon, r.error.as_deref().unwrap_or(""));
    }
    print_aggregate(&summary.aggregate);
    println!("wrote {}", cfg.out.display());
    Ok(())
}

fn print_aggregate(rows: &[pipeline::HorizonSummary]) {
    println!("{:>8} {:>6} {:>6} {:>12} {:>12}", "horizon", "ok", "failed", "MAE", "MAPE%");
    for r in rows {
        println!(
            "{:>8} {:>6} {:>6} {:>12} {:>12}",
            r.horizon,
            r.slices_ok,
            r.slices_failed,
            sig4(r.mae),
            sig4(r.mape)
        );
    }
}

fn is_slice_dir(dir: &Path) -> bool {
    dir.join("log.ndjson").is_file()
}

fn report(dir: &Path) -> Result<()> {
    let mut targets = Vec::new();
    if is_slice_dir(dir) {
        targets.push(dir.to_path_buf());
    } else {
        for h in sorted_dirs(dir)? {
            targets.extend(sorted_dirs(&h)?.into_iter().filter(|d| is_slice_dir(d)));
        }
    }
    if targets.is_empty() {
        return Err(Error::Report(format!("no slice logs under {}", dir.display())));
    }
    for t in targets {
        let bundle = pipeline::rerender(&t)?;
        bundle.write_to(&t)?;
        println!("re-rendered {}", t.display());
    }
    Ok(())
}

fn sorted_dirs(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut dirs: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    dirs.sort();
    Ok(dirs)
}

fn bench(dir: &Path) -> Result<()> {
    let path = dir.join("aggregate.csv");
    let mut reader = csv::Reader::from_path(&path).map_err(|e| Error::Report(format!("{}: {e}", path.display())))?;
    let rows = reader
        .deserialize()
        .collect::<std::result::Result<Vec<pipeline::HorizonSummary>, _>>()
        .map_err(|e| Error::Report(e.to_string()))?;
    print_aggregate(&rows);
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Diagnose(args) => diagnose(&args.resolve()?),
        Command::Forecast(args) => forecast(&args.resolve()?),
        Command::Report { dir } => report(&dir),
        Command::Bench { dir } => bench(&dir),
        Command::Synth { path } => {
            if let Some(parent) = path.parent() {
                std::fs::create_dir_all(parent)?;
            }
            std::fs::write(&path, synthetic::to_csv(&synthetic::bundled()))?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
