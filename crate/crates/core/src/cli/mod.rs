//! Command-line front end.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;
use thiserror::Error;

mod config;

pub use config::{read_schedule_file, RunConfig, ScheduleManifest, ScheduleSource};

use crate::exchange::run_session;
use crate::oracle::{
    enumerate_populations, read_records_csv, write_records_csv, ExperimentOutput, Harness,
    LandscapePoint, OracleError, RecordRow, TraderPopulation,
};
use crate::stats::analyze;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{failed} of {cells} cells failed")]
    CellFailures { failed: usize, cells: usize },
    #[error("{0}")]
    Runtime(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::CellFailures { .. } | CliError::Runtime(_) => 2,
            CliError::Config(_) | CliError::Io { .. } => 1,
        }
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::Schema(_) | OracleError::BadRow { .. } => CliError::Config(e.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "cda-oracle",
    version,
    about = "Double auction simulator and strategy-oracle experiments"
)]
pub struct Cli {
    /// JSON run configuration; defaults apply to missing fields
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed, overrides the config
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Output directory, overrides the config
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate random order schedules plus a manifest
    GenSchedules {
        /// Number of schedules, overrides `schedule_count`
        #[arg(long)]
        count: Option<u32>,
    },
    /// Run one market session and write its tape
    RunSession {
        /// Schedule JSON file; default is the first configured schedule
        #[arg(long)]
        schedule: Option<PathBuf>,
        /// Population such as `AA=4,GDX=4,ZIP=4`
        #[arg(long)]
        population: String,
    },
    /// Perfect-oracle experiment
    Experiment1,
    /// Noisy-oracle experiment over the noise grid
    Experiment2,
    /// Dominant kind over a grid of trader ratios (three kinds)
    Landscape {
        #[arg(long)]
        resolution: Option<u32>,
    },
    /// Summaries, fits and plot data from a records file
    Analyze { records: PathBuf },
}

fn create_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes a file through `fill`, mapping every failure to the path.
fn write_file<F>(path: &Path, fill: F) -> Result<(), CliError>
where
    F: FnOnce(&mut BufWriter<File>) -> Result<(), Box<dyn std::error::Error>>,
{
    let io = |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    fill(&mut w).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        source: std::io::Error::other(e.to_string()),
    })?;
    w.flush().map_err(io)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    write_file(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        writeln!(w)?;
        Ok(())
    })
}

/// Resolves the effective configuration from flags and file.
pub fn resolve_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(out) = &cli.out {
        config.out_dir = out.clone();
    }
    config.validate()?;
    Ok(config)
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let config = resolve_config(&cli)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(CliError::Config("--jobs must be at least 1".into()));
        }
        pool = pool.num_threads(jobs);
    }
    let pool = pool.build().map_err(|e| CliError::Runtime(e.to_string()))?;
    pool.install(|| match &cli.command {
        Command::GenSchedules { count } => {
            gen_schedules(&config, count.unwrap_or(config.schedule_count))
        }
        Command::RunSession {
            schedule,
            population,
        } => run_one_session(&config, schedule.as_deref(), population),
        Command::Experiment1 => experiment(&config, false),
        Command::Experiment2 => experiment(&config, true),
        Command::Landscape { resolution } => {
            landscape(&config, resolution.unwrap_or(config.landscape_resolution))
        }
        Command::Analyze { records } => analyze_file(&config, records),
    })
}

fn gen_schedules(config: &RunConfig, count: u32) -> Result<(), CliError> {
    let dir = config.out_dir.join("schedules");
    create_dir(&dir)?;
    let mut ids = Vec::new();
    for i in 0..count {
        let s = config.random_schedule(i)?;
        write_file(&dir.join(format!("{}.json", s.id)), |w| {
            writeln!(w, "{}", s.schedule.to_json())?;
            Ok(())
        })?;
        ids.push(s.id);
    }
    log::info!("wrote {count} schedules to {}", dir.display());
    write_json(
        &dir.join("manifest.json"),
        &ScheduleManifest { schedules: ids },
    )
}

#[derive(Serialize)]
struct SessionSummary {
    seed: u64,
    population: String,
    trades: u64,
    total_surplus: i64,
    theoretical_surplus: i64,
    efficiency: Option<f64>,
    market_avg: f64,
    kind_avg: Vec<(String, Option<f64>)>,
}

fn run_one_session(
    config: &RunConfig,
    schedule: Option<&Path>,
    population: &str,
) -> Result<(), CliError> {
    let schedule = match schedule {
        Some(path) => read_schedule_file(path)?,
        None => {
            config
                .load_schedules()?
                .into_iter()
                .next()
                .ok_or_else(|| CliError::Config("no schedule configured".into()))?
                .schedule
        }
    };
    let population =
        TraderPopulation::parse(population).map_err(|e| CliError::Config(e.to_string()))?;
    let result = run_session(
        &schedule,
        &population,
        config.duration(),
        &config.strategy_params,
        config.seed,
    )
    .map_err(|e| CliError::Config(e.to_string()))?;
    create_dir(&config.out_dir)?;
    write_file(&config.out_dir.join("tape.csv"), |w| {
        result.tape.write_csv(w)?;
        Ok(())
    })?;
    let summary = SessionSummary {
        seed: config.seed,
        population: population.to_string(),
        trades: result.trade_count,
        total_surplus: result.total_surplus,
        theoretical_surplus: result.theoretical_surplus,
        efficiency: result.efficiency(),
        market_avg: result.market_average(),
        kind_avg: population
            .kinds()
            .map(|k| (k.to_string(), result.kind_average(k)))
            .collect(),
    };
    write_json(&config.out_dir.join("session.json"), &summary)
}

#[derive(Serialize)]
struct ExperimentManifest<'a> {
    config: &'a RunConfig,
    schedules: Vec<String>,
    populations: usize,
    p_grid: Vec<f64>,
    records: usize,
    failures: Vec<String>,
}

fn harness(config: &RunConfig) -> Harness {
    Harness {
        kinds: config.strategies.clone(),
        n_per_side: config.n_per_side,
        duration: config.duration(),
        params: config.strategy_params.clone(),
        seed: config.seed,
    }
}

fn experiment(config: &RunConfig, noisy: bool) -> Result<(), CliError> {
    let schedules = config.load_schedules()?;
    let populations = enumerate_populations(config.n_per_side, &config.strategies)?;
    let h = harness(config);
    let p_grid = if noisy {
        config.noise_grid()
    } else {
        vec![0.0]
    };
    log::info!(
        "{} schedules x {} populations x {} noise levels, K = {}",
        schedules.len(),
        populations.len(),
        p_grid.len(),
        config.k
    );
    let output: ExperimentOutput = if noisy {
        h.experiment2(&schedules, &populations, &p_grid, config.k)?
    } else {
        h.experiment1(&schedules, &populations, config.k)?
    };

    let dir = config
        .out_dir
        .join(if noisy { "experiment2" } else { "experiment1" });
    create_dir(&dir)?;
    let records_path = dir.join("records.csv");
    write_file(&records_path, |w| {
        write_records_csv(&output.records, &config.strategies, w)?;
        Ok(())
    })?;
    let rows: Vec<RecordRow> = output
        .records
        .iter()
        .map(|r| RecordRow::from_record(r, &config.strategies))
        .collect();
    write_analysis(&dir, &rows)?;

    let mut failures: Vec<String> = output
        .failures
        .iter()
        .map(|f| {
            format!(
                "{}/{}/{}: {}",
                f.schedule_id, f.population_index, f.p_index, f.error
            )
        })
        .collect();
    failures.sort();
    write_json(
        &dir.join("manifest.json"),
        &ExperimentManifest {
            config,
            schedules: schedules.iter().map(|s| s.id.clone()).collect(),
            populations: populations.len(),
            p_grid,
            records: output.records.len(),
            failures,
        },
    )?;
    let cells = output.cells();
    let failed = output.failures.len();
    if failed > 0 && failed as f64 > config.max_failure_fraction * cells as f64 {
        return Err(CliError::CellFailures { failed, cells });
    }
    Ok(())
}

fn write_analysis(dir: &Path, rows: &[RecordRow]) -> Result<(), CliError> {
    let analysis = analyze(rows);
    write_file(&dir.join("summary.csv"), |w| {
        Ok(analysis.write_summary_csv(w)?)
    })?;
    write_file(&dir.join("fits.csv"), |w| Ok(analysis.write_fits_csv(w)?))?;
    write_file(&dir.join("plot.csv"), |w| Ok(analysis.write_plot_csv(w)?))?;
    write_json(&dir.join("discarded.json"), &analysis.discarded)
}

fn analyze_file(config: &RunConfig, records: &Path) -> Result<(), CliError> {
    let file = File::open(records).map_err(|source| CliError::Io {
        path: records.to_path_buf(),
        source,
    })?;
    let rows = read_records_csv(file)?;
    let dir = config.out_dir.join("analysis");
    create_dir(&dir)?;
    write_analysis(&dir, &rows)
}

fn landscape(config: &RunConfig, resolution: u32) -> Result<(), CliError> {
    let schedules = config.load_schedules()?;
    let h = harness(config);
    if h.kinds.len() != 3 {
        return Err(CliError::Config(format!(
            "landscape needs exactly three strategies, got {}",
            h.kinds.len()
        )));
    }
    let dir = config.out_dir.join("landscape");
    create_dir(&dir)?;
    let mut all: Vec<(String, LandscapePoint)> = Vec::new();
    for s in &schedules {
        for pt in h.dominance_landscape(&s.schedule, resolution, config.k)? {
            all.push((s.id.clone(), pt));
        }
    }
    write_file(&dir.join("landscape.csv"), |w| {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["schedule_id".to_string()];
        header.extend(h.kinds.iter().map(|k| format!("w_{k}")));
        header.extend(h.kinds.iter().map(|k| format!("n_{k}")));
        header.extend(["dominant".to_string(), "tie".to_string()]);
        header.extend(h.kinds.iter().map(|k| format!("avg_{k}")));
        out.write_record(&header)?;
        for (id, pt) in &all {
            let avgs = pt.prediction.outcome.averages();
            let mut row = vec![id.clone()];
            row.extend(pt.weights.iter().map(|w| w.to_string()));
            row.extend(
                h.kinds
                    .iter()
                    .map(|&k| pt.population.get(k).buyers.to_string()),
            );
            row.extend([pt.dominant().to_string(), pt.prediction.tie.to_string()]);
            row.extend(
                h.kinds
                    .iter()
                    .map(|k| avgs.get(k).map(|a| a.to_string()).unwrap_or_default()),
            );
            out.write_record(&row)?;
        }
        out.flush()?;
        Ok(())
    })
}
