use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use patchscore::error::{Error, Result};
use patchscore::fetch::{fetch_remote, ENDPOINT_ENV};
use patchscore::ingest::load_index;
use patchscore::parallel::with_threads;
use patchscore::pipeline::{self, SelectOptions};
use patchscore::store::PatchStore;
use patchscore_core::{Band, Criterion, PatchSide};

/// Lesion patch extraction, entropy/MEMD scoring and quantile dataset selection.
///
/// Typical run: `extract`, then `score` for each criterion, then `select`.
/// All commands operate on the patch store in `--out`.
#[derive(Debug, Parser)]
#[command(name = "patchscore", version)]
struct Cli {
    /// Seed for class balancing and split assignment.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads; 0 uses one per core.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Patch store directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Minimum fraction of a grid cell covered by the mask.
    #[arg(long, global = true, default_value_t = 0.5, value_parser = parse_fraction)]
    coverage_threshold: f64,
    /// Band width; must lie strictly between 0 and 0.5.
    #[arg(long, global = true, default_value_t = 0.15, value_parser = parse_quantile)]
    quantile: f64,
    #[arg(long, global = true, value_enum, default_value_t = CriterionArg::Entropy)]
    criterion: CriterionArg,
    #[arg(long, global = true, value_enum, default_value_t = BandArg::Low)]
    band: BandArg,
    /// Patch sides, comma separated.
    #[arg(long, global = true, value_delimiter = ',', default_value = "32,64,128,256", value_parser = parse_side)]
    sides: Vec<PatchSide>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Tile every masked image of a dataset into square patches.
    Extract {
        /// Dataset directory holding index.csv.
        #[arg(long)]
        index: PathBuf,
    },
    /// Score the stored patches and export per-side histograms.
    Score,
    /// Write one quantile-band manifest per side.
    Select,
    /// Aggregate per-patch predictions into image verdicts and accuracy.
    Aggregate {
        /// CSV with columns patch_id,prediction.
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
    },
    /// Time the scoring of every image of the store.
    Bench {
        #[arg(long, default_value_t = 3)]
        repetitions: usize,
    },
    /// Download images, masks and labels from a remote archive.
    Fetch {
        /// Image ids, comma separated.
        #[arg(long, value_delimiter = ',')]
        ids: Vec<String>,
        /// File with one image id per line.
        #[arg(long)]
        ids_file: Option<PathBuf>,
        #[arg(long, env = ENDPOINT_ENV)]
        endpoint: String,
        #[arg(long)]
        dest: PathBuf,
        #[arg(long, default_value_t = 4)]
        concurrency: usize,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CriterionArg {
    Entropy,
    Memd,
}

impl From<CriterionArg> for Criterion {
    fn from(c: CriterionArg) -> Self {
        match c {
            CriterionArg::Entropy => Criterion::Entropy,
            CriterionArg::Memd => Criterion::Memd,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum BandArg {
    Low,
    High,
}

impl From<BandArg> for Band {
    fn from(b: BandArg) -> Self {
        match b {
            BandArg::Low => Band::Low,
            BandArg::High => Band::High,
        }
    }
}

fn parse_fraction(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{v} is outside [0, 1]"))
    }
}

fn parse_quantile(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    patchscore_core::Quantile::new(v).map(|q| q.get()).map_err(|e| e.to_string())
}

fn parse_side(s: &str) -> std::result::Result<PatchSide, String> {
    let v: usize = s.trim().parse().map_err(|e| format!("{e}"))?;
    PatchSide::new(v).map_err(|e| e.to_string())
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|source| Error::Json { path: PathBuf::from("<stdout>"), source })?;
    println!("{text}");
    Ok(())
}

fn read_ids(ids: &[String], file: Option<&Path>) -> Result<Vec<String>> {
    let mut out: Vec<String> = ids.iter().map(|s| s.trim().to_owned()).filter(|s| !s.is_empty()).collect();
    if let Some(path) = file {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        out.extend(text.lines().map(str::trim).filter(|l| !l.is_empty()).map(str::to_owned));
    }
    Ok(out)
}

fn run(cli: Cli) -> Result<bool> {
    let criterion = Criterion::from(cli.criterion);
    match cli.command {
        Command::Extract { index } => {
            let index = load_index(&index)?;
            let report = with_threads(cli.threads, || {
                pipeline::cmd_extract(&index, &cli.sides, cli.coverage_threshold, &cli.out)
            })??;
            print_json(&report)?;
        }
        Command::Score => {
            let store = PatchStore::open(&cli.out)?;
            let export = with_threads(cli.threads, || pipeline::cmd_score(&store, criterion))??;
            for side in &export.sides {
                println!("side {:>3}: {} patches scored", side.side, side.total);
            }
        }
        Command::Select => {
            let store = PatchStore::open(&cli.out)?;
            let spec = pipeline::selection_spec(criterion, cli.band.into(), cli.quantile)?;
            let opts = SelectOptions { spec, seed: cli.seed };
            for path in pipeline::cmd_select(&store, &opts, &cli.sides)? {
                println!("{}", path.display());
            }
        }
        Command::Aggregate { predictions, manifest } => {
            let report = pipeline::cmd_aggregate(&predictions, &manifest, &cli.out)?;
            print_json(&report)?;
        }
        Command::Bench { repetitions } => {
            let report = if cli.out.join(patchscore::store::PATCHES_FILE).is_file() {
                let store = PatchStore::open(&cli.out)?;
                with_threads(cli.threads, || pipeline::cmd_bench(&store, criterion, repetitions))??
            } else {
                pipeline::BenchReport { criterion: criterion.as_str().to_owned(), repetitions, entries: Vec::new() }
            };
            print_json(&report)?;
        }
        Command::Fetch { ids, ids_file, endpoint, dest, concurrency } => {
            let ids = read_ids(&ids, ids_file.as_deref())?;
            let report = fetch_remote(&ids, &endpoint, &dest, concurrency)?;
            print_json(&report.statuses)?;
            return Ok(report.all_ok());
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
