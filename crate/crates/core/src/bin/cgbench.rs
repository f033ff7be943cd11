use std::fs;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use cg_attention::attention::{Block, BlockConfig};
use cg_attention::bench::{parse_list, parse_mode, run_suites, BenchConfig, Suite};
use cg_attention::spectral::parse_edge_list;
use cg_attention::{Error, IrrepsSignature};
use clap::Parser;

/// Correctness suites and complexity tables for the Clebsch-Gordan attention kernels.
///
/// Writes one JSON object per check to stdout. CSV tables go to --out, or
/// to stderr when --out is absent. Exit status: 0 all checks pass, 1 a check
/// failed, 2 usage error.
#[derive(Parser, Debug)]
#[command(name = "cgbench", version)]
struct Args {
    /// equivariance, oracle, scaling-N, scaling-L, memory, permutation or all
    #[arg(long)]
    suite: Option<String>,
    /// Token counts for scaling-N, comma separated
    #[arg(long, default_value = "256,512,1024,2048,4096,8192,16384")]
    n: String,
    /// Maximum degrees for scaling-L and memory, comma separated
    #[arg(long, default_value = "2,3,4,5,6,7,8")]
    l: String,
    /// Channel mode: full or elementwise
    #[arg(long, default_value = "full")]
    mode: String,
    #[arg(long, default_value_t = 1)]
    heads: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Timed runs per cell (median reported, after one warmup)
    #[arg(long, default_value_t = 5)]
    reps: usize,
    /// Channels per degree of the block written by --dump-params
    #[arg(long, default_value_t = 2)]
    channels: usize,
    /// CSV destination; suffixed with the suite name when several tables are produced
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write a freshly seeded attention block as CGB1
    #[arg(long)]
    dump_params: Option<PathBuf>,
    /// Read a CGB1 block and add it to the equivariance suite
    #[arg(long)]
    load_params: Option<PathBuf>,
    /// Edge list `u v weight` added to the permutation suite
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Run correctness cases concurrently
    #[arg(long)]
    parallel: bool,
    /// Perturb the CG tables used by the suites (negative control)
    #[arg(long)]
    inject_fault: bool,
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse(_) | Error::FitRefused(_) | Error::DegreeTooLarge(..) | Error::Io(_) => {
                Failure::Usage(e.to_string())
            }
            other => Failure::Runtime(other.to_string()),
        }
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(text) = std::env::var("CGBENCH_THREADS") else {
        return Ok(());
    };
    let cap: usize = text
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::Usage(format!("CGBENCH_THREADS must be a positive integer, got {text:?}")))?;
    let available = std::thread::available_parallelism().map_or(1, |n| n.get());
    rayon::ThreadPoolBuilder::new()
        .num_threads(cap.min(available))
        .build_global()
        .map_err(|e| Failure::Runtime(e.to_string()))
}

fn table_path(out: &Path, suite: Suite, several: bool) -> PathBuf {
    if !several {
        return out.to_path_buf();
    }
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("results");
    let name = match out.extension().and_then(|e| e.to_str()) {
        Some(ext) => format!("{stem}.{}.{ext}", suite.name()),
        None => format!("{stem}.{}", suite.name()),
    };
    out.with_file_name(name)
}

fn run(args: Args) -> Result<bool, Failure> {
    configure_threads()?;
    let mut cfg = BenchConfig {
        n_list: parse_list(&args.n)?,
        l_list: parse_list(&args.l)?,
        mode: parse_mode(&args.mode)?,
        heads: args.heads,
        seed: args.seed,
        repetitions: args.reps,
        parallel: args.parallel,
        inject_fault: args.inject_fault,
        ..BenchConfig::default()
    };
    if args.heads == 0 || args.channels == 0 {
        return Err(Failure::Usage("--heads and --channels must be positive".into()));
    }

    if let Some(path) = &args.dump_params {
        let l = cfg.l_list.iter().copied().max().unwrap_or(2).min(6);
        let sig = IrrepsSignature::uniform(l, args.channels, args.heads)?;
        let block = Block::new(BlockConfig::new(sig, l).with_mode(cfg.mode).with_seed(cfg.seed))?;
        block.write_params(BufWriter::new(fs::File::create(path).map_err(Error::from)?))?;
        eprintln!("wrote {} parameters to {}", block.params().len(), path.display());
        if args.suite.is_none() {
            return Ok(true);
        }
    }
    if let Some(path) = &args.load_params {
        let file = fs::File::open(path).map_err(Error::from)?;
        cfg.block = Some(Block::read_params(BufReader::new(file)).map_err(|e| Failure::Usage(e.to_string()))?);
    }
    if let Some(path) = &args.graph {
        let text = fs::read_to_string(path).map_err(Error::from)?;
        cfg.graph = Some(parse_edge_list(&text)?);
    }
    cfg.suite = args.suite.as_deref().unwrap_or("all").parse()?;

    let output = run_suites(&cfg)?;
    let stdout = io::stdout();
    let mut w = stdout.lock();
    for line in &output.lines {
        writeln!(w, "{}", line.to_json()).map_err(|e| Failure::Runtime(e.to_string()))?;
    }
    let several = output.tables.len() > 1;
    for (suite, csv) in &output.tables {
        match &args.out {
            Some(out) => {
                let p = table_path(out, *suite, several);
                fs::write(&p, csv).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?;
            }
            None => eprint!("{csv}"),
        }
    }
    let failed = output.lines.iter().filter(|l| !l.pass).count();
    eprintln!("{} checks, {} failed", output.lines.len(), failed);
    Ok(output.passed())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("cgbench: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("cgbench: {msg}");
            ExitCode::from(1)
        }
    }
}
