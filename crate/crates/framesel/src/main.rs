use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use framesel::bench::{run_bench, BenchConfig, GeneratorSpec};
use framesel::config::parse_alphas;
use framesel::{read_embeddings, select_embeddings, Error, ErrorDocument, Result, ResultDocument, RunConfig};
use framesel_core::kernel::DEFAULT_ALPHAS;
use framesel_core::selectors::{DEFAULT_LAMBDA, DEFAULT_SEGMENT};
use framesel_core::Method;

#[derive(Parser)]
#[command(name = "framesel", version, about = "Query-aware keyframe selection over frame embeddings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Select k frames for a query.
    Select(SelectArgs),
    /// Compare methods on synthetic planted-relevance streams and time them.
    Bench(BenchArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Frames to select.
    #[arg(long, default_value_t = 8)]
    k: usize,
    /// Relevance temperature.
    #[arg(long, default_value_t = DEFAULT_LAMBDA)]
    lambda: f64,
    /// Frames per segment.
    #[arg(long, default_value_t = DEFAULT_SEGMENT)]
    segment: usize,
    /// Squared kernel bandwidths, comma separated.
    #[arg(long)]
    kernel: Option<String>,
    /// L2-normalize frames and query (default).
    #[arg(long, overrides_with = "no_normalize")]
    normalize: bool,
    /// Use embeddings as given.
    #[arg(long, overrides_with = "normalize")]
    no_normalize: bool,
    /// Run the budget allocation on all cores.
    #[arg(long)]
    parallel: bool,
    /// Write the JSON document here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl CommonArgs {
    fn run_config(&self, method: Method) -> Result<RunConfig> {
        Ok(RunConfig {
            method,
            k: self.k,
            lambda: self.lambda,
            m: self.segment,
            alphas: match &self.kernel {
                Some(s) => parse_alphas(s)?,
                None => DEFAULT_ALPHAS.to_vec(),
            },
            normalize: !self.no_normalize,
            parallel: self.parallel,
            seed: 0,
        })
    }
}

#[derive(Args)]
struct SelectArgs {
    /// Frame embeddings (FEMB or CSV).
    #[arg(long)]
    frames: PathBuf,
    /// Query embedding; several rows are mean-pooled.
    #[arg(long)]
    query: PathBuf,
    /// mdp3, dpp, topk, uniform, mdp3-mgk or mdp3-cosine.
    #[arg(long, default_value = "mdp3")]
    method: String,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct BenchArgs {
    /// Generator spec, e.g. n=256,d=64,planted=16,segment=3,noise=0.1,seed=0.
    #[arg(long, default_value = "")]
    gen: String,
    /// Comma-separated methods; all by default.
    #[arg(long)]
    methods: Option<String>,
    /// Number of generator seeds.
    #[arg(long, default_value_t = 50)]
    seeds: usize,
    /// Frame counts of the timing grid, comma separated.
    #[arg(long, default_value = "2048,8192,32768")]
    grid: String,
    /// Skip the timing grid.
    #[arg(long)]
    no_timing: bool,
    #[command(flatten)]
    common: CommonArgs,
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| Error::Io { path: path.to_path_buf(), source: e }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run_select(args: &SelectArgs) -> Result<()> {
    let method: Method = args.method.parse()?;
    let config = args.common.run_config(method)?;
    let frames = read_embeddings(&args.frames)?;
    let query = read_embeddings(&args.query)?;
    let result = select_embeddings(&frames, &query, &config)?;
    let doc = ResultDocument::new(&config, frames.rows(), frames.dim(), &result);
    emit(args.common.out.as_deref(), &doc.to_json()?)
}

fn parse_list<T>(s: &str, what: &str, f: impl Fn(&str) -> Option<T>) -> Result<Vec<T>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| f(t).ok_or_else(|| Error::Config(format!("bad {what} `{t}`"))))
        .collect()
}

fn run_bench_cmd(args: &BenchArgs) -> Result<()> {
    let methods = match &args.methods {
        Some(s) => parse_list(s, "method", |t| t.parse::<Method>().ok())?,
        None => Method::ALL.to_vec(),
    };
    let grid = if args.no_timing { Vec::new() } else { parse_list(&args.grid, "grid size", |t| t.parse().ok())? };
    let cfg = BenchConfig {
        generator: GeneratorSpec::parse(&args.gen)?,
        methods,
        seeds: args.seeds,
        run: args.common.run_config(Method::Mdp3)?,
        grid,
        ..BenchConfig::default()
    };
    let report = run_bench(&cfg)?;
    let json = report.to_json()?;
    match &args.common.out {
        Some(path) => {
            print!("{}", report.render());
            emit(Some(path), &json)
        }
        None => {
            eprint!("{}", report.render());
            emit(None, &json)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (outcome, out) = match &cli.command {
        Command::Select(a) => (run_select(a), a.common.out.as_deref()),
        Command::Bench(a) => (run_bench_cmd(a), a.common.out.as_deref()),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            let doc = ErrorDocument::new(&err);
            if let Ok(json) = doc.to_json() {
                if emit(out, &json).is_err() {
                    print!("{json}");
                }
            }
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
