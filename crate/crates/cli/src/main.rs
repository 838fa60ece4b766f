use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fnmf_core::experiment::{
    self, write_grid_csv, write_json, write_run_outputs, write_sweep_csv, DEFAULT_GRID,
};
use fnmf_core::{
    generate_three_gaussian, write_csv, DataSource, ExperimentSpec, FnmfError, LabelColumn, Method,
    NoiseSpec, PMode, SolverConfig,
};

#[derive(Parser, Debug)]
#[command(
    name = "fnmf",
    version,
    about = "Feature-weighted NMF clustering experiments"
)]
struct Cli {
    /// Worker threads for repeated solves (defaults to all cores).
    #[arg(long, global = true, env = "FNMF_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write the three-Gaussian toy set as CSV (features then a `label` column).
    Synth {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Repeated solves with clustering scores.
    Run(RunArgs),
    /// Grid search over lambda and beta.
    Grid {
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated lambda values.
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_GRID.to_vec())]
        lambdas: Vec<f64>,
        /// Comma-separated beta values.
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_GRID.to_vec())]
        betas: Vec<f64>,
    },
    /// One run per component count.
    SweepM {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long = "m-values", value_delimiter = ',', default_values_t = vec![1, 2, 3, 4, 5])]
        m_values: Vec<usize>,
    },
    /// Corrupt the data, then run.
    Noise {
        #[command(flatten)]
        run: RunArgs,
        /// Append uniform noise features; without a value, a third of the feature count.
        #[arg(long, num_args = 0..=1, default_missing_value = "auto")]
        noise_dims: Option<NoiseCount>,
        /// Image size `HxW` for block occlusion (pixels stored row-major).
        #[arg(long, requires = "block")]
        occlusion: Option<Shape>,
        /// Side length of the occluding block.
        #[arg(long, requires = "occlusion")]
        block: Option<usize>,
        #[arg(long, default_value_t = 0)]
        noise_seed: u64,
    },
}

#[derive(Args, Debug, Clone)]
struct RunArgs {
    /// CSV path (one sample per row) or `synthetic[:SEED]`.
    #[arg(long)]
    data: String,
    /// Label column: `last`, `none` or a 0-based index.
    #[arg(long, default_value = "last")]
    label_column: LabelArg,
    /// The CSV starts with a header row.
    #[arg(long)]
    header: bool,
    #[arg(long, value_enum, default_value_t = MethodArg::Fnmf)]
    method: MethodArg,
    #[arg(long, default_value_t = 3)]
    c: usize,
    #[arg(long, default_value_t = 3)]
    m: usize,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    #[arg(long, default_value_t = 5)]
    k_neighbors: usize,
    #[arg(long, default_value_t = 20)]
    repeats: usize,
    /// Seed of the first repeat; repeat r uses seed + r.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 200)]
    max_iters: usize,
    #[arg(long, default_value_t = 1e-6)]
    rel_tol: f64,
    #[arg(long, value_enum, default_value_t = PModeArg::PerSample)]
    p_mode: PModeArg,
    #[arg(long, default_value_t = 20)]
    kmeans_restarts: usize,
    /// Skip unit-norm normalization of the samples.
    #[arg(long)]
    no_normalize: bool,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Fnmf,
    Nmf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PModeArg {
    PerSample,
    PaperLiteral,
}

#[derive(Debug, Clone, Copy)]
struct LabelArg(LabelColumn);

impl FromStr for LabelArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "last" => Ok(LabelArg(LabelColumn::Last)),
            "none" => Ok(LabelArg(LabelColumn::None)),
            _ => s
                .parse()
                .map(|i| LabelArg(LabelColumn::Index(i)))
                .map_err(|_| format!("expected `last`, `none` or a column index, got `{s}`")),
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum NoiseCount {
    Auto,
    Count(usize),
}

impl FromStr for NoiseCount {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "auto" {
            return Ok(NoiseCount::Auto);
        }
        s.parse()
            .map(NoiseCount::Count)
            .map_err(|_| format!("expected a feature count, got `{s}`"))
    }
}

#[derive(Debug, Clone, Copy)]
struct Shape {
    height: usize,
    width: usize,
}

impl FromStr for Shape {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || format!("expected HxW, got `{s}`");
        let (h, w) = s.split_once(['x', 'X']).ok_or_else(err)?;
        Ok(Shape {
            height: h.trim().parse().map_err(|_| err())?,
            width: w.trim().parse().map_err(|_| err())?,
        })
    }
}

fn data_source(args: &RunArgs) -> Result<DataSource, FnmfError> {
    if let Some(rest) = args.data.strip_prefix("synthetic") {
        let seed = match rest.strip_prefix(':') {
            Some(s) => s
                .parse()
                .map_err(|_| FnmfError::Domain(format!("bad synthetic seed in `{}`", args.data)))?,
            None if rest.is_empty() => 0,
            None => return Ok(csv_source(args)),
        };
        return Ok(DataSource::Synthetic { seed });
    }
    Ok(csv_source(args))
}

fn csv_source(args: &RunArgs) -> DataSource {
    DataSource::Csv {
        path: PathBuf::from(&args.data),
        label_column: args.label_column.0,
        has_header: args.header,
    }
}

fn spec_from(args: &RunArgs) -> Result<ExperimentSpec, FnmfError> {
    let solver = SolverConfig {
        c: args.c,
        m: args.m,
        lambda: args.lambda,
        beta: args.beta,
        max_iters: args.max_iters,
        rel_tol: args.rel_tol,
        p_mode: match args.p_mode {
            PModeArg::PerSample => PMode::PerSample,
            PModeArg::PaperLiteral => PMode::PaperLiteral,
        },
        seed: args.seed,
        ..SolverConfig::default()
    };
    let spec = ExperimentSpec {
        source: data_source(args)?,
        method: match args.method {
            MethodArg::Fnmf => Method::Fnmf,
            MethodArg::Nmf => Method::Nmf,
        },
        solver,
        k_neighbors: args.k_neighbors,
        repeats: args.repeats,
        kmeans_restarts: args.kmeans_restarts,
        normalize: !args.no_normalize,
        noise: Vec::new(),
    };
    spec.validate()?;
    Ok(spec)
}

fn ensure_dir(dir: &Path) -> Result<(), FnmfError> {
    fs::create_dir_all(dir).map_err(|source| FnmfError::Io {
        path: dir.to_path_buf(),
        source,
    })
}

fn summarize(record: &fnmf_core::ResultRecord) -> String {
    format!(
        "{} ACC {:.4} ± {:.4}  NMI {:.4} ± {:.4}  ({} repeats, {:.1} iterations on average)",
        record.method,
        record.acc_mean,
        record.acc_std,
        record.nmi_mean,
        record.nmi_std,
        record.repeats.len(),
        record.mean_iterations
    )
}

fn run_command(command: Command) -> Result<(), FnmfError> {
    match command {
        Command::Synth { seed, out } => {
            write_csv(&generate_three_gaussian(seed), &out)?;
            println!("wrote {}", out.display());
        }
        Command::Run(args) => {
            let spec = spec_from(&args)?;
            ensure_dir(&args.out)?;
            let output = experiment::run(&spec)?;
            write_run_outputs(&output, &args.out)?;
            println!("{}", summarize(&output.record));
        }
        Command::Grid {
            run,
            lambdas,
            betas,
        } => {
            let spec = spec_from(&run)?;
            ensure_dir(&run.out)?;
            let grid = experiment::grid_search(&spec, &lambdas, &betas)?;
            write_grid_csv(&grid.table, run.out.join("grid.csv"))?;
            write_run_outputs(&grid.best, &run.out)?;
            let best = &grid.best.record.config.solver;
            println!(
                "best lambda {} beta {}: {}",
                best.lambda,
                best.beta,
                summarize(&grid.best.record)
            );
        }
        Command::SweepM { run, m_values } => {
            let spec = spec_from(&run)?;
            ensure_dir(&run.out)?;
            let outputs = experiment::sweep_m(&spec, &m_values)?;
            for out in &outputs {
                let m = out.record.config.solver.m;
                write_run_outputs(out, run.out.join(format!("m_{m}")))?;
                println!("m = {m}: {}", summarize(&out.record));
            }
            let records: Vec<_> = outputs.into_iter().map(|o| o.record).collect();
            write_sweep_csv(&records, run.out.join("sweep_m.csv"))?;
        }
        Command::Noise {
            run,
            noise_dims,
            occlusion,
            block,
            noise_seed,
        } => {
            let mut spec = spec_from(&run)?;
            if let Some(count) = noise_dims {
                spec.noise.push(NoiseSpec::Dims {
                    count: match count {
                        NoiseCount::Auto => None,
                        NoiseCount::Count(c) => Some(c),
                    },
                    seed: noise_seed,
                });
            }
            if let (Some(shape), Some(block)) = (occlusion, block) {
                spec.noise.push(NoiseSpec::Block {
                    height: shape.height,
                    width: shape.width,
                    block,
                    seed: noise_seed,
                });
            }
            if spec.noise.is_empty() {
                return Err(FnmfError::Domain(
                    "noise needs --noise-dims or --occlusion/--block".into(),
                ));
            }
            ensure_dir(&run.out)?;
            let output = experiment::run(&spec)?;
            write_run_outputs(&output, &run.out)?;
            write_json(&spec.noise, run.out.join("noise.json"))?;
            println!("{}", summarize(&output.record));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(threads) = cli.threads.filter(|&t| t > 0) {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            log::warn!("could not size the worker pool: {e}");
        }
    }
    match run_command(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
