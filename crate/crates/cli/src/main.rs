use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use rffmmd::harness::{
    bandwidth_for_mass, run_inconsistency_demo, run_power_sweep, run_timing_bench, theory_parameter_policy,
    write_results, BandwidthPolicy, ExperimentConfig, ExperimentRecord, OutputFormat, RPolicy, Sweep, TheoryPolicy,
};
use rffmmd::scenarios::{load_mnist, MnistStore, ScenarioSpec};
use rffmmd::{
    median_heuristic, sample_frequencies, validate_pair, EstimatorId, KernelSpec, PermutationPlan, RngStream,
    SampleSet, SignificanceLevel, TestContext,
};

#[derive(Parser)]
#[command(name = "rffmmd", version, about = "Kernel two-sample tests with random Fourier features")]
struct Cli {
    /// Worker threads for repetitions (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        }
    }
}

#[derive(Args)]
struct Output {
    /// Output file (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyKind {
    L2Rate,
    Mmd,
    GaussianClass,
}

#[derive(Clone, Copy, ValueEnum)]
enum FeaturePolicy {
    Fixed,
    LinearInN,
}

#[derive(Subcommand)]
enum Command {
    /// Run one permutation test on two CSV matrices and print the result as JSON.
    Test {
        /// First sample, one observation per row.
        x: PathBuf,
        /// Second sample.
        y: PathBuf,
        #[arg(long, short, default_value = "rff-u:200")]
        estimator: EstimatorId,
        /// Number of permutations.
        #[arg(long = "permutations", short = 'B', default_value_t = 199)]
        b: usize,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        /// Kernel bandwidth (default: median heuristic).
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Skip one header line in each input file.
        #[arg(long)]
        header: bool,
    },
    /// Power sweep from a JSON config file.
    Power {
        #[arg(long)]
        config: PathBuf,
        /// Override the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the number of repetitions.
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long)]
        mnist_images: Option<PathBuf>,
        #[arg(long)]
        mnist_labels: Option<PathBuf>,
        #[command(flatten)]
        output: Output,
    },
    /// Median time of one statistic evaluation per pooled size.
    Bench {
        #[arg(long, value_delimiter = ',', default_values_t = [500, 1000, 2000, 4000])]
        sizes: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_values = ["quad-u", "rff-u:200", "rff-u:1000"])]
        estimators: Vec<EstimatorId>,
        #[arg(long, default_value_t = 10)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: Output,
    },
    /// Fixed-feature tests on two tent-characteristic-function distributions.
    DemoInconsistency {
        /// Base config; its scenario, sweep and bandwidth are replaced.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 1.0)]
        delta1: f64,
        #[arg(long, default_value_t = 2.0)]
        delta2: f64,
        #[arg(long = "features", short = 'R', default_value_t = 3)]
        r: usize,
        #[arg(long, value_delimiter = ',', default_values_t = [200, 800, 3200])]
        n_grid: Vec<usize>,
        /// Kernel bandwidth (default: spectral mass 0.002 inside the support).
        #[arg(long)]
        bandwidth: Option<f64>,
        #[arg(long, value_delimiter = ',', default_values = ["rff-b:3", "rff-u:3"])]
        estimators: Vec<EstimatorId>,
        #[arg(long, value_enum, default_value = "fixed")]
        r_policy: FeaturePolicy,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        reps: Option<usize>,
        #[command(flatten)]
        output: Output,
    },
    /// Print the feature count and bandwidth a policy prescribes.
    Policy {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        d: usize,
        /// Smoothness, for the L2 rate.
        #[arg(long, default_value_t = 1.0)]
        s: f64,
        #[arg(long, value_enum, default_value = "l2-rate")]
        kind: PolicyKind,
        /// Bandwidth for the MMD policy.
        #[arg(long)]
        lambda: Option<f64>,
        /// Feature count for the Gaussian-class policy.
        #[arg(long, default_value_t = 10)]
        r: usize,
    },
}

fn read_matrix(path: &Path, header: bool) -> Result<SampleSet> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(header)
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("cannot open {}", path.display()))?;
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.with_context(|| format!("{}: bad CSV record {}", path.display(), i + 1))?;
        let row = rec
            .iter()
            .map(|f| f.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .with_context(|| format!("{}: row {} is not numeric", path.display(), i + 1))?;
        rows.push(row);
    }
    Ok(SampleSet::from_rows(&rows)?)
}

fn write_record(rec: &ExperimentRecord, output: &Output) -> Result<()> {
    match &output.out {
        Some(path) => {
            let f = fs::File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
            write_results(rec, io::BufWriter::new(f), output.format.into())?;
        }
        None => write_results(rec, io::stdout().lock(), output.format.into())?,
    }
    Ok(())
}

fn read_config(path: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    ExperimentConfig::from_json(&text).with_context(|| format!("invalid config {}", path.display()))
}

fn mnist_store(cfg: &ExperimentConfig, images: Option<PathBuf>, labels: Option<PathBuf>) -> Result<Option<Arc<MnistStore>>> {
    let ScenarioSpec::MnistMix { downsampled, .. } = cfg.scenario else {
        return Ok(None);
    };
    let (Some(images), Some(labels)) = (images, labels) else {
        bail!("the MNIST scenario needs --mnist-images and --mnist-labels");
    };
    let mut store = load_mnist(images, labels)?;
    if downsampled {
        store = store.with_downsampled()?;
    }
    Ok(Some(Arc::new(store)))
}

fn demo_config(base: Option<ExperimentConfig>, estimators: Vec<EstimatorId>, r_policy: FeaturePolicy) -> ExperimentConfig {
    base.unwrap_or_else(|| ExperimentConfig {
        scenario: ScenarioSpec::PolyaCf {
            delta_x: 1.0,
            delta_y: 2.0,
        },
        estimators,
        sweep: Sweep {
            param: "n".into(),
            values: Vec::new(),
        },
        n1: 2,
        n2: 2,
        b: 199,
        alpha: 0.05,
        repetitions: 200,
        seed: 0,
        bandwidth: BandwidthPolicy::default(),
        r_policy: match r_policy {
            FeaturePolicy::Fixed => RPolicy::Fixed,
            FeaturePolicy::LinearInN => RPolicy::LinearInN,
        },
    })
}

fn run(cli: Cli) -> Result<()> {
    if let Some(k) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(k).build_global()?;
    }
    match cli.command {
        Command::Test {
            x,
            y,
            estimator,
            b,
            alpha,
            lambda,
            seed,
            header,
        } => {
            let (x, y) = (read_matrix(&x, header)?, read_matrix(&y, header)?);
            let pooled = validate_pair(&x, &y)?;
            let root = RngStream::derive(seed, "test");
            let spec = match lambda {
                Some(l) => KernelSpec::isotropic(pooled.d(), l)?,
                None => median_heuristic(&pooled, rffmmd::kernels::MEDIAN_HEURISTIC_CAP, &root.child("bandwidth"))?,
            };
            let mut plan = PermutationPlan::new(b, root.child("perm"), SignificanceLevel::new(alpha)?)?;
            plan.retain = false;
            let freqs = match estimator.num_features() {
                Some(r) => Some(sample_frequencies(&spec, r, &root.child("freq"))?),
                None => None,
            };
            let res = TestContext::new(&pooled, &spec, plan)?.run(estimator, freqs.as_ref())?;
            let mut out = io::stdout().lock();
            serde_json::to_writer_pretty(&mut out, &res)?;
            writeln!(out)?;
        }
        Command::Power {
            config,
            seed,
            reps,
            mnist_images,
            mnist_labels,
            output,
        } => {
            let mut cfg = read_config(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(r) = reps {
                cfg.repetitions = r;
            }
            let store = mnist_store(&cfg, mnist_images, mnist_labels)?;
            write_record(&run_power_sweep(&cfg, store)?, &output)?;
        }
        Command::Bench {
            sizes,
            estimators,
            reps,
            seed,
            output,
        } => write_record(&run_timing_bench(&sizes, &estimators, reps, seed)?, &output)?,
        Command::DemoInconsistency {
            config,
            delta1,
            delta2,
            r,
            n_grid,
            bandwidth,
            estimators,
            r_policy,
            seed,
            reps,
            output,
        } => {
            let base = config.as_deref().map(read_config).transpose()?;
            let mut cfg = demo_config(base, estimators, r_policy);
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(k) = reps {
                cfg.repetitions = k;
            }
            let lambda = bandwidth.unwrap_or_else(|| bandwidth_for_mass(0.002, 1.0 / delta1.min(delta2)));
            write_record(&run_inconsistency_demo(delta1, delta2, r, &n_grid, lambda, &cfg)?, &output)?;
        }
        Command::Policy {
            n,
            d,
            s,
            kind,
            lambda,
            r,
        } => {
            let policy = match kind {
                PolicyKind::L2Rate => TheoryPolicy::L2Rate { s },
                PolicyKind::Mmd => TheoryPolicy::Mmd { lambda },
                PolicyKind::GaussianClass => TheoryPolicy::GaussianClass { r },
            };
            let choice = theory_parameter_policy(policy, n, d)?;
            println!("{}", serde_json::to_string(&choice)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
