use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use semsel::experiment::{self, ExperimentConfig, Method};
use semsel::io::write_atomic;
use semsel::rankers::{LinearLoss, RankerKind};
use semsel::synthgen::{load_spec, write_synthetic, SynthSpec};
use semsel::{AccuracyMode, Error, ErrorClass};

#[derive(Parser, Debug)]
#[command(name = "semsel", version, about = "Semantic attribute selection for zero-shot learning")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "SEMSEL_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic bundle with planted relevant attributes.
    Synth {
        /// JSON synthetic spec; missing fields take defaults.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Build the fold plan over the seen classes.
    Partition(Common),
    /// Plain SAE with every attribute.
    Baseline(Common),
    /// Ranking-based selection with fold consensus.
    Rfs {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        ranker: Option<RankerArg>,
        /// Headline consensus threshold.
        #[arg(long)]
        threshold: Option<usize>,
        /// Evaluate every s-th prefix, then refine around the best.
        #[arg(long)]
        stride: Option<usize>,
    },
    /// Genetic search over attribute masks.
    Ga {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long)]
        generations: Option<usize>,
        #[arg(long)]
        pop_size: Option<usize>,
        /// Score masks on the first fold only.
        #[arg(long)]
        no_cv: bool,
    },
    /// Exhaustive search over all masks (at most 16 attributes).
    Oracle(Common),
    /// Merge report.json files from one bundle into a CSV.
    Compare {
        #[arg(required = true)]
        reports: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args, Debug)]
struct Common {
    /// Experiment config or a manifest.json from an earlier run.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    bundle: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    accuracy: Option<AccuracyArg>,
    /// Shuffle seen classes with this seed before cutting folds.
    #[arg(long, value_name = "SEED")]
    shuffle_classes: Option<u64>,
    #[arg(long)]
    normalize_prototypes: bool,
    #[arg(long)]
    normalize_features: bool,
    /// Also write timing.json.
    #[arg(long)]
    timing: bool,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum AccuracyArg {
    PerInstance,
    PerClass,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum RankerArg {
    Svm,
    Logistic,
    Forest,
    Random,
}

impl Common {
    fn resolve(&self, method: Option<Method>) -> Result<ExperimentConfig, Error> {
        let mut c = match &self.config {
            Some(p) => experiment::load_config(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(m) = method {
            c.method = m;
        }
        if let Some(b) = &self.bundle {
            c.bundle_path = b.clone();
        }
        if let Some(o) = &self.out {
            c.output_dir = o.clone();
        }
        if let Some(k) = self.k {
            c.k_folds = k;
        }
        if let Some(l) = self.lambda {
            c.lambda = l;
        }
        if let Some(s) = self.seed {
            c.master_seed = s;
        }
        if let Some(a) = self.accuracy {
            c.accuracy_mode = match a {
                AccuracyArg::PerInstance => AccuracyMode::PerInstance,
                AccuracyArg::PerClass => AccuracyMode::PerClass,
            };
        }
        if let Some(s) = self.shuffle_classes {
            c.shuffle_seed = Some(s);
        }
        c.normalize_prototypes |= self.normalize_prototypes;
        c.normalize_features |= self.normalize_features;
        c.record_timing |= self.timing;
        Ok(c)
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    #[cfg(feature = "parallel")]
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    }
    #[cfg(not(feature = "parallel"))]
    if cli.threads.is_some_and(|n| n > 1) {
        log::warn!("built without the parallel feature; --threads is ignored");
    }

    match cli.command {
        Command::Synth { spec, out, seed } => {
            let mut spec: SynthSpec = match spec {
                Some(p) => load_spec(&p)?,
                None => SynthSpec::default(),
            };
            if let Some(s) = seed {
                spec.seed = s;
            }
            let (_, truth) = write_synthetic(&spec, &out)?;
            println!("wrote {} ({} of {} attributes relevant)", out.display(), truth.count(), truth.len());
        }
        Command::Partition(common) => {
            let plan = experiment::run_partition(&common.resolve(Some(Method::Baseline))?)?;
            println!("{} folds over {} seen classes", plan.k, plan.n);
        }
        Command::Baseline(common) => report(&common.resolve(Some(Method::Baseline))?)?,
        Command::Oracle(common) => report(&common.resolve(Some(Method::Oracle))?)?,
        Command::Rfs { common, ranker, threshold, stride } => {
            let mut c = common.resolve(Some(Method::Rfs))?;
            if let Some(r) = ranker {
                c.ranker.kind = match r {
                    RankerArg::Svm => RankerKind::linear(),
                    RankerArg::Logistic => RankerKind::LinearCoef { loss: LinearLoss::Logistic, c: 1.0 },
                    RankerArg::Forest => RankerKind::forest(),
                    RankerArg::Random => RankerKind::Random,
                };
            }
            if let Some(t) = threshold {
                c.headline_threshold = t;
            }
            if stride.is_some() {
                c.stride = stride;
            }
            report(&c)?;
        }
        Command::Ga { common, runs, generations, pop_size, no_cv } => {
            let mut c = common.resolve(None)?;
            c.method = if no_cv || c.method == Method::GaNocv { Method::GaNocv } else { Method::Ga };
            if let Some(r) = runs {
                c.runs = r;
            }
            if let Some(g) = generations {
                c.ga.generations = g;
            }
            if let Some(p) = pop_size {
                c.ga.pop_size = p;
            }
            report(&c)?;
        }
        Command::Compare { reports, out } => {
            let csv = experiment::compare(&reports)?;
            write_atomic(&out, csv.as_bytes())?;
            print!("{csv}");
        }
    }
    Ok(())
}

fn report(config: &ExperimentConfig) -> Result<(), Error> {
    let r = experiment::run_experiment(config)?;
    print!("{}", r.to_csv());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.class() {
                ErrorClass::Config => 2,
                ErrorClass::Data => 3,
                ErrorClass::Numerical => 4,
            })
        }
    }
}
