use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use hhtx::asymptotic::{asymptotic_test, truncate_to_exposure};
use hhtx::io::{
    parse_distribution, read_line_list, write_line_list, DistributionEcho, LineList, PowerConfig, SimulationTruth,
    TestConfigEcho, TestReport, SCHEMA_VERSION,
};
use hhtx::likelihood::Alternative;
use hhtx::model::{Day, DerivedMeasures, Population, StudyConfig, TransmissionParams};
use hhtx::power::{power_study, write_power_csv};
use hhtx::resampling::{permutation_test, PermutationOptions, ResampleMethod};
use hhtx::simulator::{simulate_epidemic, SimConfig};
use hhtx::streams::stream;
use hhtx::Error;

const EXIT_VALIDATION: u8 = 2;
const EXIT_TEST_FAILURE: u8 = 3;

/// Test household symptom-onset data for person-to-person transmission.
#[derive(Parser)]
#[command(name = "hhtx", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a transmission test on a line list and print a JSON report.
    Test(TestArgs),
    /// Simulate outbreaks and write one line list per run.
    Simulate(SimulateArgs),
    /// Estimate power over a parameter grid and write a CSV.
    Power(PowerArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Simple,
    Refined,
    Asymptotic,
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    /// Free `b`, `p1` and `p2`.
    Full,
    /// `p2` fixed at zero.
    Household,
}

impl From<Model> for Alternative {
    fn from(m: Model) -> Self {
        match m {
            Model::Full => Alternative::Full,
            Model::Household => Alternative::HouseholdOnly,
        }
    }
}

#[derive(Args)]
struct TestArgs {
    /// Line list CSV with columns person_id,household_id,onset_day.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "refined")]
    method: Method,
    #[arg(long, default_value_t = 2000)]
    permutations: usize,
    /// Last day of common-source exposure; defaults to the latest onset.
    #[arg(long)]
    s_days: Option<Day>,
    /// Observation horizon T; defaults to max(latest onset, S) plus the longest latent period.
    #[arg(long)]
    horizon: Option<Day>,
    /// Latent period, MIN:MAX or MIN:MAX:w1,w2,...
    #[arg(long)]
    latent: String,
    /// Infectious period, MIN:MAX or MIN:MAX:w1,w2,...
    #[arg(long)]
    infectious: String,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Count never-symptomatic persons as escaping through T rather than T minus the longest latent period.
    #[arg(long = "censor-full-T")]
    censor_full_t: bool,
    /// Report (1 + exceedances) / (1 + replicates).
    #[arg(long)]
    addone_pvalue: bool,
    #[arg(long, value_enum, default_value = "full")]
    model: Model,
    /// Use only data observed up to day S.
    #[arg(long)]
    truncate_at_s: bool,
    #[arg(long)]
    workers: Option<usize>,
    /// Write the report here instead of standard output.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, default_value_t = 100)]
    households: usize,
    #[arg(long, default_value_t = 5)]
    household_size: usize,
    #[arg(long, default_value_t = 30)]
    s_days: Day,
    #[arg(long)]
    b: f64,
    #[arg(long, default_value_t = 0.0)]
    p1: f64,
    #[arg(long, default_value_t = 0.0)]
    p2: f64,
    #[arg(long, default_value = "1:3")]
    latent: String,
    #[arg(long, default_value = "3:5")]
    infectious: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    runs: u64,
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct PowerArgs {
    /// key = value file; flags given on the command line take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated list.
    #[arg(long)]
    b: Option<String>,
    #[arg(long)]
    p1: Option<String>,
    #[arg(long)]
    p2: Option<String>,
    #[arg(long)]
    households: Option<String>,
    #[arg(long)]
    household_size: Option<String>,
    #[arg(long)]
    s_days: Option<String>,
    #[arg(long)]
    latent: Option<String>,
    #[arg(long)]
    infectious: Option<String>,
    #[arg(long)]
    n_sims: Option<String>,
    #[arg(long)]
    n_perms: Option<String>,
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long, value_parser = ["simple", "refined", "asymptotic"])]
    method: Option<String>,
    #[arg(long, value_parser = ["full", "household"])]
    model: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    addone_pvalue: bool,
    #[arg(long)]
    workers: Option<usize>,
    /// Write the CSV here instead of standard output.
    #[arg(long)]
    output: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Test(args) => run_test(args),
        Command::Simulate(args) => run_simulate(args),
        Command::Power(args) => run_power(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::NullInadmissible
        | Error::FitFailed(_)
        | Error::ReplicateFailures { .. }
        | Error::InfeasibleArrangement { .. }
        | Error::NoInfections(_) => EXIT_TEST_FAILURE,
        _ => EXIT_VALIDATION,
    }
}

fn with_workers<T: Send>(workers: Option<usize>, job: impl FnOnce() -> hhtx::Result<T> + Send) -> hhtx::Result<T> {
    match workers {
        None => job(),
        Some(0) => Err(Error::Config("--workers must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("cannot start {n} workers: {e}")))?
            .install(job),
    }
}

fn output_writer(path: Option<&Path>) -> hhtx::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn run_test(args: TestArgs) -> hhtx::Result<()> {
    if args.permutations < 1 {
        return Err(Error::Config("--permutations must be at least 1".into()));
    }
    if !(args.alpha > 0.0 && args.alpha < 1.0) {
        return Err(Error::Config(format!("--alpha must lie in (0, 1), got {}", args.alpha)));
    }
    let latent = parse_distribution(&args.latent)?;
    let infectious = parse_distribution(&args.infectious)?;
    let list = read_line_list(File::open(&args.input)?)?;
    let max_onset = list.max_onset();
    let s = match (args.s_days, max_onset) {
        (Some(s), _) => s,
        (None, Some(m)) => m,
        (None, None) => return Err(Error::Config("no onsets in the line list; --s-days is required".into())),
    };
    let horizon = args.horizon.unwrap_or_else(|| max_onset.unwrap_or(0).max(s) + latent.max_days());
    let config = StudyConfig::new(s, horizon, latent, infectious)?.with_censoring(!args.censor_full_t);
    let outbreak = list.outbreak(config)?;

    let alternative = match args.method {
        Method::Asymptotic => Alternative::HouseholdOnly,
        _ => args.model.into(),
    };
    let truncate = args.truncate_at_s || matches!(args.method, Method::Asymptotic);
    let analysed = if truncate { truncate_to_exposure(&outbreak) } else { outbreak };
    let result = with_workers(args.workers, || match args.method {
        Method::Asymptotic => asymptotic_test(&analysed),
        Method::Simple | Method::Refined => {
            let method = if matches!(args.method, Method::Simple) { ResampleMethod::Simple } else { ResampleMethod::Refined };
            let mut options = PermutationOptions::new(method, args.permutations, args.seed).with_alternative(alternative);
            options.add_one = args.addone_pvalue;
            permutation_test(&analysed, &options)
        }
    })?;

    let cfg = analysed.config();
    let echo = TestConfigEcho {
        input: args.input.display().to_string(),
        method: args.method.to_possible_value().expect("named").get_name().to_string(),
        model: alternative,
        permutations: if matches!(args.method, Method::Asymptotic) { 0 } else { args.permutations },
        exposure_days: cfg.exposure_days,
        horizon: cfg.horizon,
        latent: DistributionEcho::from(&cfg.latent),
        infectious: DistributionEcho::from(&cfg.infectious),
        censor_full_horizon: args.censor_full_t,
        truncate_at_s: truncate,
        alpha: args.alpha,
        addone_pvalue: args.addone_pvalue,
        seed: args.seed,
    };
    let report = TestReport::new(&result, &analysed, echo);
    let mut out = output_writer(args.output.as_deref())?;
    serde_json::to_writer_pretty(&mut out, &report)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

fn run_simulate(args: SimulateArgs) -> hhtx::Result<()> {
    let latent = parse_distribution(&args.latent)?;
    let infectious = parse_distribution(&args.infectious)?;
    let params = TransmissionParams::new(args.b, args.p1, args.p2)?;
    if params.b <= 0.0 {
        return Err(Error::Params("--b must be positive for an epidemic to start".into()));
    }
    let population = Arc::new(Population::uniform(args.households, args.household_size)?);
    let sim = SimConfig::new(args.s_days, latent.clone(), infectious.clone());
    fs::create_dir_all(&args.out_dir)?;
    let derived = DerivedMeasures::new(&params, args.s_days, &infectious, &population);

    with_workers(args.workers, || {
        (0..args.runs).into_par_iter().try_for_each(|run| {
            let outcome = simulate_epidemic(&population, &sim, &params, &mut stream(args.seed, &[run]))?;
            let stem = format!("run_{run:04}");
            let list = LineList::from_outbreak(&outcome.outbreak);
            write_line_list(&list, BufWriter::new(File::create(args.out_dir.join(format!("{stem}.csv")))?))?;
            let truth = SimulationTruth {
                schema_version: SCHEMA_VERSION,
                run,
                seed: args.seed,
                params,
                derived,
                n_index: outcome.n_index,
                n_total: outcome.n_total,
                affected_households: outcome.affected_households,
                exhaustion_day: outcome.exhaustion_day,
                exposure_days: args.s_days,
                horizon: outcome.outbreak.config().horizon,
                households: args.households,
                household_size: args.household_size,
                latent: DistributionEcho::from(&latent),
                infectious: DistributionEcho::from(&infectious),
            };
            let mut w = BufWriter::new(File::create(args.out_dir.join(format!("{stem}.truth.json")))?);
            serde_json::to_writer_pretty(&mut w, &truth)?;
            writeln!(w)?;
            w.flush()?;
            Ok(())
        })
    })
}

fn run_power(args: PowerArgs) -> hhtx::Result<()> {
    let mut config = match &args.config {
        Some(path) => PowerConfig::parse(&fs::read_to_string(path)?)?,
        None => PowerConfig::default(),
    };
    let overrides = [
        ("b", &args.b),
        ("p1", &args.p1),
        ("p2", &args.p2),
        ("households", &args.households),
        ("household_size", &args.household_size),
        ("s_days", &args.s_days),
        ("latent", &args.latent),
        ("infectious", &args.infectious),
        ("n_sims", &args.n_sims),
        ("n_perms", &args.n_perms),
        ("alpha", &args.alpha),
        ("method", &args.method),
        ("model", &args.model),
        ("seed", &args.seed),
    ];
    for (key, value) in overrides {
        if let Some(v) = value {
            config.set(key, v)?;
        }
    }
    if args.addone_pvalue {
        config.add_one = true;
    }
    let workers = args.workers.or(config.workers);
    let study = config.study()?;
    let cells = with_workers(workers, || {
        power_study(&study, |done, total| eprintln!("power: cell {done}/{total} done"))
    })?;
    for c in cells.iter().filter(|c| c.failed_runs > 0) {
        eprintln!("power: b={} p1={} p2={}: {} runs failed and were excluded", c.b, c.p1, c.p2, c.failed_runs);
    }
    let mut out = output_writer(args.output.as_deref())?;
    write_power_csv(&cells, &mut out)?;
    out.flush()?;
    Ok(())
}
