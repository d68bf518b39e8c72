use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use srld_bench::config::{parse_target, ConfigError, ExperimentConfig, MethodEntry};
use srld_bench::experiment::{initial_state, run_experiment, ExperimentError, PAIRED_METRICS};
use srld_bench::report::{emit_reports, MetricsDocument};
use srld_bench::trace_csv::{read_samples, write_trace};
use srld_core::diagnostics::{evaluate, EvalOptions, W1Mode};
use srld_core::dynamics::{run_chain, GeneralDynamics, Method};
use srld_core::kernel::BandwidthPolicy;
use srld_core::stein::{square_grid, stein_identity_residual};
use srld_core::targets::{make_target, TargetSpec};

/// Self-repulsive Langevin dynamics: sampling, paired comparisons and diagnostics.
#[derive(Parser, Debug)]
#[command(name = "srld", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Seed for chains and draws (for `compare`, replaces the config's seed list)
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Experiment config (JSON); see configs/ for examples
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output directory; without it `sample` and `diagnose` print to stdout
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one chain and write its trace CSV
    Sample(SampleArgs),
    /// Run a paired experiment from a config file and emit reports
    Compare,
    /// Score an existing trace CSV against a reference CSV
    Diagnose(DiagnoseArgs),
    /// Tabulate the Stein-identity residual under exact target samples
    SteinCheck(SteinArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum MethodArg {
    Langevin,
    Srld,
    General,
}

#[derive(Args, Debug)]
struct SampleArgs {
    /// Target: banana | gaussian:d=N[,var=V] | mixture:d=N[,offset=O][,var=V]
    #[arg(long)]
    target: Option<String>,
    /// Update rule
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    /// Method entry to take from --config (default: the first)
    #[arg(long)]
    entry: Option<String>,
    /// Step size eta
    #[arg(long)]
    step_size: Option<f64>,
    /// Repulsion strength alpha
    #[arg(long)]
    alpha: Option<f64>,
    /// Number of past samples M
    #[arg(long)]
    window: Option<usize>,
    /// Iterations between referenced past samples (c_eta)
    #[arg(long)]
    thinning: Option<usize>,
    /// Total iterations
    #[arg(long)]
    steps: Option<usize>,
    /// Kernel bandwidth: `median` or `fixed:<sigma>`
    #[arg(long)]
    bandwidth: Option<String>,
    /// Keep every n-th state in the trace
    #[arg(long)]
    keep_every: Option<usize>,
    /// Starting point as comma-separated coordinates (default: standard normal draw from the seed)
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    theta0: Option<Vec<f64>>,
    /// Strength of the rotational curl Q for `--method general` (D = I)
    #[arg(long, default_value_t = 0.0)]
    curl: f64,
}

#[derive(Args, Debug)]
struct DiagnoseArgs {
    /// Chain trace CSV (`iter,x0,...,phase` or plain numeric rows)
    #[arg(long)]
    trace: PathBuf,
    /// Reference sample CSV
    #[arg(long)]
    reference: PathBuf,
    /// Drop trace rows whose iter is below this
    #[arg(long, default_value_t = 0)]
    burnin: usize,
    /// Largest autocorrelation lag (default: the config's reporting.max_lag, else 50)
    #[arg(long)]
    max_lag: Option<usize>,
    /// Points per side entering MMD and W1 (default: reporting.metric_points, else 500)
    #[arg(long)]
    metric_points: Option<usize>,
    /// Fixed MMD bandwidth (default: median rule on the pooled points)
    #[arg(long)]
    mmd_bandwidth: Option<f64>,
}

#[derive(Args, Debug)]
struct SteinArgs {
    /// Two-dimensional target with an exact sampler
    #[arg(long, default_value = "gaussian:d=2")]
    target: String,
    /// Sample sizes, comma-separated
    #[arg(long, value_delimiter = ',', default_value = "1000,10000,100000")]
    n: Vec<usize>,
    /// Grid points per side on [lo, hi]^2
    #[arg(long, default_value_t = 5)]
    grid: usize,
    /// Lower grid bound
    #[arg(long, default_value_t = -2.0, allow_hyphen_values = true)]
    lo: f64,
    /// Upper grid bound
    #[arg(long, default_value_t = 2.0, allow_hyphen_values = true)]
    hi: f64,
    /// Kernel bandwidth sigma
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
}

enum Failure {
    Config(ConfigError),
    Other(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Other(e)
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e)
    }
}

impl From<ExperimentError> for Failure {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Config(c) => Failure::Config(c),
            other => Failure::Other(other.into()),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let result = match &cli.command {
        Command::Sample(a) => sample(&cli, a),
        Command::Compare => compare(&cli),
        Command::Diagnose(a) => diagnose(&cli, a),
        Command::SteinCheck(a) => stein_check(&cli, a),
    };
    match result {
        Ok(code) => code,
        Err(Failure::Config(e)) => {
            eprintln!("error: config: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Other(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn load_config(cli: &Cli) -> Result<Option<ExperimentConfig>, ConfigError> {
    cli.config.as_deref().map(ExperimentConfig::load).transpose()
}

/// Writes to `<out>/<name>` when `--out` is set, else to stdout.
fn output(cli: &Cli, name: &str) -> anyhow::Result<Box<dyn Write>> {
    match &cli.out {
        Some(dir) => {
            fs::create_dir_all(dir).with_context(|| dir.display().to_string())?;
            let path = dir.join(name);
            let f = fs::File::create(&path).with_context(|| path.display().to_string())?;
            Ok(Box::new(BufWriter::new(f)))
        }
        None => Ok(Box::new(BufWriter::new(io::stdout().lock()))),
    }
}

fn sample(cli: &Cli, a: &SampleArgs) -> Result<ExitCode, Failure> {
    let cfg = load_config(cli)?;
    let entry: Option<MethodEntry> = match (&cfg, &a.entry) {
        (Some(c), Some(name)) => Some(
            c.method(name)
                .cloned()
                .ok_or_else(|| ConfigError::Invalid {
                    field: "entry".into(),
                    reason: format!("no method `{name}` in config"),
                })?,
        ),
        (Some(c), None) => c.methods.first().cloned(),
        (None, Some(_)) => return Err(anyhow::anyhow!("--entry needs --config").into()),
        (None, None) => None,
    };
    let spec: TargetSpec = match (&a.target, &cfg) {
        (Some(t), _) => parse_target(t)?,
        (None, Some(c)) => c.target.clone(),
        (None, None) => return Err(anyhow::anyhow!("--target is required without --config").into()),
    };
    let target = make_target(&spec).context("target")?;
    let dim = target.dim();

    let mut s = entry.as_ref().map(|e| e.sampler.clone()).unwrap_or_default();
    if let Some(v) = a.step_size {
        s.step_size = v;
    }
    if let Some(v) = a.alpha {
        s.alpha = v;
    }
    if let Some(v) = a.window {
        s.window = v;
    }
    if let Some(v) = a.thinning {
        s.thinning = v;
    }
    if let Some(v) = a.steps {
        s.total_steps = v;
    }
    if let Some(v) = a.keep_every {
        s.keep_every = v;
    }
    if let Some(b) = &a.bandwidth {
        s.bandwidth = BandwidthPolicy::try_from(b.clone()).map_err(|e| anyhow::anyhow!("--bandwidth: {e}"))?;
    }
    s.seed = cli.seed.unwrap_or(0);

    let method = match (a.method, &entry) {
        (Some(MethodArg::Langevin), _) => Method::Langevin,
        (Some(MethodArg::Srld), _) => Method::Srld,
        (Some(MethodArg::General), _) => Method::General(GeneralDynamics::rotational(dim, a.curl).context("--curl")?),
        (None, Some(e)) => e.build_method(dim)?,
        (None, None) => Method::Srld,
    };
    let pinned = a.theta0.as_deref().or(cfg.as_ref().and_then(|c| c.theta0.as_deref()));
    let theta0 = initial_state(pinned, dim, s.seed);
    let trace = run_chain(&method, &target, &s, &theta0).context("chain")?;
    let out = output(cli, "trace.csv")?;
    write_trace(&trace, out).context("writing trace")?;
    Ok(ExitCode::SUCCESS)
}

fn compare(cli: &Cli) -> Result<ExitCode, Failure> {
    let Some(mut cfg) = load_config(cli)? else {
        return Err(anyhow::anyhow!("compare needs --config <path>").into());
    };
    if let Some(seed) = cli.seed {
        cfg.seeds = vec![seed];
    }
    if let Some(out) = &cli.out {
        cfg.outputs = out.clone();
    }
    let result = run_experiment(&cfg)?;
    let written = emit_reports(&result, &cfg.outputs).context("writing reports")?;
    print_summary(&MetricsDocument::from_result(&result));
    eprintln!("wrote {} files under {}", written.len(), cfg.outputs.display());
    if result.all_failed() {
        eprintln!("error: every seed failed");
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}

fn print_summary(doc: &MetricsDocument) {
    let mut text = format!("target {}  seeds {}  reference {}\n", doc.target, doc.seeds.len(), doc.reference_source);
    text += &format!("{:<16}{:>10}", "method", "eta");
    for m in PAIRED_METRICS {
        text += &format!("{m:>14}");
    }
    text.push('\n');
    for name in &doc.methods {
        text += &format!("{name:<16}{:>10.3e}", doc.step_sizes[name]);
        for m in PAIRED_METRICS {
            match doc.aggregate.medians[name][m] {
                Some(v) => text += &format!("{v:>14.5}"),
                None => text += &format!("{:>14}", "-"),
            }
        }
        text.push('\n');
    }
    for (pair, ps) in &doc.aggregate.sign_test_p {
        text += &format!("{:<26}", format!("p({pair})"));
        for m in PAIRED_METRICS {
            text += &format!("{:>14.3e}", ps[m]);
        }
        text.push('\n');
    }
    // a closed pipe is not an error here
    let _ = io::stdout().lock().write_all(text.as_bytes());
}

fn read_csv(path: &Path, skip_below: usize) -> anyhow::Result<srld_core::SampleMatrix> {
    let text = fs::read_to_string(path).with_context(|| path.display().to_string())?;
    read_samples(&text, skip_below).with_context(|| path.display().to_string())
}

fn diagnose(cli: &Cli, a: &DiagnoseArgs) -> Result<ExitCode, Failure> {
    let reporting = load_config(cli)?.map(|c| c.reporting).unwrap_or_default();
    let x = read_csv(&a.trace, a.burnin)?;
    let y = read_csv(&a.reference, 0)?;
    let opts = EvalOptions {
        max_lag: a.max_lag.unwrap_or(reporting.max_lag),
        metric_points: a.metric_points.unwrap_or(reporting.metric_points),
        moment_window: reporting.moment_window,
        mmd_bandwidth: a.mmd_bandwidth.or(reporting.mmd_bandwidth),
        w1_mode: W1Mode::Auto,
    };
    let report = evaluate(&x, &y, &opts).context("evaluating trace")?;
    let mut out = output(cli, "diagnose.json")?;
    let json = serde_json::to_string_pretty(&report).context("serializing report")?;
    writeln!(out, "{json}").context("writing report")?;
    out.flush().context("writing report")?;
    Ok(ExitCode::SUCCESS)
}

fn stein_check(cli: &Cli, a: &SteinArgs) -> Result<ExitCode, Failure> {
    let spec = match (&cli.config, a.target.as_str()) {
        (Some(_), "gaussian:d=2") => load_config(cli)?.expect("config given").target,
        (_, t) => parse_target(t)?,
    };
    let target = make_target(&spec).context("target")?;
    if target.dim() != 2 {
        return Err(anyhow::anyhow!("stein-check uses a 2-D grid; target has dimension {}", target.dim()).into());
    }
    let grid = square_grid(a.grid, a.lo, a.hi);
    let seed = cli.seed.unwrap_or(0);
    let mut out = output(cli, "stein.csv")?;
    writeln!(out, "n,max,median,mean").context("writing table")?;
    for &n in &a.n {
        let mut r = stein_identity_residual(&target, n, &grid, a.sigma, seed).with_context(|| format!("n = {n}"))?;
        let mean = r.iter().sum::<f64>() / r.len() as f64;
        r.sort_by(f64::total_cmp);
        let med = r[r.len() / 2];
        writeln!(out, "{n},{},{med},{mean}", r[r.len() - 1]).context("writing table")?;
    }
    out.flush().context("writing table")?;
    Ok(ExitCode::SUCCESS)
}
