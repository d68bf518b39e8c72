//! Seed sweeps over several samplers, scored against a shared reference.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use srld_core::diagnostics::{evaluate, EvalOptions, MetricReport, W1Mode};
use srld_core::dynamics::{match_step_sizes, run_chain, Method, SamplerConfig, Trace};
use srld_core::kernel::median_bandwidth;
use srld_core::rng::{self, split_seed};
use srld_core::targets::{make_target, TargetModel};
use srld_core::SampleMatrix;

use crate::config::{ConfigError, ExperimentConfig, Pairing};
use crate::stats::{median, sign_test};

/// Sub-stream indices derived from each experiment seed.
const INIT_STREAM: u64 = 0;
const PILOT_STREAM: u64 = 1 << 32;
const METHOD_STREAM_BASE: u64 = 1;

/// Metrics compared across methods, keyed as in `metrics.json`.
pub const PAIRED_METRICS: [&str; 4] = ["mmd2", "w1", "ess_mean", "lag1"];

/// Reference points used for the MMD median bandwidth.
const BANDWIDTH_POINTS: usize = 1000;

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{context}: {source}")]
    Core {
        context: String,
        source: srld_core::Error,
    },
    #[error("worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

fn core_err(context: impl Into<String>) -> impl FnOnce(srld_core::Error) -> ExperimentError {
    let context = context.into();
    move |source| ExperimentError::Core { context, source }
}

/// Outcome of one method on one seed.
#[derive(Debug, Clone)]
pub struct MethodRun {
    pub report: Option<MetricReport>,
    pub error: Option<String>,
    /// Kept only when traces are written.
    pub trace: Option<Trace>,
}

impl MethodRun {
    pub fn failed(&self) -> bool {
        self.report.is_none()
    }

    pub fn metric(&self, name: &str) -> Option<f64> {
        let r = self.report.as_ref()?;
        Some(match name {
            "mmd2" => r.mmd2,
            "w1" => r.w1,
            "ess_mean" => r.ess_mean,
            "lag1" => r.lag1(),
            _ => return None,
        })
    }
}

/// Paired comparison of one method against the baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedComparison {
    /// Per-metric `method - baseline`, one entry per seed where both succeeded.
    pub diffs: BTreeMap<String, Vec<f64>>,
    pub sign_test_p: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Aggregate {
    /// Per-method, per-metric medians over successful seeds.
    pub medians: BTreeMap<String, BTreeMap<String, Option<f64>>>,
    /// Keyed `"<method> - <baseline>"`.
    pub paired: BTreeMap<String, PairedComparison>,
}

#[derive(Debug, Clone)]
pub struct ComparisonResult {
    pub target: String,
    pub methods: Vec<String>,
    pub seeds: Vec<u64>,
    pub baseline: Option<String>,
    /// Step size each method actually ran with, after matching.
    pub step_sizes: BTreeMap<String, f64>,
    pub reference_source: String,
    pub mmd_bandwidth: f64,
    /// `runs[s][m]` is method `m` on seed `seeds[s]`.
    pub runs: Vec<Vec<MethodRun>>,
    pub aggregate: Aggregate,
}

impl ComparisonResult {
    pub fn run(&self, method: &str, seed: u64) -> Option<&MethodRun> {
        let m = self.methods.iter().position(|x| x == method)?;
        let s = self.seeds.iter().position(|&x| x == seed)?;
        Some(&self.runs[s][m])
    }

    /// Per-seed values of `metric` for `method`, `None` where the run failed.
    pub fn series(&self, method: &str, metric: &str) -> Vec<Option<f64>> {
        let Some(m) = self.methods.iter().position(|x| x == method) else {
            return Vec::new();
        };
        self.runs.iter().map(|r| r[m].metric(metric)).collect()
    }

    pub fn seed_failed(&self, index: usize) -> bool {
        self.runs[index].iter().any(MethodRun::failed)
    }

    pub fn all_failed(&self) -> bool {
        !self.seeds.is_empty() && (0..self.seeds.len()).all(|i| self.seed_failed(i))
    }
}

/// Worker count from `SRLD_THREADS`, if set to a positive integer.
pub fn thread_cap() -> Option<usize> {
    std::env::var("SRLD_THREADS").ok()?.trim().parse().ok().filter(|&n| n > 0)
}

/// Standard normal start for `seed`, unless one is pinned.
pub fn initial_state(pinned: Option<&[f64]>, dim: usize, seed: u64) -> Vec<f64> {
    if let Some(t) = pinned {
        return t.to_vec();
    }
    let mut r = rng::stream(split_seed(seed, INIT_STREAM));
    let mut out = vec![0.0; dim];
    rng::fill_standard_normal(&mut r, &mut out);
    out
}

/// Metric baseline: exact draws when possible, else a long fine-step Langevin run.
pub fn reference_draw(cfg: &ExperimentConfig, target: &TargetModel) -> Result<(SampleMatrix, &'static str), ExperimentError> {
    let r = &cfg.reference;
    if target.has_exact_sampler() && !r.force_langevin {
        let x = target.sample_exact(r.draws, r.seed).map_err(core_err("reference draw"))?;
        return Ok((x, "exact"));
    }
    let burn = r.langevin_steps / 10;
    let keep = ((r.langevin_steps - burn) / r.draws).max(1);
    let lcfg = SamplerConfig {
        step_size: r.langevin_step,
        alpha: 0.0,
        total_steps: r.langevin_steps,
        seed: r.seed,
        keep_every: keep,
        ..Default::default()
    };
    let start = target
        .analytic_mean()
        .map(|m| m.iter().copied().collect())
        .unwrap_or_else(|| vec![0.0; target.dim()]);
    let tr = run_chain(&Method::Langevin, target, &lcfg, &start).map_err(core_err("reference chain"))?;
    let x = tr.samples_from(burn);
    let n = x.len();
    Ok((x.tail_from(n.saturating_sub(r.draws)), "langevin"))
}

/// Sampler configs as run, with reporting overrides and step matching applied.
pub fn effective_configs(cfg: &ExperimentConfig, target: &TargetModel) -> Result<Vec<SamplerConfig>, ExperimentError> {
    let mut out: Vec<SamplerConfig> = cfg
        .methods
        .iter()
        .map(|m| SamplerConfig {
            keep_every: cfg.reporting.keep_every.unwrap_or(m.sampler.keep_every),
            ..m.sampler.clone()
        })
        .collect();
    for (i, m) in cfg.methods.iter().enumerate() {
        let Some(src_name) = &m.match_step_to else { continue };
        let j = cfg.methods.iter().position(|x| &x.name == src_name).expect("validated");
        let pilot = SamplerConfig {
            seed: split_seed(cfg.seeds[0], PILOT_STREAM),
            ..cfg.methods[j].sampler.clone()
        };
        let theta0 = initial_state(cfg.theta0.as_deref(), target.dim(), cfg.seeds[0]);
        let matched = match_step_sizes(target, &pilot, cfg.pilot_steps, &theta0)
            .map_err(core_err(format!("step matching `{}` to `{src_name}`", m.name)))?;
        out[i].step_size = matched.langevin_step;
    }
    Ok(out)
}

struct Shared<'a> {
    cfg: &'a ExperimentConfig,
    target: &'a TargetModel,
    methods: Vec<Method>,
    samplers: Vec<SamplerConfig>,
    reference: SampleMatrix,
    eval: EvalOptions,
}

fn run_seed(sh: &Shared<'_>, seed: u64) -> Vec<MethodRun> {
    let theta0 = initial_state(sh.cfg.theta0.as_deref(), sh.target.dim(), seed);
    sh.methods
        .iter()
        .zip(&sh.samplers)
        .enumerate()
        .map(|(i, (method, base))| {
            let noise_seed = match sh.cfg.pairing {
                Pairing::CoupledNoise => seed,
                Pairing::Independent => split_seed(seed, METHOD_STREAM_BASE + i as u64),
            };
            let scfg = SamplerConfig {
                seed: noise_seed,
                ..base.clone()
            };
            let outcome = run_chain(method, sh.target, &scfg, &theta0).and_then(|tr| {
                let post = tr.samples_from(scfg.burnin_len());
                evaluate(&post, &sh.reference, &sh.eval).map(|r| (r, tr))
            });
            match outcome {
                Ok((report, tr)) => MethodRun {
                    report: Some(report),
                    error: None,
                    trace: sh.cfg.reporting.write_traces.then_some(tr),
                },
                Err(e) => MethodRun {
                    report: None,
                    error: Some(e.to_string()),
                    trace: None,
                },
            }
        })
        .collect()
}

pub fn aggregate(methods: &[String], baseline: Option<&str>, runs: &[Vec<MethodRun>]) -> Aggregate {
    let mut agg = Aggregate::default();
    for (m, name) in methods.iter().enumerate() {
        let meds = PAIRED_METRICS
            .iter()
            .map(|&k| {
                let v: Vec<f64> = runs.iter().filter_map(|r| r[m].metric(k)).collect();
                (k.to_string(), median(&v))
            })
            .collect();
        agg.medians.insert(name.clone(), meds);
    }
    let Some(b) = baseline.and_then(|b| methods.iter().position(|x| x == b)) else {
        return agg;
    };
    for (m, name) in methods.iter().enumerate() {
        if m == b {
            continue;
        }
        let mut diffs = BTreeMap::new();
        let mut ps = BTreeMap::new();
        for &k in &PAIRED_METRICS {
            let d: Vec<f64> = runs
                .iter()
                .filter_map(|r| Some(r[m].metric(k)? - r[b].metric(k)?))
                .collect();
            ps.insert(k.to_string(), sign_test(&d).p_value);
            diffs.insert(k.to_string(), d);
        }
        agg.paired.insert(
            format!("{name} - {}", methods[b]),
            PairedComparison {
                diffs,
                sign_test_p: ps,
            },
        );
    }
    agg
}

/// Runs every method on every seed and aggregates the metrics.
///
/// Diverging chains mark their run failed; the sweep continues.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ComparisonResult, ExperimentError> {
    cfg.validate()?;
    let target = make_target(&cfg.target).map_err(core_err("target"))?;
    let dim = target.dim();
    let methods = cfg
        .methods
        .iter()
        .map(|m| m.build_method(dim))
        .collect::<Result<Vec<_>, _>>()?;
    let samplers = effective_configs(cfg, &target)?;
    let (reference, source) = reference_draw(cfg, &target)?;
    let sigma = match cfg.reporting.mmd_bandwidth {
        Some(s) => s,
        None => {
            let sub = reference.subsample(BANDWIDTH_POINTS);
            median_bandwidth(&sub.rows().collect::<Vec<_>>()).sigma
        }
    };
    let shared = Shared {
        cfg,
        target: &target,
        methods,
        samplers,
        reference,
        eval: EvalOptions {
            max_lag: cfg.reporting.max_lag,
            metric_points: cfg.reporting.metric_points,
            moment_window: cfg.reporting.moment_window,
            mmd_bandwidth: Some(sigma),
            w1_mode: W1Mode::Auto,
        },
    };

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_cap() {
        builder = builder.num_threads(n);
    }
    let pool = builder.build()?;
    let runs: Vec<Vec<MethodRun>> = pool.install(|| cfg.seeds.par_iter().map(|&s| run_seed(&shared, s)).collect());

    let names: Vec<String> = cfg.methods.iter().map(|m| m.name.clone()).collect();
    let baseline = if names.len() > 1 {
        cfg.baseline_name().map(str::to_string)
    } else {
        None
    };
    let aggregate = aggregate(&names, baseline.as_deref(), &runs);
    Ok(ComparisonResult {
        target: target.name().to_string(),
        step_sizes: names
            .iter()
            .cloned()
            .zip(shared.samplers.iter().map(|s| s.step_size))
            .collect(),
        methods: names,
        seeds: cfg.seeds.clone(),
        baseline,
        reference_source: source.to_string(),
        mmd_bandwidth: sigma,
        runs,
        aggregate,
    })
}
