//! `metrics.json`, trace CSVs and charts for a finished comparison.

use std::collections::BTreeMap;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::experiment::{ComparisonResult, MethodRun, PAIRED_METRICS};
use crate::svg;
use crate::trace_csv::write_trace;

#[derive(Debug, thiserror::Error)]
#[error("{}: {source}", path.display())]
pub struct ReportError {
    pub path: PathBuf,
    pub source: std::io::Error,
}

fn io_at(path: &Path) -> impl FnOnce(std::io::Error) -> ReportError + '_ {
    move |source| ReportError {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct SeedMetrics {
    pub failed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub mmd2: Option<f64>,
    pub w1: Option<f64>,
    pub ess_mean: Option<f64>,
    pub lag1: Option<f64>,
    /// Lags `0..=max_lag`, averaged over coordinates.
    pub autocorr: Vec<f64>,
    pub bandwidth_used: Option<f64>,
    /// Largest windowed mean of `|theta|^2`.
    pub max_moment: Option<f64>,
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
}

impl SeedMetrics {
    fn from_run(run: &MethodRun) -> Self {
        let Some(r) = &run.report else {
            return SeedMetrics {
                failed: true,
                error: run.error.clone(),
                ..Default::default()
            };
        };
        SeedMetrics {
            failed: false,
            error: None,
            mmd2: Some(r.mmd2),
            w1: Some(r.w1),
            ess_mean: Some(r.ess_mean),
            lag1: Some(r.lag1()),
            autocorr: r.autocorr_mean.clone(),
            bandwidth_used: Some(r.mmd_bandwidth),
            max_moment: Some(r.max_moment()),
            mean: r.mean.clone(),
            variance: (0..r.cov.len()).map(|i| r.cov[i][i]).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct AggregateDocument {
    pub medians: BTreeMap<String, BTreeMap<String, Option<f64>>>,
    /// `"<method> - <baseline>"` → metric → per-seed differences.
    pub paired_diffs: BTreeMap<String, BTreeMap<String, Vec<f64>>>,
    pub sign_test_p: BTreeMap<String, BTreeMap<String, f64>>,
}

/// On-disk form of a [`ComparisonResult`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct MetricsDocument {
    pub target: String,
    pub methods: Vec<String>,
    pub seeds: Vec<u64>,
    pub baseline: Option<String>,
    pub reference_source: String,
    pub step_sizes: BTreeMap<String, f64>,
    /// Aligned with `seeds`: method name → metrics.
    pub per_seed: Vec<BTreeMap<String, SeedMetrics>>,
    pub aggregate: AggregateDocument,
}

impl MetricsDocument {
    pub fn from_result(r: &ComparisonResult) -> Self {
        let per_seed = r
            .runs
            .iter()
            .map(|runs| {
                r.methods
                    .iter()
                    .zip(runs)
                    .map(|(m, run)| (m.clone(), SeedMetrics::from_run(run)))
                    .collect()
            })
            .collect();
        let mut aggregate = AggregateDocument {
            medians: r.aggregate.medians.clone(),
            ..Default::default()
        };
        for (k, cmp) in &r.aggregate.paired {
            aggregate.paired_diffs.insert(k.clone(), cmp.diffs.clone());
            aggregate.sign_test_p.insert(k.clone(), cmp.sign_test_p.clone());
        }
        MetricsDocument {
            target: r.target.clone(),
            methods: r.methods.clone(),
            seeds: r.seeds.clone(),
            baseline: r.baseline.clone(),
            reference_source: r.reference_source.clone(),
            step_sizes: r.step_sizes.clone(),
            per_seed,
            aggregate,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("document holds only finite numbers");
        s.push('\n');
        s
    }
}

/// Writes `metrics.json`, `traces/<method>_<seed>.csv` and `plots/*.svg`
/// under `dir`, returning the paths written.
pub fn emit_reports(result: &ComparisonResult, dir: &Path) -> Result<Vec<PathBuf>, ReportError> {
    fs::create_dir_all(dir).map_err(io_at(dir))?;
    let mut written = Vec::new();
    let doc = MetricsDocument::from_result(result);
    let metrics = dir.join("metrics.json");
    fs::write(&metrics, doc.to_json()).map_err(io_at(&metrics))?;
    written.push(metrics);

    let traces: Vec<_> = result
        .seeds
        .iter()
        .zip(&result.runs)
        .flat_map(|(seed, runs)| {
            result
                .methods
                .iter()
                .zip(runs)
                .filter_map(move |(m, run)| Some((m, seed, run.trace.as_ref()?)))
        })
        .collect();
    if !traces.is_empty() {
        let tdir = dir.join("traces");
        fs::create_dir_all(&tdir).map_err(io_at(&tdir))?;
        for (m, seed, tr) in traces {
            let path = tdir.join(format!("{m}_{seed}.csv"));
            let f = fs::File::create(&path).map_err(io_at(&path))?;
            write_trace(tr, BufWriter::new(f)).map_err(io_at(&path))?;
            written.push(path);
        }
    }

    if result.runs.iter().flatten().any(|r| !r.failed()) {
        let pdir = dir.join("plots");
        fs::create_dir_all(&pdir).map_err(io_at(&pdir))?;
        for (file, metric, title) in [
            ("mmd.svg", "mmd2", "MMD^2 vs reference"),
            ("w1.svg", "w1", "Wasserstein-1 vs reference"),
            ("ess.svg", "ess_mean", "Effective sample size (mean over coordinates)"),
        ] {
            debug_assert!(PAIRED_METRICS.contains(&metric));
            let groups: Vec<(String, Vec<f64>)> = result
                .methods
                .iter()
                .map(|m| (m.clone(), result.series(m, metric).into_iter().flatten().collect()))
                .collect();
            let path = pdir.join(file);
            fs::write(&path, svg::box_chart(title, &groups)).map_err(io_at(&path))?;
            written.push(path);
        }
        let curves: Vec<(String, Vec<f64>)> = result
            .methods
            .iter()
            .enumerate()
            .map(|(m, name)| (name.clone(), mean_autocorr(result, m)))
            .collect();
        let path = pdir.join("autocorr.svg");
        fs::write(&path, svg::line_chart("Autocorrelation (mean over seeds and coordinates)", "lag", &curves))
            .map_err(io_at(&path))?;
        written.push(path);
    }
    Ok(written)
}

fn mean_autocorr(result: &ComparisonResult, m: usize) -> Vec<f64> {
    let curves: Vec<&Vec<f64>> = result
        .runs
        .iter()
        .filter_map(|r| r[m].report.as_ref().map(|rep| &rep.autocorr_mean))
        .collect();
    let len = curves.iter().map(|c| c.len()).min().unwrap_or(0);
    (0..len)
        .map(|t| curves.iter().map(|c| c[t]).sum::<f64>() / curves.len() as f64)
        .collect()
}
