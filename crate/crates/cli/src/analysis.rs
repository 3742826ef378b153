//! Turns trial records into an [`AnalysisReport`]: bootstrap summaries per
//! `(backend, n)`, a Welch omnibus test per size, Games-Howell pairs where the
//! omnibus rejects, and a ranking at the largest size.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use tilebench::harness::{group_seed, TrialRecord};
use tilebench::stats::{
    bootstrap_ci, format_p, games_howell, welch_anova, AnovaResult, BootstrapSummary, PairwiseResult,
    Sample, StatsError,
};

/// Version tag stored in every report; `report` refuses anything else.
pub const SCHEMA: &str = "tilebench-analysis/1";

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyzeOptions {
    pub alpha: f64,
    pub resamples: usize,
    pub level: f64,
    pub seed: u64,
    pub force_posthoc: bool,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        Self {
            alpha: 0.01,
            resamples: tilebench::stats::DEFAULT_RESAMPLES,
            level: 0.95,
            seed: 0,
            force_posthoc: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisReport {
    pub schema: String,
    pub alpha: f64,
    pub level: f64,
    pub resamples: usize,
    pub seed: u64,
    pub records: usize,
    /// One entry per `(backend, n)` group, sorted by `n` then backend.
    pub summaries: Vec<GroupSummary>,
    /// One entry per size, ascending.
    pub sizes: Vec<SizeAnalysis>,
    pub ranking: Vec<RankEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupSummary {
    pub backend: String,
    pub n: usize,
    pub trials: usize,
    /// Sample mean and standard deviation of FLOPS; `std` is absent for one trial.
    pub sample_mean: f64,
    pub sample_std: Option<f64>,
    pub bootstrap: BootstrapSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OmnibusStatus {
    Tested,
    SingleGroup,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SizeAnalysis {
    pub n: usize,
    pub backends: Vec<String>,
    pub status: OmnibusStatus,
    pub note: Option<String>,
    pub omnibus: Option<AnovaResult>,
    pub reject: bool,
    /// Present only when post-hoc tests ran for this size.
    pub posthoc: Option<Vec<PairEntry>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairEntry {
    #[serde(flatten)]
    pub result: PairwiseResult,
    /// `p` as shown to readers; tiny values collapse to `< 1e-12`.
    pub p_display: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RankEntry {
    pub rank: usize,
    pub backend: String,
    /// Size the ranking value comes from: the largest `n` this backend ran at.
    pub n: usize,
    pub mean: f64,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum AnalysisError {
    #[error("no records to analyze")]
    Empty,
    #[error("{0}")]
    Options(String),
    #[error("group {backend} n={n}: {source}")]
    Group {
        backend: String,
        n: usize,
        source: StatsError,
    },
    #[error("n={n}: {source}")]
    Size { n: usize, source: StatsError },
}

fn check_options(o: &AnalyzeOptions) -> Result<(), AnalysisError> {
    if !(o.alpha > 0.0 && o.alpha < 1.0) {
        return Err(AnalysisError::Options(format!("alpha {} outside (0, 1)", o.alpha)));
    }
    if !(o.level > 0.0 && o.level < 1.0) {
        return Err(AnalysisError::Options(format!("level {} outside (0, 1)", o.level)));
    }
    if o.resamples < 100 {
        return Err(AnalysisError::Options(format!(
            "bootstrap needs at least 100 resamples, got {}",
            o.resamples
        )));
    }
    Ok(())
}

/// `(trial, flops)` of one record.
type TrialFlops = (usize, f64);

pub fn analyze(records: &[TrialRecord], opts: &AnalyzeOptions) -> Result<AnalysisReport, AnalysisError> {
    check_options(opts)?;
    if records.is_empty() {
        return Err(AnalysisError::Empty);
    }

    // n -> backend -> flops, both sorted so the output order never depends on the input order
    let mut grouped: BTreeMap<usize, BTreeMap<&str, Vec<TrialFlops>>> = BTreeMap::new();
    for r in records {
        grouped
            .entry(r.n)
            .or_default()
            .entry(&r.backend)
            .or_default()
            .push((r.trial, r.flops));
    }

    let mut summaries = Vec::new();
    let mut sizes = Vec::new();
    for (&n, by_backend) in &grouped {
        let mut samples = Vec::with_capacity(by_backend.len());
        for (&backend, values) in by_backend {
            let mut values = values.clone();
            values.sort_by_key(|v| v.0);
            let flops: Vec<f64> = values.into_iter().map(|v| v.1).collect();
            let group_err = |source| AnalysisError::Group {
                backend: backend.to_owned(),
                n,
                source,
            };
            let sample = Sample::new(backend, flops).map_err(group_err)?;
            summaries.push(summarize(&sample, n, opts).map_err(group_err)?);
            samples.push(sample);
        }
        sizes.push(test_size(n, &samples, opts)?);
    }

    let ranking = rank(&summaries);
    Ok(AnalysisReport {
        schema: SCHEMA.to_owned(),
        alpha: opts.alpha,
        level: opts.level,
        resamples: opts.resamples,
        seed: opts.seed,
        records: records.len(),
        summaries,
        sizes,
        ranking,
    })
}

fn summarize(sample: &Sample, n: usize, opts: &AnalyzeOptions) -> Result<GroupSummary, StatsError> {
    let mean = sample.mean()?;
    let (std, bootstrap) = if sample.len() < 2 {
        // nothing to resample; the interval collapses onto the one value
        let degenerate = BootstrapSummary {
            mean,
            lo: mean,
            hi: mean,
            resamples: 0,
            level: opts.level,
        };
        (None, degenerate)
    } else {
        let seed = group_seed(opts.seed, &sample.label, n);
        (Some(sample.std()?), bootstrap_ci(sample, opts.resamples, seed, opts.level)?)
    };
    Ok(GroupSummary {
        backend: sample.label.clone(),
        n,
        trials: sample.len(),
        sample_mean: mean,
        sample_std: std,
        bootstrap,
    })
}

fn test_size(n: usize, samples: &[Sample], opts: &AnalyzeOptions) -> Result<SizeAnalysis, AnalysisError> {
    let mut out = SizeAnalysis {
        n,
        backends: samples.iter().map(|s| s.label.clone()).collect(),
        status: OmnibusStatus::Tested,
        note: None,
        omnibus: None,
        reject: false,
        posthoc: None,
    };
    if samples.len() < 2 {
        out.status = OmnibusStatus::SingleGroup;
        out.note = Some("single group".into());
        return Ok(out);
    }
    let omnibus = match welch_anova(samples) {
        Ok(r) => r,
        Err(e @ (StatsError::InsufficientData(_) | StatsError::DegenerateVariance(_))) => {
            out.status = OmnibusStatus::Skipped;
            out.note = Some(e.to_string());
            return Ok(out);
        }
        Err(source) => return Err(AnalysisError::Size { n, source }),
    };
    out.reject = omnibus.p < opts.alpha;
    out.omnibus = Some(omnibus);
    if out.reject || opts.force_posthoc {
        let pairs = games_howell(samples, opts.alpha).map_err(|source| AnalysisError::Size { n, source })?;
        out.posthoc = Some(
            pairs
                .into_iter()
                .map(|result| PairEntry {
                    p_display: format_p(result.p),
                    result,
                })
                .collect(),
        );
    }
    Ok(out)
}

/// Every backend ranked by its bootstrap mean at its largest size. Backends
/// that reached the overall largest size come first, then by mean (highest
/// FLOPS first), then by name.
fn rank(summaries: &[GroupSummary]) -> Vec<RankEntry> {
    let mut last: BTreeMap<&str, &GroupSummary> = BTreeMap::new();
    for s in summaries {
        let slot = last.entry(&s.backend).or_insert(s);
        if s.n > slot.n {
            *slot = s;
        }
    }
    let mut best: Vec<&GroupSummary> = last.into_values().collect();
    best.sort_by(|a, b| {
        b.n.cmp(&a.n)
            .then(b.bootstrap.mean.total_cmp(&a.bootstrap.mean))
            .then(a.backend.cmp(&b.backend))
    });
    best.into_iter()
        .enumerate()
        .map(|(i, s)| RankEntry {
            rank: i + 1,
            backend: s.backend.clone(),
            n: s.n,
            mean: s.bootstrap.mean,
            lo: s.bootstrap.lo,
            hi: s.bootstrap.hi,
        })
        .collect()
}
