//! Trial protocol: repeated, compute-only timed multiplications for every
//! `(backend, n)` pair, run one pair at a time.

mod records;

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backends::{naive_multiply, Backend, BackendError, PoolConfig, Registry, TileConfig};
use crate::matrix::{flop_count, generate, max_abs_rel_diff, GenSpec, Matrix, MatrixError};

pub use records::{metadata_path, read_csv, read_metadata, read_records, write_records, CSV_HEADER};

/// Tolerance of the optional post-run oracle check.
pub const VERIFY_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid run configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Trial(#[from] TrialError),
    #[error("clock resolution {0:?} is coarser than 1 microsecond")]
    ClockResolution(Duration),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: line {line}: {message}")]
    Parse {
        path: String,
        line: u64,
        message: String,
    },
    #[error("{path}: missing column {column:?}")]
    MissingColumn { path: String, column: String },
    #[error("{path}: line {line}: {message}")]
    Validation {
        path: String,
        line: u64,
        message: String,
    },
    #[error("{path}: metadata: {message}")]
    Metadata { path: String, message: String },
}

/// A failed multiplication during a run.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("backend {backend:?} failed at n={n}{}: {cause}", describe_slot(.trial))]
pub struct TrialError {
    pub backend: String,
    pub n: usize,
    /// `None` for warmup and verification calls.
    pub trial: Option<usize>,
    pub cause: BackendError,
}

fn describe_slot(trial: &Option<usize>) -> String {
    match trial {
        Some(t) => format!(", trial {t}"),
        None => " (untimed call)".to_owned(),
    }
}

fn default_trials() -> usize {
    30
}
fn default_warmup() -> usize {
    1
}
fn default_lo() -> f64 {
    2.0
}
fn default_hi() -> f64 {
    5.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub backends: Vec<String>,
    pub sizes: Vec<usize>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_warmup")]
    pub warmup: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub tile: TileConfig,
    #[serde(default)]
    pub threads: PoolConfig,
    #[serde(default = "default_lo")]
    pub lo: f64,
    #[serde(default = "default_hi")]
    pub hi: f64,
    /// Re-check the last product of every pair against the naive oracle.
    #[serde(default)]
    pub verify: bool,
}

impl RunConfig {
    pub fn new(backends: Vec<String>, sizes: Vec<usize>) -> Self {
        Self {
            backends,
            sizes,
            trials: default_trials(),
            warmup: default_warmup(),
            seed: 0,
            tile: TileConfig::default(),
            threads: PoolConfig::default(),
            lo: default_lo(),
            hi: default_hi(),
            verify: false,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.trials == 0 {
            return Err(HarnessError::Config("trials must be at least 1".into()));
        }
        if self.sizes.is_empty() {
            return Err(HarnessError::Config("no matrix sizes given".into()));
        }
        if self.sizes.contains(&0) {
            return Err(HarnessError::Config("matrix size 0".into()));
        }
        if self.backends.is_empty() {
            return Err(HarnessError::Config("no backends given".into()));
        }
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo <= self.hi) {
            return Err(HarnessError::Config(format!(
                "invalid generation range [{}, {}]",
                self.lo, self.hi
            )));
        }
        Ok(())
    }
}

/// One timed multiplication.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub backend: String,
    pub n: usize,
    pub trial: usize,
    pub seconds: f64,
    pub flops: f64,
}

impl TrialRecord {
    pub fn new(backend: impl Into<String>, n: usize, trial: usize, seconds: f64) -> Result<Self, MatrixError> {
        let flops = flops_for(n, seconds)?;
        Ok(Self {
            backend: backend.into(),
            n,
            trial,
            seconds,
            flops,
        })
    }
}

pub fn flops_for(n: usize, seconds: f64) -> Result<f64, MatrixError> {
    Ok(flop_count(n as u64)? as f64 / seconds)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub timestamp: String,
    pub host: String,
    pub cores: usize,
    pub config: RunConfig,
    /// False when the run stopped on a trial failure.
    #[serde(default = "complete_default")]
    pub complete: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

fn complete_default() -> bool {
    true
}

impl RunMetadata {
    pub fn capture(config: &RunConfig) -> Self {
        Self {
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true),
            host: host_description(),
            cores: std::thread::available_parallelism().map_or(1, |n| n.get()),
            config: config.clone(),
            complete: true,
            error: None,
        }
    }
}

fn host_description() -> String {
    let cpu = std::fs::read_to_string("/proc/cpuinfo")
        .ok()
        .and_then(|s| {
            s.lines()
                .find(|l| l.starts_with("model name"))
                .and_then(|l| l.split(':').nth(1))
                .map(|m| m.trim().to_owned())
        })
        .unwrap_or_else(|| "unknown cpu".into());
    let hostname = std::fs::read_to_string("/etc/hostname")
        .map(|h| h.trim().to_owned())
        .unwrap_or_else(|_| "unknown-host".into());
    format!(
        "{hostname}; {cpu}; {}-{}",
        std::env::consts::OS,
        std::env::consts::ARCH
    )
}

/// Smallest observable step of the monotonic clock, over a few samples.
pub fn clock_resolution() -> Duration {
    (0..16)
        .map(|_| {
            let start = Instant::now();
            loop {
                let d = start.elapsed();
                if !d.is_zero() {
                    break d;
                }
            }
        })
        .min()
        .unwrap()
}

pub fn check_clock() -> Result<Duration, HarnessError> {
    let res = clock_resolution();
    if res > Duration::from_micros(1) {
        return Err(HarnessError::ClockResolution(res));
    }
    Ok(res)
}

#[derive(Debug)]
pub struct Timed {
    pub seconds: f64,
    pub product: Matrix,
}

/// Times one call. Only the backend call sits inside the timer; operands are
/// built by the caller beforehand. A backend-reported compute time (device
/// events) replaces the wall time. Durations below clock granularity are
/// reported as one nanosecond so that `seconds > 0` holds.
pub fn time_once(backend: &dyn Backend, a: &Matrix, b: &Matrix) -> Result<Timed, BackendError> {
    let start = Instant::now();
    let product = backend.multiply(a, b)?;
    let wall = start.elapsed();
    let elapsed = product.compute_time.unwrap_or(wall);
    let matrix = product.matrix;
    if matrix.rows() != a.rows() || matrix.cols() != b.cols() {
        return Err(BackendError::Shape {
            left_rows: a.rows(),
            left_cols: b.cols(),
            right_rows: matrix.rows(),
            right_cols: matrix.cols(),
        });
    }
    matrix.check_finite()?;
    Ok(Timed {
        seconds: elapsed.as_secs_f64().max(1e-9),
        product: matrix,
    })
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// Which slot of a pair's schedule an operand belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    Warmup(usize),
    Trial(usize),
}

/// Seed of operand `which` (0 = left, 1 = right) for one slot, mixed from the
/// run seed, backend name, size and slot with splitmix64.
pub fn operand_seed(base: u64, backend: &str, n: usize, slot: Slot, which: u8) -> u64 {
    let (tag, idx) = match slot {
        Slot::Trial(t) => (0u64, t as u64),
        Slot::Warmup(w) => (1u64, w as u64),
    };
    [fnv1a(backend), n as u64, tag, idx, which as u64]
        .into_iter()
        .fold(splitmix64(base), |h, v| splitmix64(h ^ v))
}

/// Seed for a per-group computation (e.g. the bootstrap of one backend at one
/// size), mixed the same way as [`operand_seed`] but in a separate stream.
pub fn group_seed(base: u64, label: &str, n: usize) -> u64 {
    [fnv1a(label), n as u64, 2]
        .into_iter()
        .fold(splitmix64(base), |h, v| splitmix64(h ^ v))
}

/// The operands a run feeds to `backend` at size `n` for `slot`.
pub fn operands(config: &RunConfig, backend: &str, n: usize, slot: Slot) -> Result<(Matrix, Matrix), MatrixError> {
    let gen = |which| {
        generate(&GenSpec::square(
            n,
            config.lo,
            config.hi,
            operand_seed(config.seed, backend, n, slot, which),
        ))
    };
    Ok((gen(0)?, gen(1)?))
}

/// Progress notifications from [`run_trials_with`].
#[derive(Debug)]
pub enum RunEvent<'a> {
    PairStarted { backend: &'a str, n: usize },
    Trial { record: &'a TrialRecord, a: &'a Matrix, b: &'a Matrix, product: &'a Matrix },
    Verified { backend: &'a str, n: usize, max_rel_diff: f64 },
    PairFinished { backend: &'a str, n: usize },
}

#[derive(Debug)]
pub struct RunOutcome {
    pub records: Vec<TrialRecord>,
    pub metadata: RunMetadata,
    /// Set when a trial failed; `records` then holds everything measured before it.
    pub failure: Option<TrialError>,
}

pub fn run_trials(config: &RunConfig, registry: &Registry) -> Result<RunOutcome, HarnessError> {
    run_trials_with(config, registry, |_| {})
}

/// Runs every `(backend, n)` pair in order: `warmup` untimed calls, then
/// `trials` timed calls on freshly generated operands. Unknown backends and
/// invalid settings are rejected before anything runs.
pub fn run_trials_with<F>(config: &RunConfig, registry: &Registry, mut observe: F) -> Result<RunOutcome, HarnessError>
where
    F: FnMut(RunEvent<'_>),
{
    config.validate()?;
    let backends = registry.resolve(&config.backends)?;
    check_clock()?;

    let mut metadata = RunMetadata::capture(config);
    let mut records = Vec::with_capacity(backends.len() * config.sizes.len() * config.trials);

    for (name, backend) in &backends {
        for &n in &config.sizes {
            observe(RunEvent::PairStarted { backend: name, n });
            if let Err(failure) = run_pair(config, name, backend.as_ref(), n, &mut records, &mut observe) {
                metadata.complete = false;
                metadata.error = Some(failure.to_string());
                return Ok(RunOutcome {
                    records,
                    metadata,
                    failure: Some(failure),
                });
            }
            observe(RunEvent::PairFinished { backend: name, n });
        }
    }
    Ok(RunOutcome {
        records,
        metadata,
        failure: None,
    })
}

fn run_pair<F>(
    config: &RunConfig,
    name: &str,
    backend: &dyn Backend,
    n: usize,
    records: &mut Vec<TrialRecord>,
    observe: &mut F,
) -> Result<(), TrialError>
where
    F: FnMut(RunEvent<'_>),
{
    let fail = |trial, cause| TrialError {
        backend: name.to_owned(),
        n,
        trial,
        cause,
    };
    let gen = |slot| operands(config, name, n, slot).map_err(BackendError::from);

    for w in 0..config.warmup {
        let (a, b) = gen(Slot::Warmup(w)).map_err(|e| fail(None, e))?;
        backend.multiply(&a, &b).map_err(|e| fail(None, e))?;
    }

    let mut last = None;
    for t in 0..config.trials {
        let (a, b) = gen(Slot::Trial(t)).map_err(|e| fail(Some(t), e))?;
        let timed = time_once(backend, &a, &b).map_err(|e| fail(Some(t), e))?;
        let record = TrialRecord::new(name, n, t, timed.seconds).map_err(|e| fail(Some(t), e.into()))?;
        observe(RunEvent::Trial {
            record: &record,
            a: &a,
            b: &b,
            product: &timed.product,
        });
        records.push(record);
        if config.verify {
            last = Some((t, timed.product));
        }
    }

    if let Some((t, product)) = last {
        let (a, b) = gen(Slot::Trial(t)).map_err(|e| fail(None, e))?;
        let oracle = naive_multiply(&a, &b).map_err(|e| fail(None, e))?;
        let diff = max_abs_rel_diff(&oracle, &product).map_err(|e| fail(None, e.into()))?;
        if diff > VERIFY_TOLERANCE {
            return Err(fail(
                Some(t),
                BackendError::External {
                    name: name.to_owned(),
                    message: format!("verification failed: max relative difference {diff:e}"),
                },
            ));
        }
        observe(RunEvent::Verified {
            backend: name,
            n,
            max_rel_diff: diff,
        });
    }
    Ok(())
}
