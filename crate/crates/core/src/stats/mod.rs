//! Statistics for comparing backends: bootstrap percentile intervals per
//! group, the Welch omnibus test and Games-Howell pairwise tests, with the
//! F and studentized range distributions they need.

mod bootstrap;
mod descriptive;
mod posthoc;
pub mod special;
mod srange;
mod welch;

use thiserror::Error;

pub use bootstrap::{bootstrap_ci, BootstrapSummary, DEFAULT_RESAMPLES};
pub use descriptive::{mean, percentile, sample_std, variance};
pub use posthoc::{games_howell, PairwiseResult};
pub use special::{f_cdf, f_sf, normal_cdf, t_cdf};
pub use srange::{studentized_range_cdf, studentized_range_sf};
pub use welch::{welch_anova, welch_t_test, AnovaResult, WelchT};

/// p-values below this are reported as `< 1e-12`; the quadrature carries no
/// meaningful digits past it.
pub const P_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("need at least 2 groups, got {0}")]
    InsufficientGroups(usize),
    #[error("group {0:?} has zero variance")]
    DegenerateVariance(String),
    #[error("argument out of range: {0}")]
    Range(String),
    #[error("non-finite value in group {0:?}")]
    NonFinite(String),
}

/// Measurements of one group, e.g. all FLOPS values of one backend at one size.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub label: String,
    pub values: Vec<f64>,
}

impl Sample {
    pub fn new(label: impl Into<String>, values: Vec<f64>) -> Result<Self, StatsError> {
        let label = label.into();
        if values.is_empty() {
            return Err(StatsError::InsufficientData(format!("group {label:?} is empty")));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(StatsError::NonFinite(label));
        }
        Ok(Self { label, values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> Result<f64, StatsError> {
        mean(&self.values)
    }

    pub fn std(&self) -> Result<f64, StatsError> {
        sample_std(&self.values)
    }
}

/// Formats a p-value, collapsing anything under [`P_FLOOR`] to `< 1e-12`.
pub fn format_p(p: f64) -> String {
    if p < P_FLOOR {
        "< 1e-12".to_owned()
    } else {
        format!("{p:.3e}")
    }
}

/// Summary statistics of one group used by both omnibus and pairwise tests.
#[derive(Debug, Clone, Copy)]
pub(crate) struct GroupMoments {
    pub n: f64,
    pub mean: f64,
    pub var: f64,
}

pub(crate) fn moments(groups: &[Sample]) -> Result<Vec<GroupMoments>, StatsError> {
    if groups.len() < 2 {
        return Err(StatsError::InsufficientGroups(groups.len()));
    }
    groups
        .iter()
        .map(|g| {
            if g.len() < 2 {
                return Err(StatsError::InsufficientData(format!(
                    "group {:?} needs at least 2 values",
                    g.label
                )));
            }
            let var = variance(&g.values)?;
            if var <= 0.0 {
                return Err(StatsError::DegenerateVariance(g.label.clone()));
            }
            Ok(GroupMoments {
                n: g.len() as f64,
                mean: mean(&g.values)?,
                var,
            })
        })
        .collect()
}
