use serde::{Deserialize, Serialize};

use super::srange::studentized_range_sf;
use super::{moments, Sample, StatsError};

/// Games-Howell comparison of groups `a` and `b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseResult {
    pub a: String,
    pub b: String,
    /// `mean(a) - mean(b)`.
    pub mean_diff: f64,
    pub q: f64,
    pub df: f64,
    pub p: f64,
    pub significant: bool,
}

impl PairwiseResult {
    /// The same comparison with the labels swapped.
    pub fn swapped(&self) -> Self {
        Self {
            a: self.b.clone(),
            b: self.a.clone(),
            mean_diff: -self.mean_diff,
            ..self.clone()
        }
    }
}

/// Games-Howell post-hoc test over every unordered pair, in `(i, j)`, `i < j`
/// order. Each pair uses its own standard error and Welch-Satterthwaite
/// degrees of freedom; `q = sqrt(2) |mean_i - mean_j| / se` is referred to the
/// studentized range with `k = groups.len()`.
pub fn games_howell(groups: &[Sample], alpha: f64) -> Result<Vec<PairwiseResult>, StatsError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(StatsError::Range(format!("alpha {alpha} outside (0, 1)")));
    }
    let m = moments(groups)?;
    let k = m.len();
    let mut out = Vec::with_capacity(k * (k - 1) / 2);
    for i in 0..k {
        for j in i + 1..k {
            let (vi, vj) = (m[i].var / m[i].n, m[j].var / m[j].n);
            let se2 = vi + vj;
            let mean_diff = m[i].mean - m[j].mean;
            let q = std::f64::consts::SQRT_2 * mean_diff.abs() / se2.sqrt();
            let df = se2 * se2 / (vi * vi / (m[i].n - 1.0) + vj * vj / (m[j].n - 1.0));
            let p = studentized_range_sf(q, k, df)?;
            out.push(PairwiseResult {
                a: groups[i].label.clone(),
                b: groups[j].label.clone(),
                mean_diff,
                q,
                df,
                p,
                significant: p < alpha,
            });
        }
    }
    Ok(out)
}
