use serde::{Deserialize, Serialize};

use super::special::{f_sf, t_two_sided};
use super::{moments, Sample, StatsError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnovaResult {
    pub f_star: f64,
    pub df1: f64,
    pub df2: f64,
    pub p: f64,
}

/// Welch's heteroscedastic one-way ANOVA.
///
/// With `w_i = n_i / s_i^2`, `W = sum w_i` and `x' = sum w_i x_i / W`:
///
/// ```text
/// L  = sum (1 - w_i / W)^2 / (n_i - 1)
/// F* = [sum w_i (x_i - x')^2 / (k - 1)] / [1 + 2 (k - 2) L / (k^2 - 1)]
/// df1 = k - 1,  df2 = (k^2 - 1) / (3 L)
/// ```
///
/// and `p` is the upper F tail at `F*`.
pub fn welch_anova(groups: &[Sample]) -> Result<AnovaResult, StatsError> {
    let m = moments(groups)?;
    let k = m.len() as f64;
    let weights: Vec<f64> = m.iter().map(|g| g.n / g.var).collect();
    let total: f64 = weights.iter().sum();
    let grand = m.iter().zip(&weights).map(|(g, w)| w * g.mean).sum::<f64>() / total;
    let between = m
        .iter()
        .zip(&weights)
        .map(|(g, w)| w * (g.mean - grand) * (g.mean - grand))
        .sum::<f64>()
        / (k - 1.0);
    let lambda: f64 = m
        .iter()
        .zip(&weights)
        .map(|(g, w)| (1.0 - w / total).powi(2) / (g.n - 1.0))
        .sum();
    let f_star = between / (1.0 + 2.0 * (k - 2.0) * lambda / (k * k - 1.0));
    let df1 = k - 1.0;
    let df2 = (k * k - 1.0) / (3.0 * lambda);
    let p = f_sf(f_star, df1, df2)?;
    Ok(AnovaResult { f_star, df1, df2, p })
}

/// Two-sample Welch t-test (two-sided).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WelchT {
    pub t: f64,
    pub df: f64,
    pub p: f64,
}

pub fn welch_t_test(a: &Sample, b: &Sample) -> Result<WelchT, StatsError> {
    let m = moments(&[a.clone(), b.clone()])?;
    let (va, vb) = (m[0].var / m[0].n, m[1].var / m[1].n);
    let se2 = va + vb;
    let t = (m[0].mean - m[1].mean) / se2.sqrt();
    let df = se2 * se2 / (va * va / (m[0].n - 1.0) + vb * vb / (m[1].n - 1.0));
    Ok(WelchT {
        t,
        df,
        p: t_two_sided(t, df),
    })
}
