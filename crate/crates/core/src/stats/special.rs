//! Special functions: regularized incomplete beta and the F, Student t and
//! normal distribution functions built on it.

use std::f64::consts::FRAC_1_SQRT_2;

use super::StatsError;

const CF_EPS: f64 = 1e-16;
const CF_TINY: f64 = 1e-300;
const CF_MAX_ITER: usize = 100_000;

fn ln_beta(a: f64, b: f64) -> f64 {
    libm::lgamma(a) + libm::lgamma(b) - libm::lgamma(a + b)
}

/// Continued fraction for `I_x(a, b)` (modified Lentz), valid for
/// `x < (a + 1) / (a + b + 2)`.
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let clamp = |v: f64| if v.abs() < CF_TINY { CF_TINY } else { v };
    let mut c = 1.0;
    let mut d = 1.0 / clamp(1.0 - qab * x / qap);
    let mut h = d;
    for m in 1..=CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 / clamp(1.0 + aa * d);
        c = clamp(1.0 + aa / c);
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 / clamp(1.0 + aa * d);
        c = clamp(1.0 + aa / c);
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < CF_EPS {
            break;
        }
    }
    h
}

/// Returns `(I_x(a, b), 1 - I_x(a, b))` with the smaller of the two evaluated
/// directly, so neither loses relative precision to cancellation. `y` must be
/// `1 - x`, passed separately because callers can often form it exactly.
pub fn beta_inc_pair(a: f64, b: f64, x: f64, y: f64) -> (f64, f64) {
    if x <= 0.0 {
        return (0.0, 1.0);
    }
    if y <= 0.0 {
        return (1.0, 0.0);
    }
    let ln_front = a * x.ln() + b * y.ln() - ln_beta(a, b);
    if x < (a + 1.0) / (a + b + 2.0) {
        let v = (ln_front.exp() * beta_cf(a, b, x) / a).clamp(0.0, 1.0);
        (v, 1.0 - v)
    } else {
        let w = (ln_front.exp() * beta_cf(b, a, y) / b).clamp(0.0, 1.0);
        (1.0 - w, w)
    }
}

/// Regularized incomplete beta `I_x(a, b)`.
pub fn beta_inc(a: f64, b: f64, x: f64) -> f64 {
    beta_inc_pair(a, b, x, 1.0 - x).0
}

fn check_df(df: f64, name: &str) -> Result<(), StatsError> {
    if df.is_nan() || df <= 0.0 {
        return Err(StatsError::Range(format!("{name} = {df} must be positive")));
    }
    Ok(())
}

/// Lower and upper tail of F(df1, df2) at `x`.
fn f_tails(x: f64, df1: f64, df2: f64) -> Result<(f64, f64), StatsError> {
    check_df(df1, "df1")?;
    check_df(df2, "df2")?;
    if x.is_nan() || x < 0.0 {
        return Err(StatsError::Range(format!("F argument {x} must be non-negative")));
    }
    if x == 0.0 {
        return Ok((0.0, 1.0));
    }
    if x.is_infinite() {
        return Ok((1.0, 0.0));
    }
    let (num, den) = (df1 * x, df2);
    let total = num + den;
    Ok(beta_inc_pair(df1 / 2.0, df2 / 2.0, num / total, den / total))
}

/// CDF of the F distribution: `I_{d1 x / (d1 x + d2)}(d1 / 2, d2 / 2)`.
pub fn f_cdf(x: f64, df1: f64, df2: f64) -> Result<f64, StatsError> {
    f_tails(x, df1, df2).map(|t| t.0)
}

/// Upper tail `1 - f_cdf`, evaluated without cancellation.
pub fn f_sf(x: f64, df1: f64, df2: f64) -> Result<f64, StatsError> {
    f_tails(x, df1, df2).map(|t| t.1)
}

/// CDF of Student's t with `df` degrees of freedom.
pub fn t_cdf(t: f64, df: f64) -> Result<f64, StatsError> {
    check_df(df, "df")?;
    if t.is_nan() {
        return Err(StatsError::Range("t is NaN".into()));
    }
    if t.is_infinite() {
        return Ok(if t > 0.0 { 1.0 } else { 0.0 });
    }
    let tail = 0.5 * t_two_sided(t, df);
    Ok(if t > 0.0 { 1.0 - tail } else { tail })
}

/// `P(|T| > |t|)`, i.e. `I_{df / (df + t^2)}(df / 2, 1 / 2)`.
pub(crate) fn t_two_sided(t: f64, df: f64) -> f64 {
    let t2 = t * t;
    let total = df + t2;
    beta_inc_pair(df / 2.0, 0.5, df / total, t2 / total).0
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

pub fn normal_pdf(x: f64) -> f64 {
    const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}
