//! Studentized range distribution by nested Gauss-Legendre quadrature.
//!
//! With `k` standard normal means and an independent scale estimate
//! `s = chi_df / sqrt(df)`, the range statistic `Q = range / s` has
//!
//! ```text
//! P(Q <= q) = E_s[ R(q s) ],   R(w) = k * Int phi(z) [Phi(z) - Phi(z - w)]^(k-1) dz
//! ```
//!
//! where `R` is the CDF of the range of `k` standard normals.
//!
//! Inner integral: `z` over `[-9, 9]`, 18 unit panels with 16 nodes each.
//! The upper tail uses its own integrand,
//! `Phi(z)^(k-1) - (Phi(z) - Phi(z - w))^(k-1)`, factored as
//! `Phi(z - w) * sum a^(k-2-i) b^i` so small tail probabilities keep their
//! relative precision.
//!
//! Outer integral: over `t = ln s`, in which the scale density is
//! proportional to `exp(h(t))`, `h(t) = df (t - (e^(2t) - 1) / 2)`, with its
//! mode at `t = 0` and width `1 / sqrt(2 df)`. The range is cut where `h`
//! falls below `-60` and split into panels no wider than `min(0.25, width)`,
//! 16 nodes each. Weights are normalised by their own sum, so the density's
//! normalising constant never has to be evaluated.
//!
//! Against a reference evaluation the CDF agrees to better than `1e-6`
//! absolute for `q <= 20`, `k <= 10`, `df` in `[2, 200]`. Tail values below
//! about `1e-12` carry no reliable digits.

use std::sync::OnceLock;

use super::special::{normal_cdf, normal_pdf};
use super::StatsError;

const NODES: usize = 16;
const Z_LIMIT: f64 = 9.0;
const Z_PANEL: f64 = 1.0;
const LOG_DENSITY_CUTOFF: f64 = 60.0;
const MAX_T_PANEL: f64 = 0.25;
/// Beyond this range value both tails of `R` are fixed at (1, 0) in double precision.
const W_SATURATED: f64 = 40.0;

/// Gauss-Legendre nodes and weights on `[-1, 1]` (Newton iteration on `P_n`).
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=n {
                let j = j as f64;
                let p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let step = p1 / dp;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre16() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(NODES))
}

/// Inner quadrature nodes with `weight * phi(z)` and `Phi(z)` precomputed.
struct InnerGrid {
    z: Vec<f64>,
    weighted_pdf: Vec<f64>,
    cdf: Vec<f64>,
}

fn inner_grid() -> &'static InnerGrid {
    static GRID: OnceLock<InnerGrid> = OnceLock::new();
    GRID.get_or_init(|| {
        let (nodes, weights) = legendre16();
        let panels = (2.0 * Z_LIMIT / Z_PANEL).round() as usize;
        let mut grid = InnerGrid {
            z: Vec::with_capacity(panels * NODES),
            weighted_pdf: Vec::with_capacity(panels * NODES),
            cdf: Vec::with_capacity(panels * NODES),
        };
        for p in 0..panels {
            let mid = -Z_LIMIT + (p as f64 + 0.5) * Z_PANEL;
            for (x, w) in nodes.iter().zip(weights) {
                let z = mid + 0.5 * Z_PANEL * x;
                grid.z.push(z);
                grid.weighted_pdf.push(0.5 * Z_PANEL * w * normal_pdf(z));
                grid.cdf.push(normal_cdf(z));
            }
        }
        grid
    })
}

/// `(R(w), 1 - R(w))` for the range of `k` standard normals.
fn range_tails(w: f64, k: usize) -> (f64, f64) {
    if w <= 0.0 {
        return (0.0, 1.0);
    }
    if w >= W_SATURATED {
        return (1.0, 0.0);
    }
    let m = (k - 1) as i32;
    let grid = inner_grid();
    let (mut lower, mut upper) = (0.0, 0.0);
    for ((&z, &wp), &a) in grid.z.iter().zip(&grid.weighted_pdf).zip(&grid.cdf) {
        let d = normal_cdf(z - w);
        let b = (a - d).max(0.0);
        // sum_{i<m} a^(m-1-i) b^i by Horner in b
        let mut s = 1.0;
        let mut a_pow = 1.0;
        for _ in 1..m {
            a_pow *= a;
            s = s * b + a_pow;
        }
        lower += wp * b.powi(m);
        upper += wp * d * s;
    }
    let k = k as f64;
    ((k * lower).clamp(0.0, 1.0), (k * upper).clamp(0.0, 1.0))
}

fn log_scale_density(t: f64, df: f64) -> f64 {
    df * (t - 0.5 * (2.0 * t).exp_m1())
}

/// Point where the log density (monotone between `inside` and `outside`)
/// crosses `-LOG_DENSITY_CUTOFF`.
fn cutoff(df: f64, inside: f64, mut outside: f64) -> f64 {
    while log_scale_density(outside, df) > -LOG_DENSITY_CUTOFF {
        outside *= 2.0;
    }
    let (mut a, mut b) = (inside, outside);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if log_scale_density(mid, df) > -LOG_DENSITY_CUTOFF {
            a = mid;
        } else {
            b = mid;
        }
        if (b - a).abs() < 1e-12 {
            break;
        }
    }
    b
}

fn tails(q: f64, k: usize, df: f64) -> Result<(f64, f64), StatsError> {
    if q.is_nan() || q < 0.0 {
        return Err(StatsError::Range(format!("q = {q} must be non-negative")));
    }
    if k < 2 {
        return Err(StatsError::Range(format!("k = {k} must be at least 2")));
    }
    if df.is_nan() || df <= 0.0 {
        return Err(StatsError::Range(format!("df = {df} must be positive")));
    }
    if q == 0.0 {
        return Ok((0.0, 1.0));
    }
    if q.is_infinite() {
        return Ok((1.0, 0.0));
    }
    if df.is_infinite() {
        return Ok(range_tails(q, k));
    }

    let width = 1.0 / (2.0 * df).sqrt();
    let t_lo = cutoff(df, 0.0, -width);
    let t_hi = cutoff(df, 0.0, width);
    let panel = MAX_T_PANEL.min(width);
    let panels = ((t_hi - t_lo) / panel).ceil() as usize;
    let h = (t_hi - t_lo) / panels as f64;

    let (nodes, weights) = legendre16();
    let (mut norm, mut lower, mut upper) = (0.0, 0.0, 0.0);
    for p in 0..panels {
        let mid = t_lo + (p as f64 + 0.5) * h;
        for (x, w) in nodes.iter().zip(weights) {
            let t = mid + 0.5 * h * x;
            let mass = w * log_scale_density(t, df).exp();
            if mass == 0.0 {
                continue;
            }
            let (r, rc) = range_tails(q * t.exp(), k);
            norm += mass;
            lower += mass * r;
            upper += mass * rc;
        }
    }
    Ok(((lower / norm).clamp(0.0, 1.0), (upper / norm).clamp(0.0, 1.0)))
}

/// `P(Q <= q)` for the studentized range with `k` groups and `df` degrees of
/// freedom. `df = f64::INFINITY` gives the range of `k` standard normals.
pub fn studentized_range_cdf(q: f64, k: usize, df: f64) -> Result<f64, StatsError> {
    tails(q, k, df).map(|t| t.0)
}

/// Upper tail `P(Q > q)`, integrated directly rather than as `1 - cdf`.
pub fn studentized_range_sf(q: f64, k: usize, df: f64) -> Result<f64, StatsError> {
    tails(q, k, df).map(|t| t.1)
}

#[cfg(test)]
#[allow(clippy::approx_constant)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // scipy.stats.studentized_range; see tests/data/gen_reference.py
    const CDF_GRID: [(f64, usize, f64, f64); 160] = [
        (0.5, 2, 2.0, 0.24253562503632994),
        (1.0, 2, 2.0, 0.447213595499958),
        (2.0, 2, 2.0, 0.7071067811865476),
        (3.0, 2, 2.0, 0.8320502943378437),
        (5.0, 2, 2.0, 0.9284766908852593),
        (8.0, 2, 2.0, 0.9701425001453321),
        (12.0, 2, 2.0, 0.9863939238321437),
        (20.0, 2, 2.0, 0.9950371902099893),
        (0.5, 2, 5.0, 0.2619073981060859),
        (1.0, 2, 5.0, 0.48891591956971947),
        (2.0, 2, 5.0, 0.7835627707303147),
        (3.0, 2, 5.0, 0.9126406918726386),
        (5.0, 2, 5.0, 0.9833585565761551),
        (8.0, 2, 5.0, 0.997601145953122),
        (12.0, 2, 5.0, 0.9996263854091839),
        (20.0, 2, 5.0, 0.9999681770717334),
        (0.5, 2, 12.0, 0.2701927403194518),
        (1.0, 2, 12.0, 0.506996264960001),
        (2.0, 2, 12.0, 0.8172832372951517),
        (3.0, 2, 12.0, 0.9445953781012739),
        (5.0, 2, 12.0, 0.9958955908381213),
        (8.0, 2, 12.0, 0.9998938779864351),
        (12.0, 2, 12.0, 0.999997952837518),
        (20.0, 2, 12.0, 0.9999999923933647),
        (0.5, 2, 30.0, 0.27385380371496265),
        (1.0, 2, 30.0, 0.5150430313169642),
        (2.0, 2, 30.0, 0.8324058919806575),
        (3.0, 2, 30.0, 0.9577305496742302),
        (5.0, 2, 30.0, 0.9986563415857014),
        (8.0, 2, 30.0, 0.9999963493181381),
        (12.0, 2, 30.0, 0.999999998189839),
        (20.0, 2, 30.0, 0.9999999999999963),
        (0.5, 2, 200.0, 0.2759539875748451),
        (1.0, 2, 200.0, 0.5196768078013094),
        (2.0, 2, 200.0, 0.8411459814423617),
        (3.0, 2, 200.0, 0.9648738221950502),
        (5.0, 2, 200.0, 0.9994943744742377),
        (8.0, 2, 200.0, 0.9999999471900314),
        (12.0, 2, 200.0, 0.9999999999998552),
        (20.0, 2, 200.0, 0.99999999999986),
        (0.5, 3, 2.0, 0.06444320557209594),
        (1.0, 3, 2.0, 0.2158180092854727),
        (2.0, 3, 2.0, 0.5234394316261386),
        (3.0, 3, 2.0, 0.7116500172349732),
        (5.0, 3, 2.0, 0.8725765973282286),
        (8.0, 3, 2.0, 0.946008999723081),
        (12.0, 3, 2.0, 0.9752571341057286),
        (20.0, 3, 2.0, 0.9909482811498225),
        (0.5, 3, 5.0, 0.0657014601766082),
        (1.0, 3, 5.0, 0.22985078385688207),
        (2.0, 3, 5.0, 0.5976375690042197),
        (3.0, 3, 5.0, 0.8201077381734351),
        (5.0, 3, 5.0, 0.9628172804401148),
        (8.0, 3, 5.0, 0.9944421217048439),
        (12.0, 3, 5.0, 0.999121879351716),
        (20.0, 3, 5.0, 0.9999246297537063),
        (0.5, 3, 12.0, 0.06620898004620182),
        (1.0, 3, 12.0, 0.2360181039227479),
        (2.0, 3, 12.0, 0.6352279856310596),
        (3.0, 3, 12.0, 0.8729674086442589),
        (5.0, 3, 12.0, 0.9894004184264451),
        (8.0, 3, 12.0, 0.9997108897967796),
        (12.0, 3, 12.0, 0.9999943077419071),
        (20.0, 3, 12.0, 0.9999999786242639),
        (0.5, 3, 30.0, 0.06642975761776583),
        (1.0, 3, 30.0, 0.2388040767290721),
        (2.0, 3, 30.0, 0.6534785902216573),
        (3.0, 3, 30.0, 0.8975534132860852),
        (5.0, 3, 30.0, 0.9962659961329259),
        (8.0, 3, 30.0, 0.9999893126860655),
        (12.0, 3, 30.0, 0.9999999946251527),
        (20.0, 3, 30.0, 0.9999999999999754),
        (0.5, 3, 200.0, 0.06655575309601114),
        (1.0, 3, 200.0, 0.24042366426993947),
        (2.0, 3, 200.0, 0.6645003167778991),
        (3.0, 3, 200.0, 0.9119016779765873),
        (5.0, 3, 200.0, 0.998538081792224),
        (8.0, 3, 200.0, 0.9999998418998616),
        (12.0, 3, 200.0, 0.9999999999999551),
        (20.0, 3, 200.0, 0.9999999999999696),
        (0.5, 5, 2.0, 0.005989831439997287),
        (1.0, 5, 2.0, 0.06250233552797721),
        (2.0, 5, 2.0, 0.32333639794992575),
        (3.0, 5, 2.0, 0.5575690795646314),
        (5.0, 5, 2.0, 0.7933654695361432),
        (8.0, 5, 2.0, 0.9104464604993954),
        (12.0, 5, 2.0, 0.9586056301067978),
        (20.0, 5, 2.0, 0.9847880736834671),
        (0.5, 5, 5.0, 0.0044719365328506),
        (1.0, 5, 5.0, 0.05383433084836896),
        (2.0, 5, 5.0, 0.3542768972292599),
        (3.0, 5, 5.0, 0.6635297680572585),
        (5.0, 5, 5.0, 0.921074516170005),
        (8.0, 5, 5.0, 0.9875160534323767),
        (12.0, 5, 5.0, 0.9979830446890319),
        (20.0, 5, 5.0, 0.9998248037157741),
        (0.5, 5, 12.0, 0.0038244112915646043),
        (1.0, 5, 12.0, 0.04908727260263612),
        (2.0, 5, 12.0, 0.36919313264386705),
        (3.0, 5, 12.0, 0.7274626293317815),
        (5.0, 5, 12.0, 0.9724319456296621),
        (8.0, 5, 12.0, 0.999179547152343),
        (12.0, 5, 12.0, 0.9999832967776286),
        (20.0, 5, 12.0, 0.9999999361764428),
        (0.5, 5, 30.0, 0.00353618286341771),
        (1.0, 5, 30.0, 0.046735085888105966),
        (2.0, 5, 30.0, 0.3763871384806224),
        (3.0, 5, 30.0, 0.762326386486484),
        (5.0, 5, 30.0, 0.9891099811863214),
        (8.0, 5, 30.0, 0.9999659146762383),
        (12.0, 5, 30.0, 0.9999999824214135),
        (20.0, 5, 30.0, 0.9999999999999237),
        (0.5, 5, 200.0, 0.0033698884611886174),
        (1.0, 5, 200.0, 0.04530521086211876),
        (2.0, 5, 200.0, 0.38075421053388536),
        (3.0, 5, 200.0, 0.7848934405817548),
        (5.0, 5, 200.0, 0.995443848501394),
        (8.0, 5, 200.0, 0.999999475125344),
        (12.0, 5, 200.0, 0.9999999999999125),
        (20.0, 5, 200.0, 0.9999999999999605),
        (0.5, 10, 2.0, 4.664468113704193e-05),
        (1.0, 10, 2.0, 0.006230220822557805),
        (2.0, 10, 2.0, 0.1427825329394537),
        (3.0, 10, 2.0, 0.37374816997884797),
        (5.0, 10, 2.0, 0.6811595778154753),
        (8.0, 10, 2.0, 0.8567005598352999),
        (12.0, 10, 2.0, 0.932831496789318),
        (20.0, 10, 2.0, 0.9751338499522407),
        (0.5, 10, 5.0, 1.0225483036849788e-05),
        (1.0, 10, 5.0, 0.0023349333326689757),
        (2.0, 10, 5.0, 0.11908435812304967),
        (3.0, 10, 5.0, 0.42387606189253874),
        (5.0, 10, 5.0, 0.8333484976385733),
        (8.0, 10, 5.0, 0.9709745527603493),
        (12.0, 10, 5.0, 0.995128109623451),
        (20.0, 10, 5.0, 0.9995680985471598),
        (0.5, 10, 12.0, 3.875433062675472e-06),
        (1.0, 10, 12.0, 0.0011507525895090738),
        (2.0, 10, 12.0, 0.09914530404798913),
        (3.0, 10, 12.0, 0.4542600603809373),
        (5.0, 10, 12.0, 0.9220280402665371),
        (8.0, 10, 12.0, 0.9972754428012083),
        (12.0, 10, 12.0, 0.9999409982210063),
        (20.0, 10, 12.0, 0.9999997671883639),
        (0.5, 10, 30.0, 2.2183393759425717e-06),
        (1.0, 10, 30.0, 0.0007467188562695897),
        (2.0, 10, 30.0, 0.08684719089546047),
        (3.0, 10, 30.0, 0.4722985985066229),
        (5.0, 10, 30.0, 0.9625770171515469),
        (8.0, 10, 30.0, 0.9998602008244866),
        (12.0, 10, 30.0, 0.9999999240939939),
        (20.0, 10, 30.0, 0.9999999999996398),
        (0.5, 10, 200.0, 1.5200654345519047e-06),
        (1.0, 10, 200.0, 0.0005515712111435322),
        (2.0, 10, 200.0, 0.07840823561134934),
        (3.0, 10, 200.0, 0.4852285776714601),
        (5.0, 10, 200.0, 0.9822428886598611),
        (8.0, 10, 200.0, 0.9999976604542606),
        (12.0, 10, 200.0, 0.9999999999996901),
        (20.0, 10, 200.0, 0.9999999999999052),
    ];

    const SF_TAIL: [(f64, usize, f64, f64); 5] = [
        (6.0, 3, 30.0, 0.0005574900386099424),
        (8.0, 5, 58.0, 4.8539036239247935e-06),
        (10.0, 5, 40.0, 1.4609400134091288e-07),
        (12.0, 5, 40.0, 1.7364208959591565e-09),
        (9.0, 10, 20.0, 0.00011553044940026957),
    ];

    #[test]
    fn legendre_rule_integrates_polynomials() {
        let (x, w) = gauss_legendre(NODES);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        // exact through degree 31
        let int: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(30)).sum();
        assert!((int - 2.0 / 31.0).abs() < 1e-14);
        let odd: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(31)).sum();
        assert!(odd.abs() < 1e-14);
    }

    #[test]
    fn range_of_two_normals() {
        // range of two standard normals is |N(0, 2)|
        for w in [0.1, 1.0, 2.5, 5.0] {
            let (r, rc) = range_tails(w, 2);
            let exact = 2.0 * normal_cdf(w / std::f64::consts::SQRT_2) - 1.0;
            assert!((r - exact).abs() < 1e-13, "w = {w}");
            assert!((rc - (1.0 - exact)).abs() < 1e-13, "w = {w}");
        }
    }

    #[test]
    fn argument_checks() {
        assert!(studentized_range_cdf(-1.0, 3, 10.0).is_err());
        assert!(studentized_range_cdf(1.0, 1, 10.0).is_err());
        assert!(studentized_range_cdf(1.0, 3, 0.0).is_err());
        assert!(studentized_range_cdf(f64::NAN, 3, 10.0).is_err());
        assert_eq!(studentized_range_cdf(0.0, 3, 10.0).unwrap(), 0.0);
        assert_eq!(studentized_range_cdf(f64::INFINITY, 3, 10.0).unwrap(), 1.0);
    }

    #[test]
    fn cdf_matches_reference_grid() {
        let mut worst = 0.0f64;
        for (q, k, df, want) in CDF_GRID {
            let got = studentized_range_cdf(q, k, df).unwrap();
            worst = worst.max((got - want).abs());
            assert!((got - want).abs() < 1e-6, "q={q} k={k} df={df}: {got} vs {want}");
        }
        assert!(worst < 1e-6);
    }

    #[test]
    fn upper_tail_keeps_relative_precision() {
        for (q, k, df, want) in SF_TAIL {
            let got = studentized_range_sf(q, k, df).unwrap();
            assert!(((got - want) / want).abs() < 1e-4, "q={q} k={k} df={df}: {got} vs {want}");
        }
        // far tail: 1 - cdf would be exactly zero here
        let far = studentized_range_sf(15.0, 4, 100.0).unwrap();
        assert!(far > 0.0 && far < 1e-12, "{far}");
    }

    #[test]
    fn two_groups_reduce_to_student_t() {
        // Q = sqrt(2)|T| when k = 2
        use statrs::distribution::{ContinuousCDF, StudentsT};
        for df in [3.0, 10.0, 47.5] {
            let t = StudentsT::new(0.0, 1.0, df).unwrap();
            for q in [0.3, 1.7, 4.0, 9.0] {
                let x = q / std::f64::consts::SQRT_2;
                let want = t.cdf(x) - t.cdf(-x);
                let got = studentized_range_cdf(q, 2, df).unwrap();
                assert!((got - want).abs() < 1e-9, "q={q} df={df}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn tabulated_critical_values() {
        // upper percentage points of the studentized range
        for (q, k, df, level) in [(3.773, 3, 12.0, 0.95), (4.102, 5, 30.0, 0.95), (5.018, 4, 20.0, 0.99)] {
            let got = studentized_range_cdf(q, k, df).unwrap();
            assert!((got - level).abs() < 5e-4, "q={q} k={k} df={df}: {got}");
        }
    }

    #[test]
    fn infinite_df_is_the_normal_range() {
        let direct = range_tails(3.3, 4);
        assert_eq!(studentized_range_cdf(3.3, 4, f64::INFINITY).unwrap(), direct.0);
        let large = studentized_range_cdf(3.3, 4, 1e6).unwrap();
        assert!((large - direct.0).abs() < 1e-5);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn tails_are_complementary(q in 0.01f64..25.0, k in 2usize..12, df in 1.0f64..300.0) {
            let (c, s) = tails(q, k, df).unwrap();
            prop_assert!((0.0..=1.0).contains(&c) && (0.0..=1.0).contains(&s));
            prop_assert!((c + s - 1.0).abs() < 1e-9, "{} + {}", c, s);
        }

        #[test]
        fn cdf_monotone_in_q(q in 0.01f64..20.0, dq in 0.01f64..3.0, k in 2usize..12, df in 1.0f64..300.0) {
            let lo = studentized_range_cdf(q, k, df).unwrap();
            let hi = studentized_range_cdf(q + dq, k, df).unwrap();
            prop_assert!(hi >= lo - 1e-12);
            let slo = studentized_range_sf(q, k, df).unwrap();
            let shi = studentized_range_sf(q + dq, k, df).unwrap();
            prop_assert!(shi <= slo * (1.0 + 1e-9) + 1e-300);
        }
    }
}
