//! Quadrature, finite differences, root brackets, the C^∞ transition
//! function and seeded random streams.

use std::sync::OnceLock;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{CurvError, Result};
use crate::jet::Jet;

/// The standard transition `S(x) = f(x) / (f(x) + f(1-x))` with
/// `f(x) = exp(-1/x)` for `x > 0` and `0` otherwise.
///
/// `S ≡ 0` on `(-∞, 0]`, `S ≡ 1` on `[1, ∞)`, every derivative vanishes at
/// both ends, `S(1-x) = 1 - S(x)` and `max S' = S'(1/2) = 2`.
pub struct SmoothStep;

impl SmoothStep {
    pub const MAX_SLOPE: f64 = 2.0;

    pub fn value(x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else if x >= 1.0 {
            1.0
        } else {
            let f = (-1.0 / x).exp();
            let g = (-1.0 / (1.0 - x)).exp();
            f / (f + g)
        }
    }

    pub fn jet(x: f64) -> Jet {
        if x <= 0.0 {
            Jet::constant(0.0)
        } else if x >= 1.0 {
            Jet::constant(1.0)
        } else if x > 0.5 {
            // mirror so the small exponential sits in the numerator; the
            // direct quotient loses every derivative once 1 − S rounds to 0
            let w = Jet::constant(1.0) - Jet::var(x);
            Jet::constant(1.0) - Self::ratio(w)
        } else {
            Self::ratio(Jet::var(x))
        }
    }

    fn ratio(v: Jet) -> Jet {
        let f = (-v.recip()).exp();
        let g = (-(Jet::constant(1.0) - v).recip()).exp();
        f / (f + g)
    }

    /// Jet in `t` of `S((t - a) / w)`.
    pub fn jet_affine(t: f64, a: f64, w: f64) -> Jet {
        let x = (Jet::var(t) - a) * (1.0 / w);
        Self::jet(x.value()).compose(x)
    }

    /// `∫_0^x S(u) du`; equals `x - 1/2` for `x >= 1`.
    pub fn integral(x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else if x >= 1.0 {
            x - 0.5
        } else if x <= 0.5 {
            gl_integrate(SmoothStep::value, 0.0, x, 8)
        } else {
            // symmetry keeps the error independent of x
            let tail = gl_integrate(SmoothStep::value, 0.0, 1.0 - x, 8);
            x - 0.5 + tail
        }
    }
}

struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

fn legendre_rule(n: usize) -> GaussLegendre {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    GaussLegendre { nodes, weights }
}

fn gl16() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| legendre_rule(16))
}

/// Composite 16-point Gauss–Legendre over `panels` equal panels.
pub fn gl_integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    if a == b {
        return 0.0;
    }
    let rule = gl16();
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let lo = a + p as f64 * h;
        let mid = lo + 0.5 * h;
        let mut s = 0.0;
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            s += w * f(mid + 0.5 * h * x);
        }
        total += 0.5 * h * s;
    }
    total
}

/// Composite Simpson over uniformly spaced samples; an even sample count
/// closes with the 3/8 rule on the last three intervals.
pub fn simpson(values: &[f64], h: f64) -> f64 {
    let n = values.len();
    match n {
        0 | 1 => 0.0,
        2 => 0.5 * h * (values[0] + values[1]),
        3 => h / 3.0 * (values[0] + 4.0 * values[1] + values[2]),
        _ if n % 2 == 1 => {
            let mut s = values[0] + values[n - 1];
            for (i, v) in values.iter().enumerate().take(n - 1).skip(1) {
                s += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
            }
            s * h / 3.0
        }
        _ => {
            let head = simpson(&values[..n - 3], h);
            let t = &values[n - 4..];
            head + 3.0 * h / 8.0 * (t[0] + 3.0 * t[1] + 3.0 * t[2] + t[3])
        }
    }
}

/// Running integral `F_i = ∫_{x_0}^{x_i} f` on a uniform grid with local
/// cubic interpolation (fourth order, needs at least four samples).
pub fn cumulative_integral(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len();
    let mut out = vec![0.0; n];
    if n < 4 {
        for i in 1..n {
            out[i] = out[i - 1] + 0.5 * h * (values[i - 1] + values[i]);
        }
        return out;
    }
    let f = values;
    for i in 0..n - 1 {
        let inc = if i == 0 {
            9.0 * f[0] + 19.0 * f[1] - 5.0 * f[2] + f[3]
        } else if i == n - 2 {
            f[n - 4] - 5.0 * f[n - 3] + 19.0 * f[n - 2] + 9.0 * f[n - 1]
        } else {
            -f[i - 1] + 13.0 * f[i] + 13.0 * f[i + 1] - f[i + 2]
        };
        out[i + 1] = out[i] + h / 24.0 * inc;
    }
    out
}

/// Fourth-order first and second derivatives of uniformly spaced samples
/// (one-sided stencils at the ends; needs at least six samples).
pub fn fd_derivatives(f: &[f64], h: f64) -> (Vec<f64>, Vec<f64>) {
    let n = f.len();
    assert!(n >= 6, "need at least six samples");
    let mut d1 = vec![0.0; n];
    let mut d2 = vec![0.0; n];
    let h2 = h * h;
    for i in 2..n - 2 {
        d1[i] = (f[i - 2] - 8.0 * f[i - 1] + 8.0 * f[i + 1] - f[i + 2]) / (12.0 * h);
        d2[i] = (-f[i - 2] + 16.0 * f[i - 1] - 30.0 * f[i] + 16.0 * f[i + 1] - f[i + 2]) / (12.0 * h2);
    }
    let edge = |g: &dyn Fn(usize) -> f64, sign: f64| -> [f64; 4] {
        [
            sign * (-25.0 * g(0) + 48.0 * g(1) - 36.0 * g(2) + 16.0 * g(3) - 3.0 * g(4)) / (12.0 * h),
            sign * (-3.0 * g(0) - 10.0 * g(1) + 18.0 * g(2) - 6.0 * g(3) + g(4)) / (12.0 * h),
            (45.0 * g(0) - 154.0 * g(1) + 214.0 * g(2) - 156.0 * g(3) + 61.0 * g(4) - 10.0 * g(5)) / (12.0 * h2),
            (10.0 * g(0) - 15.0 * g(1) - 4.0 * g(2) + 14.0 * g(3) - 6.0 * g(4) + g(5)) / (12.0 * h2),
        ]
    };
    let head = edge(&|k| f[k], 1.0);
    let tail = edge(&|k| f[n - 1 - k], -1.0);
    d1[0] = head[0];
    d1[1] = head[1];
    d2[0] = head[2];
    d2[1] = head[3];
    d1[n - 1] = tail[0];
    d1[n - 2] = tail[1];
    d2[n - 1] = tail[2];
    d2[n - 2] = tail[3];
    (d1, d2)
}

/// Root of `f` in `[lo, hi]` by bisection; the endpoint values must not
/// share a sign.
pub fn bisect_root<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(CurvError::NonConvergence(format!(
            "no sign change on [{lo}, {hi}] (f = {flo:.3e}, {fhi:.3e})"
        )));
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if (hi - lo) <= tol * (1.0 + mid.abs()) || mid == lo || mid == hi {
            return Ok(mid);
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Largest `x` in `[good, bad)` with `ok(x)`, assuming `ok(good)` holds and
/// the feasible set is an interval starting at `good`.
pub fn bisect_largest<F: FnMut(f64) -> bool>(mut ok: F, mut good: f64, mut bad: f64, iters: usize) -> f64 {
    for _ in 0..iters {
        let mid = 0.5 * (good + bad);
        if ok(mid) {
            good = mid;
        } else {
            bad = mid;
        }
    }
    good
}

/// Independent ChaCha stream `stream` under root `seed`.
pub fn rng_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// `n` points from `a` to `b` inclusive.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

/// `n` logarithmically spaced points from `a` to `b` inclusive (`0 < a < b`).
pub fn logspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    let (la, lb) = (a.ln(), b.ln());
    linspace(la, lb, n).into_iter().map(f64::exp).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_is_symmetric_with_peak_slope_two() {
        for &x in &[0.1, 0.25, 0.4, 0.77] {
            assert!((SmoothStep::value(1.0 - x) - (1.0 - SmoothStep::value(x))).abs() < 1e-15);
        }
        let peak = (1..1000)
            .map(|i| SmoothStep::jet(i as f64 / 1000.0).d1())
            .fold(0.0_f64, f64::max);
        assert!((peak - SmoothStep::MAX_SLOPE).abs() < 1e-12);
    }

    #[test]
    fn step_integral_is_half_at_one() {
        assert!((SmoothStep::integral(1.0) - 0.5).abs() < 1e-15);
        // independent: trapezoid on a fine grid
        let x = 0.63;
        let n = 200_000;
        let h = x / n as f64;
        let trap: f64 = (0..n)
            .map(|i| 0.5 * h * (SmoothStep::value(i as f64 * h) + SmoothStep::value((i + 1) as f64 * h)))
            .sum();
        assert!((SmoothStep::integral(x) - trap).abs() < 1e-10);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let v = gl_integrate(|x| x.powi(9) - 3.0 * x * x, -1.0, 2.0, 1);
        let exact = (2f64.powi(10) - 1.0) / 10.0 - (8.0 + 1.0);
        assert!((v - exact).abs() < 1e-12);
    }

    #[test]
    fn cumulative_rule_is_fourth_order() {
        let err = |n: usize| {
            let h = 2.0 / (n - 1) as f64;
            let f: Vec<f64> = (0..n).map(|i| (i as f64 * h).cos()).collect();
            let c = cumulative_integral(&f, h);
            (0..n).map(|i| (c[i] - (i as f64 * h).sin()).abs()).fold(0.0, f64::max)
        };
        let ratio = err(101) / err(201);
        assert!(ratio > 12.0, "ratio {ratio}");
    }

    #[test]
    fn fd_matches_exp() {
        let n = 64;
        let h = 1.0 / (n - 1) as f64;
        let f: Vec<f64> = (0..n).map(|i| (i as f64 * h).exp()).collect();
        let (d1, d2) = fd_derivatives(&f, h);
        for i in 0..n {
            assert!((d1[i] - f[i]).abs() < 1e-6);
            assert!((d2[i] - f[i]).abs() < 1e-4);
        }
    }

    #[test]
    fn bisection_finds_cos_zero() {
        let r = bisect_root(f64::cos, 0.0, 3.0, 1e-14).unwrap();
        assert!((r - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    }
}

/// Cumulative composite Simpson: even nodes exact to fourth order, odd nodes
/// by the three-point rule inside their panel, so a kink sitting on an even
/// node does not degrade the result.
pub fn cumulative_simpson(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    let mut out = vec![0.0; n];
    if n < 3 {
        if n == 2 {
            out[1] = 0.5 * h * (f[0] + f[1]);
        }
        return out;
    }
    let mut k = 0;
    while k + 2 < n {
        out[k + 1] = out[k] + h / 12.0 * (5.0 * f[k] + 8.0 * f[k + 1] - f[k + 2]);
        out[k + 2] = out[k] + h / 3.0 * (f[k] + 4.0 * f[k + 1] + f[k + 2]);
        k += 2;
    }
    if k + 1 < n {
        out[k + 1] = out[k] + h / 12.0 * (-f[k - 1] + 8.0 * f[k] + 5.0 * f[k + 1]);
    }
    out
}

/// Sixth-order integrals over `[i, i+1]` using nodes `i-2..=i+3`; entries
/// without a full stencil are NaN.
pub fn interval_integrals6(f: &[f64], h: f64) -> Vec<f64> {
    const W: [f64; 6] = [11.0, -93.0, 802.0, 802.0, -93.0, 11.0];
    let n = f.len();
    let mut out = vec![f64::NAN; n.saturating_sub(1)];
    for i in 2..n.saturating_sub(3) {
        out[i] = h / 1440.0 * (0..6).map(|k| W[k] * f[i - 2 + k]).sum::<f64>();
    }
    out
}

/// [`fd_central6`] applied to the samples whose successive differences are
/// `inc` (`inc[j] = f[j+1] − f[j]`). Differencing increments instead of
/// values avoids the `ε·|f|/h²` cancellation floor.
pub fn fd_central6_increments(inc: &[f64], h: f64) -> (Vec<f64>, Vec<f64>) {
    const W1: [f64; 7] = [-1.0, 9.0, -45.0, 0.0, 45.0, -9.0, 1.0];
    const W2: [f64; 7] = [2.0, -27.0, 270.0, -490.0, 270.0, -27.0, 2.0];
    let n = inc.len() + 1;
    let mut d1 = vec![f64::NAN; n];
    let mut d2 = vec![f64::NAN; n];
    for i in 3..n.saturating_sub(3) {
        // offsets f[i+k] − f[i] for k = −3..=3
        let mut off = [0.0; 7];
        for k in 1..=3 {
            off[3 + k] = off[3 + k - 1] + inc[i + k - 1];
            off[3 - k] = off[3 - k + 1] - inc[i - k];
        }
        d1[i] = (0..7).map(|k| W1[k] * off[k]).sum::<f64>() / (60.0 * h);
        d2[i] = (0..7).map(|k| W2[k] * off[k]).sum::<f64>() / (180.0 * h * h);
    }
    (d1, d2)
}
