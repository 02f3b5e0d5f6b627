//! Rotationally symmetric disc metrics `α²dt² + β²g_{S^{q−1}}` (times a
//! flat `ℝ^{n−q}`) and their deformation to a scaled torpedo.
//!
//! Profiles are handled in arc-length form ([`normalize`]). A stage that
//! reparametrizes the profile lengthens its radius; the disc metric is then
//! recovered through the radial map `Θ = τ_g + (R − rad g)·h`, where `τ_g`
//! is the arc length of the input metric and `h` rises from 0 to 1 inside
//! `[0.05δ, 0.45δ]`. Outside that window the new metric equals the input,
//! so the outer half of the disc is never touched.
//!
//! The pipeline is `Ψ₁` (reparametrize by `φ_s`, then `ψ_s`, creating a
//! collar at `σ`), `Ψ₂` (convex combination with a torpedo on `[0, σ]`) and
//! `Φ` (radial pullback spreading the torpedo part over the whole disc).

use std::fmt;
use std::sync::Arc;

use serde_json::{json, Value};

use crate::conditions::{cone_radius, Condition, ConeOptions};
use crate::curvature_algebra::{l_operator, model_operator, BlockLayout, CurvOp};
use crate::error::{CurvError, Result};
use crate::jet::Jet;
use crate::numeric::{bisect_largest, bisect_root, gl_integrate, linspace, logspace, SmoothStep};
use crate::tolerance;
use crate::warped_metrics::{mollified_torpedo_jet, ProfileKind, WarpProfile};

type JetFn = Arc<dyn Fn(f64) -> Jet + Send + Sync>;

/// `g = α(t)²dt² + β(t)²g_{S^{q−1}}` on the coordinate disc of radius `δ`,
/// checked against conditions in dimension `n` (product with `ℝ^{n−q}`).
#[derive(Debug, Clone)]
pub struct RotMetric {
    pub q: usize,
    pub n: usize,
    pub delta: f64,
    pub alpha: WarpProfile,
    pub beta: WarpProfile,
}

impl RotMetric {
    pub fn new(q: usize, n: usize, delta: f64, alpha: WarpProfile, beta: WarpProfile) -> Result<Self> {
        if q < 2 || n < q {
            return Err(CurvError::Domain(format!("disc metric needs 2 <= q <= n, got q={q}, n={n}")));
        }
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(CurvError::Domain(format!("radius must be positive, got {delta}")));
        }
        let g = RotMetric { q, n, delta, alpha: with_delta(alpha, delta), beta: with_delta(beta, delta) };
        let mut sign = 0.0;
        for t in linspace(0.0, delta, 257) {
            let a = g.alpha.value(t);
            if !(a != 0.0 && a.is_finite()) || (sign != 0.0 && a.signum() != sign) {
                return Err(CurvError::Domain(format!("alpha vanishes or changes sign near t={t}")));
            }
            sign = a.signum();
            if !(g.beta.value(t) >= 0.0) {
                return Err(CurvError::Domain(format!("beta({t}) is negative")));
            }
        }
        Ok(g)
    }

    /// `dt² + β²g`, already in arc-length form.
    pub fn arc_length(q: usize, n: usize, beta: WarpProfile) -> Result<Self> {
        let delta = beta.delta;
        RotMetric::new(q, n, delta, WarpProfile::constant(1.0, delta), beta)
    }

    pub fn to_json(&self) -> Result<Value> {
        Ok(json!({
            "q": self.q, "n": self.n, "delta": self.delta,
            "alpha": self.alpha.to_json()?, "beta": self.beta.to_json()?,
        }))
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let int = |k: &str| {
            v.get(k)
                .and_then(Value::as_u64)
                .map(|x| x as usize)
                .ok_or_else(|| CurvError::Parse(format!("disc metric field {k:?} missing or not an integer")))
        };
        let delta = v
            .get("delta")
            .and_then(Value::as_f64)
            .ok_or_else(|| CurvError::Parse("disc metric needs delta".into()))?;
        let prof = |k: &str| {
            v.get(k)
                .ok_or_else(|| CurvError::Parse(format!("disc metric needs {k}")))
                .and_then(WarpProfile::from_json)
        };
        RotMetric::new(int("q")?, int("n")?, delta, prof("alpha")?, prof("beta")?)
    }

    /// Replaces the profiles by `grid_n` uniform samples, which makes any
    /// metric serializable.
    pub fn sampled(&self, grid_n: usize) -> Result<Self> {
        RotMetric::new(self.q, self.n, self.delta, self.alpha.sampled(grid_n)?, self.beta.sampled(grid_n)?)
    }
}

fn with_delta(p: WarpProfile, delta: f64) -> WarpProfile {
    WarpProfile { delta, ..p }
}

/// Cumulative arc length `τ(t) = ∫_0^t |α|`.
struct ArcLength {
    alpha: WarpProfile,
    sign: f64,
    h: f64,
    table: Vec<f64>,
}

impl ArcLength {
    const CELLS: usize = 1024;

    fn new(alpha: &WarpProfile, delta: f64) -> Result<Self> {
        let sign = alpha.value(0.0).signum();
        let h = delta / Self::CELLS as f64;
        let mut table = Vec::with_capacity(Self::CELLS + 1);
        table.push(0.0);
        let mut acc = 0.0;
        for i in 0..Self::CELLS {
            let lo = i as f64 * h;
            acc += gl_integrate(|t| sign * alpha.value(t), lo, lo + h, 1);
            table.push(acc);
        }
        if !acc.is_finite() || !(acc > 0.0) {
            return Err(CurvError::Domain(format!("radius is not a positive finite number ({acc})")));
        }
        Ok(ArcLength { alpha: alpha.clone(), sign, h, table })
    }

    fn rad(&self) -> f64 {
        self.table[Self::CELLS]
    }

    fn tau(&self, t: f64) -> f64 {
        let i = ((t / self.h).floor() as usize).min(Self::CELLS - 1);
        let lo = i as f64 * self.h;
        self.table[i] + gl_integrate(|x| self.sign * self.alpha.value(x), lo, t, 1)
    }

    fn jet(&self, t: f64) -> Jet {
        let a = self.alpha.jet(t).derivs();
        let s = self.sign;
        Jet::from_derivs(&[self.tau(t), s * a[0], s * a[1], s * a[2], s * a[3]])
    }

    fn inverse(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return 0.0;
        }
        let i = self.table.partition_point(|&v| v < y).clamp(1, Self::CELLS) - 1;
        let lo = i as f64 * self.h;
        let mut t = bisect_root(|t| self.tau(t) - y, lo, lo + self.h, 1e-13).unwrap_or(lo);
        // Newton keeps relative accuracy when y is tiny
        for _ in 0..3 {
            t -= (self.tau(t) - y) / (self.sign * self.alpha.value(t));
        }
        t.clamp(lo, lo + self.h)
    }
}

const W_X0: f64 = 0.05;
const W_X1: f64 = 0.45;
const W_RAMP: f64 = 0.04;

/// The transition `h` of the radial map as a jet in `t`: flat 0 below
/// `0.05δ`, flat 1 above `0.45δ`, slope at most `1/(0.36δ)`.
fn transition_jet(t: f64, delta: f64) -> Jet {
    let x = t / delta;
    if x <= W_X0 {
        return Jet::constant(0.0);
    }
    if x >= W_X1 {
        return Jet::constant(1.0);
    }
    let k = W_RAMP * delta;
    let x0 = W_X0 * delta;
    let xf = (W_X1 - W_RAMP) * delta;
    let total = xf - x0;
    let (v, d) = if t <= xf {
        let s = SmoothStep::jet_affine(t, x0, k).derivs();
        (k * SmoothStep::integral((t - x0) / k), [s[0], s[1], s[2], s[3]])
    } else {
        let s = SmoothStep::jet_affine(t, xf, k).derivs();
        let v = (xf - x0) - 0.5 * k + (t - xf) - k * SmoothStep::integral((t - xf) / k);
        (v, [1.0 - s[0], -s[1], -s[2], -s[3]])
    };
    Jet::from_derivs(&[v, d[0], d[1], d[2], d[3]]).scale(1.0 / total)
}

/// `Θ(t) = τ_ref(t) + shift·h(t)`; `τ_ref(t) = t` without a reference.
#[derive(Clone)]
struct RadialMap {
    reference: Option<Arc<ArcLength>>,
    delta: f64,
    shift: f64,
}

impl RadialMap {
    fn jet(&self, t: f64) -> Jet {
        let base = match &self.reference {
            Some(a) => a.jet(t),
            None => Jet::var(t),
        };
        base + transition_jet(t, self.delta).scale(self.shift)
    }

    fn slope_jet(&self, t: f64) -> Jet {
        let d = self.jet(t).derivs();
        Jet::from_derivs(&[d[1], d[2], d[3], d[4]])
    }

    fn check_monotone(&self) -> Result<()> {
        for t in linspace(0.0, self.delta, 513) {
            let s = self.slope_jet(t).value();
            if !(s > 0.0) {
                return Err(CurvError::Domain(format!(
                    "radial map is not a diffeomorphism (slope {s:.3e} at t={t}); the radius change {} is too large",
                    self.shift
                )));
            }
        }
        Ok(())
    }
}

/// Arc-length profile of a disc metric: `rad` and `β` on `[0, rad]`.
#[derive(Debug, Clone)]
pub struct NormalizedProfile {
    pub rad: f64,
    pub beta: WarpProfile,
}

impl NormalizedProfile {
    pub fn new(beta: WarpProfile) -> Self {
        NormalizedProfile { rad: beta.delta, beta }
    }

    /// Membership in the profile space: `β(0) = 0`, `β'(0) = 1`, even
    /// derivatives zero at 0 to order 4, `β > 0` on `(0, rad]`.
    pub fn check(&self, grid_n: usize) -> Result<()> {
        self.beta.check_regularity(grid_n)
    }
}

/// Arc-length form `𝒩(g)`: `rad g = ∫_0^δ |α|` and `β_N(τ(t)) = β(t)`.
pub fn normalize(g: &RotMetric) -> Result<NormalizedProfile> {
    if let ProfileKind::Constant { value } = g.alpha.kind {
        let a = value.abs();
        let rad = a * g.delta;
        if a == 1.0 {
            return Ok(NormalizedProfile { rad, beta: g.beta.clone() });
        }
        let beta = g.beta.clone();
        let f = move |tau: f64| beta.jet(tau / a).compose(Jet::var(tau) * (1.0 / a));
        return Ok(NormalizedProfile { rad, beta: WarpProfile::from_fn("normalized", rad, f) });
    }
    let arc = Arc::new(ArcLength::new(&g.alpha, g.delta)?);
    let rad = arc.rad();
    let beta = g.beta.clone();
    let f = move |tau: f64| {
        let t = arc.inverse(tau);
        beta.jet(t).compose(arc.jet(t).inverse(t))
    };
    Ok(NormalizedProfile { rad, beta: WarpProfile::from_fn("normalized", rad, f) })
}

/// `𝒲(β, r)`: the metric `Θ'²dt² + β(Θ)²g` on the disc of radius `δ`, with
/// `Θ(t) = t + (r − δ)·h(t)` (identity near 0, unit slope beyond `0.45δ`).
///
/// Needs `r > 0.64δ` so that `Θ` stays increasing.
pub fn denormalize(p: &NormalizedProfile, delta: f64, q: usize, n: usize) -> Result<RotMetric> {
    let map = RadialMap { reference: None, delta, shift: p.rad - delta };
    embed(p, map, q, n)
}

fn embed(p: &NormalizedProfile, map: RadialMap, q: usize, n: usize) -> Result<RotMetric> {
    map.check_monotone()?;
    let delta = map.delta;
    let m2 = map.clone();
    let alpha = WarpProfile::from_fn("radial slope", delta, move |t| m2.slope_jet(t));
    let beta_n = p.beta.clone();
    let beta = WarpProfile::from_fn("reparametrized", delta, move |t| {
        let th = map.jet(t);
        beta_n.jet(th.value()).compose(th)
    });
    RotMetric::new(q, n, delta, alpha, beta)
}

/// Outcome of the concavity search near the centre.
#[derive(Debug, Clone, PartialEq)]
pub enum Lemma54 {
    /// `0 < β' < 1` and `β'' < 0` on every grid point of `(0, t_star]`.
    Found { t_star: f64 },
    /// The first grid point `r` already violates one of the inequalities.
    Refuted { r: f64, slope: f64, second: f64 },
}

/// Largest grid `t* ≤ rad/2` with `0 < β' < 1` and `β'' < 0` on `(0, t*]`.
pub fn lemma54_witness(beta: &WarpProfile, grid_n: usize) -> Lemma54 {
    let grid = linspace(0.0, 0.5 * beta.delta, grid_n.max(3));
    let mut last = None;
    for &r in &grid[1..] {
        let j = beta.jet(r);
        let ok = j.d1() > 0.0 && j.d1() < 1.0 && j.d2() < 0.0;
        if !ok {
            return match last {
                Some(t_star) => Lemma54::Found { t_star },
                None => Lemma54::Refuted { r, slope: j.d1(), second: j.d2() },
            };
        }
        last = Some(r);
    }
    Lemma54::Found { t_star: last.expect("grid has interior points") }
}

/// Membership margin of `R^β(r)` for a warped profile, reusing the two
/// building-block operators.
pub struct WarpedMargin<'a> {
    c: &'a Condition,
    model: CurvOp,
    l: CurvOp,
}

impl<'a> WarpedMargin<'a> {
    pub fn new(c: &'a Condition, q: usize) -> Result<Self> {
        let layout = BlockLayout::warped(c.n, q)?;
        Ok(WarpedMargin { c, model: model_operator(c.n, q - 1)?, l: l_operator(&layout)? })
    }

    /// `(λ, μ_L)` from a jet at `r`; the limit `−β'''(0)` at `r = 0`.
    /// Assumes `β'(0) = 1`.
    pub fn coefficients(j: &Jet, r: f64) -> Result<(f64, f64)> {
        if r == 0.0 {
            let c = -j.deriv(3);
            return Ok((c, c));
        }
        let b = j.value();
        if !(b > 0.0) {
            return Err(CurvError::Singular(format!("beta({r}) = {b} is not positive")));
        }
        let d = j.derivs();
        let mut gap = 1.0 - d[1];
        if gap.abs() < 1e-8 {
            // β'(0) = 1, so 1 − β' is recovered from the jet at r; the
            // direct difference has lost every significant digit here
            gap = -d[2] * r + 0.5 * d[3] * r * r - d[4] * r.powi(3) / 6.0;
        }
        Ok((gap * (1.0 + d[1]) / (b * b), -d[2] / b))
    }

    pub fn margin_coeffs(&self, lambda: f64, mu: f64) -> Result<f64> {
        Ok(self.c.membership(&self.model.combine(lambda, &self.l, mu))?.margin)
    }

    pub fn margin(&self, j: &Jet, r: f64) -> Result<f64> {
        let (lambda, mu) = Self::coefficients(j, r)?;
        self.margin_coeffs(lambda, mu)
    }

    /// Minimum margin and its radius over `radii`.
    pub fn min_margin(&self, f: &dyn Fn(f64) -> Jet, radii: &[f64]) -> Result<(f64, f64)> {
        let mut worst = (f64::INFINITY, f64::NAN);
        for &r in radii {
            let m = self.margin(&f(r), r)?;
            if m < worst.0 {
                worst = (m, r);
            }
        }
        Ok(worst)
    }

    pub fn operator(&self, lambda: f64, mu: f64) -> CurvOp {
        self.model.combine(lambda, &self.l, mu)
    }
}

/// One verified clause of a diffeomorphism family.
#[derive(Debug, Clone, PartialEq)]
pub struct Clause {
    pub name: String,
    /// Worst defect found (0 or negative is best).
    pub worst: f64,
    pub tol: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ClauseReport {
    pub clauses: Vec<Clause>,
}

impl ClauseReport {
    fn push(&mut self, name: &str, worst: f64, tol: f64) {
        self.clauses.push(Clause { name: name.into(), worst, tol, pass: worst <= tol });
    }

    pub fn all_pass(&self) -> bool {
        self.clauses.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> Vec<&Clause> {
        self.clauses.iter().filter(|c| !c.pass).collect()
    }
}

/// Reparametrizations `φ_s` with `φ_s' = 1 − sC₂·P`, where `P` rises from 0
/// to 1 on `[a, b]`, equals 1 on `[b, c]` and falls back on `[c, d]`;
/// `c = φ_s⁻¹(0.8t*)`, `d = φ_s⁻¹(0.9t*)`, `e = φ_s⁻¹(t*)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiFamily {
    pub c1: f64,
    pub c2: f64,
    pub t_star: f64,
    pub t_low: f64,
    pub a: f64,
    pub b: f64,
}

impl PhiFamily {
    /// Chooses the largest `C₂ ∈ (0, ½]` (bisection) with `φ₁'' ≤ C₁`.
    pub fn new(c1: f64, t_star: f64, t_low: f64, a: f64, b: f64) -> Result<Self> {
        if !(c1 > 0.0 && c1 <= 1.0 && t_low > 0.0 && t_low < 0.5 * t_star && a > 0.0 && a < b && b < t_low) {
            return Err(CurvError::Domain(format!(
                "phi family needs 0 < C1 <= 1, 0 < t_low < t*/2, 0 < a < b < t_low; got C1={c1}, t*={t_star}, t_low={t_low}, a={a}, b={b}"
            )));
        }
        let fam = |c2: f64| PhiFamily { c1, c2, t_star, t_low, a, b };
        let ok = |c2: f64| fam(c2).max_second(1.0) <= c1;
        let c2 = if ok(0.5) { 0.5 } else { bisect_largest(ok, 0.0, 0.5, 60) };
        if !(c2 > 0.0) {
            return Err(CurvError::Infeasible(format!("no C2 > 0 satisfies phi'' <= C1 = {c1}")));
        }
        Ok(fam(c2))
    }

    fn slope(&self, s: f64) -> f64 {
        1.0 - s * self.c2
    }

    pub fn c(&self, s: f64) -> f64 {
        let at_b = self.b - s * self.c2 * 0.5 * (self.b - self.a);
        self.b + (0.8 * self.t_star - at_b) / self.slope(s)
    }

    pub fn d(&self, s: f64) -> f64 {
        self.c(s) + 0.1 * self.t_star / (1.0 - 0.5 * s * self.c2)
    }

    pub fn e(&self, s: f64) -> f64 {
        self.d(s) + 0.1 * self.t_star
    }

    /// `∫_0^x P` and the jet of `P` at `x`.
    fn profile(&self, s: f64, x: f64) -> (f64, Jet) {
        let (a, b, c, d) = (self.a, self.b, self.c(s), self.d(s));
        if x <= c {
            (
                (b - a) * SmoothStep::integral((x - a) / (b - a)),
                SmoothStep::jet_affine(x, a, b - a),
            )
        } else {
            let w = d - c;
            let base = 0.5 * (b - a) + (c - b);
            let u = (x - c) / w;
            (base + w * (u.min(1.0) - SmoothStep::integral(u) + (u - 1.0).max(0.0)), Jet::constant(1.0) - SmoothStep::jet_affine(x, c, w))
        }
    }

    /// Jet of `φ_s` at `x`.
    pub fn jet(&self, s: f64, x: f64) -> Jet {
        let (int, p) = self.profile(s, x);
        let p = p.derivs();
        let k = s * self.c2;
        Jet::from_derivs(&[x - k * int, 1.0 - k * p[0], -k * p[1], -k * p[2], -k * p[3]])
    }

    /// `x − φ_s(x)` for `x ≥ d(s)`.
    pub fn deficit(&self, s: f64) -> f64 {
        s * self.c2 * (0.5 * (self.b - self.a) + (self.c(s) - self.b) + 0.5 * (self.d(s) - self.c(s)))
    }

    pub fn inverse(&self, s: f64, y: f64) -> f64 {
        bisect_root(|x| self.jet(s, x).value() - y, 0.0, y + self.deficit(s) + 1.0, 1e-15).unwrap_or(y)
    }

    fn max_second(&self, s: f64) -> f64 {
        linspace(self.c(s), self.d(s), 257)
            .into_iter()
            .map(|x| self.jet(s, x).d2())
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Verifies clauses (i)–(vi) on `samples` values of `s` in `[0, 1]`.
    pub fn clauses(&self, samples: usize) -> ClauseReport {
        let mut rep = ClauseReport::default();
        let (mut id, mut pin, mut plateau, mut flat) = (0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64);
        let (mut bounds, mut curv, mut sign, mut marks) = (f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY, 0.0_f64);
        for s in linspace(0.0, 1.0, samples) {
            let (c, d, e) = (self.c(s), self.d(s), self.e(s));
            let grid = linspace(0.0, 1.25 * e, 2001);
            if s == 0.0 {
                id = grid.iter().map(|&x| (self.jet(0.0, x).value() - x).abs()).fold(id, f64::max);
            }
            pin = pin.max(self.jet(s, 0.0).value().abs()).max((self.jet(s, e).value() - self.t_star).abs());
            marks = marks
                .max((self.jet(s, c).value() - 0.8 * self.t_star).abs())
                .max((self.jet(s, d).value() - 0.9 * self.t_star).abs());
            // midpoints of a uniform partition of [b, c]
            for i in 0..64 {
                let x = self.b + (c - self.b) * (i as f64 + 0.5) / 64.0;
                let j = self.jet(s, x).derivs();
                plateau = plateau.max((j[1] - self.slope(s)).abs());
                plateau = plateau.max(j[2].abs()).max(j[3].abs()).max(j[4].abs());
            }
            for &x in &grid {
                let j = self.jet(s, x).derivs();
                if x <= self.a || x >= d {
                    flat = flat.max((j[1] - 1.0).abs());
                }
                bounds = bounds.max(j[1] - 1.0).max(1.0 - self.c2 - j[1]);
                curv = curv.max(j[2] - self.c1);
                if x >= self.a && x <= self.b {
                    sign = sign.max(j[2]);
                }
                if x >= c && x <= d {
                    sign = sign.max(-j[2]);
                }
            }
        }
        rep.push("(i) phi_0 = id", id, 1e-15);
        rep.push("(ii) phi_s(0) = 0, phi_s(e(s)) = t*", pin, 1e-10);
        rep.push("c, d are the preimages of 0.8t*, 0.9t*", marks, 1e-10);
        rep.push("(iii) phi' = 1 - sC2 and higher derivatives vanish on [b, c]", plateau, 1e-12);
        rep.push("(iii) phi' = 1 on [0, a] and [d, inf)", flat, 1e-12);
        rep.push("(iv) 1 - C2 <= phi' <= 1", bounds, 1e-15);
        rep.push("(v) phi'' <= C1", curv, 1e-9);
        rep.push("(vi) phi'' <= 0 on [a, b], >= 0 on [c, d]", sign, 1e-15);
        rep
    }
}

fn ln_jet(t: f64) -> Jet {
    Jet::from_derivs(&[t.ln(), 1.0 / t, -1.0 / (t * t), 2.0 / t.powi(3), -6.0 / t.powi(4)])
}

/// Reparametrizations `ψ_s` with `ψ_s' = 1 − s·F`. `F` rises from 0 to 1
/// on `[ā, b̄]`, then decays like `exp(−γH(ln(t/b̄)))` with `H' = S` and
/// `γ = D₁/2`, and is cut off to 0 over `[0.45t**, 0.9t**]`. The power-law
/// phase gives `t·ψ_s'' ≤ sγF`; `b̄` is chosen small enough that the
/// cutoff adds at most `4F ≤ D₁/2`. At `s = 1`, `ψ₁'` vanishes to infinite
/// order at `b̄`.
#[derive(Debug, Clone, PartialEq)]
pub struct PsiFamily {
    pub d1: f64,
    pub t_dstar: f64,
    pub gamma: f64,
    pub a_bar: f64,
    pub b_bar: f64,
    cut_lo: f64,
    cut_hi: f64,
    /// Cumulative `∫_{b̄} F` at `ln(t/b̄) = k·LOG_STEP`.
    table: Vec<f64>,
    deficit_total: f64,
}

impl PsiFamily {
    const LOG_STEP: f64 = 0.125;

    pub fn new(d1: f64, t_dstar: f64) -> Result<Self> {
        if !(d1 > 0.0 && d1 <= 1.0 && t_dstar > 0.0) {
            return Err(CurvError::Domain(format!("psi family needs 0 < D1 <= 1 and t** > 0, got D1={d1}, t**={t_dstar}")));
        }
        let gamma = 0.5 * d1;
        let (cut_lo, cut_hi) = (0.45 * t_dstar, 0.9 * t_dstar);
        // F(cut_lo) = exp(−γ(x − ½)) = D₁/8
        let depth = (8.0 / d1).ln() / gamma + 0.5;
        let b_bar = cut_lo * (-depth).exp();
        if !(b_bar > 1e-250) {
            return Err(CurvError::Infeasible(format!("collar radius underflows for D1={d1}")));
        }
        let mut fam = PsiFamily {
            d1,
            t_dstar,
            gamma,
            a_bar: 0.1 * b_bar,
            b_bar,
            cut_lo,
            cut_hi,
            table: vec![0.0],
            deficit_total: 0.0,
        };
        let x_end = (cut_hi / b_bar).ln();
        let cells = (x_end / Self::LOG_STEP).ceil() as usize;
        let mut acc = 0.0;
        for k in 0..cells {
            let x0 = k as f64 * Self::LOG_STEP;
            acc += gl_integrate(|x| fam.decay_in_log(x), x0, x0 + Self::LOG_STEP, 1);
            fam.table.push(acc);
        }
        fam.deficit_total = fam.f_integral(cut_hi);
        Ok(fam)
    }

    /// `F(b̄eˣ)·b̄eˣ`, the decay integrand in the log variable.
    fn decay_in_log(&self, x: f64) -> f64 {
        let t = self.b_bar * x.exp();
        self.f_jet(t).value() * t
    }

    fn f_integral(&self, t: f64) -> f64 {
        let (a, b) = (self.a_bar, self.b_bar);
        let rise = (b - a) * SmoothStep::integral((t.min(b) - a) / (b - a));
        if t <= b {
            return rise;
        }
        let x = (t.min(self.cut_hi) / b).ln();
        let k = ((x / Self::LOG_STEP).floor() as usize).min(self.table.len() - 1);
        let x0 = k as f64 * Self::LOG_STEP;
        rise + self.table[k] + gl_integrate(|y| self.decay_in_log(y), x0, x, 1)
    }

    fn f_jet(&self, t: f64) -> Jet {
        if t <= self.b_bar {
            return SmoothStep::jet_affine(t, self.a_bar, self.b_bar - self.a_bar);
        }
        if t >= self.cut_hi {
            return Jet::constant(0.0);
        }
        let x = ln_jet(t) - self.b_bar.ln();
        let xv = x.value();
        let s = SmoothStep::jet(xv).derivs();
        let h = Jet::from_derivs(&[SmoothStep::integral(xv), s[0], s[1], s[2], s[3]]).compose(x);
        let decay = (h * (-self.gamma)).exp();
        if t <= self.cut_lo {
            return decay;
        }
        decay * (Jet::constant(1.0) - SmoothStep::jet_affine(t, self.cut_lo, self.cut_hi - self.cut_lo))
    }

    pub fn jet(&self, s: f64, t: f64) -> Jet {
        let f = self.f_jet(t).derivs();
        Jet::from_derivs(&[t - s * self.f_integral(t), 1.0 - s * f[0], -s * f[1], -s * f[2], -s * f[3]])
    }

    /// `t − ψ_s(t)` for `t ≥ 0.9t**`.
    pub fn deficit(&self, s: f64) -> f64 {
        s * self.deficit_total
    }

    /// `ē(s)`, where `ψ_s(ē) = t**`; `ψ_s' ≡ 1` from `0.9t** < ē` on.
    pub fn e_bar(&self, s: f64) -> f64 {
        self.t_dstar + self.deficit(s)
    }

    pub fn inverse(&self, s: f64, y: f64) -> f64 {
        bisect_root(|t| self.jet(s, t).value() - y, 0.0, y + self.deficit(s) + 1.0, 1e-15).unwrap_or(y)
    }

    /// `c̄(s) = ψ_s⁻¹(0.9t**)`.
    pub fn c_bar(&self, s: f64) -> f64 {
        self.inverse(s, 0.9 * self.t_dstar)
    }

    fn grid(&self, s: f64) -> Vec<f64> {
        let e = self.e_bar(s);
        let mut grid = logspace(0.25 * self.a_bar, 2.0 * e, 3000);
        grid.extend(linspace(0.0, 2.0 * e, 1001));
        grid
    }

    /// Verifies clauses (i)–(vi); flatness at `b̄` up to derivative `order`.
    pub fn clauses(&self, samples: usize, order: usize) -> ClauseReport {
        let mut rep = ClauseReport::default();
        let (mut id, mut pin, mut range, mut unit, mut curv, mut order_defect) =
            (0.0_f64, 0.0_f64, f64::NEG_INFINITY, 0.0_f64, f64::NEG_INFINITY, 0.0_f64);
        for s in linspace(0.0, 1.0, samples) {
            let e = self.e_bar(s);
            let grid = self.grid(s);
            if s == 0.0 {
                id = grid.iter().map(|&t| (self.jet(0.0, t).value() - t).abs()).fold(id, f64::max);
            }
            pin = pin.max(self.jet(s, 0.0).value().abs()).max((self.jet(s, e).value() - self.t_dstar).abs() / self.t_dstar);
            let cb = self.c_bar(s);
            order_defect = order_defect.max(if self.a_bar < cb && cb < e { 0.0 } else { 1.0 });
            for &t in &grid {
                let j = self.jet(s, t).derivs();
                range = range.max(j[1] - 1.0).max(-j[1]);
                if t <= self.a_bar || t >= e {
                    unit = unit.max((j[1] - 1.0).abs());
                }
                if t > 0.0 {
                    curv = curv.max(j[2] * t - self.d1);
                }
            }
        }
        let mut flat = 0.0_f64;
        let j = self.jet(1.0, self.b_bar).derivs();
        for k in 1..=order.min(4) {
            // k-th derivative scaled to the collar radius
            flat = flat.max(j[k].abs() * self.b_bar.powi(k as i32 - 1));
        }
        rep.push("(i) psi_0 = id", id, 1e-15);
        rep.push("(ii) psi_s(0) = 0, psi_s(e(s)) = t**", pin, 1e-10);
        rep.push("a < c(s) < e(s)", order_defect, 0.0);
        rep.push("(iii) 0 <= psi' <= 1", range, 1e-15);
        rep.push("(iv) psi' = 1 on [0, a] and [e(s), inf)", unit, 1e-12);
        rep.push("(v) t psi'' <= D1", curv, 1e-9);
        rep.push("(vi) psi_1 derivatives vanish at b(1)", flat, tolerance::COLLAR_FLATNESS);
        rep
    }
}

#[derive(Debug, Clone)]
pub struct DiscOptions {
    pub grid_n: usize,
    /// Parameter samples per stage.
    pub samples: usize,
    /// Highest derivative order checked for infinite-order flatness.
    pub flat_order: usize,
    pub cone: ConeOptions,
    /// Smallest admissible `D₁` on the search ladder.
    pub min_d1: f64,
}

impl Default for DiscOptions {
    fn default() -> Self {
        DiscOptions { grid_n: 4096, samples: 11, flat_order: 4, cone: ConeOptions::default(), min_d1: 0.03 }
    }
}

/// Cone opening of the condition at `R_{ℝ×S^{q−1}}`; with it the stage-two
/// slack is `C** = ½·ρ·λ/‖L‖`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConeOpening {
    pub rho_model: f64,
    pub l_norm: f64,
}

impl ConeOpening {
    pub fn compute(c: &Condition, q: usize, opts: &ConeOptions) -> Result<Self> {
        let model = model_operator(c.n, q - 1)?;
        let cert = cone_radius(c, &model, opts)?;
        if !(cert.radius > 0.0) {
            return Err(CurvError::Infeasible(format!("{} has no cone opening at the model operator for q={q}", c.name())));
        }
        let l = l_operator(&BlockLayout::warped(c.n, q)?)?;
        Ok(ConeOpening { rho_model: cert.radius, l_norm: l.frobenius() })
    }

    pub fn c_star_star(&self, lambda: f64) -> f64 {
        0.5 * self.rho_model * lambda / self.l_norm
    }
}

/// Constants of the two reparametrization stages.
#[derive(Debug, Clone)]
pub struct Psi1Plan {
    pub rad: f64,
    pub t_star: f64,
    pub phi: PhiFamily,
    pub t_dstar: f64,
    pub psi: PsiFamily,
    pub opening: ConeOpening,
    pub sigma: f64,
}

impl Psi1Plan {
    fn stage_one(&self, base: &WarpProfile, s: f64) -> (JetFn, f64) {
        let (b, phi) = (base.clone(), self.phi.clone());
        let f = move |x: f64| {
            let m = phi.jet(s, x);
            b.jet(m.value()).compose(m)
        };
        (Arc::new(f), self.rad + self.phi.deficit(s))
    }

    fn stage_two(&self, base: &WarpProfile, s: f64) -> (JetFn, f64) {
        let (b, phi, psi) = (base.clone(), self.phi.clone(), self.psi.clone());
        let f = move |x: f64| {
            let p = psi.jet(s, x);
            let m = phi.jet(1.0, p.value()).compose(p);
            b.jet(m.value()).compose(m)
        };
        (Arc::new(f), self.rad + self.phi.deficit(1.0) + self.psi.deficit(s))
    }
}

fn c_star_star_ok(plan: &Psi1Plan, base: &WarpProfile) -> bool {
    for s in [0.25, 0.5, 0.75, 1.0] {
        let (f, _) = plan.stage_two(base, s);
        let mut grid = logspace(plan.psi.a_bar, plan.psi.e_bar(s), 1500);
        grid.extend(linspace(plan.psi.a_bar, plan.psi.e_bar(s), 300));
        for t in grid {
            let j = f(t);
            let Ok((lambda, mu)) = WarpedMargin::coefficients(&j, t) else { return false };
            if !(lambda > 0.0 && mu + plan.opening.c_star_star(lambda) >= 0.0) {
                return false;
            }
        }
    }
    true
}

/// Chooses the constants of `Ψ₁` for an arc-length profile.
///
/// `t*` from [`lemma54_witness`]; `t_* = 0.45t*`, `a = t_*/2`, `b = 0.8t_*`;
/// `C₁ = min(1, ¼·min(−β''/β'))` over `[0.75t*, t*]`, which keeps
/// `−β''(φ)φ'²/β'(φ) ≥ φ''` on `[c, d]` while `C₂ ≤ ½`; `t** = (b + 0.8t*)/2`.
/// `D₁` is the largest value on the ladder `0.85^k` for which the
/// sampled stage-two profiles satisfy `μ_L ≥ −C**(λ)`.
pub fn plan_psi1(base: &NormalizedProfile, opening: ConeOpening, opts: &DiscOptions) -> Result<Psi1Plan> {
    let beta = &base.beta;
    let t_star = match lemma54_witness(beta, opts.grid_n) {
        Lemma54::Found { t_star } => t_star,
        Lemma54::Refuted { r, slope, second } => {
            return Err(CurvError::Domain(format!(
                "profile is not concave near 0 (beta'={slope}, beta''={second} at r={r}); it cannot satisfy a deformable condition"
            )))
        }
    };
    let t_low = 0.45 * t_star;
    let (a, b) = (0.5 * t_low, 0.8 * t_low);
    let ratio = linspace(0.75 * t_star, t_star, 65)
        .into_iter()
        .map(|x| {
            let j = beta.jet(x);
            -j.d2() / j.d1()
        })
        .fold(f64::INFINITY, f64::min);
    let c1 = (0.25 * ratio).min(1.0);
    let phi = PhiFamily::new(c1, t_star, t_low, a, b)?;
    let t_dstar = 0.5 * (b + 0.8 * t_star);
    let mut d1 = 1.0;
    while d1 >= opts.min_d1 {
        let psi = PsiFamily::new(d1, t_dstar)?;
        let plan = Psi1Plan { rad: base.rad, t_star, phi: phi.clone(), t_dstar, sigma: psi.b_bar, psi, opening };
        if c_star_star_ok(&plan, beta) {
            return Ok(plan);
        }
        d1 *= 0.85;
    }
    Err(CurvError::Infeasible(format!(
        "no D1 >= {:.3e} keeps the stage-two profiles within the C** slack",
        opts.min_d1
    )))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    /// `β ∘ φ_s`.
    Phi,
    /// `β ∘ φ₁ ∘ ψ_s`.
    Psi,
    /// `(1 − u)β + u·β_tor` on `[0, σ]`, spliced over `[σ, 1.1σ]`.
    Convex,
    /// Radial pullback spreading the torpedo part over the disc.
    Straighten,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Phi => "psi1_phi",
            Stage::Psi => "psi1_psi",
            Stage::Convex => "psi2_convex",
            Stage::Straighten => "phi",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceSample {
    pub stage: Stage,
    /// Parameter within the stage, in `[0, 1]`.
    pub s: f64,
    pub min_margin: f64,
    pub argmin_r: f64,
    /// Arc-length radius of the sampled profile.
    pub rad: f64,
    /// `σ` during `Ψ₁`/`Ψ₂`, `δ*` during `Φ`.
    pub sigma_or_delta_star: f64,
    /// Sup of `|α − α_g|` and `|β − β_g|` on `[0.95δ, δ]`; `NaN` for `Φ`.
    pub boundary_defect: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DeformationTrace {
    pub samples: Vec<TraceSample>,
}

impl DeformationTrace {
    pub fn min_margin(&self) -> f64 {
        self.samples.iter().map(|s| s.min_margin).fold(f64::INFINITY, f64::min)
    }

    pub fn all_inside(&self) -> bool {
        self.samples.iter().all(|s| s.min_margin > tolerance::EPS_STRICT)
    }

    pub fn max_boundary_defect(&self) -> f64 {
        self.samples
            .iter()
            .filter(|s| !s.boundary_defect.is_nan())
            .map(|s| s.boundary_defect)
            .fold(0.0, f64::max)
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for s in &self.samples {
            let rec = json!({
                "stage": s.stage.to_string(), "s": s.s, "min_margin": s.min_margin,
                "sigma_or_delta_star": s.sigma_or_delta_star,
            });
            out.push_str(&rec.to_string());
            out.push('\n');
        }
        out
    }
}

/// Everything the pipeline verified for one input metric.
#[derive(Debug, Clone)]
pub struct PipelineReport {
    pub condition: String,
    pub trace: DeformationTrace,
    pub plan: Psi1Plan,
    pub phi_clauses: ClauseReport,
    pub psi_clauses: ClauseReport,
    /// Frobenius defect of the plateau decomposition of stage one.
    pub decomposition_defect: f64,
    /// `|β^{(l)}(σ)|` for `l = 1..=flat_order` after `Ψ₁`.
    pub collar_derivatives: Vec<f64>,
    /// Worst violation of `0 ≤ β' ≤ 1`, `β'' ≤ 0` on `[0, σ]` after `Ψ₁`.
    pub collar_shape_defect: f64,
    /// `min (λ(β_u) − min(λ(β), λ(β_tor)))` relative, over the convex stage.
    pub sandwich_min: f64,
    /// `max β_u''/β_u` on `[0, σ]` over the convex stage.
    pub convex_second_max: f64,
    /// Cap height `μ` of the target torpedo on the full disc.
    pub torpedo_mu: f64,
    /// `sup |Ψ₂(g,1) − scaled torpedo|` on `[0, σ]`.
    pub sigma_torpedo_defect: f64,
    pub delta_star: f64,
    /// Relative sup defect of the final metric against `(δ*/δ)·torpedo`.
    pub final_torpedo_defect: f64,
    /// `sup |Ψ₂(g,1) − g|` over `[δ/2, δ]` in disc coordinates.
    pub annulus_defect: f64,
    /// `|rad(ψ_s^*(dt² + β̃²g)) − rad|` over the stage-two samples.
    pub composition_defect: f64,
    pub final_metric: RotMetric,
}

impl PipelineReport {
    pub fn passes(&self) -> bool {
        self.trace.all_inside()
            && self.phi_clauses.all_pass()
            && self.psi_clauses.all_pass()
            && self.final_torpedo_defect <= 1e-6
            && self.trace.max_boundary_defect() <= 1e-10
    }
}

fn margin_radii(rad: f64, grid_n: usize, lo: f64, sigma: f64) -> Vec<f64> {
    let mut r = linspace(0.0, rad, grid_n);
    r.extend(logspace(lo, rad, 600));
    r.extend(linspace(0.0, 1.25 * sigma, 400));
    r.retain(|&x| x <= rad);
    r.sort_by(|a, b| a.partial_cmp(b).expect("finite radii"));
    r.dedup();
    r
}

fn boundary_defect(g: &RotMetric, reference: &Arc<ArcLength>, f: &JetFn, shift: f64) -> f64 {
    let map = RadialMap { reference: Some(reference.clone()), delta: g.delta, shift };
    let mut worst = 0.0_f64;
    for t in linspace(0.95 * g.delta, g.delta, 21) {
        let th = map.jet(t);
        worst = worst
            .max((f(th.value()).value() - g.beta.value(t)).abs())
            .max((map.slope_jet(t).value() - g.alpha.value(t).abs()).abs());
    }
    worst
}

/// The convex stage: `B + u(T − B)(1 − S((x − σ)/(σ/10)))` with `T` the
/// torpedo of cap height `B(σ)`.
fn convex_profile(b: JetFn, sigma: f64, cap: f64, u: f64) -> JetFn {
    Arc::new(move |x: f64| {
        let bj = b(x);
        if x >= 1.1 * sigma || u == 0.0 {
            return bj;
        }
        let cut = Jet::constant(1.0) - SmoothStep::jet_affine(x, sigma, 0.1 * sigma);
        bj + (mollified_torpedo_jet(cap, x) - bj) * cut * u
    })
}

/// Radius of the largest sub-disc on which the arc-length profile equals a
/// scaled copy `(δ*/δ)·β_tor(δx/δ*)` of the torpedo with cap height `mu`;
/// 0 when it is not locally torpedo. The scale is read off `β'''(0)`.
pub fn delta_star(p: &NormalizedProfile, mu: f64, delta: f64, grid_n: usize) -> f64 {
    let d3 = p.beta.jet(0.0).deriv(3);
    if !(d3 < 0.0) {
        return 0.0;
    }
    let cap = (-1.0 / d3).sqrt();
    let ds = cap * delta / mu;
    if !(ds <= p.rad * (1.0 + 1e-12)) {
        return 0.0;
    }
    let ds = ds.min(p.rad);
    let ok = linspace(0.0, ds, grid_n)
        .into_iter()
        .all(|x| (p.beta.value(x) - mollified_torpedo_jet(cap, x).value()).abs() <= tolerance::TORPEDO_MATCH);
    if ok {
        ds
    } else {
        0.0
    }
}

/// `Φ(g, s) = φ_s^*g` with `φ_s(t) = (1 − s)t + s·τ_g⁻¹(δ*t/δ)`; at `s = 1`
/// the pulled-back metric is `(δ*/δ)²(dt² + β_tor²g)` on the whole disc
/// when `g` is locally torpedo with radius `δ*`.
pub fn straighten_phi(g: &RotMetric, delta_star: f64, s: f64) -> Result<RotMetric> {
    if !(delta_star > 0.0) {
        return Err(CurvError::Domain("metric is not locally torpedo (delta* = 0)".into()));
    }
    if !(0.0..=1.0).contains(&s) {
        return Err(CurvError::Domain(format!("parameter {s} outside [0, 1]")));
    }
    let arc = Arc::new(ArcLength::new(&g.alpha, g.delta)?);
    if delta_star > arc.rad() * (1.0 + 1e-12) {
        return Err(CurvError::Domain(format!("delta* = {delta_star} exceeds rad = {}", arc.rad())));
    }
    let k = delta_star / g.delta;
    let sign = arc.sign;
    let map = move |t: f64| -> Jet {
        let y = Jet::var(t) * k;
        let x = arc.inverse(y.value());
        let inv = arc.jet(x).inverse(x).compose(y);
        Jet::var(t) * (1.0 - s) + inv * s
    };
    let map = Arc::new(map);
    let (m1, m2) = (map.clone(), map);
    let (alpha, beta) = (g.alpha.clone(), g.beta.clone());
    let a = WarpProfile::from_fn("pulled-back alpha", g.delta, move |t| {
        let m = m1(t);
        let d = m.derivs();
        let slope = Jet::from_derivs(&[d[1], d[2], d[3], d[4]]);
        alpha.jet(m.value()).compose(m) * slope * sign
    });
    let b = WarpProfile::from_fn("pulled-back beta", g.delta, move |t| {
        let m = m2(t);
        beta.jet(m.value()).compose(m)
    });
    RotMetric::new(g.q, g.n, g.delta, a, b)
}

fn margin_trace_sample(
    eval: &WarpedMargin,
    stage: Stage,
    s: f64,
    f: &JetFn,
    rad: f64,
    radii: &[f64],
    mark: f64,
    boundary: f64,
) -> Result<TraceSample> {
    let r: Vec<f64> = radii.iter().copied().filter(|&x| x <= rad).collect();
    let (m, at) = eval.min_margin(f.as_ref(), &r)?;
    Ok(TraceSample { stage, s, min_margin: m, argmin_r: at, rad, sigma_or_delta_star: mark, boundary_defect: boundary })
}

/// Runs `Ψ₁`, `Ψ₂` and `Φ` on `g` and verifies every stated property.
///
/// Fails early if `g` itself is not inside `C`; margin dips along the way are
/// recorded in the trace rather than raised, so the report shows where.
pub fn standardize(g: &RotMetric, c: &Condition, opening: ConeOpening, opts: &DiscOptions) -> Result<PipelineReport> {
    if c.n != g.n {
        return Err(CurvError::Dimension { expected: g.n, got: c.n });
    }
    let eval = WarpedMargin::new(c, g.q)?;
    let base = normalize(g)?;
    let input_radii = margin_radii(base.rad, opts.grid_n, 1e-6 * base.rad, 0.0);
    let (m0, r0) = eval.min_margin(&|r| base.beta.jet(r), &input_radii)?;
    if !(m0 > tolerance::EPS_STRICT) {
        return Err(CurvError::Domain(format!("input is not inside {} (margin {m0:.3e} at r={r0})", c.name())));
    }
    let plan = plan_psi1(&base, opening, opts)?;
    let reference = Arc::new(ArcLength::new(&g.alpha, g.delta)?);
    let sigma = plan.sigma;
    let radii = margin_radii(plan.rad + plan.phi.deficit(1.0) + plan.psi.deficit(1.0), opts.grid_n, 0.25 * plan.psi.a_bar, sigma);
    let mut trace = DeformationTrace::default();

    for s in linspace(0.0, 1.0, opts.samples) {
        let (f, rad) = plan.stage_one(&base.beta, s);
        let bd = boundary_defect(g, &reference, &f, rad - base.rad);
        trace.samples.push(margin_trace_sample(&eval, Stage::Phi, s, &f, rad, &radii, sigma, bd)?);
    }
    let mut composition_defect = 0.0_f64;
    for s in linspace(0.0, 1.0, opts.samples) {
        let (f, rad) = plan.stage_two(&base.beta, s);
        let bd = boundary_defect(g, &reference, &f, rad - base.rad);
        trace.samples.push(margin_trace_sample(&eval, Stage::Psi, s, &f, rad, &radii, sigma, bd)?);
        let r1 = plan.rad + plan.phi.deficit(1.0);
        let end = plan.psi.inverse(s, r1);
        let mut knots = vec![0.0];
        knots.extend(logspace(plan.psi.a_bar, end, 400));
        let pulled: f64 = knots.windows(2).map(|w| gl_integrate(|t| plan.psi.jet(s, t).d1(), w[0], w[1], 1)).sum();
        composition_defect = composition_defect.max((pulled - r1).abs());
    }

    // stage-one plateau identity at s = 1/2 and 1
    let model = model_operator(c.n, g.q - 1)?;
    let mut decomposition_defect = 0.0_f64;
    for s in [0.5, 1.0] {
        let (f, _) = plan.stage_one(&base.beta, s);
        let k = (1.0 - s * plan.phi.c2).powi(2);
        for x in linspace(plan.phi.b, plan.phi.c(s), 65) {
            let (l1, m1) = WarpedMargin::coefficients(&f(x), x)?;
            let y = plan.phi.jet(s, x).value();
            let bj = base.beta.jet(y);
            let (l0, m0) = WarpedMargin::coefficients(&bj, y)?;
            let lhs = eval.operator(l1, m1);
            let rhs = eval.operator(l0, m0).scaled(k).combine(1.0, &model, (1.0 - k) / (bj.value() * bj.value()));
            decomposition_defect = decomposition_defect.max(lhs.dist(&rhs) / (1.0 + rhs.frobenius()));
        }
    }

    let (b_end, r1) = plan.stage_two(&base.beta, 1.0);
    let bs = b_end(sigma).derivs();
    let collar_derivatives: Vec<f64> = (1..=opts.flat_order.min(4)).map(|k| bs[k].abs()).collect();
    let mut collar_shape_defect = 0.0_f64;
    for x in linspace(0.0, sigma, 513) {
        let j = b_end(x);
        collar_shape_defect = collar_shape_defect.max(-j.d1()).max(j.d1() - 1.0).max(j.d2());
    }

    // Ψ₂: the target torpedo has cap height B(σ) at radius σ, i.e. μ = δ·B(σ)/σ on the disc
    let cap = bs[0];
    let torpedo_mu = g.delta * cap / sigma;
    if !(cap * (std::f64::consts::FRAC_PI_2 + 1.0 / 40.0) < sigma) {
        return Err(CurvError::Infeasible(format!("torpedo cap {cap:.3e} does not close before sigma = {sigma:.3e}")));
    }
    let mut sandwich_min = f64::INFINITY;
    let mut convex_second_max = f64::NEG_INFINITY;
    let mut last = b_end.clone();
    for u in linspace(0.0, 1.0, opts.samples) {
        let f = convex_profile(b_end.clone(), sigma, cap, u);
        let bd = boundary_defect(g, &reference, &f, r1 - base.rad);
        trace.samples.push(margin_trace_sample(&eval, Stage::Convex, u, &f, r1, &radii, sigma, bd)?);
        for x in linspace(0.0, sigma, 257).into_iter().skip(1) {
            let (ju, jb, jt) = (f(x), b_end(x), mollified_torpedo_jet(cap, x));
            let lam = |j: &Jet| WarpedMargin::coefficients(j, x).map(|c| c.0);
            let lo = lam(&jb)?.min(lam(&jt)?);
            sandwich_min = sandwich_min.min((lam(&ju)? - lo) / lo.abs().max(1.0));
            convex_second_max = convex_second_max.max(ju.d2() / ju.value());
        }
        last = f;
    }
    let sigma_torpedo_defect = linspace(0.0, sigma, 1025)
        .into_iter()
        .map(|x| (last(x).value() - mollified_torpedo_jet(cap, x).value()).abs())
        .fold(0.0, f64::max);

    let last_for_profile = last.clone();
    let psi2_profile = NormalizedProfile {
        rad: r1,
        beta: WarpProfile::from_fn("psi2 endpoint", r1, move |x| last_for_profile(x)),
    };
    let psi2_metric = embed(&psi2_profile, RadialMap { reference: Some(reference.clone()), delta: g.delta, shift: r1 - base.rad }, g.q, g.n)?;
    let mut annulus_defect = 0.0_f64;
    for t in linspace(0.5 * g.delta, g.delta, 201) {
        annulus_defect = annulus_defect
            .max((psi2_metric.beta.value(t) - g.beta.value(t)).abs())
            .max((psi2_metric.alpha.value(t) - g.alpha.value(t).abs()).abs());
    }

    // Φ: a pullback, so margins are those of the Ψ₂ endpoint over the shrinking radius
    let ds = delta_star(&psi2_profile, torpedo_mu, g.delta, opts.grid_n);
    let end_radii: Vec<f64> = radii.iter().copied().filter(|&x| x <= r1).collect();
    let end_margins: Vec<f64> = end_radii.iter().map(|&r| eval.margin(&last(r), r)).collect::<Result<_>>()?;
    let psi2_arc = Arc::new(ArcLength::new(&psi2_metric.alpha, g.delta)?);
    for s in linspace(0.0, 1.0, opts.samples) {
        let reach = if ds > 0.0 {
            let end = (1.0 - s) * g.delta + s * psi2_arc.inverse(ds);
            psi2_arc.tau(end)
        } else {
            r1
        };
        let (mut m, mut at) = (f64::INFINITY, f64::NAN);
        for (&r, &v) in end_radii.iter().zip(&end_margins) {
            if r <= reach * (1.0 + 1e-12) && v < m {
                m = v;
                at = r;
            }
        }
        trace.samples.push(TraceSample {
            stage: Stage::Straighten,
            s,
            min_margin: m,
            argmin_r: at,
            rad: reach,
            sigma_or_delta_star: ds,
            boundary_defect: f64::NAN,
        });
    }
    let (final_metric, final_torpedo_defect) = if ds > 0.0 {
        let fm = straighten_phi(&psi2_metric, ds, 1.0)?;
        let k = ds / g.delta;
        let mut worst = 0.0_f64;
        for t in linspace(0.0, g.delta, opts.grid_n.min(2049)) {
            worst = worst
                .max((fm.beta.value(t) / k - mollified_torpedo_jet(torpedo_mu, t).value()).abs())
                .max((fm.alpha.value(t) / k - 1.0).abs());
        }
        (fm, worst)
    } else {
        (psi2_metric, f64::INFINITY)
    };

    Ok(PipelineReport {
        condition: c.name(),
        trace,
        phi_clauses: plan.phi.clauses(opts.samples),
        psi_clauses: plan.psi.clauses(opts.samples, opts.flat_order),
        plan,
        decomposition_defect,
        collar_derivatives,
        collar_shape_defect,
        sandwich_min,
        convex_second_max,
        torpedo_mu,
        sigma_torpedo_defect,
        delta_star: ds,
        final_torpedo_defect,
        annulus_defect,
        composition_defect,
        final_metric,
    })
}
