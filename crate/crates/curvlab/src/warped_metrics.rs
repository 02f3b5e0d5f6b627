//! Warping profiles `β: [0, δ] → [0, ∞)` and the curvature of
//! `dr² + β(r)² g_{S^{q−1}}` (times a flat factor `ℝ^{n−q}`).
//!
//! The pulled-back curvature operator is
//! `R^β = λ·R_{ℝ×S^{q−1}} + μ_L·L`, with `λ = (1−β'²)/β²` and
//! `μ_L = −β''/β`, in the layout `(flat, radial, sphere)`.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::sync::{Arc, OnceLock};

use nalgebra::DMatrix;
use serde_json::{json, Value};

use crate::conditions::Condition;
use crate::curvature_algebra::{l_operator, model_operator, BlockLayout, CurvOp};
use crate::error::{CurvError, Result};
use crate::jet::Jet;
use crate::numeric::{gl_integrate, linspace, SmoothStep};
use crate::tolerance;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TorpedoMode {
    /// `μ sin(r/μ)` then `μ`; only `C¹` at `μπ/2`.
    Piecewise,
    /// Smooth: the argument of the sine is frozen through a collar of
    /// width `w = μ/20` centred at `μπ/2`; constant `μ` from `μπ/2 + w/2`.
    Mollified,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorpedoParams {
    pub mu: f64,
    pub delta: f64,
}

impl TorpedoParams {
    pub fn new(mu: f64, delta: f64) -> Result<Self> {
        if !(mu > 0.0) || !(delta > mu * FRAC_PI_2) {
            return Err(CurvError::Domain(format!(
                "torpedo needs mu > 0 and delta > mu*pi/2, got mu={mu}, delta={delta}"
            )));
        }
        Ok(TorpedoParams { mu, delta })
    }
}

/// Compactly supported bump `amp · exp(1 − 1/(1 − x²))`, `x = (t − center)/half_width`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bump {
    pub center: f64,
    pub half_width: f64,
    pub amp: f64,
}

impl Bump {
    pub fn jet(&self, t: f64) -> Jet {
        let x = (t - self.center) / self.half_width;
        if x.abs() >= 1.0 {
            return Jet::constant(0.0);
        }
        let xj = (Jet::var(t) - self.center) * (1.0 / self.half_width);
        let inner = Jet::constant(1.0) - xj * xj;
        (-inner.recip()).add_const(1.0).exp() * self.amp
    }
}

#[derive(Clone)]
pub enum ProfileKind {
    Torpedo { mu: f64, mode: TorpedoMode },
    /// `μ sin(r/μ)` on the whole domain.
    SineCap { mu: f64 },
    Linear,
    /// `r ↦ value`; used for the radial coefficient `α` of disc metrics.
    Constant { value: f64 },
    /// Mollified torpedo `+ odd_amp · t³ exp(−t²/odd_width²) + Σ bumps`.
    TorpedoPerturbed { mu: f64, odd_amp: f64, odd_width: f64, bumps: Vec<Bump> },
    /// Uniform samples on `[0, δ]`; derivatives from local quintic fits.
    Grid { values: Vec<f64> },
    /// `t·inner(r/t)`.
    Scaled { inner: Box<WarpProfile>, t: f64 },
    Analytic { label: String, f: Arc<dyn Fn(f64) -> Jet + Send + Sync> },
}

#[derive(Clone)]
pub struct WarpProfile {
    pub delta: f64,
    pub kind: ProfileKind,
}

impl fmt::Debug for WarpProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "WarpProfile({}, delta={})", self.label(), self.delta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivativeMode {
    Analytic,
    FiniteDifference,
}

/// Jet of the mollified torpedo `μ sin(m(t)/μ)`, `m' = 1 − S((t − t₁)/w)`.
pub fn mollified_torpedo_jet(mu: f64, t: f64) -> Jet {
    let w = mu / 20.0;
    let t1 = mu * FRAC_PI_2 - 0.5 * w;
    let x = (t - t1) / w;
    let m = if x <= 0.0 {
        Jet::var(t)
    } else if x >= 1.0 {
        Jet::constant(mu * FRAC_PI_2)
    } else {
        let s = SmoothStep::jet_affine(t, t1, w).derivs();
        let value = t - w * SmoothStep::integral(x);
        Jet::from_derivs(&[value, 1.0 - s[0], -s[1], -s[2], -s[3]])
    };
    (m * (1.0 / mu)).sin() * mu
}

fn piecewise_torpedo_jet(mu: f64, t: f64) -> Jet {
    if t <= mu * FRAC_PI_2 {
        (Jet::var(t) * (1.0 / mu)).sin() * mu
    } else {
        Jet::constant(mu)
    }
}

/// Inverse Vandermonde for nodes `0..6`, so `a = V⁻¹ y` are monomial
/// coefficients of the interpolating quintic.
fn quintic_inverse() -> &'static DMatrix<f64> {
    static INV: OnceLock<DMatrix<f64>> = OnceLock::new();
    INV.get_or_init(|| {
        let v = DMatrix::from_fn(6, 6, |i, j| (i as f64).powi(j as i32));
        v.try_inverse().expect("Vandermonde with distinct nodes")
    })
}

fn grid_jet(values: &[f64], delta: f64, r: f64) -> Jet {
    let n = values.len();
    let h = delta / (n - 1) as f64;
    let u = r / h;
    let i0 = ((u.floor() as isize) - 2).clamp(0, n as isize - 6) as usize;
    let y = DMatrix::from_fn(6, 1, |i, _| values[i0 + i]);
    let a = quintic_inverse() * y;
    let x = Jet::var(u - i0 as f64);
    let mut p = Jet::constant(a[5]);
    for k in (0..5).rev() {
        p = p * x + a[k];
    }
    // d/dr = (1/h) d/du
    p.compose(Jet::var(r) * (1.0 / h))
}

impl WarpProfile {
    pub fn label(&self) -> String {
        match &self.kind {
            ProfileKind::Torpedo { mu, mode } => format!("torpedo(mu={mu}, {mode:?})"),
            ProfileKind::SineCap { mu } => format!("sine_cap(mu={mu})"),
            ProfileKind::Linear => "linear".into(),
            ProfileKind::Constant { value } => format!("constant({value})"),
            ProfileKind::TorpedoPerturbed { mu, .. } => format!("torpedo_perturbed(mu={mu})"),
            ProfileKind::Grid { values } => format!("grid(n={})", values.len()),
            ProfileKind::Scaled { inner, t } => format!("shrink({}, t={t})", inner.label()),
            ProfileKind::Analytic { label, .. } => label.clone(),
        }
    }

    pub fn linear(delta: f64) -> Self {
        WarpProfile { delta, kind: ProfileKind::Linear }
    }

    pub fn constant(value: f64, delta: f64) -> Self {
        WarpProfile { delta, kind: ProfileKind::Constant { value } }
    }

    pub fn sine_cap(mu: f64, delta: f64) -> Self {
        WarpProfile { delta, kind: ProfileKind::SineCap { mu } }
    }

    pub fn grid(delta: f64, values: Vec<f64>) -> Result<Self> {
        if values.len() < 6 {
            return Err(CurvError::Domain("grid profile needs at least 6 samples".into()));
        }
        if !(delta > 0.0) {
            return Err(CurvError::Domain(format!("delta must be positive, got {delta}")));
        }
        Ok(WarpProfile { delta, kind: ProfileKind::Grid { values } })
    }

    /// Samples `self` on a uniform grid of `grid_n` points.
    pub fn sampled(&self, grid_n: usize) -> Result<Self> {
        let values = linspace(0.0, self.delta, grid_n).into_iter().map(|r| self.value(r)).collect();
        Self::grid(self.delta, values)
    }

    /// Closed-form profile from a jet-valued expression in `r`.
    pub fn from_expr<F>(label: &str, delta: f64, f: F) -> Self
    where
        F: Fn(Jet) -> Jet + Send + Sync + 'static,
    {
        WarpProfile {
            delta,
            kind: ProfileKind::Analytic { label: label.into(), f: Arc::new(move |r| f(Jet::var(r))) },
        }
    }

    /// Profile from an arbitrary jet-valued function of `r`.
    pub fn from_fn<F>(label: &str, delta: f64, f: F) -> Self
    where
        F: Fn(f64) -> Jet + Send + Sync + 'static,
    {
        WarpProfile { delta, kind: ProfileKind::Analytic { label: label.into(), f: Arc::new(f) } }
    }

    pub fn torpedo_perturbed(mu: f64, delta: f64, odd_amp: f64, odd_width: f64, bumps: Vec<Bump>) -> Self {
        WarpProfile { delta, kind: ProfileKind::TorpedoPerturbed { mu, odd_amp, odd_width, bumps } }
    }

    pub fn derivative_mode(&self) -> DerivativeMode {
        match &self.kind {
            ProfileKind::Grid { .. } => DerivativeMode::FiniteDifference,
            ProfileKind::Scaled { inner, .. } => inner.derivative_mode(),
            _ => DerivativeMode::Analytic,
        }
    }

    /// Taylor jet of `β` at `r` (derivatives up to order 4).
    pub fn jet(&self, r: f64) -> Jet {
        match &self.kind {
            ProfileKind::Torpedo { mu, mode: TorpedoMode::Piecewise } => piecewise_torpedo_jet(*mu, r),
            ProfileKind::Torpedo { mu, mode: TorpedoMode::Mollified } => mollified_torpedo_jet(*mu, r),
            ProfileKind::SineCap { mu } => (Jet::var(r) * (1.0 / mu)).sin() * *mu,
            ProfileKind::Linear => Jet::var(r),
            ProfileKind::Constant { value } => Jet::constant(*value),
            ProfileKind::TorpedoPerturbed { mu, odd_amp, odd_width, bumps } => {
                let x = Jet::var(r);
                let gauss = (-(x * x) * (1.0 / (odd_width * odd_width))).exp();
                let mut out = mollified_torpedo_jet(*mu, r) + x.powi(3) * gauss * *odd_amp;
                for b in bumps {
                    out = out + b.jet(r);
                }
                out
            }
            ProfileKind::Grid { values } => grid_jet(values, self.delta, r),
            ProfileKind::Scaled { inner, t } => inner.jet(r / t).compose(Jet::var(r) * (1.0 / t)) * *t,
            ProfileKind::Analytic { f, .. } => f(r),
        }
    }

    pub fn value(&self, r: f64) -> f64 {
        self.jet(r).value()
    }

    pub fn d1(&self, r: f64) -> f64 {
        self.jet(r).d1()
    }

    pub fn d2(&self, r: f64) -> f64 {
        self.jet(r).d2()
    }

    /// Checks `β(0) = 0`, `β'(0) = 1`, `β''(0) = β''''(0) = 0` and `β > 0` on
    /// a grid of `(0, δ]`.
    pub fn check_regularity(&self, grid_n: usize) -> Result<()> {
        let j = self.jet(0.0);
        let tol = tolerance::PROFILE_PARITY;
        let checks = [
            ("beta(0) = 0", j.value()),
            ("beta'(0) = 1", j.d1() - 1.0),
            ("beta''(0) = 0", j.d2()),
            ("beta''''(0) = 0", j.deriv(4)),
        ];
        for (what, defect) in checks {
            if !(defect.abs() <= tol) {
                return Err(CurvError::Domain(format!("{}: {what} violated by {defect:.3e}", self.label())));
            }
        }
        for r in linspace(0.0, self.delta, grid_n).into_iter().skip(1) {
            if !(self.value(r) > 0.0) {
                return Err(CurvError::Domain(format!("{}: beta({r}) is not positive", self.label())));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<Value> {
        Ok(match &self.kind {
            ProfileKind::Torpedo { mu, mode } => json!({
                "kind": "torpedo", "mu": mu, "delta": self.delta,
                "mode": match mode { TorpedoMode::Piecewise => "piecewise", TorpedoMode::Mollified => "mollified" },
            }),
            ProfileKind::SineCap { mu } => json!({"kind": "sine_cap", "mu": mu, "delta": self.delta}),
            ProfileKind::Linear => json!({"kind": "linear", "delta": self.delta}),
            ProfileKind::Constant { value } => json!({"kind": "constant", "value": value, "delta": self.delta}),
            ProfileKind::TorpedoPerturbed { mu, odd_amp, odd_width, bumps } => json!({
                "kind": "torpedo_perturbed", "mu": mu, "delta": self.delta,
                "odd_amp": odd_amp, "odd_width": odd_width,
                "bumps": bumps.iter().map(|b| json!({"center": b.center, "half_width": b.half_width, "amp": b.amp})).collect::<Vec<_>>(),
            }),
            ProfileKind::Grid { values } => json!({"kind": "grid", "delta": self.delta, "values": values}),
            ProfileKind::Scaled { .. } | ProfileKind::Analytic { .. } => {
                return Err(CurvError::Domain(format!("{} has no JSON form", self.label())))
            }
        })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let num = |key: &str| -> Result<f64> {
            v.get(key)
                .and_then(Value::as_f64)
                .ok_or_else(|| CurvError::Parse(format!("profile field {key:?} missing or not a number")))
        };
        let kind = v.get("kind").and_then(Value::as_str).ok_or_else(|| CurvError::Parse("profile needs a kind".into()))?;
        let delta = num("delta")?;
        match kind {
            "torpedo" => {
                let mode = match v.get("mode").and_then(Value::as_str).unwrap_or("piecewise") {
                    "piecewise" => TorpedoMode::Piecewise,
                    "mollified" => TorpedoMode::Mollified,
                    other => return Err(CurvError::Parse(format!("unknown torpedo mode {other:?}"))),
                };
                torpedo_profile(TorpedoParams::new(num("mu")?, delta)?, mode)
            }
            "sine_cap" => Ok(WarpProfile::sine_cap(num("mu")?, delta)),
            "linear" => Ok(WarpProfile::linear(delta)),
            "constant" => Ok(WarpProfile::constant(num("value")?, delta)),
            "torpedo_perturbed" => {
                let bumps = v
                    .get("bumps")
                    .and_then(Value::as_array)
                    .map(|a| {
                        a.iter()
                            .map(|b| {
                                let f = |k: &str| b.get(k).and_then(Value::as_f64).ok_or_else(|| CurvError::Parse(format!("bump field {k:?}")));
                                Ok(Bump { center: f("center")?, half_width: f("half_width")?, amp: f("amp")? })
                            })
                            .collect::<Result<Vec<_>>>()
                    })
                    .transpose()?
                    .unwrap_or_default();
                Ok(WarpProfile::torpedo_perturbed(num("mu")?, delta, num("odd_amp")?, num("odd_width")?, bumps))
            }
            "grid" => {
                let values = v
                    .get("values")
                    .and_then(Value::as_array)
                    .ok_or_else(|| CurvError::Parse("grid profile needs values".into()))?
                    .iter()
                    .map(|x| x.as_f64().ok_or_else(|| CurvError::Parse("grid value is not a number".into())))
                    .collect::<Result<Vec<_>>>()?;
                WarpProfile::grid(delta, values)
            }
            other => Err(CurvError::Parse(format!("unknown profile kind {other:?}"))),
        }
    }
}

pub fn torpedo_profile(p: TorpedoParams, mode: TorpedoMode) -> Result<WarpProfile> {
    let p = TorpedoParams::new(p.mu, p.delta)?;
    Ok(WarpProfile { delta: p.delta, kind: ProfileKind::Torpedo { mu: p.mu, mode } })
}

#[derive(Debug, Clone)]
pub struct WarpedCurvature {
    pub op: CurvOp,
    pub lambda: f64,
    pub mu_l: f64,
}

/// `λ·R_{ℝ^{n−q+1}×S^{q−1}} + μ_L·L` for given coefficients.
pub fn warped_operator(lambda: f64, mu_l: f64, n: usize, q: usize) -> Result<CurvOp> {
    let layout = BlockLayout::warped(n, q)?;
    let model = model_operator(n, q - 1)?;
    let l = l_operator(&layout)?;
    Ok(model.combine(lambda, &l, mu_l))
}

/// Curvature coefficients from `β, β', β''`.
pub fn warped_coefficients(b: f64, b1: f64, b2: f64) -> (f64, f64) {
    ((1.0 - b1 * b1) / (b * b), -b2 / b)
}

/// Curvature of `g_eucl(n−q) + dr² + β²g_{S^{q−1}}` at radius `r`.
///
/// At `r = 0` the limit `λ = μ_L = −β'''(0)` is used; this needs analytic
/// derivatives.
pub fn warped_curvature(beta: &WarpProfile, r: f64, n: usize, q: usize) -> Result<WarpedCurvature> {
    if !(r >= 0.0 && r <= beta.delta * (1.0 + 1e-12)) {
        return Err(CurvError::Domain(format!("r={r} outside [0, {}]", beta.delta)));
    }
    let j = beta.jet(r);
    let (lambda, mu_l) = if r == 0.0 {
        if beta.derivative_mode() != DerivativeMode::Analytic {
            return Err(CurvError::Singular("r = 0 needs an analytic profile".into()));
        }
        let c = -j.deriv(3);
        (c, c)
    } else {
        if !(j.value() > 0.0) {
            return Err(CurvError::Singular(format!("beta({r}) = {} is not positive", j.value())));
        }
        warped_coefficients(j.value(), j.d1(), j.d2())
    };
    Ok(WarpedCurvature { op: warped_operator(lambda, mu_l, n, q)?, lambda, mu_l })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConcavityReport {
    pub pass: bool,
    /// First grid radius violating `1 − β'² ≥ 0` or `β'' ≤ 0`.
    pub witness: Option<f64>,
    pub min_one_minus_slope2: f64,
    pub max_beta2: f64,
}

/// Grid check of `1 − β'² ≥ 0` and `β'' ≤ 0`, tolerant to rounding.
pub fn concavity_check(beta: &WarpProfile, grid_n: usize) -> ConcavityReport {
    let tol = 1e-12;
    let mut rep = ConcavityReport { pass: true, witness: None, min_one_minus_slope2: f64::INFINITY, max_beta2: f64::NEG_INFINITY };
    for r in linspace(0.0, beta.delta, grid_n) {
        let j = beta.jet(r);
        let a = 1.0 - j.d1() * j.d1();
        let b = j.d2();
        rep.min_one_minus_slope2 = rep.min_one_minus_slope2.min(a);
        rep.max_beta2 = rep.max_beta2.max(b);
        if (a < -tol || b > tol) && rep.pass {
            rep.pass = false;
            rep.witness = Some(r);
        }
    }
    rep
}

/// `r ↦ t·β(r/t)` on `[0, tδ]`; torpedoes map to torpedoes with `μ ↦ tμ`.
pub fn shrink_fiber(beta: &WarpProfile, t: f64) -> Result<WarpProfile> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(CurvError::Domain(format!("shrink factor must lie in (0, 1], got {t}")));
    }
    let delta = t * beta.delta;
    Ok(match &beta.kind {
        _ if t == 1.0 => beta.clone(),
        ProfileKind::Torpedo { mu, mode } => WarpProfile { delta, kind: ProfileKind::Torpedo { mu: mu * t, mode: *mode } },
        ProfileKind::SineCap { mu } => WarpProfile { delta, kind: ProfileKind::SineCap { mu: mu * t } },
        ProfileKind::Linear => WarpProfile { delta, kind: ProfileKind::Linear },
        ProfileKind::Scaled { inner, t: s } => WarpProfile { delta, kind: ProfileKind::Scaled { inner: inner.clone(), t: s * t } },
        _ => WarpProfile { delta, kind: ProfileKind::Scaled { inner: Box::new(beta.clone()), t } },
    })
}

/// Minimum membership margin of `R^β(r)` over `r` in `radii`.
pub fn min_profile_margin(beta: &WarpProfile, c: &Condition, q: usize, radii: &[f64]) -> Result<(f64, f64)> {
    let mut worst = (f64::INFINITY, f64::NAN);
    for &r in radii {
        let wc = warped_curvature(beta, r, c.n, q)?;
        let m = c.membership(&wc.op)?.margin;
        if m < worst.0 {
            worst = (m, r);
        }
    }
    Ok(worst)
}

/// Largest `t ∈ (0, 1]` (bisection estimate) such that the shrunk profile
/// stays in `C` on the grid, assuming the admissible set is an interval
/// `(0, t*]`. `None` when even `t = 1e-6` fails.
pub fn shrink_threshold(beta: &WarpProfile, c: &Condition, q: usize, grid_n: usize) -> Result<Option<f64>> {
    let ok = |t: f64| -> Result<bool> {
        let s = shrink_fiber(beta, t)?;
        let radii: Vec<f64> = linspace(0.0, s.delta, grid_n).into_iter().skip(1).collect();
        Ok(min_profile_margin(&s, c, q, &radii)?.0 > tolerance::EPS_STRICT)
    };
    if ok(1.0)? {
        return Ok(Some(1.0));
    }
    if !ok(1e-6)? {
        return Ok(None);
    }
    let (mut lo, mut hi) = (1e-6, 1.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if ok(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(lo))
}

#[derive(Debug, Clone)]
pub struct TorpedoCurve {
    pub r: Vec<f64>,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub beta1: Vec<f64>,
    pub beta2: Vec<f64>,
    /// `α ≡ 0`: the curve degenerates into the flat disc.
    pub boundary_case: bool,
}

fn alpha_prime(beta: &WarpProfile, r: f64) -> f64 {
    let b1 = beta.d1(r);
    (1.0 - b1 * b1).max(0.0).sqrt()
}

/// `α(r) = ∫_0^r √(1 − β'²)`, integrated panelwise with Gauss–Legendre.
fn alpha_at(beta: &WarpProfile, r: f64) -> f64 {
    let panels = ((r / beta.delta) * 64.0).ceil().max(1.0) as usize;
    gl_integrate(|x| alpha_prime(beta, x), 0.0, r, panels)
}

/// The curve `(α(r), β(r))` with `α' = √(1 − β'²)`, sampled on `grid_n`
/// points.
pub fn torpedo_curve(beta: &WarpProfile, grid_n: usize) -> Result<TorpedoCurve> {
    let rs = linspace(0.0, beta.delta, grid_n);
    let mut out = TorpedoCurve { r: rs.clone(), alpha: vec![], beta: vec![], beta1: vec![], beta2: vec![], boundary_case: false };
    let mut acc = 0.0;
    for (i, &r) in rs.iter().enumerate() {
        let j = beta.jet(r);
        if j.d1().abs() > 1.0 + 1e-12 {
            return Err(CurvError::Domain(format!("|beta'({r})| = {} > 1: no arc-length lift", j.d1().abs())));
        }
        if i > 0 {
            acc += gl_integrate(|x| alpha_prime(beta, x), rs[i - 1], r, 1);
        }
        out.alpha.push(acc);
        out.beta.push(j.value());
        out.beta1.push(j.d1());
        out.beta2.push(j.d2());
    }
    out.boundary_case = out.alpha.iter().all(|a| a.abs() < 1e-14);
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct EmbeddingReport {
    /// Largest entrywise deviation of the pulled-back Euclidean metric
    /// from `dr² + β² g_{S^{q−1}}`.
    pub residual: f64,
    pub samples: usize,
    pub boundary_case: bool,
}

/// Compares the first fundamental form of
/// `i(r, u) = (α(r), β(r)·θ(u))` (`θ` spherical coordinates on `S^{q−1}`)
/// against `dr² + β(r)² g_{S^{q−1}}`.
///
/// `∂_r α` is a sixth-order central difference of the integrated `α`, and
/// `∂_u θ` is differentiated numerically as well, so the check exercises
/// the arc-length construction rather than restating it.
pub fn embedding_check(beta: &WarpProfile, q: usize, r_samples: usize, angle_samples: usize) -> Result<EmbeddingReport> {
    if q < 2 {
        return Err(CurvError::Domain("fiber sphere needs q >= 2".into()));
    }
    let delta = beta.delta;
    // well below the collar width μ/20, so truncation stays under rounding
    let h = 1e-4 * delta;
    let rs: Vec<f64> = (0..r_samples).map(|i| 4.0 * h + (delta - 8.0 * h) * i as f64 / (r_samples - 1).max(1) as f64).collect();
    let dim = q - 1;
    // angles strictly inside the coordinate chart
    let angles: Vec<Vec<f64>> = (0..angle_samples)
        .map(|k| {
            (0..dim)
                .map(|a| {
                    let frac = ((k * (2 * a + 3) + a + 1) % (angle_samples + 1)) as f64 / (angle_samples + 1) as f64;
                    if a + 1 == dim { 0.3 + 5.5 * frac } else { 0.2 + 2.7 * frac }
                })
                .collect()
        })
        .collect();
    let sphere = |u: &[f64]| -> Vec<f64> {
        // θ = (cos u0, sin u0 cos u1, sin u0 sin u1 cos u2, ...)
        let mut out = Vec::with_capacity(dim + 1);
        let mut s = 1.0;
        for &ua in u {
            out.push(s * ua.cos());
            s *= ua.sin();
        }
        out.push(s);
        out
    };
    let d6 = |f: &dyn Fn(f64) -> f64, x: f64, hh: f64| {
        (-f(x - 3.0 * hh) + 9.0 * f(x - 2.0 * hh) - 45.0 * f(x - hh) + 45.0 * f(x + hh) - 9.0 * f(x + 2.0 * hh)
            + f(x + 3.0 * hh))
            / (60.0 * hh)
    };
    let mut residual = 0.0_f64;
    let mut samples = 0;
    let mut all_flat = true;
    for &r in &rs {
        // integrate from a common base so the stencil sees one quadrature
        // partition; the constant α(base) cancels in the difference
        let base = r - 3.0 * h;
        let a1 = d6(&|x| gl_integrate(|y| alpha_prime(beta, y), base, x, 1), r, h);
        let j = beta.jet(r);
        let (b, b1) = (j.value(), j.d1());
        if alpha_at(beta, r).abs() > 1e-14 {
            all_flat = false;
        }
        for u in &angles {
            let th = sphere(u);
            // Jacobian columns in ℝ^{1+q}: ∂_r and ∂_{u_a}
            let mut cols: Vec<Vec<f64>> = Vec::with_capacity(dim + 1);
            let mut dr = vec![a1];
            dr.extend(th.iter().map(|t| b1 * t));
            cols.push(dr);
            let mut dth = Vec::with_capacity(dim);
            for a in 0..dim {
                let d: Vec<f64> = (0..=dim)
                    .map(|c| {
                        d6(
                            &|x| {
                                let mut v = u.clone();
                                v[a] = x;
                                sphere(&v)[c]
                            },
                            u[a],
                            1e-3,
                        )
                    })
                    .collect();
                let mut col = vec![0.0];
                col.extend(d.iter().map(|x| b * x));
                cols.push(col);
                dth.push(d);
            }
            // round metric on S^{q−1} in the u chart: diag(1, sin²u0, ...)
            let mut g_round = vec![1.0; dim];
            for a in 1..dim {
                g_round[a] = g_round[a - 1] * u[a - 1].sin().powi(2);
            }
            for i in 0..=dim {
                for k in 0..=dim {
                    let got: f64 = cols[i].iter().zip(&cols[k]).map(|(x, y)| x * y).sum();
                    let want = match (i, k) {
                        (0, 0) => 1.0,
                        (0, _) | (_, 0) => 0.0,
                        (i, k) if i == k => b * b * g_round[i - 1],
                        _ => 0.0,
                    };
                    residual = residual.max((got - want).abs());
                }
            }
            samples += 1;
        }
    }
    Ok(EmbeddingReport { residual, samples, boundary_case: all_flat })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conditions::ConditionKind;

    fn torpedo(mu: f64, delta: f64, mode: TorpedoMode) -> WarpProfile {
        torpedo_profile(TorpedoParams::new(mu, delta).unwrap(), mode).unwrap()
    }

    #[test]
    fn torpedo_values() {
        let b = torpedo(1.0, 2.0, TorpedoMode::Piecewise);
        assert!((b.value(std::f64::consts::FRAC_PI_4) - 0.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(b.value(0.0), 0.0);
        assert_eq!(b.d1(0.0), 1.0);
        assert_eq!(b.value(1.9), 1.0);
        assert!(TorpedoParams::new(1.0, 1.5).is_err());
        b.check_regularity(256).unwrap();
        torpedo(1.0, 2.0, TorpedoMode::Mollified).check_regularity(256).unwrap();
    }

    #[test]
    fn mollified_torpedo_is_concave_and_flat_after_collar() {
        let b = torpedo(1.0, 2.0, TorpedoMode::Mollified);
        let rep = concavity_check(&b, 4001);
        assert!(rep.pass, "{rep:?}");
        // the collar ends at μπ/2 + w/2
        let j = b.jet(FRAC_PI_2 + 0.025 + 1e-9);
        assert_eq!(j.value(), 1.0);
        assert!(j.d1().abs() < 1e-15 && j.d2().abs() < 1e-15);
        // identical to the sine before the collar
        assert!((b.value(1.2) - 1.2f64.sin()).abs() < 1e-15);
    }

    #[test]
    fn warped_curvature_examples() {
        let b = torpedo(1.0, 2.0, TorpedoMode::Piecewise);
        let wc = warped_curvature(&b, std::f64::consts::FRAC_PI_4, 7, 4).unwrap();
        assert!((wc.lambda - 1.0).abs() < 1e-14 && (wc.mu_l - 1.0).abs() < 1e-14);
        assert!(wc.op.dist(&model_operator(7, 4).unwrap()) < 1e-13);
        let wc = warped_curvature(&b, 1.9, 7, 4).unwrap();
        assert!((wc.lambda - 1.0).abs() < 1e-15 && wc.mu_l == 0.0);
        let wc = warped_curvature(&WarpProfile::linear(1.0), 0.5, 7, 4).unwrap();
        assert_eq!(wc.op, CurvOp::zero(7));
        // center limit of the round cap
        let wc = warped_curvature(&b, 0.0, 7, 4).unwrap();
        assert!((wc.lambda - 1.0).abs() < 1e-14);
        let g = b.sampled(512).unwrap();
        assert!(warped_curvature(&g, 0.0, 7, 4).is_err());
    }

    #[test]
    fn concavity_examples() {
        assert!(concavity_check(&torpedo(1.0, 2.0, TorpedoMode::Piecewise), 2048).pass);
        assert!(concavity_check(&WarpProfile::linear(1.0), 128).pass);
        let bad = WarpProfile::from_expr("sin(r)+0.2r^2", 1.4, |x| x.sin() + x * x * 0.2);
        let rep = concavity_check(&bad, 2048);
        assert!(!rep.pass);
        let w = rep.witness.unwrap();
        // β'' = 0.4 − sin r > 0 before asin(0.4)
        assert!(bad.d2(w) > 0.0 && w < 0.4f64.asin());
    }

    #[test]
    fn shrink_examples() {
        let b = torpedo(1.0, 2.0, TorpedoMode::Piecewise);
        let s = shrink_fiber(&b, 0.5).unwrap();
        match s.kind {
            ProfileKind::Torpedo { mu, .. } => assert_eq!(mu, 0.5),
            _ => panic!("torpedo should stay torpedo"),
        }
        assert_eq!(s.delta, 1.0);
        assert!(shrink_fiber(&b, 0.0).is_err());
        let bad = WarpProfile::from_expr("sin", 2.0, |x| x.sin());
        let ss = shrink_fiber(&shrink_fiber(&bad, 0.5).unwrap(), 0.3).unwrap();
        let direct = shrink_fiber(&bad, 0.15).unwrap();
        for r in linspace(0.0, 0.3, 31) {
            assert!((ss.value(r) - direct.value(r)).abs() < 1e-12);
            assert!((ss.d2(r) - direct.d2(r)).abs() < 1e-12);
        }
    }

    #[test]
    fn grid_derivatives_match_analytic() {
        let b = torpedo(1.0, 2.0, TorpedoMode::Piecewise);
        let g = b.sampled(2048).unwrap();
        let h = 2.0 / 2047.0;
        for r in linspace(0.01, 1.5, 97) {
            assert!((g.d1(r) - b.d1(r)).abs() < 1e-7, "r={r}");
            assert!((g.d2(r) - b.d2(r)).abs() < 1e-7, "r={r}");
        }
        assert!(std::f64::consts::FRAC_PI_2 - 1.5 > 6.0 * h);
    }

    #[test]
    fn torpedo_curve_matches_cap() {
        let b = torpedo(1.0, 2.0, TorpedoMode::Piecewise);
        let c = torpedo_curve(&b, 401).unwrap();
        for (r, a) in c.r.iter().zip(&c.alpha) {
            let want = if *r <= FRAC_PI_2 { 1.0 - r.cos() } else { 1.0 + (r - FRAC_PI_2) };
            assert!((a - want).abs() < 1e-12, "r={r}");
        }
        assert!(torpedo_curve(&WarpProfile::linear(1.0), 11).unwrap().boundary_case);
        let steep = WarpProfile::from_expr("2r", 1.0, |x| x * 2.0);
        assert!(torpedo_curve(&steep, 11).is_err());
    }

    #[test]
    fn embedding_residual_small() {
        let b = torpedo(1.0, 2.0, TorpedoMode::Mollified);
        let rep = embedding_check(&b, 4, 16, 4).unwrap();
        assert!(rep.residual < 1e-8, "{}", rep.residual);
    }

    #[test]
    fn profile_json_roundtrip() {
        let b = torpedo(1.0, 2.0, TorpedoMode::Mollified);
        let back = WarpProfile::from_json(&b.to_json().unwrap()).unwrap();
        assert_eq!(back.value(1.55), b.value(1.55));
        let p = WarpProfile::torpedo_perturbed(1.0, 2.0, 0.01, 0.3, vec![Bump { center: 1.0, half_width: 0.2, amp: 0.01 }]);
        let back = WarpProfile::from_json(&p.to_json().unwrap()).unwrap();
        assert_eq!(back.value(0.93), p.value(0.93));
        assert!(WarpProfile::from_json(&json!({"kind": "torpedo", "mu": 1.0})).is_err());
    }

    #[test]
    fn shrink_threshold_for_cone_is_one() {
        let c = Condition::new(ConditionKind::Psc, 7).unwrap();
        let b = torpedo(1.0, 2.0, TorpedoMode::Mollified);
        assert_eq!(shrink_threshold(&b, &c, 4, 64).unwrap(), Some(1.0));
    }
}
