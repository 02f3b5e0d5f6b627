//! Plane curves `γ(s) = (r(s), t(s))` used to bend a tube around a
//! submanifold, and the curvature of the resulting hypersurface in the
//! rotationally symmetric model.
//!
//! A curve is determined by its angle `θ` against `−∂_r`:
//! `r(s) = r̄ − ∫₀ˢ cos θ`, `t(s) = ∫₀ˢ sin θ`, `κ = θ'`.
//!
//! The bending construction shrinks `r` geometrically (each second-bend step
//! roughly halves it), so absolute arc length cannot resolve late steps. An
//! [`AngleCurve`] therefore stores analytic pieces in local coordinates, each
//! carrying its own start radius; sampled [`PlaneCurve`]s are derived from it.

use std::f64::consts::FRAC_PI_2;

use serde::Serialize;

use crate::conditions::{cone_radius, Condition, ConeOptions};
use crate::curvature_algebra::{l_operator, model_operator, BlockLayout};
use crate::error::{CurvError, Result};
use crate::numeric::{cumulative_simpson, fd_central6_increments, fd_derivatives, interval_integrals6, gl_integrate, linspace, SmoothStep};
use crate::tolerance;
use crate::warped_metrics::{warped_coefficients, warped_operator, WarpProfile};

/// Curvature profile of one piece, in the piece's local coordinate `u`.
#[derive(Debug, Clone, PartialEq)]
pub enum Kappa {
    Zero,
    /// `κ = amp · d/du S((u − a)/w)`, turning by `amp`.
    Ramp { amp: f64, a: f64, w: f64 },
    /// `height` times a flat-topped bump: rises on `[a0, a1]`, equals 1 on
    /// `[a1, b0]`, falls on `[b0, b1]`.
    Bump { height: f64, a0: f64, a1: f64, b0: f64, b1: f64 },
    Scaled { factor: f64, inner: Box<Kappa> },
    /// `inner · (1 − S((u − at)/width))`.
    Cut { inner: Box<Kappa>, at: f64, width: f64 },
    /// `factor · inner(factor · u)`: the same turning over `1/factor` the length.
    Dilated { factor: f64, inner: Box<Kappa> },
}

impl Kappa {
    pub fn value(&self, u: f64) -> f64 {
        match self {
            Kappa::Zero => 0.0,
            Kappa::Ramp { amp, a, w } => amp * SmoothStep::jet_affine(u, *a, *w).d1(),
            Kappa::Bump { height, a0, a1, b0, b1 } => {
                if u <= *a0 || u >= *b1 {
                    0.0
                } else if u < *a1 {
                    height * SmoothStep::value((u - a0) / (a1 - a0))
                } else if u <= *b0 {
                    *height
                } else {
                    height * (1.0 - SmoothStep::value((u - b0) / (b1 - b0)))
                }
            }
            Kappa::Scaled { factor, inner } => factor * inner.value(u),
            Kappa::Cut { inner, at, width } => inner.value(u) * (1.0 - SmoothStep::value((u - at) / width)),
            Kappa::Dilated { factor, inner } => factor * inner.value(factor * u),
        }
    }

    /// `∫₀ᵘ κ`.
    pub fn turn(&self, u: f64) -> f64 {
        match self {
            Kappa::Zero => 0.0,
            Kappa::Ramp { amp, a, w } => amp * SmoothStep::value((u - a) / w),
            Kappa::Bump { height, a0, a1, b0, b1 } => {
                let rise = a1 - a0;
                let fall = b1 - b0;
                let v = if u <= *a0 {
                    0.0
                } else if u <= *a1 {
                    rise * SmoothStep::integral((u - a0) / rise)
                } else if u <= *b0 {
                    0.5 * rise + (u - a1)
                } else if u <= *b1 {
                    0.5 * rise + (b0 - a1) + (u - b0) - fall * SmoothStep::integral((u - b0) / fall)
                } else {
                    0.5 * rise + (b0 - a1) + 0.5 * fall
                };
                height * v
            }
            Kappa::Scaled { factor, inner } => factor * inner.turn(u),
            Kappa::Cut { inner, at, width } => {
                let start = at.max(0.0);
                let head = inner.turn(u.min(start));
                let hi = u.min(at + width);
                if hi <= start {
                    return head;
                }
                head + gl_integrate(|v| self.value(v), start, hi, 4)
            }
            Kappa::Dilated { factor, inner } => inner.turn(factor * u),
        }
    }

    pub fn scaled(&self, factor: f64) -> Kappa {
        match self {
            Kappa::Zero => Kappa::Zero,
            Kappa::Scaled { factor: f, inner } => Kappa::Scaled { factor: f * factor, inner: inner.clone() },
            other => Kappa::Scaled { factor, inner: Box::new(other.clone()) },
        }
    }

    fn is_zero(&self) -> bool {
        match self {
            Kappa::Zero => true,
            Kappa::Scaled { factor, inner } => *factor == 0.0 || inner.is_zero(),
            Kappa::Cut { inner, .. } | Kappa::Dilated { inner, .. } => inner.is_zero(),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Role {
    InitialBend,
    Straight,
    SecondBend(usize),
    Plateau,
    Descent,
    Run,
}

#[derive(Debug, Clone)]
pub struct Segment {
    pub role: Role,
    /// Absolute start (approximate once pieces fall below `ulp(s)`).
    pub s0: f64,
    pub len: f64,
    pub theta0: f64,
    pub r0: f64,
    pub t0: f64,
    pub kappa: Kappa,
    r_end: f64,
    t_end: f64,
}

impl Segment {
    pub fn theta(&self, u: f64) -> f64 {
        (self.theta0 + self.kappa.turn(u)).clamp(0.0, FRAC_PI_2)
    }

    pub fn kappa_at(&self, u: f64) -> f64 {
        self.kappa.value(u)
    }

    fn panels(&self) -> usize {
        if self.kappa.is_zero() { 1 } else { 8 }
    }

    /// `r` and `t` at local coordinate `u` by quadrature from the start.
    pub fn rt(&self, u: f64) -> (f64, f64) {
        if self.kappa.is_zero() {
            let th = self.theta0;
            return (self.r0 - u * th.cos(), self.t0 + u * th.sin());
        }
        let p = self.panels();
        let r = self.r0 - gl_integrate(|v| self.theta(v).cos(), 0.0, u, p);
        let t = self.t0 + gl_integrate(|v| self.theta(v).sin(), 0.0, u, p);
        (r, t)
    }

    pub fn theta_end(&self) -> f64 {
        self.theta(self.len)
    }

    pub fn r_end(&self) -> f64 {
        self.r_end
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn s_end(&self) -> f64 {
        self.s0 + self.len
    }
}

/// Construction knots `s₀ ≤ … ≤ s₆` and the axis hit `b`, when known.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Marks {
    pub s1: Option<f64>,
    pub s2: Option<f64>,
    pub s3: Option<f64>,
    pub s4: Option<f64>,
    pub s5: Option<f64>,
    pub s6: Option<f64>,
    pub b: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct AngleCurve {
    pub rbar: f64,
    pub segments: Vec<Segment>,
    pub marks: Marks,
}

impl AngleCurve {
    pub fn new(rbar: f64) -> Self {
        AngleCurve { rbar, segments: Vec::new(), marks: Marks::default() }
    }

    pub fn end_state(&self) -> (f64, f64, f64, f64) {
        match self.segments.last() {
            Some(seg) => (seg.s_end(), seg.theta_end(), seg.r_end(), seg.t_end()),
            None => (0.0, 0.0, self.rbar, 0.0),
        }
    }

    /// Appends a piece; `θ`, `r`, `t` continue from the current end.
    pub fn push(&mut self, role: Role, kappa: Kappa, len: f64) -> &Segment {
        let (s0, theta0, r0, t0) = self.end_state();
        let mut seg = Segment { role, s0, len, theta0, r0, t0, kappa, r_end: r0, t_end: t0 };
        let (r, t) = seg.rt(len);
        seg.r_end = r;
        seg.t_end = t;
        self.segments.push(seg);
        self.segments.last().expect("just pushed")
    }

    pub fn length(&self) -> f64 {
        self.end_state().0
    }

    /// Segment index and local coordinate of absolute arc length `s`.
    pub fn locate(&self, s: f64) -> (usize, f64) {
        let idx = self.segments.partition_point(|seg| seg.s_end() < s).min(self.segments.len() - 1);
        let seg = &self.segments[idx];
        (idx, (s - seg.s0).clamp(0.0, seg.len))
    }

    pub fn theta_at(&self, s: f64) -> f64 {
        let (i, u) = self.locate(s);
        self.segments[i].theta(u)
    }

    pub fn kappa_at(&self, s: f64) -> f64 {
        let (i, u) = self.locate(s);
        self.segments[i].kappa_at(u)
    }

    /// `per_segment` knots in every piece (both ends included).
    pub fn knots(&self, per_segment: usize) -> Vec<(usize, f64)> {
        let mut out = Vec::new();
        for (i, seg) in self.segments.iter().enumerate() {
            for u in linspace(0.0, seg.len, per_segment.max(2)) {
                out.push((i, u));
            }
        }
        out
    }

    /// Samples at the given knots; `r`, `t` are integrated knot to knot.
    pub fn sample(&self, knots: &[(usize, f64)]) -> PlaneCurve {
        let mut c = PlaneCurve { rbar: self.rbar, ..Default::default() };
        let mut prev: Option<(usize, f64, f64, f64)> = None;
        for &(i, u) in knots {
            let seg = &self.segments[i];
            let (r, t) = match prev {
                Some((pi, pu, pr, pt)) if pi == i && u >= pu => {
                    let p = if seg.kappa.is_zero() { 1 } else { 2 };
                    (
                        pr - gl_integrate(|v| seg.theta(v).cos(), pu, u, p),
                        pt + gl_integrate(|v| seg.theta(v).sin(), pu, u, p),
                    )
                }
                _ => seg.rt(u),
            };
            prev = Some((i, u, r, t));
            c.s.push(seg.s0 + u);
            c.theta.push(seg.theta(u));
            c.kappa.push(seg.kappa_at(u));
            c.r.push(r);
            c.t.push(t);
        }
        c
    }

    /// Uniform samples on `[0, s_max]`.
    pub fn sample_uniform(&self, s_max: f64, n: usize) -> PlaneCurve {
        let knots: Vec<(usize, f64)> = linspace(0.0, s_max, n).into_iter().map(|s| self.locate(s)).collect();
        self.sample(&knots)
    }

    /// Segment indices with the given role.
    pub fn with_role(&self, pred: impl Fn(Role) -> bool) -> Vec<usize> {
        (0..self.segments.len()).filter(|&i| pred(self.segments[i].role)).collect()
    }
}

/// Sampled curve; `s` need not be uniform.
#[derive(Debug, Clone, Default, Serialize)]
pub struct PlaneCurve {
    pub rbar: f64,
    pub s: Vec<f64>,
    pub theta: Vec<f64>,
    pub kappa: Vec<f64>,
    pub r: Vec<f64>,
    pub t: Vec<f64>,
}

impl PlaneCurve {
    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }
}

/// Curve from angle samples on the uniform grid `s_i = i·h`.
pub fn curve_from_theta(theta: &[f64], h: f64, rbar: f64) -> Result<PlaneCurve> {
    for (i, &th) in theta.iter().enumerate() {
        if !(-1e-12..=FRAC_PI_2 + 1e-12).contains(&th) {
            return Err(CurvError::ClassViolation { s: i as f64 * h, theta: th });
        }
    }
    let cos: Vec<f64> = theta.iter().map(|t| t.cos()).collect();
    let sin: Vec<f64> = theta.iter().map(|t| t.sin()).collect();
    let ic = cumulative_simpson(&cos, h);
    let is = cumulative_simpson(&sin, h);
    let kappa = if theta.len() >= 6 { fd_derivatives(theta, h).0 } else { vec![0.0; theta.len()] };
    Ok(PlaneCurve {
        rbar,
        s: (0..theta.len()).map(|i| i as f64 * h).collect(),
        theta: theta.to_vec(),
        kappa,
        r: ic.iter().map(|c| rbar - c).collect(),
        t: is,
    })
}

/// Curve from curvature samples: `θ = ∫κ`, then as [`curve_from_theta`].
pub fn curve_from_kappa(kappa: &[f64], h: f64, rbar: f64) -> Result<PlaneCurve> {
    let theta = cumulative_simpson(kappa, h);
    let mut c = curve_from_theta(&theta, h, rbar)?;
    c.kappa = kappa.to_vec();
    Ok(c)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ClassTag {
    GammaInf,
    GammaB,
    GammaTildeB,
    None,
}

#[derive(Debug, Clone, Serialize)]
pub struct CurveClass {
    pub tag: ClassTag,
    /// Axis hit `b = L(γ)`.
    pub b: Option<f64>,
    /// `[s₀, …, s₆]` for the tilde class.
    pub partition: Option<[f64; 7]>,
    pub reason: String,
}

fn none_class(reason: impl Into<String>) -> CurveClass {
    CurveClass { tag: ClassTag::None, b: None, partition: None, reason: reason.into() }
}

/// Class membership from samples, with tolerance [`tolerance::CURVE_CLASS`].
///
/// The partition is read off `κ` and `θ`: `s₁` is the first positive
/// curvature, `s₂` the end of that first bend, `s₃` the next positive
/// curvature, `s₄` the first flat point with `θ = π/2`, `s₅` the first
/// negative curvature and `s₆ = b`.
pub fn classify(c: &PlaneCurve) -> CurveClass {
    let tol = tolerance::CURVE_CLASS;
    let n = c.len();
    if n < 2 {
        return none_class("too few samples");
    }
    if c.theta[0].abs() > tol || (c.r[0] - c.rbar).abs() > tol || c.t[0].abs() > tol {
        return none_class("initial condition (r̄, 0) with θ(0) = 0 fails");
    }
    if c.t.iter().any(|&t| t < -tol) {
        return none_class("t becomes negative");
    }
    // axis hit: first sample with r <= 0, or a last sample within rounding
    // of the axis (tube radii far below `tol` are legitimate)
    let hit = c.r.iter().position(|&r| r <= 0.0).or_else(|| {
        let last = c.r[n - 1];
        (last.abs() <= 64.0 * f64::EPSILON * c.rbar && c.theta[n - 1].abs() <= tol).then_some(n - 1)
    });
    let Some(j) = hit else {
        // never reaches the axis: Γ_∞ needs r' ≡ 0 on a final stretch
        let monotone = c.r.windows(2).all(|w| w[1] <= w[0] + tol) && c.t.windows(2).all(|w| w[1] >= w[0] - tol);
        let tail = c.theta[n - 1] >= FRAC_PI_2 - tol && c.kappa[n - 1].abs() <= tol;
        if monotone && tail && c.r.iter().all(|&r| r > 0.0) {
            return CurveClass { tag: ClassTag::GammaInf, b: None, partition: None, reason: String::new() };
        }
        return none_class("does not reach the axis and does not end parallel to it");
    };
    // interpolate the root of r between samples j−1 and j
    let b = if j == 0 || c.r[j] == 0.0 {
        c.s[j]
    } else {
        let (r0, r1) = (c.r[j - 1], c.r[j]);
        c.s[j - 1] + (c.s[j] - c.s[j - 1]) * r0 / (r0 - r1)
    };
    if c.theta[j].abs() > tol {
        return none_class(format!("axis reached at angle {:.3e}, not perpendicular", c.theta[j]));
    }
    let upto = j + 1;
    let monotone = c.r[..upto].windows(2).all(|w| w[1] <= w[0] + tol) && c.t[..upto].windows(2).all(|w| w[1] >= w[0] - tol);
    if !monotone {
        return none_class("r not non-increasing or t not non-decreasing before the axis");
    }
    let base = CurveClass { tag: ClassTag::GammaB, b: Some(b), partition: None, reason: String::new() };

    let k = &c.kappa[..upto];
    let th = &c.theta[..upto];
    let find = |from: usize, pred: &dyn Fn(usize) -> bool| (from..upto).find(|&i| pred(i));
    // knots are infima, so they are located by sign; flatness uses `tol`
    let Some(i1) = find(0, &|i| k[i] > 0.0) else { return base };
    let Some(i2) = find(i1, &|i| k[i] <= 0.0) else { return base };
    let Some(i3) = find(i2, &|i| k[i] > 0.0) else { return base };
    let Some(i4) = find(i3, &|i| th[i] >= FRAC_PI_2 - tol && k[i] == 0.0) else { return base };
    let Some(i5) = find(i4, &|i| k[i] < 0.0) else { return base };
    let flat = |a: usize, b: usize| (a..b).all(|i| k[i].abs() <= tol);
    let vertical = (i4..i5).all(|i| th[i].cos() <= tol);
    if !(flat(0, i1) && flat(i2, i3) && flat(i4, i5) && vertical) {
        return base;
    }
    // the first bend must end before the second starts
    let partition = [0.0, c.s[i1], c.s[i2], c.s[i3], c.s[i4], c.s[i5], b];
    CurveClass { tag: ClassTag::GammaTildeB, b: Some(b), partition: Some(partition), reason: String::new() }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BendParams {
    pub rho: f64,
    pub c2: f64,
    pub theta0: f64,
    pub rbar: f64,
    /// Upper bound for the tube radius `r(s₄)`.
    pub r_target: f64,
    /// End of the initial bend.
    pub s2: f64,
    /// Length of the vertical piece `[s₄, s₅]` relative to `r(s₄)`.
    pub plateau_factor: f64,
    /// Descent length relative to `r(s₅)`; must stay below 1.
    pub descent_fraction: f64,
    pub max_steps: usize,
}

impl BendParams {
    pub fn new(rho: f64, c2: f64, theta0: f64, rbar: f64, r_target: f64) -> Result<Self> {
        let p = BendParams {
            rho,
            c2,
            theta0,
            rbar,
            r_target,
            s2: rbar / 4.0,
            plateau_factor: 1.0,
            descent_fraction: 0.5,
            max_steps: 10_000,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let pos = [("rho", self.rho), ("C2", self.c2), ("rbar", self.rbar), ("r_target", self.r_target), ("s2", self.s2)];
        for (name, v) in pos {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CurvError::Domain(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.theta0 >= 0.0 && self.theta0 < FRAC_PI_2) {
            return Err(CurvError::Domain(format!("theta0 must lie in [0, pi/2), got {}", self.theta0)));
        }
        if !(self.descent_fraction > 0.0) || !(self.plateau_factor > 0.0) {
            return Err(CurvError::Domain("descent and plateau lengths must be positive".into()));
        }
        if self.s2 >= self.rbar {
            return Err(CurvError::Domain(format!("s2 = {} must stay below rbar = {}", self.s2, self.rbar)));
        }
        Ok(())
    }

    /// `ρ / (2 C₂)`, the constant of the bending inequality.
    pub fn k412(&self) -> f64 {
        self.rho / (2.0 * self.c2)
    }
}

/// `⌈(π/2 − θ₀) / ((ρ/16C₂) sin θ₀)⌉ + 1`: each step turns at least by
/// `(ρ/16C₂) sin θ₀`.
pub fn step_bound(rho: f64, c2: f64, theta0: f64) -> usize {
    ((FRAC_PI_2 - theta0) / (rho / (16.0 * c2) * theta0.sin())).ceil() as usize + 1
}

/// `(ρ, C₂)` of the warped model: `ρ` is the cone radius of `C` at
/// `R_{ℝ^{n−q+1}×S^{q−1}}` (the limit of the bent tube) and `C₂ = ‖L‖_F`.
pub fn model_constants(c: &Condition, q: usize, opts: &ConeOptions) -> Result<(f64, f64)> {
    if q < 2 || q > c.n {
        return Err(CurvError::Domain(format!("need 2 <= q <= n, got q={q}, n={}", c.n)));
    }
    let rho = cone_radius(c, &model_operator(c.n, q - 1)?, opts)?.radius;
    if !(rho > 0.0) {
        return Err(CurvError::Infeasible(format!("{} has no cone opening at the tube model for q={q}", c.name())));
    }
    let c2 = l_operator(&BlockLayout::warped(c.n, q)?)?.frobenius();
    Ok((rho, c2))
}

/// `θ = θ₀ S((s − s₂/4)/(s₂/2))` on `[0, s₂]`: flat near both ends, so the
/// bend proper occupies `[s₂/4, 3s₂/4]`.
pub fn initial_bend(p: &BendParams) -> Result<AngleCurve> {
    if !(p.s2 > 0.0) {
        return Err(CurvError::Domain(format!("s2 must be positive, got {}", p.s2)));
    }
    let mut c = AngleCurve::new(p.rbar);
    let kappa = if p.theta0 == 0.0 { Kappa::Zero } else { Kappa::Ramp { amp: p.theta0, a: p.s2 / 4.0, w: p.s2 / 2.0 } };
    c.push(Role::InitialBend, kappa, p.s2);
    c.marks.s1 = Some(p.s2 / 4.0);
    c.marks.s2 = Some(0.75 * p.s2);
    Ok(c)
}

#[derive(Debug, Clone, Serialize)]
pub struct SecondBendReport {
    pub steps: usize,
    pub step_bound: usize,
    /// `min r(s_{l+1}) / r(s_l)` over all steps.
    pub min_radius_ratio: f64,
    /// `max θ' / ((ρ/4C₂) sin θ(s_l)/r(s_l))` over the steps; at most 1.
    pub max_plateau_ratio: f64,
    pub r_s4: f64,
}

/// Inductive second bend from the current end of `c` (which must be
/// straight with `θ ∈ (0, π/2)`): step `l` has length `r_l/2` and a bump of
/// height `(ρ/4C₂) sin θ_l / r_l` supported in `[r_l/16, r_l/2 − r_l/16]`.
/// The last bump is scaled so that `θ` ends exactly at `π/2`.
pub fn second_bend(p: &BendParams, c: &mut AngleCurve) -> Result<SecondBendReport> {
    let (s_start, mut theta, mut r, _) = c.end_state();
    if !(theta > 0.0 && theta < FRAC_PI_2) || !(r > 0.0) {
        return Err(CurvError::Domain(format!("second bend needs theta in (0, pi/2) and r > 0, got theta={theta}, r={r}")));
    }
    let mut rep = SecondBendReport {
        steps: 0,
        step_bound: step_bound(p.rho, p.c2, theta),
        min_radius_ratio: 1.0,
        max_plateau_ratio: 0.0,
        r_s4: r,
    };
    let mut first = true;
    loop {
        if rep.steps >= p.max_steps {
            return Err(CurvError::NonConvergence(format!("second bend did not reach pi/2 in {} steps (theta = {theta})", p.max_steps)));
        }
        let len = r / 2.0;
        let plateau = p.rho / (4.0 * p.c2) * theta.sin() / r;
        let (a0, a1, b0, b1) = (r / 16.0, r / 8.0, len - r / 8.0, len - r / 16.0);
        let full_turn = plateau * (b1 - a0 + b0 - a1) / 2.0;
        let last = theta + full_turn >= FRAC_PI_2;
        let height = if last { plateau * (FRAC_PI_2 - theta) / full_turn } else { plateau };
        // the final step ends where θ reaches π/2 so that s₄ is a piece boundary
        let seg_len = if last { b1 } else { len };
        if first {
            c.marks.s3 = Some(s_start + a0);
            first = false;
        }
        let seg = c.push(Role::SecondBend(rep.steps), Kappa::Bump { height, a0, a1, b0, b1 }, seg_len);
        let r_next = seg.r_end();
        rep.max_plateau_ratio = rep.max_plateau_ratio.max(height / plateau);
        rep.min_radius_ratio = rep.min_radius_ratio.min(r_next / r);
        rep.steps += 1;
        r = r_next;
        theta = if last { FRAC_PI_2 } else { seg.theta_end() };
        if last {
            break;
        }
    }
    rep.r_s4 = r;
    c.marks.s4 = Some(c.length());
    Ok(rep)
}

/// Vertical piece `[s₄, s₅]`, smooth descent of `θ` to 0 over
/// `descent_fraction · r(s₅)`, then a straight run into the axis.
pub fn close_curve(c: &mut AngleCurve, p: &BendParams) -> Result<()> {
    let (_, theta, r4, _) = c.end_state();
    if (theta - FRAC_PI_2).abs() > 1e-12 {
        return Err(CurvError::Domain(format!("closing needs theta = pi/2 at the end, got {theta}")));
    }
    c.push(Role::Plateau, Kappa::Zero, p.plateau_factor * r4);
    let s5 = c.length();
    let r5 = c.end_state().2;
    let d = p.descent_fraction * r5;
    let seg = c.push(Role::Descent, Kappa::Ramp { amp: -FRAC_PI_2, a: 0.0, w: d }, d);
    let r6 = seg.r_end();
    if !(r6 > 0.0) {
        return Err(CurvError::Infeasible(format!("descent crosses the axis (r = {r6:.3e}); shorten the descent")));
    }
    let s6 = c.length();
    c.push(Role::Run, Kappa::Zero, r6);
    c.marks.s5 = Some(s5);
    c.marks.s6 = Some(s6);
    c.marks.b = Some(c.length());
    Ok(())
}

#[derive(Debug, Clone)]
pub struct BentCurve {
    pub curve: AngleCurve,
    pub report: SecondBendReport,
    /// Length of the straight piece inserted before the second bend.
    pub extension: f64,
}

/// Initial bend, optional straight extension (so that `r(s₄) ≤ r_target`
/// when reachable; the second bend is scale invariant), second bend and
/// closing.
pub fn build_bent_curve(p: &BendParams) -> Result<BentCurve> {
    p.validate()?;
    if p.theta0 == 0.0 {
        return Err(CurvError::Domain("theta0 = 0 never leaves the r-axis".into()));
    }
    let base = initial_bend(p)?;
    let r2 = base.end_state().2;
    // dry run from r(s₂) to learn the shrink factor r(s₄)/r(s₃)
    let mut dry = base.clone();
    let dry_rep = second_bend(p, &mut dry)?;
    let factor = dry_rep.r_s4 / r2;
    let mut curve = base;
    let mut extension = 0.0;
    if dry_rep.r_s4 > p.r_target {
        let r3 = p.r_target / factor;
        extension = (r2 - r3) / p.theta0.cos();
        curve.push(Role::Straight, Kappa::Zero, extension);
    }
    let report = second_bend(p, &mut curve)?;
    close_curve(&mut curve, p)?;
    Ok(BentCurve { curve, report, extension })
}

/// `max θ'·r / ((ρ/2C₂) sin θ)` over the knots with `s ≥ s₂`; (4.12)
/// holds iff this is at most 1. Points with `θ' ≤ 0` count as 0.
pub fn bend_ratio(c: &AngleCurve, p: &BendParams, knots: &[(usize, f64)]) -> f64 {
    let first = c.with_role(|r| r != Role::InitialBend).first().copied().unwrap_or(usize::MAX);
    let sample = c.sample(knots);
    let mut worst = 0.0_f64;
    for (k, &(i, _)) in knots.iter().enumerate() {
        if i < first {
            continue;
        }
        let kap = sample.kappa[k];
        if kap <= 0.0 {
            continue;
        }
        let rhs = p.k412() * sample.theta[k].sin();
        worst = worst.max(kap * sample.r[k] / rhs);
    }
    worst
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceSample {
    pub s: f64,
    pub margin: f64,
    pub lambda: f64,
    pub mu_l: f64,
}

#[derive(Debug, Clone)]
pub enum Ambient {
    /// `β(r) = r`.
    Flat,
    Profile(WarpProfile),
}

#[derive(Debug, Clone, Serialize)]
pub struct FlatModelReport {
    pub condition: String,
    pub samples: Vec<TraceSample>,
    pub min_margin: f64,
    pub argmin_s: f64,
    /// Flat ambient only: `max ‖E + (θ' sin θ / r) L‖_F / (1 + ‖R_D‖_F)`
    /// from the chain-rule derivatives of `B = r(s)`; relative because `R_D`
    /// grows like `r⁻²`.
    pub e_identity: Option<f64>,
}

/// Curvature of `g_ℝᵏ + ds² + B(s)² g_{S^{q−1}}`, `B = β∘r`, along the
/// curve. `B' = −β' cos θ`, `B'' = β'' cos²θ + β' sin θ θ'`.
pub fn flat_model_check(c: &AngleCurve, k: usize, q: usize, cond: &Condition, ambient: &Ambient, per_segment: usize) -> Result<FlatModelReport> {
    let n = k + q;
    if cond.n != n {
        return Err(CurvError::Dimension { expected: n, got: cond.n });
    }
    let l = l_operator(&BlockLayout::warped(n, q)?)?;
    let knots: Vec<(usize, f64)> = c
        .knots(per_segment)
        .into_iter()
        .filter(|&(i, u)| {
            // stay off the axis: the last piece is sampled down to 1e-3 of its start radius
            let seg = &c.segments[i];
            seg.role != Role::Run || u <= seg.len * (1.0 - 1e-3)
        })
        .collect();
    let pc = c.sample(&knots);
    let mut rep = FlatModelReport {
        condition: cond.name(),
        samples: Vec::with_capacity(pc.len()),
        min_margin: f64::INFINITY,
        argmin_s: f64::NAN,
        e_identity: None,
    };
    let mut e_max = 0.0_f64;
    for i in 0..pc.len() {
        let (th, kap, r) = (pc.theta[i], pc.kappa[i], pc.r[i]);
        if !(r > 0.0) {
            return Err(CurvError::Singular(format!("tube radius vanishes at s = {}", pc.s[i])));
        }
        let (b, b1r, b2r) = match ambient {
            Ambient::Flat => (r, 1.0, 0.0),
            Ambient::Profile(beta) => {
                let j = beta.jet(r);
                (j.value(), j.d1(), j.d2())
            }
        };
        if !(b > 0.0) {
            return Err(CurvError::Singular(format!("B(s) = 0 at s = {}", pc.s[i])));
        }
        let bpp = b2r * th.cos().powi(2) + b1r * th.sin() * kap;
        // 1 − B'² = (1 − β'²) cos²θ + sin²θ, free of cancellation at small θ
        let lambda = ((1.0 - b1r) * (1.0 + b1r) * th.cos().powi(2) + th.sin().powi(2)) / (b * b);
        let mu_l = -bpp / b;
        let op = warped_operator(lambda, mu_l, n, q)?;
        let m = cond.membership(&op)?.margin;
        if let Ambient::Flat = ambient {
            // E = R_D − sin²θ·(1/r²)·R_{ℝ×S^{q−1}} must equal −(θ' sin θ / r)·L
            let e = op.combine(1.0, &warped_operator(th.sin().powi(2) / (r * r), 0.0, n, q)?, -1.0);
            let resid = e.combine(1.0, &l, kap * th.sin() / r).frobenius();
            e_max = e_max.max(resid / (1.0 + op.frobenius()));
        }
        if m < rep.min_margin {
            rep.min_margin = m;
            rep.argmin_s = pc.s[i];
        }
        rep.samples.push(TraceSample { s: pc.s[i], margin: m, lambda, mu_l });
    }
    if let Ambient::Flat = ambient {
        rep.e_identity = Some(e_max);
    }
    Ok(rep)
}

/// Flat-model identity from sampled data only: `θ` on a uniform grid of
/// `[0, s₆]`, `B = r` by sixth-order cell quadrature, `B'` and `B''` by
/// sixth-order central differences of the cell increments (ghost nodes
/// continue the curve straight before 0 and along the final run after
/// `s₆`). Returns
/// `max ‖E + (θ' sin θ / r) L‖_F` with `E = R_D − sin²θ·R_T`.
pub fn flat_e_identity_fd(c: &AngleCurve, q: usize, grid_n: usize) -> Result<f64> {
    const GHOST: usize = 6;
    let s_end = c.marks.s6.ok_or_else(|| CurvError::Domain("curve is not closed".into()))?;
    if grid_n < 8 {
        return Err(CurvError::Domain(format!("grid_n = {grid_n} too small")));
    }
    let h = s_end / (grid_n - 1) as f64;
    let total = grid_n + 2 * GHOST;
    let s: Vec<f64> = (0..total).map(|j| (j as f64 - GHOST as f64) * h).collect();
    let at = |sj: f64, f: &dyn Fn(&AngleCurve, f64) -> f64| if sj < 0.0 { 0.0 } else { f(c, sj) };
    let theta: Vec<f64> = s.iter().map(|&sj| at(sj, &|c, x| c.theta_at(x))).collect();
    let kappa: Vec<f64> = s.iter().map(|&sj| at(sj, &|c, x| c.kappa_at(x))).collect();
    let cos: Vec<f64> = theta.iter().map(|t| t.cos()).collect();
    // r increments over each cell; r' ≡ −1 on the ghost cells before 0
    let mut inc: Vec<f64> = interval_integrals6(&cos, h).into_iter().map(|x| -x).collect();
    for x in inc.iter_mut().take(GHOST) {
        *x = -h;
    }
    let mut r = vec![c.rbar; total];
    for j in GHOST..total - 1 {
        r[j + 1] = r[j] + inc[j];
    }
    let (b1, b2) = fd_central6_increments(&inc[..total - 3], h);
    // ‖a·R_{ℝ×S^{q−1}} + b·L‖_F² = a²·C(q−1,2) + b²·(q−1)
    let nm = ((q - 1) * (q - 2) / 2) as f64;
    let nl = (q - 1) as f64;
    let mut worst = 0.0_f64;
    for i in GHOST..GHOST + grid_n {
        let (lambda, mu_l) = warped_coefficients(r[i], b1[i], b2[i]);
        let a = lambda - theta[i].sin().powi(2) / (r[i] * r[i]);
        let b = mu_l + kappa[i] * theta[i].sin() / r[i];
        worst = worst.max((a * a * nm + b * b * nl).sqrt());
    }
    Ok(worst)
}

/// Prop-4.14-style deformation of a closed bent curve back to the r-axis.
#[derive(Debug, Clone)]
pub struct Isotopy {
    pub base: AngleCurve,
    pub params: BendParams,
    /// Width of the cutoff that stops the second bend.
    pub delta: f64,
    s3: f64,
    s4: f64,
    plateau: f64,
    descent: Segment,
}

fn cut_curve(base: &AngleCurve, p_cut: f64, delta: f64, straight_to: f64) -> AngleCurve {
    let mut c = AngleCurve::new(base.rbar);
    c.marks.s1 = base.marks.s1;
    c.marks.s2 = base.marks.s2;
    for seg in &base.segments {
        if seg.s_end() <= p_cut {
            c.push(seg.role, seg.kappa.clone(), seg.len);
            continue;
        }
        if seg.s0 >= p_cut + delta || seg.s0 >= straight_to {
            break;
        }
        let at = p_cut - seg.s0;
        let kappa = if seg.kappa.is_zero() {
            Kappa::Zero
        } else {
            Kappa::Cut { inner: Box::new(seg.kappa.clone()), at, width: delta }
        };
        let len = seg.len.min(straight_to - seg.s0);
        c.push(seg.role, kappa, len);
    }
    let end = c.length();
    if straight_to > end {
        c.push(Role::Straight, Kappa::Zero, straight_to - end);
    }
    c
}

impl Isotopy {
    /// Chooses the cutoff width by bisection: the largest `δ ≤ min((s₄ −
    /// s₃)/4, s₅ − s₄)` for which every sampled cut curve keeps
    /// `θ' ≤ (ρ/3C₂) sin θ / r` on the cutoff window.
    pub fn new(bent: &AngleCurve, p: &BendParams) -> Result<Self> {
        let m = bent.marks;
        let (Some(s3), Some(s4), Some(s5)) = (m.s3, m.s4, m.s5) else {
            return Err(CurvError::Domain("isotopy needs a closed bent curve".into()));
        };
        let descent_idx = *bent
            .with_role(|r| r == Role::Descent)
            .first()
            .ok_or_else(|| CurvError::Domain("curve has no descent".into()))?;
        let descent = bent.segments[descent_idx].clone();
        let plateau = s5 - s4;
        let bound = p.rho / (3.0 * p.c2);
        let ok = |delta: f64| -> bool {
            for sb in linspace(s3, s4, 9) {
                let cut = cut_curve(bent, sb, delta, sb + delta);
                let knots: Vec<(usize, f64)> = cut
                    .knots(17)
                    .into_iter()
                    .filter(|&(i, u)| {
                        let s = cut.segments[i].s0 + u;
                        s >= sb && s <= sb + delta
                    })
                    .collect();
                let pc = cut.sample(&knots);
                for k in 0..pc.len() {
                    if pc.kappa[k] > 0.0 && pc.kappa[k] * pc.r[k] > bound * pc.theta[k].sin() * (1.0 + 1e-12) {
                        return false;
                    }
                }
            }
            true
        };
        let mut hi = ((s4 - s3) / 4.0).min(plateau);
        let mut lo = 0.0;
        if ok(hi) {
            lo = hi;
        } else {
            for _ in 0..40 {
                let mid = 0.5 * (lo + hi);
                if ok(mid) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
        }
        if !(lo > 0.0) {
            return Err(CurvError::Infeasible("no admissible cutoff width".into()));
        }
        Ok(Isotopy { base: bent.clone(), params: *p, delta: lo, s3, s4, plateau, descent })
    }

    /// `p(t) = s₄ − t(s₄ − s₃)`.
    pub fn cut_point(&self, t: f64) -> f64 {
        self.s4 - t * (self.s4 - self.s3)
    }

    /// The curve of `κ_t`: `κ` cut off after `p(t)`, straight up to
    /// `s_t = p(t) + (s₅ − s₄)`, the descent scaled by `ε_t` so the total
    /// turning vanishes, then straight into the axis.
    pub fn curve(&self, t: f64) -> Result<(AngleCurve, f64)> {
        if !(0.0..=1.0).contains(&t) {
            return Err(CurvError::Domain(format!("isotopy parameter {t} outside [0, 1]")));
        }
        let pc = self.cut_point(t);
        let st = pc + self.plateau;
        let mut c = cut_curve(&self.base, pc, self.delta, st);
        let (_, theta_st, r_st, _) = c.end_state();
        let eps = theta_st / FRAC_PI_2;
        let seg = c.push(Role::Descent, self.descent.kappa.scaled(eps), self.descent.len);
        let r_end = seg.r_end();
        if !(r_end > 0.0) {
            return Err(CurvError::NonConvergence(format!(
                "t={t}: rescaled descent crosses the axis (r(s_t) = {r_st:.3e}, r after descent = {r_end:.3e})"
            )));
        }
        c.marks.s5 = Some(st);
        c.marks.s6 = Some(c.length());
        c.push(Role::Run, Kappa::Zero, r_end);
        c.marks.b = Some(c.length());
        Ok((c, eps))
    }

    /// Final stage: the angle of the `t = 1` curve decreases linearly,
    /// `θ_u(s) = (1 − u) θ₁(λ_u s)`, closing perpendicular to the axis. The
    /// dilation `λ_u ≥ 1` keeps the part before the final run off the axis:
    /// `λ_u = max(1, J_u / (r̄ − r_f))` with `J_u = ∫ cos((1 − u) θ₁)` over
    /// that part and `r_f = min(r₁, r̄/2)`, `r₁` being where the `t = 1`
    /// curve starts its run. `λ_0 = 1`, and `u = 1` gives the straight
    /// segment.
    pub fn straighten(&self, u: f64) -> Result<AngleCurve> {
        if !(0.0..=1.0).contains(&u) {
            return Err(CurvError::Domain(format!("straightening parameter {u} outside [0, 1]")));
        }
        let (end, _) = self.curve(1.0)?;
        let pre: Vec<&Segment> = end.segments.iter().take_while(|s| s.role != Role::Run).collect();
        let r1 = pre.last().map(|s| s.r_end()).unwrap_or(end.rbar);
        let r_floor = r1.min(0.5 * end.rbar);
        let build = |lambda: f64| {
            let mut c = AngleCurve::new(end.rbar);
            for seg in &pre {
                let k = seg.kappa.scaled(1.0 - u);
                let k = if lambda == 1.0 || k.is_zero() { k } else { Kappa::Dilated { factor: lambda, inner: Box::new(k) } };
                c.push(seg.role, k, seg.len / lambda);
            }
            c
        };
        let plain = build(1.0);
        let j = end.rbar - plain.end_state().2;
        let lambda = (j / (end.rbar - r_floor)).max(1.0);
        let mut c = if lambda > 1.0 { build(lambda) } else { plain };
        let r_end = c.end_state().2;
        if !(r_end > 0.0) || c.segments.iter().any(|s| !(s.r_end() > 0.0)) {
            return Err(CurvError::NonConvergence(format!("u={u}: straightened curve crosses the axis early")));
        }
        c.push(Role::Run, Kappa::Zero, r_end);
        c.marks.b = Some(c.length());
        Ok(c)
    }
}

/// Total turning `∫₀^{L} κ` of a closed curve, i.e. `θ(L)`.
pub fn total_turning(c: &AngleCurve) -> f64 {
    c.segments.iter().map(|s| s.kappa.turn(s.len)).sum()
}

/// Symmetric Hausdorff distance between two sampled point sets.
pub fn hausdorff(a: &PlaneCurve, b: &PlaneCurve) -> f64 {
    let directed = |x: &PlaneCurve, y: &PlaneCurve| {
        let mut worst = 0.0_f64;
        for i in 0..x.len() {
            let mut best = f64::INFINITY;
            for j in 0..y.len() {
                let d = (x.r[i] - y.r[j]).hypot(x.t[i] - y.t[j]);
                best = best.min(d);
            }
            worst = worst.max(best);
        }
        worst
    };
    directed(a, b).max(directed(b, a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conditions::ConditionKind;

    #[test]
    fn reconstruction_examples() {
        let h = 1e-3;
        let c = curve_from_theta(&[0.0; 101], h, 1.0).unwrap();
        assert!((c.r[100] - 0.9).abs() < 1e-14 && c.t[100] == 0.0);
        let c = curve_from_theta(&[FRAC_PI_2; 101], h, 1.0).unwrap();
        assert!((c.r[100] - 1.0).abs() < 1e-14 && (c.t[100] - 0.1).abs() < 1e-14);
        assert!(matches!(curve_from_theta(&[0.0, 2.0], h, 1.0), Err(CurvError::ClassViolation { .. })));
    }

    #[test]
    fn ramp_angle_against_closed_form() {
        // θ = (π/2) min(s, 1) on [0, 2]
        let n = 4097;
        let h = 2.0 / (n - 1) as f64;
        let th: Vec<f64> = (0..n).map(|i| FRAC_PI_2 * (i as f64 * h).min(1.0)).collect();
        let c = curve_from_theta(&th, h, 1.0).unwrap();
        for i in 0..n {
            let s = i as f64 * h;
            let (r, t) = if s <= 1.0 {
                (1.0 - (FRAC_PI_2 * s).sin() / FRAC_PI_2, (1.0 - (FRAC_PI_2 * s).cos()) / FRAC_PI_2)
            } else {
                (1.0 - 1.0 / FRAC_PI_2, 1.0 / FRAC_PI_2 + (s - 1.0))
            };
            assert!((c.r[i] - r).abs() < 1e-9 && (c.t[i] - t).abs() < 1e-9, "s={s}");
        }
    }

    #[test]
    fn straight_curve_hits_axis_at_rbar() {
        let n = 1001;
        let h = 1.0 / (n - 1) as f64;
        let c = curve_from_theta(&vec![0.0; n], h, 1.0).unwrap();
        let cls = classify(&c);
        assert_eq!(cls.tag, ClassTag::GammaB);
        assert!((cls.b.unwrap() - 1.0).abs() < 1e-12);
        let v = curve_from_theta(&vec![FRAC_PI_2; n], h, 1.0).unwrap();
        assert_eq!(classify(&v).tag, ClassTag::None);
    }

    #[test]
    fn kappa_turn_consistent() {
        let shapes = [
            Kappa::Ramp { amp: 0.7, a: 0.1, w: 0.5 },
            Kappa::Bump { height: 2.0, a0: 0.05, a1: 0.1, b0: 0.3, b1: 0.4 },
            Kappa::Cut { inner: Box::new(Kappa::Bump { height: 2.0, a0: 0.05, a1: 0.1, b0: 0.3, b1: 0.4 }), at: 0.2, width: 0.07 },
        ];
        for k in shapes {
            for u in [0.03, 0.08, 0.2, 0.25, 0.35, 0.5] {
                let num = gl_integrate(|v| k.value(v), 0.0, u, 64);
                assert!((k.turn(u) - num).abs() < 1e-12, "{k:?} at {u}: {} vs {num}", k.turn(u));
            }
        }
    }

    #[test]
    fn initial_bend_is_flat_at_both_ends() {
        let p = BendParams::new(0.5, 1.0, 0.1, 1.0, 0.05).unwrap();
        let c = initial_bend(&p).unwrap();
        let seg = &c.segments[0];
        assert_eq!(seg.kappa_at(0.0), 0.0);
        assert_eq!(seg.kappa_at(p.s2), 0.0);
        assert!((seg.theta_end() - 0.1).abs() < 1e-15);
        let pc = c.sample(&c.knots(200));
        assert!(pc.theta.windows(2).all(|w| w[1] >= w[0]));
        let zero = BendParams { theta0: 0.0, ..p };
        let c = initial_bend(&zero).unwrap();
        assert!(c.sample(&c.knots(20)).theta.iter().all(|&t| t == 0.0));
    }

    #[test]
    fn default_demo_curve_certifies_bending_inequality() {
        let p = BendParams::new(0.5, 1.0, 0.1, 1.0, 0.05).unwrap();
        let bent = build_bent_curve(&p).unwrap();
        assert!(bent.report.steps <= bent.report.step_bound);
        assert!(bent.report.min_radius_ratio >= 0.5);
        let steps = bent.curve.with_role(|r| matches!(r, Role::SecondBend(_)));
        let per = 4096 / steps.len() + 1;
        let ratio = bend_ratio(&bent.curve, &p, &bent.curve.knots(per));
        assert!(ratio <= 0.5 + 1e-9, "ratio {ratio}");
        let pc = bent.curve.sample(&bent.curve.knots(64));
        let cls = classify(&pc);
        assert_eq!(cls.tag, ClassTag::GammaTildeB, "{}", cls.reason);
        assert!(pc.r.windows(2).all(|w| w[1] <= w[0] + 1e-15));
        assert!(pc.t.windows(2).all(|w| w[1] >= w[0] - 1e-15));
    }

    fn gentle() -> BendParams {
        BendParams::new(8.0, 1.0, 1.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn gentle_curve_classifies_with_partition() {
        let p = gentle();
        let bent = build_bent_curve(&p).unwrap();
        let pc = bent.curve.sample(&bent.curve.knots(400));
        let cls = classify(&pc);
        assert_eq!(cls.tag, ClassTag::GammaTildeB, "{}", cls.reason);
        let part = cls.partition.unwrap();
        let m = bent.curve.marks;
        let spacing = pc.s.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
        for (got, want) in part[1..6].iter().zip([m.s1, m.s2, m.s3, m.s4, m.s5]) {
            assert!((got - want.unwrap()).abs() <= 2.0 * spacing, "{got} vs {want:?}");
        }
        assert!((cls.b.unwrap() - m.b.unwrap()).abs() < 1e-9);
        // final velocity is −∂_r
        let last = bent.curve.segments.last().unwrap();
        assert_eq!(last.theta_end(), 0.0);
    }

    #[test]
    fn flat_model_identity_holds() {
        let p = gentle();
        let bent = build_bent_curve(&p).unwrap();
        let cond = Condition::new(ConditionKind::Psc, 7).unwrap();
        let rep = flat_model_check(&bent.curve, 3, 4, &cond, &Ambient::Flat, 64).unwrap();
        assert!(rep.e_identity.unwrap() < 1e-9);
        let fd = flat_e_identity_fd(&bent.curve, 4, 4096).unwrap();
        assert!(fd < 1e-6, "fd residual {fd}");
        assert!(flat_e_identity_fd(&bent.curve, 4, 8192).unwrap() < 1e-8);
    }

    #[test]
    fn isotopy_endpoints() {
        let p = gentle();
        let bent = build_bent_curve(&p).unwrap();
        let iso = Isotopy::new(&bent.curve, &p).unwrap();
        let (c0, eps0) = iso.curve(0.0).unwrap();
        assert_eq!(eps0, 1.0);
        let a = bent.curve.sample(&bent.curve.knots(40));
        let b = c0.sample(&c0.knots(40));
        assert!(hausdorff(&a, &b) < 1e-12);
        for t in [0.3, 1.0] {
            let (c, _) = iso.curve(t).unwrap();
            assert!(total_turning(&c).abs() < 1e-12);
            assert!(bend_ratio(&c, &p, &c.knots(40)) <= 1.0);
        }
        let end = iso.straighten(1.0).unwrap();
        assert!((end.length() - 1.0).abs() < 1e-12);
        let pc = end.sample_uniform(1.0, 101);
        let line = curve_from_theta(&vec![0.0; 101], 0.01, 1.0).unwrap();
        assert!(hausdorff(&pc, &line) < 1e-12);
    }
}
