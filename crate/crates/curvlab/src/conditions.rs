//! Curvature conditions as open sets with signed margins.
//!
//! A condition is "strictly satisfied" when its margin exceeds
//! [`tolerance::EPS_STRICT`], so boundary operators such as the flat model
//! classify as outside. Margins:
//!
//! | condition      | margin                                   | exact |
//! |----------------|------------------------------------------|-------|
//! | `psc`          | `scal(R)`                                | yes   |
//! | `sec_pos`      | min sectional curvature (search)         | no    |
//! | `p_curv(p)`    | min `s_p` over `G_p` (search for `p ≥ 2`)| p ≤ 1 |
//! | `k_pos_ric(k)` | sum of the `k` smallest Ricci eigenvalues| yes   |
//! | `ric_lt(α)`    | `α − λ_max(Ric)`                         | yes   |
//! | `scal_lt(β)`   | `β − scal(R)`                            | yes   |

use std::collections::BTreeMap;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::curvature_algebra::{
    l_operator, model_operator, ricci_matrix, scal, BlockLayout, CurvOp, Frame,
};
use crate::error::{CurvError, Result};
use crate::numeric::{logspace, rng_stream};
use crate::stiefel::{self, Budget, Objective};
use crate::tolerance::EPS_STRICT;

pub const DEFAULT_SEED: u64 = 0x5eed_2024;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConditionKind {
    Psc,
    SecPos,
    PCurv { p: usize },
    KPosRic { k: usize },
    RicLt { alpha: f64 },
    ScalLt { beta: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Condition {
    pub kind: ConditionKind,
    pub n: usize,
    pub is_convex_cone: bool,
    pub claimed_codim: Option<usize>,
    pub deformable_claimed: bool,
    pub budget: Budget,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct Membership {
    pub inside: bool,
    pub margin: f64,
    /// False when the margin is a best-found minimum of a search.
    pub exact: bool,
    pub witness: Option<Frame>,
}

impl Membership {
    fn exact(margin: f64, witness: Option<Frame>) -> Self {
        Membership { inside: margin > EPS_STRICT, margin, exact: true, witness }
    }
}

impl Condition {
    pub fn new(kind: ConditionKind, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(CurvError::Domain(format!("dimension must be >= 2, got {n}")));
        }
        let (cone, codim, deformable) = match kind {
            ConditionKind::Psc => (true, Some(3), true),
            ConditionKind::SecPos => (true, None, false),
            ConditionKind::PCurv { p } => {
                if p + 2 > n {
                    return Err(CurvError::Domain(format!("p-curvature needs 0 <= p <= n-2, got p={p}, n={n}")));
                }
                (true, Some(p + 3), p + 2 < n)
            }
            ConditionKind::KPosRic { k } => {
                if k == 0 || k > n {
                    return Err(CurvError::Domain(format!("k-positive Ricci needs 1 <= k <= n, got k={k}, n={n}")));
                }
                let c = if k + 1 >= n { 3 } else { (n + 2 - k).max(3) };
                (true, Some(c), k >= 2)
            }
            ConditionKind::RicLt { alpha } | ConditionKind::ScalLt { beta: alpha } => {
                if !alpha.is_finite() {
                    return Err(CurvError::Domain("threshold must be finite".into()));
                }
                (false, None, false)
            }
        };
        Ok(Condition {
            kind,
            n,
            is_convex_cone: cone,
            claimed_codim: codim.filter(|&c| c <= n),
            deformable_claimed: deformable,
            budget: Budget::default(),
            seed: DEFAULT_SEED,
        })
    }

    /// `name ∈ {psc, sec_pos, p_curv, k_pos_ric, ric_lt, scal_lt}` with
    /// parameters `p`, `k`, `alpha`, `beta` as applicable.
    pub fn builtin(name: &str, n: usize, params: &BTreeMap<String, f64>) -> Result<Self> {
        let get = |key: &str| {
            params
                .get(key)
                .copied()
                .ok_or_else(|| CurvError::Domain(format!("condition {name} needs parameter {key}")))
        };
        let int = |key: &str| -> Result<usize> {
            let v = get(key)?;
            if v < 0.0 || v.fract() != 0.0 {
                return Err(CurvError::Domain(format!("parameter {key} must be a non-negative integer, got {v}")));
            }
            Ok(v as usize)
        };
        let kind = match name {
            "psc" => ConditionKind::Psc,
            "sec_pos" => ConditionKind::SecPos,
            "p_curv" => ConditionKind::PCurv { p: int("p")? },
            "k_pos_ric" => ConditionKind::KPosRic { k: int("k")? },
            "ric_lt" => ConditionKind::RicLt { alpha: get("alpha")? },
            "scal_lt" => ConditionKind::ScalLt { beta: get("beta")? },
            other => return Err(CurvError::Domain(format!("unknown condition {other:?}"))),
        };
        Condition::new(kind, n)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_budget(mut self, budget: Budget) -> Self {
        self.budget = budget;
        self
    }

    pub fn name(&self) -> String {
        match self.kind {
            ConditionKind::Psc => "psc".into(),
            ConditionKind::SecPos => "sec_pos".into(),
            ConditionKind::PCurv { p } => format!("p_curv(p={p})"),
            ConditionKind::KPosRic { k } => format!("k_pos_ric(k={k})"),
            ConditionKind::RicLt { alpha } => format!("ric_lt(alpha={alpha})"),
            ConditionKind::ScalLt { beta } => format!("scal_lt(beta={beta})"),
        }
    }

    /// True when the margin is computed in closed form.
    pub fn has_exact_margin(&self) -> bool {
        match self.kind {
            ConditionKind::SecPos => self.n == 2,
            ConditionKind::PCurv { p } => p <= 1,
            _ => true,
        }
    }

    pub fn membership(&self, r: &CurvOp) -> Result<Membership> {
        self.membership_warm(r, &[])
    }

    /// Membership with extra starting frames for search-based margins.
    pub fn membership_warm(&self, r: &CurvOp, warm: &[DMatrix<f64>]) -> Result<Membership> {
        if r.n != self.n {
            return Err(CurvError::Dimension { expected: self.n, got: r.n });
        }
        Ok(match self.kind {
            ConditionKind::Psc => Membership::exact(scal(r), None),
            ConditionKind::ScalLt { beta } => Membership::exact(beta - scal(r), None),
            ConditionKind::RicLt { alpha } => {
                let (ev, vecs) = ricci_eigen(r);
                let top = ev.len() - 1;
                Membership::exact(alpha - ev[top], Some(eigen_frame(&vecs, &[top])))
            }
            ConditionKind::KPosRic { k } => {
                let (ev, vecs) = ricci_eigen(r);
                let idx: Vec<usize> = (0..k).collect();
                Membership::exact(idx.iter().map(|&i| ev[i]).sum(), Some(eigen_frame(&vecs, &idx)))
            }
            ConditionKind::PCurv { p: 0 } => Membership::exact(scal(r), Some(Frame::coordinate(self.n, &[]))),
            ConditionKind::PCurv { p: 1 } => {
                // s_1(span v) = scal − 2 Ric(v)
                let (ev, vecs) = ricci_eigen(r);
                let top = ev.len() - 1;
                Membership::exact(scal(r) - 2.0 * ev[top], Some(eigen_frame(&vecs, &[top])))
            }
            ConditionKind::SecPos | ConditionKind::PCurv { .. } => {
                let (value, witness) = self.search(r, self.budget, warm)?;
                Membership {
                    inside: value > EPS_STRICT,
                    margin: value,
                    exact: self.has_exact_margin(),
                    witness: Some(witness),
                }
            }
        })
    }

    fn search(&self, r: &CurvOp, budget: Budget, warm: &[DMatrix<f64>]) -> Result<(f64, Frame)> {
        match self.kind {
            ConditionKind::SecPos => {
                let res = stiefel::minimize(&Objective::sectional(r), budget, self.seed, warm)?;
                Ok((res.value, res.frame))
            }
            ConditionKind::PCurv { p } => {
                let n = self.n;
                if p <= n - p {
                    let ric = ricci_matrix(r);
                    let obj = Objective::p_curvature_direct(r, &ric, p);
                    let res = stiefel::minimize(&obj, budget, self.seed, warm)?;
                    Ok((res.value, res.frame))
                } else {
                    let obj = Objective::p_curvature_complement(r, p);
                    let warm_c: Vec<DMatrix<f64>> = warm
                        .iter()
                        .filter(|w| w.ncols() == p)
                        .map(|w| Frame { n, vecs: w.clone() }.complement().vecs)
                        .collect();
                    let res = stiefel::minimize(&obj, budget, self.seed, &warm_c)?;
                    Ok((res.value, res.frame.complement()))
                }
            }
            _ => Err(CurvError::Domain(format!("{} has no search-based margin", self.name()))),
        }
    }

    /// Value of the margin alone.
    pub fn margin(&self, r: &CurvOp) -> Result<f64> {
        Ok(self.membership(r)?.margin)
    }
}

fn ricci_eigen(r: &CurvOp) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(ricci_matrix(r));
    let n = r.n;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let ev = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = DMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    (ev, vecs)
}

fn eigen_frame(vecs: &DMatrix<f64>, cols: &[usize]) -> Frame {
    Frame { n: vecs.nrows(), vecs: DMatrix::from_fn(vecs.nrows(), cols.len(), |i, j| vecs[(i, cols[j])]) }
}

#[derive(Debug, Clone)]
pub struct MinFunctional {
    pub value: f64,
    pub witness: Frame,
}

/// Best-found minimum of `sec` (over `G_2`) or `s_p` (over `G_p`); the
/// Ricci-based conditions use their eigenvalue route instead of a search.
pub fn min_functional(c: &Condition, r: &CurvOp, budget: Budget) -> Result<MinFunctional> {
    if budget.restarts == 0 || budget.iterations == 0 {
        return Err(CurvError::Domain("budget must be positive".into()));
    }
    match c.kind {
        ConditionKind::SecPos | ConditionKind::PCurv { .. } => {
            if let ConditionKind::PCurv { p } = c.kind {
                if p <= 1 {
                    let m = c.membership(r)?;
                    return Ok(MinFunctional { value: m.margin, witness: m.witness.expect("eigen witness") });
                }
            }
            let (value, witness) = c.search(r, budget, &[])?;
            Ok(MinFunctional { value, witness })
        }
        ConditionKind::KPosRic { .. } => {
            let m = c.membership(r)?;
            Ok(MinFunctional { value: m.margin, witness: m.witness.expect("eigen witness") })
        }
        _ => Err(CurvError::Domain(format!("{} is not a frame minimum", c.name()))),
    }
}

#[derive(Debug, Clone)]
pub struct ConeOptions {
    pub directions: usize,
    pub seed: u64,
    /// Search budget for margins evaluated during sampling.
    pub budget: Budget,
    /// Relative bisection tolerance on the radius.
    pub rel_tol: f64,
    /// Sample even when a closed form exists.
    pub force_sampled: bool,
}

impl Default for ConeOptions {
    fn default() -> Self {
        ConeOptions {
            directions: 512,
            seed: DEFAULT_SEED,
            budget: Budget { restarts: 6, iterations: 150 },
            rel_tol: 1e-7,
            force_sampled: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConeCertificate {
    pub center_ref: String,
    pub radius: f64,
    pub samples: usize,
    pub worst_margin: f64,
    pub exact: bool,
    pub note: String,
}

fn unit(op: CurvOp) -> Option<CurvOp> {
    let f = op.frobenius();
    (f > 0.0).then(|| op.scaled(1.0 / f))
}

/// Structured directions: `−S`, `±Id`, `±` model operators and `±L` for the
/// warped layouts.
fn structured_directions(s: &CurvOp) -> Vec<CurvOp> {
    let n = s.n;
    let mut out = Vec::new();
    out.extend(unit(s.scaled(-1.0)));
    for q in (2..=n).rev() {
        let m = model_operator(n, q).expect("q in range");
        out.extend(unit(m.scaled(-1.0)));
        out.extend(unit(m));
    }
    for q in 2..=n {
        let l = l_operator(&BlockLayout::warped(n, q).expect("q in range")).expect("radial present");
        out.extend(unit(l.scaled(-1.0)));
        out.extend(unit(l));
    }
    out
}

/// Radius of a Frobenius ball around `S` inside the condition.
///
/// For `psc` the boundary is the hyperplane `tr R = 0` and the distance is
/// `scal(S) / ‖2·Id‖_F`. Otherwise every direction is bisected; a direction
/// is skipped when `S + ρ·D` is already inside at the current best `ρ`
/// (for convex conditions it cannot shrink the radius then). The result is
/// a sampled candidate, not a proof.
pub fn cone_radius(c: &Condition, s: &CurvOp, opts: &ConeOptions) -> Result<ConeCertificate> {
    let center = c.membership(s)?;
    let note_cone = if c.is_convex_cone {
        "convex cone: the cone over B_rho(S) is an admissible C_rho"
    } else {
        "not a convex cone: only the ball is certified"
    };
    if !center.inside {
        return Ok(ConeCertificate {
            center_ref: String::new(),
            radius: 0.0,
            samples: 0,
            worst_margin: center.margin,
            exact: c.has_exact_margin(),
            note: "center outside the condition".into(),
        });
    }
    // a zero center outside C (flat model) already returned radius 0 above
    if s.frobenius() == 0.0 {
        return Err(CurvError::Domain("cone center must be non-zero".into()));
    }
    if c.kind == ConditionKind::Psc && !opts.force_sampled {
        let m = s.m() as f64;
        let radius = scal(s) / (2.0 * m.sqrt());
        return Ok(ConeCertificate {
            center_ref: String::new(),
            radius,
            samples: 0,
            worst_margin: 0.0,
            exact: true,
            note: format!("exact hyperplane distance; {note_cone}"),
        });
    }

    let inner = c.clone().with_budget(opts.budget);
    let mut warm: Vec<DMatrix<f64>> = center.witness.iter().map(|w| w.vecs.clone()).collect();
    let margin_at = |r: &CurvOp, warm: &[DMatrix<f64>]| inner.membership_warm(r, warm);

    let mut dirs = structured_directions(s);
    let structured = dirs.len();
    for i in 0..opts.directions {
        let mut rng = rng_stream(opts.seed, i as u64);
        dirs.push(CurvOp::random_bianchi(s.n, &mut rng));
    }

    // any ball that reaches 0 leaves a condition excluding 0; otherwise grow
    let mut best = s.frobenius();
    if inner.membership(&CurvOp::zero(s.n))?.inside {
        best = f64::INFINITY;
        for d in &dirs {
            let mut rho = s.frobenius();
            while rho < 1e6 && margin_at(&s.combine(1.0, d, rho), &warm)?.inside {
                rho *= 2.0;
            }
            if rho < 1e6 {
                best = best.min(rho);
            }
        }
        if !best.is_finite() {
            best = 1e6;
        }
    }

    let mut worst_margin = f64::INFINITY;
    for d in &dirs {
        let at_best = margin_at(&s.combine(1.0, d, best), &warm)?;
        if at_best.inside {
            worst_margin = worst_margin.min(at_best.margin);
            continue;
        }
        let (mut lo, mut hi) = (0.0, best);
        let mut lo_margin = center.margin;
        while hi - lo > opts.rel_tol * best.max(1e-300) {
            let mid = 0.5 * (lo + hi);
            let m = margin_at(&s.combine(1.0, d, mid), &warm)?;
            if m.inside {
                lo = mid;
                lo_margin = m.margin;
                if let Some(w) = m.witness {
                    if warm.len() < 4 {
                        warm.push(w.vecs);
                    }
                }
            } else {
                hi = mid;
            }
        }
        best = lo;
        worst_margin = lo_margin;
    }
    Ok(ConeCertificate {
        center_ref: String::new(),
        radius: best,
        samples: dirs.len(),
        worst_margin,
        exact: false,
        note: format!(
            "sampled over {} directions ({structured} structured, {} random in C_B); {note_cone}",
            dirs.len(),
            opts.directions
        ),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RayReport {
    pub pass: bool,
    pub first_failure: Option<f64>,
    pub min_margin: f64,
}

/// Checks `R + λL ∈ C` on `λ = 0` and a log grid ending at `lambda_max`.
pub fn inner_ray_check(c: &Condition, r: &CurvOp, l: &CurvOp, lambda_max: f64, steps: usize) -> Result<RayReport> {
    let mut grid = vec![0.0];
    grid.extend(logspace(lambda_max * 1e-6, lambda_max, steps.max(2)));
    let mut min_margin = f64::INFINITY;
    for &lam in &grid {
        let m = c.membership(&r.combine(1.0, l, lam))?;
        min_margin = min_margin.min(m.margin);
        if !m.inside {
            return Ok(RayReport { pass: false, first_failure: Some(lam), min_margin });
        }
    }
    Ok(RayReport { pass: true, first_failure: None, min_margin })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClauseResult {
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DeformabilityReport {
    pub codim: usize,
    pub zero_excluded: ClauseResult,
    pub inner_ray: ClauseResult,
    pub model_scaling: ClauseResult,
}

impl DeformabilityReport {
    pub fn all_pass(&self) -> bool {
        self.zero_excluded.pass && self.inner_ray.pass && self.model_scaling.pass
    }
}

/// Tests the three deformability clauses for `q` from the claimed
/// codimension (3 when none is claimed) to `n`.
pub fn deformability_check(c: &Condition) -> Result<DeformabilityReport> {
    let n = c.n;
    let codim = c.claimed_codim.unwrap_or(3).max(2);
    let zero = c.membership(&CurvOp::zero(n))?;
    let zero_excluded = ClauseResult {
        pass: !zero.inside,
        detail: format!("margin(0) = {:.3e}", zero.margin),
    };

    let mut ray_fail = None;
    let mut scale_fail = None;
    let mus = logspace(1e-6, 1e6, 25);
    for q in codim..=n {
        let base = model_operator(n, q - 1)?;
        let l = l_operator(&BlockLayout::warped(n, q)?)?;
        // members to push along L: the model and seeded perturbations of it
        let mut members = vec![base.clone()];
        for i in 0..4u64 {
            let d = CurvOp::random_bianchi(n, &mut rng_stream(c.seed, 1000 + 16 * q as u64 + i));
            let cand = base.combine(1.0, &d, 0.05);
            if c.membership(&cand)?.inside {
                members.push(cand);
            }
        }
        for (j, r) in members.iter().enumerate() {
            if !c.membership(r)?.inside {
                ray_fail.get_or_insert(format!("q={q}: base member {j} is not inside"));
                continue;
            }
            let rep = inner_ray_check(c, r, &l, 1e3, 13)?;
            if !rep.pass {
                ray_fail.get_or_insert(format!("q={q}, member {j}: leaves C at lambda={:.3e}", rep.first_failure.unwrap()));
            }
        }
        for &mu in &mus {
            let m = c.membership(&base.scaled(mu))?;
            if !m.inside {
                scale_fail.get_or_insert(format!("q={q}, mu={mu:.3e}: margin {:.3e}", m.margin));
                break;
            }
        }
    }
    let scope = if c.is_convex_cone {
        "cone: one positive sample implies all mu"
    } else {
        "grid-certified on mu in [1e-6, 1e6]"
    };
    Ok(DeformabilityReport {
        codim,
        zero_excluded,
        inner_ray: ClauseResult {
            pass: ray_fail.is_none(),
            detail: ray_fail.unwrap_or_else(|| format!("q in {codim}..={n}, lambda grid up to 1e3")),
        },
        model_scaling: ClauseResult {
            pass: scale_fail.is_none(),
            detail: scale_fail.unwrap_or_else(|| scope.to_string()),
        },
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CodimRow {
    pub q: usize,
    pub radius: f64,
    pub worst_margin: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CodimScan {
    /// Smallest certified codimension, if any.
    pub codim: Option<usize>,
    /// Certified at `c` implies certified at every larger codimension.
    pub monotone: bool,
    /// The radius at `q = c − 2` is zero (sampled refutation, not proof).
    pub refuted_below: bool,
    pub rows: Vec<CodimRow>,
}

/// Cone radii at `model(n, q)` for `q = 1, …, n−1`; codimension `c`
/// corresponds to `q = c − 1`.
pub fn surgery_codim_scan(c: &Condition, opts: &ConeOptions) -> Result<CodimScan> {
    let n = c.n;
    let mut rows = Vec::new();
    for q in 1..n {
        let s = model_operator(n, q)?;
        let cert = cone_radius(c, &s, opts)?;
        rows.push(CodimRow { q, radius: cert.radius, worst_margin: cert.worst_margin });
    }
    let certified = |q: usize| rows[q - 1].radius > 0.0;
    let codim = (3..=n).find(|&cc| certified(cc - 1));
    let monotone = match codim {
        Some(cc) => (cc - 1..n).all(certified),
        None => true,
    };
    let refuted_below = match codim {
        Some(cc) => !certified(cc - 2),
        None => false,
    };
    Ok(CodimScan { codim, monotone, refuted_below, rows })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LambdaThreshold {
    /// Every `λ > 0` works.
    AnyPositive,
    /// `λ·model ∈ C` exactly for `λ` above this value.
    Floor(f64),
    /// `λ·model ∈ C` exactly for `0 < λ` below this value.
    Ceiling(f64),
    Never,
}

/// Smallest (or largest) `λ` with `λ·model(n,q) ∈ C`, by scanning a log grid
/// on `[1e-6, 1e6]` and bisecting the first sign change.
pub fn lambda_threshold(c: &Condition, q: usize) -> Result<LambdaThreshold> {
    let model = model_operator(c.n, q)?;
    let inside = |lam: f64| -> Result<bool> { Ok(c.membership(&model.scaled(lam))?.inside) };
    if c.is_convex_cone {
        return Ok(if inside(1.0)? { LambdaThreshold::AnyPositive } else { LambdaThreshold::Never });
    }
    let grid = logspace(1e-6, 1e6, 49);
    let flags: Vec<bool> = grid.iter().map(|&l| inside(l)).collect::<Result<_>>()?;
    let refine = |a: f64, b: f64, a_in: bool| -> Result<f64> {
        let (mut lo, mut hi) = (a, b);
        for _ in 0..200 {
            let mid = (lo * hi).sqrt();
            if inside(mid)? == a_in {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi / lo - 1.0 < 1e-13 {
                break;
            }
        }
        Ok(if a_in { lo } else { hi })
    };
    match (flags.first().copied(), flags.last().copied()) {
        (Some(true), Some(true)) => Ok(LambdaThreshold::AnyPositive),
        (Some(false), Some(false)) => Ok(LambdaThreshold::Never),
        (Some(true), Some(false)) => {
            let i = flags.iter().position(|f| !f).expect("has false");
            Ok(LambdaThreshold::Ceiling(refine(grid[i - 1], grid[i], true)?))
        }
        _ => {
            let i = flags.iter().position(|&f| f).expect("has true");
            Ok(LambdaThreshold::Floor(refine(grid[i - 1], grid[i], false)?))
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConditionSpec {
    pub name: String,
    pub n: usize,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

impl ConditionSpec {
    pub fn build(&self) -> Result<Condition> {
        Condition::builtin(&self.name, self.n, &self.params)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cond(kind: ConditionKind, n: usize) -> Condition {
        Condition::new(kind, n).unwrap()
    }

    #[test]
    fn builtin_examples() {
        let m = cond(ConditionKind::Psc, 4).membership(&CurvOp::identity(4)).unwrap();
        assert!(m.inside);
        assert!((m.margin - 12.0).abs() < 1e-12);

        let m = cond(ConditionKind::KPosRic { k: 3 }, 7)
            .membership(&model_operator(7, 4).unwrap())
            .unwrap();
        assert!(!m.inside);
        assert!(m.margin.abs() < 1e-12);

        let m = cond(ConditionKind::SecPos, 5).membership(&model_operator(5, 3).unwrap()).unwrap();
        assert!(!m.inside);
    }

    #[test]
    fn builtin_rejects_bad_parameters() {
        let mut p = BTreeMap::new();
        p.insert("p".to_string(), 6.0);
        assert!(Condition::builtin("p_curv", 7, &p).is_err());
        p.insert("k".to_string(), 0.0);
        assert!(Condition::builtin("k_pos_ric", 7, &p).is_err());
        assert!(Condition::builtin("nope", 7, &p).is_err());
        assert!(Condition::builtin("ric_lt", 7, &p).is_err());
    }

    #[test]
    fn min_functional_examples() {
        let budget = Budget { restarts: 16, iterations: 200 };
        let id = CurvOp::identity(5);
        let v = min_functional(&cond(ConditionKind::SecPos, 5), &id, budget).unwrap();
        assert!((v.value - 1.0).abs() < 1e-10);

        let r = model_operator(7, 4).unwrap();
        let v = min_functional(&cond(ConditionKind::PCurv { p: 1 }, 7), &r, budget).unwrap();
        assert!((v.value - 6.0).abs() < 1e-10);
        // the witness line lies in the sphere block
        let w = v.witness.col(0);
        assert!(w[..3].iter().all(|x| x.abs() < 1e-8));

        let v = min_functional(&cond(ConditionKind::SecPos, 5), &model_operator(5, 3).unwrap(), budget).unwrap();
        assert!(v.value.abs() < 1e-9);
        assert!(min_functional(&cond(ConditionKind::Psc, 5), &id, budget).is_err());
    }

    #[test]
    fn psc_exact_radius() {
        let c = cond(ConditionKind::Psc, 5);
        let s = model_operator(5, 3).unwrap();
        let cert = cone_radius(&c, &s, &ConeOptions::default()).unwrap();
        assert!(cert.exact);
        assert!((cert.radius - 6.0 / (2.0 * 10f64.sqrt())).abs() < 1e-12);
        let sampled = cone_radius(&c, &s, &ConeOptions { directions: 64, force_sampled: true, ..Default::default() })
            .unwrap();
        assert!(sampled.radius <= cert.radius);
        assert!(sampled.radius > 0.999 * cert.radius);
        let flat = cone_radius(&c, &model_operator(5, 1).unwrap(), &ConeOptions::default()).unwrap();
        assert_eq!(flat.radius, 0.0);
        let lt = cond(ConditionKind::ScalLt { beta: 1.0 }, 5);
        assert!(cone_radius(&lt, &CurvOp::zero(5), &ConeOptions::default()).is_err());
    }

    #[test]
    fn inner_ray_examples() {
        let lay = BlockLayout::warped(4, 3).unwrap();
        let l = l_operator(&lay).unwrap();
        let psc = cond(ConditionKind::Psc, 4);
        assert!(inner_ray_check(&psc, &CurvOp::identity(4), &l, 1e3, 10).unwrap().pass);

        let l7 = l_operator(&BlockLayout::warped(7, 4).unwrap()).unwrap();
        let r = model_operator(7, 4).unwrap().combine(1.0, &CurvOp::identity(7), 0.01);
        let c1 = cond(ConditionKind::PCurv { p: 1 }, 7);
        assert!(inner_ray_check(&c1, &r, &l7, 1e3, 10).unwrap().pass);

        let lt = cond(ConditionKind::ScalLt { beta: 20.0 }, 4);
        let rep = inner_ray_check(&lt, &CurvOp::identity(4), &l, 1e3, 30).unwrap();
        assert!(!rep.pass);
        // scal(I + λL) = 12 + 4λ crosses 20 at λ = 2
        assert!(rep.first_failure.unwrap() >= 2.0);
    }

    #[test]
    fn deformability_examples() {
        assert!(deformability_check(&cond(ConditionKind::Psc, 6)).unwrap().all_pass());
        assert!(deformability_check(&cond(ConditionKind::PCurv { p: 1 }, 7)).unwrap().all_pass());
        let sec = cond(ConditionKind::SecPos, 5).with_budget(Budget { restarts: 8, iterations: 100 });
        assert!(!deformability_check(&sec).unwrap().all_pass());
    }

    #[test]
    fn lambda_threshold_examples() {
        assert_eq!(lambda_threshold(&cond(ConditionKind::Psc, 6), 2).unwrap(), LambdaThreshold::AnyPositive);
        assert_eq!(
            lambda_threshold(&cond(ConditionKind::KPosRic { k: 5 }, 6), 2).unwrap(),
            LambdaThreshold::AnyPositive
        );
        // λ·scal(model(6,3)) = 6λ < 3
        match lambda_threshold(&cond(ConditionKind::ScalLt { beta: 3.0 }, 6), 3).unwrap() {
            LambdaThreshold::Ceiling(c) => assert!((c - 0.5).abs() < 1e-8),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn spec_json_parses() {
        let spec: ConditionSpec = serde_json::from_str(r#"{"name": "p_curv", "n": 7, "params": {"p": 1}}"#).unwrap();
        let c = spec.build().unwrap();
        assert_eq!(c.kind, ConditionKind::PCurv { p: 1 });
        assert_eq!(c.claimed_codim, Some(4));
    }
}
