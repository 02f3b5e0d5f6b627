//! The acceptance suite: one check per criterion, each reporting the
//! measured quantity against a pinned threshold.
//!
//! Reports carry no timings, so two runs with the same configuration
//! serialize to identical bytes.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::bending::{
    bend_ratio, build_bent_curve, curve_from_theta, flat_e_identity_fd, hausdorff, BendParams, Isotopy, Role,
};
use crate::conditions::{cone_radius, Condition, ConditionKind, ConeOptions, DEFAULT_SEED};
use crate::curvature_algebra::{model_operator, ricci_eigenvalues, scal, sec, CurvOp, Frame};
use crate::disc_deformations::{standardize, ConeOpening, DiscOptions};
use crate::error::Result;
use crate::fixtures::{fixture_condition, load_fixtures, FIXTURE_Q};
use crate::numeric::{linspace, rng_stream};
use crate::stiefel::{brute_force, Objective};
use crate::warped_metrics::{embedding_check, torpedo_profile, warped_curvature, TorpedoMode, TorpedoParams};

pub const ROUND_SPHERE_TOL: f64 = 1e-12;
pub const EXACT_RADIUS_TOL: f64 = 1e-10;
pub const CAP_ROUNDNESS_TOL: f64 = 1e-8;
pub const EMBEDDING_TOL: f64 = 1e-8;
pub const BEND_SLACK: f64 = 0.5;
pub const BEND_STEP_LIMIT: usize = 472;
pub const FLAT_IDENTITY_TOL_4096: f64 = 1e-6;
pub const FLAT_IDENTITY_TOL_8192: f64 = 1e-8;
pub const ISOTOPY_ENDPOINT_TOL: f64 = 1e-6;
pub const FINAL_TORPEDO_TOL: f64 = 1e-6;
pub const BOUNDARY_TOL: f64 = 1e-10;
pub const KPOSRIC_ORACLE_TOL: f64 = 1e-6;
pub const PCURV_ORACLE_TOL: f64 = 1e-3;
pub const ORACLE_SAMPLES: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyConfig {
    pub seed: u64,
    pub grid_n: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig { seed: DEFAULT_SEED, grid_n: 4096 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub id: u32,
    pub name: String,
    pub pass: bool,
    /// Worst measured quantity, compared against `threshold`.
    pub value: f64,
    pub threshold: f64,
    pub detail: String,
    /// Present on failure: where the check broke.
    pub witness: Option<String>,
}

impl Check {
    fn new(id: u32, name: &str, value: f64, threshold: f64, pass: bool, detail: String, witness: Option<String>) -> Self {
        Check { id, name: name.into(), pass, value, threshold, detail, witness: if pass { None } else { witness } }
    }

    fn error(id: u32, name: &str, e: impl std::fmt::Display) -> Self {
        Check::new(id, name, f64::NAN, f64::NAN, false, String::new(), Some(format!("error: {e}")))
    }

    /// `id name: PASS|FAIL value (threshold) detail`.
    pub fn line(&self) -> String {
        let status = if self.pass { "PASS" } else { "FAIL" };
        let mut s = format!("{:>2} {:<32} {} value={:.3e} threshold={:.3e}", self.id, self.name, status, self.value, self.threshold);
        if !self.detail.is_empty() {
            s.push_str(&format!(" | {}", self.detail));
        }
        if let Some(w) = &self.witness {
            s.push_str(&format!(" | witness: {w}"));
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub passed: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub tool: String,
    pub version: String,
    pub config: VerifyConfig,
    pub checks: Vec<Check>,
    pub summary: Summary,
}

impl Report {
    pub fn new(config: VerifyConfig, checks: Vec<Check>) -> Self {
        let passed = checks.iter().filter(|c| c.pass).count();
        Report {
            tool: "curvlab".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config,
            summary: Summary { passed, failed: checks.len() - passed },
            checks,
        }
    }

    pub fn all_pass(&self) -> bool {
        self.summary.failed == 0
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

pub const CRITERIA: [u32; 10] = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10];

pub fn run_check(id: u32, cfg: &VerifyConfig) -> Check {
    match id {
        1 => round_sphere(),
        2 => stability_table(cfg),
        3 => exact_psc_radius(cfg),
        4 => cap_roundness(),
        5 => embedding(),
        6 => bending_certificate(cfg),
        7 => flat_model_exactness(cfg),
        8 => straightening_isotopy(),
        9 => disc_pipeline(cfg),
        10 => oracle_equivalence(cfg),
        _ => Check::error(id, "unknown", format!("no criterion {id}")),
    }
}

pub fn run_suite(cfg: &VerifyConfig, ids: &[u32]) -> Report {
    Report::new(cfg.clone(), ids.iter().map(|&id| run_check(id, cfg)).collect())
}

fn try_check(id: u32, name: &str, f: impl FnOnce() -> Result<Check>) -> Check {
    f().unwrap_or_else(|e| Check::error(id, name, e))
}

fn round_sphere() -> Check {
    let name = "round sphere anchor";
    try_check(1, name, || {
        let r = CurvOp::identity(4);
        let mut worst = 0.0_f64;
        let mut rng = rng_stream(1, 0);
        for i in 0..4 {
            for j in i + 1..4 {
                worst = worst.max((sec(&r, &Frame::coordinate(4, &[i, j]))? - 1.0).abs());
            }
        }
        for _ in 0..64 {
            worst = worst.max((sec(&r, &Frame::random(4, 2, &mut rng))? - 1.0).abs());
        }
        for e in ricci_eigenvalues(&r) {
            worst = worst.max((e - 3.0).abs());
        }
        worst = worst.max((scal(&r) - 12.0).abs());
        Ok(Check::new(1, name, worst, ROUND_SPHERE_TOL, worst <= ROUND_SPHERE_TOL, "sec 1, Ric 3, scal 12 at n=4".into(), None))
    })
}

fn condition(kind: ConditionKind, n: usize, seed: u64) -> Result<Condition> {
    Ok(Condition::new(kind, n)?.with_seed(seed))
}

fn stability_table(cfg: &VerifyConfig) -> Check {
    let name = "surgery stability table";
    try_check(2, name, || {
        let opts = ConeOptions { seed: cfg.seed, ..ConeOptions::default() };
        let mut rows: Vec<(ConditionKind, usize, usize)> = Vec::new();
        for n in 5..=8 {
            rows.push((ConditionKind::Psc, n, 3));
        }
        for p in 0..=2 {
            rows.push((ConditionKind::PCurv { p }, 7, p + 3));
        }
        for k in 2..=7 {
            rows.push((ConditionKind::KPosRic { k }, 7, 3.max(7 + 2 - k)));
        }
        let mut bad = Vec::new();
        let mut min_radius = f64::INFINITY;
        for (kind, n, c) in &rows {
            let cond = condition(*kind, *n, cfg.seed)?;
            let at = cone_radius(&cond, &model_operator(*n, c - 1)?, &opts)?.radius;
            let below = cone_radius(&cond, &model_operator(*n, c - 2)?, &opts)?.radius;
            min_radius = min_radius.min(at);
            if !(at > 0.0 && below == 0.0) {
                bad.push(format!("{} n={n}: radius {at:.3e} at q={}, {below:.3e} at q={}", cond.name(), c - 1, c - 2));
            }
        }
        let pass = bad.is_empty();
        Ok(Check::new(
            2,
            name,
            min_radius,
            0.0,
            pass,
            format!("{} rows; smallest certified radius shown", rows.len()),
            Some(bad.join("; ")),
        ))
    })
}

fn exact_psc_radius(cfg: &VerifyConfig) -> Check {
    let name = "exact psc cone radius";
    try_check(3, name, || {
        let c = condition(ConditionKind::Psc, 5, cfg.seed)?;
        let s = model_operator(5, 3)?;
        let exact = cone_radius(&c, &s, &ConeOptions { seed: cfg.seed, ..ConeOptions::default() })?.radius;
        let want = 6.0 / (2.0 * 10f64.sqrt());
        let sampled = cone_radius(&c, &s, &ConeOptions { seed: cfg.seed, force_sampled: true, ..ConeOptions::default() })?.radius;
        let err = (exact - want).abs();
        let pass = err <= EXACT_RADIUS_TOL && sampled <= exact;
        Ok(Check::new(
            3,
            name,
            err,
            EXACT_RADIUS_TOL,
            pass,
            format!("exact {exact:.12}, sampled {sampled:.12}"),
            Some(format!("sampled {sampled} vs exact {exact}")),
        ))
    })
}

fn cap_roundness() -> Check {
    let name = "torpedo cap roundness";
    try_check(4, name, || {
        let mut worst = (0.0_f64, String::new());
        for mu in [0.5, 1.0, 2.0] {
            for q in [3, 4, 5] {
                let n = q + 3;
                let beta = torpedo_profile(TorpedoParams::new(mu, 2.0 * mu)?, TorpedoMode::Piecewise)?;
                let target = model_operator(n, q)?.scaled(1.0 / (mu * mu));
                // the open cap [0, μπ/2)
                for r in linspace(0.0, mu * std::f64::consts::FRAC_PI_2 * (1.0 - 1e-9), 257) {
                    let d = warped_curvature(&beta, r, n, q)?.op.dist(&target);
                    if d > worst.0 {
                        worst = (d, format!("mu={mu}, q={q}, r={r}"));
                    }
                }
            }
        }
        let pass = worst.0 <= CAP_ROUNDNESS_TOL;
        Ok(Check::new(4, name, worst.0, CAP_ROUNDNESS_TOL, pass, "mu in {0.5,1,2}, q in {3,4,5}, n=q+3".into(), Some(worst.1)))
    })
}

fn embedding() -> Check {
    let name = "torpedo embedding";
    try_check(5, name, || {
        let beta = torpedo_profile(TorpedoParams::new(1.0, 2.0)?, TorpedoMode::Mollified)?;
        let rep = embedding_check(&beta, 4, 64, 16)?;
        let pass = rep.residual <= EMBEDDING_TOL;
        Ok(Check::new(5, name, rep.residual, EMBEDDING_TOL, pass, format!("{} samples", rep.samples), Some("residual too large".into())))
    })
}

fn bending_certificate(_cfg: &VerifyConfig) -> Check {
    let name = "bending inequality certificate";
    try_check(6, name, || {
        let p = BendParams::new(0.5, 1.0, 0.1, 1.0, 0.05)?;
        let bent = build_bent_curve(&p)?;
        let steps = bent.curve.with_role(|r| matches!(r, Role::SecondBend(_))).len();
        let per = 4096 / steps.max(1) + 1;
        let ratio = bend_ratio(&bent.curve, &p, &bent.curve.knots(per));
        let rep = &bent.report;
        let pass = ratio <= BEND_SLACK && rep.min_radius_ratio >= 0.5 && rep.steps <= BEND_STEP_LIMIT;
        Ok(Check::new(
            6,
            name,
            ratio,
            BEND_SLACK,
            pass,
            format!("steps {} (limit {BEND_STEP_LIMIT}), min radius ratio {:.4}", rep.steps, rep.min_radius_ratio),
            Some(format!("ratio {ratio}, steps {}, min radius ratio {}", rep.steps, rep.min_radius_ratio)),
        ))
    })
}

/// Parameters of the flat-model and isotopy checks: a curve short enough
/// that 4096 samples resolve every bump of the second bend.
pub fn gentle_bend_params() -> Result<BendParams> {
    BendParams::new(8.0, 1.0, 1.0, 1.0, 1.0)
}

fn flat_model_exactness(cfg: &VerifyConfig) -> Check {
    let name = "flat model exactness";
    try_check(7, name, || {
        let p = gentle_bend_params()?;
        let bent = build_bent_curve(&p)?;
        let coarse = flat_e_identity_fd(&bent.curve, FIXTURE_Q, cfg.grid_n)?;
        let fine = flat_e_identity_fd(&bent.curve, FIXTURE_Q, 2 * cfg.grid_n)?;
        let pass = coarse <= FLAT_IDENTITY_TOL_4096 && fine <= FLAT_IDENTITY_TOL_8192;
        Ok(Check::new(
            7,
            name,
            coarse,
            FLAT_IDENTITY_TOL_4096,
            pass,
            format!("grid {}: {coarse:.3e}; grid {}: {fine:.3e} (threshold {FLAT_IDENTITY_TOL_8192:.0e})", cfg.grid_n, 2 * cfg.grid_n),
            Some(format!("coarse {coarse:.3e}, fine {fine:.3e}")),
        ))
    })
}

fn straightening_isotopy() -> Check {
    let name = "straightening isotopy";
    try_check(8, name, || {
        let p = gentle_bend_params()?;
        let bent = build_bent_curve(&p)?;
        let iso = Isotopy::new(&bent.curve, &p)?;
        let mut worst = (0.0_f64, 0.0);
        for t in linspace(0.0, 1.0, 21) {
            let (c, _) = iso.curve(t)?;
            let r = bend_ratio(&c, &p, &c.knots(64));
            if r > worst.0 {
                worst = (r, t);
            }
        }
        let (start, _) = iso.curve(0.0)?;
        let d0 = hausdorff(&bent.curve.sample(&bent.curve.knots(64)), &start.sample(&start.knots(64)));
        let end = iso.straighten(1.0)?;
        let line = curve_from_theta(&vec![0.0; 257], p.rbar / 256.0, p.rbar)?;
        let d1 = hausdorff(&end.sample_uniform(end.length(), 257), &line);
        let ends = d0.max(d1);
        let pass = worst.0 <= 1.0 && ends <= ISOTOPY_ENDPOINT_TOL;
        Ok(Check::new(
            8,
            name,
            worst.0,
            1.0,
            pass,
            format!("21 samples, worst ratio at t={:.2}; endpoint distances {d0:.1e}, {d1:.1e}", worst.1),
            Some(format!("ratio {:.4} at t={}, endpoints {d0:.3e}/{d1:.3e}", worst.0, worst.1)),
        ))
    })
}

fn disc_pipeline(cfg: &VerifyConfig) -> Check {
    let name = "disc standardization pipeline";
    try_check(9, name, || {
        let opts = DiscOptions { grid_n: cfg.grid_n, cone: ConeOptions { seed: cfg.seed, ..ConeOptions::default() }, ..DiscOptions::default() };
        let mut problems = Vec::new();
        let mut notes = Vec::new();
        let mut worst_final = 0.0_f64;
        for stem in ["psc", "p_curv1", "k_pos_ric3"] {
            let c = fixture_condition(stem)?.with_seed(cfg.seed);
            let inputs = load_fixtures(stem)?;
            if inputs.len() < 5 {
                problems.push(format!("{stem}: only {} valid inputs", inputs.len()));
            }
            if inputs.is_empty() {
                continue;
            }
            let opening = match ConeOpening::compute(&c, FIXTURE_Q, &opts.cone) {
                Ok(o) => o,
                Err(e) => {
                    problems.push(format!("{stem}: {e}"));
                    continue;
                }
            };
            let mut min_margin = f64::INFINITY;
            for (i, g) in inputs.iter().enumerate() {
                let rep = match standardize(g, &c, opening, &opts) {
                    Ok(r) => r,
                    Err(e) => {
                        problems.push(format!("{stem}[{i}]: {e}"));
                        continue;
                    }
                };
                min_margin = min_margin.min(rep.trace.min_margin());
                worst_final = worst_final.max(rep.final_torpedo_defect);
                if let Some(s) = rep.trace.samples.iter().find(|s| !(s.min_margin > 0.0)) {
                    problems.push(format!("{stem}[{i}]: margin {:.3e} at stage {} s={} r={:.3e}", s.min_margin, s.stage, s.s, s.argmin_r));
                }
                if !(rep.final_torpedo_defect <= FINAL_TORPEDO_TOL) {
                    problems.push(format!("{stem}[{i}]: final profile off torpedo by {:.3e}", rep.final_torpedo_defect));
                }
                if !(rep.trace.max_boundary_defect() <= BOUNDARY_TOL) {
                    problems.push(format!("{stem}[{i}]: boundary moved by {:.3e}", rep.trace.max_boundary_defect()));
                }
                for cl in rep.phi_clauses.failures().into_iter().chain(rep.psi_clauses.failures()) {
                    problems.push(format!("{stem}[{i}]: clause {} off by {:.3e}", cl.name, cl.worst));
                }
            }
            notes.push(format!("{stem} min margin {min_margin:.3e}"));
        }
        let pass = problems.is_empty();
        Ok(Check::new(9, name, worst_final, FINAL_TORPEDO_TOL, pass, notes.join(", "), Some(problems.join("; "))))
    })
}

fn oracle_equivalence(cfg: &VerifyConfig) -> Check {
    let name = "oracle equivalence";
    try_check(10, name, || {
        let mut rng = rng_stream(cfg.seed, 10);
        let mut kpos = 0.0_f64;
        let mut pcurv = 0.0_f64;
        for n in [5, 6] {
            let r = CurvOp::random_bianchi(n, &mut rng);
            let ric: DMatrix<f64> = crate::curvature_algebra::ricci_matrix(&r);
            let k = 3;
            let c = condition(ConditionKind::KPosRic { k }, n, cfg.seed)?;
            let m = c.membership(&r)?.margin;
            let obj = Objective::new(&r, 0.0, ric.clone(), 0.0, k);
            let b = brute_force(&obj, ORACLE_SAMPLES, cfg.seed).value;
            kpos = kpos.max((m - b).abs());
            let p = 2;
            let c = condition(ConditionKind::PCurv { p }, n, cfg.seed)?;
            let m = c.membership(&r)?.margin;
            let obj = Objective::p_curvature_direct(&r, &ric, p);
            let b = brute_force(&obj, ORACLE_SAMPLES, cfg.seed).value;
            pcurv = pcurv.max((m - b).abs());
        }
        let pass = kpos <= KPOSRIC_ORACLE_TOL && pcurv <= PCURV_ORACLE_TOL;
        Ok(Check::new(
            10,
            name,
            kpos,
            KPOSRIC_ORACLE_TOL,
            pass,
            format!("k_pos_ric(3) gap {kpos:.3e}; p_curv(2) gap {pcurv:.3e} (threshold {PCURV_ORACLE_TOL:.0e}); n in {{5, 6}}"),
            Some(format!("k_pos_ric gap {kpos:.3e}, p_curv gap {pcurv:.3e}")),
        ))
    })
}
