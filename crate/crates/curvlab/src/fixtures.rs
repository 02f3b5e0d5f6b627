//! Seeded random disc metrics for the standardization pipeline.
//!
//! Inputs are perturbed torpedoes `dt² + β²g` on the unit disc: an odd
//! cubic term near the centre and small bumps in the outer annulus, so the
//! pipeline has something to flatten and something to leave alone.

use std::path::{Path, PathBuf};

use rand::Rng;
use serde_json::Value;

use crate::conditions::Condition;
use crate::disc_deformations::{RotMetric, WarpedMargin};
use crate::error::{CurvError, Result};
use crate::numeric::{linspace, logspace, rng_stream};
use crate::tolerance;
use crate::warped_metrics::{Bump, WarpProfile};

pub const FIXTURE_SEED: u64 = 0xd15c_2024;
pub const FIXTURES_PER_CONDITION: usize = 5;
const MAX_ATTEMPTS: usize = 400;

/// The conditions shipped with fixtures, as `(file stem, builtin name, params)`.
pub const FIXTURE_CONDITIONS: [(&str, &str, Option<(&str, f64)>); 3] =
    [("psc", "psc", None), ("p_curv1", "p_curv", Some(("p", 1.0))), ("k_pos_ric3", "k_pos_ric", Some(("k", 3.0)))];

pub const FIXTURE_N: usize = 7;
pub const FIXTURE_Q: usize = 4;

pub fn fixture_condition(stem: &str) -> Result<Condition> {
    let (_, name, param) = FIXTURE_CONDITIONS
        .iter()
        .find(|(s, _, _)| *s == stem)
        .ok_or_else(|| CurvError::Parse(format!("no fixture set named {stem:?}")))?;
    let params = param.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    Condition::builtin(name, FIXTURE_N, &params)
}

/// One random candidate in the fixture dimensions.
pub fn random_disc_metric(seed: u64, stream: u64) -> Result<RotMetric> {
    random_disc_metric_in(FIXTURE_Q, FIXTURE_N, seed, stream)
}

/// One random candidate; every draw comes from `stream`, so candidates do
/// not depend on each other.
pub fn random_disc_metric_in(q: usize, n: usize, seed: u64, stream: u64) -> Result<RotMetric> {
    let mut rng = rng_stream(seed, stream);
    let mu = rng.random_range(0.40..0.55);
    let eps = rng.random_range(-0.05..0.05);
    let odd_width = mu * rng.random_range(0.3..0.8);
    let bumps = (0..rng.random_range(1..=2usize))
        .map(|_| Bump {
            center: rng.random_range(0.7..0.95),
            half_width: rng.random_range(0.06..0.1),
            amp: rng.random_range(1e-4..3e-4),
        })
        .collect();
    let beta = WarpProfile::torpedo_perturbed(mu, 1.0, eps / (mu * mu), odd_width, bumps);
    RotMetric::arc_length(q, n, beta)
}

fn check_radii() -> Vec<f64> {
    let mut r = linspace(0.0, 1.0, 2049);
    r.extend(logspace(1e-6, 1.0, 200));
    r
}

/// Minimum margin of an arc-length disc metric over a fixed radius grid.
pub fn input_margin(g: &RotMetric, c: &Condition) -> Result<f64> {
    let eval = WarpedMargin::new(c, g.q)?;
    Ok(eval.min_margin(&|r| g.beta.jet(r), &check_radii())?.0)
}

/// The first `count` candidates that lie inside `c`. Fewer are returned
/// when the attempt budget runs out.
pub fn generate_disc_fixtures(c: &Condition, count: usize, seed: u64) -> Result<Vec<RotMetric>> {
    generate_disc_family(c, FIXTURE_Q, count, seed)
}

/// As [`generate_disc_fixtures`] for fiber dimension `q` and `n = c.n`.
pub fn generate_disc_family(c: &Condition, q: usize, count: usize, seed: u64) -> Result<Vec<RotMetric>> {
    let mut out = Vec::new();
    for stream in 0..MAX_ATTEMPTS as u64 {
        if out.len() == count {
            break;
        }
        let g = random_disc_metric_in(q, c.n, seed, stream)?;
        if input_margin(&g, c)? > tolerance::EPS_STRICT {
            out.push(g);
        }
    }
    Ok(out)
}

pub fn fixtures_to_json(list: &[RotMetric]) -> Result<Value> {
    Ok(Value::Array(list.iter().map(RotMetric::to_json).collect::<Result<_>>()?))
}

pub fn fixtures_from_json(v: &Value) -> Result<Vec<RotMetric>> {
    v.as_array()
        .ok_or_else(|| CurvError::Parse("fixture file must hold an array".into()))?
        .iter()
        .map(RotMetric::from_json)
        .collect()
}

pub fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join("disc")
}

pub fn load_fixtures(stem: &str) -> Result<Vec<RotMetric>> {
    let path = fixture_dir().join(format!("{stem}.json"));
    let text = std::fs::read_to_string(&path).map_err(|e| CurvError::Parse(format!("{}: {e}", path.display())))?;
    let v: Value = serde_json::from_str(&text).map_err(|e| CurvError::Parse(format!("{}: {e}", path.display())))?;
    fixtures_from_json(&v)
}

/// Regenerates every fixture file.
pub fn write_fixtures(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| CurvError::Parse(e.to_string()))?;
    for (stem, _, _) in FIXTURE_CONDITIONS {
        let c = fixture_condition(stem)?;
        let list = generate_disc_fixtures(&c, FIXTURES_PER_CONDITION, FIXTURE_SEED)?;
        let text = serde_json::to_string_pretty(&fixtures_to_json(&list)?).expect("json values serialize");
        std::fs::write(dir.join(format!("{stem}.json")), text + "\n").map_err(|e| CurvError::Parse(e.to_string()))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn candidates_are_regular_profiles() {
        for stream in 0..5 {
            let g = random_disc_metric(FIXTURE_SEED, stream).unwrap();
            g.beta.check_regularity(2048).unwrap();
        }
    }

    #[test]
    fn candidates_are_reproducible() {
        let a = random_disc_metric(7, 3).unwrap().to_json().unwrap();
        let b = random_disc_metric(7, 3).unwrap().to_json().unwrap();
        assert_eq!(a, b);
    }
}
