//! Minimization of quadratic-plus-sectional functionals over orthonormal
//! frames.
//!
//! The objective is
//! `F(X) = c0 + Σ_i x_iᵀ A x_i + c2 · Σ_{i<j} sec_R(x_i, x_j)`
//! for an `n × k` frame `X`, which covers both `min sec` (`k = 2`) and the
//! `p`-curvature `s_p`. `F` only depends on the span when `A` is symmetric.
//!
//! [`minimize`] runs a Cayley-retraction descent (Wen–Yin) from random and
//! caller-supplied starts. [`brute_force`] is an independent oracle: dense
//! random frames followed by derivative-free refinement.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::curvature_algebra::{orthonormalize, wedge_basis, BivectorBasis, CurvOp, Frame};
use crate::error::{CurvError, Result};
use crate::numeric::rng_stream;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget {
    pub restarts: usize,
    pub iterations: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { restarts: 64, iterations: 200 }
    }
}

pub struct Objective<'a> {
    r: &'a CurvOp,
    basis: BivectorBasis,
    pub c0: f64,
    pub a: DMatrix<f64>,
    pub c2: f64,
    pub k: usize,
}

#[derive(Debug, Clone)]
pub struct MinResult {
    pub value: f64,
    pub frame: Frame,
    pub evaluations: usize,
}

impl<'a> Objective<'a> {
    pub fn new(r: &'a CurvOp, c0: f64, a: DMatrix<f64>, c2: f64, k: usize) -> Self {
        let basis = wedge_basis(r.n).expect("operator has n >= 2");
        Objective { r, basis, c0, a, c2, k }
    }

    /// `min sec` over 2-planes.
    pub fn sectional(r: &'a CurvOp) -> Self {
        Self::new(r, 0.0, DMatrix::zeros(r.n, r.n), 1.0, 2)
    }

    /// `s_p` written over `P` itself: `scal − 2 tr(PᵀRic P) + 2 Σ sec`.
    pub fn p_curvature_direct(r: &'a CurvOp, ric: &DMatrix<f64>, p: usize) -> Self {
        Self::new(r, crate::curvature_algebra::scal(r), ric * -2.0, 2.0, p)
    }

    /// `s_p` written over `P⊥`: `2 Σ_{i<j} sec(q_i, q_j)`.
    pub fn p_curvature_complement(r: &'a CurvOp, p: usize) -> Self {
        Self::new(r, 0.0, DMatrix::zeros(r.n, r.n), 2.0, r.n - p)
    }

    pub fn n(&self) -> usize {
        self.r.n
    }

    fn col(x: &DMatrix<f64>, i: usize) -> Vec<f64> {
        x.column(i).iter().copied().collect()
    }

    pub fn value(&self, x: &DMatrix<f64>) -> f64 {
        let mut v = self.c0 + (x.transpose() * &self.a * x).trace();
        if self.c2 != 0.0 {
            let cols: Vec<Vec<f64>> = (0..self.k).map(|i| Self::col(x, i)).collect();
            for i in 0..self.k {
                for j in i + 1..self.k {
                    let w = self.basis.wedge(&cols[i], &cols[j]);
                    v += self.c2 * w.dot(&(&self.r.mat * &w));
                }
            }
        }
        v
    }

    /// Euclidean gradient; `∇_x sec(x,y) = 2Vy`, `∇_y sec(x,y) = −2Vx`
    /// with `V` the antisymmetric matrix of `R(x∧y)`.
    pub fn value_grad(&self, x: &DMatrix<f64>) -> (f64, DMatrix<f64>) {
        let n = self.n();
        let ax = &self.a * x;
        let mut v = self.c0 + (x.transpose() * &ax).trace();
        let mut g = ax * 2.0;
        if self.c2 != 0.0 {
            let cols: Vec<Vec<f64>> = (0..self.k).map(|i| Self::col(x, i)).collect();
            let mut vm = DMatrix::zeros(n, n);
            for i in 0..self.k {
                for j in i + 1..self.k {
                    let w = self.basis.wedge(&cols[i], &cols[j]);
                    let u = &self.r.mat * &w;
                    v += self.c2 * w.dot(&u);
                    for (idx, &(a, b)) in self.basis.pairs.iter().enumerate() {
                        vm[(a, b)] = u[idx];
                        vm[(b, a)] = -u[idx];
                    }
                    let xi = x.column(i);
                    let xj = x.column(j);
                    let gi = &vm * xj * (2.0 * self.c2);
                    let gj = &vm * xi * (-2.0 * self.c2);
                    for row in 0..n {
                        g[(row, i)] += gi[row];
                        g[(row, j)] += gj[row];
                    }
                }
            }
        }
        (v, g)
    }
}

fn cayley(x: &DMatrix<f64>, w: &DMatrix<f64>, tau: f64) -> Option<DMatrix<f64>> {
    let n = x.nrows();
    let id = DMatrix::<f64>::identity(n, n);
    let lhs = &id + w * (0.5 * tau);
    let rhs = (&id - w * (0.5 * tau)) * x;
    lhs.lu().solve(&rhs)
}

/// One descent run from `x0`; returns the final frame and value.
fn descend(obj: &Objective, mut x: DMatrix<f64>, iterations: usize, evals: &mut usize) -> (DMatrix<f64>, f64) {
    let (mut fx, mut g) = obj.value_grad(&x);
    *evals += 1;
    let mut tau = 0.5;
    for _ in 0..iterations {
        let w = &g * x.transpose() - &x * g.transpose();
        let wn2 = w.norm_squared();
        if wn2 < 1e-26 {
            break;
        }
        // dF/dτ at 0 is −½‖W‖²
        let slope = 0.5 * wn2;
        let mut accepted = None;
        let mut t = tau;
        while t > 1e-14 {
            if let Some(y) = cayley(&x, &w, t) {
                let fy = obj.value(&y);
                *evals += 1;
                if fy <= fx - 1e-4 * t * slope {
                    accepted = Some((y, fy));
                    break;
                }
            }
            t *= 0.5;
        }
        match accepted {
            Some((y, _)) => {
                // re-orthonormalize against drift from the linear solve
                x = orthonormalize(y);
                let (f_new, g_new) = obj.value_grad(&x);
                *evals += 1;
                let gain = fx - f_new;
                fx = f_new;
                g = g_new;
                tau = (2.0 * t).min(1e3);
                if gain.abs() < 1e-15 * (1.0 + fx.abs()) {
                    break;
                }
            }
            None => break,
        }
    }
    (x, fx)
}

fn random_frame<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> DMatrix<f64> {
    Frame::random(n, k, rng).vecs
}

/// Best minimum over `budget.restarts` random starts plus `warm` starts.
/// Restart `i` draws from stream `i` of `seed`.
pub fn minimize(obj: &Objective, budget: Budget, seed: u64, warm: &[DMatrix<f64>]) -> Result<MinResult> {
    if budget.restarts == 0 && warm.is_empty() || budget.iterations == 0 {
        return Err(CurvError::Domain("optimizer budget is zero".into()));
    }
    let n = obj.n();
    let k = obj.k;
    if k == 0 {
        let x = DMatrix::zeros(n, 0);
        return Ok(MinResult { value: obj.value(&x), frame: Frame { n, vecs: x }, evaluations: 1 });
    }
    let mut evals = 0;
    let mut best: Option<(DMatrix<f64>, f64)> = None;
    let starts = warm
        .iter()
        .cloned()
        .chain((0..budget.restarts).map(|i| random_frame(n, k, &mut rng_stream(seed, i as u64))));
    for x0 in starts {
        let (x, fx) = descend(obj, x0, budget.iterations, &mut evals);
        if best.as_ref().is_none_or(|(_, b)| fx < *b) {
            best = Some((x, fx));
        }
    }
    let (x, value) = best.expect("at least one start");
    Ok(MinResult { value, frame: Frame { n, vecs: x }, evaluations: evals })
}

/// Oracle: `samples` Haar-random frames, then random-perturbation
/// refinement of the best eight. No gradients are used.
pub fn brute_force(obj: &Objective, samples: usize, seed: u64) -> MinResult {
    let n = obj.n();
    let k = obj.k;
    let mut rng = rng_stream(seed, u64::MAX);
    let mut pool: Vec<(f64, DMatrix<f64>)> = Vec::new();
    for _ in 0..samples.max(1) {
        let x = random_frame(n, k, &mut rng);
        let v = obj.value(&x);
        pool.push((v, x));
        if pool.len() > 64 {
            pool.sort_by(|a, b| a.0.total_cmp(&b.0));
            pool.truncate(8);
        }
    }
    pool.sort_by(|a, b| a.0.total_cmp(&b.0));
    pool.truncate(8);
    let mut evals = samples;
    let mut best: Option<(f64, DMatrix<f64>)> = None;
    for (mut v, mut x) in pool {
        let mut sigma = 0.1;
        let mut fails = 0;
        while sigma > 1e-8 {
            let g = DMatrix::from_fn(n, k, |_, _| rng.sample::<f64, _>(StandardNormal));
            let y = orthonormalize(&x + g * sigma);
            let fy = obj.value(&y);
            evals += 1;
            if fy < v {
                v = fy;
                x = y;
                fails = 0;
            } else {
                fails += 1;
                if fails >= 30 {
                    sigma *= 0.5;
                    fails = 0;
                }
            }
        }
        if best.as_ref().is_none_or(|(b, _)| v < *b) {
            best = Some((v, x));
        }
    }
    let (value, x) = best.expect("non-empty pool");
    MinResult { value, frame: Frame { n, vecs: x }, evaluations: evals }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curvature_algebra::{model_operator, p_curvature, ricci_matrix, sec};

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = rng_stream(5, 0);
        let r = CurvOp::random_bianchi(5, &mut rng);
        let ric = ricci_matrix(&r);
        let obj = Objective::p_curvature_direct(&r, &ric, 3);
        let x = random_frame(5, 3, &mut rng);
        let (_, g) = obj.value_grad(&x);
        let h = 1e-6;
        for i in 0..5 {
            for j in 0..3 {
                let mut xp = x.clone();
                xp[(i, j)] += h;
                let mut xm = x.clone();
                xm[(i, j)] -= h;
                let fd = (obj.value(&xp) - obj.value(&xm)) / (2.0 * h);
                assert!((fd - g[(i, j)]).abs() < 1e-7, "({i},{j}): {fd} vs {}", g[(i, j)]);
            }
        }
    }

    #[test]
    fn objective_agrees_with_p_curvature() {
        let mut rng = rng_stream(6, 0);
        let r = CurvOp::random_bianchi(6, &mut rng);
        let ric = ricci_matrix(&r);
        let p = Frame::random(6, 2, &mut rng);
        let direct = Objective::p_curvature_direct(&r, &ric, 2).value(&p.vecs);
        let comp = Objective::p_curvature_complement(&r, 2).value(&p.complement().vecs);
        let exact = p_curvature(&r, &p).unwrap();
        assert!((direct - exact).abs() < 1e-12);
        assert!((comp - exact).abs() < 1e-10);
    }

    #[test]
    fn min_sec_of_model_is_zero_on_mixed_plane() {
        let r = model_operator(5, 3).unwrap();
        let res = minimize(&Objective::sectional(&r), Budget { restarts: 8, iterations: 200 }, 1, &[]).unwrap();
        assert!(res.value.abs() < 1e-9);
        assert!(sec(&r, &res.frame).unwrap().abs() < 1e-9);
    }

    #[test]
    fn optimizer_not_worse_than_oracle() {
        let mut rng = rng_stream(8, 0);
        let r = CurvOp::random_bianchi(5, &mut rng);
        let obj = Objective::sectional(&r);
        let opt = minimize(&obj, Budget { restarts: 16, iterations: 200 }, 2, &[]).unwrap();
        let brute = brute_force(&obj, 5000, 3);
        assert!(opt.value <= brute.value + 1e-6, "{} vs {}", opt.value, brute.value);
        assert!((opt.value - brute.value).abs() < 1e-3);
    }

    #[test]
    fn zero_budget_rejected() {
        let r = CurvOp::identity(4);
        assert!(minimize(&Objective::sectional(&r), Budget { restarts: 0, iterations: 10 }, 0, &[]).is_err());
    }
}
