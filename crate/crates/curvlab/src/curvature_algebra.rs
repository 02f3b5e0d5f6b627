//! Algebraic curvature operators on `Λ²ℝⁿ`.
//!
//! Coordinates: the bivectors `e_i ∧ e_j` (`i < j`, lexicographic) form an
//! orthonormal basis, so `⟨x∧y, z∧w⟩ = ⟨x,z⟩⟨y,w⟩ − ⟨x,w⟩⟨y,z⟩` and the
//! identity matrix is the unit round sphere (`sec ≡ 1`). A curvature operator
//! acts on vectors through `η(x∧y)(z) = −⟨x,z⟩y + ⟨y,z⟩x`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{CurvError, Result};
use crate::tolerance;

/// Lexicographic basis of `Λ²ℝⁿ`.
#[derive(Debug, Clone, PartialEq)]
pub struct BivectorBasis {
    pub n: usize,
    pub pairs: Vec<(usize, usize)>,
    index: Vec<usize>,
}

impl BivectorBasis {
    pub fn m(&self) -> usize {
        self.pairs.len()
    }

    /// Row of `e_i ∧ e_j` (`i < j`).
    pub fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < j && j < self.n);
        self.index[i * self.n + j]
    }

    /// Row and sign with `e_i ∧ e_j = sign · e_{min} ∧ e_{max}`, `i ≠ j`.
    pub fn signed_index(&self, i: usize, j: usize) -> (usize, f64) {
        if i < j {
            (self.index(i, j), 1.0)
        } else {
            (self.index(j, i), -1.0)
        }
    }

    /// Coordinates of `x ∧ y`.
    pub fn wedge(&self, x: &[f64], y: &[f64]) -> DVector<f64> {
        DVector::from_iterator(
            self.m(),
            self.pairs.iter().map(|&(i, j)| x[i] * y[j] - x[j] * y[i]),
        )
    }
}

pub fn wedge_basis(n: usize) -> Result<BivectorBasis> {
    if n < 2 {
        return Err(CurvError::Domain(format!("wedge basis needs n >= 2, got {n}")));
    }
    let mut pairs = Vec::with_capacity(n * (n - 1) / 2);
    let mut index = vec![usize::MAX; n * n];
    for i in 0..n {
        for j in i + 1..n {
            index[i * n + j] = pairs.len();
            pairs.push((i, j));
        }
    }
    Ok(BivectorBasis { n, pairs, index })
}

fn basis(n: usize) -> BivectorBasis {
    wedge_basis(n).expect("n >= 2 checked by caller")
}

/// Self-adjoint operator on `Λ²ℝⁿ` in lexicographic wedge coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvOp {
    pub n: usize,
    pub mat: DMatrix<f64>,
    /// `max |M − Mᵀ| / max(1, max |M|)` of the matrix this was built from.
    pub asymmetry: f64,
}

impl CurvOp {
    /// Symmetrizes `mat`; rejects relative asymmetry above
    /// [`tolerance::SYMMETRY_REJECT`].
    pub fn new(n: usize, mat: DMatrix<f64>) -> Result<Self> {
        if n < 2 {
            return Err(CurvError::Domain(format!("curvature operator needs n >= 2, got {n}")));
        }
        let m = n * (n - 1) / 2;
        if mat.nrows() != m || mat.ncols() != m {
            return Err(CurvError::Dimension { expected: m, got: mat.nrows().max(mat.ncols()) });
        }
        if mat.iter().any(|v| !v.is_finite()) {
            return Err(CurvError::Domain("non-finite matrix entry".into()));
        }
        let scale = mat.amax().max(1.0);
        let asymmetry = (&mat - mat.transpose()).amax() / scale;
        if asymmetry > tolerance::SYMMETRY_REJECT {
            return Err(CurvError::Asymmetric(asymmetry));
        }
        let mat = (&mat + mat.transpose()) * 0.5;
        Ok(CurvOp { n, mat, asymmetry })
    }

    fn from_sym(n: usize, mat: DMatrix<f64>) -> Self {
        CurvOp { n, mat, asymmetry: 0.0 }
    }

    pub fn zero(n: usize) -> Self {
        let m = n * (n - 1) / 2;
        Self::from_sym(n, DMatrix::zeros(m, m))
    }

    pub fn identity(n: usize) -> Self {
        let m = n * (n - 1) / 2;
        Self::from_sym(n, DMatrix::identity(m, m))
    }

    pub fn m(&self) -> usize {
        self.mat.nrows()
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self::from_sym(self.n, &self.mat * a)
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &CurvOp, b: f64) -> Self {
        assert_eq!(self.n, other.n);
        Self::from_sym(self.n, &self.mat * a + &other.mat * b)
    }

    pub fn frobenius(&self) -> f64 {
        self.mat.norm()
    }

    pub fn dist(&self, other: &CurvOp) -> f64 {
        (&self.mat - &other.mat).norm()
    }

    pub fn trace(&self) -> f64 {
        self.mat.trace()
    }

    /// Random symmetric operator with standard normal entries (not Bianchi).
    pub fn random_symmetric<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let m = n * (n - 1) / 2;
        let g = DMatrix::from_fn(m, m, |_, _| rng.sample::<f64, _>(StandardNormal));
        Self::from_sym(n, (&g + g.transpose()) * 0.5)
    }

    /// Random element of `C_B(ℝⁿ)` with unit Frobenius norm.
    pub fn random_bianchi<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let p = bianchi_project(&Self::random_symmetric(n, rng));
        let norm = p.frobenius();
        p.scaled(1.0 / norm)
    }
}

/// Orthonormal `k`-frame in `ℝⁿ`, stored as the columns of an `n × k` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub n: usize,
    pub vecs: DMatrix<f64>,
}

impl Frame {
    pub fn new(vecs: DMatrix<f64>) -> Result<Self> {
        let k = vecs.ncols();
        let defect = (vecs.transpose() * &vecs - DMatrix::identity(k, k)).amax();
        if !(defect <= tolerance::FRAME_ORTHO) {
            return Err(CurvError::NotOrthonormal(defect));
        }
        Ok(Frame { n: vecs.nrows(), vecs })
    }

    pub fn from_columns(n: usize, cols: &[Vec<f64>]) -> Result<Self> {
        for c in cols {
            if c.len() != n {
                return Err(CurvError::Dimension { expected: n, got: c.len() });
            }
        }
        Self::new(DMatrix::from_fn(n, cols.len(), |i, j| cols[j][i]))
    }

    /// Standard basis vectors `e_i` for the listed indices.
    pub fn coordinate(n: usize, idx: &[usize]) -> Self {
        let mut v = DMatrix::zeros(n, idx.len());
        for (c, &i) in idx.iter().enumerate() {
            v[(i, c)] = 1.0;
        }
        Frame { n, vecs: v }
    }

    /// Haar-distributed frame: QR of a Gaussian matrix with sign fix.
    pub fn random<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Self {
        let g = DMatrix::from_fn(n, k, |_, _| rng.sample::<f64, _>(StandardNormal));
        Frame { n, vecs: orthonormalize(g) }
    }

    pub fn k(&self) -> usize {
        self.vecs.ncols()
    }

    pub fn col(&self, i: usize) -> Vec<f64> {
        self.vecs.column(i).iter().copied().collect()
    }

    /// Orthonormal basis of the orthogonal complement of the span.
    pub fn complement(&self) -> Frame {
        let n = self.n;
        let k = self.k();
        if k == 0 {
            return Frame::coordinate(n, &(0..n).collect::<Vec<_>>());
        }
        let proj = DMatrix::identity(n, n) - &self.vecs * self.vecs.transpose();
        let eig = SymmetricEigen::new(proj);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let cols: Vec<usize> = order.into_iter().take(n - k).collect();
        let q = DMatrix::from_fn(n, n - k, |i, j| eig.eigenvectors[(i, cols[j])]);
        Frame { n, vecs: orthonormalize(q) }
    }

    /// `A · E`.
    pub fn transformed(&self, a: &DMatrix<f64>) -> Frame {
        Frame { n: self.n, vecs: a * &self.vecs }
    }
}

/// Thin QR with `diag(R) > 0`; columns are assumed independent.
pub fn orthonormalize(g: DMatrix<f64>) -> DMatrix<f64> {
    let k = g.ncols();
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..k {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Random element of `O(n)`.
pub fn random_orthogonal<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<f64> {
    Frame::random(n, n, rng).vecs
}

/// Coordinate split `ℝⁿ = ℝ^flat ⊕ ℝ^radial ⊕ ℝ^sphere`, in that order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockLayout {
    pub n: usize,
    pub flat: usize,
    pub radial: usize,
    pub sphere: usize,
}

impl BlockLayout {
    pub fn new(flat: usize, radial: usize, sphere: usize) -> Result<Self> {
        if radial > 1 {
            return Err(CurvError::Domain(format!("radial block has size 0 or 1, got {radial}")));
        }
        Ok(BlockLayout { n: flat + radial + sphere, flat, radial, sphere })
    }

    /// `ℝ^{n−q} × (0,δ) × S^{q−1}`: the layout of a warped disc factor.
    pub fn warped(n: usize, q: usize) -> Result<Self> {
        if q < 2 || q > n {
            return Err(CurvError::Domain(format!("warped layout needs 2 <= q <= n, got q={q}, n={n}")));
        }
        Self::new(n - q, 1, q - 1)
    }

    pub fn radial_index(&self) -> Option<usize> {
        (self.radial == 1).then_some(self.flat)
    }

    pub fn sphere_range(&self) -> std::ops::Range<usize> {
        self.flat + self.radial..self.n
    }
}

/// `R(x, y)z = η(R(x∧y))(z)`.
pub fn apply_endo(r: &CurvOp, x: &[f64], y: &[f64], z: &[f64]) -> Result<Vec<f64>> {
    let n = r.n;
    for v in [x, y, z] {
        if v.len() != n {
            return Err(CurvError::Dimension { expected: n, got: v.len() });
        }
    }
    let b = basis(n);
    let c = &r.mat * b.wedge(x, y);
    let mut out = vec![0.0; n];
    for (k, &(i, j)) in b.pairs.iter().enumerate() {
        // η(e_i∧e_j)(z) = z_j e_i − z_i e_j
        out[i] += c[k] * z[j];
        out[j] -= c[k] * z[i];
    }
    Ok(out)
}

fn check_frame(r: &CurvOp, e: &Frame, k: Option<usize>) -> Result<()> {
    if e.n != r.n {
        return Err(CurvError::Dimension { expected: r.n, got: e.n });
    }
    if let Some(k) = k {
        if e.k() != k {
            return Err(CurvError::Dimension { expected: k, got: e.k() });
        }
    }
    let kk = e.k();
    let defect = (e.vecs.transpose() * &e.vecs - DMatrix::identity(kk, kk)).amax();
    if !(defect <= tolerance::FRAME_ORTHO) {
        return Err(CurvError::NotOrthonormal(defect));
    }
    Ok(())
}

/// `⟨R(x∧y), x∧y⟩` for unchecked vectors.
pub fn sec_raw(r: &CurvOp, x: &[f64], y: &[f64]) -> f64 {
    let w = basis(r.n).wedge(x, y);
    w.dot(&(&r.mat * &w))
}

/// Sectional curvature of the plane spanned by an orthonormal 2-frame.
pub fn sec(r: &CurvOp, e: &Frame) -> Result<f64> {
    check_frame(r, e, Some(2))?;
    Ok(sec_raw(r, &e.col(0), &e.col(1)))
}

/// `Ric_ab = Σ_i ⟨R(e_i∧e_a), e_i∧e_b⟩`.
pub fn ricci_matrix(r: &CurvOp) -> DMatrix<f64> {
    let n = r.n;
    let b = basis(n);
    let mut ric = DMatrix::zeros(n, n);
    for a in 0..n {
        for c in a..n {
            let mut s = 0.0;
            for i in 0..n {
                if i == a || i == c {
                    continue;
                }
                let (ia, sa) = b.signed_index(i, a);
                let (ic, sc) = b.signed_index(i, c);
                s += sa * sc * r.mat[(ia, ic)];
            }
            ric[(a, c)] = s;
            ric[(c, a)] = s;
        }
    }
    ric
}

/// Ricci eigenvalues in ascending order.
pub fn ricci_eigenvalues(r: &CurvOp) -> Vec<f64> {
    sorted_eigenvalues(ricci_matrix(r))
}

pub fn sorted_eigenvalues(m: DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

pub fn ric(r: &CurvOp, z: &[f64]) -> Result<f64> {
    if z.len() != r.n {
        return Err(CurvError::Dimension { expected: r.n, got: z.len() });
    }
    let norm = z.iter().map(|v| v * v).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > tolerance::FRAME_ORTHO {
        return Err(CurvError::NotOrthonormal((norm - 1.0).abs()));
    }
    let z = DVector::from_column_slice(z);
    Ok(z.dot(&(ricci_matrix(r) * &z)))
}

pub fn scal(r: &CurvOp) -> f64 {
    2.0 * r.mat.trace()
}

/// `s_p(P) = Σ_{i≠j} sec(E_i, E_j)` over an orthonormal basis of `P⊥`.
///
/// Uses `s_p(P) = scal − 2 tr(Pᵀ Ric P) + 2 Σ_{i<j} sec(p_i, p_j)`, which
/// only touches the `p` given vectors.
pub fn p_curvature(r: &CurvOp, p: &Frame) -> Result<f64> {
    check_frame(r, p, None)?;
    if p.k() + 2 > r.n {
        return Err(CurvError::Domain(format!(
            "p-curvature needs 0 <= p <= n-2, got p={}, n={}",
            p.k(),
            r.n
        )));
    }
    Ok(p_curvature_raw(r, &ricci_matrix(r), &p.vecs))
}

pub(crate) fn p_curvature_raw(r: &CurvOp, ric: &DMatrix<f64>, p: &DMatrix<f64>) -> f64 {
    let k = p.ncols();
    let mut v = scal(r) - 2.0 * (p.transpose() * ric * p).trace();
    let b = basis(r.n);
    let cols: Vec<Vec<f64>> = (0..k).map(|i| p.column(i).iter().copied().collect()).collect();
    for i in 0..k {
        for j in i + 1..k {
            let w = b.wedge(&cols[i], &cols[j]);
            v += 2.0 * w.dot(&(&r.mat * &w));
        }
    }
    v
}

/// `A ∧ A` as an `m × m` matrix: column `(k,l)` holds `A e_k ∧ A e_l`.
pub fn wedge_square(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let b = basis(n);
    let m = b.m();
    let mut out = DMatrix::zeros(m, m);
    for (c, &(k, l)) in b.pairs.iter().enumerate() {
        let x: Vec<f64> = a.column(k).iter().copied().collect();
        let y: Vec<f64> = a.column(l).iter().copied().collect();
        out.set_column(c, &b.wedge(&x, &y));
    }
    out
}

/// `(A∧A)⁻¹ ∘ R ∘ (A∧A)`, so that `sec(act(A,R), E) = sec(R, A·E)`.
pub fn act(a: &DMatrix<f64>, r: &CurvOp) -> Result<CurvOp> {
    let n = r.n;
    if a.nrows() != n || a.ncols() != n {
        return Err(CurvError::Dimension { expected: n, got: a.nrows() });
    }
    let defect = (a.transpose() * a - DMatrix::identity(n, n)).amax();
    if !(defect <= tolerance::GROUP_ORTHO) {
        return Err(CurvError::NotOrthogonal(defect));
    }
    let w = wedge_square(a);
    let m = w.transpose() * &r.mat * &w;
    Ok(CurvOp::from_sym(n, (&m + m.transpose()) * 0.5))
}

/// Largest Euclidean norm of the cyclic sum `R(e_i,e_j)e_k + R(e_j,e_k)e_i +
/// R(e_k,e_i)e_j` over basis triples.
pub fn bianchi_defect(r: &CurvOp) -> f64 {
    let n = r.n;
    let e = |i: usize| {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        v
    };
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let (ei, ej, ek) = (e(i), e(j), e(k));
                let a = apply_endo(r, &ei, &ej, &ek).expect("dimensions match");
                let b = apply_endo(r, &ej, &ek, &ei).expect("dimensions match");
                let c = apply_endo(r, &ek, &ei, &ej).expect("dimensions match");
                let norm = (0..n).map(|l| (a[l] + b[l] + c[l]).powi(2)).sum::<f64>().sqrt();
                worst = worst.max(norm);
            }
        }
    }
    worst
}

/// Orthogonal projection of a symmetric operator onto `C_B(ℝⁿ)`: subtract
/// the totally antisymmetric part `b(R)_{ijkl} = (R_{ijkl} + R_{jkil} +
/// R_{kijl}) / 3`.
pub fn bianchi_project(r: &CurvOp) -> CurvOp {
    let n = r.n;
    let b = basis(n);
    let t = |i: usize, j: usize, k: usize, l: usize| -> f64 {
        if i == j || k == l {
            return 0.0;
        }
        let (a, sa) = b.signed_index(i, j);
        let (c, sc) = b.signed_index(k, l);
        sa * sc * r.mat[(a, c)]
    };
    let m = b.m();
    let mut out = r.mat.clone();
    for (a, &(i, j)) in b.pairs.iter().enumerate() {
        for (c, &(k, l)) in b.pairs.iter().enumerate().skip(a) {
            let cyc = (t(i, j, k, l) + t(j, k, i, l) + t(k, i, j, l)) / 3.0;
            out[(a, c)] -= cyc;
            if a != c {
                out[(c, a)] -= cyc;
            }
        }
    }
    debug_assert_eq!(out.nrows(), m);
    CurvOp::from_sym(n, out)
}

/// `R_{ℝ^{n−q} × S^q}`: projection onto `Λ²` of the last `q` coordinates.
pub fn model_operator(n: usize, q: usize) -> Result<CurvOp> {
    if n < 2 || q > n {
        return Err(CurvError::Domain(format!("model operator needs 0 <= q <= n, n >= 2; got n={n}, q={q}")));
    }
    let b = basis(n);
    let mut op = CurvOp::zero(n);
    for (k, &(i, _)) in b.pairs.iter().enumerate() {
        if i >= n - q {
            op.mat[(k, k)] = 1.0;
        }
    }
    Ok(op)
}

/// Projection onto `span{e_r ∧ e_j : j in the sphere block}`.
pub fn l_operator(layout: &BlockLayout) -> Result<CurvOp> {
    let rad = layout
        .radial_index()
        .ok_or_else(|| CurvError::Domain("L operator needs a radial direction".into()))?;
    if layout.sphere == 0 {
        return Err(CurvError::Domain("L operator needs a sphere block".into()));
    }
    let b = basis(layout.n);
    let mut op = CurvOp::zero(layout.n);
    for j in layout.sphere_range() {
        let k = b.index(rad, j);
        op.mat[(k, k)] = 1.0;
    }
    Ok(op)
}

#[derive(Debug, Serialize, Deserialize)]
struct CurvOpDoc {
    n: usize,
    basis: String,
    matrix: Vec<Vec<f64>>,
}

impl CurvOp {
    pub fn to_json(&self) -> serde_json::Value {
        let m = self.m();
        let matrix = (0..m).map(|i| (0..m).map(|j| self.mat[(i, j)]).collect()).collect();
        serde_json::to_value(CurvOpDoc { n: self.n, basis: "lex".into(), matrix }).expect("plain data")
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        let doc: CurvOpDoc = serde_json::from_value(v.clone()).map_err(|e| CurvError::Parse(e.to_string()))?;
        if doc.basis != "lex" {
            return Err(CurvError::Parse(format!("unsupported basis {:?}", doc.basis)));
        }
        let m = doc.matrix.len();
        if doc.matrix.iter().any(|row| row.len() != m) {
            return Err(CurvError::Parse("matrix is not square".into()));
        }
        let mat = DMatrix::from_fn(m, m, |i, j| doc.matrix[i][j]);
        CurvOp::new(doc.n, mat)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct FrameDoc {
    n: usize,
    vectors: Vec<Vec<f64>>,
}

impl Frame {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(FrameDoc { n: self.n, vectors: (0..self.k()).map(|i| self.col(i)).collect() })
            .expect("plain data")
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        let doc: FrameDoc = serde_json::from_value(v.clone()).map_err(|e| CurvError::Parse(e.to_string()))?;
        Frame::from_columns(doc.n, &doc.vectors)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::rng_stream;

    fn e(n: usize, i: usize) -> Vec<f64> {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        v
    }

    #[test]
    fn basis_sizes() {
        assert_eq!(wedge_basis(2).unwrap().m(), 1);
        assert_eq!(wedge_basis(4).unwrap().m(), 6);
        assert_eq!(wedge_basis(10).unwrap().m(), 45);
        assert!(wedge_basis(1).is_err());
        let b = wedge_basis(5).unwrap();
        assert!(b.pairs.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn endo_matches_hand_values() {
        let id = CurvOp::identity(4);
        assert_eq!(apply_endo(&id, &e(4, 0), &e(4, 1), &e(4, 1)).unwrap(), e(4, 0));
        let zero = CurvOp::zero(4);
        assert!(apply_endo(&zero, &e(4, 0), &e(4, 2), &e(4, 3)).unwrap().iter().all(|&v| v == 0.0));

        // R(e1∧e2) = e3∧e4
        let b = wedge_basis(4).unwrap();
        let mut m = DMatrix::zeros(6, 6);
        m[(b.index(2, 3), b.index(0, 1))] = 1.0;
        m[(b.index(0, 1), b.index(2, 3))] = 1.0;
        let r = CurvOp::new(4, m).unwrap();
        let out = apply_endo(&r, &e(4, 0), &e(4, 1), &e(4, 2)).unwrap();
        assert_eq!(out, vec![0.0, 0.0, 0.0, -1.0]);
        assert!((bianchi_defect(&r) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn model_operator_sections() {
        let r = model_operator(5, 3).unwrap();
        let inside = Frame::coordinate(5, &[3, 4]);
        let mixed = Frame::coordinate(5, &[0, 3]);
        assert_eq!(sec(&r, &inside).unwrap(), 1.0);
        assert_eq!(sec(&r, &mixed).unwrap(), 0.0);
        let ev = ricci_eigenvalues(&r);
        let want = [0.0, 0.0, 2.0, 2.0, 2.0];
        for (a, b) in ev.iter().zip(want) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(scal(&r), 6.0);
        assert_eq!(model_operator(5, 5).unwrap(), CurvOp::identity(5));
        assert_eq!(model_operator(5, 1).unwrap(), CurvOp::zero(5));
    }

    #[test]
    fn p_curvature_examples() {
        let id = CurvOp::identity(5);
        let p0 = Frame::coordinate(5, &[]);
        assert!((p_curvature(&id, &p0).unwrap() - 20.0).abs() < 1e-12);
        let mut rng = rng_stream(7, 0);
        for _ in 0..10 {
            let p = Frame::random(5, 1, &mut rng);
            assert!((p_curvature(&id, &p).unwrap() - 12.0).abs() < 1e-10);
        }
        let r = model_operator(7, 4).unwrap();
        let p = Frame::coordinate(7, &[5]);
        assert!((p_curvature(&r, &p).unwrap() - 6.0).abs() < 1e-12);
        assert!(p_curvature(&r, &Frame::random(7, 6, &mut rng)).is_err());
    }

    #[test]
    fn sec_is_basis_independent_within_plane() {
        let mut rng = rng_stream(3, 1);
        let r = CurvOp::random_bianchi(6, &mut rng);
        let e = Frame::random(6, 2, &mut rng);
        let base = sec(&r, &e).unwrap();
        for k in 0..8 {
            let a = 0.37 * k as f64;
            let (c, s) = (a.cos(), a.sin());
            let rot = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
            let e2 = Frame::new(&e.vecs * rot).unwrap();
            assert!((sec(&r, &e2).unwrap() - base).abs() < 1e-12);
        }
    }

    #[test]
    fn permutation_moves_model_block() {
        // swap coordinates 0 and 4: the sphere block {2,3,4} becomes {0,2,3}
        let mut a = DMatrix::identity(5, 5);
        a.swap_columns(0, 4);
        let r = act(&a, &model_operator(5, 3).unwrap()).unwrap();
        let b = wedge_basis(5).unwrap();
        for (k, &(i, j)) in b.pairs.iter().enumerate() {
            let inside = [0, 2, 3].contains(&i) && [0, 2, 3].contains(&j);
            assert_eq!(r.mat[(k, k)], if inside { 1.0 } else { 0.0 });
        }
        assert!(act(&(a * 1.01), &CurvOp::identity(5)).is_err());
    }

    #[test]
    fn remark_decomposition_and_l_rank() {
        for q in 3..=5 {
            let lay = BlockLayout::warped(6, q).unwrap();
            let l = l_operator(&lay).unwrap();
            let lhs = model_operator(6, q).unwrap();
            let rhs = model_operator(6, q - 1).unwrap().combine(1.0, &l, 1.0);
            assert!(lhs.dist(&rhs) < 1e-14);
            assert!((&l.mat * &l.mat - &l.mat).amax() < 1e-15);
        }
        let l = l_operator(&BlockLayout::warped(3, 3).unwrap()).unwrap();
        assert_eq!(l.trace(), 2.0);
        assert!(l_operator(&BlockLayout::new(3, 0, 2).unwrap()).is_err());
    }

    #[test]
    fn projection_lands_in_bianchi_kernel() {
        let mut rng = rng_stream(11, 2);
        for n in [3, 4, 5, 7] {
            let r = CurvOp::random_symmetric(n, &mut rng);
            let p = bianchi_project(&r);
            assert!(bianchi_defect(&p) < 1e-12, "n={n}");
            assert!(bianchi_project(&p).dist(&p) < 1e-12);
        }
        // n = 3: Λ⁴ = 0 so every symmetric operator is Bianchi
        let r = CurvOp::random_symmetric(3, &mut rng);
        assert!(bianchi_defect(&r) < 1e-12);
    }

    #[test]
    fn asymmetric_input_rejected() {
        let mut m = DMatrix::identity(3, 3);
        m[(0, 1)] = 1e-6;
        assert!(matches!(CurvOp::new(3, m), Err(CurvError::Asymmetric(_))));
        let mut m = DMatrix::identity(3, 3);
        m[(0, 1)] = 1e-12;
        let r = CurvOp::new(3, m).unwrap();
        assert_eq!(r.mat, r.mat.transpose());
    }

    #[test]
    fn json_roundtrip() {
        let r = model_operator(4, 3).unwrap();
        let back = CurvOp::from_json(&r.to_json()).unwrap();
        assert_eq!(back, r);
        let f = Frame::coordinate(4, &[1, 2]);
        assert_eq!(Frame::from_json(&f.to_json()).unwrap(), f);
        assert!(CurvOp::from_json(&serde_json::json!({"n": 4, "basis": "lex"})).is_err());
    }
}
