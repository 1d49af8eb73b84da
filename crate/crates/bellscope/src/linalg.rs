//! Dense complex matrices and the small-matrix numerics the rest of the
//! crate is built on: Hermitian eigendecomposition (cyclic Jacobi), the
//! operator sign function, Kronecker products, partial traces and partial
//! transposes over a list of site dimensions.
//!
//! Everything here is written for operators of total dimension in the tens,
//! not the thousands; clarity and determinism win over blocking and SIMD.

use num_complex::Complex64;

use crate::error::{BellError, Result};

use std::sync::atomic::{AtomicUsize, Ordering};

/// Default cap on the total operator dimension accepted by constructors.
pub const DEFAULT_MAX_OPERATOR_DIM: usize = 4096;

static MAX_OPERATOR_DIM: AtomicUsize = AtomicUsize::new(DEFAULT_MAX_OPERATOR_DIM);

/// Current cap on total operator dimension.
pub fn max_operator_dim() -> usize {
    MAX_OPERATOR_DIM.load(Ordering::Relaxed)
}

/// Override the operator-dimension guard (the CLI wires this to
/// `BELLSCOPE_MAX_DIM`).
pub fn set_max_operator_dim(dim: usize) {
    MAX_OPERATOR_DIM.store(dim.max(1), Ordering::Relaxed);
}

/// Dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![Complex64::new(0.0, 0.0); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Build from rows of `(re, im)` pairs.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let r = rows.len();
        if r == 0 {
            return Err(BellError::Malformed("empty matrix".into()));
        }
        let c = rows[0].len();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != c {
                return Err(BellError::Malformed(format!(
                    "ragged matrix: row {i} has {} entries, expected {c}",
                    row.len()
                )));
            }
        }
        let mut m = Self::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        Ok(m)
    }

    /// Rank-1 projector |v⟩⟨v| of a (not necessarily normalized) vector.
    pub fn outer(v: &[Complex64]) -> Self {
        let n = v.len();
        Self::from_fn(n, n, |i, j| v[i] * v[j].conj())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn scale(&self, a: Complex64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|x| x * a).collect() }
    }

    pub fn scale_re(&self, a: f64) -> Self {
        self.scale(Complex64::new(a, 0.0))
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                let row = &other.data[k * other.cols..(k + 1) * other.cols];
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        out
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn trace(&self) -> Complex64 {
        assert!(self.is_square());
        (0..self.rows).map(|i| self[(i, i)]).sum()
    }

    /// Apply the matrix to a vector.
    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                self.data[i * self.cols..(i + 1) * self.cols]
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    /// Kronecker product, `self` as the leading (most significant) factor.
    pub fn kron(&self, other: &Self) -> Self {
        let mut out = Self::zeros(self.rows * other.rows, self.cols * other.cols);
        for i1 in 0..self.rows {
            for j1 in 0..self.cols {
                let a = self[(i1, j1)];
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for i2 in 0..other.rows {
                    for j2 in 0..other.cols {
                        out[(i1 * other.rows + i2, j1 * other.cols + j2)] = a * other[(i2, j2)];
                    }
                }
            }
        }
        out
    }

    /// Largest entry magnitude.
    pub fn sup_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Spectral norm via the Hermitian eigenvalues of M*M.
    pub fn spectral_norm(&self) -> f64 {
        let mm = self.adjoint().matmul(self);
        let eigs = mm.hermitian_eigenvalues();
        eigs.last().copied().unwrap_or(0.0).max(0.0).sqrt()
    }

    /// Max magnitude of `self - self†` entries.
    pub fn hermiticity_residual(&self) -> f64 {
        assert!(self.is_square());
        let mut r: f64 = 0.0;
        for i in 0..self.rows {
            for j in i..self.cols {
                r = r.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        r
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.is_square() && self.hermiticity_residual() <= tol
    }

    /// Eigenvalues (ascending) and a unitary of eigenvectors (columns) of a
    /// Hermitian matrix, by cyclic Jacobi sweeps driven to an off-diagonal
    /// mass below `1e-13 * max(1, ||A||_F)`.
    pub fn hermitian_eigen(&self) -> (Vec<f64>, ComplexMatrix) {
        self.jacobi_eigen(true)
    }

    /// Eigenvalues only (ascending).
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        self.jacobi_eigen(false).0
    }

    fn jacobi_eigen(&self, want_vectors: bool) -> (Vec<f64>, ComplexMatrix) {
        assert!(self.is_square(), "eigendecomposition needs a square matrix");
        let n = self.rows;
        let mut a = self.clone();
        let mut v = ComplexMatrix::identity(if want_vectors { n } else { 1 });

        let scale = self.frobenius_norm().max(1.0);
        let target = 1e-13 * scale;
        let max_sweeps = 60;

        for _ in 0..max_sweeps {
            let mut off = 0.0_f64;
            for p in 0..n {
                for q in (p + 1)..n {
                    off += a[(p, q)].norm_sqr();
                }
            }
            if (2.0 * off).sqrt() <= target {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a[(p, q)];
                    let g = apq.norm();
                    if g <= target / (n as f64) {
                        continue;
                    }
                    // Phase that makes the pivot entry real, then a real
                    // Jacobi rotation on the (p, q) plane.
                    let u = apq / g;
                    let app = a[(p, p)].re;
                    let aqq = a[(q, q)].re;
                    let tau = (aqq - app) / (2.0 * g);
                    let t = if tau >= 0.0 {
                        1.0 / (tau + (1.0 + tau * tau).sqrt())
                    } else {
                        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                    };
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = t * c;

                    // Combined unitary U: U[p][p]=c, U[p][q]=s,
                    // U[q][p]=-s*conj(u), U[q][q]=c*conj(u).
                    let upq = Complex64::new(s, 0.0);
                    let upp = Complex64::new(c, 0.0);
                    let uqp = -u.conj() * s;
                    let uqq = u.conj() * c;

                    // A <- A U (column update)
                    for k in 0..n {
                        let akp = a[(k, p)];
                        let akq = a[(k, q)];
                        a[(k, p)] = akp * upp + akq * uqp;
                        a[(k, q)] = akp * upq + akq * uqq;
                    }
                    // A <- U* A (row update)
                    for k in 0..n {
                        let apk = a[(p, k)];
                        let aqk = a[(q, k)];
                        a[(p, k)] = upp.conj() * apk + uqp.conj() * aqk;
                        a[(q, k)] = upq.conj() * apk + uqq.conj() * aqk;
                    }
                    a[(p, q)] = Complex64::new(0.0, 0.0);
                    a[(q, p)] = Complex64::new(0.0, 0.0);

                    if want_vectors {
                        for k in 0..n {
                            let vkp = v[(k, p)];
                            let vkq = v[(k, q)];
                            v[(k, p)] = vkp * upp + vkq * uqp;
                            v[(k, q)] = vkp * upq + vkq * uqq;
                        }
                    }
                }
            }
        }

        let mut order: Vec<usize> = (0..n).collect();
        let diag: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
        order.sort_by(|&i, &j| diag[i].partial_cmp(&diag[j]).unwrap().then(i.cmp(&j)));

        let eigenvalues: Vec<f64> = order.iter().map(|&i| diag[i]).collect();
        let vectors = if want_vectors {
            ComplexMatrix::from_fn(n, n, |r, ci| v[(r, order[ci])])
        } else {
            v
        };
        (eigenvalues, vectors)
    }

    /// Operator sign of a Hermitian matrix: eigenvalues in `[-zero_tol, ∞)`
    /// map to +1, the rest to -1. (The sign of an exactly-zero eigenvalue is
    /// a free choice; +1 keeps the result unitary.)
    pub fn operator_sign(&self, zero_tol: f64) -> ComplexMatrix {
        let (eigs, vecs) = self.hermitian_eigen();
        let n = self.rows;
        let mut out = ComplexMatrix::zeros(n, n);
        for (k, &lambda) in eigs.iter().enumerate() {
            let sign = if lambda < -zero_tol { -1.0 } else { 1.0 };
            for i in 0..n {
                for j in 0..n {
                    out[(i, j)] += Complex64::new(sign, 0.0) * vecs[(i, k)] * vecs[(j, k)].conj();
                }
            }
        }
        out
    }

    /// Minimum eigenvalue of a Hermitian matrix. For dimensions above 128 a
    /// Cholesky witness on `A + shift·1` is used instead of a full
    /// decomposition; it returns `-shift` or `0.0` as a coarse bound, which
    /// is all the positivity checks need.
    pub fn min_hermitian_eigenvalue_approx(&self, shift: f64) -> f64 {
        if self.rows <= 128 {
            return self.hermitian_eigenvalues().first().copied().unwrap_or(0.0);
        }
        if self.cholesky_succeeds(shift) {
            0.0
        } else {
            -2.0 * shift
        }
    }

    /// Attempt a Cholesky factorization of `A + shift·1`; success certifies
    /// min eigenvalue ≳ -shift.
    fn cholesky_succeeds(&self, shift: f64) -> bool {
        let n = self.rows;
        let mut l = self.clone();
        for i in 0..n {
            l[(i, i)] += Complex64::new(shift, 0.0);
        }
        for j in 0..n {
            let mut d = l[(j, j)].re;
            for k in 0..j {
                d -= l[(j, k)].norm_sqr();
            }
            if d <= 0.0 {
                return false;
            }
            let d = d.sqrt();
            l[(j, j)] = Complex64::new(d, 0.0);
            for i in (j + 1)..n {
                let mut x = l[(i, j)];
                for k in 0..j {
                    x -= l[(i, k)] * l[(j, k)].conj();
                }
                l[(i, j)] = x / d;
            }
        }
        true
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Kronecker chain in site order (first factor most significant).
pub fn kron_all(factors: &[&ComplexMatrix]) -> ComplexMatrix {
    assert!(!factors.is_empty());
    let mut out = factors[0].clone();
    for f in &factors[1..] {
        out = out.kron(f);
    }
    out
}

fn decompose_index(mut flat: usize, dims: &[usize], out: &mut [usize]) {
    for k in (0..dims.len()).rev() {
        out[k] = flat % dims[k];
        flat /= dims[k];
    }
}

fn compose_index(parts: &[usize], dims: &[usize]) -> usize {
    let mut flat = 0;
    for (p, d) in parts.iter().zip(dims) {
        flat = flat * d + p;
    }
    flat
}

/// Partial trace of an operator on `⊗_k C^{dims[k]}`, keeping the sites in
/// `keep` (in the order given).
pub fn partial_trace(m: &ComplexMatrix, dims: &[usize], keep: &[usize]) -> ComplexMatrix {
    let total: usize = dims.iter().product();
    assert_eq!(m.rows(), total);
    assert_eq!(m.cols(), total);
    let kept_dims: Vec<usize> = keep.iter().map(|&k| dims[k]).collect();
    let kept_total: usize = kept_dims.iter().product();
    let n = dims.len();

    let mut out = ComplexMatrix::zeros(kept_total, kept_total);
    let mut ri = vec![0usize; n];
    let mut ci = vec![0usize; n];
    let mut rk = vec![0usize; keep.len()];
    let mut ck = vec![0usize; keep.len()];
    for r in 0..total {
        decompose_index(r, dims, &mut ri);
        for c in 0..total {
            decompose_index(c, dims, &mut ci);
            let mut diagonal_elsewhere = true;
            for k in 0..n {
                if !keep.contains(&k) && ri[k] != ci[k] {
                    diagonal_elsewhere = false;
                    break;
                }
            }
            if !diagonal_elsewhere {
                continue;
            }
            for (slot, &k) in keep.iter().enumerate() {
                rk[slot] = ri[k];
                ck[slot] = ci[k];
            }
            let ro = compose_index(&rk, &kept_dims);
            let co = compose_index(&ck, &kept_dims);
            out[(ro, co)] += m[(r, c)];
        }
    }
    out
}

/// Partial transpose over the sites flagged in `transposed`.
pub fn partial_transpose(m: &ComplexMatrix, dims: &[usize], transposed: &[bool]) -> ComplexMatrix {
    let total: usize = dims.iter().product();
    assert_eq!(m.rows(), total);
    assert_eq!(m.cols(), total);
    assert_eq!(dims.len(), transposed.len());
    let n = dims.len();

    let mut out = ComplexMatrix::zeros(total, total);
    let mut ri = vec![0usize; n];
    let mut ci = vec![0usize; n];
    for r in 0..total {
        decompose_index(r, dims, &mut ri);
        for c in 0..total {
            decompose_index(c, dims, &mut ci);
            let mut sr = vec![0usize; n];
            let mut sc = vec![0usize; n];
            for k in 0..n {
                if transposed[k] {
                    sr[k] = ci[k];
                    sc[k] = ri[k];
                } else {
                    sr[k] = ri[k];
                    sc[k] = ci[k];
                }
            }
            out[(compose_index(&sr, dims), compose_index(&sc, dims))] = m[(r, c)];
        }
    }
    out
}

pub fn sigma_x() -> ComplexMatrix {
    ComplexMatrix::from_rows(&[
        vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
        vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
    ])
    .unwrap()
}

pub fn sigma_y() -> ComplexMatrix {
    ComplexMatrix::from_rows(&[
        vec![Complex64::new(0.0, 0.0), Complex64::new(0.0, -1.0)],
        vec![Complex64::new(0.0, 1.0), Complex64::new(0.0, 0.0)],
    ])
    .unwrap()
}

pub fn sigma_z() -> ComplexMatrix {
    ComplexMatrix::from_rows(&[
        vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
        vec![Complex64::new(0.0, 0.0), Complex64::new(-1.0, 0.0)],
    ])
    .unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> ComplexMatrix {
        let g = ComplexMatrix::from_fn(n, n, |_, _| {
            Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
        });
        g.add(&g.adjoint()).scale_re(0.5)
    }

    #[test]
    fn pauli_eigenvalues() {
        for m in [sigma_x(), sigma_y(), sigma_z()] {
            let eigs = m.hermitian_eigenvalues();
            assert!((eigs[0] + 1.0).abs() < 1e-14);
            assert!((eigs[1] - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn eigen_reconstructs_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [2usize, 3, 5, 8, 16] {
            let a = random_hermitian(&mut rng, n);
            let (eigs, v) = a.hermitian_eigen();
            // V diag(eigs) V* == A
            let mut rec = ComplexMatrix::zeros(n, n);
            for k in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        rec[(i, j)] += Complex64::new(eigs[k], 0.0) * v[(i, k)] * v[(j, k)].conj();
                    }
                }
            }
            assert!(rec.sub(&a).sup_norm() < 1e-12, "n={n}");
            let vv = v.adjoint().matmul(&v);
            assert!(vv.sub(&ComplexMatrix::identity(n)).sup_norm() < 1e-12);
        }
    }

    #[test]
    fn eigenvalues_sorted_and_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_hermitian(&mut rng, 6);
        let e1 = a.hermitian_eigenvalues();
        let e2 = a.hermitian_eigenvalues();
        assert_eq!(e1, e2);
        for w in e1.windows(2) {
            assert!(w[0] <= w[1]);
        }
    }

    #[test]
    fn operator_sign_is_unitary_hermitian() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = random_hermitian(&mut rng, 5);
        let s = a.operator_sign(1e-12);
        assert!(s.is_hermitian(1e-12));
        let ss = s.matmul(&s);
        assert!(ss.sub(&ComplexMatrix::identity(5)).sup_norm() < 1e-11);
    }

    #[test]
    fn operator_sign_of_zero_is_identity() {
        let z = ComplexMatrix::zeros(3, 3);
        let s = z.operator_sign(1e-12);
        assert!(s.sub(&ComplexMatrix::identity(3)).sup_norm() < 1e-14);
    }

    #[test]
    fn kron_and_partial_trace_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_hermitian(&mut rng, 2);
        let b = random_hermitian(&mut rng, 3);
        let ab = a.kron(&b);
        assert_eq!(ab.rows(), 6);
        // tracing out site 1 leaves tr(A)·B and vice versa
        let tb = partial_trace(&ab, &[2, 3], &[1]);
        let expect = b.scale(a.trace());
        assert!(tb.sub(&expect).sup_norm() < 1e-13);
        let ta = partial_trace(&ab, &[2, 3], &[0]);
        assert!(ta.sub(&a.scale(b.trace())).sup_norm() < 1e-13);
    }

    #[test]
    fn partial_transpose_factorizes_and_involutes() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = random_hermitian(&mut rng, 2);
        let b = random_hermitian(&mut rng, 2);
        let ab = a.kron(&b);
        let pt = partial_transpose(&ab, &[2, 2], &[true, false]);
        assert!(pt.sub(&a.transpose().kron(&b)).sup_norm() < 1e-14);
        let back = partial_transpose(&pt, &[2, 2], &[true, false]);
        assert!(back.sub(&ab).sup_norm() < 1e-14);
        assert!((pt.trace() - ab.trace()).norm() < 1e-14);
    }

    #[test]
    fn spectral_norm_of_pauli_is_one() {
        assert!((sigma_x().spectral_norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cholesky_witness() {
        let id = ComplexMatrix::identity(4);
        assert!(id.cholesky_succeeds(0.0));
        let neg = id.scale_re(-1.0);
        assert!(!neg.cholesky_succeeds(1e-9));
    }
}
