//! Quantum side: Bell operators from observable sets, expectations, the
//! See-Saw alternating maximization, the two-qubit closed form √(ν+ν'),
//! partial transposes and the PPT test, the GHZ eigenstructure of
//! two-setting Bell operators with planar observables, and the
//! Pauli-algebra diagnostic for maximal violators.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{BellError, Result};
use crate::family::BellCoefficients;
use crate::linalg::{self, kron_all, max_operator_dim, ComplexMatrix};

/// Hermiticity tolerance for observables and states.
pub const HERMITICITY_TOL: f64 = 1e-12;
/// Positivity slack for density matrices and partial transposes.
pub const PSD_TOL: f64 = 1e-9;

/// A bounded Hermitian observable, -1 ≤ A ≤ 1.
#[derive(Debug, Clone)]
pub struct HermitianObservable {
    matrix: ComplexMatrix,
}

impl HermitianObservable {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(BellError::InvalidObservable("matrix is not square".into()));
        }
        let residual = matrix.hermiticity_residual();
        if residual > HERMITICITY_TOL {
            return Err(BellError::NotHermitian { residual, tol: HERMITICITY_TOL });
        }
        let eigs = matrix.hermitian_eigenvalues();
        if let Some(&lambda) = eigs.iter().find(|l| l.abs() > 1.0 + PSD_TOL) {
            return Err(BellError::InvalidObservable(format!(
                "spectrum leaves [-1, 1]: eigenvalue {lambda}"
            )));
        }
        Ok(Self { matrix })
    }

    /// For operators that are Hermitian with spectrum in [-1,1] by
    /// construction (operator signs, planar Pauli combinations).
    pub(crate) fn from_trusted(matrix: ComplexMatrix) -> Self {
        Self { matrix }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }
}

/// A density matrix over ⊗_k C^(site_dims[k]).
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
    site_dims: Vec<usize>,
}

impl DensityMatrix {
    pub fn new(matrix: ComplexMatrix, site_dims: Vec<usize>) -> Result<Self> {
        let total: usize = site_dims.iter().product();
        if total == 0 || site_dims.is_empty() {
            return Err(BellError::InvalidState("empty site dimensions".into()));
        }
        if total > max_operator_dim() {
            return Err(BellError::SizeGuard(format!(
                "operator dimension {total} exceeds guard {}",
                max_operator_dim()
            )));
        }
        if matrix.rows() != total || matrix.cols() != total {
            return Err(BellError::DimensionMismatch { expected: total, got: matrix.rows() });
        }
        let residual = matrix.hermiticity_residual();
        if residual > HERMITICITY_TOL {
            return Err(BellError::NotHermitian { residual, tol: HERMITICITY_TOL });
        }
        let trace = matrix.trace();
        if (trace.re - 1.0).abs() > 1e-12 || trace.im.abs() > 1e-12 {
            return Err(BellError::InvalidState(format!("trace is {trace}, expected 1")));
        }
        let min_eig = matrix.min_hermitian_eigenvalue_approx(PSD_TOL);
        if min_eig < -PSD_TOL {
            return Err(BellError::InvalidState(format!(
                "not positive semidefinite: min eigenvalue {min_eig:.3e}"
            )));
        }
        Ok(Self { matrix, site_dims })
    }

    /// |ψ⟩⟨ψ| of a state vector (normalized here).
    pub fn from_pure(vector: &[Complex64], site_dims: Vec<usize>) -> Result<Self> {
        let total: usize = site_dims.iter().product();
        if vector.len() != total {
            return Err(BellError::DimensionMismatch { expected: total, got: vector.len() });
        }
        let norm: f64 = vector.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm <= 0.0 {
            return Err(BellError::InvalidState("zero state vector".into()));
        }
        let normalized: Vec<Complex64> = vector.iter().map(|z| z / norm).collect();
        Self::new(ComplexMatrix::outer(&normalized), site_dims)
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn site_dims(&self) -> &[usize] {
        &self.site_dims
    }

    pub fn sites(&self) -> usize {
        self.site_dims.len()
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    /// Reduced state on the given sites.
    pub fn reduced(&self, keep: &[usize]) -> ComplexMatrix {
        linalg::partial_trace(&self.matrix, &self.site_dims, keep)
    }
}

/// Two observables per site, matching a coefficient vector's party count.
#[derive(Debug, Clone)]
pub struct ObservableSet {
    sites: Vec<[HermitianObservable; 2]>,
}

impl ObservableSet {
    pub fn new(sites: Vec<[HermitianObservable; 2]>) -> Result<Self> {
        for (k, pair) in sites.iter().enumerate() {
            if pair[0].dim() != pair[1].dim() {
                return Err(BellError::InvalidObservable(format!(
                    "site {k} observables have different dimensions"
                )));
            }
        }
        Ok(Self { sites })
    }

    pub fn sites(&self) -> usize {
        self.sites.len()
    }

    pub fn observable(&self, site: usize, setting: usize) -> &HermitianObservable {
        &self.sites[site][setting]
    }

    pub fn site_dims(&self) -> Vec<usize> {
        self.sites.iter().map(|pair| pair[0].dim()).collect()
    }
}

/// Planar qubit observable cos(α)·σx + sin(α)·σy.
pub fn planar_observable(alpha: f64) -> HermitianObservable {
    let m = linalg::sigma_x().scale_re(alpha.cos()).add(&linalg::sigma_y().scale_re(alpha.sin()));
    HermitianObservable::from_trusted(m)
}

/// One planar observable pair per site from angles (α_k(0), α_k(1)).
pub fn planar_observable_set(angles: &[[f64; 2]]) -> ObservableSet {
    ObservableSet {
        sites: angles
            .iter()
            .map(|&[a0, a1]| [planar_observable(a0), planar_observable(a1)])
            .collect(),
    }
}

/// B = Σ_s β(s) ⊗_k A_k(s_k), site 1 the leading tensor factor.
pub fn bell_operator(beta: &BellCoefficients, obs: &ObservableSet) -> Result<ComplexMatrix> {
    let n = beta.n();
    if obs.sites() != n {
        return Err(BellError::DimensionMismatch { expected: n, got: obs.sites() });
    }
    let total: usize = obs.site_dims().iter().product();
    if total > max_operator_dim() {
        return Err(BellError::SizeGuard(format!(
            "Bell operator dimension {total} exceeds guard {}",
            max_operator_dim()
        )));
    }
    let mut out = ComplexMatrix::zeros(total, total);
    for (s, &coeff) in beta.beta().iter().enumerate() {
        if coeff == 0.0 {
            continue;
        }
        let factors: Vec<&ComplexMatrix> =
            (0..n).map(|k| obs.observable(k, (s >> k) & 1).matrix()).collect();
        out = out.add(&kron_all(&factors).scale_re(coeff));
    }
    Ok(out)
}

/// tr(ρ·op) of a Hermitian operator; the imaginary residue must stay below
/// 1e-10.
pub fn expectation(rho: &DensityMatrix, op: &ComplexMatrix) -> Result<f64> {
    if op.rows() != rho.dim() || op.cols() != rho.dim() {
        return Err(BellError::DimensionMismatch { expected: rho.dim(), got: op.rows() });
    }
    let residual = op.hermiticity_residual();
    if residual > 1e-10 {
        return Err(BellError::NotHermitian { residual, tol: 1e-10 });
    }
    let value = rho.matrix.matmul(op).trace();
    if value.im.abs() > 1e-10 {
        return Err(BellError::InvalidState(format!(
            "expectation has imaginary residue {:.3e}",
            value.im
        )));
    }
    Ok(value.re)
}

/// Options for the alternating maximization.
#[derive(Debug, Clone, Copy)]
pub struct SeesawOptions {
    /// Cap on sweeps per restart.
    pub max_iters: usize,
    /// Independently seeded restarts; the best final value wins.
    pub restarts: usize,
    pub seed: u64,
    /// Absolute convergence tolerance on the objective.
    pub tol: f64,
}

impl Default for SeesawOptions {
    fn default() -> Self {
        Self { max_iters: 500, restarts: 20, seed: 0, tol: 1e-10 }
    }
}

#[derive(Debug, Clone)]
pub struct SeesawResult {
    pub value: f64,
    pub observables: ObservableSet,
    /// Objective after every sweep of the winning restart (nondecreasing).
    pub trace: Vec<f64>,
    pub converged: bool,
    /// Objective traces of every restart, in restart order.
    pub restart_traces: Vec<Vec<f64>>,
}

/// Maximize tr(B·ρ) over one site's observables at a time via the operator
/// sign of the partial-trace contraction, sweeping sites in ascending
/// order. Restarts use seeds `seed + restart index`; the reduction picks
/// the best value with ties broken by lowest restart index, so the result
/// is schedule-independent.
pub fn seesaw(
    beta: &BellCoefficients,
    rho: &DensityMatrix,
    opts: &SeesawOptions,
) -> Result<SeesawResult> {
    let n = beta.n();
    if rho.sites() != n {
        return Err(BellError::DimensionMismatch { expected: n, got: rho.sites() });
    }
    if opts.restarts == 0 {
        return Err(BellError::Malformed("seesaw needs at least one restart".into()));
    }

    let runs: Vec<SeesawRun> = (0..opts.restarts)
        .into_par_iter()
        .map(|restart| {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(restart as u64));
            run_one_seesaw(beta, rho, opts, &mut rng)
        })
        .collect();

    let mut best = 0usize;
    for (i, run) in runs.iter().enumerate() {
        if run.value > runs[best].value {
            best = i;
        }
    }
    let restart_traces: Vec<Vec<f64>> = runs.iter().map(|r| r.trace.clone()).collect();
    let winner = runs.into_iter().nth(best).expect("nonempty");
    let observables = ObservableSet {
        sites: winner
            .observables
            .into_iter()
            .map(|[a, b]| {
                [HermitianObservable::from_trusted(a), HermitianObservable::from_trusted(b)]
            })
            .collect(),
    };
    Ok(SeesawResult {
        value: winner.value,
        observables,
        trace: winner.trace,
        converged: winner.converged,
        restart_traces,
    })
}

struct SeesawRun {
    value: f64,
    trace: Vec<f64>,
    observables: Vec<[ComplexMatrix; 2]>,
    converged: bool,
}

fn run_one_seesaw(
    beta: &BellCoefficients,
    rho: &DensityMatrix,
    opts: &SeesawOptions,
    rng: &mut ChaCha8Rng,
) -> SeesawRun {
    let n = beta.n();
    let dims = rho.site_dims();
    let mut observables: Vec<[ComplexMatrix; 2]> = dims
        .iter()
        .map(|&d| [random_unitary_observable(d, rng), random_unitary_observable(d, rng)])
        .collect();

    let mut trace = Vec::new();
    let mut last = f64::NEG_INFINITY;
    let mut converged = false;
    for _ in 0..opts.max_iters {
        let mut value = 0.0;
        for site in 0..n {
            // the operator sign is the exact maximizer of tr(X·A) over
            // Hermitian -1 ≤ A ≤ 1
            value = 0.0;
            for setting in 0..2 {
                let x = site_contraction(beta, rho, &observables, site, setting);
                let a = x.operator_sign(1e-12);
                value += x.matmul(&a).trace().re;
                observables[site][setting] = a;
            }
        }
        trace.push(value);
        if (value - last).abs() < opts.tol {
            converged = true;
            break;
        }
        last = value;
    }
    let value = *trace.last().expect("at least one sweep");
    SeesawRun { value, trace, observables, converged }
}

/// X_{site,setting} = Σ_{s: s_site = setting} β(s) · tr_others((⊗_{j≠site}
/// A_j(s_j) ⊗ 1)·ρ); Hermitian because every non-identity factor acts on a
/// traced site.
fn site_contraction(
    beta: &BellCoefficients,
    rho: &DensityMatrix,
    observables: &[[ComplexMatrix; 2]],
    site: usize,
    setting: usize,
) -> ComplexMatrix {
    let n = beta.n();
    let dims = rho.site_dims();
    let identity = ComplexMatrix::identity(dims[site]);
    let mut x = ComplexMatrix::zeros(dims[site], dims[site]);
    for (s, &coeff) in beta.beta().iter().enumerate() {
        if coeff == 0.0 || (s >> site) & 1 != setting {
            continue;
        }
        let factors: Vec<&ComplexMatrix> = (0..n)
            .map(|j| if j == site { &identity } else { &observables[j][(s >> j) & 1] })
            .collect();
        let weighted = kron_all(&factors).matmul(&rho.matrix);
        x = x.add(&linalg::partial_trace(&weighted, dims, &[site]).scale_re(coeff));
    }
    x
}

/// Haar-like random Hermitian unitary: random orthonormal eigenbasis with
/// ±1 eigenvalues.
pub fn random_unitary_observable(dim: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
    let basis = random_unitary(dim, rng);
    let mut out = ComplexMatrix::zeros(dim, dim);
    for k in 0..dim {
        let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
        for i in 0..dim {
            for j in 0..dim {
                out[(i, j)] += Complex64::new(sign, 0.0) * basis[(i, k)] * basis[(j, k)].conj();
            }
        }
    }
    out
}

/// Haar-distributed unitary via Gram-Schmidt of a complex Ginibre matrix.
pub fn random_unitary(dim: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
    loop {
        let g = ComplexMatrix::from_fn(dim, dim, |_, _| gaussian_complex(rng));
        let mut cols: Vec<Vec<Complex64>> =
            (0..dim).map(|j| (0..dim).map(|i| g[(i, j)]).collect()).collect();
        let mut ok = true;
        for j in 0..dim {
            for k in 0..j {
                let proj: Complex64 =
                    cols[k].iter().zip(&cols[j]).map(|(a, b)| a.conj() * b).sum();
                let ck = cols[k].clone();
                for (c, reference) in cols[j].iter_mut().zip(&ck) {
                    *c -= proj * reference;
                }
            }
            let norm: f64 = cols[j].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if norm < 1e-8 {
                ok = false;
                break;
            }
            cols[j].iter_mut().for_each(|z| *z /= norm);
        }
        if ok {
            return ComplexMatrix::from_fn(dim, dim, |i, j| cols[j][i]);
        }
    }
}

/// Standard complex Gaussian (unit total variance) via Box–Muller.
pub fn gaussian_complex(rng: &mut ChaCha8Rng) -> Complex64 {
    let u1: f64 = rng.gen::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.gen();
    let radius = (-2.0 * u1.ln()).sqrt();
    let angle = 2.0 * std::f64::consts::PI * u2;
    Complex64::new(radius * angle.cos(), radius * angle.sin()) / std::f64::consts::SQRT_2
}

#[derive(Debug, Clone)]
pub struct ChshMaxResult {
    pub value: f64,
    /// R_ij = tr(ρ·σ_i⊗σ_j).
    pub r_matrix: [[f64; 3]; 3],
}

/// Closed-form CHSH maximum √(ν+ν') for a two-qubit state, with ν, ν' the
/// two largest eigenvalues of RᵀR.
pub fn chsh_max_qubits(rho: &DensityMatrix) -> Result<ChshMaxResult> {
    if rho.site_dims() != [2, 2] {
        return Err(BellError::DimensionMismatch { expected: 4, got: rho.dim() });
    }
    let paulis = [linalg::sigma_x(), linalg::sigma_y(), linalg::sigma_z()];
    let mut r = [[0.0; 3]; 3];
    for (i, si) in paulis.iter().enumerate() {
        for (j, sj) in paulis.iter().enumerate() {
            r[i][j] = expectation(rho, &si.kron(sj))?;
        }
    }
    let rtr = ComplexMatrix::from_fn(3, 3, |i, j| {
        let v: f64 = (0..3).map(|k| r[k][i] * r[k][j]).sum();
        Complex64::new(v, 0.0)
    });
    let eigs = rtr.hermitian_eigenvalues();
    let value = (eigs[1].max(0.0) + eigs[2].max(0.0)).sqrt();
    Ok(ChshMaxResult { value, r_matrix: r })
}

/// Partial transpose of the state over the given subset of sites (the empty
/// and full subsets are allowed; full is the global transpose).
pub fn partial_transpose(rho: &DensityMatrix, partition: &[usize]) -> Result<ComplexMatrix> {
    let n = rho.sites();
    let mut flags = vec![false; n];
    for &site in partition {
        if site >= n {
            return Err(BellError::PartyOutOfRange { party: site, parties: n });
        }
        flags[site] = true;
    }
    Ok(linalg::partial_transpose(&rho.matrix, rho.site_dims(), &flags))
}

#[derive(Debug, Clone)]
pub struct PptReport {
    /// One entry per nontrivial bipartition, keyed by the sites on the
    /// transposed side (site 0 stays on the untransposed side).
    pub per_partition: Vec<(Vec<usize>, bool)>,
    pub all: bool,
}

/// Positivity of the partial transpose across every nontrivial bipartition.
pub fn is_ppt(rho: &DensityMatrix) -> Result<PptReport> {
    let n = rho.sites();
    if n < 2 {
        return Err(BellError::Malformed("PPT needs at least two sites".into()));
    }
    let mut per_partition = Vec::new();
    let mut all = true;
    // subsets of {1,…,n-1}: complementary partitions have identical spectra
    for mask in 1usize..(1 << (n - 1)) {
        let partition: Vec<usize> = (1..n).filter(|&site| mask >> (site - 1) & 1 == 1).collect();
        let pt = partial_transpose(rho, &partition)?;
        let min_eig = pt.hermitian_eigenvalues().first().copied().unwrap_or(0.0);
        let positive = min_eig >= -PSD_TOL;
        all &= positive;
        per_partition.push((partition, positive));
    }
    Ok(PptReport { per_partition, all })
}

/// One eigenvector pair of the GHZ eigenstructure: the states
/// (e^(iθ)|Ω⟩ ± |Ω̄⟩)/√2 with eigenvalues ±λ.
#[derive(Debug, Clone)]
pub struct GhzMode {
    /// Basis pattern Ω as a Hilbert index (site 1 the most significant
    /// bit), with the site-1 bit fixed to 0.
    pub omega: usize,
    pub lambda: f64,
    pub theta: f64,
}

#[derive(Debug, Clone)]
pub struct GhzSpectrum {
    /// All 2ⁿ eigenvalues, ascending.
    pub eigenvalues: Vec<f64>,
    pub modes: Vec<GhzMode>,
}

/// Spectrum of the Bell operator with planar observables from the GHZ-basis
/// eigenvalue equations: λ_Ω = |Σ_s β(s)·f_Ω(s)| with
/// f_Ω(s) = exp(i·Σ_k α_k(s_k)·(-1)^(Ω_k)).
pub fn ghz_spectrum(beta: &BellCoefficients, angles: &[[f64; 2]]) -> Result<GhzSpectrum> {
    let n = beta.n();
    if angles.len() != n {
        return Err(BellError::DimensionMismatch { expected: n, got: angles.len() });
    }
    let mut modes = Vec::with_capacity(1 << (n - 1));
    let mut eigenvalues = Vec::with_capacity(1 << n);
    for omega in 0..(1usize << (n - 1)) {
        let mut z = Complex64::new(0.0, 0.0);
        for (s, &coeff) in beta.beta().iter().enumerate() {
            if coeff == 0.0 {
                continue;
            }
            let mut phase = 0.0;
            for (k, pair) in angles.iter().enumerate() {
                let setting = (s >> k) & 1;
                // site k occupies Hilbert bit n-1-k; the site-1 bit of Ω is 0
                let omega_k = (omega >> (n - 1 - k)) & 1;
                phase += pair[setting] * if omega_k == 1 { -1.0 } else { 1.0 };
            }
            z += Complex64::new(coeff, 0.0) * Complex64::new(0.0, phase).exp();
        }
        let lambda = z.norm();
        let theta = if lambda > 0.0 { -z.arg() } else { 0.0 };
        modes.push(GhzMode { omega, lambda, theta });
        eigenvalues.push(lambda);
        eigenvalues.push(-lambda);
    }
    eigenvalues.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(GhzSpectrum { eigenvalues, modes })
}

#[derive(Debug, Clone)]
pub struct PauliStructureReport {
    /// ‖Π A² Π‖ with A = (A₁+iA₂)/2 and Π the support projector of Alice's
    /// reduced state.
    pub square_residual: f64,
    /// ‖Π (A*A + AA* - 1) Π‖.
    pub completeness_residual: f64,
    /// ‖Π (A₁A₂ - iA₃) Π‖ with A₃ = AA* - A*A.
    pub product_residual: f64,
    pub pauli_like: bool,
}

/// Test whether two observables on the first site close the Pauli algebra
/// on the support of the reduced state — the structure forced on any pair
/// achieving the quantum CHSH maximum.
pub fn pauli_structure_check(
    a1: &HermitianObservable,
    a2: &HermitianObservable,
    rho: &DensityMatrix,
    tol: f64,
) -> Result<PauliStructureReport> {
    let d = rho.site_dims()[0];
    if a1.dim() != d || a2.dim() != d {
        return Err(BellError::DimensionMismatch { expected: d, got: a1.dim() });
    }
    let reduced = rho.reduced(&[0]);
    let (eigs, vecs) = reduced.hermitian_eigen();
    let mut support = ComplexMatrix::zeros(d, d);
    for (k, &lambda) in eigs.iter().enumerate() {
        if lambda > PSD_TOL {
            for i in 0..d {
                for j in 0..d {
                    support[(i, j)] += vecs[(i, k)] * vecs[(j, k)].conj();
                }
            }
        }
    }

    let i = Complex64::new(0.0, 1.0);
    let a = a1.matrix().add(&a2.matrix().scale(i)).scale_re(0.5);
    let a_star = a.adjoint();
    let a3 = a.matmul(&a_star).sub(&a_star.matmul(&a));

    let restrict = |m: &ComplexMatrix| support.matmul(m).matmul(&support).spectral_norm();
    let square_residual = restrict(&a.matmul(&a));
    let completeness = a_star.matmul(&a).add(&a.matmul(&a_star)).sub(&ComplexMatrix::identity(d));
    let completeness_residual = restrict(&completeness);
    let product = a1.matrix().matmul(a2.matrix()).sub(&a3.scale(i));
    let product_residual = restrict(&product);

    Ok(PauliStructureReport {
        square_residual,
        completeness_residual,
        product_residual,
        pauli_like: square_residual < tol && completeness_residual < tol && product_residual < tol,
    })
}

#[derive(Debug, Clone)]
pub struct VarianceReport {
    /// (tr ρB)².
    pub lhs: f64,
    /// tr(ρ^(T_P)·(B^(T_P))²).
    pub rhs: f64,
    pub holds: bool,
    /// Whether ρ^(T_P) was positive semidefinite; when it is not, the
    /// inequality carries no guarantee and `holds` is merely reported.
    pub ppt_partition: bool,
}

/// Variance bound (tr ρB)² ≤ tr(ρ^(T_P)·(B^(T_P))²), valid whenever the
/// partial transpose is a state.
pub fn variance_check(
    rho: &DensityMatrix,
    bell_op: &ComplexMatrix,
    partition: &[usize],
) -> Result<VarianceReport> {
    let lhs = expectation(rho, bell_op)?.powi(2);
    let rho_pt = partial_transpose(rho, partition)?;
    let n = rho.sites();
    let mut flags = vec![false; n];
    for &site in partition {
        flags[site] = true;
    }
    let b_pt = linalg::partial_transpose(bell_op, rho.site_dims(), &flags);
    let rhs = rho_pt.matmul(&b_pt.matmul(&b_pt)).trace().re;
    let ppt_partition = rho_pt.hermitian_eigenvalues().first().copied().unwrap_or(0.0) >= -PSD_TOL;
    Ok(VarianceReport { lhs, rhs, holds: lhs <= rhs + PSD_TOL, ppt_partition })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::mermin;
    use crate::linalg::{sigma_x, sigma_y, sigma_z};
    use crate::states;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, SQRT_2};

    fn chsh() -> BellCoefficients {
        BellCoefficients::new(2, vec![0.5, 0.5, 0.5, -0.5]).unwrap()
    }

    fn phi_plus() -> DensityMatrix {
        let h = Complex64::new(1.0 / SQRT_2, 0.0);
        let z = Complex64::new(0.0, 0.0);
        DensityMatrix::from_pure(&[h, z, z, h], vec![2, 2]).unwrap()
    }

    fn singlet() -> DensityMatrix {
        let h = Complex64::new(1.0 / SQRT_2, 0.0);
        let z = Complex64::new(0.0, 0.0);
        DensityMatrix::from_pure(&[z, h, -h, z], vec![2, 2]).unwrap()
    }

    /// Planar observables reaching +√2 on |Φ+⟩ (R = diag(1,-1,1) gives
    /// E(α,β) = cos(α+β)).
    fn chsh_optimal_for_phi_plus() -> ObservableSet {
        planar_observable_set(&[[0.0, -FRAC_PI_2], [FRAC_PI_4, -FRAC_PI_4]])
    }

    #[test]
    fn bell_operator_chsh_spectrum() {
        let sx = sigma_x();
        let sy = sigma_y();
        let b1 = HermitianObservable::new(sx.add(&sy).scale_re(1.0 / SQRT_2)).unwrap();
        let b2 = HermitianObservable::new(sx.sub(&sy).scale_re(1.0 / SQRT_2)).unwrap();
        let obs = ObservableSet::new(vec![
            [HermitianObservable::new(sx).unwrap(), HermitianObservable::new(sy).unwrap()],
            [b1, b2],
        ])
        .unwrap();
        let b = bell_operator(&chsh(), &obs).unwrap();
        assert!(b.is_hermitian(1e-12));
        assert!(b.trace().norm() < 1e-12);
        let eigs = b.hermitian_eigenvalues();
        let expected = [-SQRT_2, 0.0, 0.0, SQRT_2];
        for (e, x) in eigs.iter().zip(expected) {
            assert!((e - x).abs() < 1e-12, "{eigs:?}");
        }
    }

    #[test]
    fn bell_operator_single_site() {
        let beta = BellCoefficients::new(1, vec![0.0, 1.0]).unwrap();
        let obs = ObservableSet::new(vec![[
            HermitianObservable::new(sigma_x()).unwrap(),
            HermitianObservable::new(sigma_z()).unwrap(),
        ]])
        .unwrap();
        let b = bell_operator(&beta, &obs).unwrap();
        assert!(b.sub(&sigma_z()).sup_norm() < 1e-15);
    }

    #[test]
    fn mermin_operator_reaches_two() {
        // α = 0 ↦ σx, α = π/2 ↦ σy on every site
        let angles = [[0.0, FRAC_PI_2]; 3];
        let obs = planar_observable_set(&angles);
        let b = bell_operator(&mermin(3).unwrap(), &obs).unwrap();
        let eigs = b.hermitian_eigenvalues();
        let max = eigs.last().unwrap();
        assert!((max - 2.0).abs() < 1e-12, "max eigenvalue {max}");
    }

    #[test]
    fn expectation_examples() {
        let mixed =
            DensityMatrix::new(ComplexMatrix::identity(4).scale_re(0.25), vec![2, 2]).unwrap();
        assert!(expectation(&mixed, &sigma_x().kron(&sigma_z())).unwrap().abs() < 1e-14);

        let b = bell_operator(&chsh(), &chsh_optimal_for_phi_plus()).unwrap();
        assert!((expectation(&phi_plus(), &b).unwrap() - SQRT_2).abs() < 1e-12);

        assert!(
            (expectation(&phi_plus(), &sigma_z().kron(&sigma_z())).unwrap() - 1.0).abs() < 1e-12
        );

        // singlet at its own optimal angles
        let obs = planar_observable_set(&[[0.0, FRAC_PI_2], [PI + FRAC_PI_4, PI - FRAC_PI_4]]);
        let b = bell_operator(&chsh(), &obs).unwrap();
        assert!((expectation(&singlet(), &b).unwrap() - SQRT_2).abs() < 1e-12);

        let skew = ComplexMatrix::from_fn(4, 4, |i, j| {
            if i == 0 && j == 1 {
                Complex64::new(0.0, 1.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        assert!(expectation(&mixed, &skew).is_err());
    }

    #[test]
    fn seesaw_reaches_cirelson_on_phi_plus() {
        let opts = SeesawOptions { restarts: 20, seed: 7, ..Default::default() };
        let result = seesaw(&chsh(), &phi_plus(), &opts).unwrap();
        assert!((result.value - SQRT_2).abs() < 1e-6, "value {}", result.value);
        assert!(result.converged);
        for t in &result.restart_traces {
            for w in t.windows(2) {
                assert!(w[1] >= w[0] - 1e-10, "trace decreased: {t:?}");
            }
        }
    }

    #[test]
    fn seesaw_on_product_state_stays_classical() {
        let z = Complex64::new(0.0, 0.0);
        let o = Complex64::new(1.0, 0.0);
        let product = DensityMatrix::from_pure(&[o, z, z, z], vec![2, 2]).unwrap();
        let opts = SeesawOptions { restarts: 10, seed: 3, ..Default::default() };
        let result = seesaw(&chsh(), &product, &opts).unwrap();
        assert!((result.value - 1.0).abs() < 1e-6, "value {}", result.value);
    }

    #[test]
    fn seesaw_mermin_on_ghz_reaches_two() {
        let ghz = states::ghz_state(3).unwrap();
        let opts = SeesawOptions { restarts: 10, seed: 11, ..Default::default() };
        let result = seesaw(&mermin(3).unwrap(), &ghz, &opts).unwrap();
        assert!((result.value - 2.0).abs() < 1e-6, "value {}", result.value);
    }

    #[test]
    fn chsh_max_closed_form_examples() {
        let res = chsh_max_qubits(&phi_plus()).unwrap();
        assert!((res.value - SQRT_2).abs() < 1e-12);
        let expected = [[1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 1.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((res.r_matrix[i][j] - expected[i][j]).abs() < 1e-12);
            }
        }

        let z = Complex64::new(0.0, 0.0);
        let o = Complex64::new(1.0, 0.0);
        let zero_zero = DensityMatrix::from_pure(&[o, z, z, z], vec![2, 2]).unwrap();
        let res = chsh_max_qubits(&zero_zero).unwrap();
        assert!((res.value - 1.0).abs() < 1e-12);

        let phi = PI / 8.0;
        let psi = [Complex64::new(phi.cos(), 0.0), z, z, Complex64::new(phi.sin(), 0.0)];
        let state = DensityMatrix::from_pure(&psi, vec![2, 2]).unwrap();
        let res = chsh_max_qubits(&state).unwrap();
        assert!((res.value - 1.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn partial_transpose_properties() {
        let pt = partial_transpose(&singlet(), &[0]).unwrap();
        let eigs = pt.hermitian_eigenvalues();
        assert!((eigs[0] + 0.5).abs() < 1e-12);
        assert!((pt.trace().re - 1.0).abs() < 1e-13);
        // full-subset transpose is the global transpose
        let full = partial_transpose(&singlet(), &[0, 1]).unwrap();
        assert!(full.sub(&singlet().matrix().transpose()).sup_norm() < 1e-15);
        assert!(partial_transpose(&singlet(), &[2]).is_err());
    }

    #[test]
    fn ppt_detects_entanglement() {
        assert!(!is_ppt(&singlet()).unwrap().all);
        let mixed =
            DensityMatrix::new(ComplexMatrix::identity(4).scale_re(0.25), vec![2, 2]).unwrap();
        assert!(is_ppt(&mixed).unwrap().all);
    }

    #[test]
    fn ghz_spectrum_matches_dense_diagonalization() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for n in 2..=4usize {
            let beta = if n == 2 { chsh() } else { mermin(n).unwrap() };
            for _ in 0..10 {
                let angles: Vec<[f64; 2]> =
                    (0..n).map(|_| [rng.gen::<f64>() * PI, rng.gen::<f64>() * PI]).collect();
                let spectrum = ghz_spectrum(&beta, &angles).unwrap();
                let obs = planar_observable_set(&angles);
                let dense = bell_operator(&beta, &obs).unwrap().hermitian_eigenvalues();
                assert_eq!(spectrum.eigenvalues.len(), dense.len());
                for (a, b) in spectrum.eigenvalues.iter().zip(&dense) {
                    assert!((a - b).abs() < 1e-10, "n={n}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn ghz_spectrum_chsh_satisfies_sum_rule() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        // λ₁² + λ₂² = 2 for every planar CHSH operator (tr B² = 4)
        for _ in 0..20 {
            let angles: Vec<[f64; 2]> =
                (0..2).map(|_| [rng.gen::<f64>() * PI, rng.gen::<f64>() * PI]).collect();
            let spectrum = ghz_spectrum(&chsh(), &angles).unwrap();
            let sum: f64 = spectrum.modes.iter().map(|m| m.lambda * m.lambda).sum();
            assert!((sum - 2.0).abs() < 1e-12);
        }
        // optimal angles give {±√2, 0, 0}
        let spectrum =
            ghz_spectrum(&chsh(), &[[0.0, -FRAC_PI_2], [FRAC_PI_4, -FRAC_PI_4]]).unwrap();
        let lambdas: Vec<f64> = spectrum.modes.iter().map(|m| m.lambda).collect();
        let max = lambdas.iter().cloned().fold(0.0, f64::max);
        let min = lambdas.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!((max - SQRT_2).abs() < 1e-12);
        assert!(min.abs() < 1e-12);
    }

    #[test]
    fn ghz_spectrum_mermin_contains_two() {
        let spectrum = ghz_spectrum(&mermin(3).unwrap(), &[[0.0, FRAC_PI_2]; 3]).unwrap();
        assert!((spectrum.eigenvalues.last().unwrap() - 2.0).abs() < 1e-12);
        assert!((spectrum.eigenvalues.first().unwrap() + 2.0).abs() < 1e-12);
    }

    #[test]
    fn ghz_spectrum_degenerate_angles_agree_with_dense() {
        // A = A' on every site collapses the operator to scaled products
        let angles = [[0.3, 0.3], [1.1, 1.1]];
        let spectrum = ghz_spectrum(&chsh(), &angles).unwrap();
        let dense =
            bell_operator(&chsh(), &planar_observable_set(&angles)).unwrap().hermitian_eigenvalues();
        for (a, b) in spectrum.eigenvalues.iter().zip(&dense) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn bell_states_are_planar_chsh_eigenvectors() {
        // the four maximally-entangled basis states diagonalize every planar
        // CHSH operator
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let h = 1.0 / SQRT_2;
        let bell_vectors: [[Complex64; 4]; 4] = [
            [Complex64::new(h, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(h, 0.0)],
            [Complex64::new(h, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(-h, 0.0)],
            [Complex64::new(0.0, 0.0), Complex64::new(h, 0.0), Complex64::new(h, 0.0), Complex64::new(0.0, 0.0)],
            [Complex64::new(0.0, 0.0), Complex64::new(h, 0.0), Complex64::new(-h, 0.0), Complex64::new(0.0, 0.0)],
        ];
        for _ in 0..5 {
            let angles: Vec<[f64; 2]> =
                (0..2).map(|_| [rng.gen::<f64>() * PI, rng.gen::<f64>() * PI]).collect();
            let b = bell_operator(&chsh(), &planar_observable_set(&angles)).unwrap();
            // span test: B maps the {Φ±} plane to itself and the {Ψ±} plane
            // to itself; eigenvectors are phase-adjusted Bell states, so
            // ⟨Φ|B|Ψ⟩-type cross terms vanish
            for (i, v) in bell_vectors.iter().enumerate() {
                for (j, w) in bell_vectors.iter().enumerate() {
                    let cross_plane = (i < 2) != (j < 2);
                    if cross_plane {
                        let bv = b.apply(w);
                        let elem: Complex64 =
                            v.iter().zip(&bv).map(|(a, x)| a.conj() * x).sum();
                        assert!(elem.norm() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn pauli_structure_examples() {
        let a1 = HermitianObservable::new(sigma_x()).unwrap();
        let a2 = HermitianObservable::new(sigma_y()).unwrap();
        let report = pauli_structure_check(&a1, &a2, &singlet(), 1e-12).unwrap();
        assert!(report.pauli_like, "{report:?}");

        // A₁ = A₂ = σx: A² = i·σx²/2 has norm 1/2
        let report = pauli_structure_check(
            &a1,
            &HermitianObservable::new(sigma_x()).unwrap(),
            &singlet(),
            1e-12,
        )
        .unwrap();
        assert!((report.square_residual - 0.5).abs() < 1e-12);
        assert!(!report.pauli_like);

        // random observables on a product state: typically not Pauli-like
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let z = Complex64::new(0.0, 0.0);
        let o = Complex64::new(1.0, 0.0);
        let product = DensityMatrix::from_pure(&[o, z, z, z], vec![2, 2]).unwrap();
        let mut negatives = 0;
        for _ in 0..20 {
            let m1 = random_unitary_observable(2, &mut rng);
            let m2 = random_unitary_observable(2, &mut rng);
            let report = pauli_structure_check(
                &HermitianObservable::from_trusted(m1),
                &HermitianObservable::from_trusted(m2),
                &product,
                1e-6,
            )
            .unwrap();
            if !report.pauli_like {
                negatives += 1;
            }
        }
        assert!(negatives >= 18, "only {negatives}/20 rejected");
    }

    #[test]
    fn variance_check_examples() {
        let mixed =
            DensityMatrix::new(ComplexMatrix::identity(4).scale_re(0.25), vec![2, 2]).unwrap();
        let b = bell_operator(&chsh(), &chsh_optimal_for_phi_plus()).unwrap();
        let report = variance_check(&mixed, &b, &[0]).unwrap();
        assert!(report.holds && report.ppt_partition);

        // singlet is not PPT; lhs = 2 at the optimal operator, reported
        let obs = planar_observable_set(&[[0.0, FRAC_PI_2], [PI + FRAC_PI_4, PI - FRAC_PI_4]]);
        let b = bell_operator(&chsh(), &obs).unwrap();
        let report = variance_check(&singlet(), &b, &[0]).unwrap();
        assert!((report.lhs - 2.0).abs() < 1e-10);
        assert!(!report.ppt_partition);
    }

    #[test]
    fn maximal_violation_decomposition_has_factor_two() {
        // with unitary observables: (A-B)*(A-B) + (A-B)(A-B)* = 2(1 - B/√2);
        // the right-hand side is PSD and hence B ≤ √2·1
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..10 {
            let a1m = planar_observable(rng.gen::<f64>() * PI).matrix().clone();
            let a2m = planar_observable(rng.gen::<f64>() * PI).matrix().clone();
            let b1m = planar_observable(rng.gen::<f64>() * PI).matrix().clone();
            let b2m = planar_observable(rng.gen::<f64>() * PI).matrix().clone();
            let id = ComplexMatrix::identity(2);
            let i = Complex64::new(0.0, 1.0);

            let a_full = a1m.add(&a2m.scale(i)).scale_re(0.5).kron(&id);
            let b_small =
                b1m.add(&b2m).add(&b1m.sub(&b2m).scale(i)).scale_re(1.0 / (2.0 * SQRT_2));
            let b_full = id.kron(&b_small);

            let diff = a_full.sub(&b_full);
            let lhs = diff.adjoint().matmul(&diff).add(&diff.matmul(&diff.adjoint()));

            let obs = ObservableSet::new(vec![
                [
                    HermitianObservable::from_trusted(a1m.clone()),
                    HermitianObservable::from_trusted(a2m.clone()),
                ],
                [
                    HermitianObservable::from_trusted(b1m.clone()),
                    HermitianObservable::from_trusted(b2m.clone()),
                ],
            ])
            .unwrap();
            let bell = bell_operator(&chsh(), &obs).unwrap();
            let rhs = ComplexMatrix::identity(4).sub(&bell.scale_re(1.0 / SQRT_2)).scale_re(2.0);
            assert!(lhs.sub(&rhs).sup_norm() < 1e-12);
            assert!(lhs.hermitian_eigenvalues()[0] > -1e-12);
            assert!(bell.hermitian_eigenvalues().last().unwrap() <= &(SQRT_2 + 1e-12));
        }
    }
}
