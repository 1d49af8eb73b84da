//! The complete family of full-correlation inequalities for n parties with
//! two dichotomic observables per site.
//!
//! Each member is indexed by a sign vector f ∈ {±1}^(2^n); its coefficients
//! are β(s) = 2⁻ⁿ Σ_r f(r)(-1)^⟨r,s⟩, normalized so the classical maximum is
//! exactly 1. Membership of a correlation vector ξ in the classical region
//! is equivalent to the single nonlinear condition Σ_r |ξ̂(r)| ≤ 1 on its
//! transform — the region is a hyper-octahedron in the ξ̂ coordinates.
//!
//! Bit order: party k occupies bit k-1 of both the setting string s and the
//! transform index r (party 1 least significant). This is the one shared
//! codec for every 2ⁿ-indexed vector in the crate.

use crate::correlation::ClassicalConfiguration;
use crate::error::{BellError, Result};

/// Unnormalized Walsh–Hadamard transform, y[r] = Σ_s x[s]·(-1)^⟨r,s⟩,
/// in place in O(n·2ⁿ).
pub fn walsh_hadamard(values: &mut [f64]) {
    let n = values.len();
    assert!(n.is_power_of_two(), "transform length must be a power of two");
    let mut h = 1;
    while h < n {
        let mut i = 0;
        while i < n {
            for j in i..i + h {
                let a = values[j];
                let b = values[j + h];
                values[j] = a + b;
                values[j + h] = a - b;
            }
            i += 2 * h;
        }
        h *= 2;
    }
}

/// A sign vector f ∈ {±1}^(2ⁿ) indexing one family member.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignVector {
    n: usize,
    f: Vec<i8>,
}

impl SignVector {
    pub fn new(n: usize, f: Vec<i8>) -> Result<Self> {
        if f.len() != 1 << n {
            return Err(BellError::DimensionMismatch { expected: 1 << n, got: f.len() });
        }
        if let Some(idx) = f.iter().position(|&v| v != 1 && v != -1) {
            return Err(BellError::Malformed(format!(
                "sign vector entry {idx} is {} (must be ±1)",
                f[idx]
            )));
        }
        Ok(Self { n, f })
    }

    /// Decode the k-th of the 2^(2ⁿ) sign vectors (bit r set ⇒ f(r) = -1).
    pub fn from_index(n: usize, index: u64) -> Self {
        let f = (0..1usize << n).map(|r| if index >> r & 1 == 1 { -1 } else { 1 }).collect();
        Self { n, f }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[i8] {
        &self.f
    }
}

/// Coefficients β(s) of one inequality Σ_s β(s)ξ(s) ≤ 1.
#[derive(Debug, Clone, PartialEq)]
pub struct BellCoefficients {
    n: usize,
    beta: Vec<f64>,
}

impl BellCoefficients {
    pub fn new(n: usize, beta: Vec<f64>) -> Result<Self> {
        if beta.len() != 1 << n {
            return Err(BellError::DimensionMismatch { expected: 1 << n, got: beta.len() });
        }
        Ok(Self { n, beta })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    /// Σ_s β(s)·ξ(s).
    pub fn evaluate(&self, xi: &FullCorrelationVector) -> f64 {
        assert_eq!(self.n, xi.n);
        self.beta.iter().zip(&xi.xi).map(|(b, x)| b * x).sum()
    }

    /// Value on the ±1 product vector of a deterministic configuration.
    pub fn evaluate_configuration(&self, config: &ClassicalConfiguration) -> f64 {
        let mut total = 0.0;
        for s in 0..self.beta.len() {
            let mut prod = 1.0;
            for (k, per_setting) in config.assignment.iter().enumerate() {
                let setting = (s >> k) & 1;
                prod *= crate::correlation::outcome_sign(per_setting[setting]);
            }
            total += self.beta[s] * prod;
        }
        total
    }
}

/// A vector of full correlation functions ξ(s) ∈ [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct FullCorrelationVector {
    n: usize,
    xi: Vec<f64>,
}

impl FullCorrelationVector {
    pub fn new(n: usize, xi: Vec<f64>) -> Result<Self> {
        if xi.len() != 1 << n {
            return Err(BellError::DimensionMismatch { expected: 1 << n, got: xi.len() });
        }
        if let Some(idx) = xi.iter().position(|x| x.abs() > 1.0 + 1e-9) {
            return Err(BellError::Malformed(format!(
                "correlation entry {idx} is {} (must lie in [-1, 1])",
                xi[idx]
            )));
        }
        Ok(Self { n, xi })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn xi(&self) -> &[f64] {
        &self.xi
    }
}

/// Transform-side coordinates ξ̂(r) of a correlation vector.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierSpectrum {
    n: usize,
    xi_hat: Vec<f64>,
}

impl FourierSpectrum {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn xi_hat(&self) -> &[f64] {
        &self.xi_hat
    }

    /// Inverse transform back to ξ.
    pub fn inverse(&self) -> FullCorrelationVector {
        let mut xi = self.xi_hat.clone();
        walsh_hadamard(&mut xi);
        FullCorrelationVector { n: self.n, xi }
    }
}

/// β(s) = 2⁻ⁿ Σ_r f(r)(-1)^⟨r,s⟩.
pub fn beta_from_f(f: &SignVector) -> BellCoefficients {
    let mut beta: Vec<f64> = f.f.iter().map(|&v| v as f64).collect();
    walsh_hadamard(&mut beta);
    let norm = 1.0 / (1 << f.n) as f64;
    beta.iter_mut().for_each(|b| *b *= norm);
    BellCoefficients { n: f.n, beta }
}

/// Inverse transform f(r) = Σ_s β(s)(-1)^⟨r,s⟩; errors when the result is
/// not a ±1 vector, i.e. the coefficients are not a family member.
pub fn f_from_beta(beta: &BellCoefficients) -> Result<SignVector> {
    let mut f = beta.beta.clone();
    walsh_hadamard(&mut f);
    let mut out = Vec::with_capacity(f.len());
    for (r, &v) in f.iter().enumerate() {
        if (v - 1.0).abs() <= 1e-9 {
            out.push(1);
        } else if (v + 1.0).abs() <= 1e-9 {
            out.push(-1);
        } else {
            return Err(BellError::NotInFamily { index: r, value: v });
        }
    }
    Ok(SignVector { n: beta.n, f: out })
}

#[derive(Debug, Clone)]
pub struct ClassicalMax {
    pub value: f64,
    pub argmax: ClassicalConfiguration,
}

/// Maximum of Σ_s β(s)·∏_k a_k(s_k) over all ±1 assignments, by brute force
/// over the 2^(2(n-1)) assignments of the first n-1 sites (the last site is
/// optimized in closed form).
pub fn classical_max(beta: &BellCoefficients) -> Result<ClassicalMax> {
    let n = beta.n;
    if n > 14 {
        return Err(BellError::SizeGuard(format!(
            "classical maximum is brute force over 2^(2n) assignments; n = {n} > 14"
        )));
    }
    if n == 0 {
        return Err(BellError::Malformed("empty inequality".into()));
    }

    let half = 1usize << (n - 1);
    let mut best = f64::NEG_INFINITY;
    let mut best_assignment = 0usize;
    let mut best_last = [1.0_f64, 1.0];

    // Assignment encoding for the first n-1 sites: two bits per site,
    // bit 2k = a_{k+1}(0), bit 2k+1 = a_{k+1}(1); bit set means outcome -1.
    for assignment in 0..(1usize << (2 * (n - 1))) {
        let mut u = [0.0_f64; 2];
        for s in 0..half {
            let mut parity = 0u32;
            for k in 0..(n - 1) {
                let setting = (s >> k) & 1;
                parity ^= (assignment >> (2 * k + setting)) as u32 & 1;
            }
            let sign = if parity & 1 == 1 { -1.0 } else { 1.0 };
            u[0] += sign * beta.beta[s];
            u[1] += sign * beta.beta[s + half];
        }
        let value = u[0].abs() + u[1].abs();
        if value > best {
            best = value;
            best_assignment = assignment;
            best_last = [if u[0] >= 0.0 { 1.0 } else { -1.0 }, if u[1] >= 0.0 { 1.0 } else { -1.0 }];
        }
    }

    let mut rows: Vec<Vec<usize>> = (0..n - 1)
        .map(|k| {
            (0..2)
                .map(|setting| ((best_assignment >> (2 * k + setting)) & 1) as usize)
                .collect()
        })
        .collect();
    rows.push(best_last.iter().map(|&v| if v > 0.0 { 0 } else { 1 }).collect());
    let argmax = ClassicalConfiguration::new(rows, 2)?;
    Ok(ClassicalMax { value: best, argmax })
}

#[derive(Debug, Clone)]
pub struct Membership {
    pub inside: bool,
    pub l1_mass: f64,
    pub spectrum: FourierSpectrum,
}

/// Hyper-octahedron test: ξ is classical iff Σ_r |ξ̂(r)| ≤ 1 with
/// ξ̂(r) = 2⁻ⁿ Σ_s ξ(s)(-1)^⟨r,s⟩.
pub fn lhv_membership(xi: &FullCorrelationVector) -> Membership {
    let mut xi_hat = xi.xi.clone();
    walsh_hadamard(&mut xi_hat);
    let norm = 1.0 / (1 << xi.n) as f64;
    xi_hat.iter_mut().for_each(|v| *v *= norm);
    let l1_mass: f64 = xi_hat.iter().map(|v| v.abs()).sum();
    Membership {
        inside: l1_mass <= 1.0 + 1e-12,
        l1_mass,
        spectrum: FourierSpectrum { n: xi.n, xi_hat },
    }
}

/// Coefficients of the n-party inequality built by the nesting recursion
/// B_n = (B_{n-1}/2)⊗(A_n + A_n') + (B_{n-1}'/2)⊗(A_n - A_n'), B_1 = A_1,
/// where the primed polynomial swaps both settings on every site.
pub fn mermin(n: usize) -> Result<BellCoefficients> {
    if !(2..=14).contains(&n) {
        return Err(BellError::SizeGuard(format!("recursion supported for 2 ≤ n ≤ 14, got {n}")));
    }
    let mut beta = vec![1.0, 0.0]; // B_1 = A_1(setting 0)
    for level in 1..n {
        let len = 1usize << level;
        let mask = len - 1;
        let mut next = vec![0.0; len << 1];
        for s in 0..len {
            let swapped = !s & mask; // every site's settings exchanged
            next[s] = (beta[s] + beta[swapped]) / 2.0;
            next[s + len] = (beta[s] - beta[swapped]) / 2.0;
        }
        beta = next;
    }
    Ok(BellCoefficients { n, beta })
}

/// All 2^(2ⁿ) family members, streamed without duplicates.
pub fn enumerate_family(n: usize) -> Result<impl Iterator<Item = BellCoefficients>> {
    if n > 4 {
        return Err(BellError::SizeGuard(format!(
            "family has 2^(2^n) members; enumeration capped at n = 4, got {n}"
        )));
    }
    let count: u64 = 1u64 << (1u32 << n);
    Ok((0..count).map(move |index| beta_from_f(&SignVector::from_index(n, index))))
}

/// Orbit representative under site-local setting swaps and per-(site,
/// setting) outcome sign flips: the lexicographically smallest coefficient
/// vector in the orbit. Lets callers compare inequalities "equal up to
/// relabeling".
pub fn canonical_form(beta: &BellCoefficients) -> BellCoefficients {
    let n = beta.n;
    let len = beta.beta.len();
    let mut best = beta.beta.clone();

    // Per site: 2 setting orders × 4 sign patterns = 8 local relabelings.
    let mut site_ops = 1usize;
    for _ in 0..n {
        site_ops *= 8;
    }
    for op in 0..site_ops {
        let mut candidate = vec![0.0; len];
        for s in 0..len {
            let mut src = 0usize;
            let mut sign = 1.0;
            let mut code = op;
            for k in 0..n {
                let local = code % 8;
                code /= 8;
                let swap = local & 1 == 1;
                let flip0 = local & 2 != 0;
                let flip1 = local & 4 != 0;
                let sk = (s >> k) & 1;
                let source_setting = if swap { 1 - sk } else { sk };
                src |= source_setting << k;
                if (sk == 0 && flip0) || (sk == 1 && flip1) {
                    sign = -sign;
                }
            }
            candidate[s] = sign * beta.beta[src];
        }
        if lex_less(&candidate, &best) {
            best = candidate;
        }
    }
    BellCoefficients { n, beta: best }
}

fn lex_less(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        if (x - y).abs() > 1e-12 {
            return x < y;
        }
    }
    false
}
