//! Classical correlation polytopes as explicit vertex sets, with LP
//! membership certificates, brute-force facet enumeration in low dimension,
//! and the Euler–Poincaré consistency check.
//!
//! Vertices are the classically attainable extreme points (deterministic
//! configurations); the facets of their hull are exactly the tight Bell
//! inequalities. Facet enumeration works in affine-hull coordinates centered
//! at the vertex centroid, so every supporting hyperplane has a positive
//! offset and can be scaled to ⟨g, u⟩ ≤ 1. Degenerate inputs (probability
//! polytopes are never full-dimensional) are reported together with the
//! affine hull used.

use crate::correlation::ExperimentShape;
use crate::error::{BellError, Result};
use crate::simplex::{self, Feasibility};

/// Geometric tolerance used for hull ranks, facet tests and dedup.
pub const GEOMETRY_TOL: f64 = 1e-9;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// A finite point set in R^D; duplicates are removed on construction.
#[derive(Debug, Clone)]
pub struct PointSet {
    dim: usize,
    points: Vec<Vec<f64>>,
}

impl PointSet {
    pub fn new(dim: usize, points: Vec<Vec<f64>>) -> Result<Self> {
        for (i, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(BellError::Malformed(format!(
                    "point {i} has dimension {}, expected {dim}",
                    p.len()
                )));
            }
        }
        let mut unique: Vec<Vec<f64>> = Vec::with_capacity(points.len());
        for p in points {
            let duplicate = unique
                .iter()
                .any(|q| p.iter().zip(q).all(|(a, b)| (a - b).abs() <= GEOMETRY_TOL));
            if !duplicate {
                unique.push(p);
            }
        }
        Ok(Self { dim, points: unique })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn centroid(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.dim];
        for p in &self.points {
            for (ci, pi) in c.iter_mut().zip(p) {
                *ci += pi;
            }
        }
        let n = self.points.len() as f64;
        c.iter_mut().for_each(|v| *v /= n);
        c
    }
}

/// Distinct full-correlation vectors ξ_c(s) = ∏_k a_k(s_k) of all
/// deterministic ±1 assignments, in dimension 2ⁿ.
pub fn correlation_vertices(n: usize) -> Result<PointSet> {
    if n == 0 || n > 5 {
        return Err(BellError::SizeGuard(format!("correlation vertices supported for 1 ≤ n ≤ 5, got {n}")));
    }
    let dim = 1usize << n;
    let mut points = Vec::new();
    // assignment: two bits per site, bit (2k + setting) set means a = -1
    for assignment in 0..(1usize << (2 * n)) {
        let mut xi = vec![0.0; dim];
        for (s, value) in xi.iter_mut().enumerate() {
            let mut parity = 0usize;
            for k in 0..n {
                let setting = (s >> k) & 1;
                parity ^= (assignment >> (2 * k + setting)) & 1;
            }
            *value = if parity & 1 == 1 { -1.0 } else { 1.0 };
        }
        points.push(xi);
    }
    PointSet::new(dim, points)
}

/// 0/1 indicator vertices of classical configurations in the raw probability
/// coordinates of a (n, m, v) experiment, dimension (m·v)ⁿ.
pub fn probability_vertices(shape: ExperimentShape) -> Result<PointSet> {
    let dim = shape.setting_tuples() * shape.outcome_tuples();
    if dim > 4096 {
        return Err(BellError::SizeGuard(format!(
            "probability polytope dimension {dim} exceeds 4096"
        )));
    }
    let mut points = Vec::new();
    for c_flat in 0..shape.configurations() {
        // configuration digits over (party, setting), party-major
        let mut digits = vec![0usize; shape.n * shape.m];
        let mut rest = c_flat;
        for slot in (0..digits.len()).rev() {
            digits[slot] = rest % shape.v;
            rest /= shape.v;
        }
        let mut vertex = vec![0.0; dim];
        for s_flat in 0..shape.setting_tuples() {
            let settings = shape.split(s_flat, shape.m);
            let outcomes: Vec<usize> =
                (0..shape.n).map(|k| digits[k * shape.m + settings[k]]).collect();
            let a_flat = shape.join(&outcomes, shape.v);
            vertex[s_flat * shape.outcome_tuples() + a_flat] = 1.0;
        }
        points.push(vertex);
    }
    PointSet::new(dim, points)
}

/// A closed halfspace ⟨normal, x⟩ ≤ offset.
#[derive(Debug, Clone, PartialEq)]
pub struct Halfspace {
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl Halfspace {
    pub fn contains(&self, p: &[f64], tol: f64) -> bool {
        dot(&self.normal, p) <= self.offset + tol
    }
}

/// Outcome of the convex-combination membership LP.
#[derive(Debug, Clone)]
pub struct MembershipCertificate {
    pub inside: bool,
    /// Convex weights over the vertices reproducing the point (inside).
    pub weights: Option<Vec<f64>>,
    /// A strictly separating halfspace (outside), scaled so the maximum over
    /// vertices of ⟨normal, ε⟩ is 1 whenever that maximum is positive.
    pub separator: Option<Halfspace>,
}

/// Decide whether `x` lies in the convex hull of `vertices`, with a
/// reconstruction or separation certificate.
pub fn lp_membership(x: &[f64], vertices: &PointSet) -> Result<MembershipCertificate> {
    if x.len() != vertices.dim() {
        return Err(BellError::DimensionMismatch { expected: vertices.dim(), got: x.len() });
    }
    let d = vertices.dim();
    let k = vertices.len();
    let mut rows: Vec<Vec<f64>> = (0..d)
        .map(|coord| vertices.points().iter().map(|p| p[coord]).collect())
        .collect();
    rows.push(vec![1.0; k]);
    let mut rhs = x.to_vec();
    rhs.push(1.0);

    match simplex::solve_feasibility(&rows, &rhs, GEOMETRY_TOL)? {
        Feasibility::Feasible(w) => {
            Ok(MembershipCertificate { inside: true, weights: Some(w), separator: None })
        }
        Feasibility::Infeasible { farkas } => {
            // farkas = (g, t): ⟨g, ε_c⟩ + t ≤ 0 for all vertices while
            // ⟨g, x⟩ + t > 0; so g separates with bound -t.
            let g = &farkas[..d];
            let bound = -farkas[d];
            let max_on_vertices = vertices
                .points()
                .iter()
                .map(|p| dot(g, p))
                .fold(f64::NEG_INFINITY, f64::max);
            let separator = if max_on_vertices > 1e-12 {
                Halfspace {
                    normal: g.iter().map(|v| v / max_on_vertices).collect(),
                    offset: 1.0,
                }
            } else {
                // Hyperplane through or past the origin; report unscaled.
                Halfspace { normal: g.to_vec(), offset: bound }
            };
            Ok(MembershipCertificate { inside: false, weights: None, separator: Some(separator) })
        }
    }
}

/// Orthonormal affine-hull frame of a point set: `origin` is the vertex
/// centroid, `basis` spans the differences.
#[derive(Debug, Clone)]
pub struct AffineHull {
    pub origin: Vec<f64>,
    pub basis: Vec<Vec<f64>>,
}

impl AffineHull {
    fn from_points(points: &PointSet) -> Self {
        let origin = points.centroid();
        let ambient = points.dim();
        let mut basis: Vec<Vec<f64>> = Vec::new();
        for p in points.points() {
            let mut r: Vec<f64> = p.iter().zip(&origin).map(|(a, b)| a - b).collect();
            for b in &basis {
                let c = dot(&r, b);
                for (ri, bi) in r.iter_mut().zip(b) {
                    *ri -= c * bi;
                }
            }
            // re-orthogonalize once; classical Gram-Schmidt drift is enough
            // to matter at 1e-9 tolerances
            for b in &basis {
                let c = dot(&r, b);
                for (ri, bi) in r.iter_mut().zip(b) {
                    *ri -= c * bi;
                }
            }
            let len = norm(&r);
            if len > GEOMETRY_TOL {
                r.iter_mut().for_each(|v| *v /= len);
                basis.push(r);
                if basis.len() == ambient {
                    break;
                }
            }
        }
        Self { origin, basis }
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Hull coordinates of an ambient point.
    pub fn project(&self, p: &[f64]) -> Vec<f64> {
        let centered: Vec<f64> = p.iter().zip(&self.origin).map(|(a, b)| a - b).collect();
        self.basis.iter().map(|b| dot(&centered, b)).collect()
    }

    /// Ambient point of hull coordinates.
    pub fn lift(&self, u: &[f64]) -> Vec<f64> {
        let mut p = self.origin.clone();
        for (c, b) in u.iter().zip(&self.basis) {
            for (pi, bi) in p.iter_mut().zip(b) {
                *pi += c * bi;
            }
        }
        p
    }

    /// Distance from `p` to the hull subspace.
    pub fn residual(&self, p: &[f64]) -> f64 {
        let back = self.lift(&self.project(p));
        p.iter().zip(&back).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    }
}

/// Facets of a polytope, in hull coordinates, plus the frame to lift them.
#[derive(Debug, Clone)]
pub struct FacetEnumeration {
    pub hull: AffineHull,
    /// Facets ⟨g, u⟩ ≤ 1 in hull coordinates (centroid interior ⇒ offset 1).
    pub facets: Vec<Halfspace>,
    /// Whether the input was full-dimensional in its ambient space.
    pub full_dimensional: bool,
}

impl FacetEnumeration {
    /// Facets mapped back to ambient coordinates. Offsets are rescaled to 1
    /// where positive; hyperplanes through the ambient origin keep offset 0
    /// with a unit normal.
    pub fn ambient_facets(&self) -> Vec<Halfspace> {
        self.facets
            .iter()
            .map(|f| {
                let mut normal = vec![0.0; self.hull.origin.len()];
                for (c, b) in f.normal.iter().zip(&self.hull.basis) {
                    for (ni, bi) in normal.iter_mut().zip(b) {
                        *ni += c * bi;
                    }
                }
                let offset = f.offset + dot(&normal, &self.hull.origin);
                if offset > GEOMETRY_TOL {
                    Halfspace { normal: normal.iter().map(|v| v / offset).collect(), offset: 1.0 }
                } else if offset.abs() <= GEOMETRY_TOL {
                    let len = norm(&normal).max(1e-300);
                    Halfspace { normal: normal.iter().map(|v| v / len).collect(), offset: 0.0 }
                } else {
                    Halfspace { normal, offset }
                }
            })
            .collect()
    }

    /// Classify an ambient point: it must lie in the affine hull and satisfy
    /// every facet.
    pub fn classify(&self, p: &[f64], tol: f64) -> bool {
        if self.hull.residual(p) > tol {
            return false;
        }
        let u = self.hull.project(p);
        self.facets.iter().all(|f| f.contains(&u, tol))
    }
}

/// Enumerate the facets of conv(vertices) by brute force over vertex
/// subsets spanning hyperplanes. Guards: affine dimension ≤ 8 and at most 64
/// vertices.
pub fn facet_enumeration(vertices: &PointSet) -> Result<FacetEnumeration> {
    if vertices.len() < 2 {
        return Err(BellError::Malformed("facet enumeration needs at least two points".into()));
    }
    if vertices.len() > 64 {
        return Err(BellError::SizeGuard(format!(
            "facet enumeration capped at 64 vertices, got {}",
            vertices.len()
        )));
    }
    let hull = AffineHull::from_points(vertices);
    let d = hull.dim();
    if d > 8 {
        return Err(BellError::SizeGuard(format!("facet enumeration capped at affine dimension 8, got {d}")));
    }
    if d == 0 {
        return Err(BellError::Malformed("all points coincide".into()));
    }
    let full_dimensional = d == vertices.dim();

    let pts: Vec<Vec<f64>> = vertices.points().iter().map(|p| hull.project(p)).collect();

    // DFS over increasing vertex indices, solving ⟨u_i, g⟩ = 1 for each
    // spanning subset via incremental forward elimination of augmented rows
    // [u | 1]. Rows are normalized and eliminated against earlier rows only,
    // so push/pop is cheap; back-substitution runs in reverse insertion
    // order. The centroid sits at the hull origin strictly inside the
    // polytope, so every facet hyperplane misses the origin and has the
    // offset-1 form.
    struct Search<'a> {
        pts: &'a [Vec<f64>],
        d: usize,
        rows: Vec<Vec<f64>>,
        pivots: Vec<usize>,
        facets: Vec<Vec<f64>>,
    }

    impl Search<'_> {
        fn run(&mut self, start: usize) {
            let depth = self.rows.len();
            if depth == self.d {
                self.emit_candidate();
                return;
            }
            let remaining = self.d - depth;
            let last = self.pts.len().saturating_sub(remaining);
            for idx in start..=last {
                let mut row: Vec<f64> =
                    self.pts[idx].iter().copied().chain(std::iter::once(1.0)).collect();
                for (r, &p) in self.rows.iter().zip(&self.pivots) {
                    let f = row[p];
                    if f != 0.0 {
                        for (x, y) in row.iter_mut().zip(r) {
                            *x -= f * y;
                        }
                    }
                }
                let (pivot, mag) = row[..self.d]
                    .iter()
                    .enumerate()
                    .map(|(j, v)| (j, v.abs()))
                    .fold((0, 0.0), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
                if mag <= GEOMETRY_TOL {
                    // idx is affinely dependent on the prefix (or forces an
                    // inconsistent system); it cannot extend this basis
                    continue;
                }
                let scale = row[pivot];
                row.iter_mut().for_each(|v| *v /= scale);
                self.rows.push(row);
                self.pivots.push(pivot);
                self.run(idx + 1);
                self.rows.pop();
                self.pivots.pop();
            }
        }

        fn emit_candidate(&mut self) {
            let d = self.d;
            let mut g = vec![0.0; d];
            for i in (0..d).rev() {
                let mut v = self.rows[i][d];
                for j in (i + 1)..d {
                    v -= self.rows[i][self.pivots[j]] * g[self.pivots[j]];
                }
                g[self.pivots[i]] = v;
            }
            for p in self.pts.iter() {
                let val: f64 = p.iter().zip(&g).map(|(a, b)| a * b).sum();
                if val > 1.0 + GEOMETRY_TOL {
                    return;
                }
            }
            let duplicate = self
                .facets
                .iter()
                .any(|f| f.iter().zip(&g).all(|(a, b)| (a - b).abs() <= 1e-7));
            if !duplicate {
                self.facets.push(g);
            }
        }
    }

    let mut search =
        Search { pts: &pts, d, rows: Vec::new(), pivots: Vec::new(), facets: Vec::new() };
    search.run(0);
    let mut facets = search.facets;

    // canonical order (schedule-independent output)
    facets.sort_by(|a, b| {
        for (x, y) in a.iter().zip(b) {
            if (x - y).abs() > 1e-12 {
                return x.partial_cmp(y).unwrap();
            }
        }
        std::cmp::Ordering::Equal
    });

    let facets = facets.into_iter().map(|normal| Halfspace { normal, offset: 1.0 }).collect();
    Ok(FacetEnumeration { hull, facets, full_dimensional })
}

/// f-vector and Euler–Poincaré verdict of a small polytope.
#[derive(Debug, Clone)]
pub struct EulerReport {
    /// Face counts f_0 … f_{D-1} by dimension.
    pub f_vector: Vec<usize>,
    pub alternating_sum: i64,
    pub holds: bool,
}

/// Enumerate the full face lattice (faces = intersections of facets) and
/// check Σ_j (-1)^j f_j = 1 - (-1)^D. Guard: affine dimension ≤ 4.
pub fn euler_check(vertices: &PointSet) -> Result<EulerReport> {
    let enumeration = facet_enumeration(vertices)?;
    let d = enumeration.hull.dim();
    if d > 4 {
        return Err(BellError::SizeGuard(format!("face lattice brute force capped at dimension 4, got {d}")));
    }
    let pts: Vec<Vec<f64>> =
        vertices.points().iter().map(|p| enumeration.hull.project(p)).collect();
    let n = pts.len();
    assert!(n <= 64, "guarded by facet_enumeration");

    // vertex masks of each facet
    let mut faces: Vec<u64> = Vec::new();
    for f in &enumeration.facets {
        let mut mask = 0u64;
        for (i, p) in pts.iter().enumerate() {
            if (dot(&f.normal, p) - f.offset).abs() <= GEOMETRY_TOL {
                mask |= 1 << i;
            }
        }
        if mask != 0 {
            faces.push(mask);
        }
    }
    // close under intersections
    let mut all: Vec<u64> = faces.clone();
    let mut frontier = faces.clone();
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for &m in &frontier {
            for &f in &faces {
                let inter = m & f;
                if inter != 0 && !all.contains(&inter) {
                    all.push(inter);
                    next.push(inter);
                }
            }
        }
        frontier = next;
    }

    // count faces by affine dimension of their vertex sets
    let mut f_vector = vec![0usize; d];
    for &mask in &all {
        let members: Vec<&Vec<f64>> =
            (0..n).filter(|&i| mask >> i & 1 == 1).map(|i| &pts[i]).collect();
        let dim = affine_rank(&members);
        if dim < d {
            f_vector[dim] += 1;
        }
    }

    let alternating_sum: i64 =
        f_vector.iter().enumerate().map(|(j, &fj)| if j % 2 == 0 { fj as i64 } else { -(fj as i64) }).sum();
    let expected = 1 - if d % 2 == 0 { 1 } else { -1 };
    Ok(EulerReport { f_vector, alternating_sum, holds: alternating_sum == expected })
}

fn affine_rank(points: &[&Vec<f64>]) -> usize {
    if points.is_empty() {
        return 0;
    }
    let d = points[0].len();
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for p in &points[1..] {
        let mut r: Vec<f64> = p.iter().zip(points[0].iter()).map(|(a, b)| a - b).collect();
        for b in &basis {
            let c = dot(&r, b);
            for (ri, bi) in r.iter_mut().zip(b) {
                *ri -= c * bi;
            }
        }
        let len = norm(&r);
        if len > GEOMETRY_TOL {
            r.iter_mut().for_each(|v| *v /= len);
            basis.push(r);
            if basis.len() == d {
                break;
            }
        }
    }
    basis.len()
}
