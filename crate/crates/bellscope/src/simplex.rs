//! Phase-1 dense simplex for equality-form feasibility problems:
//! find x ≥ 0 with A x = b,
//! deciding feasibility and producing either a solution or a Farkas
//! certificate `y` with `yᵀA ≤ 0` and `yᵀb > 0`. Pivoting uses Bland's rule,
//! so runs are deterministic and cycle-free. Rows are scaled to unit sup-norm
//! before solving. Problem sizes in this crate stay below ~70 rows and ~70
//! columns, which keeps a dense tableau entirely adequate.

use crate::error::{BellError, Result};

/// Outcome of a feasibility solve.
#[derive(Debug, Clone)]
pub enum Feasibility {
    /// A nonnegative solution of `A x = b`.
    Feasible(Vec<f64>),
    /// Farkas vector `y`: `yᵀA ≤ 0` componentwise while `yᵀb > 0`.
    Infeasible { farkas: Vec<f64> },
}

/// Decide whether `{x ≥ 0 : A x = b}` is nonempty.
///
/// `rows` holds the rows of `A`; `tol` is the pivot/feasibility tolerance
/// (1e-9 is the crate default).
pub fn solve_feasibility(rows: &[Vec<f64>], b: &[f64], tol: f64) -> Result<Feasibility> {
    let m = rows.len();
    if m == 0 {
        return Ok(Feasibility::Feasible(Vec::new()));
    }
    let n = rows[0].len();
    for (i, r) in rows.iter().enumerate() {
        if r.len() != n {
            return Err(BellError::Malformed(format!(
                "LP row {i} has {} entries, expected {n}",
                r.len()
            )));
        }
    }
    if b.len() != m {
        return Err(BellError::DimensionMismatch { expected: m, got: b.len() });
    }

    // Row scaling and sign normalization (b >= 0). `row_factor[i]` maps a
    // multiplier for the scaled system back to the original one.
    let mut a = vec![vec![0.0; n]; m];
    let mut rhs = vec![0.0; m];
    let mut row_factor = vec![1.0; m];
    for i in 0..m {
        let mut mag = b[i].abs();
        for j in 0..n {
            mag = mag.max(rows[i][j].abs());
        }
        let scale = if mag > 0.0 { 1.0 / mag } else { 1.0 };
        let sign = if b[i] * scale < 0.0 { -1.0 } else { 1.0 };
        row_factor[i] = scale * sign;
        for j in 0..n {
            a[i][j] = rows[i][j] * row_factor[i];
        }
        rhs[i] = b[i] * row_factor[i];
    }

    // Tableau over columns [original | artificial], artificial part = I.
    // `basis[i]` is the variable basic in row i; artificials are n..n+m.
    let total = n + m;
    let mut t = vec![vec![0.0; total]; m];
    for i in 0..m {
        t[i][..n].copy_from_slice(&a[i]);
        t[i][n + i] = 1.0;
    }
    let mut basis: Vec<usize> = (n..total).collect();

    // Objective row for minimizing the sum of artificials:
    // obj[j] = c_j - Σ_i T[i][j] with c = (0,…,0,1,…,1).
    let mut obj = vec![0.0; total];
    for j in 0..total {
        let c = if j >= n { 1.0 } else { 0.0 };
        obj[j] = c - t.iter().map(|row| row[j]).sum::<f64>();
    }

    let max_iters = 200 * (m + n) + 1000;
    for _ in 0..max_iters {
        // Bland: entering column = lowest index with negative reduced cost.
        let entering = (0..total).find(|&j| obj[j] < -tol);
        let Some(entering) = entering else { break };

        // Ratio test; ties broken by smallest basic-variable index (Bland).
        let mut leave: Option<usize> = None;
        let mut best_ratio = f64::INFINITY;
        for i in 0..m {
            if t[i][entering] > tol {
                let ratio = rhs[i] / t[i][entering];
                let better = match leave {
                    None => true,
                    Some(l) => {
                        ratio < best_ratio - 1e-14
                            || (ratio <= best_ratio + 1e-14 && basis[i] < basis[l])
                    }
                };
                if better {
                    best_ratio = ratio;
                    leave = Some(i);
                }
            }
        }
        let Some(leave) = leave else {
            // Phase-1 objective is bounded below by 0, so an unbounded ray
            // cannot occur with consistent arithmetic.
            return Err(BellError::Malformed("phase-1 simplex reported unbounded".into()));
        };

        // Pivot on (leave, entering).
        let piv = t[leave][entering];
        for v in t[leave].iter_mut() {
            *v /= piv;
        }
        rhs[leave] /= piv;
        for i in 0..m {
            if i != leave && t[i][entering].abs() > 0.0 {
                let f = t[i][entering];
                for j in 0..total {
                    t[i][j] -= f * t[leave][j];
                }
                rhs[i] -= f * rhs[leave];
                if rhs[i].abs() < 1e-15 {
                    rhs[i] = 0.0;
                }
            }
        }
        let f = obj[entering];
        for j in 0..total {
            obj[j] -= f * t[leave][j];
        }
        basis[leave] = entering;
    }

    // Current objective: total weight still sitting on artificial variables.
    let obj_value: f64 =
        (0..m).filter(|&i| basis[i] >= n).map(|i| rhs[i]).sum();

    if obj_value.abs() <= tol {
        let mut x = vec![0.0; n];
        for i in 0..m {
            if basis[i] < n {
                x[basis[i]] = rhs[i].max(0.0);
            }
        }
        Ok(Feasibility::Feasible(x))
    } else {
        // Simplex multipliers from the artificial reduced costs:
        // obj[n + i] = 1 - y_i in the scaled system.
        let mut farkas = vec![0.0; m];
        for i in 0..m {
            farkas[i] = (1.0 - obj[n + i]) * row_factor[i];
        }
        Ok(Feasibility::Infeasible { farkas })
    }
}
