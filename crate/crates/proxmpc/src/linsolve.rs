//! Dense LU and restarted GMRES for the per-instant linear systems.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    DenseLu,
    Gmres,
}

#[derive(Debug, Clone)]
pub struct LinearSolverConfig {
    pub method: SolveMethod,
    pub gmres_restart: usize,
    pub gmres_tol: f64,
    pub gmres_max_iter: usize,
    /// Step for directional finite differences when a Jacobian is built by
    /// forward differences of the residual.
    pub fd_step: f64,
    /// Optional damping: solve `(A + λI) d = b` instead of `A d = b`.
    /// Off (0.0) by default and in all benchmark runs.
    pub tikhonov: f64,
}

impl Default for LinearSolverConfig {
    fn default() -> Self {
        LinearSolverConfig {
            method: SolveMethod::DenseLu,
            gmres_restart: 30,
            gmres_tol: 1e-8,
            gmres_max_iter: 200,
            fd_step: 1e-6,
            tikhonov: 0.0,
        }
    }
}

impl LinearSolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gmres_tol > 0.0 && self.gmres_tol < 1.0) {
            return Err(Error::invalid("gmres_tol", "must lie in (0, 1)"));
        }
        if !(self.fd_step > 0.0) {
            return Err(Error::invalid("fd_step", "must be positive"));
        }
        if self.gmres_restart == 0 {
            return Err(Error::invalid("gmres_restart", "must be at least 1"));
        }
        if self.gmres_max_iter == 0 {
            return Err(Error::invalid("gmres_max_iter", "must be at least 1"));
        }
        if self.tikhonov < 0.0 {
            return Err(Error::invalid("tikhonov", "must be non-negative"));
        }
        Ok(())
    }
}

/// Solves `A x = b` by LU with partial pivoting.
///
/// A pivot below `n·ε·max|A|` reports the offending pivot index; that is the
/// runtime manifestation of a rank-deficient linearization.
pub fn lu_solve(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let n = a.nrows();
    assert_eq!(a.ncols(), n, "lu_solve requires a square matrix");
    if b.len() != n {
        return Err(Error::dimension("lu_solve rhs", n, b.len()));
    }

    let mut lu = a.clone();
    let mut x = b.clone();
    let scale = lu.amax();
    let pivot_tol = f64::EPSILON * (n as f64) * scale.max(f64::MIN_POSITIVE);

    // right-looking elimination on the column-major storage; the factored
    // column is copied out once so the trailing update runs on disjoint
    // contiguous slices
    let mut lcol = vec![0.0f64; n];
    for col in 0..n {
        // partial pivoting: largest magnitude in the remaining column
        let mut pivot_row = col;
        let mut pivot_val = lu[(col, col)].abs();
        for row in (col + 1)..n {
            let v = lu[(row, col)].abs();
            if v > pivot_val {
                pivot_val = v;
                pivot_row = row;
            }
        }
        if !(pivot_val > pivot_tol) || !pivot_val.is_finite() {
            return Err(Error::Singular { pivot: col });
        }
        if pivot_row != col {
            lu.swap_rows(col, pivot_row);
            x.swap_rows(col, pivot_row);
        }

        let data = lu.as_mut_slice();
        let pivot = data[col * n + col];
        for row in (col + 1)..n {
            let f = data[col * n + row] / pivot;
            data[col * n + row] = f;
            lcol[row] = f;
        }
        for c in (col + 1)..n {
            let head = data[c * n + col];
            if head != 0.0 {
                let column = &mut data[c * n + col + 1..c * n + n];
                for (offset, entry) in column.iter_mut().enumerate() {
                    *entry -= head * lcol[col + 1 + offset];
                }
            }
        }
        let xc = x[col];
        for row in (col + 1)..n {
            x[row] -= lcol[row] * xc;
        }
    }

    // back substitution, column-oriented
    let data = lu.as_slice();
    for col in (0..n).rev() {
        x[col] /= data[col * n + col];
        let xc = x[col];
        if xc != 0.0 {
            let column = &data[col * n..col * n + col];
            for (row, &entry) in column.iter().enumerate() {
                x[row] -= entry * xc;
            }
        }
    }
    Ok(x)
}

#[derive(Debug, Clone)]
pub struct GmresReport {
    /// Total inner (Arnoldi) iterations across restart cycles.
    pub iterations: usize,
    pub converged: bool,
    /// A zero Arnoldi norm was hit; the projected solution at that point is
    /// returned.
    pub breakdown: bool,
    pub relative_residual: f64,
}

/// Restarted GMRES on a matrix-free operator `v ↦ A v`, starting from zero.
///
/// Returns the iterate together with an iteration report; convergence means
/// the relative residual dropped below `cfg.gmres_tol` before
/// `cfg.gmres_max_iter` inner iterations.
pub fn gmres_solve<F>(apply: F, b: &DVector<f64>, cfg: &LinearSolverConfig) -> (DVector<f64>, GmresReport)
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    let n = b.len();
    let mut x = DVector::zeros(n);
    let b_norm = b.norm();
    if b_norm == 0.0 {
        return (
            x,
            GmresReport {
                iterations: 0,
                converged: true,
                breakdown: false,
                relative_residual: 0.0,
            },
        );
    }

    let restart = cfg.gmres_restart.min(n.max(1));
    let mut total_iters = 0usize;
    let mut breakdown = false;
    let mut rel_res;

    'outer: loop {
        let r = b - apply(&x);
        let beta = r.norm();
        rel_res = beta / b_norm;
        if rel_res <= cfg.gmres_tol || total_iters >= cfg.gmres_max_iter {
            break;
        }

        let mut basis: Vec<DVector<f64>> = Vec::with_capacity(restart + 1);
        basis.push(r.scale(1.0 / beta));
        let mut hess = DMatrix::zeros(restart + 1, restart);
        let mut cs = vec![0.0f64; restart];
        let mut sn = vec![0.0f64; restart];
        let mut g = DVector::zeros(restart + 1);
        g[0] = beta;

        let mut k_done = 0usize;
        for k in 0..restart {
            total_iters += 1;
            let mut w = apply(&basis[k]);
            // modified Gram-Schmidt
            for (j, vj) in basis.iter().enumerate().take(k + 1) {
                let hjk = w.dot(vj);
                hess[(j, k)] = hjk;
                w.axpy(-hjk, vj, 1.0);
            }
            let h_next = w.norm();
            hess[(k + 1, k)] = h_next;

            let mut hit_breakdown = false;
            if h_next > f64::EPSILON * beta.max(1.0) {
                basis.push(w.scale(1.0 / h_next));
            } else {
                hit_breakdown = true;
            }

            // apply accumulated Givens rotations to the new column
            for j in 0..k {
                let t = cs[j] * hess[(j, k)] + sn[j] * hess[(j + 1, k)];
                hess[(j + 1, k)] = -sn[j] * hess[(j, k)] + cs[j] * hess[(j + 1, k)];
                hess[(j, k)] = t;
            }
            let (c, s) = givens(hess[(k, k)], hess[(k + 1, k)]);
            cs[k] = c;
            sn[k] = s;
            hess[(k, k)] = c * hess[(k, k)] + s * hess[(k + 1, k)];
            hess[(k + 1, k)] = 0.0;
            let tg = c * g[k] + s * g[k + 1];
            g[k + 1] = -s * g[k] + c * g[k + 1];
            g[k] = tg;

            k_done = k + 1;
            rel_res = g[k_done].abs() / b_norm;
            if rel_res <= cfg.gmres_tol || total_iters >= cfg.gmres_max_iter || hit_breakdown {
                breakdown = hit_breakdown && rel_res > cfg.gmres_tol;
                update_iterate(&mut x, &hess, &g, &basis, k_done);
                break 'outer;
            }
        }
        // restart: fold the cycle into the iterate and recompute the residual
        update_iterate(&mut x, &hess, &g, &basis, k_done);
    }

    let converged = rel_res <= cfg.gmres_tol;
    (
        x,
        GmresReport {
            iterations: total_iters,
            converged,
            breakdown,
            relative_residual: rel_res,
        },
    )
}

/// Solves the small triangular least-squares system of a GMRES cycle and adds
/// the correction to `x`.
fn update_iterate(
    x: &mut DVector<f64>,
    hess: &DMatrix<f64>,
    g: &DVector<f64>,
    basis: &[DVector<f64>],
    k_done: usize,
) {
    if k_done == 0 {
        return;
    }
    let mut y = vec![0.0f64; k_done];
    for i in (0..k_done).rev() {
        let mut sum = g[i];
        for j in (i + 1)..k_done {
            sum -= hess[(i, j)] * y[j];
        }
        y[i] = sum / hess[(i, i)];
    }
    for (j, &yj) in y.iter().enumerate() {
        x.axpy(yj, &basis[j], 1.0);
    }
}

fn givens(a: f64, b: f64) -> (f64, f64) {
    if b == 0.0 {
        (1.0, 0.0)
    } else if a.abs() > b.abs() {
        let t = b / a;
        let c = 1.0 / (1.0 + t * t).sqrt();
        (c, c * t)
    } else {
        let t = a / b;
        let s = 1.0 / (1.0 + t * t).sqrt();
        (s * t, s)
    }
}
