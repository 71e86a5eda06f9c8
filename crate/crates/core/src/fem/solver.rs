//! Sparse linear solves: direct LU with partial pivoting, restarted GMRES fallback.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::LuError;
use faer::sparse::linalg::solvers::Lu;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;

use super::sparse::{dot, norm2, SparseOperator};
use crate::error::{GelError, Result};

/// Relative residual accepted by [`Factorization::solve`].
pub const RESIDUAL_TOL: f64 = 1e-10;
/// Systems larger than this are solved iteratively by [`solve_auto`].
pub const DIRECT_LIMIT: usize = 400_000;

/// An LU factorization of a square operator, reusable across right-hand sides.
pub struct Factorization {
    op: SparseOperator,
    lu: Lu<usize, f64>,
    norm_f: f64,
}

impl std::fmt::Debug for Factorization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Factorization").field("n", &self.op.n_rows).field("nnz", &self.op.nnz()).finish()
    }
}

impl Factorization {
    pub fn new(op: &SparseOperator) -> Result<Self> {
        if op.n_rows != op.n_cols {
            return Err(GelError::DimensionMismatch(format!("{}x{} is not square", op.n_rows, op.n_cols)));
        }
        let n = op.n_rows;
        let mut trip = Vec::with_capacity(op.nnz());
        for r in 0..n {
            for (c, v) in op.row(r) {
                trip.push(Triplet::new(r, c, v));
            }
        }
        let a = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &trip)
            .map_err(|e| GelError::DimensionMismatch(format!("{e:?}")))?;
        let lu = a.sp_lu().map_err(|e| match e {
            LuError::SymbolicSingular { index } => GelError::SingularMatrix { pivot: Some(index), step: None },
            LuError::Generic(_) => GelError::SingularMatrix { pivot: None, step: None },
        })?;
        Ok(Factorization { op: op.clone(), lu, norm_f: op.frobenius_norm() })
    }

    pub fn dim(&self) -> usize {
        self.op.n_rows
    }

    fn raw_solve(&self, rhs: &[f64]) -> Vec<f64> {
        let mut b = Mat::<f64>::from_fn(rhs.len(), 1, |i, _| rhs[i]);
        self.lu.solve_in_place(b.as_mut());
        (0..rhs.len()).map(|i| b[(i, 0)]).collect()
    }

    /// Solves and certifies ‖Ax − b‖ ≤ tol·(‖A‖_F‖x‖ + ‖b‖), with up to two
    /// steps of iterative refinement.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        if rhs.len() != self.dim() {
            return Err(GelError::DimensionMismatch(format!("rhs {} vs {}", rhs.len(), self.dim())));
        }
        let mut x = self.raw_solve(rhs);
        let bnorm = norm2(rhs);
        for _ in 0..3 {
            if x.iter().any(|v| !v.is_finite()) {
                return Err(GelError::SingularMatrix { pivot: None, step: None });
            }
            let ax = self.op.matvec(&x);
            let r: Vec<f64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
            if norm2(&r) <= RESIDUAL_TOL * (self.norm_f * norm2(&x) + bnorm) {
                return Ok(x);
            }
            let dx = self.raw_solve(&r);
            for (xi, d) in x.iter_mut().zip(&dx) {
                *xi += d;
            }
        }
        Err(GelError::SingularMatrix { pivot: None, step: None })
    }
}

/// Direct factorization and solve.
pub fn solve_sparse(op: &SparseOperator, rhs: &[f64]) -> Result<Vec<f64>> {
    Factorization::new(op)?.solve(rhs)
}

/// Direct solve below [`DIRECT_LIMIT`] unknowns, GMRES above.
pub fn solve_auto(op: &SparseOperator, rhs: &[f64]) -> Result<Vec<f64>> {
    if op.n_rows <= DIRECT_LIMIT {
        solve_sparse(op, rhs)
    } else {
        gmres(op, rhs, &GmresOptions::default())
    }
}

#[derive(Clone, Copy, Debug)]
pub struct GmresOptions {
    pub restart: usize,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for GmresOptions {
    fn default() -> Self {
        GmresOptions { restart: 60, max_iter: 20_000, tol: 1e-10 }
    }
}

/// Right-preconditioned restarted GMRES with a diagonal preconditioner;
/// zero diagonal entries (multiplier blocks) fall back to the row ∞-norm.
pub fn gmres(op: &SparseOperator, rhs: &[f64], opts: &GmresOptions) -> Result<Vec<f64>> {
    let n = op.n_rows;
    let inv_diag: Vec<f64> = (0..n)
        .map(|r| {
            let d = op.get(r, r);
            if d != 0.0 {
                1.0 / d
            } else {
                let m = op.row(r).fold(0.0f64, |m, (_, v)| m.max(v.abs()));
                if m > 0.0 {
                    1.0 / m
                } else {
                    1.0
                }
            }
        })
        .collect();
    let precond = |v: &[f64]| v.iter().zip(&inv_diag).map(|(a, b)| a * b).collect::<Vec<f64>>();
    let bnorm = norm2(rhs).max(f64::MIN_POSITIVE);
    let mut x = vec![0.0; n];
    let mut iters = 0;
    let mut rel = f64::INFINITY;
    while iters < opts.max_iter {
        let ax = op.matvec(&x);
        let r: Vec<f64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let beta = norm2(&r);
        rel = beta / bnorm;
        if rel <= opts.tol {
            return Ok(x);
        }
        let m = opts.restart;
        let mut v: Vec<Vec<f64>> = vec![r.iter().map(|ri| ri / beta).collect()];
        let mut h = vec![vec![0.0; m]; m + 1];
        let (mut cs, mut sn) = (vec![0.0; m], vec![0.0; m]);
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k_used = 0;
        for k in 0..m {
            iters += 1;
            let mut w = op.matvec(&precond(&v[k]));
            for (i, vi) in v.iter().enumerate() {
                h[i][k] = dot(&w, vi);
                for (wj, vj) in w.iter_mut().zip(vi) {
                    *wj -= h[i][k] * vj;
                }
            }
            h[k + 1][k] = norm2(&w);
            for i in 0..k {
                let t = cs[i] * h[i][k] + sn[i] * h[i + 1][k];
                h[i + 1][k] = -sn[i] * h[i][k] + cs[i] * h[i + 1][k];
                h[i][k] = t;
            }
            let den = h[k][k].hypot(h[k + 1][k]);
            cs[k] = if den == 0.0 { 1.0 } else { h[k][k] / den };
            sn[k] = if den == 0.0 { 0.0 } else { h[k + 1][k] / den };
            h[k][k] = den;
            let hk1 = h[k + 1][k];
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            k_used = k + 1;
            if g[k + 1].abs() / bnorm <= opts.tol || hk1 == 0.0 || iters >= opts.max_iter {
                break;
            }
            v.push(w.iter().map(|wi| wi / hk1).collect());
        }
        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let s: f64 = (i + 1..k_used).map(|j| h[i][j] * y[j]).sum();
            y[i] = (g[i] - s) / h[i][i];
        }
        let mut z = vec![0.0; n];
        for (i, yi) in y.iter().enumerate() {
            for (zj, vj) in z.iter_mut().zip(&v[i]) {
                *zj += yi * vj;
            }
        }
        for (xi, zi) in x.iter_mut().zip(precond(&z)) {
            *xi += zi;
        }
    }
    let ax = op.matvec(&x);
    let r: Vec<f64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let final_rel = norm2(&r) / bnorm;
    if final_rel <= opts.tol {
        Ok(x)
    } else {
        Err(GelError::IterationLimit { iterations: iters, residual: final_rel.min(rel) })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_returns_rhs() {
        let x = solve_sparse(&SparseOperator::identity(4), &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(x, vec![1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn two_by_two() {
        let a = SparseOperator::from_dense(&[vec![2.0, 1.0], vec![1.0, 2.0]]);
        let x = solve_sparse(&a, &[3.0, 3.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn singular_reports_pivot() {
        let a = SparseOperator::from_dense(&[vec![1.0, 0.0], vec![1.0, 0.0]]);
        match solve_sparse(&a, &[1.0, 1.0]) {
            Err(GelError::SingularMatrix { pivot, .. }) => assert_eq!(pivot, Some(1)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn numerically_singular_detected() {
        let a = SparseOperator::from_dense(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        assert!(matches!(solve_sparse(&a, &[1.0, 0.0]), Err(GelError::SingularMatrix { .. })));
    }

    #[test]
    fn gmres_matches_direct() {
        let n = 50;
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| match i as i64 - j as i64 {
                        0 => 4.0,
                        1 => -1.0,
                        -1 => -1.5,
                        _ => 0.0,
                    })
                    .collect()
            })
            .collect();
        let a = SparseOperator::from_dense(&rows);
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let x1 = solve_sparse(&a, &b).unwrap();
        let x2 = gmres(&a, &b, &GmresOptions::default()).unwrap();
        for (p, q) in x1.iter().zip(&x2) {
            assert!((p - q).abs() < 1e-8);
        }
    }

    #[test]
    fn gmres_iteration_limit() {
        let a = SparseOperator::from_dense(&[vec![0.0, 1.0], vec![-1.0, 0.0]]);
        let opts = GmresOptions { restart: 1, max_iter: 3, tol: 1e-14 };
        assert!(matches!(gmres(&a, &[1.0, 0.0], &opts), Err(GelError::IterationLimit { .. })));
    }
}
