//! Essential boundary conditions and dof ties.

use std::collections::BTreeMap;

use super::sparse::{SparseOperator, Triplets};
use crate::error::{GelError, Result};

/// Merged constraint set; repeated dofs must carry identical values.
pub fn constraint_map(dofs: &[usize], values: &[f64], n: usize) -> Result<BTreeMap<usize, f64>> {
    if dofs.len() != values.len() {
        return Err(GelError::DimensionMismatch(format!("{} dofs, {} values", dofs.len(), values.len())));
    }
    let mut map = BTreeMap::new();
    for (&d, &v) in dofs.iter().zip(values) {
        if d >= n {
            return Err(GelError::DimensionMismatch(format!("dof {d} outside system of size {n}")));
        }
        if let Some(old) = map.insert(d, v) {
            if old != v {
                return Err(GelError::ConflictingDirichlet { dof: d });
            }
        }
    }
    Ok(map)
}

/// Symmetric elimination of the matrix: constrained rows and columns are
/// zeroed and a unit diagonal placed on each constrained dof.
pub fn eliminate_matrix(op: &SparseOperator, constrained: &[bool]) -> SparseOperator {
    let mut t = Triplets::new(op.n_rows, op.n_cols);
    for r in 0..op.n_rows {
        if constrained[r] {
            t.push(r, r, 1.0);
            continue;
        }
        for (c, v) in op.row(r) {
            if !constrained[c] && v != 0.0 {
                t.push(r, c, v);
            }
        }
    }
    t.finalize(op.symmetric)
}

/// Right-hand side matching [`eliminate_matrix`]; `op` is the unconstrained matrix.
pub fn eliminate_rhs(op: &SparseOperator, rhs: &[f64], map: &BTreeMap<usize, f64>) -> Vec<f64> {
    let mut out = rhs.to_vec();
    let nonzero: Vec<(usize, f64)> = map.iter().filter(|(_, &v)| v != 0.0).map(|(&d, &v)| (d, v)).collect();
    if !nonzero.is_empty() {
        let mut lift = vec![0.0; op.n_cols];
        for &(d, v) in &nonzero {
            lift[d] = v;
        }
        let a_lift = op.matvec(&lift);
        for (o, a) in out.iter_mut().zip(&a_lift) {
            *o -= a;
        }
    }
    for (&d, &v) in map {
        out[d] = v;
    }
    out
}

pub fn apply_dirichlet(
    op: &SparseOperator,
    rhs: &[f64],
    dofs: &[usize],
    values: &[f64],
) -> Result<(SparseOperator, Vec<f64>)> {
    if op.n_rows != op.n_cols || rhs.len() != op.n_rows {
        return Err(GelError::DimensionMismatch("apply_dirichlet needs a square system".into()));
    }
    if dofs.is_empty() {
        return Ok((op.clone(), rhs.to_vec()));
    }
    let map = constraint_map(dofs, values, op.n_rows)?;
    let mut constrained = vec![false; op.n_rows];
    for &d in map.keys() {
        constrained[d] = true;
    }
    Ok((eliminate_matrix(op, &constrained), eliminate_rhs(op, rhs, &map)))
}

/// Ties dof `j` to the backward difference of dof `i` for each pair `(i, j)`:
/// row i absorbs row j, and row j becomes `x_j − x_i/dt = −x_iⁿ/dt`.
pub fn apply_tie(op: &SparseOperator, pairs: &[(usize, usize)], dt: f64) -> SparseOperator {
    let mut partner: Vec<Option<usize>> = vec![None; op.n_rows];
    let mut tied = vec![false; op.n_rows];
    for &(i, j) in pairs {
        partner[i] = Some(j);
        tied[j] = true;
    }
    let mut t = Triplets::new(op.n_rows, op.n_cols);
    for r in 0..op.n_rows {
        if tied[r] {
            continue;
        }
        for (c, v) in op.row(r) {
            t.push(r, c, v);
        }
        if let Some(j) = partner[r] {
            for (c, v) in op.row(j) {
                t.push(r, c, v);
            }
        }
    }
    for &(i, j) in pairs {
        t.push(j, j, 1.0);
        t.push(j, i, -1.0 / dt);
    }
    t.finalize(false)
}

/// Right-hand side matching [`apply_tie`].
pub fn tie_rhs(rhs: &mut [f64], pairs: &[(usize, usize)], previous: &[f64], dt: f64) {
    for &(i, j) in pairs {
        rhs[i] += rhs[j];
        rhs[j] = -previous[i] / dt;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_constrained() {
        let a = SparseOperator::from_dense(&[vec![2.0, 1.0], vec![1.0, 2.0]]);
        let (m, b) = apply_dirichlet(&a, &[3.0, 3.0], &[0, 1], &[0.0, 0.0]).unwrap();
        assert_eq!(m, SparseOperator { symmetric: true, ..SparseOperator::identity(2) });
        assert_eq!(b, vec![0.0, 0.0]);
    }

    #[test]
    fn one_constrained() {
        let a = SparseOperator::from_dense(&[vec![2.0, 1.0], vec![1.0, 2.0]]);
        let (m, b) = apply_dirichlet(&a, &[3.0, 3.0], &[0], &[5.0]).unwrap();
        assert_eq!(b, vec![5.0, 3.0 - 5.0]);
        assert_eq!(m.get(1, 0), 0.0);
        assert_eq!(m.get(0, 0), 1.0);
        assert!(m.is_symmetric(0.0));
    }

    #[test]
    fn empty_list_is_noop() {
        let a = SparseOperator::from_dense(&[vec![2.0, 1.0], vec![1.0, 2.0]]);
        let (m, b) = apply_dirichlet(&a, &[3.0, 4.0], &[], &[]).unwrap();
        assert_eq!(m, a);
        assert_eq!(b, vec![3.0, 4.0]);
    }

    #[test]
    fn conflicting_values() {
        let a = SparseOperator::identity(3);
        let r = apply_dirichlet(&a, &[0.0; 3], &[1, 1], &[0.0, 1.0]);
        assert!(matches!(r, Err(GelError::ConflictingDirichlet { dof: 1 })));
    }
}
