//! Quasi-definite linear system of the splitting iteration,
//!
//! ```text
//! [ sigma I     A'          ] [x]   [r1]
//! [ A          -diag(1/rho) ] [v] = [r2]
//! ```
//!
//! stored as the upper triangle in compressed columns and factored with a
//! sparse LDL' after an approximate minimum degree ordering. The symbolic
//! factorization is computed once and shared between clones; only the
//! numeric factorization is redone when `rho` changes.

use std::sync::Arc;

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::cholesky::ldlt::factor::LdltRegularization;
use faer::sparse::linalg::cholesky::{
    factorize_symbolic_cholesky, CholeskySymbolicParams, SymbolicCholesky, SymbolicCholeskyRaw,
    SymmetricOrdering,
};
use faer::sparse::linalg::SupernodalThreshold;
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use faer::{Par, Side};

use super::SolverError;

#[derive(Clone)]
pub(crate) struct Kkt {
    n: usize,
    dim: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
    rho_pos: Vec<usize>,
    symbolic: Arc<SymbolicCholesky<usize>>,
    layout: Arc<Layout>,
    factor: Vec<f64>,
    signs: Vec<i8>,
}

/// Column structure of the simplicial factor. Each column of `factor`
/// starts with the pivot `D_jj` followed by the strictly lower entries of
/// the unit triangle `L`. `perm[i]` is the original index of pivot `i`.
#[derive(Debug)]
struct Layout {
    l_ptr: Vec<usize>,
    l_idx: Vec<usize>,
    perm: Vec<usize>,
}

impl std::fmt::Debug for Kkt {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Kkt")
            .field("dim", &self.dim)
            .field("nnz", &self.values.len())
            .field("factor_nnz", &self.factor.len())
            .finish()
    }
}

impl Kkt {
    /// `rows` is `A` in compressed rows: `(row_ptr, col_idx, vals)` with
    /// sorted column indices.
    pub(crate) fn new(
        n: usize,
        row_ptr: &[usize],
        col_idx: &[usize],
        vals: &[f64],
        sigma: f64,
        rho: &[f64],
    ) -> Result<Self, SolverError> {
        let m = rho.len();
        let dim = n + m;
        let mut col_ptr = Vec::with_capacity(dim + 1);
        let mut row_idx = Vec::with_capacity(n + vals.len() + m);
        let mut values = Vec::with_capacity(n + vals.len() + m);
        let mut rho_pos = Vec::with_capacity(m);
        col_ptr.push(0);
        for j in 0..n {
            row_idx.push(j);
            values.push(sigma);
            col_ptr.push(row_idx.len());
        }
        for i in 0..m {
            for k in row_ptr[i]..row_ptr[i + 1] {
                row_idx.push(col_idx[k]);
                values.push(vals[k]);
            }
            rho_pos.push(values.len());
            row_idx.push(n + i);
            values.push(-1.0 / rho[i]);
            col_ptr.push(row_idx.len());
        }
        let pattern = SymbolicSparseColMatRef::new_checked(dim, dim, &col_ptr, None, &row_idx);
        let symbolic = factorize_symbolic_cholesky(
            pattern,
            Side::Upper,
            SymmetricOrdering::Amd,
            CholeskySymbolicParams {
                supernodal_flop_ratio_threshold: SupernodalThreshold::FORCE_SIMPLICIAL,
                ..Default::default()
            },
        )
        .map_err(|e| SolverError::Factorization(format!("symbolic analysis failed: {e:?}")))?;
        let SymbolicCholeskyRaw::Simplicial(simplicial) = symbolic.raw() else {
            return Err(SolverError::Factorization("expected a simplicial factor".into()));
        };
        let l_ptr = simplicial.col_ptr().to_vec();
        let l_idx = simplicial.row_idx().to_vec();
        let perm = match symbolic.perm() {
            Some(p) => p.arrays().0.to_vec(),
            None => (0..dim).collect(),
        };
        let factor = vec![0.0; symbolic.len_val()];
        let signs = (0..dim).map(|k| if k < n { 1 } else { -1 }).collect();
        let mut kkt = Self {
            n,
            dim,
            col_ptr,
            row_idx,
            values,
            rho_pos,
            symbolic: Arc::new(symbolic),
            layout: Arc::new(Layout { l_ptr, l_idx, perm }),
            factor,
            signs,
        };
        kkt.factorize()?;
        Ok(kkt)
    }

    pub(crate) fn dim(&self) -> usize {
        self.dim
    }

    pub(crate) fn set_rho(&mut self, rho: &[f64]) -> Result<(), SolverError> {
        for (&pos, &r) in self.rho_pos.iter().zip(rho) {
            self.values[pos] = -1.0 / r;
        }
        self.factorize()
    }

    fn factorize(&mut self) -> Result<(), SolverError> {
        let par = Par::Seq;
        let mut buffer = MemBuffer::new(
            self.symbolic
                .factorize_numeric_ldlt_scratch::<f64>(par, Default::default()),
        );
        let pattern =
            SymbolicSparseColMatRef::new_checked(self.dim, self.dim, &self.col_ptr, None, &self.row_idx);
        let matrix = SparseColMatRef::new(pattern, &self.values);
        let regularization = LdltRegularization {
            dynamic_regularization_signs: Some(&self.signs),
            dynamic_regularization_delta: 1e-9,
            dynamic_regularization_epsilon: 1e-14,
        };
        self.symbolic
            .factorize_numeric_ldlt(
                &mut self.factor,
                matrix,
                Side::Upper,
                regularization,
                par,
                MemStack::new(&mut buffer),
                Default::default(),
            )
            .map_err(|e| SolverError::Factorization(format!("LDL' breakdown: {e:?}")))?;
        if self.factor.iter().any(|v| !v.is_finite()) {
            return Err(SolverError::Factorization(
                "non-finite entry in LDL' factor".into(),
            ));
        }
        Ok(())
    }

    /// Solves in place. `scratch` must hold `dim` entries.
    pub(crate) fn solve(&self, rhs: &mut [f64], scratch: &mut [f64]) {
        let Layout { l_ptr, l_idx, perm } = &*self.layout;
        let y = &mut scratch[..self.dim];
        for (yi, &p) in y.iter_mut().zip(perm) {
            *yi = rhs[p];
        }
        for j in 0..self.dim {
            let yj = y[j];
            if yj != 0.0 {
                let span = l_ptr[j] + 1..l_ptr[j + 1];
                for (&i, &l) in l_idx[span.clone()].iter().zip(&self.factor[span]) {
                    y[i] -= l * yj;
                }
            }
        }
        for j in (0..self.dim).rev() {
            let span = l_ptr[j] + 1..l_ptr[j + 1];
            let mut acc = y[j] / self.factor[l_ptr[j]];
            for (&i, &l) in l_idx[span.clone()].iter().zip(&self.factor[span]) {
                acc -= l * y[i];
            }
            y[j] = acc;
        }
        for (yi, &p) in y.iter().zip(perm) {
            rhs[p] = *yi;
        }
    }

    #[allow(dead_code)]
    pub(crate) fn n(&self) -> usize {
        self.n
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_quasi_definite_system() {
        // A = [1 2], sigma = 1, rho = 1:  K = [[1,0,1],[0,1,2],[1,2,-1]]
        let kkt = Kkt::new(2, &[0, 2], &[0, 1], &[1.0, 2.0], 1.0, &[1.0]).unwrap();
        let mut rhs = vec![1.0, 2.0, 3.0];
        let mut work = vec![0.0; 3];
        kkt.solve(&mut rhs, &mut work);
        let k = [[1.0, 0.0, 1.0], [0.0, 1.0, 2.0], [1.0, 2.0, -1.0]];
        for (i, row) in k.iter().enumerate() {
            let lhs: f64 = row.iter().zip(&rhs).map(|(a, x)| a * x).sum();
            assert!((lhs - [1.0, 2.0, 3.0][i]).abs() < 1e-12);
        }
    }
}
