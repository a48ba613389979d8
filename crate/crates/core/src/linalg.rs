//! Compressed sparse column matrices with a fixed pattern, direct solvers
//! backed by faer's sparse LU and Cholesky factorizations, and a
//! multifrontal LU for the large coupled systems.
//!
//! Patterns are built once from element connectivity; values are accumulated
//! in caller order, so assembling the same contributions in the same order
//! gives bitwise-identical matrices.

use std::sync::Arc;

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::LuError;
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use faer::dyn_stack::{MemBuffer, MemStack};
use faer::{Mat, Par, Side};

use crate::error::LinearSolveError;

pub mod multifrontal;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparsityPattern {
    nrows: usize,
    ncols: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
}

impl SparsityPattern {
    /// Pattern from unsorted, possibly repeated `(row, col)` entries.
    pub fn from_entries(
        nrows: usize,
        ncols: usize,
        entries: impl IntoIterator<Item = (usize, usize)>,
    ) -> Self {
        let mut cols: Vec<Vec<usize>> = vec![Vec::new(); ncols];
        for (r, c) in entries {
            debug_assert!(r < nrows && c < ncols);
            cols[c].push(r);
        }
        let mut col_ptr = Vec::with_capacity(ncols + 1);
        let mut row_idx = Vec::new();
        col_ptr.push(0);
        for mut rows in cols {
            rows.sort_unstable();
            rows.dedup();
            row_idx.extend_from_slice(&rows);
            col_ptr.push(row_idx.len());
        }
        Self {
            nrows,
            ncols,
            col_ptr,
            row_idx,
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.row_idx.len()
    }

    /// Position of `(row, col)` in the value array.
    #[inline]
    pub fn find(&self, row: usize, col: usize) -> Option<usize> {
        let start = self.col_ptr[col];
        let rows = &self.row_idx[start..self.col_ptr[col + 1]];
        rows.binary_search(&row).ok().map(|k| start + k)
    }

    fn symbolic(&self) -> SymbolicSparseColMatRef<'_, usize> {
        SymbolicSparseColMatRef::new_checked(
            self.nrows,
            self.ncols,
            &self.col_ptr,
            None,
            &self.row_idx,
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CscMatrix {
    pattern: Arc<SparsityPattern>,
    values: Vec<f64>,
}

impl CscMatrix {
    pub fn zeros(pattern: Arc<SparsityPattern>) -> Self {
        let values = vec![0.0; pattern.nnz()];
        Self { pattern, values }
    }

    /// Matrix from triplets; repeated entries are summed in the given order.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let pattern = Arc::new(SparsityPattern::from_entries(
            nrows,
            ncols,
            triplets.iter().map(|&(r, c, _)| (r, c)),
        ));
        let mut m = Self::zeros(pattern);
        for &(r, c, v) in triplets {
            m.add(r, c, v);
        }
        m
    }

    pub fn pattern(&self) -> &Arc<SparsityPattern> {
        &self.pattern
    }

    pub fn nrows(&self) -> usize {
        self.pattern.nrows
    }

    pub fn ncols(&self) -> usize {
        self.pattern.ncols
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn clear(&mut self) {
        self.values.iter_mut().for_each(|v| *v = 0.0);
    }

    /// Add `value` at `(row, col)`; the entry must be in the pattern.
    #[inline]
    pub fn add(&mut self, row: usize, col: usize, value: f64) {
        let k = self
            .pattern
            .find(row, col)
            .unwrap_or_else(|| panic!("entry ({row}, {col}) not in sparsity pattern"));
        self.values[k] += value;
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pattern.find(row, col).map_or(0.0, |k| self.values[k])
    }

    /// Iterate stored entries as `(row, col, value)` in column-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.ncols()).flat_map(move |c| {
            (self.pattern.col_ptr[c]..self.pattern.col_ptr[c + 1])
                .map(move |k| (self.pattern.row_idx[k], c, self.values[k]))
        })
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols());
        let mut y = vec![0.0; self.nrows()];
        for (c, &xc) in x.iter().enumerate() {
            for k in self.pattern.col_ptr[c]..self.pattern.col_ptr[c + 1] {
                y[self.pattern.row_idx[k]] += self.values[k] * xc;
            }
        }
        y
    }

    /// `y^T A x`.
    pub fn bilinear(&self, y: &[f64], x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.ncols());
        assert_eq!(y.len(), self.nrows());
        let mut s = 0.0;
        for (c, &xc) in x.iter().enumerate() {
            for k in self.pattern.col_ptr[c]..self.pattern.col_ptr[c + 1] {
                s += y[self.pattern.row_idx[k]] * self.values[k] * xc;
            }
        }
        s
    }

    pub fn quadratic(&self, x: &[f64]) -> f64 {
        self.bilinear(x, x)
    }

    /// `alpha * self + beta * other` for matrices sharing a pattern.
    pub fn linear_combination(&self, alpha: f64, other: &CscMatrix, beta: f64) -> CscMatrix {
        assert!(
            Arc::ptr_eq(&self.pattern, &other.pattern) || self.pattern == other.pattern,
            "patterns differ"
        );
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| alpha * a + beta * b)
            .collect();
        CscMatrix {
            pattern: self.pattern.clone(),
            values,
        }
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.triplets()
            .all(|(r, c, v)| (v - self.get(c, r)).abs() <= tol * (1.0 + v.abs()))
    }

    fn as_faer(&self) -> SparseColMatRef<'_, usize, f64> {
        SparseColMatRef::new(self.pattern.symbolic(), &self.values)
    }
}

fn finite(x: Vec<f64>) -> Result<Vec<f64>, LinearSolveError> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(x)
    } else {
        Err(LinearSolveError::NonFinite)
    }
}

fn column(rhs: &[f64]) -> Mat<f64> {
    Mat::from_fn(rhs.len(), 1, |i, _| rhs[i])
}

fn to_vec(m: &Mat<f64>) -> Vec<f64> {
    (0..m.nrows()).map(|i| m[(i, 0)]).collect()
}

type SymbolicLuInner = faer::sparse::linalg::lu::SymbolicLu<usize>;

/// General sparse LU (left-looking, partial pivoting, COLAMD column order).
/// The symbolic analysis is cached and reused while the pattern stays the
/// same. Suited to small and moderate systems; see [`multifrontal`] for the
/// large mesh-structured ones.
#[derive(Debug, Default)]
pub struct LuSolver {
    symbolic: Option<(Arc<SparsityPattern>, Arc<SymbolicLuInner>)>,
}

impl LuSolver {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn factorize(&mut self, a: &CscMatrix) -> Result<LuFactors, LinearSolveError> {
        use faer::sparse::linalg::lu::{factorize_symbolic_lu, LuSymbolicParams, NumericLu};
        use faer::sparse::linalg::SupernodalThreshold;
        let backend = |e: &dyn std::fmt::Debug| LinearSolveError::Backend(format!("{e:?}"));
        let reuse = matches!(&self.symbolic, Some((p, _)) if Arc::ptr_eq(p, a.pattern()) || **p == **a.pattern());
        if !reuse {
            let params = LuSymbolicParams {
                supernodal_flop_ratio_threshold: SupernodalThreshold::FORCE_SIMPLICIAL,
                ..Default::default()
            };
            let symbolic = factorize_symbolic_lu(a.pattern.symbolic(), params).map_err(|e| backend(&e))?;
            self.symbolic = Some((a.pattern.clone(), Arc::new(symbolic)));
        }
        let symbolic = self.symbolic.as_ref().expect("set above").1.clone();
        let mut numeric = NumericLu::new();
        let scratch = symbolic.factorize_numeric_lu_scratch::<f64>(Par::Seq, Default::default());
        let mut mem = MemBuffer::try_new(scratch).map_err(|e| backend(&e))?;
        symbolic
            .factorize_numeric_lu(&mut numeric, a.as_faer(), Par::Seq, MemStack::new(&mut mem), Default::default())
            .map_err(|e| match e {
                LuError::SymbolicSingular { index } => LinearSolveError::Singular(index),
                LuError::Generic(e) => backend(&e),
            })?;
        Ok(LuFactors { symbolic, numeric })
    }
}

pub struct LuFactors {
    symbolic: Arc<SymbolicLuInner>,
    numeric: faer::sparse::linalg::lu::NumericLu<usize, f64>,
}

impl LuFactors {
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>, LinearSolveError> {
        use faer::sparse::linalg::lu::LuRef;
        let mut b = column(rhs);
        let scratch = self.symbolic.solve_in_place_scratch::<f64>(1, Par::Seq);
        let mut mem = MemBuffer::try_new(scratch).map_err(|e| LinearSolveError::Backend(format!("{e:?}")))?;
        LuRef::new_unchecked(&self.symbolic, &self.numeric).solve_in_place_with_conj(
            faer::Conj::No,
            b.as_mut(),
            Par::Seq,
            MemStack::new(&mut mem),
        );
        finite(to_vec(&b))
    }
}

/// One-shot sparse LU solve.
pub fn solve_lu(a: &CscMatrix, rhs: &[f64]) -> Result<Vec<f64>, LinearSolveError> {
    LuSolver::new().factorize(a)?.solve(rhs)
}

/// Sparse Cholesky factorization of a symmetric positive definite matrix.
pub struct CholeskyFactors {
    llt: faer::sparse::linalg::solvers::Llt<usize, f64>,
}

impl CholeskyFactors {
    pub fn new(a: &CscMatrix) -> Result<Self, LinearSolveError> {
        use faer::sparse::linalg::solvers::{Llt, SymbolicLlt};
        faer::set_global_parallelism(Par::Seq);
        let symbolic = SymbolicLlt::try_new(a.pattern.symbolic(), Side::Lower)
            .map_err(|e| LinearSolveError::Backend(format!("{e:?}")))?;
        let llt = Llt::try_new_with_symbolic(symbolic, a.as_faer(), Side::Lower)
            .map_err(|_| LinearSolveError::NotPositiveDefinite)?;
        Ok(Self { llt })
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>, LinearSolveError> {
        let mut b = column(rhs);
        self.llt.solve_in_place(b.as_mut());
        finite(to_vec(&b))
    }
}

pub fn solve_spd(a: &CscMatrix, rhs: &[f64]) -> Result<Vec<f64>, LinearSolveError> {
    CholeskyFactors::new(a)?.solve(rhs)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}
