//! Multifrontal LU for structurally symmetric sparse matrices with a
//! caller-supplied supernode partition (typically a nested dissection).
//!
//! Each front is factored densely with partial pivoting restricted to its
//! own (fully summed) variables; there are no delayed pivots. The assembly
//! tree is derived from the partition: the parent of a supernode is the
//! earliest supernode that owns one of its boundary variables.

use std::sync::Arc;

use faer::linalg::matmul::matmul;
use faer::linalg::solvers::{PartialPivLu, Solve};
use faer::{Accum, Mat, Par};

use super::{CscMatrix, SparsityPattern};
use crate::error::LinearSolveError;

#[derive(Debug, Clone)]
struct Front {
    own: Vec<usize>,
    boundary: Vec<usize>,
    children: Vec<usize>,
}

/// Supernodes, their boundaries and the assembly tree.
#[derive(Debug, Clone)]
pub struct MultifrontalSymbolic {
    pattern: Arc<SparsityPattern>,
    fronts: Vec<Front>,
    supernode_of: Vec<usize>,
    /// For each row, `(column, value position)` pairs.
    rows: Vec<Vec<(usize, usize)>>,
}

impl MultifrontalSymbolic {
    /// `supernodes` lists the variables of each supernode in elimination
    /// order and must partition `0..n` exactly.
    pub fn new(pattern: Arc<SparsityPattern>, supernodes: Vec<Vec<usize>>) -> Result<Self, LinearSolveError> {
        let n = pattern.nrows();
        if pattern.ncols() != n {
            return Err(LinearSolveError::Backend("matrix must be square".into()));
        }
        let mut supernode_of = vec![usize::MAX; n];
        for (s, vars) in supernodes.iter().enumerate() {
            for &v in vars {
                if v >= n || supernode_of[v] != usize::MAX {
                    return Err(LinearSolveError::Backend(format!("variable {v} is out of range or repeated")));
                }
                supernode_of[v] = s;
            }
        }
        if let Some(v) = supernode_of.iter().position(|&s| s == usize::MAX) {
            return Err(LinearSolveError::Backend(format!("variable {v} is not in any supernode")));
        }

        let mut rows = vec![Vec::new(); n];
        for c in 0..n {
            for p in pattern.col_ptr[c]..pattern.col_ptr[c + 1] {
                rows[pattern.row_idx[p]].push((c, p));
            }
        }

        let mut fronts: Vec<Front> = Vec::with_capacity(supernodes.len());
        let mut children_of: Vec<Vec<usize>> = vec![Vec::new(); supernodes.len()];
        let mut mark = vec![usize::MAX; n];
        for (s, own) in supernodes.into_iter().enumerate() {
            let mut boundary = Vec::new();
            let mut visit = |v: usize, boundary: &mut Vec<usize>| {
                if supernode_of[v] > s && mark[v] != s {
                    mark[v] = s;
                    boundary.push(v);
                }
            };
            for &v in &own {
                for p in pattern.col_ptr[v]..pattern.col_ptr[v + 1] {
                    visit(pattern.row_idx[p], &mut boundary);
                }
                for &(c, _) in &rows[v] {
                    visit(c, &mut boundary);
                }
            }
            let children = std::mem::take(&mut children_of[s]);
            for &c in &children {
                for &v in &fronts[c].boundary {
                    visit(v, &mut boundary);
                }
            }
            boundary.sort_unstable_by_key(|&v| (supernode_of[v], v));
            if let Some(&first) = boundary.first() {
                children_of[supernode_of[first]].push(s);
            }
            fronts.push(Front { own, boundary, children });
        }
        Ok(Self {
            pattern,
            fronts,
            supernode_of,
            rows,
        })
    }

    pub fn pattern(&self) -> &Arc<SparsityPattern> {
        &self.pattern
    }

    pub fn num_supernodes(&self) -> usize {
        self.fronts.len()
    }

    /// Largest front dimension.
    pub fn max_front(&self) -> usize {
        self.fronts.iter().map(|f| f.own.len() + f.boundary.len()).max().unwrap_or(0)
    }

    /// Dense `f64` entries kept by a numeric factorization.
    pub fn factor_entries(&self) -> usize {
        self.fronts
            .iter()
            .map(|f| {
                let (k, m) = (f.own.len(), f.boundary.len());
                k * k + 2 * k * m
            })
            .sum()
    }
}

struct FrontFactor {
    lu: PartialPivLu<f64>,
    /// `F₁₁⁻¹ F₁₂`.
    x: Mat<f64>,
    f21: Mat<f64>,
}

/// Numeric multifrontal factorization.
pub struct MultifrontalLu {
    symbolic: Arc<MultifrontalSymbolic>,
    factors: Vec<FrontFactor>,
}

impl MultifrontalLu {
    pub fn factorize(symbolic: &Arc<MultifrontalSymbolic>, a: &CscMatrix) -> Result<Self, LinearSolveError> {
        if !Arc::ptr_eq(a.pattern(), &symbolic.pattern) && **a.pattern() != *symbolic.pattern {
            return Err(LinearSolveError::Backend("matrix pattern differs from the analysed one".into()));
        }
        let n = a.nrows();
        let values = a.values();
        let pattern = &symbolic.pattern;
        let sn = &symbolic.supernode_of;
        let mut pos = vec![usize::MAX; n];
        let mut updates: Vec<Option<Mat<f64>>> = (0..symbolic.fronts.len()).map(|_| None).collect();
        let mut factors = Vec::with_capacity(symbolic.fronts.len());
        for (s, front) in symbolic.fronts.iter().enumerate() {
            let (k, m) = (front.own.len(), front.boundary.len());
            let f = k + m;
            for (i, &v) in front.own.iter().chain(&front.boundary).enumerate() {
                pos[v] = i;
            }
            let mut fm = Mat::<f64>::zeros(f, f);
            for (jl, &v) in front.own.iter().enumerate() {
                for p in pattern.col_ptr[v]..pattern.col_ptr[v + 1] {
                    let r = pattern.row_idx[p];
                    if sn[r] >= s {
                        fm[(pos[r], jl)] += values[p];
                    }
                }
                for &(c, p) in &symbolic.rows[v] {
                    if sn[c] > s {
                        fm[(jl, pos[c])] += values[p];
                    }
                }
            }
            for &c in &front.children {
                let upd = updates[c].take().expect("child update computed before parent");
                let cb = &symbolic.fronts[c].boundary;
                for (jc, &vj) in cb.iter().enumerate() {
                    let pj = pos[vj];
                    for (ic, &vi) in cb.iter().enumerate() {
                        fm[(pos[vi], pj)] += upd[(ic, jc)];
                    }
                }
            }
            for &v in front.own.iter().chain(&front.boundary) {
                pos[v] = usize::MAX;
            }

            let lu = fm.as_ref().submatrix(0, 0, k, k).partial_piv_lu();
            let mut x = fm.as_ref().submatrix(0, k, k, m).to_owned();
            lu.solve_in_place(x.as_mut());
            let f21 = fm.as_ref().submatrix(k, 0, m, k).to_owned();
            if m > 0 {
                let mut f22 = fm.as_ref().submatrix(k, k, m, m).to_owned();
                matmul(f22.as_mut(), Accum::Add, f21.as_ref(), x.as_ref(), -1.0, Par::Seq);
                if !f22.col_iter().all(|c| c.iter().all(|v| v.is_finite())) {
                    return Err(LinearSolveError::Singular(front.own[0]));
                }
                updates[s] = Some(f22);
            }
            if !x.col_iter().all(|c| c.iter().all(|v| v.is_finite())) {
                return Err(LinearSolveError::Singular(front.own[0]));
            }
            factors.push(FrontFactor { lu, x, f21 });
        }
        Ok(Self {
            symbolic: symbolic.clone(),
            factors,
        })
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>, LinearSolveError> {
        let mut b = rhs.to_vec();
        let fronts = &self.symbolic.fronts;
        for (front, fac) in fronts.iter().zip(&self.factors) {
            let mut t = Mat::from_fn(front.own.len(), 1, |i, _| b[front.own[i]]);
            fac.lu.solve_in_place(t.as_mut());
            for (i, &v) in front.own.iter().enumerate() {
                b[v] = t[(i, 0)];
            }
            for (i, &v) in front.boundary.iter().enumerate() {
                let mut s = 0.0;
                for j in 0..front.own.len() {
                    s += fac.f21[(i, j)] * t[(j, 0)];
                }
                b[v] -= s;
            }
        }
        for (front, fac) in fronts.iter().zip(&self.factors).rev() {
            if front.boundary.is_empty() {
                continue;
            }
            let xb = Mat::from_fn(front.boundary.len(), 1, |i, _| b[front.boundary[i]]);
            let mut y = Mat::<f64>::zeros(front.own.len(), 1);
            matmul(y.as_mut(), Accum::Replace, fac.x.as_ref(), xb.as_ref(), 1.0, Par::Seq);
            for (i, &v) in front.own.iter().enumerate() {
                b[v] -= y[(i, 0)];
            }
        }
        super::finite(b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// 2D five-point pattern on a periodic `n × n` grid with random values
    /// and a dominant diagonal.
    fn grid_matrix(n: usize, rng: &mut ChaCha8Rng) -> CscMatrix {
        let id = |i: usize, j: usize| (j % n) * n + (i % n);
        let mut t = Vec::new();
        for j in 0..n {
            for i in 0..n {
                let r = id(i, j);
                t.push((r, r, 8.0 + rng.gen_range(0.0..1.0)));
                for c in [id(i + 1, j), id(i + n - 1, j), id(i, j + 1), id(i, j + n - 1)] {
                    t.push((r, c, rng.gen_range(-1.0..1.0)));
                }
            }
        }
        CscMatrix::from_triplets(n * n, n * n, &t)
    }

    fn residual(a: &CscMatrix, x: &[f64], b: &[f64]) -> f64 {
        let ax = a.mul_vec(x);
        super::super::norm_inf(&ax.iter().zip(b).map(|(p, q)| p - q).collect::<Vec<_>>())
    }

    #[test]
    fn solves_with_any_partition() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = grid_matrix(6, &mut rng);
        let b: Vec<f64> = (0..36).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let partitions = [
            vec![(0..36).collect::<Vec<_>>()],
            (0..36).map(|v| vec![v]).collect(),
            vec![(0..12).collect(), (24..36).collect(), (12..24).collect()],
        ];
        for part in partitions {
            let sym = Arc::new(MultifrontalSymbolic::new(a.pattern().clone(), part).unwrap());
            let x = MultifrontalLu::factorize(&sym, &a).unwrap().solve(&b).unwrap();
            assert!(residual(&a, &x, &b) < 1e-13);
        }
    }

    #[test]
    fn pivots_within_fronts() {
        // saddle point [[I, B], [B^T, 0]] with the zero block in one front
        let t = vec![(0, 0, 1.0), (1, 1, 1.0), (0, 2, 1.0), (2, 0, 1.0), (1, 2, 2.0), (2, 1, 2.0)];
        let a = CscMatrix::from_triplets(3, 3, &t);
        let sym = Arc::new(MultifrontalSymbolic::new(a.pattern().clone(), vec![vec![2, 0, 1]]).unwrap());
        let b = [1.0, 2.0, 3.0];
        let x = MultifrontalLu::factorize(&sym, &a).unwrap().solve(&b).unwrap();
        assert!(residual(&a, &x, &b) < 1e-14);
    }

    #[test]
    fn rejects_bad_partitions() {
        let a = CscMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (1, 1, 1.0)]);
        assert!(MultifrontalSymbolic::new(a.pattern().clone(), vec![vec![0]]).is_err());
        assert!(MultifrontalSymbolic::new(a.pattern().clone(), vec![vec![0, 1], vec![1]]).is_err());
    }

    #[test]
    fn singular_front_is_reported() {
        let a = CscMatrix::from_triplets(2, 2, &[(0, 0, 0.0), (1, 1, 1.0)]);
        let sym = Arc::new(MultifrontalSymbolic::new(a.pattern().clone(), vec![vec![0], vec![1]]).unwrap());
        let r = MultifrontalLu::factorize(&sym, &a).and_then(|f| f.solve(&[1.0, 1.0]));
        assert!(r.is_err());
    }
}
