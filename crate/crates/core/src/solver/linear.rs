use faer::dyn_stack::{MemBuffer, MemStack};
use faer::sparse::linalg::lu::{factorize_symbolic_lu, LuSymbolicParams, NumericLu, SymbolicLu};
use faer::sparse::linalg::{LuError, SupernodalThreshold};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMat};
use faer::{Conj, Mat, Par};

use crate::sparse::CsrMatrix;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinearSolverKind {
    /// Sparse LU with partial pivoting.
    Direct,
    /// Restarted GMRES with an ILU(0) preconditioner.
    Iterative,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearConfig {
    pub kind: LinearSolverKind,
    /// Relative residual target of the iterative path, measured on the
    /// equilibrated system.
    pub tol: f64,
    pub restart: usize,
    pub max_iters: usize,
    /// Sequential factorization for reproducible results.
    pub deterministic: bool,
}

impl Default for LinearConfig {
    fn default() -> Self {
        LinearConfig {
            kind: LinearSolverKind::Direct,
            tol: 1e-12,
            restart: 200,
            max_iters: 5000,
            deterministic: true,
        }
    }
}

/// Linear solver that keeps the symbolic LU of the last sparsity pattern, so
/// Newton iterations on a fixed mesh only refactor numerically.
pub struct LinearSolver {
    pub cfg: LinearConfig,
    cached: Option<(Vec<usize>, Vec<usize>, SymbolicLu<usize>)>,
    /// Iterations of the last iterative solve.
    pub last_iterations: usize,
}

impl LinearSolver {
    pub fn new(cfg: LinearConfig) -> Self {
        LinearSolver {
            cfg,
            cached: None,
            last_iterations: 0,
        }
    }

    pub fn solve(&mut self, a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>> {
        assert_eq!(a.n, b.len(), "right-hand side length does not match the matrix");
        if let Some(dof) = empty_line(a) {
            return Err(Error::SingularMatrix { dof });
        }
        let (a, dr, dc) = equilibrate(a);
        let b: Vec<f64> = b.iter().zip(&dr).map(|(v, d)| v * d).collect();
        let y = match self.cfg.kind {
            LinearSolverKind::Direct => self.solve_direct(&a, &b)?,
            LinearSolverKind::Iterative => {
                let (x, it) = gmres_ilu0(&a, &b, self.cfg.tol, self.cfg.restart, self.cfg.max_iters)?;
                self.last_iterations = it;
                x
            }
        };
        Ok(y.iter().zip(&dc).map(|(v, d)| v * d).collect())
    }

    fn solve_direct(&mut self, a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>> {
        let par = if self.cfg.deterministic { Par::Seq } else { Par::rayon(0) };
        let (col_ptr, row_idx, vals) = to_csc(a);
        let sym = SymbolicSparseColMat::new_checked(a.n, a.n, col_ptr, None, row_idx);
        let same = matches!(&self.cached, Some((cp, ri, _)) if cp == sym.col_ptr() && ri == sym.row_idx());
        if !same {
            let params = LuSymbolicParams {
                supernodal_flop_ratio_threshold: SUPERNODAL,
                ..Default::default()
            };
            let lu = factorize_symbolic_lu(sym.as_ref(), params)
                .map_err(|e| Error::Structural(format!("symbolic LU failed: {e:?}")))?;
            self.cached = Some((sym.col_ptr().to_vec(), sym.row_idx().to_vec(), lu));
        }
        let sym_lu = &self.cached.as_ref().unwrap().2;
        let mat = SparseColMatRef::new(sym.as_ref(), &vals);
        let mut numeric = NumericLu::new();
        let mut mem = MemBuffer::new(
            sym_lu
                .factorize_numeric_lu_scratch::<f64>(par, Default::default())
                .or(sym_lu.solve_in_place_scratch::<f64>(1, par)),
        );
        let lu = sym_lu
            .factorize_numeric_lu(&mut numeric, mat, par, MemStack::new(&mut mem), Default::default())
            .map_err(|e| match e {
                LuError::SymbolicSingular { index } => Error::SingularMatrix { dof: index },
                other => Error::Structural(format!("LU failed: {other:?}")),
            })?;
        let mut rhs = Mat::<f64>::from_fn(a.n, 1, |i, _| b[i]);
        lu.solve_in_place_with_conj(Conj::No, rhs.as_mut(), par, MemStack::new(&mut mem));
        let x: Vec<f64> = (0..a.n).map(|i| rhs[(i, 0)]).collect();
        if let Some(dof) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::SingularMatrix { dof });
        }
        Ok(x)
    }
}

const SUPERNODAL: SupernodalThreshold = SupernodalThreshold::FORCE_SUPERNODAL;

/// First row or column without a nonzero entry.
fn empty_line(a: &CsrMatrix) -> Option<usize> {
    let mut col_seen = vec![false; a.n];
    let mut first = None;
    for i in 0..a.n {
        let mut any = false;
        for (c, v) in a.row(i) {
            if v != 0.0 {
                any = true;
                col_seen[c] = true;
            }
        }
        if !any && first.is_none() {
            first = Some(i);
        }
    }
    let col = col_seen.iter().position(|s| !s);
    match (first, col) {
        (Some(r), Some(c)) => Some(r.min(c)),
        (r, c) => r.or(c),
    }
}

/// Ruiz equilibration: returns `Dr A Dc` with row and column maxima near one,
/// and the two scalings. Factors are powers of two, so scaling adds no rounding.
fn equilibrate(a: &CsrMatrix) -> (CsrMatrix, Vec<f64>, Vec<f64>) {
    let n = a.n;
    let (mut dr, mut dc) = (vec![1.0; n], vec![1.0; n]);
    let pow2 = |v: f64| 2f64.powi(v.log2().round() as i32);
    for _ in 0..8 {
        let (mut rmax, mut cmax) = (vec![0.0f64; n], vec![0.0f64; n]);
        for i in 0..n {
            for (c, v) in a.row(i) {
                let s = (dr[i] * v * dc[c]).abs();
                rmax[i] = rmax[i].max(s);
                cmax[c] = cmax[c].max(s);
            }
        }
        for i in 0..n {
            dr[i] /= pow2(rmax[i].sqrt());
            dc[i] /= pow2(cmax[i].sqrt());
        }
    }
    let mut scaled = a.clone();
    for i in 0..n {
        for k in scaled.row_ptr[i]..scaled.row_ptr[i + 1] {
            scaled.values[k] *= dr[i] * dc[scaled.col_idx[k]];
        }
    }
    (scaled, dr, dc)
}

/// One-shot solve with the given configuration.
pub fn linear_solve(a: &CsrMatrix, b: &[f64], cfg: &LinearConfig) -> Result<Vec<f64>> {
    LinearSolver::new(*cfg).solve(a, b)
}

fn to_csc(a: &CsrMatrix) -> (Vec<usize>, Vec<usize>, Vec<f64>) {
    let n = a.n;
    let mut col_ptr = vec![0usize; n + 1];
    for &c in &a.col_idx {
        col_ptr[c + 1] += 1;
    }
    for i in 0..n {
        col_ptr[i + 1] += col_ptr[i];
    }
    let mut next = col_ptr.clone();
    let mut row_idx = vec![0usize; a.nnz()];
    let mut vals = vec![0.0; a.nnz()];
    for r in 0..n {
        for (c, v) in a.row(r) {
            let k = next[c];
            row_idx[k] = r;
            vals[k] = v;
            next[c] += 1;
        }
    }
    (col_ptr, row_idx, vals)
}

/// Incomplete LU with zero fill on the pattern of `a`, stored in one CSR.
struct Ilu0 {
    m: CsrMatrix,
    diag: Vec<usize>,
}

impl Ilu0 {
    fn new(a: &CsrMatrix) -> Result<Self> {
        let mut m = a.clone();
        let n = a.n;
        let mut diag = vec![usize::MAX; n];
        for i in 0..n {
            for k in m.row_ptr[i]..m.row_ptr[i + 1] {
                if m.col_idx[k] == i {
                    diag[i] = k;
                }
            }
            if diag[i] == usize::MAX {
                return Err(Error::SingularMatrix { dof: i });
            }
        }
        let mut pos = vec![usize::MAX; n];
        for i in 0..n {
            let (s, e) = (m.row_ptr[i], m.row_ptr[i + 1]);
            for k in s..e {
                pos[m.col_idx[k]] = k;
            }
            for k in s..e {
                let j = m.col_idx[k];
                if j >= i {
                    break;
                }
                let piv = m.values[diag[j]];
                let l = m.values[k] / piv;
                m.values[k] = l;
                for kk in diag[j] + 1..m.row_ptr[j + 1] {
                    let p = pos[m.col_idx[kk]];
                    if p != usize::MAX {
                        m.values[p] -= l * m.values[kk];
                    }
                }
            }
            for k in s..e {
                pos[m.col_idx[k]] = usize::MAX;
            }
            if m.values[diag[i]] == 0.0 || !m.values[diag[i]].is_finite() {
                return Err(Error::SingularMatrix { dof: i });
            }
        }
        Ok(Ilu0 { m, diag })
    }

    fn apply(&self, b: &[f64]) -> Vec<f64> {
        let n = self.m.n;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in self.m.row_ptr[i]..self.diag[i] {
                s -= self.m.values[k] * y[self.m.col_idx[k]];
            }
            y[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in self.diag[i] + 1..self.m.row_ptr[i + 1] {
                s -= self.m.values[k] * y[self.m.col_idx[k]];
            }
            y[i] = s / self.m.values[self.diag[i]];
        }
        y
    }
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Right-preconditioned restarted GMRES. Returns the solution and the number of
/// inner iterations.
pub fn gmres_ilu0(a: &CsrMatrix, b: &[f64], tol: f64, restart: usize, max_iters: usize) -> Result<(Vec<f64>, usize)> {
    let n = a.n;
    let pre = Ilu0::new(a)?;
    let bnorm = norm2(b);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok((x, 0));
    }
    let target = tol * bnorm;
    let m = restart.max(1);
    let mut total = 0;
    let mut resid = bnorm;
    while total < max_iters {
        let ax = a.mul_vec(&x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let beta = norm2(&r);
        resid = beta;
        if beta <= target {
            return Ok((x, total));
        }
        let mut v: Vec<Vec<f64>> = vec![r.iter().map(|ri| ri / beta).collect()];
        let mut h = vec![vec![0.0; m]; m + 1];
        let (mut cs, mut sn) = (vec![0.0; m], vec![0.0; m]);
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k_used = 0;
        for k in 0..m {
            total += 1;
            let z = pre.apply(&v[k]);
            let mut w = a.mul_vec(&z);
            for (j, vj) in v.iter().enumerate() {
                let hj: f64 = w.iter().zip(vj).map(|(a, b)| a * b).sum();
                h[j][k] = hj;
                for (wi, vi) in w.iter_mut().zip(vj) {
                    *wi -= hj * vi;
                }
            }
            let wn = norm2(&w);
            h[k + 1][k] = wn;
            for j in 0..k {
                let t = cs[j] * h[j][k] + sn[j] * h[j + 1][k];
                h[j + 1][k] = -sn[j] * h[j][k] + cs[j] * h[j + 1][k];
                h[j][k] = t;
            }
            let den = (h[k][k] * h[k][k] + h[k + 1][k] * h[k + 1][k]).sqrt();
            if den == 0.0 {
                return Err(Error::SingularMatrix { dof: k });
            }
            cs[k] = h[k][k] / den;
            sn[k] = h[k + 1][k] / den;
            h[k][k] = den;
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            k_used = k + 1;
            resid = g[k + 1].abs();
            if resid <= target || wn == 0.0 || total >= max_iters {
                break;
            }
            v.push(w.iter().map(|wi| wi / wn).collect());
        }
        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let mut s = g[i];
            for j in i + 1..k_used {
                s -= h[i][j] * y[j];
            }
            y[i] = s / h[i][i];
        }
        let mut u = vec![0.0; n];
        for (j, yj) in y.iter().enumerate() {
            for (ui, vi) in u.iter_mut().zip(&v[j]) {
                *ui += yj * vi;
            }
        }
        let dz = pre.apply(&u);
        for (xi, di) in x.iter_mut().zip(&dz) {
            *xi += di;
        }
    }
    let ax = a.mul_vec(&x);
    let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let fin = norm2(&r);
    if fin <= target {
        return Ok((x, total));
    }
    Err(Error::LinearNotConverged {
        iterations: total,
        residual: fin.max(resid) / bnorm,
    })
}
