//! Linear algebra primitives: pseudospectral derivatives, a CSR sparse matrix,
//! dense eigen/singular-value wrappers and a Lanczos solver.

use crate::error::{Error, Result};
use crate::lattice::SpinStructure;
use crate::par::{self, Mode};
use crate::C64;
use faer::linalg::solvers::DenseSolveCore;
use faer::{Mat, Side};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

pub type DenseMat = Mat<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Positive Fourier mode numbers resolved on `points` samples.
///
/// Integers `1..` for periodic axes and half-integers `1/2..` for antiperiodic
/// ones. The periodic Nyquist mode of an even grid is excluded.
pub fn positive_modes(points: usize, spin: SpinStructure) -> Result<Vec<f64>> {
    match spin {
        SpinStructure::Periodic => {
            let top = (points - 1) / 2;
            Ok((1..=top).map(|k| k as f64).collect())
        }
        SpinStructure::Antiperiodic => {
            if points % 2 != 0 {
                return Err(Error::Unsupported(format!(
                    "antiperiodic axis needs an even number of points, got {points}"
                )));
            }
            Ok((0..points / 2).map(|k| k as f64 + 0.5).collect())
        }
    }
}

/// All mode numbers of a grid axis, in the order `-kmax..kmax`.
///
/// For periodic axes with an even number of points the Nyquist mode is listed
/// once, flagged by the second tuple element.
pub fn all_modes(points: usize, spin: SpinStructure) -> Result<(Vec<f64>, bool)> {
    let pos = positive_modes(points, spin)?;
    let mut modes: Vec<f64> = pos.iter().rev().map(|k| -k).collect();
    if spin == SpinStructure::Periodic {
        modes.push(0.0);
    }
    modes.extend(pos.iter().copied());
    let nyquist = spin == SpinStructure::Periodic && points % 2 == 0;
    Ok((modes, nyquist))
}

/// Fourier pseudospectral first-derivative matrix, row-major `points x points`.
///
/// The matrix is exactly antisymmetric with zero diagonal.
pub fn fourier_derivative(points: usize, length: f64, spin: SpinStructure) -> Result<Vec<f64>> {
    let modes = positive_modes(points, spin)?;
    let l = points as f64;
    let coeff: Vec<f64> = (0..points)
        .map(|d| {
            let mut s = 0.0;
            for &k in &modes {
                let w = 2.0 * PI * k / length;
                s += w * (2.0 * PI * k * d as f64 / l).sin();
            }
            -2.0 * s / l
        })
        .collect();
    let mut out = vec![0.0; points * points];
    for j in 0..points {
        for m in 0..j {
            let c = coeff[j - m];
            out[j * points + m] = c;
            out[m * points + j] = -c;
        }
    }
    Ok(out)
}

/// Centered-difference derivative with zero first and last rows.
pub fn centered_difference(points: usize, step: f64) -> Vec<f64> {
    let mut out = vec![0.0; points * points];
    for k in 1..points.saturating_sub(1) {
        out[k * points + k - 1] = -0.5 / step;
        out[k * points + k + 1] = 0.5 / step;
    }
    out
}

/// Orthogonal projector onto the Fourier modes with `|k| <= cutoff`.
pub fn band_projector(points: usize, spin: SpinStructure, cutoff: f64) -> Result<Vec<f64>> {
    let (modes, _) = all_modes(points, spin)?;
    let l = points as f64;
    let mut out = vec![0.0; points * points];
    for j in 0..points {
        for m in 0..points {
            let d = j as f64 - m as f64;
            let s: f64 = modes
                .iter()
                .filter(|k| k.abs() <= cutoff + 1e-12)
                .map(|k| (2.0 * PI * k * d / l).cos())
                .sum();
            out[j * points + m] = s / l;
        }
    }
    Ok(out)
}

/// Apply a real `n x n` matrix along the middle index of a vector laid out as
/// `(outer, n, inner)`.
pub fn apply_along(v: &[C64], outer: usize, n: usize, inner: usize, m: &[f64]) -> Vec<C64> {
    let mut out = vec![ZERO; v.len()];
    for o in 0..outer {
        let base = o * n * inner;
        for j in 0..n {
            let row = &m[j * n..(j + 1) * n];
            let dst = base + j * inner;
            for (l, &w) in row.iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                let src = base + l * inner;
                for s in 0..inner {
                    out[dst + s] += v[src + s] * w;
                }
            }
        }
    }
    out
}

/// Compressed sparse row complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMat {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<C64>,
}

impl SparseMat {
    /// Build from `(row, col, value)` triplets; duplicates are summed and exact
    /// zeros dropped.
    pub fn from_triplets(nrows: usize, ncols: usize, mut trips: Vec<(usize, usize, C64)>) -> Self {
        trips.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut indptr = vec![0usize; nrows + 1];
        let mut indices = Vec::with_capacity(trips.len());
        let mut values: Vec<C64> = Vec::with_capacity(trips.len());
        let mut last: Option<(usize, usize)> = None;
        let mut rows = Vec::with_capacity(trips.len());
        for (r, c, v) in trips {
            debug_assert!(r < nrows && c < ncols);
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(c);
                values.push(v);
                rows.push(r);
                last = Some((r, c));
            }
        }
        let mut keep_idx = Vec::with_capacity(indices.len());
        let mut keep_val = Vec::with_capacity(values.len());
        for ((r, c), v) in rows.into_iter().zip(indices).zip(values) {
            if v != ZERO {
                indptr[r + 1] += 1;
                keep_idx.push(c);
                keep_val.push(v);
            }
        }
        for r in 0..nrows {
            indptr[r + 1] += indptr[r];
        }
        SparseMat {
            nrows,
            ncols,
            indptr,
            indices: keep_idx,
            values: keep_val,
        }
    }

    pub fn from_dense(a: &DenseMat) -> Self {
        let mut trips = Vec::new();
        for i in 0..a.nrows() {
            for j in 0..a.ncols() {
                let v = a[(i, j)];
                if v != ZERO {
                    trips.push((i, j, v));
                }
            }
        }
        Self::from_triplets(a.nrows(), a.ncols(), trips)
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self::from_triplets(nrows, ncols, Vec::new())
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![ONE; n])
    }

    pub fn diagonal(d: &[C64]) -> Self {
        let n = d.len();
        Self::from_triplets(n, n, d.iter().enumerate().map(|(i, &v)| (i, i, v)).collect())
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Iterate over stored entries as `(row, col, value)`.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.nrows).flat_map(move |r| {
            (self.indptr[r]..self.indptr[r + 1]).map(move |p| (r, self.indices[p], self.values[p]))
        })
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        let row = &self.indices[self.indptr[r]..self.indptr[r + 1]];
        match row.binary_search(&c) {
            Ok(p) => self.values[self.indptr[r] + p],
            Err(_) => ZERO,
        }
    }

    pub fn adjoint(&self) -> Self {
        let trips = self.triplets().map(|(r, c, v)| (c, r, v.conj())).collect();
        Self::from_triplets(self.ncols, self.nrows, trips)
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= s);
        out.prune();
        out
    }

    /// `alpha * self + beta * other`.
    pub fn combine(&self, alpha: C64, other: &SparseMat, beta: C64) -> Self {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let mut trips: Vec<_> = self.triplets().map(|(r, c, v)| (r, c, alpha * v)).collect();
        trips.extend(other.triplets().map(|(r, c, v)| (r, c, beta * v)));
        Self::from_triplets(self.nrows, self.ncols, trips)
    }

    pub fn add(&self, other: &SparseMat) -> Self {
        self.combine(ONE, other, ONE)
    }

    pub fn sub(&self, other: &SparseMat) -> Self {
        self.combine(ONE, other, -ONE)
    }

    /// `diag(left) * self * diag(right)`.
    pub fn scale_rows_cols(&self, left: Option<&[C64]>, right: Option<&[C64]>) -> Self {
        let mut out = self.clone();
        for r in 0..self.nrows {
            for p in self.indptr[r]..self.indptr[r + 1] {
                let mut v = out.values[p];
                if let Some(l) = left {
                    v *= l[r];
                }
                if let Some(rt) = right {
                    v *= rt[self.indices[p]];
                }
                out.values[p] = v;
            }
        }
        out.prune();
        out
    }

    /// Sparse product `self * other`.
    pub fn matmul(&self, other: &SparseMat) -> Self {
        assert_eq!(self.ncols, other.nrows);
        let mut trips = Vec::new();
        for r in 0..self.nrows {
            for p in self.indptr[r]..self.indptr[r + 1] {
                let k = self.indices[p];
                let a = self.values[p];
                for q in other.indptr[k]..other.indptr[k + 1] {
                    trips.push((r, other.indices[q], a * other.values[q]));
                }
            }
        }
        Self::from_triplets(self.nrows, other.ncols, trips)
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        self.matvec_with(x, Mode::default())
    }

    pub fn matvec_with(&self, x: &[C64], mode: Mode) -> Vec<C64> {
        assert_eq!(x.len(), self.ncols);
        let mut y = vec![ZERO; self.nrows];
        let chunk = 256;
        par::for_each_chunk(mode, &mut y, chunk, |ci, out| {
            let r0 = ci * chunk;
            for (i, yi) in out.iter_mut().enumerate() {
                let r = r0 + i;
                let mut s = ZERO;
                for p in self.indptr[r]..self.indptr[r + 1] {
                    s += self.values[p] * x[self.indices[p]];
                }
                *yi = s;
            }
        });
        y
    }

    pub fn to_dense(&self) -> DenseMat {
        let mut a = DenseMat::zeros(self.nrows, self.ncols);
        for (r, c, v) in self.triplets() {
            a[(r, c)] = v;
        }
        a
    }

    /// Submatrix over the half-open row and column ranges.
    pub fn block(&self, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> Self {
        let trips = self
            .triplets()
            .filter(|(r, c, _)| rows.contains(r) && cols.contains(c))
            .map(|(r, c, v)| (r - rows.start, c - cols.start, v))
            .collect();
        Self::from_triplets(rows.len(), cols.len(), trips)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).fold(0.0, |a, b| a + b).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Frobenius norm of `self - self^dagger`.
    pub fn hermitian_residual(&self) -> f64 {
        self.sub(&self.adjoint()).frobenius_norm()
    }

    fn prune(&mut self) {
        if self.values.iter().all(|v| *v != ZERO) {
            return;
        }
        let trips: Vec<_> = self.triplets().collect();
        *self = Self::from_triplets(self.nrows, self.ncols, trips);
    }
}

pub fn dense_from_rows(rows: &[Vec<C64>]) -> DenseMat {
    let n = rows.len();
    let m = rows.first().map_or(0, |r| r.len());
    DenseMat::from_fn(n, m, |i, j| rows[i][j])
}

pub fn dense_identity(n: usize) -> DenseMat {
    DenseMat::from_fn(n, n, |i, j| if i == j { ONE } else { ZERO })
}

pub fn frobenius(a: &DenseMat) -> f64 {
    let mut s = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            s += a[(i, j)].norm_sqr();
        }
    }
    s.sqrt()
}

pub fn adjoint(a: &DenseMat) -> DenseMat {
    a.adjoint().to_owned()
}

/// Frobenius norm of `a - a^dagger`.
pub fn hermitian_residual(a: &DenseMat) -> f64 {
    frobenius(&(a - a.adjoint()))
}

/// `(a + a^dagger) / 2`.
pub fn symmetrize(a: &DenseMat) -> DenseMat {
    DenseMat::from_fn(a.nrows(), a.ncols(), |i, j| (a[(i, j)] + a[(j, i)].conj()) * 0.5)
}

/// True if every off-diagonal entry is exactly zero.
pub fn is_diagonal(a: &DenseMat) -> bool {
    (0..a.ncols()).all(|j| (0..a.nrows()).all(|i| i == j || a[(i, j)] == ZERO))
}

pub fn diagonal_of(a: &DenseMat) -> Vec<C64> {
    (0..a.nrows().min(a.ncols())).map(|i| a[(i, i)]).collect()
}

fn linalg_err(what: &str) -> Error {
    Error::Numerical(format!("{what} failed"))
}

/// Ascending eigenvalues of the Hermitian part of `a`.
pub fn hermitian_eigenvalues(a: &DenseMat) -> Result<Vec<f64>> {
    let h = symmetrize(a);
    let mut v = h
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|_| linalg_err("hermitian eigenvalues"))?;
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Eigen-decomposition of the Hermitian part of `a`: ascending values and
/// orthonormal eigenvectors as columns.
pub fn hermitian_eigen(a: &DenseMat) -> Result<(Vec<f64>, DenseMat)> {
    let h = symmetrize(a);
    let evd = h
        .self_adjoint_eigen(Side::Lower)
        .map_err(|_| linalg_err("hermitian eigen"))?;
    let s = evd.S();
    let vals: Vec<f64> = (0..h.nrows()).map(|i| s[i].re).collect();
    Ok((vals, evd.U().to_owned()))
}

pub fn eigenvalues(a: &DenseMat) -> Result<Vec<C64>> {
    a.eigenvalues().map_err(|_| linalg_err("eigenvalues"))
}

pub fn singular_values(a: &DenseMat) -> Result<Vec<f64>> {
    a.singular_values().map_err(|_| linalg_err("singular values"))
}

/// Largest singular value.
pub fn spectral_norm(a: &DenseMat) -> Result<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Ok(0.0);
    }
    Ok(singular_values(a)?.into_iter().fold(0.0, f64::max))
}

pub fn inverse(a: &DenseMat) -> DenseMat {
    a.partial_piv_lu().inverse()
}

/// Function of a Hermitian matrix through its eigen-decomposition.
pub fn hermitian_function(a: &DenseMat, f: impl Fn(f64) -> f64) -> Result<DenseMat> {
    let (vals, u) = hermitian_eigen(a)?;
    let n = vals.len();
    let scaled = DenseMat::from_fn(n, n, |i, j| u[(i, j)] * f(vals[j]));
    Ok(&scaled * u.adjoint())
}

pub fn norm(v: &[C64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).fold(0.0, |a, b| a + b).sqrt()
}

pub fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Deterministic complex unit vector.
pub fn random_unit(dim: usize, rng: &mut ChaCha8Rng) -> Vec<C64> {
    let v: Vec<C64> = (0..dim)
        .map(|_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
        .collect();
    let n = norm(&v);
    v.into_iter().map(|x| x / n).collect()
}

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum End {
    Smallest,
    Largest,
}

#[derive(Debug, Clone)]
pub struct LanczosOutcome {
    /// Ritz values, ascending for `Smallest`, descending for `Largest`.
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<C64>>,
    /// Residual bounds `|beta_m s_m|` per Ritz pair.
    pub residuals: Vec<f64>,
    pub iterations: usize,
}

/// Lanczos with full reorthogonalization for a Hermitian operator.
///
/// Returns the `want` extremal Ritz pairs at the requested end. Convergence is
/// declared when every wanted residual is below `tol * max|theta|`.
pub fn lanczos<F>(
    dim: usize,
    apply: F,
    want: usize,
    end: End,
    max_iter: usize,
    tol: f64,
    seed: u64,
) -> Result<LanczosOutcome>
where
    F: Fn(&[C64]) -> Vec<C64>,
{
    let want = want.min(dim).max(1);
    let max_iter = max_iter.min(dim).max(want);
    let mut rng = seeded_rng(seed);
    let mut basis: Vec<Vec<C64>> = vec![random_unit(dim, &mut rng)];
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut outcome = None;
    loop {
        let j = basis.len() - 1;
        let mut w = apply(&basis[j]);
        let a = dot(&basis[j], &w).re;
        alpha.push(a);
        for _ in 0..2 {
            for q in &basis {
                let c = dot(q, &w);
                w.iter_mut().zip(q).for_each(|(wi, qi)| *wi -= c * qi);
            }
        }
        let b = norm(&w);
        let m = alpha.len();
        let done = m >= max_iter || b <= 1e-14 * alpha.iter().map(|x| x.abs()).fold(1.0, f64::max);
        if done || (m >= want && m % 10 == 0) {
            let (theta, s) = tridiagonal_eigen(&alpha, &beta)?;
            let order: Vec<usize> = match end {
                End::Smallest => (0..m).collect(),
                End::Largest => (0..m).rev().collect(),
            };
            let scale = theta.iter().map(|x| x.abs()).fold(f64::MIN_POSITIVE, f64::max);
            let picked: Vec<usize> = order.into_iter().take(want).collect();
            let residuals: Vec<f64> = picked.iter().map(|&i| (b * s[(m - 1, i)]).abs()).collect();
            let converged = residuals.iter().all(|r| *r <= tol * scale);
            if converged || done {
                let vectors = picked
                    .iter()
                    .map(|&i| {
                        let mut y = vec![ZERO; dim];
                        for (k, q) in basis.iter().enumerate() {
                            let c = s[(k, i)];
                            y.iter_mut().zip(q).for_each(|(yi, qi)| *yi += qi * c);
                        }
                        y
                    })
                    .collect();
                outcome = Some(LanczosOutcome {
                    values: picked.iter().map(|&i| theta[i]).collect(),
                    vectors,
                    residuals,
                    iterations: m,
                });
                break;
            }
        }
        if done {
            break;
        }
        beta.push(b);
        basis.push(w.into_iter().map(|x| x / b).collect());
    }
    outcome.ok_or(Error::NonConvergence {
        residual: f64::INFINITY,
        iterations: alpha.len(),
    })
}

fn tridiagonal_eigen(alpha: &[f64], beta: &[f64]) -> Result<(Vec<f64>, Mat<f64>)> {
    let m = alpha.len();
    let t = Mat::<f64>::from_fn(m, m, |i, j| {
        if i == j {
            alpha[i]
        } else if i == j + 1 {
            beta[j]
        } else if j == i + 1 {
            beta[i]
        } else {
            0.0
        }
    });
    let evd = t
        .self_adjoint_eigen(Side::Lower)
        .map_err(|_| linalg_err("tridiagonal eigen"))?;
    let s = evd.S();
    Ok(((0..m).map(|i| s[i]).collect(), evd.U().to_owned()))
}

/// Operator 2-norm of `A` given `A` and `A^dagger` as closures.
pub fn operator_norm<F, G>(dim: usize, apply: F, apply_adj: G, seed: u64) -> Result<f64>
where
    F: Fn(&[C64]) -> Vec<C64>,
    G: Fn(&[C64]) -> Vec<C64>,
{
    if dim == 0 {
        return Ok(0.0);
    }
    let out = lanczos(dim, |v| apply_adj(&apply(v)), 1, End::Largest, 400, 1e-12, seed)?;
    Ok(out.values[0].max(0.0).sqrt())
}

/// Operator 2-norm of a sparse matrix.
pub fn sparse_norm(a: &SparseMat, seed: u64) -> Result<f64> {
    if a.nnz() == 0 {
        return Ok(0.0);
    }
    let adj = a.adjoint();
    operator_norm(a.ncols(), |v| a.matvec(v), |v| adj.matvec(v), seed)
}

/// Smallest-magnitude eigenvalues of a Hermitian sparse matrix.
///
/// Block Krylov iteration on `A^2` with full reorthogonalization, followed by
/// Rayleigh-Ritz for `A` on `span{Y, AY}` where `Y` holds the leading Ritz
/// vectors of `A^2`. The block handles the exact `+-lambda` pairing of odd
/// operators and small degeneracies. Returns the values and the largest
/// eigenpair residual `||A z - lambda z||`.
pub fn smallest_magnitude_hermitian(
    a: &SparseMat,
    count: usize,
    tol: f64,
    seed: u64,
) -> Result<(Vec<f64>, f64)> {
    let n = a.nrows();
    let want = count.min(n).max(1);
    let keep = (want + want / 2 + 4).min(n);
    let block = (want / 2).clamp(8, 16).min(n);
    let max_basis = n.min(600.max(4 * keep));
    let scale = sparse_norm(a, seed ^ 0x5eed)?.max(f64::MIN_POSITIVE);
    let sq = |v: &[C64]| a.matvec(&a.matvec(v));
    let mut rng = seeded_rng(seed);
    let mut q: Vec<Vec<C64>> = Vec::new();
    let mut aq: Vec<Vec<C64>> = Vec::new();
    let mut h: Vec<Vec<C64>> = Vec::new();
    let mut pending: Vec<Vec<C64>> = (0..block).map(|_| random_unit(n, &mut rng)).collect();
    let mut since_check = 0;
    let mut best = (Vec::new(), f64::INFINITY);
    loop {
        let first_new = q.len();
        for mut w in pending.drain(..) {
            let w0 = norm(&w);
            for _ in 0..2 {
                for qi in &q {
                    let c = dot(qi, &w);
                    w.iter_mut().zip(qi).for_each(|(wi, x)| *wi -= c * x);
                }
            }
            let nw = norm(&w);
            if nw > 1e-10 * w0 && q.len() < n {
                w.iter_mut().for_each(|x| *x /= nw);
                aq.push(sq(&w));
                q.push(w);
            }
        }
        let m = q.len();
        for j in first_new..m {
            let col: Vec<C64> = (0..m).map(|i| dot(&q[i], &aq[j])).collect();
            for (i, row) in h.iter_mut().enumerate().take(first_new) {
                row.push(col[i].conj());
            }
            h.push(col);
        }
        let stalled = m == first_new;
        since_check += 1;
        let exhausted = stalled || m >= max_basis || m == n;
        if m >= keep && (since_check >= 4 || exhausted) {
            since_check = 0;
            let hm = DenseMat::from_fn(m, m, |i, j| (h[j][i] + h[i][j].conj()) * 0.5);
            let (_, z) = hermitian_eigen(&hm)?;
            let y: Vec<Vec<C64>> = (0..keep)
                .map(|c| {
                    let mut v = vec![ZERO; n];
                    for i in 0..m {
                        let zi = z[(i, c)];
                        v.iter_mut().zip(&q[i]).for_each(|(vi, x)| *vi += x * zi);
                    }
                    v
                })
                .collect();
            let (vals, res) = ritz_on_pairs(a, &y, want)?;
            if res < best.1 {
                best = (vals, res);
            }
            if best.1 <= tol * scale || exhausted {
                break;
            }
        } else if exhausted {
            break;
        }
        pending = aq[first_new..m].to_vec();
    }
    if best.1 > tol * scale {
        return Err(Error::NonConvergence {
            residual: best.1,
            iterations: q.len(),
        });
    }
    Ok(best)
}

/// Rayleigh-Ritz for `A` on `span{Y, AY}`; the `want` smallest-magnitude
/// values and their largest residual.
fn ritz_on_pairs(a: &SparseMat, y: &[Vec<C64>], want: usize) -> Result<(Vec<f64>, f64)> {
    let n = a.nrows();
    let mut basis: Vec<Vec<C64>> = Vec::new();
    for mut w in y.iter().cloned().chain(y.iter().map(|v| a.matvec(v))) {
        let w0 = norm(&w);
        for _ in 0..2 {
            for qi in &basis {
                let c = dot(qi, &w);
                w.iter_mut().zip(qi).for_each(|(wi, x)| *wi -= c * x);
            }
        }
        let nw = norm(&w);
        if nw > 1e-10 * w0.max(f64::MIN_POSITIVE) {
            w.iter_mut().for_each(|x| *x /= nw);
            basis.push(w);
        }
    }
    let k = basis.len();
    let ab: Vec<Vec<C64>> = basis.iter().map(|v| a.matvec(v)).collect();
    let g = DenseMat::from_fn(k, k, |i, j| dot(&basis[i], &ab[j]));
    let g = DenseMat::from_fn(k, k, |i, j| (g[(i, j)] + g[(j, i)].conj()) * 0.5);
    let (vals, z) = hermitian_eigen(&g)?;
    let mut pairs: Vec<(f64, f64)> = (0..k)
        .map(|c| {
            let mut r = vec![ZERO; n];
            for i in 0..k {
                let zi = z[(i, c)];
                for p in 0..n {
                    r[p] += (ab[i][p] - basis[i][p] * vals[c]) * zi;
                }
            }
            (vals[c], norm(&r))
        })
        .collect();
    pairs.sort_by(|x, y| x.0.abs().total_cmp(&y.0.abs()).then(x.0.total_cmp(&y.0)));
    pairs.truncate(want);
    let residual = pairs.iter().map(|p| p.1).fold(0.0, f64::max);
    Ok((pairs.into_iter().map(|p| p.0).collect(), residual))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivative_is_antisymmetric_with_exact_spectrum() {
        for &(l, spin) in &[
            (8, SpinStructure::Antiperiodic),
            (9, SpinStructure::Periodic),
            (8, SpinStructure::Periodic),
        ] {
            let d = fourier_derivative(l, 2.0 * PI, spin).unwrap();
            for j in 0..l {
                assert_eq!(d[j * l + j], 0.0);
                for m in 0..l {
                    assert_eq!(d[j * l + m], -d[m * l + j]);
                }
            }
            let a = DenseMat::from_fn(l, l, |j, m| C64::new(0.0, -d[j * l + m]));
            let ev = hermitian_eigenvalues(&a).unwrap();
            let (modes, nyq) = all_modes(l, spin).unwrap();
            let mut expected = modes.clone();
            if nyq {
                expected.push(0.0);
            }
            expected.sort_by(f64::total_cmp);
            for (x, y) in ev.iter().zip(&expected) {
                assert!((x - y).abs() < 1e-12, "{x} vs {y}");
            }
        }
    }

    #[test]
    fn derivative_of_sine() {
        let l = 16;
        let d = fourier_derivative(l, 2.0 * PI, SpinStructure::Periodic).unwrap();
        let x: Vec<f64> = (0..l).map(|j| 2.0 * PI * j as f64 / l as f64).collect();
        for j in 0..l {
            let s: f64 = (0..l).map(|m| d[j * l + m] * (3.0 * x[m]).sin()).sum();
            assert!((s - 3.0 * (3.0 * x[j]).cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn odd_antiperiodic_rejected() {
        assert!(fourier_derivative(7, 1.0, SpinStructure::Antiperiodic).is_err());
    }

    #[test]
    fn band_projector_is_idempotent() {
        let p = band_projector(12, SpinStructure::Antiperiodic, 3.5).unwrap();
        let n = 12;
        for i in 0..n {
            for j in 0..n {
                let s: f64 = (0..n).map(|k| p[i * n + k] * p[k * n + j]).sum();
                assert!((s - p[i * n + j]).abs() < 1e-13);
            }
        }
        let tr: f64 = (0..n).map(|i| p[i * n + i]).sum();
        assert!((tr - 8.0).abs() < 1e-12);
    }

    #[test]
    fn sparse_roundtrip_and_products() {
        let a = SparseMat::from_triplets(
            2,
            2,
            vec![(0, 1, I), (1, 0, -I), (0, 1, ZERO), (1, 1, ZERO)],
        );
        assert_eq!(a.nnz(), 2);
        assert_eq!(a.hermitian_residual(), 0.0);
        let ev = hermitian_eigenvalues(&a.to_dense()).unwrap();
        assert!((ev[0] + 1.0).abs() < 1e-15 && (ev[1] - 1.0).abs() < 1e-15);
        let sq = a.matmul(&a);
        assert_eq!(sq, SparseMat::identity(2));
        assert_eq!(a.matvec(&[ONE, ONE]), vec![I, -I]);
    }

    #[test]
    fn lanczos_matches_dense() {
        let n = 60;
        let d: Vec<C64> = (0..n).map(|i| C64::new(i as f64 - 29.5, 0.0)).collect();
        let mut a = SparseMat::diagonal(&d);
        let off: Vec<_> = (0..n - 1).map(|i| (i, i + 1, C64::new(0.3, 0.1))).collect();
        let off = SparseMat::from_triplets(n, n, off);
        a = a.add(&off).add(&off.adjoint());
        let dense = hermitian_eigenvalues(&a.to_dense()).unwrap();
        let norm = sparse_norm(&a, 3).unwrap();
        let top = dense.iter().map(|x| x.abs()).fold(0.0, f64::max);
        assert!((norm - top).abs() < 1e-8);
        let (small, res) = smallest_magnitude_hermitian(&a, 4, 1e-8, 7).unwrap();
        let mut by_mag = dense.clone();
        by_mag.sort_by(|x, y| x.abs().total_cmp(&y.abs()));
        for (x, y) in small.iter().zip(&by_mag) {
            assert!((x.abs() - y.abs()).abs() < 1e-8, "{x} {y}");
        }
        assert!(res < 1e-6);
    }
}
