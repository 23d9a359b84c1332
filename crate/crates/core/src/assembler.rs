//! Total operators on the doubled time-extended space.
//!
//! Index map: `global = c * (Nt * H) + k * H + h` with component `c` in
//! `{0 (+), 1 (-)}`, time node `k` and hypersurface index `h` (itself
//! `site * spinor_dim + s`). Grading `Gamma = diag(I, -I)` and fundamental
//! symmetry `J = [[0, I], [I, 0]]` refer to the component index.

use crate::clifford::Signature;
use crate::error::{Error, Result};
use crate::family::{AlgebraElement, Block, TripleFamily};
use crate::lattice::{SpinStructure, TimeDomain};
use crate::linalg::{self, DenseMat, SparseMat, I, ONE, ZERO};
use crate::C64;
use serde::Serialize;

/// Time nodes and the derivative matrix on them.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    domain: TimeDomain,
    spin: SpinStructure,
    nodes: Vec<f64>,
    derivative: Vec<f64>,
}

impl TimeGrid {
    /// Circle: `Nt` equispaced nodes with the pseudospectral derivative for the
    /// given spin structure. Interval: `Nt` nodes including both endpoints and
    /// centered differences with zero boundary rows.
    pub fn new(domain: TimeDomain, nt: usize, spin: SpinStructure) -> Result<Self> {
        if nt == 0 {
            return Err(Error::input("time.Nt", "need at least one node"));
        }
        let (nodes, derivative) = match domain {
            TimeDomain::Circle { period } => {
                if !(period > 0.0) {
                    return Err(Error::input("time.T_per", "period must be positive"));
                }
                let nodes: Vec<f64> = (0..nt).map(|k| period * k as f64 / nt as f64).collect();
                let d = if nt == 1 {
                    vec![0.0]
                } else {
                    linalg::fourier_derivative(nt, period, spin)
                        .map_err(|e| Error::input("time.Nt", e.to_string()))?
                };
                (nodes, d)
            }
            TimeDomain::Interval { start, end } => {
                if !(end > start) || nt < 3 {
                    return Err(Error::input("time", "interval needs T0 < T1 and at least 3 nodes"));
                }
                let h = (end - start) / (nt - 1) as f64;
                let nodes = (0..nt).map(|k| start + h * k as f64).collect();
                (nodes, linalg::centered_difference(nt, h))
            }
        };
        Ok(TimeGrid {
            domain,
            spin,
            nodes,
            derivative,
        })
    }

    pub fn domain(&self) -> TimeDomain {
        self.domain
    }

    pub fn spin(&self) -> SpinStructure {
        self.spin
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn nt(&self) -> usize {
        self.nodes.len()
    }

    /// Row-major `Nt x Nt` derivative.
    pub fn derivative(&self) -> &[f64] {
        &self.derivative
    }

    /// `||d_t + d_t^T||_F`; zero on a circle.
    pub fn anti_hermitian_residual(&self) -> f64 {
        let n = self.nt();
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += (self.derivative[i * n + j] + self.derivative[j * n + i]).powi(2);
            }
        }
        s.sqrt()
    }

    pub fn is_circle(&self) -> bool {
        matches!(self.domain, TimeDomain::Circle { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "formula", rename_all = "lowercase")]
pub enum Formula {
    /// `[[0, +-i d_t + i D], [+-i d_t - i D, 0]]`.
    Trivial { sign: Sign },
    /// As `Trivial` with `d_t` replaced by `M = N^{-1/2} d_t N^{-1/2}`.
    Riemannian { sign: Sign },
    /// `[[0, -M + i D], [-M - i D, 0]]`.
    Lorentzian,
    /// Intrinsic space(time) discretization.
    Oracle,
}

#[derive(Debug, Clone)]
pub struct AssembledOperator {
    pub matrix: SparseMat,
    pub slice_dim: usize,
    pub nt: usize,
    pub signature: Signature,
    pub formula: Formula,
}

impl AssembledOperator {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn half_dim(&self) -> usize {
        self.nt * self.slice_dim
    }

    pub fn grading_diagonal(&self) -> Vec<C64> {
        let h = self.half_dim();
        (0..2 * h).map(|i| if i < h { ONE } else { -ONE }).collect()
    }

    pub fn grading(&self) -> SparseMat {
        SparseMat::diagonal(&self.grading_diagonal())
    }

    pub fn fundamental_symmetry(&self) -> SparseMat {
        let h = self.half_dim();
        SparseMat::from_triplets(2 * h, 2 * h, (0..2 * h).map(|i| (i, (i + h) % (2 * h), ONE)).collect())
    }

    /// `i J op`.
    pub fn krein_form(&self) -> SparseMat {
        self.fundamental_symmetry().matmul(&self.matrix).scale(I)
    }

    /// `||Gamma op Gamma + op||_F`.
    pub fn oddness_residual(&self) -> f64 {
        let g = self.grading();
        g.matmul(&self.matrix).matmul(&g).add(&self.matrix).frobenius_norm()
    }

    /// Residuals of `Gamma^2 = I`, `J^2 = I` and `Gamma J + J Gamma = 0`.
    pub fn krein_relations(&self) -> [f64; 3] {
        let g = self.grading();
        let j = self.fundamental_symmetry();
        let id = SparseMat::identity(self.dim());
        [
            g.matmul(&g).sub(&id).frobenius_norm(),
            j.matmul(&j).sub(&id).frobenius_norm(),
            g.matmul(&j).add(&j.matmul(&g)).frobenius_norm(),
        ]
    }

    /// Multiplication by `a (x) f` acting identically on both components.
    pub fn algebra_action(&self, a: &AlgebraElement, f: &[f64]) -> Result<SparseMat> {
        if f.len() != self.nt || a.matrix.dim() != self.slice_dim {
            return Err(Error::Shape("algebra element does not match the operator".into()));
        }
        let h = self.slice_dim;
        let half = self.half_dim();
        let mut trips = Vec::new();
        for c in 0..2 {
            for (k, &fk) in f.iter().enumerate() {
                let base = c * half + k * h;
                match &a.matrix {
                    Block::Diagonal(d) => trips.extend(d.iter().enumerate().map(|(i, v)| (base + i, base + i, v * fk))),
                    Block::Dense(m) => {
                        for i in 0..h {
                            for j in 0..h {
                                trips.push((base + i, base + j, m[(i, j)] * fk));
                            }
                        }
                    }
                }
            }
        }
        Ok(SparseMat::from_triplets(2 * half, 2 * half, trips))
    }
}

fn check_nodes(fam: &TripleFamily, tg: &TimeGrid) -> Result<()> {
    let scale = tg.nodes().iter().map(|t| t.abs()).fold(1.0, f64::max);
    let ok = fam.nodes() == tg.nt()
        && fam
            .time_nodes
            .iter()
            .zip(tg.nodes())
            .all(|(a, b)| (a - b).abs() <= 1e-12 * scale);
    if ok {
        Ok(())
    } else {
        Err(Error::NodeMismatch(format!(
            "family has {} nodes, time grid has {}",
            fam.nodes(),
            tg.nt()
        )))
    }
}

fn lapse_inv_sqrt(fam: &TripleFamily) -> Result<Vec<Block>> {
    fam.lapse
        .iter()
        .zip(&fam.time_nodes)
        .map(|(n, &t)| {
            let (lo, _) = n.eigen_range()?;
            if !(lo > 0.0) {
                return Err(Error::LapseBound {
                    x: Vec::new(),
                    t,
                    value: lo,
                    lower: 0.0,
                    upper: f64::INFINITY,
                });
            }
            n.inv_sqrt()
        })
        .collect()
}

fn assemble(
    fam: &TripleFamily,
    tg: &TimeGrid,
    time_coef: C64,
    use_lapse: bool,
    signature: Signature,
    formula: Formula,
) -> Result<AssembledOperator> {
    check_nodes(fam, tg)?;
    let h = fam.hilbert_dim;
    let nt = tg.nt();
    let half = nt * h;
    let inv_sqrt = if use_lapse { Some(lapse_inv_sqrt(fam)?) } else { None };
    let dt = tg.derivative();
    let mut trips: Vec<(usize, usize, C64)> = Vec::new();
    for k in 0..nt {
        for l in 0..nt {
            let w = dt[k * nt + l];
            if w == 0.0 {
                continue;
            }
            let coef = time_coef * w;
            let mut push = |i: usize, j: usize, v: C64| {
                let (r, c) = (k * h + i, l * h + j);
                trips.push((r, half + c, v));
                trips.push((half + r, c, v));
            };
            match &inv_sqrt {
                None => (0..h).for_each(|i| push(i, i, coef)),
                Some(blocks) => match (&blocks[k], &blocks[l]) {
                    (Block::Diagonal(a), Block::Diagonal(b)) => {
                        (0..h).for_each(|i| push(i, i, coef * (a[i] * b[i])))
                    }
                    (a, b) => {
                        let p = &a.to_dense() * &b.to_dense();
                        for i in 0..h {
                            for j in 0..h {
                                if p[(i, j)] != ZERO {
                                    push(i, j, coef * p[(i, j)]);
                                }
                            }
                        }
                    }
                },
            }
        }
    }
    for (k, d) in fam.dirac.iter().enumerate() {
        for i in 0..h {
            for j in 0..h {
                let v = d[(i, j)];
                if v != ZERO {
                    trips.push((k * h + i, half + k * h + j, I * v));
                    trips.push((half + k * h + i, k * h + j, -I * v));
                }
            }
        }
    }
    Ok(AssembledOperator {
        matrix: SparseMat::from_triplets(2 * half, 2 * half, trips),
        slice_dim: h,
        nt,
        signature,
        formula,
    })
}

/// Product of the family with `-+ i d_t`, ignoring the lapse.
pub fn assemble_trivial(fam: &TripleFamily, tg: &TimeGrid, sign: Sign) -> Result<AssembledOperator> {
    assemble(fam, tg, I * sign.value(), false, Signature::RIEMANNIAN, Formula::Trivial { sign })
}

/// Riemannian product operator `D+` or `D-`.
pub fn assemble_riemannian(fam: &TripleFamily, tg: &TimeGrid, sign: Sign) -> Result<AssembledOperator> {
    assemble(fam, tg, I * sign.value(), true, Signature::RIEMANNIAN, Formula::Riemannian { sign })
}

/// Lorentzian product operator.
pub fn assemble_lorentzian(fam: &TripleFamily, tg: &TimeGrid) -> Result<AssembledOperator> {
    assemble(fam, tg, -ONE, true, Signature::LORENTZIAN, Formula::Lorentzian)
}

/// `||D - (D+ + D-)/2 - (i/2)(D+ - D-)||_F`.
pub fn wick_residual(plus: &AssembledOperator, minus: &AssembledOperator, lorentzian: &AssembledOperator) -> f64 {
    let half = C64::new(0.5, 0.0);
    let sum = plus.matrix.combine(half, &minus.matrix, half);
    let diff = plus.matrix.combine(I * 0.5, &minus.matrix, -I * 0.5);
    lorentzian.matrix.sub(&sum).sub(&diff).frobenius_norm()
}

/// `||D+- - Nhat^{-1/2} D'+- Nhat^{-1/2}||_F` with `D'` built from the
/// conjugated family.
pub fn lapse_conjugation_residual(fam: &TripleFamily, tg: &TimeGrid, sign: Sign) -> Result<f64> {
    let direct = assemble_riemannian(fam, tg, sign)?;
    let conj = crate::family::conjugated_family(fam)?;
    let inner = assemble_riemannian(&conj, tg, sign)?;
    let blocks = lapse_inv_sqrt(fam)?;
    let h = fam.hilbert_dim;
    let half = tg.nt() * h;
    let rebuilt = if blocks.iter().all(|b| matches!(b, Block::Diagonal(_))) {
        let mut d = vec![ZERO; 2 * half];
        for (k, b) in blocks.iter().enumerate() {
            if let Block::Diagonal(v) = b {
                for i in 0..h {
                    d[k * h + i] = v[i];
                    d[half + k * h + i] = v[i];
                }
            }
        }
        inner.matrix.scale_rows_cols(Some(&d), Some(&d))
    } else {
        let mut trips = Vec::new();
        for c in 0..2 {
            for (k, b) in blocks.iter().enumerate() {
                let m = b.to_dense();
                let base = c * half + k * h;
                for i in 0..h {
                    for j in 0..h {
                        trips.push((base + i, base + j, m[(i, j)]));
                    }
                }
            }
        }
        let nhat = SparseMat::from_triplets(2 * half, 2 * half, trips);
        nhat.matmul(&inner.matrix).matmul(&nhat)
    };
    Ok(direct.matrix.sub(&rebuilt).frobenius_norm())
}

/// Family with lapse `N(s) = (s + (1 - s) N^{1/2})^2`.
pub fn homotopy_family(fam: &TripleFamily, s: f64) -> Result<TripleFamily> {
    let lapse = fam
        .lapse
        .iter()
        .map(|n| n.hermitian_map(|v| (s + (1.0 - s) * v.sqrt()).powi(2)))
        .collect::<Result<Vec<_>>>()?;
    TripleFamily::new(
        fam.time_nodes.clone(),
        fam.dirac.clone(),
        lapse,
        fam.algebra.clone(),
        fam.provenance.clone(),
    )
}

/// Dense `(op + shift)^{-1}`.
pub fn resolvent(op: &AssembledOperator, shift: C64) -> DenseMat {
    let mut a = op.matrix.to_dense();
    for i in 0..a.nrows() {
        a[(i, i)] += shift;
    }
    linalg::inverse(&a)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Which {
    Smallest,
    All,
}

#[derive(Debug, Clone)]
pub struct Spectrum {
    pub values: Vec<C64>,
    pub hermitian: bool,
    /// `||A - A^dagger||_F`.
    pub asymmetry: f64,
    pub method: String,
    /// Largest eigenpair residual for iterative solves.
    pub residual: Option<f64>,
}

impl Spectrum {
    pub fn magnitudes(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm()).collect()
    }
}

/// Largest dimension handled by dense solvers.
pub const DENSE_LIMIT: usize = 4096;
/// Relative asymmetry below which an operator is treated as Hermitian.
pub const SYMMETRIZE_THRESHOLD: f64 = 1e-8;

pub fn spectrum(op: &AssembledOperator, count: usize, which: Which) -> Result<Spectrum> {
    spectrum_of(&op.matrix, count, which, Some(op.half_dim()))
}

/// Order by magnitude, then real part, then imaginary part.
pub fn sort_spectrum(values: &mut [C64]) {
    values.sort_by(|a, b| {
        a.norm()
            .total_cmp(&b.norm())
            .then(a.re.total_cmp(&b.re))
            .then(a.im.total_cmp(&b.im))
    });
}

/// Eigenvalues of a sparse matrix. `split` names the component boundary used
/// by the block fast paths.
pub fn spectrum_of(m: &SparseMat, count: usize, which: Which, split: Option<usize>) -> Result<Spectrum> {
    let n = m.nrows();
    let asymmetry = m.hermitian_residual();
    let scale = m.frobenius_norm();
    let hermitian = asymmetry <= SYMMETRIZE_THRESHOLD * scale.max(f64::MIN_POSITIVE);
    if n > DENSE_LIMIT {
        if which == Which::All {
            return Err(Error::Unsupported(format!("full spectrum of dimension {n}")));
        }
        if !hermitian {
            return Err(Error::Unsupported(format!("iterative spectrum of non-Hermitian dimension {n}")));
        }
        let sym = m.add(&m.adjoint()).scale(C64::new(0.5, 0.0));
        let (vals, res) = linalg::smallest_magnitude_hermitian(&sym, count, 1e-8, 0x5eed)?;
        let mut values: Vec<C64> = vals.into_iter().map(|v| C64::new(v, 0.0)).collect();
        sort_spectrum(&mut values);
        return Ok(Spectrum {
            values,
            hermitian,
            asymmetry,
            method: "lanczos".into(),
            residual: Some(res),
        });
    }
    let (mut values, method) = dense_values(m, hermitian, split)?;
    sort_spectrum(&mut values);
    if which == Which::Smallest {
        values.truncate(count);
    }
    Ok(Spectrum {
        values,
        hermitian,
        asymmetry,
        method,
        residual: None,
    })
}

fn dense_values(m: &SparseMat, hermitian: bool, split: Option<usize>) -> Result<(Vec<C64>, String)> {
    let n = m.nrows();
    let real = |v: Vec<f64>| v.into_iter().map(|x| C64::new(x, 0.0)).collect::<Vec<_>>();
    if let Some(h) = split.filter(|h| 2 * h == n && *h > 0) {
        let in_diag = m.triplets().all(|(r, c, _)| (r < h) == (c < h));
        let in_off = m.triplets().all(|(r, c, _)| (r < h) != (c < h));
        if in_off {
            let upper = m.block(0..h, h..n).to_dense();
            let lower = m.block(h..n, 0..h).to_dense();
            if hermitian {
                let b = DenseMat::from_fn(h, h, |i, j| (upper[(i, j)] + lower[(j, i)].conj()) * 0.5);
                let sv = linalg::singular_values(&b)?;
                let mut out = real(sv.iter().map(|s| -s).collect());
                out.extend(real(sv));
                return Ok((out, "dense odd-block singular values".into()));
            }
            let mu = linalg::eigenvalues(&(&upper * &lower))?;
            let mut out = Vec::with_capacity(n);
            for z in mu {
                let r = z.sqrt();
                out.push(r);
                out.push(-r);
            }
            return Ok((out, "dense odd-block squared eigenvalues".into()));
        }
        if in_diag {
            let mut out = Vec::with_capacity(n);
            for range in [0..h, h..n] {
                let b = m.block(range.clone(), range).to_dense();
                if hermitian {
                    out.extend(real(linalg::hermitian_eigenvalues(&b)?));
                } else {
                    out.extend(linalg::eigenvalues(&b)?);
                }
            }
            return Ok((out, "dense block-diagonal".into()));
        }
    }
    let a = m.to_dense();
    if hermitian {
        Ok((real(linalg::hermitian_eigenvalues(&a)?), "dense hermitian".into()))
    } else {
        Ok((linalg::eigenvalues(&a)?, "dense general".into()))
    }
}

/// Layout of the doubled space for per-axis Fourier projections.
#[derive(Debug, Clone)]
pub struct BandLayout {
    pub nt: usize,
    pub time_spin: SpinStructure,
    pub points: usize,
    pub spatial_spin: Vec<SpinStructure>,
    pub spinor_dim: usize,
}

impl BandLayout {
    /// Project every axis onto the modes `|k| <= points/2 - 3/2`.
    pub fn projector(&self) -> Result<impl Fn(&[C64]) -> Vec<C64> + '_> {
        let n = self.spatial_spin.len();
        let l = self.points;
        let pt = linalg::band_projector(self.nt, self.time_spin, self.nt as f64 / 2.0 - 1.5)?;
        let px: Vec<Vec<f64>> = self
            .spatial_spin
            .iter()
            .map(|s| linalg::band_projector(l, *s, l as f64 / 2.0 - 1.5))
            .collect::<Result<_>>()?;
        let h = l.pow(n as u32) * self.spinor_dim;
        Ok(move |v: &[C64]| {
            let mut w = linalg::apply_along(v, 2, self.nt, h, &pt);
            for (j, p) in px.iter().enumerate() {
                let outer = 2 * self.nt * l.pow(j as u32);
                let inner = l.pow((n - 1 - j) as u32) * self.spinor_dim;
                w = linalg::apply_along(&w, outer, l, inner, p);
            }
            w
        })
    }
}

/// `(||[op, pi]||, ||P [op, pi] P||)` for a real diagonal `pi`, with `P` the
/// resolved-band projector of `layout`.
pub fn commutator_norms(op: &SparseMat, pi: &[f64], layout: &BandLayout, seed: u64) -> Result<(f64, f64)> {
    let adj = op.adjoint();
    let mul = |v: &[C64]| v.iter().zip(pi).map(|(x, p)| x * p).collect::<Vec<_>>();
    let comm = |v: &[C64]| {
        let a = op.matvec(&mul(v));
        let b = mul(&op.matvec(v));
        a.iter().zip(&b).map(|(x, y)| x - y).collect::<Vec<_>>()
    };
    let comm_adj = |v: &[C64]| {
        let a = mul(&adj.matvec(v));
        let b = adj.matvec(&mul(v));
        a.iter().zip(&b).map(|(x, y)| x - y).collect::<Vec<_>>()
    };
    let n = op.nrows();
    let raw = linalg::operator_norm(n, &comm, &comm_adj, seed)?;
    let p = layout.projector()?;
    let resolved = linalg::operator_norm(n, |v| p(&comm(&p(v))), |v| p(&comm_adj(&p(v))), seed)?;
    Ok((raw, resolved))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::Provenance;
    use std::f64::consts::PI;

    fn zero_family(h: usize, nodes: &[f64]) -> TripleFamily {
        TripleFamily::new(
            nodes.to_vec(),
            vec![DenseMat::zeros(h, h); nodes.len()],
            vec![Block::Diagonal(vec![ONE; h]); nodes.len()],
            vec![],
            Provenance::User,
        )
        .unwrap()
    }

    #[test]
    fn pauli_spectrum() {
        let m = SparseMat::from_triplets(2, 2, vec![(0, 1, I), (1, 0, -I)]);
        let s = spectrum_of(&m, 2, Which::All, None).unwrap();
        assert!(s.hermitian);
        assert!((s.values[0].re + 1.0).abs() < 1e-15 && (s.values[1].re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_dirac_gives_time_frequencies() {
        let tg = TimeGrid::new(TimeDomain::Circle { period: 2.0 * PI }, 8, SpinStructure::Antiperiodic).unwrap();
        let fam = zero_family(1, tg.nodes());
        for sign in [Sign::Plus, Sign::Minus] {
            let op = assemble_trivial(&fam, &tg, sign).unwrap();
            let s = spectrum(&op, 0, Which::All).unwrap();
            let mags = s.magnitudes();
            let mut expect: Vec<f64> = (0..4).flat_map(|k| vec![k as f64 + 0.5; 4]).collect();
            expect.sort_by(f64::total_cmp);
            for (a, b) in mags.iter().zip(&expect) {
                assert!((a - b).abs() < 1e-12);
            }
        }
        let lor = assemble_lorentzian(&fam, &tg).unwrap();
        let k = spectrum_of(&lor.krein_form(), 0, Which::All, Some(lor.half_dim())).unwrap();
        assert!(k.hermitian);
        let mut re: Vec<f64> = k.values.iter().map(|v| v.re).collect();
        re.sort_by(f64::total_cmp);
        let mut expect: Vec<f64> = (0..4).flat_map(|k| [k as f64 + 0.5, -(k as f64) - 0.5, k as f64 + 0.5, -(k as f64) - 0.5]).collect();
        expect.sort_by(f64::total_cmp);
        for (a, b) in re.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn single_node_reduces_to_hypersurface() {
        let tg = TimeGrid::new(TimeDomain::Circle { period: 1.0 }, 1, SpinStructure::Periodic).unwrap();
        let d = linalg::dense_from_rows(&[vec![C64::new(1.0, 0.0), C64::new(0.0, 2.0)], vec![C64::new(0.0, -2.0), C64::new(-3.0, 0.0)]]);
        let fam = TripleFamily::new(vec![0.0], vec![d.clone()], vec![Block::Diagonal(vec![ONE; 2])], vec![], Provenance::User).unwrap();
        let op = assemble_riemannian(&fam, &tg, Sign::Plus).unwrap();
        let lor = assemble_lorentzian(&fam, &tg).unwrap();
        assert_eq!(op.matrix, lor.matrix);
        let s = spectrum(&op, 0, Which::All).unwrap();
        let mut ev = linalg::hermitian_eigenvalues(&d).unwrap();
        ev.extend(ev.clone().iter().map(|v| -v));
        let mut want: Vec<C64> = ev.into_iter().map(|v| C64::new(v, 0.0)).collect();
        sort_spectrum(&mut want);
        for (a, b) in s.values.iter().zip(&want) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn mismatch_and_nonpositive_lapse() {
        let tg = TimeGrid::new(TimeDomain::Circle { period: 1.0 }, 4, SpinStructure::Periodic).unwrap();
        let fam = zero_family(2, &[0.0, 0.1, 0.2]);
        assert!(matches!(assemble_riemannian(&fam, &tg, Sign::Plus), Err(Error::NodeMismatch(_))));
        let mut fam = zero_family(2, tg.nodes());
        fam.lapse[1] = Block::Diagonal(vec![ONE, ZERO]);
        assert!(matches!(assemble_riemannian(&fam, &tg, Sign::Plus), Err(Error::LapseBound { .. })));
    }

    #[test]
    fn interval_boundary_rows() {
        let tg = TimeGrid::new(TimeDomain::Interval { start: 0.0, end: 1.0 }, 5, SpinStructure::Periodic).unwrap();
        assert!(tg.anti_hermitian_residual() > 0.0);
        let d = tg.derivative();
        assert!(d[..5].iter().all(|v| *v == 0.0) && d[20..].iter().all(|v| *v == 0.0));
        let circle = TimeGrid::new(TimeDomain::Circle { period: 1.0 }, 6, SpinStructure::Antiperiodic).unwrap();
        assert_eq!(circle.anti_hermitian_residual(), 0.0);
    }
}
