//! Intrinsic discretization of the space(time) operator and closed-form data.
//!
//! The space(time) is `Z = T^n x S^1_T` with diagonal metric
//! `g = sum_j a_j(x, T)^2 dx_j^2 + eps0 N(x, T)^2 dT^2`. Everything here works
//! from the full metric: Christoffel symbols, the orthonormal frame
//! `e_0 = N^{-1} d_T`, `e_j = a_j^{-1} d_j` and its connection coefficients.
//! Nothing is taken from the hypersurface discretization.
//!
//! The operator acts on `l^2(dx dT)` through `psi -> V psi` with
//! `V = (N prod_j a_j)^{1/2}`, so its matrix is `V D_Z V^{-1}`. Layout matches
//! the assembler: `(c, k, site, s)` with the even spinor index `(c, s)`.

use crate::assembler::{self, Spectrum, Which};
use crate::clifford::{build_even_rep, build_odd_rep, Signature};
use crate::error::{Error, Result};
use crate::expr::{Expr, Var};
use crate::lattice::{SpinStructure, TimeDomain};
use crate::linalg::{DenseMat, SparseMat, I, ZERO};
use crate::scenario::Scenario;
use crate::C64;
use std::f64::consts::PI;

/// How metric derivatives are obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Derivatives {
    Analytic,
    Centered { step: f64 },
}

#[derive(Debug, Clone)]
pub struct SpacetimeGrid {
    pub n: usize,
    pub points: usize,
    pub circumference: Vec<f64>,
    pub spin: Vec<SpinStructure>,
    pub nt: usize,
    pub period: f64,
    pub time_spin: SpinStructure,
    /// False for interval time, where only pointwise geometry is available.
    pub circle: bool,
    pub signature: Signature,
    scales: Vec<Expr>,
    lapse: Expr,
    /// `d[lambda][mu]`: derivative of `b_mu` along coordinate `lambda`
    /// (`0` is `T`), present for analytic derivatives.
    d: Option<Vec<Vec<Expr>>>,
    pub derivatives: Derivatives,
}

fn var(lambda: usize) -> Var {
    if lambda == 0 {
        Var::T
    } else {
        Var::X(lambda - 1)
    }
}

impl SpacetimeGrid {
    pub fn new(
        points: usize,
        circumference: Vec<f64>,
        spin: Vec<SpinStructure>,
        nt: usize,
        period: f64,
        time_spin: SpinStructure,
        signature: Signature,
        scales: Vec<Expr>,
        lapse: Expr,
        derivatives: Derivatives,
    ) -> Result<Self> {
        let n = scales.len();
        if n == 0 || circumference.len() != n || spin.len() != n {
            return Err(Error::Shape(format!("{n} scale factors for {} axes", circumference.len())));
        }
        let mut g = SpacetimeGrid {
            n,
            points,
            circumference,
            spin,
            nt,
            period,
            time_spin,
            circle: true,
            signature,
            scales,
            lapse,
            d: None,
            derivatives,
        };
        if derivatives == Derivatives::Analytic {
            g.d = Some(
                (0..=n)
                    .map(|l| (0..=n).map(|m| g.coefficient_expr(m).diff(var(l))).collect())
                    .collect(),
            );
        }
        Ok(g)
    }

    /// Grid for a scenario at its configured resolution. Interval time keeps
    /// the pointwise geometry but has no intrinsic operator.
    pub fn from_scenario(sc: &Scenario, derivatives: Derivatives) -> Result<Self> {
        let (period, circle) = match sc.time.domain {
            TimeDomain::Circle { period } => (period, true),
            TimeDomain::Interval { start, end } => (end - start, false),
        };
        let mut g = Self::new(
            sc.points,
            sc.circumference.clone(),
            sc.spin.clone(),
            sc.time.nt,
            period,
            sc.time.spin,
            sc.signature,
            sc.metric_scale.clone(),
            sc.lapse_expr.clone(),
            derivatives,
        )?;
        g.circle = circle;
        Ok(g)
    }

    fn coefficient_expr(&self, mu: usize) -> &Expr {
        if mu == 0 {
            &self.lapse
        } else {
            &self.scales[mu - 1]
        }
    }

    pub fn dim(&self) -> usize {
        self.nt * self.points.pow(self.n as u32) * self.even_spinor_dim()
    }

    pub fn even_spinor_dim(&self) -> usize {
        2 * (1usize << ((self.n - 1) / 2))
    }

    fn eps(&self, mu: usize) -> f64 {
        if mu == 0 {
            self.signature.epsilon0()
        } else {
            1.0
        }
    }

    /// Frame coefficients `b_mu` at `(x, T)`: `b_0 = N`, `b_j = a_j`.
    pub fn coefficients(&self, x: &[f64], t: f64) -> Vec<f64> {
        (0..=self.n).map(|m| self.coefficient_expr(m).eval(t, x)).collect()
    }

    fn coefficient_derivatives(&self, x: &[f64], t: f64) -> Vec<Vec<f64>> {
        match (&self.d, self.derivatives) {
            (Some(d), _) => d.iter().map(|row| row.iter().map(|e| e.eval(t, x)).collect()).collect(),
            (None, Derivatives::Centered { step }) => (0..=self.n)
                .map(|l| {
                    let (mut xp, mut xm) = (x.to_vec(), x.to_vec());
                    let (mut tp, mut tm) = (t, t);
                    if l == 0 {
                        tp += step;
                        tm -= step;
                    } else {
                        xp[l - 1] += step;
                        xm[l - 1] -= step;
                    }
                    let up = self.coefficients(&xp, tp);
                    let down = self.coefficients(&xm, tm);
                    up.iter().zip(&down).map(|(u, v)| (u - v) / (2.0 * step)).collect()
                })
                .collect(),
            (None, Derivatives::Analytic) => unreachable!("analytic derivatives are precomputed"),
        }
    }

    /// Christoffel symbols `G[lambda][mu][nu]` of the diagonal metric.
    pub fn christoffel(&self, x: &[f64], t: f64) -> Result<Vec<Vec<Vec<f64>>>> {
        let b = self.coefficients(x, t);
        if let Some(m) = b.iter().position(|v| !(*v > 0.0)) {
            return Err(Error::InvalidMetric {
                x: x.to_vec(),
                t,
                detail: format!("frame coefficient {m} is {}", b[m]),
            });
        }
        let db = self.coefficient_derivatives(x, t);
        let d = self.n + 1;
        let gdiag: Vec<f64> = (0..d).map(|m| self.eps(m) * b[m] * b[m]).collect();
        // dg[l][m] = d_l g_mm
        let dg: Vec<Vec<f64>> = (0..d)
            .map(|l| (0..d).map(|m| 2.0 * self.eps(m) * b[m] * db[l][m]).collect())
            .collect();
        let mut out = vec![vec![vec![0.0; d]; d]; d];
        for l in 0..d {
            for m in 0..d {
                for nu in 0..d {
                    let mut s = 0.0;
                    if l == nu {
                        s += dg[m][l];
                    }
                    if l == m {
                        s += dg[nu][l];
                    }
                    if m == nu {
                        s -= dg[l][m];
                    }
                    out[l][m][nu] = s / (2.0 * gdiag[l]);
                }
            }
        }
        Ok(out)
    }

    /// `w[mu][alpha][beta] = g(nabla_{e_mu} e_alpha, e_beta)`.
    pub fn connection(&self, x: &[f64], t: f64) -> Result<Vec<Vec<Vec<f64>>>> {
        let b = self.coefficients(x, t);
        let gam = self.christoffel(x, t)?;
        let d = self.n + 1;
        let mut w = vec![vec![vec![0.0; d]; d]; d];
        for mu in 0..d {
            for al in 0..d {
                for be in 0..d {
                    if al != be {
                        w[mu][al][be] = b[be] * self.eps(be) * gam[be][mu][al] / (b[mu] * b[al]);
                    }
                }
            }
        }
        Ok(w)
    }

    pub fn time_nodes(&self) -> Vec<f64> {
        (0..self.nt).map(|k| self.period * k as f64 / self.nt as f64).collect()
    }

    fn site_coords(&self, site: usize) -> Vec<f64> {
        let l = self.points;
        let mut rem = site;
        let mut x = vec![0.0; self.n];
        for j in (0..self.n).rev() {
            x[j] = self.circumference[j] * (rem % l) as f64 / l as f64;
            rem /= l;
        }
        x
    }
}

/// Fourier differentiation matrix from its closed form, row-major.
pub fn spectral_derivative(points: usize, length: f64, spin: SpinStructure) -> Result<Vec<f64>> {
    let odd = points % 2 == 1;
    if spin == SpinStructure::Antiperiodic && odd {
        return Err(Error::ResolutionTooSmall {
            axis: 0,
            points,
            min: points + 1,
        });
    }
    let scale = 2.0 * PI / length;
    let mut d = vec![0.0; points * points];
    for i in 0..points {
        for j in 0..points {
            if i == j {
                continue;
            }
            let m = i as i64 - j as i64;
            let theta = PI * m as f64 / points as f64;
            let sign = if m.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            let kernel = if spin == SpinStructure::Periodic && !odd {
                theta.cos() / theta.sin()
            } else {
                1.0 / theta.sin()
            };
            d[i * points + j] = 0.5 * sign * kernel * scale;
        }
    }
    Ok(d)
}

/// `V D_Z V^{-1}` on `l^2(dx dT)`.
pub fn intrinsic_dirac(sg: &SpacetimeGrid) -> Result<SparseMat> {
    if !sg.circle {
        return Err(Error::Unsupported("the intrinsic operator needs circle time".into()));
    }
    if sg.n % 2 == 0 {
        return Err(Error::InvalidDimension {
            what: "intrinsic operator space dimension",
            value: sg.n,
        });
    }
    let rep = build_even_rep(&build_odd_rep(sg.n)?, sg.signature)?;
    let gammas = rep.generators();
    let d = sg.n + 1;
    let s2 = rep.spinor_dim();
    let s = s2 / 2;
    let l = sg.points;
    let sites = l.pow(sg.n as u32);
    let h = sites * s;
    let half = sg.nt * h;
    let times = sg.time_nodes();
    let dt = spectral_derivative(sg.nt, sg.period, sg.time_spin)?;
    let dx: Vec<Vec<f64>> = (0..sg.n)
        .map(|j| spectral_derivative(l, sg.circumference[j], sg.spin[j]))
        .collect::<Result<_>>()?;
    // Per spacetime point (k, site): frame coefficients and V.
    let npts = sg.nt * sites;
    let mut coef = Vec::with_capacity(npts);
    let mut vol = Vec::with_capacity(npts);
    let mut potential = Vec::with_capacity(npts);
    for k in 0..sg.nt {
        for site in 0..sites {
            let x = sg.site_coords(site);
            let b = sg.coefficients(&x, times[k]);
            vol.push(b.iter().product::<f64>().sqrt());
            let w = sg.connection(&x, times[k])?;
            // sum_mu eps_mu gamma_mu Omega_mu,
            // Omega_mu = 1/2 sum_{al<be} eps_al eps_be w[mu][al][be] gamma_al gamma_be
            let mut p = DenseMat::zeros(s2, s2);
            for mu in 0..d {
                let mut omega = DenseMat::zeros(s2, s2);
                for al in 0..d {
                    for be in al + 1..d {
                        let c = 0.5 * sg.eps(al) * sg.eps(be) * w[mu][al][be];
                        if c != 0.0 {
                            omega += (&gammas[al] * &gammas[be]) * faer::Scale(C64::new(c, 0.0));
                        }
                    }
                }
                p += (&gammas[mu] * &omega) * faer::Scale(C64::new(sg.eps(mu), 0.0));
            }
            coef.push(b);
            potential.push(p);
        }
    }
    let global = |a: usize, k: usize, site: usize| (a / s) * half + k * h + site * s + a % s;
    let mut trips: Vec<(usize, usize, C64)> = Vec::new();
    let push_gamma = |mu: usize, row: (usize, usize), col: (usize, usize), c: f64, out: &mut Vec<_>| {
        let g = &gammas[mu];
        for a in 0..s2 {
            for bb in 0..s2 {
                let v = g[(a, bb)];
                if v != ZERO {
                    out.push((global(a, row.0, row.1), global(bb, col.0, col.1), v * c));
                }
            }
        }
    };
    for k in 0..sg.nt {
        for site in 0..sites {
            let p = k * sites + site;
            let x_idx: Vec<usize> = {
                let mut rem = site;
                let mut idx = vec![0; sg.n];
                for j in (0..sg.n).rev() {
                    idx[j] = rem % l;
                    rem /= l;
                }
                idx
            };
            for m in 0..sg.nt {
                let w = dt[k * sg.nt + m];
                if w != 0.0 {
                    let q = m * sites + site;
                    let c = sg.eps(0) * vol[p] / coef[p][0] * w / vol[q];
                    push_gamma(0, (k, site), (m, site), c, &mut trips);
                }
            }
            for j in 0..sg.n {
                let stride = l.pow((sg.n - 1 - j) as u32);
                let base = site - x_idx[j] * stride;
                for m in 0..l {
                    let w = dx[j][x_idx[j] * l + m];
                    if w != 0.0 {
                        let col = base + m * stride;
                        let q = k * sites + col;
                        let c = vol[p] / coef[p][j + 1] * w / vol[q];
                        push_gamma(j + 1, (k, site), (k, col), c, &mut trips);
                    }
                }
            }
            for a in 0..s2 {
                for bb in 0..s2 {
                    let v = potential[p][(a, bb)];
                    if v != ZERO {
                        trips.push((global(a, k, site), global(bb, k, site), v));
                    }
                }
            }
        }
    }
    Ok(SparseMat::from_triplets(2 * half, 2 * half, trips))
}

/// `i J_Z D_Z` with `J_Z = gamma(e_0)`, the swap of the two components in the
/// Lorentzian basis.
pub fn krein_form(dz: &SparseMat) -> SparseMat {
    let n = dz.nrows();
    let half = n / 2;
    let j = SparseMat::from_triplets(n, n, (0..n).map(|i| (i, (i + half) % n, C64::new(1.0, 0.0))).collect());
    j.matmul(dz).scale(I)
}

/// Spectrum of the intrinsic operator (Riemannian) or of its Krein form
/// (Lorentzian).
pub fn intrinsic_spectrum(sg: &SpacetimeGrid, count: usize) -> Result<Spectrum> {
    let dz = intrinsic_dirac(sg)?;
    let m = if sg.signature.epsilon0() < 0.0 { krein_form(&dz) } else { dz };
    let half = m.nrows() / 2;
    assembler::spectrum_of(&m, count, Which::Smallest, Some(half))
}

fn spinor_dim(axes: usize) -> usize {
    1 << (axes / 2)
}

fn freq(kappa: &[f64], circ: &[f64]) -> f64 {
    kappa
        .iter()
        .zip(circ)
        .map(|(k, c)| (2.0 * PI * k / c).powi(2))
        .sum::<f64>()
        .sqrt()
}

fn sorted_pm(mags: Vec<f64>, mult: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * mult * mags.len());
    for m in mags {
        for _ in 0..mult {
            out.push(-m);
            out.push(m);
        }
    }
    out.sort_by(|a, b| a.abs().total_cmp(&b.abs()).then(a.total_cmp(b)));
    out
}

fn product_modes(sets: &[Vec<f64>], circ: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0f64];
    let mut partial: Vec<Vec<f64>> = vec![Vec::new()];
    for set in sets {
        partial = partial
            .iter()
            .flat_map(|p| set.iter().map(move |k| {
                let mut q = p.clone();
                q.push(*k);
                q
            }))
            .collect();
    }
    if !partial.is_empty() {
        out = partial.iter().map(|k| freq(k, circ)).collect();
    }
    out
}

/// Smallest `count` eigenvalues of the flat operator on the continuum torus
/// with the given circumferences and spin structures (time axis included).
pub fn flat_spectrum(circumference: &[f64], spin: &[SpinStructure], count: usize) -> Vec<f64> {
    let axes = circumference.len();
    let mult = spinor_dim(axes) / 2;
    let lmax = circumference.iter().cloned().fold(0.0, f64::max);
    let mut k = 1usize;
    loop {
        let sets: Vec<Vec<f64>> = spin
            .iter()
            .map(|s| {
                let shift = if *s == SpinStructure::Antiperiodic { 0.5 } else { 0.0 };
                let top = k as i64;
                (-top - 1..=top)
                    .map(|m| m as f64 + shift)
                    .filter(|v| v.abs() <= k as f64)
                    .collect()
            })
            .collect();
        let vals = sorted_pm(product_modes(&sets, circumference), mult);
        let bound = 2.0 * PI * (k as f64 + 0.5) / lmax;
        if vals.len() >= count && vals[count - 1].abs() <= bound {
            return vals.into_iter().take(count).collect();
        }
        k *= 2;
    }
}

/// Mode numbers resolved by an `l`-point differentiation matrix; the periodic
/// Nyquist mode maps to zero.
fn grid_modes(l: usize, spin: SpinStructure) -> Vec<f64> {
    let lf = l as f64;
    (0..l)
        .map(|m| match spin {
            SpinStructure::Antiperiodic => m as f64 - lf / 2.0 + 0.5,
            SpinStructure::Periodic if l % 2 == 0 && 2 * m == l => 0.0,
            SpinStructure::Periodic if 2 * m < l => m as f64,
            SpinStructure::Periodic => m as f64 - lf,
        })
        .collect()
}

/// Exact spectrum of the flat discretization: per-axis frequencies are the
/// eigenvalues of the differentiation matrices.
pub fn flat_spectrum_on_grid(points: &[usize], circumference: &[f64], spin: &[SpinStructure]) -> Vec<f64> {
    let sets: Vec<Vec<f64>> = points.iter().zip(spin).map(|(&l, s)| grid_modes(l, *s)).collect();
    sorted_pm(product_modes(&sets, circumference), spinor_dim(points.len()) / 2)
}

/// Exact spectrum of `i J D` for the flat Lorentzian discretization, axis 0
/// being time: `omega + mu` and `omega - mu` over time frequencies `omega`
/// and hypersurface eigenvalues `mu`. Sorted ascending.
pub fn flat_krein_spectrum_on_grid(points: &[usize], circumference: &[f64], spin: &[SpinStructure]) -> Vec<f64> {
    let omega: Vec<f64> = grid_modes(points[0], spin[0])
        .into_iter()
        .map(|k| 2.0 * PI * k / circumference[0])
        .collect();
    let n = points.len() - 1;
    let mu: Vec<f64> = if n == 1 {
        grid_modes(points[1], spin[1])
            .into_iter()
            .map(|k| 2.0 * PI * k / circumference[1])
            .collect()
    } else {
        let sets: Vec<Vec<f64>> = points[1..].iter().zip(&spin[1..]).map(|(&l, s)| grid_modes(l, *s)).collect();
        sorted_pm(product_modes(&sets, &circumference[1..]), (1usize << ((n - 1) / 2)) / 2)
    };
    let mut out: Vec<f64> = omega
        .iter()
        .flat_map(|w| mu.iter().flat_map(move |m| [w + m, w - m]))
        .collect();
    out.sort_by(f64::total_cmp);
    out
}

/// Second fundamental form `K(e_j, e_j) = -eps0 g(nabla_{e_j} e_0, e_j)` and
/// mean curvature `H = (1/n) sum_j K_jj` at `(x, T)`.
pub fn extrinsic_curvature(sg: &SpacetimeGrid, x: &[f64], t: f64) -> Result<(Vec<f64>, f64)> {
    let w = sg.connection(x, t)?;
    let eps0 = sg.signature.epsilon0();
    let k: Vec<f64> = (1..=sg.n).map(|j| -eps0 * w[j][0][j]).collect();
    let h = k.iter().sum::<f64>() / sg.n as f64;
    Ok((k, h))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg;

    fn flat(l: usize, nt: usize, sig: Signature) -> SpacetimeGrid {
        SpacetimeGrid::new(
            l,
            vec![2.0 * PI],
            vec![SpinStructure::Antiperiodic],
            nt,
            2.0 * PI,
            SpinStructure::Antiperiodic,
            sig,
            vec![Expr::constant(1.0)],
            Expr::constant(1.0),
            Derivatives::Analytic,
        )
        .unwrap()
    }

    #[test]
    fn closed_form_matches_fourier_sum() {
        for (l, s) in [(8, SpinStructure::Antiperiodic), (8, SpinStructure::Periodic), (7, SpinStructure::Periodic)] {
            let a = spectral_derivative(l, 3.0, s).unwrap();
            let b = linalg::fourier_derivative(l, 3.0, s).unwrap();
            let err = a.iter().zip(&b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
            assert!(err < 1e-12, "{l} {s:?}: {err}");
        }
    }

    #[test]
    fn flat_torus_spectrum() {
        let sg = flat(8, 8, Signature::RIEMANNIAN);
        let s = intrinsic_spectrum(&sg, 128).unwrap();
        let mut want = flat_spectrum_on_grid(&[8, 8], &[2.0 * PI; 2], &[SpinStructure::Antiperiodic; 2]);
        assert_eq!(s.values.len(), want.len());
        assert!(s.values.iter().all(|v| v.im.abs() < 1e-10));
        let mut got: Vec<f64> = s.values.iter().map(|v| v.re).collect();
        got.sort_by(f64::total_cmp);
        want.sort_by(f64::total_cmp);
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() < 1e-10, "{a} {b}");
        }
        let c = flat_spectrum(&[2.0 * PI; 2], &[SpinStructure::Antiperiodic; 2], 8);
        assert!((c[0].abs() - 0.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(c.len(), 8);
    }

    #[test]
    fn harmonic_spinors_and_scaling() {
        let p = flat_spectrum(&[1.0, 1.0, 1.0, 1.0], &[SpinStructure::Periodic; 4], 6);
        assert_eq!(p.iter().filter(|v| **v == 0.0).count(), 4);
        let a = flat_spectrum(&[2.0 * PI, 2.0 * PI], &[SpinStructure::Periodic, SpinStructure::Antiperiodic], 2);
        let b = flat_spectrum(&[4.0 * PI, 2.0 * PI], &[SpinStructure::Periodic, SpinStructure::Antiperiodic], 2);
        assert!((a[0].abs() - 0.5).abs() < 1e-15 && (b[0].abs() - 0.5).abs() < 1e-15);
        let c = flat_spectrum(&[2.0 * PI, 2.0 * PI], &[SpinStructure::Antiperiodic, SpinStructure::Periodic], 4);
        let d = flat_spectrum(&[4.0 * PI, 2.0 * PI], &[SpinStructure::Antiperiodic, SpinStructure::Periodic], 4);
        assert!((c[0].abs() - 0.5).abs() < 1e-15 && (d[0].abs() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn exponential_curvature() {
        let sg = SpacetimeGrid::new(
            8,
            vec![2.0 * PI],
            vec![SpinStructure::Periodic],
            8,
            1.0,
            SpinStructure::Periodic,
            Signature::RIEMANNIAN,
            vec![Expr::parse("exp(t)", 1).unwrap()],
            Expr::constant(1.0),
            Derivatives::Analytic,
        )
        .unwrap();
        let (k, h) = extrinsic_curvature(&sg, &[0.3], 0.2).unwrap();
        assert!((k[0] + 1.0).abs() < 1e-14 && (h + 1.0).abs() < 1e-14);
        let lor = SpacetimeGrid::new(
            8, vec![2.0 * PI], vec![SpinStructure::Periodic], 8, 1.0, SpinStructure::Periodic,
            Signature::LORENTZIAN, vec![Expr::parse("exp(t)", 1).unwrap()], Expr::constant(2.0), Derivatives::Analytic,
        )
        .unwrap();
        let (_, h) = extrinsic_curvature(&lor, &[0.3], 0.2).unwrap();
        assert!((h - 0.5).abs() < 1e-14);
    }

    #[test]
    fn static_metric_has_no_curvature() {
        let sg = SpacetimeGrid::new(
            8, vec![2.0 * PI], vec![SpinStructure::Periodic], 8, 1.0, SpinStructure::Periodic,
            Signature::RIEMANNIAN, vec![Expr::parse("1 + 0.2*cos(x1)", 1).unwrap()], Expr::constant(1.0),
            Derivatives::Centered { step: 1e-4 },
        )
        .unwrap();
        let (k, _) = extrinsic_curvature(&sg, &[0.7], 0.0).unwrap();
        assert!(k[0].abs() < 1e-12);
    }

    #[test]
    fn lorentzian_krein_form_is_hermitian_when_flat() {
        let sg = flat(8, 6, Signature::LORENTZIAN);
        let k = krein_form(&intrinsic_dirac(&sg).unwrap());
        assert!(k.hermitian_residual() < 1e-12);
        let mut got = linalg::hermitian_eigenvalues(&k.to_dense()).unwrap();
        got.sort_by(f64::total_cmp);
        let want = flat_krein_spectrum_on_grid(&[6, 8], &[2.0 * PI; 2], &[SpinStructure::Antiperiodic; 2]);
        assert_eq!(got.len(), want.len());
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() < 1e-10, "{a} {b}");
        }
    }
}
