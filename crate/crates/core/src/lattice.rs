//! Hypersurface geometry on flat tori `T^n` with diagonal metrics.
//!
//! Grid functions are indexed row-major in the spatial multi-index with the
//! spinor index fastest: `index = site * spinor_dim + s`.
//!
//! Hypersurface Dirac matrices act on `l^2` of the grid. The density-weighted
//! operator `rho_t D_{M_t} rho_t^{-1}` on `L^2(dvol_0)` is represented there
//! through the additional fixed weight `|g_0|^{1/4}`, so the matrix is
//! `|g_t|^{1/4} D_{M_t} |g_t|^{-1/4}`.

use crate::clifford::{CliffordRep, Origin, Signature};
use crate::error::{Error, Result};
use crate::expr::{Expr, Var};
use crate::linalg::{self, DenseMat, ZERO};
use crate::C64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpinStructure {
    Periodic,
    Antiperiodic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TimeDomain {
    Circle { period: f64 },
    Interval { start: f64, end: f64 },
}

impl TimeDomain {
    pub fn timescale(&self) -> f64 {
        match *self {
            TimeDomain::Circle { period } => period,
            TimeDomain::Interval { start, end } => end - start,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    /// `g_t = diag(a_j(t)^2)`.
    ConstantDiagonal,
    /// `g_t(x) = diag(a_j(x, t)^2)`.
    DiagonalField,
}

/// How `d/dt` of the volume function is evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeDerivative {
    Analytic,
    Centered { step: f64 },
}

/// Family of diagonal metrics `g_t = diag(a_j^2)` given by the frame scales
/// `a_j(x, t)`.
#[derive(Debug, Clone)]
pub struct MetricFamily {
    n: usize,
    kind: MetricKind,
    scale: Vec<Expr>,
    scale_dt: Vec<Expr>,
    scale_dx: Vec<Vec<Expr>>,
    time_domain: TimeDomain,
}

impl MetricFamily {
    pub fn new(kind: MetricKind, scale: Vec<Expr>, time_domain: TimeDomain) -> Result<Self> {
        let n = scale.len();
        if n == 0 || n % 2 == 0 {
            return Err(Error::InvalidDimension {
                what: "spatial dimension",
                value: n,
            });
        }
        if kind == MetricKind::ConstantDiagonal {
            if let Some(j) = scale.iter().position(|e| e.depends_on_space()) {
                return Err(Error::input(
                    format!("scale[{j}]"),
                    "constant_diagonal metric coefficients may depend on t only",
                ));
            }
        }
        let scale_dt = scale.iter().map(|e| e.diff(Var::T)).collect();
        let scale_dx = scale
            .iter()
            .map(|e| (0..n).map(|k| e.diff(Var::X(k))).collect())
            .collect();
        Ok(MetricFamily {
            n,
            kind,
            scale,
            scale_dt,
            scale_dx,
            time_domain,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> MetricKind {
        self.kind
    }

    pub fn time_domain(&self) -> TimeDomain {
        self.time_domain
    }

    pub fn scale_exprs(&self) -> &[Expr] {
        &self.scale
    }

    /// Frame scales `a_j(x, t)`; the metric diagonal is their square.
    pub fn scales(&self, x: &[f64], t: f64) -> Vec<f64> {
        self.scale.iter().map(|e| e.eval(t, x)).collect()
    }

    /// Metric diagonal entries `a_j^2`.
    pub fn diagonal(&self, x: &[f64], t: f64) -> Vec<f64> {
        self.scales(x, t).into_iter().map(|a| a * a).collect()
    }

    pub fn scales_dt(&self, x: &[f64], t: f64) -> Vec<f64> {
        self.scale_dt.iter().map(|e| e.eval(t, x)).collect()
    }

    /// `d a_j / d x_k`.
    pub fn scale_dx(&self, j: usize, k: usize, x: &[f64], t: f64) -> f64 {
        self.scale_dx[j][k].eval(t, x)
    }

    /// Positive scales at `(x, t)` or an invalid-metric error.
    pub fn checked_scales(&self, x: &[f64], t: f64) -> Result<Vec<f64>> {
        let a = self.scales(x, t);
        if let Some(bad) = a.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::InvalidMetric {
                x: x.to_vec(),
                t,
                detail: format!("frame scale {bad} is not positive"),
            });
        }
        Ok(a)
    }

    /// Check positivity on every grid site at every given time.
    pub fn validate_on(&self, grid: &SpatialGrid, times: &[f64]) -> Result<()> {
        for &t in times {
            for site in 0..grid.sites() {
                self.checked_scales(&grid.coords(site), t)?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LapseKind {
    TimeOnly,
    SpaceTime,
}

/// Positive lapse `N(x, t)` with optional bounds `N1 <= N <= N2`.
#[derive(Debug, Clone)]
pub struct LapseFamily {
    kind: LapseKind,
    expr: Expr,
    bounds: Option<(f64, f64)>,
}

impl LapseFamily {
    pub fn new(kind: LapseKind, expr: Expr, bounds: Option<(f64, f64)>) -> Result<Self> {
        if kind == LapseKind::TimeOnly && expr.depends_on_space() {
            return Err(Error::input("expr", "time_only lapse may depend on t only"));
        }
        if let Some((lo, hi)) = bounds {
            if !(lo > 0.0 && lo <= hi) {
                return Err(Error::input("bounds", "need 0 < N1 <= N2"));
            }
        }
        Ok(LapseFamily { kind, expr, bounds })
    }

    pub fn unit() -> Self {
        LapseFamily {
            kind: LapseKind::TimeOnly,
            expr: Expr::constant(1.0),
            bounds: None,
        }
    }

    pub fn kind(&self) -> LapseKind {
        self.kind
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn bounds(&self) -> Option<(f64, f64)> {
        self.bounds
    }

    pub fn value(&self, x: &[f64], t: f64) -> f64 {
        self.expr.eval(t, x)
    }

    pub fn value_dt(&self, x: &[f64], t: f64) -> f64 {
        self.expr.diff(Var::T).eval(t, x)
    }

    pub fn is_constant(&self) -> bool {
        !self.expr.depends_on_space() && !self.expr.depends_on(Var::T)
    }

    pub fn checked_value(&self, x: &[f64], t: f64) -> Result<f64> {
        let v = self.value(x, t);
        let (lower, upper) = self.bounds.unwrap_or((0.0, f64::INFINITY));
        let ok = v.is_finite() && v > 0.0 && v >= lower && v <= upper;
        if !ok {
            return Err(Error::LapseBound {
                x: x.to_vec(),
                t,
                value: v,
                lower,
                upper,
            });
        }
        Ok(v)
    }
}

/// Uniform periodic grid on `T^n` with per-axis spin structures.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialGrid {
    n: usize,
    points: usize,
    circumference: Vec<f64>,
    spin: Vec<SpinStructure>,
    spinor_dim: usize,
}

impl SpatialGrid {
    pub fn new(points: usize, circumference: Vec<f64>, spin: Vec<SpinStructure>) -> Result<Self> {
        let n = circumference.len();
        if n == 0 || n % 2 == 0 {
            return Err(Error::InvalidDimension {
                what: "spatial dimension",
                value: n,
            });
        }
        if spin.len() != n {
            return Err(Error::Shape(format!(
                "{} spin structures for {n} axes",
                spin.len()
            )));
        }
        if points < 4 {
            return Err(Error::ResolutionTooSmall {
                axis: 0,
                points,
                min: 4,
            });
        }
        for (axis, s) in spin.iter().enumerate() {
            if *s == SpinStructure::Antiperiodic && points % 2 != 0 {
                return Err(Error::Unsupported(format!(
                    "antiperiodic axis {axis} needs an even number of points"
                )));
            }
        }
        if let Some(c) = circumference.iter().find(|c| !(**c > 0.0)) {
            return Err(Error::input("circumference", format!("{c} is not positive")));
        }
        Ok(SpatialGrid {
            n,
            points,
            circumference,
            spin,
            spinor_dim: 1 << ((n - 1) / 2),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn circumference(&self) -> &[f64] {
        &self.circumference
    }

    pub fn spin(&self) -> &[SpinStructure] {
        &self.spin
    }

    pub fn spinor_dim(&self) -> usize {
        self.spinor_dim
    }

    pub fn sites(&self) -> usize {
        self.points.pow(self.n as u32)
    }

    pub fn hilbert_dim(&self) -> usize {
        self.sites() * self.spinor_dim
    }

    /// Multi-index of a site, axis 0 slowest.
    pub fn multi_index(&self, site: usize) -> Vec<usize> {
        let mut idx = vec![0; self.n];
        let mut r = site;
        for j in (0..self.n).rev() {
            idx[j] = r % self.points;
            r /= self.points;
        }
        idx
    }

    pub fn site_of(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * self.points + i)
    }

    /// Stride of axis `j` in site numbering.
    pub fn stride(&self, j: usize) -> usize {
        self.points.pow((self.n - 1 - j) as u32)
    }

    pub fn coords(&self, site: usize) -> Vec<f64> {
        self.multi_index(site)
            .iter()
            .zip(&self.circumference)
            .map(|(&i, &c)| c * i as f64 / self.points as f64)
            .collect()
    }

    /// Pseudospectral derivative matrix along axis `j`.
    pub fn derivative(&self, j: usize) -> Result<Vec<f64>> {
        linalg::fourier_derivative(self.points, self.circumference[j], self.spin[j])
    }
}

/// `rho_t(x) = (det g_t(x) / det g_0(x))^{1/4}`.
pub fn volume_function(g: &MetricFamily, x: &[f64], t: f64) -> Result<f64> {
    volume_function_from(g, x, t, 0.0)
}

/// Volume function normalized at base time `t0`.
pub fn volume_function_from(g: &MetricFamily, x: &[f64], t: f64, t0: f64) -> Result<f64> {
    let a = g.checked_scales(x, t)?;
    let a0 = g.checked_scales(x, t0)?;
    let ratio: f64 = a.iter().zip(&a0).map(|(p, q)| p / q).product();
    Ok(ratio.sqrt())
}

/// `d rho_t / dt`.
pub fn volume_function_dt(g: &MetricFamily, x: &[f64], t: f64, how: TimeDerivative) -> Result<f64> {
    match how {
        TimeDerivative::Analytic => {
            let rho = volume_function(g, x, t)?;
            let a = g.checked_scales(x, t)?;
            let da = g.scales_dt(x, t);
            Ok(rho * 0.5 * a.iter().zip(&da).map(|(p, q)| q / p).sum::<f64>())
        }
        TimeDerivative::Centered { step } => {
            let up = volume_function(g, x, t + step)?;
            let down = volume_function(g, x, t - step)?;
            Ok((up - down) / (2.0 * step))
        }
    }
}

/// `H_t(x) = -(2 / (n eps0)) N^{-1} rho^{-1} d rho / dt`.
pub fn mean_curvature(
    g: &MetricFamily,
    lapse: &LapseFamily,
    sig: Signature,
    x: &[f64],
    t: f64,
    how: TimeDerivative,
) -> Result<f64> {
    let rho = volume_function(g, x, t)?;
    let drho = volume_function_dt(g, x, t, how)?;
    let nval = lapse.checked_value(x, t)?;
    Ok(-2.0 / (g.n() as f64 * sig.epsilon0()) * drho / (nval * rho))
}

/// Hermitian hypersurface Dirac matrix at time `t`.
pub fn hypersurface_dirac(
    g: &MetricFamily,
    grid: &SpatialGrid,
    rep: &CliffordRep,
    t: f64,
) -> Result<DenseMat> {
    if rep.origin() != Origin::Odd || rep.ambient_dim() != grid.n() || g.n() != grid.n() {
        return Err(Error::Shape(format!(
            "need an odd representation of dimension {}, got {}",
            grid.n(),
            rep.ambient_dim()
        )));
    }
    let sdim = grid.spinor_dim();
    let dim = grid.hilbert_dim();
    let gammas = rep.generators();
    let derivs: Vec<Vec<f64>> = (0..grid.n()).map(|j| grid.derivative(j)).collect::<Result<_>>()?;
    let l = grid.points();
    let mut out = DenseMat::zeros(dim, dim);
    let sites = grid.sites();
    let coords: Vec<Vec<f64>> = (0..sites).map(|s| grid.coords(s)).collect();
    let scales: Vec<Vec<f64>> = coords
        .iter()
        .map(|x| g.checked_scales(x, t))
        .collect::<Result<_>>()?;
    // Site weights |g_t|^{1/4}; they cancel for constant coefficients.
    let weight: Vec<f64> = match g.kind() {
        MetricKind::ConstantDiagonal => vec![1.0; sites],
        MetricKind::DiagonalField => scales.iter().map(|a| a.iter().product::<f64>().sqrt()).collect(),
    };
    for site in 0..sites {
        let idx = grid.multi_index(site);
        for j in 0..grid.n() {
            let stride = grid.stride(j);
            let base = site - idx[j] * stride;
            let coef_row = weight[site] / scales[site][j];
            for m in 0..l {
                let d = derivs[j][idx[j] * l + m];
                if d == 0.0 {
                    continue;
                }
                let col_site = base + m * stride;
                let c = coef_row * d / weight[col_site];
                for a in 0..sdim {
                    for b in 0..sdim {
                        let gv = gammas[j][(a, b)];
                        if gv != ZERO {
                            out[(site * sdim + a, col_site * sdim + b)] += gv * c;
                        }
                    }
                }
            }
        }
        if g.kind() == MetricKind::DiagonalField {
            let conn = connection_term(g, &gammas, &coords[site], &scales[site], t);
            for a in 0..sdim {
                for b in 0..sdim {
                    out[(site * sdim + a, site * sdim + b)] += conn[(a, b)];
                }
            }
        }
    }
    Ok(out)
}

/// `sum_j gamma_j Omega_j` with `Omega_j = 1/2 sum_{k<l} w_{j;kl} gamma_k gamma_l`
/// and `w_{j;kl} = g(nabla_{e_j} e_k, e_l)` for the frame `e_j = a_j^{-1} d_j`.
fn connection_term(g: &MetricFamily, gammas: &[DenseMat], x: &[f64], a: &[f64], t: f64) -> DenseMat {
    let n = a.len();
    let sdim = gammas[0].nrows();
    let mut out = DenseMat::zeros(sdim, sdim);
    for j in 0..n {
        let mut omega = DenseMat::zeros(sdim, sdim);
        for k in 0..n {
            for l in (k + 1)..n {
                let mut w = 0.0;
                if j == l {
                    w += g.scale_dx(l, k, x, t) / (a[l] * a[k]);
                }
                if j == k {
                    w -= g.scale_dx(k, l, x, t) / (a[k] * a[l]);
                }
                if w != 0.0 {
                    let p = &gammas[k] * &gammas[l];
                    omega += DenseMat::from_fn(sdim, sdim, |r, c| p[(r, c)] * (0.5 * w));
                }
            }
        }
        out += &gammas[j] * &omega;
    }
    out
}

/// Diagonal of the lapse matrix `N_t`, constant across spinor components.
pub fn lapse_matrix(lapse: &LapseFamily, grid: &SpatialGrid, t: f64) -> Result<Vec<f64>> {
    let sdim = grid.spinor_dim();
    let mut out = Vec::with_capacity(grid.hilbert_dim());
    for site in 0..grid.sites() {
        let v = lapse.checked_value(&grid.coords(site), t)?;
        out.extend(std::iter::repeat(v).take(sdim));
    }
    Ok(out)
}

/// Diagonals of the multiplication operators `pi(a)`.
pub fn algebra_sample(grid: &SpatialGrid, funcs: &[Expr]) -> Vec<Vec<f64>> {
    let sdim = grid.spinor_dim();
    funcs
        .iter()
        .map(|f| {
            (0..grid.sites())
                .flat_map(|site| std::iter::repeat(f.eval(0.0, &grid.coords(site))).take(sdim))
                .collect()
        })
        .collect()
}

/// Projector onto grid functions whose Fourier modes satisfy
/// `|k| <= points/2 - 3/2` on every axis, tensored with the spinor identity.
///
/// On this band pointwise products with a first-harmonic function stay
/// alias-free.
pub fn resolved_band(grid: &SpatialGrid) -> Result<DenseMat> {
    let l = grid.points();
    let cutoff = l as f64 / 2.0 - 1.5;
    let axes: Vec<Vec<f64>> = (0..grid.n())
        .map(|j| linalg::band_projector(l, grid.spin()[j], cutoff))
        .collect::<Result<_>>()?;
    let sdim = grid.spinor_dim();
    let dim = grid.hilbert_dim();
    let idx: Vec<Vec<usize>> = (0..grid.sites()).map(|s| grid.multi_index(s)).collect();
    Ok(DenseMat::from_fn(dim, dim, |r, c| {
        if r % sdim != c % sdim {
            return ZERO;
        }
        let (p, q) = (&idx[r / sdim], &idx[c / sdim]);
        let v: f64 = (0..grid.n()).map(|j| axes[j][p[j] * l + q[j]]).product();
        C64::new(v, 0.0)
    }))
}

/// Operator norm of `P [D, pi(a)] P` for the resolved-band projector `P`.
pub fn resolved_commutator_norm(d: &DenseMat, a: &[f64], grid: &SpatialGrid) -> Result<f64> {
    let n = d.nrows();
    let comm = DenseMat::from_fn(n, n, |r, c| d[(r, c)] * (a[c] - a[r]));
    let p = resolved_band(grid)?;
    linalg::spectral_norm(&(&(&p * &comm) * &p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clifford::build_odd_rep;
    use std::f64::consts::PI;

    fn circle_metric(scale: &str) -> MetricFamily {
        MetricFamily::new(
            MetricKind::ConstantDiagonal,
            vec![Expr::parse(scale, 1).unwrap()],
            TimeDomain::Circle { period: 2.0 * PI },
        )
        .unwrap()
    }

    fn circle_grid(l: usize, spin: SpinStructure) -> SpatialGrid {
        SpatialGrid::new(l, vec![2.0 * PI], vec![spin]).unwrap()
    }

    #[test]
    fn volume_examples() {
        let g = circle_metric("exp(t)");
        let rho = volume_function(&g, &[0.3], 1.7).unwrap();
        assert!((rho - (0.85f64).exp()).abs() < 1e-14);
        assert_eq!(volume_function(&g, &[0.3], 0.0).unwrap(), 1.0);
        let g3 = MetricFamily::new(
            MetricKind::ConstantDiagonal,
            ["1 + t*t", "2 + sin(t)", "exp(0.1*t)"]
                .iter()
                .map(|s| Expr::parse(s, 3).unwrap())
                .collect(),
            TimeDomain::Circle { period: 1.0 },
        )
        .unwrap();
        let t = 0.6;
        let want = ((1.0 + t * t) * (2.0 + f64::sin(t)) * (0.1 * t).exp() / 2.0).sqrt();
        assert!((volume_function(&g3, &[0.0; 3], t).unwrap() - want).abs() < 1e-14);
    }

    #[test]
    fn nonpositive_metric_rejected() {
        let g = circle_metric("sin(t)");
        assert!(matches!(volume_function(&g, &[0.0], 1.0), Err(Error::InvalidMetric { .. })));
    }

    #[test]
    fn mean_curvature_examples() {
        let g = circle_metric("exp(t)");
        let n1 = LapseFamily::unit();
        for (sig, want) in [(Signature::RIEMANNIAN, -1.0), (Signature::LORENTZIAN, 1.0)] {
            let h = mean_curvature(&g, &n1, sig, &[0.0], 0.4, TimeDerivative::Analytic).unwrap();
            assert!((h - want).abs() < 1e-14);
        }
        let stat = circle_metric("1.5");
        let h = mean_curvature(&stat, &n1, Signature::RIEMANNIAN, &[0.0], 0.4, TimeDerivative::Centered { step: 1e-3 }).unwrap();
        assert_eq!(h, 0.0);
    }

    #[test]
    fn flat_circle_spectrum() {
        let grid = circle_grid(16, SpinStructure::Antiperiodic);
        let rep = build_odd_rep(1).unwrap();
        for (scale, factor) in [("1", 1.0), ("2", 0.5)] {
            let d = hypersurface_dirac(&circle_metric(scale), &grid, &rep, 0.0).unwrap();
            assert!(linalg::hermitian_residual(&d) < 1e-12);
            let ev = linalg::hermitian_eigenvalues(&d).unwrap();
            for (i, v) in ev.iter().enumerate() {
                let k = i as f64 - 7.5;
                assert!((v - k * factor).abs() < 1e-12, "{v} vs {}", k * factor);
            }
        }
    }

    #[test]
    fn static_family_is_time_independent() {
        let grid = circle_grid(8, SpinStructure::Periodic);
        let rep = build_odd_rep(1).unwrap();
        let g = circle_metric("1.3");
        let a = hypersurface_dirac(&g, &grid, &rep, 0.1).unwrap();
        let b = hypersurface_dirac(&g, &grid, &rep, 2.0).unwrap();
        assert_eq!(linalg::frobenius(&(a - b)), 0.0);
    }

    #[test]
    fn too_small_resolution() {
        assert!(matches!(
            SpatialGrid::new(3, vec![1.0], vec![SpinStructure::Periodic]),
            Err(Error::ResolutionTooSmall { .. })
        ));
    }

    #[test]
    fn lapse_examples() {
        let grid = circle_grid(8, SpinStructure::Antiperiodic);
        let n = LapseFamily::new(LapseKind::TimeOnly, Expr::parse("2 + sin(t)", 1).unwrap(), None).unwrap();
        let d = lapse_matrix(&n, &grid, PI / 2.0).unwrap();
        assert!(d.iter().all(|v| (v - 3.0).abs() < 1e-15));
        let n = LapseFamily::new(LapseKind::SpaceTime, Expr::parse("2 + 0.5*cos(x1)", 1).unwrap(), Some((1.0, 3.0))).unwrap();
        let d = lapse_matrix(&n, &grid, 0.0).unwrap();
        for (i, v) in d.iter().enumerate() {
            assert!((v - (2.0 + 0.5 * (2.0 * PI * i as f64 / 8.0).cos())).abs() < 1e-15);
        }
        let bad = LapseFamily::new(LapseKind::SpaceTime, Expr::parse("cos(x1)", 1).unwrap(), None).unwrap();
        assert!(matches!(lapse_matrix(&bad, &grid, 0.0), Err(Error::LapseBound { .. })));
        assert!(LapseFamily::new(LapseKind::TimeOnly, Expr::parse("x1", 1).unwrap(), None).is_err());
    }

    #[test]
    fn algebra_examples() {
        let grid = circle_grid(4, SpinStructure::Antiperiodic);
        let s = algebra_sample(&grid, &[Expr::parse("cos(x1)", 1).unwrap()]);
        let want = [1.0, 0.0, -1.0, 0.0];
        for (v, w) in s[0].iter().zip(want) {
            assert!((v - w).abs() < 1e-15);
        }
    }

    #[test]
    fn three_dimensional_field_is_hermitian_on_low_modes() {
        let g = MetricFamily::new(
            MetricKind::DiagonalField,
            ["1 + 0.2*cos(x2)", "1 + 0.2*sin(x3)", "1.1 + 0.1*cos(x1)"]
                .iter()
                .map(|s| Expr::parse(s, 3).unwrap())
                .collect(),
            TimeDomain::Circle { period: 2.0 * PI },
        )
        .unwrap();
        let rep = build_odd_rep(3).unwrap();
        let mut last = f64::INFINITY;
        for l in [6, 10] {
            let grid = SpatialGrid::new(l, vec![2.0 * PI; 3], vec![SpinStructure::Antiperiodic; 3]).unwrap();
            let d = hypersurface_dirac(&g, &grid, &rep, 0.0).unwrap();
            let p1 = linalg::band_projector(l, SpinStructure::Antiperiodic, 1.0).unwrap();
            let idx: Vec<Vec<usize>> = (0..grid.sites()).map(|s| grid.multi_index(s)).collect();
            let sd = grid.spinor_dim();
            let p = DenseMat::from_fn(d.nrows(), d.ncols(), |r, c| {
                if r % sd != c % sd {
                    return ZERO;
                }
                let (a, b) = (&idx[r / sd], &idx[c / sd]);
                C64::new((0..3).map(|j| p1[a[j] * l + b[j]]).product(), 0.0)
            });
            let skew = &d - d.adjoint();
            let r = linalg::frobenius(&(&(&p * &skew) * &p)) / linalg::frobenius(&(&(&p * &d) * &p));
            assert!(r < last, "{l}: {r}");
            last = r;
        }
        assert!(last < 1e-4, "{last}");
    }
}
