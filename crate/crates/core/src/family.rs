//! Sampled families of spectral triples with lapse operators.
//!
//! A [`TripleFamily`] holds, for time nodes `t_0 < ... < t_{K-1}`, Hermitian
//! matrices `D_k`, positive lapse matrices `N_k` and a `t`-independent algebra,
//! all on one Hilbert space.

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::lattice::{self, LapseFamily, MetricFamily, SpatialGrid};
use crate::linalg::{self, DenseMat, ZERO};
use crate::par::{self, Mode};
use crate::scenario::Scenario;
use crate::clifford::CliffordRep;
use crate::C64;
use serde::Serialize;

/// A node matrix that is either diagonal or dense.
#[derive(Debug, Clone, PartialEq)]
pub enum Block {
    Diagonal(Vec<C64>),
    Dense(DenseMat),
}

impl Block {
    pub fn from_real_diagonal(d: &[f64]) -> Self {
        Block::Diagonal(d.iter().map(|&v| C64::new(v, 0.0)).collect())
    }

    /// Collapse dense matrices with no off-diagonal entries.
    pub fn from_dense(a: DenseMat) -> Self {
        if linalg::is_diagonal(&a) {
            Block::Diagonal(linalg::diagonal_of(&a))
        } else {
            Block::Dense(a)
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Block::Diagonal(d) => d.len(),
            Block::Dense(a) => a.nrows(),
        }
    }

    pub fn to_dense(&self) -> DenseMat {
        match self {
            Block::Diagonal(d) => DenseMat::from_fn(d.len(), d.len(), |i, j| if i == j { d[i] } else { ZERO }),
            Block::Dense(a) => a.clone(),
        }
    }

    /// `f` applied to a Hermitian block through its spectrum.
    pub fn hermitian_map(&self, f: impl Fn(f64) -> f64) -> Result<Block> {
        match self {
            Block::Diagonal(d) => Ok(Block::Diagonal(d.iter().map(|v| C64::new(f(v.re), 0.0)).collect())),
            Block::Dense(a) => Ok(Block::Dense(linalg::hermitian_function(a, f)?)),
        }
    }

    pub fn sqrt(&self) -> Result<Block> {
        self.hermitian_map(f64::sqrt)
    }

    pub fn inv_sqrt(&self) -> Result<Block> {
        self.hermitian_map(|v| 1.0 / v.sqrt())
    }

    /// Extreme eigenvalues of a Hermitian block.
    pub fn eigen_range(&self) -> Result<(f64, f64)> {
        let v: Vec<f64> = match self {
            Block::Diagonal(d) => d.iter().map(|x| x.re).collect(),
            Block::Dense(a) => linalg::hermitian_eigenvalues(a)?,
        };
        Ok((
            v.iter().copied().fold(f64::INFINITY, f64::min),
            v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        ))
    }

    pub fn is_identity(&self) -> bool {
        match self {
            Block::Diagonal(d) => d.iter().all(|v| *v == C64::new(1.0, 0.0)),
            Block::Dense(a) => {
                (0..a.nrows()).all(|i| (0..a.ncols()).all(|j| a[(i, j)] == if i == j { C64::new(1.0, 0.0) } else { ZERO }))
            }
        }
    }

    /// `self * a * other`.
    pub fn sandwich(&self, a: &DenseMat, other: &Block) -> DenseMat {
        match (self, other) {
            (Block::Diagonal(l), Block::Diagonal(r)) => DenseMat::from_fn(a.nrows(), a.ncols(), |i, j| (l[i] * r[j]) * a[(i, j)]),
            _ => &(&self.to_dense() * a) * &other.to_dense(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlgebraElement {
    pub label: String,
    pub matrix: Block,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Provenance {
    Lattice { scenario: String },
    User,
    Conjugated,
}

#[derive(Debug, Clone)]
pub struct TripleFamily {
    pub hilbert_dim: usize,
    pub time_nodes: Vec<f64>,
    pub dirac: Vec<DenseMat>,
    pub lapse: Vec<Block>,
    pub algebra: Vec<AlgebraElement>,
    pub provenance: Provenance,
    pub warnings: Vec<String>,
}

impl TripleFamily {
    /// Validate shapes and node ordering of user-supplied data.
    pub fn new(
        time_nodes: Vec<f64>,
        dirac: Vec<DenseMat>,
        lapse: Vec<Block>,
        algebra: Vec<AlgebraElement>,
        provenance: Provenance,
    ) -> Result<Self> {
        let k = time_nodes.len();
        if k == 0 || dirac.len() != k || lapse.len() != k {
            return Err(Error::Shape(format!(
                "{k} nodes, {} Dirac matrices, {} lapse matrices",
                dirac.len(),
                lapse.len()
            )));
        }
        if time_nodes.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::NodeMismatch("time nodes must be strictly increasing".into()));
        }
        let h = dirac[0].nrows();
        let square = |a: &DenseMat| a.nrows() == h && a.ncols() == h;
        if !dirac.iter().all(square) || !lapse.iter().all(|b| b.dim() == h) || !algebra.iter().all(|a| a.matrix.dim() == h) {
            return Err(Error::Shape(format!("all matrices must be {h} x {h}")));
        }
        let mut fam = TripleFamily {
            hilbert_dim: h,
            time_nodes,
            dirac,
            lapse,
            algebra,
            provenance,
            warnings: Vec::new(),
        };
        fam.warnings = fam.light_checks();
        Ok(fam)
    }

    pub fn nodes(&self) -> usize {
        self.time_nodes.len()
    }

    fn light_checks(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (k, d) in self.dirac.iter().enumerate() {
            let r = linalg::hermitian_residual(d);
            if r > 1e-10 * linalg::frobenius(d).max(1.0) {
                out.push(format!("node {k}: Dirac matrix not Hermitian (residual {r:.3e})"));
            }
        }
        for (k, n) in self.lapse.iter().enumerate() {
            if let Block::Diagonal(d) = n {
                if d.iter().any(|v| !(v.re > 0.0) || v.im != 0.0) {
                    out.push(format!("node {k}: lapse not positive"));
                }
            }
        }
        out
    }
}

/// Sample a lattice family at the given nodes, one worker per node.
pub fn from_lattice(
    metric: &MetricFamily,
    lapse: &LapseFamily,
    grid: &SpatialGrid,
    rep: &CliffordRep,
    nodes: &[f64],
    algebra: &[Expr],
    label: &str,
    mode: Mode,
) -> Result<TripleFamily> {
    metric.validate_on(grid, nodes)?;
    let dirac = par::try_map(mode, nodes.len(), |k| lattice::hypersurface_dirac(metric, grid, rep, nodes[k]))?;
    let lapse_blocks = par::try_map(mode, nodes.len(), |k| {
        lattice::lapse_matrix(lapse, grid, nodes[k]).map(|d| Block::from_real_diagonal(&d))
    })?;
    let alg = lattice::algebra_sample(grid, algebra)
        .into_iter()
        .zip(algebra)
        .map(|(d, e)| AlgebraElement {
            label: e.source().to_string(),
            matrix: Block::from_real_diagonal(&d),
        })
        .collect();
    TripleFamily::new(
        nodes.to_vec(),
        dirac,
        lapse_blocks,
        alg,
        Provenance::Lattice {
            scenario: label.to_string(),
        },
    )
}

/// Family of a scenario at its configured resolution.
pub fn from_scenario(sc: &Scenario) -> Result<TripleFamily> {
    from_scenario_with(sc, Mode::default())
}

pub fn from_scenario_with(sc: &Scenario, mode: Mode) -> Result<TripleFamily> {
    let tg = sc.time_grid()?;
    from_lattice(
        &sc.metric()?,
        &sc.lapse()?,
        &sc.grid()?,
        &sc.rep()?,
        tg.nodes(),
        &sc.algebra,
        &sc.name,
        mode,
    )
}

/// `D'_k = N_k^{1/2} D_k N_k^{1/2}` with unit lapse.
pub fn conjugated_family(fam: &TripleFamily) -> Result<TripleFamily> {
    let dirac = fam
        .dirac
        .iter()
        .zip(&fam.lapse)
        .map(|(d, n)| {
            let s = n.sqrt()?;
            Ok(s.sandwich(d, &s))
        })
        .collect::<Result<Vec<_>>>()?;
    let one = Block::Diagonal(vec![C64::new(1.0, 0.0); fam.hilbert_dim]);
    TripleFamily::new(
        fam.time_nodes.clone(),
        dirac,
        vec![one; fam.nodes()],
        fam.algebra.clone(),
        Provenance::Conjugated,
    )
}

/// Counts of positive, negative and zero eigenvalues (`|lambda| <= tol`).
pub fn inertia(a: &DenseMat, tol: f64) -> Result<(usize, usize, usize)> {
    let ev = linalg::hermitian_eigenvalues(a)?;
    Ok((
        ev.iter().filter(|v| **v > tol).count(),
        ev.iter().filter(|v| **v < -tol).count(),
        ev.iter().filter(|v| v.abs() <= tol).count(),
    ))
}

#[derive(Debug, Clone, Serialize)]
pub struct FamilyReport {
    pub nodes: usize,
    pub hilbert_dim: usize,
    pub dimensions_equal: bool,
    /// `||D_k - D_k^dagger||_F` per node.
    pub hermiticity: Vec<f64>,
    pub hermiticity_passed: bool,
    pub lapse_min: f64,
    pub lapse_max: f64,
    pub lapse_condition: f64,
    pub lapse_positive: bool,
    /// `max_{k,a} ||[N_k^{1/2}, pi(a)]||_F`.
    pub lapse_algebra_commutator: f64,
    pub lapse_algebra_passed: bool,
    /// `(k, ||(D_{k+1} - D_{k-1}) / (t_{k+1} - t_{k-1})||)` for interior nodes.
    pub derivative_norms: Vec<(usize, f64)>,
    pub derivative_max: f64,
    pub flagged_nodes: Vec<usize>,
    pub derivative_passed: bool,
    /// Graph-norm equivalence constants relative to node 0.
    pub graph_norm_constants: (f64, f64),
    pub graph_norm_method: String,
    pub seed: u64,
    /// `max_k ||[D_k, N_k^{1/2}]||`.
    pub lapse_dirac_commutator: f64,
    /// Time-derivative of the algebra representation (identically zero).
    pub algebra_derivative: f64,
    pub passed: bool,
}

/// Ratio above the median derivative norm at which a node is flagged.
pub const SPIKE_FACTOR: f64 = 10.0;
const EXACT_GRAPH_NORM_DIM: usize = 1024;

fn op_norm(a: &DenseMat, seed: u64) -> Result<f64> {
    if a.nrows() <= EXACT_GRAPH_NORM_DIM {
        return linalg::spectral_norm(a);
    }
    let adj = a.adjoint().to_owned();
    let apply = |m: &DenseMat, v: &[C64]| -> Vec<C64> {
        (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)] * v[j]).sum()).collect()
    };
    linalg::operator_norm(a.nrows(), |v| apply(a, v), |v| apply(&adj, v), seed)
}

/// Check the family axioms on the sampled nodes.
pub fn check_family_axioms(fam: &TripleFamily, tol: f64) -> Result<FamilyReport> {
    check_family_axioms_with(fam, tol, 0x5eed, Mode::default())
}

pub fn check_family_axioms_with(fam: &TripleFamily, tol: f64, seed: u64, mode: Mode) -> Result<FamilyReport> {
    let k = fam.nodes();
    if k < 3 {
        return Err(Error::Shape(format!("axiom checks need at least 3 nodes, got {k}")));
    }
    let h = fam.hilbert_dim;
    let dimensions_equal = fam.dirac.iter().all(|d| d.nrows() == h && d.ncols() == h)
        && fam.lapse.iter().all(|n| n.dim() == h);
    let hermiticity: Vec<f64> = par::map(mode, k, |i| linalg::hermitian_residual(&fam.dirac[i]));
    let scale = fam.dirac.iter().map(linalg::frobenius).fold(1.0, f64::max);
    let hermiticity_passed = hermiticity.iter().all(|r| *r <= tol * scale);

    let ranges = par::try_map(mode, k, |i| fam.lapse[i].eigen_range())?;
    let lapse_min = ranges.iter().map(|r| r.0).fold(f64::INFINITY, f64::min);
    let lapse_max = ranges.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
    let lapse_positive = lapse_min > 0.0;
    let lapse_condition = if lapse_positive { lapse_max / lapse_min } else { f64::INFINITY };

    let sqrt_lapse = par::try_map(mode, k, |i| fam.lapse[i].sqrt())?;
    let mut lapse_algebra_commutator: f64 = 0.0;
    for s in &sqrt_lapse {
        for a in &fam.algebra {
            let c = match (s, &a.matrix) {
                (Block::Diagonal(_), Block::Diagonal(_)) => 0.0,
                _ => {
                    let (sd, ad) = (s.to_dense(), a.matrix.to_dense());
                    linalg::frobenius(&(&sd * &ad - &ad * &sd))
                }
            };
            lapse_algebra_commutator = lapse_algebra_commutator.max(c);
        }
    }
    let lapse_algebra_passed = lapse_algebra_commutator <= tol;

    let derivative_norms: Vec<(usize, f64)> = par::try_map(mode, k - 2, |i| {
        let j = i + 1;
        let dt = fam.time_nodes[j + 1] - fam.time_nodes[j - 1];
        let diff = &fam.dirac[j + 1] - &fam.dirac[j - 1];
        let diff = DenseMat::from_fn(h, h, |r, c| diff[(r, c)] / dt);
        Ok::<_, Error>((j, op_norm(&diff, seed)?))
    })?;
    let derivative_max = derivative_norms.iter().map(|p| p.1).fold(0.0, f64::max);
    let mut sorted: Vec<f64> = derivative_norms.iter().map(|p| p.1).collect();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    let floor = 1e-12 * scale;
    let flagged_nodes: Vec<usize> = derivative_norms
        .iter()
        .filter(|p| p.1 > floor && p.1 > SPIKE_FACTOR * median.max(floor))
        .map(|p| p.0)
        .collect();
    let derivative_passed = flagged_nodes.is_empty() && derivative_max.is_finite();

    let (graph_norm_constants, graph_norm_method) = graph_norm_constants(fam, seed, mode)?;

    let lapse_dirac_commutator = par::try_map(mode, k, |i| {
        let s = sqrt_lapse[i].to_dense();
        let d = &fam.dirac[i];
        op_norm(&(d * &s - &s * d), seed)
    })?
    .into_iter()
    .fold(0.0, f64::max);

    let passed = dimensions_equal
        && hermiticity_passed
        && lapse_positive
        && lapse_algebra_passed
        && derivative_passed
        && graph_norm_constants.0 > 0.0
        && graph_norm_constants.1.is_finite()
        && lapse_dirac_commutator.is_finite();
    Ok(FamilyReport {
        nodes: k,
        hilbert_dim: h,
        dimensions_equal,
        hermiticity,
        hermiticity_passed,
        lapse_min,
        lapse_max,
        lapse_condition,
        lapse_positive,
        lapse_algebra_commutator,
        lapse_algebra_passed,
        derivative_norms,
        derivative_max,
        flagged_nodes,
        derivative_passed,
        graph_norm_constants,
        graph_norm_method,
        seed,
        lapse_dirac_commutator,
        algebra_derivative: 0.0,
        passed,
    })
}

/// Constants `C1 <= ||x||_{D_t} / ||x||_{D_0} <= C2` over all nodes.
///
/// Exact through the pencil `(1 + D_t^2, 1 + D_0^2)` for moderate dimensions,
/// otherwise estimated over seeded unit vectors.
fn graph_norm_constants(fam: &TripleFamily, seed: u64, mode: Mode) -> Result<((f64, f64), String)> {
    let h = fam.hilbert_dim;
    let k = fam.nodes();
    let one_plus_square = |d: &DenseMat| {
        let mut s = d * d;
        for i in 0..h {
            s[(i, i)] += 1.0;
        }
        s
    };
    if h <= EXACT_GRAPH_NORM_DIM {
        let b = one_plus_square(&fam.dirac[0]);
        let b_inv_sqrt = linalg::hermitian_function(&b, |v| 1.0 / v.sqrt())?;
        let ranges = par::try_map(mode, k, |i| {
            let x = &(&b_inv_sqrt * one_plus_square(&fam.dirac[i])) * &b_inv_sqrt;
            let ev = linalg::hermitian_eigenvalues(&x)?;
            Ok::<_, Error>((ev[0].max(0.0).sqrt(), ev[ev.len() - 1].sqrt()))
        })?;
        let c1 = ranges.iter().map(|r| r.0).fold(f64::INFINITY, f64::min);
        let c2 = ranges.iter().map(|r| r.1).fold(0.0, f64::max);
        return Ok(((c1, c2), "exact".into()));
    }
    let mut rng = linalg::seeded_rng(seed);
    let samples: Vec<Vec<C64>> = (0..32).map(|_| linalg::random_unit(h, &mut rng)).collect();
    let graph = |d: &DenseMat, v: &[C64]| {
        let dv: Vec<C64> = (0..h).map(|i| (0..h).map(|j| d[(i, j)] * v[j]).sum()).collect();
        (1.0 + linalg::norm(&dv).powi(2)).sqrt()
    };
    let base: Vec<f64> = samples.iter().map(|v| graph(&fam.dirac[0], v)).collect();
    let ratios = par::map(mode, k, |i| {
        samples
            .iter()
            .zip(&base)
            .map(|(v, b)| graph(&fam.dirac[i], v) / b)
            .fold((f64::INFINITY, 0.0f64), |acc, r| (acc.0.min(r), acc.1.max(r)))
    });
    let c1 = ratios.iter().map(|r| r.0).fold(f64::INFINITY, f64::min);
    let c2 = ratios.iter().map(|r| r.1).fold(0.0, f64::max);
    Ok(((c1, c2), format!("sampled (32 vectors, seed {seed})")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{LapseKind, MetricKind, SpinStructure, TimeDomain};
    use std::f64::consts::PI;

    fn warped(k: usize, lapse: &str) -> TripleFamily {
        let metric = MetricFamily::new(
            MetricKind::ConstantDiagonal,
            vec![Expr::parse("1 + 0.3*sin(t)", 1).unwrap()],
            TimeDomain::Circle { period: 2.0 * PI },
        )
        .unwrap();
        let lapse = LapseFamily::new(LapseKind::SpaceTime, Expr::parse(lapse, 1).unwrap(), None).unwrap();
        let grid = SpatialGrid::new(8, vec![2.0 * PI], vec![SpinStructure::Antiperiodic]).unwrap();
        let rep = crate::clifford::build_odd_rep(1).unwrap();
        let nodes: Vec<f64> = (0..k).map(|i| 2.0 * PI * i as f64 / k as f64).collect();
        from_lattice(&metric, &lapse, &grid, &rep, &nodes, &[Expr::parse("cos(x1)", 1).unwrap()], "test", Mode::default()).unwrap()
    }

    #[test]
    fn warped_family_scales_spectrum() {
        let fam = warped(32, "1");
        let reference: Vec<f64> = (0..8).map(|i| i as f64 - 3.5).collect();
        assert!(fam.warnings.is_empty());
        for (t, d) in fam.time_nodes.iter().zip(&fam.dirac) {
            let a = 1.0 + 0.3 * t.sin();
            let ev = linalg::hermitian_eigenvalues(d).unwrap();
            for (x, y) in ev.iter().zip(&reference) {
                assert!((x - y / a).abs() < 1e-12);
            }
        }
        let report = check_family_axioms(&fam, 1e-12).unwrap();
        assert!(report.passed, "{report:?}");
        assert_eq!(report.lapse_dirac_commutator, 0.0);
    }

    #[test]
    fn conjugation_examples() {
        let fam = warped(6, "1");
        let same = conjugated_family(&fam).unwrap();
        for (a, b) in fam.dirac.iter().zip(&same.dirac) {
            assert_eq!(linalg::frobenius(&(a - b)), 0.0);
        }
        let fam = warped(6, "2 + 0.5*cos(x1)");
        let conj = conjugated_family(&fam).unwrap();
        for (d, dc) in fam.dirac.iter().zip(&conj.dirac) {
            assert!(linalg::hermitian_residual(dc) <= 1e-12);
            assert_eq!(inertia(d, 1e-9).unwrap(), inertia(dc, 1e-9).unwrap());
        }
        assert!(conj.lapse.iter().all(Block::is_identity));
        let scalar = warped(6, "4");
        let conj = conjugated_family(&scalar).unwrap();
        for (d, dc) in scalar.dirac.iter().zip(&conj.dirac) {
            assert!(linalg::frobenius(&(dc - DenseMat::from_fn(8, 8, |i, j| d[(i, j)] * 4.0))) < 1e-14);
        }
    }

    #[test]
    fn static_family_has_zero_derivative() {
        let metric = MetricFamily::new(MetricKind::ConstantDiagonal, vec![Expr::constant(1.2)], TimeDomain::Circle { period: 1.0 }).unwrap();
        let grid = SpatialGrid::new(6, vec![1.0], vec![SpinStructure::Periodic]).unwrap();
        let rep = crate::clifford::build_odd_rep(1).unwrap();
        let fam = from_lattice(&metric, &LapseFamily::unit(), &grid, &rep, &[0.0, 0.25, 0.5, 0.75], &[], "s", Mode::Sequential).unwrap();
        let r = check_family_axioms(&fam, 1e-12).unwrap();
        assert_eq!(r.derivative_max, 0.0);
        assert!(r.passed);
        assert!(fam.lapse.iter().all(Block::is_identity));
    }

    #[test]
    fn jump_is_flagged() {
        let mut fam = warped(32, "1");
        for k in 17..32 {
            fam.dirac[k] = DenseMat::from_fn(8, 8, |i, j| fam.dirac[k][(i, j)] * 3.0);
        }
        let r = check_family_axioms(&fam, 1e-12).unwrap();
        assert!(!r.derivative_passed);
        assert!(r.flagged_nodes.contains(&17) && r.flagged_nodes.contains(&16));
    }

    #[test]
    fn unitary_invariance() {
        let fam = warped(5, "1.5 + 0.5*cos(x1)*sin(t)");
        let h = fam.hilbert_dim;
        // Fixed unitary: a Householder reflection.
        let mut rng = linalg::seeded_rng(11);
        let v = linalg::random_unit(h, &mut rng);
        let u = DenseMat::from_fn(h, h, |i, j| {
            let e = if i == j { C64::new(1.0, 0.0) } else { ZERO };
            e - v[i] * v[j].conj() * 2.0
        });
        let conj = |a: &DenseMat| &(&u * a) * u.adjoint();
        let rotated = TripleFamily::new(
            fam.time_nodes.clone(),
            fam.dirac.iter().map(conj).collect(),
            fam.lapse.iter().map(|n| Block::Dense(conj(&n.to_dense()))).collect(),
            fam.algebra.iter().map(|a| AlgebraElement { label: a.label.clone(), matrix: Block::Dense(conj(&a.matrix.to_dense())) }).collect(),
            Provenance::User,
        )
        .unwrap();
        let a = check_family_axioms(&fam, 1e-10).unwrap();
        let b = check_family_axioms(&rotated, 1e-10).unwrap();
        let close = |x: f64, y: f64| (x - y).abs() <= 1e-9 * x.abs().max(1.0);
        assert!(close(a.derivative_max, b.derivative_max));
        assert!(close(a.graph_norm_constants.0, b.graph_norm_constants.0));
        assert!(close(a.graph_norm_constants.1, b.graph_norm_constants.1));
        assert!(close(a.lapse_dirac_commutator, b.lapse_dirac_commutator));
        assert!(close(a.lapse_condition, b.lapse_condition));
        assert!(b.lapse_algebra_commutator < 1e-12);
    }
}
