//! Complex Clifford algebra representations.
//!
//! Odd dimensions start from `Phi_1(e_1) = -i`; an odd representation of
//! `Cl_n` is doubled to the graded representation of `Cl_{n+1}` in either
//! signature, and the next odd representation is read off the even one.

use crate::error::{Error, Result};
use crate::linalg::{self, DenseMat, I, ONE, ZERO};
use crate::C64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignatureKind {
    Riemannian,
    Lorentzian,
}

/// Signature of the time direction; `tau0^2 = epsilon0` by construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Signature {
    kind: SignatureKind,
}

impl Signature {
    pub const RIEMANNIAN: Signature = Signature {
        kind: SignatureKind::Riemannian,
    };
    pub const LORENTZIAN: Signature = Signature {
        kind: SignatureKind::Lorentzian,
    };

    pub fn new(kind: SignatureKind) -> Self {
        Signature { kind }
    }

    pub fn kind(&self) -> SignatureKind {
        self.kind
    }

    pub fn epsilon0(&self) -> f64 {
        match self.kind {
            SignatureKind::Riemannian => 1.0,
            SignatureKind::Lorentzian => -1.0,
        }
    }

    pub fn tau0(&self) -> C64 {
        match self.kind {
            SignatureKind::Riemannian => ONE,
            SignatureKind::Lorentzian => I,
        }
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            SignatureKind::Riemannian => "riemannian",
            SignatureKind::Lorentzian => "lorentzian",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    /// Irreducible odd representation `Phi_n`.
    Odd,
    /// Graded representation from the odd-to-even recursion.
    EvenRecursion,
    /// Reducible representation `tau0 gamma(e0) gamma(w)` of `Cl_n`.
    Tilde,
}

/// Generator matrices of a complex Clifford representation.
///
/// For even `ambient_dim` the generators are `gamma(e_0), ..., gamma(e_{k-1})`,
/// for odd ones `gamma(e_1), ..., gamma(e_k)`.
#[derive(Debug, Clone)]
pub struct CliffordRep {
    ambient_dim: usize,
    spinor_dim: usize,
    generators: Vec<DenseMat>,
    signature: Signature,
    grading: Option<DenseMat>,
    origin: Origin,
    negated: bool,
}

impl CliffordRep {
    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn spinor_dim(&self) -> usize {
        self.spinor_dim
    }

    pub fn signature(&self) -> Signature {
        self.signature
    }

    pub fn origin(&self) -> Origin {
        self.origin
    }

    pub fn is_negated(&self) -> bool {
        self.negated
    }

    pub fn generator_count(&self) -> usize {
        self.generators.len()
    }

    /// Generator `j` in storage order, with the sign flag applied.
    pub fn generator(&self, j: usize) -> DenseMat {
        if self.negated {
            DenseMat::from_fn(self.spinor_dim, self.spinor_dim, |a, b| -self.generators[j][(a, b)])
        } else {
            self.generators[j].clone()
        }
    }

    pub fn generators(&self) -> Vec<DenseMat> {
        (0..self.generators.len()).map(|j| self.generator(j)).collect()
    }

    pub fn grading(&self) -> Option<&DenseMat> {
        self.grading.as_ref()
    }

    /// `<e_j|e_j>` for generator `j` in storage order.
    pub fn epsilon(&self, j: usize) -> f64 {
        if self.ambient_dim % 2 == 0 && j == 0 {
            self.signature.epsilon0()
        } else {
            1.0
        }
    }

    /// The inequivalent partner `Phi^- = -Phi^+` (odd) or the sign-flipped
    /// equivalent representation (even), sharing the same storage.
    pub fn negate(&self) -> CliffordRep {
        CliffordRep {
            negated: !self.negated,
            ..self.clone()
        }
    }

    /// Generators and grading as nested `[re, im]` arrays, row-major.
    pub fn to_json(&self) -> Value {
        json!({
            "ambient_dim": self.ambient_dim,
            "spinor_dim": self.spinor_dim,
            "signature": self.signature.name(),
            "negated": self.negated,
            "generators": self.generators().iter().map(crate::io::dense_to_json).collect::<Vec<_>>(),
            "grading": self.grading.as_ref().map(crate::io::dense_to_json),
        })
    }
}

fn scalar(n: usize, c: C64) -> DenseMat {
    DenseMat::from_fn(n, n, |i, j| if i == j { c } else { ZERO })
}

/// Irreducible representation of `Cl_n` for odd `n`, all generators
/// anti-Hermitian with square `-I`.
pub fn build_odd_rep(n: usize) -> Result<CliffordRep> {
    if n == 0 || n % 2 == 0 {
        return Err(Error::InvalidDimension {
            what: "odd Clifford representation",
            value: n,
        });
    }
    if n == 1 {
        return Ok(CliffordRep {
            ambient_dim: 1,
            spinor_dim: 1,
            generators: vec![scalar(1, -I)],
            signature: Signature::RIEMANNIAN,
            grading: None,
            origin: Origin::Odd,
            negated: false,
        });
    }
    // The even representation of Cl_{n-1} supplies n-1 generators; the last
    // one is -i times its grading, the normalized volume element of the
    // tilde representation.
    let even = build_even_rep(&build_odd_rep(n - 2)?, Signature::RIEMANNIAN)?;
    let mut generators = even.generators();
    let grading = even.grading.as_ref().expect("even rep is graded");
    generators.push(DenseMat::from_fn(even.spinor_dim, even.spinor_dim, |i, j| {
        -I * grading[(i, j)]
    }));
    Ok(CliffordRep {
        ambient_dim: n,
        spinor_dim: even.spinor_dim,
        generators,
        signature: Signature::RIEMANNIAN,
        grading: None,
        origin: Origin::Odd,
        negated: false,
    })
}

/// Graded representation of `Cl_{n+1}` on `C^{2 d}` from an odd representation
/// on `C^d`: `gamma(w) = [[0, i Phi(w)], [-i Phi(w), 0]]`,
/// `gamma(e_0) = [[0, i tau0 eps0], [i tau0 eps0, 0]]`, grading `diag(I, -I)`.
pub fn build_even_rep(rep_odd: &CliffordRep, sig: Signature) -> Result<CliffordRep> {
    if rep_odd.ambient_dim % 2 == 0 {
        return Err(Error::InvalidDimension {
            what: "odd-to-even recursion input",
            value: rep_odd.ambient_dim,
        });
    }
    let d = rep_odd.spinor_dim;
    let e0 = I * sig.tau0() * sig.epsilon0();
    let mut generators = vec![DenseMat::from_fn(2 * d, 2 * d, |i, j| {
        if (i < d) != (j < d) && i % d == j % d {
            e0
        } else {
            ZERO
        }
    })];
    for g in rep_odd.generators() {
        generators.push(DenseMat::from_fn(2 * d, 2 * d, |i, j| match (i < d, j < d) {
            (true, false) => I * g[(i, j - d)],
            (false, true) => -I * g[(i - d, j)],
            _ => ZERO,
        }));
    }
    let grading = DenseMat::from_fn(2 * d, 2 * d, |i, j| match (i == j, i < d) {
        (true, true) => ONE,
        (true, false) => -ONE,
        _ => ZERO,
    });
    Ok(CliffordRep {
        ambient_dim: rep_odd.ambient_dim + 1,
        spinor_dim: 2 * d,
        generators,
        signature: sig,
        grading: Some(grading),
        origin: Origin::EvenRecursion,
        negated: false,
    })
}

/// The representation `w -> tau0 gamma(e_0) gamma(w)` of `Cl_n` on the even
/// spinor space; block diagonal `diag(Phi_n(w), -Phi_n(w))`.
pub fn tilde_rep(rep_even: &CliffordRep) -> Result<CliffordRep> {
    if rep_even.origin != Origin::EvenRecursion {
        return Err(Error::Unsupported(
            "tilde representation needs an even representation with an e0 generator".into(),
        ));
    }
    let tau0 = rep_even.signature.tau0();
    let e0 = rep_even.generator(0);
    let generators = (1..rep_even.generator_count())
        .map(|j| {
            let p = &e0 * rep_even.generator(j);
            DenseMat::from_fn(p.nrows(), p.ncols(), |a, b| tau0 * p[(a, b)])
        })
        .collect();
    Ok(CliffordRep {
        ambient_dim: rep_even.ambient_dim - 1,
        spinor_dim: rep_even.spinor_dim,
        generators,
        signature: Signature::RIEMANNIAN,
        grading: None,
        origin: Origin::Tilde,
        negated: false,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RelationReport {
    /// `(j, l, ||g_j g_l + g_l g_j + 2 delta_jl eps_j I||)` for `j <= l`.
    pub pairs: Vec<(usize, usize, f64)>,
    /// Per generator: distance from the expected (anti-)Hermitian symmetry.
    pub hermiticity: Vec<f64>,
    /// `||G^2 - I||`, `||G - G^dagger||` and `max_j ||G g_j + g_j G||`.
    pub grading: Option<[f64; 3]>,
    pub max_residual: f64,
    pub tol: f64,
    pub passed: bool,
}

/// Residuals of the Clifford relations, generator symmetries and grading, in
/// the operator norm.
pub fn check_relations(rep: &CliffordRep, tol: f64) -> RelationReport {
    let gens = rep.generators();
    let d = rep.spinor_dim;
    let norm = |m: &DenseMat| linalg::spectral_norm(m).unwrap_or(f64::INFINITY);
    let mut pairs = Vec::new();
    for j in 0..gens.len() {
        for l in j..gens.len() {
            let mut a = &gens[j] * &gens[l] + &gens[l] * &gens[j];
            if j == l {
                let c = 2.0 * rep.epsilon(j);
                for i in 0..d {
                    a[(i, i)] += c;
                }
            }
            pairs.push((j, l, norm(&a)));
        }
    }
    let hermiticity = gens
        .iter()
        .enumerate()
        .map(|(j, g)| {
            let adj = g.adjoint().to_owned();
            if rep.epsilon(j) > 0.0 {
                norm(&(g + adj))
            } else {
                norm(&(g - adj))
            }
        })
        .collect::<Vec<_>>();
    let grading = rep.grading.as_ref().map(|gr| {
        let sq = gr * gr - linalg::dense_identity(d);
        let sym = gr - gr.adjoint();
        let anti = gens
            .iter()
            .map(|g| norm(&(gr * g + g * gr)))
            .fold(0.0, f64::max);
        [norm(&sq), norm(&sym), anti]
    });
    let max_residual = pairs
        .iter()
        .map(|p| p.2)
        .chain(hermiticity.iter().copied())
        .chain(grading.iter().flat_map(|g| g.iter().copied()))
        .fold(0.0, f64::max);
    RelationReport {
        pairs,
        hermiticity,
        grading,
        max_residual,
        tol,
        passed: max_residual <= tol,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &DenseMat, b: &DenseMat) -> bool {
        linalg::frobenius(&(a - b)) < 1e-15
    }

    #[test]
    fn base_case() {
        let r = build_odd_rep(1).unwrap();
        assert_eq!(r.generator(0)[(0, 0)], -I);
        assert!(check_relations(&r, 0.0).passed);
    }

    #[test]
    fn rejects_even_and_zero() {
        assert!(build_odd_rep(0).is_err());
        assert!(build_odd_rep(4).is_err());
        let even = build_even_rep(&build_odd_rep(1).unwrap(), Signature::RIEMANNIAN).unwrap();
        assert!(build_even_rep(&even, Signature::RIEMANNIAN).is_err());
        assert!(tilde_rep(&build_odd_rep(3).unwrap()).is_err());
    }

    #[test]
    fn two_dimensional_blocks() {
        let odd = build_odd_rep(1).unwrap();
        let r = build_even_rep(&odd, Signature::RIEMANNIAN).unwrap();
        let e0 = linalg::dense_from_rows(&[vec![ZERO, I], vec![I, ZERO]]);
        let e1 = linalg::dense_from_rows(&[vec![ZERO, ONE], vec![-ONE, ZERO]]);
        assert!(close(&r.generator(0), &e0));
        assert!(close(&r.generator(1), &e1));
        let l = build_even_rep(&odd, Signature::LORENTZIAN).unwrap();
        let swap = linalg::dense_from_rows(&[vec![ZERO, ONE], vec![ONE, ZERO]]);
        assert!(close(&l.generator(0), &swap));
        assert!(close(&(&swap * &swap), &linalg::dense_identity(2)));
    }

    #[test]
    fn tilde_is_block_diagonal() {
        for n in [1, 3, 5] {
            let odd = build_odd_rep(n).unwrap();
            for sig in [Signature::RIEMANNIAN, Signature::LORENTZIAN] {
                let t = tilde_rep(&build_even_rep(&odd, sig).unwrap()).unwrap();
                let d = odd.spinor_dim();
                for j in 0..n {
                    let g = t.generator(j);
                    let p = odd.generator(j);
                    for a in 0..2 * d {
                        for b in 0..2 * d {
                            let expect = match (a < d, b < d) {
                                (true, true) => p[(a, b)],
                                (false, false) => -p[(a - d, b - d)],
                                _ => ZERO,
                            };
                            assert_eq!(g[(a, b)], expect);
                        }
                    }
                }
                assert!(check_relations(&t, 0.0).passed);
            }
        }
    }

    #[test]
    fn doubled_generator_detected() {
        let mut r = build_even_rep(&build_odd_rep(3).unwrap(), Signature::RIEMANNIAN).unwrap();
        r.generators[1] = DenseMat::from_fn(4, 4, |i, j| r.generators[1][(i, j)] * 2.0);
        let rep = check_relations(&r, 1e-12);
        assert!(!rep.passed);
        let diag = rep.pairs.iter().find(|p| p.0 == 1 && p.1 == 1).unwrap();
        assert!((diag.2 - 6.0).abs() < 1e-12);
    }

    #[test]
    fn lorentzian_symmetries() {
        let r = build_even_rep(&build_odd_rep(3).unwrap(), Signature::LORENTZIAN).unwrap();
        let e0 = r.generator(0);
        assert!(linalg::hermitian_residual(&e0) == 0.0);
        for j in 1..4 {
            let g = r.generator(j);
            assert!(linalg::frobenius(&(&g + g.adjoint())) == 0.0);
        }
    }

    #[test]
    fn negation_is_inequivalent_volume() {
        let r = build_odd_rep(3).unwrap();
        let vol = |rep: &CliffordRep| {
            let g = rep.generators();
            (&(&g[0] * &g[1]) * &g[2])[(0, 0)]
        };
        assert_eq!(vol(&r), -vol(&r.negate()));
        assert!(check_relations(&r.negate(), 0.0).passed);
    }
}
