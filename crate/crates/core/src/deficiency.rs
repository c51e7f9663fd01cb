//! Complexes, linkage classes and deficiency `δ = n - ℓ - s`, the change of
//! δ along a sign fix, and the factorization `S v(x) = Y A_k ψ(x)`.

use std::collections::BTreeSet;

use petgraph::unionfind::UnionFind;
use serde::Serialize;
use thiserror::Error;

use crate::exactla::rank;
use crate::kinetics::{KineticsError, MassActionSystem};
use crate::matrix::Matrix;
use crate::model::{Complex, Network};
use crate::scalar::Real;
use crate::signcheck::find_bad_submatrices;
use crate::signfix::FixReport;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DeficiencyError {
    #[error("step {step}: Δn = {dn} but φ gives {phi}")]
    ComplexCount { step: usize, dn: i64, phi: i64 },
    #[error("step {step}: Δℓ = {dl} but ψ gives {psi}")]
    LinkageCount { step: usize, dl: i64, psi: i64 },
}

/// Complexes in order of first appearance with their linkage-class labels.
#[derive(Debug, Clone)]
struct ComplexGraph {
    complexes: Vec<Complex>,
    /// Per complex: linkage class id, numbered by first appearance.
    class_of: Vec<usize>,
    classes: usize,
}

impl ComplexGraph {
    fn new(net: &Network) -> Self {
        let mut complexes: Vec<Complex> = Vec::new();
        let index = |c: &Complex, list: &mut Vec<Complex>| match list.iter().position(|x| x == c) {
            Some(i) => i,
            None => {
                list.push(c.clone());
                list.len() - 1
            }
        };
        let mut edges = Vec::with_capacity(net.reaction_count());
        for r in net.reactions() {
            let a = index(&r.reactant, &mut complexes);
            let b = index(&r.product, &mut complexes);
            edges.push((a, b));
        }
        let mut uf = UnionFind::new(complexes.len());
        for &(a, b) in &edges {
            uf.union(a, b);
        }
        let mut class_of = vec![usize::MAX; complexes.len()];
        let mut roots: Vec<usize> = Vec::new();
        for (i, slot) in class_of.iter_mut().enumerate() {
            let root = uf.find(i);
            *slot = match roots.iter().position(|&r| r == root) {
                Some(k) => k,
                None => {
                    roots.push(root);
                    roots.len() - 1
                }
            };
        }
        ComplexGraph {
            complexes,
            class_of,
            classes: roots.len(),
        }
    }

    fn position(&self, c: &Complex) -> Option<usize> {
        self.complexes.iter().position(|x| x == c)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DeficiencyReport {
    pub n: usize,
    pub ell: usize,
    pub s: usize,
    pub delta: i64,
    pub complexes: Vec<String>,
    /// Complex indices per linkage class.
    pub classes: Vec<Vec<usize>>,
}

pub fn deficiency(net: &Network) -> DeficiencyReport {
    let g = ComplexGraph::new(net);
    let s = rank(&net.stoichiometric_matrix());
    let mut classes = vec![Vec::new(); g.classes];
    for (i, &c) in g.class_of.iter().enumerate() {
        classes[c].push(i);
    }
    let n = g.complexes.len();
    DeficiencyReport {
        n,
        ell: g.classes,
        s,
        delta: n as i64 - g.classes as i64 - s as i64,
        complexes: g
            .complexes
            .iter()
            .map(|c| c.display(net.species()).to_string())
            .collect(),
        classes,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DeltaAudit {
    pub step: usize,
    pub dn: i64,
    pub dl: i64,
    pub ds: i64,
    pub dd: i64,
    /// (φ(B'+C₂), φ(p₂B))
    pub phi: (u8, u8),
    /// (ψ([B'+C₂]), ψ([B']))
    pub psi: (u8, u8),
}

/// Per fix step: Δn, Δℓ, Δs, Δδ from scratch, and the φ/ψ case counts,
/// which must agree with Δn and Δℓ.
pub fn delta_audit(report: &FixReport) -> Result<Vec<DeltaAudit>, DeficiencyError> {
    let mut out = Vec::with_capacity(report.steps.len());
    for (i, st) in report.steps.iter().enumerate() {
        let before = &report.stages[i];
        let after = &report.stages[i + 1];
        let (d1, d2) = (deficiency(before), deficiency(after));
        let (g1, g2) = (ComplexGraph::new(before), ComplexGraph::new(after));

        let l = st.modified_column;
        let p = &before.reactions()[l].product;
        let c2 = p.without(st.zeroed_species);
        let b_c2 = &after.reactions()[l].product;
        let p2b = Complex::single(st.zeroed_species, st.zeroed_value.clone());
        let p_in_new = g2.position(p);
        let p2b_new = g1.position(&p2b).is_none();

        let phi1 = if !c2.is_zero() && p_in_new.is_some() { 2 } else { 1 };
        let phi2 = u8::from(p2b_new);
        let separated = match (p_in_new, g2.position(b_c2)) {
            (Some(a), Some(b)) => g2.class_of[a] != g2.class_of[b],
            _ => false,
        };
        let psi1 = u8::from(separated);
        let psi2 = u8::from(p2b_new && !c2.is_zero());

        let dn = d2.n as i64 - d1.n as i64;
        let dl = d2.ell as i64 - d1.ell as i64;
        let ds = d2.s as i64 - d1.s as i64;
        let phi = i64::from(phi1 + phi2);
        let psi = i64::from(psi1 + psi2);
        if dn != phi {
            return Err(DeficiencyError::ComplexCount { step: i, dn, phi });
        }
        if dl != psi {
            return Err(DeficiencyError::LinkageCount { step: i, dl, psi });
        }
        out.push(DeltaAudit {
            step: i,
            dn,
            dl,
            ds,
            dd: d2.delta - d1.delta,
            phi: (phi1, phi2),
            psi: (psi1, psi2),
        });
    }
    Ok(out)
}

/// True iff the column of every bad class's positive entry has no other positive entry.
pub fn check_single_positive_column(net: &Network) -> bool {
    let s = net.stoichiometric_matrix();
    let cols: BTreeSet<usize> = find_bad_submatrices(&s)
        .iter()
        .map(|c| c.positive_entry.1)
        .collect();
    cols.into_iter().all(|j| {
        (0..s.rows())
            .filter(|&i| num_traits::Signed::is_positive(&s[(i, j)]))
            .count()
            == 1
    })
}

/// `S v(x) = Y A_k ψ(x)` with `Y` the complex matrix and `A_k` the weighted
/// Laplacian of the complexes graph.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexDecomposition<F: Real> {
    /// species × complexes
    pub y: Matrix<F>,
    /// complexes × complexes
    pub a_k: Matrix<F>,
    /// Per reaction: (reactant complex, product complex).
    pub edges: Vec<(usize, usize)>,
    system: MassActionSystem<F>,
}

fn pow_of<F: Real>(x: F, e: F) -> F {
    if e == F::zero() {
        return F::one();
    }
    match e.to_i32() {
        Some(n) if F::from(n) == Some(e) => x.powi(n),
        _ => x.powf(e),
    }
}

impl<F: Real> ComplexDecomposition<F> {
    pub fn complex_count(&self) -> usize {
        self.y.cols()
    }

    /// `ψ(x)_c = ∏_j x_j^{Y_jc}`.
    pub fn psi(&self, x: &[F]) -> Vec<F> {
        (0..self.y.cols())
            .map(|c| {
                (0..self.y.rows()).fold(F::one(), |acc, j| acc * pow_of(x[j], self.y[(j, c)]))
            })
            .collect()
    }

    pub fn evaluate(&self, x: &[F]) -> Vec<F> {
        self.y.mul_vec(&self.a_k.mul_vec(&self.psi(x)))
    }

    /// `‖Sv(x) - Y A_k ψ(x)‖∞ / (1 + ‖Sv(x)‖∞)`.
    pub fn identity_error(&self, x: &[F]) -> Result<F, KineticsError> {
        let direct = self.system.rhs(x)?;
        let factored = self.evaluate(x);
        let scale = direct.iter().fold(F::zero(), |m, v| m.max(v.abs()));
        let err = direct
            .iter()
            .zip(&factored)
            .fold(F::zero(), |m, (a, b)| m.max((*a - *b).abs()));
        Ok(err / (F::one() + scale))
    }
}

pub fn complexes_decomposition<F: Real>(sys: &MassActionSystem<F>) -> ComplexDecomposition<F> {
    let s = sys.stoichiometry();
    let e = sys.exponents();
    let (d, dp) = s.shape();
    let mut cols: Vec<Vec<F>> = Vec::new();
    let mut index = |v: Vec<F>| match cols.iter().position(|c| *c == v) {
        Some(i) => i,
        None => {
            cols.push(v);
            cols.len() - 1
        }
    };
    let mut edges = Vec::with_capacity(dp);
    for k in 0..dp {
        let reactant: Vec<F> = (0..d).map(|i| e[(i, k)]).collect();
        let product: Vec<F> = (0..d).map(|i| s[(i, k)] + e[(i, k)]).collect();
        edges.push((index(reactant), index(product)));
    }
    let n = cols.len();
    let y = Matrix::from_fn(d, n, |i, c| cols[c][i]);
    let mut a_k = Matrix::zeros(n, n);
    for (k, &(r, p)) in edges.iter().enumerate() {
        let rate = sys.rates()[k];
        a_k[(p, r)] = a_k[(p, r)] + rate;
        a_k[(r, r)] = a_k[(r, r)] - rate;
    }
    ComplexDecomposition {
        y,
        a_k,
        edges,
        system: sys.clone(),
    }
}
