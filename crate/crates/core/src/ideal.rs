//! Polynomial ideals by linear algebra on degree-bounded pieces.
//!
//! No Gröbner bases: membership and quotient dimensions are decided on finite
//! spaces of polynomials, either exactly (multipliers of bounded degree) or
//! locally at the origin (modulo a power of the maximal ideal).

use std::collections::HashMap;

use num_traits::{One, Zero};

use crate::linalg::{Echelon, Rational, SparseVec};
use crate::poly::{grlex_cmp, monomials_of_degree, Exponents, MultiPoly};

/// Monomials of total degree `≤ bound`, in graded-lex order.
pub fn monomials_up_to(n: usize, bound: u32) -> Vec<Exponents> {
    (0..=bound).flat_map(|d| monomials_of_degree(n, d)).collect()
}

/// Indexes monomials so that larger ones (graded-lex) get smaller indices.
/// Echelon pivots then fall on the largest monomial of each relation, leaving
/// the smallest monomials as standard monomials.
struct MonomialIndex {
    order: Vec<Exponents>,
    pos: HashMap<Exponents, usize>,
}

impl MonomialIndex {
    fn descending(n: usize, bound: u32) -> Self {
        let mut order = monomials_up_to(n, bound);
        order.sort_by(|a, b| grlex_cmp(b, a));
        let pos = order.iter().cloned().enumerate().map(|(i, e)| (e, i)).collect();
        MonomialIndex { order, pos }
    }

    /// Coordinates of `p`, dropping monomials outside the index.
    fn vector(&self, p: &MultiPoly) -> SparseVec {
        p.terms()
            .iter()
            .filter_map(|(e, c)| self.pos.get(e).map(|&i| (i, c.clone())))
            .collect()
    }

    fn contains_all(&self, p: &MultiPoly) -> bool {
        p.terms().keys().all(|e| self.pos.contains_key(e))
    }
}

/// `ℚ[x]/(gens + m^{j+1})`: its dimension and standard monomials, smallest first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JetQuotient {
    pub jet: u32,
    pub dim: usize,
    pub standard_monomials: Vec<Exponents>,
}

/// Quotient of polynomials by `gens` modulo terms of degree `> jet`.
pub fn jet_quotient(num_vars: usize, gens: &[MultiPoly], jet: u32) -> JetQuotient {
    let index = MonomialIndex::descending(num_vars, jet);
    let mut ech = Echelon::new();
    for g in gens {
        let Some(order) = g.order() else { continue };
        if order > jet {
            continue;
        }
        for gamma in monomials_up_to(num_vars, jet - order) {
            let v = index.vector(&g.shift(&gamma));
            ech.insert(v);
        }
    }
    let pivots: std::collections::BTreeSet<usize> = ech.pivot_indices().collect();
    let mut standard: Vec<Exponents> = (0..index.order.len())
        .filter(|i| !pivots.contains(i))
        .map(|i| index.order[i].clone())
        .collect();
    standard.sort_by(|a, b| grlex_cmp(a, b));
    JetQuotient {
        jet,
        dim: standard.len(),
        standard_monomials: standard,
    }
}

/// Outcome of increasing the jet order until the local quotient stabilizes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LocalLength {
    /// Equal dimensions at jets `j − 1` and `j` (so `m^j ⊂ (gens)` locally).
    Finite { quotient: JetQuotient, dims: Vec<usize> },
    /// No two consecutive equal values up to the bound.
    NoStabilization { dims: Vec<usize> },
}

/// Local length of `ℚ[x]/(gens)` at the origin, by jets up to `jet_bound`.
pub fn local_length(num_vars: usize, gens: &[MultiPoly], jet_bound: u32) -> LocalLength {
    let mut dims = Vec::new();
    let mut prev: Option<usize> = None;
    for j in 0..=jet_bound {
        let q = jet_quotient(num_vars, gens, j);
        dims.push(q.dim);
        if prev == Some(q.dim) {
            return LocalLength::Finite { quotient: q, dims };
        }
        prev = Some(q.dim);
    }
    LocalLength::NoStabilization { dims }
}

/// Certifies `1 ∈ (gens)` with multipliers of degree `≤ bound`.
pub fn contains_one(num_vars: usize, gens: &[MultiPoly], bound: u32) -> bool {
    let top = gens.iter().filter_map(MultiPoly::degree).max().unwrap_or(0) + bound;
    let index = MonomialIndex::descending(num_vars, top);
    let mut ech = Echelon::new();
    for g in gens.iter().filter(|g| !g.is_zero()) {
        for gamma in monomials_up_to(num_vars, bound) {
            ech.insert(index.vector(&g.shift(&gamma)));
        }
    }
    ech.contains(&index.vector(&MultiPoly::one(num_vars)))
}

/// Certifies `target ∈ (gens)` with multipliers of degree `≤ bound`.
pub fn in_ideal(num_vars: usize, gens: &[MultiPoly], target: &MultiPoly, bound: u32) -> bool {
    if target.is_zero() {
        return true;
    }
    let top = gens
        .iter()
        .filter_map(MultiPoly::degree)
        .max()
        .unwrap_or(0)
        .saturating_add(bound)
        .max(target.degree().unwrap_or(0));
    let index = MonomialIndex::descending(num_vars, top);
    if !index.contains_all(target) {
        return false;
    }
    let mut ech = Echelon::new();
    for g in gens.iter().filter(|g| !g.is_zero()) {
        for gamma in monomials_up_to(num_vars, bound) {
            ech.insert(index.vector(&g.shift(&gamma)));
        }
    }
    ech.contains(&index.vector(target))
}

/// Determinant by cofactor expansion along the first row.
pub fn determinant(m: &[Vec<MultiPoly>], num_vars: usize) -> MultiPoly {
    let k = m.len();
    if k == 0 {
        return MultiPoly::one(num_vars);
    }
    let mut acc = MultiPoly::zero(num_vars);
    for j in 0..k {
        if m[0][j].is_zero() {
            continue;
        }
        let minor: Vec<Vec<MultiPoly>> = m[1..]
            .iter()
            .map(|row| row.iter().enumerate().filter(|(c, _)| *c != j).map(|(_, x)| x.clone()).collect())
            .collect();
        let term = &m[0][j] * &determinant(&minor, num_vars);
        acc = if j % 2 == 0 { &acc + &term } else { &acc - &term };
    }
    acc
}

/// All `k × k` minors of an `rows × k` matrix (row subsets in lex order),
/// zero minors omitted.
pub fn maximal_minors(matrix: &[Vec<MultiPoly>], k: usize, num_vars: usize) -> Vec<MultiPoly> {
    crate::forms::subsets(matrix.len(), k)
        .into_iter()
        .map(|rows| {
            let sub: Vec<Vec<MultiPoly>> = rows.iter().map(|&r| matrix[r].clone()).collect();
            determinant(&sub, num_vars)
        })
        .filter(|d| !d.is_zero())
        .collect()
}

/// The origin followed by the coordinate points `e_1, …, e_n`.
pub fn test_points(num_vars: usize) -> Vec<Vec<Rational>> {
    let mut pts = vec![vec![Rational::zero(); num_vars]];
    for i in 0..num_vars {
        let mut p = vec![Rational::zero(); num_vars];
        p[i] = Rational::one();
        pts.push(p);
    }
    pts
}
