//! Polynomial differential forms on affine space.
//!
//! A [`PolyForm`] of degree p is a sum `Σ_S g_S dx_S` over strictly
//! increasing index sets `S` with `|S| = p`. Signs are normalized when terms
//! are built, so every other module can compare forms structurally.

use std::collections::{BTreeMap, HashMap};
use std::ops::RangeInclusive;
use std::fmt;

use num_traits::One;

use crate::error::{Error, Result};
use crate::linalg::{Rational, SparseVec};
use crate::poly::{default_names, monomials_of_degree, monomials_of_weighted_degree, Exponents, MultiPoly};

/// Sorts `idx` in place and returns the permutation sign, or `None` when an
/// index repeats.
pub fn normalize_indices(idx: &mut [usize]) -> Option<bool> {
    let mut negative = false;
    // insertion sort, counting transpositions
    for i in 1..idx.len() {
        let mut j = i;
        while j > 0 && idx[j - 1] > idx[j] {
            idx.swap(j - 1, j);
            negative = !negative;
            j -= 1;
        }
    }
    if idx.windows(2).any(|w| w[0] == w[1]) {
        None
    } else {
        Some(negative)
    }
}

/// Sign and union for `dx_S ∧ dx_T`; `None` if the sets overlap.
pub fn merge_indices(s: &[usize], t: &[usize]) -> Option<(Vec<usize>, bool)> {
    let mut v: Vec<usize> = s.iter().chain(t).copied().collect();
    let neg = normalize_indices(&mut v)?;
    Some((v, neg))
}

/// All strictly increasing subsets of `0..n` with `p` elements, in lex order.
pub fn subsets(n: usize, p: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, p: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == p {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, p, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if p <= n {
        rec(0, n, p, &mut Vec::new(), &mut out);
    }
    out
}

/// Polynomial differential form of fixed degree on 𝔸ⁿ.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PolyForm {
    num_vars: usize,
    form_degree: usize,
    terms: BTreeMap<Vec<usize>, MultiPoly>,
}

impl PolyForm {
    pub fn zero(num_vars: usize, form_degree: usize) -> Self {
        PolyForm {
            num_vars,
            form_degree,
            terms: BTreeMap::new(),
        }
    }

    /// A function viewed as a 0-form.
    pub fn function(f: MultiPoly) -> Self {
        let n = f.num_vars();
        let mut w = Self::zero(n, 0);
        w.add_term(vec![], f);
        w
    }

    /// The basic 1-form `dx_i`.
    pub fn dx(num_vars: usize, i: usize) -> Self {
        Self::term(vec![i], MultiPoly::one(num_vars))
    }

    /// `g · dx_S`, with `S` in any order (sign applied).
    pub fn term(mut indices: Vec<usize>, g: MultiPoly) -> Self {
        let n = g.num_vars();
        let mut w = Self::zero(n, indices.len());
        for &i in &indices {
            assert!(i < n, "form index {i} out of range for {n} variables");
        }
        match normalize_indices(&mut indices) {
            None => w,
            Some(neg) => {
                let g = if neg { -&g } else { g };
                w.add_term(indices, g);
                w
            }
        }
    }

    /// `Σ_i coeffs[i] dx_i`.
    pub fn one_form(coeffs: &[MultiPoly]) -> Self {
        let n = coeffs.len();
        let mut w = Self::zero(n, 1);
        for (i, c) in coeffs.iter().enumerate() {
            w.add_term(vec![i], c.clone());
        }
        w
    }

    /// `df` for a function `f`.
    pub fn exact(f: &MultiPoly) -> Self {
        Self::one_form(&f.gradient())
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn form_degree(&self) -> usize {
        self.form_degree
    }

    pub fn terms(&self) -> &BTreeMap<Vec<usize>, MultiPoly> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Coefficient of `dx_S` for an increasing index set.
    pub fn coeff(&self, s: &[usize]) -> MultiPoly {
        self.terms.get(s).cloned().unwrap_or_else(|| MultiPoly::zero(self.num_vars))
    }

    /// Coefficient vector of a 1-form.
    pub fn one_form_coeffs(&self) -> Vec<MultiPoly> {
        assert_eq!(self.form_degree, 1);
        (0..self.num_vars).map(|i| self.coeff(&[i])).collect()
    }

    /// Adds `g dx_S` for an already increasing `S`.
    pub fn add_term(&mut self, s: Vec<usize>, g: MultiPoly) {
        assert_eq!(s.len(), self.form_degree, "index set size must equal form degree");
        assert_eq!(g.num_vars(), self.num_vars);
        if g.is_zero() {
            return;
        }
        let entry = self.terms.entry(s.clone()).or_insert_with(|| MultiPoly::zero(g.num_vars()));
        *entry = &*entry + &g;
        if entry.is_zero() {
            self.terms.remove(&s);
        }
    }

    pub fn add(&self, other: &PolyForm) -> PolyForm {
        assert_eq!(self.num_vars, other.num_vars);
        assert_eq!(self.form_degree, other.form_degree, "adding forms of different degree");
        let mut out = self.clone();
        for (s, g) in &other.terms {
            out.add_term(s.clone(), g.clone());
        }
        out
    }

    pub fn sub(&self, other: &PolyForm) -> PolyForm {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> PolyForm {
        self.scale(&-Rational::one())
    }

    pub fn scale(&self, c: &Rational) -> PolyForm {
        self.mul_function(&MultiPoly::constant(self.num_vars, c.clone()))
    }

    /// `g · ω`.
    pub fn mul_function(&self, g: &MultiPoly) -> PolyForm {
        let mut out = Self::zero(self.num_vars, self.form_degree);
        for (s, h) in &self.terms {
            out.add_term(s.clone(), h * g);
        }
        out
    }

    /// Highest total degree of a coefficient, `None` for the zero form.
    pub fn poly_degree(&self) -> Option<u32> {
        self.terms.values().filter_map(|g| g.degree()).max()
    }

    /// Weighted degree range counting `dx_i` with the weight of `x_i`.
    pub fn weighted_range(&self, weights: &[u32]) -> Option<(i64, i64)> {
        let mut acc: Option<(i64, i64)> = None;
        for (s, g) in &self.terms {
            let ds: i64 = s.iter().map(|&i| weights[i] as i64).sum();
            if let Some((lo, hi)) = g.weighted_range(weights) {
                let (lo, hi) = (lo + ds, hi + ds);
                acc = Some(match acc {
                    None => (lo, hi),
                    Some((a, b)) => (a.min(lo), b.max(hi)),
                });
            }
        }
        acc
    }

    /// Drops coefficient terms whose polynomial degree exceeds `bound`.
    /// `u32::MAX` acts as "no truncation".
    pub fn truncate_total_degree(&self, bound: u32) -> PolyForm {
        let mut out = Self::zero(self.num_vars, self.form_degree);
        for (s, g) in &self.terms {
            out.add_term(s.clone(), g.truncate(bound));
        }
        out
    }

    /// Pullback along `φ : 𝔸^k → 𝔸ⁿ` given by `n` polynomials in `k` variables.
    pub fn pullback(&self, phi: &[MultiPoly]) -> PolyForm {
        assert_eq!(phi.len(), self.num_vars, "one component per coordinate");
        let k = phi.first().map_or(0, |p| p.num_vars());
        let dphi: Vec<PolyForm> = phi.iter().map(PolyForm::exact).collect();
        let mut out = Self::zero(k, self.form_degree);
        for (s, g) in &self.terms {
            let mut acc = PolyForm::function(g.compose(phi));
            for &i in s {
                acc = wedge(&acc, &dphi[i]);
            }
            out = out.add(&acc);
        }
        out
    }

    pub fn fmt_with(&self, names: &[String]) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        let mut parts = Vec::new();
        for (s, g) in &self.terms {
            let basis: Vec<String> = s
                .iter()
                .map(|&i| format!("d{}", names.get(i).cloned().unwrap_or_else(|| format!("x{}", i + 1))))
                .collect();
            let coeff = g.fmt_with(names);
            if s.is_empty() {
                parts.push(coeff);
            } else if coeff == "1" {
                parts.push(basis.join("^"));
            } else {
                parts.push(format!("({coeff})*{}", basis.join("^")));
            }
        }
        parts.join(" + ")
    }
}

impl fmt::Debug for PolyForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.fmt_with(&default_names(self.num_vars)))
    }
}

impl fmt::Display for PolyForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.fmt_with(&default_names(self.num_vars)))
    }
}

/// Exterior derivative.
pub fn de_rham_d(w: &PolyForm) -> PolyForm {
    let n = w.num_vars;
    let mut out = PolyForm::zero(n, w.form_degree + 1);
    for (s, g) in &w.terms {
        for i in 0..n {
            let dg = g.derivative(i);
            if dg.is_zero() {
                continue;
            }
            if let Some((idx, neg)) = merge_indices(&[i], s) {
                out.add_term(idx, if neg { -&dg } else { dg });
            }
        }
    }
    out
}

/// Wedge product `α ∧ β`.
pub fn wedge(a: &PolyForm, b: &PolyForm) -> PolyForm {
    assert_eq!(a.num_vars, b.num_vars, "wedge of forms on different spaces");
    let mut out = PolyForm::zero(a.num_vars, a.form_degree + b.form_degree);
    for (s, g) in &a.terms {
        for (t, h) in &b.terms {
            if let Some((idx, neg)) = merge_indices(s, t) {
                let prod = g * h;
                out.add_term(idx, if neg { -&prod } else { prod });
            }
        }
    }
    out
}

/// Basis `{x^α dx_S : |α| = poly_degree, |S| = form_degree}`, ordered by α in
/// graded-lex order and then by `S` lexicographically.
pub fn monomial_form_basis(num_vars: usize, form_degree: usize, poly_degree: u32) -> Vec<PolyForm> {
    let monos = monomials_of_degree(num_vars, poly_degree);
    let sets = subsets(num_vars, form_degree);
    let mut out = Vec::with_capacity(monos.len() * sets.len());
    for a in &monos {
        for s in &sets {
            let g = MultiPoly::monomial(num_vars, a.clone(), Rational::one());
            out.push(PolyForm::term(s.clone(), g));
        }
    }
    out
}

/// Monomial basis `x^β dx_S` of `p`-forms with tags in a range, where the tag
/// counts `x_k` and `dx_k` with weight `weights[k]`. Ordered by tag, then
/// `S`, then `β` in graded-lex order.
#[derive(Clone, Debug)]
pub struct FormIndex {
    num_vars: usize,
    form_degree: usize,
    weights: Vec<u32>,
    basis: Vec<(Vec<usize>, Exponents)>,
    tags: Vec<i64>,
    pos: HashMap<(Vec<usize>, Exponents), usize>,
}

impl FormIndex {
    pub fn new(num_vars: usize, form_degree: usize, weights: &[u32], tags: RangeInclusive<i64>) -> Self {
        assert_eq!(weights.len(), num_vars);
        let sets = subsets(num_vars, form_degree);
        let mut basis = Vec::new();
        let mut tag_list = Vec::new();
        for t in tags {
            for s in &sets {
                let ts: i64 = s.iter().map(|&k| weights[k] as i64).sum();
                for beta in monomials_of_weighted_degree(weights, t - ts) {
                    basis.push((s.clone(), beta));
                    tag_list.push(t);
                }
            }
        }
        let pos = basis.iter().cloned().enumerate().map(|(i, b)| (b, i)).collect();
        FormIndex {
            num_vars,
            form_degree,
            weights: weights.to_vec(),
            basis,
            tags: tag_list,
            pos,
        }
    }

    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    pub fn form_degree(&self) -> usize {
        self.form_degree
    }

    pub fn tag(&self, i: usize) -> i64 {
        self.tags[i]
    }

    pub fn position(&self, s: &[usize], beta: &[u32]) -> Option<usize> {
        self.pos.get(&(s.to_vec(), beta.to_vec())).copied()
    }

    /// Coordinates of `w`, or `None` if some term lies outside the index.
    pub fn vector(&self, w: &PolyForm) -> Option<SparseVec> {
        let mut v = SparseVec::new();
        for (s, g) in w.terms() {
            for (beta, c) in g.terms() {
                let i = self.position(s, beta)?;
                v.insert(i, c.clone());
            }
        }
        Some(v)
    }

    /// Coordinates of the part of `w` inside the index.
    pub fn vector_truncated(&self, w: &PolyForm) -> SparseVec {
        let mut v = SparseVec::new();
        for (s, g) in w.terms() {
            for (beta, c) in g.terms() {
                if let Some(i) = self.position(s, beta) {
                    v.insert(i, c.clone());
                }
            }
        }
        v
    }

    pub fn element(&self, i: usize) -> PolyForm {
        let (s, beta) = &self.basis[i];
        PolyForm::term(s.clone(), MultiPoly::monomial(self.num_vars, beta.clone(), Rational::one()))
    }

    pub fn form(&self, v: &SparseVec) -> PolyForm {
        let mut w = PolyForm::zero(self.num_vars, self.form_degree);
        for (&i, c) in v {
            let (s, beta) = &self.basis[i];
            w.add_term(s.clone(), MultiPoly::monomial(self.num_vars, beta.clone(), c.clone()));
        }
        w
    }

    pub fn weights(&self) -> &[u32] {
        &self.weights
    }
}

/// Matrix of forms of a common degree.
#[derive(Clone, PartialEq, Eq)]
pub struct FormMatrix {
    rows: usize,
    cols: usize,
    form_degree: usize,
    num_vars: usize,
    entries: Vec<Vec<PolyForm>>,
}

impl fmt::Debug for FormMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, row) in self.entries.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            let cells: Vec<String> = row.iter().map(|w| w.to_string()).collect();
            write!(f, "{}", cells.join(", "))?;
        }
        write!(f, "]")
    }
}

impl FormMatrix {
    pub fn zero(num_vars: usize, rows: usize, cols: usize, form_degree: usize) -> Self {
        FormMatrix {
            rows,
            cols,
            form_degree,
            num_vars,
            entries: vec![vec![PolyForm::zero(num_vars, form_degree); cols]; rows],
        }
    }

    pub fn new(num_vars: usize, form_degree: usize, entries: Vec<Vec<PolyForm>>) -> Result<Self> {
        let rows = entries.len();
        let cols = entries.first().map_or(0, |r| r.len());
        for row in &entries {
            if row.len() != cols {
                return Err(Error::ShapeMismatch("ragged form matrix".into()));
            }
            for w in row {
                if w.form_degree != form_degree || w.num_vars != num_vars {
                    return Err(Error::ShapeMismatch(format!(
                        "form matrix entry of degree {} on {} variables, expected degree {} on {}",
                        w.form_degree, w.num_vars, form_degree, num_vars
                    )));
                }
            }
        }
        Ok(FormMatrix {
            rows,
            cols,
            form_degree,
            num_vars,
            entries,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn form_degree(&self) -> usize {
        self.form_degree
    }

    pub fn get(&self, i: usize, j: usize) -> &PolyForm {
        &self.entries[i][j]
    }

    pub fn set(&mut self, i: usize, j: usize, w: PolyForm) {
        assert_eq!(w.form_degree, self.form_degree);
        self.entries[i][j] = w;
    }

    pub fn entries(&self) -> &[Vec<PolyForm>] {
        &self.entries
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().flatten().all(|w| w.is_zero())
    }

    pub fn map(&self, f: impl Fn(&PolyForm) -> PolyForm) -> FormMatrix {
        let entries: Vec<Vec<PolyForm>> = self.entries.iter().map(|r| r.iter().map(&f).collect()).collect();
        let form_degree = entries
            .iter()
            .flatten()
            .next()
            .map_or(self.form_degree, |w| w.form_degree);
        let num_vars = entries.iter().flatten().next().map_or(self.num_vars, |w| w.num_vars);
        FormMatrix {
            rows: self.rows,
            cols: self.cols,
            form_degree,
            num_vars,
            entries,
        }
    }

    /// Matrix wedge product `(A ∧ B)_ij = Σ_k A_ik ∧ B_kj`.
    pub fn wedge(&self, other: &FormMatrix) -> Result<FormMatrix> {
        if self.cols != other.rows {
            return Err(Error::ShapeMismatch(format!(
                "cannot wedge {}x{} with {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = FormMatrix::zero(
            self.num_vars,
            self.rows,
            other.cols,
            self.form_degree + other.form_degree,
        );
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = PolyForm::zero(self.num_vars, self.form_degree + other.form_degree);
                for k in 0..self.cols {
                    acc = acc.add(&wedge(&self.entries[i][k], &other.entries[k][j]));
                }
                out.entries[i][j] = acc;
            }
        }
        Ok(out)
    }

    pub fn add(&self, other: &FormMatrix) -> Result<FormMatrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::ShapeMismatch("adding form matrices of different shape".into()));
        }
        let mut out = self.clone();
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.entries[i][j] = self.entries[i][j].add(&other.entries[i][j]);
            }
        }
        Ok(out)
    }

    pub fn d(&self) -> FormMatrix {
        let mut out = self.map(de_rham_d);
        out.form_degree = self.form_degree + 1;
        out
    }
}

/// `dW + W ∧ W`, entrywise; zero exactly when the connection `d + W` is flat.
pub fn matrix_integrability_defect(w: &FormMatrix) -> Result<FormMatrix> {
    if w.rows != w.cols {
        return Err(Error::NonSquare {
            rows: w.rows,
            cols: w.cols,
        });
    }
    if w.form_degree != 1 {
        return Err(Error::InvalidInput(format!(
            "connection matrix entries must be 1-forms, got degree {}",
            w.form_degree
        )));
    }
    w.d().add(&w.wedge(w)?)
}
