//! Generator-level model of `E(0) ⊗ DR(𝔽)` for foliations on 𝔸ⁿ.
//!
//! The algebra is `ℚ[x_1..x_n] ⊗ ℚ[u_1..u_k] ⊗ Λ(θ_1..θ_m)`, tensored with a
//! free module on frames `e_1..e_r`. Bookkeeping for a basis monomial
//! `e_f u^α x^β θ_S`:
//!
//! * weight `|α| + |S|`, realized degree `|S|`, internal degree `|S| − 2·weight`;
//! * `u_i` is even of internal degree −2, `θ_a` odd of internal degree −1.
//!
//! The total differential `D = δ + ε` is an odd derivation with
//!
//! * `δ(u_i) = Σ_a s_{ai} θ_a`, zero on `x`, `θ` and frames (weight 0);
//! * `ε(g) = Σ_a (Σ_k anchor_{ak} ∂_k g) θ_a` on functions,
//!   `ε(θ_a) = Σ_{b<c} Γ^a_{bc} θ_b θ_c`, `ε(u_i) = Σ_j u_j Θ_{ij}`,
//!   `ε(e_f) = Σ_g e_g N_{gf}` (weight +1).
//!
//! `D² = 0` everywhere iff it vanishes on generators, which is checked
//! symbolically by [`MixedModel::square_defects`].

use std::collections::{BTreeMap, HashMap};

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::linalg::{int, FiniteCochainComplex, Rational, SparseMatrix, SparseVec};
use crate::mixed::{DegreeCohomology, Filtration, GradedMixedComplex, Region};
use crate::poly::{monomials_of_degree, monomials_of_weighted_degree, weighted_degree, Exponents, MultiPoly};

/// Coefficients of `Σ_a c_a θ_a`.
pub type LetterForm = Vec<MultiPoly>;

/// Monomial `e_frame · u^alpha · x^beta · θ_letters`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Key {
    pub frame: usize,
    pub alpha: Exponents,
    pub letters: u64,
    pub beta: Exponents,
}

impl Key {
    pub fn weight(&self) -> usize {
        self.alpha.iter().sum::<u32>() as usize + self.letters.count_ones() as usize
    }

    pub fn degree(&self) -> usize {
        self.letters.count_ones() as usize
    }

    pub fn letter_list(&self) -> Vec<usize> {
        (0..64).filter(|a| self.letters >> a & 1 == 1).collect()
    }
}

/// Sparse linear combination of [`Key`]s.
pub type Element = BTreeMap<Key, Rational>;

fn add_to(el: &mut Element, key: Key, c: Rational) {
    if c.is_zero() {
        return;
    }
    match el.get_mut(&key) {
        Some(x) => {
            *x += c;
            if x.is_zero() {
                el.remove(&key);
            }
        }
        None => {
            el.insert(key, c);
        }
    }
}

/// Sign of `θ_A ∧ θ_B` for disjoint sorted sets given as bitmasks, or `None`
/// when they overlap.
fn wedge_sign(a: u64, b: u64) -> Option<Rational> {
    if a & b != 0 {
        return None;
    }
    let mut inversions = 0u32;
    for i in 0..64 {
        if a >> i & 1 == 1 {
            inversions += (b & ((1u64 << i) - 1)).count_ones();
        }
    }
    Some(if inversions.is_multiple_of(2) { Rational::one() } else { -Rational::one() })
}

fn add_exps(a: &[u32], b: &[u32]) -> Exponents {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

/// Tags (filtration degrees) of generators, and how the differential moves them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TagAssignment {
    pub var_weights: Vec<u32>,
    pub v: Vec<i64>,
    pub letters: Vec<i64>,
    /// `D` preserves tags exactly.
    pub homogeneous: bool,
    /// Largest tag increase produced by `D` on a generator.
    pub max_raise: i64,
}

impl TagAssignment {
    pub fn tag(&self, key: &Key) -> i64 {
        let mut t = weighted_degree(&key.beta, &self.var_weights);
        for (a, tv) in key.alpha.iter().zip(&self.v) {
            t += *a as i64 * tv;
        }
        for a in key.letter_list() {
            t += self.letters[a];
        }
        t
    }

    /// Smallest possible tag of any monomial.
    fn min_tag(&self) -> i64 {
        self.letters.iter().filter(|t| **t < 0).sum()
    }
}

/// Structure data of `E(0) ⊗ DR(𝔽)`; see the module docs for conventions.
#[derive(Clone, Debug)]
pub struct MixedModel {
    pub num_vars: usize,
    pub var_weights: Vec<u32>,
    pub num_v: usize,
    pub num_letters: usize,
    pub rank: usize,
    /// `delta_v[i]` is `δ(u_i)` as a letter form.
    pub delta_v: Vec<LetterForm>,
    /// `anchor[a][k]`: coefficient of `∂_k` in the vector field paired with `θ_a`.
    pub anchor: Vec<Vec<MultiPoly>>,
    /// `letter_eps[a][(b, c)]` with `b < c`: coefficient of `θ_b θ_c` in `ε(θ_a)`.
    pub letter_eps: Vec<BTreeMap<(usize, usize), MultiPoly>>,
    /// `v_eps[i][j]`: letter form `Θ_{ij}` with `ε(u_i) = Σ_j u_j Θ_{ij}`.
    pub v_eps: Vec<Vec<LetterForm>>,
    /// `frame_eps[f][g]`: letter form `N_{gf}` with `ε(e_f) = Σ_g e_g N_{gf}`.
    pub frame_eps: Vec<Vec<LetterForm>>,
}

/// A generator of the algebra or module, used to name `D²` defects.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Generator {
    Var(usize),
    Letter(usize),
    V(usize),
    Frame(usize),
}

/// A graded mixed complex assembled from a [`MixedModel`], together with the
/// monomial basis of each weight and realized degree.
#[derive(Clone, Debug)]
pub struct BuiltComplex {
    pub gmc: GradedMixedComplex,
    /// `keys[p][q]`: basis of weight `p` in realized degree `q`.
    pub keys: Vec<BTreeMap<usize, Vec<Key>>>,
    pub tags: TagAssignment,
}

impl BuiltComplex {
    /// Monomials of realized degree `q` in the order used by
    /// [`GradedMixedComplex::realize`].
    pub fn realized_keys(&self, q: usize) -> Vec<&Key> {
        self.keys.iter().filter_map(|t| t.get(&q)).flatten().collect()
    }
}

impl MixedModel {
    /// Model with no structure: `n` variables, no generators, one frame.
    pub fn empty(num_vars: usize) -> Self {
        MixedModel {
            num_vars,
            var_weights: vec![1; num_vars],
            num_v: 0,
            num_letters: 0,
            rank: 1,
            delta_v: vec![],
            anchor: vec![],
            letter_eps: vec![],
            v_eps: vec![],
            frame_eps: vec![vec![vec![]]],
        }
    }

    /// Same algebra with a single frame and `ε(e) = 0`.
    pub fn algebra(&self) -> MixedModel {
        let mut m = self.clone();
        m.rank = 1;
        m.frame_eps = vec![vec![vec![MultiPoly::zero(self.num_vars); self.num_letters]]];
        m
    }

    pub fn check_shapes(&self) -> Result<()> {
        let n = self.num_vars;
        let m = self.num_letters;
        let bad = |what: &str| Err(Error::ShapeMismatch(format!("mixed model: {what}")));
        if m > 63 {
            return Err(Error::Unsupported("more than 63 odd generators".into()));
        }
        if self.var_weights.len() != n || self.var_weights.contains(&0) {
            return bad("variable weights must be positive, one per variable");
        }
        if self.delta_v.len() != self.num_v || self.delta_v.iter().any(|f| f.len() != m) {
            return bad("δ on V-generators");
        }
        if self.anchor.len() != m || self.anchor.iter().any(|r| r.len() != n) {
            return bad("anchor");
        }
        if self.letter_eps.len() != m || self.letter_eps.iter().any(|t| t.keys().any(|(b, c)| b >= c || *c >= m)) {
            return bad("ε on odd generators");
        }
        if self.v_eps.len() != self.num_v
            || self.v_eps.iter().any(|row| row.len() != self.num_v || row.iter().any(|f| f.len() != m))
        {
            return bad("ε on V-generators");
        }
        if self.frame_eps.len() != self.rank
            || self.frame_eps.iter().any(|row| row.len() != self.rank || row.iter().any(|f| f.len() != m))
        {
            return bad("ε on frames");
        }
        let polys = self
            .delta_v
            .iter()
            .flatten()
            .chain(self.anchor.iter().flatten())
            .chain(self.letter_eps.iter().flat_map(|t| t.values()))
            .chain(self.v_eps.iter().flatten().flatten())
            .chain(self.frame_eps.iter().flatten().flatten());
        for p in polys {
            if p.num_vars() != n {
                return bad("coefficient in the wrong number of variables");
            }
        }
        Ok(())
    }

    /// Adds `coeff · g · e_frame u^alpha x^beta θ_extra ∧ θ_letters` to `out`.
    #[allow(clippy::too_many_arguments)]
    fn emit(
        out: &mut Element,
        coeff: &Rational,
        g: &MultiPoly,
        frame: usize,
        alpha: &Exponents,
        beta: &[u32],
        extra: u64,
        letters: u64,
    ) {
        let Some(s) = wedge_sign(extra, letters) else {
            return;
        };
        let c = coeff * s;
        for (gamma, x) in g.terms() {
            let key = Key {
                frame,
                alpha: alpha.clone(),
                letters: extra | letters,
                beta: add_exps(beta, gamma),
            };
            add_to(out, key, &c * x);
        }
    }

    /// `δ` on a monomial.
    pub fn delta(&self, key: &Key) -> Element {
        let mut out = Element::new();
        for i in 0..self.num_v {
            if key.alpha[i] == 0 {
                continue;
            }
            let mut alpha = key.alpha.clone();
            alpha[i] -= 1;
            let c = int(key.alpha[i] as i64);
            for (a, g) in self.delta_v[i].iter().enumerate() {
                Self::emit(&mut out, &c, g, key.frame, &alpha, &key.beta, 1 << a, key.letters);
            }
        }
        out
    }

    /// `ε` on a monomial.
    pub fn epsilon(&self, key: &Key) -> Element {
        let mut out = Element::new();
        let one = Rational::one();
        // frame
        for (g, form) in self.frame_eps[key.frame].iter().enumerate() {
            for (c, poly) in form.iter().enumerate() {
                Self::emit(&mut out, &one, poly, g, &key.alpha, &key.beta, 1 << c, key.letters);
            }
        }
        // V-generators
        for i in 0..self.num_v {
            if key.alpha[i] == 0 {
                continue;
            }
            let coeff = int(key.alpha[i] as i64);
            for j in 0..self.num_v {
                let mut alpha = key.alpha.clone();
                alpha[i] -= 1;
                alpha[j] += 1;
                for (c, poly) in self.v_eps[i][j].iter().enumerate() {
                    Self::emit(&mut out, &coeff, poly, key.frame, &alpha, &key.beta, 1 << c, key.letters);
                }
            }
        }
        // functions
        for k in 0..self.num_vars {
            if key.beta[k] == 0 {
                continue;
            }
            let mut beta = key.beta.clone();
            beta[k] -= 1;
            let coeff = int(key.beta[k] as i64);
            for a in 0..self.num_letters {
                Self::emit(&mut out, &coeff, &self.anchor[a][k], key.frame, &key.alpha, &beta, 1 << a, key.letters);
            }
        }
        // odd generators: passing ε over the j earlier letters gives (−1)^j
        for (j, a) in key.letter_list().into_iter().enumerate() {
            let rest = key.letters & !(1u64 << a);
            let coeff = if j % 2 == 0 { one.clone() } else { -one.clone() };
            for (&(b, c), poly) in &self.letter_eps[a] {
                let pair = (1u64 << b) | (1u64 << c);
                Self::emit(&mut out, &coeff, poly, key.frame, &key.alpha, &key.beta, pair, rest);
            }
        }
        out
    }

    /// `D = δ + ε` on a monomial.
    pub fn total(&self, key: &Key) -> Element {
        let mut out = self.delta(key);
        for (k, c) in self.epsilon(key) {
            add_to(&mut out, k, c);
        }
        out
    }

    pub fn apply(&self, el: &Element) -> Element {
        let mut out = Element::new();
        for (k, c) in el {
            for (k2, c2) in self.total(k) {
                add_to(&mut out, k2, c * c2);
            }
        }
        out
    }

    fn unit_key(&self, frame: usize) -> Key {
        Key {
            frame,
            alpha: vec![0; self.num_v],
            letters: 0,
            beta: vec![0; self.num_vars],
        }
    }

    /// The monomial consisting of one generator (frame generators are `e_f`,
    /// the others are taken with frame 0).
    pub fn generator_key(&self, g: &Generator) -> Key {
        let mut key = self.unit_key(0);
        match *g {
            Generator::Var(k) => key.beta[k] = 1,
            Generator::Letter(a) => key.letters = 1 << a,
            Generator::V(i) => key.alpha[i] = 1,
            Generator::Frame(f) => key.frame = f,
        }
        key
    }

    fn generators(&self) -> Vec<Generator> {
        let mut g: Vec<Generator> = (0..self.num_vars).map(Generator::Var).collect();
        g.extend((0..self.num_letters).map(Generator::Letter));
        g.extend((0..self.num_v).map(Generator::V));
        g
    }

    /// Generators on which `D² ≠ 0`, with the value of `D²`. Algebra
    /// generators are checked in [`Self::algebra`]; frames in `self`.
    pub fn square_defects(&self) -> Vec<(Generator, Element)> {
        let alg = self.algebra();
        let mut out = Vec::new();
        for g in self.generators() {
            let key = alg.generator_key(&g);
            let dd = alg.apply(&alg.total(&key));
            if !dd.is_empty() {
                out.push((g, dd));
            }
        }
        for f in 0..self.rank {
            let key = self.unit_key(f);
            let dd = self.apply(&self.total(&key));
            if !dd.is_empty() {
                out.push((Generator::Frame(f), dd));
            }
        }
        out
    }

    /// Images of generators as elements, for tag bookkeeping.
    fn generator_images(&self) -> Vec<(Key, Element)> {
        let alg = self.algebra();
        let mut out: Vec<(Key, Element)> = self
            .generators()
            .into_iter()
            .map(|g| {
                let k = alg.generator_key(&g);
                let img = alg.total(&k);
                (k, img)
            })
            .collect();
        for f in 0..self.rank {
            let k = self.unit_key(f);
            let img = self.total(&k);
            out.push((k, img));
        }
        out
    }

    /// Tags making `D` tag-preserving when possible; otherwise a uniform
    /// assignment under which `D` never lowers tags.
    pub fn tag_assignment(&self) -> Result<TagAssignment> {
        let w = &self.var_weights;
        // letters from the anchor rows
        let mut letters = vec![0i64; self.num_letters];
        let mut homogeneous_guess = true;
        for (a, row) in self.anchor.iter().enumerate() {
            let mut degs = row.iter().enumerate().flat_map(|(k, p)| {
                p.terms().keys().map(move |g| weighted_degree(g, w) - w[k] as i64)
            });
            if let Some(first) = degs.next() {
                if degs.all(|d| d == first) {
                    letters[a] = -first;
                } else {
                    homogeneous_guess = false;
                }
            }
        }
        let mut v = vec![1i64; self.num_v];
        for (i, form) in self.delta_v.iter().enumerate() {
            let mut degs = form
                .iter()
                .enumerate()
                .flat_map(|(a, p)| p.terms().keys().map(move |g| (a, weighted_degree(g, w))))
                .map(|(a, d)| d + letters[a]);
            if let Some(first) = degs.next() {
                if degs.all(|d| d == first) && first >= 1 {
                    v[i] = first;
                } else {
                    homogeneous_guess = false;
                }
            }
        }
        let images = self.generator_images();
        if homogeneous_guess {
            let t = TagAssignment {
                var_weights: w.clone(),
                v: v.clone(),
                letters: letters.clone(),
                homogeneous: true,
                max_raise: 0,
            };
            if images
                .iter()
                .all(|(k, img)| img.keys().all(|k2| t.tag(k2) == t.tag(k)))
            {
                return Ok(t);
            }
        }
        // uniform fallback
        let mut b = 0i64;
        for row in &self.anchor {
            for (k, p) in row.iter().enumerate() {
                for g in p.terms().keys() {
                    b = b.max(w[k] as i64 - weighted_degree(g, w));
                }
            }
        }
        let mut m0: Option<i64> = None;
        for form in &self.delta_v {
            for p in form {
                for g in p.terms().keys() {
                    let t = weighted_degree(g, w) + b;
                    m0 = Some(m0.map_or(t, |m| m.min(t)));
                }
            }
        }
        let u_tag = m0.unwrap_or(1).max(1);
        let mut t = TagAssignment {
            var_weights: w.clone(),
            v: vec![u_tag; self.num_v],
            letters: vec![b; self.num_letters],
            homogeneous: false,
            max_raise: 0,
        };
        let mut raise = 0;
        for (k, img) in &images {
            for k2 in img.keys() {
                let r = t.tag(k2) - t.tag(k);
                if r < 0 {
                    return Err(Error::Unsupported(
                        "no filtration by polynomial degree is preserved by this structure".into(),
                    ));
                }
                raise = raise.max(r);
            }
        }
        t.max_raise = raise;
        Ok(t)
    }

    /// Monomials of weight `p`, realized degree `q` and tag in `tags`, ordered
    /// by tag, frame, `α`, letters, `β`.
    fn basis(&self, t: &TagAssignment, p: usize, q: usize, tags: std::ops::RangeInclusive<i64>) -> Vec<Key> {
        let mut out = Vec::new();
        if q > self.num_letters || q > p {
            return out;
        }
        let a_deg = (p - q) as u32;
        if self.num_v == 0 && a_deg > 0 {
            return out;
        }
        let alphas = monomials_of_degree(self.num_v, a_deg);
        let letter_sets: Vec<u64> = crate::forms::subsets(self.num_letters, q)
            .into_iter()
            .map(|s| s.iter().fold(0u64, |m, a| m | 1 << a))
            .collect();
        for s in tags {
            for frame in 0..self.rank {
                for alpha in &alphas {
                    let at: i64 = alpha.iter().zip(&t.v).map(|(a, tv)| *a as i64 * tv).sum();
                    for &letters in &letter_sets {
                        let lt: i64 = (0..self.num_letters)
                            .filter(|a| letters >> a & 1 == 1)
                            .map(|a| t.letters[a])
                            .sum();
                        for beta in monomials_of_weighted_degree(&self.var_weights, s - at - lt) {
                            out.push(Key {
                                frame,
                                alpha: alpha.clone(),
                                letters,
                                beta,
                            });
                        }
                    }
                }
            }
        }
        out
    }

    /// Builds the graded mixed complex on monomials of weight `≤ max_weight`
    /// and tag `≤ max_tag`, with images projected onto that range.
    pub fn build_region(&self, t: &TagAssignment, max_weight: usize, max_tag: i64, filtration: Filtration) -> Result<BuiltComplex> {
        self.check_shapes()?;
        let tmin = t.min_tag();
        let mut keys: Vec<BTreeMap<usize, Vec<Key>>> = Vec::new();
        let mut index: Vec<BTreeMap<usize, HashMap<Key, usize>>> = Vec::new();
        for p in 0..=max_weight {
            let mut table = BTreeMap::new();
            let mut idx = BTreeMap::new();
            for q in 0..=p.min(self.num_letters) {
                let b = self.basis(t, p, q, tmin..=max_tag);
                idx.insert(q, b.iter().cloned().enumerate().map(|(j, k)| (k, j)).collect());
                table.insert(q, b);
            }
            keys.push(table);
            index.push(idx);
        }
        let q_range = |p: usize| -> (usize, usize) {
            let hi = p.min(self.num_letters);
            let lo = if self.num_v == 0 { p.min(hi) } else { 0 };
            (lo, hi)
        };
        let mut pieces = Vec::new();
        let mut mixed = Vec::new();
        let mut tag_tables = Vec::new();
        for p in 0..=max_weight {
            let (lo, hi) = q_range(p);
            let dim = |q: usize| keys[p].get(&q).map_or(0, Vec::len);
            if self.num_v == 0 && p > self.num_letters {
                pieces.push(FiniteCochainComplex::single(-(p as i64), 0));
                tag_tables.push(BTreeMap::new());
                if p < max_weight {
                    mixed.push(BTreeMap::new());
                }
                continue;
            }
            let mut diffs = Vec::new();
            let mut eps = BTreeMap::new();
            for q in lo..=hi {
                let src = &keys[p][&q];
                let mut d_cols = vec![SparseVec::new(); src.len()];
                let mut e_cols = vec![SparseVec::new(); src.len()];
                for (j, key) in src.iter().enumerate() {
                    for (k2, c) in self.total(key) {
                        let (w2, q2) = (k2.weight(), k2.degree());
                        if w2 == p {
                            if let Some(&r) = index[p].get(&q2).and_then(|m| m.get(&k2)) {
                                d_cols[j].insert(r, c);
                            }
                        } else if w2 == p + 1 && p < max_weight {
                            if let Some(&r) = index[p + 1].get(&q2).and_then(|m| m.get(&k2)) {
                                e_cols[j].insert(r, c);
                            }
                        }
                    }
                }
                if q < hi {
                    diffs.push(SparseMatrix::from_columns(dim(q + 1), d_cols));
                }
                if p < max_weight {
                    let rows = keys[p + 1].get(&(q + 1)).map_or(0, Vec::len);
                    eps.insert(q as i64 - 2 * p as i64, SparseMatrix::from_columns(rows, e_cols));
                }
            }
            let dims = (lo..=hi).map(dim).collect();
            pieces.push(FiniteCochainComplex::with_shapes(lo as i64 - 2 * p as i64, dims, diffs)?);
            if p < max_weight {
                mixed.push(eps);
            }
            let tt = (lo..=hi)
                .map(|q| (q as i64 - 2 * p as i64, keys[p][&q].iter().map(|k| t.tag(k)).collect()))
                .collect();
            tag_tables.push(tt);
        }
        let gmc = GradedMixedComplex::new(pieces, mixed)?.with_filtration(tag_tables, filtration)?;
        Ok(BuiltComplex {
            gmc,
            keys,
            tags: t.clone(),
        })
    }

    /// Largest weight of a monomial with tag `≤ max_tag`.
    fn weight_bound(&self, t: &TagAssignment, max_tag: i64) -> usize {
        if self.num_v == 0 {
            return self.num_letters;
        }
        let min_v = *t.v.iter().min().expect("num_v > 0");
        let span = (max_tag - t.min_tag()).max(0);
        self.num_letters + (span / min_v.max(1)) as usize
    }

    /// Builds a complex adequate for filtered cohomology at `cutoff`.
    ///
    /// Tag-preserving structures get every slice up to `D + 1` in full;
    /// otherwise the complex is cut off with `pad` extra steps of preimages.
    pub fn build_for(&self, cutoff: Region, pad: usize) -> Result<BuiltComplex> {
        let t = self.tag_assignment()?;
        if t.homogeneous {
            let max_tag = cutoff.tag + 1;
            let max_weight = self.weight_bound(&t, max_tag);
            self.build_region(&t, max_weight, max_tag, Filtration::Graded { tag_bound: max_tag })
        } else {
            let max_weight = cutoff.weight + 2 + pad;
            let max_tag = cutoff.tag + 1 + pad as i64 + t.max_raise;
            let exact = Region::new(max_weight - 1, max_tag - t.max_raise);
            self.build_region(&t, max_weight, max_tag, Filtration::Filtered { exact })
        }
    }

    /// Filtered cohomology of the realization in degrees `0..=m`.
    pub fn cohomology(&self, cutoff: Region, pad: usize) -> Result<BTreeMap<i64, DegreeCohomology>> {
        let built = self.build_for(cutoff, pad)?;
        built
            .gmc
            .realized_cohomology(0..=self.num_letters as i64, cutoff)
    }
}
