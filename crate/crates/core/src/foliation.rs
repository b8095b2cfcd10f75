//! Derived foliations on 𝔸ⁿ with two-term cotangent complexes `V → W`.
//!
//! Each constructor records a [`CotangentPresentation`] and a [`MixedModel`]
//! for `DR(𝔽)`:
//!
//! * de Rham and punctual foliations, and Lie algebroids, have `V = 0`;
//! * Pfaffian systems `(w_1..w_k, W)` have `W`-letters `θ_a = dx_a`, an identity
//!   anchor, `δ(u_i) = w_i` and `ε(u_i) = −Σ_j u_j w_ij`. With these signs
//!   `D² = 0` is equivalent to `dw_i = −Σ_j w_ij ∧ w_j` together with
//!   `dW + W ∧ W = 0`.

use std::collections::BTreeMap;

use num_traits::Zero;
use serde::{Serialize, Serializer};

use crate::algebra::MixedModel;
use crate::error::{Error, Result};
use crate::forms::{de_rham_d, matrix_integrability_defect, wedge, FormIndex, FormMatrix, PolyForm};
use crate::ideal::{contains_one, local_length, maximal_minors, test_points, LocalLength};
use crate::linalg::{kernel_basis, Echelon, Rational, SparseMatrix, SparseVec};
use crate::mixed::{DegreeCohomology, Filtration, GradedMixedComplex, Region};
use crate::poly::{monomials_of_weighted_degree, MultiPoly};
use crate::{Cutoffs, PREIMAGE_PADDING};

/// The complex `V → W` with `s : V → W` (an `m × k` matrix) and the anchor
/// `Ω¹ → W` (an `m × n` matrix sending `dx_k` to column `k`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CotangentPresentation {
    pub n: usize,
    pub k: usize,
    pub m: usize,
    pub s: Vec<Vec<MultiPoly>>,
    pub anchor: Vec<Vec<MultiPoly>>,
}

/// Which constructor produced a foliation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    DeRham,
    Punctual,
    LieAlgebroid,
    Pfaffian,
    Integrable,
}

impl Provenance {
    /// Anchor is the identity of `Ω¹`.
    pub fn has_identity_anchor(&self) -> bool {
        matches!(self, Provenance::DeRham | Provenance::Pfaffian | Provenance::Integrable)
    }
}

#[derive(Clone, Debug)]
struct PfaffianData {
    forms: Vec<PolyForm>,
    connection: FormMatrix,
    functions: Option<Vec<MultiPoly>>,
}

#[derive(Clone, Debug)]
struct AlgebroidData {
    rho: Vec<Vec<MultiPoly>>,
    structure: Vec<Vec<Vec<MultiPoly>>>,
}

/// A derived foliation on 𝔸ⁿ together with its mixed structure.
#[derive(Clone, Debug)]
pub struct FoliationPresentation {
    cotangent: CotangentPresentation,
    model: MixedModel,
    provenance: Provenance,
    pfaffian: Option<PfaffianData>,
    algebroid: Option<AlgebroidData>,
}

fn identity_rows(n: usize) -> Vec<Vec<MultiPoly>> {
    (0..n)
        .map(|a| (0..n).map(|k| if a == k { MultiPoly::one(n) } else { MultiPoly::zero(n) }).collect())
        .collect()
}

/// `ρ(g) = Σ_k ρ_k ∂_k g` for a vector field given by its components.
pub fn apply_vector_field(rho: &[MultiPoly], g: &MultiPoly) -> MultiPoly {
    let mut acc = MultiPoly::zero(g.num_vars());
    for (k, r) in rho.iter().enumerate() {
        if !r.is_zero() {
            acc = &acc + &(r * &g.derivative(k));
        }
    }
    acc
}

impl FoliationPresentation {
    /// The final foliation: `DR(𝔽)` is the de Rham algebra of 𝔸ⁿ.
    pub fn de_rham(n: usize) -> Self {
        let mut model = MixedModel::empty(n);
        model.num_letters = n;
        model.anchor = identity_rows(n);
        model.letter_eps = vec![BTreeMap::new(); n];
        model.frame_eps = vec![vec![vec![MultiPoly::zero(n); n]]];
        FoliationPresentation {
            cotangent: CotangentPresentation {
                n,
                k: 0,
                m: n,
                s: vec![vec![]; n],
                anchor: identity_rows(n),
            },
            model,
            provenance: Provenance::DeRham,
            pfaffian: None,
            algebroid: None,
        }
    }

    /// The initial foliation: `DR(𝔽) = 𝒪` in weight 0.
    pub fn punctual(n: usize) -> Self {
        FoliationPresentation {
            cotangent: CotangentPresentation {
                n,
                k: 0,
                m: 0,
                s: vec![],
                anchor: vec![],
            },
            model: MixedModel::empty(n),
            provenance: Provenance::Punctual,
            pfaffian: None,
            algebroid: None,
        }
    }

    /// Chevalley–Eilenberg foliation of a Lie algebroid of rank `r` with
    /// anchor `rho` (`r × n`, row `a` is the vector field `ρ(e_a)`) and
    /// brackets `[e_i, e_j] = Σ_l c[i][j][l] e_l`.
    pub fn lie_algebroid(n: usize, rho: Vec<Vec<MultiPoly>>, c: Vec<Vec<Vec<MultiPoly>>>) -> Result<Self> {
        let r = rho.len();
        if rho.iter().any(|row| row.len() != n)
            || c.len() != r
            || c.iter().any(|row| row.len() != r || row.iter().any(|v| v.len() != r))
        {
            return Err(Error::ShapeMismatch(format!(
                "Lie algebroid of rank {r} on 𝔸^{n} needs an {r}x{n} anchor and {r}x{r}x{r} structure functions"
            )));
        }
        if rho.iter().flatten().chain(c.iter().flatten().flatten()).any(|p| p.num_vars() != n) {
            return Err(Error::ShapeMismatch("coefficients in the wrong number of variables".into()));
        }
        check_lie_algebroid(n, &rho, &c)?;
        let mut model = MixedModel::empty(n);
        model.num_letters = r;
        model.anchor = rho.clone();
        model.letter_eps = (0..r)
            .map(|l| {
                let mut t = BTreeMap::new();
                for i in 0..r {
                    for j in i + 1..r {
                        if !c[i][j][l].is_zero() {
                            t.insert((i, j), -&c[i][j][l]);
                        }
                    }
                }
                t
            })
            .collect();
        model.frame_eps = vec![vec![vec![MultiPoly::zero(n); r]]];
        debug_assert!(model.square_defects().is_empty());
        Ok(FoliationPresentation {
            cotangent: CotangentPresentation {
                n,
                k: 0,
                m: r,
                s: vec![vec![]; r],
                anchor: rho.clone(),
            },
            model,
            provenance: Provenance::LieAlgebroid,
            pfaffian: None,
            algebroid: Some(AlgebroidData { rho, structure: c }),
        })
    }

    /// Pfaffian system `w_1..w_k` with connection matrix `W`, validated.
    pub fn pfaffian(n: usize, forms: Vec<PolyForm>, connection: FormMatrix) -> Result<Self> {
        let f = Self::pfaffian_unchecked(n, forms, connection)?;
        f.check_pfaffian()?;
        Ok(f)
    }

    /// Pfaffian system without checking the integrability conditions, so the
    /// mixed structure may fail `ε² = 0`.
    pub fn pfaffian_unchecked(n: usize, forms: Vec<PolyForm>, connection: FormMatrix) -> Result<Self> {
        let k = forms.len();
        if forms.iter().any(|w| w.num_vars() != n || w.form_degree() != 1) {
            return Err(Error::ShapeMismatch(format!("Pfaffian forms must be 1-forms on 𝔸^{n}")));
        }
        if connection.rows() != k || connection.cols() != k {
            return Err(Error::ShapeMismatch(format!(
                "connection matrix is {}x{}, expected {k}x{k}",
                connection.rows(),
                connection.cols()
            )));
        }
        if k > 0 && (connection.form_degree() != 1 || connection.num_vars() != n) {
            return Err(Error::ShapeMismatch("connection entries must be 1-forms on the same space".into()));
        }
        let mut model = MixedModel::empty(n);
        model.num_letters = n;
        model.num_v = k;
        model.anchor = identity_rows(n);
        model.letter_eps = vec![BTreeMap::new(); n];
        model.delta_v = forms.iter().map(|w| w.one_form_coeffs()).collect();
        model.v_eps = (0..k)
            .map(|i| {
                (0..k)
                    .map(|j| connection.get(i, j).neg().one_form_coeffs())
                    .collect()
            })
            .collect();
        model.frame_eps = vec![vec![vec![MultiPoly::zero(n); n]]];
        // s sends e_j to w_j: row a, column j is the dx_a coefficient of w_j
        let s = (0..n).map(|a| forms.iter().map(|w| w.coeff(&[a])).collect()).collect();
        Ok(FoliationPresentation {
            cotangent: CotangentPresentation {
                n,
                k,
                m: n,
                s,
                anchor: identity_rows(n),
            },
            model,
            provenance: Provenance::Pfaffian,
            pfaffian: Some(PfaffianData {
                forms,
                connection,
                functions: None,
            }),
            algebroid: None,
        })
    }

    /// Foliation by the fibers of `f = (f_1..f_m) : 𝔸ⁿ → 𝔸^m`.
    pub fn integrable(n: usize, functions: Vec<MultiPoly>) -> Result<Self> {
        if functions.iter().any(|f| f.num_vars() != n) {
            return Err(Error::ShapeMismatch(format!("functions must live on 𝔸^{n}")));
        }
        let forms: Vec<PolyForm> = functions.iter().map(PolyForm::exact).collect();
        let k = forms.len();
        let mut f = Self::pfaffian(n, forms, FormMatrix::zero(n, k, k, 1))?;
        f.provenance = Provenance::Integrable;
        if let Some(p) = f.pfaffian.as_mut() {
            p.functions = Some(functions);
        }
        Ok(f)
    }

    /// Pullback of a Pfaffian or integrable foliation along `phi : 𝔸ⁿ → 𝔸^m`.
    pub fn pullback_pfaffian(&self, n: usize, phi: &[MultiPoly]) -> Result<Self> {
        let data = self
            .pfaffian
            .as_ref()
            .ok_or_else(|| Error::Unsupported("pullback needs a Pfaffian or integrable foliation".into()))?;
        if phi.len() != self.n() || phi.iter().any(|p| p.num_vars() != n) {
            return Err(Error::ShapeMismatch(format!(
                "pullback map needs {} components in {n} variables",
                self.n()
            )));
        }
        let mut out = if let Some(fs) = &data.functions {
            let composed = fs.iter().map(|f| f.compose(phi)).collect();
            Self::integrable(n, composed)?
        } else {
            let forms = data.forms.iter().map(|w| w.pullback(phi)).collect();
            let k = data.forms.len();
            let connection = if k == 0 {
                FormMatrix::zero(n, 0, 0, 1)
            } else {
                data.connection.map(|w| w.pullback(phi))
            };
            Self::pfaffian(n, forms, connection)?
        };
        out.model.var_weights = vec![1; n];
        Ok(out)
    }

    /// Same foliation, filtering polynomials by the weighted degree with
    /// `weights[k]` for `x_k` and `dx_k`.
    pub fn with_weights(mut self, weights: Vec<u32>) -> Result<Self> {
        if weights.len() != self.n() || weights.contains(&0) {
            return Err(Error::InvalidInput(format!(
                "need {} positive variable weights, got {weights:?}",
                self.n()
            )));
        }
        self.model.var_weights = weights;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.cotangent.n
    }

    pub fn cotangent(&self) -> &CotangentPresentation {
        &self.cotangent
    }

    pub fn model(&self) -> &MixedModel {
        &self.model
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn weights(&self) -> &[u32] {
        &self.model.var_weights
    }

    /// Pfaffian forms `w_i` (empty for other provenances).
    pub fn pfaffian_forms(&self) -> &[PolyForm] {
        self.pfaffian.as_ref().map_or(&[], |p| &p.forms)
    }

    pub fn connection(&self) -> Option<&FormMatrix> {
        self.pfaffian.as_ref().map(|p| &p.connection)
    }

    /// Anchor rows and structure functions of an algebroid.
    pub fn algebroid_data(&self) -> Option<(&[Vec<MultiPoly>], &[Vec<Vec<MultiPoly>>])> {
        self.algebroid.as_ref().map(|a| (a.rho.as_slice(), a.structure.as_slice()))
    }

    /// Checks `dw_i + Σ_j w_ij ∧ w_j = 0` for each `i`, then `dW + W∧W = 0`.
    pub fn check_pfaffian(&self) -> Result<()> {
        let Some(data) = &self.pfaffian else {
            return Ok(());
        };
        let k = data.forms.len();
        let n = self.n();
        for i in 0..k {
            let dw = de_rham_d(&data.forms[i]);
            let mut residual = dw.clone();
            for j in 0..k {
                residual = residual.add(&wedge(data.connection.get(i, j), &data.forms[j]));
            }
            if !residual.is_zero() {
                let bound = dw.poly_degree().unwrap_or(0) + 1;
                let in_ideal = in_form_ideal(n, &data.forms, &dw, bound);
                return Err(Error::NotDifferentialIdeal {
                    index: i,
                    residual,
                    in_ideal,
                });
            }
        }
        if k > 0 {
            let defect = matrix_integrability_defect(&data.connection)?;
            if !defect.is_zero() {
                return Err(Error::ConnectionNotFlat { defect });
            }
        }
        Ok(())
    }

    /// `DR(𝔽)` on monomials of weight `≤ weight_cutoff` and tag `≤ tag_cutoff`.
    pub fn mixed_complex(&self, weight_cutoff: usize, tag_cutoff: i64) -> Result<GradedMixedComplex> {
        let t = self.model.tag_assignment()?;
        let exact = Region::new(weight_cutoff.saturating_sub(1), tag_cutoff - t.max_raise);
        Ok(self
            .model
            .build_region(&t, weight_cutoff, tag_cutoff, Filtration::Filtered { exact })?
            .gmc)
    }

    /// Filtered cohomology of the realization `|DR(𝔽)|`.
    pub fn cohomology(&self, cutoffs: &Cutoffs) -> Result<BTreeMap<i64, DegreeCohomology>> {
        self.model.cohomology(cutoffs.region(), PREIMAGE_PADDING)
    }

    /// Smoothness, quasi-smoothness and rigidity.
    pub fn classify(&self, cutoffs: &Cutoffs) -> Classification {
        let n = self.n();
        let c = &self.cotangent;
        let bound = cutoffs.jet_bound;
        let (smooth, smooth_witness) = if c.k == 0 {
            (Verdict::Yes, None)
        } else if c.k > c.m {
            (Verdict::No, Some(vec![Rational::from_integer(0.into()); n]))
        } else {
            minor_verdict(n, &maximal_minors(&c.s, c.k, n), bound)
        };
        let (rigid, rigid_witness) = if self.provenance.has_identity_anchor() || c.m == 0 {
            (Verdict::Yes, None)
        } else if c.m > n {
            (Verdict::No, None)
        } else {
            // surjectivity of 𝒪ⁿ → 𝒪^m given by the anchor
            let transposed: Vec<Vec<MultiPoly>> =
                (0..n).map(|k| (0..c.m).map(|a| c.anchor[a][k].clone()).collect()).collect();
            minor_verdict(n, &maximal_minors(&transposed, c.m, n), bound)
        };
        Classification {
            smooth,
            quasi_smooth: true,
            rigid,
            smooth_witness: smooth_witness.map(|p| p.iter().map(|x| x.to_string()).collect()),
            rigid_witness: rigid_witness.map(|p| p.iter().map(|x| x.to_string()).collect()),
        }
    }

    /// Generators of the singular foliation `ker(Ω¹ → H⁰(𝕃_𝔽))` up to tag `degree_bound`.
    pub fn truncate(&self, degree_bound: i64) -> Result<SingularFoliationGens> {
        let n = self.n();
        let weights = self.weights().to_vec();
        let generators = match self.provenance {
            Provenance::DeRham => vec![],
            Provenance::Punctual => (0..n).map(|k| PolyForm::dx(n, k)).collect(),
            Provenance::Pfaffian | Provenance::Integrable => {
                let forms = self.pfaffian_forms().to_vec();
                minimal_generators(n, &weights, degree_bound, |index| span_of_multiples(&forms, index))
            }
            Provenance::LieAlgebroid => {
                let anchor = self.cotangent.anchor.clone();
                minimal_generators(n, &weights, degree_bound, |index| anchor_kernel(&anchor, index))
            }
        };
        Ok(SingularFoliationGens {
            n,
            weights,
            generators,
            degree_bound,
        })
    }

    /// The ideal of maximal minors of `s` and its local length at the origin.
    pub fn singular_locus(&self, cutoffs: &Cutoffs) -> Result<SingularLocus> {
        if !self.provenance.has_identity_anchor() {
            return Err(Error::Unsupported(format!(
                "singular locus for {:?} foliations",
                self.provenance
            )));
        }
        let n = self.n();
        let c = &self.cotangent;
        let gens = if c.k == 0 {
            vec![MultiPoly::one(n)]
        } else {
            maximal_minors(&c.s, c.k, n)
        };
        let unit_ideal = contains_one(n, &gens, cutoffs.jet_bound);
        let (zero_dimensional, quotient_dim, jet_dims) = match local_length(n, &gens, cutoffs.jet_bound) {
            LocalLength::Finite { quotient, dims } => (true, Some(quotient.dim), dims),
            LocalLength::NoStabilization { dims } => (false, None, dims),
        };
        Ok(SingularLocus {
            ideal_gens: gens,
            zero_dimensional,
            quotient_dim,
            unit_ideal,
            jet_dims,
        })
    }
}

fn check_lie_algebroid(n: usize, rho: &[Vec<MultiPoly>], c: &[Vec<Vec<MultiPoly>>]) -> Result<()> {
    let r = rho.len();
    for i in 0..r {
        for j in i..r {
            for l in 0..r {
                let sum = &c[i][j][l] + &c[j][i][l];
                if !sum.is_zero() {
                    return Err(Error::NotALieAlgebroid {
                        identity: format!("antisymmetry c_{{{i}{j}}}^{l} + c_{{{j}{i}}}^{l} = 0"),
                        defect: vec![sum],
                    });
                }
            }
        }
    }
    // anchor is a bracket homomorphism
    for i in 0..r {
        for j in i + 1..r {
            let defect: Vec<MultiPoly> = (0..n)
                .map(|k| {
                    let mut v = &apply_vector_field(&rho[i], &rho[j][k]) - &apply_vector_field(&rho[j], &rho[i][k]);
                    for l in 0..r {
                        v = &v - &(&c[i][j][l] * &rho[l][k]);
                    }
                    v
                })
                .collect();
            if defect.iter().any(|p| !p.is_zero()) {
                return Err(Error::NotALieAlgebroid {
                    identity: format!("anchor bracket [ρ_{i}, ρ_{j}] = Σ_l c_{{{i}{j}}}^l ρ_l"),
                    defect,
                });
            }
        }
    }
    // Jacobi: Σ_cyc (Σ_l c_ij^l c_lk^m − ρ_k(c_ij^m)) = 0
    for i in 0..r {
        for j in i + 1..r {
            for k in j + 1..r {
                let defect: Vec<MultiPoly> = (0..r)
                    .map(|m| {
                        let mut acc = MultiPoly::zero(n);
                        for (a, b, cc) in [(i, j, k), (j, k, i), (k, i, j)] {
                            for l in 0..r {
                                acc = &acc + &(&c[a][b][l] * &c[l][cc][m]);
                            }
                            acc = &acc - &apply_vector_field(&rho[cc], &c[a][b][m]);
                        }
                        acc
                    })
                    .collect();
                if defect.iter().any(|p| !p.is_zero()) {
                    return Err(Error::NotALieAlgebroid {
                        identity: format!("Jacobi identity for (e_{i}, e_{j}, e_{k})"),
                        defect,
                    });
                }
            }
        }
    }
    Ok(())
}

/// Certifies `target ∈ (forms) ∧ Ω¹` with polynomial multipliers of degree `≤ bound`.
pub fn in_form_ideal(n: usize, forms: &[PolyForm], target: &PolyForm, bound: u32) -> bool {
    if target.is_zero() {
        return true;
    }
    let top = forms.iter().filter_map(PolyForm::poly_degree).max().unwrap_or(0) + bound;
    let top = top.max(target.poly_degree().unwrap_or(0)) as i64;
    let ones = vec![1u32; n];
    let p = target.form_degree();
    // tags count dx with weight one, so a p-form of polynomial degree t has tag t + p
    let index = FormIndex::new(n, p, &ones, 0..=top + p as i64);
    let mut ech = Echelon::new();
    for w in forms {
        for d in 0..=bound {
            for gamma in crate::poly::monomials_of_degree(n, d) {
                let g = MultiPoly::monomial(n, gamma, Rational::from_integer(1.into()));
                for eta in crate::forms::monomial_form_basis(n, p - 1, 0) {
                    let prod = wedge(&w.mul_function(&g), &eta);
                    if let Some(v) = index.vector(&prod) {
                        ech.insert(v);
                    }
                }
            }
        }
    }
    match index.vector(target) {
        Some(v) => ech.contains(&v),
        None => false,
    }
}

/// Yes if the minors generate the unit ideal, no if they all vanish at a
/// test point (returned as witness), else undetermined.
fn minor_verdict(n: usize, minors: &[MultiPoly], bound: u32) -> (Verdict, Option<Vec<Rational>>) {
    for pt in test_points(n) {
        if minors.iter().all(|m| m.eval(&pt).is_zero()) {
            return (Verdict::No, Some(pt));
        }
    }
    if contains_one(n, minors, bound) {
        (Verdict::Yes, None)
    } else {
        (Verdict::Undetermined, None)
    }
}

/// `x^γ w_i` lying entirely in the index, in order of `|γ|`, then `i`.
fn span_of_multiples(forms: &[PolyForm], index: &FormIndex) -> Vec<SparseVec> {
    let n = forms.first().map_or(0, |w| w.num_vars());
    let weights = index.weights().to_vec();
    let top = (0..index.len()).map(|i| index.tag(i)).max().unwrap_or(0);
    let homogeneous = forms.iter().all(|w| w.weighted_range(&weights).is_none_or(|(a, b)| a == b));
    let pad = if homogeneous { 0 } else { PREIMAGE_PADDING as i64 };
    let min_tag = |w: &PolyForm| w.weighted_range(&weights).map_or(i64::MAX, |r| r.0);
    let spread = forms
        .iter()
        .filter_map(|w| w.weighted_range(&weights))
        .map(|(a, b)| b - a)
        .max()
        .unwrap_or(0);
    // candidates may leave the index; keep combinations that stay inside
    let big_top = top + pad + spread;
    let big = FormIndex::new(n, 1, &weights, 0..=big_top);
    let mut vectors = Vec::new();
    for s in 0..=big_top {
        for w in forms {
            let m = min_tag(w);
            if m == i64::MAX || s < m {
                continue;
            }
            if s - m > top + pad {
                continue;
            }
            for gamma in monomials_of_weighted_degree(&weights, s - m) {
                let prod = w.mul_function(&MultiPoly::monomial(n, gamma, Rational::from_integer(1.into())));
                if let Some(v) = big.vector(&prod) {
                    vectors.push(v);
                }
            }
        }
    }
    let inside = index.len();
    if vectors.iter().all(|v| v.keys().all(|&i| i < inside)) {
        return vectors;
    }
    // kernel of the projection onto coordinates outside the index
    let outside: Vec<SparseVec> = vectors
        .iter()
        .map(|v| v.iter().filter(|(i, _)| **i >= inside).map(|(i, c)| (*i - inside, c.clone())).collect())
        .collect();
    let proj = SparseMatrix::from_columns(big.len() - inside, outside);
    let ker = kernel_basis(&proj);
    ker.columns()
        .iter()
        .map(|combo| {
            let mut acc = SparseVec::new();
            for (j, c) in combo {
                crate::linalg::axpy(&mut acc, c, &vectors[*j]);
            }
            acc
        })
        .filter(|v| !v.is_empty())
        .collect()
}

/// Basis of `{η : anchorᵀ η = 0}` inside the index.
fn anchor_kernel(anchor: &[Vec<MultiPoly>], index: &FormIndex) -> Vec<SparseVec> {
    let mut pos: BTreeMap<(usize, Vec<u32>), usize> = BTreeMap::new();
    let mut columns = Vec::new();
    for i in 0..index.len() {
        let eta = index.element(i);
        let mut col = SparseVec::new();
        for (a, row) in anchor.iter().enumerate() {
            let mut val = MultiPoly::zero(eta.num_vars());
            for (k, r) in row.iter().enumerate() {
                val = &val + &(r * &eta.coeff(&[k]));
            }
            for (e, c) in val.terms() {
                let next = pos.len();
                let idx = *pos.entry((a, e.clone())).or_insert(next);
                col.insert(idx, c.clone());
            }
        }
        columns.push(col);
    }
    let m = SparseMatrix::from_columns(pos.len(), columns);
    kernel_basis(&m).columns().to_vec()
}

/// Greedy minimal generators, by increasing tag, of the submodule of `Ω¹`
/// whose tag-`≤ d` piece is spanned by `span_at(index_d)`.
fn minimal_generators(
    n: usize,
    weights: &[u32],
    bound: i64,
    span_at: impl Fn(&FormIndex) -> Vec<SparseVec>,
) -> Vec<PolyForm> {
    let mut gens: Vec<PolyForm> = Vec::new();
    for d in 0..=bound {
        let index = FormIndex::new(n, 1, weights, 0..=d);
        if index.is_empty() {
            continue;
        }
        let mut ech = Echelon::new();
        let insert_multiples = |g: &PolyForm, ech: &mut Echelon| {
            let lo = g.weighted_range(weights).map_or(0, |r| r.0);
            for s in 0..=(d - lo).max(0) {
                for gamma in monomials_of_weighted_degree(weights, s) {
                    let prod = g.mul_function(&MultiPoly::monomial(n, gamma, Rational::from_integer(1.into())));
                    if let Some(v) = index.vector(&prod) {
                        ech.insert(v);
                    }
                }
            }
        };
        for g in &gens {
            insert_multiples(g, &mut ech);
        }
        for v in span_at(&index) {
            if !ech.contains(&v) {
                let g = index.form(&v);
                insert_multiples(&g, &mut ech);
                gens.push(g);
            }
        }
    }
    gens
}

/// Three-valued answer of a bounded certificate search.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Yes,
    No,
    Undetermined,
}

impl Serialize for Verdict {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Verdict::Yes => s.serialize_bool(true),
            Verdict::No => s.serialize_bool(false),
            Verdict::Undetermined => s.serialize_str("undetermined"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Classification {
    pub smooth: Verdict,
    pub quasi_smooth: bool,
    pub rigid: Verdict,
    /// A point where `s` drops rank.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub smooth_witness: Option<Vec<String>>,
    /// A point where the anchor fails to be surjective.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rigid_witness: Option<Vec<String>>,
}

/// Generators of a singular foliation `D ⊂ Ω¹`, complete up to `degree_bound`.
#[derive(Clone, Debug)]
pub struct SingularFoliationGens {
    pub n: usize,
    pub weights: Vec<u32>,
    pub generators: Vec<PolyForm>,
    pub degree_bound: i64,
}

impl SingularFoliationGens {
    /// Basis of the tag-`≤ d` part of the module generated by the generators,
    /// as vectors in `index` (which must contain all 1-forms of tag `≤ d`).
    pub fn span_in(&self, index: &FormIndex) -> Echelon {
        let mut ech = Echelon::new();
        let top = (0..index.len()).map(|i| index.tag(i)).max().unwrap_or(0);
        for g in &self.generators {
            for s in 0..=top {
                for gamma in monomials_of_weighted_degree(&self.weights, s) {
                    let prod = g.mul_function(&MultiPoly::monomial(self.n, gamma, Rational::from_integer(1.into())));
                    if let Some(v) = index.vector(&prod) {
                        ech.insert(v);
                    }
                }
            }
        }
        ech
    }

    pub fn is_zero(&self) -> bool {
        self.generators.is_empty()
    }
}

/// Maximal minors of `s` and their local quotient at the origin.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SingularLocus {
    pub ideal_gens: Vec<MultiPoly>,
    pub zero_dimensional: bool,
    pub quotient_dim: Option<usize>,
    /// `1` lies in the ideal (certified): the locus is empty.
    pub unit_ideal: bool,
    /// `dim ℚ[x]/(gens + m^{j+1})` for `j = 0, 1, …`.
    pub jet_dims: Vec<usize>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x(n: usize, i: usize) -> MultiPoly {
        MultiPoly::var(n, i)
    }

    fn sl2() -> FoliationPresentation {
        // [e0, e1] = 2 e1, [e0, e2] = −2 e2, [e1, e2] = e0
        let z = || MultiPoly::zero(0);
        let k = |v: i64| MultiPoly::constant(0, Rational::from_integer(v.into()));
        let mut c = vec![vec![vec![z(), z(), z()]; 3]; 3];
        c[0][1][1] = k(2);
        c[1][0][1] = k(-2);
        c[0][2][2] = k(-2);
        c[2][0][2] = k(2);
        c[1][2][0] = k(1);
        c[2][1][0] = k(-1);
        FoliationPresentation::lie_algebroid(0, vec![vec![]; 3], c).unwrap()
    }

    fn dims(r: &BTreeMap<i64, DegreeCohomology>) -> Vec<usize> {
        r.values().map(|d| d.dim).collect()
    }

    #[test]
    fn de_rham_examples() {
        let c = Cutoffs::default();
        assert_eq!(dims(&FoliationPresentation::de_rham(1).cohomology(&c).unwrap()), vec![1, 0]);
        assert_eq!(dims(&FoliationPresentation::de_rham(0).cohomology(&c).unwrap()), vec![1]);
        let g = FoliationPresentation::de_rham(2).mixed_complex(3, 4).unwrap();
        assert!(g.validate().is_ok());
    }

    #[test]
    fn chevalley_eilenberg_sl2() {
        let f = sl2();
        assert!(f.model().square_defects().is_empty());
        let r = f.cohomology(&Cutoffs::default()).unwrap();
        assert_eq!(dims(&r), vec![1, 0, 0, 1]);
        let cl = f.classify(&Cutoffs::default());
        assert_eq!((cl.smooth, cl.rigid), (Verdict::Yes, Verdict::No));
    }

    #[test]
    fn log_algebroid() {
        let zero = MultiPoly::zero(1);
        let f = FoliationPresentation::lie_algebroid(1, vec![vec![x(1, 0)]], vec![vec![vec![zero]]]).unwrap();
        let r = f.cohomology(&Cutoffs::default()).unwrap();
        assert_eq!(dims(&r), vec![1, 1]);
        assert!(r.values().all(|d| d.stable));
    }

    #[test]
    fn broken_jacobi_is_rejected() {
        let k = |v: i64| MultiPoly::constant(0, Rational::from_integer(v.into()));
        let z = || MultiPoly::zero(0);
        let mut c = vec![vec![vec![z(), z(), z()]; 3]; 3];
        c[0][1][2] = k(1);
        c[1][0][2] = k(-1);
        c[1][2][0] = k(1);
        c[2][1][0] = k(-1);
        c[0][2][0] = k(1);
        c[2][0][0] = k(-1);
        let err = FoliationPresentation::lie_algebroid(0, vec![vec![]; 3], c).unwrap_err();
        assert!(matches!(err, Error::NotALieAlgebroid { .. }), "{err:?}");
    }

    #[test]
    fn pfaffian_examples() {
        let n = 3;
        let contact = PolyForm::dx(n, 0).sub(&PolyForm::term(vec![2], x(n, 1)));
        let w = FormMatrix::zero(n, 1, 1, 1);
        let err = FoliationPresentation::pfaffian(n, vec![contact], w).unwrap_err();
        match err {
            Error::NotDifferentialIdeal { residual, in_ideal, .. } => {
                assert!(!residual.is_zero());
                assert!(!in_ideal);
            }
            other => panic!("{other:?}"),
        }
        let xy = &x(2, 0) * &x(2, 1);
        let ok = FoliationPresentation::pfaffian(2, vec![PolyForm::exact(&xy)], FormMatrix::zero(2, 1, 1, 1));
        assert!(ok.is_ok());
        let rot = PolyForm::term(vec![0], x(2, 1)).sub(&PolyForm::term(vec![1], x(2, 0)));
        let err = FoliationPresentation::pfaffian(2, vec![rot], FormMatrix::zero(2, 1, 1, 1)).unwrap_err();
        assert!(matches!(err, Error::NotDifferentialIdeal { in_ideal: false, .. }));
    }

    #[test]
    fn integrable_examples() {
        let c = Cutoffs::default();
        let f = FoliationPresentation::integrable(1, vec![x(1, 0)]).unwrap();
        let cl = f.classify(&c);
        assert_eq!((cl.smooth, cl.rigid), (Verdict::Yes, Verdict::Yes));

        let q = &(&x(2, 0) * &x(2, 0)) + &(&x(2, 1) * &x(2, 1));
        let f = FoliationPresentation::integrable(2, vec![q]).unwrap();
        let cl = f.classify(&c);
        assert_eq!((cl.smooth, cl.quasi_smooth, cl.rigid), (Verdict::No, true, Verdict::Yes));
        let sl = f.singular_locus(&c).unwrap();
        assert_eq!(sl.ideal_gens, vec![x(2, 0).scale(&Rational::from_integer(2.into())), x(2, 1).scale(&Rational::from_integer(2.into()))]);
        assert_eq!((sl.zero_dimensional, sl.quotient_dim), (true, Some(1)));
        assert!(f.mixed_complex(3, 5).unwrap().validate().is_ok());

        let cusp = &(&x(2, 0) * &(&x(2, 0) * &x(2, 0))) - &(&x(2, 1) * &x(2, 1));
        let sl = FoliationPresentation::integrable(2, vec![cusp]).unwrap().singular_locus(&c).unwrap();
        assert_eq!(sl.quotient_dim, Some(2));

        let x2y = &(&x(2, 0) * &x(2, 0)) * &x(2, 1);
        let sl = FoliationPresentation::integrable(2, vec![x2y]).unwrap().singular_locus(&c).unwrap();
        assert!(!sl.zero_dimensional);
    }

    #[test]
    fn truncation_examples() {
        assert!(FoliationPresentation::de_rham(2).truncate(4).unwrap().is_zero());
        let p = FoliationPresentation::punctual(2).truncate(4).unwrap();
        assert_eq!(p.generators, vec![PolyForm::dx(2, 0), PolyForm::dx(2, 1)]);
        let q = &(&x(2, 0) * &x(2, 0)) + &(&x(2, 1) * &x(2, 1));
        let t = FoliationPresentation::integrable(2, vec![q.clone()]).unwrap().truncate(5).unwrap();
        assert_eq!(t.generators, vec![PolyForm::exact(&q)]);
        // x∂_x on 𝔸¹: the kernel of dx ↦ x θ is zero
        let zero = MultiPoly::zero(1);
        let f = FoliationPresentation::lie_algebroid(1, vec![vec![x(1, 0)]], vec![vec![vec![zero]]]).unwrap();
        assert!(f.truncate(4).unwrap().is_zero());
    }

    #[test]
    fn pullback_examples() {
        let du = FoliationPresentation::pfaffian(1, vec![PolyForm::dx(1, 0)], FormMatrix::zero(1, 1, 1, 1)).unwrap();
        let q = &(&x(2, 0) * &x(2, 0)) + &(&x(2, 1) * &x(2, 1));
        let pulled = du.pullback_pfaffian(2, &[q.clone()]).unwrap();
        assert_eq!(pulled.pfaffian_forms(), &[PolyForm::exact(&q)]);
        let f = FoliationPresentation::integrable(1, vec![&x(1, 0) * &x(1, 0)]).unwrap();
        let pulled = f.pullback_pfaffian(2, &[q.clone()]).unwrap();
        let direct = FoliationPresentation::integrable(2, vec![&q * &q]).unwrap();
        assert_eq!(pulled.pfaffian_forms(), direct.pfaffian_forms());
        assert_eq!(pulled.provenance(), Provenance::Integrable);
    }
}
