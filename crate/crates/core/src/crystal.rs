//! Crystals: free modules `E(0) = 𝒪^r` with a flat connection valued in the
//! cotangent complex of a foliation, their foliated cohomology, the naive de
//! Rham complex of the truncation, and the comparison between the two.
//!
//! The connection is given by one `r × r` matrix `N_a` per `W`-letter `θ_a`:
//! `ε(e_f) = Σ_g e_g Σ_a (N_a)_{gf} θ_a`. Flatness is `D²(e_f) = 0`, which for
//! the final foliation reads `∂_i A_j − ∂_j A_i + [A_i, A_j] = 0`.

use std::collections::BTreeMap;

use serde::{Serialize, Serializer};

use crate::algebra::{Generator, MixedModel};
use crate::error::{Error, Result};
use crate::foliation::{in_form_ideal, FoliationPresentation, Provenance, SingularFoliationGens};
use crate::forms::{de_rham_d, wedge, FormIndex, PolyForm};
use crate::linalg::{kernel_basis, Echelon, FiniteCochainComplex, SparseMatrix, SparseVec};
use crate::mixed::{DegreeCohomology, Filtration, RealizedComplex, Region};
use crate::poly::MultiPoly;
use crate::{Cutoffs, PREIMAGE_PADDING};

/// A flat connection on `𝒪^r` along a foliation.
#[derive(Clone, Debug)]
pub struct Crystal {
    foliation: FoliationPresentation,
    rank: usize,
    /// `connection[a][g][f]`: coefficient of `e_g θ_a` in `ε(e_f)`.
    connection: Vec<Vec<Vec<MultiPoly>>>,
    model: MixedModel,
}

fn zero_matrix(n: usize, r: usize) -> Vec<Vec<MultiPoly>> {
    vec![vec![MultiPoly::zero(n); r]; r]
}

impl Crystal {
    /// Crystal with connection matrices `N_a`, one per letter; checks flatness.
    pub fn new(foliation: FoliationPresentation, rank: usize, connection: Vec<Vec<Vec<MultiPoly>>>) -> Result<Self> {
        let n = foliation.n();
        let m = foliation.model().num_letters;
        if connection.len() != m
            || connection
                .iter()
                .any(|a| a.len() != rank || a.iter().any(|row| row.len() != rank || row.iter().any(|p| p.num_vars() != n)))
        {
            return Err(Error::ShapeMismatch(format!(
                "a rank-{rank} crystal needs {m} matrices of size {rank}x{rank} in {n} variables"
            )));
        }
        if rank == 0 {
            return Err(Error::InvalidInput("crystal rank must be positive".into()));
        }
        let mut model = foliation.model().clone();
        model.rank = rank;
        model.frame_eps = (0..rank)
            .map(|f| (0..rank).map(|g| (0..m).map(|a| connection[a][g][f].clone()).collect()).collect())
            .collect();
        let crystal = Crystal {
            foliation,
            rank,
            connection,
            model,
        };
        if let Some((pair, defect)) = crystal.curvature() {
            return Err(Error::NotFlat {
                pair: Some(pair),
                defect,
            });
        }
        Ok(crystal)
    }

    /// The unit crystal `𝒪` with `ε(e) = 0`.
    pub fn trivial(foliation: FoliationPresentation) -> Self {
        let n = foliation.n();
        let m = foliation.model().num_letters;
        Crystal::new(foliation, 1, vec![zero_matrix(n, 1); m]).expect("the unit crystal is flat")
    }

    pub fn foliation(&self) -> &FoliationPresentation {
        &self.foliation
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn connection(&self) -> &[Vec<Vec<MultiPoly>>] {
        &self.connection
    }

    pub fn model(&self) -> &MixedModel {
        &self.model
    }

    /// First letter pair `(i, j)` with nonzero curvature, and the curvature
    /// matrix there: entry `[g][f]` is the `e_g θ_i θ_j` coefficient of `D²(e_f)`.
    pub fn curvature(&self) -> Option<((usize, usize), Vec<Vec<MultiPoly>>)> {
        let n = self.foliation.n();
        let mut by_pair: BTreeMap<(usize, usize), Vec<Vec<MultiPoly>>> = BTreeMap::new();
        for f in 0..self.rank {
            let key = self.model.generator_key(&Generator::Frame(f));
            let dd = self.model.apply(&self.model.total(&key));
            for (k, c) in dd {
                let letters = k.letter_list();
                let pair = match letters.as_slice() {
                    [i, j] => (*i, *j),
                    _ => (usize::MAX, usize::MAX),
                };
                let entry = by_pair.entry(pair).or_insert_with(|| zero_matrix(n, self.rank));
                entry[k.frame][f].add_term(k.beta.clone(), c);
            }
        }
        by_pair.into_iter().find(|(_, m)| m.iter().flatten().any(|p| !p.is_zero()))
    }

    /// Foliated de Rham cohomology `ℍ_DR(𝔽, E)` at the given cutoffs.
    pub fn foliated_cohomology(&self, cutoffs: &Cutoffs) -> Result<BTreeMap<i64, DegreeCohomology>> {
        self.model.cohomology(cutoffs.region(), PREIMAGE_PADDING)
    }

    /// The largest tag increase of `N ∧ -` on forms.
    fn connection_raise(&self) -> Option<(i64, i64)> {
        let w = self.foliation.weights();
        let letter_weight = |a: usize| -> i64 { w.get(a).map_or(0, |x| *x as i64) };
        self.connection
            .iter()
            .enumerate()
            .flat_map(|(a, mat)| {
                mat.iter()
                    .flatten()
                    .filter_map(move |p| p.weighted_range(w).map(|(lo, hi)| (lo + letter_weight(a), hi + letter_weight(a))))
            })
            .reduce(|x, y| (x.0.min(y.0), x.1.max(y.1)))
    }

    /// Truncation to a module with flat connection along the singular foliation.
    pub fn truncate(&self, degree_bound: i64) -> Result<CohDObject> {
        let f = &self.foliation;
        let n = f.n();
        let identity_anchor = f.provenance().has_identity_anchor()
            || (f.provenance() == Provenance::LieAlgebroid && f.cotangent().anchor == identity(n));
        let gens = f.truncate(degree_bound)?;
        let connection: Vec<Vec<PolyForm>> = if f.provenance() == Provenance::Punctual {
            vec![vec![PolyForm::zero(n, 1); self.rank]; self.rank]
        } else if identity_anchor {
            (0..self.rank)
                .map(|g| {
                    (0..self.rank)
                        .map(|h| PolyForm::one_form(&(0..n).map(|a| self.connection[a][g][h].clone()).collect::<Vec<_>>()))
                        .collect()
                })
                .collect()
        } else {
            return Err(Error::Unsupported(
                "truncation of crystals along an algebroid whose anchor is not the identity".into(),
            ));
        };
        let mut obj = CohDObject {
            gens,
            rank: self.rank,
            connection,
            flat: true,
        };
        obj.flat = obj.curvature_in_ideal(degree_bound.max(0) as u32);
        Ok(obj)
    }

    /// Tag bound needed by [`naive_de_rham_cohomology`] at these cutoffs.
    pub fn naive_bound(&self, cutoffs: &Cutoffs) -> i64 {
        self.naive_plan(cutoffs).top()
    }

    fn naive_plan(&self, cutoffs: &Cutoffs) -> NaivePlan {
        let homogeneous = self
            .foliation
            .pfaffian_forms()
            .iter()
            .all(|w| w.weighted_range(self.foliation.weights()).is_none_or(|(a, b)| a == b));
        NaivePlan::choose(self.connection_raise().map(|r| r.1), homogeneous, cutoffs.poly_degree)
    }

    /// Foliated and naive cohomology side by side, with the degrees in which
    /// equality is guaranteed by the codimension of the singular locus.
    pub fn comparison_report(&self, cutoffs: &Cutoffs) -> Result<ComparisonReport> {
        let codimension = self.codimension_evidence(cutoffs)?;
        let n = self.foliation.n();
        let truncated = self.truncate(self.naive_bound(cutoffs))?;
        let naive = naive_complex(&truncated, cutoffs, self.naive_plan(cutoffs))?;
        let naive_report = naive.report(cutoffs)?;
        let foliated = self.foliated_cohomology(cutoffs)?;
        let surjective = self.surjectivity(cutoffs, &naive)?;
        let guaranteed = |i: i64| match codimension {
            Some(Codimension::Infinite) => true,
            Some(Codimension::Finite(d)) => i < d as i64 - 1,
            None => false,
        };
        let mut degrees = Vec::new();
        for q in 0..=n as i64 {
            let fol = foliated.get(&q).cloned().unwrap_or(DegreeCohomology {
                dim: 0,
                stable: true,
                graded: None,
            });
            let nai = naive_report.get(&q).cloned().unwrap_or(DegreeCohomology {
                dim: 0,
                stable: true,
                graded: None,
            });
            let slices_equal = match (&fol.graded, &nai.graded) {
                (Some(a), Some(b)) => {
                    let fa: BTreeMap<i64, usize> = a.iter().map(|s| (s.tag, s.dim)).collect();
                    let fb: BTreeMap<i64, usize> = b.iter().map(|s| (s.tag, s.dim)).collect();
                    fa.keys()
                        .chain(fb.keys())
                        .all(|t| fa.get(t).copied().unwrap_or(0) == fb.get(t).copied().unwrap_or(0))
                }
                _ => true,
            };
            degrees.push(ComparisonDegree {
                degree: q,
                foliated: fol.clone(),
                naive: nai.clone(),
                equal: fol.dim == nai.dim && slices_equal,
                surjective: surjective.get(&q).copied(),
                guaranteed: guaranteed(q),
            });
        }
        let annotation = match codimension {
            Some(Codimension::Infinite) => "guaranteed in all degrees".to_string(),
            Some(Codimension::Finite(d)) => format!("guaranteed for i<{}", d as i64 - 1),
            None => "no codimension evidence".to_string(),
        };
        Ok(ComparisonReport {
            codimension,
            annotation,
            degrees,
        })
    }

    /// Codimension of the singular locus when it can be certified.
    pub fn codimension_evidence(&self, cutoffs: &Cutoffs) -> Result<Option<Codimension>> {
        let f = &self.foliation;
        if !f.provenance().has_identity_anchor() {
            let smooth = f.classify(cutoffs).smooth == crate::foliation::Verdict::Yes;
            return Ok(smooth.then_some(Codimension::Infinite));
        }
        let locus = f.singular_locus(cutoffs)?;
        Ok(if locus.unit_ideal || locus.quotient_dim == Some(0) {
            Some(Codimension::Infinite)
        } else if locus.zero_dimensional {
            Some(Codimension::Finite(f.n()))
        } else {
            None
        })
    }

    /// Per degree, whether weight-0 parts of foliated cocycles span the
    /// naive cohomology on every slice up to the cutoff (graded case only).
    fn surjectivity(&self, cutoffs: &Cutoffs, naive: &NaiveComplex) -> Result<BTreeMap<i64, bool>> {
        let mut out = BTreeMap::new();
        let t = self.model.tag_assignment()?;
        if !t.homogeneous || !matches!(naive.plan, NaivePlan::Graded { .. }) {
            return Ok(out);
        }
        let built = self.model.build_for(cutoffs.region(), PREIMAGE_PADDING)?;
        let n = self.foliation.n();
        let r = self.rank;
        for q in 0..=n {
            let realized = built.gmc.realize(q as i64..=q as i64 + 1)?;
            let keys = built.realized_keys(q);
            let labels = realized.labels(q as i64).to_vec();
            let d = realized.underlying().differential(q as i64);
            let mut all = true;
            for tag in 0..=cutoffs.poly_degree {
                let cols: Vec<usize> = (0..labels.len())
                    .filter(|&j| labels[j].1 == tag && labels[j].0 <= cutoffs.weight)
                    .collect();
                let cycles = kernel_basis(&d.select_columns(&cols));
                let slice = naive.complex.tag_slice(tag);
                let naive_dim = slice.filtered_dim(q as i64, Region::ALL, Region::ALL);
                if naive_dim == 0 {
                    continue;
                }
                let positions: Vec<usize> = (0..naive.complex.labels(q as i64).len())
                    .filter(|&j| naive.complex.labels(q as i64)[j].1 == tag)
                    .collect();
                let local: BTreeMap<usize, usize> = positions.iter().enumerate().map(|(i, &p)| (p, i)).collect();
                let mut ech = Echelon::new();
                for v in slice.relations(q as i64) {
                    ech.insert(v.clone());
                }
                if q > 0 {
                    let din = slice.underlying().differential(q as i64 - 1);
                    for c in din.columns() {
                        ech.insert(c.clone());
                    }
                }
                let base = ech.rank();
                for z in cycles.columns() {
                    let mut v = SparseVec::new();
                    for (j, c) in z {
                        let key = keys[cols[*j]];
                        if key.alpha.iter().any(|a| *a > 0) {
                            continue;
                        }
                        let letters = key.letter_list();
                        let pos = naive.index(q).position(&letters, &key.beta).map(|i| i * r + key.frame);
                        if let Some(p) = pos.and_then(|p| local.get(&p)) {
                            v.insert(*p, c.clone());
                        }
                    }
                    ech.insert(v);
                }
                if ech.rank() - base < naive_dim {
                    all = false;
                }
            }
            out.insert(q as i64, all);
        }
        Ok(out)
    }
}

fn identity(n: usize) -> Vec<Vec<MultiPoly>> {
    (0..n)
        .map(|a| (0..n).map(|k| if a == k { MultiPoly::one(n) } else { MultiPoly::zero(n) }).collect())
        .collect()
}

/// Crystal over the final foliation of 𝔸ⁿ with `∇ = d + Σ_i A_i dx_i`.
pub fn d_module_crystal(n: usize, matrices: Vec<Vec<Vec<MultiPoly>>>) -> Result<Crystal> {
    let rank = matrices.first().map_or(0, Vec::len);
    Crystal::new(FoliationPresentation::de_rham(n), rank, matrices)
}

/// Representation of a Lie algebroid: `ρ_a` acts on `𝒪^r` through `matrices[a]`.
pub fn lie_rep_crystal(foliation: FoliationPresentation, matrices: Vec<Vec<Vec<MultiPoly>>>) -> Result<Crystal> {
    if foliation.provenance() != Provenance::LieAlgebroid {
        return Err(Error::Unsupported("representations need a Lie algebroid foliation".into()));
    }
    let rank = matrices.first().map_or(0, Vec::len);
    Crystal::new(foliation, rank, matrices)
}

/// Whether a representation of a Lie algebra on `ℚ^r` is nilpotent, i.e. the
/// chain `V ⊃ ρ(𝔤)V ⊃ ρ(𝔤)²V ⊃ …` reaches zero. The representation is
/// checked for flatness first.
pub fn nilpotency_check_point(structure: Vec<Vec<Vec<MultiPoly>>>, rho: Vec<Vec<Vec<MultiPoly>>>) -> Result<bool> {
    let r = structure.len();
    let foliation = FoliationPresentation::lie_algebroid(0, vec![vec![]; r], structure)?;
    let crystal = lie_rep_crystal(foliation, rho)?;
    let dim = crystal.rank();
    let mats: Vec<SparseMatrix> = crystal
        .connection()
        .iter()
        .map(|m| {
            let cols = (0..dim)
                .map(|f| (0..dim).filter_map(|g| {
                    let c = m[g][f].coeff(&[]);
                    (!num_traits::Zero::is_zero(&c)).then_some((g, c))
                }).collect())
                .collect();
            SparseMatrix::from_columns(dim, cols)
        })
        .collect();
    let mut current: Vec<SparseVec> = (0..dim)
        .map(|i| std::iter::once((i, crate::linalg::int(1))).collect())
        .collect();
    for _ in 0..=dim {
        if current.is_empty() {
            return Ok(true);
        }
        let mut next = Echelon::new();
        for m in &mats {
            for v in &current {
                next.insert(m.apply(v));
            }
        }
        current = next.into_vectors();
    }
    Ok(current.is_empty())
}

/// A module `𝒪^r` with a connection along the singular foliation `D`,
/// modulo `D`.
#[derive(Clone, Debug)]
pub struct CohDObject {
    pub gens: SingularFoliationGens,
    pub rank: usize,
    /// `connection[g][f]`: 1-form coefficient of `e_g` in `∇̄ e_f`.
    pub connection: Vec<Vec<PolyForm>>,
    /// `∇̄² ∈ ⟨D⟩` verified with bounded multipliers.
    pub flat: bool,
}

impl CohDObject {
    fn curvature_in_ideal(&self, bound: u32) -> bool {
        let n = self.gens.n;
        for f in 0..self.rank {
            for g in 0..self.rank {
                let mut c = de_rham_d(&self.connection[g][f]);
                for h in 0..self.rank {
                    c = c.add(&wedge(&self.connection[g][h], &self.connection[h][f]));
                }
                if !c.is_zero() && (self.gens.generators.is_empty() || !in_form_ideal(n, &self.gens.generators, &c, bound)) {
                    return false;
                }
            }
        }
        true
    }
}

#[derive(Clone, Copy, Debug)]
enum NaivePlan {
    Graded { top: i64 },
    Filtered { top: i64, exact_tag: i64 },
}

impl NaivePlan {
    /// Graded when `∇̄ = d` and `D` has homogeneous generators; otherwise
    /// padded by the largest tag of a connection entry.
    fn choose(connection_top: Option<i64>, homogeneous: bool, degree: i64) -> Self {
        match connection_top {
            None if homogeneous => NaivePlan::Graded { top: degree + 1 },
            top => {
                let exact_tag = degree + 1 + PREIMAGE_PADDING as i64;
                NaivePlan::Filtered {
                    top: exact_tag + top.unwrap_or(0).max(0),
                    exact_tag,
                }
            }
        }
    }

    fn top(&self) -> i64 {
        match *self {
            NaivePlan::Graded { top } | NaivePlan::Filtered { top, .. } => top,
        }
    }
}

struct NaiveComplex {
    complex: RealizedComplex,
    indices: Vec<FormIndex>,
    plan: NaivePlan,
}

impl NaiveComplex {
    fn index(&self, q: usize) -> &FormIndex {
        &self.indices[q]
    }

    fn report(&self, cutoffs: &Cutoffs) -> Result<BTreeMap<i64, DegreeCohomology>> {
        let cutoff = Region::new(cutoffs.weight, cutoffs.poly_degree);
        let filtration = match self.plan {
            NaivePlan::Graded { top } => Filtration::Graded { tag_bound: top },
            NaivePlan::Filtered { exact_tag, .. } => Filtration::Filtered {
                exact: Region::new(cutoffs.weight + 1, exact_tag),
            },
        };
        self.complex
            .cohomology_report(self.complex.degree_window(), cutoff, filtration)
    }
}

fn naive_complex(obj: &CohDObject, cutoffs: &Cutoffs, plan: NaivePlan) -> Result<NaiveComplex> {
    let top = plan.top();
    if obj.gens.degree_bound < top {
        return Err(Error::CutoffOutOfRange {
            weight: cutoffs.weight,
            degree: cutoffs.poly_degree,
        });
    }
    let n = obj.gens.n;
    let r = obj.rank;
    let weights = &obj.gens.weights;
    let max_q = n;
    let indices: Vec<FormIndex> = (0..=max_q).map(|q| FormIndex::new(n, q, weights, 0..=top)).collect();
    let dims: Vec<usize> = indices.iter().map(|ix| ix.len() * r).collect();
    let mut diffs = Vec::new();
    for q in 0..max_q {
        let mut cols = Vec::new();
        for i in 0..indices[q].len() {
            let w = indices[q].element(i);
            let dw = de_rham_d(&w);
            for f in 0..r {
                let mut col = SparseVec::new();
                for (j, c) in indices[q + 1].vector_truncated(&dw) {
                    col.insert(j * r + f, c);
                }
                for g in 0..r {
                    let nw = wedge(&obj.connection[g][f], &w);
                    for (j, c) in indices[q + 1].vector_truncated(&nw) {
                        crate::linalg::axpy(&mut col, &c, &std::iter::once((j * r + g, crate::linalg::int(1))).collect());
                    }
                }
                cols.push(col);
            }
        }
        diffs.push(SparseMatrix::from_columns(dims[q + 1], cols));
    }
    let labels: Vec<Vec<(usize, i64)>> = indices
        .iter()
        .map(|ix| (0..ix.len()).flat_map(|i| std::iter::repeat_n((0, ix.tag(i)), r)).collect())
        .collect();
    let relations: Vec<Vec<SparseVec>> = (0..=max_q)
        .map(|q| {
            if q == 0 {
                return vec![];
            }
            let mut ech = Echelon::new();
            let mut sources: Vec<PolyForm> = obj.gens.generators.clone();
            sources.extend(obj.gens.generators.iter().map(de_rham_d).filter(|w| !w.is_zero()));
            for g in &sources {
                let p = g.form_degree();
                if p > q {
                    continue;
                }
                let lo = g.weighted_range(weights).map_or(0, |x| x.0);
                let etas = FormIndex::new(n, q - p, weights, 0..=(top - lo).max(0));
                for eta_i in 0..etas.len() {
                    let eta = etas.element(eta_i);
                    let prod = wedge(g, &eta);
                    if let Some(v) = indices[q].vector(&prod) {
                        for f in 0..r {
                            ech.insert(v.iter().map(|(j, c)| (j * r + f, c.clone())).collect());
                        }
                    }
                }
            }
            ech.into_vectors()
        })
        .collect();
    let underlying = FiniteCochainComplex::with_shapes(0, dims, diffs)?;
    let complex = RealizedComplex::new(underlying, labels, Some(relations))?;
    Ok(NaiveComplex {
        complex,
        indices,
        plan,
    })
}

/// Cohomology of `E ⊗ Ω*/⟨D⟩` with the induced connection.
pub fn naive_de_rham_cohomology(obj: &CohDObject, cutoffs: &Cutoffs) -> Result<BTreeMap<i64, DegreeCohomology>> {
    let raise = obj
        .connection
        .iter()
        .flatten()
        .filter_map(|w| w.weighted_range(&obj.gens.weights))
        .map(|r| r.1)
        .max();
    let homogeneous = obj
        .gens
        .generators
        .iter()
        .all(|w| w.weighted_range(&obj.gens.weights).is_none_or(|(a, b)| a == b));
    let plan = NaivePlan::choose(raise, homogeneous, cutoffs.poly_degree);
    naive_complex(obj, cutoffs, plan)?.report(cutoffs)
}

/// Codimension of the singular locus; smooth foliations count as infinite.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Codimension {
    Infinite,
    Finite(usize),
}

impl Serialize for Codimension {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Codimension::Infinite => s.serialize_str("infinite"),
            Codimension::Finite(d) => s.serialize_u64(*d as u64),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ComparisonDegree {
    pub degree: i64,
    pub foliated: DegreeCohomology,
    pub naive: DegreeCohomology,
    pub equal: bool,
    /// Weight-0 parts of foliated cocycles span the naive cohomology.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub surjective: Option<bool>,
    /// Equality holds for this degree whenever the codimension bound applies.
    pub guaranteed: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ComparisonReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub codimension: Option<Codimension>,
    pub annotation: String,
    pub degrees: Vec<ComparisonDegree>,
}
