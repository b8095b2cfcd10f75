//! Flat functions along the fibers of a single function `f : 𝔸ⁿ → 𝔸¹`.
//!
//! The realization of `DR(𝔸ⁿ/𝔸¹)` is the twisted de Rham complex: forms
//! `u^k ω` with `u` of weight one and degree zero, and differential
//! `u^k ω ↦ k u^{k−1} df ∧ ω + u^k dω`. The weight-`p` part under `df ∧` alone
//! is the Koszul stage `𝒪 → Ω¹ → … → Ω^p`.

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use crate::algebra::Key;
use crate::crystal::{naive_de_rham_cohomology, Crystal};
use crate::error::{Error, Result};
use crate::foliation::FoliationPresentation;
use crate::forms::{wedge, FormIndex, PolyForm};
use crate::ideal::{local_length, LocalLength};
use crate::linalg::{rank_of, FiniteCochainComplex, SparseMatrix, SparseVec};
use crate::mixed::{DegreeCohomology, Filtration, RealizedComplex, Region};
use crate::poly::{Exponents, MultiPoly};
use crate::{Cutoffs, PREIMAGE_PADDING};

/// The local Jacobian ring `ℚ[x]/(∂_1 f, …, ∂_n f)` at the origin.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct JacobianData {
    /// `None` when the jet dimensions did not stabilize by `jet_bound`.
    pub milnor_number: Option<usize>,
    pub monomial_basis: Vec<Exponents>,
    pub stabilized_at: Option<u32>,
    pub jet_dims: Vec<usize>,
    pub jet_bound: u32,
}

impl JacobianData {
    pub fn is_isolated(&self) -> bool {
        self.milnor_number.is_some()
    }

    /// The Milnor number, or [`Error::NotIsolated`] naming the jet bound.
    pub fn require_isolated(&self) -> Result<usize> {
        self.milnor_number.ok_or(Error::NotIsolated(self.jet_bound as usize))
    }
}

/// Jacobian ring by jets of increasing order up to `jet_bound`.
pub fn jacobian_ring(f: &MultiPoly, jet_bound: u32) -> JacobianData {
    let n = f.num_vars();
    match local_length(n, &f.gradient(), jet_bound) {
        LocalLength::Finite { quotient, dims } => JacobianData {
            milnor_number: Some(quotient.dim),
            monomial_basis: quotient.standard_monomials,
            stabilized_at: Some(quotient.jet),
            jet_dims: dims,
            jet_bound,
        },
        LocalLength::NoStabilization { dims } => JacobianData {
            milnor_number: None,
            monomial_basis: vec![],
            stabilized_at: None,
            jet_dims: dims,
            jet_bound,
        },
    }
}

/// A function together with cutoffs and, optionally, weights for which it is
/// weighted-homogeneous.
#[derive(Clone, Debug)]
pub struct TwistedDeRhamSetup {
    pub n: usize,
    pub f: MultiPoly,
    pub cutoffs: Cutoffs,
    pub weights: Option<Vec<u32>>,
}

impl TwistedDeRhamSetup {
    pub fn new(f: MultiPoly, cutoffs: Cutoffs, weights: Option<Vec<u32>>) -> Result<Self> {
        let n = f.num_vars();
        if let Some(w) = &weights {
            if w.len() != n || w.contains(&0) {
                return Err(Error::InvalidInput(format!("need {n} positive weights, got {w:?}")));
            }
            if f.weighted_range(w).is_some_and(|(a, b)| a != b) {
                return Err(Error::InvalidInput(format!("f is not weighted-homogeneous for weights {w:?}")));
            }
        }
        Ok(TwistedDeRhamSetup { n, f, cutoffs, weights })
    }

    fn weight_vector(&self) -> Vec<u32> {
        self.weights.clone().unwrap_or_else(|| vec![1; self.n])
    }

    /// The foliation by the fibers of `f`.
    pub fn foliation(&self) -> Result<FoliationPresentation> {
        let fol = FoliationPresentation::integrable(self.n, vec![self.f.clone()])?;
        match &self.weights {
            Some(w) => fol.with_weights(w.clone()),
            None => Ok(fol),
        }
    }

    /// Cohomology of `𝒪 → Ω¹ → … → Ω^p` with differential `df ∧`.
    ///
    /// Tags are shifted by `q · deg df` in degree `q` so that `df ∧` preserves
    /// them when `f` is weighted-homogeneous.
    pub fn koszul_stage_cohomology(&self, p: usize) -> Result<BTreeMap<i64, DegreeCohomology>> {
        if p > self.n {
            return Err(Error::InvalidInput(format!("Koszul stage {p} exceeds dimension {}", self.n)));
        }
        let w = self.weight_vector();
        let df = PolyForm::exact(&self.f);
        let (lo, hi) = df.weighted_range(&w).unwrap_or((0, 0));
        let d = self.cutoffs.poly_degree;
        let (top, filtration) = if lo == hi {
            (d + 1, Filtration::Graded { tag_bound: d + 1 })
        } else {
            let exact_tag = d + 1 + PREIMAGE_PADDING as i64;
            (
                exact_tag + (hi - lo),
                Filtration::Filtered {
                    exact: Region::new(self.cutoffs.weight + 1, exact_tag),
                },
            )
        };
        let indices: Vec<FormIndex> = (0..=p)
            .map(|q| FormIndex::new(self.n, q, &w, 0..=top + q as i64 * lo))
            .collect();
        let mut diffs = Vec::new();
        for q in 0..p {
            let cols = (0..indices[q].len())
                .map(|i| indices[q + 1].vector_truncated(&wedge(&df, &indices[q].element(i))))
                .collect();
            diffs.push(SparseMatrix::from_columns(indices[q + 1].len(), cols));
        }
        let labels = indices
            .iter()
            .enumerate()
            .map(|(q, ix)| (0..ix.len()).map(|i| (0, ix.tag(i) - q as i64 * lo)).collect())
            .collect();
        let dims = indices.iter().map(FormIndex::len).collect();
        let complex = RealizedComplex::new(FiniteCochainComplex::with_shapes(0, dims, diffs)?, labels, None)?;
        complex.cohomology_report(0..=p as i64, self.cutoffs.region(), filtration)
    }

    /// Cohomology of the twisted de Rham complex, i.e. of `|DR(𝔸ⁿ/𝔸¹)|`.
    pub fn flat_function_cohomology(&self) -> Result<BTreeMap<i64, DegreeCohomology>> {
        self.foliation()?.cohomology(&self.cutoffs)
    }

    /// Cohomology of the naive relative de Rham complex `(Ω*/df ∧ Ω*⁻¹, d)`.
    pub fn naive_relative_dr(&self) -> Result<BTreeMap<i64, DegreeCohomology>> {
        let crystal = Crystal::trivial(self.foliation()?);
        let truncated = crystal.truncate(crystal.naive_bound(&self.cutoffs))?;
        naive_de_rham_cohomology(&truncated, &self.cutoffs)
    }

    /// `dim H^n` of the fiber of the truncation map from the twisted complex
    /// (weights `≤ weight`, tags `≤ poly_degree`) to the naive complex.
    /// `None` when `f` is not weighted-homogeneous.
    pub fn fiber_top_cohomology(&self, weight: usize) -> Result<Option<usize>> {
        let fol = self.foliation()?;
        let model = fol.model();
        let t = model.tag_assignment()?;
        if !t.homogeneous {
            return Ok(None);
        }
        let n = self.n;
        if n == 0 {
            return Ok(Some(0));
        }
        let tag = self.cutoffs.poly_degree;
        let built = model.build_region(&t, weight, tag, Filtration::Graded { tag_bound: tag })?;
        let realized = built.gmc.realize(n as i64 - 1..=n as i64)?;
        let position = |q: usize| -> HashMap<&Key, usize> {
            built.realized_keys(q).into_iter().enumerate().map(|(i, k)| (k, i)).collect()
        };
        // fiber in degree q: u-divisible monomials and df ∧ Ω^{q−1}
        let fiber = |q: usize| -> Vec<SparseVec> {
            let pos = position(q);
            let mut out: Vec<SparseVec> = built
                .realized_keys(q)
                .iter()
                .enumerate()
                .filter(|(_, k)| k.alpha.iter().any(|a| *a > 0))
                .map(|(i, _)| std::iter::once((i, crate::linalg::int(1))).collect())
                .collect();
            if q >= 1 {
                for k in built.realized_keys(q - 1) {
                    if k.alpha.iter().sum::<u32>() != 1 {
                        continue;
                    }
                    let v: Option<SparseVec> = model
                        .delta(k)
                        .into_iter()
                        .filter(|(k2, _)| k2.alpha.iter().all(|a| *a == 0))
                        .map(|(k2, c)| pos.get(&k2).map(|&i| (i, c)))
                        .collect();
                    if let Some(v) = v.filter(|v| !v.is_empty()) {
                        out.push(v);
                    }
                }
            }
            out
        };
        let top = fiber(n);
        let d = realized.underlying().differential(n as i64 - 1);
        let boundaries: Vec<SparseVec> = fiber(n - 1).iter().map(|v| d.apply(v)).collect();
        Ok(Some(rank_of(top.iter()) - rank_of(boundaries.iter())))
    }

    /// Flat and naive cohomology side by side, and the accounting of the
    /// long exact sequence in the top degree.
    pub fn twisted_comparison_report(&self) -> Result<TwistedComparison> {
        let jac = jacobian_ring(&self.f, self.cutoffs.jet_bound);
        let mu = jac.require_isolated()?;
        let flat = self.flat_function_cohomology()?;
        let naive = self.naive_relative_dr()?;
        let n = self.n as i64;
        let empty = DegreeCohomology {
            dim: 0,
            stable: true,
            graded: None,
        };
        let degrees = (0..=n)
            .map(|q| {
                let a = flat.get(&q).cloned().unwrap_or(empty.clone());
                let b = naive.get(&q).cloned().unwrap_or(empty.clone());
                let slices_equal = match (&a.graded, &b.graded) {
                    (Some(x), Some(y)) => x.iter().map(|s| s.dim).eq(y.iter().map(|s| s.dim)),
                    _ => true,
                };
                TwistedDegree {
                    degree: q,
                    equal: a.dim == b.dim && slices_equal,
                    guaranteed: q < n - 1,
                    flat: a,
                    naive: b,
                }
            })
            .collect();
        let top = self.top_accounting(mu)?;
        Ok(TwistedComparison {
            n: self.n,
            milnor_number: mu,
            degrees,
            top,
        })
    }

    fn top_accounting(&self, mu: usize) -> Result<Option<TopAccounting>> {
        let first = self.n;
        let last = self.cutoffs.weight.max(first);
        let mut fiber_dims = Vec::new();
        for p in first..=last {
            match self.fiber_top_cohomology(p)? {
                Some(d) => fiber_dims.push((p, d)),
                None => return Ok(None),
            }
        }
        // the copy in weight p sits at tags (tag of a Jacobian class) + (p − n)·deg f
        let w = self.weight_vector();
        let deg_f = self.f.weighted_range(&w).map_or(0, |r| r.1);
        let top_form: i64 = w.iter().map(|x| *x as i64).sum();
        let koszul = self.koszul_stage_cohomology(self.n)?;
        let class_tags: Vec<i64> = koszul
            .get(&(self.n as i64))
            .and_then(|d| d.graded.clone())
            .map(|g| {
                g.iter()
                    .flat_map(|s| std::iter::repeat_n(s.tag + self.n as i64 * deg_f - top_form, s.dim))
                    .collect()
            })
            .unwrap_or_default();
        let increments: Vec<usize> = fiber_dims.windows(2).map(|w| w[1].1.saturating_sub(w[0].1)).collect();
        let expected: Vec<usize> = fiber_dims
            .iter()
            .skip(1)
            .map(|(p, _)| {
                class_tags
                    .iter()
                    .filter(|t| **t + top_form + (*p - self.n) as i64 * deg_f <= self.cutoffs.poly_degree)
                    .count()
            })
            .collect();
        let consistent = fiber_dims.first().is_some_and(|(_, d)| *d == 0) && increments == expected;
        Ok(Some(TopAccounting {
            fiber_dims,
            increments,
            expected_increments: expected,
            milnor_number: mu,
            consistent,
            note: "heuristic per the long exact sequence".into(),
        }))
    }
}

/// One degree of [`TwistedComparison`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TwistedDegree {
    pub degree: i64,
    pub flat: DegreeCohomology,
    pub naive: DegreeCohomology,
    pub equal: bool,
    /// `degree < n − 1`, where the two sides agree for an isolated singularity.
    pub guaranteed: bool,
}

/// Top-degree bookkeeping: the fiber of the truncation map gains one copy of
/// the Jacobian ring per weight above `n` (those copies within the tag cutoff).
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TopAccounting {
    /// `(weight cutoff, dim H^n of the fiber)`.
    pub fiber_dims: Vec<(usize, usize)>,
    pub increments: Vec<usize>,
    pub expected_increments: Vec<usize>,
    pub milnor_number: usize,
    pub consistent: bool,
    pub note: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TwistedComparison {
    pub n: usize,
    pub milnor_number: usize,
    pub degrees: Vec<TwistedDegree>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub top: Option<TopAccounting>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(n: usize, terms: &[(&[u32], i64)]) -> MultiPoly {
        MultiPoly::from_i64(n, terms)
    }

    fn setup(f: MultiPoly) -> TwistedDeRhamSetup {
        TwistedDeRhamSetup::new(f, Cutoffs::default(), None).unwrap()
    }

    fn dims(r: &BTreeMap<i64, DegreeCohomology>) -> Vec<usize> {
        r.values().map(|d| d.dim).collect()
    }

    #[test]
    fn milnor_numbers() {
        let cases: [(MultiPoly, usize); 3] = [
            (poly(2, &[(&[2, 0], 1), (&[0, 2], 1)]), 1),
            (poly(2, &[(&[3, 0], 1), (&[0, 2], -1)]), 2),
            (poly(2, &[(&[3, 0], 1), (&[0, 3], 1)]), 4),
        ];
        for (f, mu) in cases {
            let j = jacobian_ring(&f, 12);
            assert_eq!(j.milnor_number, Some(mu));
            let k = setup(f).koszul_stage_cohomology(2).unwrap();
            assert_eq!(dims(&k), vec![0, 0, mu]);
        }
        let j = jacobian_ring(&poly(2, &[(&[3, 0], 1), (&[0, 3], 1)]), 12);
        assert_eq!(j.monomial_basis, vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![1, 1]]);
        let j = jacobian_ring(&poly(2, &[(&[2, 1], 1)]), 8);
        assert!(!j.is_isolated());
        assert!(matches!(j.require_isolated(), Err(Error::NotIsolated(8))));
    }

    #[test]
    fn koszul_first_stage() {
        let s = setup(poly(2, &[(&[2, 0], 1), (&[0, 2], 1)]));
        let k = s.koszul_stage_cohomology(1).unwrap();
        assert_eq!(k[&0].dim, 0);
        assert!(k[&1].dim > 0);
        assert!(s.koszul_stage_cohomology(3).is_err());
    }

    #[test]
    fn submersion_and_constant() {
        // the class of x^k is represented by (x − u)^k, of weight k
        let s = setup(poly(1, &[(&[1], 1)]));
        let r = s.flat_function_cohomology().unwrap();
        let slices = r[&0].graded.clone().unwrap();
        assert_eq!(slices.iter().map(|x| x.dim).collect::<Vec<_>>(), vec![1, 1, 1, 1, 1, 0, 0, 0, 0]);
        assert!(!slices[5].stable && slices[4].stable);
        let wide = TwistedDeRhamSetup::new(poly(1, &[(&[1], 1)]), Cutoffs::new(8, 8, 12), None).unwrap();
        let r = wide.flat_function_cohomology().unwrap();
        assert_eq!(r[&0].dim, 9);
        assert_eq!(r[&1].dim, 0);
        let naive = s.naive_relative_dr().unwrap();
        assert_eq!(naive[&0].dim, 9);
        assert_eq!(naive[&1].dim, 0);

        for p in 0..4 {
            let c = TwistedDeRhamSetup::new(MultiPoly::zero(1), Cutoffs::new(p, 8, 12), None).unwrap();
            let r = c.flat_function_cohomology().unwrap();
            assert_eq!(r[&0].dim, p + 1);
            assert!(!r[&0].stable);
        }
    }

    #[test]
    fn weighted_homogeneous_setup() {
        let cusp = poly(2, &[(&[3, 0], 1), (&[0, 2], -1)]);
        assert!(TwistedDeRhamSetup::new(cusp.clone(), Cutoffs::default(), Some(vec![1, 1])).is_err());
        let s = TwistedDeRhamSetup::new(cusp, Cutoffs::new(3, 8, 12), Some(vec![2, 3])).unwrap();
        let r = s.flat_function_cohomology().unwrap();
        assert!(r.values().all(|d| d.graded.is_some()));
        assert_eq!(dims(&s.koszul_stage_cohomology(2).unwrap()), vec![0, 0, 2]);
    }

    #[test]
    fn twisted_comparison_in_two_variables() {
        let f = poly(2, &[(&[2, 0], 1), (&[0, 2], 1)]);
        let s = TwistedDeRhamSetup::new(f, Cutoffs::new(4, 8, 12), None).unwrap();
        let r = s.twisted_comparison_report().unwrap();
        assert!(r.degrees[0].equal);
        let top = r.top.unwrap();
        assert_eq!(top.fiber_dims, vec![(2, 0), (3, 1), (4, 2)]);
        assert!(top.consistent);
        let bad = setup(poly(2, &[(&[2, 1], 1)]));
        assert!(matches!(bad.twisted_comparison_report(), Err(Error::NotIsolated(_))));
    }
}
