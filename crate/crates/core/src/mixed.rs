//! Graded mixed complexes, their realization, and filtered cohomology.
//!
//! A graded mixed complex has weight pieces `E(0), …, E(top)`, each a cochain
//! complex, and mixed maps `ε_p : E(p)^i → E(p+1)^{i−1}`. The realization has
//! `|E|^q = ⊕_p E(p)^{q−2p}` with differential `d + ε`, so both `d` and `ε`
//! raise the realized degree by one.
//!
//! Every basis vector also carries an integer *tag* (a polynomial filtration
//! degree). Cohomology is reported as the filtered piece spanned by cocycles
//! of weight `≤ P` and tag `≤ D`; see [`Filtration`] for when this is exact.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::RangeInclusive;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{filtered_subquotient_dim, sign, FiniteCochainComplex, SparseMatrix, SparseVec};

/// Basis vectors with weight `≤ weight` and tag `≤ tag`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Region {
    pub weight: usize,
    pub tag: i64,
}

impl Region {
    pub const ALL: Region = Region {
        weight: usize::MAX,
        tag: i64::MAX,
    };

    pub fn new(weight: usize, tag: i64) -> Self {
        Region { weight, tag }
    }

    pub fn contains(&self, label: (usize, i64)) -> bool {
        label.0 <= self.weight && label.1 <= self.tag
    }

    pub fn includes(&self, other: &Region) -> bool {
        other.weight <= self.weight && other.tag <= self.tag
    }

    /// One step smaller in both directions; unbounded sides stay unbounded.
    pub fn shrink(&self) -> Region {
        Region {
            weight: if self.weight == usize::MAX {
                usize::MAX
            } else {
                self.weight.saturating_sub(1)
            },
            tag: if self.tag == i64::MAX { i64::MAX } else { self.tag - 1 },
        }
    }

    pub fn grow(&self) -> Region {
        Region {
            weight: self.weight.saturating_add(1),
            tag: self.tag.saturating_add(1),
        }
    }
}

/// How the tags interact with the differentials.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Filtration {
    /// `d` and `ε` preserve tags, and every tag slice up to `tag_bound` is
    /// present in full (all weights). Each slice is then a finite complex and
    /// its cohomology is computed exactly.
    Graded { tag_bound: i64 },
    /// `d` and `ε` never lower tags. Images of basis vectors inside `exact`
    /// are complete; outside it they may be cut off.
    Filtered { exact: Region },
}

/// Which identity failed in [`GradedMixedComplex::validate`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    /// `d ∘ d ≠ 0` inside one weight.
    DSquared,
    /// `d ε + ε d ≠ 0`.
    Anticommutation,
    /// `ε ∘ ε ≠ 0`.
    EpsilonSquared,
}

/// First failing identity, located by source weight and internal degree.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub weight: usize,
    pub degree: i64,
    /// Number of nonzero entries of the offending composite.
    pub nonzero_entries: usize,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let what = match self.kind {
            ViolationKind::DSquared => "d∘d",
            ViolationKind::Anticommutation => "dε + εd",
            ViolationKind::EpsilonSquared => "ε∘ε",
        };
        write!(
            f,
            "{what} ≠ 0 from weight {} degree {} ({} nonzero entries)",
            self.weight, self.degree, self.nonzero_entries
        )
    }
}

/// Weight-graded cochain complex with mixed maps of weight +1.
#[derive(Clone, Debug)]
pub struct GradedMixedComplex {
    pieces: Vec<FiniteCochainComplex>,
    /// `mixed[p][i] : E(p)^i → E(p+1)^{i−1}`; absent entries are zero.
    mixed: Vec<BTreeMap<i64, SparseMatrix>>,
    /// `tags[p][i][j]` is the tag of basis vector `j` of `E(p)^i`; absent
    /// entries mean all tags are zero.
    tags: Vec<BTreeMap<i64, Vec<i64>>>,
    filtration: Filtration,
}

impl GradedMixedComplex {
    /// Checks shapes only; use [`Self::validate`] for the algebraic identities.
    pub fn new(pieces: Vec<FiniteCochainComplex>, mixed: Vec<BTreeMap<i64, SparseMatrix>>) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::ShapeMismatch("a graded mixed complex needs weight 0".into()));
        }
        if mixed.len() + 1 != pieces.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} weights need {} mixed maps, got {}",
                pieces.len(),
                pieces.len() - 1,
                mixed.len()
            )));
        }
        for (p, maps) in mixed.iter().enumerate() {
            for (&i, m) in maps {
                let (cols, rows) = (pieces[p].dim(i), pieces[p + 1].dim(i - 1));
                if m.cols() != cols || m.rows() != rows {
                    return Err(Error::ShapeMismatch(format!(
                        "ε from weight {p} degree {i} is {}x{}, expected {rows}x{cols}",
                        m.rows(),
                        m.cols()
                    )));
                }
            }
        }
        let tags = vec![BTreeMap::new(); pieces.len()];
        Ok(GradedMixedComplex {
            pieces,
            mixed,
            tags,
            filtration: Filtration::Graded { tag_bound: i64::MAX },
        })
    }

    /// Attaches tags and the filtration contract they satisfy.
    pub fn with_filtration(mut self, tags: Vec<BTreeMap<i64, Vec<i64>>>, filtration: Filtration) -> Result<Self> {
        if tags.len() != self.pieces.len() {
            return Err(Error::ShapeMismatch("one tag table per weight required".into()));
        }
        for (p, table) in tags.iter().enumerate() {
            for (&i, v) in table {
                if v.len() != self.pieces[p].dim(i) {
                    return Err(Error::ShapeMismatch(format!(
                        "weight {p} degree {i} has {} tags for {} basis vectors",
                        v.len(),
                        self.pieces[p].dim(i)
                    )));
                }
            }
        }
        self.tags = tags;
        self.filtration = filtration;
        Ok(self)
    }

    /// `ℚ` in weight 0, degree 0.
    pub fn unit() -> Self {
        Self::new(vec![FiniteCochainComplex::single(0, 1)], vec![]).expect("unit shapes")
    }

    /// `complex` placed in weight `p`, with zero in lower weights.
    pub fn pure(p: usize, complex: FiniteCochainComplex) -> Self {
        let mut pieces = vec![FiniteCochainComplex::single(0, 0); p];
        pieces.push(complex);
        Self::new(pieces, vec![BTreeMap::new(); p]).expect("pure shapes")
    }

    pub fn top_weight(&self) -> usize {
        self.pieces.len() - 1
    }

    pub fn piece(&self, p: usize) -> &FiniteCochainComplex {
        &self.pieces[p]
    }

    pub fn filtration(&self) -> Filtration {
        self.filtration
    }

    /// `ε_p` out of degree `i`, as a (possibly zero) matrix.
    pub fn mixed_map(&self, p: usize, i: i64) -> SparseMatrix {
        let cols = self.pieces[p].dim(i);
        if p >= self.top_weight() {
            return SparseMatrix::zeros(0, cols);
        }
        self.mixed[p]
            .get(&i)
            .cloned()
            .unwrap_or_else(|| SparseMatrix::zeros(self.pieces[p + 1].dim(i - 1), cols))
    }

    pub fn tags(&self, p: usize, i: i64) -> Vec<i64> {
        self.tags[p]
            .get(&i)
            .cloned()
            .unwrap_or_else(|| vec![0; self.pieces[p].dim(i)])
    }

    fn degrees(&self, p: usize) -> RangeInclusive<i64> {
        let c = &self.pieces[p];
        c.min_degree()..=c.max_degree()
    }

    /// Checks `d² = 0` in each weight, `dε + εd = 0`, and `ε² = 0`, reporting
    /// the first failure in order of weight, then identity, then degree.
    pub fn validate(&self) -> std::result::Result<(), Violation> {
        let fail = |kind, weight, degree, m: &SparseMatrix| Violation {
            kind,
            weight,
            degree,
            nonzero_entries: m.nnz(),
        };
        for p in 0..=self.top_weight() {
            let e = &self.pieces[p];
            for i in self.degrees(p) {
                let dd = e.differential(i + 1).mul(&e.differential(i)).expect("shapes");
                if !dd.is_zero() {
                    return Err(fail(ViolationKind::DSquared, p, i, &dd));
                }
            }
            if p == self.top_weight() {
                continue;
            }
            let next = &self.pieces[p + 1];
            for i in self.degrees(p) {
                let a = next.differential(i - 1).mul(&self.mixed_map(p, i)).expect("shapes");
                let b = self.mixed_map(p, i + 1).mul(&e.differential(i)).expect("shapes");
                let sum = a.add(&b).expect("shapes");
                if !sum.is_zero() {
                    return Err(fail(ViolationKind::Anticommutation, p, i, &sum));
                }
            }
            if p + 1 < self.top_weight() {
                for i in self.degrees(p) {
                    let ee = self.mixed_map(p + 1, i - 1).mul(&self.mixed_map(p, i)).expect("shapes");
                    if !ee.is_zero() {
                        return Err(fail(ViolationKind::EpsilonSquared, p, i, &ee));
                    }
                }
            }
        }
        Ok(())
    }

    /// Realized degrees that can be nonzero.
    pub fn realized_range(&self) -> RangeInclusive<i64> {
        let mut lo = i64::MAX;
        let mut hi = i64::MIN;
        for (p, c) in self.pieces.iter().enumerate() {
            if c.is_empty() {
                continue;
            }
            for i in self.degrees(p) {
                if c.dim(i) > 0 {
                    lo = lo.min(i + 2 * p as i64);
                    hi = hi.max(i + 2 * p as i64);
                }
            }
        }
        if lo > hi {
            0..=0
        } else {
            lo..=hi
        }
    }

    /// Assembles `|E|` on the degrees of `window`, with differential `d + ε`
    /// between consecutive degrees of the window.
    pub fn realize(&self, window: RangeInclusive<i64>) -> Result<RealizedComplex> {
        let (lo, hi) = (*window.start(), *window.end());
        if lo > hi {
            return Err(Error::InvalidInput(format!("empty degree window {lo}..={hi}")));
        }
        // blocks[q - lo] = [(p, offset)] for the nonzero E(p)^{q−2p}
        let mut blocks: Vec<Vec<(usize, usize)>> = Vec::new();
        let mut dims = Vec::new();
        let mut labels = Vec::new();
        for q in lo..=hi {
            let mut offset = 0;
            let mut list = Vec::new();
            let mut lab = Vec::new();
            for p in 0..=self.top_weight() {
                let i = q - 2 * p as i64;
                let dim = self.pieces[p].dim(i);
                if dim == 0 {
                    continue;
                }
                list.push((p, offset));
                lab.extend(self.tags(p, i).into_iter().map(|t| (p, t)));
                offset += dim;
            }
            blocks.push(list);
            dims.push(offset);
            labels.push(lab);
        }
        let mut differentials = Vec::new();
        for q in lo..hi {
            let k = (q - lo) as usize;
            let target: BTreeMap<usize, usize> = blocks[k + 1].iter().copied().collect();
            let mut columns = vec![SparseVec::new(); dims[k]];
            for &(p, off) in &blocks[k] {
                let i = q - 2 * p as i64;
                let mut place = |m: &SparseMatrix, target_off: usize| {
                    for (r, c, x) in m.entries() {
                        columns[off + c].insert(target_off + r, x.clone());
                    }
                };
                if let Some(&t) = target.get(&p) {
                    place(&self.pieces[p].differential(i), t);
                }
                if p < self.top_weight() {
                    if let Some(&t) = target.get(&(p + 1)) {
                        place(&self.mixed_map(p, i), t);
                    }
                }
            }
            differentials.push(SparseMatrix::from_columns(dims[k + 1], columns));
        }
        let underlying = FiniteCochainComplex::with_shapes(lo, dims, differentials)?;
        Ok(RealizedComplex {
            underlying,
            labels,
            relations: None,
            weight_cutoff: self.top_weight(),
        })
    }

    /// Filtered cohomology of `|E|` in the degrees of `window`, at
    /// `cutoff = (P, D)`, with stability flags.
    pub fn realized_cohomology(
        &self,
        window: RangeInclusive<i64>,
        cutoff: Region,
    ) -> Result<BTreeMap<i64, DegreeCohomology>> {
        let full = self.realized_range();
        let lo = (*full.start()).min(*window.start()) - 1;
        let hi = (*full.end()).max(*window.end()) + 1;
        let rc = self.realize(lo..=hi)?;
        rc.cohomology_report(window, cutoff, self.filtration)
    }

    /// `E ⊗ F` with `ε ⊗ 1 + 1 ⊗ ε` and Koszul signs; top weight is the
    /// smaller of the two.
    pub fn tensor(&self, other: &GradedMixedComplex) -> Result<GradedMixedComplex> {
        let filtration = match (self.filtration, other.filtration) {
            (Filtration::Graded { tag_bound: a }, Filtration::Graded { tag_bound: b }) => {
                let (min_a, min_b) = (self.min_tag(), other.min_tag());
                Filtration::Graded {
                    tag_bound: a.saturating_add(min_b).min(b.saturating_add(min_a)),
                }
            }
            _ => {
                return Err(Error::Unsupported(
                    "tensor products of cut-off filtered complexes".into(),
                ))
            }
        };
        let top = self.top_weight().min(other.top_weight());
        // layout[p][i] = [(a, i1, offset)] for blocks E(a)^{i1} ⊗ F(p−a)^{i−i1}
        let mut layout: Vec<BTreeMap<i64, Vec<(usize, i64, usize)>>> = Vec::new();
        let mut pieces_dims: Vec<BTreeMap<i64, usize>> = Vec::new();
        for p in 0..=top {
            let mut table: BTreeMap<i64, Vec<(usize, i64, usize)>> = BTreeMap::new();
            let mut dims: BTreeMap<i64, usize> = BTreeMap::new();
            for a in 0..=p {
                let b = p - a;
                for i1 in self.degrees(a) {
                    for i2 in other.degrees(b) {
                        let size = self.pieces[a].dim(i1) * other.pieces[b].dim(i2);
                        if size == 0 {
                            continue;
                        }
                        let d = dims.entry(i1 + i2).or_insert(0);
                        table.entry(i1 + i2).or_default().push((a, i1, *d));
                        *d += size;
                    }
                }
            }
            layout.push(table);
            pieces_dims.push(dims);
        }
        let find = |p: usize, a: usize, i1: i64, i: i64| -> Option<usize> {
            layout[p].get(&i)?.iter().find(|(aa, ii, _)| *aa == a && *ii == i1).map(|t| t.2)
        };
        // Writes `x ⊗ y ↦ s · (A x) ⊗ (B y)` into `cols`.
        #[allow(clippy::too_many_arguments)]
        fn kron_into(
            cols: &mut [SparseVec],
            src_off: usize,
            tgt_off: usize,
            a: &SparseMatrix,
            b: &SparseMatrix,
            src_b_dim: usize,
            tgt_b_dim: usize,
            s: &crate::linalg::Rational,
        ) {
            for (ra, ca, xa) in a.entries() {
                for (rb, cb, xb) in b.entries() {
                    let src = src_off + ca * src_b_dim + cb;
                    let tgt = tgt_off + ra * tgt_b_dim + rb;
                    let v = xa * xb * s;
                    let e = cols[src].entry(tgt).or_insert_with(num_traits::Zero::zero);
                    *e += v;
                }
            }
        }
        let one = sign(0);
        let mut pieces = Vec::new();
        let mut tags = Vec::new();
        for p in 0..=top {
            let dims = &pieces_dims[p];
            let (dlo, dhi) = match (dims.keys().next(), dims.keys().next_back()) {
                (Some(&l), Some(&h)) => (l, h),
                _ => (0, 0),
            };
            let dim_at = |i: i64| dims.get(&i).copied().unwrap_or(0);
            let mut diffs = Vec::new();
            for i in dlo..dhi {
                let mut cols = vec![SparseVec::new(); dim_at(i)];
                for &(a, i1, off) in layout[p].get(&i).map(Vec::as_slice).unwrap_or(&[]) {
                    let b = p - a;
                    let i2 = i - i1;
                    let (ea, fb) = (&self.pieces[a], &other.pieces[b]);
                    if let Some(t) = find(p, a, i1 + 1, i + 1) {
                        let idb = SparseMatrix::identity(fb.dim(i2));
                        kron_into(&mut cols, off, t, &ea.differential(i1), &idb, fb.dim(i2), fb.dim(i2), &one);
                    }
                    if let Some(t) = find(p, a, i1, i + 1) {
                        let ida = SparseMatrix::identity(ea.dim(i1));
                        let s = sign(i1.rem_euclid(2) as usize);
                        kron_into(&mut cols, off, t, &ida, &fb.differential(i2), fb.dim(i2), fb.dim(i2 + 1), &s);
                    }
                }
                let cols = cols
                    .into_iter()
                    .map(|c| c.into_iter().filter(|(_, x)| !num_traits::Zero::is_zero(x)).collect())
                    .collect();
                diffs.push(SparseMatrix::from_columns(dim_at(i + 1), cols));
            }
            let dims_vec: Vec<usize> = (dlo..=dhi).map(dim_at).collect();
            pieces.push(FiniteCochainComplex::with_shapes(dlo, dims_vec, diffs)?);
            let mut table = BTreeMap::new();
            for (&i, blocks) in &layout[p] {
                let mut v = Vec::with_capacity(dim_at(i));
                for &(a, i1, _) in blocks {
                    let ta = self.tags(a, i1);
                    let tb = other.tags(p - a, i - i1);
                    for x in &ta {
                        for y in &tb {
                            v.push(x + y);
                        }
                    }
                }
                table.insert(i, v);
            }
            tags.push(table);
        }
        let mut mixed = Vec::new();
        for p in 0..top {
            let mut maps = BTreeMap::new();
            for (&i, blocks) in &layout[p] {
                let rows = pieces[p + 1].dim(i - 1);
                let mut cols = vec![SparseVec::new(); pieces[p].dim(i)];
                for &(a, i1, off) in blocks {
                    let b = p - a;
                    let i2 = i - i1;
                    let (ea, fb) = (&self.pieces[a], &other.pieces[b]);
                    if a < self.top_weight() {
                        if let Some(t) = find(p + 1, a + 1, i1 - 1, i - 1) {
                            let idb = SparseMatrix::identity(fb.dim(i2));
                            kron_into(&mut cols, off, t, &self.mixed_map(a, i1), &idb, fb.dim(i2), fb.dim(i2), &one);
                        }
                    }
                    if b < other.top_weight() {
                        if let Some(t) = find(p + 1, a, i1, i - 1) {
                            let ida = SparseMatrix::identity(ea.dim(i1));
                            let s = sign(i1.rem_euclid(2) as usize);
                            let fm = other.mixed_map(b, i2);
                            kron_into(&mut cols, off, t, &ida, &fm, fb.dim(i2), fm.rows(), &s);
                        }
                    }
                }
                let cols = cols
                    .into_iter()
                    .map(|c| c.into_iter().filter(|(_, x)| !num_traits::Zero::is_zero(x)).collect())
                    .collect();
                maps.insert(i, SparseMatrix::from_columns(rows, cols));
            }
            mixed.push(maps);
        }
        GradedMixedComplex::new(pieces, mixed)?.with_filtration(tags, filtration)
    }

    fn min_tag(&self) -> i64 {
        self.tags
            .iter()
            .flat_map(|t| t.values().flatten().copied())
            .min()
            .unwrap_or(0)
            .min(0)
    }
}

/// Cohomology of one tag slice.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SliceCohomology {
    pub tag: i64,
    pub dim: usize,
    /// The slice dimension is unchanged when the weight cutoff grows by one.
    pub stable: bool,
}

/// Filtered cohomology in one degree.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DegreeCohomology {
    pub dim: usize,
    pub stable: bool,
    /// Per-slice dimensions for tag-preserving complexes.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub graded: Option<Vec<SliceCohomology>>,
}

/// A cochain complex whose basis vectors carry `(weight, tag)` labels,
/// optionally taken modulo a subcomplex spanned by `relations`.
#[derive(Clone, Debug)]
pub struct RealizedComplex {
    underlying: FiniteCochainComplex,
    labels: Vec<Vec<(usize, i64)>>,
    /// Per degree, vectors spanning the subcomplex to divide by.
    relations: Option<Vec<Vec<SparseVec>>>,
    weight_cutoff: usize,
}

impl RealizedComplex {
    pub fn new(
        underlying: FiniteCochainComplex,
        labels: Vec<Vec<(usize, i64)>>,
        relations: Option<Vec<Vec<SparseVec>>>,
    ) -> Result<Self> {
        let degrees = underlying.max_degree() - underlying.min_degree() + 1;
        if labels.len() as i64 != degrees {
            return Err(Error::ShapeMismatch("one label list per degree required".into()));
        }
        for (k, lab) in labels.iter().enumerate() {
            if lab.len() != underlying.dim(underlying.min_degree() + k as i64) {
                return Err(Error::ShapeMismatch(format!("label count mismatch in degree offset {k}")));
            }
        }
        if let Some(rel) = &relations {
            if rel.len() != labels.len() {
                return Err(Error::ShapeMismatch("one relation list per degree required".into()));
            }
        }
        let weight_cutoff = labels.iter().flatten().map(|l| l.0).max().unwrap_or(0);
        Ok(RealizedComplex {
            underlying,
            labels,
            relations,
            weight_cutoff,
        })
    }

    pub fn underlying(&self) -> &FiniteCochainComplex {
        &self.underlying
    }

    pub fn weight_cutoff(&self) -> usize {
        self.weight_cutoff
    }

    pub fn degree_window(&self) -> RangeInclusive<i64> {
        self.underlying.min_degree()..=self.underlying.max_degree()
    }

    pub fn dim(&self, q: i64) -> usize {
        self.underlying.dim(q)
    }

    pub fn labels(&self, q: i64) -> &[(usize, i64)] {
        match self.offset(q) {
            Some(k) => &self.labels[k],
            None => &[],
        }
    }

    pub fn relations(&self, q: i64) -> &[SparseVec] {
        match (&self.relations, self.offset(q)) {
            (Some(r), Some(k)) => &r[k],
            _ => &[],
        }
    }

    fn offset(&self, q: i64) -> Option<usize> {
        if self.degree_window().contains(&q) {
            Some((q - self.underlying.min_degree()) as usize)
        } else {
            None
        }
    }

    /// Dimension of the image in `H^q` of the cocycles supported in `cut`,
    /// with boundaries taken from preimages supported in `pre`.
    pub fn filtered_dim(&self, q: i64, cut: Region, pre: Region) -> usize {
        let labels = self.labels(q);
        let in_f: Vec<bool> = labels.iter().map(|l| cut.contains(*l)).collect();
        let d_out = self.underlying.differential(q);
        let images: Vec<SparseVec> = (0..labels.len())
            .filter(|&j| in_f[j])
            .map(|j| d_out.column(j).clone())
            .collect();
        let d_in = self.underlying.differential(q - 1);
        let mut incoming: Vec<SparseVec> = self
            .labels(q - 1)
            .iter()
            .enumerate()
            .filter(|(_, l)| pre.contains(**l))
            .map(|(j, _)| d_in.column(j).clone())
            .collect();
        incoming.extend(self.relations(q).iter().cloned());
        filtered_subquotient_dim(&in_f, &images, self.relations(q + 1), &incoming)
    }

    /// Cohomology dimension in every degree of the window, with no cutoff.
    pub fn total_cohomology(&self) -> BTreeMap<i64, usize> {
        self.degree_window()
            .map(|q| (q, self.filtered_dim(q, Region::ALL, Region::ALL)))
            .collect()
    }

    /// Subcomplex spanned by the basis vectors with the given tag. Only
    /// meaningful when the differential preserves tags.
    pub fn tag_slice(&self, tag: i64) -> RealizedComplex {
        let window = self.degree_window();
        let lo = *window.start();
        let keep: Vec<Vec<usize>> = self
            .labels
            .iter()
            .map(|lab| (0..lab.len()).filter(|&j| lab[j].1 == tag).collect())
            .collect();
        let mut diffs = Vec::new();
        for q in lo..*window.end() {
            let k = (q - lo) as usize;
            diffs.push(self.underlying.differential(q).submatrix(&keep[k + 1], &keep[k]));
        }
        let dims = keep.iter().map(Vec::len).collect();
        let labels = keep
            .iter()
            .zip(&self.labels)
            .map(|(idx, lab)| idx.iter().map(|&j| lab[j]).collect())
            .collect();
        let relations = self.relations.as_ref().map(|rel| {
            rel.iter()
                .zip(&keep)
                .map(|(vs, idx)| {
                    let mut pos = BTreeMap::new();
                    for (new, &old) in idx.iter().enumerate() {
                        pos.insert(old, new);
                    }
                    vs.iter()
                        .filter(|v| v.keys().all(|i| pos.contains_key(i)))
                        .map(|v| v.iter().map(|(i, x)| (pos[i], x.clone())).collect())
                        .collect()
                })
                .collect()
        });
        RealizedComplex {
            underlying: FiniteCochainComplex::with_shapes(lo, dims, diffs).expect("slice shapes"),
            labels,
            relations,
            weight_cutoff: self.weight_cutoff,
        }
    }

    /// Tags that occur, in increasing order.
    pub fn tags_present(&self) -> BTreeSet<i64> {
        self.labels.iter().flatten().map(|l| l.1).collect()
    }

    /// Filtered cohomology at `cutoff = (P, D)` for each degree of `window`.
    ///
    /// For [`Filtration::Graded`] the result is a sum over complete slices
    /// `tag ≤ D`; a slice is stable when raising the weight cutoff by one
    /// leaves it unchanged, and the total is stable when it agrees with the
    /// total at `(P+1, D+1)`. For [`Filtration::Filtered`] the total is stable
    /// when it agrees with the values at `(P+1, D+1)` and with boundaries
    /// drawn from a preimage region one step smaller.
    pub fn cohomology_report(
        &self,
        window: RangeInclusive<i64>,
        cutoff: Region,
        filtration: Filtration,
    ) -> Result<BTreeMap<i64, DegreeCohomology>> {
        let next = cutoff.grow();
        let mut out = BTreeMap::new();
        match filtration {
            Filtration::Graded { tag_bound } => {
                if next.tag > tag_bound {
                    return Err(Error::CutoffOutOfRange {
                        weight: cutoff.weight,
                        degree: cutoff.tag,
                    });
                }
                let slices: Vec<(i64, RealizedComplex)> = self
                    .tags_present()
                    .into_iter()
                    .filter(|&t| t <= next.tag)
                    .map(|t| (t, self.tag_slice(t)))
                    .collect();
                for q in window {
                    let mut graded = Vec::new();
                    let (mut main, mut shifted) = (0, 0);
                    for (t, slice) in &slices {
                        let here = slice.filtered_dim(q, Region::new(cutoff.weight, *t), Region::ALL);
                        let more = slice.filtered_dim(q, Region::new(next.weight, *t), Region::ALL);
                        shifted += more;
                        if *t <= cutoff.tag {
                            main += here;
                            graded.push(SliceCohomology {
                                tag: *t,
                                dim: here,
                                stable: here == more,
                            });
                        }
                    }
                    out.insert(
                        q,
                        DegreeCohomology {
                            dim: main,
                            stable: main == shifted,
                            graded: Some(graded),
                        },
                    );
                }
            }
            Filtration::Filtered { exact } => {
                if !exact.includes(&next) {
                    return Err(Error::CutoffOutOfRange {
                        weight: cutoff.weight,
                        degree: cutoff.tag,
                    });
                }
                for q in window {
                    let main = self.filtered_dim(q, cutoff, exact);
                    let shifted = self.filtered_dim(q, next, exact);
                    let shrunk = self.filtered_dim(q, cutoff, exact.shrink());
                    out.insert(
                        q,
                        DegreeCohomology {
                            dim: main,
                            stable: main == shifted && main == shrunk,
                            graded: None,
                        },
                    );
                }
            }
        }
        Ok(out)
    }
}
