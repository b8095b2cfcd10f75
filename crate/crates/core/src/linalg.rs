//! Exact sparse linear algebra over the rationals and cohomology of finite
//! cochain complexes.
//!
//! Everything downstream reduces to rank computations on sparse matrices
//! with [`Rational`] entries. Elimination is incremental: vectors are reduced
//! one at a time against an echelon basis keyed by leading index, which keeps
//! the pivot order deterministic.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};

/// Exact rational number, always kept in lowest terms with positive denominator.
pub type Rational = BigRational;

/// Builds `num/den` as a reduced rational.
///
/// Panics if `den == 0`.
pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Integer as a rational.
pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Sparse vector: index → nonzero entry.
pub type SparseVec = BTreeMap<usize, Rational>;

/// `acc += scale * v`, dropping entries that cancel.
pub fn axpy(acc: &mut SparseVec, scale: &Rational, v: &SparseVec) {
    if scale.is_zero() {
        return;
    }
    for (i, x) in v {
        let prod = scale * x;
        match acc.get_mut(i) {
            Some(y) => {
                *y += prod;
                if y.is_zero() {
                    acc.remove(i);
                }
            }
            None => {
                acc.insert(*i, prod);
            }
        }
    }
}

/// Exact sparse matrix stored column by column.
///
/// Invariant: no stored zero entries and every index is in bounds.
#[derive(Clone, PartialEq, Eq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    columns: Vec<SparseVec>,
}

impl fmt::Debug for SparseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SparseMatrix({}x{}) [", self.rows, self.cols)?;
        for (j, col) in self.columns.iter().enumerate() {
            for (i, x) in col {
                write!(f, " ({i},{j})={x}")?;
            }
        }
        write!(f, " ]")
    }
}

impl SparseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        SparseMatrix {
            rows,
            cols,
            columns: vec![SparseVec::new(); cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.columns[i].insert(i, Rational::one());
        }
        m
    }

    /// Builds a matrix from columns. Zero entries are dropped.
    pub fn from_columns(rows: usize, columns: Vec<SparseVec>) -> Self {
        let cols = columns.len();
        let columns = columns
            .into_iter()
            .map(|c| {
                c.into_iter()
                    .filter(|(i, x)| {
                        assert!(*i < rows, "row index {i} out of bounds ({rows})");
                        !x.is_zero()
                    })
                    .collect()
            })
            .collect();
        SparseMatrix { rows, cols, columns }
    }

    /// Builds a matrix from dense integer rows; handy in tests.
    pub fn from_dense_i64(rows: &[Vec<i64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut m = Self::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), c, "ragged dense matrix");
            for (j, &x) in row.iter().enumerate() {
                m.set(i, j, int(x));
            }
        }
        m
    }

    pub fn from_dense(rows: usize, cols: usize, data: &[Vec<Rational>]) -> Self {
        let mut m = Self::zeros(rows, cols);
        for (i, row) in data.iter().enumerate() {
            for (j, x) in row.iter().enumerate() {
                m.set(i, j, x.clone());
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn column(&self, j: usize) -> &SparseVec {
        &self.columns[j]
    }

    pub fn columns(&self) -> &[SparseVec] {
        &self.columns
    }

    pub fn get(&self, i: usize, j: usize) -> Rational {
        self.columns[j].get(&i).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn set(&mut self, i: usize, j: usize, x: Rational) {
        assert!(i < self.rows && j < self.cols, "index ({i},{j}) out of bounds");
        if x.is_zero() {
            self.columns[j].remove(&i);
        } else {
            self.columns[j].insert(i, x);
        }
    }

    pub fn add_to(&mut self, i: usize, j: usize, x: &Rational) {
        let cur = self.get(i, j);
        self.set(i, j, cur + x);
    }

    pub fn nnz(&self) -> usize {
        self.columns.iter().map(|c| c.len()).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.columns.iter().all(|c| c.is_empty())
    }

    /// Iterates `(row, col, value)` over stored entries in column-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, &Rational)> {
        self.columns
            .iter()
            .enumerate()
            .flat_map(|(j, c)| c.iter().map(move |(i, x)| (*i, j, x)))
    }

    pub fn apply(&self, v: &SparseVec) -> SparseVec {
        let mut out = SparseVec::new();
        for (j, x) in v {
            axpy(&mut out, x, &self.columns[*j]);
        }
        out
    }

    /// Matrix product `self * rhs`.
    pub fn mul(&self, rhs: &SparseMatrix) -> Result<SparseMatrix> {
        if self.cols != rhs.rows {
            return Err(Error::ShapeMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let columns = rhs.columns.iter().map(|c| self.apply(c)).collect();
        Ok(SparseMatrix {
            rows: self.rows,
            cols: rhs.cols,
            columns,
        })
    }

    pub fn add(&self, rhs: &SparseMatrix) -> Result<SparseMatrix> {
        if self.rows != rhs.rows || self.cols != rhs.cols {
            return Err(Error::ShapeMismatch(format!(
                "cannot add {}x{} and {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = self.clone();
        for (c, r) in out.columns.iter_mut().zip(&rhs.columns) {
            axpy(c, &Rational::one(), r);
        }
        Ok(out)
    }

    pub fn transpose(&self) -> SparseMatrix {
        let mut out = Self::zeros(self.cols, self.rows);
        for (i, j, x) in self.entries() {
            out.columns[i].insert(j, x.clone());
        }
        out
    }

    /// Keeps the listed columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> SparseMatrix {
        SparseMatrix {
            rows: self.rows,
            cols: cols.len(),
            columns: cols.iter().map(|&j| self.columns[j].clone()).collect(),
        }
    }

    /// Submatrix on the listed rows and columns; indices are renumbered in
    /// the given order. Entries in unlisted rows are dropped.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> SparseMatrix {
        let mut row_pos = vec![usize::MAX; self.rows];
        for (k, &i) in rows.iter().enumerate() {
            row_pos[i] = k;
        }
        let columns = cols
            .iter()
            .map(|&j| {
                self.columns[j]
                    .iter()
                    .filter(|(i, _)| row_pos[**i] != usize::MAX)
                    .map(|(i, x)| (row_pos[*i], x.clone()))
                    .collect()
            })
            .collect();
        SparseMatrix {
            rows: rows.len(),
            cols: cols.len(),
            columns,
        }
    }

    /// Permutes rows and columns: entry (i, j) moves to (row_perm[i], col_perm[j]).
    pub fn permuted(&self, row_perm: &[usize], col_perm: &[usize]) -> SparseMatrix {
        let mut out = Self::zeros(self.rows, self.cols);
        for (i, j, x) in self.entries() {
            out.columns[col_perm[j]].insert(row_perm[i], x.clone());
        }
        out
    }

    /// Dense copy, row-major.
    pub fn to_dense(&self) -> Vec<Vec<Rational>> {
        let mut d = vec![vec![Rational::zero(); self.cols]; self.rows];
        for (i, j, x) in self.entries() {
            d[i][j] = x.clone();
        }
        d
    }
}

/// Incremental row echelon form over a set of vectors.
///
/// Pivots are keyed by leading (smallest) index and stored normalized so the
/// leading entry is one.
#[derive(Clone, Debug, Default)]
pub struct Echelon {
    pivots: BTreeMap<usize, SparseVec>,
}

impl Echelon {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    /// Reduces `v` against the current pivots; returns the remainder.
    pub fn reduce(&self, mut v: SparseVec) -> SparseVec {
        let mut cursor = 0usize;
        loop {
            let Some((&lead, coeff)) = v.range(cursor..).next() else {
                return v;
            };
            match self.pivots.get(&lead) {
                Some(p) => {
                    let scale = -coeff.clone();
                    axpy(&mut v, &scale, p);
                }
                None => cursor = lead + 1,
            }
        }
    }

    /// Inserts `v`; returns true when it was independent of the current span.
    pub fn insert(&mut self, v: SparseVec) -> bool {
        let mut v = v;
        loop {
            let Some((&lead, coeff)) = v.iter().next() else {
                return false;
            };
            match self.pivots.get(&lead) {
                Some(p) => {
                    let scale = -coeff.clone();
                    axpy(&mut v, &scale, p);
                }
                None => {
                    let inv = coeff.recip();
                    for x in v.values_mut() {
                        *x *= &inv;
                    }
                    self.pivots.insert(lead, v);
                    return true;
                }
            }
        }
    }

    pub fn contains(&self, v: &SparseVec) -> bool {
        self.reduce(v.clone()).is_empty()
    }

    pub fn pivot_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.pivots.keys().copied()
    }

    /// A basis of the span, ordered by pivot.
    pub fn into_vectors(self) -> Vec<SparseVec> {
        self.pivots.into_values().collect()
    }
}

/// Rank of a set of sparse vectors.
pub fn rank_of<'a>(vectors: impl IntoIterator<Item = &'a SparseVec>) -> usize {
    let mut e = Echelon::new();
    for v in vectors {
        e.insert(v.clone());
    }
    e.rank()
}

/// Rank over ℚ.
pub fn rank(m: &SparseMatrix) -> usize {
    // Eliminate along the shorter side.
    if m.rows < m.cols {
        rank_of(m.transpose().columns.iter())
    } else {
        rank_of(m.columns.iter())
    }
}

/// Columns of the result form a basis of ker(M); `M * K = 0`.
pub fn kernel_basis(m: &SparseMatrix) -> SparseMatrix {
    // Track each column together with its combination of original columns,
    // stored in one vector: image part at indices < rows, tag part shifted.
    let shift = m.rows;
    let mut ech = Echelon::new();
    let mut kernel = Vec::new();
    for (j, col) in m.columns.iter().enumerate() {
        let mut v = col.clone();
        v.insert(shift + j, Rational::one());
        let r = ech.reduce(v);
        let image_empty = r.range(..shift).next().is_none();
        if image_empty {
            let k: SparseVec = r.into_iter().map(|(i, x)| (i - shift, x)).collect();
            kernel.push(k);
        } else {
            ech.insert(r);
        }
    }
    SparseMatrix::from_columns(m.cols, kernel)
}

/// Result of [`cohomology_at`].
#[derive(Clone, Debug)]
pub struct CohomologyAt {
    pub dim: usize,
    /// Columns are cocycles whose classes form a basis of cohomology.
    pub representatives: SparseMatrix,
}

/// Cohomology of `A --d_in--> B --d_out--> C` at `B`.
pub fn cohomology_at(d_in: &SparseMatrix, d_out: &SparseMatrix) -> Result<CohomologyAt> {
    if d_in.rows != d_out.cols {
        return Err(Error::ShapeMismatch(format!(
            "d_in has {} rows but d_out has {} columns",
            d_in.rows, d_out.cols
        )));
    }
    let comp = d_out.mul(d_in)?;
    if !comp.is_zero() {
        return Err(Error::NotAComplex(format!(
            "composite of differentials has {} nonzero entries",
            comp.nnz()
        )));
    }
    let kernel = kernel_basis(d_out);
    let mut ech = Echelon::new();
    for c in &d_in.columns {
        ech.insert(c.clone());
    }
    let mut reps = Vec::new();
    for k in kernel.columns() {
        if ech.insert(k.clone()) {
            reps.push(k.clone());
        }
    }
    Ok(CohomologyAt {
        dim: reps.len(),
        representatives: SparseMatrix::from_columns(d_out.cols, reps),
    })
}

/// Bounded cochain complex `C^lo → … → C^hi` over ℚ.
#[derive(Clone, Debug)]
pub struct FiniteCochainComplex {
    min_degree: i64,
    dims: Vec<usize>,
    /// `differentials[k]` maps degree `min_degree + k` to the next degree.
    differentials: Vec<SparseMatrix>,
}

impl FiniteCochainComplex {
    /// Validates shapes and `d ∘ d = 0`.
    pub fn new(min_degree: i64, dims: Vec<usize>, differentials: Vec<SparseMatrix>) -> Result<Self> {
        let c = Self::with_shapes(min_degree, dims, differentials)?;
        if let Some(i) = c.square_zero_failure() {
            return Err(Error::NotAComplex(format!("d∘d ≠ 0 from degree {i}")));
        }
        Ok(c)
    }

    /// Validates shapes only; `d ∘ d = 0` can be checked later with
    /// [`Self::square_zero_failure`].
    pub fn with_shapes(min_degree: i64, dims: Vec<usize>, differentials: Vec<SparseMatrix>) -> Result<Self> {
        let expected = dims.len().saturating_sub(1);
        if differentials.len() != expected {
            return Err(Error::ShapeMismatch(format!(
                "{} degrees need {} differentials, got {}",
                dims.len(),
                expected,
                differentials.len()
            )));
        }
        for (k, d) in differentials.iter().enumerate() {
            if d.cols != dims[k] || d.rows != dims[k + 1] {
                return Err(Error::ShapeMismatch(format!(
                    "differential in degree {} is {}x{}, expected {}x{}",
                    min_degree + k as i64,
                    d.rows,
                    d.cols,
                    dims[k + 1],
                    dims[k]
                )));
            }
        }
        Ok(FiniteCochainComplex {
            min_degree,
            dims,
            differentials,
        })
    }

    /// First degree `i` with `d^{i+1} ∘ d^i ≠ 0`.
    pub fn square_zero_failure(&self) -> Option<i64> {
        (1..self.differentials.len())
            .find(|&k| {
                !self.differentials[k]
                    .mul(&self.differentials[k - 1])
                    .expect("shapes checked at construction")
                    .is_zero()
            })
            .map(|k| self.min_degree + k as i64 - 1)
    }

    /// The complex with a single space in `degree`.
    pub fn single(degree: i64, dim: usize) -> Self {
        FiniteCochainComplex {
            min_degree: degree,
            dims: vec![dim],
            differentials: vec![],
        }
    }

    pub fn min_degree(&self) -> i64 {
        self.min_degree
    }

    pub fn max_degree(&self) -> i64 {
        self.min_degree + self.dims.len() as i64 - 1
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    /// Dimension in degree `i`; zero outside the range.
    pub fn dim(&self, i: i64) -> usize {
        if i < self.min_degree || i > self.max_degree() {
            0
        } else {
            self.dims[(i - self.min_degree) as usize]
        }
    }

    /// Differential out of degree `i` (a zero matrix outside the stored range).
    pub fn differential(&self, i: i64) -> SparseMatrix {
        if i >= self.min_degree && i < self.max_degree() {
            self.differentials[(i - self.min_degree) as usize].clone()
        } else {
            SparseMatrix::zeros(self.dim(i + 1), self.dim(i))
        }
    }

    pub fn differential_ref(&self, i: i64) -> Option<&SparseMatrix> {
        if i >= self.min_degree && i < self.max_degree() {
            Some(&self.differentials[(i - self.min_degree) as usize])
        } else {
            None
        }
    }
}

/// Cohomology dimension in every stored degree.
pub fn complex_cohomology(c: &FiniteCochainComplex) -> Result<BTreeMap<i64, usize>> {
    let mut out = BTreeMap::new();
    for i in c.min_degree()..=c.max_degree() {
        let h = cohomology_at(&c.differential(i - 1), &c.differential(i))?;
        out.insert(i, h.dim);
    }
    Ok(out)
}

/// Dimension of a filtered piece of cohomology, computed from ranks only.
///
/// The ambient degree-q space has indexed basis; `in_f[i]` marks the basis
/// vectors spanning the subspace F. With `images` the images under the
/// differential of the basis vectors of F (listed in the order of
/// `in_f`'s true entries), `relations_next` vectors spanning the subspace
/// the differential is taken modulo, and `incoming` vectors spanning the
/// boundaries, returns
/// `dim{v ∈ F : dv ∈ span(relations_next)} − dim(span(incoming) ∩ F)`.
pub fn filtered_subquotient_dim(
    in_f: &[bool],
    images: &[SparseVec],
    relations_next: &[SparseVec],
    incoming: &[SparseVec],
) -> usize {
    let f_dim = in_f.iter().filter(|b| **b).count();
    debug_assert_eq!(f_dim, images.len());
    let rank_rel = rank_of(relations_next.iter());
    let rank_both = if relations_next.is_empty() {
        rank_of(images.iter())
    } else {
        rank_of(relations_next.iter().chain(images.iter()))
    };
    let cycles = f_dim + rank_rel - rank_both;

    let rank_in = rank_of(incoming.iter());
    let outside: Vec<SparseVec> = incoming
        .iter()
        .map(|v| {
            v.iter()
                .filter(|(i, _)| !in_f[**i])
                .map(|(i, x)| (*i, x.clone()))
                .collect()
        })
        .collect();
    let rank_out = rank_of(outside.iter());
    let boundaries = rank_in - rank_out;
    debug_assert!(boundaries <= cycles, "boundaries exceed cycles");
    cycles.saturating_sub(boundaries)
}

/// Sign helper: `(-1)^k`.
pub fn sign(k: usize) -> Rational {
    if k.is_multiple_of(2) {
        Rational::one()
    } else {
        -Rational::one()
    }
}
