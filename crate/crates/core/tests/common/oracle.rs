//! Independent dense oracles: Gaussian elimination on plain rational
//! matrices and random graded mixed complexes with known structure.

use std::collections::BTreeMap;

use foliate::linalg::{FiniteCochainComplex, SparseMatrix};
use foliate::mixed::GradedMixedComplex;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;

pub type Q = BigRational;
/// Row-major dense matrix with an explicit shape.
#[derive(Clone, Debug)]
pub struct Dense {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Vec<Q>>,
}

pub fn q(v: i64) -> Q {
    Q::from_integer(v.into())
}

impl Dense {
    pub fn zero(rows: usize, cols: usize) -> Self {
        Dense {
            rows,
            cols,
            data: vec![vec![Q::zero(); cols]; rows],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zero(n, n);
        for i in 0..n {
            m.data[i][i] = Q::one();
        }
        m
    }

    pub fn mul(&self, other: &Dense) -> Dense {
        assert_eq!(self.cols, other.rows);
        let mut out = Dense::zero(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                if self.data[i][k].is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i][j] += &self.data[i][k] * &other.data[k][j];
                }
            }
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().flatten().all(Zero::is_zero)
    }

    pub fn to_sparse(&self) -> SparseMatrix {
        SparseMatrix::from_dense(self.rows, self.cols, &self.data)
    }

    pub fn rank(&self) -> usize {
        let mut m = self.data.clone();
        let mut rank = 0;
        for c in 0..self.cols {
            let Some(p) = (rank..self.rows).find(|&r| !m[r][c].is_zero()) else {
                continue;
            };
            m.swap(rank, p);
            let pivot = m[rank][c].clone();
            for r in 0..self.rows {
                if r != rank && !m[r][c].is_zero() {
                    let f = &m[r][c] / &pivot;
                    for k in c..self.cols {
                        let v = &f * &m[rank][k];
                        m[r][k] -= v;
                    }
                }
            }
            rank += 1;
        }
        rank
    }

    /// Inverse by Gauss–Jordan, or `None` when singular.
    pub fn inverse(&self) -> Option<Dense> {
        let n = self.rows;
        let mut a = self.data.clone();
        let mut inv = Dense::identity(n).data;
        for c in 0..n {
            let p = (c..n).find(|&r| !a[r][c].is_zero())?;
            a.swap(c, p);
            inv.swap(c, p);
            let pivot = a[c][c].clone();
            for k in 0..n {
                a[c][k] = &a[c][k] / &pivot;
                inv[c][k] = &inv[c][k] / &pivot;
            }
            for r in 0..n {
                if r != c && !a[r][c].is_zero() {
                    let f = a[r][c].clone();
                    for k in 0..n {
                        let (x, y) = (&f * &a[c][k], &f * &inv[c][k]);
                        a[r][k] -= x;
                        inv[r][k] -= y;
                    }
                }
            }
        }
        Some(Dense {
            rows: n,
            cols: n,
            data: inv,
        })
    }
}

pub const MIN_DEGREE: i64 = -2;
pub const MAX_DEGREE: i64 = 2;
pub const MAX_DIM: usize = 6;

/// A graded mixed complex kept in dense form next to its library version.
pub struct RandomGmc {
    pub top: usize,
    pub dims: BTreeMap<(usize, i64), usize>,
    /// `d[(p, i)] : E(p)^i → E(p)^{i+1}`.
    pub d: BTreeMap<(usize, i64), Dense>,
    /// `eps[(p, i)] : E(p)^i → E(p+1)^{i−1}`.
    pub eps: BTreeMap<(usize, i64), Dense>,
}

impl RandomGmc {
    pub fn dim(&self, p: usize, i: i64) -> usize {
        self.dims.get(&(p, i)).copied().unwrap_or(0)
    }

    fn map(&self, table: &BTreeMap<(usize, i64), Dense>, p: usize, i: i64, rows: usize) -> Dense {
        table
            .get(&(p, i))
            .cloned()
            .unwrap_or_else(|| Dense::zero(rows, self.dim(p, i)))
    }

    pub fn d(&self, p: usize, i: i64) -> Dense {
        self.map(&self.d, p, i, self.dim(p, i + 1))
    }

    pub fn eps(&self, p: usize, i: i64) -> Dense {
        self.map(&self.eps, p, i, self.dim(p + 1, i - 1))
    }

    pub fn library(&self) -> GradedMixedComplex {
        let degrees: Vec<i64> = (MIN_DEGREE..=MAX_DEGREE).collect();
        let pieces = (0..=self.top)
            .map(|p| {
                let dims = degrees.iter().map(|&i| self.dim(p, i)).collect();
                let diffs = degrees[..degrees.len() - 1].iter().map(|&i| self.d(p, i).to_sparse()).collect();
                FiniteCochainComplex::new(MIN_DEGREE, dims, diffs).expect("random pieces are complexes")
            })
            .collect();
        let mixed = (0..self.top)
            .map(|p| {
                degrees
                    .iter()
                    .filter(|&&i| i > MIN_DEGREE)
                    .map(|&i| (i, self.eps(p, i).to_sparse()))
                    .collect()
            })
            .collect();
        GradedMixedComplex::new(pieces, mixed).expect("random shapes")
    }

    /// Realized degrees `q = i + 2p` that can be nonzero.
    pub fn total_degrees(&self) -> std::ops::RangeInclusive<i64> {
        MIN_DEGREE..=MAX_DEGREE + 2 * self.top as i64
    }

    fn total_dim(&self, q: i64) -> usize {
        (0..=self.top).map(|p| self.dim(p, q - 2 * p as i64)).sum()
    }

    /// `d + ε` from total degree `q` to `q + 1`, assembled densely.
    pub fn total_differential(&self, q: i64) -> Dense {
        let mut m = Dense::zero(self.total_dim(q + 1), self.total_dim(q));
        let offsets = |q: i64| {
            let mut off = BTreeMap::new();
            let mut acc = 0;
            for p in 0..=self.top {
                off.insert(p, acc);
                acc += self.dim(p, q - 2 * p as i64);
            }
            off
        };
        let (src, dst) = (offsets(q), offsets(q + 1));
        for p in 0..=self.top {
            let i = q - 2 * p as i64;
            if self.dim(p, i) == 0 {
                continue;
            }
            let mut blocks = vec![(p, self.d(p, i))];
            if p < self.top {
                blocks.push((p + 1, self.eps(p, i)));
            }
            for (target, block) in blocks {
                for r in 0..block.rows {
                    for c in 0..block.cols {
                        m.data[dst[&target] + r][src[&p] + c] = block.data[r][c].clone();
                    }
                }
            }
        }
        m
    }

    /// `dim H^q` of the total complex by dense ranks.
    pub fn total_cohomology(&self, q: i64) -> usize {
        let out = self.total_differential(q).rank();
        let inc = self.total_differential(q - 1).rank();
        self.total_dim(q) - out - inc
    }
}

fn random_invertible<R: Rng>(rng: &mut R, n: usize) -> (Dense, Dense) {
    loop {
        let mut g = Dense::zero(n, n);
        for row in g.data.iter_mut() {
            for x in row.iter_mut() {
                *x = q(rng.gen_range(-2..=2));
            }
        }
        if let Some(inv) = g.inverse() {
            return (g, inv);
        }
    }
}

/// Sum of elementary blocks (isolated vectors, `d`-pairs, `ε`-pairs and
/// squares `x → y, z → w` with `εy = −w`) conjugated by random
/// automorphisms of each `E(p)^i`. Dimensions stay at most [`MAX_DIM`].
pub fn random_gmc<R: Rng>(rng: &mut R) -> RandomGmc {
    let top = rng.gen_range(0..=3usize);
    let mut dims: BTreeMap<(usize, i64), usize> = BTreeMap::new();
    // (source cell, source index, target cell, target index, sign, is_eps)
    let mut arrows: Vec<((usize, i64), usize, (usize, i64), usize, i64, bool)> = Vec::new();
    let blocks = rng.gen_range(2..=8);
    for _ in 0..blocks {
        let p = rng.gen_range(0..=top);
        let i = rng.gen_range(MIN_DEGREE..=MAX_DEGREE);
        let shape = rng.gen_range(0..4);
        let cells: Vec<(usize, i64)> = match shape {
            0 => vec![(p, i)],
            1 => vec![(p, i), (p, i + 1)],
            2 => vec![(p, i), (p + 1, i - 1)],
            _ => vec![(p, i), (p, i + 1), (p + 1, i - 1), (p + 1, i)],
        };
        let fits = cells.iter().all(|&(pp, ii)| {
            pp <= top && (MIN_DEGREE..=MAX_DEGREE).contains(&ii) && dims.get(&(pp, ii)).copied().unwrap_or(0) < MAX_DIM
        });
        if !fits {
            continue;
        }
        let idx: Vec<usize> = cells
            .iter()
            .map(|c| {
                let e = dims.entry(*c).or_insert(0);
                *e += 1;
                *e - 1
            })
            .collect();
        match shape {
            1 => arrows.push((cells[0], idx[0], cells[1], idx[1], 1, false)),
            2 => arrows.push((cells[0], idx[0], cells[1], idx[1], 1, true)),
            3 => {
                arrows.push((cells[0], idx[0], cells[1], idx[1], 1, false));
                arrows.push((cells[0], idx[0], cells[2], idx[2], 1, true));
                arrows.push((cells[2], idx[2], cells[3], idx[3], 1, false));
                arrows.push((cells[1], idx[1], cells[3], idx[3], -1, true));
            }
            _ => {}
        }
    }
    // Cells are complete before any map is placed, so shapes are final.
    let mut out = RandomGmc {
        top,
        dims,
        d: BTreeMap::new(),
        eps: BTreeMap::new(),
    };
    for (src, si, dst, ti, sign, is_eps) in arrows {
        let (p, i) = src;
        let (rows, cols) = (out.dim(dst.0, dst.1), out.dim(p, i));
        let table = if is_eps { &mut out.eps } else { &mut out.d };
        let m = table.entry((p, i)).or_insert_with(|| Dense::zero(rows, cols));
        m.data[ti][si] = q(sign);
    }
    let mut fixed = out;
    for p in 0..=top {
        for i in MIN_DEGREE..=MAX_DEGREE {
            let d = fixed.d(p, i);
            fixed.d.insert((p, i), d);
            if p < top {
                let e = fixed.eps(p, i);
                fixed.eps.insert((p, i), e);
            }
        }
    }
    let gauge: BTreeMap<(usize, i64), (Dense, Dense)> = fixed
        .dims
        .iter()
        .map(|(&c, &n)| (c, random_invertible(rng, n)))
        .collect();
    let conj = |m: &Dense, src: (usize, i64), dst: (usize, i64)| match (gauge.get(&src), gauge.get(&dst)) {
        (Some((_, inv)), Some((g, _))) => g.mul(m).mul(inv),
        _ => m.clone(),
    };
    let d = fixed
        .d
        .iter()
        .map(|(&(p, i), m)| ((p, i), conj(m, (p, i), (p, i + 1))))
        .collect();
    let eps = fixed
        .eps
        .iter()
        .map(|(&(p, i), m)| ((p, i), conj(m, (p, i), (p + 1, i - 1))))
        .collect();
    fixed.d = d;
    fixed.eps = eps;
    fixed
}
