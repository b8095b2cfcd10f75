//! Multivariate polynomials with exact rational coefficients.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{One, Zero};

use crate::linalg::{int, Rational};

/// Exponent vector, one entry per variable.
pub type Exponents = Vec<u32>;

/// Graded-lex comparison: total degree first, then lexicographic with the
/// first variable largest.
pub fn grlex_cmp(a: &[u32], b: &[u32]) -> Ordering {
    let da: u32 = a.iter().sum();
    let db: u32 = b.iter().sum();
    da.cmp(&db).then_with(|| b.cmp(a))
}

/// Weighted degree of an exponent vector.
pub fn weighted_degree(e: &[u32], weights: &[u32]) -> i64 {
    e.iter().zip(weights).map(|(a, w)| (*a as i64) * (*w as i64)).sum()
}

/// All exponent vectors in `n` variables of total degree `d`, in graded-lex
/// order (so `x` before `y`).
pub fn monomials_of_degree(n: usize, d: u32) -> Vec<Exponents> {
    fn rec(n: usize, d: u32, prefix: &mut Vec<u32>, out: &mut Vec<Exponents>) {
        if prefix.len() + 1 == n {
            prefix.push(d);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for a in (0..=d).rev() {
            prefix.push(a);
            rec(n, d - a, prefix, out);
            prefix.pop();
        }
    }
    if n == 0 {
        return if d == 0 { vec![vec![]] } else { vec![] };
    }
    let mut out = Vec::new();
    rec(n, d, &mut Vec::with_capacity(n), &mut out);
    out
}

/// All exponent vectors with weighted degree exactly `s`.
pub fn monomials_of_weighted_degree(weights: &[u32], s: i64) -> Vec<Exponents> {
    fn rec(weights: &[u32], s: i64, prefix: &mut Vec<u32>, out: &mut Vec<Exponents>) {
        let k = prefix.len();
        if k == weights.len() {
            if s == 0 {
                out.push(prefix.clone());
            }
            return;
        }
        let w = weights[k] as i64;
        let mut a = s / w;
        while a >= 0 {
            prefix.push(a as u32);
            rec(weights, s - a * w, prefix, out);
            prefix.pop();
            a -= 1;
        }
    }
    if s < 0 {
        return vec![];
    }
    let mut out = Vec::new();
    rec(weights, s, &mut Vec::new(), &mut out);
    out.sort_by(|a, b| grlex_cmp(a, b));
    out
}

/// Polynomial in `num_vars` variables. No zero coefficients are stored.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct MultiPoly {
    num_vars: usize,
    terms: BTreeMap<Exponents, Rational>,
}

impl MultiPoly {
    pub fn zero(num_vars: usize) -> Self {
        MultiPoly {
            num_vars,
            terms: BTreeMap::new(),
        }
    }

    pub fn one(num_vars: usize) -> Self {
        Self::constant(num_vars, Rational::one())
    }

    pub fn constant(num_vars: usize, c: Rational) -> Self {
        Self::monomial(num_vars, vec![0; num_vars], c)
    }

    /// The variable `x_i`.
    pub fn var(num_vars: usize, i: usize) -> Self {
        let mut e = vec![0; num_vars];
        e[i] = 1;
        Self::monomial(num_vars, e, Rational::one())
    }

    pub fn monomial(num_vars: usize, exps: Exponents, c: Rational) -> Self {
        assert_eq!(exps.len(), num_vars, "exponent vector length");
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(exps, c);
        }
        MultiPoly { num_vars, terms }
    }

    /// Builds from `(exponents, coefficient)` pairs, combining duplicates.
    pub fn from_terms(num_vars: usize, terms: impl IntoIterator<Item = (Exponents, Rational)>) -> Self {
        let mut p = Self::zero(num_vars);
        for (e, c) in terms {
            p.add_term(e, c);
        }
        p
    }

    /// Integer-coefficient shorthand used heavily in tests.
    pub fn from_i64(num_vars: usize, terms: &[(&[u32], i64)]) -> Self {
        Self::from_terms(num_vars, terms.iter().map(|(e, c)| (e.to_vec(), int(*c))))
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn terms(&self) -> &BTreeMap<Exponents, Rational> {
        &self.terms
    }

    /// Terms in graded-lex order, highest first.
    pub fn sorted_terms(&self) -> Vec<(&Exponents, &Rational)> {
        let mut v: Vec<_> = self.terms.iter().collect();
        v.sort_by(|a, b| grlex_cmp(b.0, a.0));
        v
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, e: &[u32]) -> Rational {
        self.terms.get(e).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn add_term(&mut self, e: Exponents, c: Rational) {
        assert_eq!(e.len(), self.num_vars, "exponent vector length");
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&e) {
            Some(x) => {
                *x += c;
                if x.is_zero() {
                    self.terms.remove(&e);
                }
            }
            None => {
                self.terms.insert(e, c);
            }
        }
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return Self::zero(self.num_vars);
        }
        MultiPoly {
            num_vars: self.num_vars,
            terms: self.terms.iter().map(|(e, x)| (e.clone(), x * c)).collect(),
        }
    }

    /// Multiplies by the monomial `x^e`.
    pub fn shift(&self, e: &[u32]) -> Self {
        MultiPoly {
            num_vars: self.num_vars,
            terms: self
                .terms
                .iter()
                .map(|(a, x)| (a.iter().zip(e).map(|(p, q)| p + q).collect(), x.clone()))
                .collect(),
        }
    }

    /// Total degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(|e| e.iter().sum()).max()
    }

    /// Smallest total degree of a term; `None` for zero.
    pub fn order(&self) -> Option<u32> {
        self.terms.keys().map(|e| e.iter().sum()).min()
    }

    /// (min, max) weighted degree over terms.
    pub fn weighted_range(&self, weights: &[u32]) -> Option<(i64, i64)> {
        let mut it = self.terms.keys().map(|e| weighted_degree(e, weights));
        let first = it.next()?;
        Some(it.fold((first, first), |(lo, hi), d| (lo.min(d), hi.max(d))))
    }

    /// Weighted degree if the polynomial is weighted-homogeneous and nonzero.
    pub fn homogeneous_degree(&self, weights: &[u32]) -> Option<i64> {
        match self.weighted_range(weights) {
            Some((lo, hi)) if lo == hi => Some(lo),
            _ => None,
        }
    }

    /// Partial derivative with respect to `x_i`.
    pub fn derivative(&self, i: usize) -> Self {
        let mut out = Self::zero(self.num_vars);
        for (e, c) in &self.terms {
            if e[i] > 0 {
                let mut e2 = e.clone();
                e2[i] -= 1;
                out.add_term(e2, c * int(e[i] as i64));
            }
        }
        out
    }

    pub fn gradient(&self) -> Vec<MultiPoly> {
        (0..self.num_vars).map(|i| self.derivative(i)).collect()
    }

    pub fn eval(&self, point: &[Rational]) -> Rational {
        assert_eq!(point.len(), self.num_vars);
        let mut acc = Rational::zero();
        for (e, c) in &self.terms {
            let mut t = c.clone();
            for (x, a) in point.iter().zip(e) {
                for _ in 0..*a {
                    t *= x;
                }
            }
            acc += t;
        }
        acc
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = Self::one(self.num_vars);
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    /// Substitutes `x_i ↦ images[i]`; the result lives in the images' ring.
    pub fn compose(&self, images: &[MultiPoly]) -> MultiPoly {
        assert_eq!(images.len(), self.num_vars, "one image per variable");
        let target = images.first().map_or(0, |p| p.num_vars);
        let mut out = MultiPoly::zero(target);
        let mut powers: Vec<Vec<MultiPoly>> = images.iter().map(|p| vec![MultiPoly::one(p.num_vars)]).collect();
        for (e, c) in &self.terms {
            let mut t = MultiPoly::constant(target, c.clone());
            for (i, &a) in e.iter().enumerate() {
                while powers[i].len() <= a as usize {
                    let next = powers[i].last().unwrap() * &images[i];
                    powers[i].push(next);
                }
                t = &t * &powers[i][a as usize];
            }
            out = &out + &t;
        }
        out
    }

    /// Drops terms of total degree above `bound`.
    pub fn truncate(&self, bound: u32) -> Self {
        MultiPoly {
            num_vars: self.num_vars,
            terms: self
                .terms
                .iter()
                .filter(|(e, _)| e.iter().sum::<u32>() <= bound)
                .map(|(e, c)| (e.clone(), c.clone()))
                .collect(),
        }
    }

    /// Same polynomial viewed with `extra` more variables appended.
    pub fn extend_vars(&self, extra: usize) -> Self {
        MultiPoly {
            num_vars: self.num_vars + extra,
            terms: self
                .terms
                .iter()
                .map(|(e, c)| {
                    let mut e2 = e.clone();
                    e2.extend(std::iter::repeat(0).take(extra));
                    (e2, c.clone())
                })
                .collect(),
        }
    }

    /// Formats with the given variable names.
    pub fn fmt_with(&self, names: &[String]) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        let mut out = String::new();
        for (k, (e, c)) in self.sorted_terms().into_iter().enumerate() {
            let neg = *c < Rational::zero();
            let mag = if neg { -c.clone() } else { c.clone() };
            if k == 0 {
                if neg {
                    out.push('-');
                }
            } else {
                out.push_str(if neg { " - " } else { " + " });
            }
            let mono: Vec<String> = e
                .iter()
                .enumerate()
                .filter(|(_, a)| **a > 0)
                .map(|(i, a)| {
                    let name = names.get(i).cloned().unwrap_or_else(|| format!("x{}", i + 1));
                    if *a == 1 {
                        name
                    } else {
                        format!("{name}^{a}")
                    }
                })
                .collect();
            if mono.is_empty() {
                out.push_str(&mag.to_string());
            } else {
                if !mag.is_one() {
                    out.push_str(&mag.to_string());
                    out.push('*');
                }
                out.push_str(&mono.join("*"));
            }
        }
        out
    }
}

/// Default variable names: x, y, z, then x4, x5, …
pub fn default_names(n: usize) -> Vec<String> {
    (0..n)
        .map(|i| match (n <= 3, i) {
            (true, 0) => "x".to_string(),
            (true, 1) => "y".to_string(),
            (true, 2) => "z".to_string(),
            _ => format!("x{}", i + 1),
        })
        .collect()
}

impl fmt::Debug for MultiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.fmt_with(&default_names(self.num_vars)))
    }
}

impl fmt::Display for MultiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.fmt_with(&default_names(self.num_vars)))
    }
}

impl Add for &MultiPoly {
    type Output = MultiPoly;
    fn add(self, rhs: &MultiPoly) -> MultiPoly {
        assert_eq!(self.num_vars, rhs.num_vars);
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(e.clone(), c.clone());
        }
        out
    }
}

impl Sub for &MultiPoly {
    type Output = MultiPoly;
    fn sub(self, rhs: &MultiPoly) -> MultiPoly {
        assert_eq!(self.num_vars, rhs.num_vars);
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(e.clone(), -c.clone());
        }
        out
    }
}

impl Neg for &MultiPoly {
    type Output = MultiPoly;
    fn neg(self) -> MultiPoly {
        self.scale(&-Rational::one())
    }
}

impl Mul for &MultiPoly {
    type Output = MultiPoly;
    fn mul(self, rhs: &MultiPoly) -> MultiPoly {
        assert_eq!(self.num_vars, rhs.num_vars);
        let mut out = MultiPoly::zero(self.num_vars);
        for (a, x) in &self.terms {
            for (b, y) in &rhs.terms {
                let e = a.iter().zip(b).map(|(p, q)| p + q).collect();
                out.add_term(e, x * y);
            }
        }
        out
    }
}
