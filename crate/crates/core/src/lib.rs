//! Exact computations with derived foliations on affine space.
//!
//! The crate is organized bottom-up:
//!
//! * [`linalg`]: sparse rational matrices, kernels, cohomology of finite complexes.
//! * [`poly`], [`forms`]: polynomials and polynomial differential forms.
//! * [`mixed`]: graded mixed complexes and their realization.
//! * [`algebra`]: the generator-level model of `DR(𝔽) ⊗ E(0)` used to build
//!   graded mixed complexes at finite cutoffs.
//! * [`foliation`], [`crystal`], [`singularity`]: the user-facing operations.
//! * [`cli`]: job documents and reports.

pub mod algebra;
pub mod cli;
pub mod crystal;
pub mod error;
pub mod foliation;
pub mod forms;
pub mod ideal;
pub mod linalg;
pub mod mixed;
pub mod poly;
pub mod singularity;

pub use error::{Error, Result};

/// Finite cutoffs for a computation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Cutoffs {
    /// Largest weight `P` of a reported cocycle.
    pub weight: usize,
    /// Largest polynomial (tag) degree `D` of a reported cocycle.
    pub poly_degree: i64,
    /// Largest jet order, or multiplier degree, in ideal computations.
    pub jet_bound: u32,
}

impl Default for Cutoffs {
    fn default() -> Self {
        Cutoffs {
            weight: 4,
            poly_degree: 8,
            jet_bound: 12,
        }
    }
}

impl Cutoffs {
    pub fn new(weight: usize, poly_degree: i64, jet_bound: u32) -> Self {
        Cutoffs {
            weight,
            poly_degree,
            jet_bound,
        }
    }

    pub fn region(&self) -> mixed::Region {
        mixed::Region::new(self.weight, self.poly_degree)
    }
}

/// Extra steps of preimages used when a filtration is not preserved exactly.
pub const PREIMAGE_PADDING: usize = 2;
