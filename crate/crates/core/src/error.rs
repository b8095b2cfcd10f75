use thiserror::Error;

use crate::forms::{FormMatrix, PolyForm};
use crate::poly::MultiPoly;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("not a complex: {0}")]
    NotAComplex(String),

    #[error("matrix is not square ({rows}x{cols})")]
    NonSquare { rows: usize, cols: usize },

    /// `dw_i + Σ_j w_ij ∧ w_j` is nonzero. `in_ideal` records whether `dw_i`
    /// lies in `(w) ∧ Ω¹` up to the search bound (so another connection
    /// matrix could repair it).
    #[error("form {index} violates the differential-ideal relation")]
    NotDifferentialIdeal {
        index: usize,
        residual: PolyForm,
        in_ideal: bool,
    },

    #[error("connection matrix is not flat")]
    ConnectionNotFlat { defect: FormMatrix },

    #[error("not a Lie algebroid: {identity}")]
    NotALieAlgebroid {
        identity: String,
        defect: Vec<MultiPoly>,
    },

    /// Curvature of a connection. `pair` names the first offending
    /// coordinate pair when the connection is given by matrices `A_i`.
    #[error("connection is not flat")]
    NotFlat {
        pair: Option<(usize, usize)>,
        defect: Vec<Vec<MultiPoly>>,
    },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("no stabilization by jet bound {0}")]
    NotIsolated(usize),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("graded mixed structure violated: {0}")]
    InvalidMixedStructure(String),

    #[error("cutoff ({weight}, {degree}) exceeds the exact region of the built complex")]
    CutoffOutOfRange { weight: usize, degree: i64 },

    #[error("malformed job document: {0}")]
    Parse(String),

    /// A field-level problem in a job document; `path` is a JSON pointer.
    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// True for failures that certify a mathematical property of the input
    /// (as opposed to malformed input or unsupported requests).
    pub fn is_mathematical(&self) -> bool {
        matches!(
            self,
            Error::NotDifferentialIdeal { .. }
                | Error::ConnectionNotFlat { .. }
                | Error::NotALieAlgebroid { .. }
                | Error::NotFlat { .. }
                | Error::InvalidMixedStructure(_)
        )
    }
}
