//! Exact-arithmetic invariants for groups of interval exchange transformations.
//!
//! The library works over a fixed real algebraic ground field `Q(theta)` and a
//! finitely generated subgroup of the reals containing 1 (the lattice of
//! admissible breakpoints).  On top of that it provides the value groups for
//! the invariants (second tensor power and skew-symmetric square of the
//! lattice, with their mod-2 quotients), interval/rectangle region algebra
//! with its product measure, and the two element groups: orientation
//! preserving exchanges and exchanges with flips.

pub mod flips;
pub mod ground;
pub mod iet;
pub mod lattice;
pub mod regions;
pub mod sampling;
pub mod selftest;
pub mod svg;
pub mod tensor2;
pub mod textio;

use std::fmt;

/// Errors shared by every module.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// Minimal polynomial rejected (non-monic, non-square-free or reducible).
    BadPolynomial(String),
    /// Isolating interval does not contain exactly one root.
    BadInterval(String),
    DivisionByZero,
    /// Value is not an integer combination of the lattice basis.
    NotInLattice,
    /// Operation requires a dense (rank >= 2) lattice.
    NotDense,
    /// An iteration budget ran out before the computation settled.
    BudgetExceeded(String),
    /// Operands belong to different fields or lattices.
    MixedContexts,
    NotUnimodular,
    OutOfRange(String),
    /// Transposition intervals overlap.
    Overlap,
    /// Partition is not associated with the element.
    NotAssociated,
    /// Element has nonzero SAF invariant.
    NotInSafKernel,
    /// Requested construction has no representative over the lattice.
    NotRepresentable(String),
    /// Flip element has an order-reversing interval.
    NotOrientationPreserving,
    /// Length is not a nonnegative integer combination of the given set.
    NotRepresentableOverS,
    Parse(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::BadPolynomial(m) => write!(f, "bad polynomial: {m}"),
            Error::BadInterval(m) => write!(f, "bad isolating interval: {m}"),
            Error::DivisionByZero => write!(f, "division by zero"),
            Error::NotInLattice => write!(f, "value is not in the lattice"),
            Error::NotDense => write!(f, "lattice is not dense"),
            Error::BudgetExceeded(m) => write!(f, "iteration budget exceeded: {m}"),
            Error::MixedContexts => write!(f, "operands come from different contexts"),
            Error::NotUnimodular => write!(f, "matrix is not unimodular"),
            Error::OutOfRange(m) => write!(f, "out of range: {m}"),
            Error::Overlap => write!(f, "intervals overlap"),
            Error::NotAssociated => write!(f, "partition is not associated with the element"),
            Error::NotInSafKernel => write!(f, "element is not in the SAF kernel"),
            Error::NotRepresentable(m) => write!(f, "not representable: {m}"),
            Error::NotOrientationPreserving => write!(f, "element reverses an interval"),
            Error::NotRepresentableOverS => {
                write!(f, "length is not an N-combination of the independent set")
            }
            Error::Parse(m) => write!(f, "parse error: {m}"),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;
