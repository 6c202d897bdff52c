//! Crate-wide error type.
//!
//! Variants are grouped by the layer that raises them; everything is exact
//! arithmetic, so most errors report either invalid inputs or certified
//! precision exhaustion (never numerical noise).

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum Error {
    // --- field / series layer ---
    /// Inverting a series that is zero to its known precision.
    #[error("inversion of a series that is zero to precision O(t^{0})")]
    InversionOfUncertainZero(i64),
    /// The field has no non-square unit (every element of F_{2^k} is a square).
    #[error("field F_{p}^{k} has no non-square unit", p = .p, k = .k)]
    NoNonSquare { p: u64, k: usize },

    // --- lattice layer ---
    /// Generators do not span a full-rank lattice.
    #[error("generators do not span a full-rank lattice")]
    NotFullRank,
    /// The span escapes the window [t^m O^n, t^-m O^n].
    #[error("lattice escapes window m={0}")]
    WindowViolated(i64),
    /// Two lattices with different ambient rank cannot be compared.
    #[error("incompatible ambient ranks {0} and {1}")]
    IncompatibleWindows(usize, usize),
    /// Series data does not reach the precision the lattice operation needs.
    #[error("insufficient precision: have O(t^{have}), need O(t^{need})", have = .have, need = .need)]
    InsufficientPrecision { have: i64, need: i64 },

    // --- spectral layer ---
    /// A valuation decision rests on a coefficient that is zero to precision.
    #[error("uncertain valuation: coefficient zero to precision O(t^{0})")]
    UncertainValuation(i64),
    /// The characteristic polynomial is not separable (discriminant 0).
    #[error("polynomial is not separable")]
    NotSeparable,
    /// Wild ramification: p divides a candidate ramification index.
    #[error("wild ramification: p={p} divides ramification index e={e}", p = .p, e = .e)]
    WildRamification { p: u64, e: u32 },
    /// An internally increased precision cap was reached without stabilizing.
    #[error("precision exhausted: {0}")]
    PrecisionExhausted(String),
    /// val(disc) and the anisotropy defect disagree mod 2.
    #[error("parity violation: val_disc={val_disc} and c={c} differ mod 2", val_disc = .val_disc, c = .c)]
    ParityViolation { val_disc: i64, c: i64 },

    // --- fiber / enumeration layer ---
    /// The element is not regular semisimple (repeated eigenvalue).
    #[error("element is not regular semisimple")]
    NotRegularSemisimple,
    /// The enumeration budget was exhausted.
    #[error("search budget of {0} nodes exceeded")]
    SearchBudgetExceeded(u64),
    /// An extra sample point fails the interpolated polynomial.
    #[error("interpolation mismatch: {0}")]
    InterpolationMismatch(String),

    // --- orbital layer ---
    /// κ-orbital integrals are undefined for split classes.
    #[error("split class has no nontrivial kappa")]
    SplitNoKappa,
    /// A quotient generator fixes an enumerated lattice.
    #[error("non-free action: generator {0} fixes a lattice")]
    NonFreeAction(usize),
    /// The quotient specification is not cocompact / not valid.
    #[error("invalid quotient specification: {0}")]
    InvalidQuotientSpec(String),

    // --- combinatorial companions ---
    /// gcd(m, n) must be 1 for the numerical semigroup.
    #[error("{0} and {1} are not coprime")]
    NotCoprime(u64, u64),
    /// The plane-curve equation must vanish at the origin.
    #[error("curve equation does not vanish at the origin")]
    NotVanishingAtOrigin,
    /// The matrix is not nilpotent.
    #[error("matrix is not nilpotent")]
    NotNilpotent,
    /// The flag is not compatible with the nilpotent.
    #[error("flag is not stable under the nilpotent: {0}")]
    FlagNotCompatible(String),

    // --- generic ---
    /// Malformed user input (parse errors, bad dimensions, bad parameters).
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
