//! Exact computations with gapped filtered A-infinity algebras.
//!
//! The crate works with finite presentations: a graded rational basis, a
//! discrete energy monoid, and sparse tables of structure constants
//! `m_k^{λ,μ}`. On top of that it checks the A-infinity relations up to an
//! energy cutoff and an `A_{N,0}` budget, builds minimal models and strict
//! homotopy inverses by planar-tree sums, solves the Maurer–Cartan equation,
//! and computes Floer cohomology with torsion over the Novikov rings.
//!
//! All arithmetic is exact over [`Rational`]. Every Novikov quantity carries
//! an explicit energy cutoff `E` and equalities hold modulo `F^{>E}`.
//!
//! ```
//! use lagfloer::novikov::{NovikovElement, RingFlavor};
//! use lagfloer::rational;
//!
//! let one_minus_t = NovikovElement::parse("1 + -1*T^(1)", RingFlavor::Nov0, rational(3, 1)).unwrap();
//! let inv = one_minus_t.invert().unwrap();
//! assert_eq!(inv.to_string(), "1*T^(0)*e^(0) + 1*T^(1)*e^(0) + 1*T^(2)*e^(0) + 1*T^(3)*e^(0)");
//! ```

pub mod ainfty;
pub mod error;
pub mod floer;
pub mod gapped;
pub mod geomsign;
pub mod gradedcore;
pub mod linalg;
pub mod novikov;
pub mod smith;
pub mod transfer;

pub use error::{Error, Result};
pub use gapped::EnergyMonoid;
pub use gradedcore::{GradedSpace, MultiMap, NVec, OperationSystem, QVec, Role};
pub use novikov::{Energy, NovikovElement, RingFlavor};

/// Exact rational scalars used for every coefficient and energy.
pub type Rational = num_rational::BigRational;

/// Builds the reduced fraction `p/q`.
///
/// # Panics
/// Panics when `q == 0`.
pub fn rational(p: i64, q: i64) -> Rational {
    Rational::new(p.into(), q.into())
}

/// Builds the integer `p` as a rational.
pub fn int(p: i64) -> Rational {
    Rational::from_integer(p.into())
}

/// Parses `"p/q"` or `"p"` into a reduced rational.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let t = s.trim();
    t.parse::<Rational>()
        .map_err(|_| Error::InvalidInput(format!("not a rational: {s:?}")))
}
