//! Exact spinor, Clifford-algebra and cohomological Fourier–Mukai computations
//! for abelian varieties of Weil type.

pub mod clifford;
pub mod error;
pub mod exterior;
pub mod field;
pub mod fourier;
pub mod linalg;
pub mod pipeline;
pub mod report;
pub mod spinor;
pub mod weil;

pub use error::{Error, Result};
pub use exterior::{GeneratorSpace, Multivector};
pub use field::{CmType, Embedding, Field, FieldElem, Rational, Rationals, Subfield, TowerSpec};
