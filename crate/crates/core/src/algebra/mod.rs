//! Finite-field and polynomial arithmetic over F_{p^2}.

pub mod field;
pub mod int;
pub mod poly;

pub use field::{FieldParams, Fp2};
pub use int::kronecker;
pub use poly::Poly;
