//! Oriented supersingular isogeny key exchange at desk scale.

pub mod algebra;
pub mod attack;
pub mod chains;
pub mod ec;
pub mod error;
pub mod graphstats;
pub mod modpoly;
pub mod protocol;
pub mod quadorder;
pub mod wire;

pub use algebra::{FieldParams, Fp2, Poly};
pub use chains::{DirectionTable, ModularChain};
pub use error::{Error, Result};
pub use modpoly::{ModPolyDb, ModularSystem};
pub use protocol::{PublicData, PublicParams, SecretKey, Session, SharedSecret};
pub use quadorder::{OrderClass, OrderParams, SplitPrimeIdeal};
