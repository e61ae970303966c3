//! Exact-arithmetic laboratory for conductors and newforms of `SL2` and
//! `U(1,1)` over non-archimedean local fields.
//!
//! Everything here is exact: local-ring elements are truncated digit
//! vectors, character values live in cyclotomic fields extended by `sqrt(q)`,
//! and every dimension or test value is an integer or an exact field element.
//! There is no floating point anywhere on a correctness path.

pub mod characters;
pub mod cyclotomic;
pub mod error;
pub mod groups;
pub mod local_rings;
pub mod principal_series;
pub mod formulas;
pub mod supercuspidal;
pub mod verify;
pub mod whittaker;

pub use error::{Error, Result};
