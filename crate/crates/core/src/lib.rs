//! Derived smooth induction of the trivial representation from congruence
//! subgroups of split reductive p-adic groups: root data, filtration shapes,
//! Lazard cohomology, restriction transitions and p-adic matrix checks.

pub mod arith;
pub mod catalog;
pub mod cohomology;
pub mod error;
pub mod filtration;
pub mod oracle;
pub mod padic;
pub mod rootdata;
pub mod transition;

pub use catalog::{parse_catalog, run_catalog, CatalogEntry, CatalogReport, RunConfig};
pub use error::{Error, Result};
pub use rootdata::{GroupProfile, ProfileSpec};
