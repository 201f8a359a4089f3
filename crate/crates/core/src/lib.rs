//! Enumeration of alternating two-leg diagrams with crossings and
//! tangencies, the tangle renormalisation built on their counts, and the
//! asymptotic analysis of the resulting series.

pub mod analysis;
pub mod arch_state;
pub mod fixtures;
pub mod oracle;
pub mod series;
pub mod table;
pub mod tadpoles;
pub mod transfer;
pub mod truncation;
pub mod weight;

pub use arch_state::{ArchState, Role, StateKey, ValidationReport};
pub use table::{crt_combine, CoefficientTable, Count};
pub use transfer::{enumerate, enumerate_raw, EnumerationOptions, RunControl};
pub use truncation::{TangencyCutoff, Truncation};
