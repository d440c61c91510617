//! Statistical disclosure control over tabular microdata.
//!
//! The crate is `no_std` and needs only `alloc`. Tables are immutable values;
//! every operation returns a fresh table and all randomness flows from
//! explicit seeds through [`rng::Rng`], so identical inputs reproduce
//! identical outputs.
//!
//! * [`table`]: attributes, cells, tables, partitions and column summaries
//! * [`nonperturbative`]: suppression, generalization, k-anonymity, l-diversity
//! * [`perturbative`]: noise, swapping, coding, rounding, recoding, imputation,
//!   blurring and synthetic data
//! * [`dp`]: the Laplace mechanism with budget accounting
//! * [`utility`]: distortion metrics and the audit report

#![no_std]

extern crate alloc;

pub mod dp;
pub mod error;
pub mod hierarchy;
pub mod nonperturbative;
pub mod perturbative;
pub mod rng;
pub mod stats;
pub mod table;
pub mod utility;

pub use error::{Error, Result};
pub use hierarchy::GeneralizationHierarchy;
pub use table::{AttributeKind, AttributeMeta, Cell, DataClass, Table};
