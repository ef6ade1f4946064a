//! Scoring IP blocks for eFPGA redaction, planning hybrid ASIC/eFPGA
//! partitions under a fabric budget, and estimating deployment carbon and
//! aging-aware slack for the resulting design.

pub mod aging;
pub mod carbon;
pub mod ecoscore;
pub mod error;
pub mod model;
pub mod partition;
pub mod pipeline;
pub mod report;

pub use error::{Error, Result};
