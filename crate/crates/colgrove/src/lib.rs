//! File formats, dataset handling, cluster simulation and the scan harness
//! built on `colgrove-core`.

pub mod cif;
pub mod cluster;
pub mod dataset;
pub mod error;
pub mod experiments;
pub mod generate;
pub mod io;
pub mod jobs;
pub mod pax;
pub mod scan;
pub mod seq;
pub mod txt;

pub use dataset::{Dataset, Format, WriteConfig};
pub use error::{Error, Result};
