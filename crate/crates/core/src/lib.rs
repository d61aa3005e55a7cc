pub mod balance;
pub mod error;
pub mod experiment;
pub mod forest;
pub mod metrics;
pub mod scenario;
pub mod sfc;
pub mod simcluster;

pub use error::{Error, Result};
