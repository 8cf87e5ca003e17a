pub mod basis;
pub mod dataset;
pub mod dmp;
pub mod error;
pub mod kinematics;
pub mod linalg;
pub mod metrics;
pub mod promp;
pub mod regressor;
pub mod training;

pub use error::{Error, Result};
