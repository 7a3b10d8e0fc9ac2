pub mod approximant;
pub mod error;
pub mod extension;
pub mod families;
pub mod fourier;
pub mod hypothesis;
pub mod input;
pub mod mollify;
pub mod optimize;
pub mod polar;
pub mod pseudoconvexity;
pub mod report;
pub mod smooth;
pub mod worked;

pub use error::{LabError, Result};
