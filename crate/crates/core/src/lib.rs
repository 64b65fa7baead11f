pub mod analytics;
pub mod channel;
pub mod crossing;
pub mod error;
pub mod montecarlo;
pub mod quad;
pub mod sim;
pub mod specfun;

pub use error::{Error, Result};
pub use specfun::Tolerance;
