pub mod error;
pub mod kernel;
pub mod linalg;
pub mod oracles;
pub mod poly;
pub mod problem;
pub mod reference;
pub mod report;
pub mod solver;
pub mod typos;
pub mod verify;

pub use error::{Error, Result};
