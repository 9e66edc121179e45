pub mod diagnostics;
pub mod error;
pub mod json;
pub mod linalg;
pub mod operators;
pub mod posinormality;
pub mod registry;
pub mod run;
pub mod scenario;
pub mod series;

pub use error::{Error, Result};
