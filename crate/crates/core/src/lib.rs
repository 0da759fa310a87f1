pub mod bitset;
pub mod ce;
pub mod clique;
pub mod colgen;
pub mod error;
pub mod format;
pub mod instances;
pub mod limits;
pub mod linalg;
pub mod lp;
pub mod num;
pub mod probability;
pub mod qm;
pub mod report;
pub mod scenario;

pub use error::{Error, Result};
pub use limits::Limits;
pub use num::{Rational, Scalar, Surd};
