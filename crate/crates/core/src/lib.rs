//! Numerical lab for transport-entropy and restricted log-Sobolev inequalities
//! on one-dimensional grids and their two-fold products.

pub mod constants;
pub mod cost;
pub mod error;
pub mod family;
pub mod measure;
pub mod par;
pub mod report;
pub mod scalar;
pub mod semigroup;
pub mod transport;
pub mod verify;

pub use cost::{AlphaCost, SeparableCost};
pub use error::{Error, Result};
pub use family::TestFamily;
pub use measure::{Grid1D, GridFunction, GridMeasure, MeasureSpec, ProductMeasure};
pub use report::InequalityReport;
