//! Ext over A(2), the Adams spectral sequence for tmf, and the synthetic
//! τ-Bockstein chart of π_{*,*}(ν tmf) with its hidden-extension checks.

pub mod chartio;
pub mod error;
pub mod extensions;
pub mod f2linalg;
pub mod resolution;
pub mod specseq;
pub mod steenrod;
pub mod synthetic;

pub use error::{Error, Result};
pub use f2linalg::{EchelonBasis, F2Matrix, F2Vector};
pub use resolution::{Bidegree, ExtClass, Naming, Resolution};
pub use steenrod::{MilnorElement, MilnorMonomial};
