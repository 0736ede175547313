//! Curvature, Ricci and Szabó operators of torsion-free affine connections
//! and of their deformed Riemannian extensions, with seeded numerical
//! identity testing on top of a small symbolic differentiation engine.

pub mod affine;
pub mod commands;
pub mod error;
pub mod expr;
pub mod extension;
pub mod metric;
pub mod report;
pub mod smallnum;
pub mod spec;
pub mod tensor;
pub mod verdict;

pub use affine::{AffineConnection, Direction};
pub use error::{Error, Result};
pub use expr::{parse, Expr};
pub use extension::{deformed_extension, ExtensionMetric, SymmetricBilinearSpec};
pub use smallnum::{Matrix, SampleDomain};
pub use verdict::Verdict;
