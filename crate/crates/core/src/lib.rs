//! Graph bimodules, their Fock modules and Cuntz–Pimsner algebras, computed exactly or as
//! certified limits: Jones–Watatani indices, the residue expectation `Φ_∞`, the Fock
//! projection of the module `(O_E)^Φ_A`, and the KMS₁ state of the index dynamics.

pub mod algebra;
pub mod catalog;
pub mod cuntz_pimsner;
pub mod error;
pub mod fock;
pub mod graph;
pub mod kms;
pub mod spectral;

pub use algebra::{AlgebraElement, VertexSet, DEFAULT_TOL};
pub use cuntz_pimsner::{covariance_substitute, Expectation, ModuleClass, SpanningElement, TruncatedModule};
pub use error::{Error, Result};
pub use fock::{FockVector, Path};
pub use graph::{GraphBimodule, GraphSpec, ModuleVector};
pub use kms::{Dynamics, TraceState};
pub use spectral::{PFData, ResidueConfig, ResidueMode, ResidueReport};
