//! Hochschild cochain complexes over finite-dimensional complex algebras,
//! defect measurement for Pexiderized approximate cocycles, the Hyers
//! repair iteration, and probes relating stability to vanishing cohomology.

pub mod algebra;
pub mod cochain;
pub mod defect;
pub mod error;
pub mod experiment;
pub mod hyers;
pub mod io;
pub mod linalg;
pub mod report;
pub mod scalar;
pub mod vanishing;

pub use algebra::{Algebra, Bimodule, Certificate, Violation};
pub use cochain::{Cochain, CohomologyDims, MultiMap};
pub use defect::{
    DefectReport, LambdaSet, PerturbationKind, PexiderTriple, PointwiseMap, SamplingPlan, SpanningSet,
};
pub use error::{Error, Result};
pub use experiment::{run, ExperimentConfig, Task};
pub use hyers::{BoundLedger, BoundRecord, HyersTrace, RepairOptions, RepairResult};
pub use report::{render, Format, StabilityReport};
pub use scalar::{Exact, Scalar, C64};
pub use vanishing::{TrialPlan, VanishingVerdict};
