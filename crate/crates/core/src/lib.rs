//! Reductions from binary classification to stochastic convex optimization,
//! half-space representations of concept classes, and the numerical checks
//! used to verify them.

pub mod classes;
pub mod error;
pub mod learning;
pub mod reductions;
pub mod representations;
pub mod rng;
pub mod sco;
pub mod topology;
pub mod vecops;

pub use classes::{ConceptClass, FiniteConceptClass, Halfspace};
pub use error::{Error, Result};
pub use learning::{
    FiniteDistribution, Hypothesis, Label, LabeledExample, LossValue, OptTarget, OptValue,
};
pub use reductions::{Reduction, Target};
pub use representations::Representation;
pub use sco::{ConvexDomain, ScoTask, SolverConfig, SolverReport};
