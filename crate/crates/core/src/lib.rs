//! Fair division of indivisible mixed manna: items that may be goods for
//! some agents and bads for others.
//!
//! The crate holds the exact-rational problem model, checkers for envy and
//! proportionality relaxations, envy graphs, the allocation algorithms and
//! an exhaustive oracle for small instances.

pub mod algorithms;
pub mod allocation;
pub mod fairness;
pub mod graph;
pub mod instance;
pub mod oracle;
pub mod rational;

pub use algorithms::{solve, AlgorithmError, AlgorithmId, SolveResult, TraceStep};
pub use allocation::{Allocation, AllocationError};
pub use fairness::{FairnessError, FairnessNotion, FairnessReport, NashSignature, Witness};
pub use graph::{EnvyGraph, GraphMode};
pub use instance::{
    classify, partition_items, Agent, Instance, InstanceClass, InstanceError, Item, ItemPartition,
};
pub use oracle::{OracleError, PredicateSet};
pub use rational::Rational;
