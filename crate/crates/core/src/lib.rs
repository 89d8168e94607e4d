//! Causal control laboratory.
//!
//! Samples linear time-series structural causal models with latent
//! confounders, discovers their time-series partial ancestral graph from
//! mixed observational/interventional data, and drives a regret-scored
//! intervention loop that plans through every MAG the discovered graph
//! admits.
//!
//! The modules mirror the pipeline:
//!
//! - [`graph`]: edgemarks, time-series PAG/MAG/DAG types, collider
//!   orientation, MAG enumeration and a d-separation oracle.
//! - [`scm`]: SCM sampling, stationarity, data generation and the do-operator.
//! - [`stats`]: (partial) correlation tests and Gaussian moment fitting.
//! - [`idiscovery`]: ancestry constraints from interventional samples.
//! - [`odiscovery`]: constraint-seeded observational discovery.
//! - [`control`]: intervention menus, SCM reconstruction and optimistic planning.
//! - [`experiment`]: the closed loop, regret scoring, aggregation and sweeps.

pub mod control;
pub mod error;
pub mod experiment;
pub mod graph;
pub mod idiscovery;
pub mod odiscovery;
pub mod scm;
pub mod stats;

pub use error::{Error, Result};
pub use graph::{Dag, Edgemark, End, Link, LinkKey, Mag, Node, TsPag};
pub use idiscovery::{Constraint, ConstraintList};
pub use scm::{Intervention, Scm, Series};
