//! Monte Carlo experiments for Ray-Knight identities and their inversions,
//! built on `rklab-core`.

pub mod cli;
pub mod experiments;
pub mod graph_file;
pub mod report;
pub mod stats;
