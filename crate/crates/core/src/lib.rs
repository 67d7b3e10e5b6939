//! Simulation kernels for Ray-Knight type identities on finite weighted graphs.
//!
//! The crate is `no_std` (it needs `alloc`) and contains only the pure
//! algorithmic pieces:
//!
//! * [`graph`]: validated weighted graphs, the Dirichlet form and the Green
//!   function killed outside `U = V \ {x0}`.
//! * [`gff`]: the Gaussian free field pinned to zero at `x0`.
//! * [`path`] and [`mjp`]: piecewise-constant jump paths, local times and the
//!   Markov jump process with its stopping rules.
//! * [`ising`]: exact enumeration of Ising models with `+1` boundary at `x0`.
//! * [`hazard`]: inversion of a time-varying cumulative hazard.
//! * [`reinforced`]: the time-changed vertex-reinforced jump process, its
//!   reversal, and the magnetized reversed process.
//! * [`functionals`]: the path martingales and Radon-Nikodym densities.
//! * [`stream`]: counter-based random streams for reproducible replicates.
//!
//! Vertices are plain `usize` indices in the order the graph was declared.
//! Any vector "over U" uses that order with `x0` removed.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod functionals;
pub mod gff;
pub mod graph;
pub mod hazard;
pub mod ising;
pub mod mjp;
pub mod path;
pub mod reinforced;
pub mod stream;

mod math;

pub use error::{Error, GraphError, Result};
pub use graph::{Edge, FieldVector, GraphDescription, WeightedGraph};
pub use ising::{IsingSpec, SpinVector};
pub use path::{EndReason, Jump, JumpPath, LocalTimes};
