//! Two-qubit open-system dynamics and entanglement sudden death.
//!
//! - [`state`]: density matrices, X states, named families and literals.
//! - [`entanglement`]: partial transpose, negativity, position relative to the separable set.
//! - [`channels`]: reservoir catalog, Lindblad generators, closed-form and RK4 propagation.
//! - [`dynamics`]: trajectories, death times, crossing counts, long-time limits.
//! - [`classify`]: scenario labels from asymptotic sets.
//! - [`cli`]: the `esd` command-line tool.

pub mod channels;
pub mod classify;
pub mod cli;
pub mod dynamics;
pub mod entanglement;
pub mod linalg;
pub mod state;

pub use channels::{asymptotic_set, AsymptoticSet, ChannelError, ChannelSpec, XFamily};
pub use classify::{classify_channel, classify_set, Case, Family, ScenarioLabel};
pub use dynamics::{death_time, DeathReport, DeathVerdict, Trajectory};
pub use entanglement::{negativity, Region};
pub use state::{DensityMatrix, StateError, Tolerances, XState};
