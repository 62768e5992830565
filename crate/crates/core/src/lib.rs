//! Solvers for parallel drone scheduling routing problems with
//! collective (coupled) drones.
//!
//! One depot, `s` trucks touring customers, `m` drones flying
//! depot-customer-depot missions. A mission may couple several drones,
//! which shortens it; every coupled drone is busy for the whole mission
//! and a mission starts only once all of its drones are free. The
//! objective is the completion time of the last vehicle (makespan).

pub mod cli;
pub mod emit;
pub mod exact;
pub mod heuristic;
pub mod instance;
pub mod scheduler;
pub mod solution;
pub mod time;
