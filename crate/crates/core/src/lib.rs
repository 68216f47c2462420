//! Compact cognitive maps for navigation among pedestrians.
//!
//! A dynamic scene is compacted into a static arrival-time field: a wavefront
//! launched from the agent's cell explores an excitable lattice while
//! predicted pedestrian footprints are fed in, and every place where the
//! front meets a footprint freezes into an effective obstacle. Paths are
//! then traced by gradient descent on the arrival field.
//!
//! Two assumptions about the humans are supported: [`Mode::AvUs`] treats them
//! as moving objects that never react, [`Mode::CoUs`] lets a human whose
//! reaction zone is entered head-on step aside.
//!
//! The crate is `no_std` (it needs `alloc`); file formats, the command line
//! and the ensemble runner live in the `ccmap` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod generate;
pub mod geom;
pub mod lattice;
pub mod metrics;
pub mod planner;
pub mod scenario;
pub mod sim;
pub mod social;
pub mod tmnn;

pub use error::Error;
pub use geom::{GridIndex, GridMapping, Vec2};
pub use scenario::{Mode, Obstacle, Pedestrian, Scenario};
