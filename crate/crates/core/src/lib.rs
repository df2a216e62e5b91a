//! Articulated 3D motion capture from pan-tilt cameras whose orientation
//! may be unknown.
//!
//! The crate is `no_std` (with `alloc`). File formats and the command line
//! driver live in the companion `ptzcap` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod camera;
pub mod energy;
pub mod lbfgs;
pub mod metrics;
pub mod motion_basis;
pub mod observation;
pub mod rig;
pub mod rotation_from_background;
pub mod signal;
pub mod solver;
pub mod skeleton;
pub mod synth;
pub mod trajectory;
