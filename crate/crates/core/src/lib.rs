//! Models and simulation of a low-frequency optomechanical inertial sensor.
//!
//! The crate covers the mechanical test-mass resonator, its Fabry-Perot and
//! heterodyne readouts, the radiation-pressure feedback chain, closed-loop
//! cold-damping analysis, cascaded gain scheduling, and a seeded Langevin
//! simulator used to check the frequency-domain predictions.
//!
//! Conventions used throughout:
//!
//! * angular frequency in rad/s internally; conversion to Hz happens at the
//!   edges (see [`units`]),
//! * all spectral densities are single-sided, so a variance is
//!   `∫ S(f) df = ∫ S(ω) dω / 2π`,
//! * SI units everywhere.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]
#![deny(unsafe_code)]
// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod cascade;
pub mod cooling;
mod error;
pub mod feedback;
pub mod fft;
pub mod numeric;
pub mod readout;
pub mod resonator;
pub mod rng;
pub mod sim;
pub mod spectrum;
pub mod units;

pub use error::{Error, Result};
pub use num_complex::Complex64;
