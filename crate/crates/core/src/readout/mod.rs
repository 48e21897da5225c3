//! Optical displacement readouts.
//!
//! * [`FpiReadout`]: Fabry-Perot cavity whose length changes are tracked by
//!   the laser frequency. High sensitivity, sub-wavelength dynamic range.
//! * [`HliReadout`]: heterodyne laser interferometer, long range, used as
//!   the feedback error signal while the motion is large.
//! * [`Phasemeter`]: I/Q demodulator with a first-order low-pass filter that
//!   turns the heterodyne beat into an unwrapped phase.

mod fpi;
mod hli;
mod phasemeter;

pub use fpi::FpiReadout;
pub use hli::HliReadout;
pub use phasemeter::{extract_phase, Phasemeter};
