//! Behavioral simulator of a convective MEMS accelerometer read out by a
//! first-order electro-thermal sigma-delta modulator.
//!
//! * [`physics`]: heater, conduction profile, convective sensitivity,
//!   Wheatstone read-out, Johnson noise and the resulting operating point.
//! * [`dynamics`]: fluid and detector thermal lags.
//! * [`modulator`]: the closed loop producing a ±1 bit-stream.
//! * [`analysis`]: spectra, noise and signal transfer, resolution.
//! * [`config`] and [`experiments`]: file-driven runs behind the CLI.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod bitstream;
pub mod config;
pub mod dynamics;
pub mod experiments;
mod error;
pub mod input;
pub mod modulator;
pub mod physics;

pub use bitstream::BitStream;
pub use error::{Error, Result};
pub use input::Input;
pub use modulator::{simulate, simulate_ideal, Integrator, Modulator, ModulatorConfig};
pub use physics::{BridgeVariant, OperatingPoint, SensorParameters};
