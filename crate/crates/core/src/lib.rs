//! Design, verification, and exact simulation of pulse-modulated dosing
//! feedback for a positive Wiener PK/PD plant.
//!
//! The plant is a three-compartment linear block (lower-triangular, Metzler,
//! Hurwitz) driving a static decreasing Hill output map. The controller
//! fires dose impulses: at each firing it reads the concentration `ȳ` and
//! schedules the next dose `λ_n = F(ȳ)` after interval `T_n = Φ(ȳ)`, where
//! `F` and `Φ` are saturated affine functions of the *measured* effect
//! `φ(ȳ)`. The crate covers:
//!
//! * [`model`] — plant construction and its exact matrix exponential;
//! * [`modulation`] — the saturated dose/interval maps;
//! * [`cycle`] — periodic solutions, output extrema, orbital stability;
//! * [`feasibility`] — can an effect corridor be held at all, and at what
//!   minimal dose;
//! * [`design`] — synthesis of modulation coefficients from a desired
//!   cycle and feedback slopes;
//! * [`sim`] — event-exact closed-loop simulation (no ODE solver);
//! * [`bifurcation`] — parameter sweeps and orbit classification.

pub use nalgebra;

pub mod bifurcation;
pub mod cycle;
pub mod design;
pub mod error;
pub mod feasibility;
pub mod model;
pub mod modulation;
pub mod sim;

pub use error::{Error, Result};
