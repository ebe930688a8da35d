//! Simulation and analysis toolkit for recoil-ion momentum spectroscopy of
//! laser-cooled rubidium in strong laser fields.
//!
//! The forward chain is
//! [`strongfield`] (SFA momentum distributions) →
//! [`ensemble`] (target, focus and Monte Carlo ionization events) →
//! [`apparatus`] (spectrometer and detector model),
//! and [`analysis`] inverts it: momentum reconstruction, histograms, Gaussian
//! and resolution fits, and cold-target characterization. [`io`] holds the
//! file formats and configuration; [`pipeline`] wires everything into the
//! runs exposed by the command-line tool.
//!
//! Physics is done in Hartree atomic units; see [`units`].

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod apparatus;
pub mod ensemble;
mod error;
pub mod exec;
pub mod io;
pub mod pipeline;
pub mod profile;
pub mod rng;
pub mod strongfield;
pub mod units;

pub use error::{Error, Result};
pub use exec::Exec;
pub use profile::Profile;

pub type Vec3 = nalgebra::Vector3<f64>;
