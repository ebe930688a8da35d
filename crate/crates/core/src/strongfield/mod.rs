//! Strong-field approximation for single ionization of rubidium by a
//! linearly polarized sin² pulse, and the scalar strong-field diagnostics.

mod amplitude;
mod energetics;
mod grid;
mod pulse;
mod sampling;
mod spectrum;
mod state;

pub use amplitude::{
    action_phase, amplitude, amplitude_reduced, dipole_element, dipole_prefactor, AmplitudeEstimate, QuadratureOptions,
    ReducedMomentum, TimeTable,
};
pub use energetics::{
    excess_energy, keldysh, minimum_photons, ponderomotive_energy, ring_momenta, Energy, ExcessEnergy, Keldysh, Regime,
};
pub use grid::{Axis, Component, MomentumGrid};
pub use pulse::{Envelope, LaserPulse, PulseSpec, SYMMETRIC_CEP};
pub use sampling::{sample_recoil_momenta, sample_recoil_momenta_with, RecoilSampler};
pub use spectrum::{incoherent_sum, spectrum, spectrum_with, SpectrumMap, SpectrumMeta, ION_MOMENTUM_CONVENTION};
pub use state::{Channel, InitialState};
