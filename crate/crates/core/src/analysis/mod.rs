//! Inverse pipeline: momentum reconstruction, histograms, fits and target
//! characterization.

mod absorption;
mod convolve;
mod fit;
mod histogram;
mod reconstruct;
mod scan;
mod thermometry;

pub use absorption::{
    absorption_analysis, resonant_cross_section_cm2, synthetic_images, AbsorptionResult, Image, IMAGING_WAVELENGTH_NM,
};
pub use convolve::{convolve_gaussian, fit_resolution, ResolutionFit, KERNEL_REACH, MAX_RESOLUTION_SIGMA};
pub use fit::{
    fit_gaussian_1d, fit_gaussian_from, initial_guess, FitOptions, GaussianFit, GaussianParams, Weights, FWHM_PER_SIGMA,
};
pub use histogram::{histogram, histogram_with, HistAxis, Histogram, Slice};
pub use reconstruct::{
    calibrate, linear_pz, reconstruct, reconstruct_all, Calibration, CalibrationOptions, MomentumRecord, T0Estimator,
    MIN_CALIBRATION_EVENTS, TOF_TOLERANCE_NS,
};
pub use scan::{poisson_counts, scan_positions, scan_profile, synthetic_scan, ScanFit, MIN_SCAN_POINTS};
pub use thermometry::{synthetic_expansion, temperature_from_expansion, ExpansionFit, ExpansionPoint};
