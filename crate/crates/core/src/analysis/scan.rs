use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use super::{fit_gaussian_1d, GaussianFit, Weights};
use crate::ensemble::{scan_yield, FocusModel, TargetEnsemble};
use crate::rng::{substream, tag};
use crate::strongfield::Component;
use crate::{Error, Result, Vec3};

pub const MIN_SCAN_POINTS: usize = 5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanFit {
    pub fit: GaussianFit,
    pub fwhm_mm: f64,
    pub fwhm_err_mm: f64,
    pub center_mm: f64,
}

/// Gaussian fit of ionization counts against target position along one axis.
pub fn scan_profile(positions_mm: &[f64], counts: &[f64], weights: &Weights) -> Result<ScanFit> {
    if positions_mm.len() < MIN_SCAN_POINTS {
        return Err(Error::Data(format!(
            "a scan needs at least {MIN_SCAN_POINTS} points, got {}",
            positions_mm.len()
        )));
    }
    let fit = fit_gaussian_1d(positions_mm, counts, weights)?;
    Ok(ScanFit {
        fwhm_mm: fit.fwhm(),
        fwhm_err_mm: fit.fwhm_error(),
        center_mm: fit.params.center,
        fit,
    })
}

/// Evenly spaced positions `start, start + step, ...` up to `stop`.
pub fn scan_positions(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(stop > start) {
        return Err(Error::Domain(format!("bad scan range {start}..{stop} step {step}")));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..n).map(|i| start + i as f64 * step).collect())
}

/// Noise-free ionization yield with the target displaced to each position
/// along `axis`.
pub fn synthetic_scan(target: &TargetEnsemble, focus: &FocusModel, axis: Component, positions_mm: &[f64]) -> Vec<f64> {
    positions_mm
        .iter()
        .map(|&d| {
            let mut v = Vec3::zeros();
            v[axis.index()] = d;
            scan_yield(target, focus, v)
        })
        .collect()
}

/// Rescales `yields` so the largest is `peak_counts` and draws Poisson counts.
pub fn poisson_counts(yields: &[f64], peak_counts: f64, seed: u64) -> Result<Vec<f64>> {
    let max = yields.iter().cloned().fold(0.0, f64::max);
    if !(max > 0.0) || !(peak_counts > 0.0) {
        return Err(Error::Domain("poisson counts need a positive peak".into()));
    }
    yields
        .iter()
        .enumerate()
        .map(|(i, &y)| {
            let mean = y / max * peak_counts;
            if mean <= 0.0 {
                return Ok(0.0);
            }
            let mut rng = substream(seed, tag::SYNTHETIC, i as u64);
            Poisson::new(mean)
                .map(|d| d.sample(&mut rng))
                .map_err(|e| Error::Domain(format!("poisson mean {mean}: {e}")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_mot_widths() {
        let t = TargetEnsemble::mot3d();
        let f = FocusModel::default();
        let z = scan_positions(-2.0, 2.0, 0.08).unwrap();
        let fz = scan_profile(&z, &synthetic_scan(&t, &f, Component::Z, &z), &Weights::Unit).unwrap();
        assert!((fz.fwhm_mm - 1.22).abs() < 0.05 * 1.22, "{}", fz.fwhm_mm);
        let x = scan_positions(-0.8, 0.8, 0.08).unwrap();
        let fx = scan_profile(&x, &synthetic_scan(&t, &f, Component::X, &x), &Weights::Unit).unwrap();
        assert!((fx.fwhm_mm - 0.35).abs() < 0.02, "{}", fx.fwhm_mm);
    }

    #[test]
    fn noisy_scan_within_uncertainty() {
        let t = TargetEnsemble::mot3d();
        let z = scan_positions(-2.0, 2.0, 0.08).unwrap();
        let counts = poisson_counts(&synthetic_scan(&t, &FocusModel::default(), Component::Z, &z), 5000.0, 4).unwrap();
        let fit = scan_profile(&z, &counts, &Weights::Poisson).unwrap();
        assert!((fit.fwhm_mm - 1.22).abs() < 0.06, "{fit:?}");
    }

    #[test]
    fn flat_and_short_scans_fail() {
        let x = scan_positions(0.0, 1.0, 0.1).unwrap();
        assert!(matches!(
            scan_profile(&x, &vec![3.0; x.len()], &Weights::Unit),
            Err(Error::Fit { .. })
        ));
        assert!(matches!(
            scan_profile(&x[..4], &[1.0, 2.0, 1.0, 0.5], &Weights::Unit),
            Err(Error::Data(_))
        ));
    }
}
