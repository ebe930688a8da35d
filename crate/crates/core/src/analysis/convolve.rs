use serde::{Deserialize, Serialize};

use super::fit::FWHM_PER_SIGMA;
use super::reconstruct::golden_max;
use super::Weights;
use crate::profile::Profile;
use crate::{Error, Result};

/// Kernel half-width in units of σ.
pub const KERNEL_REACH: f64 = 5.0;

/// Discrete convolution with a unit-sum Gaussian kernel cut at ±5σ. Mass
/// pushed beyond the ends of the axis is dropped.
pub fn convolve_gaussian(profile: &Profile, sigma: f64) -> Result<Profile> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::Domain(format!(
            "resolution sigma must be finite and >= 0, got {sigma}"
        )));
    }
    let step = profile
        .uniform_step()
        .ok_or_else(|| Error::Data("convolution needs uniformly spaced samples".into()))?;
    if sigma == 0.0 {
        return Ok(profile.clone());
    }
    let reach = (KERNEL_REACH * sigma / step).floor() as usize;
    let mut kernel: Vec<f64> = (0..=reach)
        .map(|j| (-0.5 * (j as f64 * step / sigma).powi(2)).exp())
        .collect();
    let norm = kernel[0] + 2.0 * kernel[1..].iter().sum::<f64>();
    kernel.iter_mut().for_each(|k| *k /= norm);

    let n = profile.len();
    let mut out = vec![0.0; n];
    for (i, &v) in profile.y.iter().enumerate() {
        if v == 0.0 {
            continue;
        }
        let a = i.saturating_sub(reach);
        let b = (i + reach).min(n - 1);
        for (j, o) in out.iter_mut().enumerate().take(b + 1).skip(a) {
            *o += v * kernel[i.abs_diff(j)];
        }
    }
    Profile::new(profile.x.clone(), out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResolutionFit {
    pub sigma: f64,
    /// Half-width of the interval where χ² rises by one (scaled by the
    /// reduced χ² for unit weights).
    pub sigma_err: f64,
    pub fwhm: f64,
    pub fwhm_err: f64,
    /// Free scale applied to the broadened theory.
    pub scale: f64,
    pub chi2: f64,
    pub reduced_chi2: f64,
    pub points: usize,
}

pub const MAX_RESOLUTION_SIGMA: f64 = 1.0;

/// Fits the Gaussian resolution σ that best turns `theory` into `measured`.
/// Theory is broadened on its own (uniform) axis and interpolated at the
/// measured abscissae; only measured points inside the theory range count.
pub fn fit_resolution(theory: &Profile, measured: &Profile, weights: &Weights) -> Result<ResolutionFit> {
    theory
        .uniform_step()
        .ok_or_else(|| Error::Data("theory curve must be uniformly sampled".into()))?;
    let (t_lo, t_hi) = (theory.x[0], theory.x[theory.len() - 1]);
    let keep: Vec<usize> = (0..measured.len())
        .filter(|&i| measured.x[i] >= t_lo && measured.x[i] <= t_hi)
        .collect();
    if keep.len() < 3 {
        return Err(Error::Data(format!(
            "theory [{t_lo}, {t_hi}] and measured [{}, {}] curves share fewer than 3 points",
            measured.x.first().copied().unwrap_or(f64::NAN),
            measured.x.last().copied().unwrap_or(f64::NAN)
        )));
    }
    let xs: Vec<f64> = keep.iter().map(|&i| measured.x[i]).collect();
    let ys: Vec<f64> = keep.iter().map(|&i| measured.y[i]).collect();
    let w: Vec<f64> = match weights {
        Weights::Unit => vec![1.0; xs.len()],
        Weights::Poisson => ys.iter().map(|&c| 1.0 / c.max(1.0)).collect(),
        Weights::Sigma(s) => {
            if s.len() != measured.len() {
                return Err(Error::Data(
                    "sigma vector length differs from the measured curve".into(),
                ));
            }
            keep.iter().map(|&i| 1.0 / (s[i] * s[i])).collect()
        }
    };

    let chi2_at = |sigma: f64| -> Result<(f64, f64)> {
        let broadened = convolve_gaussian(theory, sigma)?;
        let t: Vec<f64> = xs.iter().map(|&x| broadened.interpolate(x)).collect();
        let num: f64 = (0..t.len()).map(|i| w[i] * ys[i] * t[i]).sum();
        let den: f64 = (0..t.len()).map(|i| w[i] * t[i] * t[i]).sum();
        let scale = if den > 0.0 { num / den } else { 0.0 };
        let chi2 = (0..t.len()).map(|i| w[i] * (ys[i] - scale * t[i]).powi(2)).sum();
        Ok((chi2, scale))
    };
    let chi2 = |s: f64| chi2_at(s).map(|c| c.0).unwrap_or(f64::INFINITY);

    // Coarse scan, then golden section around the best node.
    let grid = 200;
    let step = MAX_RESOLUTION_SIGMA / grid as f64;
    let mut best = (0.0, f64::INFINITY);
    for k in 0..=grid {
        let s = k as f64 * step;
        let c = chi2(s);
        if c < best.1 {
            best = (s, c);
        }
    }
    let a = (best.0 - step).max(0.0);
    let b = (best.0 + step).min(MAX_RESOLUTION_SIGMA);
    let mut sigma = golden_max(|s| -chi2(s), a, b, 1e-9);
    if chi2(0.0) <= chi2(sigma) {
        sigma = 0.0;
    }
    let (chi2_min, scale) = chi2_at(sigma)?;
    let dof = xs.len().saturating_sub(2).max(1);
    let reduced = chi2_min / dof as f64;
    let rise = match weights {
        Weights::Unit => reduced,
        _ => 1.0,
    };

    // Δχ² interval by bisection on each side.
    let crossing = |toward: f64| -> Option<f64> {
        let target = chi2_min + rise;
        if chi2(toward) < target {
            return None;
        }
        let (mut inside, mut outside) = (sigma, toward);
        for _ in 0..100 {
            let mid = 0.5 * (inside + outside);
            if chi2(mid) < target {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        Some(0.5 * (inside + outside))
    };
    let sigma_err = if rise == 0.0 {
        0.0
    } else {
        match (crossing(0.0), crossing(MAX_RESOLUTION_SIGMA)) {
            (Some(lo), Some(hi)) => 0.5 * (hi - lo),
            (None, Some(hi)) => hi - sigma,
            (Some(lo), None) => sigma - lo,
            (None, None) => MAX_RESOLUTION_SIGMA,
        }
    };
    Ok(ResolutionFit {
        sigma,
        sigma_err,
        fwhm: FWHM_PER_SIGMA * sigma,
        fwhm_err: FWHM_PER_SIGMA * sigma_err,
        scale,
        chi2: chi2_min,
        reduced_chi2: reduced,
        points: xs.len(),
    })
}
