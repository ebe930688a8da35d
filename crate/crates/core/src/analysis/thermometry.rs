use serde::{Deserialize, Serialize};

use crate::units::codata::{AMU_KG, BOLTZMANN_J_PER_K};
use crate::{Error, Result};

/// Cloud size after a free-expansion time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpansionPoint {
    pub t_ms: f64,
    pub sigma_mm: f64,
    /// Uncertainty of `sigma_mm`; unit weights when absent.
    #[serde(default)]
    pub sigma_err_mm: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpansionFit {
    pub temperature_uk: f64,
    pub temperature_err_uk: f64,
    /// sqrt(k_B T / m).
    pub speed_m_per_s: f64,
    pub speed_err_m_per_s: f64,
    pub sigma0_mm: f64,
    pub chi2: f64,
    pub points: usize,
}

/// Weighted straight-line fit of σ² against t²: σ² = σ₀² + (k_B T/m) t².
pub fn temperature_from_expansion(series: &[ExpansionPoint], mass_amu: f64) -> Result<ExpansionFit> {
    if series.len() < 3 {
        return Err(Error::Data(format!(
            "expansion thermometry needs at least 3 time points, got {}",
            series.len()
        )));
    }
    if !(mass_amu > 0.0) {
        return Err(Error::Domain(format!("mass must be positive, got {mass_amu} u")));
    }
    let mut x = Vec::with_capacity(series.len());
    let mut y = Vec::with_capacity(series.len());
    let mut w = Vec::with_capacity(series.len());
    for (i, p) in series.iter().enumerate() {
        if !p.t_ms.is_finite() || !(p.sigma_mm > 0.0) {
            return Err(Error::Data(format!(
                "expansion point {i}: need finite time and positive size"
            )));
        }
        x.push(p.t_ms * p.t_ms);
        y.push(p.sigma_mm * p.sigma_mm);
        w.push(match p.sigma_err_mm {
            Some(e) if e > 0.0 => 1.0 / (2.0 * p.sigma_mm * e).powi(2),
            Some(e) => {
                return Err(Error::Data(format!(
                    "expansion point {i}: size error {e} must be positive"
                )))
            }
            None => 1.0,
        });
    }
    let sw: f64 = w.iter().sum();
    let sx: f64 = (0..x.len()).map(|i| w[i] * x[i]).sum();
    let sy: f64 = (0..x.len()).map(|i| w[i] * y[i]).sum();
    let sxx: f64 = (0..x.len()).map(|i| w[i] * x[i] * x[i]).sum();
    let sxy: f64 = (0..x.len()).map(|i| w[i] * x[i] * y[i]).sum();
    let det = sw * sxx - sx * sx;
    if !(det > 0.0) {
        return Err(Error::Data("expansion times must not all be equal".into()));
    }
    let mut slope = (sw * sxy - sx * sy) / det;
    let intercept = (sxx * sy - sx * sxy) / det;
    let chi2: f64 = (0..x.len())
        .map(|i| w[i] * (y[i] - intercept - slope * x[i]).powi(2))
        .sum();
    let dof = (x.len() - 2) as f64;
    let scale = if series.iter().all(|p| p.sigma_err_mm.is_none()) {
        chi2 / dof
    } else {
        1.0
    };
    let slope_err = (sw / det * scale).sqrt();

    // Round-off on a flat series can leave a slope a few ulps below zero.
    let tiny = 1e-12 * (sy / sw).abs() / (sx / sw).max(f64::MIN_POSITIVE);
    if slope < -tiny {
        return Err(Error::Data(format!(
            "cloud shrinks during expansion (slope {slope:.3e} mm²/ms²): unphysical"
        )));
    }
    slope = slope.max(0.0);
    // mm²/ms² = (m/s)²
    let mass_kg = mass_amu * AMU_KG;
    let t_k = mass_kg * slope / BOLTZMANN_J_PER_K;
    let speed = slope.sqrt();
    Ok(ExpansionFit {
        temperature_uk: t_k * 1e6,
        temperature_err_uk: mass_kg * slope_err / BOLTZMANN_J_PER_K * 1e6,
        speed_m_per_s: speed,
        speed_err_m_per_s: if speed > 0.0 {
            slope_err / (2.0 * speed)
        } else {
            slope_err.sqrt()
        },
        sigma0_mm: intercept.max(0.0).sqrt(),
        chi2,
        points: x.len(),
    })
}

/// Noise-free series for a cloud at `temperature_uk`.
pub fn synthetic_expansion(
    temperature_uk: f64,
    mass_amu: f64,
    sigma0_mm: f64,
    times_ms: &[f64],
) -> Vec<ExpansionPoint> {
    let v2 = BOLTZMANN_J_PER_K * temperature_uk * 1e-6 / (mass_amu * AMU_KG);
    times_ms
        .iter()
        .map(|&t| ExpansionPoint {
            t_ms: t,
            sigma_mm: (sigma0_mm * sigma0_mm + v2 * t * t).sqrt(),
            sigma_err_mm: None,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::codata::RB85_AMU;

    #[test]
    fn recovers_mot_temperature() {
        let times: Vec<f64> = (0..8).map(|i| 2.0 + 2.0 * i as f64).collect();
        let s = synthetic_expansion(130.0, RB85_AMU, 0.4, &times);
        let fit = temperature_from_expansion(&s, RB85_AMU).unwrap();
        assert!((fit.temperature_uk - 130.0).abs() < 0.02 * 130.0);
        assert!((fit.speed_m_per_s - 0.113).abs() < 1e-3, "{}", fit.speed_m_per_s);
        assert!((fit.sigma0_mm - 0.4).abs() < 1e-9);
    }

    #[test]
    fn flat_series_is_zero_temperature() {
        let s = synthetic_expansion(0.0, RB85_AMU, 0.5, &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(temperature_from_expansion(&s, RB85_AMU).unwrap().temperature_uk, 0.0);
    }

    #[test]
    fn bad_inputs() {
        let s = synthetic_expansion(100.0, RB85_AMU, 0.5, &[1.0, 2.0]);
        assert!(matches!(temperature_from_expansion(&s, RB85_AMU), Err(Error::Data(_))));
        let mut shrinking = synthetic_expansion(100.0, RB85_AMU, 0.5, &[1.0, 2.0, 3.0]);
        shrinking.reverse();
        for (p, t) in shrinking.iter_mut().zip([1.0, 2.0, 3.0]) {
            p.t_ms = t;
        }
        assert!(matches!(
            temperature_from_expansion(&shrinking, RB85_AMU),
            Err(Error::Data(_))
        ));
    }

    #[test]
    fn weighted_errors_are_propagated() {
        let times = [2.0, 4.0, 6.0, 8.0, 10.0];
        let mut s = synthetic_expansion(130.0, RB85_AMU, 0.3, &times);
        s.iter_mut().for_each(|p| p.sigma_err_mm = Some(0.01));
        let fit = temperature_from_expansion(&s, RB85_AMU).unwrap();
        assert!(fit.temperature_err_uk > 0.0 && fit.temperature_err_uk < 20.0, "{fit:?}");
    }
}
