use nalgebra::{Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// FWHM / σ for a Gaussian, 2·sqrt(2 ln 2).
pub const FWHM_PER_SIGMA: f64 = 2.354_820_045_030_949;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianParams {
    pub amplitude: f64,
    pub center: f64,
    pub sigma: f64,
    pub offset: f64,
}

impl GaussianParams {
    pub fn eval(&self, x: f64) -> f64 {
        let u = (x - self.center) / self.sigma;
        self.offset + self.amplitude * (-0.5 * u * u).exp()
    }

    fn to_vec(self) -> Vector4<f64> {
        Vector4::new(self.amplitude, self.center, self.sigma, self.offset)
    }

    fn from_vec(v: &Vector4<f64>) -> Self {
        GaussianParams {
            amplitude: v[0],
            center: v[1],
            sigma: v[2],
            offset: v[3],
        }
    }
}

/// Result of [`fit_gaussian_1d`]: `offset + amplitude·exp(−(x−center)²/2σ²)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianFit {
    pub params: GaussianParams,
    /// One-standard-deviation uncertainties, same layout as `params`.
    pub errors: GaussianParams,
    pub chi2: f64,
    pub reduced_chi2: f64,
    pub iterations: usize,
}

impl GaussianFit {
    pub fn fwhm(&self) -> f64 {
        FWHM_PER_SIGMA * self.params.sigma
    }

    pub fn fwhm_error(&self) -> f64 {
        FWHM_PER_SIGMA * self.errors.sigma
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.params.eval(x)
    }
}

/// Per-point uncertainties used as χ² weights.
#[derive(Clone, Debug, Default, PartialEq)]
pub enum Weights {
    /// σᵢ = 1; parameter errors are scaled by the reduced χ².
    #[default]
    Unit,
    /// Counting data, σᵢ = sqrt(max(yᵢ, 1)).
    Poisson,
    Sigma(Vec<f64>),
}

impl Weights {
    fn sigmas(&self, y: &[f64]) -> Result<Vec<f64>> {
        match self {
            Weights::Unit => Ok(vec![1.0; y.len()]),
            Weights::Poisson => Ok(y.iter().map(|v| v.max(1.0).sqrt()).collect()),
            Weights::Sigma(s) => {
                if s.len() != y.len() || s.iter().any(|v| !(*v > 0.0)) {
                    return Err(Error::Data("sigma weights must be positive, one per point".into()));
                }
                Ok(s.clone())
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// Converged when every parameter moves by less than this fraction (of σ
    /// for the centre, of the amplitude for the offset).
    pub rel_step: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_iterations: 1000,
            rel_step: 1e-8,
        }
    }
}

/// Starting point: offset = min, amplitude = max − min, centre = argmax,
/// σ from the half-maximum crossings around the peak.
pub fn initial_guess(x: &[f64], y: &[f64]) -> Result<GaussianParams> {
    validate(x, y)?;
    let (imax, &ymax) = y
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("validated non-empty");
    let ymin = y.iter().cloned().fold(f64::INFINITY, f64::min);
    let half = ymin + 0.5 * (ymax - ymin);
    let crossing = |range: &mut dyn Iterator<Item = usize>| -> Option<f64> {
        let mut prev = imax;
        for i in range {
            if y[i] < half {
                let f = (y[prev] - half) / (y[prev] - y[i]);
                return Some(x[prev] + f * (x[i] - x[prev]));
            }
            prev = i;
        }
        None
    };
    let left = crossing(&mut (0..imax).rev());
    let right = crossing(&mut (imax + 1..x.len()));
    let span = (x[x.len() - 1] - x[0]).abs();
    let fwhm = match (left, right) {
        (Some(l), Some(r)) => (r - l).abs(),
        (Some(l), None) => 2.0 * (x[imax] - l).abs(),
        (None, Some(r)) => 2.0 * (r - x[imax]).abs(),
        (None, None) => span / 2.0,
    };
    let sigma = (fwhm / FWHM_PER_SIGMA).max(span * 1e-6);
    Ok(GaussianParams {
        amplitude: ymax - ymin,
        center: x[imax],
        sigma,
        offset: ymin,
    })
}

fn validate(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::Data(format!("{} abscissae but {} values", x.len(), y.len())));
    }
    if x.len() < 5 {
        return Err(Error::Data(format!(
            "Gaussian fit needs at least 5 points, got {}",
            x.len()
        )));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Data("fit input contains non-finite values".into()));
    }
    let first = y[0];
    if y.iter().all(|v| *v == first) {
        return Err(Error::Fit {
            message: "constant profile, Gaussian is degenerate".into(),
            best: None,
        });
    }
    Ok(())
}

pub fn fit_gaussian_1d(x: &[f64], y: &[f64], weights: &Weights) -> Result<GaussianFit> {
    let start = initial_guess(x, y)?;
    fit_gaussian_from(x, y, weights, start, FitOptions::default())
}

/// Levenberg–Marquardt from an explicit starting point.
pub fn fit_gaussian_from(
    x: &[f64],
    y: &[f64],
    weights: &Weights,
    start: GaussianParams,
    opts: FitOptions,
) -> Result<GaussianFit> {
    validate(x, y)?;
    let sig = weights.sigmas(y)?;
    let inv_var: Vec<f64> = sig.iter().map(|s| 1.0 / (s * s)).collect();

    let chi2_of = |p: &GaussianParams| -> f64 {
        x.iter()
            .zip(y)
            .zip(&inv_var)
            .map(|((&xi, &yi), &w)| {
                let r = yi - p.eval(xi);
                w * r * r
            })
            .sum()
    };
    let normal_equations = |p: &GaussianParams| -> (Matrix4<f64>, Vector4<f64>) {
        let mut jtj = Matrix4::zeros();
        let mut jtr = Vector4::zeros();
        for ((&xi, &yi), &w) in x.iter().zip(y).zip(&inv_var) {
            let d = xi - p.center;
            let g = (-0.5 * d * d / (p.sigma * p.sigma)).exp();
            let j = Vector4::new(
                g,
                p.amplitude * g * d / (p.sigma * p.sigma),
                p.amplitude * g * d * d / p.sigma.powi(3),
                1.0,
            );
            let r = yi - (p.offset + p.amplitude * g);
            jtj += j * j.transpose() * w;
            jtr += j * (w * r);
        }
        (jtj, jtr)
    };

    let mut params = start;
    let mut chi2 = chi2_of(&params);
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iterations {
        iterations += 1;
        let (jtj, jtr) = normal_equations(&params);
        let mut damped = jtj;
        for k in 0..4 {
            damped[(k, k)] += lambda * jtj[(k, k)].max(1e-300);
        }
        let Some(step) = damped.lu().solve(&jtr) else {
            lambda *= 10.0;
            if lambda > 1e20 {
                break;
            }
            continue;
        };
        let candidate = GaussianParams::from_vec(&(params.to_vec() + step));
        let c2 = chi2_of(&candidate);
        if c2.is_finite() && c2 <= chi2 {
            let cur = params.to_vec();
            // Centre and offset can sit at zero; measure their steps against σ and the amplitude.
            let natural = [
                cur[0].abs(),
                cur[1].abs() + cur[2].abs(),
                cur[2].abs(),
                cur[3].abs() + cur[0].abs(),
            ];
            let small = (0..4).all(|k| step[k].abs() <= opts.rel_step * natural[k].max(1e-300));
            params = candidate;
            chi2 = c2;
            lambda = (lambda / 10.0).max(1e-15);
            if small || chi2 == 0.0 {
                converged = true;
                break;
            }
        } else {
            lambda *= 10.0;
            if lambda > 1e20 {
                // No downhill step exists at machine precision: a minimum.
                converged = true;
                break;
            }
        }
    }

    params.sigma = params.sigma.abs();
    let dof = (x.len() as f64 - 4.0).max(1.0);
    let reduced_chi2 = chi2 / dof;
    let (jtj, _) = normal_equations(&params);
    let scale = match weights {
        Weights::Unit => reduced_chi2,
        _ => 1.0,
    };
    let errors = jtj
        .try_inverse()
        .map(|cov| {
            let d = |k: usize| (cov[(k, k)] * scale).max(0.0).sqrt();
            GaussianParams {
                amplitude: d(0),
                center: d(1),
                sigma: d(2),
                offset: d(3),
            }
        })
        .unwrap_or(GaussianParams {
            amplitude: f64::NAN,
            center: f64::NAN,
            sigma: f64::NAN,
            offset: f64::NAN,
        });
    let fit = GaussianFit {
        params,
        errors,
        chi2,
        reduced_chi2,
        iterations,
    };
    if !converged || !(params.sigma > 0.0) || !params.sigma.is_finite() {
        return Err(Error::Fit {
            message: format!("Levenberg-Marquardt did not converge in {iterations} iterations"),
            best: Some(Box::new(fit)),
        });
    }
    Ok(fit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, Poisson};

    fn sample(p: GaussianParams, n: usize, lo: f64, hi: f64) -> (Vec<f64>, Vec<f64>) {
        let x: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
        let y = x.iter().map(|&v| p.eval(v)).collect();
        (x, y)
    }

    const TRUTH: GaussianParams = GaussianParams {
        amplitude: 1.0,
        center: 0.3,
        sigma: 0.5,
        offset: 0.1,
    };

    #[test]
    fn exact_gaussian_recovered() {
        let (x, y) = sample(TRUTH, 81, -2.0, 2.5);
        let f = fit_gaussian_1d(&x, &y, &Weights::Unit).unwrap();
        assert!((f.params.amplitude - 1.0).abs() < 1e-6);
        assert!((f.params.center - 0.3).abs() < 1e-6);
        assert!((f.params.sigma - 0.5).abs() < 1e-6);
        assert!((f.params.offset - 0.1).abs() < 1e-6);
        assert!((f.fwhm() - 2.35482 * 0.5).abs() < 1e-5);
    }

    #[test]
    fn exact_regardless_of_start_within_half() {
        let (x, y) = sample(TRUTH, 81, -2.0, 2.5);
        for (fa, fc, fs, fo) in [
            (1.5, 1.5, 1.5, 1.5),
            (0.5, 0.5, 0.5, 0.5),
            (1.5, 0.5, 1.5, 0.5),
            (0.5, 1.5, 0.5, 1.5),
        ] {
            let start = GaussianParams {
                amplitude: TRUTH.amplitude * fa,
                center: TRUTH.center * fc,
                sigma: TRUTH.sigma * fs,
                offset: TRUTH.offset * fo,
            };
            let f = fit_gaussian_from(&x, &y, &Weights::Unit, start, FitOptions::default()).unwrap();
            assert!((f.params.center - 0.3).abs() < 1e-6);
            assert!((f.params.sigma - 0.5).abs() < 1e-6);
            assert!((f.params.amplitude - 1.0).abs() < 1e-6);
            assert!((f.params.offset - 0.1).abs() < 1e-6);
        }
    }

    #[test]
    fn constant_and_short_inputs_fail() {
        let x: Vec<f64> = (0..10).map(f64::from).collect();
        assert!(matches!(
            fit_gaussian_1d(&x, &[2.0; 10], &Weights::Unit),
            Err(Error::Fit { .. })
        ));
        assert!(matches!(
            fit_gaussian_1d(&x[..4], &[0.0, 1.0, 0.5, 0.0], &Weights::Unit),
            Err(Error::Data(_))
        ));
    }

    #[test]
    fn poisson_centres_within_three_errors() {
        // 10^4 expected counts spread over the bins, repeated 50 times.
        let truth = GaussianParams {
            amplitude: 1.0,
            center: 0.3,
            sigma: 0.5,
            offset: 0.0,
        };
        let (x, shape) = sample(truth, 61, -1.5, 2.1);
        let norm: f64 = shape.iter().sum();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let mut outside = 0;
        for _ in 0..50 {
            let y: Vec<f64> = shape
                .iter()
                .map(|s| {
                    let mu = s / norm * 1e4;
                    if mu > 0.0 {
                        Poisson::new(mu).unwrap().sample(&mut rng)
                    } else {
                        0.0
                    }
                })
                .collect();
            let f = fit_gaussian_1d(&x, &y, &Weights::Poisson).unwrap();
            if (f.params.center - 0.3).abs() > 3.0 * f.errors.center {
                outside += 1;
            }
        }
        // 3σ excursions happen 0.27% of the time.
        assert!(outside <= 1, "{outside} fits outside 3 sigma");
    }
}
