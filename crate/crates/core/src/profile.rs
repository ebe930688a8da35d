use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A sampled 1D curve: abscissae `x` with values `y`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl Profile {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::Data(format!(
                "profile has {} abscissae but {} values",
                x.len(),
                y.len()
            )));
        }
        Ok(Profile { x, y })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Spacing if the abscissae are uniform to 1e-9 relative, else `None`.
    pub fn uniform_step(&self) -> Option<f64> {
        if self.x.len() < 2 {
            return None;
        }
        let h = (self.x[self.x.len() - 1] - self.x[0]) / (self.x.len() - 1) as f64;
        if !(h > 0.0) {
            return None;
        }
        let ok = self
            .x
            .windows(2)
            .all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h.abs().max(1e-300));
        ok.then_some(h)
    }

    /// Trapezoid integral.
    pub fn integral(&self) -> f64 {
        self.x
            .windows(2)
            .zip(self.y.windows(2))
            .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
            .sum()
    }

    /// Linear interpolation; zero outside the sampled range.
    pub fn interpolate(&self, at: f64) -> f64 {
        let n = self.x.len();
        if n == 0 || at < self.x[0] || at > self.x[n - 1] {
            return 0.0;
        }
        if n == 1 {
            return self.y[0];
        }
        let hi = self.x.partition_point(|&v| v < at).clamp(1, n - 1);
        let (x0, x1) = (self.x[hi - 1], self.x[hi]);
        let f = if x1 > x0 { (at - x0) / (x1 - x0) } else { 0.0 };
        self.y[hi - 1] + f * (self.y[hi] - self.y[hi - 1])
    }

    pub fn resample(&self, x: &[f64]) -> Profile {
        Profile {
            x: x.to_vec(),
            y: x.iter().map(|&v| self.interpolate(v)).collect(),
        }
    }

    /// Indices of local maxima whose height is at least `min_fraction` of the
    /// global maximum. Plateaus count once, at their first index.
    pub fn local_maxima(&self, min_fraction: f64) -> Vec<usize> {
        let n = self.y.len();
        let top = self.y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if n < 3 || !(top > 0.0) {
            return Vec::new();
        }
        let mut out = Vec::new();
        let mut i = 1;
        while i + 1 < n {
            if self.y[i] > self.y[i - 1] {
                let mut j = i;
                while j + 1 < n && self.y[j + 1] == self.y[i] {
                    j += 1;
                }
                if j + 1 < n && self.y[j + 1] < self.y[i] && self.y[i] >= min_fraction * top {
                    out.push(i);
                }
                i = j + 1;
            } else {
                i += 1;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolation_and_maxima() {
        let p = Profile::new(vec![0.0, 1.0, 2.0, 3.0, 4.0], vec![0.0, 2.0, 1.0, 3.0, 0.0]).unwrap();
        assert_eq!(p.interpolate(0.5), 1.0);
        assert_eq!(p.interpolate(5.0), 0.0);
        assert_eq!(p.local_maxima(0.0), vec![1, 3]);
        assert_eq!(p.local_maxima(0.8), vec![3]);
        assert_eq!(p.uniform_step(), Some(1.0));
        assert_eq!(p.integral(), 6.0);
        assert!(Profile::new(vec![0.0], vec![]).is_err());
    }

    #[test]
    fn plateau_counts_once() {
        let p = Profile::new((0..6).map(f64::from).collect(), vec![0.0, 1.0, 1.0, 1.0, 0.0, 0.0]).unwrap();
        assert_eq!(p.local_maxima(0.0), vec![1]);
    }
}
