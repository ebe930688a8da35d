use rand::Rng;

use super::SpectrumMap;
use crate::exec::Exec;
use crate::rng::{substream, tag};
use crate::{Error, Result, Vec3};

/// Rejection sampler for a [`SpectrumMap`]: uniform proposals in the grid box,
/// accepted with probability `w_interp(p) / w_max`. Multilinear interpolation
/// never exceeds the node maximum, so the envelope is exact.
#[derive(Clone, Debug)]
pub struct RecoilSampler<'a> {
    map: &'a SpectrumMap,
    max: f64,
    lo: Vec<f64>,
    span: Vec<f64>,
}

/// Proposals per accepted sample before giving up.
const MAX_TRIES: usize = 100_000_000;

impl<'a> RecoilSampler<'a> {
    pub fn new(map: &'a SpectrumMap) -> Result<Self> {
        let max = map.max();
        if !(max > 0.0) {
            return Err(Error::Domain("cannot sample from an all-zero spectrum".into()));
        }
        let lo = map.grid.axes().iter().map(|(_, a)| a.min).collect();
        let span = map.grid.axes().iter().map(|(_, a)| a.max - a.min).collect();
        Ok(RecoilSampler { map, max, lo, span })
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> Result<Vec3> {
        for _ in 0..MAX_TRIES {
            let mut p = Vec3::zeros();
            for (k, (c, _)) in self.map.grid.axes().iter().enumerate() {
                p[c.index()] = self.lo[k] + self.span[k] * rng.random::<f64>();
            }
            let u: f64 = rng.random();
            if u * self.max < self.map.interpolate(&p) {
                return Ok(p);
            }
        }
        Err(Error::Numerical(format!(
            "rejection sampler accepted nothing in {MAX_TRIES} proposals"
        )))
    }
}

/// `n` ion momenta drawn from `map`; sample `i` uses its own random stream,
/// so the list is identical for any worker count.
pub fn sample_recoil_momenta(map: &SpectrumMap, n: usize, seed: u64) -> Result<Vec<Vec3>> {
    sample_recoil_momenta_with(map, n, seed, Exec::default())
}

pub fn sample_recoil_momenta_with(map: &SpectrumMap, n: usize, seed: u64, exec: Exec) -> Result<Vec<Vec3>> {
    let sampler = RecoilSampler::new(map)?;
    exec.try_map(n, |i| {
        let mut rng = substream(seed, tag::RECOIL_SAMPLING, i as u64);
        sampler.sample(&mut rng)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::strongfield::{Channel, MomentumGrid, PulseSpec, SpectrumMeta, ION_MOMENTUM_CONVENTION};
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    fn gaussian_map(n: usize) -> SpectrumMap {
        let grid = MomentumGrid::cube(1.0, n).unwrap();
        let values = (0..grid.len())
            .map(|i| {
                let p = grid.node(i);
                (-(p.x * p.x + 2.0 * p.y * p.y + (p.z - 0.3).powi(2) / 0.08)).exp()
            })
            .collect();
        let meta = SpectrumMeta {
            pulse: PulseSpec::default(),
            channels: vec![(Channel::Rb5s, 1.0)],
            normalized: false,
            convention: ION_MOMENTUM_CONVENTION.to_string(),
        };
        SpectrumMap::new(grid, values, meta).unwrap()
    }

    #[test]
    fn zero_samples_and_zero_map() {
        let map = gaussian_map(5);
        assert!(sample_recoil_momenta(&map, 0, 1).unwrap().is_empty());
        let mut zero = map.clone();
        zero.values.iter_mut().for_each(|v| *v = 0.0);
        assert!(matches!(RecoilSampler::new(&zero), Err(Error::Domain(_))));
    }

    #[test]
    fn reproducible_and_independent_of_executor() {
        let map = gaussian_map(7);
        let a = sample_recoil_momenta_with(&map, 500, 42, Exec::Sequential).unwrap();
        let b = sample_recoil_momenta(&map, 500, 42).unwrap();
        let c = sample_recoil_momenta(&map, 500, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn marginal_passes_chi_square() {
        // Expected mass per z cell of the multilinear interpolant: the mean of
        // the 8 corner values times the cell volume, summed over x and y cells.
        let n = 9;
        let map = gaussian_map(n);
        let mut expected = vec![0.0; n - 1];
        for i in 0..n - 1 {
            for j in 0..n - 1 {
                for k in 0..n - 1 {
                    let mut s = 0.0;
                    for c in 0..8 {
                        let idx = [i + (c & 1), j + ((c >> 1) & 1), k + ((c >> 2) & 1)];
                        s += map.values[map.grid.ravel(&idx)];
                    }
                    expected[k] += s / 8.0;
                }
            }
        }
        let total: f64 = expected.iter().sum();
        let draws = 20_000;
        let samples = sample_recoil_momenta(&map, draws, 7).unwrap();
        let step = 2.0 / (n - 1) as f64;
        let mut observed = vec![0usize; n - 1];
        for p in &samples {
            let k = (((p.z + 1.0) / step) as usize).min(n - 2);
            observed[k] += 1;
        }
        let mut chi2 = 0.0;
        let mut dof = 0;
        for k in 0..n - 1 {
            let e = expected[k] / total * draws as f64;
            if e >= 5.0 {
                chi2 += (observed[k] as f64 - e).powi(2) / e;
                dof += 1;
            }
        }
        let pval = 1.0 - ChiSquared::new((dof - 1) as f64).unwrap().cdf(chi2);
        assert!(pval > 0.01, "chi2 {chi2} dof {dof} p {pval}");
    }
}
