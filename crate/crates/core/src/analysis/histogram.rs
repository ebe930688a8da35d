use serde::{Deserialize, Serialize};

use super::MomentumRecord;
use crate::exec::Exec;
use crate::profile::Profile;
use crate::strongfield::Component;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistAxis {
    pub quantity: Component,
    pub min: f64,
    pub max: f64,
    pub bins: usize,
}

impl HistAxis {
    pub fn new(quantity: Component, min: f64, max: f64, bins: usize) -> Result<Self> {
        if bins < 1 {
            return Err(Error::Domain("histogram axis needs at least one bin".into()));
        }
        if !(max > min) || !min.is_finite() || !max.is_finite() {
            return Err(Error::Domain(format!("histogram range [{min}, {max}] is empty")));
        }
        Ok(HistAxis {
            quantity,
            min,
            max,
            bins,
        })
    }

    pub fn width(&self) -> f64 {
        (self.max - self.min) / self.bins as f64
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.bins)
            .map(|i| self.min + (i as f64 + 0.5) * self.width())
            .collect()
    }

    /// Bin of `v`, half-open [min, max).
    pub fn bin(&self, v: f64) -> Option<usize> {
        if !(v >= self.min && v < self.max) {
            return None;
        }
        Some((((v - self.min) / self.width()) as usize).min(self.bins - 1))
    }
}

/// Record selection applied before filling.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Slice {
    All,
    /// Transverse magnitude about `along` below `radius`.
    Cylinder {
        along: Component,
        radius: f64,
    },
    /// |p_component| below `half_width`.
    Slab {
        component: Component,
        half_width: f64,
    },
}

impl Slice {
    pub fn accepts(&self, p: &[f64; 3]) -> bool {
        match *self {
            Slice::All => true,
            Slice::Cylinder { along, radius } => {
                let k = along.index();
                let rho2: f64 = (0..3).filter(|&i| i != k).map(|i| p[i] * p[i]).sum();
                rho2 < radius * radius
            }
            Slice::Slab { component, half_width } => p[component.index()].abs() < half_width,
        }
    }

    pub fn describe(&self) -> String {
        match *self {
            Slice::All => "all".into(),
            Slice::Cylinder { along, radius } => {
                let others: Vec<&str> = [Component::X, Component::Y, Component::Z]
                    .into_iter()
                    .filter(|c| *c != along)
                    .map(|c| c.name())
                    .collect();
                format!("sqrt({}^2+{}^2) < {radius}", others[0], others[1])
            }
            Slice::Slab { component, half_width } => format!("|{}| < {half_width}", component.name()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub axes: Vec<HistAxis>,
    /// Row-major, first axis slowest.
    pub counts: Vec<u64>,
    pub slice: String,
}

impl Histogram {
    pub fn empty(axes: Vec<HistAxis>, slice: &Slice) -> Result<Self> {
        if axes.is_empty() || axes.len() > 2 {
            return Err(Error::Domain(format!(
                "histograms are 1D or 2D, got {} axes",
                axes.len()
            )));
        }
        for a in &axes {
            HistAxis::new(a.quantity, a.min, a.max, a.bins)?;
        }
        let n = axes.iter().map(|a| a.bins).product();
        Ok(Histogram {
            axes,
            counts: vec![0; n],
            slice: slice.describe(),
        })
    }

    fn index(&self, p: &[f64; 3]) -> Option<usize> {
        let mut idx = 0;
        for a in &self.axes {
            idx = idx * a.bins + a.bin(p[a.quantity.index()])?;
        }
        Some(idx)
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Adds another histogram with identical binning.
    pub fn merge(&mut self, other: &Histogram) -> Result<()> {
        if self.axes != other.axes || self.slice != other.slice {
            return Err(Error::Data(
                "cannot merge histograms with different binning or slice".into(),
            ));
        }
        self.counts.iter_mut().zip(&other.counts).for_each(|(a, b)| *a += b);
        Ok(())
    }

    /// Bin centres and counts of a 1D histogram.
    pub fn to_profile(&self) -> Result<Profile> {
        if self.axes.len() != 1 {
            return Err(Error::Domain("only 1D histograms convert to a profile".into()));
        }
        Profile::new(self.axes[0].centers(), self.counts.iter().map(|&c| c as f64).collect())
    }
}

const CHUNK: usize = 1 << 15;

/// Counts records passing `slice`; out-of-range records are dropped.
pub fn histogram(records: &[MomentumRecord], axes: Vec<HistAxis>, slice: &Slice) -> Result<Histogram> {
    histogram_with(records, axes, slice, Exec::default())
}

pub fn histogram_with(records: &[MomentumRecord], axes: Vec<HistAxis>, slice: &Slice, exec: Exec) -> Result<Histogram> {
    let template = Histogram::empty(axes, slice)?;
    let chunks = records.len().div_ceil(CHUNK);
    let parts = exec.map(chunks, |c| {
        let mut h = template.clone();
        for r in &records[c * CHUNK..((c + 1) * CHUNK).min(records.len())] {
            if slice.accepts(&r.p) {
                if let Some(i) = h.index(&r.p) {
                    h.counts[i] += 1;
                }
            }
        }
        h
    });
    let mut out = template;
    for p in &parts {
        out.merge(p)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::Rng;

    fn rec(p: [f64; 3]) -> MomentumRecord {
        MomentumRecord {
            p,
            event_id: 0,
            channel: None,
        }
    }

    fn axis_z() -> HistAxis {
        HistAxis::new(Component::Z, -1.0, 1.0, 40).unwrap()
    }

    #[test]
    fn empty_input_gives_zero_counts() {
        let h = histogram(&[], vec![axis_z()], &Slice::All).unwrap();
        assert_eq!(h.total(), 0);
        assert_eq!(h.counts.len(), 40);
    }

    #[test]
    fn infinite_radius_keeps_everything() {
        let mut rng = substream(1, 0, 0);
        let r: Vec<MomentumRecord> = (0..1000)
            .map(|_| {
                rec([
                    rng.random_range(-0.9..0.9),
                    rng.random_range(-0.9..0.9),
                    rng.random_range(-0.9..0.9),
                ])
            })
            .collect();
        let slice = Slice::Cylinder {
            along: Component::Z,
            radius: f64::INFINITY,
        };
        assert_eq!(histogram(&r, vec![axis_z()], &slice).unwrap().total(), 1000);
    }

    #[test]
    fn slices_select_correctly() {
        let c = Slice::Cylinder {
            along: Component::Z,
            radius: 0.1,
        };
        assert!(c.accepts(&[0.05, 0.05, 0.9]));
        assert!(!c.accepts(&[0.08, 0.08, 0.0]));
        let s = Slice::Slab {
            component: Component::Y,
            half_width: 0.1,
        };
        assert!(s.accepts(&[0.5, -0.09, 0.5]));
        assert!(!s.accepts(&[0.0, 0.1, 0.0]));
        assert_eq!(c.describe(), "sqrt(px^2+py^2) < 0.1");
    }

    #[test]
    fn two_dimensional_layout() {
        let ax = vec![
            HistAxis::new(Component::Z, 0.0, 2.0, 2).unwrap(),
            HistAxis::new(Component::X, 0.0, 3.0, 3).unwrap(),
        ];
        let h = histogram(&[rec([2.5, 0.0, 1.5])], ax, &Slice::All).unwrap();
        assert_eq!(h.counts, vec![0, 0, 0, 0, 0, 1]);
        assert!(h.to_profile().is_err());
    }

    #[test]
    fn merge_requires_matching_binning() {
        let mut a = histogram(&[rec([0.0, 0.0, 0.1])], vec![axis_z()], &Slice::All).unwrap();
        let b = histogram(&[rec([0.0, 0.0, 0.1])], vec![axis_z()], &Slice::All).unwrap();
        a.merge(&b).unwrap();
        assert_eq!(a.total(), 2);
        let c = histogram(
            &[],
            vec![HistAxis::new(Component::Z, -1.0, 1.0, 20).unwrap()],
            &Slice::All,
        )
        .unwrap();
        assert!(a.merge(&c).is_err());
        assert!(HistAxis::new(Component::Z, 0.0, 1.0, 0).is_err());
    }

    proptest! {
        #[test]
        fn permutation_invariant(seed in 0u64..1000, n in 0usize..300) {
            let mut rng = substream(seed, 0, 0);
            let mut r: Vec<MomentumRecord> = (0..n)
                .map(|_| rec([rng.random_range(-1.2..1.2), rng.random_range(-1.2..1.2), rng.random_range(-1.2..1.2)]))
                .collect();
            let slice = Slice::Slab { component: Component::Y, half_width: 0.5 };
            let a = histogram(&r, vec![axis_z()], &slice).unwrap();
            r.shuffle(&mut rng);
            let b = histogram(&r, vec![axis_z()], &slice).unwrap();
            prop_assert!(a.total() as usize <= n);
            prop_assert_eq!(a, b);
        }
    }
}
