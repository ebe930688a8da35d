use serde::{Deserialize, Serialize};

use crate::{Error, Result, Vec3};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Component {
    X,
    Y,
    Z,
}

impl Component {
    pub fn index(self) -> usize {
        match self {
            Component::X => 0,
            Component::Y => 1,
            Component::Z => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Component::X => "px",
            Component::Y => "py",
            Component::Z => "pz",
        }
    }
}

/// One uniformly sampled axis, endpoints included.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Axis {
    pub fn new(min: f64, max: f64, count: usize) -> Result<Self> {
        let axis = Axis { min, max, count };
        axis.validate()?;
        Ok(axis)
    }

    pub fn validate(&self) -> Result<()> {
        if self.count < 2 {
            return Err(Error::Domain(format!(
                "axis needs at least 2 nodes, got {}",
                self.count
            )));
        }
        if !(self.max > self.min) || !self.min.is_finite() || !self.max.is_finite() {
            return Err(Error::Domain(format!(
                "axis range must satisfy min < max, got [{}, {}]",
                self.min, self.max
            )));
        }
        Ok(())
    }

    pub fn step(&self) -> f64 {
        (self.max - self.min) / (self.count - 1) as f64
    }

    pub fn value(&self, i: usize) -> f64 {
        if i + 1 == self.count {
            self.max
        } else {
            self.min + i as f64 * self.step()
        }
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.count).map(|i| self.value(i)).collect()
    }

    /// Fractional node coordinate of `v`, or `None` outside `[min, max]`.
    pub fn locate(&self, v: f64) -> Option<(usize, f64)> {
        if !(v >= self.min && v <= self.max) {
            return None;
        }
        let u = (v - self.min) / self.step();
        let i = (u.floor() as usize).min(self.count - 2);
        Some((i, (u - i as f64).clamp(0.0, 1.0)))
    }
}

/// Regular momentum grid over two or three momentum components (a.u.).
///
/// Nodes are stored row-major: the first axis varies slowest. Components
/// without an axis are zero at every node, so a `(pz, px)` grid is the
/// `py = 0` plane.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentumGrid {
    axes: Vec<(Component, Axis)>,
}

impl MomentumGrid {
    pub fn new(axes: Vec<(Component, Axis)>) -> Result<Self> {
        if !(2..=3).contains(&axes.len()) {
            return Err(Error::Domain(format!("grid needs 2 or 3 axes, got {}", axes.len())));
        }
        for (i, (c, a)) in axes.iter().enumerate() {
            a.validate()?;
            if axes[..i].iter().any(|(d, _)| d == c) {
                return Err(Error::Domain(format!("duplicate grid component {}", c.name())));
            }
        }
        Ok(MomentumGrid { axes })
    }

    /// Cube `[-half_width, half_width]^3` with `count` nodes per axis, axes
    /// ordered (px, py, pz).
    pub fn cube(half_width: f64, count: usize) -> Result<Self> {
        let a = Axis::new(-half_width, half_width, count)?;
        Self::new(vec![(Component::X, a), (Component::Y, a), (Component::Z, a)])
    }

    /// The `py = 0` plane with axes ordered (pz, px).
    pub fn plane_zx(half_width: f64, count: usize) -> Result<Self> {
        let a = Axis::new(-half_width, half_width, count)?;
        Self::new(vec![(Component::Z, a), (Component::X, a)])
    }

    pub fn axes(&self) -> &[(Component, Axis)] {
        &self.axes
    }

    pub fn dims(&self) -> usize {
        self.axes.len()
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|(_, a)| a.count).product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn axis_of(&self, c: Component) -> Option<(usize, &Axis)> {
        self.axes
            .iter()
            .enumerate()
            .find(|(_, (d, _))| *d == c)
            .map(|(i, (_, a))| (i, a))
    }

    /// Product of the axis steps: the area or volume of one cell.
    pub fn cell_measure(&self) -> f64 {
        self.axes.iter().map(|(_, a)| a.step()).product()
    }

    pub fn unravel(&self, mut index: usize) -> Vec<usize> {
        let mut idx = vec![0; self.axes.len()];
        for (k, (_, a)) in self.axes.iter().enumerate().rev() {
            idx[k] = index % a.count;
            index /= a.count;
        }
        idx
    }

    pub fn ravel(&self, idx: &[usize]) -> usize {
        idx.iter()
            .zip(&self.axes)
            .fold(0, |acc, (&i, (_, a))| acc * a.count + i)
    }

    pub fn node(&self, index: usize) -> Vec3 {
        let idx = self.unravel(index);
        let mut p = Vec3::zeros();
        for (k, (c, a)) in self.axes.iter().enumerate() {
            p[c.index()] = a.value(idx[k]);
        }
        p
    }

    /// Multilinear interpolation weights `(node index, weight)` for `p`;
    /// `None` when `p` lies outside the grid box. Components without an axis
    /// are ignored.
    pub fn interpolation_stencil(&self, p: &Vec3) -> Option<Vec<(usize, f64)>> {
        let mut locs = Vec::with_capacity(self.axes.len());
        for (c, a) in &self.axes {
            locs.push(a.locate(p[c.index()])?);
        }
        let d = self.axes.len();
        let mut out = Vec::with_capacity(1 << d);
        let mut idx = vec![0; d];
        for corner in 0..(1usize << d) {
            let mut w = 1.0;
            for k in 0..d {
                let (i, f) = locs[k];
                if corner >> k & 1 == 1 {
                    idx[k] = i + 1;
                    w *= f;
                } else {
                    idx[k] = i;
                    w *= 1.0 - f;
                }
            }
            out.push((self.ravel(&idx), w));
        }
        Some(out)
    }
}
