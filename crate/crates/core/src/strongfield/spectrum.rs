use std::collections::HashMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::amplitude::{amplitude_reduced, axis_index, QuadratureOptions, ReducedMomentum, TimeTable};
use super::{Channel, Component, InitialState, LaserPulse, MomentumGrid, PulseSpec};
use crate::exec::Exec;
use crate::profile::Profile;
use crate::{Error, Result, Vec3};

/// Sign convention between grid momenta and the photoelectron.
pub const ION_MOMENTUM_CONVENTION: &str = "p_ion = -p_electron (single ionization, photon momentum neglected)";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumMeta {
    pub pulse: PulseSpec,
    /// Channels included, with their incoherent weights.
    pub channels: Vec<(Channel, f64)>,
    pub normalized: bool,
    pub convention: String,
}

/// Recoil-ion momentum distribution `w(p) = |p| |M_p|²` sampled on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumMap {
    pub grid: MomentumGrid,
    pub values: Vec<f64>,
    pub meta: SpectrumMeta,
}

impl SpectrumMap {
    pub fn new(grid: MomentumGrid, values: Vec<f64>, meta: SpectrumMeta) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Data(format!(
                "spectrum has {} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::Data(format!(
                "spectrum value at node {i} is negative or not finite"
            )));
        }
        Ok(SpectrumMap { grid, values, meta })
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(0.0, f64::max)
    }

    /// Riemann sum of the values times the cell measure.
    pub fn total(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_measure()
    }

    pub fn normalized(&self) -> Result<SpectrumMap> {
        let total = self.total();
        if !(total > 0.0) {
            return Err(Error::Domain("cannot normalize an all-zero spectrum".into()));
        }
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v /= total);
        out.meta.normalized = true;
        Ok(out)
    }

    /// Multilinear interpolation; zero outside the grid.
    pub fn interpolate(&self, p: &Vec3) -> f64 {
        self.grid
            .interpolation_stencil(p)
            .map(|s| s.iter().map(|(i, w)| w * self.values[*i]).sum())
            .unwrap_or(0.0)
    }

    /// Distribution along `along` for momenta whose transverse magnitude is
    /// below `radius`.
    ///
    /// On a 3D grid this sums the nodes inside the cylinder. On a 2D plane
    /// containing `along` the single in-plane transverse coordinate stands
    /// for the cylinder radius, assuming azimuthal symmetry about `along`;
    /// each node carries the ring weight `π|ρ| dρ` (both signs of ρ together
    /// give `2πρ dρ`).
    pub fn sliced_profile(&self, along: Component, radius: f64) -> Result<Profile> {
        let (ai, axis) = self
            .grid
            .axis_of(along)
            .ok_or_else(|| Error::Domain(format!("grid has no {} axis", along.name())))?;
        let mut y = vec![0.0; axis.count];
        let three_d = self.grid.dims() == 3;
        let transverse_measure: f64 = self
            .grid
            .axes()
            .iter()
            .enumerate()
            .filter(|(k, _)| *k != ai)
            .map(|(_, (_, a))| a.step())
            .product();
        for (i, v) in self.values.iter().enumerate() {
            let idx = self.grid.unravel(i);
            let p = self.grid.node(i);
            let mut rho2 = 0.0;
            for (k, (c, _)) in self.grid.axes().iter().enumerate() {
                if k != ai {
                    rho2 += p[c.index()] * p[c.index()];
                }
            }
            if rho2 >= radius * radius {
                continue;
            }
            let weight = if three_d {
                transverse_measure
            } else {
                PI * rho2.sqrt() * transverse_measure
            };
            y[idx[ai]] += v * weight;
        }
        Profile::new(axis.values(), y)
    }

    /// Projection onto one axis (sum over all other axes).
    pub fn projection(&self, along: Component) -> Result<Profile> {
        self.sliced_profile_unbounded(along)
    }

    fn sliced_profile_unbounded(&self, along: Component) -> Result<Profile> {
        let (ai, axis) = self
            .grid
            .axis_of(along)
            .ok_or_else(|| Error::Domain(format!("grid has no {} axis", along.name())))?;
        let mut y = vec![0.0; axis.count];
        let measure = self.grid.cell_measure() / axis.step();
        for (i, v) in self.values.iter().enumerate() {
            y[self.grid.unravel(i)[ai]] += v * measure;
        }
        Profile::new(axis.values(), y)
    }
}

/// Ion-momentum spectrum of one channel on `grid`.
pub fn spectrum(pulse: &LaserPulse, state: &InitialState, grid: &MomentumGrid) -> Result<SpectrumMap> {
    spectrum_with(pulse, state, grid, QuadratureOptions::default(), Exec::default())
}

pub fn spectrum_with(
    pulse: &LaserPulse,
    state: &InitialState,
    grid: &MomentumGrid,
    opts: QuadratureOptions,
    exec: Exec,
) -> Result<SpectrumMap> {
    let table = TimeTable::new(pulse, opts)?;
    let eps = pulse.polarization();

    // Nodes sharing (p_par, p_perp²) share an amplitude. Keys are compared
    // bitwise, so deduplication never changes a value.
    let mut slot_of_node = Vec::with_capacity(grid.len());
    let mut unique: Vec<(ReducedMomentum, usize)> = Vec::new();
    let mut seen: HashMap<(u64, u64), usize> = HashMap::new();
    let on_axis = axis_index(&eps).is_some();
    for i in 0..grid.len() {
        let electron = -grid.node(i);
        let r = ReducedMomentum::from_vector(&electron, &eps);
        let slot = if on_axis {
            *seen
                .entry((r.parallel.to_bits(), r.perp2.to_bits()))
                .or_insert_with(|| {
                    unique.push((r, i));
                    unique.len() - 1
                })
        } else {
            unique.push((r, i));
            unique.len() - 1
        };
        slot_of_node.push(slot);
    }

    let m2 = exec.try_map(unique.len(), |k| {
        let (r, node) = unique[k];
        amplitude_reduced(&table, state, r)
            .map(|a| a.value.norm_sqr())
            .map_err(|e| {
                let p = grid.node(node);
                Error::Numerical(format!(
                    "spectrum node {node} (p = [{:.6}, {:.6}, {:.6}] a.u.): {e}",
                    p.x, p.y, p.z
                ))
            })
    })?;

    let values = (0..grid.len())
        .map(|i| grid.node(i).norm() * m2[slot_of_node[i]])
        .collect();
    SpectrumMap::new(
        grid.clone(),
        values,
        SpectrumMeta {
            pulse: pulse.spec().clone(),
            channels: vec![(state.channel, 1.0)],
            normalized: false,
            convention: ION_MOMENTUM_CONVENTION.to_string(),
        },
    )
}

/// Incoherent weighted sum of single-channel maps on the same grid.
pub fn incoherent_sum(parts: &[(&SpectrumMap, f64)]) -> Result<SpectrumMap> {
    let (first, _) = parts
        .first()
        .ok_or_else(|| Error::Domain("incoherent sum needs at least one map".into()))?;
    let mut values = vec![0.0; first.values.len()];
    let mut channels = Vec::new();
    for (map, w) in parts {
        if map.grid != first.grid {
            return Err(Error::Domain("incoherent sum needs maps on the same grid".into()));
        }
        if !(*w >= 0.0) {
            return Err(Error::Domain(format!("channel weight must be non-negative, got {w}")));
        }
        for (acc, v) in values.iter_mut().zip(&map.values) {
            *acc += w * v;
        }
        for (c, cw) in &map.meta.channels {
            channels.push((*c, cw * w));
        }
    }
    SpectrumMap::new(
        first.grid.clone(),
        values,
        SpectrumMeta {
            channels,
            normalized: false,
            ..first.meta.clone()
        },
    )
}
