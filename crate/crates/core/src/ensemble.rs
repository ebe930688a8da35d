//! Cold-rubidium targets, the femtosecond focus, and Monte Carlo generation
//! of ionization events.
//!
//! Lengths are in mm unless a name says otherwise. The laser propagates
//! along y; x and z are transverse to it.

use std::collections::BTreeMap;
use std::f64::consts::{LN_2, PI};

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::apparatus::IonSpecies;
use crate::exec::Exec;
use crate::rng::{substream, tag};
use crate::strongfield::{Channel, RecoilSampler, SpectrumMap};
use crate::units::{m_per_s_to_au, thermal_momentum_sigma};
use crate::{Error, Result, Vec3};

/// σ = FWHM / FWHM_PER_SIGMA.
const FWHM_PER_SIGMA: f64 = 2.354_820_045_030_949;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetKind {
    /// Magneto-optical trap: Gaussian in all three axes.
    Mot3d,
    /// Optical molasses loaded from the 2D MOT beam.
    Molasses2d,
    /// Pushed atom beam from the 2D MOT, flat along x, ground state only.
    Beam2d,
}

/// Missing configuration keys fall back to the 3D MOT values, whatever the
/// `kind`; shipped configurations spell every key out.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TargetEnsemble {
    pub kind: TargetKind,
    /// Density FWHM per axis; the x entry is unused for `Beam2d`.
    pub fwhm_mm: [f64; 3],
    pub center_mm: [f64; 3],
    pub temperature_uk: [f64; 3],
    pub peak_density_cm3: f64,
    /// Fraction of atoms in 5p.
    pub excited_fraction: f64,
    /// Mean atom velocity along x (`Beam2d` only).
    pub beam_velocity_m_per_s: f64,
}

impl Default for TargetEnsemble {
    fn default() -> Self {
        TargetEnsemble::mot3d()
    }
}

impl TargetEnsemble {
    /// 3D MOT: x and z widths from the ionization scan, y from absorption
    /// imaging.
    pub fn mot3d() -> Self {
        TargetEnsemble {
            kind: TargetKind::Mot3d,
            fwhm_mm: [0.35, 1.1, 1.22],
            center_mm: [0.0; 3],
            temperature_uk: [130.0; 3],
            peak_density_cm3: 5e9,
            excited_fraction: 0.25,
            beam_velocity_m_per_s: 0.0,
        }
    }

    /// 3D MOT with the z width from absorption imaging (0.7 mm) instead of
    /// the ionization scan (1.22 mm).
    pub fn mot3d_absorption_widths() -> Self {
        TargetEnsemble {
            fwhm_mm: [0.35, 1.1, 0.7],
            ..Self::mot3d()
        }
    }

    pub fn molasses2d() -> Self {
        TargetEnsemble {
            kind: TargetKind::Molasses2d,
            fwhm_mm: [2.0, 2.0, 2.0],
            center_mm: [0.0; 3],
            temperature_uk: [1000.0; 3],
            peak_density_cm3: 1e8,
            excited_fraction: 0.25,
            beam_velocity_m_per_s: 0.0,
        }
    }

    /// Atom beam pushed along x at 10 m/s; 5 mK longitudinal spread, 1 mK
    /// transverse.
    pub fn beam2d() -> Self {
        TargetEnsemble {
            kind: TargetKind::Beam2d,
            fwhm_mm: [1.0, 0.8, 0.8],
            center_mm: [0.0; 3],
            temperature_uk: [5000.0, 1000.0, 1000.0],
            peak_density_cm3: 1e7,
            excited_fraction: 0.0,
            beam_velocity_m_per_s: 10.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.fwhm_mm.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::Domain("target widths must be positive".into()));
        }
        if !(self.peak_density_cm3 >= 0.0) {
            return Err(Error::Domain("target density must be non-negative".into()));
        }
        if !(0.0..=1.0).contains(&self.excited_fraction) {
            return Err(Error::Domain(format!(
                "excited fraction must lie in [0, 1], got {}",
                self.excited_fraction
            )));
        }
        if self.kind == TargetKind::Beam2d && self.excited_fraction != 0.0 {
            return Err(Error::Domain(
                "the 2D MOT beam target is pure ground state (excited_fraction = 0)".into(),
            ));
        }
        if self.temperature_uk.iter().any(|t| !(*t >= 0.0)) {
            return Err(Error::Domain("target temperatures must be non-negative".into()));
        }
        Ok(())
    }

    fn is_flat(&self, axis: usize) -> bool {
        self.kind == TargetKind::Beam2d && axis == 0
    }

    pub fn sigma_mm(&self) -> [f64; 3] {
        self.fwhm_mm.map(|w| w / FWHM_PER_SIGMA)
    }

    pub fn state_fraction(&self, channel: Channel) -> f64 {
        match channel {
            Channel::Rb5s => 1.0 - self.excited_fraction,
            Channel::Rb5p => self.excited_fraction,
        }
    }

    /// Peak-normalized density profile.
    fn profile(&self, r: &Vec3) -> f64 {
        let mut e = 0.0;
        for k in 0..3 {
            if self.is_flat(k) {
                continue;
            }
            let d = (r[k] - self.center_mm[k]) / self.fwhm_mm[k];
            e += 4.0 * LN_2 * d * d;
        }
        (-e).exp()
    }

    /// Atoms per cm³ at `r`.
    pub fn density_at(&self, r: &Vec3) -> f64 {
        self.peak_density_cm3 * self.profile(r)
    }

    /// Analytic atom number, ∫ density d³r; infinite for the beam target.
    pub fn atom_number(&self) -> f64 {
        if self.kind == TargetKind::Beam2d {
            return f64::INFINITY;
        }
        let s = self.sigma_mm();
        let v_cm3: f64 = s.iter().map(|si| si * 0.1 * (2.0 * PI).sqrt()).product();
        self.peak_density_cm3 * v_cm3
    }

    /// Thermal momentum width per axis for `species`, a.u.
    pub fn thermal_sigma_au(&self, species: &IonSpecies) -> Result<[f64; 3]> {
        let m = species.mass_au();
        Ok([
            thermal_momentum_sigma(self.temperature_uk[0], m)?,
            thermal_momentum_sigma(self.temperature_uk[1], m)?,
            thermal_momentum_sigma(self.temperature_uk[2], m)?,
        ])
    }

    /// Mean atom momentum (a.u.); nonzero along x for the beam.
    pub fn mean_momentum_au(&self, species: &IonSpecies) -> Vec3 {
        match self.kind {
            TargetKind::Beam2d => Vec3::new(species.mass_au() * m_per_s_to_au(self.beam_velocity_m_per_s), 0.0, 0.0),
            _ => Vec3::zeros(),
        }
    }

    /// Same target moved by `d` (mm).
    pub fn displaced(&self, d: Vec3) -> Self {
        let mut t = self.clone();
        for k in 0..3 {
            t.center_mm[k] += d[k];
        }
        t
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FocusModel {
    /// 1/e² intensity radius at the waist.
    pub waist_um: f64,
    pub rayleigh_um: f64,
    pub center_mm: [f64; 3],
    pub photon_order_5s: u32,
    pub photon_order_5p: u32,
}

impl Default for FocusModel {
    fn default() -> Self {
        FocusModel {
            waist_um: 10.0,
            rayleigh_um: 716.0,
            center_mm: [0.0; 3],
            photon_order_5s: 3,
            photon_order_5p: 2,
        }
    }
}

impl FocusModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.waist_um > 0.0) || !(self.rayleigh_um > 0.0) {
            return Err(Error::Domain("focus waist and Rayleigh length must be positive".into()));
        }
        if self.photon_order_5s < 1 || self.photon_order_5p < 1 {
            return Err(Error::Domain("photon orders must be at least 1".into()));
        }
        Ok(())
    }

    pub fn photon_order(&self, channel: Channel) -> u32 {
        match channel {
            Channel::Rb5s => self.photon_order_5s,
            Channel::Rb5p => self.photon_order_5p,
        }
    }

    fn waist_mm(&self) -> f64 {
        self.waist_um * 1e-3
    }

    fn rayleigh_mm(&self) -> f64 {
        self.rayleigh_um * 1e-3
    }

    /// Beam radius w(y) in mm at distance `dy` (mm) from the waist.
    pub fn beam_radius_mm(&self, dy: f64) -> f64 {
        let u = dy / self.rayleigh_mm();
        self.waist_mm() * (1.0 + u * u).sqrt()
    }

    /// `I/I₀ = (w₀/w)² exp(−2ρ²/w²)`.
    pub fn relative_intensity(&self, r: &Vec3) -> f64 {
        let dx = r.x - self.center_mm[0];
        let dy = r.y - self.center_mm[1];
        let dz = r.z - self.center_mm[2];
        let w = self.beam_radius_mm(dy);
        let ratio = self.waist_mm() / w;
        ratio * ratio * (-2.0 * (dx * dx + dz * dz) / (w * w)).exp()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CoilCalibration {
    pub x_mm_per_a: f64,
    pub z_mm_per_a: f64,
}

impl Default for CoilCalibration {
    fn default() -> Self {
        CoilCalibration {
            x_mm_per_a: 1.04,
            z_mm_per_a: 0.63,
        }
    }
}

impl CoilCalibration {
    pub fn validate(&self) -> Result<()> {
        if !(self.x_mm_per_a > 0.0) || !(self.z_mm_per_a > 0.0) {
            return Err(Error::Domain("coil coefficients must be positive".into()));
        }
        Ok(())
    }
}

/// Target displacement (Δx, Δz) in mm for coil current changes in A.
pub fn coil_displacement(cal: &CoilCalibration, di_x: f64, di_z: f64) -> (f64, f64) {
    (cal.x_mm_per_a * di_x, cal.z_mm_per_a * di_z)
}

/// Ionization rate density at `r` for `channel`, up to a constant:
/// density × state fraction × (I/I₀)ⁿ.
pub fn ionization_weight(target: &TargetEnsemble, focus: &FocusModel, r: &Vec3, channel: Channel) -> f64 {
    let f = target.state_fraction(channel);
    if f == 0.0 {
        return 0.0;
    }
    let n = focus.photon_order(channel) as i32;
    target.density_at(r) * f * focus.relative_intensity(r).powi(n)
}

/// ∫ ionization_weight d³r (atoms/cm³ · mm³), with the transverse integrals
/// done analytically and the integral along the beam by Simpson's rule.
pub fn channel_yield(target: &TargetEnsemble, focus: &FocusModel, channel: Channel) -> f64 {
    let f = target.state_fraction(channel);
    if f == 0.0 || target.peak_density_cm3 == 0.0 {
        return 0.0;
    }
    let n = focus.photon_order(channel) as f64;
    let sig = target.sigma_mm();
    let transverse = |k: usize, w: f64| -> f64 {
        // ∫ exp(-(x-μ)²/2σ²) exp(-2n x²/w²) dx
        let s2 = w * w / (4.0 * n);
        if target.is_flat(k) {
            (2.0 * PI * s2).sqrt()
        } else {
            let mu = target.center_mm[k] - focus.center_mm[k];
            let v = sig[k] * sig[k] + s2;
            (2.0 * PI).sqrt() * sig[k] * s2.sqrt() / v.sqrt() * (-mu * mu / (2.0 * v)).exp()
        }
    };
    let mu_y = target.center_mm[1] - focus.center_mm[1];
    let half = mu_y.abs() + 10.0 * sig[1];
    let panels = 4000;
    let h = 2.0 * half / panels as f64;
    let mut acc = 0.0;
    for i in 0..=panels {
        let dy = -half + i as f64 * h;
        let w = focus.beam_radius_mm(dy);
        let ratio = (focus.waist_mm() / w).powf(2.0 * n);
        let dens_y = (-(dy - mu_y).powi(2) / (2.0 * sig[1] * sig[1])).exp();
        let val = ratio * dens_y * transverse(0, w) * transverse(2, w);
        let c = if i == 0 || i == panels {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        acc += c * val;
    }
    target.peak_density_cm3 * f * acc * h / 3.0
}

/// Total ionization yield when the target is displaced by `d` (mm), the
/// quantity counted in a focus scan.
pub fn scan_yield(target: &TargetEnsemble, focus: &FocusModel, d: Vec3) -> f64 {
    let moved = target.displaced(d);
    Channel::ALL.iter().map(|&c| channel_yield(&moved, focus, c)).sum()
}

/// One Monte Carlo ionization.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ionization {
    pub birth_mm: Vec3,
    /// Ion momentum: SFA recoil plus atom motion (a.u.).
    pub momentum_au: Vec3,
    pub channel: Channel,
}

/// Proposal used for position rejection sampling.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PositionProposal {
    /// Draw from the focal Iⁿ profile, accept with density / peak.
    Focus,
    /// Draw from the target Gaussian, accept with Σ fᵢ Iⁿⁱ / Σ fᵢ.
    Target,
}

/// Samples birth positions and channels ∝ ionization_weight inside the box
/// target ± 4 FWHM ∩ focus ± 4 z_R (and ± 4 w(4 z_R) transverse).
#[derive(Clone, Debug)]
pub struct PositionSampler {
    target: TargetEnsemble,
    focus: FocusModel,
    proposal: PositionProposal,
    lo: Vec3,
    hi: Vec3,
    /// Channels with positive weight and their proposal probabilities.
    channels: Vec<(Channel, f64)>,
}

impl PositionSampler {
    pub fn new(target: &TargetEnsemble, focus: &FocusModel) -> Result<Self> {
        target.validate()?;
        focus.validate()?;
        let mut lo = Vec3::zeros();
        let mut hi = Vec3::zeros();
        let zr4 = 4.0 * focus.rayleigh_mm();
        let w_edge = 4.0 * focus.beam_radius_mm(zr4);
        for k in 0..3 {
            let reach = if k == 1 { zr4 } else { w_edge };
            let (mut a, mut b) = (focus.center_mm[k] - reach, focus.center_mm[k] + reach);
            if !target.is_flat(k) {
                a = a.max(target.center_mm[k] - 4.0 * target.fwhm_mm[k]);
                b = b.min(target.center_mm[k] + 4.0 * target.fwhm_mm[k]);
            }
            if !(b > a) {
                return Err(Error::Domain(format!(
                    "target and focus do not overlap along {} (target centre {} mm, focus centre {} mm)",
                    ["x", "y", "z"][k],
                    target.center_mm[k],
                    focus.center_mm[k]
                )));
            }
            lo[k] = a;
            hi[k] = b;
        }

        // Expected acceptance of each proposal is yield / (envelope mass).
        let fractions: Vec<(Channel, f64)> = Channel::ALL
            .iter()
            .map(|&c| (c, target.state_fraction(c)))
            .filter(|(_, f)| *f > 0.0)
            .collect();
        let focus_mass: Vec<(Channel, f64)> = fractions
            .iter()
            .map(|&(c, f)| (c, f * focal_volume(focus, c, zr4)))
            .collect();
        let focus_envelope = target.peak_density_cm3 * focus_mass.iter().map(|(_, m)| m).sum::<f64>();
        let target_envelope = target.atom_number() * fractions.iter().map(|(_, f)| f).sum::<f64>() * 1e3;
        let yield_total: f64 = Channel::ALL.iter().map(|&c| channel_yield(target, focus, c)).sum();
        if !(yield_total > 0.0) {
            return Err(Error::Domain(
                "target and focus have zero overlap: no ionization weight (check centres, density and excited fraction)".into(),
            ));
        }
        let proposal = if target_envelope < focus_envelope {
            PositionProposal::Target
        } else {
            PositionProposal::Focus
        };
        let channels = match proposal {
            PositionProposal::Focus => {
                let total: f64 = focus_mass.iter().map(|(_, m)| m).sum();
                focus_mass.into_iter().map(|(c, m)| (c, m / total)).collect()
            }
            PositionProposal::Target => fractions,
        };
        Ok(PositionSampler {
            target: target.clone(),
            focus: focus.clone(),
            proposal,
            lo,
            hi,
            channels,
        })
    }

    pub fn proposal(&self) -> PositionProposal {
        self.proposal
    }

    fn inside(&self, r: &Vec3) -> bool {
        (0..3).all(|k| r[k] >= self.lo[k] && r[k] <= self.hi[k])
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> Result<(Vec3, Channel)> {
        for _ in 0..MAX_POSITION_TRIES {
            match self.proposal {
                PositionProposal::Focus => {
                    let u: f64 = rng.random();
                    let mut acc = 0.0;
                    let mut channel = self.channels[self.channels.len() - 1].0;
                    for &(c, p) in &self.channels {
                        acc += p;
                        if u < acc {
                            channel = c;
                            break;
                        }
                    }
                    let n = self.focus.photon_order(channel);
                    let r = sample_focal_point(
                        &self.focus,
                        n,
                        self.hi.y - self.focus.center_mm[1],
                        self.lo.y - self.focus.center_mm[1],
                        rng,
                    );
                    let accept: f64 = rng.random();
                    if self.inside(&r) && accept < self.target.profile(&r) {
                        return Ok((r, channel));
                    }
                }
                PositionProposal::Target => {
                    let s = self.target.sigma_mm();
                    let mut r = Vec3::zeros();
                    for k in 0..3 {
                        let z: f64 = StandardNormal.sample(rng);
                        r[k] = self.target.center_mm[k] + s[k] * z;
                    }
                    let intensity = self.focus.relative_intensity(&r);
                    let weights: Vec<(Channel, f64)> = self
                        .channels
                        .iter()
                        .map(|&(c, f)| (c, f * intensity.powi(self.focus.photon_order(c) as i32)))
                        .collect();
                    let total: f64 = weights.iter().map(|(_, w)| w).sum();
                    let norm: f64 = self.channels.iter().map(|(_, f)| f).sum();
                    let accept: f64 = rng.random();
                    if self.inside(&r) && accept * norm < total {
                        let pick: f64 = rng.random::<f64>() * total;
                        let mut acc = 0.0;
                        for &(c, w) in &weights {
                            acc += w;
                            if pick < acc {
                                return Ok((r, c));
                            }
                        }
                        return Ok((r, weights[weights.len() - 1].0));
                    }
                }
            }
        }
        Err(Error::Numerical(format!(
            "position sampler accepted nothing in {MAX_POSITION_TRIES} proposals"
        )))
    }
}

const MAX_POSITION_TRIES: usize = 10_000_000;

/// ∫ (I/I₀)ⁿ d³r over |y| ≤ y_max (mm³), transverse extent unbounded.
fn focal_volume(focus: &FocusModel, channel: Channel, y_max: f64) -> f64 {
    let n = focus.photon_order(channel) as f64;
    let w0 = focus.waist_mm();
    let zr = focus.rayleigh_mm();
    // transverse: π w²/(2n) (w₀/w)^{2n} = π w₀²/(2n) (1+u²)^{1-n};
    // with u = tan θ the beam integrand becomes cos^{2n-4} θ.
    let panels = 2000;
    let tmax = (y_max / zr).atan();
    let h = 2.0 * tmax / panels as f64;
    let mut acc = 0.0;
    for i in 0..=panels {
        let t = -tmax + i as f64 * h;
        let c = if i == 0 || i == panels {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        acc += c * t.cos().powf(2.0 * n - 4.0);
    }
    PI * w0 * w0 / (2.0 * n) * zr * acc * h / 3.0
}

/// Point drawn ∝ (I/I₀)ⁿ with the beam coordinate restricted to
/// [y_lo, y_hi] relative to the focus.
fn sample_focal_point<R: Rng>(focus: &FocusModel, n: u32, y_hi: f64, y_lo: f64, rng: &mut R) -> Vec3 {
    let zr = focus.rayleigh_mm();
    let (a, b) = ((y_lo / zr).atan(), (y_hi / zr).atan());
    // Marginal along the beam ∝ (1+u²)^{1-n}: Cauchy proposal, thinned by (1+u²)^{2-n}.
    let u = loop {
        if n == 1 {
            break y_lo / zr + (y_hi - y_lo) / zr * rng.random::<f64>();
        }
        let u = (a + (b - a) * rng.random::<f64>()).tan();
        let keep = (1.0 + u * u).powf(2.0 - n as f64);
        if rng.random::<f64>() < keep {
            break u;
        }
    };
    let dy = u * zr;
    let s = focus.beam_radius_mm(dy) / (2.0 * (n as f64).sqrt());
    let gx: f64 = StandardNormal.sample(rng);
    let gz: f64 = StandardNormal.sample(rng);
    Vec3::new(
        focus.center_mm[0] + s * gx,
        focus.center_mm[1] + dy,
        focus.center_mm[2] + s * gz,
    )
}

/// Monte Carlo ionization events: birth position and channel ∝ ionization
/// weight, SFA recoil drawn from the channel's map, plus the atom's thermal
/// (and, for the beam, mean) momentum. Event `i` uses its own random stream.
pub fn generate_ionization_events(
    target: &TargetEnsemble,
    focus: &FocusModel,
    species: &IonSpecies,
    maps: &BTreeMap<Channel, SpectrumMap>,
    n_events: usize,
    seed: u64,
) -> Result<Vec<Ionization>> {
    generate_ionization_events_with(target, focus, species, maps, n_events, seed, Exec::default())
}

pub fn generate_ionization_events_with(
    target: &TargetEnsemble,
    focus: &FocusModel,
    species: &IonSpecies,
    maps: &BTreeMap<Channel, SpectrumMap>,
    n_events: usize,
    seed: u64,
    exec: Exec,
) -> Result<Vec<Ionization>> {
    if n_events == 0 {
        return Ok(Vec::new());
    }
    let positions = PositionSampler::new(target, focus)?;
    let mut samplers = BTreeMap::new();
    for &(c, _) in &positions.channels {
        let map = maps
            .get(&c)
            .ok_or_else(|| Error::Domain(format!("no spectrum supplied for populated channel {c}")))?;
        samplers.insert(c, RecoilSampler::new(map)?);
    }
    let thermal = target.thermal_sigma_au(species)?;
    let mean = target.mean_momentum_au(species);
    exec.try_map(n_events, |i| {
        let mut rng = substream(seed, tag::EVENT_GENERATION, i as u64);
        let (birth_mm, channel) = positions.sample(&mut rng)?;
        let recoil = samplers[&channel].sample(&mut rng)?;
        let mut atom = mean;
        for k in 0..3 {
            let g: f64 = StandardNormal.sample(&mut rng);
            atom[k] += thermal[k] * g;
        }
        Ok(Ionization {
            birth_mm,
            momentum_au: recoil + atom,
            channel,
        })
    })
}
