//! Recoil-ion spectrometer forward model: uniform extraction field, field-free
//! drift tube, and a position- and time-sensitive detector.
//!
//! The spectrometer axis is +z, pointing from the target to the detector.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::strongfield::Channel;
use crate::units::{amu_to_au, au_to_mm, au_to_us, codata, mm_to_au, ns_to_au, v_per_cm_to_au};
use crate::{Error, Result, Vec3};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrometerGeometry {
    pub field_v_per_cm: f64,
    /// Target point to drift-tube entrance.
    pub acceleration_mm: f64,
    pub drift_mm: f64,
    pub detector_radius_mm: f64,
    /// Effective Gaussian momentum blur per axis (a.u.) standing in for
    /// field inhomogeneity and stray fields. Applied to birth momenta.
    pub blur_au: [f64; 3],
}

impl Default for SpectrometerGeometry {
    fn default() -> Self {
        SpectrometerGeometry {
            field_v_per_cm: 0.5,
            acceleration_mm: 85.0,
            drift_mm: 670.0,
            detector_radius_mm: 40.0,
            blur_au: [0.0; 3],
        }
    }
}

impl SpectrometerGeometry {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("field_v_per_cm", self.field_v_per_cm),
            ("acceleration_mm", self.acceleration_mm),
            ("drift_mm", self.drift_mm),
            ("detector_radius_mm", self.detector_radius_mm),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Domain(format!("spectrometer {name} must be positive, got {v}")));
            }
        }
        if self.blur_au.iter().any(|b| !(*b >= 0.0)) {
            return Err(Error::Domain("momentum blur must be non-negative".into()));
        }
        Ok(())
    }

    pub fn field_au(&self) -> f64 {
        v_per_cm_to_au(self.field_v_per_cm)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IonSpecies {
    pub mass_amu: f64,
    pub charge: u32,
}

impl IonSpecies {
    pub const RB85: IonSpecies = IonSpecies {
        mass_amu: codata::RB85_AMU,
        charge: 1,
    };
    pub const RB87: IonSpecies = IonSpecies {
        mass_amu: codata::RB87_AMU,
        charge: 1,
    };

    pub fn validate(&self) -> Result<()> {
        if !(self.mass_amu > 0.0) {
            return Err(Error::Domain(format!(
                "ion mass must be positive, got {}",
                self.mass_amu
            )));
        }
        if self.charge < 1 {
            return Err(Error::Domain("ion charge state must be at least 1".into()));
        }
        Ok(())
    }

    pub fn mass_au(&self) -> f64 {
        amu_to_au(self.mass_amu)
    }
}

impl Default for IonSpecies {
    fn default() -> Self {
        IonSpecies::RB85
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectorModel {
    pub position_sigma_mm: f64,
    pub time_sigma_ns: f64,
    /// TOF acceptance window; `None` is unbounded.
    pub window_us: Option<f64>,
    pub efficiency: f64,
    /// Where the spectrometer axis lands in detector coordinates.
    pub center_mm: [f64; 2],
    /// Constant added to every recorded time (trigger delay).
    pub time_offset_ns: f64,
}

impl Default for DetectorModel {
    fn default() -> Self {
        DetectorModel {
            position_sigma_mm: 0.1,
            time_sigma_ns: 1.0,
            window_us: None,
            efficiency: 1.0,
            center_mm: [0.0, 0.0],
            time_offset_ns: 0.0,
        }
    }
}

impl DetectorModel {
    /// Noise-free, fully efficient detector.
    pub fn ideal() -> Self {
        DetectorModel {
            position_sigma_mm: 0.0,
            time_sigma_ns: 0.0,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.position_sigma_mm >= 0.0) || !(self.time_sigma_ns >= 0.0) {
            return Err(Error::Domain("detector resolutions must be non-negative".into()));
        }
        if !(0.0..=1.0).contains(&self.efficiency) {
            return Err(Error::Domain(format!(
                "detector efficiency must lie in [0, 1], got {}",
                self.efficiency
            )));
        }
        if let Some(w) = self.window_us {
            if !(w > 0.0) {
                return Err(Error::Domain(format!("TOF window must be positive, got {w} us")));
            }
        }
        Ok(())
    }
}

/// Simulation truth attached to generated events.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    /// Ion momentum at birth, before any blur (a.u.).
    pub momentum_au: [f64; 3],
    pub birth_mm: [f64; 3],
    pub channel: Channel,
}

/// One recorded ion hit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectorEvent {
    pub id: u64,
    pub t_us: f64,
    pub x_mm: f64,
    pub y_mm: f64,
    pub truth: Option<Truth>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Rejection {
    OutsideRadius,
    OutsideWindow,
    EfficiencyLoss,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Outcome {
    Accepted(DetectorEvent),
    Rejected(Rejection),
}

/// Time of flight (a.u.) for an ion with momentum component `pz_au` along
/// the spectrometer axis, born `z_birth_mm` from the nominal target point
/// (positive toward the detector).
///
/// `t = [−v + sqrt(v² + 2as)]/a + L/sqrt(v² + 2as)` with `a = qE/m`,
/// `v = p_z/m`, `s` the remaining acceleration length and `L` the drift.
pub fn time_of_flight(geom: &SpectrometerGeometry, species: &IonSpecies, pz_au: f64, z_birth_mm: f64) -> Result<f64> {
    let s = geom.acceleration_mm - z_birth_mm;
    if !(s > 0.0) {
        return Err(Error::Domain(format!(
            "ion born {z_birth_mm} mm from the target point is beyond the drift entrance"
        )));
    }
    let m = species.mass_au();
    let a = species.charge as f64 * geom.field_au() / m;
    let s = mm_to_au(s);
    let v = pz_au / m;
    let exit = (v * v + 2.0 * a * s).sqrt();
    // Same root, written to avoid cancellation on each side of v = 0.
    let accel = if v >= 0.0 { 2.0 * s / (v + exit) } else { (exit - v) / a };
    Ok(accel + mm_to_au(geom.drift_mm) / exit)
}

/// dt/dp_z at fixed birth position (a.u. time per a.u. momentum).
pub fn tof_slope(geom: &SpectrometerGeometry, species: &IonSpecies, pz_au: f64, z_birth_mm: f64) -> f64 {
    let m = species.mass_au();
    let a = species.charge as f64 * geom.field_au() / m;
    let s = mm_to_au(geom.acceleration_mm - z_birth_mm);
    let v = pz_au / m;
    let exit = (v * v + 2.0 * a * s).sqrt();
    let l = mm_to_au(geom.drift_mm);
    // d/dv of the accel and drift terms, then chain rule dv/dp = 1/m
    let d_accel = (-1.0 + v / exit) / a;
    let d_drift = -l * v / (exit * exit * exit);
    (d_accel + d_drift) / m
}

/// Momentum resolution per unit time along the spectrometer axis: qE·Δt.
pub fn momentum_per_time(geom: &SpectrometerGeometry, species: &IonSpecies, dt_ns: f64) -> f64 {
    species.charge as f64 * geom.field_au() * ns_to_au(dt_ns)
}

/// Transverse impact point (mm) after free flight for time `t_au`.
pub fn transverse_hit(species: &IonSpecies, px_au: f64, py_au: f64, birth_mm: [f64; 2], t_au: f64) -> [f64; 2] {
    debug_assert!(t_au > 0.0);
    let m = species.mass_au();
    [
        birth_mm[0] + au_to_mm(px_au / m * t_au),
        birth_mm[1] + au_to_mm(py_au / m * t_au),
    ]
}

/// Carries one ion from birth to the detector, adding blur and detector
/// noise and applying the radius, window and efficiency cuts, in that order.
///
/// Exactly six random numbers are drawn per call whatever the outcome.
#[allow(clippy::too_many_arguments)]
pub fn simulate_event<R: Rng>(
    geom: &SpectrometerGeometry,
    detector: &DetectorModel,
    species: &IonSpecies,
    id: u64,
    birth_mm: Vec3,
    momentum_au: Vec3,
    channel: Channel,
    rng: &mut R,
) -> Result<Outcome> {
    let mut normal = || -> f64 { StandardNormal.sample(rng) };
    let blur = Vec3::new(normal(), normal(), normal());
    let noise = [normal(), normal(), normal()];
    let u: f64 = rng.random();

    let p = momentum_au + blur.component_mul(&Vec3::from(geom.blur_au));
    let tof = time_of_flight(geom, species, p.z, birth_mm.z)?;
    let hit = transverse_hit(species, p.x, p.y, [birth_mm.x, birth_mm.y], tof);
    let x = hit[0] + detector.center_mm[0] + detector.position_sigma_mm * noise[0];
    let y = hit[1] + detector.center_mm[1] + detector.position_sigma_mm * noise[1];
    let t_us = au_to_us(tof) + (detector.time_offset_ns + detector.time_sigma_ns * noise[2]) * 1e-3;

    let dx = x - detector.center_mm[0];
    let dy = y - detector.center_mm[1];
    if dx * dx + dy * dy > geom.detector_radius_mm * geom.detector_radius_mm {
        return Ok(Outcome::Rejected(Rejection::OutsideRadius));
    }
    if let Some(w) = detector.window_us {
        if !(0.0..=w).contains(&t_us) {
            return Ok(Outcome::Rejected(Rejection::OutsideWindow));
        }
    }
    if u >= detector.efficiency {
        return Ok(Outcome::Rejected(Rejection::EfficiencyLoss));
    }
    Ok(Outcome::Accepted(DetectorEvent {
        id,
        t_us,
        x_mm: x,
        y_mm: y,
        truth: Some(Truth {
            momentum_au: momentum_au.into(),
            birth_mm: birth_mm.into(),
            channel,
        }),
    }))
}

/// Zero-momentum TOF from the nominal target point, in μs.
pub fn nominal_t0_us(geom: &SpectrometerGeometry, species: &IonSpecies) -> Result<f64> {
    time_of_flight(geom, species, 0.0, 0.0).map(au_to_us)
}
