use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::units::{intensity_to_field, photon_energy};
use crate::{Error, Result, Vec3};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Envelope {
    #[default]
    Sin2,
}

/// Carrier-envelope phase that makes `A(t)` odd about the pulse centre
/// (cosine-like field). With it the spectrum is exactly symmetric under
/// `p_z -> -p_z`.
pub const SYMMETRIC_CEP: f64 = PI / 2.0;

/// Linearly polarized sin²-envelope pulse.
///
/// `A(t) = A₀ sin²(πt/T) cos(ωt + φ) ε̂` on `[0, T]`, zero elsewhere, with
/// `A₀ = E₀/ω` and `T = N·2π/ω`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PulseSpec", into = "PulseSpec")]
pub struct LaserPulse {
    spec: PulseSpec,
    omega: f64,
    field: f64,
    duration: f64,
}

/// Laboratory-unit description of a pulse.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PulseSpec {
    pub wavelength_nm: f64,
    pub intensity_w_per_cm2: f64,
    pub cycles: u32,
    #[serde(default = "default_cep")]
    pub cep_rad: f64,
    #[serde(default = "default_polarization")]
    pub polarization: [f64; 3],
    #[serde(default)]
    pub envelope: Envelope,
}

fn default_cep() -> f64 {
    SYMMETRIC_CEP
}

fn default_polarization() -> [f64; 3] {
    [0.0, 0.0, 1.0]
}

impl Default for PulseSpec {
    fn default() -> Self {
        PulseSpec {
            wavelength_nm: 800.0,
            intensity_w_per_cm2: 1e10,
            cycles: 20,
            cep_rad: SYMMETRIC_CEP,
            polarization: default_polarization(),
            envelope: Envelope::Sin2,
        }
    }
}

impl TryFrom<PulseSpec> for LaserPulse {
    type Error = Error;

    fn try_from(spec: PulseSpec) -> Result<Self> {
        if spec.cycles < 1 {
            return Err(Error::Domain("pulse needs at least one optical cycle".into()));
        }
        let omega = photon_energy(spec.wavelength_nm)?;
        let field = intensity_to_field(spec.intensity_w_per_cm2)?;
        let n = Vec3::from(spec.polarization).norm();
        if (n - 1.0).abs() > 1e-12 {
            return Err(Error::Domain(format!(
                "polarization axis must have unit norm, got |e| = {n}"
            )));
        }
        if !spec.cep_rad.is_finite() {
            return Err(Error::Domain("carrier-envelope phase must be finite".into()));
        }
        let duration = spec.cycles as f64 * 2.0 * PI / omega;
        Ok(LaserPulse {
            spec,
            omega,
            field,
            duration,
        })
    }
}

impl From<LaserPulse> for PulseSpec {
    fn from(p: LaserPulse) -> Self {
        p.spec
    }
}

impl LaserPulse {
    /// z-polarized pulse with the symmetric CEP.
    pub fn new(wavelength_nm: f64, intensity_w_per_cm2: f64, cycles: u32) -> Result<Self> {
        PulseSpec {
            wavelength_nm,
            intensity_w_per_cm2,
            cycles,
            ..PulseSpec::default()
        }
        .try_into()
    }

    pub fn with_cep(self, cep_rad: f64) -> Result<Self> {
        PulseSpec { cep_rad, ..self.spec }.try_into()
    }

    pub fn with_polarization(self, axis: [f64; 3]) -> Result<Self> {
        PulseSpec {
            polarization: axis,
            ..self.spec
        }
        .try_into()
    }

    pub fn with_intensity(self, intensity_w_per_cm2: f64) -> Result<Self> {
        PulseSpec {
            intensity_w_per_cm2,
            ..self.spec
        }
        .try_into()
    }

    pub fn spec(&self) -> &PulseSpec {
        &self.spec
    }

    pub fn wavelength_nm(&self) -> f64 {
        self.spec.wavelength_nm
    }

    pub fn intensity_w_per_cm2(&self) -> f64 {
        self.spec.intensity_w_per_cm2
    }

    pub fn cycles(&self) -> u32 {
        self.spec.cycles
    }

    pub fn cep(&self) -> f64 {
        self.spec.cep_rad
    }

    pub fn polarization(&self) -> Vec3 {
        Vec3::from(self.spec.polarization)
    }

    /// Carrier angular frequency (= photon energy) in a.u.
    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// Peak field E₀ in a.u.
    pub fn peak_field(&self) -> f64 {
        self.field
    }

    /// A₀ = E₀/ω in a.u.
    pub fn peak_vector_potential(&self) -> f64 {
        self.field / self.omega
    }

    /// Full envelope duration in a.u.
    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn cycle_period(&self) -> f64 {
        2.0 * PI / self.omega
    }

    /// Projection of A(t) on the polarization axis.
    pub fn vector_potential_scalar(&self, t: f64) -> f64 {
        if !(0.0..=self.duration).contains(&t) {
            return 0.0;
        }
        let env = (PI * t / self.duration).sin();
        self.peak_vector_potential() * env * env * (self.omega * t + self.spec.cep_rad).cos()
    }

    /// Projection of E(t) = −dA/dt on the polarization axis.
    pub fn electric_field_scalar(&self, t: f64) -> f64 {
        if !(0.0..=self.duration).contains(&t) {
            return 0.0;
        }
        let a0 = self.peak_vector_potential();
        let k = PI / self.duration;
        let phase = self.omega * t + self.spec.cep_rad;
        let (s, c) = (k * t).sin_cos();
        // d/dt[sin²(kt) cos(φ(t))] = k sin(2kt) cos φ − ω sin²(kt) sin φ
        -a0 * (k * 2.0 * s * c * phase.cos() - self.omega * s * s * phase.sin())
    }

    pub fn vector_potential(&self, t: f64) -> Vec3 {
        self.polarization() * self.vector_potential_scalar(t)
    }

    pub fn electric_field(&self, t: f64) -> Vec3 {
        self.polarization() * self.electric_field_scalar(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn pulse() -> LaserPulse {
        LaserPulse::new(800.0, 1e10, 20).unwrap()
    }

    #[test]
    fn vanishes_at_and_outside_endpoints() {
        let p = pulse();
        assert_eq!(p.vector_potential(0.0), Vec3::zeros());
        assert!(p.vector_potential_scalar(p.duration()).abs() < 1e-18);
        assert_eq!(p.vector_potential(-1.0), Vec3::zeros());
        assert_eq!(p.electric_field(p.duration() + 1.0), Vec3::zeros());
        assert_eq!(p.electric_field(-3.0), Vec3::zeros());
    }

    #[test]
    fn peak_vector_potential_at_centre() {
        let p = pulse().with_cep(0.0).unwrap();
        let a = p.vector_potential(p.duration() / 2.0);
        assert!((a.norm() - p.peak_vector_potential()).abs() < 1e-15);
        assert!((p.peak_vector_potential() - 9.372e-3).abs() < 2e-6);
    }

    #[test]
    fn field_matches_central_difference() {
        let p = pulse();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let h = 1e-3;
        for _ in 0..100 {
            let t = rng.random_range(h..p.duration() - h);
            let fd = (p.vector_potential(t + h) - p.vector_potential(t - h)) / (2.0 * h);
            assert!((p.electric_field(t) + fd).norm() < 1e-8);
        }
    }

    #[test]
    fn field_integrates_to_zero() {
        let p = pulse();
        let n = 200_000;
        let h = p.duration() / n as f64;
        let mut s = 0.0;
        for i in 0..=n {
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            s += w * p.electric_field_scalar(i as f64 * h);
        }
        assert!((s * h).abs() < 1e-12);
    }

    #[test]
    fn symmetric_cep_makes_potential_odd() {
        let p = pulse();
        let t = p.duration();
        for k in 1..50 {
            let tau = k as f64 * 7.3;
            let a = p.vector_potential_scalar(t / 2.0 + tau);
            let b = p.vector_potential_scalar(t / 2.0 - tau);
            assert!((a + b).abs() < 1e-14, "{a} {b}");
        }
    }

    #[test]
    fn rejects_invalid_pulses() {
        assert!(LaserPulse::new(800.0, 1e10, 0).is_err());
        assert!(LaserPulse::new(800.0, -1.0, 20).is_err());
        assert!(LaserPulse::new(-800.0, 1e10, 20).is_err());
        assert!(pulse().with_polarization([1.0, 1.0, 0.0]).is_err());
        let s = 0.5f64.sqrt();
        assert!(pulse().with_polarization([s, 0.0, s]).is_ok());
    }
}
