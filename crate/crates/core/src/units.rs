//! Physical constants and unit conversions.
//!
//! Everything inside the crate computes in Hartree atomic units
//! (ħ = e = mₑ = 4πε₀ = 1). Public configuration uses laboratory units
//! (nm, eV, W/cm², V/cm, μK, mm, ns, μs) and is converted here at the
//! boundary.

use crate::{Error, Result};

/// Frozen CODATA-2018 values. Do not update piecemeal: golden-number tests
/// are pinned to this table.
pub mod codata {
    /// Hartree energy in eV.
    pub const HARTREE_EV: f64 = 27.211_386_245_988;
    /// Atomic unit of time in s.
    pub const TIME_AU_S: f64 = 2.418_884_326_585_7e-17;
    /// Bohr radius in m.
    pub const BOHR_M: f64 = 5.291_772_109_03e-11;
    /// Atomic unit of electric field in V/m.
    pub const FIELD_AU_V_PER_M: f64 = 5.142_206_747_63e11;
    /// Atomic unit of intensity, ½ε₀c·F_au², in W/cm².
    pub const INTENSITY_AU_W_PER_CM2: f64 = 3.509_445_520_59e16;
    /// Atomic mass unit in electron masses.
    pub const AMU_ME: f64 = 1_822.888_486_209;
    /// Boltzmann constant in Hartree per kelvin.
    pub const BOLTZMANN_AU_PER_K: f64 = 3.166_811_563e-6;
    /// Speed of light in atomic units (inverse fine-structure constant).
    pub const SPEED_OF_LIGHT_AU: f64 = 137.035_999_084;
    /// Atomic unit of velocity in m/s.
    pub const VELOCITY_AU_M_PER_S: f64 = 2.187_691_263_64e6;
    /// Atomic unit of momentum in kg·m/s.
    pub const MOMENTUM_AU_KG_M_PER_S: f64 = 1.992_851_914_10e-24;
    /// Atomic mass unit in kg.
    pub const AMU_KG: f64 = 1.660_539_066_60e-27;
    /// Boltzmann constant in J/K.
    pub const BOLTZMANN_J_PER_K: f64 = 1.380_649e-23;
    /// Isotopic masses in amu.
    pub const RB85_AMU: f64 = 84.911_789_738;
    pub const RB87_AMU: f64 = 86.909_180_527;
}

/// Scale factors between laboratory units and atomic units.
///
/// Each field is "how many laboratory units make one atomic unit".
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UnitSystem {
    pub energy_ev: f64,
    pub time_s: f64,
    pub length_m: f64,
    pub field_v_per_m: f64,
    pub intensity_w_per_cm2: f64,
    pub amu_in_me: f64,
    pub boltzmann_au_per_k: f64,
}

pub const ATOMIC: UnitSystem = UnitSystem {
    energy_ev: codata::HARTREE_EV,
    time_s: codata::TIME_AU_S,
    length_m: codata::BOHR_M,
    field_v_per_m: codata::FIELD_AU_V_PER_M,
    intensity_w_per_cm2: codata::INTENSITY_AU_W_PER_CM2,
    amu_in_me: codata::AMU_ME,
    boltzmann_au_per_k: codata::BOLTZMANN_AU_PER_K,
};

impl Default for UnitSystem {
    fn default() -> Self {
        ATOMIC
    }
}

pub fn ev_to_au(ev: f64) -> f64 {
    ev / ATOMIC.energy_ev
}

pub fn au_to_ev(au: f64) -> f64 {
    au * ATOMIC.energy_ev
}

pub fn nm_to_au(nm: f64) -> f64 {
    nm * 1e-9 / ATOMIC.length_m
}

pub fn au_to_nm(au: f64) -> f64 {
    au * ATOMIC.length_m * 1e9
}

pub fn mm_to_au(mm: f64) -> f64 {
    mm * 1e-3 / ATOMIC.length_m
}

pub fn au_to_mm(au: f64) -> f64 {
    au * ATOMIC.length_m * 1e3
}

pub fn s_to_au(s: f64) -> f64 {
    s / ATOMIC.time_s
}

pub fn au_to_s(au: f64) -> f64 {
    au * ATOMIC.time_s
}

pub fn ns_to_au(ns: f64) -> f64 {
    s_to_au(ns * 1e-9)
}

pub fn au_to_ns(au: f64) -> f64 {
    au_to_s(au) * 1e9
}

pub fn us_to_au(us: f64) -> f64 {
    s_to_au(us * 1e-6)
}

pub fn au_to_us(au: f64) -> f64 {
    au_to_s(au) * 1e6
}

/// V/cm to atomic field units.
pub fn v_per_cm_to_au(v_per_cm: f64) -> f64 {
    v_per_cm * 100.0 / ATOMIC.field_v_per_m
}

pub fn au_to_v_per_cm(au: f64) -> f64 {
    au * ATOMIC.field_v_per_m / 100.0
}

pub fn amu_to_au(amu: f64) -> f64 {
    amu * ATOMIC.amu_in_me
}

pub fn au_to_amu(me: f64) -> f64 {
    me / ATOMIC.amu_in_me
}

pub fn m_per_s_to_au(v: f64) -> f64 {
    v / codata::VELOCITY_AU_M_PER_S
}

pub fn au_to_m_per_s(v: f64) -> f64 {
    v * codata::VELOCITY_AU_M_PER_S
}

/// μK to Hartree (k_B·T).
pub fn microkelvin_to_au(t_uk: f64) -> f64 {
    t_uk * 1e-6 * ATOMIC.boltzmann_au_per_k
}

pub fn au_to_microkelvin(e: f64) -> f64 {
    e / ATOMIC.boltzmann_au_per_k * 1e6
}

/// Photon energy ħω = 2πc/λ, in atomic units, for a wavelength in nm.
pub fn photon_energy(wavelength_nm: f64) -> Result<f64> {
    if !(wavelength_nm > 0.0) || !wavelength_nm.is_finite() {
        return Err(Error::Domain(format!(
            "wavelength must be positive, got {wavelength_nm} nm"
        )));
    }
    Ok(2.0 * std::f64::consts::PI * codata::SPEED_OF_LIGHT_AU / nm_to_au(wavelength_nm))
}

/// Peak field amplitude (a.u.) of a linearly polarized wave of the given
/// cycle-averaged intensity in W/cm².
pub fn intensity_to_field(intensity_w_per_cm2: f64) -> Result<f64> {
    if !(intensity_w_per_cm2 >= 0.0) || !intensity_w_per_cm2.is_finite() {
        return Err(Error::Domain(format!(
            "intensity must be non-negative, got {intensity_w_per_cm2} W/cm^2"
        )));
    }
    Ok((intensity_w_per_cm2 / ATOMIC.intensity_w_per_cm2).sqrt())
}

pub fn field_to_intensity(field_au: f64) -> f64 {
    field_au * field_au * ATOMIC.intensity_w_per_cm2
}

/// Per-axis Maxwell–Boltzmann momentum width σ_p = sqrt(m k_B T), a.u.
pub fn thermal_momentum_sigma(temperature_uk: f64, mass_au: f64) -> Result<f64> {
    if !(temperature_uk >= 0.0) {
        return Err(Error::Domain(format!(
            "temperature must be non-negative, got {temperature_uk} uK"
        )));
    }
    if !(mass_au > 0.0) {
        return Err(Error::Domain(format!("mass must be positive, got {mass_au}")));
    }
    Ok((mass_au * microkelvin_to_au(temperature_uk)).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    // Independent SI route: E = h c / λ with exact SI h, c, e.
    fn photon_energy_ev_si(nm: f64) -> f64 {
        let h = 6.626_070_15e-34;
        let c = 299_792_458.0;
        let e = 1.602_176_634e-19;
        h * c / (nm * 1e-9) / e
    }

    #[test]
    fn photon_energy_800_and_780() {
        let e800 = au_to_ev(photon_energy(800.0).unwrap());
        assert_relative_eq!(e800, photon_energy_ev_si(800.0), max_relative = 1e-9);
        assert!((e800 - 1.5498).abs() < 1e-4);
        assert!((photon_energy(800.0).unwrap() - 0.05696).abs() < 1e-5);
        let e780 = au_to_ev(photon_energy(780.0).unwrap());
        assert!((e780 - 1.5895).abs() < 1e-4);
        assert_relative_eq!(
            photon_energy(400.0).unwrap(),
            2.0 * photon_energy(800.0).unwrap(),
            max_relative = 1e-14
        );
    }

    #[test]
    fn photon_energy_rejects_bad_wavelength() {
        assert!(matches!(photon_energy(0.0), Err(Error::Domain(_))));
        assert!(matches!(photon_energy(-5.0), Err(Error::Domain(_))));
    }

    #[test]
    fn intensity_field_examples() {
        assert_relative_eq!(
            intensity_to_field(ATOMIC.intensity_w_per_cm2).unwrap(),
            1.0,
            max_relative = 1e-15
        );
        let e0 = intensity_to_field(1e10).unwrap();
        assert!((e0 - 5.338e-4).abs() < 1e-7);
        assert_eq!(intensity_to_field(0.0).unwrap(), 0.0);
        assert!(intensity_to_field(-1.0).is_err());
    }

    #[test]
    fn intensity_unit_matches_si_definition() {
        let eps0 = 8.854_187_812_8e-12;
        let c = 299_792_458.0;
        let f = ATOMIC.field_v_per_m;
        let i_w_cm2 = 0.5 * eps0 * c * f * f / 1e4;
        assert_relative_eq!(i_w_cm2, ATOMIC.intensity_w_per_cm2, max_relative = 1e-9);
    }

    #[test]
    fn thermal_sigma_examples() {
        let m = 154_946.0;
        let s = thermal_momentum_sigma(130.0, m).unwrap();
        assert!((s - 8.0e-3).abs() < 0.05e-3, "{s}");
        assert_eq!(thermal_momentum_sigma(0.0, m).unwrap(), 0.0);
        assert_relative_eq!(
            thermal_momentum_sigma(4.0 * 130.0, m).unwrap(),
            2.0 * s,
            max_relative = 1e-14
        );
        assert!(thermal_momentum_sigma(-1.0, m).is_err());
        assert!(thermal_momentum_sigma(1.0, 0.0).is_err());
    }

    #[test]
    fn momentum_unit_consistency() {
        // m_e · v_au == p_au
        let me = codata::AMU_KG / codata::AMU_ME;
        assert_relative_eq!(
            me * codata::VELOCITY_AU_M_PER_S,
            codata::MOMENTUM_AU_KG_M_PER_S,
            max_relative = 1e-9
        );
        assert_relative_eq!(
            codata::VELOCITY_AU_M_PER_S * codata::TIME_AU_S,
            codata::BOHR_M,
            max_relative = 1e-9
        );
    }

    proptest! {
        #[test]
        fn round_trips_are_identities(x in 1e-6f64..1e6) {
            let pairs: [(fn(f64) -> f64, fn(f64) -> f64); 10] = [
                (ev_to_au, au_to_ev),
                (nm_to_au, au_to_nm),
                (mm_to_au, au_to_mm),
                (s_to_au, au_to_s),
                (ns_to_au, au_to_ns),
                (us_to_au, au_to_us),
                (v_per_cm_to_au, au_to_v_per_cm),
                (amu_to_au, au_to_amu),
                (m_per_s_to_au, au_to_m_per_s),
                (microkelvin_to_au, au_to_microkelvin),
            ];
            for (to, from) in pairs {
                prop_assert!((from(to(x)) - x).abs() <= 1e-12 * x);
                prop_assert!((to(from(x)) - x).abs() <= 1e-12 * x);
            }
            let i = field_to_intensity(intensity_to_field(x).unwrap());
            prop_assert!((i - x).abs() <= 1e-12 * x);
        }

        #[test]
        fn thermal_sigma_monotone(t in 0.0f64..1e4, dt in 1e-3f64..1e3, m in 1.0f64..1e6, dm in 1.0f64..1e5) {
            let base = thermal_momentum_sigma(t, m).unwrap();
            prop_assert!(thermal_momentum_sigma(t + dt, m).unwrap() > base);
            if t > 0.0 {
                prop_assert!(thermal_momentum_sigma(t, m + dm).unwrap() > base);
            }
        }
    }
}
