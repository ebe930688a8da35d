use serde::Serialize;

use super::{InitialState, LaserPulse};
use crate::units::au_to_ev;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Energy {
    pub au: f64,
    pub ev: f64,
}

impl Energy {
    pub fn from_au(au: f64) -> Self {
        Energy { au, ev: au_to_ev(au) }
    }
}

/// U_p = E₀² / (4ω²).
pub fn ponderomotive_energy(pulse: &LaserPulse) -> Energy {
    let e0 = pulse.peak_field();
    let w = pulse.omega();
    Energy::from_au(e0 * e0 / (4.0 * w * w))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    /// γ > 1.
    Multiphoton,
    /// γ < 1.
    Tunneling,
}

/// Keldysh parameter with its regime label. The label only records which
/// side of γ = 1 the value falls on; γ near 1 is an intermediate regime.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Keldysh {
    /// `f64::INFINITY` when the field vanishes.
    pub gamma: f64,
    pub infinite: bool,
    pub regime: Regime,
}

/// γ = sqrt(I_p / 2U_p).
pub fn keldysh(state: &InitialState, pulse: &LaserPulse) -> Keldysh {
    let up = ponderomotive_energy(pulse).au;
    if up == 0.0 {
        return Keldysh {
            gamma: f64::INFINITY,
            infinite: true,
            regime: Regime::Multiphoton,
        };
    }
    let gamma = (state.ip_au() / (2.0 * up)).sqrt();
    Keldysh {
        gamma,
        infinite: false,
        regime: if gamma >= 1.0 {
            Regime::Multiphoton
        } else {
            Regime::Tunneling
        },
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExcessEnergy {
    Open {
        photons: u32,
        energy: Energy,
        /// Photoelectron (and recoil) momentum magnitude sqrt(2 E_e), a.u.
        momentum_au: f64,
        /// Whether U_p was subtracted.
        ponderomotive_shift: bool,
    },
    BelowThreshold {
        photons: u32,
        /// Smallest photon number that opens the channel.
        min_photons: u32,
    },
}

impl ExcessEnergy {
    pub fn energy(&self) -> Option<Energy> {
        match self {
            ExcessEnergy::Open { energy, .. } => Some(*energy),
            ExcessEnergy::BelowThreshold { .. } => None,
        }
    }

    pub fn momentum_au(&self) -> Option<f64> {
        match self {
            ExcessEnergy::Open { momentum_au, .. } => Some(*momentum_au),
            ExcessEnergy::BelowThreshold { .. } => None,
        }
    }
}

/// E_e = n ħω − I_p (− U_p when `ponderomotive_shift`).
pub fn excess_energy(
    state: &InitialState,
    photons: u32,
    pulse: &LaserPulse,
    ponderomotive_shift: bool,
) -> ExcessEnergy {
    let w = pulse.omega();
    let shift = if ponderomotive_shift {
        ponderomotive_energy(pulse).au
    } else {
        0.0
    };
    let threshold = state.ip_au() + shift;
    let e = photons as f64 * w - threshold;
    if e > 0.0 {
        ExcessEnergy::Open {
            photons,
            energy: Energy::from_au(e),
            momentum_au: (2.0 * e).sqrt(),
            ponderomotive_shift,
        }
    } else {
        ExcessEnergy::BelowThreshold {
            photons,
            min_photons: minimum_photons(state, pulse, ponderomotive_shift),
        }
    }
}

/// Smallest n with n ħω above threshold.
pub fn minimum_photons(state: &InitialState, pulse: &LaserPulse, ponderomotive_shift: bool) -> u32 {
    let shift = if ponderomotive_shift {
        ponderomotive_energy(pulse).au
    } else {
        0.0
    };
    ((state.ip_au() + shift) / pulse.omega()).floor() as u32 + 1
}

/// Expected ATI ring momenta `sqrt(2(nω − I_p))` for the `count` lowest open
/// photon orders.
pub fn ring_momenta(state: &InitialState, pulse: &LaserPulse, count: usize) -> Result<Vec<f64>> {
    if pulse.omega() <= 0.0 {
        return Err(Error::Domain("photon energy must be positive".into()));
    }
    let n0 = minimum_photons(state, pulse, false);
    Ok((0..count as u32)
        .filter_map(|k| excess_energy(state, n0 + k, pulse, false).momentum_au())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::strongfield::Channel;

    // U_p[eV] ≈ 9.33e-14 · I[W/cm²] · λ²[μm²]
    fn up_rule_of_thumb(i: f64, lambda_um: f64) -> f64 {
        9.33e-14 * i * lambda_um * lambda_um
    }

    #[test]
    fn ponderomotive_examples() {
        let p = LaserPulse::new(800.0, 1e10, 20).unwrap();
        let up = ponderomotive_energy(&p).ev;
        assert!((up - up_rule_of_thumb(1e10, 0.8)).abs() < 2e-3 * up);
        assert!((up - 5.97e-4).abs() < 5e-6);
        let p2 = p.clone().with_intensity(2e10).unwrap();
        assert!((ponderomotive_energy(&p2).ev - 2.0 * up).abs() < 1e-15);
        let p9 = p.with_intensity(9e11).unwrap();
        assert!((ponderomotive_energy(&p9).ev - 5.4e-2).abs() < 1e-3);
    }

    #[test]
    fn keldysh_values() {
        let s = Channel::Rb5s.state();
        let g = |i: f64| keldysh(&s, &LaserPulse::new(800.0, i, 20).unwrap()).gamma;
        assert!((g(2e10) - 41.8).abs() < 0.1, "{}", g(2e10));
        assert!((g(1e11) - 18.7).abs() < 0.1, "{}", g(1e11));
        assert!((g(9e11) - 6.2).abs() < 0.05, "{}", g(9e11));
        let dark = keldysh(&s, &LaserPulse::new(800.0, 0.0, 20).unwrap());
        assert!(dark.infinite && dark.gamma.is_infinite());
        let strong = keldysh(&s, &LaserPulse::new(800.0, 1e15, 20).unwrap());
        assert_eq!(strong.regime, Regime::Tunneling);
    }

    #[test]
    fn channel_energetics() {
        let p = LaserPulse::new(800.0, 1e10, 20).unwrap();
        let s5 = excess_energy(&Channel::Rb5s.state(), 3, &p, false);
        assert!((s5.energy().unwrap().ev - 0.4694).abs() < 1e-3);
        assert!((s5.momentum_au().unwrap() - 0.186).abs() < 1e-3);
        let p5 = excess_energy(&Channel::Rb5p.state(), 2, &p, false);
        assert!((p5.energy().unwrap().ev - 0.5196).abs() < 1e-3);
        assert!((p5.momentum_au().unwrap() - 0.196).abs() < 1e-3);
        assert_eq!(
            excess_energy(&Channel::Rb5s.state(), 2, &p, false),
            ExcessEnergy::BelowThreshold {
                photons: 2,
                min_photons: 3
            }
        );
        let shifted = excess_energy(&Channel::Rb5s.state(), 3, &p, true);
        assert!(shifted.energy().unwrap().au < s5.energy().unwrap().au);
    }
}
