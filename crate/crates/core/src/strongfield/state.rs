use serde::{Deserialize, Serialize};

use crate::units::ev_to_au;
use crate::{Error, Result};

/// Ionization channel of rubidium.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Channel {
    #[serde(rename = "5s")]
    Rb5s,
    #[serde(rename = "5p")]
    Rb5p,
}

impl Channel {
    pub const ALL: [Channel; 2] = [Channel::Rb5s, Channel::Rb5p];

    /// Ionization potential in eV.
    pub fn ionization_potential_ev(self) -> f64 {
        match self {
            Channel::Rb5s => 4.18,
            Channel::Rb5p => 2.58,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Channel::Rb5s => "5s",
            Channel::Rb5p => "5p",
        }
    }

    pub fn code(self) -> u8 {
        match self {
            Channel::Rb5s => 0,
            Channel::Rb5p => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Channel::Rb5s),
            1 => Some(Channel::Rb5p),
            _ => None,
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "5s" => Some(Channel::Rb5s),
            "5p" => Some(Channel::Rb5p),
            _ => None,
        }
    }

    pub fn state(self) -> InitialState {
        InitialState::new(self, self.ionization_potential_ev()).expect("tabulated Ip is positive")
    }
}

impl std::fmt::Display for Channel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Bound state modelled as a hydrogen-like s orbital with binding momentum
/// κ = sqrt(2 I_p). The 5p channel reuses the same radial form with its own
/// I_p; only the binding energy distinguishes the channels.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitialState {
    pub channel: Channel,
    ip_ev: f64,
    kappa: f64,
}

impl InitialState {
    pub fn new(channel: Channel, ip_ev: f64) -> Result<Self> {
        if !(ip_ev > 0.0) || !ip_ev.is_finite() {
            return Err(Error::Domain(format!(
                "ionization potential must be positive, got {ip_ev} eV"
            )));
        }
        Ok(InitialState {
            channel,
            ip_ev,
            kappa: (2.0 * ev_to_au(ip_ev)).sqrt(),
        })
    }

    pub fn ip_ev(&self) -> f64 {
        self.ip_ev
    }

    pub fn ip_au(&self) -> f64 {
        ev_to_au(self.ip_ev)
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kappa_matches_ip() {
        for c in Channel::ALL {
            let s = c.state();
            let rel = (s.kappa() * s.kappa() - 2.0 * s.ip_au()).abs() / (2.0 * s.ip_au());
            assert!(rel < 1e-12);
        }
        assert!(InitialState::new(Channel::Rb5s, 0.0).is_err());
        assert_eq!(Channel::parse("5p"), Some(Channel::Rb5p));
        assert_eq!(Channel::from_code(Channel::Rb5p.code()), Some(Channel::Rb5p));
    }
}
