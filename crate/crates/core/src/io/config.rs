use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::T0Estimator;
use crate::apparatus::{DetectorModel, IonSpecies, SpectrometerGeometry};
use crate::ensemble::{CoilCalibration, FocusModel, TargetEnsemble};
use crate::strongfield::{Channel, LaserPulse, MomentumGrid, PulseSpec, QuadratureOptions};
use crate::{Error, Result};

/// Everything a run needs. Parsed from TOML; unknown keys are errors and
/// missing keys take the 3D MOT defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    pub pulse: PulseSpec,
    pub state: StateConfig,
    pub target: TargetEnsemble,
    pub focus: FocusModel,
    pub coils: CoilCalibration,
    pub species: IonSpecies,
    pub spectrometer: SpectrometerGeometry,
    pub detector: DetectorModel,
    pub spectrum: SpectrumConfig,
    pub simulate: SimulateConfig,
    pub analysis: AnalysisConfig,
    pub characterize: CharacterizeConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 1,
            output_dir: PathBuf::from("out"),
            pulse: PulseSpec {
                intensity_w_per_cm2: 2e10,
                ..PulseSpec::default()
            },
            state: StateConfig::default(),
            target: TargetEnsemble::mot3d(),
            focus: FocusModel::default(),
            coils: CoilCalibration::default(),
            species: IonSpecies::RB85,
            spectrometer: SpectrometerGeometry::default(),
            detector: DetectorModel::default(),
            spectrum: SpectrumConfig::default(),
            simulate: SimulateConfig::default(),
            analysis: AnalysisConfig::default(),
            characterize: CharacterizeConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StateConfig {
    /// Channels computed and simulated; populations come from the target.
    pub channels: Vec<Channel>,
}

impl Default for StateConfig {
    fn default() -> Self {
        StateConfig {
            channels: Channel::ALL.to_vec(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumConfig {
    /// Grids span ±half_width on every axis (a.u.).
    pub half_width_au: f64,
    /// Nodes per axis of the (p_z, p_x) plane written by `spectrum`.
    pub plane_points: usize,
    /// Nodes per axis of the 3D cube sampled by `simulate`.
    pub cube_points: usize,
    /// Cylinder radius of the sliced p_z curve.
    pub slice_radius_au: f64,
    pub quadrature: QuadratureOptions,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        SpectrumConfig {
            half_width_au: 0.5,
            plane_points: 201,
            cube_points: 61,
            slice_radius_au: 0.1,
            quadrature: QuadratureOptions::default(),
        }
    }
}

impl SpectrumConfig {
    pub fn plane(&self) -> Result<MomentumGrid> {
        MomentumGrid::plane_zx(self.half_width_au, self.plane_points)
    }

    pub fn cube(&self) -> Result<MomentumGrid> {
        MomentumGrid::cube(self.half_width_au, self.cube_points)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventFormat {
    #[default]
    Csv,
    Bin,
}

impl EventFormat {
    pub fn extension(self) -> &'static str {
        match self {
            EventFormat::Csv => "csv",
            EventFormat::Bin => "bin",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(EventFormat::Csv),
            "bin" => Ok(EventFormat::Bin),
            other => Err(Error::Config(format!(
                "unknown event format {other:?} (expected csv or bin)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateConfig {
    /// Ionization events generated (before detector cuts).
    pub events: usize,
    pub format: EventFormat,
    /// Precomputed 3D spectra per channel; computed inline when absent.
    pub spectrum_5s: Option<PathBuf>,
    pub spectrum_5p: Option<PathBuf>,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        SimulateConfig {
            events: 100_000,
            format: EventFormat::Csv,
            spectrum_5s: None,
            spectrum_5p: None,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CalibrationMode {
    /// t₀ and centre from the configured spectrometer and detector; needs
    /// events that carry truth.
    #[default]
    Truth,
    /// t₀ and centre estimated from the events themselves.
    Data,
    /// `t0_us` and `center_mm` given in this section.
    Fixed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisConfig {
    pub calibration: CalibrationMode,
    pub estimator: T0Estimator,
    pub bandwidth_us: Option<f64>,
    pub t0_us: Option<f64>,
    pub center_mm: Option<[f64; 2]>,
    /// Histogram range ±range_au on every momentum axis.
    pub range_au: f64,
    pub bins: usize,
    /// ρ_xy < slice_radius_au for the sliced p_z histogram.
    pub slice_radius_au: f64,
    /// |p_y| < slab_half_width_au for the (p_z, p_x) map.
    pub slab_half_width_au: f64,
    /// Theory curve (CSV, x,y) for the resolution fit.
    pub theory: Option<PathBuf>,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            calibration: CalibrationMode::Truth,
            estimator: T0Estimator::Symmetry,
            bandwidth_us: None,
            t0_us: None,
            center_mm: None,
            range_au: 1.0,
            bins: 100,
            slice_radius_au: 0.1,
            slab_half_width_au: 0.1,
            theory: None,
        }
    }
}

/// Parameters of the synthetic inputs `characterize` generates when no data
/// file is given.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CharacterizeConfig {
    pub expansion_temperature_uk: f64,
    pub expansion_sigma0_mm: f64,
    pub expansion_times_ms: Vec<f64>,
    /// Scan positions run over ±scan_span_mm in steps of scan_step_mm; the
    /// report lists the matching coil currents.
    pub scan_step_mm: f64,
    pub scan_span_mm: f64,
    /// Poisson noise with this many counts at the peak; noise-free when unset.
    pub scan_peak_counts: Option<f64>,
    pub image_width: usize,
    pub image_height: usize,
    pub pixel_um: f64,
    pub image_atom_number: f64,
    /// Cloud FWHM across and along the image rows (y, z).
    pub image_fwhm_mm: [f64; 2],
    pub image_probe_counts: f64,
    pub image_dark_counts: f64,
}

impl Default for CharacterizeConfig {
    fn default() -> Self {
        CharacterizeConfig {
            expansion_temperature_uk: 130.0,
            expansion_sigma0_mm: 0.4,
            expansion_times_ms: vec![2.0, 4.0, 6.0, 8.0, 10.0, 12.0, 14.0, 16.0],
            scan_step_mm: 0.08,
            scan_span_mm: 2.0,
            scan_peak_counts: None,
            image_width: 200,
            image_height: 160,
            pixel_um: 20.0,
            image_atom_number: 1.5e6,
            // Absorption-imaging widths; the ionization scan gives 1.22 mm along z.
            image_fwhm_mm: [1.1, 0.7],
            image_probe_counts: 1000.0,
            image_dark_counts: 10.0,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads `path` (or the defaults when `None`) and applies `key=value`
    /// overrides, e.g. `pulse.intensity_w_per_cm2=1e11`.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?,
            None => String::new(),
        };
        let located = |e: Error| match (e, path) {
            (Error::Config(m), Some(p)) => Error::Config(format!("{}: {m}", p.display())),
            (e, _) => e,
        };
        // Parse once untouched so errors point at lines of the file.
        let base: RunConfig = toml::from_str(&text).map_err(|e| located(Error::Config(e.to_string())))?;
        if overrides.is_empty() {
            base.validate()?;
            return Ok(base);
        }
        let mut table: toml::Table = toml::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let cfg: RunConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(format!("after --set overrides: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(format!("cannot serialize configuration: {e}")))
    }

    pub fn pulse(&self) -> Result<LaserPulse> {
        LaserPulse::try_from(self.pulse.clone()).map_err(|e| Error::Config(format!("pulse: {e}")))
    }

    pub fn validate(&self) -> Result<()> {
        let section = |name: &str, r: Result<()>| {
            r.map_err(|e| match e {
                Error::Domain(m) | Error::Config(m) => Error::Config(format!("[{name}] {m}")),
                other => other,
            })
        };
        self.pulse()?;
        if self.state.channels.is_empty() {
            return Err(Error::Config(
                "[state] channels must list at least one of \"5s\", \"5p\"".into(),
            ));
        }
        section("target", self.target.validate())?;
        section("focus", self.focus.validate())?;
        section("coils", self.coils.validate())?;
        section("species", self.species.validate())?;
        section("spectrometer", self.spectrometer.validate())?;
        section("detector", self.detector.validate())?;
        section("spectrum", self.spectrum.plane().map(|_| ()))?;
        section("spectrum", self.spectrum.cube().map(|_| ()))?;
        if !(self.spectrum.slice_radius_au > 0.0) {
            return Err(Error::Config("[spectrum] slice_radius_au must be positive".into()));
        }
        let a = &self.analysis;
        if a.bins < 1 || !(a.range_au > 0.0) || !(a.slice_radius_au > 0.0) || !(a.slab_half_width_au > 0.0) {
            return Err(Error::Config(
                "[analysis] bins must be >= 1 and range_au, slice_radius_au, slab_half_width_au positive".into(),
            ));
        }
        let c = &self.characterize;
        if c.expansion_times_ms.iter().any(|t| !t.is_finite())
            || !(c.scan_step_mm > 0.0)
            || !(c.scan_span_mm > 0.0)
            || c.image_fwhm_mm.iter().any(|w| !(*w > 0.0))
            || !(c.pixel_um > 0.0)
            || c.image_width == 0
            || c.image_height == 0
        {
            return Err(Error::Config(
                "[characterize] steps, spans, pixel size and image sizes must be positive".into(),
            ));
        }
        Ok(())
    }
}

fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override {assignment:?} is not of the form section.key=value")))?;
    let key = key.trim();
    let raw = raw.trim();
    let value = match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("override key {key:?} is malformed")));
    }
    let mut cur = table;
    for p in &parts[..parts.len() - 1] {
        let entry = cur
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override {key:?}: {p} is not a section")))?;
    }
    cur.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let c = RunConfig::default();
        let text = c.to_toml().unwrap();
        assert_eq!(RunConfig::from_toml(&text).unwrap(), c);
        assert_eq!(RunConfig::from_toml("").unwrap(), c);
    }

    #[test]
    fn unknown_keys_are_rejected_with_location() {
        let err = RunConfig::from_toml("seed = 3\n[pulse]\nwavelenght_nm = 800.0\n").unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, Error::Config(_)));
        assert!(msg.contains("wavelenght_nm") && msg.contains('3'), "{msg}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn overrides_apply() {
        let c = RunConfig::load(
            None,
            &[
                "pulse.intensity_w_per_cm2=1e11".into(),
                "seed=9".into(),
                "state.channels=[\"5p\"]".into(),
                "simulate.format=bin".into(),
            ],
        )
        .unwrap();
        assert_eq!(c.pulse.intensity_w_per_cm2, 1e11);
        assert_eq!(c.seed, 9);
        assert_eq!(c.state.channels, vec![Channel::Rb5p]);
        assert_eq!(c.simulate.format, EventFormat::Bin);
        assert!(RunConfig::load(None, &["pulse.bogus=1".into()]).is_err());
        assert!(RunConfig::load(None, &["novalue".into()]).is_err());
    }

    #[test]
    fn invalid_values_are_config_errors() {
        let e = RunConfig::from_toml("[target]\nexcited_fraction = 1.5\n").unwrap_err();
        assert!(matches!(e, Error::Config(ref m) if m.contains("[target]")), "{e}");
        let e = RunConfig::from_toml("[pulse]\nwavelength_nm = -5.0\n").unwrap_err();
        assert!(matches!(e, Error::Config(_)));
    }
}
