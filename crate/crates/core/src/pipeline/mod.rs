//! Whole runs assembled from the library: what each CLI command computes.
//!
//! Everything here is a pure function of the configuration and the inputs.
//! [`run`] adds the files, plots and manifests.

pub mod run;

use std::collections::BTreeMap;

use serde::Serialize;

use crate::analysis::{
    absorption_analysis, calibrate, fit_gaussian_1d, fit_resolution, histogram_with, linear_pz, poisson_counts,
    reconstruct_all, scan_positions, scan_profile, synthetic_expansion, synthetic_images, synthetic_scan,
    temperature_from_expansion, AbsorptionResult, Calibration, CalibrationOptions, ExpansionFit, ExpansionPoint,
    GaussianFit, HistAxis, Histogram, Image, MomentumRecord, ResolutionFit, ScanFit, Slice, Weights, FWHM_PER_SIGMA,
};
use crate::apparatus::{nominal_t0_us, simulate_event, time_of_flight, DetectorEvent, Outcome, Rejection};
use crate::ensemble::{channel_yield, generate_ionization_events_with, PositionSampler, TargetEnsemble};
use crate::io::{CalibrationMode, RunConfig};
use crate::profile::Profile;
use crate::rng::{substream, tag};
use crate::strongfield::{
    excess_energy, incoherent_sum, keldysh, minimum_photons, ponderomotive_energy, spectrum_with, Channel, Component,
    Energy, ExcessEnergy, Keldysh, SpectrumMap,
};
use crate::units::{au_to_us, ns_to_au};
use crate::{Error, Exec, Result};

#[derive(Clone, Debug, Serialize)]
pub struct ChannelConstants {
    pub channel: Channel,
    pub ionization_potential_ev: f64,
    pub population: f64,
    pub keldysh: Keldysh,
    pub min_photons: u32,
    /// n ħω − I_p at the lowest open order.
    pub excess: ExcessEnergy,
    /// Same with U_p subtracted from the continuum threshold.
    pub excess_shifted: ExcessEnergy,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConstantsReport {
    pub wavelength_nm: f64,
    pub intensity_w_per_cm2: f64,
    pub photon_energy: Energy,
    pub peak_field_au: f64,
    pub ponderomotive: Energy,
    pub channels: Vec<ChannelConstants>,
    /// Thermal momentum width of the target per axis.
    pub thermal_sigma_au: [f64; 3],
    /// p_z change that shifts the TOF by 1 ns (qE·1 ns).
    pub timing_dpz_per_ns_au: f64,
    pub nominal_t0_us: f64,
    /// TOF change per mm of birth position along the spectrometer axis.
    pub tof_per_mm_us: f64,
}

/// Enabled channels with their populations in the target.
pub fn populations(cfg: &RunConfig) -> Vec<(Channel, f64)> {
    let target = effective_target(cfg);
    cfg.state
        .channels
        .iter()
        .map(|&c| (c, target.state_fraction(c)))
        .collect()
}

/// The configured target with disabled channels depopulated.
pub fn effective_target(cfg: &RunConfig) -> TargetEnsemble {
    let mut t = cfg.target.clone();
    let has = |c| cfg.state.channels.contains(&c);
    match (has(Channel::Rb5s), has(Channel::Rb5p)) {
        (true, false) => t.excited_fraction = 0.0,
        (false, true) => t.excited_fraction = 1.0,
        _ => {}
    }
    t
}

pub fn constants(cfg: &RunConfig) -> Result<ConstantsReport> {
    let pulse = cfg.pulse()?;
    let geom = &cfg.spectrometer;
    let species = &cfg.species;
    let channels = populations(cfg)
        .into_iter()
        .map(|(c, population)| {
            let s = c.state();
            let n = minimum_photons(&s, &pulse, false);
            ChannelConstants {
                channel: c,
                ionization_potential_ev: s.ip_ev(),
                population,
                keldysh: keldysh(&s, &pulse),
                min_photons: n,
                excess: excess_energy(&s, n, &pulse, false),
                excess_shifted: excess_energy(&s, n, &pulse, true),
            }
        })
        .collect();
    let h = 1e-3;
    let dtdz = (time_of_flight(geom, species, 0.0, h)? - time_of_flight(geom, species, 0.0, -h)?) / (2.0 * h);
    Ok(ConstantsReport {
        wavelength_nm: pulse.wavelength_nm(),
        intensity_w_per_cm2: pulse.intensity_w_per_cm2(),
        photon_energy: Energy::from_au(pulse.omega()),
        peak_field_au: pulse.peak_field(),
        ponderomotive: ponderomotive_energy(&pulse),
        channels,
        thermal_sigma_au: cfg.target.thermal_sigma_au(species)?,
        timing_dpz_per_ns_au: species.charge as f64 * geom.field_au() * ns_to_au(1.0),
        nominal_t0_us: nominal_t0_us(geom, species)?,
        tof_per_mm_us: au_to_us(dtdz),
    })
}

impl ConstantsReport {
    pub fn render(&self) -> String {
        let mut s = format!(
            "pulse            {:.1} nm, {:.3e} W/cm^2\n\
             photon energy    {:.4} eV ({:.6} a.u.)\n\
             peak field       {:.4e} a.u.\n\
             U_p              {:.4e} eV ({:.4e} a.u.)\n",
            self.wavelength_nm,
            self.intensity_w_per_cm2,
            self.photon_energy.ev,
            self.photon_energy.au,
            self.peak_field_au,
            self.ponderomotive.ev,
            self.ponderomotive.au,
        );
        for c in &self.channels {
            let gamma = if c.keldysh.infinite {
                "infinite (no field)".to_string()
            } else {
                format!("{:.2} ({:?})", c.keldysh.gamma, c.keldysh.regime).to_lowercase()
            };
            let excess = |e: &ExcessEnergy| match e {
                ExcessEnergy::Open {
                    energy, momentum_au, ..
                } => {
                    format!("{:.4} eV, |p| = {:.4} a.u.", energy.ev, momentum_au)
                }
                ExcessEnergy::BelowThreshold { min_photons, .. } => format!("closed (needs {min_photons} photons)"),
            };
            s.push_str(&format!(
                "channel {:<3}      I_p {:.2} eV, population {:.3}, gamma {gamma}\n\
                 \x20 {} photons     {}\n\
                 \x20 with U_p shift  {}\n",
                c.channel.label(),
                c.ionization_potential_ev,
                c.population,
                c.min_photons,
                excess(&c.excess),
                excess(&c.excess_shifted),
            ));
        }
        s.push_str(&format!(
            "thermal sigma_p  [{:.4e}, {:.4e}, {:.4e}] a.u.\n\
             timing dp_z      {:.4e} a.u. per ns\n\
             nominal t0       {:.4} us\n\
             dt/dz            {:.4} us per mm\n",
            self.thermal_sigma_au[0],
            self.thermal_sigma_au[1],
            self.thermal_sigma_au[2],
            self.timing_dpz_per_ns_au,
            self.nominal_t0_us,
            self.tof_per_mm_us,
        ));
        s
    }
}

/// Spectra on the (p_z, p_x) plane.
#[derive(Clone, Debug)]
pub struct PlaneSpectra {
    pub channels: BTreeMap<Channel, SpectrumMap>,
    /// Incoherent sum weighted by the channel populations.
    pub combined: SpectrumMap,
    /// p_z curves with ρ below the slice radius, per channel and combined.
    pub sliced: BTreeMap<String, Profile>,
}

pub fn plane_spectra(cfg: &RunConfig, exec: Exec) -> Result<PlaneSpectra> {
    let pulse = cfg.pulse()?;
    let grid = cfg.spectrum.plane()?;
    let pops = populations(cfg);
    let mut channels = BTreeMap::new();
    for &(c, _) in &pops {
        channels.insert(
            c,
            spectrum_with(&pulse, &c.state(), &grid, cfg.spectrum.quadrature, exec)?,
        );
    }
    let parts: Vec<(&SpectrumMap, f64)> = pops.iter().map(|(c, w)| (&channels[c], *w)).collect();
    let combined = incoherent_sum(&parts)?;
    let r = cfg.spectrum.slice_radius_au;
    let mut sliced = BTreeMap::new();
    for (c, m) in &channels {
        sliced.insert(c.label().to_string(), m.sliced_profile(Component::Z, r)?);
    }
    sliced.insert("combined".to_string(), combined.sliced_profile(Component::Z, r)?);
    Ok(PlaneSpectra {
        channels,
        combined,
        sliced,
    })
}

/// 3D spectra for every populated channel: read from the configured files,
/// otherwise computed on the cube grid.
pub fn cube_spectra(cfg: &RunConfig, exec: Exec) -> Result<BTreeMap<Channel, SpectrumMap>> {
    let pulse = cfg.pulse()?;
    let mut maps = BTreeMap::new();
    for (c, population) in populations(cfg) {
        if population == 0.0 {
            continue;
        }
        let file = match c {
            Channel::Rb5s => &cfg.simulate.spectrum_5s,
            Channel::Rb5p => &cfg.simulate.spectrum_5p,
        };
        let map = match file {
            Some(path) => {
                let m = crate::io::read_spectrum(path)?;
                if m.grid.dims() != 3 {
                    return Err(Error::Data(format!(
                        "{}: simulation needs a 3D spectrum",
                        path.display()
                    )));
                }
                if m.meta.channels.len() != 1 || m.meta.channels[0].0 != c {
                    return Err(Error::Data(format!(
                        "{}: not a single-channel {c} spectrum",
                        path.display()
                    )));
                }
                m
            }
            None => spectrum_with(&pulse, &c.state(), &cfg.spectrum.cube()?, cfg.spectrum.quadrature, exec)?,
        };
        maps.insert(c, map);
    }
    if maps.is_empty() {
        return Err(Error::Domain("no enabled channel is populated in the target".into()));
    }
    Ok(maps)
}

/// Relative number of ionizations per channel in the focal volume.
pub fn channel_mix(cfg: &RunConfig) -> Vec<(Channel, f64)> {
    let target = effective_target(cfg);
    let yields: Vec<(Channel, f64)> = Channel::ALL
        .iter()
        .map(|&c| (c, channel_yield(&target, &cfg.focus, c)))
        .filter(|(_, y)| *y > 0.0)
        .collect();
    let total: f64 = yields.iter().map(|(_, y)| y).sum();
    yields.into_iter().map(|(c, y)| (c, y / total)).collect()
}

/// p_z curve with ρ_xy < `radius` of the momentum distribution the
/// simulation draws from: unit-normalized channel maps mixed by ionization
/// yield.
pub fn theory_slice(cfg: &RunConfig, maps: &BTreeMap<Channel, SpectrumMap>, radius: f64) -> Result<Profile> {
    let mut out: Option<Profile> = None;
    for (c, w) in channel_mix(cfg) {
        let map = maps
            .get(&c)
            .ok_or_else(|| Error::Domain(format!("no spectrum for populated channel {c}")))?
            .normalized()?;
        let p = map.sliced_profile(Component::Z, radius)?;
        out = Some(match out {
            None => Profile::new(p.x, p.y.iter().map(|v| w * v).collect())?,
            Some(acc) => {
                if acc.x != p.x {
                    return Err(Error::Domain("channel spectra use different grids".into()));
                }
                let y = acc.y.iter().zip(&p.y).map(|(a, b)| a + w * b).collect();
                Profile::new(acc.x, y)?
            }
        });
    }
    out.ok_or_else(|| Error::Domain("no channel contributes ionization".into()))
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SimulationSummary {
    pub generated: usize,
    pub accepted: usize,
    pub rejected_outside_radius: usize,
    pub rejected_outside_window: usize,
    pub rejected_efficiency: usize,
    pub acceptance_fraction: f64,
    /// Accepted events per channel.
    pub channels: BTreeMap<String, usize>,
}

#[derive(Clone, Debug)]
pub struct Simulation {
    pub events: Vec<DetectorEvent>,
    pub summary: SimulationSummary,
}

/// `cfg.simulate.events` ionizations through target, focus, spectrometer and
/// detector. Ionization `i` keeps id `i` whether or not it is detected.
pub fn simulate(cfg: &RunConfig, maps: &BTreeMap<Channel, SpectrumMap>, exec: Exec) -> Result<Simulation> {
    let target = effective_target(cfg);
    let n = cfg.simulate.events;
    let ions = generate_ionization_events_with(&target, &cfg.focus, &cfg.species, maps, n, cfg.seed, exec)?;
    let outcomes = exec.try_map(n, |i| {
        let mut rng = substream(cfg.seed, tag::DETECTOR, i as u64);
        let ion = &ions[i];
        simulate_event(
            &cfg.spectrometer,
            &cfg.detector,
            &cfg.species,
            i as u64,
            ion.birth_mm,
            ion.momentum_au,
            ion.channel,
            &mut rng,
        )
    })?;
    let mut summary = SimulationSummary {
        generated: n,
        ..Default::default()
    };
    let mut events = Vec::with_capacity(n);
    for o in outcomes {
        match o {
            Outcome::Accepted(e) => {
                if let Some(t) = e.truth {
                    *summary.channels.entry(t.channel.label().to_string()).or_default() += 1;
                }
                events.push(e);
            }
            Outcome::Rejected(Rejection::OutsideRadius) => summary.rejected_outside_radius += 1,
            Outcome::Rejected(Rejection::OutsideWindow) => summary.rejected_outside_window += 1,
            Outcome::Rejected(Rejection::EfficiencyLoss) => summary.rejected_efficiency += 1,
        }
    }
    summary.accepted = events.len();
    summary.acceptance_fraction = if n > 0 { events.len() as f64 / n as f64 } else { 0.0 };
    Ok(Simulation { events, summary })
}

/// Contributions to the p_z resolution of a sliced measurement, as Gaussian
/// σ in a.u.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResolutionBudget {
    pub thermal: f64,
    pub timing: f64,
    /// Spread of birth positions along the spectrometer axis.
    pub birth: f64,
    /// Linear interpolation between spectrum nodes (tent of one node step).
    pub interpolation: f64,
    /// Histogram bin width.
    pub binning: f64,
    pub blur: f64,
    pub total_sigma: f64,
    pub total_fwhm: f64,
}

const BUDGET_SAMPLES: usize = 20_000;

/// Resolution budget of the configured run.
pub fn resolution_budget(cfg: &RunConfig, exec: Exec) -> Result<ResolutionBudget> {
    let geom = &cfg.spectrometer;
    let species = &cfg.species;
    let thermal = effective_target(cfg).thermal_sigma_au(species)?[2];
    let timing = species.charge as f64 * geom.field_au() * ns_to_au(cfg.detector.time_sigma_ns);

    let sampler = PositionSampler::new(&effective_target(cfg), &cfg.focus)?;
    let z = exec.try_map(BUDGET_SAMPLES, |i| {
        let mut rng = substream(cfg.seed, tag::SYNTHETIC, i as u64);
        sampler.sample(&mut rng).map(|(r, _)| r.z)
    })?;
    let mean = z.iter().sum::<f64>() / z.len() as f64;
    let sd_z = (z.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (z.len() - 1) as f64).sqrt();
    let h = 1e-3;
    let dtdz = (time_of_flight(geom, species, 0.0, h)? - time_of_flight(geom, species, 0.0, -h)?) / (2.0 * h);
    let dtdp = (time_of_flight(geom, species, h, 0.0)? - time_of_flight(geom, species, -h, 0.0)?) / (2.0 * h);
    let birth = sd_z * (dtdz / dtdp).abs();

    let step = cfg.spectrum.cube()?.axes()[0].1.step();
    let interpolation = step / 6f64.sqrt();
    let binning = 2.0 * cfg.analysis.range_au / cfg.analysis.bins as f64 / 12f64.sqrt();
    let blur = geom.blur_au[2];
    let parts = [thermal, timing, birth, interpolation, binning, blur];
    let total_sigma = parts.iter().map(|v| v * v).sum::<f64>().sqrt();
    Ok(ResolutionBudget {
        thermal,
        timing,
        birth,
        interpolation,
        binning,
        blur,
        total_sigma,
        total_fwhm: FWHM_PER_SIGMA * total_sigma,
    })
}

/// Blur σ (a.u.) that brings the total p_z resolution to `fwhm_au`.
pub fn blur_for_total_fwhm(cfg: &RunConfig, fwhm_au: f64, exec: Exec) -> Result<f64> {
    let mut base = cfg.clone();
    base.spectrometer.blur_au[2] = 0.0;
    let b = resolution_budget(&base, exec)?;
    let target = fwhm_au / FWHM_PER_SIGMA;
    if target < b.total_sigma {
        return Err(Error::Domain(format!(
            "requested resolution FWHM {fwhm_au} a.u. is below the unblurred budget {:.4} a.u.",
            b.total_fwhm
        )));
    }
    Ok((target * target - b.total_sigma * b.total_sigma).sqrt())
}

/// Calibration chosen by `analysis.calibration`.
pub fn calibration_for(cfg: &RunConfig, events: &[DetectorEvent]) -> Result<Calibration> {
    let a = &cfg.analysis;
    match a.calibration {
        CalibrationMode::Truth => {
            if events.iter().any(|e| e.truth.is_none()) {
                return Err(Error::Data(
                    "events carry no simulation truth, so the truth calibration is unavailable; \
                     calibrate from the data with --set analysis.calibration=\"data\" \
                     (or give analysis.t0_us and analysis.center_mm with calibration = \"fixed\")"
                        .into(),
                ));
            }
            Calibration::from_truth(&cfg.spectrometer, &cfg.species, &cfg.detector)
        }
        CalibrationMode::Data => calibrate(
            events,
            &CalibrationOptions {
                estimator: a.estimator,
                bandwidth_us: a.bandwidth_us,
            },
        ),
        CalibrationMode::Fixed => match (a.t0_us, a.center_mm) {
            (Some(t0_us), Some(center_mm)) => Ok(Calibration {
                t0_us,
                t0_err_us: 0.0,
                center_mm,
                center_err_mm: [0.0; 2],
            }),
            _ => Err(Error::Config(
                "[analysis] calibration = \"fixed\" needs t0_us and center_mm; \
                 without them calibrate from the data with calibration = \"data\""
                    .into(),
            )),
        },
    }
}

#[derive(Clone, Debug)]
pub struct HistogramSet {
    pub px: Histogram,
    pub py: Histogram,
    pub pz: Histogram,
    /// p_z with ρ_xy below the slice radius.
    pub pz_sliced: Histogram,
    pub pxpy: Histogram,
    /// (p_z, p_x) with |p_y| below the slab half-width.
    pub pzpx: Histogram,
}

impl HistogramSet {
    pub fn one_d(&self) -> [(&'static str, &Histogram); 4] {
        [
            ("px", &self.px),
            ("py", &self.py),
            ("pz", &self.pz),
            ("pz_sliced", &self.pz_sliced),
        ]
    }
}

pub fn standard_histograms(cfg: &RunConfig, records: &[MomentumRecord], exec: Exec) -> Result<HistogramSet> {
    let a = &cfg.analysis;
    let axis = |c| HistAxis::new(c, -a.range_au, a.range_au, a.bins);
    let all = Slice::All;
    let cylinder = Slice::Cylinder {
        along: Component::Z,
        radius: a.slice_radius_au,
    };
    let slab = Slice::Slab {
        component: Component::Y,
        half_width: a.slab_half_width_au,
    };
    let h = |axes: Vec<HistAxis>, s: &Slice| histogram_with(records, axes, s, exec);
    Ok(HistogramSet {
        px: h(vec![axis(Component::X)?], &all)?,
        py: h(vec![axis(Component::Y)?], &all)?,
        pz: h(vec![axis(Component::Z)?], &all)?,
        pz_sliced: h(vec![axis(Component::Z)?], &cylinder)?,
        pxpy: h(vec![axis(Component::X)?, axis(Component::Y)?], &all)?,
        pzpx: h(vec![axis(Component::Z)?, axis(Component::X)?], &slab)?,
    })
}

/// A fit that may legitimately fail (a double peak is not a Gaussian).
#[derive(Clone, Debug, Serialize)]
pub struct FitOutcome {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit: Option<GaussianFit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fwhm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fwhm_err: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl From<Result<GaussianFit>> for FitOutcome {
    fn from(r: Result<GaussianFit>) -> Self {
        match r {
            Ok(f) => FitOutcome {
                fwhm: Some(f.fwhm()),
                fwhm_err: Some(f.fwhm_error()),
                fit: Some(f),
                error: None,
            },
            Err(e) => FitOutcome {
                fit: None,
                fwhm: None,
                fwhm_err: None,
                error: Some(e.to_string()),
            },
        }
    }
}

/// Reconstructed minus true momentum, for events carrying truth.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TruthResiduals {
    pub events: usize,
    pub max_abs_au: [f64; 3],
    pub rms_au: [f64; 3],
}

#[derive(Clone, Debug, Serialize)]
pub struct ReconstructionSummary {
    pub calibration_mode: CalibrationMode,
    pub calibration: Calibration,
    pub events: usize,
    pub slice: String,
    pub slab: String,
    pub fits: BTreeMap<String, FitOutcome>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resolution: Option<ResolutionFit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truth_residuals: Option<TruthResiduals>,
    /// Largest |exact − linear| p_z over the events.
    pub linear_pz_max_deviation_au: f64,
}

#[derive(Clone, Debug)]
pub struct Reconstruction {
    pub records: Vec<MomentumRecord>,
    /// Linearized p_z per record, as a cross-check.
    pub linear_pz: Vec<f64>,
    pub histograms: HistogramSet,
    pub summary: ReconstructionSummary,
}

pub fn reconstruct(
    cfg: &RunConfig,
    events: &[DetectorEvent],
    theory: Option<&Profile>,
    exec: Exec,
) -> Result<Reconstruction> {
    let cal = calibration_for(cfg, events)?;
    let mut records = reconstruct_all(events, &cfg.spectrometer, &cfg.species, &cal, exec)?;
    for (r, e) in records.iter_mut().zip(events) {
        r.channel = e.truth.map(|t| t.channel);
    }
    let linear: Vec<f64> = events
        .iter()
        .map(|e| linear_pz(e, &cfg.spectrometer, &cfg.species, &cal))
        .collect();
    let linear_dev = records
        .iter()
        .zip(&linear)
        .map(|(r, l)| (r.p[2] - l).abs())
        .fold(0.0, f64::max);
    let hs = standard_histograms(cfg, &records, exec)?;

    let mut fits = BTreeMap::new();
    for (name, h) in hs.one_d() {
        let p = h.to_profile()?;
        fits.insert(
            name.to_string(),
            FitOutcome::from(fit_gaussian_1d(&p.x, &p.y, &Weights::Poisson)),
        );
    }
    let resolution = match theory {
        Some(t) => Some(fit_resolution(t, &hs.pz_sliced.to_profile()?, &Weights::Poisson)?),
        None => None,
    };
    let truth_residuals = residuals(events, &records);
    Ok(Reconstruction {
        summary: ReconstructionSummary {
            calibration_mode: cfg.analysis.calibration,
            calibration: cal,
            events: events.len(),
            slice: hs.pz_sliced.slice.clone(),
            slab: hs.pzpx.slice.clone(),
            fits,
            resolution,
            truth_residuals,
            linear_pz_max_deviation_au: linear_dev,
        },
        records,
        linear_pz: linear,
        histograms: hs,
    })
}

fn residuals(events: &[DetectorEvent], records: &[MomentumRecord]) -> Option<TruthResiduals> {
    let mut n = 0;
    let mut max = [0.0f64; 3];
    let mut sq = [0.0f64; 3];
    for (e, r) in events.iter().zip(records) {
        let t = e.truth?;
        n += 1;
        for k in 0..3 {
            let d = r.p[k] - t.momentum_au[k];
            max[k] = max[k].max(d.abs());
            sq[k] += d * d;
        }
    }
    (n > 0).then(|| TruthResiduals {
        events: n,
        max_abs_au: max,
        rms_au: sq.map(|s| (s / n as f64).sqrt()),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ExpansionReport {
    pub synthetic: bool,
    pub mass_amu: f64,
    pub points: Vec<ExpansionPoint>,
    pub fit: ExpansionFit,
}

/// Temperature from a measured series, or from a synthetic one generated
/// with the configured temperature when `series` is `None`.
pub fn characterize_expansion(cfg: &RunConfig, series: Option<Vec<ExpansionPoint>>) -> Result<ExpansionReport> {
    let c = &cfg.characterize;
    let mass = cfg.species.mass_amu;
    let synthetic = series.is_none();
    let points = series.unwrap_or_else(|| {
        synthetic_expansion(
            c.expansion_temperature_uk,
            mass,
            c.expansion_sigma0_mm,
            &c.expansion_times_ms,
        )
    });
    let fit = temperature_from_expansion(&points, mass)?;
    Ok(ExpansionReport {
        synthetic,
        mass_amu: mass,
        points,
        fit,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanAxisReport {
    pub axis: Component,
    pub positions_mm: Vec<f64>,
    /// Coil current change that moves the target to each position.
    pub coil_current_a: Vec<f64>,
    pub counts: Vec<f64>,
    pub fit: ScanFit,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanReport {
    pub synthetic: bool,
    pub axes: Vec<ScanAxisReport>,
}

fn coil_per_mm(cfg: &RunConfig, axis: Component) -> Result<f64> {
    match axis {
        Component::X => Ok(1.0 / cfg.coils.x_mm_per_a),
        Component::Z => Ok(1.0 / cfg.coils.z_mm_per_a),
        Component::Y => Err(Error::Config("scans run along x or z (the coil axes)".into())),
    }
}

/// Gaussian fits of ionization-rate scans. `measured` is one axis of data;
/// without it both coil axes are synthesized from the configured target.
pub fn characterize_scan(cfg: &RunConfig, measured: Option<(Component, Vec<f64>, Vec<f64>)>) -> Result<ScanReport> {
    let c = &cfg.characterize;
    let axis_report = |axis, positions: Vec<f64>, counts: Vec<f64>, weights: &Weights| -> Result<ScanAxisReport> {
        let per = coil_per_mm(cfg, axis)?;
        let fit = scan_profile(&positions, &counts, weights)?;
        Ok(ScanAxisReport {
            axis,
            coil_current_a: positions.iter().map(|p| p * per).collect(),
            positions_mm: positions,
            counts,
            fit,
        })
    };
    match measured {
        Some((axis, positions, counts)) => Ok(ScanReport {
            synthetic: false,
            axes: vec![axis_report(axis, positions, counts, &Weights::Poisson)?],
        }),
        None => {
            let target = effective_target(cfg);
            let mut axes = Vec::new();
            for (k, axis) in [Component::X, Component::Z].into_iter().enumerate() {
                let centre = target.center_mm[axis.index()] - cfg.focus.center_mm[axis.index()];
                let positions = scan_positions(-c.scan_span_mm, c.scan_span_mm, c.scan_step_mm)?;
                let positions: Vec<f64> = positions.iter().map(|p| p - centre).collect();
                let yields = synthetic_scan(&target, &cfg.focus, axis, &positions);
                let (counts, weights) = match c.scan_peak_counts {
                    Some(peak) => (
                        poisson_counts(&yields, peak, cfg.seed.wrapping_add(k as u64))?,
                        Weights::Poisson,
                    ),
                    None => {
                        let max = yields.iter().cloned().fold(0.0, f64::max);
                        if !(max > 0.0) {
                            return Err(Error::Domain("target and focus never overlap during the scan".into()));
                        }
                        (yields.iter().map(|y| y / max).collect(), Weights::Unit)
                    }
                };
                axes.push(axis_report(axis, positions, counts, &weights)?);
            }
            Ok(ScanReport { synthetic: true, axes })
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AbsorptionReport {
    pub synthetic: bool,
    pub width: usize,
    pub height: usize,
    pub pixel_um: f64,
    pub atom_number: f64,
    pub masked_pixels: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fwhm_x_mm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fwhm_y_mm: Option<f64>,
    pub fit_x: Option<GaussianFit>,
    pub fit_y: Option<GaussianFit>,
}

/// Atom number and cloud widths from (atoms, reference, dark) frames, or
/// from synthetic frames of the configured cloud.
pub fn characterize_absorption(
    cfg: &RunConfig,
    frames: Option<(Image, Image, Image)>,
) -> Result<(AbsorptionReport, AbsorptionResult)> {
    let c = &cfg.characterize;
    let synthetic = frames.is_none();
    let (atoms, reference, dark) = frames.unwrap_or_else(|| {
        synthetic_images(
            c.image_width,
            c.image_height,
            c.pixel_um,
            c.image_atom_number,
            c.image_fwhm_mm.map(|w| w / FWHM_PER_SIGMA),
            c.image_probe_counts,
            c.image_dark_counts,
        )
    });
    let r = absorption_analysis(&atoms, &reference, &dark, c.pixel_um)?;
    Ok((
        AbsorptionReport {
            synthetic,
            width: atoms.width,
            height: atoms.height,
            pixel_um: c.pixel_um,
            atom_number: r.atom_number,
            masked_pixels: r.masked_pixels,
            fwhm_x_mm: r.fit_x.as_ref().map(|f| f.fwhm()),
            fwhm_y_mm: r.fit_y.as_ref().map(|f| f.fwhm()),
            fit_x: r.fit_x.clone(),
            fit_y: r.fit_y.clone(),
        },
        r,
    ))
}
