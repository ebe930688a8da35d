//! Command runs: compute, write the outputs into one directory, then the
//! manifest. Apart from the manifest timestamps, reruns with the same
//! configuration and inputs write identical bytes.

use std::path::{Path, PathBuf};

use serde::Serialize;

use super::*;
use crate::analysis::convolve_gaussian;
use crate::io::report::{read_profile, svg_curves, svg_map, write_columns, write_json, write_text};
use crate::io::tables::{read_expansion_csv, read_image_csv, read_scan_csv};
use crate::io::{now_utc, read_events, write_events, write_spectrum, GridFile, RunManifest};

#[derive(Clone, Copy, Debug, Default)]
pub struct RunOptions {
    /// Also write SVG renderings.
    pub svg: bool,
    pub exec: Exec,
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub outputs: Vec<PathBuf>,
    pub manifest: PathBuf,
    /// Short human-readable summary for the terminal.
    pub text: String,
}

struct Outputs {
    dir: PathBuf,
    files: Vec<PathBuf>,
    inputs: Vec<PathBuf>,
    manifest: RunManifest,
}

impl Outputs {
    fn new(command: &str, cfg: &RunConfig, dir: &Path) -> Result<Self> {
        let manifest = RunManifest::new(command, cfg, now_utc());
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(Outputs {
            dir: dir.to_path_buf(),
            files: Vec::new(),
            inputs: Vec::new(),
            manifest,
        })
    }

    fn file(&mut self, name: &str) -> PathBuf {
        let p = self.dir.join(name);
        self.files.push(p.clone());
        p
    }

    fn input(&mut self, p: &Path) {
        self.inputs.push(p.to_path_buf());
    }

    fn finish(self, text: String) -> Result<RunOutput> {
        let manifest = self.manifest.finish(&self.dir, &self.inputs, &self.files)?;
        Ok(RunOutput {
            outputs: self.files,
            manifest,
            text,
        })
    }
}

pub fn run_constants(cfg: &RunConfig, dir: &Path, _opts: &RunOptions) -> Result<RunOutput> {
    let mut out = Outputs::new("constants", cfg, dir)?;
    let report = constants(cfg)?;
    let text = report.render();
    write_json(&out.file("constants.json"), "constants", &report)?;
    write_text(&out.file("constants.txt"), &text)?;
    out.finish(text)
}

pub fn run_spectrum(cfg: &RunConfig, dir: &Path, opts: &RunOptions) -> Result<RunOutput> {
    let mut out = Outputs::new("spectrum", cfg, dir)?;
    let s = plane_spectra(cfg, opts.exec)?;
    for (c, m) in &s.channels {
        write_spectrum(&out.file(&format!("spectrum_{}.grid", c.label())), m)?;
    }
    write_spectrum(&out.file("spectrum_combined.grid"), &s.combined)?;

    let names: Vec<&str> = s.sliced.keys().map(String::as_str).collect();
    let x = &s.sliced.values().next().expect("at least one curve").x;
    let mut cols: Vec<&[f64]> = vec![x];
    cols.extend(s.sliced.values().map(|p| p.y.as_slice()));
    let mut header = vec!["pz"];
    header.extend(&names);
    write_columns(&out.file("pz_sliced.csv"), &header, &cols)?;

    let mut text = String::new();
    for (name, p) in &s.sliced {
        let peaks: Vec<String> = p
            .local_maxima(PEAK_FRACTION)
            .iter()
            .map(|&i| format!("{:+.4}", p.x[i]))
            .collect();
        text.push_str(&format!("{name:<9} sliced p_z maxima at [{}] a.u.\n", peaks.join(", ")));
    }
    if opts.svg {
        let grid = &s.combined.grid;
        let (az, ax) = (&grid.axes()[0].1, &grid.axes()[1].1);
        let map = svg_map(
            "ion momentum spectrum (p_y = 0)",
            ("p_x (a.u.)", ax.min, ax.max, ax.count),
            ("p_z (a.u.)", az.min, az.max, az.count),
            &s.combined.values,
        );
        write_text(&out.file("spectrum_combined.svg"), &map)?;
        let series: Vec<(&str, &Profile, bool)> = s.sliced.iter().map(|(n, p)| (n.as_str(), p, true)).collect();
        let title = format!("sliced p_z, rho < {} a.u.", cfg.spectrum.slice_radius_au);
        write_text(
            &out.file("pz_sliced.svg"),
            &svg_curves(&title, "p_z (a.u.)", "yield (arb.)", &series),
        )?;
    }
    out.finish(text)
}

/// Local maxima below this fraction of the highest are ignored in summaries.
pub const PEAK_FRACTION: f64 = 0.01;

#[derive(Serialize)]
struct SimulationReport<'a> {
    summary: &'a SimulationSummary,
    channel_mix: BTreeMap<String, f64>,
    resolution_budget: ResolutionBudget,
    events_file: String,
}

pub fn run_simulate(cfg: &RunConfig, dir: &Path, opts: &RunOptions) -> Result<RunOutput> {
    let mut out = Outputs::new("simulate", cfg, dir)?;
    for p in [&cfg.simulate.spectrum_5s, &cfg.simulate.spectrum_5p]
        .into_iter()
        .flatten()
    {
        out.input(p);
    }
    let maps = cube_spectra(cfg, opts.exec)?;
    let sim = simulate(cfg, &maps, opts.exec)?;
    let name = format!("events.{}", cfg.simulate.format.extension());
    write_events(&out.file(&name), &sim.events)?;
    let theory = theory_slice(cfg, &maps, cfg.analysis.slice_radius_au)?;
    write_columns(
        &out.file("theory_pz_sliced.csv"),
        &["pz", "yield"],
        &[&theory.x, &theory.y],
    )?;
    let report = SimulationReport {
        summary: &sim.summary,
        channel_mix: channel_mix(cfg)
            .into_iter()
            .map(|(c, w)| (c.label().to_string(), w))
            .collect(),
        resolution_budget: resolution_budget(cfg, opts.exec)?,
        events_file: name.clone(),
    };
    write_json(&out.file("simulation.json"), "simulation", &report)?;
    let text = format!(
        "{} of {} ionizations detected ({:.4}); events in {name}\n\
         expected p_z resolution FWHM {:.4} a.u.\n",
        sim.summary.accepted,
        sim.summary.generated,
        sim.summary.acceptance_fraction,
        report.resolution_budget.total_fwhm
    );
    out.finish(text)
}

fn histogram_grid(h: &Histogram) -> Result<GridFile> {
    let axes = h
        .axes
        .iter()
        .map(|a| {
            let c = a.centers();
            (a.quantity.name().to_string(), c[0], c[c.len() - 1], a.bins)
        })
        .collect();
    let meta = serde_json::json!({ "kind": "histogram", "slice": h.slice, "values": "counts" });
    GridFile::new(&meta, axes, h.counts.iter().map(|&c| c as f64).collect())
}

pub fn run_reconstruct(
    cfg: &RunConfig,
    events_path: &Path,
    theory_path: Option<&Path>,
    dir: &Path,
    opts: &RunOptions,
) -> Result<RunOutput> {
    let mut out = Outputs::new("reconstruct", cfg, dir)?;
    out.input(events_path);
    let events = read_events(events_path)?;
    let theory_path = theory_path
        .map(Path::to_path_buf)
        .or_else(|| cfg.analysis.theory.clone());
    let theory = match &theory_path {
        Some(p) => {
            out.input(p);
            Some(read_profile(p)?)
        }
        None => None,
    };
    let rec = super::reconstruct(cfg, &events, theory.as_ref(), opts.exec)?;

    let mut s = String::from("event_id,px,py,pz,pz_linear,channel\n");
    for (r, l) in rec.records.iter().zip(&rec.linear_pz) {
        let ch = r.channel.map(|c| c.label()).unwrap_or("");
        s.push_str(&format!("{},{},{},{},{},{ch}\n", r.event_id, r.p[0], r.p[1], r.p[2], l));
    }
    write_text(&out.file("momenta.csv"), &s)?;

    for (name, h) in rec.histograms.one_d() {
        let p = h.to_profile()?;
        let mut names = vec![h.axes[0].quantity.name(), "counts"];
        let mut cols: Vec<Vec<f64>> = vec![p.x.clone(), p.y.clone()];
        if let Some(f) = rec.summary.fits.get(name).and_then(|f| f.fit.as_ref()) {
            names.push("gaussian_fit");
            cols.push(p.x.iter().map(|&x| f.eval(x)).collect());
        }
        if name == "pz_sliced" {
            if let (Some(t), Some(r)) = (&theory, &rec.summary.resolution) {
                let b = convolve_gaussian(t, r.sigma)?;
                names.push("theory_broadened");
                cols.push(p.x.iter().map(|&x| r.scale * b.interpolate(x)).collect());
            }
        }
        let refs: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
        write_columns(&out.file(&format!("hist_{name}.csv")), &names, &refs)?;
        if opts.svg {
            let fit_curve = Profile::new(p.x.clone(), cols.last().expect("counts").clone())?;
            let mut series = vec![("counts", &p, false)];
            if cols.len() > 2 {
                series.push((names[names.len() - 1], &fit_curve, true));
            }
            let svg = svg_curves(
                &format!("{name} ({})", h.slice),
                &format!("{} (a.u.)", names[0]),
                "counts",
                &series,
            );
            write_text(&out.file(&format!("hist_{name}.svg")), &svg)?;
        }
    }
    for (name, h) in [("pxpy", &rec.histograms.pxpy), ("pzpx", &rec.histograms.pzpx)] {
        histogram_grid(h)?.write(&out.file(&format!("hist_{name}.grid")))?;
        if opts.svg {
            let (a0, a1) = (&h.axes[0], &h.axes[1]);
            let svg = svg_map(
                &format!("{name} ({})", h.slice),
                (&format!("{} (a.u.)", a1.quantity.name()), a1.min, a1.max, a1.bins),
                (&format!("{} (a.u.)", a0.quantity.name()), a0.min, a0.max, a0.bins),
                &h.counts.iter().map(|&c| c as f64).collect::<Vec<_>>(),
            );
            write_text(&out.file(&format!("hist_{name}.svg")), &svg)?;
        }
    }
    write_json(&out.file("reconstruction.json"), "reconstruction", &rec.summary)?;

    let mut text = format!(
        "{} events reconstructed (t0 = {:.6} us, centre = [{:.4}, {:.4}] mm)\n",
        rec.summary.events,
        rec.summary.calibration.t0_us,
        rec.summary.calibration.center_mm[0],
        rec.summary.calibration.center_mm[1]
    );
    for (name, f) in &rec.summary.fits {
        match (f.fwhm, f.fwhm_err) {
            (Some(w), Some(e)) => text.push_str(&format!("{name:<9} FWHM {w:.4} +- {e:.4} a.u.\n")),
            _ => text.push_str(&format!("{name:<9} no Gaussian fit\n")),
        }
    }
    if let Some(r) = &rec.summary.resolution {
        text.push_str(&format!(
            "resolution sigma {:.4} +- {:.4} a.u., FWHM {:.4} +- {:.4} a.u.\n",
            r.sigma, r.sigma_err, r.fwhm, r.fwhm_err
        ));
    }
    out.finish(text)
}

/// Data for `characterize`; `None` inputs mean synthetic data from the
/// configuration.
#[derive(Clone, Debug)]
pub enum CharacterizeInput {
    Expansion(Option<PathBuf>),
    Scan(Option<(Component, PathBuf)>),
    /// Atoms, reference, dark frames.
    Absorption(Option<[PathBuf; 3]>),
}

pub fn run_characterize(
    cfg: &RunConfig,
    input: &CharacterizeInput,
    dir: &Path,
    opts: &RunOptions,
) -> Result<RunOutput> {
    match input {
        CharacterizeInput::Expansion(path) => {
            let mut out = Outputs::new("characterize expansion", cfg, dir)?;
            let series = match path {
                Some(p) => {
                    out.input(p);
                    Some(read_expansion_csv(p)?)
                }
                None => None,
            };
            let r = characterize_expansion(cfg, series)?;
            write_json(&out.file("expansion.json"), "expansion", &r)?;
            let t: Vec<f64> = r.points.iter().map(|p| p.t_ms).collect();
            let s: Vec<f64> = r.points.iter().map(|p| p.sigma_mm).collect();
            let v2 = r.fit.speed_m_per_s * r.fit.speed_m_per_s;
            let model = |t: f64| (r.fit.sigma0_mm * r.fit.sigma0_mm + v2 * t * t).sqrt();
            let f: Vec<f64> = t.iter().map(|&t| model(t)).collect();
            write_columns(
                &out.file("expansion.csv"),
                &["t_ms", "sigma_mm", "fit_sigma_mm"],
                &[&t, &s, &f],
            )?;
            if opts.svg {
                let pts = Profile::new(t.clone(), s)?;
                let t_max = t.iter().cloned().fold(0.0, f64::max);
                let tt: Vec<f64> = (0..=100).map(|i| t_max * i as f64 / 100.0).collect();
                let curve = Profile::new(tt.clone(), tt.iter().map(|&t| model(t)).collect())?;
                let svg = svg_curves(
                    "ballistic expansion",
                    "t (ms)",
                    "sigma (mm)",
                    &[("data", &pts, false), ("fit", &curve, true)],
                );
                write_text(&out.file("expansion.svg"), &svg)?;
            }
            let text = format!(
                "T = {:.2} +- {:.2} uK, expansion speed {:.4} +- {:.4} m/s\n",
                r.fit.temperature_uk, r.fit.temperature_err_uk, r.fit.speed_m_per_s, r.fit.speed_err_m_per_s
            );
            out.finish(text)
        }
        CharacterizeInput::Scan(data) => {
            let mut out = Outputs::new("characterize scan", cfg, dir)?;
            let measured = match data {
                Some((axis, p)) => {
                    out.input(p);
                    let (pos, counts) = read_scan_csv(p)?;
                    Some((*axis, pos, counts))
                }
                None => None,
            };
            let r = characterize_scan(cfg, measured)?;
            write_json(&out.file("scan.json"), "scan", &r)?;
            let mut text = String::new();
            for a in &r.axes {
                let name = a.axis.name().trim_start_matches('p');
                let fit: Vec<f64> = a.positions_mm.iter().map(|&x| a.fit.fit.eval(x)).collect();
                write_columns(
                    &out.file(&format!("scan_{name}.csv")),
                    &["position_mm", "coil_current_a", "counts", "fit"],
                    &[&a.positions_mm, &a.coil_current_a, &a.counts, &fit],
                )?;
                if opts.svg {
                    let pts = Profile::new(a.positions_mm.clone(), a.counts.clone())?;
                    let curve = Profile::new(a.positions_mm.clone(), fit)?;
                    let svg = svg_curves(
                        &format!("ionization rate scan along {name}"),
                        "position (mm)",
                        "counts",
                        &[("data", &pts, false), ("fit", &curve, true)],
                    );
                    write_text(&out.file(&format!("scan_{name}.svg")), &svg)?;
                }
                text.push_str(&format!(
                    "{name}: FWHM {:.4} +- {:.4} mm, centre {:+.4} mm\n",
                    a.fit.fwhm_mm, a.fit.fwhm_err_mm, a.fit.center_mm
                ));
            }
            out.finish(text)
        }
        CharacterizeInput::Absorption(paths) => {
            let mut out = Outputs::new("characterize absorption", cfg, dir)?;
            let frames = match paths {
                Some(ps) => {
                    ps.iter().for_each(|p| out.input(p));
                    Some((
                        read_image_csv(&ps[0])?,
                        read_image_csv(&ps[1])?,
                        read_image_csv(&ps[2])?,
                    ))
                }
                None => None,
            };
            let (report, result) = characterize_absorption(cfg, frames)?;
            write_json(&out.file("absorption.json"), "absorption", &report)?;
            let od = &result.optical_density;
            let mm = cfg.characterize.pixel_um * 1e-3;
            let axes = vec![
                ("row_mm".to_string(), 0.0, (od.height - 1) as f64 * mm, od.height),
                ("col_mm".to_string(), 0.0, (od.width - 1) as f64 * mm, od.width),
            ];
            let meta = serde_json::json!({ "kind": "optical_density" });
            GridFile::new(&meta, axes, od.data.clone())?.write(&out.file("optical_density.grid"))?;
            if opts.svg {
                let svg = svg_map(
                    "optical density",
                    ("x (mm)", 0.0, od.width as f64 * mm, od.width),
                    ("y (mm)", 0.0, od.height as f64 * mm, od.height),
                    &od.data,
                );
                write_text(&out.file("optical_density.svg"), &svg)?;
            }
            let w = |f: Option<f64>| f.map_or("n/a".to_string(), |v| format!("{v:.4} mm"));
            let text = format!(
                "N = {:.4e} atoms, FWHM x {} y {}, {} masked pixels\n",
                report.atom_number,
                w(report.fwhm_x_mm),
                w(report.fwhm_y_mm),
                report.masked_pixels
            );
            out.finish(text)
        }
    }
}
