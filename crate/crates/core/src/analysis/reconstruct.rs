use serde::{Deserialize, Serialize};

use crate::apparatus::{
    nominal_t0_us, time_of_flight, tof_slope, DetectorEvent, DetectorModel, IonSpecies, SpectrometerGeometry,
};
use crate::exec::Exec;
use crate::strongfield::Channel;
use crate::units::{au_to_ns, au_to_us, mm_to_au, us_to_au};
use crate::{Error, Result};

/// Reconstructed ion momentum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentumRecord {
    pub p: [f64; 3],
    pub event_id: u64,
    pub channel: Option<Channel>,
}

/// Reference point of the inversion: the measured time and detector position
/// of a zero-momentum ion born at the target point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub t0_us: f64,
    pub t0_err_us: f64,
    pub center_mm: [f64; 2],
    pub center_err_mm: [f64; 2],
}

impl Calibration {
    /// Exact calibration from the simulation's own geometry and detector.
    pub fn from_truth(geom: &SpectrometerGeometry, species: &IonSpecies, detector: &DetectorModel) -> Result<Self> {
        Ok(Calibration {
            t0_us: nominal_t0_us(geom, species)? + detector.time_offset_ns * 1e-3,
            t0_err_us: 0.0,
            center_mm: detector.center_mm,
            center_err_mm: [0.0; 2],
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum T0Estimator {
    /// Centre of mirror symmetry of the TOF density. Right for the
    /// double-peak sources measured here, whose mode sits on one of the peaks.
    #[default]
    Symmetry,
    /// Peak of the kernel density estimate.
    Mode,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CalibrationOptions {
    pub estimator: T0Estimator,
    /// KDE bandwidth in µs; Silverman's rule when unset.
    pub bandwidth_us: Option<f64>,
}

pub const MIN_CALIBRATION_EVENTS: usize = 100;

/// Data-driven calibration: t₀ from the TOF distribution, centre from the
/// hit centroid.
pub fn calibrate(events: &[DetectorEvent], opts: &CalibrationOptions) -> Result<Calibration> {
    let n = events.len();
    if n < MIN_CALIBRATION_EVENTS {
        return Err(Error::Data(format!(
            "calibration needs at least {MIN_CALIBRATION_EVENTS} events, got {n}"
        )));
    }
    let mut t: Vec<f64> = events.iter().map(|e| e.t_us).collect();
    t.sort_by(f64::total_cmp);
    let (mean_t, sd_t) = mean_sd(&t);

    let t0 = if sd_t == 0.0 {
        t[0]
    } else {
        let h = opts.bandwidth_us.unwrap_or_else(|| silverman(&t, sd_t));
        if !(h > 0.0) {
            return Err(Error::Domain(format!("KDE bandwidth must be positive, got {h}")));
        }
        let kde = BinnedKde::new(&t, h, mean_t - 6.0 * sd_t - 4.0 * h, mean_t + 6.0 * sd_t + 4.0 * h);
        match opts.estimator {
            T0Estimator::Mode => kde.mode(),
            T0Estimator::Symmetry => kde.symmetry_centre(t[n / 2], sd_t),
        }
    };

    let xs: Vec<f64> = events.iter().map(|e| e.x_mm).collect();
    let ys: Vec<f64> = events.iter().map(|e| e.y_mm).collect();
    let (cx, sx) = mean_sd(&xs);
    let (cy, sy) = mean_sd(&ys);
    let root_n = (n as f64).sqrt();
    Ok(Calibration {
        t0_us: t0,
        t0_err_us: sd_t / root_n,
        center_mm: [cx, cy],
        center_err_mm: [sx / root_n, sy / root_n],
    })
}

fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, var.sqrt())
}

/// 0.9 min(sd, IQR/1.34) n^(-1/5); `sorted` must be sorted.
fn silverman(sorted: &[f64], sd: f64) -> f64 {
    let n = sorted.len();
    let iqr = sorted[(3 * n) / 4] - sorted[n / 4];
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    0.9 * spread * (n as f64).powf(-0.2)
}

/// Gaussian KDE evaluated on a fine grid by binning then smoothing.
struct BinnedKde {
    lo: f64,
    step: f64,
    density: Vec<f64>,
}

impl BinnedKde {
    const BINS: usize = 4096;

    fn new(samples: &[f64], h: f64, lo: f64, hi: f64) -> Self {
        let step = (hi - lo) / (Self::BINS - 1) as f64;
        let mut counts = vec![0.0; Self::BINS];
        for &s in samples {
            // Linear binning keeps the first moment exact.
            let u = ((s - lo) / step).clamp(0.0, (Self::BINS - 1) as f64);
            let i = (u.floor() as usize).min(Self::BINS - 2);
            let f = u - i as f64;
            counts[i] += 1.0 - f;
            counts[i + 1] += f;
        }
        let reach = ((5.0 * h / step).ceil() as usize).max(1);
        let kernel: Vec<f64> = (0..=reach)
            .map(|j| (-0.5 * (j as f64 * step / h).powi(2)).exp())
            .collect();
        let mut density = vec![0.0; Self::BINS];
        for (i, &c) in counts.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let a = i.saturating_sub(reach);
            let b = (i + reach).min(Self::BINS - 1);
            for (j, d) in density.iter_mut().enumerate().take(b + 1).skip(a) {
                *d += c * kernel[i.abs_diff(j)];
            }
        }
        BinnedKde { lo, step, density }
    }

    fn at(&self, t: f64) -> f64 {
        let u = (t - self.lo) / self.step;
        if u < 0.0 || u > (self.density.len() - 1) as f64 {
            return 0.0;
        }
        let i = (u.floor() as usize).min(self.density.len() - 2);
        let f = u - i as f64;
        self.density[i] * (1.0 - f) + self.density[i + 1] * f
    }

    fn mode(&self) -> f64 {
        let (i, _) = self
            .density
            .iter()
            .enumerate()
            .fold((0, f64::MIN), |best, (i, &d)| if d > best.1 { (i, d) } else { best });
        let x = self.lo + i as f64 * self.step;
        if i == 0 || i + 1 == self.density.len() {
            return x;
        }
        // Parabola through the three highest bins.
        let (a, b, c) = (self.density[i - 1], self.density[i], self.density[i + 1]);
        let denom = a - 2.0 * b + c;
        if denom == 0.0 {
            x
        } else {
            x + 0.5 * (a - c) / denom * self.step
        }
    }

    /// ∫ f(t) f(2c − t) dt, the mirror overlap about c.
    fn overlap(&self, c: f64) -> f64 {
        self.density
            .iter()
            .enumerate()
            .map(|(i, &d)| {
                if d == 0.0 {
                    0.0
                } else {
                    d * self.at(2.0 * c - (self.lo + i as f64 * self.step))
                }
            })
            .sum()
    }

    fn symmetry_centre(&self, start: f64, sd: f64) -> f64 {
        // Coarse scan around the median, then golden-section refinement.
        let span = sd;
        let n = 80;
        let mut best = (start, f64::MIN);
        for k in 0..=n {
            let c = start - span + 2.0 * span * k as f64 / n as f64;
            let o = self.overlap(c);
            if o > best.1 {
                best = (c, o);
            }
        }
        let width = 2.0 * span / n as f64;
        golden_max(|c| self.overlap(c), best.0 - width, best.0 + width, 1e-4 * self.step)
    }
}

/// Maximizer of a unimodal `f` on [a, b].
pub(crate) fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Tolerance on the matched time of flight.
pub const TOF_TOLERANCE_NS: f64 = 1e-3;
const MAX_NEWTON: usize = 200;

/// Momentum from one detector event. p_z inverts the exact TOF relation
/// (birth at the target point); p_x, p_y follow from the hit offset over the
/// flight time.
pub fn reconstruct(
    event: &DetectorEvent,
    geom: &SpectrometerGeometry,
    species: &IonSpecies,
    cal: &Calibration,
) -> Result<MomentumRecord> {
    let tof0 = time_of_flight(geom, species, 0.0, 0.0)?;
    let target = us_to_au(event.t_us - cal.t0_us) + tof0;
    if !(target > 0.0) || !event.t_us.is_finite() {
        return Err(Error::Data(format!(
            "event {}: time {} us is not after the calibrated origin (t0 = {} us)",
            event.id,
            event.t_us,
            cal.t0_us - au_to_us(tof0)
        )));
    }
    let pz = invert_tof(geom, species, target).map_err(|e| match e {
        Error::Numerical(m) => Error::Numerical(format!("event {}: {m}", event.id)),
        other => other,
    })?;
    let m = species.mass_au();
    let px = m * mm_to_au(event.x_mm - cal.center_mm[0]) / target;
    let py = m * mm_to_au(event.y_mm - cal.center_mm[1]) / target;
    Ok(MomentumRecord {
        p: [px, py, pz],
        event_id: event.id,
        channel: event.truth.map(|t| t.channel),
    })
}

/// p_z ≈ qE (t₀ − t), the linear cross-check.
pub fn linear_pz(event: &DetectorEvent, geom: &SpectrometerGeometry, species: &IonSpecies, cal: &Calibration) -> f64 {
    species.charge as f64 * geom.field_au() * us_to_au(cal.t0_us - event.t_us)
}

/// Solves time_of_flight(p) = target (a.u.) by Newton steps kept inside a
/// shrinking bracket; TOF is strictly decreasing in p.
fn invert_tof(geom: &SpectrometerGeometry, species: &IonSpecies, target: f64) -> Result<f64> {
    let qe = species.charge as f64 * geom.field_au();
    let tof = |p: f64| time_of_flight(geom, species, p, 0.0);
    let tof0 = tof(0.0)?;
    let mut p = qe * (tof0 - target);
    // Bracket [lo, hi] with tof(lo) ≥ target ≥ tof(hi).
    let mut width = p.abs().max(1e-3);
    let (mut lo, mut hi) = (p - width, p + width);
    for _ in 0..200 {
        if tof(lo)? >= target {
            break;
        }
        width *= 2.0;
        lo = p - width;
    }
    for _ in 0..200 {
        if tof(hi)? <= target {
            break;
        }
        width *= 2.0;
        hi = p + width;
    }
    let tol = crate::units::ns_to_au(TOF_TOLERANCE_NS);
    for _ in 0..MAX_NEWTON {
        let r = tof(p)? - target;
        if r.abs() < tol {
            return Ok(p);
        }
        if r > 0.0 {
            lo = p;
        } else {
            hi = p;
        }
        let slope = tof_slope(geom, species, p, 0.0);
        let mut next = p - r / slope;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        p = next;
    }
    Err(Error::Numerical(format!(
        "TOF inversion did not reach {TOF_TOLERANCE_NS} ns in {MAX_NEWTON} steps (target {:.6} ns, bracket [{lo}, {hi}] a.u.)",
        au_to_ns(target)
    )))
}

/// Reconstructs every event; fails on the first bad one.
pub fn reconstruct_all(
    events: &[DetectorEvent],
    geom: &SpectrometerGeometry,
    species: &IonSpecies,
    cal: &Calibration,
    exec: Exec,
) -> Result<Vec<MomentumRecord>> {
    exec.try_map(events.len(), |i| reconstruct(&events[i], geom, species, cal))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::apparatus::{simulate_event, Outcome};
    use crate::rng::substream;
    use crate::Vec3;
    use proptest::prelude::*;
    use rand::Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn event_for(p: Vec3, det: &DetectorModel, seed: u64) -> DetectorEvent {
        let geom = SpectrometerGeometry::default();
        let mut rng = substream(seed, 0, 0);
        match simulate_event(
            &geom,
            det,
            &IonSpecies::RB85,
            0,
            Vec3::zeros(),
            p,
            Channel::Rb5s,
            &mut rng,
        )
        .unwrap()
        {
            Outcome::Accepted(e) => e,
            Outcome::Rejected(r) => panic!("{r:?}"),
        }
    }

    #[test]
    fn zero_momentum_is_fixed_point() {
        let geom = SpectrometerGeometry::default();
        let det = DetectorModel::ideal();
        let cal = Calibration::from_truth(&geom, &IonSpecies::RB85, &det).unwrap();
        let rec = reconstruct(&event_for(Vec3::zeros(), &det, 1), &geom, &IonSpecies::RB85, &cal).unwrap();
        for c in rec.p {
            assert!(c.abs() < 1e-6, "{:?}", rec.p);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(256))]
        #[test]
        fn noiseless_round_trip(px in -0.5f64..0.5, py in -0.5f64..0.5, pz in -0.5f64..0.5) {
            let geom = SpectrometerGeometry::default();
            let det = DetectorModel::ideal();
            let cal = Calibration::from_truth(&geom, &IonSpecies::RB85, &det).unwrap();
            let p = Vec3::new(px, py, pz);
            let rec = reconstruct(&event_for(p, &det, 2), &geom, &IonSpecies::RB85, &cal).unwrap();
            for k in 0..3 {
                prop_assert!((rec.p[k] - p[k]).abs() < 1e-3);
            }
        }
    }

    #[test]
    fn linear_cross_check_within_one_percent() {
        let geom = SpectrometerGeometry::default();
        let det = DetectorModel::ideal();
        let cal = Calibration::from_truth(&geom, &IonSpecies::RB85, &det).unwrap();
        for pz in [-0.5, -0.2, 0.1, 0.3, 0.5] {
            let e = event_for(Vec3::new(0.0, 0.0, pz), &det, 3);
            let exact = reconstruct(&e, &geom, &IonSpecies::RB85, &cal).unwrap().p[2];
            let lin = linear_pz(&e, &geom, &IonSpecies::RB85, &cal);
            assert!((lin - exact).abs() < 0.01 * exact.abs(), "{pz}: {lin} vs {exact}");
        }
    }

    #[test]
    fn time_before_origin_is_data_error() {
        let geom = SpectrometerGeometry::default();
        let cal = Calibration::from_truth(&geom, &IonSpecies::RB85, &DetectorModel::ideal()).unwrap();
        let e = DetectorEvent {
            id: 4,
            t_us: cal.t0_us - 1e4,
            x_mm: 0.0,
            y_mm: 0.0,
            truth: None,
        };
        assert!(matches!(
            reconstruct(&e, &geom, &IonSpecies::RB85, &cal),
            Err(Error::Data(_))
        ));
    }

    #[test]
    fn noise_adds_in_quadrature() {
        let geom = SpectrometerGeometry {
            blur_au: [0.0, 0.0, 0.03],
            ..Default::default()
        };
        let det = DetectorModel::default();
        let sp = IonSpecies::RB85;
        let cal = Calibration::from_truth(&geom, &sp, &DetectorModel::ideal()).unwrap();
        let n = 20_000;
        let p: Vec<f64> = (0..n)
            .map(|i| {
                let mut rng = substream(11, 0, i);
                let e = match simulate_event(
                    &geom,
                    &det,
                    &sp,
                    i,
                    Vec3::zeros(),
                    Vec3::new(0.0, 0.0, 0.2),
                    Channel::Rb5s,
                    &mut rng,
                )
                .unwrap()
                {
                    Outcome::Accepted(e) => e,
                    Outcome::Rejected(r) => panic!("{r:?}"),
                };
                reconstruct(&e, &geom, &sp, &cal).unwrap().p[2]
            })
            .collect();
        let (_, sd) = mean_sd(&p);
        let timing = crate::apparatus::momentum_per_time(&geom, &sp, det.time_sigma_ns);
        let want = (timing * timing + 0.03f64.powi(2)).sqrt();
        assert!((sd - want).abs() < 0.05 * want, "{sd} vs {want}");
    }

    #[test]
    fn calibration_needs_events_and_handles_exact_cluster() {
        let geom = SpectrometerGeometry::default();
        let det = DetectorModel::ideal();
        let e = event_for(Vec3::zeros(), &det, 5);
        let few = vec![e; 99];
        assert!(matches!(calibrate(&few, &Default::default()), Err(Error::Data(_))));
        let many = vec![e; 200];
        let cal = calibrate(&many, &Default::default()).unwrap();
        let truth = Calibration::from_truth(&geom, &IonSpecies::RB85, &det).unwrap();
        assert_eq!(cal.t0_us, truth.t0_us);
    }

    fn double_peak_events(n: u64, det: &DetectorModel) -> Vec<DetectorEvent> {
        let geom = SpectrometerGeometry::default();
        (0..n)
            .map(|i| {
                let mut rng = substream(21, 1, i);
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                let g: f64 = StandardNormal.sample(&mut rng);
                let g2: f64 = StandardNormal.sample(&mut rng);
                let p = Vec3::new(0.05 * g2, 0.0, sign * 0.186 + 0.04 * g);
                match simulate_event(
                    &geom,
                    det,
                    &IonSpecies::RB85,
                    i,
                    Vec3::zeros(),
                    p,
                    Channel::Rb5s,
                    &mut rng,
                )
                .unwrap()
                {
                    Outcome::Accepted(e) => e,
                    Outcome::Rejected(r) => panic!("{r:?}"),
                }
            })
            .collect()
    }

    #[test]
    fn symmetric_source_calibrates_t0() {
        let geom = SpectrometerGeometry::default();
        let det = DetectorModel::default();
        let events = double_peak_events(100_000, &det);
        let cal = calibrate(&events, &Default::default()).unwrap();
        let truth = nominal_t0_us(&geom, &IonSpecies::RB85).unwrap();
        let allowed_us = au_to_us(2e-3 / geom.field_au());
        assert!(
            (cal.t0_us - truth).abs() < allowed_us,
            "{} vs {truth} (allowed {allowed_us})",
            cal.t0_us
        );
        // The mode sits on a peak, far from t0.
        let mode = calibrate(
            &events,
            &CalibrationOptions {
                estimator: T0Estimator::Mode,
                bandwidth_us: None,
            },
        )
        .unwrap();
        assert!((mode.t0_us - truth).abs() > 10.0 * allowed_us);
    }

    #[test]
    fn centroid_recovers_offset_centre() {
        let det = DetectorModel {
            center_mm: [1.0, 0.0],
            ..Default::default()
        };
        let events: Vec<DetectorEvent> = (0..10_000u64)
            .map(|i| {
                let mut rng = substream(31, 2, i);
                let g: f64 = StandardNormal.sample(&mut rng);
                event_for(Vec3::new(0.0, 0.0, 0.02 * g), &det, 1000 + i)
            })
            .collect();
        let cal = calibrate(&events, &Default::default()).unwrap();
        assert!((cal.center_mm[0] - 1.0).abs() < 0.02, "{:?}", cal.center_mm);
        assert!(cal.center_err_mm[0] > 0.0 && cal.center_err_mm[0] < 0.01);
    }
}
