//! SFA ionization amplitude
//!
//! `M_p = ∫ dt ⟨p + A(t)| r·E(t) |Ψ₀⟩ exp[i S(t)]`, with
//! `S(t) = ∫₀ᵗ [(p + A)²/2 + I_p] dt''`.
//!
//! For a linearly polarized field and an s-like initial state the amplitude
//! depends on `p` only through its component along the polarization axis and
//! the squared transverse magnitude. The action then splits into
//! `(p²/2 + I_p) t + p_∥ ∫A + ½ ∫A²`, and the two momentum-independent
//! integrals are tabulated once per pulse.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;

use super::{InitialState, LaserPulse};
use crate::{Error, Result, Vec3};

/// Prefactor of the hydrogen-like s-state dipole matrix element,
/// `⟨q|r|ψ⟩ = -i (8√2/π) κ^{5/2} q / (q² + κ²)³`, for
/// `ψ(r) = sqrt(κ³/π) exp(-κr)` and plane waves `(2π)^{-3/2} e^{iq·r}`.
pub fn dipole_prefactor(state: &InitialState) -> Complex64 {
    Complex64::new(0.0, -8.0 * SQRT_2 / PI * state.kappa().powf(2.5))
}

/// Polarization component of the bound–continuum dipole `⟨q|r|Ψ₀⟩`.
pub fn dipole_element(state: &InitialState, q: &Vec3, polarization: &Vec3) -> Complex64 {
    let k2 = state.kappa() * state.kappa();
    dipole_prefactor(state) * dipole_radial(q.dot(polarization), q.norm_squared(), k2)
}

#[inline]
fn dipole_radial(q_par: f64, q2: f64, kappa2: f64) -> f64 {
    let d = q2 + kappa2;
    q_par / (d * d * d)
}

/// Action `S(t')` with the lower limit at the start of the pulse.
///
/// Composite Simpson quadrature of `(p + A)²/2 + I_p`, at least 400 panels
/// per optical cycle.
pub fn action_phase(pulse: &LaserPulse, state: &InitialState, p: &Vec3, t: f64) -> Result<f64> {
    if !(0.0..=pulse.duration()).contains(&t) {
        return Err(Error::Domain(format!(
            "action evaluated at t = {t} outside the pulse [0, {}]",
            pulse.duration()
        )));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let eps = pulse.polarization();
    let ip = state.ip_au();
    let integrand = |tt: f64| (p + eps * pulse.vector_potential_scalar(tt)).norm_squared() / 2.0 + ip;
    let panels = ((t / pulse.cycle_period() * 400.0).ceil() as usize).max(1) * 2;
    let h = t / panels as f64;
    let mut sum = integrand(0.0) + integrand(t);
    for i in 1..panels {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * integrand(i as f64 * h);
    }
    Ok(sum * h / 3.0)
}

/// Quadrature controls for [`amplitude`].
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureOptions {
    /// Simpson panels per optical cycle at the first refinement level.
    pub steps_per_cycle: usize,
    /// How many times the step may be halved after the first comparison.
    pub max_doublings: u32,
    /// Converged when successive estimates differ by less than this fraction.
    pub rel_tol: f64,
    /// Absolute floor, relative to ∫|integrand| dt, for amplitudes that
    /// cancel to (near) zero.
    pub floor_rel: f64,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        QuadratureOptions {
            steps_per_cycle: 200,
            max_doublings: 4,
            rel_tol: 1e-4,
            floor_rel: 1e-10,
        }
    }
}

/// Amplitude together with convergence diagnostics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AmplitudeEstimate {
    pub value: Complex64,
    /// Panels per cycle used for the reported value.
    pub steps_per_cycle: usize,
    /// |M_h − M_2h| of the last comparison.
    pub change: f64,
}

/// Pulse quantities on the finest time grid, shared by every momentum.
#[derive(Clone, Debug)]
pub struct TimeTable {
    opts: QuadratureOptions,
    cycles: usize,
    step: f64,
    time: Vec<f64>,
    field: Vec<f64>,
    potential: Vec<f64>,
    int_a: Vec<f64>,
    int_a2: Vec<f64>,
}

impl TimeTable {
    pub fn new(pulse: &LaserPulse, opts: QuadratureOptions) -> Result<Self> {
        if opts.steps_per_cycle < 2 || !opts.steps_per_cycle.is_multiple_of(2) {
            return Err(Error::Domain(format!(
                "steps per cycle must be even and >= 2, got {}",
                opts.steps_per_cycle
            )));
        }
        let cycles = pulse.cycles() as usize;
        let n = (cycles * opts.steps_per_cycle) << opts.max_doublings;
        let step = pulse.duration() / n as f64;
        let mut time = Vec::with_capacity(n + 1);
        let mut field = Vec::with_capacity(n + 1);
        let mut potential = Vec::with_capacity(n + 1);
        let mut int_a = Vec::with_capacity(n + 1);
        let mut int_a2 = Vec::with_capacity(n + 1);
        let (mut ia, mut ia2) = (0.0, 0.0);
        let mut a_prev = 0.0;
        for i in 0..=n {
            let t = if i == n { pulse.duration() } else { i as f64 * step };
            let a = pulse.vector_potential_scalar(t);
            if i > 0 {
                let am = pulse.vector_potential_scalar(t - 0.5 * step);
                ia += step / 6.0 * (a_prev + 4.0 * am + a);
                ia2 += step / 6.0 * (a_prev * a_prev + 4.0 * am * am + a * a);
            }
            time.push(t);
            field.push(pulse.electric_field_scalar(t));
            potential.push(a);
            int_a.push(ia);
            int_a2.push(ia2);
            a_prev = a;
        }
        Ok(TimeTable {
            opts,
            cycles,
            step,
            time,
            field,
            potential,
            int_a,
            int_a2,
        })
    }

    pub fn options(&self) -> &QuadratureOptions {
        &self.opts
    }

    fn finest(&self) -> usize {
        self.time.len() - 1
    }
}

/// Momentum of the photoelectron reduced to (parallel, transverse²) parts.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReducedMomentum {
    pub parallel: f64,
    pub perp2: f64,
}

impl ReducedMomentum {
    pub fn from_vector(p: &Vec3, polarization: &Vec3) -> Self {
        let parallel = p.dot(polarization);
        let perp2 = match axis_index(polarization) {
            Some(k) => (0..3).filter(|&j| j != k).map(|j| p[j] * p[j]).sum(),
            None => (p.norm_squared() - parallel * parallel).max(0.0),
        };
        ReducedMomentum { parallel, perp2 }
    }
}

pub(crate) fn axis_index(e: &Vec3) -> Option<usize> {
    (0..3).find(|&k| e[k].abs() == 1.0 && (0..3).all(|j| j == k || e[j] == 0.0))
}

/// Amplitude for the photoelectron momentum `p` (a.u.).
pub fn amplitude(pulse: &LaserPulse, state: &InitialState, p: &Vec3) -> Result<Complex64> {
    let table = TimeTable::new(pulse, QuadratureOptions::default())?;
    let r = ReducedMomentum::from_vector(p, &pulse.polarization());
    Ok(amplitude_reduced(&table, state, r)?.value)
}

/// Successive-halving Simpson quadrature on a shared [`TimeTable`].
///
/// Trapezoid sums are kept level by level; Simpson at `n` panels is
/// `(4 T_n − T_{n/2}) / 3`, so each refinement only evaluates the new
/// midpoints.
pub fn amplitude_reduced(table: &TimeTable, state: &InitialState, p: ReducedMomentum) -> Result<AmplitudeEstimate> {
    let opts = table.opts;
    let kappa2 = state.kappa() * state.kappa();
    let energy = 0.5 * (p.parallel * p.parallel + p.perp2) + state.ip_au();
    let integrand = |i: usize| -> (Complex64, f64) {
        let q_par = p.parallel + table.potential[i];
        let g = dipole_radial(q_par, p.perp2 + q_par * q_par, kappa2) * table.field[i];
        let s = energy * table.time[i] + p.parallel * table.int_a[i] + 0.5 * table.int_a2[i];
        let (sin, cos) = s.sin_cos();
        (Complex64::new(g * cos, g * sin), g.abs())
    };

    let finest = table.finest();
    // Coarsest trapezoid level has half the panels of the first Simpson level.
    let mut panels = table.cycles * opts.steps_per_cycle / 2;
    let mut stride = finest / panels;
    let mut trap_sum = Complex64::new(0.0, 0.0);
    let mut abs_sum = 0.0;
    for k in 0..=panels {
        let w = if k == 0 || k == panels { 0.5 } else { 1.0 };
        let (f, a) = integrand(k * stride);
        trap_sum += f * w;
        abs_sum += a * w;
    }
    let mut trap = trap_sum * (stride as f64 * table.step);

    let refine = |panels: &mut usize, stride: &mut usize, trap: &mut Complex64, abs_sum: &mut f64| {
        let half = *stride / 2;
        let mut mid = Complex64::new(0.0, 0.0);
        let mut mid_abs = 0.0;
        for k in 0..*panels {
            let (f, a) = integrand(k * *stride + half);
            mid += f;
            mid_abs += a;
        }
        *abs_sum += mid_abs;
        let h = half as f64 * table.step;
        let next = *trap * 0.5 + mid * h;
        let simpson = (next * 4.0 - *trap) / 3.0;
        *trap = next;
        *panels *= 2;
        *stride = half;
        simpson
    };

    let mut prev = refine(&mut panels, &mut stride, &mut trap, &mut abs_sum);
    let prefactor = dipole_prefactor(state);
    let mut last_change = f64::INFINITY;
    for _ in 0..opts.max_doublings {
        let cur = refine(&mut panels, &mut stride, &mut trap, &mut abs_sum);
        let l1 = abs_sum * stride as f64 * table.step;
        let change = (cur - prev).norm();
        last_change = change * prefactor.norm();
        if change <= opts.rel_tol * cur.norm() || change <= opts.floor_rel * l1 {
            return Ok(AmplitudeEstimate {
                value: prefactor * cur,
                steps_per_cycle: panels / table.cycles,
                change: last_change,
            });
        }
        prev = cur;
    }
    Err(Error::Numerical(format!(
        "amplitude quadrature did not converge for p_par = {}, p_perp^2 = {} after {} steps/cycle \
         (last change {:.3e}, |M| {:.3e})",
        p.parallel,
        p.perp2,
        panels / table.cycles,
        last_change,
        (prefactor * prev).norm()
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::strongfield::Channel;

    fn pulse() -> LaserPulse {
        LaserPulse::new(800.0, 1e10, 20).unwrap()
    }

    #[test]
    fn dipole_is_odd_and_zero_at_origin() {
        let s = Channel::Rb5s.state();
        let e = Vec3::z();
        assert_eq!(dipole_element(&s, &Vec3::zeros(), &e), Complex64::new(0.0, 0.0));
        let q = Vec3::new(0.1, -0.2, 0.3);
        assert_eq!(dipole_element(&s, &-q, &e), -dipole_element(&s, &q, &e));
    }

    #[test]
    fn dipole_peaks_at_kappa_over_sqrt5() {
        let s = Channel::Rb5s.state();
        let e = Vec3::z();
        let n = 200_000;
        let (mut best, mut arg) = (0.0, 0.0);
        for i in 1..=n {
            let q = 2.0 * s.kappa() * i as f64 / n as f64;
            let v = dipole_element(&s, &(e * q), &e).norm();
            if v > best {
                best = v;
                arg = q;
            }
        }
        assert!((arg - s.kappa() / 5f64.sqrt()).abs() < 2.0 * s.kappa() / n as f64);
    }

    #[test]
    fn dipole_normalization_matches_fourier_transform() {
        // Radial FT of r·ψ along z, evaluated by brute-force quadrature:
        // <q|z|ψ> = -i (2π)^{-3/2} ∂/∂q_z ∫ e^{-iq·r} ψ d³r, and
        // ∫ e^{-iq·r} ψ d³r = 4π ∫ r sin(qr)/q ψ(r) dr.
        let s = Channel::Rb5s.state();
        let k = s.kappa();
        let norm = (k.powi(3) / PI).sqrt();
        let phi = |q: f64| {
            let n = 20_000;
            let rmax = 60.0 / k;
            let h = rmax / n as f64;
            let mut acc = 0.0;
            for i in 1..n {
                let r = i as f64 * h;
                let w = if i % 2 == 1 { 4.0 } else { 2.0 };
                acc += w * r * (q * r).sin() / q * norm * (-k * r).exp();
            }
            4.0 * PI * acc * h / 3.0 / (2.0 * PI).powf(1.5)
        };
        let q = 0.3;
        let dq = 1e-4;
        let deriv = (phi(q + dq) - phi(q - dq)) / (2.0 * dq);
        // i ∇_q φ(q) along z for q ∥ z
        let oracle = Complex64::new(0.0, deriv);
        let ours = dipole_element(&s, &Vec3::new(0.0, 0.0, q), &Vec3::z());
        assert!((ours - oracle).norm() < 1e-6 * oracle.norm(), "{ours} vs {oracle}");
    }

    #[test]
    fn action_zero_at_start_and_linear_without_field() {
        let s = Channel::Rb5s.state();
        let p = Vec3::new(0.05, 0.0, 0.19);
        assert_eq!(action_phase(&pulse(), &s, &p, 0.0).unwrap(), 0.0);
        let dark = pulse().with_intensity(0.0).unwrap();
        let t = 0.37 * dark.duration();
        let got = action_phase(&dark, &s, &p, t).unwrap();
        let want = (p.norm_squared() / 2.0 + s.ip_au()) * t;
        assert!((got - want).abs() < 1e-12 * want);
        assert!(action_phase(&pulse(), &s, &p, -1.0).is_err());
        assert!(action_phase(&pulse(), &s, &p, pulse().duration() * 1.01).is_err());
    }

    // Adaptive Gauss–Kronrod (7/15) oracle, independent of the Simpson path.
    fn gauss_kronrod(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        const XK: [f64; 8] = [
            0.991_455_371_120_812_6,
            0.949_107_912_342_758_5,
            0.864_864_423_359_769_1,
            0.741_531_185_599_394_4,
            0.586_087_235_467_691_1,
            0.405_845_151_377_397_2,
            0.207_784_955_007_898_5,
            0.0,
        ];
        const WK: [f64; 8] = [
            0.022_935_322_010_529_22,
            0.063_092_092_629_978_55,
            0.104_790_010_322_250_2,
            0.140_653_259_715_525_9,
            0.169_004_726_639_267_9,
            0.190_350_578_064_785_4,
            0.204_432_940_075_298_9,
            0.209_482_141_084_727_8,
        ];
        const WG: [f64; 4] = [
            0.129_484_966_168_869_7,
            0.279_705_391_489_276_7,
            0.381_830_050_505_118_9,
            0.417_959_183_673_469_4,
        ];
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        let mut k = WK[7] * f(c);
        let mut g = WG[3] * f(c);
        for i in 0..7 {
            let x = h * XK[i];
            let s = f(c - x) + f(c + x);
            k += WK[i] * s;
            if i % 2 == 1 {
                g += WG[i / 2] * s;
            }
        }
        let (k, g) = (k * h, g * h);
        if (k - g).abs() <= tol || depth == 0 {
            k
        } else {
            gauss_kronrod(f, a, c, tol / 2.0, depth - 1) + gauss_kronrod(f, c, b, tol / 2.0, depth - 1)
        }
    }

    #[test]
    fn action_matches_adaptive_oracle() {
        let pl = pulse();
        let s = Channel::Rb5s.state();
        let p = Vec3::new(0.0, 0.0, 0.19);
        let f = |t: f64| (p + pl.vector_potential(t)).norm_squared() / 2.0 + s.ip_au();
        let oracle = gauss_kronrod(&f, 0.0, pl.duration(), 1e-10, 30);
        let got = action_phase(&pl, &s, &p, pl.duration()).unwrap();
        assert!((got - oracle).abs() < 1e-6 * oracle, "{got} vs {oracle}");
    }

    #[test]
    fn action_strictly_increasing() {
        let pl = LaserPulse::new(800.0, 1e12, 4).unwrap();
        let s = Channel::Rb5p.state();
        let p = Vec3::new(0.0, 0.0, -0.3);
        let mut last = -1.0;
        for k in 0..=40 {
            let v = action_phase(&pl, &s, &p, pl.duration() * k as f64 / 40.0).unwrap();
            assert!(v > last);
            last = v;
        }
    }

    #[test]
    fn tabulated_action_matches_direct_route() {
        let pl = pulse();
        let s = Channel::Rb5s.state();
        let table = TimeTable::new(&pl, QuadratureOptions::default()).unwrap();
        let p = Vec3::new(0.07, -0.02, 0.21);
        let r = ReducedMomentum::from_vector(&p, &Vec3::z());
        let i = table.finest() * 3 / 7;
        let t = table.time[i];
        let e = 0.5 * p.norm_squared() + s.ip_au();
        let tab = e * t + r.parallel * table.int_a[i] + 0.5 * table.int_a2[i];
        let direct = action_phase(&pl, &s, &p, t).unwrap();
        assert!((tab - direct).abs() < 1e-8 * direct);
    }

    #[test]
    fn zero_intensity_gives_zero_amplitude() {
        let dark = pulse().with_intensity(0.0).unwrap();
        let s = Channel::Rb5s.state();
        for p in [Vec3::new(0.0, 0.0, 0.19), Vec3::new(0.1, 0.2, -0.3)] {
            assert_eq!(amplitude(&dark, &s, &p).unwrap(), Complex64::new(0.0, 0.0));
        }
    }

    #[test]
    fn halving_the_step_changes_little() {
        let pl = pulse();
        let s = Channel::Rb5s.state();
        let base = QuadratureOptions::default();
        let fine = QuadratureOptions {
            steps_per_cycle: 800,
            max_doublings: 2,
            ..base
        };
        let t1 = TimeTable::new(&pl, base).unwrap();
        let t2 = TimeTable::new(&pl, fine).unwrap();
        for pz in [0.05, 0.12, 0.186, 0.25, 0.38] {
            let r = ReducedMomentum {
                parallel: pz,
                perp2: 0.01,
            };
            let a = amplitude_reduced(&t1, &s, r).unwrap().value;
            let b = amplitude_reduced(&t2, &s, r).unwrap().value;
            assert!((a.norm() - b.norm()).abs() <= 1e-4 * b.norm(), "pz {pz}: {a} vs {b}");
        }
    }

    #[test]
    fn reduced_momentum_uses_exact_sums_on_axes() {
        let p = Vec3::new(0.3, -0.4, 0.1);
        let r = ReducedMomentum::from_vector(&p, &Vec3::z());
        assert_eq!(r.parallel, 0.1);
        assert_eq!(r.perp2, 0.3 * 0.3 + 0.4 * 0.4);
        let q = Vec3::new(-0.4, 0.3, 0.1);
        assert_eq!(ReducedMomentum::from_vector(&q, &Vec3::z()), r);
        let s = 0.5f64.sqrt();
        let tilted = ReducedMomentum::from_vector(&p, &Vec3::new(s, 0.0, s));
        assert!((tilted.parallel - 0.4 * s).abs() < 1e-15);
        assert!((tilted.perp2 + tilted.parallel.powi(2) - p.norm_squared()).abs() < 1e-15);
    }
}
