//! Classical bouncers: point particles under `z'' = -2` above a perfectly
//! reflecting floor, kicked by the same pulses as the quantum problem.
//!
//! The factor 2 comes from the units: lengths in `z_g`, times in `t_g`, and
//! `z_g / t_g^2 = g / 2`. A magnetic pulse adds `+2 s beta(t)` to the
//! acceleration. A surface shake is handled in the frame comoving with the
//! mirror, where the floor stays at zero and the acceleration gains `-h''`;
//! reported heights are shifted back by `h(t)`.
//!
//! Away from pulses the flight is solved exactly (parabolic arcs between
//! analytic bounce times); inside `|t - t_k| <= 6 sigma_k` a velocity-Verlet
//! step with specular reflection is used.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{invalid, Error, Result};
use crate::parallel;
use crate::pulse::{merged_windows, surface_height, KickKind, KickPulse, Spin};

/// Verlet steps per pulse width when no step is given.
pub const DEFAULT_STEPS_PER_WIDTH: f64 = 200.0;

/// Draws allowed per particle before sampling gives up.
const MAX_DRAWS: usize = 1000;

/// Particles per reduction chunk. Fixed so that means do not depend on the
/// number of worker threads.
const CHUNK: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialDistribution {
    pub mu_z: f64,
    pub mu_v: f64,
    pub sigma_z: f64,
    pub sigma_v: f64,
}

impl InitialDistribution {
    /// Displaced Gaussian used by the fig1 preset.
    pub const REFERENCE: Self = Self { mu_z: 20.0, mu_v: 0.0, sigma_z: 4.0, sigma_v: 0.125 };
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalEnsemble {
    pub z: Vec<f64>,
    pub v: Vec<f64>,
    pub spin: Spin,
    pub seed: u64,
    pub time: f64,
    /// Set for particles whose apex exceeded the escape height.
    pub escaped: Vec<bool>,
}

impl ClassicalEnsemble {
    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    pub fn mean_height(&self) -> f64 {
        self.z.iter().sum::<f64>() / self.len() as f64
    }

    pub fn escaped_count(&self) -> usize {
        self.escaped.iter().filter(|&&e| e).count()
    }

    pub fn with_spin(mut self, spin: Spin) -> Self {
        self.spin = spin;
        self
    }
}

/// Energy `v^2/2 + 2z`, conserved by the free flight.
pub fn energy(z: f64, v: f64) -> f64 {
    0.5 * v * v + 2.0 * z
}

/// Gaussian ensemble at `t = 0`. Samples below the floor are redrawn; each
/// particle has its own ChaCha stream, so the result depends only on `seed`.
pub fn sample_initial(n: usize, dist: InitialDistribution, seed: u64) -> Result<ClassicalEnsemble> {
    if n == 0 {
        return Err(invalid("ensemble needs at least one particle"));
    }
    let InitialDistribution { mu_z, mu_v, sigma_z, sigma_v } = dist;
    if !(mu_z > 0.0) || !mu_z.is_finite() || !mu_v.is_finite() {
        return Err(invalid(format!("need finite mu_z > 0, got mu_z = {mu_z}, mu_v = {mu_v}")));
    }
    if !(sigma_z >= 0.0) || !(sigma_v >= 0.0) || !sigma_z.is_finite() || !sigma_v.is_finite() {
        return Err(invalid("standard deviations must be finite and non-negative"));
    }
    let nz = Normal::new(mu_z, sigma_z).map_err(|e| invalid(e.to_string()))?;
    let nv = Normal::new(mu_v, sigma_v).map_err(|e| invalid(e.to_string()))?;
    let draws = parallel::map_indices(n, |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        for attempt in 1..=MAX_DRAWS {
            let z = nz.sample(&mut rng);
            let v = nv.sample(&mut rng);
            if z >= 0.0 {
                return (z, v, attempt);
            }
        }
        (f64::NAN, f64::NAN, MAX_DRAWS)
    });
    let total: usize = draws.iter().map(|d| d.2).sum();
    let rate = (total - n) as f64 / total as f64;
    if rate > 0.5 || draws.iter().any(|d| d.0.is_nan()) {
        return Err(Error::RejectionRate { rate });
    }
    Ok(ClassicalEnsemble {
        z: draws.iter().map(|d| d.0).collect(),
        v: draws.iter().map(|d| d.1).collect(),
        spin: Spin::Up,
        seed,
        time: 0.0,
        escaped: vec![false; n],
    })
}

/// Exact flight under `z'' = -2` with reflection, for a duration `dt >= 0`.
pub fn ballistic(mut z: f64, mut v: f64, dt: f64) -> (f64, f64) {
    let mut left = dt;
    let hit = (v + (v * v + 4.0 * z).max(0.0).sqrt()) / 2.0;
    if left < hit {
        return (z + v * left - left * left, v - 2.0 * left);
    }
    left -= hit;
    // leaving the floor with the impact speed; each bounce then lasts `u`
    let u = (v * v + 4.0 * z).max(0.0).sqrt();
    if u > 0.0 {
        left -= (left / u).floor() * u;
    }
    z = (u * left - left * left).max(0.0);
    v = u - 2.0 * left;
    (z, v)
}

/// Flight under constant acceleration `a` for `h`, reflecting at the floor.
fn parabola_with_floor(z: f64, v: f64, a: f64, h: f64) -> (f64, f64) {
    let (mut z, mut v, mut left) = (z, v, h);
    for _ in 0..4 {
        let z_end = z + v * left + 0.5 * a * left * left;
        if z_end >= 0.0 {
            return (z_end, v + a * left);
        }
        // first root of z + v s + a s^2 / 2 = 0 in (0, left]
        let s = if a.abs() < 1e-300 {
            -z / v
        } else {
            let disc = (v * v - 2.0 * a * z).max(0.0).sqrt();
            let q = -0.5 * (v + v.signum() * disc);
            let (r1, r2) = (q / (0.5 * a), if q != 0.0 { z / q } else { f64::INFINITY });
            [r1, r2].into_iter().filter(|r| *r >= 0.0 && *r <= left).fold(left, f64::min)
        };
        v = -(v + a * s);
        z = 0.0;
        left -= s;
    }
    (z.max(0.0), v)
}

/// Acceleration in the (comoving) frame where the floor sits at zero.
fn acceleration(pulses: &[KickPulse], spin: Spin, t: f64) -> f64 {
    let mut a = -2.0;
    for p in pulses {
        match p.kind {
            KickKind::MagneticGradient => a += 2.0 * spin.sign() * p.profile(t),
            KickKind::SurfaceShake => a -= p.profile_second_derivative(t),
        }
    }
    a
}

/// Prepared pulse train: merged windows and the Verlet step inside them.
#[derive(Debug, Clone)]
pub struct Kicks {
    pulses: Vec<KickPulse>,
    windows: Vec<(f64, f64)>,
    step: Option<f64>,
}

impl Kicks {
    /// `step` overrides the default Verlet step `sigma_k / 200`.
    pub fn new(pulses: &[KickPulse], step: Option<f64>) -> Result<Self> {
        if let Some(s) = step {
            if !(s > 0.0) || !s.is_finite() {
                return Err(invalid(format!("Verlet step must be positive, got {s}")));
            }
        }
        Ok(Self { pulses: pulses.to_vec(), windows: merged_windows(pulses), step })
    }

    fn step_for(&self, a: f64, b: f64) -> f64 {
        self.step.unwrap_or_else(|| {
            crate::pulse::active_width(&self.pulses, a, b).unwrap_or(1.0) / DEFAULT_STEPS_PER_WIDTH
        })
    }

    /// Moves one particle (comoving coordinates) from `t0` to `t1 >= t0`.
    pub fn advance(&self, z: f64, v: f64, spin: Spin, t0: f64, t1: f64) -> (f64, f64) {
        let (mut z, mut v, mut t) = (z, v, t0);
        while t < t1 {
            let window = self.windows.iter().find(|w| w.1 > t);
            match window {
                Some(&(lo, hi)) if lo <= t => {
                    let end = hi.min(t1);
                    (z, v) = self.verlet(z, v, spin, t, end);
                    t = end;
                }
                Some(&(lo, _)) => {
                    let end = lo.min(t1);
                    (z, v) = ballistic(z, v, end - t);
                    t = end;
                }
                None => {
                    (z, v) = ballistic(z, v, t1 - t);
                    t = t1;
                }
            }
        }
        (z, v)
    }

    fn verlet(&self, mut z: f64, mut v: f64, spin: Spin, t0: f64, t1: f64) -> (f64, f64) {
        let span = t1 - t0;
        let steps = (span / self.step_for(t0, t1)).ceil().max(1.0) as usize;
        let h = span / steps as f64;
        let mut a = acceleration(&self.pulses, spin, t0);
        for k in 0..steps {
            let t_next = t0 + (k + 1) as f64 * h;
            // drift under the step-start acceleration (exact parabola, so a
            // bounce inside the step is resolved at its true time), then the
            // usual Verlet correction with the new acceleration
            let (z1, v1) = parabola_with_floor(z, v, a, h);
            let a_next = acceleration(&self.pulses, spin, t_next);
            z = z1;
            v = v1 + 0.5 * h * (a_next - a);
            a = a_next;
        }
        (z, v)
    }

    /// Lab-frame height of a particle at comoving height `z`.
    pub fn lab_height(&self, z: f64, t: f64) -> f64 {
        z + surface_height(&self.pulses, t)
    }
}

/// Propagates the whole ensemble to `t_to`, flagging particles whose apex
/// `z + v^2/4` rises above `z_cap` afterwards.
pub fn propagate(ensemble: &mut ClassicalEnsemble, kicks: &Kicks, t_to: f64, z_cap: f64) -> Result<()> {
    if !(t_to > ensemble.time) {
        return Err(invalid(format!("t_to = {t_to} must exceed the ensemble time {}", ensemble.time)));
    }
    let (t0, spin) = (ensemble.time, ensemble.spin);
    let moved = parallel::map_indices(ensemble.len(), |i| kicks.advance(ensemble.z[i], ensemble.v[i], spin, t0, t_to));
    for (i, (z, v)) in moved.into_iter().enumerate() {
        ensemble.z[i] = z;
        ensemble.v[i] = v;
        if z + 0.25 * v * v > z_cap {
            ensemble.escaped[i] = true;
        }
    }
    ensemble.time = t_to;
    Ok(())
}

#[derive(Debug, Clone)]
pub struct HeightSeries {
    pub times: Vec<f64>,
    pub spin_up: Vec<f64>,
    pub spin_down: Vec<f64>,
    pub average: Vec<f64>,
    /// Particles flagged as escaped in either branch.
    pub escaped: usize,
}

/// `<z>(t)` on `times` (ascending, starting at or after the ensemble time),
/// for both spin branches and their equal-weight average.
pub fn mean_height_series(
    ensemble: &ClassicalEnsemble,
    pulses: &[KickPulse],
    times: &[f64],
    step: Option<f64>,
    z_cap: f64,
) -> Result<HeightSeries> {
    if times.is_empty() {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    if times[0] < ensemble.time || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(invalid("sample times must be ascending and not precede the ensemble"));
    }
    let kicks = Kicks::new(pulses, step)?;
    let branch = |spin: Spin| branch_series(ensemble, &kicks, spin, times, z_cap);
    let magnetic = pulses.iter().any(|p| p.kind == KickKind::MagneticGradient && p.amplitude != 0.0);
    let (up, down) = if magnetic {
        parallel::join(|| branch(Spin::Up), || branch(Spin::Down))
    } else {
        let up = branch(Spin::Up);
        (up.clone(), up)
    };
    let escaped = up.1.iter().zip(&down.1).filter(|(a, b)| **a || **b).count();
    let average = up.0.iter().zip(&down.0).map(|(a, b)| 0.5 * (a + b)).collect();
    Ok(HeightSeries { times: times.to_vec(), spin_up: up.0, spin_down: down.0, average, escaped })
}

fn branch_series(
    ensemble: &ClassicalEnsemble,
    kicks: &Kicks,
    spin: Spin,
    times: &[f64],
    z_cap: f64,
) -> (Vec<f64>, Vec<bool>) {
    let n = ensemble.len();
    let chunks = n.div_ceil(CHUNK);
    let partial = parallel::map_indices(chunks, |c| {
        let mut sums = vec![0.0; times.len()];
        let mut escaped = Vec::with_capacity(CHUNK);
        for i in c * CHUNK..((c + 1) * CHUNK).min(n) {
            let (mut z, mut v, mut t) = (ensemble.z[i], ensemble.v[i], ensemble.time);
            let mut out = ensemble.escaped[i];
            for (k, &tk) in times.iter().enumerate() {
                (z, v) = kicks.advance(z, v, spin, t, tk);
                t = tk;
                out |= z + 0.25 * v * v > z_cap;
                sums[k] += kicks.lab_height(z, t);
            }
            escaped.push(out);
        }
        (sums, escaped)
    });
    let mut total = vec![0.0; times.len()];
    let mut escaped = Vec::with_capacity(n);
    for (sums, esc) in partial {
        for (t, s) in total.iter_mut().zip(sums) {
            *t += s;
        }
        escaped.extend(esc);
    }
    total.iter_mut().for_each(|t| *t /= n as f64);
    (total, escaped)
}
