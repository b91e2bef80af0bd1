//! Time evolution of eigenbasis coefficients.
//!
//! Between pulses the evolution is diagonal, `c_n <- c_n exp(-i z_n dt)`.
//! Inside a pulse window the coefficients obey
//! `i dc/dt = (diag(z_n) + kappa(t) Z) c` and are integrated with classical
//! RK4; the step is halved until the norm drift over the segment stays below
//! `DRIFT_TOLERANCE`, after which the norm is restored.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::basis::EigenBasis;
use crate::error::{Error, Result};
use crate::pulse::{active_width, coupling, merged_windows, surface_height, KickKind, KickPulse, Spin};
use crate::state::StateVector;

/// RK4 steps per pulse width.
pub const DEFAULT_STEPS_PER_WIDTH: f64 = 500.0;
/// Allowed norm drift over one integrated segment.
pub const DRIFT_TOLERANCE: f64 = 1e-10;
const MAX_HALVINGS: usize = 8;

/// Imaginary residual of `<z>` above which the state is considered corrupt.
pub const HERMITIAN_TOLERANCE: f64 = 1e-12;

/// `c_n <- c_n exp(-i z_n dt)`.
pub fn free_evolve(basis: &EigenBasis, state: &mut StateVector, dt: f64) {
    for (c, z) in state.coeffs.iter_mut().zip(basis.zeros()) {
        *c *= Complex64::from_polar(1.0, -z * dt);
    }
    state.time += dt;
}

/// `<z> = c^dagger Z c`.
pub fn expectation_z(basis: &EigenBasis, state: &StateVector) -> Result<f64> {
    let z = basis.position();
    let m = state.len();
    let zs = z.as_slice();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..m {
        let ci = state.coeffs[i].conj();
        let row = &zs[i * m..(i + 1) * m];
        let mut inner = Complex64::new(0.0, 0.0);
        for (zij, cj) in row.iter().zip(&state.coeffs) {
            inner += cj * *zij;
        }
        acc += ci * inner;
    }
    if acc.im.abs() > HERMITIAN_TOLERANCE * acc.re.abs().max(1.0) {
        return Err(Error::NonHermitian { residual: acc.im });
    }
    Ok(acc.re)
}

/// Evolves states under gravity plus a train of kick pulses for one spin branch.
#[derive(Debug, Clone)]
pub struct Propagator<'a> {
    basis: &'a EigenBasis,
    pulses: Vec<KickPulse>,
    windows: Vec<(f64, f64)>,
    spin: Spin,
    steps_per_width: f64,
}

impl<'a> Propagator<'a> {
    pub fn new(basis: &'a EigenBasis, pulses: &[KickPulse], spin: Spin) -> Self {
        Self {
            basis,
            windows: merged_windows(pulses),
            pulses: pulses.to_vec(),
            spin,
            steps_per_width: DEFAULT_STEPS_PER_WIDTH,
        }
    }

    pub fn with_steps_per_width(mut self, steps: f64) -> Self {
        self.steps_per_width = steps;
        self
    }

    pub fn pulses(&self) -> &[KickPulse] {
        &self.pulses
    }

    pub fn spin(&self) -> Spin {
        self.spin
    }

    /// Advances `state` from `state.time` to `t_to` (forwards or backwards).
    pub fn advance(&self, state: &mut StateVector, t_to: f64) -> Result<()> {
        let t_from = state.time;
        if t_to == t_from {
            return Ok(());
        }
        let (lo, hi) = if t_to > t_from { (t_from, t_to) } else { (t_to, t_from) };
        // cut points: every window edge inside the interval
        let mut cuts = vec![lo, hi];
        for &(a, b) in &self.windows {
            for e in [a, b] {
                if e > lo && e < hi {
                    cuts.push(e);
                }
            }
        }
        cuts.sort_by(f64::total_cmp);
        let segments: Vec<(f64, f64)> = cuts.windows(2).map(|w| (w[0], w[1])).collect();
        let ordered: Box<dyn Iterator<Item = &(f64, f64)>> =
            if t_to > t_from { Box::new(segments.iter()) } else { Box::new(segments.iter().rev()) };
        for &(a, b) in ordered {
            let target = if t_to > t_from { b } else { a };
            let mid = 0.5 * (a + b);
            let pulsed = self.windows.iter().any(|&(wa, wb)| mid > wa && mid < wb);
            if pulsed {
                self.integrate_segment(state, target, a, b)?;
            } else {
                free_evolve(self.basis, state, target - state.time);
            }
            state.time = target;
        }
        Ok(())
    }

    fn integrate_segment(&self, state: &mut StateVector, target: f64, a: f64, b: f64) -> Result<()> {
        let width = active_width(&self.pulses, a, b).unwrap_or(b - a);
        let dt0 = width / self.steps_per_width;
        let span = target - state.time;
        let mut steps = ((span.abs() / dt0).ceil() as usize).max(1);
        let start = state.clone();
        let norm0 = start.norm_sqr();
        let mut worst = 0.0;
        for _ in 0..=MAX_HALVINGS {
            let mut trial = start.clone();
            self.rk4(&mut trial, span / steps as f64, steps);
            let drift = (trial.norm_sqr() - norm0).abs();
            if drift <= DRIFT_TOLERANCE {
                let scale = (norm0 / trial.norm_sqr()).sqrt();
                trial.coeffs.iter_mut().for_each(|c| *c *= scale);
                trial.time = target;
                *state = trial;
                return Ok(());
            }
            worst = drift;
            steps *= 2;
        }
        Err(Error::NormDrift { drift: worst })
    }

    /// RK4 in the interaction picture relative to the segment start `t0`:
    /// `b = exp(i D (t - t0)) c`, `db/dt = -i kappa(t) exp(i D s) Z exp(-i D s) b`.
    /// Free flight is therefore reproduced exactly when `kappa` vanishes.
    fn rk4(&self, state: &mut StateVector, h: f64, steps: usize) {
        let m = state.len();
        let zeros = self.basis.zeros();
        let zmat = self.basis.position().as_slice();
        let zero = Complex64::new(0.0, 0.0);
        let mut k = [vec![zero; m], vec![zero; m], vec![zero; m], vec![zero; m]];
        let mut tmp = vec![zero; m];
        let mut rotated = vec![zero; m];
        let mut phase = vec![zero; m];
        let t0 = state.time;
        let mut deriv = |s: f64, b: &[Complex64], out: &mut [Complex64]| {
            let kappa = coupling(&self.pulses, t0 + s, self.spin);
            if kappa == 0.0 {
                out.iter_mut().for_each(|o| *o = zero);
                return;
            }
            for j in 0..m {
                phase[j] = Complex64::from_polar(1.0, -zeros[j] * s);
                rotated[j] = phase[j] * b[j];
            }
            for i in 0..m {
                let row = &zmat[i * m..(i + 1) * m];
                let mut acc = zero;
                for (zij, u) in row.iter().zip(&rotated) {
                    acc += u * *zij;
                }
                // -i kappa conj(phase_i) acc
                out[i] = Complex64::new(0.0, -kappa) * phase[i].conj() * acc;
            }
        };
        let mut s = 0.0;
        let mut b = state.coeffs.clone();
        for step in 0..steps {
            deriv(s, &b, &mut k[0]);
            for i in 0..m {
                tmp[i] = b[i] + k[0][i] * (0.5 * h);
            }
            deriv(s + 0.5 * h, &tmp, &mut k[1]);
            for i in 0..m {
                tmp[i] = b[i] + k[1][i] * (0.5 * h);
            }
            deriv(s + 0.5 * h, &tmp, &mut k[2]);
            for i in 0..m {
                tmp[i] = b[i] + k[2][i] * h;
            }
            deriv(s + h, &tmp, &mut k[3]);
            for i in 0..m {
                b[i] += (k[0][i] + (k[1][i] + k[2][i]) * 2.0 + k[3][i]) * (h / 6.0);
            }
            s = (step + 1) as f64 * h;
        }
        for ((c, bi), z) in state.coeffs.iter_mut().zip(&b).zip(zeros) {
            *c = bi * Complex64::from_polar(1.0, -z * s);
        }
        state.time = t0 + s;
    }
}

/// Evolves `state` to `t_to` under a single pulse; outside the pulse window
/// this reduces to `free_evolve`.
pub fn evolve_pulsed(
    basis: &EigenBasis,
    state: &StateVector,
    pulse: &KickPulse,
    spin: Spin,
    t_to: f64,
) -> Result<StateVector> {
    let mut out = state.clone();
    Propagator::new(basis, std::slice::from_ref(pulse), spin).advance(&mut out, t_to)?;
    Ok(out)
}

/// Impulsive kick operator `P = exp(-i alpha V)` with `V = kappa_sign * z`.
///
/// For the magnetic kick `V = -s z`, so `P = exp(+i alpha s Z)`. A surface
/// shake has zero net area in the comoving frame; its impulsive stand-in is the
/// upward-pushing linear potential `V = +z`, i.e. `P = exp(-i alpha Z)`.
#[derive(Debug, Clone)]
pub struct KickOperator {
    pub matrix: DMatrix<Complex64>,
    pub area: f64,
    pub kind: KickKind,
    pub spin: Spin,
}

impl KickOperator {
    pub fn new(basis: &EigenBasis, area: f64, spin: Spin, kind: KickKind) -> Result<Self> {
        if !area.is_finite() {
            return Err(Error::InvalidArgument(format!("kick area {area} is not finite")));
        }
        let eig = basis.position_eigen()?;
        let sign = match kind {
            KickKind::MagneticGradient => spin.sign(),
            KickKind::SurfaceShake => -1.0,
        };
        let q = &eig.eigenvectors;
        let m = basis.len();
        let phases: Vec<Complex64> =
            eig.eigenvalues.iter().map(|l| Complex64::from_polar(1.0, area * sign * l)).collect();
        let mut matrix = DMatrix::from_element(m, m, Complex64::new(0.0, 0.0));
        for j in 0..m {
            for k in j..m {
                let mut acc = Complex64::new(0.0, 0.0);
                for l in 0..m {
                    acc += phases[l] * (q[(j, l)] * q[(k, l)]);
                }
                matrix[(j, k)] = acc;
                matrix[(k, j)] = acc;
            }
        }
        Ok(Self { matrix, area, kind, spin })
    }

    pub fn apply(&self, state: &StateVector) -> StateVector {
        let m = state.len();
        let mut out = vec![Complex64::new(0.0, 0.0); m];
        for (i, o) in out.iter_mut().enumerate() {
            for j in 0..m {
                *o += self.matrix[(i, j)] * state.coeffs[j];
            }
        }
        StateVector::new(out, state.time)
    }

    /// `P_{nm}` for 1-based quantum numbers.
    pub fn element(&self, n: usize, m: usize) -> Complex64 {
        self.matrix[(n - 1, m - 1)]
    }

    /// Largest entry of `|P^dagger P - I|`.
    pub fn unitarity_error(&self) -> f64 {
        let prod = self.matrix.adjoint() * &self.matrix;
        let m = prod.nrows();
        let mut worst: f64 = 0.0;
        for i in 0..m {
            for j in 0..m {
                let want = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((prod[(i, j)] - want).norm());
            }
        }
        worst
    }
}

/// Applies the impulsive kick `exp(-i alpha V)` to `state`.
pub fn impulsive_kick(
    basis: &EigenBasis,
    state: &StateVector,
    area: f64,
    spin: Spin,
    kind: KickKind,
) -> Result<StateVector> {
    Ok(KickOperator::new(basis, area, spin, kind)?.apply(state))
}

/// `<z>` in the laboratory frame: the comoving coordinate plus the surface height.
pub fn lab_height(basis: &EigenBasis, state: &StateVector, pulses: &[KickPulse]) -> Result<f64> {
    Ok(expectation_z(basis, state)? + surface_height(pulses, state.time))
}

/// `<z>(t)` traces for both spin branches and their average.
#[derive(Debug, Clone, PartialEq)]
pub struct EchoTrace {
    pub times: Vec<f64>,
    pub spin_up: Vec<f64>,
    pub spin_down: Vec<f64>,
    pub average: Vec<f64>,
    /// Worst `|1 - norm|` over both branches at each sample.
    pub norm_error: Vec<f64>,
}

/// Samples `<z>` on `times` (ascending, starting at or after `initial.time`).
pub fn height_series(
    propagator: &Propagator<'_>,
    initial: &StateVector,
    times: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut state = initial.clone();
    let norm0 = initial.norm_sqr();
    let mut heights = Vec::with_capacity(times.len());
    let mut norms = Vec::with_capacity(times.len());
    for &t in times {
        propagator.advance(&mut state, t)?;
        heights.push(lab_height(propagator.basis, &state, propagator.pulses())?);
        norms.push((state.norm_sqr() - norm0).abs());
    }
    Ok((heights, norms))
}

/// Runs both spin branches and averages them with equal weights. Without
/// magnetic pulses the branches coincide and only one is propagated.
pub fn echo_trace(
    basis: &EigenBasis,
    initial: &StateVector,
    pulses: &[KickPulse],
    times: &[f64],
) -> Result<EchoTrace> {
    let spin_dependent = pulses.iter().any(|p| p.kind == KickKind::MagneticGradient);
    let run = |spin| height_series(&Propagator::new(basis, pulses, spin), initial, times);
    let (up, down) = if spin_dependent {
        let (up, down) = crate::parallel::join(|| run(Spin::Up), || run(Spin::Down));
        (up?, down?)
    } else {
        let up = run(Spin::Up)?;
        (up.clone(), up)
    };
    let average = up.0.iter().zip(&down.0).map(|(a, b)| 0.5 * (a + b)).collect();
    let norm_error = up.1.iter().zip(&down.1).map(|(a, b)| a.max(*b)).collect();
    Ok(EchoTrace { times: times.to_vec(), spin_up: up.0, spin_down: down.0, average, norm_error })
}
