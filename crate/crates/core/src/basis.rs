//! Truncated eigenbasis of the quantum bouncer.
//!
//! In gravitational units the stationary problem reads `-psi'' + z psi = E psi`
//! on `z >= 0` with `psi(0) = 0`. The factor `1/2` of the kinetic term is
//! absorbed by the choice `z_g = (hbar^2 / 2 m^2 g)^{1/3}`: dividing the
//! dimensional equation by `E_g = m g z_g` gives `hbar^2 / (2 m z_g^2 E_g) = 1`.
//! The solutions are `psi_n(z) = Ai(z - z_n) / |Ai'(-z_n)|` with energies
//! `E_n = z_n`, where `-z_n` is the n-th zero of `Ai`.

use std::sync::OnceLock;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::airy::{airy_ai, airy_ai_prime, airy_zeros, MAX_ZEROS};
use crate::error::{Error, Result};
use crate::quadrature::{integrate_vector, QuadratureOptions};
use crate::state::StateVector;

/// Default number of retained states.
pub const DEFAULT_STATES: usize = 50;

/// Distance past the outermost turning point where integrals are cut off.
pub const TAIL_MARGIN: f64 = 15.0;

/// Captured norm below which a projection is flagged.
pub const LEAK_WARNING: f64 = 0.999;
/// Captured norm below which a projection is rejected.
pub const LEAK_ERROR: f64 = 0.95;

#[derive(Debug)]
pub struct EigenBasis {
    zeros: Vec<f64>,
    norms: Vec<f64>,
    position: DMatrix<f64>,
    position_eigen: OnceLock<std::result::Result<SymmetricEigen<f64, nalgebra::Dyn>, String>>,
}

impl Clone for EigenBasis {
    fn clone(&self) -> Self {
        Self {
            zeros: self.zeros.clone(),
            norms: self.norms.clone(),
            position: self.position.clone(),
            position_eigen: OnceLock::new(),
        }
    }
}

/// Packed index of `(i, j)` with `i <= j` in an upper triangle of size `m`.
fn packed(i: usize, j: usize, m: usize) -> usize {
    i * m - i * (i + 1) / 2 + j
}

fn unpack(k: usize, m: usize) -> (usize, usize) {
    let mut i = 0;
    while packed(i, m - 1, m) < k {
        i += 1;
    }
    (i, k + i * (i + 1) / 2 - i * m)
}

impl EigenBasis {
    /// Builds the first `states` eigenstates and their position matrix.
    pub fn new(states: usize) -> Result<Self> {
        if states == 0 || states > MAX_ZEROS {
            return Err(Error::InvalidArgument(format!("basis size {states} outside 1..={MAX_ZEROS}")));
        }
        let zeros = airy_zeros(states)?;
        let norms: Vec<f64> = zeros.iter().map(|z| 1.0 / airy_ai_prime(-z).abs()).collect();
        let mut basis = Self {
            zeros,
            norms,
            position: DMatrix::zeros(states, states),
            position_eigen: OnceLock::new(),
        };
        basis.position = basis.position_matrix()?;
        Ok(basis)
    }

    pub fn len(&self) -> usize {
        self.zeros.len()
    }

    pub fn is_empty(&self) -> bool {
        self.zeros.is_empty()
    }

    /// Airy-zero magnitudes, i.e. the dimensionless energies.
    pub fn zeros(&self) -> &[f64] {
        &self.zeros
    }

    pub fn norms(&self) -> &[f64] {
        &self.norms
    }

    /// `<i|z|j>` as a dense symmetric matrix.
    pub fn position(&self) -> &DMatrix<f64> {
        &self.position
    }

    /// Transition energies `z_n - z_1` for `n = 2..=M`.
    pub fn transitions(&self) -> Vec<f64> {
        self.zeros[1..].iter().map(|z| z - self.zeros[0]).collect()
    }

    /// Upper end of the integration domain.
    pub fn cutoff(&self) -> f64 {
        self.zeros[self.zeros.len() - 1] + TAIL_MARGIN
    }

    /// `psi_n(z)` for the 1-based quantum number `n`.
    pub fn eval_eigenstate(&self, n: usize, z: f64) -> Result<f64> {
        if n == 0 || n > self.len() {
            return Err(Error::IndexOutOfRange { index: n, count: self.len() });
        }
        if z < 0.0 || !z.is_finite() {
            return Err(Error::InvalidArgument(format!("height {z} must be finite and non-negative")));
        }
        Ok(self.eigenstate_unchecked(n - 1, z))
    }

    fn eigenstate_unchecked(&self, idx: usize, z: f64) -> f64 {
        self.norms[idx] * airy_ai(z - self.zeros[idx])
    }

    fn fill_states(&self, z: f64, out: &mut [f64]) {
        for (k, v) in out.iter_mut().enumerate() {
            *v = self.eigenstate_unchecked(k, z);
        }
    }

    /// Integrates `weight(z) psi_i psi_j` for all `i <= j`.
    fn pair_integrals(&self, weight: impl Fn(f64) -> f64) -> Result<DMatrix<f64>> {
        let m = self.len();
        let dim = m * (m + 1) / 2;
        let mut psi = vec![0.0; m];
        let upper = self.cutoff();
        let opts = QuadratureOptions {
            abs_tol: 1e-10,
            initial_panels: (upper * 2.0).ceil() as usize,
            max_depth: 30,
        };
        let result = integrate_vector(
            |z, out| {
                self.fill_states(z, &mut psi);
                let w = weight(z);
                let mut k = 0;
                for i in 0..m {
                    let wi = w * psi[i];
                    for pj in &psi[i..] {
                        out[k] = wi * pj;
                        k += 1;
                    }
                }
            },
            dim,
            0.0,
            upper,
            opts,
        );
        if !result.converged {
            let (k, error) = result.worst_component();
            let (i, j) = unpack(k, m);
            return Err(Error::Quadrature { i: i + 1, j: j + 1, error });
        }
        let mut matrix = DMatrix::zeros(m, m);
        for i in 0..m {
            for j in i..m {
                let v = result.values[packed(i, j, m)];
                matrix[(i, j)] = v;
                matrix[(j, i)] = v;
            }
        }
        Ok(matrix)
    }

    /// `Z_ij = int_0^inf psi_i z psi_j dz` by adaptive quadrature.
    pub fn position_matrix(&self) -> Result<DMatrix<f64>> {
        self.pair_integrals(|z| z)
    }

    /// Overlap matrix of the eigenstates (identity up to quadrature error).
    pub fn gram_matrix(&self) -> Result<DMatrix<f64>> {
        self.pair_integrals(|_| 1.0)
    }

    /// Eigendecomposition of the position matrix, computed once.
    pub fn position_eigen(&self) -> Result<&SymmetricEigen<f64, nalgebra::Dyn>> {
        let cached = self.position_eigen.get_or_init(|| {
            let eig = self.position.clone().symmetric_eigen();
            if eig.eigenvalues.iter().all(|v| v.is_finite()) {
                Ok(eig)
            } else {
                Err(format!(
                    "non-finite eigenvalues; position matrix norm {:.3e}",
                    self.position.norm()
                ))
            }
        });
        cached.as_ref().map_err(|e| Error::Eigen(e.clone()))
    }

    /// Projects the displaced Gaussian
    /// `(2 / pi sigma^2)^{1/4} exp(-(z - mu)^2 / sigma^2)` onto the basis.
    pub fn project_gaussian(&self, mu: f64, sigma: f64) -> Result<Projection> {
        if !(mu > 0.0) || !(sigma > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "gaussian needs mu_z > 0 and sigma_z > 0 (got {mu}, {sigma})"
            )));
        }
        let amp = (2.0 / (std::f64::consts::PI * sigma * sigma)).powf(0.25);
        let gaussian = |z: f64| amp * (-((z - mu) / sigma).powi(2)).exp();
        self.project(gaussian)
    }

    /// Projects an arbitrary real wave function given on `z >= 0`.
    pub fn project(&self, wavefunction: impl Fn(f64) -> f64) -> Result<Projection> {
        let m = self.len();
        let upper = self.cutoff();
        let mut psi = vec![0.0; m];
        let opts = QuadratureOptions {
            abs_tol: 1e-11,
            initial_panels: (upper * 2.0).ceil() as usize,
            max_depth: 30,
        };
        let result = integrate_vector(
            |z, out| {
                self.fill_states(z, &mut psi);
                let w = wavefunction(z);
                for (o, p) in out.iter_mut().zip(&psi) {
                    *o = w * p;
                }
            },
            m,
            0.0,
            upper,
            opts,
        );
        if !result.converged {
            let (k, error) = result.worst_component();
            return Err(Error::Quadrature { i: k + 1, j: 0, error });
        }
        let captured: f64 = result.values.iter().map(|c| c * c).sum();
        if captured < LEAK_ERROR {
            return Err(Error::BasisLeak { captured });
        }
        let warning = (captured < LEAK_WARNING).then(|| {
            format!("basis too small or state leaks below floor: captured norm {captured:.6}")
        });
        let mut state = StateVector::from_real(&result.values);
        state.normalize();
        Ok(Projection { state, captured_norm: captured, warning })
    }
}

/// Result of projecting a wave function onto the basis.
#[derive(Debug, Clone)]
pub struct Projection {
    /// Renormalized coefficients.
    pub state: StateVector,
    /// `sum |c_n|^2` before renormalization.
    pub captured_norm: f64,
    pub warning: Option<String>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate;
    use approx::assert_relative_eq;

    fn basis(m: usize) -> EigenBasis {
        EigenBasis::new(m).unwrap()
    }

    #[test]
    fn packing_round_trips() {
        let m = 7;
        let mut k = 0;
        for i in 0..m {
            for j in i..m {
                assert_eq!(packed(i, j, m), k);
                assert_eq!(unpack(k, m), (i, j));
                k += 1;
            }
        }
    }

    #[test]
    fn boundary_and_normalization() {
        let b = basis(12);
        for n in 1..=12 {
            assert!(b.eval_eigenstate(n, 0.0).unwrap().abs() < 1e-9);
            let (norm, _, ok) = integrate(
                |z| b.eval_eigenstate(n, z).unwrap().powi(2),
                0.0,
                b.cutoff(),
                QuadratureOptions { initial_panels: 40, ..Default::default() },
            );
            assert!(ok);
            assert!((norm - 1.0).abs() < 1e-8, "state {n}: {norm}");
        }
    }

    #[test]
    fn ground_state_peaks_at_airy_maximum() {
        let b = basis(1);
        let f = |z: f64| -b.eval_eigenstate(1, z).unwrap();
        // golden-section search on [0, z1]
        let (mut lo, mut hi) = (0.0, b.zeros()[0]);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..200 {
            let x1 = hi - g * (hi - lo);
            let x2 = lo + g * (hi - lo);
            if f(x1) < f(x2) {
                hi = x2;
            } else {
                lo = x1;
            }
        }
        let argmax = 0.5 * (lo + hi);
        assert!((argmax - (b.zeros()[0] - 1.018_792_971_647_471)).abs() < 1e-6);
    }

    #[test]
    fn argument_errors() {
        let b = basis(3);
        assert!(matches!(b.eval_eigenstate(0, 1.0), Err(Error::IndexOutOfRange { .. })));
        assert!(matches!(b.eval_eigenstate(4, 1.0), Err(Error::IndexOutOfRange { .. })));
        assert!(b.eval_eigenstate(1, -0.1).is_err());
        assert!(EigenBasis::new(0).is_err());
        assert!(b.project_gaussian(-1.0, 1.0).is_err());
        assert!(b.project_gaussian(1.0, 0.0).is_err());
    }

    #[test]
    fn gram_matrix_is_identity() {
        let b = basis(50);
        let g = b.gram_matrix().unwrap();
        for i in 0..50 {
            for j in 0..50 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((g[(i, j)] - want).abs() < 1e-7, "gram ({i},{j}) = {}", g[(i, j)]);
            }
        }
    }

    #[test]
    fn position_matrix_matches_closed_forms() {
        let b = basis(20);
        let z = b.position();
        let zeros = b.zeros();
        for i in 0..20 {
            assert_relative_eq!(z[(i, i)], 2.0 * zeros[i] / 3.0, max_relative = 1e-6);
            for j in 0..20 {
                assert_eq!(z[(i, j)], z[(j, i)]);
                if i != j {
                    let closed = 2.0 / (zeros[i] - zeros[j]).powi(2);
                    assert_relative_eq!(z[(i, j)].abs(), closed, max_relative = 1e-6);
                }
            }
        }
        assert!((z[(0, 0)] - 1.558_738).abs() < 1e-6);
        assert!((z[(0, 1)].abs() - 0.6532).abs() < 1e-4);
    }

    #[test]
    fn hamiltonian_residual() {
        let b = basis(30);
        let h = 1e-3;
        for n in [1usize, 2, 5, 13, 30] {
            let zn = b.zeros()[n - 1];
            let psi = |z: f64| b.norms()[n - 1] * airy_ai(z - zn);
            let mut worst: f64 = 0.0;
            let mut z = 0.0;
            while z <= zn + 5.0 {
                // five-point second difference, O(h^4)
                let d2 = (-psi(z + 2.0 * h) + 16.0 * psi(z + h) - 30.0 * psi(z) + 16.0 * psi(z - h)
                    - psi(z - 2.0 * h))
                    / (12.0 * h * h);
                worst = worst.max((-d2 + z * psi(z) - zn * psi(z)).abs());
                z += 0.01;
            }
            assert!(worst < 1e-6, "state {n}: residual {worst}");
        }
    }

    #[test]
    fn gaussian_projection_captures_norm() {
        let b = basis(50);
        let p = b.project_gaussian(20.0, 8.0).unwrap();
        assert!(p.captured_norm >= 0.99);
        assert!((p.state.norm_sqr() - 1.0).abs() < 1e-12);
        // convergence in M: a larger basis captures at least as much
        let bigger = basis(80).project_gaussian(20.0, 8.0).unwrap();
        assert!(bigger.captured_norm >= p.captured_norm - 1e-12);
        assert!(bigger.captured_norm > 1.0 - 1e-6);
    }

    #[test]
    fn narrow_gaussian_at_ground_state_mean_favours_ground_state() {
        let b = basis(30);
        let mu = 2.0 * b.zeros()[0] / 3.0;
        let p = b.project_gaussian(mu, 0.9).unwrap();
        let c = &p.state.coeffs;
        for n in 1..30 {
            assert!(c[0].norm() > c[n].norm(), "coefficient {n} dominates");
        }
    }

    #[test]
    fn leaking_state_is_rejected() {
        let b = basis(20);
        // half of this state sits below the floor
        assert!(matches!(b.project_gaussian(0.01, 3.0), Err(Error::BasisLeak { .. })));
    }
}
