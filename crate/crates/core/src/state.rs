use num_complex::Complex64;

/// Coefficients of a wave function in the eigenbasis, tagged with the
/// dimensionless time they refer to.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    pub coeffs: Vec<Complex64>,
    pub time: f64,
}

impl StateVector {
    pub fn new(coeffs: Vec<Complex64>, time: f64) -> Self {
        Self { coeffs, time }
    }

    /// The eigenstate with 1-based quantum number `n` in a basis of `size` states.
    pub fn eigenstate(size: usize, n: usize) -> Self {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); size];
        coeffs[n - 1] = Complex64::new(1.0, 0.0);
        Self { coeffs, time: 0.0 }
    }

    pub fn ground(size: usize) -> Self {
        Self::eigenstate(size, 1)
    }

    pub fn from_real(values: &[f64]) -> Self {
        Self { coeffs: values.iter().map(|&v| Complex64::new(v, 0.0)).collect(), time: 0.0 }
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn normalize(&mut self) {
        let n = self.norm_sqr().sqrt();
        if n > 0.0 {
            self.coeffs.iter_mut().for_each(|c| *c /= n);
        }
    }

    /// Population of the 1-based state `n`.
    pub fn population(&self, n: usize) -> f64 {
        self.coeffs[n - 1].norm_sqr()
    }

    /// `||self - other||_2`.
    pub fn distance(&self, other: &StateVector) -> f64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}
