//! Locally adaptive Gauss-Kronrod (7/15) quadrature for vector-valued
//! integrands.
//!
//! A whole family of integrals (for example every entry of a matrix of
//! overlap integrals) is integrated over a shared set of nodes, so each node
//! evaluates the expensive part of the integrand once. A panel is accepted
//! when the largest component of `|K15 - G7|` is below the tolerance share
//! proportional to the panel width; otherwise it is bisected.

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_17,
    0.207_784_955_007_898_47,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

/// Gauss weights for the nodes `XGK[1], XGK[3], XGK[5], XGK[7]`.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadratureOptions {
    /// Absolute tolerance on every component of the result.
    pub abs_tol: f64,
    /// Panels the interval is split into before adaptation starts.
    pub initial_panels: usize,
    /// Maximum bisection depth below an initial panel.
    pub max_depth: usize,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self { abs_tol: 1e-10, initial_panels: 16, max_depth: 30 }
    }
}

#[derive(Debug, Clone)]
pub struct VectorIntegral {
    pub values: Vec<f64>,
    /// Accumulated `|K15 - G7|` per component.
    pub errors: Vec<f64>,
    pub converged: bool,
    pub panels: usize,
}

impl VectorIntegral {
    /// Component with the largest error estimate.
    pub fn worst_component(&self) -> (usize, f64) {
        self.errors
            .iter()
            .copied()
            .enumerate()
            .fold((0, 0.0), |best, (k, e)| if e > best.1 { (k, e) } else { best })
    }
}

/// Integrates `f` over `[a, b]`; `f(x, out)` writes `dim` components into `out`.
pub fn integrate_vector<F>(mut f: F, dim: usize, a: f64, b: f64, opts: QuadratureOptions) -> VectorIntegral
where
    F: FnMut(f64, &mut [f64]),
{
    let mut result = VectorIntegral {
        values: vec![0.0; dim],
        errors: vec![0.0; dim],
        converged: true,
        panels: 0,
    };
    if b <= a || dim == 0 {
        return result;
    }
    let length = b - a;
    let mut scratch = Scratch::new(dim);
    let mut stack: Vec<(f64, f64, usize)> = Vec::new();
    let panels = opts.initial_panels.max(1);
    for p in (0..panels).rev() {
        let lo = a + length * p as f64 / panels as f64;
        let hi = if p + 1 == panels { b } else { a + length * (p + 1) as f64 / panels as f64 };
        stack.push((lo, hi, 0));
    }
    while let Some((lo, hi, depth)) = stack.pop() {
        let worst = scratch.kronrod(&mut f, lo, hi);
        let allowed = opts.abs_tol * (hi - lo) / length;
        if worst > allowed && depth < opts.max_depth {
            let mid = 0.5 * (lo + hi);
            stack.push((mid, hi, depth + 1));
            stack.push((lo, mid, depth + 1));
            continue;
        }
        if worst > allowed {
            result.converged = false;
        }
        result.panels += 1;
        for k in 0..dim {
            result.values[k] += scratch.kronrod_sum[k];
            result.errors[k] += (scratch.kronrod_sum[k] - scratch.gauss_sum[k]).abs();
        }
    }
    result
}

/// Scalar convenience wrapper.
pub fn integrate<F>(mut f: F, a: f64, b: f64, opts: QuadratureOptions) -> (f64, f64, bool)
where
    F: FnMut(f64) -> f64,
{
    let r = integrate_vector(|x, out| out[0] = f(x), 1, a, b, opts);
    (r.values[0], r.errors[0], r.converged)
}

struct Scratch {
    eval: Vec<f64>,
    kronrod_sum: Vec<f64>,
    gauss_sum: Vec<f64>,
}

impl Scratch {
    fn new(dim: usize) -> Self {
        Self { eval: vec![0.0; dim], kronrod_sum: vec![0.0; dim], gauss_sum: vec![0.0; dim] }
    }

    /// Fills the K15 and G7 sums for `[lo, hi]`, returning the worst component difference.
    fn kronrod<F: FnMut(f64, &mut [f64])>(&mut self, f: &mut F, lo: f64, hi: f64) -> f64 {
        let center = 0.5 * (lo + hi);
        let half = 0.5 * (hi - lo);
        self.kronrod_sum.iter_mut().for_each(|v| *v = 0.0);
        self.gauss_sum.iter_mut().for_each(|v| *v = 0.0);
        for (j, &x) in XGK.iter().enumerate() {
            let gauss_weight = if j % 2 == 1 { Some(WG[j / 2]) } else { None };
            let nodes: &[f64] = if x == 0.0 { &[0.0] } else { &[-1.0, 1.0] };
            for sign in nodes {
                let node = if x == 0.0 { center } else { center + sign * half * x };
                f(node, &mut self.eval);
                for (k, &v) in self.eval.iter().enumerate() {
                    self.kronrod_sum[k] += WGK[j] * v;
                    if let Some(w) = gauss_weight {
                        self.gauss_sum[k] += w * v;
                    }
                }
            }
        }
        let mut worst: f64 = 0.0;
        for k in 0..self.kronrod_sum.len() {
            self.kronrod_sum[k] *= half;
            self.gauss_sum[k] *= half;
            worst = worst.max((self.kronrod_sum[k] - self.gauss_sum[k]).abs());
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        // K15 integrates degree 22 exactly
        let (v, _, ok) = integrate(|x| x.powi(10) - 3.0 * x.powi(3), -1.0, 2.0, QuadratureOptions::default());
        let exact = (2f64.powi(11) + 1.0) / 11.0 - 3.0 * (16.0 - 1.0) / 4.0;
        assert!(ok);
        assert!((v - exact).abs() < 1e-12);
    }

    #[test]
    fn oscillatory_vector() {
        let r = integrate_vector(
            |x, out| {
                out[0] = (7.0 * x).sin().powi(2);
                out[1] = (-x * x).exp();
            },
            2,
            0.0,
            10.0,
            QuadratureOptions::default(),
        );
        assert!(r.converged);
        let exact0 = 5.0 - (140.0f64).sin() / 28.0;
        assert!((r.values[0] - exact0).abs() < 1e-10);
        assert!((r.values[1] - 0.886_226_925_452_758).abs() < 1e-10);
    }

    #[test]
    fn reports_non_convergence() {
        let opts = QuadratureOptions { abs_tol: 1e-14, initial_panels: 1, max_depth: 2 };
        let r = integrate_vector(|x, out| out[0] = x.abs().sqrt(), 1, -1.0, 1.0, opts);
        assert!(!r.converged);
        assert_eq!(r.worst_component().0, 0);
    }
}
