//! Airy function of the first kind and its zeros.
//!
//! `Ai(x)` and `Ai'(x)` are evaluated by two methods with a fixed crossover
//! at `|x| = 8`:
//!
//! * `|x| > 8`: the classical asymptotic expansions (exponentially decaying
//!   for `x > 0`, oscillatory for `x < 0`), truncated at the smallest term.
//!   At the crossover `zeta = 2/3 |x|^{3/2} ~ 15.1`, so the truncation error is
//!   about `exp(-2 zeta) ~ 1e-13` relative to the amplitude.
//! * `|x| <= 8`: a single Taylor step of the ODE `y'' = x y` from the nearest
//!   node of a precomputed anchor table with spacing 0.5. The anchors on the
//!   negative axis are obtained by stepping out from the closed-form values at
//!   the origin; on the positive axis they are obtained by stepping *inwards*
//!   from the asymptotic values at `x = 8`, which is the stable direction for
//!   the recessive solution.
//!
//! The plain Maclaurin series is not used away from the origin because of its
//! cancellation error, which grows like `exp(zeta)` times the rounding unit.

use std::f64::consts::{FRAC_PI_4, PI};
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// `Ai(0) = 3^{-2/3} / Gamma(2/3)`.
pub const AI_ZERO: f64 = 0.355_028_053_887_817_24;
/// `Ai'(0) = -3^{-1/3} / Gamma(1/3)`.
pub const AI_PRIME_ZERO: f64 = -0.258_819_403_792_806_8;

/// Boundary between the anchored Taylor scheme and the asymptotic expansions.
pub const ASYMPTOTIC_CROSSOVER: f64 = 8.0;

const ANCHOR_SPACING: f64 = 0.5;
const ANCHOR_COUNT: usize = 33;

/// Largest number of zeros `airy_zeros` will return.
pub const MAX_ZEROS: usize = 200;

/// Airy function `Ai(x)`.
pub fn airy_ai(x: f64) -> f64 {
    airy_ai_and_prime(x).0
}

/// Derivative `Ai'(x)`.
pub fn airy_ai_prime(x: f64) -> f64 {
    airy_ai_and_prime(x).1
}

/// `(Ai(x), Ai'(x))` evaluated together.
pub fn airy_ai_and_prime(x: f64) -> (f64, f64) {
    if x.is_nan() {
        return (f64::NAN, f64::NAN);
    }
    if x > ASYMPTOTIC_CROSSOVER {
        asymptotic_positive(x)
    } else if x < -ASYMPTOTIC_CROSSOVER {
        asymptotic_negative(-x)
    } else {
        let anchors = anchors();
        let k = (((x + ASYMPTOTIC_CROSSOVER) / ANCHOR_SPACING).round() as usize)
            .min(ANCHOR_COUNT - 1);
        let x0 = anchor_x(k);
        let (y, dy) = anchors[k];
        taylor_step(x0, y, dy, x - x0)
    }
}

fn anchor_x(k: usize) -> f64 {
    -ASYMPTOTIC_CROSSOVER + ANCHOR_SPACING * k as f64
}

fn anchors() -> &'static [(f64, f64); ANCHOR_COUNT] {
    static TABLE: OnceLock<[(f64, f64); ANCHOR_COUNT]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut table = [(0.0, 0.0); ANCHOR_COUNT];
        let origin = ANCHOR_COUNT / 2;
        table[origin] = (AI_ZERO, AI_PRIME_ZERO);
        for k in (0..origin).rev() {
            let (y, dy) = table[k + 1];
            table[k] = taylor_step(anchor_x(k + 1), y, dy, -ANCHOR_SPACING);
        }
        table[ANCHOR_COUNT - 1] = asymptotic_positive(ASYMPTOTIC_CROSSOVER);
        for k in (origin + 1..ANCHOR_COUNT - 1).rev() {
            let (y, dy) = table[k + 1];
            table[k] = taylor_step(anchor_x(k + 1), y, dy, -ANCHOR_SPACING);
        }
        table
    })
}

/// Advances `(y, y')` of a solution of `y'' = x y` from `x0` to `x0 + h`
/// using the Taylor series about `x0`.
fn taylor_step(x0: f64, y: f64, dy: f64, h: f64) -> (f64, f64) {
    if h == 0.0 {
        return (y, dy);
    }
    // coefficients a[n-1], a[n], a[n+1] of the expansion in powers of h
    let mut prev = 0.0;
    let mut cur = y;
    let mut next = dy;
    let mut hn = 1.0;
    let mut value = 0.0;
    let mut deriv = 0.0;
    let scale = y.abs() + dy.abs();
    let mut small_run = 0;
    for n in 0..120 {
        let term = cur * hn;
        value += term;
        if n > 0 {
            deriv += n as f64 * cur * hn / h;
        }
        if term.abs() <= 1e-18 * scale && (n as f64 * term / h).abs() <= 1e-18 * scale {
            small_run += 1;
            if small_run >= 3 {
                break;
            }
        } else {
            small_run = 0;
        }
        let n2 = (n + 2) as f64 * (n + 1) as f64;
        let after = (x0 * cur + prev) / n2;
        prev = cur;
        cur = next;
        next = after;
        hn *= h;
    }
    (value, deriv)
}

/// Coefficient ratios of the asymptotic series, `u_k / u_{k-1}`.
fn u_ratio(k: usize) -> f64 {
    let k = k as f64;
    (6.0 * k - 5.0) * (6.0 * k - 3.0) * (6.0 * k - 1.0) / ((2.0 * k - 1.0) * 216.0 * k)
}

fn v_from_u(k: usize, u: f64) -> f64 {
    let k = k as f64;
    -(6.0 * k + 1.0) / (6.0 * k - 1.0) * u
}

/// Terms `u_k / zeta^k` and `v_k / zeta^k` up to the smallest one.
fn asymptotic_terms(zeta: f64) -> (Vec<f64>, Vec<f64>) {
    let mut us = vec![1.0];
    let mut vs = vec![1.0];
    let mut u = 1.0;
    let mut last = f64::INFINITY;
    for k in 1..80 {
        u *= u_ratio(k) / zeta;
        let v = v_from_u(k, u);
        let size = u.abs().max(v.abs());
        if size >= last || size < 1e-18 {
            break;
        }
        last = size;
        us.push(u);
        vs.push(v);
    }
    (us, vs)
}

fn asymptotic_positive(x: f64) -> (f64, f64) {
    let zeta = 2.0 / 3.0 * x * x.sqrt();
    let (us, vs) = asymptotic_terms(zeta);
    let alt = |terms: &[f64]| {
        terms
            .iter()
            .enumerate()
            .rev()
            .map(|(k, t)| if k % 2 == 0 { *t } else { -*t })
            .sum::<f64>()
    };
    let decay = (-zeta).exp();
    let quarter = x.powf(0.25);
    let pref = decay / (2.0 * PI.sqrt());
    (pref / quarter * alt(&us), -pref * quarter * alt(&vs))
}

/// Asymptotic `(Ai(-x), Ai'(-x))` for large positive `x`.
fn asymptotic_negative(x: f64) -> (f64, f64) {
    let zeta = 2.0 / 3.0 * x * x.sqrt();
    let (us, vs) = asymptotic_terms(zeta);
    let split = |terms: &[f64]| {
        let mut even = 0.0;
        let mut odd = 0.0;
        for (k, t) in terms.iter().enumerate().rev() {
            let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
            if k % 2 == 0 {
                even += sign * t;
            } else {
                odd += sign * t;
            }
        }
        (even, odd)
    };
    let (u_even, u_odd) = split(&us);
    let (v_even, v_odd) = split(&vs);
    let (s, c) = (zeta - FRAC_PI_4).sin_cos();
    let quarter = x.powf(0.25);
    let root_pi = PI.sqrt();
    let ai = (c * u_even + s * u_odd) / (root_pi * quarter);
    let dai = quarter * (s * v_even - c * v_odd) / root_pi;
    (ai, dai)
}

/// Initial estimate of the k-th zero magnitude from the large-k expansion.
fn zero_guess(k: usize) -> f64 {
    let t = 3.0 * PI / 8.0 * (4.0 * k as f64 - 1.0);
    let t2 = t.powi(-2);
    t.powf(2.0 / 3.0)
        * (1.0 + t2 * (5.0 / 48.0 + t2 * (-5.0 / 36.0 + t2 * (77125.0 / 82944.0 - t2 * 108056875.0 / 6967296.0))))
}

/// Magnitudes `z_1 < z_2 < ...` of the first `count` zeros of `Ai`,
/// so that `Ai(-z_i) = 0`.
pub fn airy_zeros(count: usize) -> Result<Vec<f64>> {
    if count == 0 || count > MAX_ZEROS {
        return Err(Error::InvalidArgument(format!(
            "zero count {count} outside 1..={MAX_ZEROS}"
        )));
    }
    Ok((1..=count).map(polish_zero).collect())
}

fn polish_zero(k: usize) -> f64 {
    let guess = zero_guess(k);
    let f = |z: f64| airy_ai(-z);
    // bracket inside a fraction of the local zero spacing ~ pi / sqrt(z)
    let half_gap = 0.3 * PI / guess.sqrt();
    let (mut lo, mut hi) = (guess - half_gap, guess + half_gap);
    let (mut f_lo, f_hi) = (f(lo), f(hi));
    debug_assert!(f_lo * f_hi < 0.0, "zero {k} not bracketed");
    let _ = f_hi;
    let mut z = guess;
    for _ in 0..100 {
        let (ai, dai) = airy_ai_and_prime(-z);
        if ai == 0.0 {
            return z;
        }
        // d/dz Ai(-z) = -Ai'(-z)
        let mut next = z + ai / dai;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        let f_next = f(next);
        if f_next * f_lo > 0.0 {
            lo = next;
            f_lo = f_next;
        } else {
            hi = next;
        }
        let step = (next - z).abs();
        z = next;
        if step <= 1e-15 * z || hi - lo <= 1e-15 * z {
            break;
        }
    }
    z
}

#[cfg(test)]
mod tests {
    use super::*;

    // reference values from arbitrary-precision evaluation (30 digits)
    const REFERENCE: &[(f64, f64, f64)] = &[
        (0.0, 0.355_028_053_887_817_24, -0.258_819_403_792_806_8),
        (1.0, 0.135_292_416_312_881_42, -0.159_147_441_296_793_21),
        (-1.0, 0.535_560_883_292_352_1, -0.010_160_567_116_645_209),
        (2.0, 0.034_924_130_423_274_38, -0.053_090_384_433_653_63),
        (-2.5, -0.112_325_067_692_966_09, 0.678_852_734_264_794_4),
        (-5.0, 0.350_761_009_024_114_3, 0.327_192_818_554_443_1),
        (5.0, 1.083_444_281_360_744_2e-4, -2.474_138_908_684_624_8e-4),
        (-7.9, 0.041_701_883_617_386_71, 0.940_042_998_026_280_2),
        (-8.1, -0.142_908_147_093_581_12, 0.856_218_586_328_625),
        (7.9, 6.239_640_097_283_934e-8, -1.772_995_832_943_033_5e-7),
        (8.1, 3.522_435_623_573_571_5e-8, -1.013_097_203_266_084_4e-7),
        (-10.0, 0.040_241_238_486_443_19, 0.996_265_044_132_790_1),
        (10.0, 1.104_753_255_289_868_6e-10, -3.520_633_676_738_923_6e-10),
        (-15.5, -0.166_447_954_090_419_77, 0.904_937_935_430_212_2),
        (-20.0, -0.176_406_127_077_984_7, 0.892_862_856_736_471_2),
        (20.0, 1.691_672_868_670_540_3e-27, -7.586_391_625_748_355e-27),
        (3.3, 3.787_288_426_826_754_6e-3, -7.142_487_785_884_740_1e-3),
        (-0.3, 0.430_903_095_285_580_86, -0.240_545_127_258_154_6),
        (-12.25, -0.267_644_698_827_142_3, 0.480_871_368_427_004_45),
    ];

    #[test]
    fn matches_reference_values() {
        for &(x, ai, dai) in REFERENCE {
            let (got, dgot) = airy_ai_and_prime(x);
            assert!((got - ai).abs() < 1e-12, "Ai({x}) = {got}, want {ai}");
            // the derivative grows like |x|^{1/4}; keep the bound relative to that
            let scale = 1.0 + x.abs().powf(0.25);
            assert!((dgot - dai).abs() < 1e-12 * scale, "Ai'({x}) = {dgot}, want {dai}");
        }
    }

    #[test]
    fn origin_closed_form() {
        // 3^{-2/3} / Gamma(2/3), Gamma(2/3) = 1.3541179394264004169
        let closed = 3f64.powf(-2.0 / 3.0) / 1.354_117_939_426_400_4;
        assert!((airy_ai(0.0) - closed).abs() < 1e-15);
        assert!((airy_ai(0.0) - 0.355028053887817).abs() < 1e-15);
    }

    #[test]
    fn positive_anchor_chain_reaches_origin() {
        // stepping inwards from the asymptotic value at x = 8 must land on the
        // closed-form origin values
        let table = anchors();
        let (y, dy) = table[ANCHOR_COUNT / 2 + 1];
        let (y0, dy0) = taylor_step(anchor_x(ANCHOR_COUNT / 2 + 1), y, dy, -ANCHOR_SPACING);
        assert!((y0 - AI_ZERO).abs() < 1e-14);
        assert!((dy0 - AI_PRIME_ZERO).abs() < 1e-14);
    }

    #[test]
    fn continuous_across_crossover() {
        for x in [ASYMPTOTIC_CROSSOVER, -ASYMPTOTIC_CROSSOVER] {
            let below = airy_ai_and_prime(x - 1e-9);
            let above = airy_ai_and_prime(x + 1e-9);
            let h = 2e-9;
            assert!((above.0 - below.0 - h * below.1).abs() < 1e-12);
            assert!((above.1 - below.1 - h * x * below.0).abs() < 1e-12);
        }
    }

    #[test]
    fn decays_monotonically_for_positive_x() {
        let mut last = airy_ai(0.0);
        let mut x = 0.05;
        while x < 60.0 {
            let v = airy_ai(x);
            assert!(v >= 0.0 && v <= last, "not decreasing at {x}");
            last = v;
            x += 0.05;
        }
        assert_eq!(airy_ai(1e4), 0.0);
        assert!(airy_ai(-1e6).is_finite());
    }

    #[test]
    fn satisfies_airy_equation() {
        let h = 1e-3;
        let mut x = -19.5;
        while x < 19.5 {
            let d2 = (-airy_ai(x + 2.0 * h) + 16.0 * airy_ai(x + h) - 30.0 * airy_ai(x)
                + 16.0 * airy_ai(x - h)
                - airy_ai(x - 2.0 * h))
                / (12.0 * h * h);
            assert!((d2 - x * airy_ai(x)).abs() < 1e-6, "residual at {x}");
            x += 0.37;
        }
    }

    fn bisect(mut lo: f64, mut hi: f64) -> f64 {
        let f = |x: f64| airy_ai(x);
        let f_lo = f(lo);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) * f_lo > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn first_zero_agrees_with_bisection() {
        let root = bisect(-2.5, -2.0);
        assert!((root + 2.338107410).abs() < 1e-9);
        let zeros = airy_zeros(1).unwrap();
        assert!((zeros[0] + root).abs() < 1e-12);
        assert!((zeros[0] - 2.338_107_410_459_767).abs() < 1e-10);
    }

    #[test]
    fn zeros_match_reference_and_bisection() {
        let zeros = airy_zeros(200).unwrap();
        for (k, want) in [
            (1, 2.338_107_410_459_767),
            (2, 4.087_949_444_130_971),
            (3, 5.520_559_828_095_551),
            (6, 9.022_650_853_340_98),
            (50, 38.021_008_677_255_25),
            (100, 60.455_557_274_116_7),
            (200, 96.047_337_603_081_25),
        ] {
            assert!((zeros[k - 1] - want).abs() < 1e-10, "zero {k}: {}", zeros[k - 1]);
        }
        for k in [4usize, 17, 33] {
            let z = zeros[k - 1];
            let root = -bisect(-z - 0.05, -z + 0.05);
            assert!((z - root).abs() < 1e-10);
        }
        assert!(zeros.windows(2).all(|w| w[1] > w[0]));
        let gaps: Vec<f64> = zeros.windows(2).map(|w| w[1] - w[0]).collect();
        assert!(gaps.windows(2).all(|g| g[1] < g[0]), "zero spacing must shrink");
    }

    #[test]
    fn quoted_transition_energies() {
        let z = airy_zeros(6).unwrap();
        // quoted values agree to within one unit of the third decimal
        let quoted = [1.750, 3.182, 4.449, 5.606, 6.684];
        for (zi, q) in z[1..].iter().zip(quoted) {
            assert!((zi - z[0] - q).abs() < 1e-3);
        }
        // correctly rounded, the last one is 6.685 (6.68454...)
        let diffs: Vec<String> = z[1..].iter().map(|zi| format!("{:.3}", zi - z[0])).collect();
        assert_eq!(diffs, ["1.750", "3.182", "4.449", "5.606", "6.685"]);
    }

    #[test]
    fn zero_count_bounds() {
        assert!(airy_zeros(0).is_err());
        assert!(airy_zeros(MAX_ZEROS + 1).is_err());
    }
}
