//! Quadrature, incomplete beta, normal distribution helpers and bisection.

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
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

const MAX_DEPTH: u32 = 48;

fn kronrod15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, (&x, &w)) in XGK.iter().zip(&WGK).take(7).enumerate() {
        let pair = f(center - half * x) + f(center + half * x);
        kronrod += w * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * half, (kronrod - gauss).abs() * half)
}

fn adapt(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let (value, err) = kronrod15(f, a, b);
    if err <= tol || depth >= MAX_DEPTH || b - a <= f64::EPSILON * (a.abs() + b.abs()) {
        return value;
    }
    let mid = 0.5 * (a + b);
    adapt(f, a, mid, 0.5 * tol, depth + 1) + adapt(f, mid, b, 0.5 * tol, depth + 1)
}

/// Adaptive 7/15-point Gauss–Kronrod integral of `f` over `[a, b]` to absolute tolerance `tol`.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    adapt(&f, a, b, tol, 0)
}

const BETA_TOL: f64 = 1e-13;

/// `int_0^x t^(a-1) (1-t)^(b-1) dt` for `x <= 1/2`.
fn beta_head(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if a >= 1.0 {
        integrate(
            |t| t.powf(a - 1.0) * (1.0 - t).powf(b - 1.0),
            0.0,
            x,
            BETA_TOL,
        )
    } else {
        // u = t^a removes the singularity at 0
        integrate(
            |u| (1.0 - u.powf(1.0 / a)).powf(b - 1.0) / a,
            0.0,
            x.powf(a),
            BETA_TOL,
        )
    }
}

/// Complete beta function by quadrature.
pub fn beta_fn(a: f64, b: f64) -> f64 {
    beta_head(0.5, a, b) + beta_head(0.5, b, a)
}

/// Regularized incomplete beta `I_x(a, b)` by adaptive quadrature.
pub fn incomplete_beta_quadrature(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let total = beta_fn(a, b);
    let value = if x <= 0.5 {
        beta_head(x, a, b) / total
    } else {
        1.0 - beta_head(1.0 - x, b, a) / total
    };
    value.clamp(0.0, 1.0)
}

const POLY_MAX_ORDER: u32 = 64;

fn as_small_integer(v: f64) -> Option<u32> {
    (v >= 1.0 && v <= POLY_MAX_ORDER as f64 && v.fract() == 0.0).then_some(v as u32)
}

/// Closed form of `I_x(a, b)` for integer `a, b`: the upper binomial tail
/// `sum_{j=a}^{n} C(n, j) x^j (1-x)^(n-j)` with `n = a + b - 1`.
///
/// `None` when the parameters are not small positive integers.
pub fn incomplete_beta_polynomial(x: f64, a: f64, b: f64) -> Option<f64> {
    let (a, b) = (as_small_integer(a)?, as_small_integer(b)?);
    let x = x.clamp(0.0, 1.0);
    let n = a + b - 1;
    let mut binom = 1.0f64;
    let mut sum = 0.0;
    for j in 0..=n {
        if j > 0 {
            binom *= (n - j + 1) as f64 / j as f64;
        }
        if j >= a {
            sum += binom * x.powi(j as i32) * (1.0 - x).powi((n - j) as i32);
        }
    }
    Some(sum.clamp(0.0, 1.0))
}

/// Regularized incomplete beta, using the closed form when it applies.
pub fn incomplete_beta(x: f64, a: f64, b: f64) -> f64 {
    incomplete_beta_polynomial(x, a, b).unwrap_or_else(|| incomplete_beta_quadrature(x, a, b))
}

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

pub fn normal_pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Point in `[lo, hi]` where the nondecreasing `f` crosses `target`.
///
/// Runs until the bracket cannot shrink further in floating point.
pub fn bisect(f: impl Fn(f64) -> f64, target: f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (flo, fhi) = (f(lo), f(hi));
    if (target - flo).abs() <= (fhi - target).abs() {
        lo
    } else {
        hi
    }
}
