//! Local special-function kernels: log-gamma, the regularized incomplete
//! gamma function, and the survival functions built on them.
//!
//! Everything here serves the nonparametric tests: the chi-square
//! survival function consumes the Friedman statistic and the standard
//! normal survival function backs the large-sample Wilcoxon
//! approximation. Accuracy is ~1e-10 over the degrees of freedom used
//! here (df ≤ 50), verified against closed forms for even df.

/// Lanczos approximation (g = 7, 9 terms) of ln Γ(z) for z > 0.
pub fn ln_gamma(z: f64) -> f64 {
    debug_assert!(z > 0.0, "ln_gamma domain is z > 0, got {z}");
    const G: f64 = 7.0;
    const COEFFICIENTS: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_59,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_571_6e-6,
        1.505_632_735_149_311_6e-7,
    ];
    let z = z - 1.0;
    let mut sum = COEFFICIENTS[0];
    for (i, &c) in COEFFICIENTS.iter().enumerate().skip(1) {
        sum += c / (z + i as f64);
    }
    let t = z + G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (z + 0.5) * t.ln() - t + sum.ln()
}

/// Regularized lower incomplete gamma P(a, x), by power series for
/// `x < a + 1` and via the continued fraction for Q otherwise.
pub fn regularized_gamma_p(a: f64, x: f64) -> f64 {
    debug_assert!(a > 0.0 && x >= 0.0);
    if x == 0.0 {
        return 0.0;
    }
    if x < a + 1.0 {
        gamma_p_series(a, x)
    } else {
        1.0 - gamma_q_continued_fraction(a, x)
    }
}

/// Regularized upper incomplete gamma Q(a, x) = 1 − P(a, x).
pub fn regularized_gamma_q(a: f64, x: f64) -> f64 {
    debug_assert!(a > 0.0 && x >= 0.0);
    if x == 0.0 {
        return 1.0;
    }
    if x < a + 1.0 {
        1.0 - gamma_p_series(a, x)
    } else {
        gamma_q_continued_fraction(a, x)
    }
}

const MAX_ITERATIONS: usize = 500;
const EPSILON: f64 = 1e-15;

fn gamma_p_series(a: f64, x: f64) -> f64 {
    // P(a,x) = x^a e^{-x} / Γ(a) · Σ_{n≥0} x^n / (a (a+1) ⋯ (a+n)).
    let mut term = 1.0 / a;
    let mut sum = term;
    let mut denom = a;
    for _ in 0..MAX_ITERATIONS {
        denom += 1.0;
        term *= x / denom;
        sum += term;
        if term.abs() < sum.abs() * EPSILON {
            break;
        }
    }
    let log_prefactor = a * x.ln() - x - ln_gamma(a);
    (sum * log_prefactor.exp()).clamp(0.0, 1.0)
}

fn gamma_q_continued_fraction(a: f64, x: f64) -> f64 {
    // Q(a,x) = x^a e^{-x} / Γ(a) · 1/(x+1−a− 1·(1−a)/(x+3−a− …)),
    // evaluated with the modified Lentz method.
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..=MAX_ITERATIONS {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPSILON {
            break;
        }
    }
    let log_prefactor = a * x.ln() - x - ln_gamma(a);
    (h * log_prefactor.exp()).clamp(0.0, 1.0)
}

/// Chi-square survival function: P(X ≥ x) for X with `df` degrees of
/// freedom. Nonpositive statistics return 1.
pub fn chi_square_sf(x: f64, df: f64) -> f64 {
    debug_assert!(df > 0.0);
    if x <= 0.0 {
        return 1.0;
    }
    regularized_gamma_q(df / 2.0, x / 2.0)
}

/// Standard normal survival function: P(Z ≥ z).
pub fn standard_normal_sf(z: f64) -> f64 {
    // For z ≥ 0, P(Z ≥ z) = ½ Q(½, z²/2); negative z uses symmetry.
    let half_q = 0.5 * regularized_gamma_q(0.5, z * z / 2.0);
    if z >= 0.0 {
        half_q
    } else {
        1.0 - half_q
    }
}
