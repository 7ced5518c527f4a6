//! Scaled modified Bessel evaluations used by the weighted samplers.
//!
//! The contour weights involve `n! I_0(r^2) / r^(2n)` which overflows f64
//! for occupations around one hundred, so everything is assembled in log
//! space: `ln n!` comes from the log-gamma function and `ln I_0` switches
//! from the power series to the large-argument asymptotic expansion.

use statrs::function::gamma::ln_gamma;

/// `ln(n!)` via log-gamma.
pub fn ln_factorial(n: u64) -> f64 {
    ln_gamma(n as f64 + 1.0)
}

/// `ln I_0(x)` for `x >= 0`, accurate to ~1e-14 across the switch point.
pub fn ln_bessel_i0(x: f64) -> f64 {
    assert!(x >= 0.0, "ln_bessel_i0 needs x >= 0, got {x}");
    if x < 25.0 {
        bessel_i0_series(x).ln()
    } else {
        // I_0(x) = e^x / sqrt(2 pi x) * (1 + 1/(8x) + 9/(128 x^2) + ...)
        let inv = 1.0 / x;
        let series = 1.0
            + inv * (0.125
                + inv * (0.0703125
                    + inv * (0.0732421875
                        + inv * (0.112152099609375
                            + inv * (0.2271080017089844 + inv * 0.5725014209747314)))));
        x - 0.5 * (2.0 * std::f64::consts::PI * x).ln() + series.ln()
    }
}

/// `I_1(x)/I_0(x)`, the mean resultant length of a von Mises distribution.
pub fn bessel_i1_over_i0(x: f64) -> f64 {
    assert!(x >= 0.0);
    if x == 0.0 {
        return 0.0;
    }
    if x < 25.0 {
        bessel_i1_series(x) / bessel_i0_series(x)
    } else {
        // Ratio of the asymptotic expansions; leading terms suffice here.
        let inv = 1.0 / x;
        1.0 - 0.5 * inv - 0.125 * inv * inv - 0.125 * inv * inv * inv
    }
}

fn bessel_i0_series(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        term *= q / ((k * k) as f64);
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

fn bessel_i1_series(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 0.5 * x;
    let mut sum = term;
    for k in 1..200 {
        term *= q / ((k * (k + 1)) as f64);
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}
