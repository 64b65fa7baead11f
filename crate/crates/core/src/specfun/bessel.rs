use num_complex::Complex64;
use std::f64::consts::{FRAC_PI_4, PI};

use crate::error::{domain, Result};

const MAX_TRAPEZOID_POINTS: usize = 1 << 22;

/// `exp(-|Re z|) · I0(z)` for complex `z`.
///
/// Evaluates `(1/π)∫₀^π exp(z cosθ - |Re z|) dθ` with the trapezoidal rule,
/// which converges geometrically for this periodic analytic integrand. The
/// number of nodes is doubled until successive estimates agree to machine
/// precision.
pub fn bessel_i0_complex_scaled(z: Complex64) -> Result<Complex64> {
    if !z.re.is_finite() || !z.im.is_finite() {
        return Err(domain("bessel_i0_complex", format!("non-finite argument {z}")));
    }
    if z.norm() == 0.0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let shift = z.re.abs();
    let f = |theta: f64| (z * theta.cos() - shift).exp();

    let mut n = 32usize;
    let h = PI / n as f64;
    let mut sum = 0.5 * (f(0.0) + f(PI));
    for i in 1..n {
        sum += f(i as f64 * h);
    }
    let mut estimate = sum / n as f64;
    loop {
        // Refine by adding the midpoints.
        let h = PI / n as f64;
        for i in 0..n {
            sum += f((i as f64 + 0.5) * h);
        }
        n *= 2;
        let refined = sum / n as f64;
        let diff = (refined - estimate).norm();
        estimate = refined;
        if diff <= 1e-15 * refined.norm() || diff <= 4.0 * f64::EPSILON {
            return Ok(refined);
        }
        if n >= MAX_TRAPEZOID_POINTS {
            return Err(crate::error::Error::Accuracy {
                what: "bessel_i0_complex trapezoid",
                steps: n,
                partial: refined.norm(),
            });
        }
    }
}

/// Modified Bessel function `I0(z) = (1/π)∫₀^π e^{z cosθ} dθ` for complex `z`.
///
/// `I0` is even, so the branch of any square root feeding `z` is irrelevant.
pub fn bessel_i0_complex(z: Complex64) -> Result<Complex64> {
    let scaled = bessel_i0_complex_scaled(z)?;
    Ok(scaled * z.re.abs().exp())
}

/// Bessel function of the first kind of order zero.
///
/// Power series below `|x| = 14`, Hankel asymptotic expansion above.
pub fn bessel_j0(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(domain("bessel_j0", format!("non-finite argument {x}")));
    }
    let x = x.abs();
    if x < 14.0 {
        let q = -0.25 * x * x;
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..200 {
            term *= q / (k * k) as f64;
            sum += term;
            if term.abs() < 1e-18 * sum.abs().max(1e-3) {
                break;
            }
        }
        Ok(sum)
    } else {
        // J0(x) = sqrt(2/(πx)) [P cosχ − Q sinχ], χ = x − π/4
        let mut p = 1.0;
        let mut q = 0.0;
        let mut t = 1.0_f64;
        let mut last = f64::INFINITY;
        for n in 1..60usize {
            let next = t * ((2 * n - 1) * (2 * n - 1)) as f64 / (n as f64 * 8.0 * x);
            if next > last || next < 1e-18 {
                break;
            }
            last = next;
            t = next;
            if n % 2 == 0 {
                let sign = if (n / 2) % 2 == 0 { 1.0 } else { -1.0 };
                p += sign * t;
            } else {
                let sign = if ((n - 1) / 2) % 2 == 0 { -1.0 } else { 1.0 };
                q += sign * t;
            }
        }
        let chi = x - FRAC_PI_4;
        Ok((2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin()))
    }
}
