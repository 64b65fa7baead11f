use super::{Tolerance, EULER_GAMMA};
use crate::error::{check_finite, domain, range, Error, Result};
use crate::quad;

/// `ln(n!)`, exact summation up to 170 and the Stirling series beyond.
pub fn ln_factorial(n: u64) -> f64 {
    if n < 2 {
        return 0.0;
    }
    if n <= 170 {
        let mut f = 1.0_f64;
        for j in 2..=n {
            f *= j as f64;
        }
        return f.ln();
    }
    let m = n as f64;
    m * m.ln() - m + stirling_rest(m)
}

/// `ln(m!) - (m ln m - m)` for real `m > 0`, i.e. `½ln(2πm)` plus the
/// Stirling correction series. Small `m` is evaluated directly.
fn stirling_rest(m: f64) -> f64 {
    if m < 20.0 && m.fract() == 0.0 {
        let n = m as u64;
        let mut f = 1.0_f64;
        for j in 2..=n {
            f *= j as f64;
        }
        return f.ln() - (m * m.ln() - m);
    }
    let r = 1.0 / m;
    let r2 = r * r;
    0.5 * (2.0 * std::f64::consts::PI * m).ln()
        + r * (1.0 / 12.0 - r2 * (1.0 / 360.0 - r2 * (1.0 / 1260.0 - r2 * (1.0 / 1680.0 - r2 / 1188.0))))
}

/// Poisson probability `e^{-z} z^j / j!`.
pub fn poisson_pmf(j: u64, z: f64) -> f64 {
    if z == 0.0 {
        return if j == 0 { 1.0 } else { 0.0 };
    }
    (-z + j as f64 * z.ln() - ln_factorial(j)).exp()
}

fn check_gamma_args(func: &'static str, a: u64, z: f64) -> Result<()> {
    check_finite(func, "z", z)?;
    if z < 0.0 {
        return Err(domain(func, format!("z must be >= 0, got {z}")));
    }
    if a == 0 {
        return Err(domain(func, "integer order must be >= 1 (a = 0 is the exponential integral)"));
    }
    Ok(())
}

/// `Σ_{j<a} pmf_j`, summed downward from the largest term; accurate when
/// `a - 1 <= z`.
fn poisson_head(a: u64, z: f64) -> f64 {
    let mut j = a - 1;
    let mut term = poisson_pmf(j, z);
    let mut sum = term;
    while j > 0 {
        term *= j as f64 / z;
        j -= 1;
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    sum
}

/// `Σ_{j>=a} pmf_j`, summed upward from the largest term; accurate when
/// `a > z`.
fn poisson_tail(a: u64, z: f64) -> f64 {
    let mut j = a;
    let mut term = poisson_pmf(j, z);
    let mut sum = term;
    while term > 1e-17 * sum && term > 0.0 {
        j += 1;
        term *= z / j as f64;
        sum += term;
    }
    sum
}

/// Regularized upper incomplete gamma `Γ(a,z)/(a-1)!` for integer `a >= 1`.
pub fn reg_upper_gamma_int(a: u64, z: f64) -> Result<f64> {
    check_gamma_args("reg_upper_gamma_int", a, z)?;
    if z == 0.0 {
        return Ok(1.0);
    }
    if (a - 1) as f64 <= z {
        Ok(poisson_head(a, z).min(1.0))
    } else {
        Ok((1.0 - poisson_tail(a, z)).max(0.0))
    }
}

/// Regularized lower incomplete gamma `γ(a,z)/(a-1)!` for integer `a >= 1`.
pub fn reg_lower_gamma_int(a: u64, z: f64) -> Result<f64> {
    check_gamma_args("reg_lower_gamma_int", a, z)?;
    if z == 0.0 {
        return Ok(0.0);
    }
    if (a - 1) as f64 <= z {
        Ok((1.0 - poisson_head(a, z)).max(0.0))
    } else {
        Ok(poisson_tail(a, z).min(1.0))
    }
}

fn scale_by_factorial(func: &'static str, a: u64, reg: f64) -> Result<f64> {
    if reg == 0.0 {
        return Ok(0.0);
    }
    let v = (ln_factorial(a - 1) + reg.ln()).exp();
    if v.is_finite() {
        Ok(v)
    } else {
        Err(range(func, format!("({}-1)! overflows f64; use the regularized form", a)))
    }
}

/// Upper incomplete gamma `Γ(a,z) = (a-1)! e^{-z} Σ_{j<a} z^j/j!` for integer `a >= 1`.
pub fn upper_inc_gamma_int(a: u64, z: f64) -> Result<f64> {
    let q = reg_upper_gamma_int(a, z)?;
    scale_by_factorial("upper_inc_gamma_int", a, q)
}

/// Lower incomplete gamma `γ(a,z) = (a-1)! - Γ(a,z)` for integer `a >= 1`.
pub fn lower_inc_gamma_int(a: u64, z: f64) -> Result<f64> {
    let p = reg_lower_gamma_int(a, z)?;
    scale_by_factorial("lower_inc_gamma_int", a, p)
}

/// `e^z Γ(0,z) = e^z E1(z)` for `z > 0`.
pub fn exp_int_gamma0_scaled(z: f64) -> Result<f64> {
    check_finite("exp_int_gamma0", "z", z)?;
    if z <= 0.0 {
        return Err(domain("exp_int_gamma0", format!("z must be > 0, got {z}")));
    }
    if z <= 1.0 {
        Ok(z.exp() * e1_series(z))
    } else {
        // Modified Lentz evaluation of the continued fraction.
        let tiny = 1e-300;
        let mut b = z + 1.0;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..1000 {
            let an = -((i * i) as f64);
            b += 2.0;
            d = 1.0 / (an * d + b);
            c = b + an / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                return Ok(h);
            }
        }
        Err(Error::Accuracy {
            what: "exponential integral continued fraction",
            steps: 1000,
            partial: h,
        })
    }
}

fn e1_series(z: f64) -> f64 {
    let mut sum = 0.0;
    let mut fact = 1.0;
    for k in 1..100 {
        fact *= -z / k as f64;
        let term = fact / k as f64;
        sum += term;
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    -EULER_GAMMA - z.ln() - sum
}

/// Exponential integral `Γ(0,z) = ∫_z^∞ t^{-1} e^{-t} dt`, `z > 0`.
pub fn exp_int_gamma0(z: f64) -> Result<f64> {
    let scaled = exp_int_gamma0_scaled(z)?;
    if z <= 1.0 {
        Ok(e1_series(z))
    } else {
        Ok(scaled * (-z).exp())
    }
}

/// Log density of the standard gamma law with integer shape `a`.
fn ln_gamma_density(a: u64, y: f64) -> f64 {
    if a == 1 {
        return -y;
    }
    let m = (a - 1) as f64;
    // (a-1) ln y - y - ln (a-1)!  regrouped around the mode to avoid cancellation.
    let d = (y - m) / m;
    m * (d.ln_1p() - d) - stirling_rest(m)
}

/// `E[g(Y)]` for `Y ~ Gamma(shape, 1)` with integer `shape >= 1`.
///
/// The density is evaluated around its mode, so shapes in the tens of
/// thousands work without overflow.
pub fn gamma_expectation<G: Fn(f64) -> f64>(shape: u64, g: G, tol: &Tolerance) -> Result<f64> {
    if shape == 0 {
        return Err(domain("gamma_expectation", "shape must be >= 1"));
    }
    let mode = (shape - 1) as f64;
    let scale = (shape as f64).sqrt();
    let integrand = |y: f64| {
        let p = ln_gamma_density(shape, y).exp();
        if p == 0.0 {
            0.0
        } else {
            p * g(y)
        }
    };
    quad::integrate_outward(integrand, mode, scale, 0.0, tol)
}

/// `E[ln(1 + ratio·Y)]` with `Y ~ Gamma(k+1, 1)`.
///
/// This is `Ξ(k,η,λ)·λ^{k+1}/k!` with `ratio = η/λ`: the log integral with its
/// factorial and power of `λ` divided out, which is what every series needs.
pub fn xi_normalized(k: u64, ratio: f64, tol: &Tolerance) -> Result<f64> {
    check_finite("xi_normalized", "ratio", ratio)?;
    if ratio <= 0.0 {
        return Err(domain("xi_normalized", format!("ratio must be > 0, got {ratio}")));
    }
    gamma_expectation(k + 1, |y| (ratio * y).ln_1p(), tol)
}

/// `Ξ(k,η,λ) = ∫₀^∞ x^k e^{-λx} ln(1+ηx) dx`.
pub fn xi_exact(k: u64, eta: f64, lam: f64, tol: &Tolerance) -> Result<f64> {
    check_finite("xi_exact", "eta", eta)?;
    check_finite("xi_exact", "lambda", lam)?;
    if eta <= 0.0 || lam <= 0.0 {
        return Err(domain("xi_exact", format!("need eta > 0 and lambda > 0, got {eta}, {lam}")));
    }
    let norm = xi_normalized(k, eta / lam, tol)?;
    let ln_scale = ln_factorial(k) - (k + 1) as f64 * lam.ln();
    let v = (ln_scale + norm.ln()).exp();
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(range(
            "xi_exact",
            format!("k={k}, lambda={lam}: ln|Ξ| = {:.1} outside f64; use xi_normalized", ln_scale + norm.ln()),
        ))
    }
}

/// `E[ln²(1 + eta_over_m·Y)]` with `Y ~ Gamma(m, 1)`:
/// `∫₀^∞ y^{m-1} e^{-y}/(m-1)! · ln²(1 + (η/M) y) dy`.
pub fn log_moment2_weighted(m: u64, eta_over_m: f64, tol: &Tolerance) -> Result<f64> {
    check_finite("log_moment2_weighted", "eta_over_m", eta_over_m)?;
    if m == 0 || eta_over_m <= 0.0 {
        return Err(domain(
            "log_moment2_weighted",
            format!("need m >= 1 and eta/M > 0, got {m}, {eta_over_m}"),
        ));
    }
    gamma_expectation(m, |y| (eta_over_m * y).ln_1p().powi(2), tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::{harmonic, hurwitz_zeta2, GAMMA_EXP, PI2_6};

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    // Oracle: composite Simpson on a truncated range, fine grid.
    fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    #[test]
    fn ln_factorial_continuity() {
        assert_eq!(ln_factorial(0), 0.0);
        assert!((ln_factorial(170) - 706.573_062_245_787_4).abs() < 1e-10);
        // across the switch
        let a = ln_factorial(170) + 171f64.ln();
        assert!((ln_factorial(171) - a).abs() < 1e-11);
        assert!((stirling_rest(25.0) - (ln_factorial(25) - (25.0 * 25f64.ln() - 25.0))).abs() < 1e-13);
    }

    #[test]
    fn upper_gamma_examples() {
        assert!((upper_inc_gamma_int(1, 0.5).unwrap() - (-0.5f64).exp()).abs() < 1e-15);
        assert_eq!(upper_inc_gamma_int(3, 0.0).unwrap(), 2.0);
        let oracle = simpson(|t| t * (-t).exp(), 1.0, 60.0, 200_000);
        let v = upper_inc_gamma_int(2, 1.0).unwrap();
        assert!((v - oracle).abs() < 1e-10);
        assert!((v - 2.0 / std::f64::consts::E).abs() < 1e-15);
    }

    #[test]
    fn lower_gamma_examples() {
        assert_eq!(lower_inc_gamma_int(1, 0.0).unwrap(), 0.0);
        assert!((lower_inc_gamma_int(1, 2f64.ln()).unwrap() - 0.5).abs() < 1e-15);
        let oracle = simpson(|t| t.powi(3) * (-t).exp(), 0.0, 2.0, 20_000);
        // γ(4,2) = 3! - Γ(4,2) = 6 - 38e^{-2}
        assert!((oracle - (6.0 - 38.0 * (-2.0f64).exp())).abs() < 1e-12);
        let v = lower_inc_gamma_int(4, 2.0).unwrap();
        assert!((v - oracle).abs() < 1e-12, "{v} vs {oracle}");
    }

    #[test]
    fn incomplete_gamma_domain() {
        assert!(upper_inc_gamma_int(0, 0.0).is_err());
        assert!(upper_inc_gamma_int(2, -1.0).is_err());
        assert!(upper_inc_gamma_int(200, 1.0).is_err()); // 199! overflows
        assert!(reg_upper_gamma_int(200, 1.0).is_ok());
    }

    #[test]
    fn exponential_integral() {
        let o1 = simpson(|t| (-t).exp() / t, 1.0, 60.0, 400_000);
        assert!((exp_int_gamma0(1.0).unwrap() - o1).abs() < 1e-10);
        assert!((exp_int_gamma0(1.0).unwrap() - 0.219_383_934_395_520_3).abs() < 1e-15);
        assert!((exp_int_gamma0(0.1).unwrap() - 1.822_923_958_419_390_7).abs() < 1e-14);
        assert!(exp_int_gamma0(50.0).unwrap() < 1e-20);
        assert!(exp_int_gamma0(0.0).is_err());
        assert!(exp_int_gamma0(-1.0).is_err());
        // continuity at the series/fraction switch
        let a = exp_int_gamma0(1.0 - 1e-12).unwrap();
        let b = exp_int_gamma0(1.0 + 1e-12).unwrap();
        assert!((a - b).abs() < 1e-11);
        // scaled form survives huge arguments
        let s = exp_int_gamma0_scaled(1e4).unwrap();
        assert!((s * 1e4 - 1.0).abs() < 2e-4);
    }

    #[test]
    fn xi_special_cases() {
        let t = tol();
        let e_gamma01 = std::f64::consts::E * exp_int_gamma0(1.0).unwrap();
        assert!((xi_exact(0, 1.0, 1.0, &t).unwrap() - e_gamma01).abs() < 1e-10);
        assert!((e_gamma01 - 0.596_347_362_323_194).abs() < 1e-12);

        // low SNR: η (k+1)!/λ^{k+2}
        for (k, lam) in [(0u64, 1.0), (3, 2.0), (10, 1.5)] {
            let eta = 1e-4;
            let approx = eta * (ln_factorial(k + 1) - (k + 2) as f64 * f64::ln(lam)).exp();
            let v = xi_exact(k, eta, lam, &t).unwrap();
            assert!((v / approx - 1.0).abs() < 0.01, "k={k}");
        }

        // high SNR: (k!/λ^{k+1}) (ln(η/(λγ)) + H_k)
        let v = xi_exact(1, 1e3, 1.0, &t).unwrap();
        let approx = (1e3f64 / GAMMA_EXP).ln() + harmonic(1);
        assert!((v / approx - 1.0).abs() < 0.01, "{v} vs {approx}");
    }

    #[test]
    fn xi_against_trapezoid_oracle() {
        let t = tol();
        for &k in &[0u64, 1, 5, 17, 30] {
            for &eta in &[1e-3, 1.0, 1e2, 1e4] {
                for &lam in &[1.0, 7.0, 1e2, 1e4] {
                    let v = xi_exact(k, eta, lam, &t).unwrap();
                    // oracle in u = λx on a trapezoid grid uniform in ln u
                    let kf = k as f64;
                    let upper = kf + 60.0 + 12.0 * kf.sqrt();
                    let (v0, v1) = (-40.0, upper.ln());
                    let n = 200_000;
                    let h = (v1 - v0) / n as f64;
                    let mut s = 0.0;
                    for i in 0..=n {
                        let v = v0 + i as f64 * h;
                        let u = v.exp();
                        let w = if i == 0 || i == n { 0.5 } else { 1.0 };
                        let ln_dens = (kf + 1.0) * v - u - ln_factorial(k);
                        s += w * ln_dens.exp() * (eta / lam * u).ln_1p();
                    }
                    let oracle = s * h * (ln_factorial(k) - (kf + 1.0) * lam.ln()).exp();
                    assert!(
                        (v / oracle - 1.0).abs() < 1e-6,
                        "k={k} eta={eta} lam={lam}: {v} vs {oracle}"
                    );
                }
            }
        }
    }

    #[test]
    fn xi_overflow_is_range_error() {
        let err = xi_exact(400, 1.0, 1e-3, &tol()).unwrap_err();
        assert!(matches!(err, Error::Range { .. }));
        assert!(xi_normalized(400, 1e3, &tol()).unwrap().is_finite());
    }

    #[test]
    fn log_moment2_limits() {
        let t = tol();
        let eta = 1e-3;
        let v = log_moment2_weighted(1, eta, &t).unwrap();
        assert!((v / (2.0 * eta * eta) - 1.0).abs() < 0.02);

        let eta = 1e3;
        let l = (eta / GAMMA_EXP).ln();
        let v = log_moment2_weighted(1, eta, &t).unwrap();
        assert!((v / (l * l + PI2_6) - 1.0).abs() < 0.01);

        // m = MN = 4, M = 2
        let l = (eta / (2.0 * GAMMA_EXP)).ln() + harmonic(3);
        let z = PI2_6 - 1.0 - 0.25 - 1.0 / 9.0;
        assert!((hurwitz_zeta2(4).unwrap() - z).abs() < 1e-14);
        let v = log_moment2_weighted(4, eta / 2.0, &t).unwrap();
        assert!((v / (l * l + z) - 1.0).abs() < 0.01);
    }

    #[test]
    fn gamma_expectation_moments() {
        let t = tol();
        for shape in [1u64, 2, 10, 1000, 50_000] {
            let s = shape as f64;
            let m0 = gamma_expectation(shape, |_| 1.0, &t).unwrap();
            let m1 = gamma_expectation(shape, |y| y, &t).unwrap();
            let m2 = gamma_expectation(shape, |y| (y - s).powi(2), &t).unwrap();
            assert!((m0 - 1.0).abs() < 1e-10, "shape={shape} mass={m0}");
            assert!((m1 / s - 1.0).abs() < 1e-10);
            assert!((m2 / s - 1.0).abs() < 1e-9);
        }
    }
}
