//! Harmonic-number power series `S_j(t) = Σ H_k^j t^k` and
//! `R_j(t) = Σ (k+mn-1)!/k! · H_{k+mn-1}^j t^k`.

use super::nb::{nb_sum, Envelope};
use crate::error::{domain, range, Result};
use crate::specfun::{dilog, harmonic, ln_factorial, Tolerance};

fn check_order_and_t(func: &'static str, j: u8, t: f64) -> Result<()> {
    if j > 2 {
        return Err(domain(func, format!("order j must be 0, 1 or 2, got {j}")));
    }
    if !(0.0..1.0).contains(&t) {
        return Err(domain(func, format!("t must lie in [0, 1), got {t}")));
    }
    Ok(())
}

/// `S_j(t)` in closed form.
pub fn s_series(j: u8, t: f64) -> Result<f64> {
    check_order_and_t("s_series", j, t)?;
    let l = -(-t).ln_1p();
    Ok(match j {
        0 => 1.0 / (1.0 - t),
        1 => l / (1.0 - t),
        _ => (dilog(t)? + l * l) / (1.0 - t),
    })
}

/// `R_j(t)` from its defining sum, accumulated as
/// `(mn-1)!/(1-t)^mn · E[H^j_{K+mn-1}]` with `K ~ NB(mn, t)`.
pub fn r_series(j: u8, t: f64, mn: u64, tol: &Tolerance) -> Result<f64> {
    check_order_and_t("r_series", j, t)?;
    if mn == 0 {
        return Err(domain("r_series", "mn must be >= 1"));
    }
    let mut h = harmonic(mn - 1);
    let expectation = nb_sum("R-series", mn, t, tol, Envelope::Slow, |k, _| {
        if k > 0 {
            h += 1.0 / (k + mn - 1) as f64;
        }
        Ok(h.powi(j as i32))
    })?;
    scale(mn, t, expectation)
}

fn scale(mn: u64, t: f64, expectation: f64) -> Result<f64> {
    let ln_scale = ln_factorial(mn - 1) - mn as f64 * (-t).ln_1p();
    let v = ln_scale.exp() * expectation;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(range("r_series", format!("(mn-1)!/(1-t)^mn overflows for mn={mn}, t={t}")))
    }
}

/// `R_j(t)` in closed form where one is known: `R₀` and `R₁` for every
/// `mn`, `R₂` for `mn ∈ {1, 2, 4}`. Returns `None` otherwise.
pub fn r_series_closed(j: u8, t: f64, mn: u64) -> Result<Option<f64>> {
    check_order_and_t("r_series_closed", j, t)?;
    if mn == 0 {
        return Err(domain("r_series_closed", "mn must be >= 1"));
    }
    let l = (-t).ln_1p(); // ln(1-t)
    let u = 1.0 - t;
    let v = match (j, mn) {
        (0, _) => scale(mn, t, 1.0)?,
        (1, _) => scale(mn, t, harmonic(mn - 1) - l)?,
        (2, 1) => s_series(2, t)?,
        (2, 2) => {
            if t == 0.0 {
                1.0
            } else {
                // d/dt S₂(t)
                let li = dilog(t)?;
                (-l / t - 2.0 * l / u) / u + (li + l * l) / (u * u)
            }
        }
        (2, 4) => {
            if t == 0.0 {
                // 3!·H₃²
                6.0 * (11.0f64 / 6.0).powi(2)
            } else {
                let li = dilog(t)?;
                let u4 = u.powi(4);
                (6.0 * l * l + 6.0 * li) / u4 + 2.0 * (3.0 * t * t + 4.0 * t - 1.0) / (t * t * u4)
                    - (11.0 * t.powi(3) + 18.0 * t * t - 9.0 * t + 2.0) * l / (t.powi(3) * u4)
            }
        }
        _ => return Ok(None),
    };
    Ok(Some(v))
}

/// `Σ_k (k+p)!(k+p)/k! · t^k = (p+t)·p!/(1-t)^{p+2}`.
pub fn lemma1_sum(p: u64, t: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&t) {
        return Err(domain("lemma1_sum", format!("t must lie in [0, 1), got {t}")));
    }
    let v = (p as f64 + t) * (ln_factorial(p) - (p + 2) as f64 * (-t).ln_1p()).exp();
    if v.is_finite() {
        Ok(v)
    } else {
        Err(range("lemma1_sum", format!("overflow for p={p}, t={t}")))
    }
}
