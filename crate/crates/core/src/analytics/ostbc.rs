use std::f64::consts::LOG2_E;

use super::nb::{nb_sum, Envelope};
use super::{AntennaConfig, LagContext, SnrPoint};
use crate::error::Result;
use crate::specfun::{
    dilog, gamma_expectation, harmonic, hurwitz_zeta2, log_moment2_weighted, xi_normalized, Tolerance, GAMMA_EXP,
    PI2_6,
};

// Kernels shared with the SISO module, in natural-log units. `m = MN`,
// `a = η/M`.

/// `E[ln(1 + a y)]`, `y ~ Gamma(m)`.
pub(super) fn mean_ln(m: u64, a: f64, tol: &Tolerance) -> Result<f64> {
    xi_normalized(m - 1, a, tol)
}

/// `E[(ln(1 + a y) - mu)²]`, `y ~ Gamma(m)`.
pub(super) fn spread_ln(m: u64, a: f64, mu: f64, tol: &Tolerance) -> Result<f64> {
    gamma_expectation(m, |y| ((a * y).ln_1p() - mu).powi(2), tol)
}

/// `E[(ln(1+a y₁) - mu)(ln(1+a y₂) - mu)]` for the correlated pair; with
/// `mu = 0` this is the ACF.
///
/// Conditioned on `K ~ NB(m, t)` the two gains are independent
/// `Gamma(K+m)` scaled by `1-t`, so the conditional expectation factorizes
/// into the square of a one-dimensional integral.
pub(super) fn cross_ln(m: u64, a: f64, t: f64, mu: f64, tol: &Tolerance) -> Result<f64> {
    let ratio = a * (1.0 - t);
    nb_sum("exact ACF series", m, t, tol, Envelope::Slow, |k, w| {
        if w == 0.0 {
            return Ok(0.0);
        }
        Ok((xi_normalized(k + m - 1, ratio, tol)? - mu).powi(2))
    })
}

/// `Var[H_{K+m-1}]`, `K ~ NB(m, t)`; equals
/// `(1-t)^m R₂(t)/(m-1)! - (H_{m-1} - ln(1-t))²`.
pub(super) fn harmonic_spread(m: u64, t: f64, tol: &Tolerance) -> Result<f64> {
    let mu = harmonic(m - 1) - (-t).ln_1p();
    let mut h = harmonic(m - 1);
    nb_sum("high-SNR harmonic series", m, t, tol, Envelope::Slow, |k, _| {
        if k > 0 {
            h += 1.0 / (k + m - 1) as f64;
        }
        Ok((h - mu).powi(2))
    })
}

fn eta_per_tx(snr: SnrPoint, antennas: AntennaConfig) -> f64 {
    snr.eta() / antennas.m as f64
}

pub fn ostbc_mean(snr: SnrPoint, antennas: AntennaConfig, tol: &Tolerance) -> Result<f64> {
    Ok(LOG2_E * mean_ln(antennas.product(), eta_per_tx(snr, antennas), tol)?)
}

pub fn ostbc_moment2(snr: SnrPoint, antennas: AntennaConfig, tol: &Tolerance) -> Result<f64> {
    Ok(LOG2_E * LOG2_E * log_moment2_weighted(antennas.product(), eta_per_tx(snr, antennas), tol)?)
}

pub fn ostbc_acf_exact(snr: SnrPoint, antennas: AntennaConfig, ctx: LagContext, tol: &Tolerance) -> Result<f64> {
    let v = cross_ln(antennas.product(), eta_per_tx(snr, antennas), ctx.t(), 0.0, tol)?;
    Ok(LOG2_E * LOG2_E * v)
}

pub fn ostbc_nacf_exact(snr: SnrPoint, antennas: AntennaConfig, ctx: LagContext, tol: &Tolerance) -> Result<f64> {
    Ok(ostbc_acf_exact(snr, antennas, ctx, tol)? / ostbc_moment2(snr, antennas, tol)?)
}

/// `(acf - mean²)/(moment2 - mean²)`, evaluated as a ratio of centered
/// expectations so that neither difference cancels.
pub fn ostbc_coeff_exact(snr: SnrPoint, antennas: AntennaConfig, ctx: LagContext, tol: &Tolerance) -> Result<f64> {
    if ctx.t() == 0.0 {
        return Ok(0.0);
    }
    let (m, a) = (antennas.product(), eta_per_tx(snr, antennas));
    let mu = mean_ln(m, a, tol)?;
    let cov = cross_ln(m, a, ctx.t(), mu, tol)?;
    let var = spread_ln(m, a, mu, tol)?;
    Ok(cov / var)
}

pub fn ostbc_nacf_low(ctx: LagContext, antennas: AntennaConfig) -> f64 {
    let mn = antennas.product() as f64;
    (mn + ctx.t()) / (mn + 1.0)
}

pub fn ostbc_coeff_low(ctx: LagContext) -> f64 {
    ctx.t()
}

pub fn ostbc_nacf_high(snr: SnrPoint, antennas: AntennaConfig, ctx: LagContext, tol: &Tolerance) -> Result<f64> {
    let m = antennas.product();
    let c = harmonic(m - 1) + (eta_per_tx(snr, antennas) / GAMMA_EXP).ln();
    let spread = harmonic_spread(m, ctx.t(), tol)?;
    Ok((c * c + spread) / (c * c + hurwitz_zeta2(m)?))
}

pub fn ostbc_coeff_high(antennas: AntennaConfig, ctx: LagContext, tol: &Tolerance) -> Result<f64> {
    let m = antennas.product();
    Ok(harmonic_spread(m, ctx.t(), tol)? / hurwitz_zeta2(m)?)
}

/// High-SNR normalized ACF of the 2×2 code in closed form.
pub fn ostbc_nacf_high_m2n2(snr: SnrPoint, ctx: LagContext) -> Result<f64> {
    let l = (snr.eta() / (2.0 * GAMMA_EXP)).ln();
    let d = 12.0 + 6.0 * PI2_6 + 22.0 * l + 6.0 * l * l;
    let t = ctx.t();
    if t == 0.0 {
        let c = 11.0 / 6.0 + l;
        return Ok(c * c / (c * c + hurwitz_zeta2(4)?));
    }
    let lg = (-t).ln_1p();
    let p = 11.0 * t.powi(3) - 18.0 * t * t + 9.0 * t - 2.0;
    Ok((6.0 + 22.0 * l + 6.0 * l * l + 6.0 * dilog(t)?) / d + (p * lg + 8.0 * t * t - 2.0 * t) / (d * t.powi(3)))
}

/// High-SNR correlation coefficient of the 2×2 code in closed form.
pub fn ostbc_coeff_high_m2n2(ctx: LagContext) -> Result<f64> {
    let t = ctx.t();
    if t == 0.0 {
        return Ok(0.0);
    }
    let c = 36.0 * PI2_6 - 49.0;
    let lg = (-t).ln_1p();
    let p = 11.0 * t.powi(3) - 18.0 * t * t + 9.0 * t - 2.0;
    Ok(36.0 * dilog(t)? / c - (85.0 * t * t - 48.0 * t + 12.0) / (c * t * t) + 6.0 * p * lg / (c * t.powi(3)))
}

#[cfg(test)]
mod tests {
    use super::super::siso::*;
    use super::super::{r_series, r_series_closed};
    use super::*;

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    fn snr(eta: f64) -> SnrPoint {
        SnrPoint::linear(eta).unwrap()
    }

    fn ctx(v: f64) -> LagContext {
        LagContext::new(v).unwrap()
    }

    fn a22() -> AntennaConfig {
        AntennaConfig::new(2, 2).unwrap()
    }

    #[test]
    fn siso_reduction() {
        let t = tol();
        let one = AntennaConfig::siso();
        for eta in [0.01, 1.0, 100.0] {
            let s = snr(eta);
            assert!((ostbc_mean(s, one, &t).unwrap() / siso_mean(s).unwrap() - 1.0).abs() < 1e-9);
            assert!((ostbc_moment2(s, one, &t).unwrap() / siso_moment2(s, &t).unwrap() - 1.0).abs() < 1e-12);
            for v in [0.0, 0.4, 0.9] {
                let c = ctx(v);
                let a = ostbc_acf_exact(s, one, c, &t).unwrap();
                let b = siso_acf_exact(s, c, &t).unwrap();
                assert!((a / b - 1.0).abs() < 1e-12);
                let a = ostbc_coeff_high(one, c, &t).unwrap();
                assert!((a - siso_coeff_high(c).unwrap()).abs() < 1e-10);
                let a = ostbc_nacf_high(s, one, c, &t).unwrap();
                assert!((a - siso_nacf_high(s, c).unwrap()).abs() < 1e-10);
                assert!((ostbc_nacf_low(c, one) - siso_nacf_low(c)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn mean_limits() {
        let t = tol();
        let a = a22();
        let low = ostbc_mean(snr(1e-3), a, &t).unwrap();
        assert!((low / (LOG2_E * 1e-3 / 2.0 * 4.0) - 1.0).abs() < 0.02);
        let high = ostbc_mean(snr(1e3), a, &t).unwrap();
        let want = LOG2_E * (harmonic(3) + (1e3 / (2.0 * GAMMA_EXP)).ln());
        assert!((high / want - 1.0).abs() < 0.01);
    }

    #[test]
    fn low_forms() {
        assert_eq!(ostbc_nacf_low(ctx(0.0), a22()), 0.8);
        assert!((ostbc_nacf_low(ctx(0.5), a22()) - 0.85).abs() < 1e-15);
        assert_eq!(ostbc_coeff_low(ctx(0.5)), 0.25);
    }

    #[test]
    fn exact_coeff_zero_at_zero_lag_correlation() {
        let t = tol();
        for eta in [0.1, 10.0] {
            let v = ostbc_coeff_exact(snr(eta), a22(), ctx(0.0), &t).unwrap();
            assert!(v.abs() < 1e-12);
        }
    }

    #[test]
    fn high_forms_match_verbatim_r_series_expression() {
        let t = tol();
        for mn in [1u32, 2, 4, 6] {
            let ant = AntennaConfig::new(1, mn).unwrap();
            let m = mn as u64;
            for v in [0.2, 0.6, 0.95] {
                let c = ctx(v);
                let r2 = r_series(2, c.t(), m, &t).unwrap();
                let nb_h2 = (1.0 - c.t()).powi(mn as i32) * r2 / (1..m).map(|x| x as f64).product::<f64>();
                let hm = harmonic(m - 1) - (-c.t()).ln_1p();
                let verbatim = (nb_h2 - hm * hm) / hurwitz_zeta2(m).unwrap();
                let got = ostbc_coeff_high(ant, c, &t).unwrap();
                // the verbatim difference cancels to about rel_tol·H²
                assert!((got - verbatim).abs() < 1e-8, "mn={mn} v={v}: {got} vs {verbatim}");
                if let Some(rc) = r_series_closed(2, c.t(), m).unwrap() {
                    assert!((rc / r2 - 1.0).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn m2n2_specializations() {
        let t = tol();
        for i in 1..=99 {
            let c = ctx(i as f64 / 100.0);
            let general = ostbc_coeff_high(a22(), c, &t).unwrap();
            let closed = ostbc_coeff_high_m2n2(c).unwrap();
            // the closed form cancels like 1/t³ near zero
            let allowed = if c.t() < 0.05 { 1e-7 } else { 1e-10 };
            assert!((general - closed).abs() < allowed, "v={}: {general} vs {closed}", c.varrho());
            for eta in [10.0, 1e3] {
                let general = ostbc_nacf_high(snr(eta), a22(), c, &t).unwrap();
                let closed = ostbc_nacf_high_m2n2(snr(eta), c).unwrap();
                assert!((general - closed).abs() < allowed);
            }
        }
        assert_eq!(ostbc_coeff_high_m2n2(ctx(0.0)).unwrap(), 0.0);
    }

    #[test]
    fn high_coeff_limits() {
        let t = tol().with_max_terms(20_000_000);
        for mn in [1u32, 4, 16] {
            let ant = AntennaConfig::new(1, mn).unwrap();
            let v = ostbc_coeff_high(ant, ctx(0.99999), &t).unwrap();
            assert!((v - 1.0).abs() < 1e-3, "mn={mn}: {v}");
            assert!(ostbc_coeff_high(ant, ctx(0.0), &t).unwrap().abs() < 1e-15);
        }
    }
}
