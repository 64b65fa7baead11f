use std::f64::consts::LOG2_E;

use super::ostbc::{cross_ln, spread_ln};
use super::{LagContext, SnrPoint};
use crate::error::Result;
use crate::specfun::{dilog, exp_int_gamma0_scaled, log_moment2_weighted, Tolerance, GAMMA_EXP, PI2_6};

/// Piecewise regime boundaries in dB.
const LOW_EDGE_DB: f64 = 6.5;
const HIGH_EDGE_DB: f64 = 16.0;

/// `log₂e · e^{1/η} Γ(0, 1/η)`
pub fn siso_mean(snr: SnrPoint) -> Result<f64> {
    Ok(LOG2_E * exp_int_gamma0_scaled(1.0 / snr.eta())?)
}

pub fn siso_moment2(snr: SnrPoint, tol: &Tolerance) -> Result<f64> {
    Ok(LOG2_E * LOG2_E * log_moment2_weighted(1, snr.eta(), tol)?)
}

/// `(log₂e)² λ Σ_k (λϱ)^{2k}/(k!)² Ξ(k,η,λ)²`, summed as
/// `Σ_k (1-ϱ²)ϱ^{2k} E[ln(1+(η/λ)Y_k)]²` with `Y_k ~ Gamma(k+1)`.
pub fn siso_acf_exact(snr: SnrPoint, ctx: LagContext, tol: &Tolerance) -> Result<f64> {
    Ok(LOG2_E * LOG2_E * cross_ln(1, snr.eta(), ctx.t(), 0.0, tol)?)
}

pub fn siso_nacf_exact(snr: SnrPoint, ctx: LagContext, tol: &Tolerance) -> Result<f64> {
    Ok(siso_acf_exact(snr, ctx, tol)? / siso_moment2(snr, tol)?)
}

pub fn siso_coeff_exact(snr: SnrPoint, ctx: LagContext, tol: &Tolerance) -> Result<f64> {
    if ctx.t() == 0.0 {
        return Ok(0.0);
    }
    let mu = siso_mean(snr)? / LOG2_E;
    let cov = cross_ln(1, snr.eta(), ctx.t(), mu, tol)?;
    let var = spread_ln(1, snr.eta(), mu, tol)?;
    Ok(cov / var)
}

pub fn siso_nacf_low(ctx: LagContext) -> f64 {
    0.5 * (1.0 + ctx.t())
}

pub fn siso_coeff_low(ctx: LagContext) -> f64 {
    ctx.t()
}

pub fn siso_nacf_high(snr: SnrPoint, ctx: LagContext) -> Result<f64> {
    let l = (snr.eta() / GAMMA_EXP).ln();
    Ok((dilog(ctx.t())? + l * l) / (PI2_6 + l * l))
}

/// `6 Li₂(ϱ²)/π²`
pub fn siso_coeff_high(ctx: LagContext) -> Result<f64> {
    Ok(dilog(ctx.t())? / PI2_6)
}

/// `ϱ²` up to 6.5 dB, the average of the low- and high-SNR forms up to
/// 16 dB, the high-SNR form above. The seams are not smoothed.
pub fn siso_coeff_piecewise(snr: SnrPoint, ctx: LagContext) -> Result<f64> {
    // compared in linear units so that from_db(6.5) lands on the seam exactly
    let eta = snr.eta();
    let t = ctx.t();
    if eta <= 10f64.powf(LOW_EDGE_DB / 10.0) {
        Ok(t)
    } else if eta <= 10f64.powf(HIGH_EDGE_DB / 10.0) {
        Ok(0.5 * t + 0.5 * dilog(t)? / PI2_6)
    } else {
        Ok(dilog(t)? / PI2_6)
    }
}
