//! Closed-form statistics of the instantaneous mutual information (IMI)
//! `I = log₂(1 + (η/M) Σ|h|²)`.
//!
//! Every exact series is written as an expectation over a negative binomial
//! index `K ~ NB(MN, ϱ²)`: given `K`, two correlated chi-square gains
//! `y₁, y₂` are independent `Gamma(K+MN, 1-ϱ²)` variables. The factorials of
//! the textbook form never appear; the weights are accumulated in log space.

pub(crate) mod nb;
mod ostbc;
mod series;
mod siso;
mod table1;

pub use ostbc::{
    ostbc_acf_exact, ostbc_coeff_exact, ostbc_coeff_high, ostbc_coeff_high_m2n2, ostbc_coeff_low, ostbc_mean,
    ostbc_moment2, ostbc_nacf_exact, ostbc_nacf_high, ostbc_nacf_high_m2n2, ostbc_nacf_low,
};
pub use series::{lemma1_sum, r_series, r_series_closed, s_series};
pub use siso::{
    siso_acf_exact, siso_coeff_exact, siso_coeff_high, siso_coeff_low, siso_coeff_piecewise, siso_mean,
    siso_moment2, siso_nacf_exact, siso_nacf_high, siso_nacf_low,
};
pub use table1::{table1_row, Table1Row};

use crate::error::{check_finite, domain, Error, Result};

/// Largest supported `M·N`.
pub const MAX_ANTENNA_PRODUCT: u64 = 128;

/// Average SNR, stored linear.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrPoint {
    eta: f64,
}

impl SnrPoint {
    pub fn linear(eta: f64) -> Result<Self> {
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::Config(format!("SNR must be positive and finite, got {eta}")));
        }
        Ok(Self { eta })
    }

    pub fn from_db(db: f64) -> Result<Self> {
        check_finite("SnrPoint::from_db", "dB", db)?;
        Self::linear(10f64.powf(db / 10.0))
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn db(&self) -> f64 {
        10.0 * self.eta.log10()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AntennaConfig {
    pub m: u32,
    pub n: u32,
}

impl AntennaConfig {
    pub fn new(m: u32, n: u32) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::Config(format!("antenna counts must be >= 1, got M={m}, N={n}")));
        }
        if m as u64 * n as u64 > MAX_ANTENNA_PRODUCT {
            return Err(Error::Config(format!(
                "M*N = {} exceeds the supported maximum {MAX_ANTENNA_PRODUCT}",
                m as u64 * n as u64
            )));
        }
        Ok(Self { m, n })
    }

    pub fn siso() -> Self {
        Self { m: 1, n: 1 }
    }

    /// `M·N`
    pub fn product(&self) -> u64 {
        self.m as u64 * self.n as u64
    }

    pub fn is_siso(&self) -> bool {
        self.m == 1 && self.n == 1
    }
}

/// Channel correlation magnitude at one lag together with `λ = 1/(1-ϱ²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LagContext {
    varrho: f64,
    lambda: f64,
}

impl LagContext {
    pub fn new(varrho: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&varrho) {
            return Err(domain("LagContext", format!("varrho must lie in [0, 1), got {varrho}")));
        }
        Ok(Self {
            varrho,
            lambda: 1.0 / (1.0 - varrho * varrho),
        })
    }

    pub fn varrho(&self) -> f64 {
        self.varrho
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// `ϱ²`
    pub fn t(&self) -> f64 {
        self.varrho * self.varrho
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StatKind {
    Acf,
    Nacf,
    Coeff,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    Exact,
    LowSnr,
    HighSnr,
    Piecewise,
    Empirical,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StatSeries {
    pub lags: Vec<usize>,
    pub values: Vec<f64>,
    pub kind: StatKind,
    pub regime: Regime,
}

impl StatSeries {
    pub fn new(lags: Vec<usize>, values: Vec<f64>, kind: StatKind, regime: Regime) -> Result<Self> {
        if lags.len() != values.len() {
            return Err(Error::Config(format!(
                "{} lags but {} values",
                lags.len(),
                values.len()
            )));
        }
        if kind == StatKind::Coeff {
            if let Some(v) = values.iter().find(|v| !(-1.0..=1.0 + 1e-9).contains(*v)) {
                return Err(domain("StatSeries", format!("correlation coefficient {v} outside [-1, 1]")));
            }
        }
        Ok(Self {
            lags,
            values,
            kind,
            regime,
        })
    }
}

/// `log₂(1 + η α²)`
pub fn imi_sample(alpha_sq: f64, snr: SnrPoint) -> Result<f64> {
    check_finite("imi_sample", "alpha_sq", alpha_sq)?;
    if alpha_sq < 0.0 {
        return Err(domain("imi_sample", format!("alpha^2 must be >= 0, got {alpha_sq}")));
    }
    Ok((snr.eta * alpha_sq).ln_1p() * std::f64::consts::LOG2_E)
}

/// `log₂(1 + (η/M) Σ|h|²)`
pub fn imi_sample_ostbc(gain_sum: f64, snr: SnrPoint, antennas: AntennaConfig) -> Result<f64> {
    check_finite("imi_sample_ostbc", "gain_sum", gain_sum)?;
    if gain_sum < 0.0 {
        return Err(domain("imi_sample_ostbc", format!("gain sum must be >= 0, got {gain_sum}")));
    }
    Ok((snr.eta / antennas.m as f64 * gain_sum).ln_1p() * std::f64::consts::LOG2_E)
}
