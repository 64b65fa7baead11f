//! Scalar special functions.
//!
//! Everything the statistics need beyond `std`: modified Bessel `I0` for
//! complex argument, `J0`, integer-order incomplete gamma functions, the
//! exponential integral, the dilogarithm, harmonic numbers, the Hurwitz zeta
//! function at `s = 2`, and the gamma-weighted logarithmic integrals that
//! stand in for the Meijer-G expressions of the closed forms.

mod bessel;
mod gamma;
mod zeta;

pub use bessel::{bessel_i0_complex, bessel_i0_complex_scaled, bessel_j0};
pub use gamma::{
    exp_int_gamma0, exp_int_gamma0_scaled, gamma_expectation, ln_factorial, log_moment2_weighted,
    lower_inc_gamma_int, poisson_pmf, reg_lower_gamma_int, reg_upper_gamma_int,
    upper_inc_gamma_int, xi_exact, xi_normalized,
};
pub use zeta::{dilog, harmonic, hurwitz_zeta2};

use crate::error::{Error, Result};

/// Euler-Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// `exp(EULER_GAMMA) = 1.781072…`, the form in which the constant enters the
/// high-SNR expressions (`ln(η/gamma_exp)`).
pub const GAMMA_EXP: f64 = 1.781_072_417_990_198;

/// `π²/6 = ζ(2) = Li₂(1)`.
pub const PI2_6: f64 = std::f64::consts::PI * std::f64::consts::PI / 6.0;

/// `log₂ e`
pub const LOG2_E: f64 = std::f64::consts::LOG2_E;

/// Truncation and quadrature controls for every infinite series and integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_terms: usize,
    pub max_quad_refinements: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-14,
            max_terms: 10_000,
            max_quad_refinements: 60,
        }
    }
}

impl Tolerance {
    pub fn new(rel_tol: f64, abs_tol: f64, max_terms: usize, max_quad_refinements: usize) -> Result<Self> {
        let tol = Self {
            rel_tol,
            abs_tol,
            max_terms,
            max_quad_refinements,
        };
        tol.validate()?;
        Ok(tol)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) || !(self.abs_tol > 0.0) || self.max_terms == 0 {
            return Err(Error::Config(format!(
                "tolerance needs rel_tol > 0, abs_tol > 0, max_terms >= 1 (got {self:?})"
            )));
        }
        Ok(())
    }

    /// Same tolerance with a different term cap.
    pub fn with_max_terms(mut self, max_terms: usize) -> Self {
        self.max_terms = max_terms;
        self
    }
}
