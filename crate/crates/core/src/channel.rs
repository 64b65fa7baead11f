//! Von Mises angle-of-arrival mixtures and the channel correlation and
//! Doppler spectrum they induce.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::error::{check_finite, domain, Error, Result};
use crate::quad::gauss_legendre;
use crate::specfun::{bessel_i0_complex_scaled, bessel_j0};

/// Largest `ϱ_i` allowed at a nonzero lag, so that `λ_i = 1/(1-ϱ_i²)` stays finite.
pub const VARRHO_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cluster {
    pub weight: f64,
    pub kappa: f64,
    /// Mean angle of arrival in radians, normalized into `[0, 2π)`.
    pub theta: f64,
}

impl Cluster {
    pub fn new(weight: f64, kappa: f64, theta: f64) -> Result<Self> {
        if !(weight > 0.0 && weight <= 1.0) {
            return Err(Error::Config(format!("cluster weight must lie in (0, 1], got {weight}")));
        }
        if !(kappa >= 0.0) || !kappa.is_finite() {
            return Err(Error::Config(format!("cluster kappa must be finite and >= 0, got {kappa}")));
        }
        if !theta.is_finite() {
            return Err(Error::Config(format!("cluster theta must be finite, got {theta}")));
        }
        let mut theta = theta.rem_euclid(TAU);
        if theta >= TAU {
            theta = 0.0;
        }
        Ok(Self { weight, kappa, theta })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringScenario {
    clusters: Vec<Cluster>,
    // I0(κ_n)·e^{-κ_n}
    i0_scaled: Vec<f64>,
}

impl ScatteringScenario {
    pub fn new(clusters: Vec<Cluster>) -> Result<Self> {
        if clusters.is_empty() {
            return Err(Error::Config("scenario needs at least one cluster".into()));
        }
        let total: f64 = clusters.iter().map(|c| c.weight).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Config(format!("cluster weights must sum to 1, got {total:.15}")));
        }
        let i0_scaled = clusters
            .iter()
            .map(|c| bessel_i0_complex_scaled(Complex64::new(c.kappa, 0.0)).map(|v| v.re))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { clusters, i0_scaled })
    }

    /// Uniform angle of arrival.
    pub fn isotropic() -> Self {
        Self::new(vec![Cluster::new(1.0, 0.0, 0.0).unwrap()]).unwrap()
    }

    /// Three clusters: (0.45, 2, π/18), (0.2, 20, 11π/18), (0.35, 3, 53π/36).
    pub fn three_cluster() -> Self {
        Self::new(vec![
            Cluster::new(0.45, 2.0, PI / 18.0).unwrap(),
            Cluster::new(0.2, 20.0, 11.0 * PI / 18.0).unwrap(),
            Cluster::new(0.35, 3.0, 53.0 * PI / 36.0).unwrap(),
        ])
        .unwrap()
    }

    pub fn clusters(&self) -> &[Cluster] {
        &self.clusters
    }

    pub fn is_isotropic(&self) -> bool {
        self.clusters.iter().all(|c| c.kappa == 0.0)
    }

    /// `g(u) = f_m S_h(f_m sin u) cos u`: the Doppler density in the
    /// variable `u = asin(f/f_m)`, free of the band-edge singularity.
    fn doppler_density_u(&self, u: f64) -> f64 {
        let (s, c) = u.sin_cos();
        let mut acc = 0.0;
        for (cl, i0s) in self.clusters.iter().zip(&self.i0_scaled) {
            let a = cl.kappa * s * cl.theta.cos();
            let b = (cl.kappa * c * cl.theta.sin()).abs();
            // e^{a} cosh(b) / I0(κ) with every exponent shifted by -κ
            let v = (a + b - cl.kappa).exp() * 0.5 * (1.0 + (-2.0 * b).exp()) / i0s;
            acc += cl.weight * v;
        }
        acc / PI
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DopplerGrid {
    pub f_m: f64,
    pub t_s: f64,
    pub lags: Vec<usize>,
}

impl DopplerGrid {
    pub fn new(f_m: f64, t_s: f64, lags: Vec<usize>) -> Result<Self> {
        if !(f_m > 0.0 && f_m.is_finite()) {
            return Err(Error::Config(format!("maximum Doppler frequency must be > 0, got {f_m}")));
        }
        if !(t_s > 0.0 && t_s.is_finite()) {
            return Err(Error::Config(format!("symbol period must be > 0, got {t_s}")));
        }
        Ok(Self { f_m, t_s, lags })
    }

    /// Normalized Doppler `f_m·T_s`.
    pub fn normalized_doppler(&self) -> f64 {
        self.f_m * self.t_s
    }

    pub fn max_lag(&self) -> usize {
        self.lags.iter().copied().max().unwrap_or(0)
    }
}

/// Angle-of-arrival density at `theta` (radians).
pub fn aoa_pdf(s: &ScatteringScenario, theta: f64) -> f64 {
    s.clusters
        .iter()
        .zip(&s.i0_scaled)
        .map(|(c, i0s)| c.weight * (c.kappa * ((theta - c.theta).cos() - 1.0)).exp() / (TAU * i0s))
        .sum()
}

/// Channel correlation coefficient `ρ_h(τ) = E[h(t) h*(t-τ)]`.
pub fn channel_corr(s: &ScatteringScenario, f_m: f64, tau: f64) -> Result<Complex64> {
    check_finite("channel_corr", "tau", tau)?;
    check_finite("channel_corr", "f_m", f_m)?;
    if tau == 0.0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let x = TAU * f_m * tau;
    if s.is_isotropic() {
        return Ok(Complex64::new(bessel_j0(x)?, 0.0));
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for (c, i0s) in s.clusters.iter().zip(&s.i0_scaled) {
        let w2 = Complex64::new(c.kappa * c.kappa - x * x, 2.0 * x * c.kappa * c.theta.cos());
        // principal branch; I0 is even so the sign of the root does not matter
        let w = w2.sqrt();
        let ratio = bessel_i0_complex_scaled(w)? * ((w.re.abs() - c.kappa).exp() / i0s);
        acc += ratio * c.weight;
    }
    Ok(acc)
}

/// Doppler power spectral density `S_h(f)` for `|f| < f_m`.
pub fn doppler_spectrum(s: &ScatteringScenario, f_m: f64, f: f64) -> Result<f64> {
    check_finite("doppler_spectrum", "f", f)?;
    if !(f_m > 0.0) {
        return Err(domain("doppler_spectrum", format!("f_m must be > 0, got {f_m}")));
    }
    if f.abs() >= f_m {
        return Err(domain(
            "doppler_spectrum",
            format!("|f| = {} must be below f_m = {f_m}", f.abs()),
        ));
    }
    let r = f / f_m;
    let c = (1.0 - r * r).sqrt();
    Ok(s.doppler_density_u(r.asin()) / (f_m * c))
}

/// Integrates the Doppler spectrum over frequency bins.
///
/// Bins are clipped to `(-f_m, f_m)`; masses are computed in the variable
/// `u = asin(f/f_m)` with Gauss-Legendre panels no wider than 0.01 rad.
pub(crate) struct DopplerIntegrator<'a> {
    scenario: &'a ScatteringScenario,
    f_m: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl<'a> DopplerIntegrator<'a> {
    const PANEL: f64 = 0.01;

    pub(crate) fn new(scenario: &'a ScatteringScenario, f_m: f64) -> Self {
        let (nodes, weights) = gauss_legendre(8);
        Self {
            scenario,
            f_m,
            nodes,
            weights,
        }
    }

    pub(crate) fn mass(&self, f_lo: f64, f_hi: f64) -> f64 {
        let lo = (f_lo / self.f_m).clamp(-1.0, 1.0).asin();
        let hi = (f_hi / self.f_m).clamp(-1.0, 1.0).asin();
        if hi <= lo {
            return 0.0;
        }
        let panels = ((hi - lo) / Self::PANEL).ceil().max(1.0) as usize;
        let width = (hi - lo) / panels as f64;
        let mut total = 0.0;
        for p in 0..panels {
            let a = lo + p as f64 * width;
            let mid = a + 0.5 * width;
            let half = 0.5 * width;
            let mut s = 0.0;
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                s += w * self.scenario.doppler_density_u(mid + half * x);
            }
            total += s * half;
        }
        total
    }
}

/// `ϱ_i = |ρ_h(i T_s)|`, exactly 1 at lag 0 and at most `1 - VARRHO_EPS` elsewhere.
pub fn varrho(s: &ScatteringScenario, f_m: f64, t_s: f64, i: usize) -> Result<f64> {
    if i == 0 {
        return Ok(1.0);
    }
    let r = channel_corr(s, f_m, i as f64 * t_s)?.norm();
    Ok(r.min(1.0 - VARRHO_EPS))
}
