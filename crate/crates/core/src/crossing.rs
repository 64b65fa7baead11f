//! Discrete-time level crossing rate, CDF and average outage duration of the
//! IMI process.
//!
//! With `X_l = 1{I_l >= I_th}`, `φ = P(X_l = 1)` and `φ̃ = P(X_l = X_{l-1} = 1)`.
//! The expected down-crossing rate is `(φ - φ̃)/T_s`. Conditioned on the
//! negative binomial index `K` both gains are independent
//! `Gamma(K+MN, 1-ϱ₁²)`, so with `Q_K = Q(K+MN, z₀/(1-ϱ₁²))`
//! `φ̃ = E[Q_K²]` and `φ - φ̃ = E[Q_K (1 - Q_K)]`. The second form is a sum of
//! nonnegative terms and is what the rate uses.

use std::f64::consts::LN_2;

use crate::analytics::nb::{nb_sum, Envelope};
use crate::analytics::{AntennaConfig, SnrPoint};
use crate::error::{check_finite, domain, Error, Result};
use crate::specfun::{ln_factorial, reg_lower_gamma_int, reg_upper_gamma_int, Tolerance};

/// Sorted thresholds in bits/s/Hz and the sampling period.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdGrid {
    thresholds: Vec<f64>,
    t_s: f64,
}

impl ThresholdGrid {
    pub fn new(thresholds: Vec<f64>, t_s: f64) -> Result<Self> {
        if !(t_s > 0.0 && t_s.is_finite()) {
            return Err(Error::Config(format!("sampling period must be positive, got {t_s}")));
        }
        for w in thresholds.windows(2) {
            if !(w[0] <= w[1]) {
                return Err(Error::Config("thresholds must be sorted ascending".into()));
            }
        }
        if let Some(v) = thresholds.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::Config(format!("threshold {v} must be finite and >= 0")));
        }
        Ok(Self { thresholds, t_s })
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn t_s(&self) -> f64 {
        self.t_s
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossingReport {
    pub threshold: f64,
    /// Down-crossings per second.
    pub lcr: f64,
    pub cdf: f64,
    /// Seconds; `f64::INFINITY` when the rate vanishes below a positive CDF.
    pub aod: f64,
}

/// `z₀ = M(2^{I_th} - 1)/η`
fn outage_gain(func: &'static str, threshold: f64, snr: SnrPoint, antennas: AntennaConfig) -> Result<f64> {
    check_finite(func, "threshold", threshold)?;
    if threshold < 0.0 {
        return Err(domain(func, format!("threshold must be >= 0, got {threshold}")));
    }
    Ok(antennas.m as f64 * (threshold * LN_2).exp_m1() / snr.eta())
}

fn check_varrho(func: &'static str, varrho1: f64) -> Result<()> {
    if !(0.0..1.0).contains(&varrho1) {
        return Err(domain(func, format!("varrho1 must lie in [0, 1), got {varrho1}")));
    }
    Ok(())
}

/// `P(I >= I_th) = Γ(MN, z₀)/(MN-1)!`
pub fn phi(threshold: f64, snr: SnrPoint, antennas: AntennaConfig) -> Result<f64> {
    let z = outage_gain("phi", threshold, snr, antennas)?;
    reg_upper_gamma_int(antennas.product(), z)
}

/// `P(I < I_th) = γ(MN, z₀)/(MN-1)!`
pub fn cdf(threshold: f64, snr: SnrPoint, antennas: AntennaConfig) -> Result<f64> {
    let z = outage_gain("cdf", threshold, snr, antennas)?;
    reg_lower_gamma_int(antennas.product(), z)
}

/// Walks `Q(a, z)` and `P(a, z)` upward in `a` one Poisson term at a time.
struct GammaLadder {
    a: u64,
    z: f64,
    ln_z: f64,
    q: f64,
    p: f64,
    ln_pmf: f64,
    p_anchor: f64,
}

impl GammaLadder {
    fn new(a: u64, z: f64) -> Result<Self> {
        let q = reg_upper_gamma_int(a, z)?;
        let p = reg_lower_gamma_int(a, z)?;
        let ln_z = z.ln();
        Ok(Self {
            a,
            z,
            ln_z,
            q,
            p,
            ln_pmf: -z + a as f64 * ln_z - ln_factorial(a),
            p_anchor: p,
        })
    }

    fn step(&mut self) -> Result<()> {
        if self.z == 0.0 {
            self.a += 1;
            return Ok(());
        }
        let pmf = self.ln_pmf.exp();
        self.q = (self.q + pmf).min(1.0);
        self.p -= pmf;
        self.a += 1;
        self.ln_pmf += self.ln_z - (self.a as f64).ln();
        // P shrinks by subtraction; re-anchor before cancellation bites
        if self.p < 1e-3 * self.p_anchor || self.p <= 0.0 {
            self.p = reg_lower_gamma_int(self.a, self.z)?;
            self.p_anchor = self.p;
        }
        Ok(())
    }
}

fn ladder_sum<G>(what: &'static str, z0: f64, antennas: AntennaConfig, varrho1: f64, tol: &Tolerance, env: Envelope, g: G) -> Result<f64>
where
    G: Fn(f64, f64) -> f64,
{
    let mn = antennas.product();
    let t = varrho1 * varrho1;
    let mut ladder = GammaLadder::new(mn, z0 / (1.0 - t))?;
    nb_sum(what, mn, t, tol, env, |k, _| {
        if k > 0 {
            ladder.step()?;
        }
        Ok(g(ladder.q, ladder.p))
    })
}

/// `φ̃ = P(I_l >= I_th, I_{l-1} >= I_th)` for lag-one channel correlation `ϱ₁`.
pub fn varphi(threshold: f64, snr: SnrPoint, antennas: AntennaConfig, varrho1: f64, tol: &Tolerance) -> Result<f64> {
    check_varrho("varphi", varrho1)?;
    let z0 = outage_gain("varphi", threshold, snr, antennas)?;
    let v = ladder_sum("joint exceedance series", z0, antennas, varrho1, tol, Envelope::Bounded(1.0), |q, _| q * q)?;
    Ok(v.clamp(0.0, 1.0))
}

/// `φ - φ̃`, the probability of a down-crossing between two samples.
fn down_crossing_prob(z0: f64, antennas: AntennaConfig, varrho1: f64, tol: &Tolerance) -> Result<f64> {
    let v = ladder_sum("down-crossing series", z0, antennas, varrho1, tol, Envelope::Bounded(0.25), |q, p| q * p)?;
    Ok(v.max(0.0))
}

/// Expected down-crossings per second, `(φ - φ̃)/T_s`.
pub fn lcr(threshold: f64, snr: SnrPoint, antennas: AntennaConfig, varrho1: f64, t_s: f64, tol: &Tolerance) -> Result<f64> {
    check_varrho("lcr", varrho1)?;
    if !(t_s > 0.0 && t_s.is_finite()) {
        return Err(domain("lcr", format!("sampling period must be positive, got {t_s}")));
    }
    let z0 = outage_gain("lcr", threshold, snr, antennas)?;
    Ok(down_crossing_prob(z0, antennas, varrho1, tol)? / t_s)
}

fn ratio(cdf: f64, lcr: f64) -> f64 {
    if cdf == 0.0 {
        0.0
    } else if lcr == 0.0 {
        f64::INFINITY
    } else {
        cdf / lcr
    }
}

/// Average outage duration `cdf/lcr` in seconds.
pub fn aod(threshold: f64, snr: SnrPoint, antennas: AntennaConfig, varrho1: f64, t_s: f64, tol: &Tolerance) -> Result<f64> {
    let c = cdf(threshold, snr, antennas)?;
    let r = lcr(threshold, snr, antennas, varrho1, t_s, tol)?;
    Ok(ratio(c, r))
}

pub fn crossing_report(
    threshold: f64,
    snr: SnrPoint,
    antennas: AntennaConfig,
    varrho1: f64,
    t_s: f64,
    tol: &Tolerance,
) -> Result<CrossingReport> {
    let cdf = cdf(threshold, snr, antennas)?;
    let lcr = lcr(threshold, snr, antennas, varrho1, t_s, tol)?;
    Ok(CrossingReport {
        threshold,
        lcr,
        cdf,
        aod: ratio(cdf, lcr),
    })
}

pub fn crossing_sweep(
    grid: &ThresholdGrid,
    snr: SnrPoint,
    antennas: AntennaConfig,
    varrho1: f64,
    tol: &Tolerance,
) -> Result<Vec<CrossingReport>> {
    grid.thresholds
        .iter()
        .map(|&th| crossing_report(th, snr, antennas, varrho1, grid.t_s, tol))
        .collect()
}

/// `e^{-(2^{I_th}-1)/η}`
pub fn siso_phi(threshold: f64, snr: SnrPoint) -> Result<f64> {
    let z = outage_gain("siso_phi", threshold, snr, AntennaConfig::siso())?;
    Ok((-z).exp())
}

pub fn siso_cdf(threshold: f64, snr: SnrPoint) -> Result<f64> {
    let z = outage_gain("siso_cdf", threshold, snr, AntennaConfig::siso())?;
    Ok(-(-z).exp_m1())
}

/// SISO `φ̃` as the literal series `(1-ϱ₁²) Σ ϱ₁^{2k} (e^{-z₁} Σ_{j<=k} z₁^j/j!)²`.
pub fn siso_varphi(threshold: f64, snr: SnrPoint, varrho1: f64, tol: &Tolerance) -> Result<f64> {
    check_varrho("siso_varphi", varrho1)?;
    let z0 = outage_gain("siso_varphi", threshold, snr, AntennaConfig::siso())?;
    let t = varrho1 * varrho1;
    let z1 = z0 / (1.0 - t);
    let mut ln_pmf = -z1;
    let mut q = 0.0;
    nb_sum("SISO joint exceedance series", 1, t, tol, Envelope::Bounded(1.0), |k, _| {
        if k > 0 {
            ln_pmf += (z1 / k as f64).ln();
        }
        q = (q + ln_pmf.exp()).min(1.0);
        Ok(q * q)
    })
}

pub fn siso_lcr(threshold: f64, snr: SnrPoint, varrho1: f64, t_s: f64, tol: &Tolerance) -> Result<f64> {
    Ok((siso_phi(threshold, snr)? - siso_varphi(threshold, snr, varrho1, tol)?).max(0.0) / t_s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad;
    use crate::specfun::bessel_i0_complex_scaled;
    use num_complex::Complex64;

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    fn snr(eta: f64) -> SnrPoint {
        SnrPoint::linear(eta).unwrap()
    }

    fn ant(m: u32, n: u32) -> AntennaConfig {
        AntennaConfig::new(m, n).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(ThresholdGrid::new(vec![0.0, 1.0, 1.0, 2.0], 0.01).is_ok());
        assert!(ThresholdGrid::new(vec![1.0, 0.5], 0.01).is_err());
        assert!(ThresholdGrid::new(vec![-1.0], 0.01).is_err());
        assert!(ThresholdGrid::new(vec![f64::NAN], 0.01).is_err());
        assert!(ThresholdGrid::new(vec![1.0], 0.0).is_err());
    }

    #[test]
    fn marginals() {
        assert_eq!(phi(0.0, snr(1.0), ant(2, 2)).unwrap(), 1.0);
        assert_eq!(cdf(0.0, snr(1.0), ant(2, 2)).unwrap(), 0.0);
        assert!((siso_phi(1.0, snr(1.0)).unwrap() - (-1.0f64).exp()).abs() < 1e-15);
        // Γ(4,2)/3! = e^{-2}(1 + 2 + 2 + 4/3)
        let want = (-2.0f64).exp() * (1.0 + 2.0 + 2.0 + 4.0 / 3.0);
        assert!((phi(1.0, snr(1.0), ant(2, 2)).unwrap() - want).abs() < 1e-14);
        assert!((want - 0.857_123_460_498_547).abs() < 1e-12);
        assert!((cdf(40.0, snr(1.0), ant(1, 1)).unwrap() - 1.0).abs() < 1e-15);
        let a = ant(2, 3);
        let mut prev = 0.0;
        for i in 0..=40 {
            let th = 0.25 * i as f64;
            let c = cdf(th, snr(10.0), a).unwrap();
            assert!((c + phi(th, snr(10.0), a).unwrap() - 1.0).abs() < 1e-14);
            assert!(c >= prev);
            prev = c;
        }
        assert!(phi(-0.1, snr(1.0), a).is_err());
    }

    #[test]
    fn varphi_limits() {
        let t = tol();
        for (a, eta, th) in [(ant(1, 1), 1.0, 1.0), (ant(2, 2), 10.0, 4.0), (ant(4, 4), 3.0, 2.5)] {
            let p = phi(th, snr(eta), a).unwrap();
            assert_eq!(varphi(th, snr(eta), a, 0.0, &t).unwrap(), p * p);
            let near = varphi(th, snr(eta), a, 0.9999, &t.with_max_terms(10_000_000)).unwrap();
            assert!(near <= p && near > 0.99 * p, "{near} vs {p}");
            // the gap closes like sqrt(1 - ϱ₁²); 1e-3 is reached one decade further
            let nearer = varphi(th, snr(eta), a, 0.999_999, &t.with_max_terms(100_000_000)).unwrap();
            assert!((nearer - p).abs() < 1e-3, "{nearer} vs {p}");
        }
        assert!(varphi(1.0, snr(1.0), ant(1, 1), 1.0, &t).is_err());
    }

    #[test]
    fn varphi_against_double_integral() {
        // P(y₁ > z, y₂ > z) for unit exponentials with correlation t:
        // p(x, y) = e^{-(x+y)/(1-t)} I₀(2√(txy)/(1-t)) / (1-t)
        let t = 0.25f64;
        let z = 1.0;
        let q = Tolerance::default();
        let inner = |x: f64| -> f64 {
            let f = |y: f64| {
                let arg = 2.0 * (t * x * y).sqrt() / (1.0 - t);
                let i0s = bessel_i0_complex_scaled(Complex64::new(arg, 0.0)).unwrap().re;
                (arg - (x + y) / (1.0 - t)).exp() * i0s / (1.0 - t)
            };
            quad::integrate_outward(f, z, 1.0, z, &q).unwrap()
        };
        let oracle = quad::integrate_outward(inner, z, 1.0, z, &q).unwrap();
        assert!((oracle - 0.171_348_620_778_073_4).abs() < 1e-9, "{oracle}");
        let v = varphi(1.0, snr(1.0), ant(1, 1), 0.5, &tol()).unwrap();
        assert!((v - oracle).abs() < 1e-6);
        assert!((v - 0.171_348_620_778_073_4).abs() < 1e-12, "{v}");
    }

    #[test]
    fn siso_equals_ostbc_one_by_one() {
        let t = tol();
        for eta in [0.1, 1.0, 10.0, 1000.0] {
            for th in [0.0, 0.5, 2.0, 6.0] {
                for v in [0.0, 0.3, 0.9, 0.99] {
                    let s = snr(eta);
                    let a = AntennaConfig::siso();
                    assert!((siso_phi(th, s).unwrap() - phi(th, s, a).unwrap()).abs() < 1e-12);
                    assert!((siso_cdf(th, s).unwrap() - cdf(th, s, a).unwrap()).abs() < 1e-12);
                    let x = siso_varphi(th, s, v, &t).unwrap();
                    let y = varphi(th, s, a, v, &t).unwrap();
                    assert!((x - y).abs() < 1e-12, "eta={eta} th={th} v={v}: {x} vs {y}");
                    // the SISO rate subtracts, so its truncation must be tighter
                    let x = siso_lcr(th, s, v, 1.0, &Tolerance::new(1e-16, 1e-300, 10_000_000, 60).unwrap()).unwrap();
                    let y = lcr(th, s, a, v, 1.0, &t).unwrap();
                    assert!((x - y).abs() < 1e-12, "lcr eta={eta} th={th} v={v}: {x} vs {y}");
                }
            }
        }
    }

    #[test]
    fn rate_properties() {
        let t = tol();
        let ts = 0.005;
        for a in [ant(1, 1), ant(2, 2), ant(3, 2)] {
            for eta in [1.0, 10.0] {
                let s = snr(eta);
                for th in [0.3, 1.0, 3.0] {
                    let p = phi(th, s, a).unwrap();
                    let r0 = lcr(th, s, a, 0.0, ts, &t).unwrap();
                    assert!((r0 - p * (1.0 - p) / ts).abs() < 1e-9 * r0.max(1.0));
                    for v in [0.2, 0.7, 0.95] {
                        let vp = varphi(th, s, a, v, &t).unwrap();
                        assert!(vp >= p * p * (1.0 - 1e-9) && vp <= p + 1e-15, "{vp} vs {p}");
                        let r = lcr(th, s, a, v, ts, &t).unwrap();
                        assert!(r >= 0.0);
                        assert!((r * ts - (p - vp)).abs() < 1e-10, "th={th} v={v}");
                        let rep = crossing_report(th, s, a, v, ts, &t).unwrap();
                        assert!((rep.aod * rep.lcr - rep.cdf).abs() <= 1e-12 * rep.cdf.max(1e-300));
                    }
                    // y₂ - y₁ ≈ N(0, 2y(1-ϱ₁²)) near ϱ₁ = 1, so the crossing
                    // probability approaches f_Y(z₀)·sqrt(z₀(1-ϱ₁²)/π)
                    let v = 0.9999f64;
                    let z0 = a.m as f64 * (th * LN_2).exp_m1() / eta;
                    let mn = a.product();
                    let pdf = ((mn - 1) as f64 * z0.ln() - z0 - ln_factorial(mn - 1)).exp();
                    let want = pdf * (z0 * (1.0 - v * v) / std::f64::consts::PI).sqrt();
                    let near = lcr(th, s, a, v, ts, &t.with_max_terms(10_000_000)).unwrap() * ts;
                    assert!((near / want - 1.0).abs() < 0.05, "th={th} eta={eta}: {near} vs {want}");
                }
            }
        }
    }

    #[test]
    fn aod_edges() {
        let t = tol();
        assert_eq!(aod(0.0, snr(10.0), ant(1, 1), 0.9, 0.005, &t).unwrap(), 0.0);
        assert_eq!(ratio(0.3, 0.0), f64::INFINITY);
        assert_eq!(ratio(0.0, 0.0), 0.0);
    }

    #[test]
    fn clarke_siso_lcr_sweep() {
        // η = 10 dB, f_m = 10 Hz, T_s = 1/200 s
        let t = tol();
        let s = SnrPoint::from_db(10.0).unwrap();
        let a = AntennaConfig::siso();
        let v1 = crate::specfun::bessel_j0(2.0 * std::f64::consts::PI * 10.0 / 200.0).unwrap();
        let ths: Vec<f64> = (1..=80).map(|i| 0.1 * i as f64).collect();
        let grid = ThresholdGrid::new(ths, 1.0 / 200.0).unwrap();
        let rows = crossing_sweep(&grid, s, a, v1, &t).unwrap();
        let peak = rows.iter().enumerate().max_by(|x, y| x.1.lcr.total_cmp(&y.1.lcr)).unwrap().0;
        // unimodal
        assert!(rows[..=peak].windows(2).all(|w| w[0].lcr <= w[1].lcr));
        assert!(rows[peak..].windows(2).all(|w| w[0].lcr >= w[1].lcr));
        let mean = crate::analytics::siso_mean(s).unwrap();
        assert!((rows[peak].threshold - mean).abs() < 0.5, "{} vs {mean}", rows[peak].threshold);
        assert!((rows[peak].lcr - CLARKE_PEAK_LCR).abs() < 1e-9, "{:.17}", rows[peak].lcr);
        for r in &rows {
            if r.aod.is_finite() {
                assert!((r.aod * r.lcr - r.cdf).abs() <= 1e-12 * r.cdf);
            }
        }
    }

    const CLARKE_PEAK_LCR: f64 = 10.694_388_462_729_435;
}
