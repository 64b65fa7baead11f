//! Empirical counterparts of the closed forms, computed on simulated traces.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::analytics::{
    imi_sample_ostbc, ostbc_coeff_exact, ostbc_nacf_exact, AntennaConfig, LagContext, Regime, SnrPoint, StatKind,
    StatSeries,
};
use crate::channel::{varrho, DopplerGrid, ScatteringScenario};
use crate::crossing::{crossing_report, ThresholdGrid};
use crate::error::{Error, Result};
use crate::sim::{FadingTrace, SimConfig, Simulator};
use crate::specfun::Tolerance;

/// Down-crossings needed before an empirical outage duration is trusted.
pub const MIN_DOWN_CROSSINGS: u64 = 10;

/// Expected event count above which crossing rows are gated.
pub const MIN_EXPECTED_EVENTS: f64 = 100.0;

/// Decorrelation intervals (`L·R·f_m·T_s`) above which lag rows are gated.
pub const MIN_COHERENCE_BLOCKS: f64 = 10_000.0;

/// Realizations run in parallel only while one frequency grid stays below this.
const PARALLEL_GRID_BYTES: usize = 256 << 20;

#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalConfig {
    pub num_samples: usize,
    pub num_realizations: u32,
    pub seed: u64,
    pub lags: Vec<usize>,
    pub thresholds: ThresholdGrid,
    pub oversample: usize,
}

impl EmpiricalConfig {
    pub fn new(num_samples: usize, num_realizations: u32, seed: u64, lags: Vec<usize>, thresholds: ThresholdGrid) -> Result<Self> {
        let max_lag = lags.iter().copied().max().unwrap_or(0);
        if num_samples < max_lag + 2 {
            return Err(Error::Config(format!(
                "num_samples = {num_samples} must be at least max lag + 2 = {}",
                max_lag + 2
            )));
        }
        if num_realizations == 0 {
            return Err(Error::Config("num_realizations must be >= 1".into()));
        }
        Ok(Self {
            num_samples,
            num_realizations,
            seed,
            lags,
            thresholds,
            oversample: SimConfig::new(num_samples, seed).oversample,
        })
    }

    pub fn with_oversample(mut self, oversample: usize) -> Self {
        self.oversample = oversample;
        self
    }

    fn sim_config(&self) -> SimConfig {
        SimConfig::new(self.num_samples, self.seed).with_oversample(self.oversample)
    }
}

/// `log₂(1 + (η/M) Σ|h|²)` per sample across the `M·N` subchannel traces.
pub fn empirical_imi(traces: &[FadingTrace], snr: SnrPoint, antennas: AntennaConfig) -> Result<Vec<f64>> {
    if traces.len() as u64 != antennas.product() {
        return Err(Error::Config(format!(
            "{} traces supplied for M*N = {}",
            traces.len(),
            antennas.product()
        )));
    }
    let len = traces[0].len();
    if traces.iter().any(|t| t.len() != len) {
        return Err(Error::Config("subchannel traces differ in length".into()));
    }
    (0..len)
        .map(|l| imi_sample_ostbc(traces.iter().map(|t| t.samples[l].norm_sqr()).sum(), snr, antennas))
        .collect()
}

fn check_lags(imi: &[f64], lags: &[usize]) -> Result<()> {
    if let Some(&i) = lags.iter().find(|&&i| i >= imi.len()) {
        return Err(Error::Config(format!("lag {i} needs more than {} samples", imi.len())));
    }
    Ok(())
}

/// `(1/(L-i)) Σ_l x_l x_{l-i}`
fn lagged_mean(x: &[f64], i: usize) -> f64 {
    let n = x.len() - i;
    x[i..].iter().zip(x).map(|(a, b)| a * b).sum::<f64>() / n as f64
}

/// Sample `E[I_l I_{l-i}]`.
pub fn empirical_acf(imi: &[f64], lags: &[usize]) -> Result<StatSeries> {
    check_lags(imi, lags)?;
    let values = lags.iter().map(|&i| lagged_mean(imi, i)).collect();
    StatSeries::new(lags.to_vec(), values, StatKind::Acf, Regime::Empirical)
}

/// Sample autocovariance over sample variance. `None` when the sequence is
/// constant.
pub fn empirical_coeff(imi: &[f64], lags: &[usize]) -> Result<Option<StatSeries>> {
    check_lags(imi, lags)?;
    let mean = imi.iter().sum::<f64>() / imi.len() as f64;
    let centered: Vec<f64> = imi.iter().map(|v| v - mean).collect();
    let var = lagged_mean(&centered, 0);
    if !(var > 0.0) {
        return Ok(None);
    }
    let values = lags
        .iter()
        .map(|&i| if i == 0 { 1.0 } else { (lagged_mean(&centered, i) / var).clamp(-1.0, 1.0) })
        .collect();
    StatSeries::new(lags.to_vec(), values, StatKind::Coeff, Regime::Empirical).map(Some)
}

/// Sample `E[h_l h*_{l-i}]` of one complex trace.
pub fn complex_autocorr(trace: &FadingTrace, lags: &[usize]) -> Result<Vec<Complex64>> {
    let h = &trace.samples;
    if let Some(&i) = lags.iter().find(|&&i| i >= h.len()) {
        return Err(Error::Config(format!("lag {i} needs more than {} samples", h.len())));
    }
    Ok(lags
        .iter()
        .map(|&i| {
            let n = h.len() - i;
            h[i..].iter().zip(h).map(|(a, b)| a * b.conj()).sum::<Complex64>() / n as f64
        })
        .collect())
}

/// Raw counts behind the crossing estimates, poolable across realizations.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CrossingCounts {
    /// `1 -> 0` transitions of `X_l = 1{I_l >= I_th}`.
    pub down: u64,
    /// `Σ_{l>=2} (X_l - X_{l-1})²`
    pub transitions: u64,
    pub below: u64,
    pub samples: u64,
}

impl CrossingCounts {
    pub fn count(imi: &[f64], threshold: f64) -> Result<Self> {
        if imi.len() < 2 {
            return Err(Error::Config(format!("crossing counts need L >= 2, got {}", imi.len())));
        }
        let mut c = Self {
            samples: imi.len() as u64,
            ..Self::default()
        };
        let mut prev = imi[0] >= threshold;
        c.below += !prev as u64;
        for &v in &imi[1..] {
            let x = v >= threshold;
            c.below += !x as u64;
            if x != prev {
                c.transitions += 1;
                c.down += prev as u64;
            }
            prev = x;
        }
        Ok(c)
    }

    fn add(mut self, o: Self) -> Self {
        self.down += o.down;
        self.transitions += o.transitions;
        self.below += o.below;
        self.samples += o.samples;
        self
    }

    fn pairs(&self, realizations: u64) -> u64 {
        self.samples - realizations
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossingEstimate {
    pub threshold: f64,
    pub counts: CrossingCounts,
    /// Down-crossings per second.
    pub down_rate: f64,
    /// Up- plus down-crossings per second.
    pub total_rate: f64,
    pub time_below_frac: f64,
    /// Seconds below the threshold per down-crossing.
    pub aod_hat: f64,
    /// At least [`MIN_DOWN_CROSSINGS`] down-crossings were seen.
    pub reliable: bool,
}

impl CrossingEstimate {
    fn from_counts(threshold: f64, c: CrossingCounts, realizations: u64, t_s: f64) -> Self {
        let span = c.pairs(realizations) as f64 * t_s;
        let below = c.below as f64 / c.samples as f64;
        Self {
            threshold,
            counts: c,
            down_rate: c.down as f64 / span,
            total_rate: c.transitions as f64 / span,
            time_below_frac: below,
            aod_hat: c.below as f64 * t_s / c.down.max(1) as f64,
            reliable: c.down >= MIN_DOWN_CROSSINGS,
        }
    }
}

pub fn empirical_crossings(imi: &[f64], threshold: f64, t_s: f64) -> Result<CrossingEstimate> {
    if !(t_s > 0.0 && t_s.is_finite()) {
        return Err(Error::Config(format!("sampling period must be positive, got {t_s}")));
    }
    let c = CrossingCounts::count(imi, threshold)?;
    Ok(CrossingEstimate::from_counts(threshold, c, 1, t_s))
}

/// One-sample Kolmogorov-Smirnov statistic of `|h|` against the unit-power
/// Rayleigh law `F(r) = 1 - e^{-r²}`, and its asymptotic p-value.
pub fn ks_rayleigh(envelope: &[f64]) -> Result<(f64, f64)> {
    if envelope.is_empty() {
        return Err(Error::Config("KS test needs at least one sample".into()));
    }
    let mut r = envelope.to_vec();
    r.sort_by(f64::total_cmp);
    let n = r.len() as f64;
    let mut d = 0.0_f64;
    for (i, &x) in r.iter().enumerate() {
        let f = -(-x * x).exp_m1();
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    Ok((d, kolmogorov_sf((n.sqrt() + 0.12 + 0.11 / n.sqrt()) * d)))
}

/// `P(K > x) = 2 Σ (-1)^{j-1} e^{-2j²x²}` for the Kolmogorov distribution.
fn kolmogorov_sf(x: f64) -> f64 {
    if x < 0.2 {
        return 1.0;
    }
    let mut s = 0.0;
    for j in 1..=100 {
        let jf = j as f64;
        let term = (-2.0 * jf * jf * x * x).exp();
        s += if j % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quantity {
    Nacf,
    Coeff,
    Lcr,
    Cdf,
    Aod,
}

impl Quantity {
    pub fn name(&self) -> &'static str {
        match self {
            Quantity::Nacf => "nacf",
            Quantity::Coeff => "coeff",
            Quantity::Lcr => "lcr",
            Quantity::Cdf => "cdf",
            Quantity::Aod => "aod",
        }
    }
}

/// Empirical estimates at one SNR, pooled over realizations.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalSummary {
    pub snr: SnrPoint,
    pub lags: Vec<usize>,
    /// Realization-averaged `E[I_l I_{l-i}]/E[I²]`.
    pub nacf: Vec<f64>,
    /// Realization-averaged correlation coefficient; NaN if every
    /// realization was degenerate.
    pub coeff: Vec<f64>,
    pub crossings: Vec<CrossingEstimate>,
    pub num_samples: usize,
    pub realizations: u32,
    /// `L·R·f_m·T_s`
    pub coherence_blocks: f64,
}

struct RealizationStats {
    nacf: Vec<Vec<f64>>,
    coeff: Vec<Option<Vec<f64>>>,
    counts: Vec<Vec<CrossingCounts>>,
}

fn realization_stats(
    traces: &[FadingTrace],
    snrs: &[SnrPoint],
    antennas: AntennaConfig,
    lags: &[usize],
    thresholds: &[f64],
) -> Result<RealizationStats> {
    let mut out = RealizationStats {
        nacf: Vec::new(),
        coeff: Vec::new(),
        counts: Vec::new(),
    };
    for &snr in snrs {
        let imi = empirical_imi(traces, snr, antennas)?;
        let acf = empirical_acf(&imi, lags)?;
        let power = lagged_mean(&imi, 0);
        out.nacf.push(acf.values.iter().map(|v| v / power).collect());
        out.coeff.push(empirical_coeff(&imi, lags)?.map(|s| s.values));
        out.counts.push(thresholds.iter().map(|&th| CrossingCounts::count(&imi, th)).collect::<Result<_>>()?);
    }
    Ok(out)
}

fn pool(
    per_real: &[RealizationStats],
    snrs: &[SnrPoint],
    lags: &[usize],
    thresholds: &[f64],
    num_samples: usize,
    t_s: f64,
    f_m: f64,
) -> Vec<EmpiricalSummary> {
    let r_count = per_real.len() as u64;
    let nl = lags.len();
    let mut out = Vec::with_capacity(snrs.len());
    for (si, &snr) in snrs.iter().enumerate() {
        let mut nacf = vec![0.0; nl];
        let mut coeff = vec![0.0; nl];
        let mut good = 0usize;
        for rs in per_real {
            for (a, v) in nacf.iter_mut().zip(&rs.nacf[si]) {
                *a += v;
            }
            if let Some(c) = &rs.coeff[si] {
                good += 1;
                for (a, v) in coeff.iter_mut().zip(c) {
                    *a += v;
                }
            }
        }
        nacf.iter_mut().for_each(|v| *v /= per_real.len() as f64);
        coeff.iter_mut().for_each(|v| *v = if good > 0 { *v / good as f64 } else { f64::NAN });
        let crossings = thresholds
            .iter()
            .enumerate()
            .map(|(ti, &th)| {
                let c = per_real.iter().fold(CrossingCounts::default(), |acc, rs| acc.add(rs.counts[si][ti]));
                CrossingEstimate::from_counts(th, c, r_count, t_s)
            })
            .collect();
        out.push(EmpiricalSummary {
            snr,
            lags: lags.to_vec(),
            nacf,
            coeff,
            crossings,
            num_samples,
            realizations: r_count as u32,
            coherence_blocks: (num_samples as u64 * r_count) as f64 * f_m * t_s,
        });
    }
    out
}

/// Simulates `cfg.num_realizations` independent runs and pools the
/// estimators for every SNR. Deterministic for a given seed.
pub fn empirical_run(
    scenario: &ScatteringScenario,
    grid: &DopplerGrid,
    snrs: &[SnrPoint],
    antennas: AntennaConfig,
    cfg: &EmpiricalConfig,
) -> Result<Vec<EmpiricalSummary>> {
    if (cfg.thresholds.t_s() - grid.t_s).abs() > 1e-15 * grid.t_s {
        return Err(Error::Config("threshold grid and Doppler grid disagree on T_s".into()));
    }
    let sim = Simulator::new(scenario, grid, cfg.sim_config())?;
    let grid_bytes = cfg.num_samples.saturating_mul(cfg.oversample).saturating_mul(16);
    let ths = cfg.thresholds.thresholds();
    let run = |r| realization_stats(&sim.mimo_traces(antennas, r)?, snrs, antennas, &cfg.lags, ths);
    let per_real: Vec<RealizationStats> = if grid_bytes <= PARALLEL_GRID_BYTES {
        (0..cfg.num_realizations).into_par_iter().map(run).collect::<Result<_>>()?
    } else {
        (0..cfg.num_realizations).map(run).collect::<Result<_>>()?
    };
    Ok(pool(&per_real, snrs, &cfg.lags, ths, cfg.num_samples, grid.t_s, grid.f_m))
}

/// The estimators of [`empirical_run`] on given traces, one `Vec` of `M·N`
/// subchannel traces per realization.
pub fn empirical_from_traces(
    realizations: &[Vec<FadingTrace>],
    snrs: &[SnrPoint],
    antennas: AntennaConfig,
    lags: &[usize],
    thresholds: &ThresholdGrid,
    f_m: f64,
) -> Result<Vec<EmpiricalSummary>> {
    let first = realizations
        .first()
        .and_then(|r| r.first())
        .ok_or_else(|| Error::Config("no traces supplied".into()))?;
    let (len, t_s) = (first.len(), first.t_s);
    if realizations.iter().flatten().any(|t| t.len() != len || t.t_s != t_s) {
        return Err(Error::Config("traces differ in length or sampling period".into()));
    }
    if (thresholds.t_s() - t_s).abs() > 1e-15 * t_s {
        return Err(Error::Config(format!(
            "traces are sampled at T_s = {t_s}, the threshold grid at {}",
            thresholds.t_s()
        )));
    }
    let max_lag = lags.iter().copied().max().unwrap_or(0);
    if len < max_lag + 2 {
        return Err(Error::Config(format!("traces of {len} samples are too short for lag {max_lag}")));
    }
    let per_real = realizations
        .iter()
        .map(|r| realization_stats(r, snrs, antennas, lags, thresholds.thresholds()))
        .collect::<Result<Vec<_>>>()?;
    Ok(pool(&per_real, snrs, lags, thresholds.thresholds(), len, t_s, f_m))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonRow {
    pub quantity: Quantity,
    /// Lag for `nacf`/`coeff`, threshold in bits/s/Hz otherwise.
    pub at: f64,
    pub snr_db: f64,
    pub analytic: f64,
    pub empirical: f64,
    pub abs_err: f64,
    pub rel_err: f64,
    pub reliable: bool,
    /// Down-crossings for crossing rows, lagged products for lag rows.
    pub events: u64,
}

impl ComparisonRow {
    fn new(quantity: Quantity, at: f64, snr: SnrPoint, analytic: f64, empirical: f64, reliable: bool, events: u64) -> Self {
        let abs_err = (empirical - analytic).abs();
        let rel_err = if abs_err == 0.0 {
            0.0
        } else if analytic == 0.0 {
            f64::INFINITY
        } else {
            abs_err / analytic.abs()
        };
        Self {
            quantity,
            at,
            snr_db: snr.db(),
            analytic,
            empirical,
            abs_err,
            rel_err,
            reliable: reliable && empirical.is_finite() && analytic.is_finite(),
            events,
        }
    }
}

/// Analytic against empirical values for one SNR. See [`compare_run_multi`].
pub fn compare_run(
    scenario: &ScatteringScenario,
    grid: &DopplerGrid,
    snr: SnrPoint,
    antennas: AntennaConfig,
    cfg: &EmpiricalConfig,
    tol: &Tolerance,
) -> Result<Vec<ComparisonRow>> {
    compare_run_multi(scenario, grid, &[snr], antennas, cfg, tol)
}

/// One row per (SNR, quantity, lag or threshold), SNR-major. Lag rows are
/// reliable when the run spans [`MIN_COHERENCE_BLOCKS`] decorrelation
/// intervals; crossing rows when the analytic rate predicts more than
/// [`MIN_EXPECTED_EVENTS`] down-crossings and at least
/// [`MIN_DOWN_CROSSINGS`] were observed.
pub fn compare_run_multi(
    scenario: &ScatteringScenario,
    grid: &DopplerGrid,
    snrs: &[SnrPoint],
    antennas: AntennaConfig,
    cfg: &EmpiricalConfig,
    tol: &Tolerance,
) -> Result<Vec<ComparisonRow>> {
    let summaries = empirical_run(scenario, grid, snrs, antennas, cfg)?;
    compare_summaries(scenario, grid, antennas, &summaries, tol)
}

/// Analytic values next to already pooled estimates.
pub fn compare_summaries(
    scenario: &ScatteringScenario,
    grid: &DopplerGrid,
    antennas: AntennaConfig,
    summaries: &[EmpiricalSummary],
    tol: &Tolerance,
) -> Result<Vec<ComparisonRow>> {
    let varrho1 = varrho(scenario, grid.f_m, grid.t_s, 1)?;
    let mut rows = Vec::new();
    for s in summaries {
        // lag 0 is exactly 1 for both normalized statistics
        let ctxs = s
            .lags
            .iter()
            .map(|&i| if i == 0 { Ok(None) } else { LagContext::new(varrho(scenario, grid.f_m, grid.t_s, i)?).map(Some) })
            .collect::<Result<Vec<_>>>()?;
        let r_count = s.realizations as u64;
        let span = ((s.num_samples - 1) as u64 * r_count) as f64 * grid.t_s;
        let lag_ok = s.coherence_blocks >= MIN_COHERENCE_BLOCKS;
        for (j, &lag) in s.lags.iter().enumerate() {
            let products = (s.num_samples - lag) as u64 * r_count;
            let a = match ctxs[j] {
                Some(c) => ostbc_nacf_exact(s.snr, antennas, c, tol)?,
                None => 1.0,
            };
            rows.push(ComparisonRow::new(Quantity::Nacf, lag as f64, s.snr, a, s.nacf[j], lag_ok, products));
        }
        for (j, &lag) in s.lags.iter().enumerate() {
            let products = (s.num_samples - lag) as u64 * r_count;
            let a = match ctxs[j] {
                Some(c) => ostbc_coeff_exact(s.snr, antennas, c, tol)?,
                None => 1.0,
            };
            rows.push(ComparisonRow::new(Quantity::Coeff, lag as f64, s.snr, a, s.coeff[j], lag_ok, products));
        }
        for e in &s.crossings {
            let rep = crossing_report(e.threshold, s.snr, antennas, varrho1, grid.t_s, tol)?;
            let ok = rep.lcr * span > MIN_EXPECTED_EVENTS && e.reliable;
            let downs = e.counts.down;
            rows.push(ComparisonRow::new(Quantity::Lcr, e.threshold, s.snr, rep.lcr, e.down_rate, ok, downs));
            rows.push(ComparisonRow::new(Quantity::Cdf, e.threshold, s.snr, rep.cdf, e.time_below_frac, ok, downs));
            rows.push(ComparisonRow::new(Quantity::Aod, e.threshold, s.snr, rep.aod, e.aod_hat, ok, downs));
        }
    }
    Ok(rows)
}
