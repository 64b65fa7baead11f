//! Spectral-method synthesis of correlated Rayleigh fading.
//!
//! A frequency grid of `oversample·L` bins spanning `1/T_s` is filled with
//! circular complex Gaussians scaled by the square root of the Doppler
//! spectrum integrated over each bin. One inverse FFT gives a stationary
//! sequence whose autocorrelation is the Fourier pair of that spectrum; the
//! first `L` samples are kept and renormalized to unit power.

use std::io::{Read, Write};
use std::sync::Arc;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::analytics::AntennaConfig;
use crate::channel::{DopplerGrid, DopplerIntegrator, ScatteringScenario};
use crate::error::{Error, Result};

/// Largest frequency grid (in bytes of complex samples) a single trace may use.
pub const MAX_GRID_BYTES: usize = 3 << 30;

/// Grids above this size are generated one subchannel at a time.
const PARALLEL_GRID_BYTES: usize = 256 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimConfig {
    pub num_samples: usize,
    pub seed: u64,
    pub oversample: usize,
}

impl SimConfig {
    pub fn new(num_samples: usize, seed: u64) -> Self {
        Self {
            num_samples,
            seed,
            oversample: 8,
        }
    }

    pub fn with_oversample(mut self, oversample: usize) -> Self {
        self.oversample = oversample;
        self
    }

    fn grid_len(&self) -> Result<usize> {
        if self.num_samples < 2 {
            return Err(Error::Config(format!("num_samples must be >= 2, got {}", self.num_samples)));
        }
        if self.oversample == 0 {
            return Err(Error::Config("oversample must be >= 1".into()));
        }
        let n = self
            .num_samples
            .checked_mul(self.oversample)
            .filter(|n| n.checked_mul(16).is_some_and(|b| b <= MAX_GRID_BYTES))
            .ok_or_else(|| {
                Error::Resource(format!(
                    "frequency grid of {} x {} samples exceeds {} bytes",
                    self.num_samples, self.oversample, MAX_GRID_BYTES
                ))
            })?;
        Ok(n)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FadingTrace {
    pub samples: Vec<Complex64>,
    pub t_s: f64,
}

impl FadingTrace {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn mean_power(&self) -> f64 {
        self.samples.iter().map(|h| h.norm_sqr()).sum::<f64>() / self.samples.len() as f64
    }

    /// `|h|²` per sample.
    pub fn gains(&self) -> Vec<f64> {
        self.samples.iter().map(|h| h.norm_sqr()).collect()
    }
}

/// Reusable generator for one (scenario, grid, config): the bin amplitudes
/// and FFT plan are built once and shared by every realization and
/// subchannel.
pub struct Simulator {
    cfg: SimConfig,
    t_s: f64,
    grid_len: usize,
    // (bin index, √mass)
    shaper: Vec<(usize, f64)>,
    fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Simulator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Simulator")
            .field("cfg", &self.cfg)
            .field("t_s", &self.t_s)
            .field("grid_len", &self.grid_len)
            .field("active_bins", &self.shaper.len())
            .finish()
    }
}

impl Simulator {
    pub fn new(s: &ScatteringScenario, grid: &DopplerGrid, cfg: SimConfig) -> Result<Self> {
        let fd = grid.normalized_doppler();
        if fd >= 0.5 {
            return Err(Error::Config(format!(
                "f_m*T_s = {fd} violates the Nyquist condition f_m*T_s < 0.5"
            )));
        }
        let n = cfg.grid_len()?;
        let delta = 1.0 / (n as f64 * grid.t_s);
        let integrator = DopplerIntegrator::new(s, grid.f_m);
        // bins m·Δ with |m·Δ| - Δ/2 < f_m carry mass
        let m_max = (grid.f_m / delta + 0.5).ceil() as i64;
        let mut shaper = Vec::with_capacity(2 * m_max as usize + 1);
        for m in -m_max..=m_max {
            let lo = (m as f64 - 0.5) * delta;
            let hi = (m as f64 + 0.5) * delta;
            let mass = integrator.mass(lo, hi);
            if mass > 0.0 {
                shaper.push((m.rem_euclid(n as i64) as usize, mass.sqrt()));
            }
        }
        shaper.sort_by_key(|&(k, _)| k);
        let fft = FftPlanner::new().plan_fft_inverse(n);
        Ok(Self {
            cfg,
            t_s: grid.t_s,
            grid_len: n,
            shaper,
            fft,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    /// Trace for one (realization, subchannel) substream.
    pub fn trace(&self, realization: u32, subchannel: u32) -> Result<FadingTrace> {
        let mut rng = ChaCha12Rng::seed_from_u64(self.cfg.seed);
        rng.set_stream(((realization as u64) << 32) | subchannel as u64);

        let mut buf = Vec::new();
        buf.try_reserve_exact(self.grid_len)
            .map_err(|e| Error::Resource(format!("frequency grid allocation: {e}")))?;
        buf.resize(self.grid_len, Complex64::new(0.0, 0.0));
        let scale = std::f64::consts::FRAC_1_SQRT_2;
        for &(k, amp) in &self.shaper {
            let g1: f64 = StandardNormal.sample(&mut rng);
            let g2: f64 = StandardNormal.sample(&mut rng);
            buf[k] = Complex64::new(g1, g2) * (amp * scale);
        }
        self.fft.process(&mut buf);
        buf.truncate(self.cfg.num_samples);
        buf.shrink_to_fit();

        let power = buf.iter().map(|h| h.norm_sqr()).sum::<f64>() / buf.len() as f64;
        if !(power > 0.0 && power.is_finite()) {
            return Err(Error::Config("generated trace has zero or non-finite power".into()));
        }
        let norm = power.sqrt().recip();
        for h in &mut buf {
            *h *= norm;
        }
        Ok(FadingTrace {
            samples: buf,
            t_s: self.t_s,
        })
    }

    /// One trace per subchannel of `antennas`, for the given realization.
    pub fn mimo_traces(&self, antennas: AntennaConfig, realization: u32) -> Result<Vec<FadingTrace>> {
        let count = antennas.product() as u32;
        if self.grid_len * 16 > PARALLEL_GRID_BYTES {
            (0..count).map(|c| self.trace(realization, c)).collect()
        } else {
            (0..count).into_par_iter().map(|c| self.trace(realization, c)).collect()
        }
    }
}

pub fn generate_trace(s: &ScatteringScenario, grid: &DopplerGrid, cfg: SimConfig) -> Result<FadingTrace> {
    Simulator::new(s, grid, cfg)?.trace(0, 0)
}

/// `M·N` independent subchannel traces from substreams `0..M·N`.
pub fn generate_mimo_traces(
    s: &ScatteringScenario,
    grid: &DopplerGrid,
    cfg: SimConfig,
    antennas: AntennaConfig,
) -> Result<Vec<FadingTrace>> {
    Simulator::new(s, grid, cfg)?.mimo_traces(antennas, 0)
}

const MAGIC: &[u8; 4] = b"FADT";
const VERSION: u32 = 1;
const HEADER_LEN: usize = 32;

/// Writes the binary dump: 32-byte header then interleaved little-endian
/// `f64` (re, im) pairs.
pub fn write_trace<W: Write>(mut w: W, trace: &FadingTrace, f_m: f64) -> Result<()> {
    let mut header = [0u8; HEADER_LEN];
    header[0..4].copy_from_slice(MAGIC);
    header[4..8].copy_from_slice(&VERSION.to_le_bytes());
    header[8..16].copy_from_slice(&(trace.samples.len() as u64).to_le_bytes());
    header[16..24].copy_from_slice(&trace.t_s.to_le_bytes());
    header[24..32].copy_from_slice(&f_m.to_le_bytes());
    w.write_all(&header)?;
    let mut chunk = Vec::with_capacity(16 * 4096);
    for block in trace.samples.chunks(4096) {
        chunk.clear();
        for h in block {
            chunk.extend_from_slice(&h.re.to_le_bytes());
            chunk.extend_from_slice(&h.im.to_le_bytes());
        }
        w.write_all(&chunk)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a dump written by [`write_trace`]; returns the trace and `f_m`.
pub fn read_trace<R: Read>(mut r: R) -> Result<(FadingTrace, f64)> {
    let mut header = [0u8; HEADER_LEN];
    r.read_exact(&mut header)
        .map_err(|e| Error::Format(format!("truncated header: {e}")))?;
    if &header[0..4] != MAGIC {
        return Err(Error::Format("bad magic, expected FADT".into()));
    }
    let version = u32::from_le_bytes(header[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let len = u64::from_le_bytes(header[8..16].try_into().unwrap());
    let t_s = f64::from_le_bytes(header[16..24].try_into().unwrap());
    let f_m = f64::from_le_bytes(header[24..32].try_into().unwrap());
    if !(t_s > 0.0 && t_s.is_finite()) || !(f_m > 0.0 && f_m.is_finite()) {
        return Err(Error::Format(format!("invalid T_s={t_s} or f_m={f_m} in header")));
    }
    let len = usize::try_from(len)
        .ok()
        .filter(|&n| n.checked_mul(16).is_some_and(|b| b <= MAX_GRID_BYTES))
        .ok_or_else(|| Error::Format(format!("sample count {len} in header is implausible")))?;
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != 16 * len {
        return Err(Error::Format(format!(
            "header announces {len} samples but payload holds {} bytes",
            bytes.len()
        )));
    }
    let samples = bytes
        .chunks_exact(16)
        .map(|c| {
            Complex64::new(
                f64::from_le_bytes(c[0..8].try_into().unwrap()),
                f64::from_le_bytes(c[8..16].try_into().unwrap()),
            )
        })
        .collect::<Vec<_>>();
    if samples.iter().any(|h| !h.re.is_finite() || !h.im.is_finite()) {
        return Err(Error::Format("non-finite sample in payload".into()));
    }
    Ok((FadingTrace { samples, t_s }, f_m))
}
