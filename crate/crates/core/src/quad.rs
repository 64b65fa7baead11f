//! Adaptive Gauss-Kronrod quadrature.
//!
//! Finite intervals use global adaptive bisection driven by the 21-point
//! Kronrod / 10-point Gauss error estimate. Semi-infinite integrals of
//! bell-shaped integrands are handled by [`integrate_outward`], which marches
//! geometrically growing panels away from the peak and stops once two panels
//! in a row contribute less than the tolerance.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::specfun::Tolerance;

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689,
    0.973_906_528_517_171_720_077_964_012_084,
    0.930_157_491_355_708_226_001_207_180_060,
    0.865_063_366_688_984_510_732_096_688_423,
    0.780_817_726_586_416_897_063_717_578_345,
    0.679_409_568_299_024_406_234_327_365_115,
    0.562_757_134_668_604_683_339_000_099_273,
    0.433_395_394_129_247_190_799_265_943_166,
    0.294_392_862_701_460_198_131_126_603_104,
    0.148_874_338_981_631_210_884_826_001_130,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062,
    0.032_558_162_307_964_727_478_818_972_459,
    0.054_755_896_574_351_996_031_381_300_245,
    0.075_039_674_810_919_952_767_043_140_916,
    0.093_125_454_583_697_605_535_065_465_083,
    0.109_387_158_802_297_641_899_210_590_326,
    0.123_491_976_262_065_851_077_600_525_533,
    0.134_709_217_311_473_325_928_054_001_772,
    0.142_775_938_577_060_080_797_094_273_139,
    0.147_739_104_901_338_491_374_841_515_972,
    0.149_445_554_002_916_905_664_936_468_390,
];

// Gauss weights for the odd-indexed Kronrod nodes.
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893,
    0.149_451_349_150_580_593_145_776_339_658,
    0.219_086_362_515_982_043_995_534_934_228,
    0.269_266_719_309_996_355_091_226_921_569,
    0.295_524_224_714_752_870_173_892_994_651,
];

/// Cap on the number of live subintervals in one adaptive integration.
const MAX_INTERVALS: usize = 4096;
/// Cap on the number of panels [`integrate_outward`] will visit on one side.
const MAX_PANELS: usize = 256;

/// One Gauss-Kronrod 21 panel: (estimate, error estimate).
fn gk21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[10];
    let mut abs_k = kronrod.abs();
    let mut gauss = 0.0;
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        kronrod += WGK[j] * (f1 + f2);
        abs_k += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * kronrod;
    let mut asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let result = kronrod * half;
    let res_abs = abs_k * half.abs();
    let res_asc = asc * half.abs();
    let mut err = ((kronrod - gauss) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    (result, err)
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
    depth: usize,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Integral of `f` over `[a, b]` with its error estimate.
///
/// Converges when the summed error estimate is below
/// `max(abs_tol, rel_tol * |I|)`. Subintervals deeper than
/// `max_quad_refinements` bisections are frozen.
pub fn integrate_with_error<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    tol: &Tolerance,
) -> Result<(f64, f64)> {
    if a == b {
        return Ok((0.0, 0.0));
    }
    let (value, err) = gk21(&f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Segment {
        a,
        b,
        value,
        err,
        depth: 0,
    });
    let mut frozen_value = 0.0;
    let mut frozen_err = 0.0;
    loop {
        let total: f64 = frozen_value + heap.iter().map(|s| s.value).sum::<f64>();
        let total_err: f64 = frozen_err + heap.iter().map(|s| s.err).sum::<f64>();
        let target = tol.abs_tol.max(tol.rel_tol * total.abs());
        if !total.is_finite() {
            return Err(Error::Accuracy {
                what: "adaptive quadrature (non-finite integrand)",
                steps: heap.len(),
                partial: total,
            });
        }
        if total_err <= target {
            return Ok((total, total_err));
        }
        let Some(worst) = heap.pop() else {
            // Everything frozen.
            return if frozen_err <= 1e3 * target {
                Ok((total, total_err))
            } else {
                Err(Error::Accuracy {
                    what: "adaptive quadrature",
                    steps: tol.max_quad_refinements,
                    partial: total,
                })
            };
        };
        if worst.depth >= tol.max_quad_refinements || heap.len() >= MAX_INTERVALS {
            frozen_value += worst.value;
            frozen_err += worst.err;
            if heap.len() >= MAX_INTERVALS {
                let partial = frozen_value + heap.iter().map(|s| s.value).sum::<f64>();
                return Err(Error::Accuracy {
                    what: "adaptive quadrature",
                    steps: MAX_INTERVALS,
                    partial,
                });
            }
            continue;
        }
        let mid = 0.5 * (worst.a + worst.b);
        let (v1, e1) = gk21(&f, worst.a, mid);
        let (v2, e2) = gk21(&f, mid, worst.b);
        heap.push(Segment {
            a: worst.a,
            b: mid,
            value: v1,
            err: e1,
            depth: worst.depth + 1,
        });
        heap.push(Segment {
            a: mid,
            b: worst.b,
            value: v2,
            err: e2,
            depth: worst.depth + 1,
        });
    }
}

/// Integral of `f` over `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: &Tolerance) -> Result<f64> {
    integrate_with_error(f, a, b, tol).map(|(v, _)| v)
}

/// Integral of `f` over `[lower, ∞)` for an integrand concentrated around
/// `center` with characteristic width `scale`.
///
/// Panels of width `scale, 2·scale, 4·scale, …` are integrated moving right
/// from `center` (and left down to `lower`). A side stops after two
/// consecutive panels whose magnitude falls below
/// `max(abs_tol, rel_tol·|running total|)`, i.e. where the envelope of the
/// integrand has become negligible.
pub fn integrate_outward<F: Fn(f64) -> f64>(
    f: F,
    center: f64,
    scale: f64,
    lower: f64,
    tol: &Tolerance,
) -> Result<f64> {
    if !(scale > 0.0) || !center.is_finite() || center < lower {
        return Err(crate::error::domain(
            "integrate_outward",
            format!("bad panel geometry center={center} scale={scale} lower={lower}"),
        ));
    }
    let mut total = 0.0;
    let negligible = |v: f64, total: f64| v.abs() <= tol.abs_tol.max(tol.rel_tol * total.abs());

    // Right side.
    let mut x = center;
    let mut width = scale;
    let mut quiet = 0;
    for panel in 0.. {
        if panel >= MAX_PANELS {
            return Err(Error::Accuracy {
                what: "semi-infinite quadrature (right tail)",
                steps: panel,
                partial: total,
            });
        }
        let v = integrate(&f, x, x + width, tol)?;
        total += v;
        if negligible(v, total) {
            quiet += 1;
            if quiet >= 2 {
                break;
            }
        } else {
            quiet = 0;
        }
        x += width;
        width *= 2.0;
    }

    // Left side.
    let mut x = center;
    let mut width = scale;
    let mut quiet = 0;
    while x > lower {
        let a = (x - width).max(lower);
        let v = integrate(&f, a, x, tol)?;
        total += v;
        if negligible(v, total) {
            quiet += 1;
            if quiet >= 2 {
                break;
            }
        } else {
            quiet = 0;
        }
        x = a;
        width *= 2.0;
    }
    Ok(total)
}

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}
