use super::ostbc::harmonic_spread;
use crate::error::{domain, Result};
use crate::specfun::{hurwitz_zeta2, Tolerance};

/// Small-ϱ expansion `c2·ϱ² + c4·ϱ⁴ + …` of the high-SNR OSTBC
/// correlation coefficient, and its largest distance from `ϱ²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Table1Row {
    pub mn: u64,
    pub c2: f64,
    pub c4: f64,
    pub max_diff: f64,
    /// Where the maximum distance is attained.
    pub argmax_varrho: f64,
}

/// Upper end of the ϱ sweep for the maximum distance.
const VARRHO_MAX: f64 = 0.999;
const GRID: usize = 999;
const EXTRAPOLATION_LEVELS: usize = 8;
const FIRST_STEP: f64 = 0.02;

/// Polynomial extrapolation of `(x_i, y_i)` to `x = 0` (Neville).
fn extrapolate_to_zero(xs: &[f64], ys: &[f64]) -> f64 {
    let mut p = ys.to_vec();
    let n = xs.len();
    for level in 1..n {
        for i in 0..n - level {
            let (xi, xj) = (xs[i], xs[i + level]);
            p[i] = (xj * p[i] - xi * p[i + 1]) / (xj - xi);
        }
    }
    p[0]
}

pub fn table1_row(mn: u64, tol: &Tolerance) -> Result<Table1Row> {
    if mn == 0 {
        return Err(domain("table1_row", "mn must be >= 1"));
    }
    let zeta = hurwitz_zeta2(mn)?;
    let coeff = |t: f64| -> Result<f64> { Ok(harmonic_spread(mn, t, tol)? / zeta) };

    // Taylor coefficients in t = ϱ² from Richardson-extrapolated difference
    // quotients at t = h, h/2, h/4, …
    let xs: Vec<f64> = (0..EXTRAPOLATION_LEVELS).map(|i| FIRST_STEP / (1u64 << i) as f64).collect();
    let fs = xs.iter().map(|&t| coeff(t)).collect::<Result<Vec<_>>>()?;
    let q1: Vec<f64> = xs.iter().zip(&fs).map(|(t, f)| f / t).collect();
    let c2 = extrapolate_to_zero(&xs, &q1);
    let q2: Vec<f64> = xs.iter().zip(&q1).map(|(t, q)| (q - c2) / t).collect();
    let c4 = extrapolate_to_zero(&xs, &q2);

    let diff = |v: f64| -> Result<f64> {
        let t = v * v;
        Ok((t - coeff(t)?).abs())
    };
    let mut best = (0.0, 0.0);
    for i in 0..=GRID {
        let v = VARRHO_MAX * i as f64 / GRID as f64;
        let d = diff(v)?;
        if d > best.1 {
            best = (v, d);
        }
    }
    // golden-section refinement around the grid maximum
    let step = VARRHO_MAX / GRID as f64;
    let (mut a, mut b) = ((best.0 - step).max(0.0), (best.0 + step).min(VARRHO_MAX));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let mut f1 = diff(x1)?;
    let mut f2 = diff(x2)?;
    for _ in 0..60 {
        if f1 > f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = diff(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = diff(x2)?;
        }
        if b - a < 1e-10 {
            break;
        }
    }
    let (v, d) = if f1 > f2 { (x1, f1) } else { (x2, f2) };
    let (argmax_varrho, max_diff) = if d > best.1 { (v, d) } else { best };
    Ok(Table1Row {
        mn,
        c2,
        c4,
        max_diff,
        argmax_varrho,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::PI2_6;

    #[test]
    fn neville() {
        let xs = [0.4, 0.2, 0.1, 0.05];
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 - 2.0 * x + 0.5 * x * x * x).collect();
        assert!((extrapolate_to_zero(&xs, &ys) - 3.0).abs() < 1e-13);
    }

    #[test]
    fn siso_row_against_dilog_series() {
        // 6Li₂(t)/π² = (t + t²/4 + …)/ζ(2)
        let tol = Tolerance::default().with_max_terms(10_000_000);
        let row = table1_row(1, &tol).unwrap();
        assert!((row.c2 - 1.0 / PI2_6).abs() < 1e-9, "{}", row.c2);
        assert!((row.c4 - 0.25 / PI2_6).abs() < 1e-7, "{}", row.c4);
        assert!((row.max_diff - 0.1601).abs() < 1e-3);
    }
}
