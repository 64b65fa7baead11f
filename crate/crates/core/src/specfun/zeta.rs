use super::{EULER_GAMMA, PI2_6};
use crate::error::{check_finite, domain, Result};

// B_{2k}/(2k+1)!, k = 1..22
const BERNOULLI_DILOG: [f64; 22] = [
    2.777_777_777_777_777_62e-02,
    -2.777_777_777_777_777_78e-04,
    4.724_111_866_969_009_78e-06,
    -9.185_773_074_664_081_96e-08,
    1.897_886_998_897_100_05e-09,
    -4.064_761_645_144_225_60e-11,
    8.921_691_020_456_452_30e-13,
    -1.993_929_586_072_107_44e-14,
    4.518_980_029_619_918_25e-16,
    -1.035_651_761_218_124_72e-17,
    2.395_218_621_026_186_98e-19,
    -5.581_785_874_325_008_98e-21,
    1.309_150_755_418_321_25e-22,
    -3.087_419_802_426_740_29e-24,
    7.315_975_652_702_202_93e-26,
    -1.740_845_657_234_000_88e-27,
    4.157_635_644_613_899_88e-29,
    -9.962_148_488_284_621_68e-31,
    2.394_034_424_896_165_22e-32,
    -5.768_347_355_367_389_70e-34,
    1.393_179_479_647_008_03e-35,
    -3.372_121_965_485_089_43e-37,
];

/// Bernoulli-number series in `u = -ln(1-x)`, valid for `|u| < 2π`.
fn dilog_bernoulli(x: f64) -> f64 {
    let u = -(-x).ln_1p();
    let u2 = u * u;
    let mut p = 0.0;
    for c in BERNOULLI_DILOG.iter().rev() {
        p = p * u2 + c;
    }
    u - 0.25 * u2 + p * u2 * u
}

/// Dilogarithm `Li₂(x) = Σ_{k>=1} x^k/k²` on `[0, 1]`.
pub fn dilog(x: f64) -> Result<f64> {
    check_finite("dilog", "x", x)?;
    if !(0.0..=1.0).contains(&x) {
        return Err(domain("dilog", format!("x must lie in [0, 1], got {x}")));
    }
    if x == 1.0 {
        return Ok(PI2_6);
    }
    if x <= 0.9 {
        return Ok(dilog_bernoulli(x));
    }
    // Reflection: Li₂(x) = π²/6 - ln x ln(1-x) - Li₂(1-x)
    Ok(PI2_6 - x.ln() * (1.0 - x).ln() - dilog_bernoulli(1.0 - x))
}

/// Harmonic number `H_k = Σ_{j=1}^k 1/j`, `H_0 = 0`.
pub fn harmonic(k: u64) -> f64 {
    if k <= 10_000 {
        // sum smallest terms first
        let mut s = 0.0;
        for j in (1..=k).rev() {
            s += 1.0 / j as f64;
        }
        return s;
    }
    let n = k as f64;
    let r = 1.0 / (n * n);
    n.ln() + EULER_GAMMA + 0.5 / n - r * (1.0 / 12.0 - r * (1.0 / 120.0 - r / 252.0))
}

/// Hurwitz zeta at `s = 2`: `ζ(2,q) = Σ_{j>=0} 1/(j+q)²` for integer `q >= 1`.
pub fn hurwitz_zeta2(q: u64) -> Result<f64> {
    if q == 0 {
        return Err(domain("hurwitz_zeta2", "q must be >= 1"));
    }
    if q < 30 {
        let mut s = 0.0;
        for j in (1..q).rev() {
            let jf = j as f64;
            s += 1.0 / (jf * jf);
        }
        return Ok(PI2_6 - s);
    }
    // Euler-Maclaurin
    let x = q as f64;
    let r = 1.0 / x;
    let r2 = r * r;
    Ok(r + 0.5 * r2 + r2 * r * (1.0 / 6.0 - r2 * (1.0 / 30.0 - r2 * (1.0 / 42.0 - r2 / 30.0))))
}
