//! Sums weighted by the negative binomial law `w_k = (1-t)^m C(k+m-1, k) t^k`.

use crate::error::{Error, Result};
use crate::specfun::Tolerance;

/// How large `f(k')` can get for `k' > k`, used to bound the unsummed tail.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Envelope {
    /// `|f| <= B` everywhere.
    Bounded(f64),
    /// `f` grows at most logarithmically; `2|f(k)|` bounds the tail values.
    Slow,
}

/// Index of the largest weight.
pub(crate) fn nb_mode(m: u64, t: f64) -> u64 {
    if m <= 1 || t == 0.0 {
        0
    } else {
        ((m - 1) as f64 * t / (1.0 - t)).floor() as u64
    }
}

/// `Σ_k w_k f(k, w_k)`.
///
/// `f` is called for every `k` in order (so it may carry incremental state)
/// and receives the weight so it can skip expensive work when the weight
/// underflows. The sum stops, never before the mode, once the geometric
/// bound on the remaining weight times the envelope of `f` has stayed below
/// `rel_tol·|sum|` for three consecutive terms.
pub(crate) fn nb_sum<F>(what: &'static str, m: u64, t: f64, tol: &Tolerance, env: Envelope, mut f: F) -> Result<f64>
where
    F: FnMut(u64, f64) -> Result<f64>,
{
    debug_assert!(m >= 1 && (0.0..1.0).contains(&t));
    if t == 0.0 {
        return f(0, 1.0);
    }
    let ln_t = t.ln();
    let mut ln_w = m as f64 * (-t).ln_1p();
    let mode = nb_mode(m, t);
    let floor = tol.abs_tol * tol.rel_tol;
    let mf = m as f64;

    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    let mut small = 0;
    for k in 0..tol.max_terms as u64 {
        let w = ln_w.exp();
        let fk = f(k, w)?;
        let term = w * fk;
        if !term.is_finite() {
            return Err(Error::Accuracy {
                what,
                steps: k as usize,
                partial: sum + comp,
            });
        }
        let s = sum + term;
        if sum.abs() >= term.abs() {
            comp += (sum - s) + term;
        } else {
            comp += (term - s) + sum;
        }
        sum = s;

        let kf = k as f64;
        let w_next = w * t * (kf + mf) / (kf + 1.0);
        // later ratios only shrink
        let r = t * (kf + 1.0 + mf) / (kf + 2.0);
        if k >= mode && r < 1.0 {
            let bound = match env {
                Envelope::Bounded(b) => b,
                Envelope::Slow => 2.0 * fk.abs(),
            };
            let tail = w_next / (1.0 - r) * bound;
            if tail <= tol.rel_tol * (sum + comp).abs() || tail <= floor {
                small += 1;
                if small >= 3 {
                    return Ok(sum + comp);
                }
            } else {
                small = 0;
            }
        }
        ln_w += ln_t + ((kf + mf) / (kf + 1.0)).ln();
    }
    Err(Error::Accuracy {
        what,
        steps: tol.max_terms,
        partial: sum + comp,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_one() {
        let tol = Tolerance::default().with_max_terms(1_000_000);
        for m in [1u64, 2, 4, 64, 128] {
            for t in [0.0, 0.1, 0.5, 0.9, 0.999] {
                let s = nb_sum("mass", m, t, &tol, Envelope::Bounded(1.0), |_, _| Ok(1.0)).unwrap();
                assert!((s - 1.0).abs() < 1e-9, "m={m} t={t}: {s}");
                let mean = nb_sum("mean", m, t, &tol, Envelope::Slow, |k, _| Ok(k as f64 + 1.0)).unwrap();
                let want = m as f64 * t / (1.0 - t) + 1.0;
                assert!((mean / want - 1.0).abs() < 1e-9, "m={m} t={t}");
            }
        }
    }

    #[test]
    fn late_mass_is_not_missed() {
        // f vanishes for small k; the weight bound keeps the sum going
        let tol = Tolerance::default();
        let s = nb_sum("late", 1, 0.95, &tol, Envelope::Bounded(1.0), |k, _| Ok(if k >= 130 { 1.0 } else { 0.0 }))
            .unwrap();
        assert!((s / 0.95f64.powi(130) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn reports_partial() {
        let tol = Tolerance::default().with_max_terms(10);
        let err = nb_sum("capped", 1, 0.99, &tol, Envelope::Bounded(1.0), |_, _| Ok(1.0)).unwrap_err();
        assert!(matches!(err, Error::Accuracy { steps: 10, .. }));
    }
}
