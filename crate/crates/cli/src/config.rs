//! Scenario files: one `key = value` per line, `#` starts a comment.

use std::collections::HashSet;
use std::fmt;

use imi_core::analytics::{AntennaConfig, SnrPoint};
use imi_core::channel::{Cluster, DopplerGrid, ScatteringScenario};
use imi_core::crossing::ThresholdGrid;
use imi_core::specfun::Tolerance;

#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.column, self.message)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimSection {
    pub samples: usize,
    pub realizations: u32,
    pub seed: u64,
    pub oversample: usize,
}

#[derive(Debug, Clone)]
pub struct ScenarioFile {
    pub scenario: ScatteringScenario,
    pub fm_hz: f64,
    pub ts_s: f64,
    pub antennas: AntennaConfig,
    pub snrs: Vec<SnrPoint>,
    pub thresholds: Vec<f64>,
    pub lags: Vec<usize>,
    pub sim: SimSection,
    pub tol: Tolerance,
}

impl ScenarioFile {
    pub fn doppler_grid(&self) -> DopplerGrid {
        DopplerGrid::new(self.fm_hz, self.ts_s, self.lags.clone()).expect("validated at parse time")
    }

    pub fn threshold_grid(&self) -> ThresholdGrid {
        ThresholdGrid::new(self.thresholds.clone(), self.ts_s).expect("validated at parse time")
    }
}

/// A value with the column where it starts.
struct Field<'a> {
    text: &'a str,
    column: usize,
}

fn err(line: usize, column: usize, message: impl Into<String>) -> ParseError {
    ParseError {
        line,
        column,
        message: message.into(),
    }
}

/// Splits `s` (starting at `column`) on commas, keeping each piece's column.
fn split_list(s: &str, column: usize) -> Vec<Field<'_>> {
    let mut out = Vec::new();
    let mut start = 0;
    for (i, piece) in s.split(',').enumerate() {
        let lead = piece.len() - piece.trim_start().len();
        out.push(Field {
            text: piece.trim(),
            column: column + start + lead,
        });
        start += piece.len() + 1;
        let _ = i;
    }
    out
}

fn number(line: usize, f: &Field<'_>) -> Result<f64, ParseError> {
    let v: f64 = f
        .text
        .parse()
        .map_err(|_| err(line, f.column, format!("expected a number, found `{}`", f.text)))?;
    if !v.is_finite() {
        return Err(err(line, f.column, format!("`{}` is not finite", f.text)));
    }
    Ok(v)
}

fn integer<T: std::str::FromStr>(line: usize, f: &Field<'_>) -> Result<T, ParseError> {
    f.text
        .parse()
        .map_err(|_| err(line, f.column, format!("expected a nonnegative integer, found `{}`", f.text)))
}

fn numbers(line: usize, value: &str, column: usize) -> Result<Vec<f64>, ParseError> {
    split_list(value, column).iter().map(|f| number(line, f)).collect()
}

/// Integers and inclusive ranges `a..=b`.
fn lag_list(line: usize, value: &str, column: usize) -> Result<Vec<usize>, ParseError> {
    let mut out = Vec::new();
    for f in split_list(value, column) {
        if let Some((a, b)) = f.text.split_once("..=") {
            let lo: usize = integer(line, &Field { text: a.trim(), column: f.column })?;
            let hi: usize = integer(line, &Field { text: b.trim(), column: f.column })?;
            if hi < lo {
                return Err(err(line, f.column, format!("empty range `{}`", f.text)));
            }
            out.extend(lo..=hi);
        } else {
            out.push(integer(line, &f)?);
        }
    }
    Ok(out)
}

/// `p, kappa, theta` positionally, or by name (`p=`, `kappa=`, `theta=`,
/// `theta_deg=`); named fields may follow positional ones.
fn cluster(line: usize, value: &str, column: usize) -> Result<Cluster, ParseError> {
    const NAMES: [&str; 3] = ["p", "kappa", "theta"];
    let mut slots: [Option<f64>; 3] = [None; 3];
    let mut named = false;
    for (i, f) in split_list(value, column).iter().enumerate() {
        let (idx, x) = match f.text.split_once('=') {
            Some((k, v)) => {
                named = true;
                let vcol = f.column + k.len() + 1 + (v.len() - v.trim_start().len());
                let x = number(line, &Field { text: v.trim(), column: vcol })?;
                match k.trim() {
                    "theta_deg" => (2, x.to_radians()),
                    k => match NAMES.iter().position(|n| *n == k) {
                        Some(idx) => (idx, x),
                        None => return Err(err(line, f.column, format!("unknown cluster field `{k}`"))),
                    },
                }
            }
            None => {
                if named {
                    return Err(err(line, f.column, "positional cluster field after a named one"));
                }
                if i >= 3 {
                    return Err(err(line, f.column, "cluster takes 3 values p, kappa, theta_rad"));
                }
                (i, number(line, f)?)
            }
        };
        if slots[idx].is_some() {
            return Err(err(line, f.column, format!("cluster field `{}` given twice", NAMES[idx])));
        }
        slots[idx] = Some(x);
    }
    match slots {
        [Some(p), Some(k), Some(t)] => Cluster::new(p, k, t).map_err(|e| err(line, column, e.to_string())),
        _ => Err(err(line, column, "cluster needs p, kappa and theta (or theta_deg)")),
    }
}

const KEYS: &[&str] = &[
    "cluster",
    "fm_hz",
    "ts_s",
    "antennas",
    "snr_db",
    "thresholds_bpshz",
    "lags",
    "sim.samples",
    "sim.realizations",
    "sim.seed",
    "sim.oversample",
    "tol.rel",
    "tol.abs",
    "tol.max_terms",
];

pub fn parse(text: &str) -> Result<ScenarioFile, ParseError> {
    let mut clusters = Vec::new();
    let mut first_cluster_line = 0;
    let mut seen = HashSet::new();
    let (mut fm, mut ts) = (None, None);
    let mut antennas = AntennaConfig::siso();
    let mut snrs = Vec::new();
    let mut thresholds = Vec::new();
    let mut lags: Vec<usize> = (0..=40).collect();
    let mut sim = SimSection {
        samples: 1 << 20,
        realizations: 1,
        seed: 0,
        oversample: 8,
    };
    let mut tol = Tolerance::default().with_max_terms(10_000_000);
    let mut last_line = 0;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        last_line = line;
        let content = raw.split('#').next().unwrap_or("");
        if content.trim().is_empty() {
            continue;
        }
        let Some((k, v)) = content.split_once('=') else {
            let col = content.len() - content.trim_start().len() + 1;
            return Err(err(line, col, "expected `key = value`"));
        };
        let key = k.trim();
        let key_col = k.len() - k.trim_start().len() + 1;
        let vcol = k.len() + 2 + (v.len() - v.trim_start().len());
        let value = v.trim();
        if !KEYS.contains(&key) {
            return Err(err(line, key_col, format!("unknown key `{key}`")));
        }
        if value.is_empty() {
            return Err(err(line, vcol, format!("missing value for `{key}`")));
        }
        if key != "cluster" && !seen.insert(key.to_string()) {
            return Err(err(line, key_col, format!("duplicate key `{key}`")));
        }
        let one = Field { text: value, column: vcol };
        match key {
            "cluster" => {
                if clusters.is_empty() {
                    first_cluster_line = line;
                }
                clusters.push(cluster(line, value, vcol)?);
            }
            "fm_hz" | "ts_s" => {
                let x = number(line, &one)?;
                if x <= 0.0 {
                    return Err(err(line, vcol, format!("`{key}` must be positive")));
                }
                if key == "fm_hz" {
                    fm = Some(x);
                } else {
                    ts = Some(x);
                }
            }
            "antennas" => {
                let f = split_list(value, vcol);
                if f.len() != 2 {
                    return Err(err(line, vcol, "antennas needs two integers M, N"));
                }
                let (m, n) = (integer(line, &f[0])?, integer(line, &f[1])?);
                antennas = AntennaConfig::new(m, n).map_err(|e| err(line, vcol, e.to_string()))?;
            }
            "snr_db" => {
                snrs = numbers(line, value, vcol)?
                    .into_iter()
                    .map(SnrPoint::from_db)
                    .collect::<Result<_, _>>()
                    .map_err(|e| err(line, vcol, e.to_string()))?;
            }
            "thresholds_bpshz" => {
                thresholds = numbers(line, value, vcol)?;
                if let Some(t) = thresholds.iter().find(|t| **t < 0.0) {
                    return Err(err(line, vcol, format!("threshold {t} is negative")));
                }
                if thresholds.windows(2).any(|w| w[0] > w[1]) {
                    return Err(err(line, vcol, "thresholds must be sorted ascending"));
                }
            }
            "lags" => lags = lag_list(line, value, vcol)?,
            "sim.samples" => sim.samples = integer(line, &one)?,
            "sim.realizations" => sim.realizations = integer(line, &one)?,
            "sim.seed" => sim.seed = integer(line, &one)?,
            "sim.oversample" => sim.oversample = integer(line, &one)?,
            "tol.rel" | "tol.abs" => {
                let x = number(line, &one)?;
                let t = if key == "tol.rel" {
                    Tolerance { rel_tol: x, ..tol }
                } else {
                    Tolerance { abs_tol: x, ..tol }
                };
                tol = t.validate().map(|_| t).map_err(|e| err(line, vcol, e.to_string()))?;
            }
            "tol.max_terms" => {
                let t = tol.with_max_terms(integer(line, &one)?);
                tol = t.validate().map(|_| t).map_err(|e| err(line, vcol, e.to_string()))?;
            }
            _ => unreachable!(),
        }
    }

    let missing = |what: &str| err(last_line.max(1), 1, format!("missing required key `{what}`"));
    let fm_hz = fm.ok_or_else(|| missing("fm_hz"))?;
    let ts_s = ts.ok_or_else(|| missing("ts_s"))?;
    if clusters.is_empty() {
        return Err(missing("cluster"));
    }
    let scenario = ScatteringScenario::new(clusters).map_err(|e| err(first_cluster_line, 1, e.to_string()))?;
    if sim.samples < lags.iter().copied().max().unwrap_or(0) + 2 {
        return Err(err(last_line.max(1), 1, "sim.samples must be at least the largest lag + 2"));
    }
    if sim.realizations == 0 || sim.oversample == 0 {
        return Err(err(last_line.max(1), 1, "sim.realizations and sim.oversample must be >= 1"));
    }
    Ok(ScenarioFile {
        scenario,
        fm_hz,
        ts_s,
        antennas,
        snrs,
        thresholds,
        lags,
        sim,
        tol,
    })
}
