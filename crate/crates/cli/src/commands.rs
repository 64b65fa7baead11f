use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use imi_core::analytics::{
    ostbc_coeff_exact, ostbc_coeff_high, ostbc_coeff_low, ostbc_nacf_exact, ostbc_nacf_high, ostbc_nacf_low,
    siso_coeff_exact, siso_coeff_high, siso_coeff_low, siso_coeff_piecewise, siso_nacf_exact, siso_nacf_high,
    siso_nacf_low, table1_row, LagContext, SnrPoint,
};
use imi_core::channel::varrho;
use imi_core::crossing::{crossing_report, phi};
use imi_core::montecarlo::{
    compare_summaries, empirical_from_traces, empirical_run, EmpiricalConfig, EmpiricalSummary, Quantity,
    MIN_COHERENCE_BLOCKS,
};
use imi_core::sim::{read_trace, write_trace, SimConfig, Simulator};
use imi_core::specfun::Tolerance;
use imi_core::Result;

use crate::config::{parse, ScenarioFile};
use crate::csv::{Cell, Table};
use crate::{Failure, EXIT_CONFIG, EXIT_GATE, EXIT_USAGE};

pub const TABLE1_ORDERS: [u64; 7] = [1, 2, 3, 4, 5, 16, 64];

pub fn load(path: &Path, seed: Option<u64>) -> std::result::Result<ScenarioFile, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::new(EXIT_USAGE, format!("cannot read {}: {e}", path.display())))?;
    let mut sf = parse(&text).map_err(|e| Failure::new(EXIT_CONFIG, format!("{}:{e}", path.display())))?;
    if let Some(s) = seed {
        sf.sim.seed = s;
    }
    Ok(sf)
}

fn need_snrs(sf: &ScenarioFile) -> std::result::Result<(), Failure> {
    if sf.snrs.is_empty() {
        return Err(Failure::new(EXIT_CONFIG, "scenario lists no snr_db values"));
    }
    Ok(())
}

fn write(table: &Table, path: &Path) -> std::result::Result<(), Failure> {
    table
        .write_to(path)
        .map_err(|e| Failure::new(EXIT_USAGE, format!("cannot write {}: {e}", path.display())))
}

/// `foo.csv` becomes `foo.crossings.csv`.
pub fn companion(out: &Path, tag: &str) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match out.extension() {
        Some(ext) => format!("{stem}.{tag}.{}", ext.to_string_lossy()),
        None => format!("{stem}.{tag}"),
    };
    out.with_file_name(name)
}

/// `[varrho, nacf_exact, coeff_exact, nacf_low, coeff_low, nacf_high, coeff_high, coeff_piecewise]`
pub fn lag_row(sf: &ScenarioFile, snr: SnrPoint, lag: usize, tol: &Tolerance) -> Result<[f64; 8]> {
    let v = varrho(&sf.scenario, sf.fm_hz, sf.ts_s, lag)?;
    if lag == 0 {
        return Ok([1.0; 8]);
    }
    let c = LagContext::new(v)?;
    let a = sf.antennas;
    Ok(if a.is_siso() {
        [
            v,
            siso_nacf_exact(snr, c, tol)?,
            siso_coeff_exact(snr, c, tol)?,
            siso_nacf_low(c),
            siso_coeff_low(c),
            siso_nacf_high(snr, c)?,
            siso_coeff_high(c)?,
            siso_coeff_piecewise(snr, c)?,
        ]
    } else {
        [
            v,
            ostbc_nacf_exact(snr, a, c, tol)?,
            ostbc_coeff_exact(snr, a, c, tol)?,
            ostbc_nacf_low(c, a),
            ostbc_coeff_low(c),
            ostbc_nacf_high(snr, a, c, tol)?,
            ostbc_coeff_high(a, c, tol)?,
            f64::NAN,
        ]
    })
}

pub fn analytic(sf: &ScenarioFile, out: &Path) -> std::result::Result<(), Failure> {
    need_snrs(sf)?;
    let jobs: Vec<(SnrPoint, usize)> = sf.snrs.iter().flat_map(|&s| sf.lags.iter().map(move |&l| (s, l))).collect();
    let values = jobs
        .par_iter()
        .map(|&(s, l)| lag_row(sf, s, l, &sf.tol))
        .collect::<Result<Vec<_>>>()?;
    let mut t = Table::new(&[
        "snr_db",
        "lag",
        "varrho",
        "nacf_exact",
        "coeff_exact",
        "nacf_low",
        "coeff_low",
        "nacf_high",
        "coeff_high",
        "coeff_piecewise",
    ]);
    for ((s, l), v) in jobs.iter().zip(&values) {
        let mut cells = vec![Cell::Real(s.db()), Cell::Int(*l as u64)];
        cells.extend(v.iter().map(|&x| Cell::Real(x)));
        t.row(&cells);
    }

    let v1 = varrho(&sf.scenario, sf.fm_hz, sf.ts_s, 1)?;
    let cjobs: Vec<(SnrPoint, f64)> =
        sf.snrs.iter().flat_map(|&s| sf.thresholds.iter().map(move |&th| (s, th))).collect();
    let reports = cjobs
        .par_iter()
        .map(|&(s, th)| Ok((phi(th, s, sf.antennas)?, crossing_report(th, s, sf.antennas, v1, sf.ts_s, &sf.tol)?)))
        .collect::<Result<Vec<_>>>()?;
    let mut c = Table::new(&["snr_db", "threshold", "phi", "cdf", "lcr", "aod"]);
    for ((s, th), (p, r)) in cjobs.iter().zip(&reports) {
        c.row(&[
            Cell::Real(s.db()),
            Cell::Real(*th),
            Cell::Real(*p),
            Cell::Real(r.cdf),
            Cell::Real(r.lcr),
            Cell::Real(r.aod),
        ]);
    }
    write(&t, out)?;
    write(&c, &companion(out, "crossings"))
}

fn empirical_config(sf: &ScenarioFile) -> Result<EmpiricalConfig> {
    Ok(
        EmpiricalConfig::new(sf.sim.samples, sf.sim.realizations, sf.sim.seed, sf.lags.clone(), sf.threshold_grid())?
            .with_oversample(sf.sim.oversample),
    )
}

pub fn simulate(sf: &ScenarioFile, out: &Path, dump: Option<&Path>) -> std::result::Result<(), Failure> {
    need_snrs(sf)?;
    let grid = sf.doppler_grid();
    let summaries = empirical_run(&sf.scenario, &grid, &sf.snrs, sf.antennas, &empirical_config(sf)?)?;
    let mut t = Table::new(&["quantity", "at", "snr_db", "empirical", "events", "reliable"]);
    for s in &summaries {
        write_summary(&mut t, s);
    }
    write(&t, out)?;
    if let Some(path) = dump {
        let cfg = SimConfig::new(sf.sim.samples, sf.sim.seed).with_oversample(sf.sim.oversample);
        let traces = Simulator::new(&sf.scenario, &grid, cfg)?.mimo_traces(sf.antennas, 0)?;
        for (k, tr) in traces.iter().enumerate() {
            let p = if traces.len() == 1 { path.to_path_buf() } else { companion(path, &k.to_string()) };
            let f = File::create(&p).map_err(|e| Failure::new(EXIT_USAGE, format!("cannot write {}: {e}", p.display())))?;
            write_trace(BufWriter::new(f), tr, sf.fm_hz)?;
        }
    }
    Ok(())
}

fn write_summary(t: &mut Table, s: &EmpiricalSummary) {
    let lag_ok = s.coherence_blocks >= MIN_COHERENCE_BLOCKS;
    let r = s.realizations as u64;
    for (q, values) in [(Quantity::Nacf, &s.nacf), (Quantity::Coeff, &s.coeff)] {
        for (&lag, &v) in s.lags.iter().zip(values) {
            t.row(&[
                Cell::Text(q.name()),
                Cell::Real(lag as f64),
                Cell::Real(s.snr.db()),
                Cell::Real(v),
                Cell::Int((s.num_samples - lag) as u64 * r),
                Cell::Bool(lag_ok),
            ]);
        }
    }
    for e in &s.crossings {
        for (q, v) in [(Quantity::Lcr, e.down_rate), (Quantity::Cdf, e.time_below_frac), (Quantity::Aod, e.aod_hat)] {
            t.row(&[
                Cell::Text(q.name()),
                Cell::Real(e.threshold),
                Cell::Real(s.snr.db()),
                Cell::Real(v),
                Cell::Int(e.counts.down),
                Cell::Bool(e.reliable),
            ]);
        }
    }
}

/// Allowed error of a reliable comparison row. A row is over budget when
/// its relative error exceeds `rel` and, for the dimensionless `nacf` and
/// `coeff` rows, its absolute error also exceeds `abs`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Budget {
    pub rel: f64,
    pub abs: f64,
}

impl Budget {
    pub fn parse(s: &str) -> std::result::Result<Self, Failure> {
        let mut b = Budget { rel: 0.05, abs: 0.02 };
        for part in s.split(',') {
            let bad = || Failure::new(EXIT_USAGE, format!("bad --budget `{s}`; expected rel=X[,abs=Y]"));
            let (k, v) = part.split_once('=').ok_or_else(bad)?;
            let x: f64 = v.trim().parse().ok().filter(|x: &f64| *x >= 0.0 && x.is_finite()).ok_or_else(bad)?;
            match k.trim() {
                "rel" => b.rel = x,
                "abs" => b.abs = x,
                _ => return Err(bad()),
            }
        }
        Ok(b)
    }

    fn exceeded(&self, q: Quantity, rel_err: f64, abs_err: f64) -> bool {
        let over_rel = !(rel_err <= self.rel);
        match q {
            Quantity::Nacf | Quantity::Coeff => over_rel && !(abs_err <= self.abs),
            _ => over_rel,
        }
    }
}

pub fn compare(sf: &ScenarioFile, out: &Path, budget: Budget, replay: &[PathBuf]) -> std::result::Result<(), Failure> {
    need_snrs(sf)?;
    let grid = sf.doppler_grid();
    let summaries = if replay.is_empty() {
        empirical_run(&sf.scenario, &grid, &sf.snrs, sf.antennas, &empirical_config(sf)?)?
    } else {
        if replay.len() as u64 != sf.antennas.product() {
            return Err(Failure::new(
                EXIT_CONFIG,
                format!("{} replay traces given for M*N = {}", replay.len(), sf.antennas.product()),
            ));
        }
        let mut traces = Vec::new();
        for p in replay {
            let f = File::open(p).map_err(|e| Failure::new(EXIT_USAGE, format!("cannot read {}: {e}", p.display())))?;
            let (tr, f_m) = read_trace(BufReader::new(f))?;
            if (f_m - sf.fm_hz).abs() > 1e-12 * sf.fm_hz {
                return Err(Failure::new(
                    EXIT_CONFIG,
                    format!("{} was generated with f_m = {f_m}, scenario says {}", p.display(), sf.fm_hz),
                ));
            }
            traces.push(tr);
        }
        empirical_from_traces(&[traces], &sf.snrs, sf.antennas, &sf.lags, &sf.threshold_grid(), sf.fm_hz)?
    };
    let rows = compare_summaries(&sf.scenario, &grid, sf.antennas, &summaries, &sf.tol)?;
    let mut t = Table::new(&[
        "quantity", "at", "snr_db", "analytic", "empirical", "abs_err", "rel_err", "reliable", "events",
    ]);
    let mut over = 0;
    for r in &rows {
        if r.reliable && budget.exceeded(r.quantity, r.rel_err, r.abs_err) {
            over += 1;
        }
        t.row(&[
            Cell::Text(r.quantity.name()),
            Cell::Real(r.at),
            Cell::Real(r.snr_db),
            Cell::Real(r.analytic),
            Cell::Real(r.empirical),
            Cell::Real(r.abs_err),
            Cell::Real(r.rel_err),
            Cell::Bool(r.reliable),
            Cell::Int(r.events),
        ]);
    }
    write(&t, out)?;
    if over > 0 {
        return Err(Failure::new(EXIT_GATE, format!("{over} reliable rows exceed the error budget")));
    }
    Ok(())
}

pub fn table1(out: &Path) -> std::result::Result<(), Failure> {
    let tol = Tolerance::default().with_max_terms(10_000_000);
    let rows = TABLE1_ORDERS
        .par_iter()
        .map(|&mn| table1_row(mn, &tol))
        .collect::<Result<Vec<_>>>()?;
    let mut t = Table::new(&["mn", "c2", "c4", "max_diff", "argmax_varrho"]);
    for r in &rows {
        t.row(&[
            Cell::Int(r.mn),
            Cell::Real(r.c2),
            Cell::Real(r.c4),
            Cell::Real(r.max_diff),
            Cell::Real(r.argmax_varrho),
        ]);
    }
    write(&t, out)
}
