use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use imi_core::analytics::{siso_coeff_high, siso_nacf_exact, LagContext, SnrPoint};
use imi_core::channel::{varrho, ScatteringScenario};
use imi_core::specfun::{bessel_j0, dilog, Tolerance};
use tempfile::TempDir;

fn imi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_imi")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn scenario(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_csv(p: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = std::fs::read_to_string(p).unwrap();
    assert!(!text.contains('\r'));
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    (header, lines.map(|l| l.split(',').map(String::from).collect()).collect())
}

fn col(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap()
}

const CLARKE: &str = "\
cluster = 1, 0, 0
fm_hz = 10
ts_s = 0.005
snr_db = 30
thresholds_bpshz = 0, 2, 6, 12
lags = 0..=20
";

const THREE: &str = "\
cluster = 0.45, 2, 0.17453292519943295
cluster = p=0.2, kappa=20, theta_deg=110
cluster = 0.35, 3, theta_deg=265
fm_hz = 10
ts_s = 0.005
antennas = 2, 2
snr_db = 10
lags = 0..=200
";

#[test]
fn table1_rows() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("t1.csv");
    let o = imi(&["table1", "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (h, rows) = read_csv(&out);
    assert_eq!(h, ["mn", "c2", "c4", "max_diff", "argmax_varrho"]);
    let want = [(1, 0.608, 0.152, 0.16), (2, 0.775, 0.129, 0.075), (64, 0.992, 0.008, 0.002)];
    for (mn, c2, c4, md) in want {
        let r = rows.iter().find(|r| r[0] == mn.to_string()).unwrap();
        let v: Vec<f64> = r[1..].iter().map(|x| x.parse().unwrap()).collect();
        assert!((v[0] - c2).abs() < 0.002 && (v[1] - c4).abs() < 0.002 && (v[2] - md).abs() < 0.003);
    }
    let diffs: Vec<f64> = rows.iter().map(|r| r[3].parse().unwrap()).collect();
    assert_eq!(diffs.len(), 7);
    assert!(diffs.windows(2).all(|w| w[0] > w[1]));
}

#[test]
fn analytic_matches_library_bit_for_bit() {
    let dir = TempDir::new().unwrap();
    let sc = scenario(&dir, "clarke.cfg", CLARKE);
    let out = dir.path().join("a.csv");
    let o = imi(&["analytic", "--scenario", s(&sc), "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (h, rows) = read_csv(&out);
    assert_eq!(rows.len(), 21);
    let iso = ScatteringScenario::isotropic();
    let snr = SnrPoint::from_db(30.0).unwrap();
    let tol = Tolerance::default().with_max_terms(10_000_000);
    for r in &rows[1..] {
        let lag: usize = r[col(&h, "lag")].parse().unwrap();
        let v = varrho(&iso, 10.0, 0.005, lag).unwrap();
        let c = LagContext::new(v).unwrap();
        let high: f64 = r[col(&h, "coeff_high")].parse().unwrap();
        assert_eq!(high.to_bits(), siso_coeff_high(c).unwrap().to_bits());
        // 6Li₂(J₀²)/π² written out independently
        let j0 = bessel_j0(2.0 * std::f64::consts::PI * 10.0 * 0.005 * lag as f64).unwrap();
        let direct = 6.0 * dilog(j0 * j0).unwrap() / (std::f64::consts::PI * std::f64::consts::PI);
        assert!((high - direct).abs() < 1e-12);
        if lag == 1 {
            let nacf: f64 = r[col(&h, "nacf_exact")].parse().unwrap();
            assert_eq!(nacf.to_bits(), siso_nacf_exact(snr, c, &tol).unwrap().to_bits());
        }
    }
    let (ch, crows) = read_csv(&dir.path().join("a.crossings.csv"));
    assert_eq!(ch, ["snr_db", "threshold", "phi", "cdf", "lcr", "aod"]);
    assert_eq!(crows.len(), 4);
    // zero threshold: cdf 0 and aod 0
    assert_eq!(crows[0][col(&ch, "aod")].parse::<f64>().unwrap(), 0.0);
}

#[test]
fn three_cluster_mimo_table() {
    let dir = TempDir::new().unwrap();
    let sc = scenario(&dir, "three.cfg", THREE);
    let out = dir.path().join("a.csv");
    let o = imi(&["analytic", "--scenario", s(&sc), "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (h, rows) = read_csv(&out);
    assert_eq!(rows.len(), 201);
    // piecewise form is SISO only
    assert_eq!(rows[5][col(&h, "coeff_piecewise")], "nan");
}

#[test]
fn config_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let bad = scenario(&dir, "w.cfg", "cluster = 0.5, 0, 0\ncluster = 0.4, 2, 1\nfm_hz = 10\nts_s = 0.005\nsnr_db = 0\n");
    let o = imi(&["analytic", "--scenario", s(&bad), "--out", s(&dir.path().join("x.csv"))]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("cluster weights"), "{}", stderr(&o));

    let bad = scenario(&dir, "k.cfg", "cluster = 1, 0, 0\nfm_hz = 10\n  colour = red\n");
    let o = imi(&["analytic", "--scenario", s(&bad), "--out", s(&dir.path().join("x.csv"))]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("k.cfg:3:3: unknown key `colour`"), "{}", stderr(&o));

    // Nyquist violation is a configuration problem too
    let bad = scenario(&dir, "n.cfg", "cluster = 1, 0, 0\nfm_hz = 150\nts_s = 0.005\nsnr_db = 0\nsim.samples = 1024\n");
    let o = imi(&["simulate", "--scenario", s(&bad), "--out", s(&dir.path().join("x.csv"))]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(code(&imi(&["frobnicate"])), 1);
    assert_eq!(code(&imi(&["analytic", "--out", "x.csv"])), 1);
    assert_eq!(code(&imi(&["analytic", "--scenario", "/nonexistent/x.cfg", "--out", "x.csv"])), 1);
    assert_eq!(code(&imi(&["--help"])), 0);
    let o = Command::new(env!("CARGO_BIN_EXE_imi"))
        .args(["table1", "--out", "/tmp/never-written.csv"])
        .env("IMI_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(code(&o), 1);
}

#[test]
fn accuracy_errors_exit_4() {
    let dir = TempDir::new().unwrap();
    let sc = scenario(&dir, "t.cfg", &format!("{CLARKE}tol.max_terms = 3\n"));
    let o = imi(&["analytic", "--scenario", s(&sc), "--out", s(&dir.path().join("x.csv"))]);
    assert_eq!(code(&o), 4);
    assert!(stderr(&o).contains("did not converge"), "{}", stderr(&o));
}

const SMALL_SIM: &str = "\
cluster = 1, 0, 0
fm_hz = 10
ts_s = 0.005
snr_db = 10
thresholds_bpshz = 2, 3, 4
lags = 0..=5
sim.samples = 65536
sim.realizations = 2
sim.seed = 3
";

#[test]
fn simulate_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let sc = scenario(&dir, "s.cfg", SMALL_SIM);
    let run = |name: &str, extra: &[&str]| {
        let out = dir.path().join(name);
        let mut args = vec!["simulate", "--scenario", s(&sc), "--out", s(&out)];
        args.extend_from_slice(extra);
        let o = imi(&args);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        std::fs::read_to_string(out).unwrap()
    };
    let a = run("a.csv", &[]);
    assert_eq!(a, run("b.csv", &[]));
    assert_ne!(a, run("c.csv", &["--seed", "4"]));
    assert!(a.starts_with("quantity,at,snr_db,empirical,events,reliable\n"));
    assert_eq!(a.lines().count(), 1 + 2 * 6 + 3 * 3);
}

#[test]
fn compare_flags_and_gate() {
    let dir = TempDir::new().unwrap();
    let tiny = scenario(&dir, "tiny.cfg", &SMALL_SIM.replace("65536", "64"));
    let out = dir.path().join("t.csv");
    let o = imi(&["compare", "--scenario", s(&tiny), "--out", s(&out), "--budget", "rel=0,abs=0"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (h, rows) = read_csv(&out);
    assert!(rows.iter().all(|r| r[col(&h, "reliable")] == "false"));

    let sc = scenario(&dir, "s.cfg", SMALL_SIM);
    let o = imi(&["compare", "--scenario", s(&sc), "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (h, rows) = read_csv(&out);
    assert!(rows.iter().any(|r| r[col(&h, "reliable")] == "true"));
    let o = imi(&["compare", "--scenario", s(&sc), "--out", s(&out), "--budget", "rel=0,abs=0"]);
    assert_eq!(code(&o), 5);
    assert_eq!(code(&imi(&["compare", "--scenario", s(&sc), "--out", s(&out), "--budget", "tight"])), 1);
}

#[test]
fn replay_and_corrupted_dump() {
    let dir = TempDir::new().unwrap();
    let sc = scenario(&dir, "s.cfg", &SMALL_SIM.replace("sim.realizations = 2", "sim.realizations = 1"));
    let dump = dir.path().join("trace.bin");
    let o = imi(&["simulate", "--scenario", s(&sc), "--out", s(&dir.path().join("s.csv")), "--dump", s(&dump)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));

    let live = dir.path().join("live.csv");
    let replayed = dir.path().join("replay.csv");
    assert_eq!(code(&imi(&["compare", "--scenario", s(&sc), "--out", s(&live)])), 0);
    let o = imi(&["compare", "--scenario", s(&sc), "--out", s(&replayed), "--replay", s(&dump)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(std::fs::read(&live).unwrap(), std::fs::read(&replayed).unwrap());

    let mut bytes = std::fs::read(&dump).unwrap();
    bytes[0] = b'X';
    std::fs::write(&dump, &bytes).unwrap();
    let o = imi(&["compare", "--scenario", s(&sc), "--out", s(&replayed), "--replay", s(&dump)]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
}
