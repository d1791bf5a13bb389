use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BASE: &str = "\
grid.n = 32
params.s = 0.5
params.p = 2
params.q = 4
params.r = 3
";

fn fplap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fplap")).args(args).output().expect("spawn fplap")
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn value<'a>(text: &'a str, key: &str) -> &'a str {
    text.lines().find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix('='))).unwrap_or_else(|| panic!("no {key} in {text}"))
}

#[test]
fn simulate_zero_data_writes_zero_energy() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "zero.cfg",
        &format!("{BASE}initial.kind = zero\ntime.T = 0.1\noutput.records = rec.csv\noutput.snapshot_stride = 1\noutput.snapshot_stem = snap\n"),
    );
    let out = fplap(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(value(&stdout(&out), "status"), "completed");
    let csv = std::fs::read_to_string(dir.path().join("rec.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "t,dt,norm2,normr,normq,norminf,seminorm_p,Phi,psi,E,dissipation_lhs,dissipation_rhs");
    let rows: Vec<&str> = lines.collect();
    assert!(rows.len() > 1);
    for row in rows {
        assert_eq!(row.split(',').nth(9).unwrap().parse::<f64>().unwrap(), 0.0);
    }
    let snap = std::fs::read_to_string(dir.path().join("snap-000000.csv")).unwrap();
    assert!(snap.starts_with("x,u\n"));
    assert_eq!(snap.lines().count(), 33);
}

#[test]
fn simulate_large_bump_blows_up() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "big.cfg", &format!("{BASE}initial.amplitude = 6\ntime.T = 2\n"));
    let out = fplap(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(10));
    let text = stdout(&out);
    let lo: f64 = value(&text, "blowup_time_lower").parse().unwrap();
    let hi: f64 = value(&text, "blowup_time_upper").parse().unwrap();
    assert!(0.0 < lo && lo <= hi && hi < 2.0);
}

#[test]
fn config_errors_exit_2_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.cfg", &format!("{BASE}time.T = 1\ntime.bogus = 3\n"));
    let out = fplap(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 7: unknown key `time.bogus`"));

    let missing = fplap(&["simulate", "--config", dir.path().join("absent.cfg").to_str().unwrap()]);
    assert_eq!(missing.status.code(), Some(2));

    let q_le_p = write_config(dir.path(), "qp.cfg", &BASE.replace("params.q = 4", "params.q = 2").replace("grid.n", "time.T = 1\ngrid.n"));
    assert_eq!(fplap(&["blowup-cert", "--config", q_le_p.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn verify_exit_codes() {
    assert_eq!(fplap(&["verify", "--suite", "nope"]).status.code(), Some(2));
    assert_eq!(fplap(&["verify", "--samples", "0"]).status.code(), Some(2));
    let out = fplap(&["verify", "--suite", "stroock-varopoulos", "--seed", "1", "--samples", "100000"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("status=pass"));
    let all = fplap(&["verify", "--samples", "50"]);
    assert_eq!(all.status.code(), Some(0));
    assert_eq!(stdout(&all).lines().count(), fplap_cli::verify::SUITES.len());
}

#[test]
fn estimate_cstar_and_embedding_gate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.cfg", &format!("{}time.T = 1\n", BASE.replace("grid.n = 32", "grid.n = 64")));
    let a = fplap(&["estimate-cstar", "--config", cfg.to_str().unwrap(), "--seed", "1"]);
    let b = fplap(&["estimate-cstar", "--config", cfg.to_str().unwrap(), "--seed", "2", "--out", dir.path().join("c.txt").to_str().unwrap()]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(b.status.code(), Some(0));
    let (ta, tb) = (stdout(&a), stdout(&b));
    assert_eq!(value(&ta, "converged"), "true");
    let (ca, cb): (f64, f64) = (value(&ta, "c_star").parse().unwrap(), value(&tb, "c_star").parse().unwrap());
    assert!(ca > 0.0 && (ca - cb).abs() <= 0.01 * ca);
    assert_eq!(std::fs::read_to_string(dir.path().join("c.txt")).unwrap(), tb);

    let supercritical = write_config(
        dir.path(),
        "sc.cfg",
        "grid.dim = 2\ngrid.n = 6\nparams.s = 0.5\nparams.p = 2\nparams.q = 5\nparams.r = 20\ntime.T = 1\n",
    );
    assert_eq!(fplap(&["estimate-cstar", "--config", supercritical.to_str().unwrap()]).status.code(), Some(3));
}

#[test]
fn blowup_cert_tiny_data_names_failed_hypothesis() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "t.cfg", &format!("{BASE}initial.amplitude = 0.01\ntime.T = 1\nsobolev.starts = 2\n"));
    let cert = dir.path().join("cert.txt");
    let out = fplap(&["blowup-cert", "--config", cfg.to_str().unwrap(), "--out", cert.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(21));
    let text = std::fs::read_to_string(cert).unwrap();
    assert!(text.starts_with("schema_version=1\n"));
    assert_eq!(value(&text, "verdict"), "hypotheses-unmet");
    assert!(value(&text, "failures").contains("alpha"));
    assert_eq!(value(&text, "t_star_bound"), "none");
}

#[test]
fn help_is_not_an_error() {
    let out = fplap(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("blowup-cert"));
    assert_eq!(fplap(&["frobnicate"]).status.code(), Some(2));
}
