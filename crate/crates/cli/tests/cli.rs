use std::path::Path;
use std::process::Command;

use superrad_cli::output::from_csv;
use superrad_cli::RunSummary;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_superrad"));
    c.env_remove("SUPERRAD_WORKERS");
    c
}

fn write(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn meanfield_config(dir: &Path, tag: &str) -> String {
    format!(
        r#"
[model]
kind = "squeezed"
gamma = 1.0
zeta = 0.5
n = 20

[run]
backend = "meanfield"
dt = 0.001
t_max = 1.0
sample_every = 0.05
n_traj = 100
seed = 11

[observables]
pairs = [[0, 1]]

[output]
series = "{}"
summary = "{}"
"#,
        dir.join(format!("{tag}.csv")).display(),
        dir.join(format!("{tag}.summary.toml")).display()
    )
}

#[test]
fn simulate_is_byte_identical_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let one = write(dir.path(), "one.toml", &meanfield_config(dir.path(), "one"));
    let eight = write(dir.path(), "eight.toml", &meanfield_config(dir.path(), "eight"));
    let st = bin().args(["simulate", "--config"]).arg(&one).env("SUPERRAD_WORKERS", "1").status().unwrap();
    assert!(st.success());
    let st = bin().args(["simulate", "--config"]).arg(&eight).env("SUPERRAD_WORKERS", "8").status().unwrap();
    assert!(st.success());
    let a = std::fs::read(dir.path().join("one.csv")).unwrap();
    let b = std::fs::read(dir.path().join("eight.csv")).unwrap();
    assert_eq!(a, b);
    assert!(a.starts_with(b"# superrad-series v1 "));

    let summary = std::fs::read_to_string(dir.path().join("eight.summary.toml")).unwrap();
    let s = RunSummary::parse(&summary).unwrap();
    assert_eq!(s.resolved.as_ref().unwrap().workers, 8);
    assert_eq!(s.n_traj, Some(100));
    assert!(s.peak.is_some());
    assert!(s.errors.iter().any(|e| e.name == "R_over_N"));
}

#[test]
fn summary_config_echo_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "a.toml", &meanfield_config(dir.path(), "a"));
    assert!(bin().args(["simulate", "--config"]).arg(&cfg).status().unwrap().success());
    let s = RunSummary::parse(&std::fs::read_to_string(dir.path().join("a.summary.toml")).unwrap()).unwrap();
    let mut echo = s.config.clone();
    echo.output.series = Some(dir.path().join("b.csv"));
    echo.output.summary = Some(dir.path().join("b.summary.toml"));
    let cfg_b = write(dir.path(), "b.toml", &echo.to_toml());
    assert!(bin().args(["simulate", "--config"]).arg(&cfg_b).status().unwrap().success());
    assert_eq!(
        std::fs::read(dir.path().join("a.csv")).unwrap(),
        std::fs::read(dir.path().join("b.csv")).unwrap()
    );
}

#[test]
fn config_errors_exit_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = meanfield_config(dir.path(), "x").replace("seed = 11", "seeed = 11");
    let cfg = write(dir.path(), "bad.toml", &bad);
    let out = bin().args(["simulate", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("seeed") && err.contains("line"), "{err}");

    let wg = meanfield_config(dir.path(), "y")
        .replace("kind = \"squeezed\"", "kind = \"waveguide\"")
        .replace("zeta = 0.5\nn = 20", "n = 4\nspacing = 0.6")
        .replace("backend = \"meanfield\"", "backend = \"dicke\"")
        .replace("n_traj = 100\n", "")
        .replace("pairs = [[0, 1]]", "");
    let cfg = write(dir.path(), "wg.toml", &wg);
    let out = bin().args(["simulate", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));

    let out = bin()
        .args(["simulate", "--config"])
        .arg(dir.path().join("missing.toml"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    let cfg = write(dir.path(), "ok.toml", &meanfield_config(dir.path(), "z"));
    let out = bin()
        .args(["simulate", "--config"])
        .arg(&cfg)
        .env("SUPERRAD_WORKERS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn numerical_failures_exit_with_code_3() {
    let dir = tempfile::tempdir().unwrap();
    let body = format!(
        r#"
[model]
kind = "squeezed"
gamma = 1.0
zeta = 1.0
n = 40
[run]
backend = "dicke"
dt = 0.5
t_max = 20.0
sample_every = 0.5
[output]
series = "{}"
"#,
        dir.path().join("u.csv").display()
    );
    let cfg = write(dir.path(), "unstable.toml", &body);
    let out = bin().args(["simulate", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn predict_writes_peak_quantities() {
    let dir = tempfile::tempdir().unwrap();
    let body = format!(
        r#"
[model]
kind = "squeezed"
gamma = 1.0
zeta = 0.5
n = 100
[run]
backend = "analytic"
[output]
summary = "{}"
"#,
        dir.path().join("p.summary.toml").display()
    );
    let cfg = write(dir.path(), "p.toml", &body);
    let out = bin().args(["predict", "--config"]).arg(&cfg).output().unwrap();
    assert!(out.status.success());
    let s = RunSummary::parse(&std::fs::read_to_string(dir.path().join("p.summary.toml")).unwrap()).unwrap();
    let p = s.peak.unwrap();
    assert!((p.r_star - 0.195707 * 0.5 * 1e4).abs() < 1e-9);
    assert!((p.t_star - 100f64.ln() / 50.0).abs() < 1e-12);
    assert_eq!(p.s_z_star, 0.064);
    assert_eq!(s.prediction.unwrap().steady_excitation, Some(0.25));
    // simulate with the analytic backend is summary-only too
    let out = bin().args(["simulate", "--config"]).arg(&cfg).output().unwrap();
    assert!(out.status.success());
}

#[test]
fn compare_dicke_and_meanfield() {
    let dir = tempfile::tempdir().unwrap();
    let common = "[model]\nkind = \"squeezed\"\ngamma = 1.0\nzeta = 0.5\nn = 50\n";
    let a = write(
        dir.path(),
        "dicke.toml",
        &format!("{common}[run]\nbackend = \"dicke\"\ndt = 0.0004\nt_max = 2.0\nsample_every = 0.02\n"),
    );
    let b = write(
        dir.path(),
        "mf.toml",
        &format!(
            "{common}[run]\nbackend = \"meanfield\"\ndt = 0.0004\nt_max = 2.0\nsample_every = 0.02\nn_traj = 1000\nseed = 5\n"
        ),
    );
    let out = bin()
        .args(["compare", "--observable", "Sz_over_N", "--tol", "0"])
        .arg("--a")
        .arg(&a)
        .arg("--b")
        .arg(&b)
        .output()
        .unwrap();
    let report = String::from_utf8_lossy(&out.stdout);
    let max_dev: f64 = report
        .lines()
        .find_map(|l| l.strip_prefix("max_abs_deviation = "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(max_dev <= 0.02, "{report}");

    let csv_a = dir.path().join("mf.csv");
    let cfg_csv = write(
        dir.path(),
        "mf_out.toml",
        &format!(
            "{}[output]\nseries = \"{}\"\nsummary = \"{}\"\n",
            std::fs::read_to_string(&b).unwrap(),
            csv_a.display(),
            dir.path().join("mf.summary.toml").display()
        ),
    );
    assert!(bin().args(["simulate", "--config"]).arg(&cfg_csv).status().unwrap().success());
    let out = bin()
        .args(["compare", "--observable", "Sz_over_N", "--tol", "0"])
        .arg("--a")
        .arg(&csv_a)
        .arg("--b")
        .arg(&b)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let parsed = from_csv(&std::fs::read_to_string(&csv_a).unwrap()).unwrap();
    assert_eq!(parsed.meta.n_traj, Some(1000));
}

#[test]
fn compare_rejects_mismatched_grids() {
    let dir = tempfile::tempdir().unwrap();
    let common = "[model]\nkind = \"squeezed\"\ngamma = 1.0\nzeta = 1.0\nn = 6\n";
    let a = write(dir.path(), "a.toml", &format!("{common}[run]\nbackend = \"dicke\"\nt_max = 1.0\nsample_every = 0.1\ndt = 0.001\n"));
    let b = write(dir.path(), "b.toml", &format!("{common}[run]\nbackend = \"dicke\"\nt_max = 1.0\nsample_every = 0.05\ndt = 0.001\n"));
    let out = bin()
        .args(["compare", "--observable", "Sz_over_N", "--tol", "3"])
        .arg("--a")
        .arg(&a)
        .arg("--b")
        .arg(&b)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
