use std::path::Path;
use std::process::{Command, Output};

fn fhn(dir: &Path, config: &str, extra: &[&str]) -> Output {
    let path = dir.join("run.toml");
    std::fs::write(&path, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_fhn"))
        .arg("--config")
        .arg(&path)
        .args(extra)
        .env("FHN_THREADS", "1")
        .current_dir(dir)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn kernel_mode_prints_one_csv_line() {
    let dir = tempfile::tempdir().unwrap();
    let o = fhn(dir.path(), "mode = \"kernel\"\n[kernel]\nkind = \"k1\"\nx = 0.25\nt = 0.5\n", &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 1, "{out}");
    let cells: Vec<&str> = out.trim().split(',').collect();
    assert_eq!(cells[..3], ["k1", "2.5000000000000000e-1", "5.0000000000000000e-1"]);
    let v: f64 = cells[3].parse().unwrap();
    let direct = fhn_core::kernel::k_i(&fhn_core::FhnParams::unit(), 1, 0.25, 0.5, 1e-10).unwrap().value;
    assert_eq!(v, direct);
}

#[test]
fn flags_override_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let o = fhn(dir.path(), "mode = \"solve-fhn\"\n", &["--mode", "kernel", "--tol", "1e-9"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("k0,"));
    let o = fhn(dir.path(), "", &["--mode", "warp"]);
    assert_eq!(o.status.code(), Some(2));
    let o = fhn(dir.path(), "", &["--tol", "-1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("kernel_tol"), "{}", stderr(&o));
}

#[test]
fn exit_codes_for_config_failures() {
    let dir = tempfile::tempdir().unwrap();
    let o = fhn(dir.path(), "mode = \"kernel\"\nextra = 3\n", &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("extra"));
    let o = fhn(dir.path(), "mode = [", &[]);
    assert_eq!(o.status.code(), Some(5));
    let o = Command::new(env!("CARGO_BIN_EXE_fhn"))
        .args(["--config", "/nonexistent/run.toml"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(4));
    let o = fhn(dir.path(), "mode = \"solve-fhn\"\n", &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("scenario"), "{}", stderr(&o));
}

#[test]
fn forced_non_convergence_persists_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "mode = \"solve-fhn\"\nscenario = \"cubic-bump-neumann\"\nout = \"res\"\n[grid]\nnx = 16\nnt = 10\n[tolerances]\nmax_iter = 1\n";
    let o = fhn(dir.path(), cfg, &[]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(stderr(&o).contains("solve-fhn"));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("res/picard.json")).unwrap()).unwrap();
    assert_eq!(report["iterations"], 1);
    assert_eq!(report["converged"], false);
    assert!(!dir.path().join("res/u.csv").exists());
}

#[test]
fn solve_fhn_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "mode = \"solve-fhn\"\nscenario = \"cubic-bump-dirichlet\"\n[grid]\nnx = 16\nnt = 10\n";
    let mut previous = None;
    for out in ["a", "b"] {
        let o = fhn(dir.path(), cfg, &["--out", out]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let files: Vec<Vec<u8>> = ["u.csv", "v.csv", "picard.json"]
            .iter()
            .map(|f| std::fs::read(dir.path().join(out).join(f)).unwrap())
            .collect();
        if let Some(p) = previous.replace(files.clone()) {
            assert_eq!(p, files);
        }
    }
    let text = std::fs::read_to_string(dir.path().join("a/u.csv")).unwrap();
    assert_eq!(text.lines().count(), 1 + 17 * 10);
}

#[test]
fn heat_preset_matches_its_exact_solution() {
    let dir = tempfile::tempdir().unwrap();
    for mode in ["solve-linear", "oracle"] {
        let o = fhn(dir.path(), &format!("mode = \"{mode}\"\nscenario = \"heat-sanity\"\n"), &[]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let line = stdout(&o);
        let err: f64 = line.trim().strip_prefix("max_error_vs_exact,").unwrap().parse().unwrap();
        assert!(err < 1e-3, "{mode}: {err}");
    }
}

#[test]
fn certify_writes_a_passing_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "mode = \"certify\"\nscenario = \"cubic-bump-neumann\"\nseed = 5\n[grid]\nnx = 16\nnt = 10\n[certify]\noffgrid_points = 10\nkernel_times = 4\n";
    let o = fhn(dir.path(), cfg, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let certs: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/certificates.json")).unwrap()).unwrap();
    let certs = certs.as_array().unwrap();
    assert!(certs.len() >= 8);
    assert!(certs.iter().all(|c| c["passed"] == true));
}

#[test]
fn certify_outside_the_regime_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "mode = \"certify\"\nscenario = \"cubic-bump-neumann\"\n[grid]\nnx = 8\nnt = 4\n[params]\neps = 1.0\na = -0.5\nb = 1.0\nbeta = 1.0\nlength = 1.0\nhorizon = 1.0\n";
    let o = fhn(dir.path(), cfg, &[]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("a > 0"), "{}", stderr(&o));
}

#[test]
fn inline_scenario_with_sampled_file() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("u0.csv"), "x,value\n0,0\n0.25,0.5\n0.5,1\n0.75,0.5\n1,0\n").unwrap();
    let cfg = "mode = \"solve-fhn\"\n[grid]\nnx = 8\nnt = 5\n[inline]\nboundary = \"dirichlet\"\nu0 = { file = \"u0.csv\" }\n";
    let o = fhn(dir.path(), cfg, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(dir.path().join("out/v.csv").exists());
}
