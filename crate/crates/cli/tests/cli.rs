use std::path::Path;
use std::process::{Command, Output};

use qcoupler::output::read_table;
use serde_json::{json, Value};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_qcoupler"));
    c.env_remove("QCOUPLER_CONFIG_DIR");
    c
}

fn bundled() -> Value {
    serde_json::from_str(include_str!("../configs/table1_semiclassical.json")).unwrap()
}

fn write_config(dir: &Path, sweep: Value) -> std::path::PathBuf {
    let mut cfg = bundled();
    cfg["sweep"] = sweep;
    let path = dir.join("run.json");
    std::fs::write(&path, serde_json::to_string_pretty(&cfg).unwrap()).unwrap();
    path
}

fn run(args: &[&str], config: Option<&Path>, out: &Path) -> Output {
    let mut c = bin();
    c.args(args).arg("--out").arg(out);
    if let Some(p) = config {
        c.arg("--config").arg(p);
    }
    c.output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn eta_table_schema_and_grid_endpoints() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["eta-table"], None, dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("eta_table.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "# tool: qcoupler");
    assert!(lines[2].starts_with("# config_sha256: "));
    assert_eq!(lines[3], "# command: eta-table");
    assert_eq!(lines[4], "gamma,eta0,eta1,sqrt_eta0,sqrt_eta1");
    let t = read_table(&text).unwrap();
    let g = t.column("gamma").unwrap();
    assert_eq!(g.len(), 21);
    assert_eq!((g[0], g[20]), (0.8, 1.0));
    for col in ["eta0", "eta1", "sqrt_eta0", "sqrt_eta1"] {
        assert!(t
            .column(col)
            .unwrap()
            .iter()
            .all(|v| v.is_finite() && *v > 0.0));
    }
}

#[test]
fn coupler_response_small_grid_with_svg() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        json!({"coupler": {"start": -0.5, "stop": 0.5, "step": 0.05}}),
    );
    let o = run(&["coupler-response", "--svg"], Some(&cfg), dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let t = read_table(&std::fs::read_to_string(dir.path().join("coupler_response.csv")).unwrap())
        .unwrap();
    assert_eq!(
        t.columns,
        [
            "flux_c",
            "e0_GHz",
            "i_slope_nA",
            "i_op_nA",
            "inv_l_eff_per_pH",
            "l_eff_pH",
            "region"
        ]
    );
    assert_eq!(t.rows.len(), 21);
    let svg = std::fs::read_to_string(dir.path().join("coupler_response.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
}

#[test]
fn identical_config_gives_identical_bytes_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        json!({"coupler": {"start": 0.3, "stop": 0.5, "step": 0.02}}),
    );
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for (out, threads) in [(&a, "1"), (&b, "3")] {
        let o = run(&["coupler-response", "--threads", threads], Some(&cfg), out);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let read = |d: &Path| std::fs::read(d.join("coupler_response.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &["eta-table"],
        Some(Path::new("/nonexistent/cfg.json")),
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(2));

    let cfg = write_config(
        dir.path(),
        json!({"coupler": {"start": 0.0, "stop": 1.0, "step": 0.0}}),
    );
    let o = run(&["coupler-response"], Some(&cfg), dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(
        stderr(&o).contains("step must be positive"),
        "{}",
        stderr(&o)
    );

    let bad = dir.path().join("typo.json");
    std::fs::write(&bad, r#"{"device": "missing.json"}"#).unwrap();
    let o = run(&["eta-table"], Some(&bad), dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn noise_fit_data_errors_exit_4_with_row() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("rates.csv");
    std::fs::write(
        &data,
        "channel,value,background,f_c\nramsey,2e6,1.4e5,0.45\necho,1e3,1.4e5,0.45\n",
    )
    .unwrap();
    let o = run(
        &["noise-fit", "--data", data.to_str().unwrap()],
        None,
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("row 2"), "{}", stderr(&o));

    let o = run(
        &["noise-fit", "--data", "/nonexistent.csv"],
        None,
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn numeric_failure_exits_3_naming_flux() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = bundled();
    cfg["device"]["coupler"]["i0_na"] = json!(20000.0);
    let path = dir.path().join("stiff.json");
    std::fs::write(&path, cfg.to_string()).unwrap();
    let o = run(&["coupler-response"], Some(&path), dir.path());
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("flux point"), "{}", stderr(&o));
}

#[test]
fn config_dir_env_and_bundled_names() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = bundled();
    cfg["sweep"] = json!({"gamma": {"start": 0.9, "stop": 1.0, "points": 3}});
    std::fs::write(dir.path().join("qcoupler.json"), cfg.to_string()).unwrap();
    let out = dir.path().join("out");
    let o = bin()
        .env("QCOUPLER_CONFIG_DIR", dir.path())
        .args(["eta-table", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let t = read_table(&std::fs::read_to_string(out.join("eta_table.csv")).unwrap()).unwrap();
    assert_eq!(t.rows.len(), 3);

    let o = run(&["eta-table"], Some(Path::new("table1_full.json")), &out);
    assert!(o.status.success(), "{}", stderr(&o));
}
