use std::process::Command;

fn redist() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_redist"));
    c.env("RUST_LOG", "error");
    c
}

#[test]
fn single_run_prints_a_table_and_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = redist()
        .args(["--case", "circle", "--order", "2", "--band", "0.3", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("level,h,K,l2,linf,l1,steps,troubled,runtime_s")
    );
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(&row[..3], ["0", "0.4", "240"]);
    assert!(row[3].parse::<f64>().unwrap() < 0.05);
    let names: Vec<String> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    assert!(names.iter().any(|n| n.ends_with("_results.csv")), "{names:?}");
    assert!(names.iter().any(|n| n.ends_with("_timing.csv")), "{names:?}");
}

#[test]
fn sweep_reports_orders() {
    let out = redist()
        .args([
            "--case", "circle", "--order", "1", "--levels", "2", "--band", "0.3",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[2].split(',').nth(6).unwrap().parse::<f64>().unwrap() > 0.5);
}

#[test]
fn config_file_is_applied_and_flags_override_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(
        &cfg,
        "# comment\ncase = ellipse\norder = 6\nband = 0.2\none-sided = false\n",
    )
    .unwrap();
    let out = redist()
        .arg("--config")
        .arg(&cfg)
        .args(["--order", "1"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn bad_input_exits_with_code_one() {
    for args in [
        vec!["--case", "nonsense"],
        vec!["--order", "9"],
        vec!["--limiter", "sometimes"],
        vec!["--fv-order", "3"],
        vec!["--mesh", "/nonexistent/mesh.msh"],
    ] {
        let out = redist().args(&args).output().unwrap();
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert!(String::from_utf8_lossy(&out.stderr).contains("error"), "{args:?}");
    }
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "colour = blue\n").unwrap();
    let out = redist().arg("--config").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}
