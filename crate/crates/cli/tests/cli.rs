use std::process::Command;

fn mptc() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mptc"))
}

#[test]
fn invalid_scenario_names_the_rule() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    let text = include_str!("../scenarios/no-attack.json").replace("\"f_a\": 1", "\"f_a\": 3");
    std::fs::write(&path, text).unwrap();
    let out = mptc().arg("--scenario").arg(&path).output().unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("p_f = 3 below 7"), "{err}");
}

#[test]
fn unknown_builtin_is_rejected() {
    let out = mptc().args(["--builtin", "nope"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown builtin"));
}

#[test]
fn out_dir_gets_csv_and_plot_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = mptc()
        .args([
            "--builtin",
            "no-attack",
            "--builtin",
            "attack-leader-reconfig",
        ])
        .args(["--clients", "1,4", "--seeds", "2", "--duration", "0.3"])
        .arg("--trace")
        .arg(dir.path().join("trace.bin"))
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = std::fs::read_to_string(dir.path().join("results.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], mptc_cli::CSV_HEADER);
    assert_eq!(lines.len(), 1 + 2 * 2 * 2);
    assert!(lines[1].starts_with("attack-leader-reconfig,1,"));
    let tp = std::fs::read_to_string(dir.path().join("throughput.dat")).unwrap();
    assert_eq!(
        tp.lines().next(),
        Some("# clients attack-leader-reconfig no-attack")
    );
    assert_eq!(tp.lines().count(), 3);
    let trace = std::fs::read(dir.path().join("trace.bin")).unwrap();
    let records = mptc_simnet::trace::read_trace(&trace).expect("trace parses");
    assert!(!records.is_empty());
}
