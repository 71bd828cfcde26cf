use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use drss_cli::table::Table;

fn drss(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_drss"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap_or(-1)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("params.txt");
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn run_writes_self_describing_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "n=4\nt_pk=3\nseed=5\nbatch_size=20\n");
    let out = dir.path().join("o");
    let o = drss(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("runs: 20 (all sums exact: true)"), "{stdout}");

    let t = Table::read(&out.join("runs.csv")).unwrap();
    assert_eq!(t.rows.len(), 20);
    for row in &t.rows {
        assert_eq!(t.get(row, "schema"), Some("drss.v1"));
        assert_eq!(t.get(row, "n"), Some("4"));
        assert_eq!(t.get(row, "m"), Some("6"));
        assert_eq!(t.get(row, "messages_total"), Some("48"));
        assert_eq!(t.get(row, "ttp_ops"), Some("1"));
    }
}

#[test]
fn flags_override_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "n=3\nseed=1\nbatch_size=10\n");
    let out = dir.path().join("o");
    let o = drss(&[
        "run",
        "--config",
        &cfg,
        "--batch",
        "3",
        "--seed",
        "9",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let t = Table::read(&out.join("runs.csv")).unwrap();
    assert_eq!(t.rows.len(), 3);
    assert_eq!(t.get(&t.rows[0], "root_seed"), Some("9"));
}

#[test]
fn run_is_reproducible_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let read = |name: &str| {
        let out = dir.path().join(name);
        let o = drss(&["run", "--seed", "42", "--batch", "25", "--out", out.to_str().unwrap()]);
        assert_eq!(code(&o), 0);
        Table::read(&out.join("runs.csv"))
            .unwrap()
            .deterministic()
            .to_csv()
            .unwrap()
    };
    assert_eq!(read("a"), read("b"));
}

#[test]
fn sweep_case3_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let o = drss(&["sweep", "--case3", "--batch", "50", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let t = Table::read(&out.join("sweep.csv")).unwrap();
    assert_eq!(t.rows.len(), 4);
    let values: Vec<&str> = t.rows.iter().map(|r| t.get(r, "value").unwrap()).collect();
    assert_eq!(values, ["5", "6", "7", "8"]);
    let makespans: Vec<f64> = t.rows.iter().map(|r| t.get_f64(r, "mean_makespan").unwrap()).collect();
    assert!(makespans.windows(2).all(|w| w[1] <= w[0]), "{makespans:?}");
    // m=5 cannot host 6 distinct packets per party.
    assert_eq!(t.get(&t.rows[0], "m_adjusted"), Some("true"));
    assert_eq!(t.get(&t.rows[0], "m"), Some("6"));
    assert!(String::from_utf8_lossy(&o.stdout).contains("requested m=5 is infeasible"));
    let svg = fs::read_to_string(out.join("sweep_case3.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
}

#[test]
fn explicit_sweep_and_infeasible_point() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let o = drss(&[
        "sweep",
        "--param",
        "n",
        "--values",
        "2,3,4",
        "--batch",
        "5",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(Table::read(&out.join("sweep.csv")).unwrap().rows.len(), 3);
    assert!(out.join("sweep_custom.svg").exists());

    let cfg = write_config(dir.path(), "n=3\nm=6\n");
    let bad = dir.path().join("bad");
    let o = drss(&[
        "sweep",
        "--config",
        &cfg,
        "--param",
        "n",
        "--values",
        "2,7",
        "--batch",
        "2",
        "--out",
        bad.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    assert!(stderr(&o).contains("n=7"), "{}", stderr(&o));
    assert!(!bad.join("sweep.csv").exists());
}

#[test]
fn sweep_needs_a_selection() {
    let dir = tempfile::tempdir().unwrap();
    let o = drss(&["sweep", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 2);
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    for (text, needle) in [
        ("n=1\n", "minimum number of parties are 2"),
        ("t_pk=2\n", "minimum 3"),
        ("n=3\nflavour=mint\n", "line 2: unknown key"),
    ] {
        let cfg = write_config(dir.path(), text);
        let o = drss(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
        assert_eq!(code(&o), 2, "{text}");
        assert!(stderr(&o).contains(needle), "{}", stderr(&o));
    }
    assert!(!out.exists());
}

#[test]
fn infeasible_exit_3_and_missing_file_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let cfg = write_config(dir.path(), "n=10\nt_pk=3\nm=6\nm_x=6\n");
    let o = drss(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    let missing = dir.path().join("nope.txt");
    let o = drss(&[
        "run",
        "--config",
        missing.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 4, "{}", stderr(&o));
}

#[test]
fn output_path_blocked_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let o = drss(&["run", "--batch", "2", "--out", blocker.to_str().unwrap()]);
    assert_eq!(code(&o), 4, "{}", stderr(&o));
}

#[test]
fn leakage_grid_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let o = drss(&[
        "leakage",
        "--m",
        "8",
        "--k-values",
        "1,2,3,4,5",
        "--trials",
        "500",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let t = Table::read(&out.join("leakage.csv")).unwrap();
    assert_eq!(t.rows.len(), 9 * 5);
    for row in &t.rows {
        if t.get(row, "l") == Some("0") {
            assert_eq!(t.get_f64(row, "p_eq1"), Some(0.0));
            assert_eq!(t.get_f64(row, "p_exact"), Some(0.0));
            if t.get(row, "k") != Some("5") {
                assert_eq!(t.get_f64(row, "p_empirical"), Some(0.0));
            }
        }
        let k: usize = t.get(row, "k").unwrap().parse().unwrap();
        // k=5 needs 10 distinct anonymizers: analytic only.
        assert_eq!(t.get(row, "p_empirical").unwrap().is_empty(), k == 5);
    }
    assert!(out.join("leakage.svg").exists());

    let o = drss(&["sweep", "--case1", "--batch", "10", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    fs::remove_file(out.join("sweep_case1.svg")).unwrap();
    let o = drss(&["report", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report = fs::read_to_string(out.join("report.md")).unwrap();
    assert!(report.contains("## Parameter sweeps"));
    assert!(report.contains("## Collusion leakage"));
    assert!(out.join("sweep_case1.svg").exists());
}

#[test]
fn svg_is_derived_from_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let o = drss(&["sweep", "--case1", "--batch", "10", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let first = fs::read_to_string(out.join("sweep_case1.svg")).unwrap();
    let o = drss(&["report", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert_eq!(fs::read_to_string(out.join("sweep_case1.svg")).unwrap(), first);
}

#[test]
fn report_without_data_fails() {
    let dir = tempfile::tempdir().unwrap();
    let o = drss(&["report", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 2);
}

#[test]
fn single_mask_protocol_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "protocol=single-mask\nn=6\nm=4\nm_x=3\nbatch_size=5\n");
    let out = dir.path().join("o");
    let o = drss(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let t = Table::read(&out.join("runs.csv")).unwrap();
    assert_eq!(t.get(&t.rows[0], "protocol"), Some("single-mask"));
    assert_eq!(t.get(&t.rows[0], "messages_total"), Some("24"));
}
