use std::path::PathBuf;
use std::process::{Command, Output};

fn ptb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ptb"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("ptb-cli-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    let _ = std::fs::remove_file(&p);
    p
}

#[test]
fn design_table_and_json() {
    let o = ptb(&[
        "design", "--preset", "triple", "--K", "9", "--N", "3", "--M", "2",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("F               270"), "{out}");
    assert!(out.contains("F_jcm           504"), "{out}");

    let o = ptb(&[
        "design",
        "--preset",
        "two-group",
        "--K",
        "10",
        "--N",
        "5",
        "--M",
        "2",
        "--json",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["F"].to_string(), "300");
    assert_eq!(v["alpha_lcm"].to_string(), "[0,1,2]");
}

#[test]
fn design_file_feeds_simulation() {
    let doc = scratch("hetero.json");
    let report = scratch("report.json");
    let csv = scratch("runs.csv");
    let o = ptb(&[
        "design",
        "--preset",
        "hetero",
        "--K",
        "7",
        "--N",
        "7",
        "--M",
        "2",
        "--out",
        doc.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for seed in ["1", "2"] {
        let o = ptb(&[
            "simulate",
            "--K",
            "7",
            "--N",
            "7",
            "--M",
            "2",
            "--design",
            doc.to_str().unwrap(),
            "--demand",
            "random",
            "--seed",
            seed,
            "--out",
            report.to_str().unwrap(),
            "--csv",
            csv.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["rate"], "5/2");
    let rows = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(rows.lines().count(), 3, "header plus two runs:\n{rows}");
}

#[test]
fn precondition_errors_exit_2() {
    let o = ptb(&[
        "design",
        "--preset",
        "two-group",
        "--K",
        "7",
        "--N",
        "7",
        "--M",
        "2",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("K must be even"), "{}", stderr(&o));

    let o = ptb(&["compare", "--K", "9", "--N", "4", "--M", "2"]);
    assert_eq!(o.status.code(), Some(2));

    let o = ptb(&[
        "simulate",
        "--K",
        "9",
        "--N",
        "3",
        "--M",
        "2",
        "--preset",
        "triple",
        "--file-bits",
        "7",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("270"));

    let o = ptb(&["search", "--K", "13", "--t", "4"]);
    assert_eq!(o.status.code(), Some(2));

    let o = ptb(&[
        "design", "--preset", "nonsense", "--K", "9", "--N", "3", "--M", "2",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn empty_search_exits_3() {
    let o = ptb(&["search", "--K", "6", "--t", "2", "--max-candidates", "0"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn search_writes_csv_and_best() {
    let csv = scratch("search.csv");
    let best = scratch("best.json");
    let o = ptb(&[
        "search",
        "--K",
        "8",
        "--t",
        "6",
        "--csv",
        csv.to_str().unwrap(),
        "--best-json",
        best.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("best F = 24"));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&best).unwrap()).unwrap();
    assert_eq!(v["F"].to_string(), "24");
    assert!(std::fs::read_to_string(&csv).unwrap().lines().count() > 1);
}

#[test]
fn sweep_columns() {
    let o = ptb(&[
        "sweep",
        "--preset",
        "pair",
        "--K-range",
        "6..12",
        "--step",
        "2",
        "--tbar-fixed",
        "2",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("K,t,F,F_jcm,ratio,bound"));
    let ratios: Vec<f64> = lines
        .map(|l| l.split(',').nth(4).unwrap().parse().unwrap())
        .collect();
    assert_eq!(ratios.len(), 4);
    assert!(ratios.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn self_test_passes() {
    let o = ptb(&["--self-test"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.lines().all(|l| l.starts_with("PASS")), "{out}");
    assert_eq!(out.lines().count(), 7);
}
