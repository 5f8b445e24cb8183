use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

const EMPLOYE_QUERY: &str = "SELECT nom FROM employé WHERE salaire is faible and age is grand \
                             and nbAT is moyen and nbE is faible and taille is moyenne";

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn flexq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flexq")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn fit_ages_reports_four_clusters() {
    let dir = tempfile::tempdir().unwrap();
    let kb = dir.path().join("kb.json");
    let out = stdout(&flexq(&["--kb", path(&kb), "fit", path(&data("ages.csv")), "age"]));
    assert!(out.starts_with("age: 4 clusters, DB* 0.3"), "{out}");
    for k in ["[10, 15]", "[38, 41]", "[69, 72]", "[90, 95]"] {
        assert!(out.contains(k), "{out}");
    }
    let show = stdout(&flexq(&["--kb", path(&kb), "show-mf", "age"]));
    assert_eq!(show.lines().count(), 5);
    assert!(show.lines().nth(1).unwrap().split_whitespace().eq(["t1", "10", "10", "15", "38"]));
}

#[test]
fn show_mf_prints_three_rows() {
    let out = stdout(&flexq(&["--kb", path(&data("employe_kb.json")), "show-mf", "taille"]));
    let rows: Vec<Vec<&str>> = out.lines().skip(1).map(|l| l.split_whitespace().collect()).collect();
    assert_eq!(
        rows,
        vec![
            vec!["petite", "100", "100", "160", "165"],
            vec!["moyenne", "160", "165", "170", "175"],
            vec!["grande", "170", "175", "200", "200"],
        ]
    );
}

#[test]
fn employe_query_lists_failure_reasons() {
    let (kb, csv) = (data("employe_kb.json"), data("employe.csv"));
    let args = ["--kb", path(&kb), "--data", path(&csv), "query", EMPLOYE_QUERY];
    let out = stdout(&flexq(&args));
    let reasons: Vec<&str> = out
        .lines()
        .skip_while(|l| !l.starts_with("minimal failure reasons"))
        .skip(1)
        .take_while(|l| l.starts_with("  - "))
        .collect();
    assert_eq!(
        reasons,
        vec![
            "  - nbE is faible",
            "  - salaire is faible and age is grand",
            "  - age is grand and nbAT is moyen",
            "  - salaire is faible and nbAT is moyen and taille is moyenne",
        ]
    );
    assert!(out.contains("0.86  nom=Bassem"));
}

#[test]
fn json_output_parses() {
    let kb = data("employe_kb.json");
    let csv = data("employe.csv");
    let args = ["--kb", path(&kb), "--data", path(&csv), "--format", "json", "query", EMPLOYE_QUERY];
    let v: serde_json::Value = serde_json::from_str(&stdout(&flexq(&args))).unwrap();
    assert_eq!(v["status"], "empty");
    assert_eq!(v["approximate"].as_array().unwrap().len(), 4);
    let out = stdout(&flexq(&["--kb", path(&kb), "--format", "json", "show-mf", "age"]));
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["terms"].as_array().unwrap().len(), 3);
}

#[test]
fn insert_and_delete_update_the_knowledge_base() {
    let dir = tempfile::tempdir().unwrap();
    let kb = dir.path().join("kb.json");
    stdout(&flexq(&["--kb", path(&kb), "fit", path(&data("ages.csv")), "age"]));
    let out = stdout(&flexq(&["--kb", path(&kb), "insert", "age", "37"]));
    assert!(out.starts_with("age: Adjusted"), "{out}");
    let out = stdout(&flexq(&["--kb", path(&kb), "insert", "age", "-10"]));
    assert!(out.starts_with("age: Reclustered"), "{out}");
    let out = stdout(&flexq(&["--kb", path(&kb), "--format", "json", "delete", "age", "-10"]));
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["attribute"], "age");
    let o = flexq(&["--kb", path(&kb), "delete", "age", "16"]);
    assert!(!o.status.success());
    assert_eq!(String::from_utf8_lossy(&o.stderr).trim(), "flexq: age: value 16 is not present");
}

#[test]
fn export_ft_writes_the_term_table() {
    let dir = tempfile::tempdir().unwrap();
    let ft = dir.path().join("ft.csv");
    let out = stdout(&flexq(&["--kb", path(&data("employe_kb.json")), "export-ft", "--out", path(&ft)]));
    assert_eq!(out.trim(), format!("wrote 15 terms to {}", ft.display()));
    let text = std::fs::read_to_string(&ft).unwrap();
    assert_eq!(text.lines().next(), Some("terme,A,B,C,D"));
    assert!(text.contains("taille-moyenne,160,165,170,175"));
}

#[test]
fn repl_reruns_numbered_subqueries() {
    let mut child = Command::new(env!("CARGO_BIN_EXE_flexq"))
        .args(["--kb", path(&data("employe_kb.json")), "--data", path(&data("employe.csv")), "repl"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    writeln!(child.stdin.as_mut().unwrap(), "{EMPLOYE_QUERY}\n4\nquit").unwrap();
    let out = stdout(&child.wait_with_output().unwrap());
    assert!(out.contains("SELECT nom FROM employé WHERE nbAT is moyen and taille is moyenne\n3 answers"));
    assert!(out.contains("1.00  nom=Amal"));
}

#[test]
fn failures_exit_nonzero_with_one_line() {
    let (kb, csv) = (data("employe_kb.json"), data("employe.csv"));
    let cases: [&[&str]; 4] = [
        &["--kb", "/nonexistent/kb.json", "show-mf", "age"],
        &["--kb", path(&kb), "query", EMPLOYE_QUERY],
        &["--kb", path(&kb), "--data", path(&csv), "query", "SELECT x"],
        &["--kb", path(&kb), "show-mf", "poids"],
    ];
    for args in cases {
        let o = flexq(args);
        assert!(!o.status.success(), "{args:?}");
        let err = String::from_utf8_lossy(&o.stderr);
        assert_eq!(err.lines().count(), 1, "{err}");
        assert!(err.starts_with("flexq: "), "{err}");
    }
    let o = flexq(&["--alpha", "1.5", "show-mf", "age"]);
    assert_eq!(o.status.code(), Some(2));
}
