use std::path::Path;
use std::process::{Command, Output};

fn hrr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hrr"))
        .args(args)
        .env("HRR_THREADS", "2")
        .output()
        .expect("run hrr")
}

fn json_path(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_string()
}

#[test]
fn index_reports_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = json_path(dir.path(), "a.json");
    let b = json_path(dir.path(), "b.json");
    for path in [&a, &b] {
        let out = hrr(&["index", "cp1", "-k", "3", "--formula", "todd,kahler", "--method", "qmc", "--budget", "4096", "--seed", "7", "--json", path]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let ta = std::fs::read(&a).unwrap();
    assert_eq!(ta, std::fs::read(&b).unwrap());
    let text = String::from_utf8(ta).unwrap();
    assert!(text.starts_with("{\n  \"schema\": 1,"));
    assert!(text.contains("\"tolerance\": 5.0000000000000003e-2"));
    assert!(text.contains("\"seed\": 7"));
    assert!(text.contains("\"nearest_integer\": 4"));
}

#[test]
fn twisted_cp1_index_is_k_plus_one() {
    let out = hrr(&["index", "--manifold", "cp1", "-k", "-1", "--formula", "todd"]);
    assert_eq!(out.status.code(), Some(0));
    let out = hrr(&["index", "cp1", "-k", "2", "--formula", "todd", "--tol", "1e-6"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("3.000000000"));
}

#[test]
fn expected_index_mismatch_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("wrong.hm");
    std::fs::write(&file, "@n 1\n@chart cp\n@expected_index 5\nh[1][1] = 1/(1+abs2(z1))^2\n").unwrap();
    let out = hrr(&["index", "--metric-file", file.to_str().unwrap(), "--formula", "todd"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn violated_preconditions_exit_with_two_unless_forced() {
    let out = hrr(&["index", "hopf2", "--formula", "kahler"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("precondition"));
    let out = hrr(&["index", "hopf2", "--formula", "todd,bismut"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(hrr(&["index", "k3"]).status.code(), Some(2));
    assert_eq!(hrr(&["index", "torus2", "-k", "1"]).status.code(), Some(2));
    assert_eq!(hrr(&["check", "hopf3", "--suite", "skt"]).status.code(), Some(2));
    assert_eq!(hrr(&["check", "cp1", "--suite", "nope"]).status.code(), Some(2));
    assert_eq!(hrr(&["laplacian", "cp1"]).status.code(), Some(2));
}

#[test]
fn check_suites_pass_on_builtins() {
    for (m, suite) in [("cp1", "connections"), ("cp2", "bianchi"), ("hopf2", "hopf"), ("hopf2", "skt"), ("torus4", "maurer-cartan")] {
        let out = hrr(&["check", m, "--suite", suite, "--points", "5"]);
        assert_eq!(out.status.code(), Some(0), "{m} {suite}: {}", String::from_utf8_lossy(&out.stdout));
    }
}

#[test]
fn convergence_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = json_path(dir.path(), "c.csv");
    let out = hrr(&["convergence", "torus2", "--levels", "4,8", "--csv", &csv]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "level,evaluations,value,error_estimate");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("4,20,0.0000000000000000e0,"));
}

#[test]
fn parse_reports_positions() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("fs.hm");
    std::fs::write(&good, "@name fs\n@n 1\n@chart cp\nh[1][1] = 1/(1+abs2(z1))^2\n").unwrap();
    let out = hrr(&["parse", good.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("kahler true"));

    let bad = dir.path().join("bad.hm");
    std::fs::write(&bad, "@n 1\n@chart cp\nh[1][1] = 1 +\n").unwrap();
    let out = hrr(&["parse", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bad.hm:3:14"), "{err}");
}

#[test]
fn laplacian_probe_on_hopf() {
    let out = hrr(&["laplacian", "hopf2", "--points", "5"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
}
