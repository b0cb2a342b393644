use std::path::Path;
use std::process::{Command, Output};

fn ffactor(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ffactor")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const EDGE: &str = "p ffactor 2 1\nf 1 1\nf 2 1\ne 1 2 5\n";
const K3: &str = "p ffactor 3 3\nf 1 1\nf 2 1\nf 3 1\ne 1 2 1\ne 2 3 1\ne 1 3 1\n";

#[test]
fn solve_single_edge() {
    let dir = tempfile::tempdir().unwrap();
    let g = write(dir.path(), "edge.txt", EDGE);
    let out = ffactor(&["solve", "--input", &g]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "s 5\nm 1 2\n");
}

#[test]
fn infeasible_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let g = write(dir.path(), "k3.txt", K3);
    assert_eq!(ffactor(&["solve", "--input", &g]).status.code(), Some(2));
    assert_eq!(ffactor(&["oracle", "--input", &g]).status.code(), Some(2));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(ffactor(&["solve"]).status.code(), Some(1));
    assert_eq!(ffactor(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(ffactor(&["solve", "--input", "/nonexistent/graph.txt"]).status.code(), Some(1));
    assert_eq!(ffactor(&["--help"]).status.code(), Some(0));
}

#[test]
fn parse_error_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let g = write(dir.path(), "bad.txt", "p ffactor 2 1\nf 1 1\nf 2 1\ne 1 1 5\n");
    let out = ffactor(&["solve", "--input", &g]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stderr).unwrap().contains("line 4"));
}

#[test]
fn oracle_limits_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let mut text = String::from("p ffactor 26 25\n");
    for v in 1..=26 {
        text.push_str(&format!("f {v} 1\n"));
    }
    for v in 1..=25 {
        text.push_str(&format!("e {v} {} 1\n", v + 1));
    }
    let g = write(dir.path(), "path.txt", &text);
    assert_eq!(ffactor(&["oracle", "--input", &g]).status.code(), Some(3));
}

#[test]
fn verify_accepts_solution_and_rejects_tampering() {
    let dir = tempfile::tempdir().unwrap();
    let g = write(dir.path(), "edge.txt", EDGE);
    let good = write(dir.path(), "good.txt", "s 5\nm 1 2\n");
    let bad = write(dir.path(), "bad.txt", "s 6\nm 1 2\n");
    let short = write(dir.path(), "short.txt", "s 0\n");
    assert_eq!(ffactor(&["verify", "--input", &g, "--factor", &good]).status.code(), Some(0));
    assert_eq!(ffactor(&["verify", "--input", &g, "--factor", &bad]).status.code(), Some(4));
    assert_eq!(ffactor(&["verify", "--input", &g, "--factor", &short]).status.code(), Some(4));
}

#[test]
fn gen_solve_oracle_and_certificate_agree() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g.txt");
    let g = g.to_str().unwrap();
    let out = ffactor(&["gen", "--seed", "11", "--n", "8", "--p", "0.4", "--W", "16", "--max-edges", "20", "--out", g]);
    assert_eq!(out.status.code(), Some(0));
    let cert = dir.path().join("cert.txt");
    let cert = cert.to_str().unwrap();
    let solved = ffactor(&["solve", "--input", g, "--emit-certificate", cert]);
    assert_eq!(solved.status.code(), Some(0));
    let oracle = ffactor(&["oracle", "--input", g]);
    let first = |o: &Output| String::from_utf8_lossy(&o.stdout).lines().next().unwrap().to_string();
    assert_eq!(first(&solved), first(&oracle));
    let f = write(dir.path(), "f.txt", &String::from_utf8(solved.stdout).unwrap());
    let check = ffactor(&["check-duals", "--input", g, "--factor", &f, "--certificate", cert]);
    assert_eq!(check.status.code(), Some(0), "{}", String::from_utf8_lossy(&check.stdout));
}

#[test]
fn check_duals_flags_broken_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let g = write(dir.path(), "edge.txt", EDGE);
    let f = write(dir.path(), "f.txt", "s 5\nm 1 2\n");
    // Zero duals leave both side edges of weight 5 uncovered.
    let cert = write(dir.path(), "c.txt", "y 1 0\ny 2 0\ny 3 0\ny 4 0\n");
    let out = ffactor(&["check-duals", "--input", &g, "--factor", &f, "--certificate", &cert]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8(out.stdout).unwrap().contains("dominance"));
}

#[test]
fn blowup_lists_auxiliary_vertices() {
    let dir = tempfile::tempdir().unwrap();
    let g = write(dir.path(), "edge.txt", EDGE);
    let out = String::from_utf8(ffactor(&["blowup", "--input", &g]).stdout).unwrap();
    assert!(out.contains("c aux 3 4 = edge 1 (1, 2)"));
    assert!(out.contains("p ffactor 4 3"));
}

#[test]
fn bench_writes_one_row_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("out.csv");
    let csv = csv.to_str().unwrap();
    let out = ffactor(&["bench", "--seeds", "1..5", "--n", "8", "--p", "0.4", "--W", "16", "--oracle", "--jobs", "2", "--csv", csv]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(csv).unwrap();
    let mut rd = csv::Reader::from_reader(text.as_bytes());
    let headers = rd.headers().unwrap().clone();
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    let rows: Vec<csv::StringRecord> = rd.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 5);
    let ids: Vec<&str> = rows.iter().map(|r| &r[col("id")]).collect();
    assert_eq!(ids, ["1", "2", "3", "4", "5"]);
    for r in &rows {
        assert_eq!(&r[col("status")], "ok");
        assert_eq!(&r[col("opt_match")], "true");
    }
}
