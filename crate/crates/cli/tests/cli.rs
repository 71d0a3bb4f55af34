use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn ipersea(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ipersea"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Ring of `n` nodes with chords `i -> 7i + 3 mod n`.
fn write_graph(dir: &Path, n: u64) -> String {
    let mut s = String::from("# test graph\n");
    for i in 0..n {
        writeln!(s, "{i} {}", (i + 1) % n).unwrap();
        writeln!(s, "{i} {}", (7 * i + 3) % n).unwrap();
    }
    let path = dir.join("ring.txt");
    fs::write(&path, s).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn config_layers_file_then_flags() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("c.conf");
    fs::write(&file, "alpha = 3\nbeta = 4 # comment\ngn_ratio = 0.5\n").unwrap();
    let out = stdout(&ipersea(&[
        "config",
        "--config",
        file.to_str().unwrap(),
        "--beta",
        "9",
        "--friends",
        "random",
        "--directed",
    ]));
    assert!(out.contains("alpha = 3\n"));
    assert!(out.contains("beta = 9\n"));
    assert!(out.contains("gn_ratio = 0.5\n"));
    assert!(out.contains("friend_mode = random\n"));
    assert!(out.contains("directed = true\n"));
    let defaults = stdout(&ipersea(&["config"]));
    assert!(defaults.contains("bits = 31\n") && defaults.contains("sybils_per_edge = 10\n"));
}

#[test]
fn bad_values_fail() {
    assert!(!ipersea(&["config", "--alpha", "x"]).status.success());
    assert!(!ipersea(&["config", "--chunk-factor", "1.5"])
        .status
        .success());
    assert!(!ipersea(&["run", "--dataset", "/nonexistent/g.txt"])
        .status
        .success());
    assert!(!ipersea(&["sweep"]).status.success());
    assert!(!ipersea(&["analyze"]).status.success());
}

#[test]
fn run_prints_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let g = write_graph(dir.path(), 300);
    let out = stdout(&ipersea(&[
        "run",
        "--dataset",
        &g,
        "--lookups",
        "100",
        "--gn-ratio",
        "0.5",
        "--seed",
        "4",
    ]));
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("dataset,mode,friend_mode,gn_ratio,seed"));
    assert!(lines[1].starts_with("ring,ipersea,trusted,0.50,4,"));
    assert_eq!(lines[1].split(',').count(), 16);

    let file = dir.path().join("run.csv");
    stdout(&ipersea(&[
        "run",
        "--dataset",
        &g,
        "--lookups",
        "100",
        "--gn-ratio",
        "0.5",
        "--seed",
        "4",
        "--out",
        file.to_str().unwrap(),
    ]));
    assert_eq!(fs::read_to_string(file).unwrap(), out);
}

#[test]
fn sweeps_are_identical_across_processes() {
    let dir = tempfile::tempdir().unwrap();
    let g = write_graph(dir.path(), 300);
    let args = [
        "sweep",
        "--dataset",
        &g,
        "--lookups",
        "100",
        "--seeds",
        "2",
        "--gn-ratios",
        "0,0.5,1",
        "--modes",
        "ipersea,persea",
        "--friend-modes",
        "trusted,random",
        "--master-seed",
        "9",
    ];
    let a = stdout(&ipersea(&args));
    let b = stdout(&ipersea(&args));
    assert_eq!(a, b);
    // (2 friend modes + 1 persea) x 3 ratios x 2 seeds, plus the header.
    assert_eq!(a.lines().count(), 19);
    assert!(a.lines().skip(1).all(|l| l.split(',').count() == 16));
}

#[test]
fn analyze_matches_hand_values() {
    let out = stdout(&ipersea(&[
        "analyze",
        "--ep",
        "13.711",
        "--gn-ratios",
        "1.0,20",
    ]));
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(
        lines[0],
        "gn_ratio,e_p,path_len,capped,fp_trusted,fp_random"
    );
    assert!(
        lines[1].starts_with("1.00,13.7110,4,false,0.0822,"),
        "{}",
        lines[1]
    );
    assert_eq!(lines[2], "20.00,13.7110,,,,");
}

#[test]
fn stats_report_graph_shape() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tri.txt");
    fs::write(&path, "0 1\n1 2\n2 0\n").unwrap();
    let out = stdout(&ipersea(&[
        "stats",
        "--dataset",
        path.to_str().unwrap(),
        "--n-boot",
        "1",
    ]));
    assert!(
        out.starts_with(
            "nodes 3\nedges 3\nmean_degree 2.0000\nclustering 1.0000\nadmitted 3\ndropped 0\n"
        ),
        "{out}"
    );
}
