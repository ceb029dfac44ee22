use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn ops(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ops")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.display().to_string()
}

fn pair_files(dir: &Path, p: f64) -> (String, String) {
    (
        write(dir, "pair.graph", "2 2\n0 1 1\n1 0 1\n"),
        write(dir, "pair.nodes", &format!("0 1 {p}\n1 1 {p}\n")),
    )
}

fn value(csv: &str, i: usize, j: usize) -> f64 {
    csv.lines()
        .skip(1)
        .map(|l| l.split(',').collect::<Vec<_>>())
        .find(|f| f[0] == i.to_string() && f[1] == j.to_string())
        .map(|f| f[2].parse().unwrap())
        .unwrap()
}

#[test]
fn similarities_of_the_pair_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let (g, n) = pair_files(dir.path(), 0.5);
    let out = ops(&["similarities", "--graph", &g, "--nodes", &n, "--mu0", "0.5"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("i,j,value\n"));
    assert!((value(&text, 0, 1) - 5.0 / 6.0).abs() < 1e-9);
}

#[test]
fn similarities_with_full_inward_probability() {
    let dir = tempfile::tempdir().unwrap();
    let (g, n) = pair_files(dir.path(), 1.0);
    let out = ops(&["similarities", "--graph", &g, "--nodes", &n, "--mu0", "0.3"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!((value(&text, 0, 1) - (1.0 - 2.0 * 0.3 * 0.7)).abs() < 1e-12);
}

#[test]
fn monte_carlo_column_and_sample_dump() {
    let dir = tempfile::tempdir().unwrap();
    let (g, n) = pair_files(dir.path(), 0.5);
    let dump = dir.path().join("samples.csv").display().to_string();
    let out = ops(&[
        "similarities", "--graph", &g, "--nodes", &n, "--monte-carlo", "2000", "--dump-samples", &dump,
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("i,j,value,empirical\n"));
    let samples = fs::read_to_string(&dump).unwrap();
    assert_eq!(samples.lines().count(), 1 + 2000 * 2);
}

#[test]
fn malformed_input_fails_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let g = write(dir.path(), "bad.graph", "2 2\n0 1 1\n1 zero 1\n");
    let n = write(dir.path(), "bad.nodes", "0 1 0.5\n1 1 0.5\n");
    let target = dir.path().join("sim.csv");
    let out = ops(&["similarities", "--graph", &g, "--nodes", &n, "--out", &target.display().to_string()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.graph:3"));
    assert!(!target.exists());
}

#[test]
fn solver_non_convergence_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let g = write(dir.path(), "ring.graph", "3 3\n0 1 1\n1 2 1\n2 0 1\n");
    let n = write(dir.path(), "ring.nodes", "0 1 0.01\n1 1 0.01\n2 1 0.01\n");
    let out = ops(&["similarities", "--graph", &g, "--nodes", &n, "--max-sweeps", "3"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("did not converge"));
}

#[test]
fn graph_partition_evaluate_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = |name: &str| dir.path().join(name).display().to_string();
    let out = ops(&[
        "gen-graph", "--n", "12", "--k", "3", "--p-high", "0.9", "--p-low", "0.05", "--inward", "uniform:0.05:0.5",
        "--seed", "3", "--out", &d("g.txt"), "--nodes", &d("n.txt"), "--labels", &d("labels.csv"),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(fs::read_to_string(d("labels.csv")).unwrap().starts_with("node,label\n0,0\n"));

    let out = ops(&["similarities", "--graph", &d("g.txt"), "--nodes", &d("n.txt"), "--out", &d("s.csv")]);
    assert!(out.status.success());
    let out = ops(&["partition", "--similarities", &d("s.csv"), "--method", "bruteforce", "--r", "3", "--out", &d("p.txt")]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(fs::read_to_string(d("p.txt")).unwrap().lines().count(), 3);

    let out = ops(&[
        "evaluate", "--similarities", &d("s.csv"), "--partition", &d("p.txt"), "--methods", "naive,greedy,bruteforce",
        "--r", "3",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<Vec<&str>> = text.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert!(text.starts_with("method,r,expected_variance,seed\n"));
    assert_eq!(rows.len(), 4);
    let var = |m: &str| rows.iter().find(|r| r[0] == m).unwrap()[2].parse::<f64>().unwrap();
    assert_eq!(var(&format!("file:{}", d("p.txt"))), var("bruteforce"));
    assert!(var("bruteforce") <= var("greedy") + 1e-12 && var("greedy") <= var("naive"));
}

#[test]
fn perturb_command_row_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "exp.cfg", "n = 20\nk = 4\np_high = 0.8\np_low = 0.02\ninward = 0.1\n");
    let out = ops(&["perturb", "--config", &cfg, "--r", "2,4,6", "--replicates", "3", "--seed", "5"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 1 + 3 * 3 * 3);
    assert!(text.lines().skip(1).all(|l| l.starts_with("perturb,")));
}

#[test]
fn invalid_config_lists_every_problem() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.cfg", "n = 20\nmethods = bruteforce\nreplicates = 0\nfrobnicate = 1\n");
    let target = dir.path().join("out.csv");
    let out = ops(&["experiment", "--config", &cfg, "--r", "0", "--out", &target.display().to_string()]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("frobnicate"), "{err}");
    let out = ops(&["experiment", "--config", &cfg, "--set", "frobnicate", "--r", "0"]);
    assert!(!out.status.success());
    let cfg = write(dir.path(), "bad2.cfg", "n = 20\nmethods = bruteforce\nreplicates = 0\n");
    let out = ops(&["experiment", "--config", &cfg, "--r", "0"]);
    let err = String::from_utf8_lossy(&out.stderr);
    for needle in ["r = 0", "bruteforce", "replicates"] {
        assert!(err.contains(needle), "missing '{needle}' in {err}");
    }
    assert!(!target.exists());
}
