use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn expgraph(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_expgraph")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn json_lines(o: &Output) -> Vec<Value> {
    stdout(o).lines().map(|l| serde_json::from_str(l).expect("one JSON object per line")).collect()
}

fn keys(v: &Value) -> Vec<&str> {
    v.as_object().unwrap().keys().map(String::as_str).collect()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

#[test]
fn count_pairs_csv_rows() {
    let o = expgraph(&["count-pairs", "--rate", "2", "--gens", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines, ["rate,gens,dist,count", "2,2,1,4", "2,2,2,2"]);
}

#[test]
fn count_pairs_single_distance_and_bignum() {
    let o = expgraph(&["count-pairs", "--rate", "2", "--gens", "3", "--dist", "3"]);
    assert!(stdout(&o).ends_with("2,3,3,8\n"));
    // siblings plus grandparent pairs: 9 Σ_{j=1..40} 10^j + 2 Σ_{j=2..40} 10^j, past u128
    let o = expgraph(&["count-pairs", "--rate", "10", "--gens", "41", "--dist", "2", "--format", "json"]);
    let rows = json_lines(&o);
    assert_eq!(rows[0]["count"], format!("1{}190", "2".repeat(38)));
}

#[test]
fn unknown_flag_exits_one_naming_it() {
    let o = expgraph(&["count-pairs", "--rate", "2", "--gens", "2", "--bogus", "1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--bogus"), "{}", stderr(&o));
}

#[test]
fn unknown_config_key_and_missing_key_named() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.cfg", "rate = 2\nlevels = 12\nepsilon = 0.5\nsigma = 1\n");
    let o = expgraph(&["concentration-bound", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("`sigma`"), "{}", stderr(&o));

    let cfg = write(dir.path(), "d.cfg", "rate = 2\nlevels = 12\nepsilon = 0.5\nsigma2 = 0.3\nenvelope = zero\n");
    let o = expgraph(&["concentration-bound", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("`amplitude`: required"), "{}", stderr(&o));
}

#[test]
fn concentration_bound_from_config_with_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.cfg",
        "# independent field, C = 1\nrate = 2\nlevels = 12\nepsilon = 0.5\namplitude = 1\nsigma2 = 0.3333333333333333\nenvelope = zero\n",
    );
    let o = expgraph(&["concentration-bound", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = json_lines(&o);
    assert_eq!(rows.len(), 1);
    let b = &rows[0];
    assert_eq!(
        keys(b),
        [
            "log_factor_markov",
            "log_factor_mixing",
            "log_factor_variance",
            "variance_proxy",
            "block_count",
            "log_total",
            "log_total_clamped",
            "indicator_wedge",
            "envelope_provenance",
            "level",
            "depth",
            "p2",
            "q2",
            "beta",
            "f",
            "epsilon",
            "p1"
        ]
    );
    assert!((b["log_total"].as_f64().unwrap() - 0.610_083_891_506_185_6).abs() < 1e-9);
    assert_eq!(b["p1"], 3);

    let o = expgraph(&["concentration-bound", "--config", &cfg, "--epsilon", "0.1,0.5,2", "--levels", "10,12"]);
    let rows = json_lines(&o);
    assert_eq!(rows.len(), 6);
    assert_eq!(rows[0]["indicator_wedge"], 1);
}

#[test]
fn bernstein_bound_validation_lists_violations() {
    let base = [
        "bernstein-bound", "--rate", "2", "--level", "9", "--depth", "3", "--p2", "20", "--q2", "20", "--amplitude", "1",
        "--sigma2", "0.3", "--envelope", "m_dependent:1", "--epsilon", "500",
    ];
    let ok = expgraph(&[&base[..], &["--beta", "0.0003"]].concat());
    assert_eq!(ok.status.code(), Some(0), "{}", stderr(&ok));
    assert_eq!(json_lines(&ok)[0]["p1"], Value::Null);

    let bad = expgraph(&[&base[..], &["--beta", "5"]].concat());
    assert_eq!(bad.status.code(), Some(1));
    assert!(stderr(&bad).contains("beta"), "{}", stderr(&bad));
}

#[test]
fn mc_tail_independent_exits_zero_and_is_worker_independent() {
    let dir = tempfile::tempdir().unwrap();
    let run = |workers: &str, name: &str| {
        let out = dir.path().join(name);
        let o = expgraph(&[
            "mc-tail", "--rate", "2", "--field", "independent", "--amplitude", "1", "--region", "strip:9:3", "--epsilon",
            "150,200", "--replicates", "1000", "--seed", "11", "--workers", workers, "--out", out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        std::fs::read(out).unwrap()
    };
    let (one, four) = (run("1", "a.jsonl"), run("4", "b.jsonl"));
    assert_eq!(one, four);
    let text = String::from_utf8(one).unwrap();
    let rows: Vec<Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(rows.len(), 2);
    for r in &rows {
        assert_eq!(r["certified"], true);
        assert_eq!(r["violated"], false);
        assert_eq!(r["n_replicates"], 1000);
    }
}

#[test]
fn mc_tail_rejects_few_replicates() {
    let o = expgraph(&[
        "mc-tail", "--rate", "2", "--field", "independent", "--amplitude", "1", "--region", "generations:6", "--epsilon",
        "0.5", "--replicates", "10",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("replicates"));
}

#[test]
fn davydov_spaces_hold() {
    let o = expgraph(&["verify-davydov", "--spaces", "50", "--seed", "3", "--p", "3", "--q", "3", "--r", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = json_lines(&o);
    assert_eq!(rows.len(), 50);
    assert!(rows.iter().all(|r| r["holds"] == true));
    assert_eq!(keys(&rows[0]), ["space", "outcomes", "lhs", "rhs", "alpha", "holds"]);

    let o = expgraph(&["verify-davydov", "--spaces", "1", "--p", "2", "--q", "2", "--r", "2"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn embedding_check_finds_witness_and_reads_map_file() {
    let o = expgraph(&["embedding-check", "--rate", "2", "--dim", "1", "--constant", "1", "--kmax", "6"]);
    assert_eq!(o.status.code(), Some(0));
    let r = &json_lines(&o)[0];
    assert_eq!(r["witness"]["generation"], 3);
    assert_eq!(r["points"], 127);

    let dir = tempfile::tempdir().unwrap();
    let map = write(dir.path(), "m.txt", "0 1 0\n1 1 -1\n1 2 1\n");
    let o = expgraph(&["embedding-check", "--rate", "2", "--dim", "1", "--constant", "1", "--kmax", "1", "--map", &map]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = &json_lines(&o)[0];
    assert_eq!(r["distortion"], 1.0);
    assert_eq!(r["witness"], Value::Null);

    let bad = write(dir.path(), "bad.txt", "0 1 0 7\n");
    let o = expgraph(&["embedding-check", "--rate", "2", "--dim", "1", "--constant", "1", "--kmax", "1", "--map", &bad]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("`map`"));
}

#[test]
fn capacity_errors_exit_three() {
    let o = expgraph(&["embedding-check", "--rate", "2", "--dim", "1", "--constant", "1", "--kmax", "40"]);
    assert_eq!(o.status.code(), Some(3));
    let o = expgraph(&["simulate", "--rate", "3", "--field", "independent", "--amplitude", "1", "--region", "generations:30"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn simulate_csv_is_bounded_and_reproducible() {
    let args = [
        "simulate", "--rate", "2", "--field", "branching_ar:0.6", "--amplitude", "2", "--region", "strip:3:2", "--seed", "5",
    ];
    let a = expgraph(&[&args[..], &["--workers", "1"]].concat());
    let b = expgraph(&[&args[..], &["--workers", "4"]].concat());
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    let out = stdout(&a);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("j,k,value"));
    let rows: Vec<(u64, f64)> = lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].parse().unwrap(), f[2].parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 8 + 16);
    assert!(rows.iter().all(|&(j, z)| (3..5).contains(&j) && z.abs() <= 2.0));
}
