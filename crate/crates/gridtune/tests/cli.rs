use std::path::Path;
use std::process::{Command, Output};

fn gridtune(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gridtune"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn synth_tune_release_query_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&gridtune(&["synth", "--n", "1500", "--seed", "4", "--out", "pts.csv"], d));
    let pts = std::fs::read_to_string(d.join("pts.csv")).unwrap();
    assert!(pts.starts_with("x,y\n"));
    assert_eq!(pts.lines().count(), 1501);

    let common = ["--data", "pts.csv", "--domain", "0,0,1,1", "--grid-candidates", "4,8,16", "--seed", "11"];
    let tuned = ok(&gridtune(&[&["tune"][..], &common].concat(), d));
    let g: u32 = tuned.trim().parse().unwrap();
    assert!([4, 8, 16].contains(&g));

    let rel = gridtune(&[&["release", "--out", "h.csv"][..], &common].concat(), d);
    ok(&rel);
    assert!(String::from_utf8_lossy(&rel.stderr).contains(&format!("selected g = {g}")));
    let h = std::fs::read_to_string(d.join("h.csv")).unwrap();
    assert!(h.starts_with("cell_index,count\n"));
    assert_eq!(h.lines().count() as u32, g * g + 1);

    let total: f64 = h.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap()).sum();
    let answer: f64 = ok(&gridtune(&["query", "--histogram", "h.csv", "--domain", "0,0,1,1", "--rect", "0,0,1,1"], d))
        .trim()
        .parse()
        .unwrap();
    assert!((answer - total).abs() < 1e-6 * total.abs().max(1.0));
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(
        d.join("run.cfg"),
        "synth_n=800\nmethod=best\nrepeats=2\ngrid_candidates=4,8\neval_sizes=0.2,0.5\neval_positions=5\ntune_positions=5\nseed=1\n",
    )
    .unwrap();
    ok(&gridtune(&["bench", "--config", "run.cfg", "--out", "r.csv", "--repeats", "3"], d));
    let csv = std::fs::read_to_string(d.join("r.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "dataset,method,epsilon,eps1_frac,delta,sensitivity_mode,qr_frac,repeat,selected_g,median_rel_err,zero_true_count"
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 3 * 2);
    assert!(rows.iter().all(|r| r.split(',').nth(8) == Some("8")));

    let manifest = &manifests(&d.join("r.manifest.jsonl"))[0];
    assert_eq!(manifest["repeats"], 3);
    assert_eq!(manifest["seed"], 1);
    assert_eq!(manifest["rows"], 6);

    // --seed overrides the file; a second run appends rows and a manifest line
    ok(&gridtune(&["bench", "--config", "run.cfg", "--seed", "2", "--out", "r.csv"], d));
    let csv = std::fs::read_to_string(d.join("r.csv")).unwrap();
    assert_eq!(csv.lines().filter(|l| l.starts_with("dataset,")).count(), 1);
    assert_eq!(csv.lines().count(), 1 + 6 + 4);
    let all = manifests(&d.join("r.manifest.jsonl"));
    assert_eq!(all.len(), 2);
    assert_eq!(all[1]["seed"], 2);

    std::fs::write(d.join("other.csv"), "a,b\n1,2\n").unwrap();
    let out = gridtune(&["bench", "--config", "run.cfg", "--out", "other.csv"], d);
    assert!(!out.status.success());
}

fn manifests(path: &std::path::Path) -> Vec<serde_json::Value> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn oracle_quick_emits_passing_json_lines() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(&gridtune(&["oracle", "--quick", "--seed", "3"], dir.path()));
    let recs: Vec<serde_json::Value> = out.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert!(recs.len() > 10);
    for r in &recs {
        assert_eq!(r["pass"], true, "{r}");
        assert!(r["check"].is_string() && r["instance"].is_string());
    }
}

#[test]
fn bad_inputs_fail_with_a_message() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("bad.csv"), "x,y\n0.1,0.2\nnope,0.3\n").unwrap();
    let out = gridtune(&["tune", "--data", "bad.csv", "--domain", "0,0,1,1"], d);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));

    let out = gridtune(&["tune", "--epsilon", "-1"], d);
    assert!(!out.status.success());

    std::fs::write(d.join("h.csv"), "cell_index,count\n0,1\n1,2\n2,3\n").unwrap();
    let out = gridtune(&["query", "--histogram", "h.csv", "--domain", "0,0,1,1", "--rect", "0,0,1,1"], d);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("not a square"));
}

#[test]
fn missing_domain_warns() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&gridtune(&["synth", "--n", "300", "--out", "p.csv"], d));
    let out = gridtune(&["tune", "--data", "p.csv", "--grid-candidates", "2,4"], d);
    ok(&out);
    assert!(String::from_utf8_lossy(&out.stderr).contains("bounding box"));
}
