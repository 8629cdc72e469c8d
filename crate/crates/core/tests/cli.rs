use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mapmatch::curvequery::{report_curve_with, QueryConfig};
use mapmatch::graph::{load_curve, load_graph};
use mapmatch::{IndexParams, MapMatchIndex};
use serde_json::Value;
use tempfile::TempDir;

fn mapmatch(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mapmatch"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok_json(args: &[&str]) -> Value {
    let out = mapmatch(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn code(args: &[&str]) -> i32 {
    mapmatch(args).status.code().expect("exit code")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// A small grid, a query curve on it and a built index.
struct Fixture {
    dir: TempDir,
    graph: PathBuf,
    curve: PathBuf,
    index: PathBuf,
    build: Value,
}

fn fixture() -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let graph = dir.path().join("g.json");
    let curve = dir.path().join("q.json");
    let index = dir.path().join("g.mmix");
    ok_json(&[
        "gen",
        "grid",
        "--rows",
        "6",
        "--cols",
        "7",
        "--seed",
        "3",
        "--out",
        s(&graph),
    ]);
    ok_json(&[
        "gen",
        "curve",
        s(&graph),
        "--length",
        "4",
        "--noise",
        "0.3",
        "--seed",
        "5",
        "--out",
        s(&curve),
    ]);
    let build = ok_json(&[
        "build",
        s(&graph),
        "--eps",
        "0.25",
        "--seed",
        "1",
        "--out",
        s(&index),
    ]);
    Fixture {
        dir,
        graph,
        curve,
        index,
        build,
    }
}

#[test]
fn query_from_file_matches_in_memory_build() {
    let f = fixture();
    let v = ok_json(&["query", s(&f.index), s(&f.curve), "--report"]);

    let g = load_graph(&f.graph).unwrap();
    let q = load_curve(&f.curve).unwrap();
    let params = IndexParams {
        seed: 1,
        ..IndexParams::with_eps(0.25)
    };
    let (idx, _) = MapMatchIndex::build(g, params).unwrap();
    let cfg = QueryConfig::for_index(&idx, q.vertices());
    let (ans, res) = report_curve_with(&idx, q.vertices(), &cfg).unwrap();

    assert_eq!(
        v["distance"].as_f64().unwrap().to_bits(),
        ans.value.to_bits()
    );
    assert_eq!(
        v["lower_bound"].as_f64().unwrap().to_bits(),
        ans.lower.to_bits()
    );
    assert_eq!(
        v["walk_distance"].as_f64().unwrap().to_bits(),
        res.distance.to_bits()
    );
    assert_eq!(v["path"], serde_json::to_value(&res.path).unwrap());
    assert_eq!(
        v["alignment"],
        serde_json::to_value(&res.alignment).unwrap()
    );
    assert_eq!(v["valid"], Value::Bool(true));
}

#[test]
fn builds_and_outputs_are_reproducible() {
    let f = fixture();
    let again = f.dir.path().join("again.mmix");
    let build = ok_json(&[
        "build",
        s(&f.graph),
        "--eps",
        "0.25",
        "--seed",
        "1",
        "--out",
        s(&again),
    ]);
    assert_eq!(build, f.build);
    assert_eq!(
        std::fs::read(&f.index).unwrap(),
        std::fs::read(&again).unwrap()
    );

    let text = serde_json::to_string(&f.build).unwrap();
    assert!(
        !text.contains("seconds"),
        "build output carries timings: {text}"
    );

    let q1 = mapmatch(&["query", s(&f.index), s(&f.curve), "--report"]).stdout;
    let q2 = mapmatch(&["query", s(&again), s(&f.curve), "--report"]).stdout;
    assert_eq!(q1, q2);
}

#[test]
fn generators_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let files: Vec<PathBuf> = (0..4)
        .map(|i| dir.path().join(format!("{i}.json")))
        .collect();
    for p in &files[..2] {
        ok_json(&[
            "gen",
            "theta",
            "--points",
            "40",
            "--seed",
            "9",
            "--out",
            s(p),
        ]);
    }
    for p in &files[2..] {
        ok_json(&[
            "gen",
            "curve",
            s(&files[0]),
            "--length",
            "5",
            "--seed",
            "2",
            "--out",
            s(p),
        ]);
    }
    assert_eq!(
        std::fs::read(&files[0]).unwrap(),
        std::fs::read(&files[1]).unwrap()
    );
    assert_eq!(
        std::fs::read(&files[2]).unwrap(),
        std::fs::read(&files[3]).unwrap()
    );
}

#[test]
fn stats_report_a_spanner() {
    let f = fixture();
    let v = ok_json(&["stats", s(&f.graph), "--seed", "4"]);
    assert!(v["t_hat"].as_f64().unwrap() >= 1.0);
    assert_eq!(v["vertices"], 42);
    assert_eq!(v, ok_json(&["stats", s(&f.graph), "--seed", "4"]));
}

#[test]
fn reported_walks_validate_against_the_oracle() {
    let f = fixture();
    let v = ok_json(&["query", s(&f.index), s(&f.curve), "--report"]);
    let walk = f.dir.path().join("walk.json");
    std::fs::write(&walk, serde_json::to_string(&v).unwrap()).unwrap();
    let check = ok_json(&["oracle", s(&f.graph), s(&f.curve), "--validate", s(&walk)]);
    assert_eq!(check["valid"], Value::Bool(true));
    let d = check["distance"].as_f64().unwrap();
    assert!(d <= v["distance"].as_f64().unwrap() * (1.0 + 1e-9));

    let exact = ok_json(&["oracle", s(&f.graph), s(&f.curve)]);
    let opt = exact["distance"].as_f64().unwrap();
    assert!(opt <= d + 1e-9);
    assert!(v["distance"].as_f64().unwrap() <= 1.25 * opt + 1e-9);
}

#[test]
fn exit_codes_follow_the_contract() {
    let f = fixture();
    let dir = f.dir.path();
    let bytes = std::fs::read(&f.index).unwrap();

    let missing = dir.join("missing.mmix");
    assert_eq!(code(&["query", s(&missing), s(&f.curve)]), 2);
    assert_eq!(
        code(&["build", s(&dir.join("missing.json")), "--out", s(&missing)]),
        2
    );
    assert_eq!(
        code(&["build", s(&f.graph), "--eps", "1.5", "--out", s(&missing)]),
        2
    );
    assert_eq!(code(&["frobnicate"]), 2);

    let garbage = dir.join("garbage.json");
    std::fs::write(&garbage, "{ not json").unwrap();
    assert_eq!(code(&["stats", s(&garbage)]), 2);

    let bad_magic = dir.join("magic.mmix");
    let mut b = bytes.clone();
    b[0] = b'X';
    std::fs::write(&bad_magic, &b).unwrap();
    assert_eq!(code(&["query", s(&bad_magic), s(&f.curve)]), 3);

    let version = dir.join("version.mmix");
    let mut b = bytes.clone();
    b[4..8].copy_from_slice(&99u32.to_le_bytes());
    std::fs::write(&version, &b).unwrap();
    let out = mapmatch(&["query", s(&version), s(&f.curve)]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("version 99"));

    let truncated = dir.join("truncated.mmix");
    std::fs::write(&truncated, &bytes[..bytes.len() / 2]).unwrap();
    assert_eq!(code(&["query", s(&truncated), s(&f.curve)]), 3);

    let flipped = dir.join("flipped.mmix");
    let mut b = bytes;
    let mid = b.len() / 2;
    b[mid] ^= 0x40;
    std::fs::write(&flipped, &b).unwrap();
    assert_eq!(code(&["query", s(&flipped), s(&f.curve)]), 3);
}
