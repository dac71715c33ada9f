use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lra_core::codec::load_basis;
use lra_core::subspace::subspace_distance;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn lra(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lra"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = lra(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// JSONL corpus whose centered contours span exactly `rank` dimensions.
fn exact_rank_corpus(dir: &Path, rank: usize, count: usize) -> PathBuf {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut g = DMatrix::<f64>::from_fn(28, rank, |_, _| rng.random_range(-1.0..1.0));
    for mut col in g.column_iter_mut() {
        for parity in 0..2 {
            let mean: f64 = (parity..28).step_by(2).map(|i| col[i]).sum::<f64>() / 14.0;
            for i in (parity..28).step_by(2) {
                col[i] -= mean;
            }
        }
    }
    let u = g.qr().q();
    let mut lines = String::new();
    for j in 0..count {
        let c = DMatrix::<f64>::from_fn(rank, 1, |_, _| rng.random_range(-30.0..30.0));
        let p = &u * c;
        let (tx, ty) = (
            rng.random_range(100.0..900.0),
            rng.random_range(100.0..900.0),
        );
        let pts: Vec<[f64; 2]> = (0..14)
            .map(|k| [p[2 * k] + tx, p[2 * k + 1] + ty])
            .collect();
        lines.push_str(&serde_json::json!({"id": format!("s{j}"), "polygons": [pts]}).to_string());
        lines.push('\n');
    }
    let path = dir.join("rank6.jsonl");
    std::fs::write(&path, lines).unwrap();
    path
}

fn stdout_value(out: &str, key: &str) -> f64 {
    out.lines()
        .find_map(|l| l.strip_prefix(key))
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or_else(|| panic!("no {key} in {out}"))
}

#[test]
fn fit_on_exact_rank_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = exact_rank_corpus(dir.path(), 6, 200);
    let fms = dir.path().join("fms.json");
    let svd = dir.path().join("svd.json");
    let common = [
        "--corpus",
        p(&corpus),
        "--set",
        "resample=false",
        "--set",
        "m=6",
    ];

    let out = ok(&[&["fit"], &common[..], &["--out", p(&fms)]].concat());
    assert!(stdout_value(&out, "final objective:") < 1e-6, "{out}");
    assert!(stdout_value(&out, "iterations:") <= 2.0, "{out}");
    assert!(out.contains("wall time:"));

    ok(&[
        &["fit"],
        &common[..],
        &["--set", "method=\"svd\"", "--out", p(&svd)],
    ]
    .concat());
    let a = load_basis(&fms).unwrap();
    let b = load_basis(&svd).unwrap();
    assert!(subspace_distance(&a.basis, &b.basis).unwrap() < 1e-6);
}

#[test]
fn fit_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    ok(&["fit", "--set", "count=120", "--out", p(&a)]);
    ok(&["fit", "--set", "count=120", "--out", p(&b)]);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert!(dir.path().join("a.json.log").exists());
}

#[test]
fn complete_basis_eval_and_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let basis = dir.path().join("full.json");
    ok(&[
        "fit",
        "--set",
        "count=80",
        "--set",
        "m=28",
        "--set",
        "method=\"svd\"",
        "--out",
        p(&basis),
    ]);
    let prefix = dir.path().join("eval");
    ok(&[
        "eval",
        "--set",
        "count=80",
        "--basis",
        p(&basis),
        "--out",
        p(&prefix),
    ]);
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("eval.json")).unwrap())
            .unwrap();
    assert!(json["report"]["summary"]["mean_iou"].as_f64().unwrap() >= 0.999);
    assert_eq!(json["report"]["per_contour"].as_array().unwrap().len(), 80);
    assert_eq!(json["config"]["count"], 80);
    assert_eq!(json["report"]["rows"][0]["dim"], 28);
    assert_eq!(json["config_hash"].as_str().unwrap().len(), 64);

    let sweep = dir.path().join("sweep");
    ok(&[
        "sweep",
        "--set",
        "count=80",
        "--set",
        "dims=[28]",
        "--set",
        "method=\"svd\"",
        "--out",
        p(&sweep),
    ]);
    let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 1);
    let mean_iou: f64 = rows[0].split(',').nth(7).unwrap().parse().unwrap();
    assert!(mean_iou >= 0.999);
}

#[test]
fn eval_on_fitting_corpus_reports_every_contour() {
    let dir = tempfile::tempdir().unwrap();
    let basis = dir.path().join("b.json");
    ok(&["fit", "--set", "count=60", "--out", p(&basis)]);
    let prefix = dir.path().join("ev");
    let table = ok(&[
        "eval",
        "--set",
        "count=60",
        "--set",
        "per_contour=true",
        "--basis",
        p(&basis),
        "--out",
        p(&prefix),
    ]);
    assert!(table.contains("aggregate"));
    let csv = std::fs::read_to_string(dir.path().join("ev.csv")).unwrap();
    assert!(csv
        .lines()
        .nth(1)
        .unwrap()
        .starts_with("eval,aggregate,fms,14,,,60,"));
    let per = std::fs::read_to_string(dir.path().join("ev.contours.csv")).unwrap();
    assert_eq!(per.lines().count(), 61);
}

#[test]
fn zero_noise_has_zero_drop() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("noise");
    ok(&[
        "noise",
        "--set",
        "count=60",
        "--set",
        "corrupt_fraction=0.0",
        "--set",
        "resolution=128",
        "--out",
        p(&prefix),
    ]);
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("noise.json")).unwrap())
            .unwrap();
    assert_eq!(json["report"]["summary"]["svd_drop"], 0.0);
    assert_eq!(json["report"]["summary"]["fms_drop"], 0.0);
}

#[test]
fn forced_assignment_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("sc.json");
    std::fs::write(
        &scenario,
        r#"{"grid": {"h": 4, "w": 4}, "gts": [[[0.2,0.2],[3.0,0.2],[3.0,0.8],[0.2,0.8]]], "k": 3, "lambda": 2.0, "seed": 3}"#,
    )
    .unwrap();
    let out = dir.path().join("as.json");
    ok(&["assign-sim", "--scenario", p(&scenario), "--out", p(&out)]);
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let mut rows: Vec<u64> = json["assignment"]["pairs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| p["row"].as_u64().unwrap())
        .collect();
    rows.sort_unstable();
    assert_eq!(rows, vec![0, 1, 2]);
    assert_eq!(json["complete"], true);
}

#[test]
fn encode_decode_round_trip_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let basis = dir.path().join("full.json");
    ok(&[
        "fit",
        "--set",
        "count=40",
        "--set",
        "m=28",
        "--out",
        p(&basis),
    ]);
    let codes = dir.path().join("codes.jsonl");
    ok(&[
        "encode",
        "--set",
        "count=40",
        "--basis",
        p(&basis),
        "--out",
        p(&codes),
    ]);
    assert_eq!(std::fs::read_to_string(&codes).unwrap().lines().count(), 40);
    let polys = dir.path().join("polys.jsonl");
    ok(&[
        "decode",
        "--basis",
        p(&basis),
        "--codes",
        p(&codes),
        "--out",
        p(&polys),
    ]);

    // decoded polygons re-enter as a corpus and reconstruct perfectly under the complete basis
    let prefix = dir.path().join("ev");
    ok(&[
        "eval",
        "--corpus",
        p(&polys),
        "--set",
        "resample=false",
        "--basis",
        p(&basis),
        "--out",
        p(&prefix),
    ]);
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("ev.json")).unwrap())
            .unwrap();
    assert!(json["report"]["summary"]["mean_iou"].as_f64().unwrap() >= 0.999);
}

#[test]
fn inspect_basis_prints_summary_and_profile() {
    let dir = tempfile::tempdir().unwrap();
    let basis = dir.path().join("b.json");
    ok(&[
        "fit",
        "--set",
        "count=60",
        "--set",
        "method=\"svd\"",
        "--out",
        p(&basis),
    ]);
    let out = ok(&["inspect-basis", "--basis", p(&basis)]);
    let summary: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(summary["m"], 14);
    assert!(summary["orthonormality_error"].as_f64().unwrap() < 1e-9);
    let prefix = dir.path().join("imp");
    ok(&[
        "inspect-basis",
        "--set",
        "count=60",
        "--basis",
        p(&basis),
        "--out",
        p(&prefix),
    ]);
    let csv = std::fs::read_to_string(dir.path().join("imp.csv")).unwrap();
    assert_eq!(csv.lines().count(), 15);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x");

    assert_eq!(lra(&[]).status.code(), Some(1));
    assert_eq!(lra(&["fit"]).status.code(), Some(1));
    let typo = lra(&["fit", "--set", "methd=\"svd\"", "--out", p(&out)]);
    assert_eq!(typo.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&typo.stderr).contains("methd"));

    let missing = lra(&[
        "eval",
        "--basis",
        p(&dir.path().join("nope.json")),
        "--out",
        p(&out),
    ]);
    assert_eq!(missing.status.code(), Some(2));

    let basis = dir.path().join("b.json");
    ok(&[
        "fit",
        "--set",
        "count=30",
        "--set",
        "m=6",
        "--out",
        p(&basis),
    ]);
    let mismatch = lra(&[
        "eval",
        "--basis",
        p(&basis),
        "--set",
        "n_vertices=16",
        "--out",
        p(&out),
    ]);
    assert_eq!(mismatch.status.code(), Some(2));
    let err = String::from_utf8_lossy(&mismatch.stderr);
    assert!(err.contains("14") && err.contains("16"), "{err}");

    let bad_corpus = dir.path().join("bad.jsonl");
    std::fs::write(&bad_corpus, "garbage\n").unwrap();
    let r = lra(&["fit", "--corpus", p(&bad_corpus), "--out", p(&out)]);
    assert_eq!(r.status.code(), Some(2));
}

#[test]
fn config_file_with_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "count = 50\nm = 8\nmethod = \"svd\"\n").unwrap();
    let basis = dir.path().join("b.json");
    let out = ok(&[
        "fit",
        "--config",
        p(&cfg),
        "--set",
        "m=10",
        "--out",
        p(&basis),
    ]);
    assert!(out.contains("method: svd"));
    assert_eq!(load_basis(&basis).unwrap().m(), 10);
}
