//! End-to-end runs of the `mec-offload` binary on the smoke config.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mec_cli::output::{read_csv, read_front, FrontRow, HypervolumeRow};
use mec_cli::RunManifest;

fn smoke_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/smoke.toml")
}

fn mec(args: &[&str], root: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mec-offload"))
        .args(args)
        .env("MEC_OUTPUT_ROOT", root)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "status {:?}\nstdout:\n{}\nstderr:\n{}",
        out.status,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn full_pipeline_writes_manifested_artifacts() {
    let root = tempfile::tempdir().unwrap();
    let cfg = smoke_config();
    let cfg = cfg.to_str().unwrap();
    ok(&mec(&["train", "-c", cfg], root.path()));
    let dir = root.path().join("smoke");
    for scheme in ["random", "sa", "linucb", "multipolicy"] {
        ok(&mec(&["baseline", "-c", cfg, "--scheme", scheme], root.path()));
    }
    let ckpt = dir.join("model.ckpt");
    let random = dir.join("random.csv");
    let sa = dir.join("sa.csv");
    ok(&mec(
        &[
            "front",
            "-c",
            cfg,
            "--checkpoint",
            ckpt.to_str().unwrap(),
            "--baseline",
            random.to_str().unwrap(),
            "--baseline",
            sa.to_str().unwrap(),
        ],
        root.path(),
    ));

    // n = 3 grid gives 3 rows per scheme; random uses its own p-grid of 3
    let points = read_front(&dir.join("front_points.csv")).unwrap();
    assert_eq!(points.iter().filter(|r| r.scheme == "gmorl").count(), 3);
    assert_eq!(points.iter().filter(|r| r.scheme == "random").count(), 3);
    let hv: Vec<HypervolumeRow> = read_csv(&dir.join("hypervolume.csv")).unwrap();
    assert_eq!(hv.len(), 3);
    assert!(hv
        .windows(2)
        .all(|w| w[0].ref_delay == w[1].ref_delay && w[0].ref_energy == w[1].ref_energy));
    let front = read_front(&dir.join("front.csv")).unwrap();
    assert!(front.iter().all(|f| points.contains(f)));

    // SA spends exactly its budget on every preference
    #[derive(serde::Deserialize)]
    struct Search {
        episodes_used: usize,
    }
    let search: Vec<Search> = read_csv(&dir.join("sa_search.csv")).unwrap();
    assert!(search.iter().all(|s| s.episodes_used == 30));

    for cmd in ["train", "baseline", "front"] {
        let m = RunManifest::read(&dir.join(format!("manifest-{cmd}.json"))).unwrap();
        assert_eq!(m.seed, 1);
        let sums: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.join(format!("checksums-{cmd}.json"))).unwrap()).unwrap();
        for a in &m.artifacts {
            assert!(dir.join(a).exists(), "{a}");
            assert!(sums["sha256"][a].is_string(), "{a}");
        }
    }
    let svg = std::fs::read_to_string(dir.join("front.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
}

#[test]
fn rerun_from_manifest_reproduces_csvs() {
    let root = tempfile::tempdir().unwrap();
    let cfg = smoke_config();
    ok(&mec(&["train", "-c", cfg.to_str().unwrap()], root.path()));
    let first = root.path().join("smoke");
    let manifest = first.join("manifest-train.json");
    let log = std::fs::read(first.join("training_log.csv")).unwrap();
    let curve = std::fs::read(first.join("training_curve.csv")).unwrap();
    ok(&mec(
        &["train", "-c", manifest.to_str().unwrap(), "--out", "again"],
        root.path(),
    ));
    let second = root.path().join("again");
    assert_eq!(std::fs::read(second.join("training_log.csv")).unwrap(), log);
    assert_eq!(std::fs::read(second.join("training_curve.csv")).unwrap(), curve);
    assert_eq!(
        std::fs::read(second.join("model.ckpt")).unwrap(),
        std::fs::read(first.join("model.ckpt")).unwrap()
    );
}

#[test]
fn exit_codes() {
    let root = tempfile::tempdir().unwrap();
    let bad = root.path().join("bad.toml");
    std::fs::write(&bad, "[sim]\nsteps = 10\n").unwrap();
    let out = mec(&["train", "-c", bad.to_str().unwrap()], root.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("seed"));

    let cfg = smoke_config();
    let cfg = cfg.to_str().unwrap();
    let out = mec(&["baseline", "-c", cfg, "--scheme", "greedy"], root.path());
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(
        ["linucb", "sa", "random", "multipolicy"]
            .iter()
            .all(|s| err.contains(s)),
        "{err}"
    );

    let out = mec(&["check", "-c", cfg], root.path());
    ok(&out);
    let stdout = String::from_utf8_lossy(&out.stdout);
    for suite in [
        "reward-oracle",
        "energy-identity",
        "gradients",
        "hypervolume",
        "mask-padding",
    ] {
        assert!(stdout.contains(&format!("PASS {suite}")), "{stdout}");
    }

    let out = mec(
        &[
            "check",
            "-c",
            cfg,
            "--mutate-correction",
            "1.000001",
            "--out",
            "mutated",
        ],
        root.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("FAIL reward-oracle"), "{stdout}");
    assert!(stdout.contains("seed"), "{stdout}");
}

#[test]
fn eval_rejects_a_checkpoint_for_another_network() {
    let root = tempfile::tempdir().unwrap();
    let cfg = smoke_config();
    ok(&mec(&["train", "-c", cfg.to_str().unwrap()], root.path()));
    let text = std::fs::read_to_string(&cfg)
        .unwrap()
        .replace("encoding.max_edges = 2", "encoding.max_edges = 3");
    let other = root.path().join("wider.toml");
    std::fs::write(&other, text).unwrap();
    let ckpt = root.path().join("smoke/model.ckpt");
    let out = mec(
        &[
            "eval",
            "-c",
            other.to_str().unwrap(),
            "--checkpoint",
            ckpt.to_str().unwrap(),
        ],
        root.path(),
    );
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("incompatible"));

    let out = mec(
        &[
            "eval",
            "-c",
            cfg.to_str().unwrap(),
            "--checkpoint",
            ckpt.to_str().unwrap(),
        ],
        root.path(),
    );
    ok(&out);
    let rows: Vec<FrontRow> = read_front(&root.path().join("smoke/eval.csv")).unwrap();
    assert_eq!(rows.len(), 3);
    assert_eq!((rows[0].omega_t, rows[2].omega_t), (0.0, 1.0));
}
