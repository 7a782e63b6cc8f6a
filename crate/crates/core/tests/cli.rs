//! End-to-end runs of the `csi` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn csi(args: &[&str]) -> Output {
    csi_env(args, &[])
}

fn csi_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_csi"));
    cmd.args(args).env_remove("CSI_SEED");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn ok(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn path(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn gen_presence(dir: &TempDir, name: &str, seed: &str) -> PathBuf {
    let p = path(dir, name);
    ok(&csi(&["gen", "--task", "presence", "--duration", "60", "--seed", seed, "--out", s(&p)]));
    p
}

fn dir_is(dir: &TempDir, names: &[&str]) {
    let mut found: Vec<String> = fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    found.sort();
    let mut want: Vec<String> = names.iter().map(|n| n.to_string()).collect();
    want.sort();
    assert_eq!(found, want);
}

#[test]
fn gen_is_deterministic_and_seeded() {
    let dir = TempDir::new().unwrap();
    let a = gen_presence(&dir, "a.csif", "7");
    let b = gen_presence(&dir, "b.csif", "7");
    let c = gen_presence(&dir, "c.csif", "8");
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_ne!(fs::read(&a).unwrap(), fs::read(&c).unwrap());

    let env = path(&dir, "env.csif");
    ok(&csi_env(&["gen", "--task", "presence", "--duration", "60", "-o", s(&env)], &[("CSI_SEED", "7")]));
    assert_eq!(fs::read(&a).unwrap(), fs::read(&env).unwrap());
    let flag = path(&dir, "flag.csif");
    ok(&csi_env(&["gen", "--task", "presence", "--duration", "60", "--seed", "8", "-o", s(&flag)], &[("CSI_SEED", "7")]));
    assert_eq!(fs::read(&c).unwrap(), fs::read(&flag).unwrap());
}

#[test]
fn compress_decompress_recompress_is_index_stable() {
    let dir = TempDir::new().unwrap();
    let data = gen_presence(&dir, "d.csif", "7");
    for (args, bits) in [
        (vec!["--scheme", "pca_sq", "--n-pca", "2", "--bits", "3"], 6),
        (vec!["--scheme", "sq_only", "--bits", "2"], 112),
        (vec!["--scheme", "vq_only", "--bits", "2"], 2),
        (vec!["--scheme", "pca_vq", "--n-pca", "4", "--bits", "3"], 3),
    ] {
        let z = path(&dir, "d.csiz");
        let mut cmd = vec!["compress", s(&data), "-o", s(&z)];
        cmd.extend(&args);
        let report = ok(&csi(&cmd));
        assert!(report.contains(&format!(": {bits} bits/frame")), "{report}");

        let restored = path(&dir, "d2.csif");
        ok(&csi(&["decompress", s(&z), "-o", s(&restored)]));
        let again = path(&dir, "d3.csiz");
        ok(&csi(&["compress", "--models", s(&z), s(&restored), "-o", s(&again)]));
        assert_eq!(fs::read(&z).unwrap(), fs::read(&again).unwrap(), "{args:?}");
    }
}

#[test]
fn fit_writes_a_reusable_model_pack() {
    let dir = TempDir::new().unwrap();
    let data = gen_presence(&dir, "d.csif", "3");
    let pack = path(&dir, "pack.csiz");
    let out = ok(&csi(&["fit", s(&data), "--scheme", "vq_only", "--bits", "1", "-o", s(&pack)]));
    assert!(out.contains("1 bits/frame"));
    let z = path(&dir, "d.csiz");
    let out = ok(&csi(&["compress", "--models", s(&pack), s(&data), "-o", s(&z)]));
    assert!(out.contains("compression ratio 1792:1"), "{out}");
}

#[test]
fn classifier_round_trip() {
    let dir = TempDir::new().unwrap();
    let data = gen_presence(&dir, "d.csif", "5");
    let model = path(&dir, "thr.csim");
    ok(&csi(&["fit", s(&data), "--classifier", "threshold", "--task", "presence", "-o", s(&model)]));
    assert_eq!(&fs::read(&model).unwrap()[..4], b"CSIM");

    let z = path(&dir, "d.csiz");
    ok(&csi(&["compress", s(&data), "--scheme", "pca_sq", "--n-pca", "2", "--bits", "3", "-o", s(&z)]));
    let preds = path(&dir, "pred.csv");
    let out = ok(&csi(&["classify", s(&z), "--task", "presence", "--model", s(&model), "-o", s(&preds)]));
    assert!(out.contains("F1 = "), "{out}");
    let text = fs::read_to_string(&preds).unwrap();
    assert!(text.starts_with("window_start,label,predicted\n"));
}

#[test]
fn sweep_and_report() {
    let dir = TempDir::new().unwrap();
    let data = gen_presence(&dir, "d.csif", "2");
    let out_dir = path(&dir, "sweep");
    ok(&csi(&[
        "sweep", s(&data), "--task", "presence", "--classifier", "threshold", "--grid", "custom",
        "--variants", "vq_only,pca_sq", "--bits-list", "1,2", "--n-pca-list", "1,2", "-o", s(&out_dir),
    ]));
    let csv = fs::read_to_string(out_dir.join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 + 4);
    assert!(csv.starts_with("variant,n_pca,bits,bits_per_frame,compression_ratio,f1,f1_loss_percent\n"));
    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(out_dir.join("sweep.meta.json")).unwrap()).unwrap();
    for key in ["seed", "dataset_sha256", "grid", "tool_version"] {
        assert!(meta.get(key).is_some(), "missing {key}");
    }
    assert_eq!(meta["seed"], 0xC51);
    let report = ok(&csi(&["report", s(&out_dir)]));
    assert!(report.contains("pca_sq"));
}

#[test]
fn csv_and_binary_conversions_agree() {
    let dir = TempDir::new().unwrap();
    let data = gen_presence(&dir, "d.csif", "4");
    let csv = path(&dir, "d.csv");
    ok(&csi(&["preprocess", "--no-filter", s(&data), "-o", s(&csv)]));
    let back = path(&dir, "back.csif");
    ok(&csi(&["preprocess", "--no-filter", s(&csv), "-o", s(&back)]));
    assert_eq!(fs::read(&data).unwrap(), fs::read(&back).unwrap());

    let filtered = path(&dir, "f.csif");
    let out = ok(&csi(&["preprocess", s(&data), "-o", s(&filtered)]));
    assert!(out.contains("of 56 subcarriers"), "{out}");
}

#[test]
fn errors_map_to_exit_codes_without_partial_outputs() {
    let dir = TempDir::new().unwrap();
    let data = gen_presence(&dir, "d.csif", "1");
    let z = path(&dir, "z.csiz");

    assert_eq!(csi(&["compress", s(&data), "--scheme", "pca_sq", "-o", s(&z)]).status.code(), Some(1));
    assert_eq!(csi(&["compress", s(&data), "--scheme", "zip", "--bits", "2", "-o", s(&z)]).status.code(), Some(1));
    assert_eq!(csi(&["compress", s(&data), "--scheme", "sq_only", "--bits", "9", "-o", s(&z)]).status.code(), Some(1));
    assert_eq!(csi(&["gen", "--task", "presence"]).status.code(), Some(1));
    assert_eq!(csi(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(csi(&["decompress", s(&path(&dir, "missing.csiz")), "-o", s(&path(&dir, "x.csif"))]).status.code(), Some(2));
    dir_is(&dir, &["d.csif"]);

    ok(&csi(&["compress", s(&data), "--scheme", "vq_only", "--bits", "1", "-o", s(&z)]));
    let mut bytes = fs::read(&z).unwrap();
    bytes[..4].copy_from_slice(b"CSIX");
    fs::write(&z, &bytes).unwrap();
    let out = csi(&["decompress", s(&z), "-o", s(&path(&dir, "x.csif"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("magic"));
    dir_is(&dir, &["d.csif", "z.csiz"]);
}
