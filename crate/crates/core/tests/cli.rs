use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

use jssreg::io::{load_image, save_image};
use jssreg::synthetic::{texture, DeformedPair};
use jssreg::Dims;

fn jssreg(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jssreg")).args(args).current_dir(cwd).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn write_texture(dir: &TempDir, name: &str, seed: u64) -> PathBuf {
    let p = dir.path().join(name);
    save_image(&p, &texture(Dims::new2(64, 64), seed)).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn diff_of_an_image_with_itself_is_black() {
    let dir = TempDir::new().unwrap();
    let a = write_texture(&dir, "a.png", 1);
    let out = dir.path().join("d.png");
    let o = jssreg(&["diff", s(&a), s(&a), "--out", s(&out)], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let raw = image::open(&out).unwrap().into_luma16();
    assert!(raw.pixels().all(|p| p.0[0] == 0));
}

#[test]
fn eval_reports_hand_computed_statistics() {
    let dir = TempDir::new().unwrap();
    // zero field, so the errors are the pair offsets 1, 2 and 3
    let field = dir.path().join("zero.json");
    jssreg::io::save_field(&field, &jssreg::DisplacementField::zeros(Dims::new2(16, 16))).unwrap();
    let csv = dir.path().join("lm.csv");
    std::fs::write(&csv, "rx,ry,mx,my\n2,2,3,2\n5,5,5,7\n8,4,8,1\n").unwrap();
    let o = jssreg(&["eval", "--field", s(&field), "--landmarks", s(&csv)], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((report["mre"].as_f64().unwrap() - 2.0).abs() < 1e-12);
    assert!((report["sd"].as_f64().unwrap() - (2.0f64 / 3.0).sqrt()).abs() < 1e-12);
}

#[test]
fn register_identity_pair_reports_small_error() {
    let dir = TempDir::new().unwrap();
    let a = write_texture(&dir, "ref.png", 2);
    let report = dir.path().join("report.json");
    let o = jssreg(&["register", s(&a), s(&a), "--report", s(&report)], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert!(r["landmarks"]["mre"].as_f64().unwrap() < 0.25);
    assert!(!r["diagnostics"].as_array().unwrap().is_empty());
    assert!(r["timings"]["total"].as_f64().unwrap() >= 0.0);
}

#[test]
fn register_writes_identical_field_files_across_runs() {
    let dir = TempDir::new().unwrap();
    let pair = DeformedPair::bump(Dims::new2(64, 64), 3);
    let (r, m) = (dir.path().join("r.png"), dir.path().join("m.png"));
    save_image(&r, &pair.reference).unwrap();
    save_image(&m, &pair.moving).unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"levels": 3, "regression": {"order": 0}}"#).unwrap();
    let mut payloads = Vec::new();
    for run in 0..2 {
        let f = dir.path().join(format!("f{run}.json"));
        let w = dir.path().join(format!("w{run}.png"));
        let o = jssreg(&["register", s(&r), s(&m), "--config", s(&cfg), "--out-field", s(&f), "--out-warped", s(&w)], dir.path());
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        assert_eq!(load_image(&w).unwrap().dims(), Dims::new2(64, 64));
        payloads.push((std::fs::read(&f).unwrap(), std::fs::read(f.with_extension("raw")).unwrap()));
    }
    assert_eq!(payloads[0], payloads[1]);
}

#[test]
fn map_and_warp_subcommands_write_outputs() {
    let dir = TempDir::new().unwrap();
    let a = write_texture(&dir, "a.png", 4);
    let b = write_texture(&dir, "b.pgm", 5);
    let field = dir.path().join("f.json");
    jssreg::io::save_field(&field, &jssreg::DisplacementField::uniform(Dims::new2(64, 64), [1.5, -2.0, 0.0])).unwrap();
    let runs: [&[&str]; 4] = [
        &["saliency", s(&a), "--tensor-maps", "t.png"],
        &["jsm", s(&a), s(&b), "--field", s(&field)],
        &["warp", s(&b), "--field", s(&field)],
        &["kernel-debug", s(&a), "--at", "20,30"],
    ];
    for args in runs {
        let o = jssreg(args, dir.path());
        assert_eq!(code(&o), 0, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
    for name in ["saliency.png", "t_anisotropy.png", "t_eigenvalue.png", "jsm.png", "warped.png", "kernel.png"] {
        assert!(dir.path().join(name).exists(), "{name}");
    }
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&jssreg(&[], dir.path())), 2);
    assert_eq!(code(&jssreg(&["register", "only-one.png"], dir.path())), 2);
    assert_eq!(code(&jssreg(&["kernel-debug", "a.png", "--at", "x"], dir.path())), 2);
}

#[test]
fn io_and_validation_failures_are_distinguished() {
    let dir = TempDir::new().unwrap();
    let a = write_texture(&dir, "a.png", 6);
    let missing = dir.path().join("missing.png");
    assert_eq!(code(&jssreg(&["diff", s(&a), s(&missing)], dir.path())), 4);

    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"levels": 0}"#).unwrap();
    assert_eq!(code(&jssreg(&["register", s(&a), s(&a), "--config", s(&cfg)], dir.path())), 3);

    assert_eq!(code(&jssreg(&["kernel-debug", s(&a), "--at", "500,2"], dir.path())), 3);

    let other = dir.path().join("small.png");
    save_image(&other, &texture(Dims::new2(32, 32), 1)).unwrap();
    assert_eq!(code(&jssreg(&["diff", s(&a), s(&other)], dir.path())), 3);
}
