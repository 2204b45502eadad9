use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scenario(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(format!("{name}.cfg"))
}

fn qflow(args: &[&str], config: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qflow"))
        .args(&args[..1])
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(&args[1..])
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Copy of a catalog scenario with `extra` appended.
fn variant(dir: &Path, base: &str, extra: &str) -> PathBuf {
    let text = fs::read_to_string(scenario(base)).unwrap();
    let path = dir.join(format!("{base}_variant.cfg"));
    fs::write(&path, format!("{text}\n{extra}\n")).unwrap();
    path
}

#[test]
fn verify_plane_wave_succeeds() {
    let out = tempfile::tempdir().unwrap();
    let o = qflow(&["verify"], &scenario("plane_wave"), out.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(out.path().join("verify.json").exists());
    assert!(String::from_utf8_lossy(&o.stdout).contains("pass five_way_max_deviation"));
}

#[test]
fn bad_grid_size_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = variant(dir.path(), "static_gaussian", "");
    let text = fs::read_to_string(&cfg).unwrap();
    let lines: Vec<String> = text
        .lines()
        .map(|l| if l.trim_start().starts_with("grid.n") { "grid.n = 100".to_string() } else { l.to_string() })
        .collect();
    fs::write(&cfg, lines.join("\n")).unwrap();
    let out = dir.path().join("out");
    let o = qflow(&["evolve"], &cfg, &out);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("grid.n"), "{}", stderr(&o));
    assert!(!out.exists());
}

#[test]
fn unknown_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = variant(dir.path(), "static_gaussian", "fields.smoothing = 3");
    let o = qflow(&["fields"], &cfg, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("fields.smoothing"), "{}", stderr(&o));
}

#[test]
fn seed_in_node_region_is_a_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = variant(dir.path(), "static_gaussian", "trajectories.positions = 0, 15");
    let out = dir.path().join("out");
    let o = qflow(&["trajectories"], &cfg, &out);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("x0 = 15"), "{}", stderr(&o));
    assert!(!out.exists());
}

#[test]
fn tiny_tolerance_scale_fails_verification() {
    let out = tempfile::tempdir().unwrap();
    let o = qflow(&["verify", "--tolerance-scale", "1e-20"], &scenario("plane_wave"), out.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL"));
}

#[test]
fn output_is_deterministic_and_records_seed() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [a.path(), b.path()] {
        let o = qflow(&["trajectories", "--seed", "77"], &scenario("spreading_gaussian"), dir);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    for name in ["trajectories.csv", "trajectories.json"] {
        let x = fs::read(a.path().join(name)).unwrap();
        assert_eq!(x, fs::read(b.path().join(name)).unwrap(), "{name}");
    }
    let csv = fs::read_to_string(a.path().join("trajectories.csv")).unwrap();
    assert!(csv.lines().any(|l| l == "# seed: 77"));
}

#[test]
fn unknown_subcommand_is_rejected() {
    let out = tempfile::tempdir().unwrap();
    let o = qflow(&["simulate"], &scenario("plane_wave"), out.path());
    assert_eq!(o.status.code(), Some(2));
}
