use std::path::Path;
use std::process::{Command, Output};

fn diracsol(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_diracsol"))
        .args(args)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.toml");
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn bands_writes_a_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "cutoff = 16\nband_k_points = 5\nn_bands = 3\n");
    let out = diracsol(dir.path(), &["bands", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("out/bands.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("k,band_index,mu"));
    assert_eq!(csv.lines().count(), 16);
}

#[test]
fn dirac_reports_the_default_crossing() {
    let dir = tempfile::tempdir().unwrap();
    let out = diracsol(dir.path(), &["dirac", "--delta", "0.1,0.05"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("mu* = 8.2065203595"));
    for f in ["dirac_point.json", "gap_report.json"] {
        assert!(dir.path().join("out").join(f).is_file());
    }
}

#[test]
fn nld_accepts_coefficient_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c_sharp = 1.0\ntheta_sharp = 1.0\nbeta1 = 1.0\nbeta2 = 0.0\nprofile_points = 1000\nkernel_points = 100\n",
    );
    let out = diracsol(dir.path(), &["nld", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("out/profile.csv").is_file());
    assert!(dir.path().join("out/nld.json").is_file());
}

#[test]
fn invalid_input_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(diracsol(dir.path(), &["dirac", "--delta", "0"]).status.code(), Some(2));
    let bad = write_config(dir.path(), "no_such_key = 3\n");
    assert_eq!(diracsol(dir.path(), &["bands", "--config", &bad]).status.code(), Some(2));
    let missing = dir.path().join("absent.toml").to_string_lossy().into_owned();
    assert_eq!(diracsol(dir.path(), &["bands", "--config", &missing]).status.code(), Some(2));
    let cfg = write_config(dir.path(), "theta_sharp = 0.5\nmu_sharp = 0.6\n");
    assert_eq!(diracsol(dir.path(), &["nld", "--config", &cfg]).status.code(), Some(2));
}

#[test]
fn uncoupled_perturbation_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "V = []\nW = [[3, 1.0]]\ncutoff = 16\n");
    let out = diracsol(dir.path(), &["dirac", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("theta_sharp"));
}

#[test]
fn verify_all_detects_regressions() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "cutoff = 32\ndeltas = [0.1]\n");
    let seeded = diracsol(dir.path(), &["verify-all", "--config", &cfg, "--seed-regressions"]);
    assert_eq!(seeded.status.code(), Some(0), "{}", String::from_utf8_lossy(&seeded.stderr));
    let stdout = String::from_utf8_lossy(&seeded.stdout);
    assert!(stdout.lines().all(|l| l.starts_with("PASS")));
    assert!(dir.path().join("out/golden/verify.json").is_file());

    let again = diracsol(dir.path(), &["verify-all", "--config", &cfg]);
    assert_eq!(again.status.code(), Some(0), "{}", String::from_utf8_lossy(&again.stderr));

    let golden = dir.path().join("out/golden/bands.csv");
    let mut text = std::fs::read_to_string(&golden).unwrap();
    text.push_str("0,0,0\n");
    std::fs::write(&golden, text).unwrap();
    let broken = diracsol(dir.path(), &["verify-all", "--config", &cfg]);
    assert_eq!(broken.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&broken.stderr).contains("bands.csv"));
}
