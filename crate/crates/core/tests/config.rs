use dirac_soliton::config::RunConfig;
use dirac_soliton::output::{fmt_f64, to_json_string, write_csv};
use dirac_soliton::pipeline::{cmd_bands, cmd_dirac, nld_params};
use dirac_soliton::{Error, ErrorKind};
use proptest::prelude::*;

#[test]
fn empty_file_gives_defaults() {
    let cfg = RunConfig::from_toml_str("").unwrap();
    assert_eq!(cfg, RunConfig::default());
    assert_eq!(cfg.v, vec![(2, 20.0)]);
    assert_eq!(cfg.deltas, vec![0.1, 0.05, 0.025]);
}

#[test]
fn keys_are_parsed() {
    let cfg = RunConfig::from_toml_str(
        "V = [[2, 10.0], [4, 1.5]]\nW = [[3, 0.5]]\ncutoff = 32\ndeltas = [0.2]\nmu_sharp = 0.01\n",
    )
    .unwrap();
    assert_eq!(cfg.v, vec![(2, 10.0), (4, 1.5)]);
    assert_eq!(cfg.w, vec![(3, 0.5)]);
    assert_eq!(cfg.cutoff, 32);
    assert_eq!(cfg.deltas, vec![0.2]);
}

#[test]
fn invalid_configurations_are_validation_errors() {
    for text in [
        "deltas = [0.1, 0.0]",
        "deltas = [-0.1]",
        "deltas = []",
        "a = 1.0",
        "V = [[1, 2.0]]",
        "W = [[2, 1.0]]",
        "cutoff = 2\nV = [[4, 1.0]]",
        "newton_h = 0.3",
        "crossing = 0",
        "theta_sharp = 0.5\nmu_sharp = 0.5",
        "unknown_key = 1",
        "cutoff = \"many\"",
    ] {
        let err = RunConfig::from_toml_str(text).unwrap_err();
        assert_eq!(err.kind(), ErrorKind::Validation, "{text}: {err}");
    }
}

#[test]
fn hash_is_stable_and_sensitive() {
    let a = RunConfig::default();
    let b = RunConfig::from_toml_str("cutoff = 64").unwrap();
    assert_eq!(a.content_hash(), b.content_hash());
    assert_eq!(a.content_hash().len(), 64);
    let c = RunConfig::from_toml_str("cutoff = 48").unwrap();
    assert_ne!(a.content_hash(), c.content_hash());
}

#[test]
fn floats_print_seventeen_significant_digits() {
    assert_eq!(fmt_f64(1.0), "1.0000000000000000e0");
    assert_eq!(fmt_f64(-0.1), "-1.0000000000000001e-1");
    assert_eq!(fmt_f64(f64::NAN), "nan");
    #[derive(serde::Serialize)]
    struct S {
        x: f64,
        n: usize,
    }
    let s = to_json_string(&S { x: 0.5, n: 3 }).unwrap();
    assert_eq!(s, "{\n  \"x\": 5.0000000000000000e-1,\n  \"n\": 3\n}\n");
}

proptest! {
    #[test]
    fn formatted_floats_round_trip(x in proptest::num::f64::NORMAL) {
        prop_assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
    }
}

#[test]
fn csv_has_header_and_rows() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.csv");
    write_csv(&path, &["a", "b"], vec![vec![1.0, 2.0], vec![3.0, 4.5]]).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(
        text,
        "a,b\n1.0000000000000000e0,2.0000000000000000e0\n3.0000000000000000e0,4.5000000000000000e0\n"
    );
}

#[test]
fn bands_and_dirac_steps_write_their_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig::from_toml_str("cutoff = 24\nband_k_points = 9\nn_bands = 4\ndeltas = [0.1]").unwrap();
    let sweep = cmd_bands(&cfg, dir.path()).unwrap();
    assert_eq!(sweep.k_grid.len(), 9);
    let csv = std::fs::read_to_string(dir.path().join("bands.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 9 * 4);
    let (data, gaps) = cmd_dirac(&cfg, dir.path()).unwrap();
    assert!(gaps[0].is_open());
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("dirac_point.json")).unwrap()).unwrap();
    assert_eq!(json["band_pair"], serde_json::json!([1, 2]));
    assert_eq!(json["input_hash"], serde_json::json!(cfg.content_hash()));
    assert_eq!(json["mu_star"].as_f64().unwrap(), data.mu_star());
    assert!(dir.path().join("gap_report.json").is_file());
}

#[test]
fn overrides_replace_computed_coefficients() {
    let cfg = RunConfig::from_toml_str("c_sharp = 1.0\ntheta_sharp = 1.0\nbeta1 = 1.0\nbeta2 = 0.0").unwrap();
    let p = nld_params(&cfg, None).unwrap();
    assert_eq!((p.c_sharp, p.theta_sharp, p.beta1, p.beta2), (1.0, 1.0, 1.0, 0.0));
    let partial = RunConfig::from_toml_str("c_sharp = 1.0").unwrap();
    assert!(matches!(nld_params(&partial, None), Err(Error::Config(_))));
}
