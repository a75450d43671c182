use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use ndstc_cli::output::parse_output;

fn ndstc(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ndstc"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn with_config(text: &str, args: &[&str]) -> (tempfile::TempDir, Output) {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.toml"), text).unwrap();
    let mut full = vec!["--config", "c.toml"];
    full.extend_from_slice(args);
    let out = ndstc(&full, dir.path());
    (dir, out)
}

fn rows(path: &Path) -> Vec<Vec<String>> {
    let parsed = parse_output(&fs::read_to_string(path).unwrap()).unwrap();
    let mut r = csv::Reader::from_reader(parsed.body.as_bytes());
    r.records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect()
}

#[test]
fn non_power_of_two_is_a_config_error() {
    let (_d, out) = with_config("schema_version = 1\n[basis]\nm = 3\n", &["basis"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("power of two"));
}

#[test]
fn unknown_key_and_missing_version_are_config_errors() {
    let (_d, out) = with_config("schema_version = 1\n[ber]\nsnr = [1.0]\n", &["ber"]);
    assert_eq!(out.status.code(), Some(2));
    let (_d, out) = with_config("seed = 1\n", &["basis"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn oversized_label_set_is_infeasible() {
    let (d, out) = with_config(
        "schema_version = 1\n[secrecy]\nbits = 11\ntrials = 1\n",
        &["secrecy", "--out", "o"],
    );
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!d.path().join("o").join("secrecy.csv").exists());
}

#[test]
fn trials_flag_is_rejected_where_meaningless() {
    let dir = tempfile::tempdir().unwrap();
    let out = ndstc(&["basis", "--trials", "3"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn replay_refuses_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let out = ndstc(&["replay", "x.csv", "--seed", "4"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn two_antenna_landscape_touches_zero_at_the_optimum() {
    let (d, out) = with_config("schema_version = 1\n[landscape]\nm = 2\ngrid = 64\n", &["landscape", "--out", "o"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let surface = rows(&d.path().join("o/landscape.csv"));
    assert_eq!(surface.len(), 64);
    let mut best = (f64::INFINITY, 0.0);
    for r in &surface {
        let theta: f64 = r[0].parse().unwrap();
        let f: f64 = r[1].parse().unwrap();
        assert!(f >= 0.0);
        if f < best.0 {
            best = (f, theta);
        }
    }
    assert!(best.0 < 1e-6, "{best:?}");
    // the zeros sit at pi/4 + k pi
    let off = (best.1 - std::f64::consts::FRAC_PI_4).rem_euclid(std::f64::consts::PI);
    assert!(off < 1e-12 || std::f64::consts::PI - off < 1e-12, "{best:?}");
    let ends = rows(&d.path().join("o/trajectory_ends.csv"));
    assert!(ends.iter().all(|r| r[2].parse::<f64>().unwrap() < 1e-9));
}

#[test]
fn basis_outputs_describe_one_vector() {
    let (d, out) = with_config(
        "schema_version = 1\nseed = 3\n[basis]\nm = 8\nnb = 4\nt = 2\noptimizer = { restarts = 3 }\n",
        &["basis", "--out", "o"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let entries = rows(&d.path().join("o/basis_vector.csv"));
    assert_eq!(entries.len(), 16);
    let power: f64 = entries
        .iter()
        .map(|r| r[2].parse::<f64>().unwrap().powi(2) + r[3].parse::<f64>().unwrap().powi(2))
        .sum();
    assert!((power - 2.0).abs() < 1e-12);
    assert_eq!(rows(&d.path().join("o/basis_restarts.csv")).len(), 3);
    let summary = rows(&d.path().join("o/basis_summary.csv"));
    assert_eq!(summary.len(), 1);
    assert_eq!(&summary[0][..4], ["8", "4", "2", "4"]);
}

#[test]
fn gain_sweep_marks_infeasible_designs() {
    let (d, out) = with_config(
        "schema_version = 1\n[gain_sweep]\nm = 16\nnb_values = [16]\nt_values = []\noptimizer = { restarts = 2 }\n",
        &["gain-sweep", "--out", "o"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = rows(&d.path().join("o/gain_sweep.csv"));
    let duc = table.iter().find(|r| r[3] == "conventional-duc").unwrap();
    assert_eq!((duc[4].as_str(), duc[5].as_str()), ("", "infeasible"));
    let conv = table.iter().find(|r| r[3] == "conventional-adsm").unwrap();
    assert!(conv[4].parse::<f64>().unwrap() > 0.0);
}

#[test]
fn seed_flag_changes_the_spec_and_the_result() {
    let dir = tempfile::tempdir().unwrap();
    let base = ["basis", "--out"];
    for (seed, sub) in [("1", "a"), ("2", "b")] {
        let mut args = base.to_vec();
        args.extend([sub, "--seed", seed]);
        assert!(ndstc(&args, dir.path()).status.success());
    }
    let a = fs::read_to_string(dir.path().join("a/basis_vector.csv")).unwrap();
    let b = fs::read_to_string(dir.path().join("b/basis_vector.csv")).unwrap();
    assert!(a.contains("# seed: 1") && b.contains("# seed: 2"));
    assert_ne!(parse_output(&a).unwrap().body, parse_output(&b).unwrap().body);
}
