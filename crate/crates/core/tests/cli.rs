use std::path::Path;
use std::process::{Command, Output};

use consrc::config::RunConfig;
use consrc::experiments::{ReconstructSummary, SpectrumSummary};
use consrc::report::parse_rows;
use consrc::scenario::Method;

fn consrc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_consrc"))
        .args(args)
        .env_remove("CONSRC_THREADS")
        .output()
        .unwrap()
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("run.toml");
    std::fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

fn read(dir: &Path, file: &str) -> String {
    std::fs::read_to_string(dir.join(file)).unwrap()
}

#[test]
fn properties_run_succeeds_and_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "n_s = 60\nn_m = 60\nproperties_trials = 12\n");
    let mut outputs = Vec::new();
    for run in ["a", "b"] {
        let out_dir = tmp.path().join(run);
        let out = consrc(&["properties", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        assert!(String::from_utf8_lossy(&out.stdout).contains("properties.csv"));
        outputs.push(read(&out_dir, "properties.csv"));
    }
    assert_eq!(outputs[0], outputs[1]);

    let csv = &outputs[0];
    assert!(csv.starts_with("# consrc-csv schema=1 table=properties\n"));
    let header = csv.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(header, "case,index,rows,cols,rank,method,r1,r2,r3,r4,bound,threshold,passed");
    let rows = parse_rows(csv);
    assert!(rows.iter().filter(|r| r[0] == "random").count() >= 12);
    assert!(rows.iter().any(|r| r[0] == "scenario"));
    for r in &rows {
        for v in &r[6..10] {
            v.parse::<f64>().unwrap();
        }
    }

    let effective = RunConfig::load(&tmp.path().join("a/config.toml")).unwrap();
    assert_eq!(effective.n_s, 60);
    assert_eq!(effective.properties_trials, 12);
    assert_eq!(RunConfig::from_toml(&effective.to_toml()).unwrap(), effective);
}

#[test]
fn seed_changes_random_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "n_s = 60\nn_m = 60\nproperties_trials = 4\n");
    let mut csvs = Vec::new();
    for seed in ["1", "2"] {
        let out_dir = tmp.path().join(seed);
        let out = consrc(&["properties", "--config", &cfg, "--seed", seed, "--out", out_dir.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0));
        csvs.push(read(&out_dir, "properties.csv"));
    }
    assert_ne!(csvs[0], csvs[1]);
}

#[test]
fn config_errors_exit_two_and_name_the_field() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("out");
    let out_dir = out_dir.to_str().unwrap();
    for (body, field) in [
        ("n_s = 60\nbogus_key = 1\n", "bogus_key"),
        ("n_s = \"many\"\n", "n_s"),
        ("frequency = -1.0\n", "frequency"),
        ("truth_offset = 1.5\n", "truth_offset"),
    ] {
        let cfg = write_config(tmp.path(), body);
        let out = consrc(&["reconstruct", "--config", &cfg, "--out", out_dir]);
        assert_eq!(out.status.code(), Some(2), "{body}");
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(err.contains(field), "{body}: {err}");
    }
    let out = consrc(&["spectrum", "--tol=-1", "--out", out_dir]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("spectrum_svd_tol"));
    assert!(!Path::new(out_dir).exists());
}

#[test]
fn unknown_experiment_is_a_usage_error() {
    let out = consrc(&["everything"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn coarse_spectrum_fails_its_knee_check() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("out");
    let out = consrc(&["spectrum", "--ns", "150", "--nm", "150", "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("knee"));

    let summary: SpectrumSummary = serde_json::from_str(&read(&out_dir, "spectrum_summary.json")).unwrap();
    assert_eq!(summary.schema_version, 1);
    assert_eq!(summary.knee, None);
    assert!(summary.checks.iter().any(|c| c.binding && !c.passed));
    for (file, table) in [("spectrum.csv", "spectrum"), ("spectrum_modes.csv", "spectrum_modes")] {
        let text = read(&out_dir, file);
        assert!(text.starts_with(&format!("# consrc-csv schema=1 table={table}\n")));
        assert!(!parse_rows(&text).is_empty());
    }
}

#[test]
fn reconstruct_writes_summary_for_every_method() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "n_s = 150\nn_m = 150\nn_eval = 40\n");
    let out_dir = tmp.path().join("out");
    let out = consrc(&["reconstruct", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    // the coarse grid is expected to miss the binding checks
    assert_eq!(out.status.code(), Some(1));

    let summary: ReconstructSummary = serde_json::from_str(&read(&out_dir, "reconstruct_summary.json")).unwrap();
    assert_eq!(summary.n_s, 150);
    assert_eq!(summary.methods.len(), 4);
    let mpp = summary.method(Method::Mpp).unwrap();
    assert!(mpp.far_error < 0.1);
    let csv = read(&out_dir, "reconstruct.csv");
    assert!(csv.starts_with("# consrc-csv schema=1 table=reconstruct\n"));
    let rows = parse_rows(&csv);
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[0][0], "mpp");
}
