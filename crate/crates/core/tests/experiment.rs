use std::fs;

use ncvem::analysis::CSV_HEADER;
use ncvem::experiment::{run_experiment, ExperimentConfig, SCHEMA_VERSION};
use ncvem::Error;

fn small_config() -> String {
    format!(
        r#"{{
  "schema_version": {SCHEMA_VERSION},
  "name": "small",
  "geometry": {{ "kind": "rect", "lx": 1.0, "ly": 1.1 }},
  "family": "distorted",
  "levels": [8, 12, 16],
  "material": {{ "rho": 1.0, "c": 1.0 }},
  "stabilization": {{ "sigma": [1.0, 0.25], "tau": 1.0 }},
  "n_ev": 6,
  "normalize": true,
  "reference": {{ "kind": "exact", "count": 6 }},
  "fit": "reference",
  "n_track": 2,
  "error_modes": [{{ "n": 1, "m": 0 }}],
  "vtk": true,
  "output_dir": "unused",
  "seed": 7
}}"#
    )
}

#[test]
fn config_round_trips() {
    let cfg = ExperimentConfig::from_json(&small_config()).unwrap();
    assert_eq!(ExperimentConfig::from_json(&cfg.to_json()).unwrap(), cfg);
    assert_eq!(cfg.match_rtol, 0.15);
}

#[test]
fn unknown_keys_are_rejected() {
    let text = small_config().replace("\"seed\": 7", "\"seed\": 7, \"sigmaa\": 1");
    assert!(matches!(ExperimentConfig::from_json(&text), Err(Error::Json { .. })));
    let nested = small_config().replace("\"tau\": 1.0", "\"tau\": 1.0, \"kappa\": 2");
    assert!(ExperimentConfig::from_json(&nested).is_err());
}

#[test]
fn other_schema_versions_are_rejected() {
    let text = small_config().replace(&format!("\"schema_version\": {SCHEMA_VERSION}"), "\"schema_version\": 99");
    let err = ExperimentConfig::from_json(&text).unwrap_err();
    assert!(err.to_string().contains("schema_version"), "{err}");
    let missing = small_config().replace(&format!("\"schema_version\": {SCHEMA_VERSION},"), "");
    assert!(ExperimentConfig::from_json(&missing).is_err());
}

#[test]
fn out_of_range_parameters_are_rejected() {
    for (from, to) in [
        ("\"rho\": 1.0", "\"rho\": -1.0"),
        ("\"levels\": [8, 12, 16]", "\"levels\": []"),
        ("\"levels\": [8, 12, 16]", "\"levels\": [4, 4, 8]"),
        ("\"n_track\": 2", "\"n_track\": 9"),
        ("\"sigma\": [1.0, 0.25]", "\"sigma\": [-1.0]"),
        ("\"lx\": 1.0", "\"lx\": 0.0"),
    ] {
        let text = small_config().replace(from, to);
        assert!(ExperimentConfig::from_json(&text).is_err(), "{to}");
    }
}

#[test]
fn runs_write_deterministic_outputs() {
    let cfg = ExperimentConfig::from_json(&small_config()).unwrap();
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let outcomes: Vec<_> = dirs
        .iter()
        .map(|d| run_experiment(&cfg, Some(d.path())).unwrap())
        .collect();
    assert_eq!(outcomes[0], outcomes[1]);
    assert!(outcomes[0].passed(), "{:?}", outcomes[0].failed_checks().collect::<Vec<_>>());
    assert_eq!(outcomes[0].runs.len(), 2);

    let mut names: Vec<String> = fs::read_dir(dirs[0].path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    for sigma in ["1", "0.25"] {
        for stem in ["eigenvalues", "report"] {
            let ext = if stem == "report" { "txt" } else { "csv" };
            assert!(names.contains(&format!("{stem}_sigma_{sigma}.{ext}")), "{names:?}");
        }
        for n in [8, 12, 16] {
            assert!(names.contains(&format!("level_{n}_sigma_{sigma}.csv")), "{names:?}");
            assert!(names.contains(&format!("modes_{n}_sigma_{sigma}.vtk")), "{names:?}");
        }
    }
    assert!(names.contains(&"summary.json".to_string()));
    assert!(!names.iter().any(|n| n.ends_with(".tmp")), "{names:?}");
    for name in &names {
        let a = fs::read(dirs[0].path().join(name)).unwrap();
        let b = fs::read(dirs[1].path().join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between runs");
    }

    let csv = fs::read_to_string(dirs[0].path().join("eigenvalues_sigma_1.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 3 * 6);
    assert!(rows.iter().all(|r| r.len() == 7));
    assert!(rows.iter().all(|r| ["physical", "spurious", "unclassified"].contains(&r[6])));

    let errors = &outcomes[0].runs[0].errors[0];
    assert_eq!((errors.n, errors.m), (1, 0));
    assert_eq!(errors.levels.len(), 3);
    assert!(errors.levels.windows(2).all(|w| w[1].h1 < w[0].h1), "{errors:?}");
}

#[test]
fn failures_name_the_level() {
    // A one-cell-wide ring cannot be built; the error carries the level.
    let text = small_config()
        .replace("{ \"kind\": \"rect\", \"lx\": 1.0, \"ly\": 1.1 }", "{ \"kind\": \"ring\", \"r_inner\": 0.5, \"r_outer\": 2.0 }")
        .replace("\"reference\": { \"kind\": \"exact\", \"count\": 6 },", "")
        .replace("\"fit\": \"reference\"", "\"fit\": \"extrapolate\"")
        .replace("\"error_modes\": [{ \"n\": 1, \"m\": 0 }],", "")
        .replace("\"levels\": [8, 12, 16]", "\"levels\": [1, 40, 60]");
    let cfg = ExperimentConfig::from_json(&text).unwrap();
    let err = run_experiment(&cfg, None).unwrap_err();
    assert!(err.to_string().contains("level 1"), "{err}");
}
