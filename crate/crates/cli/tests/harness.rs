use std::collections::BTreeMap;
use std::process::Command;

use optomech::catalog::builtin_names;
use optomech::{builtin, execute, list_scenarios, parse_config, run_scenario, run_sweep, Column, Config, Reduce};

const PROVENANCE: &str = include_str!("../../../scenarios/provenance.csv");

fn provenance_table() -> BTreeMap<(String, String), (f64, String)> {
    let mut reader = csv::Reader::from_reader(PROVENANCE.as_bytes());
    reader
        .records()
        .map(|r| {
            let r = r.unwrap();
            ((r[0].to_string(), r[1].to_string()), (r[2].parse().unwrap(), r[3].to_string()))
        })
        .collect()
}

#[test]
fn every_manifest_matches_the_provenance_table() {
    let table = provenance_table();
    let mut checked = 0;
    for name in builtin_names() {
        let config = builtin(name).unwrap();
        let params = config.scenario().params;
        for key in optomech_core::model::PARAM_KEYS {
            let (value, source) = table.get(&(name.to_string(), key.to_string())).unwrap_or_else(|| panic!("{name}.{key} missing from table"));
            assert_eq!(params.get(key), Some(*value), "{name}.{key}");
            assert!(["caption", "text", "assumed", "sweep"].contains(&source.as_str()), "{name}.{key}: {source}");
            checked += 1;
        }
    }
    assert_eq!(checked, table.len());
}

#[test]
fn catalog_is_complete_and_ordered() {
    let names: Vec<_> = list_scenarios().unwrap().into_iter().map(|e| e.name).collect();
    assert_eq!(
        names,
        [
            "fig2", "fig3", "fig4a", "fig4b", "fig5a", "fig5b", "fig6", "fig7a", "fig7b", "fig8", "fig9", "fig10",
            "fig11", "fig11-static", "fig12a", "fig12b"
        ]
    );
    assert_eq!(list_scenarios().unwrap(), list_scenarios().unwrap());
}

#[test]
fn catalog_examples() {
    let fig7b = builtin("fig7b").unwrap();
    assert_eq!(fig7b.scenario().params.drive_freq, 4.0);
    let fig5b = builtin("fig5b").unwrap().scenario().params;
    assert_eq!((fig5b.delta_0, fig5b.eps), (1.0, 0.0));
    let fig2 = builtin("fig2").unwrap();
    let s = fig2.scenario();
    assert_eq!(s.t_end, optomech::TimeSpec::Periods(50.0));
    assert_eq!((s.params.g0, s.params.g_om, s.params.kappa_a, s.params.kappa_d), (0.3, 0.01, 0.1, 0.2));
    assert!(matches!(builtin("fig8").unwrap(), Config::Sweep(_)));
    assert_eq!(builtin("fig99").unwrap_err().kind(), "unknown-scenario");
}

#[test]
fn scenario_writes_requested_files_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let mut spec = builtin("fig12a").unwrap().scenario().clone();
    spec.t_end = "3tau".parse().unwrap();
    let files = run_scenario(&spec, dir.path()).unwrap();
    let names: Vec<_> = files.iter().map(|p| p.file_name().unwrap().to_string_lossy().into_owned()).collect();
    assert_eq!(names, ["meanfield.csv", "covariance.csv", "energies.csv", "entanglement.csv", "run.json"]);
    let manifest: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("fig12a/run.json")).unwrap()).unwrap();
    assert_eq!(manifest["scenario"]["params"]["g0"], 0.3);
    assert_eq!(manifest["scenario"]["t_end"], "3tau");
    assert_eq!(manifest["resolved"]["steps"], 6000);
    assert!(manifest["code_version"].as_str().unwrap().starts_with("optomech "));
    let ent = std::fs::read_to_string(dir.path().join("fig12a/entanglement.csv")).unwrap();
    assert_eq!(ent.lines().next().unwrap(), "t,E_md,E_cd,E_cm,mirror_energy,cavity_energy,exciton_energy,phonons");
    assert_eq!(ent.lines().count(), 6000 / 20 + 2);
}

#[test]
fn csv_floats_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let mut spec = builtin("fig2").unwrap().scenario().clone();
    spec.t_end = "1tau".parse().unwrap();
    let out = execute(&spec).unwrap();
    out.write(&dir.path().join("x")).unwrap();
    let text = std::fs::read_to_string(dir.path().join("x/meanfield.csv")).unwrap();
    let row: Vec<f64> = text.lines().nth(3).unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    let s = &out.meanfield.states[2 * spec.output_stride];
    assert_eq!(row[1], s.q);
    assert_eq!(row[3], s.a.re);
    assert_eq!(row[6], s.sigma.im);
}

#[test]
fn single_value_sweep_equals_reduced_scenario() {
    let Config::Sweep(mut sweep) = builtin("fig8").unwrap() else { panic!("fig8 is a sweep") };
    sweep.base.t_end = "6tau".parse().unwrap();
    sweep.values = vec![0.35];
    let summary = run_sweep(&sweep, 2).unwrap();
    let direct = execute(&sweep.base.with_param("g0", &[], 0.35)).unwrap();
    assert_eq!(summary.rows.len(), 1);
    assert_eq!(summary.rows[0].stats[0], direct.reduce(Column::Q, Reduce::MeanLastFivePeriods));
    assert_eq!(summary.rows[0].stats[1], direct.reduce(Column::MirrorQd, Reduce::MeanLastFivePeriods));
}

#[test]
fn failing_sweep_points_are_recorded() {
    let Config::Sweep(mut sweep) = builtin("fig9").unwrap() else { panic!("fig9 is a sweep") };
    sweep.base.t_end = "2tau".parse().unwrap();
    sweep.values = vec![0.2, -0.1, 0.4];
    let summary = run_sweep(&sweep, 3).unwrap();
    let values: Vec<f64> = summary.rows.iter().map(|r| r.value).collect();
    assert_eq!(values, [0.2, -0.1, 0.4]);
    assert!(summary.rows[0].error.is_none() && summary.rows[2].error.is_none());
    let err = summary.rows[1].error.as_deref().unwrap();
    assert!(err.contains("non-positive QD decay"), "{err}");
    assert_eq!(summary.rows[1].stats, vec![None]);

    let mut buf = Vec::new();
    summary.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().next().unwrap(), "kappa_d,E_cd_mean_last5,error");
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn series_sweep_header_lists_both_axes() {
    let Config::Sweep(mut sweep) = builtin("fig6").unwrap() else { panic!("fig6 is a sweep") };
    sweep.base.t_end = "2tau".parse().unwrap();
    sweep.values = vec![1.0, 2.0];
    let summary = run_sweep(&sweep, 4).unwrap();
    assert_eq!(summary.header(), ["kappa_d", "Omega", "phonons_mean_last5", "error"]);
    let order: Vec<_> = summary.rows.iter().map(|r| (r.series.unwrap(), r.value)).collect();
    assert_eq!(order, [(0.2, 1.0), (0.2, 2.0), (0.4, 1.0), (0.4, 2.0)]);
}

#[test]
fn user_manifest_derived_from_builtin() {
    let text = include_str!("../../../scenarios/fig4a.toml").replace("name = \"fig4a\"", "name = \"variant\"").replace("n_b = 0.0", "n_b = 2.0");
    let Config::Scenario(spec) = parse_config(&text, "variant.toml").unwrap() else { panic!("scenario expected") };
    assert_eq!(spec.params.n_b, 2.0);
    assert_eq!(spec.name, "variant");
}

fn cli() -> Command {
    Command::new(env!("CARGO_BIN_EXE_optomech"))
}

#[test]
fn cli_reports_errors_as_json() {
    let out = cli().args(["validate", "no-such-scenario"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let report: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(report["error"], "unknown-scenario");

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    let text = include_str!("../../../scenarios/fig2.toml").replace("kappa_a = 0.1\n", "");
    std::fs::write(&bad, text).unwrap();
    let out = cli().args(["validate", bad.to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let report: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(report["error"], "parse");
    assert!(report["message"].as_str().unwrap().contains("kappa_a"));

    let out = cli().args(["run", "fig2", "--dt", "tau/1999.5"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let report: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert!(report["message"].as_str().unwrap().contains("incommensurate step"));
}

#[test]
fn cli_run_list_and_sweep() {
    let out = cli().arg("list").output().unwrap();
    assert!(out.status.success());
    let listing = String::from_utf8(out.stdout).unwrap();
    assert_eq!(listing.lines().count(), 16);
    assert!(listing.lines().any(|l| l.starts_with("fig7b")));

    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().to_str().unwrap();
    let status = cli().args(["run", "fig5b", "--t-end", "2tau", "--out", out_dir]).status().unwrap();
    assert!(status.success());
    assert!(dir.path().join("fig5b/energies.csv").is_file());

    let status = cli().args(["sweep", "fig8", "--t-end", "6tau", "--workers", "2", "--out", out_dir]).status().unwrap();
    assert!(status.success());
    let summary = std::fs::read_to_string(dir.path().join("fig8/summary.csv")).unwrap();
    assert_eq!(summary.lines().next().unwrap(), "g0,q_mean_last5,E_md_mean_last5,error");
    assert_eq!(summary.lines().count(), 4);

    let out = cli().args(["sweep", "fig2", "--out", out_dir]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}
