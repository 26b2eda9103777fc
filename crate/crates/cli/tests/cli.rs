use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;
use std::process::Command as Process;

use dipolesim::config::Expectation;
use dipolesim::experiments::{self, oracle_w2};
use dipolesim::report::read_roughness_csv;
use dipolesim::{run_command, CliError, Command, ExperimentConfig, Format};
use dipolesim_core::spde::{Scheme, Variant};

fn load(overrides: &[&str]) -> Result<ExperimentConfig, CliError> {
    let o: Vec<String> = overrides.iter().map(|s| s.to_string()).collect();
    ExperimentConfig::load(None, &o)
}

fn small_ew() -> ExperimentConfig {
    load(&[
        "equation.variant=edwards_wilkinson",
        "equation.d2=1.0",
        "grid.sizes=[16, 24]",
        "integrator.t_max=20.0",
        "integrator.record={kind=\"geometric\", t_min=0.5, per_decade=4}",
        "ensemble.n_realizations=4",
    ])
    .unwrap()
}

fn config_message(r: Result<ExperimentConfig, CliError>) -> String {
    match r {
        Err(CliError::Config(m)) => m,
        other => panic!("expected a config error, got {other:?}"),
    }
}

fn bin() -> Process {
    let mut p = Process::new(env!("CARGO_BIN_EXE_dipolesim"));
    p.env_remove("DIPOLESIM_OUT_DIR").env_remove("DIPOLESIM_WORKERS");
    p
}

fn exit_code(p: &mut Process) -> i32 {
    p.output().unwrap().status.code().unwrap()
}

fn csvs(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect()
}

#[test]
fn overrides_take_toml_literals_and_bare_strings() {
    let cfg = load(&[
        "grid.sizes=[16, 32]",
        "equation.variant=mullins_herring",
        "equation.C=0.5",
        "integrator.scheme=explicit_euler_maruyama",
        "integrator.dt=0.001",
    ])
    .unwrap();
    assert_eq!(cfg.grid.sizes, vec![16, 32]);
    assert_eq!(cfg.equation.variant, Variant::MullinsHerring);
    assert_eq!(cfg.equation.noise_strength, 0.5);
    assert_eq!(cfg.integrator.scheme, Scheme::ExplicitEulerMaruyama);
}

#[test]
fn later_overrides_win() {
    let cfg = load(&["ensemble.master_seed=1", "ensemble.master_seed=9"]).unwrap();
    assert_eq!(cfg.ensemble.master_seed, 9);
}

#[test]
fn bad_keys_and_values_name_their_path() {
    assert!(config_message(load(&["equation.bogus=1"])).contains("equation"));
    assert!(config_message(load(&["grid.dx=\"wide\""])).contains("grid.dx"));
    assert!(config_message(load(&["no_equals_sign"])).contains("no_equals_sign"));
    config_message(load(&["grid.sizes=[]"]));
    config_message(load(&["ensemble.n_realizations=0"]));
    config_message(load(&["analysis.expect=[{metric=\"beta\"}]"]));
}

#[test]
fn unknown_expectation_metric_is_a_config_error() {
    let mut cfg = small_ew();
    cfg.analysis.expect = vec![Expectation {
        metric: "no_such_metric".into(),
        target: None,
        tolerance: None,
        min: Some(0.0),
        max: None,
    }];
    assert!(matches!(run_command(&Command::Simulate, &cfg, 1), Err(CliError::Config(_))));
}

#[test]
fn calibrate_rejects_nonlinear_variants() {
    let cfg = load(&["equation.variant=dipole_growth", "grid.sizes=[16]"]).unwrap();
    assert!(matches!(run_command(&Command::Calibrate, &cfg, 1), Err(CliError::Config(_))));
}

#[test]
fn roughness_csv_round_trips_and_feeds_collapse() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_ew();
    let (report, runs) = experiments::simulate(&cfg, 1).unwrap();
    report.write(&cfg, dir.path(), &[Format::Csv]).unwrap();
    let path = dir.path().join("roughness.csv");
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("# dipolesim roughness schema v1\n"));

    let back = read_roughness_csv(&path).unwrap();
    let direct: Vec<_> = runs.iter().map(|r| r.series()).collect();
    assert_eq!(back, direct);

    let from_file = run_command(&Command::Collapse { input: Some(path) }, &cfg, 1).unwrap();
    let in_memory = experiments::collapse(&cfg, &direct).unwrap();
    assert_eq!(from_file.metrics, in_memory.metrics);
}

/// `(C/2L) Σ_k (1 − e^{2 d2 λ t}) / (−d2 λ)` with the lattice Laplacian
/// eigenvalues `λ = −(2 − 2cos k)`, written out independently here.
fn ew_continuum_w2(l: usize, t: f64) -> f64 {
    (1..l)
        .map(|m| {
            let lam = -(2.0 - 2.0 * (2.0 * PI * m as f64 / l as f64).cos());
            (1.0 - (2.0 * lam * t).exp()) / -lam
        })
        .sum::<f64>()
        / (2.0 * l as f64)
}

#[test]
fn discrete_oracle_approaches_the_continuous_time_sum() {
    for scheme in ["imex_spectral", "explicit_euler_maruyama"] {
        let cfg = load(&[
            "equation.variant=edwards_wilkinson",
            "equation.d2=1.0",
            &format!("integrator.scheme={scheme}"),
            "integrator.dt=0.001",
            "integrator.t_max=5.0",
            "integrator.record={kind=\"uniform\", start=1.0, interval=1.0, count=5}",
        ])
        .unwrap();
        let spec = cfg.run_spec(16).unwrap();
        let w2 = oracle_w2(&spec);
        for (t, v) in spec.integrator.record_times.iter().zip(&w2) {
            let exact = ew_continuum_w2(16, *t);
            assert!((v / exact - 1.0).abs() < 5e-3, "{scheme} t={t}: {v} vs {exact}");
        }
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = |name: &str| dir.path().join(name);
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");

    let ok = exit_code(
        bin()
            .args(["tilt-test", "--config"])
            .arg(configs.join("tilt.toml"))
            .arg("--out")
            .arg(out("tilt")),
    );
    assert_eq!(ok, 0);

    let failing = exit_code(
        bin()
            .args(["lindblad", "--set", "lindblad.negative_control=true", "--out"])
            .arg(out("control")),
    );
    assert_eq!(failing, 1);

    let bad_key = exit_code(bin().args(["simulate", "--set", "grid.bogus=1"]).arg("--out").arg(out("bad")));
    assert_eq!(bad_key, 2);
    let missing = exit_code(bin().args(["simulate", "--config", "/nonexistent/x.toml"]));
    assert_eq!(missing, 2);

    let diverging = exit_code(
        bin()
            .args([
                "simulate",
                "--set",
                "grid.sizes=[32]",
                "--set",
                "equation.variant=dipole_growth",
                "--set",
                "equation.saturation=0.0",
                "--set",
                "integrator.t_max=50.0",
                "--set",
                "ensemble.n_realizations=2",
                "--set",
                "ensemble.initial_condition={kind=\"gaussian_random\", amplitude=5.0}",
                "--out",
            ])
            .arg(out("div")),
    );
    assert_eq!(diverging, 3);
}

#[test]
fn env_out_dir_format_flag_and_replay() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    let sets = [
        "--set",
        "grid.sizes=[16]",
        "--set",
        "integrator.t_max=10.0",
        "--set",
        "ensemble.n_realizations=3",
    ];
    let status = bin()
        .arg("simulate")
        .args(sets)
        .args(["--seed", "42"])
        .env("DIPOLESIM_OUT_DIR", &first)
        .env("DIPOLESIM_WORKERS", "2")
        .output()
        .unwrap()
        .status;
    assert!(status.success());
    assert!(first.join("roughness.csv").exists());
    assert!(first.join("summary.json").exists());

    // The saved config reproduces the run, seed included.
    let replay = dir.path().join("replay");
    let status = bin()
        .arg("simulate")
        .arg("--config")
        .arg(first.join("config.toml"))
        .arg("--out")
        .arg(&replay)
        .output()
        .unwrap()
        .status;
    assert!(status.success());
    assert_eq!(csvs(&first), csvs(&replay));

    let json_only = dir.path().join("json");
    let status = bin()
        .arg("simulate")
        .args(sets)
        .args(["--format", "json", "--out"])
        .arg(&json_only)
        .output()
        .unwrap()
        .status;
    assert!(status.success());
    assert!(csvs(&json_only).is_empty());
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(json_only.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["command"], "simulate");
}

#[test]
fn seeds_change_output_and_workers_do_not() {
    let cfg = small_ew();
    let a = experiments::simulate(&cfg, 1).unwrap().1;
    let b = experiments::simulate(&cfg, 3).unwrap().1;
    let mut other = cfg.clone();
    other.ensemble.master_seed += 1;
    let c = experiments::simulate(&other, 1).unwrap().1;
    let series = |runs: &[experiments::SizeRun]| runs.iter().map(|r| r.series()).collect::<Vec<_>>();
    assert_eq!(series(&a), series(&b));
    assert_ne!(series(&a), series(&c));
}
