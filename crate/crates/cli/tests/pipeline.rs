use std::process::Command as Process;

use oscnet_cli::app::{execute, load_config, Command};
use oscnet_cli::config::{Modification, ParameterRef};
use oscnet_cli::output::num;
use oscnet_cli::{run, CliError, ScenarioConfig};

fn fig2_cb_short() -> ScenarioConfig {
    let mut cfg = load_config("preset:fig2_cb").unwrap();
    cfg.time.t_end = 60.0;
    cfg.analysis.as_mut().unwrap().window = Some(10.0);
    cfg
}

/// Eigenpairs of the symmetric tridiagonal 3×3 chain matrix: eigenvalues from
/// the trigonometric cubic formula, vectors by forward substitution.
fn chain_modes(w: [f64; 3], l: f64) -> Vec<(f64, [f64; 3])> {
    let (a, b, c) = (w[0] * w[0], w[1] * w[1], w[2] * w[2]);
    // det(X − H) = X³ + p2 X² + p1 X + p0
    let p2 = -(a + b + c);
    let p1 = a * b + b * c + a * c - 2.0 * l * l;
    let p0 = -(a * b * c - l * l * (a + c));
    let shift = -p2 / 3.0;
    let p = p1 - p2 * p2 / 3.0;
    let q = 2.0 * p2.powi(3) / 27.0 - p2 * p1 / 3.0 + p0;
    let m = 2.0 * (-p / 3.0).sqrt();
    let theta = (3.0 * q / (p * m)).acos() / 3.0;
    let mut roots: Vec<f64> = (0..3)
        .map(|k| shift + m * (theta - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos())
        .collect();
    roots.sort_by(f64::total_cmp);
    roots
        .into_iter()
        .map(|x| {
            let v1 = (x - a) / l;
            let v2 = l * v1 / (x - c);
            let mut v = [1.0, v1, v2];
            let norm = v.iter().map(|e| e * e).sum::<f64>().sqrt();
            let big = v.iter().copied().fold(0.0f64, |m, e| if e.abs() > m.abs() { e } else { m });
            for e in &mut v {
                *e *= big.signum() / norm;
            }
            (x.sqrt(), v)
        })
        .collect()
}

#[test]
fn spectrum_of_the_chain_matches_the_cubic_oracle() {
    let cfg = load_config("preset:fig2_cb").unwrap();
    let dir = tempfile::tempdir().unwrap();
    execute(Command::Spectrum, &cfg, dir.path()).unwrap();
    let modes = std::fs::read_to_string(dir.path().join("modes.csv")).unwrap();
    let rows: Vec<Vec<f64>> = modes.lines().skip(1).map(|l| l.split(',').map(|c| c.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 3);
    let oracle = chain_modes([1.2, 1.0, 1.8], 0.4);
    for (row, (omega, v)) in rows.iter().zip(&oracle) {
        let kappa: f64 = v.iter().sum();
        assert!((row[1] - omega).abs() < 1e-12, "{} vs {omega}", row[1]);
        assert!((row[2] - kappa).abs() < 1e-10, "{} vs {kappa}", row[2]);
        assert!((row[3] - 0.07 * kappa * kappa).abs() < 1e-12);
        let coth = 1.0 / (omega / 20.0).tanh();
        assert!((row[4] - 0.07 * kappa * kappa * omega * coth).abs() < 1e-10);
    }
    let transform = std::fs::read_to_string(dir.path().join("transform.csv")).unwrap();
    for (j, line) in transform.lines().skip(1).enumerate() {
        let cells: Vec<f64> = line.split(',').skip(1).map(|c| c.parse().unwrap()).collect();
        for (k, (_, v)) in oracle.iter().enumerate() {
            assert!((cells[k] - v[j]).abs() < 1e-10);
        }
    }
}

#[test]
fn two_node_tuning_lands_on_the_other_frequency() {
    let text = r#"
name = "pair"
[network]
source = "inline"
omega = [1.1, 0.9]
edges = [[0, 1, -0.2]]
[bath]
kind = "common"
gamma = 0.05
temperature = 1.0
cutoff = 50.0
[time]
t_end = 1.0
step = 0.01
[tuning]
parameter = { node = 1 }
bracket = [0.8, 1.3]
scan_points = 11
"#;
    let cfg = ScenarioConfig::from_toml(text).unwrap();
    let t = run::tune(&cfg).unwrap();
    assert!((t.result.value - 1.1).abs() < 1e-10, "{}", t.result.value);
    assert!(t.result.residual < 1e-10);
    assert_eq!(t.scan.len(), 11);
    let dir = tempfile::tempdir().unwrap();
    execute(Command::Tune, &cfg, dir.path()).unwrap();
    let summary = std::fs::read_to_string(dir.path().join("tune_summary.txt")).unwrap();
    assert!(summary.contains("participants: [0 1]"));
}

#[test]
fn reruns_are_byte_identical() {
    let cfg = fig2_cb_short();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let names = execute(Command::Simulate, &cfg, a.path()).unwrap();
    execute(Command::Simulate, &cfg, b.path()).unwrap();
    for name in names {
        let x = std::fs::read(a.path().join(name)).unwrap();
        assert_eq!(x, std::fs::read(b.path().join(name)).unwrap(), "{name}");
    }
}

#[test]
fn empty_analysis_writes_only_the_trajectory() {
    let mut cfg = fig2_cb_short();
    cfg.analysis = None;
    let dir = tempfile::tempdir().unwrap();
    let names = execute(Command::Simulate, &cfg, dir.path()).unwrap();
    assert_eq!(names, vec!["trajectory.csv", "summary.txt"]);
    let traj = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    let header = traj.lines().next().unwrap();
    assert_eq!(header.split(',').count(), 1 + 3 * 5 + 1);
    assert!(header.starts_with("t,mean_q_0,mean_p_0,var_q_0,var_p_0,cov_qp_0,mean_q_1"));
    assert_eq!(traj.lines().count(), 1 + 1201);
}

fn small_sweep() -> ScenarioConfig {
    let mut cfg = load_config("preset:fig3_sweep").unwrap();
    cfg.time.t_end = 150.0;
    let a = cfg.analysis.as_mut().unwrap();
    a.window = Some(20.0);
    a.stride = 5;
    a.pairs = oscnet_cli::config::PairSelection::List(vec![(0, 6), (2, 6), (3, 5)]);
    cfg.sweep.as_mut().unwrap().linspace = Some((0.95, 1.05, 3));
    cfg
}

fn map_rows(points: &[run::SweepPoint]) -> Vec<String> {
    oscnet_cli::output::sweep_map_csv(points).lines().skip(1).map(str::to_string).collect()
}

#[test]
fn sweep_points_equal_standalone_runs() {
    let cfg = small_sweep();
    let points = run::sweep(&cfg).unwrap();
    assert_eq!(points.len(), 3);
    let rows = map_rows(&points);
    for p in &points {
        let mut single = cfg.clone();
        single.sweep = None;
        single.network.modifications.push(Modification::SetFrequency { node: 6, value: p.value });
        let sim = run::simulate(&single).unwrap();
        let a = sim.analysis.as_ref().unwrap();
        let expected: Vec<String> = a
            .indices
            .iter()
            .enumerate()
            .map(|(s, &k)| {
                [p.value, sim.trajectory.times[k], a.s_at(k), a.avg_discord_filtered[s]].map(num).join(",")
            })
            .collect();
        let prefix = format!("{},", num(p.value));
        let got: Vec<&String> = rows.iter().filter(|r| r.starts_with(&prefix)).collect();
        assert_eq!(got.len(), expected.len());
        for (g, e) in got.iter().zip(&expected) {
            assert_eq!(*g, e);
        }
    }
}

#[test]
fn single_point_sweep_reproduces_simulate() {
    let mut cfg = small_sweep();
    let sw = cfg.sweep.as_mut().unwrap();
    sw.linspace = None;
    sw.values = vec![1.0];
    let points = run::sweep(&cfg).unwrap();
    let sim = run::simulate(&cfg).unwrap();
    let swept = points[0].outcome.as_ref().unwrap();
    assert_eq!(swept.trajectory.moments, sim.trajectory.moments);
    let (x, y) = (swept.analysis.as_ref().unwrap(), sim.analysis.as_ref().unwrap());
    assert_eq!(x.avg_discord, y.avg_discord);
    assert_eq!(x.sync.as_ref().unwrap().values, y.sync.as_ref().unwrap().values);
}

#[test]
fn sweep_records_failures_and_continues() {
    let mut cfg = small_sweep();
    let sw = cfg.sweep.as_mut().unwrap();
    sw.linspace = None;
    sw.scale = oscnet_cli::config::SweepScale::Absolute;
    // a negative frequency is rejected; the other point still runs
    sw.values = vec![-1.0, 0.95];
    let points = run::sweep(&cfg).unwrap();
    assert!(matches!(points[0].outcome, Err(CliError::Config(_))));
    assert!(points[1].outcome.is_ok());
    let failures = oscnet_cli::output::sweep_failures_csv(&points);
    assert_eq!(failures.lines().count(), 2);
}

#[test]
fn invalid_scenarios_are_rejected_before_evolution() {
    let mut cfg = fig2_cb_short();
    cfg.analysis.as_mut().unwrap().pairs = oscnet_cli::config::PairSelection::List(vec![(0, 7)]);
    assert!(matches!(run::simulate(&cfg), Err(CliError::Config(_))));

    let mut cfg = fig2_cb_short();
    cfg.time.integrator = oscnet_cli::config::IntegratorChoice::Rk4;
    cfg.time.step = 0.5;
    assert!(matches!(run::simulate(&cfg), Err(CliError::Config(_))));

    let mut cfg = fig2_cb_short();
    cfg.initial.nodes[0].node = 3;
    assert!(matches!(run::simulate(&cfg), Err(CliError::Config(_))));
}

#[test]
fn tuning_under_separate_baths_is_a_config_error() {
    let mut cfg = load_config("preset:fig2_sb").unwrap();
    cfg.tuning = Some(oscnet_cli::config::TuningSection {
        parameter: ParameterRef::Node(1),
        bracket: (0.8, 2.6),
        tol: 1e-12,
        scan_points: 5,
    });
    assert!(matches!(run::tune(&cfg), Err(CliError::Config(_))));
}

fn oscnet() -> Process {
    Process::new(env!("CARGO_BIN_EXE_oscnet"))
}

#[test]
fn binary_exit_codes_and_error_line() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let ok = oscnet()
        .args(["spectrum", "--config", "preset:fig2_cb", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(ok.status.code(), Some(0));
    assert!(out.join("modes.csv").exists());

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "name = \"x\"\n[network]\nsource = \"inline\"\nomega = [1.0, -1.0]\n").unwrap();
    let res = oscnet().args(["simulate", "--config"]).arg(&bad).output().unwrap();
    assert_eq!(res.status.code(), Some(2));
    let line = String::from_utf8(res.stderr).unwrap();
    assert!(line.starts_with("error kind=config code=2 message=\""), "{line}");

    // a bracket with no sign change is a numeric failure
    let no_zero = dir.path().join("no_zero.toml");
    let text = load_config("preset:fig2_cb").unwrap().to_toml().unwrap()
        + "\n[tuning]\nparameter = { node = 1 }\nbracket = [0.5, 0.6]\n";
    std::fs::write(&no_zero, text).unwrap();
    let res = oscnet().args(["tune", "--config"]).arg(&no_zero).arg("--out").arg(&out).output().unwrap();
    assert_eq!(res.status.code(), Some(3));
    assert!(String::from_utf8(res.stderr).unwrap().starts_with("error kind=numeric code=3"));
}

#[test]
fn seed_flag_overrides_random_source() {
    let dir = tempfile::tempdir().unwrap();
    let run_with = |seed: &str, sub: &str| {
        let out = dir.path().join(sub);
        let res = oscnet()
            .args(["spectrum", "--config", "preset:fig5_entangle", "--workers", "1", "--seed", seed, "--out"])
            .arg(&out)
            .output()
            .unwrap();
        assert_eq!(res.status.code(), Some(0));
        std::fs::read_to_string(out.join("modes.csv")).unwrap()
    };
    assert_eq!(run_with("3", "a"), run_with("3", "b"));
    assert_ne!(run_with("3", "a"), run_with("4", "c"));
}
