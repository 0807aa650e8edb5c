//! The four pipelines behind the subcommands.

use std::fmt::Write as _;

use oscnet::dynamics::evolve;
use oscnet::measures::{collective_sync, moving_mean, pair_measures, window_samples, windowed_correlation, MeasuredSide, PairMeasures, SyncSeries};
use oscnet::spectral::{frozen_mode_report, FrozenTolerances};
use oscnet::tuning::{estimate_sync_times, find_sync_frequency, kappa_sigma_scan, ScanPoint, TuneResult};
use oscnet::{BathKind, ModeDecomposition, Trajectory};
use rayon::prelude::*;

use crate::config::{ScenarioConfig, SideChoice, SweepScale};
use crate::error::CliError;
use crate::scenario::{bath_config, build_network, parameter, prepare, prepare_with, BuiltNetwork, Prepared};

/// Pair-resolved and pair-averaged results on the strided time grid.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub window: f64,
    pub filter_window: f64,
    pub pairs: Vec<(usize, usize)>,
    /// Stored-sample indices where measures were evaluated.
    pub indices: Vec<usize>,
    /// Windowed ⟨q²⟩ correlation per pair, if sync analysis is on.
    pub correlations: Option<Vec<SyncSeries>>,
    pub sync: Option<SyncSeries>,
    /// Per pair, on `indices`.
    pub measures: Option<Vec<PairMeasures>>,
    pub avg_mutual_information: Vec<f64>,
    pub avg_discord: Vec<f64>,
    pub avg_log_negativity: Vec<f64>,
    /// Trailing moving mean of `avg_discord` over `filter_window`.
    pub avg_discord_filtered: Vec<f64>,
}

impl Analysis {
    /// S at stored index `k`, NaN past the last full window.
    pub fn s_at(&self, k: usize) -> f64 {
        self.sync.as_ref().and_then(|s| s.values.get(k).copied()).unwrap_or(f64::NAN)
    }
}

#[derive(Debug, Clone)]
pub struct Simulation {
    pub prepared: Prepared,
    pub trajectory: Trajectory,
    pub analysis: Option<Analysis>,
}

pub fn simulate(cfg: &ScenarioConfig) -> Result<Simulation, CliError> {
    simulate_prepared(cfg, prepare(cfg)?)
}

fn simulate_prepared(cfg: &ScenarioConfig, prepared: Prepared) -> Result<Simulation, CliError> {
    let trajectory = evolve(&prepared.state, &prepared.decomp, &prepared.grid, &prepared.options)?;
    let analysis = match (&cfg.analysis, &prepared.pairs) {
        (Some(a), Some(pairs)) => Some(analyse(a, pairs, &prepared.decomp, &trajectory)?),
        _ => None,
    };
    Ok(Simulation { prepared, trajectory, analysis })
}

fn mean_over_pairs(per_pair: &[&Vec<f64>], len: usize) -> Vec<f64> {
    (0..len).map(|k| per_pair.iter().map(|v| v[k]).sum::<f64>() / per_pair.len() as f64).collect()
}

fn analyse(
    a: &crate::config::AnalysisSection,
    pairs: &[(usize, usize)],
    decomp: &ModeDecomposition,
    traj: &Trajectory,
) -> Result<Analysis, CliError> {
    let window = a.window.unwrap_or(10.0 * std::f64::consts::TAU / decomp.omega()[decomp.sigma()]);
    let filter_window = a.filter_window.unwrap_or(window);
    if !(window > 0.0) || !(filter_window > 0.0) || a.stride == 0 {
        return Err(CliError::Config("analysis window, filter_window and stride must be positive".into()));
    }
    let stride = a.stride;
    let indices: Vec<usize> = (0..traj.len()).step_by(stride).collect();

    let (correlations, sync) = if a.sync {
        let q2: Vec<Vec<f64>> = (0..traj.nodes()).map(|j| traj.q2_series(j)).collect();
        let corr = pairs
            .iter()
            .map(|&(i, j)| windowed_correlation(&traj.times, &q2[i], &q2[j], window))
            .collect::<Result<Vec<_>, _>>()?;
        let mut subset: Vec<usize> = pairs.iter().flat_map(|&(i, j)| [i, j]).collect();
        subset.sort_unstable();
        subset.dedup();
        (Some(corr), Some(collective_sync(traj, window, &subset)?))
    } else {
        (None, None)
    };

    let (measures, avg_i, avg_d, avg_e) = if a.measures {
        let strided = Trajectory {
            times: indices.iter().map(|&k| traj.times[k]).collect(),
            states: indices.iter().map(|&k| traj.states[k].clone()).collect(),
            moments: indices.iter().map(|&k| traj.moments[k].clone()).collect(),
            energy: Vec::new(),
            min_symplectic: Vec::new(),
        };
        let side = match a.side {
            SideChoice::A => MeasuredSide::A,
            SideChoice::B => MeasuredSide::B,
        };
        let m = pairs
            .iter()
            .map(|&(i, j)| pair_measures(&strided, i, j, side))
            .collect::<Result<Vec<_>, _>>()?;
        let len = indices.len();
        let avg_i = mean_over_pairs(&m.iter().map(|p| &p.mutual_information).collect::<Vec<_>>(), len);
        let avg_d = mean_over_pairs(&m.iter().map(|p| &p.discord).collect::<Vec<_>>(), len);
        let avg_e = mean_over_pairs(&m.iter().map(|p| &p.log_negativity).collect::<Vec<_>>(), len);
        (Some(m), avg_i, avg_d, avg_e)
    } else {
        let nan = vec![f64::NAN; indices.len()];
        (None, nan.clone(), nan.clone(), nan)
    };
    let sample_dt = if indices.len() > 1 { traj.times[indices[1]] - traj.times[indices[0]] } else { 1.0 };
    let avg_discord_filtered = moving_mean(&avg_d, window_samples(filter_window, sample_dt));

    Ok(Analysis {
        window,
        filter_window,
        pairs: pairs.to_vec(),
        indices,
        correlations,
        sync,
        measures,
        avg_mutual_information: avg_i,
        avg_discord: avg_d,
        avg_log_negativity: avg_e,
        avg_discord_filtered,
    })
}

fn bath_label(kind: BathKind) -> String {
    match kind {
        BathKind::Separate => "separate".into(),
        BathKind::Common => "common".into(),
        BathKind::Local { node } => format!("local(node {node})"),
    }
}

fn fmt_nodes(nodes: &[usize]) -> String {
    nodes.iter().map(usize::to_string).collect::<Vec<_>>().join(" ")
}

/// Mode table, frozen-mode report and sync-time estimate.
pub fn spectrum_summary(name: &str, built: &BuiltNetwork, decomp: &ModeDecomposition) -> String {
    let mut s = String::new();
    let bath = decomp.bath();
    let _ = writeln!(s, "scenario: {name}");
    let _ = writeln!(s, "nodes: {}", built.network.len());
    let _ = writeln!(
        s,
        "bath: {} gamma={} temperature={} cutoff={}",
        bath_label(bath.kind),
        bath.gamma,
        bath.temperature,
        bath.cutoff
    );
    for note in &built.notes {
        let _ = writeln!(s, "note: {note}");
    }
    let _ = writeln!(s, "\nmode  Omega                   kappa                   Gamma                   D");
    for k in 0..decomp.len() {
        let _ = writeln!(
            s,
            "{k:<5} {:<23.16e} {:<23.16e} {:<23.16e} {:.16e}",
            decomp.omega()[k],
            decomp.kappa()[k],
            decomp.damping()[k],
            decomp.diffusion()[k]
        );
    }
    let _ = writeln!(s, "\nsigma: {}", decomp.sigma());
    match (decomp.eta(), decomp.ratio()) {
        (Some(eta), Some(r)) => {
            let _ = writeln!(s, "eta: {eta}\nratio |kappa_sigma/kappa_eta|: {r:.6e}");
        }
        _ => {
            let _ = writeln!(s, "eta: none");
        }
    }
    let report = frozen_mode_report(decomp, FrozenTolerances::default());
    let _ = writeln!(s, "frozen modes: [{}]", fmt_nodes(&report.frozen));
    for k in &report.frozen {
        let _ = writeln!(s, "  mode {k} participants: [{}]", fmt_nodes(&report.participants[*k]));
    }
    let _ = writeln!(s, "global sync (common bath): {}", report.global_sync_common);
    let _ = writeln!(s, "cluster sync (local bath): {}", report.cluster_sync_local);
    match estimate_sync_times(decomp) {
        Ok(est) => {
            let _ = writeln!(s, "t_sync estimate: {:.6e}", est.t_sync);
            if !est.decoupled.is_empty() {
                let _ = writeln!(s, "nodes decoupled from sigma: [{}]", fmt_nodes(&est.decoupled));
            }
        }
        Err(e) => {
            let _ = writeln!(s, "t_sync estimate: unavailable ({e})");
        }
    }
    s
}

pub fn simulation_summary(cfg: &ScenarioConfig, sim: &Simulation) -> String {
    let name = cfg.name.as_deref().unwrap_or("unnamed");
    let mut s = spectrum_summary(name, &sim.prepared.built, &sim.prepared.decomp);
    let traj = &sim.trajectory;
    let min_nu = traj.min_symplectic.iter().copied().fold(f64::INFINITY, f64::min);
    let _ = writeln!(s, "\nsamples: {} (t = {} .. {})", traj.len(), traj.times[0], traj.times[traj.len() - 1]);
    let _ = writeln!(s, "min symplectic eigenvalue: {min_nu:.12e}");
    if let Some(a) = &sim.analysis {
        let _ = writeln!(s, "window: {:.12e}", a.window);
        let _ = writeln!(s, "filter window: {:.12e}", a.filter_window);
        let _ = writeln!(s, "pairs: {}", a.pairs.len());
        if let Some(sync) = &a.sync {
            if !sync.degenerate.is_empty() {
                let _ = writeln!(s, "windows with a constant series: {}", sync.degenerate.len());
            }
            if let Some(k) = sync.values.iter().position(|v| *v > 0.9) {
                let _ = writeln!(s, "first S > 0.9 at t = {:.6e}", sync.times[k]);
            }
        }
    }
    s
}

pub fn spectrum(cfg: &ScenarioConfig) -> Result<(BuiltNetwork, ModeDecomposition), CliError> {
    let bath = bath_config(&cfg.bath)?;
    let built = build_network(&cfg.network, &bath)?;
    let decomp = ModeDecomposition::new(&built.network, &bath)?;
    Ok((built, decomp))
}

#[derive(Debug, Clone)]
pub struct Tuning {
    pub built: BuiltNetwork,
    pub scan: Vec<ScanPoint>,
    pub result: TuneResult,
}

pub fn tune(cfg: &ScenarioConfig) -> Result<Tuning, CliError> {
    let t = cfg.tuning.as_ref().ok_or_else(|| CliError::Config("`tune` needs a [tuning] table".into()))?;
    if t.scan_points < 2 {
        return Err(CliError::Config("scan_points must be at least 2".into()));
    }
    let bath = bath_config(&cfg.bath)?;
    let built = build_network(&cfg.network, &bath)?;
    let p = parameter(t.parameter);
    let (lo, hi) = t.bracket;
    let grid: Vec<f64> = (0..t.scan_points).map(|k| lo + (hi - lo) * k as f64 / (t.scan_points - 1) as f64).collect();
    let scan = kappa_sigma_scan(&built.network, p, &grid, &bath)?;
    let result = find_sync_frequency(&built.network, p, &bath, t.bracket, t.tol)?;
    Ok(Tuning { built, scan, result })
}

pub fn tuning_summary(cfg: &ScenarioConfig, t: &Tuning) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "scenario: {}", cfg.name.as_deref().unwrap_or("unnamed"));
    for note in &t.built.notes {
        let _ = writeln!(s, "note: {note}");
    }
    let r = &t.result;
    let _ = writeln!(s, "parameter: {}", r.parameter.name());
    let _ = writeln!(s, "value: {:.16e}", r.value);
    let _ = writeln!(s, "residual |kappa_sigma|: {:.6e}", r.residual);
    let _ = writeln!(s, "bracket: [{:.16e}, {:.16e}]", r.bracket.0, r.bracket.1);
    let _ = writeln!(s, "frozen modes: [{}]", fmt_nodes(&r.report.frozen));
    for k in &r.report.frozen {
        let _ = writeln!(s, "  mode {k} participants: [{}]", fmt_nodes(&r.report.participants[*k]));
    }
    let _ = writeln!(s, "global sync (common bath): {}", r.report.global_sync_common);
    s
}

/// One sweep point: the value actually applied and its outcome.
#[derive(Debug)]
pub struct SweepPoint {
    pub value: f64,
    pub outcome: Result<Simulation, CliError>,
}

/// Runs the scenario once per grid value. Points are computed in parallel on
/// the current rayon pool and returned in grid order, without full states.
pub fn sweep(cfg: &ScenarioConfig) -> Result<Vec<SweepPoint>, CliError> {
    let sw = cfg.sweep.as_ref().ok_or_else(|| CliError::Config("`sweep` needs a [sweep] table".into()))?;
    let grid = sw.grid();
    if grid.is_empty() {
        return Err(CliError::Config("sweep grid is empty".into()));
    }
    if cfg.analysis.is_none() {
        return Err(CliError::Config("`sweep` needs an [analysis] table".into()));
    }
    let bath = bath_config(&cfg.bath)?;
    let built = build_network(&cfg.network, &bath)?;
    let p = parameter(sw.parameter);
    let base = p.current(&built.network)?;
    Ok(grid
        .par_iter()
        .map(|&g| {
            let value = match sw.scale {
                SweepScale::Absolute => g,
                SweepScale::Relative => g * base,
            };
            let outcome = p.apply(&built.network, value).map_err(CliError::from).and_then(|net| {
                let point = BuiltNetwork { network: net, notes: built.notes.clone() };
                let mut sim = simulate_prepared(cfg, prepare_with(cfg, point, bath)?)?;
                sim.trajectory.states = Vec::new();
                Ok(sim)
            });
            SweepPoint { value, outcome }
        })
        .collect())
}
