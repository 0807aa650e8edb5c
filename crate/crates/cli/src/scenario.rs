//! Turns a [`ScenarioConfig`] into core-library objects.

use oscnet::dynamics::{initial_state, rk4_step_bound, EvolveOptions, Integrator};
use oscnet::network::{attach_pair, parse_network, random_network, RandomNetworkParams};
use oscnet::tuning::{balance_pair_couplings, embed_motif, find_sync_frequency, TuneParameter};
use oscnet::{BathConfig, BathKind, GaussianState, ModeDecomposition, NetworkSpec, NodePreparation, RngSeed};

use crate::config::{
    AllPairs, AnalysisSection, BathKindConfig, BathSection, InitialSection, IntegratorChoice, Modification,
    NetworkConfig, NetworkSource, PairSelection, ParameterRef, ScenarioConfig, TimeSection,
};
use crate::error::CliError;

pub fn parameter(p: ParameterRef) -> TuneParameter {
    match p {
        ParameterRef::Node(v) => TuneParameter::NodeFrequency(v),
        ParameterRef::Coupling(i, j) => TuneParameter::Coupling(i, j),
    }
}

pub fn bath_config(b: &BathSection) -> Result<BathConfig, CliError> {
    let kind = match (b.kind, b.node) {
        (BathKindConfig::Separate, None) => BathKind::Separate,
        (BathKindConfig::Common, None) => BathKind::Common,
        (BathKindConfig::Local, Some(node)) => BathKind::Local { node },
        (BathKindConfig::Local, None) => return Err(CliError::Config("local bath needs `node`".into())),
        (_, Some(_)) => return Err(CliError::Config("`node` only applies to a local bath".into())),
    };
    Ok(BathConfig::new(kind, b.gamma, b.temperature, b.cutoff)?)
}

/// Network after all modifications, with one line per modification that
/// produced a derived value.
#[derive(Debug, Clone)]
pub struct BuiltNetwork {
    pub network: NetworkSpec,
    pub notes: Vec<String>,
}

fn base_network(source: &NetworkSource) -> Result<NetworkSpec, CliError> {
    Ok(match source {
        NetworkSource::Inline { omega, edges } => NetworkSpec::from_edges(omega.clone(), edges)?,
        NetworkSource::Chain { omega, links } => oscnet::network::chain(omega.clone(), links)?,
        NetworkSource::File { path } => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("network file {}: {e}", path.display())))?;
            parse_network(&text)?
        }
        NetworkSource::Random { n, p, freq_low, freq_high, coupling_mean, coupling_sd, seed, max_retries } => {
            let params = RandomNetworkParams {
                n: *n,
                p: *p,
                freq_low: *freq_low,
                freq_high: *freq_high,
                coupling_mean: *coupling_mean,
                coupling_sd: *coupling_sd,
                max_retries: *max_retries,
            };
            random_network(&params, RngSeed(*seed))?
        }
    })
}

fn isolated_motif(net: &NetworkSpec, a: usize, b: usize, c: usize) -> Result<NetworkSpec, CliError> {
    for v in [a, b, c] {
        if v >= net.len() {
            return Err(CliError::Config(format!("motif node {v} out of range for {} nodes", net.len())));
        }
    }
    let w = net.omega();
    Ok(NetworkSpec::from_edges(vec![w[a], w[b], w[c]], &[(0, 2, net.lambda(a, c)), (1, 2, net.lambda(b, c))])?)
}

fn require_common(bath: &BathConfig, op: &str) -> Result<(), CliError> {
    if bath.kind != BathKind::Common {
        return Err(CliError::Config(format!("`{op}` needs a common bath")));
    }
    Ok(())
}

/// Frequency of the isolated motif's least-coupled mode under a common bath.
pub fn motif_frozen_frequency(net: &NetworkSpec, a: usize, b: usize, c: usize, bath: &BathConfig) -> Result<f64, CliError> {
    let d = ModeDecomposition::new(&isolated_motif(net, a, b, c)?, bath)?;
    Ok(d.omega()[d.sigma()])
}

pub fn build_network(cfg: &NetworkConfig, bath: &BathConfig) -> Result<BuiltNetwork, CliError> {
    let mut net = base_network(&cfg.source)?;
    let mut notes = Vec::new();
    for m in &cfg.modifications {
        net = match m {
            Modification::SetFrequency { node, value } => net.with_frequency(*node, *value)?,
            Modification::SetCoupling { i, j, value } => net.with_coupling(*i, *j, *value)?,
            Modification::Scale { parameter: p, factor } => {
                let tp = parameter(*p);
                let v = tp.current(&net)? * factor;
                notes.push(format!("{} scaled by {factor} -> {v:.16e}", tp.name()));
                tp.apply(&net, v)?
            }
            Modification::Shift { parameter: p, delta } => {
                let tp = parameter(*p);
                let v = tp.current(&net)? + delta;
                tp.apply(&net, v)?
            }
            Modification::AttachPair { omega_a, omega_b, links_a, links_b } => {
                notes.push(format!("pair attached as nodes {} and {}", net.len(), net.len() + 1));
                attach_pair(&net, *omega_a, *omega_b, links_a, links_b)?
            }
            Modification::InstallMotif { a, b, c, omega_c, lambda_ac, lambda_bc } => {
                if a == b || a == c || b == c {
                    return Err(CliError::Config("motif nodes must be distinct".into()));
                }
                let mut coupling = net.coupling().clone();
                for (i, j, l) in [(*a, *b, 0.0), (*a, *c, *lambda_ac), (*b, *c, *lambda_bc)] {
                    if i >= net.len() || j >= net.len() {
                        return Err(CliError::Config(format!("motif node out of range for {} nodes", net.len())));
                    }
                    coupling[(i, j)] = l;
                    coupling[(j, i)] = l;
                }
                let mut omega = net.omega().to_vec();
                omega[*c] = *omega_c;
                NetworkSpec::new(omega, coupling)?
            }
            Modification::Tune { parameter: p, bracket, tol } => {
                let res = find_sync_frequency(&net, parameter(*p), bath, *bracket, *tol)?;
                notes.push(format!("tuned {} = {:.16e} (|kappa_sigma| = {:.3e})", res.parameter.name(), res.value, res.residual));
                res.network
            }
            Modification::TuneMotif { a, b, c, bracket, tol } => {
                require_common(bath, "tune_motif")?;
                let motif = isolated_motif(&net, *a, *b, *c)?;
                let res = find_sync_frequency(&motif, TuneParameter::NodeFrequency(1), bath, *bracket, *tol)?;
                notes.push(format!("motif ({a}, {c}, {b}): tuned omega_{b} = {:.16e} (|kappa_sigma| = {:.3e})", res.value, res.residual));
                net.with_frequency(*b, res.value)?
            }
            Modification::EmbedMotif { a, b, c } => {
                require_common(bath, "embed_motif")?;
                let omega_sigma = motif_frozen_frequency(&net, *a, *b, *c, bath)?;
                notes.push(format!("motif ({a}, {c}, {b}) embedded at Omega_sigma = {omega_sigma:.16e}"));
                embed_motif(&net, oscnet::tuning::Motif { a: *a, b: *b, c: *c }, omega_sigma)?
            }
            Modification::BalancePair { a, b } => balance_pair_couplings(&net, *a, *b, None)?.network,
        };
    }
    Ok(BuiltNetwork { network: net, notes })
}

pub fn preparations(init: &InitialSection, n: usize) -> Result<Vec<NodePreparation>, CliError> {
    let to_prep = |p: &crate::config::Preparation| NodePreparation {
        mean_q: p.mean_q,
        mean_p: p.mean_p,
        squeeze_r: p.squeeze_r,
        squeeze_angle: p.squeeze_angle,
        thermal_n: p.thermal_n,
    };
    let mut preps = vec![to_prep(&init.default); n];
    for o in &init.nodes {
        if o.node >= n {
            return Err(CliError::Config(format!("initial state for node {} but the network has {n} nodes", o.node)));
        }
        preps[o.node] = to_prep(&o.prep);
    }
    Ok(preps)
}

pub fn initial(init: &InitialSection, n: usize) -> Result<GaussianState, CliError> {
    Ok(initial_state(&preparations(init, n)?)?)
}

/// Stored sample times `t = k·step·decimation` within `[t_start, t_end]`.
pub fn time_grid(time: &TimeSection) -> Result<Vec<f64>, CliError> {
    if !(time.step > 0.0) || !(time.t_end > 0.0) || time.decimation == 0 || !(time.t_start >= 0.0) || time.t_start > time.t_end {
        return Err(CliError::Config("time block needs step > 0, t_end > 0, decimation ≥ 1 and 0 ≤ t_start ≤ t_end".into()));
    }
    let stride = time.step * time.decimation as f64;
    let count = (time.t_end / stride * (1.0 + 1e-12)).floor() as usize;
    let first = (time.t_start / stride * (1.0 - 1e-12)).ceil() as usize;
    Ok((first..=count).map(|k| k as f64 * stride).collect())
}

pub fn evolve_options(time: &TimeSection, decomp: &ModeDecomposition) -> Result<EvolveOptions, CliError> {
    let integrator = match time.integrator {
        IntegratorChoice::Exact => Integrator::Exact,
        IntegratorChoice::Rk4 => {
            let bound = rk4_step_bound(decomp);
            if time.step > bound {
                return Err(CliError::Config(format!("RK4 step {} exceeds the stability bound {bound:.6}", time.step)));
            }
            Integrator::Rk4 { max_step: Some(time.step) }
        }
    };
    Ok(EvolveOptions { integrator, ..Default::default() })
}

pub fn pair_list(analysis: &AnalysisSection, n: usize) -> Result<Vec<(usize, usize)>, CliError> {
    let pairs = match &analysis.pairs {
        PairSelection::All(AllPairs::All) => oscnet::measures::all_pairs(n),
        PairSelection::List(l) => l.clone(),
    };
    for &(i, j) in &pairs {
        if i >= n || j >= n || i == j {
            return Err(CliError::Config(format!("invalid pair ({i}, {j}) for {n} nodes")));
        }
    }
    if pairs.is_empty() {
        return Err(CliError::Config("analysis needs at least one pair".into()));
    }
    Ok(pairs)
}

/// Everything a run needs, validated before any time evolution starts.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub built: BuiltNetwork,
    pub bath: BathConfig,
    pub decomp: ModeDecomposition,
    pub state: GaussianState,
    pub grid: Vec<f64>,
    pub options: EvolveOptions,
    pub pairs: Option<Vec<(usize, usize)>>,
}

pub fn prepare(cfg: &ScenarioConfig) -> Result<Prepared, CliError> {
    let bath = bath_config(&cfg.bath)?;
    let built = build_network(&cfg.network, &bath)?;
    prepare_with(cfg, built, bath)
}

/// Like [`prepare`] with an already built network.
pub fn prepare_with(cfg: &ScenarioConfig, built: BuiltNetwork, bath: BathConfig) -> Result<Prepared, CliError> {
    let n = built.network.len();
    let state = initial(&cfg.initial, n)?;
    let grid = time_grid(&cfg.time)?;
    let pairs = cfg.analysis.as_ref().map(|a| pair_list(a, n)).transpose()?;
    let decomp = ModeDecomposition::new(&built.network, &bath)?;
    let mut options = evolve_options(&cfg.time, &decomp)?;
    options.keep_states = cfg.analysis.as_ref().is_some_and(|a| a.measures);
    Ok(Prepared { built, bath, decomp, state, grid, options, pairs })
}
