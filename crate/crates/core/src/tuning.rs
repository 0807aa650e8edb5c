//! Engineering frozen modes: locating the synchronizing parameter value,
//! estimating synchronization times, and checking motif and pair conditions.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use thiserror::Error;

use crate::network::{NetworkError, NetworkSpec};
use crate::spectral::{
    frozen_mode_report, BathConfig, BathKind, FrozenModeReport, FrozenTolerances, ModeDecomposition, SpectralError,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TuningError {
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("tuning has no effect under separate baths")]
    SeparateBathNotTunable,
    #[error("no sign change of a mode coupling inside [{lo}, {hi}]")]
    NoZeroInBracket { lo: f64, hi: f64 },
    #[error("mode tracking lost near {at}: eigenvectors too close to degenerate; split the bracket")]
    ModeTrackingLost { at: f64 },
    #[error("bisection stalled at {value} with residual {residual:e}")]
    ToleranceNotReached { value: f64, residual: f64 },
    #[error("no strictly least-damped mode (rates {0:e} and {1:e} tie)")]
    NoDominantMode(f64, f64),
    #[error("mode frequency coincides with a motif node frequency (pole)")]
    PoleAtOmega,
    #[error("paired nodes have different frequencies {0} and {1}")]
    FrequencyMismatch(f64, f64),
    #[error("paired nodes must not be linked directly")]
    DirectLinkForbidden,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Network parameter varied by a scan or bisection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TuneParameter {
    NodeFrequency(usize),
    Coupling(usize, usize),
}

impl TuneParameter {
    pub fn apply(&self, net: &NetworkSpec, value: f64) -> Result<NetworkSpec, NetworkError> {
        match *self {
            TuneParameter::NodeFrequency(v) => net.with_frequency(v, value),
            TuneParameter::Coupling(i, j) => net.with_coupling(i, j, value),
        }
    }

    pub fn current(&self, net: &NetworkSpec) -> Result<f64, NetworkError> {
        match *self {
            TuneParameter::NodeFrequency(v) => {
                net.check_node(v)?;
                Ok(net.omega()[v])
            }
            TuneParameter::Coupling(i, j) => {
                net.check_node(i)?;
                net.check_node(j)?;
                Ok(net.lambda(i, j))
            }
        }
    }

    pub fn name(&self) -> String {
        match *self {
            TuneParameter::NodeFrequency(v) => format!("omega_{v}"),
            TuneParameter::Coupling(i, j) => format!("lambda_{i}_{j}"),
        }
    }
}

fn require_tunable(bath: &BathConfig) -> Result<(), TuningError> {
    if matches!(bath.kind, BathKind::Separate) {
        Err(TuningError::SeparateBathNotTunable)
    } else {
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanPoint {
    pub value: f64,
    /// `None` when the network is unstable at this value.
    pub kappa_sigma: Option<f64>,
    pub sigma: Option<usize>,
    /// The least-coupled mode changed identity relative to the previous stable point.
    pub discontinuity: bool,
}

/// Smallest |κ| across `grid` values of `param`.
pub fn kappa_sigma_scan(
    net: &NetworkSpec,
    param: TuneParameter,
    grid: &[f64],
    bath: &BathConfig,
) -> Result<Vec<ScanPoint>, TuningError> {
    require_tunable(bath)?;
    param.current(net)?;
    let evaluated: Vec<Option<(f64, usize, DVector<f64>)>> = grid
        .par_iter()
        .map(|&x| -> Result<_, TuningError> {
            let candidate = match param.apply(net, x) {
                Ok(c) => c,
                Err(NetworkError::NonPositiveDefinite { .. }) | Err(NetworkError::NonPositiveFrequency { .. }) => {
                    return Ok(None)
                }
                Err(e) => return Err(e.into()),
            };
            let d = ModeDecomposition::new(&candidate, bath)?;
            let s = d.sigma();
            Ok(Some((d.kappa()[s].abs(), s, d.transform().column(s).into_owned())))
        })
        .collect::<Result<_, _>>()?;
    let mut out = Vec::with_capacity(grid.len());
    let mut prev: Option<&DVector<f64>> = None;
    for (x, e) in grid.iter().zip(&evaluated) {
        match e {
            None => out.push(ScanPoint { value: *x, kappa_sigma: None, sigma: None, discontinuity: false }),
            Some((k, s, vec)) => {
                let discontinuity = prev.is_some_and(|p| p.dot(vec).abs() < 0.5);
                prev = Some(vec);
                out.push(ScanPoint { value: *x, kappa_sigma: Some(*k), sigma: Some(*s), discontinuity });
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneResult {
    pub parameter: TuneParameter,
    pub value: f64,
    /// |κ_σ| at `value`.
    pub residual: f64,
    pub report: FrozenModeReport,
    pub bracket: (f64, f64),
    pub network: NetworkSpec,
}

/// Eigen data at one parameter value.
struct Sample {
    x: f64,
    transform: DMatrix<f64>,
    kappa: Vec<f64>,
}

fn sample(net: &NetworkSpec, param: TuneParameter, bath: &BathConfig, x: f64) -> Result<Sample, TuningError> {
    let d = ModeDecomposition::new(&param.apply(net, x)?, bath)?;
    Ok(Sample { x, transform: d.transform().clone(), kappa: d.kappa().to_vec() })
}

/// Overlap below which consecutive eigenvectors are not trusted to match.
const MATCH_OVERLAP: f64 = 0.9;

/// Matches each mode at `a` to a mode at `b` by maximal |overlap|; returns the
/// index map and orientation signs, or `None` if the matching is ambiguous.
fn match_modes(a: &Sample, b: &Sample) -> Option<Vec<(usize, f64)>> {
    let o = a.transform.transpose() * &b.transform;
    let n = o.nrows();
    let mut used = vec![false; n];
    let mut map = Vec::with_capacity(n);
    for i in 0..n {
        let (j, v) = (0..n).map(|j| (j, o[(i, j)])).max_by(|x, y| x.1.abs().total_cmp(&y.1.abs()))?;
        if v.abs() < MATCH_OVERLAP || used[j] {
            return None;
        }
        used[j] = true;
        map.push((j, v.signum()));
    }
    Some(map)
}

/// Maps every mode of `from` to its continuation at `to` (index, orientation),
/// subdividing the interval until each hop is unambiguous.
fn track_all(
    net: &NetworkSpec,
    param: TuneParameter,
    bath: &BathConfig,
    from: &Sample,
    to: &Sample,
    depth: usize,
) -> Result<Vec<(usize, f64)>, TuningError> {
    if let Some(map) = match_modes(from, to) {
        return Ok(map);
    }
    if depth == 0 {
        return Err(TuningError::ModeTrackingLost { at: 0.5 * (from.x + to.x) });
    }
    let mid = sample(net, param, bath, 0.5 * (from.x + to.x))?;
    let first = track_all(net, param, bath, from, &mid, depth - 1)?;
    let second = track_all(net, param, bath, &mid, to, depth - 1)?;
    Ok(first.iter().map(|&(m, s)| (second[m].0, s * second[m].1)).collect())
}

/// Number of coarse steps used to follow all modes across the bracket.
const COARSE_STEPS: usize = 64;
const MAX_REFINE: usize = 12;

/// Finds the parameter value at which a tracked mode's signed κ crosses zero.
///
/// All modes are followed across the bracket by eigenvector-overlap
/// continuation; the first sign change (in increasing parameter order) is
/// then bisected while the crossing mode is tracked.
pub fn find_sync_frequency(
    net: &NetworkSpec,
    param: TuneParameter,
    bath: &BathConfig,
    bracket: (f64, f64),
    tol: f64,
) -> Result<TuneResult, TuningError> {
    require_tunable(bath)?;
    let (lo, hi) = bracket;
    if !(lo < hi) || !(tol > 0.0) {
        return Err(TuningError::InvalidArgument(format!("bracket ({lo}, {hi}) with tol {tol}")));
    }
    let grid: Vec<f64> = (0..=COARSE_STEPS).map(|k| lo + (hi - lo) * k as f64 / COARSE_STEPS as f64).collect();
    let samples: Vec<Sample> =
        grid.par_iter().map(|&x| sample(net, param, bath, x)).collect::<Result<_, _>>()?;
    let n = net.len();
    // ident[t] = (index, orientation) of tracked mode t at the current sample
    let mut ident: Vec<(usize, f64)> = (0..n).map(|m| (m, 1.0)).collect();
    let mut crossing: Option<(usize, usize, f64)> = None;
    'scan: for k in 0..COARSE_STEPS {
        let (a, b) = (&samples[k], &samples[k + 1]);
        let map = track_all(net, param, bath, a, b, MAX_REFINE)?;
        let next: Vec<(usize, f64)> = ident.iter().map(|&(m, s)| (map[m].0, s * map[m].1)).collect();
        for (&(m, s), &(j, sj)) in ident.iter().zip(&next) {
            let (ka, kb) = (s * a.kappa[m], sj * b.kappa[j]);
            if ka.abs() < tol {
                return finish(net, param, bath, a.x, tol, bracket);
            }
            if ka * kb <= 0.0 {
                crossing = Some((k, m, s));
                break 'scan;
            }
        }
        ident = next;
    }
    let (k, mode, sign) = crossing.ok_or(TuningError::NoZeroInBracket { lo, hi })?;
    let mut left = Sample { x: samples[k].x, transform: samples[k].transform.clone(), kappa: samples[k].kappa.clone() };
    let (mut lmode, mut lsign) = (mode, sign);
    let mut right_x = grid[k + 1];
    let k_left = lsign * left.kappa[lmode];
    let mut best = (left.x, k_left.abs());
    loop {
        let mid_x = 0.5 * (left.x + right_x);
        if mid_x <= left.x || mid_x >= right_x {
            break;
        }
        let mid = sample(net, param, bath, mid_x)?;
        let map = track_all(net, param, bath, &left, &mid, MAX_REFINE)?;
        let (mm, ms) = (map[lmode].0, lsign * map[lmode].1);
        let km = ms * mid.kappa[mm];
        if km.abs() < best.1 {
            best = (mid_x, km.abs());
        }
        if km.abs() < tol {
            return finish(net, param, bath, mid_x, tol, bracket);
        }
        if km * k_left > 0.0 {
            left = mid;
            lmode = mm;
            lsign = ms;
        } else {
            right_x = mid_x;
        }
    }
    if best.1 < tol {
        return finish(net, param, bath, best.0, tol, bracket);
    }
    Err(TuningError::ToleranceNotReached { value: best.0, residual: best.1 })
}

fn finish(
    net: &NetworkSpec,
    param: TuneParameter,
    bath: &BathConfig,
    x: f64,
    tol: f64,
    bracket: (f64, f64),
) -> Result<TuneResult, TuningError> {
    let network = param.apply(net, x)?;
    let d = ModeDecomposition::new(&network, bath)?;
    let residual = d.kappa()[d.sigma()].abs();
    if residual >= tol {
        return Err(TuningError::ToleranceNotReached { value: x, residual });
    }
    Ok(TuneResult {
        parameter: param,
        value: x,
        residual,
        report: frozen_mode_report(&d, FrozenTolerances::default()),
        bracket,
        network,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeSyncTime {
    /// `f64::INFINITY` when the node has no weight on the least-damped mode.
    pub time: f64,
    /// Mode that dominates the node longest (`None` if no competitor).
    pub competitor: Option<usize>,
    /// The largest raw term was negative and reported as zero.
    pub clipped: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyncTimeEstimate {
    pub sigma: usize,
    pub per_node: Vec<NodeSyncTime>,
    /// Max over finite per-node times.
    pub t_sync: f64,
    /// Nodes with vanishing weight on the least-damped mode.
    pub decoupled: Vec<usize>,
}

/// Time for each node to become dominated by the least-damped mode σ:
/// `t_j = max_{k≠σ} 2(ln|F_jk| − ln|F_jσ|)/(Γ_k − Γ_σ)`, negatives clipped to 0.
pub fn estimate_sync_times(decomp: &ModeDecomposition) -> Result<SyncTimeEstimate, TuningError> {
    let g = decomp.damping();
    let n = g.len();
    if n < 2 {
        return Err(TuningError::InvalidArgument("need at least two modes".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| g[a].total_cmp(&g[b]));
    let sigma = order[0];
    if g[order[1]] <= g[sigma] {
        return Err(TuningError::NoDominantMode(g[sigma], g[order[1]]));
    }
    let f = decomp.transform();
    let zero = 1e-14 * f.amax();
    let mut per_node = Vec::with_capacity(n);
    let mut decoupled = Vec::new();
    for j in 0..n {
        let fs = f[(j, sigma)].abs();
        if fs <= zero {
            decoupled.push(j);
            per_node.push(NodeSyncTime { time: f64::INFINITY, competitor: None, clipped: false });
            continue;
        }
        let mut best: Option<(f64, usize)> = None;
        for k in (0..n).filter(|&k| k != sigma) {
            let fk = f[(j, k)].abs();
            if fk == 0.0 {
                continue;
            }
            let t = 2.0 * (fk.ln() - fs.ln()) / (g[k] - g[sigma]);
            if best.is_none_or(|(b, _)| t > b) {
                best = Some((t, k));
            }
        }
        per_node.push(match best {
            None => NodeSyncTime { time: 0.0, competitor: None, clipped: false },
            Some((t, k)) => NodeSyncTime { time: t.max(0.0), competitor: Some(k), clipped: t < 0.0 },
        });
    }
    let t_sync = per_node.iter().map(|p| p.time).filter(|t| t.is_finite()).fold(0.0, f64::max);
    Ok(SyncTimeEstimate { sigma, per_node, t_sync, decoupled })
}

fn pole_factor(lambda: f64, omega_sigma: f64, omega: f64) -> Result<f64, TuningError> {
    let den = omega_sigma * omega_sigma - omega * omega;
    if den.abs() <= 1e-14 * omega_sigma.powi(2).max(omega * omega) {
        return Err(TuningError::PoleAtOmega);
    }
    Ok(lambda / den)
}

/// `λ_ac/(Ω²−ω_a²) + λ_bc/(Ω²−ω_b²) + 1`; zero when the a–c–b motif hosts a
/// mode at Ω with no weight on c.
pub fn motif_frozen_residual(
    omega_a: f64,
    omega_b: f64,
    lambda_ac: f64,
    lambda_bc: f64,
    omega_sigma: f64,
) -> Result<f64, TuningError> {
    Ok(pole_factor(lambda_ac, omega_sigma, omega_a)? + pole_factor(lambda_bc, omega_sigma, omega_b)? + 1.0)
}

/// Motif nodes `a – c – b` (no direct a–b link).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Motif {
    pub a: usize,
    pub b: usize,
    pub c: usize,
}

impl Motif {
    fn check(&self, net: &NetworkSpec) -> Result<(), TuningError> {
        for v in [self.a, self.b, self.c] {
            net.check_node(v)?;
        }
        if self.a == self.b || self.a == self.c || self.b == self.c {
            return Err(TuningError::InvalidArgument("motif nodes must be distinct".into()));
        }
        Ok(())
    }

    /// Amplitudes `(x_a, x_b)` of a and b relative to c's coupling pattern.
    fn weights(&self, net: &NetworkSpec, omega_sigma: f64) -> Result<(f64, f64), TuningError> {
        let w = net.omega();
        Ok((
            pole_factor(net.lambda(self.a, self.c), omega_sigma, w[self.a])?,
            pole_factor(net.lambda(self.b, self.c), omega_sigma, w[self.b])?,
        ))
    }
}

/// `r_j = x_a λ_aj + x_b λ_bj + λ_cj` for every node outside the motif, with
/// `x_a = λ_ac/(Ω²−ω_a²)`, `x_b = λ_bc/(Ω²−ω_b²)`.
pub fn embedding_residuals(net: &NetworkSpec, motif: Motif, omega_sigma: f64) -> Result<Vec<(usize, f64)>, TuningError> {
    motif.check(net)?;
    let (xa, xb) = motif.weights(net, omega_sigma)?;
    Ok((0..net.len())
        .filter(|&j| j != motif.a && j != motif.b && j != motif.c)
        .map(|j| (j, xa * net.lambda(motif.a, j) + xb * net.lambda(motif.b, j) + net.lambda(motif.c, j)))
        .collect())
}

/// Sets every `λ_cj` (j outside the motif) so that the embedding residuals vanish.
pub fn embed_motif(net: &NetworkSpec, motif: Motif, omega_sigma: f64) -> Result<NetworkSpec, TuningError> {
    motif.check(net)?;
    let (xa, xb) = motif.weights(net, omega_sigma)?;
    let mut coupling = net.coupling().clone();
    for j in (0..net.len()).filter(|&j| j != motif.a && j != motif.b && j != motif.c) {
        let l = -(xa * net.lambda(motif.a, j) + xb * net.lambda(motif.b, j));
        coupling[(motif.c, j)] = l;
        coupling[(j, motif.c)] = l;
    }
    Ok(NetworkSpec::new(net.omega().to_vec(), coupling)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairBalance {
    pub network: NetworkSpec,
    /// `(j, Σ_{k=a,b} F_kσ λ_kj)` before the adjustment.
    pub before: Vec<(usize, f64)>,
    pub after: Vec<(usize, f64)>,
}

fn pair_residuals(net: &NetworkSpec, a: usize, b: usize, fa: f64, fb: f64) -> Vec<(usize, f64)> {
    (0..net.len())
        .filter(|&j| j != a && j != b)
        .map(|j| (j, fa * net.lambda(a, j) + fb * net.lambda(b, j)))
        .collect()
}

/// Balances the links of an identical, unlinked pair so that the pair mode
/// with amplitudes `(f_a, f_b)` (antisymmetric `(1, −1)/√2` by default)
/// decouples from the rest: `λ_bj ← −(f_a/f_b) λ_aj` for every node j.
pub fn balance_pair_couplings(
    net: &NetworkSpec,
    a: usize,
    b: usize,
    coefficients: Option<(f64, f64)>,
) -> Result<PairBalance, TuningError> {
    net.check_node(a)?;
    net.check_node(b)?;
    if a == b {
        return Err(TuningError::InvalidArgument("pair nodes must differ".into()));
    }
    let (wa, wb) = (net.omega()[a], net.omega()[b]);
    if wa != wb {
        return Err(TuningError::FrequencyMismatch(wa, wb));
    }
    if net.lambda(a, b) != 0.0 {
        return Err(TuningError::DirectLinkForbidden);
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let (fa, fb) = coefficients.unwrap_or((s, -s));
    if fb == 0.0 {
        return Err(TuningError::InvalidArgument("mode amplitude on b must be nonzero".into()));
    }
    let before = pair_residuals(net, a, b, fa, fb);
    let mut coupling = net.coupling().clone();
    for j in (0..net.len()).filter(|&j| j != a && j != b) {
        let l = -(fa / fb) * net.lambda(a, j);
        coupling[(b, j)] = l;
        coupling[(j, b)] = l;
    }
    let network = NetworkSpec::new(net.omega().to_vec(), coupling)?;
    let after = pair_residuals(&network, a, b, fa, fb);
    Ok(PairBalance { network, before, after })
}
