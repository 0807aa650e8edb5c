//! Gaussian-state evolution under the normal-mode master equation.
//!
//! In the normal-mode basis each mode obeys the linear drift
//! `A = [[−Γ/2, 1], [−Ω², −Γ/2]]` on `(⟨Q⟩, ⟨P⟩)` and the covariance obeys
//! `dσ/dt = Aσ + σAᵀ + 2D̄` with `D̄ = diag(D/(4Ω²), D/4)`. Damped modes relax
//! to `⟨Q²⟩ = coth(Ω/2T)/(2Ω)`, `⟨P²⟩ = Ω coth(Ω/2T)/2`.
//!
//! Phase-space vectors are ordered `(x₁…x_N, p₁…p_N)`; vacuum variance is ½.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::measures::{symplectic_spectrum, MeasureError};
use crate::spectral::{frozen_mode_report, FrozenTolerances, ModeDecomposition};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("unphysical preparation for node {node}: {reason}")]
    UnphysicalSpec { node: usize, reason: String },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("integrator step failure: {0}")]
    IntegratorStepFailure(String),
    #[error("physicality violated at t = {t}: symplectic eigenvalue {value}")]
    PhysicalityViolation { t: f64, value: f64 },
    #[error("invalid time grid: {0}")]
    InvalidTimeGrid(String),
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Basis {
    Node,
    NormalMode,
}

/// First moments and symmetrized covariance of an N-mode Gaussian state.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
    basis: Basis,
}

impl GaussianState {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>, basis: Basis) -> Result<Self, DynamicsError> {
        let m = mean.len();
        if m % 2 != 0 || cov.nrows() != m || cov.ncols() != m {
            return Err(DynamicsError::DimensionMismatch(format!(
                "mean of length {m} with a {}x{} covariance",
                cov.nrows(),
                cov.ncols()
            )));
        }
        Ok(GaussianState { mean, cov, basis })
    }

    /// Number of modes.
    pub fn modes(&self) -> usize {
        self.mean.len() / 2
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    /// Moments of a single mode.
    pub fn moments(&self, j: usize) -> NodeMoments {
        let n = self.modes();
        NodeMoments {
            mean_q: self.mean[j],
            mean_p: self.mean[n + j],
            var_q: self.cov[(j, j)],
            var_p: self.cov[(n + j, n + j)],
            cov_qp: self.cov[(j, n + j)],
        }
    }

    /// Reduced 4×4 covariance of modes `i`, `j` ordered `(q_i, p_i, q_j, p_j)`.
    pub fn pair_cov(&self, i: usize, j: usize) -> nalgebra::Matrix4<f64> {
        let n = self.modes();
        let idx = [i, n + i, j, n + j];
        nalgebra::Matrix4::from_fn(|r, c| self.cov[(idx[r], idx[c])])
    }
}

/// Single-node moments: means, variances and the symmetrized q–p covariance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeMoments {
    pub mean_q: f64,
    pub mean_p: f64,
    pub var_q: f64,
    pub var_p: f64,
    pub cov_qp: f64,
}

impl NodeMoments {
    /// ⟨q²⟩ including the mean.
    pub fn q2(&self) -> f64 {
        self.var_q + self.mean_q * self.mean_q
    }
}

/// Per-node preparation of a product Gaussian state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodePreparation {
    pub mean_q: f64,
    pub mean_p: f64,
    pub squeeze_r: f64,
    pub squeeze_angle: f64,
    pub thermal_n: f64,
}

impl Default for NodePreparation {
    fn default() -> Self {
        NodePreparation { mean_q: 0.0, mean_p: 0.0, squeeze_r: 0.0, squeeze_angle: 0.0, thermal_n: 0.0 }
    }
}

/// Product state with node covariance `(n̄+½) R(θ) diag(e^{−2r}, e^{2r}) R(θ)ᵀ`.
pub fn initial_state(preps: &[NodePreparation]) -> Result<GaussianState, DynamicsError> {
    let n = preps.len();
    let mut mean = DVector::zeros(2 * n);
    let mut cov = DMatrix::zeros(2 * n, 2 * n);
    for (j, p) in preps.iter().enumerate() {
        if !(p.thermal_n >= 0.0) {
            return Err(DynamicsError::UnphysicalSpec { node: j, reason: format!("thermal_n = {}", p.thermal_n) });
        }
        if !p.squeeze_r.is_finite() || !p.squeeze_angle.is_finite() || !p.mean_q.is_finite() || !p.mean_p.is_finite()
        {
            return Err(DynamicsError::UnphysicalSpec { node: j, reason: "non-finite parameter".into() });
        }
        mean[j] = p.mean_q;
        mean[n + j] = p.mean_p;
        let scale = p.thermal_n + 0.5;
        let (a, b) = ((-2.0 * p.squeeze_r).exp(), (2.0 * p.squeeze_r).exp());
        let (s, c) = p.squeeze_angle.sin_cos();
        cov[(j, j)] = scale * (a * c * c + b * s * s);
        cov[(n + j, n + j)] = scale * (a * s * s + b * c * c);
        let off = scale * (a - b) * c * s;
        cov[(j, n + j)] = off;
        cov[(n + j, j)] = off;
    }
    GaussianState::new(mean, cov, Basis::Node)
}

/// `F ⊕ F` acting on `(x…, p…)` vectors.
pub fn phase_space_transform(f: &DMatrix<f64>) -> DMatrix<f64> {
    let n = f.nrows();
    let mut t = DMatrix::zeros(2 * n, 2 * n);
    t.view_mut((0, 0), (n, n)).copy_from(f);
    t.view_mut((n, n), (n, n)).copy_from(f);
    t
}

pub fn change_basis(state: &GaussianState, decomp: &ModeDecomposition, target: Basis) -> Result<GaussianState, DynamicsError> {
    if state.modes() != decomp.len() {
        return Err(DynamicsError::DimensionMismatch(format!(
            "state has {} modes, decomposition {}",
            state.modes(),
            decomp.len()
        )));
    }
    if state.basis == target {
        return Ok(state.clone());
    }
    let t = phase_space_transform(decomp.transform());
    let (mean, cov) = match target {
        Basis::NormalMode => (t.tr_mul(&state.mean), t.tr_mul(&state.cov) * &t),
        Basis::Node => (&t * &state.mean, &t * &state.cov * t.transpose()),
    };
    Ok(GaussianState { mean, cov: symmetrize(cov), basis: target })
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Integrator {
    /// Fixed-step classical Runge–Kutta; `max_step` defaults to the stability bound.
    Rk4 { max_step: Option<f64> },
    /// Closed-form propagator of each mode.
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveOptions {
    pub integrator: Integrator,
    /// Allowed undershoot of the smallest symplectic eigenvalue below ½.
    pub physicality_tol: f64,
    /// Store the full node-basis state at every grid point.
    pub keep_states: bool,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions { integrator: Integrator::Rk4 { max_step: None }, physicality_tol: 1e-8, keep_states: true }
    }
}

/// Largest admissible RK4 step: 2% of the shortest mode period.
pub fn rk4_step_bound(decomp: &ModeDecomposition) -> f64 {
    let max_omega = decomp.omega().iter().fold(0.0f64, |m, &w| m.max(w));
    0.02 * std::f64::consts::TAU / max_omega
}

/// Number of equal RK4 substeps covering `interval` with steps no longer than `max_step`.
pub fn rk4_substeps(interval: f64, max_step: f64) -> usize {
    ((interval / max_step).ceil() as usize).max(1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// Node-basis states, empty unless `keep_states` was set.
    pub states: Vec<GaussianState>,
    /// Per-time, per-node moments.
    pub moments: Vec<Vec<NodeMoments>>,
    pub energy: Vec<f64>,
    /// Smallest symplectic eigenvalue at each stored point.
    pub min_symplectic: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn nodes(&self) -> usize {
        self.moments.first().map_or(0, Vec::len)
    }

    /// ⟨q_j²⟩ series of node `j`.
    pub fn q2_series(&self, j: usize) -> Vec<f64> {
        self.moments.iter().map(|m| m[j].q2()).collect()
    }

    /// ⟨q_j⟩ series of node `j`.
    pub fn mean_q_series(&self, j: usize) -> Vec<f64> {
        self.moments.iter().map(|m| m[j].mean_q).collect()
    }
}

/// Evolves `state` (taken at t = 0) and samples it at every time in `t_grid`.
pub fn evolve(
    state: &GaussianState,
    decomp: &ModeDecomposition,
    t_grid: &[f64],
    options: &EvolveOptions,
) -> Result<Trajectory, DynamicsError> {
    if t_grid.is_empty() {
        return Err(DynamicsError::InvalidTimeGrid("empty".into()));
    }
    if t_grid[0] < 0.0 || !t_grid.iter().all(|t| t.is_finite()) || t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(DynamicsError::InvalidTimeGrid("times must be finite, non-negative and strictly increasing".into()));
    }
    let start = change_basis(state, decomp, Basis::NormalMode)?;
    let mut traj = Trajectory {
        times: Vec::with_capacity(t_grid.len()),
        states: Vec::new(),
        moments: Vec::with_capacity(t_grid.len()),
        energy: Vec::with_capacity(t_grid.len()),
        min_symplectic: Vec::with_capacity(t_grid.len()),
    };
    let sys = ModeSystem::new(decomp);
    let node_t = phase_space_transform(decomp.transform());
    let mut record = |t: f64, mean: &DVector<f64>, cov: &DMatrix<f64>| -> Result<(), DynamicsError> {
        for v in mean.iter().chain(cov.iter()) {
            if !v.is_finite() {
                return Err(DynamicsError::IntegratorStepFailure(format!("non-finite moment at t = {t}")));
            }
        }
        let nu_min = symplectic_spectrum(cov)?.into_iter().fold(f64::INFINITY, f64::min);
        if nu_min < 0.5 - options.physicality_tol {
            return Err(DynamicsError::PhysicalityViolation { t, value: nu_min });
        }
        let node = GaussianState {
            mean: &node_t * mean,
            cov: symmetrize(&node_t * cov * node_t.transpose()),
            basis: Basis::Node,
        };
        traj.times.push(t);
        traj.energy.push(sys.energy(mean, cov));
        traj.min_symplectic.push(nu_min);
        traj.moments.push((0..node.modes()).map(|j| node.moments(j)).collect());
        if options.keep_states {
            traj.states.push(node);
        }
        Ok(())
    };
    match options.integrator {
        Integrator::Exact => {
            for &t in t_grid {
                let (m, c) = sys.propagate_exact(&start.mean, &start.cov, t);
                record(t, &m, &c)?;
            }
        }
        Integrator::Rk4 { max_step } => {
            let bound = rk4_step_bound(decomp);
            let h_max = match max_step {
                Some(h) if !(h > 0.0) || h > bound => {
                    return Err(DynamicsError::IntegratorStepFailure(format!(
                        "RK4 step {h} outside (0, {bound}]"
                    )))
                }
                Some(h) => h,
                None => bound,
            };
            let mut mean = start.mean.clone();
            let mut cov = start.cov.clone();
            let mut now = 0.0;
            for &t in t_grid {
                let interval = t - now;
                if interval > 0.0 {
                    let steps = rk4_substeps(interval, h_max);
                    let h = interval / steps as f64;
                    for _ in 0..steps {
                        sys.rk4_step(&mut mean, &mut cov, h);
                    }
                }
                now = t;
                record(t, &mean, &cov)?;
            }
        }
    }
    Ok(traj)
}

/// Drift and diffusion of all modes in the normal-mode basis.
struct ModeSystem {
    omega: Vec<f64>,
    half_gamma: Vec<f64>,
    gamma: Vec<f64>,
    diff_q: Vec<f64>,
    diff_p: Vec<f64>,
    thermal: Vec<(f64, f64)>,
}

impl ModeSystem {
    fn new(decomp: &ModeDecomposition) -> Self {
        let n = decomp.len();
        let omega = decomp.omega().to_vec();
        let gamma = decomp.damping().to_vec();
        let d = decomp.diffusion();
        ModeSystem {
            half_gamma: gamma.iter().map(|g| g / 2.0).collect(),
            diff_q: (0..n).map(|k| d[k] / (4.0 * omega[k] * omega[k])).collect(),
            diff_p: (0..n).map(|k| d[k] / 4.0).collect(),
            thermal: (0..n)
                .map(|k| if gamma[k] > 0.0 { decomp.thermal_variances(k) } else { (0.0, 0.0) })
                .collect(),
            omega,
            gamma,
        }
    }

    fn n(&self) -> usize {
        self.omega.len()
    }

    /// `A · x` for a matrix whose rows are phase-space coordinates.
    fn drift(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let n = self.n();
        let mut out = DMatrix::zeros(x.nrows(), x.ncols());
        for k in 0..n {
            let (g, w2) = (self.half_gamma[k], self.omega[k] * self.omega[k]);
            for c in 0..x.ncols() {
                let (q, p) = (x[(k, c)], x[(n + k, c)]);
                out[(k, c)] = -g * q + p;
                out[(n + k, c)] = -w2 * q - g * p;
            }
        }
        out
    }

    fn cov_rate(&self, cov: &DMatrix<f64>) -> DMatrix<f64> {
        let n = self.n();
        let x = self.drift(cov);
        let mut out = &x + x.transpose();
        for k in 0..n {
            out[(k, k)] += 2.0 * self.diff_q[k];
            out[(n + k, n + k)] += 2.0 * self.diff_p[k];
        }
        out
    }

    fn mean_rate(&self, mean: &DVector<f64>) -> DVector<f64> {
        let m = DMatrix::from_column_slice(mean.len(), 1, mean.as_slice());
        DVector::from_column_slice(self.drift(&m).as_slice())
    }

    fn rk4_step(&self, mean: &mut DVector<f64>, cov: &mut DMatrix<f64>, h: f64) {
        let k1 = self.mean_rate(mean);
        let k2 = self.mean_rate(&(&*mean + &k1 * (h / 2.0)));
        let k3 = self.mean_rate(&(&*mean + &k2 * (h / 2.0)));
        let k4 = self.mean_rate(&(&*mean + &k3 * h));
        *mean += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);

        let c1 = self.cov_rate(cov);
        let c2 = self.cov_rate(&(&*cov + &c1 * (h / 2.0)));
        let c3 = self.cov_rate(&(&*cov + &c2 * (h / 2.0)));
        let c4 = self.cov_rate(&(&*cov + &c3 * h));
        *cov += (c1 + c2 * 2.0 + c3 * 2.0 + c4) * (h / 6.0);
    }

    /// Per-mode propagator `e^{A t}` as a 2×2 block `[[a, b], [c, d]]`.
    fn propagator(&self, k: usize, t: f64) -> [f64; 4] {
        let w = self.omega[k];
        let e = (-self.half_gamma[k] * t).exp();
        let (s, c) = (w * t).sin_cos();
        [e * c, e * s / w, -e * w * s, e * c]
    }

    fn propagate_exact(&self, mean: &DVector<f64>, cov: &DMatrix<f64>, t: f64) -> (DVector<f64>, DMatrix<f64>) {
        let n = self.n();
        let blocks: Vec<[f64; 4]> = (0..n).map(|k| self.propagator(k, t)).collect();
        // M applied to rows, then Mᵀ applied to columns
        let apply_rows = |x: &DMatrix<f64>| -> DMatrix<f64> {
            let mut out = DMatrix::zeros(x.nrows(), x.ncols());
            for (k, m) in blocks.iter().enumerate() {
                for c in 0..x.ncols() {
                    let (q, p) = (x[(k, c)], x[(n + k, c)]);
                    out[(k, c)] = m[0] * q + m[1] * p;
                    out[(n + k, c)] = m[2] * q + m[3] * p;
                }
            }
            out
        };
        let new_mean = {
            let m = DMatrix::from_column_slice(2 * n, 1, mean.as_slice());
            DVector::from_column_slice(apply_rows(&m).as_slice())
        };
        let half = apply_rows(cov);
        let mut new_cov = apply_rows(&half.transpose());
        for k in 0..n {
            // thermal part: the free flow leaves the thermal covariance invariant
            let fill = -(-self.gamma[k] * t).exp_m1();
            let (tq, tp) = self.thermal[k];
            new_cov[(k, k)] += fill * tq;
            new_cov[(n + k, n + k)] += fill * tp;
        }
        (new_mean, symmetrize(new_cov))
    }

    fn energy(&self, mean: &DVector<f64>, cov: &DMatrix<f64>) -> f64 {
        let n = self.n();
        (0..n)
            .map(|k| {
                let q2 = cov[(k, k)] + mean[k] * mean[k];
                let p2 = cov[(n + k, n + k)] + mean[n + k] * mean[n + k];
                0.5 * (p2 + self.omega[k] * self.omega[k] * q2)
            })
            .sum()
    }
}

/// Long-time state of every damped mode; frozen modes keep their initial data
/// forever and have no unique steady state.
#[derive(Debug, Clone, PartialEq)]
pub struct SteadyState {
    /// Modes with Γ = 0 or |κ| below the default frozen tolerance.
    pub frozen: Vec<usize>,
    /// Thermal `(⟨Q²⟩, ⟨P²⟩)` per mode; `None` for frozen modes.
    pub mode_variances: Vec<Option<(f64, f64)>>,
    /// Full node-basis state, present only when no mode is frozen.
    pub state: Option<GaussianState>,
}

pub fn steady_state(decomp: &ModeDecomposition) -> SteadyState {
    let n = decomp.len();
    let report = frozen_mode_report(decomp, FrozenTolerances::default());
    let frozen: Vec<usize> =
        (0..n).filter(|k| decomp.damping()[*k] == 0.0 || report.frozen.contains(k)).collect();
    let mode_variances: Vec<Option<(f64, f64)>> =
        (0..n).map(|k| if frozen.contains(&k) { None } else { Some(decomp.thermal_variances(k)) }).collect();
    let state = frozen.is_empty().then(|| {
        let mut cov = DMatrix::zeros(2 * n, 2 * n);
        for (k, v) in mode_variances.iter().enumerate() {
            let (q, p) = v.expect("damped mode");
            cov[(k, k)] = q;
            cov[(n + k, n + k)] = p;
        }
        let t = phase_space_transform(decomp.transform());
        GaussianState { mean: DVector::zeros(2 * n), cov: symmetrize(&t * cov * t.transpose()), basis: Basis::Node }
    });
    SteadyState { frozen, mode_variances, state }
}
