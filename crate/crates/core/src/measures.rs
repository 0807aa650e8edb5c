//! Synchronization indicators and Gaussian information measures.
//!
//! N-mode covariances use the `(x…, p…)` ordering of [`crate::dynamics`];
//! two-mode functions take a 4×4 covariance ordered `(q_a, p_a, q_b, p_b)`.
//! All logarithms are natural.

use nalgebra::{DMatrix, Matrix2, Matrix4};
use rayon::prelude::*;
use thiserror::Error;

use crate::dynamics::{Basis, GaussianState, Trajectory};
use crate::network::NetworkSpec;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasureError {
    #[error("unphysical covariance: {0}")]
    UnphysicalCovariance(String),
    #[error("series length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("time grid is not uniform")]
    NonUniformGrid,
    #[error("window of {samples} samples is shorter than the required 10")]
    WindowTooShort { samples: usize },
    #[error("window of {samples} samples exceeds the series length {len}")]
    WindowTooLong { samples: usize, len: usize },
    #[error("need at least two nodes, got {0}")]
    TooFewNodes(usize),
    #[error("node {node} out of range for {n} nodes")]
    NodeOutOfRange { node: usize, n: usize },
    #[error("trajectory has no stored states")]
    MissingStates,
    #[error("state must be in the node basis")]
    WrongBasis,
}

/// Windowed correlation `C(t)` or collective product `S(t)`; `values[k]`
/// belongs to the window starting at `times[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SyncSeries {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub window: f64,
    /// Indices whose window had zero variance in some series (value is NaN).
    pub degenerate: Vec<usize>,
}

impl SyncSeries {
    /// Value of the window starting closest to `t`.
    pub fn value_at(&self, t: f64) -> Option<f64> {
        let k = self.times.partition_point(|&x| x < t);
        let cand = [k.checked_sub(1), (k < self.times.len()).then_some(k)];
        cand.into_iter()
            .flatten()
            .min_by(|&a, &b| (self.times[a] - t).abs().total_cmp(&(self.times[b] - t).abs()))
            .map(|i| self.values[i])
    }
}

/// Grid spacing of a uniform time grid.
pub fn uniform_step(times: &[f64]) -> Result<f64, MeasureError> {
    if times.len() < 2 {
        return Err(MeasureError::WindowTooLong { samples: 2, len: times.len() });
    }
    let dt = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    let scale = times[times.len() - 1].abs().max(dt);
    for (k, t) in times.iter().enumerate() {
        if (t - (times[0] + k as f64 * dt)).abs() > 1e-9 * scale {
            return Err(MeasureError::NonUniformGrid);
        }
    }
    Ok(dt)
}

/// Number of samples a window of duration `window` spans on a grid of step `dt`.
pub fn window_samples(window: f64, dt: f64) -> usize {
    (window / dt).round() as usize
}

/// Standard deviations at or below this fraction of |mean| count as constant.
const FLAT_REL: f64 = 1e-12;

fn pearson(f: &[f64], g: &[f64]) -> Option<f64> {
    let w = f.len() as f64;
    let mf = f.iter().sum::<f64>() / w;
    let mg = g.iter().sum::<f64>() / w;
    let (mut sfg, mut sff, mut sgg) = (0.0, 0.0, 0.0);
    for (a, b) in f.iter().zip(g) {
        let (da, db) = (a - mf, b - mg);
        sfg += da * db;
        sff += da * da;
        sgg += db * db;
    }
    let (sdf, sdg) = ((sff / w).sqrt(), (sgg / w).sqrt());
    if sdf == 0.0 || sdg == 0.0 || sdf <= FLAT_REL * mf.abs() || sdg <= FLAT_REL * mg.abs() {
        return None;
    }
    Some((sfg / (sff.sqrt() * sgg.sqrt())).clamp(-1.0, 1.0))
}

/// Pearson correlation of `f` and `g` over half-open windows `[t, t+Δt)`
/// sliding one sample at a time. The window holds `round(Δt/dt)` samples.
pub fn windowed_correlation(times: &[f64], f: &[f64], g: &[f64], window: f64) -> Result<SyncSeries, MeasureError> {
    if f.len() != times.len() || g.len() != times.len() {
        return Err(MeasureError::LengthMismatch(f.len().min(g.len()), times.len()));
    }
    let dt = uniform_step(times)?;
    let w = window_samples(window, dt);
    if w < 10 {
        return Err(MeasureError::WindowTooShort { samples: w });
    }
    if w > times.len() {
        return Err(MeasureError::WindowTooLong { samples: w, len: times.len() });
    }
    let count = times.len() - w + 1;
    let values: Vec<f64> = (0..count)
        .into_par_iter()
        .map(|k| pearson(&f[k..k + w], &g[k..k + w]).unwrap_or(f64::NAN))
        .collect();
    let degenerate = values.iter().enumerate().filter(|(_, v)| v.is_nan()).map(|(k, _)| k).collect();
    Ok(SyncSeries { times: times[..count].to_vec(), values, window, degenerate })
}

/// `S(t) = Π_{i<j} |C_{⟨q_i²⟩,⟨q_j²⟩}(t)|` over the nodes in `subset`.
pub fn collective_sync(traj: &Trajectory, window: f64, subset: &[usize]) -> Result<SyncSeries, MeasureError> {
    if subset.len() < 2 {
        return Err(MeasureError::TooFewNodes(subset.len()));
    }
    let n = traj.nodes();
    if let Some(&node) = subset.iter().find(|&&j| j >= n) {
        return Err(MeasureError::NodeOutOfRange { node, n });
    }
    let series: Vec<Vec<f64>> = subset.iter().map(|&j| traj.q2_series(j)).collect();
    let mut product: Option<SyncSeries> = None;
    for a in 0..subset.len() {
        for b in (a + 1)..subset.len() {
            let c = windowed_correlation(&traj.times, &series[a], &series[b], window)?;
            product = Some(match product {
                None => SyncSeries { values: c.values.iter().map(|v| v.abs()).collect(), ..c },
                Some(mut s) => {
                    for (x, v) in s.values.iter_mut().zip(&c.values) {
                        *x *= v.abs();
                    }
                    s
                }
            });
        }
    }
    let mut s = product.expect("at least one pair");
    s.degenerate = s.values.iter().enumerate().filter(|(_, v)| v.is_nan()).map(|(k, _)| k).collect();
    Ok(s)
}

fn h(nu: f64) -> f64 {
    let (a, b) = (nu + 0.5, nu - 0.5);
    if b <= 0.0 {
        0.0
    } else {
        a * a.ln() - b * b.ln()
    }
}

/// Entropy of a single mode with symplectic eigenvalue `nu`.
pub fn mode_entropy(nu: f64) -> f64 {
    h(nu)
}

fn check_square_even(cov: &DMatrix<f64>) -> Result<usize, MeasureError> {
    if cov.nrows() != cov.ncols() || cov.nrows() % 2 != 0 || cov.nrows() == 0 {
        return Err(MeasureError::UnphysicalCovariance(format!("shape {}x{}", cov.nrows(), cov.ncols())));
    }
    if cov.iter().any(|v| !v.is_finite()) {
        return Err(MeasureError::UnphysicalCovariance("non-finite entry".into()));
    }
    Ok(cov.nrows() / 2)
}

/// Symplectic eigenvalues (ascending) of a covariance in `(x…, p…)` order.
pub fn symplectic_spectrum(cov: &DMatrix<f64>) -> Result<Vec<f64>, MeasureError> {
    let n = check_square_even(cov)?;
    let sym = (cov + cov.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    if eig.eigenvalues.iter().any(|&l| !(l > 0.0)) {
        return Err(MeasureError::UnphysicalCovariance(format!(
            "covariance not positive definite (min eigenvalue {:e})",
            eig.eigenvalues.min()
        )));
    }
    let root = &eig.eigenvectors * DMatrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt)) * eig.eigenvectors.transpose();
    let mut j = DMatrix::zeros(2 * n, 2 * n);
    for k in 0..n {
        j[(k, n + k)] = 1.0;
        j[(n + k, k)] = -1.0;
    }
    let m = &root * j * &root;
    let k = m.transpose() * &m;
    let mut ev: Vec<f64> = k.symmetric_eigen().eigenvalues.iter().map(|v| v.max(0.0)).collect();
    ev.sort_by(f64::total_cmp);
    Ok((0..n).map(|i| (0.5 * (ev[2 * i] + ev[2 * i + 1])).sqrt()).collect())
}

/// `1 / (2^N √det σ)`.
pub fn purity(cov: &DMatrix<f64>) -> Result<f64, MeasureError> {
    let n = check_square_even(cov)?;
    let chol = nalgebra::Cholesky::new((cov + cov.transpose()) * 0.5)
        .ok_or_else(|| MeasureError::UnphysicalCovariance("covariance not positive definite".into()))?;
    let l = chol.l_dirty();
    let mut p = 1.0;
    for i in 0..2 * n {
        p /= l[(i, i)];
    }
    Ok(p / 2f64.powi(n as i32))
}

pub fn von_neumann_entropy(cov: &DMatrix<f64>) -> Result<f64, MeasureError> {
    Ok(symplectic_spectrum(cov)?.into_iter().map(h).sum())
}

/// `½(⟨pᵀp⟩ + ⟨qᵀHq⟩)` of a node-basis state, including the means.
pub fn energy(state: &GaussianState, net: &NetworkSpec) -> Result<f64, MeasureError> {
    if state.basis() != Basis::Node {
        return Err(MeasureError::WrongBasis);
    }
    let n = net.len();
    if state.modes() != n {
        return Err(MeasureError::LengthMismatch(state.modes(), n));
    }
    let hm = net.hamiltonian();
    let (mean, cov) = (state.mean(), state.cov());
    let mut e = 0.0;
    for i in 0..n {
        e += cov[(n + i, n + i)] + mean[n + i] * mean[n + i];
        for j in 0..n {
            e += hm[(i, j)] * (cov[(j, i)] + mean[i] * mean[j]);
        }
    }
    Ok(0.5 * e)
}

/// Which mode of a pair the discord measurement acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasuredSide {
    A,
    B,
}

/// Blocks `(α, β, γ)` of a two-mode covariance `[[α, γ], [γᵀ, β]]`.
fn blocks(cov: &Matrix4<f64>) -> (Matrix2<f64>, Matrix2<f64>, Matrix2<f64>) {
    (
        cov.fixed_view::<2, 2>(0, 0).into_owned(),
        cov.fixed_view::<2, 2>(2, 2).into_owned(),
        cov.fixed_view::<2, 2>(0, 2).into_owned(),
    )
}

/// Tolerance on the uncertainty principle for two-mode inputs.
const PHYS_TOL: f64 = 1e-8;

/// Two-mode covariance in `(q_a, p_a, q_b, p_b)` order as `(x…, p…)` order.
fn to_xxpp(cov: &Matrix4<f64>) -> DMatrix<f64> {
    let idx = [0, 2, 1, 3];
    DMatrix::from_fn(4, 4, |r, c| cov[(idx[r], idx[c])])
}

/// Symplectic eigenvalues `(ν₋, ν₊)` of a two-mode covariance.
pub fn two_mode_symplectic(cov: &Matrix4<f64>) -> Result<(f64, f64), MeasureError> {
    let nu = symplectic_spectrum(&to_xxpp(cov))?;
    if nu[0] < 0.5 - PHYS_TOL {
        return Err(MeasureError::UnphysicalCovariance(format!("symplectic eigenvalue {} below 1/2", nu[0])));
    }
    Ok((nu[0], nu[1]))
}

/// `I = S_A + S_B − S_AB`.
pub fn mutual_information(cov: &Matrix4<f64>) -> Result<f64, MeasureError> {
    let (nm, np) = two_mode_symplectic(cov)?;
    let (a, b, _) = blocks(cov);
    let i = h(a.determinant().sqrt()) + h(b.determinant().sqrt()) - h(nm) - h(np);
    Ok(i.max(0.0))
}

/// `E_N = max(0, −ln 2ν̃₋)` from the partially transposed covariance.
pub fn log_negativity(cov: &Matrix4<f64>) -> Result<f64, MeasureError> {
    two_mode_symplectic(cov)?;
    let mut pt = *cov;
    for k in 0..4 {
        if k != 3 {
            pt[(3, k)] = -pt[(3, k)];
            pt[(k, 3)] = -pt[(k, 3)];
        }
    }
    let nu = symplectic_spectrum(&to_xxpp(&pt))?[0];
    Ok((-(2.0 * nu).ln()).max(0.0))
}

fn swap_modes(cov: &Matrix4<f64>) -> Matrix4<f64> {
    let idx = [2, 3, 0, 1];
    Matrix4::from_fn(|r, c| cov[(idx[r], idx[c])])
}

/// Determinant of the unmeasured mode's conditional covariance after a
/// Gaussian measurement with covariance `½R(θ)diag(e^{−2s}, e^{2s})R(θ)ᵀ`
/// on mode B.
pub fn conditional_det(a: &Matrix2<f64>, b: &Matrix2<f64>, c: &Matrix2<f64>, s: f64, theta: f64) -> f64 {
    let (sn, cs) = theta.sin_cos();
    let (e1, e2) = ((-2.0 * s).exp() * 0.5, (2.0 * s).exp() * 0.5);
    let m = Matrix2::new(
        e1 * cs * cs + e2 * sn * sn,
        (e1 - e2) * cs * sn,
        (e1 - e2) * cs * sn,
        e1 * sn * sn + e2 * cs * cs,
    );
    match (b + m).try_inverse() {
        Some(inv) => (a - c * inv * c.transpose()).determinant(),
        None => f64::INFINITY,
    }
}

/// Conditional determinant in the homodyne limit `s → ∞` (quadrature at angle θ).
pub fn homodyne_det(a: &Matrix2<f64>, b: &Matrix2<f64>, c: &Matrix2<f64>, theta: f64) -> f64 {
    let u = nalgebra::Vector2::new(theta.cos(), theta.sin());
    let cu = c * u;
    (a - cu * cu.transpose() / (u.dot(&(b * u)))).determinant()
}

/// `M^{-1/2}` of a 2×2 positive matrix with unit determinant.
fn inv_sqrt_unimodular(m: &Matrix2<f64>) -> Matrix2<f64> {
    let adj = Matrix2::new(m[(1, 1)], -m[(0, 1)], -m[(1, 0)], m[(0, 0)]);
    (adj + Matrix2::identity()) / (m.trace() + 2.0).sqrt()
}

/// Local symplectic invariants `(a, b, c₁, c₂)` of the standard form
/// `α = a𝟙, β = b𝟙, γ = diag(c₁, c₂)` with `c₁ ≥ |c₂|`.
fn standard_form(cov: &Matrix4<f64>) -> (f64, f64, f64, f64) {
    let (alpha, beta, gamma) = blocks(cov);
    let a = alpha.determinant().sqrt();
    let b = beta.determinant().sqrt();
    let c = inv_sqrt_unimodular(&(alpha / a)) * gamma * inv_sqrt_unimodular(&(beta / b));
    let sv = c.svd(false, false).singular_values;
    let sign = if c.determinant() < 0.0 { -1.0 } else { 1.0 };
    (a, b, sv[0], sign * sv[1])
}

/// Minimal conditional determinant over pure Gaussian measurements on mode B.
/// In standard form the optimum lies in the family `½diag(λ, 1/λ)`, searched
/// over `ln λ` with both homodyne limits.
fn min_conditional_det(cov: &Matrix4<f64>) -> f64 {
    let (a, b, c1, c2) = standard_form(cov);
    let e = |t: f64| {
        let u = 0.5 * t.exp();
        (a - c1 * c1 / (b + u)) * (a - c2 * c2 / (b + 0.25 / u))
    };
    let limits = [(a - c1 * c1 / b) * a, a * (a - c2 * c2 / b)];
    let (lo, hi, n) = (-40.0, 40.0, 400);
    let step = (hi - lo) / n as f64;
    let grid: Vec<f64> = (0..=n).map(|k| e(lo + k as f64 * step)).collect();
    let k = (0..=n).min_by(|&i, &j| grid[i].total_cmp(&grid[j])).unwrap_or(0);
    let (mut x0, mut x1) = (lo + k.saturating_sub(1) as f64 * step, lo + (k + 1).min(n) as f64 * step);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut p, mut q) = (x1 - g * (x1 - x0), x0 + g * (x1 - x0));
    let (mut fp, mut fq) = (e(p), e(q));
    while x1 - x0 > 1e-10 {
        if fp < fq {
            x1 = q;
            q = p;
            fq = fp;
            p = x1 - g * (x1 - x0);
            fp = e(p);
        } else {
            x0 = p;
            p = q;
            fp = fq;
            q = x0 + g * (x1 - x0);
            fq = e(q);
        }
    }
    limits.into_iter().chain([grid[k], fp, fq]).fold(f64::INFINITY, f64::min)
}

/// Gaussian discord `δ = I − max_M [S_A − S_{A|M}]` with the measurement on
/// `side`. Negative round-off is clamped to zero.
pub fn gaussian_discord(cov: &Matrix4<f64>, side: MeasuredSide) -> Result<f64, MeasureError> {
    let cov = match side {
        MeasuredSide::B => *cov,
        MeasuredSide::A => swap_modes(cov),
    };
    let (nm, np) = two_mode_symplectic(&cov)?;
    let (_, b, _) = blocks(&cov);
    let e_min = min_conditional_det(&cov);
    let value = h(b.determinant().sqrt()) - h(nm) - h(np) + h(e_min.max(0.25).sqrt());
    Ok(value.max(0.0))
}

/// Pair quantity averaged by [`pairwise_average`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairMeasure {
    MutualInformation,
    Discord,
    LogNegativity,
}

pub fn evaluate_pair_measure(cov: &Matrix4<f64>, measure: PairMeasure) -> Result<f64, MeasureError> {
    match measure {
        PairMeasure::MutualInformation => mutual_information(cov),
        PairMeasure::Discord => gaussian_discord(cov, MeasuredSide::B),
        PairMeasure::LogNegativity => log_negativity(cov),
    }
}

/// I, δ and E_N of one node pair along a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct PairMeasures {
    pub pair: (usize, usize),
    pub mutual_information: Vec<f64>,
    pub discord: Vec<f64>,
    pub log_negativity: Vec<f64>,
}

pub fn pair_measures(traj: &Trajectory, i: usize, j: usize, side: MeasuredSide) -> Result<PairMeasures, MeasureError> {
    if traj.states.is_empty() {
        return Err(MeasureError::MissingStates);
    }
    let n = traj.nodes();
    for node in [i, j] {
        if node >= n {
            return Err(MeasureError::NodeOutOfRange { node, n });
        }
    }
    let rows: Vec<(f64, f64, f64)> = traj
        .states
        .par_iter()
        .map(|s| {
            let cov = s.pair_cov(i, j);
            Ok((mutual_information(&cov)?, gaussian_discord(&cov, side)?, log_negativity(&cov)?))
        })
        .collect::<Result<_, MeasureError>>()?;
    Ok(PairMeasures {
        pair: (i, j),
        mutual_information: rows.iter().map(|r| r.0).collect(),
        discord: rows.iter().map(|r| r.1).collect(),
        log_negativity: rows.iter().map(|r| r.2).collect(),
    })
}

/// All pairs `i < j` of `0..n`.
pub fn all_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseSeries {
    pub times: Vec<f64>,
    /// Pair mean before filtering.
    pub raw: Vec<f64>,
    /// Trailing moving mean of `raw`.
    pub filtered: Vec<f64>,
    /// Pairs whose measure failed at some time point (left out there).
    pub excluded: Vec<(usize, usize)>,
}

/// Trailing moving mean over the last `samples` points (fewer at the start).
pub fn moving_mean(values: &[f64], samples: usize) -> Vec<f64> {
    let w = samples.max(1);
    let mut out = Vec::with_capacity(values.len());
    let mut sum = 0.0;
    for k in 0..values.len() {
        sum += values[k];
        if k >= w {
            sum -= values[k - w];
        }
        // recompute periodically to bound drift of the running sum
        if k % 1024 == 1023 {
            sum = values[(k + 1).saturating_sub(w)..=k].iter().sum();
        }
        out.push(sum / (k + 1).min(w) as f64);
    }
    out
}

/// Mean of `measure` over `pairs` (all pairs if `None`) at each stored
/// state, then a trailing moving mean over `filter_window` time units.
pub fn pairwise_average(
    traj: &Trajectory,
    measure: PairMeasure,
    filter_window: Option<f64>,
    pairs: Option<&[(usize, usize)]>,
) -> Result<PairwiseSeries, MeasureError> {
    if traj.states.is_empty() {
        return Err(MeasureError::MissingStates);
    }
    let n = traj.nodes();
    let pairs: Vec<(usize, usize)> = pairs.map_or_else(|| all_pairs(n), <[_]>::to_vec);
    if pairs.is_empty() {
        return Err(MeasureError::TooFewNodes(n));
    }
    for &(i, j) in &pairs {
        if let Some(&node) = [i, j].iter().find(|&&k| k >= n) {
            return Err(MeasureError::NodeOutOfRange { node, n });
        }
    }
    let per_time: Vec<(f64, Vec<usize>)> = traj
        .states
        .par_iter()
        .map(|s| {
            let mut sum = 0.0;
            let mut count = 0usize;
            let mut failed = Vec::new();
            for (k, &(i, j)) in pairs.iter().enumerate() {
                match evaluate_pair_measure(&s.pair_cov(i, j), measure) {
                    Ok(v) => {
                        sum += v;
                        count += 1;
                    }
                    Err(_) => failed.push(k),
                }
            }
            (if count > 0 { sum / count as f64 } else { f64::NAN }, failed)
        })
        .collect();
    let mut excluded_idx: Vec<usize> = per_time.iter().flat_map(|(_, f)| f.iter().copied()).collect();
    excluded_idx.sort_unstable();
    excluded_idx.dedup();
    let raw: Vec<f64> = per_time.into_iter().map(|(v, _)| v).collect();
    let filtered = match filter_window {
        Some(wt) if traj.times.len() > 1 => {
            let dt = uniform_step(&traj.times)?;
            moving_mean(&raw, window_samples(wt, dt))
        }
        _ => raw.clone(),
    };
    Ok(PairwiseSeries {
        times: traj.times.clone(),
        raw,
        filtered,
        excluded: excluded_idx.into_iter().map(|k| pairs[k]).collect(),
    })
}
