//! Normal modes of a network and their coupling to the environment.
//!
//! The Hamiltonian matrix is diagonalized as `H = F diag(Ω²) Fᵀ`, with modes in
//! ascending Ω and each column of `F` signed so its largest-magnitude entry is
//! positive. The bath enters only through the effective couplings κ, which
//! set the Ohmic damping `Γ = γκ²` and diffusion `D = ΓΩ coth(Ω/2T)`.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::network::NetworkSpec;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("symmetric eigensolver did not converge")]
    EigensolverFailure,
    #[error("Hamiltonian matrix has non-positive eigenvalue {0:e}")]
    NonPositiveEigenvalue(f64),
    #[error("local bath node {node} out of range for {n} nodes")]
    LocalBathNodeOutOfRange { node: usize, n: usize },
    #[error("cutoff {cutoff} must exceed the largest mode frequency {max_omega}")]
    CutoffTooLow { cutoff: f64, max_omega: f64 },
    #[error("invalid bath parameter: {0}")]
    InvalidBath(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BathKind {
    /// One identical, independent environment per node.
    Separate,
    /// A single environment coupled to the sum of all node coordinates.
    Common,
    /// A single environment coupled to one node.
    Local { node: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathConfig {
    pub kind: BathKind,
    pub gamma: f64,
    pub temperature: f64,
    pub cutoff: f64,
}

impl BathConfig {
    pub fn new(kind: BathKind, gamma: f64, temperature: f64, cutoff: f64) -> Result<Self, SpectralError> {
        let bath = BathConfig { kind, gamma, temperature, cutoff };
        bath.check()?;
        Ok(bath)
    }

    fn check(&self) -> Result<(), SpectralError> {
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(SpectralError::InvalidBath(format!("gamma = {} must be >= 0", self.gamma)));
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(SpectralError::InvalidBath(format!("temperature = {} must be > 0", self.temperature)));
        }
        if !(self.cutoff > 0.0) {
            return Err(SpectralError::InvalidBath(format!("cutoff = {} must be > 0", self.cutoff)));
        }
        Ok(())
    }

    /// Vector the bath couples to in node space, if it is a single environment.
    fn coupling_vector(&self, n: usize) -> Result<Option<DVector<f64>>, SpectralError> {
        match self.kind {
            BathKind::Separate => Ok(None),
            BathKind::Common => Ok(Some(DVector::from_element(n, 1.0))),
            BathKind::Local { node } => {
                if node >= n {
                    return Err(SpectralError::LocalBathNodeOutOfRange { node, n });
                }
                let mut v = DVector::zeros(n);
                v[node] = 1.0;
                Ok(Some(v))
            }
        }
    }
}

/// Eigenvectors (columns of `transform`) and eigenfrequencies of the network.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalModes {
    transform: DMatrix<f64>,
    omega: Vec<f64>,
}

impl NormalModes {
    /// The orthogonal matrix `F`; column `n` is mode `n` in node coordinates.
    pub fn transform(&self) -> &DMatrix<f64> {
        &self.transform
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    /// Groups of mode indices whose Ω² agree to `rel_tol` of the largest Ω².
    pub fn degenerate_groups(&self, rel_tol: f64) -> Vec<Vec<usize>> {
        let scale = self.omega.iter().fold(0.0f64, |m, w| m.max(w * w));
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for (k, w) in self.omega.iter().enumerate() {
            match groups.last_mut() {
                Some(g) if (w * w - self.omega[g[0]].powi(2)).abs() <= rel_tol * scale => g.push(k),
                _ => groups.push(vec![k]),
            }
        }
        groups
    }

    /// Rotates each degenerate eigenspace so that `vector` overlaps with at
    /// most one of its basis vectors; the others become exactly orthogonal to it.
    pub fn align_with(&mut self, vector: &DVector<f64>, rel_tol: f64) {
        for group in self.degenerate_groups(rel_tol) {
            if group.len() < 2 {
                continue;
            }
            let k = group.len();
            let n = self.transform.nrows();
            let mut basis = DMatrix::zeros(n, k);
            for (c, &m) in group.iter().enumerate() {
                basis.set_column(c, &self.transform.column(m));
            }
            let coeff = basis.transpose() * vector;
            let norm = coeff.norm();
            if norm == 0.0 {
                continue;
            }
            let rotation = householder_to_first(&(coeff / norm));
            let rotated = basis * rotation;
            for (c, &m) in group.iter().enumerate() {
                let mut col = rotated.column(c).into_owned();
                fix_sign(&mut col);
                self.transform.set_column(m, &col);
            }
        }
    }
}

/// Orthogonal matrix whose first column is the unit vector `u`.
fn householder_to_first(u: &DVector<f64>) -> DMatrix<f64> {
    let k = u.len();
    let mut e1 = DVector::zeros(k);
    e1[0] = 1.0;
    let w = &e1 - u;
    let wn = w.norm_squared();
    if wn < 1e-30 {
        return DMatrix::identity(k, k);
    }
    DMatrix::identity(k, k) - (&w * w.transpose()) * (2.0 / wn)
}

fn fix_sign(col: &mut DVector<f64>) {
    let max = col.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if let Some(lead) = col.iter().find(|x| x.abs() >= max * (1.0 - 1e-12)) {
        if *lead < 0.0 {
            col.neg_mut();
        }
    }
}

/// Relative tolerance on Ω² used to treat modes as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-10;

/// Symmetric eigendecomposition of the Hamiltonian matrix.
pub fn diagonalize(net: &NetworkSpec) -> Result<NormalModes, SpectralError> {
    let n = net.len();
    let eig = net
        .hamiltonian()
        .try_symmetric_eigen(f64::EPSILON, 100 * n.max(10))
        .ok_or(SpectralError::EigensolverFailure)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut transform = DMatrix::zeros(n, n);
    let mut omega = Vec::with_capacity(n);
    for (c, &k) in order.iter().enumerate() {
        let w2 = eig.eigenvalues[k];
        if !(w2 > 0.0) {
            return Err(SpectralError::NonPositiveEigenvalue(w2));
        }
        omega.push(w2.sqrt());
        let mut col = eig.eigenvectors.column(k).into_owned();
        fix_sign(&mut col);
        transform.set_column(c, &col);
    }
    Ok(NormalModes { transform, omega })
}

/// Effective mode–bath couplings and the two least-coupled modes.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveCouplings {
    pub kappa: Vec<f64>,
    /// Mode with the smallest |κ| (lowest index on ties).
    pub sigma: usize,
    /// Mode with the second smallest |κ|; absent for a single mode.
    pub eta: Option<usize>,
    /// |κ_σ / κ_η|; NaN when κ_η = 0.
    pub ratio: Option<f64>,
}

pub fn effective_couplings(modes: &NormalModes, bath: &BathConfig) -> Result<EffectiveCouplings, SpectralError> {
    let n = modes.len();
    let kappa: Vec<f64> = match bath.coupling_vector(n)? {
        None => vec![1.0; n],
        Some(v) => (modes.transform.transpose() * v).iter().copied().collect(),
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| kappa[a].abs().total_cmp(&kappa[b].abs()).then(a.cmp(&b)));
    let sigma = order[0];
    let eta = order.get(1).copied();
    let ratio = eta.map(|e| {
        if kappa[e] == 0.0 {
            f64::NAN
        } else {
            (kappa[sigma] / kappa[e]).abs()
        }
    });
    Ok(EffectiveCouplings { kappa, sigma, eta, ratio })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeRates {
    /// Damping rates Γ_n.
    pub damping: Vec<f64>,
    /// Diffusion coefficients D_n.
    pub diffusion: Vec<f64>,
}

fn coth(x: f64) -> f64 {
    1.0 / x.tanh()
}

pub fn mode_rates(
    modes: &NormalModes,
    couplings: &EffectiveCouplings,
    bath: &BathConfig,
) -> Result<ModeRates, SpectralError> {
    bath.check()?;
    let max_omega = modes.omega.iter().fold(0.0f64, |m, &w| m.max(w));
    if bath.cutoff <= max_omega {
        return Err(SpectralError::CutoffTooLow { cutoff: bath.cutoff, max_omega });
    }
    let damping: Vec<f64> = match bath.kind {
        BathKind::Separate => vec![bath.gamma; modes.len()],
        _ => couplings.kappa.iter().map(|k| bath.gamma * k * k).collect(),
    };
    let diffusion = damping
        .iter()
        .zip(&modes.omega)
        .map(|(g, &w)| g * w * coth(w / (2.0 * bath.temperature)))
        .collect();
    Ok(ModeRates { damping, diffusion })
}

/// Normal modes together with their bath couplings and rates.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeDecomposition {
    modes: NormalModes,
    couplings: EffectiveCouplings,
    rates: ModeRates,
    bath: BathConfig,
}

impl ModeDecomposition {
    /// Diagonalizes `net` and evaluates couplings and rates for `bath`.
    ///
    /// For a single-environment bath, degenerate eigenspaces are rotated so
    /// that at most one basis vector per eigenspace couples to the bath.
    pub fn new(net: &NetworkSpec, bath: &BathConfig) -> Result<Self, SpectralError> {
        bath.check()?;
        let mut modes = diagonalize(net)?;
        if let Some(v) = bath.coupling_vector(net.len())? {
            modes.align_with(&v, DEGENERACY_TOL);
        }
        let couplings = effective_couplings(&modes, bath)?;
        let rates = mode_rates(&modes, &couplings, bath)?;
        Ok(ModeDecomposition { modes, couplings, rates, bath: *bath })
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn modes(&self) -> &NormalModes {
        &self.modes
    }

    pub fn transform(&self) -> &DMatrix<f64> {
        &self.modes.transform
    }

    pub fn omega(&self) -> &[f64] {
        &self.modes.omega
    }

    pub fn kappa(&self) -> &[f64] {
        &self.couplings.kappa
    }

    pub fn couplings(&self) -> &EffectiveCouplings {
        &self.couplings
    }

    pub fn damping(&self) -> &[f64] {
        &self.rates.damping
    }

    pub fn diffusion(&self) -> &[f64] {
        &self.rates.diffusion
    }

    pub fn sigma(&self) -> usize {
        self.couplings.sigma
    }

    pub fn eta(&self) -> Option<usize> {
        self.couplings.eta
    }

    pub fn ratio(&self) -> Option<f64> {
        self.couplings.ratio
    }

    pub fn bath(&self) -> &BathConfig {
        &self.bath
    }

    /// Thermal variances `(⟨Q²⟩, ⟨P²⟩)` of mode `n` at the bath temperature.
    pub fn thermal_variances(&self, n: usize) -> (f64, f64) {
        let w = self.modes.omega[n];
        let c = coth(w / (2.0 * self.bath.temperature));
        (c / (2.0 * w), w * c / 2.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrozenTolerances {
    /// |κ| below this (relative to the largest |F| entry) marks a frozen mode.
    pub kappa: f64,
    /// |F_kn| above this (relative to the largest |F| entry) marks participation.
    pub overlap: f64,
}

impl Default for FrozenTolerances {
    fn default() -> Self {
        FrozenTolerances { kappa: 1e-8, overlap: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrozenModeReport {
    pub frozen: Vec<usize>,
    /// Participating nodes for every mode (indexed by mode).
    pub participants: Vec<Vec<usize>>,
    /// Common bath with a frozen mode spread over every node.
    pub global_sync_common: bool,
    /// Local bath on node d with a frozen mode absent from d, spread over all
    /// other nodes, while every other mode touches d.
    pub cluster_sync_local: bool,
}

pub fn frozen_mode_report(decomp: &ModeDecomposition, tol: FrozenTolerances) -> FrozenModeReport {
    let f = decomp.transform();
    let n = f.nrows();
    let scale = f.amax();
    let kappa_tol = tol.kappa * scale;
    let overlap_tol = tol.overlap * scale;
    let frozen: Vec<usize> = (0..n).filter(|&m| decomp.kappa()[m].abs() < kappa_tol).collect();
    let participants: Vec<Vec<usize>> =
        (0..n).map(|m| (0..n).filter(|&k| f[(k, m)].abs() > overlap_tol).collect()).collect();
    let global_sync_common = matches!(decomp.bath().kind, BathKind::Common)
        && frozen.iter().any(|&m| participants[m].len() == n);
    let cluster_sync_local = match decomp.bath().kind {
        BathKind::Local { node: d } => frozen.iter().any(|&s| {
            let others_participate = participants[s].len() == n - 1 && !participants[s].contains(&d);
            let rest_touch_d = (0..n).filter(|&j| j != s).all(|j| f[(d, j)].abs() >= kappa_tol);
            others_participate && rest_touch_d
        }),
        _ => false,
    };
    FrozenModeReport { frozen, participants, global_sync_common, cluster_sync_local }
}
