//! Oscillator networks: node frequencies, symmetric couplings and the
//! Hamiltonian matrix `H_mn = ω_m² δ_mn + λ_mn (1 − δ_mn)`.
//!
//! All quantities are dimensionless, in units of a reference frequency ω₀.

use std::fmt::Write as _;

use nalgebra::{Cholesky, DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetworkError {
    #[error("coupling matrix is not symmetric at ({i}, {j})")]
    NonSymmetricCoupling { i: usize, j: usize },
    #[error("coupling matrix has nonzero diagonal entry at node {node}")]
    NonZeroDiagonal { node: usize },
    #[error("Hamiltonian matrix is not positive definite (min eigenvalue {min_eigenvalue:e})")]
    NonPositiveDefinite { min_eigenvalue: f64 },
    #[error("node {node} has non-positive frequency {value}")]
    NonPositiveFrequency { node: usize, value: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("no stable network found after {attempts} attempts")]
    ExhaustedRetries { attempts: usize },
    #[error("direct link between the attached pair is not allowed")]
    DirectLinkForbidden,
    #[error("node index {node} out of range for {n} nodes")]
    NodeOutOfRange { node: usize, n: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("network file line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// A validated oscillator network. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSpec {
    omega: Vec<f64>,
    coupling: DMatrix<f64>,
}

impl NetworkSpec {
    /// Validates frequencies and couplings and checks that the Hamiltonian
    /// matrix is positive definite.
    pub fn new(omega: Vec<f64>, coupling: DMatrix<f64>) -> Result<Self, NetworkError> {
        let n = omega.len();
        if coupling.nrows() != n || coupling.ncols() != n {
            return Err(NetworkError::DimensionMismatch(format!(
                "{} frequencies but a {}x{} coupling matrix",
                n,
                coupling.nrows(),
                coupling.ncols()
            )));
        }
        if n == 0 {
            return Err(NetworkError::DimensionMismatch("empty network".into()));
        }
        for (node, &w) in omega.iter().enumerate() {
            if !(w > 0.0) || !w.is_finite() {
                return Err(NetworkError::NonPositiveFrequency { node, value: w });
            }
        }
        for i in 0..n {
            if coupling[(i, i)] != 0.0 {
                return Err(NetworkError::NonZeroDiagonal { node: i });
            }
            for j in (i + 1)..n {
                let (a, b) = (coupling[(i, j)], coupling[(j, i)]);
                if a != b || !a.is_finite() {
                    return Err(NetworkError::NonSymmetricCoupling { i, j });
                }
            }
        }
        let spec = NetworkSpec { omega, coupling };
        let h = spec.hamiltonian();
        if Cholesky::new(h.clone()).is_none() {
            let min_eigenvalue = SymmetricEigen::new(h).eigenvalues.min();
            return Err(NetworkError::NonPositiveDefinite { min_eigenvalue });
        }
        Ok(spec)
    }

    /// Builds a network from a node frequency list and an undirected edge list.
    pub fn from_edges(omega: Vec<f64>, edges: &[(usize, usize, f64)]) -> Result<Self, NetworkError> {
        let n = omega.len();
        let mut coupling = DMatrix::zeros(n, n);
        for &(i, j, l) in edges {
            for node in [i, j] {
                if node >= n {
                    return Err(NetworkError::NodeOutOfRange { node, n });
                }
            }
            if i == j {
                return Err(NetworkError::InvalidParameter(format!("self-loop at node {i}")));
            }
            coupling[(i, j)] = l;
            coupling[(j, i)] = l;
        }
        Self::new(omega, coupling)
    }

    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn coupling(&self) -> &DMatrix<f64> {
        &self.coupling
    }

    pub fn lambda(&self, i: usize, j: usize) -> f64 {
        self.coupling[(i, j)]
    }

    pub fn hamiltonian(&self) -> DMatrix<f64> {
        let mut h = self.coupling.clone();
        for (i, w) in self.omega.iter().enumerate() {
            h[(i, i)] = w * w;
        }
        h
    }

    /// Edges `(i, j, λ)` with `i < j` and nonzero weight.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        let n = self.len();
        let mut out = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                let l = self.coupling[(i, j)];
                if l != 0.0 {
                    out.push((i, j, l));
                }
            }
        }
        out
    }

    pub fn with_frequency(&self, node: usize, value: f64) -> Result<Self, NetworkError> {
        self.check_node(node)?;
        let mut omega = self.omega.clone();
        omega[node] = value;
        Self::new(omega, self.coupling.clone())
    }

    pub fn with_coupling(&self, i: usize, j: usize, value: f64) -> Result<Self, NetworkError> {
        self.check_node(i)?;
        self.check_node(j)?;
        if i == j {
            return Err(NetworkError::InvalidParameter(format!("self-loop at node {i}")));
        }
        let mut coupling = self.coupling.clone();
        coupling[(i, j)] = value;
        coupling[(j, i)] = value;
        Self::new(self.omega.clone(), coupling)
    }

    pub(crate) fn check_node(&self, node: usize) -> Result<(), NetworkError> {
        if node >= self.len() {
            Err(NetworkError::NodeOutOfRange { node, n: self.len() })
        } else {
            Ok(())
        }
    }

    /// Serializes to the line-oriented network file format (see [`parse_network`]).
    pub fn to_text(&self) -> String {
        let mut s = String::from("[nodes]\n");
        for (i, w) in self.omega.iter().enumerate() {
            let _ = writeln!(s, "{i} {w:.16e}");
        }
        s.push_str("[edges]\n");
        for (i, j, l) in self.edges() {
            let _ = writeln!(s, "{i} {j} {l:.16e}");
        }
        s
    }
}

/// Open chain `0 – 1 – … – n-1` with one coupling per link.
pub fn chain(omega: Vec<f64>, links: &[f64]) -> Result<NetworkSpec, NetworkError> {
    if links.len() + 1 != omega.len() {
        return Err(NetworkError::DimensionMismatch(format!(
            "{} nodes need {} links, got {}",
            omega.len(),
            omega.len().saturating_sub(1),
            links.len()
        )));
    }
    let edges: Vec<_> = links.iter().enumerate().map(|(i, &l)| (i, i + 1, l)).collect();
    NetworkSpec::from_edges(omega, &edges)
}

/// Seed for deterministic network sampling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngSeed(pub u64);

#[derive(Debug, Clone, PartialEq)]
pub struct RandomNetworkParams {
    pub n: usize,
    pub p: f64,
    pub freq_low: f64,
    pub freq_high: f64,
    pub coupling_mean: f64,
    pub coupling_sd: f64,
    pub max_retries: usize,
}

/// Erdős–Rényi graph with uniform frequencies and normally distributed edge
/// weights. Unstable samples are discarded and redrawn from the same stream.
///
/// Draw order per attempt: all `n` frequencies, then for each pair `i < j` in
/// row-major order a Bernoulli edge draw followed (if present) by its weight.
pub fn random_network(params: &RandomNetworkParams, seed: RngSeed) -> Result<NetworkSpec, NetworkError> {
    let RandomNetworkParams { n, p, freq_low, freq_high, coupling_mean, coupling_sd, max_retries } =
        params.clone();
    if n == 0 {
        return Err(NetworkError::InvalidParameter("n must be positive".into()));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(NetworkError::InvalidParameter(format!("connection probability {p} outside [0, 1]")));
    }
    if !(freq_low > 0.0 && freq_low <= freq_high && freq_high.is_finite()) {
        return Err(NetworkError::InvalidParameter(format!(
            "frequency range [{freq_low}, {freq_high}] must be positive and ordered"
        )));
    }
    let weight = Normal::new(coupling_mean, coupling_sd)
        .map_err(|e| NetworkError::InvalidParameter(format!("coupling distribution: {e}")))?;
    let freq = Uniform::new_inclusive(freq_low, freq_high)
        .map_err(|e| NetworkError::InvalidParameter(format!("frequency distribution: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed.0);
    let attempts = max_retries.max(1);
    for _ in 0..attempts {
        let omega: Vec<f64> = (0..n).map(|_| freq.sample(&mut rng)).collect();
        let mut coupling = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.random_bool(p) {
                    let l = weight.sample(&mut rng);
                    coupling[(i, j)] = l;
                    coupling[(j, i)] = l;
                }
            }
        }
        match NetworkSpec::new(omega, coupling) {
            Ok(spec) => return Ok(spec),
            Err(NetworkError::NonPositiveDefinite { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(NetworkError::ExhaustedRetries { attempts })
}

/// Appends two nodes `a = n`, `b = n + 1` linked to existing nodes only.
pub fn attach_pair(
    net: &NetworkSpec,
    omega_a: f64,
    omega_b: f64,
    links_a: &[(usize, f64)],
    links_b: &[(usize, f64)],
) -> Result<NetworkSpec, NetworkError> {
    let n = net.len();
    let (a, b) = (n, n + 1);
    let mut omega = net.omega.clone();
    omega.push(omega_a);
    omega.push(omega_b);
    let mut coupling = DMatrix::zeros(n + 2, n + 2);
    coupling.view_mut((0, 0), (n, n)).copy_from(&net.coupling);
    for (node, links) in [(a, links_a), (b, links_b)] {
        for &(j, l) in links {
            if j == a || j == b {
                return Err(NetworkError::DirectLinkForbidden);
            }
            if j >= n {
                return Err(NetworkError::NodeOutOfRange { node: j, n });
            }
            coupling[(node, j)] = l;
            coupling[(j, node)] = l;
        }
    }
    NetworkSpec::new(omega, coupling)
}

/// Parses the network file format:
///
/// ```text
/// # comment
/// [nodes]
/// <index> <omega>
/// [edges]
/// <i> <j> <lambda>
/// ```
///
/// Node indices must cover `0..n` exactly once. Edges are undirected and may
/// appear once; self-loops are rejected. Floats use Rust's `f64` parser, so the
/// 17-significant-digit output of [`NetworkSpec::to_text`] round-trips exactly.
pub fn parse_network(text: &str) -> Result<NetworkSpec, NetworkError> {
    enum Section {
        None,
        Nodes,
        Edges,
    }
    let err = |line: usize, message: String| NetworkError::Parse { line, message };
    let mut section = Section::None;
    let mut nodes: Vec<(usize, f64, usize)> = Vec::new();
    let mut edges: Vec<(usize, usize, f64, usize)> = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line_no = k + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        match line {
            "[nodes]" => {
                section = Section::Nodes;
                continue;
            }
            "[edges]" => {
                section = Section::Edges;
                continue;
            }
            _ => {}
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let index = |s: &str| s.parse::<usize>().map_err(|e| err(line_no, format!("bad index '{s}': {e}")));
        let float = |s: &str| s.parse::<f64>().map_err(|e| err(line_no, format!("bad number '{s}': {e}")));
        match section {
            Section::None => return Err(err(line_no, "data before any section header".into())),
            Section::Nodes => {
                if fields.len() != 2 {
                    return Err(err(line_no, "expected '<index> <omega>'".into()));
                }
                nodes.push((index(fields[0])?, float(fields[1])?, line_no));
            }
            Section::Edges => {
                if fields.len() != 3 {
                    return Err(err(line_no, "expected '<i> <j> <lambda>'".into()));
                }
                edges.push((index(fields[0])?, index(fields[1])?, float(fields[2])?, line_no));
            }
        }
    }
    let n = nodes.len();
    let mut omega = vec![f64::NAN; n];
    for &(i, w, line) in &nodes {
        if i >= n || !omega[i].is_nan() {
            return Err(err(line, format!("node index {i} duplicated or outside 0..{n}")));
        }
        omega[i] = w;
    }
    let mut coupling = DMatrix::zeros(n, n);
    let mut seen = std::collections::BTreeSet::new();
    for &(i, j, l, line) in &edges {
        if i >= n || j >= n {
            return Err(err(line, format!("edge ({i}, {j}) references a missing node")));
        }
        if i == j {
            return Err(err(line, format!("self-loop at node {i}")));
        }
        if !seen.insert((i.min(j), i.max(j))) {
            return Err(err(line, format!("duplicate edge ({i}, {j})")));
        }
        coupling[(i, j)] = l;
        coupling[(j, i)] = l;
    }
    NetworkSpec::new(omega, coupling)
}
