//! Scenario files: TOML with one table per concern.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: Option<String>,
    pub network: NetworkConfig,
    pub bath: BathSection,
    #[serde(default)]
    pub initial: InitialSection,
    pub time: TimeSection,
    pub analysis: Option<AnalysisSection>,
    pub tuning: Option<TuningSection>,
    pub sweep: Option<SweepSection>,
    pub output: Option<OutputSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    #[serde(flatten)]
    pub source: NetworkSource,
    /// Edits applied in order after the base network is built.
    #[serde(default, rename = "modify", skip_serializing_if = "Vec::is_empty")]
    pub modifications: Vec<Modification>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum NetworkSource {
    Inline {
        omega: Vec<f64>,
        #[serde(default)]
        edges: Vec<(usize, usize, f64)>,
    },
    Chain {
        omega: Vec<f64>,
        links: Vec<f64>,
    },
    File {
        path: PathBuf,
    },
    Random {
        n: usize,
        p: f64,
        freq_low: f64,
        freq_high: f64,
        coupling_mean: f64,
        coupling_sd: f64,
        seed: u64,
        #[serde(default = "default_retries")]
        max_retries: usize,
    },
}

fn default_retries() -> usize {
    100
}

/// Tunable network quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParameterRef {
    Node(usize),
    Coupling(usize, usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum Modification {
    SetFrequency {
        node: usize,
        value: f64,
    },
    SetCoupling {
        i: usize,
        j: usize,
        value: f64,
    },
    /// Multiplies the parameter by `factor`.
    Scale {
        parameter: ParameterRef,
        factor: f64,
    },
    /// Adds `delta` to the parameter.
    Shift {
        parameter: ParameterRef,
        delta: f64,
    },
    /// Appends nodes `a = n`, `b = n + 1` with links `[node, λ]`.
    AttachPair {
        omega_a: f64,
        omega_b: f64,
        links_a: Vec<(usize, f64)>,
        links_b: Vec<(usize, f64)>,
    },
    /// Rewires nodes a, b, c into an a–c–b motif (no a–b link).
    InstallMotif {
        a: usize,
        b: usize,
        c: usize,
        omega_c: f64,
        lambda_ac: f64,
        lambda_bc: f64,
    },
    /// Bisects the parameter to a zero of κ_σ under the scenario bath.
    Tune {
        parameter: ParameterRef,
        bracket: (f64, f64),
        #[serde(default = "default_tol")]
        tol: f64,
    },
    /// Tunes ω_b of the isolated a–c–b motif to host a frozen mode.
    TuneMotif {
        a: usize,
        b: usize,
        c: usize,
        bracket: (f64, f64),
        #[serde(default = "default_tol")]
        tol: f64,
    },
    /// Rewrites c's external links so the motif's frozen mode survives.
    EmbedMotif {
        a: usize,
        b: usize,
        c: usize,
    },
    /// Mirrors a's links onto b so the antisymmetric pair mode decouples.
    BalancePair {
        a: usize,
        b: usize,
    },
}

fn default_tol() -> f64 {
    1e-12
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BathKindConfig {
    Separate,
    Common,
    Local,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathSection {
    pub kind: BathKindConfig,
    pub gamma: f64,
    pub temperature: f64,
    pub cutoff: f64,
    /// Node carrying the bath when `kind = "local"`.
    pub node: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Preparation {
    #[serde(default)]
    pub mean_q: f64,
    #[serde(default)]
    pub mean_p: f64,
    #[serde(default)]
    pub squeeze_r: f64,
    #[serde(default)]
    pub squeeze_angle: f64,
    #[serde(default)]
    pub thermal_n: f64,
}

impl Default for Preparation {
    fn default() -> Self {
        Preparation { mean_q: 0.0, mean_p: 0.0, squeeze_r: 0.0, squeeze_angle: 0.0, thermal_n: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeOverride {
    pub node: usize,
    #[serde(flatten)]
    pub prep: Preparation,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    /// Applied to every node not listed in `nodes`.
    #[serde(default)]
    pub default: Preparation,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub nodes: Vec<NodeOverride>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntegratorChoice {
    #[default]
    Rk4,
    Exact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    pub t_end: f64,
    /// Base time step; RK4 uses it as its maximal step.
    pub step: f64,
    /// Store every `decimation`-th step.
    #[serde(default = "one")]
    pub decimation: usize,
    /// Stored points before this time are dropped.
    #[serde(default)]
    pub t_start: f64,
    #[serde(default)]
    pub integrator: IntegratorChoice,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PairSelection {
    All(AllPairs),
    List(Vec<(usize, usize)>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AllPairs {
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SideChoice {
    A,
    #[default]
    B,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSection {
    /// Correlation window Δt; defaults to ten periods of the least-damped mode.
    pub window: Option<f64>,
    /// Moving-mean span for filtered averages; defaults to the window.
    pub filter_window: Option<f64>,
    #[serde(default = "all_pairs")]
    pub pairs: PairSelection,
    /// Windowed correlations and the collective product S.
    #[serde(default = "yes")]
    pub sync: bool,
    /// Mutual information, discord and log-negativity.
    #[serde(default = "yes")]
    pub measures: bool,
    /// Evaluate pair measures at every `stride`-th stored point.
    #[serde(default = "one")]
    pub stride: usize,
    #[serde(default)]
    pub side: SideChoice,
}

fn all_pairs() -> PairSelection {
    PairSelection::All(AllPairs::All)
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TuningSection {
    pub parameter: ParameterRef,
    pub bracket: (f64, f64),
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Points of the κ_σ scan written next to the result.
    #[serde(default = "default_scan_points")]
    pub scan_points: usize,
}

fn default_scan_points() -> usize {
    201
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepScale {
    #[default]
    Absolute,
    /// Grid values multiply the parameter's current value.
    Relative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub parameter: ParameterRef,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub values: Vec<f64>,
    /// `[start, stop, count]`, inclusive.
    pub linspace: Option<(f64, f64, usize)>,
    #[serde(default)]
    pub scale: SweepScale,
}

impl SweepSection {
    pub fn grid(&self) -> Vec<f64> {
        let mut g = self.values.clone();
        if let Some((a, b, n)) = self.linspace {
            if n == 1 {
                g.push(a);
            } else {
                g.extend((0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64));
            }
        }
        g
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Reads a scenario; relative network file paths resolve against the
    /// scenario's directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        if let NetworkSource::File { path: p } = &mut cfg.network.source {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    /// Overrides the seed of a random network source.
    pub fn set_seed(&mut self, seed: u64) {
        if let NetworkSource::Random { seed: s, .. } = &mut self.network.source {
            *s = seed;
        }
    }
}
