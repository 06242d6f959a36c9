//! Run configuration: one JSON document per experiment.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context};
use ruelle_core::measures::MeasureRecord;
use ruelle_core::transfer::{normalize, solve, RpfOptions};
use ruelle_core::{Alphabet, Density, MarkovMeasure, Potential, QuadratureRule};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub alphabet: AlphabetSpec,
    pub potential: PotentialSpec,
    #[serde(default)]
    pub rpf: RpfOptions,
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub beta_grid: Option<BetaGrid>,
    #[serde(default = "default_sample_length")]
    pub sample_length: usize,
    /// Measure for `entropy` and `sample`; for `verify`, the measure under
    /// test (a seeded random Markov measure when absent).
    #[serde(default)]
    pub measure: Option<MeasureSpec>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default)]
    pub optimizer: ruelle_core::OptimizationConfig,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

fn default_n_max() -> usize {
    10
}

fn default_sample_length() -> usize {
    1000
}

fn default_trials() -> usize {
    100
}

fn default_epsilon() -> f64 {
    0.05
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AlphabetSpec {
    /// `size` symbols with uniform weights, or explicit `weights`.
    Finite {
        #[serde(default)]
        size: Option<usize>,
        #[serde(default)]
        weights: Option<Vec<f64>>,
    },
    Interval {
        lo: f64,
        hi: f64,
        nodes: usize,
        #[serde(default = "default_rule")]
        rule: QuadratureRule,
        #[serde(default = "default_density")]
        density: Density,
    },
}

fn default_rule() -> QuadratureRule {
    QuadratureRule::Gauss
}

fn default_density() -> Density {
    Density::Uniform
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialSpec {
    Constant {
        c: f64,
    },
    Ising {
        beta: f64,
    },
    Bilinear {
        beta: f64,
    },
    Random {
        seed: u64,
        #[serde(default = "default_amplitude")]
        amplitude: f64,
        #[serde(default = "default_depth")]
        depth: usize,
    },
    /// Explicit tensor, inline or from a JSON file `{depth, symbols, values}`.
    Tensor {
        #[serde(default)]
        path: Option<PathBuf>,
        #[serde(default)]
        depth: Option<usize>,
        #[serde(default)]
        values: Option<Vec<f64>>,
    },
}

fn default_amplitude() -> f64 {
    1.0
}

fn default_depth() -> usize {
    2
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BetaGrid {
    Values(Vec<f64>),
    Range { start: f64, stop: f64, points: usize },
}

impl BetaGrid {
    pub fn values(&self) -> Vec<f64> {
        match self {
            BetaGrid::Values(v) => v.clone(),
            BetaGrid::Range { start, stop, points: 1 } => vec![0.5 * (start + stop)],
            BetaGrid::Range { start, stop, points } => {
                let step = (stop - start) / (*points - 1) as f64;
                (0..*points).map(|i| start + i as f64 * step).collect()
            }
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum MeasureSpec {
    /// Equilibrium state of the configured potential.
    Gibbs,
    /// The a priori product measure.
    Product,
    Random {
        #[serde(default)]
        seed: Option<u64>,
        #[serde(default = "default_memory")]
        memory: usize,
    },
    Markov(MeasureRecord),
}

fn default_memory() -> usize {
    1
}

/// A parsed configuration with its alphabet and potential built.
pub struct Experiment {
    pub config: RunConfig,
    pub raw: serde_json::Value,
    pub alphabet: Alphabet,
    pub potential: Potential,
}

impl Experiment {
    pub fn load(path: &Path, seed: Option<u64>) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))
            .map_err(CliError::Config)?;
        let raw: serde_json::Value = serde_json::from_str(&text)
            .with_context(|| format!("{} is not valid JSON", path.display()))
            .map_err(CliError::Config)?;
        let mut config: RunConfig = serde_json::from_value(raw.clone())
            .with_context(|| format!("invalid config {}", path.display()))
            .map_err(CliError::Config)?;
        if let Some(seed) = seed {
            config.seed = seed;
        }
        config.validate().map_err(CliError::Config)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let alphabet = config.alphabet.build().map_err(CliError::Config)?;
        let potential = config.potential.build(&alphabet, base).map_err(CliError::Config)?;
        Ok(Experiment { config, raw, alphabet, potential })
    }

    /// Resolves the configured measure; `fallback` applies when none is set.
    pub fn measure(&self, fallback: MeasureSpec) -> Result<MarkovMeasure, CliError> {
        let spec = self.config.measure.clone().unwrap_or(fallback);
        let a = &self.alphabet;
        Ok(match spec {
            MeasureSpec::Gibbs => {
                let s = solve(&self.potential, a)?;
                MarkovMeasure::gibbs_from_normalized(&normalize(&self.potential, &s)?, a)?
            }
            MeasureSpec::Product => MarkovMeasure::product_measure(a),
            MeasureSpec::Random { seed, memory } => {
                MarkovMeasure::random_markov_with_memory(a, memory, seed.unwrap_or(self.config.seed))?
            }
            MeasureSpec::Markov(record) => MarkovMeasure::from_record(a, &record).map_err(|e| {
                CliError::Config(anyhow::Error::new(e).context("invalid measure record"))
            })?,
        })
    }
}

impl RunConfig {
    fn validate(&self) -> anyhow::Result<()> {
        ensure!(self.rpf.tol > 0.0, "rpf.tol must be positive");
        ensure!(self.rpf.max_iter > 0, "rpf.max_iter must be positive");
        ensure!(self.n_max >= 2, "n_max must be at least 2");
        ensure!(self.trials > 0, "trials must be positive");
        ensure!((0.0..1.0).contains(&self.epsilon), "epsilon must lie in [0, 1)");
        ensure!(self.optimizer.family_depth >= 2, "optimizer.family_depth must be at least 2");
        ensure!(
            self.optimizer.step_tol > 0.0 && self.optimizer.grad_tol > 0.0,
            "optimizer tolerances must be positive"
        );
        if let Some(BetaGrid::Range { points, .. }) = &self.beta_grid {
            ensure!(*points > 0, "beta_grid needs at least one point");
        }
        if let Some(BetaGrid::Values(v)) = &self.beta_grid {
            ensure!(!v.is_empty(), "beta_grid is empty");
        }
        Ok(())
    }
}

impl AlphabetSpec {
    fn build(&self) -> anyhow::Result<Alphabet> {
        Ok(match self {
            AlphabetSpec::Finite { size: Some(m), weights: None } => Alphabet::uniform_finite(*m)?,
            AlphabetSpec::Finite { size, weights: Some(w) } => {
                if let Some(m) = size {
                    ensure!(*m == w.len(), "alphabet size {m} but {} weights", w.len());
                }
                Alphabet::finite_with_weights(w)?
            }
            AlphabetSpec::Finite { size: None, weights: None } => bail!("finite alphabet needs size or weights"),
            AlphabetSpec::Interval { lo, hi, nodes, rule, density } => {
                Alphabet::discretize_interval(*lo, *hi, density, *nodes, *rule)?
            }
        })
    }
}

impl PotentialSpec {
    fn build(&self, alphabet: &Alphabet, base: &Path) -> anyhow::Result<Potential> {
        let m = alphabet.len();
        let f = match self {
            PotentialSpec::Constant { c } => Potential::constant(m, *c)?,
            PotentialSpec::Ising { beta } => {
                ensure!(m == 2, "the ising family needs a 2-symbol alphabet, got {m}");
                Potential::ising(*beta)?
            }
            PotentialSpec::Bilinear { beta } => Potential::bilinear(alphabet, *beta)?,
            PotentialSpec::Random { seed, amplitude, depth } => Potential::random(m, *depth, *amplitude, *seed)?,
            PotentialSpec::Tensor { path: Some(path), depth: None, values: None } => {
                let path = base.join(path);
                let text = fs::read_to_string(&path)
                    .with_context(|| format!("cannot read tensor file {}", path.display()))?;
                serde_json::from_str(&text).with_context(|| format!("invalid tensor file {}", path.display()))?
            }
            PotentialSpec::Tensor { path: None, depth: Some(depth), values: Some(values) } => {
                Potential::new(*depth, m, values.clone())?
            }
            PotentialSpec::Tensor { .. } => bail!("tensor potential needs either path or depth and values"),
        };
        ensure!(f.symbols() == m, "potential has {} symbols, alphabet has {m}", f.symbols());
        Ok(f)
    }
}
