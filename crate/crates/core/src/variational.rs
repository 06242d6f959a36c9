//! Pressure, the variational entropy
//! `hᵛ(μ) = inf_g {−∫g dμ + log λ_g}`, equilibrium states and the
//! uniqueness probe.

use serde::{Deserialize, Serialize};

use crate::alphabet::Alphabet;
use crate::dlr::dlr_check;
use crate::entropy::{relative_entropy_rate, specific_entropy_markov};
use crate::error::{Error, Result};
use crate::exec;
use crate::measures::{cylinder_weights, integrate_local, pair_distance, CylinderMeasure, MarkovMeasure};
use crate::potential::Potential;
use crate::transfer::{normalize, solve, SpectralData, TransferMatrix};

/// `log λ_f`.
pub fn pressure(f: &Potential, alphabet: &Alphabet) -> Result<f64> {
    Ok(solve(f, alphabet)?.log_lambda)
}

/// `μ_f = h_f ν_f`, the Gibbs measure of `normalize(f)`.
pub fn equilibrium_state(f: &Potential, alphabet: &Alphabet) -> Result<MarkovMeasure> {
    let spectral = solve(f, alphabet)?;
    MarkovMeasure::gibbs_from_normalized(&normalize(f, &spectral)?, alphabet)
}

/// Normalized generator `ḡ(a u) = log(μ[a u] / (p_a μ[u]))` of a Markov
/// measure with full support; its Gibbs measure is `μ` itself.
pub fn markov_generator(mu: &MarkovMeasure) -> Result<Potential> {
    let alphabet = mu.alphabet();
    let n_blocks = mu.marginal().len();
    let marginal = mu.marginal();
    let values: Vec<f64> = mu
        .joint()
        .iter()
        .enumerate()
        .map(|(w, j)| (j / (alphabet.weight(w / n_blocks) * marginal[w % n_blocks])).ln())
        .collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::DegenerateMeasure("measure has cylinders of zero weight".into()));
    }
    Potential::new(mu.memory() + 1, alphabet.len(), values)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizationConfig {
    /// Depth `K` of the potential family.
    pub family_depth: usize,
    pub max_iter: usize,
    pub step_tol: f64,
    pub grad_tol: f64,
    pub seed: u64,
    pub restarts: usize,
}

impl Default for OptimizationConfig {
    fn default() -> Self {
        OptimizationConfig { family_depth: 2, max_iter: 2_000, step_tol: 1e-12, grad_tol: 1e-9, seed: 0, restarts: 5 }
    }
}

impl OptimizationConfig {
    fn validate(&self) -> Result<()> {
        if self.family_depth < 2 {
            return Err(Error::InvalidArgument("family depth must be at least 2".into()));
        }
        if !(self.step_tol > 0.0 && self.grad_tol > 0.0) {
            return Err(Error::InvalidArgument("tolerances must be positive".into()));
        }
        if self.restarts == 0 {
            return Err(Error::InvalidArgument("need at least one start".into()));
        }
        Ok(())
    }
}

/// `F(g)` with its gradient `∂F/∂g[w] = −μ[w] + μ_g[w]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ObjectiveValue {
    pub value: f64,
    pub gradient: Vec<f64>,
    pub log_lambda: f64,
}

/// Equilibrium `k`-cylinder weights of a depth-`k` potential (`k ≥ 2`):
/// `μ_g[a u] = p_a e^{g(a u)} h(a u_{<r}) ν(u) / λ`.
fn equilibrium_weights(g: &Potential, alphabet: &Alphabet) -> Result<(SpectralData, Vec<f64>)> {
    let op = TransferMatrix::build(g, alphabet)?;
    let spectral = crate::transfer::rpf_solve(&op, Default::default())?;
    let dim = op.dim();
    let m = op.symbols();
    let weights = op
        .kernel()
        .iter()
        .enumerate()
        .map(|(w, k)| k * spectral.h[w / m] * spectral.nu[w % dim] / spectral.lambda)
        .collect();
    Ok((spectral, weights))
}

struct Problem<'a> {
    mu: &'a MarkovMeasure,
    depth: usize,
    target: Vec<f64>,
}

impl<'a> Problem<'a> {
    fn new(mu: &'a MarkovMeasure, depth: usize) -> Result<Self> {
        if depth < 2 {
            return Err(Error::InvalidArgument("family depth must be at least 2".into()));
        }
        Ok(Problem { mu, depth, target: cylinder_weights(mu, depth)? })
    }

    fn potential(&self, x: &[f64]) -> Result<Potential> {
        Potential::new(self.depth, self.mu.alphabet().len(), x.to_vec())
    }

    fn evaluate(&self, x: &[f64]) -> Result<ObjectiveValue> {
        let g = self.potential(x)?;
        let (spectral, weights) = equilibrium_weights(&g, self.mu.alphabet())?;
        let energy = exec::NeumaierSum::of(self.target.iter().zip(x).map(|(a, b)| a * b));
        let gradient = weights.iter().zip(&self.target).map(|(eq, mu)| eq - mu).collect();
        Ok(ObjectiveValue { value: spectral.log_lambda - energy, gradient, log_lambda: spectral.log_lambda })
    }
}

/// `F(g) = −∫g dμ + log λ_g` and its analytic gradient over the entries of `g`.
pub fn objective(mu: &MarkovMeasure, g: &Potential) -> Result<ObjectiveValue> {
    if g.symbols() != mu.alphabet().len() {
        return Err(Error::InvalidArgument("potential and measure use different alphabets".into()));
    }
    Problem::new(mu, g.depth())?.evaluate(g.values())
}

/// Largest deviation of the analytic gradient from central differences,
/// relative to the largest gradient entry.
pub fn gradient_check(mu: &MarkovMeasure, g: &Potential, step: f64) -> Result<f64> {
    let problem = Problem::new(mu, g.depth())?;
    let analytic = problem.evaluate(g.values())?.gradient;
    let numeric = exec::map_indexed(analytic.len(), |i| -> Result<f64> {
        let mut x = g.values().to_vec();
        x[i] += step;
        let up = problem.evaluate(&x)?.value;
        x[i] -= 2.0 * step;
        let down = problem.evaluate(&x)?.value;
        Ok((up - down) / (2.0 * step))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let scale = analytic.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let err = analytic.iter().zip(&numeric).fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
    Ok(if scale > 0.0 { err / scale } else { err })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VariationalReport {
    pub h_v: f64,
    /// Best potential found, shifted so that `λ = 1`.
    pub minimizer: Potential,
    pub h_s: f64,
    pub gap: f64,
    /// `|hˢ(μ_g) + ∫g dμ_g − log λ_g|` at the minimizer.
    pub pressure_check: f64,
    pub iterations: usize,
    pub converged: bool,
}

struct Run {
    value: f64,
    x: Vec<f64>,
    iterations: usize,
    converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn descend(problem: &Problem, start: Vec<f64>, cfg: &OptimizationConfig) -> Result<Run> {
    const ARMIJO: f64 = 1e-4;
    let mut x = start;
    let mut current = problem.evaluate(&x)?;
    let mut step = 1.0;
    let mut previous: Option<(Vec<f64>, Vec<f64>)> = None;
    for it in 1..=cfg.max_iter {
        let grad = &current.gradient;
        let gnorm = grad.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        if gnorm <= cfg.grad_tol {
            return Ok(Run { value: current.value, x, iterations: it - 1, converged: true });
        }
        if let Some((px, pg)) = &previous {
            let s: Vec<f64> = x.iter().zip(px).map(|(a, b)| a - b).collect();
            let y: Vec<f64> = grad.iter().zip(pg).map(|(a, b)| a - b).collect();
            let sy = dot(&s, &y);
            if sy > 0.0 {
                step = (dot(&s, &s) / sy).clamp(1e-6, 1e6);
            }
        }
        let g2 = dot(grad, grad);
        let mut t = step;
        let accepted = loop {
            let trial: Vec<f64> = x.iter().zip(grad).map(|(a, b)| a - t * b).collect();
            if let Ok(next) = problem.evaluate(&trial) {
                if next.value <= current.value - ARMIJO * t * g2 {
                    break Some((trial, next));
                }
            }
            t *= 0.5;
            if t * gnorm < cfg.step_tol * 1e-3 {
                break None;
            }
        };
        let Some((trial, next)) = accepted else {
            // No representable decrease left: F is resolved to rounding, so
            // the gradient can only be resolved to about its square root.
            let converged = gnorm <= cfg.grad_tol.sqrt();
            return Ok(Run { value: current.value, x, iterations: it, converged });
        };
        let moved = t * gnorm;
        previous = Some((std::mem::replace(&mut x, trial), std::mem::replace(&mut current, next).gradient));
        if moved <= cfg.step_tol {
            return Ok(Run { value: current.value, x, iterations: it, converged: true });
        }
    }
    Ok(Run { value: current.value, x, iterations: cfg.max_iter, converged: false })
}

/// Numerical `hᵛ(μ)` over depth-`K` potentials by gradient descent with
/// backtracking; the first start is `g = 0`, the rest are random.
pub fn entropy_variational(mu: &MarkovMeasure, cfg: &OptimizationConfig) -> Result<VariationalReport> {
    cfg.validate()?;
    let problem = Problem::new(mu, cfg.family_depth)?;
    let m = mu.alphabet().len();
    let runs = exec::map_indexed(cfg.restarts, |i| {
        let start = if i == 0 {
            vec![0.0; problem.target.len()]
        } else {
            Potential::random(m, cfg.family_depth, 1.0, cfg.seed.wrapping_add(i as u64))?.values().to_vec()
        };
        descend(&problem, start, cfg)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let iterations = runs.iter().map(|r| r.iterations).sum();
    let best = runs
        .into_iter()
        .min_by(|a, b| a.value.total_cmp(&b.value))
        .expect("at least one start");

    let g = problem.potential(&best.x)?;
    let spectral = solve(&g, mu.alphabet())?;
    let minimizer = g.shifted(-spectral.log_lambda);
    let eq = MarkovMeasure::gibbs_from_normalized(&normalize(&g, &spectral)?, mu.alphabet())?;
    let pressure_check = (specific_entropy_markov(&eq, mu.alphabet())? + integrate_local(&eq, &g)?
        - spectral.log_lambda)
        .abs();
    let h_s = specific_entropy_markov(mu, mu.alphabet())?;
    Ok(VariationalReport {
        h_v: best.value,
        minimizer,
        h_s,
        gap: (best.value - h_s).abs(),
        pressure_check,
        iterations,
        converged: best.converged,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PressureCheck {
    pub log_lambda: f64,
    /// `hˢ(μ) + ∫f dμ` for each random trial.
    pub values: Vec<f64>,
    pub max_value: f64,
    /// `hˢ(μ_f) + ∫f dμ_f`.
    pub at_equilibrium: f64,
    pub equilibrium_residual: f64,
    /// Smallest `log λ_f − ∫f dμ − hˢ(μ)` over the trials.
    pub min_deficit: f64,
    /// Trials exceeding `log λ_f` by more than `1e-12`.
    pub violations: usize,
}

/// Checks `log λ_f = sup_μ {hˢ(μ) + ∫f dμ}` over random Markov measures
/// and the equilibrium state.
pub fn pressure_variational_check(
    f: &Potential,
    alphabet: &Alphabet,
    trials: usize,
    seed: u64,
) -> Result<PressureCheck> {
    let spectral = solve(f, alphabet)?;
    let memory = f.depth().saturating_sub(1).max(1);
    let values = exec::map_indexed(trials, |i| -> Result<f64> {
        let mu = MarkovMeasure::random_markov_with_memory(alphabet, memory, seed.wrapping_add(i as u64))?;
        Ok(specific_entropy_markov(&mu, alphabet)? + integrate_local(&mu, f)?)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let eq = MarkovMeasure::gibbs_from_normalized(&normalize(f, &spectral)?, alphabet)?;
    let at_equilibrium = specific_entropy_markov(&eq, alphabet)? + integrate_local(&eq, f)?;
    let max_value = values.iter().copied().fold(at_equilibrium, f64::max);
    let min_deficit = values.iter().map(|v| spectral.log_lambda - v).fold(f64::INFINITY, f64::min);
    let violations = values.iter().filter(|v| **v > spectral.log_lambda + 1e-12).count();
    Ok(PressureCheck {
        log_lambda: spectral.log_lambda,
        values,
        max_value,
        at_equilibrium,
        equilibrium_residual: (at_equilibrium - spectral.log_lambda).abs(),
        min_deficit,
        violations,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UniquenessReport {
    pub epsilon: f64,
    /// `h(μ_ε|μ_f)` per trial.
    pub rates: Vec<f64>,
    pub min_rate: f64,
    pub max_rate: f64,
    /// Rates at `ε/2` along the same perturbation directions.
    pub half_rates: Vec<f64>,
    /// Mean of `log₂(h(ε)/h(ε/2))`; `None` when undefined.
    pub fitted_order: Option<f64>,
    /// Trials with `h ≤ 0` although `μ_ε ≠ μ_f`.
    pub violations: usize,
    /// Trials passing the DLR test at `1e-10` while differing from `μ_f`.
    pub dlr_violations: usize,
}

/// Perturbs the transition law of `μ_f` in `trials` random directions
/// and evaluates the exact relative entropy rate.
pub fn uniqueness_probe(
    f: &Potential,
    alphabet: &Alphabet,
    trials: usize,
    epsilon: f64,
    seed: u64,
) -> Result<UniquenessReport> {
    let spectral = solve(f, alphabet)?;
    let normalized = normalize(f, &spectral)?;
    let eq = MarkovMeasure::gibbs_from_normalized(&normalized, alphabet)?;
    let rows = exec::map_indexed(trials, |i| -> Result<(f64, f64, bool, bool)> {
        let s = seed.wrapping_add(i as u64);
        let mu = eq.perturbed(epsilon, s)?;
        let half = eq.perturbed(epsilon / 2.0, s)?;
        let rate = relative_entropy_rate(&mu, f, &spectral)?.expect_finite("rate");
        let half_rate = relative_entropy_rate(&half, f, &spectral)?.expect_finite("rate");
        let distinct = pair_distance(&mu, &eq)? > 1e-8;
        let dlr_pass = dlr_check(&mu, &normalized, 2)? <= 1e-10;
        Ok((rate, half_rate, distinct && rate <= 0.0, distinct && dlr_pass))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let rates: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let half_rates: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let orders: Vec<f64> = rates
        .iter()
        .zip(&half_rates)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0)
        .map(|(a, b)| (a / b).log2())
        .collect();
    let fitted_order = (!orders.is_empty() && epsilon > 0.0).then(|| orders.iter().sum::<f64>() / orders.len() as f64);
    Ok(UniquenessReport {
        epsilon,
        min_rate: rates.iter().copied().fold(f64::INFINITY, f64::min),
        max_rate: rates.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        rates,
        half_rates,
        fitted_order,
        violations: rows.iter().filter(|r| r.2).count(),
        dlr_violations: rows.iter().filter(|r| r.3).count(),
    })
}
