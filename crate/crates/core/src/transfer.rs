//! The Ruelle operator of a depth-`k` potential and its maximal spectral
//! data.
//!
//! For a depth-`k` potential, `𝓛_f` maps functions of `r = k − 1`
//! coordinates to functions of `r` coordinates:
//!
//! ```text
//! (𝓛_f φ)(u) = Σ_a p_a exp(f(a u)) φ(a u₁ … u_{r−1})
//! ```
//!
//! The operator is stored as the kernel tensor `K[a u] = p_a exp(f(a u))`
//! over words of length `r + 1`.

use serde::{Deserialize, Serialize};

use crate::alphabet::Alphabet;
use crate::error::{Error, Result};
use crate::exec::NeumaierSum;
use crate::potential::Potential;
use crate::symbolic::word_count;

#[derive(Clone, Debug, PartialEq)]
pub struct TransferMatrix {
    order: usize,
    symbols: usize,
    kernel: Vec<f64>,
}

impl TransferMatrix {
    /// Builds `𝓛_f` for `f` on `alphabet`. Depth-1 potentials are treated
    /// as depth 2.
    pub fn build(f: &Potential, alphabet: &Alphabet) -> Result<Self> {
        let m = alphabet.len();
        if f.symbols() != m {
            return Err(Error::InvalidArgument(format!(
                "potential over {} symbols, alphabet has {m}",
                f.symbols()
            )));
        }
        let lifted;
        let f = if f.depth() == 1 {
            lifted = f.lift(2)?;
            &lifted
        } else {
            f
        };
        let order = f.depth() - 1;
        let n_states = word_count(m, order)?;
        let mut kernel = Vec::with_capacity(m * n_states);
        for a in 0..m {
            let p = alphabet.weight(a);
            for u in 0..n_states {
                let v = f.value_at_index(a * n_states + u);
                let e = p * v.exp();
                if !(e.is_finite() && e > 0.0) {
                    return Err(Error::Overflow { max_value: f.max_value().max(-f.min_value()) });
                }
                kernel.push(e);
            }
        }
        Ok(TransferMatrix { order, symbols: m, kernel })
    }

    /// Number of coordinates the operator's functions depend on.
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn symbols(&self) -> usize {
        self.symbols
    }

    /// Size of the index space `𝒜^r`.
    pub fn dim(&self) -> usize {
        self.kernel.len() / self.symbols
    }

    /// `p_a exp(f(w))` for the word `w = a u` with lexicographic index `i`.
    pub fn kernel(&self) -> &[f64] {
        &self.kernel
    }

    /// `𝓛φ`.
    pub fn apply(&self, phi: &[f64]) -> Vec<f64> {
        let dim = self.dim();
        assert_eq!(phi.len(), dim);
        let mut out = vec![0.0; dim];
        for a in 0..self.symbols {
            let row = &self.kernel[a * dim..(a + 1) * dim];
            for (u, k) in row.iter().enumerate() {
                out[u] += k * phi[(a * dim + u) / self.symbols];
            }
        }
        out
    }

    /// The adjoint `𝓛*ν` on measures over the index space.
    pub fn apply_transpose(&self, nu: &[f64]) -> Vec<f64> {
        let dim = self.dim();
        assert_eq!(nu.len(), dim);
        let mut out = vec![0.0; dim];
        for a in 0..self.symbols {
            let row = &self.kernel[a * dim..(a + 1) * dim];
            for (u, k) in row.iter().enumerate() {
                out[(a * dim + u) / self.symbols] += k * nu[u];
            }
        }
        out
    }

    /// `𝓛ⁿφ`.
    pub fn apply_n(&self, phi: &[f64], n: usize) -> Vec<f64> {
        let mut v = phi.to_vec();
        for _ in 0..n {
            v = self.apply(&v);
        }
        v
    }

    /// Dense matrix, row `u`, column `v`, so that `(𝓛φ)_u = Σ_v M[u][v] φ_v`.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let dim = self.dim();
        let mut m = vec![vec![0.0; dim]; dim];
        for a in 0..self.symbols {
            for u in 0..dim {
                m[u][(a * dim + u) / self.symbols] += self.kernel[a * dim + u];
            }
        }
        m
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RpfOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for RpfOptions {
    fn default() -> Self {
        RpfOptions { tol: 1e-13, max_iter: 100_000 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    /// `‖𝓛h − λh‖_∞ / (λ ‖h‖_∞)`.
    pub eigenfunction: f64,
    /// `‖𝓛*ν − λν‖₁ / λ`.
    pub eigenmeasure: f64,
    /// `|Σ h ν − 1|`.
    pub normalization: f64,
}

/// Maximal eigen-data `(λ_f, h_f, ν_f)` with `Σ ν = 1` and `Σ h ν = 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralData {
    pub lambda: f64,
    pub log_lambda: f64,
    pub h: Vec<f64>,
    pub nu: Vec<f64>,
    pub residuals: Residuals,
    pub iterations: usize,
    pub adjoint_iterations: usize,
    pub order: usize,
    pub symbols: usize,
}

impl SpectralData {
    /// The equilibrium marginal `h ν` on the index space.
    pub fn equilibrium_marginal(&self) -> Vec<f64> {
        self.h.iter().zip(&self.nu).map(|(h, n)| h * n).collect()
    }
}

/// Power iteration for the maximal eigenvalue of `M` and its left and right
/// eigenvectors.
pub fn rpf_solve(m: &TransferMatrix, options: RpfOptions) -> Result<SpectralData> {
    if !(options.tol > 0.0) {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    if let Some(k) = m.kernel.iter().find(|k| !(k.is_finite() && **k > 0.0)) {
        return Err(Error::ContractViolation(format!("transfer kernel entry {k} is not positive")));
    }
    let right = power_iteration(m.dim(), |v| m.apply(v), options)?;
    let left = power_iteration(m.dim(), |v| m.apply_transpose(v), options)?;

    let mut nu = left.vector;
    let total = NeumaierSum::of(nu.iter().copied());
    nu.iter_mut().for_each(|x| *x /= total);
    let mut h = right.vector;
    let pairing = dot(&h, &nu);
    h.iter_mut().for_each(|x| *x /= pairing);

    let lh = m.apply(&h);
    let lambda = dot(&lh, &nu);
    let h_sup = h.iter().copied().fold(0.0, f64::max);
    let eigenfunction = lh
        .iter()
        .zip(&h)
        .map(|(a, b)| (a - lambda * b).abs())
        .fold(0.0, f64::max)
        / (lambda * h_sup);
    let eigenmeasure = NeumaierSum::of(
        m.apply_transpose(&nu).iter().zip(&nu).map(|(a, b)| (a - lambda * b).abs()),
    ) / lambda;
    let normalization = (dot(&h, &nu) - 1.0).abs();

    Ok(SpectralData {
        lambda,
        log_lambda: lambda.ln(),
        h,
        nu,
        residuals: Residuals { eigenfunction, eigenmeasure, normalization },
        iterations: right.iterations,
        adjoint_iterations: left.iterations,
        order: m.order,
        symbols: m.symbols,
    })
}

/// Spectral data of `f` with default options.
pub fn solve(f: &Potential, alphabet: &Alphabet) -> Result<SpectralData> {
    rpf_solve(&TransferMatrix::build(f, alphabet)?, RpfOptions::default())
}

struct PowerResult {
    vector: Vec<f64>,
    iterations: usize,
}

fn power_iteration(
    dim: usize,
    apply: impl Fn(&[f64]) -> Vec<f64>,
    options: RpfOptions,
) -> Result<PowerResult> {
    // A change that stops halving for STALL steps sits at the rounding
    // floor; it is accepted when that floor is within FLOOR × tol.
    const STALL: usize = 200;
    const FLOOR: f64 = 1e3;
    let mut v = vec![1.0; dim];
    let mut previous = f64::NAN;
    let mut delta = f64::INFINITY;
    let mut best = f64::INFINITY;
    let mut since_best = 0;
    for it in 1..=options.max_iter {
        let mut w = apply(&v);
        let scale = w.iter().copied().fold(0.0, f64::max);
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::NonConvergence { iterations: it, residual: f64::INFINITY });
        }
        w.iter_mut().for_each(|x| *x /= scale);
        // Pointwise relative change; iterates stay strictly positive.
        delta = w.iter().zip(&v).map(|(a, b)| (a - b).abs() / b).fold(0.0, f64::max);
        let increment = (scale - previous).abs();
        previous = scale;
        v = w;
        if delta < 0.5 * best {
            best = delta;
            since_best = 0;
        } else {
            since_best += 1;
        }
        let converged = delta <= options.tol && increment <= options.tol * scale;
        let stalled = since_best >= STALL && best <= FLOOR * options.tol && increment <= FLOOR * options.tol * scale;
        if converged || stalled {
            return Ok(PowerResult { vector: v, iterations: it });
        }
    }
    Err(Error::NonConvergence { iterations: options.max_iter, residual: delta })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    NeumaierSum::of(a.iter().zip(b).map(|(x, y)| x * y))
}

/// `f̄ = f + log h − log h∘σ − log λ`, cohomologous to `f` with `𝓛_f̄ 1 = 1`.
pub fn normalize(f: &Potential, spectral: &SpectralData) -> Result<Potential> {
    if f.symbols() != spectral.symbols {
        return Err(Error::InvalidArgument("spectral data solved on another alphabet".into()));
    }
    let r = spectral.order;
    if f.depth() > r + 1 {
        return Err(Error::InvalidArgument(format!(
            "spectral data of order {r} cannot normalize a depth-{} potential",
            f.depth()
        )));
    }
    let f = f.lift(r + 1)?;
    let m = f.symbols();
    let dim = spectral.h.len();
    let log_h: Vec<f64> = spectral.h.iter().map(|x| x.ln()).collect();
    let values = (0..m * dim)
        .map(|w| {
            let head = w / m; // x₁ … x_r
            let tail = w % dim; // x₂ … x_{r+1}
            f.value_at_index(w) + log_h[head] - log_h[tail] - spectral.log_lambda
        })
        .collect();
    Potential::new(r + 1, m, values)
}

/// `max_u |𝓛_f 1 (u) − 1|`; zero exactly when `f` is normalized.
pub fn normalization_residual(f: &Potential, alphabet: &Alphabet) -> Result<f64> {
    let m = TransferMatrix::build(f, alphabet)?;
    Ok(m.apply(&vec![1.0; m.dim()])
        .iter()
        .map(|x| (x - 1.0).abs())
        .fold(0.0, f64::max))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadiusEstimate {
    pub n: usize,
    pub log_radius: f64,
    pub radius: f64,
    pub lambda: f64,
    /// `|radius − λ|`.
    pub gap: f64,
}

/// `‖𝓛ⁿ 1‖_∞^{1/n}`, accumulated in log space.
pub fn spectral_radius_estimate(f: &Potential, alphabet: &Alphabet, n: usize) -> Result<RadiusEstimate> {
    if n == 0 {
        return Err(Error::InvalidArgument("radius estimate needs n ≥ 1".into()));
    }
    let m = TransferMatrix::build(f, alphabet)?;
    let mut v = vec![1.0; m.dim()];
    let mut log_norm = 0.0;
    for _ in 0..n {
        v = m.apply(&v);
        let s = v.iter().copied().fold(0.0, f64::max);
        log_norm += s.ln();
        v.iter_mut().for_each(|x| *x /= s);
    }
    let log_radius = log_norm / n as f64;
    let radius = log_radius.exp();
    let lambda = rpf_solve(&m, RpfOptions::default())?.lambda;
    Ok(RadiusEstimate { n, log_radius, radius, lambda, gap: (radius - lambda).abs() })
}
