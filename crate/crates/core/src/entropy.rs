//! Finite-volume relative entropies, specific entropy and the relative
//! entropy rate against a Gibbs measure.
//!
//! `𝓗_n(μ|ν) = Σ_{|w|=n} μ[w] log(μ[w]/ν[w])` (`0 log 0 = 0`, `+∞` when
//! `μ[w] > 0 = ν[w]`), `𝓗_n(μ) = −𝓗_n(μ|𝐩)` and
//! `hˢ(μ) = lim 𝓗_n(μ)/n`.

use serde::Serialize;

use crate::alphabet::Alphabet;
use crate::dlr::gamma_weight;
use crate::error::{Error, Result};
use crate::exec::{self, NeumaierSum};
use crate::extended::ExtendedReal;
use crate::measures::{integrate_local, CylinderMeasure, MarkovMeasure, NORMALIZATION_CONTRACT_TOL};
use crate::potential::Potential;
use crate::symbolic::{decode_word, word_count, Sequence};
use crate::transfer::{normalization_residual, SpectralData};

/// Finite-volume sequence `n ↦ H_n` with rates and affineness residuals.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EntropyReport {
    pub n_values: Vec<usize>,
    pub h_n: Vec<ExtendedReal>,
    pub rates: Vec<ExtendedReal>,
    /// Closed-form limit, when one is available.
    pub closed_form: Option<f64>,
    /// `|H_n − 2H_{n−1} + H_{n−2}|` wherever the sequence must be affine.
    pub identity_residuals: Vec<Option<f64>>,
    /// `H_{n_max} − H_{n_max−1}`.
    pub extrapolated_limit: ExtendedReal,
}

impl EntropyReport {
    fn from_sequence(h_n: Vec<ExtendedReal>, affine_from: usize, closed_form: Option<f64>) -> Self {
        let n_values: Vec<usize> = (1..=h_n.len()).collect();
        let rates = h_n.iter().zip(&n_values).map(|(h, n)| h.per(*n)).collect();
        let identity_residuals = (0..h_n.len())
            .map(|i| {
                let n = i + 1;
                if i < 2 || n - 2 < affine_from {
                    return None;
                }
                match (h_n[i].finite(), h_n[i - 1].finite(), h_n[i - 2].finite()) {
                    (Some(a), Some(b), Some(c)) => Some((a - 2.0 * b + c).abs()),
                    _ => None,
                }
            })
            .collect();
        let last = h_n.len() - 1;
        let extrapolated_limit = h_n[last].minus(h_n[last - 1]).unwrap_or(h_n[last]);
        EntropyReport { n_values, h_n, rates, closed_form, identity_residuals, extrapolated_limit }
    }

    /// Largest affineness residual, zero if none applies.
    pub fn max_residual(&self) -> f64 {
        self.identity_residuals.iter().flatten().copied().fold(0.0, f64::max)
    }

    /// Increments `H_n − H_{n−1}`, finite entries only.
    pub fn increments(&self) -> Vec<f64> {
        self.h_n
            .windows(2)
            .filter_map(|w| w[1].minus(w[0]).and_then(ExtendedReal::finite))
            .collect()
    }
}

/// `𝓗_n(μ|ν)` by exhaustive enumeration of `𝒜ⁿ`.
pub fn relative_entropy_volume<M, N>(mu: &M, nu: &N, n: usize) -> Result<ExtendedReal>
where
    M: CylinderMeasure + ?Sized,
    N: CylinderMeasure + ?Sized,
{
    let m = mu.alphabet().len();
    if nu.alphabet().len() != m {
        return Err(Error::InvalidArgument("measures over different alphabets".into()));
    }
    let count = word_count(m, n)?;
    let chunks = exec::map_chunks(count, |range| {
        let mut word = vec![0; n];
        let mut acc = NeumaierSum::default();
        let mut infinite = false;
        for i in range {
            decode_word(i, m, &mut word);
            let a = mu.cylinder_weight(&word);
            if a <= 0.0 {
                continue;
            }
            let b = nu.cylinder_weight(&word);
            if b <= 0.0 {
                infinite = true;
                continue;
            }
            acc.add(a * (a / b).ln());
        }
        (acc.value(), infinite)
    });
    if chunks.iter().any(|(_, inf)| *inf) {
        return Ok(ExtendedReal::PlusInfinity);
    }
    Ok(ExtendedReal::Finite(NeumaierSum::of(chunks.into_iter().map(|(s, _)| s))))
}

/// Product of a priori weights, seen as a cylinder measure.
struct Product<'a>(&'a Alphabet);

impl CylinderMeasure for Product<'_> {
    fn alphabet(&self) -> &Alphabet {
        self.0
    }

    fn cylinder_weight(&self, word: &[usize]) -> f64 {
        word.iter().map(|&a| self.0.weight(a)).product()
    }
}

/// `𝓗_n(μ) = −𝓗_n(μ | 𝐩)`, always `≤ 0`.
pub fn volume_entropy<M: CylinderMeasure + ?Sized>(mu: &M, alphabet: &Alphabet, n: usize) -> Result<ExtendedReal> {
    Ok(-relative_entropy_volume(mu, &Product(alphabet), n)?)
}

/// `𝓗_n(μ)/n` for `n = 1 … n_max` and the increment extrapolation of
/// `hˢ(μ)`.
pub fn specific_entropy_limit<M: CylinderMeasure + ?Sized>(
    mu: &M,
    alphabet: &Alphabet,
    n_max: usize,
) -> Result<EntropyReport> {
    if n_max < 2 {
        return Err(Error::InvalidArgument("need n_max ≥ 2 to extrapolate".into()));
    }
    let h_n = (1..=n_max)
        .map(|n| volume_entropy(mu, alphabet, n))
        .collect::<Result<Vec<_>>>()?;
    let markov = mu.as_markov();
    let affine_from = markov.map_or(1, MarkovMeasure::memory);
    let closed_form = markov.map(|mu| specific_entropy_markov(mu, alphabet)).transpose()?;
    let mut report = EntropyReport::from_sequence(h_n, affine_from, closed_form);
    if report.h_n.iter().any(|h| !h.is_finite()) {
        report.extrapolated_limit = ExtendedReal::MinusInfinity;
    }
    Ok(report)
}

/// Closed-form `hˢ(μ) = −Σ μ[a u] log(μ[a u] / (p_a μ[u]))` for a Markov
/// measure of memory `r` (`|u| = r`).
pub fn specific_entropy_markov(mu: &MarkovMeasure, alphabet: &Alphabet) -> Result<f64> {
    let m = alphabet.len();
    if mu.alphabet().len() != m {
        return Err(Error::InvalidArgument("measure and alphabet differ in size".into()));
    }
    let n_blocks = mu.marginal().len();
    let marginal = mu.marginal();
    let sum = NeumaierSum::of(mu.joint().iter().enumerate().filter(|(_, j)| **j > 0.0).map(|(w, j)| {
        let a = w / n_blocks;
        j * (j / (alphabet.weight(a) * marginal[w % n_blocks])).ln()
    }));
    Ok(-sum)
}

/// `h(μ|μ_f̄) = log λ_f − ∫ f dμ − hˢ(μ)`.
pub fn relative_entropy_rate(mu: &MarkovMeasure, f: &Potential, spectral: &SpectralData) -> Result<ExtendedReal> {
    if f.symbols() != spectral.symbols || f.symbols() != mu.alphabet().len() {
        return Err(Error::InvalidArgument("potential, spectral data and measure disagree on the alphabet".into()));
    }
    let energy = integrate_local(mu, f)?;
    let hs = specific_entropy_markov(mu, mu.alphabet())?;
    Ok(ExtendedReal::Finite(spectral.log_lambda - energy - hs))
}

/// `𝓗_n(μ|ν)/n` for `n = 1 … n_max`, extrapolated by the last increment.
pub fn relative_entropy_rate_empirical<M, N>(mu: &M, nu: &N, n_max: usize) -> Result<EntropyReport>
where
    M: CylinderMeasure + ?Sized,
    N: CylinderMeasure + ?Sized,
{
    if n_max < 2 {
        return Err(Error::InvalidArgument("need n_max ≥ 2 to extrapolate".into()));
    }
    let h_n = (1..=n_max)
        .map(|n| relative_entropy_volume(mu, nu, n))
        .collect::<Result<Vec<_>>>()?;
    let affine_from = match (mu.as_markov(), nu.as_markov()) {
        (Some(a), Some(b)) => a.memory().max(b.memory()),
        _ => n_max,
    };
    Ok(EntropyReport::from_sequence(h_n, affine_from, None))
}

/// `∫ S_n f̄(x_{Λ_n} y_{Λ_nᶜ}) dμ(x)`.
pub fn boundary_energy<M: CylinderMeasure + ?Sized>(
    mu: &M,
    normalized: &Potential,
    y: &Sequence,
    n: usize,
) -> Result<f64> {
    let m = mu.alphabet().len();
    let count = word_count(m, n)?;
    let k = normalized.depth();
    let tail = y.window(n, k - 1);
    Ok(exec::sum_indexed(count, |i| {
        let mut coords = vec![0; n + k - 1];
        decode_word(i, m, &mut coords[..n]);
        coords[n..].copy_from_slice(&tail);
        let weight = mu.cylinder_weight(&coords[..n]);
        if weight == 0.0 {
            0.0
        } else {
            weight * normalized.birkhoff_sum_slice(&coords, n)
        }
    }))
}

/// Both sides of `𝓗_n(μ|γ_n(·|y)) = −𝓗_n(μ) − ∫ S_n f̄(x_{Λ_n} y_{Λ_nᶜ}) dμ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KernelIdentity {
    pub n: usize,
    pub lhs: ExtendedReal,
    pub rhs: ExtendedReal,
    pub residual: f64,
}

/// Evaluates the kernel entropy identity: the left side from the kernel
/// weights, the right side from the volume entropy and the boundary
/// Birkhoff integral.
pub fn kernel_entropy_identity<M: CylinderMeasure + ?Sized>(
    mu: &M,
    normalized: &Potential,
    y: &Sequence,
    n: usize,
) -> Result<KernelIdentity> {
    let alphabet = mu.alphabet();
    let m = alphabet.len();
    if normalized.symbols() != m {
        return Err(Error::InvalidArgument("potential and measure use different alphabets".into()));
    }
    y.check_alphabet(m)?;
    let nres = normalization_residual(normalized, alphabet)?;
    if nres > NORMALIZATION_CONTRACT_TOL {
        return Err(Error::ContractViolation(format!(
            "kernel potential is not normalized (max |𝓛1 − 1| = {nres:e})"
        )));
    }
    let count = word_count(m, n)?;
    let tail = y.window(n, normalized.depth() - 1);
    let chunks = exec::map_chunks(count, |range| {
        let mut word = vec![0; n];
        let mut acc = NeumaierSum::default();
        let mut infinite = false;
        for i in range {
            decode_word(i, m, &mut word);
            let a = mu.cylinder_weight(&word);
            if a <= 0.0 {
                continue;
            }
            let g = gamma_weight(normalized, alphabet, &word, &tail);
            if g <= 0.0 {
                infinite = true;
                continue;
            }
            acc.add(a * (a / g).ln());
        }
        (acc.value(), infinite)
    });
    let lhs = if chunks.iter().any(|(_, inf)| *inf) {
        ExtendedReal::PlusInfinity
    } else {
        ExtendedReal::Finite(NeumaierSum::of(chunks.into_iter().map(|(s, _)| s)))
    };
    let energy = boundary_energy(mu, normalized, y, n)?;
    let rhs = (-volume_entropy(mu, alphabet, n)?).offset(-energy);
    let residual = match (lhs, rhs) {
        (ExtendedReal::Finite(a), ExtendedReal::Finite(b)) => (a - b).abs(),
        (a, b) if a == b => 0.0,
        _ => f64::INFINITY,
    };
    Ok(KernelIdentity { n, lhs, rhs, residual })
}
