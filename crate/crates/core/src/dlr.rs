//! Finite-volume Gibbs kernels `γ_n(A|y) = 𝓛ⁿ_f̄(1_A)(σⁿy)` and DLR
//! consistency.
//!
//! For a normalized depth-`k` potential, `γ_n(·|y)` restricted to
//! `𝓕_{Λ_n}` gives the word `w ∈ 𝒜ⁿ` the weight
//! `∏ p_{w_i} · exp(S_n f̄(w y_{n+1} y_{n+2} …))`, which only reads the
//! boundary window `y_{n+1} … y_{n+k−1}`.

use crate::alphabet::Alphabet;
use crate::error::{Error, Result};
use crate::exec::{self, NeumaierSum};
use crate::measures::{cylinder_weights, CylinderMeasure, NORMALIZATION_CONTRACT_TOL};
use crate::potential::Potential;
use crate::symbolic::{decode_word, word_count, Sequence};
use crate::transfer::normalization_residual;

fn require_normalized(f: &Potential, alphabet: &Alphabet) -> Result<()> {
    let residual = normalization_residual(f, alphabet)?;
    if residual > NORMALIZATION_CONTRACT_TOL {
        return Err(Error::ContractViolation(format!(
            "kernel potential is not normalized (max |𝓛1 − 1| = {residual:e})"
        )));
    }
    Ok(())
}

/// `∏ p_{w_i} · exp(S_n f(w · tail))` with `n = |w|`; `tail` must hold at
/// least `k − 1` symbols.
pub fn gamma_weight(f: &Potential, alphabet: &Alphabet, word: &[usize], tail: &[usize]) -> f64 {
    let n = word.len();
    let k = f.depth();
    let mut coords = Vec::with_capacity(n + k - 1);
    coords.extend_from_slice(word);
    coords.extend_from_slice(&tail[..k - 1]);
    let prior: f64 = word.iter().map(|&a| alphabet.weight(a)).product();
    prior * f.birkhoff_sum_slice(&coords, n).exp()
}

/// The kernel `γ_n` materialized for every boundary window.
#[derive(Clone, Debug)]
pub struct GibbsKernel {
    n: usize,
    symbols: usize,
    window: usize,
    /// `weights[b][w]`: boundary window `b`, word `w`, both lexicographic.
    weights: Vec<Vec<f64>>,
}

impl GibbsKernel {
    pub fn new(normalized: &Potential, alphabet: &Alphabet, n: usize) -> Result<Self> {
        require_normalized(normalized, alphabet)?;
        let m = alphabet.len();
        let window = normalized.depth() - 1;
        let n_words = word_count(m, n)?;
        let n_windows = word_count(m, window)?;
        word_count(m, n + window)?;
        let weights = (0..n_windows)
            .map(|b| {
                let mut tail = vec![0; window];
                decode_word(b, m, &mut tail);
                exec::map_chunks(n_words, |range| {
                    let mut word = vec![0; n];
                    range
                        .map(|i| {
                            decode_word(i, m, &mut word);
                            gamma_weight(normalized, alphabet, &word, &tail)
                        })
                        .collect::<Vec<_>>()
                })
                .into_iter()
                .flatten()
                .collect()
            })
            .collect();
        Ok(GibbsKernel { n, symbols: m, window, weights })
    }

    pub fn volume(&self) -> usize {
        self.n
    }

    /// Number of boundary coordinates the kernel reads.
    pub fn window(&self) -> usize {
        self.window
    }

    /// `γ_n(·|y)` on words of length `n`.
    pub fn weights_for(&self, y: &Sequence) -> &[f64] {
        let b = (0..self.window).fold(0, |acc, i| acc * self.symbols + y.at(self.n + i));
        &self.weights[b]
    }

    /// `γ_n(·|y)` for the boundary window with lexicographic index `b`.
    pub fn weights_for_window(&self, b: usize) -> &[f64] {
        &self.weights[b]
    }

    /// `max_y |γ_n(Ω|y) − 1|`.
    pub fn properness_residual(&self) -> f64 {
        self.weights
            .iter()
            .map(|w| (NeumaierSum::of(w.iter().copied()) - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// `γ_n(·|y)` as a probability vector over `𝒜ⁿ`.
pub fn gamma(normalized: &Potential, alphabet: &Alphabet, n: usize, y: &Sequence) -> Result<Vec<f64>> {
    require_normalized(normalized, alphabet)?;
    y.check_alphabet(alphabet.len())?;
    let m = alphabet.len();
    let n_words = word_count(m, n)?;
    let tail = y.window(n, normalized.depth() - 1);
    let chunks = exec::map_chunks(n_words, |range| {
        let mut word = vec![0; n];
        range
            .map(|i| {
                decode_word(i, m, &mut word);
                gamma_weight(normalized, alphabet, &word, &tail)
            })
            .collect::<Vec<_>>()
    });
    Ok(chunks.into_iter().flatten().collect())
}

/// `μγ_n = ∫ γ_n(·|y) dμ(y)` on `𝓕_{Λ_n}`.
///
/// The boundary window `y_{n+1} … y_{n+k−1}` is distributed under `μ` like
/// the first `k − 1` coordinates, by shift invariance.
pub fn mu_gamma<M: CylinderMeasure + ?Sized>(measure: &M, normalized: &Potential, n: usize) -> Result<Vec<f64>> {
    let alphabet = measure.alphabet();
    let kernel = GibbsKernel::new(normalized, alphabet, n)?;
    let boundary = cylinder_weights(measure, kernel.window)?;
    let n_words = kernel.weights[0].len();
    let mut out = vec![NeumaierSum::default(); n_words];
    for (b, mu_b) in boundary.iter().enumerate() {
        for (acc, g) in out.iter_mut().zip(kernel.weights_for_window(b)) {
            acc.add(mu_b * g);
        }
    }
    Ok(out.iter().map(NeumaierSum::value).collect())
}

/// Total variation distance between `μγ_n` and `μ` on `𝓕_{Λ_n}`.
pub fn dlr_check<M: CylinderMeasure + ?Sized>(measure: &M, normalized: &Potential, n: usize) -> Result<f64> {
    let mixed = mu_gamma(measure, normalized, n)?;
    let own = cylinder_weights(measure, n)?;
    Ok(0.5 * NeumaierSum::of(mixed.iter().zip(&own).map(|(a, b)| (a - b).abs())))
}

/// Largest change of `∫ φ dγ_n(·|y)` between boundaries that agree on
/// `y_{n+1} … y_{n+probe_depth}`.
pub fn quasilocality_gap(
    normalized: &Potential,
    alphabet: &Alphabet,
    n: usize,
    observable: &Potential,
    probe_depth: usize,
) -> Result<f64> {
    let d = observable.depth();
    if d > n {
        return Err(Error::InvalidArgument(format!(
            "observable of depth {d} does not live inside a volume of size {n}"
        )));
    }
    if observable.symbols() != alphabet.len() {
        return Err(Error::InvalidArgument("observable over another alphabet".into()));
    }
    let kernel = GibbsKernel::new(normalized, alphabet, n)?;
    if probe_depth >= kernel.window {
        return Ok(0.0);
    }
    let m = alphabet.len();
    // Words sharing their first d symbols form blocks of m^{n-d}.
    let block = m.pow((n - d) as u32);
    let expectations: Vec<f64> = kernel
        .weights
        .iter()
        .map(|w| NeumaierSum::of(w.iter().enumerate().map(|(i, g)| g * observable.value_at_index(i / block))))
        .collect();
    let group = m.pow((kernel.window - probe_depth) as u32);
    Ok(expectations
        .chunks(group)
        .map(|c| {
            let (lo, hi) = c
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
            hi - lo
        })
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::MarkovMeasure;
    use crate::transfer::{normalize, solve};

    fn normalized(f: &Potential, a: &Alphabet) -> Potential {
        normalize(f, &solve(f, a).unwrap()).unwrap()
    }

    #[test]
    fn gamma_of_zero_potential_is_product() {
        let a = Alphabet::finite_with_weights(&[0.2, 0.8]).unwrap();
        let zero = Potential::constant(2, 0.0).unwrap().lift(2).unwrap();
        for y in [Sequence::constant(0), Sequence::constant(1)] {
            let g = gamma(&zero, &a, 3, &y).unwrap();
            let p = cylinder_weights(&MarkovMeasure::product_measure(&a), 3).unwrap();
            for (x, q) in g.iter().zip(&p) {
                assert!((x - q).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn gamma_ising_single_site() {
        let a = Alphabet::uniform_finite(2).unwrap();
        let bar = normalized(&Potential::ising(1.0).unwrap(), &a);
        let g = gamma(&bar, &a, 1, &Sequence::constant(0)).unwrap();
        let c = 1f64.cosh();
        assert!((g[0] - 1f64.exp() / (2.0 * c)).abs() < 1e-14);
        assert!((g[0] - 0.880797).abs() < 1e-6);
        assert!((g[1] - 0.119203).abs() < 1e-6);
    }

    #[test]
    fn gamma_is_proper() {
        let a = Alphabet::finite_with_weights(&[1.0, 2.0, 3.0]).unwrap();
        for depth in [2, 3] {
            let bar = normalized(&Potential::random(3, depth, 1.5, 2).unwrap(), &a);
            let y = Sequence::new(vec![2, 1], vec![0, 1]).unwrap();
            for n in 1..5 {
                let s: f64 = gamma(&bar, &a, n, &y).unwrap().iter().sum();
                assert!((s - 1.0).abs() < 1e-12);
                assert!(GibbsKernel::new(&bar, &a, n).unwrap().properness_residual() < 1e-12);
            }
        }
    }

    #[test]
    fn gamma_rejects_unnormalized() {
        let a = Alphabet::uniform_finite(2).unwrap();
        let err = gamma(&Potential::ising(1.0).unwrap(), &a, 2, &Sequence::constant(0)).unwrap_err();
        assert!(matches!(err, Error::ContractViolation(_)));
    }

    #[test]
    fn mu_gamma_examples() {
        let a = Alphabet::uniform_finite(2).unwrap();
        let zero = Potential::constant(2, 0.0).unwrap().lift(2).unwrap();
        let rnd = MarkovMeasure::random_markov(&a, 4).unwrap();
        let mg = mu_gamma(&rnd, &zero, 3).unwrap();
        assert!(mg.iter().all(|x| (x - 0.125).abs() < 1e-15));

        let bar = normalized(&Potential::ising(1.0).unwrap(), &a);
        let gibbs = MarkovMeasure::gibbs_from_normalized(&bar, &a).unwrap();
        let mg = mu_gamma(&gibbs, &bar, 4).unwrap();
        let own = cylinder_weights(&gibbs, 4).unwrap();
        for (x, y) in mg.iter().zip(&own) {
            assert!((x - y).abs() < 1e-13);
        }

        let p = MarkovMeasure::product_measure(&a);
        assert!(dlr_check(&p, &bar, 2).unwrap() > 0.01);
    }

    #[test]
    fn dlr_examples() {
        let a = Alphabet::uniform_finite(2).unwrap();
        let bar = normalized(&Potential::ising(1.0).unwrap(), &a);
        let gibbs = MarkovMeasure::gibbs_from_normalized(&bar, &a).unwrap();
        for n in 1..=6 {
            assert!(dlr_check(&gibbs, &bar, n).unwrap() <= 1e-12);
        }
        let zero = Potential::constant(2, 0.0).unwrap().lift(2).unwrap();
        let p = MarkovMeasure::product_measure(&a);
        assert!(dlr_check(&p, &zero, 3).unwrap() < 1e-15);
    }

    #[test]
    fn quasilocality_examples() {
        let a = Alphabet::finite_with_weights(&[1.0, 2.0]).unwrap();
        let phi = Potential::random(2, 2, 1.0, 6).unwrap();

        let bar2 = normalized(&Potential::ising(1.0).unwrap(), &a);
        assert!(quasilocality_gap(&bar2, &a, 3, &phi, 0).unwrap() > 0.0);
        assert_eq!(quasilocality_gap(&bar2, &a, 3, &phi, 1).unwrap(), 0.0);

        let bar3 = normalized(&Potential::random(2, 3, 1.0, 7).unwrap(), &a);
        assert!(quasilocality_gap(&bar3, &a, 3, &phi, 1).unwrap() > 1e-6);
        assert_eq!(quasilocality_gap(&bar3, &a, 3, &phi, 2).unwrap(), 0.0);

        let zero = Potential::constant(2, 0.0).unwrap().lift(3).unwrap();
        for probe in 0..3 {
            assert!(quasilocality_gap(&zero, &a, 3, &phi, probe).unwrap() < 1e-15);
        }
        assert!(quasilocality_gap(&bar2, &a, 1, &phi, 0).is_err());
    }
}
