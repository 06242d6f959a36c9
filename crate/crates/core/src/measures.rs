//! Shift-invariant measures on `Ω` given by their cylinder weights.
//!
//! [`MarkovMeasure`] covers the product measure `𝐩 = ∏ p`, Gibbs measures
//! of normalized potentials and random test measures. A measure of memory
//! `r` is determined by its block law on `𝒜^r` and its `(r+1)`-cylinder
//! weights; pair-Markov measures are memory 1.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize, Serializer};

use crate::alphabet::Alphabet;
use crate::error::{Error, Result};
use crate::exec::{self, NeumaierSum};
use crate::potential::Potential;
use crate::symbolic::{decode_word, word_count, word_index, Word};
use crate::transfer::{normalization_residual, TransferMatrix};

/// Tolerance accepted when validating externally supplied measures.
const VALIDATION_TOL: f64 = 1e-9;
/// Fixed-point tolerance for stationary laws.
const STATIONARY_TOL: f64 = 1e-14;
const STATIONARY_MAX_ITER: usize = 1_000_000;
/// How far `𝓛_f̄ 1` may stray from 1 before a potential counts as
/// non-normalized.
pub const NORMALIZATION_CONTRACT_TOL: f64 = 1e-9;

/// Anything that assigns probabilities to cylinders `[w₁ … w_n]`.
pub trait CylinderMeasure: Sync {
    fn alphabet(&self) -> &Alphabet;

    fn cylinder_weight(&self, word: &[usize]) -> f64;

    /// The measure as a [`MarkovMeasure`], when it is one.
    fn as_markov(&self) -> Option<&MarkovMeasure> {
        None
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MarkovMeasure {
    alphabet: Alphabet,
    memory: usize,
    /// Block law on `𝒜^r`.
    marginal: Vec<f64>,
    /// `μ[u b]` over `𝒜^{r+1}`.
    joint: Vec<f64>,
    /// `μ[u b] / μ[u]`, zero where `μ[u] = 0`.
    transition: Vec<f64>,
}

/// JSON form `{memory, pi, pair}`: `pi` is the block law on `𝒜^r` and
/// `pair[u][b] = μ[u b]`. For memory 1 these are the single-site marginal
/// and the pair-cylinder weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureRecord {
    pub memory: usize,
    pub pi: Vec<f64>,
    pub pair: Vec<Vec<f64>>,
}

impl Serialize for MarkovMeasure {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_record().serialize(serializer)
    }
}

impl MarkovMeasure {
    /// Builds a measure from its `(r+1)`-cylinder weights, checking
    /// normalization and both consistency conditions.
    pub fn from_joint(alphabet: &Alphabet, memory: usize, joint: Vec<f64>) -> Result<Self> {
        if memory == 0 {
            return Err(Error::InvalidArgument("Markov memory must be at least 1".into()));
        }
        let m = alphabet.len();
        let n = word_count(m, memory + 1)?;
        if joint.len() != n {
            return Err(Error::InvalidArgument(format!(
                "memory-{memory} measure over {m} symbols needs {n} joint weights, got {}",
                joint.len()
            )));
        }
        if joint.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(Error::InvalidArgument("cylinder weights must be finite and nonnegative".into()));
        }
        let total = NeumaierSum::of(joint.iter().copied());
        if (total - 1.0).abs() > VALIDATION_TOL {
            return Err(Error::InvalidArgument(format!("cylinder weights sum to {total}")));
        }
        let measure = Self::assemble(alphabet.clone(), memory, joint);
        let shift = measure.shift_invariance_residual();
        if shift > VALIDATION_TOL {
            return Err(Error::InvalidArgument(format!(
                "cylinder weights are not shift invariant (residual {shift:e})"
            )));
        }
        Ok(measure)
    }

    pub fn from_record(alphabet: &Alphabet, record: &MeasureRecord) -> Result<Self> {
        let joint: Vec<f64> = record.pair.iter().flatten().copied().collect();
        let measure = Self::from_joint(alphabet, record.memory, joint)?;
        let drift = measure
            .marginal
            .iter()
            .zip(&record.pi)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if record.pi.len() != measure.marginal.len() || drift > VALIDATION_TOL {
            return Err(Error::InvalidArgument("pi does not match the pair weights".into()));
        }
        Ok(measure)
    }

    pub fn to_record(&self) -> MeasureRecord {
        let m = self.alphabet.len();
        MeasureRecord {
            memory: self.memory,
            pi: self.marginal.clone(),
            pair: self.joint.chunks(m).map(<[f64]>::to_vec).collect(),
        }
    }

    fn assemble(alphabet: Alphabet, memory: usize, joint: Vec<f64>) -> Self {
        let m = alphabet.len();
        let marginal: Vec<f64> = joint.chunks(m).map(|c| NeumaierSum::of(c.iter().copied())).collect();
        let transition = joint
            .iter()
            .enumerate()
            .map(|(w, j)| {
                let mu = marginal[w / m];
                if mu > 0.0 {
                    j / mu
                } else {
                    0.0
                }
            })
            .collect();
        MarkovMeasure { alphabet, memory, marginal, joint, transition }
    }

    /// The a priori product measure `𝐩`.
    pub fn product_measure(alphabet: &Alphabet) -> Self {
        let p = alphabet.weights();
        let joint = p.iter().flat_map(|a| p.iter().map(move |b| a * b)).collect();
        let mut measure = Self::assemble(alphabet.clone(), 1, joint);
        measure.marginal = p.to_vec();
        measure
    }

    /// Stationary Markov measure whose transition law from block `u` is
    /// proportional to `weights[u b]`.
    pub fn from_transition_weights(alphabet: &Alphabet, memory: usize, weights: &[f64]) -> Result<Self> {
        if memory == 0 {
            return Err(Error::InvalidArgument("Markov memory must be at least 1".into()));
        }
        let m = alphabet.len();
        let n_blocks = word_count(m, memory)?;
        if weights.len() != n_blocks * m {
            return Err(Error::InvalidArgument("transition weights have the wrong size".into()));
        }
        let mut kernel = vec![0.0; weights.len()];
        for (u, row) in weights.chunks(m).enumerate() {
            let total = NeumaierSum::of(row.iter().copied());
            if !(total > 0.0) || row.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
                return Err(Error::InvalidArgument(format!("transition row {u} is not a positive law")));
            }
            for (b, x) in row.iter().enumerate() {
                kernel[u * m + b] = x / total;
            }
        }
        // π(v) = Σ_u π(u) P(v_last | u) over the blocks u leading to v.
        let step = |pi: &[f64]| {
            let mut next = vec![0.0; n_blocks];
            for (w, k) in kernel.iter().enumerate() {
                next[w % n_blocks] += pi[w / m] * k;
            }
            next
        };
        let pi = stationary(n_blocks, step)?;
        let joint = kernel.iter().enumerate().map(|(w, k)| pi[w / m] * k).collect();
        Ok(Self::assemble(alphabet.clone(), memory, joint))
    }

    /// Random pair-Markov measure with full support.
    pub fn random_markov(alphabet: &Alphabet, seed: u64) -> Result<Self> {
        Self::random_markov_with_memory(alphabet, 1, seed)
    }

    /// Random memory-`r` measure: transition weights `exp(U[-2, 2])`.
    pub fn random_markov_with_memory(alphabet: &Alphabet, memory: usize, seed: u64) -> Result<Self> {
        let n = word_count(alphabet.len(), memory + 1)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let weights: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0f64).exp()).collect();
        Self::from_transition_weights(alphabet, memory, &weights)
    }

    /// Multiplies each transition probability by `1 + ε ξ` with
    /// `ξ ~ U[-1, 1]` drawn from `seed`, renormalizes, and returns the
    /// stationary measure of the perturbed chain. The draws depend only on
    /// `seed`, so different `ε` probe the same direction.
    pub fn perturbed(&self, epsilon: f64, seed: u64) -> Result<Self> {
        if !(0.0..1.0).contains(&epsilon) {
            return Err(Error::InvalidArgument(format!("perturbation scale {epsilon} not in [0, 1)")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let weights: Vec<f64> = self
            .transition
            .iter()
            .map(|t| t * (1.0 + epsilon * rng.gen_range(-1.0..=1.0)))
            .collect();
        Self::from_transition_weights(&self.alphabet, self.memory, &weights)
    }

    /// The unique `ν` with `𝓛*_f̄ ν = ν` for a normalized `f̄`.
    ///
    /// Cylinder weights satisfy `μ[a w] = p_a exp(f̄(a w…)) μ[w]`.
    pub fn gibbs_from_normalized(normalized: &Potential, alphabet: &Alphabet) -> Result<Self> {
        let residual = normalization_residual(normalized, alphabet)?;
        if residual > NORMALIZATION_CONTRACT_TOL {
            return Err(Error::ContractViolation(format!(
                "potential is not normalized (max |𝓛1 − 1| = {residual:e})"
            )));
        }
        let op = TransferMatrix::build(normalized, alphabet)?;
        let nu = stationary(op.dim(), |v| op.apply_transpose(v))?;
        let dim = op.dim();
        let joint = op.kernel().iter().enumerate().map(|(w, k)| k * nu[w % dim]).collect();
        Ok(Self::assemble(alphabet.clone(), op.order(), joint))
    }

    pub fn memory(&self) -> usize {
        self.memory
    }

    /// Block law on `𝒜^r`.
    pub fn marginal(&self) -> &[f64] {
        &self.marginal
    }

    /// `(r+1)`-cylinder weights in lexicographic order.
    pub fn joint(&self) -> &[f64] {
        &self.joint
    }

    /// Forward transition probabilities `μ[u b] / μ[u]`.
    pub fn transition(&self) -> &[f64] {
        &self.transition
    }

    /// Single-site marginal.
    pub fn pi(&self) -> Vec<f64> {
        (0..self.alphabet.len()).map(|a| self.cylinder_weight(&[a])).collect()
    }

    /// `μ[a b]`.
    pub fn pair(&self, a: usize, b: usize) -> f64 {
        self.cylinder_weight(&[a, b])
    }

    /// Largest gap between the two ways of marginalizing the joint law:
    /// `|Σ_a μ[a u] − μ[u]|`.
    pub fn shift_invariance_residual(&self) -> f64 {
        let n_blocks = self.marginal.len();
        let mut back = vec![NeumaierSum::default(); n_blocks];
        for (w, j) in self.joint.iter().enumerate() {
            back[w % n_blocks].add(*j);
        }
        back.iter()
            .zip(&self.marginal)
            .map(|(b, mu)| (b.value() - mu).abs())
            .fold(0.0, f64::max)
    }

    /// Word of length `n` drawn with probability `μ[w]`.
    pub fn sample_path(&self, n: usize, seed: u64) -> Word {
        let m = self.alphabet.len();
        let r = self.memory;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(n.max(r));
        let block = draw(&mut rng, &self.marginal);
        let mut buf = vec![0; r];
        decode_word(block, m, &mut buf);
        out.extend_from_slice(&buf);
        let n_blocks = self.marginal.len();
        let mut current = block;
        while out.len() < n {
            let b = draw(&mut rng, &self.transition[current * m..(current + 1) * m]);
            out.push(b);
            current = (current * m + b) % n_blocks;
        }
        out.truncate(n);
        Word(out)
    }
}

fn draw(rng: &mut ChaCha8Rng, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.gen::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if u < *w {
            return i;
        }
        u -= w;
    }
    weights.iter().rposition(|w| *w > 0.0).unwrap_or(0)
}

/// Fixed point of a mass-preserving positive map, started from the uniform
/// law and renormalized each step.
fn stationary(dim: usize, step: impl Fn(&[f64]) -> Vec<f64>) -> Result<Vec<f64>> {
    let mut v = vec![1.0 / dim as f64; dim];
    let mut delta = f64::INFINITY;
    for _ in 0..STATIONARY_MAX_ITER {
        let mut next = step(&v);
        let total = NeumaierSum::of(next.iter().copied());
        next.iter_mut().for_each(|x| *x /= total);
        delta = NeumaierSum::of(next.iter().zip(&v).map(|(a, b)| (a - b).abs()));
        v = next;
        if delta <= STATIONARY_TOL {
            return Ok(v);
        }
    }
    Err(Error::NonConvergence { iterations: STATIONARY_MAX_ITER, residual: delta })
}

impl CylinderMeasure for MarkovMeasure {
    fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    fn cylinder_weight(&self, word: &[usize]) -> f64 {
        let m = self.alphabet.len();
        let r = self.memory;
        let n = word.len();
        if n == 0 {
            return 1.0;
        }
        if n <= r {
            let span = m.pow((r - n) as u32);
            let start = word_index(word, m) * span;
            return NeumaierSum::of(self.marginal[start..start + span].iter().copied());
        }
        let n_blocks = self.marginal.len();
        let mut block = word_index(&word[..r], m);
        let mut weight = self.marginal[block];
        for &b in &word[r..] {
            weight *= self.transition[block * m + b];
            block = (block * m + b) % n_blocks;
        }
        weight
    }

    fn as_markov(&self) -> Option<&MarkovMeasure> {
        Some(self)
    }
}

/// Convex combination `Σ t_i μ_i` of Markov measures. Shift invariant but
/// in general not Markov.
#[derive(Clone, Debug)]
pub struct Mixture {
    components: Vec<(f64, MarkovMeasure)>,
}

impl Mixture {
    pub fn new(components: Vec<(f64, MarkovMeasure)>) -> Result<Self> {
        let Some((_, first)) = components.first() else {
            return Err(Error::InvalidArgument("mixture needs at least one component".into()));
        };
        if components.iter().any(|(t, mu)| !(*t >= 0.0) || mu.alphabet != first.alphabet) {
            return Err(Error::InvalidArgument(
                "mixture weights must be nonnegative over a common alphabet".into(),
            ));
        }
        let total: f64 = components.iter().map(|(t, _)| t).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!("mixture weights sum to {total}")));
        }
        Ok(Mixture { components })
    }

    pub fn components(&self) -> &[(f64, MarkovMeasure)] {
        &self.components
    }
}

impl CylinderMeasure for Mixture {
    fn alphabet(&self) -> &Alphabet {
        &self.components[0].1.alphabet
    }

    fn cylinder_weight(&self, word: &[usize]) -> f64 {
        self.components.iter().map(|(t, mu)| t * mu.cylinder_weight(word)).sum()
    }
}

/// `μ[w]` for every word of length `n`, lexicographically.
pub fn cylinder_weights<M: CylinderMeasure + ?Sized>(measure: &M, n: usize) -> Result<Vec<f64>> {
    let m = measure.alphabet().len();
    let count = word_count(m, n)?;
    let chunks = exec::map_chunks(count, |range| {
        let mut buf = vec![0; n];
        range
            .map(|i| {
                decode_word(i, m, &mut buf);
                measure.cylinder_weight(&buf)
            })
            .collect::<Vec<_>>()
    });
    Ok(chunks.into_iter().flatten().collect())
}

/// `∫ f dμ = Σ_{|w| = k} μ[w] f(w)` for a depth-`k` potential.
pub fn integrate_local<M: CylinderMeasure + ?Sized>(measure: &M, f: &Potential) -> Result<f64> {
    let m = measure.alphabet().len();
    if f.symbols() != m {
        return Err(Error::InvalidArgument("potential and measure use different alphabets".into()));
    }
    let k = f.depth();
    let count = word_count(m, k)?;
    Ok(exec::sum_indexed(count, |i| {
        let mut buf = vec![0; k];
        decode_word(i, m, &mut buf);
        measure.cylinder_weight(&buf) * f.value_at_index(i)
    }))
}

/// Largest difference of `(r+1)`-cylinder weights, `r` the larger memory.
pub fn pair_distance(a: &MarkovMeasure, b: &MarkovMeasure) -> Result<f64> {
    if a.alphabet.len() != b.alphabet.len() {
        return Err(Error::InvalidArgument("measures over different alphabets".into()));
    }
    let len = a.memory.max(b.memory) + 1;
    let wa = cylinder_weights(a, len)?;
    let wb = cylinder_weights(b, len)?;
    Ok(wa.iter().zip(&wb).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::Words;
    use crate::transfer::{normalize, solve};

    fn binary() -> Alphabet {
        Alphabet::uniform_finite(2).unwrap()
    }

    fn ising_gibbs(beta: f64) -> MarkovMeasure {
        let a = binary();
        let f = Potential::ising(beta).unwrap();
        let bar = normalize(&f, &solve(&f, &a).unwrap()).unwrap();
        MarkovMeasure::gibbs_from_normalized(&bar, &a).unwrap()
    }

    #[test]
    fn product_measure_examples() {
        let a = binary();
        let p = MarkovMeasure::product_measure(&a);
        assert!(p.joint().iter().all(|x| *x == 0.25));
        assert_eq!(p.pi(), vec![0.5, 0.5]);

        let b = Alphabet::finite_with_weights(&[0.2, 0.3, 0.5]).unwrap();
        let p = MarkovMeasure::product_measure(&b);
        let w = [2, 0, 1, 1];
        let expected: f64 = w.iter().map(|&s| b.weight(s)).product();
        assert!((p.cylinder_weight(&w) - expected).abs() < 1e-16);
    }

    #[test]
    fn gibbs_examples() {
        let a = binary();
        let zero = Potential::constant(2, 0.0).unwrap().lift(2).unwrap();
        let g = MarkovMeasure::gibbs_from_normalized(&zero, &a).unwrap();
        assert!(pair_distance(&g, &MarkovMeasure::product_measure(&a)).unwrap() < 1e-15);

        let g = ising_gibbs(1.0);
        let c = 1f64.cosh();
        let e = 1f64.exp();
        assert!((g.pi()[0] - 0.5).abs() < 1e-14);
        assert!((g.pair(0, 0) - e / (4.0 * c)).abs() < 1e-14);
        assert!((g.pair(0, 1) - 1.0 / (e * 4.0 * c)).abs() < 1e-14);
        assert!((g.pair(0, 0) - 0.440399).abs() < 1e-6);
        assert!((g.pair(0, 1) - 0.059601).abs() < 1e-6);
        assert!(g.shift_invariance_residual() < 1e-14);
    }

    #[test]
    fn gibbs_rejects_unnormalized_input() {
        let err = MarkovMeasure::gibbs_from_normalized(&Potential::ising(1.0).unwrap(), &binary()).unwrap_err();
        assert!(matches!(err, Error::ContractViolation(_)));
    }

    #[test]
    fn gibbs_satisfies_backward_recursion() {
        let a = Alphabet::finite_with_weights(&[0.5, 1.0, 1.5]).unwrap();
        for depth in [2, 3] {
            let f = Potential::random(3, depth, 1.0, 21).unwrap();
            let bar = normalize(&f, &solve(&f, &a).unwrap()).unwrap();
            let g = MarkovMeasure::gibbs_from_normalized(&bar, &a).unwrap();
            for n in depth..6 {
                for w in Words::new(3, n).unwrap() {
                    let lhs = g.cylinder_weight(&w);
                    let rhs = a.weight(w[0]) * bar.value(&w[..depth]).exp() * g.cylinder_weight(&w[1..]);
                    assert!((lhs - rhs).abs() < 1e-12, "{w}: {lhs} vs {rhs}");
                }
            }
        }
    }

    #[test]
    fn cylinder_weight_examples() {
        let p = MarkovMeasure::product_measure(&binary());
        assert_eq!(p.cylinder_weight(&[0, 1]), 0.25);
        let g = ising_gibbs(1.0);
        assert_eq!(g.cylinder_weight(&[1]), g.pi()[1]);
        let c = 1f64.cosh();
        let expected = 2f64.exp() / (8.0 * c * c);
        assert!((g.cylinder_weight(&[0, 0, 0]) - expected).abs() < 1e-14);
        let total: f64 = cylinder_weights(&g, 3).unwrap().iter().sum();
        assert!((total - 1.0).abs() < 1e-14);
        assert_eq!(g.cylinder_weight(&[]), 1.0);
    }

    #[test]
    fn integrate_local_examples() {
        let a = binary();
        let g = ising_gibbs(1.0);
        let c = Potential::constant(2, 1.7).unwrap();
        assert!((integrate_local(&g, &c).unwrap() - 1.7).abs() < 1e-14);

        let spins = Potential::ising(1.0).unwrap();
        assert!((integrate_local(&g, &spins).unwrap() - 1f64.tanh()).abs() < 1e-14);
        assert!((integrate_local(&g, &spins).unwrap() - 0.7615942).abs() < 1e-7);

        let p = MarkovMeasure::product_measure(&a);
        assert_eq!(integrate_local(&p, &spins).unwrap(), 0.0);
    }

    #[test]
    fn random_markov_invariants() {
        let a = Alphabet::finite_with_weights(&[1.0, 2.0, 4.0]).unwrap();
        for seed in 0..10 {
            let mu = MarkovMeasure::random_markov(&a, seed).unwrap();
            assert!((mu.marginal().iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!((mu.joint().iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(mu.shift_invariance_residual() < 1e-12);
            assert!(mu.joint().iter().all(|x| *x > 0.0));
            assert_eq!(mu, MarkovMeasure::random_markov(&a, seed).unwrap());
        }
        let mu = MarkovMeasure::random_markov_with_memory(&a, 2, 3).unwrap();
        assert!(mu.shift_invariance_residual() < 1e-12);
    }

    #[test]
    fn kolmogorov_consistency() {
        let a = Alphabet::finite_with_weights(&[1.0, 2.0, 4.0]).unwrap();
        for memory in [1, 2] {
            let mu = MarkovMeasure::random_markov_with_memory(&a, memory, 17).unwrap();
            for n in 1..5 {
                for w in Words::new(3, n).unwrap() {
                    let fwd: f64 = (0..3).map(|b| mu.cylinder_weight(&[&w[..], &[b]].concat())).sum();
                    let bwd: f64 = (0..3).map(|b| mu.cylinder_weight(&[&[b][..], &w[..]].concat())).sum();
                    assert!((fwd - mu.cylinder_weight(&w)).abs() < 1e-13);
                    assert!((bwd - mu.cylinder_weight(&w)).abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn sampling_is_deterministic_and_unbiased() {
        let a = binary();
        let p = MarkovMeasure::product_measure(&a);
        let n = 100_000;
        let w = p.sample_path(n, 5);
        assert_eq!(w, p.sample_path(n, 5));
        let ones = w.iter().filter(|s| **s == 1).count() as f64;
        let sigma = (n as f64 * 0.25).sqrt();
        assert!((ones - 0.5 * n as f64).abs() < 3.0 * sigma);

        let g = ising_gibbs(1.0);
        let w = g.sample_path(n, 9);
        let pairs = (n - 1) as f64;
        for (x, y) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            let count = w.windows(2).filter(|p| p[0] == x && p[1] == y).count() as f64;
            let q = g.pair(x, y);
            // Markov correlation inflates the variance; 3σ of a generous
            // effective sample size.
            let sigma = (q * (1.0 - q) * pairs).sqrt() * 3.0;
            assert!((count - q * pairs).abs() < 3.0 * sigma, "{x}{y}: {count} vs {}", q * pairs);
        }
        assert_eq!(g.sample_path(1, 0).len(), 1);
    }

    #[test]
    fn from_joint_validates() {
        let a = binary();
        assert!(MarkovMeasure::from_joint(&a, 1, vec![0.5, 0.0, 0.5, 0.0]).is_err());
        let dirac = MarkovMeasure::from_joint(&a, 1, vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(dirac.cylinder_weight(&[0, 0, 0, 0]), 1.0);
        assert_eq!(dirac.cylinder_weight(&[1, 0]), 0.0);
        assert!(MarkovMeasure::from_joint(&a, 1, vec![0.5, 0.5]).is_err());
    }

    #[test]
    fn record_round_trip() {
        let a = binary();
        let g = ising_gibbs(0.5);
        let json = serde_json::to_string(&g).unwrap();
        let rec: MeasureRecord = serde_json::from_str(&json).unwrap();
        assert_eq!(rec.pair.len(), 2);
        let back = MarkovMeasure::from_record(&a, &rec).unwrap();
        assert!(pair_distance(&g, &back).unwrap() < 1e-16);
    }

    #[test]
    fn perturbation_at_zero_is_identity() {
        let g = ising_gibbs(1.0);
        let same = g.perturbed(0.0, 3).unwrap();
        assert!(pair_distance(&g, &same).unwrap() < 1e-14);
        let moved = g.perturbed(0.05, 3).unwrap();
        let d = pair_distance(&g, &moved).unwrap();
        assert!(d > 1e-4 && d < 0.05);
        assert!(g.perturbed(1.5, 3).is_err());
    }

    #[test]
    fn mixture_weights() {
        let a = binary();
        let m = Mixture::new(vec![
            (0.25, MarkovMeasure::product_measure(&a)),
            (0.75, ising_gibbs(1.0)),
        ])
        .unwrap();
        let w = [0, 0];
        let expected = 0.25 * 0.25 + 0.75 * ising_gibbs(1.0).pair(0, 0);
        assert!((m.cylinder_weight(&w) - expected).abs() < 1e-15);
        assert!(Mixture::new(vec![(0.5, ising_gibbs(1.0))]).is_err());
    }
}
