//! Locally constant potentials: a depth-`k` potential is a function of the
//! first `k` coordinates, stored as a dense tensor over `𝒜^k` in
//! lexicographic word order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::alphabet::Alphabet;
use crate::error::{Error, Result};
use crate::symbolic::{decode_word, word_count, word_index, Sequence};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PotentialRecord")]
pub struct Potential {
    depth: usize,
    symbols: usize,
    values: Vec<f64>,
}

#[derive(Deserialize)]
struct PotentialRecord {
    depth: usize,
    symbols: usize,
    values: Vec<f64>,
}

impl TryFrom<PotentialRecord> for Potential {
    type Error = Error;

    fn try_from(r: PotentialRecord) -> Result<Self> {
        Potential::new(r.depth, r.symbols, r.values)
    }
}

impl Potential {
    pub fn new(depth: usize, symbols: usize, values: Vec<f64>) -> Result<Self> {
        if depth == 0 {
            return Err(Error::InvalidArgument("potential depth must be at least 1".into()));
        }
        if symbols == 0 {
            return Err(Error::InvalidArgument("potential over an empty alphabet".into()));
        }
        let n = word_count(symbols, depth)?;
        if values.len() != n {
            return Err(Error::InvalidArgument(format!(
                "depth-{depth} potential over {symbols} symbols needs {n} values, got {}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("potential values must be finite".into()));
        }
        Ok(Potential { depth, symbols, values })
    }

    /// Tabulates `f` on every word of length `depth`.
    pub fn from_fn(depth: usize, symbols: usize, f: impl Fn(&[usize]) -> f64) -> Result<Self> {
        let n = word_count(symbols, depth)?;
        let mut buf = vec![0; depth];
        let values = (0..n)
            .map(|i| {
                decode_word(i, symbols, &mut buf);
                f(&buf)
            })
            .collect();
        Self::new(depth, symbols, values)
    }

    /// `f ≡ c` (depth 1).
    pub fn constant(symbols: usize, c: f64) -> Result<Self> {
        Self::new(1, symbols, vec![c; symbols])
    }

    /// Nearest-neighbour Ising potential `β s(x₁) s(x₂)` on two symbols with
    /// spins `s(0) = +1`, `s(1) = −1`.
    pub fn ising(beta: f64) -> Result<Self> {
        Self::from_fn(2, 2, |w| beta * spin(w[0]) * spin(w[1]))
    }

    /// `β x₁ x₂` using the alphabet's point coordinates.
    pub fn bilinear(alphabet: &Alphabet, beta: f64) -> Result<Self> {
        let pts = alphabet.points();
        Self::from_fn(2, alphabet.len(), |w| beta * pts[w[0]] * pts[w[1]])
    }

    /// Entries drawn uniformly from `[-amplitude, amplitude]`.
    pub fn random(symbols: usize, depth: usize, amplitude: f64, seed: u64) -> Result<Self> {
        let n = word_count(symbols, depth)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..n).map(|_| amplitude * rng.gen_range(-1.0..=1.0)).collect();
        Self::new(depth, symbols, values)
    }

    /// Locally constant approximation `f_k(x) = f(x₁…x_k y*)`.
    pub fn depth_project(
        evaluator: impl Fn(&Sequence) -> f64,
        symbols: usize,
        depth: usize,
        anchor: &Sequence,
    ) -> Result<Self> {
        anchor.check_alphabet(symbols)?;
        Self::from_fn(depth, symbols, |w| evaluator(&Sequence::concat(w, anchor)))
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn symbols(&self) -> usize {
        self.symbols
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value on a word of length exactly `depth`.
    pub fn value(&self, word: &[usize]) -> f64 {
        debug_assert_eq!(word.len(), self.depth);
        self.values[word_index(word, self.symbols)]
    }

    pub fn value_at_index(&self, index: usize) -> f64 {
        self.values[index]
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `f(x)`, which reads `x₁…x_k`.
    pub fn eval(&self, x: &Sequence) -> f64 {
        let idx = (0..self.depth).fold(0, |acc, i| acc * self.symbols + x.at(i));
        self.values[idx]
    }

    /// `S_n f(x) = Σ_{j<n} f(σʲx)`.
    pub fn birkhoff_sum(&self, n: usize, x: &Sequence) -> f64 {
        let coords = x.take(n + self.depth - 1);
        self.birkhoff_sum_slice(&coords, n)
    }

    /// `S_n f` of any point whose first `n + k − 1` coordinates are `coords`.
    pub fn birkhoff_sum_slice(&self, coords: &[usize], n: usize) -> f64 {
        assert!(
            coords.len() + 1 >= n + self.depth,
            "need {} coordinates for S_{n} of a depth-{} potential",
            n + self.depth - 1,
            self.depth
        );
        let mut total = 0.0;
        for j in 0..n {
            total += self.value(&coords[j..j + self.depth]);
        }
        total
    }

    /// The same function viewed as a depth-`depth` potential (`depth ≥ k`).
    pub fn lift(&self, depth: usize) -> Result<Self> {
        if depth < self.depth {
            return Err(Error::InvalidArgument(format!(
                "cannot lift a depth-{} potential to depth {depth}",
                self.depth
            )));
        }
        Self::from_fn(depth, self.symbols, |w| self.value(&w[..self.depth]))
    }

    /// `β f`.
    pub fn scaled(&self, beta: f64) -> Self {
        Potential {
            depth: self.depth,
            symbols: self.symbols,
            values: self.values.iter().map(|v| beta * v).collect(),
        }
    }

    /// `f + c`.
    pub fn shifted(&self, c: f64) -> Self {
        Potential {
            depth: self.depth,
            symbols: self.symbols,
            values: self.values.iter().map(|v| v + c).collect(),
        }
    }

    /// `a f + b g`, lifted to the larger depth.
    pub fn combine(&self, a: f64, other: &Potential, b: f64) -> Result<Self> {
        if self.symbols != other.symbols {
            return Err(Error::InvalidArgument("potentials over different alphabets".into()));
        }
        let depth = self.depth.max(other.depth);
        let (f, g) = (self.lift(depth)?, other.lift(depth)?);
        let values = f.values.iter().zip(&g.values).map(|(x, y)| a * x + b * y).collect();
        Self::new(depth, self.symbols, values)
    }

    /// `var_j(f)`: largest `|f(u) − f(v)|` over words `u, v` of length `k`
    /// sharing their first `j` symbols. Zero for `j ≥ k`.
    pub fn variation(&self, j: usize) -> f64 {
        if j >= self.depth {
            return 0.0;
        }
        // Words sharing a j-prefix occupy one contiguous block.
        let block = self.symbols.pow((self.depth - j) as u32);
        self.values
            .chunks(block)
            .map(|c| {
                let (lo, hi) = c
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
                hi - lo
            })
            .fold(0.0, f64::max)
    }

    /// Walters modulus at agreement level `j`:
    /// `max_{n ≤ n_max} max_{a ∈ 𝒜ⁿ} |S_n f(ax) − S_n f(ay)|` over tails
    /// `x, y` sharing their first `j` symbols.
    ///
    /// Only the last `min(n, k−1)` symbols of the prefix `a` reach the tail,
    /// so the search runs over those suffixes and tails of length `k − 1`.
    pub fn walters_modulus(&self, n_max: usize, j: usize) -> Result<f64> {
        let tail_len = self.depth - 1;
        if j >= tail_len || n_max == 0 {
            return Ok(0.0);
        }
        let m = self.symbols;
        let n_tails = word_count(m, tail_len)?;
        let mut best: f64 = 0.0;
        for n in 1..=n_max.min(tail_len) {
            let n_prefix = word_count(m, n)?;
            word_count(m, n + 2 * tail_len - j)?;
            let mut coords_x = vec![0; n + tail_len];
            let mut coords_y = vec![0; n + tail_len];
            let block = m.pow((tail_len - j) as u32);
            for a in 0..n_prefix {
                decode_word(a, m, &mut coords_x[..n]);
                coords_y[..n].copy_from_slice(&coords_x[..n]);
                for tx in 0..n_tails {
                    decode_word(tx, m, &mut coords_x[n..]);
                    let sx = self.birkhoff_sum_slice(&coords_x, n);
                    let group = tx / block;
                    for ty in group * block..(group + 1) * block {
                        decode_word(ty, m, &mut coords_y[n..]);
                        let sy = self.birkhoff_sum_slice(&coords_y, n);
                        best = best.max((sx - sy).abs());
                    }
                }
            }
        }
        Ok(best)
    }
}

fn spin(a: usize) -> f64 {
    if a == 0 {
        1.0
    } else {
        -1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Full search over prefixes of every length up to `n_max`.
    fn walters_brute_force(f: &Potential, n_max: usize, j: usize) -> f64 {
        let m = f.symbols();
        let tail = f.depth() - 1 + j;
        let mut best: f64 = 0.0;
        for n in 1..=n_max {
            for a in 0..m.pow(n as u32) {
                let mut prefix = vec![0; n];
                decode_word(a, m, &mut prefix);
                for x in 0..m.pow(tail as u32) {
                    for y in 0..m.pow(tail as u32) {
                        let mut xs = vec![0; tail];
                        let mut ys = vec![0; tail];
                        decode_word(x, m, &mut xs);
                        decode_word(y, m, &mut ys);
                        if xs[..j] != ys[..j] {
                            continue;
                        }
                        let px = Sequence::concat(&[prefix.clone(), xs].concat(), &Sequence::constant(0));
                        let py = Sequence::concat(&[prefix.clone(), ys].concat(), &Sequence::constant(0));
                        best = best.max((f.birkhoff_sum(n, &px) - f.birkhoff_sum(n, &py)).abs());
                    }
                }
            }
        }
        best
    }

    #[test]
    fn eval_examples() {
        let c = Potential::constant(3, 0.7).unwrap();
        assert_eq!(c.eval(&Sequence::periodic(vec![2, 1]).unwrap()), 0.7);

        let f = Potential::ising(1.0).unwrap();
        assert_eq!(f.eval(&Sequence::constant(0)), 1.0);

        let w = [1, 0, 1];
        let a = f.eval(&Sequence::concat(&w, &Sequence::constant(0)));
        let b = f.eval(&Sequence::concat(&w, &Sequence::periodic(vec![1, 0]).unwrap()));
        assert_eq!(a, b);
    }

    #[test]
    fn birkhoff_examples() {
        let c = Potential::constant(2, 1.5).unwrap();
        let x = Sequence::constant(1);
        assert_eq!(c.birkhoff_sum(5, &x), 7.5);
        assert_eq!(c.birkhoff_sum(0, &x), 0.0);

        // (+,−,+,−,…): s1s2 + s2s3 + s3s4 = −3.
        let f = Potential::ising(1.0).unwrap();
        let alt = Sequence::periodic(vec![0, 1]).unwrap();
        assert_eq!(f.birkhoff_sum(3, &alt), -3.0);
    }

    #[test]
    fn variation_examples() {
        let f = Potential::ising(1.0).unwrap();
        assert_eq!(f.variation(0), 2.0);
        assert_eq!(f.variation(1), 2.0);
        assert_eq!(f.variation(2), 0.0);
        assert_eq!(f.variation(7), 0.0);
        let r = Potential::random(3, 3, 1.0, 11).unwrap();
        assert!(r.variation(0) >= r.variation(1) && r.variation(1) >= r.variation(2));
    }

    #[test]
    fn walters_examples() {
        let f = Potential::ising(1.0).unwrap();
        assert_eq!(f.walters_modulus(8, 0).unwrap(), 2.0);
        assert_eq!(walters_brute_force(&f, 8, 0), 2.0);
        assert_eq!(f.walters_modulus(8, 1).unwrap(), 0.0);
        assert_eq!(f.walters_modulus(8, 3).unwrap(), 0.0);
        let c = Potential::constant(2, 4.0).unwrap().lift(3).unwrap();
        for j in 0..4 {
            assert_eq!(c.walters_modulus(6, j).unwrap(), 0.0);
        }
    }

    #[test]
    fn walters_matches_brute_force_for_depth_three() {
        let f = Potential::random(2, 3, 1.0, 5).unwrap();
        for j in 0..3 {
            let fast = f.walters_modulus(5, j).unwrap();
            let slow = walters_brute_force(&f, 5, j);
            assert!((fast - slow).abs() < 1e-14, "j={j}: {fast} vs {slow}");
        }
        assert!(f.walters_modulus(5, 0).unwrap() >= f.walters_modulus(5, 1).unwrap());
    }

    #[test]
    fn depth_project_examples() {
        let f = Potential::random(2, 2, 1.0, 3).unwrap();
        for anchor in [Sequence::constant(0), Sequence::periodic(vec![1, 0]).unwrap()] {
            let g = Potential::depth_project(|x| f.eval(x), 2, 2, &anchor).unwrap();
            assert_eq!(g, f);
        }

        let geometric = |x: &Sequence| {
            0.5 * x.at(0) as f64 + 0.25 * x.at(1) as f64 + 0.125 * x.at(2) as f64
        };
        let g = Potential::depth_project(geometric, 2, 2, &Sequence::constant(0)).unwrap();
        assert_eq!(g.values(), &[0.0, 0.25, 0.5, 0.75]);
        assert!(g.variation(1) <= 0.25 + 0.125);
    }

    #[test]
    fn construction_errors() {
        assert!(Potential::new(0, 2, vec![]).is_err());
        assert!(Potential::new(2, 2, vec![0.0; 3]).is_err());
        assert!(Potential::new(1, 2, vec![0.0, f64::NAN]).is_err());
    }

    #[test]
    fn lift_preserves_values() {
        let f = Potential::random(3, 2, 1.0, 9).unwrap();
        let g = f.lift(4).unwrap();
        let x = Sequence::new(vec![2, 0, 1, 1, 2], vec![0, 2]).unwrap();
        assert_eq!(f.eval(&x), g.eval(&x));
        assert_eq!(f.birkhoff_sum(7, &x), g.birkhoff_sum(7, &x));
        assert!(f.lift(1).is_err());
    }

    #[test]
    fn json_round_trip() {
        let f = Potential::ising(0.5).unwrap();
        let s = serde_json::to_string(&f).unwrap();
        let back: Potential = serde_json::from_str(&s).unwrap();
        assert_eq!(f, back);
        assert!(serde_json::from_str::<Potential>(r#"{"depth":2,"symbols":2,"values":[1]}"#).is_err());
    }
}
