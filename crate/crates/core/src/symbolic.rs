//! Words, eventually periodic sequences, the shift, the product metric and
//! cylinder enumeration.
//!
//! Coordinates are 0-based here: `x.at(0)` is the first symbol `x_1`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::alphabet::Alphabet;
use crate::error::{Error, Result};

/// Default cap on `m^n` for exhaustive enumeration.
pub const DEFAULT_BUDGET: u64 = 1 << 24;

/// Environment variable overriding [`DEFAULT_BUDGET`].
pub const BUDGET_ENV: &str = "RUELLE_LAB_BUDGET";

/// Enumeration budget in effect.
pub fn enumeration_budget() -> u64 {
    std::env::var(BUDGET_ENV)
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(DEFAULT_BUDGET)
}

/// `m^n` if it fits in the enumeration budget.
pub fn word_count(m: usize, n: usize) -> Result<usize> {
    let budget = enumeration_budget();
    let mut count: u128 = 1;
    for _ in 0..n {
        count = count.saturating_mul(m as u128);
        if count > budget as u128 {
            let requested = (m as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
            return Err(Error::EnumerationTooLarge { requested, budget });
        }
    }
    Ok(count as usize)
}

/// Lexicographic index of `word` (first symbol most significant).
pub fn word_index(word: &[usize], m: usize) -> usize {
    word.iter().fold(0, |acc, &a| acc * m + a)
}

/// Writes the word of length `out.len()` with lexicographic index `index`.
pub fn decode_word(index: usize, m: usize, out: &mut [usize]) {
    let mut rest = index;
    for slot in out.iter_mut().rev() {
        *slot = rest % m;
        rest /= m;
    }
}

/// A finite word over the alphabet indices.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Word(pub Vec<usize>);

impl Word {
    pub fn symbols(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl std::ops::Deref for Word {
    type Target = [usize];

    fn deref(&self) -> &[usize] {
        &self.0
    }
}

impl From<Vec<usize>> for Word {
    fn from(v: Vec<usize>) -> Self {
        Word(v)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{a}")?;
        }
        Ok(())
    }
}

/// Eventually periodic point of `Ω`: `prefix` followed by `period` repeated
/// forever.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Sequence {
    prefix: Vec<usize>,
    period: Vec<usize>,
}

/// A boundary condition `y` for the finite-volume kernels.
pub type BoundaryCondition = Sequence;

impl Sequence {
    pub fn new(prefix: Vec<usize>, period: Vec<usize>) -> Result<Self> {
        if period.is_empty() {
            return Err(Error::InvalidArgument("period word must be nonempty".into()));
        }
        Ok(Sequence { prefix, period })
    }

    pub fn constant(a: usize) -> Self {
        Sequence { prefix: Vec::new(), period: vec![a] }
    }

    pub fn periodic(period: Vec<usize>) -> Result<Self> {
        Self::new(Vec::new(), period)
    }

    /// `x_Λ y_{Λᶜ}`: coordinates `< x.len()` come from `x`, the rest from `y`.
    pub fn concat(x: &[usize], y: &Sequence) -> Sequence {
        let tail = y.shift_by(x.len());
        let mut prefix = x.to_vec();
        prefix.extend_from_slice(&tail.prefix);
        Sequence { prefix, period: tail.period }
    }

    pub fn prefix(&self) -> &[usize] {
        &self.prefix
    }

    pub fn period(&self) -> &[usize] {
        &self.period
    }

    /// Symbol at 0-based coordinate `i`.
    pub fn at(&self, i: usize) -> usize {
        if i < self.prefix.len() {
            self.prefix[i]
        } else {
            self.period[(i - self.prefix.len()) % self.period.len()]
        }
    }

    /// First `n` coordinates.
    pub fn take(&self, n: usize) -> Vec<usize> {
        (0..n).map(|i| self.at(i)).collect()
    }

    /// Coordinates `start .. start + len` written into a vector.
    pub fn window(&self, start: usize, len: usize) -> Vec<usize> {
        (start..start + len).map(|i| self.at(i)).collect()
    }

    /// The left shift `σ`.
    pub fn shift(&self) -> Sequence {
        self.shift_by(1)
    }

    /// `σⁿ`.
    pub fn shift_by(&self, n: usize) -> Sequence {
        if n <= self.prefix.len() {
            return Sequence {
                prefix: self.prefix[n..].to_vec(),
                period: self.period.clone(),
            };
        }
        let r = (n - self.prefix.len()) % self.period.len();
        let mut period = self.period[r..].to_vec();
        period.extend_from_slice(&self.period[..r]);
        Sequence { prefix: Vec::new(), period }
    }

    pub fn check_alphabet(&self, m: usize) -> Result<()> {
        if self.prefix.iter().chain(&self.period).any(|&a| a >= m) {
            return Err(Error::InvalidArgument(format!(
                "sequence uses a symbol outside an alphabet of size {m}"
            )));
        }
        Ok(())
    }
}

/// Truncated value of `d_Ω` and the bound on the omitted tail.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricSum {
    pub value: f64,
    pub tail_bound: f64,
}

/// `d_Ω(x, y) = Σ 2^{-n} d(x_n, y_n) / (1 + d(x_n, y_n))`, summed over the
/// first `terms` coordinates. The omitted tail is at most `2^{-terms}`.
pub fn product_metric(alphabet: &Alphabet, x: &Sequence, y: &Sequence, terms: usize) -> Result<MetricSum> {
    if terms == 0 {
        return Err(Error::InvalidArgument("product metric needs at least one term".into()));
    }
    let mut value = 0.0;
    let mut scale = 1.0;
    for i in 0..terms {
        scale *= 0.5;
        let d = alphabet.distance(x.at(i), y.at(i));
        value += scale * d / (1.0 + d);
    }
    Ok(MetricSum { value, tail_bound: scale })
}

/// All words of a fixed length in lexicographic order.
#[derive(Clone, Debug)]
pub struct Words {
    m: usize,
    len: usize,
    next: usize,
    count: usize,
}

impl Words {
    pub fn new(m: usize, len: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidArgument("empty alphabet".into()));
        }
        let count = word_count(m, len)?;
        Ok(Words { m, len, next: 0, count })
    }
}

impl Iterator for Words {
    type Item = Word;

    fn next(&mut self) -> Option<Word> {
        if self.next >= self.count {
            return None;
        }
        let mut w = vec![0; self.len];
        decode_word(self.next, self.m, &mut w);
        self.next += 1;
        Some(Word(w))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let rest = self.count - self.next;
        (rest, Some(rest))
    }
}

impl ExactSizeIterator for Words {}

/// Every word of length `n` over `alphabet`, lexicographically.
pub fn enumerate_words(alphabet: &Alphabet, n: usize) -> Result<Words> {
    Words::new(alphabet.len(), n)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binary() -> Alphabet {
        Alphabet::uniform_finite(2).unwrap()
    }

    #[test]
    fn concat_examples() {
        let s = Sequence::concat(&[0, 1], &Sequence::constant(0));
        assert_eq!(s.take(5), vec![0, 1, 0, 0, 0]);

        let s = Sequence::concat(&[], &Sequence::periodic(vec![0, 1]).unwrap());
        assert_eq!(s.take(4), vec![0, 1, 0, 1]);

        let y = Sequence::new(vec![2, 2, 1], vec![0, 1, 2]).unwrap();
        let x = [1, 1, 1, 1];
        let s = Sequence::concat(&x, &y);
        for k in 0..20 {
            assert_eq!(s.at(x.len() + k), y.at(x.len() + k));
        }
    }

    #[test]
    fn empty_period_rejected() {
        assert!(Sequence::new(vec![0], vec![]).is_err());
    }

    #[test]
    fn shift_examples() {
        let alt = Sequence::periodic(vec![0, 1]).unwrap();
        assert_eq!(alt.shift().take(4), vec![1, 0, 1, 0]);
        let c = Sequence::constant(1);
        assert_eq!(c.shift().take(6), c.take(6));

        let y = Sequence::new(vec![1], vec![0, 1, 1]).unwrap();
        let x = [0, 0, 1];
        let s = Sequence::concat(&x, &y).shift_by(x.len());
        assert_eq!(s.take(12), y.shift_by(x.len()).take(12));
    }

    #[test]
    fn metric_examples() {
        let a = binary();
        let x = Sequence::periodic(vec![0, 1]).unwrap();
        assert_eq!(product_metric(&a, &x, &x, 30).unwrap().value, 0.0);

        let y = Sequence::new(vec![1], vec![0]).unwrap();
        let z = Sequence::constant(0);
        let d = product_metric(&a, &y, &z, 40).unwrap();
        assert_eq!(d.value, 0.25);

        let u = Sequence::new(vec![0, 1, 1, 0], vec![1]).unwrap();
        let v = Sequence::new(vec![0, 1, 1, 0], vec![0]).unwrap();
        let d = product_metric(&a, &u, &v, 60).unwrap();
        assert!(d.value <= 2f64.powi(-4));
        assert!(product_metric(&a, &u, &v, 0).is_err());
    }

    #[test]
    fn enumeration_order_and_counts() {
        let w: Vec<String> = Words::new(2, 2).unwrap().map(|w| w.to_string()).collect();
        assert_eq!(w, vec!["0,0", "0,1", "1,0", "1,1"]);
        let w: Vec<Vec<usize>> = Words::new(3, 1).unwrap().map(|w| w.0).collect();
        assert_eq!(w, vec![vec![0], vec![1], vec![2]]);
        assert_eq!(Words::new(2, 12).unwrap().count(), 4096);
        assert_eq!(Words::new(5, 0).unwrap().collect::<Vec<_>>(), vec![Word(vec![])]);
    }

    #[test]
    fn enumeration_budget_enforced() {
        let err = Words::new(2, 25).unwrap_err();
        assert!(matches!(err, Error::EnumerationTooLarge { .. }));
        assert!(word_count(2, 24).is_ok());
    }

    #[test]
    fn index_round_trip() {
        let mut buf = [0usize; 5];
        for i in 0..243 {
            decode_word(i, 3, &mut buf);
            assert_eq!(word_index(&buf, 3), i);
        }
    }

    #[test]
    fn word_display_is_comma_separated() {
        assert_eq!(Word(vec![2, 0, 1]).to_string(), "2,0,1");
    }
}
