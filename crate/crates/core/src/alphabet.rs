//! The alphabet `𝒜` and its a priori probability `p`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::NeumaierSum;
use crate::quadrature;

const NORMALIZATION_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphabetKind {
    Finite,
    Discretized,
}

/// Base metric `d_𝒜` on symbol coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// `d(a, b) = 1` for distinct symbols.
    Discrete,
    AbsoluteDifference,
    /// Arc length on a circle of the given circumference.
    Circle { circumference: f64 },
}

impl Metric {
    pub fn distance(&self, x: f64, y: f64) -> f64 {
        match *self {
            Metric::Discrete => {
                if x == y {
                    0.0
                } else {
                    1.0
                }
            }
            Metric::AbsoluteDifference => (x - y).abs(),
            Metric::Circle { circumference } => {
                let d = (x - y).abs().rem_euclid(circumference);
                d.min(circumference - d)
            }
        }
    }
}

/// Density of the a priori measure relative to Lebesgue measure on an
/// interval (unnormalized).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Density {
    Uniform,
    /// `Σ c_i x^i`.
    Polynomial { coefficients: Vec<f64> },
    /// `exp(rate · x)`.
    Exponential { rate: f64 },
    /// Unnormalized Gaussian bump.
    Gaussian { mean: f64, std_dev: f64 },
}

impl Density {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Density::Uniform => 1.0,
            Density::Polynomial { coefficients } => {
                coefficients.iter().rev().fold(0.0, |acc, c| acc * x + c)
            }
            Density::Exponential { rate } => (rate * x).exp(),
            Density::Gaussian { mean, std_dev } => {
                let z = (x - mean) / std_dev;
                (-0.5 * z * z).exp()
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadratureRule {
    Midpoint,
    Gauss,
}

/// Finite alphabet, or quadrature nodes of a compact interval, together
/// with strictly positive a priori weights summing to one.
///
/// Immutable once built; deserialization goes through the same validation
/// as the constructors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "AlphabetRecord")]
pub struct Alphabet {
    kind: AlphabetKind,
    points: Vec<f64>,
    weights: Vec<f64>,
    metric: Metric,
}

#[derive(Deserialize)]
struct AlphabetRecord {
    kind: AlphabetKind,
    points: Vec<f64>,
    weights: Vec<f64>,
    metric: Metric,
}

impl TryFrom<AlphabetRecord> for Alphabet {
    type Error = Error;

    fn try_from(r: AlphabetRecord) -> Result<Self> {
        Alphabet::from_parts(r.kind, r.points, r.weights, r.metric)
    }
}

impl Alphabet {
    /// Validates and builds an alphabet. Weights must already sum to one.
    pub fn from_parts(
        kind: AlphabetKind,
        points: Vec<f64>,
        weights: Vec<f64>,
        metric: Metric,
    ) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidArgument("alphabet needs at least one symbol".into()));
        }
        if points.len() != weights.len() {
            return Err(Error::InvalidArgument(format!(
                "{} points but {} weights",
                points.len(),
                weights.len()
            )));
        }
        if points.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("alphabet points must be finite".into()));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::DegenerateMeasure(format!(
                "a priori weight {w} is not strictly positive (full support required)"
            )));
        }
        let total = NeumaierSum::of(weights.iter().copied());
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidArgument(format!(
                "a priori weights sum to {total}, expected 1"
            )));
        }
        let mut sorted = points.clone();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument("alphabet points must be distinct".into()));
        }
        if let Metric::Circle { circumference } = metric {
            if !(circumference > 0.0) {
                return Err(Error::InvalidArgument("circle circumference must be positive".into()));
            }
        }
        Ok(Alphabet { kind, points, weights, metric })
    }

    /// `m` symbols with uniform a priori weights.
    pub fn uniform_finite(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidArgument("alphabet size must be at least 1".into()));
        }
        Self::finite_with_weights(&vec![1.0; m])
    }

    /// Finite alphabet with the given (positive, unnormalized) weights.
    pub fn finite_with_weights(weights: &[f64]) -> Result<Self> {
        let weights = normalized(weights)?;
        let points = (0..weights.len()).map(|i| i as f64).collect();
        Self::from_parts(AlphabetKind::Finite, points, weights, Metric::Discrete)
    }

    /// Discretizes `[lo, hi]` with the a priori density `density`.
    ///
    /// Weights are quadrature weights times density values, renormalized to
    /// sum to one.
    pub fn discretize_interval(
        lo: f64,
        hi: f64,
        density: &Density,
        n_nodes: usize,
        rule: QuadratureRule,
    ) -> Result<Self> {
        Self::discretize_interval_with(lo, hi, |x| density.eval(x), n_nodes, rule)
    }

    pub fn discretize_interval_with(
        lo: f64,
        hi: f64,
        density: impl Fn(f64) -> f64,
        n_nodes: usize,
        rule: QuadratureRule,
    ) -> Result<Self> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidArgument(format!("need finite lo < hi, got [{lo}, {hi}]")));
        }
        if n_nodes == 0 {
            return Err(Error::InvalidArgument("need at least one quadrature node".into()));
        }
        let (points, qw) = match rule {
            QuadratureRule::Midpoint => quadrature::midpoint_on(lo, hi, n_nodes),
            QuadratureRule::Gauss => quadrature::gauss_legendre_on(lo, hi, n_nodes),
        };
        let mut raw = Vec::with_capacity(n_nodes);
        for (x, w) in points.iter().zip(&qw) {
            let d = density(*x);
            if !d.is_finite() || d < 0.0 {
                return Err(Error::InvalidArgument(format!("density is {d} at {x}")));
            }
            raw.push(w * d);
        }
        let mass = NeumaierSum::of(raw.iter().copied());
        if !(mass > 1e-300) {
            return Err(Error::DegenerateMeasure(format!(
                "density integrates to {mass} on [{lo}, {hi}]"
            )));
        }
        let weights = normalized(&raw)?;
        Self::from_parts(AlphabetKind::Discretized, points, weights, Metric::AbsoluteDifference)
    }

    /// Replaces the base metric (for example with a circle metric).
    pub fn with_metric(self, metric: Metric) -> Result<Self> {
        Self::from_parts(self.kind, self.points, self.weights, metric)
    }

    pub fn kind(&self) -> AlphabetKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, a: usize) -> f64 {
        self.weights[a]
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    /// `d_𝒜` between two symbols.
    pub fn distance(&self, a: usize, b: usize) -> f64 {
        self.metric.distance(self.points[a], self.points[b])
    }

    /// `∫ f dp = Σ_a p_a f(a)`.
    pub fn integrate(&self, f: impl Fn(usize) -> f64) -> f64 {
        NeumaierSum::of(self.weights.iter().enumerate().map(|(a, w)| w * f(a)))
    }
}

fn normalized(weights: &[f64]) -> Result<Vec<f64>> {
    if weights.is_empty() {
        return Err(Error::InvalidArgument("alphabet size must be at least 1".into()));
    }
    if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
        return Err(Error::DegenerateMeasure(format!(
            "a priori weight {w} is not strictly positive (full support required)"
        )));
    }
    let total = NeumaierSum::of(weights.iter().copied());
    let mut out: Vec<f64> = weights.iter().map(|w| w / total).collect();
    // One correction pass absorbs the last ulp of normalization error.
    let residual = 1.0 - NeumaierSum::of(out.iter().copied());
    let (imax, _) = out
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty");
    out[imax] += residual;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_finite_weights() {
        let a = Alphabet::uniform_finite(2).unwrap();
        assert_eq!(a.weights(), &[0.5, 0.5]);
        let a = Alphabet::uniform_finite(1).unwrap();
        assert_eq!(a.weights(), &[1.0]);
        let a = Alphabet::uniform_finite(3).unwrap();
        assert!(a.weights().iter().all(|w| (w - 1.0 / 3.0).abs() < 1e-16));
        assert!((a.weights().iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn empty_alphabet_rejected() {
        assert!(matches!(Alphabet::uniform_finite(0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn dirac_weights_rejected() {
        let err = Alphabet::finite_with_weights(&[1.0, 0.0]).unwrap_err();
        assert!(matches!(err, Error::DegenerateMeasure(_)));
    }

    #[test]
    fn midpoint_two_nodes_on_unit_interval() {
        let a = Alphabet::discretize_interval(0.0, 1.0, &Density::Uniform, 2, QuadratureRule::Midpoint)
            .unwrap();
        assert_eq!(a.points(), &[0.25, 0.75]);
        assert_eq!(a.weights(), &[0.5, 0.5]);
        assert_eq!(a.kind(), AlphabetKind::Discretized);
    }

    #[test]
    fn gauss_weights_normalized() {
        for n in [1, 7, 64, 128] {
            let a = Alphabet::discretize_interval(0.0, 1.0, &Density::Uniform, n, QuadratureRule::Gauss)
                .unwrap();
            assert!((a.weights().iter().sum::<f64>() - 1.0).abs() < 1e-14);
            assert!(a.points().iter().all(|x| (0.0..=1.0).contains(x)));
        }
    }

    #[test]
    fn zero_density_is_degenerate() {
        let err = Alphabet::discretize_interval_with(0.0, 1.0, |_| 0.0, 8, QuadratureRule::Gauss)
            .unwrap_err();
        assert!(matches!(err, Error::DegenerateMeasure(_)));
    }

    #[test]
    fn bad_interval_rejected() {
        assert!(Alphabet::discretize_interval(1.0, 1.0, &Density::Uniform, 4, QuadratureRule::Gauss).is_err());
        assert!(Alphabet::discretize_interval(0.0, 1.0, &Density::Uniform, 0, QuadratureRule::Gauss).is_err());
    }

    #[test]
    fn integrate_examples() {
        let a = Alphabet::uniform_finite(2).unwrap();
        assert_eq!(a.integrate(|_| 1.0), 1.0);
        assert_eq!(a.integrate(|s| if s == 0 { 1.0 } else { 0.0 }), 0.5);

        let c = Alphabet::discretize_interval(0.0, 1.0, &Density::Uniform, 64, QuadratureRule::Gauss)
            .unwrap();
        let pts = c.points().to_vec();
        assert!((c.integrate(|i| pts[i]) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn weighted_density_moments() {
        // p(x) ∝ 2x on [0, 1]: E[x] = 2/3.
        let a = Alphabet::discretize_interval(
            0.0,
            1.0,
            &Density::Polynomial { coefficients: vec![0.0, 2.0] },
            16,
            QuadratureRule::Gauss,
        )
        .unwrap();
        let pts = a.points().to_vec();
        assert!((a.integrate(|i| pts[i]) - 2.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn metrics() {
        assert_eq!(Metric::Discrete.distance(1.0, 1.0), 0.0);
        assert_eq!(Metric::Discrete.distance(0.0, 3.0), 1.0);
        assert_eq!(Metric::AbsoluteDifference.distance(-0.5, 0.25), 0.75);
        let c = Metric::Circle { circumference: 1.0 };
        assert!((c.distance(0.05, 0.95) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn json_round_trip_validates() {
        let a = Alphabet::finite_with_weights(&[1.0, 3.0]).unwrap();
        let text = serde_json::to_string(&a).unwrap();
        assert!(text.contains("\"kind\":\"finite\""));
        let back: Alphabet = serde_json::from_str(&text).unwrap();
        assert_eq!(a, back);

        let bad = r#"{"kind":"finite","points":[0,1],"weights":[1.0,0.0],"metric":"discrete"}"#;
        assert!(serde_json::from_str::<Alphabet>(bad).is_err());
    }
}
