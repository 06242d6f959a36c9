use std::path::Path;

use anyhow::anyhow;
use clap::ValueEnum;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ruelle_core::dlr::dlr_check;
use ruelle_core::entropy::{
    kernel_entropy_identity, relative_entropy_rate, relative_entropy_rate_empirical, relative_entropy_volume,
    specific_entropy_markov, volume_entropy,
};
use ruelle_core::exec;
use ruelle_core::measures::{integrate_local, CylinderMeasure};
use ruelle_core::symbolic::{enumeration_budget, word_count};
use ruelle_core::transfer::{normalization_residual, normalize, rpf_solve, SpectralData, TransferMatrix};
use ruelle_core::variational::{
    entropy_variational, gradient_check, pressure_variational_check, uniqueness_probe,
};
use ruelle_core::{Error, MarkovMeasure, Potential, Sequence};
use serde::Serialize;
use serde_json::json;

use crate::config::{Experiment, MeasureSpec};
use crate::error::CliError;
use crate::report::{ext, num, write_csv, write_json, Check};

/// What a command produced.
#[derive(Default)]
pub struct Outcome {
    pub checks: Vec<Check>,
    pub outputs: Vec<String>,
    /// Rows that failed numerically while the run continued.
    pub numeric_failures: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Which {
    #[value(alias = "theorem1")]
    Identity,
    Dlr,
    Equivalence,
    Walters,
    #[value(alias = "corollary")]
    Optimality,
    All,
}

fn spectral(exp: &Experiment, f: &Potential) -> Result<SpectralData, CliError> {
    Ok(rpf_solve(&TransferMatrix::build(f, &exp.alphabet)?, exp.config.rpf)?)
}

fn gibbs(exp: &Experiment, f: &Potential) -> Result<(SpectralData, Potential, MarkovMeasure), CliError> {
    let s = spectral(exp, f)?;
    let bar = normalize(f, &s)?;
    let mu = MarkovMeasure::gibbs_from_normalized(&bar, &exp.alphabet)?;
    Ok((s, bar, mu))
}

/// Largest `n ≤ n_max` with `m^(n + extra)` within the enumeration budget.
fn capped_n(m: usize, n_max: usize, extra: usize) -> Result<usize, CliError> {
    let n = (1..=n_max).take_while(|n| word_count(m, n + extra).is_ok()).last();
    n.ok_or_else(|| {
        CliError::from(Error::EnumerationTooLarge {
            requested: (m as u128).saturating_pow(1 + extra as u32),
            budget: enumeration_budget(),
        })
    })
}

pub fn rpf(exp: &Experiment, out: &Path) -> Result<Outcome, CliError> {
    let s = spectral(exp, &exp.potential)?;
    let residual = normalization_residual(&normalize(&exp.potential, &s)?, &exp.alphabet)?;
    #[derive(Serialize)]
    struct Report<'a> {
        #[serde(flatten)]
        spectral: &'a SpectralData,
        normalization_residual: f64,
    }
    println!("lambda = {}", num(s.lambda));
    println!("log lambda = {}", num(s.log_lambda));
    println!("iterations = {} / {}", s.iterations, s.adjoint_iterations);
    let file = write_json(out, "rpf.json", &Report { spectral: &s, normalization_residual: residual })?;
    Ok(Outcome { outputs: vec![file], ..Default::default() })
}

pub fn scan(exp: &Experiment, out: &Path) -> Result<Outcome, CliError> {
    let grid = exp
        .config
        .beta_grid
        .as_ref()
        .ok_or_else(|| CliError::Config(anyhow!("scan needs beta_grid")))?
        .values();
    let f = &exp.potential;
    let rows = exec::map_indexed(grid.len(), |i| -> Result<[f64; 4], CliError> {
        let beta = grid[i];
        let (s, _, mu) = gibbs(exp, &f.scaled(beta))?;
        let energy = integrate_local(&mu, f)?;
        let entropy = specific_entropy_markov(&mu, &exp.alphabet)?;
        let residual = (entropy + beta * energy - s.log_lambda).abs();
        Ok([s.log_lambda, energy, entropy, residual])
    });

    let mut lines = Vec::with_capacity(grid.len());
    let mut failures = 0;
    let mut max_residual = 0.0f64;
    let mut good: Vec<(f64, f64)> = Vec::new();
    for (beta, row) in grid.iter().zip(&rows) {
        match row {
            Ok(values) => {
                max_residual = max_residual.max(values[3]);
                good.push((*beta, values[0]));
                let status = if values[3] <= 1e-10 { "ok" } else { "identity_fail" };
                let mut line = vec![num(*beta)];
                line.extend(values.iter().map(|v| num(*v)));
                line.push(status.into());
                lines.push(line);
            }
            Err(e) => {
                failures += 1;
                let mut line = vec![num(*beta)];
                line.extend(std::iter::repeat_n("nan".to_string(), 4));
                line.push(format!("error: {e}"));
                lines.push(line);
            }
        }
    }
    let file = write_csv(
        out,
        "scan.csv",
        &["beta", "pressure", "energy", "entropy", "identity_residual", "status"],
        &lines,
    )?;

    good.sort_by(|a, b| a.0.total_cmp(&b.0));
    let slopes: Vec<f64> = good.windows(2).map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0)).collect();
    let widths: Vec<f64> = good.windows(3).map(|w| 0.5 * (w[2].0 - w[0].0)).collect();
    // Divided second differences, scaled back to the grid spacing.
    let min_second = slopes
        .windows(2)
        .zip(&widths)
        .map(|(s, h)| (s[1] - s[0]) * h * h)
        .fold(f64::INFINITY, f64::min);
    let mut checks = vec![Check::at_most("scan.identity", max_residual, 1e-10)];
    if min_second.is_finite() {
        checks.push(Check::at_least("scan.convexity", min_second, -1e-10));
    }
    Ok(Outcome { checks, outputs: vec![file], numeric_failures: failures })
}

pub fn entropy(exp: &Experiment, out: &Path) -> Result<Outcome, CliError> {
    let mu = exp.measure(MeasureSpec::Gibbs)?;
    let (s, _, eq) = gibbs(exp, &exp.potential)?;
    let n_used = capped_n(exp.alphabet.len(), exp.config.n_max, 0)?;
    let mut lines = Vec::new();
    let mut h_n = Vec::new();
    for n in 1..=n_used {
        let h = volume_entropy(&mu, &exp.alphabet, n)?;
        let rel = relative_entropy_volume(&mu, &eq, n)?;
        h_n.push(rel);
        lines.push(vec![n.to_string(), ext(h), ext(h.per(n)), ext(rel), ext(rel.per(n))]);
    }
    let csv = write_csv(
        out,
        "entropy.csv",
        &["n", "volume_entropy", "volume_entropy_per_site", "relative_entropy", "relative_entropy_per_site"],
        &lines,
    )?;

    let hs = specific_entropy_markov(&mu, &exp.alphabet)?;
    let energy = integrate_local(&mu, &exp.potential)?;
    let rate = relative_entropy_rate(&mu, &exp.potential, &s)?;
    let report = relative_entropy_rate_empirical(&mu, &eq, n_used.max(2))?;
    let increment = report.extrapolated_limit;
    let summary = json!({
        "n_used": n_used,
        "specific_entropy": hs,
        "pressure": s.log_lambda,
        "energy": energy,
        "relative_entropy_rate": rate,
        "relative_entropy_increment": increment,
        "max_second_difference": report.max_residual(),
    });
    let js = write_json(out, "entropy.json", &summary)?;
    println!("specific entropy = {}", num(hs));
    println!("relative entropy rate = {}", ext(rate));

    let mut checks = vec![Check::at_most("entropy.affine", report.max_residual(), 1e-12).with_n(n_used)];
    if let (Some(a), Some(b)) = (increment.finite(), rate.finite()) {
        checks.push(Check::at_most("entropy.rate_formula", (a - b).abs(), 1e-8).with_n(n_used));
    }
    Ok(Outcome { checks, outputs: vec![csv, js], ..Default::default() })
}

pub fn sample(exp: &Experiment, out: &Path) -> Result<Outcome, CliError> {
    let mu = exp.measure(MeasureSpec::Gibbs)?;
    let path = mu.sample_path(exp.config.sample_length, exp.config.seed);
    let points = exp.alphabet.points();
    let lines: Vec<Vec<String>> = path
        .iter()
        .enumerate()
        .map(|(i, a)| vec![i.to_string(), a.to_string(), num(points[*a])])
        .collect();
    let file = write_csv(out, "sample.csv", &["position", "symbol", "point"], &lines)?;
    println!("wrote {} symbols", lines.len());
    Ok(Outcome { outputs: vec![file], ..Default::default() })
}

pub fn verify(exp: &Experiment, out: &Path, which: Which) -> Result<Outcome, CliError> {
    let selected: Vec<Which> = match which {
        Which::All => vec![Which::Identity, Which::Dlr, Which::Equivalence, Which::Walters, Which::Optimality],
        w => vec![w],
    };
    let results = exec::map_indexed(selected.len(), |i| match selected[i] {
        Which::Identity => verify_identity(exp),
        Which::Dlr => verify_dlr(exp),
        Which::Equivalence => verify_equivalence(exp),
        Which::Walters => verify_walters(exp),
        Which::Optimality => verify_optimality(exp),
        Which::All => unreachable!(),
    });
    let mut checks = Vec::new();
    for r in results {
        checks.extend(r?);
    }
    let file = write_json(out, "verify.json", &checks)?;
    Ok(Outcome { checks, outputs: vec![file], ..Default::default() })
}

fn test_measure(exp: &Experiment) -> Result<MarkovMeasure, CliError> {
    exp.measure(MeasureSpec::Random { seed: None, memory: 1 })
}

fn random_boundary(m: usize, seed: u64) -> Sequence {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let prefix = (0..16).map(|_| rng.gen_range(0..m)).collect();
    let period = (0..3).map(|_| rng.gen_range(0..m)).collect();
    Sequence::new(prefix, period).expect("nonempty period")
}

fn verify_identity(exp: &Experiment) -> Result<Vec<Check>, CliError> {
    let f = &exp.potential;
    let m = exp.alphabet.len();
    let mu = test_measure(exp)?;
    let (s, bar, eq) = gibbs(exp, f)?;
    let n_used = capped_n(m, exp.config.n_max, 0)?;

    let boundaries = [Sequence::constant(0), random_boundary(m, exp.config.seed)];
    let mut rows = Vec::new();
    let mut worst = 0.0f64;
    for (b, y) in boundaries.iter().enumerate() {
        for n in 1..=n_used {
            let id = kernel_entropy_identity(&mu, &bar, y, n)?;
            worst = worst.max(id.residual);
            rows.push(json!({"boundary": b, "n": n, "lhs": id.lhs, "rhs": id.rhs, "residual": id.residual}));
        }
    }
    let identity = Check::at_most("identity.identity", worst, 1e-12).with_n(n_used).with_rows(rows);

    let n_limit = n_used.max(2);
    let report = relative_entropy_rate_empirical(&mu, &eq, n_limit)?;
    let formula = relative_entropy_rate(&mu, f, &s)?;
    let formula = formula.finite().ok_or_else(|| CliError::Numeric(anyhow!("relative entropy rate is infinite")))?;
    let rate_err = report.increments().iter().map(|inc| (inc - formula).abs()).fold(0.0, f64::max);
    let rows = report.n_values.iter().zip(&report.h_n).map(|(n, h)| json!({"n": n, "relative_entropy": h}));
    let limit = Check::at_most("identity.rate", rate_err, 1e-8)
        .with_n(n_limit)
        .with_note(format!("rate {}", num(formula)))
        .with_rows(rows);
    let affine = Check::at_most("identity.affine", report.max_residual(), 1e-12).with_n(n_limit);
    Ok(vec![identity, limit, affine])
}

fn verify_dlr(exp: &Experiment) -> Result<Vec<Check>, CliError> {
    let f = &exp.potential;
    let m = exp.alphabet.len();
    let (_, bar, eq) = gibbs(exp, f)?;
    let n_used = capped_n(m, exp.config.n_max, f.depth().max(2) - 1)?;
    let run = |mu: &MarkovMeasure| -> Result<(f64, Vec<serde_json::Value>), CliError> {
        let mut rows = Vec::new();
        let mut worst = 0.0f64;
        for n in 1..=n_used {
            let r = dlr_check(mu, &bar, n)?;
            worst = worst.max(r);
            rows.push(json!({"n": n, "residual": r}));
        }
        Ok((worst, rows))
    };
    let (worst, rows) = run(&eq)?;
    let mut checks = vec![Check::at_most("dlr.gibbs", worst, 1e-12).with_n(n_used).with_rows(rows)];

    let control = match &exp.config.measure {
        Some(MeasureSpec::Gibbs) => None,
        Some(_) => Some(test_measure(exp)?),
        None => Some(MarkovMeasure::product_measure(&exp.alphabet)),
    };
    if let Some(mu) = control {
        let (worst, rows) = run(&mu)?;
        checks.push(
            Check::at_least("dlr.control", worst, 1e-12)
                .with_n(n_used)
                .with_rows(rows)
                .with_note("expected-negative control")
                .negative_control(),
        );
    }
    Ok(checks)
}

fn verify_equivalence(exp: &Experiment) -> Result<Vec<Check>, CliError> {
    let mu = test_measure(exp)?;
    let mut cfg = exp.config.optimizer;
    cfg.seed = exp.config.seed;
    cfg.family_depth = cfg.family_depth.max(mu.memory() + 1);
    let report = entropy_variational(&mu, &cfg)?;
    let gap = Check::at_most("equivalence.gap", report.gap, 1e-4).with_note(format!(
        "h_v {} h_s {} iterations {} converged {}",
        num(report.h_v),
        num(report.h_s),
        report.iterations,
        report.converged
    ));
    let g = Potential::random(mu.alphabet().len(), cfg.family_depth, 1.0, exp.config.seed)?;
    let grad = Check::at_most("equivalence.gradient", gradient_check(&mu, &g, 1e-5)?, 1e-6);
    let sup = Check::at_most("equivalence.pressure", report.pressure_check, 1e-10);
    Ok(vec![gap, grad, sup])
}

fn verify_walters(exp: &Experiment) -> Result<Vec<Check>, CliError> {
    let f = &exp.potential;
    let k = f.depth();
    let rows = (0..=k)
        .map(|j| Ok(json!({"j": j, "modulus": f.walters_modulus(exp.config.n_max, j)?})))
        .collect::<Result<Vec<_>, CliError>>()?;
    let beyond = (k.max(2) - 1..=k)
        .map(|j| f.walters_modulus(exp.config.n_max, j))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let name = "walters.modulus";
    Ok(vec![Check::at_most(name, beyond, 0.0)
        .with_note(format!("j ≥ {}", k.max(2) - 1))
        .with_n(exp.config.n_max)
        .with_rows(rows)])
}

fn verify_optimality(exp: &Experiment) -> Result<Vec<Check>, CliError> {
    let f = &exp.potential;
    let a = &exp.alphabet;
    let cfg = &exp.config;
    let check = pressure_variational_check(f, a, cfg.trials, cfg.seed)?;
    let excess = check.max_value - check.log_lambda;
    let sup = Check::at_most("optimality.pressure_bound", excess, 1e-12)
        .with_note(format!("{} trials, min deficit {}", cfg.trials, num(check.min_deficit)));
    let attained = Check::at_most("optimality.equilibrium", check.equilibrium_residual, 1e-10);
    let probe = uniqueness_probe(f, a, cfg.trials, cfg.epsilon, cfg.seed)?;
    let order = probe.fitted_order.map_or("undefined".into(), |o| format!("{o:.3}"));
    let unique = Check::at_most("optimality.uniqueness", (probe.violations + probe.dlr_violations) as f64, 0.0)
        .with_note(format!("epsilon {} min rate {} fitted order {order}", cfg.epsilon, num(probe.min_rate)));
    Ok(vec![sup, attained, unique])
}
