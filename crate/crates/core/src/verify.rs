//! Dominance oracles: exact ψ(λ) enumeration over finite observation
//! sequences (increasing convex dominance of conditional means) and
//! Monte-Carlo estimators of MSE and convex test-function expectations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::core::{Belief, StateLevels, StochasticMatrix};
use crate::filter::{filter_sequence, FilterError};
use crate::orders::ENUMERATION_CAP;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VerifyError {
    #[error("enumeration cap exceeded at k = {0}")]
    EnumerationCapExceeded(usize),
    #[error(transparent)]
    Filter(#[from] FilterError),
}

/// ψ ≥ −PSI_TOL counts as nonnegative.
pub const PSI_TOL: f64 = 1e-10;

/// Pairwise (tree) summation: deterministic and more accurate than a running
/// sum, independent of any parallel partitioning upstream.
pub fn tree_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        n => {
            let mid = n / 2;
            tree_sum(&values[..mid]) + tree_sum(&values[mid..])
        }
    }
}

/// All (conditional mean, sequence probability) pairs over Y^k observation
/// sequences, sharing filter prefixes.
pub fn enumerate_conditional_means(
    kernel: &StochasticMatrix,
    p: &StochasticMatrix,
    pi0: &Belief,
    g: &StateLevels,
    k: usize,
) -> Result<Vec<(f64, f64)>, VerifyError> {
    let y = kernel.cols();
    if (y as f64).powi(k as i32) > ENUMERATION_CAP {
        return Err(VerifyError::EnumerationCapExceeded(k));
    }
    let mut out = Vec::with_capacity(y.pow(k as u32));
    // depth-first over sequences, carrying (belief weights, probability)
    fn rec(
        kernel: &StochasticMatrix,
        p: &StochasticMatrix,
        g: &StateLevels,
        belief: &[f64],
        prob: f64,
        depth: usize,
        out: &mut Vec<(f64, f64)>,
    ) {
        if depth == 0 {
            let m: f64 = g.values().iter().zip(belief).map(|(a, b)| a * b).sum();
            out.push((m, prob));
            return;
        }
        let x = kernel.rows();
        let mut predicted = vec![0.0; x];
        for (i, &w) in belief.iter().enumerate() {
            for j in 0..x {
                predicted[j] += p.at(i, j) * w;
            }
        }
        for yv in 0..kernel.cols() {
            let un: Vec<f64> = (0..x).map(|i| kernel.at(i, yv) * predicted[i]).collect();
            let sigma: f64 = un.iter().sum();
            if sigma <= 0.0 {
                continue; // zero-probability branch contributes nothing
            }
            let next: Vec<f64> = un.iter().map(|v| v / sigma).collect();
            rec(kernel, p, g, &next, prob * sigma, depth - 1, out);
        }
    }
    rec(kernel, p, g, pi0.weights(), 1.0, k, &mut out);
    Ok(out)
}

/// ψ(λ) sampled on a uniform grid plus every attained conditional-mean value
/// (the breakpoints), making the curve exact for finite alphabets.
#[derive(Debug, Clone, Serialize)]
pub struct PsiCurve {
    pub lambdas: Vec<f64>,
    pub psi: Vec<f64>,
    pub min_value: f64,
    pub min_lambda: f64,
    pub k: usize,
    pub prior: Belief,
}

impl PsiCurve {
    /// Increasing convex dominance holds iff ψ never dips below −PSI_TOL.
    pub fn dominance_holds(&self) -> bool {
        self.min_value >= -PSI_TOL
    }
}

/// ψ(λ) = Σ over sensor-2 sequences of [m₂ − λ]⁺ σ₂ minus the same sum for
/// sensor 1, by exhaustive enumeration.
pub fn psi_exact(
    b1: &StochasticMatrix,
    b2: &StochasticMatrix,
    p: &StochasticMatrix,
    pi0: &Belief,
    g: &StateLevels,
    k: usize,
    lambda_points: usize,
) -> Result<PsiCurve, VerifyError> {
    let e1 = enumerate_conditional_means(b1, p, pi0, g, k)?;
    let e2 = enumerate_conditional_means(b2, p, pi0, g, k)?;
    let gv = g.values();
    let (lo, hi) = (gv[0] - 0.01, gv[gv.len() - 1] + 0.01);
    let npts = lambda_points.max(2);
    let mut lambdas: Vec<f64> = (0..npts)
        .map(|i| lo + (hi - lo) * i as f64 / (npts - 1) as f64)
        .collect();
    lambdas.extend(e1.iter().chain(e2.iter()).map(|&(m, _)| m));
    lambdas.sort_by(|a, b| a.partial_cmp(b).unwrap());
    lambdas.dedup();
    let hinge_sum = |ms: &[(f64, f64)], lam: f64| -> f64 {
        let terms: Vec<f64> = ms
            .iter()
            .map(|&(m, s)| if m > lam { (m - lam) * s } else { 0.0 })
            .collect();
        tree_sum(&terms)
    };
    let psi: Vec<f64> = lambdas
        .iter()
        .map(|&lam| hinge_sum(&e2, lam) - hinge_sum(&e1, lam))
        .collect();
    let (mut min_value, mut min_lambda) = (f64::INFINITY, lambdas[0]);
    for (&l, &v) in lambdas.iter().zip(&psi) {
        if v < min_value {
            min_value = v;
            min_lambda = l;
        }
    }
    Ok(PsiCurve { lambdas, psi, min_value, min_lambda, k, prior: pi0.clone() })
}

/// Exact MSE of the conditional mean by full enumeration: for each sequence,
/// σ · Σ_x π_k(x) (g(x) − m)².
pub fn exact_mse(
    kernel: &StochasticMatrix,
    p: &StochasticMatrix,
    pi0: &Belief,
    g: &StateLevels,
    k: usize,
) -> Result<f64, VerifyError> {
    let y = kernel.cols();
    if (y as f64).powi(k as i32) > ENUMERATION_CAP {
        return Err(VerifyError::EnumerationCapExceeded(k));
    }
    fn rec(
        kernel: &StochasticMatrix,
        p: &StochasticMatrix,
        g: &[f64],
        belief: &[f64],
        prob: f64,
        depth: usize,
        acc: &mut Vec<f64>,
    ) {
        if depth == 0 {
            let m: f64 = g.iter().zip(belief).map(|(a, b)| a * b).sum();
            let v: f64 = g
                .iter()
                .zip(belief)
                .map(|(gi, bi)| bi * (gi - m) * (gi - m))
                .sum();
            acc.push(prob * v);
            return;
        }
        let x = kernel.rows();
        let mut predicted = vec![0.0; x];
        for (i, &w) in belief.iter().enumerate() {
            for j in 0..x {
                predicted[j] += p.at(i, j) * w;
            }
        }
        for yv in 0..kernel.cols() {
            let un: Vec<f64> = (0..x).map(|i| kernel.at(i, yv) * predicted[i]).collect();
            let sigma: f64 = un.iter().sum();
            if sigma <= 0.0 {
                continue;
            }
            let next: Vec<f64> = un.iter().map(|v| v / sigma).collect();
            rec(kernel, p, g, &next, prob * sigma, depth - 1, acc);
        }
    }
    let mut acc = Vec::new();
    rec(kernel, p, g.values(), pi0.weights(), 1.0, k, &mut acc);
    Ok(tree_sum(&acc))
}

/// Exact E{φ(m)} by enumeration, for cross-checking the Monte-Carlo path.
pub fn exact_expected_phi(
    kernel: &StochasticMatrix,
    p: &StochasticMatrix,
    pi0: &Belief,
    g: &StateLevels,
    k: usize,
    phi: &PhiSpec,
) -> Result<f64, VerifyError> {
    let ms = enumerate_conditional_means(kernel, p, pi0, g, k)?;
    let terms: Vec<f64> = ms.iter().map(|&(m, s)| phi.eval(m) * s).collect();
    Ok(tree_sum(&terms))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct MonteCarloEstimate {
    pub value: f64,
    pub standard_error: f64,
    pub trials: usize,
    pub seed: u64,
}

fn estimate_from_samples(samples: &[f64], seed: u64) -> MonteCarloEstimate {
    let n = samples.len();
    let mean = tree_sum(samples) / n as f64;
    let devs: Vec<f64> = samples.iter().map(|&v| (v - mean) * (v - mean)).collect();
    let var = tree_sum(&devs) / (n as f64 - 1.0);
    MonteCarloEstimate {
        value: mean,
        standard_error: (var / n as f64).sqrt(),
        trials: n,
        seed,
    }
}

/// One-sided z statistic for value(a) ≥ value(b).
pub fn dominance_z(a: &MonteCarloEstimate, b: &MonteCarloEstimate) -> f64 {
    (a.value - b.value)
        / (a.standard_error * a.standard_error + b.standard_error * b.standard_error).sqrt()
}

fn sample_categorical(rng: &mut ChaCha8Rng, probs: &[f64]) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

/// Simulates one trajectory and returns (g(x_k), conditional mean m).
/// Seeding is counter-based per trajectory and per sensor, so results are
/// bit-identical regardless of worker count.
fn simulate_trajectory(
    kernel: &StochasticMatrix,
    p: &StochasticMatrix,
    pi0: &Belief,
    g: &StateLevels,
    k: usize,
    seed: u64,
    index: u64,
    stream: u64,
) -> (f64, f64) {
    // one key per run, one counter-based stream per (sensor, trajectory):
    // trajectories stay independent and nearby seeds cannot collide
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((stream << 32) | index);
    let mut x = sample_categorical(&mut rng, pi0.weights());
    let mut ys = Vec::with_capacity(k);
    for _ in 0..k {
        x = sample_categorical(&mut rng, p.row(x));
        ys.push(sample_categorical(&mut rng, kernel.row(x)));
    }
    let fs = filter_sequence(pi0, &ys, p, kernel).expect("simulated observation has σ > 0");
    (g.values()[x], crate::filter::conditional_mean(&fs, g))
}

#[derive(Debug, Clone, Serialize)]
pub struct MseEstimates {
    pub sensor1: MonteCarloEstimate,
    pub sensor2: MonteCarloEstimate,
    /// Monte-Carlo estimate of E{g²} − E{m²} per sensor: matches the MSE at
    /// identity transitions (law of total variance cross-check).
    pub variance_identity1: f64,
    pub variance_identity2: f64,
    /// One-sided z for MSE₁ ≥ MSE₂.
    pub z: f64,
}

/// Monte-Carlo MSE of the conditional mean for both sensors.
pub fn mse_monte_carlo(
    b1: &StochasticMatrix,
    b2: &StochasticMatrix,
    p: &StochasticMatrix,
    pi0: &Belief,
    g: &StateLevels,
    k: usize,
    trials: usize,
    seed: u64,
) -> MseEstimates {
    let run = |kernel: &StochasticMatrix, stream: u64| -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let rows: Vec<(f64, f64)> = (0..trials as u64)
            .into_par_iter()
            .map(|i| simulate_trajectory(kernel, p, pi0, g, k, seed, i, stream))
            .collect();
        let sq_err: Vec<f64> = rows.iter().map(|&(gx, m)| (gx - m) * (gx - m)).collect();
        let g2: Vec<f64> = rows.iter().map(|&(gx, _)| gx * gx).collect();
        let m2: Vec<f64> = rows.iter().map(|&(_, m)| m * m).collect();
        (sq_err, g2, m2)
    };
    let (e1, g21, m21) = run(b1, 1);
    let (e2, g22, m22) = run(b2, 2);
    let n = trials as f64;
    let sensor1 = estimate_from_samples(&e1, seed);
    let sensor2 = estimate_from_samples(&e2, seed);
    let z = dominance_z(&sensor1, &sensor2);
    MseEstimates {
        sensor1,
        sensor2,
        variance_identity1: (tree_sum(&g21) - tree_sum(&m21)) / n,
        variance_identity2: (tree_sum(&g22) - tree_sum(&m22)) / n,
        z,
    }
}

/// Convex test function for the empirical dominance battery.
#[derive(Debug, Clone, Copy, Serialize)]
pub enum PhiSpec {
    Square,
    Hinge(f64),
    Max(f64),
}

impl PhiSpec {
    pub fn eval(&self, m: f64) -> f64 {
        match *self {
            PhiSpec::Square => m * m,
            PhiSpec::Hinge(c) => (m - c).max(0.0),
            PhiSpec::Max(c) => m.max(c),
        }
    }

    pub fn name(&self) -> String {
        match *self {
            PhiSpec::Square => "m^2".into(),
            PhiSpec::Hinge(c) => format!("[m - {c:.3}]+"),
            PhiSpec::Max(c) => format!("max(m, {c:.3})"),
        }
    }
}

/// Default battery: square, five hinges across the level range, one max.
pub fn default_phi_battery(g: &StateLevels) -> Vec<PhiSpec> {
    let (lo, hi) = (g.values()[0], g.values()[g.len() - 1]);
    let mut battery = vec![PhiSpec::Square];
    for j in 1..=5 {
        battery.push(PhiSpec::Hinge(lo + (hi - lo) * j as f64 / 6.0));
    }
    battery.push(PhiSpec::Max(0.5 * (lo + hi)));
    battery
}

#[derive(Debug, Clone, Serialize)]
pub struct PhiResult {
    pub phi: String,
    pub sensor1: MonteCarloEstimate,
    pub sensor2: MonteCarloEstimate,
    /// One-sided z for E₂{φ(m)} ≥ E₁{φ(m)}; the dominance direction of a
    /// more informative sensor 2. Statistical evidence, not proof.
    pub z: f64,
}

/// Monte-Carlo E{φ(m)} for every φ in the battery, both sensors.
pub fn convex_dominance_empirical(
    b1: &StochasticMatrix,
    b2: &StochasticMatrix,
    p: &StochasticMatrix,
    pi0: &Belief,
    g: &StateLevels,
    k: usize,
    battery: &[PhiSpec],
    trials: usize,
    seed: u64,
) -> Vec<PhiResult> {
    let run = |kernel: &StochasticMatrix, stream: u64| -> Vec<f64> {
        (0..trials as u64)
            .into_par_iter()
            .map(|i| simulate_trajectory(kernel, p, pi0, g, k, seed, i, stream).1)
            .collect()
    };
    let m1 = run(b1, 1);
    let m2 = run(b2, 2);
    battery
        .iter()
        .map(|phi| {
            let s1: Vec<f64> = m1.iter().map(|&m| phi.eval(m)).collect();
            let s2: Vec<f64> = m2.iter().map(|&m| phi.eval(m)).collect();
            let sensor1 = estimate_from_samples(&s1, seed);
            let sensor2 = estimate_from_samples(&s2, seed);
            let z = dominance_z(&sensor2, &sensor1);
            PhiResult { phi: phi.name(), sensor1, sensor2, z }
        })
        .collect()
}

/// Barycentric grid on the simplex: all compositions of `res` into X parts,
/// scaled by 1/res. X = 3, res = 10 gives 66 points; X = 2, res = 100 gives
/// the 101-point sweep.
pub fn simplex_grid(x: usize, res: usize) -> Vec<Belief> {
    fn rec(x: usize, res: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if x == 1 {
            let used: usize = prefix.iter().sum();
            prefix.push(res - used);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        let used: usize = prefix.iter().sum();
        for v in 0..=res - used {
            prefix.push(v);
            rec(x - 1, res, prefix, out);
            prefix.pop();
        }
    }
    let mut comps = Vec::new();
    rec(x, res, &mut Vec::new(), &mut comps);
    comps
        .into_iter()
        .map(|c| {
            Belief::new(c.into_iter().map(|v| v as f64 / res as f64).collect())
                .expect("grid point sums to 1")
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::validate_stochastic;
    use approx::assert_abs_diff_eq;

    fn m(rows: &[&[f64]]) -> StochasticMatrix {
        validate_stochastic(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn setup3() -> (StochasticMatrix, Belief, StateLevels) {
        (
            StochasticMatrix::identity(3),
            Belief::uniform(3),
            StateLevels::new(vec![0.0, 1.0, 2.0]).unwrap(),
        )
    }

    #[test]
    fn sequence_probabilities_sum_to_one() {
        let (p, pi, g) = setup3();
        let b = m(&[&[0.8, 0.2, 0.0], &[0.1, 0.8, 0.1], &[0.0, 0.2, 0.8]]);
        for k in 1..=4 {
            let ms = enumerate_conditional_means(&b, &p, &pi, &g, k).unwrap();
            let total: f64 = ms.iter().map(|&(_, s)| s).sum();
            assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn psi_identically_zero_for_identical_sensors() {
        let (p, pi, g) = setup3();
        let b = m(&[&[0.8, 0.2, 0.0], &[0.1, 0.8, 0.1], &[0.0, 0.2, 0.8]]);
        for k in 1..=3 {
            let c = psi_exact(&b, &b, &p, &pi, &g, k, 101).unwrap();
            assert!(c.psi.iter().all(|&v| v.abs() < 1e-12));
            assert!(c.dominance_holds());
        }
    }

    #[test]
    fn psi_vanishes_outside_level_range() {
        let (p, pi, g) = setup3();
        let b1 = m(&[&[0.8, 0.2, 0.0], &[0.1, 0.8, 0.1], &[0.0, 0.2, 0.8]]);
        let b2 = m(&[&[0.9, 0.1, 0.0], &[0.1, 0.8, 0.1], &[0.0, 0.15, 0.85]]);
        let c = psi_exact(&b1, &b2, &p, &pi, &g, 2, 101).unwrap();
        // first grid point sits below g_1: ψ = E₂{m} − E₁{m} = 0 by the
        // martingale property; last sits above g_X where both sums are empty
        assert!(c.psi.first().unwrap().abs() < 1e-12);
        assert!(c.psi.last().unwrap().abs() < 1e-12);
    }

    #[test]
    fn psi_grid_refinement_is_stable() {
        let (p, pi, g) = setup3();
        let b1 = m(&[&[0.8, 0.2, 0.0], &[0.1, 0.8, 0.1], &[0.0, 0.2, 0.8]]);
        let b2 = m(&[&[0.9, 0.1, 0.0], &[0.1, 0.8, 0.1], &[0.0, 0.15, 0.85]]);
        let coarse = psi_exact(&b1, &b2, &p, &pi, &g, 2, 51).unwrap();
        let fine = psi_exact(&b1, &b2, &p, &pi, &g, 2, 511).unwrap();
        assert!((coarse.min_value - fine.min_value).abs() < 1e-8);
    }

    #[test]
    fn exact_mse_trivial_cases() {
        let (p, pi, g) = setup3();
        // perfect sensor: MSE 0
        let perfect = StochasticMatrix::identity(3);
        assert!(exact_mse(&perfect, &p, &pi, &g, 2).unwrap() < 1e-15);
        // noninformative sensor at P = I: MSE = prior variance of g(X)
        let flat = m(&[&[0.5, 0.5], &[0.5, 0.5], &[0.5, 0.5]]);
        let prior_var = {
            let mean: f64 = g.values().iter().sum::<f64>() / 3.0;
            g.values().iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / 3.0
        };
        let mse = exact_mse(&flat, &p, &pi, &g, 3).unwrap();
        assert_abs_diff_eq!(mse, prior_var, epsilon = 1e-12);
    }

    #[test]
    fn monte_carlo_matches_enumeration() {
        let (p, pi, g) = setup3();
        let b1 = m(&[&[0.8, 0.2, 0.0], &[0.1, 0.8, 0.1], &[0.0, 0.2, 0.8]]);
        let b2 = m(&[&[0.9, 0.1, 0.0], &[0.1, 0.8, 0.1], &[0.0, 0.15, 0.85]]);
        let est = mse_monte_carlo(&b1, &b2, &p, &pi, &g, 2, 20_000, 7);
        let exact1 = exact_mse(&b1, &p, &pi, &g, 2).unwrap();
        let exact2 = exact_mse(&b2, &p, &pi, &g, 2).unwrap();
        assert!((est.sensor1.value - exact1).abs() < 3.0 * est.sensor1.standard_error);
        assert!((est.sensor2.value - exact2).abs() < 3.0 * est.sensor2.standard_error);
    }

    #[test]
    fn monte_carlo_is_seed_deterministic() {
        let (p, pi, g) = setup3();
        let b1 = m(&[&[0.8, 0.2, 0.0], &[0.1, 0.8, 0.1], &[0.0, 0.2, 0.8]]);
        let b2 = m(&[&[0.9, 0.1, 0.0], &[0.1, 0.8, 0.1], &[0.0, 0.15, 0.85]]);
        let a = mse_monte_carlo(&b1, &b2, &p, &pi, &g, 2, 5_000, 42);
        let b = mse_monte_carlo(&b1, &b2, &p, &pi, &g, 2, 5_000, 42);
        assert_eq!(a.sensor1.value.to_bits(), b.sensor1.value.to_bits());
        assert_eq!(a.sensor2.value.to_bits(), b.sensor2.value.to_bits());
        let c = mse_monte_carlo(&b1, &b2, &p, &pi, &g, 2, 5_000, 43);
        assert_ne!(a.sensor1.value.to_bits(), c.sensor1.value.to_bits());
    }

    #[test]
    fn affine_phi_expectations_agree() {
        // E{m} = g'π₀ for both sensors at P = I (martingale), so the hinge
        // at c = g_1 (where [m−c]+ is affine over the attained range) agrees
        let (p, pi, g) = setup3();
        let b1 = m(&[&[0.8, 0.2, 0.0], &[0.1, 0.8, 0.1], &[0.0, 0.2, 0.8]]);
        let b2 = m(&[&[0.9, 0.1, 0.0], &[0.1, 0.8, 0.1], &[0.0, 0.15, 0.85]]);
        let e1 = exact_expected_phi(&b1, &p, &pi, &g, 3, &PhiSpec::Hinge(0.0)).unwrap();
        let e2 = exact_expected_phi(&b2, &p, &pi, &g, 3, &PhiSpec::Hinge(0.0)).unwrap();
        let gbar = g.dot(&pi);
        assert_abs_diff_eq!(e1, gbar, epsilon = 1e-12);
        assert_abs_diff_eq!(e2, gbar, epsilon = 1e-12);
    }

    #[test]
    fn empirical_battery_matches_exact_within_3_sigma() {
        let (p, pi, g) = setup3();
        let b1 = m(&[&[0.8, 0.2, 0.0], &[0.1, 0.8, 0.1], &[0.0, 0.2, 0.8]]);
        let b2 = m(&[&[0.9, 0.1, 0.0], &[0.1, 0.8, 0.1], &[0.0, 0.15, 0.85]]);
        let battery = default_phi_battery(&g);
        let results =
            convex_dominance_empirical(&b1, &b2, &p, &pi, &g, 2, &battery, 20_000, 11);
        for (res, phi) in results.iter().zip(&battery) {
            let ex1 = exact_expected_phi(&b1, &p, &pi, &g, 2, phi).unwrap();
            let ex2 = exact_expected_phi(&b2, &p, &pi, &g, 2, phi).unwrap();
            assert!(
                (res.sensor1.value - ex1).abs() <= 3.0 * res.sensor1.standard_error.max(1e-12),
                "{}: {} vs {}",
                res.phi,
                res.sensor1.value,
                ex1
            );
            assert!(
                (res.sensor2.value - ex2).abs() <= 3.0 * res.sensor2.standard_error.max(1e-12)
            );
        }
    }

    #[test]
    fn simplex_grid_sizes() {
        assert_eq!(simplex_grid(2, 100).len(), 101);
        assert_eq!(simplex_grid(3, 10).len(), 66);
    }
}
