//! Bayesian measurement/prediction machinery: the HMM filter update, its
//! fold over observation sequences, conditional means, likelihood fusion for
//! two-time-scale observations, and a grid-quadrature filter for continuous
//! states.

use thiserror::Error;

use crate::core::{Belief, StateLevels, StochasticMatrix};
use crate::densities::NoiseFamily;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FilterError {
    #[error("observation has zero probability under the model (step {0})")]
    ZeroNormalizer(usize),
    #[error("observation {0} outside the alphabet (Y = {1})")]
    OutOfSupport(usize, usize),
    #[error("finite-alphabet kernel required")]
    FiniteKernelRequired,
    #[error("dimension mismatch: {0}")]
    Mismatch(String),
}

/// Belief plus the accumulated log normalizer of the processed sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterState {
    pub belief: Belief,
    /// Σ_t ln σ_t = ln σ(π₀, y_{1:k}, u); kept in log space so long
    /// sequences do not underflow.
    pub log_normalizer: f64,
}

impl FilterState {
    pub fn new(belief: Belief) -> Self {
        FilterState { belief, log_normalizer: 0.0 }
    }
}

/// One Bayes update: returns (B_y ⊙ P'π / σ, σ) with σ = 1' B_y P'π.
pub fn filter_update(
    pi: &Belief,
    y: usize,
    p: &StochasticMatrix,
    kernel: &StochasticMatrix,
) -> Result<(Belief, f64), FilterError> {
    if y >= kernel.cols() {
        return Err(FilterError::OutOfSupport(y, kernel.cols()));
    }
    if p.rows() != pi.len() || p.cols() != kernel.rows() {
        return Err(FilterError::Mismatch(format!(
            "P is {}x{}, prior has {} states, kernel has {} states",
            p.rows(),
            p.cols(),
            pi.len(),
            kernel.rows()
        )));
    }
    let predicted = p.predict(pi);
    let mut un: Vec<f64> = (0..kernel.rows())
        .map(|i| kernel.at(i, y) * predicted[i])
        .collect();
    let sigma: f64 = un.iter().sum();
    if sigma <= 0.0 {
        return Err(FilterError::ZeroNormalizer(0));
    }
    for v in &mut un {
        *v = v.max(0.0);
    }
    Ok((Belief::normalized(un, sigma), sigma))
}

/// Folds filter_update over a sequence, accumulating log σ.
pub fn filter_sequence(
    pi0: &Belief,
    ys: &[usize],
    p: &StochasticMatrix,
    kernel: &StochasticMatrix,
) -> Result<FilterState, FilterError> {
    let mut state = FilterState::new(pi0.clone());
    for (t, &y) in ys.iter().enumerate() {
        let (belief, sigma) = filter_update(&state.belief, y, p, kernel)
            .map_err(|e| match e {
                FilterError::ZeroNormalizer(_) => FilterError::ZeroNormalizer(t),
                other => other,
            })?;
        state.belief = belief;
        state.log_normalizer += sigma.ln();
    }
    Ok(state)
}

/// g'π: the minimum-MSE point estimate of the state level.
pub fn conditional_mean(fs: &FilterState, g: &StateLevels) -> f64 {
    g.dot(&fs.belief)
}

/// Likelihood of Δ conditionally independent observations of a frozen state:
/// elementwise product of the component likelihood columns.
pub fn two_timescale_likelihood(
    kernel: &StochasticMatrix,
    yvec: &[usize],
) -> Result<Vec<f64>, FilterError> {
    if yvec.is_empty() {
        return Err(FilterError::Mismatch("need at least one observation".into()));
    }
    let mut lik = vec![1.0; kernel.rows()];
    for &y in yvec {
        if y >= kernel.cols() {
            return Err(FilterError::OutOfSupport(y, kernel.cols()));
        }
        for (i, l) in lik.iter_mut().enumerate() {
            *l *= kernel.at(i, y);
        }
    }
    Ok(lik)
}

/// Bayes update with an explicit likelihood vector (used for fused
/// two-time-scale observations).
pub fn filter_update_with_likelihood(
    pi: &Belief,
    likelihood: &[f64],
    p: &StochasticMatrix,
) -> Result<(Belief, f64), FilterError> {
    if likelihood.len() != p.cols() {
        return Err(FilterError::Mismatch("likelihood length != state count".into()));
    }
    let predicted = p.predict(pi);
    let un: Vec<f64> = likelihood
        .iter()
        .zip(&predicted)
        .map(|(l, q)| l * q)
        .collect();
    let sigma: f64 = un.iter().sum();
    if sigma <= 0.0 {
        return Err(FilterError::ZeroNormalizer(0));
    }
    Ok((Belief::normalized(un, sigma), sigma))
}

/// Density on a uniform state grid, normalized by trapezoid quadrature.
#[derive(Debug, Clone, PartialEq)]
pub struct GridDensity {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
}

impl GridDensity {
    /// Uniform grid over [lo, hi]; values renormalized to integrate to 1.
    pub fn new(lo: f64, hi: f64, values: Vec<f64>) -> Result<Self, FilterError> {
        if values.len() < 2 || hi <= lo {
            return Err(FilterError::Mismatch("need a grid of at least 2 points".into()));
        }
        let n = values.len();
        let grid: Vec<f64> = (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect();
        let mass = trapezoid(&grid, &values);
        if mass <= 0.0 {
            return Err(FilterError::ZeroNormalizer(0));
        }
        Ok(GridDensity {
            grid,
            values: values.into_iter().map(|v| v / mass).collect(),
        })
    }

    pub fn uniform(lo: f64, hi: f64, n: usize) -> Self {
        GridDensity::new(lo, hi, vec![1.0; n]).unwrap()
    }

    pub fn mean(&self) -> f64 {
        let weighted: Vec<f64> = self
            .grid
            .iter()
            .zip(&self.values)
            .map(|(x, v)| x * v)
            .collect();
        trapezoid(&self.grid, &weighted)
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        let weighted: Vec<f64> = self
            .grid
            .iter()
            .zip(&self.values)
            .map(|(x, v)| (x - m) * (x - m) * v)
            .collect();
        trapezoid(&self.grid, &weighted)
    }
}

fn trapezoid(grid: &[f64], values: &[f64]) -> f64 {
    let h = grid[1] - grid[0];
    let mut s = 0.0;
    for i in 0..values.len() - 1 {
        s += 0.5 * (values[i] + values[i + 1]) * h;
    }
    s
}

/// Transition model for the grid filter.
pub enum GridTransition<'a> {
    /// Localization: the state does not move.
    Identity,
    /// Dense transition densities p(x_j | x_i) sampled on the grid,
    /// row-indexed by the source point.
    Dense(&'a [Vec<f64>]),
}

/// One continuous-state Bayes update on the grid: pointwise noise likelihood
/// times the predicted density, renormalized by trapezoid quadrature.
pub fn grid_filter_update(
    pi: &GridDensity,
    y: f64,
    noise: &NoiseFamily,
    transition: &GridTransition,
) -> Result<(GridDensity, f64), FilterError> {
    let n = pi.grid.len();
    let predicted: Vec<f64> = match transition {
        GridTransition::Identity => pi.values.clone(),
        GridTransition::Dense(k) => {
            if k.len() != n {
                return Err(FilterError::Mismatch("transition grid size".into()));
            }
            (0..n)
                .map(|j| {
                    let col: Vec<f64> = (0..n).map(|i| k[i][j] * pi.values[i]).collect();
                    trapezoid(&pi.grid, &col)
                })
                .collect()
        }
    };
    let un: Vec<f64> = pi
        .grid
        .iter()
        .zip(&predicted)
        .map(|(x, v)| noise.pdf(y - x) * v)
        .collect();
    let sigma = trapezoid(&pi.grid, &un);
    if sigma <= 0.0 {
        return Err(FilterError::ZeroNormalizer(0));
    }
    let posterior = GridDensity {
        grid: pi.grid.clone(),
        values: un.into_iter().map(|v| v / sigma).collect(),
    };
    Ok((posterior, sigma))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::validate_stochastic;
    use approx::assert_abs_diff_eq;

    fn m(rows: &[&[f64]]) -> StochasticMatrix {
        validate_stochastic(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn noninformative_kernel_cancels() {
        let p = m(&[&[0.9, 0.1], &[0.2, 0.8]]);
        let b = m(&[&[0.5, 0.5], &[0.5, 0.5]]);
        let pi = Belief::new(vec![0.3, 0.7]).unwrap();
        let (post, sigma) = filter_update(&pi, 1, &p, &b).unwrap();
        let predicted = p.predict(&pi);
        assert_abs_diff_eq!(sigma, 0.5, epsilon = 1e-15);
        for (a, b) in post.weights().iter().zip(&predicted) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-15);
        }
    }

    #[test]
    fn perfect_observation_pins_the_state() {
        let p = StochasticMatrix::identity(2);
        let b = StochasticMatrix::identity(2);
        let pi = Belief::new(vec![0.5, 0.5]).unwrap();
        let (post, sigma) = filter_update(&pi, 0, &p, &b).unwrap();
        assert_eq!(post.weights(), &[1.0, 0.0]);
        assert_abs_diff_eq!(sigma, 0.5);
    }

    #[test]
    fn hand_bayes_update() {
        let p = StochasticMatrix::identity(2);
        let b = m(&[&[0.8, 0.2], &[0.2, 0.8]]);
        let pi = Belief::new(vec![0.5, 0.5]).unwrap();
        let (post, sigma) = filter_update(&pi, 0, &p, &b).unwrap();
        assert_abs_diff_eq!(sigma, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(post.weights()[0], 0.8, epsilon = 1e-15);
        assert_abs_diff_eq!(post.weights()[1], 0.2, epsilon = 1e-15);
    }

    #[test]
    fn empty_sequence_is_identity() {
        let p = StochasticMatrix::identity(2);
        let b = m(&[&[0.8, 0.2], &[0.2, 0.8]]);
        let pi = Belief::new(vec![0.4, 0.6]).unwrap();
        let fs = filter_sequence(&pi, &[], &p, &b).unwrap();
        assert_eq!(fs.belief, pi);
        assert_eq!(fs.log_normalizer, 0.0);
    }

    #[test]
    fn sequence_equals_composed_updates() {
        let p = m(&[&[0.9, 0.1], &[0.1, 0.9]]);
        let b = m(&[&[0.7, 0.3], &[0.3, 0.7]]);
        let pi = Belief::new(vec![0.4, 0.6]).unwrap();
        let fs = filter_sequence(&pi, &[1, 0], &p, &b).unwrap();
        let (p1, s1) = filter_update(&pi, 1, &p, &b).unwrap();
        let (p2, s2) = filter_update(&p1, 0, &p, &b).unwrap();
        assert_eq!(fs.belief, p2);
        assert_abs_diff_eq!(fs.log_normalizer, s1.ln() + s2.ln(), epsilon = 1e-15);
    }

    #[test]
    fn zero_normalizer_reports_step() {
        let p = StochasticMatrix::identity(2);
        let b = m(&[&[1.0, 0.0], &[0.5, 0.5]]);
        let pi = Belief::new(vec![1.0, 0.0]).unwrap();
        let err = filter_sequence(&pi, &[0, 1], &p, &b).unwrap_err();
        assert_eq!(err, FilterError::ZeroNormalizer(1));
    }

    #[test]
    fn conditional_mean_point_mass() {
        let g = StateLevels::new(vec![0.0, 1.0, 2.0]).unwrap();
        let fs = FilterState::new(Belief::point_mass(3, 2));
        assert_eq!(conditional_mean(&fs, &g), 2.0);
        let fs2 = FilterState::new(Belief::new(vec![0.8, 0.2, 0.0]).unwrap());
        assert_abs_diff_eq!(conditional_mean(&fs2, &g), 0.2, epsilon = 1e-15);
    }

    #[test]
    fn two_timescale_product() {
        let b = m(&[&[0.8, 0.2], &[0.2, 0.8]]);
        let lik = two_timescale_likelihood(&b, &[0, 1]).unwrap();
        assert_abs_diff_eq!(lik[0], 0.16, epsilon = 1e-15);
        assert_abs_diff_eq!(lik[1], 0.16, epsilon = 1e-15);
        // symmetric channel: fused posterior equals the prior
        let pi = Belief::new(vec![0.3, 0.7]).unwrap();
        let (post, _) =
            filter_update_with_likelihood(&pi, &lik, &StochasticMatrix::identity(2)).unwrap();
        for (a, b) in post.weights().iter().zip(pi.weights()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
        let single = two_timescale_likelihood(&b, &[1]).unwrap();
        assert_eq!(single, b.column(1));
    }

    #[test]
    fn grid_filter_matches_conjugate_gaussian() {
        // prior N(0,1), noise N(0,1), observe y = 0 → posterior N(0, 0.5)
        let n = 2001;
        let vals: Vec<f64> = (0..n)
            .map(|i| {
                let x = -8.0 + 16.0 * i as f64 / (n - 1) as f64;
                (-0.5 * x * x).exp()
            })
            .collect();
        let prior = GridDensity::new(-8.0, 8.0, vals).unwrap();
        let noise = NoiseFamily::gaussian(1.0).unwrap();
        let (post, _) = grid_filter_update(&prior, 0.0, &noise, &GridTransition::Identity).unwrap();
        assert_abs_diff_eq!(post.mean(), 0.0, epsilon = 1e-6);
        assert_abs_diff_eq!(post.variance(), 0.5, epsilon = 1e-6);
    }

    #[test]
    fn grid_filter_zero_likelihood_everywhere() {
        let prior = GridDensity::uniform(0.0, 1.0, 101);
        let noise = NoiseFamily::uniform(0.5).unwrap();
        // observation far below the grid: y − x < 0 for all grid x
        let r = grid_filter_update(&prior, -2.0, &noise, &GridTransition::Identity);
        assert!(matches!(r, Err(FilterError::ZeroNormalizer(_))));
    }
}
