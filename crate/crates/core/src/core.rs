//! Foundational domain types: simplex points, stochastic matrices, state
//! levels, sensor kernels — plus the elementary stochastic-order comparisons
//! everything else builds on.

use serde::Serialize;
use thiserror::Error;

use crate::densities::NoiseFamily;

/// Tolerance for simplex / row-sum validation.
pub const SIMPLEX_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoreError {
    #[error("negative entry {value} at ({row}, {col})")]
    NegativeEntry { row: usize, col: usize, value: f64 },
    #[error("row {row} sums to {sum}, not 1")]
    RowSumViolation { row: usize, sum: f64 },
    #[error("matrix rows have unequal lengths")]
    RaggedRows,
    #[error("matrix is empty")]
    Empty,
    #[error("belief lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("state levels must be nondecreasing (g[{0}] > g[{1}])")]
    LevelsNotIncreasing(usize, usize),
    #[error("observation column {0} has zero likelihood in every state")]
    DeadObservation(usize),
    #[error("observation out of support")]
    OutOfSupport,
    #[error("state index {0} out of range (X = {1})")]
    BadStateIndex(usize, usize),
}

/// Probability vector on the state space.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Belief {
    weights: Vec<f64>,
}

impl Belief {
    pub fn new(weights: Vec<f64>) -> Result<Self, CoreError> {
        if weights.is_empty() {
            return Err(CoreError::Empty);
        }
        for (i, &w) in weights.iter().enumerate() {
            if w < 0.0 || !w.is_finite() {
                return Err(CoreError::NegativeEntry { row: 0, col: i, value: w });
            }
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(CoreError::RowSumViolation { row: 0, sum });
        }
        Ok(Belief { weights })
    }

    pub fn uniform(n: usize) -> Self {
        Belief { weights: vec![1.0 / n as f64; n] }
    }

    pub fn point_mass(n: usize, i: usize) -> Self {
        let mut w = vec![0.0; n];
        w[i] = 1.0;
        Belief { weights: w }
    }

    /// Normalizes a nonnegative vector with positive mass. Used by the filter,
    /// where the unnormalized posterior is computed first.
    pub(crate) fn normalized(mut weights: Vec<f64>, mass: f64) -> Self {
        for w in &mut weights {
            *w /= mass;
        }
        Belief { weights }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Row-stochastic matrix (transition matrix, observation kernel, LP witness).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StochasticMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>, // row-major
}

/// Validates a rectangular nonnegative matrix with unit row sums.
pub fn validate_stochastic(m: &[Vec<f64>]) -> Result<StochasticMatrix, CoreError> {
    if m.is_empty() || m[0].is_empty() {
        return Err(CoreError::Empty);
    }
    let cols = m[0].len();
    if m.iter().any(|r| r.len() != cols) {
        return Err(CoreError::RaggedRows);
    }
    for (i, row) in m.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            if v < 0.0 || !v.is_finite() {
                return Err(CoreError::NegativeEntry { row: i, col: j, value: v });
            }
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(CoreError::RowSumViolation { row: i, sum });
        }
    }
    Ok(StochasticMatrix {
        rows: m.len(),
        cols,
        data: m.iter().flatten().copied().collect(),
    })
}

impl StochasticMatrix {
    pub fn new(m: &[Vec<f64>]) -> Result<Self, CoreError> {
        validate_stochastic(m)
    }

    /// Row-normalizes before validating; for literal matrices whose printed
    /// digits sum to 1 only approximately.
    pub fn new_renormalized(m: &[Vec<f64>]) -> Result<Self, CoreError> {
        let normed: Vec<Vec<f64>> = m
            .iter()
            .map(|r| {
                let s: f64 = r.iter().sum();
                r.iter().map(|&v| v / s).collect()
            })
            .collect();
        validate_stochastic(&normed)
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        StochasticMatrix { rows: n, cols: n, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_identity(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| (0..self.cols).all(|j| {
                self.at(i, j) == if i == j { 1.0 } else { 0.0 }
            }))
    }

    /// Column `y` as a likelihood vector over states.
    pub fn column(&self, y: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.at(i, y)).collect()
    }

    /// Predicted belief `P'π`.
    pub fn predict(&self, pi: &Belief) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for (i, &w) in pi.weights().iter().enumerate() {
            for j in 0..self.cols {
                out[j] += self.at(i, j) * w;
            }
        }
        out
    }

    /// Cumulative distribution along each row: out[i][y] = Σ_{y' ≤ y} B[i][y'].
    pub fn row_cdf(&self) -> Vec<Vec<f64>> {
        (0..self.rows)
            .map(|i| {
                let mut acc = 0.0;
                self.row(i)
                    .iter()
                    .map(|&v| {
                        acc += v;
                        acc
                    })
                    .collect()
            })
            .collect()
    }

    /// Complementary cdf: out[i][y] = Σ_{y' > y} B[i][y'] = P(Y > y | x = i).
    pub fn row_ccdf(&self) -> Vec<Vec<f64>> {
        self.row_cdf()
            .into_iter()
            .map(|r| r.into_iter().map(|c| (1.0 - c).max(0.0)).collect())
            .collect()
    }
}

/// Physical levels attached to the states; nondecreasing in the state
/// index (ties allowed, e.g. an indicator of the top state).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateLevels {
    g: Vec<f64>,
}

impl StateLevels {
    pub fn new(g: Vec<f64>) -> Result<Self, CoreError> {
        if g.is_empty() {
            return Err(CoreError::Empty);
        }
        for i in 1..g.len() {
            if g[i] < g[i - 1] {
                return Err(CoreError::LevelsNotIncreasing(i - 1, i));
            }
        }
        Ok(StateLevels { g })
    }

    pub fn values(&self) -> &[f64] {
        &self.g
    }

    pub fn len(&self) -> usize {
        self.g.len()
    }

    pub fn is_empty(&self) -> bool {
        self.g.is_empty()
    }

    pub fn dot(&self, pi: &Belief) -> f64 {
        self.g.iter().zip(pi.weights()).map(|(a, b)| a * b).sum()
    }
}

/// Observation model for one sensor.
#[derive(Debug, Clone, PartialEq)]
pub enum SensorKernel {
    /// Finite observation alphabet {0, …, Y−1}.
    FiniteAlphabet(StochasticMatrix),
    /// y = g(x) + w with w drawn from a parametric noise family.
    AdditiveNoise(NoiseFamily),
    /// y = g(x) + w with w from a tabulated pdf on a uniform grid over [lo, hi].
    FiniteSupportDensity { lo: f64, hi: f64, pdf: Vec<f64> },
}

impl SensorKernel {
    pub fn finite(m: StochasticMatrix) -> Result<Self, CoreError> {
        for y in 0..m.cols() {
            if (0..m.rows()).all(|i| m.at(i, y) == 0.0) {
                return Err(CoreError::DeadObservation(y));
            }
        }
        Ok(SensorKernel::FiniteAlphabet(m))
    }

    pub fn as_finite(&self) -> Option<&StochasticMatrix> {
        match self {
            SensorKernel::FiniteAlphabet(m) => Some(m),
            _ => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, SensorKernel::FiniteAlphabet(_))
    }
}

/// An observation of either flavor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Obs {
    Symbol(usize),
    Value(f64),
}

/// F_u(y|x): cdf of the observation given state x. Finite kernels index the
/// alphabet; continuous kernels shift the noise cdf by the state level.
pub fn cdf_from_kernel(
    k: &SensorKernel,
    levels: &StateLevels,
    x: usize,
    y: Obs,
) -> Result<f64, CoreError> {
    if x >= levels.len() {
        return Err(CoreError::BadStateIndex(x, levels.len()));
    }
    match (k, y) {
        (SensorKernel::FiniteAlphabet(m), Obs::Symbol(y)) => {
            if x >= m.rows() || y >= m.cols() {
                return Err(CoreError::OutOfSupport);
            }
            Ok(m.row(x)[..=y].iter().sum())
        }
        (SensorKernel::AdditiveNoise(f), Obs::Value(y)) => {
            Ok(f.cdf(y - levels.values()[x]))
        }
        (SensorKernel::FiniteSupportDensity { lo, hi, pdf }, Obs::Value(y)) => {
            let w = y - levels.values()[x];
            Ok(tabulated_cdf(*lo, *hi, pdf, w))
        }
        _ => Err(CoreError::OutOfSupport),
    }
}

/// Trapezoid cdf of a tabulated pdf on a uniform grid.
fn tabulated_cdf(lo: f64, hi: f64, pdf: &[f64], w: f64) -> f64 {
    if w <= lo {
        return 0.0;
    }
    if w >= hi {
        return 1.0;
    }
    let n = pdf.len();
    let h = (hi - lo) / (n - 1) as f64;
    let mut total = 0.0;
    let mut upto = 0.0;
    for i in 0..n - 1 {
        let seg = 0.5 * (pdf[i] + pdf[i + 1]) * h;
        total += seg;
        let a = lo + i as f64 * h;
        if w >= a + h {
            upto += seg;
        } else if w > a {
            // linear pdf within the cell
            let t = (w - a) / h;
            let p_at = pdf[i] + (pdf[i + 1] - pdf[i]) * t;
            upto += 0.5 * (pdf[i] + p_at) * (w - a);
        }
    }
    (upto / total).clamp(0.0, 1.0)
}

/// Two sensors over a shared state space.
#[derive(Debug, Clone)]
pub struct SensorPair {
    pub sensor1: SensorKernel,
    pub sensor2: SensorKernel,
    pub levels: StateLevels,
}

impl SensorPair {
    pub fn new(
        sensor1: SensorKernel,
        sensor2: SensorKernel,
        levels: StateLevels,
    ) -> Result<Self, CoreError> {
        let x = levels.len();
        for k in [&sensor1, &sensor2] {
            if let SensorKernel::FiniteAlphabet(m) = k {
                if m.rows() != x {
                    return Err(CoreError::LengthMismatch(m.rows(), x));
                }
            }
        }
        Ok(SensorPair { sensor1, sensor2, levels })
    }

    pub fn finite(
        b1: StochasticMatrix,
        b2: StochasticMatrix,
        levels: StateLevels,
    ) -> Result<Self, CoreError> {
        Self::new(SensorKernel::finite(b1)?, SensorKernel::finite(b2)?, levels)
    }

    /// Both kernels as finite matrices, if they are.
    pub fn as_finite(&self) -> Option<(&StochasticMatrix, &StochasticMatrix)> {
        Some((self.sensor1.as_finite()?, self.sensor2.as_finite()?))
    }
}

/// Outcome of a partial-order comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Comparison {
    GE,
    LE,
    EQ,
    Incomparable,
}

fn combine(ge: bool, le: bool) -> Comparison {
    match (ge, le) {
        (true, true) => Comparison::EQ,
        (true, false) => Comparison::GE,
        (false, true) => Comparison::LE,
        (false, false) => Comparison::Incomparable,
    }
}

/// Monotone likelihood ratio order. GE means p dominates q:
/// p(x) q(x') ≤ q(x) p(x') for all x < x'.
pub fn mlr_compare(p: &Belief, q: &Belief) -> Result<Comparison, CoreError> {
    if p.len() != q.len() {
        return Err(CoreError::LengthMismatch(p.len(), q.len()));
    }
    let (pw, qw) = (p.weights(), q.weights());
    let mut ge = true;
    let mut le = true;
    for x in 0..pw.len() {
        for xp in x + 1..pw.len() {
            let lhs = pw[x] * qw[xp];
            let rhs = qw[x] * pw[xp];
            if lhs > rhs + SIMPLEX_TOL {
                ge = false;
            }
            if rhs > lhs + SIMPLEX_TOL {
                le = false;
            }
        }
    }
    Ok(combine(ge, le))
}

/// First-order stochastic dominance. GE means p puts more mass on high
/// states: cumulative sums of p are ≤ those of q at every index.
pub fn first_order_compare(p: &Belief, q: &Belief) -> Result<Comparison, CoreError> {
    if p.len() != q.len() {
        return Err(CoreError::LengthMismatch(p.len(), q.len()));
    }
    let mut ge = true;
    let mut le = true;
    let mut cp = 0.0;
    let mut cq = 0.0;
    for (a, b) in p.weights().iter().zip(q.weights()) {
        cp += a;
        cq += b;
        if cp > cq + SIMPLEX_TOL {
            ge = false;
        }
        if cq > cp + SIMPLEX_TOL {
            le = false;
        }
    }
    Ok(combine(ge, le))
}
