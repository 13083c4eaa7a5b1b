//! Parametric additive-noise families with log-concavity flags, dispersive
//! and hazard-rate order checks, and the power-law vs exponential comparison.

use serde::Serialize;
use statrs::distribution::{Continuous, ContinuousCDF, Exp, Gamma as GammaDist, Normal};
use thiserror::Error;

use crate::core::{StateLevels, StochasticMatrix};
use crate::orders::{Verdict, Witness};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DensitiesError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("quantile argument {0} outside (0, 1)")]
    QuantileOutOfRange(f64),
    #[error("expected (PowerLaw, Exponential), got other families")]
    WrongFamilies,
    #[error("grid covers only {mass} of the mass for state {state}")]
    InsufficientCoverage { state: usize, mass: f64 },
    #[error("matrix construction failed: {0}")]
    Matrix(#[from] crate::core::CoreError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Support {
    RealLine,
    HalfLine,
}

/// Additive observation-noise family, mean-zero-or-positive, f64 parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum NoiseFamily {
    Gaussian { sigma: f64 },
    Exponential { rate: f64 },
    /// Shape ≥ 1, rate fixed to 1.
    Gamma { shape: f64 },
    /// pdf (α−1)(1+w)^{−α} on w ≥ 0, α > 1.
    PowerLaw { alpha: f64 },
    /// Uniform on [0, width].
    Uniform { width: f64 },
}

use NoiseFamily::*;

impl NoiseFamily {
    pub fn gaussian(sigma: f64) -> Result<Self, DensitiesError> {
        if sigma > 0.0 {
            Ok(Gaussian { sigma })
        } else {
            Err(DensitiesError::InvalidParameter(format!("sigma = {sigma}")))
        }
    }

    pub fn exponential(rate: f64) -> Result<Self, DensitiesError> {
        if rate > 0.0 {
            Ok(Exponential { rate })
        } else {
            Err(DensitiesError::InvalidParameter(format!("rate = {rate}")))
        }
    }

    pub fn gamma(shape: f64) -> Result<Self, DensitiesError> {
        if shape >= 1.0 {
            Ok(Gamma { shape })
        } else {
            Err(DensitiesError::InvalidParameter(format!("shape = {shape} < 1")))
        }
    }

    pub fn power_law(alpha: f64) -> Result<Self, DensitiesError> {
        if alpha > 1.0 {
            Ok(PowerLaw { alpha })
        } else {
            Err(DensitiesError::InvalidParameter(format!("alpha = {alpha} <= 1")))
        }
    }

    pub fn uniform(width: f64) -> Result<Self, DensitiesError> {
        if width > 0.0 {
            Ok(Uniform { width })
        } else {
            Err(DensitiesError::InvalidParameter(format!("width = {width}")))
        }
    }

    pub fn support(&self) -> Support {
        match self {
            Gaussian { .. } => Support::RealLine,
            _ => Support::HalfLine,
        }
    }

    pub fn pdf(&self, w: f64) -> f64 {
        match *self {
            Gaussian { sigma } => Normal::new(0.0, sigma).unwrap().pdf(w),
            Exponential { rate } => {
                if w < 0.0 {
                    0.0
                } else {
                    Exp::new(rate).unwrap().pdf(w)
                }
            }
            Gamma { shape } => {
                if w < 0.0 {
                    0.0
                } else {
                    GammaDist::new(shape, 1.0).unwrap().pdf(w)
                }
            }
            PowerLaw { alpha } => {
                if w < 0.0 {
                    0.0
                } else {
                    (alpha - 1.0) * (1.0 + w).powf(-alpha)
                }
            }
            Uniform { width } => {
                if (0.0..=width).contains(&w) {
                    1.0 / width
                } else {
                    0.0
                }
            }
        }
    }

    pub fn cdf(&self, w: f64) -> f64 {
        match *self {
            Gaussian { sigma } => Normal::new(0.0, sigma).unwrap().cdf(w),
            Exponential { rate } => {
                if w <= 0.0 {
                    0.0
                } else {
                    Exp::new(rate).unwrap().cdf(w)
                }
            }
            Gamma { shape } => {
                if w <= 0.0 {
                    0.0
                } else {
                    GammaDist::new(shape, 1.0).unwrap().cdf(w)
                }
            }
            PowerLaw { alpha } => {
                if w <= 0.0 {
                    0.0
                } else {
                    1.0 - (1.0 + w).powf(1.0 - alpha)
                }
            }
            Uniform { width } => (w / width).clamp(0.0, 1.0),
        }
    }

    pub fn ccdf(&self, w: f64) -> f64 {
        match *self {
            // survival functions keep precision in the tail
            Gaussian { sigma } => Normal::new(0.0, sigma).unwrap().sf(w),
            Exponential { rate } => {
                if w <= 0.0 {
                    1.0
                } else {
                    (-rate * w).exp()
                }
            }
            Gamma { shape } => {
                if w <= 0.0 {
                    1.0
                } else {
                    GammaDist::new(shape, 1.0).unwrap().sf(w)
                }
            }
            PowerLaw { alpha } => {
                if w <= 0.0 {
                    1.0
                } else {
                    (1.0 + w).powf(1.0 - alpha)
                }
            }
            Uniform { width } => 1.0 - (w / width).clamp(0.0, 1.0),
        }
    }

    pub fn quantile(&self, p: f64) -> Result<f64, DensitiesError> {
        if !(0.0..1.0).contains(&p) || p == 0.0 {
            return Err(DensitiesError::QuantileOutOfRange(p));
        }
        Ok(match *self {
            Gaussian { sigma } => Normal::new(0.0, sigma).unwrap().inverse_cdf(p),
            Exponential { rate } => -(1.0 - p).ln() / rate,
            // bracketed bisection on the cdf
            Gamma { shape } => {
                let mut hi = shape.max(1.0);
                while self.cdf(hi) < p {
                    hi *= 2.0;
                }
                let mut lo = 0.0;
                while hi - lo > 1e-12 {
                    let mid = 0.5 * (lo + hi);
                    if self.cdf(mid) < p {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            }
            PowerLaw { alpha } => (1.0 - p).powf(1.0 / (1.0 - alpha)) - 1.0,
            Uniform { width } => p * width,
        })
    }

    pub fn is_log_concave(&self) -> bool {
        !matches!(self, PowerLaw { .. })
    }

    pub fn moments(&self) -> Moments {
        match *self {
            Gaussian { sigma } => Moments {
                mean: Some(0.0),
                variance: Some(sigma * sigma),
                differential_entropy: 0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E * sigma * sigma).ln(),
            },
            Exponential { rate } => Moments {
                mean: Some(1.0 / rate),
                variance: Some(1.0 / (rate * rate)),
                differential_entropy: 1.0 - rate.ln(),
            },
            Uniform { width } => Moments {
                mean: Some(width / 2.0),
                variance: Some(width * width / 12.0),
                differential_entropy: width.ln(),
            },
            Gamma { shape } => Moments {
                mean: Some(shape),
                variance: Some(shape),
                differential_entropy: self.entropy_quadrature(),
            },
            PowerLaw { alpha } => {
                let mean = (alpha > 2.0).then(|| 1.0 / (alpha - 2.0));
                let variance = (alpha > 3.0).then(|| {
                    let m2 = (alpha - 1.0)
                        * (1.0 / (alpha - 3.0) - 2.0 / (alpha - 2.0) + 1.0 / (alpha - 1.0));
                    m2 - mean.unwrap() * mean.unwrap()
                });
                Moments {
                    mean,
                    variance,
                    differential_entropy: self.entropy_quadrature(),
                }
            }
        }
    }

    /// ∫ −p ln p over the support, truncated where the ccdf drops below 1e-12.
    fn entropy_quadrature(&self) -> f64 {
        let mut hi = 1.0;
        while self.ccdf(hi) > 1e-12 {
            hi *= 2.0;
        }
        let f = |w: f64| {
            let p = self.pdf(w);
            if p > 0.0 {
                -p * p.ln()
            } else {
                0.0
            }
        };
        adaptive_simpson(&f, 1e-9, hi, 1e-10, 40)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Moments {
    pub mean: Option<f64>,
    /// None means the moment is not finite.
    pub variance: Option<f64>,
    /// In nats.
    pub differential_entropy: f64,
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b))
    }
    fn rec(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let left = simpson(f, a, m);
        let right = simpson(f, m, b);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            left + right + (left + right - whole) / 15.0
        } else {
            rec(f, a, m, left, tol / 2.0, depth - 1) + rec(f, m, b, right, tol / 2.0, depth - 1)
        }
    }
    rec(f, a, b, simpson(f, a, b), tol, depth)
}

const ORDER_TOL: f64 = 1e-10;

/// Dispersive order: f1 ≥_D f2 iff quantile spacings of f1 dominate those of
/// f2 on every pair of levels from an equispaced grid in (0, 1).
pub fn check_dispersive(
    f1: &NoiseFamily,
    f2: &NoiseFamily,
    quantile_grid: usize,
) -> Result<Verdict, DensitiesError> {
    let n = quantile_grid.max(2);
    let mut q1 = Vec::with_capacity(n);
    let mut q2 = Vec::with_capacity(n);
    for i in 1..=n {
        let p = i as f64 / (n + 1) as f64;
        q1.push(f1.quantile(p)?);
        q2.push(f2.quantile(p)?);
    }
    for a in 0..n {
        for b in a + 1..n {
            let d1 = q1[b] - q1[a];
            let d2 = q2[b] - q2[a];
            if d1 < d2 - ORDER_TOL {
                return Ok(Verdict::Fails(Witness::new(
                    format!(
                        "quantile spacing ({}, {}) of {}: {:.6} < {:.6}",
                        a + 1,
                        b + 1,
                        n + 1,
                        d1,
                        d2
                    ),
                    vec![a, b],
                    d1 - d2,
                )));
            }
        }
    }
    Ok(Verdict::HoldsGrid)
}

/// Hazard-rate order: F̄₂(w)/F̄₁(w) nonincreasing. Checked cross-multiplied
/// on a quantile grid of f1 (so F̄₁ stays positive).
pub fn check_hazard_rate(
    f1: &NoiseFamily,
    f2: &NoiseFamily,
    grid: usize,
) -> Result<Verdict, DensitiesError> {
    let n = grid.max(2);
    let mut ws = Vec::with_capacity(n);
    for i in 1..=n {
        ws.push(f1.quantile(i as f64 / (n + 1) as f64)?);
    }
    for i in 0..n - 1 {
        let (w, wn) = (ws[i], ws[i + 1]);
        // ccdf2(wn)/ccdf1(wn) <= ccdf2(w)/ccdf1(w)
        let lhs = f2.ccdf(wn) * f1.ccdf(w);
        let rhs = f2.ccdf(w) * f1.ccdf(wn);
        if lhs > rhs + ORDER_TOL {
            return Ok(Verdict::Fails(Witness::new(
                format!("ccdf ratio increases from w = {w:.6} to {wn:.6}"),
                vec![i],
                lhs - rhs,
            )));
        }
    }
    Ok(Verdict::HoldsGrid)
}

/// The single-crossing driver of the power-law vs exponential comparison:
/// F̄_exp(ȳ − x) / F_pow(y − x) must be nondecreasing in x wherever defined.
pub fn check_exp_power_ratio(
    f_power: &NoiseFamily,
    f_exp: &NoiseFamily,
    grid: usize,
) -> Result<Verdict, DensitiesError> {
    let (PowerLaw { .. }, Exponential { .. }) = (f_power, f_exp) else {
        return Err(DensitiesError::WrongFamilies);
    };
    let n = grid.max(2);
    let x_hi = 4.0;
    let t_hi = x_hi + f_power.quantile(0.99)?;
    let xs: Vec<f64> = (0..n).map(|i| x_hi * i as f64 / (n - 1) as f64).collect();
    let m = 25usize;
    let ts: Vec<f64> = (1..=m).map(|i| t_hi * i as f64 / m as f64).collect();
    for &yb in &ts {
        for &y in &ts {
            for i in 0..n - 1 {
                let (x, xn) = (xs[i], xs[i + 1]);
                if y <= xn || yb <= xn {
                    continue; // both thresholds must exceed the state
                }
                // cross-multiplied monotonicity of ccdf_exp(yb−x)/cdf_pow(y−x)
                let lhs = f_exp.ccdf(yb - xn) * f_power.cdf(y - x);
                let rhs = f_exp.ccdf(yb - x) * f_power.cdf(y - xn);
                if lhs < rhs - ORDER_TOL {
                    return Ok(Verdict::Fails(Witness::new(
                        format!("ratio decreases at x = {x:.4} for (y, ȳ) = ({y:.4}, {yb:.4})"),
                        vec![i],
                        lhs - rhs,
                    )));
                }
            }
        }
    }
    Ok(Verdict::HoldsGrid)
}

/// Result of binning a noise family onto a finite observation alphabet.
#[derive(Debug, Clone)]
pub struct DiscretizedKernel {
    pub kernel: StochasticMatrix,
    /// Probability mass outside [lo, hi] for each state, before renormalizing.
    pub truncated: Vec<f64>,
}

/// Bins y = g(x) + w into `bins` equal cells over [lo, hi]:
/// B[x][j] = F(edge_{j+1} − g_x) − F(edge_j − g_x), rows renormalized.
pub fn discretize_to_kernel(
    f: &NoiseFamily,
    states: &StateLevels,
    lo: f64,
    hi: f64,
    bins: usize,
) -> Result<DiscretizedKernel, DensitiesError> {
    let mut rows = Vec::with_capacity(states.len());
    let mut truncated = Vec::with_capacity(states.len());
    for (x, &gx) in states.values().iter().enumerate() {
        let mass = f.cdf(hi - gx) - f.cdf(lo - gx);
        if mass < 1.0 - 1e-6 {
            return Err(DensitiesError::InsufficientCoverage { state: x, mass });
        }
        truncated.push(1.0 - mass);
        let mut row = Vec::with_capacity(bins);
        let mut prev = f.cdf(lo - gx);
        for j in 1..=bins {
            let edge = lo + (hi - lo) * j as f64 / bins as f64;
            let c = f.cdf(edge - gx);
            row.push(((c - prev) / mass).max(0.0));
            prev = c;
        }
        rows.push(row);
    }
    Ok(DiscretizedKernel {
        kernel: StochasticMatrix::new_renormalized(&rows)?,
        truncated,
    })
}
