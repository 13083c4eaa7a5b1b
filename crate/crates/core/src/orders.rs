//! Decision procedures that classify a sensor pair: total positivity,
//! single-crossing conditions, signed-ratio monotonicity, their aggregated
//! product-space form, Blackwell-dominance LP feasibility, Shannon capacity,
//! and the global-filter dominance conditions on likelihood products.

use serde::Serialize;
use thiserror::Error;

use crate::core::StochasticMatrix;

/// Zero band for sign classification: |v| ≤ ZERO_BAND counts as an excursion
/// to zero and is ignored by the single-crossing test.
pub const ZERO_BAND: f64 = 1e-10;
/// Phase-1 objective threshold for LP feasibility.
pub const LP_TOL: f64 = 1e-9;
/// Relative tolerance for the capacity iteration.
pub const CAPACITY_TOL: f64 = 1e-9;
/// Hard cap on enumerated tuples for product-space checks.
pub const ENUMERATION_CAP: f64 = 1e7;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OrdersError {
    #[error("continuous kernel needs a declared grid; discretize first")]
    GridRequired,
    #[error("enumeration cap exceeded at k = {0}")]
    EnumerationCapExceeded(usize),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
}

/// Concrete evidence for a failed check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub description: String,
    pub indices: Vec<usize>,
    pub value: f64,
}

impl Witness {
    pub fn new(description: String, indices: Vec<usize>, value: f64) -> Self {
        Witness { description, indices, value }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Verdict {
    Holds,
    /// Holds on the declared grid — a numerical certificate, not a proof.
    HoldsGrid,
    Fails(Witness),
    NotApplicable(String),
    Skipped(String),
}

impl Verdict {
    pub fn holds(&self) -> bool {
        matches!(self, Verdict::Holds | Verdict::HoldsGrid)
    }

    pub fn is_failure(&self) -> bool {
        matches!(self, Verdict::Fails(_))
    }

    pub fn label(&self) -> String {
        match self {
            Verdict::Holds => "holds".into(),
            Verdict::HoldsGrid => "holds (grid)".into(),
            Verdict::Fails(w) => format!("FAILS: {}", w.description),
            Verdict::NotApplicable(r) => format!("n/a ({r})"),
            Verdict::Skipped(r) => format!("skipped ({r})"),
        }
    }
}

/// Thresholded signs of a real vector over the states.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignVector {
    pub signs: Vec<i8>,
    pub tol: f64,
}

impl SignVector {
    pub fn from_values(v: &[f64], tol: f64) -> Self {
        SignVector {
            signs: v
                .iter()
                .map(|&x| {
                    if x.abs() <= tol {
                        0
                    } else if x > 0.0 {
                        1
                    } else {
                        -1
                    }
                })
                .collect(),
            tol,
        }
    }

    /// Single crossing from − to +, ignoring excursions to zero: the nonzero
    /// signs must be nondecreasing.
    pub fn is_single_crossing(&self) -> bool {
        let mut last = -2i8;
        for &s in self.signs.iter().filter(|&&s| s != 0) {
            if s < last {
                return false;
            }
            last = s;
        }
        true
    }
}

pub fn single_crossing(v: &[f64]) -> bool {
    SignVector::from_values(v, ZERO_BAND).is_single_crossing()
}

/// Totally positive of order 2: every 2×2 minor over row pairs i < i' and
/// column pairs y < y' is nonnegative.
pub fn check_tp2(m: &StochasticMatrix) -> Verdict {
    for i in 0..m.rows() {
        for ip in i + 1..m.rows() {
            for y in 0..m.cols() {
                for yp in y + 1..m.cols() {
                    let minor = m.at(i, y) * m.at(ip, yp) - m.at(i, yp) * m.at(ip, y);
                    if minor < -ZERO_BAND {
                        return Verdict::Fails(Witness::new(
                            format!("minor {minor:.6} at rows ({i}, {ip}), cols ({y}, {yp})"),
                            vec![i, ip, y, yp],
                            minor,
                        ));
                    }
                }
            }
        }
    }
    Verdict::Holds
}

/// Single-crossing condition on cdf differences: for every pair of
/// observation levels (ȳ from sensor 1, y from sensor 2) the vector
/// x ↦ F₁(ȳ|x) − F₂(y|x) crosses zero at most once, from − to +.
pub fn check_single_crossing_a2(b1: &StochasticMatrix, b2: &StochasticMatrix) -> Verdict {
    let f1 = b1.row_cdf();
    let f2 = b2.row_cdf();
    let x = b1.rows();
    for yb in 0..b1.cols() {
        for y in 0..b2.cols() {
            let v: Vec<f64> = (0..x).map(|i| f1[i][yb] - f2[i][y]).collect();
            if !single_crossing(&v) {
                return Verdict::Fails(Witness::new(
                    format!("cdf difference not single crossing at (ȳ = {yb}, y = {y}): {v:?}"),
                    vec![yb, y],
                    0.0,
                ));
            }
        }
    }
    Verdict::Holds
}

/// Boundary conditions at the alphabet extremes, for all state pairs x ≤ x̄:
///   B₁(x, first) B₂(x̄, first) ≤ B₂(x, first) B₁(x̄, first)
///   B₁(x, last)  B₂(x̄, last)  ≥ B₂(x, last)  B₁(x̄, last)
pub fn check_boundary_a3(b1: &StochasticMatrix, b2: &StochasticMatrix) -> Verdict {
    let x = b1.rows();
    let (l1, l2) = (b1.cols() - 1, b2.cols() - 1);
    for i in 0..x {
        for ib in i..x {
            let low = b1.at(i, 0) * b2.at(ib, 0) - b2.at(i, 0) * b1.at(ib, 0);
            if low > ZERO_BAND {
                return Verdict::Fails(Witness::new(
                    format!("low-end boundary violated at states ({i}, {ib}): {low:.6}"),
                    vec![i, ib],
                    low,
                ));
            }
            let high = b1.at(i, l1) * b2.at(ib, l2) - b2.at(i, l2) * b1.at(ib, l1);
            if high < -ZERO_BAND {
                return Verdict::Fails(Witness::new(
                    format!("high-end boundary violated at states ({i}, {ib}): {high:.6}"),
                    vec![i, ib],
                    high,
                ));
            }
        }
    }
    Verdict::Holds
}

/// Signed-ratio monotonicity over the family of log complementary-cdf
/// differences φ_{z,z̄}(x) = ln F̄₂(z|x) − ln F̄₁(z̄|x) (non-top symbols only:
/// the top symbol has F̄ = 0 and the log is undefined; such quadruples are
/// excluded and counted).
///
/// For every ordered pair (f, g) of family members and every state pair
/// x < x̄ with g(x) < 0 < f(x), requires g(x̄) f(x) − g(x) f(x̄) ≥ −tol.
/// Returns the verdict and the number of excluded quadruples.
pub fn check_signed_ratio_a4(
    b1: &StochasticMatrix,
    b2: &StochasticMatrix,
) -> (Verdict, usize) {
    const PREMISE_TOL: f64 = 1e-12;
    let fb1 = b1.row_ccdf();
    let fb2 = b2.row_ccdf();
    let x = b1.rows();
    let mut members = Vec::new(); // (z, z̄, φ over states)
    let mut excluded = 0usize;
    for z in 0..b2.cols().saturating_sub(1) {
        for zb in 0..b1.cols().saturating_sub(1) {
            if (0..x).any(|i| fb2[i][z] <= 0.0 || fb1[i][zb] <= 0.0) {
                excluded += 1;
                continue;
            }
            let phi: Vec<f64> = (0..x).map(|i| fb2[i][z].ln() - fb1[i][zb].ln()).collect();
            members.push((z, zb, phi));
        }
    }
    for (fz, fzb, f) in &members {
        for (gz, gzb, g) in &members {
            for xl in 0..x {
                if !(g[xl] < -PREMISE_TOL && f[xl] > PREMISE_TOL) {
                    continue;
                }
                for xh in xl + 1..x {
                    let det = g[xh] * f[xl] - g[xl] * f[xh];
                    if det < -ZERO_BAND {
                        return (
                            Verdict::Fails(Witness::new(
                                format!(
                                    "signed ratio decreases from x = {xl} to {xh} for \
                                     f = ({fz}, {fzb}), g = ({gz}, {gzb}): det = {det:.3e}"
                                ),
                                vec![*fz, *fzb, *gz, *gzb, xl, xh],
                                det,
                            )),
                            excluded,
                        );
                    }
                }
            }
        }
    }
    (Verdict::Holds, excluded)
}

/// Lexicographic multiset enumerator: nondecreasing index tuples of length k
/// over 0..n. Products of ccdf columns are permutation-invariant, so
/// multisets cover all tuples.
fn for_each_multiset(n: usize, k: usize, mut f: impl FnMut(&[usize]) -> bool) -> bool {
    let mut idx = vec![0usize; k];
    loop {
        if !f(&idx) {
            return false;
        }
        // next nondecreasing tuple
        let mut pos = k;
        while pos > 0 {
            pos -= 1;
            if idx[pos] + 1 < n {
                let v = idx[pos] + 1;
                for slot in idx.iter_mut().skip(pos) {
                    *slot = v;
                }
                break;
            }
            if pos == 0 {
                return true;
            }
        }
        if k == 0 {
            return true;
        }
    }
}

/// Aggregated single crossing on products of complementary cdfs: for every
/// pair of observation tuples (y_{1:k} for sensor 2, ȳ_{1:k} for sensor 1)
/// the vector x ↦ ∏ F̄₂(y_l|x) − ∏ F̄₁(ȳ_l|x) is single crossing. The
/// brute-force oracle behind the signed-ratio condition.
pub fn check_aggregated_sc(
    b1: &StochasticMatrix,
    b2: &StochasticMatrix,
    k: usize,
) -> Result<Verdict, OrdersError> {
    let tuples = ((b1.cols() * b2.cols()) as f64).powi(k as i32);
    if tuples > ENUMERATION_CAP {
        return Err(OrdersError::EnumerationCapExceeded(k));
    }
    let fb1 = b1.row_ccdf();
    let fb2 = b2.row_ccdf();
    let x = b1.rows();
    let prod = |fb: &Vec<Vec<f64>>, ys: &[usize]| -> Vec<f64> {
        (0..x)
            .map(|i| ys.iter().map(|&y| fb[i][y]).product())
            .collect()
    };
    let mut witness: Option<Witness> = None;
    for_each_multiset(b2.cols(), k, |ys| {
        let p2 = prod(&fb2, ys);
        for_each_multiset(b1.cols(), k, |ybs| {
            let p1 = prod(&fb1, ybs);
            let v: Vec<f64> = (0..x).map(|i| p2[i] - p1[i]).collect();
            if !single_crossing(&v) {
                witness = Some(Witness::new(
                    format!(
                        "product difference not single crossing for y = {ys:?}, ȳ = {ybs:?}: {v:?}"
                    ),
                    ys.iter().chain(ybs.iter()).copied().collect(),
                    0.0,
                ));
                return false;
            }
            true
        })
    });
    Ok(match witness {
        Some(w) => Verdict::Fails(w),
        None => Verdict::Holds,
    })
}

/// Per-k verdicts up to kmax. Horizons past the enumeration cap come back
/// Skipped instead of aborting the whole battery.
pub fn check_aggregated_sc_upto(
    b1: &StochasticMatrix,
    b2: &StochasticMatrix,
    kmax: usize,
) -> Result<Vec<(usize, Verdict)>, OrdersError> {
    let mut out = Vec::with_capacity(kmax);
    for k in 1..=kmax {
        match check_aggregated_sc(b1, b2, k) {
            Ok(v) => out.push((k, v)),
            Err(OrdersError::EnumerationCapExceeded(_)) => {
                out.push((k, Verdict::Skipped("enumeration cap exceeded".into())));
            }
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// Outcome of a linear feasibility program.
#[derive(Debug, Clone, Serialize)]
pub struct FeasibilityResult {
    pub feasible: bool,
    pub witness: Option<StochasticMatrix>,
    /// Max-norm defect of the reconstructed factorization.
    pub residual: f64,
    /// Phase-1 simplex objective (sum of artificial variables).
    pub phase1_objective: f64,
}

/// Phase-1 simplex feasibility for A x = b, x ≥ 0, with Bland's rule.
/// Returns (phase-1 objective, x at optimum).
fn phase1_simplex(a: &[Vec<f64>], b: &[f64]) -> (f64, Vec<f64>) {
    const EPS: f64 = 1e-12;
    let m = a.len();
    let n = if m > 0 { a[0].len() } else { 0 };
    let cols = n + m + 1; // structural + artificial + rhs
    let mut t = vec![vec![0.0f64; cols]; m + 1];
    for i in 0..m {
        let flip = if b[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            t[i][j] = flip * a[i][j];
        }
        t[i][n + i] = 1.0;
        t[i][cols - 1] = flip * b[i];
    }
    // reduced costs for min Σ artificials with the artificial basis
    for j in 0..n {
        t[m][j] = -(0..m).map(|i| t[i][j]).sum::<f64>();
    }
    t[m][cols - 1] = -(0..m).map(|i| t[i][cols - 1]).sum::<f64>();
    let mut basis: Vec<usize> = (n..n + m).collect();
    loop {
        // Bland: entering variable = smallest index with negative reduced cost
        let Some(enter) = (0..n + m).find(|&j| t[m][j] < -EPS) else {
            break;
        };
        let mut leave: Option<usize> = None;
        let mut best = f64::INFINITY;
        for i in 0..m {
            if t[i][enter] > EPS {
                let ratio = t[i][cols - 1] / t[i][enter];
                let better = ratio < best - EPS
                    || (ratio < best + EPS
                        && leave.is_some_and(|l| basis[i] < basis[l]));
                if better {
                    best = ratio;
                    leave = Some(i);
                }
            }
        }
        let Some(leave) = leave else {
            break; // unbounded can't happen in phase 1; bail defensively
        };
        let piv = t[leave][enter];
        for v in t[leave].iter_mut() {
            *v /= piv;
        }
        for i in 0..=m {
            if i != leave {
                let factor = t[i][enter];
                if factor != 0.0 {
                    for j in 0..cols {
                        t[i][j] -= factor * t[leave][j];
                    }
                }
            }
        }
        basis[leave] = enter;
    }
    let objective = -t[m][cols - 1];
    let mut x = vec![0.0; n];
    for (i, &bv) in basis.iter().enumerate() {
        if bv < n {
            x[bv] = t[i][cols - 1];
        }
    }
    (objective.max(0.0), x)
}

/// Right factorization B(1) = B(2) · L with L row-stochastic (Y₂ × Y₁):
/// sensor 2 Blackwell-dominates sensor 1 iff feasible.
pub fn check_blackwell_right(
    b1: &StochasticMatrix,
    b2: &StochasticMatrix,
) -> Result<FeasibilityResult, OrdersError> {
    if b1.rows() != b2.rows() {
        return Err(OrdersError::ShapeMismatch(format!(
            "state counts differ: {} vs {}",
            b1.rows(),
            b2.rows()
        )));
    }
    let (x, y1, y2) = (b1.rows(), b1.cols(), b2.cols());
    let n = y2 * y1;
    let mut a = Vec::new();
    let mut rhs = Vec::new();
    for i in 0..x {
        for y in 0..y1 {
            let mut row = vec![0.0; n];
            for yb in 0..y2 {
                row[yb * y1 + y] = b2.at(i, yb);
            }
            a.push(row);
            rhs.push(b1.at(i, y));
        }
    }
    for yb in 0..y2 {
        let mut row = vec![0.0; n];
        row[yb * y1..(yb + 1) * y1].fill(1.0);
        a.push(row);
        rhs.push(1.0);
    }
    let (obj, xsol) = phase1_simplex(&a, &rhs);
    let feasible = obj <= LP_TOL;
    let l_rows: Vec<Vec<f64>> = (0..y2)
        .map(|yb| (0..y1).map(|y| xsol[yb * y1 + y].max(0.0)).collect())
        .collect();
    let mut residual = 0.0f64;
    for i in 0..x {
        for y in 0..y1 {
            let v: f64 = (0..y2).map(|yb| b2.at(i, yb) * l_rows[yb][y]).sum();
            residual = residual.max((v - b1.at(i, y)).abs());
        }
    }
    for row in &l_rows {
        residual = residual.max((row.iter().sum::<f64>() - 1.0).abs());
    }
    let witness = feasible
        .then(|| StochasticMatrix::new_renormalized(&l_rows).ok())
        .flatten();
    Ok(FeasibilityResult { feasible, witness, residual, phase1_objective: obj })
}

/// Left factorization B(1) = M · B(2) with M row-stochastic (X × X).
pub fn check_blackwell_left(
    b1: &StochasticMatrix,
    b2: &StochasticMatrix,
) -> Result<FeasibilityResult, OrdersError> {
    if b1.cols() != b2.cols() || b1.rows() != b2.rows() {
        return Err(OrdersError::ShapeMismatch(format!(
            "need equal shapes, got {}x{} vs {}x{}",
            b1.rows(),
            b1.cols(),
            b2.rows(),
            b2.cols()
        )));
    }
    let (x, y) = (b1.rows(), b1.cols());
    let n = x * x;
    let mut a = Vec::new();
    let mut rhs = Vec::new();
    for i in 0..x {
        for yy in 0..y {
            let mut row = vec![0.0; n];
            for j in 0..x {
                row[i * x + j] = b2.at(j, yy);
            }
            a.push(row);
            rhs.push(b1.at(i, yy));
        }
    }
    for i in 0..x {
        let mut row = vec![0.0; n];
        row[i * x..(i + 1) * x].fill(1.0);
        a.push(row);
        rhs.push(1.0);
    }
    let (obj, xsol) = phase1_simplex(&a, &rhs);
    let feasible = obj <= LP_TOL;
    let m_rows: Vec<Vec<f64>> = (0..x)
        .map(|i| (0..x).map(|j| xsol[i * x + j].max(0.0)).collect())
        .collect();
    let mut residual = 0.0f64;
    for i in 0..x {
        for yy in 0..y {
            let v: f64 = (0..x).map(|j| m_rows[i][j] * b2.at(j, yy)).sum();
            residual = residual.max((v - b1.at(i, yy)).abs());
        }
    }
    for row in &m_rows {
        residual = residual.max((row.iter().sum::<f64>() - 1.0).abs());
    }
    let witness = feasible
        .then(|| StochasticMatrix::new_renormalized(&m_rows).ok())
        .flatten();
    Ok(FeasibilityResult { feasible, witness, residual, phase1_objective: obj })
}

/// Discrete memoryless channel capacity in bits via alternating maximization.
pub fn channel_capacity(b: &StochasticMatrix) -> f64 {
    let (x, y) = (b.rows(), b.cols());
    let mut p = vec![1.0 / x as f64; x];
    for _ in 0..200_000 {
        let mut q = vec![0.0; y];
        for i in 0..x {
            for j in 0..y {
                q[j] += p[i] * b.at(i, j);
            }
        }
        // per-input divergence D(B(i,·) ‖ q) in bits
        let d: Vec<f64> = (0..x)
            .map(|i| {
                (0..y)
                    .map(|j| {
                        let bij = b.at(i, j);
                        if bij > 0.0 {
                            bij * (bij / q[j]).log2()
                        } else {
                            0.0
                        }
                    })
                    .sum()
            })
            .collect();
        let lower: f64 = (0..x).map(|i| p[i] * d[i]).sum();
        let upper = d.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if upper - lower < CAPACITY_TOL * upper.abs().max(1.0) {
            return lower.max(0.0);
        }
        let mut z = 0.0;
        for i in 0..x {
            p[i] *= d[i].exp2();
            z += p[i];
        }
        for v in &mut p {
            *v /= z;
        }
    }
    let mut q = vec![0.0; y];
    for i in 0..x {
        for j in 0..y {
            q[j] += p[i] * b.at(i, j);
        }
    }
    (0..x)
        .map(|i| {
            p[i] * (0..y)
                .map(|j| {
                    let bij = b.at(i, j);
                    if bij > 0.0 {
                        bij * (bij / q[j]).log2()
                    } else {
                        0.0
                    }
                })
                .sum::<f64>()
        })
        .sum::<f64>()
        .max(0.0)
}

type Mat = Vec<Vec<f64>>;

fn matmul(a: &Mat, b: &Mat) -> Mat {
    let (n, m, p) = (a.len(), b.len(), b[0].len());
    let mut out = vec![vec![0.0; p]; n];
    for i in 0..n {
        for k in 0..m {
            let aik = a[i][k];
            if aik != 0.0 {
                for j in 0..p {
                    out[i][j] += aik * b[k][j];
                }
            }
        }
    }
    out
}

/// Likelihood-product matrices L_u(y_{1:k}) = ∏_{t=1..k} P · diag(B(·, y_t)),
/// one per observation sequence. Sequences are labeled with y_k as the most
/// significant digit, so index z enumerates reversed tuples lexicographically.
fn likelihood_products(p: &StochasticMatrix, b: &StochasticMatrix, k: usize) -> Vec<Mat> {
    let x = p.rows();
    let y = b.cols();
    let n = y.pow(k as u32);
    let pm: Mat = (0..x).map(|i| p.row(i).to_vec()).collect();
    let mut out = Vec::with_capacity(n);
    for z in 0..n {
        // digits of z, most significant first, give (y_k, …, y_1)
        let mut rev = Vec::with_capacity(k);
        let mut rem = z;
        for t in (0..k).rev() {
            rev.push(rem / y.pow(t as u32));
            rem %= y.pow(t as u32);
        }
        let mut m: Mat = (0..x)
            .map(|i| (0..x).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        for &yt in rev.iter().rev() {
            // P · diag(B(·, yt)) applied in sequence order y_1 … y_k
            let step: Mat = (0..x)
                .map(|i| (0..x).map(|j| pm[i][j] * b.at(j, yt)).collect())
                .collect();
            m = matmul(&m, &step);
        }
        out.push(m);
    }
    out
}

/// H entries for the antisymmetric construction
/// La (e_j e_i' − e_i e_j') Lb' + Lb (e_i e_j' − e_j e_i') La'.
fn h_entry(la: &Mat, lb: &Mat, i: usize, j: usize, a: usize, b: usize) -> f64 {
    la[a][j] * lb[b][i] - la[a][i] * lb[b][j] + lb[a][i] * la[b][j] - lb[a][j] * la[b][i]
}

/// Global-filter dominance conditions on k-step likelihood products.
/// Returns (per-sensor product monotonicity verdict, cross-sensor
/// split-point verdict, split index z* when found, 0-based).
pub fn check_global_filter_a5_a6(
    p: &StochasticMatrix,
    b1: &StochasticMatrix,
    b2: &StochasticMatrix,
    k: usize,
) -> Result<(Verdict, Verdict, Option<usize>), OrdersError> {
    if b1.cols() != b2.cols() {
        return Ok((
            Verdict::NotApplicable("alphabets differ".into()),
            Verdict::NotApplicable("alphabets differ".into()),
            None,
        ));
    }
    let x = p.rows();
    let y = b1.cols();
    if (y as f64).powi(k as i32) > ENUMERATION_CAP {
        return Err(OrdersError::EnumerationCapExceeded(k));
    }
    let l1 = likelihood_products(p, b1, k);
    let l2 = likelihood_products(p, b2, k);
    let n = l1.len();
    let mut a5 = Verdict::Holds;
    'a5: for lu in [&l1, &l2] {
        for z in 0..n {
            for zb in z + 1..n {
                for i in 0..x {
                    for j in i + 1..x {
                        for a in 0..x {
                            for bb in 0..x {
                                let h = h_entry(&lu[zb], &lu[z], i, j, a, bb);
                                if h < -ZERO_BAND {
                                    a5 = Verdict::Fails(Witness::new(
                                        format!(
                                            "H(i={i}, j={j}, z={z}, z̄={zb}) entry \
                                             ({a}, {bb}) = {h:.3e}"
                                        ),
                                        vec![i, j, z, zb, a, bb],
                                        h,
                                    ));
                                    break 'a5;
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    // cross-sensor sign pattern per z
    let mut nonneg = vec![true; n];
    let mut nonpos = vec![true; n];
    for z in 0..n {
        for i in 0..x {
            for j in i + 1..x {
                for a in 0..x {
                    for bb in 0..x {
                        let h = h_entry(&l2[z], &l1[z], i, j, a, bb);
                        if h > ZERO_BAND {
                            nonpos[z] = false;
                        }
                        if h < -ZERO_BAND {
                            nonneg[z] = false;
                        }
                    }
                }
            }
        }
    }
    let mut a6 = Verdict::Fails(Witness::new(
        "no split index z* gives the −/+ elementwise sign pattern".into(),
        vec![],
        0.0,
    ));
    let mut zstar = None;
    for zs in 0..=n {
        if nonpos[..zs].iter().all(|&v| v) && nonneg[zs..].iter().all(|&v| v) {
            a6 = Verdict::Holds;
            zstar = Some(zs);
            break;
        }
    }
    Ok((a5, a6, zstar))
}

/// Structured verdicts for a full classification of a sensor pair.
#[derive(Debug, Clone, Serialize)]
pub struct DominanceReport {
    pub a1_tp2_sensor1: Verdict,
    pub a1_tp2_sensor2: Verdict,
    pub a2_single_crossing: Verdict,
    pub a3_boundary: Verdict,
    pub a4_signed_ratio: Verdict,
    pub a4_excluded_quadruples: usize,
    pub aggregated_sc: Vec<(usize, Verdict)>,
    pub blackwell_right: FeasibilityResult,
    pub blackwell_left: Option<FeasibilityResult>,
    pub capacity1_bits: f64,
    pub capacity2_bits: f64,
    pub a5: Verdict,
    pub a6: Verdict,
    pub a6_zstar: Option<usize>,
}

impl DominanceReport {
    pub fn all_applicable_hold(&self) -> bool {
        let core_ok = [
            &self.a1_tp2_sensor1,
            &self.a1_tp2_sensor2,
            &self.a2_single_crossing,
            &self.a3_boundary,
            &self.a4_signed_ratio,
            &self.a5,
            &self.a6,
        ]
        .iter()
        .all(|v| !v.is_failure());
        core_ok && self.aggregated_sc.iter().all(|(_, v)| !v.is_failure())
    }
}

/// Runs the full battery on a finite pair. A5/A6 run only when a transition
/// matrix is supplied (they are k-step filter conditions, not pair-local).
pub fn full_report(
    b1: &StochasticMatrix,
    b2: &StochasticMatrix,
    transition: Option<&StochasticMatrix>,
    kmax: usize,
    k_global: usize,
) -> Result<DominanceReport, OrdersError> {
    let (a4, excluded) = check_signed_ratio_a4(b1, b2);
    let (a5, a6, zstar) = match transition {
        Some(p) => check_global_filter_a5_a6(p, b1, b2, k_global)?,
        None => (
            Verdict::Skipped("no transition matrix given".into()),
            Verdict::Skipped("no transition matrix given".into()),
            None,
        ),
    };
    let blackwell_left = if b1.cols() == b2.cols() {
        Some(check_blackwell_left(b1, b2)?)
    } else {
        None
    };
    Ok(DominanceReport {
        a1_tp2_sensor1: check_tp2(b1),
        a1_tp2_sensor2: check_tp2(b2),
        a2_single_crossing: check_single_crossing_a2(b1, b2),
        a3_boundary: check_boundary_a3(b1, b2),
        a4_signed_ratio: a4,
        a4_excluded_quadruples: excluded,
        aggregated_sc: check_aggregated_sc_upto(b1, b2, kmax)?,
        blackwell_right: check_blackwell_right(b1, b2)?,
        blackwell_left,
        capacity1_bits: channel_capacity(b1),
        capacity2_bits: channel_capacity(b2),
        a5,
        a6,
        a6_zstar: zstar,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::validate_stochastic;

    fn m(rows: &[&[f64]]) -> StochasticMatrix {
        validate_stochastic(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn tp2_examples() {
        assert!(check_tp2(&StochasticMatrix::identity(3)).holds());
        assert!(check_tp2(&m(&[&[0.8, 0.2, 0.0], &[0.1, 0.8, 0.1], &[0.0, 0.2, 0.8]])).holds());
        let v = check_tp2(&m(&[&[0.2, 0.8], &[0.8, 0.2]]));
        match v {
            Verdict::Fails(w) => assert!((w.value + 0.6).abs() < 1e-12),
            other => panic!("expected failure, got {other:?}"),
        }
    }

    #[test]
    fn single_crossing_semantics() {
        assert!(single_crossing(&[-1.0, 0.0, 1.0]));
        assert!(single_crossing(&[0.0, 0.0]));
        assert!(single_crossing(&[1.0, 0.0, 1.0])); // zero excursion ignored
        assert!(!single_crossing(&[1.0, -1.0]));
        assert!(!single_crossing(&[-1.0, 1.0, -1.0]));
    }

    #[test]
    fn identical_sensors_pass_everything() {
        let b = m(&[&[0.8, 0.2], &[0.2, 0.8]]);
        assert!(check_single_crossing_a2(&b, &b).holds());
        assert!(check_boundary_a3(&b, &b).holds());
        assert!(check_signed_ratio_a4(&b, &b).0.holds());
        assert!(check_aggregated_sc(&b, &b, 3).unwrap().holds());
        let r = check_blackwell_right(&b, &b).unwrap();
        assert!(r.feasible && r.residual < 1e-9);
        let l = check_blackwell_left(&b, &b).unwrap();
        assert!(l.feasible);
    }

    #[test]
    fn noninformative_target_is_always_feasible() {
        let b1 = m(&[&[0.5, 0.5], &[0.5, 0.5]]);
        let b2 = m(&[&[0.9, 0.1], &[0.2, 0.8]]);
        let r = check_blackwell_right(&b1, &b2).unwrap();
        assert!(r.feasible, "phase1 = {}", r.phase1_objective);
    }

    #[test]
    fn left_feasible_by_construction() {
        // B(1) = P' B(2)
        let b2 = m(&[&[0.7, 0.2, 0.1], &[0.1, 0.6, 0.3], &[0.05, 0.15, 0.8]]);
        let p = m(&[&[0.9, 0.05, 0.05], &[0.1, 0.8, 0.1], &[0.0, 0.2, 0.8]]);
        let rows: Vec<Vec<f64>> = (0..3)
            .map(|i| {
                (0..3)
                    .map(|y| (0..3).map(|j| p.at(i, j) * b2.at(j, y)).sum())
                    .collect()
            })
            .collect();
        let b1 = StochasticMatrix::new_renormalized(&rows).unwrap();
        let r = check_blackwell_left(&b1, &b2).unwrap();
        assert!(r.feasible && r.residual < 1e-9);
    }

    #[test]
    fn capacity_of_bsc_and_noninformative() {
        let bsc = m(&[&[0.8, 0.2], &[0.2, 0.8]]);
        let c = channel_capacity(&bsc);
        assert!((c - 0.2780719051126377).abs() < 1e-8, "got {c}");
        let flat = m(&[&[0.25, 0.75], &[0.25, 0.75]]);
        assert!(channel_capacity(&flat) < 1e-9);
    }

    #[test]
    fn identical_sensors_give_degenerate_split() {
        let p = m(&[&[0.9, 0.1], &[0.1, 0.9]]);
        let b = m(&[&[0.8, 0.2], &[0.2, 0.8]]);
        let (a5, a6, zstar) = check_global_filter_a5_a6(&p, &b, &b, 1).unwrap();
        assert!(a5.holds());
        assert!(a6.holds());
        assert_eq!(zstar, Some(0)); // H ≡ 0, smallest split index reported
    }

    #[test]
    fn simplex_detects_infeasible_system() {
        // x1 + x2 = 1, x1 + x2 = 2 has no solution
        let (obj, _) = phase1_simplex(&[vec![1.0, 1.0], vec![1.0, 1.0]], &[1.0, 2.0]);
        assert!(obj > 0.5);
    }

    #[test]
    fn simplex_handles_redundant_rows() {
        let (obj, x) = phase1_simplex(
            &[vec![1.0, 1.0], vec![2.0, 2.0], vec![1.0, 0.0]],
            &[1.0, 2.0, 0.25],
        );
        assert!(obj < 1e-12);
        assert!((x[0] - 0.25).abs() < 1e-12 && (x[1] - 0.75).abs() < 1e-12);
    }

    #[test]
    fn multiset_enumeration_counts() {
        let mut count = 0;
        for_each_multiset(3, 2, |_| {
            count += 1;
            true
        });
        assert_eq!(count, 6); // C(3+2-1, 2)
    }
}
