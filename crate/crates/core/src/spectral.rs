//! Perron–Frobenius data of the weighted adjacency matrix and the residue limits
//! `η̃ = lim_k e^{-β_k}·η·e^{β_{k-n}}` that feed the expectation `Φ_∞`.
//!
//! On a path `λ` of length `n` the scaling is `f_k(λ) = (B^{k-n}1)_{s(λ)} / (B^k 1)_{r(λ)}`,
//! so every residue reduces to the limit of such ratios, one per `(r, s, n)`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::algebra::{AlgebraElement, DEFAULT_TOL};
use crate::cuntz_pimsner::SpanningElement;
use crate::error::{Error, Result};
use crate::fock::FockVector;
use crate::graph::GraphBimodule;

const MAX_POWER_ITERATIONS: usize = 100_000;
/// A factor sequence that moved less than this over its last seven eighths is taken as settled.
const SETTLED: f64 = 1e-13;
/// Slack for comparing a bound against a quantity computed with rounding.
const ROUNDING_SLACK: f64 = 1e-9;

/// Geometric rate `‖r^{-k}(B^T)^k − Q‖ ≤ C·α^k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateCertificate {
    pub c: f64,
    pub alpha: f64,
    /// The power `l` with `‖(1−Q)(B^T)^l(1−Q)‖ < r^l` used to build `α`.
    pub l: usize,
}

impl RateCertificate {
    pub fn bound(&self, k: usize) -> f64 {
        if self.c == 0.0 {
            0.0
        } else {
            self.c * self.alpha.powi(k as i32)
        }
    }
}

#[derive(Debug, Clone)]
pub struct PFData {
    pub spectral_radius: f64,
    /// `x ≥ 0` with `B^T x = r x` and `‖x‖₂ = 1`.
    pub eigenvector: Vec<f64>,
    /// `y ≥ 0` with `B y = r y` and `‖y‖₂ = 1`.
    pub right_eigenvector: Vec<f64>,
    /// Perron projection of `B^T`: `x yᵀ / (yᵀx)`, equal to `x xᵀ` when `B` is symmetric.
    pub projection: DMatrix<f64>,
    /// `‖B^T x − r x‖₂`.
    pub residual: f64,
    pub primitive: bool,
    /// Present when the construction found a contracting power.
    pub rate: Option<RateCertificate>,
    deflated: DMatrix<f64>,
}

impl PFData {
    pub fn rate_c(&self) -> Option<f64> {
        self.rate.map(|r| r.c)
    }

    pub fn rate_alpha(&self) -> Option<f64> {
        self.rate.map(|r| r.alpha)
    }

    /// `lim_k f_k = r^{-n} y_s / y_r` for a primitive matrix.
    pub fn closed_form_factor(&self, range: usize, source: usize, n: usize) -> f64 {
        self.spectral_radius.powi(-(n as i32)) * self.right_eigenvector[source]
            / self.right_eigenvector[range]
    }

    /// `‖r^{-k}(B^T)^k − Q‖` for `k = 0..=k_max`, evaluated as `‖((1−Q)B^T(1−Q)/r)^k‖`
    /// (with `1 − Q` at `k = 0`), which equals it since `Q` commutes with `B^T`. The
    /// deflated form avoids the cancellation of subtracting `Q` from a nearly equal matrix.
    pub fn rate_residuals(&self, k_max: usize) -> Vec<f64> {
        let n = self.deflated.nrows();
        let mut power = DMatrix::<f64>::identity(n, n) - &self.projection;
        let mut out = Vec::with_capacity(k_max + 1);
        out.push(op_norm(&power));
        for _ in 0..k_max {
            power = &self.deflated * power;
            out.push(op_norm(&power));
        }
        out
    }

    /// True iff the certificate bounds every residual up to `k_max`.
    pub fn rate_holds(&self, k_max: usize) -> bool {
        let Some(rate) = self.rate else {
            return false;
        };
        self.rate_residuals(k_max)
            .iter()
            .enumerate()
            .all(|(k, &res)| res <= rate.bound(k) * (1.0 + ROUNDING_SLACK) + f64::EPSILON)
    }
}

/// Largest singular value.
pub fn op_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .fold(0.0, |a, &b| a.max(b))
}

/// Positivity of the boolean power `(M > 0)^{(n-1)²+1}` (Wielandt's bound).
pub fn is_primitive(m: &DMatrix<f64>) -> bool {
    let n = m.nrows();
    if n == 0 {
        return false;
    }
    let pattern: Vec<Vec<bool>> = (0..n).map(|i| (0..n).map(|j| m[(i, j)] > 0.0).collect()).collect();
    let mut exp = (n - 1) * (n - 1) + 1;
    let mut base = pattern;
    let mut acc: Option<Vec<Vec<bool>>> = None;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = Some(match acc {
                None => base.clone(),
                Some(a) => bool_mul(&a, &base),
            });
        }
        exp >>= 1;
        if exp > 0 {
            base = bool_mul(&base, &base);
        }
    }
    acc.expect("exponent ≥ 1").iter().all(|row| row.iter().all(|&b| b))
}

fn bool_mul(a: &[Vec<bool>], b: &[Vec<bool>]) -> Vec<Vec<bool>> {
    let n = a.len();
    (0..n)
        .map(|i| (0..n).map(|j| (0..n).any(|k| a[i][k] && b[k][j])).collect())
        .collect()
}

/// Power iteration on `M + I`; the shift removes the period of irreducible matrices.
fn perron_vector(m: &DMatrix<f64>, tol: f64) -> (f64, Vec<f64>, f64) {
    let n = m.nrows();
    let shifted = m + DMatrix::<f64>::identity(n, n);
    let mut v = vec![1.0 / n as f64; n];
    let mut radius = 0.0;
    let mut residual = f64::INFINITY;
    let mut stalled = 0;
    for _ in 0..MAX_POWER_ITERATIONS {
        let w = &shifted * nalgebra::DVector::from_column_slice(&v);
        let sum: f64 = w.iter().map(|x| x.abs()).sum();
        if sum == 0.0 {
            return (0.0, v, 0.0);
        }
        v = w.iter().map(|x| x.abs() / sum).collect();
        let (r, res) = rayleigh(m, &v);
        radius = r;
        // past the requested accuracy, keep going until rounding stops the progress
        stalled = if res < residual { 0 } else { stalled + 1 };
        residual = residual.min(res);
        let scale = radius.max(1.0);
        if residual <= 4.0 * f64::EPSILON * scale || (residual <= 1e-2 * tol * scale && stalled >= 5) {
            break;
        }
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let v: Vec<f64> = v.iter().map(|x| x / norm).collect();
    let (_, residual_unit) = rayleigh(m, &v);
    (radius, v, residual_unit.min(residual / norm))
}

/// `(‖Mv‖₁/‖v‖₁, ‖Mv − r v‖₂/‖v‖₂)` for a nonnegative `v`.
fn rayleigh(m: &DMatrix<f64>, v: &[f64]) -> (f64, f64) {
    let mv = m * nalgebra::DVector::from_column_slice(v);
    let r = mv.sum() / v.iter().sum::<f64>();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let res = mv
        .iter()
        .zip(v)
        .map(|(a, b)| (a - r * b).powi(2))
        .sum::<f64>()
        .sqrt()
        / norm;
    (r, res)
}

/// Perron–Frobenius data of the weighted adjacency `B` and, for primitive `B`, the rate
/// certificate of the contraction `(1−Q)B^T(1−Q)/r`, searched over powers `l ≤ k_max`.
pub fn pf_data(module: &GraphBimodule, tol: f64, k_max: usize) -> Result<PFData> {
    if k_max < 2 {
        return Err(Error::Domain(format!("k_max = {k_max} must be at least 2")));
    }
    let b = module.adjacency();
    let bt = b.transpose();
    let n = b.nrows();
    let (radius, x, residual) = perron_vector(&bt, tol);
    let (_, y, _) = perron_vector(&b, tol);
    if radius <= 0.0 {
        return Err(Error::InvalidGraph("adjacency matrix is nilpotent".into()));
    }
    let primitive = is_primitive(&b);
    let xv = nalgebra::DVector::from_column_slice(&x);
    let yv = nalgebra::DVector::from_column_slice(&y);
    let overlap = yv.dot(&xv);
    let projection = if overlap > 1e-12 {
        &xv * yv.transpose() / overlap
    } else {
        &xv * xv.transpose()
    };
    let complement = DMatrix::<f64>::identity(n, n) - &projection;
    let deflated = &complement * &bt * &complement / radius;

    let rate = if primitive {
        rate_certificate(&complement, &deflated, k_max)
    } else {
        None
    };
    Ok(PFData {
        spectral_radius: radius,
        eigenvector: x,
        right_eigenvector: y,
        projection,
        residual,
        primitive,
        rate,
        deflated,
    })
}

/// The rate construction: the first `l` with `‖N^l‖ < 1`, `α = ‖N^l‖^{1/l}` and
/// `C = max_{p<l} α^{-p}‖N^p‖`, where `N^0 = 1 − Q`.
fn rate_certificate(
    complement: &DMatrix<f64>,
    deflated: &DMatrix<f64>,
    max_l: usize,
) -> Option<RateCertificate> {
    let base = op_norm(complement);
    if base == 0.0 {
        return Some(RateCertificate { c: 0.0, alpha: 0.0, l: 1 });
    }
    let mut norms = vec![base];
    let mut power = complement.clone();
    for l in 1..=max_l {
        power = deflated * power;
        let norm_l = op_norm(&power);
        if norm_l < 1.0 {
            let alpha = if norm_l > 0.0 {
                norm_l.powf(1.0 / l as f64)
            } else {
                f64::EPSILON
            };
            let c = norms
                .iter()
                .enumerate()
                .map(|(p, &np)| np / alpha.powi(p as i32))
                .fold(0.0, f64::max);
            return Some(RateCertificate { c, alpha, l });
        }
        norms.push(norm_l);
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ResidueMode {
    /// Closed form when the adjacency is primitive and certified, iteration otherwise.
    #[default]
    Auto,
    ClosedForm,
    Iterate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidueConfig {
    pub k_max: usize,
    pub tol: f64,
    pub mode: ResidueMode,
}

impl Default for ResidueConfig {
    fn default() -> Self {
        Self {
            k_max: 200,
            tol: DEFAULT_TOL,
            mode: ResidueMode::Auto,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    ClosedFormPf,
    IterateAndFit,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::ClosedFormPf => "closed_form_pf",
            Method::IterateAndFit => "iterate_and_fit",
        }
    }
}

/// How the residual curve `‖c_k − c_∞‖` decays.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DecayFit {
    /// Below tolerance over the whole second half of the curve.
    WithinTolerance,
    /// Certified `O(α^k)`, which is `O(k^{-δ})` for every `δ`.
    Geometric { alpha: f64 },
    /// Least-squares slope of `log residual` against `log k`.
    PowerLaw { delta: f64, r_squared: f64 },
    NotConverged { delta: f64, r_squared: f64 },
}

impl DecayFit {
    /// The decay exponent, `+∞` for tolerance-level and geometric decay.
    pub fn delta(&self) -> f64 {
        match *self {
            DecayFit::WithinTolerance | DecayFit::Geometric { .. } => f64::INFINITY,
            DecayFit::PowerLaw { delta, .. } | DecayFit::NotConverged { delta, .. } => delta,
        }
    }

    pub fn r_squared(&self) -> Option<f64> {
        match *self {
            DecayFit::PowerLaw { r_squared, .. } | DecayFit::NotConverged { r_squared, .. } => {
                Some(r_squared)
            }
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ResidueReport {
    pub degree: usize,
    pub eta_tilde: FockVector,
    pub delta: f64,
    pub fit: DecayFit,
    /// `(k, ‖c_k − c_∞‖)` for `k = max(n, 1)..=k_max`, module norm.
    pub residual_curve: Vec<(usize, f64)>,
    pub converged: bool,
    pub method: Method,
    /// Set when a requested closed form was unavailable.
    pub note: Option<String>,
}

/// `B^k 1` for `k ≤ k_max`, each stored as a unit-max vector and a log scale.
#[derive(Debug, Clone)]
pub struct IndexTable {
    vectors: Vec<Vec<f64>>,
    // binary exponents, so rescaling never rounds
    exponents: Vec<i32>,
}

impl IndexTable {
    pub fn new(module: &GraphBimodule, k_max: usize) -> Self {
        let b = module.adjacency();
        let mut v = nalgebra::DVector::from_element(module.num_vertices(), 1.0);
        let mut vectors = vec![v.iter().copied().collect::<Vec<_>>()];
        let mut exponents = vec![0];
        let mut acc = 0i32;
        for _ in 0..k_max {
            v = &b * v;
            let m = v.iter().fold(0.0, |a: f64, &x| a.max(x));
            if m > 0.0 {
                let e = m.log2().floor() as i32;
                v *= 2f64.powi(-e);
                acc += e;
            }
            vectors.push(v.iter().copied().collect());
            exponents.push(acc);
        }
        Self { vectors, exponents }
    }

    pub fn k_max(&self) -> usize {
        self.vectors.len() - 1
    }

    /// `f_k = (B^{k-n}1)_s / (B^k 1)_r`, for `n ≤ k ≤ k_max`.
    pub fn factor(&self, range: usize, source: usize, n: usize, k: usize) -> f64 {
        debug_assert!(n <= k);
        self.vectors[k - n][source] / self.vectors[k][range]
            * 2f64.powi(self.exponents[k - n] - self.exponents[k])
    }
}

/// Precomputed index table and PF data for repeated residue queries on one module.
#[derive(Debug, Clone)]
pub struct ResidueSolver {
    config: ResidueConfig,
    pf: Option<PFData>,
    table: IndexTable,
    num_vertices: usize,
}

impl ResidueSolver {
    pub fn new(module: &GraphBimodule, config: ResidueConfig) -> Result<Self> {
        if config.k_max < 2 {
            return Err(Error::Domain(format!("k_max = {} must be at least 2", config.k_max)));
        }
        let pf = match config.mode {
            ResidueMode::Iterate => None,
            _ => Some(pf_data(module, config.tol, config.k_max)?),
        };
        Ok(Self {
            config,
            pf,
            table: IndexTable::new(module, config.k_max),
            num_vertices: module.num_vertices(),
        })
    }

    pub fn config(&self) -> &ResidueConfig {
        &self.config
    }

    pub fn pf(&self) -> Option<&PFData> {
        self.pf.as_ref()
    }

    pub fn table(&self) -> &IndexTable {
        &self.table
    }

    fn closed_form(&self) -> Option<&PFData> {
        self.pf.as_ref().filter(|pf| pf.primitive && pf.rate.is_some())
    }

    /// The sequence `f_k` for `k = n..=k_max`.
    pub fn factor_sequence(&self, range: usize, source: usize, n: usize) -> Vec<f64> {
        (n..=self.config.k_max)
            .map(|k| self.table.factor(range, source, n, k))
            .collect()
    }

    /// `lim_k f_k` and how it was obtained.
    pub fn factor_limit(&self, range: usize, source: usize, n: usize) -> Result<(f64, Method)> {
        self.check_degree(n)?;
        if let Some(pf) = self.closed_form() {
            return Ok((pf.closed_form_factor(range, source, n), Method::ClosedFormPf));
        }
        let seq = self.factor_sequence(range, source, n);
        Ok((extrapolate(n, &seq), Method::IterateAndFit))
    }

    fn check_degree(&self, n: usize) -> Result<()> {
        if n + 8 > self.config.k_max {
            return Err(Error::Domain(format!(
                "k_max = {} is too small for degree {n}",
                self.config.k_max
            )));
        }
        Ok(())
    }

    /// `η̃ = lim_k e^{-β_k}·η·e^{β_{k-n}}` with its residual curve and decay fit.
    pub fn eta_tilde(&self, eta: &FockVector) -> Result<ResidueReport> {
        let n = eta
            .degree()
            .ok_or_else(|| Error::Domain("η must be homogeneous".into()))?;
        self.check_degree(n)?;
        let k_max = self.config.k_max;
        let start = n.max(1);

        let mut limits = Vec::with_capacity(eta.terms.len());
        let mut method = Method::IterateAndFit;
        let mut eta_tilde = FockVector::new();
        for (path, &c) in &eta.terms {
            let (lim, m) = self.factor_limit(path.range(), path.source(), n)?;
            method = m;
            limits.push(lim);
            eta_tilde.add_term(path.clone(), c * lim);
        }

        let mut residual_curve = Vec::with_capacity(k_max + 1 - start);
        for k in start..=k_max {
            let mut per_vertex = vec![0.0; self.num_vertices];
            for ((path, &c), &lim) in eta.terms.iter().zip(&limits) {
                let d = self.table.factor(path.range(), path.source(), n, k) - lim;
                per_vertex[path.source()] += c.norm_sqr() * d * d;
            }
            residual_curve.push((k, per_vertex.iter().fold(0.0, |a: f64, &b| a.max(b)).sqrt()));
        }

        let note = (self.config.mode == ResidueMode::ClosedForm && method != Method::ClosedFormPf)
            .then(|| "adjacency is not primitive; fell back to iteration".to_string());
        let fit = match (method, self.closed_form()) {
            (Method::ClosedFormPf, Some(pf)) => DecayFit::Geometric {
                alpha: pf.rate.map_or(0.0, |r| r.alpha),
            },
            _ => fit_decay(&residual_curve, k_max, self.config.tol),
        };
        let converged = !matches!(fit, DecayFit::NotConverged { .. });
        Ok(ResidueReport {
            degree: n,
            eta_tilde,
            delta: fit.delta(),
            fit,
            residual_curve,
            converged,
            method,
            note,
        })
    }
}

/// Convenience wrapper building a one-off [`ResidueSolver`].
pub fn eta_tilde(module: &GraphBimodule, eta: &FockVector, config: ResidueConfig) -> Result<ResidueReport> {
    ResidueSolver::new(module, config)?.eta_tilde(eta)
}

/// Limit of `a_k` (`k = n..`): the last value if the sequence has settled, otherwise
/// polynomial extrapolation in `h = 1/(k+1)` to `h = 0` through the samples at
/// `k_max, k_max/2, k_max/4, k_max/8`. The weights sum to one, so the limit is linear in
/// the data and exact for sequences rational of degree ≤ 3 in `h`.
pub fn extrapolate(n: usize, seq: &[f64]) -> f64 {
    let k_max = n + seq.len() - 1;
    let last = seq[seq.len() - 1];
    let lo = (k_max / 8).max(n);
    let spread = seq[lo - n..]
        .iter()
        .fold(0.0, |a: f64, &x| a.max((x - last).abs()));
    if spread <= SETTLED * last.abs().max(1.0) {
        return last;
    }
    let ks: Vec<usize> = [1, 2, 4, 8]
        .iter()
        .map(|d| k_max / d)
        .filter(|&k| k >= n && k >= 1)
        .collect();
    let hs: Vec<f64> = ks.iter().map(|&k| 1.0 / (k as f64 + 1.0)).collect();
    let mut p: Vec<f64> = ks.iter().map(|&k| seq[k - n]).collect();
    // Neville's scheme evaluated at h = 0
    for m in 1..p.len() {
        for i in 0..p.len() - m {
            p[i] = (hs[i + m] * p[i] - hs[i] * p[i + 1]) / (hs[i + m] - hs[i]);
        }
    }
    p[0]
}

/// Classifies the second half of a residual curve.
pub fn fit_decay(curve: &[(usize, f64)], k_max: usize, tol: f64) -> DecayFit {
    let tail: Vec<(usize, f64)> = curve.iter().copied().filter(|&(k, _)| 2 * k >= k_max).collect();
    if tail.iter().all(|&(_, r)| r <= tol) {
        return DecayFit::WithinTolerance;
    }
    let pts: Vec<(f64, f64)> = tail
        .iter()
        .filter(|&&(k, r)| r > 0.0 && k > 0)
        .map(|&(k, r)| ((k as f64).ln(), r.ln()))
        .collect();
    if pts.len() < 3 {
        return DecayFit::NotConverged { delta: f64::NAN, r_squared: f64::NAN };
    }
    let (slope, r_squared) = least_squares(&pts);
    let delta = -slope;
    if r_squared >= 0.9 && delta > 0.0 {
        DecayFit::PowerLaw { delta, r_squared }
    } else {
        DecayFit::NotConverged { delta, r_squared }
    }
}

/// Slope and coefficient of determination of the least-squares line.
fn least_squares(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return (0.0, 0.0);
    }
    let slope = sxy / sxx;
    let ss_res = syy - slope * sxy;
    let r2 = if syy == 0.0 { 1.0 } else { 1.0 - ss_res / syy };
    (slope, r2)
}

/// A partial Dirichlet sum and a bound on the discarded tail.
#[derive(Debug, Clone)]
pub struct PartialSum {
    pub value: AlgebraElement,
    pub tail_bound: f64,
}

/// `Σ_{k≤K} Φ_k(P_k T P_k) e^{-β_k} (1+k²)^{-s/2}` for `T` in the Toeplitz span acting on
/// the Fock module. Only equal-length terms `S_μS_μ*` contribute; for `k ≥ |μ|` they give
/// `c_μ f_k(μ) p_{r(μ)}`. The tail is bounded by `Σ|coef|·K^{1-σ}/(σ-1)`, `σ = Re s`.
pub fn phi_s_partial(
    module: &GraphBimodule,
    t: &SpanningElement,
    s: Complex64,
    k: usize,
) -> Result<PartialSum> {
    if s.re <= 1.0 {
        return Err(Error::Domain(format!("Re(s) = {} must exceed 1", s.re)));
    }
    if k < 1 {
        return Err(Error::Domain("K must be at least 1".into()));
    }
    let table = IndexTable::new(module, k);
    let mut value = module.algebra_zero();
    let mut mass = 0.0;
    for ((mu, nu), &c) in t.terms() {
        mass += c.norm();
        if mu != nu {
            continue;
        }
        let n = mu.len();
        for j in n..=k {
            let damp = (-(s / 2.0) * (1.0 + (j * j) as f64).ln()).exp();
            let coef = c * mu.weight() * table.factor(mu.range(), mu.source(), n, j);
            value.values_mut()[mu.range()] += coef * damp;
        }
    }
    let sigma = s.re;
    let tail_bound = mass * (k as f64).powf(1.0 - sigma) / (sigma - 1.0);
    Ok(PartialSum { value, tail_bound })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::fock::{beta_k, paths, Path};

    fn golden() -> f64 {
        (1.0 + 5f64.sqrt()) / 2.0
    }

    #[test]
    fn cuntz_pf_is_trivial() {
        let pf = pf_data(&catalog::cuntz(3), 1e-12, 100).unwrap();
        assert_eq!(pf.spectral_radius, 3.0);
        assert_eq!(pf.eigenvector, vec![1.0]);
        assert!(pf.primitive);
        assert_eq!(pf.rate, Some(RateCertificate { c: 0.0, alpha: 0.0, l: 1 }));
        assert!(pf.rate_holds(100));
    }

    #[test]
    fn fibonacci_pf_against_eigensolve() {
        let m = catalog::fibonacci();
        let pf = pf_data(&m, 1e-12, 100).unwrap();
        assert!((pf.spectral_radius - golden()).abs() < 1e-12);
        // dense symmetric eigensolve as the oracle
        let eig = m.adjacency().transpose().symmetric_eigen();
        let (imax, &lmax) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap();
        assert!((lmax - pf.spectral_radius).abs() < 1e-12);
        let col = eig.eigenvectors.column(imax);
        let sign = col[0].signum();
        for (a, b) in col.iter().zip(&pf.eigenvector) {
            assert!((a * sign - b).abs() < 1e-10);
        }
        assert!((pf.eigenvector[0] / pf.eigenvector[1] - golden()).abs() < 1e-10);
        assert!(pf.residual < 1e-12);
    }

    #[test]
    fn fibonacci_rate_matches_analytic_decay() {
        let pf = pf_data(&catalog::fibonacci(), 1e-12, 100).unwrap();
        let rate = pf.rate.unwrap();
        assert_eq!(rate.l, 1);
        assert!((rate.alpha - golden().powi(-2)).abs() < 1e-12);
        assert!((rate.c - 1.0).abs() < 1e-12);
        let res = pf.rate_residuals(100);
        for (k, r) in res.iter().enumerate() {
            let exact = golden().powi(-2 * k as i32);
            assert!((r - exact).abs() <= 1e-10 * exact, "k = {k}");
        }
        assert!(pf.rate_holds(100));
    }

    #[test]
    fn deflated_residuals_match_direct_powers_for_small_k() {
        for m in [catalog::fibonacci(), catalog::skew_primitive(), catalog::weighted_fibonacci()] {
            let pf = pf_data(&m, 1e-12, 100).unwrap();
            let bt = m.adjacency().transpose() / pf.spectral_radius;
            let mut power = DMatrix::<f64>::identity(2, 2);
            let res = pf.rate_residuals(20);
            for (k, r) in res.iter().enumerate() {
                let direct = op_norm(&(&power - &pf.projection));
                assert!((direct - r).abs() < 1e-9, "k = {k}: {direct} vs {r}");
                power = &bt * power;
            }
            assert!(pf.rate_holds(100));
        }
    }

    #[test]
    fn skew_projection_is_spectral() {
        let m = catalog::skew_primitive();
        let pf = pf_data(&m, 1e-12, 100).unwrap();
        assert!((pf.spectral_radius - 2.0).abs() < 1e-12);
        let bt = m.adjacency().transpose();
        let q = &pf.projection;
        assert!((q * q - q).abs().max() < 1e-12);
        assert!((&bt * q - q * &bt).abs().max() < 1e-12);
    }

    #[test]
    fn primitivity() {
        assert!(is_primitive(&catalog::fibonacci().adjacency()));
        assert!(is_primitive(&catalog::cuntz(2).adjacency()));
        assert!(!is_primitive(&catalog::suq2().adjacency()));
        assert!(!is_primitive(&catalog::permutation(3).adjacency()));
        assert!(!is_primitive(&catalog::two_loops().adjacency()));
        // Wielandt's extremal matrix needs exactly the bound (n-1)²+1
        let w = DMatrix::from_row_slice(3, 3, &[0., 1., 0., 0., 0., 1., 1., 1., 0.]);
        assert!(is_primitive(&w));
    }

    #[test]
    fn extrapolation_is_exact_on_low_degree_rationals() {
        let n = 3;
        let seq: Vec<f64> = (n..=400).map(|k| (k + 1 - n) as f64 / (k + 1) as f64).collect();
        assert!((extrapolate(n, &seq) - 1.0).abs() < 1e-13);
        let seq: Vec<f64> = (n..=400).map(|k| 1.0 / (k + 1) as f64).collect();
        assert!(extrapolate(n, &seq).abs() < 1e-13);
        let seq = vec![0.25; 100];
        assert_eq!(extrapolate(0, &seq), 0.25);
    }

    #[test]
    fn cuntz_residues_are_exact() {
        let m = catalog::cuntz(2);
        for mode in [ResidueMode::Auto, ResidueMode::Iterate] {
            let solver = ResidueSolver::new(&m, ResidueConfig { mode, ..Default::default() }).unwrap();
            for p in paths(&m, 3) {
                let rep = solver.eta_tilde(&FockVector::basis(p.clone())).unwrap();
                assert!(rep.converged);
                assert!((rep.eta_tilde.coefficient(&p).re - 0.125).abs() < 1e-15);
                assert_eq!(rep.delta, f64::INFINITY);
            }
        }
    }

    #[test]
    fn suq2_case_table() {
        let m = catalog::suq2();
        let cfg = ResidueConfig { k_max: 400, ..Default::default() };
        let solver = ResidueSolver::new(&m, cfg).unwrap();
        assert!(!solver.pf().unwrap().primitive);
        let check = |ids: &str, expect: f64, exact: bool| {
            let p = Path::parse(&m, ids).unwrap();
            let rep = solver.eta_tilde(&FockVector::basis(p.clone())).unwrap();
            assert!((rep.eta_tilde.coefficient(&p).re - expect).abs() < 1e-10, "{ids}");
            assert!(rep.converged, "{ids}");
            if exact {
                assert_eq!(rep.fit, DecayFit::WithinTolerance, "{ids}");
            } else {
                assert!((rep.delta - 1.0).abs() < 0.1, "{ids}: δ = {}", rep.delta);
            }
        };
        check("e,e", 1.0, true);
        check("g,g", 1.0, false);
        check("g,f", 0.0, false);
        check("f,e", 0.0, false);
        check("g", 1.0, false);
    }

    #[test]
    fn suq2_factor_sequences_match_exact_rates() {
        let m = catalog::suq2();
        let table = IndexTable::new(&m, 300);
        // g^n: r = s = w, ratio (k+1-n)/(k+1); mixed: r = w, s = v, ratio 1/(k+1)
        for n in 1..5 {
            for k in n..300 {
                let gg = table.factor(1, 1, n, k);
                assert!((gg - (k + 1 - n) as f64 / (k + 1) as f64).abs() < 1e-14);
                let mixed = table.factor(1, 0, n, k);
                assert!((mixed - 1.0 / (k + 1) as f64).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn fibonacci_closed_form_matches_iteration() {
        let m = catalog::fibonacci();
        let closed = ResidueSolver::new(&m, ResidueConfig::default()).unwrap();
        let iter = ResidueSolver::new(&m, ResidueConfig { mode: ResidueMode::Iterate, ..Default::default() }).unwrap();
        let a = Path::parse(&m, "a").unwrap();
        let c = Path::parse(&m, "c").unwrap();
        let (fa, method) = closed.factor_limit(a.range(), a.source(), 1).unwrap();
        assert_eq!(method, Method::ClosedFormPf);
        assert!((fa - 1.0 / golden()).abs() < 1e-12);
        let (fc, _) = closed.factor_limit(c.range(), c.source(), 1).unwrap();
        assert!((fc - 1.0).abs() < 1e-12);
        for n in 0..5 {
            for p in paths(&m, n) {
                let x = closed.factor_limit(p.range(), p.source(), n).unwrap().0;
                let y = iter.factor_limit(p.range(), p.source(), n).unwrap().0;
                assert!((x - y).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn skew_closed_form_uses_right_eigenvector() {
        let m = catalog::skew_primitive();
        let closed = ResidueSolver::new(&m, ResidueConfig::default()).unwrap();
        let iter = ResidueSolver::new(&m, ResidueConfig { mode: ResidueMode::Iterate, ..Default::default() }).unwrap();
        for n in 0..4 {
            for p in paths(&m, n) {
                let x = closed.factor_limit(p.range(), p.source(), n).unwrap().0;
                let y = iter.factor_limit(p.range(), p.source(), n).unwrap().0;
                assert!((x - y).abs() < 1e-8, "{}: {x} vs {y}", p.label(&m));
            }
        }
    }

    #[test]
    fn closed_form_request_falls_back_when_not_primitive() {
        let m = catalog::suq2();
        let cfg = ResidueConfig { mode: ResidueMode::ClosedForm, k_max: 200, ..Default::default() };
        let rep = eta_tilde(&m, &FockVector::basis(Path::parse(&m, "e").unwrap()), cfg).unwrap();
        assert_eq!(rep.method, Method::IterateAndFit);
        assert!(rep.note.is_some());
    }

    #[test]
    fn eta_tilde_rejects_inhomogeneous_and_small_kmax() {
        let m = catalog::cuntz(2);
        let mixed = FockVector::basis(Path::vertex(0)).add(&FockVector::basis(Path::parse(&m, "a").unwrap()));
        assert!(eta_tilde(&m, &mixed, ResidueConfig::default()).is_err());
        assert!(ResidueSolver::new(&m, ResidueConfig { k_max: 1, ..Default::default() }).is_err());
    }

    #[test]
    fn index_table_matches_integer_counts() {
        let m = catalog::fibonacci();
        let table = IndexTable::new(&m, 60);
        for k in 0..60 {
            let bk = beta_k(&m, k).re();
            for n in 0..=k {
                let bkn = beta_k(&m, k - n).re();
                for r in 0..2 {
                    for s in 0..2 {
                        let f = table.factor(r, s, n, k);
                        assert!((f - bkn[s] / bk[r]).abs() <= 1e-13 * f.max(1.0));
                    }
                }
            }
        }
    }

    #[test]
    fn phi_s_partial_domain_and_identity() {
        let m = catalog::fibonacci();
        let id = SpanningElement::one(&m);
        let s = Complex64::new(2.0, 0.0);
        let got = phi_s_partial(&m, &id, s, 30).unwrap();
        let scalar: f64 = (0..=30).map(|k| 1.0 / (1.0 + (k * k) as f64)).sum();
        for v in 0..2 {
            assert!((got.value.get(v).re - scalar).abs() < 1e-12);
        }
        assert!(phi_s_partial(&m, &id, Complex64::new(1.0, 3.0), 10).is_err());
        let zero = phi_s_partial(&m, &SpanningElement::zero(), s, 10).unwrap();
        assert_eq!(zero.value, m.algebra_zero());
        assert_eq!(zero.tail_bound, 0.0);
    }

    #[test]
    fn phi_s_partial_cuntz_projection() {
        let m = catalog::cuntz(2);
        let a = Path::parse(&m, "a").unwrap();
        let t = SpanningElement::monomial(a.clone(), a);
        let got = phi_s_partial(&m, &t, Complex64::new(2.0, 0.0), 50).unwrap();
        let expect: f64 = (1..=50).map(|k| 0.5 / (1.0 + (k * k) as f64)).sum();
        assert!((got.value.get(0).re - expect).abs() < 1e-12);
        let tail: f64 = (51..200_000u64).map(|k| 1.0 / (1.0 + (k * k) as f64)).sum();
        assert!(tail <= got.tail_bound);
    }
}
