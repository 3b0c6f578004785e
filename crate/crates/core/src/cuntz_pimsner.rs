//! The spanning algebra `span{S_μS_ν*}` of the Toeplitz and Cuntz–Pimsner algebras, the
//! expectation `Φ_∞`, and the right module `(O_E)^Φ_A` truncated at a path depth.
//!
//! In the module, `W_{μ,ν}` is the class of `S_μS_ν*`; the inner product is
//! `(W|W')_A = Φ_∞(W*W')` and null vectors are quotiented numerically.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::OnceLock;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use crate::algebra::AlgebraElement;
use crate::error::{Error, Result};
use crate::fock::{paths, paths_up_to, FockVector, Path};
use crate::graph::GraphBimodule;
use crate::spectral::{DecayFit, Method, ResidueConfig, ResidueReport, ResidueSolver};

/// Cutoff for discarding Gram eigenvalues, relative to the largest one.
pub const NULL_CUTOFF: f64 = 1e-10;
/// Singular values below this count as zero when reporting ranks.
pub const RANK_CUTOFF: f64 = 1e-8;

fn zero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

fn one() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

/// Finite sum `Σ c_{μ,ν} S_μS_ν*` with `s(μ) = s(ν)` for every key.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SpanningElement {
    terms: BTreeMap<(Path, Path), Complex64>,
}

/// A [`SpanningElement`] read as the module class `Σ c_{μ,ν} W_{μ,ν}`.
pub type ModuleClass = SpanningElement;

impl SpanningElement {
    pub fn zero() -> Self {
        Self::default()
    }

    /// `Σ_v p_v`.
    pub fn one(module: &GraphBimodule) -> Self {
        Self::from_algebra(&module.algebra_one())
    }

    pub fn vertex(v: usize) -> Self {
        Self::monomial(Path::vertex(v), Path::vertex(v))
    }

    /// `Σ_v a(v) p_v`.
    pub fn from_algebra(a: &AlgebraElement) -> Self {
        let mut x = Self::zero();
        for (v, &c) in a.values().iter().enumerate() {
            x.add_term(Path::vertex(v), Path::vertex(v), c);
        }
        x
    }

    /// `S_μS_ν*`; panics unless `s(μ) = s(ν)`.
    pub fn monomial(mu: Path, nu: Path) -> Self {
        Self::try_monomial(mu, nu).expect("S_μS_ν* needs s(μ) = s(ν)")
    }

    pub fn try_monomial(mu: Path, nu: Path) -> Result<Self> {
        if mu.source() != nu.source() {
            return Err(Error::InvalidPath("S_μS_ν* needs s(μ) = s(ν)".into()));
        }
        let mut x = Self::zero();
        x.terms.insert((mu, nu), one());
        Ok(x)
    }

    /// `S_g`.
    pub fn generator(module: &GraphBimodule, g: usize) -> Self {
        let path = Path::from_edges(module, &[g]).expect("edge index");
        let s = path.source();
        Self::monomial(path, Path::vertex(s))
    }

    /// `S_ρ` for a path `ρ`, i.e. the Fock class `W_ρ`.
    pub fn creation(path: Path) -> Self {
        let s = path.source();
        Self::monomial(path, Path::vertex(s))
    }

    pub fn terms(&self) -> &BTreeMap<(Path, Path), Complex64> {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    fn add_term(&mut self, mu: Path, nu: Path, c: Complex64) {
        if c == zero() {
            return;
        }
        let key = (mu, nu);
        let entry = self.terms.entry(key.clone()).or_insert(zero());
        *entry += c;
        if *entry == zero() {
            self.terms.remove(&key);
        }
    }

    pub fn coefficient(&self, mu: &Path, nu: &Path) -> Complex64 {
        self.terms
            .get(&(mu.clone(), nu.clone()))
            .copied()
            .unwrap_or(zero())
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for ((mu, nu), &c) in &other.terms {
            out.add_term(mu.clone(), nu.clone(), c);
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-one()))
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let mut out = Self::zero();
        for ((mu, nu), &x) in &self.terms {
            out.add_term(mu.clone(), nu.clone(), x * c);
        }
        out
    }

    /// `(S_μS_ν*)* = S_νS_μ*`.
    pub fn adjoint(&self) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .map(|((mu, nu), c)| ((nu.clone(), mu.clone()), c.conj()))
                .collect(),
        }
    }

    /// Maps each coefficient, keeping the keys.
    pub fn map_terms(&self, mut f: impl FnMut(&Path, &Path, Complex64) -> Complex64) -> Self {
        let mut out = Self::zero();
        for ((mu, nu), &c) in &self.terms {
            out.add_term(mu.clone(), nu.clone(), f(mu, nu, c));
        }
        out
    }

    /// Longest path appearing in any key.
    pub fn max_length(&self) -> usize {
        self.terms
            .keys()
            .map(|(mu, nu)| mu.len().max(nu.len()))
            .max()
            .unwrap_or(0)
    }

    /// Product in normal form, from
    /// `S_μS_ν*·S_σS_ρ* = S_{μσ'}S_ρ*` if `σ = νσ'`, `S_μS_{ρν'}*` if `ν = σν'`, else 0.
    pub fn mul(&self, module: &GraphBimodule, other: &Self) -> Self {
        let mut out = Self::zero();
        for ((mu, nu), &a) in &self.terms {
            for ((sigma, rho), &b) in &other.terms {
                if let Some((m, n)) = monomial_product(module, mu, nu, sigma, rho) {
                    out.add_term(m, n, a * b);
                }
            }
        }
        out
    }

    /// `max |coefficient difference|` over the union of keys.
    pub fn distance(&self, other: &Self) -> f64 {
        self.sub(other)
            .terms
            .values()
            .fold(0.0, |a: f64, c| a.max(c.norm()))
    }

    /// Random element with `n_terms` keys drawn from `pool`, coefficients in the unit square.
    pub fn random(pool: &[Path], n_terms: usize, rng: &mut impl Rng) -> Self {
        let mut x = Self::zero();
        let by_source = group_by_source(pool);
        for _ in 0..n_terms {
            let mu = &pool[rng.gen_range(0..pool.len())];
            let partners = &by_source[&mu.source()];
            let nu = &partners[rng.gen_range(0..partners.len())];
            let c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            x.add_term(mu.clone(), nu.clone(), c);
        }
        x
    }
}

fn group_by_source(pool: &[Path]) -> HashMap<usize, Vec<Path>> {
    let mut map: HashMap<usize, Vec<Path>> = HashMap::new();
    for p in pool {
        map.entry(p.source()).or_default().push(p.clone());
    }
    map
}

fn monomial_product(
    module: &GraphBimodule,
    mu: &Path,
    nu: &Path,
    sigma: &Path,
    rho: &Path,
) -> Option<(Path, Path)> {
    if let Some(rest) = sigma.strip_prefix(module, nu) {
        let left = mu.concat(&rest).expect("s(μ) = s(ν) = r(σ')");
        return Some((left, rho.clone()));
    }
    if let Some(rest) = nu.strip_prefix(module, sigma) {
        let right = rho.concat(&rest).expect("s(ρ) = s(σ) = r(ν')");
        return Some((mu.clone(), right));
    }
    None
}

/// The covariance-ideal generator `a − Σ_g a(r(g)) S_gS_g*`, i.e. `a − Σ_g Θ_{δ_g,δ_g}a`.
pub fn covariance_substitute(module: &GraphBimodule, a: &AlgebraElement) -> SpanningElement {
    let mut x = SpanningElement::from_algebra(a);
    for (g, e) in module.edges().iter().enumerate() {
        let path = Path::from_edges(module, &[g]).expect("edge index");
        x.add_term(path.clone(), path, -a.get(e.range));
    }
    x
}

#[derive(Debug, Clone)]
struct FactorEntry {
    value: f64,
    report: ResidueReport,
}

/// `Φ_∞` on spanning elements whose equal-length terms have degree at most `max_degree`.
///
/// The residue factors `lim_k f_k` are computed once per `(r(λ), s(λ), |λ|)`.
#[derive(Debug, Clone)]
pub struct Expectation {
    module: GraphBimodule,
    config: ResidueConfig,
    max_degree: usize,
    factors: HashMap<(usize, usize, usize), FactorEntry>,
    method: Method,
}

impl Expectation {
    pub fn new(module: &GraphBimodule, config: ResidueConfig, max_degree: usize) -> Result<Self> {
        let solver = ResidueSolver::new(module, config)?;
        let mut factors = HashMap::new();
        let mut method = Method::IterateAndFit;
        for n in 0..=max_degree {
            for p in paths(module, n) {
                let key = (p.range(), p.source(), n);
                if factors.contains_key(&key) {
                    continue;
                }
                let report = solver.eta_tilde(&FockVector::basis(p.clone()))?;
                method = report.method;
                let value = report.eta_tilde.coefficient(&p).re;
                factors.insert(key, FactorEntry { value, report });
            }
        }
        Ok(Self {
            module: module.clone(),
            config,
            max_degree,
            factors,
            method,
        })
    }

    pub fn module(&self) -> &GraphBimodule {
        &self.module
    }

    pub fn config(&self) -> &ResidueConfig {
        &self.config
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn method(&self) -> Method {
        self.method
    }

    /// `lim_k f_k(λ)`, so that `η̃ = f_∞(λ)δ_λ` for `η = δ_λ`.
    pub fn factor(&self, path: &Path) -> Result<f64> {
        let n = path.len();
        if n > self.max_degree {
            return Err(Error::Domain(format!(
                "path length {n} exceeds the precomputed degree {}",
                self.max_degree
            )));
        }
        let entry = self
            .factors
            .get(&(path.range(), path.source(), n))
            .expect("every (r, s, n) up to max_degree is precomputed");
        if !entry.report.converged {
            return Err(Error::Uncertified {
                degree: n,
                reason: match entry.report.fit {
                    DecayFit::NotConverged { delta, r_squared } => {
                        format!("decay fit δ = {delta:.3}, R² = {r_squared:.3}")
                    }
                    _ => "residual curve did not settle".into(),
                },
                report: Box::new(entry.report.clone()),
            });
        }
        Ok(entry.value)
    }

    /// Every residue report computed, keyed by `(range, source, degree)`.
    pub fn reports(&self) -> impl Iterator<Item = ((usize, usize, usize), &ResidueReport)> {
        self.factors.iter().map(|(&k, e)| (k, &e.report))
    }

    /// `Φ_∞(S_μS_ν*) = δ_{μν} c_μ f_∞(μ) p_{r(μ)}`; zero for `|μ| ≠ |ν|`.
    pub fn phi_infty(&self, x: &SpanningElement) -> Result<AlgebraElement> {
        let mut out = self.module.algebra_zero();
        for ((mu, nu), &c) in x.terms() {
            if mu != nu {
                continue;
            }
            let f = self.factor(mu)?;
            out.values_mut()[mu.range()] += c * mu.weight() * f;
        }
        Ok(out)
    }
}

/// Eigen-split of a Gram matrix into its range and null space.
#[derive(Debug, Clone)]
pub struct Quotient {
    /// Orthonormal eigenvectors for eigenvalues above the cutoff, as columns.
    pub range: DMatrix<Complex64>,
    pub eigenvalues: Vec<f64>,
    pub null: DMatrix<Complex64>,
}

impl Quotient {
    pub fn new(gram: &DMatrix<Complex64>) -> Self {
        let n = gram.nrows();
        if n == 0 {
            return Self {
                range: DMatrix::zeros(0, 0),
                eigenvalues: Vec::new(),
                null: DMatrix::zeros(0, 0),
            };
        }
        let hermitian = (gram + gram.adjoint()) * Complex64::new(0.5, 0.0);
        let eig = hermitian.symmetric_eigen();
        let top = eig.eigenvalues.iter().fold(0.0, |a: f64, &b| a.max(b));
        let cut = NULL_CUTOFF * top.max(1.0);
        let (pos, nul): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| eig.eigenvalues[i] > cut);
        let pick = |idx: &[usize]| {
            DMatrix::from_fn(n, idx.len(), |r, c| eig.eigenvectors[(r, idx[c])])
        };
        Self {
            range: pick(&pos),
            eigenvalues: pos.iter().map(|&i| eig.eigenvalues[i]).collect(),
            null: pick(&nul),
        }
    }

    pub fn rank(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Matrix of `D: domain → self` in orthonormal coordinates of both quotients:
    /// `Λ^{1/2} U* D U_d Λ_d^{-1/2}`.
    pub fn compress(&self, d: &DMatrix<Complex64>, domain: &Quotient) -> DMatrix<Complex64> {
        let left = DMatrix::from_fn(self.rank(), self.rank(), |i, j| {
            if i == j {
                Complex64::new(self.eigenvalues[i].sqrt(), 0.0)
            } else {
                zero()
            }
        }) * self.range.adjoint();
        let right = &domain.range
            * DMatrix::from_fn(domain.rank(), domain.rank(), |i, j| {
                if i == j {
                    Complex64::new(1.0 / domain.eigenvalues[i].sqrt(), 0.0)
                } else {
                    zero()
                }
            });
        left * d * right
    }

    /// How far `D` is from mapping the domain's null space into this null space.
    pub fn leak(&self, d: &DMatrix<Complex64>, domain: &Quotient) -> f64 {
        if domain.null.ncols() == 0 || self.rank() == 0 {
            return 0.0;
        }
        let scale = DMatrix::from_fn(self.rank(), self.rank(), |i, j| {
            if i == j {
                Complex64::new(self.eigenvalues[i].sqrt(), 0.0)
            } else {
                zero()
            }
        });
        complex_op_norm(&(scale * self.range.adjoint() * d * &domain.null))
    }

    /// Operator norm of `D` on the quotient.
    pub fn norm(&self, d: &DMatrix<Complex64>, domain: &Quotient) -> f64 {
        complex_op_norm(&self.compress(d, domain))
    }
}

pub fn complex_op_norm(m: &DMatrix<Complex64>) -> f64 {
    singular_values(m).into_iter().fold(0.0, f64::max)
}

fn singular_values(m: &DMatrix<Complex64>) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    m.clone().svd(false, false).singular_values.iter().copied().collect()
}

fn numerical_rank(m: &DMatrix<Complex64>) -> usize {
    singular_values(m).into_iter().filter(|&s| s > RANK_CUTOFF).count()
}

fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().fold(0.0, |a: f64, z| a.max(z.norm()))
}

/// `[P, S_g]` on the truncated module against the finite-rank formula.
#[derive(Debug, Clone)]
pub struct CommutatorReport {
    pub edge: String,
    /// Quotient norm of `[P,S_g] − P S_g Q_{-1}`, with `Q_{-1}` the classes of grading `−1`.
    pub discrepancy: f64,
    pub norm: f64,
    pub rank: usize,
    pub predicted_rank: usize,
    /// Number of domain classes with `|ρ| − |σ| = −1`.
    pub graded_classes: usize,
}

/// Results of the structural checks on `(O_E)^Φ_A` at one depth.
#[derive(Debug, Clone)]
pub struct KasparovReport {
    pub depth: usize,
    pub basis_size: usize,
    pub quotient_rank: usize,
    /// Smallest eigenvalue of the scalar Gram `G(v)` per vertex.
    pub gram_min_eigenvalues: Vec<f64>,
    pub gram_hermitian_defect: f64,
    /// Quotient norm of `P² − P`.
    pub idempotent_defect: f64,
    /// `max_v ‖G(v)P − P*G(v)‖`.
    pub adjoint_defect: f64,
    /// Closed action against `Σ_ρ Θ_{W_ρ,W_ρ}`.
    pub closed_form_defect: f64,
    /// `max ‖P_kP_l − δ_{kl}P_k‖`.
    pub orthogonality_defect: f64,
    /// Gram of Fock classes against the Fock inner products.
    pub isometry_defect: f64,
    /// `max ‖P W_ξ − W_ξ‖` over Fock classes.
    pub fock_fixed_defect: f64,
    pub well_defined_defect: f64,
    pub commutators: Vec<CommutatorReport>,
}

/// The span of `{W_{μ,ν} : |μ|,|ν| ≤ depth, s(μ) = s(ν)}` with its `A`-valued Gram matrix.
#[derive(Debug, Clone)]
pub struct TruncatedModule<'a> {
    expectation: &'a Expectation,
    depth: usize,
    basis: Vec<(Path, Path)>,
    index: HashMap<(Path, Path), usize>,
    gram: Vec<DMatrix<Complex64>>,
    projection: DMatrix<Complex64>,
    full_quotient: OnceLock<Quotient>,
    domain_quotient: OnceLock<Quotient>,
}

impl<'a> TruncatedModule<'a> {
    pub fn new(expectation: &'a Expectation, depth: usize) -> Result<Self> {
        if depth > expectation.max_degree() {
            return Err(Error::Domain(format!(
                "depth {depth} exceeds the expectation's degree {}",
                expectation.max_degree()
            )));
        }
        let module = expectation.module();
        let all = paths_up_to(module, depth);
        let mut basis = Vec::new();
        for mu in &all {
            for nu in &all {
                if mu.source() == nu.source() {
                    basis.push((mu.clone(), nu.clone()));
                }
            }
        }
        basis.sort();
        let index: HashMap<(Path, Path), usize> =
            basis.iter().cloned().enumerate().map(|(i, k)| (k, i)).collect();

        let monomials: Vec<SpanningElement> = basis
            .iter()
            .map(|(mu, nu)| SpanningElement::monomial(mu.clone(), nu.clone()))
            .collect();
        let adjoints: Vec<SpanningElement> = monomials.iter().map(SpanningElement::adjoint).collect();
        let nv = module.num_vertices();
        let n = basis.len();
        let mut gram = vec![DMatrix::zeros(n, n); nv];
        for i in 0..n {
            for j in i..n {
                let value = expectation.phi_infty(&adjoints[i].mul(module, &monomials[j]))?;
                for (v, g) in gram.iter_mut().enumerate() {
                    g[(i, j)] = value.get(v);
                    g[(j, i)] = value.get(v).conj();
                }
            }
        }
        let mut out = Self {
            expectation,
            depth,
            basis,
            index,
            gram,
            projection: DMatrix::zeros(0, 0),
            full_quotient: OnceLock::new(),
            domain_quotient: OnceLock::new(),
        };
        out.projection = out.projection_graded(None)?;
        Ok(out)
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn basis(&self) -> &[(Path, Path)] {
        &self.basis
    }

    pub fn position(&self, mu: &Path, nu: &Path) -> Option<usize> {
        self.index.get(&(mu.clone(), nu.clone())).copied()
    }

    /// Scalar Gram matrices `G(v)`, one per vertex.
    pub fn gram(&self) -> &[DMatrix<Complex64>] {
        &self.gram
    }

    /// `Σ_v G(v)`; its null space is the common null space of the `G(v)`.
    pub fn gram_sum(&self) -> DMatrix<Complex64> {
        self.gram
            .iter()
            .fold(DMatrix::zeros(self.basis.len(), self.basis.len()), |a, g| a + g)
    }

    /// The `A`-valued inner product of two classes given as coefficient vectors.
    pub fn inner(&self, x: &[Complex64], y: &[Complex64]) -> AlgebraElement {
        let mut out = self.expectation.module().algebra_zero();
        for (v, g) in self.gram.iter().enumerate() {
            let mut s = zero();
            for i in 0..x.len() {
                for j in 0..y.len() {
                    s += x[i].conj() * g[(i, j)] * y[j];
                }
            }
            out.values_mut()[v] = s;
        }
        out
    }

    pub fn gram_min_eigenvalues(&self) -> Vec<f64> {
        self.gram
            .iter()
            .map(|g| {
                if g.is_empty() {
                    return 0.0;
                }
                let h = (g + g.adjoint()) * Complex64::new(0.5, 0.0);
                h.symmetric_eigen().eigenvalues.iter().fold(f64::INFINITY, |a, &b| a.min(b))
            })
            .collect()
    }

    pub fn quotient(&self) -> &Quotient {
        self.full_quotient.get_or_init(|| Quotient::new(&self.gram_sum()))
    }

    /// Quotient of the classes `W_{ρ,σ}` with `|ρ| < depth`, on which `S_g` stays in the basis.
    pub fn domain_quotient(&self) -> &Quotient {
        self.domain_quotient
            .get_or_init(|| self.sub_quotient(|rho, _| rho.len() < self.depth))
    }

    /// Quotient of the span of the classes selected by `keep`, embedded in the full basis.
    fn sub_quotient(&self, keep: impl Fn(&Path, &Path) -> bool) -> Quotient {
        let idx: Vec<usize> = (0..self.basis.len())
            .filter(|&i| keep(&self.basis[i].0, &self.basis[i].1))
            .collect();
        let full = self.gram_sum();
        let restricted = DMatrix::from_fn(idx.len(), idx.len(), |i, j| full[(idx[i], idx[j])]);
        let q = Quotient::new(&restricted);
        let embed = |m: &DMatrix<Complex64>| {
            let mut out = DMatrix::zeros(self.basis.len(), m.ncols());
            for (r, &i) in idx.iter().enumerate() {
                for c in 0..m.ncols() {
                    out[(i, c)] = m[(r, c)];
                }
            }
            out
        };
        Quotient {
            range: embed(&q.range),
            eigenvalues: q.eigenvalues,
            null: embed(&q.null),
        }
    }

    /// `P` from its closed action: `P W_{μ,ν} = 0` if `|μ| < |ν|`, otherwise
    /// `W_{μ̲}·Φ_∞(S_{μ̄}S_ν*)` with `μ = μ̲μ̄`, `|μ̄| = |ν|`.
    pub fn projection_p(&self) -> &DMatrix<Complex64> {
        &self.projection
    }

    /// `P_k`, the part of `P` on classes with `|μ| − |ν| = k`.
    pub fn projection_pk(&self, k: usize) -> Result<DMatrix<Complex64>> {
        self.projection_graded(Some(k))
    }

    fn projection_graded(&self, grade: Option<usize>) -> Result<DMatrix<Complex64>> {
        let module = self.expectation.module();
        let n = self.basis.len();
        let mut p = DMatrix::zeros(n, n);
        for (j, (mu, nu)) in self.basis.iter().enumerate() {
            if mu.len() < nu.len() || grade.is_some_and(|k| mu.len() - nu.len() != k) {
                continue;
            }
            let split = mu.len() - nu.len();
            let head = mu.prefix(module, split);
            let tail = mu.suffix(module, split);
            let value = self
                .expectation
                .phi_infty(&SpanningElement::monomial(tail, nu.clone()))?;
            let target = self
                .position(&head, &Path::vertex(head.source()))
                .expect("prefix class lies in the basis");
            // W_{μ̲}·a = a(s(μ̲)) W_{μ̲}
            p[(target, j)] += value.get(head.source());
        }
        Ok(p)
    }

    /// `Σ_{|ρ|≤depth} Θ_{W_ρ,W_ρ}` evaluated through the inner product, as an oracle for
    /// [`projection_p`](Self::projection_p).
    pub fn projection_direct(&self) -> Result<DMatrix<Complex64>> {
        let module = self.expectation.module();
        let n = self.basis.len();
        let mut p = DMatrix::zeros(n, n);
        for rho in paths_up_to(module, self.depth) {
            let s = rho.source();
            let w_rho = SpanningElement::creation(rho.clone()).adjoint();
            let target = self.position(&rho, &Path::vertex(s)).expect("Fock class");
            for (j, (mu, nu)) in self.basis.iter().enumerate() {
                let x = w_rho.mul(module, &SpanningElement::monomial(mu.clone(), nu.clone()));
                let value = self.expectation.phi_infty(&x)?;
                p[(target, j)] += value.get(s);
            }
        }
        Ok(p)
    }

    /// Left multiplication by `S_g` on classes `W_{ρ,σ}` with `|ρ| < depth`; other columns are 0.
    pub fn left_multiplication(&self, g: usize) -> DMatrix<Complex64> {
        let module = self.expectation.module();
        let edge = Path::from_edges(module, &[g]).expect("edge index");
        let n = self.basis.len();
        let mut m = DMatrix::zeros(n, n);
        for (j, (rho, sigma)) in self.basis.iter().enumerate() {
            if rho.len() >= self.depth {
                continue;
            }
            if let Some(grho) = edge.concat(rho) {
                let i = self.position(&grho, sigma).expect("within depth");
                m[(i, j)] = one();
            }
        }
        m
    }

    /// Compares `[P, S_g]` with `P S_g Q_{-1}` on classes with `|ρ| < depth`.
    ///
    /// Every image `P W_{gρ,σ}` with `|gρ| = |σ|` is a multiple of the vertex class
    /// `W_{r(g)}`, nonzero exactly when `σ = gρ` and `f_∞(σ) > 0`; the predicted rank is the
    /// number of distinct non-null image classes so produced.
    pub fn commutator_check(&self, g: usize) -> Result<CommutatorReport> {
        let module = self.expectation.module();
        let p = self.projection_p();
        let s = self.left_multiplication(g);
        let direct = p * &s - &s * p;

        let n = self.basis.len();
        let mut graded = DMatrix::zeros(n, n);
        let mut graded_classes = 0;
        let mut images = BTreeSet::new();
        let edge = Path::from_edges(module, &[g]).expect("edge index");
        for (j, (rho, sigma)) in self.basis.iter().enumerate() {
            if rho.len() < self.depth && rho.len() + 1 == sigma.len() {
                graded[(j, j)] = one();
                graded_classes += 1;
                if edge.concat(rho).as_ref() == Some(sigma)
                    && sigma.weight() * self.expectation.factor(sigma)? > RANK_CUTOFF
                {
                    images.insert(sigma.range());
                }
            }
        }
        let formula = p * &s * graded;

        let full = self.quotient();
        let domain = self.domain_quotient();
        let compressed = full.compress(&direct, domain);
        Ok(CommutatorReport {
            edge: module.edge(g).id.clone(),
            discrepancy: full.norm(&(&direct - &formula), domain),
            norm: complex_op_norm(&compressed),
            rank: numerical_rank(&compressed),
            predicted_rank: images.len(),
            graded_classes,
        })
    }

    /// `max |(W_ξ|W_η)_A − (ξ|η)_A|` over Fock classes `ξ, η` of length `≤ depth`.
    pub fn isometry_defect(&self) -> Result<f64> {
        let module = self.expectation.module();
        let fock = paths_up_to(module, self.depth);
        let mut worst: f64 = 0.0;
        for a in &fock {
            let i = self.position(a, &Path::vertex(a.source())).expect("Fock class");
            for b in &fock {
                let j = self.position(b, &Path::vertex(b.source())).expect("Fock class");
                let expected = FockVector::basis(a.clone()).right_inner(module, &FockVector::basis(b.clone()))?;
                for (v, g) in self.gram.iter().enumerate() {
                    worst = worst.max((g[(i, j)] - expected.get(v)).norm());
                }
            }
        }
        Ok(worst)
    }

    pub fn report(&self) -> Result<KasparovReport> {
        let p = self.projection_p();
        let full = self.quotient();
        let n = self.basis.len();

        let gram_hermitian_defect = self
            .gram
            .iter()
            .map(|g| max_abs(&(g - g.adjoint())))
            .fold(0.0, f64::max);
        let idempotent_defect = full.norm(&(p * p - p), full);
        let adjoint_defect = self
            .gram
            .iter()
            .map(|g| max_abs(&(g * p - p.adjoint() * g)))
            .fold(0.0, f64::max);
        let closed_form_defect = max_abs(&(p - self.projection_direct()?));

        let pks: Vec<DMatrix<Complex64>> =
            (0..=self.depth).map(|k| self.projection_pk(k)).collect::<Result<_>>()?;
        let mut orthogonality_defect: f64 = 0.0;
        for (k, pk) in pks.iter().enumerate() {
            for (l, pl) in pks.iter().enumerate() {
                let target = if k == l { pk.clone() } else { DMatrix::zeros(n, n) };
                orthogonality_defect = orthogonality_defect.max(max_abs(&(pk * pl - target)));
            }
        }

        let mut fock_fixed_defect: f64 = 0.0;
        for (j, (mu, nu)) in self.basis.iter().enumerate() {
            if nu.is_empty() {
                let mut e = DMatrix::zeros(n, 1);
                e[(j, 0)] = one();
                fock_fixed_defect = fock_fixed_defect.max(max_abs(&(p * &e - &e)));
                debug_assert_eq!(mu.source(), nu.source());
            }
        }

        let commutators = if self.depth >= 1 {
            (0..self.expectation.module().num_edges())
                .map(|g| self.commutator_check(g))
                .collect::<Result<_>>()?
        } else {
            Vec::new()
        };
        Ok(KasparovReport {
            depth: self.depth,
            basis_size: n,
            quotient_rank: full.rank(),
            gram_min_eigenvalues: self.gram_min_eigenvalues(),
            gram_hermitian_defect,
            idempotent_defect,
            adjoint_defect,
            closed_form_defect,
            orthogonality_defect,
            isometry_defect: self.isometry_defect()?,
            fock_fixed_defect,
            well_defined_defect: full.leak(p, full),
            commutators,
        })
    }
}
