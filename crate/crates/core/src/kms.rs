//! `E`-invariant traces on `A`, the quasi-free dynamics generated by the left index, and the
//! KMS₁ state `φ_D(S_μS_ν*) = δ_{μν} w_{s(μ)} / wD(μ)`.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cuntz_pimsner::SpanningElement;
use crate::error::{Error, Result};
use crate::fock::{paths_up_to, FockVector};
use crate::graph::GraphBimodule;

/// A state on `A = C(V)`: nonnegative vertex weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceState {
    pub weights: Vec<f64>,
}

impl TraceState {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|&w| !(w >= 0.0)) {
            return Err(Error::Domain("state weights must be nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Domain(format!("state weights sum to {total}, not 1")));
        }
        Ok(Self { weights })
    }

    pub fn uniform(n: usize) -> Self {
        Self {
            weights: vec![1.0 / n as f64; n],
        }
    }

    /// `φ((e|f)_A) = φ(_A(f|e))` on the edge basis: `w_{s(g)} = c_g w_{r(g)}`.
    pub fn is_invariant(&self, module: &GraphBimodule, tol: f64) -> bool {
        module
            .edges()
            .iter()
            .all(|e| (self.weights[e.source] - e.weight * self.weights[e.range]).abs() <= tol)
    }
}

/// Solution set of the `E`-invariance equations intersected with the state simplex.
#[derive(Debug, Clone)]
pub struct InvariantTraces {
    /// Dimension of the solution polytope.
    pub dimension: usize,
    /// Vertex sets of the edge-connected components carrying a solution.
    pub components: Vec<Vec<usize>>,
    /// Exact null-space basis, one positive vector per supporting component.
    pub exact_basis: Vec<Vec<BigRational>>,
    pub basis: Vec<Vec<f64>>,
    /// Each component solution scaled to total mass `|C|`, then normalized.
    pub canonical: TraceState,
    pub exact_canonical: Vec<BigRational>,
}

fn rational(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite edge weight")
}

fn to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Reduced row echelon form in place; returns the pivot columns.
fn rref(rows: &mut [Vec<BigRational>], ncols: usize) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        let Some(p) = (r..rows.len()).find(|&i| !rows[i][c].is_zero()) else {
            continue;
        };
        rows.swap(r, p);
        let lead = rows[r][c].clone();
        for x in rows[r].iter_mut() {
            *x = &*x / &lead;
        }
        for i in 0..rows.len() {
            if i != r && !rows[i][c].is_zero() {
                let f = rows[i][c].clone();
                for j in 0..ncols {
                    let delta = &f * &rows[r][j];
                    rows[i][j] -= delta;
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == rows.len() {
            break;
        }
    }
    pivots
}

/// Exact null space of the matrix with the given rows.
pub fn null_space(mut rows: Vec<Vec<BigRational>>, ncols: usize) -> Vec<Vec<BigRational>> {
    let pivots = rref(&mut rows, ncols);
    let free: Vec<usize> = (0..ncols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![BigRational::zero(); ncols];
            v[f] = BigRational::one();
            for (i, &p) in pivots.iter().enumerate() {
                v[p] = -rows[i][f].clone();
            }
            v
        })
        .collect()
}

fn invariance_rows(module: &GraphBimodule, vertices: &[usize]) -> Vec<Vec<BigRational>> {
    let local = |v: usize| vertices.iter().position(|&x| x == v);
    module
        .edges()
        .iter()
        .filter_map(|e| {
            let (s, r) = (local(e.source)?, local(e.range)?);
            let mut row = vec![BigRational::zero(); vertices.len()];
            row[s] += BigRational::one();
            row[r] -= rational(e.weight);
            Some(row)
        })
        .collect()
}

/// Connected components of the underlying undirected graph.
pub fn edge_components(module: &GraphBimodule) -> Vec<Vec<usize>> {
    let n = module.num_vertices();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], x: usize) -> usize {
        let mut root = x;
        while parent[root] != root {
            root = parent[root];
        }
        let mut y = x;
        while parent[y] != root {
            let next = parent[y];
            parent[y] = root;
            y = next;
        }
        root
    }
    for e in module.edges() {
        let (a, b) = (find(&mut parent, e.source), find(&mut parent, e.range));
        if a != b {
            parent[a.max(b)] = a.min(b);
        }
    }
    let mut comps: Vec<Vec<usize>> = Vec::new();
    let mut root_index = vec![usize::MAX; n];
    for v in 0..n {
        let r = find(&mut parent, v);
        if root_index[r] == usize::MAX {
            root_index[r] = comps.len();
            comps.push(Vec::new());
        }
        comps[root_index[r]].push(v);
    }
    comps
}

/// Solves `{w ≥ 0, Σw = 1, w_{s(g)} = c_g w_{r(g)}}` exactly. The equations decouple
/// over edge-connected components, each of which admits at most a ray of positive solutions.
pub fn invariant_traces(module: &GraphBimodule) -> Result<InvariantTraces> {
    let n = module.num_vertices();
    let mut components = Vec::new();
    let mut exact_basis = Vec::new();
    for comp in edge_components(module) {
        let ns = null_space(invariance_rows(module, &comp), comp.len());
        debug_assert!(ns.len() <= 1, "a connected component has at most a ray of solutions");
        if let Some(local) = ns.into_iter().next() {
            let sign = if local.iter().any(|x| x.is_negative()) { -BigRational::one() } else { BigRational::one() };
            let mut v = vec![BigRational::zero(); n];
            for (i, &vertex) in comp.iter().enumerate() {
                v[vertex] = &local[i] * &sign;
            }
            if v.iter().any(|x| x.is_negative()) {
                continue;
            }
            components.push(comp);
            exact_basis.push(v);
        }
    }
    if exact_basis.is_empty() {
        return Err(Error::NoInvariantState(
            "the weighted invariance equations force every vertex weight to zero".into(),
        ));
    }
    let mut exact_canonical = vec![BigRational::zero(); n];
    for (comp, v) in components.iter().zip(&exact_basis) {
        let mass: BigRational = v.iter().cloned().sum();
        let scale = BigRational::from_integer(BigInt::from(comp.len())) / mass;
        for (acc, x) in exact_canonical.iter_mut().zip(v) {
            *acc += x * &scale;
        }
    }
    let total: BigRational = exact_canonical.iter().cloned().sum();
    for x in exact_canonical.iter_mut() {
        *x = &*x / &total;
    }
    Ok(InvariantTraces {
        dimension: exact_basis.len() - 1,
        basis: exact_basis.iter().map(|v| v.iter().map(to_f64).collect()).collect(),
        components,
        exact_basis,
        canonical: TraceState {
            weights: exact_canonical.iter().map(to_f64).collect(),
        },
        exact_canonical,
    })
}

/// Parameter of the dynamics: a real time or the analytic continuation to `t = −i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Dynamics {
    Time(f64),
    AnalyticMinusI,
}

/// `γ_t(S_μS_ν*) = exp(it(log wD(μ) − log wD(ν))) S_μS_ν*`; at `t = −i` the factor is
/// `wD(μ)/wD(ν)`.
pub fn gamma(x: &SpanningElement, p: Dynamics) -> SpanningElement {
    x.map_terms(|mu, nu, c| match p {
        Dynamics::Time(t) => {
            let phase = t * (mu.d_weight().ln() - nu.d_weight().ln());
            c * Complex64::from_polar(1.0, phase)
        }
        Dynamics::AnalyticMinusI => c * (mu.d_weight() / nu.d_weight()),
    })
}

/// `Tr_φ(Θ_{ξ,η}) = φ((η|ξ)_A)`.
pub fn tr_phi(module: &GraphBimodule, xi: &FockVector, eta: &FockVector, phi: &TraceState) -> Result<Complex64> {
    let ip = eta.right_inner(module, xi)?;
    Ok(ip
        .values()
        .iter()
        .zip(&phi.weights)
        .map(|(z, &w)| z * w)
        .sum())
}

/// `φ_D(S_μS_ν*) = δ_{μν} w_{s(μ)} / wD(μ)`.
pub fn phi_d(x: &SpanningElement, phi: &TraceState) -> Complex64 {
    x.terms()
        .iter()
        .filter(|((mu, nu), _)| mu == nu)
        .map(|((mu, _), &c)| c * (phi.weights[mu.source()] / mu.d_weight()))
        .sum()
}

/// `|φ_D(xy) − φ_D(γ_{−i}(y)x)|`.
pub fn kms_check(module: &GraphBimodule, x: &SpanningElement, y: &SpanningElement, phi: &TraceState) -> f64 {
    let lhs = phi_d(&x.mul(module, y), phi);
    let rhs = phi_d(&gamma(y, Dynamics::AnalyticMinusI).mul(module, x), phi);
    (lhs - rhs).norm()
}

/// Largest KMS residual over `trials` random pairs built from paths of length `≤ max_len`.
pub fn max_kms_residual(
    module: &GraphBimodule,
    phi: &TraceState,
    trials: usize,
    max_len: usize,
    seed: u64,
) -> f64 {
    let pool = paths_up_to(module, max_len);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..trials)
        .map(|_| {
            let x = SpanningElement::random(&pool, 3, &mut rng);
            let y = SpanningElement::random(&pool, 3, &mut rng);
            kms_check(module, &x, &y, phi)
        })
        .fold(0.0, f64::max)
}
