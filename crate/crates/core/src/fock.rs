//! Tensor powers `E^{⊗k}` as path spaces and the Fock module `F_E = ⊕_k E^{⊗k}`.
//!
//! A path `g₁…g_k` is composable when `s(g_i) = r(g_{i+1})`; `δ_{g₁}⊗…⊗δ_{g_k}` is the
//! corresponding basis vector. Length-0 paths are vertices.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::hash::{Hash, Hasher};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::algebra::AlgebraElement;
use crate::error::{Error, Result};
use crate::graph::GraphBimodule;

/// A composable edge sequence with its cached left weight `c_ρ = Π c_{g_i}` and
/// dynamics weight `wD(ρ) = Π e^{β(r(g_i))}`.
#[derive(Debug, Clone)]
pub struct Path {
    edges: Vec<usize>,
    range: usize,
    source: usize,
    weight: f64,
    d_weight: f64,
}

impl Path {
    /// The length-0 path at vertex `v`.
    pub fn vertex(v: usize) -> Self {
        Self {
            edges: Vec::new(),
            range: v,
            source: v,
            weight: 1.0,
            d_weight: 1.0,
        }
    }

    pub fn from_edges(module: &GraphBimodule, edges: &[usize]) -> Result<Self> {
        let Some(&first) = edges.first() else {
            return Err(Error::InvalidPath("empty edge sequence".into()));
        };
        let index = module.index();
        let mut path = Self::vertex(module.edge(first).range);
        for &g in edges {
            if g >= module.num_edges() {
                return Err(Error::InvalidPath(format!("edge index {g} out of range")));
            }
            let e = module.edge(g);
            if e.range != path.source {
                return Err(Error::InvalidPath(format!(
                    "edge `{}` does not follow the preceding edge (s = {}, next r = {})",
                    e.id,
                    module.vertices().label(path.source),
                    module.vertices().label(e.range)
                )));
            }
            path.edges.push(g);
            path.source = e.source;
            path.weight *= e.weight;
            path.d_weight *= index.get(e.range).re;
        }
        Ok(path)
    }

    /// Parses a comma- or space-separated list of edge ids; a lone vertex label gives a
    /// length-0 path.
    pub fn parse(module: &GraphBimodule, text: &str) -> Result<Self> {
        let ids: Vec<&str> = text
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .collect();
        if ids.len() == 1 && module.edge_position(ids[0]).is_none() {
            if let Some(v) = module.vertices().position(ids[0]) {
                return Ok(Self::vertex(v));
            }
        }
        let edges = ids
            .iter()
            .map(|id| {
                module
                    .edge_position(id)
                    .ok_or_else(|| Error::InvalidPath(format!("unknown edge id `{id}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_edges(module, &edges)
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn edges(&self) -> &[usize] {
        &self.edges
    }

    pub fn range(&self) -> usize {
        self.range
    }

    pub fn source(&self) -> usize {
        self.source
    }

    /// `c_ρ`.
    pub fn weight(&self) -> f64 {
        self.weight
    }

    /// `wD(ρ)`, so that `e^{-D} δ_ρ = wD(ρ)^{-1} δ_ρ`.
    pub fn d_weight(&self) -> f64 {
        self.d_weight
    }

    /// `self · other`, defined when `s(self) = r(other)`.
    pub fn concat(&self, other: &Path) -> Option<Path> {
        if self.source != other.range {
            return None;
        }
        let mut edges = self.edges.clone();
        edges.extend_from_slice(&other.edges);
        Some(Path {
            edges,
            range: self.range,
            source: other.source,
            weight: self.weight * other.weight,
            d_weight: self.d_weight * other.d_weight,
        })
    }

    /// If `self = prefix · rest`, returns `rest`.
    pub fn strip_prefix(&self, module: &GraphBimodule, prefix: &Path) -> Option<Path> {
        if prefix.len() > self.len() || self.edges[..prefix.len()] != prefix.edges[..] {
            return None;
        }
        if prefix.is_empty() && prefix.range != self.range {
            return None;
        }
        Some(self.suffix(module, prefix.len()))
    }

    /// The first `k` edges.
    pub fn prefix(&self, module: &GraphBimodule, k: usize) -> Path {
        if k == 0 {
            return Path::vertex(self.range);
        }
        Path::from_edges(module, &self.edges[..k]).expect("prefix of a path is a path")
    }

    /// Everything after the first `k` edges.
    pub fn suffix(&self, module: &GraphBimodule, k: usize) -> Path {
        if k == self.len() {
            return Path::vertex(self.source);
        }
        Path::from_edges(module, &self.edges[k..]).expect("suffix of a path is a path")
    }

    pub fn label(&self, module: &GraphBimodule) -> String {
        if self.is_empty() {
            module.vertices().label(self.range).to_string()
        } else {
            self.edges
                .iter()
                .map(|&g| module.edge(g).id.as_str())
                .collect::<Vec<_>>()
                .join(",")
        }
    }

    fn key(&self) -> (usize, &[usize], usize) {
        (self.edges.len(), &self.edges, self.range)
    }
}

impl PartialEq for Path {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

impl Eq for Path {}

impl Hash for Path {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.key().hash(state);
    }
}

impl PartialOrd for Path {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Degree first, then lexicographic in edge order.
impl Ord for Path {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().cmp(&other.key())
    }
}

/// All paths of length `k`, lexicographic in edge order; `k = 0` gives the vertices.
pub fn paths(module: &GraphBimodule, k: usize) -> Vec<Path> {
    let mut current: Vec<Path> = (0..module.num_vertices()).map(Path::vertex).collect();
    if k == 0 {
        return current;
    }
    current = module
        .edges()
        .iter()
        .enumerate()
        .map(|(g, _)| Path::from_edges(module, &[g]).expect("single edge"))
        .collect();
    for _ in 1..k {
        let mut next = Vec::new();
        for p in &current {
            for &h in module.edges_into(p.source()) {
                let tail = Path::from_edges(module, &[h]).expect("single edge");
                next.push(p.concat(&tail).expect("composable by construction"));
            }
        }
        current = next;
    }
    current
}

/// All paths of length at most `depth`, ordered by degree then lexicographically.
pub fn paths_up_to(module: &GraphBimodule, depth: usize) -> Vec<Path> {
    (0..=depth).flat_map(|k| paths(module, k)).collect()
}

/// `(B^k 1)_v`, the weighted count of length-`k` paths with range `v`.
pub fn index_counts(module: &GraphBimodule, k: usize) -> Vec<f64> {
    let b = module.adjacency();
    let mut x = DVector::from_element(module.num_vertices(), 1.0);
    for _ in 0..k {
        x = &b * x;
    }
    x.iter().copied().collect()
}

/// The Jones–Watatani index `e^{β_k} = Σ_{|ρ|=k} _A(δ_ρ|δ_ρ)`.
pub fn beta_k(module: &GraphBimodule, k: usize) -> AlgebraElement {
    module
        .algebra_from_real(&index_counts(module, k))
        .expect("vertex count")
}

fn check_square(t: &DMatrix<Complex64>, n: usize) -> Result<()> {
    if t.nrows() != n || t.ncols() != n {
        return Err(Error::Dimension {
            expected: n,
            got: if t.nrows() != n { t.nrows() } else { t.ncols() },
        });
    }
    Ok(())
}

/// `Φ_k(T) = Σ_{|ρ|=k} _A(Tδ_ρ|δ_ρ)` for `T` given in the basis [`paths`]`(k)`.
pub fn phi_k(module: &GraphBimodule, k: usize, t: &DMatrix<Complex64>) -> Result<AlgebraElement> {
    let basis = paths(module, k);
    check_square(t, basis.len())?;
    let mut out = module.algebra_zero();
    for (i, p) in basis.iter().enumerate() {
        out.values_mut()[p.range()] += t[(i, i)] * p.weight();
    }
    Ok(out)
}

/// Matrix of `Θ_{ξ,η} ⊗ Id_{k-n}` in the basis [`paths`]`(k)` for homogeneous `ξ, η` of degree `n ≤ k`.
pub fn theta_tensor_identity(
    module: &GraphBimodule,
    xi: &FockVector,
    eta: &FockVector,
    k: usize,
) -> Result<DMatrix<Complex64>> {
    let n = common_degree(xi, eta)?;
    if n > k {
        return Err(Error::Domain(format!("degree {n} exceeds k = {k}")));
    }
    let basis = paths(module, k);
    let index: HashMap<&Path, usize> = basis.iter().enumerate().map(|(i, p)| (p, i)).collect();
    let mut t = DMatrix::zeros(basis.len(), basis.len());
    for (col, rho) in basis.iter().enumerate() {
        let head = rho.prefix(module, n);
        let tail = rho.suffix(module, n);
        let Some(&eta_c) = eta.terms.get(&head) else {
            continue;
        };
        // Θ_{ξ,η} δ_head = Σ_λ ξ_λ conj(η_head) [s(λ) = s(head)] δ_λ
        for (lambda, &xi_c) in &xi.terms {
            if lambda.source() != head.source() {
                continue;
            }
            let out = lambda.concat(&tail).expect("sources agree");
            t[(index[&out], col)] += xi_c * eta_c.conj();
        }
    }
    Ok(t)
}

/// `Φ_k(Θ_{ξ,η} ⊗ Id_{k-n}) = _A(ξ | η·e^{β_{k-n}})`.
pub fn rank_one_phi(
    module: &GraphBimodule,
    xi: &FockVector,
    eta: &FockVector,
    k: usize,
) -> Result<AlgebraElement> {
    let n = common_degree(xi, eta)?;
    if k < n {
        return Err(Error::Domain(format!("k = {k} is below the degree {n}")));
    }
    let scaled = eta.right_scale(&beta_k(module, k - n));
    xi.left_inner(module, &scaled)
}

/// `wD(ρ) = Π_j e^{β(r(ρ_j))}`.
pub fn d_weight(path: &Path) -> f64 {
    path.d_weight()
}

fn common_degree(xi: &FockVector, eta: &FockVector) -> Result<usize> {
    let (Some(a), Some(b)) = (xi.degree(), eta.degree()) else {
        return Err(Error::Domain("vectors must be homogeneous".into()));
    };
    if a != b && !xi.is_zero() && !eta.is_zero() {
        return Err(Error::Domain(format!("degree mismatch: {a} vs {b}")));
    }
    Ok(if xi.is_zero() { b } else { a })
}

/// Finite linear combination of paths, possibly of mixed degree.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FockVector {
    pub terms: BTreeMap<Path, Complex64>,
}

impl FockVector {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn basis(path: Path) -> Self {
        let mut v = Self::new();
        v.terms.insert(path, Complex64::new(1.0, 0.0));
        v
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (Path, Complex64)>) -> Self {
        let mut v = Self::new();
        for (p, c) in terms {
            v.add_term(p, c);
        }
        v
    }

    pub fn add_term(&mut self, path: Path, c: Complex64) {
        *self.terms.entry(path).or_insert(Complex64::new(0.0, 0.0)) += c;
    }

    pub fn is_zero(&self) -> bool {
        self.terms.values().all(|c| c.norm() == 0.0)
    }

    /// Common degree of all terms, `None` for mixed degrees. The empty vector reports 0.
    pub fn degree(&self) -> Option<usize> {
        let mut it = self.terms.keys().map(Path::len);
        let first = it.next().unwrap_or(0);
        it.all(|d| d == first).then_some(first)
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (p, &c) in &other.terms {
            out.add_term(p.clone(), c);
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self {
            terms: self.terms.iter().map(|(p, &x)| (p.clone(), x * c)).collect(),
        }
    }

    /// `η·a`: each term is multiplied by `a(s(λ))`.
    pub fn right_scale(&self, a: &AlgebraElement) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .map(|(p, &x)| (p.clone(), x * a.get(p.source())))
                .collect(),
        }
    }

    /// `a·η`: each term is multiplied by `a(r(λ))`.
    pub fn left_scale(&self, a: &AlgebraElement) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .map(|(p, &x)| (p.clone(), a.get(p.range()) * x))
                .collect(),
        }
    }

    /// `(ξ|η)_A = Σ_λ conj(ξ_λ) η_λ p_{s(λ)}`; distinct paths are orthogonal.
    pub fn right_inner(&self, module: &GraphBimodule, other: &Self) -> Result<AlgebraElement> {
        let mut out = module.algebra_zero();
        for (p, &x) in &self.terms {
            if let Some(&y) = other.terms.get(p) {
                check_vertex(module, p)?;
                out.values_mut()[p.source()] += x.conj() * y;
            }
        }
        Ok(out)
    }

    /// `_A(ξ|η) = Σ_λ c_λ ξ_λ conj(η_λ) p_{r(λ)}`.
    pub fn left_inner(&self, module: &GraphBimodule, other: &Self) -> Result<AlgebraElement> {
        let mut out = module.algebra_zero();
        for (p, &x) in &self.terms {
            if let Some(&y) = other.terms.get(p) {
                check_vertex(module, p)?;
                out.values_mut()[p.range()] += x * y.conj() * p.weight();
            }
        }
        Ok(out)
    }

    /// Module norm `‖(ξ|ξ)_A‖^{1/2}`.
    pub fn norm(&self, module: &GraphBimodule) -> f64 {
        self.right_inner(module, self)
            .map(|ip| ip.norm().sqrt())
            .unwrap_or(f64::NAN)
    }

    pub fn coefficient(&self, path: &Path) -> Complex64 {
        self.terms.get(path).copied().unwrap_or(Complex64::new(0.0, 0.0))
    }
}

fn check_vertex(module: &GraphBimodule, p: &Path) -> Result<()> {
    if p.range() >= module.num_vertices() || p.source() >= module.num_vertices() {
        return Err(Error::Mismatch("path does not belong to this module".into()));
    }
    Ok(())
}
