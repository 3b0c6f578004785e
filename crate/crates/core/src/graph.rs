//! The bi-Hilbertian bimodule `E = C(G¹)` of a finite directed graph.
//!
//! Edge `g` goes from its source `s(g)` to its range `r(g)`. For `a, b ∈ A`
//! the actions are `(a·e·b)(g) = a(r(g)) e(g) b(s(g))`; the right inner product
//! sums over sources, the left one over ranges and carries the edge weight `c_g`.

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{AlgebraElement, VertexSet};
use crate::error::{Error, Result};

/// Default seed for randomized structural checks.
pub const DEFAULT_SEED: u64 = 42;

/// Edge with vertex indices into the owning [`VertexSet`].
#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub id: String,
    pub range: usize,
    pub source: usize,
    pub weight: f64,
}

/// On-disk description of a weighted graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    pub vertices: Vec<String>,
    pub edges: Vec<EdgeSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeSpec {
    pub id: String,
    pub r: String,
    pub s: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<f64>,
}

/// Finite directed graph with positive left weights, presenting the bimodule `E`.
#[derive(Debug, Clone)]
pub struct GraphBimodule {
    vertices: Arc<VertexSet>,
    edges: Vec<Edge>,
    edge_index: HashMap<String, usize>,
    by_range: Vec<Vec<usize>>,
    by_source: Vec<Vec<usize>>,
}

impl PartialEq for GraphBimodule {
    fn eq(&self, other: &Self) -> bool {
        self.vertices == other.vertices && self.edges == other.edges
    }
}

impl GraphBimodule {
    /// Builds a module from `(id, range, source, weight)` tuples.
    pub fn new<S: Into<String>>(
        vertices: Vec<S>,
        edges: Vec<(&str, &str, &str, f64)>,
    ) -> Result<Self> {
        let spec = GraphSpec {
            vertices: vertices.into_iter().map(Into::into).collect(),
            edges: edges
                .into_iter()
                .map(|(id, r, s, w)| EdgeSpec {
                    id: id.into(),
                    r: r.into(),
                    s: s.into(),
                    weight: Some(w),
                })
                .collect(),
        };
        Self::from_spec(&spec)
    }

    /// Validates a [`GraphSpec`]: distinct vertex labels and edge ids, known endpoints,
    /// positive finite weights.
    pub fn from_spec(spec: &GraphSpec) -> Result<Self> {
        let vertices = Arc::new(VertexSet::new(spec.vertices.iter().cloned())?);
        let nv = vertices.len();
        let mut edges = Vec::with_capacity(spec.edges.len());
        let mut edge_index = HashMap::new();
        for (i, e) in spec.edges.iter().enumerate() {
            if edge_index.insert(e.id.clone(), i).is_some() {
                return Err(Error::InvalidGraph(format!(
                    "duplicate edge id `{}` (edge #{i})",
                    e.id
                )));
            }
            let lookup = |label: &str, role: &str| {
                vertices.position(label).ok_or_else(|| {
                    Error::InvalidGraph(format!(
                        "edge `{}` has unknown {role} vertex `{label}`",
                        e.id
                    ))
                })
            };
            let range = lookup(&e.r, "range")?;
            let source = lookup(&e.s, "source")?;
            let weight = e.weight.unwrap_or(1.0);
            if !(weight.is_finite() && weight > 0.0) {
                return Err(Error::InvalidGraph(format!(
                    "edge `{}` has non-positive weight {weight}",
                    e.id
                )));
            }
            edges.push(Edge {
                id: e.id.clone(),
                range,
                source,
                weight,
            });
        }
        let mut by_range = vec![Vec::new(); nv];
        let mut by_source = vec![Vec::new(); nv];
        for (i, e) in edges.iter().enumerate() {
            by_range[e.range].push(i);
            by_source[e.source].push(i);
        }
        Ok(Self {
            vertices,
            edges,
            edge_index,
            by_range,
            by_source,
        })
    }

    pub fn to_spec(&self) -> GraphSpec {
        GraphSpec {
            vertices: self.vertices.labels().to_vec(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeSpec {
                    id: e.id.clone(),
                    r: self.vertices.label(e.range).to_string(),
                    s: self.vertices.label(e.source).to_string(),
                    weight: if e.weight == 1.0 { None } else { Some(e.weight) },
                })
                .collect(),
        }
    }

    /// Every vertex must receive and emit at least one edge.
    pub fn require_no_sources_or_sinks(&self) -> Result<()> {
        for v in 0..self.num_vertices() {
            if self.by_range[v].is_empty() {
                return Err(Error::InvalidGraph(format!(
                    "vertex `{}` receives no edge (source vertex)",
                    self.vertices.label(v)
                )));
            }
            if self.by_source[v].is_empty() {
                return Err(Error::InvalidGraph(format!(
                    "vertex `{}` emits no edge (sink vertex)",
                    self.vertices.label(v)
                )));
            }
        }
        Ok(())
    }

    pub fn vertices(&self) -> &Arc<VertexSet> {
        &self.vertices
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edge(&self, i: usize) -> &Edge {
        &self.edges[i]
    }

    pub fn edge_position(&self, id: &str) -> Option<usize> {
        self.edge_index.get(id).copied()
    }

    /// Edges `g` with `r(g) = v`.
    pub fn edges_into(&self, v: usize) -> &[usize] {
        &self.by_range[v]
    }

    /// Edges `g` with `s(g) = v`.
    pub fn edges_from(&self, v: usize) -> &[usize] {
        &self.by_source[v]
    }

    pub fn has_unit_weights(&self) -> bool {
        self.edges.iter().all(|e| e.weight == 1.0)
    }

    /// Weighted vertex adjacency `B(v, w) = Σ_{r(g)=v, s(g)=w} c_g`.
    pub fn adjacency(&self) -> DMatrix<f64> {
        let n = self.num_vertices();
        let mut b = DMatrix::zeros(n, n);
        for e in &self.edges {
            b[(e.range, e.source)] += e.weight;
        }
        b
    }

    /// Edge counts `|v G¹ w|`, ignoring weights.
    pub fn unweighted_adjacency(&self) -> DMatrix<f64> {
        let n = self.num_vertices();
        let mut b = DMatrix::zeros(n, n);
        for e in &self.edges {
            b[(e.range, e.source)] += 1.0;
        }
        b
    }

    pub fn algebra_zero(&self) -> AlgebraElement {
        AlgebraElement::zero(Arc::clone(&self.vertices))
    }

    pub fn algebra_one(&self) -> AlgebraElement {
        AlgebraElement::one(Arc::clone(&self.vertices))
    }

    pub fn projection(&self, v: usize) -> AlgebraElement {
        AlgebraElement::projection(Arc::clone(&self.vertices), v)
    }

    pub fn algebra_from_real(&self, values: &[f64]) -> Result<AlgebraElement> {
        AlgebraElement::from_real(Arc::clone(&self.vertices), values)
    }

    fn check_vector(&self, x: &ModuleVector) -> Result<()> {
        if x.coeffs.len() != self.num_edges() {
            return Err(Error::Mismatch(format!(
                "module vector has {} coefficients but the module has {} edges",
                x.coeffs.len(),
                self.num_edges()
            )));
        }
        Ok(())
    }

    fn check_algebra(&self, a: &AlgebraElement) -> Result<()> {
        if a.vertices().as_ref() != self.vertices.as_ref() {
            return Err(Error::Mismatch(
                "algebra element is over a different vertex set".into(),
            ));
        }
        Ok(())
    }

    /// `(e|f)_A(v) = Σ_{s(g)=v} conj(e_g) f_g`.
    pub fn right_inner(&self, e: &ModuleVector, f: &ModuleVector) -> Result<AlgebraElement> {
        self.check_vector(e)?;
        self.check_vector(f)?;
        let mut out = self.algebra_zero();
        for (g, edge) in self.edges.iter().enumerate() {
            out.values_mut()[edge.source] += e.coeffs[g].conj() * f.coeffs[g];
        }
        Ok(out)
    }

    /// `_A(e|f)(v) = Σ_{r(g)=v} c_g e_g conj(f_g)`.
    pub fn left_inner(&self, e: &ModuleVector, f: &ModuleVector) -> Result<AlgebraElement> {
        self.check_vector(e)?;
        self.check_vector(f)?;
        let mut out = self.algebra_zero();
        for (g, edge) in self.edges.iter().enumerate() {
            out.values_mut()[edge.range] += e.coeffs[g] * f.coeffs[g].conj() * edge.weight;
        }
        Ok(out)
    }

    /// `a·e`, i.e. `(a·e)(g) = a(r(g)) e(g)`.
    pub fn left_action(&self, a: &AlgebraElement, e: &ModuleVector) -> Result<ModuleVector> {
        self.check_algebra(a)?;
        self.check_vector(e)?;
        Ok(ModuleVector {
            coeffs: self
                .edges
                .iter()
                .zip(&e.coeffs)
                .map(|(edge, &x)| a.get(edge.range) * x)
                .collect(),
        })
    }

    /// `e·a`, i.e. `(e·a)(g) = e(g) a(s(g))`.
    pub fn right_action(&self, e: &ModuleVector, a: &AlgebraElement) -> Result<ModuleVector> {
        self.check_algebra(a)?;
        self.check_vector(e)?;
        Ok(ModuleVector {
            coeffs: self
                .edges
                .iter()
                .zip(&e.coeffs)
                .map(|(edge, &x)| x * a.get(edge.source))
                .collect(),
        })
    }

    /// The edge-indicator frame `{δ_g}`.
    pub fn frame(&self) -> Vec<ModuleVector> {
        (0..self.num_edges()).map(|g| ModuleVector::basis(self.num_edges(), g)).collect()
    }

    /// Matrix of `Θ_{e,f} x = e·(f|x)_A` in the edge basis.
    pub fn theta(&self, e: &ModuleVector, f: &ModuleVector) -> Result<DMatrix<Complex64>> {
        self.check_vector(e)?;
        self.check_vector(f)?;
        let m = self.num_edges();
        Ok(DMatrix::from_fn(m, m, |g, h| {
            if self.edges[g].source == self.edges[h].source {
                e.coeffs[g] * f.coeffs[h].conj()
            } else {
                Complex64::new(0.0, 0.0)
            }
        }))
    }

    /// `Σ_g Θ_{δ_g, δ_g}` over the frame.
    pub fn frame_sum(&self) -> DMatrix<Complex64> {
        let m = self.num_edges();
        let mut acc = DMatrix::zeros(m, m);
        for d in self.frame() {
            acc += self.theta(&d, &d).expect("frame vectors have module length");
        }
        acc
    }

    /// `Σ_g δ_g·(δ_g|x)_A`.
    pub fn reconstruct(&self, x: &ModuleVector) -> Result<ModuleVector> {
        self.check_vector(x)?;
        let mut out = ModuleVector::zero(self.num_edges());
        for d in self.frame() {
            let ip = self.right_inner(&d, x)?;
            let term = self.right_action(&d, &ip)?;
            out = out.add(&term);
        }
        Ok(out)
    }

    /// Watatani map `Φ(T) = Σ_g _A(Tδ_g|δ_g)`, i.e. `v ↦ Σ_{r(g)=v} c_g T_gg`.
    pub fn watatani_phi(&self, t: &DMatrix<Complex64>) -> Result<AlgebraElement> {
        let m = self.num_edges();
        if t.nrows() != m || t.ncols() != m {
            return Err(Error::Dimension {
                expected: m,
                got: t.nrows().max(t.ncols()),
            });
        }
        let mut out = self.algebra_zero();
        for (g, edge) in self.edges.iter().enumerate() {
            out.values_mut()[edge.range] += t[(g, g)] * edge.weight;
        }
        Ok(out)
    }

    /// The left index `e^β = Φ(Id_E)`.
    pub fn index(&self) -> AlgebraElement {
        let m = self.num_edges();
        self.watatani_phi(&DMatrix::identity(m, m))
            .expect("identity has module dimension")
    }

    /// `β = log Φ(Id_E)`; fails when some vertex receives no edge.
    pub fn beta(&self) -> Result<AlgebraElement> {
        self.index().log()
    }

    /// True iff `β(r(g)) = β(s(g))` for all edges, the graph form of `βf = fβ`.
    pub fn beta_is_central(&self, tol: f64) -> Result<bool> {
        let beta = self.beta()?;
        Ok(self
            .edges
            .iter()
            .all(|e| (beta.get(e.range) - beta.get(e.source)).norm() <= tol))
    }

    /// Imprimitivity check `_A(δ_g|δ_h)·δ_k = δ_g·(δ_h|δ_k)_A` on all basis triples.
    pub fn smeb_check(&self, tol: f64) -> SmebResult {
        let basis = self.frame();
        for g in 0..self.num_edges() {
            for h in 0..self.num_edges() {
                let left = self
                    .left_inner(&basis[g], &basis[h])
                    .expect("basis vectors have module length");
                for k in 0..self.num_edges() {
                    let lhs = self.left_action(&left, &basis[k]).expect("same module");
                    let right = self
                        .right_inner(&basis[h], &basis[k])
                        .expect("basis vectors have module length");
                    let rhs = self.right_action(&basis[g], &right).expect("same module");
                    let diff = lhs.sub(&rhs).max_abs();
                    if diff > tol {
                        return SmebResult {
                            holds: false,
                            witness: Some(SmebWitness {
                                g: self.edges[g].id.clone(),
                                h: self.edges[h].id.clone(),
                                k: self.edges[k].id.clone(),
                                lhs: lhs.coeffs,
                                rhs: rhs.coeffs,
                            }),
                        };
                    }
                }
            }
        }
        SmebResult {
            holds: true,
            witness: None,
        }
    }

    /// Randomized verification of the bi-Hilbertian bimodule axioms.
    pub fn check_bimodule_axioms(&self, trials: usize, tol: f64, seed: u64) -> AxiomReport {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut acc = AxiomAccumulator::default();
        let m = self.num_edges();
        let min_weight = self.edges.iter().map(|e| e.weight).fold(f64::INFINITY, f64::min);
        for _ in 0..trials.max(1) {
            let e = ModuleVector::random(m, &mut rng);
            let f = ModuleVector::random(m, &mut rng);
            let a = random_algebra(self, &mut rng);
            let fa = self.right_action(&f, &a).expect("same module");
            let ea = self.right_action(&e, &a).expect("same module");
            let ae = self.left_action(&a, &e).expect("same module");
            let a_star = a.adjoint();
            let rip = |x: &ModuleVector, y: &ModuleVector| self.right_inner(x, y).expect("same module");
            let lip = |x: &ModuleVector, y: &ModuleVector| self.left_inner(x, y).expect("same module");

            // (e|f·a)_A = (e|f)_A a
            acc.right_linear = acc.right_linear.max(
                rip(&e, &fa).distance(&rip(&e, &f).mul(&a).unwrap()).unwrap(),
            );
            // _A(a·e|f) = a _A(e|f)
            acc.left_linear = acc.left_linear.max(
                lip(&ae, &f).distance(&a.mul(&lip(&e, &f)).unwrap()).unwrap(),
            );
            // (a·e|f)_A = (e|a*·f)_A
            let a_star_f = self.left_action(&a_star, &f).unwrap();
            acc.left_adjointable = acc
                .left_adjointable
                .max(rip(&ae, &f).distance(&rip(&e, &a_star_f)).unwrap());
            // _A(e·a|f) = _A(e|f·a*)
            let f_a_star = self.right_action(&f, &a_star).unwrap();
            acc.right_adjointable = acc
                .right_adjointable
                .max(lip(&ea, &f).distance(&lip(&e, &f_a_star)).unwrap());
            // conjugate symmetry of both inner products
            acc.hermitian = acc
                .hermitian
                .max(rip(&e, &f).distance(&rip(&f, &e).adjoint()).unwrap())
                .max(lip(&e, &f).distance(&lip(&f, &e).adjoint()).unwrap());
            // positivity: values real and non-negative
            let ree = rip(&e, &e);
            let lee = lip(&e, &e);
            for z in ree.values().iter().chain(lee.values()) {
                acc.positive = acc.positive.max(z.im.abs()).max((-z.re).max(0.0));
            }
            // definiteness: Σ_v (e|e)_A(v) = ‖e‖², Σ_v _A(e|e)(v) ≥ min c·‖e‖²
            let norm2: f64 = e.coeffs.iter().map(|z| z.norm_sqr()).sum();
            let rsum: f64 = ree.values().iter().map(|z| z.re).sum();
            let lsum: f64 = lee.values().iter().map(|z| z.re).sum();
            acc.definite = acc
                .definite
                .max((rsum - norm2).abs())
                .max((min_weight * norm2 - lsum).max(0.0));
        }
        acc.finish(tol)
    }
}

fn random_algebra(module: &GraphBimodule, rng: &mut ChaCha8Rng) -> AlgebraElement {
    let values = (0..module.num_vertices())
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    AlgebraElement::new(Arc::clone(module.vertices()), values).expect("module vertex count")
}

/// Element of `E`, one coefficient per edge.
#[derive(Debug, Clone, PartialEq)]
pub struct ModuleVector {
    pub coeffs: Vec<Complex64>,
}

impl ModuleVector {
    pub fn new(coeffs: Vec<Complex64>) -> Self {
        Self { coeffs }
    }

    pub fn zero(m: usize) -> Self {
        Self {
            coeffs: vec![Complex64::new(0.0, 0.0); m],
        }
    }

    /// The indicator `δ_g`.
    pub fn basis(m: usize, g: usize) -> Self {
        let mut v = Self::zero(m);
        v.coeffs[g] = Complex64::new(1.0, 0.0);
        v
    }

    pub fn random(m: usize, rng: &mut impl Rng) -> Self {
        Self {
            coeffs: (0..m)
                .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|a| a * c).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmebWitness {
    pub g: String,
    pub h: String,
    pub k: String,
    pub lhs: Vec<Complex64>,
    pub rhs: Vec<Complex64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmebResult {
    pub holds: bool,
    pub witness: Option<SmebWitness>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxiomCheck {
    pub axiom: &'static str,
    pub max_residual: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxiomReport {
    pub tol: f64,
    pub checks: Vec<AxiomCheck>,
}

impl AxiomReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn max_residual(&self) -> f64 {
        self.checks.iter().map(|c| c.max_residual).fold(0.0, f64::max)
    }
}

#[derive(Default)]
struct AxiomAccumulator {
    right_linear: f64,
    left_linear: f64,
    left_adjointable: f64,
    right_adjointable: f64,
    hermitian: f64,
    positive: f64,
    definite: f64,
}

impl AxiomAccumulator {
    fn finish(self, tol: f64) -> AxiomReport {
        let items = [
            ("right inner product is right A-linear", self.right_linear),
            ("left inner product is left A-linear", self.left_linear),
            ("left action adjointable for right inner product", self.left_adjointable),
            ("right action adjointable for left inner product", self.right_adjointable),
            ("inner products are conjugate symmetric", self.hermitian),
            ("inner products are positive", self.positive),
            ("inner products are definite", self.definite),
        ];
        AxiomReport {
            tol,
            checks: items
                .into_iter()
                .map(|(axiom, r)| AxiomCheck {
                    axiom,
                    max_residual: r,
                    pass: r <= tol,
                })
                .collect(),
        }
    }
}
