//! The commutative coefficient algebra `A = C(V)` of functions on a finite vertex set.
//!
//! Every element is a complex vector indexed by the vertices in their construction order.
//! Products, sums and adjoints are pointwise, so every element is central.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default comparison tolerance used across the crate.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Ordered list of distinct vertex labels. The order fixes coordinate indexing everywhere.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct VertexSet {
    labels: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl VertexSet {
    pub fn new<I, S>(labels: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(Error::InvalidGraph("vertex set is empty".into()));
        }
        let mut index = HashMap::with_capacity(labels.len());
        for (i, l) in labels.iter().enumerate() {
            if index.insert(l.clone(), i).is_some() {
                return Err(Error::InvalidGraph(format!("duplicate vertex `{l}`")));
            }
        }
        Ok(Self { labels, index })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn position(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }
}

impl TryFrom<Vec<String>> for VertexSet {
    type Error = Error;

    fn try_from(v: Vec<String>) -> Result<Self> {
        VertexSet::new(v)
    }
}

impl From<VertexSet> for Vec<String> {
    fn from(v: VertexSet) -> Self {
        v.labels
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Mul,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExpLog {
    Exp,
    Log,
}

/// An element of `C(V)`.
#[derive(Clone, PartialEq)]
pub struct AlgebraElement {
    vertices: Arc<VertexSet>,
    values: Vec<Complex64>,
}

impl fmt::Debug for AlgebraElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map()
            .entries(self.vertices.labels().iter().zip(self.values.iter()))
            .finish()
    }
}

impl AlgebraElement {
    pub fn new(vertices: Arc<VertexSet>, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != vertices.len() {
            return Err(Error::Dimension {
                expected: vertices.len(),
                got: values.len(),
            });
        }
        Ok(Self { vertices, values })
    }

    pub fn from_real(vertices: Arc<VertexSet>, values: &[f64]) -> Result<Self> {
        Self::new(vertices, values.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn zero(vertices: Arc<VertexSet>) -> Self {
        let n = vertices.len();
        Self {
            vertices,
            values: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    pub fn one(vertices: Arc<VertexSet>) -> Self {
        Self::constant(vertices, Complex64::new(1.0, 0.0))
    }

    pub fn constant(vertices: Arc<VertexSet>, c: Complex64) -> Self {
        let n = vertices.len();
        Self {
            vertices,
            values: vec![c; n],
        }
    }

    /// The minimal projection `p_v`.
    pub fn projection(vertices: Arc<VertexSet>, v: usize) -> Self {
        let mut e = Self::zero(vertices);
        e.values[v] = Complex64::new(1.0, 0.0);
        e
    }

    pub fn vertices(&self) -> &Arc<VertexSet> {
        &self.vertices
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn get(&self, v: usize) -> Complex64 {
        self.values[v]
    }

    pub fn re(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.re).collect()
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if Arc::ptr_eq(&self.vertices, &other.vertices) || self.vertices == other.vertices {
            Ok(())
        } else {
            Err(Error::Mismatch(
                "algebra elements live over different vertex sets".into(),
            ))
        }
    }

    pub fn binary(&self, other: &Self, op: BinaryOp) -> Result<Self> {
        self.check_same(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| match op {
                BinaryOp::Add => a + b,
                BinaryOp::Mul => a * b,
            })
            .collect();
        Ok(Self {
            vertices: Arc::clone(&self.vertices),
            values,
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.binary(other, BinaryOp::Add)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.binary(other, BinaryOp::Mul)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, c: Complex64) -> Self {
        self.map(|z| z * c)
    }

    pub fn adjoint(&self) -> Self {
        self.map(|z| z.conj())
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self {
            vertices: Arc::clone(&self.vertices),
            values: self.values.iter().map(|&z| f(z)).collect(),
        }
    }

    /// Pointwise exponential or logarithm. The logarithm requires real, strictly positive values.
    pub fn exp_log(&self, dir: ExpLog) -> Result<Self> {
        match dir {
            ExpLog::Exp => Ok(self.map(|z| z.exp())),
            ExpLog::Log => {
                for (v, z) in self.values.iter().enumerate() {
                    if z.im.abs() > DEFAULT_TOL || z.re <= 0.0 {
                        return Err(Error::LogDomain {
                            vertex: self.vertices.label(v).to_string(),
                            value: format!("{z}"),
                        });
                    }
                }
                Ok(self.map(|z| Complex64::new(z.re.ln(), 0.0)))
            }
        }
    }

    pub fn exp(&self) -> Self {
        self.map(|z| z.exp())
    }

    pub fn log(&self) -> Result<Self> {
        self.exp_log(ExpLog::Log)
    }

    /// Pointwise inverse; fails on a zero coordinate.
    pub fn inverse(&self) -> Result<Self> {
        for (v, z) in self.values.iter().enumerate() {
            if z.norm() == 0.0 {
                return Err(Error::Domain(format!(
                    "element is not invertible at vertex `{}`",
                    self.vertices.label(v)
                )));
            }
        }
        Ok(self.map(|z| z.inv()))
    }

    /// True iff every coordinate is real within `tol` and has real part above `tol`.
    pub fn is_positive_invertible(&self, tol: f64) -> bool {
        self.values.iter().all(|z| z.im.abs() <= tol && z.re > tol)
    }

    /// The C*-norm `max_v |a(v)|`.
    pub fn norm(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Max coordinate distance to `other`.
    pub fn distance(&self, other: &Self) -> Result<f64> {
        self.check_same(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.distance(other).map(|d| d <= tol).unwrap_or(false)
    }

    /// Smallest real part over the coordinates.
    pub fn min_re(&self) -> f64 {
        self.values.iter().map(|z| z.re).fold(f64::INFINITY, f64::min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vs(n: usize) -> Arc<VertexSet> {
        Arc::new(VertexSet::new((0..n).map(|i| format!("v{i}"))).unwrap())
    }

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn pointwise_product_and_sum() {
        let v = vs(2);
        let a = AlgebraElement::from_real(v.clone(), &[1.0, 2.0]).unwrap();
        let b = AlgebraElement::from_real(v.clone(), &[3.0, 4.0]).unwrap();
        assert_eq!(a.mul(&b).unwrap().values(), &[c(3.0), c(8.0)]);
        let p0 = AlgebraElement::projection(v.clone(), 0);
        let p1 = AlgebraElement::projection(v.clone(), 1);
        assert_eq!(p0.add(&p1).unwrap(), AlgebraElement::one(v.clone()));
        assert_eq!(p0.mul(&p1).unwrap(), AlgebraElement::zero(v));
    }

    #[test]
    fn mismatched_vertex_sets_rejected() {
        let a = AlgebraElement::one(vs(2));
        let b = AlgebraElement::one(Arc::new(VertexSet::new(["x", "y"]).unwrap()));
        assert!(matches!(a.mul(&b), Err(Error::Mismatch(_))));
        // same labels in a separate allocation are the same vertex set
        assert!(a.mul(&AlgebraElement::one(vs(2))).is_ok());
    }

    #[test]
    fn exp_and_log() {
        let v = vs(2);
        let two = AlgebraElement::from_real(v.clone(), &[2.0, 2.0]).unwrap();
        let l = two.log().unwrap();
        assert!((l.get(0).re - 2f64.ln()).abs() < 1e-15);
        assert_eq!(AlgebraElement::zero(v.clone()).exp(), AlgebraElement::one(v.clone()));
        let suq2 = AlgebraElement::from_real(v.clone(), &[1.0, 2.0]).unwrap();
        assert_eq!(suq2.log().unwrap().re(), vec![0.0, 2f64.ln()]);
    }

    #[test]
    fn log_names_offending_vertex() {
        let v = vs(3);
        let a = AlgebraElement::from_real(v, &[1.0, -1.0, 2.0]).unwrap();
        match a.log() {
            Err(Error::LogDomain { vertex, .. }) => assert_eq!(vertex, "v1"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn positive_invertible() {
        let v = vs(2);
        let tol = DEFAULT_TOL;
        assert!(AlgebraElement::from_real(v.clone(), &[2.0, 1.0]).unwrap().is_positive_invertible(tol));
        assert!(!AlgebraElement::from_real(v.clone(), &[1.0, 0.0]).unwrap().is_positive_invertible(tol));
        assert!(AlgebraElement::from_real(v.clone(), &[1.0, 4.0]).unwrap().is_positive_invertible(tol));
        let z = AlgebraElement::new(v, vec![c(1.0), Complex64::new(1.0, 0.1)]).unwrap();
        assert!(!z.is_positive_invertible(tol));
    }

    #[test]
    fn vertex_set_rejects_duplicates_and_empty() {
        assert!(VertexSet::new(["a", "a"]).is_err());
        assert!(VertexSet::new(Vec::<String>::new()).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn elem(n: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
            proptest::collection::vec((-10.0..10.0f64, -10.0..10.0f64), n)
        }

        fn mk(v: &Arc<VertexSet>, xs: &[(f64, f64)]) -> AlgebraElement {
            AlgebraElement::new(v.clone(), xs.iter().map(|&(a, b)| Complex64::new(a, b)).collect()).unwrap()
        }

        proptest! {
            #[test]
            fn commutative_and_adjoint_reverses(a in elem(4), b in elem(4)) {
                let v = vs(4);
                let (a, b) = (mk(&v, &a), mk(&v, &b));
                prop_assert_eq!(a.mul(&b).unwrap(), b.mul(&a).unwrap());
                prop_assert_eq!(a.mul(&b).unwrap().adjoint(), b.adjoint().mul(&a.adjoint()).unwrap());
            }

            #[test]
            fn exp_inverts_log(xs in proptest::collection::vec(1e-3..1e2f64, 4)) {
                let v = vs(4);
                let a = AlgebraElement::from_real(v, &xs).unwrap();
                let back = a.log().unwrap().exp();
                for (x, y) in a.values().iter().zip(back.values()) {
                    prop_assert!((x - y).norm() <= 1e-12);
                }
            }
        }
    }
}
