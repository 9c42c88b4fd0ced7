//! Continuous piecewise-linear functions on truncated trees.
//!
//! Each edge carries `m >= 2` samples on a uniform grid over its arclength
//! interval; the represented function is the piecewise-linear interpolant.
//! Integrals of products of interpolants are evaluated exactly.
//!
//! Beyond the truncation depth a function is continued in one of two ways:
//! by constants (the default), or by a finite harmonic tail `b` meaning that
//! past generation `depth` the derivative equals `sum_z b_z phi_z'` for the
//! harmonic basis functions `phi_z` of [`crate::harmonic`].
//! Norms only integrate over the truncated tree.

use crate::error::{Error, Result};
use crate::harmonic::SymmetryIndex;
use crate::metric_tree::{parent, EdgeId, TreeKind, TreeTopology};
use crate::scalar::{count, linear_product, lit, C, Real};
use num_complex::Complex;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::sync::Arc;

/// Harmonic continuation coefficients beyond the truncation depth.
pub type HarmonicTail<T> = BTreeMap<SymmetryIndex, C<T>>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct NormReport<T: Real> {
    pub l2: T,
    /// `||f'||` in the weighted `L^2`.
    pub h1_semi: T,
    pub h1: T,
    /// `||f|| / ||f'||`, only defined when the root value vanishes.
    pub poincare_ratio: Option<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeFunction<T: Real> {
    tree: Arc<TreeTopology<T>>,
    m: usize,
    values: Vec<C<T>>,
    tail: HarmonicTail<T>,
}

pub(crate) fn continuity_tolerance<T: Real>(scale: T) -> T {
    lit::<T>(1e-12).max(T::epsilon() * lit(1e4)) * scale.max(T::one())
}

/// Cubic smoothstep: 0 on `[0, 1/2]`, 1 on `[3/4, L)`, C^1 in between.
pub fn cutoff_profile<T: Real>(t: T) -> T {
    let a = lit::<T>(0.5);
    let b = lit::<T>(0.75);
    if t <= a {
        T::zero()
    } else if t >= b {
        T::one()
    } else {
        let u = (t - a) / (b - a);
        u * u * (lit::<T>(3.0) - lit::<T>(2.0) * u)
    }
}

/// `max(||phi||_inf^2, ||phi'||_inf^2)` for [`cutoff_profile`].
pub fn cutoff_bound<T: Real>() -> T {
    // phi' peaks at u = 1/2 with value 1.5 / (1/4).
    lit(36.0)
}

impl<T: Real> TreeFunction<T> {
    /// Builds from a flat breadth-first table of `edge_count * m` samples,
    /// rejecting vertex mismatches above `1e-12` (relative to magnitude).
    pub fn new(tree: Arc<TreeTopology<T>>, m: usize, values: Vec<C<T>>) -> Result<Self> {
        if m < 2 {
            return Err(Error::ParameterDomain(format!("samples_per_edge = {m} must be >= 2")));
        }
        if values.len() != tree.edge_count() * m {
            return Err(Error::ParameterDomain(format!(
                "expected {} samples, got {}",
                tree.edge_count() * m,
                values.len()
            )));
        }
        let f = Self { tree, m, values, tail: HarmonicTail::new() };
        f.check_continuity()?;
        Ok(f)
    }

    pub(crate) fn from_raw(tree: Arc<TreeTopology<T>>, m: usize, values: Vec<C<T>>) -> Self {
        debug_assert_eq!(values.len(), tree.edge_count() * m);
        Self { tree, m, values, tail: HarmonicTail::new() }
    }

    /// Samples `f(edge, t)` at the grid points of every edge.
    pub fn from_fn<F>(tree: Arc<TreeTopology<T>>, m: usize, f: F) -> Result<Self>
    where
        F: Fn(EdgeId, T) -> C<T>,
    {
        if m < 2 {
            return Err(Error::ParameterDomain(format!("samples_per_edge = {m} must be >= 2")));
        }
        let mut values = Vec::with_capacity(tree.edge_count() * m);
        for e in tree.edges() {
            let a = tree.start(e);
            let h = tree.length(e) / count(m - 1);
            for i in 0..m {
                values.push(f(e, a + h * count(i)));
            }
        }
        Self::new(tree, m, values)
    }

    pub fn zeros(tree: Arc<TreeTopology<T>>, m: usize) -> Self {
        let n = tree.edge_count() * m;
        Self::from_raw(tree, m, vec![C::zero(); n])
    }

    pub fn constant(tree: Arc<TreeTopology<T>>, m: usize, c: C<T>) -> Self {
        let n = tree.edge_count() * m;
        Self::from_raw(tree, m, vec![c; n])
    }

    pub fn with_harmonic_tail(mut self, tail: HarmonicTail<T>) -> Self {
        self.tail = tail;
        self
    }

    pub fn harmonic_tail(&self) -> &HarmonicTail<T> {
        &self.tail
    }

    pub fn tree(&self) -> &TreeTopology<T> {
        &self.tree
    }

    pub fn tree_arc(&self) -> &Arc<TreeTopology<T>> {
        &self.tree
    }

    pub fn samples_per_edge(&self) -> usize {
        self.m
    }

    pub fn values(&self) -> &[C<T>] {
        &self.values
    }

    pub fn edge(&self, e: EdgeId) -> &[C<T>] {
        let i = self.tree.index(e) * self.m;
        &self.values[i..i + self.m]
    }

    pub(crate) fn edge_mut(&mut self, e: EdgeId) -> &mut [C<T>] {
        let i = self.tree.index(e) * self.m;
        &mut self.values[i..i + self.m]
    }

    pub fn root_value(&self) -> C<T> {
        self.values[0]
    }

    /// Value at the upper vertex `X_{n,k}` of edge `e`.
    pub fn vertex_value(&self, e: EdgeId) -> C<T> {
        self.edge(e)[self.m - 1]
    }

    fn check_continuity(&self) -> Result<()> {
        let p = self.tree.p();
        for e in self.tree.edges() {
            if let Some(par) = parent(e, p) {
                let above = self.vertex_value(par);
                let below = self.edge(e)[0];
                let mismatch = (above - below).norm();
                if mismatch > continuity_tolerance(above.norm()) {
                    return Err(Error::Continuity { n: e.n, k: e.k, mismatch: to_f64(mismatch) });
                }
            }
        }
        Ok(())
    }

    /// Point evaluation by linear interpolation on the containing sub-interval.
    pub fn eval(&self, edge: EdgeId, t: T) -> Result<C<T>> {
        if !self.tree.contains(edge) {
            return Err(Error::OutOfRange(format!("edge ({}, {}) outside the tree", edge.n, edge.k)));
        }
        let a = self.tree.start(edge);
        let len = self.tree.length(edge);
        let s = (t - a) / len;
        let tol = continuity_tolerance(T::one());
        if s < -tol || s > T::one() + tol {
            return Err(Error::OutOfRange(format!("t = {t} outside edge ({}, {})", edge.n, edge.k)));
        }
        let x = s.max(T::zero()).min(T::one()) * count(self.m - 1);
        let i = x.floor().to_usize().unwrap_or(0).min(self.m - 2);
        let w = x - count(i);
        let v = self.edge(edge);
        Ok(v[i] * (T::one() - w) + v[i + 1] * w)
    }

    /// Weighted `L^2` inner product `<self, other>` over the truncated tree.
    pub fn inner(&self, other: &Self) -> Result<C<T>> {
        self.compatible(other)?;
        let mut acc = C::zero();
        for e in self.tree.edges() {
            let h = self.tree.length(e) / count(self.m - 1);
            let w = self.tree.weight(e);
            let (u, v) = (self.edge(e), other.edge(e));
            let mut s = C::zero();
            for i in 0..self.m - 1 {
                s = s + linear_product(u[i], u[i + 1], v[i], v[i + 1]);
            }
            acc = acc + s * (w * h);
        }
        Ok(acc)
    }

    /// Weighted `L^2` inner product of derivatives.
    pub fn derivative_inner(&self, other: &Self) -> Result<C<T>> {
        self.compatible(other)?;
        let mut acc = C::zero();
        for e in self.tree.edges() {
            let h = self.tree.length(e) / count(self.m - 1);
            let w = self.tree.weight(e);
            let (u, v) = (self.edge(e), other.edge(e));
            let mut s = C::zero();
            for i in 0..self.m - 1 {
                s = s + (u[i + 1] - u[i]) * (v[i + 1] - v[i]).conj();
            }
            acc = acc + s * (w / h);
        }
        Ok(acc)
    }

    pub fn norms(&self) -> NormReport<T> {
        let l2 = self.inner(self).map(|c| c.re.max(T::zero()).sqrt()).unwrap_or_else(|_| T::nan());
        let h1_semi = self
            .derivative_inner(self)
            .map(|c| c.re.max(T::zero()).sqrt())
            .unwrap_or_else(|_| T::nan());
        let h1 = (l2 * l2 + h1_semi * h1_semi).sqrt();
        let root_zero = self.root_value().norm() <= continuity_tolerance(T::zero());
        let poincare_ratio = (root_zero && h1_semi > T::zero()).then(|| l2 / h1_semi);
        NormReport { l2, h1_semi, h1, poincare_ratio }
    }

    /// Values at the `p^N` vertices of generation `N`, `K` ascending.
    pub fn vertex_values(&self, n: usize) -> Result<Vec<C<T>>> {
        if n > self.tree.depth {
            return Err(Error::Depth(format!("N = {n} exceeds tree depth {}", self.tree.depth)));
        }
        let p = self.tree.p();
        Ok((0..p.pow(n as u32)).map(|k| self.vertex_value(EdgeId::new(n, k))).collect())
    }

    /// `f_N`: equal to `f` up to generation `N`, constant `f(X_{N,K})` on
    /// each subtree beyond. The harmonic tail is dropped.
    pub fn extend_by_constants(&self, n: usize) -> Result<Self> {
        if n > self.tree.depth {
            return Err(Error::Depth(format!("N = {n} exceeds tree depth {}", self.tree.depth)));
        }
        let p = self.tree.p();
        let mut out = Self::from_raw(self.tree.clone(), self.m, self.values.clone());
        for e in self.tree.edges().filter(|e| e.n > n) {
            let anc = EdgeId::new(n, e.k / p.pow((e.n - n) as u32));
            let c = self.vertex_value(anc);
            out.edge_mut(e).fill(c);
        }
        Ok(out)
    }

    /// `phi(|x|) f(x)` with [`cutoff_profile`], applied sample-wise.
    pub fn root_cutoff(&self) -> Self {
        let mut out = self.clone();
        let stop = lit::<T>(0.75);
        for e in self.tree.edges() {
            let a = self.tree.start(e);
            if a >= stop {
                continue;
            }
            let h = self.tree.length(e) / count(self.m - 1);
            for (i, v) in out.edge_mut(e).iter_mut().enumerate() {
                *v = *v * cutoff_profile(a + h * count(i));
            }
        }
        out
    }

    /// Pullback `f o phi` onto the geometric tree. The coordinate change is
    /// affine per edge, so the uniform per-edge samples carry over unchanged.
    pub fn transport_to_geometric(&self) -> Self {
        Self {
            tree: Arc::new(self.tree.geometric_twin()),
            m: self.m,
            values: self.values.clone(),
            tail: self.tail.clone(),
        }
    }

    /// Push-forward of a geometric-tree function onto `target`.
    pub fn transport_onto(&self, target: Arc<TreeTopology<T>>) -> Result<Self> {
        if !self.tree.same_shape(&target) || self.tree.params != target.params {
            return Err(Error::Incompatible("trees differ in parameters or depth".into()));
        }
        if !matches!(self.tree.kind, TreeKind::Geometric) {
            return Err(Error::Incompatible("source must live on the geometric tree".into()));
        }
        Ok(Self { tree: target, m: self.m, values: self.values.clone(), tail: self.tail.clone() })
    }

    /// Smallest `N` such that every sample beyond generation `N` is at most
    /// `tol` in magnitude. `None` when the deepest generation is nonzero or a
    /// harmonic tail is present.
    pub fn is_compactly_supported(&self, tol: T) -> Option<usize> {
        if self.tail.values().any(|b| b.norm() > tol) {
            return None;
        }
        let depth = self.tree.depth;
        let p = self.tree.p();
        let mut last_nonzero: Option<usize> = None;
        for n in (0..=depth).rev() {
            let nonzero = (0..p.pow(n as u32))
                .any(|k| self.edge(EdgeId::new(n, k)).iter().any(|v| v.norm() > tol));
            if nonzero {
                last_nonzero = Some(n);
                break;
            }
        }
        match last_nonzero {
            Some(n) if n == depth => None,
            Some(n) => Some(n),
            None => Some(0),
        }
    }

    pub fn scaled(&self, c: C<T>) -> Self {
        Self {
            tree: self.tree.clone(),
            m: self.m,
            values: self.values.iter().map(|v| *v * c).collect(),
            tail: self.tail.iter().map(|(z, b)| (*z, *b * c)).collect(),
        }
    }

    /// `self + c * other`.
    pub fn add_scaled(&self, c: C<T>, other: &Self) -> Result<Self> {
        self.compatible(other)?;
        let mut tail = self.tail.clone();
        for (z, b) in &other.tail {
            let entry = tail.entry(*z).or_insert_with(C::zero);
            *entry = *entry + *b * c;
        }
        Ok(Self {
            tree: self.tree.clone(),
            m: self.m,
            values: self.values.iter().zip(&other.values).map(|(a, b)| *a + *b * c).collect(),
            tail,
        })
    }

    fn compatible(&self, other: &Self) -> Result<()> {
        if self.m != other.m || *self.tree != *other.tree {
            return Err(Error::Incompatible("functions live on different discretizations".into()));
        }
        Ok(())
    }

    pub fn to_data(&self) -> TreeFunctionData<T> {
        TreeFunctionData {
            tree: self.tree.describe(),
            samples_per_edge: self.m,
            edges: self
                .tree
                .edges()
                .map(|e| EdgeSamples {
                    n: e.n,
                    k: e.k,
                    values: self.edge(e).iter().map(|v| [v.re, v.im]).collect(),
                })
                .collect(),
            harmonic_tail: self
                .tail
                .iter()
                .map(|(z, b)| TailEntry { z: *z, re: b.re, im: b.im })
                .collect(),
        }
    }

    pub fn from_data(data: &TreeFunctionData<T>) -> Result<Self> {
        let tree = Arc::new(data.tree.build()?);
        let m = data.samples_per_edge;
        let mut values = vec![C::zero(); tree.edge_count() * m.max(1)];
        let mut seen = vec![false; tree.edge_count()];
        for es in &data.edges {
            let e = EdgeId::new(es.n, es.k);
            if !tree.contains(e) || es.values.len() != m {
                return Err(Error::ParameterDomain(format!("bad samples for edge ({}, {})", e.n, e.k)));
            }
            let i = tree.index(e);
            seen[i] = true;
            for (j, v) in es.values.iter().enumerate() {
                values[i * m + j] = Complex::new(v[0], v[1]);
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::ParameterDomain("every edge of the truncated tree must be present".into()));
        }
        let tail = data.harmonic_tail.iter().map(|t| (t.z, Complex::new(t.re, t.im))).collect();
        Ok(Self::new(tree, m, values)?.with_harmonic_tail(tail))
    }
}

pub(crate) fn to_f64<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Serializable edge-indexed sample table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct TreeFunctionData<T: Real> {
    pub tree: crate::metric_tree::TreeDescription<T>,
    pub samples_per_edge: usize,
    pub edges: Vec<EdgeSamples<T>>,
    #[serde(default)]
    pub harmonic_tail: Vec<TailEntry<T>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct EdgeSamples<T: Real> {
    pub n: usize,
    pub k: usize,
    pub values: Vec<[T; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct TailEntry<T: Real> {
    pub z: SymmetryIndex,
    pub re: T,
    pub im: T,
}

/// `c` as a complex scalar.
pub fn re<T: Real>(c: T) -> C<T> {
    Complex::new(c, T::zero())
}
