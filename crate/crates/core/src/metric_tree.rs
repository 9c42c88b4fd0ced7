//! Rooted p-adic metric trees.
//!
//! Edges are labelled `(n, k)` with generation `n >= 0` and branch index
//! `0 <= k < p^n`. The children of `(n, k)` are `(n+1, pk+j)` for
//! `j = 0..p`. On the geometric tree edge `(n, k)` is the arclength interval
//! `[t_{n-1}, t_n]` with `t_{-1} = 0` and `t_n = 1 + ell + ... + ell^n`, carries
//! length `ell^n` and integration weight `alpha^n`. A perturbed tree overrides
//! lengths and weights on finitely many edges.

use crate::error::{Error, Result};
use crate::scalar::{count, powu, Real};
use serde::{Deserialize, Serialize};

/// Branching factor and the two geometric ratios.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct TreeParams<T: Real> {
    pub p: usize,
    pub ell: T,
    pub alpha: T,
}

impl<T: Real> TreeParams<T> {
    pub fn new(p: usize, ell: T, alpha: T) -> Result<Self> {
        let params = Self { p, ell, alpha };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if self.p < 2 {
            return Err(Error::ParameterDomain(format!("p = {} must be at least 2", self.p)));
        }
        if !(self.ell > T::zero() && self.ell < T::one()) {
            return Err(Error::ParameterDomain(format!(
                "ell = {} must lie in (0, 1) for a finite height",
                self.ell
            )));
        }
        if !(self.alpha > T::zero()) || !self.alpha.is_finite() {
            return Err(Error::ParameterDomain(format!("alpha = {} must be positive", self.alpha)));
        }
        Ok(())
    }

    pub fn p_real(&self) -> T {
        count(self.p)
    }

    /// `alpha * p`.
    pub fn alpha_p(&self) -> T {
        self.alpha * self.p_real()
    }

    /// `ell / (alpha p)`, the geometric rate of every harmonic tail.
    pub fn rate(&self) -> T {
        self.ell / self.alpha_p()
    }

    /// Height `L = 1 / (1 - ell)`.
    pub fn height(&self) -> T {
        T::one() / (T::one() - self.ell)
    }

    /// Right endpoint `t_n` of generation `n`; `t(-1) = 0`.
    pub fn t(&self, n: i64) -> T {
        if n < 0 {
            return T::zero();
        }
        (T::one() - powu(self.ell, n as usize + 1)) / (T::one() - self.ell)
    }

    pub fn edge_length(&self, n: usize) -> T {
        powu(self.ell, n)
    }

    pub fn edge_weight(&self, n: usize) -> T {
        powu(self.alpha, n)
    }

    /// Generation `n` with `t_{n-1} <= t < t_n`.
    pub fn generation_of(&self, t: T) -> Result<usize> {
        if !(t >= T::zero() && t < self.height()) {
            return Err(Error::OutOfRange(format!("t = {} outside [0, L)", t)));
        }
        let mut n = 0usize;
        while t >= self.t(n as i64) {
            n += 1;
            if n > 100_000 {
                return Err(Error::OutOfRange(format!("t = {} indistinguishable from L", t)));
            }
        }
        Ok(n)
    }
}

/// Edge label `(n, k)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EdgeId {
    pub n: usize,
    pub k: usize,
}

impl EdgeId {
    pub const ROOT: EdgeId = EdgeId { n: 0, k: 0 };

    pub fn new(n: usize, k: usize) -> Self {
        Self { n, k }
    }

    pub fn is_valid(&self, p: usize) -> bool {
        self.k < p.pow(self.n as u32)
    }
}

/// Number of edges in generation `n`.
pub fn generation_size(p: usize, n: usize) -> usize {
    p.pow(n as u32)
}

/// Number of edges in generations `0..=depth`.
pub fn edge_count(p: usize, depth: usize) -> usize {
    (p.pow(depth as u32 + 1) - 1) / (p - 1)
}

/// Position of `e` in the breadth-first enumeration.
pub fn edge_index(e: EdgeId, p: usize) -> usize {
    edge_count_before(p, e.n) + e.k
}

fn edge_count_before(p: usize, n: usize) -> usize {
    if n == 0 {
        0
    } else {
        edge_count(p, n - 1)
    }
}

pub fn children(e: EdgeId, p: usize) -> Vec<EdgeId> {
    (0..p).map(|j| EdgeId::new(e.n + 1, p * e.k + j)).collect()
}

/// Parent edge, `None` for the root edge.
pub fn parent(e: EdgeId, p: usize) -> Option<EdgeId> {
    if e.n == 0 {
        None
    } else {
        Some(EdgeId::new(e.n - 1, e.k / p))
    }
}

/// Whether `x` lies in the subtree hanging from `ancestor` (reflexive).
pub fn subtree_contains(ancestor: EdgeId, x: EdgeId, p: usize) -> bool {
    x.n >= ancestor.n && x.k / p.pow((x.n - ancestor.n) as u32) == ancestor.k
}

/// Branch `j` such that `x` lies in the subtree of child `(n+1, pk+j)` of
/// `ancestor`. `None` when `x` is not strictly below `ancestor`.
pub fn branch_of(ancestor: EdgeId, x: EdgeId, p: usize) -> Option<usize> {
    if x.n <= ancestor.n || !subtree_contains(ancestor, x, p) {
        return None;
    }
    Some((x.k / p.pow((x.n - ancestor.n - 1) as u32)) % p)
}

/// Lazy breadth-first iterator over the edges of generations `0..=depth`.
#[derive(Debug, Clone)]
pub struct Edges {
    p: usize,
    depth: usize,
    next: Option<EdgeId>,
}

impl Iterator for Edges {
    type Item = EdgeId;

    fn next(&mut self) -> Option<EdgeId> {
        let cur = self.next?;
        self.next = if cur.k + 1 < generation_size(self.p, cur.n) {
            Some(EdgeId::new(cur.n, cur.k + 1))
        } else if cur.n < self.depth {
            Some(EdgeId::new(cur.n + 1, 0))
        } else {
            None
        };
        Some(cur)
    }
}

pub fn edges(p: usize, depth: usize) -> Edges {
    Edges { p, depth, next: Some(EdgeId::ROOT) }
}

/// Point `(n, k, t)`; `t` is the arclength distance to the root.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct TreePoint<T: Real> {
    pub edge: EdgeId,
    pub t: T,
}

/// Per-edge metric data of a perturbed tree, stored densely up to `depth`.
#[derive(Debug, Clone, PartialEq)]
pub struct Perturbation<T: Real> {
    lengths: Vec<T>,
    weights: Vec<T>,
    starts: Vec<T>,
    distortion: T,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TreeKind<T: Real> {
    Geometric,
    Perturbed(Perturbation<T>),
}

/// Truncated tree: parameters, depth and (optionally) perturbed metric data.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeTopology<T: Real> {
    pub params: TreeParams<T>,
    pub depth: usize,
    pub kind: TreeKind<T>,
}

/// Prescribed length and/or weight on one edge of a perturbed tree.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct EdgePerturbation<T: Real> {
    pub n: usize,
    pub k: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length: Option<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<T>,
}

pub fn geometric_tree<T: Real>(params: TreeParams<T>, depth: usize) -> Result<TreeTopology<T>> {
    params.validate()?;
    Ok(TreeTopology { params, depth, kind: TreeKind::Geometric })
}

/// Builds a perturbed tree. Unlisted edges keep their geometric values; the
/// minimal distortion `c >= 1` is computed from the listed data.
pub fn perturbed_tree<T: Real>(
    params: TreeParams<T>,
    depth: usize,
    perturbations: &[EdgePerturbation<T>],
) -> Result<TreeTopology<T>> {
    params.validate()?;
    let p = params.p;
    let total = edge_count(p, depth);
    let mut lengths = Vec::with_capacity(total);
    let mut weights = Vec::with_capacity(total);
    for e in edges(p, depth) {
        lengths.push(params.edge_length(e.n));
        weights.push(params.edge_weight(e.n));
    }
    for pert in perturbations {
        let e = EdgeId::new(pert.n, pert.k);
        if !e.is_valid(p) || e.n > depth {
            return Err(Error::ParameterDomain(format!(
                "perturbed edge ({}, {}) is not an edge of the depth-{} tree",
                e.n, e.k, depth
            )));
        }
        let idx = edge_index(e, p);
        if let Some(len) = pert.length {
            if !(len > T::zero()) || !len.is_finite() {
                return Err(Error::ParameterDomain(format!(
                    "length of edge ({}, {}) must be positive, got {}",
                    e.n, e.k, len
                )));
            }
            lengths[idx] = len;
        }
        if let Some(w) = pert.weight {
            if !(w > T::zero()) || !w.is_finite() {
                return Err(Error::ParameterDomain(format!(
                    "weight of edge ({}, {}) must be positive, got {}",
                    e.n, e.k, w
                )));
            }
            weights[idx] = w;
        }
    }
    let mut distortion = T::one();
    let mut starts = vec![T::zero(); total];
    for e in edges(p, depth) {
        let idx = edge_index(e, p);
        let gl = params.edge_length(e.n);
        let gw = params.edge_weight(e.n);
        for ratio in [lengths[idx] / gl, weights[idx] / gw] {
            distortion = distortion.max(ratio).max(ratio.recip());
        }
        if let Some(par) = parent(e, p) {
            let pi = edge_index(par, p);
            starts[idx] = starts[pi] + lengths[pi];
        }
    }
    Ok(TreeTopology {
        params,
        depth,
        kind: TreeKind::Perturbed(Perturbation { lengths, weights, starts, distortion }),
    })
}

impl<T: Real> TreeTopology<T> {
    pub fn p(&self) -> usize {
        self.params.p
    }

    pub fn is_geometric(&self) -> bool {
        matches!(self.kind, TreeKind::Geometric)
    }

    /// Distortion constant `c` (1 for the geometric tree).
    pub fn distortion(&self) -> T {
        match &self.kind {
            TreeKind::Geometric => T::one(),
            TreeKind::Perturbed(pt) => pt.distortion,
        }
    }

    pub fn edge_count(&self) -> usize {
        edge_count(self.p(), self.depth)
    }

    pub fn edges(&self) -> Edges {
        edges(self.p(), self.depth)
    }

    pub fn index(&self, e: EdgeId) -> usize {
        edge_index(e, self.p())
    }

    pub fn contains(&self, e: EdgeId) -> bool {
        e.n <= self.depth && e.is_valid(self.p())
    }

    pub fn length(&self, e: EdgeId) -> T {
        match &self.kind {
            TreeKind::Perturbed(pt) if e.n <= self.depth => pt.lengths[self.index(e)],
            _ => self.params.edge_length(e.n),
        }
    }

    pub fn weight(&self, e: EdgeId) -> T {
        match &self.kind {
            TreeKind::Perturbed(pt) if e.n <= self.depth => pt.weights[self.index(e)],
            _ => self.params.edge_weight(e.n),
        }
    }

    /// Arclength coordinate of the lower vertex of `e`.
    pub fn start(&self, e: EdgeId) -> T {
        match &self.kind {
            TreeKind::Perturbed(pt) if e.n <= self.depth => pt.starts[self.index(e)],
            _ => self.params.t(e.n as i64 - 1),
        }
    }

    /// Arclength coordinate of the upper vertex `X_{n,k}` of `e`.
    pub fn end(&self, e: EdgeId) -> T {
        self.start(e) + self.length(e)
    }

    /// The `t`-grid `t_{-1}, t_0, ..., t_depth` of the geometric tree.
    pub fn t_grid(&self) -> Vec<T> {
        (-1..=self.depth as i64).map(|n| self.params.t(n)).collect()
    }

    /// Geometric tree with the same parameters and depth.
    pub fn geometric_twin(&self) -> TreeTopology<T> {
        TreeTopology { params: self.params, depth: self.depth, kind: TreeKind::Geometric }
    }

    /// Whether two trees share `p` and depth (the transport precondition).
    pub fn same_shape(&self, other: &TreeTopology<T>) -> bool {
        self.params.p == other.params.p && self.depth == other.depth
    }

    /// Total measure `sum alpha^n ell^n p^n` over the truncated tree.
    pub fn measure(&self) -> T {
        self.edges().map(|e| self.weight(e) * self.length(e)).sum()
    }

    /// Serializable description.
    pub fn describe(&self) -> TreeDescription<T> {
        let perturbations = match &self.kind {
            TreeKind::Geometric => Vec::new(),
            TreeKind::Perturbed(pt) => self
                .edges()
                .filter_map(|e| {
                    let i = self.index(e);
                    let len = pt.lengths[i];
                    let w = pt.weights[i];
                    let gl = self.params.edge_length(e.n);
                    let gw = self.params.edge_weight(e.n);
                    (len != gl || w != gw).then(|| EdgePerturbation {
                        n: e.n,
                        k: e.k,
                        length: (len != gl).then_some(len),
                        weight: (w != gw).then_some(w),
                    })
                })
                .collect(),
        };
        TreeDescription {
            p: self.params.p,
            ell: self.params.ell,
            alpha: self.params.alpha,
            depth: self.depth,
            perturbations,
        }
    }
}

/// JSON form: `{"p":2,"ell":0.5,"alpha":0.5,"depth":8,"perturbations":[...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct TreeDescription<T: Real> {
    pub p: usize,
    pub ell: T,
    pub alpha: T,
    pub depth: usize,
    #[serde(default)]
    pub perturbations: Vec<EdgePerturbation<T>>,
}

impl<T: Real> TreeDescription<T> {
    pub fn build(&self) -> Result<TreeTopology<T>> {
        let params = TreeParams::new(self.p, self.ell, self.alpha)?;
        if self.perturbations.is_empty() {
            geometric_tree(params, self.depth)
        } else {
            perturbed_tree(params, self.depth, &self.perturbations)
        }
    }
}

fn edge_tolerance<T: Real>(scale: T) -> T {
    T::epsilon().sqrt() * T::epsilon().sqrt().sqrt() * scale.max(T::one())
}

/// Maps a point of the geometric tree onto the perturbed tree `tree`
/// (affine on each edge, vertices fixed).
pub fn coordinate_map<T: Real>(tree: &TreeTopology<T>, x: TreePoint<T>) -> Result<TreePoint<T>> {
    let e = x.edge;
    if !tree.contains(e) {
        return Err(Error::OutOfRange(format!("edge ({}, {}) outside the tree", e.n, e.k)));
    }
    let a = tree.params.t(e.n as i64 - 1);
    let gl = tree.params.edge_length(e.n);
    let tol = edge_tolerance(tree.params.height());
    if x.t < a - tol || x.t > a + gl + tol {
        return Err(Error::OutOfRange(format!(
            "t = {} outside [{}, {}] on edge ({}, {})",
            x.t,
            a,
            a + gl,
            e.n,
            e.k
        )));
    }
    let s = (x.t - a) / gl;
    Ok(TreePoint { edge: e, t: tree.start(e) + s * tree.length(e) })
}

/// Inverse of [`coordinate_map`].
pub fn inverse_coordinate_map<T: Real>(
    tree: &TreeTopology<T>,
    y: TreePoint<T>,
) -> Result<TreePoint<T>> {
    let e = y.edge;
    if !tree.contains(e) {
        return Err(Error::OutOfRange(format!("edge ({}, {}) outside the tree", e.n, e.k)));
    }
    let a = tree.start(e);
    let len = tree.length(e);
    let tol = edge_tolerance(tree.params.height());
    if y.t < a - tol || y.t > a + len + tol {
        return Err(Error::OutOfRange(format!(
            "t = {} outside [{}, {}] on edge ({}, {})",
            y.t,
            a,
            a + len,
            e.n,
            e.k
        )));
    }
    let s = (y.t - a) / len;
    Ok(TreePoint {
        edge: e,
        t: tree.params.t(e.n as i64 - 1) + s * tree.params.edge_length(e.n),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(p: usize, ell: f64, alpha: f64) -> TreeParams<f64> {
        TreeParams::new(p, ell, alpha).unwrap()
    }

    #[test]
    fn t_grid_and_height() {
        let tree = geometric_tree(params(2, 0.5, 0.5), 2).unwrap();
        assert_eq!(tree.t_grid(), vec![0.0, 1.0, 1.5, 1.75]);
        assert_eq!(tree.params.height(), 2.0);
        let t3 = geometric_tree(params(3, 0.9, 1.0), 0).unwrap();
        assert!((t3.params.t(0) - 1.0).abs() < 1e-15);
        assert!((t3.params.height() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn invalid_params() {
        assert!(TreeParams::new(2, 1.0, 0.5).is_err());
        assert!(TreeParams::new(1, 0.5, 0.5).is_err());
        assert!(TreeParams::new(2, 0.5, 0.0).is_err());
    }

    #[test]
    fn family_relations() {
        assert_eq!(children(EdgeId::new(1, 1), 2), vec![EdgeId::new(2, 2), EdgeId::new(2, 3)]);
        assert_eq!(parent(EdgeId::new(2, 3), 2), Some(EdgeId::new(1, 1)));
        assert_eq!(parent(EdgeId::ROOT, 2), None);
        assert_eq!(
            children(EdgeId::new(1, 2), 3),
            vec![EdgeId::new(2, 6), EdgeId::new(2, 7), EdgeId::new(2, 8)]
        );
    }

    #[test]
    fn subtree_membership() {
        let x = EdgeId::new(3, 1);
        assert!(subtree_contains(EdgeId::new(1, 0), x, 2));
        assert_eq!(branch_of(EdgeId::new(1, 0), x, 2), Some(0));
        assert!(!subtree_contains(EdgeId::new(1, 1), x, 2));
        assert!(subtree_contains(EdgeId::ROOT, EdgeId::ROOT, 2));
        assert_eq!(branch_of(EdgeId::ROOT, EdgeId::ROOT, 2), None);
    }

    #[test]
    fn enumeration_is_breadth_first() {
        let ids: Vec<_> = edges(3, 2).collect();
        assert_eq!(ids.len(), 13);
        for (i, e) in ids.iter().enumerate() {
            assert_eq!(edge_index(*e, 3), i);
        }
        for n in 0..=2 {
            assert_eq!(ids.iter().filter(|e| e.n == n).count(), 3usize.pow(n as u32));
        }
    }

    #[test]
    fn generation_measure() {
        let pr = params(3, 0.4, 0.7);
        let tree = geometric_tree(pr, 4).unwrap();
        for n in 0..=4 {
            let total: f64 = tree
                .edges()
                .filter(|e| e.n == n)
                .map(|e| tree.weight(e) * tree.length(e))
                .sum();
            assert!((total - (3.0 * 0.7 * 0.4f64).powi(n as i32)).abs() < 1e-14);
        }
    }

    #[test]
    fn perturbed_distortion() {
        let pr = params(2, 0.5, 0.5);
        let flat: Vec<_> = edges(2, 3)
            .map(|e| EdgePerturbation {
                n: e.n,
                k: e.k,
                length: Some(pr.edge_length(e.n)),
                weight: Some(pr.edge_weight(e.n)),
            })
            .collect();
        assert_eq!(perturbed_tree(pr, 3, &flat).unwrap().distortion(), 1.0);
        let one = [EdgePerturbation { n: 1, k: 0, length: Some(0.6), weight: None }];
        let tree = perturbed_tree(pr, 3, &one).unwrap();
        assert!((tree.distortion() - 1.2).abs() < 1e-15);
        let zero = [EdgePerturbation { n: 1, k: 0, length: Some(0.0), weight: None }];
        assert!(perturbed_tree(pr, 3, &zero).is_err());
    }

    #[test]
    fn coordinate_change() {
        let pr = params(2, 0.5, 0.5);
        let one = [EdgePerturbation { n: 1, k: 0, length: Some(0.6), weight: None }];
        let tree = perturbed_tree(pr, 2, &one).unwrap();
        let e = EdgeId::new(1, 0);
        assert!((tree.end(e) - 1.6).abs() < 1e-15);
        let y = coordinate_map(&tree, TreePoint { edge: e, t: 1.25 }).unwrap();
        assert!((y.t - 1.3).abs() < 1e-15);
        let left = coordinate_map(&tree, TreePoint { edge: e, t: 1.0 }).unwrap();
        assert_eq!(left.t, tree.start(e));
        let back = inverse_coordinate_map(&tree, y).unwrap();
        assert!((back.t - 1.25).abs() < 1e-15);
        assert!(coordinate_map(&tree, TreePoint { edge: e, t: 1.7 }).is_err());
        let geo = geometric_tree(pr, 2).unwrap();
        let id = coordinate_map(&geo, TreePoint { edge: e, t: 1.37 }).unwrap();
        assert_eq!(id.t, 1.37);
    }

    #[test]
    fn description_roundtrip() {
        let json = r#"{"p":2,"ell":0.5,"alpha":0.5,"depth":8,"perturbations":[{"n":1,"k":0,"length":0.6,"weight":0.55}]}"#;
        let desc: TreeDescription<f64> = serde_json::from_str(json).unwrap();
        let tree = desc.build().unwrap();
        assert_eq!(tree.describe(), desc);
        assert!((tree.distortion() - 1.2).abs() < 1e-15);
    }
}
