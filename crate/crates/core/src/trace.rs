//! The boundary trace: coefficients `tau f` in the weighted sequence space
//! over symmetry indices, their identification with piecewise-constant
//! functions on a decomposed box, the embedded trace `gamma`, a right inverse
//! and transport from perturbed trees.
//!
//! Coefficients are exact: on generation `g` the derivative of `phi_z` is
//! `c_nu chi_z / (alpha p)^g`, so `<f', phi_z'>` reduces to a character sum of
//! per-edge endpoint differences, plus the closed-form share of any harmonic
//! tail.

use crate::approx::PiecewiseConstantFn;
use crate::error::{Error, Result};
use crate::harmonic::{check_gate, f_infty_nu, harmonic_combination, normalization, tail_fraction, theta, SymmetryIndex};
use crate::metric_tree::{children, EdgeId, TreeParams, TreeTopology};
use crate::multiscale::Decomposition;
use crate::scalar::{count, powu, C, Real};
use crate::tree_function::TreeFunction;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::sync::Arc;

/// Finitely supported element of the sequence space over symmetry indices.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceCoefficients<T: Real> {
    pub params: TreeParams<T>,
    pub entries: BTreeMap<SymmetryIndex, C<T>>,
}

/// One JSON record `{"z": "rad" | [n, k, s], "re": .., "im": ..}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct CoefficientEntry<T: Real> {
    pub z: SymmetryIndex,
    pub re: T,
    pub im: T,
}

impl<T: Real> TraceCoefficients<T> {
    pub fn new(params: TreeParams<T>, entries: BTreeMap<SymmetryIndex, C<T>>) -> Result<Self> {
        for z in entries.keys() {
            z.validate(params.p)?;
        }
        Ok(Self { params, entries })
    }

    pub fn zero(params: TreeParams<T>) -> Self {
        Self { params, entries: BTreeMap::new() }
    }

    pub fn get(&self, z: SymmetryIndex) -> C<T> {
        self.entries.get(&z).copied().unwrap_or_else(C::zero)
    }

    /// `(sum_z p^{2 r nu(z)} |a_z|^2)^{1/2}`.
    pub fn norm_l2r(&self, r: T) -> T {
        let p = self.params.p_real();
        self.entries
            .iter()
            .map(|(z, a)| p.powf(r * count::<T>(2) * T::from_i64(z.nu()).unwrap_or_else(T::zero)) * a.norm_sqr())
            .sum::<T>()
            .sqrt()
    }

    /// `self + c * other`.
    pub fn add_scaled(&self, c: C<T>, other: &Self) -> Self {
        let mut entries = self.entries.clone();
        for (z, b) in &other.entries {
            let e = entries.entry(*z).or_insert_with(C::zero);
            *e = *e + *b * c;
        }
        Self { params: self.params, entries }
    }

    pub fn distance_l2r(&self, other: &Self, r: T) -> T {
        self.add_scaled(C::new(-T::one(), T::zero()), other).norm_l2r(r)
    }

    pub fn max_abs(&self) -> T {
        self.entries.values().map(|a| a.norm()).fold(T::zero(), T::max)
    }

    pub fn to_entries(&self) -> Vec<CoefficientEntry<T>> {
        self.entries.iter().map(|(z, a)| CoefficientEntry { z: *z, re: a.re, im: a.im }).collect()
    }

    pub fn from_entries(params: TreeParams<T>, entries: &[CoefficientEntry<T>]) -> Result<Self> {
        Self::new(params, entries.iter().map(|e| (e.z, C::new(e.re, e.im))).collect())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_entries()).expect("coefficients serialize")
    }

    pub fn from_json(params: TreeParams<T>, json: &str) -> Result<Self> {
        let entries: Vec<CoefficientEntry<T>> =
            serde_json::from_str(json).map_err(|e| Error::ParameterDomain(e.to_string()))?;
        Self::from_entries(params, &entries)
    }
}

/// `M_z`: `F_inf` for `rad`, `p^{-n/2} F_inf^{(n)}` for `(n, k, s)`.
pub fn trace_multiplier<T: Real>(params: &TreeParams<T>, z: SymmetryIndex) -> Result<T> {
    let finf = f_infty_nu(params, z.nu())?;
    Ok(match z {
        SymmetryIndex::Rad => finf,
        SymmetryIndex::Triple { n, .. } => finf / powu(params.p_real(), n).sqrt(),
    })
}

fn require_geometric<T: Real>(tree: &TreeTopology<T>) -> Result<()> {
    if tree.is_geometric() {
        Ok(())
    } else {
        Err(Error::Incompatible("tau needs the geometric tree; transport first".into()))
    }
}

/// `tau f` for every index with `nu(z) < depth`, plus any tail indices.
pub fn tau<T: Real>(f: &TreeFunction<T>) -> Result<TraceCoefficients<T>> {
    let tree = f.tree();
    require_geometric(tree)?;
    let params = tree.params;
    check_gate(&params)?;
    let p = tree.p();
    let depth = tree.depth;
    let g = f.root_cutoff();
    let m = g.samples_per_edge();

    // W(e) = sum over the subtree of e of p^{-gen} (f(end) - f(start)).
    let mut w = vec![C::<T>::zero(); tree.edge_count()];
    for n in (0..=depth).rev() {
        let scale = powu(params.p_real(), n).recip();
        for k in 0..p.pow(n as u32) {
            let e = EdgeId::new(n, k);
            let v = g.edge(e);
            let mut acc = (v[m - 1] - v[0]) * scale;
            if n < depth {
                for c in children(e, p) {
                    acc = acc + w[tree.index(c)];
                }
            }
            w[tree.index(e)] = acc;
        }
    }

    let mut a: BTreeMap<SymmetryIndex, C<T>> = BTreeMap::new();
    a.insert(SymmetryIndex::Rad, w[0] * normalization(&params, -1));
    for n in 0..depth {
        let c = normalization(&params, n as i64);
        for k in 0..p.pow(n as u32) {
            for s in 1..p {
                let sum = (0..p)
                    .map(|j| theta::<T>(p, s, j).conj() * w[tree.index(EdgeId::new(n + 1, p * k + j))])
                    .fold(C::zero(), |x, y| x + y);
                a.insert(SymmetryIndex::triple(n, k, s), sum * c);
            }
        }
    }
    for (z, b) in f.harmonic_tail() {
        let e = a.entry(*z).or_insert_with(C::zero);
        *e = *e + *b * tail_fraction(&params, z.nu(), depth);
    }
    let entries = a
        .into_iter()
        .map(|(z, v)| Ok((z, v * trace_multiplier(&params, z)?)))
        .collect::<Result<_>>()?;
    Ok(TraceCoefficients { params, entries })
}

/// `tau f_N` with `f_N` the extension by constants below generation `N`.
pub fn tau_vertex<T: Real>(f: &TreeFunction<T>, n: usize) -> Result<TraceCoefficients<T>> {
    tau(&f.extend_by_constants(n)?)
}

/// `tau` of the pullback of `f` to the geometric tree.
pub fn tau_perturbed<T: Real>(f: &TreeFunction<T>) -> Result<TraceCoefficients<T>> {
    tau(&f.transport_to_geometric())
}

fn check_dec<T: Real>(dec: &Decomposition<T>, p: usize) -> Result<()> {
    if dec.p != p {
        return Err(Error::Incompatible(format!("decomposition has p = {} but the tree has p = {p}", dec.p)));
    }
    if !dec.is_strongly_balanced() {
        return Err(Error::Incompatible("decomposition is not strongly balanced".into()));
    }
    Ok(())
}

/// Generation on which `sum_z a_z I e_z` is exactly representable.
pub fn identify_level<T: Real>(coeffs: &TraceCoefficients<T>) -> usize {
    coeffs.entries.keys().map(|z| (z.nu() + 1) as usize).max().unwrap_or(0)
}

/// `I_Omega`: `e_rad -> 1`, `e_{n,k,s} -> p^{n/2} sum_j theta_s^j 1_{n+1, pk+j}`,
/// evaluated exactly on generation `max nu + 1`.
pub fn identify<'a, T: Real>(
    coeffs: &TraceCoefficients<T>,
    dec: &'a Decomposition<T>,
) -> Result<PiecewiseConstantFn<'a, T>> {
    let level = identify_level(coeffs);
    if dec.depth < level {
        return Err(Error::Depth(format!(
            "coefficients need generation {level}, decomposition depth is {}",
            dec.depth
        )));
    }
    identify_at(coeffs, dec, level)
}

/// `P_level I_Omega(coeffs)`: indices with `nu(z) + 1 > level` have zero
/// cell averages on generation `level` and drop out.
pub fn identify_at<'a, T: Real>(
    coeffs: &TraceCoefficients<T>,
    dec: &'a Decomposition<T>,
    level: usize,
) -> Result<PiecewiseConstantFn<'a, T>> {
    let p = coeffs.params.p;
    check_dec(dec, p)?;
    if level > dec.depth {
        return Err(Error::Depth(format!("level {level} exceeds decomposition depth {}", dec.depth)));
    }
    let mut values = vec![C::<T>::zero(); dec.cell_count(level)];
    let pr = coeffs.params.p_real();
    for (z, a) in &coeffs.entries {
        match *z {
            SymmetryIndex::Rad => values.iter_mut().for_each(|v| *v = *v + *a),
            SymmetryIndex::Triple { n, k, s } => {
                if n + 1 > level {
                    continue;
                }
                let amp = *a * powu(pr, n).sqrt();
                let below = p.pow((level - n - 1) as u32);
                for j in 0..p {
                    let w = amp * theta::<T>(p, s, j);
                    let first = (p * k + j) * below;
                    for v in &mut values[first..first + below] {
                        *v = *v + w;
                    }
                }
            }
        }
    }
    PiecewiseConstantFn::new(dec, level, values)
}

/// Both realizations of the embedded trace.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaResult<'a, T: Real> {
    /// `I_Omega tau f` on the finest generation it needs (capped at the
    /// decomposition depth, where it is the cell-average projection).
    pub method_a: PiecewiseConstantFn<'a, T>,
    /// `sum_K f(X_{N,K}) 1_{Omega_{N,K}}`.
    pub method_b: PiecewiseConstantFn<'a, T>,
    /// `||method_a - method_b||_{L^2(Omega)}`.
    pub discrepancy: T,
}

pub fn gamma<'a, T: Real>(
    f: &TreeFunction<T>,
    dec: &'a Decomposition<T>,
    n: usize,
) -> Result<GammaResult<'a, T>> {
    let tree = f.tree();
    check_dec(dec, tree.p())?;
    if n > tree.depth || n > dec.depth {
        return Err(Error::Depth(format!(
            "N = {n} exceeds tree depth {} or decomposition depth {}",
            tree.depth, dec.depth
        )));
    }
    let coeffs = tau(f)?;
    let level = identify_level(&coeffs).min(dec.depth);
    let method_a = identify_at(&coeffs, dec, level)?;
    let method_b = vertex_trace(f, dec, n)?;
    let discrepancy = method_a.l2_distance(&method_b)?;
    Ok(GammaResult { method_a, method_b, discrepancy })
}

/// Vertex-value piecewise constant `sum_K f(X_{N,K}) 1_{Omega_{N,K}}`.
pub fn vertex_trace<'a, T: Real>(
    f: &TreeFunction<T>,
    dec: &'a Decomposition<T>,
    n: usize,
) -> Result<PiecewiseConstantFn<'a, T>> {
    check_dec(dec, f.tree().p())?;
    PiecewiseConstantFn::new(dec, n, f.vertex_values(n)?)
}

/// Coefficients `c` with `I_Omega c = g` for `g` on generation `N`.
pub fn expand<T: Real>(g: &PiecewiseConstantFn<'_, T>, params: TreeParams<T>) -> Result<TraceCoefficients<T>> {
    let dec = g.dec();
    check_dec(dec, params.p)?;
    let p = dec.p;
    let pr = params.p_real();
    let level = g.level();
    // means[n][k]: averages over generation-n cells (equal volumes).
    let mut means: Vec<Vec<C<T>>> = vec![Vec::new(); level + 1];
    means[level] = g.values().to_vec();
    for n in (0..level).rev() {
        means[n] = means[n + 1]
            .chunks(p)
            .map(|c| c.iter().fold(C::zero(), |a, b| a + *b) / pr)
            .collect();
    }
    let mut entries = BTreeMap::new();
    entries.insert(SymmetryIndex::Rad, means[0][0]);
    for n in 0..level {
        let scale = (powu(pr, n).sqrt() * pr).recip();
        for k in 0..p.pow(n as u32) {
            for s in 1..p {
                let sum = (0..p)
                    .map(|j| theta::<T>(p, s, j).conj() * means[n + 1][p * k + j])
                    .fold(C::zero(), |x, y| x + y);
                entries.insert(SymmetryIndex::triple(n, k, s), sum * scale);
            }
        }
    }
    Ok(TraceCoefficients { params, entries })
}

/// Right inverse of `gamma`: `sum_z (c_z / M_z) phi_z` where `I_Omega c = g`.
pub fn lift<T: Real>(
    g: &PiecewiseConstantFn<'_, T>,
    tree: Arc<TreeTopology<T>>,
    samples_per_edge: usize,
) -> Result<TreeFunction<T>> {
    check_gate(&tree.params)?;
    if g.level() > tree.depth {
        return Err(Error::Depth(format!(
            "generation {} exceeds tree depth {}",
            g.level(),
            tree.depth
        )));
    }
    let c = expand(g, tree.params)?;
    let coeffs = c
        .entries
        .iter()
        .map(|(z, v)| Ok((*z, *v / trace_multiplier(&tree.params, *z)?)))
        .collect::<Result<BTreeMap<_, _>>>()?;
    harmonic_combination(tree, samples_per_edge, &coeffs)
}
