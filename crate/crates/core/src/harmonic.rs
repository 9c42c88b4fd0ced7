//! Symmetry decomposition of functions on the geometric tree and the
//! harmonic basis.
//!
//! `L^2` of the tree splits orthogonally into radial functions and, for every
//! vertex `X_{n,k}` and character `1 <= s < p`, the functions supported below
//! `X_{n,k}` that are radial on each branch `j` up to the factor `theta_s^j`.
//! Each summand is unitarily equivalent to a one-dimensional weighted space on
//! `(0, L)` resp. `(t_n, L)`; [`synth`] is that unitary and [`analyze`] its
//! adjoint.
//!
//! The harmonic profiles solve `(q F')' = 0` with `F' = c / q`, where the
//! weight is `q = (alpha p)^g` on generation `g`. Their lifts `phi_z` form an
//! orthonormal family for `<f', g'>`.

use crate::error::{Error, Result};
use crate::metric_tree::{branch_of, EdgeId, TreeParams, TreeTopology};
use crate::scalar::{count, lit, powu, root_of_unity, C, Real};
use crate::tree_function::{continuity_tolerance, HarmonicTail, TreeFunction};
use num_complex::Complex;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

/// Index `rad` or `(n, k, s)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "IndexRepr", into = "IndexRepr")]
pub enum SymmetryIndex {
    Rad,
    Triple { n: usize, k: usize, s: usize },
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum IndexRepr {
    Tag(String),
    Triple([usize; 3]),
}

impl From<SymmetryIndex> for IndexRepr {
    fn from(z: SymmetryIndex) -> Self {
        match z {
            SymmetryIndex::Rad => IndexRepr::Tag("rad".into()),
            SymmetryIndex::Triple { n, k, s } => IndexRepr::Triple([n, k, s]),
        }
    }
}

impl TryFrom<IndexRepr> for SymmetryIndex {
    type Error = String;

    fn try_from(r: IndexRepr) -> std::result::Result<Self, String> {
        match r {
            IndexRepr::Tag(t) if t == "rad" => Ok(SymmetryIndex::Rad),
            IndexRepr::Tag(t) => Err(format!("unknown symmetry index tag {t:?}")),
            IndexRepr::Triple([n, k, s]) => Ok(SymmetryIndex::Triple { n, k, s }),
        }
    }
}

impl fmt::Display for SymmetryIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SymmetryIndex::Rad => write!(f, "rad"),
            SymmetryIndex::Triple { n, k, s } => write!(f, "({n},{k},{s})"),
        }
    }
}

impl SymmetryIndex {
    pub fn triple(n: usize, k: usize, s: usize) -> Self {
        SymmetryIndex::Triple { n, k, s }
    }

    /// `-1` for `rad`, `n` for `(n, k, s)`.
    pub fn nu(&self) -> i64 {
        match self {
            SymmetryIndex::Rad => -1,
            SymmetryIndex::Triple { n, .. } => *n as i64,
        }
    }

    pub fn validate(&self, p: usize) -> Result<()> {
        if let SymmetryIndex::Triple { n, k, s } = *self {
            if k >= p.pow(n as u32) || s == 0 || s >= p {
                return Err(Error::ParameterDomain(format!("invalid index {self} for p = {p}")));
            }
        }
        Ok(())
    }
}

/// All indices with `nu(z) < depth`: `rad` first, then triples by `(n, k, s)`.
pub fn symmetry_indices(p: usize, depth: usize) -> Vec<SymmetryIndex> {
    let mut out = vec![SymmetryIndex::Rad];
    for n in 0..depth {
        for k in 0..p.pow(n as u32) {
            for s in 1..p {
                out.push(SymmetryIndex::triple(n, k, s));
            }
        }
    }
    out
}

/// `theta_s^j = exp(2 pi i j s / p)`.
pub fn theta<T: Real>(p: usize, s: usize, j: usize) -> C<T> {
    root_of_unity(p, s, j)
}

/// `ell < alpha p < 1 / ell`.
pub fn gate<T: Real>(params: &TreeParams<T>) -> bool {
    let ap = params.alpha_p();
    params.ell < ap && ap < params.ell.recip()
}

pub fn check_gate<T: Real>(params: &TreeParams<T>) -> Result<()> {
    if gate(params) {
        Ok(())
    } else {
        Err(Error::Regime(format!(
            "p = {}, ell = {}, alpha = {}",
            params.p, params.ell, params.alpha
        )))
    }
}

/// Trace regularity exponent `(1 - (log ell - log alpha) / log p) / 2`.
pub fn sigma<T: Real>(params: &TreeParams<T>) -> T {
    let half = lit::<T>(0.5);
    half * (T::one() - (params.ell.ln() - params.alpha.ln()) / params.p_real().ln())
}

/// `q(t) = (alpha p)^n` on generation `n`, for `0 < t < L`.
pub fn weight_q<T: Real>(params: &TreeParams<T>, t: T) -> Result<T> {
    if !(t > T::zero()) {
        return Err(Error::OutOfRange(format!("t = {t} outside (0, L)")));
    }
    let n = params.generation_of(t)?;
    Ok(powu(params.alpha_p(), n))
}

/// Normalization `sqrt(1 - ell/(alpha p))` of the radial profile.
pub fn rad_normalization<T: Real>(params: &TreeParams<T>) -> T {
    (T::one() - params.rate()).sqrt()
}

/// Normalization `p^n (alpha/ell)^{n/2} sqrt((alpha p - ell)/ell)` of `F_n`.
pub fn triple_normalization<T: Real>(params: &TreeParams<T>, n: usize) -> T {
    let pn = powu(params.p_real(), n);
    pn * powu(params.alpha / params.ell, n).sqrt()
        * ((params.alpha_p() - params.ell) / params.ell).sqrt()
}

/// Normalization for `nu = -1` (radial) or `nu = n`.
pub fn normalization<T: Real>(params: &TreeParams<T>, nu: i64) -> T {
    if nu < 0 {
        rad_normalization(params)
    } else {
        triple_normalization(params, nu as usize)
    }
}

/// Radial harmonic profile at `t in [0, L)`.
pub fn profile_f_rad<T: Real>(params: &TreeParams<T>, t: T) -> Result<T> {
    check_gate(params)?;
    let g = params.generation_of(t)?;
    let r = params.rate();
    let partial = (T::one() - powu(r, g)) / (T::one() - r);
    let local = (t - params.t(g as i64 - 1)) / powu(params.alpha_p(), g);
    Ok(rad_normalization(params) * (local + partial))
}

/// Profile `F_n` at `t in [t_n, L)`; vanishes at `t_n`.
pub fn profile_f_n<T: Real>(params: &TreeParams<T>, n: usize, t: T) -> Result<T> {
    check_gate(params)?;
    let tn = params.t(n as i64);
    if t < tn {
        return Err(Error::OutOfRange(format!("t = {t} below t_{n} = {tn}")));
    }
    let g = params.generation_of(t)?;
    let m = g - n;
    let r = params.rate();
    let partial = if m >= 1 {
        powu(r, n + 1) * (T::one() - powu(r, m - 1)) / (T::one() - r)
    } else {
        T::zero()
    };
    let local = (t - params.t(g as i64 - 1)) / powu(params.alpha_p(), g);
    Ok(triple_normalization(params, n) * (local + partial))
}

/// Profile `F_nu` for `nu = -1` (radial) or `nu = n`.
pub fn profile<T: Real>(params: &TreeParams<T>, nu: i64, t: T) -> Result<T> {
    if nu < 0 {
        profile_f_rad(params, t)
    } else {
        profile_f_n(params, nu as usize, t)
    }
}

/// Limit `F(t)` as `t -> L` for `nu = -1` or `nu = n`.
pub fn f_infty_nu<T: Real>(params: &TreeParams<T>, nu: i64) -> Result<T> {
    check_gate(params)?;
    let ap = params.alpha_p();
    Ok(if nu < 0 {
        (ap / (ap - params.ell)).sqrt()
    } else {
        (params.ell / (ap - params.ell) * powu(params.ell / params.alpha, nu as usize)).sqrt()
    })
}

pub fn f_infty<T: Real>(params: &TreeParams<T>, z: SymmetryIndex) -> Result<T> {
    f_infty_nu(params, z.nu())
}

/// Share of `||phi_z'||^2 = 1` carried by generations beyond `depth`.
pub fn tail_fraction<T: Real>(params: &TreeParams<T>, nu: i64, depth: usize) -> T {
    let gap = depth as i64 - nu;
    if gap <= 0 {
        T::one()
    } else {
        powu(params.rate(), gap as usize)
    }
}

/// A function on `(t_start, L)` sampled on the per-edge grids of the
/// generations `start+1 ..= depth`, continued past `t_depth` by
/// `tail * F_start`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile<T: Real> {
    params: TreeParams<T>,
    start: i64,
    depth: usize,
    m: usize,
    samples: Vec<C<T>>,
    tail: C<T>,
}

impl<T: Real> RadialProfile<T> {
    /// Validates the sample count, continuity between generations and, for
    /// `start >= 0`, the boundary condition `F(t_start) = 0`.
    pub fn new(
        params: TreeParams<T>,
        start: i64,
        depth: usize,
        m: usize,
        samples: Vec<C<T>>,
        tail: C<T>,
    ) -> Result<Self> {
        let f = Self { params, start, depth, m, samples, tail };
        if m < 2 || start < -1 {
            return Err(Error::ParameterDomain(format!("bad profile shape m = {m}, start = {start}")));
        }
        if f.samples.len() != f.generation_count() * m {
            return Err(Error::ParameterDomain(format!(
                "expected {} samples, got {}",
                f.generation_count() * m,
                f.samples.len()
            )));
        }
        let scale = f.samples.iter().fold(T::zero(), |a, v| a.max(v.norm()));
        let gens: Vec<usize> = f.generations().collect();
        for w in gens.windows(2) {
            let a = f.generation(w[0])[m - 1];
            let b = f.generation(w[1])[0];
            if (a - b).norm() > continuity_tolerance(scale) {
                return Err(Error::Continuity { n: w[1], k: 0, mismatch: (a - b).norm().to_f64().unwrap_or(f64::NAN) });
            }
        }
        if start >= 0 && !f.samples.is_empty() && f.samples[0].norm() > continuity_tolerance(scale) {
            return Err(Error::SupportMismatch(format!(
                "profile must vanish at t_{start}, found {}",
                f.samples[0]
            )));
        }
        Ok(f)
    }

    /// Samples `F` on the grids; `tail` continues it past the truncation.
    pub fn from_fn<F>(params: TreeParams<T>, start: i64, depth: usize, m: usize, tail: C<T>, f: F) -> Result<Self>
    where
        F: Fn(T) -> C<T>,
    {
        let first = (start + 1).max(0) as usize;
        let mut samples = Vec::new();
        for g in first..=depth {
            let a = params.t(g as i64 - 1);
            let h = params.edge_length(g) / count(m.max(2) - 1);
            for i in 0..m {
                samples.push(f(a + h * count(i)));
            }
        }
        Self::new(params, start, depth, m, samples, tail)
    }

    /// The normalized harmonic profile `F_nu` with unit tail coefficient.
    pub fn harmonic(params: TreeParams<T>, nu: i64, depth: usize, m: usize) -> Result<Self> {
        check_gate(&params)?;
        Self::from_fn(params, nu, depth, m, C::new(T::one(), T::zero()), |t| {
            Complex::new(profile(&params, nu, t).unwrap_or_else(|_| T::nan()), T::zero())
        })
    }

    pub fn start(&self) -> i64 {
        self.start
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn samples_per_edge(&self) -> usize {
        self.m
    }

    pub fn tail(&self) -> C<T> {
        self.tail
    }

    pub fn generations(&self) -> std::ops::RangeInclusive<usize> {
        let first = (self.start + 1).max(0) as usize;
        first..=self.depth
    }

    fn generation_count(&self) -> usize {
        let first = (self.start + 1).max(0) as usize;
        (self.depth + 1).saturating_sub(first)
    }

    /// Samples on generation `g`.
    pub fn generation(&self, g: usize) -> &[C<T>] {
        let first = (self.start + 1).max(0) as usize;
        let i = (g - first) * self.m;
        &self.samples[i..i + self.m]
    }

    /// Density of the one-dimensional space on generation `g`:
    /// `p^{-n} (alpha p)^g` for triples, `(alpha p)^g` for the radial space.
    fn density(&self, g: usize) -> T {
        let q = powu(self.params.alpha_p(), g);
        if self.start >= 0 {
            q / powu(self.params.p_real(), self.start as usize)
        } else {
            q
        }
    }

    fn compatible(&self, other: &Self) -> Result<()> {
        if self.params != other.params
            || self.start != other.start
            || self.depth != other.depth
            || self.m != other.m
        {
            return Err(Error::Incompatible("profiles live on different grids".into()));
        }
        Ok(())
    }

    /// Weighted `L^2` inner product over `(t_start, t_depth)`.
    pub fn inner(&self, other: &Self) -> Result<C<T>> {
        self.compatible(other)?;
        let mut acc = C::zero();
        for g in self.generations() {
            let h = self.params.edge_length(g) / count(self.m - 1);
            let (u, v) = (self.generation(g), other.generation(g));
            let mut s = C::zero();
            for i in 0..self.m - 1 {
                s = s + crate::scalar::linear_product(u[i], u[i + 1], v[i], v[i + 1]);
            }
            acc = acc + s * (self.density(g) * h);
        }
        Ok(acc)
    }

    pub fn norm_sq(&self) -> T {
        self.inner(self).map(|c| c.re).unwrap_or_else(|_| T::nan())
    }

    /// Weighted inner product of derivatives over `(t_start, t_depth)`.
    pub fn derivative_inner(&self, other: &Self) -> Result<C<T>> {
        self.compatible(other)?;
        let mut acc = C::zero();
        for g in self.generations() {
            let h = self.params.edge_length(g) / count(self.m - 1);
            let (u, v) = (self.generation(g), other.generation(g));
            let mut s = C::zero();
            for i in 0..self.m - 1 {
                s = s + (u[i + 1] - u[i]) * (v[i + 1] - v[i]).conj();
            }
            acc = acc + s * (self.density(g) / h);
        }
        Ok(acc)
    }

    pub fn max_abs(&self) -> T {
        self.samples.iter().fold(self.tail.norm(), |a, v| a.max(v.norm()))
    }
}

fn require_geometric<T: Real>(tree: &TreeTopology<T>) -> Result<()> {
    if tree.is_geometric() {
        Ok(())
    } else {
        Err(Error::Incompatible("operation requires the geometric tree".into()))
    }
}

/// Range of generation-`g` edges below `(n, k)` and the size of each branch.
fn subtree_block(p: usize, n: usize, k: usize, g: usize) -> (usize, usize) {
    let width = p.pow((g - n) as u32);
    (k * width, width / p)
}

/// `U_rad F` or `U_{n,k,s} F` as a tree function.
pub fn synth<T: Real>(
    z: SymmetryIndex,
    profile: &RadialProfile<T>,
    tree: Arc<TreeTopology<T>>,
) -> Result<TreeFunction<T>> {
    require_geometric(&tree)?;
    let p = tree.p();
    z.validate(p)?;
    if profile.start != z.nu() {
        return Err(Error::SupportMismatch(format!(
            "profile starts at generation {} but index {z} needs {}",
            profile.start,
            z.nu()
        )));
    }
    if profile.params != tree.params || profile.depth != tree.depth {
        return Err(Error::Incompatible("profile and tree differ in parameters or depth".into()));
    }
    let m = profile.m;
    let mut f = TreeFunction::zeros(tree.clone(), m);
    match z {
        SymmetryIndex::Rad => {
            for e in tree.edges() {
                f.edge_mut(e).copy_from_slice(profile.generation(e.n));
            }
        }
        SymmetryIndex::Triple { n, k, s } => {
            for g in profile.generations() {
                let (first, branch) = subtree_block(p, n, k, g);
                let src = profile.generation(g);
                for j in 0..p {
                    let th = theta::<T>(p, s, j);
                    for kk in first + j * branch..first + (j + 1) * branch {
                        for (dst, v) in f.edge_mut(EdgeId::new(g, kk)).iter_mut().zip(src) {
                            *dst = *v * th;
                        }
                    }
                }
            }
        }
    }
    let mut tail = HarmonicTail::new();
    if !profile.tail.is_zero() {
        tail.insert(z, profile.tail);
    }
    Ok(f.with_harmonic_tail(tail))
}

/// Adjoint of [`synth`]: the branch-character average of `f` onto the
/// one-dimensional space of `z`.
pub fn analyze<T: Real>(f: &TreeFunction<T>, z: SymmetryIndex) -> Result<RadialProfile<T>> {
    let tree = f.tree();
    require_geometric(tree)?;
    let p = tree.p();
    z.validate(p)?;
    let m = f.samples_per_edge();
    let depth = tree.depth;
    let pr = tree.params.p_real();
    let mut samples = Vec::new();
    match z {
        SymmetryIndex::Rad => {
            for g in 0..=depth {
                let mut acc = vec![C::zero(); m];
                for kk in 0..p.pow(g as u32) {
                    for (a, v) in acc.iter_mut().zip(f.edge(EdgeId::new(g, kk))) {
                        *a = *a + *v;
                    }
                }
                let scale = powu(pr, g).recip();
                samples.extend(acc.into_iter().map(|a| a * scale));
            }
        }
        SymmetryIndex::Triple { n, k, s } => {
            for g in n + 1..=depth {
                let (first, branch) = subtree_block(p, n, k, g);
                let mut acc = vec![C::zero(); m];
                for j in 0..p {
                    let th = theta::<T>(p, s, j).conj();
                    for kk in first + j * branch..first + (j + 1) * branch {
                        for (a, v) in acc.iter_mut().zip(f.edge(EdgeId::new(g, kk))) {
                            *a = *a + *v * th;
                        }
                    }
                }
                let scale = powu(pr, g - n).recip();
                samples.extend(acc.into_iter().map(|a| a * scale));
            }
        }
    }
    let tail = f.harmonic_tail().get(&z).copied().unwrap_or_else(C::zero);
    Ok(RadialProfile { params: tree.params, start: z.nu(), depth, m, samples, tail })
}

/// `phi_z = synth(z, F_nu(z))`.
pub fn basis_function<T: Real>(
    tree: Arc<TreeTopology<T>>,
    m: usize,
    z: SymmetryIndex,
) -> Result<TreeFunction<T>> {
    let prof = RadialProfile::harmonic(tree.params, z.nu(), tree.depth, m)?;
    synth(z, &prof, tree)
}

/// `sum_z b_z phi_z`, including the harmonic tail.
pub fn harmonic_combination<T: Real>(
    tree: Arc<TreeTopology<T>>,
    m: usize,
    coeffs: &BTreeMap<SymmetryIndex, C<T>>,
) -> Result<TreeFunction<T>> {
    require_geometric(&tree)?;
    check_gate(&tree.params)?;
    let p = tree.p();
    let depth = tree.depth;
    let mut profiles: BTreeMap<i64, RadialProfile<T>> = BTreeMap::new();
    let mut f = TreeFunction::zeros(tree.clone(), m);
    for (z, b) in coeffs {
        z.validate(p)?;
        let nu = z.nu();
        if !profiles.contains_key(&nu) {
            profiles.insert(nu, RadialProfile::harmonic(tree.params, nu, depth, m)?);
        }
        let prof = &profiles[&nu];
        match *z {
            SymmetryIndex::Rad => {
                for e in tree.edges() {
                    for (dst, v) in f.edge_mut(e).iter_mut().zip(prof.generation(e.n)) {
                        *dst = *dst + *v * *b;
                    }
                }
            }
            SymmetryIndex::Triple { n, k, s } => {
                for g in prof.generations() {
                    let (first, branch) = subtree_block(p, n, k, g);
                    let src = prof.generation(g);
                    for j in 0..p {
                        let w = theta::<T>(p, s, j) * *b;
                        for kk in first + j * branch..first + (j + 1) * branch {
                            for (dst, v) in f.edge_mut(EdgeId::new(g, kk)).iter_mut().zip(src) {
                                *dst = *dst + *v * w;
                            }
                        }
                    }
                }
            }
        }
    }
    let tail = coeffs.iter().filter(|(_, b)| !b.is_zero()).map(|(z, b)| (*z, *b)).collect();
    Ok(f.with_harmonic_tail(tail))
}

/// Branch character of `z` on edge `e` (zero outside the support).
fn character<T: Real>(z: SymmetryIndex, e: EdgeId, p: usize) -> C<T> {
    match z {
        SymmetryIndex::Rad => C::new(T::one(), T::zero()),
        SymmetryIndex::Triple { n, k, s } => match branch_of(EdgeId::new(n, k), e, p) {
            Some(j) => theta(p, s, j),
            None => C::zero(),
        },
    }
}

/// Gram matrix of `{phi_z}` for `<f', g'>`.
///
/// On generation `g` the derivative of `phi_z` is `c_nu chi_z / (alpha p)^g`
/// with branch character `chi_z`, so every entry is a character sum over the
/// first generation where both derivatives live times a geometric series in
/// `ell / (alpha p)`. No truncation is involved.
pub fn basis_gram<T: Real>(
    params: &TreeParams<T>,
    zs: &[SymmetryIndex],
    depth: usize,
) -> Result<Vec<Vec<C<T>>>> {
    check_gate(params)?;
    let p = params.p;
    for z in zs {
        z.validate(p)?;
        if z.nu() >= depth as i64 {
            return Err(Error::Depth(format!("index {z} not below depth {depth}")));
        }
    }
    let r = params.rate();
    let pr = params.p_real();
    let entry = |a: SymmetryIndex, b: SymmetryIndex| -> C<T> {
        let g0 = (a.nu().max(b.nu()) + 1) as usize;
        let deeper = if a.nu() >= b.nu() { a } else { b };
        let support: Vec<EdgeId> = match deeper {
            SymmetryIndex::Rad => vec![EdgeId::ROOT],
            SymmetryIndex::Triple { n, k, .. } => {
                (0..p).map(|j| EdgeId::new(n + 1, p * k + j)).collect()
            }
        };
        let sum: C<T> = support
            .iter()
            .map(|e| character::<T>(a, *e, p) * character::<T>(b, *e, p).conj())
            .fold(C::zero(), |x, y| x + y);
        let series = powu(r, g0) / (powu(pr, g0) * (T::one() - r));
        sum * (normalization(params, a.nu()) * normalization(params, b.nu()) * series)
    };
    Ok(zs.iter().map(|a| zs.iter().map(|b| entry(*a, *b)).collect()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric_tree::geometric_tree;

    fn params(p: usize, ell: f64, alpha: f64) -> TreeParams<f64> {
        TreeParams::new(p, ell, alpha).unwrap()
    }

    #[test]
    fn weight_examples() {
        let a = params(2, 0.5, 0.5);
        assert_eq!(weight_q(&a, 0.3).unwrap(), 1.0);
        assert_eq!(weight_q(&a, 1.2).unwrap(), 1.0);
        let b = params(2, 0.5, 1.0);
        assert_eq!(weight_q(&b, 1.2).unwrap(), 2.0);
        assert!(weight_q(&b, 2.0).is_err());
        assert!(weight_q(&b, 0.0).is_err());
    }

    #[test]
    fn gate_and_sigma() {
        let a = params(2, 0.5, 0.5);
        assert!(gate(&a));
        assert!((sigma(&a) - 0.5).abs() < 1e-15);
        let b = params(2, 0.5, 0.3);
        assert!(gate(&b));
        assert!((sigma(&b) - 0.131517).abs() < 1e-6);
        assert!(!gate(&params(2, 0.5, 0.2)));
        assert_eq!(sigma(&params(2, 0.5, 0.25)), 0.0);
    }

    #[test]
    fn profile_values() {
        let a = params(2, 0.5, 0.5);
        assert!((profile_f_rad(&a, 1.0).unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((f_infty(&a, SymmetryIndex::Rad).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert!((f_infty(&a, SymmetryIndex::triple(0, 0, 1)).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(profile_f_n(&a, 2, a.t(2)).unwrap(), 0.0);
        assert!(profile_f_rad(&params(2, 0.5, 0.2), 0.5).is_err());
    }

    #[test]
    fn profiles_approach_their_limits() {
        let a = params(3, 0.6, 0.3);
        for nu in [-1i64, 0, 2] {
            let lim = f_infty_nu(&a, nu).unwrap();
            let mut prev = f64::INFINITY;
            for big in [10i64, 25, 40] {
                let err = (lim - profile(&a, nu, a.t(big)).unwrap()).abs();
                assert!(err < prev);
                prev = err;
            }
            assert!(prev < 1e-6 * lim);
        }
    }

    #[test]
    fn character_sum_vanishes() {
        for p in 2..7 {
            for s in 1..p {
                let sum = (0..p).map(|j| theta::<f64>(p, s, j)).fold(C::<f64>::zero(), |a, b| a + b);
                assert!(sum.norm() < 1e-14);
            }
        }
    }

    #[test]
    fn synth_examples() {
        let pr = params(2, 0.5, 0.5);
        let tree = Arc::new(geometric_tree(pr, 3).unwrap());
        let one = RadialProfile::from_fn(pr, -1, 3, 3, C::zero(), |_| C::new(1.0, 0.0)).unwrap();
        let f = synth(SymmetryIndex::Rad, &one, tree.clone()).unwrap();
        assert!(f.values().iter().all(|v| *v == C::new(1.0, 0.0)));
        let lifted = RadialProfile::from_fn(pr, 0, 3, 3, C::zero(), |t| C::new(t, 0.0));
        assert!(lifted.is_err());
        let lin = RadialProfile::from_fn(pr, 0, 3, 3, C::zero(), |t| C::new(t - 1.0, 0.0)).unwrap();
        let g = synth(SymmetryIndex::triple(0, 0, 1), &lin, tree.clone()).unwrap();
        let v = g.vertex_values(2).unwrap();
        assert!((v[0].re - 0.75).abs() < 1e-15 && (v[1].re - 0.75).abs() < 1e-15);
        assert!((v[2].re + 0.75).abs() < 1e-12 && (v[3].re + 0.75).abs() < 1e-12);
        assert!(synth(SymmetryIndex::Rad, &lin, tree).is_err());
    }

    #[test]
    fn gram_examples() {
        let pr = params(2, 0.5, 0.5);
        let g = basis_gram(&pr, &[SymmetryIndex::Rad], 1).unwrap();
        assert!((g[0][0].re - 1.0).abs() < 1e-15);
        let zs = symmetry_indices(2, 2);
        assert_eq!(zs.len(), 4);
        let zs = [SymmetryIndex::triple(1, 0, 1), SymmetryIndex::triple(1, 1, 1)];
        let g = basis_gram(&pr, &zs, 2).unwrap();
        assert_eq!(g[0][1], C::zero());
    }

    #[test]
    fn index_json() {
        let zs = vec![SymmetryIndex::Rad, SymmetryIndex::triple(2, 3, 1)];
        let s = serde_json::to_string(&zs).unwrap();
        assert_eq!(s, r#"["rad",[2,3,1]]"#);
        let back: Vec<SymmetryIndex> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, zs);
    }
}
