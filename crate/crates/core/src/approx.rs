//! Function spaces on a decomposed box: cell-average projections, the
//! approximation norm in its two equivalent forms, the Besov norm through the
//! modulus of smoothness, and the Gagliardo seminorm.
//!
//! Every input is reduced to a piecewise-constant function on a uniform tensor
//! grid of the unit box ([`GridFn`]); projections, shifts and pairwise
//! integrals are then evaluated exactly on that grid.
//!
//! The Gagliardo seminorm is normalized as
//! `[f]^2 = (1/2) iint |f(x) - f(y)|^2 / |x - y|^{d + 2s} dx dy`,
//! i.e. each unordered pair of points is counted once.

use crate::error::{Error, Result};
use crate::multiscale::Decomposition;
use crate::scalar::{count, lit, C, Real};
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Piecewise-constant function on a uniform tensor grid over `(0, 1)^d`,
/// stored row-major (last axis fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct GridFn<T: Real> {
    shape: Vec<usize>,
    values: Vec<C<T>>,
}

impl<T: Real> GridFn<T> {
    pub fn new(shape: Vec<usize>, values: Vec<C<T>>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if shape.is_empty() || n != values.len() || n == 0 {
            return Err(Error::ParameterDomain(format!(
                "grid of shape {shape:?} needs {n} values, got {}",
                values.len()
            )));
        }
        Ok(Self { shape, values })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn values(&self) -> &[C<T>] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn cell_volume(&self) -> T {
        T::one() / count(self.values.len())
    }

    fn unravel(&self, mut i: usize, out: &mut [usize]) {
        for a in (0..self.shape.len()).rev() {
            out[a] = i % self.shape[a];
            i /= self.shape[a];
        }
    }

    fn ravel(shape: &[usize], idx: &[usize]) -> usize {
        idx.iter().zip(shape).fold(0, |acc, (i, s)| acc * s + i)
    }

    pub fn l2_sq(&self) -> T {
        self.values.iter().map(|v| v.norm_sqr()).sum::<T>() * self.cell_volume()
    }

    pub fn l2(&self) -> T {
        self.l2_sq().sqrt()
    }

    pub fn is_constant(&self) -> bool {
        let v0 = self.values[0];
        self.values.iter().all(|v| *v == v0)
    }

    /// Same function on a finer grid; each axis of `shape` must be a
    /// multiple of the current one.
    pub fn upsample(&self, shape: &[usize]) -> Result<Self> {
        if shape.len() != self.dim() || shape.iter().zip(&self.shape).any(|(t, s)| *t == 0 || t % s != 0) {
            return Err(Error::Resolution(format!("grid {shape:?} does not refine {:?}", self.shape)));
        }
        let b: Vec<usize> = shape.iter().zip(&self.shape).map(|(t, s)| t / s).collect();
        let total: usize = shape.iter().product();
        let mut idx = vec![0; self.dim()];
        let values = (0..total)
            .map(|mut i| {
                for a in (0..shape.len()).rev() {
                    idx[a] = (i % shape[a]) / b[a];
                    i /= shape[a];
                }
                self.values[Self::ravel(&self.shape, &idx)]
            })
            .collect();
        Ok(Self { shape: shape.to_vec(), values })
    }

    /// `self`, upsampled where needed so that it refines `coarse`.
    fn resolving(self, coarse: &[usize]) -> Result<Self> {
        if self.shape.iter().zip(coarse).all(|(f, c)| f % c == 0) {
            return Ok(self);
        }
        let target: Vec<usize> = self.shape.iter().zip(coarse).map(|(f, c)| *f.max(c)).collect();
        self.upsample(&target)
    }

    fn block_factors(&self, coarse: &[usize]) -> Result<Vec<usize>> {
        if coarse.len() != self.shape.len() {
            return Err(Error::Resolution("dimension mismatch".into()));
        }
        self.shape
            .iter()
            .zip(coarse)
            .map(|(f, c)| {
                if *c > 0 && f % c == 0 {
                    Ok(f / c)
                } else {
                    Err(Error::Resolution(format!("grid {:?} does not refine {coarse:?}", self.shape)))
                }
            })
            .collect()
    }

    /// Averages over the blocks of a coarser grid (row-major over `coarse`).
    pub fn block_means(&self, coarse: &[usize]) -> Result<Vec<C<T>>> {
        let b = self.block_factors(coarse)?;
        let ncoarse: usize = coarse.iter().product();
        let mut sums = vec![C::zero(); ncoarse];
        let mut idx = vec![0; self.dim()];
        let mut cidx = vec![0; self.dim()];
        for (i, v) in self.values.iter().enumerate() {
            self.unravel(i, &mut idx);
            for a in 0..idx.len() {
                cidx[a] = idx[a] / b[a];
            }
            let c = Self::ravel(coarse, &cidx);
            sums[c] = sums[c] + *v;
        }
        let per: T = count(b.iter().product());
        Ok(sums.into_iter().map(|s| s / per).collect())
    }

    /// `||f - E f||^2` where `E` averages over the blocks of `coarse`.
    pub fn block_residual_sq(&self, coarse: &[usize]) -> Result<T> {
        let means = self.block_means(coarse)?;
        let b = self.block_factors(coarse)?;
        let mut idx = vec![0; self.dim()];
        let mut cidx = vec![0; self.dim()];
        let mut acc = T::zero();
        for (i, v) in self.values.iter().enumerate() {
            self.unravel(i, &mut idx);
            for a in 0..idx.len() {
                cidx[a] = idx[a] / b[a];
            }
            acc = acc + (*v - means[Self::ravel(coarse, &cidx)]).norm_sqr();
        }
        Ok(acc * self.cell_volume())
    }

    /// `int_{Omega_h} |f(x + h) - f(x)|^2 dx` with
    /// `Omega_h = {x : x, x + h in Omega}`, evaluated exactly.
    pub fn shift_difference_sq(&self, h: &[T]) -> T {
        let d = self.dim();
        // For each axis the shift sends a grid cell to offsets q and q+1 with
        // overlap lengths (1 - rho) w and rho w.
        let mut parts: Vec<Vec<(i64, T)>> = Vec::with_capacity(d);
        for a in 0..d {
            let w = T::one() / count(self.shape[a]);
            let x = h[a] / w;
            let q = x.floor();
            let rho = x - q;
            let qi = q.to_i64().unwrap_or(i64::MAX / 4);
            let mut v = Vec::with_capacity(2);
            if rho < T::one() {
                v.push((qi, (T::one() - rho) * w));
            }
            if rho > T::zero() {
                v.push((qi + 1, rho * w));
            }
            parts.push(v);
        }
        let combos: usize = parts.iter().map(|v| v.len()).product();
        let mut idx = vec![0usize; d];
        let mut tgt = vec![0usize; d];
        let mut acc = T::zero();
        for (i, v) in self.values.iter().enumerate() {
            self.unravel(i, &mut idx);
            'combo: for c in 0..combos {
                let mut rem = c;
                let mut weight = T::one();
                for a in 0..d {
                    let (off, len) = parts[a][rem % parts[a].len()];
                    rem /= parts[a].len();
                    let t = idx[a] as i64 + off;
                    if t < 0 || t >= self.shape[a] as i64 {
                        continue 'combo;
                    }
                    tgt[a] = t as usize;
                    weight = weight * len;
                }
                acc = acc + (self.values[Self::ravel(&self.shape, &tgt)] - *v).norm_sqr() * weight;
            }
        }
        acc
    }
}

/// Anything reducible to a [`GridFn`] aligned with a decomposition.
pub trait DomainFn<T: Real> {
    fn decomposition(&self) -> &Decomposition<T>;
    fn grid(&self) -> GridFn<T>;
}

/// Element of `V_N`: constant on each generation-`N` cell.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseConstantFn<'a, T: Real> {
    dec: &'a Decomposition<T>,
    level: usize,
    values: Vec<C<T>>,
}

impl<'a, T: Real> PiecewiseConstantFn<'a, T> {
    pub fn new(dec: &'a Decomposition<T>, level: usize, values: Vec<C<T>>) -> Result<Self> {
        if level > dec.depth {
            return Err(Error::Depth(format!("level {level} exceeds decomposition depth {}", dec.depth)));
        }
        if values.len() != dec.cell_count(level) {
            return Err(Error::ParameterDomain(format!(
                "level {level} needs {} values, got {}",
                dec.cell_count(level),
                values.len()
            )));
        }
        Ok(Self { dec, level, values })
    }

    pub fn constant(dec: &'a Decomposition<T>, c: C<T>) -> Self {
        Self { dec, level: 0, values: vec![c] }
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn values(&self) -> &[C<T>] {
        &self.values
    }

    pub fn dec(&self) -> &'a Decomposition<T> {
        self.dec
    }

    pub fn l2(&self) -> T {
        self.values
            .iter()
            .enumerate()
            .map(|(k, v)| v.norm_sqr() * self.dec.volume(self.level, k))
            .sum::<T>()
            .sqrt()
    }

    /// Same function represented at a finer level.
    pub fn refine_to(&self, level: usize) -> Result<Self> {
        if level < self.level || level > self.dec.depth {
            return Err(Error::Depth(format!("cannot refine level {} to {level}", self.level)));
        }
        let factor = self.dec.p.pow((level - self.level) as u32);
        let values = (0..self.dec.cell_count(level)).map(|k| self.values[k / factor]).collect();
        Ok(Self { dec: self.dec, level, values })
    }

    /// `self + c * other` at the finer of the two levels.
    pub fn add_scaled(&self, c: C<T>, other: &Self) -> Result<Self> {
        let level = self.level.max(other.level);
        let (a, b) = (self.refine_to(level)?, other.refine_to(level)?);
        Ok(Self {
            dec: self.dec,
            level,
            values: a.values.iter().zip(&b.values).map(|(x, y)| *x + *y * c).collect(),
        })
    }

    pub fn l2_distance(&self, other: &Self) -> Result<T> {
        Ok(self.add_scaled(C::new(-T::one(), T::zero()), other)?.l2())
    }

    pub fn inner(&self, other: &Self) -> Result<C<T>> {
        let level = self.level.max(other.level);
        let (a, b) = (self.refine_to(level)?, other.refine_to(level)?);
        Ok(a.values
            .iter()
            .zip(&b.values)
            .enumerate()
            .map(|(k, (x, y))| *x * y.conj() * self.dec.volume(level, k))
            .fold(C::zero(), |s, v| s + v))
    }
}

impl<'a, T: Real> DomainFn<T> for PiecewiseConstantFn<'a, T> {
    fn decomposition(&self) -> &Decomposition<T> {
        self.dec
    }

    fn grid(&self) -> GridFn<T> {
        let shape = self.dec.grid_shape(self.level);
        let mut values = vec![C::zero(); self.values.len()];
        for (k, v) in self.values.iter().enumerate() {
            values[GridFn::<T>::ravel(&shape, self.dec.grid_index(self.level, k))] = *v;
        }
        GridFn { shape, values }
    }
}

/// Values at the centers of a uniform grid refining the finest cells.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFn<'a, T: Real> {
    dec: &'a Decomposition<T>,
    grid: GridFn<T>,
}

impl<'a, T: Real> SampledFn<'a, T> {
    /// Samples `f` at cell centers of a grid with `resolution[a]` cells along
    /// axis `a`; each resolution must be a multiple of the finest cell count.
    pub fn from_fn<F>(dec: &'a Decomposition<T>, resolution: &[usize], f: F) -> Result<Self>
    where
        F: Fn(&[T]) -> C<T>,
    {
        let finest = dec.grid_shape(dec.depth);
        if resolution.len() != dec.d
            || resolution.iter().zip(&finest).any(|(r, c)| *r == 0 || r % c != 0)
        {
            return Err(Error::Resolution(format!(
                "resolution {resolution:?} does not refine the finest cells {finest:?}"
            )));
        }
        let total: usize = resolution.iter().product();
        let mut values = Vec::with_capacity(total);
        let mut idx = vec![0usize; dec.d];
        let mut x = vec![T::zero(); dec.d];
        let half = lit::<T>(0.5);
        for i in 0..total {
            let mut rem = i;
            for a in (0..dec.d).rev() {
                idx[a] = rem % resolution[a];
                rem /= resolution[a];
            }
            for a in 0..dec.d {
                x[a] = (count::<T>(idx[a]) + half) / count(resolution[a]);
            }
            values.push(f(&x));
        }
        Ok(Self { dec, grid: GridFn { shape: resolution.to_vec(), values } })
    }
}

impl<'a, T: Real> DomainFn<T> for SampledFn<'a, T> {
    fn decomposition(&self) -> &Decomposition<T> {
        self.dec
    }

    fn grid(&self) -> GridFn<T> {
        self.grid.clone()
    }
}

fn cell_means<'a, T: Real>(f: &impl DomainFn<T>, dec: &'a Decomposition<T>, n: usize, grid: &GridFn<T>) -> Result<Vec<C<T>>> {
    let coarse = dec.grid_shape(n);
    let means = grid.block_means(&coarse)?;
    let _ = f;
    Ok((0..dec.cell_count(n)).map(|k| means[GridFn::<T>::ravel(&coarse, dec.grid_index(n, k))]).collect())
}

/// `P_n f`: cell averages on generation `n`.
pub fn project_pn<'a, T: Real, F: DomainFn<T>>(
    f: &'a F,
    n: usize,
) -> Result<PiecewiseConstantFn<'a, T>> {
    let dec = f.decomposition();
    if n > dec.depth {
        return Err(Error::Depth(format!("generation {n} exceeds decomposition depth {}", dec.depth)));
    }
    let grid = f.grid().resolving(&dec.grid_shape(n))?;
    let values = cell_means(f, dec, n, &grid)?;
    PiecewiseConstantFn::new(dec, n, values)
}

/// `Q_0 = P_0`, `Q_n = P_n - P_{n-1}`, represented on generation `n`.
pub fn detail_qn<'a, T: Real, F: DomainFn<T>>(
    f: &'a F,
    n: usize,
) -> Result<PiecewiseConstantFn<'a, T>> {
    let fine = project_pn(f, n)?;
    if n == 0 {
        return Ok(fine);
    }
    let coarse = project_pn(f, n - 1)?;
    fine.add_scaled(C::new(-T::one(), T::zero()), &coarse)
}

/// Both forms of the approximation norm with their truncation tails.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ApproxNorm<T: Real> {
    /// `(||P_0 f||^2 + sum_n p^{2nr/d} ||f - P_n f||^2)^{1/2}`.
    pub a_r: T,
    /// `(sum_n p^{2nr/d} ||Q_n f||^2)^{1/2}`.
    pub a_r_via_q: T,
    /// Last term of the first series.
    pub xi_tail: T,
    /// `p^{(N+1)r/d} ||f - P_N f||` at the deepest generation `N`.
    pub zeta_tail: T,
    pub resolved: bool,
}

pub fn approx_norm<T: Real, F: DomainFn<T>>(f: &F, r: T) -> Result<ApproxNorm<T>> {
    let dec = f.decomposition();
    let grid = f.grid().resolving(&dec.grid_shape(dec.depth))?;
    let p = count::<T>(dec.p);
    let d = count::<T>(dec.d);
    let factor = |n: usize| p.powf(lit::<T>(2.0) * count::<T>(n) * r / d);
    let mut xi_sq = Vec::with_capacity(dec.depth + 1);
    let mut zeta_sq = Vec::with_capacity(dec.depth + 1);
    let mut prev: Option<(Vec<C<T>>, Vec<usize>)> = None;
    for n in 0..=dec.depth {
        let shape = dec.grid_shape(n);
        xi_sq.push(factor(n) * grid.block_residual_sq(&shape)?);
        let means = grid.block_means(&shape)?;
        let vol = T::one() / count(means.len());
        let q_sq = match &prev {
            None => means.iter().map(|m| m.norm_sqr()).sum::<T>() * vol,
            Some((pm, pshape)) => {
                let b: Vec<usize> = shape.iter().zip(pshape).map(|(a, c)| a / c).collect();
                let mut idx = vec![0; shape.len()];
                let mut cidx = vec![0; shape.len()];
                let mut acc = T::zero();
                for (i, m) in means.iter().enumerate() {
                    let mut rem = i;
                    for a in (0..shape.len()).rev() {
                        idx[a] = rem % shape[a];
                        rem /= shape[a];
                    }
                    for a in 0..shape.len() {
                        cidx[a] = idx[a] / b[a];
                    }
                    acc = acc + (*m - pm[GridFn::<T>::ravel(pshape, &cidx)]).norm_sqr();
                }
                acc * vol
            }
        };
        zeta_sq.push(factor(n) * q_sq);
        prev = Some((means, shape));
    }
    let p0 = grid.block_means(&dec.grid_shape(0))?[0].norm_sqr() * dec.domain_volume;
    let a_r_sq = p0 + xi_sq.iter().copied().sum::<T>();
    let zeta_total = zeta_sq.iter().copied().sum::<T>();
    let xi_tail = xi_sq.last().copied().unwrap_or_else(T::zero).sqrt();
    let rest = grid.block_residual_sq(&dec.grid_shape(dec.depth))?;
    let zeta_tail = (factor(dec.depth + 1) * rest).sqrt();
    let a_r = a_r_sq.sqrt();
    let a_r_via_q = zeta_total.sqrt();
    let resolved = xi_tail <= lit::<T>(0.01) * a_r && zeta_tail <= lit::<T>(0.01) * a_r_via_q.max(T::min_positive_value());
    Ok(ApproxNorm { a_r, a_r_via_q, xi_tail, zeta_tail, resolved })
}

fn probe_directions<T: Real>(d: usize) -> Vec<Vec<T>> {
    let mut dirs = Vec::new();
    for a in 0..d {
        for sgn in [T::one(), -T::one()] {
            let mut e = vec![T::zero(); d];
            e[a] = sgn;
            dirs.push(e);
        }
    }
    if d > 1 {
        let norm = count::<T>(d).sqrt().recip();
        for mask in 0..(1usize << d) {
            dirs.push((0..d).map(|a| if mask >> a & 1 == 1 { -norm } else { norm }).collect());
        }
    }
    dirs
}

/// `w(f, t) = sup_{|h| <= t} ||f(. + h) - f||_{L^2(Omega_h)}`, with the
/// supremum taken over axis and diagonal directions and radii
/// `{t, t/2, t/4}`.
pub fn modulus_of_smoothness<T: Real, F: DomainFn<T>>(f: &F, t: T) -> Result<T> {
    if !(t > T::zero()) {
        return Err(Error::ParameterDomain(format!("t = {t} must be positive")));
    }
    Ok(grid_modulus(&f.grid(), t))
}

fn grid_modulus<T: Real>(g: &GridFn<T>, t: T) -> T {
    let mut best = T::zero();
    for dir in probe_directions::<T>(g.dim()) {
        for q in 0..3 {
            let len = t / count(1usize << q);
            let h: Vec<T> = dir.iter().map(|c| *c * len).collect();
            best = best.max(g.shift_difference_sq(&h));
        }
    }
    best.sqrt()
}

/// Norm assembled from a truncated series, with its tail diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SeriesNorm<T: Real> {
    /// `||f||_{L^2} + (sum_j W_j^2)^{1/2}` over the computed terms.
    pub value: T,
    pub l2: T,
    pub terms: Vec<T>,
    /// Geometric extrapolation of the omitted terms (l2-norm).
    pub tail: T,
    pub resolved: bool,
    pub divergent: bool,
}

/// Besov norm with `W_j = p^{sj/d} w(f, p^{-j/d})` for `j = 0..=depth`.
pub fn besov_norm<T: Real, F: DomainFn<T>>(f: &F, s: T) -> Result<SeriesNorm<T>> {
    besov_norm_to(f, s, f.decomposition().depth)
}

/// As [`besov_norm`] with an explicit last index `j_max`.
pub fn besov_norm_to<T: Real, F: DomainFn<T>>(f: &F, s: T, j_max: usize) -> Result<SeriesNorm<T>> {
    if !(s > T::zero() && s < T::one()) {
        return Err(Error::ParameterDomain(format!("s = {s} outside (0, 1)")));
    }
    let dec = f.decomposition();
    let g = f.grid();
    let p = count::<T>(dec.p);
    let d = count::<T>(dec.d);
    let terms: Vec<T> = (0..=j_max)
        .map(|j| {
            let jj = count::<T>(j);
            p.powf(s * jj / d) * grid_modulus(&g, p.powf(-jj / d))
        })
        .collect();
    let l2 = g.l2();
    Ok(series_norm(l2, terms))
}

fn series_norm<T: Real>(l2: T, terms: Vec<T>) -> SeriesNorm<T> {
    let sum_sq: T = terms.iter().map(|w| *w * *w).sum();
    let last = terms.last().copied().unwrap_or_else(T::zero);
    let (tail, divergent) = if last == T::zero() {
        (T::zero(), false)
    } else if terms.len() >= 2 && terms[terms.len() - 2] > T::zero() {
        let rho = last / terms[terms.len() - 2];
        if rho < T::one() - lit::<T>(1e-9) {
            (last * rho / (T::one() - rho * rho).sqrt(), false)
        } else {
            (T::infinity(), true)
        }
    } else {
        (T::infinity(), true)
    };
    let acc = sum_sq.sqrt();
    SeriesNorm {
        value: l2 + acc,
        l2,
        terms,
        tail,
        resolved: !divergent && last <= lit::<T>(0.01) * acc,
        divergent,
    }
}

/// Monte Carlo controls for the `d >= 2` Gagliardo path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarlo {
    pub samples: usize,
    pub seed: u64,
}

impl Default for MonteCarlo {
    fn default() -> Self {
        Self { samples: 1_000_000, seed: 0x5eed }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Gagliardo<T: Real> {
    /// `[f]^2`.
    pub squared: T,
    /// `[f]`.
    pub value: T,
    /// Standard error of `squared` (zero on the exact path).
    pub stderr: T,
    pub divergent: bool,
}

/// Gagliardo seminorm: exact pairwise formulas for `d = 1`, stratified Monte
/// Carlo over cell pairs for `d = 2`.
pub fn gagliardo_seminorm<T: Real, F: DomainFn<T>>(f: &F, s: T, mc: MonteCarlo) -> Result<Gagliardo<T>> {
    if !(s > T::zero() && s < T::one()) {
        return Err(Error::ParameterDomain(format!("s = {s} outside (0, 1)")));
    }
    let g = f.grid();
    if g.is_constant() {
        return Ok(Gagliardo { squared: T::zero(), value: T::zero(), stderr: T::zero(), divergent: false });
    }
    if s >= lit(0.5) {
        return Ok(Gagliardo { squared: T::infinity(), value: T::infinity(), stderr: T::zero(), divergent: true });
    }
    let (squared, stderr) = match g.dim() {
        1 => (gagliardo_1d(&g, s), T::zero()),
        2 => gagliardo_mc_2d(&g, s, mc)?,
        d => return Err(Error::ParameterDomain(format!("Gagliardo seminorm not implemented for d = {d}"))),
    };
    Ok(Gagliardo { squared, value: squared.sqrt(), stderr, divergent: false })
}

fn gagliardo_1d<T: Real>(g: &GridFn<T>, s: T) -> T {
    let n = g.shape[0];
    let e = T::one() - lit::<T>(2.0) * s;
    // Psi'' = u^{-1-2s}, Psi(0) = 0.
    let psi = |u: T| -> T {
        if u == T::zero() {
            T::zero()
        } else {
            u.powf(e) / (-lit::<T>(2.0) * s * e)
        }
    };
    let w = T::one() / count(n);
    let v = &g.values;
    let mut acc = T::zero();
    for gap in 1..n {
        let u = count::<T>(gap);
        let kernel = psi(u + T::one()) - lit::<T>(2.0) * psi(u) + psi(u - T::one());
        let s_gap: T = (0..n - gap).map(|a| (v[a] - v[a + gap]).norm_sqr()).sum();
        acc = acc + kernel * s_gap;
    }
    acc * w.powf(e)
}

/// Length of `{x in [a0, a1] : x + u in [b0, b1]}`.
fn overlap<T: Real>(a0: T, a1: T, b0: T, b1: T, u: T) -> T {
    (a1.min(b1 - u) - a0.max(b0 - u)).max(T::zero())
}

fn gagliardo_mc_2d<T: Real>(g: &GridFn<T>, s: T, mc: MonteCarlo) -> Result<(T, T)> {
    if mc.samples == 0 {
        return Err(Error::ParameterDomain("Monte Carlo needs at least one sample".into()));
    }
    let (n0, n1) = (g.shape[0], g.shape[1]);
    let mut pairs = Vec::new();
    for a in 0..g.values.len() {
        for b in a + 1..g.values.len() {
            let diff = (g.values[a] - g.values[b]).norm_sqr();
            if diff > T::zero() {
                pairs.push((a, b, diff));
            }
        }
    }
    let per_pair = (mc.samples / pairs.len().max(1)).max(1);
    let e = T::one() - lit::<T>(2.0) * s;
    let (w0, w1) = (T::one() / count(n0), T::one() / count(n1));
    let estimates: Vec<(T, T)> = pairs
        .par_iter()
        .enumerate()
        .map(|(pi, &(a, b, diff))| {
            let (ia, ja) = (a / n1, a % n1);
            let (ib, jb) = (b / n1, b % n1);
            let ax = (count::<T>(ia) * w0, count::<T>(ia + 1) * w0);
            let ay = (count::<T>(ja) * w1, count::<T>(ja + 1) * w1);
            let bx = (count::<T>(ib) * w0, count::<T>(ib + 1) * w0);
            let by = (count::<T>(jb) * w1, count::<T>(jb + 1) * w1);
            let ux = (bx.0 - ax.1).abs().max((bx.1 - ax.0).abs());
            let uy = (by.0 - ay.1).abs().max((by.1 - ay.0).abs());
            let rmax = (ux * ux + uy * uy).sqrt();
            let scale = T::TAU() * rmax.powf(e) / e;
            let mut rng = ChaCha8Rng::seed_from_u64(mc.seed);
            rng.set_stream(pi as u64);
            let (mut sum, mut sum_sq) = (T::zero(), T::zero());
            for _ in 0..per_pair {
                let theta = T::TAU() * lit::<T>(rng.gen::<f64>());
                let uu: f64 = rng.gen::<f64>();
                let r = rmax * lit::<T>(uu).powf(e.recip());
                if r == T::zero() {
                    continue;
                }
                let (ux, uy) = (r * theta.cos(), r * theta.sin());
                let x = scale * overlap(ax.0, ax.1, bx.0, bx.1, ux) * overlap(ay.0, ay.1, by.0, by.1, uy) / r;
                sum = sum + x;
                sum_sq = sum_sq + x * x;
            }
            let nn = count::<T>(per_pair);
            let mean = sum / nn;
            let var = if per_pair > 1 {
                ((sum_sq - sum * mean) / (nn - T::one())).max(T::zero())
            } else {
                T::zero()
            };
            (diff * mean, diff * diff * var / nn)
        })
        .collect();
    let total = estimates.iter().map(|e| e.0).sum::<T>();
    let var = estimates.iter().map(|e| e.1).sum::<T>();
    Ok((total, var.sqrt()))
}

/// All norms of one function at smoothness `r` (approximation) and `s`
/// (Besov, Gagliardo).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct NormBundle<T: Real> {
    pub l2: T,
    pub a_r: T,
    pub a_r_via_q: T,
    pub besov: T,
    pub gagliardo_semi: T,
    pub r: T,
    pub s: T,
}

/// Options shared by [`norm_bundle`] and [`equivalence_report`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormOptions {
    /// Last Besov index; defaults to the decomposition depth.
    pub besov_levels: Option<usize>,
    pub monte_carlo: MonteCarlo,
}

impl Default for NormOptions {
    fn default() -> Self {
        Self { besov_levels: None, monte_carlo: MonteCarlo::default() }
    }
}

pub fn norm_bundle<T: Real, F: DomainFn<T>>(f: &F, r: T, s: T, opts: NormOptions) -> Result<NormBundle<T>> {
    let a = approx_norm(f, r)?;
    let j = opts.besov_levels.unwrap_or(f.decomposition().depth);
    let b = besov_norm_to(f, s, j)?;
    let g = gagliardo_seminorm(f, s, opts.monte_carlo)?;
    Ok(NormBundle {
        l2: f.grid().l2(),
        a_r: a.a_r,
        a_r_via_q: a.a_r_via_q,
        besov: b.value,
        gagliardo_semi: g.value,
        r,
        s,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct EquivalenceRow<T: Real> {
    pub id: String,
    pub l2: T,
    pub a_r: T,
    pub besov: T,
    pub besov_tail: T,
    /// `||f||_{L^2} + [f]`.
    pub gagliardo_norm: T,
    pub gagliardo_stderr: T,
    pub ratio_a_besov: T,
    pub ratio_a_gagliardo: T,
    pub ratio_besov_gagliardo: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct RatioSummary<T: Real> {
    pub ratio: String,
    pub min: T,
    pub max: T,
    /// `max / min`, the empirical equivalence constant.
    pub spread: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct EquivalenceReport<T: Real> {
    pub r: T,
    pub rows: Vec<EquivalenceRow<T>>,
    pub summary: Vec<RatioSummary<T>>,
}

/// Approximation, Besov and Gagliardo-based norms at `s = r` for each member
/// of a family, with the spread of their pairwise ratios.
pub fn equivalence_report<T: Real>(
    family: &[(String, &dyn DomainFnDyn<T>)],
    r: T,
    opts: NormOptions,
) -> Result<EquivalenceReport<T>> {
    if !(r > T::zero() && r < lit(0.5)) {
        return Err(Error::ParameterDomain(format!("r = {r} outside (0, 1/2)")));
    }
    let mut rows = Vec::with_capacity(family.len());
    for (id, f) in family {
        let view = DynView(*f);
        let a = approx_norm(&view, r)?;
        let j = opts.besov_levels.unwrap_or(view.decomposition().depth);
        let b = besov_norm_to(&view, r, j)?;
        let g = gagliardo_seminorm(&view, r, opts.monte_carlo)?;
        let l2 = view.grid().l2();
        let gn = l2 + g.value;
        rows.push(EquivalenceRow {
            id: id.clone(),
            l2,
            a_r: a.a_r,
            besov: b.value,
            besov_tail: b.tail,
            gagliardo_norm: gn,
            gagliardo_stderr: g.stderr,
            ratio_a_besov: a.a_r / b.value,
            ratio_a_gagliardo: a.a_r / gn,
            ratio_besov_gagliardo: b.value / gn,
        });
    }
    let summarize = |name: &str, pick: &dyn Fn(&EquivalenceRow<T>) -> T| {
        let vals: Vec<T> = rows.iter().map(pick).collect();
        let min = vals.iter().copied().fold(T::infinity(), T::min);
        let max = vals.iter().copied().fold(T::neg_infinity(), T::max);
        RatioSummary { ratio: name.to_string(), min, max, spread: max / min }
    };
    let summary = vec![
        summarize("a_r/besov", &|row| row.ratio_a_besov),
        summarize("a_r/gagliardo", &|row| row.ratio_a_gagliardo),
        summarize("besov/gagliardo", &|row| row.ratio_besov_gagliardo),
    ];
    Ok(EquivalenceReport { r, rows, summary })
}

/// Object-safe view of [`DomainFn`] for heterogeneous families.
pub trait DomainFnDyn<T: Real> {
    fn dyn_decomposition(&self) -> &Decomposition<T>;
    fn dyn_grid(&self) -> GridFn<T>;
}

impl<T: Real, F: DomainFn<T>> DomainFnDyn<T> for F {
    fn dyn_decomposition(&self) -> &Decomposition<T> {
        self.decomposition()
    }

    fn dyn_grid(&self) -> GridFn<T> {
        self.grid()
    }
}

struct DynView<'a, T: Real>(&'a dyn DomainFnDyn<T>);

impl<'a, T: Real> DomainFn<T> for DynView<'a, T> {
    fn decomposition(&self) -> &Decomposition<T> {
        self.0.dyn_decomposition()
    }

    fn grid(&self) -> GridFn<T> {
        self.0.dyn_grid()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multiscale::{hypercube_decomposition, interval_decomposition};

    fn c(x: f64) -> C<f64> {
        C::new(x, 0.0)
    }

    #[test]
    fn projection_examples() {
        let dec = interval_decomposition::<f64>(2, 4).unwrap();
        let one = PiecewiseConstantFn::constant(&dec, c(1.0));
        for n in 0..=4 {
            assert!(project_pn(&one, n).unwrap().values().iter().all(|v| *v == c(1.0)));
        }
        let quarter = PiecewiseConstantFn::new(&dec, 2, vec![c(1.0), c(0.0), c(0.0), c(0.0)]).unwrap();
        assert_eq!(project_pn(&quarter, 1).unwrap().values(), &[c(0.5), c(0.0)]);
        assert_eq!(detail_qn(&one, 0).unwrap().values(), &[c(1.0)]);
        assert!(detail_qn(&one, 3).unwrap().values().iter().all(|v| *v == c(0.0)));
    }

    #[test]
    fn approx_norm_examples() {
        let dec = interval_decomposition::<f64>(2, 6).unwrap();
        let f = PiecewiseConstantFn::constant(&dec, c(-3.0));
        let a = approx_norm(&f, 0.3).unwrap();
        assert!((a.a_r - 3.0).abs() < 1e-14 && (a.a_r_via_q - 3.0).abs() < 1e-14);
        let n0 = 3;
        let mut v = vec![c(0.0); 16];
        let amp = 2f64.powf(n0 as f64 / 2.0);
        v[0] = c(amp);
        v[1] = c(-amp);
        let haar = PiecewiseConstantFn::new(&dec, 4, v).unwrap();
        assert!((haar.l2() - 1.0).abs() < 1e-14);
        let a = approx_norm(&haar, 0.3).unwrap();
        assert!((a.a_r_via_q - 2f64.powf(4.0 * 0.3)).abs() < 1e-12);
    }

    #[test]
    fn modulus_of_indicator() {
        let dec = interval_decomposition::<f64>(2, 1).unwrap();
        let f = PiecewiseConstantFn::new(&dec, 1, vec![c(1.0), c(0.0)]).unwrap();
        let w = modulus_of_smoothness(&f, 0.04).unwrap();
        assert!((w - 0.2).abs() < 1e-14);
        let one = PiecewiseConstantFn::constant(&dec, c(1.0));
        assert_eq!(modulus_of_smoothness(&one, 0.3).unwrap(), 0.0);
    }

    #[test]
    fn besov_of_indicator() {
        let dec = interval_decomposition::<f64>(2, 1).unwrap();
        let f = PiecewiseConstantFn::new(&dec, 1, vec![c(1.0), c(0.0)]).unwrap();
        let b = besov_norm_to(&f, 0.25, 30).unwrap();
        for j in 1..=30 {
            assert!((b.terms[j] - 2f64.powf(-(j as f64) / 4.0)).abs() < 1e-12);
        }
        assert!((b.terms[0] - 0.5f64.sqrt()).abs() < 1e-14);
        assert!(!b.divergent);
        let bad = besov_norm_to(&f, 0.6, 12).unwrap();
        assert!(bad.divergent);
        assert!(besov_norm(&f, 1.0).is_err());
    }

    #[test]
    fn gagliardo_indicator_anchor() {
        let dec = interval_decomposition::<f64>(2, 1).unwrap();
        let f = PiecewiseConstantFn::new(&dec, 1, vec![c(1.0), c(0.0)]).unwrap();
        let g = gagliardo_seminorm(&f, 0.25, MonteCarlo::default()).unwrap();
        assert!((g.squared - 4.0 * (2f64.sqrt() - 1.0)).abs() < 1e-12);
        let h = gagliardo_seminorm(&f, 0.5, MonteCarlo::default()).unwrap();
        assert!(h.divergent);
    }

    #[test]
    fn grid_alignment() {
        let dec = hypercube_decomposition::<f64>(2, 2, 3).unwrap();
        assert!(SampledFn::from_fn(&dec, &[3, 2], |_| c(1.0)).is_err());
        let f = SampledFn::from_fn(&dec, &[8, 8], |x| c(x[0] + 2.0 * x[1])).unwrap();
        let p1 = project_pn(&f, 1).unwrap();
        assert!((p1.values()[0].re - (0.25 + 1.0)).abs() < 1e-14);
        assert!((p1.values()[1].re - (0.75 + 1.0)).abs() < 1e-14);
    }
}
