//! Strongly balanced p-multiscale decompositions of the unit box.
//!
//! Generation `n + 1` splits every generation-`n` cell into `p` equal slabs
//! along axis `n mod d` (so the first split is along `x_1`), children ordered
//! left to right. Cell coordinates are generic so the nesting and volume
//! identities can be checked in exact rational arithmetic.

use crate::error::{Error, Result};
use num_traits::{FromPrimitive, Num, ToPrimitive};
use serde::{Deserialize, Serialize};
use std::fmt::Debug;

/// Coordinate type of cell corners (`f32`, `f64`, rationals).
pub trait Coord: Clone + PartialOrd + Num + FromPrimitive + ToPrimitive + Debug + Send + Sync {}

impl<X> Coord for X where X: Clone + PartialOrd + Num + FromPrimitive + ToPrimitive + Debug + Send + Sync {}

/// Axis-aligned open box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell<X> {
    pub lo: Vec<X>,
    pub hi: Vec<X>,
}

impl<X: Coord> Cell<X> {
    pub fn volume(&self) -> X {
        self.lo
            .iter()
            .zip(&self.hi)
            .fold(X::one(), |acc, (a, b)| acc * (b.clone() - a.clone()))
    }

    pub fn widths(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(a, b)| f64c(b) - f64c(a)).collect()
    }

    pub fn diam(&self) -> f64 {
        self.widths().iter().map(|w| w * w).sum::<f64>().sqrt()
    }

    /// Closed-box containment of `other`.
    pub fn contains_cell(&self, other: &Cell<X>) -> bool {
        self.lo.iter().zip(&other.lo).all(|(a, b)| a <= b)
            && self.hi.iter().zip(&other.hi).all(|(a, b)| b <= a)
    }

    /// Euclidean distance between the closures of two boxes.
    pub fn distance(&self, other: &Cell<X>) -> f64 {
        let mut s = 0.0;
        for i in 0..self.lo.len() {
            let gap = (f64c(&other.lo[i]) - f64c(&self.hi[i]))
                .max(f64c(&self.lo[i]) - f64c(&other.hi[i]))
                .max(0.0);
            s += gap * gap;
        }
        s.sqrt()
    }

    /// `|B \ (B + h)|` for a box `B`.
    pub fn shift_loss(&self, h: &[f64]) -> f64 {
        let w = self.widths();
        let vol: f64 = w.iter().product();
        let kept: f64 = w.iter().zip(h).map(|(wi, hi)| (wi - hi.abs()).max(0.0)).product();
        vol - kept
    }
}

fn f64c<X: ToPrimitive>(x: &X) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition<X> {
    pub d: usize,
    pub p: usize,
    pub depth: usize,
    /// `cells[n][k]`.
    cells: Vec<Vec<Cell<X>>>,
    /// Per-axis integer grid index of every cell, `grid[n][k][axis]`.
    grid: Vec<Vec<Vec<usize>>>,
    pub domain_volume: X,
}

/// Number of splits along `axis` performed in generations `1..=n`.
pub fn axis_splits(d: usize, n: usize, axis: usize) -> usize {
    if n > axis {
        (n - axis - 1) / d + 1
    } else {
        0
    }
}

/// The p-adic decomposition of `(0, 1)`.
pub fn interval_decomposition<X: Coord>(p: usize, depth: usize) -> Result<Decomposition<X>> {
    hypercube_decomposition(1, p, depth)
}

/// Alternating-axis decomposition of `(0, 1)^d`.
pub fn hypercube_decomposition<X: Coord>(d: usize, p: usize, depth: usize) -> Result<Decomposition<X>> {
    if d == 0 || p < 2 {
        return Err(Error::ParameterDomain(format!("need d >= 1 and p >= 2, got d = {d}, p = {p}")));
    }
    let mut grid: Vec<Vec<Vec<usize>>> = vec![vec![vec![0; d]]];
    for n in 0..depth {
        let axis = n % d;
        let mut next = Vec::with_capacity(grid[n].len() * p);
        for idx in &grid[n] {
            for j in 0..p {
                let mut child = idx.clone();
                child[axis] = idx[axis] * p + j;
                next.push(child);
            }
        }
        grid.push(next);
    }
    let conv = |v: usize| X::from_usize(v).expect("coordinate representable");
    let cells = grid
        .iter()
        .enumerate()
        .map(|(n, level)| {
            let dens: Vec<X> = (0..d).map(|a| conv(p.pow(axis_splits(d, n, a) as u32))).collect();
            level
                .iter()
                .map(|idx| Cell {
                    lo: idx.iter().zip(&dens).map(|(i, den)| conv(*i) / den.clone()).collect(),
                    hi: idx.iter().zip(&dens).map(|(i, den)| conv(*i + 1) / den.clone()).collect(),
                })
                .collect()
        })
        .collect();
    Ok(Decomposition { d, p, depth, cells, grid, domain_volume: X::one() })
}

/// Per-generation regularity measurements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationDiagnostics {
    pub n: usize,
    /// `max diam * p^{n/d}`.
    pub c1: f64,
    /// `max |Q \ (Q+h)| p^{n(d-1)/d} / |h|` over the probe set.
    pub c2: f64,
    /// Largest number of other cells within distance `p^{-n/d}`.
    pub neighbors: usize,
    /// Largest relative deviation of a cell volume from `|Omega| p^{-n}`.
    pub volume_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub c1_observed: f64,
    pub c2_observed: f64,
    pub k_observed: usize,
    pub per_generation: Vec<GenerationDiagnostics>,
}

impl<X: Coord> Decomposition<X> {
    pub fn cell(&self, n: usize, k: usize) -> &Cell<X> {
        &self.cells[n][k]
    }

    pub fn cells(&self, n: usize) -> &[Cell<X>] {
        &self.cells[n]
    }

    pub fn cell_count(&self, n: usize) -> usize {
        self.p.pow(n as u32)
    }

    /// Grid index of cell `(n, k)` along each axis.
    pub fn grid_index(&self, n: usize, k: usize) -> &[usize] {
        &self.grid[n][k]
    }

    /// Number of cells along each axis at generation `n`.
    pub fn grid_shape(&self, n: usize) -> Vec<usize> {
        (0..self.d).map(|a| self.p.pow(axis_splits(self.d, n, a) as u32)).collect()
    }

    /// Inverse of [`Self::grid_index`].
    pub fn index_of_grid(&self, n: usize, idx: &[usize]) -> usize {
        let mut k = 0;
        for step in 1..=n {
            let axis = (step - 1) % self.d;
            let later = axis_splits(self.d, n, axis) - axis_splits(self.d, step, axis);
            let j = (idx[axis] / self.p.pow(later as u32)) % self.p;
            k = k * self.p + j;
        }
        k
    }

    pub fn volume(&self, n: usize, k: usize) -> X {
        self.cells[n][k].volume()
    }

    pub fn volume_f64(&self, n: usize, k: usize) -> f64 {
        f64c(&self.volume(n, k))
    }

    pub fn domain_volume_f64(&self) -> f64 {
        f64c(&self.domain_volume)
    }

    /// Every generation-`n` cell has volume `|Omega| / p^n`.
    pub fn is_strongly_balanced(&self) -> bool {
        (0..=self.depth).all(|n| {
            let target = self.domain_volume.clone() / X::from_usize(self.cell_count(n)).expect("count");
            let t = f64c(&target);
            // Volumes are differences of coordinates, so rounding scales with |Omega|.
            let tol = 1e-12 * f64c(&self.domain_volume);
            self.cells[n].iter().all(|c| (f64c(&c.volume()) - t).abs() <= tol)
        })
    }

    /// Index `k` of the generation-`n` cell containing `x`.
    pub fn cell_of_point(&self, x: &[f64], n: usize) -> Result<usize> {
        if x.len() != self.d {
            return Err(Error::ParameterDomain(format!("point has {} coordinates, expected {}", x.len(), self.d)));
        }
        if n > self.depth {
            return Err(Error::Depth(format!("generation {n} exceeds depth {}", self.depth)));
        }
        let shape = self.grid_shape(n);
        let mut idx = Vec::with_capacity(self.d);
        for (a, (&xi, &cnt)) in x.iter().zip(&shape).enumerate() {
            if !(xi > 0.0 && xi < 1.0) {
                return Err(Error::OutOfRange(format!("coordinate {a} = {xi} outside (0, 1)")));
            }
            let s = xi * cnt as f64;
            let fl = s.floor();
            if (s - fl).abs() < 1e-12 || (fl + 1.0 - s).abs() < 1e-12 {
                return Err(Error::Boundary(format!("coordinate {a} = {xi} at generation {n}")));
            }
            idx.push(fl as usize);
        }
        Ok(self.index_of_grid(n, &idx))
    }

    /// Regularity constants measured on every generation.
    pub fn diagnostics(&self) -> Diagnostics {
        let d = self.d as f64;
        let p = self.p as f64;
        let mut directions: Vec<Vec<f64>> = Vec::new();
        for a in 0..self.d {
            for sgn in [1.0, -1.0] {
                let mut e = vec![0.0; self.d];
                e[a] = sgn;
                directions.push(e);
            }
        }
        if self.d > 1 {
            for mask in 0..(1usize << self.d) {
                directions.push(
                    (0..self.d)
                        .map(|a| if mask >> a & 1 == 1 { -1.0 } else { 1.0 } / d.sqrt())
                        .collect(),
                );
            }
        }
        let mut per_generation = Vec::with_capacity(self.depth + 1);
        for n in 0..=self.depth {
            let scale = p.powf(n as f64 / d);
            let target = self.domain_volume_f64() / p.powi(n as i32);
            let mut c1: f64 = 0.0;
            let mut c2: f64 = 0.0;
            let mut volume_error: f64 = 0.0;
            for cell in &self.cells[n] {
                c1 = c1.max(cell.diam() * scale);
                volume_error = volume_error.max((f64c(&cell.volume()) - target).abs() / target);
                for dir in &directions {
                    for q in 0..4 {
                        let len = 0.5f64.powi(q) / scale;
                        let h: Vec<f64> = dir.iter().map(|c| c * len).collect();
                        let loss = cell.shift_loss(&h);
                        c2 = c2.max(loss * p.powf(n as f64 * (d - 1.0) / d) / len);
                    }
                }
            }
            per_generation.push(GenerationDiagnostics {
                n,
                c1,
                c2,
                neighbors: self.max_neighbors(n, 1.0 / scale),
                volume_error,
            });
        }
        Diagnostics {
            c1_observed: per_generation.iter().map(|g| g.c1).fold(0.0, f64::max),
            c2_observed: per_generation.iter().map(|g| g.c2).fold(0.0, f64::max),
            k_observed: per_generation.iter().map(|g| g.neighbors).max().unwrap_or(0),
            per_generation,
        }
    }

    /// Largest count of other generation-`n` cells within distance `radius`,
    /// scanning only grid offsets that can reach that far.
    fn max_neighbors(&self, n: usize, radius: f64) -> usize {
        let shape = self.grid_shape(n);
        let reach: Vec<usize> = shape.iter().map(|&c| (radius * c as f64).ceil() as usize + 1).collect();
        let tol = 1e-12 * radius;
        let mut best = 0;
        for k in 0..self.cell_count(n) {
            let me = &self.cells[n][k];
            let base = self.grid_index(n, k);
            let mut count = 0;
            let mut offset: Vec<i64> = reach.iter().map(|r| -(*r as i64)).collect();
            loop {
                let cand: Option<Vec<usize>> = base
                    .iter()
                    .zip(&offset)
                    .zip(&shape)
                    .map(|((b, o), s)| {
                        let v = *b as i64 + o;
                        (v >= 0 && v < *s as i64).then_some(v as usize)
                    })
                    .collect();
                if let Some(idx) = cand {
                    if offset.iter().any(|o| *o != 0) {
                        let other = &self.cells[n][self.index_of_grid(n, &idx)];
                        if me.distance(other) <= radius + tol {
                            count += 1;
                        }
                    }
                }
                let mut a = 0;
                loop {
                    if a == offset.len() {
                        break;
                    }
                    offset[a] += 1;
                    if offset[a] > reach[a] as i64 {
                        offset[a] = -(reach[a] as i64);
                        a += 1;
                    } else {
                        break;
                    }
                }
                if a == offset.len() {
                    break;
                }
            }
            best = best.max(count);
        }
        best
    }

    /// Serializable cell list.
    pub fn describe(&self) -> DecompositionData {
        DecompositionData {
            d: self.d,
            p: self.p,
            depth: self.depth,
            cells: (0..=self.depth)
                .flat_map(|n| {
                    self.cells[n].iter().enumerate().map(move |(k, c)| CellData {
                        n,
                        k,
                        lo: c.lo.iter().map(f64c).collect(),
                        hi: c.hi.iter().map(f64c).collect(),
                    })
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionData {
    pub d: usize,
    pub p: usize,
    pub depth: usize,
    pub cells: Vec<CellData>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellData {
    pub n: usize,
    pub k: usize,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;

    type Q = Ratio<i64>;

    #[test]
    fn interval_cells() {
        let dec = interval_decomposition::<f64>(2, 1).unwrap();
        assert_eq!(dec.cell(1, 0), &Cell { lo: vec![0.0], hi: vec![0.5] });
        assert_eq!(dec.cell(1, 1), &Cell { lo: vec![0.5], hi: vec![1.0] });
        let q = interval_decomposition::<Q>(3, 2).unwrap();
        assert_eq!(q.cell(2, 4), &Cell { lo: vec![Q::new(4, 9)], hi: vec![Q::new(5, 9)] });
        for n in 0..=2 {
            for k in 0..q.cell_count(n) {
                assert_eq!(q.volume(n, k), Q::new(1, 3i64.pow(n as u32)));
            }
        }
    }

    #[test]
    fn hypercube_cells() {
        let dec = hypercube_decomposition::<f64>(2, 2, 2).unwrap();
        assert_eq!(dec.cell(1, 0), &Cell { lo: vec![0.0, 0.0], hi: vec![0.5, 1.0] });
        assert_eq!(dec.cell(1, 1), &Cell { lo: vec![0.5, 0.0], hi: vec![1.0, 1.0] });
        assert_eq!(dec.cell(2, 0), &Cell { lo: vec![0.0, 0.0], hi: vec![0.5, 0.5] });
        assert_eq!(dec.cell(2, 1), &Cell { lo: vec![0.0, 0.5], hi: vec![0.5, 1.0] });
        assert!(dec.is_strongly_balanced());
    }

    #[test]
    fn rational_nesting_is_exact() {
        let dec = hypercube_decomposition::<Q>(3, 3, 4).unwrap();
        for n in 0..4 {
            for k in 0..dec.cell_count(n) {
                let parent = dec.cell(n, k);
                let mut total = Q::from_integer(0);
                for j in 0..3 {
                    let child = dec.cell(n + 1, 3 * k + j);
                    assert!(parent.contains_cell(child));
                    total += child.volume();
                }
                assert_eq!(total, parent.volume());
            }
        }
    }

    #[test]
    fn grid_index_roundtrip() {
        let dec = hypercube_decomposition::<f64>(3, 2, 7).unwrap();
        for n in 0..=7 {
            for k in 0..dec.cell_count(n) {
                assert_eq!(dec.index_of_grid(n, dec.grid_index(n, k)), k);
            }
        }
    }

    #[test]
    fn point_location() {
        let dec = interval_decomposition::<f64>(2, 4).unwrap();
        assert_eq!(dec.cell_of_point(&[0.3], 2).unwrap(), 1);
        assert!(matches!(dec.cell_of_point(&[0.5], 1), Err(Error::Boundary(_))));
        let sq = hypercube_decomposition::<f64>(2, 2, 4).unwrap();
        assert_eq!(sq.cell_of_point(&[0.9, 0.1], 1).unwrap(), 1);
        let k = sq.cell_of_point(&[0.3, 0.7], 4).unwrap();
        assert_eq!(sq.cell_of_point(&[0.3, 0.7], 3).unwrap(), k / 2);
    }

    #[test]
    fn diagnostics_bounds() {
        let line = interval_decomposition::<f64>(2, 8).unwrap().diagnostics();
        assert!((line.c1_observed - 1.0).abs() < 1e-15);
        assert!(line.per_generation.iter().all(|g| g.neighbors <= 4));
        let sq = hypercube_decomposition::<f64>(2, 2, 8).unwrap().diagnostics();
        assert!(sq.c1_observed <= 2.0 * 2f64.sqrt() + 1e-12);
        assert!(sq.c2_observed.is_finite());
    }
}
