//! Uniform cubic grids and node-indexed scalar fields.
//!
//! Nodes are linearized x-fastest: `index = i + n*j + n*n*k`, so the six
//! stencil neighbours of an interior node sit at offsets `±1`, `±n`, `±n²`.

use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::Vec3;

/// Uniform grid with the same node count and spacing on every axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    lower: Vec3,
    n: usize,
    spacing: f64,
}

impl Grid {
    /// Grid over the cube `[lower, lower + extent]` with `n` nodes per axis.
    pub fn new(lower: Vec3, extent: f64, n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidArgument(format!(
                "grid needs at least 3 nodes per axis, got {n}"
            )));
        }
        if !(extent > 0.0 && extent.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "grid extent must be positive, got {extent}"
            )));
        }
        if lower.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument("grid corner must be finite".into()));
        }
        Ok(Self {
            lower,
            n,
            spacing: extent / (n - 1) as f64,
        })
    }

    /// Grid over the benchmark box `[-10, 10]^3`.
    pub fn benchmark(n: usize) -> Result<Self> {
        Self::new([-10.0; 3], 20.0, n)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn lower(&self) -> Vec3 {
        self.lower
    }

    pub fn extent(&self) -> f64 {
        self.spacing * (self.n - 1) as f64
    }

    /// Total number of nodes, `n^3`.
    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Linear index of node `(i, j, k)`. Indices are not checked.
    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        debug_assert!(i < self.n && j < self.n && k < self.n);
        i + self.n * (j + self.n * k)
    }

    #[inline]
    pub fn coords(&self, index: usize) -> (usize, usize, usize) {
        let n = self.n;
        (index % n, (index / n) % n, index / (n * n))
    }

    fn check(&self, i: usize, j: usize, k: usize) -> Result<()> {
        if i >= self.n || j >= self.n || k >= self.n {
            return Err(Error::IndexOutOfRange { i, j, k, n: self.n });
        }
        Ok(())
    }

    /// Position of node `(i, j, k)`.
    pub fn node_position(&self, i: usize, j: usize, k: usize) -> Result<Vec3> {
        self.check(i, j, k)?;
        Ok(self.position(i, j, k))
    }

    /// Unchecked variant of [`Grid::node_position`] for hot loops.
    #[inline]
    pub fn position(&self, i: usize, j: usize, k: usize) -> Vec3 {
        let h = self.spacing;
        [
            self.lower[0] + h * i as f64,
            self.lower[1] + h * j as f64,
            self.lower[2] + h * k as f64,
        ]
    }

    #[inline]
    pub fn position_of(&self, index: usize) -> Vec3 {
        let (i, j, k) = self.coords(index);
        self.position(i, j, k)
    }

    pub fn is_boundary(&self, i: usize, j: usize, k: usize) -> Result<bool> {
        self.check(i, j, k)?;
        Ok(self.on_boundary(i, j, k))
    }

    #[inline]
    pub fn on_boundary(&self, i: usize, j: usize, k: usize) -> bool {
        let last = self.n - 1;
        i == 0 || j == 0 || k == 0 || i == last || j == last || k == last
    }

    #[inline]
    pub fn is_boundary_index(&self, index: usize) -> bool {
        let (i, j, k) = self.coords(index);
        self.on_boundary(i, j, k)
    }

    /// Whether `p` lies in the closed cube covered by the grid.
    pub fn contains(&self, p: Vec3) -> bool {
        let upper = self.extent();
        (0..3).all(|a| {
            let t = p[a] - self.lower[a];
            (0.0..=upper).contains(&t)
        })
    }

    /// Number of nodes with no index on the boundary, `(n-2)^3`.
    pub fn interior_len(&self) -> usize {
        (self.n - 2).pow(3)
    }
}

/// Real values attached to every node of a [`Grid`].
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn constant(grid: Grid, value: f64) -> Self {
        Self {
            grid,
            values: vec![value; grid.len()],
        }
    }

    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "field needs {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(Self { grid, values })
    }

    /// Samples `f` at every node position.
    pub fn from_fn<F>(grid: Grid, f: F) -> Self
    where
        F: Fn(Vec3) -> f64 + Sync,
    {
        let mut values = vec![0.0; grid.len()];
        values
            .par_iter_mut()
            .enumerate()
            .for_each(|(idx, v)| *v = f(grid.position_of(idx)));
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[self.grid.index(i, j, k)]
    }

    pub fn set(&mut self, i: usize, j: usize, k: usize, value: f64) {
        let idx = self.grid.index(i, j, k);
        self.values[idx] = value;
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub(crate) fn same_grid(&self, other: &ScalarField) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    /// Writes the full field as ASCII: a `N h xmin ymin zmin` header line,
    /// then one value per line in x-fastest order with 17 significant digits.
    pub fn write_ascii<W: Write>(&self, mut out: W) -> Result<()> {
        let g = &self.grid;
        let lo = g.lower();
        writeln!(
            out,
            "{} {:.16e} {:.16e} {:.16e} {:.16e}",
            g.n(),
            g.spacing(),
            lo[0],
            lo[1],
            lo[2]
        )?;
        for v in &self.values {
            writeln!(out, "{v:.16e}")?;
        }
        out.flush()?;
        Ok(())
    }
}
