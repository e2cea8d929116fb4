//! Regular grids, squared-slowness models, target/background partitions and
//! the velocity box constraint.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Regular 2D grid. Node `(ix, iz)` sits at `(x0 + ix*dx, z0 + iz*dz)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub nx: usize,
    pub nz: usize,
    pub dx: f64,
    pub dz: f64,
    #[serde(default)]
    pub x0: f64,
    #[serde(default)]
    pub z0: f64,
}

impl Grid {
    pub fn new(nx: usize, nz: usize, dx: f64, dz: f64) -> Result<Self> {
        Self::with_origin(nx, nz, dx, dz, 0.0, 0.0)
    }

    pub fn with_origin(nx: usize, nz: usize, dx: f64, dz: f64, x0: f64, z0: f64) -> Result<Self> {
        let grid = Grid {
            nx,
            nz,
            dx,
            dz,
            x0,
            z0,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx < 3 || self.nz < 3 {
            return Err(Error::Grid(format!(
                "need at least 3x3 nodes, got {}x{}",
                self.nx, self.nz
            )));
        }
        if !(self.dx > 0.0 && self.dz > 0.0 && self.dx.is_finite() && self.dz.is_finite()) {
            return Err(Error::Grid(format!(
                "spacing must be positive, got dx={} dz={}",
                self.dx, self.dz
            )));
        }
        if !(self.x0.is_finite() && self.z0.is_finite()) {
            return Err(Error::Grid("origin must be finite".into()));
        }
        Ok(())
    }

    /// Number of nodes `n = nx * nz`.
    pub fn len(&self) -> usize {
        self.nx * self.nz
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, ix: usize, iz: usize) -> usize {
        iz * self.nx + ix
    }

    #[inline]
    pub fn coords(&self, index: usize) -> (usize, usize) {
        (index % self.nx, index / self.nx)
    }

    pub fn x(&self, ix: usize) -> f64 {
        self.x0 + ix as f64 * self.dx
    }

    pub fn z(&self, iz: usize) -> f64 {
        self.z0 + iz as f64 * self.dz
    }

    pub fn position(&self, index: usize) -> (f64, f64) {
        let (ix, iz) = self.coords(index);
        (self.x(ix), self.z(iz))
    }

    pub fn x_max(&self) -> f64 {
        self.x(self.nx - 1)
    }

    pub fn z_max(&self) -> f64 {
        self.z(self.nz - 1)
    }

    /// True when the point lies in the closed node hull `[x0, x_max] x [z0, z_max]`.
    pub fn contains_point(&self, x: f64, z: f64) -> bool {
        let tol_x = 1e-9 * self.dx;
        let tol_z = 1e-9 * self.dz;
        x >= self.x0 - tol_x
            && x <= self.x_max() + tol_x
            && z >= self.z0 - tol_z
            && z <= self.z_max() + tol_z
    }

    /// Nearest node to a point inside the node hull. Ties go to the lower index.
    pub fn nearest_node(&self, x: f64, z: f64) -> Result<usize> {
        if !(x.is_finite() && z.is_finite()) || !self.contains_point(x, z) {
            return Err(Error::Geometry(format!(
                "point ({x}, {z}) lies outside the interior grid [{}, {}] x [{}, {}]",
                self.x0,
                self.x_max(),
                self.z0,
                self.z_max()
            )));
        }
        let ix = nearest_axis((x - self.x0) / self.dx, self.nx);
        let iz = nearest_axis((z - self.z0) / self.dz, self.nz);
        Ok(self.index(ix, iz))
    }
}

fn nearest_axis(t: f64, n: usize) -> usize {
    let lo = t.floor();
    let i = if t - lo <= 0.5 { lo } else { lo + 1.0 };
    (i.max(0.0) as usize).min(n - 1)
}

/// Squared-slowness model (s^2/m^2) on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    grid: Grid,
    values: Vec<f64>,
}

impl Model {
    pub fn from_slowness2(grid: Grid, values: Vec<f64>) -> Result<Self> {
        grid.validate()?;
        if values.len() != grid.len() {
            return Err(Error::shape(format!(
                "model has {} values, grid has {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::Model(format!(
                "squared slowness at node {i} is {} (must be positive and finite)",
                values[i]
            )));
        }
        Ok(Model { grid, values })
    }

    pub fn from_velocity(grid: Grid, velocity: &[f64]) -> Result<Self> {
        if let Some(i) = velocity.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::Model(format!(
                "velocity at node {i} is {} (must be positive and finite)",
                velocity[i]
            )));
        }
        Self::from_slowness2(grid, velocity.iter().map(|v| 1.0 / (v * v)).collect())
    }

    pub fn homogeneous(grid: Grid, velocity: f64) -> Result<Self> {
        Self::from_velocity(grid, &vec![velocity; grid.len()])
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn velocity(&self) -> Vec<f64> {
        self.values.iter().map(|m| 1.0 / m.sqrt()).collect()
    }

    pub fn max_velocity(&self) -> f64 {
        let m_min = self.values.iter().copied().fold(f64::INFINITY, f64::min);
        1.0 / m_min.sqrt()
    }

    /// Replaces the values at `indices` and re-validates them.
    pub fn with_values_at(&self, indices: &[usize], sub: &[f64]) -> Result<Self> {
        if indices.len() != sub.len() {
            return Err(Error::shape(format!(
                "{} indices but {} values",
                indices.len(),
                sub.len()
            )));
        }
        let mut values = self.values.clone();
        for (&i, &v) in indices.iter().zip(sub) {
            values[i] = v;
        }
        Model::from_slowness2(self.grid, values)
    }
}

/// Axis-aligned rectangle in physical coordinates, half-open `[xmin, xmax) x [zmin, zmax)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rect {
    pub xmin: f64,
    pub xmax: f64,
    pub zmin: f64,
    pub zmax: f64,
}

impl Rect {
    pub fn new(xmin: f64, xmax: f64, zmin: f64, zmax: f64) -> Self {
        Rect {
            xmin,
            xmax,
            zmin,
            zmax,
        }
    }

    pub fn contains(&self, x: f64, z: f64) -> bool {
        x >= self.xmin && x < self.xmax && z >= self.zmin && z < self.zmax
    }
}

/// Split of grid nodes into background (set 1) and target (set 2).
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    n: usize,
    target: Vec<usize>,
    background: Vec<usize>,
}

impl Partition {
    /// Assigns every node whose position lies inside any rectangle to the target.
    pub fn from_rects(grid: &Grid, rects: &[Rect]) -> Result<Self> {
        grid.validate()?;
        if rects.is_empty() {
            return Err(Error::DegeneratePartition(
                "no target rectangles given".into(),
            ));
        }
        // Rectangles may extend half a cell past the outer nodes.
        let (lo_x, hi_x) = (grid.x0 - 0.5 * grid.dx, grid.x_max() + 0.5 * grid.dx);
        let (lo_z, hi_z) = (grid.z0 - 0.5 * grid.dz, grid.z_max() + 0.5 * grid.dz);
        let eps = 1e-9 * grid.dx.max(grid.dz);
        for r in rects {
            let finite = r.xmin.is_finite()
                && r.xmax.is_finite()
                && r.zmin.is_finite()
                && r.zmax.is_finite();
            if !finite || r.xmin >= r.xmax || r.zmin >= r.zmax {
                return Err(Error::Geometry(format!("malformed rectangle {r:?}")));
            }
            if r.xmin < lo_x - eps
                || r.xmax > hi_x + eps
                || r.zmin < lo_z - eps
                || r.zmax > hi_z + eps
            {
                return Err(Error::Geometry(format!(
                    "rectangle {r:?} extends outside the grid [{lo_x}, {hi_x}) x [{lo_z}, {hi_z})"
                )));
            }
        }
        let mut mask = vec![false; grid.len()];
        for iz in 0..grid.nz {
            let z = grid.z(iz);
            for ix in 0..grid.nx {
                let x = grid.x(ix);
                if rects.iter().any(|r| r.contains(x, z)) {
                    mask[grid.index(ix, iz)] = true;
                }
            }
        }
        if !mask.iter().any(|&t| t) {
            return Err(Error::DegeneratePartition(
                "no node falls inside the target rectangles".into(),
            ));
        }
        Ok(Self::from_mask(&mask))
    }

    /// Builds a partition from a per-node target mask. An empty background is allowed.
    pub fn from_mask(mask: &[bool]) -> Self {
        let mut target = Vec::new();
        let mut background = Vec::new();
        for (i, &t) in mask.iter().enumerate() {
            if t {
                target.push(i);
            } else {
                background.push(i);
            }
        }
        Partition {
            n: mask.len(),
            target,
            background,
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn target(&self) -> &[usize] {
        &self.target
    }

    pub fn background(&self) -> &[usize] {
        &self.background
    }

    pub fn n_target(&self) -> usize {
        self.target.len()
    }

    pub fn n_background(&self) -> usize {
        self.background.len()
    }

    pub fn is_target_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.n];
        for &i in &self.target {
            mask[i] = true;
        }
        mask
    }

    pub fn restrict_target<T: Copy>(&self, x: &[T]) -> Result<Vec<T>> {
        self.check_full(x.len())?;
        Ok(gather(x, &self.target))
    }

    pub fn restrict_background<T: Copy>(&self, x: &[T]) -> Result<Vec<T>> {
        self.check_full(x.len())?;
        Ok(gather(x, &self.background))
    }

    /// Inverse of the two restrictions.
    pub fn merge<T: Copy + Default>(&self, background: &[T], target: &[T]) -> Result<Vec<T>> {
        if background.len() != self.background.len() || target.len() != self.target.len() {
            return Err(Error::shape(format!(
                "merge expects ({}, {}) values, got ({}, {})",
                self.background.len(),
                self.target.len(),
                background.len(),
                target.len()
            )));
        }
        let mut out = vec![T::default(); self.n];
        scatter(&mut out, &self.background, background);
        scatter(&mut out, &self.target, target);
        Ok(out)
    }

    fn check_full(&self, len: usize) -> Result<()> {
        if len != self.n {
            return Err(Error::shape(format!(
                "expected {} values, got {len}",
                self.n
            )));
        }
        Ok(())
    }
}

pub(crate) fn gather<T: Copy>(x: &[T], idx: &[usize]) -> Vec<T> {
    idx.iter().map(|&i| x[i]).collect()
}

pub(crate) fn scatter<T: Copy>(out: &mut [T], idx: &[usize], values: &[T]) {
    for (&i, &v) in idx.iter().zip(values) {
        out[i] = v;
    }
}

/// Velocity box bounds, the feasible set for the model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundConstraint {
    pub v_min: f64,
    pub v_max: f64,
}

impl BoundConstraint {
    pub fn new(v_min: f64, v_max: f64) -> Result<Self> {
        let b = BoundConstraint { v_min, v_max };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.v_min > 0.0 && self.v_min < self.v_max && self.v_max.is_finite()) {
            return Err(Error::Config(format!(
                "velocity bounds must satisfy 0 < v_min < v_max, got [{}, {}]",
                self.v_min, self.v_max
            )));
        }
        Ok(())
    }

    /// Squared-slowness interval `[1/v_max^2, 1/v_min^2]`.
    pub fn slowness2_range(&self) -> (f64, f64) {
        (
            1.0 / (self.v_max * self.v_max),
            1.0 / (self.v_min * self.v_min),
        )
    }

    pub fn project_value(&self, m: f64) -> f64 {
        let (lo, hi) = self.slowness2_range();
        m.clamp(lo, hi)
    }

    pub fn project(&self, values: &mut [f64]) {
        let (lo, hi) = self.slowness2_range();
        for v in values {
            *v = v.clamp(lo, hi);
        }
    }
}

/// Projects squared-slowness values onto the box.
pub fn project_bounds(values: &[f64], bounds: &BoundConstraint) -> Vec<f64> {
    let mut out = values.to_vec();
    bounds.project(&mut out);
    out
}
