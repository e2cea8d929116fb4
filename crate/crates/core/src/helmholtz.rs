//! 5-point Helmholtz operator `A(m) = Laplacian + omega^2 Diag(m)` with a
//! complex coordinate-stretch PML, and its split into background/target
//! column blocks.
//!
//! The stretched operator is written in the symmetric form
//! `d/dx (sz/sx d/dx) + d/dz (sx/sz d/dz) + omega^2 sx sz m`, with
//! `s = 1 + i sigma / omega` (time dependence `exp(-i omega t)`). Outside the
//! pad `sx = sz = 1`, so interior rows carry the plain Laplacian and a mass
//! term of exactly `omega^2 m`. The outer edge of the padded box is Dirichlet.
//! Under this convention the radiating response to a unit point source in a
//! homogeneous medium is `-(i/4) H0⁽¹⁾(k r)`.

use num_complex::Complex64 as c64;

use crate::error::{Error, Result};
use crate::field::FieldSet;
use crate::grid::{Grid, Model, Partition};
use crate::sparse::CsrMatrix;

/// Target amplitude reflection coefficient of the PML profile.
const PML_REFLECTION: f64 = 1e-6;

/// Interior grid surrounded by `width` absorbing nodes on every side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PaddedDomain {
    grid: Grid,
    width: usize,
}

impl PaddedDomain {
    pub fn new(grid: Grid, width: usize) -> Self {
        PaddedDomain { grid, width }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn nx(&self) -> usize {
        self.grid.nx + 2 * self.width
    }

    pub fn nz(&self) -> usize {
        self.grid.nz + 2 * self.width
    }

    /// Padded node count `N`.
    pub fn len(&self) -> usize {
        self.nx() * self.nz()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn to_padded(&self, interior: usize) -> usize {
        let (ix, iz) = self.grid.coords(interior);
        (iz + self.width) * self.nx() + ix + self.width
    }

    pub fn to_interior(&self, padded: usize) -> Option<usize> {
        let (px, pz) = (padded % self.nx(), padded / self.nx());
        let w = self.width;
        if px < w || pz < w || px >= w + self.grid.nx || pz >= w + self.grid.nz {
            None
        } else {
            Some(self.grid.index(px - w, pz - w))
        }
    }

    /// Padded images of the interior nodes, in interior order.
    pub fn interior_indices(&self) -> Vec<usize> {
        (0..self.grid.len()).map(|i| self.to_padded(i)).collect()
    }

    /// Edge-replicated extension of an interior array to the padded box.
    pub fn extend<T: Copy>(&self, interior: &[T]) -> Vec<T> {
        let (nx, nz, w) = (self.grid.nx, self.grid.nz, self.width);
        let mut out = Vec::with_capacity(self.len());
        for pz in 0..self.nz() {
            let iz = pz.saturating_sub(w).min(nz - 1);
            for px in 0..self.nx() {
                let ix = px.saturating_sub(w).min(nx - 1);
                out.push(interior[iz * nx + ix]);
            }
        }
        out
    }

    /// Partition lifted to padded indices; every pad node joins the background.
    pub fn lift(&self, partition: &Partition) -> Result<PaddedPartition> {
        if partition.len() != self.grid.len() {
            return Err(Error::shape(format!(
                "partition covers {} nodes, grid has {}",
                partition.len(),
                self.grid.len()
            )));
        }
        let mut is_target = vec![false; self.len()];
        for &i in partition.target() {
            is_target[self.to_padded(i)] = true;
        }
        let mut target = Vec::with_capacity(partition.n_target());
        let mut background = Vec::with_capacity(self.len() - partition.n_target());
        for (p, &t) in is_target.iter().enumerate() {
            if t {
                target.push(p);
            } else {
                background.push(p);
            }
        }
        // interior index of each target node, aligned with `target`
        let target_interior = target
            .iter()
            .map(|&p| self.to_interior(p).unwrap())
            .collect();
        let background_interior = background
            .iter()
            .filter_map(|&p| self.to_interior(p))
            .collect();
        Ok(PaddedPartition {
            target,
            background,
            target_interior,
            background_interior,
        })
    }
}

/// Target/background split over padded indices.
#[derive(Debug, Clone, PartialEq)]
pub struct PaddedPartition {
    pub target: Vec<usize>,
    pub background: Vec<usize>,
    /// Interior indices of the target nodes, aligned with `target`.
    pub target_interior: Vec<usize>,
    /// Interior indices of background nodes that are not in the pad, sorted.
    pub background_interior: Vec<usize>,
}

impl PaddedPartition {
    pub fn n_target(&self) -> usize {
        self.target.len()
    }

    pub fn n_background(&self) -> usize {
        self.background.len()
    }

    pub fn merge(&self, u1: &FieldSet, u2: &FieldSet) -> Result<FieldSet> {
        FieldSet::merge_rows(
            self.target.len() + self.background.len(),
            &self.background,
            u1,
            &self.target,
            u2,
        )
    }
}

/// Absorbing layer settings. The damping strength is tied to a reference
/// velocity so that the stiffness part stays fixed while the model changes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PmlSettings {
    pub width: usize,
    pub reference_velocity: f64,
}

impl PmlSettings {
    pub fn for_model(width: usize, model: &Model) -> Self {
        PmlSettings {
            width,
            reference_velocity: model.max_velocity(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct HelmholtzSystem {
    domain: PaddedDomain,
    pml: PmlSettings,
    omega: f64,
    model_padded: Vec<f64>,
    stiffness: CsrMatrix,
    mass: Vec<c64>,
    matrix: CsrMatrix,
}

struct Stretch {
    omega: f64,
    sigma_max: f64,
    width: usize,
    n: usize,
}

impl Stretch {
    /// Stretch factor at fractional padded coordinate `pos` (node units).
    fn at(&self, pos: f64) -> c64 {
        if self.width == 0 {
            return c64::new(1.0, 0.0);
        }
        let w = self.width as f64;
        let last = (self.n - 1) as f64 + w;
        let depth = (w - pos).max(pos - last).max(0.0) / w;
        c64::new(1.0, self.sigma_max * depth * depth / self.omega)
    }
}

impl HelmholtzSystem {
    pub fn assemble(model: &Model, omega: f64, pml_width: usize) -> Result<Self> {
        Self::assemble_with(model, omega, PmlSettings::for_model(pml_width, model))
    }

    pub fn assemble_with(model: &Model, omega: f64, pml: PmlSettings) -> Result<Self> {
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(Error::Assembly(format!(
                "angular frequency must be positive, got {omega}"
            )));
        }
        if let Some(i) = model.values().iter().position(|v| !v.is_finite()) {
            return Err(Error::Assembly(format!(
                "non-finite model value at node {i}"
            )));
        }
        if !(pml.reference_velocity > 0.0 && pml.reference_velocity.is_finite()) {
            return Err(Error::Assembly(
                "PML reference velocity must be positive".into(),
            ));
        }
        let grid = *model.grid();
        let domain = PaddedDomain::new(grid, pml.width);
        let (nxp, nzp) = (domain.nx(), domain.nz());
        let sigma = |h: f64| {
            let thickness = pml.width.max(1) as f64 * h;
            1.5 * pml.reference_velocity * (1.0 / PML_REFLECTION).ln() / thickness
        };
        let sx = Stretch {
            omega,
            sigma_max: sigma(grid.dx),
            width: pml.width,
            n: grid.nx,
        };
        let sz = Stretch {
            omega,
            sigma_max: sigma(grid.dz),
            width: pml.width,
            n: grid.nz,
        };
        let (idx2, idz2) = (1.0 / (grid.dx * grid.dx), 1.0 / (grid.dz * grid.dz));
        let model_padded = domain.extend(model.values());

        let mut stiff = Vec::with_capacity(5 * domain.len());
        let mut mass = Vec::with_capacity(domain.len());
        for pz in 0..nzp {
            let szn = sz.at(pz as f64);
            let sz_lo = sz.at(pz as f64 - 0.5);
            let sz_hi = sz.at(pz as f64 + 0.5);
            for px in 0..nxp {
                let row = pz * nxp + px;
                let sxn = sx.at(px as f64);
                let ax_lo = szn / sx.at(px as f64 - 0.5) * idx2;
                let ax_hi = szn / sx.at(px as f64 + 0.5) * idx2;
                let az_lo = sxn / sz_lo * idz2;
                let az_hi = sxn / sz_hi * idz2;
                if pz > 0 {
                    stiff.push((row, row - nxp, az_lo));
                }
                if px > 0 {
                    stiff.push((row, row - 1, ax_lo));
                }
                stiff.push((row, row, -(ax_lo + ax_hi + az_lo + az_hi)));
                if px + 1 < nxp {
                    stiff.push((row, row + 1, ax_hi));
                }
                if pz + 1 < nzp {
                    stiff.push((row, row + nxp, az_hi));
                }
                mass.push(omega * omega * sxn * szn);
            }
        }
        let stiffness = CsrMatrix::from_triplets(domain.len(), domain.len(), &stiff)?;
        let matrix = Self::add_mass(&stiffness, &mass, &model_padded)?;
        Ok(HelmholtzSystem {
            domain,
            pml,
            omega,
            model_padded,
            stiffness,
            mass,
            matrix,
        })
    }

    fn add_mass(stiffness: &CsrMatrix, mass: &[c64], m: &[f64]) -> Result<CsrMatrix> {
        let mut trip = stiffness.triplets();
        trip.extend(
            mass.iter()
                .zip(m)
                .enumerate()
                .map(|(i, (c, v))| (i, i, c * v)),
        );
        CsrMatrix::from_triplets(stiffness.nrows(), stiffness.ncols(), &trip)
    }

    /// Same frequency and PML, different model.
    pub fn with_model(&self, model: &Model) -> Result<Self> {
        if model.grid() != self.domain.grid() {
            return Err(Error::shape(
                "model grid differs from the assembled grid".to_string(),
            ));
        }
        let model_padded = self.domain.extend(model.values());
        let matrix = Self::add_mass(&self.stiffness, &self.mass, &model_padded)?;
        Ok(HelmholtzSystem {
            model_padded,
            matrix,
            ..self.clone()
        })
    }

    pub fn domain(&self) -> &PaddedDomain {
        &self.domain
    }

    pub fn pml(&self) -> PmlSettings {
        self.pml
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    /// Model-independent part (stretched Laplacian).
    pub fn stiffness(&self) -> &CsrMatrix {
        &self.stiffness
    }

    /// Per-node mass coefficient `omega^2 sx sz` (exactly `omega^2` off the pad).
    pub fn mass(&self) -> &[c64] {
        &self.mass
    }

    pub fn model_padded(&self) -> &[f64] {
        &self.model_padded
    }

    pub fn len(&self) -> usize {
        self.domain.len()
    }

    pub fn is_empty(&self) -> bool {
        self.domain.is_empty()
    }

    /// `A U` for every source column.
    pub fn apply(&self, u: &FieldSet) -> Result<FieldSet> {
        self.matrix.mul_fields(u)
    }

    pub fn split_columns(&self, partition: &Partition) -> Result<ColumnBlocks> {
        let lifted = self.domain.lift(partition)?;
        ColumnBlocks::new(self, lifted)
    }
}

/// Column blocks `A1` (background) and `A2` (target) of `A`, with
/// `A2(m2) = Laplacian2 + E2 Diag(omega^2 m2)`.
#[derive(Debug, Clone)]
pub struct ColumnBlocks {
    partition: PaddedPartition,
    a1: CsrMatrix,
    a2: CsrMatrix,
    laplacian2: CsrMatrix,
    mass2: Vec<c64>,
    m2: Vec<f64>,
}

impl ColumnBlocks {
    fn new(system: &HelmholtzSystem, partition: PaddedPartition) -> Result<Self> {
        let a1 = system.matrix.select_columns(&partition.background);
        let a2 = system.matrix.select_columns(&partition.target);
        let laplacian2 = system.stiffness.select_columns(&partition.target);
        let mass2 = partition.target.iter().map(|&p| system.mass[p]).collect();
        let m2 = partition
            .target
            .iter()
            .map(|&p| system.model_padded[p])
            .collect();
        Ok(ColumnBlocks {
            partition,
            a1,
            a2,
            laplacian2,
            mass2,
            m2,
        })
    }

    pub fn partition(&self) -> &PaddedPartition {
        &self.partition
    }

    pub fn a1(&self) -> &CsrMatrix {
        &self.a1
    }

    pub fn a2(&self) -> &CsrMatrix {
        &self.a2
    }

    pub fn laplacian2(&self) -> &CsrMatrix {
        &self.laplacian2
    }

    pub fn mass2(&self) -> &[c64] {
        &self.mass2
    }

    /// Target model the current `A2` was built with.
    pub fn m2(&self) -> &[f64] {
        &self.m2
    }

    /// `A2(m2)` for a new target model.
    pub fn a2_with(&self, m2: &[f64]) -> Result<CsrMatrix> {
        if m2.len() != self.mass2.len() {
            return Err(Error::shape(format!(
                "target model has {} values, expected {}",
                m2.len(),
                self.mass2.len()
            )));
        }
        let mut trip = self.laplacian2.triplets();
        trip.extend(
            self.partition
                .target
                .iter()
                .zip(self.mass2.iter().zip(m2))
                .enumerate()
                .map(|(t, (&p, (c, v)))| (p, t, c * v)),
        );
        CsrMatrix::from_triplets(self.laplacian2.nrows(), self.laplacian2.ncols(), &trip)
    }

    /// Blocks with `A2` rebuilt for a new target model; `A1` unchanged.
    pub fn with_target_model(&self, m2: &[f64]) -> Result<Self> {
        let a2 = self.a2_with(m2)?;
        Ok(ColumnBlocks {
            a2,
            m2: m2.to_vec(),
            ..self.clone()
        })
    }

    /// `A1 U1 + A2 U2`.
    pub fn apply(&self, u1: &FieldSet, u2: &FieldSet) -> Result<FieldSet> {
        self.a1.mul_fields(u1)?.add(&self.a2.mul_fields(u2)?)
    }
}
