//! Shared fixtures and independent reference implementations for the
//! integration tests: dense linear algebra via nalgebra and the 2D
//! free-space Green's function.

#![allow(dead_code)]

use localfwi::acquisition::{Acquisition, ObservationOperator, Wavelet};
use localfwi::grid::{BoundConstraint, Grid, Model, Partition, Rect};
use localfwi::sparse::CsrMatrix;
use localfwi::{c64, FieldSet};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Dense = DMatrix<c64>;

pub fn dense(m: &CsrMatrix) -> Dense {
    let rows = m.to_dense();
    Dense::from_fn(m.nrows(), m.ncols(), |i, j| rows[i][j])
}

pub fn dense_field(f: &FieldSet) -> Dense {
    Dense::from_fn(f.rows(), f.cols(), |i, j| f.get(i, j))
}

pub fn to_field(d: &Dense) -> FieldSet {
    FieldSet::from_fn(d.nrows(), d.ncols(), |i, j| d[(i, j)])
}

/// Sampling matrix of an observation operator.
pub fn dense_obs(obs: &ObservationOperator) -> Dense {
    let mut p = Dense::zeros(obs.n_receivers(), obs.n_unknowns());
    for (r, &k) in obs.nodes().iter().enumerate() {
        p[(r, k)] = c64::new(1.0, 0.0);
    }
    p
}

/// Columns `cols` of a dense matrix.
pub fn columns(m: &Dense, cols: &[usize]) -> Dense {
    Dense::from_fn(m.nrows(), cols.len(), |i, j| m[(i, cols[j])])
}

pub fn rows(m: &Dense, idx: &[usize]) -> Dense {
    Dense::from_fn(idx.len(), m.ncols(), |i, j| m[(idx[i], j)])
}

/// Minimum-norm least squares through the SVD.
pub fn lstsq(a: &Dense, b: &Dense) -> Dense {
    a.clone()
        .svd(true, true)
        .solve(b, 1e-13)
        .expect("svd solve")
}

/// Largest entry-wise distance relative to the largest entry of `b`.
pub fn rel_max(a: &FieldSet, b: &Dense) -> f64 {
    assert_eq!((a.rows(), a.cols()), (b.nrows(), b.ncols()));
    let scale = b.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let diff = (0..a.rows())
        .flat_map(|i| (0..a.cols()).map(move |j| (i, j)))
        .map(|(i, j)| (a.get(i, j) - b[(i, j)]).norm())
        .fold(0.0, f64::max);
    diff / scale
}

pub fn rel_fro(a: &FieldSet, b: &Dense) -> f64 {
    let diff: f64 = (0..a.rows())
        .flat_map(|i| (0..a.cols()).map(move |j| (i, j)))
        .map(|(i, j)| (a.get(i, j) - b[(i, j)]).norm_sqr())
        .sum();
    diff.sqrt() / b.norm()
}

pub fn rel_vec(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    let base: f64 = b.iter().map(|y| y * y).sum();
    (diff / base).sqrt()
}

/// Real least squares `min_m sum_i ||L_i m - y_i||` over complex rows, solved
/// by stacking real and imaginary parts, then clipped to `[lo, hi]`.
pub fn real_lstsq_clipped(l: &[Dense], y: &[Dense], lo: f64, hi: f64) -> Vec<f64> {
    let n = l[0].ncols();
    let total: usize = l.iter().map(|m| 2 * m.nrows()).sum();
    let mut j = DMatrix::<f64>::zeros(total, n);
    let mut r = DMatrix::<f64>::zeros(total, 1);
    let mut row = 0;
    for (li, yi) in l.iter().zip(y) {
        for k in 0..li.nrows() {
            for c in 0..n {
                j[(row, c)] = li[(k, c)].re;
                j[(row + 1, c)] = li[(k, c)].im;
            }
            r[(row, 0)] = yi[(k, 0)].re;
            r[(row + 1, 0)] = yi[(k, 0)].im;
            row += 2;
        }
    }
    let m = j.svd(true, true).solve(&r, 1e-14).expect("svd solve");
    m.iter().map(|v| v.clamp(lo, hi)).collect()
}

/// Bessel J0 and Y0 (Numerical Recipes rational approximations, ~1e-8).
pub fn bessel_j0(x: f64) -> f64 {
    let ax = x.abs();
    if ax < 8.0 {
        let y = x * x;
        let a1 = 57568490574.0
            + y * (-13362590354.0
                + y * (651619640.7 + y * (-11214424.18 + y * (77392.33017 + y * (-184.9052456)))));
        let a2 = 57568490411.0
            + y * (1029532985.0 + y * (9494680.718 + y * (59272.64853 + y * (267.8532712 + y))));
        a1 / a2
    } else {
        let (p, q, xx) = asymptotic(ax);
        (std::f64::consts::FRAC_2_PI / ax).sqrt() * (xx.cos() * p - xx.sin() * q)
    }
}

pub fn bessel_y0(x: f64) -> f64 {
    if x < 8.0 {
        let y = x * x;
        let a1 = -2957821389.0
            + y * (7062834065.0
                + y * (-512359803.6 + y * (10879881.29 + y * (-86327.92757 + y * 228.4622733))));
        let a2 = 40076544269.0
            + y * (745249964.8 + y * (7189466.438 + y * (47447.26470 + y * (226.1030244 + y))));
        a1 / a2 + std::f64::consts::FRAC_2_PI * bessel_j0(x) * x.ln()
    } else {
        let (p, q, xx) = asymptotic(x);
        (std::f64::consts::FRAC_2_PI / x).sqrt() * (xx.sin() * p + xx.cos() * q)
    }
}

fn asymptotic(ax: f64) -> (f64, f64, f64) {
    let z = 8.0 / ax;
    let y = z * z;
    let xx = ax - 0.785398164;
    let p = 1.0
        + y * (-0.1098628627e-2
            + y * (0.2734510407e-4 + y * (-0.2073370639e-5 + y * 0.2093887211e-6)));
    let q = -0.1562499995e-1
        + y * (0.1430488765e-3
            + y * (-0.6911147651e-5 + y * (0.7621095161e-6 - y * 0.934945152e-7)));
    (p, z * q, xx)
}

/// Outgoing solution of `(Δ + k²) u = δ` under `e^{-iωt}`: `-(i/4) H0⁽¹⁾(k r)`.
pub fn green_2d(k: f64, r: f64) -> c64 {
    let h = c64::new(bessel_j0(k * r), bessel_y0(k * r));
    c64::new(0.0, -0.25) * h
}

/// A 10x10 heterogeneous instance with 2 sources and 3 receivers.
pub struct Tiny {
    pub grid: Grid,
    pub model: Model,
    pub acq: Acquisition,
    pub partition: Partition,
    pub freq: f64,
    pub pml: usize,
    pub bounds: BoundConstraint,
}

pub fn tiny(seed: u64) -> Tiny {
    let grid = Grid::new(10, 10, 10.0, 10.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v: Vec<f64> = (0..grid.len())
        .map(|_| rng.random_range(1800.0..2400.0))
        .collect();
    Tiny {
        grid,
        model: Model::from_velocity(grid, &v).unwrap(),
        acq: Acquisition::new(
            vec![(20.0, 20.0), (70.0, 30.0)],
            vec![(10.0, 80.0), (50.0, 90.0), (80.0, 80.0)],
            Wavelet::Flat,
        )
        .unwrap(),
        partition: Partition::from_rects(&grid, &[Rect::new(30.0, 70.0, 40.0, 80.0)]).unwrap(),
        freq: 25.0,
        pml: 4,
        bounds: BoundConstraint::new(1000.0, 5000.0).unwrap(),
    }
}

pub fn random_field(rows: usize, cols: usize, seed: u64) -> FieldSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    FieldSet::from_fn(rows, cols, |_, _| {
        c64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    })
}

/// Dense replica of one frequency problem.
pub struct DenseProblem {
    pub a: Dense,
    pub k: Dense,
    pub mass: Vec<c64>,
    pub p: Dense,
    pub b: Dense,
    pub d: Dense,
    /// Padded indices of interior nodes, in interior order.
    pub interior: Vec<usize>,
    pub target: Vec<usize>,
    pub background: Vec<usize>,
}

impl DenseProblem {
    pub fn new(
        system: &localfwi::HelmholtzSystem,
        problem: &localfwi::inversion::FrequencyProblem,
        partition: &Partition,
    ) -> Self {
        let lifted = system.domain().lift(partition).unwrap();
        DenseProblem {
            a: dense(system.matrix()),
            k: dense(system.stiffness()),
            mass: system.mass().to_vec(),
            p: dense_obs(&problem.obs),
            b: dense_field(&problem.b),
            d: dense_field(&problem.d),
            interior: system.domain().interior_indices(),
            target: lifted.target.clone(),
            background: lifted.background.clone(),
        }
    }

    /// `A` with the diagonal model term replaced by `m` (squared slowness,
    /// one value per padded node).
    pub fn a_with(&self, m_padded: &[f64]) -> Dense {
        let mut a = self.k.clone();
        for j in 0..a.nrows() {
            a[(j, j)] += self.mass[j] * m_padded[j];
        }
        a
    }

    /// `[λAᴴA + PᴴP]⁻¹[λAᴴ(B+B̂) + Pᴴ(D+D̂)]` by dense LU.
    pub fn da(&self, a: &Dense, lambda: f64, b_hat: &Dense, d_hat: &Dense) -> Dense {
        let l = c64::new(lambda, 0.0);
        let ah = a.adjoint();
        let ph = self.p.adjoint();
        let lhs = &ah * a * l + &ph * &self.p;
        let rhs = &ah * (&self.b + b_hat) * l + &ph * (&self.d + d_hat);
        lhs.lu().solve(&rhs).expect("nonsingular")
    }

    /// Real least squares for the model at interior nodes against the rows of
    /// `B + B̂ − K U`, clipped to `[lo, hi]`.
    pub fn model_full(&self, u: &Dense, b_hat: &Dense, lo: f64, hi: f64) -> Vec<f64> {
        let r = &self.b + b_hat - &self.k * u;
        let (l, y): (Vec<Dense>, Vec<Dense>) = (0..u.ncols())
            .map(|i| {
                let l = Dense::from_fn(self.interior.len(), self.interior.len(), |p, q| {
                    if p == q {
                        self.mass[self.interior[p]] * u[(self.interior[p], i)]
                    } else {
                        c64::new(0.0, 0.0)
                    }
                });
                let y = Dense::from_fn(self.interior.len(), 1, |p, _| r[(self.interior[p], i)]);
                (l, y)
            })
            .unzip();
        real_lstsq_clipped(&l, &y, lo, hi)
    }

    /// Target model from `y = B + B̂ − A1 U1 − Δ2 U2` restricted to target rows.
    pub fn model_target(
        &self,
        a1u1: &Dense,
        u2: &Dense,
        b_hat: &Dense,
        lo: f64,
        hi: f64,
    ) -> Vec<f64> {
        let delta2 = columns(&self.k, &self.target);
        let y = &self.b + b_hat - a1u1 - &delta2 * u2;
        let n2 = self.target.len();
        let (l, ys): (Vec<Dense>, Vec<Dense>) = (0..u2.ncols())
            .map(|i| {
                let l = Dense::from_fn(n2, n2, |p, q| {
                    if p == q {
                        self.mass[self.target[p]] * u2[(p, i)]
                    } else {
                        c64::new(0.0, 0.0)
                    }
                });
                (l, Dense::from_fn(n2, 1, |p, _| y[(self.target[p], i)]))
            })
            .unzip();
        real_lstsq_clipped(&l, &ys, lo, hi)
    }

    /// `A2(m2) = Δ2 + E2 Diag(mass2 ∘ m2)`.
    pub fn a2(&self, m2: &[f64]) -> Dense {
        let mut a2 = columns(&self.k, &self.target);
        for (j, &row) in self.target.iter().enumerate() {
            a2[(row, j)] += self.mass[row] * m2[j];
        }
        a2
    }

    pub fn merge(&self, u1: &Dense, u2: &Dense) -> Dense {
        let mut u = Dense::zeros(self.a.nrows(), u1.ncols());
        for (k, &r) in self.background.iter().enumerate() {
            u.set_row(r, &u1.row(k));
        }
        for (k, &r) in self.target.iter().enumerate() {
            u.set_row(r, &u2.row(k));
        }
        u
    }
}

/// A 40x30 smooth layered instance with 3 surface sources and 10 receivers.
pub struct Layered {
    pub model: Model,
    pub acq: Acquisition,
    pub partition: Partition,
    pub freq: f64,
    pub pml: usize,
    pub bounds: BoundConstraint,
}

pub fn layered() -> Layered {
    let grid = Grid::new(40, 30, 20.0, 20.0).unwrap();
    let v: Vec<f64> = (0..grid.len())
        .map(|i| {
            let (x, z) = grid.position(i);
            1800.0 + 0.8 * z + 150.0 * (x / 180.0).sin()
        })
        .collect();
    Layered {
        model: Model::from_velocity(grid, &v).unwrap(),
        acq: Acquisition::new(
            vec![(100.0, 20.0), (400.0, 20.0), (700.0, 20.0)],
            (0..10).map(|k| (40.0 + 80.0 * k as f64, 20.0)).collect(),
            Wavelet::Ricker { f0: 10.0 },
        )
        .unwrap(),
        partition: Partition::from_rects(&grid, &[Rect::new(250.0, 550.0, 250.0, 450.0)]).unwrap(),
        freq: 10.0,
        pml: 10,
        bounds: BoundConstraint::new(1400.0, 4000.0).unwrap(),
    }
}

/// A desk-top sized time-lapse configuration that runs in seconds.
pub const SMALL_TIMELAPSE_JSON: &str = r#"{
  "grid": { "nx": 32, "nz": 20, "dx": 25.0, "dz": 25.0, "x0": 0.0, "z0": 0.0 },
  "pml_width": 8,
  "model": { "kind": "layered", "velocities": [1500.0, 2000.0, 2600.0], "interfaces": [150.0, 320.0] },
  "acquisition": { "kind": "lines", "source_x": [100.0, 700.0, 200.0], "source_z": 25.0, "receiver_x": [0.0, 775.0, 50.0], "receiver_z": 25.0 },
  "schedule": [ { "freqs_hz": [6.0, 9.0], "passes": 1, "iters_per_freq": 2 } ],
  "partition": [ { "xmin": 300.0, "xmax": 500.0, "zmin": 200.0, "zmax": 350.0 } ],
  "initial_smoothing_m": 60.0,
  "timelapse": {
    "perturbations": [ { "rect": { "xmin": 350.0, "xmax": 450.0, "zmin": 250.0, "zmax": 300.0 }, "dv": 150.0 } ],
    "baseline_schedule": [ { "freqs_hz": [6.0, 9.0], "passes": 1, "iters_per_freq": 2 } ]
  }
}"#;
