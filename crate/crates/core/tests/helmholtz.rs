mod common;

use common::*;
use localfwi::acquisition::{forward_wavefield, Acquisition, Wavelet};
use localfwi::grid::{Grid, Model, Partition};
use localfwi::helmholtz::HelmholtzSystem;
use localfwi::linsolve::{SolveContext, SolveLedger};
use localfwi::FieldSet;
use proptest::prelude::*;

fn random_system(nx: usize, nz: usize, pml: usize, seed: u64) -> HelmholtzSystem {
    let t = tiny(seed);
    let grid = Grid::new(nx, nz, 10.0, 10.0).unwrap();
    let v: Vec<f64> = (0..grid.len())
        .map(|i| t.model.velocity()[i % t.grid.len()])
        .collect();
    HelmholtzSystem::assemble(
        &Model::from_velocity(grid, &v).unwrap(),
        2.0 * std::f64::consts::PI * 20.0,
        pml,
    )
    .unwrap()
}

#[test]
fn apply_matches_dense_multiply() {
    let sys = random_system(6, 6, 3, 1);
    let u = random_field(sys.len(), 3, 2);
    let got = sys.apply(&u).unwrap();
    let want = dense(sys.matrix()) * dense_field(&u);
    let diff = (0..got.rows())
        .flat_map(|i| (0..3).map(move |j| (i, j)))
        .map(|(i, j)| (got.get(i, j) - want[(i, j)]).norm())
        .fold(0.0, f64::max);
    assert!(diff <= 1e-13 * want.camax().max(1.0), "diff {diff}");
}

#[test]
fn operator_is_complex_symmetric() {
    let sys = random_system(12, 9, 5, 3);
    let a = dense(sys.matrix());
    let asym = (&a - a.transpose()).camax();
    assert!(asym <= 1e-14 * a.camax(), "asymmetry {asym}");
}

#[test]
fn block_residual_of_exact_solution_vanishes() {
    let t = tiny(4);
    let ledger = SolveLedger::new();
    let (sys, u) = forward_wavefield(
        &t.model,
        &t.acq,
        t.freq,
        t.pml,
        SolveContext::new(&ledger, "forward", t.freq),
    )
    .unwrap();
    let blocks = sys.split_columns(&t.partition).unwrap();
    let lifted = blocks.partition();
    let b = t.acq.source_terms(sys.domain(), t.freq).unwrap();
    let au = blocks
        .apply(
            &u.gather_rows(&lifted.background),
            &u.gather_rows(&lifted.target),
        )
        .unwrap();
    assert!(b.sub(&au).unwrap().norm_fro() <= 1e-10 * b.norm_fro());

    let zero = blocks
        .apply(
            &FieldSet::zeros(lifted.n_background(), 2),
            &FieldSet::zeros(lifted.n_target(), 2),
        )
        .unwrap();
    assert_eq!(b.sub(&zero).unwrap(), b);
}

#[test]
fn pml_absorbs_outgoing_energy() {
    let grid = Grid::new(61, 61, 20.0, 20.0).unwrap();
    let model = Model::homogeneous(grid, 2000.0).unwrap();
    let acq = Acquisition::new(vec![(600.0, 600.0)], vec![(0.0, 0.0)], Wavelet::Flat).unwrap();
    let ledger = SolveLedger::new();
    let (sys, u) = forward_wavefield(
        &model,
        &acq,
        10.0,
        20,
        SolveContext::new(&ledger, "forward", 10.0),
    )
    .unwrap();
    let (nx, nz) = (sys.domain().nx(), sys.domain().nz());
    let peak = u.max_abs();
    let edge = (0..nx * nz)
        .filter(|&p| {
            let (ix, iz) = (p % nx, p / nx);
            ix == 0 || iz == 0 || ix == nx - 1 || iz == nz - 1
        })
        .map(|p| u.get(p, 0).norm())
        .fold(0.0, f64::max);
    assert!(edge <= 1e-3 * peak, "edge {edge} peak {peak}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn column_blocks_reassemble_the_operator(seed in 0u64..1000, mask in proptest::collection::vec(any::<bool>(), 36)) {
        prop_assume!(mask.iter().any(|&m| m));
        let sys = random_system(6, 6, 2, seed);
        let partition = Partition::from_mask(&mask);
        let blocks = sys.split_columns(&partition).unwrap();
        let lifted = blocks.partition();
        let a = sys.matrix();
        for (j, &c) in lifted.background.iter().enumerate() {
            for r in 0..a.nrows() {
                prop_assert_eq!(blocks.a1().get(r, j), a.get(r, c));
            }
        }
        for (j, &c) in lifted.target.iter().enumerate() {
            for r in 0..a.nrows() {
                prop_assert_eq!(blocks.a2().get(r, j), a.get(r, c));
            }
        }
        let u = random_field(sys.len(), 2, seed);
        let split = blocks.apply(&u.gather_rows(&lifted.background), &u.gather_rows(&lifted.target)).unwrap();
        let whole = sys.apply(&u).unwrap();
        prop_assert!(split.sub(&whole).unwrap().max_abs() <= 1e-12 * whole.max_abs());
    }
}
