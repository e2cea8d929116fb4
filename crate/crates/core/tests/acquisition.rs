mod common;

use common::*;
use localfwi::acquisition::{synthesize_data, Acquisition, ObservationOperator, Wavelet};
use localfwi::config::{ExperimentConfig, ExperimentKind};
use localfwi::grid::{Grid, Model};
use localfwi::linsolve::{SizeClass, SolveLedger};

#[test]
fn identical_sources_give_identical_columns() {
    let t = tiny(1);
    let acq = Acquisition::new(
        vec![(40.0, 40.0), (40.0, 40.0)],
        vec![(10.0, 80.0), (80.0, 20.0)],
        Wavelet::Ricker { f0: 10.0 },
    )
    .unwrap();
    let ledger = SolveLedger::new();
    let data = synthesize_data(&t.model, &acq, &[10.0, 20.0], t.pml, None, &ledger).unwrap();
    for rec in data.records() {
        assert_eq!(rec.col(0), rec.col(1));
    }
    assert_eq!(ledger.solves(None, Some(10.0), Some(SizeClass::Full)), 2);
    assert_eq!(ledger.solves(None, None, Some(SizeClass::Full)), 4);
}

#[test]
fn noise_free_synthesis_is_reproducible() {
    let t = tiny(2);
    let a = synthesize_data(
        &t.model,
        &t.acq,
        &[t.freq],
        t.pml,
        None,
        &SolveLedger::new(),
    )
    .unwrap();
    let b = synthesize_data(
        &t.model,
        &t.acq,
        &[t.freq],
        t.pml,
        None,
        &SolveLedger::new(),
    )
    .unwrap();
    assert_eq!(a, b);
}

#[test]
fn sampling_rows_have_unit_mass() {
    let t = tiny(3);
    let domain = localfwi::PaddedDomain::new(t.grid, t.pml);
    let obs = ObservationOperator::new(&t.acq, &domain).unwrap();
    let p = dense_obs(&obs);
    let gram = p.adjoint() * &p;
    for i in 0..gram.nrows() {
        for j in 0..gram.ncols() {
            let want = if i == j && obs.nodes().contains(&i) {
                1.0
            } else {
                0.0
            };
            assert_eq!(gram[(i, j)].re, want);
            assert_eq!(gram[(i, j)].im, 0.0);
        }
    }
    for r in 0..p.nrows() {
        assert_eq!(p.row(r).iter().map(|v| v.re).sum::<f64>(), 1.0);
    }
}

#[test]
fn homogeneous_data_are_reciprocal() {
    let grid = Grid::new(40, 30, 10.0, 10.0).unwrap();
    let model = Model::homogeneous(grid, 2000.0).unwrap();
    let (s, r) = ((60.0, 80.0), (310.0, 210.0));
    let fwd = Acquisition::new(vec![s], vec![r], Wavelet::Flat).unwrap();
    let rev = Acquisition::new(vec![r], vec![s], Wavelet::Flat).unwrap();
    let ledger = SolveLedger::new();
    let a = synthesize_data(&model, &fwd, &[15.0], 10, None, &ledger)
        .unwrap()
        .records()[0]
        .get(0, 0);
    let b = synthesize_data(&model, &rev, &[15.0], 10, None, &ledger)
        .unwrap()
        .records()[0]
        .get(0, 0);
    assert!((a - b).norm() <= 1e-8 * a.norm());
}

/// Ring data in a homogeneous model decay like the 2D Green's function envelope.
#[test]
fn ring_amplitudes_follow_cylindrical_spreading() {
    let config = ExperimentConfig::defaults(ExperimentKind::Inclusion);
    let acq = config.acquisition().unwrap();
    let model = Model::homogeneous(config.grid, config.inclusion.background_velocity).unwrap();
    let data = synthesize_data(
        &model,
        &acq,
        &[config.inclusion.freq_hz],
        config.pml_width,
        None,
        &SolveLedger::new(),
    )
    .unwrap();
    let s = acq.sources[0];
    let lambda = config.inclusion.background_velocity / config.inclusion.freq_hz;
    let points: Vec<(f64, f64)> = acq
        .receivers
        .iter()
        .enumerate()
        .map(|(i, r)| {
            (
                (r.0 - s.0).hypot(r.1 - s.1),
                data.records()[0].get(i, 0).norm(),
            )
        })
        .filter(|&(dist, _)| dist > lambda)
        .map(|(dist, amp)| (dist.ln(), amp.ln()))
        .collect();
    let n = points.len() as f64;
    let (mx, my) = (
        points.iter().map(|p| p.0).sum::<f64>() / n,
        points.iter().map(|p| p.1).sum::<f64>() / n,
    );
    let slope = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / points.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    assert!((slope + 0.5).abs() <= 0.15, "fitted exponent {slope}");
}
