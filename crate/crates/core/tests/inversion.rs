mod common;

use common::*;
use localfwi::acquisition::synthesize_data;
use localfwi::grid::Model;
use localfwi::helmholtz::HelmholtzSystem;
use localfwi::inversion::{
    augmented_lagrangian_terms, da_wavefield, irwri_frequency_batch, irwri_multi_frequency,
    multiblock_frequency_batch, multiblock_multi_frequency, update_model_full, Band, DualState,
    FrequencyProblem, FrequencySchedule, InversionConfig, IterationReport, NoRegularizer,
};
use localfwi::linsolve::{SizeClass, SolveContext, SolveLedger};
use localfwi::{c64, FieldSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Tiny problem with data observed in a different model, so nothing is a
/// fixed point.
fn inconsistent() -> (Tiny, FrequencyProblem, HelmholtzSystem) {
    let t = tiny(31);
    let data = synthesize_data(
        &tiny(32).model,
        &t.acq,
        &[t.freq],
        t.pml,
        None,
        &SolveLedger::new(),
    )
    .unwrap();
    let problem = FrequencyProblem::new(
        &t.model,
        &t.acq,
        data.record_at(t.freq).unwrap(),
        t.freq,
        t.pml,
    )
    .unwrap();
    let sys = problem.assemble(&t.model).unwrap();
    (t, problem, sys)
}

fn random_duals(problem: &FrequencyProblem, seed: u64) -> DualState {
    let n = problem.domain.len();
    DualState {
        b_hat: random_field(n, problem.n_sources(), seed)
            .scale(c64::new(0.1 * problem.b.max_abs(), 0.0)),
        d_hat: random_field(problem.obs.n_receivers(), problem.n_sources(), seed + 1)
            .scale(c64::new(0.1 * problem.d.max_abs(), 0.0)),
    }
}

fn check_reports(reports: &[IterationReport], phase: &str) {
    assert!(!reports.is_empty());
    for w in reports.windows(2) {
        if w[0].freq_hz == w[1].freq_hz {
            assert!(w[1].iter > w[0].iter);
        }
    }
    for r in reports {
        assert_eq!(r.phase, phase);
        for v in [
            r.data_res,
            r.source_res,
            r.model_change,
            r.psi,
            r.b_hat_norm,
            r.d_hat_norm,
        ] {
            assert!(v.is_finite() && v >= 0.0);
        }
    }
}

#[test]
fn penalty_rule_matches_dense_norms() {
    let (_, problem, sys) = inconsistent();
    let p = dense_obs(&problem.obs);
    let a = dense(sys.matrix());
    let want = 0.25 * (p.adjoint() * dense_field(&problem.d)).norm()
        / (a.adjoint() * dense_field(&problem.b)).norm();
    let got = problem.penalty(&sys, 0.25).unwrap();
    assert!((got - want).abs() <= 1e-12 * want);
}

#[test]
fn da_wavefield_is_stationary_for_the_lagrangian() {
    let (_, problem, sys) = inconsistent();
    let duals = random_duals(&problem, 3);
    let lambda = problem.penalty(&sys, 0.1).unwrap();
    let ledger = SolveLedger::new();
    let u = da_wavefield(
        &sys,
        &problem.obs,
        lambda,
        &problem.b,
        &problem.d,
        &duals,
        SolveContext::new(&ledger, "da", problem.freq_hz),
    )
    .unwrap();
    let psi = |u: &FieldSet| {
        augmented_lagrangian_terms(
            &sys.apply(u).unwrap(),
            &problem.obs.apply(u).unwrap(),
            &problem.b,
            &problem.d,
            &duals,
            lambda,
        )
        .unwrap()
    };
    let base = psi(&u);
    for k in 0..20 {
        let dir = random_field(u.rows(), u.cols(), 50 + k);
        let mut v = u.clone();
        v.axpy(c64::new(1e-6 * u.norm_fro() / dir.norm_fro(), 0.0), &dir)
            .unwrap();
        assert!(psi(&v) >= base * (1.0 - 1e-12));
    }
    assert_eq!(
        ledger.solves(Some("da"), None, Some(SizeClass::Full)),
        problem.n_sources() as u64
    );
}

#[test]
fn model_update_is_stationary_on_interior_rows() {
    let (t, problem, sys) = inconsistent();
    let duals = random_duals(&problem, 5);
    let ledger = SolveLedger::new();
    let u = da_wavefield(
        &sys,
        &problem.obs,
        0.2,
        &problem.b,
        &problem.d,
        &duals,
        SolveContext::new(&ledger, "da", 1.0),
    )
    .unwrap();
    let m = update_model_full(&sys, &u, &problem.b, &duals.b_hat, &t.bounds, &t.model).unwrap();
    let interior = sys.domain().interior_indices();
    let misfit = |m: &Model| {
        let r = sys
            .with_model(m)
            .unwrap()
            .apply(&u)
            .unwrap()
            .sub(&problem.b)
            .unwrap()
            .sub(&duals.b_hat)
            .unwrap();
        r.gather_rows(&interior).norm_fro().powi(2)
    };
    let base = misfit(&m);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..20 {
        let mut values: Vec<f64> = m
            .values()
            .iter()
            .map(|&v| v * (1.0 + 1e-6 * rng.random_range(-1.0..1.0)))
            .collect();
        t.bounds.project(&mut values);
        let perturbed = Model::from_slowness2(*m.grid(), values).unwrap();
        assert!(misfit(&perturbed) >= base * (1.0 - 1e-12));
    }
}

#[test]
fn model_update_ignores_source_order() {
    let (t, problem, sys) = inconsistent();
    let duals = random_duals(&problem, 7);
    let u = random_field(sys.len(), 2, 8)
        .add(
            &da_wavefield(
                &sys,
                &problem.obs,
                0.2,
                &problem.b,
                &problem.d,
                &duals,
                SolveContext::new(&SolveLedger::new(), "da", 1.0),
            )
            .unwrap(),
        )
        .unwrap();
    let swap = |f: &FieldSet| {
        FieldSet::from_columns(f.rows(), vec![f.col(1).to_vec(), f.col(0).to_vec()]).unwrap()
    };
    let a = update_model_full(&sys, &u, &problem.b, &duals.b_hat, &t.bounds, &t.model).unwrap();
    let b = update_model_full(
        &sys,
        &swap(&u),
        &swap(&problem.b),
        &swap(&duals.b_hat),
        &t.bounds,
        &t.model,
    )
    .unwrap();
    assert!(rel_vec(a.values(), b.values()) <= 1e-14);
    let again = update_model_full(&sys, &u, &problem.b, &duals.b_hat, &t.bounds, &t.model).unwrap();
    assert_eq!(a, again);
}

#[test]
fn dual_update_adds_exactly_the_residual() {
    let (_, problem, sys) = inconsistent();
    let u = random_field(sys.len(), 2, 1);
    let au = sys.apply(&u).unwrap();
    let pu = problem.obs.apply(&u).unwrap();
    let mut duals = DualState::zeros(sys.len(), problem.obs.n_receivers(), 2);
    let res = duals.accumulate(&au, &pu, &problem.b, &problem.d).unwrap();
    assert_eq!(duals.b_hat, problem.b.sub(&au).unwrap());
    assert_eq!(duals.d_hat, problem.d.sub(&pu).unwrap());
    assert_eq!(res.source, duals.b_hat.norm_fro());
    let first = duals.clone();
    duals.accumulate(&au, &pu, &problem.b, &problem.d).unwrap();
    assert!(
        duals
            .b_hat
            .sub(&first.b_hat.scale(c64::new(2.0, 0.0)))
            .unwrap()
            .max_abs()
            <= 1e-15 * first.b_hat.max_abs()
    );
}

#[test]
fn batches_report_monotone_iterations_and_count_solves() {
    let (t, problem, _) = inconsistent();
    let config = InversionConfig {
        lambda_rel: 0.1,
        iterations: 4,
        bounds: t.bounds,
        pml_width: t.pml,
    };
    let ledger = SolveLedger::new();
    let out = irwri_frequency_batch(&t.model, &problem, &config, &NoRegularizer, &ledger).unwrap();
    check_reports(&out.reports, "irwri");
    assert_eq!(
        ledger.solves(Some("irwri"), Some(t.freq), Some(SizeClass::Full)),
        8
    );

    let ledger = SolveLedger::new();
    let out = multiblock_frequency_batch(
        &t.model,
        &problem,
        &t.partition,
        &config,
        &NoRegularizer,
        &ledger,
    )
    .unwrap();
    check_reports(&out.reports, "multiblock");
    assert_eq!(
        ledger.solves(
            Some("multiblock-setup"),
            Some(t.freq),
            Some(SizeClass::Full)
        ),
        2
    );
    assert_eq!(
        ledger.solves(Some("multiblock"), Some(t.freq), Some(SizeClass::Full)),
        0
    );
    assert_eq!(
        ledger.solves(
            Some("multiblock"),
            Some(t.freq),
            Some(SizeClass::Background)
        ),
        8
    );
    assert_eq!(
        ledger.solves(Some("multiblock"), Some(t.freq), Some(SizeClass::Target)),
        8
    );
    assert_ne!(
        t.partition.restrict_background(out.model.values()).unwrap(),
        t.partition.restrict_background(t.model.values()).unwrap()
    );
}

/// Consistent data, start from a smooth bump on the truth.
#[test]
fn multiblock_converges_towards_irwri() {
    let l = layered();
    let data = synthesize_data(
        &l.model,
        &l.acq,
        &[l.freq],
        l.pml,
        None,
        &SolveLedger::new(),
    )
    .unwrap();
    let problem = FrequencyProblem::new(
        &l.model,
        &l.acq,
        data.record_at(l.freq).unwrap(),
        l.freq,
        l.pml,
    )
    .unwrap();
    let g = *l.model.grid();
    let v: Vec<f64> = l
        .model
        .velocity()
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let (x, z) = g.position(i);
            v + 60.0 * (-((x - 400.0).powi(2) + (z - 350.0).powi(2)) / 2.0e4).exp()
        })
        .collect();
    let init = Model::from_velocity(g, &v).unwrap();
    let config = InversionConfig {
        lambda_rel: 0.1,
        iterations: 60,
        bounds: l.bounds,
        pml_width: l.pml,
    };
    let irwri = irwri_frequency_batch(
        &init,
        &problem,
        &config,
        &NoRegularizer,
        &SolveLedger::new(),
    )
    .unwrap();
    let mb = multiblock_frequency_batch(
        &init,
        &problem,
        &l.partition,
        &config,
        &NoRegularizer,
        &SolveLedger::new(),
    )
    .unwrap();
    let b = problem.b.norm_fro();
    for out in [&irwri, &mb] {
        let violation = out.reports.last().unwrap().source_res / b;
        assert!(violation <= 1e-4, "source violation {violation:.3e}");
    }
    let dist = rel_vec(mb.model.values(), irwri.model.values());
    assert!(dist <= 0.05, "distance to irwri {dist}");
}

#[test]
fn drivers_keep_the_true_model_across_frequencies() {
    let l = layered();
    let freqs = [8.0, 12.0];
    let data = synthesize_data(&l.model, &l.acq, &freqs, l.pml, None, &SolveLedger::new()).unwrap();
    let schedule = FrequencySchedule(vec![Band {
        freqs_hz: freqs.to_vec(),
        passes: 2,
        iters_per_freq: 3,
    }]);
    assert_eq!(schedule.total_iterations(), 12);
    let config = InversionConfig {
        lambda_rel: 0.1,
        iterations: 3,
        bounds: l.bounds,
        pml_width: l.pml,
    };
    let ledger = SolveLedger::new();
    let out = irwri_multi_frequency(&l.model, &l.acq, &data, &schedule, &config, &ledger).unwrap();
    assert_eq!(out.reports.len(), 12);
    assert!(rel_vec(out.model.values(), l.model.values()) < 1e-8);
    assert_eq!(
        ledger.solves(None, Some(8.0), Some(SizeClass::Full)),
        2 * 3 * 3
    );
    let out = multiblock_multi_frequency(
        &l.model,
        &l.acq,
        &data,
        &l.partition,
        &schedule,
        &config,
        &SolveLedger::new(),
    )
    .unwrap();
    assert!(out.reports.iter().all(|r| r.model_change < 1e-8));
    assert!(rel_vec(out.model.values(), l.model.values()) < 1e-8);
}

#[test]
fn schedule_expands_passes_in_order() {
    let s = FrequencySchedule(vec![
        Band {
            freqs_hz: vec![3.0, 4.0],
            passes: 2,
            iters_per_freq: 1,
        },
        Band {
            freqs_hz: vec![5.0],
            passes: 1,
            iters_per_freq: 4,
        },
    ]);
    assert_eq!(
        s.batches(),
        vec![(3.0, 1), (4.0, 1), (3.0, 1), (4.0, 1), (5.0, 4)]
    );
    assert_eq!(s.frequencies(), vec![3.0, 4.0, 5.0]);
    assert!(FrequencySchedule(vec![]).validate().is_err());
}
