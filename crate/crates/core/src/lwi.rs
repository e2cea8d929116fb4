//! Localized wavefield inversion.
//!
//! Each frequency starts from one full-grid data-assimilated solve. Its
//! background part `U1⁰`, the background model `m1⁰` and the product
//! `A1(m1⁰) U1⁰` are then frozen, and every iteration solves only a
//! target-size system:
//!
//! ```text
//! U2  = [A2ᴴ A2]⁻¹ A2ᴴ (B + B̂ − A1 U1⁰)
//! m2  = node-wise least squares against B + B̂ − A1 U1⁰ − Δ2 U2
//! B̂  += B − A1 U1⁰ − A2(m2) U2
//! D̂  += D − P U          (tracked, does not feed back)
//! ```

use serde::{Deserialize, Serialize};

use crate::acquisition::{Acquisition, DataSet, ObservationOperator};
use crate::error::{Error, Result};
use crate::field::{relative_distance, FieldSet};
use crate::grid::{Model, Partition};
use crate::helmholtz::{ColumnBlocks, HelmholtzSystem, PaddedPartition, PmlSettings};
use crate::inversion::{
    augmented_lagrangian_terms, da_wavefield, relative_change, sweep_schedule, update_model_full,
    update_model_target, BatchOutput, BatchResult, DualState, FrequencyProblem, FrequencySchedule,
    InversionConfig, IterationReport, PartialExt, Residuals,
};
use crate::linsolve::{
    penalty_from_rule, solve_target_normal, Factorization, SizeClass, SolveContext, SolveLedger,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LwiConfig {
    pub inversion: InversionConfig,
    /// Refit the whole model once from the initial DA wavefield before
    /// freezing the background.
    #[serde(default)]
    pub update_background_once: bool,
    pub schedule: FrequencySchedule,
}

/// Background quantities held fixed for the rest of a frequency batch.
#[derive(Debug, Clone)]
pub struct FrozenBackground {
    /// Background rows of the initial DA wavefield.
    pub u1: FieldSet,
    /// Background squared slowness, interior order of the partition.
    pub m1: Vec<f64>,
    /// `A1(m1) U1` over the full padded grid.
    pub a1u1: FieldSet,
}

/// Iteration state of one frequency batch.
#[derive(Debug, Clone)]
pub struct LwiState {
    pub problem: FrequencyProblem,
    pub lambda: f64,
    pub model: Model,
    pub blocks: ColumnBlocks,
    pub background: FrozenBackground,
    pub u2: FieldSet,
    pub duals: DualState,
    pub iteration: usize,
}

impl LwiState {
    /// Current wavefield over the padded grid.
    pub fn wavefield(&self) -> Result<FieldSet> {
        self.blocks.partition().merge(&self.background.u1, &self.u2)
    }
}

/// One full DA solve at `m_init`, optional whole-model refit, then freeze.
pub fn init_frequency(
    model_init: &Model,
    problem: FrequencyProblem,
    partition: &Partition,
    config: &LwiConfig,
    ledger: &SolveLedger,
) -> Result<LwiState> {
    let ctx = SolveContext::new(ledger, "init", problem.freq_hz);
    let system = problem.assemble(model_init)?;
    let lambda = problem.penalty(&system, config.inversion.lambda_rel)?;
    let duals = DualState::zeros(
        problem.domain.len(),
        problem.obs.n_receivers(),
        problem.n_sources(),
    );
    let u0 = da_wavefield(
        &system,
        &problem.obs,
        lambda,
        &problem.b,
        &problem.d,
        &duals,
        ctx,
    )?;
    let (model, system) = if config.update_background_once {
        let m = update_model_full(
            &system,
            &u0,
            &problem.b,
            &duals.b_hat,
            &config.inversion.bounds,
            model_init,
        )?;
        let s = system.with_model(&m)?;
        (m, s)
    } else {
        (model_init.clone(), system)
    };
    let blocks = system.split_columns(partition)?;
    let lifted = blocks.partition();
    let u1 = u0.gather_rows(&lifted.background);
    let u2 = u0.gather_rows(&lifted.target);
    let a1u1 = blocks.a1().mul_fields(&u1)?;
    let background = FrozenBackground {
        u1,
        m1: partition.restrict_background(model.values())?,
        a1u1,
    };
    Ok(LwiState {
        problem,
        lambda,
        model,
        blocks,
        background,
        u2,
        duals,
        iteration: 0,
    })
}

/// `B + B̂ − A1 U1⁰`.
pub fn redatumed_rhs(
    background: &FrozenBackground,
    b: &FieldSet,
    b_hat: &FieldSet,
) -> Result<FieldSet> {
    b.add(b_hat)?.sub(&background.a1u1)
}

/// One LWI iteration: target wavefield, target model, duals.
pub fn lwi_iteration(
    state: &mut LwiState,
    config: &LwiConfig,
    partition: &Partition,
    ledger: &SolveLedger,
) -> Result<IterationReport> {
    let p = &state.problem;
    let ctx = SolveContext::new(ledger, "iterate", p.freq_hz);
    let rhs = redatumed_rhs(&state.background, &p.b, &state.duals.b_hat)?;
    let u2 = solve_target_normal(state.blocks.a2(), &rhs, ctx)?;
    let m2 = update_model_target(
        &state.blocks,
        &u2,
        &state.background.a1u1,
        &p.b,
        &state.duals.b_hat,
        &config.inversion.bounds,
    )?;
    let blocks = state.blocks.with_target_model(&m2)?;
    let au = state.background.a1u1.add(&blocks.a2().mul_fields(&u2)?)?;
    let u = blocks.partition().merge(&state.background.u1, &u2)?;
    let pu = p.obs.apply(&u)?;
    let psi = augmented_lagrangian_terms(&au, &pu, &p.b, &p.d, &state.duals, state.lambda)?;
    let res: Residuals = state.duals.accumulate(&au, &pu, &p.b, &p.d)?;
    let change = relative_change(&m2, state.blocks.m2());
    state.model = state.model.with_values_at(partition.target(), &m2)?;
    state.blocks = blocks;
    state.u2 = u2;
    state.iteration += 1;
    Ok(IterationReport {
        phase: "iterate".into(),
        iter: state.iteration,
        freq_hz: p.freq_hz,
        data_res: res.data,
        source_res: res.source,
        model_change: change,
        psi,
        full_solves: ledger.solves(None, None, Some(SizeClass::Full)),
        target_solves: ledger.solves(None, None, Some(SizeClass::Target)),
        b_hat_norm: state.duals.b_hat.norm_fro(),
        d_hat_norm: state.duals.d_hat.norm_fro(),
    })
}

/// One frequency batch: init plus `iterations` LWI iterations.
pub fn lwi_frequency_batch(
    model_init: &Model,
    problem: FrequencyProblem,
    partition: &Partition,
    config: &LwiConfig,
    iterations: usize,
    ledger: &SolveLedger,
) -> BatchResult {
    let mut reports = Vec::new();
    let mut state = init_frequency(model_init, problem, partition, config, ledger)
        .or_partial(model_init, &reports)?;
    for _ in 0..iterations {
        let report = lwi_iteration(&mut state, config, partition, ledger)
            .or_partial(&state.model, &reports)?;
        reports.push(report);
    }
    Ok(BatchOutput {
        model: state.model,
        reports,
    })
}

/// Sweeps the configured schedule. The background model only changes through
/// the optional once-per-frequency refit.
pub fn lwi_multi_frequency(
    model_init: &Model,
    acq: &Acquisition,
    data: &DataSet,
    partition: &Partition,
    config: &LwiConfig,
    ledger: &SolveLedger,
) -> BatchResult {
    config.inversion.validate().or_partial(model_init, &[])?;
    sweep_schedule(
        model_init,
        acq,
        data,
        &config.schedule,
        config.inversion.pml_width,
        |m, problem, iterations| {
            lwi_frequency_batch(m, problem, partition, config, iterations, ledger)
        },
    )
}

/// Target wavefields extracted from two background wavefields, against truth.
///
/// Both extractions solve `[A2ᴴA2] U2 = A2ᴴ (B − A1 U1)` with the operator of
/// the true model, so they differ only in the background field `U1`: the
/// plain PDE solution in `model_background` (naive) or the DA wavefield in
/// `model_background` fitted to data observed in `model_true`.
#[derive(Debug, Clone)]
pub struct WavefieldComparison {
    pub partition: PaddedPartition,
    pub u_true: FieldSet,
    pub u1_naive: FieldSet,
    pub u1_da: FieldSet,
    pub u2_true: FieldSet,
    pub u2_naive: FieldSet,
    pub u2_da: FieldSet,
    /// `||U2_naive − U2_true||_F / ||U2_true||_F`
    pub error_naive: f64,
    /// `||U2_da − U2_true||_F / ||U2_true||_F`
    pub error_da: f64,
}

impl WavefieldComparison {
    pub fn ratio(&self) -> f64 {
        self.error_da / self.error_naive
    }
}

#[allow(clippy::too_many_arguments)]
pub fn extract_target_wavefield_comparison(
    model_background: &Model,
    model_true: &Model,
    partition: &Partition,
    freq_hz: f64,
    acq: &Acquisition,
    pml_width: usize,
    lambda_rel: f64,
    ledger: &SolveLedger,
) -> Result<WavefieldComparison> {
    if model_background.grid() != model_true.grid() {
        return Err(Error::shape(
            "background and true models live on different grids",
        ));
    }
    let omega = 2.0 * std::f64::consts::PI * freq_hz;
    let pml = PmlSettings::for_model(pml_width, model_background);
    let sys_true = HelmholtzSystem::assemble_with(model_true, omega, pml)?;
    let sys_bg = sys_true.with_model(model_background)?;
    let b = acq.source_terms(sys_true.domain(), freq_hz)?;
    let obs = ObservationOperator::new(acq, sys_true.domain())?;

    let ctx = SolveContext::new(ledger, "reference", freq_hz);
    let u_true = Factorization::lu(sys_true.matrix(), SizeClass::Full, ctx)?.solve(&b, ctx)?;
    let d = obs.apply(&u_true)?;
    let ctx = ctx.with_phase("naive");
    let u_naive = Factorization::lu(sys_bg.matrix(), SizeClass::Full, ctx)?.solve(&b, ctx)?;
    let lambda = penalty_from_rule(lambda_rel, sys_bg.matrix(), &obs, &b, &d)?;
    let zero = DualState::zeros(b.rows(), obs.n_receivers(), b.cols());
    let u_da = da_wavefield(&sys_bg, &obs, lambda, &b, &d, &zero, ctx.with_phase("init"))?;

    let blocks = sys_true.split_columns(partition)?;
    let lifted = blocks.partition().clone();
    let ctx = ctx.with_phase("extract");
    let extract = |u1: &FieldSet| -> Result<FieldSet> {
        solve_target_normal(blocks.a2(), &b.sub(&blocks.a1().mul_fields(u1)?)?, ctx)
    };
    let u1_naive = u_naive.gather_rows(&lifted.background);
    let u1_da = u_da.gather_rows(&lifted.background);
    let u2_naive = extract(&u1_naive)?;
    let u2_da = extract(&u1_da)?;
    let u2_true = u_true.gather_rows(&lifted.target);
    Ok(WavefieldComparison {
        error_naive: relative_distance(&u2_naive, &u2_true),
        error_da: relative_distance(&u2_da, &u2_true),
        partition: lifted,
        u_true,
        u1_naive,
        u1_da,
        u2_true,
        u2_naive,
        u2_da,
    })
}
