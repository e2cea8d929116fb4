//! ADMM building blocks shared by the full-domain and localized inversions,
//! and the two full-domain reference loops.
//!
//! Inside one iteration the wavefields are updated before the model, and the
//! duals last. Duals start at zero for every frequency batch.

use serde::{Deserialize, Serialize};

use crate::acquisition::{Acquisition, DataSet, ObservationOperator};
use crate::error::{Error, Result};
use crate::field::FieldSet;
use crate::grid::{BoundConstraint, Model, Partition};
use crate::helmholtz::{ColumnBlocks, HelmholtzSystem, PaddedDomain, PmlSettings};
use crate::linsolve::{
    penalty_from_rule, solve_augmented_normal, solve_regularized_normal, SizeClass, SolveContext,
    SolveLedger,
};
use num_complex::Complex64 as c64;

/// Denominators below this fraction of the largest one keep the prior value.
pub const ILLUMINATION_THRESHOLD: f64 = 1e-10;

/// Model-domain penalty `R(m)`. Only its value enters the objective; the
/// closed-form model updates assume the zero regularizer.
pub trait Regularizer: Send + Sync {
    fn value(&self, m: &[f64]) -> f64;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct NoRegularizer;

impl Regularizer for NoRegularizer {
    fn value(&self, _m: &[f64]) -> f64 {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InversionConfig {
    pub lambda_rel: f64,
    /// Iterations per frequency batch.
    pub iterations: usize,
    pub bounds: BoundConstraint,
    pub pml_width: usize,
}

impl InversionConfig {
    pub fn validate(&self) -> Result<()> {
        self.bounds.validate()?;
        if self.iterations == 0 {
            return Err(Error::Config(
                "iterations per frequency must be at least 1".into(),
            ));
        }
        if !(self.lambda_rel > 0.0 && self.lambda_rel.is_finite()) {
            return Err(Error::Config(format!(
                "lambda_rel must be positive, got {}",
                self.lambda_rel
            )));
        }
        Ok(())
    }
}

/// A band of frequencies swept low to high, `passes` times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Band {
    pub freqs_hz: Vec<f64>,
    #[serde(default = "one")]
    pub passes: usize,
    pub iters_per_freq: usize,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FrequencySchedule(pub Vec<Band>);

impl FrequencySchedule {
    pub fn validate(&self) -> Result<()> {
        if self.0.is_empty() {
            return Err(Error::Config("frequency schedule is empty".into()));
        }
        for band in &self.0 {
            crate::acquisition::validate_frequencies(&band.freqs_hz)?;
            if band.passes == 0 || band.iters_per_freq == 0 {
                return Err(Error::Config(
                    "passes and iters_per_freq must be at least 1".into(),
                ));
            }
        }
        Ok(())
    }

    /// Ordered `(frequency, iterations)` batches.
    pub fn batches(&self) -> Vec<(f64, usize)> {
        let mut out = Vec::new();
        for band in &self.0 {
            for _ in 0..band.passes {
                out.extend(band.freqs_hz.iter().map(|&f| (f, band.iters_per_freq)));
            }
        }
        out
    }

    pub fn total_iterations(&self) -> usize {
        self.batches().iter().map(|b| b.1).sum()
    }

    /// Every distinct frequency, ascending.
    pub fn frequencies(&self) -> Vec<f64> {
        let mut f: Vec<f64> = self
            .0
            .iter()
            .flat_map(|b| b.freqs_hz.iter().copied())
            .collect();
        f.sort_by(|a, b| a.partial_cmp(b).unwrap());
        f.dedup();
        f
    }
}

/// Per-frequency quantities fixed for a whole batch.
#[derive(Debug, Clone)]
pub struct FrequencyProblem {
    pub freq_hz: f64,
    pub omega: f64,
    pub pml: PmlSettings,
    pub domain: PaddedDomain,
    /// Source terms over the padded grid.
    pub b: FieldSet,
    /// Observed data, receivers x sources.
    pub d: FieldSet,
    pub obs: ObservationOperator,
}

impl FrequencyProblem {
    pub fn new(
        model: &Model,
        acq: &Acquisition,
        data: &FieldSet,
        freq_hz: f64,
        pml_width: usize,
    ) -> Result<Self> {
        let domain = PaddedDomain::new(*model.grid(), pml_width);
        let b = acq.source_terms(&domain, freq_hz)?;
        let obs = ObservationOperator::new(acq, &domain)?;
        if data.rows() != obs.n_receivers() || data.cols() != acq.n_sources() {
            return Err(Error::shape(format!(
                "data record is {}x{}, acquisition has {} receivers and {} sources",
                data.rows(),
                data.cols(),
                obs.n_receivers(),
                acq.n_sources()
            )));
        }
        Ok(FrequencyProblem {
            freq_hz,
            omega: 2.0 * std::f64::consts::PI * freq_hz,
            pml: PmlSettings::for_model(pml_width, model),
            domain,
            b,
            d: data.clone(),
            obs,
        })
    }

    pub fn assemble(&self, model: &Model) -> Result<HelmholtzSystem> {
        HelmholtzSystem::assemble_with(model, self.omega, self.pml)
    }

    pub fn n_sources(&self) -> usize {
        self.b.cols()
    }

    pub fn penalty(&self, system: &HelmholtzSystem, lambda_rel: f64) -> Result<f64> {
        penalty_from_rule(lambda_rel, system.matrix(), &self.obs, &self.b, &self.d)
    }
}

/// Scaled duals: `b_hat` for the wave equation (grid x sources), `d_hat`
/// for the data (receivers x sources).
#[derive(Debug, Clone, PartialEq)]
pub struct DualState {
    pub b_hat: FieldSet,
    pub d_hat: FieldSet,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residuals {
    /// `||A U - B||_F`
    pub source: f64,
    /// `||P U - D||_F`
    pub data: f64,
}

impl DualState {
    pub fn zeros(n: usize, n_receivers: usize, n_sources: usize) -> Self {
        DualState {
            b_hat: FieldSet::zeros(n, n_sources),
            d_hat: FieldSet::zeros(n_receivers, n_sources),
        }
    }

    /// `B_hat += B - AU`, `D_hat += D - PU` given the products `AU` and `PU`.
    pub fn accumulate(
        &mut self,
        au: &FieldSet,
        pu: &FieldSet,
        b: &FieldSet,
        d: &FieldSet,
    ) -> Result<Residuals> {
        let rb = b.sub(au)?;
        let rd = d.sub(pu)?;
        self.b_hat.axpy(c64::new(1.0, 0.0), &rb)?;
        self.d_hat.axpy(c64::new(1.0, 0.0), &rd)?;
        Ok(Residuals {
            source: rb.norm_fro(),
            data: rd.norm_fro(),
        })
    }
}

/// Dual update over column blocks: `B_hat += B - A1 U1 - A2 U2`, `D_hat += D - P U`.
pub fn update_duals(
    duals: &mut DualState,
    blocks: &ColumnBlocks,
    u1: &FieldSet,
    u2: &FieldSet,
    b: &FieldSet,
    d: &FieldSet,
    obs: &ObservationOperator,
) -> Result<Residuals> {
    let au = blocks.apply(u1, u2)?;
    let pu = obs.apply(&blocks.partition().merge(u1, u2)?)?;
    duals.accumulate(&au, &pu, b, d)
}

/// `||PU - D - D_hat||^2 + lambda ||AU - B - B_hat||^2` from precomputed products.
pub fn augmented_lagrangian_terms(
    au: &FieldSet,
    pu: &FieldSet,
    b: &FieldSet,
    d: &FieldSet,
    duals: &DualState,
    lambda: f64,
) -> Result<f64> {
    let data = pu.sub(d)?.sub(&duals.d_hat)?.norm_fro();
    let wave = au.sub(b)?.sub(&duals.b_hat)?.norm_fro();
    Ok(data * data + lambda * wave * wave)
}

/// Scaled augmented Lagrangian over column blocks,
/// `R1(m1) + R2(m2) + ||PU - D - D_hat||^2 + lambda ||A1U1 + A2U2 - B - B_hat||^2`.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_augmented_lagrangian(
    blocks: &ColumnBlocks,
    u1: &FieldSet,
    u2: &FieldSet,
    m1: &[f64],
    m2: &[f64],
    obs: &ObservationOperator,
    b: &FieldSet,
    d: &FieldSet,
    duals: &DualState,
    lambda: f64,
    regularizer: &dyn Regularizer,
) -> Result<f64> {
    let au = blocks.apply(u1, u2)?;
    let pu = obs.apply(&blocks.partition().merge(u1, u2)?)?;
    Ok(regularizer.value(m1)
        + regularizer.value(m2)
        + augmented_lagrangian_terms(&au, &pu, b, d, duals, lambda)?)
}

/// Data-assimilated wavefield
/// `U = [lambda A^H A + P^H P]^-1 [lambda A^H (B + B_hat) + P^H (D + D_hat)]`.
pub fn da_wavefield(
    system: &HelmholtzSystem,
    obs: &ObservationOperator,
    lambda: f64,
    b: &FieldSet,
    d: &FieldSet,
    duals: &DualState,
    ctx: SolveContext<'_>,
) -> Result<FieldSet> {
    let rhs_wave = b.add(&duals.b_hat)?;
    let rhs_data = d.add(&duals.d_hat)?;
    solve_augmented_normal(system.matrix(), obs, lambda, &rhs_wave, &rhs_data, ctx)
}

/// Closed-form node-wise least squares over sources:
/// `m_j = Re(sum_i conj(c_j u_ij) y_ij) / sum_i |c_j u_ij|^2`, then projected.
///
/// `u` and `y` hold one row per updated node.
pub fn nodewise_model_update(
    u: &FieldSet,
    y: &FieldSet,
    coef: &[c64],
    prev: &[f64],
    bounds: &BoundConstraint,
) -> Vec<f64> {
    let n = u.rows();
    let mut num = vec![0.0; n];
    let mut den = vec![0.0; n];
    for i in 0..u.cols() {
        let (uc, yc) = (u.col(i), y.col(i));
        for j in 0..n {
            let lu = coef[j] * uc[j];
            num[j] += (lu.conj() * yc[j]).re;
            den[j] += lu.norm_sqr();
        }
    }
    let floor = ILLUMINATION_THRESHOLD * den.iter().copied().fold(0.0, f64::max);
    (0..n)
        .map(|j| {
            if den[j] > floor && den[j] > 0.0 {
                bounds.project_value(num[j] / den[j])
            } else {
                prev[j]
            }
        })
        .collect()
}

/// Model update at the listed interior nodes from the full-grid field `u`:
/// residual `r = B + B_hat - K U` with `K` the model-free part of `A`.
pub fn update_model_nodes(
    system: &HelmholtzSystem,
    u: &FieldSet,
    b: &FieldSet,
    b_hat: &FieldSet,
    bounds: &BoundConstraint,
    model: &Model,
    interior_nodes: &[usize],
) -> Result<Model> {
    let domain = system.domain();
    let rhs = b.add(b_hat)?.sub(&system.stiffness().mul_fields(u)?)?;
    let padded: Vec<usize> = interior_nodes
        .iter()
        .map(|&i| domain.to_padded(i))
        .collect();
    let coef: Vec<c64> = padded.iter().map(|&p| system.mass()[p]).collect();
    let prev: Vec<f64> = interior_nodes.iter().map(|&i| model.values()[i]).collect();
    let updated = nodewise_model_update(
        &u.gather_rows(&padded),
        &rhs.gather_rows(&padded),
        &coef,
        &prev,
        bounds,
    );
    model.with_values_at(interior_nodes, &updated)
}

/// Full-domain model update (all interior nodes).
pub fn update_model_full(
    system: &HelmholtzSystem,
    u: &FieldSet,
    b: &FieldSet,
    b_hat: &FieldSet,
    bounds: &BoundConstraint,
    model: &Model,
) -> Result<Model> {
    let all: Vec<usize> = (0..model.grid().len()).collect();
    update_model_nodes(system, u, b, b_hat, bounds, model, &all)
}

/// Target model update minimizing `sum_i ||L(U2_i) m2 - y_i||^2` with
/// `y_i = B_i + B_hat_i - A1(m1) U1_i - Laplacian2 U2_i`.
pub fn update_model_target(
    blocks: &ColumnBlocks,
    u2: &FieldSet,
    a1u1: &FieldSet,
    b: &FieldSet,
    b_hat: &FieldSet,
    bounds: &BoundConstraint,
) -> Result<Vec<f64>> {
    let y = b
        .add(b_hat)?
        .sub(a1u1)?
        .sub(&blocks.laplacian2().mul_fields(u2)?)?;
    let rows = y.gather_rows(&blocks.partition().target);
    Ok(nodewise_model_update(
        u2,
        &rows,
        blocks.mass2(),
        blocks.m2(),
        bounds,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationReport {
    pub phase: String,
    pub iter: usize,
    pub freq_hz: f64,
    pub data_res: f64,
    pub source_res: f64,
    pub model_change: f64,
    pub psi: f64,
    pub full_solves: u64,
    pub target_solves: u64,
    pub b_hat_norm: f64,
    pub d_hat_norm: f64,
}

impl IterationReport {
    #[allow(clippy::too_many_arguments)]
    fn new(
        phase: &str,
        iter: usize,
        freq_hz: f64,
        res: Residuals,
        model_change: f64,
        psi: f64,
        duals: &DualState,
        ledger: &SolveLedger,
    ) -> Self {
        IterationReport {
            phase: phase.to_string(),
            iter,
            freq_hz,
            data_res: res.data,
            source_res: res.source,
            model_change,
            psi,
            full_solves: ledger.solves(None, None, Some(SizeClass::Full)),
            target_solves: ledger.solves(None, None, Some(SizeClass::Target)),
            b_hat_norm: duals.b_hat.norm_fro(),
            d_hat_norm: duals.d_hat.norm_fro(),
        }
    }
}

pub fn reports_to_csv(reports: &[IterationReport]) -> String {
    let mut out = String::from("iter,freq_hz,data_res,source_res,model_change,psi,full_solves,target_solves,phase,b_hat_norm,d_hat_norm\n");
    for r in reports {
        out.push_str(&format!(
            "{},{},{:e},{:e},{:e},{:e},{},{},{},{:e},{:e}\n",
            r.iter,
            r.freq_hz,
            r.data_res,
            r.source_res,
            r.model_change,
            r.psi,
            r.full_solves,
            r.target_solves,
            r.phase,
            r.b_hat_norm,
            r.d_hat_norm
        ));
    }
    out
}

pub(crate) fn relative_change(new: &[f64], old: &[f64]) -> f64 {
    let diff: f64 = new.iter().zip(old).map(|(a, b)| (a - b) * (a - b)).sum();
    let base: f64 = old.iter().map(|a| a * a).sum();
    (diff / base.max(f64::MIN_POSITIVE)).sqrt()
}

#[derive(Debug, Clone)]
pub struct BatchOutput {
    pub model: Model,
    pub reports: Vec<IterationReport>,
}

/// A batch aborted by a solver failure, with whatever it produced so far.
#[derive(Debug)]
pub struct BatchFailure {
    pub error: Error,
    pub model: Model,
    pub reports: Vec<IterationReport>,
}

impl From<BatchFailure> for Error {
    fn from(f: BatchFailure) -> Self {
        f.error
    }
}

pub type BatchResult = std::result::Result<BatchOutput, Box<BatchFailure>>;

pub(crate) trait PartialExt<T> {
    fn or_partial(
        self,
        model: &Model,
        reports: &[IterationReport],
    ) -> std::result::Result<T, Box<BatchFailure>>;
}

impl<T> PartialExt<T> for Result<T> {
    fn or_partial(
        self,
        model: &Model,
        reports: &[IterationReport],
    ) -> std::result::Result<T, Box<BatchFailure>> {
        self.map_err(|error| {
            Box::new(BatchFailure {
                error,
                model: model.clone(),
                reports: reports.to_vec(),
            })
        })
    }
}

/// Full-domain ADMM at one frequency: DA wavefield, model update, dual update.
pub fn irwri_frequency_batch(
    model_init: &Model,
    problem: &FrequencyProblem,
    config: &InversionConfig,
    regularizer: &dyn Regularizer,
    ledger: &SolveLedger,
) -> BatchResult {
    let mut reports = Vec::new();
    let mut model = model_init.clone();
    config.validate().or_partial(&model, &reports)?;
    let ctx = SolveContext::new(ledger, "irwri", problem.freq_hz);
    let mut system = problem.assemble(&model).or_partial(&model, &reports)?;
    let lambda = problem
        .penalty(&system, config.lambda_rel)
        .or_partial(&model, &reports)?;
    let mut duals = DualState::zeros(
        problem.domain.len(),
        problem.obs.n_receivers(),
        problem.n_sources(),
    );
    for k in 0..config.iterations {
        let mut step = || -> Result<(Model, HelmholtzSystem, IterationReport)> {
            let u = da_wavefield(
                &system,
                &problem.obs,
                lambda,
                &problem.b,
                &problem.d,
                &duals,
                ctx,
            )?;
            let next = update_model_full(
                &system,
                &u,
                &problem.b,
                &duals.b_hat,
                &config.bounds,
                &model,
            )?;
            let next_system = system.with_model(&next)?;
            let au = next_system.apply(&u)?;
            let pu = problem.obs.apply(&u)?;
            let psi = regularizer.value(next.values())
                + augmented_lagrangian_terms(&au, &pu, &problem.b, &problem.d, &duals, lambda)?;
            let res = duals.accumulate(&au, &pu, &problem.b, &problem.d)?;
            let change = relative_change(next.values(), model.values());
            let report = IterationReport::new(
                "irwri",
                k + 1,
                problem.freq_hz,
                res,
                change,
                psi,
                &duals,
                ledger,
            );
            Ok((next, next_system, report))
        };
        let (next, next_system, report) = step().or_partial(&model, &reports)?;
        model = next;
        system = next_system;
        reports.push(report);
    }
    Ok(BatchOutput { model, reports })
}

/// Four-block ADMM at one frequency: `U1`, `U2`, `m1`, `m2`, then duals.
///
/// `U2` starts from one full-grid DA solve (phase `multiblock-setup`);
/// afterwards only background-size and target-size systems are solved.
pub fn multiblock_frequency_batch(
    model_init: &Model,
    problem: &FrequencyProblem,
    partition: &Partition,
    config: &InversionConfig,
    regularizer: &dyn Regularizer,
    ledger: &SolveLedger,
) -> BatchResult {
    let mut reports = Vec::new();
    let mut model = model_init.clone();
    config.validate().or_partial(&model, &reports)?;
    let setup = || -> Result<(HelmholtzSystem, ColumnBlocks, f64, FieldSet)> {
        let system = problem.assemble(&model)?;
        let blocks = system.split_columns(partition)?;
        let lambda = problem.penalty(&system, config.lambda_rel)?;
        let zero = DualState::zeros(
            problem.domain.len(),
            problem.obs.n_receivers(),
            problem.n_sources(),
        );
        let ctx = SolveContext::new(ledger, "multiblock-setup", problem.freq_hz);
        let u0 = da_wavefield(
            &system,
            &problem.obs,
            lambda,
            &problem.b,
            &problem.d,
            &zero,
            ctx,
        )?;
        Ok((system, blocks, lambda, u0))
    };
    let (mut system, mut blocks, lambda, u0) = setup().or_partial(&model, &reports)?;
    let lifted = blocks.partition().clone();
    let (p1, p2) = problem.obs.split(&lifted);
    let mut u2 = u0.gather_rows(&lifted.target);
    let mut duals = DualState::zeros(
        problem.domain.len(),
        problem.obs.n_receivers(),
        problem.n_sources(),
    );
    let ctx = SolveContext::new(ledger, "multiblock", problem.freq_hz);
    let (b, d) = (&problem.b, &problem.d);
    for k in 0..config.iterations {
        let step = || -> Result<_> {
            let wave = b.add(&duals.b_hat)?;
            let data = d.add(&duals.d_hat)?;
            let rhs_w = wave.sub(&blocks.a2().mul_fields(&u2)?)?;
            let rhs_d = data.sub(&p2.apply(&u2)?)?;
            let new_u1 = solve_regularized_normal(
                blocks.a1(),
                Some(&p1),
                lambda,
                &rhs_w,
                Some(&rhs_d),
                SizeClass::Background,
                ctx,
            )?;
            let rhs_w = wave.sub(&blocks.a1().mul_fields(&new_u1)?)?;
            let rhs_d = data.sub(&p1.apply(&new_u1)?)?;
            let new_u2 = solve_regularized_normal(
                blocks.a2(),
                Some(&p2),
                lambda,
                &rhs_w,
                Some(&rhs_d),
                SizeClass::Target,
                ctx,
            )?;
            let u = lifted.merge(&new_u1, &new_u2)?;
            let m1 = update_model_nodes(
                &system,
                &u,
                b,
                &duals.b_hat,
                &config.bounds,
                &model,
                partition.background(),
            )?;
            let m12 = update_model_nodes(
                &system.with_model(&m1)?,
                &u,
                b,
                &duals.b_hat,
                &config.bounds,
                &m1,
                partition.target(),
            )?;
            let next_system = system.with_model(&m12)?;
            let next_blocks = next_system.split_columns(partition)?;
            let au = next_blocks.apply(&new_u1, &new_u2)?;
            let pu = problem.obs.apply(&u)?;
            let psi = regularizer.value(&partition.restrict_background(m12.values())?)
                + regularizer.value(&partition.restrict_target(m12.values())?)
                + augmented_lagrangian_terms(&au, &pu, b, d, &duals, lambda)?;
            let mut next_duals = duals.clone();
            let res = next_duals.accumulate(&au, &pu, b, d)?;
            let change = relative_change(m12.values(), model.values());
            let report = IterationReport::new(
                "multiblock",
                k + 1,
                problem.freq_hz,
                res,
                change,
                psi,
                &next_duals,
                ledger,
            );
            Ok((
                new_u1,
                new_u2,
                m12,
                next_system,
                next_blocks,
                next_duals,
                report,
            ))
        };
        let (_, nu2, m, s, bl, du, report) = step().or_partial(&model, &reports)?;
        u2 = nu2;
        model = m;
        system = s;
        blocks = bl;
        duals = du;
        reports.push(report);
    }
    Ok(BatchOutput { model, reports })
}

/// Runs `batch` for every `(frequency, iterations)` of `schedule`, carrying
/// the model forward and concatenating reports.
pub fn sweep_schedule<F>(
    model_init: &Model,
    acq: &Acquisition,
    data: &DataSet,
    schedule: &FrequencySchedule,
    pml_width: usize,
    mut batch: F,
) -> BatchResult
where
    F: FnMut(&Model, FrequencyProblem, usize) -> BatchResult,
{
    let mut model = model_init.clone();
    let mut reports = Vec::new();
    schedule.validate().or_partial(&model, &reports)?;
    for (freq, iters) in schedule.batches() {
        let problem = data
            .record_at(freq)
            .and_then(|d| FrequencyProblem::new(&model, acq, d, freq, pml_width))
            .or_partial(&model, &reports)?;
        match batch(&model, problem, iters) {
            Ok(out) => {
                model = out.model;
                reports.extend(out.reports);
            }
            Err(mut fail) => {
                reports.append(&mut fail.reports);
                return Err(Box::new(BatchFailure {
                    error: fail.error,
                    model: fail.model,
                    reports,
                }));
            }
        }
    }
    Ok(BatchOutput { model, reports })
}

pub fn irwri_multi_frequency(
    model_init: &Model,
    acq: &Acquisition,
    data: &DataSet,
    schedule: &FrequencySchedule,
    config: &InversionConfig,
    ledger: &SolveLedger,
) -> BatchResult {
    sweep_schedule(
        model_init,
        acq,
        data,
        schedule,
        config.pml_width,
        |m, problem, iterations| {
            irwri_frequency_batch(
                m,
                &problem,
                &InversionConfig {
                    iterations,
                    ..*config
                },
                &NoRegularizer,
                ledger,
            )
        },
    )
}

pub fn multiblock_multi_frequency(
    model_init: &Model,
    acq: &Acquisition,
    data: &DataSet,
    partition: &Partition,
    schedule: &FrequencySchedule,
    config: &InversionConfig,
    ledger: &SolveLedger,
) -> BatchResult {
    sweep_schedule(
        model_init,
        acq,
        data,
        schedule,
        config.pml_width,
        |m, problem, iterations| {
            multiblock_frequency_batch(
                m,
                &problem,
                partition,
                &InversionConfig {
                    iterations,
                    ..*config
                },
                &NoRegularizer,
                ledger,
            )
        },
    )
}
