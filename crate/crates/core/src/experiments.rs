//! End-to-end drivers behind the command-line verbs. Every driver writes its
//! resolved configuration first and flushes artifacts as soon as they exist,
//! so a failed run still leaves everything computed before the failure.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::acquisition::{synthesize_data, Acquisition, DataSet};
use crate::config::{apply_perturbations, Algorithm, ExperimentConfig};
use crate::error::{Error, Result};
use crate::field::FieldSet;
use crate::grid::{Grid, Model, Partition};
use crate::helmholtz::PaddedDomain;
use crate::inversion::{
    irwri_multi_frequency, multiblock_multi_frequency, reports_to_csv, BatchFailure, BatchResult,
    FrequencySchedule, IterationReport,
};
use crate::io::{write_data, write_model, ModelFile};
use crate::linsolve::{SizeClass, SolveLedger};
use crate::lwi::{extract_target_wavefield_comparison, lwi_multi_frequency, LwiConfig};
use crate::raster::{export_raster, RasterFormat};

/// Output directory with typed writers.
#[derive(Debug, Clone)]
pub struct Artifacts {
    root: PathBuf,
}

impl Artifacts {
    pub fn create(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        std::fs::create_dir_all(&root)?;
        Ok(Artifacts { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn text(&self, name: &str, text: &str) -> Result<()> {
        Ok(std::fs::write(self.path(name), text)?)
    }

    pub fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        let mut text =
            serde_json::to_string_pretty(value).map_err(|e| Error::Config(e.to_string()))?;
        text.push('\n');
        self.text(name, &text)
    }

    /// Writes `name.csv`, `name.bin` (+ sidecar) and `name.pgm`.
    pub fn raster(&self, name: &str, values: &[f64], grid: &Grid) -> Result<()> {
        for format in [
            RasterFormat::Csv,
            RasterFormat::F64Binary,
            RasterFormat::Pgm16,
        ] {
            export_raster(
                values,
                grid.nx,
                grid.nz,
                self.path(&format!("{name}.{}", format.extension())),
                format,
            )?;
        }
        Ok(())
    }

    pub fn model(&self, name: &str, model: &Model) -> Result<()> {
        write_model(
            self.path(&format!("{name}.lwim")),
            &ModelFile::from_model(model)?,
        )?;
        self.raster(name, &model.velocity(), model.grid())
    }

    pub fn ledger(&self, name: &str, ledger: &SolveLedger) -> Result<()> {
        self.text(&format!("{name}.csv"), &ledger.to_csv())
    }

    pub fn reports(&self, name: &str, reports: &[IterationReport]) -> Result<()> {
        self.text(&format!("{name}.csv"), &reports_to_csv(reports))
    }
}

/// Solve counts of one ledger by size class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolveCounts {
    pub full: u64,
    pub background: u64,
    pub target: u64,
    pub factorizations: u64,
}

impl SolveCounts {
    pub fn of(ledger: &SolveLedger) -> Self {
        SolveCounts {
            full: ledger.solves(None, None, Some(SizeClass::Full)),
            background: ledger.solves(None, None, Some(SizeClass::Background)),
            target: ledger.solves(None, None, Some(SizeClass::Target)),
            factorizations: ledger.factorizations(None, None, None),
        }
    }
}

fn synthesize(
    config: &ExperimentConfig,
    model: &Model,
    acq: &Acquisition,
    freqs: &[f64],
    ledger: &SolveLedger,
) -> Result<DataSet> {
    synthesize_data(model, acq, freqs, config.pml_width, config.noise(), ledger)
}

/// Writes the true model and synthetic data at every scheduled frequency.
pub fn run_forward(config: &ExperimentConfig, out: &Artifacts) -> Result<DataSet> {
    out.text("config.resolved.json", &config.to_json())?;
    let truth = config.true_model()?;
    out.model("model_true", &truth)?;
    let ledger = SolveLedger::new();
    let data = synthesize(
        config,
        &truth,
        &config.acquisition()?,
        &config.schedule.frequencies(),
        &ledger,
    )?;
    write_data(out.path("data.lwid"), &data)?;
    out.ledger("ledger_forward", &ledger)?;
    Ok(data)
}

#[derive(Debug, Clone, Serialize)]
pub struct InvertSummary {
    pub algorithm: Algorithm,
    pub iterations: usize,
    pub counts: SolveCounts,
    pub final_data_residual: f64,
    pub model_rms_error: Option<f64>,
    pub initial_rms_error: Option<f64>,
}

fn rms(a: &[f64], b: &[f64], idx: Option<&[usize]>) -> f64 {
    let pairs: Vec<(f64, f64)> = match idx {
        Some(idx) => idx.iter().map(|&i| (a[i], b[i])).collect(),
        None => a.iter().copied().zip(b.iter().copied()).collect(),
    };
    (pairs.iter().map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / pairs.len().max(1) as f64).sqrt()
}

#[allow(clippy::too_many_arguments)]
fn run_algorithm(
    algorithm: Algorithm,
    config: &ExperimentConfig,
    lwi: &LwiConfig,
    schedule: &FrequencySchedule,
    initial: &Model,
    acq: &Acquisition,
    data: &DataSet,
    partition: &Partition,
    ledger: &SolveLedger,
) -> BatchResult {
    let inv = config.inversion(1);
    match algorithm {
        Algorithm::Irwri => irwri_multi_frequency(initial, acq, data, schedule, &inv, ledger),
        Algorithm::Multiblock => {
            multiblock_multi_frequency(initial, acq, data, partition, schedule, &inv, ledger)
        }
        Algorithm::Lwi => lwi_multi_frequency(
            initial,
            acq,
            data,
            partition,
            &LwiConfig {
                schedule: schedule.clone(),
                ..lwi.clone()
            },
            ledger,
        ),
    }
}

/// Flushes partial reports and the last model of a failed batch.
fn flush_failure(out: &Artifacts, name: &str, fail: BatchFailure) -> Error {
    let _ = out.reports(&format!("reports_{name}"), &fail.reports);
    let _ = out.model(&format!("{name}_partial"), &fail.model);
    let _ = out.text(&format!("{name}_failure.txt"), &format!("{}\n", fail.error));
    fail.error
}

/// Inverts recorded (or synthesized) data with the configured algorithm.
pub fn run_invert(config: &ExperimentConfig, out: &Artifacts) -> Result<InvertSummary> {
    out.text("config.resolved.json", &config.to_json())?;
    let acq = config.acquisition()?;
    // With recorded data the true model is optional and only used for error reporting.
    let truth = match &config.data_file {
        None => Some(config.true_model()?),
        Some(_) => config.true_model().ok(),
    };
    let data = match &config.data_file {
        Some(path) => crate::io::read_data(path)?,
        None => synthesize(
            config,
            truth.as_ref().expect("synthesis needs the true model"),
            &acq,
            &config.schedule.frequencies(),
            &SolveLedger::new(),
        )?,
    };
    let initial = match (&config.initial_model, &truth) {
        (Some(spec), _) => spec.build(&config.grid)?,
        (None, Some(t)) => config.initial(t)?,
        (None, None) => {
            return Err(Error::Config(
                "initial_model is required when the true model is unavailable".into(),
            ))
        }
    };
    out.model("model_initial", &initial)?;
    let partition = config.target_partition()?;
    let ledger = SolveLedger::new();
    let result = run_algorithm(
        config.algorithm,
        config,
        &config.lwi(),
        &config.schedule,
        &initial,
        &acq,
        &data,
        &partition,
        &ledger,
    );
    out.ledger("ledger", &ledger)?;
    let output = result.map_err(|f| flush_failure(out, "invert", *f))?;
    out.reports("reports", &output.reports)?;
    out.model("model_final", &output.model)?;
    let summary = InvertSummary {
        algorithm: config.algorithm,
        iterations: output.reports.len(),
        counts: SolveCounts::of(&ledger),
        final_data_residual: output.reports.last().map_or(f64::NAN, |r| r.data_res),
        model_rms_error: truth
            .as_ref()
            .map(|t| rms(&output.model.velocity(), &t.velocity(), None)),
        initial_rms_error: truth
            .as_ref()
            .map(|t| rms(&initial.velocity(), &t.velocity(), None)),
    };
    out.json("summary.json", &summary)?;
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InclusionSummary {
    pub freq_hz: f64,
    pub n_receivers: usize,
    pub n_target_nodes: usize,
    pub error_naive: f64,
    pub error_da: f64,
    pub ratio: f64,
    pub counts: SolveCounts,
}

/// First-source column of `values` scattered onto the interior grid.
fn embed(values: &FieldSet, rows: &[usize], domain: &PaddedDomain) -> (Vec<f64>, Vec<f64>) {
    let n = domain.grid().len();
    let (mut re, mut im) = (vec![0.0; n], vec![0.0; n]);
    for (k, &p) in rows.iter().enumerate() {
        if let Some(i) = domain.to_interior(p) {
            re[i] = values.get(k, 0).re;
            im[i] = values.get(k, 0).im;
        }
    }
    (re, im)
}

/// Compares naive and data-assimilated background wavefields as drivers of
/// the target-only wave equation around a circular inclusion.
pub fn run_inclusion_experiment(
    config: &ExperimentConfig,
    out: &Artifacts,
) -> Result<InclusionSummary> {
    out.text("config.resolved.json", &config.to_json())?;
    let truth = config.true_model()?;
    let background = Model::homogeneous(config.grid, config.inclusion.background_velocity)?;
    let acq = config.acquisition()?;
    let partition = config.target_partition()?;
    out.model("model_true", &truth)?;
    let ledger = SolveLedger::new();
    let freq = config.inclusion.freq_hz;
    let cmp = extract_target_wavefield_comparison(
        &background,
        &truth,
        &partition,
        freq,
        &acq,
        config.pml_width,
        config.lambda_rel,
        &ledger,
    )?;
    out.ledger("ledger", &ledger)?;

    let domain = PaddedDomain::new(config.grid, config.pml_width);
    let lifted = &cmp.partition;
    let all: Vec<usize> = (0..domain.len()).collect();
    let err = |u2: &FieldSet| u2.sub(&cmp.u2_true).expect("same shape");
    let panels: [(&str, &FieldSet, &[usize]); 7] = [
        ("wavefield_true", &cmp.u_true, &all),
        ("u1_naive", &cmp.u1_naive, &lifted.background),
        ("u1_da", &cmp.u1_da, &lifted.background),
        ("u2_naive", &cmp.u2_naive, &lifted.target),
        ("u2_naive_error", &err(&cmp.u2_naive), &lifted.target),
        ("u2_da", &cmp.u2_da, &lifted.target),
        ("u2_da_error", &err(&cmp.u2_da), &lifted.target),
    ];
    for (name, field, rows) in panels {
        let (re, im) = embed(field, rows, &domain);
        out.raster(&format!("{name}_re"), &re, &config.grid)?;
        out.raster(&format!("{name}_im"), &im, &config.grid)?;
    }
    let summary = InclusionSummary {
        freq_hz: freq,
        n_receivers: acq.n_receivers(),
        n_target_nodes: partition.n_target(),
        error_naive: cmp.error_naive,
        error_da: cmp.error_da,
        ratio: cmp.ratio(),
        counts: SolveCounts::of(&ledger),
    };
    out.json("summary.json", &summary)?;
    Ok(summary)
}

/// Outcome of one monitor inversion.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariantSummary {
    pub name: String,
    pub algorithm: Algorithm,
    pub update_background_once: bool,
    pub iterations: usize,
    pub counts: SolveCounts,
    /// Target RMS velocity error of the starting model against the true monitor.
    pub initial_target_rms: f64,
    /// Target RMS velocity error of the final model against the true monitor.
    pub final_target_rms: f64,
    /// `1 - final / initial`.
    pub error_reduction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimelapseSummary {
    pub baseline_iterations: usize,
    pub baseline_counts: SolveCounts,
    pub baseline_target_rms: f64,
    pub perturbation_target_rms: f64,
    pub variants: Vec<VariantSummary>,
    /// Target RMS of `v_lwi - v_irwri` over the target RMS of `v_irwri`,
    /// LWI started from the inverted baseline without background update.
    pub lwi_vs_irwri_relative: f64,
    /// Same difference over the target RMS of the true perturbation.
    pub lwi_vs_irwri_perturbation_relative: f64,
    /// Same comparison for the LWI run with background update.
    pub lwi_bg_vs_irwri_relative: f64,
    /// LWI full-size solves over IR-WRI full-size solves on the monitor schedule.
    pub full_solve_ratio: f64,
}

struct Variant {
    name: &'static str,
    algorithm: Algorithm,
    start_from_truth: bool,
    update_background_once: bool,
}

const VARIANTS: [Variant; 4] = [
    Variant {
        name: "lwi_true_baseline",
        algorithm: Algorithm::Lwi,
        start_from_truth: true,
        update_background_once: false,
    },
    Variant {
        name: "lwi_inverted_baseline",
        algorithm: Algorithm::Lwi,
        start_from_truth: false,
        update_background_once: false,
    },
    Variant {
        name: "lwi_inverted_baseline_bg_update",
        algorithm: Algorithm::Lwi,
        start_from_truth: false,
        update_background_once: true,
    },
    Variant {
        name: "irwri_monitor",
        algorithm: Algorithm::Irwri,
        start_from_truth: false,
        update_background_once: false,
    },
];

/// Baseline inversion followed by four monitor inversions of a local change.
pub fn run_timelapse_experiment(
    config: &ExperimentConfig,
    out: &Artifacts,
) -> Result<TimelapseSummary> {
    out.text("config.resolved.json", &config.to_json())?;
    let grid = config.grid;
    let acq = config.acquisition()?;
    let partition = config.target_partition()?;
    let target = partition.target();
    let baseline = config.true_model()?;
    let monitor = match &config.timelapse.monitor_model {
        Some(spec) => spec.build(&grid)?,
        None => apply_perturbations(&baseline, &config.timelapse.perturbations)?,
    };
    out.model("baseline_true", &baseline)?;
    out.model("monitor_true", &monitor)?;
    let v_base = baseline.velocity();
    let v_mon = monitor.velocity();
    let change: Vec<f64> = v_mon.iter().zip(&v_base).map(|(m, b)| m - b).collect();
    out.raster("monitor_change_true", &change, &grid)?;

    let forward = SolveLedger::new();
    let baseline_schedule = &config.timelapse.baseline_schedule;
    let baseline_data = synthesize(
        config,
        &baseline,
        &acq,
        &baseline_schedule.frequencies(),
        &forward,
    )?;
    write_data(out.path("baseline_data.lwid"), &baseline_data)?;
    let initial = config.initial(&baseline)?;
    out.model("baseline_initial", &initial)?;
    let baseline_ledger = SolveLedger::new();
    let inverted = irwri_multi_frequency(
        &initial,
        &acq,
        &baseline_data,
        baseline_schedule,
        &config.inversion(1),
        &baseline_ledger,
    )
    .map_err(|f| flush_failure(out, "baseline", *f))?;
    out.ledger("ledger_baseline", &baseline_ledger)?;
    out.reports("reports_baseline", &inverted.reports)?;
    out.model("baseline_inverted", &inverted.model)?;

    let monitor_data = synthesize(
        config,
        &monitor,
        &acq,
        &config.schedule.frequencies(),
        &forward,
    )?;
    write_data(out.path("monitor_data.lwid"), &monitor_data)?;
    out.ledger("ledger_forward", &forward)?;

    let mask = partition.is_target_mask();
    let mut variants = Vec::new();
    let mut finals = Vec::new();
    for v in &VARIANTS {
        let start = if v.start_from_truth {
            &baseline
        } else {
            &inverted.model
        };
        let lwi = LwiConfig {
            update_background_once: v.update_background_once,
            ..config.lwi()
        };
        let ledger = SolveLedger::new();
        let result = run_algorithm(
            v.algorithm,
            config,
            &lwi,
            &config.schedule,
            start,
            &acq,
            &monitor_data,
            &partition,
            &ledger,
        );
        out.ledger(&format!("ledger_{}", v.name), &ledger)?;
        let output = result.map_err(|f| flush_failure(out, v.name, *f))?;
        out.reports(&format!("reports_{}", v.name), &output.reports)?;
        out.model(&format!("monitor_{}", v.name), &output.model)?;
        let v_out = output.model.velocity();
        let v_start = start.velocity();
        let diff: Vec<f64> = (0..grid.len())
            .map(|i| if mask[i] { v_out[i] - v_start[i] } else { 0.0 })
            .collect();
        out.raster(&format!("difference_{}", v.name), &diff, &grid)?;
        let initial_target_rms = rms(&v_start, &v_mon, Some(target));
        let final_target_rms = rms(&v_out, &v_mon, Some(target));
        variants.push(VariantSummary {
            name: v.name.to_string(),
            algorithm: v.algorithm,
            update_background_once: v.update_background_once,
            iterations: output.reports.len(),
            counts: SolveCounts::of(&ledger),
            initial_target_rms,
            final_target_rms,
            error_reduction: 1.0 - final_target_rms / initial_target_rms,
        });
        finals.push(v_out);
    }
    let zeros = vec![0.0; grid.len()];
    let irwri = &finals[3];
    let summary = TimelapseSummary {
        baseline_iterations: inverted.reports.len(),
        baseline_counts: SolveCounts::of(&baseline_ledger),
        baseline_target_rms: rms(&inverted.model.velocity(), &v_base, Some(target)),
        perturbation_target_rms: rms(&change, &zeros, Some(target)),
        lwi_vs_irwri_relative: rms(&finals[1], irwri, Some(target))
            / rms(irwri, &zeros, Some(target)),
        lwi_vs_irwri_perturbation_relative: rms(&finals[1], irwri, Some(target))
            / rms(&change, &zeros, Some(target)),
        lwi_bg_vs_irwri_relative: rms(&finals[2], irwri, Some(target))
            / rms(irwri, &zeros, Some(target)),
        full_solve_ratio: variants[1].counts.full as f64 / variants[3].counts.full as f64,
        variants,
    };
    out.json("summary.json", &summary)?;
    Ok(summary)
}
