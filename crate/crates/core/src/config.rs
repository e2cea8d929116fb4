//! JSON experiment configuration and the model/acquisition generators it
//! refers to.
//!
//! A user document is merged key by key over the defaults of the chosen
//! experiment, then deserialized strictly, so unknown keys are rejected at any
//! depth.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::acquisition::{Acquisition, NoiseSpec, Wavelet};
use crate::error::{Error, Result};
use crate::grid::{BoundConstraint, Grid, Model, Partition, Rect};
use crate::inversion::{Band, FrequencySchedule, InversionConfig};
use crate::lwi::LwiConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Irwri,
    Lwi,
    Multiblock,
}

/// Velocity model generators, in m/s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Homogeneous {
        velocity: f64,
    },
    /// Disk of `inclusion` velocity in a homogeneous `background`.
    Inclusion {
        background: f64,
        inclusion: f64,
        center: (f64, f64),
        radius: f64,
    },
    /// Flat layers; `interfaces` are the depths where each next layer starts.
    Layered {
        velocities: Vec<f64>,
        interfaces: Vec<f64>,
    },
    File {
        path: PathBuf,
    },
}

impl ModelSpec {
    /// Builds the model; file models carry their own grid, which must match.
    pub fn build(&self, grid: &Grid) -> Result<Model> {
        let velocity: Vec<f64> = match self {
            ModelSpec::Homogeneous { velocity } => vec![*velocity; grid.len()],
            ModelSpec::Inclusion {
                background,
                inclusion,
                center,
                radius,
            } => (0..grid.len())
                .map(|i| {
                    let (x, z) = grid.position(i);
                    if (x - center.0).hypot(z - center.1) <= *radius {
                        *inclusion
                    } else {
                        *background
                    }
                })
                .collect(),
            ModelSpec::Layered {
                velocities,
                interfaces,
            } => {
                if velocities.len() != interfaces.len() + 1
                    || interfaces.windows(2).any(|w| w[0] >= w[1])
                {
                    return Err(Error::Config(
                        "layered model needs n+1 velocities and n increasing interfaces".into(),
                    ));
                }
                (0..grid.len())
                    .map(|i| {
                        velocities[interfaces
                            .iter()
                            .filter(|&&d| grid.position(i).1 >= d)
                            .count()]
                    })
                    .collect()
            }
            ModelSpec::File { path } => {
                let model = crate::io::read_model(path)?.to_model()?;
                if model.grid() != grid {
                    return Err(Error::Config(format!(
                        "model file {} does not match the configured grid",
                        path.display()
                    )));
                }
                return Ok(model);
            }
        };
        Model::from_velocity(*grid, &velocity)
    }
}

/// Adds `dv` m/s to every node inside `rect`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxPerturbation {
    pub rect: Rect,
    pub dv: f64,
}

pub fn apply_perturbations(model: &Model, perturbations: &[BoxPerturbation]) -> Result<Model> {
    let grid = *model.grid();
    let mut v = model.velocity();
    for p in perturbations {
        for (i, vi) in v.iter_mut().enumerate() {
            let (x, z) = grid.position(i);
            if p.rect.contains(x, z) {
                *vi += p.dv;
            }
        }
    }
    Model::from_velocity(grid, &v)
}

/// Separable Gaussian smoothing of velocity with standard deviation `sigma_m`
/// metres, edge-replicated, truncated at three standard deviations.
pub fn smooth_model(model: &Model, sigma_m: f64) -> Result<Model> {
    let grid = *model.grid();
    if sigma_m <= 0.0 {
        return Ok(model.clone());
    }
    let kernel = |h: f64| -> Vec<f64> {
        let s = sigma_m / h;
        let r = (3.0 * s).ceil() as isize;
        let w: Vec<f64> = (-r..=r)
            .map(|k| (-0.5 * (k as f64 / s).powi(2)).exp())
            .collect();
        let total: f64 = w.iter().sum();
        w.into_iter().map(|x| x / total).collect()
    };
    let (kx, kz) = (kernel(grid.dx), kernel(grid.dz));
    let (nx, nz) = (grid.nx as isize, grid.nz as isize);
    let v = model.velocity();
    let pass = |src: &[f64], k: &[f64], along_x: bool| -> Vec<f64> {
        let r = (k.len() / 2) as isize;
        let mut out = vec![0.0; src.len()];
        for iz in 0..nz {
            for ix in 0..nx {
                out[(iz * nx + ix) as usize] = k
                    .iter()
                    .enumerate()
                    .map(|(t, w)| {
                        let off = t as isize - r;
                        let (jx, jz) = if along_x {
                            ((ix + off).clamp(0, nx - 1), iz)
                        } else {
                            (ix, (iz + off).clamp(0, nz - 1))
                        };
                        w * src[(jz * nx + jx) as usize]
                    })
                    .sum();
            }
        }
        out
    };
    let smoothed = pass(&pass(&v, &kx, true), &kz, false);
    Model::from_velocity(grid, &smoothed)
}

/// Receiver and source layouts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AcquisitionSpec {
    Explicit {
        sources: Vec<(f64, f64)>,
        receivers: Vec<(f64, f64)>,
    },
    /// `n_receivers` evenly spaced on a circle, starting at angle 0.
    Ring {
        sources: Vec<(f64, f64)>,
        center: (f64, f64),
        radius: f64,
        n_receivers: usize,
    },
    /// Sources and receivers on horizontal lines, `start..=stop` by `step`.
    Lines {
        source_x: (f64, f64, f64),
        source_z: f64,
        receiver_x: (f64, f64, f64),
        receiver_z: f64,
    },
}

fn arange(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if step.is_nan() || step <= 0.0 || stop < start {
        return Err(Error::Config(format!(
            "bad range {start}..={stop} step {step}"
        )));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..n).map(|k| start + k as f64 * step).collect())
}

impl AcquisitionSpec {
    pub fn build(&self, wavelet: Wavelet) -> Result<Acquisition> {
        let (sources, receivers) = match self {
            AcquisitionSpec::Explicit { sources, receivers } => {
                (sources.clone(), receivers.clone())
            }
            AcquisitionSpec::Ring {
                sources,
                center,
                radius,
                n_receivers,
            } => {
                let receivers = (0..*n_receivers)
                    .map(|k| {
                        let t = 2.0 * std::f64::consts::PI * k as f64 / *n_receivers as f64;
                        (center.0 + radius * t.cos(), center.1 + radius * t.sin())
                    })
                    .collect();
                (sources.clone(), receivers)
            }
            AcquisitionSpec::Lines {
                source_x,
                source_z,
                receiver_x,
                receiver_z,
            } => (
                arange(source_x.0, source_x.1, source_x.2)?
                    .into_iter()
                    .map(|x| (x, *source_z))
                    .collect(),
                arange(receiver_x.0, receiver_x.1, receiver_x.2)?
                    .into_iter()
                    .map(|x| (x, *receiver_z))
                    .collect(),
            ),
        };
        Acquisition::new(sources, receivers, wavelet)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InclusionSpec {
    /// Velocity of the background model the target fields are extracted in.
    pub background_velocity: f64,
    pub freq_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimelapseSpec {
    /// Baseline-to-monitor change; ignored when `monitor_model` is set.
    pub perturbations: Vec<BoxPerturbation>,
    pub monitor_model: Option<ModelSpec>,
    pub baseline_schedule: FrequencySchedule,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub grid: Grid,
    pub pml_width: usize,
    /// True model (baseline model for the time-lapse run).
    pub model: ModelSpec,
    pub acquisition: AcquisitionSpec,
    pub wavelet: Wavelet,
    /// Inversion schedule (monitor schedule for the time-lapse run).
    pub schedule: FrequencySchedule,
    pub lambda_rel: f64,
    pub bounds: BoundConstraint,
    /// Target rectangles; their union is the target subdomain.
    pub partition: Vec<Rect>,
    pub update_background_once: bool,
    pub algorithm: Algorithm,
    pub output_dir: Option<PathBuf>,
    pub seed: u64,
    /// Additive noise on synthesized data; none when absent.
    pub noise_snr_db: Option<f64>,
    /// Inversion start; the smoothed true model when absent.
    pub initial_model: Option<ModelSpec>,
    pub initial_smoothing_m: f64,
    /// Observed data for `invert`; synthesized from `model` when absent.
    pub data_file: Option<PathBuf>,
    pub inclusion: InclusionSpec,
    pub timelapse: TimelapseSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Inclusion,
    Timelapse,
}

fn band(freqs: std::ops::RangeInclusive<u32>, passes: usize, iters: usize) -> Band {
    Band {
        freqs_hz: freqs.map(f64::from).collect(),
        passes,
        iters_per_freq: iters,
    }
}

impl ExperimentConfig {
    pub fn defaults(kind: ExperimentKind) -> Self {
        let timelapse = TimelapseSpec {
            perturbations: vec![BoxPerturbation {
                rect: Rect::new(1300.0, 1700.0, 800.0, 950.0),
                dv: 200.0,
            }],
            monitor_model: None,
            baseline_schedule: FrequencySchedule(vec![
                band(3..=5, 1, 5),
                band(3..=9, 1, 5),
                band(5..=13, 1, 5),
            ]),
        };
        let inclusion = InclusionSpec {
            background_velocity: 2000.0,
            freq_hz: 5.0,
        };
        match kind {
            ExperimentKind::Inclusion => ExperimentConfig {
                grid: Grid {
                    nx: 141,
                    nz: 141,
                    dx: 30.0,
                    dz: 30.0,
                    x0: 0.0,
                    z0: 0.0,
                },
                pml_width: 20,
                model: ModelSpec::Inclusion {
                    background: 2000.0,
                    inclusion: 2800.0,
                    center: (2100.0, 2100.0),
                    radius: 400.0,
                },
                acquisition: AcquisitionSpec::Ring {
                    sources: vec![(300.0, 2100.0)],
                    center: (2100.0, 2100.0),
                    radius: 1900.0,
                    n_receivers: 120,
                },
                wavelet: Wavelet::Flat,
                schedule: FrequencySchedule(vec![Band {
                    freqs_hz: vec![5.0],
                    passes: 1,
                    iters_per_freq: 5,
                }]),
                lambda_rel: 0.1,
                bounds: BoundConstraint {
                    v_min: 1500.0,
                    v_max: 3500.0,
                },
                partition: vec![Rect::new(1400.0, 2800.0, 1400.0, 2800.0)],
                update_background_once: false,
                algorithm: Algorithm::Lwi,
                output_dir: None,
                seed: 0,
                noise_snr_db: None,
                initial_model: None,
                initial_smoothing_m: 0.0,
                data_file: None,
                inclusion,
                timelapse,
            },
            ExperimentKind::Timelapse => ExperimentConfig {
                grid: Grid {
                    nx: 121,
                    nz: 61,
                    dx: 25.0,
                    dz: 25.0,
                    x0: 0.0,
                    z0: 0.0,
                },
                pml_width: 20,
                model: ModelSpec::Layered {
                    velocities: vec![1500.0, 2000.0, 2700.0, 3500.0],
                    interfaces: vec![300.0, 700.0, 1100.0],
                },
                acquisition: AcquisitionSpec::Lines {
                    source_x: (100.0, 2900.0, 200.0),
                    source_z: 25.0,
                    receiver_x: (0.0, 3000.0, 50.0),
                    receiver_z: 25.0,
                },
                wavelet: Wavelet::Ricker { f0: 10.0 },
                schedule: FrequencySchedule(vec![Band {
                    freqs_hz: vec![5.0, 10.0, 15.0],
                    passes: 2,
                    iters_per_freq: 5,
                }]),
                lambda_rel: 0.1,
                bounds: BoundConstraint {
                    v_min: 1400.0,
                    v_max: 4700.0,
                },
                partition: vec![Rect::new(1150.0, 1850.0, 700.0, 1050.0)],
                update_background_once: false,
                algorithm: Algorithm::Lwi,
                output_dir: None,
                seed: 0,
                noise_snr_db: None,
                initial_model: None,
                initial_smoothing_m: 150.0,
                data_file: None,
                inclusion,
                timelapse,
            },
        }
    }

    /// Parses `text` over the defaults of `kind`.
    pub fn from_json(text: &str, kind: ExperimentKind) -> Result<Self> {
        let user: Value = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if !user.is_object() {
            return Err(Error::Config("configuration must be a JSON object".into()));
        }
        let mut merged = serde_json::to_value(Self::defaults(kind)).expect("defaults serialize");
        merge(&mut merged, user);
        let config: Self =
            serde_json::from_value(merged).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path, kind: ExperimentKind) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text, kind)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.grid
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        self.bounds.validate()?;
        self.schedule.validate()?;
        self.timelapse.baseline_schedule.validate()?;
        if self.partition.is_empty() {
            return Err(Error::Config(
                "partition needs at least one target rectangle".into(),
            ));
        }
        if !(self.lambda_rel > 0.0 && self.lambda_rel.is_finite()) {
            return Err(Error::Config(format!(
                "lambda_rel must be positive, got {}",
                self.lambda_rel
            )));
        }
        if self.initial_smoothing_m < 0.0 || !self.initial_smoothing_m.is_finite() {
            return Err(Error::Config(
                "initial_smoothing_m must be non-negative".into(),
            ));
        }
        Ok(())
    }

    pub fn inversion(&self, iterations: usize) -> InversionConfig {
        InversionConfig {
            lambda_rel: self.lambda_rel,
            iterations,
            bounds: self.bounds,
            pml_width: self.pml_width,
        }
    }

    pub fn lwi(&self) -> LwiConfig {
        LwiConfig {
            inversion: self.inversion(1),
            update_background_once: self.update_background_once,
            schedule: self.schedule.clone(),
        }
    }

    pub fn true_model(&self) -> Result<Model> {
        self.model.build(&self.grid)
    }

    pub fn initial(&self, truth: &Model) -> Result<Model> {
        match &self.initial_model {
            Some(spec) => spec.build(&self.grid),
            None => smooth_model(truth, self.initial_smoothing_m),
        }
    }

    pub fn acquisition(&self) -> Result<Acquisition> {
        self.acquisition.build(self.wavelet)
    }

    pub fn target_partition(&self) -> Result<Partition> {
        Partition::from_rects(&self.grid, &self.partition)
    }

    pub fn noise(&self) -> Option<NoiseSpec> {
        self.noise_snr_db.map(|snr_db| NoiseSpec {
            snr_db,
            seed: self.seed,
        })
    }
}

fn merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(&k) {
                    // Tagged enums are replaced whole so variants never mix fields.
                    Some(slot)
                        if slot.is_object() && v.is_object() && slot.get("kind").is_none() =>
                    {
                        merge(slot, v)
                    }
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, p) => *b = p,
    }
}
