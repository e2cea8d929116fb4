//! Sources, receivers, observation operators and synthetic data.

use num_complex::Complex64 as c64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::FieldSet;
use crate::grid::{Grid, Model};
use crate::helmholtz::{HelmholtzSystem, PaddedDomain, PaddedPartition};
use crate::linsolve::{Factorization, Selection, SizeClass, SolveContext, SolveLedger};

/// Zero-phase Ricker amplitude spectrum `(2/sqrt(pi)) f^2/f0^3 exp(-f^2/f0^2)`.
pub fn ricker_spectrum(f: f64, f0: f64) -> c64 {
    let r = f / f0;
    c64::new(
        2.0 / std::f64::consts::PI.sqrt() * f * f / (f0 * f0 * f0) * (-r * r).exp(),
        0.0,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Wavelet {
    Ricker {
        f0: f64,
    },
    /// Unit amplitude at every frequency.
    Flat,
}

impl Wavelet {
    pub fn amplitude(&self, f: f64) -> c64 {
        match self {
            Wavelet::Ricker { f0 } => ricker_spectrum(f, *f0),
            Wavelet::Flat => c64::new(1.0, 0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Acquisition {
    pub sources: Vec<(f64, f64)>,
    pub receivers: Vec<(f64, f64)>,
    pub wavelet: Wavelet,
}

impl Acquisition {
    pub fn new(
        sources: Vec<(f64, f64)>,
        receivers: Vec<(f64, f64)>,
        wavelet: Wavelet,
    ) -> Result<Self> {
        if sources.is_empty() || receivers.is_empty() {
            return Err(Error::Geometry(format!(
                "need at least one source and one receiver, got {} and {}",
                sources.len(),
                receivers.len()
            )));
        }
        Ok(Acquisition {
            sources,
            receivers,
            wavelet,
        })
    }

    pub fn n_sources(&self) -> usize {
        self.sources.len()
    }

    pub fn n_receivers(&self) -> usize {
        self.receivers.len()
    }

    pub fn source_nodes(&self, grid: &Grid) -> Result<Vec<usize>> {
        self.sources
            .iter()
            .map(|&(x, z)| grid.nearest_node(x, z))
            .collect()
    }

    pub fn receiver_nodes(&self, grid: &Grid) -> Result<Vec<usize>> {
        self.receivers
            .iter()
            .map(|&(x, z)| grid.nearest_node(x, z))
            .collect()
    }

    /// Source terms `B` over the padded grid: a delta at the nearest node,
    /// scaled by `1/(dx dz)` and the wavelet amplitude.
    pub fn source_terms(&self, domain: &PaddedDomain, freq_hz: f64) -> Result<FieldSet> {
        let grid = domain.grid();
        let amp = self.wavelet.amplitude(freq_hz) / (grid.dx * grid.dz);
        let nodes = self.source_nodes(grid)?;
        let mut b = FieldSet::zeros(domain.len(), nodes.len());
        for (j, &node) in nodes.iter().enumerate() {
            b.set(domain.to_padded(node), j, amp);
        }
        Ok(b)
    }
}

/// Receiver sampling `P`: one unit entry per row at the receiver's padded node.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationOperator {
    n: usize,
    nodes: Vec<usize>,
}

impl ObservationOperator {
    pub fn new(acq: &Acquisition, domain: &PaddedDomain) -> Result<Self> {
        let nodes = acq
            .receiver_nodes(domain.grid())?
            .into_iter()
            .map(|i| domain.to_padded(i))
            .collect();
        Ok(ObservationOperator {
            n: domain.len(),
            nodes,
        })
    }

    /// Operator over `n` unknowns sampling the given (padded) nodes.
    pub fn from_nodes(n: usize, nodes: Vec<usize>) -> Result<Self> {
        if let Some(&bad) = nodes.iter().find(|&&k| k >= n) {
            return Err(Error::Geometry(format!(
                "receiver node {bad} outside {n} unknowns"
            )));
        }
        Ok(ObservationOperator { n, nodes })
    }

    pub fn n_receivers(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_unknowns(&self) -> usize {
        self.n
    }

    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn selection(&self) -> Selection {
        Selection {
            ncols: self.n,
            picks: self.nodes.iter().map(|&k| Some(k)).collect(),
        }
    }

    /// `(P1, P2)`: the columns of `P` at background and target nodes.
    pub fn split(&self, partition: &PaddedPartition) -> (Selection, Selection) {
        let mut local = vec![(false, 0usize); self.n];
        for (k, &p) in partition.background.iter().enumerate() {
            local[p] = (false, k);
        }
        for (k, &p) in partition.target.iter().enumerate() {
            local[p] = (true, k);
        }
        let pick = |want_target: bool| {
            self.nodes
                .iter()
                .map(|&p| {
                    let (is_target, k) = local[p];
                    (is_target == want_target).then_some(k)
                })
                .collect()
        };
        (
            Selection {
                ncols: partition.n_background(),
                picks: pick(false),
            },
            Selection {
                ncols: partition.n_target(),
                picks: pick(true),
            },
        )
    }

    /// `P U`.
    pub fn apply(&self, u: &FieldSet) -> Result<FieldSet> {
        self.selection().apply(u)
    }
}

/// Recorded data per frequency, each record `n_r x n_s`.
#[derive(Debug, Clone, PartialEq)]
pub struct DataSet {
    frequencies: Vec<f64>,
    records: Vec<FieldSet>,
    sources: Vec<(f64, f64)>,
    receivers: Vec<(f64, f64)>,
}

impl DataSet {
    pub fn new(
        frequencies: Vec<f64>,
        records: Vec<FieldSet>,
        sources: Vec<(f64, f64)>,
        receivers: Vec<(f64, f64)>,
    ) -> Result<Self> {
        validate_frequencies(&frequencies)?;
        if records.len() != frequencies.len() {
            return Err(Error::shape(format!(
                "{} records for {} frequencies",
                records.len(),
                frequencies.len()
            )));
        }
        for (k, r) in records.iter().enumerate() {
            if r.rows() != receivers.len() || r.cols() != sources.len() {
                return Err(Error::shape(format!(
                    "record {k} is {}x{}, expected {}x{}",
                    r.rows(),
                    r.cols(),
                    receivers.len(),
                    sources.len()
                )));
            }
            if !r.is_finite() {
                return Err(Error::shape(format!("record {k} has non-finite entries")));
            }
        }
        Ok(DataSet {
            frequencies,
            records,
            sources,
            receivers,
        })
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn records(&self) -> &[FieldSet] {
        &self.records
    }

    pub fn sources(&self) -> &[(f64, f64)] {
        &self.sources
    }

    pub fn receivers(&self) -> &[(f64, f64)] {
        &self.receivers
    }

    pub fn record_at(&self, freq_hz: f64) -> Result<&FieldSet> {
        let tol = 1e-9 * freq_hz.abs().max(1.0);
        self.frequencies
            .iter()
            .position(|f| (f - freq_hz).abs() <= tol)
            .map(|k| &self.records[k])
            .ok_or_else(|| Error::Config(format!("no data recorded at {freq_hz} Hz")))
    }
}

pub fn validate_frequencies(freqs: &[f64]) -> Result<()> {
    if freqs.is_empty() {
        return Err(Error::Config("frequency list is empty".into()));
    }
    if freqs.iter().any(|f| !(f.is_finite() && *f > 0.0)) {
        return Err(Error::Config(
            "frequencies must be positive and finite".into(),
        ));
    }
    if freqs.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config(
            "frequencies must be strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Additive complex Gaussian noise at a fixed signal-to-noise ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    pub snr_db: f64,
    pub seed: u64,
}

/// Forward-models `P A(m)^-1 B` at every frequency.
pub fn synthesize_data(
    model: &Model,
    acq: &Acquisition,
    freqs: &[f64],
    pml_width: usize,
    noise: Option<NoiseSpec>,
    ledger: &SolveLedger,
) -> Result<DataSet> {
    validate_frequencies(freqs)?;
    let records = freqs
        .par_iter()
        .enumerate()
        .map(|(k, &f)| {
            let ctx = SolveContext::new(ledger, "forward", f);
            let (_, u) = forward_wavefield(model, acq, f, pml_width, ctx)?;
            let domain = PaddedDomain::new(*model.grid(), pml_width);
            let mut d = ObservationOperator::new(acq, &domain)?.apply(&u)?;
            if let Some(spec) = noise {
                add_noise(&mut d, spec, k);
            }
            Ok(d)
        })
        .collect::<Result<Vec<_>>>()?;
    DataSet::new(
        freqs.to_vec(),
        records,
        acq.sources.clone(),
        acq.receivers.clone(),
    )
}

/// Solves `A(m) U = B` for every source; returns the system and padded fields.
pub fn forward_wavefield(
    model: &Model,
    acq: &Acquisition,
    freq_hz: f64,
    pml_width: usize,
    ctx: SolveContext<'_>,
) -> Result<(HelmholtzSystem, FieldSet)> {
    let sys = HelmholtzSystem::assemble(model, 2.0 * std::f64::consts::PI * freq_hz, pml_width)?;
    let b = acq.source_terms(sys.domain(), freq_hz)?;
    let f = Factorization::lu(sys.matrix(), SizeClass::Full, ctx)?;
    let u = f.solve(&b, ctx)?;
    Ok((sys, u))
}

fn add_noise(d: &mut FieldSet, spec: NoiseSpec, freq_index: usize) {
    let power =
        d.as_slice().iter().map(|v| v.norm_sqr()).sum::<f64>() / d.as_slice().len().max(1) as f64;
    let sigma = (power / 10f64.powf(spec.snr_db / 10.0) / 2.0).sqrt();
    if sigma.is_nan() || sigma <= 0.0 {
        return;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(
        spec.seed
            .wrapping_add((freq_index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)),
    );
    let normal = Normal::new(0.0, sigma).expect("finite noise level");
    for j in 0..d.cols() {
        for i in 0..d.rows() {
            let v = d.get(i, j) + c64::new(normal.sample(&mut rng), normal.sample(&mut rng));
            d.set(i, j, v);
        }
    }
}
