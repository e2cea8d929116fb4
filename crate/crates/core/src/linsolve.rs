//! Direct sparse solves and the per-source solve ledger.
//!
//! One ledger unit is one forward/backward substitution pair for one source
//! column against an existing factorization. Factorizations are counted in a
//! separate table.

use std::collections::BTreeMap;
use std::sync::Mutex;

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Llt, Lu};
use faer::sparse::linalg::{LltError, LuError};
use faer::{Mat, Side};
use num_complex::Complex64 as c64;
use serde::{Deserialize, Serialize};

use crate::acquisition::ObservationOperator;
use crate::error::{Error, Result};
use crate::field::FieldSet;
use crate::sparse::CsrMatrix;

/// Size of the system a solve runs against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SizeClass {
    /// Whole padded grid, `N x N`.
    Full,
    /// Background columns only, `N1 x N1`.
    Background,
    /// Target columns only, `N2 x N2`.
    Target,
}

impl SizeClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            SizeClass::Full => "full",
            SizeClass::Background => "background",
            SizeClass::Target => "target",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "full" => Some(SizeClass::Full),
            "background" => Some(SizeClass::Background),
            "target" => Some(SizeClass::Target),
            _ => None,
        }
    }
}

impl std::fmt::Display for SizeClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct LedgerKey {
    phase: String,
    // bit pattern of a positive f64 sorts like the value
    freq_bits: u64,
    class: SizeClass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub phase: String,
    pub frequency_hz: f64,
    pub size_class: SizeClass,
    pub count: u64,
}

#[derive(Debug, Default)]
struct LedgerTables {
    solves: BTreeMap<LedgerKey, u64>,
    factorizations: BTreeMap<LedgerKey, u64>,
}

/// Monotone solve counters keyed by (phase, frequency, size class).
#[derive(Debug, Default)]
pub struct SolveLedger {
    tables: Mutex<LedgerTables>,
}

impl SolveLedger {
    pub fn new() -> Self {
        Self::default()
    }

    fn key(phase: &str, frequency_hz: f64, class: SizeClass) -> LedgerKey {
        LedgerKey {
            phase: phase.to_string(),
            freq_bits: frequency_hz.to_bits(),
            class,
        }
    }

    pub fn record_solves(&self, phase: &str, frequency_hz: f64, class: SizeClass, count: u64) {
        let mut t = self.tables.lock().unwrap();
        *t.solves
            .entry(Self::key(phase, frequency_hz, class))
            .or_insert(0) += count;
    }

    pub fn record_factorization(&self, phase: &str, frequency_hz: f64, class: SizeClass) {
        let mut t = self.tables.lock().unwrap();
        *t.factorizations
            .entry(Self::key(phase, frequency_hz, class))
            .or_insert(0) += 1;
    }

    fn sum(
        map: &BTreeMap<LedgerKey, u64>,
        phase: Option<&str>,
        freq: Option<f64>,
        class: Option<SizeClass>,
    ) -> u64 {
        map.iter()
            .filter(|(k, _)| phase.is_none_or(|p| k.phase == p))
            .filter(|(k, _)| freq.is_none_or(|f| k.freq_bits == f.to_bits()))
            .filter(|(k, _)| class.is_none_or(|c| k.class == c))
            .map(|(_, v)| v)
            .sum()
    }

    /// Solve count matching every given filter.
    pub fn solves(
        &self,
        phase: Option<&str>,
        frequency_hz: Option<f64>,
        class: Option<SizeClass>,
    ) -> u64 {
        Self::sum(
            &self.tables.lock().unwrap().solves,
            phase,
            frequency_hz,
            class,
        )
    }

    pub fn factorizations(
        &self,
        phase: Option<&str>,
        frequency_hz: Option<f64>,
        class: Option<SizeClass>,
    ) -> u64 {
        Self::sum(
            &self.tables.lock().unwrap().factorizations,
            phase,
            frequency_hz,
            class,
        )
    }

    pub fn total_solves(&self) -> u64 {
        self.solves(None, None, None)
    }

    fn entries_of(map: &BTreeMap<LedgerKey, u64>) -> Vec<LedgerEntry> {
        map.iter()
            .map(|(k, &count)| LedgerEntry {
                phase: k.phase.clone(),
                frequency_hz: f64::from_bits(k.freq_bits),
                size_class: k.class,
                count,
            })
            .collect()
    }

    pub fn entries(&self) -> Vec<LedgerEntry> {
        Self::entries_of(&self.tables.lock().unwrap().solves)
    }

    pub fn factorization_entries(&self) -> Vec<LedgerEntry> {
        Self::entries_of(&self.tables.lock().unwrap().factorizations)
    }

    /// CSV with header `phase,frequency_hz,size_class,count`.
    pub fn to_csv(&self) -> String {
        entries_to_csv(&self.entries())
    }
}

pub fn entries_to_csv(entries: &[LedgerEntry]) -> String {
    let mut out = String::from("phase,frequency_hz,size_class,count\n");
    for e in entries {
        out.push_str(&format!(
            "{},{},{},{}\n",
            e.phase, e.frequency_hz, e.size_class, e.count
        ));
    }
    out
}

pub fn entries_from_csv(text: &str) -> Result<Vec<LedgerEntry>> {
    let mut lines = text.lines();
    match lines.next() {
        Some("phase,frequency_hz,size_class,count") => {}
        other => return Err(Error::Config(format!("unexpected ledger header {other:?}"))),
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, line)| {
            let parts: Vec<&str> = line.split(',').collect();
            let bad = || Error::Config(format!("malformed ledger line {}: {line:?}", i + 2));
            if parts.len() != 4 {
                return Err(bad());
            }
            Ok(LedgerEntry {
                phase: parts[0].to_string(),
                frequency_hz: parts[1].parse().map_err(|_| bad())?,
                size_class: SizeClass::parse(parts[2]).ok_or_else(bad)?,
                count: parts[3].parse().map_err(|_| bad())?,
            })
        })
        .collect()
}

/// Where solves are booked.
#[derive(Debug, Clone, Copy)]
pub struct SolveContext<'a> {
    pub ledger: &'a SolveLedger,
    pub phase: &'a str,
    pub frequency_hz: f64,
}

impl<'a> SolveContext<'a> {
    pub fn new(ledger: &'a SolveLedger, phase: &'a str, frequency_hz: f64) -> Self {
        SolveContext {
            ledger,
            phase,
            frequency_hz,
        }
    }

    pub fn with_phase(self, phase: &'a str) -> Self {
        SolveContext { phase, ..self }
    }
}

enum Factor {
    Lu(Box<Lu<usize, c64>>),
    Llt(Llt<usize, c64>),
}

/// Reusable factorization of a square sparse complex matrix.
pub struct Factorization {
    factor: Factor,
    n: usize,
    class: SizeClass,
}

impl std::fmt::Debug for Factorization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Factorization")
            .field("n", &self.n)
            .field("class", &self.class)
            .finish()
    }
}

impl Factorization {
    /// LU with partial pivoting and a fill-reducing ordering.
    pub fn lu(m: &CsrMatrix, class: SizeClass, ctx: SolveContext<'_>) -> Result<Self> {
        check_square(m)?;
        let lu = m.to_faer()?.sp_lu().map_err(|e| match e {
            LuError::SymbolicSingular { index } => Error::Singular {
                class: class.to_string(),
                pivot: index,
            },
            LuError::Generic(g) => Error::Solver(format!("{g:?}")),
        })?;
        Self::finish(Factor::Lu(Box::new(lu)), m.nrows(), class, ctx)
    }

    /// Cholesky `L L^H` of a Hermitian positive definite matrix.
    pub fn cholesky(m: &CsrMatrix, class: SizeClass, ctx: SolveContext<'_>) -> Result<Self> {
        check_square(m)?;
        let llt = m
            .lower_triangle()
            .to_faer()?
            .sp_cholesky(Side::Lower)
            .map_err(|e| match e {
                LltError::Numeric(
                    faer::linalg::cholesky::llt::factor::LltError::NonPositivePivot { index },
                ) => Error::Singular {
                    class: class.to_string(),
                    pivot: index,
                },
                LltError::Generic(g) => Error::Solver(format!("{g:?}")),
            })?;
        Self::finish(Factor::Llt(llt), m.nrows(), class, ctx)
    }

    fn finish(factor: Factor, n: usize, class: SizeClass, ctx: SolveContext<'_>) -> Result<Self> {
        let f = Factorization { factor, n, class };
        // A numerically singular LU shows up as non-finite output.
        let probe = f.raw_solve(&vec![c64::new(1.0, 0.0); n]);
        if let Some(pivot) = probe
            .iter()
            .position(|v| !(v.re.is_finite() && v.im.is_finite()))
        {
            return Err(Error::Singular {
                class: class.to_string(),
                pivot,
            });
        }
        ctx.ledger
            .record_factorization(ctx.phase, ctx.frequency_hz, class);
        Ok(f)
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn class(&self) -> SizeClass {
        self.class
    }

    fn raw_solve(&self, b: &[c64]) -> Vec<c64> {
        let rhs = Mat::<c64>::from_fn(self.n, 1, |i, _| b[i]);
        let x = match &self.factor {
            Factor::Lu(lu) => lu.solve(&rhs),
            Factor::Llt(llt) => llt.solve(&rhs),
        };
        (0..self.n).map(|i| x[(i, 0)]).collect()
    }

    /// Solves one right-hand side and books one unit.
    pub fn solve_vec(&self, b: &[c64], ctx: SolveContext<'_>) -> Result<Vec<c64>> {
        if b.len() != self.n {
            return Err(Error::shape(format!(
                "rhs has {} rows, system has {}",
                b.len(),
                self.n
            )));
        }
        let x = self.raw_solve(b);
        ctx.ledger
            .record_solves(ctx.phase, ctx.frequency_hz, self.class, 1);
        if let Some(pivot) = x
            .iter()
            .position(|v| !(v.re.is_finite() && v.im.is_finite()))
        {
            return Err(Error::Singular {
                class: self.class.to_string(),
                pivot,
            });
        }
        Ok(x)
    }

    /// Solves every column separately, one ledger unit per column.
    pub fn solve(&self, rhs: &FieldSet, ctx: SolveContext<'_>) -> Result<FieldSet> {
        let cols = rhs
            .columns()
            .map(|b| self.solve_vec(b, ctx))
            .collect::<Result<Vec<_>>>()?;
        FieldSet::from_columns(self.n, cols)
    }
}

fn check_square(m: &CsrMatrix) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::shape(format!(
            "cannot factorize a {}x{} matrix",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

/// Columns of an observation operator restricted to a block of unknowns.
///
/// Row `r` of the operator picks local unknown `picks[r]`, or nothing.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub ncols: usize,
    pub picks: Vec<Option<usize>>,
}

impl Selection {
    pub fn nrows(&self) -> usize {
        self.picks.len()
    }

    pub fn apply(&self, u: &FieldSet) -> Result<FieldSet> {
        if u.rows() != self.ncols {
            return Err(Error::shape(format!(
                "selection over {} unknowns applied to {} rows",
                self.ncols,
                u.rows()
            )));
        }
        Ok(FieldSet::from_fn(self.nrows(), u.cols(), |r, j| {
            self.picks[r].map(|k| u.get(k, j)).unwrap_or_default()
        }))
    }

    pub fn adjoint_apply(&self, d: &FieldSet) -> Result<FieldSet> {
        if d.rows() != self.nrows() {
            return Err(Error::shape(format!(
                "selection with {} rows applied to {} rows",
                self.nrows(),
                d.rows()
            )));
        }
        let mut out = FieldSet::zeros(self.ncols, d.cols());
        for j in 0..d.cols() {
            for (r, pick) in self.picks.iter().enumerate() {
                if let Some(k) = pick {
                    let v = out.get(*k, j) + d.get(r, j);
                    out.set(*k, j, v);
                }
            }
        }
        Ok(out)
    }

    /// `S^H S` as a sparse diagonal matrix.
    pub fn gram(&self) -> CsrMatrix {
        let trip: Vec<_> = self
            .picks
            .iter()
            .flatten()
            .map(|&k| (k, k, c64::new(1.0, 0.0)))
            .collect();
        CsrMatrix::from_triplets(self.ncols, self.ncols, &trip).expect("selection indices in range")
    }
}

/// Solves `[lambda A^H A + S^H S] X = lambda A^H rhs_wave + S^H rhs_data`.
///
/// `a` may be rectangular (a column block of the Helmholtz matrix). With
/// `selection = None` the data term is absent.
pub fn solve_regularized_normal(
    a: &CsrMatrix,
    selection: Option<&Selection>,
    lambda: f64,
    rhs_wave: &FieldSet,
    rhs_data: Option<&FieldSet>,
    class: SizeClass,
    ctx: SolveContext<'_>,
) -> Result<FieldSet> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Solver(format!(
            "penalty must be positive, got {lambda}"
        )));
    }
    if rhs_wave.rows() != a.nrows() {
        return Err(Error::shape(format!(
            "wave rhs has {} rows, operator has {}",
            rhs_wave.rows(),
            a.nrows()
        )));
    }
    let lam = c64::new(lambda, 0.0);
    let mut normal = a.gram().scaled(lam);
    let mut rhs = a.adjoint_mul_fields(rhs_wave)?.scale(lam);
    if let Some(sel) = selection {
        if sel.ncols != a.ncols() {
            return Err(Error::shape(
                "observation block does not match the operator block".to_string(),
            ));
        }
        normal = normal.add(&sel.gram())?;
        if let Some(d) = rhs_data {
            if d.cols() != rhs_wave.cols() {
                return Err(Error::shape(
                    "data and wave rhs have different source counts".to_string(),
                ));
            }
            rhs = rhs.add(&sel.adjoint_apply(d)?)?;
        }
    }
    let f = Factorization::cholesky(&normal, class, ctx)?;
    f.solve(&rhs, ctx)
}

/// Data-assimilated solve over the full padded grid:
/// `[lambda A^H A + P^H P] U = lambda A^H rhs_wave + P^H rhs_data`.
pub fn solve_augmented_normal(
    a: &CsrMatrix,
    obs: &ObservationOperator,
    lambda: f64,
    rhs_wave: &FieldSet,
    rhs_data: &FieldSet,
    ctx: SolveContext<'_>,
) -> Result<FieldSet> {
    let sel = obs.selection();
    if rhs_data.rows() != sel.nrows() {
        return Err(Error::shape(format!(
            "data has {} rows, {} receivers",
            rhs_data.rows(),
            sel.nrows()
        )));
    }
    solve_regularized_normal(
        a,
        Some(&sel),
        lambda,
        rhs_wave,
        Some(rhs_data),
        SizeClass::Full,
        ctx,
    )
}

/// Least-squares target wavefield `U2 = [A2^H A2]^-1 A2^H rhs` (an `N2 x N2` solve).
pub fn solve_target_normal(
    a2: &CsrMatrix,
    rhs: &FieldSet,
    ctx: SolveContext<'_>,
) -> Result<FieldSet> {
    solve_regularized_normal(a2, None, 1.0, rhs, None, SizeClass::Target, ctx)
}

/// Penalty `lambda = lambda_rel * ||P^H D|| / ||A^H B||`.
pub fn penalty_from_rule(
    lambda_rel: f64,
    a: &CsrMatrix,
    obs: &ObservationOperator,
    b: &FieldSet,
    d: &FieldSet,
) -> Result<f64> {
    let num = obs.selection().adjoint_apply(d)?.norm_fro();
    let den = a.adjoint_mul_fields(b)?.norm_fro();
    if !(num > 0.0 && den > 0.0) || lambda_rel.is_nan() || lambda_rel <= 0.0 {
        return Err(Error::Solver(format!(
            "cannot derive penalty: lambda_rel={lambda_rel}, |P^H D|={num}, |A^H B|={den}"
        )));
    }
    Ok(lambda_rel * num / den)
}
