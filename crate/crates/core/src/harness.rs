//! Instance generation, experiment runs and reports.
//!
//! An [`InstanceSpec`] names a family and its parameters; [`gen_instance`]
//! turns it into a concrete function, [`run_experiment`] splits each
//! instance, evaluates the splitting norm of the target coefficients and
//! emits one [`ReportRow`] per spec.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::construct::{
    default_tail_depth, khintchine_split, paley_case1_split, paley_case2_split, Splitting,
};
use crate::error::{Error, Result};
use crate::matrix::{MatrixC, C64};
use crate::opfunc::{DyadicFn, FnDocument, LacunarySet, TrigFn};
use crate::sample::{seeded, unit_scale_matrix};
use crate::seqnorm::{scalar_oracle, triple_norm_solve_from, OpSequence, SolveOptions};

pub const MAX_DIM: usize = 16;
/// Bound on `2^N·d²` for dyadic instances.
pub const MAX_DYADIC_ENTRIES: usize = 1 << 16;
/// Bound on `M·d²` for trigonometric instances.
pub const MAX_TRIG_ENTRIES: usize = 1 << 18;

/// Slack of the `C = 2` bound and of the solver sandwich.
pub const RATIO_SLACK: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Khintchine,
    Paley1,
    Paley2,
    Steinhaus,
}

impl Kind {
    pub const ALL: [Kind; 4] = [Kind::Khintchine, Kind::Paley1, Kind::Paley2, Kind::Steinhaus];

    pub fn name(self) -> &'static str {
        match self {
            Kind::Khintchine => "khintchine",
            Kind::Paley1 => "paley1",
            Kind::Paley2 => "paley2",
            Kind::Steinhaus => "steinhaus",
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Kind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Kind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidSpec(format!("unknown kind {s:?}")))
    }
}

/// One instance to generate and verify.
///
/// `terms` counts Rademacher coefficients for `khintchine` and elements of
/// `K` otherwise; an explicit `kset` overrides it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub kind: Kind,
    pub dim: usize,
    pub terms: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kset: Option<LacunarySet>,
    #[serde(default = "default_k0")]
    pub k0: u64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolution: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gridsize: Option<usize>,
    /// Largest frequency of `paley1` instances; defaults to `max K`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<usize>,
    /// Depth of the negative spectrum of `paley2` instances.
    #[serde(default = "default_negative_depth")]
    pub negative_depth: usize,
}

fn default_k0() -> u64 {
    1
}

fn default_negative_depth() -> usize {
    4
}

impl InstanceSpec {
    pub fn new(kind: Kind, dim: usize, terms: usize, seed: u64) -> Self {
        InstanceSpec {
            kind,
            dim,
            terms,
            kset: None,
            k0: default_k0(),
            seed,
            resolution: None,
            gridsize: None,
            spectrum: None,
            negative_depth: default_negative_depth(),
        }
    }

    pub fn id(&self) -> String {
        format!("{}-d{}-t{}-s{}", self.kind, self.dim, self.terms, self.seed)
    }

    /// The lacunary set of a trigonometric instance.
    pub fn lacunary(&self) -> Result<LacunarySet> {
        match &self.kset {
            Some(k) => Ok(k.clone()),
            None => {
                if self.terms == 0 {
                    return Err(Error::InvalidSpec("K needs at least one element".into()));
                }
                gen_lacunary(self.seed, self.terms - 1, self.k0)
            }
        }
    }

    fn paley1_spectrum(&self, k: &LacunarySet) -> usize {
        self.spectrum.unwrap_or(k.max() as usize)
    }

    /// Resolution of a dyadic instance: explicit, or `terms + 1`.
    pub fn effective_resolution(&self) -> u32 {
        self.resolution.unwrap_or(self.terms as u32 + 1)
    }

    /// Gridsize of a trigonometric instance: explicit, or
    /// `4·(max K + spectrum bound + 1)`.
    pub fn effective_gridsize(&self) -> Result<usize> {
        if let Some(m) = self.gridsize {
            return Ok(m);
        }
        let k = self.lacunary()?;
        let kmax = k.max() as usize;
        let bound = match self.kind {
            Kind::Khintchine => return Err(Error::InvalidSpec("khintchine has no gridsize".into())),
            Kind::Paley1 => self.paley1_spectrum(&k),
            Kind::Paley2 => kmax.max(self.negative_depth),
            Kind::Steinhaus => kmax,
        };
        Ok(4 * (kmax + bound + 1))
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.dim > MAX_DIM {
            return Err(Error::InvalidSpec(format!("dim must be in 1..={MAX_DIM}, got {}", self.dim)));
        }
        match self.kind {
            Kind::Khintchine => {
                if self.terms == 0 {
                    return Err(Error::InvalidSpec("at least one term is required".into()));
                }
                let n = self.effective_resolution();
                if n < self.terms as u32 || n > crate::opfunc::MAX_RESOLUTION {
                    return Err(Error::InvalidSpec(format!(
                        "resolution {n} cannot carry {} terms",
                        self.terms
                    )));
                }
                let entries = (1usize << n) * self.dim * self.dim;
                if entries > MAX_DYADIC_ENTRIES {
                    return Err(Error::InvalidSpec(format!(
                        "2^N·d² = {entries} exceeds {MAX_DYADIC_ENTRIES}"
                    )));
                }
            }
            _ => {
                let m = self.effective_gridsize()?;
                let entries = m * self.dim * self.dim;
                if entries > MAX_TRIG_ENTRIES {
                    return Err(Error::InvalidSpec(format!("M·d² = {entries} exceeds {MAX_TRIG_ENTRIES}")));
                }
            }
        }
        Ok(())
    }
}

/// `k_0, …, k_J` with `k_{j+1} = 2k_j + 1 + jitter`, `jitter` uniform in `[0, k_j]`.
pub fn gen_lacunary(seed: u64, last: usize, k0: u64) -> Result<LacunarySet> {
    let mut rng = seeded(seed);
    lacunary_with(last, k0, |kj| rng.random_range(0..=kj))
}

/// The slowest-growing lacunary set `k_{j+1} = 2k_j + 1`.
pub fn minimal_lacunary(last: usize, k0: u64) -> Result<LacunarySet> {
    lacunary_with(last, k0, |_| 0)
}

fn lacunary_with(last: usize, k0: u64, mut jitter: impl FnMut(u64) -> u64) -> Result<LacunarySet> {
    if k0 == 0 {
        return Err(Error::Lacunarity("k_0 must be at least 1".into()));
    }
    let mut ks = vec![k0];
    for j in 0..last {
        let kj = ks[j];
        ks.push(2 * kj + 1 + jitter(kj));
    }
    LacunarySet::new(ks)
}

/// A generated function together with what it was built from.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Instance {
    pub spec: InstanceSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kset: Option<LacunarySet>,
    /// Nonzero coefficients as (frequency or Walsh index, matrix).
    pub coefficients: Vec<(i64, MatrixC)>,
    pub function: FnDocument,
}

fn random_coefficient<R: Rng>(rng: &mut R, dim: usize) -> MatrixC {
    unit_scale_matrix(rng, dim)
}

pub fn gen_instance(spec: &InstanceSpec) -> Result<Instance> {
    spec.validate()?;
    let mut rng = seeded(spec.seed);
    let d = spec.dim;
    match spec.kind {
        Kind::Khintchine => {
            let coeffs: Vec<MatrixC> = (0..spec.terms).map(|_| random_coefficient(&mut rng, d)).collect();
            let f = DyadicFn::rademacher_series(spec.effective_resolution(), &coeffs)?;
            let coefficients = coeffs.into_iter().enumerate().map(|(j, c)| (1i64 << j, c)).collect();
            Ok(Instance { spec: spec.clone(), kset: None, coefficients, function: FnDocument::Dyadic(f) })
        }
        kind => {
            let k = spec.lacunary()?;
            let m = spec.effective_gridsize()?;
            let freqs: Vec<i64> = match kind {
                Kind::Paley1 => (0..=spec.paley1_spectrum(&k) as i64).collect(),
                Kind::Paley2 => (-(spec.negative_depth as i64)..0)
                    .chain(k.elements().iter().map(|&x| x as i64))
                    .collect(),
                _ => k.elements().iter().map(|&x| x as i64).collect(),
            };
            let coefficients: Vec<(i64, MatrixC)> =
                freqs.into_iter().map(|n| (n, random_coefficient(&mut rng, d))).collect();
            let f = TrigFn::from_coefficients(m, d, &coefficients)?;
            Ok(Instance { spec: spec.clone(), kset: Some(k), coefficients, function: FnDocument::Trig(f) })
        }
    }
}

/// Runs the construction that matches the instance's family.
pub fn split_instance(inst: &Instance) -> Result<Splitting> {
    match (&inst.function, inst.spec.kind) {
        (FnDocument::Dyadic(f), Kind::Khintchine) => khintchine_split(f, inst.spec.terms),
        (FnDocument::Trig(f), Kind::Paley1) => {
            let k = inst.kset.as_ref().ok_or_else(|| Error::InvalidSpec("missing K".into()))?;
            paley_case1_split(f, k, default_tail_depth(f, k)?)
        }
        (FnDocument::Trig(f), Kind::Paley2 | Kind::Steinhaus) => {
            let k = inst.kset.as_ref().ok_or_else(|| Error::InvalidSpec("missing K".into()))?;
            paley_case2_split(f, k)
        }
        (_, kind) => Err(Error::InvalidSpec(format!("function grid does not match kind {kind}"))),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RowStatus {
    /// Every invariant holds.
    Ok,
    /// The row was computed but some invariant fails.
    Violated,
    /// The hypothesis of the construction does not hold.
    Hypothesis,
    /// Any other error.
    Error,
}

/// Measured quantities of one instance. Numeric fields are absent on
/// failed rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub id: String,
    pub kind: Kind,
    pub dim: usize,
    pub terms: usize,
    pub seed: u64,
    pub status: RowStatus,
    pub l1_norm: Option<f64>,
    pub construction_value: Option<f64>,
    pub solver_value: Option<f64>,
    pub dual_lower: Option<f64>,
    pub ratio_construction: Option<f64>,
    pub ratio_solver: Option<f64>,
    pub column_norm_a: Option<f64>,
    pub row_norm_b: Option<f64>,
    pub half_bound: Option<f64>,
    pub reconstruction_residual: Option<f64>,
    pub factor_residual: Option<f64>,
    pub nesting_residual: Option<f64>,
    pub membership_residual: Option<f64>,
    pub gap_orthogonality: Option<f64>,
    pub alternate_a_residual: Option<f64>,
    pub solver_converged: Option<bool>,
    pub solver_iterations: Option<usize>,
    /// Violated invariants, or the error message of a failed row.
    pub messages: Vec<String>,
}

/// CSV header, in column order.
pub const CSV_COLUMNS: [&str; 24] = [
    "id",
    "kind",
    "dim",
    "terms",
    "seed",
    "status",
    "l1_norm",
    "construction_value",
    "solver_value",
    "dual_lower",
    "ratio_construction",
    "ratio_solver",
    "column_norm_a",
    "row_norm_b",
    "half_bound",
    "reconstruction_residual",
    "factor_residual",
    "nesting_residual",
    "membership_residual",
    "gap_orthogonality",
    "alternate_a_residual",
    "solver_converged",
    "solver_iterations",
    "messages",
];

impl ReportRow {
    fn blank(spec: &InstanceSpec, status: RowStatus, messages: Vec<String>) -> Self {
        ReportRow {
            id: spec.id(),
            kind: spec.kind,
            dim: spec.dim,
            terms: spec.terms,
            seed: spec.seed,
            status,
            l1_norm: None,
            construction_value: None,
            solver_value: None,
            dual_lower: None,
            ratio_construction: None,
            ratio_solver: None,
            column_norm_a: None,
            row_norm_b: None,
            half_bound: None,
            reconstruction_residual: None,
            factor_residual: None,
            nesting_residual: None,
            membership_residual: None,
            gap_orthogonality: None,
            alternate_a_residual: None,
            solver_converged: None,
            solver_iterations: None,
            messages,
        }
    }

    fn failed(spec: &InstanceSpec, err: &Error) -> Self {
        let status = if err.is_hypothesis() { RowStatus::Hypothesis } else { RowStatus::Error };
        Self::blank(spec, status, vec![err.to_string()])
    }

    pub fn passed(&self) -> bool {
        self.status == RowStatus::Ok
    }

    fn csv_record(&self) -> Vec<String> {
        fn num(x: Option<f64>) -> String {
            x.map(|v| format!("{v:e}")).unwrap_or_default()
        }
        vec![
            self.id.clone(),
            self.kind.to_string(),
            self.dim.to_string(),
            self.terms.to_string(),
            self.seed.to_string(),
            serde_json::to_value(self.status)
                .ok()
                .and_then(|v| v.as_str().map(str::to_owned))
                .unwrap_or_default(),
            num(self.l1_norm),
            num(self.construction_value),
            num(self.solver_value),
            num(self.dual_lower),
            num(self.ratio_construction),
            num(self.ratio_solver),
            num(self.column_norm_a),
            num(self.row_norm_b),
            num(self.half_bound),
            num(self.reconstruction_residual),
            num(self.factor_residual),
            num(self.nesting_residual),
            num(self.membership_residual),
            num(self.gap_orthogonality),
            num(self.alternate_a_residual),
            self.solver_converged.map(|b| b.to_string()).unwrap_or_default(),
            self.solver_iterations.map(|n| n.to_string()).unwrap_or_default(),
            self.messages.join("; "),
        ]
    }
}

/// Violated row-level invariants.
pub fn row_violations(row: &ReportRow) -> Vec<String> {
    let mut out = Vec::new();
    let (Some(lower), Some(solver), Some(built)) = (row.dual_lower, row.solver_value, row.construction_value)
    else {
        return out;
    };
    if lower > solver {
        out.push(format!("dual lower bound {lower} exceeds solver value {solver}"));
    }
    if solver > built + RATIO_SLACK {
        out.push(format!("solver value {solver} exceeds construction value {built}"));
    }
    if let Some(r) = row.ratio_construction {
        if r > 2.0 * (1.0 + RATIO_SLACK) {
            out.push(format!("construction ratio {r} exceeds 2"));
        }
    }
    out
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub solve: SolveOptions,
}

/// Generates, splits and measures one instance.
pub fn run_instance(spec: &InstanceSpec, opts: &RunOptions) -> ReportRow {
    match measure(spec, opts) {
        Ok(row) => row,
        Err(e) => ReportRow::failed(spec, &e),
    }
}

fn measure(spec: &InstanceSpec, opts: &RunOptions) -> Result<ReportRow> {
    let inst = gen_instance(spec)?;
    let split = split_instance(&inst)?;
    let cert = triple_norm_solve_from(&split.target, &opts.solve, Some(&split.a))?;
    let d = &split.diagnostics;
    let l1 = d.l1_norm;
    let ratio = |v: f64| if l1 > 0.0 { v / l1 } else { 0.0 };
    let mut row = ReportRow::blank(spec, RowStatus::Ok, Vec::new());
    row.l1_norm = Some(l1);
    row.construction_value = Some(d.splitting_value);
    row.solver_value = Some(cert.value);
    row.dual_lower = Some(cert.dual_lower);
    row.ratio_construction = Some(ratio(d.splitting_value));
    row.ratio_solver = Some(ratio(cert.value));
    row.column_norm_a = Some(d.column_norm_a);
    row.row_norm_b = Some(d.row_norm_b);
    row.half_bound = Some(d.half_bound());
    row.reconstruction_residual = Some(d.reconstruction_residual);
    row.factor_residual = Some(d.factor_residual);
    row.nesting_residual = Some(d.nesting_residual);
    row.membership_residual = Some(d.membership_residual);
    row.gap_orthogonality = Some(d.gap_orthogonality);
    row.alternate_a_residual = Some(d.alternate_a_residual);
    row.solver_converged = Some(cert.converged);
    row.solver_iterations = Some(cert.iterations);
    let mut messages = split.violations();
    messages.extend(split.structural_violations());
    messages.extend(row_violations(&row));
    if !messages.is_empty() {
        row.status = RowStatus::Violated;
    }
    row.messages = messages;
    Ok(row)
}

/// Runs every spec, concurrently; rows come back in spec order.
pub fn run_experiment(specs: &[InstanceSpec], opts: &RunOptions) -> Vec<ReportRow> {
    specs.par_iter().map(|s| run_instance(s, opts)).collect()
}

/// Largest ratios and failure counts of one kind.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KindSummary {
    pub kind: Kind,
    pub rows: usize,
    pub passed: usize,
    pub max_ratio_construction: f64,
    pub max_ratio_solver: f64,
}

pub fn summarize(rows: &[ReportRow]) -> Vec<KindSummary> {
    Kind::ALL
        .into_iter()
        .filter_map(|kind| {
            let of_kind: Vec<&ReportRow> = rows.iter().filter(|r| r.kind == kind).collect();
            if of_kind.is_empty() {
                return None;
            }
            let max = |f: fn(&ReportRow) -> Option<f64>| of_kind.iter().filter_map(|r| f(r)).fold(0.0, f64::max);
            Some(KindSummary {
                kind,
                rows: of_kind.len(),
                passed: of_kind.iter().filter(|r| r.passed()).count(),
                max_ratio_construction: max(|r| r.ratio_construction),
                max_ratio_solver: max(|r| r.ratio_solver),
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

impl FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            _ => Err(Error::InvalidSpec(format!("unknown format {s:?}"))),
        }
    }
}

pub fn write_rows<W: Write>(rows: &[ReportRow], format: Format, out: W) -> Result<()> {
    match format {
        Format::Json => {
            let mut out = out;
            serde_json::to_writer_pretty(&mut out, rows)?;
            writeln!(out)?;
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(CSV_COLUMNS).map_err(csv_error)?;
            for row in rows {
                w.write_record(row.csv_record()).map_err(csv_error)?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// `count` specs of one kind with seeds `seed, seed + 1, …`.
pub fn sweep(template: &InstanceSpec, count: usize) -> Vec<InstanceSpec> {
    (0..count as u64)
        .map(|i| InstanceSpec { seed: template.seed.wrapping_add(i), ..template.clone() })
        .collect()
}

/// Outcome of one self-test check.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &str, passed: bool, detail: String) -> Check {
    Check { name: name.to_owned(), passed, detail }
}

/// Small fixed cases with known answers plus a short sweep of each kind.
pub fn selftest() -> Vec<Check> {
    let mut out = Vec::new();
    let opts = RunOptions::default();

    let pair = OpSequence::scalars(&[C64::new(3.0, 0.0), C64::new(4.0, 0.0)]);
    match triple_norm_solve_from(&pair, &opts.solve, None) {
        Ok(c) => out.push(check("solver on (3, 4)", (c.value - 5.0).abs() <= 1e-4, format!("value {}", c.value))),
        Err(e) => out.push(check("solver on (3, 4)", false, e.to_string())),
    }

    let one = MatrixC::identity(1);
    let scalar = DyadicFn::rademacher_series(2, &[one.clone(), one.clone()])
        .and_then(|f| khintchine_split(&f, 2).map(|s| (f, s)));
    match scalar {
        Ok((_, s)) => {
            let oracle = scalar_oracle(&s.target).unwrap_or(f64::NAN);
            let solved = triple_norm_solve_from(&s.target, &opts.solve, Some(&s.a)).map(|c| c.value);
            let ratio = solved.as_ref().map(|v| v / s.diagnostics.l1_norm).unwrap_or(f64::NAN);
            let ok = (ratio - 2f64.sqrt()).abs() <= 1e-6 && (oracle - 2f64.sqrt()).abs() <= 1e-12 && s.is_valid();
            out.push(check("r_0 + r_1 gives √2", ok, format!("solver ratio {ratio}, oracle {oracle}")));
        }
        Err(e) => out.push(check("r_0 + r_1 gives √2", false, e.to_string())),
    }

    let mut single = InstanceSpec::new(Kind::Steinhaus, 1, 1, 0);
    single.kset = LacunarySet::new(vec![3]).ok();
    let row = run_instance(&single, &opts);
    let ratio = row.ratio_solver.unwrap_or(f64::NAN);
    out.push(check("Steinhaus singleton", row.passed() && (ratio - 1.0).abs() <= 1e-6, format!("ratio {ratio}")));

    for kind in Kind::ALL {
        let specs = sweep(&InstanceSpec::new(kind, 2, 3, 1), 4);
        let rows = run_experiment(&specs, &opts);
        let failed: Vec<String> = rows
            .iter()
            .filter(|r| !r.passed())
            .map(|r| format!("{}: {}", r.id, r.messages.join("; ")))
            .collect();
        out.push(check(&format!("{kind} sweep"), failed.is_empty(), failed.join(" | ")));
    }
    out
}
