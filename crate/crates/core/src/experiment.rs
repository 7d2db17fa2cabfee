//! JSON experiment configs, the suite catalog and deterministic report files.
//!
//! A config names a `kind` and optionally a `suite` (the first suite of that kind is
//! the default); every other top-level key is a suite parameter. Reports start with
//! `#` metadata lines (CSV) or carry the same fields in an envelope object (JSON).
//! Nothing time-dependent is written, so equal configs give equal files.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::davenport::{
    gram_matrix, gram_quadrature, parse_freqs, riesz_constants, smoothness_estimate, DavenportSpec,
};
use crate::dilated_series::{
    gaposhkin_example, nsc_divergence_probe_at, oscillation_diagnostic, theo_dilated_criteria, CoeffRule,
    GeneratorRule, OscillationDiagnostic, SeriesDescriptor,
};
use crate::ergodic_transfer::{decreasing_criteria, ergodic_series_run, transfer_decay};
use crate::error::{Error, Result};
use crate::par::Exec;
use crate::randomized::{
    contraction_batch, doob_batch, dyadic_approx_batch, failures, parseval_batch, rio_batch, theo_dilated_batch,
    theo_gen_batch, transfer_batch, DEFAULT_SEED,
};
use crate::report::{csv_string, fmt_num, sha256_hex, AuditReport};
use crate::riesz_symbolic::{
    cond_gn_check, cylinder_sandwich, decreasing_criterion_symbolic, equilibrium_state, est_pn_audit,
    riesz_cosine_family, riesz_fourier_coeff, riesz_potentials, riesz_series_run, sample_mu, PotentialSeq,
    RieszProductSpec, SymbolicSpace,
};
use crate::tail::{TailFamily, TailSpec};
use crate::torus_fn::FourierFunction;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Audit,
    Dilated,
    Davenport,
    Ergodic,
    Riesz,
    Symbolic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub format: Option<Format>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default = "schema_version")]
    pub schema: u32,
    pub kind: Kind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub suite: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolution: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSpec>,
    #[serde(flatten)]
    pub parameters: BTreeMap<String, Value>,
}

fn schema_version() -> u32 {
    SCHEMA_VERSION
}

fn config_err(msg: impl std::fmt::Display) -> Error {
    Error::Config(msg.to_string())
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        if text.trim().is_empty() {
            return Err(config_err("empty config"));
        }
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(config_err)?;
        if cfg.schema != SCHEMA_VERSION {
            return Err(config_err(format!("unsupported schema {} (expected {SCHEMA_VERSION})", cfg.schema)));
        }
        cfg.suite()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn suite(&self) -> Result<&'static Suite> {
        match &self.suite {
            Some(name) => {
                let s = find_suite(name).ok_or_else(|| config_err(format!("unknown suite {name:?}")))?;
                if s.kind != self.kind {
                    return Err(config_err(format!("suite {name:?} belongs to kind {:?}", s.kind)));
                }
                Ok(s)
            }
            None => Ok(list_suites().iter().find(|s| s.kind == self.kind).expect("every kind has a suite")),
        }
    }

    /// SHA-256 of the canonical JSON form, without the output location.
    pub fn fingerprint(&self) -> Result<String> {
        let mut c = self.clone();
        c.output = None;
        c.suite = Some(self.suite()?.name.to_string());
        Ok(sha256_hex(serde_json::to_string(&c)?.as_bytes()))
    }

    fn params<T: DeserializeOwned>(&self) -> Result<T> {
        let map: serde_json::Map<String, Value> = self.parameters.clone().into_iter().collect();
        serde_json::from_value(Value::Object(map))
            .map_err(|e| config_err(format!("{}: {e}", self.suite.as_deref().unwrap_or("parameters"))))
    }
}

/// Catalog entry.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Suite {
    pub name: &'static str,
    pub kind: Kind,
    /// Theorem or lemma tag the suite exercises.
    pub anchor: &'static str,
    pub format: Format,
    /// Failures of a universal inequality make `run` exit with status 1.
    pub universal: bool,
    pub default_resolution: u32,
    pub columns: &'static str,
}

const fn suite(
    name: &'static str,
    kind: Kind,
    anchor: &'static str,
    format: Format,
    universal: bool,
    default_resolution: u32,
    columns: &'static str,
) -> Suite {
    Suite { name, kind, anchor, format, universal, default_resolution, columns }
}

const AUDIT_COLUMNS: &str = "AuditReport array";

static SUITES: [Suite; 24] = [
    suite("parseval", Kind::Audit, "detail telescoping Parseval identity", Format::Json, true, 12, AUDIT_COLUMNS),
    suite("rio", Kind::Audit, "Rio inequality max(1, sqrt(p-1))", Format::Json, true, 8, AUDIT_COLUMNS),
    suite("doob", Kind::Audit, "Doob maximal p/(p-1)", Format::Json, true, 8, AUDIT_COLUMNS),
    suite("lemme-dyadic", Kind::Audit, "lemme-dyadic factor-2 bound", Format::Json, true, 12, AUDIT_COLUMNS),
    suite("contraction", Kind::Audit, "lemma-contraction 2^n/m bound", Format::Json, true, 12, AUDIT_COLUMNS),
    suite("theo-gen", Kind::Audit, "theo-gen maximal K_p", Format::Json, true, 8, AUDIT_COLUMNS),
    suite("theo-dilated", Kind::Audit, "theo-dilated majorant", Format::Json, true, 12, AUDIT_COLUMNS),
    suite("transfer", Kind::Audit, "perron-frobenius duality", Format::Json, true, 12, AUDIT_COLUMNS),
    suite(
        "oscillation",
        Kind::Dilated,
        "dilated series oscillation diagnostic",
        Format::Csv,
        false,
        0,
        "checkpoint,median_osc,q90_osc",
    ),
    suite(
        "gaposhkin",
        Kind::Dilated,
        "example-gaposhkin sharpness exhibit",
        Format::Csv,
        false,
        0,
        "checkpoint,median_osc,q90_osc",
    ),
    suite(
        "nsc-probe",
        Kind::Dilated,
        "theo-nsc divergence probe",
        Format::Csv,
        false,
        0,
        "checkpoint,probability,pz_floor",
    ),
    suite("dilated-criteria", Kind::Dilated, "theo-dilated criteria", Format::Json, false, 12, AUDIT_COLUMNS),
    suite("gram", Kind::Davenport, "theo-davenport Gram matrix", Format::Csv, false, 22, "row,col,n_row,n_col,entry"),
    suite(
        "smoothness",
        Kind::Davenport,
        "davenport modulus exponent",
        Format::Csv,
        false,
        16,
        "lambda,p,slope,expected",
    ),
    suite(
        "transfer-decay",
        Kind::Ergodic,
        "transfer operator decay criterion",
        Format::Csv,
        false,
        0,
        "n,norm,criterion_partial",
    ),
    suite(
        "ergodic-series",
        Kind::Ergodic,
        "example-gaposhkin-dyn ergodic series",
        Format::Csv,
        false,
        0,
        "checkpoint,median_osc,q90_osc",
    ),
    suite("decreasing", Kind::Ergodic, "decreasing-filtration criteria", Format::Json, false, 12, AUDIT_COLUMNS),
    suite("riesz-coeff", Kind::Riesz, "theo-riesz Fourier coefficients", Format::Csv, false, 0, "k,re,im"),
    suite("riesz-sample", Kind::Riesz, "theo-riesz partial-product sampling", Format::Csv, false, 0, "x"),
    suite(
        "riesz-series",
        Kind::Riesz,
        "theo-riesz series diagnostic",
        Format::Csv,
        false,
        0,
        "checkpoint,median_osc,q90_osc",
    ),
    suite("cond-gn", Kind::Symbolic, "cond-gn potential regularity", Format::Json, false, 0, AUDIT_COLUMNS),
    suite("est-pn", Kind::Symbolic, "est-Pn decay", Format::Csv, false, 0, "n,m,pm_fn_sup"),
    suite("equilibrium", Kind::Symbolic, "gen-theo-FP cylinder sandwich", Format::Json, false, 0, AUDIT_COLUMNS),
    suite("symbolic-criterion", Kind::Symbolic, "symbolic decreasing criterion", Format::Json, false, 0, AUDIT_COLUMNS),
];

pub fn list_suites() -> &'static [Suite] {
    &SUITES
}

pub fn find_suite(name: &str) -> Option<&'static Suite> {
    SUITES.iter().find(|s| s.name == name)
}

#[derive(Clone, Debug, PartialEq)]
pub enum Body {
    Csv(String),
    Json(Value),
}

/// A finished run: metadata, the report body and the audit reports behind it.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOutput {
    pub suite: &'static Suite,
    pub config_sha256: String,
    pub seed: u64,
    pub resolution: Option<u32>,
    pub meta: Vec<(String, String)>,
    pub reports: Vec<AuditReport>,
    pub body: Body,
}

impl RunOutput {
    pub fn failures(&self) -> usize {
        failures(&self.reports)
    }

    /// Exit status: 1 when a universal audit failed, 0 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.suite.universal && self.failures() > 0 {
            1
        } else {
            0
        }
    }

    pub fn status(&self) -> String {
        match self.failures() {
            0 => "ok".into(),
            k => format!("FAILED {k} of {}", self.reports.len()),
        }
    }

    pub fn format(&self) -> Format {
        match self.body {
            Body::Csv(_) => Format::Csv,
            Body::Json(_) => Format::Json,
        }
    }

    pub fn header(&self) -> Vec<(String, String)> {
        let mut h = vec![
            ("mgale".to_string(), env!("CARGO_PKG_VERSION").to_string()),
            ("suite".into(), self.suite.name.into()),
            ("anchor".into(), self.suite.anchor.into()),
            ("config_sha256".into(), self.config_sha256.clone()),
            ("seed".into(), self.seed.to_string()),
        ];
        if let Some(j) = self.resolution {
            h.push(("resolution".into(), j.to_string()));
        }
        h.push(("status".into(), self.status()));
        h.extend(self.meta.iter().cloned());
        h
    }

    pub fn render(&self) -> Result<String> {
        match &self.body {
            Body::Csv(csv) => {
                let mut out: String = self.header().iter().map(|(k, v)| format!("# {k}: {v}\n")).collect();
                out.push_str(csv);
                Ok(out)
            }
            Body::Json(details) => {
                let mut env = serde_json::Map::new();
                for (k, v) in self.header() {
                    env.insert(k, Value::String(v));
                }
                env.insert("reports".into(), serde_json::to_value(&self.reports)?);
                env.insert("details".into(), details.clone());
                let mut s = serde_json::to_string_pretty(&Value::Object(env))?;
                s.push('\n');
                Ok(s)
            }
        }
    }

    /// Report body without the metadata lines (what reruns must reproduce exactly).
    pub fn body_text(&self) -> Result<String> {
        match &self.body {
            Body::Csv(csv) => Ok(csv.clone()),
            Body::Json(details) => Ok(serde_json::to_string(&json!({ "reports": self.reports, "details": details }))?),
        }
    }
}

/// Where `run_to_file` writes: `out` if given, else the config's path, else
/// `<suite>.<ext>` in the working directory.
pub fn output_path(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<PathBuf> {
    let suite = cfg.suite()?;
    let fmt = cfg.output.as_ref().and_then(|o| o.format).unwrap_or(suite.format);
    Ok(match (out, cfg.output.as_ref().and_then(|o| o.path.clone())) {
        (Some(p), _) => p.to_path_buf(),
        (None, Some(p)) => p,
        (None, None) => PathBuf::from(format!("{}.{}", suite.name, fmt.extension())),
    })
}

pub fn run_to_file(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<(RunOutput, PathBuf)> {
    let path = output_path(cfg, out)?;
    let result = run(cfg)?;
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(&path, result.render()?)?;
    Ok((result, path))
}

#[derive(Deserialize)]
#[serde(transparent)]
struct Ext(#[serde(with = "crate::report::extended")] f64);

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AuditParams {
    #[serde(default)]
    cases: Option<usize>,
    #[serde(default)]
    p: Option<Vec<Ext>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SeriesParams {
    series: SeriesDescriptor,
    checkpoints: Vec<usize>,
    #[serde(default = "default_samples")]
    samples: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GaposhkinParams {
    #[serde(default = "one")]
    m: u32,
    #[serde(default)]
    checkpoints: Option<Vec<usize>>,
    #[serde(default = "default_samples")]
    samples: usize,
    #[serde(default)]
    terms: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ProbeParams {
    series: SeriesDescriptor,
    p: f64,
    riesz_lower: f64,
    checkpoints: Vec<usize>,
    #[serde(default = "default_samples")]
    samples: usize,
    #[serde(default = "half")]
    lambda: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CriteriaParams {
    series: SeriesDescriptor,
    #[serde(default = "two")]
    p: f64,
    #[serde(default = "default_tail")]
    tail: TailSpec,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Quadrature {
    truncation: u64,
    resolution: u32,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GramParams {
    lambda: f64,
    freqs: String,
    #[serde(default)]
    quadrature: Option<Quadrature>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SmoothnessParams {
    lambda: f64,
    #[serde(default)]
    truncation: Option<u64>,
    #[serde(default = "two")]
    p: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DecayParams {
    generator: GeneratorRule,
    #[serde(default = "sixteen")]
    steps: u32,
    #[serde(default = "default_tail")]
    tail: TailSpec,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ErgodicParams {
    generator: GeneratorRule,
    coeffs: CoeffRule,
    terms: usize,
    checkpoints: Vec<usize>,
    #[serde(default = "default_samples")]
    samples: usize,
    #[serde(default = "default_tail")]
    tail: TailSpec,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DecreasingParams {
    generator: GeneratorRule,
    coeffs: CoeffRule,
    terms: usize,
    #[serde(default = "two")]
    p: f64,
    #[serde(default = "default_tail")]
    tail: TailSpec,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RieszCoeffParams {
    spec: RieszProductSpec,
    #[serde(default)]
    depth: Option<usize>,
    freqs: Vec<i64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RieszSampleParams {
    spec: RieszProductSpec,
    #[serde(default)]
    depth: Option<usize>,
    #[serde(default = "thousand")]
    count: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RieszSeriesParams {
    spec: RieszProductSpec,
    #[serde(default)]
    depth: Option<usize>,
    generator: GeneratorRule,
    coeffs: CoeffRule,
    checkpoints: Vec<usize>,
    #[serde(default = "default_samples")]
    samples: usize,
}

/// Potentials either from a Riesz product (`riesz` + `depth`) or given outright.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SymbolicParams {
    #[serde(default)]
    riesz: Option<RieszProductSpec>,
    #[serde(default)]
    depth: Option<usize>,
    #[serde(default)]
    space: Option<SymbolicSpace>,
    #[serde(default)]
    potentials: Option<PotentialSeq>,
    #[serde(default = "onef")]
    alpha: f64,
    /// `A` for cond-gn, `B` for est-pn.
    #[serde(default)]
    bound: Option<f64>,
    #[serde(default)]
    coeffs: Option<Vec<f64>>,
}

fn default_samples() -> usize {
    200
}
fn one() -> u32 {
    1
}
fn onef() -> f64 {
    1.0
}
fn two() -> f64 {
    2.0
}
fn half() -> f64 {
    0.5
}
fn sixteen() -> u32 {
    16
}
fn thousand() -> usize {
    1000
}
fn default_tail() -> TailSpec {
    TailSpec::Fit(TailFamily::Geometric)
}

fn audit_defaults(name: &str) -> (usize, Vec<f64>) {
    let all = vec![1.5, 2.0, 3.0, 4.0, 8.0];
    let mixed = vec![1.5, 2.0, 4.0, f64::INFINITY];
    match name {
        "parseval" => (1000, vec![2.0]),
        "rio" | "doob" => (10_000, all),
        "lemme-dyadic" | "contraction" => (500, mixed),
        "theo-gen" => (1000, all),
        "theo-dilated" => (200, vec![2.0, 4.0]),
        _ => (100, vec![2.0]),
    }
}

fn diag_meta(d: &OscillationDiagnostic) -> Vec<(String, String)> {
    vec![
        ("verdict".into(), d.verdict.to_string()),
        ("trend_slope".into(), d.trend_slope.map(fmt_num).unwrap_or_else(|| "none".into())),
        ("sample_size".into(), d.sample_size.to_string()),
    ]
}

fn riesz_depth(spec: &RieszProductSpec, depth: Option<usize>) -> usize {
    depth.unwrap_or(spec.lambdas.len() - 1)
}

/// Smallest grid holding the depth-`N` partial product without aliasing, plus two levels.
fn riesz_resolution(spec: &RieszProductSpec, n: usize) -> u32 {
    let total: u64 = spec.lambdas[..=n.min(spec.lambdas.len() - 1)].iter().sum();
    (64 - total.leading_zeros() + 3).max(10)
}

fn symbolic_source(p: &SymbolicParams) -> Result<(SymbolicSpace, PotentialSeq, Option<RieszProductSpec>)> {
    match (&p.riesz, &p.space, &p.potentials) {
        (Some(spec), None, None) => {
            let depth = p.depth.ok_or_else(|| config_err("riesz potentials need depth"))?;
            let (space, pot) = riesz_potentials(spec, depth)?;
            Ok((space, pot, Some(spec.clone())))
        }
        (None, Some(space), Some(pot)) => {
            let mut space = space.clone();
            space.init()?;
            pot.validate(&space)?;
            Ok((space, pot.clone(), None))
        }
        _ => Err(config_err("give either riesz + depth or space + potentials")),
    }
}

fn detail_json<T: Serialize>(v: &T) -> Result<Value> {
    Ok(serde_json::to_value(v)?)
}

/// Runs one experiment in memory.
pub fn run(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let suite = cfg.suite()?;
    let seed = cfg.seed.unwrap_or(DEFAULT_SEED);
    let j = cfg.resolution.unwrap_or(suite.default_resolution);
    let exec = Exec::default();
    let mut meta = Vec::new();
    let mut reports = Vec::new();
    let mut uses_j = suite.default_resolution > 0;
    let format = cfg.output.as_ref().and_then(|o| o.format).unwrap_or(suite.format);
    if format != suite.format {
        return Err(config_err(format!("suite {} writes {:?} only", suite.name, suite.format)));
    }
    let body = match suite.kind {
        Kind::Audit => {
            let p: AuditParams = cfg.params()?;
            let (cases, ps) = audit_defaults(suite.name);
            let cases = p.cases.unwrap_or(cases);
            let ps: Vec<f64> = p.p.map(|v| v.into_iter().map(|e| e.0).collect()).unwrap_or(ps);
            if ps.iter().any(|p| p.is_nan() || *p < 1.0) {
                return Err(config_err("exponents must be >= 1"));
            }
            reports = match suite.name {
                "parseval" => parseval_batch(cases, j, seed, exec),
                "rio" => rio_batch(cases, &ps, j, seed, exec),
                "doob" => doob_batch(cases, &ps, j, seed, exec),
                "lemme-dyadic" => dyadic_approx_batch(cases, &ps, j, seed, exec),
                "contraction" => contraction_batch(cases, &ps, j, seed, exec),
                "theo-gen" => theo_gen_batch(cases, &ps, j, seed, exec),
                "theo-dilated" => theo_dilated_batch(cases, &ps, j, seed, exec),
                _ => transfer_batch(cases, j, seed, exec),
            }
            .map_err(config_err)?;
            Body::Json(json!({ "cases": cases, "p": ps.iter().map(|p| fmt_num(*p)).collect::<Vec<_>>() }))
        }
        Kind::Dilated => match suite.name {
            "oscillation" => {
                let p: SeriesParams = cfg.params()?;
                let d = oscillation_diagnostic(&p.series.build()?, &p.checkpoints, p.samples, seed)?;
                meta = diag_meta(&d);
                Body::Csv(d.to_csv()?)
            }
            "gaposhkin" => {
                let p: GaposhkinParams = cfg.params()?;
                let cps = p.checkpoints.unwrap_or_else(|| (4..=12).map(|k| 1usize << k).collect());
                let last = *cps.last().ok_or_else(|| config_err("no checkpoints"))?;
                let spec = gaposhkin_example(p.m, p.terms.unwrap_or(2 * last + 1))?;
                let d = oscillation_diagnostic(&spec, &cps, p.samples, seed)?;
                meta = diag_meta(&d);
                meta.push(("m".into(), p.m.to_string()));
                Body::Csv(d.to_csv()?)
            }
            "nsc-probe" => {
                let p: ProbeParams = cfg.params()?;
                let probe = nsc_divergence_probe_at(
                    &p.series.build()?,
                    p.p,
                    p.riesz_lower,
                    p.lambda,
                    &p.checkpoints,
                    p.samples,
                    seed,
                )?;
                meta.push(("floor_maintained".into(), probe.floor_maintained.to_string()));
                Body::Csv(probe.to_csv()?)
            }
            _ => {
                let p: CriteriaParams = cfg.params()?;
                let t = theo_dilated_criteria(&p.series.build()?, p.p, j, p.tail)?;
                reports.push(t.report.clone());
                Body::Json(detail_json(&t)?)
            }
        },
        Kind::Davenport => match suite.name {
            "gram" => {
                let p: GramParams = cfg.params()?;
                let freqs = parse_freqs(&p.freqs).map_err(config_err)?;
                DavenportSpec::new(p.lambda, 1)?;
                let gram = gram_matrix(&freqs, p.lambda)?;
                let (lo, hi) = riesz_constants(&gram)?;
                meta.push(("riesz_lower".into(), fmt_num(lo)));
                meta.push(("riesz_upper".into(), fmt_num(hi)));
                match p.quadrature {
                    Some(q) => {
                        let j = cfg.resolution.unwrap_or(q.resolution);
                        let quad = gram_quadrature(&freqs, p.lambda, q.truncation, j)?;
                        let gap = gram
                            .entries
                            .iter()
                            .flatten()
                            .zip(quad.entries.iter().flatten())
                            .map(|(a, b)| (a - b).abs())
                            .fold(0.0, f64::max);
                        meta.push(("quadrature_max_abs_diff".into(), fmt_num(gap)));
                        reports.push(AuditReport::identity(gap, 0.0, 0.0, 1e-6, "gram closed form vs quadrature"));
                    }
                    None => uses_j = false,
                }
                Body::Csv(gram.to_csv()?)
            }
            _ => {
                let p: SmoothnessParams = cfg.params()?;
                let spec = match p.truncation {
                    Some(m) => DavenportSpec::new(p.lambda, m)?,
                    None => DavenportSpec::for_resolution(p.lambda, j)?,
                };
                let slope = smoothness_estimate(&spec, p.p, j)?;
                let expected = p.lambda - (p.p - 1.0) / p.p;
                meta.push(("truncation".into(), spec.truncation.to_string()));
                Body::Csv(csv_string(
                    &["lambda", "p", "slope", "expected"],
                    [vec![fmt_num(p.lambda), fmt_num(p.p), fmt_num(slope), fmt_num(expected)]],
                )?)
            }
        },
        Kind::Ergodic => match suite.name {
            "transfer-decay" => {
                let p: DecayParams = cfg.params()?;
                let d = transfer_decay(&p.generator.build()?.centered(), p.steps, p.tail)?;
                meta.push(("criterion_total".into(), fmt_num(d.criterion.total)));
                meta.push(("condensed".into(), fmt_num(d.condensed)));
                Body::Csv(d.to_csv()?)
            }
            "ergodic-series" => {
                let p: ErgodicParams = cfg.params()?;
                let coeffs = complex(p.coeffs.build(p.terms)?);
                let r = ergodic_series_run(&p.generator.build()?, &coeffs, &p.checkpoints, p.samples, seed, p.tail)?;
                meta = diag_meta(&r.diagnostic);
                meta.push(("decay_criterion_total".into(), fmt_num(r.decay.criterion.total)));
                Body::Csv(r.diagnostic.to_csv()?)
            }
            _ => {
                let p: DecreasingParams = cfg.params()?;
                let f = p.generator.build()?;
                let z = p
                    .coeffs
                    .build(p.terms)?
                    .iter()
                    .enumerate()
                    .map(|(n, a)| {
                        let zn = crate::torus_fn::dilate(
                            &f,
                            1i64.checked_shl(n as u32)
                                .filter(|m| *m > 0)
                                .ok_or_else(|| config_err("too many terms"))?,
                        )?;
                        Ok(scale(&zn, *a))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Body::Json(detail_json(&decreasing_criteria(&z, p.p, j, p.tail)?)?)
            }
        },
        Kind::Riesz => match suite.name {
            "riesz-coeff" => {
                let p: RieszCoeffParams = cfg.params()?;
                let n = riesz_depth(&p.spec, p.depth);
                let rows = p
                    .freqs
                    .iter()
                    .map(|k| {
                        let c = riesz_fourier_coeff(&p.spec, n, *k)?;
                        Ok(vec![k.to_string(), fmt_num(c.re), fmt_num(c.im)])
                    })
                    .collect::<Result<Vec<_>>>()?;
                meta.push(("depth".into(), n.to_string()));
                Body::Csv(csv_string(&["k", "re", "im"], rows)?)
            }
            "riesz-sample" => {
                let p: RieszSampleParams = cfg.params()?;
                let n = riesz_depth(&p.spec, p.depth);
                let j = cfg.resolution.unwrap_or_else(|| riesz_resolution(&p.spec, n));
                meta.push(("depth".into(), n.to_string()));
                meta.push(("resolution".into(), j.to_string()));
                let xs = sample_mu(&p.spec, n, j, p.count, seed)?;
                Body::Csv(csv_string(&["x"], xs.iter().map(|x| vec![fmt_num(*x)]))?)
            }
            _ => {
                let p: RieszSeriesParams = cfg.params()?;
                let n = riesz_depth(&p.spec, p.depth);
                let j = cfg.resolution.unwrap_or_else(|| riesz_resolution(&p.spec, n));
                let terms = p.spec.lambdas.len();
                let f = p.generator.build()?;
                let coeffs = complex(p.coeffs.build(terms)?);
                let r = riesz_series_run(&p.spec, n, j, &vec![f; terms], &coeffs, &p.checkpoints, p.samples, seed)?;
                meta = diag_meta(&r.diagnostic);
                meta.push(("depth".into(), n.to_string()));
                meta.push(("resolution".into(), j.to_string()));
                meta.push(("in_hypothesis".into(), r.in_hypothesis.to_string()));
                Body::Csv(r.diagnostic.to_csv()?)
            }
        },
        Kind::Symbolic => {
            let p: SymbolicParams = cfg.params()?;
            let (space, pot, riesz) = symbolic_source(&p)?;
            meta.push(("depth".into(), space.depth().to_string()));
            match suite.name {
                "cond-gn" => {
                    let a = p.bound.ok_or_else(|| config_err("cond-gn needs bound (A)"))?;
                    let c = cond_gn_check(&space, &pot, p.alpha, a)?;
                    reports.push(c.report.clone());
                    Body::Json(detail_json(&c)?)
                }
                "equilibrium" => {
                    let mu = equilibrium_state(&space, &pot)?;
                    let (d1, d2) = cylinder_sandwich(&space, &pot, &mu)?;
                    let mass: f64 = mu.iter().sum();
                    reports.push(AuditReport::identity(mass, 1.0, 0.0, 1e-12, "equilibrium mass"));
                    let norm = pot.normalization_error(&space)?;
                    Body::Json(json!({ "d1": d1, "d2": d2, "normalization_error": norm }))
                }
                name => {
                    let spec = riesz.ok_or_else(|| config_err(format!("{name} needs riesz potentials")))?;
                    let b = p.bound.unwrap_or(10.0);
                    let mu = equilibrium_state(&space, &pot)?;
                    let fs = riesz_cosine_family(&spec, &space, &mu)?;
                    let est = est_pn_audit(&space, &pot, &fs, p.alpha, b)?;
                    reports.push(est.report.clone());
                    meta.push(("slope".into(), fmt_num(est.slope)));
                    meta.push(("fitted_c".into(), fmt_num(est.fitted_c)));
                    if name == "est-pn" {
                        let rows = est.rows.iter().map(|(n, m, v)| vec![n.to_string(), m.to_string(), fmt_num(*v)]);
                        Body::Csv(csv_string(&["n", "m", "pm_fn_sup"], rows)?)
                    } else {
                        let a = p.coeffs.ok_or_else(|| config_err("symbolic-criterion needs coeffs"))?;
                        let value = decreasing_criterion_symbolic(est.fitted_c, &a, p.alpha)?;
                        Body::Json(json!({ "alpha": p.alpha, "fitted_c": est.fitted_c, "majorant": fmt_num(value) }))
                    }
                }
            }
        }
    };
    let seeded =
        matches!(suite.kind, Kind::Audit) || suite.columns.starts_with("checkpoint") || suite.name == "riesz-sample";
    if !seeded && cfg.seed.is_some() {
        meta.push(("note".into(), "seed unused by this suite".into()));
    }
    Ok(RunOutput {
        suite,
        config_sha256: cfg.fingerprint()?,
        seed,
        resolution: uses_j.then_some(j),
        meta,
        reports,
        body,
    })
}

fn complex(v: Vec<f64>) -> Vec<Complex64> {
    v.into_iter().map(|a| Complex64::new(a, 0.0)).collect()
}

fn scale(f: &FourierFunction, a: f64) -> FourierFunction {
    FourierFunction::from_coeffs(f.iter().map(|(m, c)| (m, c * a))).expect("finite scaling")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(v: Value) -> ExperimentConfig {
        ExperimentConfig::from_json(&v.to_string()).unwrap()
    }

    #[test]
    fn catalog() {
        let s = list_suites();
        assert!(s.len() >= 15);
        assert!(s.iter().any(|s| s.anchor == "lemme-dyadic factor-2 bound"));
        assert!(s.iter().any(|s| s.anchor == "theo-gen maximal K_p"));
        let mut names: Vec<_> = s.iter().map(|s| s.name).collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), s.len());
    }

    #[test]
    fn config_errors() {
        for bad in [
            "",
            "{}",
            "[]",
            r#"{"kind":"audit","suite":"gram"}"#,
            r#"{"kind":"audit","suite":"nope"}"#,
            r#"{"kind":"x"}"#,
            r#"{"kind":"audit","schema":9}"#,
        ] {
            assert!(matches!(ExperimentConfig::from_json(bad), Err(Error::Config(_))), "{bad}");
        }
        let typo = cfg(json!({"kind": "audit", "suite": "rio", "casez": 3}));
        assert!(matches!(run(&typo), Err(Error::Config(_))));
    }

    #[test]
    fn audit_run_is_deterministic() {
        let c = cfg(json!({"kind": "audit", "suite": "rio", "cases": 50, "seed": 7}));
        let a = run(&c).unwrap();
        assert_eq!(a.reports.len(), 50);
        assert_eq!(a.exit_code(), 0);
        assert_eq!(a.render().unwrap(), run(&c).unwrap().render().unwrap());
        let text = a.render().unwrap();
        let v: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["seed"], "7");
        assert_eq!(v["reports"].as_array().unwrap().len(), 50);
        let other = cfg(json!({"kind": "audit", "suite": "rio", "cases": 50, "seed": 8}));
        assert_ne!(a.config_sha256, other.fingerprint().unwrap());
    }

    #[test]
    fn csv_header_and_body() {
        let c = cfg(json!({"kind": "davenport", "lambda": 0.75, "freqs": "pow:2:4"}));
        let out = run(&c).unwrap();
        let text = out.render().unwrap();
        assert!(text.starts_with("# mgale: "));
        assert!(text.contains("# riesz_lower: "));
        assert!(text.lines().find(|l| !l.starts_with('#')).unwrap() == "row,col,n_row,n_col,entry");
        assert!(!text.contains("# resolution"));
    }

    #[test]
    fn every_kind_runs() {
        let riesz = json!({"lambdas": [1, 3, 9, 27, 81], "cs": [[0.5, 0.1], [0.5, 0.1], [0.5, 0.1], [0.5, 0.1], [0.5, 0.1]], "strict": true});
        let series = json!({"terms": 40, "coeffs": "geometric:0.5", "freqs": "pow:2", "generator": "sine"});
        let configs = vec![
            json!({"kind": "audit", "suite": "transfer", "cases": 4}),
            json!({"kind": "dilated", "suite": "oscillation", "series": series, "checkpoints": [2, 4, 8], "samples": 100}),
            json!({"kind": "dilated", "suite": "dilated-criteria", "series": series, "resolution": 10}),
            json!({"kind": "davenport", "suite": "smoothness", "lambda": 0.75, "resolution": 12}),
            json!({"kind": "ergodic", "generator": "sine", "steps": 8}),
            json!({"kind": "ergodic", "suite": "ergodic-series", "generator": "sine", "coeffs": "geometric:0.5", "terms": 20, "checkpoints": [2, 4], "samples": 100}),
            json!({"kind": "ergodic", "suite": "decreasing", "generator": "sine", "coeffs": "power:1", "terms": 6}),
            json!({"kind": "riesz", "spec": riesz, "freqs": [0, 1, -1, 4]}),
            json!({"kind": "riesz", "suite": "riesz-sample", "spec": riesz, "count": 10}),
            json!({"kind": "riesz", "suite": "riesz-series", "spec": riesz, "generator": [[1, 1.0, 0.0]], "coeffs": "geometric:0.5", "checkpoints": [1, 2], "samples": 100}),
            json!({"kind": "symbolic", "riesz": riesz, "depth": 4, "bound": 10.0}),
            json!({"kind": "symbolic", "suite": "equilibrium", "riesz": riesz, "depth": 4}),
            json!({"kind": "symbolic", "suite": "est-pn", "riesz": riesz, "depth": 4}),
            json!({"kind": "symbolic", "suite": "symbolic-criterion", "riesz": riesz, "depth": 4, "coeffs": [1.0, 0.5]}),
        ];
        for v in configs {
            let c = cfg(v.clone());
            let out = run(&c).unwrap_or_else(|e| panic!("{v}: {e}"));
            assert_eq!(out.render().unwrap(), run(&c).unwrap().render().unwrap(), "{v}");
        }
    }

    #[test]
    fn exit_codes() {
        let mut out = run(&cfg(json!({"kind": "audit", "suite": "parseval", "cases": 3}))).unwrap();
        assert_eq!(out.exit_code(), 0);
        out.reports[1].passed = false;
        assert_eq!(out.exit_code(), 1);
        assert_eq!(out.status(), "FAILED 1 of 3");
        let mut diag = run(&cfg(json!({"kind": "davenport", "lambda": 1.0, "freqs": "1,2", "quadrature": {"truncation": 64, "resolution": 10}}))).unwrap();
        diag.reports[0].passed = false;
        assert_eq!(diag.exit_code(), 0);
    }

    #[test]
    fn output_paths() {
        let c = cfg(json!({"kind": "audit", "suite": "doob", "output": {"path": "x/y.json"}}));
        assert_eq!(output_path(&c, None).unwrap(), PathBuf::from("x/y.json"));
        assert_eq!(output_path(&c, Some(Path::new("z.json"))).unwrap(), PathBuf::from("z.json"));
        let d = cfg(json!({"kind": "riesz", "spec": {"lambdas": [1], "cs": [[0.0, 0.0]]}, "freqs": [0]}));
        assert_eq!(output_path(&d, None).unwrap(), PathBuf::from("riesz-coeff.csv"));
        let e = cfg(json!({"kind": "audit", "suite": "doob", "output": {"format": "csv"}}));
        assert!(matches!(run(&e), Err(Error::Config(_))));
    }
}
