//! Orchestration of the full test suite, report serialization, and the
//! comparison against the bundled AES baseline.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::aes;
use crate::error::Error;
use crate::independence::{
    run_test, IndependenceResult, Mode, PairedStreams, StreamPair, TestConfig, TestData, TestKind, DEFAULT_MIN_SUPPORT,
};
use crate::sbox::{check_completeness, check_non_contradiction, invert_sbox, parse_sbox, SBox};
use crate::spectral::{compute_avalanche, compute_ddt, compute_lat, AvalancheSummary};
use crate::substitution::apply_stream;

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Digits kept for every floating-point number written to a report.
pub const SIGNIFICANT_DIGITS: usize = 12;

const BASELINE_TEXT: &str = include_str!("../fixtures/aes_baseline.json");

/// Failure to get a table off disk.
#[derive(Debug, Error)]
pub enum LoadError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: Error,
    },
}

pub fn load_sbox(path: &Path) -> Result<SBox, LoadError> {
    let shown = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| LoadError::Io { path: shown.clone(), source })?;
    parse_sbox(&text).map_err(|source| LoadError::Parse { path: shown, source })
}

/// Rounds to [`SIGNIFICANT_DIGITS`] significant decimal digits.
pub fn round_significant(v: f64) -> f64 {
    if v == 0.0 || !v.is_finite() {
        return v;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, v).parse().unwrap_or(v)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChecksReport {
    pub completeness: bool,
    /// `None` when the table is incomplete and the check cannot run.
    pub non_contradiction: Option<bool>,
    /// Filled in by the full suite only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub invert_roundtrip: Option<bool>,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

/// Completeness, then non-contradiction.
pub fn checks_on(s: &SBox) -> ChecksReport {
    let completeness = check_completeness(s);
    let non_contradiction = if completeness { check_non_contradiction(s).ok() } else { None };
    let passed = completeness && non_contradiction == Some(true);
    let mut notes = Vec::new();
    if !completeness {
        let empty = s.cells().iter().filter(|c| c.is_none()).count();
        notes.push(format!("{empty} empty cell(s); non-contradiction not checked"));
    } else if non_contradiction == Some(false) {
        notes.push("duplicate values; the table is not a bijection".to_string());
    }
    ChecksReport { completeness, non_contradiction, invert_roundtrip: None, passed, notes }
}

pub fn run_checks(sbox_path: &Path) -> Result<ChecksReport, LoadError> {
    Ok(checks_on(&load_sbox(sbox_path)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Passed,
    Failed,
    /// The test does not apply to this table.
    Skipped,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndependenceEntry {
    pub test_kind: TestKind,
    pub mode: Mode,
    pub r: u32,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result: Option<IndependenceResult>,
}

impl IndependenceEntry {
    pub fn from_outcome(kind: TestKind, mode: Mode, r: u32, outcome: Result<IndependenceResult, Error>) -> Self {
        match outcome {
            Ok(res) => IndependenceEntry {
                test_kind: kind,
                mode,
                r,
                status: if res.passed { Status::Passed } else { Status::Failed },
                error: None,
                result: Some(res),
            },
            Err(e) => IndependenceEntry {
                test_kind: kind,
                mode,
                r,
                status: if matches!(e, Error::NotByteBox { .. }) { Status::Skipped } else { Status::Error },
                error: Some(e.to_string()),
                result: None,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DdtSummary {
    pub delta_uniformity: u32,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatSummary {
    pub max_abs_bias: u32,
    pub nonlinearity: u32,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AvalancheReport {
    pub min: f64,
    pub mean: f64,
    pub max: f64,
    /// Flip probabilities, one row per input bit.
    pub probs: Vec<Vec<f64>>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    pub passed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ddt: Option<DdtSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lat: Option<LatSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub avalanche: Option<AvalancheReport>,
}

/// Differential, linear and avalanche summaries. A table fails when it is
/// linear in any of the three views.
pub fn spectral_on(s: &SBox) -> SpectralReport {
    let run = || -> Result<SpectralReport, Error> {
        let n = s.len() as u32;
        let ddt = compute_ddt(s)?;
        let lat = compute_lat(s)?;
        let av = compute_avalanche(s)?;
        let AvalancheSummary { min, mean, max } = av.summary();
        let ddt = DdtSummary { delta_uniformity: ddt.delta_uniformity(), passed: ddt.delta_uniformity() < n };
        let lat = LatSummary {
            max_abs_bias: lat.max_abs_bias(),
            nonlinearity: lat.nonlinearity(),
            passed: lat.nonlinearity() > 0,
        };
        let avalanche = AvalancheReport {
            min,
            mean,
            max,
            probs: av.rows().map(<[f64]>::to_vec).collect(),
            passed: min > 0.0 && max < 1.0,
        };
        Ok(SpectralReport {
            passed: ddt.passed && lat.passed && avalanche.passed,
            error: None,
            ddt: Some(ddt),
            lat: Some(lat),
            avalanche: Some(avalanche),
        })
    };
    run().unwrap_or_else(|e| SpectralReport {
        passed: false,
        error: Some(e.to_string()),
        ddt: None,
        lat: None,
        avalanche: None,
    })
}

/// Settings of a full run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub mode: Mode,
    /// Known-bit counts for both the static and dynamic families.
    pub ranks: Vec<u32>,
    pub epsilon: f64,
    pub min_support: u64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig::new(Mode::Exhaustive)
    }
}

impl SuiteConfig {
    pub fn new(mode: Mode) -> Self {
        SuiteConfig { mode, ranks: vec![1, 2, 3], epsilon: mode.default_epsilon(), min_support: DEFAULT_MIN_SUPPORT }
    }

    pub fn test_config(&self, r: u32) -> TestConfig {
        TestConfig { mode: self.mode, r, epsilon: self.epsilon, min_support: self.min_support }
    }
}

/// Plaintext streams for empirical runs; outputs are derived by substitution.
#[derive(Debug, Clone, Default)]
pub struct SuiteData {
    pub input1: Option<Vec<u8>>,
    pub input2: Option<Vec<u8>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionReport {
    pub schema_version: u32,
    pub sbox_id: String,
    pub tool_version: String,
    pub dim: usize,
    pub config: SuiteConfig,
    pub checks: ChecksReport,
    #[serde(rename = "static")]
    pub static_tests: Vec<IndependenceEntry>,
    pub dynamic: Vec<IndependenceEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectral: Option<SpectralReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline_delta: Option<BTreeMap<String, f64>>,
    pub passed: bool,
}

impl CriterionReport {
    /// Every numeric result keyed by a stable dotted name, rounded the same
    /// way as in serialized reports.
    pub fn metrics(&self) -> BTreeMap<String, f64> {
        let mut out = BTreeMap::new();
        for entry in self.static_tests.iter().chain(&self.dynamic) {
            let Some(res) = &entry.result else { continue };
            let key = format!("{}.{}.r{}", entry.test_kind, entry.mode, entry.r);
            out.insert(format!("{key}.worst_deviation"), res.worst_deviation);
            out.insert(format!("{key}.worst_mutual_information"), res.worst_mutual_information);
            out.insert(format!("{key}.skipped_patterns"), res.skipped_patterns as f64);
            if let Some(b) = &res.entropy_bound {
                out.insert(format!("{key}.input_entropy"), b.input_entropy);
                out.insert(format!("{key}.output_entropy"), b.output_entropy);
            }
        }
        if let Some(sp) = &self.spectral {
            if let Some(d) = &sp.ddt {
                out.insert("spectral.ddt.delta_uniformity".into(), f64::from(d.delta_uniformity));
            }
            if let Some(l) = &sp.lat {
                out.insert("spectral.lat.max_abs_bias".into(), f64::from(l.max_abs_bias));
                out.insert("spectral.lat.nonlinearity".into(), f64::from(l.nonlinearity));
            }
            if let Some(a) = &sp.avalanche {
                out.insert("spectral.avalanche.min".into(), a.min);
                out.insert("spectral.avalanche.mean".into(), a.mean);
                out.insert("spectral.avalanche.max".into(), a.max);
            }
        }
        out.values_mut().for_each(|v| *v = round_significant(*v));
        out
    }

    /// 0 when everything passed, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.passed {
            0
        } else {
            1
        }
    }
}

/// Metric set of the AES table under the default configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineFixture {
    pub schema_version: u32,
    pub sbox_id: String,
    pub config: SuiteConfig,
    pub metrics: BTreeMap<String, f64>,
}

impl BaselineFixture {
    /// Runs the default suite on the derived AES table.
    pub fn generate() -> Self {
        let config = SuiteConfig::default();
        let report = run_suite(&aes::sbox(), &config, &SuiteData::default(), None);
        BaselineFixture {
            schema_version: SCHEMA_VERSION,
            sbox_id: report.sbox_id.clone(),
            config,
            metrics: report.metrics(),
        }
    }

    pub fn bundled() -> Self {
        serde_json::from_str(BASELINE_TEXT).expect("bundled baseline parses")
    }

    pub fn bundled_text() -> &'static str {
        BASELINE_TEXT
    }

    pub fn to_json(&self) -> String {
        to_canonical_json(self)
    }
}

/// Runs checks, the inverse roundtrip, both independence families, the
/// spectral profile, and for byte tables the comparison with the baseline.
/// Failing checks stop the run.
pub fn run_full_suite_on(s: &SBox, config: &SuiteConfig, data: &SuiteData) -> CriterionReport {
    let baseline = (s.len() == 256).then(BaselineFixture::bundled);
    run_suite(s, config, data, baseline.as_ref())
}

pub fn run_full_suite(sbox_path: &Path, config: &SuiteConfig, data: &SuiteData) -> Result<CriterionReport, LoadError> {
    Ok(run_full_suite_on(&load_sbox(sbox_path)?, config, data))
}

fn run_suite(s: &SBox, config: &SuiteConfig, data: &SuiteData, baseline: Option<&BaselineFixture>) -> CriterionReport {
    let mut checks = checks_on(s);
    let mut report = CriterionReport {
        schema_version: SCHEMA_VERSION,
        sbox_id: s.digest(),
        tool_version: TOOL_VERSION.to_string(),
        dim: s.dim(),
        config: config.clone(),
        checks: checks.clone(),
        static_tests: Vec::new(),
        dynamic: Vec::new(),
        spectral: None,
        baseline_delta: None,
        passed: false,
    };
    if !checks.passed {
        report.checks.notes.push("remaining tests skipped".to_string());
        return report;
    }

    let roundtrip =
        invert_sbox(s).and_then(|inv| Ok(invert_sbox(&inv)? == *s && composes_to_identity(s, &inv))).unwrap_or(false);
    checks.invert_roundtrip = Some(roundtrip);
    checks.passed = roundtrip;
    report.checks = checks;

    let empirical_fallback = config.mode == Mode::Empirical && s.len() != 256;
    let outputs1 = data.input1.as_ref().and_then(|i| apply_stream(s, i).ok());
    let outputs2 = data.input2.as_ref().and_then(|i| apply_stream(s, i).ok());
    let static_data = match (&data.input1, &outputs1) {
        (Some(i), Some(o)) => StreamPair::new(i, o).ok().map(TestData::Static),
        _ => None,
    };
    let dynamic_data = match (&data.input1, &data.input2, &outputs1, &outputs2) {
        (Some(i1), Some(i2), Some(o1), Some(o2)) => PairedStreams::new(i1, i2, o1, o2).ok().map(TestData::Dynamic),
        _ => None,
    };

    for &r in &config.ranks {
        let cfg = config.test_config(r);
        for kind in TestKind::STATIC {
            report.static_tests.extend(run_entries(kind, s, &cfg, static_data, empirical_fallback));
        }
    }
    for &r in &config.ranks {
        let cfg = config.test_config(r);
        for kind in TestKind::DYNAMIC {
            report.dynamic.extend(run_entries(kind, s, &cfg, dynamic_data, empirical_fallback));
        }
    }
    report.spectral = Some(spectral_on(s));

    if let Some(base) = baseline {
        let ours = report.metrics();
        let delta = ours
            .iter()
            .filter_map(|(k, v)| base.metrics.get(k).map(|b| (k.clone(), round_significant(v - b))))
            .collect();
        report.baseline_delta = Some(delta);
    }

    let entries_ok =
        report.static_tests.iter().chain(&report.dynamic).all(|e| matches!(e.status, Status::Passed | Status::Skipped));
    report.passed = report.checks.passed && entries_ok && report.spectral.as_ref().is_some_and(|s| s.passed);
    report
}

/// Runs one test. Empirical runs on tables that cannot substitute bytes are
/// marked skipped and replaced by the exhaustive run.
fn run_entries(
    kind: TestKind,
    s: &SBox,
    cfg: &TestConfig,
    data: Option<TestData<'_>>,
    fallback: bool,
) -> Vec<IndependenceEntry> {
    let mut out = vec![IndependenceEntry::from_outcome(kind, cfg.mode, cfg.r, run_test(kind, s, cfg, data))];
    if fallback {
        let exhaustive = TestConfig { mode: Mode::Exhaustive, ..*cfg };
        out.push(IndependenceEntry::from_outcome(kind, Mode::Exhaustive, cfg.r, run_test(kind, s, &exhaustive, None)));
    }
    out
}

fn composes_to_identity(s: &SBox, inv: &SBox) -> bool {
    (0..s.len()).all(|x| {
        let forward = s.lookup(x).and_then(|y| inv.lookup(y as usize));
        let backward = inv.lookup(x).and_then(|y| s.lookup(y as usize));
        forward == Some(x as u32) && backward == Some(x as u32)
    })
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(r) = n.as_f64().map(round_significant).and_then(serde_json::Number::from_f64) {
                *n = r;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_value),
        Value::Object(map) => map.values_mut().for_each(round_value),
        _ => {}
    }
}

/// Pretty JSON with sorted keys and floats cut to twelve significant digits.
pub fn to_canonical_json<T: Serialize>(value: &T) -> String {
    let mut v = serde_json::to_value(value).expect("report types serialize");
    round_value(&mut v);
    let mut s = serde_json::to_string_pretty(&v).expect("json values serialize");
    s.push('\n');
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Text,
    Json,
}

pub fn emit_report(r: &CriterionReport, format: Format) -> String {
    match format {
        Format::Json => to_canonical_json(r),
        Format::Text => render_text(r),
    }
}

fn verdict(passed: bool) -> &'static str {
    if passed {
        "PASS"
    } else {
        "FAIL"
    }
}

fn tri(v: Option<bool>) -> &'static str {
    match v {
        Some(true) => "pass",
        Some(false) => "fail",
        None => "not run",
    }
}

pub fn render_checks_text(c: &ChecksReport) -> String {
    let mut out = format!(
        "checks      completeness: {}, non-contradiction: {}",
        tri(Some(c.completeness)),
        tri(c.non_contradiction)
    );
    if c.invert_roundtrip.is_some() {
        let _ = write!(out, ", inverse roundtrip: {}", tri(c.invert_roundtrip));
    }
    let _ = writeln!(out, "  {}", verdict(c.passed));
    for note in &c.notes {
        let _ = writeln!(out, "            note: {note}");
    }
    out
}

pub fn render_entry_text(e: &IndependenceEntry) -> String {
    let head = format!("{:<11} r={} {:<10}", e.test_kind.name(), e.r, e.mode.to_string());
    match (&e.result, &e.error) {
        (Some(res), _) => {
            let mut line = format!(
                "{head} worst deviation {:.6}  worst MI {:.6} bits  records {}",
                res.worst_deviation,
                res.worst_mutual_information,
                res.records.len()
            );
            if res.skipped_patterns > 0 {
                let _ = write!(line, "  skipped {}", res.skipped_patterns);
            }
            if let Some(b) = &res.entropy_bound {
                let _ = write!(line, "  H(in) {:.6} H(out) {:.6}", b.input_entropy, b.output_entropy);
            }
            let _ = writeln!(line, "  {}", verdict(res.passed));
            line
        }
        (None, err) => {
            let tag = if e.status == Status::Skipped { "SKIP" } else { "ERROR" };
            format!("{head} {}  {tag}\n", err.as_deref().unwrap_or(""))
        }
    }
}

pub fn render_spectral_text(sp: &SpectralReport) -> String {
    if let Some(err) = &sp.error {
        return format!("spectral    {err}  ERROR\n");
    }
    let mut out = String::new();
    if let Some(d) = &sp.ddt {
        let _ = writeln!(out, "differential delta uniformity {}  {}", d.delta_uniformity, verdict(d.passed));
    }
    if let Some(l) = &sp.lat {
        let _ = writeln!(
            out,
            "linear      nonlinearity {} (max |LAT| {})  {}",
            l.nonlinearity,
            l.max_abs_bias,
            verdict(l.passed)
        );
    }
    if let Some(a) = &sp.avalanche {
        let _ = writeln!(
            out,
            "avalanche   probability mean {:.6}, minimal {:.6}, max {:.6}  {}",
            a.mean,
            a.min,
            a.max,
            verdict(a.passed)
        );
    }
    out
}

fn render_text(r: &CriterionReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "sbox        {} ({}x{})", r.sbox_id, r.dim, r.dim);
    out.push_str(&render_checks_text(&r.checks));
    for e in r.static_tests.iter().chain(&r.dynamic) {
        out.push_str(&render_entry_text(e));
    }
    if let Some(sp) = &r.spectral {
        out.push_str(&render_spectral_text(sp));
    }
    if let Some(delta) = &r.baseline_delta {
        let differing: Vec<_> = delta.iter().filter(|(_, v)| **v != 0.0).collect();
        let _ = writeln!(out, "baseline    {} metrics compared with AES, {} differ", delta.len(), differing.len());
        for (k, v) in differing {
            let _ = writeln!(out, "            {k}: {v:+}");
        }
    }
    let _ = writeln!(out, "verdict     {}", verdict(r.passed));
    out
}
