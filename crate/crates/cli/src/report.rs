//! JSON report shapes. Field order is fixed by the struct definitions and
//! floats go through serde_json's shortest round-trip formatting, so equal
//! inputs give byte-identical output.

use serde::Serialize;
use sha2::{Digest, Sha256};

use nullstring_core::catalog::{CheckResult, ClassificationRun, MetricInstance, PointAnalysis};
use nullstring_core::classify::{Duality, Expansion};
use nullstring_core::{Mode, Scalar};

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

fn expansion_word(e: Expansion) -> &'static str {
    match e {
        Expansion::Nonexpanding => "nonexpanding",
        Expansion::Expanding => "expanding",
    }
}

pub fn digest(bytes: &[u8]) -> String {
    let h = Sha256::digest(bytes);
    let hex: String = h.iter().map(|b| format!("{b:02x}")).collect();
    format!("sha256:{hex}")
}

/// Real points as plain numbers, complex ones as [re, im] pairs.
#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum PointJson {
    Real(Vec<f64>),
    Complex(Vec<[f64; 2]>),
}

impl PointJson {
    pub fn new(p: &[Scalar; 4], mode: Mode) -> Self {
        match mode {
            Mode::Real => PointJson::Real(p.iter().map(|c| c.re).collect()),
            Mode::Complex => PointJson::Complex(p.iter().map(|c| [c.re, c.im]).collect()),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CurvatureSummary {
    pub max_sd_weyl: f64,
    pub max_asd_weyl: f64,
    pub max_traceless_ricci: f64,
    pub scalar: [f64; 2],
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CongruenceJson {
    pub label: String,
    pub duality: &'static str,
    pub verified: bool,
    pub expansion: Option<&'static str>,
    pub relative_residual: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PerPoint {
    pub index: usize,
    pub point: PointJson,
    pub curvature: CurvatureSummary,
    pub sd: Option<String>,
    pub asd: Option<String>,
    pub symbol: Option<String>,
    pub congruences: Vec<CongruenceJson>,
    pub flags: Vec<String>,
}

impl PerPoint {
    pub fn new(index: usize, a: &PointAnalysis, mode: Mode) -> Self {
        let c = &a.curvature;
        PerPoint {
            index,
            point: PointJson::new(&a.point, mode),
            curvature: CurvatureSummary {
                max_sd_weyl: c.cup.iter().map(|v| v.norm()).fold(0.0, f64::max),
                max_asd_weyl: c.max_asd(),
                max_traceless_ricci: c.max_ricci(),
                scalar: [c.r.re, c.r.im],
            },
            sd: a.sd.as_ref().map(|t| t.label.to_string()),
            asd: a.asd.as_ref().map(|t| t.label.to_string()),
            symbol: a.symbol.as_ref().map(|s| s.to_string()),
            congruences: a
                .congruences
                .iter()
                .map(|o| CongruenceJson {
                    label: o.label.clone(),
                    duality: if o.duality == Duality::SD { "sd" } else { "asd" },
                    verified: o.verified,
                    expansion: o.expansion().map(expansion_word),
                    relative_residual: o.report.map(|r| r.relative_residual()),
                })
                .collect(),
            flags: a.flags.iter().map(|f| f.to_string()).collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Aggregate {
    pub symbol: Option<String>,
    /// Fraction of points whose symbol equals the aggregate.
    pub confidence: f64,
    pub claimed: Option<String>,
    pub claim_fraction: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RunReport {
    pub schema_version: u32,
    pub tool_version: &'static str,
    pub command: &'static str,
    pub input_digest: String,
    /// The metric file in canonical form.
    pub metric: String,
    pub family: String,
    pub mode: String,
    pub seed: u64,
    pub points_requested: usize,
    pub points_sampled: usize,
    pub points_rejected: usize,
    pub per_point: Vec<PerPoint>,
    pub aggregate: Aggregate,
    pub checks: Vec<CheckResult>,
    /// verify only: every requested check passed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub passed: Option<bool>,
}

pub struct RunHeader {
    pub command: &'static str,
    pub input_digest: String,
    pub metric: String,
    pub seed: u64,
    pub points_requested: usize,
}

impl RunReport {
    pub fn new(h: RunHeader, inst: &MetricInstance, run: &ClassificationRun, checks: Vec<CheckResult>) -> Self {
        RunReport {
            schema_version: SCHEMA_VERSION,
            tool_version: TOOL_VERSION,
            command: h.command,
            input_digest: h.input_digest,
            metric: h.metric,
            family: inst.family.clone(),
            mode: inst.mode.to_string(),
            seed: h.seed,
            points_requested: h.points_requested,
            points_sampled: run.points.len(),
            points_rejected: run.rejected,
            per_point: run.points.iter().enumerate().map(|(i, a)| PerPoint::new(i, a, inst.mode)).collect(),
            aggregate: Aggregate {
                symbol: run.aggregate.as_ref().map(|s| s.to_string()),
                confidence: run.agreement,
                claimed: inst.claimed.as_ref().map(|c| c.to_string()),
                claim_fraction: run.claim_fraction,
            },
            checks,
            passed: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct AxisJson {
    pub coordinate: String,
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Cell {
    pub row: usize,
    pub col: usize,
    pub point: Vec<f64>,
    /// "[SD] ⊗ [ASD]", "singular" or "ill-conditioned".
    pub label: String,
    /// Some 4-neighbour carries a different label.
    pub boundary: bool,
    /// Real curvature coefficients ("sd C3", ...) of opposite strict sign in a 4-neighbour.
    pub sign_changes: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ScanReport {
    pub schema_version: u32,
    pub tool_version: &'static str,
    pub command: &'static str,
    pub input_digest: String,
    pub metric: String,
    pub family: String,
    pub mode: String,
    pub coordinates: Vec<String>,
    pub base: Vec<f64>,
    pub axes: Vec<AxisJson>,
    /// Distinct labels in order of first appearance.
    pub labels: Vec<String>,
    pub uniform: bool,
    pub boundary_cells: usize,
    pub sign_change_cells: usize,
    pub singular_cells: usize,
    pub cells: Vec<Cell>,
}
