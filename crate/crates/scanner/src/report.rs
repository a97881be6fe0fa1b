//! Findings and the scan report, with stable JSON and text renderings.
//! Rendering the same report twice is byte-identical; timestamps are
//! injected by the caller, never sampled during rendering.

use crate::config::AttackClass;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    pub baseline_status: u16,
    pub attack_status: u16,
    pub baseline_digest: String,
    pub attack_digest: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Confidence {
    /// Differential plus post-check evidence.
    Confirmed,
    /// Differential only, with no state access to verify side effects.
    Tentative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Finding {
    pub class: AttackClass,
    pub endpoint: String,
    pub payload_name: String,
    pub severity: String,
    pub confidence: Confidence,
    pub evidence: Evidence,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeCount {
    pub endpoint: String,
    pub count: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub scanned_at: String,
    pub target: String,
    pub findings: Vec<Finding>,
    pub unreachable: Vec<String>,
    pub duration_ms: u64,
    pub probes: Vec<ProbeCount>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Text,
}

impl ReportFormat {
    pub fn parse(s: &str) -> Option<ReportFormat> {
        match s {
            "json" => Some(ReportFormat::Json),
            "text" => Some(ReportFormat::Text),
            _ => None,
        }
    }
}

impl Report {
    pub fn from_json(json: &str) -> Result<Report, serde_json::Error> {
        serde_json::from_str(json)
    }

    /// 0 when clean, 1 when anything was found.
    pub fn exit_code(&self) -> i32 {
        if self.findings.is_empty() {
            0
        } else {
            1
        }
    }
}

pub fn render_report(report: &Report, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => {
            serde_json::to_string_pretty(report).expect("report serializes")
        }
        ReportFormat::Text => {
            let mut out = String::new();
            out.push_str(&format!("scan of {} at {}\n", report.target, report.scanned_at));
            for finding in &report.findings {
                out.push_str(&format!(
                    "[{}] {} via payload '{}' ({:?}, baseline {} vs attack {})\n",
                    finding.class.as_str(),
                    finding.endpoint,
                    finding.payload_name,
                    finding.confidence,
                    finding.evidence.baseline_status,
                    finding.evidence.attack_status,
                ));
            }
            for endpoint in &report.unreachable {
                out.push_str(&format!("unreachable: {endpoint}\n"));
            }
            let probes: u32 = report.probes.iter().map(|p| p.count).sum();
            out.push_str(&format!(
                "{} findings, {} probes, {} ms\n",
                report.findings.len(),
                probes,
                report.duration_ms
            ));
            out
        }
    }
}
