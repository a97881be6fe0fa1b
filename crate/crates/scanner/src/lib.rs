//! DAST engine for the nosqlab laboratory: a payload catalog for the
//! four attack classes, baseline-vs-attack differential oracles over a
//! live HTTP target, and stable report rendering.

pub mod config;
pub mod payloads;
pub mod report;
pub mod scan;

pub use config::{AttackClass, BadCredentials, EndpointSpec, ScanError, TargetConfig};
pub use payloads::{generate_payloads, Payload};
pub use report::{render_report, Confidence, Evidence, Finding, Report, ReportFormat};
pub use scan::{detect, Baselines, Observation, PostCheck, Scanner};
