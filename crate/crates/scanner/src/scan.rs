//! Probe, baseline and differential detection logic, and the scan
//! orchestrator: baselines before attacks, endpoints in config order,
//! payloads in catalog order.

use crate::config::{AttackClass, EndpointSpec, ScanError, TargetConfig};
use crate::payloads::{generate_payloads, marker_collection, Payload, FORM_CONTENT_TYPE};
use crate::report::{Confidence, Evidence, Finding, ProbeCount, Report};
use std::time::{Duration, Instant};

/// One observed HTTP exchange. 4xx/5xx are data, not errors.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub status: u16,
    pub body_digest: String,
    pub latency: Duration,
}

/// Failure baselines taken before any attack probe on an endpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct Baselines {
    pub bad_creds: Observation,
    pub malformed: Observation,
}

/// Noisy but non-attack probe value: breaks string and script parsing
/// without smuggling operators through form decoding.
pub const MALFORMED_PROBE: &str = "~'!)]}x([";

/// Post-attack verification result from the target's state endpoint.
#[derive(Debug, Clone, PartialEq)]
pub enum PostCheck {
    NotRun,
    MarkerDocs(usize),
}

#[derive(Debug, thiserror::Error)]
#[error("probe failed: {0}")]
pub struct ProbeError(String);

pub struct Scanner {
    config: TargetConfig,
    client: reqwest::Client,
    run_id: String,
    scanned_at: String,
}

impl Scanner {
    pub fn new(config: TargetConfig) -> Scanner {
        let run_id = format!("{:x}", std::process::id() as u128 * 0x10000 + nanos_tag());
        Scanner {
            config,
            client: reqwest::Client::builder()
                .timeout(Duration::from_secs(5))
                .build()
                .expect("client builds"),
            run_id,
            scanned_at: chrono::Utc::now().to_rfc3339(),
        }
    }

    /// Fixed run id: stable marker collection names for tests.
    pub fn with_run_id(mut self, run_id: impl Into<String>) -> Scanner {
        self.run_id = run_id.into();
        self
    }

    /// Injected timestamp: byte-identical reports for tests.
    pub fn with_timestamp(mut self, scanned_at: impl Into<String>) -> Scanner {
        self.scanned_at = scanned_at.into();
        self
    }

    pub fn run_id(&self) -> &str {
        &self.run_id
    }

    pub async fn scan(&self) -> Result<Report, ScanError> {
        // Validate the whole catalog before the first probe.
        let mut catalog: Vec<(usize, Vec<Payload>)> = Vec::new();
        for (idx, endpoint) in self.config.endpoints.iter().enumerate() {
            let mut payloads = Vec::new();
            for class in &endpoint.classes {
                payloads.extend(generate_payloads(*class, endpoint, &self.run_id)?);
            }
            catalog.push((idx, payloads));
        }

        let started = Instant::now();
        let mut findings = Vec::new();
        let mut unreachable = Vec::new();
        let mut probes = Vec::new();
        let mut reachable_endpoints = 0usize;

        for (idx, payloads) in catalog {
            let endpoint = &self.config.endpoints[idx];
            let mut count = 0u32;
            let baselines = match self.collect_baselines(endpoint, &mut count).await {
                Ok(b) => b,
                Err(_) => {
                    unreachable.push(endpoint.path.clone());
                    probes.push(ProbeCount { endpoint: endpoint.path.clone(), count });
                    continue;
                }
            };
            reachable_endpoints += 1;
            let mut endpoint_up = true;
            for payload in &payloads {
                if !endpoint_up {
                    break;
                }
                match self.probe(endpoint, payload).await {
                    Ok(attack) => {
                        count += 1;
                        let post = if payload.class == AttackClass::JsInjection
                            && endpoint.enable_post_checks
                        {
                            count += 1;
                            self.post_check_marker().await
                        } else {
                            PostCheck::NotRun
                        };
                        if let Some(finding) =
                            detect(payload.class, &baselines, &attack, &post)
                        {
                            findings.push(Finding {
                                class: payload.class,
                                endpoint: endpoint.path.clone(),
                                payload_name: payload.name.clone(),
                                severity: "high".to_string(),
                                confidence: finding,
                                evidence: Evidence {
                                    baseline_status: baselines.bad_creds.status,
                                    attack_status: attack.status,
                                    baseline_digest: baselines.bad_creds.body_digest.clone(),
                                    attack_digest: attack.body_digest,
                                },
                            });
                        }
                    }
                    Err(_) => {
                        unreachable.push(endpoint.path.clone());
                        endpoint_up = false;
                    }
                }
            }
            probes.push(ProbeCount { endpoint: endpoint.path.clone(), count });
        }

        if reachable_endpoints == 0 {
            return Err(ScanError::NothingReachable);
        }

        Ok(Report {
            scanned_at: self.scanned_at.clone(),
            target: self.config.base_url.clone(),
            findings,
            unreachable,
            duration_ms: started.elapsed().as_millis() as u64,
            probes,
        })
    }


    async fn collect_baselines(
        &self,
        endpoint: &EndpointSpec,
        count: &mut u32,
    ) -> Result<Baselines, ProbeError> {
        let bad_fields: Vec<(String, String)> = match (&endpoint.bad_credentials, endpoint.params.len()) {
            (Some(bad), n) if n >= 2 => vec![
                (endpoint.params[0].clone(), bad.username.clone()),
                (endpoint.params[1].clone(), bad.password.clone()),
            ],
            _ => endpoint
                .params
                .iter()
                .map(|p| (p.clone(), "notafield".to_string()))
                .collect(),
        };
        let malformed_fields: Vec<(String, String)> = if endpoint.params.is_empty() {
            vec![("malformed".to_string(), MALFORMED_PROBE.to_string())]
        } else {
            endpoint
                .params
                .iter()
                .map(|p| (p.clone(), MALFORMED_PROBE.to_string()))
                .collect()
        };
        let bad_creds = self.probe_form(endpoint, &bad_fields).await?;
        *count += 1;
        let malformed = self.probe_form(endpoint, &malformed_fields).await?;
        *count += 1;
        Ok(Baselines { bad_creds, malformed })
    }

    async fn probe_form(
        &self,
        endpoint: &EndpointSpec,
        fields: &[(String, String)],
    ) -> Result<Observation, ProbeError> {
        let body = crate::payloads::urlencode_pairs(fields).into_bytes();
        self.exchange(endpoint, FORM_CONTENT_TYPE, body).await
    }

    pub async fn probe(
        &self,
        endpoint: &EndpointSpec,
        payload: &Payload,
    ) -> Result<Observation, ProbeError> {
        self.exchange(endpoint, &payload.content_type, payload.body.clone())
            .await
    }

    async fn exchange(
        &self,
        endpoint: &EndpointSpec,
        content_type: &str,
        body: Vec<u8>,
    ) -> Result<Observation, ProbeError> {
        let url = format!("{}{}", self.config.base_url, endpoint.path);
        let started = Instant::now();
        let request = match endpoint.method.as_str() {
            "GET" => self.client.get(&url),
            "POST" => self
                .client
                .post(&url)
                .header("content-type", content_type)
                .body(body),
            other => return Err(ProbeError(format!("unsupported method {other}"))),
        };
        let response = request
            .send()
            .await
            .map_err(|e| ProbeError(e.to_string()))?;
        let status = response.status().as_u16();
        let text = response.text().await.unwrap_or_default();
        Ok(Observation {
            status,
            body_digest: digest_body(&text),
            latency: started.elapsed(),
        })
    }

    async fn post_check_marker(&self) -> PostCheck {
        let url = format!(
            "{}/__state/{}",
            self.config.base_url,
            marker_collection(&self.run_id)
        );
        let Ok(response) = self.client.get(&url).send().await else {
            return PostCheck::NotRun;
        };
        if response.status().as_u16() != 200 {
            return PostCheck::NotRun;
        }
        let Ok(text) = response.text().await else {
            return PostCheck::NotRun;
        };
        match serde_json::from_str::<serde_json::Value>(&text) {
            Ok(serde_json::Value::Array(docs)) => PostCheck::MarkerDocs(docs.len()),
            _ => PostCheck::NotRun,
        }
    }
}

/// Normalize a response body: its `status` field when the body is JSON,
/// otherwise a trimmed prefix.
fn digest_body(text: &str) -> String {
    if let Ok(serde_json::Value::Object(map)) = serde_json::from_str(text) {
        if let Some(serde_json::Value::String(s)) = map.get("status") {
            return s.clone();
        }
    }
    let trimmed = text.trim();
    trimmed.chars().take(120).collect()
}

fn nanos_tag() -> u128 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.subsec_nanos() as u128)
        .unwrap_or(0)
}

fn success_class(status: u16) -> bool {
    (200..300).contains(&status)
}

fn failure_class(status: u16) -> bool {
    (400..600).contains(&status)
}

/// The per-class differential oracles. Absence of a finding is the
/// negative result; this function never fails.
pub fn detect(
    class: AttackClass,
    baselines: &Baselines,
    attack: &Observation,
    post: &PostCheck,
) -> Option<Confidence> {
    match class {
        AttackClass::ArrayInjection | AttackClass::OrInjection => {
            // Auth-bypass differential: the attack logs in where known-bad
            // credentials do not.
            (success_class(attack.status) && (400..500).contains(&baselines.bad_creds.status))
                .then_some(Confidence::Confirmed)
        }
        AttackClass::JsInjection => {
            if !success_class(attack.status) {
                return None;
            }
            match post {
                PostCheck::MarkerDocs(n) if *n > 0 => Some(Confidence::Confirmed),
                PostCheck::MarkerDocs(_) => None,
                // Without state access: a syntactically breaking payload
                // that succeeds, against a malformed baseline that fails.
                PostCheck::NotRun => {
                    failure_class(baselines.malformed.status).then_some(Confidence::Tentative)
                }
            }
        }
        AttackClass::CsrfProbe => success_class(attack.status).then_some(Confidence::Confirmed),
    }
}
