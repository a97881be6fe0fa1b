//! Target configuration: which endpoints to probe, with which parameter
//! names, baseline credentials and attack classes.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackClass {
    ArrayInjection,
    OrInjection,
    JsInjection,
    CsrfProbe,
}

impl AttackClass {
    pub const ALL: [AttackClass; 4] = [
        AttackClass::ArrayInjection,
        AttackClass::OrInjection,
        AttackClass::JsInjection,
        AttackClass::CsrfProbe,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            AttackClass::ArrayInjection => "array_injection",
            AttackClass::OrInjection => "or_injection",
            AttackClass::JsInjection => "js_injection",
            AttackClass::CsrfProbe => "csrf_probe",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BadCredentials {
    pub username: String,
    pub password: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndpointSpec {
    pub path: String,
    #[serde(default = "default_method")]
    pub method: String,
    #[serde(default)]
    pub params: Vec<String>,
    /// Known-bad pair for the failure baseline; must fail on a correct
    /// implementation.
    #[serde(default)]
    pub bad_credentials: Option<BadCredentials>,
    /// Allow post-attack verification through the target's state
    /// endpoint.
    #[serde(default)]
    pub enable_post_checks: bool,
    /// Attack classes to run against this endpoint.
    pub classes: Vec<AttackClass>,
    /// A known or guessed username; the OR injection only works when the
    /// username part of the query is correct.
    #[serde(default)]
    pub known_username: Option<String>,
}

fn default_method() -> String {
    "POST".to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetConfig {
    pub base_url: String,
    pub endpoints: Vec<EndpointSpec>,
}

#[derive(Debug, thiserror::Error)]
pub enum ScanError {
    #[error("config error: {0}")]
    Config(String),
    #[error("no reachable endpoints")]
    NothingReachable,
}

impl TargetConfig {
    pub fn from_json(json: &str) -> Result<TargetConfig, ScanError> {
        let config: TargetConfig =
            serde_json::from_str(json).map_err(|e| ScanError::Config(e.to_string()))?;
        if config.endpoints.is_empty() {
            return Err(ScanError::Config("config lists no endpoints".into()));
        }
        Ok(config)
    }

    /// The standard scan profile for the bundled vulnerable lab.
    pub fn vulnerable_lab(base_url: &str) -> TargetConfig {
        TargetConfig {
            base_url: base_url.to_string(),
            endpoints: lab_endpoints("/vuln"),
        }
    }

    /// The standard scan profile for the hardened twins (serve the lab in
    /// json-only REST mode for a fully hardened run).
    pub fn hardened_lab(base_url: &str) -> TargetConfig {
        TargetConfig {
            base_url: base_url.to_string(),
            endpoints: lab_endpoints("/safe"),
        }
    }
}

fn lab_endpoints(prefix: &str) -> Vec<EndpointSpec> {
    let bad = Some(BadCredentials {
        username: "nosuchuser".to_string(),
        password: "wrongpass".to_string(),
    });
    vec![
        EndpointSpec {
            path: format!("{prefix}/login-array"),
            method: "POST".to_string(),
            params: vec!["username".to_string(), "password".to_string()],
            bad_credentials: bad.clone(),
            enable_post_checks: false,
            classes: vec![AttackClass::ArrayInjection],
            known_username: None,
        },
        EndpointSpec {
            path: format!("{prefix}/login-concat"),
            method: "POST".to_string(),
            params: vec!["username".to_string(), "password".to_string()],
            bad_credentials: bad,
            enable_post_checks: false,
            classes: vec![AttackClass::OrInjection],
            known_username: Some("tolkien".to_string()),
        },
        EndpointSpec {
            path: format!("{prefix}/mapreduce"),
            method: "POST".to_string(),
            params: vec!["field".to_string()],
            bad_credentials: None,
            enable_post_checks: true,
            classes: vec![AttackClass::JsInjection],
            known_username: None,
        },
        EndpointSpec {
            path: "/rest/lab_notes".to_string(),
            method: "POST".to_string(),
            params: Vec::new(),
            bad_credentials: None,
            enable_post_checks: false,
            classes: vec![AttackClass::CsrfProbe],
            known_username: None,
        },
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_parses_with_defaults() {
        let json = r#"{
            "base_url": "http://127.0.0.1:8080",
            "endpoints": [
                {"path": "/vuln/login-array",
                 "params": ["username", "password"],
                 "bad_credentials": {"username": "u", "password": "p"},
                 "classes": ["array_injection", "or_injection"],
                 "known_username": "tolkien"}
            ]
        }"#;
        let config = TargetConfig::from_json(json).unwrap();
        assert_eq!(config.endpoints[0].method, "POST");
        assert_eq!(
            config.endpoints[0].classes,
            vec![AttackClass::ArrayInjection, AttackClass::OrInjection]
        );
        assert!(!config.endpoints[0].enable_post_checks);
    }

    #[test]
    fn empty_endpoint_list_is_a_config_error() {
        let err = TargetConfig::from_json(r#"{"base_url": "x", "endpoints": []}"#).unwrap_err();
        assert!(matches!(err, ScanError::Config(_)));
    }

    #[test]
    fn lab_profiles_cover_all_four_classes() {
        for config in [
            TargetConfig::vulnerable_lab("http://x"),
            TargetConfig::hardened_lab("http://x"),
        ] {
            let mut classes: Vec<AttackClass> = config
                .endpoints
                .iter()
                .flat_map(|e| e.classes.iter().copied())
                .collect();
            classes.dedup();
            assert_eq!(classes, AttackClass::ALL);
        }
    }
}
