//! The exchange surface: every record travels as a one-line JSON envelope
//! with keys `v`, `kind`, `entity`, `ts`, `body`.
//!
//! Serialization is deterministic (fixed envelope key order, sorted keys in
//! all nested maps) so equal envelopes yield identical bytes and digests
//! are reproducible. Unknown envelope fields are preserved verbatim but
//! never interpreted.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::graph::{DependencyEdge, Resource};
use crate::ontology::{classify_kind, EntityKind, StoreKind};
use crate::provenance::ProvenanceEvent;
use crate::records::{
    AccessControlPolicy, AssessmentRule, AttackRecord, CloudServiceEntry, CloudSubscription,
    ConfigurationEntry, DetectionRule, EventRecord, IdentityRecord, IncidentRecord,
    ProductVersionEntry, ProviderResourceEntry, RecordInvariant, SecurityLevelReport, ThreatEntry,
    VulnerabilityEntry, Warning,
};

/// The format version this build reads and writes.
pub const FORMAT_VERSION: u64 = 1;

/// Closed set of record kind tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordKind {
    Event,
    Incident,
    Attack,
    Warning,
    Subscription,
    Policy,
    Identity,
    ProviderResource,
    #[serde(rename = "seclevel")]
    SecLevel,
    Vulnerability,
    Threat,
    AssessmentRule,
    DetectionRule,
    Version,
    Configuration,
    CloudService,
    Resource,
    Dependency,
    Provenance,
}

impl RecordKind {
    pub const ALL: [RecordKind; 19] = [
        RecordKind::Event,
        RecordKind::Incident,
        RecordKind::Attack,
        RecordKind::Warning,
        RecordKind::Subscription,
        RecordKind::Policy,
        RecordKind::Identity,
        RecordKind::ProviderResource,
        RecordKind::SecLevel,
        RecordKind::Vulnerability,
        RecordKind::Threat,
        RecordKind::AssessmentRule,
        RecordKind::DetectionRule,
        RecordKind::Version,
        RecordKind::Configuration,
        RecordKind::CloudService,
        RecordKind::Resource,
        RecordKind::Dependency,
        RecordKind::Provenance,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            RecordKind::Event => "event",
            RecordKind::Incident => "incident",
            RecordKind::Attack => "attack",
            RecordKind::Warning => "warning",
            RecordKind::Subscription => "subscription",
            RecordKind::Policy => "policy",
            RecordKind::Identity => "identity",
            RecordKind::ProviderResource => "provider_resource",
            RecordKind::SecLevel => "seclevel",
            RecordKind::Vulnerability => "vulnerability",
            RecordKind::Threat => "threat",
            RecordKind::AssessmentRule => "assessment_rule",
            RecordKind::DetectionRule => "detection_rule",
            RecordKind::Version => "version",
            RecordKind::Configuration => "configuration",
            RecordKind::CloudService => "cloud_service",
            RecordKind::Resource => "resource",
            RecordKind::Dependency => "dependency",
            RecordKind::Provenance => "provenance",
        }
    }

    pub fn parse(token: &str) -> Option<RecordKind> {
        RecordKind::ALL.iter().copied().find(|k| k.as_str() == token)
    }
}

impl fmt::Display for RecordKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExchangeError {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("unknown record kind: {0}")]
    UnknownKind(String),
    #[error("schema violation: {field}: {reason}")]
    SchemaViolation { field: String, reason: String },
}

impl ExchangeError {
    fn violation(field: impl Into<String>, reason: impl Into<String>) -> Self {
        ExchangeError::SchemaViolation { field: field.into(), reason: reason.into() }
    }
}

impl From<RecordInvariant> for ExchangeError {
    fn from(inv: RecordInvariant) -> Self {
        ExchangeError::SchemaViolation { field: inv.field.to_string(), reason: inv.reason }
    }
}

/// One exchanged record: versioned, kind-tagged, attributed to the role
/// that asserted it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordEnvelope {
    pub v: u64,
    pub kind: RecordKind,
    pub entity: EntityKind,
    pub ts: String,
    pub body: Value,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

impl RecordEnvelope {
    pub fn new(kind: RecordKind, entity: EntityKind, ts: impl Into<String>, body: Value) -> Self {
        RecordEnvelope {
            v: FORMAT_VERSION,
            kind,
            entity,
            ts: ts.into(),
            body,
            extra: Map::new(),
        }
    }

    /// The home store of this record.
    pub fn store(&self) -> StoreKind {
        classify_kind(self.kind)
    }
}

/// A record body decoded into its concrete type.
#[derive(Debug, Clone, PartialEq)]
pub enum TypedRecord {
    Event(EventRecord),
    Incident(IncidentRecord),
    Attack(AttackRecord),
    Warning(Warning),
    Subscription(CloudSubscription),
    Policy(AccessControlPolicy),
    Identity(IdentityRecord),
    ProviderResource(ProviderResourceEntry),
    SecLevel(SecurityLevelReport),
    Vulnerability(VulnerabilityEntry),
    Threat(ThreatEntry),
    AssessmentRule(AssessmentRule),
    DetectionRule(DetectionRule),
    Version(ProductVersionEntry),
    Configuration(ConfigurationEntry),
    CloudService(CloudServiceEntry),
    Resource(Resource),
    Dependency(DependencyEdge),
    Provenance(ProvenanceEvent),
}

impl TypedRecord {
    pub fn kind(&self) -> RecordKind {
        match self {
            TypedRecord::Event(_) => RecordKind::Event,
            TypedRecord::Incident(_) => RecordKind::Incident,
            TypedRecord::Attack(_) => RecordKind::Attack,
            TypedRecord::Warning(_) => RecordKind::Warning,
            TypedRecord::Subscription(_) => RecordKind::Subscription,
            TypedRecord::Policy(_) => RecordKind::Policy,
            TypedRecord::Identity(_) => RecordKind::Identity,
            TypedRecord::ProviderResource(_) => RecordKind::ProviderResource,
            TypedRecord::SecLevel(_) => RecordKind::SecLevel,
            TypedRecord::Vulnerability(_) => RecordKind::Vulnerability,
            TypedRecord::Threat(_) => RecordKind::Threat,
            TypedRecord::AssessmentRule(_) => RecordKind::AssessmentRule,
            TypedRecord::DetectionRule(_) => RecordKind::DetectionRule,
            TypedRecord::Version(_) => RecordKind::Version,
            TypedRecord::Configuration(_) => RecordKind::Configuration,
            TypedRecord::CloudService(_) => RecordKind::CloudService,
            TypedRecord::Resource(_) => RecordKind::Resource,
            TypedRecord::Dependency(_) => RecordKind::Dependency,
            TypedRecord::Provenance(_) => RecordKind::Provenance,
        }
    }

    /// The natural or derived key the record is stored and deduplicated by.
    pub fn record_id(&self) -> String {
        match self {
            TypedRecord::Event(r) => r.id.clone(),
            TypedRecord::Incident(r) => r.id.clone(),
            TypedRecord::Attack(r) => r.id.clone(),
            TypedRecord::Warning(r) => r.id.clone(),
            TypedRecord::Subscription(r) => format!("{}/{}", r.org, r.service),
            TypedRecord::Policy(r) => r.key(),
            TypedRecord::Identity(r) => r.user.clone(),
            TypedRecord::ProviderResource(r) => r.id.clone(),
            TypedRecord::SecLevel(r) => r.id.clone(),
            TypedRecord::Vulnerability(r) => r.id.clone(),
            TypedRecord::Threat(r) => r.id.clone(),
            TypedRecord::AssessmentRule(r) => r.id.clone(),
            TypedRecord::DetectionRule(r) => r.id.clone(),
            TypedRecord::Version(r) => r.key(),
            TypedRecord::Configuration(r) => r.config_id.clone(),
            TypedRecord::CloudService(r) => r.key(),
            TypedRecord::Resource(r) => r.id.to_string(),
            TypedRecord::Dependency(r) => format!("{}->{}", r.dependent, r.dependee),
            TypedRecord::Provenance(r) => format!("{}#{}", r.data, r.seq),
        }
    }

    pub fn validate(&self) -> Result<(), ExchangeError> {
        match self {
            TypedRecord::Event(r) => r.validate()?,
            TypedRecord::Incident(r) => r.validate()?,
            TypedRecord::Attack(r) => r.validate()?,
            TypedRecord::Warning(r) => r.validate()?,
            TypedRecord::Subscription(r) => r.validate()?,
            TypedRecord::Policy(r) => r.validate()?,
            TypedRecord::Identity(r) => r.validate()?,
            TypedRecord::ProviderResource(r) => r.validate()?,
            TypedRecord::SecLevel(r) => r.validate()?,
            TypedRecord::Vulnerability(r) => r.validate()?,
            TypedRecord::Threat(r) => r.validate()?,
            TypedRecord::AssessmentRule(r) => r.validate()?,
            TypedRecord::DetectionRule(r) => r.validate()?,
            TypedRecord::Version(r) => r.validate()?,
            TypedRecord::Configuration(r) => r.validate()?,
            TypedRecord::CloudService(r) => r.validate()?,
            TypedRecord::Resource(r) => {
                if r.id.as_str().is_empty() {
                    return Err(ExchangeError::violation("id", "must be non-empty"));
                }
                if r.locus == crate::graph::Locus::Cloud && r.provider.is_none() {
                    return Err(ExchangeError::violation(
                        "provider",
                        "cloud resources require a provider reference",
                    ));
                }
            }
            TypedRecord::Dependency(r) => {
                if r.dependent.as_str().is_empty() || r.dependee.as_str().is_empty() {
                    return Err(ExchangeError::violation("dependent", "endpoints must be non-empty"));
                }
                if r.dependent == r.dependee {
                    return Err(ExchangeError::violation(
                        "dependee",
                        "a resource cannot depend on itself",
                    ));
                }
            }
            TypedRecord::Provenance(r) => r.validate().map_err(|e| {
                ExchangeError::violation("payload", e.to_string())
            })?,
        }
        Ok(())
    }
}

/// Pulls the offending field name out of a serde message, when present.
fn field_of_serde_error(message: &str) -> String {
    message
        .split("missing field `")
        .nth(1)
        .and_then(|rest| rest.split('`').next())
        .unwrap_or("body")
        .to_string()
}

fn from_body<T: serde::de::DeserializeOwned>(body: &Value) -> Result<T, ExchangeError> {
    serde_json::from_value(body.clone()).map_err(|e| {
        let message = e.to_string();
        ExchangeError::violation(field_of_serde_error(&message), message)
    })
}

/// Decodes and validates the envelope's body against its declared kind.
pub fn decode(envelope: &RecordEnvelope) -> Result<TypedRecord, ExchangeError> {
    let body = &envelope.body;
    let typed = match envelope.kind {
        RecordKind::Event => TypedRecord::Event(from_body(body)?),
        RecordKind::Incident => TypedRecord::Incident(from_body(body)?),
        RecordKind::Attack => TypedRecord::Attack(from_body(body)?),
        RecordKind::Warning => TypedRecord::Warning(from_body(body)?),
        RecordKind::Subscription => TypedRecord::Subscription(from_body(body)?),
        RecordKind::Policy => TypedRecord::Policy(from_body(body)?),
        RecordKind::Identity => TypedRecord::Identity(from_body(body)?),
        RecordKind::ProviderResource => TypedRecord::ProviderResource(from_body(body)?),
        RecordKind::SecLevel => TypedRecord::SecLevel(from_body(body)?),
        RecordKind::Vulnerability => TypedRecord::Vulnerability(from_body(body)?),
        RecordKind::Threat => TypedRecord::Threat(from_body(body)?),
        RecordKind::AssessmentRule => TypedRecord::AssessmentRule(from_body(body)?),
        RecordKind::DetectionRule => TypedRecord::DetectionRule(from_body(body)?),
        RecordKind::Version => TypedRecord::Version(from_body(body)?),
        RecordKind::Configuration => TypedRecord::Configuration(from_body(body)?),
        RecordKind::CloudService => TypedRecord::CloudService(from_body(body)?),
        RecordKind::Resource => TypedRecord::Resource(from_body(body)?),
        RecordKind::Dependency => TypedRecord::Dependency(from_body(body)?),
        RecordKind::Provenance => TypedRecord::Provenance(from_body(body)?),
    };
    typed.validate()?;
    Ok(typed)
}

/// Builds a validated envelope around a typed record.
pub fn encode(
    record: &TypedRecord,
    entity: EntityKind,
    ts: impl Into<String>,
) -> RecordEnvelope {
    let body = match record {
        TypedRecord::Event(r) => serde_json::to_value(r),
        TypedRecord::Incident(r) => serde_json::to_value(r),
        TypedRecord::Attack(r) => serde_json::to_value(r),
        TypedRecord::Warning(r) => serde_json::to_value(r),
        TypedRecord::Subscription(r) => serde_json::to_value(r),
        TypedRecord::Policy(r) => serde_json::to_value(r),
        TypedRecord::Identity(r) => serde_json::to_value(r),
        TypedRecord::ProviderResource(r) => serde_json::to_value(r),
        TypedRecord::SecLevel(r) => serde_json::to_value(r),
        TypedRecord::Vulnerability(r) => serde_json::to_value(r),
        TypedRecord::Threat(r) => serde_json::to_value(r),
        TypedRecord::AssessmentRule(r) => serde_json::to_value(r),
        TypedRecord::DetectionRule(r) => serde_json::to_value(r),
        TypedRecord::Version(r) => serde_json::to_value(r),
        TypedRecord::Configuration(r) => serde_json::to_value(r),
        TypedRecord::CloudService(r) => serde_json::to_value(r),
        TypedRecord::Resource(r) => serde_json::to_value(r),
        TypedRecord::Dependency(r) => serde_json::to_value(r),
        TypedRecord::Provenance(r) => serde_json::to_value(r),
    }
    .expect("record bodies serialize");
    RecordEnvelope::new(record.kind(), entity, ts, body)
}

/// Parses one serialized record, validating the envelope and its body.
pub fn parse_record(bytes: &[u8]) -> Result<RecordEnvelope, ExchangeError> {
    let text = std::str::from_utf8(bytes)
        .map_err(|e| ExchangeError::Syntax(format!("not UTF-8: {e}")))?;
    let value: Value =
        serde_json::from_str(text).map_err(|e| ExchangeError::Syntax(e.to_string()))?;
    let Value::Object(mut fields) = value else {
        return Err(ExchangeError::violation("document", "must be a JSON object"));
    };

    let v = match fields.remove("v") {
        Some(Value::Number(n)) => n
            .as_u64()
            .ok_or_else(|| ExchangeError::violation("v", "must be a non-negative integer"))?,
        Some(_) => return Err(ExchangeError::violation("v", "must be an integer")),
        None => return Err(ExchangeError::violation("v", "missing")),
    };
    if v != FORMAT_VERSION {
        return Err(ExchangeError::violation("v", format!("unsupported format version {v}")));
    }

    let kind = match fields.remove("kind") {
        Some(Value::String(token)) => {
            RecordKind::parse(&token).ok_or(ExchangeError::UnknownKind(token))?
        }
        Some(_) => return Err(ExchangeError::violation("kind", "must be a string")),
        None => return Err(ExchangeError::violation("kind", "missing")),
    };

    let entity = match fields.remove("entity") {
        Some(Value::String(token)) => EntityKind::ALL
            .iter()
            .copied()
            .find(|e| e.as_str() == token)
            .ok_or_else(|| ExchangeError::violation("entity", format!("unknown entity {token}")))?,
        Some(_) => return Err(ExchangeError::violation("entity", "must be a string")),
        None => return Err(ExchangeError::violation("entity", "missing")),
    };

    let ts = match fields.remove("ts") {
        Some(Value::String(ts)) if !ts.is_empty() => ts,
        Some(Value::String(_)) => return Err(ExchangeError::violation("ts", "must be non-empty")),
        Some(_) => return Err(ExchangeError::violation("ts", "must be a string")),
        None => return Err(ExchangeError::violation("ts", "missing")),
    };

    let body = match fields.remove("body") {
        Some(body @ Value::Object(_)) => body,
        Some(_) => return Err(ExchangeError::violation("body", "must be an object")),
        None => return Err(ExchangeError::violation("body", "missing")),
    };

    let envelope = RecordEnvelope { v, kind, entity, ts, body, extra: fields };
    decode(&envelope)?;
    Ok(envelope)
}

/// Deterministic one-line serialization, no trailing newline.
pub fn serialize_record(envelope: &RecordEnvelope) -> Vec<u8> {
    serde_json::to_vec(envelope).expect("envelopes serialize")
}

/// Per-line ingest failure.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IngestError {
    pub line: usize,
    pub message: String,
}

/// Outcome of importing a record file.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct IngestReport {
    pub ingested: usize,
    pub rejected: usize,
    pub per_store: BTreeMap<StoreKind, usize>,
    pub errors: Vec<IngestError>,
}

impl IngestReport {
    pub fn note_ok(&mut self, store: StoreKind) {
        self.ingested += 1;
        *self.per_store.entry(store).or_insert(0) += 1;
    }

    pub fn note_err(&mut self, line: usize, message: impl Into<String>) {
        self.rejected += 1;
        self.errors.push(IngestError { line, message: message.into() });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn sample_vulnerability() -> RecordEnvelope {
        RecordEnvelope::new(
            RecordKind::Vulnerability,
            EntityKind::Researcher,
            "2026-03-01T09:00:00Z",
            json!({
                "id": "VLN-2026-0042",
                "description": "auth bypass in session handling",
                "kind": "code",
                "affected": ["webstack@2.1"],
                "impact_layers": ["Service", "Data"]
            }),
        )
    }

    #[test]
    fn kind_tokens_round_trip() {
        for kind in RecordKind::ALL {
            assert_eq!(RecordKind::parse(kind.as_str()), Some(kind));
            let as_json = serde_json::to_value(kind).unwrap();
            assert_eq!(as_json, Value::String(kind.as_str().to_string()));
        }
        assert_eq!(RecordKind::parse("banana"), None);
        assert_eq!(RecordKind::ALL.len(), 19);
    }

    #[test]
    fn parse_serialize_round_trip() {
        let envelope = sample_vulnerability();
        let bytes = serialize_record(&envelope);
        let reparsed = parse_record(&bytes).unwrap();
        assert_eq!(reparsed, envelope);
        assert_eq!(serialize_record(&reparsed), bytes);
    }

    #[test]
    fn serialization_is_deterministic() {
        let envelope = sample_vulnerability();
        assert_eq!(serialize_record(&envelope), serialize_record(&envelope.clone()));
        // Key order in the output is fixed regardless of construction order.
        let bytes = serialize_record(&envelope);
        let text = String::from_utf8(bytes).unwrap();
        let v_at = text.find("\"v\"").unwrap();
        let kind_at = text.find("\"kind\"").unwrap();
        let body_at = text.find("\"body\"").unwrap();
        assert!(v_at < kind_at && kind_at < body_at);
        // Nested maps serialize sorted, so equal bodies are equal bytes.
        let a = serde_json::to_string(&json!({"b": 1, "a": 2})).unwrap();
        assert_eq!(a, r#"{"a":2,"b":1}"#);
    }

    #[test]
    fn unknown_extension_fields_survive() {
        let mut envelope = sample_vulnerability();
        envelope.extra.insert("x_operator".into(), json!({"site": "osaka"}));
        let bytes = serialize_record(&envelope);
        let reparsed = parse_record(&bytes).unwrap();
        assert_eq!(reparsed.extra.get("x_operator"), Some(&json!({"site": "osaka"})));
        assert_eq!(serialize_record(&reparsed), bytes);
    }

    #[test]
    fn syntax_errors_are_reported() {
        assert!(matches!(parse_record(b"{not json"), Err(ExchangeError::Syntax(_))));
        assert!(matches!(parse_record(b"[1,2]"), Err(ExchangeError::SchemaViolation { .. })));
    }

    #[test]
    fn unknown_kind_is_rejected() {
        let line = br#"{"v":1,"kind":"banana","entity":"researcher","ts":"t1","body":{}}"#;
        assert_eq!(parse_record(line), Err(ExchangeError::UnknownKind("banana".into())));
    }

    #[test]
    fn missing_body_field_names_the_field() {
        let line = br#"{"v":1,"kind":"vulnerability","entity":"researcher","ts":"t1","body":{"description":"d","kind":"code"}}"#;
        match parse_record(line) {
            Err(ExchangeError::SchemaViolation { field, .. }) => assert_eq!(field, "id"),
            other => panic!("expected schema violation, got {other:?}"),
        }
    }

    #[test]
    fn invariant_failures_surface_as_schema_violations() {
        let mut envelope = sample_vulnerability();
        envelope.body["id"] = json!("CVE-2026-0042");
        match parse_record(&serialize_record(&envelope)) {
            Err(ExchangeError::SchemaViolation { field, .. }) => assert_eq!(field, "id"),
            other => panic!("expected schema violation, got {other:?}"),
        }
    }

    #[test]
    fn format_version_is_enforced() {
        let line = br#"{"v":2,"kind":"vulnerability","entity":"researcher","ts":"t1","body":{}}"#;
        match parse_record(line) {
            Err(ExchangeError::SchemaViolation { field, .. }) => assert_eq!(field, "v"),
            other => panic!("expected schema violation, got {other:?}"),
        }
    }

    #[test]
    fn encode_decode_round_trip() {
        let record = TypedRecord::Vulnerability(VulnerabilityEntry {
            id: "VLN-2026-7".into(),
            description: "demo".into(),
            kind: crate::records::VulnerabilityKind::Configuration,
            affected: vec!["svc-db".into()],
            impact_layers: Default::default(),
            extra: Map::new(),
        });
        let envelope = encode(&record, EntityKind::Registrar, "t1");
        assert_eq!(decode(&envelope).unwrap(), record);
        assert_eq!(envelope.store(), StoreKind::VulnerabilityKb);
    }
}
