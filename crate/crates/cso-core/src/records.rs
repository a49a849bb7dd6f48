//! The record taxonomy: typed contents of the four databases and the
//! (sub-)knowledge bases.
//!
//! These are deliberately "lite" profiles: each type carries the fields the
//! operational categories call for, not the full schema of the external
//! standard that could describe it. Every type validates its own invariants
//! via `validate`, which ingest runs before any record is stored.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::graph::{Layer, ResourceId};
use crate::scoring::SecurityScore;

/// Organization identifier.
#[derive(
    Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
#[serde(transparent)]
pub struct OrgId(pub String);

impl OrgId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for OrgId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl<T: Into<String>> From<T> for OrgId {
    fn from(value: T) -> Self {
        OrgId(value.into())
    }
}

/// Data object identifier. Data and the assets hosting it are decoupled, so
/// data ids form their own namespace.
#[derive(
    Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
#[serde(transparent)]
pub struct DataId(pub String);

impl DataId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for DataId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl<T: Into<String>> From<T> for DataId {
    fn from(value: T) -> Self {
        DataId(value.into())
    }
}

/// Subject of an incident, attack target or warning: a resource or a bare
/// data object.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "type", content = "id", rename_all = "snake_case")]
pub enum SubjectRef {
    Resource(ResourceId),
    Data(DataId),
}

impl fmt::Display for SubjectRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SubjectRef::Resource(id) => write!(f, "resource:{id}"),
            SubjectRef::Data(id) => write!(f, "data:{id}"),
        }
    }
}

/// Invariant violation on a single record, found before storing it.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid {kind} record: {field}: {reason}")]
pub struct RecordInvariant {
    pub kind: &'static str,
    pub field: &'static str,
    pub reason: String,
}

fn invariant(kind: &'static str, field: &'static str, reason: impl Into<String>) -> RecordInvariant {
    RecordInvariant { kind, field, reason: reason.into() }
}

fn require_non_empty(
    kind: &'static str,
    field: &'static str,
    value: &str,
) -> Result<(), RecordInvariant> {
    if value.is_empty() {
        return Err(invariant(kind, field, "must be non-empty"));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Incident Database records
// ---------------------------------------------------------------------------

/// A record of one computer event: packets, files, transactions, logins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub id: String,
    /// Event time. Timestamps are opaque, lexicographically ordered strings;
    /// RFC 3339 UTC is the expected form.
    pub timestamp: String,
    /// Resource or data object the event was observed on.
    pub source: SubjectRef,
    pub actor: String,
    pub action: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub attributes: BTreeMap<String, String>,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

impl EventRecord {
    pub fn validate(&self) -> Result<(), RecordInvariant> {
        require_non_empty("event", "id", &self.id)?;
        require_non_empty("event", "timestamp", &self.timestamp)?;
        require_non_empty("event", "action", &self.action)
    }
}

/// Outcome of investigating an incident candidate. False incidents are
/// retained, never deleted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Assessment {
    UnderInvestigation,
    Confirmed,
    FalseIncident,
}

impl fmt::Display for Assessment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Assessment::UnderInvestigation => "under_investigation",
            Assessment::Confirmed => "confirmed",
            Assessment::FalseIncident => "false_incident",
        })
    }
}

/// A record of one incident, derived from the analysis of event records.
///
/// The subject may be a bare data object: data incidents are recorded
/// independently of any IT asset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncidentRecord {
    pub id: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub event_ids: Vec<String>,
    /// Observed state, e.g. "excessive access".
    pub state: String,
    /// e.g. "denial of service".
    pub expected_consequence: String,
    pub assessment: Assessment,
    pub subject: SubjectRef,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

impl IncidentRecord {
    pub fn validate(&self) -> Result<(), RecordInvariant> {
        require_non_empty("incident", "id", &self.id)?;
        require_non_empty("incident", "state", &self.state)
    }
}

/// One hop of attack damage propagation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropagationStep {
    pub from: SubjectRef,
    pub to: SubjectRef,
}

/// A record of an attack: how it was initiated, what it targeted and how
/// the damage propagated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackRecord {
    pub id: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub incident_ids: Vec<String>,
    pub initiation: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub targets: Vec<SubjectRef>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub propagation: Vec<PropagationStep>,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

impl AttackRecord {
    pub fn validate(&self) -> Result<(), RecordInvariant> {
        require_non_empty("attack", "id", &self.id)?;
        require_non_empty("attack", "initiation", &self.initiation)
    }
}

// ---------------------------------------------------------------------------
// Warning Database records
// ---------------------------------------------------------------------------

/// The risk a warning is about.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "type", content = "id", rename_all = "snake_case")]
pub enum RiskRef {
    Vulnerability(String),
    Incident(String),
}

impl RiskRef {
    pub fn id(&self) -> &str {
        match self {
            RiskRef::Vulnerability(id) | RiskRef::Incident(id) => id,
        }
    }
}

impl fmt::Display for RiskRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RiskRef::Vulnerability(id) => write!(f, "vulnerability:{id}"),
            RiskRef::Incident(id) => write!(f, "incident:{id}"),
        }
    }
}

/// A routed, machine-readable warning.
///
/// Each recipient's relevance is justified either by owning the at-risk
/// subject or by the dependency path leading from one of its resources to
/// the at-risk resource.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Warning {
    pub id: String,
    pub risk_ref: RiskRef,
    pub at_risk: SubjectRef,
    pub recipients: BTreeSet<OrgId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub severity: Option<SecurityScore>,
    /// Utilization chain from the recipient's entry resource down to the
    /// at-risk resource. Empty only for data-only risks warned to the data
    /// owner directly.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub dependency_path: Vec<ResourceId>,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

impl Warning {
    pub fn validate(&self) -> Result<(), RecordInvariant> {
        require_non_empty("warning", "id", &self.id)?;
        if self.recipients.is_empty() {
            return Err(invariant("warning", "recipients", "must be non-empty"));
        }
        if let (SubjectRef::Resource(_), true) = (&self.at_risk, self.dependency_path.is_empty()) {
            return Err(invariant(
                "warning",
                "dependency_path",
                "resource warnings carry the justification path",
            ));
        }
        if let SubjectRef::Resource(at_risk) = &self.at_risk {
            if self.dependency_path.last() != Some(at_risk) {
                return Err(invariant(
                    "warning",
                    "dependency_path",
                    "path must end at the at-risk resource",
                ));
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// User Resource Database records
// ---------------------------------------------------------------------------

/// A cloud service the organization subscribes to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CloudSubscription {
    pub org: OrgId,
    /// Cloud-service entry id (`provider/service`).
    pub service: String,
    pub contract: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub usage_records: Vec<String>,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

impl CloudSubscription {
    pub fn validate(&self) -> Result<(), RecordInvariant> {
        require_non_empty("subscription", "org", self.org.as_str())?;
        require_non_empty("subscription", "service", &self.service)
    }
}

/// A data-access right.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccessRight {
    Read,
    Write,
    Execute,
}

/// Rights one subject holds over one data object, stored explicitly and
/// independently from the data so it can be exchanged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccessControlPolicy {
    pub data: DataId,
    pub subject: String,
    pub rights: BTreeSet<AccessRight>,
    /// Physical loci the data may be placed at. `None` leaves placement
    /// unconstrained.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub location_constraint: Option<BTreeSet<String>>,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

impl AccessControlPolicy {
    pub fn validate(&self) -> Result<(), RecordInvariant> {
        require_non_empty("policy", "data", self.data.as_str())?;
        require_non_empty("policy", "subject", &self.subject)?;
        if let Some(loci) = &self.location_constraint {
            if loci.is_empty() {
                return Err(invariant(
                    "policy",
                    "location_constraint",
                    "constraint present but allows no locus",
                ));
            }
        }
        Ok(())
    }

    /// Storage key: at most one policy tuple per (data, subject).
    pub fn key(&self) -> String {
        format!("{}/{}", self.data, self.subject)
    }
}

// ---------------------------------------------------------------------------
// Provider Resource Database records
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IdentityStatus {
    Valid,
    Invalid,
}

/// One identity held by a user, with provider-side status and reputation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityBinding {
    pub id: String,
    pub status: IdentityStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reputation: Option<f64>,
}

/// A user together with every identity they hold. One user may have many
/// identities; identity ids are globally unique.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityRecord {
    pub user: String,
    pub identities: Vec<IdentityBinding>,
    /// Identity-service registrations.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub registrations: Vec<String>,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

impl IdentityRecord {
    pub fn validate(&self) -> Result<(), RecordInvariant> {
        require_non_empty("identity", "user", &self.user)?;
        if self.identities.is_empty() {
            return Err(invariant("identity", "identities", "must be non-empty"));
        }
        let mut seen = BTreeSet::new();
        for binding in &self.identities {
            require_non_empty("identity", "identities.id", &binding.id)?;
            if !seen.insert(binding.id.as_str()) {
                return Err(invariant(
                    "identity",
                    "identities",
                    format!("duplicate identity id {}", binding.id),
                ));
            }
            if let Some(reputation) = binding.reputation {
                if !reputation.is_finite() {
                    return Err(invariant("identity", "identities.reputation", "must be finite"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderResourceKind {
    Network,
    CloudService,
}

impl ProviderResourceKind {
    /// Spec keys every entry of this kind must carry.
    pub fn required_keys(&self) -> &'static [&'static str] {
        match self {
            ProviderResourceKind::Network => &["topology", "routing"],
            ProviderResourceKind::CloudService => &["provider", "service"],
        }
    }
}

/// An asset outside the organization: external network or external cloud
/// service, with its specification, workload and security policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderResourceEntry {
    pub id: String,
    pub kind: ProviderResourceKind,
    pub spec: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workload: Option<BTreeMap<String, f64>>,
    pub security_policy: String,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

impl ProviderResourceEntry {
    pub fn validate(&self) -> Result<(), RecordInvariant> {
        require_non_empty("provider_resource", "id", &self.id)?;
        for key in self.kind.required_keys() {
            if !self.spec.contains_key(*key) {
                return Err(invariant(
                    "provider_resource",
                    "spec",
                    format!("missing required key {key}"),
                ));
            }
        }
        if let Some(workload) = &self.workload {
            if workload.values().any(|v| !v.is_finite()) {
                return Err(invariant("provider_resource", "workload", "values must be finite"));
            }
        }
        Ok(())
    }
}

/// Third-party certification of a security level. Reviewed and renewed
/// periodically; expired certificates are flagged stale, not removed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificate {
    pub issuer: String,
    pub scope: String,
    pub issued_at: String,
    pub expires_at: String,
}

impl Certificate {
    /// Expired relative to `now` (same lexicographic timestamp convention).
    pub fn is_stale(&self, now: &str) -> bool {
        self.expires_at.as_str() <= now
    }
}

/// One evaluated metric, attributed to the local or cloud section of a
/// report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricValue {
    pub metric: String,
    pub value: f64,
    pub section: crate::graph::Locus,
}

/// A security-level report: certificate and/or third-party evaluation
/// results for an organization or a service.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecurityLevelReport {
    pub id: String,
    /// Organization or service the report covers.
    pub subject: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<Certificate>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub evaluation: Vec<MetricValue>,
    pub issuer: String,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

impl SecurityLevelReport {
    pub fn validate(&self) -> Result<(), RecordInvariant> {
        require_non_empty("seclevel", "id", &self.id)?;
        require_non_empty("seclevel", "subject", &self.subject)?;
        if let Some(cert) = &self.certificate {
            if cert.expires_at <= cert.issued_at {
                return Err(invariant(
                    "seclevel",
                    "certificate",
                    "expires_at must be after issued_at",
                ));
            }
        }
        if self.evaluation.iter().any(|m| !m.value.is_finite()) {
            return Err(invariant("seclevel", "evaluation", "values must be finite"));
        }
        Ok(())
    }

    /// Evaluation entries split into local / cloud sections.
    pub fn sections(&self) -> BTreeMap<crate::graph::Locus, Vec<&MetricValue>> {
        let mut out: BTreeMap<crate::graph::Locus, Vec<&MetricValue>> = BTreeMap::new();
        for entry in &self.evaluation {
            out.entry(entry.section).or_default().push(entry);
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Cyber Risk Knowledge Base entries
// ---------------------------------------------------------------------------

/// Where a vulnerability originates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VulnerabilityKind {
    /// Flaw in programming code.
    Code,
    /// Mis-configuration of one product or a composition of resources.
    Configuration,
    /// Exposed by human IT users.
    Human,
}

/// A known vulnerability, extended with the layers its impact can reach.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VulnerabilityEntry {
    /// Token of the form `VLN-<year>-<integer>`.
    pub id: String,
    pub description: String,
    pub kind: VulnerabilityKind,
    /// Product/service refs, or resource ids, known to expose it.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub affected: Vec<String>,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub impact_layers: BTreeSet<Layer>,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

/// `VLN-<year>-<integer>`, year exactly four digits.
pub fn valid_vulnerability_id(id: &str) -> bool {
    let mut parts = id.splitn(3, '-');
    let (Some(tag), Some(year), Some(number)) = (parts.next(), parts.next(), parts.next()) else {
        return false;
    };
    tag == "VLN"
        && year.len() == 4
        && year.bytes().all(|b| b.is_ascii_digit())
        && !number.is_empty()
        && number.bytes().all(|b| b.is_ascii_digit())
}

impl VulnerabilityEntry {
    pub fn validate(&self) -> Result<(), RecordInvariant> {
        if !valid_vulnerability_id(&self.id) {
            return Err(invariant(
                "vulnerability",
                "id",
                format!("{:?} does not match VLN-<year>-<integer>", self.id),
            ));
        }
        require_non_empty("vulnerability", "description", &self.description)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MisuseIntent {
    Benign,
    Malicious,
}

/// Attack knowledge or mis-use knowledge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ThreatKnowledge {
    Attack {
        pattern: String,
        tool: String,
        trend: String,
    },
    Misuse {
        intent: MisuseIntent,
        description: String,
    },
}

/// A known threat.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThreatEntry {
    pub id: String,
    #[serde(flatten)]
    pub knowledge: ThreatKnowledge,
}

impl ThreatEntry {
    pub fn validate(&self) -> Result<(), RecordInvariant> {
        require_non_empty("threat", "id", &self.id)?;
        match &self.knowledge {
            ThreatKnowledge::Attack { pattern, .. } => {
                require_non_empty("threat", "pattern", pattern)
            }
            ThreatKnowledge::Misuse { description, .. } => {
                require_non_empty("threat", "description", description)
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Countermeasure Knowledge Base entries
// ---------------------------------------------------------------------------

/// Rule text or a configuration checklist.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleBody {
    Text(String),
    Checklist(Vec<String>),
}

impl RuleBody {
    pub fn is_empty(&self) -> bool {
        match self {
            RuleBody::Text(text) => text.is_empty(),
            RuleBody::Checklist(items) => items.is_empty() || items.iter().all(|i| i.is_empty()),
        }
    }
}

/// A rule or criterion for security-level assessment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssessmentRule {
    pub id: String,
    pub body: RuleBody,
    /// Product/service refs (or resource ids) the rule applies to.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub applicability: Vec<String>,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

impl AssessmentRule {
    pub fn validate(&self) -> Result<(), RecordInvariant> {
        require_non_empty("assessment_rule", "id", &self.id)?;
        if self.body.is_empty() {
            return Err(invariant("assessment_rule", "body", "must be non-empty"));
        }
        Ok(())
    }
}

/// A detection or protection rule following known signatures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionRule {
    pub id: String,
    pub body: RuleBody,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub applicability: Vec<String>,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

impl DetectionRule {
    pub fn validate(&self) -> Result<(), RecordInvariant> {
        require_non_empty("detection_rule", "id", &self.id)?;
        if self.body.is_empty() {
            return Err(invariant("detection_rule", "body", "must be non-empty"));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Product & Service Knowledge Base entries
// ---------------------------------------------------------------------------

/// Naming and enumeration of one product version, with its patches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductVersionEntry {
    pub product: String,
    pub version: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub patches: Vec<String>,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

impl ProductVersionEntry {
    pub fn validate(&self) -> Result<(), RecordInvariant> {
        require_non_empty("version", "product", &self.product)?;
        require_non_empty("version", "version", &self.version)
    }

    pub fn key(&self) -> String {
        format!("{}@{}", self.product, self.version)
    }
}

/// A known configuration. Cloud services are built from several resources,
/// so one configuration may target a composition of targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigurationEntry {
    pub config_id: String,
    /// One target, or the composition of several.
    pub targets: Vec<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub settings: BTreeMap<String, String>,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

impl ConfigurationEntry {
    pub fn validate(&self) -> Result<(), RecordInvariant> {
        require_non_empty("configuration", "config_id", &self.config_id)?;
        if self.targets.is_empty() {
            return Err(invariant("configuration", "targets", "must name at least one target"));
        }
        Ok(())
    }
}

/// Enumeration entry for one cloud service, placed in the service taxonomy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CloudServiceEntry {
    pub provider: String,
    pub service: String,
    /// Ordered category list, most general first.
    pub taxonomy_path: Vec<String>,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

impl CloudServiceEntry {
    pub fn validate(&self) -> Result<(), RecordInvariant> {
        require_non_empty("cloud_service", "provider", &self.provider)?;
        require_non_empty("cloud_service", "service", &self.service)?;
        if self.taxonomy_path.is_empty() {
            return Err(invariant("cloud_service", "taxonomy_path", "must be non-empty"));
        }
        Ok(())
    }

    /// `provider/service`, unique within the knowledge base.
    pub fn key(&self) -> String {
        format!("{}/{}", self.provider, self.service)
    }
}
