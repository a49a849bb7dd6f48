//! The ontology itself: operation domains, entities, stores and the
//! standards applicable to each store, encoded as queryable data.
//!
//! The schema is a fixed set of relations. `domain_of`, `standards_for` and
//! `manipulators_of` are total over [`StoreKind`]; record routing via
//! [`OntologySchema::classify`] sends every record kind to the single store
//! that owns it.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exchange::RecordKind;

/// One of the three spheres of cybersecurity work.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperationDomain {
    ItAssetManagement,
    IncidentHandling,
    KnowledgeAccumulation,
}

impl OperationDomain {
    pub const ALL: [OperationDomain; 3] = [
        OperationDomain::ItAssetManagement,
        OperationDomain::IncidentHandling,
        OperationDomain::KnowledgeAccumulation,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            OperationDomain::ItAssetManagement => "it_asset_management",
            OperationDomain::IncidentHandling => "incident_handling",
            OperationDomain::KnowledgeAccumulation => "knowledge_accumulation",
        }
    }
}

impl fmt::Display for OperationDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A functional role that produces or manipulates cybersecurity information.
///
/// Roles are metadata on records (who asserted or manipulated them), not an
/// access-control mechanism.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntityKind {
    Administrator,
    ItInfrastructureProvider,
    ResponseTeam,
    Coordinator,
    Researcher,
    ProductServiceProvider,
    Registrar,
}

impl EntityKind {
    pub const ALL: [EntityKind; 7] = [
        EntityKind::Administrator,
        EntityKind::ItInfrastructureProvider,
        EntityKind::ResponseTeam,
        EntityKind::Coordinator,
        EntityKind::Researcher,
        EntityKind::ProductServiceProvider,
        EntityKind::Registrar,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            EntityKind::Administrator => "administrator",
            EntityKind::ItInfrastructureProvider => "it_infrastructure_provider",
            EntityKind::ResponseTeam => "response_team",
            EntityKind::Coordinator => "coordinator",
            EntityKind::Researcher => "researcher",
            EntityKind::ProductServiceProvider => "product_service_provider",
            EntityKind::Registrar => "registrar",
        }
    }

    /// The domain the entity operates in.
    pub fn domain(&self) -> OperationDomain {
        match self {
            EntityKind::Administrator | EntityKind::ItInfrastructureProvider => {
                OperationDomain::ItAssetManagement
            }
            EntityKind::ResponseTeam | EntityKind::Coordinator => {
                OperationDomain::IncidentHandling
            }
            EntityKind::Researcher
            | EntityKind::ProductServiceProvider
            | EntityKind::Registrar => OperationDomain::KnowledgeAccumulation,
        }
    }
}

impl fmt::Display for EntityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Grouping of the sub-knowledge-bases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StoreGroup {
    CyberRiskKb,
    CountermeasureKb,
    ProductServiceKb,
}

impl StoreGroup {
    pub fn as_str(&self) -> &'static str {
        match self {
            StoreGroup::CyberRiskKb => "cyber_risk_kb",
            StoreGroup::CountermeasureKb => "countermeasure_kb",
            StoreGroup::ProductServiceKb => "product_service_kb",
        }
    }
}

impl fmt::Display for StoreGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The four databases and six (sub-)knowledge bases.
///
/// Sub-knowledge-bases are first-class values here; routing always targets
/// the leaf store, never the parent grouping.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StoreKind {
    IncidentDb,
    WarningDb,
    UserResourceDb,
    ProviderResourceDb,
    VulnerabilityKb,
    ThreatKb,
    AssessmentKb,
    DetectionProtectionKb,
    VersionKb,
    ConfigurationKb,
}

impl StoreKind {
    pub const ALL: [StoreKind; 10] = [
        StoreKind::IncidentDb,
        StoreKind::WarningDb,
        StoreKind::UserResourceDb,
        StoreKind::ProviderResourceDb,
        StoreKind::VulnerabilityKb,
        StoreKind::ThreatKb,
        StoreKind::AssessmentKb,
        StoreKind::DetectionProtectionKb,
        StoreKind::VersionKb,
        StoreKind::ConfigurationKb,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            StoreKind::IncidentDb => "incident_db",
            StoreKind::WarningDb => "warning_db",
            StoreKind::UserResourceDb => "user_resource_db",
            StoreKind::ProviderResourceDb => "provider_resource_db",
            StoreKind::VulnerabilityKb => "vulnerability_kb",
            StoreKind::ThreatKb => "threat_kb",
            StoreKind::AssessmentKb => "assessment_kb",
            StoreKind::DetectionProtectionKb => "detection_protection_kb",
            StoreKind::VersionKb => "version_kb",
            StoreKind::ConfigurationKb => "configuration_kb",
        }
    }

    pub fn parse(token: &str) -> Option<StoreKind> {
        StoreKind::ALL.iter().copied().find(|k| k.as_str() == token)
    }

    /// Parent grouping for the sub-knowledge-bases, `None` for the databases.
    pub fn parent(&self) -> Option<StoreGroup> {
        match self {
            StoreKind::VulnerabilityKb | StoreKind::ThreatKb => Some(StoreGroup::CyberRiskKb),
            StoreKind::AssessmentKb | StoreKind::DetectionProtectionKb => {
                Some(StoreGroup::CountermeasureKb)
            }
            StoreKind::VersionKb | StoreKind::ConfigurationKb => {
                Some(StoreGroup::ProductServiceKb)
            }
            _ => None,
        }
    }
}

impl fmt::Display for StoreKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Closed set of the major cybersecurity information standards.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum StandardId {
    Arf,
    Crf,
    Cvss,
    Cwss,
    Cee,
    Iodef,
    Cve,
    Cwe,
    Capec,
    Maec,
    Oval,
    Xccdf,
    Cpe,
    Cce,
}

impl StandardId {
    pub const ALL: [StandardId; 14] = [
        StandardId::Arf,
        StandardId::Crf,
        StandardId::Cvss,
        StandardId::Cwss,
        StandardId::Cee,
        StandardId::Iodef,
        StandardId::Cve,
        StandardId::Cwe,
        StandardId::Capec,
        StandardId::Maec,
        StandardId::Oval,
        StandardId::Xccdf,
        StandardId::Cpe,
        StandardId::Cce,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            StandardId::Arf => "ARF",
            StandardId::Crf => "CRF",
            StandardId::Cvss => "CVSS",
            StandardId::Cwss => "CWSS",
            StandardId::Cee => "CEE",
            StandardId::Iodef => "IODEF",
            StandardId::Cve => "CVE",
            StandardId::Cwe => "CWE",
            StandardId::Capec => "CAPEC",
            StandardId::Maec => "MAEC",
            StandardId::Oval => "OVAL",
            StandardId::Xccdf => "XCCDF",
            StandardId::Cpe => "CPE",
            StandardId::Cce => "CCE",
        }
    }
}

impl fmt::Display for StandardId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Raised when a record kind token is not part of the closed kind set.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown record kind: {0}")]
pub struct UnknownRecordKind(pub String);

/// The schema row for one store.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoreProfile {
    pub store: StoreKind,
    pub group: Option<StoreGroup>,
    pub domain: OperationDomain,
    pub manipulators: Vec<EntityKind>,
    pub standards: Vec<StandardId>,
}

/// The full ontology as queryable data: one profile per store plus the
/// record-kind routing table.
///
/// Immutable after construction; safe for unrestricted concurrent reads.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OntologySchema {
    pub stores: Vec<StoreProfile>,
}

impl Default for OntologySchema {
    fn default() -> Self {
        OntologySchema::new()
    }
}

impl OntologySchema {
    pub fn new() -> Self {
        use EntityKind::*;
        use StandardId::*;
        use StoreKind::*;

        let knowledge = vec![Researcher, ProductServiceProvider, Registrar];
        let stores = vec![
            StoreProfile {
                store: UserResourceDb,
                group: None,
                domain: OperationDomain::ItAssetManagement,
                manipulators: vec![Administrator],
                standards: vec![Arf, Crf, Cvss, Cwss],
            },
            StoreProfile {
                store: ProviderResourceDb,
                group: None,
                domain: OperationDomain::ItAssetManagement,
                manipulators: vec![ItInfrastructureProvider],
                standards: vec![],
            },
            StoreProfile {
                store: IncidentDb,
                group: None,
                domain: OperationDomain::IncidentHandling,
                manipulators: vec![ResponseTeam],
                standards: vec![Cee, Iodef],
            },
            StoreProfile {
                store: WarningDb,
                group: None,
                domain: OperationDomain::IncidentHandling,
                manipulators: vec![ResponseTeam, Coordinator],
                standards: vec![],
            },
            StoreProfile {
                store: VulnerabilityKb,
                group: Some(StoreGroup::CyberRiskKb),
                domain: OperationDomain::KnowledgeAccumulation,
                manipulators: knowledge.clone(),
                standards: vec![Cve, Cwe],
            },
            StoreProfile {
                store: ThreatKb,
                group: Some(StoreGroup::CyberRiskKb),
                domain: OperationDomain::KnowledgeAccumulation,
                manipulators: knowledge.clone(),
                standards: vec![Capec, Maec],
            },
            StoreProfile {
                store: AssessmentKb,
                group: Some(StoreGroup::CountermeasureKb),
                domain: OperationDomain::KnowledgeAccumulation,
                manipulators: knowledge.clone(),
                standards: vec![Cvss, Cwss, Oval, Xccdf],
            },
            StoreProfile {
                store: DetectionProtectionKb,
                group: Some(StoreGroup::CountermeasureKb),
                domain: OperationDomain::KnowledgeAccumulation,
                manipulators: knowledge.clone(),
                standards: vec![],
            },
            StoreProfile {
                store: VersionKb,
                group: Some(StoreGroup::ProductServiceKb),
                domain: OperationDomain::KnowledgeAccumulation,
                manipulators: knowledge.clone(),
                standards: vec![Cpe],
            },
            StoreProfile {
                store: ConfigurationKb,
                group: Some(StoreGroup::ProductServiceKb),
                domain: OperationDomain::KnowledgeAccumulation,
                manipulators: knowledge,
                standards: vec![Cce],
            },
        ];
        OntologySchema { stores }
    }

    fn profile(&self, store: StoreKind) -> &StoreProfile {
        self.stores
            .iter()
            .find(|p| p.store == store)
            .expect("schema is total over StoreKind")
    }

    /// Operation domain owning the store. Total.
    pub fn domain_of(&self, store: StoreKind) -> OperationDomain {
        self.profile(store).domain
    }

    /// Standards applicable to the store's contents, order-stable. May be
    /// empty for stores with no established standard.
    pub fn standards_for(&self, store: StoreKind) -> &[StandardId] {
        &self.profile(store).standards
    }

    /// Entities that manipulate the store. Always non-empty.
    pub fn manipulators_of(&self, store: StoreKind) -> &[EntityKind] {
        &self.profile(store).manipulators
    }

    /// Routes a record kind to the single store that owns it.
    pub fn classify(&self, kind: RecordKind) -> StoreKind {
        classify_kind(kind)
    }

    /// Routes a raw kind token, rejecting tokens outside the closed set.
    pub fn classify_token(&self, token: &str) -> Result<StoreKind, UnknownRecordKind> {
        let kind =
            RecordKind::parse(token).ok_or_else(|| UnknownRecordKind(token.to_string()))?;
        Ok(classify_kind(kind))
    }
}

/// Home store for each record kind.
///
/// Provenance and placement records live in the incident database alongside
/// the incident/event records they support; resource and dependency records
/// are part of the per-organization asset inventory.
pub fn classify_kind(kind: RecordKind) -> StoreKind {
    match kind {
        RecordKind::Event | RecordKind::Incident | RecordKind::Attack | RecordKind::Provenance => {
            StoreKind::IncidentDb
        }
        RecordKind::Warning => StoreKind::WarningDb,
        RecordKind::Subscription
        | RecordKind::Policy
        | RecordKind::Resource
        | RecordKind::Dependency => StoreKind::UserResourceDb,
        RecordKind::Identity | RecordKind::ProviderResource | RecordKind::SecLevel => {
            StoreKind::ProviderResourceDb
        }
        RecordKind::Vulnerability => StoreKind::VulnerabilityKb,
        RecordKind::Threat => StoreKind::ThreatKb,
        RecordKind::AssessmentRule => StoreKind::AssessmentKb,
        RecordKind::DetectionRule => StoreKind::DetectionProtectionKb,
        RecordKind::Version | RecordKind::CloudService => StoreKind::VersionKb,
        RecordKind::Configuration => StoreKind::ConfigurationKb,
    }
}
