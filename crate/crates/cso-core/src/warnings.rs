//! Turns risks into routed warnings. Direct users of an at-risk resource
//! and indirect users further up the dependency chain each receive one
//! warning carrying the utilization path that makes the risk theirs.

use std::collections::{BTreeMap, BTreeSet};

use serde_json::Map;
use thiserror::Error;

use crate::graph::{DependencyGraph, ResourceId};
use crate::records::{
    Assessment, CloudSubscription, DataId, IncidentRecord, OrgId, RiskRef, SubjectRef,
    VulnerabilityEntry, Warning,
};
use crate::scoring::SecurityScore;

/// A risk worth warning about.
#[derive(Debug, Clone, Copy)]
pub enum RiskSource<'a> {
    Vulnerability(&'a VulnerabilityEntry),
    Incident(&'a IncidentRecord),
}

impl RiskSource<'_> {
    fn risk_ref(&self) -> RiskRef {
        match self {
            RiskSource::Vulnerability(v) => RiskRef::Vulnerability(v.id.clone()),
            RiskSource::Incident(i) => RiskRef::Incident(i.id.clone()),
        }
    }
}

/// Everything routing needs to see: the graph, who subscribes to what, and
/// who owns bare data objects (taken from each chain's create event).
#[derive(Debug, Clone, Copy)]
pub struct WarningContext<'a> {
    pub graph: &'a DependencyGraph,
    pub subscriptions: &'a [CloudSubscription],
    pub data_owners: &'a BTreeMap<DataId, OrgId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WarningError {
    #[error("no referenced resource resolves for risk {0}")]
    UnresolvedTarget(String),
}

/// Resources the vulnerability names, resolved against the graph either by
/// resource id or by provider reference.
fn resolve_affected(
    entry: &VulnerabilityEntry,
    graph: &DependencyGraph,
) -> BTreeSet<ResourceId> {
    let mut targets = BTreeSet::new();
    for token in &entry.affected {
        let id = ResourceId(token.clone());
        if graph.contains(&id) {
            targets.insert(id);
            continue;
        }
        for resource in graph.resources() {
            if resource.provider.as_deref() == Some(token.as_str()) {
                targets.insert(resource.id.clone());
            }
        }
    }
    targets
}

/// The org's entry points into a closure: resources it owns plus resources
/// provided by services it subscribes to.
fn entry_resources(
    org: &OrgId,
    closure: &BTreeSet<ResourceId>,
    ctx: &WarningContext<'_>,
) -> BTreeSet<ResourceId> {
    let subscribed: BTreeSet<&str> = ctx
        .subscriptions
        .iter()
        .filter(|s| &s.org == org)
        .map(|s| s.service.as_str())
        .collect();
    closure
        .iter()
        .filter(|id| {
            ctx.graph.get(id).is_some_and(|r| {
                &r.owner_org == org
                    || r.provider.as_deref().is_some_and(|p| subscribed.contains(p))
            })
        })
        .cloned()
        .collect()
}

/// Routes one risk to every affected organization: one warning per org,
/// each justified by a dependency path from the org's entry resource down
/// to the at-risk resource.
pub fn issue_warnings(
    risk: RiskSource<'_>,
    ctx: &WarningContext<'_>,
    severity: Option<SecurityScore>,
) -> Result<Vec<Warning>, WarningError> {
    let risk_ref = risk.risk_ref();
    let risk_id = risk_ref.id().to_string();

    let targets: Vec<ResourceId> = match risk {
        RiskSource::Incident(incident) => {
            if incident.assessment == Assessment::FalseIncident {
                return Ok(vec![]);
            }
            match &incident.subject {
                SubjectRef::Resource(id) if ctx.graph.contains(id) => vec![id.clone()],
                SubjectRef::Resource(_) => {
                    return Err(WarningError::UnresolvedTarget(risk_id));
                }
                SubjectRef::Data(data) => {
                    // A data incident is warned independently of any asset:
                    // straight to the data owner, no path to justify.
                    let owner = ctx
                        .data_owners
                        .get(data)
                        .ok_or(WarningError::UnresolvedTarget(risk_id.clone()))?;
                    return Ok(vec![Warning {
                        id: format!("wrn-{risk_id}-{owner}"),
                        risk_ref,
                        at_risk: SubjectRef::Data(data.clone()),
                        recipients: BTreeSet::from([owner.clone()]),
                        severity,
                        dependency_path: vec![],
                        extra: Map::new(),
                    }]);
                }
            }
        }
        RiskSource::Vulnerability(entry) => {
            resolve_affected(entry, ctx.graph).into_iter().collect()
        }
    };
    if targets.is_empty() {
        return Err(WarningError::UnresolvedTarget(risk_id));
    }

    // org -> (entry, target); first target in sorted order wins so reissues
    // are reproducible.
    let mut routed: BTreeMap<OrgId, (ResourceId, ResourceId)> = BTreeMap::new();
    for target in &targets {
        let closure = ctx.graph.dependents_closure(target).expect("target resolved");
        let orgs = ctx
            .graph
            .affected_orgs(target, ctx.subscriptions)
            .expect("target resolved");
        for org in orgs {
            if routed.contains_key(&org) {
                continue;
            }
            let entries = entry_resources(&org, &closure, ctx);
            let entry = entries.into_iter().next().expect("affected org has an entry");
            routed.insert(org, (entry, target.clone()));
        }
    }

    let warnings = routed
        .into_iter()
        .map(|(org, (entry, target))| {
            let path = ctx
                .graph
                .dependency_path(&entry, &target)
                .expect("endpoints resolved")
                .expect("entry reaches target");
            Warning {
                id: format!("wrn-{risk_id}-{org}"),
                risk_ref: risk_ref.clone(),
                at_risk: SubjectRef::Resource(target),
                recipients: BTreeSet::from([org]),
                severity,
                dependency_path: path,
                extra: Map::new(),
            }
        })
        .collect();
    Ok(warnings)
}

/// Whether the warning pertains to the organization, decidable from the
/// warning document alone.
pub fn relevance(warning: &Warning, org: &OrgId) -> bool {
    warning.recipients.contains(org)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{DependencyEdge, LayerStack, Locus, Resource};
    use crate::records::VulnerabilityKind;

    fn resource(id: &str, layer: &str, org: &str, provider: Option<&str>) -> Resource {
        Resource {
            id: id.into(),
            name: id.to_string(),
            layer: layer.into(),
            owner_org: org.into(),
            locus: if provider.is_some() { Locus::Cloud } else { Locus::Local },
            provider: provider.map(str::to_string),
        }
    }

    /// D(orgA, Data) -> S(orgB, Service, provided by big/db) -> P(orgC, Platform)
    fn chain_graph() -> DependencyGraph {
        let mut graph = DependencyGraph::new(LayerStack::default());
        graph.add_resource(resource("d1", "Data", "orgA", None)).unwrap();
        graph.add_resource(resource("s1", "Service", "orgB", Some("big/db"))).unwrap();
        graph.add_resource(resource("p1", "Platform", "orgC", None)).unwrap();
        graph
            .add_dependency(DependencyEdge { dependent: "d1".into(), dependee: "s1".into() })
            .unwrap();
        graph
            .add_dependency(DependencyEdge { dependent: "s1".into(), dependee: "p1".into() })
            .unwrap();
        graph
    }

    fn vulnerability(affected: &[&str]) -> VulnerabilityEntry {
        VulnerabilityEntry {
            id: "VLN-2026-0001".into(),
            description: "platform flaw".into(),
            kind: VulnerabilityKind::Code,
            affected: affected.iter().map(|s| s.to_string()).collect(),
            impact_layers: BTreeSet::new(),
            extra: Map::new(),
        }
    }

    fn subscription(org: &str, service: &str) -> CloudSubscription {
        CloudSubscription {
            org: org.into(),
            service: service.into(),
            contract: "standard".into(),
            usage_records: vec![],
            extra: Map::new(),
        }
    }

    #[test]
    fn indirect_users_are_warned_with_paths() {
        let graph = chain_graph();
        let owners = BTreeMap::new();
        let ctx = WarningContext { graph: &graph, subscriptions: &[], data_owners: &owners };
        let vuln = vulnerability(&["p1"]);
        let warnings = issue_warnings(RiskSource::Vulnerability(&vuln), &ctx, None).unwrap();
        assert_eq!(warnings.len(), 3);
        let by_org: BTreeMap<&str, &Warning> = warnings
            .iter()
            .map(|w| (w.recipients.iter().next().unwrap().as_str(), w))
            .collect();
        let path = |org: &str| -> Vec<&str> {
            by_org[org].dependency_path.iter().map(|r| r.as_str()).collect()
        };
        assert_eq!(path("orgA"), vec!["d1", "s1", "p1"]);
        assert_eq!(path("orgB"), vec!["s1", "p1"]);
        assert_eq!(path("orgC"), vec!["p1"]);
        for w in &warnings {
            w.validate().unwrap();
        }
    }

    #[test]
    fn subscription_only_orgs_are_included() {
        let graph = chain_graph();
        let subs = vec![subscription("orgExt", "big/db")];
        let owners = BTreeMap::new();
        let ctx = WarningContext { graph: &graph, subscriptions: &subs, data_owners: &owners };
        let vuln = vulnerability(&["p1"]);
        let warnings = issue_warnings(RiskSource::Vulnerability(&vuln), &ctx, None).unwrap();
        let ext = warnings
            .iter()
            .find(|w| w.recipients.contains(&"orgExt".into()))
            .expect("subscriber warned");
        let path: Vec<&str> = ext.dependency_path.iter().map(|r| r.as_str()).collect();
        assert_eq!(path, vec!["s1", "p1"]);
    }

    #[test]
    fn one_warning_per_org_even_with_multiple_entries() {
        let mut graph = chain_graph();
        graph.add_resource(resource("d2", "Data", "orgA", None)).unwrap();
        graph
            .add_dependency(DependencyEdge { dependent: "d2".into(), dependee: "s1".into() })
            .unwrap();
        let owners = BTreeMap::new();
        let ctx = WarningContext { graph: &graph, subscriptions: &[], data_owners: &owners };
        let vuln = vulnerability(&["p1"]);
        let warnings = issue_warnings(RiskSource::Vulnerability(&vuln), &ctx, None).unwrap();
        let to_org_a: Vec<_> = warnings
            .iter()
            .filter(|w| w.recipients.contains(&"orgA".into()))
            .collect();
        assert_eq!(to_org_a.len(), 1);
        // Deterministic entry choice: the smallest owned resource id.
        assert_eq!(to_org_a[0].dependency_path.first().unwrap().as_str(), "d1");
    }

    #[test]
    fn provider_tokens_resolve_to_their_resources() {
        let graph = chain_graph();
        let owners = BTreeMap::new();
        let ctx = WarningContext { graph: &graph, subscriptions: &[], data_owners: &owners };
        let vuln = vulnerability(&["big/db"]);
        let warnings = issue_warnings(RiskSource::Vulnerability(&vuln), &ctx, None).unwrap();
        assert!(warnings.iter().all(|w| w.at_risk == SubjectRef::Resource("s1".into())));
        // Only the orgs above s1 are affected; p1's owner is below it.
        let orgs: BTreeSet<&str> = warnings
            .iter()
            .flat_map(|w| w.recipients.iter().map(|o| o.as_str()))
            .collect();
        assert_eq!(orgs, BTreeSet::from(["orgA", "orgB"]));
    }

    #[test]
    fn false_incidents_route_nowhere() {
        let graph = chain_graph();
        let owners = BTreeMap::new();
        let ctx = WarningContext { graph: &graph, subscriptions: &[], data_owners: &owners };
        let incident = IncidentRecord {
            id: "inc-1".into(),
            event_ids: vec![],
            state: "excessive access".into(),
            expected_consequence: "denial of service".into(),
            assessment: Assessment::FalseIncident,
            subject: SubjectRef::Resource("p1".into()),
            extra: Map::new(),
        };
        assert_eq!(issue_warnings(RiskSource::Incident(&incident), &ctx, None).unwrap(), vec![]);
    }

    #[test]
    fn data_incidents_warn_the_data_owner_directly() {
        let graph = chain_graph();
        let owners = BTreeMap::from([(DataId::from("doc-7"), OrgId::from("orgA"))]);
        let ctx = WarningContext { graph: &graph, subscriptions: &[], data_owners: &owners };
        let incident = IncidentRecord {
            id: "inc-2".into(),
            event_ids: vec![],
            state: "unauthorized write".into(),
            expected_consequence: "data corruption".into(),
            assessment: Assessment::Confirmed,
            subject: SubjectRef::Data("doc-7".into()),
            extra: Map::new(),
        };
        let warnings = issue_warnings(RiskSource::Incident(&incident), &ctx, None).unwrap();
        assert_eq!(warnings.len(), 1);
        assert_eq!(warnings[0].recipients, BTreeSet::from(["orgA".into()]));
        assert!(warnings[0].dependency_path.is_empty());
        warnings[0].validate().unwrap();
    }

    #[test]
    fn unresolved_targets_error() {
        let graph = chain_graph();
        let owners = BTreeMap::new();
        let ctx = WarningContext { graph: &graph, subscriptions: &[], data_owners: &owners };
        let vuln = vulnerability(&["no-such-resource"]);
        assert_eq!(
            issue_warnings(RiskSource::Vulnerability(&vuln), &ctx, None).unwrap_err(),
            WarningError::UnresolvedTarget("VLN-2026-0001".into())
        );
    }

    #[test]
    fn relevance_survives_a_round_trip() {
        let graph = chain_graph();
        let owners = BTreeMap::new();
        let ctx = WarningContext { graph: &graph, subscriptions: &[], data_owners: &owners };
        let vuln = vulnerability(&["p1"]);
        let warnings = issue_warnings(RiskSource::Vulnerability(&vuln), &ctx, None).unwrap();
        for warning in &warnings {
            let envelope = crate::exchange::encode(
                &crate::exchange::TypedRecord::Warning(warning.clone()),
                crate::ontology::EntityKind::Coordinator,
                "2026-03-01T10:00:00Z",
            );
            let bytes = crate::exchange::serialize_record(&envelope);
            let reparsed = crate::exchange::parse_record(&bytes).unwrap();
            let crate::exchange::TypedRecord::Warning(back) =
                crate::exchange::decode(&reparsed).unwrap()
            else {
                panic!("warning expected");
            };
            for org in ["orgA", "orgB", "orgC", "orgExt"] {
                assert_eq!(relevance(&back, &org.into()), relevance(warning, &org.into()));
            }
        }
    }
}
