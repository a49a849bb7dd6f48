//! One coherent operational state over a directory: the ontology schema,
//! the ten store logs, the dependency graph derived from the resource
//! records, and the provenance ledger derived from the stored chains.
//!
//! All durable writes flow through here so that cross-store invariants
//! (graph acyclicity, chain continuity, ownership rights) hold for every
//! record that reaches a log.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use serde_json::Value;
use thiserror::Error;

use crate::exchange::{
    decode, encode, parse_record, ExchangeError, IngestReport, RecordEnvelope, TypedRecord,
};
use crate::graph::{DependencyGraph, GraphError, Layer, LayerStack};
use crate::ontology::{EntityKind, OntologySchema, StoreKind};
use crate::provenance::{
    check_authorization, violation_incident, AuthDecision, EventDraft, Ledger, Operation,
    ProvenanceError, ProvenanceEvent,
};
use crate::records::{DataId, OrgId, Warning};
use crate::scoring::SecurityScore;
use crate::stores::{MissingRef, Repository, StoreError};
use crate::warnings::{issue_warnings, RiskSource, WarningContext, WarningError};

/// Name of the optional layer-stack override inside the state directory.
pub const LAYERS_FILE: &str = "layers.json";
/// Name of the optional deployment configuration inside the state directory.
pub const CONFIG_FILE: &str = "config.json";

#[derive(Debug, Error)]
pub enum StateError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Exchange(#[from] ExchangeError),
    #[error(transparent)]
    Provenance(#[from] ProvenanceError),
    #[error(transparent)]
    Warning(#[from] WarningError),
    #[error("ownership rights violation ({reason}); incident {incident} recorded")]
    OwnershipViolation { reason: String, incident: String },
    #[error("no vulnerability or incident with id {0}")]
    UnknownRisk(String),
    #[error("bad {file}: {reason}")]
    Config { file: String, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Default, Deserialize)]
struct CsoConfig {
    /// Read manipulations are high-volume; they are only chained when the
    /// deployment opts in.
    #[serde(default)]
    read_logging: bool,
}

/// Where a successfully applied record ended up.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Applied {
    pub store: StoreKind,
    pub id: String,
}

/// The full operational state under one directory.
#[derive(Debug)]
pub struct CsoState {
    dir: PathBuf,
    schema: OntologySchema,
    repo: Repository,
    graph: DependencyGraph,
    ledger: Ledger,
    config: CsoConfig,
}

impl CsoState {
    /// Opens or creates the state directory and replays every log.
    pub fn load(dir: impl Into<PathBuf>) -> Result<Self, StateError> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        let layers = load_layers(&dir)?;
        let config = load_config(&dir)?;
        let repo = Repository::open(&dir)?;

        let mut resources = Vec::new();
        let mut edges = Vec::new();
        for envelope in repo.iter(StoreKind::UserResourceDb) {
            match decode(envelope)? {
                TypedRecord::Resource(resource) => resources.push(resource),
                TypedRecord::Dependency(edge) => edges.push(edge),
                _ => {}
            }
        }
        let graph = DependencyGraph::from_parts(layers, resources, edges)?;

        let mut ledger = Ledger::new();
        for envelope in repo.iter(StoreKind::IncidentDb) {
            if let TypedRecord::Provenance(event) = decode(envelope)? {
                ledger.replay(event);
            }
        }

        Ok(CsoState { dir, schema: OntologySchema::new(), repo, graph, ledger, config })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn schema(&self) -> &OntologySchema {
        &self.schema
    }

    pub fn repo(&self) -> &Repository {
        &self.repo
    }

    pub fn graph(&self) -> &DependencyGraph {
        &self.graph
    }

    pub fn ledger(&self) -> &Ledger {
        &self.ledger
    }

    /// Validates, routes and applies one record, including its side effects
    /// on the graph or the ledger.
    pub fn apply(&mut self, envelope: RecordEnvelope) -> Result<Applied, StateError> {
        let typed = decode(&envelope)?;
        match &typed {
            TypedRecord::Resource(resource) => {
                // Validate against the graph before anything is written.
                if self.graph.contains(&resource.id) {
                    return Err(GraphError::DuplicateResourceId(resource.id.clone()).into());
                }
                let mut probe = DependencyGraph::new(self.graph.layer_stack().clone());
                probe.add_resource(resource.clone())?;
                let (store, id) = self.repo.route(envelope)?;
                self.graph.add_resource(resource.clone()).expect("validated above");
                Ok(Applied { store, id })
            }
            TypedRecord::Dependency(edge) => {
                self.graph.can_add_dependency(edge)?;
                let (store, id) = self.repo.route(envelope)?;
                self.graph.add_dependency(edge.clone()).expect("validated above");
                Ok(Applied { store, id })
            }
            TypedRecord::Provenance(event) => {
                let ts = envelope.ts.clone();
                self.gate_provenance(event, &ts)?;
                let (store, id) = self.repo.route(envelope)?;
                self.ledger.extend(event.clone()).expect("validated above");
                Ok(Applied { store, id })
            }
            _ => {
                let (store, id) = self.repo.route(envelope)?;
                Ok(Applied { store, id })
            }
        }
    }

    /// Chain-position and ownership checks for a pre-digested event;
    /// violations record exactly one incident before refusing.
    fn gate_provenance(&mut self, event: &ProvenanceEvent, ts: &str) -> Result<(), StateError> {
        let draft = EventDraft {
            seq: event.seq,
            data: event.data.clone(),
            actor: event.actor.clone(),
            operation: event.operation,
            payload: event.payload.clone(),
        };
        match self.ledger.check_extend(event) {
            Err(ProvenanceError::AppendAfterDelete) => {
                let incident = self.record_violation(&draft, "append after delete", ts)?;
                return Err(StateError::OwnershipViolation {
                    reason: "append after delete".into(),
                    incident,
                });
            }
            Err(other) => return Err(other.into()),
            Ok(()) => {}
        }
        self.authorize(&draft, ts)
    }

    fn authorize(&mut self, draft: &EventDraft, ts: &str) -> Result<(), StateError> {
        let policies = self.repo.policies_for(&draft.data);
        match check_authorization(draft, &policies) {
            AuthDecision::Allowed => Ok(()),
            AuthDecision::Violation { reason } => {
                let incident = self.record_violation(draft, &reason, ts)?;
                Err(StateError::OwnershipViolation { reason, incident })
            }
        }
    }

    fn record_violation(
        &mut self,
        draft: &EventDraft,
        reason: &str,
        ts: &str,
    ) -> Result<String, StateError> {
        let mut incident = violation_incident(draft, reason);
        let base = incident.id.clone();
        let mut n = 0;
        while self.repo.contains(StoreKind::IncidentDb, &incident.id) {
            n += 1;
            incident.id = format!("{base}-{n}");
        }
        let envelope = encode(&TypedRecord::Incident(incident), EntityKind::ResponseTeam, ts);
        let (_, id) = self.repo.route(envelope)?;
        Ok(id)
    }

    /// Drafts, authorizes, chains and stores one manipulation event. With
    /// read-logging disabled (the default), read operations are authorized
    /// but not chained, and `None` is returned.
    pub fn append_provenance(
        &mut self,
        data: DataId,
        actor: String,
        operation: Operation,
        payload: Value,
        entity: EntityKind,
        ts: &str,
    ) -> Result<Option<ProvenanceEvent>, StateError> {
        let draft = EventDraft {
            seq: self.ledger.next_seq(&data),
            data,
            actor,
            operation,
            payload,
        };
        match self.ledger.check_append(&draft) {
            Err(ProvenanceError::AppendAfterDelete) => {
                let incident = self.record_violation(&draft, "append after delete", ts)?;
                return Err(StateError::OwnershipViolation {
                    reason: "append after delete".into(),
                    incident,
                });
            }
            Err(other) => return Err(other.into()),
            Ok(()) => {}
        }
        self.authorize(&draft, ts)?;
        if draft.operation == Operation::Read && !self.config.read_logging {
            return Ok(None);
        }
        if draft.operation == Operation::PolicyChange {
            self.apply_policy_payload(&draft, entity, ts)?;
        }
        let event = self.ledger.append(draft)?.clone();
        let envelope = encode(&TypedRecord::Provenance(event.clone()), entity, ts);
        self.repo.route(envelope)?;
        Ok(Some(event))
    }

    /// A policy_change event both appears in history and updates the
    /// effective policy; the payload carries the new policy under `policy`.
    fn apply_policy_payload(
        &mut self,
        draft: &EventDraft,
        entity: EntityKind,
        ts: &str,
    ) -> Result<(), StateError> {
        let Some(policy_value) = draft.payload.get("policy") else {
            return Ok(());
        };
        let policy: crate::records::AccessControlPolicy =
            serde_json::from_value(policy_value.clone()).map_err(|e| {
                ProvenanceError::InvalidPayload(format!("policy payload: {e}"))
            })?;
        if policy.data != draft.data {
            return Err(ProvenanceError::InvalidPayload(
                "policy payload names a different data id".into(),
            )
            .into());
        }
        let envelope = encode(&TypedRecord::Policy(policy), entity, ts);
        self.repo.route(envelope)?;
        Ok(())
    }

    /// Imports a record file: valid lines are routed and applied, invalid
    /// lines are reported, never fatal.
    pub fn ingest_file(&mut self, path: &Path) -> Result<IngestReport, std::io::Error> {
        let text = fs::read_to_string(path)?;
        let mut report = IngestReport::default();
        for (line_no, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let outcome = parse_record(line.as_bytes())
                .map_err(StateError::from)
                .and_then(|envelope| self.apply(envelope));
            match outcome {
                Ok(applied) => report.note_ok(applied.store),
                Err(err) => report.note_err(line_no + 1, err.to_string()),
            }
        }
        Ok(report)
    }

    /// Owner of each bare data object: the actor of its create event.
    pub fn data_owners(&self) -> BTreeMap<DataId, OrgId> {
        self.ledger
            .data_ids()
            .filter_map(|data| {
                let first = self.ledger.history(data).ok()?.first()?;
                (first.operation == Operation::Create)
                    .then(|| (data.clone(), OrgId(first.actor.clone())))
            })
            .collect()
    }

    /// Routes warnings for the named risk (a vulnerability or incident id)
    /// and stores them, replacing any stale warning per (risk, recipient).
    pub fn warn(
        &mut self,
        risk_id: &str,
        severity: Option<SecurityScore>,
        ts: &str,
    ) -> Result<Vec<Warning>, StateError> {
        let subscriptions = self.repo.subscriptions();
        let data_owners = self.data_owners();
        let ctx = WarningContext {
            graph: &self.graph,
            subscriptions: &subscriptions,
            data_owners: &data_owners,
        };
        let vulnerabilities = self.repo.vulnerabilities();
        let incidents;
        let risk = if let Some(vuln) = vulnerabilities.iter().find(|v| v.id == risk_id) {
            RiskSource::Vulnerability(vuln)
        } else {
            incidents = self.repo.incidents();
            match incidents.iter().find(|i| i.id == risk_id) {
                Some(incident) => RiskSource::Incident(incident),
                None => return Err(StateError::UnknownRisk(risk_id.to_string())),
            }
        };
        let warnings = issue_warnings(risk, &ctx, severity)?;
        for warning in &warnings {
            let envelope = encode(
                &TypedRecord::Warning(warning.clone()),
                EntityKind::Coordinator,
                ts,
            );
            self.repo.route(envelope)?;
        }
        Ok(warnings)
    }

    /// Every dangling cross-store reference.
    pub fn verify_refs(&self) -> Vec<MissingRef> {
        self.repo.verify_refs(&self.graph, &self.ledger)
    }

    /// Recomputes every chain; `Err((data, seq))` locates the first tamper.
    pub fn verify_provenance(&self) -> Result<(), (DataId, u64)> {
        self.ledger.verify_all()
    }
}

fn load_layers(dir: &Path) -> Result<LayerStack, StateError> {
    let path = dir.join(LAYERS_FILE);
    if !path.exists() {
        return Ok(LayerStack::default());
    }
    let text = fs::read_to_string(&path)?;
    let names: Vec<String> = serde_json::from_str(&text).map_err(|e| StateError::Config {
        file: LAYERS_FILE.into(),
        reason: e.to_string(),
    })?;
    LayerStack::new(names.into_iter().map(Layer).collect()).map_err(|e| StateError::Config {
        file: LAYERS_FILE.into(),
        reason: e.to_string(),
    })
}

fn load_config(dir: &Path) -> Result<CsoConfig, StateError> {
    let path = dir.join(CONFIG_FILE);
    if !path.exists() {
        return Ok(CsoConfig::default());
    }
    let text = fs::read_to_string(&path)?;
    serde_json::from_str(&text).map_err(|e| StateError::Config {
        file: CONFIG_FILE.into(),
        reason: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{DependencyEdge, Locus, Resource};
    use crate::provenance::create_payload;
    use crate::records::{AccessControlPolicy, AccessRight};
    use serde_json::{json, Map};
    use std::collections::BTreeSet;
    use tempfile::tempdir;

    fn resource_envelope(id: &str, layer: &str, org: &str) -> RecordEnvelope {
        encode(
            &TypedRecord::Resource(Resource {
                id: id.into(),
                name: id.to_string(),
                layer: layer.into(),
                owner_org: org.into(),
                locus: Locus::Local,
                provider: None,
            }),
            EntityKind::Administrator,
            "2026-01-01T00:00:00Z",
        )
    }

    fn dependency_envelope(dependent: &str, dependee: &str) -> RecordEnvelope {
        encode(
            &TypedRecord::Dependency(DependencyEdge {
                dependent: dependent.into(),
                dependee: dependee.into(),
            }),
            EntityKind::Administrator,
            "2026-01-01T00:00:00Z",
        )
    }

    fn policy_envelope(data: &str, subject: &str, rights: &[AccessRight]) -> RecordEnvelope {
        encode(
            &TypedRecord::Policy(AccessControlPolicy {
                data: data.into(),
                subject: subject.into(),
                rights: rights.iter().copied().collect(),
                location_constraint: None,
                extra: Map::new(),
            }),
            EntityKind::Administrator,
            "2026-01-01T00:00:00Z",
        )
    }

    #[test]
    fn resources_and_dependencies_build_the_graph() {
        let dir = tempdir().unwrap();
        let mut state = CsoState::load(dir.path()).unwrap();
        state.apply(resource_envelope("p1", "Platform", "orgC")).unwrap();
        state.apply(resource_envelope("s1", "Service", "orgB")).unwrap();
        state.apply(dependency_envelope("s1", "p1")).unwrap();
        assert!(state.graph().contains(&"p1".into()));
        let closure = state.graph().dependents_closure(&"p1".into()).unwrap();
        assert_eq!(closure.len(), 2);
    }

    #[test]
    fn rejected_cycles_leave_no_trace_in_the_log() {
        let dir = tempdir().unwrap();
        let mut state = CsoState::load(dir.path()).unwrap();
        state.apply(resource_envelope("a", "Service", "org")).unwrap();
        state.apply(resource_envelope("b", "Service", "org")).unwrap();
        state.apply(dependency_envelope("a", "b")).unwrap();
        let err = state.apply(dependency_envelope("b", "a")).unwrap_err();
        assert!(matches!(err, StateError::Graph(GraphError::Cycle { .. })));
        drop(state);
        // Reload must succeed: nothing inconsistent was written.
        let state = CsoState::load(dir.path()).unwrap();
        assert_eq!(state.graph().edges().count(), 1);
    }

    #[test]
    fn provenance_flow_with_authorization() {
        let dir = tempdir().unwrap();
        let mut state = CsoState::load(dir.path()).unwrap();
        let event = state
            .append_provenance(
                "doc-1".into(),
                "alice".into(),
                Operation::Create,
                create_payload(false, "fresh"),
                EntityKind::Administrator,
                "t1",
            )
            .unwrap()
            .expect("create is chained");
        assert_eq!(event.seq, 0);
        state.apply(policy_envelope("doc-1", "alice", &[AccessRight::Read, AccessRight::Write])).unwrap();
        state
            .append_provenance(
                "doc-1".into(),
                "alice".into(),
                Operation::Write,
                json!({"note": "edit"}),
                EntityKind::Administrator,
                "t2",
            )
            .unwrap();
        assert_eq!(state.ledger().history(&"doc-1".into()).unwrap().len(), 2);
        assert_eq!(state.verify_provenance(), Ok(()));
    }

    #[test]
    fn unauthorized_write_records_exactly_one_incident() {
        let dir = tempdir().unwrap();
        let mut state = CsoState::load(dir.path()).unwrap();
        state
            .append_provenance(
                "doc-1".into(),
                "alice".into(),
                Operation::Create,
                create_payload(false, ""),
                EntityKind::Administrator,
                "t1",
            )
            .unwrap();
        state.apply(policy_envelope("doc-1", "mallory", &[AccessRight::Read])).unwrap();
        let before = state.repo().incidents().len();
        let err = state
            .append_provenance(
                "doc-1".into(),
                "mallory".into(),
                Operation::Write,
                json!({"note": "sneaky"}),
                EntityKind::Administrator,
                "t2",
            )
            .unwrap_err();
        assert!(matches!(err, StateError::OwnershipViolation { .. }));
        let incidents = state.repo().incidents();
        assert_eq!(incidents.len(), before + 1);
        // The refused write is not in the chain.
        assert_eq!(state.ledger().history(&"doc-1".into()).unwrap().len(), 1);
    }

    #[test]
    fn reads_are_unchained_unless_configured() {
        let dir = tempdir().unwrap();
        fs::write(dir.path().join(CONFIG_FILE), r#"{"read_logging": false}"#).unwrap();
        let mut state = CsoState::load(dir.path()).unwrap();
        state
            .append_provenance(
                "doc-1".into(),
                "alice".into(),
                Operation::Create,
                create_payload(false, ""),
                EntityKind::Administrator,
                "t1",
            )
            .unwrap();
        state.apply(policy_envelope("doc-1", "alice", &[AccessRight::Read])).unwrap();
        let logged = state
            .append_provenance(
                "doc-1".into(),
                "alice".into(),
                Operation::Read,
                json!({"note": "audit pull"}),
                EntityKind::Administrator,
                "t2",
            )
            .unwrap();
        assert_eq!(logged, None);
        assert_eq!(state.ledger().history(&"doc-1".into()).unwrap().len(), 1);

        let dir2 = tempdir().unwrap();
        fs::write(dir2.path().join(CONFIG_FILE), r#"{"read_logging": true}"#).unwrap();
        let mut state2 = CsoState::load(dir2.path()).unwrap();
        state2
            .append_provenance(
                "doc-1".into(),
                "alice".into(),
                Operation::Create,
                create_payload(false, ""),
                EntityKind::Administrator,
                "t1",
            )
            .unwrap();
        state2.apply(policy_envelope("doc-1", "alice", &[AccessRight::Read])).unwrap();
        let logged = state2
            .append_provenance(
                "doc-1".into(),
                "alice".into(),
                Operation::Read,
                json!({"note": "audit pull"}),
                EntityKind::Administrator,
                "t2",
            )
            .unwrap();
        assert!(logged.is_some());
    }

    #[test]
    fn policy_change_event_updates_the_effective_policy() {
        let dir = tempdir().unwrap();
        let mut state = CsoState::load(dir.path()).unwrap();
        state
            .append_provenance(
                "doc-1".into(),
                "alice".into(),
                Operation::Create,
                create_payload(false, ""),
                EntityKind::Administrator,
                "t1",
            )
            .unwrap();
        state.apply(policy_envelope("doc-1", "alice", &[AccessRight::Write])).unwrap();
        state
            .append_provenance(
                "doc-1".into(),
                "alice".into(),
                Operation::PolicyChange,
                json!({"policy": {
                    "data": "doc-1",
                    "subject": "bob",
                    "rights": ["read"]
                }}),
                EntityKind::Administrator,
                "t2",
            )
            .unwrap();
        let policies = state.repo().policies_for(&"doc-1".into());
        assert_eq!(policies.len(), 2);
        assert!(policies.iter().any(|p| p.subject == "bob"));
        // And the change itself is history.
        let history = state.ledger().history(&"doc-1".into()).unwrap();
        assert_eq!(history.last().unwrap().operation, Operation::PolicyChange);
    }

    #[test]
    fn ingest_reports_counts_and_line_errors() {
        let dir = tempdir().unwrap();
        let mut state = CsoState::load(dir.path()).unwrap();
        let file = dir.path().join("batch.csolog");
        let lines = [
            serde_json::to_string(&resource_envelope("p1", "Platform", "org")).unwrap(),
            "{broken".to_string(),
            serde_json::to_string(&resource_envelope("s1", "Service", "org")).unwrap(),
            serde_json::to_string(&dependency_envelope("s1", "p1")).unwrap(),
        ];
        fs::write(&file, lines.join("\n")).unwrap();
        let report = state.ingest_file(&file).unwrap();
        assert_eq!(report.ingested, 3);
        assert_eq!(report.rejected, 1);
        assert_eq!(report.errors[0].line, 2);
        assert_eq!(report.per_store.get(&StoreKind::UserResourceDb), Some(&3));

        let empty = dir.path().join("empty.csolog");
        fs::write(&empty, "").unwrap();
        let report = state.ingest_file(&empty).unwrap();
        assert_eq!((report.ingested, report.rejected), (0, 0));
    }

    #[test]
    fn warn_routes_and_stores_with_dedup() {
        let dir = tempdir().unwrap();
        let mut state = CsoState::load(dir.path()).unwrap();
        state.apply(resource_envelope("p1", "Platform", "orgC")).unwrap();
        state.apply(resource_envelope("s1", "Service", "orgB")).unwrap();
        state.apply(dependency_envelope("s1", "p1")).unwrap();
        let vuln = encode(
            &TypedRecord::Vulnerability(crate::records::VulnerabilityEntry {
                id: "VLN-2026-0003".into(),
                description: "platform flaw".into(),
                kind: crate::records::VulnerabilityKind::Code,
                affected: vec!["p1".into()],
                impact_layers: BTreeSet::new(),
                extra: Map::new(),
            }),
            EntityKind::Researcher,
            "t1",
        );
        state.apply(vuln).unwrap();
        let warnings = state.warn("VLN-2026-0003", None, "t2").unwrap();
        assert_eq!(warnings.len(), 2);
        // Reissue replaces rather than duplicates.
        state.warn("VLN-2026-0003", None, "t3").unwrap();
        assert_eq!(state.repo().warnings().len(), 2);
        assert!(matches!(
            state.warn("no-such-risk", None, "t4"),
            Err(StateError::UnknownRisk(_))
        ));
    }

    #[test]
    fn custom_layer_stack_is_honored() {
        let dir = tempdir().unwrap();
        fs::write(dir.path().join(LAYERS_FILE), r#"["Metal", "Os", "App"]"#).unwrap();
        let mut state = CsoState::load(dir.path()).unwrap();
        state.apply(resource_envelope("m1", "Metal", "org")).unwrap();
        let err = state.apply(resource_envelope("x1", "Platform", "org")).unwrap_err();
        assert!(matches!(err, StateError::Graph(GraphError::InvalidResource { .. })));
    }

    #[test]
    fn reload_preserves_graph_and_verifiable_chains() {
        let dir = tempdir().unwrap();
        {
            let mut state = CsoState::load(dir.path()).unwrap();
            state.apply(resource_envelope("p1", "Platform", "org")).unwrap();
            state.apply(resource_envelope("s1", "Service", "org")).unwrap();
            state.apply(dependency_envelope("s1", "p1")).unwrap();
            state
                .append_provenance(
                    "doc-1".into(),
                    "alice".into(),
                    Operation::Create,
                    create_payload(true, "imported"),
                    EntityKind::Administrator,
                    "t1",
                )
                .unwrap();
        }
        let state = CsoState::load(dir.path()).unwrap();
        assert_eq!(state.graph().len(), 2);
        assert_eq!(state.graph().edges().count(), 1);
        assert_eq!(state.verify_provenance(), Ok(()));
        assert_eq!(
            state.data_owners().get(&"doc-1".into()),
            Some(&OrgId::from("alice"))
        );
    }
}
