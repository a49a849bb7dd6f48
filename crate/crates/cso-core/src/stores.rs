//! Persistent, append-only stores for the four databases and six
//! (sub-)knowledge bases. One newline-delimited log per store, replayed at
//! open; nothing is ever rewritten in place, removals are tombstone lines.

use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::exchange::{
    decode, parse_record, serialize_record, ExchangeError, RecordEnvelope, RecordKind, TypedRecord,
};
use crate::graph::{DependencyGraph, ResourceId};
use crate::ontology::{classify_kind, StoreKind};
use crate::provenance::Ledger;
use crate::records::{
    AccessControlPolicy, AssessmentRule, CloudSubscription, DataId, IncidentRecord,
    VulnerabilityEntry, Warning,
};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("kind {kind} belongs to {expected}, not {requested}")]
    StoreMismatch { kind: RecordKind, expected: StoreKind, requested: StoreKind },
    #[error("duplicate record id {id} in {store}")]
    DuplicateId { store: StoreKind, id: String },
    #[error("event timestamp regression on source {origin}: {ts} after {last}")]
    TimestampRegression { origin: String, ts: String, last: String },
    #[error(transparent)]
    Exchange(#[from] ExchangeError),
    #[error("{file} line {line}: {message}")]
    Corrupt { file: String, line: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Marks every earlier record with this id in the store as dead.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct TombstoneMark {
    kind: RecordKind,
    id: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TombstoneLine {
    tombstone: TombstoneMark,
}

#[derive(Debug, Clone)]
struct Entry {
    id: String,
    envelope: RecordEnvelope,
    live: bool,
}

#[derive(Debug, Clone, Default)]
struct StoreState {
    entries: Vec<Entry>,
    /// Live record id -> position in `entries`.
    index: BTreeMap<String, usize>,
    /// Last event timestamp per event source, for the monotonicity check.
    event_ts: BTreeMap<String, String>,
}

impl StoreState {
    fn apply_tombstone(&mut self, id: &str) {
        for entry in &mut self.entries {
            if entry.id == id {
                entry.live = false;
            }
        }
        self.index.remove(id);
    }

    fn push_live(&mut self, id: String, envelope: RecordEnvelope) {
        self.index.insert(id.clone(), self.entries.len());
        self.entries.push(Entry { id, envelope, live: true });
    }
}

/// All ten stores, backed by one log file each under the state directory.
#[derive(Debug)]
pub struct Repository {
    dir: PathBuf,
    stores: BTreeMap<StoreKind, StoreState>,
}

impl Repository {
    /// Opens (creating if needed) the store logs under `dir` and replays
    /// them.
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        let mut stores: BTreeMap<StoreKind, StoreState> =
            StoreKind::ALL.iter().map(|k| (*k, StoreState::default())).collect();
        for kind in StoreKind::ALL {
            let path = store_path(&dir, kind);
            if !path.exists() {
                continue;
            }
            let text = fs::read_to_string(&path)?;
            let state = stores.get_mut(&kind).expect("all stores present");
            for (line_no, line) in text.lines().enumerate() {
                if line.is_empty() {
                    continue;
                }
                load_line(state, line).map_err(|message| StoreError::Corrupt {
                    file: path.display().to_string(),
                    line: line_no + 1,
                    message,
                })?;
            }
        }
        Ok(Repository { dir, stores })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn store_path(&self, store: StoreKind) -> PathBuf {
        store_path(&self.dir, store)
    }

    fn state(&self, store: StoreKind) -> &StoreState {
        self.stores.get(&store).expect("all stores present")
    }

    fn append_line(&self, store: StoreKind, bytes: &[u8]) -> Result<(), StoreError> {
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(self.store_path(store))?;
        file.write_all(bytes)?;
        file.write_all(b"\n")?;
        Ok(())
    }

    fn write_tombstone(&mut self, store: StoreKind, kind: RecordKind, id: &str) -> Result<(), StoreError> {
        let line = TombstoneLine { tombstone: TombstoneMark { kind, id: id.to_string() } };
        let bytes = serde_json::to_vec(&line).expect("tombstones serialize");
        self.append_line(store, &bytes)?;
        self.stores.get_mut(&store).expect("all stores present").apply_tombstone(id);
        Ok(())
    }

    /// Validates, routes and durably appends one record; returns its id.
    ///
    /// The declared store must be the record kind's home store. Policies
    /// replace any live policy for the same (data, subject); warnings
    /// replace any live warning for the same (risk, recipients). Everything
    /// else must carry a fresh id.
    pub fn put(&mut self, store: StoreKind, envelope: RecordEnvelope) -> Result<String, StoreError> {
        let typed = decode(&envelope)?;
        let expected = classify_kind(envelope.kind);
        if expected != store {
            return Err(StoreError::StoreMismatch { kind: envelope.kind, expected, requested: store });
        }
        let id = typed.record_id();

        match &typed {
            TypedRecord::Policy(_) => {
                if self.state(store).index.contains_key(&id) {
                    self.write_tombstone(store, RecordKind::Policy, &id)?;
                }
            }
            TypedRecord::Warning(warning) => {
                let stale: Vec<String> = self
                    .warnings()
                    .into_iter()
                    .filter(|w| {
                        w.risk_ref == warning.risk_ref && w.recipients == warning.recipients
                    })
                    .map(|w| w.id)
                    .collect();
                for old in stale {
                    self.write_tombstone(store, RecordKind::Warning, &old)?;
                }
            }
            TypedRecord::Event(event) => {
                let source = event.source.to_string();
                if let Some(last) = self.state(store).event_ts.get(&source) {
                    if event.timestamp < *last {
                        return Err(StoreError::TimestampRegression {
                            origin: source,
                            ts: event.timestamp.clone(),
                            last: last.clone(),
                        });
                    }
                }
            }
            _ => {}
        }

        if self.state(store).index.contains_key(&id) {
            return Err(StoreError::DuplicateId { store, id });
        }

        self.append_line(store, &serialize_record(&envelope))?;
        let state = self.stores.get_mut(&store).expect("all stores present");
        if let TypedRecord::Event(event) = &typed {
            state.event_ts.insert(event.source.to_string(), event.timestamp.clone());
        }
        state.push_live(id.clone(), envelope);
        Ok(id)
    }

    /// Routes the record to its home store.
    pub fn route(&mut self, envelope: RecordEnvelope) -> Result<(StoreKind, String), StoreError> {
        let store = classify_kind(envelope.kind);
        let id = self.put(store, envelope)?;
        Ok((store, id))
    }

    /// Live records, insertion-ordered.
    pub fn iter(&self, store: StoreKind) -> impl Iterator<Item = &RecordEnvelope> {
        self.state(store).entries.iter().filter(|e| e.live).map(|e| &e.envelope)
    }

    /// All and only the live records matching the predicate, insertion-ordered.
    pub fn query<'a>(
        &'a self,
        store: StoreKind,
        predicate: impl Fn(&RecordEnvelope) -> bool + 'a,
    ) -> impl Iterator<Item = &'a RecordEnvelope> {
        self.iter(store).filter(move |e| predicate(e))
    }

    pub fn get(&self, store: StoreKind, id: &str) -> Option<&RecordEnvelope> {
        self.state(store).index.get(id).map(|&pos| &self.state(store).entries[pos].envelope)
    }

    pub fn contains(&self, store: StoreKind, id: &str) -> bool {
        self.state(store).index.contains_key(id)
    }

    pub fn len(&self, store: StoreKind) -> usize {
        self.state(store).index.len()
    }

    pub fn is_empty(&self, store: StoreKind) -> bool {
        self.len(store) == 0
    }

    fn decoded_where<T, F>(&self, store: StoreKind, pick: F) -> Vec<T>
    where
        F: Fn(TypedRecord) -> Option<T>,
    {
        self.iter(store)
            .filter_map(|envelope| decode(envelope).ok())
            .filter_map(pick)
            .collect()
    }

    pub fn subscriptions(&self) -> Vec<CloudSubscription> {
        self.decoded_where(StoreKind::UserResourceDb, |t| match t {
            TypedRecord::Subscription(s) => Some(s),
            _ => None,
        })
    }

    pub fn policies(&self) -> Vec<AccessControlPolicy> {
        self.decoded_where(StoreKind::UserResourceDb, |t| match t {
            TypedRecord::Policy(p) => Some(p),
            _ => None,
        })
    }

    pub fn policies_for(&self, data: &DataId) -> Vec<AccessControlPolicy> {
        self.policies().into_iter().filter(|p| &p.data == data).collect()
    }

    pub fn vulnerabilities(&self) -> Vec<VulnerabilityEntry> {
        self.decoded_where(StoreKind::VulnerabilityKb, |t| match t {
            TypedRecord::Vulnerability(v) => Some(v),
            _ => None,
        })
    }

    pub fn incidents(&self) -> Vec<IncidentRecord> {
        self.decoded_where(StoreKind::IncidentDb, |t| match t {
            TypedRecord::Incident(i) => Some(i),
            _ => None,
        })
    }

    pub fn warnings(&self) -> Vec<Warning> {
        self.decoded_where(StoreKind::WarningDb, |t| match t {
            TypedRecord::Warning(w) => Some(w),
            _ => None,
        })
    }

    pub fn assessment_rules(&self) -> Vec<AssessmentRule> {
        self.decoded_where(StoreKind::AssessmentKb, |t| match t {
            TypedRecord::AssessmentRule(r) => Some(r),
            _ => None,
        })
    }

    /// Vulnerabilities whose blast radius reaches the organization, each
    /// with the dependency path that gets there.
    pub fn vulnerabilities_affecting(
        &self,
        graph: &DependencyGraph,
        org: &crate::records::OrgId,
        subscriptions: &[CloudSubscription],
    ) -> Vec<(VulnerabilityEntry, Vec<ResourceId>)> {
        let subscribed: std::collections::BTreeSet<&str> = subscriptions
            .iter()
            .filter(|s| &s.org == org)
            .map(|s| s.service.as_str())
            .collect();
        let mut out = Vec::new();
        for vuln in self.vulnerabilities() {
            let mut targets: std::collections::BTreeSet<ResourceId> =
                std::collections::BTreeSet::new();
            for token in &vuln.affected {
                let id = ResourceId(token.clone());
                if graph.contains(&id) {
                    targets.insert(id);
                } else {
                    for resource in graph.resources() {
                        if resource.provider.as_deref() == Some(token.as_str()) {
                            targets.insert(resource.id.clone());
                        }
                    }
                }
            }
            'vuln: for target in targets {
                let closure = graph.dependents_closure(&target).expect("target present");
                let entry = closure.iter().find(|id| {
                    graph.get(id).is_some_and(|r| {
                        &r.owner_org == org
                            || r.provider.as_deref().is_some_and(|p| subscribed.contains(p))
                    })
                });
                if let Some(entry) = entry {
                    let path = graph
                        .dependency_path(entry, &target)
                        .expect("both present")
                        .expect("entry reaches target");
                    out.push((vuln, path));
                    break 'vuln;
                }
            }
        }
        out
    }

    /// Lists every dangling cross-store reference.
    pub fn verify_refs(&self, graph: &DependencyGraph, ledger: &Ledger) -> Vec<MissingRef> {
        let mut missing = Vec::new();
        let mut note = |store: StoreKind, record: &str, field: &str, target: &str| {
            missing.push(MissingRef {
                store,
                record: record.to_string(),
                field: field.to_string(),
                target: target.to_string(),
            });
        };
        let data_known = |data: &DataId| {
            ledger.contains(data) || self.policies().iter().any(|p| &p.data == data)
        };
        let subject_known = |subject: &crate::records::SubjectRef| match subject {
            crate::records::SubjectRef::Resource(id) => graph.contains(id),
            crate::records::SubjectRef::Data(data) => data_known(data),
        };
        let service_known =
            |token: &str| self.contains(StoreKind::VersionKb, token);
        let product_or_resource = |token: &str| {
            service_known(token)
                || self.contains(StoreKind::VersionKb, token)
                || graph.contains(&ResourceId(token.to_string()))
                || graph.resources().any(|r| r.provider.as_deref() == Some(token))
        };

        for envelope in self.iter(StoreKind::IncidentDb) {
            match decode(envelope) {
                Ok(TypedRecord::Incident(incident)) => {
                    for event_id in &incident.event_ids {
                        if !self.contains(StoreKind::IncidentDb, event_id) {
                            note(StoreKind::IncidentDb, &incident.id, "event_ids", event_id);
                        }
                    }
                    if !subject_known(&incident.subject) {
                        note(
                            StoreKind::IncidentDb,
                            &incident.id,
                            "subject",
                            &incident.subject.to_string(),
                        );
                    }
                }
                Ok(TypedRecord::Attack(attack)) => {
                    for incident_id in &attack.incident_ids {
                        if !self.contains(StoreKind::IncidentDb, incident_id) {
                            note(StoreKind::IncidentDb, &attack.id, "incident_ids", incident_id);
                        }
                    }
                    for target in &attack.targets {
                        if !subject_known(target) {
                            note(StoreKind::IncidentDb, &attack.id, "targets", &target.to_string());
                        }
                    }
                }
                _ => {}
            }
        }

        for warning in self.warnings() {
            let resolved = match &warning.risk_ref {
                crate::records::RiskRef::Vulnerability(id) => {
                    self.contains(StoreKind::VulnerabilityKb, id)
                }
                crate::records::RiskRef::Incident(id) => self.contains(StoreKind::IncidentDb, id),
            };
            if !resolved {
                note(StoreKind::WarningDb, &warning.id, "risk_ref", warning.risk_ref.id());
            }
            if !subject_known(&warning.at_risk) {
                note(StoreKind::WarningDb, &warning.id, "at_risk", &warning.at_risk.to_string());
            }
        }

        for sub in self.subscriptions() {
            if !service_known(&sub.service) {
                let record = format!("{}/{}", sub.org, sub.service);
                note(StoreKind::UserResourceDb, &record, "service", &sub.service);
            }
        }
        for policy in self.policies() {
            if !data_known(&policy.data) {
                note(StoreKind::UserResourceDb, &policy.key(), "data", policy.data.as_str());
            }
        }
        for resource in graph.resources() {
            if let Some(provider) = &resource.provider {
                if !service_known(provider) {
                    note(StoreKind::UserResourceDb, resource.id.as_str(), "provider", provider);
                }
            }
        }

        for vuln in self.vulnerabilities() {
            for token in &vuln.affected {
                if !product_or_resource(token) {
                    note(StoreKind::VulnerabilityKb, &vuln.id, "affected", token);
                }
            }
        }

        for envelope in self.iter(StoreKind::ConfigurationKb) {
            if let Ok(TypedRecord::Configuration(config)) = decode(envelope) {
                for target in &config.targets {
                    if !product_or_resource(target) {
                        note(StoreKind::ConfigurationKb, &config.config_id, "targets", target);
                    }
                }
            }
        }

        missing
    }
}

/// One unresolved reference found by the verify pass.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MissingRef {
    pub store: StoreKind,
    pub record: String,
    pub field: String,
    pub target: String,
}

impl std::fmt::Display for MissingRef {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} {}: {} -> {}", self.store, self.record, self.field, self.target)
    }
}

fn store_path(dir: &Path, store: StoreKind) -> PathBuf {
    dir.join(format!("{}.csolog", store.as_str()))
}

fn load_line(state: &mut StoreState, line: &str) -> Result<(), String> {
    let value: Value = serde_json::from_str(line).map_err(|e| e.to_string())?;
    if value.get("tombstone").is_some() {
        let tomb: TombstoneLine = serde_json::from_value(value).map_err(|e| e.to_string())?;
        state.apply_tombstone(&tomb.tombstone.id);
        return Ok(());
    }
    let envelope = parse_record(line.as_bytes()).map_err(|e| e.to_string())?;
    let typed = decode(&envelope).map_err(|e| e.to_string())?;
    if let TypedRecord::Event(event) = &typed {
        state.event_ts.insert(event.source.to_string(), event.timestamp.clone());
    }
    state.push_live(typed.record_id(), envelope);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exchange::encode;
    use crate::ontology::EntityKind;
    use crate::records::*;
    use serde_json::{json, Map};
    use tempfile::tempdir;

    fn event(id: &str, ts: &str) -> RecordEnvelope {
        encode(
            &TypedRecord::Event(EventRecord {
                id: id.into(),
                timestamp: ts.into(),
                source: SubjectRef::Resource("srv-1".into()),
                actor: "login-service".into(),
                action: "login".into(),
                attributes: BTreeMap::new(),
                extra: Map::new(),
            }),
            EntityKind::ResponseTeam,
            ts,
        )
    }

    fn policy(data: &str, subject: &str, rights: &[AccessRight]) -> RecordEnvelope {
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

    fn warning(risk: &str, org: &str, severity: Option<f64>) -> RecordEnvelope {
        encode(
            &TypedRecord::Warning(Warning {
                id: format!("wrn-{risk}-{org}"),
                risk_ref: RiskRef::Vulnerability(risk.into()),
                at_risk: SubjectRef::Data("doc-1".into()),
                recipients: std::collections::BTreeSet::from([org.into()]),
                severity: severity.map(|v| {
                    crate::scoring::SecurityScore::new(v, crate::scoring::ScoreMethod::Cvss2Base)
                        .unwrap()
                }),
                dependency_path: vec![],
                extra: Map::new(),
            }),
            EntityKind::Coordinator,
            "2026-01-01T00:00:00Z",
        )
    }

    #[test]
    fn put_routes_and_queries_in_insertion_order() {
        let dir = tempdir().unwrap();
        let mut repo = Repository::open(dir.path()).unwrap();
        repo.put(StoreKind::IncidentDb, event("ev-1", "t1")).unwrap();
        repo.put(StoreKind::IncidentDb, event("ev-2", "t2")).unwrap();
        let ids: Vec<_> = repo
            .iter(StoreKind::IncidentDb)
            .map(|e| e.body["id"].as_str().unwrap().to_string())
            .collect();
        assert_eq!(ids, vec!["ev-1", "ev-2"]);
        assert!(repo.query(StoreKind::WarningDb, |_| true).next().is_none());
    }

    #[test]
    fn store_mismatch_is_rejected() {
        let dir = tempdir().unwrap();
        let mut repo = Repository::open(dir.path()).unwrap();
        let err = repo.put(StoreKind::WarningDb, event("ev-1", "t1")).unwrap_err();
        assert!(matches!(err, StoreError::StoreMismatch { .. }));
    }

    #[test]
    fn invariant_violations_are_rejected() {
        let dir = tempdir().unwrap();
        let mut repo = Repository::open(dir.path()).unwrap();
        let bad = RecordEnvelope::new(
            RecordKind::Vulnerability,
            EntityKind::Researcher,
            "t1",
            json!({"id": "", "description": "d", "kind": "code"}),
        );
        let err = repo.put(StoreKind::VulnerabilityKb, bad).unwrap_err();
        assert!(matches!(err, StoreError::Exchange(ExchangeError::SchemaViolation { .. })));
    }

    #[test]
    fn duplicate_ids_are_rejected() {
        let dir = tempdir().unwrap();
        let mut repo = Repository::open(dir.path()).unwrap();
        repo.put(StoreKind::IncidentDb, event("ev-1", "t1")).unwrap();
        let err = repo.put(StoreKind::IncidentDb, event("ev-1", "t2")).unwrap_err();
        assert!(matches!(err, StoreError::DuplicateId { .. }));
    }

    #[test]
    fn event_timestamps_monotone_per_source() {
        let dir = tempdir().unwrap();
        let mut repo = Repository::open(dir.path()).unwrap();
        repo.put(StoreKind::IncidentDb, event("ev-1", "t5")).unwrap();
        let err = repo.put(StoreKind::IncidentDb, event("ev-2", "t4")).unwrap_err();
        assert!(matches!(err, StoreError::TimestampRegression { .. }));
        repo.put(StoreKind::IncidentDb, event("ev-3", "t5")).unwrap();
    }

    #[test]
    fn policies_replace_per_data_subject() {
        let dir = tempdir().unwrap();
        let mut repo = Repository::open(dir.path()).unwrap();
        repo.put(StoreKind::UserResourceDb, policy("doc-1", "bob", &[AccessRight::Read])).unwrap();
        repo.put(
            StoreKind::UserResourceDb,
            policy("doc-1", "bob", &[AccessRight::Read, AccessRight::Write]),
        )
        .unwrap();
        let policies = repo.policies_for(&"doc-1".into());
        assert_eq!(policies.len(), 1);
        assert!(policies[0].rights.contains(&AccessRight::Write));
    }

    #[test]
    fn warnings_dedupe_on_risk_and_recipients() {
        let dir = tempdir().unwrap();
        let mut repo = Repository::open(dir.path()).unwrap();
        repo.put(StoreKind::WarningDb, warning("VLN-2026-1", "orgA", None)).unwrap();
        repo.put(StoreKind::WarningDb, warning("VLN-2026-1", "orgB", None)).unwrap();
        repo.put(StoreKind::WarningDb, warning("VLN-2026-1", "orgA", Some(7.5))).unwrap();
        let warnings = repo.warnings();
        assert_eq!(warnings.len(), 2);
        let to_a: Vec<_> =
            warnings.iter().filter(|w| w.recipients.contains(&"orgA".into())).collect();
        assert_eq!(to_a.len(), 1);
        assert_eq!(to_a[0].severity.map(|s| s.value), Some(7.5));
    }

    #[test]
    fn false_incidents_are_retained_and_queryable() {
        let dir = tempdir().unwrap();
        let mut repo = Repository::open(dir.path()).unwrap();
        let incident = encode(
            &TypedRecord::Incident(IncidentRecord {
                id: "inc-1".into(),
                event_ids: vec![],
                state: "suspected scan".into(),
                expected_consequence: "none".into(),
                assessment: Assessment::FalseIncident,
                subject: SubjectRef::Resource("srv-1".into()),
                extra: Map::new(),
            }),
            EntityKind::ResponseTeam,
            "t1",
        );
        repo.put(StoreKind::IncidentDb, incident).unwrap();
        let false_ones: Vec<_> = repo
            .query(StoreKind::IncidentDb, |e| e.body["assessment"] == json!("false_incident"))
            .collect();
        assert_eq!(false_ones.len(), 1);
    }

    #[test]
    fn reload_replays_logs_and_tombstones() {
        let dir = tempdir().unwrap();
        {
            let mut repo = Repository::open(dir.path()).unwrap();
            repo.put(StoreKind::IncidentDb, event("ev-1", "t1")).unwrap();
            repo.put(StoreKind::UserResourceDb, policy("doc-1", "bob", &[AccessRight::Read]))
                .unwrap();
            repo.put(StoreKind::UserResourceDb, policy("doc-1", "bob", &[AccessRight::Write]))
                .unwrap();
        }
        let repo = Repository::open(dir.path()).unwrap();
        assert_eq!(repo.len(StoreKind::IncidentDb), 1);
        let policies = repo.policies_for(&"doc-1".into());
        assert_eq!(policies.len(), 1);
        assert_eq!(policies[0].rights, std::collections::BTreeSet::from([AccessRight::Write]));
        // The log keeps history: two policy lines plus one tombstone.
        let text = fs::read_to_string(repo.store_path(StoreKind::UserResourceDb)).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.lines().nth(1).unwrap().contains("tombstone"));
    }

    #[test]
    fn corrupt_log_lines_are_located() {
        let dir = tempdir().unwrap();
        {
            let mut repo = Repository::open(dir.path()).unwrap();
            repo.put(StoreKind::IncidentDb, event("ev-1", "t1")).unwrap();
        }
        let path = store_path(dir.path(), StoreKind::IncidentDb);
        let mut text = fs::read_to_string(&path).unwrap();
        text.push_str("{broken\n");
        fs::write(&path, text).unwrap();
        match Repository::open(dir.path()) {
            Err(StoreError::Corrupt { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected corrupt error, got {other:?}"),
        }
    }

    #[test]
    fn data_subject_and_resource_subject_incidents_store_alike() {
        let dir = tempdir().unwrap();
        let mut repo = Repository::open(dir.path()).unwrap();
        for (id, subject) in [
            ("inc-r", SubjectRef::Resource("srv-1".into())),
            ("inc-d", SubjectRef::Data("doc-1".into())),
        ] {
            let envelope = encode(
                &TypedRecord::Incident(IncidentRecord {
                    id: id.into(),
                    event_ids: vec![],
                    state: "excessive access".into(),
                    expected_consequence: "denial of service".into(),
                    assessment: Assessment::UnderInvestigation,
                    subject,
                    extra: Map::new(),
                }),
                EntityKind::ResponseTeam,
                "t1",
            );
            repo.put(StoreKind::IncidentDb, envelope).unwrap();
        }
        assert!(repo.contains(StoreKind::IncidentDb, "inc-r"));
        assert!(repo.contains(StoreKind::IncidentDb, "inc-d"));
        assert_eq!(repo.incidents().len(), 2);
    }
}
