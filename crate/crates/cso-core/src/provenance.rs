//! Tamper-evident manipulation history per data object.
//!
//! Every event carries a digest over its own content and the digest of the
//! previous event, forming a per-data-id chain. Any mutation of a stored
//! event breaks recomputation at or before that position. Digest algorithms
//! are named in each event so chains stay verifiable across implementations;
//! this build knows sha256.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::records::{
    AccessControlPolicy, AccessRight, Assessment, DataId, IncidentRecord, SubjectRef,
};

/// Digest of "nothing": the prev_digest of every chain's first event.
pub const ZERO_DIGEST: &str = "0000000000000000000000000000000000000000000000000000000000000000";

/// The digest algorithm this build computes.
pub const DIGEST_ALGO: &str = "sha256";

/// The manipulation kinds the ledger records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Operation {
    Create,
    Read,
    Write,
    Delete,
    PolicyChange,
    PlacementChange,
}

impl Operation {
    pub const ALL: [Operation; 6] = [
        Operation::Create,
        Operation::Read,
        Operation::Write,
        Operation::Delete,
        Operation::PolicyChange,
        Operation::PlacementChange,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Operation::Create => "create",
            Operation::Read => "read",
            Operation::Write => "write",
            Operation::Delete => "delete",
            Operation::PolicyChange => "policy_change",
            Operation::PlacementChange => "placement_change",
        }
    }

    pub fn parse(token: &str) -> Option<Operation> {
        Operation::ALL.iter().copied().find(|op| op.as_str() == token)
    }
}

impl fmt::Display for Operation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A change of a data object's physical location. The logical location is
/// unchanged across the event; only the physical placement moves.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlacementChange {
    pub data: DataId,
    pub logical_location: String,
    pub old_physical: String,
    pub new_physical: String,
    pub timestamp: String,
}

impl PlacementChange {
    pub fn validate(&self) -> Result<(), ProvenanceError> {
        if self.logical_location.is_empty() {
            return Err(ProvenanceError::InvalidPayload(
                "placement change needs a logical location".into(),
            ));
        }
        if self.old_physical.is_empty() || self.new_physical.is_empty() {
            return Err(ProvenanceError::InvalidPayload(
                "placement change needs both physical loci".into(),
            ));
        }
        if self.old_physical == self.new_physical {
            return Err(ProvenanceError::InvalidPayload(
                "placement change must move the data".into(),
            ));
        }
        Ok(())
    }
}

/// One event to be appended, before digests are computed.
#[derive(Debug, Clone, PartialEq)]
pub struct EventDraft {
    pub seq: u64,
    pub data: DataId,
    pub actor: String,
    pub operation: Operation,
    pub payload: Value,
}

/// One chained manipulation event.
///
/// `digest` covers (seq, data, actor, operation, payload, prev_digest); the
/// algorithm field is outside the digest but any unknown value fails
/// verification on its own.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProvenanceEvent {
    pub seq: u64,
    pub data: DataId,
    pub actor: String,
    pub operation: Operation,
    pub payload: Value,
    pub prev_digest: String,
    pub algo: String,
    pub digest: String,
}

fn is_hex_digest(s: &str) -> bool {
    s.len() == 64 && s.bytes().all(|b| b.is_ascii_hexdigit())
}

impl ProvenanceEvent {
    /// Structural validation used at ingest, before chain rules apply.
    pub fn validate(&self) -> Result<(), ProvenanceError> {
        if self.data.as_str().is_empty() {
            return Err(ProvenanceError::InvalidPayload("data id must be non-empty".into()));
        }
        if self.actor.is_empty() {
            return Err(ProvenanceError::InvalidPayload("actor must be non-empty".into()));
        }
        if !is_hex_digest(&self.prev_digest) || !is_hex_digest(&self.digest) {
            return Err(ProvenanceError::InvalidPayload(
                "digests must be 64 hex characters".into(),
            ));
        }
        if self.operation == Operation::PlacementChange {
            placement_from_payload(&self.payload)?.validate()?;
        }
        Ok(())
    }
}

pub fn placement_from_payload(payload: &Value) -> Result<PlacementChange, ProvenanceError> {
    serde_json::from_value(payload.clone())
        .map_err(|e| ProvenanceError::InvalidPayload(format!("placement payload: {e}")))
}

/// Payload for a create event. `epoch_start` marks pre-existing data whose
/// earlier history is unknown; its provenance starts here.
pub fn create_payload(epoch_start: bool, note: &str) -> Value {
    json!({ "epoch_start": epoch_start, "note": note })
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProvenanceError {
    #[error("sequence gap: expected {expected}, got {got}")]
    SequenceGap { expected: u64, got: u64 },
    #[error("create event on a non-empty chain")]
    CreateOnNonEmpty,
    #[error("first event of a chain must be create")]
    MissingCreate,
    #[error("chain is closed: append after delete")]
    AppendAfterDelete,
    #[error("unknown data id: {0}")]
    UnknownDataId(DataId),
    #[error("invalid event payload: {0}")]
    InvalidPayload(String),
    #[error("event does not link to the previous digest")]
    LinkMismatch,
    #[error("event digest does not match its content")]
    DigestMismatch,
    #[error("unknown digest algorithm: {0}")]
    UnknownAlgorithm(String),
}

/// Digest over the canonical serialization of the covered fields.
pub fn event_digest(
    seq: u64,
    data: &DataId,
    actor: &str,
    operation: Operation,
    payload: &Value,
    prev_digest: &str,
) -> String {
    let covered = serde_json::to_vec(&(seq, data, actor, operation, payload, prev_digest))
        .expect("covered fields serialize");
    let mut hasher = Sha256::new();
    hasher.update(&covered);
    let out = hasher.finalize();
    let mut hex = String::with_capacity(64);
    for byte in out {
        hex.push_str(&format!("{byte:02x}"));
    }
    hex
}

/// Chain verification: recompute every digest and every link. `Err(seq)` is
/// the smallest failing position.
pub fn verify_chain(events: &[ProvenanceEvent]) -> Result<(), u64> {
    for (pos, event) in events.iter().enumerate() {
        let pos = pos as u64;
        if event.seq != pos {
            return Err(pos);
        }
        if pos == 0 {
            if event.operation != Operation::Create || event.prev_digest != ZERO_DIGEST {
                return Err(0);
            }
        } else {
            let prev = &events[pos as usize - 1];
            if event.operation == Operation::Create
                || prev.operation == Operation::Delete
                || event.prev_digest != prev.digest
                || event.data != prev.data
            {
                return Err(pos);
            }
        }
        if event.algo != DIGEST_ALGO {
            return Err(pos);
        }
        let recomputed = event_digest(
            event.seq,
            &event.data,
            &event.actor,
            event.operation,
            &event.payload,
            &event.prev_digest,
        );
        if recomputed != event.digest {
            return Err(pos);
        }
    }
    Ok(())
}

/// Whether an append is permitted, and the incident to record when not.
#[derive(Debug, Clone, PartialEq)]
pub enum AuthDecision {
    Allowed,
    Violation { reason: String },
}

/// Checks the actor's rights for the drafted manipulation against the
/// effective access-control policies.
///
/// read needs the read right; write, delete and policy_change need the
/// write right; create is free on unmanaged data and needs the write right
/// once policies exist; placement_change must satisfy every location
/// constraint on the data.
pub fn check_authorization(draft: &EventDraft, policies: &[AccessControlPolicy]) -> AuthDecision {
    let on_data: Vec<&AccessControlPolicy> =
        policies.iter().filter(|p| p.data == draft.data).collect();

    if draft.operation == Operation::PlacementChange {
        let placement = match placement_from_payload(&draft.payload) {
            Ok(p) => p,
            Err(e) => return AuthDecision::Violation { reason: e.to_string() },
        };
        for policy in &on_data {
            if let Some(allowed) = &policy.location_constraint {
                if !allowed.contains(&placement.new_physical) {
                    return AuthDecision::Violation {
                        reason: format!(
                            "placement to {} violates the location constraint held by {}",
                            placement.new_physical, policy.subject
                        ),
                    };
                }
            }
        }
        return AuthDecision::Allowed;
    }

    let required = match draft.operation {
        Operation::Read => AccessRight::Read,
        Operation::Write | Operation::Delete | Operation::PolicyChange => AccessRight::Write,
        Operation::Create => {
            if on_data.is_empty() {
                return AuthDecision::Allowed;
            }
            AccessRight::Write
        }
        Operation::PlacementChange => unreachable!("handled above"),
    };
    let held = on_data
        .iter()
        .filter(|p| p.subject == draft.actor)
        .any(|p| p.rights.contains(&required));
    if held {
        AuthDecision::Allowed
    } else {
        AuthDecision::Violation {
            reason: format!(
                "{} by {} without the {:?} right",
                draft.operation, draft.actor, required
            ),
        }
    }
}

/// The incident a rights violation raises. Exactly one per violation.
pub fn violation_incident(draft: &EventDraft, reason: &str) -> IncidentRecord {
    IncidentRecord {
        id: format!("inc-prov-{}-{}", draft.data, draft.seq),
        event_ids: vec![],
        state: format!("ownership rights violation: {reason}"),
        expected_consequence: "unauthorized data manipulation".into(),
        assessment: Assessment::Confirmed,
        subject: SubjectRef::Data(draft.data.clone()),
        extra: serde_json::Map::new(),
    }
}

/// All per-data-id chains.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Ledger {
    chains: BTreeMap<DataId, Vec<ProvenanceEvent>>,
}

impl Ledger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn data_ids(&self) -> impl Iterator<Item = &DataId> {
        self.chains.keys()
    }

    pub fn contains(&self, data: &DataId) -> bool {
        self.chains.contains_key(data)
    }

    pub fn next_seq(&self, data: &DataId) -> u64 {
        self.chains.get(data).map_or(0, |c| c.len() as u64)
    }

    /// Chain-position rules shared by drafted and pre-digested appends.
    fn gate(&self, data: &DataId, seq: u64, operation: Operation) -> Result<(), ProvenanceError> {
        let chain = self.chains.get(data);
        let expected = chain.map_or(0, |c| c.len() as u64);
        if seq != expected {
            return Err(ProvenanceError::SequenceGap { expected, got: seq });
        }
        match chain.and_then(|c| c.last()) {
            None if operation != Operation::Create => Err(ProvenanceError::MissingCreate),
            Some(_) if operation == Operation::Create => Err(ProvenanceError::CreateOnNonEmpty),
            Some(last) if last.operation == Operation::Delete => {
                Err(ProvenanceError::AppendAfterDelete)
            }
            _ => Ok(()),
        }
    }

    /// Whether the draft could be appended right now, without appending it.
    pub fn check_append(&self, draft: &EventDraft) -> Result<(), ProvenanceError> {
        if draft.operation == Operation::PlacementChange {
            placement_from_payload(&draft.payload)?.validate()?;
        }
        self.gate(&draft.data, draft.seq, draft.operation)
    }

    /// Chains and digests the drafted event. The draft's seq must continue
    /// the chain; create opens a chain and delete closes it.
    pub fn append(&mut self, draft: EventDraft) -> Result<&ProvenanceEvent, ProvenanceError> {
        self.check_append(&draft)?;
        let chain = self.chains.entry(draft.data.clone()).or_default();
        let prev_digest = chain.last().map_or(ZERO_DIGEST.to_string(), |e| e.digest.clone());
        let digest = event_digest(
            draft.seq,
            &draft.data,
            &draft.actor,
            draft.operation,
            &draft.payload,
            &prev_digest,
        );
        chain.push(ProvenanceEvent {
            seq: draft.seq,
            data: draft.data,
            actor: draft.actor,
            operation: draft.operation,
            payload: draft.payload,
            prev_digest,
            algo: DIGEST_ALGO.to_string(),
            digest,
        });
        Ok(chain.last().expect("just pushed"))
    }

    /// Whether the pre-digested event (e.g. from another operator) extends
    /// the chain correctly: position, linkage, algorithm and digest.
    pub fn check_extend(&self, event: &ProvenanceEvent) -> Result<(), ProvenanceError> {
        event.validate()?;
        self.gate(&event.data, event.seq, event.operation)?;
        let expected_prev = self
            .chains
            .get(&event.data)
            .and_then(|c| c.last())
            .map_or(ZERO_DIGEST, |e| e.digest.as_str());
        if event.prev_digest != expected_prev {
            return Err(ProvenanceError::LinkMismatch);
        }
        if event.algo != DIGEST_ALGO {
            return Err(ProvenanceError::UnknownAlgorithm(event.algo.clone()));
        }
        let recomputed = event_digest(
            event.seq,
            &event.data,
            &event.actor,
            event.operation,
            &event.payload,
            &event.prev_digest,
        );
        if recomputed != event.digest {
            return Err(ProvenanceError::DigestMismatch);
        }
        Ok(())
    }

    /// Appends an event that already carries digests, after `check_extend`.
    pub fn extend(&mut self, event: ProvenanceEvent) -> Result<(), ProvenanceError> {
        self.check_extend(&event)?;
        self.replay(event);
        Ok(())
    }

    /// Loads a stored event verbatim, digests included. Replay performs no
    /// checks so that a tampered log still loads and verification can point
    /// at the damage.
    pub fn replay(&mut self, event: ProvenanceEvent) {
        self.chains.entry(event.data.clone()).or_default().push(event);
    }

    /// True when the chain exists and ends with a delete event.
    pub fn is_deleted(&self, data: &DataId) -> bool {
        self.chains
            .get(data)
            .and_then(|c| c.last())
            .map_or(false, |e| e.operation == Operation::Delete)
    }

    pub fn history(&self, data: &DataId) -> Result<&[ProvenanceEvent], ProvenanceError> {
        self.chains
            .get(data)
            .map(|c| c.as_slice())
            .ok_or_else(|| ProvenanceError::UnknownDataId(data.clone()))
    }

    pub fn verify(&self, data: &DataId) -> Result<Result<(), u64>, ProvenanceError> {
        Ok(verify_chain(self.history(data)?))
    }

    /// Verifies every chain; reports the first failure as (data id, seq).
    pub fn verify_all(&self) -> Result<(), (DataId, u64)> {
        for (data, chain) in &self.chains {
            if let Err(seq) = verify_chain(chain) {
                return Err((data.clone(), seq));
            }
        }
        Ok(())
    }
}
