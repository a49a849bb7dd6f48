//! Executable model of cybersecurity operations: a fixed ontology of
//! entities, stores and standards; typed records for the seven operational
//! databases and knowledge bases; a layered resource-dependency graph with
//! impact closures; hash-chained data provenance with ownership-rights
//! enforcement; warning routing to direct and indirect users; and a
//! CVSS-v2-style scorer with a dependency-aware aggregate.
//!
//! [`state::CsoState`] ties the pieces together over one directory of
//! append-only logs; everything else is usable on its own.

pub mod exchange;
pub mod graph;
pub mod ontology;
pub mod provenance;
pub mod records;
pub mod scoring;
pub mod state;
pub mod stores;
pub mod warnings;

pub use exchange::{parse_record, serialize_record, IngestReport, RecordEnvelope, RecordKind, TypedRecord};
pub use graph::{DependencyEdge, DependencyGraph, GraphError, Layer, LayerStack, Locus, Resource, ResourceId};
pub use ontology::{classify_kind, EntityKind, OntologySchema, OperationDomain, StandardId, StoreGroup, StoreKind};
pub use provenance::{verify_chain, Ledger, Operation, ProvenanceError, ProvenanceEvent};
pub use records::{IncidentRecord, OrgId, SubjectRef, VulnerabilityEntry, Warning};
pub use scoring::{aggregate_service_score, ScoreMethod, ScoreVector, SecurityScore};
pub use state::{CsoState, StateError};
pub use stores::{Repository, StoreError};
pub use warnings::{issue_warnings, RiskSource, WarningContext};
