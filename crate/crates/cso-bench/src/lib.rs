//! Deterministic fixture builders shared by the benchmark suite.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use cso_core::exchange::{encode, serialize_record, TypedRecord};
use cso_core::graph::{DependencyEdge, DependencyGraph, LayerStack, Locus, Resource};
use cso_core::ontology::EntityKind;
use cso_core::provenance::{event_digest, Operation, ProvenanceEvent, ZERO_DIGEST};
use cso_core::records::{Assessment, IncidentRecord, SubjectRef, VulnerabilityEntry, VulnerabilityKind};

/// A layered DAG of `nodes` resources where node `i` depends on up to
/// `edges_per_node` random lower-indexed nodes. Node `r0` sits at the
/// bottom, so its dependents closure is the worst case.
pub fn layered_graph(nodes: usize, edges_per_node: usize, seed: u64) -> DependencyGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layers = LayerStack::default();
    let names: Vec<String> = layers.layers().iter().map(|l| l.to_string()).collect();

    let resources: Vec<Resource> = (0..nodes)
        .map(|i| Resource {
            id: format!("r{i}").into(),
            name: format!("resource {i}"),
            layer: names[i % names.len()].clone().into(),
            owner_org: format!("org{}", i % 13).into(),
            locus: Locus::Local,
            provider: None,
        })
        .collect();
    let mut edges = std::collections::BTreeSet::new();
    for dependent in 1..nodes {
        for _ in 0..edges_per_node {
            edges.insert((dependent, rng.gen_range(0..dependent)));
        }
    }
    let edges: Vec<DependencyEdge> = edges
        .into_iter()
        .map(|(dependent, dependee)| DependencyEdge {
            dependent: format!("r{dependent}").into(),
            dependee: format!("r{dependee}").into(),
        })
        .collect();
    DependencyGraph::from_parts(layers, resources, edges).expect("fixture graph is valid")
}

/// A well-formed chain: one create followed by writes.
pub fn provenance_chain(length: usize) -> Vec<ProvenanceEvent> {
    let mut events = Vec::with_capacity(length);
    let mut prev = ZERO_DIGEST.to_string();
    for seq in 0..length as u64 {
        let operation = if seq == 0 { Operation::Create } else { Operation::Write };
        let payload = json!({"note": format!("revision {seq}")});
        let data = "bench-doc".into();
        let digest = event_digest(seq, &data, "custodian", operation, &payload, &prev);
        events.push(ProvenanceEvent {
            seq,
            data,
            actor: "custodian".into(),
            operation,
            payload,
            prev_digest: prev,
            algo: "sha256".into(),
            digest: digest.clone(),
        });
        prev = digest;
    }
    events
}

/// Serialized exchange lines of mixed kinds, as an importer would see them.
pub fn envelope_lines(count: usize, seed: u64) -> Vec<Vec<u8>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let record = match i % 3 {
                0 => TypedRecord::Resource(Resource {
                    id: format!("res-{i}").into(),
                    name: format!("asset {i}"),
                    layer: "Service".into(),
                    owner_org: format!("org{}", i % 5).into(),
                    locus: Locus::Local,
                    provider: None,
                }),
                1 => TypedRecord::Vulnerability(VulnerabilityEntry {
                    id: format!("VLN-2026-{:04}", 1 + i),
                    description: format!("issue {}", rng.gen_range(0..1_000_000u32)),
                    kind: VulnerabilityKind::Code,
                    affected: vec![format!("res-{}", i.saturating_sub(1))],
                    impact_layers: Default::default(),
                    extra: Default::default(),
                }),
                _ => TypedRecord::Incident(IncidentRecord {
                    id: format!("inc-{i}"),
                    event_ids: vec![],
                    state: "excessive access".into(),
                    expected_consequence: "service degradation".into(),
                    assessment: Assessment::UnderInvestigation,
                    subject: SubjectRef::Resource(format!("res-{}", i.saturating_sub(2)).into()),
                    extra: Default::default(),
                }),
            };
            serialize_record(&encode(&record, EntityKind::Administrator, "2026-05-01T00:00:00Z"))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use cso_core::exchange::parse_record;
    use cso_core::provenance::verify_chain;

    #[test]
    fn fixtures_are_well_formed() {
        let graph = layered_graph(64, 3, 1);
        assert_eq!(graph.resources().count(), 64);
        assert_eq!(verify_chain(&provenance_chain(16)), Ok(()));
        for line in envelope_lines(9, 1) {
            parse_record(&line).unwrap();
        }
    }
}
