//! Layered resources and acyclic dependency edges, with transitive impact
//! closures over them.
//!
//! An edge `dependent -> dependee` records that the dependent is built upon
//! (utilizes) the dependee. [`DependencyGraph::dependents_closure`] of a
//! resource is everything built upon it directly or indirectly (the blast
//! radius of its compromise), while [`DependencyGraph::dependees_closure`]
//! is everything it transitively utilizes.
//!
//! Queries operate on immutable snapshots; mutations are expected to be
//! externally serialized (single writer, many readers).

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::records::{CloudSubscription, OrgId};

/// Opaque unique resource identifier.
#[derive(
    Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
#[serde(transparent)]
pub struct ResourceId(pub String);

impl ResourceId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ResourceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl<T: Into<String>> From<T> for ResourceId {
    fn from(value: T) -> Self {
        ResourceId(value.into())
    }
}

/// A hierarchy layer name, valid against the graph's [`LayerStack`].
#[derive(
    Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
#[serde(transparent)]
pub struct Layer(pub String);

impl Layer {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Layer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl<T: Into<String>> From<T> for Layer {
    fn from(value: T) -> Self {
        Layer(value.into())
    }
}

/// Ordered list of hierarchy layers, lowest first.
///
/// The default stack carries six layers; deployments with more hierarchy
/// levels configure their own list (at least two, all names distinct).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LayerStack {
    names: Vec<Layer>,
}

impl Default for LayerStack {
    fn default() -> Self {
        LayerStack::new(
            ["Hardware", "Virtualization", "OperatingSystem", "Platform", "Service", "Data"]
                .into_iter()
                .map(Layer::from)
                .collect(),
        )
        .expect("default stack is valid")
    }
}

impl LayerStack {
    pub fn new(names: Vec<Layer>) -> Result<Self, GraphError> {
        if names.len() < 2 {
            return Err(GraphError::InvalidLayerStack(
                "a layer stack needs at least two layers".into(),
            ));
        }
        let distinct: BTreeSet<_> = names.iter().collect();
        if distinct.len() != names.len() {
            return Err(GraphError::InvalidLayerStack("layer names must be distinct".into()));
        }
        Ok(LayerStack { names })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.names
    }

    /// Position of the layer in the stack, bottom = 0.
    pub fn rank(&self, layer: &Layer) -> Option<usize> {
        self.names.iter().position(|l| l == layer)
    }

    pub fn contains(&self, layer: &Layer) -> bool {
        self.rank(layer).is_some()
    }
}

/// Where a resource physically runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Locus {
    Local,
    Cloud,
}

impl fmt::Display for Locus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Locus::Local => "local",
            Locus::Cloud => "cloud",
        })
    }
}

/// A resource in the hierarchy: anything an organization runs or utilizes,
/// from hardware up to data objects.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Resource {
    pub id: ResourceId,
    pub name: String,
    pub layer: Layer,
    pub owner_org: OrgId,
    pub locus: Locus,
    /// Cloud-service entry this resource is provided by. Required for cloud
    /// resources; links subscriptions to the resources they cover.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provider: Option<String>,
}

/// `dependent` is built upon `dependee`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DependencyEdge {
    pub dependent: ResourceId,
    pub dependee: ResourceId,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("duplicate resource id: {0}")]
    DuplicateResourceId(ResourceId),
    #[error("missing resource: {0}")]
    MissingResource(ResourceId),
    #[error("dependency {dependent} -> {dependee} would close a cycle")]
    Cycle { dependent: ResourceId, dependee: ResourceId },
    #[error("invalid resource {id}: {reason}")]
    InvalidResource { id: ResourceId, reason: String },
    #[error("invalid layer stack: {0}")]
    InvalidLayerStack(String),
}

/// The dependency graph: layered resources plus acyclic depends-on edges.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DependencyGraph {
    layers: LayerStack,
    resources: BTreeMap<ResourceId, Resource>,
    /// id -> resources it depends on (outgoing edges).
    dependees: BTreeMap<ResourceId, BTreeSet<ResourceId>>,
    /// id -> resources that depend on it (incoming edges).
    dependents: BTreeMap<ResourceId, BTreeSet<ResourceId>>,
    /// Retired resources. Kept resolvable so incident and provenance records
    /// referencing them never dangle.
    tombstoned: BTreeSet<ResourceId>,
}

impl Default for DependencyGraph {
    fn default() -> Self {
        DependencyGraph::new(LayerStack::default())
    }
}

impl DependencyGraph {
    pub fn new(layers: LayerStack) -> Self {
        DependencyGraph {
            layers,
            resources: BTreeMap::new(),
            dependees: BTreeMap::new(),
            dependents: BTreeMap::new(),
            tombstoned: BTreeSet::new(),
        }
    }

    /// Builds a graph in one pass, validating acyclicity once instead of per
    /// edge. Suited to replay and bulk import.
    pub fn from_parts(
        layers: LayerStack,
        resources: Vec<Resource>,
        edges: Vec<DependencyEdge>,
    ) -> Result<Self, GraphError> {
        let mut graph = DependencyGraph::new(layers);
        for resource in resources {
            graph.insert_resource(resource)?;
        }
        for edge in &edges {
            graph.check_edge_endpoints(edge)?;
            graph.insert_edge_unchecked(edge.clone());
        }
        if let Some(edge) = graph.find_cycle_edge(&edges) {
            return Err(GraphError::Cycle {
                dependent: edge.dependent,
                dependee: edge.dependee,
            });
        }
        Ok(graph)
    }

    pub fn layer_stack(&self) -> &LayerStack {
        &self.layers
    }

    pub fn len(&self) -> usize {
        self.resources.len()
    }

    pub fn is_empty(&self) -> bool {
        self.resources.is_empty()
    }

    pub fn contains(&self, id: &ResourceId) -> bool {
        self.resources.contains_key(id)
    }

    pub fn get(&self, id: &ResourceId) -> Option<&Resource> {
        self.resources.get(id)
    }

    pub fn resources(&self) -> impl Iterator<Item = &Resource> {
        self.resources.values()
    }

    pub fn edges(&self) -> impl Iterator<Item = DependencyEdge> + '_ {
        self.dependees.iter().flat_map(|(dependent, dependees)| {
            dependees.iter().map(move |dependee| DependencyEdge {
                dependent: dependent.clone(),
                dependee: dependee.clone(),
            })
        })
    }

    pub fn is_tombstoned(&self, id: &ResourceId) -> bool {
        self.tombstoned.contains(id)
    }

    fn validate_resource(&self, resource: &Resource) -> Result<(), GraphError> {
        if resource.id.as_str().is_empty() {
            return Err(GraphError::InvalidResource {
                id: resource.id.clone(),
                reason: "id must be non-empty".into(),
            });
        }
        if !self.layers.contains(&resource.layer) {
            return Err(GraphError::InvalidResource {
                id: resource.id.clone(),
                reason: format!("unknown layer {}", resource.layer),
            });
        }
        if resource.locus == Locus::Cloud && resource.provider.is_none() {
            return Err(GraphError::InvalidResource {
                id: resource.id.clone(),
                reason: "cloud resources require a provider reference".into(),
            });
        }
        Ok(())
    }

    fn insert_resource(&mut self, resource: Resource) -> Result<(), GraphError> {
        self.validate_resource(&resource)?;
        if self.resources.contains_key(&resource.id) {
            return Err(GraphError::DuplicateResourceId(resource.id));
        }
        self.dependees.insert(resource.id.clone(), BTreeSet::new());
        self.dependents.insert(resource.id.clone(), BTreeSet::new());
        self.resources.insert(resource.id.clone(), resource);
        Ok(())
    }

    /// Adds a resource; the id must not already be present.
    pub fn add_resource(&mut self, resource: Resource) -> Result<(), GraphError> {
        self.insert_resource(resource)
    }

    /// Marks a resource retired without removing it, keeping every record
    /// that references it resolvable.
    pub fn tombstone(&mut self, id: &ResourceId) -> Result<(), GraphError> {
        if !self.contains(id) {
            return Err(GraphError::MissingResource(id.clone()));
        }
        self.tombstoned.insert(id.clone());
        Ok(())
    }

    fn check_edge_endpoints(&self, edge: &DependencyEdge) -> Result<(), GraphError> {
        if !self.contains(&edge.dependent) {
            return Err(GraphError::MissingResource(edge.dependent.clone()));
        }
        if !self.contains(&edge.dependee) {
            return Err(GraphError::MissingResource(edge.dependee.clone()));
        }
        Ok(())
    }

    fn insert_edge_unchecked(&mut self, edge: DependencyEdge) {
        self.dependees
            .entry(edge.dependent.clone())
            .or_default()
            .insert(edge.dependee.clone());
        self.dependents.entry(edge.dependee).or_default().insert(edge.dependent);
    }

    /// Kahn's algorithm over the already-inserted edges; returns one of the
    /// offending edges when a cycle exists.
    fn find_cycle_edge(&self, edges: &[DependencyEdge]) -> Option<DependencyEdge> {
        let mut indegree: BTreeMap<&ResourceId, usize> =
            self.resources.keys().map(|id| (id, 0)).collect();
        for targets in self.dependees.values() {
            for dependee in targets {
                *indegree.get_mut(dependee).expect("endpoint present") += 1;
            }
        }
        let mut queue: VecDeque<&ResourceId> = indegree
            .iter()
            .filter(|(_, deg)| **deg == 0)
            .map(|(id, _)| *id)
            .collect();
        let mut seen = 0usize;
        while let Some(id) = queue.pop_front() {
            seen += 1;
            for dependee in &self.dependees[id] {
                let deg = indegree.get_mut(dependee).expect("endpoint present");
                *deg -= 1;
                if *deg == 0 {
                    queue.push_back(dependee);
                }
            }
        }
        if seen == self.resources.len() {
            return None;
        }
        // Some edge participates in a cycle; self-edges qualify immediately.
        edges
            .iter()
            .find(|e| e.dependent == e.dependee || self.reachable(&e.dependee, &e.dependent))
            .cloned()
    }

    /// Checks an edge without inserting it: endpoints must exist and the
    /// edge must not close a cycle.
    pub fn can_add_dependency(&self, edge: &DependencyEdge) -> Result<(), GraphError> {
        self.check_edge_endpoints(edge)?;
        if edge.dependent == edge.dependee
            || self.reachable(&edge.dependee, &edge.dependent)
        {
            return Err(GraphError::Cycle {
                dependent: edge.dependent.clone(),
                dependee: edge.dependee.clone(),
            });
        }
        Ok(())
    }

    /// Adds a dependency edge, rejecting anything that would close a cycle.
    pub fn add_dependency(&mut self, edge: DependencyEdge) -> Result<(), GraphError> {
        self.can_add_dependency(&edge)?;
        self.insert_edge_unchecked(edge);
        Ok(())
    }

    /// True when `to` is transitively utilized by `from`.
    fn reachable(&self, from: &ResourceId, to: &ResourceId) -> bool {
        if from == to {
            return true;
        }
        let mut seen = BTreeSet::new();
        let mut stack = vec![from];
        while let Some(id) = stack.pop() {
            if let Some(next) = self.dependees.get(id) {
                for dependee in next {
                    if dependee == to {
                        return true;
                    }
                    if seen.insert(dependee) {
                        stack.push(dependee);
                    }
                }
            }
        }
        false
    }

    fn closure(
        &self,
        id: &ResourceId,
        edges: &BTreeMap<ResourceId, BTreeSet<ResourceId>>,
    ) -> Result<BTreeSet<ResourceId>, GraphError> {
        if !self.contains(id) {
            return Err(GraphError::MissingResource(id.clone()));
        }
        let mut out = BTreeSet::new();
        out.insert(id.clone());
        let mut stack = vec![id.clone()];
        while let Some(current) = stack.pop() {
            if let Some(next) = edges.get(&current) {
                for neighbor in next {
                    if out.insert(neighbor.clone()) {
                        stack.push(neighbor.clone());
                    }
                }
            }
        }
        Ok(out)
    }

    /// Every resource built (directly or indirectly) upon `id`, plus `id`
    /// itself: the set damaged if `id` is compromised.
    pub fn dependents_closure(&self, id: &ResourceId) -> Result<BTreeSet<ResourceId>, GraphError> {
        self.closure(id, &self.dependents)
    }

    /// Everything `id` transitively utilizes, plus `id` itself.
    pub fn dependees_closure(&self, id: &ResourceId) -> Result<BTreeSet<ResourceId>, GraphError> {
        self.closure(id, &self.dependees)
    }

    /// Distinct layers of the dependents closure: the layers the impact of a
    /// compromise of `id` can reach.
    pub fn impact_layers(&self, id: &ResourceId) -> Result<BTreeSet<Layer>, GraphError> {
        let closure = self.dependents_closure(id)?;
        Ok(closure
            .iter()
            .filter_map(|member| self.resources.get(member))
            .map(|resource| resource.layer.clone())
            .collect())
    }

    /// Organizations touched if `id` is compromised: owners of every closure
    /// member plus organizations whose subscriptions cover a closure member.
    pub fn affected_orgs(
        &self,
        id: &ResourceId,
        subscriptions: &[CloudSubscription],
    ) -> Result<BTreeSet<OrgId>, GraphError> {
        let closure = self.dependents_closure(id)?;
        let mut orgs: BTreeSet<OrgId> = closure
            .iter()
            .filter_map(|member| self.resources.get(member))
            .map(|resource| resource.owner_org.clone())
            .collect();
        let providers: BTreeSet<&str> = closure
            .iter()
            .filter_map(|member| self.resources.get(member))
            .filter_map(|resource| resource.provider.as_deref())
            .collect();
        for sub in subscriptions {
            if providers.contains(sub.service.as_str()) {
                orgs.insert(sub.org.clone());
            }
        }
        Ok(orgs)
    }

    /// Shortest utilization path `from -> ... -> to` along dependency edges,
    /// justifying why `from`'s owner cares about `to`. Deterministic: BFS
    /// with ordered adjacency.
    pub fn dependency_path(
        &self,
        from: &ResourceId,
        to: &ResourceId,
    ) -> Result<Option<Vec<ResourceId>>, GraphError> {
        if !self.contains(from) {
            return Err(GraphError::MissingResource(from.clone()));
        }
        if !self.contains(to) {
            return Err(GraphError::MissingResource(to.clone()));
        }
        if from == to {
            return Ok(Some(vec![from.clone()]));
        }
        let mut predecessor: BTreeMap<ResourceId, ResourceId> = BTreeMap::new();
        let mut queue = VecDeque::from([from.clone()]);
        while let Some(current) = queue.pop_front() {
            if let Some(next) = self.dependees.get(&current) {
                for neighbor in next {
                    if neighbor != from && !predecessor.contains_key(neighbor) {
                        predecessor.insert(neighbor.clone(), current.clone());
                        if neighbor == to {
                            let mut path = vec![to.clone()];
                            let mut cursor = to;
                            while let Some(prev) = predecessor.get(cursor) {
                                path.push(prev.clone());
                                cursor = prev;
                            }
                            path.reverse();
                            return Ok(Some(path));
                        }
                        queue.push_back(neighbor.clone());
                    }
                }
            }
        }
        Ok(None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn resource(id: &str, layer: &str, org: &str) -> Resource {
        Resource {
            id: id.into(),
            name: id.to_string(),
            layer: layer.into(),
            owner_org: org.into(),
            locus: Locus::Local,
            provider: None,
        }
    }

    fn edge(dependent: &str, dependee: &str) -> DependencyEdge {
        DependencyEdge { dependent: dependent.into(), dependee: dependee.into() }
    }

    fn ids(values: &[&str]) -> BTreeSet<ResourceId> {
        values.iter().map(|v| ResourceId::from(*v)).collect()
    }

    /// Oracle: enumerate every simple path by depth-first search and collect
    /// reachable endpoints. Only viable on small graphs.
    fn enumerate_reachable(
        edges: &[(&str, &str)],
        start: &str,
        reversed: bool,
    ) -> BTreeSet<ResourceId> {
        let mut out = BTreeSet::new();
        out.insert(ResourceId::from(start));
        let mut stack: Vec<Vec<String>> = vec![vec![start.to_string()]];
        while let Some(path) = stack.pop() {
            let last = path.last().unwrap().clone();
            for (a, b) in edges {
                let (src, dst) = if reversed { (*b, *a) } else { (*a, *b) };
                if src == last && !path.iter().any(|p| p == dst) {
                    out.insert(ResourceId::from(dst));
                    let mut next = path.clone();
                    next.push(dst.to_string());
                    stack.push(next);
                }
            }
        }
        out
    }

    #[test]
    fn add_resource_then_query() {
        let mut graph = DependencyGraph::default();
        graph.add_resource(resource("r1", "Service", "orgA")).unwrap();
        assert_eq!(graph.len(), 1);
        assert!(graph.get(&"r1".into()).is_some());
    }

    #[test]
    fn duplicate_resource_rejected() {
        let mut graph = DependencyGraph::default();
        graph.add_resource(resource("r1", "Service", "orgA")).unwrap();
        assert_eq!(
            graph.add_resource(resource("r1", "Service", "orgA")),
            Err(GraphError::DuplicateResourceId("r1".into()))
        );
    }

    #[test]
    fn cloud_resource_requires_provider() {
        let mut graph = DependencyGraph::default();
        let mut r = resource("c1", "Service", "orgA");
        r.locus = Locus::Cloud;
        assert!(matches!(
            graph.add_resource(r),
            Err(GraphError::InvalidResource { .. })
        ));
    }

    #[test]
    fn unknown_layer_rejected() {
        let mut graph = DependencyGraph::default();
        assert!(matches!(
            graph.add_resource(resource("r1", "Quantum", "orgA")),
            Err(GraphError::InvalidResource { .. })
        ));
    }

    #[test]
    fn edge_accepted_and_cycles_rejected() {
        let mut graph = DependencyGraph::default();
        graph.add_resource(resource("a", "Service", "orgA")).unwrap();
        graph.add_resource(resource("b", "Platform", "orgA")).unwrap();
        graph.add_dependency(edge("a", "b")).unwrap();
        assert!(matches!(
            graph.add_dependency(edge("b", "a")),
            Err(GraphError::Cycle { .. })
        ));
        assert!(matches!(
            graph.add_dependency(edge("a", "a")),
            Err(GraphError::Cycle { .. })
        ));
    }

    #[test]
    fn edge_with_missing_endpoint() {
        let mut graph = DependencyGraph::default();
        graph.add_resource(resource("a", "Service", "orgA")).unwrap();
        assert_eq!(
            graph.add_dependency(edge("a", "ghost")),
            Err(GraphError::MissingResource("ghost".into()))
        );
    }

    #[test]
    fn closure_isolated_node() {
        let mut graph = DependencyGraph::default();
        graph.add_resource(resource("x", "Data", "orgA")).unwrap();
        assert_eq!(graph.dependents_closure(&"x".into()).unwrap(), ids(&["x"]));
        assert_eq!(graph.dependees_closure(&"x".into()).unwrap(), ids(&["x"]));
    }

    #[test]
    fn closure_chain_matches_path_enumeration() {
        // D -> S -> P
        let mut graph = DependencyGraph::default();
        graph.add_resource(resource("d", "Data", "orgA")).unwrap();
        graph.add_resource(resource("s", "Service", "orgA")).unwrap();
        graph.add_resource(resource("p", "Platform", "orgB")).unwrap();
        graph.add_dependency(edge("d", "s")).unwrap();
        graph.add_dependency(edge("s", "p")).unwrap();

        let oracle = enumerate_reachable(&[("d", "s"), ("s", "p")], "p", true);
        assert_eq!(oracle, ids(&["p", "s", "d"]));
        assert_eq!(graph.dependents_closure(&"p".into()).unwrap(), oracle);

        let oracle = enumerate_reachable(&[("d", "s"), ("s", "p")], "d", false);
        assert_eq!(oracle, ids(&["d", "s", "p"]));
        assert_eq!(graph.dependees_closure(&"d".into()).unwrap(), oracle);
    }

    #[test]
    fn closure_diamond_matches_path_enumeration() {
        // D -> S1 -> P, D -> S2 -> P
        let mut graph = DependencyGraph::default();
        for (id, layer) in [("d", "Data"), ("s1", "Service"), ("s2", "Service"), ("p", "Platform")]
        {
            graph.add_resource(resource(id, layer, "orgA")).unwrap();
        }
        for (a, b) in [("d", "s1"), ("d", "s2"), ("s1", "p"), ("s2", "p")] {
            graph.add_dependency(edge(a, b)).unwrap();
        }
        let oracle = enumerate_reachable(
            &[("d", "s1"), ("d", "s2"), ("s1", "p"), ("s2", "p")],
            "p",
            true,
        );
        assert_eq!(oracle, ids(&["p", "s1", "s2", "d"]));
        assert_eq!(graph.dependents_closure(&"p".into()).unwrap(), oracle);
    }

    #[test]
    fn dependees_of_hardware_leaf() {
        let mut graph = DependencyGraph::default();
        graph.add_resource(resource("hw", "Hardware", "orgA")).unwrap();
        graph.add_resource(resource("os", "OperatingSystem", "orgA")).unwrap();
        graph.add_dependency(edge("os", "hw")).unwrap();
        assert_eq!(graph.dependees_closure(&"hw".into()).unwrap(), ids(&["hw"]));
    }

    #[test]
    fn impact_layers_from_closure() {
        let mut graph = DependencyGraph::default();
        graph.add_resource(resource("d", "Data", "orgA")).unwrap();
        graph.add_resource(resource("s", "Service", "orgA")).unwrap();
        graph.add_resource(resource("p", "Platform", "orgB")).unwrap();
        graph.add_dependency(edge("d", "s")).unwrap();
        graph.add_dependency(edge("s", "p")).unwrap();
        let layers = graph.impact_layers(&"p".into()).unwrap();
        let expected: BTreeSet<Layer> =
            ["Platform", "Service", "Data"].into_iter().map(Layer::from).collect();
        assert_eq!(layers, expected);
    }

    #[test]
    fn impact_layers_isolated_and_deduplicated() {
        let mut graph = DependencyGraph::default();
        graph.add_resource(resource("d", "Data", "orgA")).unwrap();
        assert_eq!(
            graph.impact_layers(&"d".into()).unwrap(),
            [Layer::from("Data")].into_iter().collect()
        );

        graph.add_resource(resource("s1", "Service", "orgA")).unwrap();
        graph.add_resource(resource("s2", "Service", "orgA")).unwrap();
        graph.add_resource(resource("p", "Platform", "orgA")).unwrap();
        graph.add_dependency(edge("s1", "p")).unwrap();
        graph.add_dependency(edge("s2", "p")).unwrap();
        let layers = graph.impact_layers(&"p".into()).unwrap();
        assert_eq!(layers.len(), 2); // Service counted once
    }

    #[test]
    fn affected_orgs_owners_and_subscribers() {
        let mut graph = DependencyGraph::default();
        graph.add_resource(resource("d", "Data", "orgA")).unwrap();
        let mut svc = resource("s", "Service", "orgB");
        svc.locus = Locus::Cloud;
        svc.provider = Some("acme/storage".into());
        graph.add_resource(svc).unwrap();
        graph.add_dependency(edge("d", "s")).unwrap();

        let subs = vec![CloudSubscription {
            org: "orgC".into(),
            service: "acme/storage".into(),
            contract: "standard".into(),
            usage_records: vec![],
            extra: serde_json::Map::new(),
        }];
        let orgs = graph.affected_orgs(&"s".into(), &subs).unwrap();
        let expected: BTreeSet<OrgId> =
            ["orgA", "orgB", "orgC"].into_iter().map(OrgId::from).collect();
        assert_eq!(orgs, expected);

        // no subscribers, single owner
        let mut lone = DependencyGraph::default();
        lone.add_resource(resource("x", "Data", "orgZ")).unwrap();
        assert_eq!(
            lone.affected_orgs(&"x".into(), &[]).unwrap(),
            [OrgId::from("orgZ")].into_iter().collect()
        );
    }

    #[test]
    fn missing_resource_errors() {
        let graph = DependencyGraph::default();
        let ghost: ResourceId = "ghost".into();
        assert!(matches!(
            graph.dependents_closure(&ghost),
            Err(GraphError::MissingResource(_))
        ));
        assert!(matches!(graph.impact_layers(&ghost), Err(GraphError::MissingResource(_))));
    }

    #[test]
    fn dependency_path_shortest() {
        let mut graph = DependencyGraph::default();
        for (id, layer) in [("d", "Data"), ("s", "Service"), ("p", "Platform")] {
            graph.add_resource(resource(id, layer, "orgA")).unwrap();
        }
        graph.add_dependency(edge("d", "s")).unwrap();
        graph.add_dependency(edge("s", "p")).unwrap();
        graph.add_dependency(edge("d", "p")).unwrap();
        let path = graph.dependency_path(&"d".into(), &"p".into()).unwrap().unwrap();
        assert_eq!(path, vec![ResourceId::from("d"), ResourceId::from("p")]);
        assert_eq!(
            graph.dependency_path(&"p".into(), &"d".into()).unwrap(),
            None
        );
    }

    #[test]
    fn from_parts_detects_cycles() {
        let resources =
            vec![resource("a", "Service", "o"), resource("b", "Platform", "o")];
        let err = DependencyGraph::from_parts(
            LayerStack::default(),
            resources,
            vec![edge("a", "b"), edge("b", "a")],
        )
        .unwrap_err();
        assert!(matches!(err, GraphError::Cycle { .. }));
    }

    #[test]
    fn tombstone_keeps_resource_resolvable() {
        let mut graph = DependencyGraph::default();
        graph.add_resource(resource("r", "Service", "orgA")).unwrap();
        graph.tombstone(&"r".into()).unwrap();
        assert!(graph.is_tombstoned(&"r".into()));
        assert!(graph.contains(&"r".into()));
        assert_eq!(
            graph.add_resource(resource("r", "Service", "orgA")),
            Err(GraphError::DuplicateResourceId("r".into()))
        );
    }

    #[test]
    fn layer_stack_validation() {
        assert!(LayerStack::new(vec!["one".into()]).is_err());
        assert!(LayerStack::new(vec!["a".into(), "a".into()]).is_err());
        let stack = LayerStack::new(vec!["low".into(), "high".into()]).unwrap();
        assert_eq!(stack.rank(&"low".into()), Some(0));
        assert_eq!(stack.rank(&"high".into()), Some(1));
    }
}
