//! Security-level scoring: the public CVSS v2 base equation for single
//! resources, plus a worst-case aggregate over the dependees closure for
//! services built from several resources.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Map;
use thiserror::Error;

use crate::graph::{DependencyGraph, GraphError, Locus, ResourceId};
use crate::records::{AssessmentRule, OrgId, SecurityLevelReport};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScoreError {
    #[error("invalid score vector: {0}")]
    InvalidVector(String),
    #[error("score value {0} out of range")]
    OutOfRange(String),
    #[error("no score for component resource {0}")]
    MissingComponentScore(ResourceId),
    #[error("no rules applied to any resource")]
    NoApplicableRules,
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Access Vector metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccessVector {
    Local,
    Adjacent,
    Network,
}

impl AccessVector {
    pub fn weight(&self) -> f64 {
        match self {
            AccessVector::Local => 0.395,
            AccessVector::Adjacent => 0.646,
            AccessVector::Network => 1.0,
        }
    }

    pub fn token(&self) -> &'static str {
        match self {
            AccessVector::Local => "L",
            AccessVector::Adjacent => "A",
            AccessVector::Network => "N",
        }
    }
}

/// Access Complexity metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccessComplexity {
    High,
    Medium,
    Low,
}

impl AccessComplexity {
    pub fn weight(&self) -> f64 {
        match self {
            AccessComplexity::High => 0.35,
            AccessComplexity::Medium => 0.61,
            AccessComplexity::Low => 0.71,
        }
    }

    pub fn token(&self) -> &'static str {
        match self {
            AccessComplexity::High => "H",
            AccessComplexity::Medium => "M",
            AccessComplexity::Low => "L",
        }
    }
}

/// Authentication metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Authentication {
    Multiple,
    Single,
    None,
}

impl Authentication {
    pub fn weight(&self) -> f64 {
        match self {
            Authentication::Multiple => 0.45,
            Authentication::Single => 0.56,
            Authentication::None => 0.704,
        }
    }

    pub fn token(&self) -> &'static str {
        match self {
            Authentication::Multiple => "M",
            Authentication::Single => "S",
            Authentication::None => "N",
        }
    }
}

/// Impact sub-metric shared by confidentiality, integrity and availability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImpactMetric {
    None,
    Partial,
    Complete,
}

impl ImpactMetric {
    pub fn weight(&self) -> f64 {
        match self {
            ImpactMetric::None => 0.0,
            ImpactMetric::Partial => 0.275,
            ImpactMetric::Complete => 0.660,
        }
    }

    pub fn token(&self) -> &'static str {
        match self {
            ImpactMetric::None => "N",
            ImpactMetric::Partial => "P",
            ImpactMetric::Complete => "C",
        }
    }
}

/// The six-component base vector, e.g. `AV:N/AC:L/Au:N/C:C/I:C/A:C`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreVector {
    pub access_vector: AccessVector,
    pub access_complexity: AccessComplexity,
    pub authentication: Authentication,
    pub conf_impact: ImpactMetric,
    pub integ_impact: ImpactMetric,
    pub avail_impact: ImpactMetric,
}

impl ScoreVector {
    /// Every one of the 3^6 = 729 possible vectors, in a fixed sweep order.
    pub fn all() -> Vec<ScoreVector> {
        let avs = [AccessVector::Local, AccessVector::Adjacent, AccessVector::Network];
        let acs = [AccessComplexity::High, AccessComplexity::Medium, AccessComplexity::Low];
        let aus = [Authentication::Multiple, Authentication::Single, Authentication::None];
        let impacts = [ImpactMetric::None, ImpactMetric::Partial, ImpactMetric::Complete];
        let mut out = Vec::with_capacity(729);
        for av in avs {
            for ac in acs {
                for au in aus {
                    for c in impacts {
                        for i in impacts {
                            for a in impacts {
                                out.push(ScoreVector {
                                    access_vector: av,
                                    access_complexity: ac,
                                    authentication: au,
                                    conf_impact: c,
                                    integ_impact: i,
                                    avail_impact: a,
                                });
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

impl fmt::Display for ScoreVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "AV:{}/AC:{}/Au:{}/C:{}/I:{}/A:{}",
            self.access_vector.token(),
            self.access_complexity.token(),
            self.authentication.token(),
            self.conf_impact.token(),
            self.integ_impact.token(),
            self.avail_impact.token(),
        )
    }
}

impl FromStr for ScoreVector {
    type Err = ScoreError;

    /// Accepts the six components in any order, each exactly once.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut av = None;
        let mut ac = None;
        let mut au = None;
        let mut c = None;
        let mut i = None;
        let mut a = None;
        for part in s.split('/') {
            let (metric, value) = part
                .split_once(':')
                .ok_or_else(|| ScoreError::InvalidVector(format!("bad component {part:?}")))?;
            let dup = match (metric, value) {
                ("AV", "L") => av.replace(AccessVector::Local).is_some(),
                ("AV", "A") => av.replace(AccessVector::Adjacent).is_some(),
                ("AV", "N") => av.replace(AccessVector::Network).is_some(),
                ("AC", "H") => ac.replace(AccessComplexity::High).is_some(),
                ("AC", "M") => ac.replace(AccessComplexity::Medium).is_some(),
                ("AC", "L") => ac.replace(AccessComplexity::Low).is_some(),
                ("Au", "M") => au.replace(Authentication::Multiple).is_some(),
                ("Au", "S") => au.replace(Authentication::Single).is_some(),
                ("Au", "N") => au.replace(Authentication::None).is_some(),
                ("C", "N") => c.replace(ImpactMetric::None).is_some(),
                ("C", "P") => c.replace(ImpactMetric::Partial).is_some(),
                ("C", "C") => c.replace(ImpactMetric::Complete).is_some(),
                ("I", "N") => i.replace(ImpactMetric::None).is_some(),
                ("I", "P") => i.replace(ImpactMetric::Partial).is_some(),
                ("I", "C") => i.replace(ImpactMetric::Complete).is_some(),
                ("A", "N") => a.replace(ImpactMetric::None).is_some(),
                ("A", "P") => a.replace(ImpactMetric::Partial).is_some(),
                ("A", "C") => a.replace(ImpactMetric::Complete).is_some(),
                _ => {
                    return Err(ScoreError::InvalidVector(format!("bad component {part:?}")));
                }
            };
            if dup {
                return Err(ScoreError::InvalidVector(format!("duplicate component {metric}")));
            }
        }
        Ok(ScoreVector {
            access_vector: av
                .ok_or_else(|| ScoreError::InvalidVector("missing AV".into()))?,
            access_complexity: ac
                .ok_or_else(|| ScoreError::InvalidVector("missing AC".into()))?,
            authentication: au
                .ok_or_else(|| ScoreError::InvalidVector("missing Au".into()))?,
            conf_impact: c.ok_or_else(|| ScoreError::InvalidVector("missing C".into()))?,
            integ_impact: i.ok_or_else(|| ScoreError::InvalidVector("missing I".into()))?,
            avail_impact: a.ok_or_else(|| ScoreError::InvalidVector("missing A".into()))?,
        })
    }
}

/// How a score value was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreMethod {
    Cvss2Base,
    AggregateMax,
}

impl fmt::Display for ScoreMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScoreMethod::Cvss2Base => "cvss2_base",
            ScoreMethod::AggregateMax => "aggregate_max",
        })
    }
}

/// A score in [0.0, 10.0], one decimal, tagged with its method.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecurityScore {
    pub value: f64,
    pub method: ScoreMethod,
}

impl SecurityScore {
    pub fn new(value: f64, method: ScoreMethod) -> Result<Self, ScoreError> {
        if !value.is_finite() || !(0.0..=10.0).contains(&value) {
            return Err(ScoreError::OutOfRange(format!("{value}")));
        }
        Ok(SecurityScore { value: round_one_decimal(value), method })
    }
}

impl fmt::Display for SecurityScore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.1}", self.value)
    }
}

/// Round half up to one decimal, as the v2 base equation specifies.
fn round_one_decimal(x: f64) -> f64 {
    (x * 10.0 + 0.5).floor() / 10.0
}

/// The public CVSS v2 base equation.
pub fn cvss_base(vector: &ScoreVector) -> SecurityScore {
    let impact = 10.41
        * (1.0
            - (1.0 - vector.conf_impact.weight())
                * (1.0 - vector.integ_impact.weight())
                * (1.0 - vector.avail_impact.weight()));
    let exploitability = 20.0
        * vector.access_vector.weight()
        * vector.access_complexity.weight()
        * vector.authentication.weight();
    let f = if impact == 0.0 { 0.0 } else { 1.176 };
    let base = (0.6 * impact + 0.4 * exploitability - 1.5) * f;
    SecurityScore {
        value: round_one_decimal(base),
        method: ScoreMethod::Cvss2Base,
    }
}

/// Worst-case (maximum) score over everything the service transitively
/// utilizes, itself included.
///
/// Every closure member must be scored unless `skip_unscored` is set; with
/// the flag, unscored members are left out, but at least one member must
/// remain scored.
pub fn aggregate_service_score(
    graph: &DependencyGraph,
    service: &ResourceId,
    component_scores: &BTreeMap<ResourceId, SecurityScore>,
    skip_unscored: bool,
) -> Result<SecurityScore, ScoreError> {
    let closure = graph.dependees_closure(service)?;
    let mut best: Option<f64> = None;
    for member in &closure {
        match component_scores.get(member) {
            Some(score) => {
                best = Some(best.map_or(score.value, |b: f64| b.max(score.value)));
            }
            None if skip_unscored => {}
            None => return Err(ScoreError::MissingComponentScore(member.clone())),
        }
    }
    let value = best.ok_or_else(|| ScoreError::MissingComponentScore(service.clone()))?;
    SecurityScore::new(value, ScoreMethod::AggregateMax)
}

/// True when the rule's applicability covers the resource. An empty
/// applicability list is read as organization-wide.
fn rule_applies(rule: &AssessmentRule, resource: &crate::graph::Resource) -> bool {
    if rule.applicability.is_empty() {
        return true;
    }
    rule.applicability.iter().any(|token| {
        token == resource.id.as_str()
            || token == &resource.name
            || resource.provider.as_deref() == Some(token.as_str())
    })
}

/// Applies assessment rules to an organization's resources and reports one
/// (metric, value) per applied rule, local and cloud resources in separate
/// sections. The value is the count of resources the rule applied to in
/// that section.
pub fn assess(
    org: &OrgId,
    graph: &DependencyGraph,
    rules: &[AssessmentRule],
    issuer: &str,
) -> Result<SecurityLevelReport, ScoreError> {
    let owned: Vec<_> = graph.resources().filter(|r| &r.owner_org == org).collect();
    let mut evaluation = Vec::new();
    for rule in rules {
        for section in [Locus::Local, Locus::Cloud] {
            let count = owned
                .iter()
                .filter(|r| r.locus == section && rule_applies(rule, r))
                .count();
            if count > 0 {
                evaluation.push(crate::records::MetricValue {
                    metric: rule.id.clone(),
                    value: count as f64,
                    section,
                });
            }
        }
    }
    if evaluation.is_empty() {
        return Err(ScoreError::NoApplicableRules);
    }
    Ok(SecurityLevelReport {
        id: format!("slr-{org}"),
        subject: org.to_string(),
        certificate: None,
        evaluation,
        issuer: issuer.to_string(),
        extra: Map::new(),
    })
}
