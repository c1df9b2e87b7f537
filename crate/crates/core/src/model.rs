//! Domain model: agent types, instances, assignments and the utility /
//! social-welfare arithmetic every other module builds on.
//!
//! Agents are identified by their index in the instance. An [`Assignment`]
//! maps each agent to the index of one of the original locations, so a
//! relocated profile is always a permutation of the original one.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// Absolute tolerance used to classify welfare and utility ties.
pub const EPS: f64 = 1e-9;

/// Private preference of an agent towards the facility.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PreferenceType {
    /// Wants to be as close to the facility as possible.
    #[serde(rename = "L")]
    Like,
    /// Wants to be as far from the facility as possible.
    #[serde(rename = "H")]
    Dislike,
}

impl PreferenceType {
    pub fn token(self) -> &'static str {
        match self {
            PreferenceType::Like => "L",
            PreferenceType::Dislike => "H",
        }
    }

    /// The only alternative report available to an agent of this type.
    pub fn flipped(self) -> Self {
        match self {
            PreferenceType::Like => PreferenceType::Dislike,
            PreferenceType::Dislike => PreferenceType::Like,
        }
    }
}

impl fmt::Display for PreferenceType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for PreferenceType {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "L" => Ok(PreferenceType::Like),
            "H" => Ok(PreferenceType::Dislike),
            other => Err(ModelError::UnknownType(other.to_string())),
        }
    }
}

/// A reported type vector. May differ from the instance's true types.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PreferenceProfile(Vec<PreferenceType>);

impl PreferenceProfile {
    pub fn new(types: Vec<PreferenceType>) -> Self {
        PreferenceProfile(types)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, agent: usize) -> PreferenceType {
        self.0[agent]
    }

    pub fn as_slice(&self) -> &[PreferenceType] {
        &self.0
    }

    /// Same profile with `agent`'s report replaced.
    pub fn with_report(&self, agent: usize, report: PreferenceType) -> Self {
        let mut types = self.0.clone();
        types[agent] = report;
        PreferenceProfile(types)
    }

    pub fn like_count(&self) -> usize {
        self.0.iter().filter(|t| **t == PreferenceType::Like).count()
    }
}

impl FromStr for PreferenceProfile {
    type Err = ModelError;

    /// Parses a compact token string such as `"LHLHL"`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.chars()
            .map(|c| c.to_string().parse())
            .collect::<Result<Vec<_>, _>>()
            .map(PreferenceProfile)
    }
}

impl fmt::Display for PreferenceProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for t in &self.0 {
            f.write_str(t.token())?;
        }
        Ok(())
    }
}

/// A facility location game: segment `[0, d]`, public positions, private types.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InstanceDoc", into = "InstanceDoc")]
pub struct Instance {
    d: f64,
    positions: Vec<f64>,
    types: Vec<PreferenceType>,
}

impl Instance {
    pub fn new(d: f64, positions: Vec<f64>, types: Vec<PreferenceType>) -> Result<Self, ModelError> {
        if !(d.is_finite() && d > 0.0) {
            return Err(ModelError::InvalidSegment(d));
        }
        if positions.is_empty() {
            return Err(ModelError::EmptyInstance);
        }
        if positions.len() != types.len() {
            return Err(ModelError::LengthMismatch {
                positions: positions.len(),
                types: types.len(),
            });
        }
        if let Some((agent, &x)) = positions
            .iter()
            .enumerate()
            .find(|(_, x)| !(x.is_finite() && (0.0..=d).contains(*x)))
        {
            return Err(ModelError::PositionOutOfRange { agent, x, d });
        }
        Ok(Instance { d, positions, types })
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn n(&self) -> usize {
        self.positions.len()
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn position(&self, agent: usize) -> f64 {
        self.positions[agent]
    }

    pub fn types(&self) -> &[PreferenceType] {
        &self.types
    }

    /// The truthful report profile.
    pub fn truth(&self) -> PreferenceProfile {
        PreferenceProfile(self.types.clone())
    }

    pub fn check_facility(&self, y: f64) -> Result<(), ModelError> {
        if y.is_finite() && (0.0..=self.d).contains(&y) {
            Ok(())
        } else {
            Err(ModelError::FacilityOutOfRange { y, d: self.d })
        }
    }

    pub fn check_profile(&self, profile: &PreferenceProfile) -> Result<(), ModelError> {
        if profile.len() == self.n() {
            Ok(())
        } else {
            Err(ModelError::DimensionMismatch {
                expected: self.n(),
                found: profile.len(),
            })
        }
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Parses in two steps so that malformed documents and documents
    /// describing an invalid instance are reported differently.
    pub fn load_json(text: &str) -> Result<Self, LoadError> {
        let doc: InstanceDoc = serde_json::from_str(text).map_err(LoadError::Malformed)?;
        Instance::try_from(doc).map_err(LoadError::Invalid)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serialization is infallible")
    }
}

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("malformed instance document: {0}")]
    Malformed(serde_json::Error),
    #[error("invalid instance: {0}")]
    Invalid(ModelError),
}

/// On-disk shape: `{"d": 8.0, "agents": [{"x": 0.0, "type": "L"}, ...]}`.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceDoc {
    d: f64,
    agents: Vec<AgentDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AgentDoc {
    x: f64,
    #[serde(rename = "type")]
    kind: PreferenceType,
}

impl TryFrom<InstanceDoc> for Instance {
    type Error = ModelError;

    fn try_from(doc: InstanceDoc) -> Result<Self, Self::Error> {
        let (positions, types) = doc.agents.into_iter().map(|a| (a.x, a.kind)).unzip();
        Instance::new(doc.d, positions, types)
    }
}

impl From<Instance> for InstanceDoc {
    fn from(inst: Instance) -> Self {
        InstanceDoc {
            d: inst.d,
            agents: inst
                .positions
                .into_iter()
                .zip(inst.types)
                .map(|(x, kind)| AgentDoc { x, kind })
                .collect(),
        }
    }
}

/// Agent `i` is relocated to original location `perm[i]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Assignment {
    perm: Vec<usize>,
}

impl Assignment {
    pub fn new(perm: Vec<usize>) -> Result<Self, ModelError> {
        let mut seen = vec![false; perm.len()];
        for &p in &perm {
            if p >= perm.len() || std::mem::replace(&mut seen[p], true) {
                return Err(ModelError::NotAPermutation(perm));
            }
        }
        Ok(Assignment { perm })
    }

    pub fn identity(n: usize) -> Self {
        Assignment { perm: (0..n).collect() }
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.perm.iter().enumerate().all(|(i, &p)| i == p)
    }

    /// Index of the original location held by `agent`.
    pub fn slot(&self, agent: usize) -> usize {
        self.perm[agent]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.perm
    }

    pub fn check_for(&self, inst: &Instance) -> Result<(), ModelError> {
        if self.len() == inst.n() {
            Ok(())
        } else {
            Err(ModelError::DimensionMismatch {
                expected: inst.n(),
                found: self.len(),
            })
        }
    }

    /// Coordinate of the location held by `agent`.
    pub fn location(&self, inst: &Instance, agent: usize) -> f64 {
        inst.position(self.perm[agent])
    }

    /// Coordinates held by every agent, in agent order.
    pub fn locations(&self, inst: &Instance) -> Vec<f64> {
        self.perm.iter().map(|&p| inst.position(p)).collect()
    }
}

impl TryFrom<Vec<usize>> for Assignment {
    type Error = ModelError;

    fn try_from(perm: Vec<usize>) -> Result<Self, Self::Error> {
        Assignment::new(perm)
    }
}

impl From<Assignment> for Vec<usize> {
    fn from(a: Assignment) -> Self {
        a.perm
    }
}

/// A facility point together with the locations agents end up holding.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub facility: f64,
    pub assignment: Assignment,
}

impl Outcome {
    pub fn new(facility: f64, assignment: Assignment) -> Self {
        Outcome { facility, assignment }
    }
}

#[inline]
pub(crate) fn raw_utility(y: f64, loc: f64, t: PreferenceType, d: f64) -> f64 {
    match t {
        PreferenceType::Like => d - (loc - y).abs(),
        PreferenceType::Dislike => (loc - y).abs(),
    }
}

/// Utility of an agent of type `t` holding `loc` when the facility sits at `y`.
pub fn utility(y: f64, loc: f64, t: PreferenceType, d: f64) -> Result<f64, ModelError> {
    if !(d.is_finite() && d > 0.0) {
        return Err(ModelError::InvalidSegment(d));
    }
    if !(y.is_finite() && (0.0..=d).contains(&y)) {
        return Err(ModelError::FacilityOutOfRange { y, d });
    }
    if !(loc.is_finite() && (0.0..=d).contains(&loc)) {
        return Err(ModelError::LocationOutOfRange { loc, d });
    }
    Ok(raw_utility(y, loc, t, d))
}

/// `u(0, x, t) + u(d, x, t)`, which is `d` for every location and type.
pub fn endpoint_utility_sum(x: f64, t: PreferenceType, d: f64) -> Result<f64, ModelError> {
    Ok(utility(0.0, x, t, d)? + utility(d, x, t, d)?)
}

/// Sum of utilities at facility `y` when agents hold `asg` and have `types`.
pub(crate) fn welfare_with(inst: &Instance, y: f64, asg: &Assignment, types: &[PreferenceType]) -> f64 {
    asg.as_slice()
        .iter()
        .zip(types)
        .map(|(&slot, &t)| raw_utility(y, inst.position(slot), t, inst.d()))
        .sum()
}

/// Social welfare of `out` under the instance's true types.
pub fn social_welfare(out: &Outcome, inst: &Instance) -> Result<f64, ModelError> {
    out.assignment.check_for(inst)?;
    inst.check_facility(out.facility)?;
    Ok(welfare_with(inst, out.facility, &out.assignment, inst.types()))
}

/// Social welfare of `out` evaluated under an arbitrary (reported) profile.
pub fn social_welfare_under(out: &Outcome, inst: &Instance, profile: &PreferenceProfile) -> Result<f64, ModelError> {
    out.assignment.check_for(inst)?;
    inst.check_profile(profile)?;
    inst.check_facility(out.facility)?;
    Ok(welfare_with(inst, out.facility, &out.assignment, profile.as_slice()))
}

/// Utility of `agent` under its true type in `out`.
pub fn agent_utility(out: &Outcome, inst: &Instance, agent: usize) -> f64 {
    raw_utility(
        out.facility,
        out.assignment.location(inst, agent),
        inst.types()[agent],
        inst.d(),
    )
}
