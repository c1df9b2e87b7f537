//! Facility location mechanisms and the pipelines that pair them with an
//! exchange phase.
//!
//! * [`central_opt`] chooses the facility *and* relocates agents so that
//!   welfare under the reports is maximal. The search only visits facility
//!   points in [`candidate_facilities`] and placements where Like agents take
//!   a consecutive block of the sorted locations, which keeps it at O(n²)
//!   candidates. The agent-level matching is produced by
//!   [`location_permutation`].
//! * [`naive_opt_location`] places the facility at the welfare maximum for
//!   the agents' current locations, ignoring later trades.
//! * [`opt_location_then_ttc`] places the facility where the relocated optimum
//!   would be reached and lets agents trade by TTC.
//! * [`random_endpoints`] puts the facility at `0` or `d` with equal odds.
//!
//! Reports only influence the mechanism. Exchanges and utilities always use
//! the instance's true types.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::exchange::{ttc, ExchangeTrace};
use crate::model::{raw_utility, welfare_with, Assignment, Instance, Outcome, PreferenceProfile, PreferenceType, EPS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MechanismKind {
    /// Optimal facility plus central relocation.
    #[serde(rename = "central-opt")]
    CentralOpt,
    /// Welfare-maximal facility for the current locations, then TTC.
    #[serde(rename = "naive-opt")]
    NaiveOptLocation,
    /// Facility of the relocated optimum, then TTC.
    #[serde(rename = "opt-ttc")]
    OptLocationThenTTC,
    /// Facility at either endpoint with probability 1/2, then TTC.
    #[serde(rename = "random-endpoints")]
    RandomEndpoints,
}

impl MechanismKind {
    pub const ALL: [MechanismKind; 4] = [
        MechanismKind::CentralOpt,
        MechanismKind::NaiveOptLocation,
        MechanismKind::OptLocationThenTTC,
        MechanismKind::RandomEndpoints,
    ];

    pub fn token(self) -> &'static str {
        match self {
            MechanismKind::CentralOpt => "central-opt",
            MechanismKind::NaiveOptLocation => "naive-opt",
            MechanismKind::OptLocationThenTTC => "opt-ttc",
            MechanismKind::RandomEndpoints => "random-endpoints",
        }
    }

    /// Whether the mechanism itself relocates agents.
    pub fn relocates(self) -> bool {
        matches!(self, MechanismKind::CentralOpt)
    }

    pub fn is_randomized(self) -> bool {
        matches!(self, MechanismKind::RandomEndpoints)
    }
}

impl fmt::Display for MechanismKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownMechanism(pub String);

impl fmt::Display for UnknownMechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "unknown mechanism {:?} (expected one of central-opt, naive-opt, opt-ttc, random-endpoints)",
            self.0
        )
    }
}

impl std::error::Error for UnknownMechanism {}

impl FromStr for MechanismKind {
    type Err = UnknownMechanism;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MechanismKind::ALL
            .into_iter()
            .find(|k| k.token() == s)
            .ok_or_else(|| UnknownMechanism(s.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupportPoint {
    pub outcome: Outcome,
    pub probability: f64,
}

/// A finite distribution over outcomes, kept explicit so expectations are exact.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomizedOutcome {
    pub support: Vec<SupportPoint>,
}

impl RandomizedOutcome {
    pub fn total_probability(&self) -> f64 {
        self.support.iter().map(|p| p.probability).sum()
    }

    /// Expected welfare under the instance's true types, before any exchange.
    pub fn expected_welfare(&self, inst: &Instance) -> f64 {
        self.support
            .iter()
            .map(|p| p.probability * welfare_with(inst, p.outcome.facility, &p.outcome.assignment, inst.types()))
            .sum()
    }
}

/// Facility points the optimum can be restricted to: every agent position
/// plus both endpoints, sorted and deduplicated.
pub fn candidate_facilities(inst: &Instance) -> Vec<f64> {
    let mut ys: Vec<f64> = inst.positions().to_vec();
    ys.push(0.0);
    ys.push(inst.d());
    ys.sort_by(f64::total_cmp);
    ys.dedup();
    ys
}

fn by_distance(y: f64, a: f64, b: f64) -> Ordering {
    (a - y).abs().total_cmp(&(b - y).abs())
}

/// Matches agents to designated location slots by distance to `y`.
///
/// Like agents, nearest first, take `like_slots` nearest first; Dislike
/// agents, farthest first, take `dislike_slots` farthest first. Ties are
/// broken by smaller index (agents) and smaller coordinate then index (slots).
pub fn assign_by_distance(
    inst: &Instance,
    reported: &PreferenceProfile,
    y: f64,
    like_slots: &[usize],
    dislike_slots: &[usize],
) -> Result<Assignment, ModelError> {
    inst.check_profile(reported)?;
    inst.check_facility(y)?;
    let x = inst.positions();

    let (mut likes, mut dislikes): (Vec<usize>, Vec<usize>) =
        (0..inst.n()).partition(|&i| reported.get(i) == PreferenceType::Like);
    if likes.len() != like_slots.len() {
        return Err(ModelError::SlotCountMismatch {
            kind: "Like",
            agents: likes.len(),
            slots: like_slots.len(),
        });
    }
    if dislikes.len() != dislike_slots.len() {
        return Err(ModelError::SlotCountMismatch {
            kind: "Dislike",
            agents: dislikes.len(),
            slots: dislike_slots.len(),
        });
    }

    likes.sort_by(|&a, &b| by_distance(y, x[a], x[b]).then(a.cmp(&b)));
    dislikes.sort_by(|&a, &b| by_distance(y, x[b], x[a]).then(a.cmp(&b)));

    let slot_order = |a: &usize, b: &usize| x[*a].total_cmp(&x[*b]).then(a.cmp(b));
    let mut near = like_slots.to_vec();
    near.sort_by(|a, b| by_distance(y, x[*a], x[*b]).then_with(|| slot_order(a, b)));
    let mut far = dislike_slots.to_vec();
    far.sort_by(|a, b| by_distance(y, x[*b], x[*a]).then_with(|| slot_order(a, b)));

    let mut perm = vec![usize::MAX; inst.n()];
    for (agent, slot) in likes.into_iter().zip(near).chain(dislikes.into_iter().zip(far)) {
        perm[agent] = slot;
    }
    Assignment::new(perm)
}

/// Reassigns the locations of `target` so that each reported type keeps the
/// same set of locations but agents closer to `y` (Like) or farther from `y`
/// (Dislike) in the original profile get the correspondingly better ones.
pub fn location_permutation(
    inst: &Instance,
    target: &Assignment,
    reported: &PreferenceProfile,
    y: f64,
) -> Result<Assignment, ModelError> {
    target.check_for(inst)?;
    inst.check_profile(reported)?;
    let mut like_slots = Vec::new();
    let mut dislike_slots = Vec::new();
    for agent in 0..inst.n() {
        match reported.get(agent) {
            PreferenceType::Like => like_slots.push(target.slot(agent)),
            PreferenceType::Dislike => dislike_slots.push(target.slot(agent)),
        }
    }
    assign_by_distance(inst, reported, y, &like_slots, &dislike_slots)
}

/// The welfare-maximal (facility, Like block) pair found by the O(n²) search.
#[derive(Clone, Debug, PartialEq)]
pub struct CentralChoice {
    pub facility: f64,
    /// Welfare under the reports the search was run with.
    pub welfare: f64,
    /// Location indices given to Like reporters, a consecutive block of the
    /// locations sorted by coordinate.
    pub like_slots: Vec<usize>,
    pub dislike_slots: Vec<usize>,
}

/// Location indices sorted by coordinate (stable in index).
fn sorted_slots(inst: &Instance) -> Vec<usize> {
    let x = inst.positions();
    let mut order: Vec<usize> = (0..inst.n()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(a.cmp(&b)));
    order
}

/// Enumerates every candidate facility and every consecutive block of
/// `|L|` sorted locations for the Like reporters.
///
/// Ties keep the first candidate found: smallest facility, then leftmost block.
pub fn central_search(inst: &Instance, reported: &PreferenceProfile) -> Result<CentralChoice, ModelError> {
    inst.check_profile(reported)?;
    Ok(search_blocks(inst, reported, &candidate_facilities(inst)))
}

/// Best Like block with the facility pinned at `y`.
pub fn central_search_at(inst: &Instance, reported: &PreferenceProfile, y: f64) -> Result<CentralChoice, ModelError> {
    inst.check_profile(reported)?;
    inst.check_facility(y)?;
    Ok(search_blocks(inst, reported, &[y]))
}

fn search_blocks(inst: &Instance, reported: &PreferenceProfile, facilities: &[f64]) -> CentralChoice {
    let n = inst.n();
    let d = inst.d();
    let k = reported.like_count();
    let order = sorted_slots(inst);
    let xs: Vec<f64> = order.iter().map(|&s| inst.position(s)).collect();

    let mut best: Option<(f64, f64, usize)> = None;
    for &y in facilities {
        for start in 0..=n - k {
            let welfare: f64 = xs
                .iter()
                .enumerate()
                .map(|(pos, &loc)| {
                    let t = if (start..start + k).contains(&pos) {
                        PreferenceType::Like
                    } else {
                        PreferenceType::Dislike
                    };
                    raw_utility(y, loc, t, d)
                })
                .sum();
            if best.is_none_or(|(w, _, _)| welfare > w + EPS) {
                best = Some((welfare, y, start));
            }
        }
    }
    let (welfare, facility, start) = best.expect("at least one facility and block");
    let like_slots = order[start..start + k].to_vec();
    let dislike_slots = order[..start].iter().chain(&order[start + k..]).copied().collect();
    CentralChoice {
        facility,
        welfare,
        like_slots,
        dislike_slots,
    }
}

/// Optimal mechanism for central exchanges.
pub fn central_opt(inst: &Instance, reported: &PreferenceProfile) -> Result<Outcome, ModelError> {
    let choice = central_search(inst, reported)?;
    let assignment = assign_by_distance(
        inst,
        reported,
        choice.facility,
        &choice.like_slots,
        &choice.dislike_slots,
    )?;
    Ok(Outcome::new(choice.facility, assignment))
}

/// Welfare-maximal facility for the agents' current locations; the
/// smallest maximiser wins ties.
///
/// For a fixed assignment welfare is piecewise linear in `y` with breakpoints
/// at agent positions, so scanning [`candidate_facilities`] is exact.
pub fn naive_opt_location(inst: &Instance, reported: &PreferenceProfile) -> Result<f64, ModelError> {
    inst.check_profile(reported)?;
    let identity = Assignment::identity(inst.n());
    let mut best: Option<(f64, f64)> = None;
    for y in candidate_facilities(inst) {
        let w = welfare_with(inst, y, &identity, reported.as_slice());
        if best.is_none_or(|(bw, _)| w > bw + EPS) {
            best = Some((w, y));
        }
    }
    Ok(best.expect("the candidate set is never empty").1)
}

/// Facility of the relocated optimum under the reports, followed by TTC
/// among the agents (true types) from their original locations.
pub fn opt_location_then_ttc(
    inst: &Instance,
    reported: &PreferenceProfile,
) -> Result<(f64, ExchangeTrace), ModelError> {
    let y = central_search(inst, reported)?.facility;
    let trace = ttc(inst, &Assignment::identity(inst.n()), y)?;
    Ok((y, trace))
}

/// Facility at `0` or `d` with probability 1/2 each, agents left in place.
pub fn random_endpoints(inst: &Instance, reported: &PreferenceProfile) -> Result<RandomizedOutcome, ModelError> {
    inst.check_profile(reported)?;
    let identity = Assignment::identity(inst.n());
    Ok(RandomizedOutcome {
        support: [0.0, inst.d()]
            .into_iter()
            .map(|y| SupportPoint {
                outcome: Outcome::new(y, identity.clone()),
                probability: 0.5,
            })
            .collect(),
    })
}

/// One facility realisation of a mechanism together with its exchange phase.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Realization {
    pub probability: f64,
    pub facility: f64,
    /// Locations handed out by the mechanism (identity unless it relocates).
    pub allocated: Assignment,
    /// TTC among the agents, starting from `allocated`.
    pub exchange: ExchangeTrace,
}

impl Realization {
    pub fn utility(&self, inst: &Instance, agent: usize, stage: Stage) -> f64 {
        let asg = match stage {
            Stage::Allocated => &self.allocated,
            Stage::Exchanged => &self.exchange.final_assignment,
        };
        raw_utility(self.facility, asg.location(inst, agent), inst.types()[agent], inst.d())
    }

    pub fn welfare(&self, stage: Stage) -> f64 {
        match stage {
            Stage::Allocated => self.exchange.initial_welfare,
            Stage::Exchanged => self.exchange.final_welfare(),
        }
    }
}

/// Point of the pipeline at which utilities are read.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    /// Right after the mechanism (and any central relocation).
    Allocated,
    /// After agents trade by TTC.
    Exchanged,
}

/// A mechanism's full pipeline on one report profile.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MechanismRun {
    pub mechanism: MechanismKind,
    pub realizations: Vec<Realization>,
}

impl MechanismRun {
    pub fn expected_utility(&self, inst: &Instance, agent: usize, stage: Stage) -> f64 {
        self.realizations
            .iter()
            .map(|r| r.probability * r.utility(inst, agent, stage))
            .sum()
    }

    pub fn expected_welfare(&self, stage: Stage) -> f64 {
        self.realizations.iter().map(|r| r.probability * r.welfare(stage)).sum()
    }
}

/// Runs `kind` on `reported` and lets agents trade afterwards by TTC.
pub fn run_mechanism(
    kind: MechanismKind,
    inst: &Instance,
    reported: &PreferenceProfile,
) -> Result<MechanismRun, ModelError> {
    run_mechanism_with(kind, inst, reported, None)
}

/// Like [`run_mechanism`], but with the facility optionally pinned at `y`.
/// A pinned randomized mechanism collapses to that single point; the central
/// mechanism still relocates agents optimally around it.
pub fn run_mechanism_with(
    kind: MechanismKind,
    inst: &Instance,
    reported: &PreferenceProfile,
    facility: Option<f64>,
) -> Result<MechanismRun, ModelError> {
    let n = inst.n();
    if let Some(y) = facility {
        inst.check_profile(reported)?;
        inst.check_facility(y)?;
    }
    let deterministic = |facility: f64, allocated: Assignment| -> Result<Vec<Realization>, ModelError> {
        let exchange = ttc(inst, &allocated, facility)?;
        Ok(vec![Realization {
            probability: 1.0,
            facility,
            allocated,
            exchange,
        }])
    };
    let realizations = match kind {
        MechanismKind::CentralOpt => {
            let choice = match facility {
                Some(y) => central_search_at(inst, reported, y)?,
                None => central_search(inst, reported)?,
            };
            let allocated = assign_by_distance(
                inst,
                reported,
                choice.facility,
                &choice.like_slots,
                &choice.dislike_slots,
            )?;
            deterministic(choice.facility, allocated)?
        }
        _ if facility.is_some() => deterministic(facility.expect("checked above"), Assignment::identity(n))?,
        MechanismKind::NaiveOptLocation => deterministic(naive_opt_location(inst, reported)?, Assignment::identity(n))?,
        MechanismKind::OptLocationThenTTC => {
            let (facility, exchange) = opt_location_then_ttc(inst, reported)?;
            vec![Realization {
                probability: 1.0,
                facility,
                allocated: Assignment::identity(n),
                exchange,
            }]
        }
        MechanismKind::RandomEndpoints => random_endpoints(inst, reported)?
            .support
            .into_iter()
            .map(|p| {
                let exchange = ttc(inst, &p.outcome.assignment, p.outcome.facility)?;
                Ok(Realization {
                    probability: p.probability,
                    facility: p.outcome.facility,
                    allocated: p.outcome.assignment,
                    exchange,
                })
            })
            .collect::<Result<_, ModelError>>()?,
    };
    Ok(MechanismRun {
        mechanism: kind,
        realizations,
    })
}
