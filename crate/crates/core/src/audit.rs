//! Verification engines.
//!
//! [`brute_force_opt`] is the independent optimality oracle: it tries every
//! permutation of the locations at every candidate facility. The
//! truthfulness auditor replays a mechanism's whole pipeline for every agent
//! and its single alternative report. Campaigns run these checks over seeded
//! random instances; trial `k` always draws from its own generator stream, so
//! reports do not depend on how trials are scheduled across workers.

use itertools::Itertools;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::AuditError;
use crate::exchange::{beneficial_swap_exists, swap_dynamics, ttc};
use crate::mechanisms::{candidate_facilities, central_opt, run_mechanism, MechanismKind, MechanismRun, Stage};
use crate::model::{raw_utility, welfare_with, Assignment, Instance, Outcome, PreferenceProfile, PreferenceType, EPS};

/// Largest instance the factorial oracle accepts.
pub const BRUTE_FORCE_LIMIT: usize = 8;

/// Welfare-maximal outcome over all `n!` assignments and all candidate
/// facilities, under `reported`. Ties keep the smallest facility, then the
/// lexicographically first permutation.
pub fn brute_force_opt(inst: &Instance, reported: &PreferenceProfile) -> Result<Outcome, AuditError> {
    let n = inst.n();
    if n > BRUTE_FORCE_LIMIT {
        return Err(AuditError::TooManyAgents {
            n,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    inst.check_profile(reported)?;
    let d = inst.d();
    let x = inst.positions();
    let types = reported.as_slice();

    let mut best: Option<(f64, f64, Vec<usize>)> = None;
    for y in candidate_facilities(inst) {
        for perm in (0..n).permutations(n) {
            let w: f64 = perm
                .iter()
                .zip(types)
                .map(|(&slot, &t)| raw_utility(y, x[slot], t, d))
                .sum();
            if best.as_ref().is_none_or(|(bw, _, _)| w > bw + EPS) {
                best = Some((w, y, perm));
            }
        }
    }
    let (_, y, perm) = best.expect("at least one permutation and candidate");
    Ok(Outcome::new(
        y,
        Assignment::new(perm).expect("itertools yields permutations"),
    ))
}

/// Central optimum cross-checked against [`brute_force_opt`] when the instance
/// is small enough. On disagreement the oracle's outcome is returned and the
/// discrepancy is reported instead of silently trusting the O(n²) search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifiedOutcome {
    pub outcome: Outcome,
    pub oracle_checked: bool,
    /// Oracle welfare minus search welfare, when the oracle found better.
    pub discrepancy: Option<f64>,
}

pub fn central_opt_verified(inst: &Instance, reported: &PreferenceProfile) -> Result<VerifiedOutcome, AuditError> {
    let outcome = central_opt(inst, reported)?;
    if inst.n() > BRUTE_FORCE_LIMIT {
        return Ok(VerifiedOutcome {
            outcome,
            oracle_checked: false,
            discrepancy: None,
        });
    }
    let oracle = brute_force_opt(inst, reported)?;
    let types = reported.as_slice();
    let found = welfare_with(inst, outcome.facility, &outcome.assignment, types);
    let best = welfare_with(inst, oracle.facility, &oracle.assignment, types);
    if best > found + EPS {
        Ok(VerifiedOutcome {
            outcome: oracle,
            oracle_checked: true,
            discrepancy: Some(best - found),
        })
    } else {
        Ok(VerifiedOutcome {
            outcome,
            oracle_checked: true,
            discrepancy: None,
        })
    }
}

/// A profitable misreport found by the auditor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub agent: usize,
    pub reported: PreferenceType,
    pub stage: Stage,
    /// Support point compared in isolation; `None` compares expectations.
    pub facility: Option<f64>,
    pub truthful_utility: f64,
    pub deviating_utility: f64,
}

impl Violation {
    pub fn gain(&self) -> f64 {
        self.deviating_utility - self.truthful_utility
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub mechanism: MechanismKind,
    pub truthful: bool,
    pub violations: Vec<Violation>,
    pub max_gain: f64,
}

/// Stages at which a mechanism's promise is checked. Mechanisms that hand
/// out locations are checked right after allocation as well as after trades.
fn audited_stages(kind: MechanismKind) -> &'static [Stage] {
    match kind {
        MechanismKind::CentralOpt | MechanismKind::RandomEndpoints => &[Stage::Allocated, Stage::Exchanged],
        MechanismKind::NaiveOptLocation | MechanismKind::OptLocationThenTTC => &[Stage::Exchanged],
    }
}

fn compare_runs(
    inst: &Instance,
    agent: usize,
    reported: PreferenceType,
    truthful: &MechanismRun,
    deviating: &MechanismRun,
    out: &mut Vec<Violation>,
) {
    for &stage in audited_stages(truthful.mechanism) {
        let honest = truthful.expected_utility(inst, agent, stage);
        let lying = deviating.expected_utility(inst, agent, stage);
        if lying > honest + EPS {
            out.push(Violation {
                agent,
                reported,
                stage,
                facility: None,
                truthful_utility: honest,
                deviating_utility: lying,
            });
        }
        if truthful.realizations.len() > 1 {
            for (a, b) in truthful.realizations.iter().zip(&deviating.realizations) {
                let honest = a.utility(inst, agent, stage);
                let lying = b.utility(inst, agent, stage);
                if lying > honest + EPS {
                    out.push(Violation {
                        agent,
                        reported,
                        stage,
                        facility: Some(a.facility),
                        truthful_utility: honest,
                        deviating_utility: lying,
                    });
                }
            }
        }
    }
}

/// Tries every agent's alternative report against truthful reporting by all.
///
/// Utilities are always those of the agent's true type, read after the
/// mechanism and after TTC among the agents.
pub fn audit_truthfulness(kind: MechanismKind, inst: &Instance) -> Result<AuditReport, AuditError> {
    let truth = inst.truth();
    let truthful = run_mechanism(kind, inst, &truth)?;
    let mut violations = Vec::new();
    for agent in 0..inst.n() {
        let report = truth.get(agent).flipped();
        let deviating = run_mechanism(kind, inst, &truth.with_report(agent, report))?;
        compare_runs(inst, agent, report, &truthful, &deviating, &mut violations);
    }
    let max_gain = violations.iter().map(Violation::gain).fold(0.0, f64::max);
    Ok(AuditReport {
        mechanism: kind,
        truthful: violations.is_empty(),
        violations,
        max_gain,
    })
}

/// Recomputes the truthful and deviating utilities behind `v` from scratch.
pub fn replay_violation(kind: MechanismKind, inst: &Instance, v: &Violation) -> Result<(f64, f64), AuditError> {
    let truth = inst.truth();
    let pick = |run: MechanismRun| -> f64 {
        match v.facility {
            None => run.expected_utility(inst, v.agent, v.stage),
            Some(y) => run
                .realizations
                .iter()
                .find(|r| r.facility == y)
                .map_or(f64::NAN, |r| r.utility(inst, v.agent, v.stage)),
        }
    };
    let honest = pick(run_mechanism(kind, inst, &truth)?);
    let lying = pick(run_mechanism(kind, inst, &truth.with_report(v.agent, v.reported))?);
    Ok((honest, lying))
}

/// Parameters of the random instance generator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub n_min: usize,
    pub n_max: usize,
    pub d: f64,
}

impl GeneratorConfig {
    pub fn new(n_min: usize, n_max: usize, d: f64) -> Result<Self, AuditError> {
        if n_min == 0 || n_min > n_max {
            return Err(AuditError::InvalidRange { min: n_min, max: n_max });
        }
        if !(d.is_finite() && d > 0.0) {
            return Err(crate::error::ModelError::InvalidSegment(d).into());
        }
        Ok(GeneratorConfig { n_min, n_max, d })
    }
}

pub const GENERATOR_DESCRIPTION: &str = "positions uniform on [0, d], types independent fair coins";

/// Generator stream for trial `trial` of a campaign seeded with `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

pub fn random_instance<R: Rng>(rng: &mut R, n: usize, d: f64) -> Instance {
    let positions = (0..n).map(|_| rng.gen_range(0.0..=d)).collect();
    let types = (0..n)
        .map(|_| {
            if rng.gen_bool(0.5) {
                PreferenceType::Like
            } else {
                PreferenceType::Dislike
            }
        })
        .collect();
    Instance::new(d, positions, types).expect("generated positions lie on the segment")
}

pub fn trial_instance(cfg: &GeneratorConfig, seed: u64, trial: u64) -> Instance {
    let mut rng = trial_rng(seed, trial);
    let n = rng.gen_range(cfg.n_min..=cfg.n_max);
    random_instance(&mut rng, n, cfg.d)
}

/// Maps `f` over `0..count`, in order, on at most `workers` threads.
fn run_trials<T, F>(count: usize, workers: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    if workers <= 1 {
        return (0..count).map(f).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(|| (0..count).into_par_iter().map(&f).collect()),
        Err(_) => (0..count).map(f).collect(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CampaignHeader {
    pub mechanism: MechanismKind,
    pub mode: String,
    pub trials: usize,
    pub n_min: usize,
    pub n_max: usize,
    pub d: f64,
    pub seed: u64,
    pub generator: String,
    pub injected: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialAudit {
    pub trial: usize,
    pub n: usize,
    pub truthful: bool,
    pub violations: usize,
    pub max_gain: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub trial: usize,
    pub instance: Instance,
    pub report: AuditReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditCampaign {
    pub header: CampaignHeader,
    pub truthful_trials: usize,
    pub violating_trials: usize,
    pub max_gain: f64,
    pub first_violation: Option<Witness>,
    pub rows: Vec<TrialAudit>,
}

impl AuditCampaign {
    pub fn all_truthful(&self) -> bool {
        self.violating_trials == 0
    }
}

/// Audits `trials` seeded random instances plus any `injected` ones, which
/// are numbered after the random trials.
pub fn audit_campaign(
    kind: MechanismKind,
    cfg: &GeneratorConfig,
    trials: usize,
    seed: u64,
    injected: &[Instance],
    workers: usize,
) -> Result<AuditCampaign, AuditError> {
    if trials == 0 {
        return Err(AuditError::NoTrials);
    }
    let instance_for = |k: usize| -> Instance {
        if k < trials {
            trial_instance(cfg, seed, k as u64)
        } else {
            injected[k - trials].clone()
        }
    };
    let results = run_trials(trials + injected.len(), workers, |k| {
        let inst = instance_for(k);
        audit_truthfulness(kind, &inst).map(|r| (inst, r))
    });

    let mut rows = Vec::with_capacity(results.len());
    let mut first_violation = None;
    let mut max_gain = 0.0f64;
    for (trial, result) in results.into_iter().enumerate() {
        let (inst, report) = result?;
        max_gain = max_gain.max(report.max_gain);
        rows.push(TrialAudit {
            trial,
            n: inst.n(),
            truthful: report.truthful,
            violations: report.violations.len(),
            max_gain: report.max_gain,
        });
        if !report.truthful && first_violation.is_none() {
            first_violation = Some(Witness {
                trial,
                instance: inst,
                report,
            });
        }
    }
    let violating_trials = rows.iter().filter(|r| !r.truthful).count();
    Ok(AuditCampaign {
        header: CampaignHeader {
            mechanism: kind,
            mode: "truthfulness".into(),
            trials,
            n_min: cfg.n_min,
            n_max: cfg.n_max,
            d: cfg.d,
            seed,
            generator: GENERATOR_DESCRIPTION.into(),
            injected: injected.len(),
        },
        truthful_trials: rows.len() - violating_trials,
        violating_trials,
        max_gain,
        first_violation,
        rows,
    })
}

/// Optimal welfare (relocation allowed) over the welfare a mechanism reaches
/// in expectation after agents trade.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioSample {
    pub optimum: f64,
    pub achieved: f64,
    pub ratio: f64,
}

pub fn ratio_on(kind: MechanismKind, inst: &Instance) -> Result<(RatioSample, bool), AuditError> {
    let truth = inst.truth();
    let verified = central_opt_verified(inst, &truth)?;
    let optimum = welfare_with(
        inst,
        verified.outcome.facility,
        &verified.outcome.assignment,
        inst.types(),
    );
    let achieved = run_mechanism(kind, inst, &truth)?.expected_welfare(Stage::Exchanged);
    let ratio = if achieved > 0.0 { optimum / achieved } else { 1.0 };
    Ok((
        RatioSample {
            optimum,
            achieved,
            ratio,
        },
        verified.discrepancy.is_some(),
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioRow {
    pub trial: usize,
    pub n: usize,
    pub optimum: f64,
    pub achieved: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioEstimate {
    pub header: CampaignHeader,
    pub worst_ratio: f64,
    pub worst_trial: usize,
    pub worst_instance: Instance,
    /// Trials where the O(n²) search disagreed with the factorial oracle.
    pub oracle_discrepancies: usize,
    pub rows: Vec<RatioRow>,
}

/// Worst observed ratio over seeded random instances.
pub fn estimate_ratio(
    kind: MechanismKind,
    cfg: &GeneratorConfig,
    trials: usize,
    seed: u64,
    workers: usize,
) -> Result<RatioEstimate, AuditError> {
    if trials == 0 {
        return Err(AuditError::NoTrials);
    }
    let results = run_trials(trials, workers, |k| {
        let inst = trial_instance(cfg, seed, k as u64);
        ratio_on(kind, &inst).map(|r| (inst, r))
    });
    let mut rows = Vec::with_capacity(trials);
    let mut worst: Option<(f64, usize, Instance)> = None;
    let mut oracle_discrepancies = 0;
    for (trial, result) in results.into_iter().enumerate() {
        let (inst, (sample, discrepancy)) = result?;
        oracle_discrepancies += usize::from(discrepancy);
        if worst.as_ref().is_none_or(|(r, _, _)| sample.ratio > *r) {
            worst = Some((sample.ratio, trial, inst.clone()));
        }
        rows.push(RatioRow {
            trial,
            n: inst.n(),
            optimum: sample.optimum,
            achieved: sample.achieved,
            ratio: sample.ratio,
        });
    }
    let (worst_ratio, worst_trial, worst_instance) = worst.expect("at least one trial");
    Ok(RatioEstimate {
        header: CampaignHeader {
            mechanism: kind,
            mode: "ratio".into(),
            trials,
            n_min: cfg.n_min,
            n_max: cfg.n_max,
            d: cfg.d,
            seed,
            generator: GENERATOR_DESCRIPTION.into(),
            injected: 0,
        },
        worst_ratio,
        worst_trial,
        worst_instance,
        oracle_discrepancies,
        rows,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ExchangeFailure {
    TtcWelfareDecreased,
    SwapWelfareDecreased,
    TtcBlockingPair { i: usize, j: usize },
    TtcNotIndividuallyRational { agent: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    pub trial: usize,
    pub instance: Instance,
    pub start: Assignment,
    pub facility: f64,
    pub failure: ExchangeFailure,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityCheck {
    pub holds: bool,
    pub trials: usize,
    pub counterexample: Option<Counterexample>,
}

/// Checks one (instance, endowment, facility) triple: both exchange
/// procedures must never lower welfare, and TTC must end individually
/// rational with no mutually beneficial pair left.
pub fn check_exchange(inst: &Instance, start: &Assignment, y: f64) -> Result<Option<ExchangeFailure>, AuditError> {
    let by_ttc = ttc(inst, start, y)?;
    if !by_ttc.is_monotone() || by_ttc.final_welfare() < by_ttc.initial_welfare - EPS {
        return Ok(Some(ExchangeFailure::TtcWelfareDecreased));
    }
    let by_swaps = swap_dynamics(inst, start, y)?;
    if !by_swaps.is_monotone() || by_swaps.final_welfare() < by_swaps.initial_welfare - EPS {
        return Ok(Some(ExchangeFailure::SwapWelfareDecreased));
    }
    let d = inst.d();
    for (agent, &t) in inst.types().iter().enumerate() {
        let before = raw_utility(y, start.location(inst, agent), t, d);
        let after = raw_utility(y, by_ttc.final_assignment.location(inst, agent), t, d);
        if after < before - EPS {
            return Ok(Some(ExchangeFailure::TtcNotIndividuallyRational { agent }));
        }
    }
    if let Some((i, j)) = beneficial_swap_exists(inst, &by_ttc.final_assignment, y)? {
        return Ok(Some(ExchangeFailure::TtcBlockingPair { i, j }));
    }
    Ok(None)
}

/// Random (instance, shuffled endowment, facility) triples. Half of the
/// facilities are drawn from the candidate points so that distance ties occur.
pub fn verify_lemma_monotonicity(
    cfg: &GeneratorConfig,
    trials: usize,
    seed: u64,
    workers: usize,
) -> Result<MonotonicityCheck, AuditError> {
    if trials == 0 {
        return Err(AuditError::NoTrials);
    }
    let results = run_trials(trials, workers, |k| -> Result<Option<Counterexample>, AuditError> {
        let mut rng = trial_rng(seed, k as u64);
        let n = rng.gen_range(cfg.n_min..=cfg.n_max);
        let inst = random_instance(&mut rng, n, cfg.d);
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        let start = Assignment::new(perm).expect("shuffled identity");
        let y = if rng.gen_bool(0.5) {
            *candidate_facilities(&inst).choose(&mut rng).expect("non-empty")
        } else {
            rng.gen_range(0.0..=cfg.d)
        };
        Ok(check_exchange(&inst, &start, y)?.map(|failure| Counterexample {
            trial: k,
            instance: inst,
            start,
            facility: y,
            failure,
        }))
    });
    let mut counterexample = None;
    for result in results {
        if let Some(c) = result? {
            counterexample = Some(c);
            break;
        }
    }
    Ok(MonotonicityCheck {
        holds: counterexample.is_none(),
        trials,
        counterexample,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::figures::{fig1, fig2, DEVIATOR};
    use crate::model::social_welfare;
    use crate::model::PreferenceType::{Dislike as H, Like as L};

    #[test]
    fn oracle_on_figure_one() {
        let inst = fig1();
        let out = brute_force_opt(&inst, &inst.truth()).unwrap();
        assert_eq!(social_welfare(&out, &inst).unwrap(), 35.0);
    }

    #[test]
    fn oracle_small_cases() {
        let one = Instance::new(8.0, vec![3.0], vec![H]).unwrap();
        let bf = brute_force_opt(&one, &one.truth()).unwrap();
        let co = central_opt(&one, &one.truth()).unwrap();
        assert_eq!(bf, co);

        let two = Instance::new(8.0, vec![0.0, 8.0], vec![L, H]).unwrap();
        let out = brute_force_opt(&two, &two.truth()).unwrap();
        assert_eq!(social_welfare(&out, &two).unwrap(), 16.0);
        assert!(out.facility == 0.0 || out.facility == 8.0);
    }

    #[test]
    fn oracle_guard() {
        let big = Instance::new(8.0, vec![1.0; 9], vec![L; 9]).unwrap();
        assert_eq!(
            brute_force_opt(&big, &big.truth()),
            Err(AuditError::TooManyAgents { n: 9, limit: 8 })
        );
        let verified = central_opt_verified(&big, &big.truth()).unwrap();
        assert!(!verified.oracle_checked);
    }

    #[test]
    fn central_opt_truthful_on_figure_one() {
        let report = audit_truthfulness(MechanismKind::CentralOpt, &fig1()).unwrap();
        assert!(report.truthful);
        assert_eq!(report.max_gain, 0.0);
    }

    #[test]
    fn opt_ttc_fails_on_figure_two() {
        let inst = fig2();
        let report = audit_truthfulness(MechanismKind::OptLocationThenTTC, &inst).unwrap();
        assert!(!report.truthful);
        assert_eq!(report.max_gain, 0.5);
        assert_eq!(report.violations.len(), 1);
        let v = &report.violations[0];
        assert_eq!((v.agent, v.reported), (DEVIATOR, L));
        assert_eq!((v.truthful_utility, v.deviating_utility), (6.5, 7.0));
        assert_eq!(
            replay_violation(MechanismKind::OptLocationThenTTC, &inst, v).unwrap(),
            (6.5, 7.0)
        );
    }

    #[test]
    fn naive_location_fails_on_figure_one() {
        let inst = fig1();
        let report = audit_truthfulness(MechanismKind::NaiveOptLocation, &inst).unwrap();
        assert!(!report.truthful);
        let v = report.violations.iter().find(|v| v.agent == DEVIATOR).unwrap();
        assert_eq!((v.truthful_utility, v.deviating_utility), (5.0, 7.0));
        for v in &report.violations {
            let (honest, lying) = replay_violation(MechanismKind::NaiveOptLocation, &inst, v).unwrap();
            assert_eq!((honest, lying), (v.truthful_utility, v.deviating_utility));
        }
    }

    #[test]
    fn random_endpoints_is_truthful() {
        for inst in [fig1(), fig2()] {
            let report = audit_truthfulness(MechanismKind::RandomEndpoints, &inst).unwrap();
            assert!(report.truthful);
            assert_eq!(report.max_gain, 0.0);
        }
    }

    #[test]
    fn generator_is_seeded_per_trial() {
        let cfg = GeneratorConfig::new(1, 8, 8.0).unwrap();
        for k in 0..50 {
            let a = trial_instance(&cfg, 42, k);
            assert_eq!(a, trial_instance(&cfg, 42, k));
            assert!((1..=8).contains(&a.n()));
        }
        assert_ne!(trial_instance(&cfg, 42, 0), trial_instance(&cfg, 43, 0));
    }

    #[test]
    fn generator_config_validation() {
        assert!(GeneratorConfig::new(0, 3, 8.0).is_err());
        assert!(GeneratorConfig::new(4, 3, 8.0).is_err());
        assert!(GeneratorConfig::new(1, 3, 0.0).is_err());
    }

    #[test]
    fn campaigns_reject_zero_trials() {
        let cfg = GeneratorConfig::new(1, 3, 8.0).unwrap();
        assert_eq!(
            audit_campaign(MechanismKind::CentralOpt, &cfg, 0, 1, &[], 1),
            Err(AuditError::NoTrials)
        );
        assert!(estimate_ratio(MechanismKind::CentralOpt, &cfg, 0, 1, 1).is_err());
        assert!(verify_lemma_monotonicity(&cfg, 0, 1, 1).is_err());
    }

    #[test]
    fn central_opt_ratio_is_one() {
        let cfg = GeneratorConfig::new(1, 6, 8.0).unwrap();
        let est = estimate_ratio(MechanismKind::CentralOpt, &cfg, 200, 5, 1).unwrap();
        assert!((est.worst_ratio - 1.0).abs() < EPS);
        assert_eq!(est.oracle_discrepancies, 0);
    }

    #[test]
    fn worst_instance_reproduces_worst_ratio() {
        let cfg = GeneratorConfig::new(1, 6, 8.0).unwrap();
        let est = estimate_ratio(MechanismKind::RandomEndpoints, &cfg, 200, 9, 1).unwrap();
        let (again, _) = ratio_on(MechanismKind::RandomEndpoints, &est.worst_instance).unwrap();
        assert_eq!(again.ratio, est.worst_ratio);
        assert!(est.worst_ratio >= 1.0 - EPS);
    }

    #[test]
    fn monotonicity_on_fixed_points() {
        let inst = fig2();
        assert_eq!(check_exchange(&inst, &Assignment::identity(5), 0.0).unwrap(), None);
    }

    #[test]
    fn injected_instances_are_audited() {
        let cfg = GeneratorConfig::new(1, 4, 8.0).unwrap();
        let campaign = audit_campaign(MechanismKind::OptLocationThenTTC, &cfg, 20, 3, &[fig2()], 1).unwrap();
        assert_eq!(campaign.rows.len(), 21);
        assert!(!campaign.rows[20].truthful);
        assert!(campaign.max_gain >= 0.5);
    }
}
