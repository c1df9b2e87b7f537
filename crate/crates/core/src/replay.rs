//! Golden replays of the two worked figures. Each replay recomputes the
//! published numbers through the real pipelines and records the comparison.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::audit::audit_truthfulness;
use crate::error::AuditError;
use crate::figures::{Figure, DEVIATOR};
use crate::mechanisms::{central_opt, run_mechanism, MechanismKind, MechanismRun, Stage};
use crate::model::{social_welfare, Instance, PreferenceProfile, EPS};
use crate::report::fmt_num;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplayCheck {
    pub name: String,
    pub expected: f64,
    pub actual: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplayReport {
    pub figure: String,
    pub checks: Vec<ReplayCheck>,
    pub verdict: Option<String>,
}

impl ReplayReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn check(&self, name: &str) -> Option<&ReplayCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_table(&self) -> String {
        let mut out = format!("{}\n", self.figure);
        for c in &self.checks {
            let _ = writeln!(
                out,
                "  [{}] {}: {} (expected {})",
                if c.pass { "ok" } else { "MISMATCH" },
                c.name,
                fmt_num(c.actual),
                fmt_num(c.expected)
            );
        }
        if let Some(v) = &self.verdict {
            let _ = writeln!(out, "  verdict: {v}");
        }
        out
    }
}

struct Checks(Vec<ReplayCheck>);

impl Checks {
    fn push(&mut self, name: impl Into<String>, expected: f64, actual: f64) {
        self.0.push(ReplayCheck {
            name: name.into(),
            expected,
            actual,
            pass: (expected - actual).abs() <= EPS,
        });
    }
}

fn single(run: &MechanismRun) -> &crate::mechanisms::Realization {
    &run.realizations[0]
}

fn deviator_distance(inst: &Instance, run: &MechanismRun) -> f64 {
    let r = single(run);
    (r.exchange.final_assignment.location(inst, DEVIATOR) - r.facility).abs()
}

pub fn replay(figure: Figure) -> Result<ReplayReport, AuditError> {
    match figure {
        Figure::Fig1 => replay_fig1(),
        Figure::Fig2 => replay_fig2(),
    }
}

fn misreport(inst: &Instance) -> PreferenceProfile {
    let truth = inst.truth();
    truth.with_report(DEVIATOR, truth.get(DEVIATOR).flipped())
}

fn replay_fig1() -> Result<ReplayReport, AuditError> {
    let inst = Figure::Fig1.instance();
    let mut checks = Checks(Vec::new());

    let honest = run_mechanism(MechanismKind::NaiveOptLocation, &inst, &inst.truth())?;
    checks.push("naive-opt facility, truthful", 5.0, single(&honest).facility);
    checks.push(
        "agent 4 distance after TTC, truthful",
        5.0,
        deviator_distance(&inst, &honest),
    );

    let lying = run_mechanism(MechanismKind::NaiveOptLocation, &inst, &misreport(&inst))?;
    checks.push("naive-opt facility, agent 4 reports L", 7.0, single(&lying).facility);
    checks.push(
        "agent 4 distance after TTC, agent 4 reports L",
        7.0,
        deviator_distance(&inst, &lying),
    );

    let opt = central_opt(&inst, &inst.truth())?;
    checks.push("central-opt facility", 8.0, opt.facility);
    for (agent, expected) in [5.0, 0.0, 7.0, 1.0, 8.0].into_iter().enumerate() {
        checks.push(
            format!("central-opt location of agent {}", agent + 1),
            expected,
            opt.assignment.location(&inst, agent),
        );
    }
    checks.push("central-opt welfare", 35.0, social_welfare(&opt, &inst)?);

    Ok(ReplayReport {
        figure: Figure::Fig1.token().into(),
        checks: checks.0,
        verdict: None,
    })
}

fn replay_fig2() -> Result<ReplayReport, AuditError> {
    let inst = Figure::Fig2.instance();
    let mut checks = Checks(Vec::new());
    let kind = MechanismKind::OptLocationThenTTC;

    let honest = run_mechanism(kind, &inst, &inst.truth())?;
    checks.push("opt-ttc facility, truthful", 0.0, single(&honest).facility);
    checks.push("trades, truthful", 0.0, single(&honest).exchange.steps.len() as f64);
    checks.push(
        "agent 4 utility after TTC, truthful",
        6.5,
        honest.expected_utility(&inst, DEVIATOR, Stage::Exchanged),
    );

    let lying = run_mechanism(kind, &inst, &misreport(&inst))?;
    checks.push("opt-ttc facility, agent 4 reports L", 8.0, single(&lying).facility);
    checks.push(
        "agent 4 utility after TTC, agent 4 reports L",
        7.0,
        lying.expected_utility(&inst, DEVIATOR, Stage::Exchanged),
    );

    let audit = audit_truthfulness(kind, &inst)?;
    checks.push("audit max gain", 0.5, audit.max_gain);
    checks.push("audit violations", 1.0, audit.violations.len() as f64);

    Ok(ReplayReport {
        figure: Figure::Fig2.token().into(),
        checks: checks.0,
        verdict: Some(if audit.truthful { "truthful" } else { "not truthful" }.into()),
    })
}
