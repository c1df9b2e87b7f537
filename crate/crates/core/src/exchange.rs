//! Exchange phase: agents trade the locations they were handed.
//!
//! Two procedures are provided. [`ttc`] runs Top Trading Cycle over the
//! locations each agent currently owns; [`swap_dynamics`] repeatedly executes
//! the first mutually beneficial pairwise swap. Both use the agents' true
//! types and record every executed trade with the welfare reached after it.

use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::model::{raw_utility, welfare_with, Assignment, Instance, EPS};

/// One executed trade: agents in `cycle` each receive the location held by
/// the next agent in the list (the last receives the first one's).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TradeStep {
    pub cycle: Vec<usize>,
    pub welfare_after: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExchangeTrace {
    pub initial_welfare: f64,
    pub steps: Vec<TradeStep>,
    pub final_assignment: Assignment,
}

impl ExchangeTrace {
    pub fn final_welfare(&self) -> f64 {
        self.steps.last().map_or(self.initial_welfare, |s| s.welfare_after)
    }

    pub fn traded(&self) -> bool {
        !self.steps.is_empty()
    }

    /// Welfare never drops along the trace (within [`EPS`]).
    pub fn is_monotone(&self) -> bool {
        let mut prev = self.initial_welfare;
        for step in &self.steps {
            if step.welfare_after < prev - EPS {
                return false;
            }
            prev = step.welfare_after;
        }
        true
    }
}

fn check_inputs(inst: &Instance, asg: &Assignment, y: f64) -> Result<(), ModelError> {
    asg.check_for(inst)?;
    inst.check_facility(y)
}

/// Location agent `agent` points at in a TTC round: the best remaining one
/// under its true type. Ties go to the agent's own location, then the smaller
/// coordinate, then the smaller owner index.
fn favourite_owner(inst: &Instance, y: f64, holdings: &[usize], active: &[usize], agent: usize) -> usize {
    let t = inst.types()[agent];
    let d = inst.d();
    let value = |owner: usize| raw_utility(y, inst.position(holdings[owner]), t, d);
    let best = active.iter().map(|&j| value(j)).fold(f64::NEG_INFINITY, f64::max);
    if value(agent) >= best - EPS {
        return agent;
    }
    active
        .iter()
        .copied()
        .filter(|&j| value(j) >= best - EPS)
        .min_by(|&a, &b| {
            let (xa, xb) = (inst.position(holdings[a]), inst.position(holdings[b]));
            xa.total_cmp(&xb).then(a.cmp(&b))
        })
        .expect("the agent itself is always active")
}

/// Cycles of the pointer graph restricted to `active`, each rotated to start
/// at its smallest member and listed in order of that member.
fn pointer_cycles(active: &[usize], pointer: &[usize], n: usize) -> Vec<Vec<usize>> {
    // 0 = unvisited, 1 = on the current walk, 2 = finished
    let mut state = vec![0u8; n];
    let mut cycles = Vec::new();
    for &start in active {
        if state[start] != 0 {
            continue;
        }
        let mut walk = Vec::new();
        let mut cur = start;
        while state[cur] == 0 {
            state[cur] = 1;
            walk.push(cur);
            cur = pointer[cur];
        }
        if state[cur] == 1 {
            let from = walk.iter().position(|&a| a == cur).expect("cur is on the walk");
            let mut cycle = walk[from..].to_vec();
            let min_pos = cycle
                .iter()
                .enumerate()
                .min_by_key(|(_, a)| **a)
                .map(|(i, _)| i)
                .expect("cycles are non-empty");
            cycle.rotate_left(min_pos);
            cycles.push(cycle);
        }
        for a in walk {
            state[a] = 2;
        }
    }
    cycles.sort_by_key(|c| c[0]);
    cycles
}

/// Top Trading Cycle from endowment `start` with the facility at `y`.
///
/// Every round each remaining agent points at the owner of its favourite
/// remaining location; all cycles trade simultaneously and leave. Self-loops
/// keep their location and are not recorded as trades.
pub fn ttc(inst: &Instance, start: &Assignment, y: f64) -> Result<ExchangeTrace, ModelError> {
    check_inputs(inst, start, y)?;
    let n = inst.n();
    let types = inst.types();
    let initial_welfare = welfare_with(inst, y, start, types);

    let mut holdings = start.as_slice().to_vec();
    let mut active: Vec<usize> = (0..n).collect();
    let mut pointer = vec![0usize; n];
    let mut steps = Vec::new();

    while !active.is_empty() {
        for &i in &active {
            pointer[i] = favourite_owner(inst, y, &holdings, &active, i);
        }
        let cycles = pointer_cycles(&active, &pointer, n);
        let mut leaving = vec![false; n];
        for cycle in cycles {
            if cycle.len() > 1 {
                let received: Vec<usize> = cycle.iter().map(|&a| holdings[pointer[a]]).collect();
                for (&a, slot) in cycle.iter().zip(received) {
                    holdings[a] = slot;
                }
                let current = Assignment::new(holdings.clone()).expect("trades permute holdings");
                steps.push(TradeStep {
                    welfare_after: welfare_with(inst, y, &current, types),
                    cycle: cycle.clone(),
                });
            }
            for a in cycle {
                leaving[a] = true;
            }
        }
        active.retain(|&a| !leaving[a]);
    }

    Ok(ExchangeTrace {
        initial_welfare,
        steps,
        final_assignment: Assignment::new(holdings).expect("trades permute holdings"),
    })
}

fn mutual_gain(inst: &Instance, holdings: &[usize], y: f64, i: usize, j: usize) -> bool {
    let d = inst.d();
    let (ti, tj) = (inst.types()[i], inst.types()[j]);
    let (xi, xj) = (inst.position(holdings[i]), inst.position(holdings[j]));
    raw_utility(y, xj, ti, d) > raw_utility(y, xi, ti, d) + EPS
        && raw_utility(y, xi, tj, d) > raw_utility(y, xj, tj, d) + EPS
}

fn first_swap(inst: &Instance, holdings: &[usize], y: f64) -> Option<(usize, usize)> {
    let n = inst.n();
    (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .find(|&(i, j)| mutual_gain(inst, holdings, y, i, j))
}

/// First pair `(i, j)`, `i < j`, in which both agents strictly gain by
/// swapping their locations.
pub fn beneficial_swap_exists(inst: &Instance, asg: &Assignment, y: f64) -> Result<Option<(usize, usize)>, ModelError> {
    check_inputs(inst, asg, y)?;
    Ok(first_swap(inst, asg.as_slice(), y))
}

/// Executes the first beneficial swap until none is left.
///
/// Terminates because every swap raises welfare by more than `2 * EPS` and
/// welfare takes finitely many values over permutations.
pub fn swap_dynamics(inst: &Instance, start: &Assignment, y: f64) -> Result<ExchangeTrace, ModelError> {
    check_inputs(inst, start, y)?;
    let types = inst.types();
    let initial_welfare = welfare_with(inst, y, start, types);
    let mut holdings = start.as_slice().to_vec();
    let mut steps = Vec::new();
    while let Some((i, j)) = first_swap(inst, &holdings, y) {
        holdings.swap(i, j);
        let current = Assignment::new(holdings.clone()).expect("swaps permute holdings");
        steps.push(TradeStep {
            cycle: vec![i, j],
            welfare_after: welfare_with(inst, y, &current, types),
        });
    }
    Ok(ExchangeTrace {
        initial_welfare,
        steps,
        final_assignment: Assignment::new(holdings).expect("swaps permute holdings"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::PreferenceType::{Dislike as H, Like as L};
    use crate::model::{raw_utility, Outcome};

    fn fig1() -> Instance {
        Instance::new(8.0, vec![0.0, 1.0, 5.0, 7.0, 8.0], vec![L, H, L, H, L]).unwrap()
    }

    fn fig2() -> Instance {
        Instance::new(8.0, vec![0.0, 1.0, 5.0, 6.5, 8.0], vec![L, L, H, H, H]).unwrap()
    }

    fn utility_of(inst: &Instance, asg: &Assignment, y: f64, agent: usize) -> f64 {
        raw_utility(y, asg.location(inst, agent), inst.types()[agent], inst.d())
    }

    #[test]
    fn ttc_no_trade_on_figure_two_at_zero() {
        let inst = fig2();
        let trace = ttc(&inst, &Assignment::identity(5), 0.0).unwrap();
        assert!(trace.steps.is_empty());
        assert!(trace.final_assignment.is_identity());
        assert_eq!(utility_of(&inst, &trace.final_assignment, 0.0, 3), 6.5);
    }

    #[test]
    fn ttc_trades_on_figure_two_at_eight() {
        let inst = fig2();
        let trace = ttc(&inst, &Assignment::identity(5), 8.0).unwrap();
        let cycles: Vec<_> = trace.steps.iter().map(|s| s.cycle.clone()).collect();
        // agents 1<->5 in the first round, then 2<->4
        assert_eq!(cycles, vec![vec![0, 4], vec![1, 3]]);
        assert_eq!(trace.final_assignment.location(&inst, 3), 1.0);
        assert_eq!(utility_of(&inst, &trace.final_assignment, 8.0, 3), 7.0);
        assert!(trace.is_monotone());
    }

    #[test]
    fn ttc_on_figure_one_moves_agent_four_to_zero() {
        let inst = fig1();
        for (y, distance) in [(5.0, 5.0), (7.0, 7.0)] {
            let trace = ttc(&inst, &Assignment::identity(5), y).unwrap();
            let loc = trace.final_assignment.location(&inst, 3);
            assert_eq!(loc, 0.0);
            assert_eq!((loc - y).abs(), distance);
        }
    }

    #[test]
    fn ttc_single_agent() {
        let inst = Instance::new(8.0, vec![3.0], vec![H]).unwrap();
        for y in [0.0, 3.0, 8.0] {
            let trace = ttc(&inst, &Assignment::identity(1), y).unwrap();
            assert!(trace.steps.is_empty());
            assert!(trace.final_assignment.is_identity());
        }
    }

    #[test]
    fn ttc_rejects_bad_inputs() {
        let inst = fig1();
        assert!(ttc(&inst, &Assignment::identity(4), 0.0).is_err());
        assert!(ttc(&inst, &Assignment::identity(5), 8.5).is_err());
    }

    #[test]
    fn ttc_prefers_keeping_an_equivalent_location() {
        // Agent 0 (H at 2) and agent 1 (H at 6) are equally far from y = 4.
        let inst = Instance::new(8.0, vec![2.0, 6.0], vec![H, H]).unwrap();
        let trace = ttc(&inst, &Assignment::identity(2), 4.0).unwrap();
        assert!(trace.steps.is_empty());
    }

    #[test]
    fn first_beneficial_swap_on_figure_one() {
        let inst = fig1();
        let id = Assignment::identity(5);
        // Lexicographic scan finds agents 1 and 2 first (distances 5 and 4).
        assert_eq!(beneficial_swap_exists(&inst, &id, 5.0).unwrap(), Some((0, 1)));
        // The trade described for agents 1 and 4 is mutually beneficial too.
        assert!(mutual_gain(&inst, id.as_slice(), 5.0, 0, 3));
    }

    #[test]
    fn no_swap_after_the_central_optimum() {
        let inst = fig1();
        let asg = Assignment::new(vec![2, 0, 3, 1, 4]).unwrap();
        let out = Outcome::new(8.0, asg);
        assert_eq!(beneficial_swap_exists(&inst, &out.assignment, 8.0).unwrap(), None);
    }

    #[test]
    fn same_type_agents_never_swap() {
        let inst = Instance::new(8.0, vec![0.0, 3.0, 8.0, 5.5], vec![L; 4]).unwrap();
        for y in [0.0, 2.0, 8.0] {
            assert_eq!(
                beneficial_swap_exists(&inst, &Assignment::identity(4), y).unwrap(),
                None
            );
        }
    }

    #[test]
    fn swap_dynamics_on_figure_one() {
        let inst = fig1();
        let trace = swap_dynamics(&inst, &Assignment::identity(5), 5.0).unwrap();
        assert!(trace.traded());
        assert!(trace.is_monotone());
        assert!(trace.final_welfare() > trace.initial_welfare);
        assert_eq!(
            beneficial_swap_exists(&inst, &trace.final_assignment, 5.0).unwrap(),
            None
        );
    }

    #[test]
    fn swap_dynamics_fixed_points() {
        let inst = Instance::new(8.0, vec![0.0, 8.0], vec![L, H]).unwrap();
        let trace = swap_dynamics(&inst, &Assignment::identity(2), 0.0).unwrap();
        assert!(trace.steps.is_empty());
        assert_eq!(trace.final_welfare(), 16.0);
    }

    #[test]
    fn single_swap_gains_twice_the_distance_gap() {
        // Endowments swapped so that L holds 0 and H holds 1, facility at 1.
        let inst = Instance::new(8.0, vec![1.0, 0.0], vec![L, H]).unwrap();
        let start = Assignment::new(vec![1, 0]).unwrap();
        let trace = swap_dynamics(&inst, &start, 1.0).unwrap();
        assert_eq!(trace.steps.len(), 1);
        assert_eq!(trace.final_welfare() - trace.initial_welfare, 2.0);
    }
}
