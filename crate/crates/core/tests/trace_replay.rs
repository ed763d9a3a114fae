//! Replays solver traces step by step and checks the invariants each phase
//! maintains.

mod common;

use common::{restricted, separable, Bads};
use manna_core::algorithms::{ido_reduce, solve, Rule, TraceStep};
use manna_core::fairness::{check_efx, check_po_sufficient};
use manna_core::{classify, AlgorithmId, Allocation, EnvyGraph, GraphMode, Instance};
use proptest::prelude::*;

struct Replay {
    agents: usize,
    owners: Vec<Option<usize>>,
}

impl Replay {
    fn new(inst: &Instance) -> Self {
        Replay {
            agents: inst.agents(),
            owners: vec![None; inst.items()],
        }
    }

    fn allocation(&self) -> Allocation {
        let mut x = Allocation::empty(self.agents, self.owners.len());
        for (j, o) in self.owners.iter().enumerate() {
            if let Some(a) = o {
                x.assign(j, *a).unwrap();
            }
        }
        x
    }

    fn allocated(&self) -> Vec<usize> {
        (0..self.owners.len())
            .filter(|&j| self.owners[j].is_some())
            .collect()
    }

    fn apply(&mut self, step: &TraceStep) {
        match (&step.cycle, step.item, step.recipient) {
            (Some(cycle), _, _) => {
                let next: Vec<Option<usize>> = self
                    .owners
                    .iter()
                    .map(|o| {
                        o.map(|a| match cycle.iter().position(|&c| c == a) {
                            // Agent cycle[t] takes the bundle of cycle[t+1].
                            Some(t) => cycle[(t + cycle.len() - 1) % cycle.len()],
                            None => a,
                        })
                    })
                    .collect();
                self.owners = next;
            }
            (None, Some(j), Some(a)) => self.owners[j] = Some(a),
            _ => panic!("malformed step {step:?}"),
        }
    }
}

/// EFX (or EFX0) and the argmax certificate on the items handed out so far.
fn partial_ok(inst: &Instance, replay: &Replay, zero: bool) -> Result<(), String> {
    let items = replay.allocated();
    let sub = inst.restrict_items(&items);
    let x = replay.allocation().restrict_items(&items);
    if !check_efx(&sub, &x, zero).holds {
        return Err(format!("EFX fails after items {items:?}"));
    }
    if !check_po_sufficient(&sub, &x) {
        return Err(format!("certificate fails after items {items:?}"));
    }
    Ok(())
}

fn check_restricted(inst: &Instance, id: AlgorithmId) -> Result<(), String> {
    let r = solve(inst, id).map_err(|e| e.to_string())?;
    let mut replay = Replay::new(inst);
    let binary = id == AlgorithmId::Alg3BinaryMixed;
    for step in &r.trace {
        replay.apply(step);
        // The binary goods phase only settles as a whole.
        if step.rule != Rule::BinaryGoods {
            partial_ok(inst, &replay, binary)?;
        }
    }
    if replay.allocation() != r.allocation {
        return Err("replayed trace disagrees with the result".into());
    }
    partial_ok(inst, &replay, binary)
}

/// Around every pure bad: the recipient envies nobody when it receives the
/// bad, and each rotation follows a top-envy cycle whose agents all gain.
fn check_top_envy(inst: &Instance, id: AlgorithmId) -> Result<(), String> {
    let r = solve(inst, id).map_err(|e| e.to_string())?;
    let reduced = r.trace.iter().any(|s| s.rule == Rule::IdoMapBack);
    let work = if reduced {
        ido_reduce(inst).instance
    } else {
        inst.clone()
    };
    let mut replay = Replay::new(&work);
    let mut bads_done = 0;
    for step in &r.trace {
        if step.rule == Rule::IdoMapBack {
            break;
        }
        let before = replay.allocation();
        match step.rule {
            Rule::BadToTopSink => {
                let g = EnvyGraph::build(&work, &before, GraphMode::Top);
                let a = step.recipient.unwrap();
                if !g.successors(a).is_empty() {
                    return Err(format!("bad {:?} went to non-sink {a}", step.item));
                }
                bads_done += 1;
            }
            Rule::TopCycleRotation => {
                let g = EnvyGraph::build(&work, &before, GraphMode::Top);
                let cycle = step.cycle.as_ref().unwrap();
                if !g.is_cycle(cycle) {
                    return Err(format!("{cycle:?} is not a top-envy cycle"));
                }
            }
            _ => {}
        }
        replay.apply(step);
        if step.rule == Rule::TopCycleRotation {
            let after = replay.allocation();
            for &a in step.cycle.as_ref().unwrap() {
                if work.bundle_value(a, after.bundle(a)) <= work.bundle_value(a, before.bundle(a)) {
                    return Err(format!("agent {a} did not gain from a rotation"));
                }
            }
        }
        if id == AlgorithmId::Alg5RmgIdoBads && bads_done > 0 {
            let binary = classify(inst).binary_mixed_goods;
            let items = replay.allocated();
            let sub = work.restrict_items(&items);
            if !check_efx(&sub, &replay.allocation().restrict_items(&items), binary).holds {
                return Err(format!("EFX fails during the bad loop after {items:?}"));
            }
        }
    }
    if !reduced && replay.allocation() != r.allocation {
        return Err("replayed trace disagrees with the result".into());
    }
    Ok(())
}

fn all_active(inst: &Instance) -> bool {
    (0..inst.agents()).all(|i| inst.total_value(i).is_positive())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn alg1_steps_keep_efx_and_certificate(inst in restricted(1..=4, 1..=7, false, false, Bads::None)) {
        prop_assert_eq!(check_restricted(&inst, AlgorithmId::Alg1RestrictedGoods), Ok(()));
    }

    #[test]
    fn alg2_steps_keep_efx_and_certificate(inst in restricted(1..=4, 1..=7, false, true, Bads::Identical)) {
        prop_assume!(all_active(&inst));
        prop_assert_eq!(check_restricted(&inst, AlgorithmId::Alg2RmgIdenticalBads), Ok(()));
    }

    #[test]
    fn alg3_steps_keep_efx0_and_certificate(inst in restricted(1..=4, 1..=7, true, true, Bads::Identical)) {
        prop_assume!(all_active(&inst));
        prop_assert_eq!(check_restricted(&inst, AlgorithmId::Alg3BinaryMixed), Ok(()));
    }

    #[test]
    fn alg4_bad_loop(inst in separable(4, 7)) {
        prop_assume!(all_active(&inst));
        prop_assert_eq!(check_top_envy(&inst, AlgorithmId::Alg4Separable), Ok(()));
    }

    #[test]
    fn alg5_bad_loop(inst in restricted(1..=4, 1..=7, false, true, Bads::Ordered)) {
        prop_assume!(all_active(&inst));
        prop_assert_eq!(check_top_envy(&inst, AlgorithmId::Alg5RmgIdoBads), Ok(()));
    }

    #[test]
    fn alg6_bad_loop(inst in restricted(1..=4, 1..=7, false, true, Bads::General)) {
        prop_assume!(all_active(&inst));
        prop_assert_eq!(check_top_envy(&inst, AlgorithmId::Alg6RmgGeneralBads), Ok(()));
    }
}
