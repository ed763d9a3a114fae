//! Top-envy-graph algorithms for bads: separable instances and restricted
//! mixed goods with ordered or general bads.

use crate::allocation::Allocation;
use crate::graph::GraphMode;
use crate::instance::{classify, common_order, partition_items, Agent, Instance, Item};

use super::ido::{ido_map_back, ido_reduce};
use super::propm0::{ExactSearch, PropM0Engine};
use super::restricted::goods_and_dummies;
use super::{AlgorithmError, AlgorithmId, Rule, Run, SolveResult, TraceStep};

pub fn alg4_separable(inst: &Instance) -> Result<SolveResult, AlgorithmError> {
    alg4_separable_with(inst, &ExactSearch::default())
}

pub fn alg4_separable_with(
    inst: &Instance,
    engine: &dyn PropM0Engine,
) -> Result<SolveResult, AlgorithmError> {
    AlgorithmId::Alg4Separable.check_preconditions(inst)?;
    let part = partition_items(inst);
    let non_bads = part.non_bads();
    let goods = engine.allocate(&inst.restrict_items(&non_bads))?;
    let agents: Vec<Agent> = (0..inst.agents()).collect();
    let mut alloc = Allocation::for_instance(inst);
    goods.embed(&agents, &non_bads, &mut alloc);
    let trace = non_bads
        .iter()
        .enumerate()
        .map(|(step, &j)| TraceStep {
            step,
            item: Some(j),
            recipient: alloc.owner(j),
            rule: Rule::Propm0Goods,
            cycle: None,
        })
        .collect();
    bads_phase(inst, alloc, trace, AlgorithmId::Alg4Separable)
}

pub fn alg5_rmg_ido_bads(inst: &Instance) -> Result<SolveResult, AlgorithmError> {
    AlgorithmId::Alg5RmgIdoBads.check_preconditions(inst)?;
    let binary = classify(inst).binary_mixed_goods;
    let mut run = goods_and_dummies(inst, binary)?;
    let order = common_order(inst, &partition_items(inst).m_minus)
        .expect("precondition guarantees a common bad order");
    bads_to_top_sinks(&mut run, &order)?;
    Ok(SolveResult {
        allocation: run.alloc,
        algorithm: AlgorithmId::Alg5RmgIdoBads,
        guarantees: Vec::new(),
        trace: run.trace,
    })
}

pub fn alg6_rmg_general_bads(inst: &Instance) -> Result<SolveResult, AlgorithmError> {
    AlgorithmId::Alg6RmgGeneralBads.check_preconditions(inst)?;
    let binary = classify(inst).binary_mixed_goods;
    let run = goods_and_dummies(inst, binary)?;
    let (alloc, trace) = (run.alloc, run.trace);
    bads_phase(inst, alloc, trace, AlgorithmId::Alg6RmgGeneralBads)
}

/// Allocates the pure bads on top of `alloc` (which holds every other
/// item), going through the ordering reduction when the bads are not
/// already commonly ordered.
fn bads_phase(
    inst: &Instance,
    alloc: Allocation,
    trace: Vec<TraceStep>,
    algorithm: AlgorithmId,
) -> Result<SolveResult, AlgorithmError> {
    let bads = partition_items(inst).m_minus;
    if let Some(order) = common_order(inst, &bads) {
        let mut run = Run::with_allocation(inst, alloc, trace);
        bads_to_top_sinks(&mut run, &order)?;
        return Ok(SolveResult {
            allocation: run.alloc,
            algorithm,
            guarantees: Vec::new(),
            trace: run.trace,
        });
    }

    let reduction = ido_reduce(inst);
    let mut run = Run::with_allocation(&reduction.instance, alloc, trace);
    // Slots are worst-first for everyone by construction.
    bads_to_top_sinks(&mut run, &reduction.bads)?;
    let back = ido_map_back(inst, &reduction, &run.alloc)?;
    let mut trace = run.trace;
    for m in &back.matches {
        trace.push(TraceStep {
            step: trace.len(),
            item: Some(m.real),
            recipient: Some(m.agent),
            rule: Rule::IdoMapBack,
            cycle: None,
        });
    }
    Ok(SolveResult {
        allocation: back.allocation,
        algorithm,
        guarantees: Vec::new(),
        trace,
    })
}

/// Each bad in `order` goes to the lowest-index sink of the top-envy graph,
/// after rotating bundles along top-envy cycles while no sink exists.
fn bads_to_top_sinks(run: &mut Run<'_>, order: &[Item]) -> Result<(), AlgorithmError> {
    let n = run.inst.agents();
    for &j in order {
        let mut rotations = 0;
        loop {
            let graph = run.graph(GraphMode::Top);
            if let Some(sink) = graph.find_sink() {
                run.assign(j, sink, Rule::BadToTopSink);
                break;
            }
            // Every agent on a rotated cycle receives its favourite bundle
            // and stops envying, so a sink appears after at most n/2 rounds.
            if rotations >= n {
                return Err(AlgorithmError::Internal(format!(
                    "no top-envy sink after {rotations} rotations before bad {j}"
                )));
            }
            let cycle = graph.find_cycle().ok_or_else(|| {
                AlgorithmError::Internal("top-envy graph has neither a sink nor a cycle".into())
            })?;
            let before = run.util.social_welfare();
            run.rotate(&cycle);
            if run.util.social_welfare() <= before {
                return Err(AlgorithmError::Internal(
                    "top-envy rotation did not increase social welfare".into(),
                ));
            }
            rotations += 1;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fairness::{check_efx, check_prop_family, FairnessNotion};

    fn holds(inst: &Instance, x: &Allocation, notion: FairnessNotion) -> bool {
        check_prop_family(inst, x, notion).unwrap().holds
    }

    #[test]
    fn alg4_rotates_two_cycle_before_bad() {
        // Goods phase gives each agent the item the other prefers, so the
        // top-envy graph is a 2-cycle when the bad arrives.
        let inst = Instance::from_integers(&[[1, 3, -2], [3, 1, -2]]).unwrap();
        struct Swapped;
        impl PropM0Engine for Swapped {
            fn allocate(&self, _: &Instance) -> Result<Allocation, AlgorithmError> {
                Ok(Allocation::from_owners(2, &[0, 1]))
            }
        }
        let r = alg4_separable_with(&inst, &Swapped).unwrap();
        assert!(r.trace.iter().any(|s| s.rule == Rule::TopCycleRotation));
        assert_eq!(r.allocation.owners(), Some(vec![1, 0, 0]));
        assert!(holds(&inst, &r.allocation, FairnessNotion::PropMx0));
    }

    #[test]
    fn alg4_without_bads_keeps_goods() {
        let inst = Instance::from_integers(&[[1, 0, 2], [0, 1, 2]]).unwrap();
        let r = alg4_separable(&inst).unwrap();
        assert!(holds(&inst, &r.allocation, FairnessNotion::PropM0));
        assert!(holds(&inst, &r.allocation, FairnessNotion::PropMx0));
    }

    #[test]
    fn alg4_bads_only() {
        let inst = Instance::from_integers(&[[-3, -2, -1], [-6, -4, -1]]).unwrap();
        let r = alg4_separable(&inst).unwrap();
        assert!(holds(&inst, &r.allocation, FairnessNotion::PropX));
        assert!(holds(&inst, &r.allocation, FairnessNotion::PropMx0));
    }

    #[test]
    fn alg4_general_bads_use_reduction() {
        let inst = Instance::from_integers(&[[2, -3, -1], [2, -1, -3]]).unwrap();
        let r = alg4_separable(&inst).unwrap();
        assert!(r.trace.iter().any(|s| s.rule == Rule::IdoMapBack));
        assert!(holds(&inst, &r.allocation, FairnessNotion::PropMx0));
    }

    #[test]
    fn alg5_efx_with_ido_bads() {
        let inst =
            Instance::from_integers(&[[2, 0, -4, -1], [2, 1, -2, -1], [0, 1, -9, -3]]).unwrap();
        let r = alg5_rmg_ido_bads(&inst).unwrap();
        assert!(check_efx(&inst, &r.allocation, false).holds);
    }

    #[test]
    fn alg5_binary_efx0() {
        let inst = Instance::from_integers(&[[1, 1, 0, -2], [1, 0, -1, -5]]).unwrap();
        let r = alg5_rmg_ido_bads(&inst).unwrap();
        assert!(check_efx(&inst, &r.allocation, true).holds);
    }

    #[test]
    fn alg6_clashing_bads() {
        let inst = Instance::from_integers(&[[3, 0, -3, -1], [0, 3, -1, -3]]).unwrap();
        let r = alg6_rmg_general_bads(&inst).unwrap();
        assert!(holds(&inst, &r.allocation, FairnessNotion::PropMx));
        assert!(r.allocation.is_complete());
    }
}
