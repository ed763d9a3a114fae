//! Envy-graph algorithms for restricted mixed goods with identical bads.

use crate::allocation::Allocation;
use crate::graph::GraphMode;
use crate::instance::{partition_items, Agent, Instance, Item};
use crate::rational::Rational;

use super::binary::binary_goods_mnw;
use super::{append_trace, AlgorithmError, AlgorithmId, Rule, Run, SolveResult, TraceStep};

/// Goods instance on `items` with every negative value clamped to zero.
pub fn positive_projection(inst: &Instance, items: &[Item]) -> Instance {
    let rows = inst
        .rows()
        .iter()
        .map(|row| {
            items
                .iter()
                .map(|&j| {
                    if row[j].is_positive() {
                        row[j].clone()
                    } else {
                        Rational::zero()
                    }
                })
                .collect()
        })
        .collect();
    Instance::new(rows).expect("projection keeps the agent count and row lengths")
}

pub fn alg1_restricted_goods(inst: &Instance) -> Result<SolveResult, AlgorithmError> {
    AlgorithmId::Alg1RestrictedGoods.check_preconditions(inst)?;
    let mut run = Run::new(inst);
    let items: Vec<Item> = (0..inst.items()).collect();
    goods_to_sources(&mut run, &items)?;
    Ok(finish(run, AlgorithmId::Alg1RestrictedGoods))
}

pub fn alg2_rmg_identical_bads(inst: &Instance) -> Result<SolveResult, AlgorithmError> {
    AlgorithmId::Alg2RmgIdenticalBads.check_preconditions(inst)?;
    let mut run = goods_and_dummies(inst, false)?;
    bads_to_sinks(&mut run)?;
    Ok(finish(run, AlgorithmId::Alg2RmgIdenticalBads))
}

pub fn alg3_binary_mixed(inst: &Instance) -> Result<SolveResult, AlgorithmError> {
    AlgorithmId::Alg3BinaryMixed.check_preconditions(inst)?;
    let mut run = goods_and_dummies(inst, true)?;
    bads_to_sinks(&mut run)?;
    Ok(finish(run, AlgorithmId::Alg3BinaryMixed))
}

fn finish(run: Run<'_>, algorithm: AlgorithmId) -> SolveResult {
    SolveResult {
        allocation: run.alloc,
        algorithm,
        guarantees: Vec::new(),
        trace: run.trace,
    }
}

/// Each listed good, highest value first, goes to the lowest-index source
/// of the envy graph induced by its top valuers.
fn goods_to_sources(run: &mut Run<'_>, items: &[Item]) -> Result<(), AlgorithmError> {
    let inst = run.inst;
    let mut order: Vec<(Rational, Item)> = items.iter().map(|&j| (inst.max_value(j), j)).collect();
    order.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    for (top, j) in order {
        let valuers: Vec<Agent> = (0..inst.agents())
            .filter(|&i| *inst.value(i, j) == top)
            .collect();
        let source = run
            .graph(GraphMode::Plain)
            .find_source(&valuers)
            .ok_or_else(|| {
                AlgorithmError::Internal(format!("no source among the top valuers of item {j}"))
            })?;
        run.assign(j, source, Rule::GoodToSource);
    }
    Ok(())
}

/// Phases 1 and 2: mixed goods on the positive projection, then dummy bads.
/// `binary` selects the Nash welfare goods routine and source-respecting
/// dummy placement.
pub(crate) fn goods_and_dummies(inst: &Instance, binary: bool) -> Result<Run<'_>, AlgorithmError> {
    let part = partition_items(inst);
    let projected = positive_projection(inst, &part.m_plus);
    let (goods, goods_trace) = if binary {
        let alloc = binary_goods_mnw(&projected)?;
        let trace = (0..projected.items())
            .map(|k| TraceStep {
                step: k,
                item: Some(k),
                recipient: alloc.owner(k),
                rule: Rule::BinaryGoods,
                cycle: None,
            })
            .collect();
        (alloc, trace)
    } else {
        let mut sub = Run::new(&projected);
        let items: Vec<Item> = (0..projected.items()).collect();
        goods_to_sources(&mut sub, &items)?;
        (sub.alloc, sub.trace)
    };

    let agents: Vec<Agent> = (0..inst.agents()).collect();
    let mut alloc = Allocation::for_instance(inst);
    goods.embed(&agents, &part.m_plus, &mut alloc);
    let mut trace = Vec::new();
    append_trace(&mut trace, &goods_trace, &agents, &part.m_plus);
    let mut run = Run::with_allocation(inst, alloc, trace);

    for &j in &part.m_zero {
        let zero_valuers: Vec<Agent> = (0..inst.agents())
            .filter(|&i| inst.value(i, j).is_zero())
            .collect();
        if binary {
            let source = run
                .graph(GraphMode::Plain)
                .find_source(&zero_valuers)
                .ok_or_else(|| {
                    AlgorithmError::Internal(format!(
                        "no source among the zero valuers of item {j}"
                    ))
                })?;
            run.assign(j, source, Rule::DummyToSource);
        } else {
            run.assign(j, zero_valuers[0], Rule::DummyToZeroValuer);
        }
    }
    Ok(run)
}

/// Phase 3 for identical bads: most painful first, each to the lowest-index
/// sink of the envy graph.
fn bads_to_sinks(run: &mut Run<'_>) -> Result<(), AlgorithmError> {
    let inst = run.inst;
    let mut bads = partition_items(inst).m_minus;
    bads.sort_by(|&a, &b| inst.value(0, a).cmp(inst.value(0, b)).then(a.cmp(&b)));
    for j in bads {
        let sink = run.graph(GraphMode::Plain).find_sink().ok_or_else(|| {
            AlgorithmError::Internal(format!("envy graph has no sink before bad {j}"))
        })?;
        run.assign(j, sink, Rule::BadToSink);
    }
    Ok(())
}
