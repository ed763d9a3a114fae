//! Reduction from general pure bads to bads with a common ordering.
//!
//! In the reduced instance each agent's bad values are sorted worst-first
//! and written into the bad slots in ascending slot order, so every agent
//! ranks the slots the same way. An allocation of the reduced instance is
//! mapped back by letting the holders of slots pick real bads, last slot
//! first, each taking their favourite remaining bad.

use crate::allocation::Allocation;
use crate::instance::{partition_items, Agent, Instance, Item};

use super::AlgorithmError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdoReduction {
    pub instance: Instance,
    /// Pure bads of the original instance in ascending index order; slot
    /// `k` of the reduction is item `bads[k]`, and slots are ordered worst
    /// first for every agent.
    pub bads: Vec<Item>,
    /// `sigma[i][k]` is agent `i`'s `k`-th worst real bad.
    pub sigma: Vec<Vec<Item>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BadMatch {
    pub agent: Agent,
    pub real: Item,
    pub reduced: Item,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MapBack {
    pub allocation: Allocation,
    /// One record per bad, in picking order.
    pub matches: Vec<BadMatch>,
}

pub fn ido_reduce(inst: &Instance) -> IdoReduction {
    let bads = partition_items(inst).m_minus;
    let mut rows: Vec<Vec<_>> = inst.rows().to_vec();
    let mut sigma = Vec::with_capacity(inst.agents());
    for (i, row) in rows.iter_mut().enumerate() {
        let mut order = bads.clone();
        order.sort_by(|&a, &b| inst.value(i, a).cmp(inst.value(i, b)).then(a.cmp(&b)));
        for (&slot, &real) in bads.iter().zip(&order) {
            row[slot] = inst.value(i, real).clone();
        }
        sigma.push(order);
    }
    IdoReduction {
        instance: Instance::new(rows).expect("same shape"),
        bads,
        sigma,
    }
}

pub fn ido_map_back(
    inst: &Instance,
    reduction: &IdoReduction,
    reduced: &Allocation,
) -> Result<MapBack, AlgorithmError> {
    let mut alloc = Allocation::for_instance(inst);
    let is_bad = {
        let mut v = vec![false; inst.items()];
        for &j in &reduction.bads {
            v[j] = true;
        }
        v
    };
    for j in (0..inst.items()).filter(|&j| !is_bad[j]) {
        if let Some(a) = reduced.owner(j) {
            alloc.assign(j, a).expect("fresh item");
        }
    }

    let mut free = is_bad.clone();
    let mut matches = Vec::with_capacity(reduction.bads.len());
    for &slot in reduction.bads.iter().rev() {
        let agent = reduced.owner(slot).ok_or_else(|| {
            AlgorithmError::Internal(format!("reduced bad {slot} is unallocated"))
        })?;
        let pick = reduction
            .bads
            .iter()
            .copied()
            .filter(|&e| free[e])
            .max_by(|&a, &b| {
                inst.value(agent, a)
                    .cmp(inst.value(agent, b))
                    .then(b.cmp(&a))
            })
            .ok_or_else(|| AlgorithmError::Internal("ran out of real bads".to_string()))?;
        if inst.value(agent, pick) < reduction.instance.value(agent, slot) {
            return Err(AlgorithmError::Internal(format!(
                "agent {agent} picked bad {pick} worth less than reduced bad {slot}"
            )));
        }
        free[pick] = false;
        alloc.assign(pick, agent).expect("fresh item");
        matches.push(BadMatch {
            agent,
            real: pick,
            reduced: slot,
        });
    }
    Ok(MapBack {
        allocation: alloc,
        matches,
    })
}
