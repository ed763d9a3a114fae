//! PropM₀ allocations of goods.
//!
//! The engine is pluggable. [`ExactSearch`] is a pruned depth-first search
//! over all assignments and returns the first allocation passing the PropM₀
//! checker; it is exponential and meant for small instances.

use crate::allocation::Allocation;
use crate::fairness::{check_prop_family, FairnessNotion};
use crate::instance::{Agent, Instance, Item};
use crate::rational::Rational;

use super::{AlgorithmError, AlgorithmId};

pub const DEFAULT_SEARCH_BUDGET: u64 = 10_000_000;

/// Computes an allocation of a goods-only instance in which every agent
/// `i` has `v_i(x_i) + d_i(x) >= v_i(M) / n`, with `d_i` taken over
/// non-negatively valued items.
pub trait PropM0Engine: Sync {
    fn allocate(&self, inst: &Instance) -> Result<Allocation, AlgorithmError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExactSearch {
    pub node_budget: u64,
}

impl Default for ExactSearch {
    fn default() -> Self {
        ExactSearch {
            node_budget: DEFAULT_SEARCH_BUDGET,
        }
    }
}

pub fn goods_propm0(inst: &Instance) -> Result<Allocation, AlgorithmError> {
    ExactSearch::default().allocate(inst)
}

impl PropM0Engine for ExactSearch {
    fn allocate(&self, inst: &Instance) -> Result<Allocation, AlgorithmError> {
        if inst.rows().iter().flatten().any(Rational::is_negative) {
            return Err(AlgorithmError::PreconditionViolated {
                algorithm: AlgorithmId::Alg4Separable,
                flag: "goods_only",
            });
        }
        let n = inst.agents();
        // Big items first: they decide the most.
        let mut order: Vec<Item> = (0..inst.items()).collect();
        let weight = |j: Item| inst.column(j).sum::<Rational>();
        order.sort_by(|&a, &b| weight(b).cmp(&weight(a)).then(a.cmp(&b)));

        let mut search = Search {
            inst,
            order: &order,
            shares: (0..n).map(|i| inst.proportional_share(i)).collect(),
            own: vec![Rational::zero(); n],
            remaining: (0..n).map(|i| inst.total_value(i)).collect(),
            alloc: Allocation::for_instance(inst),
            explored: 0,
            budget: self.node_budget,
        };
        match search.descend(0)? {
            true => Ok(search.alloc),
            false => Err(AlgorithmError::SearchExhausted {
                explored: search.explored,
            }),
        }
    }
}

struct Search<'a> {
    inst: &'a Instance,
    order: &'a [Item],
    shares: Vec<Rational>,
    own: Vec<Rational>,
    /// Value of the unassigned items, per agent.
    remaining: Vec<Rational>,
    alloc: Allocation,
    explored: u64,
    budget: u64,
}

impl Search<'_> {
    fn descend(&mut self, depth: usize) -> Result<bool, AlgorithmError> {
        self.explored += 1;
        if self.explored > self.budget {
            return Err(AlgorithmError::SearchExhausted {
                explored: self.budget,
            });
        }
        if depth == self.order.len() {
            let report = check_prop_family(self.inst, &self.alloc, FairnessNotion::PropM0)
                .expect("goods-only input");
            return Ok(report.holds);
        }
        if (0..self.inst.agents()).any(|i| !self.can_still_reach(i)) {
            return Ok(false);
        }
        let j = self.order[depth];
        for i in self.children(j) {
            let v = self.inst.value(i, j).clone();
            self.alloc.assign(j, i).expect("fresh item");
            for k in 0..self.inst.agents() {
                self.remaining[k] -= self.inst.value(k, j);
            }
            self.own[i] += &v;
            let found = self.descend(depth + 1)?;
            if found {
                return Ok(true);
            }
            self.own[i] -= &v;
            for k in 0..self.inst.agents() {
                self.remaining[k] += self.inst.value(k, j);
            }
            self.alloc.unassign(j);
        }
        Ok(false)
    }

    /// Upper bound on `v_i(x_i) + d_i(x)` over all completions: `i` could
    /// take every remaining item, and no rival's minimum can rise above its
    /// current one (or, for an empty rival, above i's best remaining item).
    fn can_still_reach(&self, i: Agent) -> bool {
        let inst = self.inst;
        let best_remaining = self
            .alloc
            .unallocated()
            .into_iter()
            .map(|j| inst.value(i, j))
            .max()
            .cloned();
        let d_bound = (0..inst.agents())
            .filter(|&h| h != i)
            .filter_map(|h| {
                let b = self.alloc.bundle(h);
                if b.is_empty() {
                    best_remaining.clone()
                } else {
                    b.iter().map(|&j| inst.value(i, j)).min().cloned()
                }
            })
            .max()
            .unwrap_or_else(Rational::zero);
        &self.own[i] + &self.remaining[i] + d_bound >= self.shares[i]
    }

    /// Agents valuing `j` positively first, then those furthest below
    /// their share.
    fn children(&self, j: Item) -> Vec<Agent> {
        let mut agents: Vec<Agent> = (0..self.inst.agents()).collect();
        agents.sort_by(|&a, &b| {
            let pa = self.inst.value(a, j).is_positive();
            let pb = self.inst.value(b, j).is_positive();
            pb.cmp(&pa)
                .then_with(|| {
                    (&self.own[a] - &self.shares[a]).cmp(&(&self.own[b] - &self.shares[b]))
                })
                .then(a.cmp(&b))
        });
        agents
    }
}
