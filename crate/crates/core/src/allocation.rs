use std::collections::BTreeSet;

use thiserror::Error;

use crate::instance::{Agent, Instance, Item};
use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AllocationError {
    #[error("item {item} is out of range (instance has {items} items)")]
    ItemOutOfRange { item: Item, items: usize },
    #[error("item {item} is assigned to both agent {first} and agent {second}")]
    Overlap {
        item: Item,
        first: Agent,
        second: Agent,
    },
    #[error("expected {expected} bundles, found {found}")]
    BundleCount { expected: usize, found: usize },
}

/// A disjoint assignment of (some of) the items to the agents.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Allocation {
    bundles: Vec<BTreeSet<Item>>,
    owner: Vec<Option<Agent>>,
}

impl Allocation {
    /// All `agents` bundles empty over an item set of size `items`.
    pub fn empty(agents: usize, items: usize) -> Self {
        Allocation {
            bundles: vec![BTreeSet::new(); agents],
            owner: vec![None; items],
        }
    }

    pub fn for_instance(inst: &Instance) -> Self {
        Self::empty(inst.agents(), inst.items())
    }

    pub fn from_bundles<B, I>(items: usize, bundles: B) -> Result<Self, AllocationError>
    where
        B: IntoIterator<Item = I>,
        I: IntoIterator<Item = Item>,
    {
        let bundles: Vec<Vec<Item>> = bundles
            .into_iter()
            .map(|b| b.into_iter().collect())
            .collect();
        let mut alloc = Allocation::empty(bundles.len(), items);
        for (agent, bundle) in bundles.into_iter().enumerate() {
            for item in bundle {
                alloc.assign(item, agent)?;
            }
        }
        Ok(alloc)
    }

    /// Complete allocation where item `j` goes to `owners[j]`.
    pub fn from_owners(agents: usize, owners: &[Agent]) -> Self {
        let mut alloc = Allocation::empty(agents, owners.len());
        for (item, &agent) in owners.iter().enumerate() {
            alloc
                .assign(item, agent)
                .expect("owner vector assigns each item once");
        }
        alloc
    }

    pub fn assign(&mut self, item: Item, agent: Agent) -> Result<(), AllocationError> {
        let items = self.owner.len();
        let slot = self
            .owner
            .get_mut(item)
            .ok_or(AllocationError::ItemOutOfRange { item, items })?;
        if let Some(first) = *slot {
            return Err(AllocationError::Overlap {
                item,
                first,
                second: agent,
            });
        }
        *slot = Some(agent);
        self.bundles[agent].insert(item);
        Ok(())
    }

    /// Takes `item` back from its holder, if any.
    pub(crate) fn unassign(&mut self, item: Item) -> Option<Agent> {
        let holder = self.owner[item].take()?;
        self.bundles[holder].remove(&item);
        Some(holder)
    }

    pub fn agents(&self) -> usize {
        self.bundles.len()
    }

    pub fn items(&self) -> usize {
        self.owner.len()
    }

    pub fn bundle(&self, agent: Agent) -> &BTreeSet<Item> {
        &self.bundles[agent]
    }

    pub fn bundles(&self) -> &[BTreeSet<Item>] {
        &self.bundles
    }

    pub fn owner(&self, item: Item) -> Option<Agent> {
        self.owner[item]
    }

    /// Union of all bundles in ascending order.
    pub fn allocated(&self) -> Vec<Item> {
        (0..self.owner.len())
            .filter(|&j| self.owner[j].is_some())
            .collect()
    }

    pub fn unallocated(&self) -> Vec<Item> {
        (0..self.owner.len())
            .filter(|&j| self.owner[j].is_none())
            .collect()
    }

    pub fn is_complete(&self) -> bool {
        self.owner.iter().all(Option::is_some)
    }

    /// Exchange bundles: agent `cycle[t]` takes the bundle `cycle[t+1]` held
    /// (cyclically). Agents outside the cycle keep theirs.
    pub(crate) fn rotate(&mut self, cycle: &[Agent]) {
        if cycle.len() < 2 {
            return;
        }
        let taken: Vec<BTreeSet<Item>> = cycle
            .iter()
            .map(|&a| std::mem::take(&mut self.bundles[a]))
            .collect();
        for (t, &agent) in cycle.iter().enumerate() {
            let bundle = taken[(t + 1) % cycle.len()].clone();
            for &j in &bundle {
                self.owner[j] = Some(agent);
            }
            self.bundles[agent] = bundle;
        }
    }

    /// `v_i(x_i)` for every agent.
    pub fn utilities(&self, inst: &Instance) -> Vec<Rational> {
        (0..self.agents())
            .map(|i| inst.bundle_value(i, &self.bundles[i]))
            .collect()
    }

    /// The allocation re-indexed onto the sub-instance `inst.restrict_items(items)`.
    /// Items outside `items` are dropped.
    pub fn restrict_items(&self, items: &[Item]) -> Allocation {
        let mut out = Allocation::empty(self.agents(), items.len());
        for (k, &j) in items.iter().enumerate() {
            if let Some(a) = self.owner[j] {
                out.assign(k, a).expect("fresh slot");
            }
        }
        out
    }

    /// Lifts an allocation of a sub-instance back: sub-item `k` is item
    /// `items[k]`, sub-agent `a` is agent `agents[a]`.
    pub(crate) fn embed(&self, agents: &[Agent], items: &[Item], into: &mut Allocation) {
        for (a, bundle) in self.bundles.iter().enumerate() {
            for &k in bundle {
                into.assign(items[k], agents[a])
                    .expect("embedded items are disjoint from existing ones");
            }
        }
    }

    /// Owner vector of a complete allocation.
    pub fn owners(&self) -> Option<Vec<Agent>> {
        self.owner.iter().copied().collect()
    }
}
