//! Problem model: instances, the goods/dummies/bads split of the item set,
//! instance classification and proportional shares.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rational::Rational;

/// Dense 0-based agent index.
pub type Agent = usize;
/// Dense 0-based item index.
pub type Item = usize;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InstanceError {
    #[error("an instance needs at least one agent")]
    NoAgents,
    #[error("row {row} has {found} entries, expected {expected}")]
    Ragged {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("every agent values the bundle of all items at or below zero; nothing can be allocated under the positivity assumption")]
    AllAgentsInactive,
}

/// A fair division instance: `n` agents, `m` items and the exact value
/// matrix `values[i][j]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    values: Vec<Vec<Rational>>,
    items: usize,
}

impl Instance {
    pub fn new(values: Vec<Vec<Rational>>) -> Result<Self, InstanceError> {
        let Some(first) = values.first() else {
            return Err(InstanceError::NoAgents);
        };
        let items = first.len();
        for (row, r) in values.iter().enumerate() {
            if r.len() != items {
                return Err(InstanceError::Ragged {
                    row,
                    expected: items,
                    found: r.len(),
                });
            }
        }
        Ok(Instance { values, items })
    }

    /// Instance with `agents` agents and no items.
    pub fn empty(agents: usize) -> Result<Self, InstanceError> {
        if agents == 0 {
            return Err(InstanceError::NoAgents);
        }
        Ok(Instance {
            values: vec![Vec::new(); agents],
            items: 0,
        })
    }

    pub fn from_integers<R: AsRef<[i64]>>(rows: &[R]) -> Result<Self, InstanceError> {
        Self::new(
            rows.iter()
                .map(|r| r.as_ref().iter().map(|&v| Rational::from(v)).collect())
                .collect(),
        )
    }

    pub fn agents(&self) -> usize {
        self.values.len()
    }

    pub fn items(&self) -> usize {
        self.items
    }

    #[inline]
    pub fn value(&self, agent: Agent, item: Item) -> &Rational {
        &self.values[agent][item]
    }

    pub fn row(&self, agent: Agent) -> &[Rational] {
        &self.values[agent]
    }

    pub fn rows(&self) -> &[Vec<Rational>] {
        &self.values
    }

    pub fn column(&self, item: Item) -> impl Iterator<Item = &Rational> + '_ {
        self.values.iter().map(move |r| &r[item])
    }

    /// `v_i(S)`, the additive value of `bundle` for `agent`.
    pub fn bundle_value<'a, I>(&self, agent: Agent, bundle: I) -> Rational
    where
        I: IntoIterator<Item = &'a Item>,
    {
        let row = &self.values[agent];
        bundle.into_iter().map(|&j| &row[j]).sum()
    }

    /// `v_i(M)`.
    pub fn total_value(&self, agent: Agent) -> Rational {
        self.values[agent].iter().sum()
    }

    /// `v_i(M) / n`.
    pub fn proportional_share(&self, agent: Agent) -> Rational {
        self.total_value(agent) / Rational::from(self.agents() as i64)
    }

    /// `max_k v_kj`.
    pub fn max_value(&self, item: Item) -> Rational {
        self.column(item)
            .max()
            .cloned()
            .expect("instances have at least one agent")
    }

    /// Sub-instance on the listed items (new item `k` is old item `items[k]`).
    pub fn restrict_items(&self, items: &[Item]) -> Instance {
        Instance {
            values: self
                .values
                .iter()
                .map(|r| items.iter().map(|&j| r[j].clone()).collect())
                .collect(),
            items: items.len(),
        }
    }

    /// Sub-instance on the listed agents (new agent `k` is old agent `agents[k]`).
    pub fn restrict_agents(&self, agents: &[Agent]) -> Result<Instance, InstanceError> {
        Instance::new(agents.iter().map(|&i| self.values[i].clone()).collect())
    }

    pub fn into_rows(self) -> Vec<Vec<Rational>> {
        self.values
    }
}

/// Split of the item set into mixed goods, dummy bads and pure bads.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ItemPartition {
    pub m_plus: Vec<Item>,
    pub m_zero: Vec<Item>,
    pub m_minus: Vec<Item>,
}

impl ItemPartition {
    /// `M⁺ ∪ M⁰` in ascending order.
    pub fn non_bads(&self) -> Vec<Item> {
        let mut v: Vec<Item> = self.m_plus.iter().chain(&self.m_zero).copied().collect();
        v.sort_unstable();
        v
    }
}

pub fn partition_items(inst: &Instance) -> ItemPartition {
    let mut part = ItemPartition::default();
    for j in 0..inst.items() {
        if inst.column(j).any(Rational::is_positive) {
            part.m_plus.push(j);
        } else if inst.column(j).any(Rational::is_zero) {
            part.m_zero.push(j);
        } else {
            part.m_minus.push(j);
        }
    }
    part
}

/// Class membership flags of an instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceClass {
    pub goods_only: bool,
    pub bads_only: bool,
    pub separable: bool,
    pub restricted_mixed_goods: bool,
    pub binary_mixed_goods: bool,
    pub ido_bads: bool,
    pub identical_bads: bool,
    pub ido_all: bool,
    pub identical_all: bool,
    /// `(j, v_j)` for every mixed good, present iff the instance has
    /// restricted mixed goods.
    pub restricted_values: Option<Vec<(Item, Rational)>>,
}

impl InstanceClass {
    pub fn flags(&self) -> [(&'static str, bool); 9] {
        [
            ("goods_only", self.goods_only),
            ("bads_only", self.bads_only),
            ("separable", self.separable),
            ("restricted_mixed_goods", self.restricted_mixed_goods),
            ("binary_mixed_goods", self.binary_mixed_goods),
            ("ido_bads", self.ido_bads),
            ("identical_bads", self.identical_bads),
            ("ido_all", self.ido_all),
            ("identical_all", self.identical_all),
        ]
    }
}

pub fn classify(inst: &Instance) -> InstanceClass {
    let part = partition_items(inst);
    let all = |pred: fn(&Rational) -> bool| inst.rows().iter().flatten().all(pred);

    let goods_only = all(|v| !v.is_negative());
    let bads_only = all(Rational::is_negative);
    let separable = part
        .m_plus
        .iter()
        .chain(&part.m_zero)
        .all(|&j| inst.column(j).all(|v| !v.is_negative()));

    let mut restricted = Some(Vec::with_capacity(part.m_plus.len()));
    for &j in &part.m_plus {
        let mut positives = inst.column(j).filter(|v| v.is_positive());
        let first = positives
            .next()
            .expect("mixed goods have a positive valuer");
        if positives.all(|v| v == first) {
            if let Some(list) = restricted.as_mut() {
                list.push((j, first.clone()));
            }
        } else {
            restricted = None;
            break;
        }
    }
    let restricted_mixed_goods = restricted.is_some();
    let binary_mixed_goods = restricted
        .as_ref()
        .is_some_and(|list| list.windows(2).all(|w| w[0].1 == w[1].1));

    let identical_column = |j: Item| {
        let first = inst.value(0, j);
        inst.column(j).all(|v| v == first)
    };
    let identical_bads = part.m_minus.iter().all(|&j| identical_column(j));
    let identical_all = (0..inst.items()).all(identical_column);
    let ido_bads = common_order(inst, &part.m_minus).is_some();
    let all_items: Vec<Item> = (0..inst.items()).collect();
    let ido_all = common_order(inst, &all_items).is_some();

    InstanceClass {
        goods_only,
        bads_only,
        separable,
        restricted_mixed_goods,
        binary_mixed_goods,
        ido_bads,
        identical_bads,
        ido_all,
        identical_all,
        restricted_values: restricted,
    }
}

/// An ordering of `items` that is weakly increasing in value for every
/// agent, if one exists. Ties are broken by ascending item index.
///
/// Sorting the value columns lexicographically produces such an order
/// whenever any exists: if no two agents rank a pair strictly opposite,
/// the first agent that distinguishes the pair decides it for everyone.
pub fn common_order(inst: &Instance, items: &[Item]) -> Option<Vec<Item>> {
    let mut order = items.to_vec();
    order.sort_by(|&a, &b| {
        inst.column(a)
            .zip(inst.column(b))
            .map(|(x, y)| x.cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let consistent = order
        .windows(2)
        .all(|w| (0..inst.agents()).all(|i| inst.value(i, w[0]) <= inst.value(i, w[1])));
    consistent.then_some(order)
}

/// Agents that take part in allocation: those with `v_i(M) > 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActiveAgents {
    pub active: Vec<Agent>,
    /// Agents with `v_i(M) <= 0`; they keep the empty bundle.
    pub inactive: Vec<Agent>,
}

impl ActiveAgents {
    pub fn all_active(&self) -> bool {
        self.inactive.is_empty()
    }
}

pub fn preprocess_nonpositive_agents(inst: &Instance) -> Result<ActiveAgents, InstanceError> {
    let (active, inactive): (Vec<Agent>, Vec<Agent>) =
        (0..inst.agents()).partition(|&i| inst.total_value(i).is_positive());
    if active.is_empty() && inst.items() > 0 {
        return Err(InstanceError::AllAgentsInactive);
    }
    Ok(ActiveAgents { active, inactive })
}
