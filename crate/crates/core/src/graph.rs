//! Envy graphs and top-envy graphs, source/sink selection and envy-cycle
//! elimination.
//!
//! All selections are deterministic: ties go to the lowest agent index and
//! adjacency lists are kept in ascending target order.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::allocation::Allocation;
use crate::instance::{Agent, Instance, Item};
use crate::rational::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum GraphMode {
    /// `i -> h` iff `i` envies `h`.
    Plain,
    /// `i -> h` iff `i` envies `h` and `x_h` is among `i`'s favourite rival bundles.
    Top,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("{0:?} is not a directed cycle of the envy graph")]
    NotACycle(Vec<Agent>),
}

/// `cross[i][h] = v_i(x_h)`, maintained incrementally while items are
/// handed out so graphs can be rebuilt without re-summing bundles.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UtilityMatrix {
    cross: Vec<Vec<Rational>>,
}

impl UtilityMatrix {
    pub fn new(inst: &Instance, alloc: &Allocation) -> Self {
        let n = alloc.agents();
        let cross = (0..n)
            .map(|i| {
                (0..n)
                    .map(|h| inst.bundle_value(i, alloc.bundle(h)))
                    .collect()
            })
            .collect();
        UtilityMatrix { cross }
    }

    #[inline]
    pub fn get(&self, i: Agent, h: Agent) -> &Rational {
        &self.cross[i][h]
    }

    pub fn utility(&self, i: Agent) -> &Rational {
        &self.cross[i][i]
    }

    pub fn agents(&self) -> usize {
        self.cross.len()
    }

    /// Account for `item` being added to the bundle of `holder`.
    pub fn add_item(&mut self, inst: &Instance, item: Item, holder: Agent) {
        for (i, row) in self.cross.iter_mut().enumerate() {
            row[holder] += inst.value(i, item);
        }
    }

    /// Account for [`Allocation::rotate`] along `cycle`.
    pub fn rotate(&mut self, cycle: &[Agent]) {
        for row in &mut self.cross {
            let taken: Vec<Rational> = cycle.iter().map(|&a| row[a].clone()).collect();
            for (t, &a) in cycle.iter().enumerate() {
                row[a] = taken[(t + 1) % cycle.len()].clone();
            }
        }
    }

    pub fn social_welfare(&self) -> Rational {
        (0..self.agents()).map(|i| self.utility(i)).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnvyGraph {
    mode: GraphMode,
    nodes: Vec<Agent>,
    /// Indexed by agent; empty for agents outside `nodes`.
    out: Vec<Vec<Agent>>,
    indegree: Vec<usize>,
}

impl EnvyGraph {
    /// Graph over all agents of the allocation.
    pub fn build(inst: &Instance, alloc: &Allocation, mode: GraphMode) -> Self {
        let nodes: Vec<Agent> = (0..alloc.agents()).collect();
        Self::from_utilities(&UtilityMatrix::new(inst, alloc), mode, &nodes)
    }

    /// Graph over `nodes`; in TOP mode the favourite rival bundle is taken
    /// among the bundles of `nodes` only.
    pub fn from_utilities(util: &UtilityMatrix, mode: GraphMode, nodes: &[Agent]) -> Self {
        let n = util.agents();
        let mut nodes = nodes.to_vec();
        nodes.sort_unstable();
        nodes.dedup();
        let mut out = vec![Vec::new(); n];
        let mut indegree = vec![0; n];
        for &i in &nodes {
            let own = util.utility(i);
            let best = match mode {
                GraphMode::Plain => None,
                GraphMode::Top => nodes
                    .iter()
                    .filter(|&&h| h != i)
                    .map(|&h| util.get(i, h))
                    .max(),
            };
            for &h in &nodes {
                if h == i {
                    continue;
                }
                let v = util.get(i, h);
                let edge = own < v && best.is_none_or(|b| v == b);
                if edge {
                    out[i].push(h);
                    indegree[h] += 1;
                }
            }
        }
        EnvyGraph {
            mode,
            nodes,
            out,
            indegree,
        }
    }

    pub fn mode(&self) -> GraphMode {
        self.mode
    }

    pub fn nodes(&self) -> &[Agent] {
        &self.nodes
    }

    pub fn successors(&self, agent: Agent) -> &[Agent] {
        &self.out[agent]
    }

    pub fn has_edge(&self, from: Agent, to: Agent) -> bool {
        self.out[from].binary_search(&to).is_ok()
    }

    pub fn edges(&self) -> Vec<(Agent, Agent)> {
        self.nodes
            .iter()
            .flat_map(|&i| self.out[i].iter().map(move |&h| (i, h)))
            .collect()
    }

    pub fn edge_count(&self) -> usize {
        self.nodes.iter().map(|&i| self.out[i].len()).sum()
    }

    /// Lowest-index agent of `restrict_to` that no agent of `restrict_to`
    /// points at.
    pub fn find_source(&self, restrict_to: &[Agent]) -> Option<Agent> {
        let mut inside = vec![false; self.out.len()];
        for &a in restrict_to {
            inside[a] = true;
        }
        let mut envied = vec![false; self.out.len()];
        for &i in restrict_to {
            for &h in &self.out[i] {
                envied[h] = true;
            }
        }
        (0..self.out.len()).find(|&a| inside[a] && !envied[a])
    }

    /// Lowest-index agent with no outgoing edge.
    pub fn find_sink(&self) -> Option<Agent> {
        self.nodes.iter().copied().find(|&a| self.out[a].is_empty())
    }

    /// Lowest-index agent with no incoming edge.
    pub fn source(&self) -> Option<Agent> {
        self.nodes.iter().copied().find(|&a| self.indegree[a] == 0)
    }

    /// A directed cycle `[c0, c1, ..., ck]` with edges `c_t -> c_{t+1}` and
    /// `ck -> c0`, found by depth-first search from the lowest-index node.
    pub fn find_cycle(&self) -> Option<Vec<Agent>> {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            New,
            OnStack,
            Done,
        }
        let mut mark = vec![Mark::New; self.out.len()];
        for &root in &self.nodes {
            if mark[root] != Mark::New {
                continue;
            }
            // (node, index of next successor to explore)
            let mut stack: Vec<(Agent, usize)> = vec![(root, 0)];
            mark[root] = Mark::OnStack;
            while let Some(top) = stack.last_mut() {
                let node = top.0;
                if let Some(&succ) = self.out[node].get(top.1) {
                    top.1 += 1;
                    match mark[succ] {
                        Mark::New => {
                            mark[succ] = Mark::OnStack;
                            stack.push((succ, 0));
                        }
                        Mark::OnStack => {
                            let start = stack
                                .iter()
                                .position(|&(a, _)| a == succ)
                                .expect("on-stack node is on the stack");
                            return Some(stack[start..].iter().map(|&(a, _)| a).collect());
                        }
                        Mark::Done => {}
                    }
                } else {
                    mark[node] = Mark::Done;
                    stack.pop();
                }
            }
        }
        None
    }

    pub fn is_cycle(&self, cycle: &[Agent]) -> bool {
        if cycle.is_empty() {
            return false;
        }
        let mut seen = cycle.to_vec();
        seen.sort_unstable();
        seen.dedup();
        seen.len() == cycle.len()
            && cycle
                .iter()
                .zip(cycle.iter().cycle().skip(1))
                .all(|(&a, &b)| self.has_edge(a, b))
    }

    /// Graphviz rendering; nodes are agent indices.
    pub fn to_dot(&self) -> String {
        let mut s = String::new();
        let name = match self.mode {
            GraphMode::Plain => "envy",
            GraphMode::Top => "top_envy",
        };
        writeln!(s, "digraph {name} {{").unwrap();
        for &i in &self.nodes {
            writeln!(s, "  {i};").unwrap();
        }
        for (i, h) in self.edges() {
            writeln!(s, "  {i} -> {h};").unwrap();
        }
        s.push_str("}\n");
        s
    }
}

/// Envy-cycle elimination: every agent of `cycle` takes the bundle of the
/// agent she points to.
///
/// Panics if some cycle agent fails to strictly gain, which would mean the
/// graph was stale.
pub fn rotate_cycle(
    inst: &Instance,
    alloc: &Allocation,
    graph: &EnvyGraph,
    cycle: &[Agent],
) -> Result<Allocation, GraphError> {
    if !graph.is_cycle(cycle) {
        return Err(GraphError::NotACycle(cycle.to_vec()));
    }
    let before: Vec<Rational> = cycle
        .iter()
        .map(|&a| inst.bundle_value(a, alloc.bundle(a)))
        .collect();
    let mut next = alloc.clone();
    next.rotate(cycle);
    for (&a, old) in cycle.iter().zip(&before) {
        assert!(
            &inst.bundle_value(a, next.bundle(a)) > old,
            "agent {a} did not gain from the rotation"
        );
    }
    Ok(next)
}
