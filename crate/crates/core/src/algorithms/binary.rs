//! Nash welfare maximisation for binary goods.
//!
//! With values in `{0, a}`, utilities are `a` times the item counts. Items
//! start at a liking agent with the fewest items; then, while some agent
//! `k` can reach an agent `h` holding at least two items more along a
//! transfer path (every hop hands one item to an agent that likes it), the
//! path is shifted. The fixed point is leximin among allocations giving
//! every item to an agent who likes it, which for binary valuations is a
//! Nash welfare maximiser.

use std::collections::VecDeque;

use crate::allocation::Allocation;
use crate::instance::{classify, partition_items, Agent, Instance, Item};

use super::{AlgorithmError, AlgorithmId};

pub fn binary_goods_mnw(inst: &Instance) -> Result<Allocation, AlgorithmError> {
    let class = classify(inst);
    let fail = |flag| AlgorithmError::PreconditionViolated {
        algorithm: AlgorithmId::Alg3BinaryMixed,
        flag,
    };
    if !class.goods_only {
        return Err(fail("goods_only"));
    }
    if !class.binary_mixed_goods {
        return Err(fail("binary_mixed_goods"));
    }
    if partition_items(inst).m_plus.len() != inst.items() {
        return Err(fail("every item positively valued"));
    }

    let n = inst.agents();
    let likes: Vec<Vec<Item>> = (0..n)
        .map(|i| {
            (0..inst.items())
                .filter(|&j| inst.value(i, j).is_positive())
                .collect()
        })
        .collect();
    let mut owner: Vec<Agent> = Vec::with_capacity(inst.items());
    let mut count = vec![0usize; n];
    for j in 0..inst.items() {
        let i = (0..n)
            .filter(|&i| inst.value(i, j).is_positive())
            .min_by_key(|&i| (count[i], i))
            .expect("every item has a positive valuer");
        owner.push(i);
        count[i] += 1;
    }

    while let Some(path) = find_transfer(&likes, &owner, &count) {
        // `path` lists (receiver, item) hops; each item leaves its owner.
        let giver = owner[path.last().expect("non-empty path").1];
        for &(to, j) in &path {
            owner[j] = to;
        }
        count[path[0].0] += 1;
        count[giver] -= 1;
    }
    Ok(Allocation::from_owners(n, &owner))
}

/// Shortest transfer path from the poorest possible start agent, as
/// `(receiver, item)` hops: `path[0].0` gains an item and the final item's
/// current owner loses one.
fn find_transfer(
    likes: &[Vec<Item>],
    owner: &[Agent],
    count: &[usize],
) -> Option<Vec<(Agent, Item)>> {
    let n = likes.len();
    let mut starts: Vec<Agent> = (0..n).collect();
    starts.sort_by_key(|&k| (count[k], k));
    for k in starts {
        // parent[a] = (previous agent, item moved from a to it)
        let mut parent: Vec<Option<(Agent, Item)>> = vec![None; n];
        let mut seen = vec![false; n];
        seen[k] = true;
        let mut queue = VecDeque::from([k]);
        while let Some(a) = queue.pop_front() {
            for &j in &likes[a] {
                let b = owner[j];
                if seen[b] {
                    continue;
                }
                seen[b] = true;
                parent[b] = Some((a, j));
                if count[b] >= count[k] + 2 {
                    let mut path = Vec::new();
                    let mut cur = b;
                    while let Some((prev, item)) = parent[cur] {
                        path.push((prev, item));
                        cur = prev;
                    }
                    path.reverse();
                    return Some(path);
                }
                queue.push_back(b);
            }
        }
    }
    None
}
