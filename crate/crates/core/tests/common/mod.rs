#![allow(dead_code)]

use manna_core::{Allocation, Instance};
use proptest::prelude::*;

pub fn matrix(rows: Vec<Vec<i64>>) -> Instance {
    Instance::from_integers(&rows).unwrap()
}

/// Any instance with `n` in `1..=max_n`, `m` in `0..=max_m`.
pub fn any_instance(
    max_n: usize,
    max_m: usize,
    lo: i64,
    hi: i64,
) -> impl Strategy<Value = Instance> {
    (1..=max_n, 0..=max_m).prop_flat_map(move |(n, m)| {
        prop::collection::vec(prop::collection::vec(lo..=hi, m), n).prop_map(matrix)
    })
}

pub fn with_allocation(inst: Instance) -> impl Strategy<Value = (Instance, Allocation)> {
    let (n, m) = (inst.agents(), inst.items());
    prop::collection::vec(0..n, m).prop_map(move |owners| {
        let x = Allocation::from_owners(n, &owners);
        (inst.clone(), x)
    })
}

pub fn instance_and_allocation(
    max_n: usize,
    max_m: usize,
    lo: i64,
    hi: i64,
) -> impl Strategy<Value = (Instance, Allocation)> {
    any_instance(max_n, max_m, lo, hi).prop_flat_map(with_allocation)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bads {
    None,
    Identical,
    Ordered,
    General,
}

#[derive(Debug, Clone)]
enum Column {
    Good {
        value: i64,
        likes: Vec<bool>,
        others: Vec<i64>,
    },
    Dummy {
        entries: Vec<i64>,
        zero: usize,
    },
    Bad(Vec<i64>),
}

fn column(n: usize, binary: Option<i64>, dummies: bool, bads: Bads) -> BoxedStrategy<Column> {
    let value = match binary {
        Some(a) => Just(a).boxed(),
        None => (1i64..=6).boxed(),
    };
    let good = (
        value,
        prop::collection::vec(any::<bool>(), n),
        prop::collection::vec(-4i64..=0, n),
        0..n,
    )
        .prop_map(|(value, mut likes, others, forced)| {
            likes[forced] = true;
            Column::Good {
                value,
                likes,
                others,
            }
        })
        .boxed();
    let mut kinds = vec![(3, good)];
    if dummies {
        kinds.push((
            1,
            (prop::collection::vec(-4i64..=0, n), 0..n)
                .prop_map(|(entries, zero)| Column::Dummy { entries, zero })
                .boxed(),
        ));
    }
    match bads {
        Bads::None => {}
        Bads::Identical => kinds.push((
            2,
            (-6i64..=-1)
                .prop_map(move |v| Column::Bad(vec![v; n]))
                .boxed(),
        )),
        Bads::Ordered | Bads::General => kinds.push((
            2,
            prop::collection::vec(-6i64..=-1, n)
                .prop_map(Column::Bad)
                .boxed(),
        )),
    }
    prop::strategy::Union::new_weighted(kinds).boxed()
}

/// Restricted mixed goods on `n` agents with the given bad structure.
/// Goods-only instances come with `dummies = false, bads = None`.
pub fn restricted(
    n_range: std::ops::RangeInclusive<usize>,
    m_range: std::ops::RangeInclusive<usize>,
    binary: bool,
    dummies: bool,
    bads: Bads,
) -> impl Strategy<Value = Instance> {
    (n_range, m_range, 1i64..=4).prop_flat_map(move |(n, m, a)| {
        let cols = prop::collection::vec(column(n, binary.then_some(a), dummies, bads), m);
        let perm = Just((0..m).collect::<Vec<usize>>()).prop_shuffle();
        (cols, perm).prop_map(move |(cols, perm)| build(n, cols, &perm, bads, dummies))
    })
}

fn build(n: usize, cols: Vec<Column>, perm: &[usize], bads: Bads, dummies: bool) -> Instance {
    let m = cols.len();
    let mut rows = vec![vec![0i64; m]; n];
    let mut bad_cols = Vec::new();
    for (j, c) in cols.into_iter().enumerate() {
        match c {
            Column::Good {
                value,
                likes,
                others,
            } => {
                for i in 0..n {
                    rows[i][j] = if likes[i] {
                        value
                    } else if dummies {
                        others[i]
                    } else {
                        0
                    };
                }
            }
            Column::Dummy { entries, zero } => {
                for i in 0..n {
                    rows[i][j] = if i == zero { 0 } else { entries[i] };
                }
            }
            Column::Bad(v) => {
                bad_cols.push(j);
                for i in 0..n {
                    rows[i][j] = v[i];
                }
            }
        }
    }
    if bads == Bads::Ordered {
        // Lay every agent's sorted bad values along one shared order.
        let mut order = bad_cols.clone();
        order.sort_by_key(|&j| perm[j]);
        for row in rows.iter_mut() {
            let mut vals: Vec<i64> = bad_cols.iter().map(|&j| row[j]).collect();
            vals.sort_unstable();
            for (&j, v) in order.iter().zip(vals) {
                row[j] = v;
            }
        }
    }
    matrix(rows)
}

/// Separable instances: non-negative columns and pure bads.
pub fn separable(max_n: usize, max_m: usize) -> impl Strategy<Value = Instance> {
    (1..=max_n, 0..=max_m).prop_flat_map(|(n, m)| {
        let col = prop_oneof![
            prop::collection::vec(0i64..=5, n),
            prop::collection::vec(-5i64..=-1, n),
        ];
        prop::collection::vec(col, m).prop_map(move |cols| {
            matrix(
                (0..n)
                    .map(|i| cols.iter().map(|c| c[i]).collect())
                    .collect(),
            )
        })
    })
}
