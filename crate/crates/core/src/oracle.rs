//! Exhaustive certification over all `n^m` complete allocations.
//!
//! Allocation number `k` gives item `j` to the `j`-th most significant
//! base-`n` digit of `k`, so the last item varies fastest. Large scans are
//! split into contiguous index ranges and run on the rayon pool; every
//! result is the one a sequential scan would produce.
//!
//! Values are scaled by the common denominator and scanned as `i128` when
//! that cannot overflow; otherwise the scan runs on exact rationals.

use std::ops::{AddAssign, ControlFlow, SubAssign};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive};
use rayon::prelude::*;
use thiserror::Error;

use crate::allocation::Allocation;
use crate::fairness::{self, FairnessError, FairnessNotion, NashSignature};
use crate::instance::{Agent, Instance};
use crate::rational::Rational;

pub const DEFAULT_BUDGET: u64 = 10_000_000;

/// Scans shorter than this stay on the calling thread.
const PARALLEL_THRESHOLD: u64 = 1 << 14;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("{agents}^{items} allocations exceed the enumeration budget of {budget}")]
    BudgetExceeded {
        agents: usize,
        items: usize,
        budget: u64,
    },
    #[error(transparent)]
    Fairness(#[from] FairnessError),
}

/// `n^m`, or `None` if it does not fit in a `u64`.
pub fn allocation_count(inst: &Instance) -> Option<u64> {
    let m = u32::try_from(inst.items()).ok()?;
    (inst.agents() as u64).checked_pow(m)
}

fn checked_count(inst: &Instance, budget: u64) -> Result<u64, OracleError> {
    match allocation_count(inst) {
        Some(c) if c <= budget => Ok(c),
        _ => Err(OracleError::BudgetExceeded {
            agents: inst.agents(),
            items: inst.items(),
            budget,
        }),
    }
}

/// Owner vector of allocation number `index`.
pub fn owners_at(agents: usize, items: usize, mut index: u64) -> Vec<Agent> {
    let mut owners = vec![0; items];
    for slot in owners.iter_mut().rev() {
        *slot = (index % agents as u64) as Agent;
        index /= agents as u64;
    }
    owners
}

/// Iterator over every complete allocation in enumeration order.
pub struct Allocations {
    agents: usize,
    owners: Vec<Agent>,
    remaining: u64,
}

impl Iterator for Allocations {
    type Item = Allocation;

    fn next(&mut self) -> Option<Allocation> {
        if self.remaining == 0 {
            return None;
        }
        let out = Allocation::from_owners(self.agents, &self.owners);
        self.remaining -= 1;
        for slot in self.owners.iter_mut().rev() {
            *slot += 1;
            if *slot < self.agents {
                break;
            }
            *slot = 0;
        }
        Some(out)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let r = usize::try_from(self.remaining).ok();
        (r.unwrap_or(usize::MAX), r)
    }
}

pub fn enumerate_allocations(inst: &Instance, budget: u64) -> Result<Allocations, OracleError> {
    let count = checked_count(inst, budget)?;
    Ok(Allocations {
        agents: inst.agents(),
        owners: vec![0; inst.items()],
        remaining: count,
    })
}

trait Value:
    Clone + Ord + Send + Sync + for<'a> AddAssign<&'a Self> + for<'a> SubAssign<&'a Self>
{
    fn zero() -> Self;
}

impl Value for i128 {
    fn zero() -> Self {
        0
    }
}

impl Value for Rational {
    fn zero() -> Self {
        Rational::zero()
    }
}

/// The value matrix multiplied by the least common denominator, if every
/// bundle sum stays far from `i128` overflow.
fn scaled_table(inst: &Instance) -> Option<Vec<Vec<i128>>> {
    let lcm = inst
        .rows()
        .iter()
        .flatten()
        .fold(BigInt::one(), |acc, v| acc.lcm(v.denom()));
    let limit = i128::MAX / 4 / (inst.items().max(1) as i128);
    inst.rows()
        .iter()
        .map(|row| {
            row.iter()
                .map(|v| {
                    let x = (v.numer() * (&lcm / v.denom())).to_i128()?;
                    (x.abs() <= limit).then_some(x)
                })
                .collect()
        })
        .collect()
}

fn exact_table(inst: &Instance) -> Vec<Vec<Rational>> {
    inst.rows().to_vec()
}

/// Visits allocations `start..end` in order with their owner vectors and
/// utility profiles, stopping early on `Break`.
fn scan<T: Value, B>(
    table: &[Vec<T>],
    items: usize,
    start: u64,
    end: u64,
    mut visit: impl FnMut(u64, &[Agent], &[T]) -> ControlFlow<B>,
) -> Option<B> {
    let n = table.len();
    let mut owners = owners_at(n, items, start);
    let mut util: Vec<T> = vec![T::zero(); n];
    for (j, &a) in owners.iter().enumerate() {
        util[a] += &table[a][j];
    }
    let mut index = start;
    while index < end {
        if let ControlFlow::Break(b) = visit(index, &owners, &util) {
            return Some(b);
        }
        index += 1;
        if index == end {
            break;
        }
        for j in (0..items).rev() {
            let a = owners[j];
            util[a] -= &table[a][j];
            let next = if a + 1 < n { a + 1 } else { 0 };
            owners[j] = next;
            util[next] += &table[next][j];
            if next != 0 {
                break;
            }
        }
    }
    None
}

/// Contiguous ranges covering `0..count`.
fn chunks(count: u64) -> Vec<(u64, u64)> {
    if count < PARALLEL_THRESHOLD {
        return vec![(0, count)];
    }
    let pieces = (rayon::current_num_threads() as u64 * 8).max(1);
    let size = count.div_ceil(pieces);
    (0..pieces)
        .map(|p| (p * size, ((p + 1) * size).min(count)))
        .filter(|(a, b)| a < b)
        .collect()
}

/// Lowest allocation index in `0..count` for which `visit` breaks.
fn find_first<T: Value, B: Send>(
    table: &[Vec<T>],
    items: usize,
    count: u64,
    visit: impl Fn(u64, &[Agent], &[T]) -> ControlFlow<B> + Sync,
) -> Option<B> {
    chunks(count)
        .into_par_iter()
        .map(|(a, b)| scan(table, items, a, b, &visit))
        .find_first(Option::is_some)
        .flatten()
}

fn dominates<T: Ord>(y: &[T], x: &[T]) -> bool {
    y.iter().zip(x).all(|(a, b)| a >= b) && y.iter().zip(x).any(|(a, b)| a > b)
}

fn dominating_index<T: Value>(
    table: &[Vec<T>],
    items: usize,
    count: u64,
    target: &[T],
) -> Option<u64> {
    find_first(table, items, count, |k, _, u| {
        if dominates(u, target) {
            ControlFlow::Break(k)
        } else {
            ControlFlow::Continue(())
        }
    })
}

fn utilities_of<T: Value>(table: &[Vec<T>], alloc: &Allocation) -> Vec<T> {
    (0..table.len())
        .map(|i| {
            let mut u = T::zero();
            for &j in alloc.bundle(i) {
                u += &table[i][j];
            }
            u
        })
        .collect()
}

/// First allocation, in enumeration order, that Pareto-dominates `alloc`.
pub fn find_dominating(
    inst: &Instance,
    alloc: &Allocation,
    budget: u64,
) -> Result<Option<Allocation>, OracleError> {
    let count = checked_count(inst, budget)?;
    let m = inst.items();
    let index = match scaled_table(inst) {
        Some(t) => dominating_index(&t, m, count, &utilities_of(&t, alloc)),
        None => {
            let t = exact_table(inst);
            dominating_index(&t, m, count, &utilities_of(&t, alloc))
        }
    };
    Ok(index.map(|k| Allocation::from_owners(inst.agents(), &owners_at(inst.agents(), m, k))))
}

/// No complete allocation weakly improves every agent and strictly
/// improves one.
pub fn is_pareto_optimal_exact(
    inst: &Instance,
    alloc: &Allocation,
    budget: u64,
) -> Result<bool, OracleError> {
    Ok(find_dominating(inst, alloc, budget)?.is_none())
}

fn best_sw_index<T: Value>(table: &[Vec<T>], items: usize, count: u64) -> u64 {
    let best = |(a, b): (u64, u64)| {
        let mut top: Option<(T, u64)> = None;
        scan::<T, ()>(table, items, a, b, |k, _, u| {
            let mut sw = T::zero();
            for x in u {
                sw += x;
            }
            if top.as_ref().is_none_or(|(t, _)| sw > *t) {
                top = Some((sw, k));
            }
            ControlFlow::Continue(())
        });
        top
    };
    chunks(count)
        .into_par_iter()
        .map(best)
        .reduce(
            || None,
            |a, b| match (a, b) {
                (Some(x), Some(y)) => Some(if y.0 > x.0 || (y.0 == x.0 && y.1 < x.1) {
                    y
                } else {
                    x
                }),
                (x, None) => x,
                (None, y) => y,
            },
        )
        .map(|(_, k)| k)
        .unwrap_or(0)
}

/// Maximum utilitarian welfare with the first allocation attaining it.
pub fn max_social_welfare(
    inst: &Instance,
    budget: u64,
) -> Result<(Rational, Allocation), OracleError> {
    let count = checked_count(inst, budget)?;
    let m = inst.items();
    let k = match scaled_table(inst) {
        Some(t) => best_sw_index(&t, m, count),
        None => best_sw_index(&exact_table(inst), m, count),
    };
    let alloc = Allocation::from_owners(inst.agents(), &owners_at(inst.agents(), m, k));
    Ok((fairness::social_welfare(inst, &alloc), alloc))
}

/// Maximum Nash welfare signature with the first allocation attaining it.
pub fn mnw_exact(inst: &Instance, budget: u64) -> Result<(NashSignature, Allocation), OracleError> {
    let count = checked_count(inst, budget)?;
    let m = inst.items();
    let table = exact_table(inst);
    let best = |(a, b): (u64, u64)| {
        let mut top: Option<(NashSignature, u64)> = None;
        scan::<Rational, ()>(&table, m, a, b, |k, _, u| {
            let sig = NashSignature::of_utilities(u);
            if top.as_ref().is_none_or(|(t, _)| sig > *t) {
                top = Some((sig, k));
            }
            ControlFlow::Continue(())
        });
        top
    };
    let (sig, k) = chunks(count)
        .into_par_iter()
        .map(best)
        .reduce(
            || None,
            |a, b| match (a, b) {
                (Some(x), Some(y)) => Some(if y.0 > x.0 || (y.0 == x.0 && y.1 < x.1) {
                    y
                } else {
                    x
                }),
                (x, None) => x,
                (None, y) => y,
            },
        )
        .expect("at least one allocation");
    Ok((
        sig,
        Allocation::from_owners(inst.agents(), &owners_at(inst.agents(), m, k)),
    ))
}

/// A conjunction of notions to search for. `PoExact` and `MaxSw` are
/// decided by the oracle itself; every other notion by its checker.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PredicateSet {
    pub notions: Vec<FairnessNotion>,
}

impl PredicateSet {
    pub fn new(notions: impl IntoIterator<Item = FairnessNotion>) -> Self {
        let mut notions: Vec<FairnessNotion> = notions.into_iter().collect();
        notions.sort();
        notions.dedup();
        PredicateSet { notions }
    }

    fn checker_notions(&self) -> impl Iterator<Item = FairnessNotion> + '_ {
        self.notions.iter().copied().filter(|n| !n.needs_oracle())
    }

    fn wants(&self, notion: FairnessNotion) -> bool {
        self.notions.contains(&notion)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchOutcome {
    pub witness: Option<Allocation>,
    /// Number of allocations in the search space.
    pub space: u64,
}

/// First allocation (in enumeration order) satisfying every predicate.
pub fn exists_allocation(
    inst: &Instance,
    preds: &PredicateSet,
    budget: u64,
) -> Result<SearchOutcome, OracleError> {
    let count = checked_count(inst, budget)?;
    let n = inst.agents();
    let m = inst.items();
    // Surface inapplicable notions once, up front.
    let probe = Allocation::from_owners(n, &vec![0; m]);
    for notion in preds.checker_notions() {
        fairness::evaluate(inst, &probe, notion)?;
    }
    let max_sw = if preds.wants(FairnessNotion::MaxSw) {
        Some(max_social_welfare(inst, budget)?.0)
    } else {
        None
    };
    let table = exact_table(inst);
    let accept = |owners: &[Agent], util: &[Rational]| -> bool {
        if let Some(best) = &max_sw {
            if util.iter().sum::<Rational>() != *best {
                return false;
            }
        }
        let alloc = Allocation::from_owners(n, owners);
        let fair = preds
            .checker_notions()
            .all(|notion| fairness::evaluate(inst, &alloc, notion).is_ok_and(|r| r.holds));
        fair && (!preds.wants(FairnessNotion::PoExact)
            || dominating_index(&table, m, count, util).is_none())
    };
    let found = find_first(&table, m, count, |k, owners, util| {
        if accept(owners, util) {
            ControlFlow::Break(k)
        } else {
            ControlFlow::Continue(())
        }
    });
    Ok(SearchOutcome {
        witness: found.map(|k| Allocation::from_owners(n, &owners_at(n, m, k))),
        space: count,
    })
}
