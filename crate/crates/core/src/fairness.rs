//! Verifiers for envy-freeness, proportionality and their relaxations,
//! welfare functions and the argmax-holder efficiency certificate.
//!
//! Every checker evaluates all agents of the instance it is given and
//! returns per-agent witnesses for each violation. Proportional shares are
//! always taken against the full item set of that instance; to check a
//! partial allocation against the items allocated so far, restrict the
//! instance first.
//!
//! Conventions where the textbook definitions quantify over possibly empty
//! sets:
//! * the "remove a good from the envied bundle" clause of EFX counts only
//!   when the envied bundle holds at least one qualifying good;
//! * the "remove any bad from your own bundle" clauses of EFX and PropMX
//!   count only when the agent holds at least one negatively valued item;
//! * `d_i(x)` is taken to be zero when no rival holds a qualifying good.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::allocation::Allocation;
use crate::instance::{classify, Agent, Instance, Item};
use crate::rational::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FairnessNotion {
    Ef,
    Efx,
    Efx0,
    Prop,
    #[serde(rename = "PROPM")]
    PropM,
    #[serde(rename = "PROPM0")]
    PropM0,
    #[serde(rename = "PROPX")]
    PropX,
    #[serde(rename = "PROPMX")]
    PropMx,
    #[serde(rename = "PROPMX0")]
    PropMx0,
    PoSufficient,
    /// Exact Pareto-optimality; needs the enumeration oracle.
    PoExact,
    /// Maximum utilitarian welfare; needs the enumeration oracle.
    MaxSw,
}

impl FairnessNotion {
    pub const ALL: [FairnessNotion; 12] = [
        FairnessNotion::Ef,
        FairnessNotion::Efx,
        FairnessNotion::Efx0,
        FairnessNotion::Prop,
        FairnessNotion::PropM,
        FairnessNotion::PropM0,
        FairnessNotion::PropX,
        FairnessNotion::PropMx,
        FairnessNotion::PropMx0,
        FairnessNotion::PoSufficient,
        FairnessNotion::PoExact,
        FairnessNotion::MaxSw,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FairnessNotion::Ef => "EF",
            FairnessNotion::Efx => "EFX",
            FairnessNotion::Efx0 => "EFX0",
            FairnessNotion::Prop => "PROP",
            FairnessNotion::PropM => "PROPM",
            FairnessNotion::PropM0 => "PROPM0",
            FairnessNotion::PropX => "PROPX",
            FairnessNotion::PropMx => "PROPMX",
            FairnessNotion::PropMx0 => "PROPMX0",
            FairnessNotion::PoSufficient => "PO_SUFFICIENT",
            FairnessNotion::PoExact => "PO_EXACT",
            FairnessNotion::MaxSw => "MAX_SW",
        }
    }

    pub fn needs_oracle(self) -> bool {
        matches!(self, FairnessNotion::PoExact | FairnessNotion::MaxSw)
    }
}

impl fmt::Display for FairnessNotion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown fairness notion `{0}`")]
pub struct UnknownNotion(pub String);

impl FromStr for FairnessNotion {
    type Err = UnknownNotion;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s
            .trim()
            .chars()
            .filter(|c| !matches!(c, '-' | '_' | '+'))
            .collect::<String>()
            .to_ascii_lowercase();
        Ok(match key.as_str() {
            "ef" => FairnessNotion::Ef,
            "efx" => FairnessNotion::Efx,
            "efx0" => FairnessNotion::Efx0,
            "prop" => FairnessNotion::Prop,
            "propm" => FairnessNotion::PropM,
            "propm0" => FairnessNotion::PropM0,
            "propx" => FairnessNotion::PropX,
            "propmx" => FairnessNotion::PropMx,
            "propmx0" => FairnessNotion::PropMx0,
            "posufficient" => FairnessNotion::PoSufficient,
            "po" | "poexact" => FairnessNotion::PoExact,
            "maxsw" => FairnessNotion::MaxSw,
            _ => return Err(UnknownNotion(s.to_string())),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FairnessError {
    #[error("{notion} is only defined for {requires} instances")]
    NotionInapplicable {
        notion: FairnessNotion,
        requires: &'static str,
    },
    #[error("{0} needs the exhaustive oracle")]
    RequiresOracle(FairnessNotion),
}

/// One violated condition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub agent: Agent,
    pub condition: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub agents: Vec<Agent>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub items: Vec<Item>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FairnessReport {
    pub notion: FairnessNotion,
    pub holds: bool,
    pub witnesses: Vec<Witness>,
}

impl FairnessReport {
    pub fn from_witnesses(notion: FairnessNotion, witnesses: Vec<Witness>) -> Self {
        FairnessReport {
            notion,
            holds: witnesses.is_empty(),
            witnesses,
        }
    }

    pub fn witness_agents(&self) -> Vec<Agent> {
        let mut v: Vec<Agent> = self.witnesses.iter().map(|w| w.agent).collect();
        v.dedup();
        v
    }
}

/// `v_i(x_i) < v_i(x_h)`.
pub fn envies(inst: &Instance, alloc: &Allocation, i: Agent, h: Agent) -> bool {
    inst.bundle_value(i, alloc.bundle(i)) < inst.bundle_value(i, alloc.bundle(h))
}

fn qualifies(v: &Rational, include_zero: bool) -> bool {
    if include_zero {
        !v.is_negative()
    } else {
        v.is_positive()
    }
}

/// `d_i(x)`: over rivals, the largest of each rival bundle's smallest
/// positively (or non-negatively, with `include_zero`) valued item.
/// `None` when no rival holds a qualifying item.
pub fn maximin_good_value(
    inst: &Instance,
    alloc: &Allocation,
    i: Agent,
    include_zero: bool,
) -> Option<Rational> {
    (0..alloc.agents())
        .filter(|&h| h != i)
        .filter_map(|h| {
            alloc
                .bundle(h)
                .iter()
                .map(|&j| inst.value(i, j))
                .filter(|v| qualifies(v, include_zero))
                .min()
        })
        .max()
        .cloned()
}

pub fn check_ef(inst: &Instance, alloc: &Allocation) -> FairnessReport {
    let mut witnesses = Vec::new();
    for i in 0..alloc.agents() {
        let own = inst.bundle_value(i, alloc.bundle(i));
        for h in (0..alloc.agents()).filter(|&h| h != i) {
            if own < inst.bundle_value(i, alloc.bundle(h)) {
                witnesses.push(Witness {
                    agent: i,
                    condition: format!("envies agent {h}"),
                    agents: vec![h],
                    items: vec![],
                });
            }
        }
    }
    FairnessReport::from_witnesses(FairnessNotion::Ef, witnesses)
}

/// EFX (`include_zero = false`) or EFX₀ (`include_zero = true`).
///
/// Agent `i` is fine towards `h` iff `i` does not envy `h`, or `x_h` holds
/// a qualifying good and removing any one of them kills the envy, or `x_i`
/// holds a bad and removing any one of them kills the envy.
pub fn check_efx(inst: &Instance, alloc: &Allocation, include_zero: bool) -> FairnessReport {
    let notion = if include_zero {
        FairnessNotion::Efx0
    } else {
        FairnessNotion::Efx
    };
    let mut witnesses = Vec::new();
    for i in 0..alloc.agents() {
        let own = inst.bundle_value(i, alloc.bundle(i));
        // For "remove any bad", the binding bad is the least painful one.
        let mildest_bad = alloc
            .bundle(i)
            .iter()
            .map(|&c| inst.value(i, c))
            .filter(|v| v.is_negative())
            .max();
        for h in (0..alloc.agents()).filter(|&h| h != i) {
            let other = inst.bundle_value(i, alloc.bundle(h));
            if own >= other {
                continue;
            }
            let smallest_good = alloc
                .bundle(h)
                .iter()
                .map(|&g| inst.value(i, g))
                .filter(|v| qualifies(v, include_zero))
                .min();
            if let Some(g) = smallest_good {
                if own >= &other - g {
                    continue;
                }
            }
            if let Some(c) = mildest_bad {
                if &own - c >= other {
                    continue;
                }
            }
            witnesses.push(Witness {
                agent: i,
                condition: format!("{notion}-envies agent {h}"),
                agents: vec![h],
                items: alloc.bundle(h).iter().copied().collect(),
            });
        }
    }
    FairnessReport::from_witnesses(notion, witnesses)
}

/// Proportionality and its relaxations.
///
/// PROPM and PROPM0 require a goods-only instance. PROPX takes its goods
/// form (adding any positively valued good held by a rival reaches the
/// share) on goods-only instances and its bads form (removing any own bad
/// reaches the share) on bads-only instances; mixed instances are rejected.
pub fn check_prop_family(
    inst: &Instance,
    alloc: &Allocation,
    notion: FairnessNotion,
) -> Result<FairnessReport, FairnessError> {
    let class = classify(inst);
    let requires = |ok: bool, requires: &'static str| {
        if ok {
            Ok(())
        } else {
            Err(FairnessError::NotionInapplicable { notion, requires })
        }
    };
    match notion {
        FairnessNotion::Prop | FairnessNotion::PropMx | FairnessNotion::PropMx0 => {}
        FairnessNotion::PropM | FairnessNotion::PropM0 => requires(class.goods_only, "goods-only")?,
        FairnessNotion::PropX => requires(
            class.goods_only || class.bads_only,
            "goods-only or bads-only",
        )?,
        other => {
            return Err(FairnessError::NotionInapplicable {
                notion: other,
                requires: "a proportionality notion, got another kind of",
            })
        }
    }

    let mut witnesses = Vec::new();
    for i in 0..alloc.agents() {
        let share = inst.proportional_share(i);
        let own = inst.bundle_value(i, alloc.bundle(i));
        let with_maximin = |include_zero: bool| {
            let d = maximin_good_value(inst, alloc, i, include_zero).unwrap_or_else(Rational::zero);
            &own + &d >= share
        };
        let mildest_bad = alloc
            .bundle(i)
            .iter()
            .map(|&c| inst.value(i, c))
            .filter(|v| v.is_negative())
            .max();
        let without_any_bad = || mildest_bad.is_some_and(|c| &own - c >= share);

        let (ok, condition) = match notion {
            FairnessNotion::Prop => (own >= share, format!("v(x_i) = {own} < {share}")),
            FairnessNotion::PropM => (with_maximin(false), format!("v(x_i) + d_i < {share}")),
            FairnessNotion::PropM0 => (with_maximin(true), format!("v(x_i) + d0_i < {share}")),
            FairnessNotion::PropMx => (
                with_maximin(false) || without_any_bad(),
                format!("neither v(x_i) + d_i nor v(x_i - c) for every bad c reaches {share}"),
            ),
            FairnessNotion::PropMx0 => (
                with_maximin(true) || without_any_bad(),
                format!("neither v(x_i) + d0_i nor v(x_i - c) for every bad c reaches {share}"),
            ),
            FairnessNotion::PropX if class.goods_only => {
                let smallest_outside = (0..alloc.agents())
                    .filter(|&h| h != i)
                    .flat_map(|h| alloc.bundle(h).iter())
                    .map(|&g| inst.value(i, g))
                    .filter(|v| v.is_positive())
                    .min();
                let ok = smallest_outside.is_none_or(|g| &own + g >= share);
                (ok, format!("adding some good leaves v(x_i + g) < {share}"))
            }
            FairnessNotion::PropX => {
                let ok = alloc
                    .bundle(i)
                    .iter()
                    .map(|&c| inst.value(i, c))
                    .max()
                    .is_none_or(|c| &own - c >= share);
                (ok, format!("removing some bad leaves v(x_i - c) < {share}"))
            }
            _ => unreachable!(),
        };
        if !ok {
            witnesses.push(Witness {
                agent: i,
                condition,
                agents: vec![],
                items: alloc.bundle(i).iter().copied().collect(),
            });
        }
    }
    Ok(FairnessReport::from_witnesses(notion, witnesses))
}

pub fn social_welfare(inst: &Instance, alloc: &Allocation) -> Rational {
    alloc.utilities(inst).into_iter().sum()
}

/// Nash welfare compared without n-th roots: fewer agents with nonpositive
/// utility is better, then a larger product of the positive utilities.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NashSignature {
    pub nonpositive: usize,
    pub product: Rational,
}

impl NashSignature {
    pub fn of_utilities<'a, I: IntoIterator<Item = &'a Rational>>(utilities: I) -> Self {
        let mut nonpositive = 0;
        let mut product = Rational::one();
        for u in utilities {
            if u.is_positive() {
                product = product * u;
            } else {
                nonpositive += 1;
            }
        }
        NashSignature {
            nonpositive,
            product,
        }
    }
}

impl Ord for NashSignature {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .nonpositive
            .cmp(&self.nonpositive)
            .then_with(|| self.product.cmp(&other.product))
    }
}

impl PartialOrd for NashSignature {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

pub fn nash_welfare_signature(inst: &Instance, alloc: &Allocation) -> NashSignature {
    NashSignature::of_utilities(&alloc.utilities(inst))
}

/// Every allocated item sits with an agent valuing it at `max_k v_kj`.
/// On a complete allocation this certifies Pareto-optimality and maximum
/// utilitarian welfare.
pub fn check_po_sufficient(inst: &Instance, alloc: &Allocation) -> bool {
    po_sufficient_report(inst, alloc).holds
}

pub fn po_sufficient_report(inst: &Instance, alloc: &Allocation) -> FairnessReport {
    let mut witnesses = Vec::new();
    for j in 0..alloc.items() {
        if let Some(i) = alloc.owner(j) {
            let best = inst.max_value(j);
            if inst.value(i, j) < &best {
                witnesses.push(Witness {
                    agent: i,
                    condition: format!("holds item {j} at {} < max {best}", inst.value(i, j)),
                    agents: vec![],
                    items: vec![j],
                });
            }
        }
    }
    FairnessReport::from_witnesses(FairnessNotion::PoSufficient, witnesses)
}

/// Evaluates any notion that does not need the oracle.
pub fn evaluate(
    inst: &Instance,
    alloc: &Allocation,
    notion: FairnessNotion,
) -> Result<FairnessReport, FairnessError> {
    match notion {
        FairnessNotion::Ef => Ok(check_ef(inst, alloc)),
        FairnessNotion::Efx => Ok(check_efx(inst, alloc, false)),
        FairnessNotion::Efx0 => Ok(check_efx(inst, alloc, true)),
        FairnessNotion::PoSufficient => Ok(po_sufficient_report(inst, alloc)),
        FairnessNotion::PoExact | FairnessNotion::MaxSw => {
            Err(FairnessError::RequiresOracle(notion))
        }
        prop => check_prop_family(inst, alloc, prop),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a1() -> Instance {
        Instance::from_integers(&[[3, 3, 3, 3, 1], [3, 3, 3, 3, 1], [3, 3, 3, 3, 1]]).unwrap()
    }

    fn a1_balanced() -> Allocation {
        Allocation::from_bundles(5, [vec![0, 3], vec![1, 4], vec![2]]).unwrap()
    }

    fn a2() -> Instance {
        Instance::from_integers(&[[1, 0, 2], [0, 1, 2]]).unwrap()
    }

    fn a2_po() -> Allocation {
        Allocation::from_bundles(3, [vec![0, 2], vec![1]]).unwrap()
    }

    #[test]
    fn envies_examples() {
        assert!(envies(&a2(), &a2_po(), 1, 0));
        assert!(!envies(&a2(), &a2_po(), 0, 1));
        let empty = Allocation::for_instance(&a2());
        assert!(!envies(&a2(), &empty, 0, 1) && !envies(&a2(), &empty, 1, 0));
    }

    #[test]
    fn maximin_examples() {
        assert_eq!(
            maximin_good_value(&a2(), &a2_po(), 1, true),
            Some(Rational::zero())
        );
        // Without zero-valued items agent b only sees g3 in x_a.
        assert_eq!(
            maximin_good_value(&a2(), &a2_po(), 1, false),
            Some(Rational::from(2))
        );
        let single = Instance::from_integers(&[[4, 1]]).unwrap();
        let all = Allocation::from_bundles(2, [vec![0, 1]]).unwrap();
        assert_eq!(maximin_good_value(&single, &all, 0, false), None);
        assert_eq!(
            maximin_good_value(&a1(), &a1_balanced(), 2, false),
            Some(Rational::from(3))
        );
    }

    #[test]
    fn efx_examples() {
        assert!(check_efx(&a1(), &a1_balanced(), false).holds);
        let single = Instance::from_integers(&[[4, -1]]).unwrap();
        let all = Allocation::from_bundles(2, [vec![0, 1]]).unwrap();
        assert!(check_efx(&single, &all, true).holds);

        let one_good = Instance::from_integers(&[[1], [1]]).unwrap();
        let x = Allocation::from_bundles(1, [vec![0], vec![]]).unwrap();
        assert!(check_efx(&one_good, &x, false).holds);
        assert!(check_efx(&one_good, &x, true).holds);
        assert!(!check_ef(&one_good, &x).holds);
    }

    #[test]
    fn efx0_is_stricter_with_zero_items() {
        // Agent 1 values g0 at 0, so EFX0 forces the envy to vanish outright.
        let inst = Instance::from_integers(&[[1, 1], [0, 1]]).unwrap();
        let x = Allocation::from_bundles(2, [vec![0, 1], vec![]]).unwrap();
        assert!(check_efx(&inst, &x, false).holds);
        let r = check_efx(&inst, &x, true);
        assert!(!r.holds);
        assert_eq!(r.witness_agents(), vec![1]);
    }

    #[test]
    fn efx_bad_removal_clause() {
        // Agent 0 holds a bad; dropping it removes the envy.
        let inst = Instance::from_integers(&[[-2, 1], [-2, 1]]).unwrap();
        let x = Allocation::from_bundles(2, [vec![0], vec![1]]).unwrap();
        let r = check_efx(&inst, &x, false);
        assert!(
            !r.holds,
            "v(x_0 - c) = 0 < 1 and removing g1 from x_1 gives 0 > -2"
        );
        let inst = Instance::from_integers(&[[-1, 1], [-2, 1]]).unwrap();
        let x = Allocation::from_bundles(2, [vec![0, 1], vec![]]).unwrap();
        assert!(check_efx(&inst, &x, false).holds);
    }

    #[test]
    fn prop_family_examples() {
        let r = check_prop_family(&a1(), &a1_balanced(), FairnessNotion::PropX).unwrap();
        assert!(!r.holds);
        assert!(r.witness_agents().contains(&2));

        let r = check_prop_family(&a2(), &a2_po(), FairnessNotion::PropM0).unwrap();
        assert_eq!(r.witness_agents(), vec![1]);

        let single = Instance::from_integers(&[[4, -1]]).unwrap();
        let all = Allocation::from_bundles(2, [vec![0, 1]]).unwrap();
        assert!(
            check_prop_family(&single, &all, FairnessNotion::Prop)
                .unwrap()
                .holds
        );
    }

    #[test]
    fn prop_family_applicability() {
        let mixed = Instance::from_integers(&[[4, -1], [2, -3]]).unwrap();
        let x = Allocation::from_bundles(2, [vec![0], vec![1]]).unwrap();
        for notion in [
            FairnessNotion::PropM,
            FairnessNotion::PropM0,
            FairnessNotion::PropX,
        ] {
            assert!(matches!(
                check_prop_family(&mixed, &x, notion),
                Err(FairnessError::NotionInapplicable { .. })
            ));
        }
        assert!(check_prop_family(&mixed, &x, FairnessNotion::PropMx).is_ok());
    }

    #[test]
    fn propx_bads_form() {
        let bads = Instance::from_integers(&[[-1, -1, -4], [-1, -1, -4]]).unwrap();
        // Prop = -3; agent 0 with {g0, g1} has -2, fine; agent 1 with {g2} has -4 - (-4) = 0.
        let x = Allocation::from_bundles(3, [vec![0, 1], vec![2]]).unwrap();
        assert!(
            check_prop_family(&bads, &x, FairnessNotion::PropX)
                .unwrap()
                .holds
        );
        let x = Allocation::from_bundles(3, [vec![0, 1, 2], vec![]]).unwrap();
        assert!(
            !check_prop_family(&bads, &x, FairnessNotion::PropX)
                .unwrap()
                .holds
        );
    }

    #[test]
    fn propmx_bad_clause_needs_a_bad() {
        // Agent 1 holds nothing: only the maximin clause can save it.
        let inst = Instance::from_integers(&[[2, 2], [2, 2]]).unwrap();
        let x = Allocation::from_bundles(2, [vec![0, 1], vec![]]).unwrap();
        assert!(
            check_prop_family(&inst, &x, FairnessNotion::PropMx)
                .unwrap()
                .holds
        );
        let inst = Instance::from_integers(&[[2, 2, 2], [2, 2, 2]]).unwrap();
        let x = Allocation::from_bundles(3, [vec![0, 1, 2], vec![]]).unwrap();
        assert!(
            !check_prop_family(&inst, &x, FairnessNotion::PropMx)
                .unwrap()
                .holds
        );
    }

    #[test]
    fn welfare_examples() {
        assert_eq!(social_welfare(&a2(), &a2_po()), Rational::from(4));
        let empty = Allocation::for_instance(&a2());
        assert_eq!(social_welfare(&a2(), &empty), Rational::zero());
        let sig = NashSignature::of_utilities(&[Rational::from(2), Rational::from(1)]);
        assert_eq!(sig.nonpositive, 0);
        assert_eq!(sig.product, Rational::from(2));
        let worse = NashSignature::of_utilities(&[Rational::from(5), Rational::zero()]);
        assert!(sig > worse);
    }

    #[test]
    fn po_sufficient_examples() {
        assert!(check_po_sufficient(&a2(), &a2_po()));
        let swapped = Allocation::from_bundles(3, [vec![1], vec![0, 2]]).unwrap();
        assert!(!check_po_sufficient(&a2(), &swapped));
        let none = Instance::empty(2).unwrap();
        assert!(check_po_sufficient(&none, &Allocation::for_instance(&none)));
    }

    #[test]
    fn notion_names_parse() {
        for n in FairnessNotion::ALL {
            assert_eq!(n.name().parse::<FairnessNotion>().unwrap(), n);
        }
        assert_eq!(
            "po".parse::<FairnessNotion>().unwrap(),
            FairnessNotion::PoExact
        );
        assert!("ef1".parse::<FairnessNotion>().is_err());
    }
}
