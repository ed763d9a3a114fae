mod common;

use common::{any_instance, instance_and_allocation, restricted, separable, Bads};
use manna_core::algorithms::{binary_goods_mnw, goods_propm0, ido_reduce, solve};
use manna_core::fairness::{
    check_efx, check_po_sufficient, evaluate, nash_welfare_signature, social_welfare,
};
use manna_core::graph::rotate_cycle;
use manna_core::oracle::{is_pareto_optimal_exact, max_social_welfare, mnw_exact, DEFAULT_BUDGET};
use manna_core::{
    classify, partition_items, AlgorithmId, Allocation, EnvyGraph, FairnessNotion, GraphMode,
    Instance,
};
use proptest::prelude::*;

fn holds(inst: &Instance, x: &Allocation, notion: FairnessNotion) -> bool {
    evaluate(inst, x, notion).unwrap().holds
}

fn argmax_allocation(inst: &Instance, pick: &[usize]) -> Allocation {
    let owners: Vec<usize> = (0..inst.items())
        .map(|j| {
            let top = inst.max_value(j);
            let best: Vec<usize> = (0..inst.agents())
                .filter(|&i| *inst.value(i, j) == top)
                .collect();
            best[pick[j] % best.len()]
        })
        .collect();
    Allocation::from_owners(inst.agents(), &owners)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn efx_implies_propmx((inst, x) in instance_and_allocation(3, 5, -3, 3)) {
        if check_efx(&inst, &x, false).holds {
            prop_assert!(holds(&inst, &x, FairnessNotion::PropMx));
        }
        if check_efx(&inst, &x, true).holds {
            prop_assert!(holds(&inst, &x, FairnessNotion::PropMx0));
        }
    }

    #[test]
    fn implication_lattice((inst, x) in instance_and_allocation(3, 5, -3, 3)) {
        use FairnessNotion::*;
        let h = |n| holds(&inst, &x, n);
        prop_assert!(!h(Ef) || h(Efx0));
        prop_assert!(!h(Efx0) || h(Efx));
        prop_assert!(!h(Prop) || h(PropMx0));
        prop_assert!(!h(PropMx0) || h(PropMx));
        let class = classify(&inst);
        if class.goods_only {
            prop_assert!(!h(Prop) || h(PropX));
            prop_assert!(!h(PropX) || h(PropM));
            prop_assert!(!h(PropM0) || h(PropM));
            prop_assert!(!h(Prop) || h(PropM0));
        }
    }

    #[test]
    fn argmax_certificate_is_exact(
        (inst, pick) in any_instance(3, 5, -5, 5).prop_flat_map(|inst| {
            let m = inst.items();
            (Just(inst), prop::collection::vec(0usize..6, m))
        })
    ) {
        let x = argmax_allocation(&inst, &pick);
        prop_assert!(check_po_sufficient(&inst, &x));
        prop_assert!(is_pareto_optimal_exact(&inst, &x, DEFAULT_BUDGET).unwrap());
        let (best, _) = max_social_welfare(&inst, DEFAULT_BUDGET).unwrap();
        prop_assert_eq!(social_welfare(&inst, &x), best);
        prop_assert!(EnvyGraph::build(&inst, &x, GraphMode::Plain).find_cycle().is_none());
    }

    #[test]
    fn top_edges_are_envy_edges((inst, x) in instance_and_allocation(4, 6, -4, 4)) {
        let plain = EnvyGraph::build(&inst, &x, GraphMode::Plain);
        let top = EnvyGraph::build(&inst, &x, GraphMode::Top);
        for (i, h) in top.edges() {
            prop_assert!(plain.has_edge(i, h));
        }
        for i in 0..inst.agents() {
            prop_assert_eq!(top.successors(i).is_empty(), plain.successors(i).is_empty());
        }
    }

    #[test]
    fn envy_rotation_raises_welfare((inst, x) in instance_and_allocation(4, 6, -4, 4)) {
        for mode in [GraphMode::Plain, GraphMode::Top] {
            let g = EnvyGraph::build(&inst, &x, mode);
            if let Some(cycle) = g.find_cycle() {
                prop_assert!(g.is_cycle(&cycle));
                let y = rotate_cycle(&inst, &x, &g, &cycle).unwrap();
                prop_assert!(social_welfare(&inst, &y) > social_welfare(&inst, &x));
                for i in (0..inst.agents()).filter(|i| !cycle.contains(i)) {
                    prop_assert_eq!(y.bundle(i), x.bundle(i));
                }
            }
        }
    }

    #[test]
    fn partition_and_flags(inst in any_instance(3, 6, -3, 3)) {
        let p = partition_items(&inst);
        let mut all: Vec<usize> = p.m_plus.iter().chain(&p.m_zero).chain(&p.m_minus).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..inst.items()).collect::<Vec<_>>());
        for &j in &p.m_plus {
            prop_assert!(inst.column(j).any(|v| v.is_positive()));
        }
        for &j in &p.m_zero {
            prop_assert!(inst.column(j).all(|v| !v.is_positive()));
            prop_assert!(inst.column(j).any(|v| v.is_zero()));
        }
        for &j in &p.m_minus {
            prop_assert!(inst.column(j).all(|v| v.is_negative()));
        }
        let c = classify(&inst);
        prop_assert!(!c.identical_bads || c.ido_bads);
        prop_assert!(!c.identical_all || c.ido_all);
        prop_assert!(!c.binary_mixed_goods || c.restricted_mixed_goods);
        prop_assert!(!c.goods_only || c.separable);
        prop_assert!(!c.goods_only || p.m_minus.is_empty());
        prop_assert!(!c.bads_only || p.m_plus.is_empty());
        prop_assert_eq!(c.restricted_values.is_some(), c.restricted_mixed_goods);
    }

    #[test]
    fn reduction_orders_bads_and_keeps_totals(inst in any_instance(4, 7, -6, 4)) {
        let red = ido_reduce(&inst);
        let p = partition_items(&inst);
        prop_assert_eq!(&red.bads, &p.m_minus);
        prop_assert_eq!(&partition_items(&red.instance).m_minus, &p.m_minus);
        for i in 0..inst.agents() {
            prop_assert_eq!(red.instance.total_value(i), inst.total_value(i));
            for w in red.bads.windows(2) {
                prop_assert!(red.instance.value(i, w[0]) <= red.instance.value(i, w[1]));
            }
            for j in (0..inst.items()).filter(|j| !p.m_minus.contains(j)) {
                prop_assert_eq!(red.instance.value(i, j), inst.value(i, j));
            }
        }
        prop_assert!(classify(&red.instance).ido_bads);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn binary_goods_reach_max_nash_welfare(
        inst in restricted(1..=3, 1..=6, true, false, Bads::None)
    ) {
        let x = binary_goods_mnw(&inst).unwrap();
        prop_assert!(x.is_complete());
        let (best, _) = mnw_exact(&inst, DEFAULT_BUDGET).unwrap();
        prop_assert_eq!(nash_welfare_signature(&inst, &x), best);
        prop_assert!(check_efx(&inst, &x, true).holds);
        prop_assert!(check_po_sufficient(&inst, &x));
    }

    #[test]
    fn goods_propm0_passes_checker(
        inst in separable(3, 6).prop_filter("goods only", |i| classify(i).goods_only)
    ) {
        let x = goods_propm0(&inst).unwrap();
        prop_assert!(x.is_complete());
        prop_assert!(holds(&inst, &x, FairnessNotion::PropM0));
    }

    #[test]
    fn solve_respects_oracle_guarantees(
        (inst, id) in prop_oneof![
            restricted(1..=3, 1..=5, false, false, Bads::None).prop_map(|i| (i, AlgorithmId::Alg1RestrictedGoods)),
            restricted(1..=3, 1..=5, false, true, Bads::Identical).prop_map(|i| (i, AlgorithmId::Alg2RmgIdenticalBads)),
            restricted(1..=3, 1..=5, true, true, Bads::Identical).prop_map(|i| (i, AlgorithmId::Alg3BinaryMixed)),
            separable(3, 5).prop_map(|i| (i, AlgorithmId::Alg4Separable)),
            restricted(1..=3, 1..=5, false, true, Bads::Ordered).prop_map(|i| (i, AlgorithmId::Alg5RmgIdoBads)),
            restricted(1..=3, 1..=5, false, true, Bads::General).prop_map(|i| (i, AlgorithmId::Alg6RmgGeneralBads)),
        ]
    ) {
        prop_assume!((0..inst.agents()).any(|i| inst.total_value(i).is_positive()));
        let r = solve(&inst, id).unwrap();
        prop_assert!(r.allocation.is_complete());
        for notion in r.guarantees {
            let ok = match notion {
                FairnessNotion::PoExact => is_pareto_optimal_exact(&inst, &r.allocation, DEFAULT_BUDGET).unwrap(),
                FairnessNotion::MaxSw => {
                    max_social_welfare(&inst, DEFAULT_BUDGET).unwrap().0 == social_welfare(&inst, &r.allocation)
                }
                other => holds(&inst, &r.allocation, other),
            };
            prop_assert!(ok, "{} fails {}", id, notion);
        }
    }
}
