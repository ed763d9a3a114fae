//! Allocation algorithms and the class-dispatching solver.
//!
//! | id   | input class                              | guarantees                      |
//! |------|------------------------------------------|---------------------------------|
//! | ALG1 | restricted goods                         | EFX, PropMX, PO, max SW         |
//! | ALG2 | restricted mixed goods, identical bads   | EFX, PropMX, PO, max SW         |
//! | ALG3 | binary mixed goods, identical bads       | EFX₀, PropMX₀, PO, max SW       |
//! | ALG4 | separable                                | PropMX₀                         |
//! | ALG5 | restricted mixed goods, IDO bads         | EFX, PropMX (EFX₀, PropMX₀ if binary) |
//! | ALG6 | restricted mixed goods                   | PropMX (PropMX₀ if binary)      |

mod binary;
mod ido;
mod propm0;
mod restricted;
mod top_envy;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::allocation::Allocation;
use crate::fairness::{self, FairnessNotion, FairnessReport};
use crate::graph::{EnvyGraph, GraphMode, UtilityMatrix};
use crate::instance::{
    classify, partition_items, preprocess_nonpositive_agents, Agent, Instance, InstanceClass,
    InstanceError, Item,
};

pub use binary::binary_goods_mnw;
pub use ido::{ido_map_back, ido_reduce, BadMatch, IdoReduction, MapBack};
pub use propm0::{goods_propm0, ExactSearch, PropM0Engine, DEFAULT_SEARCH_BUDGET};
pub use restricted::{
    alg1_restricted_goods, alg2_rmg_identical_bads, alg3_binary_mixed, positive_projection,
};
pub use top_envy::{alg4_separable, alg4_separable_with, alg5_rmg_ido_bads, alg6_rmg_general_bads};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum AlgorithmId {
    Alg1RestrictedGoods,
    Alg2RmgIdenticalBads,
    Alg3BinaryMixed,
    Alg4Separable,
    Alg5RmgIdoBads,
    Alg6RmgGeneralBads,
    Auto,
}

impl AlgorithmId {
    pub const CONCRETE: [AlgorithmId; 6] = [
        AlgorithmId::Alg1RestrictedGoods,
        AlgorithmId::Alg2RmgIdenticalBads,
        AlgorithmId::Alg3BinaryMixed,
        AlgorithmId::Alg4Separable,
        AlgorithmId::Alg5RmgIdoBads,
        AlgorithmId::Alg6RmgGeneralBads,
    ];

    pub fn short_name(self) -> &'static str {
        match self {
            AlgorithmId::Alg1RestrictedGoods => "alg1",
            AlgorithmId::Alg2RmgIdenticalBads => "alg2",
            AlgorithmId::Alg3BinaryMixed => "alg3",
            AlgorithmId::Alg4Separable => "alg4",
            AlgorithmId::Alg5RmgIdoBads => "alg5",
            AlgorithmId::Alg6RmgGeneralBads => "alg6",
            AlgorithmId::Auto => "auto",
        }
    }

    /// Whether the instance meets this algorithm's input class. The first
    /// unmet flag is returned as the error.
    pub fn check_preconditions(self, inst: &Instance) -> Result<(), AlgorithmError> {
        let class = classify(inst);
        let part = partition_items(inst);
        let fail = |flag: &'static str| {
            Err(AlgorithmError::PreconditionViolated {
                algorithm: self,
                flag,
            })
        };
        match self {
            AlgorithmId::Alg1RestrictedGoods => {
                if !class.goods_only {
                    return fail("goods_only");
                }
                if !class.restricted_mixed_goods {
                    return fail("restricted_mixed_goods");
                }
                if !part.m_zero.is_empty() {
                    return fail("every item positively valued");
                }
            }
            AlgorithmId::Alg2RmgIdenticalBads => {
                if !class.restricted_mixed_goods {
                    return fail("restricted_mixed_goods");
                }
                if !class.identical_bads {
                    return fail("identical_bads");
                }
            }
            AlgorithmId::Alg3BinaryMixed => {
                if !class.binary_mixed_goods {
                    return fail("binary_mixed_goods");
                }
                if !class.identical_bads {
                    return fail("identical_bads");
                }
            }
            AlgorithmId::Alg4Separable => {
                if !class.separable {
                    return fail("separable");
                }
            }
            AlgorithmId::Alg5RmgIdoBads => {
                if !class.restricted_mixed_goods {
                    return fail("restricted_mixed_goods");
                }
                if !class.ido_bads {
                    return fail("ido_bads");
                }
            }
            AlgorithmId::Alg6RmgGeneralBads => {
                if !class.restricted_mixed_goods {
                    return fail("restricted_mixed_goods");
                }
            }
            AlgorithmId::Auto => {
                resolve_auto(inst)?;
            }
        }
        Ok(())
    }

    /// Notions this algorithm's output is proved to satisfy on `class`.
    /// Empty for `Auto`, which has to be resolved against an instance first.
    pub fn guarantees(self, class: &InstanceClass) -> Vec<FairnessNotion> {
        use FairnessNotion::*;
        match self {
            AlgorithmId::Alg1RestrictedGoods | AlgorithmId::Alg2RmgIdenticalBads => {
                vec![Efx, PropMx, PoExact, MaxSw]
            }
            AlgorithmId::Alg3BinaryMixed => vec![Efx0, PropMx0, PoExact, MaxSw],
            AlgorithmId::Alg4Separable => vec![PropMx0],
            AlgorithmId::Alg5RmgIdoBads if class.binary_mixed_goods => vec![Efx0, PropMx0],
            AlgorithmId::Alg5RmgIdoBads => vec![Efx, PropMx],
            AlgorithmId::Alg6RmgGeneralBads if class.binary_mixed_goods => vec![PropMx0],
            AlgorithmId::Alg6RmgGeneralBads => vec![PropMx],
            AlgorithmId::Auto => Vec::new(),
        }
    }
}

impl fmt::Display for AlgorithmId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown algorithm `{0}` (expected auto or alg1..alg6)")]
pub struct UnknownAlgorithm(pub String);

impl FromStr for AlgorithmId {
    type Err = UnknownAlgorithm;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "auto" => AlgorithmId::Auto,
            "alg1" => AlgorithmId::Alg1RestrictedGoods,
            "alg2" => AlgorithmId::Alg2RmgIdenticalBads,
            "alg3" => AlgorithmId::Alg3BinaryMixed,
            "alg4" => AlgorithmId::Alg4Separable,
            "alg5" => AlgorithmId::Alg5RmgIdoBads,
            "alg6" => AlgorithmId::Alg6RmgGeneralBads,
            _ => return Err(UnknownAlgorithm(s.to_string())),
        })
    }
}

/// Strongest applicable algorithm for `inst`.
///
/// Within restricted mixed goods: ALG3, then ALG1 for pure restricted
/// goods, then ALG2, ALG5. A separable instance that got this far goes to
/// ALG4 (PropMX₀) unless it is binary, where ALG6 gives the same guarantee
/// without the exhaustive goods subroutine. Remaining restricted instances
/// go to ALG6.
pub fn resolve_auto(inst: &Instance) -> Result<AlgorithmId, AlgorithmError> {
    let class = classify(inst);
    let rmg = class.restricted_mixed_goods;
    let every_item_positive = partition_items(inst).m_plus.len() == inst.items();
    Ok(if class.binary_mixed_goods && class.identical_bads {
        AlgorithmId::Alg3BinaryMixed
    } else if rmg && class.goods_only && every_item_positive {
        AlgorithmId::Alg1RestrictedGoods
    } else if rmg && class.identical_bads {
        AlgorithmId::Alg2RmgIdenticalBads
    } else if rmg && class.ido_bads {
        AlgorithmId::Alg5RmgIdoBads
    } else if class.separable && !class.binary_mixed_goods {
        AlgorithmId::Alg4Separable
    } else if rmg {
        AlgorithmId::Alg6RmgGeneralBads
    } else {
        return Err(AlgorithmError::NoApplicableAlgorithm);
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    /// Restricted good to a source among its positive valuers.
    GoodToSource,
    /// Mixed good placed by the binary-goods Nash welfare procedure.
    BinaryGoods,
    /// Good placed by the PropM₀ goods subroutine.
    Propm0Goods,
    /// Dummy bad to the lowest-index agent valuing it at zero.
    DummyToZeroValuer,
    /// Dummy bad to a source among agents valuing it at zero.
    DummyToSource,
    /// Pure bad to a sink of the envy graph.
    BadToSink,
    /// Pure bad to a sink of the top-envy graph.
    BadToTopSink,
    /// Bundles rotated along a top-envy cycle.
    TopCycleRotation,
    /// Real bad chosen when mapping a reduced allocation back.
    IdoMapBack,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceStep {
    pub step: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub item: Option<Item>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recipient: Option<Agent>,
    pub rule: Rule,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cycle: Option<Vec<Agent>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolveResult {
    pub allocation: Allocation,
    pub algorithm: AlgorithmId,
    pub guarantees: Vec<FairnessNotion>,
    pub trace: Vec<TraceStep>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlgorithmError {
    #[error("{algorithm} precondition violated: {flag}")]
    PreconditionViolated {
        algorithm: AlgorithmId,
        flag: &'static str,
    },
    #[error(
        "instance fits no supported class (needs restricted mixed goods or a separable instance)"
    )]
    NoApplicableAlgorithm,
    #[error("{algorithm} output violates its guarantee {}", report.notion)]
    GuaranteeViolated {
        algorithm: AlgorithmId,
        report: Box<FairnessReport>,
    },
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error("goods search exhausted its budget after {explored} nodes")]
    SearchExhausted { explored: u64 },
    #[error("internal invariant failed: {0}")]
    Internal(String),
}

/// Mutable state shared by the algorithm phases.
pub(crate) struct Run<'a> {
    pub inst: &'a Instance,
    pub alloc: Allocation,
    pub util: UtilityMatrix,
    pub trace: Vec<TraceStep>,
}

impl<'a> Run<'a> {
    pub fn new(inst: &'a Instance) -> Self {
        Self::with_allocation(inst, Allocation::for_instance(inst), Vec::new())
    }

    pub fn with_allocation(inst: &'a Instance, alloc: Allocation, trace: Vec<TraceStep>) -> Self {
        let util = UtilityMatrix::new(inst, &alloc);
        Run {
            inst,
            alloc,
            util,
            trace,
        }
    }

    pub fn assign(&mut self, item: Item, agent: Agent, rule: Rule) {
        self.alloc
            .assign(item, agent)
            .expect("algorithms hand out each item once");
        self.util.add_item(self.inst, item, agent);
        self.trace.push(TraceStep {
            step: self.trace.len(),
            item: Some(item),
            recipient: Some(agent),
            rule,
            cycle: None,
        });
    }

    pub fn rotate(&mut self, cycle: &[Agent]) {
        self.alloc.rotate(cycle);
        self.util.rotate(cycle);
        self.trace.push(TraceStep {
            step: self.trace.len(),
            item: None,
            recipient: None,
            rule: Rule::TopCycleRotation,
            cycle: Some(cycle.to_vec()),
        });
    }

    pub fn graph(&self, mode: GraphMode) -> EnvyGraph {
        let nodes: Vec<Agent> = (0..self.alloc.agents()).collect();
        EnvyGraph::from_utilities(&self.util, mode, &nodes)
    }
}

/// Appends `steps` (recorded on a sub-instance) to `trace`, renumbering and
/// translating indices.
pub(crate) fn append_trace(
    trace: &mut Vec<TraceStep>,
    steps: &[TraceStep],
    agents: &[Agent],
    items: &[Item],
) {
    for s in steps {
        trace.push(TraceStep {
            step: trace.len(),
            item: s.item.map(|k| items[k]),
            recipient: s.recipient.map(|a| agents[a]),
            rule: s.rule,
            cycle: s
                .cycle
                .as_ref()
                .map(|c| c.iter().map(|&a| agents[a]).collect()),
        });
    }
}

/// Runs `which` (or the strongest applicable algorithm) and verifies the
/// claimed guarantees before returning.
pub fn solve(inst: &Instance, which: AlgorithmId) -> Result<SolveResult, AlgorithmError> {
    solve_with(inst, which, &ExactSearch::default())
}

pub fn solve_with(
    inst: &Instance,
    which: AlgorithmId,
    engine: &dyn PropM0Engine,
) -> Result<SolveResult, AlgorithmError> {
    let active = preprocess_nonpositive_agents(inst)?;
    let class = classify(inst);
    let algorithm = match which {
        AlgorithmId::Auto => resolve_auto(inst)?,
        id => id,
    };
    algorithm.check_preconditions(inst)?;

    let mut result = match algorithm {
        AlgorithmId::Alg1RestrictedGoods => alg1_restricted_goods(inst)?,
        AlgorithmId::Alg2RmgIdenticalBads => alg2_rmg_identical_bads(inst)?,
        AlgorithmId::Alg3BinaryMixed => alg3_binary_mixed(inst)?,
        AlgorithmId::Alg5RmgIdoBads => alg5_rmg_ido_bads(inst)?,
        AlgorithmId::Alg4Separable | AlgorithmId::Alg6RmgGeneralBads => {
            // Proportionality-only algorithms run over the agents with
            // positive total value; the rest keep the empty bundle.
            let run = |sub: &Instance| match algorithm {
                AlgorithmId::Alg4Separable => alg4_separable_with(sub, engine),
                _ => alg6_rmg_general_bads(sub),
            };
            if active.all_active() {
                run(inst)?
            } else {
                let sub = inst.restrict_agents(&active.active)?;
                let inner = run(&sub)?;
                let items: Vec<Item> = (0..inst.items()).collect();
                let mut alloc = Allocation::for_instance(inst);
                inner.allocation.embed(&active.active, &items, &mut alloc);
                let mut trace = Vec::new();
                append_trace(&mut trace, &inner.trace, &active.active, &items);
                SolveResult {
                    allocation: alloc,
                    algorithm,
                    guarantees: Vec::new(),
                    trace,
                }
            }
        }
        AlgorithmId::Auto => unreachable!("resolved above"),
    };
    result.algorithm = algorithm;
    result.guarantees = algorithm.guarantees(&class);
    self_verify(inst, &result)?;
    Ok(result)
}

/// Checks every claimed guarantee; PO and max SW claims are checked through
/// the argmax-holder certificate, which implies both.
fn self_verify(inst: &Instance, result: &SolveResult) -> Result<(), AlgorithmError> {
    if !result.allocation.is_complete() {
        return Err(AlgorithmError::Internal(format!(
            "{} left items {:?} unallocated",
            result.algorithm,
            result.allocation.unallocated()
        )));
    }
    for &notion in &result.guarantees {
        let checked = if notion.needs_oracle() {
            FairnessNotion::PoSufficient
        } else {
            notion
        };
        let report = fairness::evaluate(inst, &result.allocation, checked)
            .map_err(|e| AlgorithmError::Internal(e.to_string()))?;
        if !report.holds {
            return Err(AlgorithmError::GuaranteeViolated {
                algorithm: result.algorithm,
                report: Box::new(report),
            });
        }
    }
    Ok(())
}
