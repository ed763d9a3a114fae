//! Machine-readable solve and verify reports.

use std::fmt;
use std::marker::PhantomData;

use manna_core::algorithms::TraceStep;
use manna_core::fairness::{nash_welfare_signature, social_welfare};
use manna_core::{Allocation, FairnessReport, Instance, InstanceClass, Rational, Witness};
use serde::de::{MapAccess, Visitor};
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::io::InstanceFile;

/// A JSON object that keeps its keys in insertion order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct OrderedMap<V>(pub Vec<(String, V)>);

impl<V> OrderedMap<V> {
    pub fn get(&self, key: &str) -> Option<&V> {
        self.0.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }

    pub fn values(&self) -> impl Iterator<Item = &V> {
        self.0.iter().map(|(_, v)| v)
    }
}

impl<V: Serialize> Serialize for OrderedMap<V> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.0.len()))?;
        for (k, v) in &self.0 {
            map.serialize_entry(k, v)?;
        }
        map.end()
    }
}

impl<'de, V: Deserialize<'de>> Deserialize<'de> for OrderedMap<V> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct V2<V>(PhantomData<V>);
        impl<'de, V: Deserialize<'de>> Visitor<'de> for V2<V> {
            type Value = OrderedMap<V>;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a JSON object")
            }
            fn visit_map<A: MapAccess<'de>>(self, mut access: A) -> Result<Self::Value, A::Error> {
                let mut out = Vec::new();
                while let Some(entry) = access.next_entry()? {
                    out.push(entry);
                }
                Ok(OrderedMap(out))
            }
        }
        deserializer.deserialize_map(V2(PhantomData))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub holds: bool,
    /// How the verdict was reached when it is not a direct checker run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,
    #[serde(default)]
    pub witnesses: Vec<Witness>,
}

impl Verdict {
    pub fn from_report(report: FairnessReport) -> Self {
        Verdict {
            holds: report.holds,
            method: None,
            witnesses: report.witnesses,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Welfare {
    pub sw: Rational,
    pub nw_product: Rational,
    pub nw_nonpositive: usize,
}

impl Welfare {
    pub fn of(inst: &Instance, alloc: &Allocation) -> Self {
        let sig = nash_welfare_signature(inst, alloc);
        Welfare {
            sw: social_welfare(inst, alloc),
            nw_product: sig.product,
            nw_nonpositive: sig.nonpositive,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportFile {
    pub algorithm: String,
    pub class: OrderedMap<bool>,
    pub allocation: OrderedMap<Vec<usize>>,
    pub guarantees: OrderedMap<Verdict>,
    pub welfare: Welfare,
    pub trace: Vec<TraceStep>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub holds: bool,
    pub allocation: OrderedMap<Vec<usize>>,
    pub notions: OrderedMap<Verdict>,
    pub welfare: Welfare,
}

pub fn class_map(class: &InstanceClass) -> OrderedMap<bool> {
    OrderedMap(
        class
            .flags()
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect(),
    )
}

pub fn allocation_map(file: &InstanceFile, alloc: &Allocation) -> OrderedMap<Vec<usize>> {
    OrderedMap(
        (0..alloc.agents())
            .map(|a| {
                (
                    file.agent_label(a),
                    alloc.bundle(a).iter().copied().collect(),
                )
            })
            .collect(),
    )
}

/// Pretty JSON followed by a newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}
