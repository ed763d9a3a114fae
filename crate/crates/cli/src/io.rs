//! Instance and allocation files.
//!
//! An instance file is a JSON object with a `values` matrix (one row per
//! agent) whose entries are integers or `"p/q"` strings, plus optional
//! `agents` and `items` name lists. An allocation file maps agents to item
//! lists, either as an array of bundles or an object keyed by agent name
//! or index; a solve report is accepted too, through its `allocation` key.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use manna_core::{Allocation, AllocationError, Instance, InstanceError, Item, Rational};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FileError {
    #[error("{}: {source}", path.display())]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}:{line}:{column}: {message}", path.display())]
    Syntax {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{}: {field}: {message}", path.display())]
    Invalid {
        path: PathBuf,
        field: String,
        message: String,
    },
}

impl FileError {
    fn invalid(path: &Path, field: impl Into<String>, message: impl ToString) -> Self {
        FileError::Invalid {
            path: path.to_path_buf(),
            field: field.into(),
            message: message.to_string(),
        }
    }
}

fn read(path: &Path) -> Result<String, FileError> {
    std::fs::read_to_string(path).map_err(|source| FileError::Read {
        path: path.to_path_buf(),
        source,
    })
}

fn parse_json<T: for<'de> Deserialize<'de>>(path: &Path, text: &str) -> Result<T, FileError> {
    serde_json::from_str(text).map_err(|e| FileError::Syntax {
        path: path.to_path_buf(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub agents: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub items: Option<Vec<String>>,
    pub values: Vec<Vec<Rational>>,
}

impl InstanceFile {
    pub fn from_instance(inst: &Instance) -> Self {
        InstanceFile {
            agents: None,
            items: None,
            values: inst.rows().to_vec(),
        }
    }

    pub fn load(path: &Path) -> Result<Self, FileError> {
        let file: InstanceFile = parse_json(path, &read(path)?)?;
        file.instance_at(path)?;
        Ok(file)
    }

    pub fn parse(path: &Path, text: &str) -> Result<Self, FileError> {
        let file: InstanceFile = parse_json(path, text)?;
        file.instance_at(path)?;
        Ok(file)
    }

    /// The validated instance; `path` only labels diagnostics.
    pub fn instance_at(&self, path: &Path) -> Result<Instance, FileError> {
        let inst = Instance::new(self.values.clone()).map_err(|e| match e {
            InstanceError::Ragged { row, .. } => {
                FileError::invalid(path, format!("values[{row}]"), e)
            }
            other => FileError::invalid(path, "values", other),
        })?;
        if let Some(names) = &self.agents {
            if names.len() != inst.agents() {
                return Err(FileError::invalid(
                    path,
                    "agents",
                    format!("{} names for {} value rows", names.len(), inst.agents()),
                ));
            }
        }
        if let Some(names) = &self.items {
            if names.len() != inst.items() {
                return Err(FileError::invalid(
                    path,
                    "items",
                    format!("{} names for {} value columns", names.len(), inst.items()),
                ));
            }
        }
        Ok(inst)
    }

    pub fn instance(&self) -> Instance {
        Instance::new(self.values.clone()).expect("validated on load")
    }

    pub fn agent_label(&self, agent: usize) -> String {
        self.agents
            .as_ref()
            .map_or_else(|| agent.to_string(), |names| names[agent].clone())
    }

    /// Canonical text form: integers as JSON numbers, other rationals as
    /// `"p/q"` strings, one matrix row per line, newline-terminated.
    pub fn to_json(&self) -> String {
        let mut out = String::from("{\n");
        let names = |list: &Vec<String>| serde_json::to_string(list).expect("strings serialize");
        if let Some(a) = &self.agents {
            let _ = writeln!(out, "  \"agents\": {},", names(a));
        }
        if let Some(i) = &self.items {
            let _ = writeln!(out, "  \"items\": {},", names(i));
        }
        out.push_str("  \"values\": [");
        for (r, row) in self.values.iter().enumerate() {
            out.push_str(if r == 0 { "\n    [" } else { ",\n    [" });
            for (k, v) in row.iter().enumerate() {
                if k > 0 {
                    out.push_str(", ");
                }
                if v.is_integer() {
                    let _ = write!(out, "{v}");
                } else {
                    let _ = write!(out, "\"{v}\"");
                }
            }
            out.push(']');
        }
        if !self.values.is_empty() {
            out.push_str("\n  ");
        }
        out.push_str("]\n}\n");
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(untagged)]
enum ItemRef {
    Index(usize),
    Name(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(untagged)]
enum Bundles {
    List(Vec<Vec<ItemRef>>),
    Map(BTreeMap<String, Vec<ItemRef>>),
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(untagged)]
enum AllocationDoc {
    Wrapped { allocation: Bundles },
    Bare(Bundles),
}

/// Reads an allocation of `file`'s instance. Every item must be assigned
/// exactly once.
pub fn load_allocation(path: &Path, file: &InstanceFile) -> Result<Allocation, FileError> {
    parse_allocation(path, &read(path)?, file)
}

pub fn parse_allocation(
    path: &Path,
    text: &str,
    file: &InstanceFile,
) -> Result<Allocation, FileError> {
    let doc: AllocationDoc = parse_json(path, text)?;
    let bundles = match doc {
        AllocationDoc::Wrapped { allocation } | AllocationDoc::Bare(allocation) => allocation,
    };
    let inst = file.instance();
    let n = inst.agents();
    let resolve_item = |field: &str, r: &ItemRef| -> Result<Item, FileError> {
        match r {
            ItemRef::Index(k) if *k < inst.items() => Ok(*k),
            ItemRef::Index(k) => Err(FileError::invalid(
                path,
                field,
                format!(
                    "item {k} out of range (instance has {} items)",
                    inst.items()
                ),
            )),
            ItemRef::Name(name) => file
                .items
                .as_ref()
                .and_then(|names| names.iter().position(|x| x == name))
                .ok_or_else(|| FileError::invalid(path, field, format!("unknown item `{name}`"))),
        }
    };

    let mut per_agent: Vec<Vec<Item>> = vec![Vec::new(); n];
    match bundles {
        Bundles::List(list) => {
            if list.len() != n {
                return Err(FileError::invalid(
                    path,
                    "allocation",
                    AllocationError::BundleCount {
                        expected: n,
                        found: list.len(),
                    },
                ));
            }
            for (a, b) in list.iter().enumerate() {
                for (k, r) in b.iter().enumerate() {
                    per_agent[a].push(resolve_item(&format!("allocation[{a}][{k}]"), r)?);
                }
            }
        }
        Bundles::Map(map) => {
            for (key, b) in &map {
                let agent = file
                    .agents
                    .as_ref()
                    .and_then(|names| names.iter().position(|x| x == key))
                    .or_else(|| key.parse::<usize>().ok().filter(|&a| a < n))
                    .ok_or_else(|| {
                        FileError::invalid(path, "allocation", format!("unknown agent `{key}`"))
                    })?;
                for (k, r) in b.iter().enumerate() {
                    per_agent[agent].push(resolve_item(&format!("allocation.{key}[{k}]"), r)?);
                }
            }
        }
    }
    let alloc = Allocation::from_bundles(inst.items(), per_agent)
        .map_err(|e| FileError::invalid(path, "allocation", e))?;
    if !alloc.is_complete() {
        return Err(FileError::invalid(
            path,
            "allocation",
            format!("items {:?} are not assigned", alloc.unallocated()),
        ));
    }
    Ok(alloc)
}
