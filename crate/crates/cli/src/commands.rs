//! Subcommands. Each returns an [`Outcome`] instead of printing, so the
//! binary and the tests share one code path.
//!
//! Exit codes: 0 success, 1 bad input or usage, 2 no applicable algorithm
//! or unmet precondition, 3 a guarantee or requested notion fails, 4 the
//! oracle budget or the goods search budget runs out.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use manna_core::algorithms::solve;
use manna_core::fairness::{evaluate, po_sufficient_report};
use manna_core::oracle::{self, exists_allocation, DEFAULT_BUDGET};
use manna_core::{
    classify, partition_items, AlgorithmError, AlgorithmId, Allocation, EnvyGraph, FairnessNotion,
    GraphMode, Instance, InstanceError, OracleError, PredicateSet,
};
use serde::Serialize;

use crate::generate::{generate, ClassKind, GenerateSpec};
use crate::io::{load_allocation, FileError, InstanceFile};
use crate::report::{
    allocation_map, class_map, to_json, OrderedMap, ReportFile, Verdict, VerifyReport, Welfare,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_NOT_APPLICABLE: i32 = 2;
pub const EXIT_VIOLATED: i32 = 3;
pub const EXIT_BUDGET: i32 = 4;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn new(code: i32, message: impl ToString) -> Self {
        Failure {
            code,
            message: message.to_string(),
        }
    }
}

impl From<FileError> for Failure {
    fn from(e: FileError) -> Self {
        Failure::new(EXIT_INPUT, e)
    }
}

impl From<OracleError> for Failure {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::BudgetExceeded { .. } => Failure::new(EXIT_BUDGET, e),
            OracleError::Fairness(_) => Failure::new(EXIT_INPUT, e),
        }
    }
}

impl From<AlgorithmError> for Failure {
    fn from(e: AlgorithmError) -> Self {
        let code = match &e {
            AlgorithmError::NoApplicableAlgorithm
            | AlgorithmError::PreconditionViolated { .. }
            | AlgorithmError::Instance(InstanceError::AllAgentsInactive) => EXIT_NOT_APPLICABLE,
            AlgorithmError::Instance(_) => EXIT_INPUT,
            AlgorithmError::GuaranteeViolated { .. } | AlgorithmError::Internal(_) => EXIT_VIOLATED,
            AlgorithmError::SearchExhausted { .. } => EXIT_BUDGET,
        };
        Failure::new(code, e)
    }
}

type CmdResult = Result<Outcome, Failure>;

fn ok(stdout: String) -> CmdResult {
    Ok(Outcome {
        code: EXIT_OK,
        stdout,
        stderr: String::new(),
    })
}

#[derive(Debug, Parser)]
#[command(
    name = "manna",
    version,
    about = "Fair division of indivisible mixed manna"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Allocate an instance and report the guarantees.
    Solve(SolveArgs),
    /// Check fairness notions of a given allocation.
    Verify(VerifyArgs),
    /// Exhaustive search over all allocations.
    Oracle(OracleArgs),
    /// Emit a seeded random instance of a class.
    Generate(GenerateArgs),
    /// Print the class flags and the item partition.
    Classify(ClassifyArgs),
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long, default_value = "auto", value_parser = parse_algorithm)]
    pub algorithm: AlgorithmId,
    /// Decide PO and maximum welfare with the oracle when within budget.
    #[arg(long)]
    pub verify: bool,
    /// Also write the report here.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Write the final envy and top-envy graphs in DOT format.
    #[arg(long)]
    pub dump_envy_graph: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    pub budget: u64,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long)]
    pub allocation: PathBuf,
    /// Comma-separated notions, e.g. `efx,propmx0,po`.
    #[arg(long, default_value = "", value_parser = parse_notions)]
    pub notions: NotionList,
    /// Add exact Pareto-optimality, decided by the oracle.
    #[arg(long)]
    pub exact_po: bool,
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    pub budget: u64,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long)]
    pub instance: PathBuf,
    /// Comma-separated notions that must all hold.
    #[arg(long, value_parser = parse_notions)]
    pub exists: Option<NotionList>,
    /// Report the maximum Nash welfare allocation.
    #[arg(long)]
    pub mnw: bool,
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    pub budget: u64,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, value_enum)]
    pub class: ClassKind,
    #[arg(long)]
    pub agents: usize,
    #[arg(long)]
    pub items: usize,
    #[arg(long)]
    pub seed: u64,
    /// Inclusive integer range `LO..HI`.
    #[arg(long, default_value = "-9..9", allow_hyphen_values = true, value_parser = parse_range)]
    pub value_range: (i64, i64),
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[arg(long)]
    pub instance: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct NotionList(pub Vec<FairnessNotion>);

fn parse_algorithm(s: &str) -> Result<AlgorithmId, String> {
    s.parse()
        .map_err(|e: manna_core::algorithms::UnknownAlgorithm| e.to_string())
}

fn parse_notions(s: &str) -> Result<NotionList, String> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| t.parse::<FairnessNotion>().map_err(|e| e.to_string()))
        .collect::<Result<Vec<_>, _>>()
        .map(NotionList)
}

pub fn parse_range(s: &str) -> Result<(i64, i64), String> {
    let (lo, hi) = s
        .split_once("..")
        .ok_or_else(|| format!("expected LO..HI, got `{s}`"))?;
    let lo: i64 = lo
        .trim()
        .parse()
        .map_err(|e| format!("bad LO `{lo}`: {e}"))?;
    let hi: i64 = hi
        .trim()
        .parse()
        .map_err(|e| format!("bad HI `{hi}`: {e}"))?;
    Ok((lo, hi))
}

/// Parses `args` (program name first) and runs the subcommand.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                Outcome {
                    code: EXIT_INPUT,
                    stdout: String::new(),
                    stderr: text,
                }
            } else {
                Outcome {
                    code: EXIT_OK,
                    stdout: text,
                    stderr: String::new(),
                }
            };
        }
    };
    let result = match cli.command {
        Command::Solve(a) => cmd_solve(&a),
        Command::Verify(a) => cmd_verify(&a),
        Command::Oracle(a) => cmd_oracle(&a),
        Command::Generate(a) => cmd_generate(&a),
        Command::Classify(a) => cmd_classify(&a),
    };
    result.unwrap_or_else(|f| Outcome {
        code: f.code,
        stdout: String::new(),
        stderr: format!("error: {}\n", f.message),
    })
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text)
        .map_err(|e| Failure::new(EXIT_INPUT, format!("{}: {e}", path.display())))
}

fn oracle_verdict(
    inst: &Instance,
    alloc: &Allocation,
    notion: FairnessNotion,
    budget: u64,
) -> Result<Verdict, OracleError> {
    let holds = match notion {
        FairnessNotion::PoExact => oracle::is_pareto_optimal_exact(inst, alloc, budget)?,
        FairnessNotion::MaxSw => {
            oracle::max_social_welfare(inst, budget)?.0
                == manna_core::fairness::social_welfare(inst, alloc)
        }
        other => unreachable!("{other} is decided by its checker"),
    };
    Ok(Verdict {
        holds,
        method: Some("oracle".into()),
        witnesses: Vec::new(),
    })
}

fn cmd_solve(args: &SolveArgs) -> CmdResult {
    let file = InstanceFile::load(&args.instance)?;
    let inst = file.instance();
    let result = solve(&inst, args.algorithm)?;
    let alloc = &result.allocation;

    let within_budget = oracle::allocation_count(&inst).is_some_and(|c| c <= args.budget);
    let mut guarantees = Vec::new();
    let mut all_hold = true;
    for &notion in &result.guarantees {
        let verdict = if notion.needs_oracle() {
            if args.verify && within_budget {
                oracle_verdict(&inst, alloc, notion, args.budget)?
            } else {
                let mut v = Verdict::from_report(po_sufficient_report(&inst, alloc));
                v.method = Some("argmax-certificate".into());
                v
            }
        } else {
            Verdict::from_report(
                evaluate(&inst, alloc, notion).map_err(|e| Failure::new(EXIT_VIOLATED, e))?,
            )
        };
        all_hold &= verdict.holds;
        guarantees.push((notion.name().to_string(), verdict));
    }

    let report = ReportFile {
        algorithm: result.algorithm.short_name().to_string(),
        class: class_map(&classify(&inst)),
        allocation: allocation_map(&file, alloc),
        guarantees: OrderedMap(guarantees),
        welfare: Welfare::of(&inst, alloc),
        trace: result.trace.clone(),
    };
    let json = to_json(&report);
    if let Some(path) = &args.report {
        write_file(path, &json)?;
    }
    if let Some(path) = &args.dump_envy_graph {
        let mut dot = EnvyGraph::build(&inst, alloc, GraphMode::Plain).to_dot();
        dot.push_str(&EnvyGraph::build(&inst, alloc, GraphMode::Top).to_dot());
        write_file(path, &dot)?;
    }
    Ok(Outcome {
        code: if all_hold { EXIT_OK } else { EXIT_VIOLATED },
        stdout: json,
        stderr: if all_hold {
            String::new()
        } else {
            "error: the oracle refutes a claimed guarantee\n".into()
        },
    })
}

fn cmd_verify(args: &VerifyArgs) -> CmdResult {
    let file = InstanceFile::load(&args.instance)?;
    let inst = file.instance();
    let alloc = load_allocation(&args.allocation, &file)?;
    let mut notions = args.notions.0.clone();
    if args.exact_po && !notions.contains(&FairnessNotion::PoExact) {
        notions.push(FairnessNotion::PoExact);
    }
    let mut verdicts = Vec::new();
    for notion in notions {
        let verdict = if notion.needs_oracle() {
            oracle_verdict(&inst, &alloc, notion, args.budget)?
        } else {
            Verdict::from_report(
                evaluate(&inst, &alloc, notion).map_err(|e| Failure::new(EXIT_INPUT, e))?,
            )
        };
        verdicts.push((notion.name().to_string(), verdict));
    }
    let holds = verdicts.iter().all(|(_, v)| v.holds);
    let report = VerifyReport {
        holds,
        allocation: allocation_map(&file, &alloc),
        notions: OrderedMap(verdicts),
        welfare: Welfare::of(&inst, &alloc),
    };
    Ok(Outcome {
        code: if holds { EXIT_OK } else { EXIT_VIOLATED },
        stdout: to_json(&report),
        stderr: String::new(),
    })
}

fn allocation_json(file: &InstanceFile, alloc: &Allocation) -> String {
    serde_json::to_string(&allocation_map(file, alloc)).expect("maps serialize")
}

fn cmd_oracle(args: &OracleArgs) -> CmdResult {
    let file = InstanceFile::load(&args.instance)?;
    let inst = file.instance();
    if args.exists.is_none() && !args.mnw {
        return Err(Failure::new(
            EXIT_INPUT,
            "nothing to do: pass --exists and/or --mnw",
        ));
    }
    let mut out = String::new();
    if let Some(list) = &args.exists {
        let outcome = exists_allocation(
            &inst,
            &PredicateSet::new(list.0.iter().copied()),
            args.budget,
        )?;
        match outcome.witness {
            Some(x) => out.push_str(&format!(
                "WITNESS {} (first of {} allocations)\n",
                allocation_json(&file, &x),
                outcome.space
            )),
            None => out.push_str(&format!(
                "NONE (exhaustive over {} allocations)\n",
                outcome.space
            )),
        }
    }
    if args.mnw {
        let (sig, x) = oracle::mnw_exact(&inst, args.budget)?;
        out.push_str(&format!(
            "MNW nonpositive={} product={} allocation={}\n",
            sig.nonpositive,
            sig.product,
            allocation_json(&file, &x)
        ));
    }
    ok(out)
}

fn cmd_generate(args: &GenerateArgs) -> CmdResult {
    let (lo, hi) = args.value_range;
    let inst = generate(&GenerateSpec {
        class: args.class,
        agents: args.agents,
        items: args.items,
        seed: args.seed,
        lo,
        hi,
    })
    .map_err(|e| Failure::new(EXIT_INPUT, e))?;
    ok(InstanceFile::from_instance(&inst).to_json())
}

#[derive(Serialize)]
struct ClassifyReport {
    class: OrderedMap<bool>,
    restricted_values: Option<OrderedMap<manna_core::Rational>>,
    partition: manna_core::ItemPartition,
}

fn cmd_classify(args: &ClassifyArgs) -> CmdResult {
    let file = InstanceFile::load(&args.instance)?;
    let inst = file.instance();
    let class = classify(&inst);
    let report = ClassifyReport {
        class: class_map(&class),
        restricted_values: class.restricted_values.as_ref().map(|vals| {
            OrderedMap(
                vals.iter()
                    .map(|(j, v)| (j.to_string(), v.clone()))
                    .collect(),
            )
        }),
        partition: partition_items(&inst),
    };
    ok(to_json(&report))
}
