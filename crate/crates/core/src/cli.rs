//! The `arcverify` command line.
//!
//! Exit codes: 0 success or arc closed, 1 finite superset, 2 infinite
//! closure, forwarding loop or failed repair, 3 invalid input or usage,
//! 4 budget exceeded. Failures are written to stderr as one JSON object and
//! leave stdout empty.

use std::ffi::OsString;
use std::fs;
use std::path::{Path as FsPath, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::closure::{
    self, build_closure_graph, check_arc_closed, check_update, find_cycle, Closure, ClosureError,
    ClosureStatus, Verdict,
};
use crate::dot::{closure_graph_dot, topology_dot};
use crate::pathmodel::{validate_path_set, Path, PathSet, ValidationReport};
use crate::repair::{
    reroute_repair_with, subset_repair, superset_repair, RepairError, RepairOutcome,
    RerouteOptions, DEFAULT_EXACT_THRESHOLD,
};
use crate::rules::{
    derive_rules, simulate_injection_with_budget, Configuration, Injection, RulesError,
    DEFAULT_PATH_BUDGET, DEFAULT_WALK_BUDGET,
};
use crate::topology::{build_topology, NodeId, Topology};

pub const EXIT_OK: i32 = 0;
pub const EXIT_SUPERSET: i32 = 1;
pub const EXIT_LOOP: i32 = 2;
pub const EXIT_INPUT: i32 = 3;
pub const EXIT_BUDGET: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "arcverify",
    version,
    about = "Check requested SDN path sets before installing their flow rules"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Upper bound on enumerated paths (or simulated packet copies)
    #[arg(long, global = true)]
    budget: Option<usize>,

    /// Accept paths that traverse a directed arc more than once
    #[arg(long, global = true)]
    allow_non_edge_simple: bool,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Summary,
    Dot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Strategy {
    Subset,
    Superset,
    Reroute,
}

#[derive(Debug, clap::Args)]
struct Inputs {
    #[arg(long)]
    topology: PathBuf,
    /// Path-set file; repeat for several traffic types
    #[arg(long = "paths", required = true)]
    paths: Vec<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate path sets against the topology
    Validate(Inputs),
    /// Print the flow rules a path set induces
    Rules(Inputs),
    /// Decide whether a path set is implemented exactly
    Check {
        #[command(flatten)]
        inputs: Inputs,
        /// JSON file {"add": [...], "remove": [...]} applied before checking
        #[arg(long)]
        update: Option<PathBuf>,
    },
    /// Print the full set of paths the rules would implement
    Closure(Inputs),
    /// Inject a packet at each host and follow every copy
    Simulate {
        #[arg(long)]
        topology: PathBuf,
        #[arg(
            long = "paths",
            conflicts_with = "rules",
            required_unless_present = "rules"
        )]
        paths: Vec<PathBuf>,
        /// Rule file instead of path sets
        #[arg(long)]
        rules: Option<PathBuf>,
        /// Inject only at these hosts
        #[arg(long = "host")]
        hosts: Vec<String>,
    },
    /// Turn a path set into an arc-closed one
    Repair {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long, value_enum)]
        strategy: Strategy,
        #[arg(long)]
        try_rotations: bool,
        #[arg(long, default_value_t = DEFAULT_EXACT_THRESHOLD)]
        exact_threshold: usize,
    },
    /// Graphviz rendering of the topology, or of the verification graph of a path set
    ExportDot {
        #[arg(long)]
        topology: PathBuf,
        #[arg(long)]
        paths: Option<PathBuf>,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TopologyFile {
    hosts: Vec<NodeId>,
    switches: Vec<NodeId>,
    links: Vec<(NodeId, NodeId)>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PathSetFile {
    traffic_type: String,
    paths: Vec<Vec<NodeId>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct UpdateFile {
    #[serde(default)]
    add: Vec<Vec<NodeId>>,
    #[serde(default)]
    remove: Vec<Vec<NodeId>>,
}

/// Everything a run produced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Output {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

#[derive(Debug)]
struct Failure {
    code: i32,
    kind: &'static str,
    message: String,
    details: Value,
}

impl Failure {
    fn input(kind: &'static str, message: impl Into<String>, details: Value) -> Self {
        Failure {
            code: EXIT_INPUT,
            kind,
            message: message.into(),
            details,
        }
    }

    fn render(&self) -> String {
        let body = json!({"error": self.kind, "message": self.message, "details": self.details});
        format!("{body}\n")
    }
}

impl From<ClosureError> for Failure {
    fn from(e: ClosureError) -> Self {
        Failure {
            code: EXIT_BUDGET,
            kind: "budget_exceeded",
            message: e.to_string(),
            details: Value::Null,
        }
    }
}

impl From<RulesError> for Failure {
    fn from(e: RulesError) -> Self {
        let (code, kind) = match e {
            RulesError::BudgetExceeded { .. } => (EXIT_BUDGET, "budget_exceeded"),
            RulesError::InvalidRule { .. } => (EXIT_INPUT, "invalid_rule"),
            RulesError::NotAHost(_) => (EXIT_INPUT, "not_a_host"),
        };
        Failure {
            code,
            kind,
            message: e.to_string(),
            details: Value::Null,
        }
    }
}

impl From<RepairError> for Failure {
    fn from(e: RepairError) -> Self {
        let (code, kind) = match e {
            RepairError::BudgetExceeded { .. } => (EXIT_BUDGET, "budget_exceeded"),
            RepairError::NoFiniteSuperset { .. } => (EXIT_LOOP, "no_finite_superset"),
            RepairError::EmptyUnusedSet { .. } => (EXIT_LOOP, "empty_unused_set"),
            RepairError::RepairImpossible { .. } | RepairError::NotArcClosedAfterRepair { .. } => {
                (EXIT_LOOP, "repair_impossible")
            }
        };
        Failure {
            code,
            kind,
            message: e.to_string(),
            details: to_value(&e),
        }
    }
}

/// One command's result for one input file.
struct Item {
    code: i32,
    json: Value,
    summary: String,
    dot: Option<String>,
}

impl Item {
    fn new(code: i32, value: &impl Serialize, summary: String) -> Self {
        Item {
            code,
            json: to_value(value),
            summary,
            dot: None,
        }
    }
}

fn to_value(value: &impl Serialize) -> Value {
    serde_json::to_value(value).expect("output types serialize to JSON")
}

fn read_json<T: DeserializeOwned>(file: &FsPath) -> Result<T, Failure> {
    let text = fs::read_to_string(file).map_err(|e| {
        Failure::input(
            "io",
            format!("cannot read {}: {e}", file.display()),
            json!({"file": file.display().to_string()}),
        )
    })?;
    serde_json::from_str(&text).map_err(|e| {
        Failure::input(
            "parse",
            format!("{}: {e}", file.display()),
            json!({"file": file.display().to_string()}),
        )
    })
}

fn load_topology(file: &FsPath) -> Result<Topology, Failure> {
    let raw: TopologyFile = read_json(file)?;
    build_topology(&raw.hosts, &raw.switches, &raw.links)
        .map_err(|e| Failure::input("invalid_topology", e.to_string(), to_value(&e.violations)))
}

fn to_paths(raw: Vec<Vec<NodeId>>, file: &FsPath) -> Result<Vec<Path>, Failure> {
    raw.into_iter()
        .enumerate()
        .map(|(index, nodes)| {
            Path::new(nodes).map_err(|e| {
                Failure::input(
                    "invalid_paths",
                    format!("{}: path {index}: {e}", file.display()),
                    json!({"file": file.display().to_string(), "index": index}),
                )
            })
        })
        .collect()
}

fn load_paths(file: &FsPath) -> Result<PathSet, Failure> {
    let raw: PathSetFile = read_json(file)?;
    Ok(PathSet::from_paths(
        raw.traffic_type,
        to_paths(raw.paths, file)?,
    ))
}

struct Context {
    budget: Option<usize>,
    require_edge_simple: bool,
    warnings: Vec<Value>,
}

impl Context {
    fn path_budget(&self) -> usize {
        self.budget.unwrap_or(DEFAULT_PATH_BUDGET)
    }

    /// Rejects invalid sets and records collapsed duplicates as warnings.
    fn checked(&mut self, p: &PathSet, t: &Topology) -> Result<(), Failure> {
        let report = validate_path_set(p, t, self.require_edge_simple);
        if !report.is_valid() {
            return Err(Failure::input(
                "invalid_paths",
                format!(
                    "{} of {} paths of {} are invalid",
                    report.invalid_paths.len(),
                    p.len(),
                    p.traffic_type()
                ),
                to_value(&report),
            ));
        }
        if !report.collapsed_duplicates.is_empty() {
            self.warnings.push(json!({
                "warning": "duplicate_paths",
                "traffic_type": p.traffic_type(),
                "collapsed": report.collapsed_duplicates,
            }));
        }
        Ok(())
    }
}

fn validate_summary(r: &ValidationReport, total: usize) -> String {
    if r.is_valid() {
        format!("{}: valid ({total} paths)", r.traffic_type)
    } else {
        format!(
            "{}: invalid ({} of {total} paths)",
            r.traffic_type,
            r.invalid_paths.len()
        )
    }
}

fn cycle_text(cycle: &[crate::topology::DirectedArc]) -> String {
    let arcs: Vec<String> = cycle.iter().map(ToString::to_string).collect();
    arcs.join(" -> ")
}

fn status_code(status: ClosureStatus) -> i32 {
    match status {
        ClosureStatus::ArcClosed => EXIT_OK,
        ClosureStatus::FiniteSuperset => EXIT_SUPERSET,
        ClosureStatus::InfiniteClosure => EXIT_LOOP,
    }
}

#[derive(Serialize)]
struct CheckReport<'a> {
    traffic_type: &'a str,
    #[serde(flatten)]
    verdict: &'a Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    reinduced: Option<&'a [Path]>,
}

fn check_one(
    ctx: &mut Context,
    t: &Topology,
    p: &PathSet,
    update: Option<&(PathSet, PathSet)>,
) -> Result<Item, Failure> {
    ctx.checked(p, t)?;
    let (target, verdict, reinduced) = match update {
        Some((add, remove)) => {
            let add = add.relabeled(p.traffic_type());
            ctx.checked(&add, t)?;
            let u = check_update(p, &add, remove, ctx.path_budget())?;
            (p.updated(&add, remove), u.verdict, Some(u.reinduced))
        }
        None => (p.clone(), check_arc_closed(p, ctx.path_budget())?, None),
    };
    let mut summary = format!("{}: {}", p.traffic_type(), verdict.status);
    match verdict.status {
        ClosureStatus::ArcClosed => summary.push_str(&format!(" ({} paths)", target.len())),
        ClosureStatus::FiniteSuperset => {
            summary.push_str(&format!(", {} extra paths", verdict.extra_paths.len()))
        }
        ClosureStatus::InfiniteClosure => {
            summary.push_str(&format!(", cycle {}", cycle_text(&verdict.cycle)))
        }
    }
    if let Some(r) = &reinduced {
        summary.push_str(&format!(", {} removed paths re-induced", r.len()));
    }
    let report = CheckReport {
        traffic_type: p.traffic_type(),
        verdict: &verdict,
        reinduced: reinduced.as_deref(),
    };
    let mut item = Item::new(status_code(verdict.status), &report, summary);
    let d = build_closure_graph(&target);
    item.dot = Some(closure_graph_dot(&d, find_cycle(&d).as_deref()));
    Ok(item)
}

#[derive(Serialize)]
struct InfiniteReport<'a> {
    traffic_type: &'a str,
    status: ClosureStatus,
    cycle: &'a [crate::topology::DirectedArc],
}

fn closure_one(ctx: &mut Context, t: &Topology, p: &PathSet) -> Result<Item, Failure> {
    ctx.checked(p, t)?;
    Ok(match closure::arc_closure(p, ctx.path_budget())? {
        Closure::Finite(paths) => {
            let summary = format!(
                "{}: finite closure of {} paths",
                p.traffic_type(),
                paths.len()
            );
            Item::new(
                EXIT_OK,
                &json!({"traffic_type": p.traffic_type(), "paths": paths}),
                summary,
            )
        }
        Closure::Infinite { cycle } => {
            let summary = format!(
                "{}: infinite closure, cycle {}",
                p.traffic_type(),
                cycle_text(&cycle)
            );
            let report = InfiniteReport {
                traffic_type: p.traffic_type(),
                status: ClosureStatus::InfiniteClosure,
                cycle: &cycle,
            };
            Item::new(EXIT_LOOP, &report, summary)
        }
    })
}

#[derive(Serialize)]
struct SimulationReport<'a> {
    #[serde(skip_serializing_if = "Option::is_none")]
    traffic_type: Option<&'a str>,
    injections: &'a [Injection],
}

fn simulate_one(
    ctx: &Context,
    t: &Topology,
    c: &Configuration,
    label: Option<&str>,
    hosts: &[NodeId],
) -> Result<Item, Failure> {
    let budget = ctx.budget.unwrap_or(DEFAULT_WALK_BUDGET);
    let injections = hosts
        .iter()
        .map(|h| simulate_injection_with_budget(c, h, t, budget))
        .collect::<Result<Vec<_>, _>>()?;
    let looped = injections.iter().any(|i| i.loop_detected);
    let summary = injections
        .iter()
        .map(|i| {
            format!(
                "{}{}: delivered {}, dropped {}, loop {}",
                label.map(|l| format!("{l} ")).unwrap_or_default(),
                i.host,
                i.delivered.len(),
                i.dropped,
                if i.loop_detected { "yes" } else { "no" }
            )
        })
        .collect::<Vec<_>>()
        .join("\n");
    let report = SimulationReport {
        traffic_type: label,
        injections: &injections,
    };
    Ok(Item::new(
        if looped { EXIT_LOOP } else { EXIT_OK },
        &report,
        summary,
    ))
}

fn repair_one(
    ctx: &mut Context,
    t: &Topology,
    p: &PathSet,
    strategy: Strategy,
    try_rotations: bool,
    exact_threshold: usize,
) -> Result<Item, Failure> {
    ctx.checked(p, t)?;
    let outcome: RepairOutcome = match strategy {
        Strategy::Subset => subset_repair(p, exact_threshold),
        Strategy::Superset => superset_repair(p, ctx.path_budget())?,
        Strategy::Reroute => reroute_repair_with(p, t, RerouteOptions { try_rotations })?,
    };
    let summary = format!(
        "{}: {} paths after repair, {} removed, {} added, {} links consumed",
        p.traffic_type(),
        outcome.paths.len(),
        outcome.removed_paths.len(),
        outcome.added_paths.len(),
        outcome.consumed_links.len()
    );
    Ok(Item::new(EXIT_OK, &outcome, summary))
}

fn dispatch(cli: Cli, ctx: &mut Context) -> Result<Vec<Item>, Failure> {
    let dot_allowed = matches!(
        cli.command,
        Command::Check { .. } | Command::ExportDot { .. }
    );
    if cli.format == Format::Dot && !dot_allowed {
        return Err(Failure::input(
            "usage",
            "--format dot is only available for check and export-dot",
            Value::Null,
        ));
    }
    match cli.command {
        Command::Validate(inputs) => {
            let t = load_topology(&inputs.topology)?;
            let mut items = Vec::new();
            for file in &inputs.paths {
                let p = load_paths(file)?;
                let report = validate_path_set(&p, &t, ctx.require_edge_simple);
                let code = if report.is_valid() {
                    EXIT_OK
                } else {
                    EXIT_INPUT
                };
                items.push(Item::new(code, &report, validate_summary(&report, p.len())));
            }
            Ok(items)
        }
        Command::Rules(inputs) => {
            let t = load_topology(&inputs.topology)?;
            let mut items = Vec::new();
            for file in &inputs.paths {
                let p = load_paths(file)?;
                ctx.checked(&p, &t)?;
                let c = derive_rules(&p);
                let summary = format!("{}: {} rules", p.traffic_type(), c.len());
                items.push(Item::new(EXIT_OK, &c, summary));
            }
            Ok(items)
        }
        Command::Check { inputs, update } => {
            let t = load_topology(&inputs.topology)?;
            let update = match update {
                Some(file) => {
                    let raw: UpdateFile = read_json(&file)?;
                    let add = PathSet::from_paths("", to_paths(raw.add, &file)?);
                    let remove = PathSet::from_paths("", to_paths(raw.remove, &file)?);
                    Some((add, remove))
                }
                None => None,
            };
            let mut items = Vec::new();
            for file in &inputs.paths {
                let p = load_paths(file)?;
                items.push(check_one(ctx, &t, &p, update.as_ref())?);
            }
            Ok(items)
        }
        Command::Closure(inputs) => {
            let t = load_topology(&inputs.topology)?;
            let mut items = Vec::new();
            for file in &inputs.paths {
                let p = load_paths(file)?;
                items.push(closure_one(ctx, &t, &p)?);
            }
            Ok(items)
        }
        Command::Simulate {
            topology,
            paths,
            rules,
            hosts,
        } => {
            let t = load_topology(&topology)?;
            let hosts: Vec<NodeId> = if hosts.is_empty() {
                t.hosts().cloned().collect()
            } else {
                hosts
                    .iter()
                    .map(|h| {
                        NodeId::new(h).map_err(|e| {
                            Failure::input("usage", format!("--host {h:?}: {e}"), Value::Null)
                        })
                    })
                    .collect::<Result<_, _>>()?
            };
            let mut items = Vec::new();
            if let Some(file) = rules {
                let c: Configuration = read_json(&file)?;
                items.push(simulate_one(ctx, &t, &c, None, &hosts)?);
            }
            for file in &paths {
                let p = load_paths(file)?;
                ctx.checked(&p, &t)?;
                items.push(simulate_one(
                    ctx,
                    &t,
                    &derive_rules(&p),
                    Some(p.traffic_type()),
                    &hosts,
                )?);
            }
            Ok(items)
        }
        Command::Repair {
            inputs,
            strategy,
            try_rotations,
            exact_threshold,
        } => {
            let t = load_topology(&inputs.topology)?;
            let mut items = Vec::new();
            for file in &inputs.paths {
                let p = load_paths(file)?;
                items.push(repair_one(
                    ctx,
                    &t,
                    &p,
                    strategy,
                    try_rotations,
                    exact_threshold,
                )?);
            }
            Ok(items)
        }
        Command::ExportDot { topology, paths } => {
            let t = load_topology(&topology)?;
            let dot = match paths {
                Some(file) => {
                    let p = load_paths(&file)?;
                    ctx.checked(&p, &t)?;
                    let d = build_closure_graph(&p);
                    closure_graph_dot(&d, find_cycle(&d).as_deref())
                }
                None => topology_dot(&t),
            };
            Ok(vec![Item {
                code: EXIT_OK,
                json: Value::Null,
                summary: String::new(),
                dot: Some(dot),
            }])
        }
    }
}

fn render(items: &[Item], format: Format, always_dot: bool) -> String {
    if format == Format::Dot || always_dot {
        return items.iter().filter_map(|i| i.dot.as_deref()).collect();
    }
    match format {
        Format::Summary => items.iter().map(|i| format!("{}\n", i.summary)).collect(),
        _ => {
            let value = match items {
                [one] => one.json.clone(),
                many => Value::Array(many.iter().map(|i| i.json.clone()).collect()),
            };
            let mut text = serde_json::to_string_pretty(&value).expect("JSON values serialize");
            text.push('\n');
            text
        }
    }
}

/// Runs the command line `args` (including the program name) without
/// touching the process's own streams.
pub fn run<I, T>(args: I) -> Output
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => Output {
                    code: EXIT_OK,
                    stdout: e.render().to_string(),
                    stderr: String::new(),
                },
                _ => Output {
                    code: EXIT_INPUT,
                    stdout: String::new(),
                    stderr: Failure::input("usage", e.render().to_string().trim_end(), Value::Null)
                        .render(),
                },
            };
        }
    };

    let format = cli.format;
    let always_dot = matches!(cli.command, Command::ExportDot { .. });
    let mut ctx = Context {
        budget: cli.budget,
        require_edge_simple: !cli.allow_non_edge_simple,
        warnings: Vec::new(),
    };
    let result = dispatch(cli, &mut ctx);
    let mut stderr: String = ctx.warnings.iter().map(|w| format!("{w}\n")).collect();
    match result {
        Ok(items) => Output {
            code: items.iter().map(|i| i.code).max().unwrap_or(EXIT_OK),
            stdout: render(&items, format, always_dot),
            stderr,
        },
        Err(failure) => {
            stderr.push_str(&failure.render());
            Output {
                code: failure.code,
                stdout: String::new(),
                stderr,
            }
        }
    }
}
