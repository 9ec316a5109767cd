use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use couplink::config::RunConfig;
use couplink::cost::{check_constraints, total_cost, EvalContext, LinkSet};
use couplink::device::{
    generate_topology, parse_device_with_warnings, serialize_device, ChipGraph, TopologyKind,
    TopologyOpts,
};
use couplink::error::Error;
use couplink::optimize::{
    exhaustive_select, greedy_select, AnnealSchedule, SolveResult,
};
use couplink::route::{compare_placements, random_circuit, Circuit, PlacementEntry};
use couplink::ttf::build_cost_matrix;
use couplink::Result;

/// Inter-chip coupler placement: generate device topologies, optimize link
/// placements against the five-term cost model, and validate them by
/// routing random circuits.
#[derive(Parser)]
#[command(name = "couplink", version, disable_help_subcommand = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a canonical topology and write it as a device document.
    Generate(GenerateArgs),
    /// Select coupler links for a chain of devices.
    Optimize(OptimizeArgs),
    /// Evaluate the cost breakdown of an explicit link set.
    Evaluate(EvaluateArgs),
    /// Route a random-circuit suite over one or more placements.
    Validate(ValidateArgs),
    /// Render an optimize/validate output file as CSV or a table.
    Report(ReportArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// line, ring, grid, star, complete, or heavy_hex
    #[arg(long)]
    kind: String,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    rows: Option<usize>,
    #[arg(long)]
    cols: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    pitch_um: f64,
    #[arg(long, default_value_t = 100.0)]
    gate_time_ns: f64,
    #[arg(long, default_value_t = 0.01)]
    gate_error: f64,
    #[arg(long, default_value_t = 100_000.0)]
    t1_ns: f64,
    #[arg(long, default_value_t = 100_000.0)]
    t2_ns: f64,
    #[arg(long, default_value_t = 0.01)]
    readout_error: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OptimizeArgs {
    /// Device documents, in chain order (at least two).
    #[arg(long = "device", required = true, num_args = 1..)]
    devices: Vec<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Links per adjacent chip pair.
    #[arg(long)]
    k: usize,
    #[arg(long)]
    seed: u64,
    /// Exhaustive enumeration instead of greedy+anneal.
    #[arg(long)]
    exact: bool,
    /// Skip the annealing refinement.
    #[arg(long)]
    no_anneal: bool,
    /// Strict device parsing (unknown keys are errors).
    #[arg(long)]
    strict: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long = "device", required = true, num_args = 1..)]
    devices: Vec<PathBuf>,
    /// Explicit links, e.g. "2:0,1:1"; '/'-separated per chip pair.
    #[arg(long)]
    links: String,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    strict: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long = "device", required = true, num_args = 1..)]
    devices: Vec<PathBuf>,
    /// Explicit placement, e.g. "2:0,1:1"; '/'-separated per chip pair.
    /// Repeat for multiple placements.
    #[arg(long = "links")]
    links: Vec<String>,
    /// Placement from an optimize output file. Repeatable.
    #[arg(long = "solve")]
    solves: Vec<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    circuits: usize,
    #[arg(long)]
    qubits: Option<usize>,
    #[arg(long, default_value_t = 10)]
    depth: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value = "json")]
    format: String,
    #[arg(long)]
    strict: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "csv")]
    format: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load_config(path: &Option<PathBuf>) -> Result<RunConfig> {
    match path {
        Some(p) => RunConfig::from_json(&fs::read_to_string(p)?),
        None => Ok(RunConfig::default()),
    }
}

fn load_devices(paths: &[PathBuf], strict: bool) -> Result<Vec<ChipGraph>> {
    paths
        .iter()
        .map(|p| {
            let (chip, warnings) = parse_device_with_warnings(&fs::read_to_string(p)?, strict)?;
            for w in warnings {
                eprintln!("warning: {}: {w}", p.display());
            }
            Ok(chip)
        })
        .collect()
}

fn parse_pair_list(text: &str) -> Result<Vec<(u32, u32)>> {
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            let (u, v) = s
                .trim()
                .split_once(':')
                .ok_or_else(|| Error::Parse(format!("bad link '{s}', expected u:v")))?;
            Ok((
                u.parse().map_err(|_| Error::Parse(format!("bad qubit id '{u}'")))?,
                v.parse().map_err(|_| Error::Parse(format!("bad qubit id '{v}'")))?,
            ))
        })
        .collect()
}

/// One placement spec covering every adjacent pair of the chain.
fn parse_placement(text: &str, chips: &[ChipGraph]) -> Result<Vec<LinkSet>> {
    let parts: Vec<&str> = text.split('/').collect();
    if parts.len() != chips.len() - 1 {
        return Err(Error::Parse(format!(
            "placement has {} pair lists but the chain has {} adjacent pairs",
            parts.len(),
            chips.len() - 1
        )));
    }
    parts
        .iter()
        .enumerate()
        .map(|(i, part)| LinkSet::new(&chips[i], &chips[i + 1], parse_pair_list(part)?))
        .collect()
}

fn write_output(out: &Option<PathBuf>, content: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, content)?,
        None => print!("{content}"),
    }
    Ok(())
}

fn breakdown_table(bd: &couplink::cost::CostBreakdown) -> String {
    format!(
        "term        value\n\
         path        {:.6}\n\
         effective   {:.6}\n\
         congestion  {:.6}\n\
         overload    {:.6}\n\
         sparsity    {:.6}\n\
         total       {:.6}\n\
         (exact congestion {:.6}, feasible: {})\n",
        bd.path, bd.effective, bd.congestion, bd.overload, bd.sparsity, bd.total,
        bd.congestion_exact, bd.feasible
    )
}

fn cmd_generate(args: GenerateArgs) -> Result<()> {
    let kind: TopologyKind = args.kind.parse()?;
    let opts = TopologyOpts {
        rows: args.rows,
        cols: args.cols,
        pitch_um: args.pitch_um,
        t1_ns: args.t1_ns,
        t2_ns: args.t2_ns,
        readout_error: args.readout_error,
        gate_time_ns: args.gate_time_ns,
        gate_error: args.gate_error,
    };
    let chip = generate_topology(kind, args.n, &opts)?;
    write_output(&args.out, &serialize_device(&chip))
}

fn solve_chain(
    chips: &[ChipGraph],
    cfg: &RunConfig,
    k: usize,
    seed: u64,
    exact: bool,
    no_anneal: bool,
) -> Result<Vec<SolveResult>> {
    let mut results = Vec::with_capacity(chips.len() - 1);
    for i in 0..chips.len() - 1 {
        let matrix = build_cost_matrix(&chips[i], &chips[i + 1], &cfg.coupler, &cfg.ttf, None)?;
        let ctx = EvalContext::new(&chips[i], &chips[i + 1], &matrix, cfg.weights, cfg.constraints)?;
        let pair_seed = seed.wrapping_add(i as u64);
        let result = if exact {
            exhaustive_select(&ctx, k, None)?
        } else if no_anneal {
            greedy_select(&ctx, k)?
        } else {
            let greedy = greedy_select(&ctx, k)?;
            let schedule = AnnealSchedule {
                initial_temperature: cfg
                    .anneal
                    .initial_temperature
                    .unwrap_or((greedy.breakdown.total * 0.1).max(1e-9)),
                cooling_factor: cfg.anneal.cooling_factor,
                iterations: cfg.anneal.iterations_per_link * k as u32,
                seed: pair_seed,
            };
            couplink::optimize::anneal_refine(&ctx, &greedy.links, &schedule)?
        };
        results.push(result);
    }
    Ok(results)
}

fn cmd_optimize(args: OptimizeArgs) -> Result<()> {
    if args.devices.len() < 2 {
        return Err(Error::Parse("optimize needs at least two devices".into()));
    }
    let cfg = load_config(&args.config)?;
    let chips = load_devices(&args.devices, args.strict)?;
    let results = solve_chain(&chips, &cfg, args.k, args.seed, args.exact, args.no_anneal)?;
    for (i, r) in results.iter().enumerate() {
        eprintln!(
            "pair {} ({} -> {}): method {:?}, links {:?}",
            i,
            chips[i].name(),
            chips[i + 1].name(),
            r.method,
            r.links.pairs
        );
        eprint!("{}", breakdown_table(&r.breakdown));
    }
    let doc = serde_json::json!({
        "config": cfg,
        "results": results.iter().map(|r| r.to_json()).collect::<Vec<_>>(),
    });
    write_output(&args.out, &format!("{}\n", serde_json::to_string_pretty(&doc).unwrap()))
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<()> {
    if args.devices.len() < 2 {
        return Err(Error::Parse("evaluate needs at least two devices".into()));
    }
    let cfg = load_config(&args.config)?;
    let chips = load_devices(&args.devices, args.strict)?;
    let link_sets = parse_placement(&args.links, &chips)?;
    let mut breakdowns = Vec::new();
    for (i, set) in link_sets.iter().enumerate() {
        let matrix = build_cost_matrix(&chips[i], &chips[i + 1], &cfg.coupler, &cfg.ttf, None)?;
        let ctx = EvalContext::new(&chips[i], &chips[i + 1], &matrix, cfg.weights, cfg.constraints)?;
        let bd = total_cost(set, &ctx)?;
        check_constraints(set, &cfg.constraints, &chips[i], &chips[i + 1])?;
        eprint!("{}", breakdown_table(&bd));
        breakdowns.push(bd);
    }
    let doc = serde_json::json!({
        "config": cfg,
        "breakdowns": breakdowns,
    });
    write_output(&args.out, &format!("{}\n", serde_json::to_string_pretty(&doc).unwrap()))
}

fn links_from_solve_file(path: &PathBuf, chips: &[ChipGraph]) -> Result<Vec<LinkSet>> {
    let value: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(path)?).map_err(|e| Error::Parse(e.to_string()))?;
    let results = value
        .get("results")
        .and_then(|v| v.as_array())
        .ok_or_else(|| Error::Parse(format!("{}: missing 'results'", path.display())))?;
    if results.len() != chips.len() - 1 {
        return Err(Error::Parse(format!(
            "{}: {} results but the chain has {} adjacent pairs",
            path.display(),
            results.len(),
            chips.len() - 1
        )));
    }
    results
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let pairs: Vec<(u32, u32)> = serde_json::from_value(
                r.get("links")
                    .cloned()
                    .ok_or_else(|| Error::Parse(format!("{}: missing 'links'", path.display())))?,
            )
            .map_err(|e| Error::Parse(e.to_string()))?;
            LinkSet::new(&chips[i], &chips[i + 1], pairs)
        })
        .collect()
}

fn cmd_validate(args: ValidateArgs) -> Result<()> {
    if args.devices.len() < 2 {
        return Err(Error::Parse("validate needs at least two devices".into()));
    }
    let cfg = load_config(&args.config)?;
    let chips = load_devices(&args.devices, args.strict)?;
    let specs = vec![cfg.coupler; chips.len() - 1];

    let mut entries = Vec::new();
    let mut placements: Vec<(String, Vec<LinkSet>)> = Vec::new();
    for (i, text) in args.links.iter().enumerate() {
        placements.push((format!("links-{i}"), parse_placement(text, &chips)?));
    }
    for path in &args.solves {
        let label = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        placements.push((label, links_from_solve_file(path, &chips)?));
    }
    if placements.is_empty() {
        return Err(Error::Parse("validate needs at least one --links or --solve".into()));
    }
    for (label, link_sets) in placements {
        let mut cost = 0.0;
        for (i, set) in link_sets.iter().enumerate() {
            let matrix = build_cost_matrix(&chips[i], &chips[i + 1], &cfg.coupler, &cfg.ttf, None)?;
            let ctx =
                EvalContext::new(&chips[i], &chips[i + 1], &matrix, cfg.weights, cfg.constraints)?;
            cost += total_cost(set, &ctx)?.total;
        }
        entries.push(PlacementEntry {
            label,
            link_sets,
            cost,
        });
    }

    let total_qubits: usize = chips.iter().map(|c| c.len()).sum();
    let qubits = args.qubits.unwrap_or(total_qubits);
    let suite: Vec<Circuit> = (0..args.circuits)
        .map(|i| random_circuit(qubits, args.depth, args.seed.wrapping_add(i as u64)))
        .collect();

    let report = compare_placements(&chips, &specs, &entries, &suite)?;
    let content = match args.format.as_str() {
        "csv" => report.to_csv(),
        "json" => {
            let doc = serde_json::json!({ "config": cfg, "report": report });
            format!("{}\n", serde_json::to_string_pretty(&doc).unwrap())
        }
        other => return Err(Error::Parse(format!("unknown format '{other}'"))),
    };
    write_output(&args.out, &content)
}

fn cmd_report(args: ReportArgs) -> Result<()> {
    let value: serde_json::Value = serde_json::from_str(&fs::read_to_string(&args.input)?)
        .map_err(|e| Error::Parse(e.to_string()))?;
    let content = if let Some(report) = value.get("report") {
        // validate output
        let report: couplink::route::ComparisonReport =
            serde_json::from_value(report.clone()).map_err(|e| Error::Parse(e.to_string()))?;
        match args.format.as_str() {
            "csv" => report.to_csv(),
            "json" => format!("{}\n", serde_json::to_string_pretty(&report).unwrap()),
            other => return Err(Error::Parse(format!("unknown format '{other}'"))),
        }
    } else if let Some(results) = value.get("results").and_then(|v| v.as_array()) {
        // optimize output
        let mut out = String::from("pair,method,links,total_cost\n");
        for (i, r) in results.iter().enumerate() {
            use std::fmt::Write as _;
            let method = r.get("method").and_then(|m| m.as_str()).unwrap_or("?");
            let links = r.get("links").map(|l| l.to_string()).unwrap_or_default();
            let total = r
                .get("cost")
                .and_then(|c| c.get("total"))
                .and_then(|t| t.as_f64())
                .unwrap_or(f64::NAN);
            let _ = writeln!(out, "{i},{method},\"{links}\",{total}");
        }
        out
    } else {
        return Err(Error::Parse("unrecognized input document".into()));
    };
    write_output(&args.out, &content)
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Parse(_) | Error::Validation { .. } => 1,
        Error::Infeasible(_) | Error::Disconnected(_) | Error::EnumerationCap { .. } | Error::Domain(_) => 2,
        Error::Io(_) => 3,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version requests are successes, anything else is usage error
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Generate(args) => cmd_generate(args),
        Command::Optimize(args) => cmd_optimize(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Validate(args) => cmd_validate(args),
        Command::Report(args) => cmd_report(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
