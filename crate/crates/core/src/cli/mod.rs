//! The `imc-dse` command-line front end.

pub mod report;

use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::accoracle::oracle_from_descriptor;
use crate::error::{Error, Result};
use crate::hwmodel::{network_cost, replication_instance, HwConfig};
use crate::mpsearch::{run_search, SearchConfig, SearchTrace, BASELINE_BITS};
use crate::netgraph::{builtin_benchmark, parse_network, NetworkGraph, BENCHMARK_NAMES};
use crate::policy::QuantPolicy;
use crate::replicate::{self, brute_force, optimize_milp, Objective, ReplicationPlan};

pub use report::{Report, ReportRow, Summary, TOTAL_LABEL};

#[derive(Debug, Parser)]
#[command(name = "imc-dse", version, about = "Design-space exploration for spatial in-memory-computing accelerators")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Per-layer tiles, latency, throughput and energy of a fixed design.
    Estimate(EstimateArgs),
    /// Spend a tile budget on layer replication.
    Replicate(ReplicateArgs),
    /// Mixed-precision search with per-episode replication.
    Search(SearchArgs),
    /// Improvement vs tile budget for quantization-only, replication-only and joint designs.
    Ablate(AblateArgs),
}

#[derive(Debug, Args)]
pub struct DesignArgs {
    /// Network JSON file or builtin benchmark name.
    #[arg(long)]
    pub network: String,
    /// Hardware TOML file; defaults to the builtin accelerator.
    #[arg(long)]
    pub hw: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub design: DesignArgs,
    /// Policy JSON file or `uniform:<bits>`.
    #[arg(long, default_value = "uniform:8")]
    pub policy: String,
    /// Report path; `.json` writes JSON, anything else CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Solver {
    /// Exact combinatorial optimizer for the objective.
    Exact,
    /// Branch-and-bound integer program.
    Milp,
    /// Exhaustive enumeration; small instances only.
    Brute,
}

#[derive(Debug, Args)]
pub struct ReplicateArgs {
    #[command(flatten)]
    pub design: DesignArgs,
    /// Policy JSON file or `uniform:<bits>`.
    #[arg(long, default_value = "uniform:8")]
    pub policy: String,
    /// `latency` (sum over layers) or `throughput` (slowest layer).
    #[arg(long, default_value = "latency")]
    pub objective: Objective,
    /// Tile budget as a multiple of the unreplicated design's tiles.
    #[arg(long, default_value_t = 1.0)]
    pub budget_ratio: f64,
    #[arg(long, value_enum, default_value = "exact")]
    pub solver: Solver,
    /// Report path; `.json` writes JSON, anything else CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SearchOverrides {
    /// Search TOML file; flags below override its values.
    #[arg(long)]
    pub search_config: Option<PathBuf>,
    /// RNG seed; equal seeds give identical traces.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub episodes: Option<usize>,
    /// `latency` or `throughput`.
    #[arg(long)]
    pub objective: Option<Objective>,
    /// `proxy` or `external:<command>`.
    #[arg(long, default_value = "proxy")]
    pub oracle: String,
    /// Per-request timeout of an external oracle, in seconds.
    #[arg(long, default_value_t = 600.0)]
    pub oracle_timeout: f64,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    #[command(flatten)]
    pub design: DesignArgs,
    #[command(flatten)]
    pub search: SearchOverrides,
    /// Tile budget as a multiple of the uniform 8-bit design's tiles.
    #[arg(long)]
    pub budget_ratio: Option<f64>,
    /// Trace path (one JSON record per episode).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Report path for the best design.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Write the best policy as JSON here.
    #[arg(long)]
    pub policy_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum AblationMode {
    QuantOnly,
    ReplOnly,
    Joint,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    #[command(flatten)]
    pub design: DesignArgs,
    #[command(flatten)]
    pub search: SearchOverrides,
    /// Tile budgets as multiples of the uniform 8-bit design's tiles.
    #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
    pub ratios: Vec<f64>,
    /// Design modes to evaluate at every ratio.
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [AblationMode::QuantOnly, AblationMode::ReplOnly, AblationMode::Joint])]
    pub modes: Vec<AblationMode>,
    /// CSV output path.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path.display().to_string(), e))
}

/// A builtin benchmark name or a path to a network JSON file.
pub fn load_network(source: &str) -> Result<NetworkGraph> {
    if BENCHMARK_NAMES.contains(&source) {
        return Ok(builtin_benchmark(source)?);
    }
    let path = Path::new(source);
    if !path.exists() {
        // unknown names get the list of builtins in the message
        return Err(builtin_benchmark(source).unwrap_err().into());
    }
    parse_network(&read(path)?).map_err(|e| Error::in_file(source, e))
}

pub fn load_hw(path: Option<&Path>) -> Result<HwConfig> {
    match path {
        None => Ok(HwConfig::default()),
        Some(p) => HwConfig::from_toml_str(&read(p)?).map_err(|e| Error::in_file(p.display().to_string(), e)),
    }
}

pub fn load_policy(source: &str, net: &NetworkGraph) -> Result<QuantPolicy> {
    let policy = if source.trim_start().starts_with("uniform:") {
        QuantPolicy::parse(source, net)?
    } else {
        QuantPolicy::parse(&read(Path::new(source))?, net).map_err(|e| Error::in_file(source, e))?
    };
    policy.validate(net, 1, 32)?;
    Ok(policy)
}

fn load_search_config(o: &SearchOverrides) -> Result<SearchConfig> {
    let mut cfg = match &o.search_config {
        None => SearchConfig::default(),
        Some(p) => SearchConfig::from_toml_str(&read(p)?).map_err(|e| Error::in_file(p.display().to_string(), e))?,
    };
    if let Some(s) = o.seed {
        cfg.seed = s;
    }
    if let Some(e) = o.episodes {
        cfg.episodes = e;
    }
    if let Some(obj) = o.objective {
        cfg.objective = obj;
    }
    Ok(cfg)
}

fn check_ratio(ratio: f64) -> Result<()> {
    if ratio.is_finite() && ratio > 0.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("budget ratio must be positive, got {ratio}")))
    }
}

fn emit_report(report: &Report, out: Option<&Path>) -> Result<()> {
    print!("{}", report.table());
    if let Some(path) = out {
        let text = if path.extension().is_some_and(|e| e == "json") { report.to_json() } else { report.to_csv()? };
        write(path, &text)?;
    }
    Ok(())
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Estimate(a) => estimate(&a),
        Command::Replicate(a) => replicate_cmd(&a),
        Command::Search(a) => search_cmd(&a),
        Command::Ablate(a) => ablate(&a),
    }
}

fn estimate(a: &EstimateArgs) -> Result<()> {
    let net = load_network(&a.design.network)?;
    let cfg = load_hw(a.design.hw.as_deref())?;
    let policy = load_policy(&a.policy, &net)?;
    let cost = network_cost(&net, &policy, None, &cfg)?;
    if cost.tiles_used > cfg.n_tiles_total {
        eprintln!("warning: design needs {} tiles, the chip has {}", cost.tiles_used, cfg.n_tiles_total);
    }
    emit_report(&Report::new(&net, &policy, &cost, &cfg), a.out.as_deref())
}

/// Tile budget `floor(base * ratio)`.
pub fn tile_budget(base_tiles: u64, ratio: f64) -> u64 {
    (base_tiles as f64 * ratio).floor() as u64
}

/// Replicates `policy` under `ratio` times its own tile count and builds the report.
pub fn replicate_design(
    net: &NetworkGraph,
    policy: &QuantPolicy,
    cfg: &HwConfig,
    objective: Objective,
    ratio: f64,
    solver: Solver,
) -> Result<(ReplicationPlan, Report)> {
    check_ratio(ratio)?;
    let probe = replication_instance(net, policy, cfg, u64::MAX)?;
    let budget = tile_budget(probe.base_tiles(), ratio);
    let inst = replication_instance(net, policy, cfg, budget)?;
    let plan = match solver {
        Solver::Exact => replicate::optimize(&inst, objective)?,
        Solver::Milp => optimize_milp(&inst, objective)?,
        Solver::Brute => brute_force(&inst, objective)?,
    };
    let cost = network_cost(net, policy, Some(&plan), cfg)?;
    let report = Report::new(net, policy, &cost, cfg).with_comparison(objective, budget);
    Ok((plan, report))
}

fn replicate_cmd(a: &ReplicateArgs) -> Result<()> {
    let net = load_network(&a.design.network)?;
    let cfg = load_hw(a.design.hw.as_deref())?;
    let policy = load_policy(&a.policy, &net)?;
    let (plan, report) = replicate_design(&net, &policy, &cfg, a.objective, a.budget_ratio, a.solver)?;
    println!("replication    {:?}", plan.r);
    emit_report(&report, a.out.as_deref())
}

fn search_with(net: &NetworkGraph, cfg: &HwConfig, scfg: &SearchConfig, o: &SearchOverrides) -> Result<SearchTrace> {
    if !(o.oracle_timeout.is_finite() && o.oracle_timeout > 0.0) {
        return Err(Error::Config("oracle timeout must be positive".into()));
    }
    let mut oracle = oracle_from_descriptor(&o.oracle, net, Duration::from_secs_f64(o.oracle_timeout))?;
    run_search(net, cfg, scfg, oracle.as_mut())
}

fn search_cmd(a: &SearchArgs) -> Result<()> {
    let net = load_network(&a.design.network)?;
    let cfg = load_hw(a.design.hw.as_deref())?;
    let mut scfg = load_search_config(&a.search)?;
    if let Some(r) = a.budget_ratio {
        check_ratio(r)?;
        scfg.tile_budget_ratio = r;
    }
    let trace = search_with(&net, &cfg, &scfg, &a.search)?;
    if let Some(path) = &a.out {
        let f = std::fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        trace.write_jsonl(std::io::BufWriter::new(f)).map_err(|e| Error::io(path.display().to_string(), e))?;
    }

    let failed = trace.records.iter().filter(|r| !r.succeeded()).count();
    println!("episodes       {} ({failed} failed)", trace.records.len());
    println!("tile budget    {}", trace.tile_budget);
    println!("baseline acc   {:.6}", trace.baseline_accuracy);
    let (Some(best), Some(policy), Some(plan)) = (trace.best_record(), trace.best_policy(), trace.best_plan()) else {
        println!("no episode met its budget");
        return Ok(());
    };
    let cost = network_cost(&net, &policy, Some(&plan), &cfg)?;
    let lat_gain = trace.baseline_latency_s / cost.latency_s();
    let bot_gain = trace.baseline_bottleneck_s / cost.bottleneck_s();
    println!("best episode   {}", best.episode);
    println!("accuracy       {:.6}", best.accuracy.unwrap_or(f64::NAN));
    println!("reward         {:.6}", best.reward.unwrap_or(f64::NAN));
    println!("latency gain   {lat_gain:.4}x");
    println!("bottleneck gain {bot_gain:.4}x");
    println!("replication    {:?}", plan.r);
    if let Some(path) = &a.policy_out {
        write(path, &policy.to_json(&net))?;
    }
    emit_report(&Report::new(&net, &policy, &cost, &cfg), a.report.as_deref())
}

/// One cell of the ablation grid. The baseline is uniform 8-bit with one copy
/// per layer; `improvement` is `baseline_metric_s / metric_s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub mode: AblationMode,
    pub ratio: f64,
    pub tile_budget: u64,
    pub baseline_metric_s: f64,
    pub metric_s: Option<f64>,
    pub improvement: Option<f64>,
    pub accuracy: Option<f64>,
    pub note: String,
}

pub fn ablation_row(
    net: &NetworkGraph,
    cfg: &HwConfig,
    scfg: &SearchConfig,
    o: &SearchOverrides,
    mode: AblationMode,
    ratio: f64,
) -> Result<AblationRow> {
    check_ratio(ratio)?;
    let base_policy = QuantPolicy::uniform(net.len(), BASELINE_BITS);
    let base_inst = replication_instance(net, &base_policy, cfg, u64::MAX)?;
    let baseline_metric_s = base_inst.evaluate(scfg.objective, &vec![1; net.len()]) / cfg.clock_hz;
    let budget = tile_budget(base_inst.base_tiles(), ratio);
    let mut row = AblationRow {
        mode,
        ratio,
        tile_budget: budget,
        baseline_metric_s,
        metric_s: None,
        improvement: None,
        accuracy: None,
        note: String::new(),
    };
    match mode {
        AblationMode::ReplOnly => {
            let inst = replication_instance(net, &base_policy, cfg, budget)?;
            match replicate::optimize(&inst, scfg.objective) {
                Ok(plan) => row.metric_s = Some(plan.objective_value / cfg.clock_hz),
                Err(e @ replicate::ReplicateError::Infeasible { .. }) => row.note = e.to_string(),
                Err(e) => return Err(e.into()),
            }
        }
        AblationMode::QuantOnly | AblationMode::Joint => {
            let run = SearchConfig { tile_budget_ratio: ratio, replicate: mode == AblationMode::Joint, ..scfg.clone() };
            let trace = search_with(net, cfg, &run, o)?;
            match trace.best_record() {
                Some(best) => {
                    row.metric_s = best.metric_s;
                    row.accuracy = best.accuracy;
                }
                None => row.note = "no episode met its budget".into(),
            }
        }
    }
    row.improvement = row.metric_s.map(|m| baseline_metric_s / m);
    Ok(row)
}

fn ablate(a: &AblateArgs) -> Result<()> {
    if a.ratios.is_empty() || a.modes.is_empty() {
        return Err(Error::Config("need at least one ratio and one mode".into()));
    }
    let net = load_network(&a.design.network)?;
    let cfg = load_hw(a.design.hw.as_deref())?;
    let scfg = load_search_config(&a.search)?;
    let mut rows = Vec::new();
    println!("{:<11} {:>7} {:>7} {:>12} {:>9}  note", "mode", "ratio", "tiles", "metric_ms", "gain");
    for &mode in &a.modes {
        for &ratio in &a.ratios {
            let row = ablation_row(&net, &cfg, &scfg, &a.search, mode, ratio)?;
            let mode_name = serde_json::to_value(mode).expect("mode serializes");
            println!(
                "{:<11} {:>7.3} {:>7} {:>12} {:>9}  {}",
                mode_name.as_str().unwrap_or_default(),
                row.ratio,
                row.tile_budget,
                row.metric_s.map_or("-".into(), |m| format!("{:.6}", m * 1e3)),
                row.improvement.map_or("-".into(), |g| format!("{g:.4}x")),
                row.note
            );
            rows.push(row);
        }
    }
    if let Some(path) = &a.out {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &rows {
            w.serialize(row).map_err(|e| Error::Config(format!("csv: {e}")))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Config(format!("csv: {e}")))?;
        write(path, &String::from_utf8(bytes).expect("csv output is utf-8"))?;
    }
    Ok(())
}
