use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use ptb_core::combinat::NodeGrouping;
use ptb_core::design::json::to_json;
use ptb_core::design::{DesignError, Library, Preset};
use ptb_core::scheme::{build_placement, build_schedule, NodeAssignment, SchemeError};
use ptb_core::search::{solve, GroupingFilter, SearchError, SearchSpace};
use ptb_core::simulate::{run, DemandMode, DesignSource, SimConfig, SimError, SimReport};
use rayon::prelude::*;

mod report;
mod selftest;

const EXIT_ARGS: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;
const EXIT_VALIDATION: u8 = 4;

#[derive(Parser)]
#[command(
    name = "ptb",
    version,
    about = "Packet-type-based D2D coded caching designs"
)]
struct Cli {
    /// Re-run the built-in worked-example checks and exit.
    #[arg(long, hide = true)]
    self_test: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Build a preset design and print it.
    Design(DesignArgs),
    /// Compare every applicable preset at one operating point.
    Compare(PointArgs),
    /// Run placement, delivery and decoding end to end.
    Simulate(SimArgs),
    /// Exhaustively search groupings and transmitter selections.
    Search(SearchArgs),
    /// Ratio against the baseline over a range of K.
    Sweep(SweepArgs),
}

#[derive(Args, Clone, Copy)]
struct PointArgs {
    #[arg(short = 'K', long = "K")]
    k: u32,
    #[arg(short = 'N', long = "N")]
    n: u32,
    #[arg(short = 'M', long = "M")]
    m: u32,
}

#[derive(Args)]
struct DesignArgs {
    #[arg(long, value_parser = parse_preset)]
    preset: Preset,
    #[command(flatten)]
    point: PointArgs,
    /// Write the design document here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the design document instead of the table.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct SimArgs {
    #[command(flatten)]
    point: PointArgs,
    #[arg(long, value_parser = parse_preset, conflicts_with_all = ["design", "search"])]
    preset: Option<Preset>,
    /// Design document to simulate.
    #[arg(long)]
    design: Option<PathBuf>,
    /// Use the best design found by the search.
    #[arg(long)]
    search: bool,
    /// Defaults to the smallest size with whole-bit packets.
    #[arg(long)]
    file_bits: Option<u64>,
    /// distinct, random, or a comma-separated list of file indices.
    #[arg(long, default_value = "distinct")]
    demand: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the report JSON here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Append a CSV row (with header when the file is new).
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Write the per-message audit as JSON lines.
    #[arg(long)]
    audit: Option<PathBuf>,
}

#[derive(Args)]
struct SearchArgs {
    #[arg(short = 'K', long = "K")]
    k: u32,
    #[arg(short = 't', long = "t")]
    t: u32,
    /// all, equal, or explicit groupings such as "3,3,3;3,3,2,1".
    #[arg(long, default_value = "all")]
    groupings: String,
    #[arg(long, default_value_t = 1 << 18)]
    max_candidates: u64,
    /// Seconds.
    #[arg(long)]
    time_budget: Option<f64>,
    #[arg(long)]
    validate_all: bool,
    /// Keep memory-imbalanced candidates for the validator.
    #[arg(long)]
    no_prune: bool,
    /// Include two-length designs on two-group unequal groupings.
    #[arg(long)]
    coupled: bool,
    #[arg(long, default_value_t = ptb_core::search::DEFAULT_K_CAP)]
    k_cap: u32,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    best_json: Option<PathBuf>,
    /// Rows of the ranked table to print.
    #[arg(long, default_value_t = 10)]
    top: usize,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, value_parser = parse_preset)]
    preset: Preset,
    /// Inclusive range such as 6..16 or 6..=16.
    #[arg(long = "K-range")]
    k_range: String,
    #[arg(long, default_value_t = 1)]
    step: u32,
    #[arg(long, conflicts_with = "tbar_fixed")]
    t_fixed: Option<u32>,
    #[arg(long)]
    tbar_fixed: Option<u32>,
    #[arg(long)]
    csv: Option<PathBuf>,
}

fn parse_preset(s: &str) -> Result<Preset, String> {
    s.parse()
}

/// An error with the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn args(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_ARGS,
            message: message.into(),
        }
    }
}

impl From<DesignError> for Failure {
    fn from(e: DesignError) -> Self {
        let code = match e {
            DesignError::NoLcm | DesignError::MemoryImbalance | DesignError::NoPositiveRatio => {
                EXIT_INFEASIBLE
            }
            _ => EXIT_ARGS,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<SchemeError> for Failure {
    fn from(e: SchemeError) -> Self {
        match e {
            SchemeError::Design(d) => d.into(),
            SchemeError::Infeasible { .. } => Failure {
                code: EXIT_INFEASIBLE,
                message: e.to_string(),
            },
            _ => Failure::args(e.to_string()),
        }
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Design(d) => d.into(),
            SimError::Scheme(s) => s.into(),
            SimError::Config(c) => Failure::args(c),
        }
    }
}

impl From<SearchError> for Failure {
    fn from(e: SearchError) -> Self {
        match e {
            SearchError::Design(d) => d.into(),
            SearchError::Cap { .. } => Failure::args(e.to_string()),
        }
    }
}

fn write_file(path: &PathBuf, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents)
        .map_err(|e| Failure::args(format!("cannot write {}: {e}", path.display())))
}

fn replication(p: PointArgs) -> Result<u32, Failure> {
    Ok(Library { n: p.n, m: p.m }.replication(p.k)?)
}

fn cmd_design(a: DesignArgs) -> Result<(), Failure> {
    let t = replication(a.point)?;
    let d = a
        .preset
        .build(a.point.k, t)?
        .with_library(a.point.n, a.point.m)?;
    let doc = serde_json::to_string_pretty(&to_json(&d)).expect("serializable");
    if let Some(out) = &a.out {
        write_file(out, &(doc.clone() + "\n"))?;
    }
    if a.json {
        println!("{doc}");
    } else {
        print!(
            "{}",
            report::design_table(&d, a.preset.bound(a.point.k, t).as_ref())
        );
    }
    Ok(())
}

fn cmd_compare(p: PointArgs) -> Result<(), Failure> {
    let t = replication(p)?;
    println!("K={} N={} M={} t={}", p.k, p.n, p.m, t);
    println!(
        "{:<10} {:>14} {:>14} {:>10}  grouping",
        "preset", "F", "F_jcm", "ratio"
    );
    for preset in Preset::ALL {
        match preset.build(p.k, t) {
            Ok(d) => println!(
                "{:<10} {:>14} {:>14} {:>10.6}  {}",
                preset.name(),
                d.f(),
                d.f_jcm(),
                d.ratio_f64(),
                d.grouping()
            ),
            Err(e) => println!("{:<10} not applicable: {e}", preset.name()),
        }
    }
    Ok(())
}

fn parse_demand(s: &str) -> Result<DemandMode, Failure> {
    match s {
        "distinct" => Ok(DemandMode::Distinct),
        "random" => Ok(DemandMode::Random),
        list => list
            .split(',')
            .map(|x| x.trim().parse::<u32>())
            .collect::<Result<Vec<_>, _>>()
            .map(DemandMode::Explicit)
            .map_err(|_| {
                Failure::args(format!(
                    "bad demand `{list}`: use distinct, random or a list"
                ))
            }),
    }
}

fn cmd_simulate(a: SimArgs) -> Result<(), Failure> {
    let p = a.point;
    let t = replication(p)?;
    let source = match (&a.preset, &a.design, a.search) {
        (Some(preset), None, false) => DesignSource::Preset(*preset),
        (None, Some(path), false) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Failure::args(format!("cannot read {}: {e}", path.display())))?;
            let v: serde_json::Value = serde_json::from_str(&text)
                .map_err(|e| Failure::args(format!("{}: {e}", path.display())))?;
            DesignSource::Json(v)
        }
        (None, None, true) => {
            let r = solve(&SearchSpace::new(p.k, t))?;
            let best = r.best.first().ok_or(Failure {
                code: EXIT_INFEASIBLE,
                message: "search found no validated design".into(),
            })?;
            DesignSource::Design(Box::new(best.design.clone()))
        }
        _ => {
            return Err(Failure::args(
                "give exactly one of --preset, --design, --search",
            ))
        }
    };
    let mut cfg = SimConfig::new(p.k, p.n, p.m, source);
    cfg.file_bits = a.file_bits;
    cfg.demand = parse_demand(&a.demand)?;
    cfg.seed = a.seed;
    let rep = run(&cfg)?;
    print!("{}", report::sim_table(&rep));
    let json = serde_json::to_string_pretty(&rep.to_json()).expect("serializable");
    if let Some(out) = &a.out {
        write_file(out, &(json + "\n"))?;
    }
    if let Some(path) = &a.csv {
        append_csv(path, &rep)?;
    }
    if let Some(path) = &a.audit {
        let design = cfg.design()?;
        let placement = build_placement(
            &design,
            &NodeAssignment::canonical(design.grouping()),
            p.n,
            p.m,
            rep.file_bits,
        )?;
        let schedule = build_schedule(&design, &placement, &rep.demand)?;
        write_file(path, &(schedule.audit_lines().join("\n") + "\n"))?;
    }
    if rep.ok() {
        Ok(())
    } else {
        Err(Failure {
            code: EXIT_VALIDATION,
            message: "validation failed".into(),
        })
    }
}

fn append_csv(path: &PathBuf, rep: &SimReport) -> Result<(), Failure> {
    let fresh = !path.exists();
    let csv = rep.to_csv();
    let body = if fresh {
        csv
    } else {
        csv.lines().skip(1).map(|l| format!("{l}\n")).collect()
    };
    use std::io::Write;
    fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .and_then(|mut f| f.write_all(body.as_bytes()))
        .map_err(|e| Failure::args(format!("cannot write {}: {e}", path.display())))
}

fn parse_groupings(s: &str, k: u32) -> Result<GroupingFilter, Failure> {
    match s {
        "all" => Ok(GroupingFilter::All),
        "equal" => Ok(GroupingFilter::Equal),
        list => {
            let mut out = Vec::new();
            for g in list.split(';') {
                let parts = g
                    .split(',')
                    .map(|x| x.trim().parse::<u32>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|_| Failure::args(format!("bad grouping `{g}`")))?;
                let q = NodeGrouping::new(&parts).map_err(|e| Failure::args(e.to_string()))?;
                if q.k() != k {
                    return Err(Failure::args(format!(
                        "grouping `{g}` does not cover K = {k} users"
                    )));
                }
                out.push(q);
            }
            Ok(GroupingFilter::Explicit(out))
        }
    }
}

fn cmd_search(a: SearchArgs) -> Result<(), Failure> {
    let mut space = SearchSpace::new(a.k, a.t).groupings(parse_groupings(&a.groupings, a.k)?);
    space.max_candidates = a.max_candidates;
    space.time_budget = a.time_budget.map(Duration::from_secs_f64);
    space.validate_all = a.validate_all;
    space.prune_memory = !a.no_prune;
    space.include_coupled = a.coupled;
    space.k_cap = a.k_cap;
    let r = solve(&space)?;
    print!("{}", report::search_summary(&r, a.top));
    if let Some(path) = &a.csv {
        write_file(path, &r.to_csv())?;
    }
    if let (Some(path), Some(best)) = (&a.best_json, r.best_json()) {
        write_file(
            path,
            &(serde_json::to_string_pretty(&best).expect("serializable") + "\n"),
        )?;
    }
    if r.best.is_empty() {
        return Err(Failure {
            code: EXIT_INFEASIBLE,
            message: "no validated design found".into(),
        });
    }
    Ok(())
}

fn parse_range(s: &str) -> Result<(u32, u32), Failure> {
    let bad = || Failure::args(format!("bad range `{s}`: use A..B"));
    let (a, b) = s.split_once("..").ok_or_else(bad)?;
    let b = b.trim_start_matches('=');
    let (a, b) = (
        a.trim().parse().map_err(|_| bad())?,
        b.trim().parse().map_err(|_| bad())?,
    );
    if a > b {
        return Err(bad());
    }
    Ok((a, b))
}

fn cmd_sweep(a: SweepArgs) -> Result<(), Failure> {
    let (lo, hi) = parse_range(&a.k_range)?;
    let ks: Vec<u32> = (lo..=hi).step_by(a.step.max(1) as usize).collect();
    let t_of = |k: u32| -> Result<u32, Failure> {
        match (a.t_fixed, a.tbar_fixed) {
            (Some(t), None) => Ok(t),
            (None, Some(tb)) if tb < k => Ok(k - tb),
            (None, Some(tb)) => Err(Failure::args(format!("K - t = {tb} needs K > {tb}"))),
            _ => Err(Failure::args("give --t-fixed or --tbar-fixed")),
        }
    };
    let rows: Vec<Result<Vec<String>, String>> = ks
        .par_iter()
        .map(|&k| {
            let t = t_of(k).map_err(|f| f.message)?;
            match a.preset.build(k, t) {
                Ok(d) => Ok(vec![
                    k.to_string(),
                    t.to_string(),
                    d.f().to_string(),
                    d.f_jcm().to_string(),
                    format!("{:.6}", d.ratio_f64()),
                    a.preset
                        .bound(k, t)
                        .map(|b| {
                            format!(
                                "{:.6}",
                                num_traits::ToPrimitive::to_f64(&b).unwrap_or(f64::NAN)
                            )
                        })
                        .unwrap_or_default(),
                ]),
                Err(e) => Err(format!("K={k} t={t}: {e}")),
            }
        })
        .collect();
    let mut out = String::from("K,t,F,F_jcm,ratio,bound\n");
    for r in rows {
        match r {
            Ok(cols) => out.push_str(&(cols.join(",") + "\n")),
            Err(e) => eprintln!("skipped {e}"),
        }
    }
    print!("{out}");
    if let Some(path) = &a.csv {
        write_file(path, &out)?;
    }
    Ok(())
}

fn configure_threads() {
    if let Some(n) = std::env::var("PTB_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
    {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
}

fn main() -> ExitCode {
    configure_threads();
    let cli = Cli::parse();
    if cli.self_test {
        return if selftest::run() {
            ExitCode::SUCCESS
        } else {
            ExitCode::from(EXIT_VALIDATION)
        };
    }
    let Some(command) = cli.command else {
        eprintln!("no command given; see --help");
        return ExitCode::from(EXIT_ARGS);
    };
    let result = match command {
        Command::Design(a) => cmd_design(a),
        Command::Compare(p) => cmd_compare(p),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Search(a) => cmd_search(a),
        Command::Sweep(a) => cmd_sweep(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
