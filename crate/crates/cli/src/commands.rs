//! The subcommands, one per pipeline stage.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use hwfuzz_core::rtl::{extract_spec, parse, read_spec_xml, write_spec_xml, DesignSpec, SourceModule};
use hwfuzz_core::sim::{
    elaborate, elaborate_testbench, emit_vcd, simulate_testbench, CrashKind, Executor, Netlist, RunConfig, RunResult,
};
use hwfuzz_core::stimulus::Codec;
use hwfuzz_fuzz::harness::{gen_replay_tb, gen_wrapper_tb};
use hwfuzz_fuzz::report::{emit_plot, merge_campaign_covs, read_csv, CoverageSample, XAxis};
use hwfuzz_fuzz::run_campaign;
use hwfuzz_fuzz::triage::{key_string, CrashRecord};

use crate::config::{load_config, parse_dict};
use crate::error::CliError;

/// Process exit status: success.
pub const EXIT_OK: i32 = 0;
/// Process exit status: a command failed.
pub const EXIT_ERROR: i32 = 1;
/// Process exit status: the design crashed (fuzz, simulate).
pub const EXIT_CRASH: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "hwfuzz", version, about = "Coverage-guided fuzzing of Verilog designs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse sources and extract the top module's interface.
    Parse(ParseArgs),
    /// Run a fuzzing campaign.
    Fuzz(FuzzArgs),
    /// Simulate one testcase file.
    Simulate(SimulateArgs),
    /// Re-run a recorded crash and check that it reproduces.
    Replay(ReplayArgs),
    /// Plot and compare the coverage progression of campaigns.
    Report(ReportArgs),
    /// Generate a wrapper or crash-replay testbench from a spec.
    GenTb(GenTbArgs),
}

#[derive(Debug, Args)]
pub struct DesignArgs {
    /// Verilog source files.
    #[arg(required = true)]
    pub files: Vec<PathBuf>,
    /// Top module; inferred when exactly one module is never instantiated.
    #[arg(long)]
    pub top: Option<String>,
    #[arg(long)]
    pub clock: Option<String>,
    #[arg(long)]
    pub reset: Option<String>,
}

#[derive(Debug, Args)]
pub struct ParseArgs {
    #[command(flatten)]
    pub design: DesignArgs,
    /// Write the extracted spec as XML.
    #[arg(long)]
    pub emit_spec: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FuzzArgs {
    #[command(flatten)]
    pub design: DesignArgs,
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the configured output directory.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CycleArgs {
    #[arg(long)]
    pub reset_cycles: Option<u32>,
    #[arg(long)]
    pub max_cycles: Option<u32>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub design: DesignArgs,
    /// Testcase bytes.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub vcd: Option<PathBuf>,
    #[command(flatten)]
    pub cycles: CycleArgs,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    #[command(flatten)]
    pub design: DesignArgs,
    /// Crash input, e.g. `out/crashes/crash_0`; its `.meta` file sits next to it.
    #[arg(long)]
    pub crash: PathBuf,
    /// Also write the replay testbench and check it by simulation.
    #[arg(long)]
    pub emit_tb: Option<PathBuf>,
    #[arg(long)]
    pub vcd: Option<PathBuf>,
    #[command(flatten)]
    pub cycles: CycleArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Axis {
    Wall,
    Execs,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Campaign output directories.
    #[arg(required = true)]
    pub dirs: Vec<PathBuf>,
    #[arg(long)]
    pub svg: PathBuf,
    #[arg(long, value_enum, default_value = "wall")]
    pub x_axis: Axis,
    /// Merge the campaigns' coverage snapshots into this file.
    #[arg(long)]
    pub merge_cov: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Wrapper,
    Replay,
}

#[derive(Debug, Args)]
pub struct GenTbArgs {
    /// Spec XML as written by `parse --emit-spec`.
    pub spec: PathBuf,
    #[arg(long, value_enum)]
    pub kind: Kind,
    /// Crash input (replay only).
    #[arg(long)]
    pub crash: Option<PathBuf>,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub cycles: CycleArgs,
}

/// Runs a command, returning the exit status for a completed command.
pub fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Parse(a) => cmd_parse(a),
        Command::Fuzz(a) => cmd_fuzz(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Replay(a) => cmd_replay(a),
        Command::Report(a) => cmd_report(a),
        Command::GenTb(a) => cmd_gen_tb(a),
    }
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn read_bytes(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| CliError::io(path, e))
}

fn write_file(path: &Path, data: impl AsRef<[u8]>) -> Result<(), CliError> {
    fs::write(path, data).map_err(|e| CliError::io(path, e))
}

/// Parses every file; module names must be unique across files.
pub fn load_sources(files: &[PathBuf]) -> Result<Vec<SourceModule>, CliError> {
    let mut modules: Vec<SourceModule> = Vec::new();
    for f in files {
        let parsed = parse(&read_text(f)?).map_err(|e| {
            let e = CliError::from(e);
            CliError::new(e.category, format!("{}: {}", f.display(), e.message))
        })?;
        for m in parsed {
            if modules.iter().any(|o| o.name == m.name) {
                return Err(CliError::new(
                    "duplicate-name",
                    format!("{}: module `{}` is defined twice", f.display(), m.name),
                ));
            }
            modules.push(m);
        }
    }
    Ok(modules)
}

/// The only non-testbench module no other module instantiates.
pub fn infer_top(modules: &[SourceModule]) -> Result<String, CliError> {
    let used: BTreeSet<&str> = modules
        .iter()
        .flat_map(|m| m.instances())
        .map(|i| i.module.as_str())
        .collect();
    let roots: Vec<&str> = modules
        .iter()
        .filter(|m| !m.is_testbench() && !used.contains(m.name.as_str()))
        .map(|m| m.name.as_str())
        .collect();
    match roots[..] {
        [one] => Ok(one.to_string()),
        [] => Err(CliError::new("usage", "no candidate top module; pass --top")),
        _ => Err(CliError::new(
            "usage",
            format!("several candidate top modules ({}); pass --top", roots.join(", ")),
        )),
    }
}

struct Design {
    modules: Vec<SourceModule>,
    netlist: Netlist,
}

fn build(d: &DesignArgs, top_hint: Option<&str>, clock: Option<&str>, reset: Option<&str>) -> Result<Design, CliError> {
    let modules = load_sources(&d.files)?;
    let top = match d.top.as_deref().or(top_hint) {
        Some(t) => t.to_string(),
        None => infer_top(&modules)?,
    };
    let spec = extract_spec(
        &modules,
        &top,
        d.clock.as_deref().or(clock),
        d.reset.as_deref().or(reset),
    )?;
    let netlist = elaborate(&modules, &spec)?;
    Ok(Design { modules, netlist })
}

fn cmd_parse(a: ParseArgs) -> Result<i32, CliError> {
    let d = build(&a.design, None, None, None)?;
    let spec = d.netlist.spec();
    println!("top: {}", spec.top);
    println!("clock: {}", spec.clock);
    println!("reset: {} (active-{})", spec.reset, spec.reset_polarity.as_str());
    for p in &spec.ports {
        println!("port: {} {} [{}]", p.direction.keyword(), p.name, p.width);
    }
    println!(
        "stimulus: {} bits, {} byte(s) per frame",
        spec.stimulus_width(),
        spec.frame_bytes()
    );
    println!("coverage points: {}", d.netlist.cov_points.len());
    println!("modules: {}", d.modules.len());
    if let Some(path) = &a.emit_spec {
        write_file(path, write_spec_xml(spec))?;
    }
    Ok(EXIT_OK)
}

fn read_seeds(dir: &Path) -> Result<Vec<Vec<u8>>, CliError> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| CliError::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .collect();
    paths.sort();
    paths.iter().map(|p| read_bytes(p)).collect()
}

fn cmd_fuzz(a: FuzzArgs) -> Result<i32, CliError> {
    let cfg = load_config(&a.config)?;
    let d = build(
        &a.design,
        cfg.top.as_deref(),
        cfg.clock.as_deref(),
        cfg.reset.as_deref(),
    )?;
    let mut campaign = cfg.campaign();
    if let Some(out) = a.out_dir {
        campaign.out_dir = Some(out);
    }
    if let Some(dict) = &cfg.dict {
        campaign.dict = parse_dict(&read_text(dict)?).map_err(|m| CliError::new("parse", m))?;
    }
    let seeds = match &cfg.corpus_dir {
        Some(dir) => read_seeds(dir)?,
        None => Vec::new(),
    };
    let c = run_campaign(&d.netlist, &seeds, &campaign)?;
    let out = campaign.out_dir.as_deref().unwrap_or(Path::new("."));
    write_file(
        &out.join(format!("{}_tb.v", d.netlist.top)),
        gen_wrapper_tb(d.netlist.spec()),
    )?;

    let s = &c.stats;
    println!(
        "engine: {}  execs: {} ({:.0}/s)  corpus: {}",
        s.engine, s.execs, s.execs_per_sec, s.corpus_size
    );
    println!("crashes: {} unique, {} total", s.unique_crashes, s.total_crashes);
    println!(
        "coverage: stmt {:.2}%  branch {:.2}%  edges {}",
        s.stmt_pct, s.branch_pct, s.edges
    );
    for r in &c.crashes {
        println!("crash_{}: {} at cycle {}", r.id, r.key_string(), r.cycle);
    }
    println!("output: {}", out.display());
    Ok(if c.crashes.is_empty() { EXIT_OK } else { EXIT_CRASH })
}

/// `key: value` lines of a `campaign.meta` file.
fn read_campaign_meta(path: &Path) -> BTreeMap<String, String> {
    fs::read_to_string(path)
        .unwrap_or_default()
        .lines()
        .filter_map(|l| l.split_once(": "))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

fn run_config(cycles: &CycleArgs, meta: &BTreeMap<String, String>) -> Result<RunConfig, CliError> {
    let from_meta = |key: &str| -> Result<Option<u32>, CliError> {
        meta.get(key)
            .map(|v| {
                v.parse()
                    .map_err(|_| CliError::new("malformed-meta", format!("bad `{key}` in campaign.meta")))
            })
            .transpose()
    };
    let cfg = RunConfig {
        reset_cycles: cycles.reset_cycles.or(from_meta("reset_cycles")?).unwrap_or(2),
        max_cycles: cycles.max_cycles.or(from_meta("max_cycles")?).unwrap_or(256),
        ..RunConfig::default()
    };
    if cfg.reset_cycles < 1 || cfg.max_cycles < 1 {
        return Err(CliError::new(
            "invariant-violation",
            "reset and max cycles must be at least 1",
        ));
    }
    Ok(cfg)
}

fn describe(result: &RunResult) -> String {
    match &result.crash {
        Some(c) => format!("{} at cycle {}: {}", c.kind, c.cycle, c.message),
        None => "completed".to_string(),
    }
}

fn traced_run(netlist: &Netlist, bytes: &[u8], cfg: &RunConfig, vcd: Option<&Path>) -> Result<RunResult, CliError> {
    let frames = Codec::new(netlist.spec()).decode(bytes);
    let cfg = RunConfig {
        trace: vcd.is_some(),
        ..*cfg
    };
    let result = Executor::new(netlist).run_frames(&frames, &cfg);
    if let (Some(path), Some(trace)) = (vcd, &result.trace) {
        write_file(path, emit_vcd(netlist, trace))?;
    }
    Ok(result)
}

fn cmd_simulate(a: SimulateArgs) -> Result<i32, CliError> {
    let d = build(&a.design, None, None, None)?;
    let cfg = run_config(&a.cycles, &BTreeMap::new())?;
    let bytes = read_bytes(&a.input)?;
    let result = traced_run(&d.netlist, &bytes, &cfg, a.vcd.as_deref())?;
    println!("frames: {}", Codec::new(d.netlist.spec()).frame_count(bytes.len()));
    println!("cycles: {}", result.cycles_run);
    println!("outcome: {}", describe(&result));
    for (name, v) in &result.outputs {
        println!("{name} = 0x{v:X}");
    }
    Ok(if result.is_crash() { EXIT_CRASH } else { EXIT_OK })
}

/// Loads `path` and its `.meta` companion.
pub fn load_crash(path: &Path) -> Result<CrashRecord, CliError> {
    let bytes = read_bytes(path)?;
    let meta_path = PathBuf::from(format!("{}.meta", path.display()));
    let meta = read_text(&meta_path)?;
    let id = path
        .file_name()
        .and_then(|n| n.to_str())
        .and_then(|n| n.strip_prefix("crash_"))
        .and_then(|n| n.parse().ok())
        .unwrap_or(0);
    Ok(CrashRecord::from_meta(id, &meta, bytes)?)
}

fn campaign_meta_for(crash: &Path) -> BTreeMap<String, String> {
    crash
        .parent()
        .and_then(Path::parent)
        .map(|dir| read_campaign_meta(&dir.join("campaign.meta")))
        .unwrap_or_default()
}

fn cmd_replay(a: ReplayArgs) -> Result<i32, CliError> {
    let rec = load_crash(&a.crash)?;
    let meta = campaign_meta_for(&a.crash);
    let d = build(&a.design, meta.get("top").map(String::as_str), None, None)?;
    let cfg = run_config(&a.cycles, &meta)?;
    let result = traced_run(&d.netlist, &rec.bytes, &cfg, a.vcd.as_deref())?;
    let want = rec.key_string();
    let got = result.crash.as_ref().map(|c| (key_string(c.dedup_key()), c.cycle));
    if got.as_ref() != Some(&(want.clone(), rec.cycle)) {
        return Err(CliError::new(
            "replay-mismatch",
            format!("expected {want} at cycle {}, got {}", rec.cycle, describe(&result)),
        ));
    }
    println!("reproduced: {want} at cycle {}", rec.cycle);
    if let Some(path) = &a.emit_tb {
        let tb = gen_replay_tb(d.netlist.spec(), &rec, &cfg)?;
        write_file(path, &tb)?;
        let tb_name = format!("{}_replay", d.netlist.top);
        let mut modules = d.modules.clone();
        modules.extend(parse(&tb)?);
        let bench = elaborate_testbench(&modules, &tb_name)?;
        let run = simulate_testbench(&bench, u64::from(cfg.max_cycles) + 1, false);
        match run.crash {
            Some(c) if c.kind == rec.kind && c.cycle == rec.cycle => {
                println!(
                    "testbench: {} reproduces {} at cycle {}",
                    path.display(),
                    kind_label(c.kind),
                    c.cycle
                )
            }
            other => {
                return Err(CliError::new(
                    "replay-mismatch",
                    format!(
                        "testbench {} ended with {}",
                        path.display(),
                        other.map_or("no crash".to_string(), |c| format!("{} at cycle {}", c.kind, c.cycle))
                    ),
                ))
            }
        }
    }
    Ok(EXIT_OK)
}

fn kind_label(kind: CrashKind) -> String {
    kind.to_string()
}

fn cmd_report(a: ReportArgs) -> Result<i32, CliError> {
    let mut series: Vec<(String, Vec<CoverageSample>)> = Vec::new();
    for dir in &a.dirs {
        let csv = dir.join("stats.csv");
        let rows = read_csv(fs::File::open(&csv).map_err(|e| CliError::io(&csv, e))?)?;
        let meta = read_campaign_meta(&dir.join("campaign.meta"));
        let dir_name = dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        let mut name = meta.get("engine").cloned().unwrap_or_else(|| dir_name.clone());
        if series.iter().any(|(n, _)| *n == name) {
            name = format!("{name} ({dir_name})");
        }
        match rows.last() {
            Some(l) => println!(
                "{name}: {} samples, execs {}, stmt {:.2}%, branch {:.2}%, crashes {}",
                rows.len(),
                l.execs,
                l.stmt_pct,
                l.branch_pct,
                l.crashes
            ),
            None => println!("{name}: no samples"),
        }
        series.push((name, rows));
    }
    let axis = match a.x_axis {
        Axis::Wall => XAxis::WallTime,
        Axis::Execs => XAxis::Execs,
    };
    emit_plot(&series, axis, &a.svg).map_err(|e| CliError::io(&a.svg, e))?;
    println!("plot: {}", a.svg.display());
    if let Some(out) = &a.merge_cov {
        let paths: Vec<PathBuf> = a.dirs.iter().map(|d| d.join("coverage.bin")).collect();
        let merged = merge_campaign_covs(&paths)?;
        write_file(out, merged.to_snapshot())?;
        println!(
            "merged coverage: {} statements, {} branches, {} edges -> {}",
            merged.stmt_hits.count_ones(..),
            merged.branch_hits.count_ones(..),
            merged.edge_count(),
            out.display()
        );
    }
    Ok(EXIT_OK)
}

fn cmd_gen_tb(a: GenTbArgs) -> Result<i32, CliError> {
    let spec: DesignSpec = read_spec_xml(&read_text(&a.spec)?)?;
    let text = match a.kind {
        Kind::Wrapper => gen_wrapper_tb(&spec),
        Kind::Replay => {
            let crash = a
                .crash
                .as_deref()
                .ok_or_else(|| CliError::new("usage", "--kind replay needs --crash"))?;
            let rec = load_crash(crash)?;
            let cfg = run_config(&a.cycles, &campaign_meta_for(crash))?;
            gen_replay_tb(&spec, &rec, &cfg)?
        }
    };
    match &a.out {
        Some(path) => write_file(path, text)?,
        None => print!("{text}"),
    }
    Ok(EXIT_OK)
}
