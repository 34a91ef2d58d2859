//! The fuzzing loop: select, mutate, execute, triage.
//!
//! Workers share one corpus and one global coverage map behind a mutex.
//! Each worker owns its executor and random stream; a candidate is executed
//! outside the lock and triaged inside it, so triage is serialized. With a
//! single worker a campaign is a pure function of its configuration and
//! seeds, apart from the wall-clock columns and duration-based stopping.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::{Mutex, MutexGuard};
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use rand::{RngExt, SeedableRng};
use rand_xoshiro::SplitMix64;

use hwfuzz_core::coverage::{coverage_pct, CoverageMap, EngineKind, GlobalCoverage};
use hwfuzz_core::rtl::DesignSpec;
use hwfuzz_core::sim::{Executor, Netlist, PointId, RunConfig, RunResult};
use hwfuzz_core::stimulus::Codec;

use crate::corpus::{path_hash, Corpus, CorpusEntry, Origin};
use crate::harness::gen_replay_tb;
use crate::mutate::Mutator;
use crate::report::{emit_csv, record_sample, CoverageSample, Progress, ReportError};
use crate::schedule::{assign_energy, fairfuzz_compute_mask, Scheduler};
use crate::triage::{triage_crash, CrashRecord, CrashSet, Triage};

/// Frames in the default seed.
pub const DEFAULT_SEED_FRAMES: usize = 4;
/// Executions between heartbeat samples.
pub const HEARTBEAT: u64 = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConfigErrorKind {
    Parse,
    UnknownKey,
    InvariantViolation,
}

impl ConfigErrorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ConfigErrorKind::Parse => "parse",
            ConfigErrorKind::UnknownKey => "unknown-key",
            ConfigErrorKind::InvariantViolation => "invariant-violation",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{message} ({})", kind.as_str())]
pub struct ConfigError {
    pub kind: ConfigErrorKind,
    pub message: String,
}

impl ConfigError {
    pub fn new(kind: ConfigErrorKind, message: impl Into<String>) -> Self {
        ConfigError {
            kind,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignConfig {
    pub engine: EngineKind,
    pub duration: Option<Duration>,
    pub max_execs: Option<u64>,
    pub rng_seed: u64,
    /// Reset and cycle limits of every execution.
    pub run: RunConfig,
    pub workers: usize,
    pub out_dir: Option<PathBuf>,
    /// Tokens for dictionary mutations.
    pub dict: Vec<Vec<u8>>,
    /// Stop once statement coverage reaches this percentage.
    pub target_stmt_pct: Option<f64>,
}

impl CampaignConfig {
    /// A configuration with default limits that stops after `max_execs`.
    pub fn new(engine: EngineKind, rng_seed: u64, max_execs: u64) -> Self {
        CampaignConfig {
            engine,
            duration: None,
            max_execs: Some(max_execs),
            rng_seed,
            run: RunConfig::default(),
            workers: 1,
            out_dir: None,
            dict: Vec::new(),
            target_stmt_pct: None,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let fail = |m: &str| Err(ConfigError::new(ConfigErrorKind::InvariantViolation, m));
        if self.duration.is_none() && self.max_execs.is_none() {
            return fail("one of duration_secs or max_execs must be set");
        }
        if self.run.reset_cycles < 1 {
            return fail("reset_cycles must be at least 1");
        }
        if self.run.max_cycles < 1 {
            return fail("max_cycles must be at least 1");
        }
        if self.workers < 1 {
            return fail("workers must be at least 1");
        }
        if let Some(t) = self.target_stmt_pct {
            if !(0.0..=100.0).contains(&t) {
                return fail("target_stmt_pct must be within 0..=100");
            }
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CampaignError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Report(#[from] ReportError),
}

impl CampaignError {
    pub fn category(&self) -> &'static str {
        match self {
            CampaignError::Config(_) => "config",
            CampaignError::Io { .. } | CampaignError::Report(_) => "io",
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CampaignError + '_ {
    move |source| CampaignError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignStats {
    pub engine: EngineKind,
    pub rng_seed: u64,
    pub execs: u64,
    pub execs_per_sec: f64,
    pub corpus_size: usize,
    pub unique_crashes: usize,
    pub total_crashes: u64,
    pub stmt_pct: f64,
    pub branch_pct: f64,
    pub edges: usize,
    pub start_unix_ms: u128,
    pub elapsed_ms: u64,
    /// Execution count at which the first crash was seen.
    pub first_crash_exec: Option<u64>,
    /// Candidates whose re-execution did not reproduce their coverage.
    pub nondeterministic: u64,
}

#[derive(Debug, Clone)]
pub struct Campaign {
    pub stats: CampaignStats,
    pub corpus: Vec<CorpusEntry>,
    pub crashes: Vec<CrashRecord>,
    pub global: GlobalCoverage,
    pub samples: Vec<CoverageSample>,
}

/// `DEFAULT_SEED_FRAMES` all-zero frames.
pub fn default_seed(spec: &DesignSpec) -> Vec<u8> {
    vec![0; spec.frame_bytes() * DEFAULT_SEED_FRAMES]
}

struct OutDir {
    corpus: PathBuf,
    crashes: PathBuf,
}

impl OutDir {
    fn create(root: &Path) -> Result<Self, CampaignError> {
        let corpus = root.join("corpus");
        let crashes = root.join("crashes");
        for dir in [&corpus, &crashes] {
            if dir.exists() {
                fs::remove_dir_all(dir).map_err(io_err(dir))?;
            }
            fs::create_dir_all(dir).map_err(io_err(dir))?;
        }
        Ok(OutDir { corpus, crashes })
    }
}

fn write(path: PathBuf, data: impl AsRef<[u8]>) -> Result<(), CampaignError> {
    fs::write(&path, data).map_err(|source| CampaignError::Io { path, source })
}

struct Shared<'n> {
    netlist: &'n Netlist,
    cfg: &'n CampaignConfig,
    corpus: Corpus,
    global: GlobalCoverage,
    crashes: CrashSet,
    sched: Scheduler,
    samples: Vec<CoverageSample>,
    execs: u64,
    first_crash_exec: Option<u64>,
    nondeterministic: u64,
    start: Option<Instant>,
    done: bool,
    out: Option<OutDir>,
    error: Option<CampaignError>,
}

struct Job {
    index: usize,
    bytes: Vec<u8>,
    path_hash: u64,
    depth: u32,
    det: bool,
    energy: u32,
    partner: Option<Vec<u8>>,
    mask: Option<Vec<usize>>,
    /// Branch whose mask still has to be computed.
    mask_target: Option<PointId>,
}

impl Shared<'_> {
    fn elapsed(&self) -> Duration {
        self.start.map(|s| s.elapsed()).unwrap_or_default()
    }

    /// Reserves `n` executions, or ends the campaign when a limit is hit.
    fn claim(&mut self, n: u64) -> bool {
        if self.done {
            return false;
        }
        let over_budget = self.cfg.max_execs.is_some_and(|m| self.execs + n > m);
        let over_time = self
            .cfg
            .duration
            .is_some_and(|d| self.start.is_some() && self.elapsed() >= d);
        if over_budget || over_time {
            if n == 1 || over_time {
                self.done = true;
            }
            return false;
        }
        self.start.get_or_insert_with(Instant::now);
        self.execs += n;
        true
    }

    fn sample(&mut self) {
        let progress = Progress {
            testcase: self.corpus.len() as u64,
            wall_ms: self.elapsed().as_millis() as u64,
            execs: self.execs,
            crashes: self.crashes.len() as u64,
        };
        let s = record_sample(progress, &self.global, self.netlist);
        self.samples.push(s);
        if self.cfg.target_stmt_pct.is_some_and(|t| s.stmt_pct >= t) {
            self.done = true;
        }
    }

    fn fail(&mut self, e: CampaignError) {
        self.error.get_or_insert(e);
        self.done = true;
    }

    fn write_entry(&mut self, idx: usize) {
        if let Some(out) = &self.out {
            let e = self.corpus.get(idx);
            if let Err(err) = write(out.corpus.join(e.file_name()), &e.bytes) {
                self.fail(err);
            }
        }
    }

    fn add_entry(&mut self, entry: CorpusEntry, coverage_known: bool) {
        if coverage_known {
            self.global.merge(&entry.coverage);
            self.global.record_corpus_entry(&entry.coverage);
        }
        let idx = self.corpus.push(entry);
        self.sched.on_insert(&mut self.corpus, idx);
        self.write_entry(idx);
    }

    fn record_crash(&mut self, result: &RunResult, bytes: &[u8]) {
        self.global.merge(&result.coverage);
        let width = self.netlist.spec().stimulus_width();
        if let Triage::NewUnique(id) = triage_crash(result, bytes, width, &mut self.crashes) {
            self.first_crash_exec.get_or_insert(self.execs);
            if let Some(out) = &self.out {
                let rec = &self.crashes.records()[id];
                let replay = gen_replay_tb(self.netlist.spec(), rec, &self.cfg.run).expect("widths agree");
                let written = write(out.crashes.join(rec.file_name()), &rec.bytes)
                    .and_then(|_| write(out.crashes.join(format!("{}.meta", rec.file_name())), rec.to_meta()))
                    .and_then(|_| write(out.crashes.join(format!("replay_{id}.v")), replay));
                if let Err(e) = written {
                    self.fail(e);
                }
            }
            self.sample();
        }
    }

    /// Files one executed candidate.
    fn triage(&mut self, bytes: Vec<u8>, origin: Origin, depth: u32, result: RunResult, exec: &mut Runner<'_>) {
        self.corpus.record_path(path_hash(&result.coverage));
        if result.is_crash() {
            self.record_crash(&result, &bytes);
        } else if self
            .global
            .is_interesting(&result.coverage, self.cfg.engine)
            .is_interesting()
        {
            let again = exec.run(&bytes);
            if again.coverage != result.coverage {
                self.nondeterministic += 1;
            } else {
                let entry = CorpusEntry::new(0, bytes, result.coverage, result.cycles_run, depth, origin);
                self.add_entry(entry, true);
                self.sample();
            }
        }
        if self.execs.is_multiple_of(HEARTBEAT) {
            self.sample();
        }
    }

    fn next_job(&mut self, rng: &mut SplitMix64) -> Option<Job> {
        if self.done {
            return None;
        }
        let sel = self.sched.select_next(&self.corpus, &self.global, self.netlist, rng);
        let averages = self.corpus.averages();
        let n = self.corpus.len();
        let partner = (n > 1).then(|| {
            let k = rng.random_range(0..n - 1);
            let k = if k >= sel.index { k + 1 } else { k };
            self.corpus.get(k).bytes.clone()
        });
        let entry = self.corpus.get(sel.index);
        let energy = assign_energy(entry, self.cfg.engine, &averages);
        let (mask, mask_target) = match (sel.target_branch, &entry.branch_mask) {
            (Some(t), Some((b, m))) if *b == t => (Some(m.clone()), None),
            (Some(t), _) => (None, Some(t)),
            _ => (None, None),
        };
        let job = Job {
            index: sel.index,
            bytes: entry.bytes.clone(),
            path_hash: entry.path_hash,
            depth: entry.depth + 1,
            det: !entry.det_done,
            energy,
            partner,
            mask,
            mask_target,
        };
        self.corpus.get_mut(sel.index).det_done = true;
        self.sched.on_fuzzed(&mut self.corpus, sel.index);
        Some(job)
    }
}

/// One worker's executor plus its decode buffer.
struct Runner<'n> {
    exec: Executor<'n>,
    codec: Codec,
    cfg: RunConfig,
    flat: Vec<u64>,
}

impl<'n> Runner<'n> {
    fn new(netlist: &'n Netlist, cfg: RunConfig) -> Self {
        Runner {
            exec: Executor::new(netlist),
            codec: Codec::new(netlist.spec()),
            cfg,
            flat: Vec::new(),
        }
    }

    fn run(&mut self, bytes: &[u8]) -> RunResult {
        self.flat.clear();
        let frames = self.codec.decode_into(bytes, &mut self.flat);
        self.exec.run_flat(&self.flat, frames, &self.cfg)
    }
}

fn lock<'a, 'n>(m: &'a Mutex<Shared<'n>>) -> MutexGuard<'a, Shared<'n>> {
    m.lock().unwrap_or_else(|p| p.into_inner())
}

fn worker(
    shared: &Mutex<Shared<'_>>,
    netlist: &Netlist,
    cfg: &CampaignConfig,
    run: RunConfig,
    mutator: &Mutator,
    id: u64,
) {
    let mut rng = SplitMix64::seed_from_u64(cfg.rng_seed.wrapping_add(id.wrapping_mul(0x9E37_79B9_7F4A_7C15)));
    let mut runner = Runner::new(netlist, run);
    // path hash of the executed candidate, or None once the campaign ends
    let step = |bytes: Vec<u8>, origin: Origin, depth: u32, runner: &mut Runner<'_>| -> Option<u64> {
        if !lock(shared).claim(1) {
            return None;
        }
        let result = runner.run(&bytes);
        let hash = path_hash(&result.coverage);
        lock(shared).triage(bytes, origin, depth, result, runner);
        Some(hash)
    };
    loop {
        let Some(mut job) = lock(shared).next_job(&mut rng) else {
            return;
        };
        if let Some(target) = job.mask_target {
            if lock(shared).claim(job.bytes.len() as u64) {
                let mask = fairfuzz_compute_mask(&job.bytes, target, &mut runner.exec, &runner.codec, &run);
                lock(shared).corpus.get_mut(job.index).branch_mask = Some((target, mask.clone()));
                job.mask = Some(mask);
            }
        }
        if job.det {
            let mut stages = mutator.deterministic(&job.bytes);
            while let Some((cand, origin)) = stages.next() {
                let Some(hash) = step(cand, origin, job.depth, &mut runner) else {
                    break;
                };
                if let Some(pos) = stages.last_byte_flip().filter(|_| hash == job.path_hash) {
                    stages.mark_ineffective(pos);
                }
            }
        }
        for _ in 0..job.energy {
            let (cand, origin) = mutator.havoc(&job.bytes, job.partner.as_deref(), job.mask.as_deref(), &mut rng);
            if step(cand, origin, job.depth, &mut runner).is_none() {
                break;
            }
        }
    }
}

/// Runs a campaign on `netlist` starting from `seeds` (the default seed
/// when empty). Seeds always join the corpus; each one is executed while
/// the execution budget allows.
pub fn run_campaign(netlist: &Netlist, seeds: &[Vec<u8>], cfg: &CampaignConfig) -> Result<Campaign, CampaignError> {
    cfg.validate()?;
    let spec = netlist.spec();
    let run = RunConfig {
        perf: cfg.engine.uses_perf(),
        trace: false,
        ..cfg.run
    };
    let out = match &cfg.out_dir {
        Some(root) => Some(OutDir::create(root)?),
        None => None,
    };
    let start_unix_ms = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0);
    let shared = Mutex::new(Shared {
        netlist,
        cfg,
        corpus: Corpus::new(),
        global: GlobalCoverage::new(netlist),
        crashes: CrashSet::new(),
        sched: Scheduler::new(cfg.engine),
        samples: Vec::new(),
        execs: 0,
        first_crash_exec: None,
        nondeterministic: 0,
        start: None,
        done: false,
        out,
        error: None,
    });

    let default = [default_seed(spec)];
    let seeds = if seeds.is_empty() { &default[..] } else { seeds };
    let mut runner = Runner::new(netlist, run);
    for seed in seeds {
        let mut s = lock(&shared);
        if s.claim(1) {
            let result = runner.run(seed);
            s.corpus.record_path(path_hash(&result.coverage));
            if result.is_crash() {
                s.record_crash(&result, seed);
            }
            let entry = CorpusEntry::new(0, seed.clone(), result.coverage, result.cycles_run, 0, Origin::Seed);
            s.add_entry(entry, true);
            s.sample();
        } else {
            let entry = CorpusEntry::new(
                0,
                seed.clone(),
                CoverageMap::empty(netlist.cov_points.len()),
                0,
                0,
                Origin::Seed,
            );
            s.add_entry(entry, false);
        }
    }
    // seeds may have exhausted the budget or reached the target
    lock(&shared).done |= cfg.max_execs == Some(0);

    let max_frames = (cfg.run.max_cycles.saturating_sub(cfg.run.reset_cycles)) as usize;
    let mutator = Mutator::new(spec.frame_bytes(), spec.stimulus_width(), max_frames, cfg.dict.clone());
    std::thread::scope(|scope| {
        for id in 1..cfg.workers as u64 {
            let (shared, mutator) = (&shared, &mutator);
            scope.spawn(move || worker(shared, netlist, cfg, run, mutator, id));
        }
        worker(&shared, netlist, cfg, run, &mutator, 0);
    });

    let mut s = shared.into_inner().unwrap_or_else(|p| p.into_inner());
    if let Some(e) = s.error.take() {
        return Err(e);
    }
    if s.samples.last().is_none_or(|l| l.execs != s.execs) {
        s.sample();
    }
    let elapsed = s.elapsed();
    let pct = coverage_pct(&s.global, netlist);
    let stats = CampaignStats {
        engine: cfg.engine,
        rng_seed: cfg.rng_seed,
        execs: s.execs,
        execs_per_sec: if elapsed.is_zero() {
            0.0
        } else {
            s.execs as f64 / elapsed.as_secs_f64()
        },
        corpus_size: s.corpus.len(),
        unique_crashes: s.crashes.len(),
        total_crashes: s.crashes.total,
        stmt_pct: pct.stmt,
        branch_pct: pct.branch,
        edges: s.global.edge_count(),
        start_unix_ms,
        elapsed_ms: elapsed.as_millis() as u64,
        first_crash_exec: s.first_crash_exec,
        nondeterministic: s.nondeterministic,
    };
    if let Some(root) = &cfg.out_dir {
        emit_csv(&s.samples, &root.join("stats.csv"))?;
        write(root.join("coverage.bin"), s.global.to_snapshot())?;
        write(root.join("campaign.meta"), campaign_meta(cfg, netlist, &stats))?;
    }
    Ok(Campaign {
        stats,
        corpus: s.corpus.into_entries(),
        crashes: s.crashes.into_records(),
        global: s.global,
        samples: s.samples,
    })
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_else(|| "-".into())
}

/// Configuration echo and final counters; no wall-clock values.
pub fn campaign_meta(cfg: &CampaignConfig, netlist: &Netlist, stats: &CampaignStats) -> String {
    let mut m = String::new();
    let _ = writeln!(m, "engine: {}", cfg.engine);
    let _ = writeln!(m, "rng_seed: {}", cfg.rng_seed);
    let _ = writeln!(m, "workers: {}", cfg.workers);
    let _ = writeln!(m, "reset_cycles: {}", cfg.run.reset_cycles);
    let _ = writeln!(m, "max_cycles: {}", cfg.run.max_cycles);
    let _ = writeln!(m, "max_execs: {}", opt(cfg.max_execs));
    let _ = writeln!(m, "duration_secs: {}", opt(cfg.duration.map(|d| d.as_secs())));
    let _ = writeln!(m, "target_stmt_pct: {}", opt(cfg.target_stmt_pct));
    let _ = writeln!(m, "dict_tokens: {}", cfg.dict.len());
    let _ = writeln!(m, "top: {}", netlist.top);
    let _ = writeln!(m, "netlist_hash: {:016x}", netlist.hash);
    let _ = writeln!(m, "execs: {}", stats.execs);
    let _ = writeln!(m, "corpus: {}", stats.corpus_size);
    let _ = writeln!(m, "unique_crashes: {}", stats.unique_crashes);
    let _ = writeln!(m, "total_crashes: {}", stats.total_crashes);
    let _ = writeln!(m, "stmt_pct: {:.2}", stats.stmt_pct);
    let _ = writeln!(m, "branch_pct: {:.2}", stats.branch_pct);
    m
}
