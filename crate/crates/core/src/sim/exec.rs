//! Two-phase cycle execution.

use std::ops::Range;

use crate::coverage::CoverageMap;
use crate::rtl::{Edge, Span};
use crate::stimulus::{StimulusFrame, TestCase};

use super::eval::{eval, resolve, write, Target, TrapKind};
use super::ir::*;

/// A simulator trap: the run stops and is reported as a crash.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimTrap {
    pub kind: TrapKind,
    pub cycle: u64,
    pub span: Span,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AssertionFailure {
    pub assertion: usize,
    pub cycle: u64,
}

#[derive(Debug, Clone)]
pub struct SimState {
    pub values: Vec<u64>,
    prev: Vec<u64>,
    nba: Vec<(Target, u64)>,
    pub cycle: u64,
    /// Values after every cycle, when tracing.
    pub trace: Option<Vec<Vec<u64>>>,
    pub fired: Vec<PointId>,
}

impl SimState {
    /// Fresh state: initializers applied and continuous assigns settled.
    pub fn new(netlist: &Netlist) -> Self {
        let mut state = SimState {
            values: Vec::new(),
            prev: Vec::new(),
            nba: Vec::new(),
            cycle: 0,
            trace: None,
            fired: Vec::new(),
        };
        state.reset(netlist);
        state
    }

    pub fn with_trace(mut self) -> Self {
        self.trace = Some(Vec::new());
        self
    }

    /// Returns to the power-on state, reusing allocations.
    pub fn reset(&mut self, netlist: &Netlist) {
        self.values.clear();
        self.values.extend(netlist.signals.iter().map(|s| s.init));
        self.nba.clear();
        self.cycle = 0;
        self.fired.clear();
        if let Some(t) = &mut self.trace {
            t.clear();
        }
        // traps during the power-on settle surface on the first cycle instead
        let _ = settle(netlist, &mut self.values, None);
        self.prev.clear();
        self.prev.extend_from_slice(&self.values);
    }

    pub fn value(&self, id: SignalId) -> u64 {
        self.values[id.index()]
    }
}

fn settle(netlist: &Netlist, values: &mut [u64], mut fired: Option<&mut Vec<PointId>>) -> Result<(), (TrapKind, Span)> {
    for a in &netlist.cont_assigns {
        if let (Some(f), Some(p)) = (fired.as_deref_mut(), a.point) {
            f.push(p);
        }
        let v = eval(&a.value, values).map_err(|t| (t, a.span))?;
        let t = resolve(&a.target, values, |id| netlist.signals[id.index()].width).map_err(|t| (t, a.span))?;
        write(values, t, v);
    }
    Ok(())
}

struct Exec<'a> {
    netlist: &'a Netlist,
    values: &'a mut [u64],
    nba: &'a mut Vec<(Target, u64)>,
    fired: &'a mut Vec<PointId>,
}

impl Exec<'_> {
    fn run(&mut self, s: &IrStmt) -> Result<(), (TrapKind, Span)> {
        match s {
            IrStmt::Assign {
                target,
                value,
                nonblocking,
                point,
                span,
            } => {
                self.fired.push(*point);
                let v = eval(value, self.values).map_err(|t| (t, *span))?;
                let netlist = self.netlist;
                let t = resolve(target, self.values, |id| netlist.signals[id.index()].width).map_err(|t| (t, *span))?;
                if *nonblocking {
                    self.nba.push((t, v));
                } else {
                    write(self.values, t, v);
                }
            }
            IrStmt::If {
                cond,
                then_branch,
                else_branch,
                point,
                true_point,
                false_point,
                span,
            } => {
                self.fired.push(*point);
                if eval(cond, self.values).map_err(|t| (t, *span))? != 0 {
                    self.fired.push(*true_point);
                    self.run(then_branch)?;
                } else {
                    self.fired.push(*false_point);
                    if let Some(e) = else_branch {
                        self.run(e)?;
                    }
                }
            }
            IrStmt::Case {
                subject,
                items,
                default,
                point,
                span,
            } => {
                self.fired.push(*point);
                let v = eval(subject, self.values).map_err(|t| (t, *span))?;
                for item in items {
                    for label in &item.labels {
                        if eval(label, self.values).map_err(|t| (t, *span))? == v {
                            self.fired.push(item.point);
                            return self.run(&item.body);
                        }
                    }
                }
                if let Some((body, p)) = default {
                    self.fired.push(*p);
                    self.run(body)?;
                }
            }
            IrStmt::Block(body) => {
                for s in body {
                    self.run(s)?;
                }
            }
            IrStmt::Nop => {}
        }
        Ok(())
    }
}

fn triggered(p: &Process, clock: SignalId, prev: &[u64], now: &[u64]) -> bool {
    p.sensitivity.iter().any(|&(edge, id)| {
        if id == clock {
            return true;
        }
        let (before, after) = (prev[id.index()] & 1, now[id.index()] & 1);
        match edge {
            Edge::Posedge => before == 0 && after == 1,
            Edge::Negedge => before == 1 && after == 0,
        }
    })
}

/// Outcome of one clock cycle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step {
    /// Range of `state.fired` appended by this cycle.
    pub fired: Range<usize>,
    pub failures: Vec<AssertionFailure>,
}

/// Executes one rising-edge clock cycle with `drive` applied to inputs.
pub fn step_cycle(netlist: &Netlist, state: &mut SimState, drive: &[(SignalId, u64)]) -> Result<Step, SimTrap> {
    let start = state.fired.len();
    let cycle = state.cycle;
    let result = step_inner(netlist, state, drive);
    if let Some(t) = &mut state.trace {
        t.push(state.values.clone());
    }
    state.prev.copy_from_slice(&state.values);
    match result {
        Ok(()) => {}
        Err((kind, span)) => {
            state.nba.clear();
            return Err(SimTrap { kind, cycle, span });
        }
    }
    let failures = eval_assertions(netlist, state)?;
    state.cycle += 1;
    Ok(Step {
        fired: start..state.fired.len(),
        failures,
    })
}

fn step_inner(netlist: &Netlist, state: &mut SimState, drive: &[(SignalId, u64)]) -> Result<(), (TrapKind, Span)> {
    for &(id, v) in drive {
        state.values[id.index()] = v & mask(netlist.signals[id.index()].width);
    }
    settle(netlist, &mut state.values, Some(&mut state.fired))?;
    for p in &netlist.processes {
        if triggered(p, netlist.clock, &state.prev, &state.values) {
            Exec {
                netlist,
                values: &mut state.values,
                nba: &mut state.nba,
                fired: &mut state.fired,
            }
            .run(&p.body)?;
        }
    }
    for (t, v) in state.nba.drain(..) {
        write(&mut state.values, t, v);
    }
    settle(netlist, &mut state.values, None)
}

/// Checks every assertion against the current (post-commit) values.
///
/// An assertion whose expressions trap is reported as a trap at its
/// declaration.
pub fn eval_assertions(netlist: &Netlist, state: &SimState) -> Result<Vec<AssertionFailure>, SimTrap> {
    let trap = |kind, span| SimTrap {
        kind,
        cycle: state.cycle,
        span,
    };
    let mut failures = Vec::new();
    for a in &netlist.assertions {
        if let Some(d) = &a.disable {
            if eval(d, &state.values).map_err(|k| trap(k, a.span))? != 0 {
                continue;
            }
        }
        if eval(&a.antecedent, &state.values).map_err(|k| trap(k, a.span))? != 0
            && eval(&a.consequent, &state.values).map_err(|k| trap(k, a.span))? == 0
        {
            failures.push(AssertionFailure {
                assertion: a.id,
                cycle: state.cycle,
            });
        }
    }
    Ok(failures)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunConfig {
    pub reset_cycles: u32,
    /// Cap on total cycles, reset included.
    pub max_cycles: u32,
    /// Record a per-cycle value trace for VCD output.
    pub trace: bool,
    /// Collect per-edge hit counts (perffuzz feedback).
    pub perf: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            reset_cycles: 2,
            max_cycles: 256,
            trace: false,
            perf: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CrashKind {
    Assertion(usize),
    Trap(TrapKind),
}

impl std::fmt::Display for CrashKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CrashKind::Assertion(id) => write!(f, "assertion {id}"),
            CrashKind::Trap(t) => write!(f, "trap {t}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrashInfo {
    pub kind: CrashKind,
    pub cycle: u64,
    pub span: Span,
    pub message: String,
    /// Last coverage point fired before the crash.
    pub last_point: Option<PointId>,
}

impl CrashInfo {
    pub fn dedup_key(&self) -> (CrashKind, Option<PointId>) {
        (self.kind, self.last_point)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Completed,
    Crash,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub outcome: Outcome,
    pub crash: Option<CrashInfo>,
    pub coverage: CoverageMap,
    /// Cycles started, reset included.
    pub cycles_run: u64,
    /// Final value of every output port, in declaration order.
    pub outputs: Vec<(String, u64)>,
    pub trace: Option<Vec<Vec<u64>>>,
}

impl RunResult {
    pub fn is_crash(&self) -> bool {
        self.outcome == Outcome::Crash
    }
}

/// Runs reset followed by `tc`'s frames.
pub fn run_testcase(netlist: &Netlist, tc: &TestCase, cfg: &RunConfig) -> RunResult {
    Executor::new(netlist).run_frames(&tc.frames, cfg)
}

/// Reusable simulation context for running many testcases on one netlist.
#[derive(Debug, Clone)]
pub struct Executor<'a> {
    netlist: &'a Netlist,
    state: SimState,
    drive: Vec<(SignalId, u64)>,
}

impl<'a> Executor<'a> {
    pub fn new(netlist: &'a Netlist) -> Self {
        Executor {
            netlist,
            state: SimState::new(netlist),
            drive: Vec::new(),
        }
    }

    pub fn netlist(&self) -> &'a Netlist {
        self.netlist
    }

    pub fn run_frames(&mut self, frames: &[StimulusFrame], cfg: &RunConfig) -> RunResult {
        self.run_with(frames.len(), |i| &frames[i].values, cfg)
    }

    /// Runs `frames` frames given as one flat value array with one value
    /// per stimulus input per frame, as filled by `Codec::decode_into`.
    pub fn run_flat(&mut self, flat: &[u64], frames: usize, cfg: &RunConfig) -> RunResult {
        let n = self.netlist.stimulus_inputs.len();
        assert_eq!(flat.len(), frames * n, "flat stimulus does not match the frame count");
        self.run_with(frames, |i| &flat[i * n..(i + 1) * n], cfg)
    }

    fn run_with<'f>(&mut self, frames: usize, frame: impl Fn(usize) -> &'f [u64], cfg: &RunConfig) -> RunResult {
        let netlist = self.netlist;
        let spec = netlist.spec();
        let reset = netlist.reset.expect("design netlists have a reset");
        let level = spec.reset_polarity.active_level();
        self.state.trace = cfg.trace.then(Vec::new);
        self.state.reset(netlist);
        let max = u64::from(cfg.max_cycles);
        let total = u64::from(cfg.reset_cycles) + frames as u64;
        let mut crash = None;
        for c in 0..total.min(max) {
            self.drive.clear();
            if c < u64::from(cfg.reset_cycles) {
                self.drive.push((reset, level));
                self.drive.extend(netlist.stimulus_inputs.iter().map(|&id| (id, 0)));
            } else {
                self.drive.push((reset, level ^ 1));
                let values = frame((c - u64::from(cfg.reset_cycles)) as usize);
                self.drive
                    .extend(netlist.stimulus_inputs.iter().copied().zip(values.iter().copied()));
            }
            match step_cycle(netlist, &mut self.state, &self.drive) {
                Ok(step) => {
                    if let Some(f) = step.failures.first() {
                        let a = &netlist.assertions[f.assertion];
                        crash = Some(CrashInfo {
                            kind: CrashKind::Assertion(f.assertion),
                            cycle: f.cycle,
                            span: a.span,
                            message: format!("assertion {} failed at cycle {} ({})", f.assertion, f.cycle, a.span),
                            last_point: self.state.fired.last().copied(),
                        });
                        break;
                    }
                }
                Err(trap) => {
                    crash = Some(CrashInfo {
                        kind: CrashKind::Trap(trap.kind),
                        cycle: trap.cycle,
                        span: trap.span,
                        message: format!("{} at cycle {} ({})", trap.kind, trap.cycle, trap.span),
                        last_point: self.state.fired.last().copied(),
                    });
                    break;
                }
            }
        }
        let cycles_run = match &crash {
            Some(c) => c.cycle + 1,
            None => self.state.cycle,
        };
        let coverage = CoverageMap::from_fired(&self.state.fired, &netlist.cov_points, cfg.perf);
        let outputs = spec
            .ports
            .iter()
            .filter(|p| p.direction == crate::rtl::Direction::Output)
            .map(|p| (p.name.clone(), self.state.values[netlist.names[&p.name].index()]))
            .collect();
        RunResult {
            outcome: if crash.is_some() {
                Outcome::Crash
            } else {
                Outcome::Completed
            },
            crash,
            coverage,
            cycles_run,
            outputs,
            trace: self.state.trace.take(),
        }
    }

    /// State left behind by the most recent run.
    pub fn state(&self) -> &SimState {
        &self.state
    }
}
