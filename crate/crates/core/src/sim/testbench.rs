//! Elaboration and execution of self-contained testbenches: a top with a
//! `always #N clk = ~clk` clock generator and `initial` blocks that drive
//! the design under test. Every `@(posedge clk)` runs one clock cycle;
//! `@(negedge clk)` and `#N` only mark time.

use crate::rtl::{Edge, NetKind, SourceModule, Span, Stmt};

use super::elab::{Builder, ElabErrorKind, ElaborationError};
use super::eval::{eval, resolve, write};
use super::exec::{step_cycle, CrashInfo, CrashKind, SimState};
use super::ir::{IrExpr, IrLValue, Netlist};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TbOp {
    Assign(IrLValue, IrExpr, Span),
    Posedge,
    Negedge,
    Delay(u64),
    Finish,
}

#[derive(Debug, Clone)]
pub struct Testbench {
    pub netlist: Netlist,
    /// Initial blocks flattened in source order.
    pub script: Vec<TbOp>,
    pub half_period: u64,
}

fn unsupported(span: Span, msg: &str) -> ElaborationError {
    ElaborationError::new(ElabErrorKind::Unsupported, span, msg)
}

fn flatten(s: &Stmt, b: &Builder<'_>, clock_name: &str, out: &mut Vec<TbOp>) -> Result<(), ElaborationError> {
    match s {
        Stmt::Block(body, _) => {
            for s in body {
                flatten(s, b, clock_name, out)?;
            }
        }
        Stmt::Blocking(lv, e, span) | Stmt::NonBlocking(lv, e, span) => {
            let target = b.lower_tb_lvalue(lv, *span)?;
            if b.signal_kind(target.signal()) != NetKind::Reg {
                return Err(ElaborationError::new(
                    ElabErrorKind::IllegalTarget,
                    *span,
                    format!("`{}` is not a reg", lv.name()),
                ));
            }
            out.push(TbOp::Assign(target, b.lower_tb_expr(e, *span)?, *span));
        }
        Stmt::Wait(edge, name, span) => {
            if name != clock_name {
                return Err(unsupported(*span, "testbenches may only wait on their clock"));
            }
            out.push(match edge {
                Edge::Posedge => TbOp::Posedge,
                Edge::Negedge => TbOp::Negedge,
            });
        }
        Stmt::Delay(d, _) => out.push(TbOp::Delay(*d)),
        Stmt::Finish(_) => out.push(TbOp::Finish),
        Stmt::Null(_) => {}
        Stmt::If { span, .. } | Stmt::Case { span, .. } => {
            return Err(unsupported(
                *span,
                "conditionals are not supported in testbench initial blocks",
            ))
        }
    }
    Ok(())
}

/// Elaborates testbench `top` (and the design it instantiates).
pub fn elaborate_testbench(modules: &[SourceModule], top: &str) -> Result<Testbench, ElaborationError> {
    let mut b = Builder::new(modules, true);
    b.top(top)?;
    let (clock, half_period, _) = b.tb.clock_gen.ok_or_else(|| {
        unsupported(
            Span::default(),
            "testbench has no `always #N clk = ~clk` clock generator",
        )
    })?;
    let clock_name =
        b.tb.scope_names
            .iter()
            .find(|(_, id)| **id == clock)
            .map(|(n, _)| n.clone())
            .unwrap_or_default();
    let initials = std::mem::take(&mut b.tb.initials);
    let mut script = Vec::new();
    for (body, _) in &initials {
        flatten(body, &b, &clock_name, &mut script)?;
    }
    let targets: Vec<_> = script
        .iter()
        .filter_map(|op| match op {
            TbOp::Assign(lv, ..) => Some(lv.signal()),
            _ => None,
        })
        .chain(std::iter::once(clock))
        .collect();
    let netlist = b.finish(top, None, clock, None, &targets)?;
    Ok(Testbench {
        netlist,
        script,
        half_period,
    })
}

#[derive(Debug, Clone)]
pub struct TbRun {
    pub crash: Option<CrashInfo>,
    /// Rising clock edges simulated.
    pub cycles: u64,
    pub finished: bool,
    pub state: SimState,
}

impl TbRun {
    pub fn trace(&self) -> &[Vec<u64>] {
        self.state.trace.as_deref().unwrap_or(&[])
    }
}

/// Runs the testbench script until `$finish`, a crash, the end of the
/// script or `max_cycles` rising edges.
pub fn simulate_testbench(tb: &Testbench, max_cycles: u64, trace: bool) -> TbRun {
    let netlist = &tb.netlist;
    let mut state = SimState::new(netlist);
    if trace {
        state = state.with_trace();
    }
    let mut crash = None;
    let mut finished = false;
    let trap = |kind, cycle, span, state: &SimState| CrashInfo {
        kind: CrashKind::Trap(kind),
        cycle,
        span,
        message: format!("{kind} at cycle {cycle} ({span})"),
        last_point: state.fired.last().copied(),
    };
    for op in &tb.script {
        match op {
            TbOp::Assign(lv, e, span) => {
                let result = eval(e, &state.values)
                    .and_then(|v| resolve(lv, &state.values, |id| netlist.signal(id).width).map(|t| (t, v)));
                match result {
                    Ok((t, v)) => write(&mut state.values, t, v),
                    Err(kind) => {
                        crash = Some(trap(kind, state.cycle, *span, &state));
                        break;
                    }
                }
            }
            TbOp::Posedge => {
                if state.cycle >= max_cycles {
                    break;
                }
                match step_cycle(netlist, &mut state, &[]) {
                    Ok(step) => {
                        if let Some(f) = step.failures.first() {
                            let a = &netlist.assertions[f.assertion];
                            crash = Some(CrashInfo {
                                kind: CrashKind::Assertion(f.assertion),
                                cycle: f.cycle,
                                span: a.span,
                                message: format!("assertion {} failed at cycle {} ({})", f.assertion, f.cycle, a.span),
                                last_point: state.fired.last().copied(),
                            });
                            break;
                        }
                    }
                    Err(t) => {
                        crash = Some(trap(t.kind, t.cycle, t.span, &state));
                        break;
                    }
                }
            }
            TbOp::Negedge | TbOp::Delay(_) => {}
            TbOp::Finish => {
                finished = true;
                break;
            }
        }
    }
    TbRun {
        cycles: state.cycle + u64::from(crash.is_some()),
        crash,
        finished,
        state,
    }
}
