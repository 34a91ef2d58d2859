//! Elaboration and cycle-accurate simulation.
//!
//! Each clock cycle runs in two phases: inputs are driven and continuous
//! assigns settle; every process triggered by the rising clock edge (or by
//! an edge on another signal in its sensitivity list) runs in source order,
//! with blocking assigns taking effect immediately and nonblocking assigns
//! queued; the queue is committed, assigns settle again and assertions are
//! checked on the committed values.

mod elab;
mod eval;
mod exec;
mod ir;
mod testbench;
mod vcd;

pub use elab::{elaborate, ElabErrorKind, ElaborationError};
pub use eval::{eval, TrapKind};
pub use exec::{
    eval_assertions, run_testcase, step_cycle, AssertionFailure, CrashInfo, CrashKind, Executor, Outcome, RunConfig,
    RunResult, SimState, SimTrap, Step,
};
pub use ir::*;
pub use testbench::{elaborate_testbench, simulate_testbench, TbOp, TbRun, Testbench};
pub use vcd::{emit_vcd, id_code};
