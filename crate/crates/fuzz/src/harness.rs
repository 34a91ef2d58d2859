//! Testbench generation from a design spec: the wrapper that instantiates
//! the design with its own port list, and self-contained crash replays.
//!
//! Both are rendered from the templates in `templates/`. The output uses
//! the same Verilog subset the frontend reads, so a replay can be fed back
//! through the simulator. For a commercial simulator, `replay.tpl` is the
//! place to add `timescale` directives or SystemVerilog assertions binding.

use hwfuzz_core::rtl::{DesignSpec, Direction, SpecPort};
use hwfuzz_core::sim::{CrashKind, RunConfig};
use hwfuzz_core::stimulus::{Codec, StimulusFrame};

use crate::template::{context, Context, Template, TemplateError, Value};
use crate::triage::CrashRecord;

pub const WRAPPER_TEMPLATE: &str = include_str!("../templates/wrapper.tpl");
pub const REPLAY_TEMPLATE: &str = include_str!("../templates/replay.tpl");

/// Half clock period of generated replays, in time units.
pub const HALF_PERIOD: u64 = 5;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GenError {
    #[error(
        "crash input was recorded for a {recorded}-bit stimulus but the design takes {expected} bits (undecodable)"
    )]
    Undecodable { expected: u32, recorded: u32 },
    #[error("template error: {0}")]
    Template(#[from] TemplateError),
}

impl GenError {
    pub fn category(&self) -> &'static str {
        match self {
            GenError::Undecodable { .. } => "undecodable",
            GenError::Template(_) => "template",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TbKind {
    Wrapper,
    Replay,
}

/// Everything a testbench template is rendered from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TbModel {
    pub spec: DesignSpec,
    pub kind: TbKind,
    /// Frames applied after reset (replay only).
    pub stimulus: Option<Vec<StimulusFrame>>,
    /// Failing assertion or trap and its cycle.
    pub crash: Option<(CrashKind, u64)>,
    pub reset_cycles: u32,
}

fn range(width: u32) -> String {
    if width > 1 {
        format!("[{}:0] ", width - 1)
    } else {
        String::new()
    }
}

fn literal(width: u32, value: u64) -> String {
    format!("{width}'h{value:X}")
}

/// One item per port: its ANSI declaration and its named connection, the
/// first of which sits on the instance line.
fn port_items(ports: &[SpecPort]) -> Value {
    let n = ports.len();
    Value::List(
        ports
            .iter()
            .enumerate()
            .map(|(i, p)| {
                context([
                    ("name", p.name.clone()),
                    (
                        "decl",
                        format!("{} wire {}{}", p.direction.keyword(), range(p.width), p.name),
                    ),
                    ("lead", if i == 0 { "" } else { "\n    " }.to_string()),
                    ("sep", if i + 1 < n { "," } else { "" }.to_string()),
                ])
            })
            .collect(),
    )
}

impl TbModel {
    pub fn wrapper(spec: &DesignSpec) -> Self {
        TbModel {
            spec: spec.clone(),
            kind: TbKind::Wrapper,
            stimulus: None,
            crash: None,
            reset_cycles: 0,
        }
    }

    pub fn render(&self) -> Result<String, GenError> {
        let (template, ctx) = match self.kind {
            TbKind::Wrapper => (WRAPPER_TEMPLATE, self.wrapper_context()),
            TbKind::Replay => (REPLAY_TEMPLATE, self.replay_context()),
        };
        Ok(Template::parse(template)?.render(&ctx)?)
    }

    fn wrapper_context(&self) -> Context {
        let spec = &self.spec;
        let close = if spec.ports.is_empty() { "" } else { "\n" };
        let mut ctx = context([("top", spec.top.clone()), ("close", close.to_string())]);
        ctx.insert("ports".into(), port_items(&spec.ports));
        ctx
    }

    fn replay_context(&self) -> Context {
        let spec = &self.spec;
        let frames = self.stimulus.as_deref().unwrap_or(&[]);
        let active = spec.reset_polarity.active_level();
        let banner = match self.crash {
            Some((CrashKind::Assertion(id), cycle)) => format!("Reproduces: assertion {id} fails at cycle {cycle}."),
            Some((CrashKind::Trap(t), cycle)) => format!("Reproduces: {t} trap at cycle {cycle}."),
            None => "No crash annotation.".to_string(),
        };
        let mut ctx = context([
            ("top", spec.top.clone()),
            ("tb_name", format!("{}_replay", spec.top)),
            ("banner", banner),
            ("frame_count", frames.len().to_string()),
            ("reset_cycles", self.reset_cycles.to_string()),
            ("half_period", HALF_PERIOD.to_string()),
            ("clock", spec.clock.clone()),
            ("reset", spec.reset.clone()),
            ("reset_active", literal(1, active)),
            ("reset_inactive", literal(1, active ^ 1)),
        ]);
        let decl = |p: &SpecPort| context([("name", p.name.clone()), ("range", range(p.width))]);
        let regs = spec
            .ports
            .iter()
            .filter(|p| p.direction == Direction::Input)
            .map(decl)
            .collect();
        let wires = spec
            .ports
            .iter()
            .filter(|p| p.direction == Direction::Output)
            .map(decl)
            .collect();
        let stimulus: Vec<&SpecPort> = spec.stimulus_ports().collect();
        let inputs = stimulus
            .iter()
            .map(|p| context([("name", p.name.clone()), ("zero", literal(p.width, 0))]))
            .collect();
        let frames = frames
            .iter()
            .enumerate()
            .map(|(i, f)| {
                let assigns = stimulus
                    .iter()
                    .zip(&f.values)
                    .map(|(p, &v)| context([("name", p.name.clone()), ("value", literal(p.width, v))]))
                    .collect();
                let mut c = context([
                    ("index", i.to_string()),
                    ("cycle", (i as u64 + u64::from(self.reset_cycles)).to_string()),
                ]);
                c.insert("assigns".into(), Value::List(assigns));
                c
            })
            .collect();
        ctx.insert("regs".into(), Value::List(regs));
        ctx.insert("wires".into(), Value::List(wires));
        ctx.insert("ports".into(), port_items(&spec.ports));
        ctx.insert("inputs".into(), Value::List(inputs));
        ctx.insert(
            "reset_steps".into(),
            Value::List(vec![Context::new(); self.reset_cycles as usize]),
        );
        ctx.insert("frames".into(), Value::List(frames));
        ctx
    }
}

/// Wrapper module `<top>_tb` with the design's port list, instantiating the
/// design as `cl` with named connections in port order.
pub fn gen_wrapper_tb(spec: &DesignSpec) -> String {
    TbModel::wrapper(spec)
        .render()
        .expect("the bundled wrapper template renders every spec")
}

/// Replay testbench for `crash`: reset for `cfg.reset_cycles` cycles, then
/// one frame per rising edge up to the crashing cycle, then `$finish`.
pub fn gen_replay_tb(spec: &DesignSpec, crash: &CrashRecord, cfg: &RunConfig) -> Result<String, GenError> {
    replay_model(spec, crash, cfg)?.render()
}

pub fn replay_model(spec: &DesignSpec, crash: &CrashRecord, cfg: &RunConfig) -> Result<TbModel, GenError> {
    let expected = spec.stimulus_width();
    if crash.stimulus_width != expected {
        return Err(GenError::Undecodable {
            expected,
            recorded: crash.stimulus_width,
        });
    }
    let reset = u64::from(cfg.reset_cycles);
    let budget = u64::from(cfg.max_cycles).saturating_sub(reset);
    let needed = (crash.cycle + 1).saturating_sub(reset).min(budget) as usize;
    let mut frames = Codec::new(spec).decode(&crash.bytes);
    frames.truncate(needed);
    Ok(TbModel {
        spec: spec.clone(),
        kind: TbKind::Replay,
        stimulus: Some(frames),
        crash: Some((crash.kind, crash.cycle)),
        reset_cycles: cfg.reset_cycles,
    })
}
