//! Elaboration: hierarchy flattening, expression lowering, coverage point
//! allocation and combinational ordering.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, HashMap, HashSet};
use std::fmt;

use sha2::{Digest, Sha256};

use crate::rtl::{
    BinaryOp, DesignSpec, Direction, Edge, Expr, LValue, ModuleItem, NetKind, Sensitivity, SourceModule, Span, Stmt,
    UnaryOp,
};

use super::eval::eval;
use super::ir::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ElabErrorKind {
    CombCycle,
    MissingModule,
    PortConnectionMismatch,
    WidthMismatch,
    /// A procedural write to a non-reg, a write to a top-level input, or a
    /// signal with more than one driver.
    IllegalTarget,
    Unsupported,
}

impl ElabErrorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ElabErrorKind::CombCycle => "comb-cycle",
            ElabErrorKind::MissingModule => "missing-module",
            ElabErrorKind::PortConnectionMismatch => "port-connection-mismatch",
            ElabErrorKind::WidthMismatch => "width-mismatch",
            ElabErrorKind::IllegalTarget => "illegal-target",
            ElabErrorKind::Unsupported => "unsupported",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ElaborationError {
    pub kind: ElabErrorKind,
    pub message: String,
    pub span: Span,
}

impl ElaborationError {
    pub(crate) fn new(kind: ElabErrorKind, span: Span, message: impl Into<String>) -> Self {
        ElaborationError {
            kind,
            message: message.into(),
            span,
        }
    }
}

impl fmt::Display for ElaborationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} ({})", self.span, self.message, self.kind.as_str())
    }
}

type EResult<T> = Result<T, ElaborationError>;

#[derive(Debug, Clone, Copy)]
enum Binding {
    Signal(SignalId),
    Const(u64, u32),
}

#[derive(Debug, Default)]
struct Scope {
    prefix: String,
    names: HashMap<String, Binding>,
}

impl Scope {
    fn lookup(&self, name: &str, span: Span) -> EResult<Binding> {
        self.names
            .get(name)
            .copied()
            .ok_or_else(|| ElaborationError::new(ElabErrorKind::Unsupported, span, format!("`{name}` is not a signal")))
    }

    fn signal(&self, name: &str, span: Span) -> EResult<SignalId> {
        match self.lookup(name, span)? {
            Binding::Signal(id) => Ok(id),
            Binding::Const(..) => Err(ElaborationError::new(
                ElabErrorKind::Unsupported,
                span,
                format!("constant `{name}` used where a signal is required"),
            )),
        }
    }
}

/// Testbench-only pieces collected while elaborating a testbench top.
#[derive(Debug, Default)]
pub(crate) struct TbParts {
    /// `always #N clk = ~clk` generator: (clock signal, half period).
    pub clock_gen: Option<(SignalId, u64, Span)>,
    pub initials: Vec<(Stmt, Span)>,
    pub scope_names: HashMap<String, SignalId>,
    pub consts: HashMap<String, (u64, u32)>,
}

pub(crate) struct Builder<'a> {
    modules: HashMap<&'a str, &'a SourceModule>,
    signals: Vec<Signal>,
    names: HashMap<String, SignalId>,
    processes: Vec<Process>,
    assigns: Vec<ContAssign>,
    assertions: Vec<(Assertion, (Edge, SignalId))>,
    points: Vec<CovPoint>,
    top_inputs: HashSet<SignalId>,
    stack: Vec<String>,
    testbench: bool,
    pub tb: TbParts,
}

impl<'a> Builder<'a> {
    pub(crate) fn new(modules: &'a [SourceModule], testbench: bool) -> Self {
        Builder {
            modules: modules.iter().map(|m| (m.name.as_str(), m)).collect(),
            signals: Vec::new(),
            names: HashMap::new(),
            processes: Vec::new(),
            assigns: Vec::new(),
            assertions: Vec::new(),
            points: Vec::new(),
            top_inputs: HashSet::new(),
            stack: Vec::new(),
            testbench,
            tb: TbParts::default(),
        }
    }

    fn module(&self, name: &str, span: Span) -> EResult<&'a SourceModule> {
        self.modules.get(name).copied().ok_or_else(|| {
            ElaborationError::new(
                ElabErrorKind::MissingModule,
                span,
                format!("module `{name}` is not defined"),
            )
        })
    }

    fn declare(&mut self, scope: &mut Scope, name: &str, width: u32, kind: NetKind, init: u64) -> SignalId {
        let id = SignalId(self.signals.len() as u32);
        let full = format!("{}{name}", scope.prefix);
        self.signals.push(Signal {
            name: full.clone(),
            width,
            kind,
            init: init & mask(width),
        });
        self.names.insert(full, id);
        scope.names.insert(name.to_string(), Binding::Signal(id));
        id
    }

    fn point(&mut self, kind: PointKind, span: Span, scope: &Scope) -> PointId {
        let id = self.points.len() as PointId;
        self.points.push(CovPoint {
            id,
            kind,
            span,
            scope: scope.prefix.trim_end_matches('.').to_string(),
            weight: 0,
        });
        id
    }

    /// Elaborates the top module; returns its scope.
    pub(crate) fn top(&mut self, name: &str) -> EResult<()> {
        let m = self.module(name, Span::default())?;
        let mut scope = Scope::default();
        for p in &m.ports {
            let id = self.declare(&mut scope, &p.name, p.width, p.kind, 0);
            if p.direction == Direction::Input {
                self.top_inputs.insert(id);
            }
        }
        self.stack.push(m.name.clone());
        self.body(m, &mut scope, true)?;
        if self.testbench {
            for (name, b) in &scope.names {
                match b {
                    Binding::Signal(id) => {
                        self.tb.scope_names.insert(name.clone(), *id);
                    }
                    Binding::Const(v, w) => {
                        self.tb.consts.insert(name.clone(), (*v, *w));
                    }
                }
            }
        }
        Ok(())
    }

    fn body(&mut self, m: &'a SourceModule, scope: &mut Scope, is_top: bool) -> EResult<()> {
        for item in &m.items {
            match item {
                ModuleItem::Net(n) => {
                    let init = match (&n.init, n.kind) {
                        (Some(e), NetKind::Reg) => self.const_eval(e, scope, n.span)?,
                        _ => 0,
                    };
                    self.declare(scope, &n.name, n.width, n.kind, init);
                }
                ModuleItem::LocalParam(p) => {
                    let e = self.lower_expr(&p.value, scope, p.span)?;
                    let value = self.fold(&e, p.span)?;
                    scope.names.insert(p.name.clone(), Binding::Const(value, e.width()));
                }
                _ => {}
            }
        }
        for item in &m.items {
            match item {
                ModuleItem::Net(n) => {
                    if let (Some(e), NetKind::Wire) = (&n.init, n.kind) {
                        self.cont_assign(&LValue::Ident(n.name.clone()), e, scope, n.span)?;
                    }
                }
                ModuleItem::LocalParam(_) => {}
                ModuleItem::Assign(a) => self.cont_assign(&a.target, &a.expr, scope, a.span)?,
                ModuleItem::Always(a) => match &a.sensitivity {
                    Sensitivity::Edges(list) => {
                        let mut sensitivity = Vec::new();
                        for (edge, name) in list {
                            sensitivity.push((*edge, scope.signal(name, a.span)?));
                        }
                        let first = self.points.len() as PointId;
                        let body = self.lower_stmt(&a.body, scope)?;
                        let points = (first..self.points.len() as PointId).collect();
                        self.processes.push(Process {
                            sensitivity,
                            body,
                            points,
                            span: a.span,
                        });
                    }
                    Sensitivity::Delay(d) if self.testbench && is_top => {
                        let clock = clock_toggle(&a.body)
                            .ok_or_else(|| {
                                ElaborationError::new(
                                    ElabErrorKind::Unsupported,
                                    a.span,
                                    "delay-driven always blocks must have the form `clk = ~clk`",
                                )
                            })
                            .and_then(|name| scope.signal(name, a.span))?;
                        if self.tb.clock_gen.replace((clock, *d, a.span)).is_some() {
                            return Err(ElaborationError::new(
                                ElabErrorKind::Unsupported,
                                a.span,
                                "only one clock generator is supported",
                            ));
                        }
                    }
                    Sensitivity::Delay(_) => {
                        return Err(ElaborationError::new(
                            ElabErrorKind::Unsupported,
                            a.span,
                            "delay controls are only supported in a testbench top",
                        ))
                    }
                },
                ModuleItem::Initial(i) => {
                    if !(self.testbench && is_top) {
                        return Err(ElaborationError::new(
                            ElabErrorKind::Unsupported,
                            i.span,
                            "initial blocks are only supported in a testbench top",
                        ));
                    }
                    self.tb.initials.push((i.body.clone(), i.span));
                }
                ModuleItem::Instance(inst) => self.instance(inst, scope)?,
                ModuleItem::Assert(a) => {
                    let clock = (a.clock_edge.0, scope.signal(&a.clock_edge.1, a.span)?);
                    let disable = match &a.disable_expr {
                        Some(d) => Some(self.lower_expr(d, scope, a.span)?),
                        None => None,
                    };
                    let assertion = Assertion {
                        id: self.assertions.len(),
                        scope: scope.prefix.trim_end_matches('.').to_string(),
                        clock: clock.1,
                        disable,
                        antecedent: self.lower_expr(&a.antecedent, scope, a.span)?,
                        consequent: self.lower_expr(&a.consequent, scope, a.span)?,
                        span: a.span,
                    };
                    self.assertions.push((assertion, clock));
                }
            }
        }
        Ok(())
    }

    fn instance(&mut self, inst: &crate::rtl::Instance, parent: &Scope) -> EResult<()> {
        let child = self.module(&inst.module, inst.span)?;
        if self.stack.contains(&child.name) {
            return Err(ElaborationError::new(
                ElabErrorKind::Unsupported,
                inst.span,
                format!("module `{}` instantiates itself", child.name),
            ));
        }
        let mut seen = HashSet::new();
        for (port, _) in &inst.connections {
            if child.port(port).is_none() {
                return Err(ElaborationError::new(
                    ElabErrorKind::PortConnectionMismatch,
                    inst.span,
                    format!("module `{}` has no port `{port}`", child.name),
                ));
            }
            if !seen.insert(port.as_str()) {
                return Err(ElaborationError::new(
                    ElabErrorKind::PortConnectionMismatch,
                    inst.span,
                    format!("port `{port}` of `{}` is connected twice", inst.name),
                ));
            }
        }
        let mut scope = Scope {
            prefix: format!("{}{}.", parent.prefix, inst.name),
            names: HashMap::new(),
        };
        let connection = |name: &str| {
            inst.connections
                .iter()
                .find(|(p, _)| p == name)
                .and_then(|(_, e)| e.as_ref())
        };
        let mut outputs = Vec::new();
        for p in &child.ports {
            let id = self.declare(&mut scope, &p.name, p.width, p.kind, 0);
            let Some(expr) = connection(&p.name) else { continue };
            match p.direction {
                Direction::Input => {
                    let value = self.lower_expr(expr, parent, inst.span)?;
                    if !is_unsized(expr) && value.width() != p.width {
                        return Err(width_mismatch(inst, &p.name, p.width, value.width()));
                    }
                    self.assigns.push(ContAssign {
                        target: IrLValue::Whole(id),
                        value,
                        point: None,
                        span: inst.span,
                    });
                }
                Direction::Output => {
                    let lv = match expr {
                        Expr::Ident(n) => LValue::Ident(n.clone()),
                        Expr::Index(n, i) => LValue::Index(n.clone(), i.clone()),
                        Expr::Slice(n, m, l) => LValue::Slice(n.clone(), *m, *l),
                        _ => {
                            return Err(ElaborationError::new(
                                ElabErrorKind::PortConnectionMismatch,
                                inst.span,
                                format!("output port `{}` must connect to a signal", p.name),
                            ))
                        }
                    };
                    let target = self.lower_lvalue(&lv, parent, inst.span)?;
                    let width = self.lvalue_width(&target);
                    if width != p.width {
                        return Err(width_mismatch(inst, &p.name, p.width, width));
                    }
                    outputs.push(ContAssign {
                        target,
                        value: IrExpr::Signal { id, width: p.width },
                        point: None,
                        span: inst.span,
                    });
                }
            }
        }
        self.stack.push(child.name.clone());
        self.body(child, &mut scope, false)?;
        self.stack.pop();
        self.assigns.extend(outputs);
        Ok(())
    }

    fn cont_assign(&mut self, lv: &LValue, e: &Expr, scope: &Scope, span: Span) -> EResult<()> {
        let target = self.lower_lvalue(lv, scope, span)?;
        let value = self.lower_expr(e, scope, span)?;
        let point = self.point(PointKind::ContAssign, span, scope);
        self.assigns.push(ContAssign {
            target,
            value,
            point: Some(point),
            span,
        });
        Ok(())
    }

    fn lvalue_width(&self, lv: &IrLValue) -> u32 {
        match lv {
            IrLValue::Whole(id) => self.signals[id.index()].width,
            IrLValue::Bit(..) => 1,
            IrLValue::Slice { width, .. } => *width,
        }
    }

    fn const_eval(&self, e: &Expr, scope: &Scope, span: Span) -> EResult<u64> {
        let lowered = self.lower_expr(e, scope, span)?;
        self.fold(&lowered, span)
    }

    fn fold(&self, e: &IrExpr, span: Span) -> EResult<u64> {
        let mut uses_signal = false;
        e.for_each_signal(&mut |_| uses_signal = true);
        if uses_signal {
            return Err(ElaborationError::new(
                ElabErrorKind::Unsupported,
                span,
                "initializers and localparams must be constant",
            ));
        }
        eval(e, &[]).map_err(|t| {
            ElaborationError::new(
                ElabErrorKind::Unsupported,
                span,
                format!("constant expression traps: {t}"),
            )
        })
    }

    fn lower_stmt(&mut self, s: &Stmt, scope: &Scope) -> EResult<IrStmt> {
        Ok(match s {
            Stmt::Block(body, _) => {
                let mut out = Vec::with_capacity(body.len());
                for s in body {
                    out.push(self.lower_stmt(s, scope)?);
                }
                IrStmt::Block(out)
            }
            Stmt::Blocking(lv, e, span) | Stmt::NonBlocking(lv, e, span) => {
                let target = self.lower_lvalue(lv, scope, *span)?;
                let value = self.lower_expr(e, scope, *span)?;
                let point = self.point(PointKind::Statement, *span, scope);
                IrStmt::Assign {
                    target,
                    value,
                    nonblocking: matches!(s, Stmt::NonBlocking(..)),
                    point,
                    span: *span,
                }
            }
            Stmt::If {
                cond,
                then_branch,
                else_branch,
                span,
            } => {
                let cond = self.lower_expr(cond, scope, *span)?;
                let point = self.point(PointKind::Statement, *span, scope);
                let true_point = self.point(PointKind::BranchTrue, *span, scope);
                let false_point = self.point(PointKind::BranchFalse, *span, scope);
                let then_branch = Box::new(self.lower_stmt(then_branch, scope)?);
                let else_branch = match else_branch {
                    Some(e) => Some(Box::new(self.lower_stmt(e, scope)?)),
                    None => None,
                };
                IrStmt::If {
                    cond,
                    then_branch,
                    else_branch,
                    point,
                    true_point,
                    false_point,
                    span: *span,
                }
            }
            Stmt::Case {
                subject,
                items,
                default,
                span,
            } => {
                let subject = self.lower_expr(subject, scope, *span)?;
                let point = self.point(PointKind::Statement, *span, scope);
                let mut lowered = Vec::with_capacity(items.len());
                for item in items {
                    let mut labels = Vec::with_capacity(item.labels.len());
                    for l in &item.labels {
                        labels.push(self.lower_expr(l, scope, item.span)?);
                    }
                    let point = self.point(PointKind::CaseItem, item.span, scope);
                    let body = self.lower_stmt(&item.body, scope)?;
                    lowered.push(IrCaseItem { labels, body, point });
                }
                let default = match default {
                    Some(d) => {
                        let p = self.point(PointKind::CaseDefault, d.span(), scope);
                        Some((Box::new(self.lower_stmt(d, scope)?), p))
                    }
                    None => None,
                };
                IrStmt::Case {
                    subject,
                    items: lowered,
                    default,
                    point,
                    span: *span,
                }
            }
            Stmt::Null(_) => IrStmt::Nop,
            Stmt::Wait(_, _, span) | Stmt::Delay(_, span) | Stmt::Finish(span) => {
                return Err(ElaborationError::new(
                    ElabErrorKind::Unsupported,
                    *span,
                    "timing controls and $finish are only supported in testbench initial blocks",
                ))
            }
        })
    }

    fn lower_lvalue(&self, lv: &LValue, scope: &Scope, span: Span) -> EResult<IrLValue> {
        let id = scope.signal(lv.name(), span)?;
        let width = self.signals[id.index()].width;
        Ok(match lv {
            LValue::Ident(_) => IrLValue::Whole(id),
            LValue::Index(name, idx) => {
                let idx = self.lower_expr(idx, scope, span)?;
                match idx {
                    IrExpr::Const { value, .. } => {
                        check_select(name, value, width, span)?;
                        IrLValue::Slice {
                            id,
                            lsb: value as u32,
                            width: 1,
                        }
                    }
                    idx => IrLValue::Bit(id, Box::new(idx)),
                }
            }
            LValue::Slice(name, msb, lsb) => {
                check_select(name, u64::from(*msb), width, span)?;
                IrLValue::Slice {
                    id,
                    lsb: *lsb,
                    width: msb - lsb + 1,
                }
            }
        })
    }

    fn lower_expr(&self, e: &Expr, scope: &Scope, span: Span) -> EResult<IrExpr> {
        Ok(match e {
            Expr::Literal { value, width, .. } => IrExpr::Const {
                value: *value,
                width: width.unwrap_or(32),
            },
            Expr::Ident(name) => match scope.lookup(name, span)? {
                Binding::Signal(id) => IrExpr::Signal {
                    id,
                    width: self.signals[id.index()].width,
                },
                Binding::Const(value, width) => IrExpr::Const { value, width },
            },
            Expr::Index(name, idx) => {
                let id = scope.signal(name, span)?;
                let width = self.signals[id.index()].width;
                match self.lower_expr(idx, scope, span)? {
                    IrExpr::Const { value, .. } => {
                        check_select(name, value, width, span)?;
                        IrExpr::Slice {
                            id,
                            lsb: value as u32,
                            width: 1,
                        }
                    }
                    idx => IrExpr::Index {
                        id,
                        index: Box::new(idx),
                        base_width: width,
                    },
                }
            }
            Expr::Slice(name, msb, lsb) => {
                let id = scope.signal(name, span)?;
                check_select(name, u64::from(*msb), self.signals[id.index()].width, span)?;
                IrExpr::Slice {
                    id,
                    lsb: *lsb,
                    width: msb - lsb + 1,
                }
            }
            Expr::Concat(parts) => {
                let mut lowered = Vec::with_capacity(parts.len());
                for p in parts {
                    lowered.push(self.lower_expr(p, scope, span)?);
                }
                let width: u32 = lowered.iter().map(IrExpr::width).sum();
                if width > 64 {
                    return Err(ElaborationError::new(
                        ElabErrorKind::Unsupported,
                        span,
                        format!("concatenation is {width} bits wide; at most 64 are supported"),
                    ));
                }
                IrExpr::Concat { parts: lowered, width }
            }
            Expr::Unary(op, arg) => {
                let arg = self.lower_expr(arg, scope, span)?;
                let width = match op {
                    UnaryOp::Not | UnaryOp::Neg => arg.width(),
                    _ => 1,
                };
                IrExpr::Unary {
                    op: *op,
                    arg: Box::new(arg),
                    width,
                }
            }
            Expr::Binary(op, l, r) => {
                let lhs = self.lower_expr(l, scope, span)?;
                let rhs = self.lower_expr(r, scope, span)?;
                let width = if op.is_boolean() {
                    1
                } else if matches!(op, BinaryOp::Shl | BinaryOp::Shr) {
                    lhs.width()
                } else {
                    lhs.width().max(rhs.width())
                };
                IrExpr::Binary {
                    op: *op,
                    lhs: Box::new(lhs),
                    rhs: Box::new(rhs),
                    width,
                }
            }
            Expr::Ternary(c, t, f) => {
                let cond = self.lower_expr(c, scope, span)?;
                let then = self.lower_expr(t, scope, span)?;
                let otherwise = self.lower_expr(f, scope, span)?;
                let width = then.width().max(otherwise.width());
                IrExpr::Ternary {
                    cond: Box::new(cond),
                    then: Box::new(then),
                    otherwise: Box::new(otherwise),
                    width,
                }
            }
        })
    }

    /// Resolves an expression written in the testbench top scope.
    pub(crate) fn lower_tb_expr(&self, e: &Expr, span: Span) -> EResult<IrExpr> {
        let scope = self.tb_scope();
        self.lower_expr(e, &scope, span)
    }

    pub(crate) fn lower_tb_lvalue(&self, lv: &LValue, span: Span) -> EResult<IrLValue> {
        let scope = self.tb_scope();
        self.lower_lvalue(lv, &scope, span)
    }

    fn tb_scope(&self) -> Scope {
        let mut names: HashMap<String, Binding> = self
            .tb
            .scope_names
            .iter()
            .map(|(k, v)| (k.clone(), Binding::Signal(*v)))
            .collect();
        names.extend(
            self.tb
                .consts
                .iter()
                .map(|(k, (v, w))| (k.clone(), Binding::Const(*v, *w))),
        );
        Scope {
            prefix: String::new(),
            names,
        }
    }

    pub(crate) fn signal_kind(&self, id: SignalId) -> NetKind {
        self.signals[id.index()].kind
    }

    /// Checks drivers, orders continuous assigns, assigns weights and
    /// resolves the clock. `extra_targets` are signals written by
    /// testbench scripts.
    pub(crate) fn finish(
        self,
        top: &str,
        spec: Option<DesignSpec>,
        clock: SignalId,
        reset: Option<SignalId>,
        extra_targets: &[SignalId],
    ) -> EResult<Netlist> {
        let Builder {
            signals,
            names,
            mut processes,
            assigns,
            assertions,
            mut points,
            top_inputs,
            ..
        } = self;

        // drivers
        let mut assign_driven: HashMap<SignalId, Span> = HashMap::new();
        let mut whole_driven = HashSet::new();
        for a in &assigns {
            let id = a.target.signal();
            if top_inputs.contains(&id) {
                return Err(ElaborationError::new(
                    ElabErrorKind::IllegalTarget,
                    a.span,
                    format!("top-level input `{}` cannot be assigned", signals[id.index()].name),
                ));
            }
            let whole = matches!(a.target, IrLValue::Whole(_));
            if (whole && assign_driven.contains_key(&id)) || whole_driven.contains(&id) {
                return Err(ElaborationError::new(
                    ElabErrorKind::IllegalTarget,
                    a.span,
                    format!("`{}` has more than one continuous driver", signals[id.index()].name),
                ));
            }
            if whole {
                whole_driven.insert(id);
            }
            assign_driven.insert(id, a.span);
        }
        for p in &processes {
            let mut err = None;
            p.body.for_each_target(&mut |id| {
                if err.is_some() {
                    return;
                }
                let sig = &signals[id.index()];
                if top_inputs.contains(&id) {
                    err = Some(format!("top-level input `{}` cannot be assigned", sig.name));
                } else if sig.kind != NetKind::Reg {
                    err = Some(format!("`{}` is a wire and cannot be assigned procedurally", sig.name));
                } else if assign_driven.contains_key(&id) {
                    err = Some(format!("`{}` is driven both procedurally and continuously", sig.name));
                }
            });
            if let Some(msg) = err {
                return Err(ElaborationError::new(ElabErrorKind::IllegalTarget, p.span, msg));
            }
        }
        for id in extra_targets {
            if assign_driven.contains_key(id) {
                return Err(ElaborationError::new(
                    ElabErrorKind::IllegalTarget,
                    Span::default(),
                    format!(
                        "`{}` is driven both by the testbench and continuously",
                        signals[id.index()].name
                    ),
                ));
            }
        }

        let cont_assigns = order_assigns(assigns, &signals)?;

        // clock aliases: signals continuously assigned straight from the clock
        let mut aliases = BTreeSet::from([clock]);
        for a in &cont_assigns {
            if let (IrLValue::Whole(t), IrExpr::Signal { id, .. }) = (&a.target, &a.value) {
                if aliases.contains(id) {
                    aliases.insert(*t);
                }
            }
        }
        for p in &mut processes {
            for (edge, id) in &mut p.sensitivity {
                if aliases.contains(id) {
                    if *edge == Edge::Negedge {
                        return Err(ElaborationError::new(
                            ElabErrorKind::Unsupported,
                            p.span,
                            "processes must trigger on the rising clock edge",
                        ));
                    }
                    *id = clock;
                }
            }
        }
        let mut resolved = Vec::with_capacity(assertions.len());
        for (mut a, (edge, id)) in assertions {
            if !aliases.contains(&id) || edge != Edge::Posedge {
                return Err(ElaborationError::new(
                    ElabErrorKind::Unsupported,
                    a.span,
                    "assertions must be clocked on the rising edge of the design clock",
                ));
            }
            a.clock = clock;
            resolved.push(a);
        }

        // assertion-adjacency weights
        let mut cone: HashSet<SignalId> = HashSet::new();
        for a in &resolved {
            let mut add = |id| {
                cone.insert(id);
            };
            if let Some(d) = &a.disable {
                d.for_each_signal(&mut add);
            }
            a.antecedent.for_each_signal(&mut add);
            a.consequent.for_each_signal(&mut add);
        }
        loop {
            let before = cone.len();
            for a in &cont_assigns {
                if cone.contains(&a.target.signal()) {
                    a.value.for_each_signal(&mut |id| {
                        cone.insert(id);
                    });
                    a.target.for_each_index_signal(&mut |id| {
                        cone.insert(id);
                    });
                }
            }
            if cone.len() == before {
                break;
            }
        }
        for p in &processes {
            let mut writes_cone = false;
            p.body.for_each_target(&mut |id| writes_cone |= cone.contains(&id));
            if writes_cone {
                for &pt in &p.points {
                    points[pt as usize].weight = 1;
                }
            }
        }
        for a in &cont_assigns {
            if let Some(pt) = a.point {
                if cone.contains(&a.target.signal()) {
                    points[pt as usize].weight = 1;
                }
            }
        }

        let stimulus_inputs = match &spec {
            Some(spec) => spec.stimulus_ports().map(|p| names[&p.name]).collect(),
            None => Vec::new(),
        };
        let mut netlist = Netlist {
            top: top.to_string(),
            signals,
            processes,
            cont_assigns,
            assertions: resolved,
            cov_points: points,
            spec,
            clock,
            reset,
            stimulus_inputs,
            hash: 0,
            names,
        };
        netlist.hash = fingerprint(&netlist);
        Ok(netlist)
    }
}

fn is_unsized(e: &Expr) -> bool {
    matches!(e, Expr::Literal { width: None, .. })
}

fn width_mismatch(inst: &crate::rtl::Instance, port: &str, expected: u32, got: u32) -> ElaborationError {
    ElaborationError::new(
        ElabErrorKind::WidthMismatch,
        inst.span,
        format!(
            "port `{port}` of instance `{}` is {expected} bits wide but its connection is {got} bits",
            inst.name
        ),
    )
}

fn check_select(name: &str, index: u64, width: u32, span: Span) -> EResult<()> {
    if index >= u64::from(width) {
        return Err(ElaborationError::new(
            ElabErrorKind::WidthMismatch,
            span,
            format!("bit {index} is outside `{name}` ({width} bits)"),
        ));
    }
    Ok(())
}

fn clock_toggle(s: &Stmt) -> Option<&str> {
    match s {
        Stmt::Blocking(LValue::Ident(a), Expr::Unary(UnaryOp::Not, inner), _)
        | Stmt::NonBlocking(LValue::Ident(a), Expr::Unary(UnaryOp::Not, inner), _) => match &**inner {
            Expr::Ident(b) if a == b => Some(a),
            _ => None,
        },
        Stmt::Block(body, _) if body.len() == 1 => clock_toggle(&body[0]),
        _ => None,
    }
}

/// Orders assigns so each comes after every assign it reads from; ties are
/// broken by creation order so the result is stable.
fn order_assigns(assigns: Vec<ContAssign>, signals: &[Signal]) -> EResult<Vec<ContAssign>> {
    let n = assigns.len();
    let mut writers: HashMap<SignalId, Vec<usize>> = HashMap::new();
    for (i, a) in assigns.iter().enumerate() {
        writers.entry(a.target.signal()).or_default().push(i);
    }
    let mut succ: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for (j, a) in assigns.iter().enumerate() {
        let mut reads = Vec::new();
        a.value.for_each_signal(&mut |id| reads.push(id));
        a.target.for_each_index_signal(&mut |id| reads.push(id));
        for id in reads {
            for &i in writers.get(&id).map(Vec::as_slice).unwrap_or(&[]) {
                if i == j {
                    return Err(comb_cycle(&assigns[j], signals));
                }
                succ[i].insert(j);
            }
        }
    }
    let mut indegree = vec![0usize; n];
    for s in &succ {
        for &j in s {
            indegree[j] += 1;
        }
    }
    let mut ready: BinaryHeap<Reverse<usize>> = (0..n).filter(|&i| indegree[i] == 0).map(Reverse).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(Reverse(i)) = ready.pop() {
        order.push(i);
        for &j in &succ[i] {
            indegree[j] -= 1;
            if indegree[j] == 0 {
                ready.push(Reverse(j));
            }
        }
    }
    if order.len() < n {
        let stuck = (0..n).find(|&i| indegree[i] > 0).unwrap_or(0);
        return Err(comb_cycle(&assigns[stuck], signals));
    }
    let mut slots: Vec<Option<ContAssign>> = assigns.into_iter().map(Some).collect();
    Ok(order
        .into_iter()
        .map(|i| slots[i].take().expect("each index once"))
        .collect())
}

fn comb_cycle(a: &ContAssign, signals: &[Signal]) -> ElaborationError {
    ElaborationError::new(
        ElabErrorKind::CombCycle,
        a.span,
        format!(
            "combinational loop through `{}`",
            signals[a.target.signal().index()].name
        ),
    )
}

fn fingerprint(n: &Netlist) -> u64 {
    let mut h = Sha256::new();
    for s in &n.signals {
        h.update(format!("s {} {} {} {}\n", s.name, s.width, s.kind.as_str(), s.init));
    }
    for p in &n.cov_points {
        h.update(format!("p {} {} {} {}\n", p.kind.as_str(), p.span, p.scope, p.weight));
    }
    h.update(format!(
        "a {} {} {}\n",
        n.assertions.len(),
        n.processes.len(),
        n.cont_assigns.len()
    ));
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("sha256 digest is 32 bytes"))
}

/// Elaborates `spec.top` into a flattened, instrumented netlist.
pub fn elaborate(modules: &[SourceModule], spec: &DesignSpec) -> Result<Netlist, ElaborationError> {
    let top = modules.iter().find(|m| m.name == spec.top).ok_or_else(|| {
        ElaborationError::new(
            ElabErrorKind::MissingModule,
            Span::default(),
            format!("top module `{}` is not defined", spec.top),
        )
    })?;
    for p in &spec.ports {
        match top.port(&p.name) {
            Some(d) if d.direction == p.direction && d.width == p.width => {}
            _ => {
                return Err(ElaborationError::new(
                    ElabErrorKind::PortConnectionMismatch,
                    top.span,
                    format!("port `{}` of the spec does not match module `{}`", p.name, top.name),
                ))
            }
        }
    }
    if top.ports.len() != spec.ports.len() {
        return Err(ElaborationError::new(
            ElabErrorKind::PortConnectionMismatch,
            top.span,
            format!("module `{}` has ports the spec does not list", top.name),
        ));
    }
    let mut b = Builder::new(modules, false);
    b.top(&spec.top)?;
    let clock = b.names[&spec.clock];
    let reset = b.names[&spec.reset];
    b.finish(&spec.top, Some(spec.clone()), clock, Some(reset), &[])
}
