//! Flattened, instrumented executable model.

use std::collections::HashMap;
use std::fmt;

use crate::rtl::{BinaryOp, DesignSpec, Edge, NetKind, Span, UnaryOp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SignalId(pub u32);

impl SignalId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Dense coverage point index.
pub type PointId = u32;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Signal {
    /// Hierarchical name; instance signals are `inst.signal`.
    pub name: String,
    pub width: u32,
    pub kind: NetKind,
    pub init: u64,
}

#[inline]
pub fn mask(width: u32) -> u64 {
    if width >= 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IrExpr {
    Const {
        value: u64,
        width: u32,
    },
    Signal {
        id: SignalId,
        width: u32,
    },
    /// Dynamic single-bit select.
    Index {
        id: SignalId,
        index: Box<IrExpr>,
        base_width: u32,
    },
    Slice {
        id: SignalId,
        lsb: u32,
        width: u32,
    },
    /// Most significant part first.
    Concat {
        parts: Vec<IrExpr>,
        width: u32,
    },
    Unary {
        op: UnaryOp,
        arg: Box<IrExpr>,
        width: u32,
    },
    Binary {
        op: BinaryOp,
        lhs: Box<IrExpr>,
        rhs: Box<IrExpr>,
        width: u32,
    },
    Ternary {
        cond: Box<IrExpr>,
        then: Box<IrExpr>,
        otherwise: Box<IrExpr>,
        width: u32,
    },
}

impl IrExpr {
    pub fn width(&self) -> u32 {
        match self {
            IrExpr::Index { .. } => 1,
            IrExpr::Const { width, .. }
            | IrExpr::Signal { width, .. }
            | IrExpr::Slice { width, .. }
            | IrExpr::Concat { width, .. }
            | IrExpr::Unary { width, .. }
            | IrExpr::Binary { width, .. }
            | IrExpr::Ternary { width, .. } => *width,
        }
    }

    pub fn for_each_signal(&self, f: &mut impl FnMut(SignalId)) {
        match self {
            IrExpr::Const { .. } => {}
            IrExpr::Signal { id, .. } | IrExpr::Slice { id, .. } => f(*id),
            IrExpr::Index { id, index, .. } => {
                f(*id);
                index.for_each_signal(f);
            }
            IrExpr::Concat { parts, .. } => parts.iter().for_each(|p| p.for_each_signal(f)),
            IrExpr::Unary { arg, .. } => arg.for_each_signal(f),
            IrExpr::Binary { lhs, rhs, .. } => {
                lhs.for_each_signal(f);
                rhs.for_each_signal(f);
            }
            IrExpr::Ternary {
                cond, then, otherwise, ..
            } => {
                cond.for_each_signal(f);
                then.for_each_signal(f);
                otherwise.for_each_signal(f);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IrLValue {
    Whole(SignalId),
    Bit(SignalId, Box<IrExpr>),
    Slice { id: SignalId, lsb: u32, width: u32 },
}

impl IrLValue {
    pub fn signal(&self) -> SignalId {
        match self {
            IrLValue::Whole(id) | IrLValue::Bit(id, _) | IrLValue::Slice { id, .. } => *id,
        }
    }

    /// Signals read while resolving the target (dynamic bit index).
    pub fn for_each_index_signal(&self, f: &mut impl FnMut(SignalId)) {
        if let IrLValue::Bit(_, idx) = self {
            idx.for_each_signal(f);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IrCaseItem {
    pub labels: Vec<IrExpr>,
    pub body: IrStmt,
    pub point: PointId,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IrStmt {
    Assign {
        target: IrLValue,
        value: IrExpr,
        nonblocking: bool,
        point: PointId,
        span: Span,
    },
    If {
        cond: IrExpr,
        then_branch: Box<IrStmt>,
        else_branch: Option<Box<IrStmt>>,
        point: PointId,
        true_point: PointId,
        false_point: PointId,
        span: Span,
    },
    Case {
        subject: IrExpr,
        items: Vec<IrCaseItem>,
        default: Option<(Box<IrStmt>, PointId)>,
        point: PointId,
        span: Span,
    },
    Block(Vec<IrStmt>),
    Nop,
}

impl IrStmt {
    pub fn for_each_target(&self, f: &mut impl FnMut(SignalId)) {
        match self {
            IrStmt::Assign { target, .. } => f(target.signal()),
            IrStmt::If {
                then_branch,
                else_branch,
                ..
            } => {
                then_branch.for_each_target(f);
                if let Some(e) = else_branch {
                    e.for_each_target(f);
                }
            }
            IrStmt::Case { items, default, .. } => {
                items.iter().for_each(|i| i.body.for_each_target(f));
                if let Some((d, _)) = default {
                    d.for_each_target(f);
                }
            }
            IrStmt::Block(body) => body.iter().for_each(|s| s.for_each_target(f)),
            IrStmt::Nop => {}
        }
    }

    /// Every signal read by the statement tree: conditions, case labels,
    /// right-hand sides and dynamic target indices.
    pub fn for_each_read(&self, f: &mut impl FnMut(SignalId)) {
        match self {
            IrStmt::Assign { target, value, .. } => {
                target.for_each_index_signal(f);
                value.for_each_signal(f);
            }
            IrStmt::If {
                cond,
                then_branch,
                else_branch,
                ..
            } => {
                cond.for_each_signal(f);
                then_branch.for_each_read(f);
                if let Some(e) = else_branch {
                    e.for_each_read(f);
                }
            }
            IrStmt::Case {
                subject,
                items,
                default,
                ..
            } => {
                subject.for_each_signal(f);
                for item in items {
                    item.labels.iter().for_each(|l| l.for_each_signal(f));
                    item.body.for_each_read(f);
                }
                if let Some((d, _)) = default {
                    d.for_each_read(f);
                }
            }
            IrStmt::Block(body) => body.iter().for_each(|s| s.for_each_read(f)),
            IrStmt::Nop => {}
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Process {
    pub sensitivity: Vec<(Edge, SignalId)>,
    pub body: IrStmt,
    /// Coverage points owned by this process, ascending.
    pub points: Vec<PointId>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContAssign {
    pub target: IrLValue,
    pub value: IrExpr,
    /// `None` for the implicit assigns that bind instance ports.
    pub point: Option<PointId>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assertion {
    pub id: usize,
    /// Hierarchical scope of the declaring module ("" for the top).
    pub scope: String,
    pub clock: SignalId,
    pub disable: Option<IrExpr>,
    pub antecedent: IrExpr,
    pub consequent: IrExpr,
    pub span: Span,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PointKind {
    Statement,
    BranchTrue,
    BranchFalse,
    CaseItem,
    CaseDefault,
    ContAssign,
}

impl PointKind {
    /// Statement-like points count towards line coverage.
    pub fn is_statement(self) -> bool {
        matches!(self, PointKind::Statement | PointKind::ContAssign)
    }

    pub fn is_branch(self) -> bool {
        !self.is_statement()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PointKind::Statement => "statement",
            PointKind::BranchTrue => "branch-true",
            PointKind::BranchFalse => "branch-false",
            PointKind::CaseItem => "case-item",
            PointKind::CaseDefault => "case-default",
            PointKind::ContAssign => "cont-assign",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CovPoint {
    pub id: PointId,
    pub kind: PointKind,
    pub span: Span,
    pub scope: String,
    /// Assertion-adjacency weight used by the tortoise engine.
    pub weight: u32,
}

#[derive(Debug, Clone)]
pub struct Netlist {
    /// Name of the elaborated top module.
    pub top: String,
    pub signals: Vec<Signal>,
    pub processes: Vec<Process>,
    /// Topologically ordered: every assign comes after the assigns it reads.
    pub cont_assigns: Vec<ContAssign>,
    pub assertions: Vec<Assertion>,
    pub cov_points: Vec<CovPoint>,
    /// `None` for testbench netlists, which have no external ports.
    pub spec: Option<DesignSpec>,
    pub clock: SignalId,
    pub reset: Option<SignalId>,
    /// Stimulus inputs in `DesignSpec::stimulus_ports` order.
    pub stimulus_inputs: Vec<SignalId>,
    /// Structural fingerprint used to guard coverage snapshot merges.
    pub hash: u64,
    pub(crate) names: HashMap<String, SignalId>,
}

impl Netlist {
    pub fn signal_id(&self, name: &str) -> Option<SignalId> {
        self.names.get(name).copied()
    }

    pub fn signal(&self, id: SignalId) -> &Signal {
        &self.signals[id.index()]
    }

    pub fn spec(&self) -> &DesignSpec {
        self.spec.as_ref().expect("testbench netlists have no design spec")
    }

    pub fn statement_points(&self) -> usize {
        self.cov_points.iter().filter(|p| p.kind.is_statement()).count()
    }

    pub fn branch_points(&self) -> usize {
        self.cov_points.iter().filter(|p| p.kind.is_branch()).count()
    }
}

impl fmt::Display for SignalId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s{}", self.0)
    }
}
