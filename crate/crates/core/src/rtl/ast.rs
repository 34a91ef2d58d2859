//! Syntax tree for the supported Verilog subset.

use std::fmt;

/// Source position (1-based line and column).
///
/// Spans are metadata: two nodes that differ only in their spans compare
/// equal, so a re-parsed pretty-printed module equals the original.
#[derive(Debug, Clone, Copy, Default, Eq)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

impl PartialEq for Span {
    fn eq(&self, _other: &Self) -> bool {
        true
    }
}

impl std::hash::Hash for Span {
    fn hash<H: std::hash::Hasher>(&self, _state: &mut H) {}
}

impl Span {
    pub fn new(line: u32, col: u32) -> Self {
        Span { line, col }
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Input,
    Output,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Input => "in",
            Direction::Output => "out",
        }
    }

    /// The Verilog keyword.
    pub fn keyword(self) -> &'static str {
        match self {
            Direction::Input => "input",
            Direction::Output => "output",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NetKind {
    Wire,
    Reg,
}

impl NetKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NetKind::Wire => "wire",
            NetKind::Reg => "reg",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PortDecl {
    pub name: String,
    pub direction: Direction,
    pub width: u32,
    pub kind: NetKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceModule {
    pub name: String,
    pub ports: Vec<PortDecl>,
    pub items: Vec<ModuleItem>,
    pub span: Span,
}

impl SourceModule {
    pub fn port(&self, name: &str) -> Option<&PortDecl> {
        self.ports.iter().find(|p| p.name == name)
    }

    pub fn assertions(&self) -> impl Iterator<Item = &AssertionDecl> {
        self.items.iter().filter_map(|item| match item {
            ModuleItem::Assert(a) => Some(a),
            _ => None,
        })
    }

    pub fn instances(&self) -> impl Iterator<Item = &Instance> {
        self.items.iter().filter_map(|item| match item {
            ModuleItem::Instance(i) => Some(i),
            _ => None,
        })
    }

    /// True when the module carries testbench-only constructs (`initial`
    /// blocks or delay-driven `always`).
    pub fn is_testbench(&self) -> bool {
        self.items.iter().any(|item| match item {
            ModuleItem::Initial(_) => true,
            ModuleItem::Always(a) => matches!(a.sensitivity, Sensitivity::Delay(_)),
            _ => false,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ModuleItem {
    Net(NetDecl),
    LocalParam(LocalParam),
    Assign(ContAssign),
    Always(AlwaysBlock),
    Initial(InitialBlock),
    Instance(Instance),
    Assert(AssertionDecl),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetDecl {
    pub name: String,
    pub kind: NetKind,
    pub width: u32,
    pub init: Option<Expr>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalParam {
    pub name: String,
    pub value: Expr,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContAssign {
    pub target: LValue,
    pub expr: Expr,
    pub span: Span,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Edge {
    Posedge,
    Negedge,
}

impl Edge {
    pub fn as_str(self) -> &'static str {
        match self {
            Edge::Posedge => "posedge",
            Edge::Negedge => "negedge",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sensitivity {
    /// `@(posedge a or negedge b)`
    Edges(Vec<(Edge, String)>),
    /// `#N` (testbench clock generators only)
    Delay(u64),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlwaysBlock {
    pub sensitivity: Sensitivity,
    pub body: Stmt,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InitialBlock {
    pub body: Stmt,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub module: String,
    pub name: String,
    /// Named connections `.port(expr)`; `None` for `.port()`.
    pub connections: Vec<(String, Option<Expr>)>,
    pub span: Span,
}

/// `assert property (@(edge clk) disable iff (d) a |-> c);`
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssertionDecl {
    pub id: usize,
    pub clock_edge: (Edge, String),
    pub disable_expr: Option<Expr>,
    pub antecedent: Expr,
    pub consequent: Expr,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CaseItem {
    pub labels: Vec<Expr>,
    pub body: Stmt,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Stmt {
    Block(Vec<Stmt>, Span),
    Blocking(LValue, Expr, Span),
    NonBlocking(LValue, Expr, Span),
    If {
        cond: Expr,
        then_branch: Box<Stmt>,
        else_branch: Option<Box<Stmt>>,
        span: Span,
    },
    Case {
        subject: Expr,
        items: Vec<CaseItem>,
        default: Option<Box<Stmt>>,
        span: Span,
    },
    /// `;`
    Null(Span),
    /// `@(posedge clk);` (testbench only)
    Wait(Edge, String, Span),
    /// `#N;` (testbench only)
    Delay(u64, Span),
    /// `$finish;` (testbench only)
    Finish(Span),
}

impl Stmt {
    pub fn span(&self) -> Span {
        match self {
            Stmt::Block(_, s)
            | Stmt::Blocking(_, _, s)
            | Stmt::NonBlocking(_, _, s)
            | Stmt::Null(s)
            | Stmt::Wait(_, _, s)
            | Stmt::Delay(_, s)
            | Stmt::Finish(s) => *s,
            Stmt::If { span, .. } | Stmt::Case { span, .. } => *span,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LValue {
    Ident(String),
    Index(String, Box<Expr>),
    Slice(String, u32, u32),
}

impl LValue {
    pub fn name(&self) -> &str {
        match self {
            LValue::Ident(n) | LValue::Index(n, _) | LValue::Slice(n, _, _) => n,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Not,
    LogicNot,
    Neg,
    RedAnd,
    RedOr,
    RedXor,
}

impl UnaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            UnaryOp::Not => "~",
            UnaryOp::LogicNot => "!",
            UnaryOp::Neg => "-",
            UnaryOp::RedAnd => "&",
            UnaryOp::RedOr => "|",
            UnaryOp::RedXor => "^",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    And,
    Or,
    Xor,
    LogicAnd,
    LogicOr,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Shl,
    Shr,
}

impl BinaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Mod => "%",
            BinaryOp::And => "&",
            BinaryOp::Or => "|",
            BinaryOp::Xor => "^",
            BinaryOp::LogicAnd => "&&",
            BinaryOp::LogicOr => "||",
            BinaryOp::Eq => "==",
            BinaryOp::Ne => "!=",
            BinaryOp::Lt => "<",
            BinaryOp::Le => "<=",
            BinaryOp::Gt => ">",
            BinaryOp::Ge => ">=",
            BinaryOp::Shl => "<<",
            BinaryOp::Shr => ">>",
        }
    }

    /// Binding strength; larger binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinaryOp::Mul | BinaryOp::Div | BinaryOp::Mod => 10,
            BinaryOp::Add | BinaryOp::Sub => 9,
            BinaryOp::Shl | BinaryOp::Shr => 8,
            BinaryOp::Lt | BinaryOp::Le | BinaryOp::Gt | BinaryOp::Ge => 7,
            BinaryOp::Eq | BinaryOp::Ne => 6,
            BinaryOp::And => 5,
            BinaryOp::Xor => 4,
            BinaryOp::Or => 3,
            BinaryOp::LogicAnd => 2,
            BinaryOp::LogicOr => 1,
        }
    }

    /// Comparison and logical operators produce a single bit.
    pub fn is_boolean(self) -> bool {
        matches!(
            self,
            BinaryOp::LogicAnd
                | BinaryOp::LogicOr
                | BinaryOp::Eq
                | BinaryOp::Ne
                | BinaryOp::Lt
                | BinaryOp::Le
                | BinaryOp::Gt
                | BinaryOp::Ge
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Base {
    Bin,
    Dec,
    Hex,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    /// `width` is `None` for unsized literals, which are 32 bits wide.
    Literal {
        value: u64,
        width: Option<u32>,
        base: Base,
    },
    Ident(String),
    Index(String, Box<Expr>),
    Slice(String, u32, u32),
    Concat(Vec<Expr>),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
    Ternary(Box<Expr>, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn sized(value: u64, width: u32) -> Self {
        Expr::Literal {
            value,
            width: Some(width),
            base: Base::Hex,
        }
    }

    pub fn unsized_lit(value: u64) -> Self {
        Expr::Literal {
            value,
            width: None,
            base: Base::Dec,
        }
    }

    pub fn ident(name: impl Into<String>) -> Self {
        Expr::Ident(name.into())
    }

    pub fn binary(op: BinaryOp, lhs: Expr, rhs: Expr) -> Self {
        Expr::Binary(op, Box::new(lhs), Box::new(rhs))
    }

    pub fn unary(op: UnaryOp, e: Expr) -> Self {
        Expr::Unary(op, Box::new(e))
    }

    /// Visits every identifier this expression reads.
    pub fn for_each_ident<'a>(&'a self, f: &mut dyn FnMut(&'a str)) {
        match self {
            Expr::Literal { .. } => {}
            Expr::Ident(n) | Expr::Slice(n, _, _) => f(n),
            Expr::Index(n, i) => {
                f(n);
                i.for_each_ident(f);
            }
            Expr::Concat(parts) => parts.iter().for_each(|p| p.for_each_ident(f)),
            Expr::Unary(_, e) => e.for_each_ident(f),
            Expr::Binary(_, l, r) => {
                l.for_each_ident(f);
                r.for_each_ident(f);
            }
            Expr::Ternary(c, t, e) => {
                c.for_each_ident(f);
                t.for_each_ident(f);
                e.for_each_ident(f);
            }
        }
    }
}
