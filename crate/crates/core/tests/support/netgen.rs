//! Random generator of small flat single-process designs.

#![allow(dead_code)]

use rand::{Rng, RngExt};

use hwfuzz_core::rtl::{
    AlwaysBlock, AssertionDecl, BinaryOp, CaseItem, ContAssign, Direction, Edge, Expr, LValue, ModuleItem, NetDecl,
    NetKind, PortDecl, Sensitivity, SourceModule, Span, Stmt, UnaryOp,
};

const UNARY: [UnaryOp; 6] = [
    UnaryOp::Not,
    UnaryOp::LogicNot,
    UnaryOp::Neg,
    UnaryOp::RedAnd,
    UnaryOp::RedOr,
    UnaryOp::RedXor,
];

const SAFE_BINARY: [BinaryOp; 16] = [
    BinaryOp::Add,
    BinaryOp::Sub,
    BinaryOp::Mul,
    BinaryOp::And,
    BinaryOp::Or,
    BinaryOp::Xor,
    BinaryOp::LogicAnd,
    BinaryOp::LogicOr,
    BinaryOp::Eq,
    BinaryOp::Ne,
    BinaryOp::Lt,
    BinaryOp::Le,
    BinaryOp::Gt,
    BinaryOp::Ge,
    BinaryOp::Shl,
    BinaryOp::Shr,
];

struct Gen<'r, R: Rng> {
    rng: &'r mut R,
    /// Readable signals with their widths.
    readable: Vec<(String, u32)>,
    regs: Vec<(String, u32)>,
    statements: usize,
}

impl<R: Rng> Gen<'_, R> {
    fn pick(&mut self) -> (String, u32) {
        let i = self.rng.random_range(0..self.readable.len());
        self.readable[i].clone()
    }

    fn sized(&mut self) -> Expr {
        let w = self.rng.random_range(1..=8u32);
        Expr::sized(self.rng.random_range(0..1u64 << w), w)
    }

    fn leaf(&mut self, traps: bool) -> Expr {
        match self.rng.random_range(0..10) {
            0 => self.sized(),
            1 => Expr::unsized_lit(self.rng.random_range(0..20)),
            2 => {
                let (n, w) = self.pick();
                Expr::Index(n, Box::new(Expr::unsized_lit(self.rng.random_range(0..w) as u64)))
            }
            3 => {
                let (n, w) = self.pick();
                let lo = self.rng.random_range(0..w);
                let hi = self.rng.random_range(lo..w);
                Expr::Slice(n, hi, lo)
            }
            4 if traps => {
                let (n, _) = self.pick();
                let (i, _) = self.pick();
                Expr::Index(n, Box::new(Expr::Ident(i)))
            }
            _ => Expr::Ident(self.pick().0),
        }
    }

    fn concat_part(&mut self) -> Expr {
        match self.rng.random_range(0..3) {
            0 => self.sized(),
            1 => {
                let (n, w) = self.pick();
                let lo = self.rng.random_range(0..w);
                Expr::Slice(n, w - 1, lo)
            }
            _ => Expr::Ident(self.pick().0),
        }
    }

    fn expr(&mut self, depth: u32, traps: bool) -> Expr {
        if depth == 0 || self.rng.random_bool(0.3) {
            return self.leaf(traps);
        }
        match self.rng.random_range(0..10) {
            0 | 1 => {
                let op = UNARY[self.rng.random_range(0..UNARY.len())];
                Expr::unary(op, self.expr(depth - 1, traps))
            }
            2 => Expr::Ternary(
                Box::new(self.expr(depth - 1, traps)),
                Box::new(self.expr(depth - 1, traps)),
                Box::new(self.expr(depth - 1, traps)),
            ),
            3 => {
                let n = self.rng.random_range(2..=3);
                Expr::Concat((0..n).map(|_| self.concat_part()).collect())
            }
            4 if traps => {
                let op = if self.rng.random_bool(0.5) {
                    BinaryOp::Div
                } else {
                    BinaryOp::Mod
                };
                Expr::binary(op, self.expr(depth - 1, traps), self.expr(depth - 1, traps))
            }
            _ => {
                let op = SAFE_BINARY[self.rng.random_range(0..SAFE_BINARY.len())];
                Expr::binary(op, self.expr(depth - 1, traps), self.expr(depth - 1, traps))
            }
        }
    }

    fn lvalue(&mut self) -> LValue {
        let i = self.rng.random_range(0..self.regs.len());
        let (n, w) = self.regs[i].clone();
        match self.rng.random_range(0..6) {
            0 => LValue::Index(n, Box::new(Expr::unsized_lit(self.rng.random_range(0..w) as u64))),
            1 => {
                let (idx, _) = self.pick();
                LValue::Index(n, Box::new(Expr::Ident(idx)))
            }
            2 => {
                let lo = self.rng.random_range(0..w);
                let hi = self.rng.random_range(lo..w);
                LValue::Slice(n, hi, lo)
            }
            _ => LValue::Ident(n),
        }
    }

    fn block(&mut self, depth: u32) -> Stmt {
        let n = self.rng.random_range(1..=3);
        let body: Vec<Stmt> = (0..n).map(|_| self.stmt(depth)).collect();
        Stmt::Block(body, Span::default())
    }

    fn stmt(&mut self, depth: u32) -> Stmt {
        if self.statements >= 8 {
            return Stmt::Null(Span::default());
        }
        self.statements += 1;
        let span = Span::default();
        match self.rng.random_range(0..8) {
            0 if depth > 0 => Stmt::If {
                cond: self.expr(2, true),
                then_branch: Box::new(self.block(depth - 1)),
                else_branch: if self.rng.random_bool(0.6) {
                    Some(Box::new(self.block(depth - 1)))
                } else {
                    None
                },
                span,
            },
            1 if depth > 0 => {
                let n = self.rng.random_range(1..=3);
                let items = (0..n)
                    .map(|_| CaseItem {
                        labels: vec![self.sized()],
                        body: self.block(depth - 1),
                        span,
                    })
                    .collect();
                Stmt::Case {
                    subject: self.expr(2, true),
                    items,
                    default: if self.rng.random_bool(0.5) {
                        Some(Box::new(self.block(depth - 1)))
                    } else {
                        None
                    },
                    span,
                }
            }
            2..=4 => Stmt::NonBlocking(self.lvalue(), self.expr(3, true), span),
            _ => Stmt::Blocking(self.lvalue(), self.expr(3, true), span),
        }
    }
}

/// A random module `gen_top` with a clock, a reset, one or two data inputs,
/// up to three registers written by a single process, one output driven by
/// a continuous assign and an optional assertion.
pub fn random_module(rng: &mut impl Rng) -> SourceModule {
    let span = Span::default();
    let active_low = rng.random_bool(0.3);
    let reset = if active_low { "rst_n" } else { "rst" };
    let mut ports = vec![
        port("clk", Direction::Input, 1, NetKind::Wire),
        port(reset, Direction::Input, 1, NetKind::Wire),
    ];
    let mut readable = vec![(reset.to_string(), 1)];
    for i in 0..rng.random_range(1..=2) {
        let w = rng.random_range(1..=8);
        ports.push(port(&format!("in{i}"), Direction::Input, w, NetKind::Wire));
        readable.push((format!("in{i}"), w));
    }
    let out_w = rng.random_range(1..=8);
    ports.push(port("o", Direction::Output, out_w, NetKind::Wire));

    let mut items = Vec::new();
    let mut regs = Vec::new();
    for i in 0..rng.random_range(1..=3) {
        let w = rng.random_range(1..=8);
        let name = format!("r{i}");
        let init = rng
            .random_bool(0.5)
            .then(|| Expr::sized(rng.random_range(0..1u64 << w), w));
        items.push(ModuleItem::Net(NetDecl {
            name: name.clone(),
            kind: NetKind::Reg,
            width: w,
            init,
            span,
        }));
        regs.push((name, w));
    }
    readable.extend(regs.iter().cloned());

    let mut g = Gen {
        rng,
        readable,
        regs,
        statements: 0,
    };
    items.push(ModuleItem::Assign(ContAssign {
        target: LValue::Ident("o".into()),
        expr: g.expr(3, false),
        span,
    }));
    g.readable.push(("o".into(), out_w));

    let mut sensitivity = vec![(Edge::Posedge, "clk".to_string())];
    if g.rng.random_bool(0.3) {
        let edge = if active_low { Edge::Negedge } else { Edge::Posedge };
        sensitivity.push((edge, reset.to_string()));
    }
    let body = g.block(2);
    items.push(ModuleItem::Always(AlwaysBlock {
        sensitivity: Sensitivity::Edges(sensitivity),
        body,
        span,
    }));
    if g.rng.random_bool(0.5) {
        let disable_expr = g.rng.random_bool(0.5).then(|| {
            let e = Expr::Ident(reset.to_string());
            if active_low {
                Expr::unary(UnaryOp::LogicNot, e)
            } else {
                e
            }
        });
        items.push(ModuleItem::Assert(AssertionDecl {
            id: 0,
            clock_edge: (Edge::Posedge, "clk".into()),
            disable_expr,
            antecedent: g.expr(2, false),
            consequent: g.expr(2, false),
            span,
        }));
    }
    SourceModule {
        name: "gen_top".into(),
        ports,
        items,
        span,
    }
}

fn port(name: &str, direction: Direction, width: u32, kind: NetKind) -> PortDecl {
    PortDecl {
        name: name.into(),
        direction,
        width,
        kind,
        span: Span::default(),
    }
}
