//! Recursive-descent parser for the supported Verilog subset.
//!
//! Anything outside the subset is rejected with
//! [`ParseErrorKind::Unsupported`] rather than being skipped, so a design
//! that parses is a design the simulator understands.

use std::collections::{HashMap, HashSet};

use super::ast::*;
use super::error::{ParseError, ParseErrorKind};
use super::lexer::{tokenize, Tok, Token};

/// Parses every module in `source`.
pub fn parse(source: &str) -> Result<Vec<SourceModule>, ParseError> {
    let tokens = tokenize(source)?;
    let mut parser = Parser { tokens, pos: 0 };
    let mut modules: Vec<SourceModule> = Vec::new();
    while !parser.at_eof() {
        let module = parser.module()?;
        if modules.iter().any(|m| m.name == module.name) {
            return Err(ParseError::new(
                ParseErrorKind::DuplicateName,
                module.span,
                format!("module `{}` is defined twice", module.name),
            ));
        }
        resolve_names(&module)?;
        modules.push(module);
    }
    Ok(modules)
}

const UNSUPPORTED_KEYWORDS: &[&str] = &[
    "function",
    "task",
    "generate",
    "endgenerate",
    "genvar",
    "integer",
    "real",
    "time",
    "for",
    "while",
    "repeat",
    "forever",
    "fork",
    "join",
    "casez",
    "casex",
    "inout",
    "parameter",
    "defparam",
    "specify",
    "primitive",
    "supply0",
    "supply1",
    "tri",
    "wand",
    "wor",
    "logic",
    "always_ff",
    "always_comb",
    "always_latch",
    "signed",
    "wait",
    "force",
    "release",
    "assume",
    "cover",
    "property",
    "sequence",
    "interface",
    "package",
    "typedef",
    "enum",
    "struct",
];

const RESERVED: &[&str] = &[
    "module",
    "endmodule",
    "input",
    "output",
    "wire",
    "reg",
    "assign",
    "always",
    "initial",
    "begin",
    "end",
    "if",
    "else",
    "case",
    "endcase",
    "default",
    "posedge",
    "negedge",
    "or",
    "localparam",
    "assert",
    "disable",
    "iff",
];

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek_at(&self, ahead: usize) -> &Tok {
        let i = (self.pos + ahead).min(self.tokens.len() - 1);
        &self.tokens[i].tok
    }

    fn span(&self) -> Span {
        self.tokens[self.pos].span
    }

    fn at_eof(&self) -> bool {
        matches!(self.peek(), Tok::Eof)
    }

    fn advance(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(x) if x == kw)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn unexpected(&self, expected: &[&str]) -> ParseError {
        let tok = self.peek();
        if let Tok::Ident(w) = tok {
            if UNSUPPORTED_KEYWORDS.contains(&w.as_str()) {
                return ParseError::new(
                    ParseErrorKind::Unsupported,
                    self.span(),
                    format!("`{w}` is not supported"),
                );
            }
        }
        if let Tok::Sym(s) = tok {
            if matches!(
                *s,
                "|=>" | "<<<" | ">>>" | "===" | "!==" | "~&" | "~|" | "~^" | "^~" | "**"
            ) {
                return ParseError::new(
                    ParseErrorKind::Unsupported,
                    self.span(),
                    format!("operator `{s}` is not supported"),
                );
            }
        }
        ParseError::new(
            ParseErrorKind::Syntax,
            self.span(),
            format!("unexpected {}", tok.describe()),
        )
        .with_expected(expected)
    }

    fn unsupported(&self, what: &str) -> ParseError {
        ParseError::new(
            ParseErrorKind::Unsupported,
            self.span(),
            format!("{what} is not supported"),
        )
    }

    fn expect_sym(&mut self, s: &'static str) -> PResult<Span> {
        if self.is_sym(s) {
            Ok(self.advance().span)
        } else {
            Err(self.unexpected(&[s]))
        }
    }

    fn expect_kw(&mut self, kw: &'static str) -> PResult<Span> {
        if self.is_kw(kw) {
            Ok(self.advance().span)
        } else {
            Err(self.unexpected(&[kw]))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek() {
            Tok::Ident(name) if !RESERVED.contains(&name.as_str()) => {
                if UNSUPPORTED_KEYWORDS.contains(&name.as_str()) {
                    return Err(self.unexpected(&["identifier"]));
                }
                let name = name.clone();
                self.advance();
                Ok(name)
            }
            _ => Err(self.unexpected(&["identifier"])),
        }
    }

    fn number(&mut self) -> PResult<u64> {
        match self.peek() {
            Tok::Number { value, .. } => {
                let v = *value;
                self.advance();
                Ok(v)
            }
            _ => Err(self.unexpected(&["number"])),
        }
    }

    fn module(&mut self) -> PResult<SourceModule> {
        let span = self.expect_kw("module")?;
        let name = self.ident()?;
        if self.is_sym("#") {
            return Err(self.unsupported("module parameters"));
        }
        let mut ports = Vec::new();
        if self.eat_sym("(") {
            if !self.is_sym(")") {
                ports = self.port_list()?;
            }
            self.expect_sym(")")?;
        }
        self.expect_sym(";")?;
        let mut items = Vec::new();
        let mut assertion_id = 0;
        while !self.eat_kw("endmodule") {
            if self.at_eof() {
                return Err(self.unexpected(&["endmodule"]));
            }
            self.item(&mut items, &mut assertion_id)?;
        }
        Ok(SourceModule {
            name,
            ports,
            items,
            span,
        })
    }

    fn port_list(&mut self) -> PResult<Vec<PortDecl>> {
        let mut ports: Vec<PortDecl> = Vec::new();
        loop {
            let span = self.span();
            let (direction, kind, width) = if self.eat_kw("input") {
                if self.is_kw("reg") {
                    return Err(ParseError::new(
                        ParseErrorKind::Syntax,
                        self.span(),
                        "input ports cannot be declared `reg`",
                    ));
                }
                self.eat_kw("wire");
                (Direction::Input, NetKind::Wire, self.opt_range()?)
            } else if self.eat_kw("output") {
                let kind = if self.eat_kw("reg") {
                    NetKind::Reg
                } else {
                    self.eat_kw("wire");
                    NetKind::Wire
                };
                (Direction::Output, kind, self.opt_range()?)
            } else if let Some(prev) = ports.last() {
                (prev.direction, prev.kind, prev.width)
            } else if matches!(self.peek(), Tok::Ident(_)) && !self.is_kw("inout") {
                return Err(self.unsupported("non-ANSI port declarations"));
            } else {
                return Err(self.unexpected(&["input", "output"]));
            };
            let name = self.ident()?;
            if ports.iter().any(|p| p.name == name) {
                return Err(ParseError::new(
                    ParseErrorKind::DuplicateName,
                    span,
                    format!("port `{name}` is declared twice"),
                ));
            }
            ports.push(PortDecl {
                name,
                direction,
                width,
                kind,
                span,
            });
            if !self.eat_sym(",") {
                return Ok(ports);
            }
        }
    }

    /// `[msb:0]`, or width 1 when absent.
    fn opt_range(&mut self) -> PResult<u32> {
        if !self.is_sym("[") {
            return Ok(1);
        }
        let span = self.advance().span;
        let msb = self.number()?;
        self.expect_sym(":")?;
        let lsb = self.number()?;
        self.expect_sym("]")?;
        if lsb != 0 {
            return Err(ParseError::new(
                ParseErrorKind::Unsupported,
                span,
                "ranges must be of the form [msb:0]",
            ));
        }
        if msb >= 64 {
            return Err(ParseError::new(
                ParseErrorKind::Unsupported,
                span,
                format!("vectors wider than 64 bits ([{msb}:0]) are not supported"),
            ));
        }
        Ok(msb as u32 + 1)
    }

    fn item(&mut self, items: &mut Vec<ModuleItem>, assertion_id: &mut usize) -> PResult<()> {
        let span = self.span();
        let Tok::Ident(word) = self.peek().clone() else {
            return Err(self.unexpected(&["module item"]));
        };
        match word.as_str() {
            "wire" | "reg" => {
                self.advance();
                let kind = if word == "wire" { NetKind::Wire } else { NetKind::Reg };
                if self.is_sym("[") && matches!(self.peek_at(1), Tok::Ident(_)) {
                    return Err(self.unsupported("non-constant ranges"));
                }
                let width = self.opt_range()?;
                loop {
                    let span = self.span();
                    let name = self.ident()?;
                    if self.is_sym("[") {
                        return Err(self.unsupported("memories/arrays"));
                    }
                    let init = if self.eat_sym("=") { Some(self.expr()?) } else { None };
                    items.push(ModuleItem::Net(NetDecl {
                        name,
                        kind,
                        width,
                        init,
                        span,
                    }));
                    if !self.eat_sym(",") {
                        break;
                    }
                }
                self.expect_sym(";")?;
            }
            "localparam" => {
                self.advance();
                if self.is_sym("[") {
                    self.opt_range()?;
                }
                loop {
                    let span = self.span();
                    let name = self.ident()?;
                    self.expect_sym("=")?;
                    let value = self.expr()?;
                    items.push(ModuleItem::LocalParam(LocalParam { name, value, span }));
                    if !self.eat_sym(",") {
                        break;
                    }
                }
                self.expect_sym(";")?;
            }
            "assign" => {
                self.advance();
                loop {
                    let span = self.span();
                    let target = self.lvalue()?;
                    self.expect_sym("=")?;
                    let expr = self.expr()?;
                    items.push(ModuleItem::Assign(ContAssign { target, expr, span }));
                    if !self.eat_sym(",") {
                        break;
                    }
                }
                self.expect_sym(";")?;
            }
            "always" => {
                self.advance();
                let sensitivity = if self.eat_sym("#") {
                    Sensitivity::Delay(self.number()?)
                } else {
                    self.expect_sym("@")?;
                    if self.is_sym("*") {
                        return Err(self.unsupported("`@*` combinational always blocks"));
                    }
                    self.expect_sym("(")?;
                    if self.is_sym("*") {
                        return Err(self.unsupported("`@(*)` combinational always blocks"));
                    }
                    let mut list = Vec::new();
                    loop {
                        let edge = self.edge()?;
                        let name = self.ident()?;
                        list.push((edge, name));
                        if !(self.eat_kw("or") || self.eat_sym(",")) {
                            break;
                        }
                    }
                    self.expect_sym(")")?;
                    Sensitivity::Edges(list)
                };
                let body = self.stmt()?;
                items.push(ModuleItem::Always(AlwaysBlock {
                    sensitivity,
                    body,
                    span,
                }));
            }
            "initial" => {
                self.advance();
                let body = self.stmt()?;
                items.push(ModuleItem::Initial(InitialBlock { body, span }));
            }
            "assert" => {
                self.advance();
                let decl = self.assertion(*assertion_id, span)?;
                *assertion_id += 1;
                items.push(ModuleItem::Assert(decl));
            }
            "input" | "output" => return Err(self.unsupported("non-ANSI port declarations")),
            _ if RESERVED.contains(&word.as_str()) || UNSUPPORTED_KEYWORDS.contains(&word.as_str()) => {
                return Err(self.unexpected(&["module item"]));
            }
            _ => {
                // module instantiation
                let module = self.ident()?;
                if self.is_sym("#") {
                    return Err(self.unsupported("parameterized instantiation"));
                }
                let name = self.ident()?;
                self.expect_sym("(")?;
                let mut connections = Vec::new();
                if !self.is_sym(")") {
                    loop {
                        if !self.is_sym(".") {
                            if self.is_sym(")") {
                                break;
                            }
                            return Err(self.unsupported("positional port connections"));
                        }
                        self.advance();
                        let port = self.ident()?;
                        self.expect_sym("(")?;
                        let expr = if self.is_sym(")") { None } else { Some(self.expr()?) };
                        self.expect_sym(")")?;
                        if connections.iter().any(|(p, _): &(String, _)| *p == port) {
                            return Err(ParseError::new(
                                ParseErrorKind::DuplicateName,
                                span,
                                format!("port `{port}` connected twice on `{name}`"),
                            ));
                        }
                        connections.push((port, expr));
                        if !self.eat_sym(",") {
                            break;
                        }
                    }
                }
                self.expect_sym(")")?;
                self.expect_sym(";")?;
                items.push(ModuleItem::Instance(Instance {
                    module,
                    name,
                    connections,
                    span,
                }));
            }
        }
        Ok(())
    }

    fn edge(&mut self) -> PResult<Edge> {
        if self.eat_kw("posedge") {
            Ok(Edge::Posedge)
        } else if self.eat_kw("negedge") {
            Ok(Edge::Negedge)
        } else if matches!(self.peek(), Tok::Ident(_)) {
            Err(self.unsupported("level-sensitive event controls"))
        } else {
            Err(self.unexpected(&["posedge", "negedge"]))
        }
    }

    fn assertion(&mut self, id: usize, span: Span) -> PResult<AssertionDecl> {
        if !self.eat_kw("property") {
            return Err(self.unsupported("immediate assertions"));
        }
        self.expect_sym("(")?;
        self.expect_sym("@")?;
        self.expect_sym("(")?;
        let edge = self.edge()?;
        let clock = self.ident()?;
        self.expect_sym(")")?;
        let disable_expr = if self.eat_kw("disable") {
            self.expect_kw("iff")?;
            self.expect_sym("(")?;
            let e = self.expr()?;
            self.expect_sym(")")?;
            Some(e)
        } else {
            None
        };
        let antecedent = self.expr()?;
        if self.is_sym("|=>") {
            return Err(self.unsupported("non-overlapping implication `|=>`"));
        }
        if !self.eat_sym("|->") {
            if self.is_sym(")") {
                return Err(self.unsupported("assertions without `|->`"));
            }
            return Err(self.unexpected(&["|->"]));
        }
        let consequent = self.expr()?;
        self.expect_sym(")")?;
        if self.is_kw("else") {
            return Err(self.unsupported("assertion action blocks"));
        }
        self.expect_sym(";")?;
        Ok(AssertionDecl {
            id,
            clock_edge: (edge, clock),
            disable_expr,
            antecedent,
            consequent,
            span,
        })
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        let span = self.span();
        match self.peek().clone() {
            Tok::Sym(";") => {
                self.advance();
                Ok(Stmt::Null(span))
            }
            Tok::Sym("@") => {
                self.advance();
                self.expect_sym("(")?;
                let edge = self.edge()?;
                let name = self.ident()?;
                self.expect_sym(")")?;
                self.expect_sym(";")?;
                Ok(Stmt::Wait(edge, name, span))
            }
            Tok::Sym("#") => {
                self.advance();
                let n = self.number()?;
                self.expect_sym(";")?;
                Ok(Stmt::Delay(n, span))
            }
            Tok::System(name) => {
                if name != "finish" {
                    return Err(self.unsupported(&format!("system task `${name}`")));
                }
                self.advance();
                if self.eat_sym("(") {
                    self.expect_sym(")")?;
                }
                self.expect_sym(";")?;
                Ok(Stmt::Finish(span))
            }
            Tok::Ident(w) if w == "begin" => {
                self.advance();
                if self.is_sym(":") {
                    return Err(self.unsupported("named blocks"));
                }
                let mut body = Vec::new();
                while !self.eat_kw("end") {
                    if self.at_eof() {
                        return Err(self.unexpected(&["end"]));
                    }
                    body.push(self.stmt()?);
                }
                Ok(Stmt::Block(body, span))
            }
            Tok::Ident(w) if w == "if" => {
                self.advance();
                self.expect_sym("(")?;
                let cond = self.expr()?;
                self.expect_sym(")")?;
                let then_branch = Box::new(self.stmt()?);
                let else_branch = if self.eat_kw("else") {
                    Some(Box::new(self.stmt()?))
                } else {
                    None
                };
                Ok(Stmt::If {
                    cond,
                    then_branch,
                    else_branch,
                    span,
                })
            }
            Tok::Ident(w) if w == "case" => {
                self.advance();
                self.expect_sym("(")?;
                let subject = self.expr()?;
                self.expect_sym(")")?;
                let mut items = Vec::new();
                let mut default = None;
                while !self.eat_kw("endcase") {
                    if self.at_eof() {
                        return Err(self.unexpected(&["endcase"]));
                    }
                    let item_span = self.span();
                    if self.eat_kw("default") {
                        self.eat_sym(":");
                        if default.is_some() {
                            return Err(ParseError::new(
                                ParseErrorKind::Syntax,
                                item_span,
                                "multiple default items in case",
                            ));
                        }
                        default = Some(Box::new(self.stmt()?));
                        continue;
                    }
                    let mut labels = vec![self.expr()?];
                    while self.eat_sym(",") {
                        labels.push(self.expr()?);
                    }
                    self.expect_sym(":")?;
                    let body = self.stmt()?;
                    items.push(CaseItem {
                        labels,
                        body,
                        span: item_span,
                    });
                }
                Ok(Stmt::Case {
                    subject,
                    items,
                    default,
                    span,
                })
            }
            Tok::Ident(_) => {
                let target = self.lvalue()?;
                let nonblocking = if self.eat_sym("<=") {
                    true
                } else if self.eat_sym("=") {
                    false
                } else {
                    return Err(self.unexpected(&["=", "<="]));
                };
                if self.is_sym("#") || self.is_sym("@") {
                    return Err(self.unsupported("intra-assignment timing controls"));
                }
                let rhs = self.expr()?;
                self.expect_sym(";")?;
                Ok(if nonblocking {
                    Stmt::NonBlocking(target, rhs, span)
                } else {
                    Stmt::Blocking(target, rhs, span)
                })
            }
            _ => Err(self.unexpected(&["statement"])),
        }
    }

    fn lvalue(&mut self) -> PResult<LValue> {
        if self.is_sym("{") {
            return Err(self.unsupported("concatenation on the left-hand side"));
        }
        let name = self.ident()?;
        if !self.eat_sym("[") {
            return Ok(LValue::Ident(name));
        }
        let first = self.expr()?;
        if self.eat_sym(":") {
            let msb = const_index(&first).ok_or_else(|| self.unsupported("non-constant part-selects"))?;
            let second = self.expr()?;
            let lsb = const_index(&second).ok_or_else(|| self.unsupported("non-constant part-selects"))?;
            self.expect_sym("]")?;
            self.check_slice(msb, lsb)?;
            return Ok(LValue::Slice(name, msb, lsb));
        }
        self.expect_sym("]")?;
        Ok(LValue::Index(name, Box::new(first)))
    }

    fn check_slice(&self, msb: u32, lsb: u32) -> PResult<()> {
        if msb < lsb {
            return Err(self.unsupported("ascending part-selects"));
        }
        Ok(())
    }

    pub(crate) fn expr(&mut self) -> PResult<Expr> {
        let cond = self.binary(1)?;
        if self.eat_sym("?") {
            let then = self.expr()?;
            self.expect_sym(":")?;
            let otherwise = self.expr()?;
            return Ok(Expr::Ternary(Box::new(cond), Box::new(then), Box::new(otherwise)));
        }
        Ok(cond)
    }

    fn binary_op(&self) -> Option<BinaryOp> {
        let Tok::Sym(s) = self.peek() else {
            return None;
        };
        Some(match *s {
            "+" => BinaryOp::Add,
            "-" => BinaryOp::Sub,
            "*" => BinaryOp::Mul,
            "/" => BinaryOp::Div,
            "%" => BinaryOp::Mod,
            "&" => BinaryOp::And,
            "|" => BinaryOp::Or,
            "^" => BinaryOp::Xor,
            "&&" => BinaryOp::LogicAnd,
            "||" => BinaryOp::LogicOr,
            "==" => BinaryOp::Eq,
            "!=" => BinaryOp::Ne,
            "<" => BinaryOp::Lt,
            "<=" => BinaryOp::Le,
            ">" => BinaryOp::Gt,
            ">=" => BinaryOp::Ge,
            "<<" => BinaryOp::Shl,
            ">>" => BinaryOp::Shr,
            _ => return None,
        })
    }

    /// Precedence climbing; all binary operators are left-associative.
    fn binary(&mut self, min_prec: u8) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        loop {
            if let Tok::Sym(s) = self.peek() {
                if matches!(*s, "**" | "===" | "!==" | "<<<" | ">>>" | "~^" | "^~") {
                    return Err(self.unexpected(&[]));
                }
            }
            let Some(op) = self.binary_op() else {
                return Ok(lhs);
            };
            let prec = op.precedence();
            if prec < min_prec {
                return Ok(lhs);
            }
            self.advance();
            let rhs = self.binary(prec + 1)?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> PResult<Expr> {
        let op = match self.peek() {
            Tok::Sym("~") => Some(UnaryOp::Not),
            Tok::Sym("!") => Some(UnaryOp::LogicNot),
            Tok::Sym("-") => Some(UnaryOp::Neg),
            Tok::Sym("&") => Some(UnaryOp::RedAnd),
            Tok::Sym("|") => Some(UnaryOp::RedOr),
            Tok::Sym("^") => Some(UnaryOp::RedXor),
            Tok::Sym("+") => return Err(self.unsupported("unary `+`")),
            Tok::Sym("~&") | Tok::Sym("~|") | Tok::Sym("~^") | Tok::Sym("^~") => return Err(self.unexpected(&[])),
            _ => None,
        };
        if let Some(op) = op {
            self.advance();
            let operand = self.unary()?;
            return Ok(Expr::unary(op, operand));
        }
        self.primary()
    }

    fn primary(&mut self) -> PResult<Expr> {
        match self.peek().clone() {
            Tok::Number { value, width, base } => {
                self.advance();
                Ok(Expr::Literal { value, width, base })
            }
            Tok::Sym("(") => {
                self.advance();
                let e = self.expr()?;
                self.expect_sym(")")?;
                Ok(e)
            }
            Tok::Sym("{") => {
                self.advance();
                let first = self.expr()?;
                if self.is_sym("{") {
                    return Err(self.unsupported("replication"));
                }
                let mut parts = vec![first];
                while self.eat_sym(",") {
                    parts.push(self.expr()?);
                }
                self.expect_sym("}")?;
                Ok(Expr::Concat(parts))
            }
            Tok::System(name) => Err(self.unsupported(&format!("system function `${name}`"))),
            Tok::Ident(_) => {
                let name = self.ident()?;
                if self.is_sym("(") {
                    return Err(self.unsupported("function calls"));
                }
                if !self.eat_sym("[") {
                    return Ok(Expr::Ident(name));
                }
                let first = self.expr()?;
                if self.eat_sym(":") {
                    let msb = const_index(&first).ok_or_else(|| self.unsupported("non-constant part-selects"))?;
                    let second = self.expr()?;
                    let lsb = const_index(&second).ok_or_else(|| self.unsupported("non-constant part-selects"))?;
                    self.expect_sym("]")?;
                    self.check_slice(msb, lsb)?;
                    return Ok(Expr::Slice(name, msb, lsb));
                }
                if self.is_sym("+:") || self.is_sym("-:") {
                    return Err(self.unsupported("indexed part-selects"));
                }
                self.expect_sym("]")?;
                Ok(Expr::Index(name, Box::new(first)))
            }
            _ => Err(self.unexpected(&["expression"])),
        }
    }
}

fn const_index(e: &Expr) -> Option<u32> {
    match e {
        Expr::Literal { value, .. } if *value < 64 => Some(*value as u32),
        _ => None,
    }
}

/// Checks that names are declared once and every use resolves.
fn resolve_names(module: &SourceModule) -> PResult<()> {
    let mut names: HashMap<String, Span> = module.ports.iter().map(|p| (p.name.clone(), p.span)).collect();
    let declare = |name: &str, span: Span, names: &mut HashMap<String, Span>| -> PResult<()> {
        if names.insert(name.to_string(), span).is_some() {
            return Err(ParseError::new(
                ParseErrorKind::DuplicateName,
                span,
                format!("`{name}` is declared twice in module `{}`", module.name),
            ));
        }
        Ok(())
    };
    let mut instance_names = HashSet::new();
    for item in &module.items {
        match item {
            ModuleItem::Net(n) => declare(&n.name, n.span, &mut names)?,
            ModuleItem::LocalParam(p) => declare(&p.name, p.span, &mut names)?,
            ModuleItem::Instance(i) if !instance_names.insert(i.name.as_str()) => {
                return Err(ParseError::new(
                    ParseErrorKind::DuplicateName,
                    i.span,
                    format!("instance `{}` is declared twice", i.name),
                ));
            }
            _ => {}
        }
    }
    for name in &instance_names {
        if let Some(span) = names.get(*name) {
            return Err(ParseError::new(
                ParseErrorKind::DuplicateName,
                *span,
                format!("`{name}` names both an instance and a signal"),
            ));
        }
    }

    let check = |name: &str, span: Span| -> PResult<()> {
        if names.contains_key(name) {
            Ok(())
        } else {
            Err(ParseError::new(
                ParseErrorKind::UnresolvedIdentifier,
                span,
                format!("`{name}` is not declared in module `{}`", module.name),
            ))
        }
    };
    let check_expr = |e: &Expr, span: Span| -> PResult<()> {
        let mut result = Ok(());
        e.for_each_ident(&mut |n| {
            if result.is_ok() {
                result = check(n, span);
            }
        });
        result
    };
    let check_lvalue = |lv: &LValue, span: Span| -> PResult<()> {
        check(lv.name(), span)?;
        if let LValue::Index(_, idx) = lv {
            check_expr(idx, span)?;
        }
        Ok(())
    };
    fn walk(
        s: &Stmt,
        check: &dyn Fn(&str, Span) -> PResult<()>,
        check_expr: &dyn Fn(&Expr, Span) -> PResult<()>,
        check_lvalue: &dyn Fn(&LValue, Span) -> PResult<()>,
    ) -> PResult<()> {
        match s {
            Stmt::Block(body, _) => body.iter().try_for_each(|s| walk(s, check, check_expr, check_lvalue)),
            Stmt::Blocking(lv, e, span) | Stmt::NonBlocking(lv, e, span) => {
                check_lvalue(lv, *span)?;
                check_expr(e, *span)
            }
            Stmt::If {
                cond,
                then_branch,
                else_branch,
                span,
            } => {
                check_expr(cond, *span)?;
                walk(then_branch, check, check_expr, check_lvalue)?;
                if let Some(e) = else_branch {
                    walk(e, check, check_expr, check_lvalue)?;
                }
                Ok(())
            }
            Stmt::Case {
                subject,
                items,
                default,
                span,
            } => {
                check_expr(subject, *span)?;
                for item in items {
                    for l in &item.labels {
                        check_expr(l, item.span)?;
                    }
                    walk(&item.body, check, check_expr, check_lvalue)?;
                }
                if let Some(d) = default {
                    walk(d, check, check_expr, check_lvalue)?;
                }
                Ok(())
            }
            Stmt::Wait(_, name, span) => check(name, *span),
            Stmt::Null(_) | Stmt::Delay(..) | Stmt::Finish(_) => Ok(()),
        }
    }
    for item in &module.items {
        match item {
            ModuleItem::Net(n) => {
                if let Some(init) = &n.init {
                    check_expr(init, n.span)?;
                }
            }
            ModuleItem::LocalParam(p) => check_expr(&p.value, p.span)?,
            ModuleItem::Assign(a) => {
                check_lvalue(&a.target, a.span)?;
                check_expr(&a.expr, a.span)?;
            }
            ModuleItem::Always(a) => {
                if let Sensitivity::Edges(list) = &a.sensitivity {
                    for (_, name) in list {
                        check(name, a.span)?;
                    }
                }
                walk(&a.body, &check, &check_expr, &check_lvalue)?;
            }
            ModuleItem::Initial(i) => walk(&i.body, &check, &check_expr, &check_lvalue)?,
            ModuleItem::Instance(i) => {
                for (_, e) in &i.connections {
                    if let Some(e) = e {
                        check_expr(e, i.span)?;
                    }
                }
            }
            ModuleItem::Assert(a) => {
                check(&a.clock_edge.1, a.span)?;
                if let Some(d) = &a.disable_expr {
                    check_expr(d, a.span)?;
                }
                check_expr(&a.antecedent, a.span)?;
                check_expr(&a.consequent, a.span)?;
            }
        }
    }
    Ok(())
}
