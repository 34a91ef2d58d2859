//! Naive reference interpreter: walks the AST of a single flat module
//! directly, keeping values in a name-keyed map. Continuous assigns are
//! settled by repeated source-order passes until nothing changes rather
//! than by a precomputed order.

#![allow(dead_code)]

use std::collections::BTreeMap;

use hwfuzz_core::rtl::{
    BinaryOp, DesignSpec, Direction, Edge, Expr, LValue, ModuleItem, NetKind, Sensitivity, SourceModule, Stmt, UnaryOp,
};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RefCrash {
    Assertion(usize),
    DivByZero,
    OobSelect,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RefRun {
    /// Values of every declared signal after each completed or crashing cycle.
    pub cycles: Vec<BTreeMap<String, u64>>,
    pub crash: Option<(RefCrash, u64)>,
}

fn m(w: u32) -> u64 {
    if w >= 64 {
        !0
    } else {
        (1 << w) - 1
    }
}

struct Model<'a> {
    module: &'a SourceModule,
    widths: BTreeMap<String, u32>,
    consts: BTreeMap<String, (u64, u32)>,
    vals: BTreeMap<String, u64>,
}

impl<'a> Model<'a> {
    fn new(module: &'a SourceModule) -> Self {
        let mut model = Model {
            module,
            widths: BTreeMap::new(),
            consts: BTreeMap::new(),
            vals: BTreeMap::new(),
        };
        for p in &module.ports {
            model.widths.insert(p.name.clone(), p.width);
            model.vals.insert(p.name.clone(), 0);
        }
        for item in &module.items {
            match item {
                ModuleItem::Net(n) => {
                    model.widths.insert(n.name.clone(), n.width);
                    let init = match (&n.init, n.kind) {
                        (Some(e), NetKind::Reg) => model.eval(e).expect("constant initializer") & m(n.width),
                        _ => 0,
                    };
                    model.vals.insert(n.name.clone(), init);
                }
                ModuleItem::LocalParam(p) => {
                    let v = model.eval(&p.value).expect("constant localparam");
                    let w = model.width(&p.value);
                    model.consts.insert(p.name.clone(), (v, w));
                }
                _ => {}
            }
        }
        model
    }

    fn width(&self, e: &Expr) -> u32 {
        match e {
            Expr::Literal { width, .. } => width.unwrap_or(32),
            Expr::Ident(n) => match self.consts.get(n) {
                Some(&(_, w)) => w,
                None => self.widths[n],
            },
            Expr::Index(..) => 1,
            Expr::Slice(_, hi, lo) => hi - lo + 1,
            Expr::Concat(parts) => parts.iter().map(|p| self.width(p)).sum(),
            Expr::Unary(UnaryOp::Not | UnaryOp::Neg, a) => self.width(a),
            Expr::Unary(..) => 1,
            Expr::Binary(op, l, r) => match op {
                BinaryOp::Eq
                | BinaryOp::Ne
                | BinaryOp::Lt
                | BinaryOp::Le
                | BinaryOp::Gt
                | BinaryOp::Ge
                | BinaryOp::LogicAnd
                | BinaryOp::LogicOr => 1,
                BinaryOp::Shl | BinaryOp::Shr => self.width(l),
                _ => self.width(l).max(self.width(r)),
            },
            Expr::Ternary(_, t, f) => self.width(t).max(self.width(f)),
        }
    }

    fn eval(&self, e: &Expr) -> Result<u64, RefCrash> {
        let w = self.width(e);
        let v = match e {
            Expr::Literal { value, .. } => *value,
            Expr::Ident(n) => match self.consts.get(n) {
                Some(&(v, _)) => v,
                None => self.vals[n],
            },
            Expr::Index(n, i) => {
                let i = self.eval(i)?;
                if i >= u64::from(self.widths[n]) {
                    return Err(RefCrash::OobSelect);
                }
                (self.vals[n] >> i) & 1
            }
            Expr::Slice(n, _, lo) => self.vals[n] >> lo,
            Expr::Concat(parts) => {
                // assemble as a bit vector, most significant part first
                let mut bits: Vec<bool> = Vec::new();
                for p in parts {
                    let pv = self.eval(p)?;
                    let pw = self.width(p);
                    for b in (0..pw).rev() {
                        bits.push((pv >> b) & 1 == 1);
                    }
                }
                bits.iter().fold(0u64, |acc, &b| (acc << 1) | u64::from(b))
            }
            Expr::Unary(op, a) => {
                let x = self.eval(a)?;
                let aw = self.width(a);
                match op {
                    UnaryOp::Not => !x,
                    UnaryOp::Neg => 0u64.wrapping_sub(x),
                    UnaryOp::LogicNot => (x == 0) as u64,
                    UnaryOp::RedAnd => (0..aw).all(|b| (x >> b) & 1 == 1) as u64,
                    UnaryOp::RedOr => (0..aw).any(|b| (x >> b) & 1 == 1) as u64,
                    UnaryOp::RedXor => (0..aw).filter(|b| (x >> b) & 1 == 1).count() as u64 % 2,
                }
            }
            Expr::Binary(op, l, r) => {
                let a = self.eval(l)?;
                if *op == BinaryOp::LogicAnd && a == 0 {
                    return Ok(0);
                }
                if *op == BinaryOp::LogicOr && a != 0 {
                    return Ok(1);
                }
                let b = self.eval(r)?;
                match op {
                    BinaryOp::Add => a.wrapping_add(b),
                    BinaryOp::Sub => a.wrapping_sub(b),
                    BinaryOp::Mul => a.wrapping_mul(b),
                    BinaryOp::Div => {
                        if b == 0 {
                            return Err(RefCrash::DivByZero);
                        }
                        a / b
                    }
                    BinaryOp::Mod => {
                        if b == 0 {
                            return Err(RefCrash::DivByZero);
                        }
                        a % b
                    }
                    BinaryOp::And => a & b,
                    BinaryOp::Or => a | b,
                    BinaryOp::Xor => a ^ b,
                    BinaryOp::LogicAnd | BinaryOp::LogicOr => (b != 0) as u64,
                    BinaryOp::Eq => (a == b) as u64,
                    BinaryOp::Ne => (a != b) as u64,
                    BinaryOp::Lt => (a < b) as u64,
                    BinaryOp::Le => (a <= b) as u64,
                    BinaryOp::Gt => (a > b) as u64,
                    BinaryOp::Ge => (a >= b) as u64,
                    BinaryOp::Shl => a.checked_shl(b.min(64) as u32).unwrap_or(0),
                    BinaryOp::Shr => a.checked_shr(b.min(64) as u32).unwrap_or(0),
                }
            }
            Expr::Ternary(c, t, f) => {
                if self.eval(c)? != 0 {
                    self.eval(t)?
                } else {
                    self.eval(f)?
                }
            }
        };
        Ok(v & m(w))
    }

    /// (name, lsb, width) of a write target.
    fn target(&self, lv: &LValue) -> Result<(String, u32, u32), RefCrash> {
        Ok(match lv {
            LValue::Ident(n) => (n.clone(), 0, self.widths[n]),
            LValue::Index(n, i) => {
                let i = self.eval(i)?;
                if i >= u64::from(self.widths[n]) {
                    return Err(RefCrash::OobSelect);
                }
                (n.clone(), i as u32, 1)
            }
            LValue::Slice(n, hi, lo) => (n.clone(), *lo, hi - lo + 1),
        })
    }

    fn store(&mut self, (name, lsb, width): (String, u32, u32), v: u64) {
        let mut cur = self.vals[&name];
        for b in 0..width {
            let bit = (v >> b) & 1;
            cur = (cur & !(1u64 << (lsb + b))) | (bit << (lsb + b));
        }
        self.vals.insert(name, cur);
    }

    fn settle(&mut self) -> Result<(), RefCrash> {
        let assigns: Vec<(&LValue, &Expr)> = self
            .module
            .items
            .iter()
            .filter_map(|i| match i {
                ModuleItem::Assign(a) => Some((&a.target, &a.expr)),
                _ => None,
            })
            .collect();
        loop {
            let before = self.vals.clone();
            for (lv, e) in &assigns {
                if let (Ok(v), Ok(t)) = (self.eval(e), self.target(lv)) {
                    self.store(t, v);
                }
            }
            if self.vals == before {
                break;
            }
        }
        // a final pass on settled values decides traps
        for (lv, e) in &assigns {
            let v = self.eval(e)?;
            let t = self.target(lv)?;
            self.store(t, v);
        }
        Ok(())
    }

    fn exec(&mut self, s: &Stmt, nba: &mut Vec<((String, u32, u32), u64)>) -> Result<(), RefCrash> {
        match s {
            Stmt::Block(body, _) => {
                for s in body {
                    self.exec(s, nba)?;
                }
            }
            Stmt::Blocking(lv, e, _) => {
                let v = self.eval(e)?;
                let t = self.target(lv)?;
                self.store(t, v);
            }
            Stmt::NonBlocking(lv, e, _) => {
                let v = self.eval(e)?;
                let t = self.target(lv)?;
                nba.push((t, v));
            }
            Stmt::If {
                cond,
                then_branch,
                else_branch,
                ..
            } => {
                if self.eval(cond)? != 0 {
                    self.exec(then_branch, nba)?;
                } else if let Some(e) = else_branch {
                    self.exec(e, nba)?;
                }
            }
            Stmt::Case {
                subject,
                items,
                default,
                ..
            } => {
                let v = self.eval(subject)?;
                for item in items {
                    for l in &item.labels {
                        if self.eval(l)? == v {
                            return self.exec(&item.body, nba);
                        }
                    }
                }
                if let Some(d) = default {
                    self.exec(d, nba)?;
                }
            }
            Stmt::Null(_) => {}
            other => panic!("reference interpreter does not run {other:?}"),
        }
        Ok(())
    }

    fn cycle(&mut self, clock: &str, prev: &BTreeMap<String, u64>) -> Result<Option<usize>, RefCrash> {
        self.settle()?;
        let mut nba = Vec::new();
        let module = self.module;
        for item in &module.items {
            let ModuleItem::Always(a) = item else { continue };
            let Sensitivity::Edges(list) = &a.sensitivity else {
                continue;
            };
            let fire = list.iter().any(|(edge, name)| {
                if name == clock {
                    return true;
                }
                let (was, now) = (prev[name] & 1, self.vals[name] & 1);
                match edge {
                    Edge::Posedge => was == 0 && now == 1,
                    Edge::Negedge => was == 1 && now == 0,
                }
            });
            if fire {
                self.exec(&a.body, &mut nba)?;
            }
        }
        for (t, v) in nba {
            self.store(t, v);
        }
        self.settle()?;
        for (i, a) in module.assertions().enumerate() {
            if let Some(d) = &a.disable_expr {
                if self.eval(d)? != 0 {
                    continue;
                }
            }
            if self.eval(&a.antecedent)? != 0 && self.eval(&a.consequent)? == 0 {
                return Ok(Some(i));
            }
        }
        Ok(None)
    }
}

/// Runs reset for `reset_cycles`, then one frame per cycle, capped at
/// `max_cycles` in total.
pub fn reference_run(
    module: &SourceModule,
    spec: &DesignSpec,
    frames: &[Vec<u64>],
    reset_cycles: u32,
    max_cycles: u32,
) -> RefRun {
    let mut model = Model::new(module);
    let _ = model.settle();
    let data: Vec<(String, u32)> = module
        .ports
        .iter()
        .filter(|p| p.direction == Direction::Input && p.name != spec.clock && p.name != spec.reset)
        .map(|p| (p.name.clone(), p.width))
        .collect();
    let active = spec.reset_polarity.active_level();
    let mut cycles = Vec::new();
    let total = reset_cycles as usize + frames.len();
    for c in 0..total.min(max_cycles as usize) {
        let prev = model.vals.clone();
        if c < reset_cycles as usize {
            model.vals.insert(spec.reset.clone(), active);
            for (n, _) in &data {
                model.vals.insert(n.clone(), 0);
            }
        } else {
            model.vals.insert(spec.reset.clone(), active ^ 1);
            for ((n, w), v) in data.iter().zip(&frames[c - reset_cycles as usize]) {
                model.vals.insert(n.clone(), v & m(*w));
            }
        }
        let result = model.cycle(&spec.clock, &prev);
        cycles.push(model.vals.clone());
        match result {
            Ok(None) => {}
            Ok(Some(a)) => {
                return RefRun {
                    cycles,
                    crash: Some((RefCrash::Assertion(a), c as u64)),
                }
            }
            Err(t) => {
                return RefRun {
                    cycles,
                    crash: Some((t, c as u64)),
                }
            }
        }
    }
    RefRun { cycles, crash: None }
}
