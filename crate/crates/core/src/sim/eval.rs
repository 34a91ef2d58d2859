//! Two-state expression evaluation with self-determined widths.

use crate::rtl::{BinaryOp, UnaryOp};

use super::ir::{mask, IrExpr, IrLValue, SignalId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TrapKind {
    DivByZero,
    OobSelect,
}

impl TrapKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TrapKind::DivByZero => "div-by-zero",
            TrapKind::OobSelect => "oob-select",
        }
    }
}

impl std::fmt::Display for TrapKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Evaluates `e` against `values`; the result is masked to `e.width()`.
///
/// `&&`, `||` and `?:` only evaluate the operands they need, so a guarded
/// division such as `b != 0 && a / b` does not trap.
pub fn eval(e: &IrExpr, values: &[u64]) -> Result<u64, TrapKind> {
    Ok(match e {
        IrExpr::Const { value, .. } => *value,
        IrExpr::Signal { id, .. } => values[id.index()],
        IrExpr::Index { id, index, base_width } => {
            let i = eval(index, values)?;
            if i >= u64::from(*base_width) {
                return Err(TrapKind::OobSelect);
            }
            (values[id.index()] >> i) & 1
        }
        IrExpr::Slice { id, lsb, width } => (values[id.index()] >> lsb) & mask(*width),
        IrExpr::Concat { parts, .. } => {
            let mut acc = 0u64;
            for p in parts {
                let v = eval(p, values)?;
                acc = if p.width() >= 64 { v } else { (acc << p.width()) | v };
            }
            acc
        }
        IrExpr::Unary { op, arg, width } => {
            let v = eval(arg, values)?;
            match op {
                UnaryOp::Not => !v & mask(*width),
                UnaryOp::Neg => v.wrapping_neg() & mask(*width),
                UnaryOp::LogicNot => u64::from(v == 0),
                UnaryOp::RedAnd => u64::from(v == mask(arg.width())),
                UnaryOp::RedOr => u64::from(v != 0),
                UnaryOp::RedXor => u64::from(v.count_ones() % 2 == 1),
            }
        }
        IrExpr::Binary { op, lhs, rhs, width } => {
            let l = eval(lhs, values)?;
            match op {
                BinaryOp::LogicAnd if l == 0 => return Ok(0),
                BinaryOp::LogicOr if l != 0 => return Ok(1),
                _ => {}
            }
            let r = eval(rhs, values)?;
            let m = mask(*width);
            match op {
                BinaryOp::Add => l.wrapping_add(r) & m,
                BinaryOp::Sub => l.wrapping_sub(r) & m,
                BinaryOp::Mul => l.wrapping_mul(r) & m,
                BinaryOp::Div => l.checked_div(r).ok_or(TrapKind::DivByZero)?,
                BinaryOp::Mod => l.checked_rem(r).ok_or(TrapKind::DivByZero)?,
                BinaryOp::And => l & r,
                BinaryOp::Or => l | r,
                BinaryOp::Xor => l ^ r,
                BinaryOp::LogicAnd | BinaryOp::LogicOr => u64::from(r != 0),
                BinaryOp::Eq => u64::from(l == r),
                BinaryOp::Ne => u64::from(l != r),
                BinaryOp::Lt => u64::from(l < r),
                BinaryOp::Le => u64::from(l <= r),
                BinaryOp::Gt => u64::from(l > r),
                BinaryOp::Ge => u64::from(l >= r),
                BinaryOp::Shl => {
                    if r >= 64 {
                        0
                    } else {
                        (l << r) & m
                    }
                }
                BinaryOp::Shr => {
                    if r >= 64 {
                        0
                    } else {
                        l >> r
                    }
                }
            }
        }
        IrExpr::Ternary {
            cond, then, otherwise, ..
        } => {
            if eval(cond, values)? != 0 {
                eval(then, values)?
            } else {
                eval(otherwise, values)?
            }
        }
    })
}

/// A resolved write target: `width` bits of `id` starting at `lsb`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Target {
    pub id: SignalId,
    pub lsb: u32,
    pub width: u32,
}

pub fn resolve(lv: &IrLValue, values: &[u64], signal_width: impl Fn(SignalId) -> u32) -> Result<Target, TrapKind> {
    Ok(match lv {
        IrLValue::Whole(id) => Target {
            id: *id,
            lsb: 0,
            width: signal_width(*id),
        },
        IrLValue::Bit(id, idx) => {
            let i = eval(idx, values)?;
            if i >= u64::from(signal_width(*id)) {
                return Err(TrapKind::OobSelect);
            }
            Target {
                id: *id,
                lsb: i as u32,
                width: 1,
            }
        }
        IrLValue::Slice { id, lsb, width } => Target {
            id: *id,
            lsb: *lsb,
            width: *width,
        },
    })
}

pub fn write(values: &mut [u64], t: Target, v: u64) {
    let m = mask(t.width) << t.lsb;
    let slot = &mut values[t.id.index()];
    *slot = (*slot & !m) | ((v << t.lsb) & m);
}
