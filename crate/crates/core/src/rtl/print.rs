//! Pretty-printer back to the accepted subset. Binary and ternary
//! sub-expressions are always parenthesized, so `parse(print(m)) == m`.

use std::fmt::Write;

use super::ast::*;

pub fn print_modules(modules: &[SourceModule]) -> String {
    modules.iter().map(print_module).collect::<Vec<_>>().join("\n")
}

pub fn print_module(m: &SourceModule) -> String {
    let mut out = String::new();
    if m.ports.is_empty() {
        let _ = writeln!(out, "module {};", m.name);
    } else {
        let _ = writeln!(out, "module {} (", m.name);
        for (i, p) in m.ports.iter().enumerate() {
            let dir = p.direction.keyword();
            let sep = if i + 1 == m.ports.len() { "" } else { "," };
            let _ = writeln!(out, "  {dir} {}{} {}{sep}", p.kind.as_str(), range(p.width), p.name);
        }
        out.push_str(");\n");
    }
    for item in &m.items {
        print_item(&mut out, item);
    }
    out.push_str("endmodule\n");
    out
}

fn range(width: u32) -> String {
    if width == 1 {
        String::new()
    } else {
        format!(" [{}:0]", width - 1)
    }
}

fn print_item(out: &mut String, item: &ModuleItem) {
    match item {
        ModuleItem::Net(n) => {
            let _ = write!(out, "  {}{} {}", n.kind.as_str(), range(n.width), n.name);
            if let Some(init) = &n.init {
                let _ = write!(out, " = {}", print_expr(init));
            }
            out.push_str(";\n");
        }
        ModuleItem::LocalParam(p) => {
            let _ = writeln!(out, "  localparam {} = {};", p.name, print_expr(&p.value));
        }
        ModuleItem::Assign(a) => {
            let _ = writeln!(out, "  assign {} = {};", print_lvalue(&a.target), print_expr(&a.expr));
        }
        ModuleItem::Always(a) => {
            match &a.sensitivity {
                Sensitivity::Edges(list) => {
                    let list: Vec<_> = list.iter().map(|(e, n)| format!("{} {n}", e.as_str())).collect();
                    let _ = write!(out, "  always @({})", list.join(" or "));
                }
                Sensitivity::Delay(d) => {
                    let _ = write!(out, "  always #{d}");
                }
            }
            out.push('\n');
            print_stmt(out, &a.body, 2);
        }
        ModuleItem::Initial(i) => {
            out.push_str("  initial\n");
            print_stmt(out, &i.body, 2);
        }
        ModuleItem::Instance(inst) => {
            let conns: Vec<_> = inst
                .connections
                .iter()
                .map(|(p, e)| match e {
                    Some(e) => format!(".{p}({})", print_expr(e)),
                    None => format!(".{p}()"),
                })
                .collect();
            let _ = writeln!(out, "  {} {}({});", inst.module, inst.name, conns.join(", "));
        }
        ModuleItem::Assert(a) => {
            let _ = write!(
                out,
                "  assert property(@({} {})",
                a.clock_edge.0.as_str(),
                a.clock_edge.1
            );
            if let Some(d) = &a.disable_expr {
                let _ = write!(out, " disable iff({})", print_expr(d));
            }
            let _ = writeln!(
                out,
                " {} |-> {});",
                print_expr(&a.antecedent),
                print_expr(&a.consequent)
            );
        }
    }
}

fn indent(out: &mut String, level: usize) {
    for _ in 0..level {
        out.push_str("  ");
    }
}

pub fn print_stmt(out: &mut String, s: &Stmt, level: usize) {
    indent(out, level);
    match s {
        Stmt::Block(body, _) => {
            out.push_str("begin\n");
            for s in body {
                print_stmt(out, s, level + 1);
            }
            indent(out, level);
            out.push_str("end\n");
        }
        Stmt::Blocking(lv, e, _) => {
            let _ = writeln!(out, "{} = {};", print_lvalue(lv), print_expr(e));
        }
        Stmt::NonBlocking(lv, e, _) => {
            let _ = writeln!(out, "{} <= {};", print_lvalue(lv), print_expr(e));
        }
        Stmt::If {
            cond,
            then_branch,
            else_branch,
            ..
        } => {
            let _ = writeln!(out, "if ({})", print_expr(cond));
            if else_branch.is_some() && open_if_tail(then_branch) {
                // otherwise the else would attach to the inner if
                print_stmt(
                    out,
                    &Stmt::Block(vec![(**then_branch).clone()], Span::default()),
                    level + 1,
                );
            } else {
                print_stmt(out, then_branch, level + 1);
            }
            if let Some(e) = else_branch {
                indent(out, level);
                out.push_str("else\n");
                print_stmt(out, e, level + 1);
            }
        }
        Stmt::Case {
            subject,
            items,
            default,
            ..
        } => {
            let _ = writeln!(out, "case ({})", print_expr(subject));
            for item in items {
                indent(out, level + 1);
                let labels: Vec<_> = item.labels.iter().map(print_expr).collect();
                let _ = writeln!(out, "{}:", labels.join(", "));
                print_stmt(out, &item.body, level + 2);
            }
            if let Some(d) = default {
                indent(out, level + 1);
                out.push_str("default:\n");
                print_stmt(out, d, level + 2);
            }
            indent(out, level);
            out.push_str("endcase\n");
        }
        Stmt::Null(_) => out.push_str(";\n"),
        Stmt::Wait(edge, name, _) => {
            let _ = writeln!(out, "@({} {name});", edge.as_str());
        }
        Stmt::Delay(d, _) => {
            let _ = writeln!(out, "#{d};");
        }
        Stmt::Finish(_) => out.push_str("$finish;\n"),
    }
}

/// True when `s` ends in an `if` without `else`.
fn open_if_tail(s: &Stmt) -> bool {
    match s {
        Stmt::If { else_branch: None, .. } => true,
        Stmt::If {
            else_branch: Some(e), ..
        } => open_if_tail(e),
        _ => false,
    }
}

pub fn print_lvalue(lv: &LValue) -> String {
    match lv {
        LValue::Ident(n) => n.clone(),
        LValue::Index(n, i) => format!("{n}[{}]", print_expr(i)),
        LValue::Slice(n, msb, lsb) => format!("{n}[{msb}:{lsb}]"),
    }
}

pub fn print_literal(value: u64, width: Option<u32>, base: Base) -> String {
    let size = width.map(|w| w.to_string()).unwrap_or_default();
    match (width, base) {
        (None, Base::Dec) => value.to_string(),
        (_, Base::Dec) => format!("{size}'d{value}"),
        (_, Base::Hex) => format!("{size}'h{value:X}"),
        (_, Base::Bin) => format!("{size}'b{value:b}"),
    }
}

pub fn print_expr(e: &Expr) -> String {
    match e {
        Expr::Literal { value, width, base } => print_literal(*value, *width, *base),
        Expr::Ident(n) => n.clone(),
        Expr::Index(n, i) => format!("{n}[{}]", print_expr(i)),
        Expr::Slice(n, msb, lsb) => format!("{n}[{msb}:{lsb}]"),
        Expr::Concat(parts) => {
            let parts: Vec<_> = parts.iter().map(print_expr).collect();
            format!("{{{}}}", parts.join(", "))
        }
        Expr::Unary(op, inner) => format!("{}{}", op.symbol(), print_operand(inner)),
        Expr::Binary(op, l, r) => format!("({} {} {})", print_expr(l), op.symbol(), print_expr(r)),
        Expr::Ternary(c, t, f) => format!("({} ? {} : {})", print_expr(c), print_expr(t), print_expr(f)),
    }
}

fn print_operand(e: &Expr) -> String {
    match e {
        Expr::Unary(..) => format!("({})", print_expr(e)),
        _ => print_expr(e),
    }
}
