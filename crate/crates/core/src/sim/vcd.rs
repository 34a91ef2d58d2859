//! Value change dump writer.
//!
//! One `$scope module` per hierarchy level, identifier codes assigned in
//! signal order (base 94 over printable ASCII), one `#t` section per cycle
//! at `t = 10 * cycle`: a full dump first, changes only afterwards.

use std::fmt::Write;

use super::ir::{Netlist, SignalId};

/// Identifier code of the `n`-th signal.
pub fn id_code(mut n: usize) -> String {
    let mut s = String::new();
    loop {
        s.push((33 + (n % 94) as u8) as char);
        n /= 94;
        if n == 0 {
            return s;
        }
    }
}

#[derive(Default)]
struct ScopeNode {
    vars: Vec<(SignalId, String)>,
    children: Vec<(String, ScopeNode)>,
}

impl ScopeNode {
    fn insert(&mut self, path: &[&str], id: SignalId) {
        match path {
            [leaf] => self.vars.push((id, leaf.to_string())),
            [head, rest @ ..] => {
                let k = match self.children.iter().position(|(n, _)| n == head) {
                    Some(k) => k,
                    None => {
                        self.children.push((head.to_string(), ScopeNode::default()));
                        self.children.len() - 1
                    }
                };
                self.children[k].1.insert(rest, id);
            }
            [] => {}
        }
    }

    fn write(&self, out: &mut String, netlist: &Netlist) {
        for (id, name) in &self.vars {
            let width = netlist.signal(*id).width;
            let _ = writeln!(out, "$var wire {width} {} {name} $end", id_code(id.index()));
        }
        for (name, child) in &self.children {
            let _ = writeln!(out, "$scope module {name} $end");
            child.write(out, netlist);
            out.push_str("$upscope $end\n");
        }
    }
}

fn value(out: &mut String, width: u32, v: u64, code: &str) {
    if width == 1 {
        let _ = writeln!(out, "{v}{code}");
    } else {
        let _ = writeln!(out, "b{v:b} {code}");
    }
}

/// Renders `trace` (one value vector per cycle) as VCD text.
pub fn emit_vcd(netlist: &Netlist, trace: &[Vec<u64>]) -> String {
    let mut root = ScopeNode::default();
    for (i, s) in netlist.signals.iter().enumerate() {
        let path: Vec<&str> = s.name.split('.').collect();
        root.insert(&path, SignalId(i as u32));
    }
    let mut out = String::new();
    out.push_str("$version hwfuzz $end\n$timescale 1ns $end\n");
    let _ = writeln!(out, "$scope module {} $end", netlist.top);
    root.write(&mut out, netlist);
    out.push_str("$upscope $end\n$enddefinitions $end\n");
    let codes: Vec<String> = (0..netlist.signals.len()).map(id_code).collect();
    let mut prev: Option<&Vec<u64>> = None;
    for (cycle, values) in trace.iter().enumerate() {
        let _ = writeln!(out, "#{}", cycle * 10);
        for (i, s) in netlist.signals.iter().enumerate() {
            if prev.is_none_or(|p| p[i] != values[i]) {
                value(&mut out, s.width, values[i], &codes[i]);
            }
        }
        prev = Some(values);
    }
    out
}
