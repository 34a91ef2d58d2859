//! Spec XML reader and writer.
//!
//! ```text
//! <design top="NAME" clock="NAME" reset="NAME" reset_polarity="low|high">
//!   <port name="..." dir="in|out" width="N"/>
//! </design>
//! ```
//!
//! Two-space indent, LF line endings, ports in declaration order.

use std::fmt::Write;

use super::ast::Direction;
use super::error::{SpecError, SpecErrorKind};
use super::spec::{DesignSpec, ResetPolarity, SpecPort};

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

pub fn write_spec_xml(spec: &DesignSpec) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "<design top=\"{}\" clock=\"{}\" reset=\"{}\" reset_polarity=\"{}\">",
        escape(&spec.top),
        escape(&spec.clock),
        escape(&spec.reset),
        spec.reset_polarity.as_str()
    );
    for p in &spec.ports {
        let _ = writeln!(
            out,
            "  <port name=\"{}\" dir=\"{}\" width=\"{}\"/>",
            escape(&p.name),
            p.direction.as_str(),
            p.width
        );
    }
    out.push_str("</design>\n");
    out
}

fn schema(msg: impl Into<String>) -> SpecError {
    SpecError::new(SpecErrorKind::SchemaViolation, msg)
}

fn attr<'a>(node: roxmltree::Node<'a, '_>, name: &str) -> Result<&'a str, SpecError> {
    node.attribute(name)
        .ok_or_else(|| schema(format!("<{}> is missing attribute `{name}`", node.tag_name().name())))
}

pub fn read_spec_xml(text: &str) -> Result<DesignSpec, SpecError> {
    let doc = roxmltree::Document::parse(text).map_err(|e| SpecError::new(SpecErrorKind::Malformed, e.to_string()))?;
    let root = doc.root_element();
    if root.tag_name().name() != "design" {
        return Err(schema(format!(
            "root element is <{}>, expected <design>",
            root.tag_name().name()
        )));
    }
    let reset_polarity = match attr(root, "reset_polarity")? {
        "low" => ResetPolarity::ActiveLow,
        "high" => ResetPolarity::ActiveHigh,
        other => return Err(schema(format!("reset_polarity `{other}` is not low|high"))),
    };
    let mut ports = Vec::new();
    for node in root.children().filter(|n| n.is_element()) {
        if node.tag_name().name() != "port" {
            return Err(schema(format!("unexpected element <{}>", node.tag_name().name())));
        }
        let direction = match attr(node, "dir")? {
            "in" => Direction::Input,
            "out" => Direction::Output,
            other => return Err(schema(format!("port direction `{other}` is not in|out"))),
        };
        let width_text = attr(node, "width")?;
        let width: u32 = width_text
            .parse()
            .map_err(|_| schema(format!("port width `{width_text}` is not a positive integer")))?;
        ports.push(SpecPort {
            name: attr(node, "name")?.to_string(),
            direction,
            width,
        });
    }
    let spec = DesignSpec {
        top: attr(root, "top")?.to_string(),
        ports,
        clock: attr(root, "clock")?.to_string(),
        reset: attr(root, "reset")?.to_string(),
        reset_polarity,
    };
    spec.validate().map_err(|e| schema(e.message))?;
    Ok(spec)
}
