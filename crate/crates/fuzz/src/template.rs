//! Minimal placeholder templates.
//!
//! Grammar: `{{name}}` inserts a string value; `{{#each name}}...{{/each}}`
//! repeats its body once per item of a list value, with the item's fields
//! shadowing the enclosing ones. Everything else is copied verbatim.

use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Value {
    Str(String),
    List(Vec<Context>),
}

pub type Context = BTreeMap<String, Value>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TemplateError {
    #[error("unknown placeholder `{0}`")]
    Unknown(String),
    #[error("`{0}` is a list; use {{{{#each {0}}}}}")]
    NotAString(String),
    #[error("`{0}` is not a list")]
    NotAList(String),
    #[error("unterminated placeholder at byte {0}")]
    Unterminated(usize),
    #[error("`{{{{#each {0}}}}}` is never closed")]
    Unclosed(String),
    #[error("`{{{{/each}}}}` without a matching `{{{{#each}}}}` at byte {0}")]
    UnexpectedClose(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Node {
    Text(String),
    Var(String),
    Each(String, Vec<Node>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    nodes: Vec<Node>,
}

impl Template {
    pub fn parse(text: &str) -> Result<Self, TemplateError> {
        // stack of (list name, nodes collected so far)
        let mut stack: Vec<(String, Vec<Node>)> = vec![(String::new(), Vec::new())];
        let mut rest = text;
        let mut offset = 0;
        while let Some(start) = rest.find("{{") {
            if start > 0 {
                stack.last_mut().unwrap().1.push(Node::Text(rest[..start].to_string()));
            }
            let end = rest[start..]
                .find("}}")
                .ok_or(TemplateError::Unterminated(offset + start))?
                + start;
            let tag = rest[start + 2..end].trim();
            if let Some(name) = tag.strip_prefix("#each ") {
                stack.push((name.trim().to_string(), Vec::new()));
            } else if tag == "/each" {
                if stack.len() == 1 {
                    return Err(TemplateError::UnexpectedClose(offset + start));
                }
                let (name, body) = stack.pop().unwrap();
                stack.last_mut().unwrap().1.push(Node::Each(name, body));
            } else {
                stack.last_mut().unwrap().1.push(Node::Var(tag.to_string()));
            }
            offset += end + 2;
            rest = &rest[end + 2..];
        }
        if !rest.is_empty() {
            stack.last_mut().unwrap().1.push(Node::Text(rest.to_string()));
        }
        if stack.len() > 1 {
            return Err(TemplateError::Unclosed(stack.pop().unwrap().0));
        }
        Ok(Template {
            nodes: stack.pop().unwrap().1,
        })
    }

    pub fn render(&self, ctx: &Context) -> Result<String, TemplateError> {
        let mut out = String::new();
        render(&self.nodes, &[ctx], &mut out)?;
        Ok(out)
    }
}

fn lookup<'c>(scopes: &[&'c Context], name: &str) -> Option<&'c Value> {
    scopes.iter().rev().find_map(|s| s.get(name))
}

fn render(nodes: &[Node], scopes: &[&Context], out: &mut String) -> Result<(), TemplateError> {
    for node in nodes {
        match node {
            Node::Text(t) => out.push_str(t),
            Node::Var(name) => match lookup(scopes, name) {
                Some(Value::Str(s)) => out.push_str(s),
                Some(Value::List(_)) => return Err(TemplateError::NotAString(name.clone())),
                None => return Err(TemplateError::Unknown(name.clone())),
            },
            Node::Each(name, body) => match lookup(scopes, name) {
                Some(Value::List(items)) => {
                    for item in items {
                        let mut inner = scopes.to_vec();
                        inner.push(item);
                        render(body, &inner, out)?;
                    }
                }
                Some(Value::Str(_)) => return Err(TemplateError::NotAList(name.clone())),
                None => return Err(TemplateError::Unknown(name.clone())),
            },
        }
    }
    Ok(())
}

/// Builds a context from string pairs.
pub fn context<'a>(pairs: impl IntoIterator<Item = (&'a str, String)>) -> Context {
    pairs.into_iter().map(|(k, v)| (k.to_string(), Value::Str(v))).collect()
}
