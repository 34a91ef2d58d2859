//! Verilog subset frontend: lexing, parsing, pretty-printing, design
//! specification extraction and the spec XML format.

pub mod ast;
mod error;
mod lexer;
mod parser;
pub mod print;
mod spec;
mod xml;

pub use ast::*;
pub use error::{ParseError, ParseErrorKind, SpecError, SpecErrorKind};
pub use parser::parse;
pub use spec::{extract_spec, DesignSpec, ResetPolarity, SpecPort};
pub use xml::{read_spec_xml, write_spec_xml};
