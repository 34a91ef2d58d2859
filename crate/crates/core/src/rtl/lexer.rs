use super::ast::{Base, Span};
use super::error::{ParseError, ParseErrorKind};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    /// `$finish` and friends, without the dollar sign.
    System(String),
    Number {
        value: u64,
        width: Option<u32>,
        base: Base,
    },
    Sym(&'static str),
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::System(s) => format!("`${s}`"),
            Tok::Number { .. } => "number".to_string(),
            Tok::Sym(s) => format!("`{s}`"),
            Tok::Eof => "end of input".to_string(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

// Longest symbols first.
const SYMBOLS: &[&str] = &[
    "|->", "|=>", "<<<", ">>>", "===", "!==", "&&", "||", "==", "!=", "<=", ">=", "<<", ">>", "~&", "~|", "~^", "^~",
    "**", "(", ")", "[", "]", "{", "}", ";", ",", ":", ".", "@", "#", "=", "+", "-", "*", "/", "%", "&", "|", "^", "~",
    "!", "<", ">", "?",
];

pub fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let mut lexer = Lexer {
        chars: src.chars().collect(),
        pos: 0,
        line: 1,
        col: 1,
    };
    let mut out = Vec::new();
    loop {
        lexer.skip_trivia()?;
        let span = lexer.span();
        let Some(c) = lexer.peek(0) else {
            out.push(Token { tok: Tok::Eof, span });
            return Ok(out);
        };
        let tok = if c.is_ascii_alphabetic() || c == '_' {
            Tok::Ident(lexer.take_while(|c| c.is_ascii_alphanumeric() || c == '_' || c == '$'))
        } else if c == '$' {
            lexer.bump();
            let name = lexer.take_while(|c| c.is_ascii_alphanumeric() || c == '_');
            if name.is_empty() {
                return Err(ParseError::new(ParseErrorKind::Syntax, span, "stray `$`"));
            }
            Tok::System(name)
        } else if c.is_ascii_digit() || (c == '\'' && lexer.peek(1).is_some_and(is_base_char)) {
            lexer.number(span)?
        } else if c == '`' {
            return Err(ParseError::new(
                ParseErrorKind::Unsupported,
                span,
                "compiler directives are not supported",
            ));
        } else {
            let sym = SYMBOLS
                .iter()
                .find(|s| s.chars().enumerate().all(|(i, sc)| lexer.peek(i) == Some(sc)))
                .ok_or_else(|| ParseError::new(ParseErrorKind::Syntax, span, format!("unexpected character `{c}`")))?;
            for _ in 0..sym.len() {
                lexer.bump();
            }
            Tok::Sym(sym)
        };
        out.push(Token { tok, span });
    }
}

fn is_base_char(c: char) -> bool {
    matches!(c, 'b' | 'B' | 'd' | 'D' | 'h' | 'H' | 'o' | 'O' | 's' | 'S')
}

struct Lexer {
    chars: Vec<char>,
    pos: usize,
    line: u32,
    col: u32,
}

impl Lexer {
    fn peek(&self, ahead: usize) -> Option<char> {
        self.chars.get(self.pos + ahead).copied()
    }

    fn span(&self) -> Span {
        Span::new(self.line, self.col)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek(0)?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn take_while(&mut self, f: impl Fn(char) -> bool) -> String {
        let mut s = String::new();
        while let Some(c) = self.peek(0).filter(|&c| f(c)) {
            s.push(c);
            self.bump();
        }
        s
    }

    fn skip_trivia(&mut self) -> Result<(), ParseError> {
        loop {
            match (self.peek(0), self.peek(1)) {
                (Some(c), _) if c.is_whitespace() => {
                    self.bump();
                }
                (Some('/'), Some('/')) => {
                    while self.peek(0).is_some_and(|c| c != '\n') {
                        self.bump();
                    }
                }
                (Some('/'), Some('*')) => {
                    let start = self.span();
                    self.bump();
                    self.bump();
                    loop {
                        match (self.peek(0), self.peek(1)) {
                            (Some('*'), Some('/')) => {
                                self.bump();
                                self.bump();
                                break;
                            }
                            (Some(_), _) => {
                                self.bump();
                            }
                            (None, _) => {
                                return Err(ParseError::new(
                                    ParseErrorKind::Syntax,
                                    start,
                                    "unterminated block comment",
                                ))
                            }
                        }
                    }
                }
                _ => return Ok(()),
            }
        }
    }

    /// `123`, `8'hFF`, `'b1010`, `32'hACEC` with optional underscores.
    fn number(&mut self, span: Span) -> Result<Tok, ParseError> {
        let size_digits = self.take_while(|c| c.is_ascii_digit() || c == '_');
        let size_digits: String = size_digits.chars().filter(|&c| c != '_').collect();
        if self.peek(0) != Some('\'') {
            let value = parse_digits(&size_digits, 10, span)?;
            if value > u64::from(u32::MAX) {
                return Err(ParseError::new(
                    ParseErrorKind::Syntax,
                    span,
                    format!("unsized literal {size_digits} does not fit in 32 bits"),
                ));
            }
            return Ok(Tok::Number {
                value,
                width: None,
                base: Base::Dec,
            });
        }
        self.bump();
        let mut base_char = self.bump().unwrap_or(' ');
        if matches!(base_char, 's' | 'S') {
            return Err(ParseError::new(
                ParseErrorKind::Unsupported,
                span,
                "signed literals are not supported",
            ));
        }
        base_char = base_char.to_ascii_lowercase();
        let (base, radix) = match base_char {
            'b' => (Base::Bin, 2),
            'd' => (Base::Dec, 10),
            'h' => (Base::Hex, 16),
            'o' => {
                return Err(ParseError::new(
                    ParseErrorKind::Unsupported,
                    span,
                    "octal literals are not supported",
                ))
            }
            _ => return Err(ParseError::new(ParseErrorKind::Syntax, span, "bad literal base")),
        };
        while self.peek(0).is_some_and(|c| c == ' ' || c == '\t') {
            self.bump();
        }
        let digits = self.take_while(|c| c.is_ascii_alphanumeric() || c == '_' || c == '?');
        let digits: String = digits.chars().filter(|&c| c != '_').collect();
        if digits.chars().any(|c| matches!(c, 'x' | 'X' | 'z' | 'Z' | '?')) {
            return Err(ParseError::new(
                ParseErrorKind::Unsupported,
                span,
                "four-state literal digits (x/z) are not supported",
            ));
        }
        let value = parse_digits(&digits, radix, span)?;
        let width = if size_digits.is_empty() {
            None
        } else {
            let w = parse_digits(&size_digits, 10, span)?;
            if w == 0 {
                return Err(ParseError::new(ParseErrorKind::Syntax, span, "zero-width literal"));
            }
            if w > 64 {
                return Err(ParseError::new(
                    ParseErrorKind::Unsupported,
                    span,
                    format!("literal width {w} exceeds 64 bits"),
                ));
            }
            Some(w as u32)
        };
        let limit = width.unwrap_or(32);
        if limit < 64 && value >> limit != 0 {
            return Err(ParseError::new(
                ParseErrorKind::Syntax,
                span,
                format!("literal value {value:#x} does not fit in {limit} bits"),
            ));
        }
        Ok(Tok::Number { value, width, base })
    }
}

fn parse_digits(digits: &str, radix: u32, span: Span) -> Result<u64, ParseError> {
    if digits.is_empty() {
        return Err(ParseError::new(ParseErrorKind::Syntax, span, "missing literal digits"));
    }
    u64::from_str_radix(digits, radix)
        .map_err(|e| ParseError::new(ParseErrorKind::Syntax, span, format!("bad literal `{digits}`: {e}")))
}
