//! Minimal s-expression reader with source positions. `;` starts a comment
//! that runs to the end of the line.

use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct SourceSpan {
    pub line: usize,
    pub col_start: usize,
    pub col_end: usize,
    /// Byte offsets into the input.
    pub start: usize,
    pub end: usize,
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col_start)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Sexpr {
    Sym(String, SourceSpan),
    List(Vec<Sexpr>, SourceSpan),
}

impl Sexpr {
    pub fn span(&self) -> SourceSpan {
        match self {
            Sexpr::Sym(_, s) | Sexpr::List(_, s) => *s,
        }
    }

    pub fn as_sym(&self) -> Option<&str> {
        match self {
            Sexpr::Sym(s, _) => Some(s),
            _ => None,
        }
    }

    pub fn as_list(&self) -> Option<&[Sexpr]> {
        match self {
            Sexpr::List(v, _) => Some(v),
            _ => None,
        }
    }

    /// The leading symbol of a list, if any.
    pub fn head(&self) -> Option<&str> {
        self.as_list().and_then(|v| v.first()).and_then(Sexpr::as_sym)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SyntaxError {
    pub span: SourceSpan,
    pub message: String,
}

struct Reader<'a> {
    src: &'a str,
    pos: usize,
    line: usize,
    col: usize,
}

impl<'a> Reader<'a> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn skip_trivia(&mut self) {
        while let Some(c) = self.peek() {
            if c == ';' {
                while let Some(c) = self.peek() {
                    if c == '\n' {
                        break;
                    }
                    self.bump();
                }
            } else if c.is_whitespace() {
                self.bump();
            } else {
                break;
            }
        }
    }

    fn here(&self) -> SourceSpan {
        SourceSpan { line: self.line, col_start: self.col, col_end: self.col, start: self.pos, end: self.pos }
    }

    fn read(&mut self) -> Result<Sexpr, SyntaxError> {
        self.skip_trivia();
        let mut span = self.here();
        match self.peek() {
            None => Err(SyntaxError { span, message: "unexpected end of input".into() }),
            Some(')') => {
                self.bump();
                span.end = self.pos;
                span.col_end = self.col;
                Err(SyntaxError { span, message: "unbalanced `)`".into() })
            }
            Some('(') => {
                self.bump();
                let mut items = Vec::new();
                loop {
                    self.skip_trivia();
                    match self.peek() {
                        None => {
                            span.end = self.pos;
                            span.col_end = span.col_start + 1;
                            span.end = span.start + 1;
                            return Err(SyntaxError { span, message: "unclosed `(`".into() });
                        }
                        Some(')') => {
                            self.bump();
                            break;
                        }
                        Some(_) => items.push(self.read()?),
                    }
                }
                if self.line == span.line {
                    span.col_end = self.col;
                } else {
                    span.col_end = span.col_start + 1;
                }
                span.end = self.pos;
                Ok(Sexpr::List(items, span))
            }
            Some(_) => {
                while let Some(c) = self.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' || c == ';' {
                        break;
                    }
                    self.bump();
                }
                span.end = self.pos;
                span.col_end = self.col;
                Ok(Sexpr::Sym(self.src[span.start..span.end].to_string(), span))
            }
        }
    }
}

/// Reads every top-level form in `src`.
pub fn read_all(src: &str) -> Result<Vec<Sexpr>, SyntaxError> {
    let mut r = Reader { src, pos: 0, line: 1, col: 1 };
    let mut out = Vec::new();
    loop {
        r.skip_trivia();
        if r.peek().is_none() {
            return Ok(out);
        }
        out.push(r.read()?);
    }
}
