//! TRL concrete syntax: lexer, recursive-descent parser, canonical printer.

use thiserror::Error;

use crate::term::{Copula, CopulaKind, CopulaRegistry, Term};

#[derive(Debug, Error, PartialEq)]
#[error("line {line}, column {column}: {message}{}", expected_suffix(.expected))]
pub struct SyntaxError {
    pub line: usize,
    pub column: usize,
    pub message: String,
    pub expected: Vec<String>,
}

fn expected_suffix(expected: &[String]) -> String {
    if expected.is_empty() {
        String::new()
    } else {
        format!(" (expected {})", expected.join(", "))
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    LParen,
    RParen,
    Comma,
    Colon,
    Percent,
    Copula(String),
    Ident(String),
    Variable(String),
    Number(f64),
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Percent => "`%`".into(),
            Tok::Copula(s) => format!("copula `{s}`"),
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Variable(s) => format!("`${s}`"),
            Tok::Number(n) => format!("number `{n}`"),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Clone, Debug)]
struct Spanned {
    tok: Tok,
    line: usize,
    column: usize,
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '-'
}

struct Lexer<'a> {
    text: &'a str,
    bytes: &'a [u8],
    pos: usize,
    line: usize,
    column: usize,
    surfaces: Vec<String>,
}

impl<'a> Lexer<'a> {
    fn new(text: &'a str, registry: &CopulaRegistry, line: usize) -> Self {
        Lexer {
            text,
            bytes: text.as_bytes(),
            pos: 0,
            line,
            column: 1,
            surfaces: registry.surfaces().into_iter().map(String::from).collect(),
        }
    }

    fn error(&self, message: impl Into<String>) -> SyntaxError {
        SyntaxError { line: self.line, column: self.column, message: message.into(), expected: vec![] }
    }

    fn bump(&mut self, n: usize) {
        for _ in 0..n {
            if self.bytes.get(self.pos) == Some(&b'\n') {
                self.line += 1;
                self.column = 1;
            } else {
                self.column += 1;
            }
            self.pos += 1;
        }
    }

    /// Longest registered copula surface starting at the cursor, if any.
    fn copula_at(&self, at: usize) -> Option<&str> {
        let rest = &self.text[at..];
        self.surfaces.iter().map(String::as_str).find(|s| rest.starts_with(*s))
    }

    fn tokens(mut self) -> Result<Vec<Spanned>, SyntaxError> {
        let mut out = Vec::new();
        loop {
            while let Some(&b) = self.bytes.get(self.pos) {
                if b == b'#' {
                    // Comment runs to end of line.
                    while self.bytes.get(self.pos).is_some_and(|&b| b != b'\n') {
                        self.bump(1);
                    }
                } else if (b as char).is_whitespace() {
                    self.bump(1);
                } else {
                    break;
                }
            }
            let (line, column) = (self.line, self.column);
            let Some(&b) = self.bytes.get(self.pos) else {
                out.push(Spanned { tok: Tok::Eof, line, column });
                return Ok(out);
            };
            let tok = if let Some(surface) = self.copula_at(self.pos) {
                let s = surface.to_string();
                self.bump(s.len());
                Tok::Copula(s)
            } else {
                match b {
                    b'(' => {
                        self.bump(1);
                        Tok::LParen
                    }
                    b')' => {
                        self.bump(1);
                        Tok::RParen
                    }
                    b',' => {
                        self.bump(1);
                        Tok::Comma
                    }
                    b':' => {
                        self.bump(1);
                        Tok::Colon
                    }
                    b'%' => {
                        self.bump(1);
                        Tok::Percent
                    }
                    b'$' => {
                        self.bump(1);
                        let start = self.pos;
                        while self
                            .bytes
                            .get(self.pos)
                            .is_some_and(|&b| is_ident_char(b as char) && self.copula_at(self.pos).is_none())
                        {
                            self.bump(1);
                        }
                        if self.pos == start {
                            return Err(self.error("`$` must be followed by a variable name"));
                        }
                        Tok::Variable(self.text[start..self.pos].to_string())
                    }
                    _ if is_ident_char(b as char) => {
                        let start = self.pos;
                        let mut saw_dot = false;
                        while let Some(&b) = self.bytes.get(self.pos) {
                            let c = b as char;
                            if self.copula_at(self.pos).is_some() {
                                break;
                            }
                            // Dots only continue numeric literals (confidences).
                            if c == '.' && self.text[start..self.pos].bytes().all(|b| b.is_ascii_digit()) {
                                saw_dot = true;
                            } else if !is_ident_char(c) {
                                break;
                            } else if saw_dot && !c.is_ascii_digit() {
                                break;
                            }
                            self.bump(1);
                        }
                        let s = &self.text[start..self.pos];
                        if saw_dot {
                            match s.parse::<f64>() {
                                Ok(n) => Tok::Number(n),
                                Err(_) => {
                                    return Err(SyntaxError {
                                        line,
                                        column,
                                        message: format!("`{s}` is not a valid number"),
                                        expected: vec![],
                                    })
                                }
                            }
                        } else {
                            Tok::Ident(s.to_string())
                        }
                    }
                    _ => {
                        return Err(self.error(format!("unexpected character `{}`", b as char)));
                    }
                }
            };
            out.push(Spanned { tok, line, column });
        }
    }
}

struct Parser<'a> {
    toks: Vec<Spanned>,
    pos: usize,
    registry: &'a CopulaRegistry,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &Spanned {
        &self.toks[self.pos.min(self.toks.len() - 1)]
    }

    fn next(&mut self) -> Spanned {
        let t = self.toks[self.pos.min(self.toks.len() - 1)].clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn fail<T>(&self, at: &Spanned, expected: &[&str]) -> Result<T, SyntaxError> {
        Err(SyntaxError {
            line: at.line,
            column: at.column,
            message: format!("unexpected {}", at.tok.describe()),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        })
    }

    fn copula(&self, at: &Spanned, surface: &str) -> Copula {
        // The lexer only emits surfaces the registry knows.
        self.registry
            .by_surface(surface)
            .unwrap_or_else(|| panic!("lexer produced unknown copula at {}:{}", at.line, at.column))
            .clone()
    }

    /// Splits a trailing `_<digits>` token index off a symbol.
    fn basic_from_ident(ident: &str) -> Term {
        if let Some(at) = ident.rfind('_') {
            let digits = &ident[at + 1..];
            if !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) && at > 0 {
                if let Ok(n) = digits.parse::<u32>() {
                    return Term::basic_token(&ident[..at], n);
                }
            }
        }
        Term::basic(ident)
    }

    /// One term. Parenthesized forms disambiguate on the token after the
    /// first inner term: `,` starts a compound, a copula a statement/linkage.
    fn parse_term(&mut self) -> Result<Term, SyntaxError> {
        let t = self.next();
        match t.tok {
            Tok::Ident(ref s) => Ok(Self::basic_from_ident(s)),
            Tok::Variable(ref name) => Ok(Term::var(name.clone())),
            Tok::LParen => {
                let first = self.parse_term()?;
                let sep = self.next();
                match sep.tok {
                    Tok::Comma => {
                        let mut elements = vec![self.parse_term()?];
                        loop {
                            let nxt = self.next();
                            match nxt.tok {
                                Tok::Comma => elements.push(self.parse_term()?),
                                Tok::RParen => break,
                                _ => return self.fail(&nxt, &["`,`", "`)`"]),
                            }
                        }
                        Ok(Term::Compound { relation: Box::new(first), elements })
                    }
                    Tok::Copula(ref surface) => {
                        let copula = self.copula(&sep, surface);
                        let right = self.parse_term()?;
                        let close = self.next();
                        if close.tok != Tok::RParen {
                            return self.fail(&close, &["`)`"]);
                        }
                        Ok(join(copula, first, right))
                    }
                    _ => self.fail(&sep, &["`,`", "a copula"]),
                }
            }
            _ => self.fail(&t, &["a symbol", "a `$variable`", "`(`"]),
        }
    }

    /// A term with the top-level statement/linkage sugar: outer parentheses
    /// may be omitted, as in `human -> animal`.
    fn parse_top_term(&mut self) -> Result<Term, SyntaxError> {
        let left = self.parse_term()?;
        if let Tok::Copula(surface) = self.peek().tok.clone() {
            let at = self.next();
            let copula = self.copula(&at, &surface);
            let right = self.parse_term()?;
            Ok(join(copula, left, right))
        } else {
            Ok(left)
        }
    }

    fn expect_eof(&mut self) -> Result<(), SyntaxError> {
        let t = self.next();
        if t.tok != Tok::Eof {
            return self.fail(&t, &["end of input"]);
        }
        Ok(())
    }
}

fn join(copula: Copula, left: Term, right: Term) -> Term {
    match copula.kind {
        CopulaKind::Statement => Term::Statement { copula, left: Box::new(left), right: Box::new(right) },
        CopulaKind::Linkage => Term::Linkage { copula, left: Box::new(left), right: Box::new(right) },
    }
}

fn parser_for<'a>(
    text: &str,
    registry: &'a CopulaRegistry,
    line: usize,
) -> Result<Parser<'a>, SyntaxError> {
    let toks = Lexer::new(text, registry, line).tokens()?;
    Ok(Parser { toks, pos: 0, registry })
}

/// Parse a single term. Top-level statements and linkages may omit the outer
/// parentheses.
pub fn parse_term(text: &str, registry: &CopulaRegistry) -> Result<Term, SyntaxError> {
    let mut p = parser_for(text, registry, 1)?;
    let t = p.parse_top_term()?;
    p.expect_eof()?;
    Ok(t)
}

/// One judgment as written in a KB file.
#[derive(Clone, Debug, PartialEq)]
pub struct SourceJudgment {
    pub label: Option<String>,
    pub term: Term,
    pub confidence: f64,
    pub line: usize,
}

/// Parse `[label ':'] term ['%' number '%']`.
pub fn parse_judgment(text: &str, registry: &CopulaRegistry) -> Result<SourceJudgment, SyntaxError> {
    parse_judgment_at(text, registry, 1)
}

fn parse_judgment_at(
    text: &str,
    registry: &CopulaRegistry,
    line: usize,
) -> Result<SourceJudgment, SyntaxError> {
    let mut p = parser_for(text, registry, line)?;
    let mut label = None;
    if let (Tok::Ident(name), Some(Tok::Colon)) =
        (p.peek().tok.clone(), p.toks.get(p.pos + 1).map(|s| s.tok.clone()))
    {
        label = Some(name);
        p.next();
        p.next();
    }
    let term = p.parse_top_term()?;
    let mut confidence = 1.0;
    if p.peek().tok == Tok::Percent {
        let at = p.next();
        let num = p.next();
        confidence = match num.tok {
            Tok::Number(n) => n,
            Tok::Ident(ref s) if s.bytes().all(|b| b.is_ascii_digit()) => s.parse().unwrap(),
            _ => return p.fail(&num, &["a confidence in [0, 1]"]),
        };
        if !(0.0..=1.0).contains(&confidence) {
            return Err(SyntaxError {
                line: at.line,
                column: at.column,
                message: format!("confidence {confidence} is outside [0, 1]"),
                expected: vec![],
            });
        }
        let close = p.next();
        if close.tok != Tok::Percent {
            return p.fail(&close, &["`%`"]);
        }
    }
    p.expect_eof()?;
    Ok(SourceJudgment { label, term, confidence, line })
}

/// Parse a line-oriented KB file: one judgment per line, `#` comments, blank
/// lines ignored. Duplicate labels are an error.
pub fn parse_kb(text: &str, registry: &CopulaRegistry) -> Result<Vec<SourceJudgment>, SyntaxError> {
    let mut out: Vec<SourceJudgment> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let stripped = strip_comment(raw);
        if stripped.trim().is_empty() {
            continue;
        }
        let j = parse_judgment_at(stripped, registry, line_no)?;
        if let Some(label) = &j.label {
            if out.iter().any(|prev| prev.label.as_deref() == Some(label)) {
                return Err(SyntaxError {
                    line: line_no,
                    column: 1,
                    message: format!("duplicate label `{label}`"),
                    expected: vec![],
                });
            }
        }
        out.push(j);
    }
    Ok(out)
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(at) => &line[..at],
        None => line,
    }
}

/// Canonical printed form; `parse_term` of the output reproduces the term.
pub fn print_term(t: &Term) -> String {
    t.to_string()
}

/// Canonical judgment line. Confidence is omitted when it is exactly 1.
pub fn print_judgment(label: Option<&str>, term: &Term, confidence: f64) -> String {
    let mut s = String::new();
    if let Some(l) = label {
        s.push_str(l);
        s.push_str(": ");
    }
    s.push_str(&term.to_string());
    if confidence != 1.0 {
        s.push_str(&format!(" %{confidence}%"));
    }
    s
}
