//! Concrete surface syntax: tokenizer, recursive-descent parser, and
//! program files.
//!
//! Grammar sketch, precedence low to high (`let`/`fun`/`case` bind weakest,
//! then `;`, then application; prefix keywords like `lift` take a single
//! operand):
//!
//! ```text
//! term    := 'let' x '=' term 'in' term
//!          | 'let' '(' x ',' y ')' '=' term 'in' term
//!          | 'fun' x ':' type '.' term
//!          | 'case' term 'of' 'left' x '->' term '|' 'right' y '->' term
//!          | seq
//! seq     := app [';' term]
//! app     := operand+
//! operand := ('lift'|'force'|'succ') operand
//!          | ('box'|'abort') '[' type ']' operand
//!          | ('left'|'right') '[' type ',' type ']' operand
//!          | atom
//! atom    := ident | label | nat | '(' ')' | '(' term ')' | '(' term ',' term ')'
//!          | 'nil' '[' type ']' | 'apply' '(' term ',' term ')' | 'cons' '(' term ',' term ')'
//! type    := sum ['-o' type]         sum := prod ('+' prod)*
//! prod    := tpre ('*' tpre)*        tpre := '!' tpre | 'List' tpre | tatom
//! tatom   := wire | 'I' | 'Nat' | '0' | 'Circ' '(' type ',' type ')' | '(' type ')'
//! ```
//!
//! Boxed-circuit terms have no source spelling; labels are written `L<n>`.
//! Program files are `def name : type = term ;` sequences with `--` line
//! comments.

use std::fmt;

use serde::Serialize;

use crate::syntax::{Label, Term, Type};

/// A source location: 1-based line and column plus a length in characters.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
pub struct Span {
    pub line: u32,
    pub col: u32,
    pub len: u32,
}

impl Span {
    fn point(line: u32, col: u32) -> Span {
        Span { line, col, len: 1 }
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
pub enum Severity {
    Error,
    Warning,
}

/// A reportable message tied to a source span.
#[derive(Clone, Debug, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub code: String,
    pub message: String,
    pub span: Span,
}

/// Parse-phase failures. Every error carries its span and a non-empty set
/// of expected items.
#[derive(Clone, Debug, PartialEq)]
pub struct ParseError {
    pub message: String,
    pub expected: Vec<String>,
    pub span: Span,
    pub kind: ParseErrorKind,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ParseErrorKind {
    Lex,
    Syntax,
    WellFormedness,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at {}", self.message, self.span)
    }
}

impl std::error::Error for ParseError {}

impl ParseError {
    pub fn to_diagnostic(&self) -> Diagnostic {
        let code = match self.kind {
            ParseErrorKind::Lex => "LexError",
            ParseErrorKind::Syntax => "ParseError",
            ParseErrorKind::WellFormedness => "WellFormednessError",
        };
        Diagnostic {
            severity: Severity::Error,
            code: code.to_string(),
            message: format!("{} (expected {})", self.message, self.expected.join(", ")),
            span: self.span,
        }
    }
}

// ---------------------------------------------------------------------------
// Tokens
// ---------------------------------------------------------------------------

#[derive(Clone, PartialEq, Debug)]
pub enum Tok {
    Ident(String),
    LabelTok(Label),
    Nat(u64),
    KwLet,
    KwIn,
    KwFun,
    KwLift,
    KwForce,
    KwBox,
    KwApply,
    KwLeft,
    KwRight,
    KwCase,
    KwOf,
    KwAbort,
    KwNil,
    KwCons,
    KwSucc,
    KwDef,
    LParen,
    RParen,
    LBrack,
    RBrack,
    LBrace,
    RBrace,
    Comma,
    Semi,
    Dot,
    Arrow,
    Lolli,
    Star,
    Plus,
    Bang,
    Eq,
    Pipe,
    Colon,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::LabelTok(l) => format!("label `{l}`"),
            Tok::Nat(n) => format!("numeral `{n}`"),
            Tok::KwLet => "`let`".into(),
            Tok::KwIn => "`in`".into(),
            Tok::KwFun => "`fun`".into(),
            Tok::KwLift => "`lift`".into(),
            Tok::KwForce => "`force`".into(),
            Tok::KwBox => "`box`".into(),
            Tok::KwApply => "`apply`".into(),
            Tok::KwLeft => "`left`".into(),
            Tok::KwRight => "`right`".into(),
            Tok::KwCase => "`case`".into(),
            Tok::KwOf => "`of`".into(),
            Tok::KwAbort => "`abort`".into(),
            Tok::KwNil => "`nil`".into(),
            Tok::KwCons => "`cons`".into(),
            Tok::KwSucc => "`succ`".into(),
            Tok::KwDef => "`def`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBrack => "`[`".into(),
            Tok::RBrack => "`]`".into(),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Semi => "`;`".into(),
            Tok::Dot => "`.`".into(),
            Tok::Arrow => "`->`".into(),
            Tok::Lolli => "`-o`".into(),
            Tok::Star => "`*`".into(),
            Tok::Plus => "`+`".into(),
            Tok::Bang => "`!`".into(),
            Tok::Eq => "`=`".into(),
            Tok::Pipe => "`|`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

fn keyword(word: &str) -> Option<Tok> {
    Some(match word {
        "let" => Tok::KwLet,
        "in" => Tok::KwIn,
        "fun" => Tok::KwFun,
        "lift" => Tok::KwLift,
        "force" => Tok::KwForce,
        "box" => Tok::KwBox,
        "apply" => Tok::KwApply,
        "left" => Tok::KwLeft,
        "right" => Tok::KwRight,
        "case" => Tok::KwCase,
        "of" => Tok::KwOf,
        "abort" => Tok::KwAbort,
        "nil" => Tok::KwNil,
        "cons" => Tok::KwCons,
        "succ" => Tok::KwSucc,
        "def" => Tok::KwDef,
        _ => return None,
    })
}

/// Splits the input into spanned tokens. `--` starts a line comment.
pub fn tokenize(text: &str) -> Result<Vec<Token>, ParseError> {
    let mut tokens = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    let mut line = 1u32;
    let mut col = 1u32;

    macro_rules! push {
        ($tok:expr, $len:expr) => {{
            tokens.push(Token {
                tok: $tok,
                span: Span { line, col, len: $len },
            });
            col += $len;
        }};
    }

    while i < chars.len() {
        let c = chars[i];
        match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
            }
            ' ' | '\t' | '\r' => {
                i += 1;
                col += 1;
            }
            '(' => {
                push!(Tok::LParen, 1);
                i += 1;
            }
            ')' => {
                push!(Tok::RParen, 1);
                i += 1;
            }
            '[' => {
                push!(Tok::LBrack, 1);
                i += 1;
            }
            ']' => {
                push!(Tok::RBrack, 1);
                i += 1;
            }
            '{' => {
                push!(Tok::LBrace, 1);
                i += 1;
            }
            '}' => {
                push!(Tok::RBrace, 1);
                i += 1;
            }
            ',' => {
                push!(Tok::Comma, 1);
                i += 1;
            }
            ';' => {
                push!(Tok::Semi, 1);
                i += 1;
            }
            '.' => {
                push!(Tok::Dot, 1);
                i += 1;
            }
            '*' => {
                push!(Tok::Star, 1);
                i += 1;
            }
            '+' => {
                push!(Tok::Plus, 1);
                i += 1;
            }
            '!' => {
                push!(Tok::Bang, 1);
                i += 1;
            }
            '=' => {
                push!(Tok::Eq, 1);
                i += 1;
            }
            '|' => {
                push!(Tok::Pipe, 1);
                i += 1;
            }
            ':' => {
                push!(Tok::Colon, 1);
                i += 1;
            }
            '-' => match chars.get(i + 1) {
                Some('>') => {
                    push!(Tok::Arrow, 2);
                    i += 2;
                }
                Some('o') => {
                    push!(Tok::Lolli, 2);
                    i += 2;
                }
                Some('-') => {
                    while i < chars.len() && chars[i] != '\n' {
                        i += 1;
                    }
                }
                _ => {
                    return Err(ParseError {
                        message: "stray `-`".to_string(),
                        expected: vec!["`->`".into(), "`-o`".into(), "`--` comment".into()],
                        span: Span::point(line, col),
                        kind: ParseErrorKind::Lex,
                    })
                }
            },
            c if c.is_ascii_digit() => {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let text: String = chars[start..i].iter().collect();
                let len = (i - start) as u32;
                let n: u64 = text.parse().map_err(|_| ParseError {
                    message: format!("numeral `{text}` out of range"),
                    expected: vec!["a 64-bit natural".into()],
                    span: Span { line, col, len },
                    kind: ParseErrorKind::Lex,
                })?;
                push!(Tok::Nat(n), len);
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len()
                    && (chars[i].is_ascii_alphanumeric() || chars[i] == '_' || chars[i] == '\'')
                {
                    i += 1;
                }
                let word: String = chars[start..i].iter().collect();
                let len = (i - start) as u32;
                let tok = if let Some(kw) = keyword(&word) {
                    kw
                } else if let Some(label) = Label::parse(&word) {
                    Tok::LabelTok(label)
                } else {
                    Tok::Ident(word)
                };
                push!(tok, len);
            }
            other => {
                return Err(ParseError {
                    message: format!("illegal character `{other}`"),
                    expected: vec!["a valid token".into()],
                    span: Span::point(line, col),
                    kind: ParseErrorKind::Lex,
                })
            }
        }
    }
    tokens.push(Token {
        tok: Tok::Eof,
        span: Span { line, col, len: 0 },
    });
    Ok(tokens)
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

/// One top-level definition of a program file.
#[derive(Clone, Debug)]
pub struct Definition {
    pub name: String,
    pub declared_type: Type,
    pub body: Term,
    pub span: Span,
}

/// A parsed program file: an ordered list of definitions.
#[derive(Clone, Debug, Default)]
pub struct SourceProgram {
    pub defs: Vec<Definition>,
}

impl SourceProgram {
    pub fn find(&self, name: &str) -> Option<(usize, &Definition)> {
        self.defs
            .iter()
            .enumerate()
            .find(|(_, d)| d.name == name)
    }

    /// Desugars the entry definition into a closed term by wrapping it in
    /// `let`s for every earlier definition it transitively references.
    /// Unreferenced definitions are dropped so that, for example, an unused
    /// linear definition cannot make an unrelated entry ill-typed.
    pub fn entry_term(&self, entry: &str) -> Option<(Term, Type)> {
        let (idx, def) = self.find(entry)?;
        let mut needed: std::collections::BTreeSet<String> =
            crate::syntax::free_identifiers(&def.body).0;
        let mut included = vec![false; idx];
        for j in (0..idx).rev() {
            if needed.contains(&self.defs[j].name) {
                included[j] = true;
                needed.extend(crate::syntax::free_identifiers(&self.defs[j].body).0);
            }
        }
        let mut term = def.body.clone();
        for j in (0..idx).rev() {
            if included[j] {
                term = Term::let_(&self.defs[j].name, self.defs[j].body.clone(), term);
            }
        }
        Some((term, def.declared_type.clone()))
    }
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek_span(&self) -> Span {
        self.tokens[self.pos].span
    }

    fn advance(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, expected: &[&str]) -> PResult<T> {
        Err(ParseError {
            message: format!("unexpected {}", self.peek().describe()),
            expected: expected.iter().map(|s| s.to_string()).collect(),
            span: self.peek_span(),
            kind: ParseErrorKind::Syntax,
        })
    }

    fn expect(&mut self, tok: Tok) -> PResult<Token> {
        if *self.peek() == tok {
            Ok(self.advance())
        } else {
            self.error(&[&tok.describe()])
        }
    }

    fn expect_ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                self.advance();
                Ok(name)
            }
            _ => self.error(&["an identifier"]),
        }
    }

    // ---- types ----

    fn parse_type(&mut self) -> PResult<Type> {
        let lhs = self.parse_type_sum()?;
        if *self.peek() == Tok::Lolli {
            self.advance();
            let rhs = self.parse_type()?;
            Ok(Type::lolli(lhs, rhs))
        } else {
            Ok(lhs)
        }
    }

    fn parse_type_sum(&mut self) -> PResult<Type> {
        let mut acc = self.parse_type_prod()?;
        while *self.peek() == Tok::Plus {
            self.advance();
            let rhs = self.parse_type_prod()?;
            acc = Type::sum(acc, rhs);
        }
        Ok(acc)
    }

    fn parse_type_prod(&mut self) -> PResult<Type> {
        let mut acc = self.parse_type_prefix()?;
        while *self.peek() == Tok::Star {
            self.advance();
            let rhs = self.parse_type_prefix()?;
            acc = Type::tensor(acc, rhs);
        }
        Ok(acc)
    }

    fn parse_type_prefix(&mut self) -> PResult<Type> {
        match self.peek().clone() {
            Tok::Bang => {
                self.advance();
                Ok(Type::bang(self.parse_type_prefix()?))
            }
            Tok::Ident(name) if name == "List" => {
                self.advance();
                Ok(Type::list(self.parse_type_prefix()?))
            }
            _ => self.parse_type_atom(),
        }
    }

    fn parse_type_atom(&mut self) -> PResult<Type> {
        let span = self.peek_span();
        match self.peek().clone() {
            Tok::Nat(0) => {
                self.advance();
                Ok(Type::Zero)
            }
            Tok::Ident(name) => {
                self.advance();
                match name.as_str() {
                    "I" => Ok(Type::Unit),
                    "Nat" => Ok(Type::Nat),
                    "Circ" => {
                        self.expect(Tok::LParen)?;
                        let t = self.parse_type()?;
                        self.expect(Tok::Comma)?;
                        let u = self.parse_type()?;
                        self.expect(Tok::RParen)?;
                        for side in [&t, &u] {
                            if !side.is_simple_m() {
                                return Err(ParseError {
                                    message: format!(
                                        "Circ argument `{}` is not a simple M-type",
                                        crate::pretty::type_to_string(side)
                                    ),
                                    expected: vec!["a simple M-type (wires, I, *)".into()],
                                    span,
                                    kind: ParseErrorKind::WellFormedness,
                                });
                            }
                        }
                        Ok(Type::circ(t, u))
                    }
                    _ => Ok(Type::Wire(name)),
                }
            }
            Tok::LParen => {
                self.advance();
                let t = self.parse_type()?;
                self.expect(Tok::RParen)?;
                Ok(t)
            }
            _ => self.error(&["a type"]),
        }
    }

    // ---- terms ----

    fn parse_term(&mut self) -> PResult<Term> {
        match self.peek().clone() {
            Tok::KwLet => {
                self.advance();
                if *self.peek() == Tok::LParen {
                    self.advance();
                    let x = self.expect_ident()?;
                    self.expect(Tok::Comma)?;
                    let y = self.expect_ident()?;
                    self.expect(Tok::RParen)?;
                    self.expect(Tok::Eq)?;
                    let bound = self.parse_term()?;
                    self.expect(Tok::KwIn)?;
                    let body = self.parse_term()?;
                    Ok(Term::LetPair(x, y, Box::new(bound), Box::new(body)))
                } else {
                    let x = self.expect_ident()?;
                    self.expect(Tok::Eq)?;
                    let bound = self.parse_term()?;
                    self.expect(Tok::KwIn)?;
                    let body = self.parse_term()?;
                    Ok(Term::Let(x, Box::new(bound), Box::new(body)))
                }
            }
            Tok::KwFun => {
                self.advance();
                let x = self.expect_ident()?;
                self.expect(Tok::Colon)?;
                let ty = self.parse_type()?;
                self.expect(Tok::Dot)?;
                let body = self.parse_term()?;
                Ok(Term::Lam(x, ty, Box::new(body)))
            }
            Tok::KwCase => {
                self.advance();
                let scrut = self.parse_term()?;
                self.expect(Tok::KwOf)?;
                self.expect(Tok::KwLeft)?;
                let x = self.expect_ident()?;
                self.expect(Tok::Arrow)?;
                let left = self.parse_term()?;
                self.expect(Tok::Pipe)?;
                self.expect(Tok::KwRight)?;
                let y = self.expect_ident()?;
                self.expect(Tok::Arrow)?;
                let right = self.parse_term()?;
                Ok(Term::Case(Box::new(scrut), x, Box::new(left), y, Box::new(right)))
            }
            _ => self.parse_seq(),
        }
    }

    fn parse_seq(&mut self) -> PResult<Term> {
        let first = self.parse_app()?;
        if *self.peek() == Tok::Semi {
            self.advance();
            let rest = self.parse_term()?;
            Ok(Term::seq(first, rest))
        } else {
            Ok(first)
        }
    }

    fn starts_operand(tok: &Tok) -> bool {
        matches!(
            tok,
            Tok::Ident(_)
                | Tok::LabelTok(_)
                | Tok::Nat(_)
                | Tok::LParen
                | Tok::KwNil
                | Tok::KwApply
                | Tok::KwCons
                | Tok::KwLift
                | Tok::KwForce
                | Tok::KwSucc
                | Tok::KwBox
                | Tok::KwAbort
                | Tok::KwLeft
                | Tok::KwRight
        )
    }

    fn parse_app(&mut self) -> PResult<Term> {
        let mut acc = self.parse_operand()?;
        while Self::starts_operand(self.peek()) {
            let arg = self.parse_operand()?;
            acc = Term::app(acc, arg);
        }
        Ok(acc)
    }

    fn parse_operand(&mut self) -> PResult<Term> {
        match self.peek().clone() {
            Tok::KwLift => {
                self.advance();
                Ok(Term::lift(self.parse_operand()?))
            }
            Tok::KwForce => {
                self.advance();
                Ok(Term::force(self.parse_operand()?))
            }
            Tok::KwSucc => {
                self.advance();
                Ok(Term::succ(self.parse_operand()?))
            }
            Tok::KwBox => {
                self.advance();
                self.expect(Tok::LBrack)?;
                let ty = self.parse_type()?;
                self.expect(Tok::RBrack)?;
                Ok(Term::box_(ty, self.parse_operand()?))
            }
            Tok::KwAbort => {
                self.advance();
                self.expect(Tok::LBrack)?;
                let ty = self.parse_type()?;
                self.expect(Tok::RBrack)?;
                Ok(Term::Abort(ty, Box::new(self.parse_operand()?)))
            }
            Tok::KwLeft | Tok::KwRight => {
                let is_left = *self.peek() == Tok::KwLeft;
                self.advance();
                self.expect(Tok::LBrack)?;
                let a = self.parse_type()?;
                self.expect(Tok::Comma)?;
                let b = self.parse_type()?;
                self.expect(Tok::RBrack)?;
                let body = self.parse_operand()?;
                Ok(if is_left {
                    Term::inl(a, b, body)
                } else {
                    Term::inr(a, b, body)
                })
            }
            _ => self.parse_atom(),
        }
    }

    fn parse_atom(&mut self) -> PResult<Term> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                self.advance();
                Ok(Term::Var(name))
            }
            Tok::LabelTok(l) => {
                self.advance();
                Ok(Term::Lab(l))
            }
            Tok::Nat(n) => {
                self.advance();
                Ok(Term::NatLit(n))
            }
            Tok::KwNil => {
                self.advance();
                self.expect(Tok::LBrack)?;
                let ty = self.parse_type()?;
                self.expect(Tok::RBrack)?;
                Ok(Term::Nil(ty))
            }
            Tok::KwApply => {
                self.advance();
                self.expect(Tok::LParen)?;
                let m = self.parse_term()?;
                self.expect(Tok::Comma)?;
                let n = self.parse_term()?;
                self.expect(Tok::RParen)?;
                Ok(Term::apply(m, n))
            }
            Tok::KwCons => {
                self.advance();
                self.expect(Tok::LParen)?;
                let m = self.parse_term()?;
                self.expect(Tok::Comma)?;
                let n = self.parse_term()?;
                self.expect(Tok::RParen)?;
                Ok(Term::cons(m, n))
            }
            Tok::LParen => {
                self.advance();
                if *self.peek() == Tok::RParen {
                    self.advance();
                    return Ok(Term::Unit);
                }
                let first = self.parse_term()?;
                match self.peek() {
                    Tok::Comma => {
                        self.advance();
                        let second = self.parse_term()?;
                        self.expect(Tok::RParen)?;
                        Ok(Term::pair(first, second))
                    }
                    Tok::RParen => {
                        self.advance();
                        Ok(first)
                    }
                    _ => self.error(&["`,`", "`)`"]),
                }
            }
            _ => self.error(&["a term"]),
        }
    }

    fn parse_program(&mut self) -> PResult<SourceProgram> {
        let mut defs: Vec<Definition> = Vec::new();
        while *self.peek() != Tok::Eof {
            let span = self.peek_span();
            self.expect(Tok::KwDef)?;
            let name = self.expect_ident()?;
            if defs.iter().any(|d| d.name == name) {
                return Err(ParseError {
                    message: format!("duplicate definition `{name}`"),
                    expected: vec!["a unique definition name".into()],
                    span,
                    kind: ParseErrorKind::WellFormedness,
                });
            }
            self.expect(Tok::Colon)?;
            let declared_type = self.parse_type()?;
            self.expect(Tok::Eq)?;
            let body = self.parse_term()?;
            self.expect(Tok::Semi)?;
            defs.push(Definition {
                name,
                declared_type,
                body,
                span,
            });
        }
        Ok(SourceProgram { defs })
    }
}

fn parser_for(text: &str) -> Result<Parser, ParseError> {
    Ok(Parser {
        tokens: tokenize(text)?,
        pos: 0,
    })
}

/// Parses a standalone term, requiring all input to be consumed.
pub fn parse_term_str(text: &str) -> Result<Term, ParseError> {
    let mut p = parser_for(text)?;
    let t = p.parse_term()?;
    p.expect(Tok::Eof)?;
    Ok(t)
}

/// Parses a standalone type.
pub fn parse_type_str(text: &str) -> Result<Type, ParseError> {
    let mut p = parser_for(text)?;
    let t = p.parse_type()?;
    p.expect(Tok::Eof)?;
    Ok(t)
}

/// Parses a program file of `def` items.
pub fn parse_program_str(text: &str) -> Result<SourceProgram, ParseError> {
    let mut p = parser_for(text)?;
    p.parse_program()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenize_golden() {
        let toks: Vec<Tok> = tokenize("lift x").unwrap().into_iter().map(|t| t.tok).collect();
        assert_eq!(toks, vec![Tok::KwLift, Tok::Ident("x".into()), Tok::Eof]);

        let toks: Vec<Tok> = tokenize("").unwrap().into_iter().map(|t| t.tok).collect();
        assert_eq!(toks, vec![Tok::Eof]);

        let toks: Vec<Tok> = tokenize("box[Qubit] M")
            .unwrap()
            .into_iter()
            .map(|t| t.tok)
            .collect();
        assert_eq!(
            toks,
            vec![
                Tok::KwBox,
                Tok::LBrack,
                Tok::Ident("Qubit".into()),
                Tok::RBrack,
                Tok::Ident("M".into()),
                Tok::Eof
            ]
        );

        // Labels lex as their own token class; near-misses stay identifiers.
        let toks: Vec<Tok> = tokenize("L0 L12 L0x Lx")
            .unwrap()
            .into_iter()
            .map(|t| t.tok)
            .collect();
        assert_eq!(
            toks,
            vec![
                Tok::LabelTok(Label(0)),
                Tok::LabelTok(Label(12)),
                Tok::Ident("L0x".into()),
                Tok::Ident("Lx".into()),
                Tok::Eof
            ]
        );

        let err = tokenize("a # b").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::Lex);
        assert_eq!(err.span.line, 1);
        assert_eq!(err.span.col, 3);
    }

    #[test]
    fn comments_are_skipped() {
        let toks: Vec<Tok> = tokenize("x -- the rest\ny")
            .unwrap()
            .into_iter()
            .map(|t| t.tok)
            .collect();
        assert_eq!(
            toks,
            vec![Tok::Ident("x".into()), Tok::Ident("y".into()), Tok::Eof]
        );
    }

    #[test]
    fn parse_golden_terms() {
        let t = parse_term_str("fun x : Qubit . H x").unwrap();
        assert_eq!(
            t,
            Term::lam(
                "x",
                Type::wire("Qubit"),
                Term::app(Term::var("H"), Term::var("x"))
            )
        );

        assert_eq!(parse_term_str("()").unwrap(), Term::Unit);

        // apply is a primitive term form, not application of an identifier.
        let t = parse_term_str("apply(M, N)").unwrap();
        assert_eq!(t, Term::apply(Term::var("M"), Term::var("N")));

        let t = parse_term_str("let (x, y) = p in (y, x)").unwrap();
        assert_eq!(
            t,
            Term::let_pair("x", "y", Term::var("p"), Term::pair(Term::var("y"), Term::var("x")))
        );

        let t = parse_term_str("case s of left a -> a | right b -> b").unwrap();
        assert_eq!(
            t,
            Term::case(Term::var("s"), "a", Term::var("a"), "b", Term::var("b"))
        );
    }

    #[test]
    fn parse_precedence() {
        // Application is left-associative and tightest.
        assert_eq!(
            parse_term_str("f a b").unwrap(),
            Term::app(Term::app(Term::var("f"), Term::var("a")), Term::var("b"))
        );
        // `;` is right-associative and binds tighter than binders.
        assert_eq!(
            parse_term_str("a ; b ; c").unwrap(),
            Term::seq(Term::var("a"), Term::seq(Term::var("b"), Term::var("c")))
        );
        assert_eq!(
            parse_term_str("fun x : I . a ; b").unwrap(),
            Term::lam("x", Type::Unit, Term::seq(Term::var("a"), Term::var("b")))
        );
        // Prefix keywords take a single operand.
        assert_eq!(
            parse_term_str("force f x").unwrap(),
            Term::app(Term::force(Term::var("f")), Term::var("x"))
        );
        assert_eq!(
            parse_term_str("lift (f x)").unwrap(),
            Term::lift(Term::app(Term::var("f"), Term::var("x")))
        );
    }

    #[test]
    fn parse_golden_types() {
        assert_eq!(
            parse_type_str("!(Qubit -o Qubit)").unwrap(),
            Type::bang(Type::lolli(Type::wire("Qubit"), Type::wire("Qubit")))
        );
        assert_eq!(parse_type_str("I").unwrap(), Type::Unit);
        assert_eq!(parse_type_str("0").unwrap(), Type::Zero);
        // `!` binds tighter than `*`, `-o` weakest.
        assert_eq!(
            parse_type_str("!Qubit * Bit -o I").unwrap(),
            Type::lolli(
                Type::tensor(Type::bang(Type::wire("Qubit")), Type::wire("Bit")),
                Type::Unit
            )
        );
        assert_eq!(
            parse_type_str("Qubit -o Bit -o I").unwrap(),
            Type::lolli(Type::wire("Qubit"), Type::lolli(Type::wire("Bit"), Type::Unit))
        );
        assert_eq!(
            parse_type_str("List Qubit * Bit").unwrap(),
            Type::tensor(Type::list(Type::wire("Qubit")), Type::wire("Bit"))
        );

        let err = parse_type_str("Circ(Qubit -o Qubit, I)").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::WellFormedness);
    }

    #[test]
    fn parse_errors_carry_spans_and_expectations() {
        let err = parse_term_str("let x = in y").unwrap_err();
        assert!(!err.expected.is_empty());
        assert_eq!(err.span.line, 1);
        assert!(err.span.col > 1);

        let err = parse_term_str("fun x Qubit . x").unwrap_err();
        assert!(!err.expected.is_empty());
    }

    #[test]
    fn parse_program_and_entry() {
        let src = "\
-- two definitions, the second referencing the first
def id : !(Qubit -o Qubit) = lift (fun q : Qubit . q) ;
def unused : Qubit -o Qubit = fun q : Qubit . H q ;
def main : Circ(Qubit, Qubit) = box[Qubit] id ;
";
        let prog = parse_program_str(src).unwrap();
        assert_eq!(prog.defs.len(), 3);
        let (term, ty) = prog.entry_term("main").unwrap();
        assert_eq!(ty, Type::circ(Type::wire("Qubit"), Type::wire("Qubit")));
        // `unused` is pruned; `id` is kept.
        match &term {
            Term::Let(name, _, body) => {
                assert_eq!(name, "id");
                assert!(matches!(**body, Term::Box(_, _)));
            }
            other => panic!("expected let-wrapping, got {other:?}"),
        }

        let dup = "def a : I = () ;\ndef a : I = () ;";
        assert!(parse_program_str(dup).is_err());
    }
}
