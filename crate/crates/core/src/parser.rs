//! Concrete syntax.
//!
//! ```text
//! query    := primary ((UNION | INTERSECT | EXCEPT) [ALL] primary)*
//! primary  := select | "(" query ")"
//! select   := SELECT [DISTINCT] ("*" | selitem ("," selitem)*)
//!             FROM fromitem ("," fromitem)* WHERE cond
//! selitem  := term AS name
//! fromitem := (table name | query "(" query ")") AS "(" name ("," name)* ")"
//! term     := INT | 'string' | NULL | nat "." name
//! cond     := TRUE | FALSE | term IS [NOT] NULL | term cmp term
//!           | "(" term ("," term)* ")" [NOT] IN "(" query ")"
//!           | term [NOT] IN "(" query ")" | EXISTS "(" query ")"
//!           | cond AND cond | cond OR cond | NOT cond | "(" cond ")"
//! ```
//!
//! Keywords are case-insensitive, names are not. `NOT` binds tighter than
//! `AND`, which binds tighter than `OR`; set operators share one level and
//! associate to the left. `--` starts a line comment. Empty select lists,
//! FROM lists and IN tuples are accepted so that every AST can be printed.

use std::fmt;

use thiserror::Error;

use crate::ast::{
    Cond, FromItem, Name, NodePath, PredOp, PredicateRegistry, Query, Schema, SetOp, TableRef, Term, FRESH_PREFIX,
};
use crate::kbag::BaseConst;

/// Byte offsets `[start, end)` into the source text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct SourceSpan {
    pub start: usize,
    pub end: usize,
}

impl SourceSpan {
    pub fn new(start: usize, end: usize) -> Self {
        debug_assert!(start <= end);
        SourceSpan { start, end }
    }

    fn join(self, other: SourceSpan) -> SourceSpan {
        SourceSpan::new(self.start.min(other.start), self.end.max(other.end))
    }

    /// 1-based line and column (in characters) of `start`.
    pub fn line_col(&self, src: &str) -> (usize, usize) {
        let before = &src[..self.start.min(src.len())];
        let line = before.matches('\n').count() + 1;
        let line_start = before.rfind('\n').map_or(0, |i| i + 1);
        let col = before[line_start..].chars().count() + 1;
        (line, col)
    }
}

/// Spans of a parsed query, shaped like the AST (see [`crate::ast`] for the
/// child numbering).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SpanTree {
    pub span: SourceSpan,
    pub children: Vec<SpanTree>,
}

impl SpanTree {
    fn leaf(span: SourceSpan) -> Self {
        SpanTree {
            span,
            children: Vec::new(),
        }
    }

    /// Span of the node at `path`, or of its deepest recorded ancestor.
    pub fn resolve(&self, path: &NodePath) -> SourceSpan {
        let mut node = self;
        for &i in path {
            match node.children.get(i) {
                Some(c) => node = c,
                None => break,
            }
        }
        node.span
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseErrorKind {
    Lexical,
    UnexpectedToken,
    MissingAs,
    MissingWhere,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{message}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub span: SourceSpan,
    pub message: String,
}

impl ParseError {
    /// `line:col: message` against the source the error came from.
    pub fn describe(&self, src: &str) -> String {
        let (l, c) = self.span.line_col(src);
        format!("{l}:{c}: {}", self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Kw(Kw),
    Ident(String),
    Int(i64),
    Str(String),
    Var(usize, String),
    LParen,
    RParen,
    Comma,
    Star,
    Cmp(PredOp),
    Eof,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kw {
    Select,
    Distinct,
    From,
    Where,
    As,
    Table,
    Query,
    Union,
    Intersect,
    Except,
    All,
    True,
    False,
    Is,
    Not,
    Null,
    In,
    Exists,
    And,
    Or,
}

const KEYWORDS: &[(&str, Kw)] = &[
    ("SELECT", Kw::Select),
    ("DISTINCT", Kw::Distinct),
    ("FROM", Kw::From),
    ("WHERE", Kw::Where),
    ("AS", Kw::As),
    ("TABLE", Kw::Table),
    ("QUERY", Kw::Query),
    ("UNION", Kw::Union),
    ("INTERSECT", Kw::Intersect),
    ("EXCEPT", Kw::Except),
    ("ALL", Kw::All),
    ("TRUE", Kw::True),
    ("FALSE", Kw::False),
    ("IS", Kw::Is),
    ("NOT", Kw::Not),
    ("NULL", Kw::Null),
    ("IN", Kw::In),
    ("EXISTS", Kw::Exists),
    ("AND", Kw::And),
    ("OR", Kw::Or),
];

fn keyword(word: &str) -> Option<Kw> {
    KEYWORDS
        .iter()
        .find(|(k, _)| k.eq_ignore_ascii_case(word))
        .map(|&(_, kw)| kw)
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Kw(k) => {
                let s = KEYWORDS.iter().find(|(_, kw)| kw == k).unwrap().0;
                f.write_str(s)
            }
            Tok::Ident(s) => write!(f, "name `{s}`"),
            Tok::Int(i) => write!(f, "integer {i}"),
            Tok::Str(s) => write!(f, "string '{s}'"),
            Tok::Var(n, x) => write!(f, "`{n}.{x}`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Star => f.write_str("`*`"),
            Tok::Cmp(op) => write!(f, "`{}`", op.symbol().unwrap_or("?")),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

struct Token {
    tok: Tok,
    span: SourceSpan,
}

fn lex_err(start: usize, end: usize, message: String) -> ParseError {
    ParseError {
        kind: ParseErrorKind::Lexical,
        span: SourceSpan::new(start, end),
        message,
    }
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = src.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    let ident_end = |mut j: usize| {
        while j < bytes.len() && is_ident_char(bytes[j] as char) {
            j += 1;
        }
        j
    };
    // a name, or a generated `?a<digits>` name
    let name_end = |j: usize| -> Option<usize> {
        let c = *bytes.get(j)? as char;
        if is_ident_start(c) {
            Some(ident_end(j))
        } else if c == FRESH_PREFIX && bytes.get(j + 1) == Some(&b'a') {
            let mut k = j + 2;
            while k < bytes.len() && bytes[k].is_ascii_digit() {
                k += 1;
            }
            (k > j + 2 && !bytes.get(k).is_some_and(|&b| is_ident_char(b as char))).then_some(k)
        } else {
            None
        }
    };
    while i < bytes.len() {
        let c = bytes[i] as char;
        let start = i;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if src[i..].starts_with("--") {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        let tok = match c {
            '(' => {
                i += 1;
                Tok::LParen
            }
            ')' => {
                i += 1;
                Tok::RParen
            }
            ',' => {
                i += 1;
                Tok::Comma
            }
            '*' => {
                i += 1;
                Tok::Star
            }
            '=' => {
                i += 1;
                Tok::Cmp(PredOp::Eq)
            }
            '!' if bytes.get(i + 1) == Some(&b'=') => {
                i += 2;
                Tok::Cmp(PredOp::Neq)
            }
            '<' => match bytes.get(i + 1) {
                Some(b'>') => {
                    i += 2;
                    Tok::Cmp(PredOp::Neq)
                }
                Some(b'=') => {
                    i += 2;
                    Tok::Cmp(PredOp::Le)
                }
                _ => {
                    i += 1;
                    Tok::Cmp(PredOp::Lt)
                }
            },
            '>' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    i += 2;
                    Tok::Cmp(PredOp::Ge)
                } else {
                    i += 1;
                    Tok::Cmp(PredOp::Gt)
                }
            }
            '\'' => {
                let mut s = String::new();
                i += 1;
                loop {
                    match src[i..].chars().next() {
                        None => return Err(lex_err(start, i, "unterminated string literal".into())),
                        Some('\'') if bytes.get(i + 1) == Some(&b'\'') => {
                            s.push('\'');
                            i += 2;
                        }
                        Some('\'') => {
                            i += 1;
                            break;
                        }
                        Some(ch) => {
                            s.push(ch);
                            i += ch.len_utf8();
                        }
                    }
                }
                Tok::Str(s)
            }
            '-' | '0'..='9' => {
                let neg = c == '-';
                let digits_start = if neg { i + 1 } else { i };
                let mut j = digits_start;
                while j < bytes.len() && bytes[j].is_ascii_digit() {
                    j += 1;
                }
                if j == digits_start {
                    return Err(lex_err(start, start + 1, "unexpected character `-`".into()));
                }
                let digits = &src[start..j];
                if !neg && bytes.get(j) == Some(&b'.') {
                    let Some(k) = name_end(j + 1) else {
                        return Err(lex_err(
                            start,
                            j + 1,
                            format!("expected an attribute name after `{digits}.`"),
                        ));
                    };
                    let n = digits
                        .parse()
                        .map_err(|_| lex_err(start, j, format!("table index `{digits}` is too large")))?;
                    i = k;
                    Tok::Var(n, src[j + 1..k].to_string())
                } else {
                    let v = digits
                        .parse()
                        .map_err(|_| lex_err(start, j, format!("integer `{digits}` out of range")))?;
                    i = j;
                    Tok::Int(v)
                }
            }
            _ => match name_end(i) {
                Some(k) => {
                    let word = &src[i..k];
                    i = k;
                    match keyword(word) {
                        Some(kw) => Tok::Kw(kw),
                        None => Tok::Ident(word.to_string()),
                    }
                }
                None => {
                    let ch = src[i..].chars().next().unwrap();
                    return Err(lex_err(
                        start,
                        start + ch.len_utf8(),
                        format!("unexpected character `{ch}`"),
                    ));
                }
            },
        };
        toks.push(Token {
            tok,
            span: SourceSpan::new(start, i),
        });
    }
    toks.push(Token {
        tok: Tok::Eof,
        span: SourceSpan::new(src.len(), src.len()),
    });
    Ok(toks)
}

fn to_name(s: &str) -> Name {
    if s.starts_with(FRESH_PREFIX) {
        Name::fresh(s[2..].parse().unwrap_or(0))
    } else {
        Name::new(s).expect("lexer only yields valid names")
    }
}

/// A parsed query with the spans of its nodes.
#[derive(Debug, Clone)]
pub struct Parsed {
    pub query: Query,
    pub spans: SpanTree,
}

pub fn parse_query(text: &str) -> Result<Query, ParseError> {
    parse_query_spanned(text, &PredicateRegistry::default()).map(|p| p.query)
}

/// Parses with custom predicates from `registry` available as `name(t, ..)`.
pub fn parse_query_spanned(text: &str, registry: &PredicateRegistry) -> Result<Parsed, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0, registry };
    let (query, spans) = p.query()?;
    p.expect(Tok::Eof, ParseErrorKind::UnexpectedToken)?;
    Ok(Parsed { query, spans })
}

struct Parser<'a> {
    toks: Vec<Token>,
    pos: usize,
    registry: &'a PredicateRegistry,
}

type PResult<T> = Result<(T, SpanTree), ParseError>;

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn span(&self) -> SourceSpan {
        self.toks[self.pos].span
    }

    fn prev_end(&self) -> usize {
        if self.pos == 0 {
            0
        } else {
            self.toks[self.pos - 1].span.end
        }
    }

    fn since(&self, start: usize) -> SourceSpan {
        SourceSpan::new(start, self.prev_end().max(start))
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.bump();
            true
        } else {
            false
        }
    }

    fn error<T>(&self, kind: ParseErrorKind, expected: &str) -> Result<T, ParseError> {
        Err(ParseError {
            kind,
            span: self.span(),
            message: format!("expected {expected}, found {}", self.peek()),
        })
    }

    fn expect(&mut self, t: Tok, kind: ParseErrorKind) -> Result<(), ParseError> {
        if self.eat(&t) {
            Ok(())
        } else {
            self.error(kind, &t.to_string())
        }
    }

    fn name(&mut self) -> Result<Name, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(to_name(&s))
            }
            _ => self.error(ParseErrorKind::UnexpectedToken, "a name"),
        }
    }

    fn query(&mut self) -> PResult<Query> {
        let (mut q, mut spans) = self.query_primary()?;
        loop {
            let op = match self.peek() {
                Tok::Kw(Kw::Union) => SetOp::Union,
                Tok::Kw(Kw::Intersect) => SetOp::Intersect,
                Tok::Kw(Kw::Except) => SetOp::Except,
                _ => break,
            };
            self.bump();
            let all = self.eat(&Tok::Kw(Kw::All));
            let (r, rspans) = self.query_primary()?;
            let span = spans.span.join(rspans.span);
            q = Query::set_op(op, all, q, r);
            spans = SpanTree {
                span,
                children: vec![spans, rspans],
            };
        }
        Ok((q, spans))
    }

    fn query_primary(&mut self) -> PResult<Query> {
        match self.peek() {
            Tok::LParen => {
                let start = self.span().start;
                self.bump();
                let (q, mut spans) = self.query()?;
                self.expect(Tok::RParen, ParseErrorKind::UnexpectedToken)?;
                spans.span = self.since(start);
                Ok((q, spans))
            }
            Tok::Kw(Kw::Select) => self.select(),
            _ => self.error(ParseErrorKind::UnexpectedToken, "SELECT or `(`"),
        }
    }

    fn select(&mut self) -> PResult<Query> {
        let start = self.span().start;
        self.expect(Tok::Kw(Kw::Select), ParseErrorKind::UnexpectedToken)?;
        let distinct = self.eat(&Tok::Kw(Kw::Distinct));
        let mut children = Vec::new();
        let selections = if self.eat(&Tok::Star) {
            None
        } else {
            let mut sel = Vec::new();
            if self.peek() != &Tok::Kw(Kw::From) {
                loop {
                    let item_start = self.span().start;
                    let (t, _) = self.term()?;
                    if !self.eat(&Tok::Kw(Kw::As)) {
                        return self.error(ParseErrorKind::MissingAs, "AS after a selected term");
                    }
                    let x = self.name()?;
                    sel.push((t, x));
                    children.push(SpanTree::leaf(self.since(item_start)));
                    if !self.eat(&Tok::Comma) {
                        break;
                    }
                }
            }
            Some(sel)
        };
        self.expect(Tok::Kw(Kw::From), ParseErrorKind::UnexpectedToken)?;
        let mut from = Vec::new();
        if self.peek() != &Tok::Kw(Kw::Where) {
            loop {
                let (item, spans) = self.table_item()?;
                from.push(item);
                children.push(spans);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        if !self.eat(&Tok::Kw(Kw::Where)) {
            return self.error(ParseErrorKind::MissingWhere, "WHERE (use WHERE TRUE for no condition)");
        }
        let (cond, cspans) = self.cond()?;
        children.push(cspans);
        let q = match selections {
            Some(selections) => Query::Select {
                distinct,
                selections,
                from,
                cond,
            },
            None => Query::SelectStar { distinct, from, cond },
        };
        Ok((
            q,
            SpanTree {
                span: self.since(start),
                children,
            },
        ))
    }

    fn table_item(&mut self) -> PResult<FromItem> {
        let start = self.span().start;
        let mut children = Vec::new();
        let tb = match self.peek() {
            Tok::Kw(Kw::Table) => {
                self.bump();
                TableRef::Base(self.name()?)
            }
            Tok::Kw(Kw::Query) => {
                self.bump();
                self.expect(Tok::LParen, ParseErrorKind::UnexpectedToken)?;
                let (q, spans) = self.query()?;
                self.expect(Tok::RParen, ParseErrorKind::UnexpectedToken)?;
                children.push(spans);
                TableRef::Query(Box::new(q))
            }
            _ => return self.error(ParseErrorKind::UnexpectedToken, "`table` or `query`"),
        };
        if !self.eat(&Tok::Kw(Kw::As)) {
            return self.error(ParseErrorKind::MissingAs, "AS (attribute list) after a FROM item");
        }
        self.expect(Tok::LParen, ParseErrorKind::UnexpectedToken)?;
        let mut attrs = Vec::new();
        if self.peek() != &Tok::RParen {
            loop {
                attrs.push(self.name()?);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        self.expect(Tok::RParen, ParseErrorKind::UnexpectedToken)?;
        Ok((
            (tb, Schema::new(attrs)),
            SpanTree {
                span: self.since(start),
                children,
            },
        ))
    }

    fn term(&mut self) -> PResult<Term> {
        let span = self.span();
        let t = match self.peek().clone() {
            Tok::Int(i) => Term::Const(BaseConst::Int(i)),
            Tok::Str(s) => Term::Const(BaseConst::Str(s)),
            Tok::Kw(Kw::Null) => Term::Null,
            Tok::Var(n, x) => Term::Var(n, to_name(&x)),
            _ => return self.error(ParseErrorKind::UnexpectedToken, "a term"),
        };
        self.bump();
        Ok((t, SpanTree::leaf(span)))
    }

    fn is_term_start(&self) -> bool {
        matches!(
            self.peek(),
            Tok::Int(_) | Tok::Str(_) | Tok::Kw(Kw::Null) | Tok::Var(..)
        )
    }

    fn cond(&mut self) -> PResult<Cond> {
        let (mut c, mut spans) = self.and_cond()?;
        while self.eat(&Tok::Kw(Kw::Or)) {
            let (r, rspans) = self.and_cond()?;
            c = Cond::or(c, r);
            spans = SpanTree {
                span: spans.span.join(rspans.span),
                children: vec![spans, rspans],
            };
        }
        Ok((c, spans))
    }

    fn and_cond(&mut self) -> PResult<Cond> {
        let (mut c, mut spans) = self.not_cond()?;
        while self.eat(&Tok::Kw(Kw::And)) {
            let (r, rspans) = self.not_cond()?;
            c = Cond::and(c, r);
            spans = SpanTree {
                span: spans.span.join(rspans.span),
                children: vec![spans, rspans],
            };
        }
        Ok((c, spans))
    }

    fn not_cond(&mut self) -> PResult<Cond> {
        let start = self.span().start;
        if self.eat(&Tok::Kw(Kw::Not)) {
            let (c, spans) = self.not_cond()?;
            return Ok((
                Cond::not(c),
                SpanTree {
                    span: self.since(start),
                    children: vec![spans],
                },
            ));
        }
        self.atom()
    }

    fn paren_query(&mut self) -> PResult<Query> {
        self.expect(Tok::LParen, ParseErrorKind::UnexpectedToken)?;
        let r = self.query()?;
        self.expect(Tok::RParen, ParseErrorKind::UnexpectedToken)?;
        Ok(r)
    }

    /// `[NOT] IN (query)` after the term list.
    fn memb_tail(&mut self, start: usize, terms: Vec<Term>, mut children: Vec<SpanTree>) -> PResult<Cond> {
        let is_in = !self.eat(&Tok::Kw(Kw::Not));
        self.expect(Tok::Kw(Kw::In), ParseErrorKind::UnexpectedToken)?;
        let (q, qspans) = self.paren_query()?;
        children.push(qspans);
        Ok((
            Cond::memb(is_in, terms, q),
            SpanTree {
                span: self.since(start),
                children,
            },
        ))
    }

    fn term_tuple(&mut self) -> Result<(Vec<Term>, Vec<SpanTree>), ParseError> {
        self.expect(Tok::LParen, ParseErrorKind::UnexpectedToken)?;
        let (mut terms, mut spans) = (Vec::new(), Vec::new());
        if self.peek() != &Tok::RParen {
            loop {
                let (t, s) = self.term()?;
                terms.push(t);
                spans.push(s);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        self.expect(Tok::RParen, ParseErrorKind::UnexpectedToken)?;
        if matches!(self.peek(), Tok::Kw(Kw::In))
            || (self.peek() == &Tok::Kw(Kw::Not) && self.peek_at(1) == &Tok::Kw(Kw::In))
        {
            Ok((terms, spans))
        } else {
            self.error(ParseErrorKind::UnexpectedToken, "IN")
        }
    }

    fn atom(&mut self) -> PResult<Cond> {
        let start = self.span().start;
        match self.peek().clone() {
            Tok::Kw(Kw::True) => {
                self.bump();
                Ok((Cond::True, SpanTree::leaf(self.since(start))))
            }
            Tok::Kw(Kw::False) => {
                self.bump();
                Ok((Cond::False, SpanTree::leaf(self.since(start))))
            }
            Tok::Kw(Kw::Exists) => {
                self.bump();
                let (q, qspans) = self.paren_query()?;
                Ok((
                    Cond::exists(q),
                    SpanTree {
                        span: self.since(start),
                        children: vec![qspans],
                    },
                ))
            }
            Tok::LParen => {
                let save = self.pos;
                match self.term_tuple() {
                    Ok((terms, spans)) => self.memb_tail(start, terms, spans),
                    Err(_) => {
                        self.pos = save;
                        self.bump();
                        let (c, mut spans) = self.cond()?;
                        self.expect(Tok::RParen, ParseErrorKind::UnexpectedToken)?;
                        spans.span = self.since(start);
                        Ok((c, spans))
                    }
                }
            }
            Tok::Ident(s) if self.peek_at(1) == &Tok::LParen => {
                let Some(op) = self.registry.lookup(&s) else {
                    return Err(ParseError {
                        kind: ParseErrorKind::UnexpectedToken,
                        span: self.span(),
                        message: format!("unknown predicate `{s}`"),
                    });
                };
                self.bump();
                self.bump();
                let (mut args, mut children) = (Vec::new(), Vec::new());
                if self.peek() != &Tok::RParen {
                    loop {
                        let (t, sp) = self.term()?;
                        args.push(t);
                        children.push(sp);
                        if !self.eat(&Tok::Comma) {
                            break;
                        }
                    }
                }
                self.expect(Tok::RParen, ParseErrorKind::UnexpectedToken)?;
                Ok((
                    Cond::Pred { op, args },
                    SpanTree {
                        span: self.since(start),
                        children,
                    },
                ))
            }
            _ if self.is_term_start() => {
                let (t, tspan) = self.term()?;
                match self.peek().clone() {
                    Tok::Kw(Kw::Is) => {
                        self.bump();
                        let is_null = !self.eat(&Tok::Kw(Kw::Not));
                        self.expect(Tok::Kw(Kw::Null), ParseErrorKind::UnexpectedToken)?;
                        Ok((
                            Cond::IsNull { is_null, term: t },
                            SpanTree {
                                span: self.since(start),
                                children: vec![tspan],
                            },
                        ))
                    }
                    Tok::Cmp(op) => {
                        self.bump();
                        let (r, rspan) = self.term()?;
                        Ok((
                            Cond::pred(op, t, r),
                            SpanTree {
                                span: self.since(start),
                                children: vec![tspan, rspan],
                            },
                        ))
                    }
                    Tok::Kw(Kw::In) | Tok::Kw(Kw::Not) => self.memb_tail(start, vec![t], vec![tspan]),
                    _ => self.error(ParseErrorKind::UnexpectedToken, "IS, IN or a comparison"),
                }
            }
            _ => self.error(ParseErrorKind::UnexpectedToken, "a condition"),
        }
    }
}

/// Prints a query in the concrete syntax; `parse_query(&render(q)) == q`.
pub fn render(q: &Query) -> String {
    let mut out = String::new();
    render_query(q, &mut out);
    out
}

pub fn render_cond(c: &Cond) -> String {
    let mut out = String::new();
    render_cond_prec(c, 0, &mut out);
    out
}

pub fn render_term(t: &Term) -> String {
    match t {
        Term::Const(k) => k.to_string(),
        Term::Null => "NULL".to_string(),
        Term::Var(n, x) => format!("{n}.{x}"),
    }
}

fn render_query(q: &Query, out: &mut String) {
    match q {
        Query::Select {
            distinct,
            selections,
            from,
            cond,
        } => {
            out.push_str("SELECT ");
            if *distinct {
                out.push_str("DISTINCT ");
            }
            for (i, (t, x)) in selections.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                out.push_str(&render_term(t));
                out.push_str(" AS ");
                out.push_str(x.as_str());
            }
            if !selections.is_empty() {
                out.push(' ');
            }
            render_from_where(from, cond, out);
        }
        Query::SelectStar { distinct, from, cond } => {
            out.push_str("SELECT ");
            if *distinct {
                out.push_str("DISTINCT ");
            }
            out.push_str("* ");
            render_from_where(from, cond, out);
        }
        Query::SetOp { op, all, left, right } => {
            render_query(left, out);
            out.push(' ');
            out.push_str(op.keyword());
            if *all {
                out.push_str(" ALL");
            }
            out.push(' ');
            if matches!(**right, Query::SetOp { .. }) {
                out.push('(');
                render_query(right, out);
                out.push(')');
            } else {
                render_query(right, out);
            }
        }
    }
}

fn render_from_where(from: &[FromItem], cond: &Cond, out: &mut String) {
    out.push_str("FROM ");
    for (i, (tb, alias)) in from.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        match tb {
            TableRef::Base(x) => {
                out.push_str("table ");
                out.push_str(x.as_str());
            }
            TableRef::Query(q) => {
                out.push_str("query (");
                render_query(q, out);
                out.push(')');
            }
        }
        out.push_str(" AS ");
        out.push_str(&alias.to_string());
    }
    if !from.is_empty() {
        out.push(' ');
    }
    out.push_str("WHERE ");
    render_cond_prec(cond, 0, out);
}

// 0: OR, 1: AND, 2: NOT, 3: atom
fn render_cond_prec(c: &Cond, min: u8, out: &mut String) {
    let prec = match c {
        Cond::Or(..) => 0,
        Cond::And(..) => 1,
        Cond::Not(_) => 2,
        _ => 3,
    };
    let paren = prec < min;
    if paren {
        out.push('(');
    }
    match c {
        Cond::True => out.push_str("TRUE"),
        Cond::False => out.push_str("FALSE"),
        Cond::IsNull { is_null, term } => {
            out.push_str(&render_term(term));
            out.push_str(if *is_null { " IS NULL" } else { " IS NOT NULL" });
        }
        Cond::Pred { op, args } => match (op.symbol(), args.as_slice()) {
            (Some(sym), [l, r]) => {
                out.push_str(&render_term(l));
                out.push(' ');
                out.push_str(sym);
                out.push(' ');
                out.push_str(&render_term(r));
            }
            _ => {
                let name = match op {
                    PredOp::Custom(p) => p.name.clone(),
                    other => format!("{other:?}"),
                };
                out.push_str(&name);
                out.push('(');
                out.push_str(&args.iter().map(render_term).collect::<Vec<_>>().join(", "));
                out.push(')');
            }
        },
        Cond::Memb { is_in, terms, query } => {
            if terms.len() == 1 {
                out.push_str(&render_term(&terms[0]));
            } else {
                out.push('(');
                out.push_str(&terms.iter().map(render_term).collect::<Vec<_>>().join(", "));
                out.push(')');
            }
            out.push_str(if *is_in { " IN (" } else { " NOT IN (" });
            render_query(query, out);
            out.push(')');
        }
        Cond::Exists(q) => {
            out.push_str("EXISTS (");
            render_query(q, out);
            out.push(')');
        }
        Cond::And(l, r) => {
            render_cond_prec(l, 1, out);
            out.push_str(" AND ");
            render_cond_prec(r, 2, out);
        }
        Cond::Or(l, r) => {
            render_cond_prec(l, 0, out);
            out.push_str(" OR ");
            render_cond_prec(r, 1, out);
        }
        Cond::Not(c) => {
            out.push_str("NOT ");
            render_cond_prec(c, 2, out);
        }
    }
    if paren {
        out.push(')');
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::{name, CustomPredicate};

    fn base(t: &str, alias: &[&str]) -> FromItem {
        (TableRef::Base(name(t)), Schema::of(alias))
    }

    #[test]
    fn worked_rendering() {
        let q = parse_query("SELECT 0.A AS A FROM table R AS (A,B,C) WHERE TRUE").unwrap();
        assert_eq!(
            q,
            Query::Select {
                distinct: false,
                selections: vec![(Term::var(0, "A"), name("A"))],
                from: vec![base("R", &["A", "B", "C"])],
                cond: Cond::True,
            }
        );
    }

    #[test]
    fn distinct_and_is_not_null() {
        let q = parse_query("SELECT DISTINCT 0.A AS X FROM table R AS (A) WHERE 0.A IS NOT NULL").unwrap();
        assert_eq!(
            q,
            Query::Select {
                distinct: true,
                selections: vec![(Term::var(0, "A"), name("X"))],
                from: vec![base("R", &["A"])],
                cond: Cond::is_not_null(Term::var(0, "A")),
            }
        );
    }

    #[test]
    fn set_ops_left_assoc() {
        let a = "SELECT * FROM table R AS (A) WHERE TRUE";
        let q = parse_query(&format!("{a} UNION ALL {a} EXCEPT {a}")).unwrap();
        let s = parse_query(a).unwrap();
        assert_eq!(
            q,
            Query::except(false, Query::union(true, s.clone(), s.clone()), s.clone())
        );
        let q = parse_query(&format!("{a} union all ({a} except {a})")).unwrap();
        assert_eq!(q, Query::union(true, s.clone(), Query::except(false, s.clone(), s)));
    }

    #[test]
    fn conditions() {
        let q = parse_query(
            "select * from table R as (A, B) where not 0.A = 1 and 0.B <> 'x' or (0.A, 0.B) not in (select * from table R as (C, D) where true)",
        )
        .unwrap();
        let Query::SelectStar { cond, .. } = q else { panic!() };
        let Cond::Or(l, r) = cond else { panic!("{cond:?}") };
        assert!(matches!(*l, Cond::And(..)));
        assert!(matches!(*r, Cond::Memb { is_in: false, ref terms, .. } if terms.len() == 2));

        let q = parse_query("SELECT * FROM table R AS (A) WHERE (0.A IS NULL OR FALSE) AND 0.A IN (SELECT * FROM table R AS (A) WHERE TRUE)").unwrap();
        let Query::SelectStar { cond, .. } = q else { panic!() };
        let Cond::And(l, r) = cond else { panic!() };
        assert!(matches!(*l, Cond::Or(..)));
        assert!(matches!(*r, Cond::Memb { is_in: true, .. }));
    }

    #[test]
    fn literals() {
        let q = parse_query("SELECT -5 AS A, 'it''s' AS B, NULL AS C, 12.X AS D FROM WHERE TRUE").unwrap();
        let Query::Select { selections, from, .. } = &q else {
            panic!()
        };
        assert!(from.is_empty());
        assert_eq!(selections[0].0, Term::int(-5));
        assert_eq!(selections[1].0, Term::Const(BaseConst::Str("it's".into())));
        assert_eq!(selections[2].0, Term::Null);
        assert_eq!(selections[3].0, Term::var(12, "X"));
        assert_eq!(parse_query(&render(&q)).unwrap(), q);
    }

    #[test]
    fn comments_and_fresh_names() {
        let q = parse_query("-- heading\nSELECT * FROM table R AS (?a0, ?a1) -- trailing\n WHERE TRUE").unwrap();
        let Query::SelectStar { from, .. } = q else { panic!() };
        assert_eq!(from[0].1, Schema::new(vec![Name::fresh(0), Name::fresh(1)]));
    }

    #[test]
    fn errors_have_positions() {
        let src = "SELECT 0.A FROM table R AS (A) WHERE TRUE";
        let e = parse_query(src).unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::MissingAs);
        assert_eq!(e.describe(src), "1:12: expected AS after a selected term, found FROM");

        let src = "SELECT * FROM table R AS (A)\n";
        let e = parse_query(src).unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::MissingWhere);
        assert_eq!(e.span.line_col(src), (2, 1));

        let e = parse_query("SELECT * FROM table R AS (A) WHERE 0.A = #").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::Lexical);
        let e = parse_query("SELECT * FROM table R AS (A) WHERE 'open").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::Lexical);
        let e = parse_query("SELECT * FROM table R AS (A) WHERE TRUE TRUE").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::UnexpectedToken);
        assert!(parse_query("SELECT * FROM table R AS (A) WHERE 0.?b = 1").is_err());
    }

    #[test]
    fn span_tree_shape() {
        let src = "SELECT 0.A AS A FROM table R AS (A) WHERE 0.A = 9.A";
        let p = parse_query_spanned(src, &PredicateRegistry::default()).unwrap();
        let sp = p.spans.resolve(&vec![2, 1]);
        assert_eq!(&src[sp.start..sp.end], "9.A");
        let sp = p.spans.resolve(&vec![1]);
        assert_eq!(&src[sp.start..sp.end], "table R AS (A)");
    }

    #[test]
    fn custom_predicates() {
        fn even(args: &[BaseConst]) -> bool {
            matches!(args[0], BaseConst::Int(i) if i % 2 == 0)
        }
        let mut reg = PredicateRegistry::new();
        reg.register(CustomPredicate {
            name: "even".into(),
            arity: 1,
            eval: even,
        });
        let src = "SELECT * FROM table R AS (A) WHERE even(0.A)";
        let p = parse_query_spanned(src, &reg).unwrap();
        assert_eq!(render(&p.query), src);
        assert!(parse_query(src).is_err());
    }

    #[test]
    fn render_round_trips() {
        for src in [
            "SELECT 0.A AS A FROM table R AS (A, B, C) WHERE TRUE",
            "SELECT * FROM query (SELECT 0.A AS X FROM table R AS (A) WHERE 0.A < 3) AS (Y) WHERE NOT (0.Y = 1 OR 0.Y IS NULL)",
            "SELECT 0.A AS A FROM table R AS (A) WHERE 0.A NOT IN (SELECT 0.A AS A FROM table S AS (A) WHERE TRUE)",
            "SELECT 0.A AS A FROM table R AS (A) WHERE NOT EXISTS (SELECT * FROM table S AS (A) WHERE 0.A = 1.A)",
            "SELECT 0.A AS A FROM table R AS (A) WHERE TRUE EXCEPT SELECT 0.A AS A FROM table S AS (A) WHERE TRUE",
            "SELECT * FROM table R AS (A) WHERE () IN (SELECT FROM table R AS (A) WHERE TRUE)",
        ] {
            let q = parse_query(src).unwrap();
            assert_eq!(render(&q), src);
            assert_eq!(parse_query(&render(&q)).unwrap(), q, "{src}");
        }
        let nested = Query::Select {
            distinct: false,
            selections: vec![(Term::Null, name("N"))],
            from: vec![base("R", &["A"])],
            cond: Cond::and(Cond::True, Cond::and(Cond::False, Cond::or(Cond::True, Cond::False))),
        };
        let text = render(&nested);
        assert!(text.contains("NULL AS N"));
        assert_eq!(parse_query(&text).unwrap(), nested);
    }
}
