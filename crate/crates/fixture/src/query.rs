//! Parser and evaluator for the SPARQL subset the fixture endpoint serves.
//!
//! Supported: `PREFIX` declarations, `SELECT [DISTINCT] vars|* WHERE {..} [LIMIT n]`,
//! `ASK [WHERE] {..}`, triple patterns with `;`/`,` lists and the `a` keyword,
//! `OPTIONAL`, `FILTER` with a handful of builtins, nested groups, Virtuoso's
//! `<bif:contains>` magic predicate and Stardog's `textMatch` service. Text
//! search is plain case-insensitive substring containment.

use crate::store::{Term, TripleStore, RDF_TYPE};
use std::collections::{HashMap, HashSet};
use thiserror::Error;

pub const BIF_CONTAINS: &str = "bif:contains";
pub const STARDOG_TEXT_MATCH: &str = "tag:stardog:api:search:textMatch";
pub const STARDOG_QUERY: &str = "tag:stardog:api:search:query";
pub const STARDOG_RESULT: &str = "tag:stardog:api:search:result";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("syntax error at byte {offset}: {message}")]
pub struct SyntaxError {
    pub offset: usize,
    pub message: String,
}

/// What the endpoint accepts beyond standard SPARQL.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Extensions {
    pub bif_contains: bool,
    pub stardog_text_match: bool,
}

impl Default for Extensions {
    fn default() -> Self {
        Extensions { bif_contains: true, stardog_text_match: true }
    }
}

pub type Solution = HashMap<String, Term>;

#[derive(Debug, Clone, PartialEq)]
pub enum QueryResult {
    Select { variables: Vec<String>, rows: Vec<Solution> },
    Ask(bool),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Query {
    Select { distinct: bool, projection: Option<Vec<String>>, pattern: Group, limit: Option<usize> },
    Ask { pattern: Group },
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Group {
    pub elements: Vec<Element>,
    pub filters: Vec<Expr>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Element {
    Triple(PatternTerm, PatternTerm, PatternTerm),
    TextContains { var: PatternTerm, keywords: TextQuery },
    TextMatch { result_var: String, keywords: TextQuery },
    Optional(Group),
    Group(Group),
}

#[derive(Debug, Clone, PartialEq)]
pub enum PatternTerm {
    Var(String),
    Const(Term),
}

/// Disjunction of conjunctions of phrases.
#[derive(Debug, Clone, PartialEq)]
pub struct TextQuery(pub Vec<Vec<String>>);

impl TextQuery {
    pub fn matches(&self, text: &str) -> bool {
        let text = text.to_lowercase();
        self.0.iter().any(|all| all.iter().all(|p| text.contains(&p.to_lowercase())))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Or(Box<Expr>, Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Not(Box<Expr>),
    Eq(Box<Expr>, Box<Expr>),
    Ne(Box<Expr>, Box<Expr>),
    Call(String, Vec<Expr>),
    Var(String),
    Const(Term),
    Bool(bool),
}

// ---------------------------------------------------------------------------
// Lexer

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Var(String),
    Iri(String),
    PName(String, String),
    Str(String),
    Num(String),
    Word(String),
    LangTag(String),
    Caret2,
    Anon,
    Punct(&'static str),
}

fn lex(input: &str) -> Result<Vec<(Tok, usize)>, SyntaxError> {
    let bytes = input.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    let err = |offset: usize, message: &str| SyntaxError { offset, message: message.to_string() };
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c == '#' {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        match c {
            '?' | '$' => {
                i += 1;
                let s = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                if s == i {
                    return Err(err(start, "empty variable name"));
                }
                out.push((Tok::Var(input[s..i].to_string()), start));
            }
            '<' => {
                let end = input[i + 1..]
                    .find(|ch: char| ch == '>' || ch.is_whitespace())
                    .ok_or_else(|| err(start, "unterminated IRI"))?;
                if input.as_bytes()[i + 1 + end] != b'>' {
                    return Err(err(start, "whitespace inside IRI"));
                }
                out.push((Tok::Iri(input[i + 1..i + 1 + end].to_string()), start));
                i += end + 2;
            }
            '"' | '\'' => {
                let (value, used) = crate::ntriples::unescape_quoted(&input[i + 1..], c)
                    .ok_or_else(|| err(start, "unterminated string"))?;
                out.push((Tok::Str(value), start));
                i += 1 + used;
            }
            '@' => {
                i += 1;
                let s = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'-') {
                    i += 1;
                }
                out.push((Tok::LangTag(input[s..i].to_ascii_lowercase()), start));
            }
            '^' => {
                if input[i..].starts_with("^^") {
                    out.push((Tok::Caret2, start));
                    i += 2;
                } else {
                    return Err(err(start, "unexpected '^'"));
                }
            }
            '[' => {
                let rest = input[i + 1..].trim_start();
                if rest.starts_with(']') {
                    i = input.len() - rest.len() + 1;
                    out.push((Tok::Anon, start));
                } else {
                    return Err(err(start, "blank node property lists are not supported"));
                }
            }
            '&' if input[i..].starts_with("&&") => {
                out.push((Tok::Punct("&&"), start));
                i += 2;
            }
            '|' if input[i..].starts_with("||") => {
                out.push((Tok::Punct("||"), start));
                i += 2;
            }
            '!' if input[i..].starts_with("!=") => {
                out.push((Tok::Punct("!="), start));
                i += 2;
            }
            '{' | '}' | '(' | ')' | '.' | ';' | ',' | '*' | '!' | '=' => {
                let p = match c {
                    '{' => "{",
                    '}' => "}",
                    '(' => "(",
                    ')' => ")",
                    '.' => ".",
                    ';' => ";",
                    ',' => ",",
                    '*' => "*",
                    '!' => "!",
                    _ => "=",
                };
                out.push((Tok::Punct(p), start));
                i += 1;
            }
            _ if c.is_ascii_digit() => {
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                out.push((Tok::Num(input[start..i].to_string()), start));
            }
            _ if c.is_alphabetic() || c == '_' || c == ':' => {
                while i < input.len() {
                    let ch = input[i..].chars().next().unwrap();
                    if ch.is_alphanumeric() || ch == '_' || ch == '-' || ch == ':' {
                        i += ch.len_utf8();
                    } else if ch == '.' && input[i + 1..].starts_with(|n: char| n.is_alphanumeric()) {
                        i += 1;
                    } else {
                        break;
                    }
                }
                let word = &input[start..i];
                match word.split_once(':') {
                    Some((prefix, local)) => out.push((Tok::PName(prefix.to_string(), local.to_string()), start)),
                    None => out.push((Tok::Word(word.to_string()), start)),
                }
            }
            _ => return Err(err(start, &format!("unexpected character {c:?}"))),
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Parser

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    end: usize,
    prefixes: HashMap<String, String>,
    ext: Extensions,
}

pub fn parse(input: &str, ext: Extensions) -> Result<Query, SyntaxError> {
    let toks = lex(input)?;
    let mut p = Parser { toks, pos: 0, end: input.len(), prefixes: HashMap::new(), ext };
    let q = p.query()?;
    if p.pos < p.toks.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(q)
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map(|(_, o)| *o).unwrap_or(self.end)
    }

    fn error(&self, message: &str) -> SyntaxError {
        SyntaxError { offset: self.offset(), message: message.to_string() }
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(t, _)| t.clone());
        self.pos += 1;
        t
    }

    fn is_word(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Tok::Word(w)) if w.eq_ignore_ascii_case(kw))
    }

    fn eat_word(&mut self, kw: &str) -> bool {
        if self.is_word(kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Some(Tok::Punct(q)) if *q == p)
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, p: &str) -> Result<(), SyntaxError> {
        if self.eat_punct(p) {
            Ok(())
        } else {
            Err(self.error(&format!("expected '{p}'")))
        }
    }

    fn query(&mut self) -> Result<Query, SyntaxError> {
        while self.eat_word("PREFIX") {
            let (prefix, local) = match self.next() {
                Some(Tok::PName(p, l)) => (p, l),
                _ => return Err(self.error("expected prefix name")),
            };
            if !local.is_empty() {
                return Err(self.error("prefix declaration must end with ':'"));
            }
            match self.next() {
                Some(Tok::Iri(iri)) => {
                    self.prefixes.insert(prefix, iri);
                }
                _ => return Err(self.error("expected IRI in PREFIX")),
            }
        }
        if self.eat_word("SELECT") {
            let distinct = self.eat_word("DISTINCT") || self.eat_word("REDUCED");
            let projection = if self.eat_punct("*") {
                None
            } else {
                let mut vars = Vec::new();
                while let Some(Tok::Var(v)) = self.peek() {
                    vars.push(v.clone());
                    self.pos += 1;
                }
                if vars.is_empty() {
                    return Err(self.error("expected projection"));
                }
                Some(vars)
            };
            self.eat_word("WHERE");
            let pattern = self.group()?;
            let limit = if self.eat_word("LIMIT") {
                match self.next() {
                    Some(Tok::Num(n)) => Some(n.parse().map_err(|_| self.error("bad LIMIT"))?),
                    _ => return Err(self.error("expected integer after LIMIT")),
                }
            } else {
                None
            };
            Ok(Query::Select { distinct, projection, pattern, limit })
        } else if self.eat_word("ASK") {
            self.eat_word("WHERE");
            Ok(Query::Ask { pattern: self.group()? })
        } else {
            Err(self.error("expected SELECT or ASK"))
        }
    }

    fn group(&mut self) -> Result<Group, SyntaxError> {
        self.expect_punct("{")?;
        let mut group = Group::default();
        loop {
            if self.eat_punct("}") {
                return Ok(group);
            }
            if self.eat_punct(".") {
                continue;
            }
            if self.eat_word("OPTIONAL") {
                group.elements.push(Element::Optional(self.group()?));
            } else if self.eat_word("FILTER") {
                group.filters.push(self.bracketted_or_call()?);
            } else if self.eat_word("SERVICE") {
                let elem = self.service()?;
                group.elements.push(elem);
            } else if self.is_punct("{") {
                group.elements.push(Element::Group(self.group()?));
            } else if self.peek().is_none() {
                return Err(self.error("unterminated group"));
            } else {
                self.triples_block(&mut group)?;
            }
        }
    }

    fn service(&mut self) -> Result<Element, SyntaxError> {
        let iri = match self.next() {
            Some(Tok::Iri(i)) => i,
            Some(Tok::PName(p, l)) => self.expand(&p, &l)?,
            _ => return Err(self.error("expected service IRI")),
        };
        if iri != STARDOG_TEXT_MATCH || !self.ext.stardog_text_match {
            return Err(self.error(&format!("unsupported SERVICE <{iri}>")));
        }
        let inner = self.group()?;
        let mut query = None;
        let mut result = None;
        for e in inner.elements {
            if let Element::Triple(_, PatternTerm::Const(Term::Iri(p)), o) = e {
                match (p.as_str(), o) {
                    (STARDOG_QUERY, PatternTerm::Const(lit)) => query = Some(parse_text_query(lit.lexical())),
                    (STARDOG_RESULT, PatternTerm::Var(v)) => result = Some(v),
                    _ => {}
                }
            }
        }
        match (query, result) {
            (Some(keywords), Some(result_var)) => Ok(Element::TextMatch { result_var, keywords }),
            _ => Err(self.error("textMatch service needs a query and a result variable")),
        }
    }

    fn triples_block(&mut self, group: &mut Group) -> Result<(), SyntaxError> {
        let subject = self.term(true)?;
        loop {
            let predicate = if self.eat_word("a") { PatternTerm::Const(Term::iri(RDF_TYPE)) } else { self.term(false)? };
            loop {
                let object = self.term(true)?;
                group.elements.push(self.triple(subject.clone(), predicate.clone(), object)?);
                if !self.eat_punct(",") {
                    break;
                }
            }
            if !self.eat_punct(";") {
                break;
            }
            if self.is_punct(".") || self.is_punct("}") {
                break;
            }
        }
        let clause_follows = ["OPTIONAL", "FILTER", "SERVICE"].iter().any(|kw| self.is_word(kw)) || self.is_punct("{");
        if !self.is_punct("}") && !clause_follows {
            self.expect_punct(".")?;
        }
        Ok(())
    }

    fn triple(&self, s: PatternTerm, p: PatternTerm, o: PatternTerm) -> Result<Element, SyntaxError> {
        if let PatternTerm::Const(Term::Iri(iri)) = &p {
            if iri == BIF_CONTAINS {
                if !self.ext.bif_contains {
                    return Err(SyntaxError {
                        offset: self.offset(),
                        message: "bif:contains is not supported by this endpoint".into(),
                    });
                }
                let keywords = match &o {
                    PatternTerm::Const(lit) if lit.is_literal() => parse_text_query(lit.lexical()),
                    _ => return Err(self.error("bif:contains expects a string")),
                };
                return Ok(Element::TextContains { var: s, keywords });
            }
        }
        Ok(Element::Triple(s, p, o))
    }

    fn expand(&self, prefix: &str, local: &str) -> Result<String, SyntaxError> {
        if prefix == "bif" {
            return Ok(format!("bif:{local}"));
        }
        self.prefixes
            .get(prefix)
            .map(|ns| format!("{ns}{local}"))
            .ok_or_else(|| self.error(&format!("undeclared prefix '{prefix}:'")))
    }

    fn term(&mut self, allow_literal: bool) -> Result<PatternTerm, SyntaxError> {
        match self.next() {
            Some(Tok::Var(v)) => Ok(PatternTerm::Var(v)),
            Some(Tok::Iri(i)) => Ok(PatternTerm::Const(Term::Iri(i))),
            Some(Tok::PName(p, l)) => Ok(PatternTerm::Const(Term::Iri(self.expand(&p, &l)?))),
            Some(Tok::Anon) => Ok(PatternTerm::Var(format!("_anon{}", self.pos))),
            Some(Tok::Str(s)) if allow_literal => Ok(PatternTerm::Const(self.literal_tail(s)?)),
            Some(Tok::Num(n)) if allow_literal => Ok(PatternTerm::Const(Term::Literal {
                value: n,
                datatype: Some("http://www.w3.org/2001/XMLSchema#integer".into()),
                lang: None,
            })),
            Some(Tok::Word(w)) if allow_literal && (w == "true" || w == "false") => Ok(PatternTerm::Const(Term::Literal {
                value: w,
                datatype: Some("http://www.w3.org/2001/XMLSchema#boolean".into()),
                lang: None,
            })),
            _ => {
                self.pos -= 1;
                Err(self.error("expected RDF term"))
            }
        }
    }

    fn literal_tail(&mut self, value: String) -> Result<Term, SyntaxError> {
        match self.peek() {
            Some(Tok::LangTag(tag)) => {
                let lang = Some(tag.clone());
                self.pos += 1;
                Ok(Term::Literal { value, datatype: None, lang })
            }
            Some(Tok::Caret2) => {
                self.pos += 1;
                let dt = match self.next() {
                    Some(Tok::Iri(i)) => i,
                    Some(Tok::PName(p, l)) => self.expand(&p, &l)?,
                    _ => return Err(self.error("expected datatype IRI")),
                };
                Ok(Term::Literal { value, datatype: Some(dt), lang: None })
            }
            _ => Ok(Term::literal(value)),
        }
    }

    fn bracketted_or_call(&mut self) -> Result<Expr, SyntaxError> {
        if self.eat_punct("(") {
            let e = self.expr()?;
            self.expect_punct(")")?;
            Ok(e)
        } else {
            self.primary()
        }
    }

    fn expr(&mut self) -> Result<Expr, SyntaxError> {
        let mut lhs = self.and_expr()?;
        while self.eat_punct("||") {
            lhs = Expr::Or(Box::new(lhs), Box::new(self.and_expr()?));
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> Result<Expr, SyntaxError> {
        let mut lhs = self.rel_expr()?;
        while self.eat_punct("&&") {
            lhs = Expr::And(Box::new(lhs), Box::new(self.rel_expr()?));
        }
        Ok(lhs)
    }

    fn rel_expr(&mut self) -> Result<Expr, SyntaxError> {
        let lhs = self.unary()?;
        if self.eat_punct("=") {
            return Ok(Expr::Eq(Box::new(lhs), Box::new(self.unary()?)));
        }
        if self.eat_punct("!=") {
            return Ok(Expr::Ne(Box::new(lhs), Box::new(self.unary()?)));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, SyntaxError> {
        if self.eat_punct("!") {
            return Ok(Expr::Not(Box::new(self.unary()?)));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr, SyntaxError> {
        if self.eat_punct("(") {
            let e = self.expr()?;
            self.expect_punct(")")?;
            return Ok(e);
        }
        match self.next() {
            Some(Tok::Var(v)) => Ok(Expr::Var(v)),
            Some(Tok::Word(w)) if w == "true" || w == "false" => Ok(Expr::Bool(w == "true")),
            Some(Tok::Word(name)) => {
                let name = name.to_ascii_lowercase();
                if !KNOWN_FUNCTIONS.contains(&name.as_str()) {
                    self.pos -= 1;
                    return Err(self.error(&format!("unknown function {name}")));
                }
                self.expect_punct("(")?;
                let mut args = Vec::new();
                if !self.eat_punct(")") {
                    loop {
                        args.push(self.expr()?);
                        if self.eat_punct(")") {
                            break;
                        }
                        self.expect_punct(",")?;
                    }
                }
                Ok(Expr::Call(name, args))
            }
            Some(Tok::Str(s)) => Ok(Expr::Const(self.literal_tail(s)?)),
            Some(Tok::Iri(i)) => Ok(Expr::Const(Term::Iri(i))),
            Some(Tok::PName(p, l)) => Ok(Expr::Const(Term::Iri(self.expand(&p, &l)?))),
            _ => {
                self.pos -= 1;
                Err(self.error("expected expression"))
            }
        }
    }
}

const KNOWN_FUNCTIONS: &[&str] =
    &["regex", "str", "lang", "langmatches", "isliteral", "isiri", "isuri", "bound", "contains", "lcase"];

/// Parses `("a" OR "b")`, `'"a" OR "b"'`, `a AND b` style text-search expressions.
pub fn parse_text_query(text: &str) -> TextQuery {
    let mut disjuncts = vec![Vec::new()];
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        if c.is_whitespace() || c == '(' || c == ')' {
            chars.next();
            continue;
        }
        if c == '"' {
            chars.next();
            let phrase: String = chars.by_ref().take_while(|&ch| ch != '"').collect();
            if !phrase.trim().is_empty() {
                disjuncts.last_mut().unwrap().push(phrase.trim().to_string());
            }
            continue;
        }
        let word: String = std::iter::from_fn(|| chars.next_if(|ch| !ch.is_whitespace() && *ch != '(' && *ch != ')'))
            .collect();
        match word.as_str() {
            "OR" | "or" => disjuncts.push(Vec::new()),
            "AND" | "and" => {}
            w => disjuncts.last_mut().unwrap().push(w.trim_end_matches('*').to_string()),
        }
    }
    TextQuery(disjuncts.into_iter().filter(|d| !d.is_empty()).collect())
}

// ---------------------------------------------------------------------------
// Evaluation

pub fn evaluate(query: &Query, store: &TripleStore) -> Result<QueryResult, SyntaxError> {
    match query {
        Query::Ask { pattern } => Ok(QueryResult::Ask(!eval_group(pattern, store, vec![Solution::new()])?.is_empty())),
        Query::Select { distinct, projection, pattern, limit } => {
            let rows = eval_group(pattern, store, vec![Solution::new()])?;
            let variables = match projection {
                Some(v) => v.clone(),
                None => {
                    let mut vars = Vec::new();
                    collect_vars(pattern, &mut vars);
                    vars
                }
            };
            let mut out: Vec<Solution> = Vec::new();
            let mut seen = HashSet::new();
            for row in rows {
                let projected: Solution =
                    variables.iter().filter_map(|v| row.get(v).map(|t| (v.clone(), t.clone()))).collect();
                if *distinct {
                    let mut key: Vec<_> = projected.iter().map(|(k, v)| (k.clone(), v.clone())).collect();
                    key.sort();
                    if !seen.insert(key) {
                        continue;
                    }
                }
                out.push(projected);
                if limit.is_some_and(|l| out.len() >= l) {
                    break;
                }
            }
            Ok(QueryResult::Select { variables, rows: out })
        }
    }
}

fn collect_vars(group: &Group, out: &mut Vec<String>) {
    fn push(t: &PatternTerm, out: &mut Vec<String>) {
        if let PatternTerm::Var(v) = t {
            if !v.starts_with("_anon") && !out.contains(v) {
                out.push(v.clone());
            }
        }
    }
    for e in &group.elements {
        match e {
            Element::Triple(s, p, o) => {
                push(s, out);
                push(p, out);
                push(o, out);
            }
            Element::TextContains { var, .. } => push(var, out),
            Element::TextMatch { result_var, .. } => push(&PatternTerm::Var(result_var.clone()), out),
            Element::Optional(g) | Element::Group(g) => collect_vars(g, out),
        }
    }
}

fn resolve<'a>(t: &'a PatternTerm, sol: &'a Solution) -> Option<&'a Term> {
    match t {
        PatternTerm::Const(c) => Some(c),
        PatternTerm::Var(v) => sol.get(v),
    }
}

fn bind(sol: &Solution, t: &PatternTerm, value: &Term) -> Option<Solution> {
    match t {
        PatternTerm::Const(c) => (c == value).then(|| sol.clone()),
        PatternTerm::Var(v) => match sol.get(v) {
            Some(existing) => (existing == value).then(|| sol.clone()),
            None => {
                let mut s = sol.clone();
                s.insert(v.clone(), value.clone());
                Some(s)
            }
        },
    }
}

fn eval_group(group: &Group, store: &TripleStore, input: Vec<Solution>) -> Result<Vec<Solution>, SyntaxError> {
    let mut current = input;
    for element in &group.elements {
        current = match element {
            Element::Triple(s, p, o) => {
                let mut next = Vec::new();
                for sol in &current {
                    for t in store.matching(resolve(s, sol), resolve(p, sol), resolve(o, sol)) {
                        if let Some(b) = bind(sol, s, &t.subject)
                            .and_then(|b| bind(&b, p, &t.predicate))
                            .and_then(|b| bind(&b, o, &t.object))
                        {
                            next.push(b);
                        }
                    }
                }
                next
            }
            Element::TextContains { var, keywords } => {
                let mut next = Vec::new();
                for sol in &current {
                    match resolve(var, sol) {
                        Some(t) => {
                            if t.is_literal() && keywords.matches(t.lexical()) {
                                next.push(sol.clone());
                            }
                        }
                        None => {
                            for lit in store.literals() {
                                if keywords.matches(lit.lexical()) {
                                    next.extend(bind(sol, var, lit));
                                }
                            }
                        }
                    }
                }
                next
            }
            Element::TextMatch { result_var, keywords } => {
                let var = PatternTerm::Var(result_var.clone());
                let matches: Vec<&Term> = store.literals().into_iter().filter(|l| keywords.matches(l.lexical())).collect();
                current.iter().flat_map(|sol| matches.iter().filter_map(|m| bind(sol, &var, m))).collect()
            }
            Element::Optional(inner) => {
                let mut next = Vec::new();
                for sol in current {
                    let extended = eval_group(inner, store, vec![sol.clone()])?;
                    if extended.is_empty() {
                        next.push(sol);
                    } else {
                        next.extend(extended);
                    }
                }
                next
            }
            Element::Group(inner) => eval_group(inner, store, current)?,
        };
    }
    let mut out = Vec::new();
    for sol in current {
        let mut keep = true;
        for f in &group.filters {
            if !matches!(eval_expr(f, &sol)?, Value::Bool(true)) {
                keep = false;
                break;
            }
        }
        if keep {
            out.push(sol);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
enum Value {
    Term(Term),
    Bool(bool),
    Error,
}

impl Value {
    fn ebv(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            Value::Term(Term::Literal { value, .. }) => Some(!value.is_empty() && value != "false"),
            _ => None,
        }
    }

    fn text(&self) -> Option<String> {
        match self {
            Value::Term(t) if t.is_literal() => Some(t.lexical().to_string()),
            _ => None,
        }
    }
}

fn eval_expr(e: &Expr, sol: &Solution) -> Result<Value, SyntaxError> {
    Ok(match e {
        Expr::Var(v) => sol.get(v).cloned().map(Value::Term).unwrap_or(Value::Error),
        Expr::Const(t) => Value::Term(t.clone()),
        Expr::Bool(b) => Value::Bool(*b),
        Expr::Not(inner) => match eval_expr(inner, sol)?.ebv() {
            Some(b) => Value::Bool(!b),
            None => Value::Error,
        },
        Expr::And(a, b) => match (eval_expr(a, sol)?.ebv(), eval_expr(b, sol)?.ebv()) {
            (Some(x), Some(y)) => Value::Bool(x && y),
            (Some(false), None) | (None, Some(false)) => Value::Bool(false),
            _ => Value::Error,
        },
        Expr::Or(a, b) => match (eval_expr(a, sol)?.ebv(), eval_expr(b, sol)?.ebv()) {
            (Some(x), Some(y)) => Value::Bool(x || y),
            (Some(true), None) | (None, Some(true)) => Value::Bool(true),
            _ => Value::Error,
        },
        Expr::Eq(a, b) | Expr::Ne(a, b) => {
            let (x, y) = (eval_expr(a, sol)?, eval_expr(b, sol)?);
            if x == Value::Error || y == Value::Error {
                Value::Error
            } else {
                Value::Bool((x == y) == matches!(e, Expr::Eq(..)))
            }
        }
        Expr::Call(name, args) => {
            let vals: Vec<Value> = args.iter().map(|a| eval_expr(a, sol)).collect::<Result<_, _>>()?;
            let arity_err = || SyntaxError { offset: 0, message: format!("wrong number of arguments to {name}") };
            match name.as_str() {
                "str" => match vals.first().ok_or_else(arity_err)? {
                    Value::Term(t) => Value::Term(Term::literal(t.lexical())),
                    _ => Value::Error,
                },
                "lcase" => match vals.first().ok_or_else(arity_err)?.text() {
                    Some(s) => Value::Term(Term::literal(s.to_lowercase())),
                    None => Value::Error,
                },
                "lang" => match vals.first().ok_or_else(arity_err)? {
                    Value::Term(Term::Literal { lang, .. }) => Value::Term(Term::literal(lang.clone().unwrap_or_default())),
                    _ => Value::Error,
                },
                "langmatches" => match (vals.first().and_then(Value::text), vals.get(1).and_then(Value::text)) {
                    (Some(tag), Some(range)) => Value::Bool(if range == "*" {
                        !tag.is_empty()
                    } else {
                        tag.eq_ignore_ascii_case(&range) || tag.to_lowercase().starts_with(&format!("{}-", range.to_lowercase()))
                    }),
                    _ => Value::Error,
                },
                "isliteral" => Value::Bool(matches!(vals.first(), Some(Value::Term(t)) if t.is_literal())),
                "isiri" | "isuri" => Value::Bool(matches!(vals.first(), Some(Value::Term(Term::Iri(_))))),
                "bound" => match args.first() {
                    Some(Expr::Var(v)) => Value::Bool(sol.contains_key(v)),
                    _ => return Err(arity_err()),
                },
                "contains" => match (vals.first().and_then(Value::text), vals.get(1).and_then(Value::text)) {
                    (Some(h), Some(n)) => Value::Bool(h.contains(&n)),
                    _ => Value::Error,
                },
                "regex" => {
                    if vals.len() < 2 {
                        return Err(arity_err());
                    }
                    let (Some(text), Some(pattern)) = (vals[0].text(), vals[1].text()) else {
                        return Ok(Value::Error);
                    };
                    let flags = vals.get(2).and_then(Value::text).unwrap_or_default();
                    let re = regex::RegexBuilder::new(&pattern)
                        .case_insensitive(flags.contains('i'))
                        .build()
                        .map_err(|e| SyntaxError { offset: 0, message: format!("invalid regex: {e}") })?;
                    Value::Bool(re.is_match(&text))
                }
                _ => Value::Error,
            }
        }
    })
}
