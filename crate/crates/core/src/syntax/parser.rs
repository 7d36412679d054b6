//! Hand-written lexer and recursive-descent parser for `.chr` files.
//!
//! ```text
//! program := clause*
//! clause  := [ident '@'] heads ('<=>' | '==>') [guard '|'] body '.'
//! heads   := atoms ['\' atoms]
//! guard   := items          (equations or `true` only)
//! body    := items
//! items   := item (',' item)*
//! item    := 'true' | atom | term '=' term
//! ```
//!
//! `%` starts a comment that runs to the end of the line.

use std::collections::{BTreeMap, HashSet};

use thiserror::Error;

use super::{Atom, Constraint, Equation, Goal, Name, Program, Rule, Term};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("unexpected character `{0}`")]
    UnexpectedChar(char),
    #[error("unknown operator `{0}` (the only built-in is `=`)")]
    UnknownOperator(String),
    #[error("compound term `{0}(...)`: function symbols of arity > 0 are not allowed")]
    CompoundTerm(String),
    #[error("expected {expected}, found {found}")]
    Expected { expected: String, found: String },
    #[error("duplicate rule name `{0}`")]
    DuplicateRule(String),
    #[error("predicate `{predicate}` used with arity {found}, previously {expected}")]
    ArityMismatch {
        predicate: String,
        expected: usize,
        found: usize,
    },
    #[error("built-in `=` cannot appear in a rule head")]
    BuiltinInHead,
    #[error("only equations may appear in a guard")]
    AtomInGuard,
    #[error("rule has an empty head")]
    EmptyHead,
    #[error("`{0}` is reserved for engine-generated variables")]
    ReservedVariable(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("{line}:{column}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
}

impl ParseError {
    pub(crate) fn unlocated(kind: ParseErrorKind) -> Self {
        ParseError {
            line: 0,
            column: 0,
            kind,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Var(String),
    Number(String),
    At,
    Backslash,
    Simplify,
    Propagate,
    Bar,
    Comma,
    Dot,
    LParen,
    RParen,
    Eq,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) | Tok::Var(s) | Tok::Number(s) => format!("`{s}`"),
            Tok::At => "`@`".into(),
            Tok::Backslash => "`\\`".into(),
            Tok::Simplify => "`<=>`".into(),
            Tok::Propagate => "`==>`".into(),
            Tok::Bar => "`|`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Dot => "`.`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Eq => "`=`".into(),
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

const SYMBOL_CHARS: &str = "<>=\\+-*/;:!?&^~#$|";

fn lex(text: &str) -> Result<Vec<Spanned>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '%' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let tok = if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            col += i - start;
            if c.is_ascii_lowercase() {
                Tok::Ident(word)
            } else {
                Tok::Var(word)
            }
        } else if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            col += i - start;
            Tok::Number(chars[start..i].iter().collect())
        } else if SYMBOL_CHARS.contains(c) {
            let start = i;
            while i < chars.len() && SYMBOL_CHARS.contains(chars[i]) {
                i += 1;
            }
            let op: String = chars[start..i].iter().collect();
            col += i - start;
            match op.as_str() {
                "\\" => Tok::Backslash,
                "<=>" => Tok::Simplify,
                "==>" => Tok::Propagate,
                "|" => Tok::Bar,
                "=" => Tok::Eq,
                _ => {
                    return Err(ParseError {
                        line: tl,
                        column: tc,
                        kind: ParseErrorKind::UnknownOperator(op),
                    })
                }
            }
        } else {
            i += 1;
            col += 1;
            match c {
                '@' => Tok::At,
                ',' => Tok::Comma,
                '.' => Tok::Dot,
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                _ => {
                    return Err(ParseError {
                        line: tl,
                        column: tc,
                        kind: ParseErrorKind::UnexpectedChar(c),
                    })
                }
            }
        };
        out.push(Spanned {
            tok,
            line: tl,
            column: tc,
        });
    }
    out.push(Spanned {
        tok: Tok::Eof,
        line,
        column: col,
    });
    Ok(out)
}

/// Engine-generated fresh variables look like `_V<n>_<k>`.
fn is_reserved_var(name: &str) -> bool {
    let Some(rest) = name.strip_prefix("_V") else {
        return false;
    };
    let mut parts = rest.splitn(2, '_');
    let a = parts.next().unwrap_or("");
    let b = parts.next().unwrap_or("");
    !a.is_empty()
        && !b.is_empty()
        && a.chars().all(|c| c.is_ascii_digit())
        && b.chars().all(|c| c.is_ascii_digit())
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    anon: usize,
    seen_vars: HashSet<String>,
}

enum Item {
    True,
    Chr(Atom),
    Eq(Equation),
}

impl Parser {
    fn new(toks: Vec<Spanned>) -> Self {
        Parser {
            toks,
            pos: 0,
            anon: 0,
            seen_vars: HashSet::new(),
        }
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn bump(&mut self) -> Spanned {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error_here(&self, kind: ParseErrorKind) -> ParseError {
        let s = &self.toks[self.pos];
        ParseError {
            line: s.line,
            column: s.column,
            kind,
        }
    }

    fn expected(&self, what: &str) -> ParseError {
        self.error_here(ParseErrorKind::Expected {
            expected: what.to_string(),
            found: self.peek().describe(),
        })
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.expected(what))
        }
    }

    fn variable(&mut self, name: String) -> Result<Term, ParseError> {
        if name == "_" {
            // Each `_` is a distinct variable.
            loop {
                self.anon += 1;
                let fresh = format!("_A{}", self.anon);
                if !self.seen_vars.contains(&fresh) {
                    self.seen_vars.insert(fresh.clone());
                    return Ok(Term::Var(Name::from(fresh.as_str())));
                }
            }
        }
        if is_reserved_var(&name) {
            return Err(self.error_here(ParseErrorKind::ReservedVariable(name)));
        }
        self.seen_vars.insert(name.clone());
        Ok(Term::Var(Name::from(name.as_str())))
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        match self.peek().clone() {
            Tok::Var(v) => {
                let t = self.variable(v);
                self.bump();
                t
            }
            Tok::Ident(c) => {
                if *self.peek_at(1) == Tok::LParen {
                    return Err(self.error_here(ParseErrorKind::CompoundTerm(c)));
                }
                self.bump();
                Ok(Term::Const(Name::from(c.as_str())))
            }
            Tok::Number(n) => {
                self.bump();
                Ok(Term::Const(Name::from(n.as_str())))
            }
            _ => Err(self.expected("a variable or constant")),
        }
    }

    fn atom_args(&mut self) -> Result<Vec<Term>, ParseError> {
        let mut args = Vec::new();
        if *self.peek() != Tok::LParen {
            return Ok(args);
        }
        self.bump();
        loop {
            args.push(self.term()?);
            match self.peek() {
                Tok::Comma => {
                    self.bump();
                }
                Tok::RParen => {
                    self.bump();
                    return Ok(args);
                }
                _ => return Err(self.expected("`,` or `)`")),
            }
        }
    }

    fn item(&mut self) -> Result<Item, ParseError> {
        match self.peek().clone() {
            Tok::Ident(name) if name == "true" && *self.peek_at(1) != Tok::Eq => {
                self.bump();
                Ok(Item::True)
            }
            Tok::Ident(name) if *self.peek_at(1) != Tok::Eq => {
                self.bump();
                let args = self.atom_args()?;
                if *self.peek() == Tok::Eq {
                    // `f(a) = X`
                    return Err(ParseError {
                        line: self.toks[self.pos].line,
                        column: self.toks[self.pos].column,
                        kind: ParseErrorKind::CompoundTerm(name),
                    });
                }
                Ok(Item::Chr(Atom {
                    predicate: Name::from(name.as_str()),
                    args,
                }))
            }
            Tok::Ident(_) | Tok::Var(_) | Tok::Number(_) => {
                let lhs = self.term()?;
                self.expect(Tok::Eq, "`=`")?;
                let rhs = self.term()?;
                Ok(Item::Eq(Equation { lhs, rhs }))
            }
            _ => Err(self.expected("a constraint")),
        }
    }

    fn items(&mut self) -> Result<Vec<(Item, usize, usize)>, ParseError> {
        let mut out = Vec::new();
        loop {
            let (l, c) = (self.toks[self.pos].line, self.toks[self.pos].column);
            out.push((self.item()?, l, c));
            if *self.peek() == Tok::Comma {
                self.bump();
            } else {
                return Ok(out);
            }
        }
    }

    fn head(&mut self) -> Result<Vec<Atom>, ParseError> {
        let mut atoms = Vec::new();
        for (item, line, column) in self.items()? {
            match item {
                Item::Chr(a) => atoms.push(a),
                Item::Eq(_) => {
                    return Err(ParseError {
                        line,
                        column,
                        kind: ParseErrorKind::BuiltinInHead,
                    })
                }
                Item::True => {
                    return Err(ParseError {
                        line,
                        column,
                        kind: ParseErrorKind::EmptyHead,
                    })
                }
            }
        }
        Ok(atoms)
    }

    fn body(items: Vec<(Item, usize, usize)>) -> Vec<Constraint> {
        items
            .into_iter()
            .filter_map(|(i, _, _)| match i {
                Item::True => None,
                Item::Chr(a) => Some(Constraint::Chr(a)),
                Item::Eq(e) => Some(Constraint::Builtin(e)),
            })
            .collect()
    }

    fn clause(&mut self) -> Result<(Option<Name>, Rule), ParseError> {
        self.seen_vars.clear();
        self.anon = 0;
        let name = match (self.peek().clone(), self.peek_at(1)) {
            (Tok::Ident(n), Tok::At) => {
                self.bump();
                self.bump();
                Some(Name::from(n.as_str()))
            }
            _ => None,
        };
        let first = self.head()?;
        let (kept, removed) = if *self.peek() == Tok::Backslash {
            self.bump();
            let removed = self.head()?;
            self.expect(Tok::Simplify, "`<=>` after a simpagation head")?;
            (first, removed)
        } else {
            match self.peek() {
                Tok::Simplify => {
                    self.bump();
                    (Vec::new(), first)
                }
                Tok::Propagate => {
                    self.bump();
                    (first, Vec::new())
                }
                _ => return Err(self.expected("`<=>`, `==>` or `\\`")),
            }
        };
        let first_items = self.items()?;
        let (guard, body_items) = if *self.peek() == Tok::Bar {
            self.bump();
            let mut guard = Vec::new();
            for (item, line, column) in first_items {
                match item {
                    Item::True => {}
                    Item::Eq(e) => guard.push(e),
                    Item::Chr(_) => {
                        return Err(ParseError {
                            line,
                            column,
                            kind: ParseErrorKind::AtomInGuard,
                        })
                    }
                }
            }
            (guard, self.items()?)
        } else {
            (Vec::new(), first_items)
        };
        self.expect(Tok::Dot, "`.` at the end of the rule")?;
        let rule = Rule {
            name: Name::from(""),
            kept,
            removed,
            guard,
            body: Self::body(body_items),
        };
        Ok((name, rule))
    }
}

/// Parses a `.chr` program. Unnamed rules are named `rule_<n>` (1-based
/// position), skipping names already taken.
pub fn parse_program(text: &str) -> Result<Program, ParseError> {
    let mut p = Parser::new(lex(text)?);
    let mut clauses = Vec::new();
    while *p.peek() != Tok::Eof {
        let (line, column) = (p.toks[p.pos].line, p.toks[p.pos].column);
        let (name, rule) = p.clause()?;
        clauses.push((name, rule, line, column));
    }
    let mut taken: HashSet<Name> = HashSet::new();
    for (name, _, line, column) in &clauses {
        if let Some(n) = name {
            if !taken.insert(n.clone()) {
                return Err(ParseError {
                    line: *line,
                    column: *column,
                    kind: ParseErrorKind::DuplicateRule(n.to_string()),
                });
            }
        }
    }
    let mut rules = Vec::with_capacity(clauses.len());
    let mut arities: BTreeMap<Name, usize> = BTreeMap::new();
    for (idx, (name, mut rule, line, column)) in clauses.into_iter().enumerate() {
        rule.name = match name {
            Some(n) => n,
            None => {
                let mut candidate = format!("rule_{}", idx + 1);
                while taken.contains(candidate.as_str()) {
                    candidate.push('\'');
                }
                let n = Name::from(candidate.as_str());
                taken.insert(n.clone());
                n
            }
        };
        for atom in rule.atoms() {
            let expected = *arities.entry(atom.predicate.clone()).or_insert(atom.arity());
            if expected != atom.arity() {
                return Err(ParseError {
                    line,
                    column,
                    kind: ParseErrorKind::ArityMismatch {
                        predicate: atom.predicate.to_string(),
                        expected,
                        found: atom.arity(),
                    },
                });
            }
        }
        rules.push(rule);
    }
    Program::from_rules(rules)
}

/// Parses a goal: a comma-separated multiset of atoms and equations, with an
/// optional trailing `.`. `true` (or empty text) is the empty goal.
pub fn parse_goal(text: &str) -> Result<Goal, ParseError> {
    let mut p = Parser::new(lex(text)?);
    if *p.peek() == Tok::Eof {
        return Ok(Goal::new());
    }
    let items = p.items()?;
    if *p.peek() == Tok::Dot {
        p.bump();
    }
    if *p.peek() != Tok::Eof {
        return Err(p.expected("`,` or end of goal"));
    }
    let goal = Parser::body(items);
    let mut arities: BTreeMap<&Name, usize> = BTreeMap::new();
    for c in &goal {
        if let Constraint::Chr(a) = c {
            let expected = *arities.entry(&a.predicate).or_insert(a.arity());
            if expected != a.arity() {
                return Err(ParseError::unlocated(ParseErrorKind::ArityMismatch {
                    predicate: a.predicate.to_string(),
                    expected,
                    found: a.arity(),
                }));
            }
        }
    }
    Ok(goal)
}

/// Parses a single term. Used when reading terms back from JSON traces,
/// so engine-generated variable names are accepted here.
pub fn parse_term(text: &str) -> Result<Term, ParseError> {
    let toks = lex(text)?;
    match (toks.first().map(|s| &s.tok), toks.len()) {
        (Some(Tok::Var(v)), 2) => Ok(Term::Var(Name::from(v.as_str()))),
        (Some(Tok::Ident(c)), 2) | (Some(Tok::Number(c)), 2) => {
            Ok(Term::Const(Name::from(c.as_str())))
        }
        _ => Err(ParseError {
            line: 1,
            column: 1,
            kind: ParseErrorKind::Expected {
                expected: "a single term".into(),
                found: text.to_string(),
            },
        }),
    }
}
