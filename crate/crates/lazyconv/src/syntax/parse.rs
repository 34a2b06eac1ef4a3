//! Recursive-descent parser for definitions files and standalone terms.
//!
//! Grammar:
//! ```text
//! file     := (datadecl | constdef)*
//! datadecl := "data" TypeName ":=" CtorName Nat ("|" CtorName Nat)* ";"
//! constdef := "def" name ":=" term ";"
//! term     := "\" name "." term
//!           | "match" term "with" branch ("|" branch)* "end"
//!           | appterm
//! appterm  := atom+
//! atom     := name | CtorName | "(" term ")"
//! branch   := CtorName name* "->" term
//! ```
//! Comments run from `--` to end of line. Constant bodies may reference
//! constants declared later in the same file (mutual recursion), so name
//! resolution runs as a second pass over a raw tree.

use super::{Branch, DataDecl, GlobalDefs, Name, Term, TermNode};
use std::fmt;
use std::rc::Rc;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.col, self.msg)
    }
}

impl std::error::Error for ParseError {}

fn err<T>(pos: Pos, msg: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError { line: pos.0, col: pos.1, msg: msg.into() })
}

type Pos = (usize, usize);

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    CtorIdent(String),
    Number(usize),
    Lambda,
    Dot,
    Assign,
    Semi,
    Pipe,
    Arrow,
    LParen,
    RParen,
    KwData,
    KwDef,
    KwMatch,
    KwWith,
    KwEnd,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) | Tok::CtorIdent(s) => write!(f, "'{s}'"),
            Tok::Number(n) => write!(f, "'{n}'"),
            Tok::Lambda => write!(f, "'\\'"),
            Tok::Dot => write!(f, "'.'"),
            Tok::Assign => write!(f, "':='"),
            Tok::Semi => write!(f, "';'"),
            Tok::Pipe => write!(f, "'|'"),
            Tok::Arrow => write!(f, "'->'"),
            Tok::LParen => write!(f, "'('"),
            Tok::RParen => write!(f, "')'"),
            Tok::KwData => write!(f, "'data'"),
            Tok::KwDef => write!(f, "'def'"),
            Tok::KwMatch => write!(f, "'match'"),
            Tok::KwWith => write!(f, "'with'"),
            Tok::KwEnd => write!(f, "'end'"),
            Tok::Eof => write!(f, "end of input"),
        }
    }
}

fn lex(text: &str) -> Result<Vec<(Tok, Pos)>, ParseError> {
    let mut toks = Vec::new();
    let mut line = 1usize;
    let mut col = 1usize;
    let mut chars = text.chars().peekable();

    macro_rules! bump {
        () => {{
            let c = chars.next();
            match c {
                Some('\n') => {
                    line += 1;
                    col = 1;
                }
                Some(_) => col += 1,
                None => {}
            }
            c
        }};
    }

    loop {
        let pos = (line, col);
        let c = match chars.peek().copied() {
            Some(c) => c,
            None => break,
        };
        match c {
            ' ' | '\t' | '\r' | '\n' => {
                bump!();
            }
            '-' => {
                bump!();
                match chars.peek() {
                    Some('-') => {
                        while let Some(&c) = chars.peek() {
                            if c == '\n' {
                                break;
                            }
                            bump!();
                        }
                    }
                    Some('>') => {
                        bump!();
                        toks.push((Tok::Arrow, pos));
                    }
                    _ => return err(pos, "expected '--' or '->' after '-'"),
                }
            }
            '\\' => {
                bump!();
                toks.push((Tok::Lambda, pos));
            }
            '.' => {
                bump!();
                toks.push((Tok::Dot, pos));
            }
            ';' => {
                bump!();
                toks.push((Tok::Semi, pos));
            }
            '|' => {
                bump!();
                toks.push((Tok::Pipe, pos));
            }
            '(' => {
                bump!();
                toks.push((Tok::LParen, pos));
            }
            ')' => {
                bump!();
                toks.push((Tok::RParen, pos));
            }
            ':' => {
                bump!();
                if chars.peek() == Some(&'=') {
                    bump!();
                    toks.push((Tok::Assign, pos));
                } else {
                    return err(pos, "expected ':='");
                }
            }
            '0'..='9' => {
                let mut n = 0usize;
                while let Some(&d) = chars.peek() {
                    if let Some(v) = d.to_digit(10) {
                        n = n * 10 + v as usize;
                        bump!();
                    } else {
                        break;
                    }
                }
                toks.push((Tok::Number(n), pos));
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut s = String::new();
                while let Some(&d) = chars.peek() {
                    if d.is_ascii_alphanumeric() || d == '_' || d == '\'' {
                        s.push(d);
                        bump!();
                    } else {
                        break;
                    }
                }
                let tok = match s.as_str() {
                    "data" => Tok::KwData,
                    "def" => Tok::KwDef,
                    "match" => Tok::KwMatch,
                    "with" => Tok::KwWith,
                    "end" => Tok::KwEnd,
                    _ if c.is_ascii_uppercase() => Tok::CtorIdent(s),
                    _ => Tok::Ident(s),
                };
                toks.push((tok, pos));
            }
            c => return err(pos, format!("unexpected character '{c}'")),
        }
    }
    toks.push((Tok::Eof, (line, col)));
    Ok(toks)
}

/// Unresolved tree: atoms keep their flat application spines so constructor
/// saturation can wait until all declarations are known.
#[derive(Debug)]
enum Raw {
    Name(String, Pos),
    Ctor(String, Pos),
    Lam(String, Box<Raw>),
    Spine(Vec<Raw>),
    Match(Box<Raw>, Vec<RawBranch>, Pos),
}

#[derive(Debug)]
struct RawBranch {
    ctor: String,
    pos: Pos,
    binders: Vec<String>,
    body: Raw,
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].1
    }

    fn next(&mut self) -> (Tok, Pos) {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok) -> Result<Pos, ParseError> {
        let (got, pos) = self.next();
        if got == want {
            Ok(pos)
        } else {
            err(pos, format!("expected {want}, found {got}"))
        }
    }

    fn ident(&mut self) -> Result<(String, Pos), ParseError> {
        match self.next() {
            (Tok::Ident(s), pos) => Ok((s, pos)),
            (got, pos) => err(pos, format!("expected identifier, found {got}")),
        }
    }

    fn ctor_ident(&mut self) -> Result<(String, Pos), ParseError> {
        match self.next() {
            (Tok::CtorIdent(s), pos) => Ok((s, pos)),
            (got, pos) => err(pos, format!("expected constructor name, found {got}")),
        }
    }

    fn term(&mut self) -> Result<Raw, ParseError> {
        match self.peek() {
            Tok::Lambda => {
                self.next();
                let (x, _) = self.ident()?;
                self.expect(Tok::Dot)?;
                let body = self.term()?;
                Ok(Raw::Lam(x, Box::new(body)))
            }
            Tok::KwMatch => {
                let pos = self.pos();
                self.next();
                let scrutinee = self.term()?;
                self.expect(Tok::KwWith)?;
                let mut branches = vec![self.branch()?];
                while self.peek() == &Tok::Pipe {
                    self.next();
                    branches.push(self.branch()?);
                }
                self.expect(Tok::KwEnd)?;
                Ok(Raw::Match(Box::new(scrutinee), branches, pos))
            }
            _ => self.appterm(),
        }
    }

    fn branch(&mut self) -> Result<RawBranch, ParseError> {
        let (ctor, pos) = self.ctor_ident()?;
        let mut binders = Vec::new();
        while let Tok::Ident(_) = self.peek() {
            binders.push(self.ident()?.0);
        }
        self.expect(Tok::Arrow)?;
        let body = self.term()?;
        Ok(RawBranch { ctor, pos, binders, body })
    }

    fn appterm(&mut self) -> Result<Raw, ParseError> {
        let mut atoms = Vec::new();
        loop {
            match self.peek() {
                Tok::Ident(_) => {
                    let (s, pos) = self.ident()?;
                    atoms.push(Raw::Name(s, pos));
                }
                Tok::CtorIdent(_) => {
                    let (s, pos) = self.ctor_ident()?;
                    atoms.push(Raw::Ctor(s, pos));
                }
                Tok::LParen => {
                    self.next();
                    let t = self.term()?;
                    self.expect(Tok::RParen)?;
                    atoms.push(t);
                }
                _ => break,
            }
        }
        if atoms.is_empty() {
            let (got, pos) = self.next();
            return err(pos, format!("expected a term, found {got}"));
        }
        if atoms.len() == 1 {
            Ok(atoms.pop().unwrap())
        } else {
            Ok(Raw::Spine(atoms))
        }
    }
}

struct Resolver<'a> {
    defs: &'a GlobalDefs,
    /// Lambda and match binders in scope, innermost last.
    bound: Vec<Name>,
    /// Free lowercase names allowed (standalone terms) or an error (def bodies).
    allow_free: bool,
}

impl<'a> Resolver<'a> {
    fn resolve(&mut self, raw: &Raw) -> Result<Term, ParseError> {
        match raw {
            Raw::Name(s, pos) => self.name(s, *pos),
            Raw::Ctor(c, pos) => self.ctor(c, *pos, &[]),
            Raw::Lam(x, body) => {
                let x: Name = Rc::from(x.as_str());
                self.bound.push(x.clone());
                let body = self.resolve(body)?;
                self.bound.pop();
                Ok(Rc::new(TermNode::Lam(x, body)))
            }
            Raw::Spine(atoms) => {
                let (head, rest) = atoms.split_first().unwrap();
                let (mut t, rest) = match head {
                    Raw::Ctor(c, pos) => {
                        let arity = self.arity(c, *pos)?;
                        if rest.len() < arity {
                            return err(
                                *pos,
                                format!(
                                    "unsaturated constructor {c}: expected {arity} argument(s), found {}",
                                    rest.len()
                                ),
                            );
                        }
                        (self.ctor(c, *pos, &rest[..arity])?, &rest[arity..])
                    }
                    _ => (self.resolve(head)?, rest),
                };
                for a in rest {
                    let a = self.resolve(a)?;
                    t = Rc::new(TermNode::App(t, a));
                }
                Ok(t)
            }
            Raw::Match(scrutinee, branches, pos) => {
                let scrutinee = self.resolve(scrutinee)?;
                let first = &branches[0];
                let ty = match self.defs.ctor_type(&first.ctor) {
                    Some(ty) => ty.clone(),
                    None => {
                        return err(first.pos, format!("undeclared constructor {}", first.ctor))
                    }
                };
                let decl = self.defs.data_decl(&ty).unwrap().clone();
                let mut seen = vec![false; decl.ctors.len()];
                let mut out = Vec::with_capacity(branches.len());
                for b in branches {
                    let idx = match decl.ctors.iter().position(|(c, _)| **c == b.ctor) {
                        Some(i) => i,
                        None => {
                            return err(
                                b.pos,
                                format!("constructor {} does not belong to data type {ty}", b.ctor),
                            )
                        }
                    };
                    if seen[idx] {
                        return err(b.pos, format!("duplicate branch for constructor {}", b.ctor));
                    }
                    seen[idx] = true;
                    let arity = decl.ctors[idx].1;
                    if b.binders.len() != arity {
                        return err(
                            b.pos,
                            format!(
                                "branch for {} binds {} variable(s), constructor has arity {arity}",
                                b.ctor,
                                b.binders.len()
                            ),
                        );
                    }
                    let binders: Vec<Name> =
                        b.binders.iter().map(|s| Rc::from(s.as_str())).collect();
                    self.bound.extend(binders.iter().cloned());
                    let body = self.resolve(&b.body)?;
                    self.bound.truncate(self.bound.len() - binders.len());
                    out.push(Branch { ctor: Rc::from(b.ctor.as_str()), binders, body });
                }
                if let Some(missing) = seen.iter().position(|s| !s) {
                    return err(
                        *pos,
                        format!(
                            "non-exhaustive match: missing branch for {}",
                            decl.ctors[missing].0
                        ),
                    );
                }
                Ok(Rc::new(TermNode::Match(scrutinee, out)))
            }
        }
    }

    fn name(&mut self, s: &str, pos: Pos) -> Result<Term, ParseError> {
        if self.bound.iter().any(|b| &**b == s) {
            return Ok(Rc::new(TermNode::Var(Rc::from(s))));
        }
        if self.defs.has_const(s) {
            return Ok(Rc::new(TermNode::Const(Rc::from(s))));
        }
        if self.allow_free {
            Ok(Rc::new(TermNode::Var(Rc::from(s))))
        } else {
            err(pos, format!("undeclared name {s}"))
        }
    }

    fn arity(&self, c: &str, pos: Pos) -> Result<usize, ParseError> {
        match self.defs.ctor_arity(c) {
            Some(a) => Ok(a),
            None => err(pos, format!("undeclared constructor {c}")),
        }
    }

    fn ctor(&mut self, c: &str, pos: Pos, args: &[Raw]) -> Result<Term, ParseError> {
        let arity = self.arity(c, pos)?;
        if args.len() != arity {
            return err(
                pos,
                format!(
                    "unsaturated constructor {c}: expected {arity} argument(s), found {}",
                    args.len()
                ),
            );
        }
        let args = args.iter().map(|a| self.resolve(a)).collect::<Result<_, _>>()?;
        Ok(Rc::new(TermNode::Ctor(Rc::from(c), args)))
    }
}

/// Parse a definitions file. Constant bodies must be closed; they may
/// reference constants declared later in the file.
pub fn parse_defs(text: &str) -> Result<GlobalDefs, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, at: 0 };
    let mut defs = GlobalDefs::new();
    let mut raw_consts: Vec<(Name, Raw, Pos)> = Vec::new();

    loop {
        match p.peek() {
            Tok::Eof => break,
            Tok::KwData => {
                p.next();
                let (ty, ty_pos) = p.ctor_ident()?;
                if defs.data_decl(&ty).is_some() {
                    return err(ty_pos, format!("duplicate data type {ty}"));
                }
                p.expect(Tok::Assign)?;
                let mut ctors = Vec::new();
                loop {
                    let (c, c_pos) = p.ctor_ident()?;
                    if defs.ctor_arity(&c).is_some()
                        || ctors.iter().any(|(n, _): &(Name, usize)| **n == c)
                    {
                        return err(c_pos, format!("duplicate constructor {c}"));
                    }
                    let arity = match p.next() {
                        (Tok::Number(n), _) => n,
                        (got, pos) => {
                            return err(pos, format!("expected constructor arity, found {got}"))
                        }
                    };
                    ctors.push((Rc::from(c.as_str()) as Name, arity));
                    match p.next() {
                        (Tok::Pipe, _) => continue,
                        (Tok::Semi, _) => break,
                        (got, pos) => return err(pos, format!("expected '|' or ';', found {got}")),
                    }
                }
                defs.add_data(DataDecl { name: Rc::from(ty.as_str()), ctors });
            }
            Tok::KwDef => {
                p.next();
                let (name, name_pos) = p.ident()?;
                if defs.has_const(&name) || raw_consts.iter().any(|(n, _, _)| **n == name) {
                    return err(name_pos, format!("duplicate constant {name}"));
                }
                p.expect(Tok::Assign)?;
                let body = p.term()?;
                p.expect(Tok::Semi)?;
                raw_consts.push((Rc::from(name.as_str()), body, name_pos));
            }
            _ => {
                let (got, pos) = p.next();
                return err(pos, format!("expected 'data' or 'def', found {got}"));
            }
        }
    }

    // Register every constant name before resolving any body, so that
    // mutually recursive definitions see each other.
    let names: Vec<Name> = raw_consts.iter().map(|(n, _, _)| n.clone()).collect();
    for n in &names {
        defs.const_index.insert(n.clone(), usize::MAX);
    }
    let mut bodies = Vec::new();
    for (name, raw, _) in &raw_consts {
        let mut r = Resolver { defs: &defs, bound: Vec::new(), allow_free: false };
        bodies.push((name.clone(), r.resolve(raw)?));
    }
    for n in &names {
        defs.const_index.remove(n);
    }
    for (name, body) in bodies {
        defs.add_const(name, body);
    }
    Ok(defs)
}

/// Parse a standalone term against a set of declarations. Lowercase names
/// that are neither bound nor declared become free variables.
pub fn parse_term(text: &str, defs: &GlobalDefs) -> Result<Term, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, at: 0 };
    let raw = p.term()?;
    let (got, pos) = p.next();
    if got != Tok::Eof {
        return err(pos, format!("expected end of input, found {got}"));
    }
    let mut r = Resolver { defs, bound: Vec::new(), allow_free: true };
    r.resolve(&raw)
}
