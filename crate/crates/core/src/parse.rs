//! Surface syntax for terms.
//!
//! ```text
//! S   D   p <f.m> q   f.m . p   tau . p   csi[p1, ..., pk]   s2d(p)
//! use(p, f, NAME)   nu(f, s, p)   fix x . p   pi(n, p)
//! p <nt(r)> q   nt(r) . p   ntil(s, s', r) . p   ntjava(s, r) . p
//! ```
//!
//! Molecular dynamics methods are written inside parentheses after the
//! focus, e.g. `md(setfield s v s')`. `#` starts a comment.

use crate::error::ParseError;
use crate::term::{Action, Field, Focus, MdMethod, Method, ServiceRef, Spot, Term, Var};

const KEYWORDS: &[&str] = &[
    "S", "D", "tau", "csi", "s2d", "use", "nu", "fix", "pi", "nt", "ntil", "ntjava",
];

pub fn parse_term(src: &str) -> Result<Term, ParseError> {
    let mut p = Parser::new(src);
    let t = p.term()?;
    p.skip_ws();
    if !p.at_end() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(t)
}

pub fn parse_action(src: &str) -> Result<Action, ParseError> {
    let mut p = Parser::new(src);
    let a = p.action()?;
    p.skip_ws();
    if !p.at_end() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(a)
}

/// A method in isolation: an identifier or a parenthesised md method.
pub fn parse_method(src: &str) -> Result<Method, ParseError> {
    let mut p = Parser::new(src);
    p.skip_ws();
    let m = if p.peek() == Some('(') {
        p.bump();
        let m = p.md_method()?;
        p.expect(')')?;
        Method::Md(m)
    } else if let Some(name) = p.md_name_ahead() {
        Method::Md(p.md_args(&name)?)
    } else {
        Method::opaque(&p.ident()?)
    };
    p.skip_ws();
    if !p.at_end() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(m)
}

pub(crate) struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    pub(crate) fn new(src: &'a str) -> Self {
        Parser { src, pos: 0 }
    }

    pub(crate) fn error(&self, msg: impl Into<String>) -> ParseError {
        let before = &self.src[..self.pos];
        let line = before.matches('\n').count() + 1;
        let col = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
        ParseError { line, col, message: msg.into() }
    }

    pub(crate) fn at_end(&self) -> bool {
        self.pos >= self.src.len()
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    pub(crate) fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.bump();
            } else if c == '#' {
                while let Some(c) = self.bump() {
                    if c == '\n' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.error(format!("expected '{c}'")))
        }
    }

    fn ident_start(c: char) -> bool {
        c.is_ascii_alphabetic() || c == '_'
    }

    fn ident_char(c: char) -> bool {
        c.is_ascii_alphanumeric() || c == '_' || c == '\'' || c == '$'
    }

    /// Reads an identifier without consuming it.
    fn peek_ident(&mut self) -> Option<String> {
        self.skip_ws();
        let rest = &self.src[self.pos..];
        let mut chars = rest.chars();
        match chars.next() {
            Some(c) if Self::ident_start(c) => {}
            _ => return None,
        }
        let len = rest.find(|c: char| !Self::ident_char(c)).unwrap_or(rest.len());
        Some(rest[..len].to_string())
    }

    pub(crate) fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek_ident() {
            Some(id) => {
                if id.contains('$') {
                    return Err(self.error(format!("identifier '{id}' uses a reserved prefix")));
                }
                self.pos += id.len();
                Ok(id)
            }
            None => Err(self.error("expected identifier")),
        }
    }

    fn name(&mut self) -> Result<String, ParseError> {
        let id = self.ident()?;
        if KEYWORDS.contains(&id.as_str()) {
            return Err(self.error(format!("'{id}' is a keyword")));
        }
        Ok(id)
    }

    fn number(&mut self) -> Result<u32, ParseError> {
        self.skip_ws();
        let rest = &self.src[self.pos..];
        let len = rest.find(|c: char| !c.is_ascii_digit()).unwrap_or(rest.len());
        if len == 0 {
            return Err(self.error("expected number"));
        }
        let n = rest[..len].parse().map_err(|_| self.error("number out of range"))?;
        self.pos += len;
        Ok(n)
    }

    /// Character after the identifier at the cursor, skipping blanks.
    fn after_ident(&mut self, id: &str) -> Option<char> {
        let rest = &self.src[self.pos + id.len()..];
        rest.chars().find(|c| !c.is_whitespace())
    }

    pub(crate) fn term(&mut self) -> Result<Term, ParseError> {
        if self.peek_ident().as_deref() == Some("fix") {
            return self.fix();
        }
        let left = self.prefixed()?;
        if self.eat('<') {
            let op = self.pcc_op()?;
            self.expect('>')?;
            let right = self.term()?;
            return Ok(match op {
                PccOp::Act(a) => Term::pcc(left, a, right),
                PccOp::Fork(z) => Term::fork(left, z, right),
            });
        }
        Ok(left)
    }

    fn fix(&mut self) -> Result<Term, ParseError> {
        self.ident()?;
        let x = self.name()?;
        self.expect('.')?;
        let body = self.term()?;
        Ok(Term::fix(&x, body))
    }

    fn body(&mut self) -> Result<Term, ParseError> {
        if self.peek_ident().as_deref() == Some("fix") {
            self.fix()
        } else {
            self.prefixed()
        }
    }

    fn pcc_op(&mut self) -> Result<PccOp, ParseError> {
        if self.peek_ident().as_deref() == Some("nt") {
            self.ident()?;
            self.expect('(')?;
            let z = self.term()?;
            self.expect(')')?;
            Ok(PccOp::Fork(z))
        } else {
            Ok(PccOp::Act(self.action()?))
        }
    }

    fn prefixed(&mut self) -> Result<Term, ParseError> {
        self.skip_ws();
        if self.peek() == Some('(') {
            self.bump();
            let t = self.term()?;
            self.expect(')')?;
            return Ok(t);
        }
        let id = self.peek_ident().ok_or_else(|| self.error("expected term"))?;
        match id.as_str() {
            "S" => {
                self.ident()?;
                Ok(Term::Stop)
            }
            "D" => {
                self.ident()?;
                Ok(Term::Dead)
            }
            "tau" => {
                let a = self.action()?;
                self.expect('.')?;
                Ok(Term::prefix(a, self.body()?))
            }
            "csi" => {
                self.ident()?;
                self.expect('[')?;
                let mut ts = Vec::new();
                if !self.eat(']') {
                    loop {
                        ts.push(self.term()?);
                        if self.eat(']') {
                            break;
                        }
                        self.expect(',')?;
                    }
                }
                Ok(Term::Csi(ts))
            }
            "s2d" => {
                self.ident()?;
                self.expect('(')?;
                let t = self.term()?;
                self.expect(')')?;
                Ok(Term::s2d(t))
            }
            "use" => {
                self.ident()?;
                self.expect('(')?;
                let t = self.term()?;
                self.expect(',')?;
                let f = self.name()?;
                self.expect(',')?;
                let h = self.service_name()?;
                self.expect(')')?;
                Ok(Term::Use(t.into(), Focus::new(&f), ServiceRef::named(&h)))
            }
            "nu" => {
                self.ident()?;
                self.expect('(')?;
                let f = self.name()?;
                self.expect(',')?;
                let s = self.ident()?;
                self.expect(',')?;
                let t = self.term()?;
                self.expect(')')?;
                Ok(Term::nu(&f, &s, t))
            }
            "pi" => {
                self.ident()?;
                self.expect('(')?;
                let n = self.number()?;
                self.expect(',')?;
                let t = self.term()?;
                self.expect(')')?;
                Ok(Term::proj(n, t))
            }
            "nt" => {
                self.ident()?;
                self.expect('(')?;
                let z = self.term()?;
                self.expect(')')?;
                self.expect('.')?;
                Ok(Term::fork_prefix(z, self.body()?))
            }
            "ntil" => {
                self.ident()?;
                self.expect('(')?;
                let s = self.ident()?;
                self.expect(',')?;
                let s2 = self.ident()?;
                self.expect(',')?;
                let p = self.term()?;
                self.expect(')')?;
                self.expect('.')?;
                let q = self.body()?;
                Ok(Term::NtIl(Spot::new(&s), Spot::new(&s2), p.into(), q.into()))
            }
            "ntjava" => {
                self.ident()?;
                self.expect('(')?;
                let s = self.ident()?;
                self.expect(',')?;
                let p = self.term()?;
                self.expect(')')?;
                self.expect('.')?;
                let q = self.body()?;
                Ok(Term::NtJava(Spot::new(&s), p.into(), q.into()))
            }
            "fix" => Err(self.error("parenthesise 'fix' in operand position")),
            _ => match self.after_ident(&id) {
                Some('.') | Some('(') => {
                    let a = self.action()?;
                    self.expect('.')?;
                    Ok(Term::prefix(a, self.body()?))
                }
                _ => Ok(Term::Var(Var::new(&self.name()?))),
            },
        }
    }

    fn service_name(&mut self) -> Result<String, ParseError> {
        self.skip_ws();
        if self.src[self.pos..].starts_with("spec:") {
            let rest = &self.src[self.pos..];
            let end = rest.find(')').ok_or_else(|| self.error("unterminated service"))?;
            let name = rest[..end].trim().to_string();
            self.pos += end;
            return Ok(name);
        }
        let id = self.name()?;
        if self.eat('(') {
            self.skip_ws();
            let arg = if self.peek().is_some_and(|c| c.is_ascii_digit()) {
                self.number()?.to_string()
            } else {
                self.ident()?
            };
            self.expect(')')?;
            return Ok(format!("{id}({arg})"));
        }
        Ok(id)
    }

    pub(crate) fn action(&mut self) -> Result<Action, ParseError> {
        let id = self.ident()?;
        if id == "tau" {
            return Ok(Action::Tau);
        }
        if KEYWORDS.contains(&id.as_str()) {
            return Err(self.error(format!("'{id}' cannot be a focus")));
        }
        let focus = Focus::new(&id);
        self.skip_ws();
        match self.peek() {
            Some('.') => {
                self.bump();
                let m = self.ident()?;
                Ok(Action::Call(focus, Method::opaque(&m)))
            }
            Some('(') => {
                self.bump();
                let m = self.md_method()?;
                self.expect(')')?;
                Ok(Action::Call(focus, Method::Md(m)))
            }
            _ => Err(self.error("expected '.' or '(' after focus")),
        }
    }

    fn md_name_ahead(&mut self) -> Option<String> {
        let id = self.peek_ident()?;
        MD_NAMES.contains(&id.as_str()).then_some(id)
    }

    fn md_method(&mut self) -> Result<MdMethod, ParseError> {
        let name = self.ident()?;
        if !MD_NAMES.contains(&name.as_str()) {
            return Err(self.error(format!("unknown md method '{name}'")));
        }
        self.pos -= name.len();
        self.md_args(&name)
    }

    fn md_args(&mut self, name: &str) -> Result<MdMethod, ParseError> {
        self.ident()?;
        let arg = |p: &mut Self| -> Result<String, ParseError> {
            p.eat(',');
            p.ident()
        };
        let sp = |s: String| Spot::new(&s);
        let fd = |s: String| Field::new(&s);
        Ok(match name {
            "creatom" => MdMethod::Creatom(sp(arg(self)?)),
            "setspot" => MdMethod::Setspot(sp(arg(self)?), sp(arg(self)?)),
            "clrspot" => MdMethod::Clrspot(sp(arg(self)?)),
            "equaltst" => MdMethod::Equaltst(sp(arg(self)?), sp(arg(self)?)),
            "undeftst" => MdMethod::Undeftst(sp(arg(self)?)),
            "addfield" => MdMethod::Addfield(sp(arg(self)?), fd(arg(self)?)),
            "rmvfield" => MdMethod::Rmvfield(sp(arg(self)?), fd(arg(self)?)),
            "hasfield" => MdMethod::Hasfield(sp(arg(self)?), fd(arg(self)?)),
            "setfield" => MdMethod::Setfield(sp(arg(self)?), fd(arg(self)?), sp(arg(self)?)),
            "getfield" => MdMethod::Getfield(sp(arg(self)?), sp(arg(self)?), fd(arg(self)?)),
            _ => return Err(self.error(format!("unknown md method '{name}'"))),
        })
    }
}

const MD_NAMES: &[&str] = &[
    "creatom", "setspot", "clrspot", "equaltst", "undeftst", "addfield", "rmvfield", "hasfield",
    "setfield", "getfield",
];

enum PccOp {
    Act(Action),
    Fork(Term),
}
