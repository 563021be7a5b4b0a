//! Programs with absolute jumps and forks: parsing, thread extraction,
//! fork-sugar expansion, jump-chain elimination and behavioural comparison.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use crate::engine::Engine;
use crate::error::{EngineError, ParseError};
use crate::names::{free_spots, free_vars};
use crate::parse::parse_action;
use crate::term::{expand_nt_il, expand_nt_java, md_focus, Action, Spot, Term, Var, VAR_PREFIX};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Instruction {
    Basic(Action),
    PosTest(Action),
    NegTest(Action),
    Jump(usize),
    Fork(Spot, usize),
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Instruction::Basic(a) => write!(f, "{a}"),
            Instruction::PosTest(a) => write!(f, "+{a}"),
            Instruction::NegTest(a) => write!(f, "-{a}"),
            Instruction::Jump(l) => write!(f, "jmp {l}"),
            Instruction::Fork(s, l) => write!(f, "fork {s} {l}"),
        }
    }
}

/// `u_1; ...; u_n`, addressed from 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Program {
    pub instructions: Vec<Instruction>,
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for u in &self.instructions {
            writeln!(f, "{u}")?;
        }
        Ok(())
    }
}

impl Program {
    pub fn new(instructions: Vec<Instruction>) -> Self {
        Program { instructions }
    }

    pub fn len(&self) -> usize {
        self.instructions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instructions.is_empty()
    }

    /// Instruction at position `i`, counting from 1.
    pub fn at(&self, i: usize) -> Option<&Instruction> {
        if i == 0 {
            None
        } else {
            self.instructions.get(i - 1)
        }
    }

    pub fn parse(text: &str) -> Result<Program, ParseError> {
        parse_program(text)
    }
}

/// One instruction per line: `f.m`, `+f.m`, `-f.m`, `jmp L` or `fork s L`.
/// Blank lines and `#` comments are skipped.
pub fn parse_program(text: &str) -> Result<Program, ParseError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| ParseError { line: line_no, col: 1, message: msg };
        let target = |s: &str| s.trim().parse::<usize>().map_err(|_| err(format!("bad target '{}'", s.trim())));
        let words: Vec<&str> = line.split_whitespace().collect();
        let u = match words.as_slice() {
            ["jmp", l] => Instruction::Jump(target(l)?),
            ["fork", s, l] => {
                if s.contains('$') {
                    return Err(err(format!("reserved prefix in spot '{s}'")));
                }
                Instruction::Fork(Spot::new(s), target(l)?)
            }
            ["jmp", ..] | ["fork", ..] => return Err(err(format!("malformed instruction '{line}'"))),
            _ => {
                let (ctor, body): (fn(Action) -> Instruction, &str) = if let Some(b) = line.strip_prefix('+') {
                    (Instruction::PosTest, b)
                } else if let Some(b) = line.strip_prefix('-') {
                    (Instruction::NegTest, b)
                } else {
                    (Instruction::Basic, line)
                };
                let a = parse_action(body.trim()).map_err(|e| ParseError { line: line_no, col: e.col, message: e.message })?;
                if a == Action::Tau {
                    return Err(err("tau is not a basic instruction".into()));
                }
                ctor(a)
            }
        };
        out.push(u);
    }
    if out.is_empty() {
        return Err(ParseError { line: 1, col: 1, message: "empty program".into() });
    }
    Ok(Program::new(out))
}

/// Where a jump chain starting at `i` ends.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Chain {
    At(usize),
    OutOfRange,
    Cycle,
}

fn follow(p: &Program, i: usize) -> Chain {
    let mut seen = BTreeSet::new();
    let mut cur = i;
    loop {
        match p.at(cur) {
            None => return Chain::OutOfRange,
            Some(Instruction::Jump(l)) => {
                if !seen.insert(cur) {
                    return Chain::Cycle;
                }
                cur = *l;
            }
            Some(_) => return Chain::At(cur),
        }
    }
}

fn pos_var(i: usize) -> Var {
    Var::new(&format!("{VAR_PREFIX}{i}"))
}

struct Extractor<'a> {
    p: &'a Program,
    path: Vec<usize>,
    used: BTreeSet<usize>,
    closed: HashMap<usize, Term>,
}

impl Extractor<'_> {
    fn ext(&mut self, i: usize) -> Term {
        let j = match follow(self.p, i) {
            Chain::OutOfRange => return Term::Stop,
            Chain::Cycle => return Term::Dead,
            Chain::At(j) => j,
        };
        if self.path.contains(&j) {
            self.used.insert(j);
            return Term::Var(pos_var(j));
        }
        if let Some(t) = self.closed.get(&j) {
            return t.clone();
        }
        self.path.push(j);
        let body = match self.p.at(j).expect("in range") {
            Instruction::Basic(a) => Term::prefix(a.clone(), self.ext(j + 1)),
            Instruction::PosTest(a) => {
                let l = self.ext(j + 1);
                Term::pcc(l, a.clone(), self.ext(j + 2))
            }
            Instruction::NegTest(a) => {
                let l = self.ext(j + 2);
                Term::pcc(l, a.clone(), self.ext(j + 1))
            }
            Instruction::Fork(s, l) => {
                let forked = self.ext(*l);
                Term::NtJava(s.clone(), Arc::new(forked), Arc::new(self.ext(j + 1)))
            }
            Instruction::Jump(_) => unreachable!("chains are followed"),
        };
        self.path.pop();
        let t = if self.used.remove(&j) { Term::Fix(pos_var(j), Arc::new(body)) } else { body };
        if free_vars(&t).is_empty() {
            self.closed.insert(j, t.clone());
        }
        t
    }
}

/// The thread of position `i`, closed with one recursion binder per
/// position revisited on the current extraction path.
pub fn extract_at(p: &Program, i: usize) -> Term {
    Extractor { p, path: Vec::new(), used: BTreeSet::new(), closed: HashMap::new() }.ext(i)
}

/// `csi[<|1,P|>]`, with fork instructions left as Java-style fork sugar.
pub fn extract(p: &Program) -> Term {
    Term::Csi(vec![extract_at(p, 1)])
}

/// `|1,P|` for fork-free programs, where the singleton interleaving is
/// redundant; `extract(p)` otherwise.
pub fn extract_collapsed(p: &Program) -> Term {
    let t = extract_at(p, 1);
    if t.is_fork_free() {
        t
    } else {
        Term::Csi(vec![t])
    }
}

/// Redirects every jump to the end of its chain. Chains leaving the
/// program jump to `n+1`; jumps that never reach an instruction become
/// self-jumps. Fork targets are redirected likewise.
pub fn eliminate_jump_chains(p: &Program) -> Program {
    let n = p.len();
    let instructions = p
        .instructions
        .iter()
        .enumerate()
        .map(|(k, u)| match u {
            Instruction::Jump(_) => match follow(p, k + 1) {
                Chain::At(j) => Instruction::Jump(j),
                Chain::OutOfRange => Instruction::Jump(n + 1),
                Chain::Cycle => Instruction::Jump(k + 1),
            },
            Instruction::Fork(s, l) => match follow(p, *l) {
                Chain::At(j) => Instruction::Fork(s.clone(), j),
                Chain::OutOfRange => Instruction::Fork(s.clone(), n + 1),
                Chain::Cycle => Instruction::Fork(s.clone(), *l),
            },
            other => other.clone(),
        })
        .collect();
    Program::new(instructions)
}

/// Expands all fork sugar, checking the side conditions.
pub fn desugar_forks(t: &Term) -> Result<Term, EngineError> {
    desugar_forks_with(t, false)
}

/// As `desugar_forks`; with `poll_this` the Java-style gate tests the private spot.
pub fn desugar_forks_with(t: &Term, poll_this: bool) -> Result<Term, EngineError> {
    if !has_sugar(t) {
        return Ok(t.clone());
    }
    let d = |x: &Arc<Term>| desugar_forks_with(x, poll_this).map(Arc::new);
    Ok(match t {
        Term::Stop | Term::Dead | Term::Var(_) => t.clone(),
        Term::Pcc(l, a, r) => {
            let l2 = d(l)?;
            let r2 = if Arc::ptr_eq(l, r) { l2.clone() } else { d(r)? };
            Term::Pcc(l2, a.clone(), r2)
        }
        Term::ForkPcc(l, z, r) => {
            let l2 = d(l)?;
            let z2 = d(z)?;
            let r2 = if Arc::ptr_eq(l, r) { l2.clone() } else { d(r)? };
            Term::ForkPcc(l2, z2, r2)
        }
        Term::Csi(ts) => Term::Csi(ts.iter().map(|t| desugar_forks_with(t, poll_this)).collect::<Result<_, _>>()?),
        Term::S2d(b) => Term::S2d(d(b)?),
        Term::Use(b, f, h) => Term::Use(d(b)?, f.clone(), h.clone()),
        Term::Nu(f, s, b) => Term::Nu(f.clone(), s.clone(), d(b)?),
        Term::Fix(x, b) => Term::Fix(x.clone(), d(b)?),
        Term::Proj(n, b) => Term::Proj(*n, d(b)?),
        Term::NtIl(s, s2, p, q) => {
            let (p, q) = (d(p)?, d(q)?);
            if free_spots(&q, &md_focus()).contains(s) {
                return Err(EngineError::SideConditionViolated(s.clone()));
            }
            expand_nt_il(s, s2, &p, &q)
        }
        Term::NtJava(s, p, q) => {
            let (p, q) = (d(p)?, d(q)?);
            let this = Spot::new(crate::term::THIS_SPOT);
            if free_spots(&q, &md_focus()).contains(&this) {
                return Err(EngineError::SideConditionViolated(this));
            }
            expand_nt_java(s, &p, &q, poll_this)
        }
    })
}

fn has_sugar(t: &Term) -> bool {
    match t {
        Term::Stop | Term::Dead | Term::Var(_) => false,
        Term::NtIl(..) | Term::NtJava(..) => true,
        Term::Pcc(l, _, r) => has_sugar(l) || (!Arc::ptr_eq(l, r) && has_sugar(r)),
        Term::ForkPcc(l, z, r) => has_sugar(l) || has_sugar(z) || has_sugar(r),
        Term::Csi(ts) => ts.iter().any(has_sugar),
        Term::S2d(b) | Term::Use(b, _, _) | Term::Nu(_, _, b) | Term::Fix(_, b) | Term::Proj(_, b) => has_sugar(b),
    }
}

/// Extracted threads of `p` and `q` agree up to depth `n`.
pub fn beh_eq_up_to(n: u32, p: &Program, q: &Program, engine: &mut Engine) -> Result<bool, EngineError> {
    crate::projective::eq_up_to_with(engine, n, &extract(p), &extract(q))
}
