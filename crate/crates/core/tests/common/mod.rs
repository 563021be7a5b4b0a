//! Generators and reference implementations shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

use tcalc::pgldf::{Instruction, Program};
use tcalc::spec::threshold_service;
use tcalc::term::{Field, MdMethod, Method, Spot};
use tcalc::{Action, Basic, Focus, ServiceHandle, Term, Var};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn opaque(f: &str, m: &str) -> Action {
    Action::opaque(f, m)
}

/// The service used by generated `use` terms on focus `f`: `f.a` answers
/// F once and T afterwards; anything else sent to it is refused.
pub fn counter() -> ServiceHandle {
    threshold_service(Method::opaque("a"), 0, "H")
}

/// Knobs for the random term generator.
#[derive(Clone, Copy)]
pub struct Shape {
    pub depth: u32,
    pub csi: bool,
    pub s2d: bool,
    pub use_: bool,
    pub nu: bool,
}

impl Shape {
    pub const TC: Shape = Shape { depth: 5, csi: true, s2d: true, use_: true, nu: true };
}

/// Random closed fork-free term over `S`, `D`, `tau`, postconditional
/// composition and, as enabled, the operators of the calculus.
pub fn term(r: &mut impl Rng, shape: Shape) -> Term {
    gen(r, shape, shape.depth, &mut Vec::new(), None)
}

/// Random body with free variable `x`; `x` is not guaranteed to be guarded.
pub fn body(r: &mut impl Rng, shape: Shape, x: &str) -> Term {
    gen(r, shape, shape.depth, &mut Vec::new(), Some(x))
}

fn action(r: &mut impl Rng, spots: &[Spot]) -> Action {
    let k = r.gen_range(0..if spots.is_empty() { 4 } else { 7 });
    let v = Field::new("v");
    match k {
        0 | 1 => opaque("f", "a"),
        2 => opaque("f", "b"),
        3 => opaque("g", "c"),
        4 => Action::md(MdMethod::Hasfield(spots.choose(r).unwrap().clone(), v)),
        5 => Action::md(MdMethod::Addfield(spots.choose(r).unwrap().clone(), v)),
        _ => Action::md(MdMethod::Creatom(spots.choose(r).unwrap().clone())),
    }
}

fn gen(r: &mut impl Rng, shape: Shape, d: u32, spots: &mut Vec<Spot>, x: Option<&str>) -> Term {
    let leaf = |r: &mut dyn rand::RngCore| match (x, r.gen_range(0..5)) {
        (Some(x), 0 | 1) => Term::var(x),
        (_, 0..=2) => Term::Stop,
        _ => Term::Dead,
    };
    if d == 0 {
        return leaf(r);
    }
    loop {
        match r.gen_range(0..10) {
            0 => return leaf(r),
            1 => return Term::tau(gen(r, shape, d - 1, spots, x)),
            2 | 3 => {
                let a = action(r, spots);
                return Term::prefix(a, gen(r, shape, d - 1, spots, x));
            }
            4 | 5 => {
                let a = action(r, spots);
                let p = gen(r, shape, d - 1, spots, x);
                let q = gen(r, shape, d - 1, spots, x);
                return Term::pcc(p, a, q);
            }
            6 if shape.csi => {
                let k = r.gen_range(1..=3);
                let ts = (0..k).map(|_| gen(r, shape, d - 1, spots, x)).collect();
                return Term::Csi(ts);
            }
            7 if shape.s2d => return Term::s2d(gen(r, shape, d - 1, spots, x)),
            8 if shape.use_ => {
                let p = gen(r, shape, d - 1, spots, x);
                return Term::use_with(p, Focus::new("f"), counter());
            }
            9 if shape.nu => {
                let s = Spot::new(&format!("r{}", spots.len()));
                spots.push(s.clone());
                let p = gen(r, shape, d - 1, spots, x);
                spots.pop();
                return Term::nu("md", s.as_str(), p);
            }
            _ => {}
        }
    }
}

/// Renames variables and spots throughout, binders included.
pub fn rename(t: &Term, vars: &BTreeMap<Var, Var>, spots: &BTreeMap<Spot, Spot>) -> Term {
    let v = |x: &Var| vars.get(x).cloned().unwrap_or_else(|| x.clone());
    let s = |x: &Spot| spots.get(x).cloned().unwrap_or_else(|| x.clone());
    let go = |u: &Arc<Term>| Arc::new(rename(u, vars, spots));
    match t {
        Term::Stop | Term::Dead => t.clone(),
        Term::Var(x) => Term::Var(v(x)),
        Term::Pcc(p, a, q) => {
            let a = match a {
                Action::Call(f, m) => Action::Call(f.clone(), m.map_spots(s)),
                Action::Tau => Action::Tau,
            };
            let p2 = go(p);
            let q2 = if Arc::ptr_eq(p, q) { p2.clone() } else { go(q) };
            Term::Pcc(p2, a, q2)
        }
        Term::Csi(ts) => Term::Csi(ts.iter().map(|u| rename(u, vars, spots)).collect()),
        Term::S2d(p) => Term::S2d(go(p)),
        Term::Use(p, f, h) => Term::Use(go(p), f.clone(), h.clone()),
        Term::Nu(f, x, p) => Term::Nu(f.clone(), s(x), go(p)),
        Term::Fix(x, p) => Term::Fix(v(x), go(p)),
        Term::Proj(n, p) => Term::Proj(*n, go(p)),
        Term::ForkPcc(p, z, q) => Term::ForkPcc(go(p), go(z), go(q)),
        Term::NtIl(a, b, p, q) => Term::NtIl(s(a), s(b), go(p), go(q)),
        Term::NtJava(a, p, q) => Term::NtJava(s(a), go(p), go(q)),
    }
}

/// Bound spot names introduced by `gen`.
pub fn generated_spots(t: &Term, out: &mut BTreeSet<Spot>) {
    match t {
        Term::Nu(_, s, p) => {
            out.insert(s.clone());
            generated_spots(p, out);
        }
        Term::Pcc(p, _, q) => {
            generated_spots(p, out);
            if !Arc::ptr_eq(p, q) {
                generated_spots(q, out);
            }
        }
        Term::Csi(ts) => ts.iter().for_each(|u| generated_spots(u, out)),
        Term::S2d(p) | Term::Use(p, _, _) | Term::Fix(_, p) | Term::Proj(_, p) => generated_spots(p, out),
        _ => {}
    }
}

/// Projection on basic terms by the defining equations, visiting a
/// shared continuation once.
pub fn project(n: u32, b: &Basic) -> Basic {
    if n == 0 {
        return Basic::Dead;
    }
    let pair = |p: &Arc<Basic>, q: &Arc<Basic>| {
        let p2 = Arc::new(project(n - 1, p));
        let q2 = if Arc::ptr_eq(p, q) { p2.clone() } else { Arc::new(project(n - 1, q)) };
        (p2, q2)
    };
    match b {
        Basic::Stop | Basic::Dead => b.clone(),
        Basic::Tau(p) => Basic::Tau(Arc::new(project(n - 1, p))),
        Basic::Pcc(p, f, m, q) => {
            let (p2, q2) = pair(p, q);
            Basic::Pcc(p2, f.clone(), m.clone(), q2)
        }
        Basic::Restricted(f, spots, p, m, q) => {
            let (p2, q2) = pair(p, q);
            Basic::Restricted(f.clone(), spots.clone(), p2, m.clone(), q2)
        }
        Basic::Fork(p, z, q) => {
            let (p2, q2) = pair(p, q);
            Basic::Fork(p2, Arc::new(project(n - 1, z)), q2)
        }
    }
}

/// All fork-free programs of length `1..=max_len` over two actions, with
/// jump targets from 0 to one past the end.
pub fn programs(max_len: usize) -> Vec<Program> {
    let f = opaque("f", "a");
    let g = opaque("g", "b");
    let mut out = Vec::new();
    for len in 1..=max_len {
        let mut alphabet = Vec::new();
        for a in [&f, &g] {
            alphabet.push(Instruction::Basic(a.clone()));
            alphabet.push(Instruction::PosTest(a.clone()));
            alphabet.push(Instruction::NegTest(a.clone()));
        }
        for l in 0..=len + 1 {
            alphabet.push(Instruction::Jump(l));
        }
        let mut idx = vec![0usize; len];
        loop {
            out.push(Program::new(idx.iter().map(|&i| alphabet[i].clone()).collect()));
            let mut k = 0;
            while k < len {
                idx[k] += 1;
                if idx[k] < alphabet.len() {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
            if k == len {
                break;
            }
        }
    }
    out
}

/// `pi_n` of the thread extracted from position `i`, computed directly
/// from the instruction sequence.
pub fn program_semantics(p: &Program, i: usize, n: u32) -> Basic {
    let mut memo = BTreeMap::new();
    sem(p, i, n, &mut memo)
}

fn sem(p: &Program, i: usize, n: u32, memo: &mut BTreeMap<(usize, u32), Arc<Basic>>) -> Basic {
    if n == 0 {
        return Basic::Dead;
    }
    let mut j = i;
    let mut seen = BTreeSet::new();
    while let Some(Instruction::Jump(l)) = p.at(j) {
        if !seen.insert(j) {
            return Basic::Dead;
        }
        j = *l;
    }
    let at = |k: usize, memo: &mut BTreeMap<(usize, u32), Arc<Basic>>| -> Arc<Basic> {
        if let Some(b) = memo.get(&(k, n - 1)) {
            return b.clone();
        }
        let b = Arc::new(sem(p, k, n - 1, memo));
        memo.insert((k, n - 1), b.clone());
        b
    };
    let split = |a: &Action| match a {
        Action::Call(f, m) => (f.clone(), m.clone()),
        Action::Tau => unreachable!("programs do not contain tau"),
    };
    match p.at(j) {
        None => Basic::Stop,
        Some(Instruction::Basic(a)) => {
            let (f, m) = split(a);
            let next = at(j + 1, memo);
            Basic::Pcc(next.clone(), f, m, next)
        }
        Some(Instruction::PosTest(a)) => {
            let (f, m) = split(a);
            Basic::Pcc(at(j + 1, memo), f, m, at(j + 2, memo))
        }
        Some(Instruction::NegTest(a)) => {
            let (f, m) = split(a);
            Basic::Pcc(at(j + 2, memo), f, m, at(j + 1, memo))
        }
        Some(Instruction::Jump(_)) => unreachable!(),
        Some(Instruction::Fork(..)) => panic!("fork-free programs only"),
    }
}

/// Applies a random local change, for pairs that may or may not be equal.
pub fn mutate(r: &mut impl Rng, t: &Term) -> Term {
    match t {
        Term::Pcc(p, a, q) if r.gen_bool(0.7) => {
            if r.gen_bool(0.5) {
                Term::Pcc(Arc::new(mutate(r, p)), a.clone(), q.clone())
            } else {
                Term::Pcc(p.clone(), a.clone(), Arc::new(mutate(r, q)))
            }
        }
        Term::Csi(ts) if !ts.is_empty() && r.gen_bool(0.7) => {
            let mut ts = ts.clone();
            let k = r.gen_range(0..ts.len());
            ts[k] = mutate(r, &ts[k]);
            Term::Csi(ts)
        }
        Term::S2d(p) if r.gen_bool(0.7) => Term::S2d(Arc::new(mutate(r, p))),
        Term::Use(p, f, h) if r.gen_bool(0.7) => Term::Use(Arc::new(mutate(r, p)), f.clone(), h.clone()),
        Term::Nu(f, s, p) if r.gen_bool(0.7) => Term::Nu(f.clone(), s.clone(), Arc::new(mutate(r, p))),
        _ => match r.gen_range(0..4) {
            0 => Term::Stop,
            1 => Term::Dead,
            2 => Term::tau(t.clone()),
            _ => Term::csi(vec![t.clone()]),
        },
    }
}

