//! Truncated projective sequences, lifted operations, the ultrametric,
//! guarded fixed points and the approximation order.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use crate::basic::{basic_eq, merged_free, Basic};
use crate::engine::Engine;
use crate::error::EngineError;
use crate::names::{expose_guard, subst_var, Fresh};
use crate::term::{Action, Focus, ServiceRef, Spot, Term, Var};

pub use crate::names::guarded_term;

pub const DEFAULT_DEPTH: u32 = 32;

/// Entries `p_0 .. p_N` of a projective sequence.
#[derive(Clone, Debug)]
pub struct ProjSeq {
    entries: Vec<Basic>,
}

impl ProjSeq {
    pub fn depth(&self) -> u32 {
        (self.entries.len() - 1) as u32
    }

    pub fn entries(&self) -> &[Basic] {
        &self.entries
    }

    pub fn get(&self, n: u32) -> &Basic {
        &self.entries[n as usize]
    }

    /// `p_n = pi_n(p_{n+1})` for all `n < N`.
    pub fn is_coherent(&self, engine: &mut Engine) -> Result<bool, EngineError> {
        if self.entries[0] != Basic::Dead {
            return Ok(false);
        }
        for n in 0..self.entries.len() - 1 {
            let down = engine.proj_normalize(n as u32, &self.entries[n + 1].to_term())?;
            if !basic_eq(&down, &self.entries[n]) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Entrywise equality.
    pub fn same(&self, other: &ProjSeq) -> bool {
        self.entries.len() == other.entries.len()
            && self.entries.iter().zip(&other.entries).all(|(a, b)| basic_eq(a, b))
    }

    /// Entrywise approximation.
    pub fn approx_leq(&self, other: &ProjSeq) -> bool {
        self.entries.len() == other.entries.len()
            && self.entries.iter().zip(&other.entries).all(|(a, b)| approx_leq(a, b))
    }
}

impl fmt::Display for ProjSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (n, p) in self.entries.iter().enumerate() {
            writeln!(f, "{n}: {}", p.canon())?;
        }
        Ok(())
    }
}

/// `2^-k`, or a distance too small to observe at the truncation depth.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dyadic {
    Pow(u32),
    BelowResolution,
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Dyadic::BelowResolution, Dyadic::BelowResolution) => Ordering::Equal,
            (Dyadic::BelowResolution, _) => Ordering::Less,
            (_, Dyadic::BelowResolution) => Ordering::Greater,
            (Dyadic::Pow(a), Dyadic::Pow(b)) => b.cmp(a),
        }
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Dyadic {
    /// `d / 2`.
    pub fn half(self) -> Dyadic {
        match self {
            Dyadic::Pow(k) => Dyadic::Pow(k + 1),
            Dyadic::BelowResolution => Dyadic::BelowResolution,
        }
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Dyadic::Pow(0) => write!(f, "1"),
            Dyadic::Pow(k) => write!(f, "2^-{k}"),
            Dyadic::BelowResolution => write!(f, "0 (below resolution)"),
        }
    }
}

/// `<pi_n(t)>` for `n = 0..=depth`.
pub fn embed(engine: &mut Engine, t: &Term, depth: u32) -> Result<ProjSeq, EngineError> {
    let entries = (0..=depth).map(|n| engine.proj_normalize(n, t)).collect::<Result<_, _>>()?;
    Ok(ProjSeq { entries })
}

/// An operator of the calculus applied to projective sequences.
#[derive(Clone, Debug)]
pub enum Op {
    Pcc(Action),
    Fork,
    Csi,
    S2d,
    Use(Focus, ServiceRef),
    Nu(Focus, Spot),
}

impl Op {
    fn arity(&self) -> Option<usize> {
        match self {
            Op::Pcc(_) => Some(2),
            Op::Fork => Some(3),
            Op::Csi => None,
            _ => Some(1),
        }
    }

    fn apply(&self, args: &[Term]) -> Term {
        let a = |i: usize| Arc::new(args[i].clone());
        match self {
            Op::Pcc(act) => Term::Pcc(a(0), act.clone(), a(1)),
            Op::Fork => Term::ForkPcc(a(0), a(1), a(2)),
            Op::Csi => Term::Csi(args.to_vec()),
            Op::S2d => Term::S2d(a(0)),
            Op::Use(f, h) => Term::Use(a(0), f.clone(), h.clone()),
            Op::Nu(f, s) => Term::Nu(f.clone(), s.clone(), a(0)),
        }
    }
}

/// Entry `n` is `pi_n(op(args at n))`.
pub fn lift(engine: &mut Engine, op: &Op, args: &[&ProjSeq]) -> Result<ProjSeq, EngineError> {
    if let Some(k) = op.arity() {
        assert_eq!(args.len(), k, "wrong number of arguments for {op:?}");
    }
    let depth = args.first().map_or(0, |p| p.depth());
    assert!(args.iter().all(|p| p.depth() == depth), "arguments differ in depth");
    let mut entries = Vec::with_capacity(depth as usize + 1);
    for n in 0..=depth {
        let at: Vec<Term> = args.iter().map(|p| p.get(n).to_term()).collect();
        entries.push(engine.proj_normalize(n, &op.apply(&at))?);
    }
    let out = ProjSeq { entries };
    debug_assert!(out.is_coherent(engine).unwrap_or(false));
    Ok(out)
}

/// `2^-k` for the least depth `k` where the sequences differ.
pub fn distance(p: &ProjSeq, q: &ProjSeq) -> Dyadic {
    assert_eq!(p.depth(), q.depth(), "sequences differ in depth");
    p.entries
        .iter()
        .zip(&q.entries)
        .position(|(a, b)| !basic_eq(a, b))
        .map_or(Dyadic::BelowResolution, |k| Dyadic::Pow(k as u32))
}

/// `x` is guarded in `t`, possibly after unfolding inner recursion.
pub fn guarded_body(engine: &mut Engine, x: &Var, t: &Term) -> bool {
    let bound = engine.config().unfold_bound;
    expose_guard(x, t, bound, engine.fresh()).is_some()
}

/// `pi_n(phi^k(D))` for `k = 0..=upto`, each computed from the previous one.
fn iterates(engine: &mut Engine, x: &Var, t: &Term, n: u32, upto: u32) -> Result<Vec<Basic>, EngineError> {
    let mut fresh = Fresh::new();
    let mut cur = Basic::Dead;
    let mut out = vec![cur.clone()];
    for _ in 0..upto {
        let next = subst_var(t, x, &cur.to_term(), &mut fresh);
        cur = engine.proj_normalize(n, &next)?;
        out.push(cur.clone());
    }
    Ok(out)
}

/// `<pi_n(phi^n(D))>` for a guarded body, all `D` otherwise.
pub fn fix_approx(engine: &mut Engine, x: &Var, t: &Term, depth: u32) -> Result<ProjSeq, EngineError> {
    if !guarded_body(engine, x, t) {
        return Ok(ProjSeq { entries: vec![Basic::Dead; depth as usize + 1] });
    }
    let mut entries = Vec::with_capacity(depth as usize + 1);
    for n in 0..=depth {
        entries.push(iterates(engine, x, t, n, n)?.pop().expect("non-empty"));
    }
    Ok(ProjSeq { entries })
}

/// The least `k` with `pi_n(phi^k(D)) = pi_n(phi^(k+1)(D))`.
pub fn stabilization_index(engine: &mut Engine, x: &Var, t: &Term, n: u32) -> Result<u32, EngineError> {
    let its = iterates(engine, x, t, n, n + 1)?;
    its.windows(2)
        .position(|w| basic_eq(&w[0], &w[1]))
        .map(|k| k as u32)
        .ok_or(EngineError::NotStabilized(n))
}

pub fn eq_up_to_with(engine: &mut Engine, n: u32, p: &Term, q: &Term) -> Result<bool, EngineError> {
    let a = engine.proj_normalize(n, p)?;
    let b = engine.proj_normalize(n, q)?;
    Ok(basic_eq(&a, &b))
}

/// `pi_n(p) = pi_n(q)`.
pub fn eq_up_to(n: u32, p: &Term, q: &Term) -> Result<bool, EngineError> {
    eq_up_to_with(&mut Engine::default(), n, p, q)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Refutation {
    NotEqualAt(u32),
    UndistinguishedUpTo(u32),
}

pub fn aip_refute_with(engine: &mut Engine, p: &Term, q: &Term, max_n: u32) -> Result<Refutation, EngineError> {
    for n in 0..=max_n {
        if !eq_up_to_with(engine, n, p, q)? {
            return Ok(Refutation::NotEqualAt(n));
        }
    }
    Ok(Refutation::UndistinguishedUpTo(max_n))
}

/// The least depth up to `max_n` at which `p` and `q` differ.
pub fn aip_refute(p: &Term, q: &Term, max_n: u32) -> Result<Refutation, EngineError> {
    aip_refute_with(&mut Engine::default(), p, q, max_n)
}

/// The approximation order on basic terms, with `D` as least element.
pub fn approx_leq(p: &Basic, q: &Basic) -> bool {
    let free = merged_free(p, q);
    leq(&p.canon_avoiding(&free), &q.canon_avoiding(&free))
}

fn leq(p: &Basic, q: &Basic) -> bool {
    match (p, q) {
        (Basic::Dead, _) => true,
        (Basic::Stop, Basic::Stop) => true,
        (Basic::Tau(a), Basic::Tau(b)) => leq(a, b),
        (Basic::Pcc(a, f, m, b), Basic::Pcc(c, g, n, d)) => f == g && m == n && leq(a, c) && leq(b, d),
        (Basic::Restricted(f, ss, a, m, b), Basic::Restricted(g, tt, c, n, d)) => {
            f == g && ss == tt && m == n && leq(a, c) && leq(b, d)
        }
        (Basic::Fork(a, z, b), Basic::Fork(c, w, d)) => leq(a, c) && leq(z, w) && leq(b, d),
        _ => false,
    }
}
